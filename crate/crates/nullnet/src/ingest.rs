//! Tweet ingestion: parsing, validation, filtering and de-duplication.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::config::Filters;
use crate::error::{PipelineError, Result};

/// One tweet. A retweet is authored by the retweeting user and points at
/// the original through `retweet_of`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub post_id: String,
    pub author_id: String,
    #[serde(default)]
    pub author_verified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweet_of: Option<String>,
    /// UTC seconds.
    pub timestamp: i64,
    #[serde(default)]
    pub urls: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl TweetRecord {
    fn check(&self) -> std::result::Result<(), &'static str> {
        if self.post_id.trim().is_empty() {
            return Err("empty post_id");
        }
        if self.author_id.trim().is_empty() {
            return Err("empty author_id");
        }
        if self.retweet_of.as_deref() == Some(self.post_id.as_str()) {
            return Err("retweet_of references the record itself");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines: usize,
    pub malformed: usize,
    pub duplicates: usize,
    pub filtered_language: usize,
    pub filtered_date: usize,
    pub filtered_keyword: usize,
    pub records: usize,
    /// Records per UTC day, from the first to the last day seen.
    pub per_day: BTreeMap<String, usize>,
    /// Days inside the covered span without any record.
    pub gap_days: Vec<String>,
}

fn parse_bound(s: &str) -> Result<i64> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d
            .and_hms_opt(0, 0, 0)
            .expect("midnight")
            .and_utc()
            .timestamp());
    }
    DateTime::parse_from_rfc3339(s)
        .map(|d| d.with_timezone(&Utc).timestamp())
        .map_err(|_| PipelineError::Config(format!("unparsable date bound {s:?}")))
}

fn day_of(ts: i64) -> Option<NaiveDate> {
    DateTime::<Utc>::from_timestamp(ts, 0).map(|d| d.date_naive())
}

/// Reads JSONL tweet files. Malformed lines are skipped and counted;
/// duplicate post ids keep their first record. Fails when the malformed
/// fraction exceeds the configured limit.
pub fn ingest(
    paths: &[impl AsRef<Path>],
    filters: &Filters,
) -> Result<(Vec<TweetRecord>, IngestStats)> {
    let from = filters.date_from.as_deref().map(parse_bound).transpose()?;
    let to = filters.date_to.as_deref().map(parse_bound).transpose()?;
    let keyword = filters.keyword.as_ref().map(|k| k.to_lowercase());
    let mut stats = IngestStats::default();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| PipelineError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            stats.lines += 1;
            let rec: TweetRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    log::debug!("{}: skipping line {}: {e}", path.display(), stats.lines);
                    stats.malformed += 1;
                    continue;
                }
            };
            if let Err(why) = rec.check() {
                log::debug!("{}: skipping {}: {why}", path.display(), rec.post_id);
                stats.malformed += 1;
                continue;
            }
            if let Some(lang) = &filters.language {
                if rec.lang.as_deref() != Some(lang.as_str()) {
                    stats.filtered_language += 1;
                    continue;
                }
            }
            if from.is_some_and(|f| rec.timestamp < f) || to.is_some_and(|t| rec.timestamp >= t) {
                stats.filtered_date += 1;
                continue;
            }
            if let Some(k) = &keyword {
                if !rec
                    .text
                    .as_deref()
                    .is_some_and(|t| t.to_lowercase().contains(k))
                {
                    stats.filtered_keyword += 1;
                    continue;
                }
            }
            if !seen.insert(rec.post_id.clone()) {
                stats.duplicates += 1;
                continue;
            }
            out.push(rec);
        }
    }
    if stats.lines > 0 {
        let frac = stats.malformed as f64 / stats.lines as f64;
        if frac > filters.max_malformed_fraction {
            return Err(PipelineError::Validation(format!(
                "{} of {} lines malformed ({:.1}%), above the {:.1}% limit",
                stats.malformed,
                stats.lines,
                100.0 * frac,
                100.0 * filters.max_malformed_fraction
            )));
        }
    }
    if out.is_empty() {
        log::warn!("no records left after filtering");
    }
    stats.records = out.len();
    coverage(&out, &mut stats);
    Ok((out, stats))
}

fn coverage(records: &[TweetRecord], stats: &mut IngestStats) {
    let mut per_day: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    for r in records {
        if let Some(d) = day_of(r.timestamp) {
            *per_day.entry(d).or_default() += 1;
        }
    }
    let (Some(&first), Some(&last)) = (per_day.keys().next(), per_day.keys().next_back()) else {
        return;
    };
    let mut d = first;
    while d <= last {
        let n = per_day.get(&d).copied().unwrap_or(0);
        if n == 0 {
            stats.gap_days.push(d.to_string());
        }
        stats.per_day.insert(d.to_string(), n);
        d = d.succ_opt().expect("date in range");
    }
}

/// Writes records as JSONL, one per line, in the given order.
pub fn write_records(path: &Path, records: &[TweetRecord]) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    std::fs::write(path, buf).map_err(|e| PipelineError::io(path, e))
}

/// Reads a JSONL file written by [`write_records`]. Every line must parse.
pub fn read_records(path: &Path) -> Result<Vec<TweetRecord>> {
    let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            PipelineError::Validation(format!("{} line {}: {e}", path.display(), i + 1))
        })?);
    }
    Ok(out)
}
