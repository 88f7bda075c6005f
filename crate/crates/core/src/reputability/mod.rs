//! News-source reputability: domain labels, annotation files and
//! per-community reports.

mod domain;
mod kappa;
mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use domain::{extract_domain, registrable_domain};
pub use kappa::fleiss_kappa;
pub use report::{
    aggregate_reputability, nr_share_report, parse_timestamp, read_posts_jsonl, timeseries_report,
    write_community_reports_csv, write_nr_share_csv, write_timeseries_csv, ClassCounts,
    CommunityReport, DomainResolver, NrShareReport, NrShareRow, PostKind, PostRow, ReportOptions,
    ReportScope, TimeBucket, TimeSeries,
};

/// Lower bound of the quasi-reputable band.
pub const QR_BAND_LOW: f64 = 55.0;
/// Upper bound of the quasi-reputable band.
pub const QR_BAND_HIGH: f64 = 65.0;
/// Occurrence threshold for the verified-user network.
pub const MIN_OCCURRENCE_VERIFIED: usize = 20;
/// Occurrence threshold for the directed validated network.
pub const MIN_OCCURRENCE_DIRECTED: usize = 100;

/// Domain tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReputabilityLabel {
    /// Reputable news source.
    R,
    /// Quasi-reputable news source, rendered `~R`.
    #[serde(rename = "~R")]
    QR,
    /// Not reputable news source.
    NR,
    /// Social network.
    S,
    /// Fundraiser or petition site.
    F,
    /// Marketplace.
    M,
    /// Official journal of a political party.
    P,
    /// Institutional site.
    IS,
    /// Online streaming platform.
    ST,
    /// Search engine.
    SE,
    /// Unclassified.
    UNC,
}

impl ReputabilityLabel {
    pub const ALL: [ReputabilityLabel; 11] = [
        Self::R,
        Self::QR,
        Self::NR,
        Self::S,
        Self::F,
        Self::M,
        Self::P,
        Self::IS,
        Self::ST,
        Self::SE,
        Self::UNC,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::R => "R",
            Self::QR => "~R",
            Self::NR => "NR",
            Self::S => "S",
            Self::F => "F",
            Self::M => "M",
            Self::P => "P",
            Self::IS => "IS",
            Self::ST => "ST",
            Self::SE => "SE",
            Self::UNC => "UNC",
        }
    }

    /// Report column of the label.
    pub fn class(self) -> LabelClass {
        match self {
            Self::R => LabelClass::R,
            Self::QR => LabelClass::QR,
            Self::NR => LabelClass::NR,
            _ => LabelClass::Others,
        }
    }
}

impl fmt::Display for ReputabilityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReputabilityLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "~R" || s.eq_ignore_ascii_case("qr") {
            return Ok(Self::QR);
        }
        Self::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown reputability label {s:?}")))
    }
}

/// The four report columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LabelClass {
    R,
    #[serde(rename = "QR")]
    QR,
    NR,
    Others,
}

impl LabelClass {
    pub const ALL: [LabelClass; 4] = [Self::R, Self::QR, Self::NR, Self::Others];
}

/// Maps a credibility score to a news label: below 55 is NR, 55 to 65
/// inclusive is quasi-reputable, above 65 is R.
pub fn score_to_label(score: f64) -> Result<ReputabilityLabel> {
    if !(0.0..=100.0).contains(&score) {
        return Err(Error::ScoreOutOfRange(score));
    }
    Ok(if score < QR_BAND_LOW {
        ReputabilityLabel::NR
    } else if score <= QR_BAND_HIGH {
        ReputabilityLabel::QR
    } else {
        ReputabilityLabel::R
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationSource {
    NewsguardFile,
    Manual,
}

impl FromStr for AnnotationSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "newsguard_file" | "newsguard" => Ok(Self::NewsguardFile),
            "manual" | "" => Ok(Self::Manual),
            other => Err(Error::InvalidInput(format!(
                "unknown annotation source {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainAnnotation {
    pub domain: String,
    pub label: ReputabilityLabel,
    pub score: Option<f64>,
    pub source: AnnotationSource,
}

impl DomainAnnotation {
    /// Builds an annotation from a score, a label or both; when both are
    /// given the label must agree with the score.
    pub fn new(
        domain: &str,
        score: Option<f64>,
        label: Option<ReputabilityLabel>,
        source: AnnotationSource,
    ) -> Result<Self> {
        let domain = domain.trim().to_ascii_lowercase();
        if domain.is_empty() {
            return Err(Error::InvalidInput("annotation with empty domain".into()));
        }
        let label = match (score, label) {
            (Some(s), Some(l)) => {
                let from_score = score_to_label(s)?;
                if from_score != l {
                    return Err(Error::InvalidInput(format!(
                        "{domain}: label {l} disagrees with score {s} ({from_score})"
                    )));
                }
                l
            }
            (Some(s), None) => score_to_label(s)?,
            (None, Some(l)) => l,
            (None, None) => {
                return Err(Error::InvalidInput(format!(
                    "{domain}: annotation needs a score or a label"
                )))
            }
        };
        Ok(Self {
            domain,
            label,
            score,
            source,
        })
    }
}

#[derive(Debug, Deserialize)]
struct AnnotationRecord {
    domain: String,
    #[serde(default)]
    score: Option<String>,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    source: Option<String>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|v| v.trim().to_string()).filter(|v| !v.is_empty())
}

/// Reads the `domain,score,label,source` annotation CSV. A domain may appear
/// once per source; when it appears for both sources the NewsGuard-style
/// file entry wins.
pub fn read_annotations<R: Read>(reader: R) -> Result<BTreeMap<String, DomainAnnotation>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out: BTreeMap<String, DomainAnnotation> = BTreeMap::new();
    for rec in rdr.deserialize::<AnnotationRecord>() {
        let rec = rec?;
        let score = non_empty(rec.score)
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("{}: bad score {s:?}", rec.domain)))
            })
            .transpose()?;
        let label = non_empty(rec.label).map(|l| l.parse()).transpose()?;
        let source = non_empty(rec.source)
            .map(|s| s.parse())
            .transpose()?
            .unwrap_or(if score.is_some() {
                AnnotationSource::NewsguardFile
            } else {
                AnnotationSource::Manual
            });
        let ann = DomainAnnotation::new(&rec.domain, score, label, source)?;
        match out.get(&ann.domain) {
            Some(prev) if prev.source == ann.source => {
                return Err(Error::InvalidInput(format!(
                    "{}: annotated twice by the same source",
                    ann.domain
                )))
            }
            Some(prev) if prev.source == AnnotationSource::NewsguardFile => {}
            _ => {
                out.insert(ann.domain.clone(), ann);
            }
        }
    }
    Ok(out)
}

/// Writes annotations back in the CSV layout accepted by
/// [`read_annotations`].
pub fn write_annotations<W: std::io::Write>(
    writer: W,
    annotations: &BTreeMap<String, DomainAnnotation>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["domain", "score", "label", "source"])?;
    for a in annotations.values() {
        let source = match a.source {
            AnnotationSource::NewsguardFile => "newsguard_file",
            AnnotationSource::Manual => "manual",
        };
        w.write_record([
            a.domain.as_str(),
            &a.score.map(|s| s.to_string()).unwrap_or_default(),
            a.label.as_str(),
            source,
        ])?;
    }
    w.flush()?;
    Ok(())
}
