//! Per-community reputability aggregation, NR-share report and time series.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{extract_domain, DomainAnnotation, LabelClass, ReputabilityLabel};
use crate::error::{Error, Result};

/// One row of the post table. A retweet carries the retweeter; `author_id`
/// is then the author of the original post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRow {
    pub post_id: String,
    #[serde(default)]
    pub author_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweeter_id: Option<String>,
    /// Unix seconds, a string of digits or an RFC 3339 date.
    #[serde(default)]
    pub timestamp: Value,
    #[serde(default)]
    pub urls: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostKind {
    Tweet,
    Retweet,
}

impl PostKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Tweet => "tweet",
            Self::Retweet => "retweet",
        }
    }
}

impl PostRow {
    pub fn kind(&self) -> PostKind {
        if self.retweeter_id.is_some() {
            PostKind::Retweet
        } else {
            PostKind::Tweet
        }
    }

    /// The user a post is attributed to: the retweeter for retweets, the
    /// author otherwise.
    pub fn owner(&self) -> &str {
        self.retweeter_id.as_deref().unwrap_or(&self.author_id)
    }
}

/// Unix seconds from a number, a string of digits or an RFC 3339 date.
pub fn parse_timestamp(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => n.as_i64().or_else(|| {
            n.as_f64()
                .filter(|f| f.is_finite())
                .map(|f| f.floor() as i64)
        }),
        Value::String(s) => {
            let s = s.trim();
            s.parse::<i64>().ok().or_else(|| {
                DateTime::parse_from_rfc3339(s)
                    .ok()
                    .map(|d| d.with_timezone(&Utc).timestamp())
            })
        }
        _ => None,
    }
}

/// Reads a JSONL post table. Blank lines are ignored; any other unparsable
/// line is an error carrying its line number.
pub fn read_posts_jsonl<R: BufRead>(reader: R) -> Result<Vec<PostRow>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: PostRow = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidInput(format!("post table line {}: {e}", i + 1)))?;
        out.push(row);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    /// Domains shared fewer times than this are not label-resolved.
    pub min_occurrence: usize,
    pub keep_subdomains: bool,
    /// Adds tweet and retweet rows next to the combined row.
    pub split_by_type: bool,
    /// Length of the per-community top NR domain list.
    pub top_domains: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            min_occurrence: super::MIN_OCCURRENCE_DIRECTED,
            keep_subdomains: false,
            split_by_type: true,
            top_domains: 10,
        }
    }
}

/// Resolves urls to domains and labels. Occurrences are counted once per
/// url per post over the whole post table.
#[derive(Debug, Clone)]
pub struct DomainResolver {
    url_domain: HashMap<String, Option<String>>,
    occurrences: BTreeMap<String, usize>,
    labels: BTreeMap<String, ReputabilityLabel>,
    malformed: usize,
}

impl DomainResolver {
    pub fn new(
        posts: &[PostRow],
        annotations: &BTreeMap<String, DomainAnnotation>,
        min_occurrence: usize,
        keep_subdomains: bool,
    ) -> Result<Self> {
        if min_occurrence == 0 {
            return Err(Error::InvalidInput(
                "min_occurrence must be at least 1".into(),
            ));
        }
        let mut url_domain: HashMap<String, Option<String>> = HashMap::new();
        let mut occurrences: BTreeMap<String, usize> = BTreeMap::new();
        let mut malformed = 0;
        for url in posts.iter().flat_map(|p| &p.urls) {
            let domain = url_domain
                .entry(url.clone())
                .or_insert_with(|| extract_domain(url, keep_subdomains).ok());
            match domain {
                Some(d) => *occurrences.entry(d.clone()).or_default() += 1,
                None => malformed += 1,
            }
        }
        let labels = occurrences
            .iter()
            .filter(|(_, &c)| c >= min_occurrence)
            .filter_map(|(d, _)| annotations.get(d).map(|a| (d.clone(), a.label)))
            .collect();
        Ok(Self {
            url_domain,
            occurrences,
            labels,
            malformed,
        })
    }

    /// Domain of a url, `None` when malformed.
    pub fn domain(&self, url: &str) -> Option<&str> {
        self.url_domain.get(url).and_then(|d| d.as_deref())
    }

    /// Label of a url. Malformed urls, rare domains and unannotated domains
    /// are `UNC`.
    pub fn label(&self, url: &str) -> ReputabilityLabel {
        self.domain(url)
            .and_then(|d| self.labels.get(d).copied())
            .unwrap_or(ReputabilityLabel::UNC)
    }

    pub fn occurrences(&self, domain: &str) -> usize {
        self.occurrences.get(domain).copied().unwrap_or(0)
    }

    /// Number of malformed url occurrences.
    pub fn malformed(&self) -> usize {
        self.malformed
    }

    /// Domains that received a label.
    pub fn resolved_domains(&self) -> usize {
        self.labels.len()
    }
}

/// Url counts per report column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub r: usize,
    pub qr: usize,
    pub nr: usize,
    pub others: usize,
}

impl ClassCounts {
    pub fn add(&mut self, class: LabelClass) {
        *self.get_mut(class) += 1;
    }

    pub fn get(&self, class: LabelClass) -> usize {
        match class {
            LabelClass::R => self.r,
            LabelClass::QR => self.qr,
            LabelClass::NR => self.nr,
            LabelClass::Others => self.others,
        }
    }

    fn get_mut(&mut self, class: LabelClass) -> &mut usize {
        match class {
            LabelClass::R => &mut self.r,
            LabelClass::QR => &mut self.qr,
            LabelClass::NR => &mut self.nr,
            LabelClass::Others => &mut self.others,
        }
    }

    pub fn total(&self) -> usize {
        self.r + self.qr + self.nr + self.others
    }

    /// Percentages in R, QR, NR, Others order. An empty row is 100% Others.
    pub fn percentages(&self) -> [f64; 4] {
        let total = self.total();
        if total == 0 {
            return [0.0, 0.0, 0.0, 100.0];
        }
        LabelClass::ALL.map(|c| 100.0 * self.get(c) as f64 / total as f64)
    }
}

/// Which posts a report row covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportScope {
    All,
    Tweet,
    Retweet,
}

impl ReportScope {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::All => "all",
            Self::Tweet => "tweet",
            Self::Retweet => "retweet",
        }
    }

    fn covers(self, kind: PostKind) -> bool {
        match self {
            Self::All => true,
            Self::Tweet => kind == PostKind::Tweet,
            Self::Retweet => kind == PostKind::Retweet,
        }
    }

    fn for_options(split: bool) -> &'static [ReportScope] {
        if split {
            &[Self::All, Self::Tweet, Self::Retweet]
        } else {
            &[Self::All]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityReport {
    pub community: String,
    pub scope: ReportScope,
    pub url_count: usize,
    pub counts: ClassCounts,
    /// R, QR, NR, Others.
    pub percentages: [f64; 4],
    pub posts: usize,
    pub distinct_urls: usize,
    pub domains: usize,
    pub users: usize,
    pub malformed_urls: usize,
}

fn check_inputs(posts: &[PostRow]) -> Result<()> {
    if posts.is_empty() {
        return Err(Error::InvalidInput("empty post table".into()));
    }
    Ok(())
}

/// Posts of each community, keyed by community name. Every community named
/// in `membership` gets an entry; posts of users outside it are dropped.
fn group_by_community<'a>(
    posts: &'a [PostRow],
    membership: &'a BTreeMap<String, String>,
) -> BTreeMap<&'a str, Vec<&'a PostRow>> {
    let mut groups: BTreeMap<&str, Vec<&PostRow>> = membership
        .values()
        .map(|c| (c.as_str(), Vec::new()))
        .collect();
    for p in posts {
        if let Some(c) = membership.get(p.owner()) {
            groups
                .get_mut(c.as_str())
                .expect("community registered")
                .push(p);
        }
    }
    groups
}

/// Reputability breakdown of the urls shared by each community.
///
/// `membership` maps user ids to community names. Tweets count for their
/// author and retweets for the retweeter. Percentages are over every url
/// occurrence of the community.
pub fn aggregate_reputability(
    posts: &[PostRow],
    membership: &BTreeMap<String, String>,
    annotations: &BTreeMap<String, DomainAnnotation>,
    opts: &ReportOptions,
) -> Result<Vec<CommunityReport>> {
    check_inputs(posts)?;
    let resolver = DomainResolver::new(
        posts,
        annotations,
        opts.min_occurrence,
        opts.keep_subdomains,
    )?;
    let groups = group_by_community(posts, membership);
    let mut out = Vec::new();
    for (community, rows) in &groups {
        for &scope in ReportScope::for_options(opts.split_by_type) {
            let mut counts = ClassCounts::default();
            let mut n_posts = 0;
            let mut urls = BTreeSet::new();
            let mut domains = BTreeSet::new();
            let mut users = BTreeSet::new();
            let mut malformed = 0;
            for p in rows.iter().filter(|p| scope.covers(p.kind())) {
                n_posts += 1;
                users.insert(p.owner());
                for u in &p.urls {
                    counts.add(resolver.label(u).class());
                    urls.insert(u.as_str());
                    match resolver.domain(u) {
                        Some(d) => {
                            domains.insert(d);
                        }
                        None => malformed += 1,
                    }
                }
            }
            out.push(CommunityReport {
                community: community.to_string(),
                scope,
                url_count: counts.total(),
                percentages: counts.percentages(),
                counts,
                posts: n_posts,
                distinct_urls: urls.len(),
                domains: domains.len(),
                users: users.len(),
                malformed_urls: malformed,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrShareRow {
    pub community: String,
    pub scope: ReportScope,
    /// Posts carrying at least one NR url.
    pub nr_posts: usize,
    pub nr_urls: usize,
    pub distinct_nr_urls: usize,
    pub nr_domains: usize,
    pub nr_users: usize,
    /// NR posts per user sharing NR; 0 when no user does.
    pub mean_nr_posts_per_user: f64,
    pub mean_undefined: bool,
    /// Share of all NR urls of the same scope, in percent.
    pub share_pct: f64,
    /// Most frequent NR domains with their url counts.
    pub top_domains: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrShareReport {
    pub rows: Vec<NrShareRow>,
    /// NR urls over all reported communities, per scope.
    pub total_nr_urls: BTreeMap<ReportScope, usize>,
}

/// NR counts, per-user averages and each community's share of the NR urls
/// shared by all reported communities.
pub fn nr_share_report(
    posts: &[PostRow],
    membership: &BTreeMap<String, String>,
    annotations: &BTreeMap<String, DomainAnnotation>,
    opts: &ReportOptions,
) -> Result<NrShareReport> {
    check_inputs(posts)?;
    let resolver = DomainResolver::new(
        posts,
        annotations,
        opts.min_occurrence,
        opts.keep_subdomains,
    )?;
    let groups = group_by_community(posts, membership);
    let mut rows = Vec::new();
    let mut totals: BTreeMap<ReportScope, usize> = BTreeMap::new();
    for (community, group) in &groups {
        for &scope in ReportScope::for_options(opts.split_by_type) {
            let mut nr_posts = 0;
            let mut nr_urls = 0;
            let mut urls = BTreeSet::new();
            let mut domains: BTreeMap<&str, usize> = BTreeMap::new();
            let mut users = BTreeSet::new();
            for p in group.iter().filter(|p| scope.covers(p.kind())) {
                let mut any = false;
                for u in &p.urls {
                    if resolver.label(u) != ReputabilityLabel::NR {
                        continue;
                    }
                    any = true;
                    nr_urls += 1;
                    urls.insert(u.as_str());
                    if let Some(d) = resolver.domain(u) {
                        *domains.entry(d).or_default() += 1;
                    }
                }
                if any {
                    nr_posts += 1;
                    users.insert(p.owner());
                }
            }
            *totals.entry(scope).or_default() += nr_urls;
            let mut top: Vec<(String, usize)> =
                domains.iter().map(|(d, &c)| (d.to_string(), c)).collect();
            top.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            top.truncate(opts.top_domains);
            let mean_undefined = users.is_empty();
            rows.push(NrShareRow {
                community: community.to_string(),
                scope,
                nr_posts,
                nr_urls,
                distinct_nr_urls: urls.len(),
                nr_domains: domains.len(),
                nr_users: users.len(),
                mean_nr_posts_per_user: if mean_undefined {
                    0.0
                } else {
                    nr_posts as f64 / users.len() as f64
                },
                mean_undefined,
                share_pct: 0.0,
                top_domains: top,
            });
        }
    }
    for row in &mut rows {
        let total = totals[&row.scope];
        if total > 0 {
            row.share_pct = 100.0 * row.nr_urls as f64 / total as f64;
        }
    }
    Ok(NrShareReport {
        rows,
        total_nr_urls: totals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeBucket {
    /// Unix seconds of the bucket start.
    pub start: i64,
    pub counts: ClassCounts,
}

impl TimeBucket {
    pub fn start_rfc3339(&self) -> String {
        Utc.timestamp_opt(self.start, 0)
            .single()
            .map(|d| d.to_rfc3339())
            .unwrap_or_else(|| self.start.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub bucket_seconds: i64,
    /// Contiguous buckets from the first to the last non-empty one.
    pub buckets: Vec<TimeBucket>,
    /// Url-bearing posts whose timestamp could not be parsed.
    pub skipped_timestamps: usize,
}

/// Url occurrences per time bucket and report column. Buckets are aligned
/// on multiples of `bucket_seconds` since the Unix epoch.
pub fn timeseries_report(
    posts: &[PostRow],
    annotations: &BTreeMap<String, DomainAnnotation>,
    bucket_seconds: i64,
    opts: &ReportOptions,
) -> Result<TimeSeries> {
    check_inputs(posts)?;
    if bucket_seconds <= 0 {
        return Err(Error::InvalidInput("bucket length must be positive".into()));
    }
    let resolver = DomainResolver::new(
        posts,
        annotations,
        opts.min_occurrence,
        opts.keep_subdomains,
    )?;
    let mut sparse: BTreeMap<i64, ClassCounts> = BTreeMap::new();
    let mut skipped = 0;
    for p in posts.iter().filter(|p| !p.urls.is_empty()) {
        let Some(ts) = parse_timestamp(&p.timestamp) else {
            skipped += 1;
            continue;
        };
        let bucket = ts.div_euclid(bucket_seconds) * bucket_seconds;
        let counts = sparse.entry(bucket).or_default();
        for u in &p.urls {
            counts.add(resolver.label(u).class());
        }
    }
    let mut buckets = Vec::new();
    if let (Some((&first, _)), Some((&last, _))) =
        (sparse.first_key_value(), sparse.last_key_value())
    {
        let mut t = first;
        while t <= last {
            buckets.push(TimeBucket {
                start: t,
                counts: sparse.get(&t).copied().unwrap_or_default(),
            });
            t += bucket_seconds;
        }
    }
    Ok(TimeSeries {
        bucket_seconds,
        buckets,
        skipped_timestamps: skipped,
    })
}

/// `community,scope,url_count,R,QR,NR,Others,...` with percentages rounded
/// to one decimal.
pub fn write_community_reports_csv<W: Write>(w: W, rows: &[CommunityReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "community",
        "scope",
        "url_count",
        "R",
        "QR",
        "NR",
        "Others",
        "n_R",
        "n_QR",
        "n_NR",
        "n_Others",
        "posts",
        "distinct_urls",
        "domains",
        "users",
        "malformed_urls",
    ])?;
    for r in rows {
        let mut rec = vec![
            r.community.clone(),
            r.scope.as_str().into(),
            r.url_count.to_string(),
        ];
        rec.extend(r.percentages.iter().map(|p| format!("{p:.1}")));
        rec.extend(LabelClass::ALL.iter().map(|&c| r.counts.get(c).to_string()));
        rec.extend(
            [
                r.posts,
                r.distinct_urls,
                r.domains,
                r.users,
                r.malformed_urls,
            ]
            .map(|v| v.to_string()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One line per community and scope; top domains are `domain:count`
/// joined by `;`.
pub fn write_nr_share_csv<W: Write>(w: W, report: &NrShareReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "community",
        "scope",
        "nr_posts",
        "nr_urls",
        "distinct_nr_urls",
        "nr_domains",
        "nr_users",
        "mean_nr_posts_per_user",
        "mean_undefined",
        "share_pct",
        "top_domains",
    ])?;
    for r in &report.rows {
        let top = r
            .top_domains
            .iter()
            .map(|(d, c)| format!("{d}:{c}"))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            r.community.clone(),
            r.scope.as_str().into(),
            r.nr_posts.to_string(),
            r.nr_urls.to_string(),
            r.distinct_nr_urls.to_string(),
            r.nr_domains.to_string(),
            r.nr_users.to_string(),
            format!("{:.4}", r.mean_nr_posts_per_user),
            r.mean_undefined.to_string(),
            format!("{:.1}", r.share_pct),
            top,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `bucket_start,R,QR,NR,Others`.
pub fn write_timeseries_csv<W: Write>(w: W, series: &TimeSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["bucket_start", "R", "QR", "NR", "Others"])?;
    for b in &series.buckets {
        let mut rec = vec![b.start_rfc3339()];
        rec.extend(LabelClass::ALL.iter().map(|&c| b.counts.get(c).to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
