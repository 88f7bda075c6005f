//! Synthetic tweet corpus with planted communities, for tests and demos.
//!
//! Users belong to one of several communities. Each user writes a few
//! originals and retweets mostly inside their own community, with a short
//! list of favourite authors. Verified users are more active and more
//! popular. Every community has its own propensity to share urls from
//! non-reputable domains.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nullnet_core::reputability::{
    write_annotations, AnnotationSource, DomainAnnotation, ReputabilityLabel,
};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Pareto, Poisson};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{PipelineError, Result};
use crate::ingest::{write_records, TweetRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub community_sizes: Vec<usize>,
    pub verified_fraction: f64,
    /// Mean originals per unverified user, on top of one.
    pub mean_posts: f64,
    /// Activity multiplier of verified users.
    pub verified_activity: f64,
    /// Mean retweets per user, on top of one.
    pub mean_retweets: f64,
    /// Probability that a retweet stays inside the user's community.
    pub homophily: f64,
    pub favourites: usize,
    /// Probability that an in-community retweet goes to a favourite.
    pub favourite_share: f64,
    /// Probability that a url of each community comes from an NR domain.
    pub nr_propensity: Vec<f64>,
    pub url_probability: f64,
    /// UTC seconds of the first day.
    pub start: i64,
    pub days: u32,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            community_sizes: vec![700, 550, 450, 300],
            verified_fraction: 0.1,
            mean_posts: 2.0,
            verified_activity: 5.0,
            mean_retweets: 14.0,
            homophily: 0.92,
            favourites: 6,
            favourite_share: 0.6,
            nr_propensity: vec![0.45, 0.05, 0.2, 0.1],
            url_probability: 0.8,
            // 2022-08-01T00:00:00Z
            start: 1_659_312_000,
            days: 30,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub tweets: Vec<TweetRecord>,
    /// Planted community of every user.
    pub truth: BTreeMap<String, usize>,
    pub verified: BTreeSet<String>,
    pub annotations: BTreeMap<String, DomainAnnotation>,
}

const R_DOMAINS: [&str; 5] = [
    "dailyledger.it",
    "morningpost.it",
    "civicnews.com",
    "newsagency.it",
    "economyreview.com",
];
const QR_DOMAINS: [&str; 2] = ["opinionsheet.it", "cityvoice.it"];
const NR_DOMAINS: [&str; 4] = [
    "truthfeed.info",
    "wakeupnews.com",
    "realfacts.net",
    "m.realfacts.net",
];
const OTHER_DOMAINS: [(&str, Option<ReputabilityLabel>); 5] = [
    ("facebook.com", Some(ReputabilityLabel::S)),
    ("youtube.com", Some(ReputabilityLabel::ST)),
    ("change.org", Some(ReputabilityLabel::F)),
    ("governo.it", Some(ReputabilityLabel::IS)),
    ("randomblog.net", None),
];

fn fixture_annotations() -> BTreeMap<String, DomainAnnotation> {
    let mut out = BTreeMap::new();
    let mut add = |d: &str, score: Option<f64>, label: Option<ReputabilityLabel>| {
        let source = if score.is_some() {
            AnnotationSource::NewsguardFile
        } else {
            AnnotationSource::Manual
        };
        let a = DomainAnnotation::new(d, score, label, source).expect("valid fixture annotation");
        out.insert(a.domain.clone(), a);
    };
    for (k, d) in R_DOMAINS.iter().enumerate() {
        add(d, Some(95.0 - 5.0 * k as f64), None);
    }
    for (k, d) in QR_DOMAINS.iter().enumerate() {
        add(d, Some(57.5 + 5.0 * k as f64), None);
    }
    // the mobile mirror shares the parent's registrable domain
    for (k, d) in NR_DOMAINS.iter().take(3).enumerate() {
        add(d, Some(20.0 + 10.0 * k as f64), None);
    }
    for (d, label) in OTHER_DOMAINS {
        if label.is_some() {
            add(d, None, label);
        }
    }
    out
}

fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| 1.0 / r as f64)).expect("positive weights")
}

struct UrlSampler {
    r: WeightedIndex<f64>,
    qr: WeightedIndex<f64>,
    nr: WeightedIndex<f64>,
    other: WeightedIndex<f64>,
}

impl UrlSampler {
    fn new() -> Self {
        Self {
            r: zipf(R_DOMAINS.len()),
            qr: zipf(QR_DOMAINS.len()),
            nr: zipf(NR_DOMAINS.len()),
            other: zipf(OTHER_DOMAINS.len()),
        }
    }

    fn domain<R: Rng>(&self, nr_propensity: f64, rng: &mut R) -> &'static str {
        if rng.random::<f64>() < nr_propensity {
            return NR_DOMAINS[self.nr.sample(rng)];
        }
        let u: f64 = rng.random();
        if u < 0.6 {
            R_DOMAINS[self.r.sample(rng)]
        } else if u < 0.65 {
            QR_DOMAINS[self.qr.sample(rng)]
        } else {
            OTHER_DOMAINS[self.other.sample(rng)].0
        }
    }
}

fn check(cfg: &FixtureConfig) -> Result<()> {
    let bad = |m: &str| Err(PipelineError::Config(format!("fixture: {m}")));
    if cfg.community_sizes.len() < 2 || cfg.community_sizes.iter().any(|&s| s < 2) {
        return bad("need at least two communities of two users");
    }
    if cfg.nr_propensity.len() != cfg.community_sizes.len() {
        return bad("one NR propensity per community");
    }
    let probs = [
        cfg.verified_fraction,
        cfg.homophily,
        cfg.favourite_share,
        cfg.url_probability,
    ];
    if probs
        .iter()
        .chain(&cfg.nr_propensity)
        .any(|p| !(0.0..=1.0).contains(p))
    {
        return bad("probabilities must lie in [0, 1]");
    }
    if cfg.mean_posts < 0.0
        || cfg.mean_retweets < 0.0
        || cfg.verified_activity <= 0.0
        || cfg.days == 0
    {
        return bad("activity parameters must be positive");
    }
    Ok(())
}

fn poisson_plus_one<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 1;
    }
    1 + Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

/// Generates the corpus. Equal configs give identical corpora.
pub fn generate(cfg: &FixtureConfig) -> Result<Fixture> {
    check(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n: usize = cfg.community_sizes.iter().sum();
    let n_comm = cfg.community_sizes.len();

    // user k gets a shuffled id so ids carry no community information
    let mut community: Vec<usize> = cfg
        .community_sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect();
    community.shuffle(&mut rng);
    let ids: Vec<String> = (0..n).map(|k| format!("u{k:05}")).collect();
    let mut verified = vec![false; n];
    for c in 0..n_comm {
        let mut members: Vec<usize> = (0..n).filter(|&k| community[k] == c).collect();
        members.shuffle(&mut rng);
        let n_ver = ((members.len() as f64 * cfg.verified_fraction).round() as usize).max(1);
        for &k in &members[..n_ver] {
            verified[k] = true;
        }
    }
    let pareto = Pareto::new(1.0, 2.0).expect("valid pareto");
    let popularity: Vec<f64> = (0..n)
        .map(|k| {
            let w: f64 = pareto.sample(&mut rng);
            if verified[k] {
                w * cfg.verified_activity
            } else {
                w
            }
        })
        .collect();

    let span = cfg.days as i64 * 86_400;
    let urls = UrlSampler::new();
    let mut tweets = Vec::new();
    let mut posts_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for k in 0..n {
        let mean = if verified[k] {
            cfg.mean_posts * cfg.verified_activity
        } else {
            cfg.mean_posts
        };
        for _ in 0..poisson_plus_one(mean, &mut rng) {
            let id = format!("p{:07}", tweets.len());
            let post_urls = if rng.random::<f64>() < cfg.url_probability {
                let d = urls.domain(cfg.nr_propensity[community[k]], &mut rng);
                vec![format!("https://www.{d}/{id}")]
            } else {
                vec![]
            };
            posts_of[k].push(tweets.len());
            tweets.push(TweetRecord {
                post_id: id,
                author_id: ids[k].clone(),
                author_verified: verified[k],
                retweet_of: None,
                timestamp: cfg.start + rng.random_range(0..span),
                urls: post_urls,
                lang: Some("it".into()),
                text: None,
            });
        }
    }

    let members: Vec<Vec<usize>> = (0..n_comm)
        .map(|c| (0..n).filter(|&k| community[k] == c).collect())
        .collect();
    let pickers: Vec<WeightedIndex<f64>> = members
        .iter()
        .map(|m| WeightedIndex::new(m.iter().map(|&k| popularity[k])).expect("positive weights"))
        .collect();
    let n_originals = tweets.len();
    for k in 0..n {
        let own = community[k];
        let favourites: Vec<usize> = (0..cfg.favourites)
            .map(|_| members[own][pickers[own].sample(&mut rng)])
            .filter(|&a| a != k)
            .collect();
        let activity = if verified[k] {
            cfg.verified_activity
        } else {
            1.0
        };
        let mut done = BTreeSet::new();
        for _ in 0..poisson_plus_one(cfg.mean_retweets * activity.sqrt(), &mut rng) {
            let target_comm = if rng.random::<f64>() < cfg.homophily {
                own
            } else {
                let others: Vec<usize> = (0..n_comm).filter(|&c| c != own).collect();
                *others.choose(&mut rng).expect("two communities")
            };
            let author = if target_comm == own
                && !favourites.is_empty()
                && rng.random::<f64>() < cfg.favourite_share
            {
                *favourites.choose(&mut rng).expect("non-empty")
            } else {
                members[target_comm][pickers[target_comm].sample(&mut rng)]
            };
            if author == k {
                continue;
            }
            let &orig = posts_of[author].choose(&mut rng).expect("every user posts");
            if !done.insert(orig) {
                continue;
            }
            let source = &tweets[orig];
            let ts = source.timestamp + rng.random_range(0..2 * 86_400);
            tweets.push(TweetRecord {
                post_id: format!("p{:07}", tweets.len()),
                author_id: ids[k].clone(),
                author_verified: verified[k],
                retweet_of: Some(source.post_id.clone()),
                timestamp: ts.min(cfg.start + span - 1),
                urls: source.urls.clone(),
                lang: Some("it".into()),
                text: None,
            });
        }
    }
    log::debug!(
        "fixture: {n} users, {n_originals} originals, {} retweets",
        tweets.len() - n_originals
    );

    Ok(Fixture {
        truth: ids.iter().cloned().zip(community).collect(),
        verified: (0..n)
            .filter(|&k| verified[k])
            .map(|k| ids[k].clone())
            .collect(),
        tweets,
        annotations: fixture_annotations(),
    })
}

impl Fixture {
    /// Writes `tweets.jsonl`, `annotations.csv`, `truth.csv` and a default
    /// `config.toml` pointing at them.
    pub fn write(&self, dir: &Path, seed: u64) -> Result<Config> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        write_records(&dir.join("tweets.jsonl"), &self.tweets)?;
        let ann_path = dir.join("annotations.csv");
        let mut buf = Vec::new();
        write_annotations(&mut buf, &self.annotations)?;
        std::fs::write(&ann_path, buf).map_err(|e| PipelineError::io(&ann_path, e))?;

        let truth_path = dir.join("truth.csv");
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["user_id", "community", "verified"])?;
        for (u, c) in &self.truth {
            w.write_record([
                u.as_str(),
                &c.to_string(),
                &self.verified.contains(u).to_string(),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| PipelineError::Validation(e.to_string()))?;
        std::fs::write(&truth_path, bytes).map_err(|e| PipelineError::io(&truth_path, e))?;

        let mut cfg = Config::new(vec!["tweets.jsonl".into()], "run".into());
        cfg.annotations = Some("annotations.csv".into());
        cfg.seed = seed;
        let cfg_path = dir.join("config.toml");
        std::fs::write(&cfg_path, cfg.to_toml()).map_err(|e| PipelineError::io(&cfg_path, e))?;
        cfg.resolve_paths(dir);
        Ok(cfg)
    }

    /// Share of NR-domain urls among all urls owned by each planted
    /// community, counting retweets for the retweeter.
    pub fn planted_nr_share(&self) -> Vec<f64> {
        let n_comm = self.truth.values().max().map_or(0, |&c| c + 1);
        let nr: BTreeSet<&str> = NR_DOMAINS.iter().copied().collect();
        let mut counts = vec![(0usize, 0usize); n_comm];
        for t in &self.tweets {
            let c = self.truth[&t.author_id];
            for u in &t.urls {
                counts[c].1 += 1;
                let host = u
                    .trim_start_matches("https://www.")
                    .split('/')
                    .next()
                    .unwrap_or("");
                if nr.contains(host) {
                    counts[c].0 += 1;
                }
            }
        }
        counts
            .into_iter()
            .map(|(a, b)| {
                if b == 0 {
                    0.0
                } else {
                    100.0 * a as f64 / b as f64
                }
            })
            .collect()
    }
}
