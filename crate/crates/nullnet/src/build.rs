//! Bipartite representations of an ingested tweet store.

use std::collections::{BTreeMap, BTreeSet};

use nullnet_core::graph::{BipartiteGraph, DirectedBipartiteGraph, LinkKind};
use nullnet_core::reputability::PostRow;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{PipelineError, Result};
use crate::ingest::TweetRecord;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifiedBuildStats {
    pub verified_users: usize,
    pub unverified_users: usize,
    pub retweets: usize,
    /// Retweets between two verified users; they carry no edge.
    pub verified_verified: usize,
    pub unverified_unverified: usize,
    /// Retweets whose original is not in the store.
    pub orphan_retweets: usize,
    pub self_retweets: usize,
}

fn verified_users(records: &[TweetRecord]) -> BTreeSet<&str> {
    records
        .iter()
        .filter(|r| r.author_verified)
        .map(|r| r.author_id.as_str())
        .collect()
}

/// Verified users (left layer) against unverified users (right layer),
/// linked when either retweeted the other at least once.
pub fn build_verified_bipartite(
    records: &[TweetRecord],
) -> Result<(BipartiteGraph, VerifiedBuildStats)> {
    let verified = verified_users(records);
    if verified.is_empty() {
        return Err(PipelineError::Validation(
            "no verified users in the store".into(),
        ));
    }
    let author_of: BTreeMap<&str, &str> = records
        .iter()
        .map(|r| (r.post_id.as_str(), r.author_id.as_str()))
        .collect();
    let all_users: BTreeSet<&str> = records.iter().map(|r| r.author_id.as_str()).collect();
    let mut stats = VerifiedBuildStats {
        verified_users: verified.len(),
        unverified_users: all_users.len() - verified.len(),
        ..Default::default()
    };
    let mut edges = Vec::new();
    for r in records {
        let Some(orig) = &r.retweet_of else { continue };
        stats.retweets += 1;
        let Some(&author) = author_of.get(orig.as_str()) else {
            stats.orphan_retweets += 1;
            continue;
        };
        let retweeter = r.author_id.as_str();
        if author == retweeter {
            stats.self_retweets += 1;
            continue;
        }
        match (verified.contains(author), verified.contains(retweeter)) {
            (true, true) => stats.verified_verified += 1,
            (false, false) => stats.unverified_unverified += 1,
            (true, false) => edges.push((author, retweeter)),
            (false, true) => edges.push((retweeter, author)),
        }
    }
    if edges.is_empty() {
        return Err(PipelineError::Validation(
            "no retweet links a verified and an unverified user".into(),
        ));
    }
    Ok((BipartiteGraph::from_edges(&edges)?, stats))
}

/// Users against posts: authorship links for originals, retweet links from
/// each retweeter to the original post. Also returns the post table used by
/// the reputability reports, in store order.
pub fn build_user_post_bipartite(
    records: &[TweetRecord],
) -> Result<(DirectedBipartiteGraph, Vec<PostRow>)> {
    if records.is_empty() {
        return Err(PipelineError::Validation("empty store".into()));
    }
    let author_of: BTreeMap<&str, &str> = records
        .iter()
        .filter(|r| r.retweet_of.is_none())
        .map(|r| (r.post_id.as_str(), r.author_id.as_str()))
        .collect();
    let mut links = Vec::with_capacity(records.len());
    let mut posts = Vec::with_capacity(records.len());
    for r in records {
        match &r.retweet_of {
            None => {
                links.push((r.author_id.as_str(), r.post_id.as_str(), LinkKind::Author));
                posts.push(PostRow {
                    post_id: r.post_id.clone(),
                    author_id: r.author_id.clone(),
                    retweeter_id: None,
                    timestamp: Value::from(r.timestamp),
                    urls: r.urls.clone(),
                });
            }
            Some(orig) => {
                links.push((r.author_id.as_str(), orig.as_str(), LinkKind::Retweet));
                posts.push(PostRow {
                    post_id: r.post_id.clone(),
                    author_id: author_of
                        .get(orig.as_str())
                        .copied()
                        .unwrap_or("")
                        .to_string(),
                    retweeter_id: Some(r.author_id.clone()),
                    timestamp: Value::from(r.timestamp),
                    urls: r.urls.clone(),
                });
            }
        }
    }
    let g = DirectedBipartiteGraph::from_links(&links)?;
    if g.stats().stub_posts > 0 {
        log::warn!(
            "{} retweeted posts have no author in the store",
            g.stats().stub_posts
        );
    }
    Ok((g, posts))
}
