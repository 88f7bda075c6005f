//! Sparse bipartite graphs.
//!
//! Two layers: `Left` (L, e.g. verified users or all users) and `Right`
//! (Γ, e.g. unverified users or posts). Node indices are assigned from the
//! lexicographic order of the external ids, so the same edge list always
//! produces the same indexing.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Left,
    Right,
}

impl Layer {
    pub fn name(self) -> &'static str {
        match self {
            Layer::Left => "left",
            Layer::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

/// Per-node degrees of one layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSequence(pub Vec<usize>);

impl DegreeSequence {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl std::ops::Index<usize> for DegreeSequence {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

/// Degree queries shared by the undirected and directed graphs.
pub trait Degrees {
    /// `direction` must be `None` for undirected graphs and `Some` for
    /// directed ones.
    fn degrees(&self, layer: Layer, direction: Option<Direction>) -> Result<DegreeSequence>;
}

/// Assigns dense indices to ids in lexicographic order.
fn index_ids<'a, I>(ids: I) -> (Vec<String>, BTreeMap<&'a str, u32>)
where
    I: IntoIterator<Item = &'a str>,
{
    let set: BTreeSet<&str> = ids.into_iter().collect();
    let mut map = BTreeMap::new();
    let mut out = Vec::with_capacity(set.len());
    for (k, id) in set.into_iter().enumerate() {
        map.insert(id, k as u32);
        out.push(id.to_string());
    }
    (out, map)
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() {
        Err(Error::InvalidInput("node ids must be non-empty".into()))
    } else {
        Ok(())
    }
}

/// Undirected binary bipartite graph stored as two sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    left_ids: Vec<String>,
    right_ids: Vec<String>,
    left_adj: Vec<Vec<u32>>,
    right_adj: Vec<Vec<u32>>,
    n_edges: usize,
}

impl BipartiteGraph {
    /// Builds a graph from `(left_id, right_id)` pairs. Duplicate pairs
    /// collapse to one edge.
    pub fn from_edges<L, R>(edges: &[(L, R)]) -> Result<Self>
    where
        L: AsRef<str>,
        R: AsRef<str>,
    {
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for (l, r) in edges {
            check_id(l.as_ref())?;
            check_id(r.as_ref())?;
        }
        let (left_ids, left_map) = index_ids(edges.iter().map(|(l, _)| l.as_ref()));
        let (right_ids, right_map) = index_ids(edges.iter().map(|(_, r)| r.as_ref()));
        let indexed: Vec<(u32, u32)> = edges
            .iter()
            .map(|(l, r)| (left_map[l.as_ref()], right_map[r.as_ref()]))
            .collect();
        Self::from_indexed(left_ids, right_ids, indexed)
    }

    /// Builds a graph over explicit node sets; nodes may be isolated.
    pub fn from_indexed(
        left_ids: Vec<String>,
        right_ids: Vec<String>,
        edges: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        let n_left = left_ids.len();
        let n_right = right_ids.len();
        let mut left_adj = vec![Vec::new(); n_left];
        let mut right_adj = vec![Vec::new(); n_right];
        for (i, a) in edges {
            let (iu, au) = (i as usize, a as usize);
            if iu >= n_left {
                return Err(Error::IndexOutOfRange {
                    index: iu,
                    len: n_left,
                });
            }
            if au >= n_right {
                return Err(Error::IndexOutOfRange {
                    index: au,
                    len: n_right,
                });
            }
            left_adj[iu].push(a);
            right_adj[au].push(i);
        }
        for adj in left_adj.iter_mut().chain(right_adj.iter_mut()) {
            adj.sort_unstable();
            adj.dedup();
        }
        let n_edges: usize = left_adj.iter().map(Vec::len).sum();
        if n_left == 0 || n_right == 0 {
            return Err(Error::EmptyGraph);
        }
        Ok(Self {
            left_ids,
            right_ids,
            left_adj,
            right_adj,
            n_edges,
        })
    }

    /// Builds a graph with generated ids `L000..`, `R000..`.
    pub fn from_index_pairs(
        n_left: usize,
        n_right: usize,
        edges: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        Self::from_indexed(
            generated_ids("L", n_left),
            generated_ids("R", n_right),
            edges,
        )
    }

    pub fn n_left(&self) -> usize {
        self.left_ids.len()
    }

    pub fn n_right(&self) -> usize {
        self.right_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn left_ids(&self) -> &[String] {
        &self.left_ids
    }

    pub fn right_ids(&self) -> &[String] {
        &self.right_ids
    }

    /// Sorted Γ-neighbours of L-node `i`.
    pub fn left_neighbors(&self, i: usize) -> &[u32] {
        &self.left_adj[i]
    }

    /// Sorted L-neighbours of Γ-node `alpha`.
    pub fn right_neighbors(&self, alpha: usize) -> &[u32] {
        &self.right_adj[alpha]
    }

    pub fn has_edge(&self, i: usize, alpha: usize) -> bool {
        self.left_adj
            .get(i)
            .is_some_and(|adj| adj.binary_search(&(alpha as u32)).is_ok())
    }

    pub fn left_degrees(&self) -> DegreeSequence {
        DegreeSequence(self.left_adj.iter().map(Vec::len).collect())
    }

    pub fn right_degrees(&self) -> DegreeSequence {
        DegreeSequence(self.right_adj.iter().map(Vec::len).collect())
    }

    /// Edges in `(left index, right index)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.left_adj
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.iter().map(move |&a| (i, a as usize)))
    }

    /// Edge list with external ids, in index order.
    pub fn edge_list(&self) -> Vec<(String, String)> {
        self.edges()
            .map(|(i, a)| (self.left_ids[i].clone(), self.right_ids[a].clone()))
            .collect()
    }

    pub fn connectance(&self) -> f64 {
        connectance(self)
    }
}

impl Degrees for BipartiteGraph {
    fn degrees(&self, layer: Layer, direction: Option<Direction>) -> Result<DegreeSequence> {
        if direction.is_some() {
            return Err(Error::InvalidInput(
                "direction is not defined for an undirected graph".into(),
            ));
        }
        Ok(match layer {
            Layer::Left => self.left_degrees(),
            Layer::Right => self.right_degrees(),
        })
    }
}

/// Edge density `|E| / (n_left * n_right)`.
pub fn connectance(g: &BipartiteGraph) -> f64 {
    g.n_edges() as f64 / (g.n_left() as f64 * g.n_right() as f64)
}

pub(crate) fn generated_ids(prefix: &str, n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|k| format!("{prefix}{k:0width$}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Author,
    Retweet,
}

impl LinkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkKind::Author => "author",
            LinkKind::Retweet => "retweet",
        }
    }
}

impl std::str::FromStr for LinkKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "author" => Ok(LinkKind::Author),
            "retweet" => Ok(LinkKind::Retweet),
            other => Err(Error::InvalidInput(format!("unknown link kind {other:?}"))),
        }
    }
}

/// Counters collected while building a directed graph.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedBuildStats {
    pub duplicate_links: usize,
    pub self_retweets_dropped: usize,
    pub stub_posts: usize,
}

/// Users (L) writing and retweeting posts (Γ).
///
/// Block M holds authorship links user → post, block N holds retweet links
/// post → user. Every post has exactly one author except stub posts, which
/// are retweeted posts whose original is missing from the data; stubs carry
/// retweet links only and are excluded from the null model and the motif
/// counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedBipartiteGraph {
    user_ids: Vec<String>,
    post_ids: Vec<String>,
    authored: Vec<Vec<u32>>,
    author_of: Vec<Option<u32>>,
    retweeted: Vec<Vec<u32>>,
    retweeters: Vec<Vec<u32>>,
    stats: DirectedBuildStats,
}

impl DirectedBipartiteGraph {
    /// Builds the graph from `(user_id, post_id, kind)` records.
    ///
    /// Self-retweets are dropped and counted. A post with two distinct
    /// authors is rejected.
    pub fn from_links<U, P>(links: &[(U, P, LinkKind)]) -> Result<Self>
    where
        U: AsRef<str>,
        P: AsRef<str>,
    {
        if links.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for (u, p, _) in links {
            check_id(u.as_ref())?;
            check_id(p.as_ref())?;
        }
        let (user_ids, user_map) = index_ids(links.iter().map(|(u, _, _)| u.as_ref()));
        let (post_ids, post_map) = index_ids(links.iter().map(|(_, p, _)| p.as_ref()));
        let indexed: Vec<(u32, u32, LinkKind)> = links
            .iter()
            .map(|(u, p, k)| (user_map[u.as_ref()], post_map[p.as_ref()], *k))
            .collect();
        Self::from_indexed(user_ids, post_ids, indexed)
    }

    pub fn from_indexed(
        user_ids: Vec<String>,
        post_ids: Vec<String>,
        links: impl IntoIterator<Item = (u32, u32, LinkKind)>,
    ) -> Result<Self> {
        let n_users = user_ids.len();
        let n_posts = post_ids.len();
        if n_users == 0 || n_posts == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut authors: Vec<Vec<u32>> = vec![Vec::new(); n_posts];
        let mut retweet_links: Vec<(u32, u32)> = Vec::new();
        let mut n_links = 0usize;
        for (u, p, kind) in links {
            n_links += 1;
            let (uu, pu) = (u as usize, p as usize);
            if uu >= n_users {
                return Err(Error::IndexOutOfRange {
                    index: uu,
                    len: n_users,
                });
            }
            if pu >= n_posts {
                return Err(Error::IndexOutOfRange {
                    index: pu,
                    len: n_posts,
                });
            }
            match kind {
                LinkKind::Author => authors[pu].push(u),
                LinkKind::Retweet => retweet_links.push((u, p)),
            }
        }
        let mut stats = DirectedBuildStats::default();
        let mut author_of = vec![None; n_posts];
        let mut authored = vec![Vec::new(); n_users];
        for (p, mut a) in authors.into_iter().enumerate() {
            let before = a.len();
            a.sort_unstable();
            a.dedup();
            stats.duplicate_links += before - a.len();
            match a.as_slice() {
                [] => {}
                [single] => {
                    author_of[p] = Some(*single);
                    authored[*single as usize].push(p as u32);
                }
                many => {
                    return Err(Error::MultipleAuthors {
                        post: post_ids[p].clone(),
                        authors: many.len(),
                    })
                }
            }
        }
        let mut retweeted = vec![Vec::new(); n_users];
        let mut retweeters = vec![Vec::new(); n_posts];
        for (u, p) in retweet_links {
            if author_of[p as usize] == Some(u) {
                stats.self_retweets_dropped += 1;
                continue;
            }
            retweeted[u as usize].push(p);
            retweeters[p as usize].push(u);
        }
        for adj in retweeted.iter_mut() {
            let before = adj.len();
            adj.sort_unstable();
            adj.dedup();
            stats.duplicate_links += before - adj.len();
        }
        for adj in retweeters.iter_mut() {
            adj.sort_unstable();
            adj.dedup();
        }
        stats.stub_posts = author_of.iter().filter(|a| a.is_none()).count();
        if stats.self_retweets_dropped > 0 {
            log::warn!(
                "dropped {} self-retweet link(s)",
                stats.self_retweets_dropped
            );
        }
        debug_assert!(n_links >= stats.duplicate_links);
        Ok(Self {
            user_ids,
            post_ids,
            authored,
            author_of,
            retweeted,
            retweeters,
            stats,
        })
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    /// All posts, stubs included.
    pub fn n_posts(&self) -> usize {
        self.post_ids.len()
    }

    /// Posts with an author; the Γ layer seen by the null model.
    pub fn n_authored_posts(&self) -> usize {
        self.n_posts() - self.stats.stub_posts
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn post_ids(&self) -> &[String] {
        &self.post_ids
    }

    pub fn stats(&self) -> &DirectedBuildStats {
        &self.stats
    }

    pub fn is_stub(&self, post: usize) -> bool {
        self.author_of[post].is_none()
    }

    pub fn author_of(&self, post: usize) -> Option<usize> {
        self.author_of[post].map(|u| u as usize)
    }

    /// Posts written by `user` (block M row).
    pub fn authored_by(&self, user: usize) -> &[u32] {
        &self.authored[user]
    }

    /// Posts retweeted by `user` (block N column), stubs included.
    pub fn retweeted_by(&self, user: usize) -> &[u32] {
        &self.retweeted[user]
    }

    /// Users who retweeted `post`.
    pub fn retweeters_of(&self, post: usize) -> &[u32] {
        &self.retweeters[post]
    }

    pub fn n_author_links(&self) -> usize {
        self.authored.iter().map(Vec::len).sum()
    }

    pub fn n_retweet_links(&self) -> usize {
        self.retweeted.iter().map(Vec::len).sum()
    }

    /// Authorship out-degree of every user.
    pub fn out_degrees(&self) -> DegreeSequence {
        DegreeSequence(self.authored.iter().map(Vec::len).collect())
    }

    /// Retweets made by every user, counting only posts that have an author.
    pub fn in_degrees(&self) -> DegreeSequence {
        DegreeSequence(
            self.retweeted
                .iter()
                .map(|posts| posts.iter().filter(|&&p| !self.is_stub(p as usize)).count())
                .collect(),
        )
    }

    /// Dense index of every authored post, `None` for stubs.
    pub fn authored_post_index(&self) -> Vec<Option<u32>> {
        let mut next = 0u32;
        self.author_of
            .iter()
            .map(|a| {
                a.map(|_| {
                    let k = next;
                    next += 1;
                    k
                })
            })
            .collect()
    }

    /// Every link as `(user index, post index, kind)`; authorship first.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize, LinkKind)> + '_ {
        let authors = self
            .authored
            .iter()
            .enumerate()
            .flat_map(|(u, ps)| ps.iter().map(move |&p| (u, p as usize, LinkKind::Author)));
        let retweets = self
            .retweeted
            .iter()
            .enumerate()
            .flat_map(|(u, ps)| ps.iter().map(move |&p| (u, p as usize, LinkKind::Retweet)));
        authors.chain(retweets)
    }

    /// Block N over authored posts only, as an undirected bipartite graph
    /// (users × authored posts).
    pub fn retweet_block(&self) -> Result<BipartiteGraph> {
        let index = self.authored_post_index();
        let ids: Vec<String> = self
            .post_ids
            .iter()
            .zip(&index)
            .filter(|(_, k)| k.is_some())
            .map(|(id, _)| id.clone())
            .collect();
        let edges: Vec<(u32, u32)> = self
            .retweeted
            .iter()
            .enumerate()
            .flat_map(|(u, ps)| {
                let index = &index;
                ps.iter()
                    .filter_map(move |&p| index[p as usize].map(|k| (u as u32, k)))
            })
            .collect();
        BipartiteGraph::from_indexed(self.user_ids.clone(), ids, edges)
    }

    /// Block M over authored posts, as an undirected bipartite graph.
    pub fn authorship_block(&self) -> Result<BipartiteGraph> {
        let index = self.authored_post_index();
        let ids: Vec<String> = self
            .post_ids
            .iter()
            .zip(&index)
            .filter(|(_, k)| k.is_some())
            .map(|(id, _)| id.clone())
            .collect();
        let edges: Vec<(u32, u32)> = self
            .authored
            .iter()
            .enumerate()
            .flat_map(|(u, ps)| {
                let index = &index;
                ps.iter()
                    .map(move |&p| (u as u32, index[p as usize].expect("authored post")))
            })
            .collect();
        BipartiteGraph::from_indexed(self.user_ids.clone(), ids, edges)
    }
}

impl Degrees for DirectedBipartiteGraph {
    fn degrees(&self, layer: Layer, direction: Option<Direction>) -> Result<DegreeSequence> {
        let direction = direction.ok_or_else(|| {
            Error::InvalidInput("a direction is required for a directed graph".into())
        })?;
        Ok(match (layer, direction) {
            (Layer::Left, Direction::Out) => self.out_degrees(),
            (Layer::Left, Direction::In) => {
                DegreeSequence(self.retweeted.iter().map(Vec::len).collect())
            }
            (Layer::Right, Direction::In) => DegreeSequence(
                self.author_of
                    .iter()
                    .map(|a| usize::from(a.is_some()))
                    .collect(),
            ),
            (Layer::Right, Direction::Out) => {
                DegreeSequence(self.retweeters.iter().map(Vec::len).collect())
            }
        })
    }
}
