//! Stage orchestration over a directory of flat-file artifacts.
//!
//! Every stage reads only files written by earlier stages under `out_dir`
//! and writes its own subdirectory. `manifest.json` records the config,
//! input and output checksums, stage seeds and timings; it is rewritten
//! after every stage so a failed run leaves a partial manifest behind.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use nullnet_core::communities::{
    default_restarts, hits_scores, louvain_best, propagate_labels, subcommunities, LabelAssignment,
    Partition, PropagationOptions,
};
use nullnet_core::graph::{BipartiteGraph, DirectedBipartiteGraph};
use nullnet_core::io::{
    read_bipartite_csv, read_directed_csv, read_labels_csv, write_bipartite_csv,
    write_directed_csv, write_labels_csv, write_projection_csv,
};
use nullnet_core::nullmodel::{
    fit_bidcm, fit_undirected, BicmParams, BidcmOptions, BidcmParams, SolverOptions,
};
use nullnet_core::projection::{
    validate_directed, validate_undirected, ValidatedProjection, ValidationOptions,
};
use nullnet_core::reputability::{
    aggregate_reputability, nr_share_report, read_annotations, read_posts_jsonl, timeseries_report,
    write_community_reports_csv, write_nr_share_csv, write_timeseries_csv, DomainAnnotation,
    PostRow, ReportOptions,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::build::{build_user_post_bipartite, build_verified_bipartite};
use crate::config::Config;
use crate::error::{PipelineError, Result};
use crate::ingest::{ingest, read_records, write_records};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Build,
    Fit,
    Project,
    Communities,
    Propagate,
    Hubs,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Build,
        Stage::Fit,
        Stage::Project,
        Stage::Communities,
        Stage::Propagate,
        Stage::Hubs,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Build => "build",
            Stage::Fit => "fit",
            Stage::Project => "project",
            Stage::Communities => "communities",
            Stage::Propagate => "propagate",
            Stage::Hubs => "hubs",
            Stage::Report => "report",
        }
    }

    /// Artifact subdirectory; the ingest stage owns the record store.
    pub fn dir(self) -> &'static str {
        match self {
            Stage::Ingest => "store",
            other => other.name(),
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown stage {s:?}")))
    }
}

/// Per-stage RNG seed: the first 8 bytes (little endian) of
/// `sha256(master seed as LE bytes ‖ stage name)`.
pub fn stage_seed(master: u64, stage: Stage) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stage.name().as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn digest_file(path: &Path, shown_as: String) -> Result<FileDigest> {
    let data = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(FileDigest {
        path: shown_as,
        bytes: data.len() as u64,
        sha256: hex::encode(Sha256::digest(&data)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Done,
    /// Artifacts of an earlier run were reused.
    Reused,
    Failed,
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub seed: u64,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub config: Config,
    pub inputs: Vec<FileDigest>,
    pub stages: Vec<StageRecord>,
    /// Every file under the output directory except the manifest, sorted by
    /// path relative to it.
    pub outputs: Vec<FileDigest>,
    pub complete: bool,
}

pub const MANIFEST: &str = "manifest.json";
const LOCK: &str = ".lock";

impl RunManifest {
    pub fn load(out_dir: &Path) -> Result<Self> {
        read_json(&out_dir.join(MANIFEST))
    }

    pub fn output(&self, rel: &str) -> Option<&FileDigest> {
        self.outputs.iter().find(|d| d.path == rel)
    }
}

/// Exclusive writer lock on an output directory, released on drop.
struct WriterLock(PathBuf);

impl WriterLock {
    fn acquire(out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
        let path = out_dir.join(LOCK);
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(PipelineError::Config(format!(
                    "{} is locked by another run (remove {} if stale)",
                    out_dir.display(),
                    path.display()
                )))
            }
            Err(e) => Err(PipelineError::io(path, e)),
        }
    }
}

impl Drop for WriterLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

fn artifact(cfg: &Config, stage: Stage, name: &str) -> PathBuf {
    cfg.out_dir.join(stage.dir()).join(name)
}

fn open_artifact(path: &Path) -> Result<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(PipelineError::MissingArtifact(path.to_path_buf()))
        }
        Err(e) => Err(PipelineError::io(path, e)),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open_artifact(path)?)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| PipelineError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| PipelineError::io(path, e))?;
    w.flush().map_err(|e| PipelineError::io(path, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| PipelineError::io(path, e))
}

fn read_store(cfg: &Config) -> Result<Vec<crate::ingest::TweetRecord>> {
    let path = artifact(cfg, Stage::Ingest, "tweets.jsonl");
    if !path.exists() {
        return Err(PipelineError::MissingArtifact(path));
    }
    read_records(&path)
}

fn community_name(k: usize) -> String {
    format!("c{k}")
}

#[derive(Debug, Serialize, Deserialize)]
struct BuildSummary {
    verified: crate::build::VerifiedBuildStats,
    directed: nullnet_core::graph::DirectedBuildStats,
    verified_edges: usize,
    user_post_links: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct PartitionArtifact {
    node_ids: Vec<String>,
    partition: Partition,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelsArtifact {
    node_ids: Vec<String>,
    assignment: LabelAssignment,
    seeds: usize,
    labelled: usize,
    unreachable: usize,
}

fn stage_ingest(cfg: &Config) -> Result<()> {
    let (records, stats) = ingest(&cfg.input, &cfg.filters)?;
    if !stats.gap_days.is_empty() {
        log::warn!(
            "{} days without records inside the covered span",
            stats.gap_days.len()
        );
    }
    let path = artifact(cfg, Stage::Ingest, "tweets.jsonl");
    std::fs::create_dir_all(path.parent().expect("artifact dir"))
        .map_err(|e| PipelineError::io(&path, e))?;
    write_records(&path, &records)?;
    write_json(&artifact(cfg, Stage::Ingest, "ingest.json"), &stats)
}

fn stage_build(cfg: &Config) -> Result<()> {
    let records = read_store(cfg)?;
    let (verified, vstats) = build_verified_bipartite(&records)?;
    let (directed, posts) = build_user_post_bipartite(&records)?;
    write_with(&artifact(cfg, Stage::Build, "verified_edges.csv"), |w| {
        Ok(write_bipartite_csv(w, &verified)?)
    })?;
    write_with(&artifact(cfg, Stage::Build, "user_post_links.csv"), |w| {
        Ok(write_directed_csv(w, &directed)?)
    })?;
    let posts_path = artifact(cfg, Stage::Build, "posts.jsonl");
    write_with(&posts_path, |w| {
        for p in &posts {
            serde_json::to_writer(&mut *w, p)?;
            w.write_all(b"\n")
                .map_err(|e| PipelineError::io(&posts_path, e))?;
        }
        Ok(())
    })?;
    write_json(
        &artifact(cfg, Stage::Build, "build.json"),
        &BuildSummary {
            verified: vstats,
            directed: directed.stats().clone(),
            verified_edges: verified.n_edges(),
            user_post_links: directed.n_author_links() + directed.n_retweet_links(),
        },
    )
}

fn read_verified(cfg: &Config) -> Result<BipartiteGraph> {
    Ok(read_bipartite_csv(open_artifact(&artifact(
        cfg,
        Stage::Build,
        "verified_edges.csv",
    ))?)?)
}

fn read_directed(cfg: &Config) -> Result<DirectedBipartiteGraph> {
    Ok(read_directed_csv(open_artifact(&artifact(
        cfg,
        Stage::Build,
        "user_post_links.csv",
    ))?)?)
}

fn read_posts(cfg: &Config) -> Result<Vec<PostRow>> {
    Ok(read_posts_jsonl(open_artifact(&artifact(
        cfg,
        Stage::Build,
        "posts.jsonl",
    ))?)?)
}

fn stage_fit(cfg: &Config) -> Result<()> {
    let g = read_verified(cfg)?;
    let solver = SolverOptions::default();
    let bicm = fit_undirected(&g, cfg.null_model, cfg.sparse_threshold, solver)?;
    log::info!(
        "bicm: {:?} fit, residual {:.2e}, connectance {:.4}",
        bicm.mode,
        bicm.diagnostics.max_residual,
        bicm.diagnostics.connectance
    );
    write_json(&artifact(cfg, Stage::Fit, "bicm.json"), &bicm)?;
    let dg = read_directed(cfg)?;
    let bidcm = fit_bidcm(
        &dg,
        BidcmOptions {
            retweet_model: cfg.null_model,
            sparse_threshold: cfg.sparse_threshold,
            solver,
        },
    )?;
    write_json(&artifact(cfg, Stage::Fit, "bidcm.json"), &bidcm)
}

fn validation_options(cfg: &Config) -> ValidationOptions {
    ValidationOptions {
        alpha: cfg.alpha,
        family: cfg.fdr_family,
        p_value: cfg.p_value_mode(),
    }
}

fn write_projection(cfg: &Config, stem: &str, proj: &ValidatedProjection) -> Result<()> {
    write_json(
        &artifact(cfg, Stage::Project, &format!("{stem}.json")),
        proj,
    )?;
    write_with(
        &artifact(cfg, Stage::Project, &format!("{stem}.csv")),
        |w| Ok(write_projection_csv(w, proj)?),
    )
}

fn stage_project(cfg: &Config) -> Result<()> {
    let opts = validation_options(cfg);
    let g = read_verified(cfg)?;
    let bicm: BicmParams = read_json(&artifact(cfg, Stage::Fit, "bicm.json"))?;
    let proj = validate_undirected(&g, &bicm, &opts)?;
    log::info!(
        "verified projection: {} of {} tested pairs validated over {} nodes",
        proj.n_edges(),
        proj.tested,
        proj.n_nodes()
    );
    write_projection(cfg, "verified_projection", &proj)?;
    let dg = read_directed(cfg)?;
    let bidcm: BidcmParams = read_json(&artifact(cfg, Stage::Fit, "bidcm.json"))?;
    let dproj = validate_directed(&dg, &bidcm, &opts)?;
    log::info!(
        "directed projection: {} of {} tested pairs validated over {} nodes",
        dproj.n_edges(),
        dproj.tested,
        dproj.n_nodes()
    );
    write_projection(cfg, "directed_projection", &dproj)
}

fn read_projection(cfg: &Config, stem: &str) -> Result<ValidatedProjection> {
    read_json(&artifact(cfg, Stage::Project, &format!("{stem}.json")))
}

fn stage_communities(cfg: &Config, seed: u64) -> Result<()> {
    let proj = read_projection(cfg, "verified_projection")?;
    if proj.n_edges() == 0 {
        return Err(PipelineError::Validation(
            "the verified projection has no validated edge".into(),
        ));
    }
    let adj = proj.undirected_adjacency();
    let restarts = cfg.restarts.unwrap_or_else(|| default_restarts(adj.len()));
    let partition = louvain_best(&adj, restarts, seed)?;
    log::info!(
        "louvain: {} communities, modularity {:.4}",
        partition.n_communities(),
        partition.modularity
    );
    let rows: Vec<(String, String)> = proj
        .node_ids
        .iter()
        .zip(&partition.membership)
        .map(|(id, &c)| (id.clone(), community_name(c)))
        .collect();
    write_with(&artifact(cfg, Stage::Communities, "partition.csv"), |w| {
        Ok(write_labels_csv(w, &rows)?)
    })?;

    let mut sub_rows = Vec::new();
    for c in 0..partition.n_communities() {
        let members = partition.members(c).len();
        if members < 2 {
            continue;
        }
        let n = cfg.restarts.unwrap_or_else(|| default_restarts(members));
        let sub = subcommunities(&adj, &partition, c, n, seed.wrapping_add(1 + c as u64))?;
        for (node, label) in sub.labels() {
            sub_rows.push((proj.node_ids[node].clone(), format!("c{label}")));
        }
    }
    sub_rows.sort();
    write_with(
        &artifact(cfg, Stage::Communities, "subcommunities.csv"),
        |w| Ok(write_labels_csv(w, &sub_rows)?),
    )?;

    // verified users that also sit in the directed projection seed the
    // propagation
    let dproj = read_projection(cfg, "directed_projection")?;
    let seeds: Vec<(String, String)> = rows
        .iter()
        .filter(|(id, _)| dproj.index_of(id).is_some())
        .cloned()
        .collect();
    if seeds.is_empty() {
        log::warn!("no verified community member appears in the directed projection");
    }
    write_with(&artifact(cfg, Stage::Communities, "seeds.csv"), |w| {
        Ok(write_labels_csv(w, &seeds)?)
    })?;
    write_json(
        &artifact(cfg, Stage::Communities, "partition.json"),
        &PartitionArtifact {
            node_ids: proj.node_ids.clone(),
            partition,
        },
    )
}

fn read_label_rows(path: &Path) -> Result<Vec<(String, String)>> {
    Ok(read_labels_csv(open_artifact(path)?)?)
}

fn stage_propagate(cfg: &Config, seed: u64) -> Result<()> {
    let dproj = read_projection(cfg, "directed_projection")?;
    let seed_rows = read_label_rows(&artifact(cfg, Stage::Communities, "seeds.csv"))?;
    let mut seeds = Vec::with_capacity(seed_rows.len());
    for (id, label) in &seed_rows {
        let k = dproj.index_of(id).ok_or_else(|| {
            PipelineError::Validation(format!("seed {id} is not in the directed projection"))
        })?;
        seeds.push((k, label.as_str()));
    }
    if seeds.is_empty() {
        return Err(PipelineError::Validation(
            "no seed labels to propagate".into(),
        ));
    }
    let adj = dproj.undirected_adjacency();
    let start = LabelAssignment::from_seeds(adj.len(), &seeds)?;
    let labels = propagate_labels(
        &adj,
        &start,
        PropagationOptions {
            max_sweeps: cfg.max_sweeps,
            seed,
        },
    )?;
    if !labels.converged {
        log::warn!(
            "label propagation stopped after {} sweeps without converging",
            labels.sweeps
        );
    }
    let rows: Vec<(String, String)> = (0..labels.len())
        .filter_map(|k| {
            labels
                .label(k)
                .map(|l| (dproj.node_ids[k].clone(), l.to_string()))
        })
        .collect();
    log::info!(
        "propagation: {} of {} users labelled",
        rows.len(),
        labels.len()
    );
    write_with(&artifact(cfg, Stage::Propagate, "labels.csv"), |w| {
        Ok(write_labels_csv(w, &rows)?)
    })?;
    write_json(
        &artifact(cfg, Stage::Propagate, "labels.json"),
        &LabelsArtifact {
            node_ids: dproj.node_ids.clone(),
            seeds: seeds.len(),
            labelled: rows.len(),
            unreachable: labels.len() - rows.len(),
            assignment: labels,
        },
    )
}

#[derive(Debug, Serialize)]
struct HubRow<'a> {
    node_id: &'a str,
    community: &'a str,
    hub: f64,
    authority: f64,
    hub_rank: usize,
    authority_rank: usize,
}

fn stage_hubs(cfg: &Config) -> Result<()> {
    let dproj = read_projection(cfg, "directed_projection")?;
    let labels: BTreeMap<String, String> =
        read_label_rows(&artifact(cfg, Stage::Propagate, "labels.csv"))?
            .into_iter()
            .collect();
    let scores = hits_scores(
        dproj.n_nodes(),
        &dproj.directed_edges(),
        cfg.hits_tol,
        nullnet_core::communities::hits::DEFAULT_MAX_ITER,
    )?;
    let hub_order = scores.hub_ranking();
    let mut auth_rank = vec![0; dproj.n_nodes()];
    for (r, &k) in scores.authority_ranking().iter().enumerate() {
        auth_rank[k] = r + 1;
    }
    write_with(&artifact(cfg, Stage::Hubs, "hubs.csv"), |w| {
        let mut out = csv::Writer::from_writer(w);
        for (r, &k) in hub_order.iter().enumerate() {
            let id = dproj.node_ids[k].as_str();
            out.serialize(HubRow {
                node_id: id,
                community: labels.get(id).map_or("", String::as_str),
                hub: scores.hub[k],
                authority: scores.authority[k],
                hub_rank: r + 1,
                authority_rank: auth_rank[k],
            })?;
        }
        out.flush().map_err(|e| PipelineError::io("hubs.csv", e))
    })
}

fn load_annotations(cfg: &Config) -> Result<BTreeMap<String, DomainAnnotation>> {
    match &cfg.annotations {
        None => {
            log::warn!("no annotation file configured; every domain is unclassified");
            Ok(BTreeMap::new())
        }
        Some(path) => {
            let f = File::open(path).map_err(|e| PipelineError::io(path, e))?;
            Ok(read_annotations(BufReader::new(f))?)
        }
    }
}

fn report_options(cfg: &Config, min_occurrence: usize) -> ReportOptions {
    ReportOptions {
        min_occurrence,
        keep_subdomains: cfg.keep_subdomains,
        split_by_type: true,
        top_domains: cfg.top_domains,
    }
}

/// Membership map used by a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    /// Louvain communities of verified users.
    Verified,
    /// Propagated labels on the directed projection.
    Directed,
}

impl FromStr for ReportKind {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verified" => Ok(Self::Verified),
            "directed" => Ok(Self::Directed),
            other => Err(PipelineError::Config(format!("unknown report {other:?}"))),
        }
    }
}

fn membership(cfg: &Config, kind: ReportKind) -> Result<(BTreeMap<String, String>, usize)> {
    let (path, min) = match kind {
        ReportKind::Verified => (
            artifact(cfg, Stage::Communities, "partition.csv"),
            cfg.min_occurrence_verified,
        ),
        ReportKind::Directed => (
            artifact(cfg, Stage::Propagate, "labels.csv"),
            cfg.min_occurrence_directed,
        ),
    };
    Ok((read_label_rows(&path)?.into_iter().collect(), min))
}

fn stage_report(cfg: &Config) -> Result<()> {
    let posts = read_posts(cfg)?;
    let annotations = load_annotations(cfg)?;
    for (kind, stem) in [
        (ReportKind::Verified, "reputability_verified"),
        (ReportKind::Directed, "reputability_directed"),
    ] {
        let (members, min) = membership(cfg, kind)?;
        let rows =
            aggregate_reputability(&posts, &members, &annotations, &report_options(cfg, min))?;
        write_json(
            &artifact(cfg, Stage::Report, &format!("{stem}.json")),
            &rows,
        )?;
        write_with(&artifact(cfg, Stage::Report, &format!("{stem}.csv")), |w| {
            Ok(write_community_reports_csv(w, &rows)?)
        })?;
    }
    let (members, min) = membership(cfg, ReportKind::Directed)?;
    let opts = report_options(cfg, min);
    let nr = nr_share_report(&posts, &members, &annotations, &opts)?;
    write_json(&artifact(cfg, Stage::Report, "nr_share.json"), &nr)?;
    write_with(&artifact(cfg, Stage::Report, "nr_share.csv"), |w| {
        Ok(write_nr_share_csv(w, &nr)?)
    })?;
    let series = timeseries_report(&posts, &annotations, cfg.bucket_seconds, &opts)?;
    write_with(&artifact(cfg, Stage::Report, "timeseries.csv"), |w| {
        Ok(write_timeseries_csv(w, &series)?)
    })
}

/// Runs one stage against the artifacts already under `cfg.out_dir`.
pub fn run_stage(cfg: &Config, stage: Stage) -> Result<()> {
    let seed = stage_seed(cfg.seed, stage);
    let res = match stage {
        Stage::Ingest => stage_ingest(cfg),
        Stage::Build => stage_build(cfg),
        Stage::Fit => stage_fit(cfg),
        Stage::Project => stage_project(cfg),
        Stage::Communities => stage_communities(cfg, seed),
        Stage::Propagate => stage_propagate(cfg, seed),
        Stage::Hubs => stage_hubs(cfg),
        Stage::Report => stage_report(cfg),
    };
    res.map_err(|e| PipelineError::Stage {
        stage: stage.name(),
        source: Box::new(e),
    })
}

fn collect_files(dir: &Path, base: &Path, out: &mut Vec<(String, PathBuf)>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| PipelineError::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(&path, base, out)?;
        } else {
            let rel = path.strip_prefix(base).expect("under base");
            let rel = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            out.push((rel, path));
        }
    }
    Ok(())
}

fn inventory(out_dir: &Path) -> Result<Vec<FileDigest>> {
    let mut files = Vec::new();
    for stage in Stage::ALL {
        let dir = out_dir.join(stage.dir());
        if dir.is_dir() {
            collect_files(&dir, out_dir, &mut files)?;
        }
    }
    files.sort();
    files
        .into_iter()
        .map(|(rel, path)| digest_file(&path, rel))
        .collect()
}

fn save_manifest(m: &mut RunManifest) -> Result<()> {
    m.outputs = inventory(&m.config.out_dir)?;
    write_json(&m.config.out_dir.join(MANIFEST), m)
}

/// Runs the stages from `from` (default: the first) to the last and writes
/// the manifest after each one. Earlier stages are marked as reused and
/// their artifacts must already exist.
pub fn run_pipeline(cfg: &Config, from: Option<Stage>) -> Result<RunManifest> {
    run_range(cfg, from.unwrap_or(Stage::Ingest), Stage::Report)
}

/// Runs the stages `from..=to`. Artifacts of later stages are left as they
/// are and marked as not run.
pub fn run_range(cfg: &Config, from: Stage, to: Stage) -> Result<RunManifest> {
    cfg.validate()?;
    if from > to {
        return Err(PipelineError::Config(format!(
            "stage {from} comes after {to}"
        )));
    }
    let _lock = WriterLock::acquire(&cfg.out_dir)?;
    let inputs = cfg
        .input
        .iter()
        .chain(cfg.annotations.iter())
        .map(|p| digest_file(p, p.display().to_string()))
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = RunManifest {
        version: 1,
        config: cfg.clone(),
        inputs,
        stages: Stage::ALL
            .iter()
            .map(|&stage| StageRecord {
                stage,
                status: if stage < from {
                    StageStatus::Reused
                } else {
                    StageStatus::NotRun
                },
                seed: stage_seed(cfg.seed, stage),
                seconds: 0.0,
                error: None,
            })
            .collect(),
        outputs: Vec::new(),
        complete: false,
    };
    for (k, stage) in Stage::ALL.into_iter().enumerate() {
        if stage < from || stage > to {
            continue;
        }
        let dir = cfg.out_dir.join(stage.dir());
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
        }
        log::info!("stage {stage}");
        let t = Instant::now();
        let res = run_stage(cfg, stage);
        let rec = &mut manifest.stages[k];
        rec.seconds = t.elapsed().as_secs_f64();
        match res {
            Ok(()) => rec.status = StageStatus::Done,
            Err(e) => {
                rec.status = StageStatus::Failed;
                rec.error = Some(e.to_string());
                save_manifest(&mut manifest)?;
                return Err(e);
            }
        }
        save_manifest(&mut manifest)?;
    }
    manifest.complete = to == Stage::Report;
    save_manifest(&mut manifest)?;
    Ok(manifest)
}

/// Differences between the recorded output inventory and the files on
/// disk.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IntegrityReport {
    pub checked: usize,
    pub missing: Vec<String>,
    pub changed: Vec<String>,
    pub unlisted: Vec<String>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty() && self.changed.is_empty() && self.unlisted.is_empty()
    }
}

/// Compares the files under `out_dir` against the manifest checksums.
pub fn verify_outputs(out_dir: &Path) -> Result<IntegrityReport> {
    let manifest = RunManifest::load(out_dir)?;
    let on_disk = inventory(out_dir)?;
    let disk: BTreeMap<&str, &FileDigest> = on_disk.iter().map(|d| (d.path.as_str(), d)).collect();
    let mut report = IntegrityReport {
        checked: manifest.outputs.len(),
        ..Default::default()
    };
    for d in &manifest.outputs {
        match disk.get(d.path.as_str()) {
            None => report.missing.push(d.path.clone()),
            Some(now) if now.sha256 != d.sha256 => report.changed.push(d.path.clone()),
            Some(_) => {}
        }
    }
    for d in &on_disk {
        if manifest.output(&d.path).is_none() {
            report.unlisted.push(d.path.clone());
        }
    }
    Ok(report)
}

/// One url occurrence behind a reputability report cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditRow {
    pub community: String,
    pub post_id: String,
    pub kind: &'static str,
    pub owner: String,
    pub url: String,
    pub domain: String,
    pub label: String,
    pub class: String,
}

/// Lists the store rows counted by a reputability report, one row per url
/// occurrence, optionally restricted to one community. Summing the rows by
/// community and class reproduces the report counts.
pub fn audit_rows(
    cfg: &Config,
    kind: ReportKind,
    community: Option<&str>,
) -> Result<Vec<AuditRow>> {
    use nullnet_core::reputability::DomainResolver;
    let posts = read_posts(cfg)?;
    let annotations = load_annotations(cfg)?;
    let (members, min) = membership(cfg, kind)?;
    let resolver = DomainResolver::new(&posts, &annotations, min, cfg.keep_subdomains)?;
    let mut out = Vec::new();
    for p in &posts {
        let Some(c) = members.get(p.owner()) else {
            continue;
        };
        if community.is_some_and(|want| want != c) {
            continue;
        }
        for url in &p.urls {
            let label = resolver.label(url);
            out.push(AuditRow {
                community: c.clone(),
                post_id: p.post_id.clone(),
                kind: p.kind().as_str(),
                owner: p.owner().to_string(),
                url: url.clone(),
                domain: resolver.domain(url).unwrap_or("").to_string(),
                label: label.as_str().to_string(),
                class: format!("{:?}", label.class()),
            });
        }
    }
    Ok(out)
}

pub fn write_audit_csv<W: Write>(w: W, rows: &[AuditRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush().map_err(|e| PipelineError::io("audit", e))
}
