use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use nullnet::config::Config;
use nullnet::ingest::{write_records, TweetRecord};
use nullnet::pipeline::{
    audit_rows, run_pipeline, verify_outputs, ReportKind, RunManifest, Stage, StageStatus,
};
use nullnet::synth::{generate, Fixture, FixtureConfig};
use nullnet_core::reputability::{CommunityReport, ReportScope};

fn small_fixture() -> Fixture {
    generate(&FixtureConfig {
        community_sizes: vec![240, 180, 150, 120],
        nr_propensity: vec![0.5, 0.05, 0.25, 0.1],
        verified_fraction: 0.15,
        ..FixtureConfig::default()
    })
    .unwrap()
}

fn setup(dir: &Path) -> (Fixture, Config) {
    let f = small_fixture();
    let cfg = f.write(dir, 3).unwrap();
    (f, cfg)
}

fn digests(m: &RunManifest) -> BTreeMap<String, String> {
    m.outputs
        .iter()
        .map(|d| (d.path.clone(), d.sha256.clone()))
        .collect()
}

#[test]
fn full_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = setup(dir.path());
    let m = run_pipeline(&cfg, None).unwrap();
    assert!(m.complete);
    assert!(m.stages.iter().all(|s| s.status == StageStatus::Done));
    for file in [
        "store/tweets.jsonl",
        "build/verified_edges.csv",
        "build/user_post_links.csv",
        "fit/bicm.json",
        "fit/bidcm.json",
        "project/verified_projection.csv",
        "project/directed_projection.csv",
        "communities/partition.csv",
        "communities/subcommunities.csv",
        "communities/seeds.csv",
        "propagate/labels.csv",
        "hubs/hubs.csv",
        "report/reputability_verified.csv",
        "report/reputability_directed.csv",
        "report/nr_share.csv",
        "report/timeseries.csv",
    ] {
        assert!(m.output(file).is_some(), "{file} missing from manifest");
    }
    assert_eq!(m.inputs.len(), 2);
    assert!(verify_outputs(&cfg.out_dir).unwrap().is_clean());
    assert!(!cfg.out_dir.join(".lock").exists());
}

#[test]
fn resume_regenerates_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = setup(dir.path());
    let first = digests(&run_pipeline(&cfg, None).unwrap());
    for stage in [
        Stage::Communities,
        Stage::Propagate,
        Stage::Hubs,
        Stage::Report,
    ] {
        std::fs::remove_dir_all(cfg.out_dir.join(stage.dir())).unwrap();
    }
    let m = run_pipeline(&cfg, Some(Stage::Communities)).unwrap();
    assert_eq!(m.stages[0].status, StageStatus::Reused);
    assert_eq!(m.stages[4].status, StageStatus::Done);
    assert_eq!(digests(&m), first);
}

#[test]
fn resume_without_earlier_artifacts_fails() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = setup(dir.path());
    let err = run_pipeline(&cfg, Some(Stage::Fit)).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let m = RunManifest::load(&cfg.out_dir).unwrap();
    assert!(!m.complete);
    assert_eq!(m.stages[2].status, StageStatus::Failed);
    assert_eq!(m.stages[3].status, StageStatus::NotRun);
}

#[test]
fn nr_concentration_matches_planted_mixture() {
    let dir = tempfile::tempdir().unwrap();
    let (fixture, cfg) = setup(dir.path());
    run_pipeline(&cfg, None).unwrap();
    let planted = fixture.planted_nr_share();
    let rows: Vec<CommunityReport> = serde_json::from_reader(
        std::fs::File::open(cfg.out_dir.join("report/reputability_directed.json")).unwrap(),
    )
    .unwrap();
    // map every propagated label to the planted community of most members
    let labels: BTreeMap<String, String> = audit_rows(&cfg, ReportKind::Directed, None)
        .unwrap()
        .into_iter()
        .map(|r| (r.owner, r.community))
        .collect();
    let mut votes: BTreeMap<&str, BTreeMap<usize, usize>> = BTreeMap::new();
    for (user, label) in &labels {
        *votes
            .entry(label)
            .or_default()
            .entry(fixture.truth[user])
            .or_default() += 1;
    }
    let mut matched = 0;
    for (label, v) in &votes {
        let (&c, _) = v.iter().max_by_key(|(_, &n)| n).unwrap();
        let row = rows
            .iter()
            .find(|r| r.community == *label && r.scope == ReportScope::All)
            .unwrap();
        let nr = row.percentages[2];
        assert!(
            (nr - planted[c]).abs() <= 2.0,
            "{label}: report {nr:.2}%, planted {:.2}%",
            planted[c]
        );
        matched += 1;
    }
    assert!(matched >= 4);
}

#[test]
fn audit_rows_reproduce_report_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = setup(dir.path());
    run_pipeline(&cfg, None).unwrap();
    for (kind, file) in [
        (ReportKind::Verified, "report/reputability_verified.json"),
        (ReportKind::Directed, "report/reputability_directed.json"),
    ] {
        let rows: Vec<CommunityReport> =
            serde_json::from_reader(std::fs::File::open(cfg.out_dir.join(file)).unwrap()).unwrap();
        let audit = audit_rows(&cfg, kind, None).unwrap();
        for r in rows.iter().filter(|r| r.scope == ReportScope::All) {
            let mine: Vec<_> = audit
                .iter()
                .filter(|a| a.community == r.community)
                .collect();
            assert_eq!(mine.len(), r.url_count);
            let nr = mine.iter().filter(|a| a.class == "NR").count();
            assert_eq!(nr, r.counts.nr);
        }
        let one = audit_rows(&cfg, kind, Some("c0")).unwrap();
        assert!(one.iter().all(|a| a.community == "c0"));
    }
}

#[test]
fn tampered_output_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = setup(dir.path());
    run_pipeline(&cfg, None).unwrap();
    std::fs::write(cfg.out_dir.join("report/nr_share.csv"), "x\n").unwrap();
    std::fs::write(cfg.out_dir.join("report/extra.txt"), "x\n").unwrap();
    let r = verify_outputs(&cfg.out_dir).unwrap();
    assert_eq!(r.changed, vec!["report/nr_share.csv".to_string()]);
    assert_eq!(r.unlisted, vec!["report/extra.txt".to_string()]);
}

#[test]
fn stage_failure_leaves_partial_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let recs = vec![
        TweetRecord {
            post_id: "1".into(),
            author_id: "a".into(),
            author_verified: false,
            retweet_of: None,
            timestamp: 0,
            urls: vec![],
            lang: None,
            text: None,
        },
        TweetRecord {
            post_id: "2".into(),
            author_id: "b".into(),
            author_verified: false,
            retweet_of: Some("1".into()),
            timestamp: 10,
            urls: vec![],
            lang: None,
            text: None,
        },
    ];
    let input = dir.path().join("tweets.jsonl");
    write_records(&input, &recs).unwrap();
    let cfg = Config::new(vec![input], dir.path().join("run"));
    let err = run_pipeline(&cfg, None).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let m = RunManifest::load(&cfg.out_dir).unwrap();
    assert_eq!(m.stages[0].status, StageStatus::Done);
    assert_eq!(m.stages[1].status, StageStatus::Failed);
    assert!(m.stages[1].error.as_deref().unwrap().contains("verified"));
    assert!(m.output("store/tweets.jsonl").is_some());
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_nullnet");
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    let st = Command::new(bin)
        .args(["synth", "--out"])
        .arg(&fx)
        .args(["--sizes", "60,50,40", "--seed", "5"])
        .status()
        .unwrap();
    assert!(st.success());
    let cfg = fx.join("config.toml");
    for stage in ["ingest", "build", "fit", "project"] {
        let st = Command::new(bin)
            .arg(stage)
            .arg("--config")
            .arg(&cfg)
            .status()
            .unwrap();
        assert!(st.success(), "{stage}");
    }
    let st = Command::new(bin)
        .args(["run", "--from-stage", "communities", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(st.success());
    let out = Command::new(bin)
        .args(["audit", "--verify", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "input = [\"fx/tweets.jsonl\"]\nalpha = 2.0\n").unwrap();
    let st = Command::new(bin)
        .arg("run")
        .arg("--config")
        .arg(&bad)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let st = Command::new(bin)
        .args(["run", "--from-stage", "hubs", "--config"])
        .arg(dir.path().join("missing.toml"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let fresh = dir.path().join("fresh.toml");
    std::fs::write(
        &fresh,
        "input = [\"fx/tweets.jsonl\"]\nout-dir = \"fresh\"\n",
    )
    .unwrap();
    let st = Command::new(bin)
        .args(["run", "--from-stage", "hubs", "--config"])
        .arg(&fresh)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(3));
}
