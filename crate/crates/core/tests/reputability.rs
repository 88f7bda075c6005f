use std::collections::BTreeMap;

use nullnet_core::reputability::{
    aggregate_reputability, extract_domain, fleiss_kappa, score_to_label, AnnotationSource,
    DomainAnnotation, LabelClass, PostRow, ReportOptions, ReputabilityLabel,
};
use proptest::prelude::*;
use serde_json::Value;

fn rank(l: ReputabilityLabel) -> u8 {
    match l {
        ReputabilityLabel::NR => 0,
        ReputabilityLabel::QR => 1,
        ReputabilityLabel::R => 2,
        other => panic!("score mapped to {other}"),
    }
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 128,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

const DOMAINS: [&str; 6] = [
    "good.it",
    "meh.it",
    "bad.it",
    "social.com",
    "other.org",
    "bbc.co.uk",
];

fn annotations() -> BTreeMap<String, DomainAnnotation> {
    [
        ("good.it", ReputabilityLabel::R),
        ("meh.it", ReputabilityLabel::QR),
        ("bad.it", ReputabilityLabel::NR),
        ("social.com", ReputabilityLabel::S),
        ("bbc.co.uk", ReputabilityLabel::R),
    ]
    .into_iter()
    .map(|(d, l)| {
        (
            d.to_string(),
            DomainAnnotation::new(d, None, Some(l), AnnotationSource::Manual).unwrap(),
        )
    })
    .collect()
}

fn post_strategy() -> impl Strategy<Value = PostRow> {
    (
        0usize..6,
        prop::option::of(0usize..6),
        prop::collection::vec((0usize..DOMAINS.len(), 0u8..4, any::<bool>()), 0..5),
    )
        .prop_map(|(author, rt, urls)| PostRow {
            post_id: String::new(),
            author_id: format!("u{author}"),
            retweeter_id: rt.map(|r| format!("u{r}")),
            timestamp: Value::from(0),
            urls: urls
                .into_iter()
                .map(|(d, path, malformed)| {
                    if malformed {
                        format!("{}/{path}", DOMAINS[d])
                    } else {
                        format!("https://www.{}/{path}", DOMAINS[d])
                    }
                })
                .collect(),
        })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn score_to_label_is_monotone(a in 0.0f64..=100.0, b in 0.0f64..=100.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(rank(score_to_label(lo).unwrap()) <= rank(score_to_label(hi).unwrap()));
    }

    #[test]
    fn extract_domain_is_idempotent(
        sub in prop::option::of("(www|m|news|it)"),
        name in "[a-z][a-z0-9]{0,10}",
        suffix in "(com|it|org|co\\.uk|com\\.au|net)",
        path in "(/[a-z0-9]{0,6}){0,3}",
        keep in any::<bool>(),
    ) {
        let host = match sub {
            Some(s) => format!("{s}.{name}.{suffix}"),
            None => format!("{name}.{suffix}"),
        };
        let d = extract_domain(&format!("https://{host}{path}"), keep).unwrap();
        prop_assert_eq!(extract_domain(&format!("https://{d}"), keep).unwrap(), d.clone());
        if !keep {
            prop_assert_eq!(d, format!("{name}.{suffix}"));
        }
    }

    #[test]
    fn kappa_is_bounded(
        raters in 2usize..8,
        rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 1..12),
    ) {
        // split `raters` votes over 3 categories from random weights
        let table: Vec<Vec<usize>> = rows
            .iter()
            .map(|w| {
                let a = (w[0] * (raters + 1) as f64).floor().min(raters as f64) as usize;
                let b = ((w[1] * (raters - a + 1) as f64).floor() as usize).min(raters - a);
                vec![a, b, raters - a - b]
            })
            .collect();
        let k = fleiss_kappa(&table).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&k), "kappa {k}");
        let unanimous = table.iter().all(|r| r.iter().filter(|&&c| c > 0).count() == 1);
        prop_assert_eq!(unanimous, (k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aggregation_conserves_counts(
        posts in prop::collection::vec(post_strategy(), 1..40),
        min_occurrence in 1usize..5,
    ) {
        let membership: BTreeMap<String, String> = (0..6)
            .map(|u| (format!("u{u}"), if u < 3 { "A".into() } else { "B".into() }))
            .collect();
        let opts = ReportOptions { min_occurrence, split_by_type: true, ..ReportOptions::default() };
        let rows = aggregate_reputability(&posts, &membership, &annotations(), &opts).unwrap();
        let total_urls: usize = posts.iter().map(|p| p.urls.len()).sum();
        let mut all_scope = 0;
        for r in &rows {
            let sum: usize = LabelClass::ALL.iter().map(|&c| r.counts.get(c)).sum();
            prop_assert_eq!(sum, r.url_count);
            let pct: f64 = r.percentages.iter().sum();
            prop_assert!((pct - 100.0).abs() < 0.1);
            if r.scope == nullnet_core::reputability::ReportScope::All {
                all_scope += r.url_count;
            }
        }
        prop_assert_eq!(all_scope, total_urls);
        for c in ["A", "B"] {
            let get = |s| rows.iter().find(|r| r.community == c && r.scope == s).unwrap();
            use nullnet_core::reputability::ReportScope::*;
            prop_assert_eq!(get(All).url_count, get(Tweet).url_count + get(Retweet).url_count);
            prop_assert_eq!(get(All).posts, get(Tweet).posts + get(Retweet).posts);
        }
    }
}
