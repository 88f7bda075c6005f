//! Domain extraction from URLs.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use url::{Host, Url};

use crate::error::{Error, Result};

static SUFFIX_LIST: &str = include_str!("public_suffixes.txt");

fn suffixes() -> &'static BTreeSet<&'static str> {
    static SET: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        SUFFIX_LIST
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

/// Number of labels of the public suffix of `host`.
fn suffix_labels(labels: &[&str]) -> usize {
    let set = suffixes();
    for take in (2..labels.len()).rev() {
        let candidate = labels[labels.len() - take..].join(".");
        if set.contains(candidate.as_str()) {
            return take;
        }
    }
    // the whole host may itself be a listed suffix
    if labels.len() >= 2 && set.contains(labels.join(".").as_str()) {
        return labels.len();
    }
    1
}

/// Registrable domain: the public suffix plus one label.
pub fn registrable_domain(host: &str) -> String {
    let labels: Vec<&str> = host.split('.').collect();
    let keep = (suffix_labels(&labels) + 1).min(labels.len());
    labels[labels.len() - keep..].join(".")
}

/// Strips leading `www.` labels as long as something registrable is left.
fn strip_www(host: &str) -> &str {
    let mut h = host;
    while let Some(rest) = h.strip_prefix("www.") {
        let labels: Vec<&str> = rest.split('.').collect();
        if labels.len() <= suffix_labels(&labels) {
            break;
        }
        h = rest;
    }
    h
}

/// Lowercased domain of an absolute URL.
///
/// By default the registrable domain is returned, so `www.` and `m.`
/// mirrors collapse onto their parent. With `keep_subdomains` only `www.` is
/// removed and every other subdomain is kept (`m.example.it` stays
/// distinct from `example.it`).
pub fn extract_domain(url: &str, keep_subdomains: bool) -> Result<String> {
    let parsed = Url::parse(url.trim()).map_err(|_| Error::MalformedUrl(url.to_string()))?;
    let host = match parsed.host() {
        Some(Host::Domain(d)) => d.trim_end_matches('.').to_ascii_lowercase(),
        Some(Host::Ipv4(ip)) => return Ok(ip.to_string()),
        Some(Host::Ipv6(ip)) => return Ok(ip.to_string()),
        None => return Err(Error::MalformedUrl(url.to_string())),
    };
    if host.is_empty() || host.split('.').any(str::is_empty) {
        return Err(Error::MalformedUrl(url.to_string()));
    }
    Ok(if keep_subdomains {
        strip_www(&host).to_string()
    } else {
        registrable_domain(&host)
    })
}
