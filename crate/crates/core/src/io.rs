//! CSV formats for graphs, projections and node labels.
//!
//! Every writer emits a header row and RFC 4180 quoting; readers require the
//! same header names.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, DirectedBipartiteGraph, LinkKind};
use crate::projection::ValidatedProjection;

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRecord {
    left_id: String,
    right_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct LinkRecord {
    user_id: String,
    post_id: String,
    kind: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRecord {
    node_id: String,
    community: String,
}

/// Reads a `left_id,right_id` edge list.
pub fn read_bipartite_csv<R: Read>(reader: R) -> Result<BipartiteGraph> {
    let mut rdr = csv::Reader::from_reader(reader);
    let edges = rdr
        .deserialize::<EdgeRecord>()
        .map(|r| r.map(|e| (e.left_id, e.right_id)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    BipartiteGraph::from_edges(&edges)
}

/// Writes the edges in index order.
pub fn write_bipartite_csv<W: Write>(writer: W, g: &BipartiteGraph) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (i, a) in g.edges() {
        w.serialize(EdgeRecord {
            left_id: g.left_ids()[i].clone(),
            right_id: g.right_ids()[a].clone(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `user_id,post_id,kind` link list, `kind` being `author` or
/// `retweet`.
pub fn read_directed_csv<R: Read>(reader: R) -> Result<DirectedBipartiteGraph> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut links = Vec::new();
    for rec in rdr.deserialize::<LinkRecord>() {
        let rec = rec?;
        let kind: LinkKind = rec.kind.parse()?;
        links.push((rec.user_id, rec.post_id, kind));
    }
    DirectedBipartiteGraph::from_links(&links)
}

/// Writes every link; stub posts appear through their retweet links only.
pub fn write_directed_csv<W: Write>(writer: W, g: &DirectedBipartiteGraph) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (u, p, kind) in g.links() {
        w.serialize(LinkRecord {
            user_id: g.user_ids()[u].clone(),
            post_id: g.post_ids()[p].clone(),
            kind: kind.as_str().to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// `source,target,observed,expected,p_value`, one line per validated edge.
pub fn write_projection_csv<W: Write>(writer: W, proj: &ValidatedProjection) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["source", "target", "observed", "expected", "p_value"])?;
    for e in &proj.edges {
        w.write_record([
            proj.node_ids[e.source].as_str(),
            proj.node_ids[e.target].as_str(),
            &e.stats.observed.to_string(),
            &format!("{:e}", e.stats.expected),
            &format!("{:e}", e.stats.p_value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `node_id,community` rows in the given order.
pub fn write_labels_csv<W: Write, S: AsRef<str>>(writer: W, rows: &[(S, S)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["node_id", "community"])?;
    for (n, c) in rows {
        w.write_record([n.as_ref(), c.as_ref()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `node_id,community` rows. A node listed twice is an error.
pub fn read_labels_csv<R: Read>(reader: R) -> Result<Vec<(String, String)>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for rec in rdr.deserialize::<LabelRecord>() {
        let rec = rec?;
        if !seen.insert(rec.node_id.clone()) {
            return Err(Error::InvalidInput(format!(
                "node {} labelled twice",
                rec.node_id
            )));
        }
        out.push((rec.node_id, rec.community));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bipartite_round_trip() {
        let g = BipartiteGraph::from_edges(&[("a", "x"), ("b", "y"), ("a", "y"), ("c,d", "x")])
            .unwrap();
        let mut buf = Vec::new();
        write_bipartite_csv(&mut buf, &g).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("left_id,right_id\n"));
        assert_eq!(read_bipartite_csv(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn directed_round_trip() {
        let g = DirectedBipartiteGraph::from_links(&[
            ("u", "p1", LinkKind::Author),
            ("v", "p1", LinkKind::Retweet),
            ("w", "p1", LinkKind::Retweet),
            ("w", "p9", LinkKind::Retweet),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_directed_csv(&mut buf, &g).unwrap();
        let back = read_directed_csv(buf.as_slice()).unwrap();
        assert_eq!(back.user_ids(), g.user_ids());
        assert_eq!(back.n_retweet_links(), 3);
        assert!(back.is_stub(1));
    }

    #[test]
    fn bad_kind_rejected() {
        let csv = "user_id,post_id,kind\nu,p,like\n";
        assert!(read_directed_csv(csv.as_bytes()).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let rows = vec![
            ("a".to_string(), "0".to_string()),
            ("b".into(), "1.2".into()),
        ];
        let mut buf = Vec::new();
        write_labels_csv(&mut buf, &rows).unwrap();
        assert_eq!(read_labels_csv(buf.as_slice()).unwrap(), rows);
        assert!(read_labels_csv("node_id,community\na,0\na,1\n".as_bytes()).is_err());
    }
}
