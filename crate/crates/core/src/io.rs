//! JSON file formats for domains, graphs, tables and assignments.
//!
//! Coordinates are 1-based, set indices 0-based. A graph file lists each
//! undirected edge once as `[s, t, w]`; repeated entries add their weights.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::model::{Assignment, DPTable, Domain, LocalAssignment};
use crate::testgraph::{build_from_edges, TestGraph};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainFile {
    pub n: u32,
    pub sets: Vec<Vec<u32>>,
}

impl DomainFile {
    pub fn from_domain(dom: &Domain) -> Self {
        DomainFile {
            n: dom.n(),
            sets: dom.sets().iter().map(|s| s.coords().to_vec()).collect(),
        }
    }

    pub fn into_domain(self) -> Result<Arc<Domain>> {
        Ok(Arc::new(Domain::from_lists(self.n, self.sets)?))
    }
}

/// Hex SHA-256 of the compact JSON form of a domain; tables carry it to
/// detect being paired with the wrong domain.
pub fn domain_hash(dom: &Domain) -> String {
    let text = serde_json::to_string(&DomainFile::from_domain(dom)).expect("domain serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub domain: DomainFile,
    pub edges: Vec<(usize, usize, u32)>,
}

impl GraphFile {
    pub fn from_graph(graph: &TestGraph) -> Self {
        GraphFile {
            domain: DomainFile::from_domain(graph.domain()),
            edges: graph.undirected_edges().collect(),
        }
    }

    pub fn into_graph(self) -> Result<TestGraph> {
        build_from_edges(self.domain.into_domain()?, &self.edges)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableFile {
    pub domain_hash: String,
    pub values: Vec<Vec<u8>>,
}

fn bit(b: u8) -> Result<bool> {
    match b {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(invalid(format!("expected a bit, found {other}"))),
    }
}

impl TableFile {
    pub fn from_table(f: &DPTable) -> Self {
        TableFile {
            domain_hash: domain_hash(f.domain()),
            values: f
                .values()
                .iter()
                .map(|v| v.bits().iter().map(|&b| b as u8).collect())
                .collect(),
        }
    }

    /// Rebuilds the table over `dom`, rejecting a domain with a different hash.
    pub fn into_table(self, dom: &Arc<Domain>) -> Result<DPTable> {
        let expected = domain_hash(dom);
        if self.domain_hash != expected {
            return Err(invalid(format!(
                "table was written for domain {} but the given domain hashes to {expected}",
                self.domain_hash
            )));
        }
        let values = self
            .values
            .into_iter()
            .map(|v| Ok(LocalAssignment::new(v.into_iter().map(bit).collect::<Result<_>>()?)))
            .collect::<Result<Vec<_>>>()?;
        DPTable::new(Arc::clone(dom), values)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentFile {
    pub bits: Vec<u8>,
}

impl AssignmentFile {
    pub fn from_assignment(a: &Assignment) -> Self {
        AssignmentFile { bits: a.bits().iter().map(|&b| b as u8).collect() }
    }

    pub fn into_assignment(self) -> Result<Assignment> {
        Ok(Assignment::new(self.bits.into_iter().map(bit).collect::<Result<_>>()?))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dp_encode;
    use crate::testgraph::build_sliding_window;

    #[test]
    fn graph_round_trip() {
        let (_, g) = build_sliding_window(7, 3, false).unwrap();
        let text = serde_json::to_string(&GraphFile::from_graph(&g)).unwrap();
        let back: GraphFile = serde_json::from_str(&text).unwrap();
        let h = back.into_graph().unwrap();
        assert_eq!(h.undirected_edges().collect::<Vec<_>>(), g.undirected_edges().collect::<Vec<_>>());
        assert_eq!(**h.domain(), **g.domain());
    }

    #[test]
    fn table_hash_is_checked() {
        let (dom, _) = build_sliding_window(7, 3, false).unwrap();
        let (other, _) = build_sliding_window(7, 2, false).unwrap();
        let f = dp_encode(&Assignment::from_index(0b1010011, 7), &dom).unwrap();
        let file = TableFile::from_table(&f);
        assert_eq!(file.clone().into_table(&dom).unwrap(), f);
        assert!(file.into_table(&other).is_err());
    }

    #[test]
    fn rejects_non_bits() {
        assert!(AssignmentFile { bits: vec![0, 2] }.into_assignment().is_err());
    }
}
