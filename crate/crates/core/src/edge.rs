use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = u32;

/// Vertex levels live in `[-1, L]`, edge levels in `[0, L]`.
pub type Level = i32;

/// Canonical identity of a hyperedge: its endpoints, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey(Box<[VertexId]>);

impl EdgeKey {
    pub fn vertices(&self) -> &[VertexId] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn intersects(&self, other: &EdgeKey) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// Sorts and deduplicates `vertices` into an [`EdgeKey`] of rank at most `max_rank`.
pub fn canonical_edge(vertices: &[VertexId], max_rank: usize) -> Result<EdgeKey> {
    if vertices.is_empty() {
        return Err(Error::EmptyEdge);
    }
    let mut vs = vertices.to_vec();
    vs.sort_unstable();
    vs.dedup();
    if vs.len() > max_rank {
        return Err(Error::RankExceeded { got: vs.len(), max: max_rank });
    }
    Ok(EdgeKey(vs.into_boxed_slice()))
}

/// Dense internal handle for a hyperedge slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub(crate) u32);

impl EdgeId {
    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }
}

/// Where a known hyperedge currently lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeLocation {
    Active,
    /// Parked in `D(parent)` of a matched edge.
    TempDeleted(EdgeKey),
    Absent,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorts_and_dedups() {
        assert_eq!(canonical_edge(&[3, 1, 2], 3).unwrap().vertices(), &[1, 2, 3]);
        assert_eq!(canonical_edge(&[5, 5], 2).unwrap().vertices(), &[5]);
        assert_eq!(
            canonical_edge(&[2, 1], 2).unwrap(),
            canonical_edge(&[1, 2, 2, 1], 2).unwrap()
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(canonical_edge(&[], 2), Err(Error::EmptyEdge));
        assert_eq!(canonical_edge(&[1, 2, 3], 2), Err(Error::RankExceeded { got: 3, max: 2 }));
        // duplicates do not count toward the rank
        assert!(canonical_edge(&[1, 2, 2], 2).is_ok());
    }

    #[test]
    fn intersection_and_display() {
        let a = canonical_edge(&[1, 4, 9], 3).unwrap();
        let b = canonical_edge(&[2, 9], 3).unwrap();
        let c = canonical_edge(&[2, 3], 3).unwrap();
        assert!(a.intersects(&b));
        assert!(!a.intersects(&c));
        assert_eq!(a.to_string(), "(1,4,9)");
    }
}
