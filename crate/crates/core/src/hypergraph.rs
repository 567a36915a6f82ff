//! Weighted hypergraphs over the player set.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::coalition::{Coalition, MAX_PLAYERS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperedge {
    pub members: Coalition,
    pub weight: f64,
}

impl Hyperedge {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// A weighted hypergraph with vertices `0..n`. Edges are nonempty, weights
/// are non-negative, and no two edges share a vertex set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<Hyperedge>,
}

impl Hypergraph {
    /// Validates the edges and merges duplicates by summing their weights.
    /// Edge order follows the first occurrence of each vertex set.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Coalition, f64)>,
    {
        if n > MAX_PLAYERS {
            return Err(Error::TooManyPlayers { what: "a hypergraph", players: n, limit: MAX_PLAYERS });
        }
        let universe = Coalition::full(n);
        let mut index: BTreeMap<Coalition, usize> = BTreeMap::new();
        let mut merged: Vec<Hyperedge> = Vec::new();
        for (members, weight) in edges {
            if members.is_empty() {
                return Err(Error::InvalidParameter("hyperedges must be nonempty".into()));
            }
            if !members.is_subset(&universe) {
                return Err(Error::InvalidParameter(format!("hyperedge {members:?} leaves the vertex range 0..{n}")));
            }
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::InvalidParameter(format!("hyperedge weight {weight} is not a non-negative real")));
            }
            match index.get(&members) {
                Some(&at) => merged[at].weight += weight,
                None => {
                    index.insert(members, merged.len());
                    merged.push(Hyperedge { members, weight });
                }
            }
        }
        Ok(Hypergraph { n, edges: merged })
    }

    pub fn vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    /// Weighted degree `d(i)`.
    pub fn degree(&self, vertex: usize) -> f64 {
        self.edges.iter().filter(|e| e.members.contains(vertex)).map(|e| e.weight).sum()
    }

    /// Vertices sharing at least one edge with `vertex`.
    pub fn neighbors(&self, vertex: usize) -> Coalition {
        self.edges
            .iter()
            .filter(|e| e.members.contains(vertex))
            .fold(Coalition::empty(), |acc, e| acc.union(&e.members))
            .without(vertex)
    }

    /// The same edges on `n + extra` vertices; the new vertices are isolated.
    pub fn padded(&self, extra: usize) -> Result<Self> {
        Hypergraph::new(self.n + extra, self.edges.iter().map(|e| (e.members, e.weight)))
    }

    pub fn max_edge_size(&self) -> usize {
        self.edges.iter().map(Hyperedge::size).max().unwrap_or(0)
    }
}
