//! Static undirected sensor-network topologies.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Maximum number of fresh layouts drawn by [`NetworkTopology::generate_geometric`].
pub const MAX_GENERATION_ATTEMPTS: usize = 1000;

/// Undirected, loop-free, connected graph over `J` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    neighbors: Vec<Vec<usize>>,
    positions: Option<Vec<[f64; 2]>>,
}

/// Rectangular deployment region in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub width: f64,
    pub height: f64,
}

impl NetworkTopology {
    /// Builds a topology from an undirected edge list. Duplicate edges
    /// (in either orientation) collapse; self-loops, out-of-range ids and
    /// disconnected graphs are rejected.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidTopology("a network needs at least one node".into()));
        }
        let mut sets = vec![BTreeSet::new(); node_count];
        for &(s, j) in edges {
            for node in [s, j] {
                if node >= node_count {
                    return Err(Error::NodeOutOfRange {
                        node,
                        count: node_count,
                    });
                }
            }
            if s == j {
                return Err(Error::InvalidTopology(format!("self-loop on node {s}")));
            }
            sets[s].insert(j);
            sets[j].insert(s);
        }
        let topo = Self {
            neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            positions: None,
        };
        if !topo.is_connected() {
            return Err(Error::InvalidTopology("graph is not connected".into()));
        }
        Ok(topo)
    }

    /// Path `0 - 1 - ... - (J-1)`.
    pub fn line(node_count: usize) -> Result<Self> {
        let edges: Vec<_> = (1..node_count).map(|i| (i - 1, i)).collect();
        Self::from_edges(node_count, &edges)
    }

    /// Hub `0` connected to `leaves` leaf nodes.
    pub fn star(leaves: usize) -> Result<Self> {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Self::from_edges(leaves + 1, &edges)
    }

    pub fn complete(node_count: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for s in 0..node_count {
            for j in (s + 1)..node_count {
                edges.push((s, j));
            }
        }
        Self::from_edges(node_count, &edges)
    }

    pub fn ring(node_count: usize) -> Result<Self> {
        let mut edges: Vec<_> = (1..node_count).map(|i| (i - 1, i)).collect();
        if node_count > 2 {
            edges.push((node_count - 1, 0));
        }
        Self::from_edges(node_count, &edges)
    }

    /// Random geometric graph: `J` points uniform in `region`, an edge for
    /// every pair within `radius`. Layouts are redrawn until the graph is
    /// connected. Deterministic in `seed`.
    pub fn generate_geometric(
        node_count: usize,
        radius: f64,
        region: Region,
        seed: u64,
    ) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidParameter("node count must be at least 1".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "communication radius must be positive, got {radius}"
            )));
        }
        if !(region.width > 0.0 && region.height > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "region must have positive extent, got {}x{}",
                region.width, region.height
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_GENERATION_ATTEMPTS {
            let positions: Vec<[f64; 2]> = (0..node_count)
                .map(|_| {
                    [
                        rng.random::<f64>() * region.width,
                        rng.random::<f64>() * region.height,
                    ]
                })
                .collect();
            let neighbors = (0..node_count)
                .map(|s| {
                    (0..node_count)
                        .filter(|&j| j != s && distance(&positions[s], &positions[j]) <= radius)
                        .collect()
                })
                .collect();
            let topo = Self {
                neighbors,
                positions: Some(positions),
            };
            if topo.is_connected() {
                return Ok(topo);
            }
        }
        Err(Error::GenerationFailed {
            attempts: MAX_GENERATION_ATTEMPTS,
        })
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Neighbor set of `s` (never contains `s`), sorted ascending.
    pub fn neighbors(&self, s: usize) -> Result<&[usize]> {
        self.neighbors
            .get(s)
            .map(Vec::as_slice)
            .ok_or(Error::NodeOutOfRange {
                node: s,
                count: self.node_count(),
            })
    }

    pub(crate) fn neighbors_of(&self, s: usize) -> &[usize] {
        &self.neighbors[s]
    }

    pub fn degree(&self, s: usize) -> Result<usize> {
        self.neighbors(s).map(<[usize]>::len)
    }

    /// Largest neighbor count over all nodes (0 for a single node).
    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    /// Undirected edges `(s, j)` with `s < j`, lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (s, nbrs) in self.neighbors.iter().enumerate() {
            out.extend(nbrs.iter().filter(|&&j| j > s).map(|&j| (s, j)));
        }
        out
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == n
    }

    /// One `"s j"` line per undirected edge, 0-based, `s < j`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (s, j) in self.edges() {
            let _ = writeln!(out, "{s} {j}");
        }
        out
    }

    /// Parses the format written by [`to_edge_list`](Self::to_edge_list).
    /// Blank lines and `#` comments are ignored.
    pub fn from_edge_list(node_count: usize, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ids: Vec<usize> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidTopology(format!("edge list line {}: {e}", i + 1)))?;
            match ids.as_slice() {
                [s, j] => edges.push((*s, *j)),
                _ => {
                    return Err(Error::InvalidTopology(format!(
                        "edge list line {}: expected two node ids",
                        i + 1
                    )))
                }
            }
        }
        Self::from_edges(node_count, &edges)
    }
}

fn distance(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
