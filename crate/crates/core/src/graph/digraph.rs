use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Default node-count cap for the exact longest-simple-path search.
pub const DEFAULT_PATH_SEARCH_CAP: usize = 12;

/// Directed graph on nodes `0..n`.
///
/// An arc `(j, i)` means "`j` is a neighbor of `i`": information flows from
/// `j` to `i`, so `i` is reachable from `j`. Self-loops are never stored;
/// every node is treated as reachable from itself by the reachability logic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDigraph", into = "RawDigraph")]
pub struct Digraph {
    n: usize,
    arcs: BTreeSet<(usize, usize)>,
    bidirectional: bool,
}

#[derive(Serialize, Deserialize)]
struct RawDigraph {
    n: usize,
    arcs: Vec<(usize, usize)>,
}

impl TryFrom<RawDigraph> for Digraph {
    type Error = crate::error::Error;

    fn try_from(raw: RawDigraph) -> Result<Self> {
        Digraph::new(raw.n, raw.arcs)
    }
}

impl From<Digraph> for RawDigraph {
    fn from(g: Digraph) -> Self {
        RawDigraph {
            n: g.n,
            arcs: g.arcs.into_iter().collect(),
        }
    }
}

impl Digraph {
    /// Builds a digraph from `(from, to)` arcs with 0-based node indices.
    /// The bidirectional flag is set exactly when the arc set is symmetric.
    pub fn new(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return domain("a digraph needs at least one node");
        }
        let mut set = BTreeSet::new();
        for (j, i) in arcs {
            if j >= n || i >= n {
                return domain(format!("arc ({j}, {i}) references a node outside 0..{n}"));
            }
            if j == i {
                return domain(format!("self-loop ({j}, {i}) is not allowed"));
            }
            set.insert((j, i));
        }
        let bidirectional = set.iter().all(|&(j, i)| set.contains(&(i, j)));
        Ok(Digraph {
            n,
            arcs: set,
            bidirectional,
        })
    }

    /// Builds a bidirectional graph, inserting both directions of every edge.
    pub fn undirected(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let both: Vec<_> = edges
            .into_iter()
            .flat_map(|(a, b)| [(a, b), (b, a)])
            .collect();
        Digraph::new(n, both)
    }

    pub fn empty(n: usize) -> Result<Self> {
        Digraph::new(n, std::iter::empty())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &BTreeSet<(usize, usize)> {
        &self.arcs
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_bidirectional(&self) -> bool {
        self.bidirectional
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.arcs.contains(&(from, to))
    }

    /// Neighbors of `i`: every `j` with an arc `(j, i)`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.arcs
            .iter()
            .filter(move |&&(_, to)| to == i)
            .map(|&(j, _)| j)
    }

    pub fn union(&self, other: &Digraph) -> Result<Digraph> {
        if self.n != other.n {
            return domain(format!(
                "cannot unite graphs on {} and {} nodes",
                self.n, other.n
            ));
        }
        Digraph::new(self.n, self.arcs.iter().chain(other.arcs.iter()).copied())
    }

    pub(crate) fn out_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(j, i) in &self.arcs {
            adj[j].push(i);
        }
        adj
    }

    /// Nodes reachable from `src` (including `src` itself).
    pub fn reachable_from(&self, src: usize) -> Vec<bool> {
        bfs_reach(&self.out_adjacency(), src)
    }

    /// Breadth-first shortest directed path length from `i` to `j`.
    pub fn shortest_distance(&self, i: usize, j: usize) -> Option<usize> {
        let adj = self.out_adjacency();
        let mut dist = vec![usize::MAX; self.n];
        dist[i] = 0;
        let mut queue = VecDeque::from([i]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        (dist[j] != usize::MAX).then_some(dist[j])
    }
}

fn bfs_reach(adj: &[Vec<usize>], src: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    seen[src] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    seen
}

/// True iff every ordered node pair is joined by a directed path.
pub fn is_strongly_connected(g: &Digraph) -> bool {
    let forward = g.reachable_from(0);
    if !forward.iter().all(|&r| r) {
        return false;
    }
    let mut reverse = vec![Vec::new(); g.n];
    for &(j, i) in &g.arcs {
        reverse[i].push(j);
    }
    bfs_reach(&reverse, 0).iter().all(|&r| r)
}

/// Centers (roots): nodes from which every node is reachable.
pub fn find_centers(g: &Digraph) -> BTreeSet<usize> {
    let adj = g.out_adjacency();
    (0..g.n)
        .filter(|&v| bfs_reach(&adj, v).iter().all(|&r| r))
        .collect()
}

pub fn is_quasi_strongly_connected(g: &Digraph) -> bool {
    let adj = g.out_adjacency();
    (0..g.n).any(|v| bfs_reach(&adj, v).iter().all(|&r| r))
}

/// Connectivity of a bidirectional graph, ignoring arc direction.
pub fn is_connected_undirected(g: &Digraph) -> bool {
    let mut adj = vec![Vec::new(); g.n];
    for &(j, i) in &g.arcs {
        adj[j].push(i);
        adj[i].push(j);
    }
    bfs_reach(&adj, 0).iter().all(|&r| r)
}

/// All-pairs longest simple path lengths, `None` where unreachable.
///
/// Exact dynamic program over (visited set, endpoint) states, run once per
/// source: `O(n^2 2^n)` per source. Refuses graphs above `cap` nodes.
pub fn longest_path_table(g: &Digraph, cap: usize) -> Result<Vec<Vec<Option<usize>>>> {
    if g.n > cap {
        return domain(format!(
            "longest simple path search is exponential; {} nodes exceeds the cap of {cap}",
            g.n
        ));
    }
    if g.n > 24 {
        return domain("longest simple path search limited to 24 nodes");
    }
    let n = g.n;
    let adj = g.out_adjacency();
    let full = 1usize << n;
    let mut table = vec![vec![None; n]; n];
    // reach[mask] holds a bitset of endpoints v such that a simple path from
    // the source visiting exactly `mask` ends at v.
    let mut reach = vec![0u32; full];
    for src in 0..n {
        reach.iter_mut().for_each(|r| *r = 0);
        reach[1 << src] = 1 << src;
        let mut best = vec![None::<usize>; n];
        for mask in 0..full {
            let ends = reach[mask];
            if ends == 0 {
                continue;
            }
            let len = mask.count_ones() as usize - 1;
            for v in 0..n {
                if ends & (1 << v) == 0 {
                    continue;
                }
                if best[v].is_none_or(|b| len > b) {
                    best[v] = Some(len);
                }
                for &u in &adj[v] {
                    if mask & (1 << u) == 0 {
                        reach[mask | (1 << u)] |= 1 << u;
                    }
                }
            }
        }
        table[src] = best;
    }
    Ok(table)
}

/// Length of the longest simple directed path from `i` to `j`; `Some(0)` when
/// `i == j` and `None` when `j` is unreachable from `i`.
pub fn generalized_distance(g: &Digraph, i: usize, j: usize) -> Result<Option<usize>> {
    if i >= g.n || j >= g.n {
        return domain(format!("node index out of range 0..{}", g.n));
    }
    if i == j {
        return Ok(Some(0));
    }
    Ok(longest_path_table(g, DEFAULT_PATH_SEARCH_CAP)?[i][j])
}

/// Maximum generalized distance over all reachable ordered pairs.
pub fn generalized_diameter(g: &Digraph) -> Result<usize> {
    generalized_diameter_with_cap(g, DEFAULT_PATH_SEARCH_CAP)
}

pub fn generalized_diameter_with_cap(g: &Digraph, cap: usize) -> Result<usize> {
    let table = longest_path_table(g, cap)?;
    Ok(table
        .iter()
        .flat_map(|row| row.iter().flatten())
        .copied()
        .max()
        .unwrap_or(0))
}
