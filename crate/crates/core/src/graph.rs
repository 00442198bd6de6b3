//! Adjacency-list graph over dense node ids, plus the traversal and topology
//! edits the ranking algorithms and experiments need.
//!
//! Undirected input is stored as a pair of opposite arcs, so every algorithm
//! downstream only deals with directed arcs.

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    out_edges: Vec<Vec<NodeId>>,
    in_edges: Vec<Vec<NodeId>>,
    directed: bool,
    labels: Vec<String>,
    arc_count: usize,
}

/// What was discarded while building a graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl Graph {
    /// Builds a graph from `(u, v)` pairs. In undirected mode each pair inserts both arcs.
    /// Self-loops and repeated arcs are dropped and counted.
    pub fn from_edges(
        node_count: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        directed: bool,
    ) -> Result<(Graph, LoadStats)> {
        let labels = (0..node_count).map(|i| i.to_string()).collect();
        Self::from_labeled_edges(labels, edges, directed)
    }

    pub fn from_labeled_edges(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        directed: bool,
    ) -> Result<(Graph, LoadStats)> {
        let n = labels.len();
        let mut stats = LoadStats::default();
        let mut out_edges = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n {
                return Err(Error::UnknownNode(u));
            }
            if v >= n {
                return Err(Error::UnknownNode(v));
            }
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            out_edges[u].push(v);
            if !directed {
                out_edges[v].push(u);
            }
        }
        let mut raw_arcs = 0;
        for list in &mut out_edges {
            raw_arcs += list.len();
            list.sort_unstable();
            list.dedup();
        }
        let graph = Self::from_adjacency(out_edges, directed, labels);
        let dropped = raw_arcs - graph.arc_count;
        stats.duplicates = if directed { dropped } else { dropped / 2 };
        Ok((graph, stats))
    }

    /// `out_edges` must already be sorted and free of duplicates and self-loops.
    fn from_adjacency(out_edges: Vec<Vec<NodeId>>, directed: bool, labels: Vec<String>) -> Graph {
        let n = out_edges.len();
        let mut in_edges = vec![Vec::new(); n];
        let mut arc_count = 0;
        for (u, list) in out_edges.iter().enumerate() {
            arc_count += list.len();
            for &v in list {
                in_edges[v].push(u);
            }
        }
        Graph {
            out_edges,
            in_edges,
            directed,
            labels,
            arc_count,
        }
    }

    pub fn node_count(&self) -> usize {
        self.out_edges.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arc_count
    }

    /// Number of undirected edges for undirected graphs, arcs otherwise.
    pub fn edge_count(&self) -> usize {
        if self.directed {
            self.arc_count
        } else {
            self.arc_count / 2
        }
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn successors(&self, u: NodeId) -> &[NodeId] {
        &self.out_edges[u]
    }

    pub fn predecessors(&self, u: NodeId) -> &[NodeId] {
        &self.in_edges[u]
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_edges[u].len()
    }

    /// Degree in the underlying undirected graph.
    pub fn degree(&self, u: NodeId) -> usize {
        if self.directed {
            let mut all: Vec<NodeId> = self.out_edges[u]
                .iter()
                .chain(&self.in_edges[u])
                .copied()
                .collect();
            all.sort_unstable();
            all.dedup();
            all.len()
        } else {
            self.out_edges[u].len()
        }
    }

    pub fn has_arc(&self, u: NodeId, v: NodeId) -> bool {
        self.out_edges[u].binary_search(&v).is_ok()
    }

    pub fn label(&self, u: NodeId) -> &str {
        &self.labels[u]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.labels.iter().position(|l| l == label)
    }

    /// Builds a lookup table from label to id.
    pub fn label_index(&self) -> HashMap<&str, NodeId> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect()
    }

    pub fn check_node(&self, u: NodeId) -> Result<()> {
        if u < self.node_count() {
            Ok(())
        } else {
            Err(Error::UnknownNode(u))
        }
    }

    /// All arcs in ascending `(u, v)` order.
    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.out_edges
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().map(move |&v| (u, v)))
    }

    /// Undirected edges `(u, v)` with `u < v`, each listed once, for undirected graphs.
    /// For directed graphs this lists every arc.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        if self.directed {
            self.arcs().collect()
        } else {
            self.arcs().filter(|&(u, v)| u < v).collect()
        }
    }

    /// Hop distances from `source` following arcs forward.
    pub fn bfs_distances(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0) + 1;
            for &v in &self.out_edges[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn shortest_path_len(&self, u: NodeId, v: NodeId) -> Option<usize> {
        if u == v {
            return Some(0);
        }
        self.bfs_distances(u)[v]
    }

    /// BFS tree parents from `root`; frontier expanded in ascending id order.
    /// Returns `None` for the root and for unreachable nodes.
    pub fn bfs_parents(&self, root: NodeId) -> (Vec<Option<NodeId>>, Vec<NodeId>) {
        let n = self.node_count();
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::new();
        seen[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &self.out_edges[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        (parent, order)
    }

    /// Weakly connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut i = 0;
            while i < members.len() {
                let u = members[i];
                i += 1;
                for &v in self.out_edges[u].iter().chain(&self.in_edges[u]) {
                    if comp[v] == usize::MAX {
                        comp[v] = id;
                        members.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() <= 1 || self.components().len() == 1
    }

    /// Subgraph induced by `nodes`. New ids follow ascending old id, so relative
    /// id order (and with it every id-based tie break) is preserved.
    /// Returns the subgraph and the new-to-old id map.
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> (Graph, Vec<NodeId>) {
        let mut keep: Vec<NodeId> = nodes.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut new_id = vec![usize::MAX; self.node_count()];
        for (i, &old) in keep.iter().enumerate() {
            new_id[old] = i;
        }
        let out_edges = keep
            .iter()
            .map(|&old| {
                self.out_edges[old]
                    .iter()
                    .filter(|&&v| new_id[v] != usize::MAX)
                    .map(|&v| new_id[v])
                    .collect()
            })
            .collect();
        let labels = keep.iter().map(|&old| self.labels[old].clone()).collect();
        (Self::from_adjacency(out_edges, self.directed, labels), keep)
    }

    /// Removes `k` undirected edges one at a time, each drawn uniformly from the
    /// edges whose removal keeps the graph connected.
    pub fn remove_random_edges_connected<R: Rng + ?Sized>(
        &self,
        k: usize,
        rng: &mut R,
    ) -> Result<Graph> {
        if self.directed {
            return Err(Error::Directed("edge removal"));
        }
        let components = self.components().len();
        if components > 1 {
            return Err(Error::Disconnected { components });
        }
        let n = self.node_count();
        let mut adj = self.out_edges.clone();
        let mut edges = self.edge_count();
        let mut removed = 0;
        while removed < k {
            if edges < n {
                return Err(Error::EdgeRemoval {
                    requested: k,
                    removed,
                });
            }
            let bridges = find_bridges(&adj);
            let candidates: Vec<(NodeId, NodeId)> = adj
                .iter()
                .enumerate()
                .flat_map(|(u, list)| list.iter().map(move |&v| (u, v)))
                .filter(|&(u, v)| u < v && !bridges.contains(&(u, v)))
                .collect();
            if candidates.is_empty() {
                return Err(Error::EdgeRemoval {
                    requested: k,
                    removed,
                });
            }
            let (u, v) = candidates[rng.random_range(0..candidates.len())];
            adj[u].retain(|&w| w != v);
            adj[v].retain(|&w| w != u);
            edges -= 1;
            removed += 1;
        }
        Ok(Self::from_adjacency(adj, false, self.labels.clone()))
    }

    /// Encodes "`infector` infected `infectee`": drops every arc into `infectee`
    /// except the one from `infector`, and the arc back from `infectee` to `infector`.
    /// The result is directed.
    pub fn apply_infector_constraint(&self, infector: NodeId, infectee: NodeId) -> Result<Graph> {
        self.check_node(infector)?;
        self.check_node(infectee)?;
        if !self.has_arc(infector, infectee) {
            return Err(Error::MissingArc {
                from: infector,
                to: infectee,
            });
        }
        let out_edges = self
            .out_edges
            .iter()
            .enumerate()
            .map(|(u, list)| {
                list.iter()
                    .copied()
                    .filter(|&v| {
                        let into_infectee = v == infectee && u != infector;
                        let reverse = u == infectee && v == infector;
                        !into_infectee && !reverse
                    })
                    .collect()
            })
            .collect();
        Ok(Self::from_adjacency(out_edges, true, self.labels.clone()))
    }

    /// Writes one `u v` line per edge using node labels.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(out, "{} {}", self.labels[u], self.labels[v])?;
        }
        Ok(())
    }
}

/// Parses a whitespace-separated edge list. Lines starting with `#` are comments.
/// Labels are interned in order of first appearance.
pub fn load_edge_list<R: BufRead>(reader: R, directed: bool) -> Result<(Graph, LoadStats)> {
    let mut index: HashMap<String, NodeId> = HashMap::new();
    let mut labels = Vec::new();
    let mut edges = Vec::new();
    let mut intern = |label: &str| -> NodeId {
        if let Some(&id) = index.get(label) {
            return id;
        }
        let id = labels.len();
        labels.push(label.to_string());
        index.insert(label.to_string(), id);
        id
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected two node labels, found {}", fields.len()),
            });
        }
        let u = intern(fields[0]);
        let v = intern(fields[1]);
        edges.push((u, v));
    }
    let (graph, stats) = Graph::from_labeled_edges(labels, edges, directed)?;
    if stats.self_loops + stats.duplicates > 0 {
        log::info!(
            "dropped {} self-loops and {} duplicate edges",
            stats.self_loops,
            stats.duplicates
        );
    }
    Ok((graph, stats))
}

/// Bridges of an undirected adjacency structure, as `(min, max)` pairs.
fn find_bridges(adj: &[Vec<NodeId>]) -> std::collections::HashSet<(NodeId, NodeId)> {
    let n = adj.len();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut bridges = std::collections::HashSet::new();
    let mut timer = 0;
    // (node, parent, next neighbour index)
    let mut stack: Vec<(NodeId, NodeId, usize)> = Vec::new();
    for start in 0..n {
        if disc[start] != usize::MAX {
            continue;
        }
        disc[start] = timer;
        low[start] = timer;
        timer += 1;
        stack.push((start, usize::MAX, 0));
        while let Some(top) = stack.last_mut() {
            let (u, parent) = (top.0, top.1);
            if top.2 < adj[u].len() {
                let v = adj[u][top.2];
                top.2 += 1;
                if v == parent {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, u, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if parent != usize::MAX {
                    low[parent] = low[parent].min(low[u]);
                    if low[u] > disc[parent] {
                        bridges.insert((parent.min(u), parent.max(u)));
                    }
                }
            }
        }
    }
    bridges
}
