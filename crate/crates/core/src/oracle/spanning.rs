//! Spanning-tree enumeration by recursive edge inclusion/exclusion.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::NodeId;

/// Default cap on the number of trees enumerated.
pub const MAX_TREES: u64 = 10_000_000;

/// Union-find with undo, for backtracking.
struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
    history: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
            size: vec![1; n],
            history: Vec::new(),
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.history.push(b);
        true
    }

    fn undo(&mut self) {
        let b = self.history.pop().expect("undo without union");
        let a = self.parent[b];
        self.size[a] -= self.size[b];
        self.parent[b] = b;
    }
}

struct Enumerator<'a, F> {
    n: usize,
    edges: &'a [(NodeId, NodeId)],
    chosen: Vec<(NodeId, NodeId)>,
    dsu: Dsu,
    count: u64,
    cap: u64,
    visit: F,
}

impl<F: FnMut(&[(NodeId, NodeId)])> Enumerator<'_, F> {
    /// Whether the chosen edges plus `edges[from..]` still connect the graph.
    fn can_connect(&mut self, from: usize) -> bool {
        let mut added = 0;
        let mut components = self.n - self.chosen.len();
        for &(u, v) in &self.edges[from..] {
            if self.dsu.union(u, v) {
                added += 1;
                components -= 1;
            }
        }
        for _ in 0..added {
            self.dsu.undo();
        }
        components == 1
    }

    fn recurse(&mut self, i: usize) -> Result<()> {
        if self.chosen.len() + 1 == self.n {
            self.count += 1;
            if self.count > self.cap {
                return Err(Error::TooManyTrees { cap: self.cap });
            }
            (self.visit)(&self.chosen);
            return Ok(());
        }
        if i == self.edges.len() || self.edges.len() - i < self.n - 1 - self.chosen.len() {
            return Ok(());
        }
        let (u, v) = self.edges[i];
        if self.dsu.union(u, v) {
            self.chosen.push((u, v));
            self.recurse(i + 1)?;
            self.chosen.pop();
            self.dsu.undo();
        }
        if self.can_connect(i + 1) {
            self.recurse(i + 1)?;
        }
        Ok(())
    }
}

/// Calls `visit` once per spanning tree of the undirected graph `g`, with the
/// tree's edges. Errors once more than `cap` trees have been produced.
pub fn for_each_spanning_tree<F>(g: &Graph, cap: u64, visit: F) -> Result<u64>
where
    F: FnMut(&[(NodeId, NodeId)]),
{
    if g.is_directed() {
        return Err(Error::Directed("spanning-tree enumeration"));
    }
    let components = g.components().len();
    if components > 1 {
        return Err(Error::Disconnected { components });
    }
    let n = g.node_count();
    if n == 0 {
        return Ok(0);
    }
    let edges = g.edges();
    let mut e = Enumerator {
        n,
        edges: &edges,
        chosen: Vec::with_capacity(n),
        dsu: Dsu::new(n),
        count: 0,
        cap,
        visit,
    };
    e.recurse(0)?;
    Ok(e.count)
}

/// Every spanning tree of `g` as an edge list.
pub fn enumerate_spanning_trees(g: &Graph) -> Result<Vec<Vec<(NodeId, NodeId)>>> {
    let mut trees = Vec::new();
    for_each_spanning_tree(g, MAX_TREES, |t| trees.push(t.to_vec()))?;
    Ok(trees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::florentine;
    use std::collections::BTreeSet;

    fn undirected(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, edges.iter().copied(), false).unwrap().0
    }

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_spanning_trees(&undirected(3, &[(0, 1), (1, 2), (0, 2)])).unwrap().len(), 3);
        assert_eq!(
            enumerate_spanning_trees(&undirected(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])).unwrap().len(),
            4
        );
        assert_eq!(enumerate_spanning_trees(&undirected(1, &[])).unwrap(), vec![Vec::<(usize, usize)>::new()]);
    }

    #[test]
    fn trees_are_distinct_and_spanning() {
        let g = florentine();
        let trees = enumerate_spanning_trees(&g).unwrap();
        let distinct: BTreeSet<_> = trees.iter().cloned().collect();
        assert_eq!(distinct.len(), trees.len());
        for t in &trees {
            let sub = Graph::from_edges(g.node_count(), t.iter().copied(), false).unwrap().0;
            assert!(sub.is_connected());
            assert_eq!(t.len(), g.node_count() - 1);
        }
    }

    #[test]
    fn cap_and_input_errors() {
        let k4 = undirected(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert!(matches!(for_each_spanning_tree(&k4, 15, |_| ()), Err(Error::TooManyTrees { cap: 15 })));
        assert_eq!(for_each_spanning_tree(&k4, 16, |_| ()).unwrap(), 16);
        let split = undirected(4, &[(0, 1), (2, 3)]);
        assert!(matches!(enumerate_spanning_trees(&split), Err(Error::Disconnected { components: 2 })));
        let directed = Graph::from_edges(2, [(0, 1)], true).unwrap().0;
        assert!(matches!(enumerate_spanning_trees(&directed), Err(Error::Directed(_))));
    }
}
