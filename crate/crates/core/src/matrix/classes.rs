//! Communicating classes of the push-influence graph.
//!
//! Index `i` points to `j` when `A_ij != 0` for `A = |Q|^T`, i.e. when the
//! pushing process of coordinate `i` moves coordinate `j`. Classes are the
//! strongly connected components; a class can be solved once every class
//! pointing into it has been solved.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use super::ReflectionMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDecomposition {
    /// Disjoint sorted index sets, ordered by their smallest index.
    pub classes: Vec<Vec<usize>>,
    /// Positions in `classes`, sources first.
    pub solve_order: Vec<usize>,
    /// Direct edges `i -> j` of the influence graph (`i != j`).
    pub edges: Vec<(usize, usize)>,
}

impl ClassDecomposition {
    pub fn class_of(&self, index: usize) -> usize {
        self.classes
            .iter()
            .position(|c| c.contains(&index))
            .expect("classes cover every index")
    }

    /// Whether some member of class `from` points directly to a member of
    /// class `to`.
    pub fn class_points_to(&self, from: usize, to: usize) -> bool {
        self.edges
            .iter()
            .any(|&(i, j)| self.classes[from].contains(&i) && self.classes[to].contains(&j))
    }

    /// Classes in solve order.
    pub fn ordered_classes(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.solve_order.iter().map(move |&c| self.classes[c].as_slice())
    }
}

/// Strongly connected components of the graph on `0..n` with an edge `i -> j`
/// whenever `edge(i, j)`. Each component is sorted; components are ordered by
/// their smallest member.
pub fn strongly_connected_components(
    n: usize,
    edge: impl Fn(usize, usize) -> bool,
) -> Vec<Vec<usize>> {
    let mut graph = DiGraph::<(), ()>::with_capacity(n, n * n);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && edge(i, j) {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|v| v.index()).collect();
            c.sort_unstable();
            c
        })
        .collect();
    classes.sort_unstable_by_key(|c| c[0]);
    classes
}

pub fn decompose(m: &ReflectionMatrix) -> ClassDecomposition {
    let d = m.dim();
    // A_ij = |Q|_ji
    let points = |i: usize, j: usize| m.abs_q()[(j, i)] != 0.0;
    let classes = strongly_connected_components(d, points);

    let mut owner = vec![0; d];
    for (c, members) in classes.iter().enumerate() {
        for &i in members {
            owner[i] = c;
        }
    }
    let edges: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && points(i, j))
        .collect();

    let k = classes.len();
    let mut successors = vec![Vec::new(); k];
    let mut in_degree = vec![0usize; k];
    for &(i, j) in &edges {
        let (a, b) = (owner[i], owner[j]);
        if a != b && !successors[a].contains(&b) {
            successors[a].push(b);
            in_degree[b] += 1;
        }
    }

    // Kahn's algorithm, always releasing the ready class with the smallest index.
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..k).filter(|&c| in_degree[c] == 0).map(Reverse).collect();
    let mut solve_order = Vec::with_capacity(k);
    while let Some(Reverse(c)) = ready.pop() {
        solve_order.push(c);
        for &next in &successors[c] {
            in_degree[next] -= 1;
            if in_degree[next] == 0 {
                ready.push(Reverse(next));
            }
        }
    }
    debug_assert_eq!(solve_order.len(), k, "condensation is acyclic");

    ClassDecomposition {
        classes,
        solve_order,
        edges,
    }
}
