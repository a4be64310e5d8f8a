//! Directed graphs, their incidence decomposition and Laplacians.
//!
//! Orientation convention: an edge `(head, tail)` points from `head` to
//! `tail`. The head carries `+1` in the incidence matrix `E` and in the
//! out-incidence matrix `B_o`; the tail carries `-1` in `E` and in the
//! in-incidence matrix `B_i`. With agent inputs `u = -B_o μ`, the head of an
//! edge is the agent that reacts to the edge controller's output.

use std::collections::{HashSet, VecDeque};

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::linalg::{symmetric_eigen, SymmetricEigen};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("a digraph needs at least one vertex")]
    NoVertices,
    #[error("edge {edge} ({head} -> {tail}) references a vertex outside 1..={vertex_count}")]
    VertexOutOfRange {
        edge: usize,
        head: usize,
        tail: usize,
        vertex_count: usize,
    },
    #[error("edge {edge} is a self-loop on vertex {vertex}")]
    SelfLoop { edge: usize, vertex: usize },
    #[error("edge {edge} ({head} -> {tail}) duplicates an earlier edge")]
    DuplicateEdge { edge: usize, head: usize, tail: usize },
}

/// A directed edge in 0-based vertex indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub head: usize,
    pub tail: usize,
}

/// Simple digraph: no self-loops, no parallel edges. Edge order is significant
/// since column `k` of every incidence matrix belongs to edge `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    vertex_count: usize,
    edges: Vec<Edge>,
}

impl Digraph {
    /// Build from 1-based `(head, tail)` pairs, the numbering used in figures
    /// and scenario files.
    pub fn new(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if vertex_count == 0 {
            return Err(GraphError::NoVertices);
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (k, (head, tail)) in edges.into_iter().enumerate() {
            let edge = k + 1;
            if head == 0 || tail == 0 || head > vertex_count || tail > vertex_count {
                return Err(GraphError::VertexOutOfRange {
                    edge,
                    head,
                    tail,
                    vertex_count,
                });
            }
            if head == tail {
                return Err(GraphError::SelfLoop { edge, vertex: head });
            }
            if !seen.insert((head, tail)) {
                return Err(GraphError::DuplicateEdge { edge, head, tail });
            }
            out.push(Edge {
                head: head - 1,
                tail: tail - 1,
            });
        }
        Ok(Self {
            vertex_count,
            edges: out,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in declaration order, 0-based.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges as 1-based `(head, tail)` pairs.
    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.head + 1, e.tail + 1)).collect()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertex_count];
        for e in &self.edges {
            d[e.head] += 1;
        }
        d
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertex_count];
        for e in &self.edges {
            d[e.tail] += 1;
        }
        d
    }

    /// Every vertex has equal in- and out-degree.
    pub fn is_balanced(&self) -> bool {
        self.out_degrees() == self.in_degrees()
    }

    /// Same graph with vertex `i` renamed to `perm[i]` (0-based permutation).
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self, GraphError> {
        assert_eq!(perm.len(), self.vertex_count, "permutation length");
        Self::new(
            self.vertex_count,
            self.edges.iter().map(|e| (perm[e.head] + 1, perm[e.tail] + 1)),
        )
    }
}

/// `E = B_o + B_i`, each `|V| × |E|`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceSet {
    pub incidence: Array2<f64>,
    pub out_incidence: Array2<f64>,
    pub in_incidence: Array2<f64>,
}

pub fn incidence_matrices(g: &Digraph) -> IncidenceSet {
    let (n, m) = (g.vertex_count(), g.edge_count());
    let mut out_incidence = Array2::zeros((n, m));
    let mut in_incidence = Array2::zeros((n, m));
    for (k, e) in g.edges().iter().enumerate() {
        out_incidence[[e.head, k]] = 1.0;
        in_incidence[[e.tail, k]] = -1.0;
    }
    let incidence = &out_incidence + &in_incidence;
    IncidenceSet {
        incidence,
        out_incidence,
        in_incidence,
    }
}

/// `L(𝔾) = E Eᵀ`, `L_i = B_i Eᵀ`, `L_o = B_o Eᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacians {
    pub undirected: Array2<f64>,
    pub in_laplacian: Array2<f64>,
    pub out_laplacian: Array2<f64>,
}

pub fn laplacians(g: &Digraph) -> Laplacians {
    let inc = incidence_matrices(g);
    let et = inc.incidence.t();
    Laplacians {
        undirected: inc.incidence.dot(&et),
        in_laplacian: inc.in_incidence.dot(&et),
        out_laplacian: inc.out_incidence.dot(&et),
    }
}

/// True when some vertex can be reached from every vertex along directed paths.
///
/// Runs a reverse breadth-first search from each candidate root, O(|V|·|E|).
pub fn has_globally_reachable_node(g: &Digraph) -> bool {
    globally_reachable_nodes(g).next().is_some()
}

/// All vertices (0-based) reachable from every other vertex.
pub fn globally_reachable_nodes(g: &Digraph) -> impl Iterator<Item = usize> + '_ {
    let n = g.vertex_count();
    let mut predecessors = vec![Vec::new(); n];
    for e in g.edges() {
        predecessors[e.tail].push(e.head);
    }
    (0..n).filter(move |&root| {
        let mut visited = vec![false; n];
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &p in &predecessors[v] {
                if !visited[p] {
                    visited[p] = true;
                    count += 1;
                    queue.push_back(p);
                }
            }
        }
        count == n
    })
}

/// Spectrum of the undirected Laplacian `L(𝔾)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    /// Second-smallest eigenvalue (algebraic connectivity); 0 for a single vertex.
    pub lambda2: f64,
    /// Largest eigenvalue.
    pub lambda_max: f64,
    /// Full spectrum, non-decreasing, repeated entries for multiplicities.
    pub eigenvalues: Vec<f64>,
}

pub fn undirected_spectrum(g: &Digraph) -> SpectralSummary {
    let eig = undirected_eigen(g);
    let eigenvalues = eig.values.to_vec();
    SpectralSummary {
        lambda2: eigenvalues.get(1).copied().unwrap_or(0.0),
        lambda_max: eigenvalues.last().copied().unwrap_or(0.0),
        eigenvalues,
    }
}

/// Eigenpairs of `L(𝔾)`; column 1 of `vectors` is a Fiedler vector.
pub fn undirected_eigen(g: &Digraph) -> SymmetricEigen {
    symmetric_eigen(&laplacians(g).undirected)
}

pub fn max_out_degree(g: &Digraph) -> usize {
    g.out_degrees().into_iter().max().unwrap_or(0)
}

/// `yᵀ L(𝔾) y = Σ_k (y_head − y_tail)²`, evaluated edge by edge.
pub fn laplacian_quadratic_form(g: &Digraph, y: &[f64]) -> f64 {
    g.edges()
        .iter()
        .map(|e| {
            let d = y[e.head] - y[e.tail];
            d * d
        })
        .sum()
}

pub(crate) fn ones(n: usize) -> Array1<f64> {
    Array1::from_elem(n, 1.0)
}

/// Graphs from the case studies, kept here so tests, docs and the CLI agree on them.
pub mod catalog {
    use super::Digraph;

    /// Strongly connected 5-vertex digraph of the heterogeneous case study.
    pub fn heterogeneous_case() -> Digraph {
        Digraph::new(
            5,
            [(1, 2), (2, 3), (4, 3), (5, 4), (2, 5), (3, 1), (4, 1), (5, 1)],
        )
        .expect("valid graph")
    }

    /// Two in-trees into vertex 1; agreement happens although the certificate fails.
    pub fn negative_case() -> Digraph {
        Digraph::new(5, [(3, 2), (2, 1), (5, 4), (4, 1)]).expect("valid graph")
    }

    /// Directed cycle `1 → 2 → … → n → 1`.
    pub fn directed_cycle(n: usize) -> Digraph {
        Digraph::new(n, (1..=n).map(|i| (i, i % n + 1))).expect("valid graph")
    }

    /// Every ordered pair of distinct vertices.
    pub fn complete_bidirected(n: usize) -> Digraph {
        Digraph::new(
            n,
            (1..=n).flat_map(|i| (1..=n).filter(move |&j| j != i).map(move |j| (i, j))),
        )
        .expect("valid graph")
    }
}

#[cfg(test)]
mod tests {
    use super::catalog::*;
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_invalid_edges() {
        assert_eq!(Digraph::new(0, []), Err(GraphError::NoVertices));
        assert_eq!(
            Digraph::new(2, [(1, 1)]),
            Err(GraphError::SelfLoop { edge: 1, vertex: 1 })
        );
        assert_eq!(
            Digraph::new(2, [(1, 2), (1, 2)]),
            Err(GraphError::DuplicateEdge {
                edge: 2,
                head: 1,
                tail: 2
            })
        );
        assert!(matches!(
            Digraph::new(2, [(1, 3)]),
            Err(GraphError::VertexOutOfRange { .. })
        ));
        assert!(matches!(
            Digraph::new(2, [(0, 1)]),
            Err(GraphError::VertexOutOfRange { .. })
        ));
        // opposite directions are distinct edges
        assert!(Digraph::new(2, [(1, 2), (2, 1)]).is_ok());
    }

    #[test]
    fn single_edge_incidence() {
        let g = Digraph::new(2, [(1, 2)]).unwrap();
        let inc = incidence_matrices(&g);
        assert_eq!(inc.incidence, array![[1.0], [-1.0]]);
        assert_eq!(inc.out_incidence, array![[1.0], [0.0]]);
        assert_eq!(inc.in_incidence, array![[0.0], [-1.0]]);
    }

    #[test]
    fn empty_edge_list_gives_empty_columns() {
        let g = Digraph::new(3, []).unwrap();
        let inc = incidence_matrices(&g);
        assert_eq!(inc.incidence.dim(), (3, 0));
        assert_eq!(inc.out_incidence.dim(), (3, 0));
        assert_eq!(inc.in_incidence.dim(), (3, 0));
        assert_eq!(max_out_degree(&g), 0);
    }

    #[test]
    fn heterogeneous_graph_incidence_by_hand() {
        let g = heterogeneous_case();
        let inc = incidence_matrices(&g);
        // Columns written out from the edge list 1→2, 2→3, 4→3, 5→4, 2→5, 3→1, 4→1, 5→1.
        let expected = array![
            [1., 0., 0., 0., 0., -1., -1., -1.],
            [-1., 1., 0., 0., 1., 0., 0., 0.],
            [0., -1., -1., 0., 0., 1., 0., 0.],
            [0., 0., 1., -1., 0., 0., 1., 0.],
            [0., 0., 0., 1., -1., 0., 0., 1.],
        ];
        assert_eq!(inc.incidence, expected);
        for col in inc.incidence.columns() {
            assert_eq!(col.sum(), 0.0);
        }
    }

    #[test]
    fn single_edge_laplacians() {
        let g = Digraph::new(2, [(1, 2)]).unwrap();
        let l = laplacians(&g);
        assert_eq!(l.undirected, array![[1.0, -1.0], [-1.0, 1.0]]);
        assert_eq!(l.out_laplacian, array![[1.0, -1.0], [0.0, 0.0]]);
        assert_eq!(&l.in_laplacian + &l.out_laplacian, l.undirected);
    }

    #[test]
    fn three_cycle_laplacians() {
        let g = directed_cycle(3);
        let l = laplacians(&g);
        // I minus the cyclic shift sending each vertex to its successor.
        let expected = array![[1., -1., 0.], [0., 1., -1.], [-1., 0., 1.]];
        assert_eq!(l.out_laplacian, expected);
        let s = undirected_spectrum(&g);
        assert!(s.eigenvalues[0].abs() < 1e-12);
        assert!((s.eigenvalues[1] - 3.0).abs() < 1e-12);
        assert!((s.eigenvalues[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_case_is_a_path_laplacian() {
        let l = laplacians(&negative_case()).undirected;
        // undirected path 3–2–1–4–5
        let mut path = Array2::<f64>::zeros((5, 5));
        for (a, b) in [(3, 2), (2, 1), (1, 4), (4, 5)] {
            let (a, b) = (a - 1, b - 1);
            path[[a, a]] += 1.0;
            path[[b, b]] += 1.0;
            path[[a, b]] -= 1.0;
            path[[b, a]] -= 1.0;
        }
        assert_eq!(l, path);
    }

    #[test]
    fn out_laplacian_rows_sum_to_zero_and_diagonal_is_out_degree() {
        let g = heterogeneous_case();
        let lo = laplacians(&g).out_laplacian;
        for row in lo.rows() {
            assert_eq!(row.sum(), 0.0);
        }
        let deg = g.out_degrees();
        for i in 0..5 {
            assert_eq!(lo[[i, i]], deg[i] as f64);
        }
    }

    #[test]
    fn reachability() {
        assert!(has_globally_reachable_node(&negative_case()));
        assert_eq!(globally_reachable_nodes(&negative_case()).collect::<Vec<_>>(), vec![0]);
        assert!(!has_globally_reachable_node(&Digraph::new(2, []).unwrap()));
        assert!(has_globally_reachable_node(&directed_cycle(3)));
        assert_eq!(globally_reachable_nodes(&directed_cycle(3)).count(), 3);
        // two sinks
        assert!(!has_globally_reachable_node(
            &Digraph::new(3, [(1, 2), (1, 3)]).unwrap()
        ));
        assert!(has_globally_reachable_node(&Digraph::new(1, []).unwrap()));
    }

    #[test]
    fn case_study_spectra() {
        let s = undirected_spectrum(&heterogeneous_case());
        assert!((s.lambda2 - 3.0).abs() < 1e-6);
        assert_eq!(max_out_degree(&heterogeneous_case()), 2);

        let s = undirected_spectrum(&negative_case());
        assert!((s.lambda2 - 0.382).abs() < 1e-3);
        assert_eq!(max_out_degree(&negative_case()), 1);

        let s = undirected_spectrum(&Digraph::new(2, [(1, 2)]).unwrap());
        assert!(s.eigenvalues[0].abs() < 1e-12);
        assert!((s.eigenvalues[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_graph_has_zero_lambda2() {
        let s = undirected_spectrum(&Digraph::new(4, [(1, 2), (3, 4)]).unwrap());
        assert!(s.lambda2.abs() < 1e-12);
        let single = undirected_spectrum(&Digraph::new(1, []).unwrap());
        assert_eq!(single.lambda2, 0.0);
    }

    #[test]
    fn quadratic_form_matches_matrix() {
        let g = heterogeneous_case();
        let y = [0.3, -1.2, 2.0, 0.5, -0.1];
        let l = laplacians(&g).undirected;
        let yv = Array1::from(y.to_vec());
        let direct = yv.dot(&l.dot(&yv));
        assert!((laplacian_quadratic_form(&g, &y) - direct).abs() < 1e-12);
    }

    #[test]
    fn balance() {
        assert!(directed_cycle(4).is_balanced());
        assert!(complete_bidirected(3).is_balanced());
        assert!(!negative_case().is_balanced());
    }
}
