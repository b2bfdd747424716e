//! Tanner graph of a parity-check matrix.

use super::matrix::BinaryMatrix;
use crate::error::{Error, Result};

/// Bipartite variable/check adjacency of a parity-check matrix.
///
/// Edges are numbered row-major over `H`: all edges of check 0 in increasing
/// variable order, then check 1, and so on. Edge `e` connects variable
/// `edge_var[e]` and check `edge_check[e]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TannerGraph {
    num_vars: usize,
    var_neighbors: Vec<Vec<usize>>,
    check_neighbors: Vec<Vec<usize>>,
    /// Edge ids incident to each variable, in increasing check order.
    var_edges: Vec<Vec<usize>>,
    /// First edge id of each check; check `c` owns `check_start[c]..check_start[c + 1]`.
    check_start: Vec<usize>,
    edge_var: Vec<usize>,
    edge_check: Vec<usize>,
}

/// Builds the Tanner graph of `h`.
pub fn build_tanner(h: &BinaryMatrix) -> Result<TannerGraph> {
    TannerGraph::new(h)
}

impl TannerGraph {
    pub fn new(h: &BinaryMatrix) -> Result<Self> {
        let (m, n) = (h.num_rows(), h.num_cols());
        if m == 0 || n == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        let mut var_neighbors = vec![Vec::new(); n];
        let mut var_edges = vec![Vec::new(); n];
        let mut check_neighbors = Vec::with_capacity(m);
        let mut check_start = Vec::with_capacity(m + 1);
        let mut edge_var = Vec::new();
        let mut edge_check = Vec::new();
        for c in 0..m {
            check_start.push(edge_var.len());
            let support = h.row(c).support();
            for &v in &support {
                var_edges[v].push(edge_var.len());
                var_neighbors[v].push(c);
                edge_var.push(v);
                edge_check.push(c);
            }
            check_neighbors.push(support);
        }
        check_start.push(edge_var.len());
        Ok(Self {
            num_vars: n,
            var_neighbors,
            check_neighbors,
            var_edges,
            check_start,
            edge_var,
            edge_check,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_checks(&self) -> usize {
        self.check_neighbors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_var.len()
    }

    /// Checks adjacent to variable `v`, sorted.
    pub fn var_neighbors(&self, v: usize) -> &[usize] {
        &self.var_neighbors[v]
    }

    /// Variables adjacent to check `c`, sorted.
    pub fn check_neighbors(&self, c: usize) -> &[usize] {
        &self.check_neighbors[c]
    }

    pub fn var_edges(&self, v: usize) -> &[usize] {
        &self.var_edges[v]
    }

    pub fn check_edges(&self, c: usize) -> std::ops::Range<usize> {
        self.check_start[c]..self.check_start[c + 1]
    }

    pub fn edge_var(&self, e: usize) -> usize {
        self.edge_var[e]
    }

    pub fn edge_check(&self, e: usize) -> usize {
        self.edge_check[e]
    }

    /// Edge id of `(v, c)`, if present.
    pub fn edge_index(&self, v: usize, c: usize) -> Option<usize> {
        let range = self.check_edges(c);
        self.check_neighbors[c]
            .binary_search(&v)
            .ok()
            .map(|pos| range.start + pos)
    }

    /// Reconstructs the parity-check matrix.
    pub fn to_matrix(&self) -> BinaryMatrix {
        BinaryMatrix::from_supports(&self.check_neighbors, self.num_vars)
            .expect("graph built from a valid matrix")
    }

    /// True when every check is satisfied by the hard decisions.
    pub fn syndrome_ok(&self, bits: &[u8]) -> bool {
        self.check_neighbors
            .iter()
            .all(|vs| vs.iter().fold(0u8, |acc, &v| acc ^ bits[v]) == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_graph_neighborhoods() {
        let h = BinaryMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let g = build_tanner(&h).unwrap();
        assert_eq!(g.var_neighbors(0), &[0]);
        assert_eq!(g.var_neighbors(1), &[0, 1]);
        assert_eq!(g.var_neighbors(2), &[1]);
        assert_eq!(g.num_edges(), 4);
        assert_eq!(g.edge_index(1, 1), Some(2));
        assert_eq!(g.edge_index(0, 1), None);
        assert_eq!(g.to_matrix(), h);
    }

    #[test]
    fn identity_graph() {
        let g = build_tanner(&BinaryMatrix::identity(3).unwrap()).unwrap();
        assert_eq!(g.num_edges(), 3);
        for v in 0..3 {
            assert_eq!(g.var_neighbors(v), &[v]);
        }
    }

    #[test]
    fn mirror_consistency() {
        let h = BinaryMatrix::from_rows(&[
            vec![1, 0, 1, 1, 0],
            vec![0, 1, 1, 0, 1],
            vec![1, 1, 0, 0, 1],
        ])
        .unwrap();
        let g = build_tanner(&h).unwrap();
        for v in 0..5 {
            for &c in g.var_neighbors(v) {
                assert!(g.check_neighbors(c).contains(&v));
            }
            for (i, &e) in g.var_edges(v).iter().enumerate() {
                assert_eq!(g.edge_var(e), v);
                assert_eq!(g.edge_check(e), g.var_neighbors(v)[i]);
            }
        }
    }
}
