//! Divided differences of scalar functions over parameter nodes.
//!
//! `Δ h(θ^ν) = (h(θ^{ν+1}) − h(θ^ν)) / (θ^{ν+1} − θ^ν)`, iterated recursively
//! for higher orders. These replace derivatives in the non-regular bounds.

use crate::error::{Error, Result};

/// Ordered list of `k+1` distinct parameter nodes `θ^0 … θ^k`, `k ≥ 1`.
#[derive(Clone, Debug)]
pub struct NodeSet {
    nodes: Vec<f64>,
}

impl NodeSet {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Config(format!(
                "a node set needs at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if nodes[i] == nodes[j] {
                    return Err(Error::DuplicateNodes(i, j));
                }
            }
        }
        Ok(Self { nodes })
    }

    /// Order `k` of the highest divided difference the set supports.
    pub fn order(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn base(&self) -> f64 {
        self.nodes[0]
    }
}

/// Full triangular table of divided differences: row `j` holds
/// `Δ^j h(θ^ν)` for `ν = 0 … k−j` (row 0 is the raw values).
#[derive(Clone, Debug)]
pub struct DividedDifferenceTable {
    nodes: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl DividedDifferenceTable {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `Δ^j h(θ^ν)`.
    pub fn value(&self, j: usize, nu: usize) -> f64 {
        self.rows[j][nu]
    }

    /// `Δ^j h(θ^0)`, the entries entering the bound vector `M`.
    pub fn leading(&self, j: usize) -> f64 {
        self.rows[j][0]
    }

    pub fn order(&self) -> usize {
        self.rows.len() - 1
    }
}

/// Triangular recursion on raw values; shared by the function-level and
/// pointwise-in-x callers.
pub fn table_from_values(values: &[f64], nodes: &[f64]) -> Vec<Vec<f64>> {
    let k = nodes.len() - 1;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    rows.push(values.to_vec());
    for j in 1..=k {
        let prev = &rows[j - 1];
        let mut row = Vec::with_capacity(k + 1 - j);
        for nu in 0..=(k - j) {
            row.push((prev[nu + 1] - prev[nu]) / (nodes[nu + j] - nodes[nu]));
        }
        rows.push(row);
    }
    rows
}

/// Divided-difference table of `h` at the given nodes.
pub fn divided_difference(h: &dyn Fn(f64) -> f64, nodes: &NodeSet) -> DividedDifferenceTable {
    let values: Vec<f64> = nodes.nodes().iter().map(|&t| h(t)).collect();
    DividedDifferenceTable {
        nodes: nodes.nodes().to_vec(),
        rows: table_from_values(&values, nodes.nodes()),
    }
}

/// Lagrange form of the i-th leading difference,
/// `Δ^i h(θ^0) = Σ_{j=0}^{i} h(θ^j) / Π_{l≠j} (θ^j − θ^l)`,
/// with the products taken over the first `i+1` nodes.
pub fn lagrange_form(values: &[f64], nodes: &[f64], i: usize) -> f64 {
    let mut sum = 0.0;
    for j in 0..=i {
        let mut denom = 1.0;
        for l in 0..=i {
            if l != j {
                denom *= nodes[j] - nodes[l];
            }
        }
        sum += values[j] / denom;
    }
    sum
}

/// Per-coordinate divided differences of a multiparameter function.
///
/// Nodes are full parameter points; only the given coordinate is differenced.
/// The remaining coordinates are frozen at the first node's values, so the
/// table equals the one-parameter table of `t ↦ h(θ^0 with coord = t)`.
pub fn multiparam_divided_difference(
    h: &dyn Fn(&[f64]) -> f64,
    nodes: &[Vec<f64>],
    coordinate: usize,
) -> Result<DividedDifferenceTable> {
    if nodes.len() < 2 {
        return Err(Error::Config("need at least 2 nodes".to_string()));
    }
    let coord_vals: Vec<f64> = nodes.iter().map(|p| p[coordinate]).collect();
    for i in 0..coord_vals.len() {
        for j in i + 1..coord_vals.len() {
            if coord_vals[i] == coord_vals[j] {
                return Err(Error::CoincidentCoordinate(coordinate));
            }
        }
    }
    let mut point = nodes[0].clone();
    let values: Vec<f64> = coord_vals
        .iter()
        .map(|&t| {
            point[coordinate] = t;
            h(&point)
        })
        .collect();
    Ok(DividedDifferenceTable {
        nodes: coord_vals.clone(),
        rows: table_from_values(&values, &coord_vals),
    })
}
