//! Finite quadrature realization of the measure space, the weight profile and
//! the coefficient space `L²(Θ, U₀)`.

use std::collections::HashSet;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::report::{Provenance, VerificationReport};

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub mu: f64,
}

impl Node {
    pub fn new(id: impl Into<String>, mu: f64) -> Self {
        Node { id: id.into(), mu }
    }
}

/// Quadrature nodes with strictly positive masses and unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureNodes {
    nodes: Vec<Node>,
}

impl MeasureNodes {
    pub fn new(nodes: Vec<Node>) -> Result<Self> {
        let problems = node_problems(&nodes);
        if let Some(p) = problems.into_iter().next() {
            return Err(Error::InvalidSystem(p));
        }
        Ok(MeasureNodes { nodes })
    }

    /// `count` nodes of unit mass named `w0, w1, ...`.
    pub fn uniform(count: usize) -> Self {
        MeasureNodes {
            nodes: (0..count).map(|i| Node::new(format!("w{i}"), 1.0)).collect(),
        }
    }

    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        MeasureNodes::new(
            masses
                .iter()
                .enumerate()
                .map(|(i, &mu)| Node::new(format!("w{i}"), mu))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn mu(&self, i: usize) -> f64 {
        self.nodes[i].mu
    }

    pub fn masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().map(|n| n.mu)
    }

    /// Every mass multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        MeasureNodes::new(
            self.nodes
                .iter()
                .map(|n| Node::new(n.id.clone(), n.mu * c))
                .collect(),
        )
    }
}

fn node_problems(nodes: &[Node]) -> Vec<String> {
    let mut problems = Vec::new();
    let mut seen = HashSet::new();
    for n in nodes {
        if !(n.mu.is_finite() && n.mu > 0.0) {
            problems.push(format!("node {}: nonpositive mass {}", n.id, n.mu));
        }
        if !seen.insert(n.id.as_str()) {
            problems.push(format!("node {}: duplicate id", n.id));
        }
    }
    problems
}

/// Per-node positive weights `v(w)` (or `s(w)` for a second system).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightProfile(Vec<f64>);

impl WeightProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidSystem(format!("weight {i} is nonpositive ({v})")));
        }
        Ok(WeightProfile(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Checks node masses, id uniqueness, weight positivity and matching lengths.
/// Never errors; problems are listed in the report.
pub fn validate_nodes(nodes: &[Node], weights: &[f64]) -> VerificationReport {
    let mut report = VerificationReport::builder("validate_nodes", Provenance::ExactSpectral)
        .constant("node_count", nodes.len() as f64);
    for p in node_problems(nodes) {
        report = report.fail(p);
    }
    for (i, v) in weights.iter().enumerate() {
        if !(v.is_finite() && *v > 0.0) {
            report = report.fail(format!("weight {i}: nonpositive value {v}"));
        }
    }
    if weights.len() != nodes.len() {
        report = report.fail(format!(
            "length mismatch: {} weights for {} nodes",
            weights.len(),
            nodes.len()
        ));
    }
    report.finish()
}

/// A field `φ` with one block `φ(w_i) ∈ U_{w_i}` per node.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    blocks: Vec<DVector<f64>>,
}

impl CoefficientField {
    pub fn new(blocks: Vec<DVector<f64>>) -> Self {
        CoefficientField { blocks }
    }

    pub fn from_slices(blocks: &[&[f64]]) -> Self {
        CoefficientField {
            blocks: blocks.iter().map(|b| DVector::from_column_slice(b)).collect(),
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        CoefficientField {
            blocks: dims.iter().map(|&m| DVector::zeros(m)).collect(),
        }
    }

    pub fn blocks(&self) -> &[DVector<f64>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &DVector<f64> {
        &self.blocks[i]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|&x| x == 0.0))
    }
}

fn check_shapes(a: &CoefficientField, b: &CoefficientField, nodes: &MeasureNodes) -> Result<()> {
    if a.len() != nodes.len() || b.len() != nodes.len() {
        return Err(Error::shape(
            "coefficient field node count",
            nodes.len(),
            format!("{} and {}", a.len(), b.len()),
        ));
    }
    for (i, (x, y)) in a.blocks.iter().zip(&b.blocks).enumerate() {
        if x.len() != y.len() {
            return Err(Error::shape(format!("block {i}"), x.len(), y.len()));
        }
    }
    Ok(())
}

/// `Σ_i μ_i ⟨a_i, b_i⟩`.
pub fn weighted_inner(a: &CoefficientField, b: &CoefficientField, nodes: &MeasureNodes) -> Result<f64> {
    check_shapes(a, b, nodes)?;
    Ok(a.blocks
        .iter()
        .zip(&b.blocks)
        .zip(nodes.masses())
        .map(|((x, y), mu)| mu * x.dot(y))
        .sum())
}

pub fn weighted_norm(a: &CoefficientField, nodes: &MeasureNodes) -> Result<f64> {
    Ok(weighted_inner(a, a, nodes)?.max(0.0).sqrt())
}
