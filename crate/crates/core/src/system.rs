//! Continuous g-fusion systems `{F(w), χ_w, v(w)}` over quadrature nodes with
//! their synthesis, analysis and frame operators.
//!
//! Each node carries a subspace `F_i` (orthonormal basis `Q_i`, `n × k_i`), a
//! local operator `X_i` written in subspace coordinates (`m_i × k_i`) and a
//! weight `v_i > 0`. The effective map `Λ_i = X_i Q_iᵀ` (`m_i × n`) factors
//! through the projection onto `F_i` by construction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    min_positive_singular_value, op_norm, operator_leq, pinv, singular_values, OrderCertificate,
    Operator, Subspace, SymmetricSpectrum,
};
use crate::measure::{weighted_inner, CoefficientField, MeasureNodes};
use crate::par;
use crate::report::{Provenance, VerificationReport};
use crate::rng::{gaussian_vector, trial_rng};
use crate::tolerances::{ORTHONORMAL_TOL, RANK_TOL};

/// One node's data: subspace, local operator and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionTerm {
    subspace: Subspace,
    local: Operator,
    weight: f64,
    effective: DMatrix<f64>,
}

impl FusionTerm {
    pub fn new(subspace: Subspace, local: Operator, weight: f64) -> Result<Self> {
        if local.cols() != subspace.dim() {
            return Err(Error::shape(
                "local operator columns",
                subspace.dim(),
                local.cols(),
            ));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidSystem(format!("weight {weight} is not positive")));
        }
        let effective = local.matrix() * subspace.basis().transpose();
        let factor_defect = op_norm(&(&effective * subspace.projector() - &effective));
        if factor_defect > ORTHONORMAL_TOL * local.op_norm().max(1.0) {
            return Err(Error::InvalidSystem(format!(
                "local map does not factor through its subspace (defect {factor_defect:.3e})"
            )));
        }
        Ok(FusionTerm {
            subspace,
            local,
            weight,
            effective,
        })
    }

    /// Builds the term whose effective map is `map` restricted to `subspace`,
    /// i.e. local operator `map · Q`.
    pub fn from_effective(subspace: Subspace, map: &DMatrix<f64>, weight: f64) -> Result<Self> {
        if map.ncols() != subspace.ambient_dim() {
            return Err(Error::shape(
                "effective map columns",
                subspace.ambient_dim(),
                map.ncols(),
            ));
        }
        let local = Operator::new(map * subspace.basis())?;
        FusionTerm::new(subspace, local, weight)
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn local(&self) -> &Operator {
        &self.local
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `Λ_i = X_i Q_iᵀ`, shape `m_i × n`.
    pub fn effective(&self) -> &DMatrix<f64> {
        &self.effective
    }

    /// Dimension `m_i` of the local space `U_{w_i}`.
    pub fn codomain_dim(&self) -> usize {
        self.local.rows()
    }

    fn with_weight(&self, weight: f64) -> Result<Self> {
        FusionTerm::new(self.subspace.clone(), self.local.clone(), weight)
    }
}

/// A g-fusion system on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GFusionSystem {
    ambient_dim: usize,
    nodes: MeasureNodes,
    terms: Vec<FusionTerm>,
}

impl GFusionSystem {
    pub fn new(ambient_dim: usize, nodes: MeasureNodes, terms: Vec<FusionTerm>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::InvalidSystem("ambient dimension must be positive".into()));
        }
        if terms.len() != nodes.len() {
            return Err(Error::shape("terms per node", nodes.len(), terms.len()));
        }
        for (node, term) in nodes.nodes().iter().zip(&terms) {
            if term.subspace.ambient_dim() != ambient_dim {
                return Err(Error::shape(
                    format!("node {} subspace ambient dimension", node.id),
                    ambient_dim,
                    term.subspace.ambient_dim(),
                ));
            }
        }
        Ok(GFusionSystem {
            ambient_dim,
            nodes,
            terms,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn nodes(&self) -> &MeasureNodes {
        &self.nodes
    }

    pub fn terms(&self) -> &[FusionTerm] {
        &self.terms
    }

    pub fn term(&self, i: usize) -> &FusionTerm {
        &self.terms[i]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.weight).collect()
    }

    pub fn codomain_dims(&self) -> Vec<usize> {
        self.terms.iter().map(FusionTerm::codomain_dim).collect()
    }

    /// Same geometry with new weights.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::shape("weights", self.len(), weights.len()));
        }
        let terms = self
            .terms
            .iter()
            .zip(weights)
            .map(|(t, &w)| t.with_weight(w))
            .collect::<Result<Vec<_>>>()?;
        GFusionSystem::new(self.ambient_dim, self.nodes.clone(), terms)
    }

    /// Per-node contributions `μ_i v_i² Λ_iᵀ Λ_i`.
    fn frame_contributions(&self) -> Vec<DMatrix<f64>> {
        par::map_range(self.len(), |i| {
            let t = &self.terms[i];
            t.effective.tr_mul(&t.effective) * (self.nodes.mu(i) * t.weight * t.weight)
        })
    }

    /// `S = Σ_i μ_i v_i² Λ_iᵀ Λ_i`, summed in node order.
    pub fn frame_operator(&self) -> Operator {
        let n = self.ambient_dim;
        let s = self
            .frame_contributions()
            .into_iter()
            .fold(DMatrix::zeros(n, n), |acc, c| acc + c);
        Operator::wrap(s)
    }

    /// Reference single-threaded assembly.
    pub fn frame_operator_sequential(&self) -> Operator {
        let n = self.ambient_dim;
        let mut s = DMatrix::zeros(n, n);
        for (i, t) in self.terms.iter().enumerate() {
            s += t.effective.tr_mul(&t.effective) * (self.nodes.mu(i) * t.weight * t.weight);
        }
        Operator::wrap(s)
    }

    /// `T*f`: block `i` is `v_i Λ_i f`.
    pub fn analysis(&self, f: &DVector<f64>) -> Result<CoefficientField> {
        self.check_vector(f)?;
        Ok(CoefficientField::new(
            self.terms.iter().map(|t| &t.effective * f * t.weight).collect(),
        ))
    }

    /// `Tφ = Σ_i μ_i v_i Λ_iᵀ φ_i`.
    pub fn synthesis(&self, phi: &CoefficientField) -> Result<DVector<f64>> {
        if phi.len() != self.len() {
            return Err(Error::shape("coefficient field node count", self.len(), phi.len()));
        }
        let mut out = DVector::zeros(self.ambient_dim);
        for (i, (t, b)) in self.terms.iter().zip(phi.blocks()).enumerate() {
            if b.len() != t.codomain_dim() {
                return Err(Error::shape(format!("block {i}"), t.codomain_dim(), b.len()));
            }
            out += t.effective.tr_mul(b) * (self.nodes.mu(i) * t.weight);
        }
        Ok(out)
    }

    /// Optimal bounds `A = λ_min(S)`, `B = λ_max(S)` and classification.
    pub fn frame_bounds(&self, tol: f64) -> FrameBounds {
        let spec = SymmetricSpectrum::of(self.frame_operator().matrix());
        FrameBounds::classify(spec.min().max(0.0), spec.max().max(0.0), tol)
    }

    /// `S ≥ A K Kᵀ` in the Loewner order.
    pub fn kgf_check(&self, k: &DMatrix<f64>, a: f64, tol: f64) -> Result<OrderCertificate> {
        self.check_square(k, "K")?;
        let kkt = k * k.transpose() * a;
        operator_leq(&kkt, self.frame_operator().matrix(), tol)
    }

    /// Largest `A` with `S ≥ A K Kᵀ` (within the Loewner tolerance), found by
    /// bisection. Positive constants exist exactly when `R(K) ⊆ R(S)`; when that
    /// range inclusion fails the bound is 0.
    pub fn kgf_lower_bound(&self, k: &DMatrix<f64>, tol: f64) -> Result<f64> {
        self.check_square(k, "K")?;
        let k_norm = op_norm(k);
        if k_norm <= tol {
            return Err(Error::DegenerateK);
        }
        let s = self.frame_operator().into_matrix();
        let range_defect = op_norm(&(k - &s * (pinv(&s, RANK_TOL) * k)));
        if range_defect > tol * k_norm.max(1.0) {
            return Ok(0.0);
        }
        let kkt = k * k.transpose();
        let feasible = |a: f64| SymmetricSpectrum::of(&(&s - &kkt * a)).min() >= -tol;

        let sigma = min_positive_singular_value(k, RANK_TOL).unwrap_or(k_norm);
        let s_max = SymmetricSpectrum::of(&s).max().max(0.0);
        let mut hi = s_max / (sigma * sigma).max(f64::EPSILON) + 1.0;
        let mut guard = 0;
        while feasible(hi) && guard < 64 {
            hi *= 2.0;
            guard += 1;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            if hi - lo <= 0.1 * tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Randomized check that analysis is the adjoint of synthesis under the
    /// weighted inner product.
    pub fn adjoint_consistency(&self, trials: usize, seed: u64) -> VerificationReport {
        let dims = self.codomain_dims();
        let residuals = par::map_range(trials, |trial| {
            let mut rng = trial_rng(seed, trial as u64);
            let f = gaussian_vector(&mut rng, self.ambient_dim);
            let phi = CoefficientField::new(dims.iter().map(|&m| gaussian_vector(&mut rng, m)).collect());
            let synth = self.synthesis(&phi).expect("shapes match");
            let anal = self.analysis(&f).expect("shapes match");
            let lhs = synth.dot(&f);
            let rhs = weighted_inner(&phi, &anal, &self.nodes).expect("shapes match");
            let scale = 1.0 + synth.norm() * f.norm();
            (lhs - rhs).abs() / scale
        });
        let worst = residuals.into_iter().fold(0.0_f64, f64::max);
        VerificationReport::builder("adjoint_consistency", Provenance::Sampled)
            .residual("max_relative_residual", worst, 1e-9)
            .constant("trials", trials as f64)
            .finish()
    }

    /// The frame operator, or an error when `λ_min(S) ≤ tol`.
    pub fn invertible_frame_operator(&self, tol: f64) -> Result<DMatrix<f64>> {
        let s = self.frame_operator().into_matrix();
        let lower = SymmetricSpectrum::of(&s).min();
        if lower <= tol {
            return Err(Error::SingularFrameOperator { lower });
        }
        Ok(s)
    }

    /// Upper frame (Bessel) bound `λ_max(S)`.
    pub fn bessel_bound(&self) -> f64 {
        SymmetricSpectrum::of(self.frame_operator().matrix()).max().max(0.0)
    }

    pub fn check_vector(&self, f: &DVector<f64>) -> Result<()> {
        if f.len() != self.ambient_dim {
            return Err(Error::shape("vector", self.ambient_dim, f.len()));
        }
        Ok(())
    }

    /// Errors unless `k` is `n × n` for this system's ambient dimension.
    pub fn check_square(&self, k: &DMatrix<f64>, name: &str) -> Result<()> {
        let n = self.ambient_dim;
        if k.shape() != (n, n) {
            return Err(Error::shape(
                name,
                format!("{n}x{n}"),
                format!("{}x{}", k.nrows(), k.ncols()),
            ));
        }
        Ok(())
    }

    /// Effective maps stacked vertically: the analysis operator without weights.
    pub fn stacked_effective(&self) -> DMatrix<f64> {
        let rows: usize = self.codomain_dims().iter().sum();
        let mut out = DMatrix::zeros(rows, self.ambient_dim);
        let mut r = 0;
        for t in &self.terms {
            let m = t.codomain_dim();
            out.view_mut((r, 0), (m, self.ambient_dim)).copy_from(&t.effective);
            r += m;
        }
        out
    }

    /// Spectrum of the frame operator.
    pub fn spectrum(&self) -> SymmetricSpectrum {
        SymmetricSpectrum::of(self.frame_operator().matrix())
    }

    /// Largest singular value across all effective maps.
    pub fn max_local_norm(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| singular_values(&t.effective).first().copied().unwrap_or(0.0))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameClass {
    BesselOnly,
    Frame,
    Tight,
    Parseval,
}

impl std::fmt::Display for FrameClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FrameClass::BesselOnly => "bessel-only",
            FrameClass::Frame => "frame",
            FrameClass::Tight => "tight",
            FrameClass::Parseval => "parseval",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub class: FrameClass,
}

impl FrameBounds {
    pub fn classify(lower: f64, upper: f64, tol: f64) -> Self {
        let class = if lower <= tol {
            FrameClass::BesselOnly
        } else if (lower - 1.0).abs() <= tol && (upper - 1.0).abs() <= tol {
            FrameClass::Parseval
        } else if (upper - lower).abs() <= tol {
            FrameClass::Tight
        } else {
            FrameClass::Frame
        };
        FrameBounds {
            lower,
            upper,
            class,
        }
    }

    pub fn is_frame(&self) -> bool {
        self.class != FrameClass::BesselOnly
    }
}

/// Fixtures used throughout the tests and examples: `E1` is the Parseval
/// coordinate system on `R²`, `E2` the same geometry with weights `(2, 1)`.
pub mod fixtures {
    use super::*;

    /// Coordinate subspaces `span{e_i}` of `R^n` with scalar local maps.
    pub fn coordinate_system(n: usize, weights: &[f64], maps: &[f64]) -> GFusionSystem {
        let terms = weights
            .iter()
            .zip(maps)
            .enumerate()
            .map(|(i, (&w, &x))| {
                FusionTerm::new(
                    Subspace::coordinate(n, &[i]).expect("axis in range"),
                    Operator::from_rows(&[vec![x]], 1).expect("finite"),
                    w,
                )
                .expect("valid term")
            })
            .collect();
        GFusionSystem::new(n, MeasureNodes::uniform(weights.len()), terms).expect("valid system")
    }

    pub fn e1() -> GFusionSystem {
        coordinate_system(2, &[1.0, 1.0], &[1.0, 1.0])
    }

    pub fn e2() -> GFusionSystem {
        coordinate_system(2, &[2.0, 1.0], &[1.0, 1.0])
    }

    /// One node on `span{e1}` in `R²`; Bessel but not a frame.
    pub fn single_node() -> GFusionSystem {
        coordinate_system(2, &[1.0], &[1.0])
    }

    /// Coordinate geometry whose local maps land in `R^n` (`X_i = e_i`), so
    /// `Λ_i = e_i e_iᵀ` is square.
    pub fn lifted_coordinate_system(n: usize, weights: &[f64]) -> GFusionSystem {
        let terms = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let mut col = DMatrix::zeros(n, 1);
                col[(i, 0)] = 1.0;
                FusionTerm::new(
                    Subspace::coordinate(n, &[i]).expect("axis in range"),
                    Operator::new(col).expect("finite"),
                    w,
                )
                .expect("valid term")
            })
            .collect();
        GFusionSystem::new(n, MeasureNodes::uniform(weights.len()), terms).expect("valid system")
    }
}
