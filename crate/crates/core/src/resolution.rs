//! Continuous resolutions of the identity built from, or certifying, a
//! g-fusion frame.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{op_norm, spd_inverse, SymmetricSpectrum};
use crate::measure::MeasureNodes;
use crate::par;
use crate::report::{Provenance, VerificationReport};
use crate::rng::{gaussian_vector, trial_rng};
use crate::system::{FrameBounds, GFusionSystem};

/// Operators `W_i` on `R^n` indexed by quadrature nodes, optionally with the
/// factors `T_i` they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionFamily {
    ambient_dim: usize,
    nodes: MeasureNodes,
    members: Vec<DMatrix<f64>>,
    factors: Option<Vec<DMatrix<f64>>>,
}

impl ResolutionFamily {
    pub fn new(ambient_dim: usize, nodes: MeasureNodes, members: Vec<DMatrix<f64>>) -> Result<Self> {
        if members.len() != nodes.len() {
            return Err(Error::shape("resolution members", nodes.len(), members.len()));
        }
        for (i, w) in members.iter().enumerate() {
            if w.shape() != (ambient_dim, ambient_dim) {
                return Err(Error::shape(
                    format!("member {i}"),
                    format!("{ambient_dim}x{ambient_dim}"),
                    format!("{}x{}", w.nrows(), w.ncols()),
                ));
            }
        }
        Ok(ResolutionFamily {
            ambient_dim,
            nodes,
            members,
            factors: None,
        })
    }

    pub fn with_factors(mut self, factors: Vec<DMatrix<f64>>) -> Result<Self> {
        if factors.len() != self.members.len() {
            return Err(Error::shape("resolution factors", self.members.len(), factors.len()));
        }
        self.factors = Some(factors);
        Ok(self)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn nodes(&self) -> &MeasureNodes {
        &self.nodes
    }

    pub fn members(&self) -> &[DMatrix<f64>] {
        &self.members
    }

    pub fn factors(&self) -> Option<&[DMatrix<f64>]> {
        self.factors.as_deref()
    }

    /// `Σ_i μ_i W_i`.
    pub fn weighted_sum(&self) -> DMatrix<f64> {
        let n = self.ambient_dim;
        self.members
            .iter()
            .zip(self.nodes.masses())
            .fold(DMatrix::zeros(n, n), |acc, (w, mu)| acc + w * mu)
    }
}

/// `‖Σ_i μ_i W_i − I‖_op ≤ tol`.
pub fn verify_resolution(fam: &ResolutionFamily, tol: f64) -> VerificationReport {
    let n = fam.ambient_dim;
    let residual = op_norm(&(fam.weighted_sum() - DMatrix::identity(n, n)));
    VerificationReport::builder("verify_resolution", Provenance::ExactSpectral)
        .residual("identity_residual", residual, tol)
        .constant("members", fam.members.len() as f64)
        .finish()
}

/// `T_i = Λ_i S⁻¹` and `W_i = v_i² Λ_iᵀ T_i`.
pub fn canonical_resolution(sys: &GFusionSystem, tol: f64) -> Result<ResolutionFamily> {
    let s_inv = spd_inverse(&sys.invertible_frame_operator(tol)?)?;
    let factors: Vec<DMatrix<f64>> =
        par::map_slice(sys.terms(), |t| t.effective() * &s_inv);
    let members = sys
        .terms()
        .iter()
        .zip(&factors)
        .map(|(t, f)| t.effective().tr_mul(f) * (t.weight() * t.weight()))
        .collect();
    ResolutionFamily::new(sys.ambient_dim(), sys.nodes().clone(), members)?.with_factors(factors)
}

/// `Σ_i μ_i v_i² ‖T_i f‖²`.
pub fn resolution_energy(sys: &GFusionSystem, factors: &[DMatrix<f64>], f: &DVector<f64>) -> Result<f64> {
    check_factors(sys, factors, false)?;
    sys.check_vector(f)?;
    Ok(sys
        .terms()
        .iter()
        .zip(factors)
        .enumerate()
        .map(|(i, (t, tf))| sys.nodes().mu(i) * t.weight() * t.weight() * (tf * f).norm_squared())
        .sum())
}

/// Energy operator `Σ_i μ_i v_i² T_iᵀ T_i`; its quadratic form is the energy.
fn energy_operator(sys: &GFusionSystem, factors: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = sys.ambient_dim();
    sys.terms()
        .iter()
        .zip(factors)
        .enumerate()
        .fold(DMatrix::zeros(n, n), |acc, (i, (t, tf))| {
            acc + tf.tr_mul(tf) * (sys.nodes().mu(i) * t.weight() * t.weight())
        })
}

fn check_factors(sys: &GFusionSystem, factors: &[DMatrix<f64>], square: bool) -> Result<()> {
    if factors.len() != sys.len() {
        return Err(Error::shape("per-node operators", sys.len(), factors.len()));
    }
    let n = sys.ambient_dim();
    for (i, (t, tf)) in sys.terms().iter().zip(factors).enumerate() {
        let rows = if square { n } else { t.codomain_dim() };
        if tf.shape() != (rows, n) {
            return Err(Error::shape(
                format!("operator for node {}", sys.nodes().nodes()[i].id),
                format!("{rows}x{n}"),
                format!("{}x{}", tf.nrows(), tf.ncols()),
            ));
        }
    }
    Ok(())
}

/// Two-sided energy bound of the canonical family on `trials` random vectors:
/// `C/D² ‖f‖² ≤ Σ μ_i v_i² ‖T_i f‖² ≤ D/C² ‖f‖²` where `(C, D)` are the frame
/// bounds.
pub fn canonical_energy_check(
    sys: &GFusionSystem,
    fam: &ResolutionFamily,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    let factors = fam
        .factors()
        .ok_or_else(|| Error::InvalidSystem("resolution family carries no factors".into()))?;
    check_factors(sys, factors, false)?;
    let bounds = sys.frame_bounds(tol);
    let (c, d) = (bounds.lower, bounds.upper);
    if c <= tol {
        return Err(Error::SingularFrameOperator { lower: c });
    }
    let (lo, hi) = (c / (d * d), d / (c * c));
    let ratios = par::map_range(trials, |k| {
        let mut rng = trial_rng(seed, k as u64);
        let f = gaussian_vector(&mut rng, sys.ambient_dim());
        let norm2 = f.norm_squared().max(f64::MIN_POSITIVE);
        resolution_energy(sys, factors, &f).expect("shapes checked") / norm2
    });
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (min, max) = if ratios.is_empty() { (lo, hi) } else { (min, max) };
    Ok(
        VerificationReport::builder("canonical_energy_bounds", Provenance::Sampled)
            .residual("lower_violation", (lo - min).max(0.0), tol)
            .residual("upper_violation", (max - hi).max(0.0), tol)
            .constant("lower_bound", lo)
            .constant("upper_bound", hi)
            .constant("min_energy_ratio", min)
            .constant("max_energy_ratio", max)
            .constant("trials", trials as f64)
            .finish(),
    )
}

/// `(1/D) ‖Σ_i μ_i v_i² Λ_iᵀ T_i f‖² ≤ Σ_i μ_i v_i² ‖T_i f‖²` for one `f`, where
/// `D` is the upper frame bound and `T_i` has shape `m_i × n`.
pub fn energy_lower_check(
    sys: &GFusionSystem,
    factors: &[DMatrix<f64>],
    f: &DVector<f64>,
    tol: f64,
) -> Result<VerificationReport> {
    check_factors(sys, factors, false)?;
    sys.check_vector(f)?;
    let d = sys.bessel_bound();
    let mut g = DVector::zeros(sys.ambient_dim());
    for (i, (t, tf)) in sys.terms().iter().zip(factors).enumerate() {
        g += t.effective().tr_mul(&(tf * f)) * (sys.nodes().mu(i) * t.weight() * t.weight());
    }
    // With D = 0 every effective map vanishes and so does g.
    let lhs = if d > 0.0 { g.norm_squared() / d } else { 0.0 };
    let rhs = resolution_energy(sys, factors, f)?;
    Ok(
        VerificationReport::builder("energy_lower", Provenance::ExactSpectral)
            .residual("violation", (lhs - rhs).max(0.0), tol * rhs.max(1.0))
            .constant("lhs", lhs)
            .constant("rhs", rhs)
            .constant("upper_frame_bound", d)
            .finish(),
    )
}

/// Checks a family `T_i: R^n → R^n` with `T_iᵀ Λ_i = T_i` whose operators
/// `v_i² Λ_iᵀ T_i` resolve the identity, and the resulting energy bounds
/// `(1/D) ‖f‖² ≤ Σ μ_i v_i² ‖T_i f‖² ≤ D·E ‖f‖²` with `E = max ‖T_i‖²`.
///
/// Only defined when every local space has dimension `n`. A failed resolution
/// is reported, a failed factorization hypothesis is an error.
pub fn bounded_resolution_check(
    sys: &GFusionSystem,
    factors: &[DMatrix<f64>],
    tol: f64,
) -> Result<VerificationReport> {
    let n = sys.ambient_dim();
    for (i, t) in sys.terms().iter().enumerate() {
        if t.codomain_dim() != n {
            return Err(Error::shape(
                format!(
                    "local space of node {} (the factorization hypothesis needs U_w = U)",
                    sys.nodes().nodes()[i].id
                ),
                n,
                t.codomain_dim(),
            ));
        }
    }
    check_factors(sys, factors, true)?;
    let mut worst = 0.0_f64;
    for (i, (t, tf)) in sys.terms().iter().zip(factors).enumerate() {
        let defect = op_norm(&(tf.tr_mul(t.effective()) - tf));
        if defect > tol {
            return Err(Error::hypothesis(
                "T_i^T Λ_i = T_i",
                format!("node {}: defect {defect:.3e}", sys.nodes().nodes()[i].id),
            ));
        }
        worst = worst.max(defect);
    }

    let members = sys
        .terms()
        .iter()
        .zip(factors)
        .map(|(t, tf)| t.effective().tr_mul(tf) * (t.weight() * t.weight()))
        .collect();
    let fam = ResolutionFamily::new(n, sys.nodes().clone(), members)?;
    let resolution = verify_resolution(&fam, tol);

    let d = sys.bessel_bound();
    let e = factors.iter().map(|t| op_norm(t).powi(2)).fold(0.0, f64::max);
    let energy = SymmetricSpectrum::of(&energy_operator(sys, factors));
    let mut report = VerificationReport::builder("bounded_resolution", Provenance::ExactSpectral)
        .residual("factorization_defect", worst, tol)
        .residual(
            "identity_residual",
            resolution.residual("identity_residual").unwrap_or(f64::INFINITY),
            tol,
        )
        .constant("E", e)
        .constant("upper_frame_bound", d)
        .constant("min_energy_ratio", energy.min())
        .constant("max_energy_ratio", energy.max());
    if d > 0.0 {
        report = report
            .residual("lower_violation", (1.0 / d - energy.min()).max(0.0), tol)
            .residual("upper_violation", (energy.max() - d * e).max(0.0), tol);
    } else {
        report = report.fail("upper frame bound is zero");
    }
    Ok(report.finish())
}

/// Certifies a frame from `λ_max(Σ μ_i Λ_iᵀ Λ_i) ≤ 1/A` and the identity
/// resolved by `v_i Λ_iᵀ Λ_i`. The certified bounds are `A` and
/// `max v_i² / A`.
pub fn frame_from_resolution(sys: &GFusionSystem, a: f64, tol: f64) -> Result<FrameBounds> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::Parameter(format!("A must be positive, got {a}")));
    }
    let n = sys.ambient_dim();
    let unweighted = sys
        .terms()
        .iter()
        .enumerate()
        .fold(DMatrix::zeros(n, n), |acc, (i, t)| {
            acc + t.effective().tr_mul(t.effective()) * sys.nodes().mu(i)
        });
    let top = SymmetricSpectrum::of(&unweighted).max();
    if top > 1.0 / a + tol {
        return Err(Error::hypothesis(
            "unweighted Bessel bound 1/A",
            format!("λ_max = {top:.6e} exceeds 1/A = {:.6e}", 1.0 / a),
        ));
    }
    let members = sys
        .terms()
        .iter()
        .map(|t| t.effective().tr_mul(t.effective()) * t.weight())
        .collect();
    let fam = ResolutionFamily::new(n, sys.nodes().clone(), members)?;
    let resolution = verify_resolution(&fam, tol);
    if !resolution.passed {
        return Err(Error::hypothesis(
            "v_i Λ_iᵀ Λ_i resolves the identity",
            format!(
                "residual {:.6e}",
                resolution.residual("identity_residual").unwrap_or(f64::NAN)
            ),
        ));
    }

    let b = sys.weights().into_iter().map(|v| v * v).fold(0.0, f64::max);
    let certified = FrameBounds::classify(a, b / a, tol);
    let actual = sys.frame_bounds(tol);
    if certified.lower > actual.lower + tol {
        return Err(Error::CertificateViolation(format!(
            "certified lower bound {a} exceeds λ_min(S) = {}",
            actual.lower
        )));
    }
    if actual.upper > certified.upper + tol {
        return Err(Error::CertificateViolation(format!(
            "λ_max(S) = {} exceeds certified upper bound {}",
            actual.upper, certified.upper
        )));
    }
    Ok(certified)
}
