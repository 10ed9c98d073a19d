//! The mixed frame operator `S_{ξχ} = Σ μ_i v_i s_i Ξ_iᵀ Λ_i` of two Bessel
//! systems over shared nodes and the frame certificates derived from it.
//!
//! Convention: `D₁ = λ_max(S_χ)` and `D₂ = λ_max(S_ξ)`. Lower bounds for `χ`
//! are divided by `D₂` and lower bounds for `ξ` by `D₁`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{op_norm, singular_values, Operator, SymmetricSpectrum};
use crate::par;
use crate::report::{Provenance, ReportBuilder, VerificationReport};
use crate::resolution::{verify_resolution, ResolutionFamily};
use crate::rng::{trial_rng, unit_vector};
use crate::system::GFusionSystem;

/// Two systems on the same space and nodes: `chi` with weights `v` and maps
/// `Λ_i`, `xi` with weights `s` and maps `Ξ_i` of matching codomains.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSystem {
    chi: GFusionSystem,
    xi: GFusionSystem,
}

impl PairSystem {
    pub fn new(chi: GFusionSystem, xi: GFusionSystem) -> Result<Self> {
        if chi.ambient_dim() != xi.ambient_dim() {
            return Err(Error::shape("pair ambient dimension", chi.ambient_dim(), xi.ambient_dim()));
        }
        if chi.len() != xi.len() {
            return Err(Error::shape("pair node count", chi.len(), xi.len()));
        }
        for (i, (a, b)) in chi.nodes().nodes().iter().zip(xi.nodes().nodes()).enumerate() {
            if a.mu != b.mu {
                return Err(Error::shape(format!("mass of node {i}"), a.mu, b.mu));
            }
        }
        for (i, (a, b)) in chi.terms().iter().zip(xi.terms()).enumerate() {
            if a.codomain_dim() != b.codomain_dim() {
                return Err(Error::shape(
                    format!("local space of node {}", chi.nodes().nodes()[i].id),
                    a.codomain_dim(),
                    b.codomain_dim(),
                ));
            }
        }
        Ok(PairSystem { chi, xi })
    }

    pub fn chi(&self) -> &GFusionSystem {
        &self.chi
    }

    pub fn xi(&self) -> &GFusionSystem {
        &self.xi
    }

    /// The pair with the roles of the two systems exchanged.
    pub fn swapped(&self) -> PairSystem {
        PairSystem {
            chi: self.xi.clone(),
            xi: self.chi.clone(),
        }
    }

    /// `D₁ = λ_max(S_χ)`.
    pub fn d1(&self) -> f64 {
        self.chi.bessel_bound()
    }

    /// `D₂ = λ_max(S_ξ)`.
    pub fn d2(&self) -> f64 {
        self.xi.bessel_bound()
    }

    fn contributions(&self) -> Vec<DMatrix<f64>> {
        par::map_range(self.chi.len(), |i| {
            let (a, b) = (self.chi.term(i), self.xi.term(i));
            b.effective().tr_mul(a.effective()) * (self.chi.nodes().mu(i) * a.weight() * b.weight())
        })
    }
}

/// `S_{ξχ} = Σ_i μ_i v_i s_i Ξ_iᵀ Λ_i`.
pub fn pair_frame_operator(p: &PairSystem) -> Operator {
    let n = p.chi.ambient_dim();
    Operator::wrap(
        p.contributions()
            .into_iter()
            .fold(DMatrix::zeros(n, n), |acc, c| acc + c),
    )
}

/// `S_{ξχ}ᵀ = S_{χξ}` and `‖S_{ξχ}‖ ≤ √(D₁ D₂)`.
pub fn pair_adjoint_and_norm(p: &PairSystem, tol: f64) -> VerificationReport {
    let s = pair_frame_operator(p).into_matrix();
    let swapped = pair_frame_operator(&p.swapped()).into_matrix();
    let adjoint = op_norm(&(s.transpose() - swapped));
    let norm = op_norm(&s);
    let (d1, d2) = (p.d1(), p.d2());
    let bound = (d1 * d2).sqrt();
    VerificationReport::builder("pair_adjoint_and_norm", Provenance::ExactSpectral)
        .residual("adjoint_residual", adjoint, tol)
        .residual("norm_excess", (norm - bound).max(0.0), tol)
        .constant("norm", norm)
        .constant("norm_bound", bound)
        .constant("D1", d1)
        .constant("D2", d2)
        .finish()
}

/// Lower-bound certificates for both systems from `σ_min(S_{ξχ}) ≥ m`:
/// `χ` gets `m²/D₂` and `ξ` gets `m²/D₁`.
fn certify_both(builder: ReportBuilder, p: &PairSystem, m: f64, tol: f64) -> ReportBuilder {
    let (d1, d2) = (p.d1(), p.d2());
    let lam_chi = p.chi.spectrum().min();
    let lam_xi = p.xi.spectrum().min();
    let chi_bound = if d2 > 0.0 { m * m / d2 } else { 0.0 };
    let xi_bound = if d1 > 0.0 { m * m / d1 } else { 0.0 };
    builder
        .constant("D1", d1)
        .constant("D2", d2)
        .constant("chi_lower_bound", chi_bound)
        .constant("xi_lower_bound", xi_bound)
        .constant("chi_lambda_min", lam_chi)
        .constant("xi_lambda_min", lam_xi)
        .residual("chi_bound_excess", (chi_bound - lam_chi).max(0.0), tol)
        .residual("xi_bound_excess", (xi_bound - lam_xi).max(0.0), tol)
}

/// When `S_{ξχ}` is bounded below by `M = σ_min > tol`, builds the resolution
/// `W_i = v_i s_i K Ξ_iᵀ Λ_i` with `K = S_{ξχ}⁻¹`, checks it and `K S_{ξχ} = I`,
/// and certifies the lower bounds `M²/D₂` for `χ` and `M²/D₁` for `ξ`.
pub fn bounded_below_analysis(p: &PairSystem, tol: f64) -> VerificationReport {
    let s = pair_frame_operator(p).into_matrix();
    let n = s.nrows();
    let m = singular_values(&s).last().copied().unwrap_or(0.0);
    let builder = VerificationReport::builder("bounded_below", Provenance::ExactSpectral).constant("M", m);
    if m <= tol {
        return builder
            .fail(format!("pair operator is not bounded below (σ_min = {m:.3e})"))
            .finish();
    }
    let k = match s.clone().try_inverse() {
        Some(k) => k,
        None => return builder.fail("pair operator could not be inverted").finish(),
    };
    let members = p
        .chi
        .terms()
        .iter()
        .zip(p.xi.terms())
        .map(|(a, b)| &k * b.effective().tr_mul(a.effective()) * (a.weight() * b.weight()))
        .collect();
    let family = ResolutionFamily::new(n, p.chi.nodes().clone(), members).expect("pair shapes checked");
    let resolution = verify_resolution(&family, tol);
    let converse = op_norm(&(&k * &s - DMatrix::identity(n, n)));
    let builder = builder
        .residual(
            "identity_residual",
            resolution.residual("identity_residual").unwrap_or(f64::INFINITY),
            tol,
        )
        .residual("inverse_residual", converse, tol);
    certify_both(builder, p, m, tol).finish()
}

/// Evaluates `h(f) = ‖f − Sf‖ − λ₁‖f‖ − λ₂‖Sf‖` on unit vectors: `trials`
/// seeded random directions plus the eigenvectors of `sym(S)`, `SᵀS` and
/// `(I−S)ᵀ(I−S)`. If `max h ≤ tol` the certified lower bound for `χ` is
/// `(1/D₂)((1−λ₁)/(1+λ₂))²`.
pub fn perturbation_bound(
    p: &PairSystem,
    lambda1: f64,
    lambda2: f64,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    if !(lambda1.is_finite() && lambda1 < 1.0) {
        return Err(Error::Parameter(format!("lambda1 must be below 1, got {lambda1}")));
    }
    if !(lambda2.is_finite() && lambda2 > -1.0) {
        return Err(Error::Parameter(format!("lambda2 must exceed -1, got {lambda2}")));
    }
    let s = pair_frame_operator(p).into_matrix();
    let n = s.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let h = |f: &DVector<f64>| {
        let sf = &s * f;
        (f - &sf).norm() - lambda1 * f.norm() - lambda2 * sf.norm()
    };

    let mut directions: Vec<DVector<f64>> = Vec::new();
    let residual = &id - &s;
    for m in [s.clone(), s.tr_mul(&s), residual.tr_mul(&residual)] {
        let spec = SymmetricSpectrum::of(&m);
        directions.extend(spec.vectors.column_iter().map(|c| c.into_owned()));
    }
    let random = par::map_range(trials, |k| {
        let mut rng = trial_rng(seed, k as u64);
        h(&unit_vector(&mut rng, n))
    });
    let worst = directions
        .iter()
        .map(&h)
        .chain(random)
        .fold(f64::NEG_INFINITY, f64::max);
    let worst = if worst.is_finite() { worst } else { 0.0 };

    let builder = VerificationReport::builder("perturbation_bound", Provenance::Sampled)
        .constant("max_hypothesis_gap", worst)
        .constant("probes", (trials + directions.len()) as f64)
        .note("hypothesis checked on sampled unit vectors");
    if worst > tol {
        return Ok(builder
            .fail(format!("perturbation hypothesis fails: max h = {worst:.3e}"))
            .finish());
    }
    let m = (1.0 - lambda1) / (1.0 + lambda2);
    let d2 = p.d2();
    let bound = if d2 > 0.0 { m * m / d2 } else { 0.0 };
    let lam_chi = p.chi.spectrum().min();
    Ok(builder
        .constant("D2", d2)
        .constant("chi_lower_bound", bound)
        .constant("chi_lambda_min", lam_chi)
        .residual("chi_bound_excess", (bound - lam_chi).max(0.0), tol)
        .finish())
}

/// `‖I − S_{ξχ}‖ ≤ λ` with `λ ∈ [0, 1)` certifies `χ` with lower bound
/// `(1−λ)²/D₂` and `ξ` with lower bound `(1−λ)²/D₁`.
pub fn symmetric_perturbation(p: &PairSystem, lambda: f64, tol: f64) -> Result<VerificationReport> {
    if !(lambda.is_finite() && (0.0..1.0).contains(&lambda)) {
        return Err(Error::Parameter(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    let s = pair_frame_operator(p).into_matrix();
    let n = s.nrows();
    let distance = op_norm(&(DMatrix::identity(n, n) - &s));
    let builder = VerificationReport::builder("symmetric_perturbation", Provenance::ExactSpectral)
        .constant("distance_to_identity", distance)
        .constant("lambda", lambda);
    if distance > lambda + tol {
        return Ok(builder
            .fail(format!("‖I − S‖ = {distance:.6e} exceeds λ = {lambda}"))
            .finish());
    }
    Ok(certify_both(builder, p, 1.0 - lambda, tol).finish())
}
