//! Direct sums of systems over shared nodes, Parseval canonicalization and
//! the canonical dual.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{op_norm, orthonormalize_image, positive_sqrt, spd_inverse, Operator, Subspace};
use crate::report::{Provenance, VerificationReport};
use crate::system::{FrameBounds, FusionTerm, GFusionSystem};
use crate::tolerances::RANK_TOL;

/// A system on `R^{n+x}` assembled blockwise from a system on `R^n` and one on
/// `R^x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectSumSystem {
    system: GFusionSystem,
    left: GFusionSystem,
    right: GFusionSystem,
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

/// `χ ⊕ ξ`: node subspaces `F_i ⊕ G_i` and local maps `X_i ⊕ Y_i`. The sum
/// carries the weights `v_i` of `chi`; when `xi` has different weights `s_i`
/// its block is scaled by `s_i / v_i` so that `S_⊕ = S_χ ⊕ S_ξ` still holds.
pub fn direct_sum_system(chi: &GFusionSystem, xi: &GFusionSystem) -> Result<DirectSumSystem> {
    if chi.len() != xi.len() {
        return Err(Error::shape("direct sum node count", chi.len(), xi.len()));
    }
    for (i, (a, b)) in chi.nodes().nodes().iter().zip(xi.nodes().nodes()).enumerate() {
        if a.mu != b.mu {
            return Err(Error::shape(format!("mass of node {i}"), a.mu, b.mu));
        }
    }
    let terms = chi
        .terms()
        .iter()
        .zip(xi.terms())
        .map(|(a, b)| {
            let basis = block_diag(a.subspace().basis(), b.subspace().basis());
            let local = block_diag(a.local().matrix(), &(b.local().matrix() * (b.weight() / a.weight())));
            FusionTerm::new(Subspace::new(basis)?, Operator::new(local)?, a.weight())
        })
        .collect::<Result<Vec<_>>>()?;
    let system = GFusionSystem::new(
        chi.ambient_dim() + xi.ambient_dim(),
        chi.nodes().clone(),
        terms,
    )?;
    Ok(DirectSumSystem {
        system,
        left: chi.clone(),
        right: xi.clone(),
    })
}

impl DirectSumSystem {
    pub fn system(&self) -> &GFusionSystem {
        &self.system
    }

    pub fn into_system(self) -> GFusionSystem {
        self.system
    }

    pub fn components(&self) -> (&GFusionSystem, &GFusionSystem) {
        (&self.left, &self.right)
    }

    /// `S_⊕ = S_χ ⊕ S_ξ` and bounds `(min{A, C}, max{B, D})`.
    pub fn verify(&self, tol: f64) -> VerificationReport {
        let expected = block_diag(
            self.left.frame_operator().matrix(),
            self.right.frame_operator().matrix(),
        );
        let s = self.system.frame_operator().into_matrix();
        let n = self.left.ambient_dim();
        let off_block = self
            .system
            .terms()
            .iter()
            .zip(self.left.terms())
            .map(|(t, l)| off_block_norm(t.effective(), l.codomain_dim(), n))
            .fold(0.0, f64::max);
        let own = self.system.frame_bounds(tol);
        let a = self.left.frame_bounds(tol);
        let b = self.right.frame_bounds(tol);
        VerificationReport::builder("direct_sum", Provenance::ExactSpectral)
            .residual("block_residual", op_norm(&(s - expected)), tol)
            .residual("lower_bound_residual", (own.lower - a.lower.min(b.lower)).abs(), tol)
            .residual("upper_bound_residual", (own.upper - a.upper.max(b.upper)).abs(), tol)
            .residual("off_block", off_block, tol)
            .constant("lower", own.lower)
            .constant("upper", own.upper)
            .finish()
    }
}

/// Largest entry outside the two diagonal blocks of an `(m+p) × (n+x)` map.
fn off_block_norm(e: &DMatrix<f64>, m: usize, n: usize) -> f64 {
    let (rows, cols) = e.shape();
    let upper = e.view((0, n), (m, cols - n)).amax();
    let lower = e.view((m, 0), (rows - m, n)).amax();
    upper.max(lower)
}

fn push_through(sys: &GFusionSystem, r: &DMatrix<f64>) -> Result<GFusionSystem> {
    let terms = sys
        .terms()
        .iter()
        .map(|t| {
            let sub = orthonormalize_image(r, t.subspace(), RANK_TOL)?;
            FusionTerm::from_effective(sub, &(t.effective() * r), t.weight())
        })
        .collect::<Result<Vec<_>>>()?;
    GFusionSystem::new(sys.ambient_dim(), sys.nodes().clone(), terms)
}

/// Pushes a frame through `S^{-1/2}`; the result is Parseval.
pub fn parsevalize(sys: &GFusionSystem, tol: f64) -> Result<(GFusionSystem, VerificationReport)> {
    let s = sys.invertible_frame_operator(tol)?;
    let r = positive_sqrt(&s, true)?;
    let out = push_through(sys, &r)?;
    let n = sys.ambient_dim();
    let residual = op_norm(&(out.frame_operator().into_matrix() - DMatrix::identity(n, n)));
    let report = VerificationReport::builder("parsevalize", Provenance::ExactSpectral)
        .residual("parseval_residual", residual, tol)
        .finish();
    Ok((out, report))
}

/// Pushes a frame through `S⁻¹`; the dual's frame operator is `S⁻¹` and its
/// bounds are `1/B` and `1/A`.
pub fn canonical_dual(sys: &GFusionSystem, tol: f64) -> Result<(GFusionSystem, VerificationReport)> {
    let s = sys.invertible_frame_operator(tol)?;
    let s_inv = spd_inverse(&s)?;
    let out = push_through(sys, &s_inv)?;
    let residual = op_norm(&(out.frame_operator().into_matrix() - &s_inv));
    let original = sys.frame_bounds(tol);
    let dual: FrameBounds = out.frame_bounds(tol);
    let report = VerificationReport::builder("canonical_dual", Provenance::ExactSpectral)
        .residual("dual_operator_residual", residual, tol)
        .residual("lower_bound_shortfall", (1.0 / original.upper - dual.lower).max(0.0), tol)
        .residual("upper_bound_excess", (dual.upper - 1.0 / original.lower).max(0.0), tol)
        .constant("dual_lower", dual.lower)
        .constant("dual_upper", dual.upper)
        .finish();
    Ok((out, report))
}
