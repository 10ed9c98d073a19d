//! Seeded random systems for property campaigns: orthonormal bases from
//! orthogonalized Gaussian matrices, weights and masses in `[0.5, 2]`, local
//! maps with entries in `[-1, 1]`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::linalg::{orthonormal_range, Operator, Subspace};
use crate::measure::MeasureNodes;
use crate::rng::{gaussian_matrix, uniform_matrix};
use crate::system::{FusionTerm, GFusionSystem};
use crate::tolerances::RANK_TOL;

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 16;
pub const MAX_NODES: usize = 8;

/// Largest accepted condition number `λ_max/λ_min` of a random frame.
pub const MAX_CONDITION: f64 = 1e4;

const WEIGHT_RANGE: (f64, f64) = (0.5, 2.0);

/// Ambient dimension in `[2, max_dim]` and node count in `[1, 8]`.
pub fn random_shape<R: Rng>(rng: &mut R, max_dim: usize) -> (usize, usize) {
    let max_dim = max_dim.clamp(MIN_DIM, MAX_DIM);
    (rng.random_range(MIN_DIM..=max_dim), rng.random_range(1..=MAX_NODES))
}

/// Random `k`-dimensional subspace of the span of `within` (orthonormal columns).
fn random_subspace_in<R: Rng>(rng: &mut R, within: &DMatrix<f64>, k: usize) -> Subspace {
    let r = within.ncols();
    loop {
        let q = orthonormal_range(&gaussian_matrix(rng, r, k), RANK_TOL);
        if q.ncols() == k {
            let basis = orthonormal_range(&(within * q), RANK_TOL);
            if basis.ncols() == k {
                return Subspace::new(basis).expect("orthonormal by construction");
            }
        }
    }
}

fn random_weight<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(WEIGHT_RANGE.0..=WEIGHT_RANGE.1)
}

fn random_nodes<R: Rng>(rng: &mut R, count: usize) -> MeasureNodes {
    let masses: Vec<f64> = (0..count).map(|_| random_weight(rng)).collect();
    MeasureNodes::from_masses(&masses).expect("positive masses")
}

fn random_term<R: Rng>(rng: &mut R, within: &DMatrix<f64>, k: usize, m: usize) -> FusionTerm {
    let subspace = random_subspace_in(rng, within, k);
    let local = Operator::new(uniform_matrix(rng, m, k, -1.0, 1.0)).expect("finite");
    FusionTerm::new(subspace, local, random_weight(rng)).expect("valid by construction")
}

/// A random system on `R^n` with `nodes` nodes. Subspace and local-space
/// dimensions are drawn from `[1, n]`; the result need not be a frame.
pub fn random_system<R: Rng>(rng: &mut R, n: usize, nodes: usize) -> GFusionSystem {
    let full = DMatrix::identity(n, n);
    let measure = random_nodes(rng, nodes);
    let terms = (0..nodes)
        .map(|_| {
            let k = rng.random_range(1..=n);
            let m = rng.random_range(1..=n);
            random_term(rng, &full, k, m)
        })
        .collect();
    GFusionSystem::new(n, measure, terms).expect("valid by construction")
}

/// A random frame with condition number at most [`MAX_CONDITION`]. Subspace
/// dimensions are at least `⌈n/nodes⌉` and local spaces at least as large as
/// the subspace, so the subspaces can cover `R^n`.
pub fn random_frame<R: Rng>(rng: &mut R, n: usize, nodes: usize) -> GFusionSystem {
    let measure = random_nodes(rng, nodes);
    random_frame_on(rng, n, &measure)
}

/// Like [`random_frame`] but on the given nodes.
pub fn random_frame_on<R: Rng>(rng: &mut R, n: usize, nodes: &MeasureNodes) -> GFusionSystem {
    let full = DMatrix::identity(n, n);
    let min_k = n.div_ceil(nodes.len().max(1)).max(1);
    loop {
        let terms = (0..nodes.len())
            .map(|_| {
                let k = rng.random_range(min_k..=n);
                let m = rng.random_range(k..=n);
                random_term(rng, &full, k, m)
            })
            .collect();
        let sys = GFusionSystem::new(n, nodes.clone(), terms).expect("valid by construction");
        if condition_number(&sys) <= MAX_CONDITION {
            return sys;
        }
    }
}

/// A random system whose subspaces all lie in a random proper subspace of
/// `R^n`, so its frame operator is singular.
pub fn random_bessel_only<R: Rng>(rng: &mut R, n: usize, nodes: usize) -> (GFusionSystem, Subspace) {
    let r = rng.random_range(1..n);
    let carrier = random_subspace_in(rng, &DMatrix::identity(n, n), r);
    let measure = random_nodes(rng, nodes);
    let terms = (0..nodes)
        .map(|_| {
            let k = rng.random_range(1..=r);
            let m = rng.random_range(1..=n);
            random_term(rng, carrier.basis(), k, m)
        })
        .collect();
    let sys = GFusionSystem::new(n, measure, terms).expect("valid by construction");
    (sys, carrier)
}

/// A second system on the nodes of `chi` with the same local-space
/// dimensions, random subspaces and weights. With `frame` set it is resampled
/// until its condition number is at most [`MAX_CONDITION`]; `None` if that
/// does not happen within 1000 draws.
pub fn random_partner<R: Rng>(rng: &mut R, chi: &GFusionSystem, frame: bool) -> Option<GFusionSystem> {
    let n = chi.ambient_dim();
    let full = DMatrix::identity(n, n);
    let min_k = if frame { n.div_ceil(chi.len()).max(1) } else { 1 };
    for _ in 0..1000 {
        let terms = chi
            .codomain_dims()
            .into_iter()
            .map(|m| {
                let k = rng.random_range(min_k..=n);
                random_term(rng, &full, k, m)
            })
            .collect();
        let sys = GFusionSystem::new(n, chi.nodes().clone(), terms).expect("valid by construction");
        if !frame || condition_number(&sys) <= MAX_CONDITION {
            return Some(sys);
        }
    }
    None
}

/// A system sharing the nodes, subspaces and local-space dimensions of `sys`
/// with fresh weights.
pub fn random_reweighting<R: Rng>(rng: &mut R, sys: &GFusionSystem) -> GFusionSystem {
    let weights: Vec<f64> = (0..sys.len()).map(|_| random_weight(rng)).collect();
    sys.with_weights(&weights).expect("positive weights")
}

/// Symmetric positive semidefinite `B Bᵀ / n` with Gaussian `B`.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let b = gaussian_matrix(rng, n, n);
    &b * b.transpose() / n as f64
}

/// A Gaussian `n × n` matrix.
pub fn random_square<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    gaussian_matrix(rng, n, n)
}

/// Condition number `λ_max/λ_min` of a frame operator.
pub fn condition_number(sys: &GFusionSystem) -> f64 {
    let spec = sys.spectrum();
    if spec.min() > 0.0 {
        spec.max() / spec.min()
    } else {
        f64::INFINITY
    }
}
