//! Seeded property campaign run by `cgfusion selftest`. Every property draws
//! its instances from independent per-instance streams and reports the worst
//! value of each metric, so the output depends only on the configuration.

use nalgebra::{DMatrix, DVector};

use crate::atomic::{atomic_decompose, atomic_equiv_check, transform_shift};
use crate::direct_sum::{canonical_dual, direct_sum_system, parsevalize};
use crate::linalg::{op_norm, orthonormal_range, Operator, SymmetricSpectrum};
use crate::measure::{validate_nodes, weighted_norm};
use crate::pair::{bounded_below_analysis, pair_adjoint_and_norm, PairSystem};
use crate::par;
use crate::random::{
    random_bessel_only, random_frame, random_frame_on, random_partner, random_psd, random_shape,
    random_square, random_system, MAX_DIM,
};
use crate::report::{Provenance, VerificationReport};
use crate::resolution::{canonical_resolution, energy_lower_check, resolution_energy, verify_resolution};
use crate::rng::{gaussian_matrix, trial_rng, unit_vector, TrialRng};
use crate::system::{FusionTerm, GFusionSystem};
use crate::tolerances::RANK_TOL;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignConfig {
    pub seed: u64,
    /// Random instances per property.
    pub instances: usize,
    /// Random probe vectors per instance.
    pub trials: usize,
    pub tol: f64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            seed: 0,
            instances: 25,
            trials: 100,
            tol: 1e-9,
        }
    }
}

type Metrics = Vec<(&'static str, f64, f64)>;

struct Property {
    name: &'static str,
    run: fn(&mut TrialRng, &CampaignConfig) -> Metrics,
}

fn aggregate(name: &str, count: usize, results: Vec<Metrics>) -> VerificationReport {
    let mut worst: Vec<(&'static str, f64, f64)> = Vec::new();
    for metrics in results {
        for (key, value, tol) in metrics {
            let value = if value.is_nan() { f64::INFINITY } else { value };
            match worst.iter_mut().find(|(k, _, _)| *k == key) {
                Some(entry) => entry.1 = entry.1.max(value),
                None => worst.push((key, value, tol)),
            }
        }
    }
    let mut b = VerificationReport::builder(name, Provenance::Sampled).constant("instances", count as f64);
    for (key, value, tol) in worst {
        b = b.residual(key, value, tol);
    }
    b.finish()
}

fn run_property(index: usize, p: &Property, cfg: &CampaignConfig) -> VerificationReport {
    let stream = cfg.seed.wrapping_add((index as u64) << 40);
    let results = par::map_range(cfg.instances, |i| {
        let mut rng = trial_rng(stream, i as u64);
        (p.run)(&mut rng, cfg)
    });
    aggregate(p.name, cfg.instances, results)
}

/// Runs every property and returns the reports sorted by check name.
pub fn run_campaign(cfg: &CampaignConfig) -> Vec<VerificationReport> {
    let properties = properties();
    let mut reports: Vec<VerificationReport> = properties
        .iter()
        .enumerate()
        .map(|(i, p)| run_property(i, p, cfg))
        .collect();
    reports.sort_by(|a, b| a.check.cmp(&b.check));
    reports
}

fn shape(rng: &mut TrialRng) -> (usize, usize) {
    random_shape(rng, MAX_DIM)
}

fn basis_vector(n: usize, j: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[j] = 1.0;
    e
}

fn rayleigh(s: &DMatrix<f64>, f: &DVector<f64>) -> f64 {
    f.dot(&(s * f)) / f.norm_squared()
}

fn properties() -> Vec<Property> {
    vec![
        Property {
            name: "frame_operator_composition",
            run: |rng, _| {
                let (n, nodes) = shape(rng);
                let sys = random_system(rng, n, nodes);
                let s = sys.frame_operator().into_matrix();
                let mut composed = DMatrix::zeros(n, n);
                for j in 0..n {
                    let col = sys.synthesis(&sys.analysis(&basis_vector(n, j)).unwrap()).unwrap();
                    composed.set_column(j, &col);
                }
                let seq = sys.frame_operator_sequential().into_matrix();
                vec![
                    ("composition_residual", op_norm(&(&s - composed)), 1e-9),
                    ("symmetry_residual", op_norm(&(&s - s.transpose())), 1e-10),
                    ("negative_eigenvalue", (-SymmetricSpectrum::of(&s).min()).max(0.0), 1e-9),
                    ("sequential_difference", op_norm(&(&s - seq)), 1e-12),
                ]
            },
        },
        Property {
            name: "bound_optimality",
            run: |rng, cfg| {
                let (n, nodes) = shape(rng);
                let sys = random_system(rng, n, nodes);
                let s = sys.frame_operator().into_matrix();
                let spec = SymmetricSpectrum::of(&s);
                let (a, b) = (spec.min(), spec.max());
                let mut below = 0.0_f64;
                let mut above = 0.0_f64;
                for _ in 0..cfg.trials {
                    let q = rayleigh(&s, &unit_vector(rng, n));
                    below = below.max(a - q);
                    above = above.max(q - b);
                }
                let lo = rayleigh(&s, &spec.vectors.column(0).into_owned());
                let hi = rayleigh(&s, &spec.vectors.column(n - 1).into_owned());
                vec![
                    ("rayleigh_below_lower", below.max(0.0), 1e-9),
                    ("rayleigh_above_upper", above.max(0.0), 1e-9),
                    ("lower_attained", (lo - a).abs(), 1e-9),
                    ("upper_attained", (hi - b).abs(), 1e-9),
                ]
            },
        },
        Property {
            name: "kgf_identity",
            run: |rng, cfg| {
                let (n, nodes) = shape(rng);
                let sys = random_system(rng, n, nodes);
                let a = sys.frame_bounds(cfg.tol).lower;
                let k = sys.kgf_lower_bound(&DMatrix::identity(n, n), cfg.tol).unwrap();
                vec![("lower_bound_difference", (k - a).abs(), 2.0 * cfg.tol)]
            },
        },
        Property {
            name: "weight_scaling",
            run: |rng, _| {
                use rand::Rng;
                let (n, nodes) = shape(rng);
                let sys = random_system(rng, n, nodes);
                let c: f64 = rng.random_range(0.25..4.0);
                let scaled: Vec<f64> = sys.weights().iter().map(|w| w * c).collect();
                let s = sys.frame_operator().into_matrix() * (c * c);
                let sc = sys.with_weights(&scaled).unwrap().frame_operator().into_matrix();
                vec![("relative_residual", op_norm(&(&sc - &s)) / op_norm(&s).max(1.0), 1e-12)]
            },
        },
        Property {
            name: "adjoint_consistency",
            run: |rng, cfg| {
                use rand::Rng;
                let (n, nodes) = shape(rng);
                let sys = random_system(rng, n, nodes);
                let r = sys.adjoint_consistency(cfg.trials, rng.random());
                vec![("max_relative_residual", r.residual("max_relative_residual").unwrap(), 1e-9)]
            },
        },
        Property {
            name: "fusion_specialization",
            run: |rng, _| {
                let (n, nodes) = shape(rng);
                let base = random_system(rng, n, nodes);
                let terms = base
                    .terms()
                    .iter()
                    .map(|t| {
                        let k = t.subspace().dim();
                        let q = orthonormal_range(&gaussian_matrix(rng, k, k), RANK_TOL);
                        FusionTerm::new(t.subspace().clone(), Operator::new(q).unwrap(), t.weight()).unwrap()
                    })
                    .collect();
                let sys = GFusionSystem::new(n, base.nodes().clone(), terms).unwrap();
                let expected = sys
                    .terms()
                    .iter()
                    .enumerate()
                    .fold(DMatrix::zeros(n, n), |acc, (i, t)| {
                        acc + t.subspace().projector() * (sys.nodes().mu(i) * t.weight() * t.weight())
                    });
                vec![("projector_sum_residual", op_norm(&(sys.frame_operator().into_matrix() - expected)), 1e-10)]
            },
        },
        Property {
            name: "canonical_resolution",
            run: |rng, cfg| {
                let (n, nodes) = shape(rng);
                let sys = random_frame(rng, n, nodes);
                let fam = canonical_resolution(&sys, cfg.tol).unwrap();
                let residual = verify_resolution(&fam, 1e-8).residual("identity_residual").unwrap();
                let bounds = sys.frame_bounds(cfg.tol);
                let (c, d) = (bounds.lower, bounds.upper);
                let mut lower = 0.0_f64;
                let mut upper = 0.0_f64;
                let mut recon = 0.0_f64;
                let sum = fam.weighted_sum();
                for _ in 0..cfg.trials {
                    let f = unit_vector(rng, n);
                    let e = resolution_energy(&sys, fam.factors().unwrap(), &f).unwrap();
                    lower = lower.max(c / (d * d) - e);
                    upper = upper.max(e - d / (c * c));
                    recon = recon.max((&sum * &f - &f).norm());
                }
                vec![
                    ("identity_residual", residual, 1e-8),
                    ("reconstruction_residual", recon, 1e-8),
                    ("energy_lower_violation", lower.max(0.0), 1e-8),
                    ("energy_upper_violation", upper.max(0.0), 1e-8),
                ]
            },
        },
        Property {
            name: "energy_lower_arbitrary",
            run: |rng, cfg| {
                let (n, nodes) = shape(rng);
                let sys = random_system(rng, n, nodes);
                let factors: Vec<DMatrix<f64>> =
                    sys.codomain_dims().iter().map(|&m| gaussian_matrix(rng, m, n)).collect();
                let mut worst = 0.0_f64;
                for _ in 0..cfg.trials {
                    let f = unit_vector(rng, n);
                    let r = energy_lower_check(&sys, &factors, &f, cfg.tol).unwrap();
                    let (lhs, rhs) = (r.constant("lhs").unwrap(), r.constant("rhs").unwrap());
                    worst = worst.max((lhs - rhs) / rhs.max(1.0));
                }
                vec![("relative_violation", worst.max(0.0), cfg.tol)]
            },
        },
        Property {
            name: "atomic_decomposition",
            run: |rng, cfg| {
                let (n, nodes) = shape(rng);
                let n = n.min(12);
                let sys = random_frame(rng, n, nodes);
                let k = sys.frame_operator().into_matrix() * random_square(rng, n);
                let mut recon = 0.0_f64;
                let mut norm_excess = 0.0_f64;
                for _ in 0..cfg.trials {
                    let f = unit_vector(rng, n);
                    let (phi, c) = atomic_decompose(&sys, &k, &f, cfg.tol).unwrap();
                    let kf = &k * &f;
                    recon = recon.max((&kf - sys.synthesis(&phi).unwrap()).norm() / kf.norm().max(f64::MIN_POSITIVE));
                    norm_excess = norm_excess.max(weighted_norm(&phi, sys.nodes()).unwrap() - (c + 1e-8));
                }
                vec![
                    ("relative_reconstruction_residual", recon, 1e-8),
                    ("coefficient_norm_excess", norm_excess.max(0.0), 0.0),
                ]
            },
        },
        Property {
            name: "atomic_equivalence",
            run: |rng, cfg| {
                use rand::Rng;
                let (n, nodes) = shape(rng);
                let (sys, k) = if rng.random_bool(0.5) {
                    let sys = random_frame(rng, n, nodes);
                    let k = sys.frame_operator().into_matrix() * random_square(rng, n);
                    (sys, k)
                } else {
                    let (sys, _) = random_bessel_only(rng, n, nodes);
                    (sys, random_square(rng, n))
                };
                let r = atomic_equiv_check(&sys, &k, cfg.tol);
                vec![("equivalence_failures", if r.passed { 0.0 } else { 1.0 }, 0.0)]
            },
        },
        Property {
            name: "transform_shift",
            run: |rng, cfg| {
                let (n, nodes) = shape(rng);
                let sys = random_frame(rng, n, nodes);
                let l = random_psd(rng, n);
                let (_, r) = transform_shift(&sys, &l, cfg.tol).unwrap();
                vec![("operator_identity", r.residual("operator_identity").unwrap(), 1e-8)]
            },
        },
        Property {
            name: "pair_laws",
            run: |rng, cfg| {
                let (n, nodes) = shape(rng);
                let chi = random_system(rng, n, nodes);
                let xi = random_partner(rng, &chi, false).unwrap();
                let r = pair_adjoint_and_norm(&PairSystem::new(chi, xi).unwrap(), cfg.tol);
                vec![
                    ("adjoint_residual", r.residual("adjoint_residual").unwrap(), 1e-10),
                    ("norm_excess", r.residual("norm_excess").unwrap(), 1e-9),
                ]
            },
        },
        Property {
            name: "pair_round_trip",
            run: |rng, _| {
                let (n, nodes) = shape(rng);
                let chi = random_frame(rng, n, nodes);
                let xi = random_partner(rng, &chi, true).unwrap();
                let r = bounded_below_analysis(&PairSystem::new(chi, xi).unwrap(), 1e-6);
                if r.constant("M").unwrap_or(0.0) <= 1e-6 {
                    return Vec::new();
                }
                vec![
                    ("identity_residual", r.residual("identity_residual").unwrap(), 1e-8),
                    ("inverse_residual", r.residual("inverse_residual").unwrap(), 1e-8),
                    ("chi_bound_excess", r.residual("chi_bound_excess").unwrap(), 1e-8),
                    ("xi_bound_excess", r.residual("xi_bound_excess").unwrap(), 1e-8),
                ]
            },
        },
        Property {
            name: "direct_sum",
            run: |rng, _| {
                let (n, nodes) = shape(rng);
                let a = random_frame(rng, n, nodes);
                let (x, _) = shape(rng);
                let b = random_frame_on(rng, x, a.nodes());
                let r = direct_sum_system(&a, &b).unwrap().verify(1e-9);
                vec![
                    ("block_residual", r.residual("block_residual").unwrap(), 1e-10),
                    ("lower_bound_residual", r.residual("lower_bound_residual").unwrap(), 1e-9),
                    ("upper_bound_residual", r.residual("upper_bound_residual").unwrap(), 1e-9),
                ]
            },
        },
        Property {
            name: "parsevalize",
            run: |rng, cfg| {
                let (n, nodes) = shape(rng);
                let sys = random_frame(rng, n, nodes);
                let (_, r) = parsevalize(&sys, cfg.tol).unwrap();
                vec![("parseval_residual", r.residual("parseval_residual").unwrap(), 1e-8)]
            },
        },
        Property {
            name: "canonical_dual",
            run: |rng, cfg| {
                let (n, nodes) = shape(rng);
                let sys = random_frame(rng, n, nodes);
                let (dual, r) = canonical_dual(&sys, cfg.tol).unwrap();
                let product = dual.frame_operator().into_matrix() * sys.frame_operator().into_matrix();
                vec![
                    ("dual_operator_residual", r.residual("dual_operator_residual").unwrap(), 1e-8),
                    ("reconstruction_residual", op_norm(&(product - DMatrix::identity(n, n))), 1e-7),
                ]
            },
        },
        Property {
            name: "random_generation",
            run: |rng, _| {
                let (n, nodes) = shape(rng);
                let sys = random_system(rng, n, nodes);
                let ok = validate_nodes(sys.nodes().nodes(), &sys.weights()).passed;
                vec![("invalid_systems", if ok { 0.0 } else { 1.0 }, 0.0)]
            },
        },
    ]
}
