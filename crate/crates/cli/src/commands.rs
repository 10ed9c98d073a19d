use std::path::Path;

use nalgebra::DMatrix;

use cgfusion::atomic::{atomic_equiv_check, atomic_wrt_frame_operator, transform_combined, transform_shift};
use cgfusion::campaign::{run_campaign, CampaignConfig};
use cgfusion::direct_sum::{canonical_dual, direct_sum_system, parsevalize};
use cgfusion::io::{load_operator, load_system_file, SystemFile};
use cgfusion::measure::validate_nodes;
use cgfusion::pair::{
    bounded_below_analysis, pair_adjoint_and_norm, perturbation_bound, symmetric_perturbation, PairSystem,
};
use cgfusion::random::{random_frame, random_shape, random_system, MAX_DIM, MAX_NODES, MIN_DIM};
use cgfusion::resolution::{
    bounded_resolution_check, canonical_energy_check, canonical_resolution, energy_lower_check,
    frame_from_resolution, verify_resolution,
};
use cgfusion::rng::{rng, trial_rng, unit_vector};
use cgfusion::{par, Error, GFusionSystem, Provenance, Result, VerificationReport};

use crate::{attempt, Options, Outcome};

fn checks(reports: Vec<VerificationReport>) -> Result<Outcome> {
    Ok(Outcome { reports, system: None })
}

fn built(system: GFusionSystem, reports: Vec<VerificationReport>) -> Result<Outcome> {
    Ok(Outcome {
        reports,
        system: Some(system),
    })
}

/// An operator from its own file, else from the system file's named operators.
fn operator(flag: Option<&Path>, file: &SystemFile, name: &str) -> Result<Option<DMatrix<f64>>> {
    match flag {
        Some(path) => load_operator(path).map(Some),
        None => file.operator(name),
    }
}

fn required(m: Option<DMatrix<f64>>, name: &str) -> Result<DMatrix<f64>> {
    m.ok_or_else(|| Error::Parameter(format!("operator {name} is required (--{name} or an `operators.{name}` entry)")))
}

fn load(path: &Path) -> Result<(SystemFile, GFusionSystem)> {
    let file = load_system_file(path)?;
    let sys = file.to_system().map_err(|e| Error::Load {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok((file, sys))
}

fn node_report(sys: &GFusionSystem) -> VerificationReport {
    validate_nodes(sys.nodes().nodes(), &sys.weights())
}

pub fn check(opts: &Options, path: &Path) -> Result<Outcome> {
    let (_, sys) = load(path)?;
    let bounds = attempt(opts, "frame_bounds", || {
        let b = sys.frame_bounds(opts.tol);
        Ok(VerificationReport::builder("frame_bounds", Provenance::ExactSpectral)
            .constant("lower", b.lower)
            .constant("upper", b.upper)
            .label("classification", b.class.to_string())
            .finish())
    })?;
    let adjoint = attempt(opts, "adjoint_consistency", || Ok(sys.adjoint_consistency(opts.trials, opts.seed)))?;
    let nodes = attempt(opts, "validate_nodes", || Ok(node_report(&sys)))?;
    checks(vec![bounds, adjoint, nodes])
}

pub fn kgf(opts: &Options, path: &Path, k: Option<&Path>, a: Option<f64>) -> Result<Outcome> {
    let (file, sys) = load(path)?;
    let k = required(operator(k, &file, "K")?, "K")?;
    let mut reports = vec![attempt(opts, "kgf_lower_bound", || {
        let best = sys.kgf_lower_bound(&k, opts.tol)?;
        Ok(VerificationReport::builder("kgf_lower_bound", Provenance::ExactSpectral)
            .constant("A_star", best)
            .label("is_k_frame", (best > 0.0).to_string())
            .finish())
    })?];
    if let Some(a) = a {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Parameter(format!("A must be positive, got {a}")));
        }
        reports.push(attempt(opts, "kgf_check", || {
            let cert = sys.kgf_check(&k, a, opts.tol)?;
            Ok(VerificationReport::builder("kgf_check", Provenance::ExactSpectral)
                .constant("A", a)
                .constant("loewner_gap", cert.gap)
                .residual("loewner_violation", (-cert.gap).max(0.0), opts.tol)
                .finish())
        })?);
    }
    checks(reports)
}

pub fn resolve(opts: &Options, path: &Path, a: Option<f64>, bounded: bool) -> Result<Outcome> {
    let (_, sys) = load(path)?;
    let tol = opts.tol;
    let fam = match canonical_resolution(&sys, tol) {
        Ok(fam) => fam,
        Err(e) => {
            let r = attempt(opts, "canonical_resolution", || Err(e))?;
            return checks(vec![r]);
        }
    };
    let factors = fam.factors().expect("canonical family carries factors").to_vec();
    let mut reports = vec![
        attempt(opts, "verify_resolution", || Ok(verify_resolution(&fam, tol)))?,
        attempt(opts, "canonical_energy_bounds", || {
            canonical_energy_check(&sys, &fam, opts.trials, opts.seed, tol)
        })?,
        attempt(opts, "energy_lower", || {
            let n = sys.ambient_dim();
            let runs = par::map_range(opts.trials, |k| {
                let f = unit_vector(&mut trial_rng(opts.seed, k as u64), n);
                energy_lower_check(&sys, &factors, &f, tol)
            });
            let mut worst: Option<VerificationReport> = None;
            for r in runs {
                let r = r?;
                let v = r.residual("violation").unwrap_or(0.0);
                if worst.as_ref().is_none_or(|w| v > w.residual("violation").unwrap_or(0.0)) {
                    worst = Some(r);
                }
            }
            Ok(match worst {
                Some(w) => w
                    .rebuild("energy_lower")
                    .provenance(Provenance::Sampled)
                    .constant("trials", opts.trials as f64)
                    .finish(),
                None => VerificationReport::builder("energy_lower", Provenance::Sampled).finish(),
            })
        })?,
    ];
    if bounded {
        reports.push(attempt(opts, "bounded_resolution", || {
            bounded_resolution_check(&sys, &factors, tol)
        })?);
    }
    if let Some(a) = a {
        reports.push(attempt(opts, "frame_from_resolution", || {
            let b = frame_from_resolution(&sys, a, tol)?;
            Ok(VerificationReport::builder("frame_from_resolution", Provenance::ExactSpectral)
                .constant("lower", b.lower)
                .constant("upper", b.upper)
                .label("classification", b.class.to_string())
                .finish())
        })?);
    }
    checks(reports)
}

pub fn atomic(opts: &Options, path: &Path, k: Option<&Path>) -> Result<Outcome> {
    let (file, sys) = load(path)?;
    let mut reports = vec![attempt(opts, "atomic_wrt_frame_operator", || {
        atomic_wrt_frame_operator(&sys, opts.tol)
    })?];
    if let Some(k) = operator(k, &file, "K")? {
        sys.check_square(&k, "K")?;
        reports.push(attempt(opts, "atomic_equivalence", || Ok(atomic_equiv_check(&sys, &k, opts.tol)))?);
    }
    checks(reports)
}

pub fn transform(
    opts: &Options,
    path: &Path,
    l: Option<&Path>,
    xi: Option<&Path>,
    g: Option<&Path>,
    k: Option<&Path>,
) -> Result<Outcome> {
    let (file, sys) = load(path)?;
    let l = required(operator(l, &file, "L")?, "L")?;
    let result = match xi {
        None => transform_shift(&sys, &l, opts.tol),
        Some(xi) => {
            let (_, second) = load(xi)?;
            let g = required(operator(g, &file, "G")?, "G")?;
            let k = required(operator(k, &file, "K")?, "K")?;
            transform_combined(&sys, &second, &l, &g, &k, opts.tol)
        }
    };
    match result {
        Ok((out, report)) => {
            let report = attempt(opts, "transform", || Ok(report))?;
            built(out, vec![report])
        }
        Err(e) => checks(vec![attempt(opts, "transform", || Err(e))?]),
    }
}

pub fn pair(
    opts: &Options,
    path: &Path,
    xi: Option<&Path>,
    lambda1: Option<f64>,
    lambda2: f64,
    lambda: Option<f64>,
) -> Result<Outcome> {
    let (file, chi) = load(path)?;
    let xi = match xi {
        Some(p) => load(p)?.1,
        None => file.to_second_system()?.ok_or_else(|| {
            Error::Parameter("pair needs --xi or an `s` weight on every node".into())
        })?,
    };
    let p = PairSystem::new(chi, xi)?;
    let tol = opts.tol;
    let mut reports = vec![
        attempt(opts, "pair_adjoint_and_norm", || Ok(pair_adjoint_and_norm(&p, tol)))?,
        attempt(opts, "bounded_below", || Ok(bounded_below_analysis(&p, tol)))?,
    ];
    if let Some(l1) = lambda1 {
        reports.push(attempt(opts, "perturbation_bound", || {
            perturbation_bound(&p, l1, lambda2, opts.trials, opts.seed, tol)
        })?);
    }
    if let Some(l) = lambda {
        reports.push(attempt(opts, "symmetric_perturbation", || symmetric_perturbation(&p, l, tol))?);
    }
    checks(reports)
}

pub fn dsum(opts: &Options, first: &Path, second: &Path) -> Result<Outcome> {
    let (_, a) = load(first)?;
    let (_, b) = load(second)?;
    let sum = direct_sum_system(&a, &b)?;
    let report = attempt(opts, "direct_sum", || Ok(sum.verify(opts.tol)))?;
    built(sum.into_system(), vec![report])
}

fn construct<F>(opts: &Options, path: &Path, check: &str, f: F) -> Result<Outcome>
where
    F: FnOnce(&GFusionSystem, f64) -> Result<(GFusionSystem, VerificationReport)>,
{
    let (_, sys) = load(path)?;
    match f(&sys, opts.tol) {
        Ok((out, report)) => {
            let report = attempt(opts, check, || Ok(report))?;
            built(out, vec![report])
        }
        Err(e) => checks(vec![attempt(opts, check, || Err(e))?]),
    }
}

pub fn parseval(opts: &Options, path: &Path) -> Result<Outcome> {
    construct(opts, path, "parsevalize", parsevalize)
}

pub fn dual(opts: &Options, path: &Path) -> Result<Outcome> {
    construct(opts, path, "canonical_dual", canonical_dual)
}

pub fn random(opts: &Options, dim: Option<usize>, nodes: Option<usize>, frame: bool) -> Result<Outcome> {
    if let Some(n) = dim {
        if !(MIN_DIM..=MAX_DIM).contains(&n) {
            return Err(Error::Parameter(format!("--dim must lie in [{MIN_DIM}, {MAX_DIM}], got {n}")));
        }
    }
    if let Some(k) = nodes {
        if !(1..=MAX_NODES).contains(&k) {
            return Err(Error::Parameter(format!("--nodes must lie in [1, {MAX_NODES}], got {k}")));
        }
    }
    let mut r = rng(opts.seed);
    let (n0, k0) = random_shape(&mut r, MAX_DIM);
    let (n, k) = (dim.unwrap_or(n0), nodes.unwrap_or(k0));
    let sys = if frame {
        random_frame(&mut r, n, k)
    } else {
        random_system(&mut r, n, k)
    };
    let report = attempt(opts, "validate_nodes", || Ok(node_report(&sys)))?;
    built(sys, vec![report])
}

pub fn selftest(opts: &Options, instances: usize) -> Result<Outcome> {
    let cfg = CampaignConfig {
        seed: opts.seed,
        instances,
        trials: opts.trials,
        tol: opts.tol,
    };
    let start = std::time::Instant::now();
    let mut reports = run_campaign(&cfg);
    if opts.timing {
        let total = start.elapsed().as_secs_f64();
        reports = reports.into_iter().map(|r| r.with_wall_time(total)).collect();
    }
    checks(reports)
}
