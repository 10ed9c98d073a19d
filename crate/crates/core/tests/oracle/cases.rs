//! Worked examples recomputed by a dense brute-force oracle that shares no
//! code with the library: plain nested vectors, explicit loops and a Jacobi
//! eigen-solver. Each oracle value is first pinned to its hand-derived number
//! and then compared with the library at 1e-12.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

use cgfusion::atomic::{atomic_decompose, atomic_equiv_check, atomic_wrt_frame_operator, transform_combined, transform_shift};
use cgfusion::direct_sum::{canonical_dual, direct_sum_system, parsevalize};
use cgfusion::io::SystemFile;
use cgfusion::linalg::{
    douglas_factor, operator_leq, orthonormality_defect, orthonormalize_image, pinv, positive_sqrt, project,
    projection_identity_check,
};
use cgfusion::measure::{weighted_inner, weighted_norm};
use cgfusion::pair::{
    bounded_below_analysis, pair_adjoint_and_norm, pair_frame_operator, perturbation_bound, symmetric_perturbation,
    PairSystem,
};
use cgfusion::resolution::{
    bounded_resolution_check, canonical_energy_check, canonical_resolution, energy_lower_check, frame_from_resolution,
    resolution_energy, verify_resolution, ResolutionFamily,
};
use cgfusion::system::fixtures::{coordinate_system, e1, e2, lifted_coordinate_system, single_node};
use cgfusion::{CoefficientField, Error, FrameClass, GFusionSystem, MeasureNodes, Subspace};
use nalgebra::{DMatrix, DVector};

const PIN: f64 = 1e-12;

type M = Vec<Vec<f64>>;

fn zeros(r: usize, c: usize) -> M {
    vec![vec![0.0; c]; r]
}

fn eye(n: usize) -> M {
    diag(&vec![1.0; n])
}

fn diag(d: &[f64]) -> M {
    let mut m = zeros(d.len(), d.len());
    for (i, &x) in d.iter().enumerate() {
        m[i][i] = x;
    }
    m
}

fn mul(a: &M, b: &M) -> M {
    let mut out = zeros(a.len(), b[0].len());
    for i in 0..a.len() {
        for j in 0..b[0].len() {
            for k in 0..b.len() {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn tr(a: &M) -> M {
    let mut out = zeros(a[0].len(), a.len());
    for (i, row) in a.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            out[j][i] = x;
        }
    }
    out
}

fn lin(a: &M, sa: f64, b: &M, sb: f64) -> M {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| sa * p + sb * q).collect())
        .collect()
}

fn mv(a: &M, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn col(v: &[f64]) -> M {
    v.iter().map(|&x| vec![x]).collect()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
fn eigenvalues(a: &M) -> Vec<f64> {
    let n = a.len();
    let mut a = a.clone();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

fn op_norm(a: &M) -> f64 {
    eigenvalues(&mul(&tr(a), a)).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

fn assert_mat(lib: &DMatrix<f64>, oracle: &M) {
    assert_eq!((lib.nrows(), lib.ncols()), (oracle.len(), oracle[0].len()));
    for (i, row) in oracle.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            assert!((lib[(i, j)] - x).abs() <= PIN, "entry ({i},{j}): library {} vs oracle {x}", lib[(i, j)]);
        }
    }
}

fn pin(oracle: f64, hand: f64) -> f64 {
    assert!((oracle - hand).abs() <= PIN, "oracle {oracle} vs hand value {hand}");
    oracle
}

fn pin_mat(oracle: M, hand: &M) -> M {
    assert_eq!(oracle.len(), hand.len());
    for (a, b) in oracle.iter().zip(hand) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= PIN, "oracle {x} vs hand value {y}");
        }
    }
    oracle
}

fn close(lib: f64, oracle: f64) {
    assert!((lib - oracle).abs() <= PIN, "library {lib} vs oracle {oracle}");
}

fn vecd(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn dmat(m: &M) -> DMatrix<f64> {
    DMatrix::from_fn(m.len(), m[0].len(), |i, j| m[i][j])
}

/// A system written out by hand: per node a mass, a weight, basis columns and
/// a local matrix in subspace coordinates.
struct Raw {
    n: usize,
    mu: Vec<f64>,
    v: Vec<f64>,
    basis: Vec<M>,
    local: Vec<M>,
}

impl Raw {
    /// Node `i` on `span{e_i}` with local map `(maps[i])`, unit masses.
    fn coordinate(n: usize, v: &[f64], maps: &[f64]) -> Raw {
        Raw {
            n,
            mu: vec![1.0; v.len()],
            v: v.to_vec(),
            basis: (0..v.len())
                .map(|i| {
                    let mut b = zeros(n, 1);
                    b[i][0] = 1.0;
                    b
                })
                .collect(),
            local: maps.iter().map(|&x| vec![vec![x]]).collect(),
        }
    }

    fn lifted(n: usize, v: &[f64]) -> Raw {
        let mut r = Raw::coordinate(n, v, &vec![1.0; v.len()]);
        r.local = (0..v.len())
            .map(|i| {
                let mut c = zeros(n, 1);
                c[i][0] = 1.0;
                c
            })
            .collect();
        r
    }

    fn eff(&self, i: usize) -> M {
        mul(&self.local[i], &tr(&self.basis[i]))
    }

    fn frame(&self) -> M {
        let mut s = zeros(self.n, self.n);
        for i in 0..self.v.len() {
            let e = self.eff(i);
            s = lin(&s, 1.0, &mul(&tr(&e), &e), self.mu[i] * self.v[i] * self.v[i]);
        }
        s
    }

    fn analysis(&self, f: &[f64]) -> Vec<Vec<f64>> {
        (0..self.v.len())
            .map(|i| mv(&self.eff(i), f).into_iter().map(|x| self.v[i] * x).collect())
            .collect()
    }

    fn synthesis(&self, phi: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, p) in phi.iter().enumerate() {
            let back = mv(&tr(&self.eff(i)), p);
            for (o, b) in out.iter_mut().zip(back) {
                *o += self.mu[i] * self.v[i] * b;
            }
        }
        out
    }

    fn weighted_norm(&self, phi: &[Vec<f64>]) -> f64 {
        phi.iter().zip(&self.mu).map(|(p, m)| m * dot(p, p)).sum::<f64>().sqrt()
    }

    /// `T_i = Λ_i S⁻¹` with `S` diagonal.
    fn canonical_factors(&self) -> Vec<M> {
        let s = self.frame();
        let inv = diag(&(0..self.n).map(|i| 1.0 / s[i][i]).collect::<Vec<_>>());
        (0..self.v.len()).map(|i| mul(&self.eff(i), &inv)).collect()
    }

    fn energy(&self, factors: &[M], f: &[f64]) -> f64 {
        factors
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let tf = mv(t, f);
                self.mu[i] * self.v[i] * self.v[i] * dot(&tf, &tf)
            })
            .sum()
    }
}

fn diag_pinv(d: &M) -> M {
    diag(&(0..d.len()).map(|i| if d[i][i] != 0.0 { 1.0 / d[i][i] } else { 0.0 }).collect::<Vec<_>>())
}

/// Best K-frame bound for diagonal `S` and `KKᵀ`: the smallest ratio over
/// directions charged by `K`, zero if one of them misses `R(S)`.
fn diag_kgf_bound(s: &M, kkt: &M) -> f64 {
    (0..s.len())
        .filter(|&i| kkt[i][i] > 0.0)
        .map(|i| s[i][i] / kkt[i][i])
        .fold(f64::INFINITY, f64::min)
}

fn field(blocks: &[Vec<f64>]) -> CoefficientField {
    CoefficientField::new(blocks.iter().map(|b| vecd(b)).collect())
}

pub fn projection_onto_diagonal_line() {
    let h = 1.0 / 2f64.sqrt();
    let q = col(&[h, h]);
    let oracle = mv(&mul(&q, &tr(&q)), &[1.0, 0.0]);
    pin(oracle[0], 0.5);
    pin(oracle[1], 0.5);
    let v = Subspace::new(dmat(&q)).unwrap();
    let lib = project(&v, &vecd(&[1.0, 0.0])).unwrap();
    close(lib[0], oracle[0]);
    close(lib[1], oracle[1]);
}

pub fn loewner_gaps() {
    for (t, s, hand, holds) in [
        (diag(&[1.0, 0.0]), diag(&[4.0, 0.0]), 0.0, true),
        (diag(&[2.0, 0.0]), diag(&[1.0, 1.0]), -1.0, false),
    ] {
        let gap = pin(eigenvalues(&lin(&s, 1.0, &t, -1.0))[0], hand);
        let cert = operator_leq(&dmat(&t), &dmat(&s), 1e-12).unwrap();
        close(cert.gap, gap);
        assert_eq!(cert.holds, holds);
    }
}

pub fn douglas_factor_of_diagonals() {
    let (l, t) = (diag(&[1.0, 0.0]), diag(&[2.0, 0.0]));
    let factor = pin_mat(mul(&diag_pinv(&t), &l), &diag(&[0.5, 0.0]));
    let lambda = pin((l[0][0] * l[0][0] / (t[0][0] * t[0][0])).sqrt(), 0.5);
    let lib = douglas_factor(&dmat(&l), &dmat(&t), 1e-12).unwrap();
    assert_mat(lib.factor.matrix(), &factor);
    close(lib.lambda, lambda);
}

pub fn pseudoinverse_of_rank_one() {
    let a = vec![vec![1.0, 1.0], vec![0.0, 0.0]];
    let frob2: f64 = a.iter().flatten().map(|x| x * x).sum();
    let oracle = pin_mat(lin(&tr(&a), 1.0 / frob2, &zeros(2, 2), 0.0), &vec![vec![0.5, 0.0], vec![0.5, 0.0]]);
    assert_mat(&pinv(&dmat(&a), 1e-12), &oracle);
}

pub fn square_roots_of_diagonal() {
    let root = pin_mat(diag(&[4f64.sqrt(), 1f64.sqrt()]), &diag(&[2.0, 1.0]));
    let inv_root = pin_mat(diag(&[1.0 / 4f64.sqrt(), 1.0]), &diag(&[0.5, 1.0]));
    let s = dmat(&diag(&[4.0, 1.0]));
    assert_mat(&positive_sqrt(&s, false).unwrap(), &root);
    assert_mat(&positive_sqrt(&s, true).unwrap(), &inv_root);
}

pub fn rotated_subspace_and_projection_identities() {
    let rot = vec![vec![0.0, -1.0], vec![1.0, 0.0]];
    let image = mv(&rot, &[1.0, 0.0]);
    let p_image = pin_mat(mul(&col(&image), &tr(&col(&image))), &diag(&[0.0, 1.0]));
    let e1v = Subspace::new(dmat(&col(&[1.0, 0.0]))).unwrap();
    let lib = orthonormalize_image(&dmat(&rot), &e1v, 1e-12).unwrap();
    assert_mat(&lib.projector(), &p_image);

    let pv = diag(&[1.0, 0.0]);
    let first = op_norm(&lin(&mul(&pv, &tr(&rot)), 1.0, &mul(&mul(&pv, &tr(&rot)), &p_image), -1.0));
    let second = op_norm(&lin(&mul(&p_image, &rot), 1.0, &mul(&rot, &pv), -1.0));
    pin(first, 0.0);
    pin(second, 0.0);
    let r = projection_identity_check(&dmat(&rot), &e1v, 1e-12).unwrap();
    assert!(r.passed);
    close(r.residual("adjoint_identity").unwrap(), first);
    close(r.residual("unitary_identity").unwrap(), second);

    let t = diag(&[1.0, 0.0]);
    let first = op_norm(&lin(&mul(&pv, &tr(&t)), 1.0, &mul(&mul(&pv, &tr(&t)), &pv), -1.0));
    pin(first, 0.0);
    let r = projection_identity_check(&dmat(&t), &e1v, 1e-12).unwrap();
    close(r.residual("adjoint_identity").unwrap(), first);
    assert_eq!(r.residual("unitary_identity"), None);
}

pub fn weighted_inner_products() {
    let a = vec![vec![2.0], vec![1.0]];
    let inner = pin(0.5 * dot(&a[0], &a[0]) + 2.0 * dot(&a[1], &a[1]), 4.0);
    let nodes = MeasureNodes::from_masses(&[0.5, 2.0]).unwrap();
    close(weighted_inner(&field(&a), &field(&a), &nodes).unwrap(), inner);

    let b = vec![vec![3.0], vec![4.0]];
    let norm = pin((dot(&b[0], &b[0]) + dot(&b[1], &b[1])).sqrt(), 5.0);
    close(weighted_norm(&field(&b), &MeasureNodes::uniform(2)).unwrap(), norm);

    let c = vec![vec![1.0], vec![1.0]];
    let norm = pin((4.0 * 1.0 + 0.25 * 1.0f64).sqrt(), 4.25f64.sqrt());
    close(weighted_norm(&field(&c), &MeasureNodes::from_masses(&[4.0, 0.25]).unwrap()).unwrap(), norm);
}

pub fn frame_operators_and_bounds() {
    let cases: [(GFusionSystem, Raw, M, (f64, f64), FrameClass); 3] = [
        (e2(), Raw::coordinate(2, &[2.0, 1.0], &[1.0, 1.0]), diag(&[4.0, 1.0]), (1.0, 4.0), FrameClass::Frame),
        (single_node(), Raw::coordinate(2, &[1.0], &[1.0]), diag(&[1.0, 0.0]), (0.0, 1.0), FrameClass::BesselOnly),
        (e1(), Raw::coordinate(2, &[1.0, 1.0], &[1.0, 1.0]), eye(2), (1.0, 1.0), FrameClass::Parseval),
    ];
    for (sys, oracle, s_hand, (lo, hi), class) in cases {
        let s = pin_mat(oracle.frame(), &s_hand);
        assert_mat(sys.frame_operator().matrix(), &s);
        let ev = eigenvalues(&s);
        let b = sys.frame_bounds(1e-9);
        close(b.lower, pin(ev[0], lo));
        close(b.upper, pin(ev[1], hi));
        assert_eq!(b.class, class);
    }
}

pub fn analysis_and_synthesis_of_e2() {
    let oracle = Raw::coordinate(2, &[2.0, 1.0], &[1.0, 1.0]);
    let a = oracle.analysis(&[1.0, 1.0]);
    pin(a[0][0], 2.0);
    pin(a[1][0], 1.0);
    let lib = e2().analysis(&vecd(&[1.0, 1.0])).unwrap();
    close(lib.block(0)[0], a[0][0]);
    close(lib.block(1)[0], a[1][0]);

    let s = oracle.synthesis(&[vec![2.0], vec![1.0]]);
    pin(s[0], 4.0);
    pin(s[1], 1.0);
    let lib = e2().synthesis(&field(&[vec![2.0], vec![1.0]])).unwrap();
    close(lib[0], s[0]);
    close(lib[1], s[1]);

    for (f, phi) in [([1.0, -2.0], vec![vec![0.5], vec![3.0]]), ([0.3, 0.7], vec![vec![-1.0], vec![2.0]])] {
        let lhs = dot(&oracle.synthesis(&phi), &f);
        let tf = oracle.analysis(&f);
        let rhs: f64 = phi.iter().zip(&tf).zip(&oracle.mu).map(|((p, q), m)| m * dot(p, q)).sum();
        pin(lhs, rhs);
    }
    for sys in [e1(), e2()] {
        let r = sys.adjoint_consistency(100, 0);
        assert!(r.passed);
        assert!(r.residual("max_relative_residual").unwrap() <= PIN);
    }
}

pub fn k_frame_gaps_and_bounds() {
    let s_e2 = Raw::coordinate(2, &[2.0, 1.0], &[1.0, 1.0]).frame();
    let s_single = Raw::coordinate(2, &[1.0], &[1.0]).frame();
    let s_e1 = Raw::coordinate(2, &[1.0, 1.0], &[1.0, 1.0]).frame();
    let gap = |s: &M, k: &M, a: f64| eigenvalues(&lin(s, 1.0, &mul(k, &tr(k)), -a))[0];

    for (sys, s, k, a, hand, holds) in [
        (e2(), &s_e2, eye(2), 1.0, 0.0, true),
        (e2(), &s_e2, eye(2), 2.0, -1.0, false),
        (single_node(), &s_single, diag(&[1.0, 0.0]), 1.0, 0.0, true),
    ] {
        let g = pin(gap(s, &k, a), hand);
        let cert = sys.kgf_check(&dmat(&k), a, 1e-9).unwrap();
        close(cert.gap, g);
        assert_eq!(cert.holds, holds);
    }

    for (sys, s, k, hand) in [
        (e2(), &s_e2, eye(2), 1.0),
        (single_node(), &s_single, diag(&[1.0, 0.0]), 1.0),
        (e1(), &s_e1, diag(&[3.0, 3.0]), 1.0 / 9.0),
        (single_node(), &s_single, eye(2), 0.0),
    ] {
        let kkt = mul(&k, &tr(&k));
        let oracle = if (0..2).any(|i| kkt[i][i] > 0.0 && s[i][i] == 0.0) { 0.0 } else { diag_kgf_bound(s, &kkt) };
        let best = pin(oracle, hand);
        close(sys.kgf_lower_bound(&dmat(&k), 1e-12).unwrap(), best);
    }
    assert!(matches!(e2().kgf_lower_bound(&DMatrix::zeros(2, 2), 1e-9), Err(Error::DegenerateK)));
}

pub fn canonical_resolution_of_e2() {
    let oracle = Raw::coordinate(2, &[2.0, 1.0], &[1.0, 1.0]);
    let t = oracle.canonical_factors();
    let t1 = pin_mat(t[0].clone(), &vec![vec![0.25, 0.0]]);
    let t2 = pin_mat(t[1].clone(), &vec![vec![0.0, 1.0]]);
    let w: Vec<M> = (0..2).map(|i| lin(&mul(&tr(&oracle.eff(i)), &t[i]), oracle.v[i] * oracle.v[i], &zeros(2, 2), 0.0)).collect();
    let w1 = pin_mat(w[0].clone(), &diag(&[1.0, 0.0]));
    let w2 = pin_mat(w[1].clone(), &diag(&[0.0, 1.0]));

    let fam = canonical_resolution(&e2(), 1e-9).unwrap();
    let factors = fam.factors().unwrap();
    assert_mat(&factors[0], &t1);
    assert_mat(&factors[1], &t2);
    assert_mat(&fam.members()[0], &w1);
    assert_mat(&fam.members()[1], &w2);
    assert!(verify_resolution(&fam, 1e-12).passed);

    let energy = pin(oracle.energy(&t, &[1.0, 0.0]), 0.25);
    close(resolution_energy(&e2(), factors, &vecd(&[1.0, 0.0])).unwrap(), energy);
    let ev = eigenvalues(&oracle.frame());
    let (c, d) = (ev[0], ev[1]);
    let lo = pin(c / (d * d), 1.0 / 16.0);
    let hi = pin(d / (c * c), 4.0);
    let r = canonical_energy_check(&e2(), &fam, 100, 0, 1e-9).unwrap();
    assert!(r.passed);
    close(r.constant("lower_bound").unwrap(), lo);
    close(r.constant("upper_bound").unwrap(), hi);
}

pub fn failed_resolution_residual() {
    let w = [diag(&[1.0, 0.0]), diag(&[0.0, 0.5])];
    let residual = pin(op_norm(&lin(&lin(&w[0], 1.0, &w[1], 1.0), 1.0, &eye(2), -1.0)), 0.5);
    let fam = ResolutionFamily::new(2, MeasureNodes::uniform(2), w.iter().map(dmat).collect()).unwrap();
    let r = verify_resolution(&fam, 1e-9);
    assert!(!r.passed);
    close(r.residual("identity_residual").unwrap(), residual);
}

pub fn energy_lower_equality_cases() {
    for (sys, oracle, f, hand) in [
        (e2(), Raw::coordinate(2, &[2.0, 1.0], &[1.0, 1.0]), [1.0, 0.0], 0.25),
        (e1(), Raw::coordinate(2, &[1.0, 1.0], &[1.0, 1.0]), [1.0, 1.0], 2.0),
    ] {
        let t = oracle.canonical_factors();
        let mut g = vec![0.0; 2];
        for (i, ti) in t.iter().enumerate() {
            let back = mv(&tr(&oracle.eff(i)), &mv(ti, &f));
            for (gj, b) in g.iter_mut().zip(back) {
                *gj += oracle.mu[i] * oracle.v[i] * oracle.v[i] * b;
            }
        }
        let d = *eigenvalues(&oracle.frame()).last().unwrap();
        let lhs = pin(dot(&g, &g) / d, hand);
        let rhs = pin(oracle.energy(&t, &f), hand);
        let factors: Vec<DMatrix<f64>> = t.iter().map(dmat).collect();
        let r = energy_lower_check(&sys, &factors, &vecd(&f), 1e-9).unwrap();
        assert!(r.passed);
        close(r.constant("lhs").unwrap(), lhs);
        close(r.constant("rhs").unwrap(), rhs);
    }
}

pub fn bounded_resolution_on_lifted_e1() {
    let oracle = Raw::lifted(2, &[1.0, 1.0]);
    let t: Vec<M> = (0..2).map(|i| mul(&col(&eye(2)[i]), &tr(&col(&eye(2)[i])))).collect();
    for (i, ti) in t.iter().enumerate() {
        pin(op_norm(&lin(&mul(&tr(ti), &oracle.eff(i)), 1.0, ti, -1.0)), 0.0);
    }
    let e = pin(t.iter().map(|x| op_norm(x).powi(2)).fold(0.0, f64::max), 1.0);
    let mut energy_op = zeros(2, 2);
    for (i, ti) in t.iter().enumerate() {
        energy_op = lin(&energy_op, 1.0, &mul(&tr(ti), ti), oracle.mu[i] * oracle.v[i] * oracle.v[i]);
    }
    let ev = eigenvalues(&energy_op);
    let (lo, hi) = (pin(ev[0], 1.0), pin(ev[1], 1.0));
    let factors: Vec<DMatrix<f64>> = t.iter().map(dmat).collect();
    let r = bounded_resolution_check(&lifted_coordinate_system(2, &[1.0, 1.0]), &factors, 1e-9).unwrap();
    assert!(r.passed, "{r:?}");
    close(r.constant("E").unwrap(), e);
    close(r.constant("min_energy_ratio").unwrap(), lo);
    close(r.constant("max_energy_ratio").unwrap(), hi);

    let bad = vec![vec![0.0, 1.0], vec![0.0, 0.0]];
    let defect = op_norm(&lin(&mul(&tr(&bad), &oracle.eff(0)), 1.0, &bad, -1.0));
    pin(defect, 1.0);
    let factors = vec![dmat(&bad), dmat(&t[1])];
    assert!(matches!(
        bounded_resolution_check(&lifted_coordinate_system(2, &[1.0, 1.0]), &factors, 1e-9),
        Err(Error::HypothesisNotMet { .. })
    ));
}

pub fn frame_from_resolution_cases() {
    let oracle = Raw::coordinate(2, &[1.0, 1.0], &[1.0, 1.0]);
    let mut unweighted = zeros(2, 2);
    let mut weighted = zeros(2, 2);
    for i in 0..2 {
        let g = mul(&tr(&oracle.eff(i)), &oracle.eff(i));
        unweighted = lin(&unweighted, 1.0, &g, oracle.mu[i]);
        weighted = lin(&weighted, 1.0, &g, oracle.mu[i] * oracle.v[i]);
    }
    pin_mat(unweighted, &eye(2));
    pin_mat(weighted, &eye(2));
    let b = frame_from_resolution(&e1(), 1.0, 1e-9).unwrap();
    close(b.lower, 1.0);
    close(b.upper, 1.0);

    let e2o = Raw::coordinate(2, &[2.0, 1.0], &[1.0, 1.0]);
    let mut weighted = zeros(2, 2);
    for i in 0..2 {
        weighted = lin(&weighted, 1.0, &mul(&tr(&e2o.eff(i)), &e2o.eff(i)), e2o.mu[i] * e2o.v[i]);
    }
    pin_mat(weighted, &diag(&[2.0, 1.0]));
    assert!(matches!(frame_from_resolution(&e2(), 1.0, 1e-9), Err(Error::HypothesisNotMet { .. })));
}

/// `φ = T* S⁺ K f` and `C = ‖T* S⁺ K‖`, using `‖T* x‖² = xᵀ S x`.
fn atomic_oracle(oracle: &Raw, k: &M, f: &[f64]) -> (Vec<Vec<f64>>, f64) {
    let s = oracle.frame();
    let sk = mul(&diag_pinv(&s), k);
    let phi = oracle.analysis(&mv(&sk, f));
    let c = eigenvalues(&mul(&mul(&tr(&sk), &s), &sk)).last().unwrap().sqrt();
    (phi, c)
}

pub fn atomic_decompositions() {
    let e2o = Raw::coordinate(2, &[2.0, 1.0], &[1.0, 1.0]);
    let k = diag(&[4.0, 1.0]);
    let (phi, c) = atomic_oracle(&e2o, &k, &[1.0, 0.0]);
    pin(phi[0][0], 2.0);
    pin(phi[1][0], 0.0);
    pin(e2o.weighted_norm(&phi), 2.0);
    pin(c, 2.0);
    let (lib, lib_c) = atomic_decompose(&e2(), &dmat(&k), &vecd(&[1.0, 0.0]), 1e-9).unwrap();
    close(lib.block(0)[0], phi[0][0]);
    close(lib.block(1)[0], phi[1][0]);
    close(lib_c, c);

    let e1o = Raw::coordinate(2, &[1.0, 1.0], &[1.0, 1.0]);
    let (phi, c) = atomic_oracle(&e1o, &eye(2), &[3.0, 4.0]);
    pin(phi[0][0], 3.0);
    pin(phi[1][0], 4.0);
    pin(c, 1.0);
    let (lib, lib_c) = atomic_decompose(&e1(), &DMatrix::identity(2, 2), &vecd(&[3.0, 4.0]), 1e-9).unwrap();
    close(lib.block(0)[0], phi[0][0]);
    close(lib.block(1)[0], phi[1][0]);
    close(lib_c, c);

    let single = Raw::coordinate(2, &[1.0], &[1.0]);
    let kf = mv(&diag(&[0.0, 1.0]), &[0.0, 1.0]);
    let s = single.frame();
    let defect = op_norm(&lin(&col(&kf), 1.0, &col(&mv(&mul(&s, &diag_pinv(&s)), &kf)), -1.0));
    pin(defect, 1.0);
    assert!(matches!(
        atomic_decompose(&single_node(), &dmat(&diag(&[0.0, 1.0])), &vecd(&[0.0, 1.0]), 1e-9),
        Err(Error::RangeInclusion { .. })
    ));
}

pub fn atomic_equivalence_constants() {
    let e2o = Raw::coordinate(2, &[2.0, 1.0], &[1.0, 1.0]);
    let (_, c) = atomic_oracle(&e2o, &eye(2), &[1.0, 0.0]);
    let c = pin(c, 1.0);
    let a = pin(diag_kgf_bound(&e2o.frame(), &eye(2)), 1.0);
    let r = atomic_equiv_check(&e2(), &DMatrix::identity(2, 2), 1e-12);
    assert!(r.passed);
    close(r.constant("C").unwrap(), c);
    close(r.constant("kgf_lower_bound").unwrap(), a);

    let single = Raw::coordinate(2, &[1.0], &[1.0]);
    let k = diag(&[1.0, 0.0]);
    let (_, c) = atomic_oracle(&single, &k, &[1.0, 0.0]);
    let c = pin(c, 1.0);
    let a = pin(diag_kgf_bound(&single.frame(), &mul(&k, &tr(&k))), 1.0);
    let r = atomic_equiv_check(&single_node(), &dmat(&k), 1e-12);
    assert!(r.passed);
    close(r.constant("C").unwrap(), c);
    close(r.constant("kgf_lower_bound").unwrap(), a);

    let r = atomic_equiv_check(&single_node(), &DMatrix::identity(2, 2), 1e-12);
    assert!(r.passed);
    assert_eq!(r.constant("kgf_lower_bound"), Some(0.0));

    let s = e2o.frame();
    let a = pin(diag_kgf_bound(&s, &mul(&s, &s)), 0.25);
    let (_, c) = atomic_oracle(&e2o, &s, &[1.0, 0.0]);
    let c = pin(c, 2.0);
    let r = atomic_wrt_frame_operator(&e2(), 1e-12).unwrap();
    assert!(r.passed);
    close(r.constant("kgf_lower_bound").unwrap(), a);
    close(r.constant("C").unwrap(), c);
}

pub fn shift_transforms() {
    for (sys, oracle, l, hand) in [
        (e1(), Raw::coordinate(2, &[1.0, 1.0], &[1.0, 1.0]), eye(2), diag(&[4.0, 4.0])),
        (e2(), Raw::coordinate(2, &[2.0, 1.0], &[1.0, 1.0]), diag(&[1.0, 0.0]), diag(&[16.0, 1.0])),
    ] {
        let shift = lin(&eye(2), 1.0, &l, 1.0);
        let s_new = pin_mat(mul(&mul(&shift, &oracle.frame()), &tr(&shift)), &hand);
        let (out, r) = transform_shift(&sys, &dmat(&l), 1e-9).unwrap();
        assert!(r.passed);
        assert_mat(out.frame_operator().matrix(), &s_new);
    }
}

pub fn combined_transforms() {
    let chi = coordinate_system(2, &[1.0, 1.0], &[1.0, 0.0]);
    let xi = coordinate_system(2, &[1.0, 1.0], &[0.0, 1.0]);
    let chi_o = Raw::coordinate(2, &[1.0, 1.0], &[1.0, 0.0]);
    let xi_o = Raw::coordinate(2, &[1.0, 1.0], &[0.0, 1.0]);
    let mut cross = zeros(2, 2);
    for i in 0..2 {
        cross = lin(&cross, 1.0, &mul(&tr(&chi_o.eff(i)), &xi_o.eff(i)), chi_o.mu[i] * chi_o.v[i] * xi_o.v[i]);
    }
    pin_mat(cross, &zeros(2, 2));

    for (scale, hand) in [(0.5, 1.0), (1.0, 4.0)] {
        let lg = lin(&eye(2), scale, &eye(2), scale);
        let mut s = zeros(2, 2);
        for i in 0..2 {
            let m = mul(&lin(&chi_o.eff(i), 1.0, &xi_o.eff(i), 1.0), &tr(&lg));
            s = lin(&s, 1.0, &mul(&tr(&m), &m), chi_o.mu[i]);
        }
        let s = pin_mat(s, &diag(&[hand, hand]));
        let ev = eigenvalues(&s);
        let half = dmat(&lin(&eye(2), scale, &zeros(2, 2), 0.0));
        let (out, r) = transform_combined(&chi, &xi, &half, &half, &DMatrix::identity(2, 2), 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
        assert_mat(out.frame_operator().matrix(), &s);
        let b = out.frame_bounds(1e-9);
        close(b.lower, ev[0]);
        close(b.upper, ev[1]);
    }
}

fn pair_oracle(chi: &Raw, xi: &Raw) -> M {
    let mut s = zeros(chi.n, chi.n);
    for i in 0..chi.v.len() {
        s = lin(&s, 1.0, &mul(&tr(&xi.eff(i)), &chi.eff(i)), chi.mu[i] * chi.v[i] * xi.v[i]);
    }
    s
}

pub fn pair_operator_of_e2_e1() {
    let (chi_o, xi_o) = (Raw::coordinate(2, &[2.0, 1.0], &[1.0, 1.0]), Raw::coordinate(2, &[1.0, 1.0], &[1.0, 1.0]));
    let s = pin_mat(pair_oracle(&chi_o, &xi_o), &diag(&[2.0, 1.0]));
    let norm = pin(op_norm(&s), 2.0);
    let d1 = eigenvalues(&chi_o.frame())[1];
    let d2 = eigenvalues(&xi_o.frame())[1];
    let bound = pin((d1 * d2).sqrt(), 2.0);

    let p = PairSystem::new(e2(), e1()).unwrap();
    assert_mat(pair_frame_operator(&p).matrix(), &s);
    let r = pair_adjoint_and_norm(&p, 1e-9);
    assert!(r.passed);
    close(r.constant("norm").unwrap(), norm);
    close(r.constant("norm_bound").unwrap(), bound);
    assert!(r.residual("adjoint_residual").unwrap() <= 1e-12);
}

pub fn bounded_below_pairs() {
    // Lower bounds divide by the other system's Bessel bound.
    for (chi, xi, chi_o, xi_o, k_hand, chi_hand, xi_hand) in [
        (e1(), e1(), Raw::coordinate(2, &[1.0, 1.0], &[1.0, 1.0]), Raw::coordinate(2, &[1.0, 1.0], &[1.0, 1.0]), eye(2), 1.0, 1.0),
        (e2(), e1(), Raw::coordinate(2, &[2.0, 1.0], &[1.0, 1.0]), Raw::coordinate(2, &[1.0, 1.0], &[1.0, 1.0]), diag(&[0.5, 1.0]), 1.0, 0.25),
    ] {
        let s = pair_oracle(&chi_o, &xi_o);
        let m = pin((0..2).map(|i| s[i][i].abs()).fold(f64::INFINITY, f64::min), 1.0);
        let k = pin_mat(diag_pinv(&s), &k_hand);
        let mut sum = zeros(2, 2);
        for i in 0..2 {
            let w = mul(&k, &mul(&tr(&xi_o.eff(i)), &chi_o.eff(i)));
            sum = lin(&sum, 1.0, &w, chi_o.mu[i] * chi_o.v[i] * xi_o.v[i]);
        }
        pin(op_norm(&lin(&sum, 1.0, &eye(2), -1.0)), 0.0);
        let d1 = eigenvalues(&chi_o.frame())[1];
        let d2 = eigenvalues(&xi_o.frame())[1];
        let chi_bound = pin(m * m / d2, chi_hand);
        let xi_bound = pin(m * m / d1, xi_hand);
        let r = bounded_below_analysis(&PairSystem::new(chi, xi).unwrap(), 1e-9);
        assert!(r.passed, "{r:?}");
        close(r.constant("M").unwrap(), m);
        close(r.constant("chi_lower_bound").unwrap(), chi_bound);
        close(r.constant("xi_lower_bound").unwrap(), xi_bound);
    }
}

pub fn perturbation_of_scaled_pair() {
    let chi_o = Raw::coordinate(2, &[0.8, 1.0], &[1.0, 1.0]);
    let xi_o = Raw::coordinate(2, &[1.0, 1.0], &[1.0, 1.0]);
    let s = pin_mat(pair_oracle(&chi_o, &xi_o), &diag(&[0.8, 1.0]));
    let h = |f: &[f64], l1: f64| {
        let sf = mv(&s, f);
        let r: Vec<f64> = f.iter().zip(&sf).map(|(a, b)| a - b).collect();
        dot(&r, &r).sqrt() - l1 * dot(f, f).sqrt()
    };
    let d1 = eigenvalues(&chi_o.frame())[1];
    let d2 = eigenvalues(&xi_o.frame())[1];
    let p = PairSystem::new(coordinate_system(2, &[0.8, 1.0], &[1.0, 1.0]), e1()).unwrap();

    let gap = pin(h(&[1.0, 0.0], 0.2), 0.0);
    let bound = pin(((1.0f64 - 0.2) / (1.0 + 0.0)).powi(2) / d2, 0.64);
    let r = perturbation_bound(&p, 0.2, 0.0, 100, 0, 1e-9).unwrap();
    assert!(r.passed, "{r:?}");
    close(r.constant("max_hypothesis_gap").unwrap(), gap);
    close(r.constant("chi_lower_bound").unwrap(), bound);

    let gap = pin(h(&[1.0, 0.0], 0.1), 0.1);
    let r = perturbation_bound(&p, 0.1, 0.0, 100, 0, 1e-9).unwrap();
    assert!(!r.passed);
    close(r.constant("max_hypothesis_gap").unwrap(), gap);

    let distance = pin(op_norm(&lin(&eye(2), 1.0, &s, -1.0)), 0.2);
    let chi_bound = pin((1.0 - 0.2f64).powi(2) / d2, 0.64);
    let xi_bound = pin((1.0 - 0.2f64).powi(2) / d1, 0.64);
    let r = symmetric_perturbation(&p, 0.2, 1e-9).unwrap();
    assert!(r.passed, "{r:?}");
    close(r.constant("distance_to_identity").unwrap(), distance);
    close(r.constant("chi_lower_bound").unwrap(), chi_bound);
    close(r.constant("xi_lower_bound").unwrap(), xi_bound);

    let s = pair_oracle(&Raw::coordinate(2, &[2.0, 1.0], &[1.0, 1.0]), &xi_o);
    let distance = pin(op_norm(&lin(&eye(2), 1.0, &s, -1.0)), 1.0);
    let r = symmetric_perturbation(&PairSystem::new(e2(), e1()).unwrap(), 0.5, 1e-9).unwrap();
    assert!(!r.passed);
    close(r.constant("distance_to_identity").unwrap(), distance);
}

fn block_diag(a: &M, b: &M) -> M {
    let mut out = zeros(a.len() + b.len(), a[0].len() + b[0].len());
    for (i, row) in a.iter().enumerate() {
        out[i][..row.len()].copy_from_slice(row);
    }
    for (i, row) in b.iter().enumerate() {
        out[a.len() + i][a[0].len()..].copy_from_slice(row);
    }
    out
}

pub fn direct_sums_parseval_and_duals() {
    let e1o = Raw::coordinate(2, &[1.0, 1.0], &[1.0, 1.0]);
    let e2o = Raw::coordinate(2, &[2.0, 1.0], &[1.0, 1.0]);

    for (a, b, ao, bo, hand, (lo, hi)) in [
        (e2(), e1(), &e2o, &e1o, diag(&[4.0, 1.0, 1.0, 1.0]), (1.0, 4.0)),
        (e2(), e2(), &e2o, &e2o, diag(&[4.0, 1.0, 4.0, 1.0]), (1.0, 4.0)),
    ] {
        let s = pin_mat(block_diag(&ao.frame(), &bo.frame()), &hand);
        let ev = eigenvalues(&s);
        let sum = direct_sum_system(&a, &b).unwrap();
        assert!(sum.verify(1e-12).passed);
        assert_mat(sum.system().frame_operator().matrix(), &s);
        let bounds = sum.system().frame_bounds(1e-9);
        close(bounds.lower, pin(ev[0], lo));
        close(bounds.upper, pin(*ev.last().unwrap(), hi));
    }

    let s = e2o.frame();
    let r = pin_mat(diag(&[1.0 / s[0][0].sqrt(), 1.0 / s[1][1].sqrt()]), &diag(&[0.5, 1.0]));
    let maps: Vec<M> = (0..2).map(|i| lin(&mul(&e2o.eff(i), &r), e2o.v[i], &zeros(1, 2), 0.0)).collect();
    let m1 = pin_mat(maps[0].clone(), &vec![vec![1.0, 0.0]]);
    let m2 = pin_mat(maps[1].clone(), &vec![vec![0.0, 1.0]]);
    let mut s_new = zeros(2, 2);
    for m in [&m1, &m2] {
        s_new = lin(&s_new, 1.0, &mul(&tr(m), m), 1.0);
    }
    let s_new = pin_mat(s_new, &eye(2));
    let (out, rep) = parsevalize(&e2(), 1e-9).unwrap();
    assert!(rep.passed);
    assert_mat(&(out.term(0).effective() * out.term(0).weight()), &m1);
    assert_mat(&(out.term(1).effective() * out.term(1).weight()), &m2);
    assert_mat(out.frame_operator().matrix(), &s_new);

    let sum = direct_sum_system(&e2(), &e1()).unwrap().into_system();
    let (out, rep) = parsevalize(&sum, 1e-9).unwrap();
    assert!(rep.passed);
    assert_mat(out.frame_operator().matrix(), &eye(4));

    let inv = pin_mat(diag_pinv(&s), &diag(&[0.25, 1.0]));
    let (out, rep) = canonical_dual(&e2(), 1e-9).unwrap();
    assert!(rep.passed);
    assert_mat(out.frame_operator().matrix(), &inv);

    let inv = pin_mat(diag_pinv(&block_diag(&s, &e1o.frame())), &diag(&[0.25, 1.0, 1.0, 1.0]));
    let (out, rep) = canonical_dual(&sum, 1e-9).unwrap();
    assert!(rep.passed);
    assert_mat(out.frame_operator().matrix(), &inv);
}

pub fn basis_off_by_a_thousandth_is_rejected() {
    let q = [1.001, 0.0];
    let defect = pin((dot(&q, &q) - 1.0).abs(), 0.002001);
    close(orthonormality_defect(&dmat(&col(&q))), defect);

    let mut file = SystemFile::from_system(&e1());
    file.nodes[0].basis = vec![q.to_vec()];
    let err = file.to_system().unwrap_err().to_string();
    assert!(err.contains("w1") || err.contains("node"), "{err}");
}

/// Every worked example, by name.
pub const CASES: &[(&str, fn())] = &[
    ("projection_onto_diagonal_line", projection_onto_diagonal_line),
    ("loewner_gaps", loewner_gaps),
    ("douglas_factor_of_diagonals", douglas_factor_of_diagonals),
    ("pseudoinverse_of_rank_one", pseudoinverse_of_rank_one),
    ("square_roots_of_diagonal", square_roots_of_diagonal),
    ("rotated_subspace_and_projection_identities", rotated_subspace_and_projection_identities),
    ("weighted_inner_products", weighted_inner_products),
    ("frame_operators_and_bounds", frame_operators_and_bounds),
    ("analysis_and_synthesis_of_e2", analysis_and_synthesis_of_e2),
    ("k_frame_gaps_and_bounds", k_frame_gaps_and_bounds),
    ("canonical_resolution_of_e2", canonical_resolution_of_e2),
    ("failed_resolution_residual", failed_resolution_residual),
    ("energy_lower_equality_cases", energy_lower_equality_cases),
    ("bounded_resolution_on_lifted_e1", bounded_resolution_on_lifted_e1),
    ("frame_from_resolution_cases", frame_from_resolution_cases),
    ("atomic_decompositions", atomic_decompositions),
    ("atomic_equivalence_constants", atomic_equivalence_constants),
    ("shift_transforms", shift_transforms),
    ("combined_transforms", combined_transforms),
    ("pair_operator_of_e2_e1", pair_operator_of_e2_e1),
    ("bounded_below_pairs", bounded_below_pairs),
    ("perturbation_of_scaled_pair", perturbation_of_scaled_pair),
    ("direct_sums_parseval_and_duals", direct_sums_parseval_and_duals),
    ("basis_off_by_a_thousandth_is_rejected", basis_off_by_a_thousandth_is_rejected),
];
