//! Membership in C_{ρ,N} and the tuple radii.

use std::f64::consts::TAU;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use super::sampling::{default_samples, rng_for, torus_points, CommutingTuple};
use super::search::{bracket_boundary, refine_min};
use super::single::{
    check_rho, check_tol, check_width, kernel_margin_raw, membership_single_with, numerical_radius_raw,
    w_rho_with, POLE_PROBES,
};
use super::{
    classify, point_json, Certificate, Decision, Exactness, GridSpec, MembershipVerdict, RadiusMethod,
    RadiusReport, Route, DEFAULT_NORM_CAP, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{c, cis, lambda_max_raw, op_norm, spectral_radius, ComplexMatrix, C64};
use crate::tuple::OperatorTuple;

const MAX_BRACKET_ITER: usize = 200;
/// Scalar torus points used as 1×1 commuting tuples for radius lower bounds.
const TORUS_WITNESSES: usize = 16;
/// Tensor samples whose radius is bracketed exactly; the rest contribute cheap bounds.
const EXACT_SAMPLE_RADII: usize = 4;

fn pencil_at(mats: &[DMatrix<C64>], z: &[C64]) -> DMatrix<C64> {
    let mut x = &mats[0] * z[0];
    for (m, &zk) in mats.iter().zip(z).skip(1) {
        x += m * zk;
    }
    x
}

/// ‖φ_ρ(z)‖ or None at a pole.
fn phi_norm_at(mats: &[DMatrix<C64>], rho: f64, z: &[C64]) -> Option<f64> {
    let x = pencil_at(mats, z);
    let n = x.nrows();
    let m = &x * c(rho - 1.0, 0.0) - DMatrix::<C64>::identity(n, n) * c(rho, 0.0);
    let inv = m.try_inverse()?;
    let phi = x * inv;
    let v = lambda_max_raw(&(phi.adjoint() * &phi)).max(0.0).sqrt();
    v.is_finite().then_some(v)
}

/// ‖φ_ρ(z)‖, stepping just inside the polydisk when z is a pole.
fn phi_norm_probed(mats: &[DMatrix<C64>], rho: f64, z: &[C64]) -> Result<(f64, Vec<C64>)> {
    if let Some(v) = phi_norm_at(mats, rho, z) {
        return Ok((v, z.to_vec()));
    }
    let mut best: Option<(f64, Vec<C64>)> = None;
    for delta in POLE_PROBES {
        let w: Vec<C64> = z.iter().map(|&zk| zk * (1.0 - delta)).collect();
        if let Some(v) = phi_norm_at(mats, rho, &w) {
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, w));
            }
        }
    }
    best.ok_or_else(|| Error::Pole {
        z: z.to_vec(),
        sigma_min: 0.0,
    })
}

struct PhiSup {
    sup: f64,
    witness: Vec<C64>,
    evaluations: usize,
}

/// sup ‖φ_ρ‖ over the polydisk: a θ-grid (N = 2) or random torus points
/// (N ≥ 3) on each radius, then coordinate-wise golden refinement of the
/// leading candidates.
fn phi_sup(mats: &[DMatrix<C64>], rho: f64, grid: &GridSpec) -> Result<PhiSup> {
    let n_vars = mats.len();
    let mut evaluations = 0usize;
    let mut eval = |r: f64, angles: &[f64]| -> Result<(f64, Vec<C64>)> {
        evaluations += 1;
        let z: Vec<C64> = angles.iter().map(|&t| cis(t) * r).collect();
        phi_norm_probed(mats, rho, &z)
    };
    let mut candidates: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    let keep = grid.refine_candidates.max(1);
    let push = |cands: &mut Vec<(f64, f64, Vec<f64>)>, v: f64, r: f64, angles: Vec<f64>| {
        if cands.len() < keep || v > cands[cands.len() - 1].0 {
            cands.push((v, r, angles));
            cands.sort_by(|a, b| b.0.total_cmp(&a.0));
            cands.truncate(keep);
        }
    };
    let (points, spacing): (Vec<Vec<f64>>, f64) = if n_vars == 2 {
        let t = grid.polydisk_theta_points;
        let h = TAU / t as f64;
        let pts = (0..t)
            .flat_map(|i| (0..t).map(move |j| vec![h * i as f64, h * j as f64]))
            .collect();
        (pts, h)
    } else {
        let mut rng = rng_for(grid.seed, 11);
        let pts = (0..grid.torus_samples)
            .map(|_| (0..n_vars).map(|_| TAU * rng.random::<f64>()).collect())
            .collect();
        (pts, TAU / (grid.torus_samples as f64).powf(1.0 / n_vars as f64))
    };
    for &r in &grid.polydisk_radii {
        for angles in &points {
            let (v, _) = eval(r, angles)?;
            push(&mut candidates, v, r, angles.clone());
        }
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for (v0, r, mut angles) in candidates {
        let mut v = v0;
        let mut h = spacing;
        for _ in 0..grid.refine_rounds {
            for k in 0..n_vars {
                let mut err = None;
                let x0 = angles[k];
                let (x, nv) = refine_min(
                    |t| {
                        let mut a = angles.clone();
                        a[k] = t;
                        match eval(r, &a) {
                            Ok((v, _)) => -v,
                            Err(e) => {
                                err.get_or_insert(e);
                                f64::NAN
                            }
                        }
                    },
                    x0,
                    -v,
                    h,
                    1,
                    None,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                angles[k] = x;
                v = -nv;
            }
            h *= 0.5;
        }
        let (v, z) = eval(r, &angles)?;
        if v > best.0 {
            best = (v, z);
        }
    }
    Ok(PhiSup {
        sup: best.0,
        witness: best.1,
        evaluations,
    })
}

/// sup ‖φ_ρ(z)‖ over the closed polydisk and the point attaining it.
pub fn polydisk_phi_sup(a: &OperatorTuple, rho: f64, grid: &GridSpec) -> Result<(f64, Vec<C64>)> {
    check_rho(rho)?;
    if !a.mats().iter().all(|m| m.is_finite()) {
        return Err(Error::input("tuple has non-finite entries"));
    }
    let s = phi_sup(&tuple_dmats(a), rho, grid)?;
    Ok((s.sup, s.witness))
}

fn tuple_dmats(a: &OperatorTuple) -> Vec<DMatrix<C64>> {
    a.mats().iter().map(|m| m.as_dmatrix().clone()).collect()
}

struct TupleMargin {
    margin: f64,
    route: Route,
    witness: Vec<C64>,
    evaluations: usize,
    samples: usize,
    sample_seed: Option<u64>,
}

/// Margin of the N ≥ 2 test: the polydisk φ-sup, plus sampled A ⊗ C kernels for N ≥ 3.
fn tuple_margin(
    mats: &[DMatrix<C64>],
    rho: f64,
    samples: &[CommutingTuple],
    grid: &GridSpec,
) -> Result<TupleMargin> {
    let sup = phi_sup(mats, rho, grid)?;
    let mut out = TupleMargin {
        margin: 1.0 - sup.sup,
        route: Route::PhiPolydisk,
        witness: sup.witness,
        evaluations: sup.evaluations,
        samples: 0,
        sample_seed: None,
    };
    if mats.len() < 3 {
        return Ok(out);
    }
    let sample_grid = grid.for_samples();
    for s in samples {
        let x = tensor_raw(mats, &s.base);
        let k = kernel_margin_raw(&x, rho, &sample_grid);
        out.samples += 1;
        out.evaluations += k.evaluations;
        if k.margin < out.margin {
            out.margin = k.margin;
            out.route = Route::SampledTensor;
            out.witness = k.witness;
            out.sample_seed = Some(s.seed);
        }
    }
    Ok(out)
}

fn tensor_raw(mats: &[DMatrix<C64>], cs: &OperatorTuple) -> DMatrix<C64> {
    let mut acc: Option<DMatrix<C64>> = None;
    for (a, ck) in mats.iter().zip(cs.mats()) {
        let k = a.kronecker(ck.as_dmatrix());
        acc = Some(match acc {
            Some(s) => s + k,
            None => k,
        });
    }
    acc.expect("non-empty tuple")
}

pub fn membership_tuple(a: &OperatorTuple, rho: f64, tol: f64, budget: usize) -> Result<MembershipVerdict> {
    membership_tuple_with(a, rho, tol, budget, &GridSpec::default())
}

/// N = 1 delegates to the single-operator test. N = 2 decides by the polydisk
/// sup of ‖φ_ρ‖ (certified up to grid resolution). N ≥ 3 adds sampled
/// commuting tuples and can only certify Out.
pub fn membership_tuple_with(
    a: &OperatorTuple,
    rho: f64,
    tol: f64,
    budget: usize,
    grid: &GridSpec,
) -> Result<MembershipVerdict> {
    check_rho(rho)?;
    check_tol(tol)?;
    if !a.mats().iter().all(|m| m.is_finite()) {
        return Err(Error::input("tuple has non-finite entries"));
    }
    if a.n_vars() == 1 {
        return membership_single_with(a.get(0), rho, tol, grid);
    }
    let samples = if a.n_vars() >= 3 {
        default_samples(a.n_vars(), budget, grid.seed, DEFAULT_NORM_CAP)?
    } else {
        Vec::new()
    };
    let m = tuple_margin(&tuple_dmats(a), rho, &samples, grid)?;
    let exactness = if a.n_vars() == 2 { Exactness::Certified } else { Exactness::NecessaryOnly };
    let description = match m.route {
        Route::SampledTensor => format!(
            "kernel of A ⊗ C for the sampled commuting tuple with seed {}, {}-point circle grid",
            m.sample_seed.unwrap_or_default(),
            grid.sample_theta_points
        ),
        _ if a.n_vars() == 2 => format!(
            "1 − sup ‖φ_ρ(z)‖ over a {0}x{0} torus grid at radii {1:?}, {2} refinement rounds",
            grid.polydisk_theta_points, grid.polydisk_radii, grid.refine_rounds
        ),
        _ => format!(
            "1 − sup ‖φ_ρ(z)‖ over {} random torus points at radii {:?}; {} sampled tuples passed",
            grid.torus_samples, grid.polydisk_radii, m.samples
        ),
    };
    Ok(MembershipVerdict {
        decision: classify(m.margin, tol),
        margin: m.margin,
        exactness,
        rho,
        tol,
        certificate: Certificate {
            route: m.route,
            description,
            witness: Some(point_json(&m.witness)),
            cross_check: None,
            samples: m.samples,
        },
        grid_spec: grid.clone(),
    })
}

pub fn w_rho_tuple(a: &OperatorTuple, rho: f64, width: f64, budget: usize) -> Result<RadiusReport> {
    w_rho_tuple_with(a, rho, width, DEFAULT_TOL, budget, &GridSpec::default())
}

/// max(‖X‖/ρ, ν(X)), a cheap lower bound for w_ρ(X).
fn cheap_lower_bound(x: &ComplexMatrix, rho: f64) -> Result<f64> {
    Ok((op_norm(x)? / rho).max(spectral_radius(x)?))
}

/// Lower bound max_C w_ρ(A ⊗ C) over scalar torus points and sampled tuples.
fn sample_lower_bound(a: &OperatorTuple, rho: f64, tol: f64, samples: &[CommutingTuple], grid: &GridSpec) -> Result<f64> {
    let mut cands: Vec<(f64, ComplexMatrix, bool)> = Vec::new();
    for z in torus_points(a.n_vars(), TORUS_WITNESSES, grid.seed) {
        let x = a.tensor_with(&CommutingTuple::scalar_point(&z)?)?;
        cands.push((cheap_lower_bound(&x, rho)?, x, true));
    }
    for s in samples {
        let x = a.tensor_with(&s.base)?;
        cands.push((cheap_lower_bound(&x, rho)?, x, false));
    }
    cands.sort_by(|p, q| q.0.total_cmp(&p.0));
    let mut best = cands.first().map_or(0.0, |p| p.0);
    let sample_grid = grid.for_samples();
    for (_, x, scalar) in cands.iter().take(EXACT_SAMPLE_RADII) {
        let g = if *scalar { grid } else { &sample_grid };
        let r = w_rho_with(x, rho, 1e-6, tol, g)?;
        best = best.max(r.lo);
    }
    Ok(best)
}

/// w_{ρ,N}(A) = sup_C w_ρ(A ⊗ C). The lower end is the larger of the sampled
/// bound and the bracket; the upper end comes from the polydisk test (N = 2)
/// or the necessary sampled test (N ≥ 3, flagged NecessaryOnly).
pub fn w_rho_tuple_with(
    a: &OperatorTuple,
    rho: f64,
    width: f64,
    tol: f64,
    budget: usize,
    grid: &GridSpec,
) -> Result<RadiusReport> {
    let start = Instant::now();
    check_rho(rho)?;
    check_tol(tol)?;
    check_width(width)?;
    if !a.mats().iter().all(|m| m.is_finite()) {
        return Err(Error::input("tuple has non-finite entries"));
    }
    if a.n_vars() == 1 {
        return w_rho_with(a.get(0), rho, width, tol, grid);
    }
    let (method, exactness) = if a.n_vars() == 2 {
        (RadiusMethod::PolydiskBisection, Exactness::Certified)
    } else {
        (RadiusMethod::NecessaryBisection, Exactness::NecessaryOnly)
    };
    let report = |lo: f64, hi: f64, method: RadiusMethod, iterations: usize, lb: Option<f64>| RadiusReport {
        lo,
        hi,
        rho,
        width,
        method,
        exactness,
        iterations,
        sample_lower_bound: lb,
        grid_spec: grid.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    if a.mats().iter().all(|m| m.max_abs() == 0.0) {
        return Ok(report(0.0, 0.0, RadiusMethod::ZeroShortCircuit, 0, None));
    }
    let samples = default_samples(a.n_vars(), budget, grid.seed, DEFAULT_NORM_CAP)?;
    let lower = sample_lower_bound(a, rho, tol, &samples, grid)?;
    let hi = a.norm_sum() * (2.0 / rho - 1.0).max(1.0);
    let mats = tuple_dmats(a);
    let test_samples: &[CommutingTuple] = if a.n_vars() >= 3 { &samples } else { &[] };
    let margin_at = |u: f64| -> Result<f64> {
        let scaled: Vec<DMatrix<C64>> = mats.iter().map(|m| m * c(1.0 / u, 0.0)).collect();
        Ok(tuple_margin(&scaled, rho, test_samples, grid)?.margin)
    };
    let top = margin_at(hi)?;
    if classify(top, tol) != Decision::In {
        return Err(Error::internal(format!(
            "upper bracket {hi} is not in the class: margin {top:e}"
        )));
    }
    let lo = lower.min(hi);
    if hi - lo <= width {
        return Ok(report(lo, hi, method, 1, Some(lower)));
    }
    let bottom = margin_at(lo)?;
    if classify(bottom, tol) == Decision::In {
        return Ok(report(lo, lo, method, 2, Some(lower)));
    }
    let b = bracket_boundary::<Error>(
        |u| {
            let m = margin_at(u)?;
            Ok((classify(m, tol) == Decision::In, m))
        },
        lo,
        bottom,
        hi,
        top,
        width,
        MAX_BRACKET_ITER,
    )?;
    if b.hi - b.lo > width {
        return Err(Error::internal(format!(
            "bracket [{}, {}] did not close to width {width}",
            b.lo, b.hi
        )));
    }
    Ok(report(b.lo, b.hi, method, b.iterations + 2, Some(lower)))
}

fn sample_operators(a: &OperatorTuple, budget: usize, seed: u64) -> Result<Vec<ComplexMatrix>> {
    let count = if a.n_vars() == 1 { 1 } else { 4 * TORUS_WITNESSES };
    let mut xs = Vec::new();
    for z in torus_points(a.n_vars(), count, seed) {
        xs.push(a.tensor_with(&CommutingTuple::scalar_point(&z)?)?);
    }
    for s in default_samples(a.n_vars(), budget, seed, DEFAULT_NORM_CAP)? {
        xs.push(a.tensor_with(&s.base)?);
    }
    Ok(xs)
}

/// Lower bound for w^{(N)}(A) = sup_C w(A ⊗ C) over torus points and samples.
pub fn tuple_numerical_radius(a: &OperatorTuple, budget: usize, seed: u64) -> Result<f64> {
    let grid = GridSpec { seed, ..GridSpec::default() };
    let mut best = 0.0f64;
    for x in sample_operators(a, budget, seed)? {
        best = best.max(numerical_radius_raw(x.as_dmatrix(), &grid));
    }
    Ok(best)
}

/// max over torus points and samples of ‖(A ⊗ C)^n‖^{1/n}, n = n_max.
pub fn tuple_spectral_radius(a: &OperatorTuple, n_max: u32, budget: usize, seed: u64) -> Result<f64> {
    if n_max < 8 {
        return Err(Error::parameter(format!("n_max must be at least 8, got {n_max}")));
    }
    let mut best = 0.0f64;
    for x in sample_operators(a, budget, seed)? {
        let scale = op_norm(&x)?;
        if scale == 0.0 {
            continue;
        }
        // Normalize first so high powers cannot overflow.
        let p = x.scale_real(1.0 / scale).pow(n_max);
        let v = scale * op_norm(&p)?.powf(1.0 / n_max as f64);
        best = best.max(v);
    }
    Ok(best)
}
