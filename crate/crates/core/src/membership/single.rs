//! Single-operator membership in C_ρ and the radius w_ρ.

use std::f64::consts::TAU;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::search::{bracket_boundary, refine_min, smallest_k, theta_grid};
use super::{
    classify, point_json, Certificate, CrossCheck, Decision, Exactness, GridSpec, MembershipVerdict,
    RadiusMethod, RadiusReport, Route, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{
    c, cis, eigenvalues, lambda_max_raw, lambda_min_raw, op_norm, spectral_radius, ComplexMatrix, C64,
};
use crate::pencil::{phi_raw, psi_raw};

/// Probes placed just inside a pole found in the closed disk.
pub(crate) const POLE_PROBES: [f64; 3] = [1e-7, 1e-5, 1e-3];

const MAX_BRACKET_ITER: usize = 200;

/// The extremal value found by one characterization, with the point achieving it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteMargin {
    pub route: Route,
    pub margin: f64,
    pub witness: Vec<C64>,
    pub evaluations: usize,
    /// Factor applied to the membership tolerance for this route.
    pub tol_scale: f64,
}

impl RouteMargin {
    pub fn decision(&self, tol: f64) -> Decision {
        classify(self.margin, tol * self.tol_scale)
    }
}

pub(crate) fn check_square(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::input(format!("expected a square matrix, got {}x{}", a.rows(), a.cols())));
    }
    if !a.is_finite() {
        return Err(Error::input("matrix has non-finite entries"));
    }
    Ok(())
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::input(format!("rho must be positive and finite, got {rho}")));
    }
    Ok(())
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::input(format!("tol must be positive, got {tol}")));
    }
    Ok(())
}

/// k_ρ(z,z) for a fixed matrix, evaluated without reallocating.
pub(crate) struct KernelScan {
    n: usize,
    rho: f64,
    a: DMatrix<C64>,
    g: DMatrix<C64>,
    buf: DMatrix<C64>,
    scratch: Vec<C64>,
    pub evaluations: usize,
}

impl KernelScan {
    pub(crate) fn new(a: &DMatrix<C64>, rho: f64) -> Self {
        let n = a.nrows();
        KernelScan {
            n,
            rho,
            a: a.clone(),
            g: a.adjoint() * a,
            buf: DMatrix::zeros(n, n),
            scratch: vec![C64::new(0.0, 0.0); n * n],
            evaluations: 0,
        }
    }

    fn fill(&mut self, r: f64, theta: f64) {
        let z = cis(theta) * r;
        let rho = self.rho;
        let quad = (rho - 2.0) * r * r;
        for j in 0..self.n {
            for i in 0..self.n {
                let lin = z * self.a[(i, j)] + (z * self.a[(j, i)]).conj();
                let mut v = self.g[(i, j)] * quad - lin * (rho - 1.0);
                if i == j {
                    v.re += rho;
                }
                self.buf[(i, j)] = v;
            }
        }
    }

    pub(crate) fn lambda_min(&mut self, r: f64, theta: f64) -> f64 {
        self.evaluations += 1;
        self.fill(r, theta);
        lambda_min_raw(&self.buf)
    }

    /// Smallest pivot of an LDL* factorization; stops at the first non-positive one.
    /// Positive iff the kernel is positive definite, and small near singularity.
    fn min_pivot(&mut self, r: f64, theta: f64) -> f64 {
        self.fill(r, theta);
        let n = self.n;
        let l = &mut self.scratch;
        let mut d = vec![0.0f64; n];
        let mut worst = f64::INFINITY;
        for j in 0..n {
            let mut dj = self.buf[(j, j)].re;
            for k in 0..j {
                dj -= l[j * n + k].norm_sqr() * d[k];
            }
            if dj <= 0.0 {
                return dj;
            }
            d[j] = dj;
            worst = worst.min(dj);
            for i in j + 1..n {
                let mut s = self.buf[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj() * d[k];
                }
                l[i * n + j] = s / dj;
            }
        }
        worst
    }

    /// Minimum of λ_min k_ρ(z,z) over the closed disk.
    pub(crate) fn margin(&mut self, grid: &GridSpec) -> (f64, C64) {
        let h_theta = TAU / grid.theta_points as f64;
        let thetas: Vec<f64> = theta_grid(grid.theta_points).collect();
        // r = 0 contributes ρ.
        let mut best = (self.rho, 0.0, 0.0);

        let circle: Vec<f64> = thetas.iter().map(|&t| self.lambda_min(1.0, t)).collect();
        for i in smallest_k(&circle, grid.refine_candidates) {
            let (t, v) = refine_min(|t| self.lambda_min(1.0, t), thetas[i], circle[i], h_theta, grid.refine_rounds, None);
            if v < best.0 {
                best = (v, 1.0, t);
            }
        }

        if self.rho > 2.0 && grid.interior_r_points > 1 {
            let rs: Vec<f64> = (1..grid.interior_r_points)
                .map(|j| j as f64 / grid.interior_r_points as f64)
                .collect();
            let mut proxy = Vec::with_capacity(rs.len() * thetas.len());
            for &r in &rs {
                for &t in &thetas {
                    proxy.push(self.min_pivot(r, t));
                }
            }
            self.evaluations += proxy.len();
            let h_r = 1.0 / grid.interior_r_points as f64;
            for idx in smallest_k(&proxy, grid.refine_candidates) {
                let (mut r, mut t) = (rs[idx / thetas.len()], thetas[idx % thetas.len()]);
                let mut v = self.lambda_min(r, t);
                let (mut ht, mut hr) = (h_theta, h_r);
                for _ in 0..grid.refine_rounds.max(1) {
                    let rt = refine_min(|x| self.lambda_min(r, x), t, v, ht, 1, None);
                    t = rt.0;
                    v = rt.1;
                    let rr = refine_min(|x| self.lambda_min(x, t), r, v, hr, 1, Some((0.0, 1.0)));
                    r = rr.0;
                    v = rr.1;
                    ht *= 0.5;
                    hr *= 0.5;
                }
                if v < best.0 {
                    best = (v, r, t);
                }
            }
        }
        (best.0, cis(best.2) * best.1)
    }
}

/// min over the closed disk of λ_min k_ρ(z,z).
pub fn kernel_margin(a: &ComplexMatrix, rho: f64, grid: &GridSpec) -> Result<RouteMargin> {
    check_square(a)?;
    check_rho(rho)?;
    Ok(kernel_margin_raw(a.as_dmatrix(), rho, grid))
}

pub(crate) fn kernel_margin_raw(a: &DMatrix<C64>, rho: f64, grid: &GridSpec) -> RouteMargin {
    let mut scan = KernelScan::new(a, rho);
    let (margin, z) = scan.margin(grid);
    RouteMargin {
        route: Route::Kernel,
        margin,
        witness: vec![z],
        evaluations: scan.evaluations,
        tol_scale: 1.0,
    }
}

/// Largest-modulus eigenvalue.
fn dominant_eigenvalue(a: &ComplexMatrix) -> Result<C64> {
    Ok(eigenvalues(a)?
        .into_iter()
        .fold(c(0.0, 0.0), |best, l| if l.norm() > best.norm() { l } else { best }))
}

/// min over |z| = psi_radius of λ_min Re ψ_ρ(z). A resolvent pole inside the
/// test radius yields a spectral witness instead.
pub fn psi_margin(a: &ComplexMatrix, rho: f64, grid: &GridSpec) -> Result<RouteMargin> {
    check_square(a)?;
    check_rho(rho)?;
    let r_test = grid.psi_radius;
    let lam = dominant_eigenvalue(a)?;
    if lam.norm() * r_test >= 1.0 {
        return Ok(RouteMargin {
            route: Route::Spectral,
            margin: 1.0 - lam.norm(),
            witness: vec![lam.inv()],
            evaluations: 0,
            tol_scale: 1.0,
        });
    }
    let x = a.as_dmatrix();
    let n = x.nrows();
    let mut evaluations = 0usize;
    let mut scale = 1.0f64;
    let mut first_err: Option<Error> = None;
    let mut eval = |theta: f64| -> f64 {
        evaluations += 1;
        let z = cis(theta) * r_test;
        let xz = x * z;
        match psi_raw(&xz, rho, &[z]) {
            Ok(p) => {
                // Re ψ = (1/ρ) R* k R with R the resolvent, so kernel tolerances scale by ‖R‖²/ρ.
                let resolvent = (&p - DMatrix::<C64>::identity(n, n) * c(1.0 - 2.0 / rho, 0.0)) * c(rho / 2.0, 0.0);
                scale = scale.max(resolvent.norm_squared() / rho);
                lambda_min_raw(&p)
            }
            Err(e) => {
                first_err.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let thetas: Vec<f64> = theta_grid(grid.theta_points).collect();
    let values: Vec<f64> = thetas.iter().map(|&t| eval(t)).collect();
    let mut best = (f64::INFINITY, 0.0);
    for i in smallest_k(&values, grid.refine_candidates) {
        let (t, v) = refine_min(&mut eval, thetas[i], values[i], TAU / grid.theta_points as f64, grid.refine_rounds, None);
        if v < best.0 {
            best = (v, t);
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    Ok(RouteMargin {
        route: Route::Psi,
        margin: best.0,
        witness: vec![cis(best.1) * r_test],
        evaluations,
        tol_scale: scale,
    })
}

fn phi_norm(x: &DMatrix<C64>, rho: f64, z: C64) -> Result<f64> {
    let p = phi_raw(&(x * z), rho, &[z])?;
    Ok(p.singular_values().iter().copied().fold(0.0, f64::max))
}

/// 1 − sup over the closed disk of ‖φ_ρ(z)‖. A pole in the closed disk is
/// witnessed by probes just inside it.
pub fn phi_margin(a: &ComplexMatrix, rho: f64, grid: &GridSpec) -> Result<RouteMargin> {
    check_square(a)?;
    check_rho(rho)?;
    let x = a.as_dmatrix();
    if rho != 1.0 {
        // (ρ−1)zλ = ρ
        let poles = eigenvalues(a)?
            .into_iter()
            .filter(|l| l.norm() > 0.0)
            .map(|l| c(rho / (rho - 1.0), 0.0) / l)
            .filter(|p| p.norm() <= 1.0);
        let mut worst: Option<(f64, C64)> = None;
        for p in poles {
            for delta in POLE_PROBES {
                let z = p * (1.0 - delta);
                if let Ok(v) = phi_norm(x, rho, z) {
                    if worst.is_none_or(|w| v > w.0) {
                        worst = Some((v, z));
                    }
                }
            }
            if worst.is_none() {
                return Err(Error::Pole { z: vec![p], sigma_min: 0.0 });
            }
        }
        if let Some((v, z)) = worst {
            return Ok(RouteMargin {
                route: Route::Phi,
                margin: 1.0 - v,
                witness: vec![z],
                evaluations: POLE_PROBES.len(),
                tol_scale: 1.0,
            });
        }
    }
    let mut evaluations = 0usize;
    let mut first_err: Option<Error> = None;
    let mut neg = |theta: f64| -> f64 {
        evaluations += 1;
        match phi_norm(x, rho, cis(theta)) {
            Ok(v) => -v,
            Err(e) => {
                first_err.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let thetas: Vec<f64> = theta_grid(grid.theta_points).collect();
    let values: Vec<f64> = thetas.iter().map(|&t| neg(t)).collect();
    let mut best = (f64::INFINITY, 0.0);
    for i in smallest_k(&values, grid.refine_candidates) {
        let (t, v) = refine_min(&mut neg, thetas[i], values[i], TAU / grid.theta_points as f64, grid.refine_rounds, None);
        if v < best.0 {
            best = (v, t);
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    Ok(RouteMargin {
        route: Route::Phi,
        margin: 1.0 + best.0,
        witness: vec![cis(best.1)],
        evaluations,
        tol_scale: 1.0,
    })
}

pub fn membership_single(a: &ComplexMatrix, rho: f64, tol: f64) -> Result<MembershipVerdict> {
    membership_single_with(a, rho, tol, &GridSpec::default())
}

/// Kernel positivity over the closed disk, cross-checked against Re ψ_ρ ⪰ 0.
/// Disagreement between the two routes is reported as Borderline.
pub fn membership_single_with(a: &ComplexMatrix, rho: f64, tol: f64, grid: &GridSpec) -> Result<MembershipVerdict> {
    check_tol(tol)?;
    let kernel = kernel_margin(a, rho, grid)?;
    let psi = psi_margin(a, rho, grid)?;
    let primary = kernel.decision(tol);
    let cross = psi.decision(tol);
    let decision = if primary == cross { primary } else { Decision::Borderline };
    let region = if rho > 2.0 {
        format!(
            "closed disk: {}-point circle grid plus {} interior radii",
            grid.theta_points, grid.interior_r_points
        )
    } else {
        format!("unit circle ({}-point grid), where the disk minimum is attained", grid.theta_points)
    };
    Ok(MembershipVerdict {
        decision,
        margin: kernel.margin,
        exactness: Exactness::Certified,
        rho,
        tol,
        certificate: Certificate {
            route: Route::Kernel,
            description: format!(
                "min λ_min k_ρ(z,z) over the {region}, {} golden-section rounds around {} candidates",
                grid.refine_rounds, grid.refine_candidates
            ),
            witness: Some(point_json(&kernel.witness)),
            cross_check: Some(CrossCheck {
                route: psi.route,
                margin: psi.margin,
                decision: cross,
            }),
            samples: kernel.evaluations + psi.evaluations,
        },
        grid_spec: grid.clone(),
    })
}

pub fn w_rho(a: &ComplexMatrix, rho: f64, width: f64) -> Result<RadiusReport> {
    w_rho_with(a, rho, width, DEFAULT_TOL, &GridSpec::default())
}

pub(crate) fn check_width(width: f64) -> Result<()> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::input(format!("bracket width must be positive, got {width}")));
    }
    Ok(())
}

/// w_ρ(A) = inf{u > 0 : A/u ∈ C_ρ}, bracketed on the kernel test.
pub fn w_rho_with(a: &ComplexMatrix, rho: f64, width: f64, tol: f64, grid: &GridSpec) -> Result<RadiusReport> {
    let start = Instant::now();
    check_square(a)?;
    check_rho(rho)?;
    check_tol(tol)?;
    check_width(width)?;
    let report = |lo: f64, hi: f64, method: RadiusMethod, iterations: usize| RadiusReport {
        lo,
        hi,
        rho,
        width,
        method,
        exactness: Exactness::Certified,
        iterations,
        sample_lower_bound: None,
        grid_spec: grid.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    if a.max_abs() == 0.0 {
        return Ok(report(0.0, 0.0, RadiusMethod::ZeroShortCircuit, 0));
    }
    let norm = op_norm(a)?;
    let nu = spectral_radius(a)?;
    let mut lo = nu.max(norm / rho);
    let hi = norm * (2.0 / rho - 1.0).max(1.0);
    if lo > hi * (1.0 + 1e-12) {
        return Err(Error::internal(format!(
            "initial bracket inverted: lo = {lo} (ν = {nu}, ‖A‖/ρ = {}) exceeds hi = {hi}",
            norm / rho
        )));
    }
    lo = lo.min(hi);
    let x = a.as_dmatrix();
    let margin_at = |u: f64| kernel_margin_raw(&(x * c(1.0 / u, 0.0)), rho, grid);
    let top = margin_at(hi);
    if classify(top.margin, tol) != Decision::In {
        return Err(Error::internal(format!(
            "upper bracket {hi} is not in the class: kernel margin {:e} at z = {:?}",
            top.margin, top.witness
        )));
    }
    if hi - lo <= width {
        return Ok(report(lo, hi, RadiusMethod::KernelBisection, 1));
    }
    let bottom = margin_at(lo);
    if classify(bottom.margin, tol) == Decision::In {
        // lo is a proven lower bound, so it is the value.
        return Ok(report(lo, lo, RadiusMethod::KernelBisection, 2));
    }
    let b = bracket_boundary::<Error>(
        |u| {
            let m = margin_at(u).margin;
            Ok((classify(m, tol) == Decision::In, m))
        },
        lo,
        bottom.margin,
        hi,
        top.margin,
        width,
        MAX_BRACKET_ITER,
    )?;
    if b.hi - b.lo > width {
        return Err(Error::internal(format!(
            "bracket [{}, {}] did not close to width {width} in {} iterations",
            b.lo, b.hi, b.iterations
        )));
    }
    Ok(report(b.lo, b.hi, RadiusMethod::KernelBisection, b.iterations + 2))
}

/// w(A) = max_θ λ_max(Re e^{iθ}A).
pub fn numerical_radius(a: &ComplexMatrix) -> Result<f64> {
    numerical_radius_with(a, &GridSpec::default())
}

pub fn numerical_radius_with(a: &ComplexMatrix, grid: &GridSpec) -> Result<f64> {
    check_square(a)?;
    Ok(numerical_radius_raw(a.as_dmatrix(), grid))
}

pub(crate) fn numerical_radius_raw(x: &DMatrix<C64>, grid: &GridSpec) -> f64 {
    let neg = |theta: f64| -lambda_max_raw(&(x * cis(theta)));
    let thetas: Vec<f64> = theta_grid(grid.theta_points).collect();
    let values: Vec<f64> = thetas.iter().map(|&t| neg(t)).collect();
    let mut best = f64::INFINITY;
    for i in smallest_k(&values, grid.refine_candidates) {
        let (_, v) = refine_min(neg, thetas[i], values[i], TAU / grid.theta_points as f64, grid.refine_rounds, None);
        best = best.min(v);
    }
    -best
}
