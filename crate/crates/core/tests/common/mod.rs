//! Independent reference computations shared by the integration tests. They
//! use nalgebra directly and never call into the library's search routines.
#![allow(dead_code)]

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rho_core::ComplexMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_dm(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |_, _| {
        let (u1, u2): (f64, f64) = (rng.random::<f64>().max(1e-300), rng.random());
        let r = (-2.0 * u1.ln()).sqrt();
        C64::new(r * (TAU * u2).cos(), r * (TAU * u2).sin())
    })
}

pub fn random(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_dmatrix(gaussian_dm(dim, rng)).unwrap()
}

pub fn dm(m: &ComplexMatrix) -> DMatrix<C64> {
    m.as_dmatrix().clone()
}

/// ‖M‖ by power iteration on M*M.
pub fn power_iteration_norm(m: &DMatrix<C64>) -> f64 {
    let g = m.adjoint() * m;
    let mut v = DMatrix::<C64>::from_fn(m.ncols(), 1, |i, _| C64::new(1.0 + i as f64, 0.5));
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let w = &g * &v;
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        lambda = n / v.norm();
        v = w / C64::new(n, 0.0);
    }
    lambda.sqrt()
}

/// Characteristic polynomial coefficients (monic, descending) by Faddeev–LeVerrier.
pub fn char_poly(a: &DMatrix<C64>) -> Vec<C64> {
    let n = a.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let mut coeffs = vec![C64::new(1.0, 0.0)];
    let mut m = DMatrix::<C64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + &id * coeffs[k - 1];
        let am = a * &m;
        coeffs.push(-am.trace() / C64::new(k as f64, 0.0));
    }
    coeffs
}

/// All roots of a monic polynomial (descending coefficients) by Durand–Kerner.
pub fn durand_kerner(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len() - 1;
    let eval = |z: C64| coeffs.iter().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let bound = 1.0 + coeffs[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut roots: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(bound, 0.4 + TAU * k as f64 / n as f64))
        .collect();
    for _ in 0..2000 {
        for i in 0..n {
            let zi = roots[i];
            let denom = (0..n)
                .filter(|&j| j != i)
                .fold(C64::new(1.0, 0.0), |acc, j| acc * (zi - roots[j]));
            roots[i] = zi - eval(zi) / denom;
        }
    }
    roots
}

fn largest_real_root_of_quadratic_pencil(h: &DMatrix<C64>, g: &DMatrix<C64>, rho: f64) -> f64 {
    // ρμ²v − (ρ−1)μHv + (ρ−2)Gv = 0 linearized on x = [v; μv].
    let n = h.nrows();
    let mut comp = DMatrix::<C64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        comp[(i, n + i)] = C64::new(1.0, 0.0);
    }
    for i in 0..n {
        for j in 0..n {
            comp[(n + i, j)] = -g[(i, j)] * ((rho - 2.0) / rho);
            comp[(n + i, n + j)] = h[(i, j)] * ((rho - 1.0) / rho);
        }
    }
    let eig = comp.schur().eigenvalues().expect("complex Schur form is triangular");
    eig.iter()
        .filter(|z| z.im.abs() <= 1e-6 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .fold(0.0, f64::max)
}

/// w_ρ(A) as max over θ of the largest real root μ of
/// det(ρμ²I − (ρ−1)μH_θ + (ρ−2)A*A) = 0 with H_θ = e^{iθ}A + e^{−iθ}A*.
pub fn quadratic_pencil_radius(a: &ComplexMatrix, rho: f64) -> f64 {
    let a = dm(a);
    let g = a.adjoint() * &a;
    let f = |t: f64| {
        let h = &a * C64::from_polar(1.0, t) + a.adjoint() * C64::from_polar(1.0, -t);
        largest_real_root_of_quadratic_pencil(&h, &g, rho)
    };
    let n = 2048;
    let step = TAU / n as f64;
    let values: Vec<f64> = (0..n).map(|k| f(step * k as f64)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let mut best = values[order[0]];
    for &k in order.iter().take(4) {
        let (mut lo, mut hi) = (step * k as f64 - step, step * k as f64 + step);
        let gr = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let x1 = hi - gr * (hi - lo);
            let x2 = lo + gr * (hi - lo);
            if f(x1) > f(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        best = best.max(f(0.5 * (lo + hi)));
    }
    best
}

/// All distinct arrangements of a multiset of letters, by brute force over
/// every permutation of positions.
pub fn distinct_words(counts: &[usize]) -> Vec<Vec<usize>> {
    let letters: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(k, &c)| std::iter::repeat_n(k, c))
        .collect();
    let mut out = std::collections::BTreeSet::new();
    let mut idx: Vec<usize> = (0..letters.len()).collect();
    permute(&mut idx, 0, &mut |p| {
        out.insert(p.iter().map(|&i| letters[i]).collect::<Vec<_>>());
    });
    out.into_iter().collect()
}

fn permute(idx: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == idx.len() {
        f(idx);
        return;
    }
    for i in k..idx.len() {
        idx.swap(k, i);
        permute(idx, k + 1, f);
        idx.swap(k, i);
    }
}
