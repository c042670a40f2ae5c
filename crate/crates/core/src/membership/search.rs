//! One-dimensional searches shared by the membership routines.

use std::f64::consts::TAU;

const GOLDEN: f64 = 0.618_033_988_749_894_9;
pub(crate) const GOLDEN_ITERS: usize = 20;

/// Golden-section minimization of `f` on [a, b]. Returns the best point seen.
pub(crate) fn golden_min(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, iters: usize) -> (f64, f64) {
    let (mut a, mut b) = (a, b);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    best
}

/// Repeated golden-section minimization around `x0`, halving the window each round.
pub(crate) fn refine_min(
    mut f: impl FnMut(f64) -> f64,
    x0: f64,
    f0: f64,
    half_width: f64,
    rounds: usize,
    clamp: Option<(f64, f64)>,
) -> (f64, f64) {
    let mut best = (x0, f0);
    let mut h = half_width;
    for _ in 0..rounds {
        let (mut a, mut b) = (best.0 - h, best.0 + h);
        if let Some((lo, hi)) = clamp {
            a = a.max(lo);
            b = b.min(hi);
        }
        if b > a {
            let cand = golden_min(&mut f, a, b, GOLDEN_ITERS);
            if cand.1 < best.1 {
                best = cand;
            }
        }
        h *= 0.5;
    }
    best
}

/// Uniform grid on [0, 2π).
pub(crate) fn theta_grid(points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |i| TAU * i as f64 / points as f64)
}

/// Indices of the `k` smallest values, best first.
pub(crate) fn smallest_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    idx.truncate(k.max(1));
    idx
}

/// Bracketing search for the boundary of a monotone In/Out predicate on u.
///
/// `eval(u)` returns (is_in, margin). Margins drive Anderson–Björck false
/// position; once two successive estimates agree to the target width, the
/// next probe straddles the estimate by half the width. Bisection takes over
/// whenever the bracket stops shrinking.
pub(crate) struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

pub(crate) fn bracket_boundary<E>(
    mut eval: impl FnMut(f64) -> Result<(bool, f64), E>,
    lo: f64,
    m_lo: f64,
    hi: f64,
    m_hi: f64,
    width: f64,
    max_iter: usize,
) -> Result<Bracket, E> {
    let (mut lo, mut hi) = (lo, hi);
    let (mut m_lo, mut m_hi) = (m_lo.min(0.0), m_hi.max(0.0));
    let mut iterations = 0;
    let mut last_side: Option<bool> = None;
    let mut prev_estimate = f64::NAN;
    let mut straddle: Option<f64> = None;
    let mut spans: Vec<f64> = Vec::new();
    while hi - lo > width && iterations < max_iter {
        iterations += 1;
        if let Some(u) = straddle.take() {
            if u > lo && u < hi {
                let (is_in, m) = eval(u)?;
                if is_in {
                    hi = u;
                    m_hi = m.max(0.0);
                } else {
                    lo = u;
                    m_lo = m.min(0.0);
                }
                continue;
            }
        }
        let span = hi - lo;
        let stalled = spans.len() >= 3 && span > 0.5 * spans[spans.len() - 3];
        spans.push(span);
        let interpolate = !stalled && m_hi > m_lo && (m_hi - m_lo).is_finite();
        let mut u = if interpolate {
            lo + span * (-m_lo) / (m_hi - m_lo)
        } else {
            0.5 * (lo + hi)
        };
        // Never probe closer than half the width to an end: a root sitting on
        // the end is then closed in one step.
        let step = 0.5 * width;
        if !u.is_finite() {
            u = 0.5 * (lo + hi);
        }
        u = u.clamp(lo + step, hi - step);
        let (is_in, m) = eval(u)?;
        if is_in {
            if last_side == Some(true) {
                let g = 1.0 - m.max(0.0) / m_hi;
                m_lo *= if g > 0.0 { g } else { 0.5 };
            }
            hi = u;
            m_hi = m.max(0.0);
        } else {
            if last_side == Some(false) {
                let g = 1.0 - m.min(0.0) / m_lo;
                m_hi *= if g > 0.0 { g } else { 0.5 };
            }
            lo = u;
            m_lo = m.min(0.0);
        }
        last_side = Some(is_in);
        if (u - prev_estimate).abs() < width {
            straddle = Some(if is_in { u - 0.5 * width } else { u + 0.5 * width });
        }
        prev_estimate = u;
    }
    Ok(Bracket { lo, hi, iterations })
}
