//! End-to-end acceptance checks. Runs without the libtest harness so that one
//! PASS/FAIL line per criterion is always printed.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rho_core::linalg::{c, op_norm, C64};
use rho_core::membership::{
    classify, kernel_margin, membership_single, phi_margin, psi_margin, random_matrix, w_rho, Decision,
    GridSpec, DEFAULT_TOL,
};
use rho_core::parallel::threads_from_env;
use rho_core::repro::{
    radius_property_suite, repro_non_similarity, repro_scalar_boundary, repro_strict_inclusion, repro_von_neumann,
    ExperimentReport,
};
use rho_core::{ComplexMatrix, Result};

const WIDTH: f64 = 1e-6;

type Criterion = (&'static str, fn() -> Result<Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{:.2}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn report_failures(reports: &[ExperimentReport]) -> Vec<String> {
    reports
        .iter()
        .flat_map(|r| r.failed_claims().map(move |c| format!("{}: {}", r.name, c.description)))
        .collect()
}

fn unit_random(dim: usize, rng: &mut ChaCha8Rng) -> Result<ComplexMatrix> {
    let m = random_matrix(dim, rng);
    let n = op_norm(&m)?;
    Ok(m.scale_real(1.0 / n))
}

/// max_θ λ_max((e^{iθ}A + e^{-iθ}A*)/2) on a fine grid with local golden refinement.
fn numerical_radius_oracle(a: &ComplexMatrix) -> f64 {
    let m: DMatrix<C64> = a.as_dmatrix().clone();
    let f = |t: f64| {
        let h = (&m * C64::from_polar(1.0, t) + m.adjoint() * C64::from_polar(1.0, -t)) * c(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let n = 4096;
    let h = TAU / n as f64;
    let (mut best_t, mut best) = (0.0, f64::NEG_INFINITY);
    for k in 0..n {
        let v = f(h * k as f64);
        if v > best {
            best = v;
            best_t = h * k as f64;
        }
    }
    let (mut lo, mut hi) = (best_t - h, best_t + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) > f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best.max(f(0.5 * (lo + hi)))
}

fn criterion_1() -> Result<Outcome> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut ok = true;
    for rho in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let exact = if rho >= 1.0 { 1.0 } else { 2.0 / rho - 1.0 };
        for n in 1..=3 {
            let r = w_rho(&ComplexMatrix::identity(n), rho, WIDTH)?;
            ok &= r.hi - r.lo <= WIDTH && r.lo <= exact && exact <= r.hi;
            worst = worst.max((r.mid() - exact).abs());
        }
    }
    let (fast, t) = within(start, Duration::from_secs(5));
    Ok(outcome(ok && fast, format!("w_rho(I_n) brackets, max |mid - exact| = {worst:.2e}, {t}")))
}

fn criterion_2() -> Result<Outcome> {
    let start = Instant::now();
    let n01 = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0])?;
    let mut worst = 0.0f64;
    for rho in [0.5, 1.0, 2.0, 3.0] {
        let r = w_rho(&n01, rho, WIDTH)?;
        worst = worst.max((r.mid() - 1.0 / rho).abs());
    }
    let (fast, t) = within(start, Duration::from_secs(5));
    Ok(outcome(worst <= 1e-5 && fast, format!("max |w_rho(N) - 1/rho| = {worst:.2e}, {t}")))
}

fn criterion_3() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst1, mut worst2) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let dim = 2 + i % 4;
        let a = random_matrix(dim, &mut rng);
        let w1 = w_rho(&a, 1.0, WIDTH)?;
        let w2 = w_rho(&a, 2.0, WIDTH)?;
        worst1 = worst1.max((w1.mid() - op_norm(&a)?).abs());
        worst2 = worst2.max((w2.mid() - numerical_radius_oracle(&a)).abs());
    }
    Ok(outcome(
        worst1 <= 1e-5 && worst2 <= 1e-5,
        format!("max |w_1 - norm| = {worst1:.2e}, max |w_2 - numerical radius| = {worst2:.2e}"),
    ))
}

fn criterion_4() -> Result<Outcome> {
    let rep = repro_scalar_boundary(0.5, 0.25)?;
    let margin = rep.claims[1].observed["margin"].as_f64().unwrap_or(f64::NAN);
    let fails = report_failures(std::slice::from_ref(&rep));
    Ok(outcome(
        rep.passed,
        format!("a = 1/3: In at 1/2, Out at 1/4 with margin {margin:.12} (analytic -4/9); failures {fails:?}"),
    ))
}

fn criterion_5() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let a = unit_random(2 + i % 4, &mut rng)?;
        for rho in [0.25, 0.5, 1.5] {
            let lhs = rho * w_rho(&a, rho, WIDTH)?.mid();
            let rhs = (2.0 - rho) * w_rho(&a, 2.0 - rho, WIDTH)?.mid();
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(outcome(worst <= 4e-6, format!("max |rho w_rho - (2 - rho) w_(2-rho)| = {worst:.2e}")))
}

fn criterion_6() -> Result<Outcome> {
    let start = Instant::now();
    let default = repro_non_similarity(2.0, None)?;
    let tenth = repro_non_similarity(2.0, Some(0.1))?;
    let reports = [default, tenth];
    let fails = report_failures(&reports);
    let (fast, t) = within(start, Duration::from_secs(30));
    let exponent = reports[1]
        .claims
        .iter()
        .find(|c| c.description.starts_with("norms of"))
        .and_then(|c| c.observed["exponent"].as_f64());
    Ok(outcome(
        fails.is_empty() && fast,
        format!(
            "default eps = {}, exponent at eps = 0.1: {exponent:?} (target {:.6}), {t}; failures {fails:?}",
            reports[0].parameters["eps"],
            2.0 * 1.1f64.ln()
        ),
    ))
}

fn criterion_7() -> Result<Outcome> {
    let start = Instant::now();
    let reports = [repro_strict_inclusion(1.0)?, repro_strict_inclusion(2.0)?];
    let fails = report_failures(&reports);
    let (fast, t) = within(start, Duration::from_secs(60));
    Ok(outcome(
        fails.is_empty() && fast,
        format!("rho = 1, 2: {} claims each, {t}; failures {fails:?}", reports[0].claims.len()),
    ))
}

fn criterion_8() -> Result<Outcome> {
    let reports = [repro_von_neumann(1.0, 200, 0)?, repro_von_neumann(2.0, 200, 0)?];
    let fails = report_failures(&reports);
    let slack: Vec<f64> = reports
        .iter()
        .filter_map(|r| r.claims[0].observed["min_slack"].as_f64())
        .collect();
    Ok(outcome(
        fails.is_empty(),
        format!("200 trials at rho = 1, 2, min slack {slack:?}; failures {fails:?}"),
    ))
}

fn criterion_9() -> Result<Outcome> {
    let start = Instant::now();
    let seeds: Vec<u64> = (0..50).collect();
    let rep = radius_property_suite(&seeds, &[2, 3, 4], &[0.25, 0.5, 1.0, 1.5, 2.0, 3.0], threads_from_env()?)?;
    let fails = report_failures(std::slice::from_ref(&rep));
    let checks: u64 = rep
        .claims
        .iter()
        .filter_map(|c| c.observed["checks"].as_u64())
        .sum();
    let (fast, t) = within(start, Duration::from_secs(600));
    Ok(outcome(
        fails.is_empty() && fast,
        format!("{} properties, {checks} checks, {t}; failures {fails:?}", rep.claims.len()),
    ))
}

fn criterion_10() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let grid = GridSpec::default();
    let (mut agree, mut wildcard, mut total) = (0usize, 0usize, 0usize);
    let mut disagreements = Vec::new();
    for i in 0..30 {
        let scale = 0.6 + 1.0 * (i as f64 / 29.0);
        let a = unit_random(2 + i % 4, &mut rng)?.scale_real(scale);
        for rho in [0.25, 0.5, 1.0, 1.5, 2.0, 3.0] {
            total += 1;
            let k = classify(kernel_margin(&a, rho, &grid)?.margin, DEFAULT_TOL);
            let p = classify(psi_margin(&a, rho, &grid)?.margin, DEFAULT_TOL);
            let f = classify(phi_margin(&a, rho, &grid)?.margin, DEFAULT_TOL);
            if k == p && p == f {
                agree += 1;
            } else if membership_single(&a, rho, DEFAULT_TOL)?.decision == Decision::Borderline {
                wildcard += 1;
            } else {
                disagreements.push(format!("matrix {i}, rho {rho}: kernel {k:?}, psi {p:?}, phi {f:?}"));
            }
        }
    }
    Ok(outcome(
        disagreements.is_empty(),
        format!("{agree}/{total} agree, {wildcard} borderline; disagreements {disagreements:?}"),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("radius of the identity", criterion_1),
        ("nilpotent law", criterion_2),
        ("norm and numerical radius", criterion_3),
        ("scalar class boundary", criterion_4),
        ("symmetry identity", criterion_5),
        ("non-similar pair", criterion_6),
        ("strict inclusion pair", criterion_7),
        ("generalized von Neumann inequality", criterion_8),
        ("radius property suite", criterion_9),
        ("cross-route agreement", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} ({name}): {} [{:.2}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
