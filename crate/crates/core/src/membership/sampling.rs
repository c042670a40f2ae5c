//! Commuting tuples of strict contractions, drawn from two families.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cis, ComplexMatrix, C64};
use crate::tuple::OperatorTuple;

/// Commutators above this are rejected.
pub const COMMUTATOR_LIMIT: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleFamily {
    /// C_k = U D_k U* with one random unitary U.
    Normal,
    /// C_k = p_k(J) for a random strictly upper triangular J.
    Jordan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutingTuple {
    pub base: OperatorTuple,
    pub commutator_residual: f64,
    pub max_norm: f64,
    pub family: SampleFamily,
    pub seed: u64,
}

impl CommutingTuple {
    /// Validates commutation and strict contractivity.
    pub fn new(base: OperatorTuple, family: SampleFamily, seed: u64) -> Result<Self> {
        let commutator_residual = base.commutator_residual();
        let max_norm = base.max_norm();
        if !(commutator_residual < COMMUTATOR_LIMIT) {
            return Err(Error::input(format!(
                "tuple does not commute: residual {commutator_residual:e}"
            )));
        }
        if !(max_norm < 1.0) {
            return Err(Error::input(format!("tuple is not strictly contractive: max norm {max_norm}")));
        }
        Ok(CommutingTuple {
            base,
            commutator_residual,
            max_norm,
            family,
            seed,
        })
    }

    /// The scalar point ζ as a 1×1 tuple.
    pub fn scalar_point(z: &[C64]) -> Result<OperatorTuple> {
        OperatorTuple::new(z.iter().map(|&w| ComplexMatrix::scalar(w)).collect())
    }
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Point in the unit disk with modulus biased toward the circle.
fn disk_point(rng: &mut impl Rng) -> C64 {
    let r: f64 = rng.random::<f64>().powf(0.25);
    cis(TAU * rng.random::<f64>()) * r
}

/// Haar-ish unitary from the QR factor of a complex Gaussian matrix.
pub(crate) fn random_unitary(dim: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let g = DMatrix::<C64>::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // Fix the phases so the distribution does not depend on the QR convention.
    let phases = DMatrix::<C64>::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| {
        let d = r[(i, i)];
        if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        }
    }));
    q * phases
}

/// A complex Gaussian matrix.
pub fn random_matrix(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::wrap(DMatrix::from_fn(dim, dim, |_, _| gaussian(rng)))
}

pub fn sample_commuting_tuple(
    dim: usize,
    n_vars: usize,
    seed: u64,
    norm_cap: f64,
    family: SampleFamily,
) -> Result<CommutingTuple> {
    if dim == 0 || n_vars == 0 {
        return Err(Error::input("dimension and arity must be positive"));
    }
    if !(norm_cap > 0.0 && norm_cap < 1.0) {
        return Err(Error::input(format!("norm_cap must lie in (0, 1), got {norm_cap}")));
    }
    let mut rng = rng_for(seed, family as u64);
    let mats: Vec<DMatrix<C64>> = match family {
        SampleFamily::Normal => {
            let u = random_unitary(dim, &mut rng);
            (0..n_vars)
                .map(|_| {
                    let d = nalgebra::DVector::from_fn(dim, |_, _| disk_point(&mut rng));
                    &u * DMatrix::from_diagonal(&d) * u.adjoint()
                })
                .collect()
        }
        SampleFamily::Jordan => {
            let j = DMatrix::<C64>::from_fn(dim, dim, |r, col| if col > r { gaussian(&mut rng) } else { c(0.0, 0.0) });
            let mut powers = vec![DMatrix::<C64>::identity(dim, dim)];
            for p in 1..dim {
                powers.push(&powers[p - 1] * &j);
            }
            (0..n_vars)
                .map(|_| {
                    let mut m = DMatrix::<C64>::zeros(dim, dim);
                    for p in &powers {
                        m += p * disk_point(&mut rng);
                    }
                    m
                })
                .collect()
        }
    };
    let tuple = OperatorTuple::new(mats.into_iter().map(ComplexMatrix::wrap).collect())?;
    let top = tuple.max_norm();
    let tuple = if top > 0.0 { tuple.scale_real(norm_cap / top) } else { tuple };
    CommutingTuple::new(tuple, family, seed)
}

/// The standard sample set: alternating families, dimensions cycling 1..=4.
pub fn default_samples(n_vars: usize, budget: usize, seed: u64, norm_cap: f64) -> Result<Vec<CommutingTuple>> {
    (0..budget)
        .map(|i| {
            let family = if i % 2 == 0 { SampleFamily::Normal } else { SampleFamily::Jordan };
            let dim = 1 + (i / 2) % 4;
            let s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
            sample_commuting_tuple(dim, n_vars, s, norm_cap, family)
        })
        .collect()
}

/// Points of the torus T^N with ζ₁ = 1 (a common phase does not change any radius).
/// N = 2 uses an even grid on ζ₂; larger N draws the remaining phases at random.
pub fn torus_points(n_vars: usize, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let count = count.max(1);
    match n_vars {
        0 => vec![],
        1 => vec![vec![c(1.0, 0.0)]],
        2 => (0..count)
            .map(|k| vec![c(1.0, 0.0), cis(TAU * k as f64 / count as f64)])
            .collect(),
        _ => {
            let mut rng = rng_for(seed, 7);
            let mut pts = vec![vec![c(1.0, 0.0); n_vars]];
            while pts.len() < count {
                let mut z = vec![c(1.0, 0.0)];
                z.extend((1..n_vars).map(|_| cis(TAU * rng.random::<f64>())));
                pts.push(z);
            }
            pts
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_sample_lies_in_disk() {
        for family in [SampleFamily::Normal, SampleFamily::Jordan] {
            let t = sample_commuting_tuple(1, 1, 3, 0.9, family).unwrap();
            assert_eq!(t.base.dim(), 1);
            assert!(t.base.get(0).get(0, 0).norm() < 1.0);
        }
    }

    #[test]
    fn families_commute_to_roundoff() {
        for seed in 0..10 {
            for family in [SampleFamily::Normal, SampleFamily::Jordan] {
                let t = sample_commuting_tuple(4, 3, seed, 1.0 - 1e-6, family).unwrap();
                assert!(t.commutator_residual < 1e-13, "{family:?} {}", t.commutator_residual);
                assert!(t.max_norm <= 1.0 - 1e-6 + 1e-12);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = default_samples(2, 6, 11, 0.99).unwrap();
        let b = default_samples(2, 6, 11, 0.99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, default_samples(2, 6, 12, 0.99).unwrap());
    }
}
