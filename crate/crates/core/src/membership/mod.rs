//! Class-membership decisions for C_ρ and C_{ρ,N}, and the operator radii
//! built on top of them.
//!
//! Every decision is a grid search with local refinement, so verdicts carry
//! the signed margin that was found and the grid that produced it.

pub(crate) mod sampling;
pub(crate) mod search;
mod single;
mod tuple;

use serde::{Deserialize, Serialize};

use crate::linalg::C64;

pub use sampling::{
    default_samples, random_matrix, sample_commuting_tuple, torus_points, CommutingTuple, SampleFamily,
};
pub use single::{
    kernel_margin, membership_single, membership_single_with, numerical_radius, numerical_radius_with,
    phi_margin, psi_margin, w_rho, w_rho_with, RouteMargin,
};
pub use tuple::{
    membership_tuple, membership_tuple_with, polydisk_phi_sup, tuple_numerical_radius, tuple_spectral_radius,
    w_rho_tuple, w_rho_tuple_with,
};

/// Default membership tolerance on the margin.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default bisection bracket width.
pub const DEFAULT_WIDTH: f64 = 1e-6;
/// Default number of sampled commuting tuples.
pub const DEFAULT_BUDGET: usize = 64;
/// Norm cap for sampled strict contractions.
pub const DEFAULT_NORM_CAP: f64 = 1.0 - 1e-6;
/// Power used by the tuple spectral radius estimate.
pub const DEFAULT_NU_POWER: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    In,
    Out,
    /// The primary and cross-check routes disagree.
    Borderline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exactness {
    /// Decided by a characterization that is exact up to grid resolution.
    Certified,
    /// Only a necessary condition was tested; `In` may be a false positive.
    NecessaryOnly,
}

/// Which characterization produced a margin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// λ_min k_ρ(z,z) over the closed disk.
    Kernel,
    /// λ_min Re ψ_ρ(z) on a circle just inside the unit circle.
    Psi,
    /// 1 − sup ‖φ_ρ(z)‖.
    Phi,
    /// 1 − sup ‖φ_ρ(z)‖ over the polydisk.
    PhiPolydisk,
    /// Kernel margins of A ⊗ C over sampled commuting tuples.
    SampledTensor,
    /// ν(A) > 1 rules out every class at once.
    Spectral,
}

/// Search resolution for all membership and radius routines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub theta_points: usize,
    pub refine_rounds: usize,
    pub refine_candidates: usize,
    /// r-grid used for ρ > 2, where the kernel can dip in the interior.
    pub interior_r_points: usize,
    pub psi_radius: f64,
    pub polydisk_theta_points: usize,
    /// Radii of the polydisk shells; 1.0 is the distinguished boundary, where
    /// the sup is attained when φ has no pole on the closed polydisk.
    pub polydisk_radii: Vec<f64>,
    /// Random torus points for the φ-sup when N ≥ 3.
    pub torus_samples: usize,
    /// Coarser grid for kernel checks on A ⊗ C.
    pub sample_theta_points: usize,
    pub sample_r_points: usize,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            theta_points: 512,
            refine_rounds: 3,
            refine_candidates: 4,
            interior_r_points: 64,
            psi_radius: 1.0 - 1e-6,
            polydisk_theta_points: 128,
            polydisk_radii: vec![0.9, 0.99, 1.0 - 1e-4, 1.0],
            torus_samples: 4096,
            sample_theta_points: 128,
            sample_r_points: 16,
            seed: 0,
        }
    }
}

impl GridSpec {
    /// Grid used for kernel checks on sampled tensor products.
    pub(crate) fn for_samples(&self) -> GridSpec {
        GridSpec {
            theta_points: self.sample_theta_points,
            interior_r_points: self.sample_r_points,
            ..self.clone()
        }
    }
}

/// A cross-check against an independent characterization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub route: Route,
    pub margin: f64,
    pub decision: Decision,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub route: Route,
    pub description: String,
    /// Point achieving the margin, as [re, im] pairs.
    pub witness: Option<Vec<[f64; 2]>>,
    pub cross_check: Option<CrossCheck>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub decision: Decision,
    pub margin: f64,
    pub exactness: Exactness,
    pub rho: f64,
    pub tol: f64,
    pub certificate: Certificate,
    pub grid_spec: GridSpec,
}

impl MembershipVerdict {
    pub fn is_in(&self) -> bool {
        self.decision == Decision::In
    }

    pub fn is_out(&self) -> bool {
        self.decision == Decision::Out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMethod {
    ZeroShortCircuit,
    /// Bisection over the kernel membership test.
    KernelBisection,
    /// Bisection over the polydisk φ-sup test (N = 2).
    PolydiskBisection,
    /// Bisection over the necessary sampled test (N ≥ 3).
    NecessaryBisection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub lo: f64,
    pub hi: f64,
    pub rho: f64,
    pub width: f64,
    pub method: RadiusMethod,
    pub exactness: Exactness,
    pub iterations: usize,
    /// max over sampled C of w_ρ(A ⊗ C), when samples were used.
    pub sample_lower_bound: Option<f64>,
    pub grid_spec: GridSpec,
    pub wall_time_s: f64,
}

impl RadiusReport {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        self.lo - slack <= x && x <= self.hi + slack
    }
}

/// In iff margin ≥ −tol.
pub fn classify(margin: f64, tol: f64) -> Decision {
    if margin >= -tol {
        Decision::In
    } else {
        Decision::Out
    }
}

pub(crate) fn point_json(z: &[C64]) -> Vec<[f64; 2]> {
    z.iter().map(|w| [w.re, w.im]).collect()
}
