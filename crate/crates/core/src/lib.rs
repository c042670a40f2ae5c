//! Class tests, operator radii and dilation checks for ρ-contractions and
//! their multivariable analogues.

// `!(x < y)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod dilation;
pub mod error;
pub mod linalg;
pub mod membership;
pub mod parallel;
pub mod pencil;
pub mod repro;
pub mod tuple;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Embedding, C64};
pub use tuple::{MultiIndex, OperatorTuple};
pub use membership::{Decision, Exactness, GridSpec, MembershipVerdict, RadiusReport};
