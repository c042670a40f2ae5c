//! Operator tuples and multi-indices.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{kron, op_norm, ComplexMatrix};

/// Default cap on |t| for symmetrized multipowers and word enumeration.
pub const MAX_WORD_LENGTH: usize = 16;

/// N square matrices of a common dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorTuple {
    mats: Vec<ComplexMatrix>,
}

impl OperatorTuple {
    pub fn new(mats: Vec<ComplexMatrix>) -> Result<Self> {
        let first = mats
            .first()
            .ok_or_else(|| Error::input("operator tuple needs at least one matrix"))?;
        if !first.is_square() {
            return Err(Error::input("tuple entries must be square"));
        }
        let d = first.rows();
        if let Some(k) = mats.iter().position(|m| m.rows() != d || m.cols() != d) {
            return Err(Error::input(format!(
                "tuple entry {k} is {}x{}, expected {d}x{d}",
                mats[k].rows(),
                mats[k].cols()
            )));
        }
        Ok(OperatorTuple { mats })
    }

    pub fn single(m: ComplexMatrix) -> Result<Self> {
        Self::new(vec![m])
    }

    pub fn n_vars(&self) -> usize {
        self.mats.len()
    }

    pub fn dim(&self) -> usize {
        self.mats[0].rows()
    }

    pub fn mats(&self) -> &[ComplexMatrix] {
        &self.mats
    }

    pub fn get(&self, k: usize) -> &ComplexMatrix {
        &self.mats[k]
    }

    pub fn into_mats(self) -> Vec<ComplexMatrix> {
        self.mats
    }

    pub fn scale_real(&self, s: f64) -> Self {
        OperatorTuple {
            mats: self.mats.iter().map(|m| m.scale_real(s)).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Result<Self> {
        Self::new(self.mats.iter().map(f).collect())
    }

    /// Appends zero matrices up to `n` variables.
    pub fn padded(&self, n: usize) -> Self {
        let mut mats = self.mats.clone();
        while mats.len() < n {
            mats.push(ComplexMatrix::zeros(self.dim(), self.dim()));
        }
        OperatorTuple { mats }
    }

    /// max_k ‖A_k‖
    pub fn max_norm(&self) -> f64 {
        self.mats
            .iter()
            .map(|m| op_norm(m).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    /// Σ_k ‖A_k‖
    pub fn norm_sum(&self) -> f64 {
        self.mats.iter().map(|m| op_norm(m).unwrap_or(f64::INFINITY)).sum()
    }

    /// max_{k<j} ‖A_k A_j − A_j A_k‖
    pub fn commutator_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.n_vars() {
            for j in k + 1..self.n_vars() {
                let comm = &(&self.mats[k] * &self.mats[j]) - &(&self.mats[j] * &self.mats[k]);
                worst = worst.max(op_norm(&comm).unwrap_or(f64::INFINITY));
            }
        }
        worst
    }

    /// A ⊗ C := Σ_k A_k ⊗ C_k
    pub fn tensor_with(&self, other: &OperatorTuple) -> Result<ComplexMatrix> {
        if self.n_vars() != other.n_vars() {
            return Err(Error::input(format!(
                "tensor pairing needs equal arity, got {} and {}",
                self.n_vars(),
                other.n_vars()
            )));
        }
        let mut acc = kron(&self.mats[0], &other.mats[0]);
        for (a, c) in self.mats.iter().zip(other.mats.iter()).skip(1) {
            acc = &acc + &kron(a, c);
        }
        Ok(acc)
    }
}

#[derive(Serialize, Deserialize)]
struct TupleJson {
    n_vars: usize,
    mats: Vec<ComplexMatrix>,
}

impl Serialize for OperatorTuple {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TupleJson {
            n_vars: self.n_vars(),
            mats: self.mats.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OperatorTuple {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = TupleJson::deserialize(deserializer)?;
        if raw.n_vars != raw.mats.len() {
            return Err(serde::de::Error::custom(format!(
                "n_vars = {} but {} matrices given",
                raw.n_vars,
                raw.mats.len()
            )));
        }
        OperatorTuple::new(raw.mats).map_err(serde::de::Error::custom)
    }
}

/// t = (t₁,…,t_N) ∈ Z₊^N
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(components: Vec<usize>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(n_vars: usize) -> Self {
        MultiIndex(vec![0; n_vars])
    }

    pub fn unit(n_vars: usize, k: usize) -> Self {
        let mut t = vec![0; n_vars];
        t[k] = 1;
        MultiIndex(t)
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    pub fn n_vars(&self) -> usize {
        self.0.len()
    }

    /// |t|
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// More than one variable appears.
    pub fn is_mixed(&self) -> bool {
        self.0.iter().filter(|&&x| x > 0).count() > 1
    }

    /// t! = t₁!⋯t_N!
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&x| factorial(x)).product()
    }

    /// |t|!/t!, the number of distinct words with these letter counts.
    pub fn multinomial(&self) -> f64 {
        factorial(self.order()) / self.factorial()
    }

    /// z^t for a scalar point.
    pub fn monomial(&self, z: &[crate::linalg::C64]) -> crate::linalg::C64 {
        self.0
            .iter()
            .zip(z)
            .fold(crate::linalg::ONE, |acc, (&e, &zk)| acc * zk.powu(e as u32))
    }

    /// All multi-indices with |t| = order, in lexicographically descending order.
    pub fn all_of_order(n_vars: usize, order: usize) -> Vec<MultiIndex> {
        fn rec(n_vars: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == n_vars {
                prefix.push(left);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for first in (0..=left).rev() {
                prefix.push(first);
                rec(n_vars, left - first, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if n_vars > 0 {
            rec(n_vars, order, &mut Vec::with_capacity(n_vars), &mut out);
        }
        out
    }

    /// All multi-indices with 1 ≤ |t| ≤ max_order.
    pub fn all_up_to(n_vars: usize, max_order: usize) -> Vec<MultiIndex> {
        (1..=max_order)
            .flat_map(|n| Self::all_of_order(n_vars, n))
            .collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
