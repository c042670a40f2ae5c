//! Linear pencils and the functions built from them: the kernel k_ρ, the
//! Herglotz-type transform ψ_ρ, the Schur-type transform φ_ρ, symmetrized
//! multipowers and the polynomial calculus on commuting tuples.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{c, kron, ComplexMatrix, C64, ZERO};
use crate::tuple::{MultiIndex, OperatorTuple, MAX_WORD_LENGTH};

/// Resolvents whose smallest singular value falls below this are poles.
pub const POLE_TOL: f64 = 1e-12;

/// Tolerance on ‖C_kC_j − C_jC_k‖ for the commuting calculus.
pub const COMMUTE_TOL: f64 = 1e-10;

fn check_point(a: &OperatorTuple, z: &[C64]) -> Result<()> {
    if z.len() != a.n_vars() {
        return Err(Error::input(format!(
            "point has {} coordinates, tuple has {} variables",
            z.len(),
            a.n_vars()
        )));
    }
    Ok(())
}

pub(crate) fn pencil_raw(a: &OperatorTuple, z: &[C64]) -> DMatrix<C64> {
    let mut acc = a.get(0).as_dmatrix() * z[0];
    for (m, zk) in a.mats().iter().zip(z).skip(1) {
        acc += m.as_dmatrix() * *zk;
    }
    acc
}

/// zA = z₁A₁ + ⋯ + z_N A_N
pub fn eval_pencil(a: &OperatorTuple, z: &[C64]) -> Result<ComplexMatrix> {
    check_point(a, z)?;
    ComplexMatrix::from_dmatrix(pencil_raw(a, z))
}

/// A_{i₁}⋯A_{i_n} for a word of 0-based letters.
pub fn word_product(a: &OperatorTuple, word: &[usize]) -> Result<ComplexMatrix> {
    if let Some(&bad) = word.iter().find(|&&k| k >= a.n_vars()) {
        return Err(Error::input(format!("letter {bad} out of range")));
    }
    let mut acc = ComplexMatrix::identity(a.dim());
    for &k in word {
        acc = &acc * a.get(k);
    }
    Ok(acc)
}

/// Symmetrized multipower A^t = (t!/|t|!) Σ over distinct words with letter counts t.
///
/// The word sum is accumulated by peeling off the first letter,
/// S(t) = Σ_k A_k S(t − e_k), memoized over sub-indices.
pub fn sym_multipower(a: &OperatorTuple, t: &MultiIndex) -> Result<ComplexMatrix> {
    sym_multipower_capped(a, t, MAX_WORD_LENGTH)
}

pub fn sym_multipower_capped(
    a: &OperatorTuple,
    t: &MultiIndex,
    max_len: usize,
) -> Result<ComplexMatrix> {
    if t.n_vars() != a.n_vars() {
        return Err(Error::input(format!(
            "multi-index has {} components, tuple has {} variables",
            t.n_vars(),
            a.n_vars()
        )));
    }
    if t.order() > max_len {
        return Err(Error::capacity(format!(
            "|t| = {} exceeds the maximum word length {max_len}",
            t.order()
        )));
    }
    let mut memo: HashMap<Vec<usize>, DMatrix<C64>> = HashMap::new();
    let sum = word_sum(a, t.components(), &mut memo);
    Ok(ComplexMatrix::wrap(sum / c(t.multinomial(), 0.0)))
}

fn word_sum(
    a: &OperatorTuple,
    t: &[usize],
    memo: &mut HashMap<Vec<usize>, DMatrix<C64>>,
) -> DMatrix<C64> {
    if t.iter().all(|&x| x == 0) {
        return DMatrix::identity(a.dim(), a.dim());
    }
    if let Some(m) = memo.get(t) {
        return m.clone();
    }
    let mut acc = DMatrix::<C64>::zeros(a.dim(), a.dim());
    let mut rest = t.to_vec();
    for k in 0..t.len() {
        if t[k] == 0 {
            continue;
        }
        rest[k] -= 1;
        let tail = word_sum(a, &rest, memo);
        rest[k] += 1;
        acc += a.get(k).as_dmatrix() * tail;
    }
    memo.insert(t.to_vec(), acc.clone());
    acc
}

pub(crate) fn kernel_raw(x: &DMatrix<C64>, y: &DMatrix<C64>, rho: f64) -> DMatrix<C64> {
    let n = x.nrows();
    let y_adj = y.adjoint();
    let mut k = DMatrix::<C64>::identity(n, n) * c(rho, 0.0);
    k -= (x + &y_adj) * c(rho - 1.0, 0.0);
    if rho != 2.0 {
        k += (&y_adj * x) * c(rho - 2.0, 0.0);
    }
    k
}

/// k_ρ(z, w) = ρI − (ρ−1)(zA + (wA)*) + (ρ−2)(wA)*(zA)
pub fn k_rho_kernel(a: &OperatorTuple, rho: f64, z: &[C64], w: &[C64]) -> Result<ComplexMatrix> {
    check_rho(rho)?;
    check_point(a, z)?;
    check_point(a, w)?;
    let x = pencil_raw(a, z);
    let y = pencil_raw(a, w);
    ComplexMatrix::from_dmatrix(kernel_raw(&x, &y, rho))
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::input(format!("rho must be positive and finite, got {rho}")));
    }
    Ok(())
}

fn sigma_min_raw(m: &DMatrix<C64>) -> f64 {
    m.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Inverse of `m` unless its smallest singular value is below [`POLE_TOL`].
pub(crate) fn guarded_inverse(m: DMatrix<C64>, z: &[C64]) -> Result<DMatrix<C64>> {
    let sigma_min = sigma_min_raw(&m);
    let pole = || Error::Pole {
        z: z.to_vec(),
        sigma_min,
    };
    if !(sigma_min > POLE_TOL) {
        return Err(pole());
    }
    m.try_inverse().ok_or_else(pole)
}

pub(crate) fn psi_raw(x: &DMatrix<C64>, rho: f64, z: &[C64]) -> Result<DMatrix<C64>> {
    let n = x.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let resolvent = guarded_inverse(&id - x, z)?;
    Ok(id * c(1.0 - 2.0 / rho, 0.0) + resolvent * c(2.0 / rho, 0.0))
}

/// ψ_ρ(z) = (1 − 2/ρ)I + (2/ρ)(I − zA)⁻¹
pub fn psi_rho(a: &OperatorTuple, rho: f64, z: &[C64]) -> Result<ComplexMatrix> {
    check_rho(rho)?;
    check_point(a, z)?;
    ComplexMatrix::from_dmatrix(psi_raw(&pencil_raw(a, z), rho, z)?)
}

pub(crate) fn phi_raw(x: &DMatrix<C64>, rho: f64, z: &[C64]) -> Result<DMatrix<C64>> {
    let n = x.nrows();
    let r = x * c(rho - 1.0, 0.0) - DMatrix::<C64>::identity(n, n) * c(rho, 0.0);
    Ok(x * guarded_inverse(r, z)?)
}

/// φ_ρ(z) = zA((ρ−1)zA − ρI)⁻¹
pub fn phi_rho(a: &OperatorTuple, rho: f64, z: &[C64]) -> Result<ComplexMatrix> {
    check_rho(rho)?;
    check_point(a, z)?;
    ComplexMatrix::from_dmatrix(phi_raw(&pencil_raw(a, z), rho, z)?)
}

/// p(M) for a scalar polynomial with coefficients in ascending degree (Horner).
pub fn poly_of_matrix(coeffs: &[C64], m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    let mut acc = DMatrix::<C64>::zeros(n, n);
    for &coef in coeffs.iter().rev() {
        acc = &acc * m.as_dmatrix();
        for i in 0..n {
            acc[(i, i)] += coef;
        }
    }
    ComplexMatrix::wrap(acc)
}

/// p(z) for a scalar polynomial with coefficients in ascending degree.
pub fn poly_eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(ZERO, |acc, &coef| acc * z + coef)
}

/// f(z) = Σ_t f̂_t z^t with matrix coefficients and finite support.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPolynomial {
    n_vars: usize,
    dim: usize,
    terms: BTreeMap<MultiIndex, ComplexMatrix>,
}

impl MatrixPolynomial {
    pub fn new(n_vars: usize, terms: Vec<(MultiIndex, ComplexMatrix)>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(_, m)| m.rows())
            .ok_or_else(|| Error::input("polynomial needs at least one term"))?;
        let mut map = BTreeMap::new();
        for (t, coef) in terms {
            if t.n_vars() != n_vars {
                return Err(Error::input(format!("index {t} does not have {n_vars} components")));
            }
            if coef.rows() != dim || coef.cols() != dim {
                return Err(Error::input("polynomial coefficients must share one square shape"));
            }
            if t.order() > MAX_WORD_LENGTH {
                return Err(Error::capacity(format!("degree of {t} exceeds {MAX_WORD_LENGTH}")));
            }
            let slot = map
                .entry(t)
                .or_insert_with(|| ComplexMatrix::zeros(dim, dim));
            *slot = &*slot + &coef;
        }
        Ok(MatrixPolynomial {
            n_vars,
            dim,
            terms: map,
        })
    }

    /// Scalar one-variable polynomial, coefficients ascending.
    pub fn scalar_univariate(coeffs: &[C64]) -> Result<Self> {
        Self::new(
            1,
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &a)| (MultiIndex::new(vec![k]), ComplexMatrix::scalar(a)))
                .collect(),
        )
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &ComplexMatrix)> {
        self.terms.iter()
    }

    pub fn has_mixed_terms(&self) -> bool {
        self.terms.keys().any(MultiIndex::is_mixed)
    }
}

/// C^t = C₁^{t₁}⋯C_N^{t_N}
fn plain_multipower(c_tuple: &OperatorTuple, t: &MultiIndex) -> ComplexMatrix {
    let mut acc = ComplexMatrix::identity(c_tuple.dim());
    for (m, &e) in c_tuple.mats().iter().zip(t.components()) {
        if e > 0 {
            acc = &acc * &m.pow(e as u32);
        }
    }
    acc
}

/// f(C) = Σ_t f̂_t ⊗ C^t on a commuting tuple.
pub fn eval_on_tuple(f: &MatrixPolynomial, c_tuple: &OperatorTuple) -> Result<ComplexMatrix> {
    if f.n_vars() != c_tuple.n_vars() {
        return Err(Error::input(format!(
            "polynomial in {} variables evaluated on a {}-tuple",
            f.n_vars(),
            c_tuple.n_vars()
        )));
    }
    if f.has_mixed_terms() {
        let residual = c_tuple.commutator_residual();
        if residual > COMMUTE_TOL {
            return Err(Error::input(format!(
                "tuple does not commute (residual {residual:e}); mixed monomials are undefined"
            )));
        }
    }
    let n = f.dim() * c_tuple.dim();
    let mut acc = ComplexMatrix::zeros(n, n);
    for (t, coef) in f.terms() {
        acc = &acc + &kron(coef, &plain_multipower(c_tuple, t));
    }
    Ok(acc)
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    index: MultiIndex,
    coef: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    n_vars: usize,
    terms: Vec<TermJson>,
}

impl Serialize for MatrixPolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson {
            n_vars: self.n_vars,
            terms: self
                .terms
                .iter()
                .map(|(t, m)| TermJson {
                    index: t.clone(),
                    coef: m.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MatrixPolynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = PolyJson::deserialize(deserializer)?;
        MatrixPolynomial::new(
            raw.n_vars,
            raw.terms.into_iter().map(|t| (t.index, t.coef)).collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cis, ONE};

    fn real(rows: usize, entries: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real(rows, rows, entries).unwrap()
    }

    fn pair() -> OperatorTuple {
        OperatorTuple::new(vec![
            real(2, &[1.0, 2.0, -1.0, 0.5]),
            real(2, &[0.0, 1.0, 3.0, -2.0]),
        ])
        .unwrap()
    }

    #[test]
    fn pencil_basics() {
        let a = pair();
        let z0 = eval_pencil(&a, &[ZERO, ZERO]).unwrap();
        assert_eq!(z0, ComplexMatrix::zeros(2, 2));
        let single = OperatorTuple::single(real(2, &[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(eval_pencil(&single, &[ONE]).unwrap(), *single.get(0));
        assert!(eval_pencil(&a, &[ONE]).is_err());
    }

    #[test]
    fn multipower_of_order_one_two() {
        let a = pair();
        let (a1, a2) = (a.get(0), a.get(1));
        let t = MultiIndex::new(vec![1, 2]);
        let expected = (&(&(a1 * &(a2 * a2)) + &(&(a2 * a1) * a2)) + &(&(a2 * a2) * a1))
            .scale_real(1.0 / 3.0);
        assert!(sym_multipower(&a, &t).unwrap().max_abs_diff(&expected) < 1e-12);
        assert_eq!(sym_multipower(&a, &MultiIndex::unit(2, 1)).unwrap(), *a2);
        assert_eq!(
            sym_multipower(&a, &MultiIndex::zero(2)).unwrap(),
            ComplexMatrix::identity(2)
        );
    }

    #[test]
    fn multipower_on_diagonal_tuple() {
        let d1 = ComplexMatrix::from_diagonal(&[c(0.5, 0.1), c(-0.3, 0.0)]);
        let d2 = ComplexMatrix::from_diagonal(&[c(0.2, 0.0), c(0.7, -0.4)]);
        let a = OperatorTuple::new(vec![d1.clone(), d2.clone()]).unwrap();
        let got = sym_multipower(&a, &MultiIndex::new(vec![2, 1])).unwrap();
        let expected = ComplexMatrix::from_diagonal(&[
            d1.get(0, 0) * d1.get(0, 0) * d2.get(0, 0),
            d1.get(1, 1) * d1.get(1, 1) * d2.get(1, 1),
        ]);
        assert!(got.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn multipower_capacity() {
        let a = pair();
        let r = sym_multipower(&a, &MultiIndex::new(vec![9, 8]));
        assert!(matches!(r, Err(Error::Capacity(_))));
    }

    #[test]
    fn kernel_special_cases() {
        let a = pair();
        let rho = 1.7;
        let k0 = k_rho_kernel(&a, rho, &[ZERO, ZERO], &[ZERO, ZERO]).unwrap();
        assert!(k0.max_abs_diff(&ComplexMatrix::identity(2).scale_real(rho)) < 1e-15);

        let z = [c(0.3, 0.1), c(-0.2, 0.4)];
        let w = [c(0.1, 0.0), c(0.5, -0.3)];
        let k2 = k_rho_kernel(&a, 2.0, &z, &w).unwrap();
        let za = eval_pencil(&a, &z).unwrap();
        let wa = eval_pencil(&a, &w).unwrap();
        let expected = &ComplexMatrix::identity(2).scale_real(2.0) - &(&za + &wa.adjoint());
        assert!(k2.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn kernel_vanishes_on_unitary_pencil() {
        // A_k = U P_k gives a unitary ζA on the torus.
        let s = 0.5f64.sqrt();
        let u = real(2, &[s, -s, s, s]);
        let p1 = ComplexMatrix::from_diagonal(&[ONE, ZERO]);
        let p2 = ComplexMatrix::from_diagonal(&[ZERO, ONE]);
        let a = OperatorTuple::new(vec![&u * &p1, &u * &p2]).unwrap();
        let z = [cis(0.7), cis(-2.1)];
        let k = k_rho_kernel(&a, 1.0, &z, &z).unwrap();
        assert!(k.max_abs() < 1e-14);
    }

    #[test]
    fn psi_and_phi_at_origin() {
        let a = pair();
        let psi0 = psi_rho(&a, 0.7, &[ZERO, ZERO]).unwrap();
        assert_eq!(psi0, ComplexMatrix::identity(2));
        let phi0 = phi_rho(&a, 0.7, &[ZERO, ZERO]).unwrap();
        assert_eq!(phi0, ComplexMatrix::zeros(2, 2));
    }

    #[test]
    fn phi_at_rho_one_is_negated_pencil() {
        let a = pair();
        let z = [c(0.2, 0.1), c(-0.1, 0.05)];
        let phi = phi_rho(&a, 1.0, &z).unwrap();
        let za = eval_pencil(&a, &z).unwrap();
        assert!(phi.max_abs_diff(&-&za) < 1e-14);
    }

    #[test]
    fn psi_scalar_formula() {
        let a = OperatorTuple::single(ComplexMatrix::scalar(c(0.4, 0.3))).unwrap();
        let z = c(0.5, -0.5);
        for rho in [0.5, 2.0, 3.0] {
            let got = psi_rho(&a, rho, &[z]).unwrap().get(0, 0);
            let expected = c(1.0 - 2.0 / rho, 0.0) + c(2.0 / rho, 0.0) / (ONE - z * c(0.4, 0.3));
            assert!((got - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn psi_reports_poles() {
        let a = OperatorTuple::single(ComplexMatrix::identity(2)).unwrap();
        match psi_rho(&a, 1.0, &[ONE]) {
            Err(Error::Pole { z, .. }) => assert_eq!(z, vec![ONE]),
            other => panic!("expected a pole, got {other:?}"),
        }
        // (ρ−1)zA − ρI = 0 at zA = 2I for ρ = 2
        let b = OperatorTuple::single(ComplexMatrix::identity(1).scale_real(2.0)).unwrap();
        assert!(matches!(phi_rho(&b, 2.0, &[ONE]), Err(Error::Pole { .. })));
    }

    #[test]
    fn tuple_calculus_examples() {
        let c1 = real(2, &[0.1, 0.2, 0.0, 0.1]);
        let c2 = real(2, &[0.3, -0.5, 0.0, 0.3]);
        let ctuple = OperatorTuple::new(vec![c1.clone(), c2]).unwrap();
        let k = real(3, &[1.0, 2.0, 0.0, 0.0, 1.0, 0.0, 4.0, 0.0, 1.0]);
        let constant = MatrixPolynomial::new(2, vec![(MultiIndex::zero(2), k.clone())]).unwrap();
        assert_eq!(
            eval_on_tuple(&constant, &ctuple).unwrap(),
            kron(&k, &ComplexMatrix::identity(2))
        );
        let linear = MatrixPolynomial::new(
            2,
            vec![(MultiIndex::unit(2, 0), ComplexMatrix::identity(1))],
        )
        .unwrap();
        assert_eq!(eval_on_tuple(&linear, &ctuple).unwrap(), c1);
    }

    #[test]
    fn tuple_calculus_rejects_non_commuting_mixed_terms() {
        let a = pair();
        let mixed = MatrixPolynomial::new(
            2,
            vec![(MultiIndex::new(vec![1, 1]), ComplexMatrix::identity(1))],
        )
        .unwrap();
        assert!(matches!(eval_on_tuple(&mixed, &a), Err(Error::Input(_))));
        let pure = MatrixPolynomial::new(
            2,
            vec![(MultiIndex::new(vec![2, 0]), ComplexMatrix::identity(1))],
        )
        .unwrap();
        assert!(eval_on_tuple(&pure, &a).is_ok());
    }

    #[test]
    fn scalar_polynomial_matches_horner() {
        let coeffs = [c(1.0, 0.0), c(-0.5, 0.2), c(0.0, 0.3), c(0.25, 0.0)];
        let z = c(0.3, -0.7);
        let p = MatrixPolynomial::scalar_univariate(&coeffs).unwrap();
        let point = OperatorTuple::single(ComplexMatrix::scalar(z)).unwrap();
        let got = eval_on_tuple(&p, &point).unwrap().get(0, 0);
        // independent evaluation by explicit powers
        let direct: C64 = coeffs.iter().enumerate().map(|(k, a)| a * z.powu(k as u32)).sum();
        assert!((got - direct).norm() < 1e-14);
        assert!((poly_eval(&coeffs, z) - direct).norm() < 1e-14);
    }

    #[test]
    fn polynomial_json() {
        let s = r#"{"n_vars":2,"terms":[{"index":[1,0],"coef":{"rows":1,"cols":1,"data":[[2,0]]}}]}"#;
        let p: MatrixPolynomial = serde_json::from_str(s).unwrap();
        assert_eq!(p.n_vars(), 2);
        let again: MatrixPolynomial =
            serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(again, p);
    }
}
