//! ρ-dilations: compression identities, torus unitarity, row-isometry
//! conditions, the truncated shift and tree constructions, similarity and
//! power-growth checks.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, lambda_min_raw, op_norm, ComplexMatrix, Embedding, C64};
use crate::pencil::sym_multipower;
use crate::tuple::{MultiIndex, OperatorTuple, MAX_WORD_LENGTH};

/// Residual below which a compression identity counts as verified.
pub const DILATION_TOL: f64 = 1e-9;
/// Residual below which torus unitarity and the isometry conditions pass.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Longest word checked by the uniform verifier.
pub const MAX_UNIFORM_WORD: usize = 6;
pub const MIN_SHIFT_SIZE: usize = 8;
pub const MIN_TREE_DEPTH: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DilationMode {
    /// A^t = ρ P Ã^t|𝒳 for symmetrized multipowers.
    Symmetrized,
    /// A_{i₁}⋯A_{i_n} = ρ P Ã_{i₁}⋯Ã_{i_n}|𝒳 for every word.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilationWitness {
    pub small: OperatorTuple,
    pub big: OperatorTuple,
    pub embedding: Embedding,
    pub rho: f64,
    pub mode: DilationMode,
    /// Longest n such that every identity of length ≤ n holds.
    pub verified_word_length: usize,
    pub checked_word_length: usize,
    pub max_residual: f64,
    /// Word (0-based letters) or multi-index with the largest residual.
    pub worst: Vec<usize>,
    pub passed: bool,
}

fn check_dilation_shapes(small: &OperatorTuple, big: &OperatorTuple, e: &Embedding, rho: f64) -> Result<()> {
    if small.n_vars() != big.n_vars() {
        return Err(Error::input(format!(
            "small tuple has {} variables, big tuple has {}",
            small.n_vars(),
            big.n_vars()
        )));
    }
    if e.dim() != small.dim() || e.ambient_dim() != big.dim() {
        return Err(Error::input(format!(
            "embedding maps C^{} into C^{}, but the tuples act on C^{} and C^{}",
            e.dim(),
            e.ambient_dim(),
            small.dim(),
            big.dim()
        )));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::input(format!("rho must be positive and finite, got {rho}")));
    }
    Ok(())
}

/// S(t)·E where S(t) is the sum of all words with letter counts t.
fn word_sum_applied(
    big: &OperatorTuple,
    t: &[usize],
    base: &DMatrix<C64>,
    memo: &mut HashMap<Vec<usize>, DMatrix<C64>>,
) -> DMatrix<C64> {
    if t.iter().all(|&x| x == 0) {
        return base.clone();
    }
    if let Some(m) = memo.get(t) {
        return m.clone();
    }
    let mut acc = DMatrix::<C64>::zeros(base.nrows(), base.ncols());
    let mut rest = t.to_vec();
    for k in 0..t.len() {
        if t[k] == 0 {
            continue;
        }
        rest[k] -= 1;
        acc += big.get(k).as_dmatrix() * word_sum_applied(big, &rest, base, memo);
        rest[k] += 1;
    }
    memo.insert(t.to_vec(), acc.clone());
    acc
}

struct Tally {
    max_residual: f64,
    worst: Vec<usize>,
    first_failure: Option<usize>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            max_residual: 0.0,
            worst: Vec::new(),
            first_failure: None,
        }
    }

    fn record(&mut self, len: usize, residual: f64, label: &[usize]) {
        if residual > self.max_residual || self.worst.is_empty() {
            self.max_residual = self.max_residual.max(residual);
            self.worst = label.to_vec();
        }
        if !(residual < DILATION_TOL) {
            self.first_failure = Some(self.first_failure.map_or(len, |f| f.min(len)));
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn witness(
    small: &OperatorTuple,
    big: &OperatorTuple,
    e: &Embedding,
    rho: f64,
    mode: DilationMode,
    checked: usize,
    tally: Tally,
) -> DilationWitness {
    let verified = tally.first_failure.map_or(checked, |f| f - 1);
    DilationWitness {
        small: small.clone(),
        big: big.clone(),
        embedding: e.clone(),
        rho,
        mode,
        verified_word_length: verified,
        checked_word_length: checked,
        max_residual: tally.max_residual,
        worst: tally.worst,
        passed: tally.first_failure.is_none(),
    }
}

/// Checks A^t = ρ P_𝒳 Ã^t|𝒳 for every multi-index with 1 ≤ |t| ≤ t_max.
pub fn verify_rho_dilation(
    small: &OperatorTuple,
    big: &OperatorTuple,
    e: &Embedding,
    rho: f64,
    t_max: usize,
) -> Result<DilationWitness> {
    check_dilation_shapes(small, big, e, rho)?;
    if t_max == 0 {
        return Err(Error::input("t_max must be at least 1"));
    }
    if t_max > MAX_WORD_LENGTH {
        return Err(Error::capacity(format!(
            "t_max = {t_max} exceeds the maximum word length {MAX_WORD_LENGTH}"
        )));
    }
    let basis = e.basis().as_dmatrix();
    let basis_adj = basis.adjoint();
    let mut memo = HashMap::new();
    let mut tally = Tally::new();
    for t in MultiIndex::all_up_to(small.n_vars(), t_max) {
        let lhs = sym_multipower(small, &t)?;
        let applied = word_sum_applied(big, t.components(), basis, &mut memo);
        let rhs = &basis_adj * applied * c(rho / t.multinomial(), 0.0);
        let residual = op_norm(&(&lhs - &ComplexMatrix::wrap(rhs)))?;
        tally.record(t.order(), residual, t.components());
    }
    Ok(witness(small, big, e, rho, DilationMode::Symmetrized, t_max, tally))
}

/// Checks every word of length 1..=n_max, so N^n identities per length.
pub fn verify_uniform_rho_dilation(
    small: &OperatorTuple,
    big: &OperatorTuple,
    e: &Embedding,
    rho: f64,
    n_max: usize,
) -> Result<DilationWitness> {
    check_dilation_shapes(small, big, e, rho)?;
    if n_max == 0 {
        return Err(Error::input("n_max must be at least 1"));
    }
    if n_max > MAX_UNIFORM_WORD {
        return Err(Error::capacity(format!(
            "n_max = {n_max} exceeds {MAX_UNIFORM_WORD}: {} words",
            (small.n_vars() as f64).powi(n_max as i32)
        )));
    }
    let basis = e.basis().as_dmatrix();
    let basis_adj = basis.adjoint();
    let mut tally = Tally::new();
    // Words grow by prepending a letter: W' = X_k W, for both sides at once.
    let mut layer: Vec<(Vec<usize>, DMatrix<C64>, DMatrix<C64>)> =
        vec![(Vec::new(), DMatrix::identity(small.dim(), small.dim()), basis.clone())];
    for len in 1..=n_max {
        let mut next = Vec::with_capacity(layer.len() * small.n_vars());
        for (word, lhs, applied) in &layer {
            for k in 0..small.n_vars() {
                let mut w = Vec::with_capacity(len);
                w.push(k);
                w.extend_from_slice(word);
                let l = small.get(k).as_dmatrix() * lhs;
                let a = big.get(k).as_dmatrix() * applied;
                let rhs = &basis_adj * &a * c(rho, 0.0);
                let residual = op_norm(&ComplexMatrix::wrap(&l - rhs))?;
                tally.record(len, residual, &w);
                next.push((w, l, a));
            }
        }
        layer = next;
    }
    Ok(witness(small, big, e, rho, DilationMode::Uniform, n_max, tally))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusUnitarityCertificate {
    /// ‖Σ Ã_k Ã_k* − I‖
    pub residual_sum_right: f64,
    /// ‖Σ Ã_k* Ã_k − I‖
    pub residual_sum_left: f64,
    /// max_{k≠j} ‖Ã_k* Ã_j‖
    pub cross_residual_left: f64,
    /// max_{k≠j} ‖Ã_k Ã_j*‖
    pub cross_residual_right: f64,
    pub passed: bool,
}

/// ζÃ is unitary for every ζ ∈ T^N iff the Fourier coefficients of
/// (ζÃ)*(ζÃ) and (ζÃ)(ζÃ)* in ζ are those of I.
pub fn torus_unitarity(a: &OperatorTuple) -> Result<TorusUnitarityCertificate> {
    let n = a.dim();
    let id = ComplexMatrix::identity(n);
    let mut left = ComplexMatrix::zeros(n, n);
    let mut right = ComplexMatrix::zeros(n, n);
    let mut cross_left = 0.0f64;
    let mut cross_right = 0.0f64;
    for k in 0..a.n_vars() {
        let ak = a.get(k);
        left = &left + &(&ak.adjoint() * ak);
        right = &right + &(ak * &ak.adjoint());
        for j in 0..a.n_vars() {
            if j != k {
                let aj = a.get(j);
                cross_left = cross_left.max(op_norm(&(&ak.adjoint() * aj))?);
                cross_right = cross_right.max(op_norm(&(ak * &aj.adjoint()))?);
            }
        }
    }
    let residual_sum_left = op_norm(&(&left - &id))?;
    let residual_sum_right = op_norm(&(&right - &id))?;
    let passed = [residual_sum_left, residual_sum_right, cross_left, cross_right]
        .iter()
        .all(|&r| r < UNITARITY_TOL);
    Ok(TorusUnitarityCertificate {
        residual_sum_right,
        residual_sum_left,
        cross_residual_left: cross_left,
        cross_residual_right: cross_right,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopescuCertificate {
    /// max_k ‖V_k*V_k − I‖ on the domain
    pub isometry_residual: f64,
    /// max_{k≠j} ‖V_k*V_j‖ on the domain
    pub orthogonality_residual: f64,
    /// λ_min(I − Σ V_k V_k*) on the whole space
    pub row_contraction_min_eig: f64,
    pub isometries: bool,
    pub orthogonal_ranges: bool,
    pub row_contraction: bool,
    /// (1)&(2) and (1)&(2') agree.
    pub consistent: bool,
    pub domain_dim: usize,
}

/// Row-isometry conditions: (1) V_k*V_k = I, (2) V_k*V_j = 0 for k ≠ j,
/// (2') Σ V_kV_k* ⪯ I. (1) and (2) are tested on `domain` when given.
pub fn popescu_conditions(v: &OperatorTuple, domain: Option<&Embedding>) -> Result<PopescuCertificate> {
    let n = v.dim();
    let full = Embedding::full(n);
    let d = domain.unwrap_or(&full);
    if d.ambient_dim() != n {
        return Err(Error::input(format!(
            "domain lives in C^{}, operators act on C^{n}",
            d.ambient_dim()
        )));
    }
    let basis = d.basis().as_dmatrix();
    let images: Vec<DMatrix<C64>> = v.mats().iter().map(|m| m.as_dmatrix() * basis).collect();
    let id = DMatrix::<C64>::identity(d.dim(), d.dim());
    let mut iso = 0.0f64;
    let mut orth = 0.0f64;
    for (k, vk) in images.iter().enumerate() {
        iso = iso.max(op_norm(&ComplexMatrix::wrap(vk.adjoint() * vk - &id))?);
        for (j, vj) in images.iter().enumerate() {
            if j != k {
                orth = orth.max(op_norm(&ComplexMatrix::wrap(vk.adjoint() * vj))?);
            }
        }
    }
    let mut gram = DMatrix::<C64>::identity(n, n);
    for m in v.mats() {
        gram -= m.as_dmatrix() * m.as_dmatrix().adjoint();
    }
    let row_min = lambda_min_raw(&gram);
    let isometries = iso < UNITARITY_TOL;
    let orthogonal_ranges = orth < UNITARITY_TOL;
    let row_contraction = row_min >= -UNITARITY_TOL;
    Ok(PopescuCertificate {
        isometry_residual: iso,
        orthogonality_residual: orth,
        row_contraction_min_eig: row_min,
        isometries,
        orthogonal_ranges,
        row_contraction,
        consistent: (isometries && orthogonal_ranges) == (isometries && row_contraction),
        domain_dim: d.dim(),
    })
}

/// B = [[0, ρ], [0, 0]]
pub fn scaled_nilpotent(rho: f64) -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, rho, 0.0, 0.0]).expect("2x2")
}

/// The cyclic shift U e_k = e_{k+1 mod M}.
pub fn cyclic_shift(m: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(m, m);
    for k in 0..m {
        u.set((k + 1) % m, k, c(1.0, 0.0));
    }
    u
}

/// Unitary ρ-dilation of B = [[0,ρ],[0,0]]: the cyclic shift on C^M with 𝒳
/// spanned by (e₁, e₀). Bⁿ = ρ P Uⁿ|𝒳 holds for 1 ≤ n ≤ M − 2 and fails at
/// n = M − 1, where the shift wraps e₁ back to e₀.
pub fn build_shift_unitary_rho_dilation(rho: f64, m: usize) -> Result<(OperatorTuple, Embedding)> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::input(format!("rho must be positive and finite, got {rho}")));
    }
    if m < MIN_SHIFT_SIZE {
        return Err(Error::capacity(format!("shift size M = {m} is below {MIN_SHIFT_SIZE}")));
    }
    Ok((OperatorTuple::single(cyclic_shift(m))?, Embedding::coordinates(m, &[1, 0])?))
}

/// A₁ = [[B,0],[0,0]], A₂ = [[0,0],[B,0]] with B = [[0,ρ],[0,0]].
/// ‖ζA‖ = √2ρ on the whole torus, so ζA ∉ C_ρ, yet the pair has a uniform
/// isometric ρ-dilation.
pub fn shift_block_pair(rho: f64) -> Result<OperatorTuple> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::parameter(format!("rho must be positive, got {rho}")));
    }
    let mut a1 = ComplexMatrix::zeros(4, 4);
    a1.set(0, 1, c(rho, 0.0));
    let mut a2 = ComplexMatrix::zeros(4, 4);
    a2.set(2, 1, c(rho, 0.0));
    OperatorTuple::new(vec![a1, a2])
}

/// The 3×3 pair with entries ±(1+ε)/√2 for which ζA is nilpotent of degree 3
/// while (A₁+A₂)(A₁−A₂) has spectral radius (1+ε)².
pub fn similarity_obstruction_pair(eps: f64) -> Result<OperatorTuple> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::parameter(format!("eps must be non-negative, got {eps}")));
    }
    let a = (1.0 + eps) / std::f64::consts::SQRT_2;
    let a1 = ComplexMatrix::from_real(3, 3, &[0.0, a, 0.0, 0.0, 0.0, 0.0, -a, 0.0, 0.0])?;
    let a2 = ComplexMatrix::from_real(3, 3, &[0.0, 0.0, a, a, 0.0, 0.0, 0.0, 0.0, 0.0])?;
    OperatorTuple::new(vec![a1, a2])
}

/// A truncated tree of shift copies carrying a uniform isometric ρ-dilation
/// of [`shift_block_pair`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeDilation {
    pub v: OperatorTuple,
    /// 𝒳 = 𝒳₀ ⊕ 𝒳₀ inside the first two summands.
    pub embedding: Embedding,
    /// Summands whose images under both V₁ and V₂ exist.
    pub interior: Embedding,
    pub summands: usize,
    pub shift_size: usize,
    /// Longest word length for which the compression identities are exact.
    pub window: usize,
}

impl TreeDilation {
    pub fn check_window(&self, n_max: usize) -> Result<()> {
        if n_max > self.window {
            return Err(Error::capacity(format!(
                "word length {n_max} exceeds the truncation window {}",
                self.window
            )));
        }
        Ok(())
    }
}

/// Summands 1..=S with S = 2^{depth−1}, each a copy of C^M. V₁ maps summand j
/// to summand 2j−1 and V₂ maps j to 2j, both through the cyclic shift; images
/// past S are cut off (zero rows).
pub fn build_tree_isometric_dilation(rho: f64, m: usize, depth: usize) -> Result<TreeDilation> {
    if depth < MIN_TREE_DEPTH {
        return Err(Error::capacity(format!("depth {depth} is below {MIN_TREE_DEPTH}")));
    }
    if depth > 12 {
        return Err(Error::capacity(format!("depth {depth} would need 2^{} summands", depth - 1)));
    }
    let (u, _) = build_shift_unitary_rho_dilation(rho, m)?;
    let u = u.get(0).as_dmatrix().clone();
    let s = 1usize << (depth - 1);
    let dim = s * m;
    let mut v1 = DMatrix::<C64>::zeros(dim, dim);
    let mut v2 = DMatrix::<C64>::zeros(dim, dim);
    for j in 1..=s {
        for (target, v) in [(2 * j - 1, &mut v1), (2 * j, &mut v2)] {
            if target <= s {
                v.view_mut(((target - 1) * m, (j - 1) * m), (m, m)).copy_from(&u);
            }
        }
    }
    let embedding = Embedding::coordinates(dim, &[1, 0, m + 1, m])?;
    let interior_idx: Vec<usize> = (0..(s / 2) * m).collect();
    Ok(TreeDilation {
        v: OperatorTuple::new(vec![ComplexMatrix::wrap(v1), ComplexMatrix::wrap(v2)])?,
        embedding,
        interior: Embedding::coordinates(dim, &interior_idx)?,
        summands: s,
        shift_size: m,
        window: (depth - 1).min(m - 2),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// max_k ‖S A_k − B_k S‖
    pub residual: f64,
    /// ‖S‖‖S⁻¹‖
    pub condition_number: f64,
    pub passed: bool,
}

/// Checks A_k = S⁻¹ B_k S in the multiplied form S A_k = B_k S.
pub fn verify_similarity(a: &OperatorTuple, b: &OperatorTuple, s: &ComplexMatrix) -> Result<SimilarityReport> {
    if a.n_vars() != b.n_vars() || a.dim() != b.dim() {
        return Err(Error::input("tuples must have the same arity and dimension"));
    }
    if !s.is_square() || s.rows() != a.dim() {
        return Err(Error::input(format!(
            "S must be {0}x{0}, got {1}x{2}",
            a.dim(),
            s.rows(),
            s.cols()
        )));
    }
    let sv = s.singular_values();
    let smin = *sv.last().expect("non-empty");
    if !(smin > 1e-12) {
        return Err(Error::input(format!("S is singular (smallest singular value {smin:e})")));
    }
    let mut residual = 0.0f64;
    for (ak, bk) in a.mats().iter().zip(b.mats()) {
        residual = residual.max(op_norm(&(&(s * ak) - &(bk * s)))?);
    }
    Ok(SimilarityReport {
        residual,
        condition_number: sv[0] / smin,
        passed: residual < DILATION_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Diverges,
    Bounded,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    /// ‖Mⁿ‖ for n = 1..=n_max, capped at [`NORM_CAP`].
    pub norms: Vec<f64>,
    /// Least-squares slope of log‖Mⁿ‖ over n ∈ [n_max/2, n_max]; None once a power vanishes.
    pub exponent: Option<f64>,
    pub classification: Growth,
    pub capped: bool,
}

pub const NORM_CAP: f64 = 1e300;
pub const MAX_PROBE_POWER: usize = 64;
/// Growth rates above this count as divergence.
pub const GROWTH_THRESHOLD: f64 = 0.01;

pub fn divergence_probe(m: &ComplexMatrix, n_max: usize) -> Result<DivergenceReport> {
    if !m.is_square() || !m.is_finite() {
        return Err(Error::input("divergence probe needs a finite square matrix"));
    }
    if n_max == 0 || n_max > MAX_PROBE_POWER {
        return Err(Error::capacity(format!("n_max must lie in 1..={MAX_PROBE_POWER}, got {n_max}")));
    }
    let mut norms = Vec::with_capacity(n_max);
    let mut capped = false;
    let mut p = m.clone();
    for n in 1..=n_max {
        if n > 1 {
            p = &p * m;
        }
        let v = if p.is_finite() { op_norm(&p)? } else { f64::INFINITY };
        if v > NORM_CAP {
            capped = true;
            norms.push(NORM_CAP);
            break;
        }
        norms.push(v);
    }
    if capped {
        return Ok(DivergenceReport {
            norms,
            exponent: None,
            classification: Growth::Diverges,
            capped,
        });
    }
    if norms.contains(&0.0) {
        return Ok(DivergenceReport {
            norms,
            exponent: None,
            classification: Growth::Bounded,
            capped,
        });
    }
    let from = (n_max / 2).max(1);
    let pts: Vec<(f64, f64)> = (from..=n_max).map(|n| (n as f64, norms[n - 1].ln())).collect();
    let exponent = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        pts[0].1 / pts[0].0
    };
    let tail = &norms[from - 1..];
    let monotone = tail.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    let classification = if exponent <= GROWTH_THRESHOLD {
        Growth::Bounded
    } else if monotone {
        Growth::Diverges
    } else {
        Growth::Inconclusive
    };
    Ok(DivergenceReport {
        norms,
        exponent: Some(exponent),
        classification,
        capped,
    })
}
