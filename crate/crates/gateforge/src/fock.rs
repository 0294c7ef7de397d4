//! Truncated multimode bosonic Fock space: occupation states, canonical
//! basis indexing, state vectors, density operators and the elementary
//! operations (ladder operators, tensor products, partial trace).
//!
//! Canonical basis order: states are grouped by total occupation in
//! ascending order, and within each total sorted lexicographically
//! descending on the occupation vector. For one mode with cutoff 2 this
//! gives |0>, |1>, |2>; for two modes the two-photon sector reads
//! |2,0>, |1,1>, |0,2>. The order is deterministic and identical across
//! runs, which the serialized amplitude arrays rely on.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, CMat, CVec};

/// Hard cap on basis sizes; enumeration refuses anything larger.
pub const MAX_BASIS_SIZE: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("basis would have {size} states, above the configured maximum of {limit}")]
    BasisTooLarge { size: u128, limit: usize },
    #[error("mode count must be >= 1")]
    NoModes,
    #[error("mode index {mode} out of range for {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },
    #[error("occupation state {0:?} is not in the basis")]
    StateNotInBasis(Vec<u32>),
    #[error("truncation rules are incompatible: {0} vs {1}")]
    IncompatibleTruncation(Truncation, Truncation),
    #[error("operands live on different bases")]
    BasisMismatch,
    #[error("amplitude vector has length {got}, basis has {expected} states")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("keep set must be a nonempty set of valid, distinct mode indices")]
    BadKeepSet,
    #[error("|T| = 0 with occupation in the divided mode: factored form diverges")]
    SingularTransmittance,
}

/// Occupation-number vector, one non-negative count per mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OccupationState(pub Vec<u32>);

impl OccupationState {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<u32>> for OccupationState {
    fn from(v: Vec<u32>) -> Self {
        OccupationState(v)
    }
}

impl From<&[u32]> for OccupationState {
    fn from(v: &[u32]) -> Self {
        OccupationState(v.to_vec())
    }
}

impl<const N: usize> From<[u32; N]> for OccupationState {
    fn from(v: [u32; N]) -> Self {
        OccupationState(v.to_vec())
    }
}

impl fmt::Display for OccupationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ">")
    }
}

/// Truncation rule of a basis: either a cap on the total occupation or a
/// fixed-total particle sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Truncation {
    MaxTotal(u32),
    FixedTotal(u32),
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Truncation::MaxTotal(n) => write!(f, "total <= {n}"),
            Truncation::FixedTotal(n) => write!(f, "total == {n}"),
        }
    }
}

/// Exact binomial coefficient in u128; panics only on genuine overflow,
/// which the basis-size guard catches first.
pub fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    let mut num: u128 = 1;
    for i in 0..k {
        num = num * (n - i) as u128 / (i + 1) as u128;
    }
    num
}

/// Enumerated Fock basis with a bijective state <-> dense-index map.
#[derive(Debug, Clone)]
pub struct FockBasis {
    mode_count: usize,
    truncation: Truncation,
    states: Vec<OccupationState>,
    index: HashMap<Vec<u32>, usize>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.mode_count == other.mode_count && self.truncation == other.truncation
    }
}

impl FockBasis {
    /// Basis of all states with total occupation <= `max_total`.
    pub fn max_total(mode_count: usize, max_total: u32) -> Result<Arc<Self>, FockError> {
        Self::enumerate(mode_count, Truncation::MaxTotal(max_total))
    }

    /// Fixed particle-number sector (used by the lattice engine).
    pub fn fixed_total(mode_count: usize, total: u32) -> Result<Arc<Self>, FockError> {
        Self::enumerate(mode_count, Truncation::FixedTotal(total))
    }

    /// Enumerate a basis in the canonical order.
    pub fn enumerate(mode_count: usize, truncation: Truncation) -> Result<Arc<Self>, FockError> {
        if mode_count == 0 {
            return Err(FockError::NoModes);
        }
        let size = Self::closed_form_size(mode_count, truncation);
        if size > MAX_BASIS_SIZE as u128 {
            return Err(FockError::BasisTooLarge {
                size,
                limit: MAX_BASIS_SIZE,
            });
        }
        let totals: Vec<u32> = match truncation {
            Truncation::MaxTotal(n) => (0..=n).collect(),
            Truncation::FixedTotal(n) => vec![n],
        };
        let mut states = Vec::with_capacity(size as usize);
        let mut scratch = vec![0u32; mode_count];
        for total in totals {
            emit_sector(&mut states, &mut scratch, 0, total);
        }
        debug_assert_eq!(states.len() as u128, size);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.0.clone(), i))
            .collect();
        Ok(Arc::new(FockBasis {
            mode_count,
            truncation,
            states,
            index,
        }))
    }

    /// Closed-form state count: C(M+N, N) for "total <= N" and
    /// C(A+M-1, A) for the fixed-total sector.
    pub fn closed_form_size(mode_count: usize, truncation: Truncation) -> u128 {
        let m = mode_count as u64;
        match truncation {
            Truncation::MaxTotal(n) => binomial(m + n as u64, n as u64),
            Truncation::FixedTotal(a) => binomial(a as u64 + m - 1, a as u64),
        }
    }

    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn states(&self) -> &[OccupationState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &OccupationState {
        &self.states[index]
    }

    pub fn index_of(&self, state: &OccupationState) -> Result<usize, FockError> {
        self.index
            .get(&state.0)
            .copied()
            .ok_or_else(|| FockError::StateNotInBasis(state.0.clone()))
    }

    pub fn contains(&self, state: &OccupationState) -> bool {
        self.index.contains_key(&state.0)
    }
}

fn emit_sector(out: &mut Vec<OccupationState>, scratch: &mut [u32], mode: usize, remaining: u32) {
    if mode + 1 == scratch.len() {
        scratch[mode] = remaining;
        out.push(OccupationState(scratch.to_vec()));
        return;
    }
    // Descending count in the current mode gives lexicographic-descending
    // order within the sector.
    for n in (0..=remaining).rev() {
        scratch[mode] = n;
        emit_sector(out, scratch, mode + 1, remaining - n);
    }
}

/// Pure state over a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct StateVector {
    pub basis: Arc<FockBasis>,
    pub amplitudes: CVec,
}

/// Outcome of a ladder-operator application: amplitude mass pushed past
/// the truncation is dropped and reported, never silently discarded.
#[derive(Debug, Clone)]
pub struct LadderResult {
    pub state: StateVector,
    pub dropped_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Creation,
    Annihilation,
}

impl StateVector {
    pub fn zero(basis: Arc<FockBasis>) -> Self {
        let n = basis.size();
        StateVector {
            basis,
            amplitudes: Array1::zeros(n),
        }
    }

    /// Basis state |occ> with unit amplitude.
    pub fn basis_state(basis: Arc<FockBasis>, occ: &OccupationState) -> Result<Self, FockError> {
        let idx = basis.index_of(occ)?;
        let mut s = Self::zero(basis);
        s.amplitudes[idx] = linalg::ONE;
        Ok(s)
    }

    pub fn from_amplitudes(basis: Arc<FockBasis>, amplitudes: CVec) -> Result<Self, FockError> {
        if amplitudes.len() != basis.size() {
            return Err(FockError::DimensionMismatch {
                expected: basis.size(),
                got: amplitudes.len(),
            });
        }
        Ok(StateVector { basis, amplitudes })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amplitudes.mapv_inplace(|z| z / n);
        }
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64, FockError> {
        if self.basis != other.basis {
            return Err(FockError::BasisMismatch);
        }
        Ok(linalg::vec_dot(&self.amplitudes, &other.amplitudes))
    }

    /// Apply a creation or annihilation operator on one mode.
    ///
    /// Creation obeys a+|n> = sqrt(n+1)|n+1>; amplitudes pushed outside
    /// the truncation are dropped and their probability mass reported.
    pub fn apply_ladder(&self, mode: usize, kind: LadderKind) -> Result<LadderResult, FockError> {
        if mode >= self.basis.mode_count() {
            return Err(FockError::ModeOutOfRange {
                mode,
                modes: self.basis.mode_count(),
            });
        }
        let mut out = StateVector::zero(self.basis.clone());
        let mut dropped = 0.0;
        for (i, amp) in self.amplitudes.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let occ = self.basis.state(i);
            let mut target = occ.0.clone();
            let factor = match kind {
                LadderKind::Creation => {
                    let n = target[mode];
                    target[mode] = n + 1;
                    ((n + 1) as f64).sqrt()
                }
                LadderKind::Annihilation => {
                    let n = target[mode];
                    if n == 0 {
                        continue; // a|0> = 0, not a truncation loss
                    }
                    target[mode] = n - 1;
                    (n as f64).sqrt()
                }
            };
            match self.basis.index.get(&target) {
                Some(&j) => out.amplitudes[j] += amp * factor,
                None => dropped += (amp * factor).norm_sqr(),
            }
        }
        Ok(LadderResult {
            state: out,
            dropped_probability: dropped,
        })
    }

    /// Tensor product without loss: the result truncation is the sum of
    /// the operand truncations, so every product state survives.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector, FockError> {
        let (joined, loss) = self.tensor_impl(other, None)?;
        debug_assert_eq!(loss, 0.0);
        Ok(joined)
    }

    /// Tensor product re-truncated to `max_total` total photons; returns
    /// the dropped probability mass.
    pub fn tensor_truncated(
        &self,
        other: &StateVector,
        max_total: u32,
    ) -> Result<(StateVector, f64), FockError> {
        self.tensor_impl(other, Some(max_total))
    }

    fn tensor_impl(
        &self,
        other: &StateVector,
        cutoff: Option<u32>,
    ) -> Result<(StateVector, f64), FockError> {
        let trunc = joint_truncation(self.basis.truncation(), other.basis.truncation(), cutoff)?;
        let basis = FockBasis::enumerate(self.basis.mode_count() + other.basis.mode_count(), trunc)?;
        let mut out = StateVector::zero(basis.clone());
        let mut dropped = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, b) in other.amplitudes.iter().enumerate() {
                let amp = a * b;
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                let mut occ = self.basis.state(i).0.clone();
                occ.extend_from_slice(&other.basis.state(j).0);
                match basis.index.get(&occ) {
                    Some(&k) => out.amplitudes[k] += amp,
                    None => dropped += amp.norm_sqr(),
                }
            }
        }
        Ok((out, dropped))
    }

    /// Serialize to the documented JSON shape.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "modes": self.basis.mode_count(),
            "truncation": self.basis.truncation(),
            "amplitudes": self
                .amplitudes
                .iter()
                .map(|z| [z.re, z.im])
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, String> {
        #[derive(Deserialize)]
        struct Repr {
            modes: usize,
            truncation: Truncation,
            amplitudes: Vec<[f64; 2]>,
        }
        let repr: Repr = serde_json::from_value(value.clone()).map_err(|e| e.to_string())?;
        let basis = FockBasis::enumerate(repr.modes, repr.truncation).map_err(|e| e.to_string())?;
        if repr.amplitudes.len() != basis.size() {
            return Err(format!(
                "amplitude vector has length {}, basis has {} states",
                repr.amplitudes.len(),
                basis.size()
            ));
        }
        let amps: CVec = repr
            .amplitudes
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        Ok(StateVector {
            basis,
            amplitudes: amps,
        })
    }
}

fn joint_truncation(
    a: Truncation,
    b: Truncation,
    cutoff: Option<u32>,
) -> Result<Truncation, FockError> {
    match (a, b) {
        (Truncation::MaxTotal(x), Truncation::MaxTotal(y)) => {
            Ok(Truncation::MaxTotal(cutoff.unwrap_or(x + y).min(x + y)))
        }
        (Truncation::FixedTotal(x), Truncation::FixedTotal(y)) => match cutoff {
            None => Ok(Truncation::FixedTotal(x + y)),
            Some(c) if c >= x + y => Ok(Truncation::FixedTotal(x + y)),
            Some(_) => Err(FockError::IncompatibleTruncation(a, b)),
        },
        _ => Err(FockError::IncompatibleTruncation(a, b)),
    }
}

/// Density operator over a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct DensityOperator {
    pub basis: Arc<FockBasis>,
    pub matrix: CMat,
}

impl DensityOperator {
    pub fn from_pure(psi: &StateVector) -> Self {
        let n = psi.basis.size();
        let mut m: CMat = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = psi.amplitudes[i] * psi.amplitudes[j].conj();
            }
        }
        DensityOperator {
            basis: psi.basis.clone(),
            matrix: m,
        }
    }

    pub fn from_matrix(basis: Arc<FockBasis>, matrix: CMat) -> Result<Self, FockError> {
        if matrix.nrows() != basis.size() || matrix.ncols() != basis.size() {
            return Err(FockError::DimensionMismatch {
                expected: basis.size(),
                got: matrix.nrows(),
            });
        }
        Ok(DensityOperator { basis, matrix })
    }

    /// Vacuum projector |0...0><0...0|.
    pub fn vacuum(basis: Arc<FockBasis>) -> Self {
        let occ = OccupationState(vec![0; basis.mode_count()]);
        let psi = StateVector::basis_state(basis, &occ).expect("vacuum always in basis");
        Self::from_pure(&psi)
    }

    pub fn trace(&self) -> Complex64 {
        linalg::trace(&self.matrix)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (w, _) = linalg::hermitian_eigen(&self.matrix);
        w[0]
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator, FockError> {
        let trunc = joint_truncation(self.basis.truncation(), other.basis.truncation(), None)?;
        let basis =
            FockBasis::enumerate(self.basis.mode_count() + other.basis.mode_count(), trunc)?;
        let n = basis.size();
        let mut m: CMat = Array2::zeros((n, n));
        for (i1, s1) in self.basis.states().iter().enumerate() {
            for (j1, t1) in other.basis.states().iter().enumerate() {
                let mut row = s1.0.clone();
                row.extend_from_slice(&t1.0);
                let r = basis.index[&row];
                for (i2, s2) in self.basis.states().iter().enumerate() {
                    let a = self.matrix[(i1, i2)];
                    if a.norm_sqr() == 0.0 {
                        continue;
                    }
                    for (j2, t2) in other.basis.states().iter().enumerate() {
                        let b = other.matrix[(j1, j2)];
                        if b.norm_sqr() == 0.0 {
                            continue;
                        }
                        let mut col = s2.0.clone();
                        col.extend_from_slice(&t2.0);
                        let c = basis.index[&col];
                        m[(r, c)] += a * b;
                    }
                }
            }
        }
        Ok(DensityOperator { basis, matrix: m })
    }

    /// Trace out every mode not in `keep`; `keep` must be a nonempty set
    /// of distinct valid mode indices. Kept modes appear in ascending
    /// index order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator, FockError> {
        let modes = self.basis.mode_count();
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.is_empty() || keep.len() != keep.iter().filter(|&&m| m < modes).count() {
            return Err(FockError::BadKeepSet);
        }
        if keep.len() == modes {
            return Ok(self.clone());
        }
        let traced: Vec<usize> = (0..modes).filter(|m| !keep.contains(m)).collect();
        let trunc = match self.basis.truncation() {
            Truncation::MaxTotal(n) => Truncation::MaxTotal(n),
            Truncation::FixedTotal(a) => Truncation::MaxTotal(a),
        };
        let out_basis = FockBasis::enumerate(keep.len(), trunc)?;
        // Group full-basis indices by the traced-mode occupations.
        let mut groups: HashMap<Vec<u32>, Vec<(usize, usize)>> = HashMap::new();
        for (i, s) in self.basis.states().iter().enumerate() {
            let tpart: Vec<u32> = traced.iter().map(|&m| s.0[m]).collect();
            let kpart: Vec<u32> = keep.iter().map(|&m| s.0[m]).collect();
            let k = out_basis.index[&kpart];
            groups.entry(tpart).or_default().push((i, k));
        }
        let n = out_basis.size();
        let mut m: CMat = Array2::zeros((n, n));
        for members in groups.values() {
            for &(i1, k1) in members {
                for &(i2, k2) in members {
                    m[(k1, k2)] += self.matrix[(i1, i2)];
                }
            }
        }
        Ok(DensityOperator {
            basis: out_basis,
            matrix: m,
        })
    }
}

/// Overlap <psi| rho |psi>, clipped to [0, 1] against roundoff.
pub fn state_fidelity(rho: &DensityOperator, psi: &StateVector) -> Result<f64, FockError> {
    if rho.basis != psi.basis {
        return Err(FockError::BasisMismatch);
    }
    let v = rho.matrix.dot(&psi.amplitudes);
    let f = linalg::vec_dot(&psi.amplitudes, &v).re;
    Ok(f.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_bases_match_closed_forms() {
        let b = FockBasis::max_total(1, 2).unwrap();
        assert_eq!(b.size(), 3);
        let expect: Vec<Vec<u32>> = vec![vec![0], vec![1], vec![2]];
        let got: Vec<Vec<u32>> = b.states().iter().map(|s| s.0.clone()).collect();
        assert_eq!(got, expect);

        let b = FockBasis::max_total(2, 2).unwrap();
        assert_eq!(b.size(), 6);

        // C(17, 8) evaluated by exact integer arithmetic.
        assert_eq!(binomial(17, 8), 24310);
        let b = FockBasis::fixed_total(10, 8).unwrap();
        assert_eq!(b.size(), 24310);
    }

    #[test]
    fn sector_order_is_lex_descending() {
        let b = FockBasis::fixed_total(2, 2).unwrap();
        let got: Vec<Vec<u32>> = b.states().iter().map(|s| s.0.clone()).collect();
        assert_eq!(got, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn basis_size_guard_rejects_huge_requests() {
        let err = FockBasis::max_total(30, 30).unwrap_err();
        match err {
            FockError::BasisTooLarge { limit, .. } => assert_eq!(limit, MAX_BASIS_SIZE),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ladder_algebra_on_vacuum() {
        let basis = FockBasis::max_total(1, 3).unwrap();
        let vac = StateVector::basis_state(basis.clone(), &[0].into()).unwrap();
        let up = vac.apply_ladder(0, LadderKind::Creation).unwrap();
        assert_eq!(up.dropped_probability, 0.0);
        let one = basis.index_of(&[1].into()).unwrap();
        assert!((up.state.amplitudes[one] - linalg::ONE).norm() < 1e-15);

        let down = vac.apply_ladder(0, LadderKind::Annihilation).unwrap();
        assert_eq!(down.state.norm_sqr(), 0.0);

        let two = up.state.apply_ladder(0, LadderKind::Creation).unwrap().state;
        let idx2 = basis.index_of(&[2].into()).unwrap();
        assert!((two.amplitudes[idx2] - Complex64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn ladder_number_operator_identity() {
        // a+ a then a a+ on |n>: n and n+1 exactly, below truncation.
        let basis = FockBasis::max_total(2, 4).unwrap();
        for n in 0..3u32 {
            let psi = StateVector::basis_state(basis.clone(), &[n, 1].into()).unwrap();
            let up = psi.apply_ladder(0, LadderKind::Creation).unwrap().state;
            let down = up.apply_ladder(0, LadderKind::Annihilation).unwrap().state;
            let idx = basis.index_of(&[n, 1].into()).unwrap();
            assert!((down.amplitudes[idx].re - (n as f64 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn creation_at_cutoff_reports_loss() {
        let basis = FockBasis::max_total(1, 2).unwrap();
        let top = StateVector::basis_state(basis, &[2].into()).unwrap();
        let res = top.apply_ladder(0, LadderKind::Creation).unwrap();
        assert!((res.dropped_probability - 3.0).abs() < 1e-12); // |sqrt(3)|^2
        assert_eq!(res.state.norm_sqr(), 0.0);
    }

    #[test]
    fn tensor_products_combine_amplitudes() {
        let b1 = FockBasis::max_total(1, 1).unwrap();
        let one = StateVector::basis_state(b1.clone(), &[1].into()).unwrap();
        let zero = StateVector::basis_state(b1.clone(), &[0].into()).unwrap();
        let joined = one.tensor(&zero).unwrap();
        let idx = joined.basis.index_of(&[1, 0].into()).unwrap();
        assert!((joined.amplitudes[idx] - linalg::ONE).norm() < 1e-15);

        let mut sup = StateVector::zero(b1.clone());
        sup.amplitudes[b1.index_of(&[0].into()).unwrap()] = Complex64::new(0.6, 0.0);
        sup.amplitudes[b1.index_of(&[1].into()).unwrap()] = Complex64::new(0.0, 0.8);
        let joined = sup.tensor(&one).unwrap();
        let i01 = joined.basis.index_of(&[0, 1].into()).unwrap();
        let i11 = joined.basis.index_of(&[1, 1].into()).unwrap();
        assert!((joined.amplitudes[i01] - Complex64::new(0.6, 0.0)).norm() < 1e-15);
        assert!((joined.amplitudes[i11] - Complex64::new(0.0, 0.8)).norm() < 1e-15);
        assert!((joined.norm_sqr() - 1.0).abs() < 1e-12);

        let rho = DensityOperator::vacuum(b1.clone());
        let prod = rho.tensor(&rho).unwrap();
        assert!((prod.trace().re - 1.0).abs() < 1e-12);
        let vac2 = prod.basis.index_of(&[0, 0].into()).unwrap();
        assert!((prod.matrix[(vac2, vac2)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_truncations_are_rejected() {
        let a = StateVector::zero(FockBasis::max_total(1, 1).unwrap());
        let b = StateVector::zero(FockBasis::fixed_total(1, 1).unwrap());
        assert!(matches!(
            a.tensor(&b),
            Err(FockError::IncompatibleTruncation(_, _))
        ));
    }

    #[test]
    fn partial_trace_basics() {
        let b2 = FockBasis::max_total(2, 1).unwrap();
        let psi = StateVector::basis_state(b2.clone(), &[1, 0].into()).unwrap();
        let rho = DensityOperator::from_pure(&psi);
        let reduced = rho.partial_trace(&[0]).unwrap();
        assert!((reduced.trace().re - 1.0).abs() < 1e-12);
        let one = reduced.basis.index_of(&[1].into()).unwrap();
        assert!((reduced.matrix[(one, one)].re - 1.0).abs() < 1e-12);

        // Bell-like state traces to the maximally mixed qubit.
        let mut bell = StateVector::zero(b2.clone());
        let i01 = b2.index_of(&[0, 1].into()).unwrap();
        let i10 = b2.index_of(&[1, 0].into()).unwrap();
        bell.amplitudes[i01] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        bell.amplitudes[i10] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let rho = DensityOperator::from_pure(&bell);
        for keep in [[0usize], [1usize]] {
            let red = rho.partial_trace(&keep).unwrap();
            let i0 = red.basis.index_of(&[0].into()).unwrap();
            let i1 = red.basis.index_of(&[1].into()).unwrap();
            assert!((red.matrix[(i0, i0)].re - 0.5).abs() < 1e-12);
            assert!((red.matrix[(i1, i1)].re - 0.5).abs() < 1e-12);
            assert!(red.matrix[(i0, i1)].norm() < 1e-12);
        }

        assert!(matches!(
            rho.partial_trace(&[]),
            Err(FockError::BadKeepSet)
        ));
    }

    #[test]
    fn partial_trace_composes() {
        let b3 = FockBasis::max_total(3, 2).unwrap();
        let mut psi = StateVector::zero(b3.clone());
        for (k, s) in b3.states().iter().enumerate() {
            let t = s.total() as f64;
            psi.amplitudes[k] = Complex64::new(0.3 + 0.1 * k as f64, 0.05 * t);
        }
        psi.normalize();
        let rho = DensityOperator::from_pure(&psi);
        let at_once = rho.partial_trace(&[0]).unwrap();
        let staged = rho
            .partial_trace(&[0, 1])
            .unwrap()
            .partial_trace(&[0])
            .unwrap();
        assert!(linalg::max_abs_diff(&at_once.matrix, &staged.matrix) < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let b = FockBasis::max_total(1, 1).unwrap();
        let zero = StateVector::basis_state(b.clone(), &[0].into()).unwrap();
        let one = StateVector::basis_state(b.clone(), &[1].into()).unwrap();
        let rho0 = DensityOperator::from_pure(&zero);
        assert!((state_fidelity(&rho0, &zero).unwrap() - 1.0).abs() < 1e-14);
        assert!(state_fidelity(&rho0, &one).unwrap() < 1e-14);

        // Maximally mixed qubit against |+>: 0.5 by direct contraction.
        let mut mixed = rho0.clone();
        mixed.matrix = &rho0.matrix * Complex64::new(0.5, 0.0)
            + &DensityOperator::from_pure(&one).matrix * Complex64::new(0.5, 0.0);
        let mut plus = StateVector::zero(b);
        plus.amplitudes[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        plus.amplitudes[1] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert!((state_fidelity(&mixed, &plus).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn state_json_round_trip() {
        let b = FockBasis::max_total(2, 2).unwrap();
        let mut psi = StateVector::zero(b);
        psi.amplitudes[3] = Complex64::new(0.6, -0.8);
        let json = psi.to_json();
        let back = StateVector::from_json(&json).unwrap();
        assert_eq!(back.basis.size(), psi.basis.size());
        assert!((back.amplitudes[3] - psi.amplitudes[3]).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn index_round_trip(modes in 1usize..5, cutoff in 0u32..5) {
            let basis = FockBasis::max_total(modes, cutoff).unwrap();
            for i in 0..basis.size() {
                prop_assert_eq!(basis.index_of(basis.state(i)).unwrap(), i);
            }
            prop_assert_eq!(
                basis.size() as u128,
                FockBasis::closed_form_size(modes, Truncation::MaxTotal(cutoff))
            );
        }

        #[test]
        fn fixed_sector_round_trip(modes in 1usize..6, total in 0u32..6) {
            let basis = FockBasis::fixed_total(modes, total).unwrap();
            for i in 0..basis.size() {
                prop_assert_eq!(basis.index_of(basis.state(i)).unwrap(), i);
            }
        }
    }
}
