//! Beam-splitter and phase-shifter networks on optical modes, their
//! triangular (Reck-style) factorization, and the lift from an N x N
//! mode matrix to the Fock-space operator.
//!
//! Convention: a beam splitter with transmittance T and reflectance R
//! acts on its mode pair (i, j) as the 2 x 2 block
//!
//! ```text
//!   [  T    R  ]
//!   [ -R*   T* ]
//! ```
//!
//! so a single photon in mode i maps to T|1_i> - R*|1_j>. Permanents and
//! detection probabilities are convention-independent; intermediate
//! amplitudes are not, and every test in this crate uses this one
//! convention.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{FockBasis, FockError, LadderKind, StateVector};
use crate::linalg::{self, CMat};
use crate::permanent::{transition_amplitude, PermanentError};

#[derive(Debug, Error)]
pub enum InterferometerError {
    #[error("mode index {mode} out of range for {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },
    #[error("beam splitter modes must be distinct")]
    DegenerateModes,
    #[error("matrix is not unitary: defect {defect:.3e} above tolerance {tol:.1e}")]
    NotUnitary { defect: f64, tol: f64 },
    #[error("beam splitter is not lossless: |T|^2 + |R|^2 = {0}")]
    NotLossless(f64),
    #[error("basis has {basis_modes} modes, matrix acts on {matrix_modes}")]
    ModeCountMismatch {
        basis_modes: usize,
        matrix_modes: usize,
    },
    #[error("|T| = 0 with occupation in the inverse-scaled mode: T^(-n) diverges")]
    SingularTransmittance,
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Permanent(#[from] PermanentError),
}

/// Lossless beam-splitter parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitterParams {
    pub t: Complex64,
    pub r: Complex64,
}

impl BeamSplitterParams {
    pub fn new(t: Complex64, r: Complex64) -> Result<Self, InterferometerError> {
        let s = t.norm_sqr() + r.norm_sqr();
        if (s - 1.0).abs() > 1e-12 {
            return Err(InterferometerError::NotLossless(s));
        }
        Ok(BeamSplitterParams { t, r })
    }

    /// T = cos(theta), R = sin(theta) e^{i phi}.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        BeamSplitterParams {
            t: Complex64::new(theta.cos(), 0.0),
            r: Complex64::from_polar(theta.sin(), phi),
        }
    }

    /// Real 50:50 splitter, T = R = 1/sqrt(2).
    pub fn fifty_fifty() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        BeamSplitterParams {
            t: Complex64::new(s, 0.0),
            r: Complex64::new(s, 0.0),
        }
    }

    /// The 2 x 2 block in the crate convention.
    pub fn block(&self) -> CMat {
        let mut b = Array2::zeros((2, 2));
        b[(0, 0)] = self.t;
        b[(0, 1)] = self.r;
        b[(1, 0)] = -self.r.conj();
        b[(1, 1)] = self.t.conj();
        b
    }
}

/// One optical element of a network.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    BeamSplitter {
        i: usize,
        j: usize,
        params: BeamSplitterParams,
    },
    PhaseShift {
        i: usize,
        theta: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ElementRepr {
    Bs {
        i: usize,
        j: usize,
        #[serde(rename = "T")]
        t: [f64; 2],
        #[serde(rename = "R")]
        r: [f64; 2],
    },
    Phase {
        i: usize,
        theta: f64,
    },
}

impl Serialize for Element {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            Element::BeamSplitter { i, j, params } => ElementRepr::Bs {
                i: *i,
                j: *j,
                t: [params.t.re, params.t.im],
                r: [params.r.re, params.r.im],
            },
            Element::PhaseShift { i, theta } => ElementRepr::Phase {
                i: *i,
                theta: *theta,
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = ElementRepr::deserialize(d)?;
        Ok(match repr {
            ElementRepr::Bs { i, j, t, r } => Element::BeamSplitter {
                i,
                j,
                params: BeamSplitterParams::new(
                    Complex64::new(t[0], t[1]),
                    Complex64::new(r[0], r[1]),
                )
                .map_err(serde::de::Error::custom)?,
            },
            ElementRepr::Phase { i, theta } => Element::PhaseShift { i, theta },
        })
    }
}

/// Ordered list of optical elements on a fixed number of modes; elements
/// act on the state in list order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NetworkDescription {
    pub modes: usize,
    pub elements: Vec<Element>,
}

impl NetworkDescription {
    pub fn empty(modes: usize) -> Self {
        NetworkDescription {
            modes,
            elements: Vec::new(),
        }
    }

    pub fn single_bs(
        modes: usize,
        i: usize,
        j: usize,
        params: BeamSplitterParams,
    ) -> Result<Self, InterferometerError> {
        let mut net = Self::empty(modes);
        net.push_bs(i, j, params)?;
        Ok(net)
    }

    pub fn push_bs(
        &mut self,
        i: usize,
        j: usize,
        params: BeamSplitterParams,
    ) -> Result<(), InterferometerError> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(InterferometerError::DegenerateModes);
        }
        self.elements.push(Element::BeamSplitter { i, j, params });
        Ok(())
    }

    pub fn push_phase(&mut self, i: usize, theta: f64) -> Result<(), InterferometerError> {
        self.check_mode(i)?;
        self.elements.push(Element::PhaseShift { i, theta });
        Ok(())
    }

    fn check_mode(&self, m: usize) -> Result<(), InterferometerError> {
        if m >= self.modes {
            return Err(InterferometerError::ModeOutOfRange {
                mode: m,
                modes: self.modes,
            });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), InterferometerError> {
        for e in &self.elements {
            match e {
                Element::BeamSplitter { i, j, .. } => {
                    self.check_mode(*i)?;
                    self.check_mode(*j)?;
                    if i == j {
                        return Err(InterferometerError::DegenerateModes);
                    }
                }
                Element::PhaseShift { i, .. } => self.check_mode(*i)?,
            }
        }
        Ok(())
    }

    /// Multiply out the elements into the N x N mode unitary.
    pub fn compose(&self) -> Result<ModeUnitary, InterferometerError> {
        self.validate()?;
        let n = self.modes;
        let mut m = linalg::identity(n);
        for e in &self.elements {
            match e {
                Element::BeamSplitter { i, j, params } => {
                    let b = params.block();
                    // m <- embed(b) . m, touching only rows i and j.
                    for col in 0..n {
                        let mi = m[(*i, col)];
                        let mj = m[(*j, col)];
                        m[(*i, col)] = b[(0, 0)] * mi + b[(0, 1)] * mj;
                        m[(*j, col)] = b[(1, 0)] * mi + b[(1, 1)] * mj;
                    }
                }
                Element::PhaseShift { i, theta } => {
                    let p = Complex64::from_polar(1.0, *theta);
                    for col in 0..n {
                        m[(*i, col)] *= p;
                    }
                }
            }
        }
        ModeUnitary::new(m)
    }

    pub fn bs_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, Element::BeamSplitter { .. }))
            .count()
    }
}

/// N x N unitary acting on mode amplitudes.
#[derive(Debug, Clone)]
pub struct ModeUnitary {
    matrix: CMat,
}

impl ModeUnitary {
    pub const UNITARITY_TOL: f64 = 1e-8;

    pub fn new(matrix: CMat) -> Result<Self, InterferometerError> {
        let defect = linalg::unitarity_defect(&matrix);
        if defect > Self::UNITARITY_TOL {
            return Err(InterferometerError::NotUnitary {
                defect,
                tol: Self::UNITARITY_TOL,
            });
        }
        Ok(ModeUnitary { matrix })
    }

    pub fn identity(n: usize) -> Self {
        ModeUnitary {
            matrix: linalg::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    /// Fock-space operator of this mode unitary on `basis`; block
    /// diagonal across total-photon sectors and unitary on each sector.
    pub fn lift_to_fock(&self, basis: &FockBasis) -> Result<CMat, InterferometerError> {
        lift_matrix(&self.matrix, basis)
    }
}

/// Lift an arbitrary (not necessarily unitary) mode matrix to the Fock
/// space over `basis` via repeated-index permanents:
/// `<m|W|n> = per(M[m|n]) / sqrt(prod m_i! prod n_j!)`.
///
/// For unitary input this is the network unitary; for non-unitary input
/// it is the operator with single-particle transfer matrix `m` (used by
/// the absorbing-element Kraus construction).
pub fn lift_matrix(m: &CMat, basis: &FockBasis) -> Result<CMat, InterferometerError> {
    let n = m.nrows();
    if basis.mode_count() != n {
        return Err(InterferometerError::ModeCountMismatch {
            basis_modes: basis.mode_count(),
            matrix_modes: n,
        });
    }
    let d = basis.size();
    let mut out: CMat = Array2::zeros((d, d));
    for (col, n_in) in basis.states().iter().enumerate() {
        for (row, n_out) in basis.states().iter().enumerate() {
            if n_in.total() != n_out.total() {
                continue; // photon-number conservation: block diagonal
            }
            out[(row, col)] = transition_amplitude(m, n_in, n_out)?;
        }
    }
    Ok(out)
}

/// Result of the triangular factorization: a network whose composition
/// reproduces the input up to the reported global phase,
/// `U = e^{i phase} . compose(network)`.
#[derive(Debug, Clone)]
pub struct ReckDecomposition {
    pub network: NetworkDescription,
    pub global_phase: f64,
}

/// Factor a mode unitary into at most N(N-1)/2 beam splitters plus
/// per-mode phase shifters (triangular scheme): successive 2 x 2
/// rotations null the below-diagonal entries row by row.
pub fn reck_decompose(u: &ModeUnitary) -> Result<ReckDecomposition, InterferometerError> {
    let n = u.dim();
    let mut work = u.matrix().clone();
    // Right-multiplying by B embedded on (m, k) mixes columns m and k.
    let mut nulling: Vec<(usize, usize, f64, f64)> = Vec::new(); // (m, k, theta, phi)
    for row in (1..n).rev() {
        for col in 0..row {
            let w_nm = work[(row, col)];
            let w_nn = work[(row, row)];
            if w_nm.norm() < 1e-14 {
                continue;
            }
            let (theta, phi) = if w_nn.norm() < 1e-14 {
                (std::f64::consts::FRAC_PI_2, 0.0)
            } else {
                let z = w_nm / w_nn;
                (z.norm().atan(), -z.arg())
            };
            let b = BeamSplitterParams::from_angles(theta, phi).block();
            for r in 0..n {
                let wm = work[(r, col)];
                let wk = work[(r, row)];
                work[(r, col)] = wm * b[(0, 0)] + wk * b[(1, 0)];
                work[(r, row)] = wm * b[(0, 1)] + wk * b[(1, 1)];
            }
            nulling.push((col, row, theta, phi));
        }
    }
    // work is now diagonal with unit-modulus entries.
    let global_phase = work[(0, 0)].arg();
    let mut net = NetworkDescription::empty(n);
    // U = D . B_k^-1 ... B_1^-1, applied right to left, so the inverses
    // go in nulling order followed by the residual phases.
    for &(m, k, theta, phi) in &nulling {
        net.push_bs(m, k, BeamSplitterParams::from_angles(-theta, phi))?;
    }
    for i in 0..n {
        let delta = work[(i, i)].arg() - global_phase;
        let delta = (delta + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
            - std::f64::consts::PI;
        if delta.abs() > 1e-12 {
            net.push_phase(i, delta)?;
        }
    }
    Ok(ReckDecomposition {
        network: net,
        global_phase,
    })
}

/// Apply a lossless beam splitter to a state through the normal-ordered
/// factorization T^{n_i} exp(-R* a_j+ a_i) exp(R a_i+ a_j) T^{-n_j}.
///
/// This is an implementation path independent of the permanent-based
/// lift; the two agree on every basis state and are cross-checked in
/// the tests.
pub fn apply_bs_factored(
    state: &StateVector,
    bs: BeamSplitterParams,
    modes: (usize, usize),
) -> Result<StateVector, InterferometerError> {
    let (i, j) = modes;
    if i == j {
        return Err(InterferometerError::DegenerateModes);
    }
    let mode_count = state.basis.mode_count();
    for m in [i, j] {
        if m >= mode_count {
            return Err(InterferometerError::ModeOutOfRange {
                mode: m,
                modes: mode_count,
            });
        }
    }
    let t_mag = bs.t.norm();
    if t_mag < 1e-300 {
        let occupied = state
            .amplitudes
            .iter()
            .enumerate()
            .any(|(k, a)| a.norm_sqr() > 0.0 && state.basis.state(k).0[j] > 0);
        if occupied {
            return Err(InterferometerError::SingularTransmittance);
        }
    }

    // T^{-n_j}
    let mut psi = scale_by_mode_power(state, j, bs.t, true);
    // exp(R a_i+ a_j)
    psi = hopping_exponential(&psi, bs.r, i, j)?;
    // exp(-R* a_j+ a_i)
    psi = hopping_exponential(&psi, -bs.r.conj(), j, i)?;
    // T^{n_i}
    psi = scale_by_mode_power(&psi, i, bs.t, false);
    Ok(psi)
}

fn scale_by_mode_power(state: &StateVector, mode: usize, t: Complex64, inverse: bool) -> StateVector {
    let mut out = state.clone();
    for (k, amp) in out.amplitudes.iter_mut().enumerate() {
        let n = state.basis.state(k).0[mode];
        if n == 0 || amp.norm_sqr() == 0.0 {
            continue;
        }
        let factor = t.powu(n);
        *amp = if inverse { *amp / factor } else { *amp * factor };
    }
    out
}

/// exp(c a_to+ a_from) as a terminating series (photon-number
/// conserving, so the truncation is never left).
fn hopping_exponential(
    state: &StateVector,
    c: Complex64,
    to: usize,
    from: usize,
) -> Result<StateVector, InterferometerError> {
    let mut result = state.clone();
    let mut term = state.clone();
    let max_k = match state.basis.truncation() {
        crate::fock::Truncation::MaxTotal(n) => n,
        crate::fock::Truncation::FixedTotal(n) => n,
    };
    for k in 1..=max_k.max(1) {
        let lowered = term.apply_ladder(from, LadderKind::Annihilation)?;
        let raised = lowered.state.apply_ladder(to, LadderKind::Creation)?;
        term = raised.state;
        let coeff = c / k as f64;
        term.amplitudes.mapv_inplace(|z| z * coeff);
        if term.norm_sqr() == 0.0 {
            break;
        }
        result.amplitudes = &result.amplitudes + &term.amplitudes;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::OccupationState;
    use crate::linalg::{dagger, identity, max_abs_diff, random_unitary, unitarity_defect, ONE, ZERO};
    use crate::permanent::permanent_ryser;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_network_composes_to_identity() {
        let net = NetworkDescription::empty(3);
        let u = net.compose().unwrap();
        assert!(max_abs_diff(u.matrix(), &identity(3)) < 1e-15);
    }

    #[test]
    fn fifty_fifty_block_follows_convention() {
        let net = NetworkDescription::single_bs(2, 0, 1, BeamSplitterParams::fifty_fifty()).unwrap();
        let u = net.compose().unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // [[T, R], [-R*, T*]] with T = R = 1/sqrt(2)
        assert!((u.matrix()[(0, 0)].re - s).abs() < 1e-15);
        assert!((u.matrix()[(0, 1)].re - s).abs() < 1e-15);
        assert!((u.matrix()[(1, 0)].re + s).abs() < 1e-15);
        assert!((u.matrix()[(1, 1)].re - s).abs() < 1e-15);
    }

    #[test]
    fn two_bs_composition_matches_block_product() {
        let a = BeamSplitterParams::from_angles(0.3, 0.7);
        let b = BeamSplitterParams::from_angles(1.1, -0.2);
        let mut net = NetworkDescription::empty(2);
        net.push_bs(0, 1, a).unwrap();
        net.push_bs(0, 1, b).unwrap();
        let u = net.compose().unwrap();
        let direct = b.block().dot(&a.block());
        assert!(max_abs_diff(u.matrix(), &direct) < 1e-14);
    }

    #[test]
    fn invalid_mode_index_is_rejected() {
        let mut net = NetworkDescription::empty(2);
        assert!(matches!(
            net.push_bs(0, 2, BeamSplitterParams::fifty_fifty()),
            Err(InterferometerError::ModeOutOfRange { .. })
        ));
        assert!(net.push_phase(5, 0.1).is_err());
    }

    #[test]
    fn reck_round_trips_random_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [2usize, 3, 4, 5] {
            for _ in 0..4 {
                let u = ModeUnitary::new(random_unitary(n, &mut rng)).unwrap();
                let dec = reck_decompose(&u).unwrap();
                assert!(dec.network.bs_count() <= n * (n - 1) / 2);
                let rebuilt = dec.network.compose().unwrap();
                let phase = Complex64::from_polar(1.0, dec.global_phase);
                let recomposed = rebuilt.matrix().mapv(|z| z * phase);
                assert!(
                    max_abs_diff(&recomposed, u.matrix()) < 1e-8,
                    "n = {n}, err = {}",
                    max_abs_diff(&recomposed, u.matrix())
                );
            }
        }
    }

    #[test]
    fn reck_of_identity_is_empty() {
        let u = ModeUnitary::identity(4);
        let dec = reck_decompose(&u).unwrap();
        assert!(dec.network.elements.is_empty());
        assert_eq!(dec.global_phase, 0.0);
    }

    #[test]
    fn reck_rejects_non_unitary() {
        let mut m = identity(3);
        m[(0, 0)] = Complex64::new(2.0, 0.0);
        assert!(matches!(
            ModeUnitary::new(m),
            Err(InterferometerError::NotUnitary { .. })
        ));
    }

    #[test]
    fn lift_of_identity_is_identity() {
        let basis = FockBasis::max_total(2, 3).unwrap();
        let u = ModeUnitary::identity(2);
        let l = u.lift_to_fock(&basis).unwrap();
        assert!(max_abs_diff(&l, &identity(basis.size())) < 1e-12);
    }

    #[test]
    fn hong_ou_mandel_bunching() {
        let basis = FockBasis::max_total(2, 2).unwrap();
        let net = NetworkDescription::single_bs(2, 0, 1, BeamSplitterParams::fifty_fifty()).unwrap();
        let l = net.compose().unwrap().lift_to_fock(&basis).unwrap();
        let i11 = basis.index_of(&[1, 1].into()).unwrap();
        let i20 = basis.index_of(&[2, 0].into()).unwrap();
        let i02 = basis.index_of(&[0, 2].into()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(l[(i11, i11)].norm() < 1e-12);
        assert!((l[(i20, i11)] - Complex64::new(s, 0.0)).norm() < 1e-12);
        assert!((l[(i02, i11)] - Complex64::new(-s, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn lift_reproduces_permanent_on_all_singles() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let basis = FockBasis::max_total(3, 3).unwrap();
        let all: OccupationState = [1, 1, 1].into();
        let idx = basis.index_of(&all).unwrap();
        for _ in 0..5 {
            let u = random_unitary(3, &mut rng);
            let l = lift_matrix(&u, &basis).unwrap();
            let per = permanent_ryser(&u).unwrap();
            assert!((l[(idx, idx)] - per).norm() < 1e-11);
        }
    }

    #[test]
    fn lift_is_sector_unitary_and_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let basis = FockBasis::max_total(3, 3).unwrap();
        let a = random_unitary(3, &mut rng);
        let b = random_unitary(3, &mut rng);
        let la = lift_matrix(&a, &basis).unwrap();
        let lb = lift_matrix(&b, &basis).unwrap();
        let lab = lift_matrix(&a.dot(&b), &basis).unwrap();
        assert!(max_abs_diff(&lab, &la.dot(&lb)) < 1e-9);
        assert!(unitarity_defect(&la) < 1e-9);
        // Sector unitarity: the whole lift is unitary and block diagonal,
        // so check blocks explicitly on the two-photon sector.
        for (r, sr) in basis.states().iter().enumerate() {
            for (c, sc) in basis.states().iter().enumerate() {
                if sr.total() != sc.total() {
                    assert_eq!(la[(r, c)], ZERO);
                }
            }
        }
        let _ = dagger(&la);
    }

    #[test]
    fn factored_bs_matches_lift_on_small_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let basis = FockBasis::max_total(2, 3).unwrap();
        for _ in 0..6 {
            let theta = rng.gen_range(0.05..1.5);
            let phi = rng.gen_range(-3.0..3.0f64);
            let bs = BeamSplitterParams::from_angles(theta, phi);
            let net = NetworkDescription::single_bs(2, 0, 1, bs).unwrap();
            let l = net.compose().unwrap().lift_to_fock(&basis).unwrap();
            for k in 0..basis.size() {
                let psi = StateVector::basis_state(basis.clone(), basis.state(k)).unwrap();
                let via_factors = apply_bs_factored(&psi, bs, (0, 1)).unwrap();
                let via_lift = l.column(k).to_owned();
                let diff: f64 = via_factors
                    .amplitudes
                    .iter()
                    .zip(via_lift.iter())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
                assert!(diff < 1e-10, "state {k}: diff {diff}");
            }
        }
    }

    #[test]
    fn factored_bs_vacuum_invariance_and_single_photon() {
        let basis = FockBasis::max_total(2, 2).unwrap();
        let vac = StateVector::basis_state(basis.clone(), &[0, 0].into()).unwrap();
        let bs = BeamSplitterParams::from_angles(0.77, 1.3);
        let out = apply_bs_factored(&vac, bs, (0, 1)).unwrap();
        let v00 = basis.index_of(&[0, 0].into()).unwrap();
        assert!((out.amplitudes[v00] - ONE).norm() < 1e-12);

        let one = StateVector::basis_state(basis.clone(), &[1, 0].into()).unwrap();
        let out = apply_bs_factored(&one, bs, (0, 1)).unwrap();
        let i10 = basis.index_of(&[1, 0].into()).unwrap();
        let i01 = basis.index_of(&[0, 1].into()).unwrap();
        assert!((out.amplitudes[i10] - bs.t).norm() < 1e-12);
        assert!((out.amplitudes[i01] + bs.r.conj()).norm() < 1e-12);
    }

    #[test]
    fn factored_bs_rejects_zero_transmittance_with_occupation() {
        let basis = FockBasis::max_total(2, 2).unwrap();
        let psi = StateVector::basis_state(basis, &[0, 1].into()).unwrap();
        let bs = BeamSplitterParams::new(ZERO, ONE).unwrap();
        assert!(matches!(
            apply_bs_factored(&psi, bs, (0, 1)),
            Err(InterferometerError::SingularTransmittance)
        ));
    }

    #[test]
    fn network_json_round_trip() {
        let mut net = NetworkDescription::empty(3);
        net.push_bs(0, 1, BeamSplitterParams::from_angles(0.4, 0.9))
            .unwrap();
        net.push_phase(2, -1.25).unwrap();
        let json = serde_json::to_string(&net).unwrap();
        assert!(json.contains("\"type\":\"bs\""));
        assert!(json.contains("\"T\":"));
        let back: NetworkDescription = serde_json::from_str(&json).unwrap();
        assert_eq!(back.modes, net.modes);
        assert_eq!(back.elements.len(), net.elements.len());
        match (&back.elements[0], &net.elements[0]) {
            (
                Element::BeamSplitter { params: a, .. },
                Element::BeamSplitter { params: b, .. },
            ) => {
                assert!((a.t - b.t).norm() < 1e-12);
                assert!((a.r - b.r).norm() < 1e-12);
            }
            _ => panic!("element kind changed in round trip"),
        }
        assert_eq!(back.elements[1], net.elements[1]);
    }
}
