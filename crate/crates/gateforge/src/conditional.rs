//! Measurement-conditioned operators: prepare ancilla modes, send
//! everything through a mode unitary, project the measured modes onto a
//! photon-count pattern, and read off the effective operator on the
//! signal modes.
//!
//! The conditional operator Y carries no extra normalization: the
//! success probability of the heralding pattern on signal state psi is
//! |Y psi|^2, and composition of conditional stages stays
//! multiplicative. Y is built from transition amplitudes alone and never
//! references a signal state; a brute-force path through the full
//! Fock-space lift is provided as an independent oracle.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{FockBasis, FockError, OccupationState, StateVector, Truncation};
use crate::interferometer::{InterferometerError, ModeUnitary, NetworkDescription};
use crate::linalg::{self, CMat};
use crate::permanent::{transition_amplitude, PermanentError, RYSER_LIMIT};

#[derive(Debug, Error)]
pub enum ConditionalError {
    #[error("signal modes must be distinct, in range, and not all modes")]
    BadSignalModes,
    #[error("ancilla occupation list has {got} entries, network has {expected} non-signal modes")]
    AncillaLengthMismatch { expected: usize, got: usize },
    #[error("pattern list has {got} entries, network has {expected} measured modes")]
    PatternLengthMismatch { expected: usize, got: usize },
    #[error("total photons {total} exceed the permanent size limit {limit}")]
    TooManyPhotons { total: u32, limit: usize },
    #[error("signal dimension mismatch: operator {operator}, state {state}")]
    DimensionMismatch { operator: usize, state: usize },
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Interferometer(#[from] InterferometerError),
    #[error(transparent)]
    Permanent(#[from] PermanentError),
}

/// Photon counts prepared in the ancilla (non-signal) modes, listed in
/// ascending mode order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncillaPrep(pub Vec<u32>);

impl AncillaPrep {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// Detected photon counts on the measured modes, ascending mode order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementPattern(pub Vec<u32>);

impl MeasurementPattern {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// The effective operator on the signal-mode Fock space after
/// post-selection. Not unitary in general; operator norm never exceeds 1.
#[derive(Debug, Clone)]
pub struct ConditionalOperator {
    pub matrix: CMat,
    pub signal_basis: Arc<FockBasis>,
}

/// Outcome of the proportionality-to-unitary check Y+Y = c I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitaryProportionality {
    /// Y+Y = scale * I within tolerance; scale is the state-independent
    /// success probability.
    Proportional { scale: f64 },
    Not { deviation: f64 },
}

impl ConditionalOperator {
    pub fn signal_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector, ConditionalError> {
        if psi.basis.size() != self.signal_dim() {
            return Err(ConditionalError::DimensionMismatch {
                operator: self.signal_dim(),
                state: psi.basis.size(),
            });
        }
        Ok(StateVector {
            basis: psi.basis.clone(),
            amplitudes: self.matrix.dot(&psi.amplitudes),
        })
    }

    /// Largest singular value of Y.
    pub fn operator_norm(&self) -> f64 {
        let g = linalg::dagger(&self.matrix).dot(&self.matrix);
        let (w, _) = linalg::hermitian_eigen(&g);
        w.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }

    /// Number of singular values above `tol` times the largest.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        let g = linalg::dagger(&self.matrix).dot(&self.matrix);
        let (w, _) = linalg::hermitian_eigen(&g);
        let smax = w.last().copied().unwrap_or(0.0).max(0.0).sqrt();
        if smax == 0.0 {
            return 0;
        }
        w.iter()
            .filter(|&&x| x.max(0.0).sqrt() > tol * smax)
            .count()
    }

    /// Check Y+Y = c I and report c or the deviation.
    pub fn proportionality_to_unitary(&self, tol: f64) -> UnitaryProportionality {
        let g = linalg::dagger(&self.matrix).dot(&self.matrix);
        let d = g.nrows();
        let c = linalg::trace(&g).re / d as f64;
        let mut dev = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j {
                    Complex64::new(c, 0.0)
                } else {
                    linalg::ZERO
                };
                dev = dev.max((g[(i, j)] - expect).norm());
            }
        }
        if dev <= tol {
            UnitaryProportionality::Proportional { scale: c }
        } else {
            UnitaryProportionality::Not { deviation: dev }
        }
    }
}

/// Success probability |Y psi|^2 of the heralding pattern.
pub fn success_probability(
    y: &ConditionalOperator,
    psi: &StateVector,
) -> Result<f64, ConditionalError> {
    let out = y.apply(psi)?;
    Ok(out.norm_sqr())
}

/// Mode layout of a conditional scenario: the ancilla modes are the
/// complement of the signal modes and are both prepared and measured.
#[derive(Debug, Clone)]
pub struct ModeLayout {
    pub network_modes: usize,
    pub signal_modes: Vec<usize>,
    pub ancilla_modes: Vec<usize>,
}

impl ModeLayout {
    pub fn new(network_modes: usize, signal_modes: &[usize]) -> Result<Self, ConditionalError> {
        let mut sig: Vec<usize> = signal_modes.to_vec();
        sig.sort_unstable();
        sig.dedup();
        if sig.len() != signal_modes.len()
            || sig.is_empty()
            || sig.len() >= network_modes
            || sig.iter().any(|&m| m >= network_modes)
        {
            return Err(ConditionalError::BadSignalModes);
        }
        let ancilla: Vec<usize> = (0..network_modes).filter(|m| !sig.contains(m)).collect();
        Ok(ModeLayout {
            network_modes,
            signal_modes: sig,
            ancilla_modes: ancilla,
        })
    }

    /// Merge a signal occupation and an ancilla occupation into a full
    /// network occupation vector.
    pub fn merge(&self, signal: &OccupationState, ancilla: &[u32]) -> OccupationState {
        let mut full = vec![0u32; self.network_modes];
        for (pos, &m) in self.signal_modes.iter().enumerate() {
            full[m] = signal.0[pos];
        }
        for (pos, &m) in self.ancilla_modes.iter().enumerate() {
            full[m] = ancilla[pos];
        }
        OccupationState(full)
    }
}

/// Build the conditional operator Y[k', k] = <pattern, k'| U |ancilla, k>
/// for signal Fock states up to `signal_cutoff` total photons, computed
/// entry by entry from permanent-based transition amplitudes.
pub fn conditional_operator(
    lambda: &ModeUnitary,
    ancilla: &AncillaPrep,
    pattern: &MeasurementPattern,
    signal_modes: &[usize],
    signal_cutoff: u32,
) -> Result<ConditionalOperator, ConditionalError> {
    let layout = ModeLayout::new(lambda.dim(), signal_modes)?;
    if ancilla.0.len() != layout.ancilla_modes.len() {
        return Err(ConditionalError::AncillaLengthMismatch {
            expected: layout.ancilla_modes.len(),
            got: ancilla.0.len(),
        });
    }
    if pattern.0.len() != layout.ancilla_modes.len() {
        return Err(ConditionalError::PatternLengthMismatch {
            expected: layout.ancilla_modes.len(),
            got: pattern.0.len(),
        });
    }
    let max_total = signal_cutoff + ancilla.total().max(pattern.total());
    if max_total as usize > RYSER_LIMIT {
        return Err(ConditionalError::TooManyPhotons {
            total: max_total,
            limit: RYSER_LIMIT,
        });
    }
    let signal_basis = FockBasis::max_total(layout.signal_modes.len(), signal_cutoff)?;
    let d = signal_basis.size();
    let mut y: CMat = Array2::zeros((d, d));
    for (col, k_in) in signal_basis.states().iter().enumerate() {
        let full_in = layout.merge(k_in, &ancilla.0);
        for (row, k_out) in signal_basis.states().iter().enumerate() {
            let full_out = layout.merge(k_out, &pattern.0);
            if full_in.total() != full_out.total() {
                continue;
            }
            y[(row, col)] = transition_amplitude(lambda.matrix(), &full_in, &full_out)?;
        }
    }
    Ok(ConditionalOperator {
        matrix: y,
        signal_basis,
    })
}

/// Independent oracle: embed |ancilla> x |psi> in the full Fock space,
/// apply the lifted network unitary, project the measured modes on the
/// pattern, and return the (unnormalized) signal state.
pub fn conditional_output_bruteforce(
    lambda: &ModeUnitary,
    ancilla: &AncillaPrep,
    pattern: &MeasurementPattern,
    signal_modes: &[usize],
    psi: &StateVector,
) -> Result<StateVector, ConditionalError> {
    let layout = ModeLayout::new(lambda.dim(), signal_modes)?;
    let signal_cutoff = match psi.basis.truncation() {
        Truncation::MaxTotal(n) => n,
        Truncation::FixedTotal(n) => n,
    };
    let full_cutoff = signal_cutoff + ancilla.total();
    let full_basis = FockBasis::max_total(layout.network_modes, full_cutoff)?;
    let mut full_in = StateVector::zero(full_basis.clone());
    for (k, amp) in psi.amplitudes.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let occ = layout.merge(psi.basis.state(k), &ancilla.0);
        let idx = full_basis.index_of(&occ)?;
        full_in.amplitudes[idx] = *amp;
    }
    let u = lambda.lift_to_fock(&full_basis)?;
    let full_out = u.dot(&full_in.amplitudes);
    let mut out = StateVector::zero(psi.basis.clone());
    for (idx, amp) in full_out.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let occ = full_basis.state(idx);
        let anc_part: Vec<u32> = layout.ancilla_modes.iter().map(|&m| occ.0[m]).collect();
        if anc_part != pattern.0 {
            continue;
        }
        let sig_part: Vec<u32> = layout.signal_modes.iter().map(|&m| occ.0[m]).collect();
        if let Ok(k) = psi.basis.index_of(&OccupationState(sig_part)) {
            out.amplitudes[k] = *amp;
        }
    }
    Ok(out)
}

/// Heralded output weight summed over every detection pattern; equals 1
/// for any normalized signal state because the overall evolution is
/// unitary ("the effective nonlinearity is created by the measurement,
/// the full dynamics stays linear").
pub fn pattern_completeness(
    lambda: &ModeUnitary,
    ancilla: &AncillaPrep,
    signal_modes: &[usize],
    psi: &StateVector,
) -> Result<f64, ConditionalError> {
    let layout = ModeLayout::new(lambda.dim(), signal_modes)?;
    let signal_cutoff = match psi.basis.truncation() {
        Truncation::MaxTotal(n) => n,
        Truncation::FixedTotal(n) => n,
    };
    let full_cutoff = signal_cutoff + ancilla.total();
    let full_basis = FockBasis::max_total(layout.network_modes, full_cutoff)?;
    let mut full_in = StateVector::zero(full_basis.clone());
    for (k, amp) in psi.amplitudes.iter().enumerate() {
        let occ = layout.merge(psi.basis.state(k), &ancilla.0);
        let idx = full_basis.index_of(&occ)?;
        full_in.amplitudes[idx] = *amp;
    }
    let u = lambda.lift_to_fock(&full_basis)?;
    let full_out = u.dot(&full_in.amplitudes);
    // Group the output weight by measured-mode occupation: each group is
    // one detection pattern's heralded weight.
    let mut by_pattern: std::collections::HashMap<Vec<u32>, f64> = std::collections::HashMap::new();
    for (idx, amp) in full_out.iter().enumerate() {
        let occ = full_basis.state(idx);
        let key: Vec<u32> = layout.ancilla_modes.iter().map(|&m| occ.0[m]).collect();
        *by_pattern.entry(key).or_insert(0.0) += amp.norm_sqr();
    }
    Ok(by_pattern.values().sum())
}

/// The three closed-form special cases of an N-mode network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialCase {
    /// Ancillas all single photons, all detectors see vacuum:
    /// Y proportional to (a+)^(N-1), with the signal argument rescaled by
    /// L11^n (the surviving creation operators pick up L11 per signal
    /// photon on the way through).
    AllSinglesDetectVacuum,
    /// Ancillas all vacuum, all detectors see one photon:
    /// Y proportional to a^(N-1), same L11^n rescaling.
    VacuumDetectSingles,
    /// Ancillas all single photons, all detectors see one photon:
    /// Y diagonal; on the N-dimensional signal space the diagonal is a
    /// polynomial of degree N-1 in the photon number.
    SinglesDetectSingles,
}

/// Result of fitting the computed conditional operator to the stated
/// closed form.
#[derive(Debug, Clone)]
pub struct SpecialCaseFit {
    pub case: SpecialCase,
    /// For the ladder-power cases: the single proportionality constant.
    /// For the polynomial case: the diagonal values P(0), P(1), ....
    pub coefficients: Vec<Complex64>,
    /// Max deviation between Y and the fitted form.
    pub residual: f64,
}

/// Verify the computed conditional operator of an N-mode network against
/// the closed form predicted for one of the three special preparations.
pub fn special_case_operator(
    lambda: &ModeUnitary,
    case: SpecialCase,
    signal_cutoff: u32,
) -> Result<SpecialCaseFit, ConditionalError> {
    let n = lambda.dim();
    let n_anc = n - 1;
    let (anc, pat) = match case {
        SpecialCase::AllSinglesDetectVacuum => (vec![1u32; n_anc], vec![0u32; n_anc]),
        SpecialCase::VacuumDetectSingles => (vec![0u32; n_anc], vec![1u32; n_anc]),
        SpecialCase::SinglesDetectSingles => (vec![1u32; n_anc], vec![1u32; n_anc]),
    };
    let y = conditional_operator(
        lambda,
        &AncillaPrep(anc),
        &MeasurementPattern(pat),
        &[0],
        signal_cutoff,
    )?;
    let d = y.signal_dim();
    let p = n_anc as i64; // ladder power N-1
    let mut fit = SpecialCaseFit {
        case,
        coefficients: Vec::new(),
        residual: 0.0,
    };
    let l11 = lambda.matrix()[(0, 0)];
    match case {
        SpecialCase::AllSinglesDetectVacuum | SpecialCase::VacuumDetectSingles => {
            // Expected entries C * L11^min(k_in, k_out) * sqrt((k+1)...(k+p)),
            // shifted by +-p.
            let ladder = |k: i64| -> f64 {
                (1..=p).map(|s| (k + s) as f64).product::<f64>().sqrt()
            };
            let (dr, dc) = if case == SpecialCase::AllSinglesDetectVacuum {
                (p, 0)
            } else {
                (0, p)
            };
            // Fit C on the k = 0 entry, where the rescaling is trivial.
            let mut c = linalg::ZERO;
            if dr.max(dc) < d as i64 {
                c = y.matrix[(dr as usize, dc as usize)] / ladder(0);
            }
            fit.coefficients.push(c);
            fit.coefficients.push(l11);
            let mut expect: CMat = Array2::zeros((d, d));
            for k in 0..d as i64 {
                let (row, col) = (k + dr, k + dc);
                if row < d as i64 && col < d as i64 {
                    expect[(row as usize, col as usize)] = c * l11.powu(k as u32) * ladder(k);
                }
            }
            fit.residual = linalg::max_abs_diff(&y.matrix, &expect);
        }
        SpecialCase::SinglesDetectSingles => {
            // Y must be diagonal. On the N-dimensional signal space (k =
            // 0..N-1) the N diagonal values determine the unique
            // degree-(N-1) polynomial in the photon number; report its
            // monomial coefficients. Beyond k = N-1 the operator picks up
            // the L11^n rescaling and the polynomial form no longer
            // applies, so the residual measures off-diagonality only.
            let mut off = 0.0f64;
            for r in 0..d {
                for c in 0..d {
                    if r != c {
                        off = off.max(y.matrix[(r, c)].norm());
                    }
                }
            }
            let m = d.min(n);
            let nodes: Vec<f64> = (0..m).map(|k| k as f64).collect();
            let values: Vec<Complex64> = (0..m).map(|k| y.matrix[(k, k)]).collect();
            fit.coefficients = polyfit_monomial(&nodes, &values);
            fit.residual = off;
        }
    }
    Ok(fit)
}

/// Interpolating polynomial through (nodes[k], values[k]) in monomial
/// coefficients (constant first), by Lagrange expansion. Node counts here
/// are tiny (<= 4).
fn polyfit_monomial(nodes: &[f64], values: &[Complex64]) -> Vec<Complex64> {
    let m = nodes.len();
    let mut coeffs = vec![linalg::ZERO; m];
    for (k, &vk) in values.iter().enumerate() {
        // Lagrange basis polynomial l_k(x) = prod_{j != k} (x - x_j) / (x_k - x_j)
        let mut basis = vec![linalg::ZERO; m];
        basis[0] = Complex64::new(1.0, 0.0);
        let mut denom = 1.0;
        let mut degree = 0;
        for (j, &xj) in nodes.iter().enumerate() {
            if j == k {
                continue;
            }
            denom *= nodes[k] - xj;
            // multiply basis by (x - xj) in place
            for idx in (0..=degree + 1).rev() {
                let lower = if idx > 0 { basis[idx - 1] } else { linalg::ZERO };
                basis[idx] = lower - basis[idx] * xj;
            }
            degree += 1;
        }
        for idx in 0..m {
            coeffs[idx] += vk * basis[idx] / denom;
        }
    }
    coeffs
}

/// Serializable description of a conditional-gate scenario; the schema
/// of `simulate --scenario` inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub network: NetworkDescription,
    pub ancilla: Vec<u32>,
    pub pattern: Vec<u32>,
    pub signal_modes: Vec<usize>,
    pub cutoff: u32,
    /// Optional input amplitudes on the signal basis, as [re, im] pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<[f64; 2]>>,
}

impl Scenario {
    pub fn conditional_operator(&self) -> Result<ConditionalOperator, ConditionalError> {
        let u = self.network.compose()?;
        conditional_operator(
            &u,
            &AncillaPrep(self.ancilla.clone()),
            &MeasurementPattern(self.pattern.clone()),
            &self.signal_modes,
            self.cutoff,
        )
    }
}
