//! Exact matrix permanents and permanent-based multi-photon transition
//! amplitudes.
//!
//! The permanent per A = sum over all permutations s of prod_i A[i, s(i)]
//! (the full symmetric group) is what makes
//! per Lambda = <1...1| U |1...1> hold for the Fock-space lift of a mode
//! unitary; both routes are cross-checked in the test suites. Two
//! implementations are kept: a definition-level expansion over
//! permutations (the oracle) and Ryser's inclusion-exclusion formula with
//! Gray-code subset iteration (the workhorse the gate-synthesis
//! optimizer calls in its inner loop).

use num_complex::Complex64;
use thiserror::Error;

use crate::fock::OccupationState;
use crate::linalg::{CMat, ONE, ZERO};

/// Size guard for the O(n! n) definition-level expansion.
pub const NAIVE_LIMIT: usize = 10;
/// Size guard for the O(2^n n) Ryser evaluation.
pub const RYSER_LIMIT: usize = 30;

#[derive(Debug, Error)]
pub enum PermanentError {
    #[error("matrix must be square and nonempty")]
    NotSquare,
    #[error("matrix size {n} exceeds the limit {limit} for this algorithm")]
    TooLarge { n: usize, limit: usize },
    #[error("row/column index out of range")]
    IndexOutOfRange,
    #[error("photon numbers differ: input total {input}, output total {output}")]
    PhotonNumberMismatch { input: u32, output: u32 },
    #[error("occupation vector has {got} modes, matrix has {expected}")]
    ModeCountMismatch { expected: usize, got: usize },
}

fn check_square(m: &CMat) -> Result<usize, PermanentError> {
    let n = m.nrows();
    if n == 0 || n != m.ncols() {
        return Err(PermanentError::NotSquare);
    }
    Ok(n)
}

/// Permanent by direct expansion over all permutations. Oracle-grade;
/// guarded to n <= 10.
pub fn permanent_naive(m: &CMat) -> Result<Complex64, PermanentError> {
    let n = check_square(m)?;
    if n > NAIVE_LIMIT {
        return Err(PermanentError::TooLarge {
            n,
            limit: NAIVE_LIMIT,
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = ZERO;
    // Heap's algorithm enumerates every permutation exactly once.
    let mut c = vec![0usize; n];
    let product = |perm: &[usize]| -> Complex64 {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| m[(i, j)])
            .fold(ONE, |acc, z| acc * z)
    };
    total += product(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            total += product(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(total)
}

/// Permanent by Ryser's inclusion-exclusion formula with Gray-code
/// subset iteration, O(2^n n).
pub fn permanent_ryser(m: &CMat) -> Result<Complex64, PermanentError> {
    let n = check_square(m)?;
    if n > RYSER_LIMIT {
        return Err(PermanentError::TooLarge {
            n,
            limit: RYSER_LIMIT,
        });
    }
    // per A = (-1)^n sum_{S nonempty} (-1)^{|S|} prod_i sum_{j in S} A[i,j].
    let mut row_sums = vec![ZERO; n];
    let mut total = ZERO;
    let mut parity_odd = false; // |S| parity; starts empty
    let end: u64 = 1u64 << n;
    for k in 1..end {
        let j = k.trailing_zeros() as usize; // column toggled by this Gray step
        let gray = k ^ (k >> 1);
        if gray & (1u64 << j) != 0 {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs += m[(i, j)];
            }
        } else {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs -= m[(i, j)];
            }
        }
        parity_odd = !parity_odd;
        let prod = row_sums.iter().copied().fold(ONE, |acc, z| acc * z);
        if parity_odd {
            total -= prod;
        } else {
            total += prod;
        }
    }
    if n % 2 == 1 {
        total = -total;
    }
    Ok(total)
}

/// Permanent of the minor with `delete_row` and `delete_col` removed.
pub fn subpermanent(
    m: &CMat,
    delete_row: usize,
    delete_col: usize,
) -> Result<Complex64, PermanentError> {
    let n = check_square(m)?;
    if n < 2 {
        return Err(PermanentError::NotSquare);
    }
    if delete_row >= n || delete_col >= n {
        return Err(PermanentError::IndexOutOfRange);
    }
    let mut minor = CMat::zeros((n - 1, n - 1));
    let mut r = 0;
    for i in 0..n {
        if i == delete_row {
            continue;
        }
        let mut c = 0;
        for j in 0..n {
            if j == delete_col {
                continue;
            }
            minor[(r, c)] = m[(i, j)];
            c += 1;
        }
        r += 1;
    }
    permanent_ryser(&minor)
}

/// The repeated-index matrix of a transition: row i of `m` is repeated
/// `n_out[i]` times, column j `n_in[j]` times.
pub fn repeated_matrix(
    m: &CMat,
    n_in: &OccupationState,
    n_out: &OccupationState,
) -> Result<CMat, PermanentError> {
    let n = check_square(m)?;
    if n_in.modes() != n || n_out.modes() != n {
        return Err(PermanentError::ModeCountMismatch {
            expected: n,
            got: if n_in.modes() != n {
                n_in.modes()
            } else {
                n_out.modes()
            },
        });
    }
    let rows: Vec<usize> = multiplicity_list(n_out);
    let cols: Vec<usize> = multiplicity_list(n_in);
    let k = rows.len();
    let mut rep = CMat::zeros((k, k));
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            rep[(r, c)] = m[(i, j)];
        }
    }
    Ok(rep)
}

fn multiplicity_list(occ: &OccupationState) -> Vec<usize> {
    let mut out = Vec::with_capacity(occ.total() as usize);
    for (mode, &n) in occ.0.iter().enumerate() {
        for _ in 0..n {
            out.push(mode);
        }
    }
    out
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Multi-photon transition amplitude through a mode matrix:
/// `<n_out| U |n_in> = per(rep) / sqrt(prod n_in! prod n_out!)` where
/// `rep` repeats column j `n_in[j]` times and row i `n_out[i]` times.
/// Totals must match; a mismatch is an error, not zero.
pub fn transition_amplitude(
    m: &CMat,
    n_in: &OccupationState,
    n_out: &OccupationState,
) -> Result<Complex64, PermanentError> {
    if n_in.total() != n_out.total() {
        return Err(PermanentError::PhotonNumberMismatch {
            input: n_in.total(),
            output: n_out.total(),
        });
    }
    if n_in.total() == 0 {
        // Vacuum to vacuum: empty permanent is 1.
        check_square(m)?;
        if n_in.modes() != m.nrows() || n_out.modes() != m.nrows() {
            return Err(PermanentError::ModeCountMismatch {
                expected: m.nrows(),
                got: n_in.modes().max(n_out.modes()),
            });
        }
        return Ok(ONE);
    }
    let rep = repeated_matrix(m, n_in, n_out)?;
    let per = permanent_ryser(&rep)?;
    let mut norm = 1.0;
    for &k in &n_in.0 {
        norm *= factorial(k);
    }
    for &k in &n_out.0 {
        norm *= factorial(k);
    }
    Ok(per / norm.sqrt())
}
