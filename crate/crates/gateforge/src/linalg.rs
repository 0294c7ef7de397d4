//! Small dense complex linear algebra used across the crate.
//!
//! Everything here is self-contained: a cyclic Jacobi eigensolver for
//! Hermitian matrices, Gauss-Hermite quadrature nodes, Haar-random
//! unitaries and a handful of matrix helpers. Problem sizes in this
//! crate are a few hundred at most, so O(n^3) dense methods are fine.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;

/// Complex matrix alias used throughout the crate.
pub type CMat = Array2<Complex64>;
/// Complex vector alias used throughout the crate.
pub type CVec = Array1<Complex64>;

pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    let mut out = a.t().to_owned();
    out.mapv_inplace(|z| z.conj());
    out
}

pub fn identity(n: usize) -> CMat {
    Array2::from_diag(&Array1::from_elem(n, ONE))
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Deviation of `a` from unitarity, max |(a a+ - I)_ij|.
pub fn unitarity_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    max_abs_diff(&a.dot(&dagger(a)), &identity(n))
}

/// Deviation of `a` from Hermiticity.
pub fn hermiticity_defect(a: &CMat) -> f64 {
    max_abs_diff(a, &dagger(a))
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diag().sum()
}

/// Frobenius norm.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Inner product <a|b> (conjugate-linear in the first argument).
pub fn vec_dot(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching unitary of
/// column eigenvectors, so `a = v diag(w) v+`. The input is symmetrized
/// first; callers are expected to pass matrices Hermitian to roundoff.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hermitian_eigen: matrix must be square");
    // Work on the explicitly Hermitian part to keep the iteration stable.
    let mut m = (a + &dagger(a)).mapv(|z| 0.5 * z);
    let mut v = identity(n);
    if n == 1 {
        return (vec![m[(0, 0)].re], v);
    }

    let off = |m: &CMat| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += m[(p, q)].norm_sqr();
            }
        }
        s.sqrt()
    };

    let scale = fro_norm(&m).max(1.0);
    let tol = 1e-15 * scale;
    for _sweep in 0..60 {
        if off(&m) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.norm() <= 1e-300 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let phase = apq / apq.norm();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotation R: R[p,p]=c, R[p,q]=s*phase, R[q,p]=-s*conj(phase), R[q,q]=c.
                let rpq = s * phase;
                let rqp = -s * phase.conj();
                // Columns of m: m <- m R
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * c + miq * rqp;
                    m[(i, q)] = mip * rpq + miq * c;
                }
                // Rows of m: m <- R+ m
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = mpj * c + mqj * rqp.conj();
                    m[(q, j)] = mpj * rpq.conj() + mqj * c;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                // Accumulate eigenvectors: v <- v R
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * rqp;
                    v[(i, q)] = vip * rpq + viq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let w: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vs = Array2::zeros((n, n));
    for (newcol, &oldcol) in order.iter().enumerate() {
        for i in 0..n {
            vs[(i, newcol)] = v[(i, oldcol)];
        }
    }
    (w, vs)
}

/// Hermitian square root of a positive semidefinite matrix.
///
/// Small negative eigenvalues from roundoff are clipped to zero.
pub fn sqrt_psd(a: &CMat) -> CMat {
    let (w, v) = hermitian_eigen(a);
    let n = a.nrows();
    let mut d = Array2::zeros((n, n));
    for (i, &wi) in w.iter().enumerate() {
        d[(i, i)] = Complex64::new(wi.max(0.0).sqrt(), 0.0);
    }
    v.dot(&d).dot(&dagger(&v))
}

/// Unitary polar factor of a square matrix, `t = c * polar(t)` with
/// `c = sqrt(t t+)`. Defined by the SVD `t = x s y+` as `x y+`, which
/// stays unitary even when `t` is singular (the limiting form for a
/// totally absorbing channel).
pub fn polar_unitary_factor(t: &CMat) -> CMat {
    let n = t.nrows();
    let (w, y) = hermitian_eigen(&dagger(t).dot(t)); // t+t = y s^2 y+
    let sig: Vec<f64> = w.iter().map(|&x| x.max(0.0).sqrt()).collect();
    let smax = sig.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let mut x = Array2::<Complex64>::zeros((n, n));
    let mut have: Vec<usize> = Vec::new();
    for j in 0..n {
        if sig[j] > 1e-12 * smax {
            let yj = y.column(j).to_owned();
            let xj = t.dot(&yj).mapv(|z| z / sig[j]);
            for i in 0..n {
                x[(i, j)] = xj[i];
            }
            have.push(j);
        }
    }
    // Complete null-space columns to a unitary by Gram-Schmidt.
    for j in 0..n {
        if have.contains(&j) {
            continue;
        }
        'seed: for seed in 0..n {
            let mut cand: CVec = Array1::zeros(n);
            cand[seed] = ONE;
            for k in 0..n {
                if k == j || x.column(k).iter().all(|z| z.norm() == 0.0) {
                    continue;
                }
                let col = x.column(k).to_owned();
                let ov = vec_dot(&col, &cand);
                for i in 0..n {
                    cand[i] -= ov * col[i];
                }
            }
            let nrm = vec_norm(&cand);
            if nrm > 1e-8 {
                for i in 0..n {
                    x[(i, j)] = cand[i] / nrm;
                }
                break 'seed;
            }
        }
    }
    x.dot(&dagger(&y))
}

/// Haar-distributed random unitary via QR of a complex Ginibre matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
    use rand::distributions::Distribution;
    let normal = StandardNormal;
    let mut g: CMat = Array2::zeros((n, n));
    for z in g.iter_mut() {
        *z = Complex64::new(normal.sample(rng), normal.sample(rng));
    }
    // Modified Gram-Schmidt, then fix column phases so the R diagonal is
    // positive (required for Haar uniformity).
    let mut q = g.clone();
    for j in 0..n {
        for k in 0..j {
            let qk = q.column(k).to_owned();
            let col = q.column(j).to_owned();
            let r = vec_dot(&qk, &col);
            for i in 0..n {
                q[(i, j)] -= r * qk[i];
            }
        }
        let col = q.column(j).to_owned();
        let nrm = vec_norm(&col);
        let gj = g.column(j).to_owned();
        let qj = q.column(j).to_owned();
        let rjj = vec_dot(&qj, &gj) / nrm;
        let phase = rjj / rjj.norm();
        for i in 0..n {
            q[(i, j)] = q[(i, j)] / nrm * phase.conj();
        }
    }
    q
}

/// Standard normal sampler (Box-Muller); avoids pulling in rand_distr.
struct StandardNormal;

impl rand::distributions::Distribution<f64> for StandardNormal {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.gen::<f64>();
            let v: f64 = rng.gen::<f64>();
            if u > f64::MIN_POSITIVE {
                return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
            }
        }
    }
}

/// Nodes and weights of n-point Gauss-Hermite quadrature
/// (weight exp(-x^2) on the real line), via the Golub-Welsch Jacobi
/// matrix. Weights sum to sqrt(pi).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut j: CMat = Array2::zeros((n, n));
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        j[(k - 1, k)] = Complex64::new(b, 0.0);
        j[(k, k - 1)] = Complex64::new(b, 0.0);
    }
    let (nodes, v) = hermitian_eigen(&j);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let weights: Vec<f64> = (0..n).map(|i| sqrt_pi * v[(0, i)].norm_sqr()).collect();
    (nodes, weights)
}

/// Kronecker product a (x) b.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Compensated (Kahan) summation; keeps reductions deterministic when
/// accumulated in a fixed order.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jacobi_diagonalizes_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 3, 8, 17] {
            let g = random_unitary(n, &mut rng);
            let mut d: CMat = Array2::zeros((n, n));
            for i in 0..n {
                d[(i, i)] = Complex64::new(i as f64 - 2.5, 0.0);
            }
            let a = g.dot(&d).dot(&dagger(&g));
            let (w, v) = hermitian_eigen(&a);
            // Reconstruction a = v w v+
            let mut dw: CMat = Array2::zeros((n, n));
            for i in 0..n {
                dw[(i, i)] = Complex64::new(w[i], 0.0);
            }
            let rec = v.dot(&dw).dot(&dagger(&v));
            assert!(max_abs_diff(&rec, &a) < 1e-10, "n={n}");
            assert!(unitarity_defect(&v) < 1e-11);
            for i in 1..n {
                assert!(w[i] >= w[i - 1]);
            }
        }
    }

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 2, 4, 9] {
            let u = random_unitary(n, &mut rng);
            assert!(unitarity_defect(&u) < 1e-12);
        }
    }

    #[test]
    fn gauss_hermite_integrates_moments() {
        let (x, w) = gauss_hermite(16);
        let total: f64 = w.iter().sum();
        assert!((total - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        // integral x^2 e^{-x^2} = sqrt(pi)/2
        let m2: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
        assert!((m2 - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
        // integral x^4 e^{-x^2} = 3 sqrt(pi)/4
        let m4: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(4)).sum();
        assert!((m4 - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn polar_factor_matches_direct_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 2;
        let u = random_unitary(n, &mut rng);
        let mut c: CMat = Array2::zeros((n, n));
        c[(0, 0)] = Complex64::new(0.9, 0.0);
        c[(1, 1)] = Complex64::new(0.3, 0.0);
        let t = c.dot(&u); // polar form by construction
        let v = polar_unitary_factor(&t);
        assert!(max_abs_diff(&v, &u) < 1e-10);
        // Singular case: one channel totally absorbed; factor stays unitary.
        c[(1, 1)] = ZERO;
        let t = c.dot(&u);
        let v = polar_unitary_factor(&t);
        assert!(unitarity_defect(&v) < 1e-10);
        assert!(max_abs_diff(&sqrt_psd(&t.dot(&dagger(&t))).dot(&v), &t) < 1e-10);
    }
}
