//! Spectral radius of dense square matrices.
//!
//! Random reservoir matrices routinely have a complex conjugate pair as their
//! dominant eigenvalues, so plain single-vector power iteration does not
//! converge on them. [`spectral_radius_power`] therefore iterates a
//! two-dimensional subspace (orthogonal iteration with Rayleigh-Ritz on the
//! projected 2x2 problem), which handles real and complex dominant pairs
//! alike. Tolerance 1e-10, at most 10^4 iterations. Matrices of size N <= 64
//! are routed to a full dense eigendecomposition instead.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance of the power-iteration estimate.
pub const POWER_TOL: f64 = 1e-10;
/// Iteration cap before reporting non-convergence.
pub const POWER_MAX_ITER: usize = 10_000;
/// Sizes up to this use the dense eigendecomposition path.
pub const DENSE_CUTOFF: usize = 64;

fn check_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "spectral radius needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix entry".into()));
    }
    Ok(m.nrows())
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    let n = check_square(m)?;
    if n <= DENSE_CUTOFF {
        spectral_radius_dense(m)
    } else {
        spectral_radius_power(m, POWER_TOL, POWER_MAX_ITER)
    }
}

/// Full eigendecomposition route (real Schur form under the hood).
pub fn spectral_radius_dense(m: &DMatrix<f64>) -> Result<f64> {
    check_square(m)?;
    let eigs = m.clone().complex_eigenvalues();
    Ok(eigs.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Max modulus of the eigenvalues of a 2x2 matrix.
fn radius_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (0.5 * (tr + s)).abs().max((0.5 * (tr - s)).abs())
    } else {
        det.sqrt()
    }
}

/// Two-vector orthogonal iteration estimate of the spectral radius.
pub fn spectral_radius_power(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    let n = check_square(m)?;
    if n == 1 {
        return Ok(m[(0, 0)].abs());
    }

    // Deterministic start: constant vector plus an alternating one.
    let mut v1 = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut v2 = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
    let p = v1.dot(&v2);
    v2 -= &v1 * p;
    let norm2 = v2.norm();
    if norm2 > 0.0 {
        v2 /= norm2;
    } else {
        v2 = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
    }

    let mut estimate = f64::NAN;
    for it in 0..max_iter {
        let w1 = m * &v1;
        let w2 = m * &v2;

        let n1 = w1.norm();
        if n1 == 0.0 && w2.norm() == 0.0 {
            return Ok(0.0); // both directions annihilated
        }

        // Gram-Schmidt on (w1, w2); on collapse keep a 1-d estimate going.
        let (q1, q2) = if n1 > 0.0 {
            let q1 = &w1 / n1;
            let mut r2 = w2.clone();
            let proj = q1.dot(&r2);
            r2 -= &q1 * proj;
            let nr2 = r2.norm();
            if nr2 > 1e-14 * w2.norm().max(1.0) {
                (q1, Some(r2 / nr2))
            } else {
                (q1, None)
            }
        } else {
            (&w2 / w2.norm(), None)
        };

        let next = match &q2 {
            Some(q2) => {
                let a1 = m * &q1;
                let a2 = m * q2;
                radius_2x2(q1.dot(&a1), q1.dot(&a2), q2.dot(&a1), q2.dot(&a2))
            }
            None => (m * &q1).norm(),
        };

        if estimate.is_finite() && (next - estimate).abs() <= tol * next.abs().max(1.0) {
            return Ok(next);
        }
        estimate = next;
        v1 = q1;
        v2 = match q2 {
            Some(q) => q,
            None => {
                // Re-seed the second direction orthogonal to v1.
                let mut r = DVector::from_fn(n, |i, _| ((i * 2654435761 + it) % 97) as f64 / 97.0 - 0.5);
                let p = v1.dot(&r);
                r -= &v1 * p;
                let nr = r.norm();
                if nr > 0.0 {
                    r / nr
                } else {
                    v1.clone()
                }
            }
        };
    }
    Err(Error::NoConvergence { iterations: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;

    fn random_matrix(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = RandomSource::new(seed);
        DMatrix::from_fn(n, n, |_, _| rng.uniform_in(-1.0, 1.0))
    }

    #[test]
    fn identity_radius_is_one() {
        let m = DMatrix::<f64>::identity(2, 2);
        assert_eq!(spectral_radius(&m).unwrap(), 1.0);
        assert!((spectral_radius_power(&m, 1e-10, 100).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn diagonal_takes_max_modulus() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, -2.0]));
        assert!((spectral_radius(&m).unwrap() - 2.0).abs() < 1e-12);
        assert!((spectral_radius_power(&m, 1e-10, 1000).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_square() {
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(spectral_radius(&m), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_element(2, 2, f64::NAN);
        assert!(spectral_radius(&m).is_err());
    }

    // Power iteration cross-checked against the dense eigen solver on a
    // random 50x50 matrix (dominant pair is typically complex here).
    #[test]
    fn power_matches_dense_oracle() {
        let m = random_matrix(50, 7);
        let dense = spectral_radius_dense(&m).unwrap();
        let power = spectral_radius_power(&m, 1e-10, POWER_MAX_ITER).unwrap();
        assert!(
            (dense - power).abs() < 1e-8,
            "dense {dense} vs power {power}"
        );
    }

    #[test]
    fn power_matches_dense_above_cutoff() {
        let m = random_matrix(100, 11);
        let dense = spectral_radius_dense(&m).unwrap();
        let auto = spectral_radius(&m).unwrap();
        assert!((dense - auto).abs() < 1e-8);
    }

    #[test]
    fn zero_matrix_radius_zero() {
        let m = DMatrix::<f64>::zeros(80, 80);
        assert_eq!(spectral_radius(&m).unwrap(), 0.0);
    }

    #[test]
    fn scaling_homogeneity() {
        for seed in [1u64, 2, 3] {
            let m = random_matrix(40, seed);
            let r = spectral_radius(&m).unwrap();
            for c in [-3.0, 0.25, 2.0] {
                let rc = spectral_radius(&(&m * c)).unwrap();
                assert!(
                    (rc - c.abs() * r).abs() < 1e-9 * r.max(1.0),
                    "c={c} r={r} rc={rc}"
                );
            }
        }
    }
}
