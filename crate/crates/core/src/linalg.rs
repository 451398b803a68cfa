//! Small dense complex linear-algebra helpers shared by the optimizers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// `log2 det(M)` for a Hermitian positive-definite `M`, read off the Cholesky
/// diagonal. Returns `None` if the factorization fails.
pub fn log2_det_hpd(m: &CMatrix) -> Option<f64> {
    let chol = hpd_cholesky(m)?;
    Some(log2_det_from_cholesky(&chol))
}

/// Cholesky factor of a Hermitian positive-definite matrix.
///
/// The complex square root never fails, so a non-positive pivot shows up as
/// a non-real diagonal entry of `L`; that case is rejected here.
pub fn hpd_cholesky(m: &CMatrix) -> Option<Cholesky<C64, Dyn>> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    let ok = (0..l.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.im.abs() <= 1e-12 * d.re
    });
    ok.then_some(chol)
}

pub fn log2_det_from_cholesky(chol: &Cholesky<C64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    (0..l.nrows()).map(|i| l[(i, i)].re.log2()).sum::<f64>() * 2.0
}

/// `log2 det(I + M)` for Hermitian PSD `M`.
pub fn log2_det_identity_plus(m: &CMatrix) -> Option<f64> {
    let n = m.nrows();
    log2_det_hpd(&(CMatrix::identity(n, n) + m))
}

pub fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Maximum entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of a Hermitian matrix (ascending order not guaranteed).
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    sym.symmetric_eigenvalues().iter().copied().collect()
}

/// Dominant eigenpair of a Hermitian PSD matrix.
#[derive(Debug, Clone)]
pub struct TopEigen {
    pub value: f64,
    pub vector: CVector,
    pub iterations: usize,
}

/// Power iteration for the dominant eigenpair of the Gram matrix `AᴴA`,
/// applied as `x ← Aᴴ(Ax)` so the Gram matrix is never formed.
///
/// The start vector is fixed (`x_k ∝ e^{j·0.61803·k}·(1 + k/n)`) so ties and
/// near-ties resolve identically on every run. Iteration stops once the
/// Rayleigh quotient changes by at most `tol` relative.
pub fn gram_power_iteration(a: &CMatrix, tol: f64, max_iter: usize) -> TopEigen {
    let n = a.ncols();
    let mut x = CVector::from_fn(n, |k, _| {
        let k = k as f64;
        C64::from_polar(1.0 + k / n.max(1) as f64, 0.618_033_988_749_895 * k)
    });
    let norm = x.norm();
    if norm > 0.0 {
        x /= C64::new(norm, 0.0);
    }
    let mut value = 0.0;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let y = a.adjoint() * (a * &x);
        // For unit x, xᴴ AᴴA x = ‖Ax‖², so Re(xᴴy) is the Rayleigh quotient.
        let rq = x.dotc(&y).re;
        let ynorm = y.norm();
        if ynorm == 0.0 {
            return TopEigen { value: 0.0, vector: x, iterations };
        }
        x = y / C64::new(ynorm, 0.0);
        let done = (rq - value).abs() <= tol * rq.abs();
        value = rq;
        if done {
            break;
        }
    }
    // Final quotient evaluated at the returned vector.
    value = (a * &x).norm_squared();
    TopEigen { value, vector: x, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        CMatrix::from_fn(rows, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let re = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let im = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            C64::new(re, im)
        })
    }

    #[test]
    fn log_det_matches_determinant_on_small_case() {
        let x = sample_matrix(3, 3, 7);
        let m = CMatrix::identity(3, 3) + &x * x.adjoint();
        let det = m.determinant();
        assert!(det.im.abs() < 1e-12);
        let ld = log2_det_hpd(&m).unwrap();
        assert!((ld - det.re.log2()).abs() < 1e-12);
    }

    #[test]
    fn log_det_rejects_indefinite() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]));
        assert!(log2_det_hpd(&m).is_none());
    }

    #[test]
    fn power_iteration_agrees_with_dense_eigensolver() {
        for seed in 0..20 {
            let a = sample_matrix(3, 20, seed);
            let top = gram_power_iteration(&a, 1e-12, 100_000);
            let gram = a.adjoint() * &a;
            let dense = hermitian_eigenvalues(&gram).into_iter().fold(f64::MIN, f64::max);
            assert!((top.value - dense).abs() <= 1e-9 * dense, "seed {seed}: {} vs {}", top.value, dense);
            assert!((top.vector.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn power_iteration_zero_matrix() {
        let a = CMatrix::zeros(3, 5);
        let top = gram_power_iteration(&a, 1e-12, 100);
        assert_eq!(top.value, 0.0);
    }

    #[test]
    fn hermitian_defect_detects_asymmetry() {
        let x = sample_matrix(4, 4, 3);
        assert!(hermitian_defect(&(&x * x.adjoint())) < 1e-15);
        assert!(hermitian_defect(&x) > 1e-3);
    }
}
