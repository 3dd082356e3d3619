//! Dense least-squares kernels: Householder QR for OLS and Cholesky for
//! symmetric positive-definite systems. Matrices are row-major slices.

use crate::{Error, Result, Scalar};

/// Ordinary least-squares fit.
#[derive(Debug, Clone)]
pub struct OlsFit<T> {
    pub coefficients: Vec<T>,
    /// Residual sum of squares.
    pub rss: T,
    /// Diagonal of `(XᵀX)⁻¹`, used for coefficient standard errors.
    pub xtx_inv_diag: Vec<T>,
    pub nobs: usize,
}

impl<T: Scalar> OlsFit<T> {
    pub fn df_resid(&self) -> usize {
        self.nobs - self.coefficients.len()
    }

    /// `RSS / (n - k)`.
    pub fn residual_variance(&self) -> T {
        self.rss / T::count(self.df_resid())
    }

    pub fn std_error(&self, j: usize) -> T {
        (self.residual_variance() * self.xtx_inv_diag[j]).sqrt()
    }
}

/// Solves `min ‖Xβ − y‖²` by Householder QR.
///
/// Fails with [`Error::RankDeficient`] when a column is (numerically) a linear
/// combination of the preceding ones.
pub fn ols<T: Scalar>(x: &[T], rows: usize, cols: usize, y: &[T]) -> Result<OlsFit<T>> {
    assert_eq!(x.len(), rows * cols);
    assert_eq!(y.len(), rows);
    if rows <= cols {
        return Err(Error::InsufficientData(format!(
            "{rows} observations for {cols} regressors"
        )));
    }
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    let col_norms: Vec<T> = (0..cols)
        .map(|j| (0..rows).map(|i| a[i * cols + j].powi(2)).sum::<T>().sqrt())
        .collect();
    let tol = T::epsilon().sqrt();

    for k in 0..cols {
        let norm = (k..rows).map(|i| a[i * cols + k].powi(2)).sum::<T>().sqrt();
        if col_norms[k] == T::zero() || norm <= tol * col_norms[k] {
            return Err(Error::RankDeficient { column: k });
        }
        let akk = a[k * cols + k];
        let alpha = if akk > T::zero() { -norm } else { norm };
        // v = a[k..,k] - alpha e_1
        let mut v: Vec<T> = (k..rows).map(|i| a[i * cols + k]).collect();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|&e| e * e).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        for j in k..cols {
            let dot: T = (k..rows).map(|i| v[i - k] * a[i * cols + j]).sum();
            let f = T::lit(2.0) * dot / vnorm2;
            for i in k..rows {
                a[i * cols + j] -= f * v[i - k];
            }
        }
        let dot: T = (k..rows).map(|i| v[i - k] * b[i]).sum();
        let f = T::lit(2.0) * dot / vnorm2;
        for i in k..rows {
            b[i] -= f * v[i - k];
        }
    }

    // back substitution on R β = Qᵀy
    let mut beta = vec![T::zero(); cols];
    for k in (0..cols).rev() {
        let mut s = b[k];
        for j in k + 1..cols {
            s -= a[k * cols + j] * beta[j];
        }
        beta[k] = s / a[k * cols + k];
    }
    let rss: T = b[cols..].iter().map(|&e| e * e).sum();

    // R⁻¹ (upper triangular); diag((XᵀX)⁻¹) = row norms² of R⁻¹
    let mut rinv = vec![T::zero(); cols * cols];
    for j in 0..cols {
        rinv[j * cols + j] = T::one() / a[j * cols + j];
        for i in (0..j).rev() {
            let mut s = T::zero();
            for k in i + 1..=j {
                s += a[i * cols + k] * rinv[k * cols + j];
            }
            rinv[i * cols + j] = -s / a[i * cols + i];
        }
    }
    let xtx_inv_diag = (0..cols)
        .map(|i| (i..cols).map(|j| rinv[i * cols + j].powi(2)).sum())
        .collect();

    Ok(OlsFit {
        coefficients: beta,
        rss,
        xtx_inv_diag,
        nobs: rows,
    })
}

/// Solves `A x = b` for symmetric positive-definite `A` (n × n, row-major).
pub fn cholesky_solve<T: Scalar>(a: &[T], n: usize, b: &[T]) -> Result<Vec<T>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= T::zero() || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut z = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_line() {
        // y = 2 + 3x
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let x: Vec<f64> = xs.iter().flat_map(|&v| [1.0, v]).collect();
        let y: Vec<f64> = xs.iter().map(|&v| 2.0 + 3.0 * v).collect();
        let fit = ols(&x, 5, 2, &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn ols_inverse_diagonal_matches_closed_form() {
        // simple regression: var(b1) factor = 1 / Sxx
        let xs = [1.0, 2.0, 4.0, 7.0, 11.0];
        let x: Vec<f64> = xs.iter().flat_map(|&v| [1.0, v]).collect();
        let y = [1.0, 3.0, 2.0, 5.0, 4.0];
        let fit = ols(&x, 5, 2, &y).unwrap();
        let m = xs.iter().sum::<f64>() / 5.0;
        let sxx: f64 = xs.iter().map(|v| (v - m).powi(2)).sum();
        assert!((fit.xtx_inv_diag[1] - 1.0 / sxx).abs() < 1e-12);
    }

    #[test]
    fn ols_flags_collinear_columns() {
        let x = [1.0, 5.0, 1.0, 5.0, 1.0, 5.0, 1.0, 5.0];
        let y = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(ols(&x, 4, 2, &y), Err(Error::RankDeficient { column: 1 })));
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let b = [1.0, 2.0, 3.0];
        let x = cholesky_solve(&a, 3, &b).unwrap();
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((r - b[i]).abs() < 1e-12);
        }
        assert!(cholesky_solve(&[1.0, 2.0, 2.0, 1.0], 2, &[1.0, 1.0]).is_err());
    }
}
