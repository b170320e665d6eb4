//! Small dense/tridiagonal helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigendecomposition `M = V Λ V⁻¹` of a general complex matrix.
#[derive(Debug, Clone)]
pub struct ComplexEigen {
    pub values: Vec<Complex64>,
    /// Right eigenvectors as columns, each of unit 2-norm.
    pub vectors: DMatrix<Complex64>,
    pub inverse: DMatrix<Complex64>,
    /// `‖V‖₁ ‖V⁻¹‖₁`
    pub condition: f64,
}

impl ComplexEigen {
    /// Schur form followed by back-substitution on the triangular factor.
    pub fn new(m: &DMatrix<Complex64>) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() {
            return Err(Error::Linalg("eigendecomposition needs a square matrix".into()));
        }
        if n == 0 {
            return Err(Error::Linalg("empty matrix".into()));
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Linalg("Schur iteration did not converge".into()))?;
        let (q, t) = schur.unpack();
        let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();

        let tiny = f64::EPSILON * scale;
        let mut y = DMatrix::<Complex64>::zeros(n, n);
        for k in 0..n {
            let lambda = values[k];
            y[(k, k)] = Complex64::new(1.0, 0.0);
            for j in (0..k).rev() {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in j + 1..=k {
                    acc += t[(j, i)] * y[(i, k)];
                }
                let mut denom = t[(j, j)] - lambda;
                if denom.norm() < tiny {
                    denom = Complex64::new(tiny, 0.0);
                }
                y[(j, k)] = -acc / denom;
            }
        }
        let mut vectors = q * y;
        for mut col in vectors.column_iter_mut() {
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            col /= Complex64::new(norm, 0.0);
        }
        let inverse = vectors
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Linalg("eigenvector matrix is singular (defective matrix)".into()))?;
        let condition = norm1(&vectors) * norm1(&inverse);
        Ok(Self {
            values,
            vectors,
            inverse,
            condition,
        })
    }
}

fn norm1(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves a tridiagonal system; `lower[i]` couples row `i+1` to column `i`,
/// `upper[i]` row `i` to column `i+1`. No pivoting.
pub fn tridiagonal_solve(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    assert!(rhs.len() == n && lower.len() + 1 == n.max(1) && upper.len() + 1 == n.max(1));
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let sub = if i > 0 { lower[i - 1] } else { Complex64::new(0.0, 0.0) };
        let prev_c = if i > 0 { c[i - 1] } else { Complex64::new(0.0, 0.0) };
        let prev_d = if i > 0 { d[i - 1] } else { Complex64::new(0.0, 0.0) };
        let pivot = diag[i] - sub * prev_c;
        if pivot.norm() == 0.0 || !pivot.is_finite() {
            return Err(Error::Linalg(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - sub * prev_d) / pivot;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        let next = d[i + 1];
        d[i] -= c[i] * next;
    }
    Ok(d)
}

/// Dormand–Prince 5(4) with error control for `y' = f(y)` on `[0, t_end]`.
pub fn dopri5<F>(f: F, y0: &DVector<f64>, t_end: f64, rtol: f64, atol: f64) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    if t_end <= 0.0 {
        return Ok(y0.clone());
    }
    let mut y = y0.clone();
    let mut t = 0.0;
    let mut h = (t_end * 1e-3).max(1e-12);
    let mut steps = 0usize;
    let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
    while t < t_end {
        steps += 1;
        if steps > 5_000_000 || h < 1e-14 * t_end.max(1.0) {
            return Err(Error::Integrator { t, achieved: h });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        k.clear();
        for s in 0..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    ys.axpy(h * A[s][j], kj, 1.0);
                }
            }
            k.push(f(&ys));
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for s in 0..7 {
            y5.axpy(h * B5[s], &k[s], 1.0);
            y4.axpy(h * B4[s], &k[s], 1.0);
        }
        let err = (0..y.len())
            .map(|i| {
                let sc = atol + rtol * y[i].abs().max(y5[i].abs());
                ((y5[i] - y4[i]) / sc).powi(2)
            })
            .sum::<f64>()
            / y.len() as f64;
        let err = err.sqrt();
        if !err.is_finite() {
            return Err(Error::Integrator { t, achieved: err });
        }
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[c(1.0, 2.0), c(0.3, 0.0), c(0.0, 0.0), c(-0.2, 0.1), c(2.0, 5.0), c(0.7, 0.0), c(0.0, 0.0), c(0.1, -0.4), c(0.5, 9.0)],
        );
        let e = ComplexEigen::new(&m).unwrap();
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let rebuilt = &e.vectors * lambda * &e.inverse;
        assert!((rebuilt - &m).norm() < 1e-12);
        assert!(e.condition < 100.0);
    }

    #[test]
    fn defective_matrix_has_huge_condition() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 1.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 1.0)]);
        match ComplexEigen::new(&m) {
            Ok(e) => assert!(e.condition > 1e12, "{}", e.condition),
            Err(Error::Linalg(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn thomas_matches_dense_solve() {
        let lower = [c(0.3, 0.1), c(-1.0, 0.0), c(0.2, 0.2)];
        let diag = [c(4.0, 1.0), c(3.0, -2.0), c(5.0, 0.0), c(2.0, 7.0)];
        let upper = [c(1.0, 0.0), c(0.0, 0.5), c(-0.7, 0.0)];
        let rhs = [c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0), c(0.5, 0.5)];
        let x = tridiagonal_solve(&lower, &diag, &upper, &rhs).unwrap();
        let mut m = DMatrix::<Complex64>::zeros(4, 4);
        for i in 0..4 {
            m[(i, i)] = diag[i];
            if i < 3 {
                m[(i + 1, i)] = lower[i];
                m[(i, i + 1)] = upper[i];
            }
        }
        let dense = m.lu().solve(&DVector::from_row_slice(&rhs)).unwrap();
        for i in 0..4 {
            assert!((x[i] - dense[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn dopri_exponential_decay() {
        let y0 = DVector::from_vec(vec![1.0, 2.0]);
        let y = dopri5(|y| DVector::from_vec(vec![-y[0], -3.0 * y[1] + y[0]]), &y0, 2.0, 1e-11, 1e-14).unwrap();
        let e1 = (-2.0f64).exp();
        // y1 = 2e^{-3t} + (e^{-t} - e^{-3t})/2
        let e3 = (-6.0f64).exp();
        assert!((y[0] - e1).abs() < 1e-9);
        assert!((y[1] - (2.0 * e3 + 0.5 * (e1 - e3))).abs() < 1e-9);
    }
}
