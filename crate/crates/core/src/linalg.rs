//! Dense determinant and singular-value helpers on top of faer.

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Determinant stored as `exp(log_abs) * phase` so that large systems never overflow.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LogDet {
    pub log_abs: f64,
    /// Unit-modulus phase factor, or zero for an exactly singular matrix.
    pub phase: Complex64,
}

impl LogDet {
    pub fn is_zero(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    /// `det / exp(log_scale)`.
    pub fn scaled(&self, log_scale: f64) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        self.phase * (self.log_abs - log_scale).exp()
    }

    pub fn value(&self) -> Complex64 {
        self.scaled(0.0)
    }
}

fn permutation_sign(fwd: &[usize]) -> f64 {
    let mut seen = vec![false; fwd.len()];
    let mut sign = 1.0;
    for start in 0..fwd.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = fwd[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// Determinant by LU with partial pivoting, accumulated in log form.
pub fn log_det(a: MatRef<'_, Complex64>) -> Result<LogDet> {
    if a.nrows() != a.ncols() {
        return Err(Error::Inconsistent(format!("determinant of a {}x{} matrix", a.nrows(), a.ncols())));
    }
    if a.nrows() == 0 {
        return Ok(LogDet { log_abs: 0.0, phase: Complex64::new(1.0, 0.0) });
    }
    let lu = a.partial_piv_lu();
    let u = lu.U();
    let (fwd, _) = lu.P().arrays();
    let mut log_abs = 0.0;
    let mut phase = Complex64::new(permutation_sign(fwd), 0.0);
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        if !d.is_finite() {
            return Err(Error::Factorization(format!("non-finite pivot at row {i}")));
        }
        let m = d.norm();
        if m == 0.0 {
            return Ok(LogDet { log_abs: f64::NEG_INFINITY, phase: Complex64::new(0.0, 0.0) });
        }
        log_abs += m.ln();
        phase *= d / m;
        // keep the running phase on the unit circle
        phase /= phase.norm();
    }
    Ok(LogDet { log_abs, phase })
}

/// Smallest singular values in increasing order with their right singular vectors.
#[derive(Clone, Debug)]
pub struct SingularPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    /// Largest singular value, kept for relative comparisons.
    pub sigma_max: f64,
}

/// The `count` smallest singular triplets of a square matrix via a dense SVD.
pub fn smallest_singular(a: &Mat<Complex64>, count: usize) -> Result<SingularPairs> {
    let n = a.ncols();
    if count == 0 || count > n || a.nrows() != n {
        return Err(Error::Inconsistent(format!("{count} singular values of a {}x{n} matrix", a.nrows())));
    }
    let svd = a.svd().map_err(|e| Error::Factorization(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let v = svd.V();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].re.total_cmp(&s[j].re));
    let values = order[..count].iter().map(|&i| s[i].re).collect();
    let vectors = order[..count]
        .iter()
        .map(|&c| (0..n).map(|r| v[(r, c)]).collect())
        .collect();
    Ok(SingularPairs {
        values,
        vectors,
        sigma_max: s[order[n - 1]].re,
    })
}

/// Distance of `p` from the span of unit vector `q`: `‖p − q (q* p)‖`.
pub fn misalignment(p: &[Complex64], q: &[Complex64]) -> f64 {
    let proj: Complex64 = q.iter().zip(p).map(|(a, b)| a.conj() * b).sum();
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b * proj).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_determinant() {
        let a = Mat::from_fn(2, 2, |i, j| if i != j { c(0.0, 0.0) } else { c(2.0 + i as f64, 0.0) });
        let d = log_det(a.as_ref()).unwrap().value();
        assert!((d - c(6.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let a = Mat::from_fn(3, 3, |i, j| c((i * 3 + j) as f64 * 0.7 - 1.0, ((i + 2 * j) as f64).sin()));
        let m = |i: usize, j: usize| a[(i, j)];
        let expect = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
        let d = log_det(a.as_ref()).unwrap().value();
        assert!((d - expect).norm() < 1e-13 * expect.norm(), "{d} vs {expect}");
    }

    #[test]
    fn permutation_flips_sign() {
        let a = Mat::from_fn(3, 3, |i, j| if (i + 1) % 3 == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!((log_det(a.as_ref()).unwrap().value() - c(1.0, 0.0)).norm() < 1e-14);
        let b = Mat::from_fn(2, 2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!((log_det(b.as_ref()).unwrap().value() + c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn large_determinants_stay_finite() {
        let a = Mat::from_fn(400, 400, |i, j| if i == j { c(1e3, 1e3) } else { c(0.0, 0.0) });
        let d = log_det(a.as_ref()).unwrap();
        assert!((d.log_abs - 400.0 * (1e3f64 * 2f64.sqrt()).ln()).abs() < 1e-9);
        assert!(!d.value().is_finite());
        assert!((d.scaled(d.log_abs).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_has_zero_determinant() {
        let a = Mat::from_fn(3, 3, |i, _| c(i as f64, 1.0));
        let d = log_det(a.as_ref()).unwrap();
        assert!(d.is_zero() || d.log_abs < -30.0);
    }

    #[test]
    fn identity_singular_values() {
        let a = Mat::from_fn(6, 6, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let s = smallest_singular(&a, 2).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-14 && (s.values[1] - 1.0).abs() < 1e-14);
        let norm: f64 = s.vectors[0].iter().map(|v| v.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rank_one_deficiency_is_found() {
        let n = 8;
        let a = Mat::from_fn(n, n, |i, j| {
            if i == j && i != 3 {
                c(1.0 + i as f64, 0.5)
            } else {
                c(0.0, 0.0)
            }
        });
        let s = smallest_singular(&a, 2).unwrap();
        assert!(s.values[0] < 1e-14);
        assert!((s.values[1] - (1.0f64 + 0.25).sqrt()).abs() < 1e-12);
        assert!((s.vectors[0][3].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn misalignment_ignores_phase() {
        let p = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let q: Vec<_> = p.iter().map(|v| v * Complex64::from_polar(1.0, 0.7)).collect();
        assert!(misalignment(&p, &q) < 1e-15);
        let r = vec![c(0.0, 0.8), c(0.6, 0.0)];
        assert!(misalignment(&p, &r) > 0.1);
    }
}
