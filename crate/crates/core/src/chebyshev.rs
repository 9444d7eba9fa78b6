//! Chebyshev series on an interval: Lobatto interpolation, evaluation,
//! differentiation and colleague-matrix rootfinding.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Chebyshev–Lobatto points `cos(πj/n)` mapped to `[a, b]`, `j = 0..=n`.
///
/// Points of the `n` grid are the even-indexed points of the `2n` grid.
pub fn lobatto_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    (0..=n).map(|j| mid + half * (PI * j as f64 / n as f64).cos()).collect()
}

/// `Σ c_m T_m(x(k))` with `x = (2k − a − b)/(b − a)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebSeries {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<Complex64>,
}

impl ChebSeries {
    /// Interpolant through values at `lobatto_points(a, b, n)` where `n = values.len() − 1`.
    pub fn from_lobatto_values(a: f64, b: f64, values: &[Complex64]) -> Self {
        let n = values.len() - 1;
        assert!(n >= 1, "need at least two samples");
        // cos(π m j / n) depends only on m j mod 2n
        let table: Vec<f64> = (0..2 * n).map(|q| (PI * q as f64 / n as f64).cos()).collect();
        let mut coeffs = vec![ZERO; n + 1];
        for (m, c) in coeffs.iter_mut().enumerate() {
            let mut s = ZERO;
            for (j, v) in values.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                s += v * (w * table[(m * j) % (2 * n)]);
            }
            let scale = if m == 0 || m == n { 1.0 } else { 2.0 };
            *c = s * (scale / n as f64);
        }
        ChebSeries { a, b, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    fn to_unit(&self, k: Complex64) -> Complex64 {
        (2.0 * k - (self.a + self.b)) / (self.b - self.a)
    }

    fn from_unit(&self, x: Complex64) -> Complex64 {
        0.5 * (self.a + self.b) + 0.5 * (self.b - self.a) * x
    }

    /// Clenshaw evaluation at a (possibly complex) `k`.
    pub fn eval(&self, k: Complex64) -> Complex64 {
        let x = self.to_unit(k);
        let mut b1 = ZERO;
        let mut b2 = ZERO;
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + 2.0 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs.first().copied().unwrap_or(ZERO) + x * b1 - b2
    }

    pub fn eval_real(&self, k: f64) -> Complex64 {
        self.eval(Complex64::new(k, 0.0))
    }

    /// d/dk of the series, in the same interval.
    pub fn derivative(&self) -> ChebSeries {
        let n = self.degree();
        if n == 0 {
            return ChebSeries { a: self.a, b: self.b, coeffs: vec![ZERO] };
        }
        let mut d = vec![ZERO; n + 2];
        for m in (0..n).rev() {
            d[m] = d[m + 2] + 2.0 * (m + 1) as f64 * self.coeffs[m + 1];
        }
        d[0] *= 0.5;
        d.truncate(n);
        let scale = 2.0 / (self.b - self.a);
        ChebSeries {
            a: self.a,
            b: self.b,
            coeffs: d.into_iter().map(|c| c * scale).collect(),
        }
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest of the last three coefficient moduli over the largest overall.
    pub fn trailing_ratio(&self) -> f64 {
        let m = self.max_coeff();
        if m == 0.0 {
            return 0.0;
        }
        let tail = self.coeffs.len().saturating_sub(3);
        self.coeffs[tail..].iter().map(|c| c.norm()).fold(0.0, f64::max) / m
    }

    /// Drop trailing coefficients below `tol · max|c|`.
    pub fn chopped(&self, tol: f64) -> ChebSeries {
        let cut = tol * self.max_coeff();
        let mut len = self.coeffs.len();
        while len > 1 && self.coeffs[len - 1].norm() <= cut {
            len -= 1;
        }
        ChebSeries { a: self.a, b: self.b, coeffs: self.coeffs[..len].to_vec() }
    }

    /// Upper bound of `|P|` on the interval from a dense sample.
    pub fn sup_norm(&self) -> f64 {
        let n = (4 * self.coeffs.len()).max(64);
        lobatto_points(self.a, self.b, n)
            .into_iter()
            .map(|k| self.eval_real(k).norm())
            .fold(0.0, f64::max)
    }

    /// Roots inside the Bernstein ellipse with parameter `rho` around `[a, b]`,
    /// sorted by real part and polished by Newton steps on the series.
    pub fn roots(&self, rho: f64) -> Result<Vec<Complex64>> {
        let c = &self.coeffs;
        let d = c.len() - 1;
        if d == 0 {
            return Ok(Vec::new());
        }
        let lead = c[d];
        if lead == ZERO {
            return Err(Error::Inconsistent("leading Chebyshev coefficient is zero; chop first".into()));
        }
        let unit_roots: Vec<Complex64> = if d == 1 {
            vec![-c[0] / c[1]]
        } else {
            let mut colleague = Mat::<Complex64>::from_fn(d, d, |i, j| {
                let mut v = ZERO;
                if i == 0 && j == 1 {
                    v = Complex64::new(1.0, 0.0);
                } else if i > 0 && (j + 1 == i || j == i + 1) {
                    v = Complex64::new(0.5, 0.0);
                }
                if i == d - 1 {
                    v -= c[j] / (2.0 * lead);
                }
                v
            });
            balance(&mut colleague);
            colleague
                .eigenvalues()
                .map_err(|e| Error::Factorization(format!("colleague eigenvalues: {e:?}")))?
        };
        let deriv = self.derivative();
        // Newton may only nudge an eigenvalue; larger moves would drag far
        // spurious eigenvalues onto genuine roots.
        let max_step = 1e-4 * 0.5 * (self.b - self.a);
        let mut out: Vec<Complex64> = unit_roots
            .into_iter()
            .filter(|x| x.is_finite() && bernstein_param(*x) <= rho + 0.1)
            .map(|x| self.polish(self.from_unit(x), &deriv, max_step))
            .filter(|k| bernstein_param(self.to_unit(*k)) <= rho)
            .collect();
        out.sort_by(|p, q| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)));
        Ok(out)
    }

    fn polish(&self, k0: Complex64, deriv: &ChebSeries, max_step: f64) -> Complex64 {
        let mut k = k0;
        let mut f = self.eval(k);
        for _ in 0..4 {
            let fp = deriv.eval(k);
            if fp == ZERO {
                break;
            }
            let next = k - f / fp;
            if (next - k0).norm() > max_step {
                break;
            }
            let fnext = self.eval(next);
            if !(fnext.norm() < f.norm()) {
                break;
            }
            k = next;
            f = fnext;
        }
        k
    }
}

/// Diagonal similarity scaling by powers of two so that row and column norms
/// are comparable (the usual preprocessing before a dense eigensolve).
fn balance(m: &mut Mat<Complex64>) {
    let n = m.nrows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].norm();
                    row += m[(i, j)].norm();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let s = col + row;
            let (mut c, mut r) = (col, row);
            while c < r / 2.0 {
                c *= 2.0;
                r /= 2.0;
                f *= 2.0;
            }
            while c >= r * 2.0 {
                c /= 2.0;
                r *= 2.0;
                f /= 2.0;
            }
            if (c + r) < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// `ρ` of the Bernstein ellipse through `x`, i.e. `|x ± sqrt(x² − 1)|` taking the larger.
pub fn bernstein_param(x: Complex64) -> f64 {
    let s = (x * x - 1.0).sqrt();
    (x + s).norm().max((x - s).norm())
}

/// Slope and R² of a least-squares line through `log10` of the coefficient
/// envelope, using coefficients until the envelope drops below `floor · max`.
pub fn envelope_decay(coeffs: &[Complex64], floor: f64) -> (f64, f64) {
    let mags: Vec<f64> = coeffs.iter().map(|c| c.norm()).collect();
    let top = mags.iter().cloned().fold(0.0, f64::max);
    let mut env = mags.clone();
    for m in (0..env.len().saturating_sub(1)).rev() {
        env[m] = env[m].max(env[m + 1]);
    }
    let pts: Vec<(f64, f64)> = env
        .iter()
        .enumerate()
        .take_while(|(_, e)| **e > floor * top)
        .map(|(m, e)| (m as f64, e.log10()))
        .collect();
    if pts.len() < 3 {
        return (f64::NAN, f64::NAN);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}
