//! Bessel and Hankel functions of low order and the radial derivatives of the
//! oscillatory biharmonic Green's function
//!
//! ```text
//! g(r) = (1/k²) ( log(r)/(2π) + (i/4) H₀⁽¹⁾(k r) )
//! ```
//!
//! Three regimes are used for `|z|`, `z = k r`:
//!
//! * `|z| < 1`: ascending series. For `g` the logarithm of the Laplace part is
//!   merged with the logarithm inside `Y₀` so the leading `r² log r` behaviour
//!   comes out of the series directly instead of a difference of large numbers.
//! * `1 ≤ |z| < 18`: Miller backward recurrence for `J_n`, with `Y₀`, `Y₁`
//!   recovered from Neumann series in the same `J_n`.
//! * `|z| ≥ 18`: Hankel's asymptotic expansion, whose smallest term there is
//!   below `e^{-36}`.

use std::f64::consts::{FRAC_2_PI, PI};
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this modulus the ascending series are used.
pub const SERIES_RADIUS: f64 = 1.0;
/// At and above this modulus the asymptotic expansion is used.
pub const ASYMPTOTIC_RADIUS: f64 = 18.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `g(r)` and its first three radial derivatives, together with the Hankel
/// values `H₀⁽¹⁾(kr)` and `H₁⁽¹⁾(kr)` that produced them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialKernelValues {
    /// `g`, `g'`, `g''`, `g'''` with respect to `r`.
    pub g: [Complex64; 4],
    pub h0: Complex64,
    pub h1: Complex64,
}

/// Minimal arithmetic shared by the real and complex recurrences.
trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Add<f64, Output = Self>
{
    fn from_re(x: f64) -> Self;
    fn ln(self) -> Self;
    fn recip(self) -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn from_re(x: f64) -> Self {
        x
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn ln(self) -> Self {
        Complex64::ln(self)
    }
    fn recip(self) -> Self {
        Complex64::new(1.0, 0.0) / self
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// `[J₀, J₁, J₂, Y₀, Y₁]` at `z`, for `0 < |z| < ASYMPTOTIC_RADIUS`.
fn jy_small<T: Scalar>(z: T) -> [T; 5] {
    if z.modulus() < SERIES_RADIUS {
        jy_series(z)
    } else {
        jy_miller(z)
    }
}

fn jy_series<T: Scalar>(z: T) -> [T; 5] {
    let half = z * 0.5;
    let mq = -(half * half);
    let log_term = half.ln() + EULER_GAMMA;

    // J0, J1 and the harmonic-number sums for Y0 and Y1.
    let mut j0 = T::from_re(0.0);
    let mut j1s = T::from_re(0.0);
    let mut y0s = T::from_re(0.0);
    let mut y1s = T::from_re(0.0);
    let mut pow = T::from_re(1.0); // (-q)^m
    let mut fact_m = 1.0; // m!
    let mut harmonic = 0.0; // H_m
    for m in 0..40usize {
        if m > 0 {
            pow = pow * mq;
            fact_m *= m as f64;
            harmonic += 1.0 / m as f64;
        }
        let t0 = pow * (1.0 / (fact_m * fact_m));
        let t1 = pow * (1.0 / (fact_m * fact_m * (m + 1) as f64));
        j0 = j0 + t0;
        j1s = j1s + t1;
        y0s = y0s + t0 * harmonic;
        // psi(m+1) + psi(m+2) = 2 H_m + 1/(m+1) - 2 gamma
        y1s = y1s + t1 * (2.0 * harmonic + 1.0 / (m + 1) as f64 - 2.0 * EULER_GAMMA);
        if m > 2 && t0.modulus() < 1e-18 * j0.modulus().max(1e-300) {
            break;
        }
    }
    let j1 = half * j1s;
    let j2 = half * half * {
        // J2 = (z/2)^2 sum (-q)^m / (m! (m+2)!)
        let mut s = T::from_re(0.0);
        let mut pow = T::from_re(1.0);
        let mut fm = 1.0;
        let mut fm2 = 2.0;
        for m in 0..40usize {
            if m > 0 {
                pow = pow * mq;
                fm *= m as f64;
                fm2 *= (m + 2) as f64;
            }
            let t = pow * (1.0 / (fm * fm2));
            s = s + t;
            if m > 2 && t.modulus() < 1e-18 * s.modulus().max(1e-300) {
                break;
            }
        }
        s
    };
    let y0 = (log_term * j0 - y0s) * FRAC_2_PI;
    let y1 = z.recip() * (-FRAC_2_PI) + half.ln() * j1 * FRAC_2_PI - half * y1s * (1.0 / PI);
    [j0, j1, j2, y0, y1]
}

fn jy_miller<T: Scalar>(z: T) -> [T; 5] {
    let az = z.modulus();
    let mut top = (1.5 * az) as usize + 40;
    if top % 2 == 1 {
        top += 1;
    }
    let two_over_z = z.recip() * 2.0;

    let mut next = T::from_re(0.0); // j_{n+1}
    let mut cur = T::from_re(1.0); // j_n
    let mut norm = T::from_re(0.0);
    let mut sum_y0 = T::from_re(0.0);
    let mut sum_y1 = T::from_re(0.0);
    let mut saved = [T::from_re(0.0); 3];

    let mut n = top;
    loop {
        if n <= 2 {
            saved[n] = cur;
        }
        if n >= 2 && n % 2 == 0 {
            let k = n / 2;
            norm = norm + cur * 2.0;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum_y0 = sum_y0 + cur * (sign / k as f64);
        } else if n % 2 == 1 {
            // J_{2m+1} enters the Y1 sum through terms k = m + 1 and k = m.
            let m = (n - 1) / 2;
            let mut c = if (m + 1) % 2 == 0 { 1.0 } else { -1.0 } / (m + 1) as f64;
            if m >= 1 {
                c -= if m % 2 == 0 { 1.0 } else { -1.0 } / m as f64;
            }
            sum_y1 = sum_y1 + cur * c;
        }
        if n == 0 {
            norm = norm + cur;
            break;
        }
        let prev = two_over_z * cur * (n as f64) - next;
        next = cur;
        cur = prev;
        n -= 1;
        if cur.modulus() > 1e250 {
            let s = 1e-250;
            cur = cur * s;
            next = next * s;
            norm = norm * s;
            sum_y0 = sum_y0 * s;
            sum_y1 = sum_y1 * s;
            for v in saved.iter_mut() {
                *v = *v * s;
            }
        }
    }

    let scale = norm.recip();
    let j0 = saved[0] * scale;
    let j1 = saved[1] * scale;
    let j2 = saved[2] * scale;
    let s0 = sum_y0 * scale;
    let s1 = sum_y1 * scale;
    let log_term = (z * 0.5).ln() + EULER_GAMMA;
    let y0 = log_term * j0 * FRAC_2_PI - s0 * (2.0 * FRAC_2_PI);
    let y1 = z.recip() * j0 * (-FRAC_2_PI) + log_term * j1 * FRAC_2_PI + s1 * FRAC_2_PI;
    [j0, j1, j2, y0, y1]
}

/// Hankel's expansion of `H_ν⁽¹⁾(z)` for `ν ∈ {0, 1}` and large `|z|`.
fn hankel_asymptotic(order: u32, z: Complex64) -> Complex64 {
    let nu2x4 = 4.0 * (order * order) as f64;
    let zinv = Complex64::new(1.0, 0.0) / z;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..80 {
        let odd = (2 * k - 1) as f64;
        term = term * I * zinv * ((nu2x4 - odd * odd) / (8.0 * k as f64));
        let mag = term.norm();
        if mag > last {
            break;
        }
        sum += term;
        last = mag;
        if mag < 1e-17 * sum.norm() {
            break;
        }
    }
    let phase = z - Complex64::new(order as f64 * PI / 2.0 + PI / 4.0, 0.0);
    (Complex64::new(FRAC_2_PI, 0.0) / z).sqrt() * (I * phase).exp() * sum
}

/// `(H₀⁽¹⁾(z), H₁⁽¹⁾(z))` for complex `z` with `Im z ≥ 0`, `z ≠ 0`.
///
/// Accuracy is best on the real axis; the Miller branch loses roughly
/// `2 Im z / ln 10` digits because `J` and `Y` grow while `H` decays.
pub(crate) fn hankel01_complex(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() >= ASYMPTOTIC_RADIUS {
        (hankel_asymptotic(0, z), hankel_asymptotic(1, z))
    } else if z.im == 0.0 && z.re > 0.0 {
        let [j0, j1, _, y0, y1] = jy_small(z.re);
        (Complex64::new(j0, y0), Complex64::new(j1, y1))
    } else {
        let [j0, j1, _, y0, y1] = jy_small(z);
        (j0 + I * y0, j1 + I * y1)
    }
}

/// Bessel function of the first kind `J_n(x)` for `n ∈ {0, 1, 2}`.
///
/// # Panics
///
/// Panics if `n > 2`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    assert!(n <= 2, "bessel_j supports orders 0, 1 and 2 only");
    if x < 0.0 {
        let v = bessel_j(n, -x);
        return if n % 2 == 1 { -v } else { v };
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < ASYMPTOTIC_RADIUS {
        return jy_small(x)[n as usize];
    }
    let z = Complex64::new(x, 0.0);
    let j0 = hankel_asymptotic(0, z).re;
    let j1 = hankel_asymptotic(1, z).re;
    match n {
        0 => j0,
        1 => j1,
        _ => 2.0 * j1 / x - j0,
    }
}

/// Bessel function of the second kind `Y_n(x)` for `n ∈ {0, 1}`, `x > 0`.
pub fn bessel_y(n: u32, x: f64) -> Result<f64> {
    Ok(hankel1(n, x)?.im)
}

/// Hankel function of the first kind `H_n⁽¹⁾(x) = J_n(x) + i Y_n(x)` for
/// `n ∈ {0, 1}` and real `x > 0`.
pub fn hankel1(n: u32, x: f64) -> Result<Complex64> {
    if n > 1 {
        return Err(Error::Domain(format!("hankel1 order {n} is not supported")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "hankel1 needs a finite positive argument, got {x}"
        )));
    }
    let (h0, h1) = hankel01_complex(Complex64::new(x, 0.0));
    Ok(if n == 0 { h0 } else { h1 })
}

/// Radial derivatives of `G^BH` at distance `r` for frequency `k`.
pub fn gbh_radial(k: Complex64, r: f64) -> Result<RadialKernelValues> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("distance must be positive, got {r}")));
    }
    if k == Complex64::new(0.0, 0.0) || !k.is_finite() {
        return Err(Error::Domain("frequency k must be finite and nonzero".into()));
    }
    if k.im < 0.0 {
        return Err(Error::Domain("frequency k must satisfy Im k >= 0".into()));
    }
    Ok(gbh_radial_unchecked(k, r))
}

/// [`gbh_radial`] without argument validation, for the assembly loops.
#[inline]
pub(crate) fn gbh_radial_unchecked(k: Complex64, r: f64) -> RadialKernelValues {
    let z = k * r;
    if z.norm() < SERIES_RADIUS {
        return gbh_fused_series(k, r);
    }
    let (h0, h1) = hankel01_complex(z);
    let k2 = k * k;
    let inv_k2 = Complex64::new(1.0, 0.0) / k2;
    let inv_z = Complex64::new(1.0, 0.0) / z;
    let tau = 2.0 * PI;
    let lr = r.ln();
    let g0 = inv_k2 * (lr / tau) + I * 0.25 * h0 * inv_k2;
    let g1 = inv_k2 / (tau * r) - I * 0.25 * h1 / k;
    let g2 = -inv_k2 / (tau * r * r) - I * 0.25 * (h0 - h1 * inv_z);
    let g3 = inv_k2 / (PI * r * r * r) + I * 0.25 * k * (h1 + h0 * inv_z - 2.0 * h1 * inv_z * inv_z);
    RadialKernelValues {
        g: [g0, g1, g2, g3],
        h0,
        h1,
    }
}

/// Series for `g` with the two logarithms merged:
///
/// `g = c/k² + Σ_{m≥1} b_m r^{2m} (log r/(2π) − H_m/(2π) − c)`,
/// `c = i/4 − (log(k/2) + γ)/(2π)`, `b_m = (−1)^{m+1} (k²/4)^m / ((m!)² k²)`.
fn gbh_fused_series(k: Complex64, r: f64) -> RadialKernelValues {
    let tau = 2.0 * PI;
    let k2 = k * k;
    let c = I * 0.25 - ((k * 0.5).ln() + EULER_GAMMA) / tau;
    let lr = r.ln();
    let q = k2 * 0.25;

    let mut g = [c / k2, Complex64::default(), Complex64::default(), Complex64::default()];
    let mut qm = Complex64::new(1.0, 0.0); // (k^2/4)^m
    let mut fact = 1.0;
    let mut harmonic = 0.0;
    for m in 1..=25usize {
        qm *= q;
        fact *= m as f64;
        harmonic += 1.0 / m as f64;
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        let b = qm * (sign / (fact * fact)) / k2;
        // term r^p (a log r + b0), differentiated in place.
        let mut p = (2 * m) as f64;
        let mut a = b / tau;
        let mut b0 = -b * (harmonic / tau + c);
        let mut rp = r.powi(2 * m as i32);
        let mut largest = 0.0f64;
        for slot in g.iter_mut() {
            let t = rp * (a * lr + b0);
            *slot += t;
            largest = largest.max(t.norm());
            let na = a * p;
            b0 = b0 * p + a;
            a = na;
            p -= 1.0;
            rp /= r;
        }
        if largest < 1e-18 * g[0].norm().max(g[3].norm()).max(1e-300) {
            break;
        }
    }

    let [j0, j1, _, y0, y1] = jy_small(k * r);
    RadialKernelValues {
        g,
        h0: j0 + I * y0,
        h1: j1 + I * y1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Ascending series in f64; only trustworthy for small arguments.
    fn series_j0_y0(x: f64) -> (f64, f64) {
        let q = x * x / 4.0;
        let (mut j0, mut y0s) = (0.0, 0.0);
        let (mut pow, mut fact, mut h) = (1.0, 1.0, 0.0);
        for m in 0..60 {
            if m > 0 {
                pow *= -q;
                fact *= m as f64;
                h += 1.0 / m as f64;
            }
            j0 += pow / (fact * fact);
            y0s += pow * h / (fact * fact);
        }
        let y0 = FRAC_2_PI * (((x / 2.0).ln() + EULER_GAMMA) * j0 - y0s);
        (j0, y0)
    }

    #[test]
    fn bessel_j_trivial_values() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(1, 0.0), 0.0);
        assert_eq!(bessel_j(2, 0.0), 0.0);
        assert_eq!(bessel_j(1, -0.7), -bessel_j(1, 0.7));
    }

    #[test]
    fn j0_at_one_matches_series_oracle() {
        let (j0, y0) = series_j0_y0(1.0);
        assert!((j0 - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(0, 1.0) - j0).abs() < 1e-15);
        let h = hankel1(0, 1.0).unwrap();
        assert!((h.re - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((h.im - 0.088_256_964_215_676_9).abs() < 1e-15);
        assert!((h.im - y0).abs() < 1e-15);
    }

    #[test]
    fn branches_agree_with_series_oracle_at_moderate_arguments() {
        // The plain f64 series is accurate to ~1e-15 absolute up to x ~ 3.
        for &x in &[1.0, 1.5, 2.2, 3.0] {
            let (j0, y0) = series_j0_y0(x);
            let h = hankel1(0, x).unwrap();
            assert!((h.re - j0).abs() < 1e-14, "J0({x})");
            assert!((h.im - y0).abs() < 1e-14, "Y0({x})");
        }
    }

    #[test]
    fn small_argument_singularities() {
        let x = 1e-8;
        let h0 = hankel1(0, x).unwrap();
        let lead = FRAC_2_PI * x.ln();
        assert!((h0.im - lead).abs() < 0.1);
        let h1 = hankel1(1, x).unwrap();
        assert!((h1.im * x + FRAC_2_PI).abs() < 1e-12);
    }

    #[test]
    fn hankel_rejects_nonpositive_arguments() {
        assert!(hankel1(0, 0.0).is_err());
        assert!(hankel1(1, -1.0).is_err());
        assert!(hankel1(0, f64::NAN).is_err());
    }

    #[test]
    fn wronskian_holds_across_regimes() {
        let n = 200;
        for i in 0..n {
            let x = 0.1 * (500.0f64).powf(i as f64 / (n - 1) as f64);
            let h0 = hankel1(0, x).unwrap();
            let h1 = hankel1(1, x).unwrap();
            let w = h0.re * h1.im - h1.re * h0.im;
            let expected = -2.0 / (PI * x);
            assert!(
                ((w - expected) / expected).abs() < 1e-11,
                "x = {x}: {w} vs {expected}"
            );
        }
    }

    #[test]
    fn branch_switch_points_are_continuous() {
        let s = jy_series(SERIES_RADIUS);
        let m = jy_miller(SERIES_RADIUS);
        for j in 0..5 {
            assert!((s[j] - m[j]).abs() < 1e-14, "series/Miller at the switch, j = {j}");
        }
        // Overlap window: force both formulas on the same arguments.
        for i in 0..20 {
            let x = 17.0 + 0.1 * i as f64;
            let [j0, j1, _, y0, y1] = jy_miller(x);
            let a0 = hankel_asymptotic(0, Complex64::new(x, 0.0));
            let a1 = hankel_asymptotic(1, Complex64::new(x, 0.0));
            assert!((Complex64::new(j0, y0) - a0).norm() / a0.norm() < 1e-11);
            assert!((Complex64::new(j1, y1) - a1).norm() / a1.norm() < 1e-11);
        }
        for i in 0..20 {
            let x = 0.8 + 0.02 * i as f64;
            let s = jy_series(x);
            let m = jy_miller(x);
            for j in 0..5 {
                assert!((s[j] - m[j]).abs() < 1e-13 * s[j].abs().max(1.0), "x={x} j={j}");
            }
        }
    }

    #[test]
    fn j2_is_consistent_with_recurrence() {
        for &x in &[0.3, 1.0, 4.0, 9.5, 17.9, 25.0, 80.0] {
            let rec = 2.0 * bessel_j(1, x) / x - bessel_j(0, x);
            assert!((bessel_j(2, x) - rec).abs() < 1e-14);
        }
    }

    #[test]
    fn gbh_laplacian_is_minus_quarter_i_h0() {
        let k = Complex64::new(2.0, 0.0);
        for &r in &[1e-3, 0.1, 0.5, 0.9, 1.7, 12.0] {
            let v = gbh_radial(k, r).unwrap();
            let lap = v.g[2] + v.g[1] / r;
            let res = lap + I * 0.25 * v.h0;
            assert!(res.norm() < 1e-11 * v.h0.norm().max(1.0), "r = {r}: {res}");
        }
    }

    #[test]
    fn fused_series_matches_direct_formula() {
        let k = Complex64::new(2.0, 0.0);
        let r = 1e-3;
        let series = gbh_radial(k, r).unwrap();
        let (h0, h1) = hankel01_complex(k * r);
        let z = k * r;
        let direct_g2 = -1.0 / (2.0 * PI * k * k * r * r) - I * 0.25 * (h0 - h1 / z);
        assert!((series.g[2] - direct_g2).norm() / series.g[2].norm() < 1e-9);
        // Near the switch radius the two routes must agree closely.
        for &r in &[0.45, 0.499_999] {
            let s = gbh_fused_series(k, r);
            let (h0, h1) = hankel01_complex(k * r);
            let direct = {
                let mut tmp = gbh_radial_unchecked(k, 0.6);
                tmp.h0 = h0;
                tmp.h1 = h1;
                let z = k * r;
                let k2 = k * k;
                tmp.g = [
                    (r.ln() / (2.0 * PI) + I * 0.25 * h0) / k2,
                    1.0 / (2.0 * PI * r * k2) - I * 0.25 * h1 / k,
                    -1.0 / (2.0 * PI * k2 * r * r) - I * 0.25 * (h0 - h1 / z),
                    1.0 / (PI * k2 * r * r * r) + I * 0.25 * k * (h1 + h0 / z - 2.0 * h1 / (z * z)),
                ];
                tmp
            };
            for j in 0..4 {
                let scale = s.g[j].norm().max(1.0);
                assert!((s.g[j] - direct.g[j]).norm() < 1e-13 * scale, "r={r} j={j}");
            }
        }
    }

    #[test]
    fn gbh_leading_singularity() {
        let k = Complex64::new(3.0, 0.0);
        let r = 1e-6;
        let v = gbh_radial(k, r).unwrap();
        // g''' ~ 2/(8 pi r) as r -> 0
        let expected = 1.0 / (4.0 * PI * r);
        assert!((v.g[3].re - expected).abs() / expected < 1e-4);
    }

    #[test]
    fn gbh_is_pure() {
        let k = Complex64::new(2.0, 0.0);
        assert_eq!(gbh_radial(k, 0.37).unwrap(), gbh_radial(k, 0.37).unwrap());
    }

    #[test]
    fn gbh_errors() {
        assert!(gbh_radial(Complex64::new(2.0, 0.0), 0.0).is_err());
        assert!(gbh_radial(Complex64::new(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn oscillatory_biharmonic_annihilates_g() {
        // F = (Δ + k²) g computed analytically, then Δ F by radial finite
        // differences: Δ (Δ + k²) g = 0 away from the origin.
        let k = Complex64::new(2.5, 0.0);
        let f = |r: f64| {
            let v = gbh_radial(k, r).unwrap();
            v.g[2] + v.g[1] / r + k * k * v.g[0]
        };
        for &r in &[0.3, 0.8, 1.4, 3.0] {
            let h = 1e-3;
            let fm2 = f(r - 2.0 * h);
            let fm1 = f(r - h);
            let f0 = f(r);
            let fp1 = f(r + h);
            let fp2 = f(r + 2.0 * h);
            let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
            let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
            let lap = d2 + d1 / r;
            let scale = d2.norm().max(d1.norm() / r).max(1.0 / (2.0 * PI * r * r));
            assert!(lap.norm() / scale < 1e-6, "r = {r}: {}", lap.norm() / scale);
        }
    }

    #[test]
    fn complex_frequency_is_accepted() {
        let k = Complex64::new(3.0, 0.2);
        let v = gbh_radial(k, 0.7).unwrap();
        let lap = v.g[2] + v.g[1] / 0.7;
        assert!((lap + I * 0.25 * v.h0).norm() < 1e-10);
        assert!(gbh_radial(Complex64::new(3.0, -0.1), 0.7).is_err());
    }
}
