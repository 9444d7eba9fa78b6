//! Analytic eigenvalue oracles: the radially symmetric Dirichlet family of
//! an annulus and Neumann eigenvalues of the unit disk.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{bessel_j, bessel_y, hankel1};

/// Sign-scan step in `k`.
pub const SCAN_STEP: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscendentalRoots {
    pub function: String,
    pub roots: Vec<f64>,
    /// Modulus of the defining relation at each root.
    pub residuals: Vec<f64>,
}

/// All sign changes of `f` on `[lo, hi]`, refined by bisection to full precision.
fn scan_roots(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let steps = ((hi - lo) / SCAN_STEP).ceil().max(1.0) as usize;
    let h = (hi - lo) / steps as f64;
    let mut roots = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    if fa == 0.0 {
        roots.push(a);
    }
    for i in 1..=steps {
        let b = if i == steps { hi } else { lo + i as f64 * h };
        let fb = f(b);
        if fb == 0.0 {
            roots.push(b);
        } else if fa != 0.0 && fa.signum() != fb.signum() {
            roots.push(bisect(a, b, fa, &f));
        }
        a = b;
        fa = fb;
    }
    roots
}

fn bisect(mut a: f64, mut b: f64, mut fa: f64, f: &impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn check_window(k_min: f64, k_max: f64) -> Result<()> {
    if !(k_min > 0.0) || !(k_max > k_min) || !k_max.is_finite() {
        return Err(Error::Domain(format!("window [{k_min}, {k_max}] must satisfy 0 < k_min < k_max")));
    }
    Ok(())
}

/// `[[H₀′(kR₁), J₀′(kR₁)], [H₀′(kR₂), J₀′(kR₂)]]` with `H₀′ = −H₁`, `J₀′ = −J₁`.
pub fn annulus_matrix(r1: f64, r2: f64, k: f64) -> Result<[[Complex64; 2]; 2]> {
    let row = |r: f64| -> Result<[Complex64; 2]> {
        Ok([-hankel1(1, k * r)?, Complex64::new(-bessel_j(1, k * r), 0.0)])
    };
    Ok([row(r1)?, row(r2)?])
}

/// Real cross product `J₁(kR₁)Y₁(kR₂) − J₁(kR₂)Y₁(kR₁)`.
pub fn annulus_cross(r1: f64, r2: f64, k: f64) -> Result<f64> {
    let (a, b) = (k * r1, k * r2);
    Ok(bessel_j(1, a) * bessel_y(1, b)? - bessel_j(1, b) * bessel_y(1, a)?)
}

fn det2(m: &[[Complex64; 2]; 2]) -> Complex64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Radially symmetric Dirichlet eigenvalues of the annulus `r1 < r < r2` in the window.
pub fn annulus_dirichlet_roots(r1: f64, r2: f64, k_min: f64, k_max: f64) -> Result<TranscendentalRoots> {
    if !(r1 > 0.0 && r2 > r1) {
        return Err(Error::Domain(format!("radii must satisfy 0 < r1 < r2, got {r1}, {r2}")));
    }
    check_window(k_min, k_max)?;
    let roots = scan_roots(k_min, k_max, |k| annulus_cross(r1, r2, k).unwrap_or(f64::NAN));
    let residuals = roots
        .iter()
        .map(|&k| annulus_matrix(r1, r2, k).map(|m| det2(&m).norm()))
        .collect::<Result<_>>()?;
    Ok(TranscendentalRoots {
        function: format!("annulus_dirichlet(r1={r1}, r2={r2})"),
        roots,
        residuals,
    })
}

/// Coefficients `(α, β)` of the stream function `αH₀(kr) + βJ₀(kr)` at a root.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusMode {
    pub k: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl AnnulusMode {
    /// Angular velocity component `k(αH₀′(kr) + βJ₀′(kr))`; the radial one vanishes.
    pub fn u_theta(&self, r: f64) -> Result<Complex64> {
        let z = self.k * r;
        Ok(self.k * (-self.alpha * hankel1(1, z)? - self.beta * bessel_j(1, z)))
    }

    /// Stream function value.
    pub fn psi(&self, r: f64) -> Result<Complex64> {
        let z = self.k * r;
        Ok(self.alpha * hankel1(0, z)? + self.beta * bessel_j(0, z))
    }
}

/// Unit null vector of the annulus matrix at `k_root`.
pub fn annulus_eigenfunction(r1: f64, r2: f64, k_root: f64) -> Result<AnnulusMode> {
    let m = annulus_matrix(r1, r2, k_root)?;
    let n0 = m[0][0].norm() + m[0][1].norm();
    let n1 = m[1][0].norm() + m[1][1].norm();
    let row = if n0 >= n1 { m[0] } else { m[1] };
    let (alpha, beta) = (row[1], -row[0]);
    let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
    let (alpha, beta) = (alpha / norm, beta / norm);
    let res = (0..2)
        .map(|i| (m[i][0] * alpha + m[i][1] * beta).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if res > 1e-10 {
        return Err(Error::Inconsistent(format!(
            "annulus matrix is not singular at k = {k_root} (residual {res:e})"
        )));
    }
    Ok(AnnulusMode { k: k_root, alpha, beta })
}

/// `−kJ₀′(k) + k²J₀″(k)` with `J₀′ = −J₁`, `J₀″ = −J₀ + J₁/k`.
pub fn disk_neumann_relation(k: f64) -> f64 {
    let (j0, j1) = (bessel_j(0, k), bessel_j(1, k));
    k * j1 + k * k * (-j0 + j1 / k)
}

/// Neumann eigenvalues of the unit disk (radial family) in the window.
pub fn disk_neumann_roots(k_min: f64, k_max: f64) -> Result<TranscendentalRoots> {
    check_window(k_min, k_max)?;
    // 2J₁ − kJ₀ has the same roots for k > 0 and is O(1) in size
    let roots = scan_roots(k_min, k_max, |k| 2.0 * bessel_j(1, k) - k * bessel_j(0, k));
    let residuals = roots.iter().map(|&k| disk_neumann_relation(k).abs()).collect();
    Ok(TranscendentalRoots {
        function: "disk_neumann".into(),
        roots,
        residuals,
    })
}
