//! Oscillatory Stokeslet, stresslet and layer-potential kernels.
//!
//! With `r = x − y`, `g = G^BH(|r|)` and `G^L = log|r| / (2π)`:
//!
//! * Stokeslet `G_ij = −δ_ij Δg + ∂_ij g`, pressure `p = ∂_j G^L f_j`;
//! * stresslet `T_ijl = −∂_j G^L δ_il − (Δg)' r̂_l δ_ij − (Δg)' r̂_i δ_jl + 2 ∂_ijl g`,
//!   the stress `σ_il` of the Stokeslet field driven by `e_j`;
//! * double-layer kernel `K^D_ij(x, y) = −T_jil(x, y) ν_l(y)`, for which the
//!   interior limit of `D[μ]` is `−μ/2 + D[μ]` and the exterior `+μ/2 + D[μ]`;
//! * traction kernel `K^T_ij(x, y) = T_ijl(x, y) ν_l(x) = K^D_ji(y, x)`.
//!
//! All derivatives are with respect to `x`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundaryPanels;
use crate::special::{gbh_radial_unchecked, RadialKernelValues};

pub type Kernel2x2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    DoubleLayer,
    CombinedField,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelContext {
    pub k: Complex64,
    pub eta: f64,
    pub formulation: Formulation,
}

impl KernelContext {
    pub fn new(k: Complex64, eta: f64, formulation: Formulation) -> Result<Self> {
        if k == ZERO || !k.is_finite() || k.im < 0.0 {
            return Err(Error::Domain(format!("frequency must be finite, nonzero, Im k >= 0; got {k}")));
        }
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("coupling eta must be finite and >= 0, got {eta}")));
        }
        if formulation == Formulation::CombinedField && eta == 0.0 {
            return Err(Error::Domain("combined-field formulation needs eta > 0".into()));
        }
        Ok(KernelContext { k, eta, formulation })
    }

    pub fn real(k: f64, formulation: Formulation) -> Result<Self> {
        Self::new(Complex64::new(k, 0.0), 1.0, formulation)
    }

    pub fn with_k(&self, k: Complex64) -> Self {
        KernelContext { k, ..*self }
    }
}

/// Chain-rule coefficients of `g` at one separation.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Radial {
    pub rhat: [f64; 2],
    pub rho: f64,
    /// `∂_ij g = a r̂_i r̂_j + b δ_ij`
    pub a: Complex64,
    pub b: Complex64,
    /// `∂_ijl g = c3 r̂_i r̂_j r̂_l + bp (δ_ij r̂_l + δ_il r̂_j + δ_jl r̂_i)`
    pub c3: Complex64,
    pub bp: Complex64,
    pub lap: Complex64,
    /// `(Δg)'`
    pub dlap: Complex64,
}

impl Radial {
    #[inline]
    pub fn new(k: Complex64, r: [f64; 2]) -> Self {
        let rho = r[0].hypot(r[1]);
        let v: RadialKernelValues = gbh_radial_unchecked(k, rho);
        let [_, g1, g2, g3] = v.g;
        let inv = 1.0 / rho;
        let b = g1 * inv;
        Radial {
            rhat: [r[0] * inv, r[1] * inv],
            rho,
            a: g2 - b,
            b,
            c3: g3 - 3.0 * g2 * inv + 3.0 * g1 * inv * inv,
            bp: (g2 - b) * inv,
            lap: g2 + b,
            dlap: g3 + (g2 - b) * inv,
        }
    }

    #[inline]
    pub fn d2(&self, i: usize, j: usize) -> Complex64 {
        let d = if i == j { self.b } else { ZERO };
        self.a * (self.rhat[i] * self.rhat[j]) + d
    }

    #[inline]
    pub fn d3(&self, i: usize, j: usize, l: usize) -> Complex64 {
        let r = self.rhat;
        let mut s = 0.0;
        if i == j {
            s += r[l];
        }
        if i == l {
            s += r[j];
        }
        if j == l {
            s += r[i];
        }
        self.c3 * (r[i] * r[j] * r[l]) + self.bp * s
    }

    /// `∂_i G^L`
    #[inline]
    pub fn dlaplace(&self, i: usize) -> f64 {
        self.rhat[i] / (TAU * self.rho)
    }

    #[inline]
    pub fn stokeslet(&self) -> Kernel2x2 {
        let mut g = [[ZERO; 2]; 2];
        for (i, row) in g.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.d2(i, j) - if i == j { self.lap } else { ZERO };
            }
        }
        g
    }

    /// `K^D(x, y)` for source normal `nu`.
    #[inline]
    pub fn double_layer(&self, nu: [f64; 2]) -> Kernel2x2 {
        let rn = self.rhat[0] * nu[0] + self.rhat[1] * nu[1];
        let mut d = [[ZERO; 2]; 2];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let mut e = self.dlap * (self.rhat[j] * nu[i]) + self.dlaplace(i) * nu[j];
                if i == j {
                    e += self.dlap * rn;
                }
                e -= 2.0 * (self.d3(i, j, 0) * nu[0] + self.d3(i, j, 1) * nu[1]);
                *v = e;
            }
        }
        d
    }

    /// `T_ijl` for the stress at `x` of the Stokeslet at `y`.
    pub fn stresslet(&self) -> [[[Complex64; 2]; 2]; 2] {
        let mut t = [[[ZERO; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    let mut e = 2.0 * self.d3(i, j, l);
                    if i == l {
                        e -= self.dlaplace(j);
                    }
                    if i == j {
                        e -= self.dlap * self.rhat[l];
                    }
                    if j == l {
                        e -= self.dlap * self.rhat[i];
                    }
                    t[i][j][l] = e;
                }
            }
        }
        t
    }
}

fn separation(x: [f64; 2], y: [f64; 2]) -> Result<[f64; 2]> {
    let r = [x[0] - y[0], x[1] - y[1]];
    if r[0] == 0.0 && r[1] == 0.0 {
        return Err(Error::Singularity);
    }
    Ok(r)
}

/// Velocity at `x` due to a point force at `y`: `u = G f`.
pub fn stokeslet(ctx: &KernelContext, x: [f64; 2], y: [f64; 2]) -> Result<Kernel2x2> {
    Ok(Radial::new(ctx.k, separation(x, y)?).stokeslet())
}

/// Pressure kernel `∇G^L(x − y)`: `p(x) = ∇G^L · f`.
pub fn pressure_kernel(x: [f64; 2], y: [f64; 2]) -> Result<[f64; 2]> {
    let r = separation(x, y)?;
    let r2 = r[0] * r[0] + r[1] * r[1];
    Ok([r[0] / (TAU * r2), r[1] / (TAU * r2)])
}

/// Full stresslet `T_ijl(x, y)`.
pub fn stresslet(ctx: &KernelContext, x: [f64; 2], y: [f64; 2]) -> Result<[[[Complex64; 2]; 2]; 2]> {
    Ok(Radial::new(ctx.k, separation(x, y)?).stresslet())
}

/// Double-layer kernel `K^D(x, y)` with source normal `nu_y`.
pub fn stresslet_normal(ctx: &KernelContext, x: [f64; 2], y: [f64; 2], nu_y: [f64; 2]) -> Result<Kernel2x2> {
    Ok(Radial::new(ctx.k, separation(x, y)?).double_layer(nu_y))
}

/// The same kernel written through normal and tangential density components:
/// `K^D μ = −[(−∇G^L + 2∇^⊥∂_ντ g) μ_ν + ∇^⊥(∂_ττ − ∂_νν) g μ_τ]` with
/// `∇^⊥ = (−∂₂, ∂₁)` and `τ = ν^⊥`.
pub fn stresslet_normal_tangential(
    ctx: &KernelContext,
    x: [f64; 2],
    y: [f64; 2],
    nu_y: [f64; 2],
) -> Result<Kernel2x2> {
    let rad = Radial::new(ctx.k, separation(x, y)?);
    let nu = nu_y;
    let tau = [-nu[1], nu[0]];
    // ∇^⊥ of the scalar c_ab ∂_ab g.
    let perp_grad = |c: [[f64; 2]; 2]| -> [Complex64; 2] {
        let mut d = [ZERO; 2];
        for a in 0..2 {
            for b in 0..2 {
                d[0] -= c[a][b] * rad.d3(1, a, b);
                d[1] += c[a][b] * rad.d3(0, a, b);
            }
        }
        d
    };
    let mut nt = [[0.0; 2]; 2];
    let mut tt_nn = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            nt[a][b] = nu[a] * tau[b];
            tt_nn[a][b] = tau[a] * tau[b] - nu[a] * nu[b];
        }
    }
    let pn = perp_grad(nt);
    let pt = perp_grad(tt_nn);
    let vn = [
        -(-rad.dlaplace(0) + 2.0 * pn[0]),
        -(-rad.dlaplace(1) + 2.0 * pn[1]),
    ];
    let vt = [-pt[0], -pt[1]];
    // μ ↦ vn (ν·μ) + vt (τ·μ)
    let mut k = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            k[i][j] = vn[i] * nu[j] + vt[i] * tau[j];
        }
    }
    Ok(k)
}

/// Traction kernel `K^T(x, y) = T_ijl(x, y) ν_l(x)`.
pub fn traction_kernel(ctx: &KernelContext, x: [f64; 2], y: [f64; 2], nu_x: [f64; 2]) -> Result<Kernel2x2> {
    let t = stresslet(ctx, x, y)?;
    let mut k = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            k[i][j] = t[i][j][0] * nu_x[0] + t[i][j][1] * nu_x[1];
        }
    }
    Ok(k)
}

/// `W[μ](x) = ν(x) |Γ|⁻¹ ∫ ν·μ dS` on nodes; `mu` interleaves components.
pub fn w_apply(panels: &BoundaryPanels, mu: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(mu.len(), 2 * panels.num_nodes(), "density length must be 2N");
    let mut acc = ZERO;
    for (j, (nu, w)) in panels.normals.iter().zip(&panels.weights).enumerate() {
        acc += *w * (nu[0] * mu[2 * j] + nu[1] * mu[2 * j + 1]);
    }
    acc /= panels.total_length;
    panels.normals.iter().flat_map(|nu| [acc * nu[0], acc * nu[1]]).collect()
}
