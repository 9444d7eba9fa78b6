//! Eigenfunction velocity and vorticity on a Cartesian grid.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundaryPanels;
use crate::potentials::{Formulation, KernelContext};
use crate::quadrature::{eval_offsurface_weighted, LayerWeights, OffsurfaceOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Bounding box of the boundary nodes, padded by `pad` on each side.
    pub fn around(panels: &BoundaryPanels, nx: usize, ny: usize, pad: f64) -> Self {
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &panels.nodes {
            xmin = xmin.min(p[0]);
            xmax = xmax.max(p[0]);
            ymin = ymin.min(p[1]);
            ymax = ymax.max(p[1]);
        }
        GridSpec { xmin: xmin - pad, xmax: xmax + pad, ymin: ymin - pad, ymax: ymax + pad, nx, ny }
    }

    fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.ny < 3 || !(self.xmax > self.xmin) || !(self.ymax > self.ymin) {
            return Err(Error::config("grid", "need nx, ny >= 3 and non-empty bounds"));
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        (self.xmax - self.xmin) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.ymax - self.ymin) / (self.ny - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point `(i, j)` stored at index `j * nx + i`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (i, j) = (idx % self.nx, idx / self.nx);
        [self.xmin + i as f64 * self.hx(), self.ymin + j as f64 * self.hy()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointMask {
    Outside = 0,
    Inside = 1,
    NearBoundary = 2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenfieldOptions {
    /// Interior points closer to Γ than this many local panel lengths are masked.
    pub near_factor: f64,
    /// Scale so that the largest interior `|ω|` is one.
    pub normalize: bool,
}

impl Default for EigenfieldOptions {
    fn default() -> Self {
        EigenfieldOptions { near_factor: 0.05, normalize: true }
    }
}

/// Masked points carry NaN in `velocity` and `vorticity`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenfieldGrid {
    pub spec: GridSpec,
    pub mask: Vec<PointMask>,
    pub velocity: Vec<[f64; 2]>,
    pub vorticity: Vec<f64>,
    /// Global phase removed from the complex field before taking the real part.
    pub phase: f64,
    /// Factor applied to the real field.
    pub scale: f64,
}

impl EigenfieldGrid {
    pub fn masked_fraction(&self) -> f64 {
        self.mask.iter().filter(|m| **m != PointMask::Inside).count() as f64 / self.mask.len() as f64
    }

    /// Rows `x,y,mask,u1,u2,omega`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "x,y,mask,u1,u2,omega")?;
        for idx in 0..self.mask.len() {
            let p = self.spec.point(idx);
            let u = self.velocity[idx];
            writeln!(
                w,
                "{},{},{},{},{},{}",
                p[0], p[1], self.mask[idx] as u8, u[0], u[1], self.vorticity[idx]
            )?;
        }
        Ok(())
    }
}

/// Layer weights of the representation `u = D[μ]` or `u = (D + iηS)[μ]`.
pub fn representation_weights(ctx: &KernelContext) -> LayerWeights {
    LayerWeights {
        double: Complex64::new(1.0, 0.0),
        single: match ctx.formulation {
            Formulation::DoubleLayer => Complex64::new(0.0, 0.0),
            Formulation::CombinedField => Complex64::new(0.0, ctx.eta),
        },
        traction: Complex64::new(0.0, 0.0),
    }
}

/// Complex velocity of the representation at interior points.
pub fn eval_velocity(
    ctx: &KernelContext,
    panels: &BoundaryPanels,
    density: &[Complex64],
    points: &[[f64; 2]],
) -> Result<Vec<[Complex64; 2]>> {
    eval_offsurface_weighted(ctx, panels, density, points, &representation_weights(ctx), &OffsurfaceOptions::default())
}

/// `∂₁u₂ − ∂₂u₁` by second-order differences; centered where both neighbours are
/// valid, one-sided otherwise, NaN when neither is available.
pub fn vorticity_fd(spec: &GridSpec, velocity: &[[f64; 2]], valid: &[bool]) -> Vec<f64> {
    let (nx, ny) = (spec.nx, spec.ny);
    let (hx, hy) = (spec.hx(), spec.hy());
    let at = |i: isize, j: isize| -> Option<usize> {
        if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
            return None;
        }
        let idx = j as usize * nx + i as usize;
        valid[idx].then_some(idx)
    };
    let deriv = |i: isize, j: isize, di: isize, dj: isize, comp: usize, h: f64| -> Option<f64> {
        let f = |idx: usize| velocity[idx][comp];
        let c = at(i, j)?;
        if let (Some(p), Some(m)) = (at(i + di, j + dj), at(i - di, j - dj)) {
            return Some((f(p) - f(m)) / (2.0 * h));
        }
        if let (Some(p1), Some(p2)) = (at(i + di, j + dj), at(i + 2 * di, j + 2 * dj)) {
            return Some((-3.0 * f(c) + 4.0 * f(p1) - f(p2)) / (2.0 * h));
        }
        if let (Some(m1), Some(m2)) = (at(i - di, j - dj), at(i - 2 * di, j - 2 * dj)) {
            return Some((3.0 * f(c) - 4.0 * f(m1) + f(m2)) / (2.0 * h));
        }
        None
    };
    (0..nx * ny)
        .map(|idx| {
            let (i, j) = ((idx % nx) as isize, (idx / nx) as isize);
            match (deriv(i, j, 1, 0, 1, hx), deriv(i, j, 0, 1, 0, hy)) {
                (Some(a), Some(b)) if valid[idx] => a - b,
                _ => f64::NAN,
            }
        })
        .collect()
}

/// Distance from `p` to the nearest boundary sample, in units of that sample's panel length.
fn scaled_boundary_distance(samples: &[([f64; 2], f64)], p: [f64; 2]) -> f64 {
    samples
        .iter()
        .map(|(y, len)| (p[0] - y[0]).hypot(p[1] - y[1]) / len)
        .fold(f64::INFINITY, f64::min)
}

/// Velocity and vorticity of the eigenfunction represented by `density`.
pub fn eval_eigenfield(
    ctx: &KernelContext,
    panels: &BoundaryPanels,
    density: &[Complex64],
    grid: &GridSpec,
    opts: &EigenfieldOptions,
) -> Result<EigenfieldGrid> {
    grid.validate()?;
    // nodes plus panel endpoints, 64 samples per panel
    let mut samples = Vec::new();
    for (q, panel) in panels.panels.iter().enumerate() {
        for s in 0..64 {
            let u = -1.0 + 2.0 * s as f64 / 64.0;
            samples.push((panels.panel_point(q, u).0, panel.length));
        }
    }
    let mask: Vec<PointMask> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let p = grid.point(idx);
            if !panels.contains(p) {
                PointMask::Outside
            } else if scaled_boundary_distance(&samples, p) < opts.near_factor {
                PointMask::NearBoundary
            } else {
                PointMask::Inside
            }
        })
        .collect();
    let interior: Vec<usize> = (0..grid.len()).filter(|&i| mask[i] == PointMask::Inside).collect();
    if interior.is_empty() {
        return Err(Error::Domain("every grid point is masked".into()));
    }
    let pts: Vec<[f64; 2]> = interior.iter().map(|&i| grid.point(i)).collect();
    let u = eval_velocity(ctx, panels, density, &pts)?;

    // rotate so that the field is as real as possible
    let s: Complex64 = u.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum();
    let phase = 0.5 * s.arg();
    let rot = Complex64::from_polar(1.0, -phase);
    let mut velocity = vec![[f64::NAN; 2]; grid.len()];
    for (&idx, v) in interior.iter().zip(&u) {
        velocity[idx] = [(v[0] * rot).re, (v[1] * rot).re];
    }
    let valid: Vec<bool> = mask.iter().map(|m| *m == PointMask::Inside).collect();
    let mut vorticity = vorticity_fd(grid, &velocity, &valid);
    let mut scale = 1.0;
    if opts.normalize {
        let wmax = vorticity.iter().filter(|w| w.is_finite()).fold(0.0f64, |m, w| m.max(w.abs()));
        if wmax > 0.0 {
            scale = 1.0 / wmax;
        }
        for v in velocity.iter_mut() {
            v[0] *= scale;
            v[1] *= scale;
        }
        for w in vorticity.iter_mut() {
            *w *= scale;
        }
    }
    Ok(EigenfieldGrid { spec: *grid, mask, velocity, vorticity, phase, scale })
}
