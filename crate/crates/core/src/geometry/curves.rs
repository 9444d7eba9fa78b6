//! Closed parametric curves on `t ∈ [0, 2π)`, all counterclockwise.

use std::f64::consts::{PI, TAU};
use std::fmt::Debug;

use crate::error::{Error, Result};

/// Position and its first two `t`-derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub x: [f64; 2],
    pub dx: [f64; 2],
    pub ddx: [f64; 2],
}

pub trait ParametricCurve: Send + Sync + Debug {
    /// Evaluate at `t`; callers pass `t ∈ [0, 2π]`.
    fn eval(&self, t: f64) -> CurvePoint;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl ParametricCurve for Circle {
    fn eval(&self, t: f64) -> CurvePoint {
        let (s, c) = t.sin_cos();
        let r = self.radius;
        CurvePoint {
            x: [self.center[0] + r * c, self.center[1] + r * s],
            dx: [-r * s, r * c],
            ddx: [-r * c, -r * s],
        }
    }
}

/// Star-shaped curve `r(θ) = a₀ + Σ_j (a_j cos jθ + b_j sin jθ)` around `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialFourier {
    pub center: [f64; 2],
    pub a0: f64,
    /// `(j, a_j, b_j)` for `j ≥ 1`.
    pub modes: Vec<(u32, f64, f64)>,
}

impl RadialFourier {
    /// `r₀ (1 + a cos(m (θ − θ₀)))`.
    pub fn starfish(center: [f64; 2], r0: f64, amplitude: f64, arms: u32, theta0: f64) -> Self {
        let phase = arms as f64 * theta0;
        RadialFourier {
            center,
            a0: r0,
            modes: vec![(arms, r0 * amplitude * phase.cos(), r0 * amplitude * phase.sin())],
        }
    }

    fn radius(&self, t: f64) -> (f64, f64, f64) {
        let mut r = self.a0;
        let mut dr = 0.0;
        let mut ddr = 0.0;
        for &(j, a, b) in &self.modes {
            let jf = j as f64;
            let (s, c) = (jf * t).sin_cos();
            r += a * c + b * s;
            dr += jf * (-a * s + b * c);
            ddr -= jf * jf * (a * c + b * s);
        }
        (r, dr, ddr)
    }

    /// Smallest radius over a fine sample; used for validity checks.
    pub fn min_radius(&self) -> f64 {
        (0..2048)
            .map(|i| self.radius(TAU * i as f64 / 2048.0).0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self) -> f64 {
        self.a0 + self.modes.iter().map(|&(_, a, b)| a.hypot(b)).sum::<f64>()
    }
}

impl ParametricCurve for RadialFourier {
    fn eval(&self, t: f64) -> CurvePoint {
        let (r, dr, ddr) = self.radius(t);
        let (s, c) = t.sin_cos();
        CurvePoint {
            x: [self.center[0] + r * c, self.center[1] + r * s],
            dx: [dr * c - r * s, dr * s + r * c],
            ddx: [ddr * c - 2.0 * dr * s - r * c, ddr * s + 2.0 * dr * c - r * s],
        }
    }
}

/// Counterclockwise polygon convolved with a Gaussian of width `h` in arc
/// length. Each corner contributes `Δd · ρ(s − s_c)` with
/// `ρ(u) = u Φ(u/h) + h φ(u/h)`, the smoothed ramp.
#[derive(Clone, Debug)]
pub struct SmoothedPolygon {
    start: [f64; 2],
    d0: [f64; 2],
    perimeter: f64,
    h: f64,
    /// Corner positions in arc length, including images shifted by ±perimeter.
    corners: Vec<(f64, [f64; 2])>,
}

impl SmoothedPolygon {
    /// The curve starts at the midpoint of the edge from `vertices[0]` to
    /// `vertices[1]`. Fails for non-positive `h`, degenerate edges, or `h`
    /// larger than a quarter of the shortest edge.
    pub fn new(vertices: &[[f64; 2]], h: f64) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Geometry("polygon needs at least three vertices".into()));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Geometry(format!("rounding width must be positive, got {h}")));
        }
        let edge = |i: usize| {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            [b[0] - a[0], b[1] - a[1]]
        };
        let lengths: Vec<f64> = (0..n).map(|i| edge(i)[0].hypot(edge(i)[1])).collect();
        let min_edge = lengths.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_edge <= 0.0 {
            return Err(Error::Geometry("polygon has a zero-length edge".into()));
        }
        if h > min_edge / 4.0 {
            return Err(Error::Geometry(format!(
                "rounding width {h} exceeds a quarter of the shortest edge {min_edge}"
            )));
        }
        let dirs: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let e = edge(i);
                [e[0] / lengths[i], e[1] / lengths[i]]
            })
            .collect();
        let perimeter: f64 = lengths.iter().sum();
        let a = vertices[0];
        let b = vertices[1 % n];
        let start = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];

        // Corner i+1 sits between edge i and edge i+1.
        let mut base = Vec::with_capacity(n);
        let mut s = lengths[0] / 2.0;
        for i in 0..n {
            let next = (i + 1) % n;
            let jump = [dirs[next][0] - dirs[i][0], dirs[next][1] - dirs[i][1]];
            base.push((s, jump));
            s += lengths[next];
        }
        let mut corners = Vec::with_capacity(3 * n);
        for shift in [-perimeter, 0.0, perimeter] {
            corners.extend(base.iter().map(|&(sc, j)| (sc + shift, j)));
        }
        Ok(SmoothedPolygon {
            start,
            d0: dirs[0],
            perimeter,
            h,
            corners,
        })
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// Position and derivatives in arc length `s ∈ [0, perimeter]`.
    pub fn eval_arclength(&self, s: f64) -> CurvePoint {
        let h = self.h;
        let mut x = [self.start[0] + self.d0[0] * s, self.start[1] + self.d0[1] * s];
        let mut dx = self.d0;
        let mut ddx = [0.0; 2];
        for &(sc, jump) in &self.corners {
            // Ramp (s - sc)_+ for corners ahead of the origin, (sc - s)_+ behind.
            let (u, sign) = if sc > 0.0 { (s - sc, 1.0) } else { (sc - s, -1.0) };
            let z = u / h;
            if z < -40.0 {
                continue;
            }
            let pdf = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
            let cdf = 0.5 * libm::erfc(-z / std::f64::consts::SQRT_2);
            let rho = u * cdf + h * pdf;
            let drho = sign * cdf;
            let ddrho = pdf / h;
            for d in 0..2 {
                x[d] += jump[d] * rho;
                dx[d] += jump[d] * drho;
                ddx[d] += jump[d] * ddrho;
            }
        }
        CurvePoint { x, dx, ddx }
    }
}

impl ParametricCurve for SmoothedPolygon {
    fn eval(&self, t: f64) -> CurvePoint {
        let scale = self.perimeter / TAU;
        let p = self.eval_arclength(t * scale);
        CurvePoint {
            x: p.x,
            dx: [p.dx[0] * scale, p.dx[1] * scale],
            ddx: [p.ddx[0] * scale * scale, p.ddx[1] * scale * scale],
        }
    }
}
