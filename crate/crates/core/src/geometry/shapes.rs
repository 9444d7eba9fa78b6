//! Built-in domains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Circle, CurveComponent, Orientation, ParametricCurve, RadialFourier, SmoothedPolygon};
use crate::error::{Error, Result};

/// Outer circle of radius `r2` and circular hole of radius `r1`, with
/// `n_inner_panels` panels inside and `⌈(r2/r1) n⌉ + 1` outside.
pub fn make_annulus(r1: f64, r2: f64, n_inner_panels: usize) -> Result<Vec<CurveComponent>> {
    if !(r1 > 0.0) || !(r2 > r1) {
        return Err(Error::Geometry(format!("annulus needs 0 < r1 < r2, got r1 = {r1}, r2 = {r2}")));
    }
    if n_inner_panels == 0 {
        return Err(Error::Geometry("annulus needs at least one inner panel".into()));
    }
    let n_outer = (r2 / r1 * n_inner_panels as f64 - 1e-12).ceil() as usize + 1;
    Ok(vec![
        CurveComponent::new(Circle { center: [0.0, 0.0], radius: r2 }, Orientation::Outer).with_panels(n_outer),
        CurveComponent::new(Circle { center: [0.0, 0.0], radius: r1 }, Orientation::Inclusion)
            .with_panels(n_inner_panels),
    ])
}

/// Counterclockwise barbell: a 6×6 square, a 5/2 × 1 bridge and a 3×3
/// square, all scaled by `scale`. The first edge is the bottom of the large
/// square.
pub fn barbell_vertices(scale: f64) -> Vec<[f64; 2]> {
    let v = [
        [-6.0, -3.0],
        [0.0, -3.0],
        [0.0, -0.5],
        [2.5, -0.5],
        [2.5, -1.5],
        [5.5, -1.5],
        [5.5, 1.5],
        [2.5, 1.5],
        [2.5, 0.5],
        [0.0, 0.5],
        [0.0, 3.0],
        [-6.0, 3.0],
    ];
    v.iter().map(|p| [p[0] * scale, p[1] * scale]).collect()
}

pub fn make_barbell(rounding_h: f64) -> Result<Vec<CurveComponent>> {
    make_barbell_scaled(1.0, rounding_h)
}

pub fn make_barbell_scaled(scale: f64, rounding_h: f64) -> Result<Vec<CurveComponent>> {
    if !(scale > 0.0) {
        return Err(Error::Geometry(format!("barbell scale must be positive, got {scale}")));
    }
    let curve = SmoothedPolygon::new(&barbell_vertices(scale), rounding_h)?;
    Ok(vec![CurveComponent::new(curve, Orientation::Outer)])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarfishParams {
    pub width: f64,
    pub height: f64,
    pub rounding_h: f64,
    pub r0: f64,
    pub amplitude: f64,
    pub arms: u32,
    /// Inclusion centers.
    pub centers: Vec<[f64; 2]>,
}

impl Default for StarfishParams {
    fn default() -> Self {
        let mut centers = Vec::new();
        for &y in &[-0.5, 0.5] {
            for &x in &[-1.0, 0.0, 1.0] {
                centers.push([x, y]);
            }
        }
        StarfishParams {
            width: 3.0,
            height: 2.0,
            rounding_h: 0.05,
            r0: 0.3,
            amplitude: 0.3,
            arms: 5,
            centers,
        }
    }
}

/// Rounded rectangle with randomly rotated starfish holes.
pub fn make_starfish_domain(seed: u64) -> Result<Vec<CurveComponent>> {
    make_starfish_domain_with(seed, &StarfishParams::default())
}

pub fn make_starfish_domain_with(seed: u64, params: &StarfishParams) -> Result<Vec<CurveComponent>> {
    let (w, h) = (params.width / 2.0, params.height / 2.0);
    let rect = [[-w, -h], [w, -h], [w, h], [-w, h]];
    let outer = SmoothedPolygon::new(&rect, params.rounding_h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period = std::f64::consts::TAU / params.arms.max(1) as f64;

    let stars: Vec<RadialFourier> = params
        .centers
        .iter()
        .map(|&c| {
            let theta0 = rng.random_range(0.0..period);
            RadialFourier::starfish(c, params.r0, params.amplitude, params.arms, theta0)
        })
        .collect();

    let outer_samples: Vec<[f64; 2]> = (0..2048)
        .map(|q| outer.eval(std::f64::consts::TAU * q as f64 / 2048.0).x)
        .collect();
    for (i, s) in stars.iter().enumerate() {
        if s.min_radius() <= 0.0 {
            return Err(Error::Geometry(format!("inclusion {i} is not star-shaped")));
        }
        let reach = s.max_radius();
        let [cx, cy] = s.center;
        if cx - reach <= -w || cx + reach >= w || cy - reach <= -h || cy + reach >= h {
            return Err(Error::Geometry(format!("inclusion {i} is not strictly inside the outer curve")));
        }
        // The rounded corners pull the outer curve inward; test sampled points.
        for q in 0..256 {
            let x = s.eval(std::f64::consts::TAU * q as f64 / 256.0).x;
            if polyline_winding(&outer_samples, x) < 0.5 {
                return Err(Error::Geometry(format!("inclusion {i} is not strictly inside the outer curve")));
            }
        }
        for (j, o) in stars.iter().enumerate().take(i) {
            let d = (s.center[0] - o.center[0]).hypot(s.center[1] - o.center[1]);
            if d <= reach + o.max_radius() {
                return Err(Error::Geometry(format!("inclusions {j} and {i} overlap")));
            }
        }
    }

    let mut comps = vec![CurveComponent::new(outer, Orientation::Outer)];
    comps.extend(stars.into_iter().map(|s| CurveComponent::new(s, Orientation::Inclusion)));
    Ok(comps)
}

fn polyline_winding(closed: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let n = closed.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = closed[i];
        let b = closed[(i + 1) % n];
        let u = [a[0] - p[0], a[1] - p[1]];
        let v = [b[0] - p[0], b[1] - p[1]];
        total += (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1]);
    }
    total / std::f64::consts::TAU
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::panelize;
    use std::f64::consts::TAU;

    #[test]
    fn annulus_panel_counts() {
        let c = make_annulus(1.0, 1.7, 8).unwrap();
        assert_eq!(c[0].initial_panels, Some(15));
        assert_eq!(c[1].initial_panels, Some(8));
        let c = make_annulus(1.0, 1.7, 6).unwrap();
        assert_eq!(c[0].initial_panels, Some(12));
        assert!(make_annulus(1.0, 1.0, 6).is_err());
        assert!(make_annulus(2.0, 1.0, 6).is_err());
    }

    #[test]
    fn annulus_panels_are_balanced() {
        let c = make_annulus(1.0, 2.0, 4).unwrap();
        let p = panelize(&c, 100.0, 1e-3).unwrap();
        let outer = p.panels.iter().find(|q| q.component == 0).unwrap().length;
        let inner = p.panels.iter().find(|q| q.component == 1).unwrap().length;
        assert!((outer / inner - 1.0).abs() < 0.15, "{outer} vs {inner}");
    }

    fn polygon_distance(p: [f64; 2], verts: &[[f64; 2]]) -> f64 {
        let n = verts.len();
        (0..n)
            .map(|i| {
                let a = verts[i];
                let b = verts[(i + 1) % n];
                let ab = [b[0] - a[0], b[1] - a[1]];
                let ap = [p[0] - a[0], p[1] - a[1]];
                let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1])).clamp(0.0, 1.0);
                (ap[0] - t * ab[0]).hypot(ap[1] - t * ab[1])
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn barbell_edge_midpoints_are_exact() {
        let verts = barbell_vertices(1.0);
        let curve = SmoothedPolygon::new(&verts, 0.06).unwrap();
        // Walk the arc length, check at each edge midpoint.
        let mut s = 0.0;
        for i in 0..verts.len() {
            let a = verts[i];
            let b = verts[(i + 1) % verts.len()];
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let mid_s = if i == 0 { 0.0 } else { s + len / 2.0 };
            if i == 0 {
                s = len / 2.0;
            } else {
                s += len;
            }
            let p = curve.eval_arclength(mid_s).x;
            let expected = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            assert!((p[0] - expected[0]).abs() <= 1e-10 && (p[1] - expected[1]).abs() <= 1e-10, "edge {i}");
        }
    }

    #[test]
    fn barbell_unperturbed_beyond_ten_widths_of_corners() {
        let h = 0.06;
        let verts = barbell_vertices(1.0);
        let curve = SmoothedPolygon::new(&verts, h).unwrap();
        let n = 20000;
        let mut checked = 0;
        for i in 0..n {
            let s = curve.perimeter() * i as f64 / n as f64;
            let p = curve.eval_arclength(s).x;
            let near_corner = verts.iter().any(|v| (p[0] - v[0]).hypot(p[1] - v[1]) < 10.0 * h);
            if !near_corner {
                assert!(polygon_distance(p, &verts) <= 1e-10);
                checked += 1;
            }
        }
        assert!(checked > n / 2);
    }

    #[test]
    fn barbell_curvature_is_finite_and_continuous() {
        let comps = make_barbell(0.06).unwrap();
        let c = &comps[0];
        let mut max_kappa: f64 = 0.0;
        let n = 40000;
        let mut prev = None;
        for i in 0..=n {
            let t = TAU * i as f64 / n as f64;
            let p = c.eval(t);
            let s = p.dx[0].hypot(p.dx[1]);
            let kappa = (p.dx[0] * p.ddx[1] - p.dx[1] * p.ddx[0]) / s.powi(3);
            assert!(kappa.is_finite());
            if let Some(k0) = prev {
                let dk: f64 = kappa - k0;
                assert!(dk.abs() < 1.0, "curvature jump at t = {t}");
            }
            prev = Some(kappa);
            max_kappa = max_kappa.max(kappa.abs());
        }
        // A right-angle corner smoothed at width h has curvature of order 1/h.
        assert!(max_kappa < 1.0 / 0.06 * 2.0);
    }

    #[test]
    fn barbell_small_rounding_limit() {
        let verts = barbell_vertices(1.0);
        let curve = SmoothedPolygon::new(&verts, 1e-6).unwrap();
        // Vertex (0, -3) is at arc length 3; a point 1e-3 past it lies on the next edge.
        let p = curve.eval_arclength(3.001).x;
        assert!((p[0] - 0.0).abs() < 1e-12 && (p[1] + 2.999).abs() < 1e-12);
        assert!(make_barbell(0.3).is_err());
    }

    #[test]
    fn starfish_domain_is_deterministic_and_contained() {
        let a = make_starfish_domain(0).unwrap();
        let b = make_starfish_domain(0).unwrap();
        let c = make_starfish_domain(1).unwrap();
        assert_eq!(a.len(), 7);
        let pa = a[3].eval(0.7).x;
        assert_eq!(pa, b[3].eval(0.7).x);
        assert_ne!(pa, c[3].eval(0.7).x);
        for comp in &a[1..] {
            for i in 0..200 {
                let x = comp.eval(TAU * i as f64 / 200.0).x;
                assert!(x[0].abs() < 1.5 && x[1].abs() < 1.0);
            }
        }
    }

    #[test]
    fn starfish_inclusion_normals_point_into_holes() {
        let comps = make_starfish_domain(0).unwrap();
        let p = panelize(&comps, 0.3, 1e-4).unwrap();
        assert!(p.contains([0.5, 0.0]));
        for i in (0..p.num_nodes()).step_by(37) {
            let x = p.nodes[i];
            let n = p.normals[i];
            let out = [x[0] + 1e-3 * n[0], x[1] + 1e-3 * n[1]];
            let inn = [x[0] - 1e-3 * n[0], x[1] - 1e-3 * n[1]];
            assert!(!p.contains(out), "node {i}");
            assert!(p.contains(inn), "node {i}");
        }
    }

    #[test]
    fn overlapping_starfish_rejected() {
        let params = StarfishParams { r0: 0.45, ..StarfishParams::default() };
        assert!(make_starfish_domain_with(0, &params).is_err());
    }
}
