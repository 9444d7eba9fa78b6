//! Boundary curves and their panel discretization.

mod curves;
mod shapes;

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use curves::{Circle, CurvePoint, ParametricCurve, RadialFourier, SmoothedPolygon};
pub use shapes::{
    barbell_vertices, make_annulus, make_barbell, make_barbell_scaled, make_starfish_domain,
    make_starfish_domain_with, StarfishParams,
};

use crate::error::{Error, Result};
use crate::gauss::{panel_rule, GaussRule, ORDER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Outer,
    Inclusion,
}

/// One closed boundary curve. The underlying curve is always counterclockwise;
/// inclusions are traversed backwards so their normals point into the hole.
#[derive(Clone, Debug)]
pub struct CurveComponent {
    pub curve: Arc<dyn ParametricCurve>,
    pub orientation: Orientation,
    /// Starting panel count; defaults to the count implied by the length cap.
    pub initial_panels: Option<usize>,
}

impl CurveComponent {
    pub fn new(curve: impl ParametricCurve + 'static, orientation: Orientation) -> Self {
        CurveComponent {
            curve: Arc::new(curve),
            orientation,
            initial_panels: None,
        }
    }

    pub fn with_panels(mut self, n: usize) -> Self {
        self.initial_panels = Some(n);
        self
    }

    /// Oriented evaluation.
    pub fn eval(&self, t: f64) -> CurvePoint {
        match self.orientation {
            Orientation::Outer => self.curve.eval(t),
            Orientation::Inclusion => {
                let p = self.curve.eval(TAU - t);
                CurvePoint {
                    x: p.x,
                    dx: [-p.dx[0], -p.dx[1]],
                    ddx: p.ddx,
                }
            }
        }
    }

    /// Arc length over `[t0, t1]`, 16-point rule on `pieces` equal subintervals.
    pub fn arc_length(&self, t0: f64, t1: f64, pieces: usize) -> f64 {
        let rule = panel_rule();
        let width = (t1 - t0) / pieces as f64;
        let mut total = 0.0;
        for p in 0..pieces {
            let a = t0 + p as f64 * width;
            for (u, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = a + (u + 1.0) * width / 2.0;
                let d = self.eval(t).dx;
                total += w * d[0].hypot(d[1]) * width / 2.0;
            }
        }
        total
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Panel {
    pub component: usize,
    pub t0: f64,
    pub t1: f64,
    pub length: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct PanelizeOptions {
    pub max_panel_len: f64,
    pub min_panel_len: f64,
    /// Absolute tolerance of the off-node interpolation check.
    pub resolution_tol: f64,
}

impl PanelizeOptions {
    pub fn new(max_panel_len: f64, min_panel_len: f64) -> Self {
        PanelizeOptions {
            max_panel_len,
            min_panel_len,
            resolution_tol: 1e-12,
        }
    }
}

/// Panelized boundary with per-node geometry. Node `i` lies on panel `i / 16`.
#[derive(Clone, Debug)]
pub struct BoundaryPanels {
    pub components: Vec<CurveComponent>,
    pub panels: Vec<Panel>,
    pub nodes: Vec<[f64; 2]>,
    pub normals: Vec<[f64; 2]>,
    pub tangents: Vec<[f64; 2]>,
    /// `|x'(t)|` at each node.
    pub speeds: Vec<f64>,
    /// Smooth quadrature weights `w_n s(t_n) (t1 - t0)/2`.
    pub weights: Vec<f64>,
    /// Curve parameter of each node.
    pub params: Vec<f64>,
    /// `[previous, next]` panel in the same component.
    pub neighbors: Vec<[usize; 2]>,
    pub total_length: f64,
}

impl BoundaryPanels {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_panels(&self) -> usize {
        self.panels.len()
    }

    pub fn panel_of(&self, node: usize) -> usize {
        node / ORDER
    }

    pub fn component_of(&self, node: usize) -> usize {
        self.panels[node / ORDER].component
    }

    /// Panels per component, in component order.
    pub fn panel_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.components.len()];
        for p in &self.panels {
            counts[p.component] += 1;
        }
        counts
    }

    /// Panel geometry at local coordinate `u ∈ [-1, 1]`: position, unit
    /// normal and `|x'| (t1 - t0) / 2`, the arc-length Jacobian in `u`.
    pub fn panel_point(&self, panel: usize, u: f64) -> ([f64; 2], [f64; 2], f64) {
        let p = &self.panels[panel];
        let half = (p.t1 - p.t0) / 2.0;
        let c = self.components[p.component].eval(p.t0 + (u + 1.0) * half);
        let s = c.dx[0].hypot(c.dx[1]);
        (c.x, [c.dx[1] / s, -c.dx[0] / s], s * half)
    }

    /// Winding number of the oriented boundary around `p`. For a fluid point
    /// this is 1; inside an inclusion it is 0; outside everything 0.
    pub fn winding_number(&self, p: [f64; 2]) -> f64 {
        let samples = 48;
        let mut total = 0.0;
        for panel in &self.panels {
            let comp = &self.components[panel.component];
            let mut prev = comp.eval(panel.t0).x;
            for j in 1..=samples {
                let t = panel.t0 + (panel.t1 - panel.t0) * j as f64 / samples as f64;
                let cur = comp.eval(t).x;
                let a = [prev[0] - p[0], prev[1] - p[1]];
                let b = [cur[0] - p[0], cur[1] - p[1]];
                total += (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
                prev = cur;
            }
        }
        total / TAU
    }

    /// Fluid-domain membership by winding number.
    /// Same boundary with every panel split at its parameter midpoint.
    pub fn refined(&self) -> BoundaryPanels {
        let mut intervals = vec![Vec::new(); self.components.len()];
        for p in &self.panels {
            let m = 0.5 * (p.t0 + p.t1);
            intervals[p.component].push((p.t0, m));
            intervals[p.component].push((m, p.t1));
        }
        build_panels(&self.components, &intervals)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.winding_number(p) > 0.5
    }
}

/// Split `[t0, t1]` panels of one component until every panel is short
/// enough and resolved, then enforce the factor-two level restriction.
pub fn refine_component(
    comp: &CurveComponent,
    breakpoints: &[f64],
    opts: &PanelizeOptions,
) -> Result<Vec<(f64, f64)>> {
    let rule = panel_rule();
    let check = GaussRule::new(ORDER - 1);
    let mut work: Vec<(f64, f64)> = breakpoints.windows(2).map(|w| (w[0], w[1])).collect();
    let mut done: Vec<(f64, f64, f64)> = Vec::new();
    let long = opts.max_panel_len * (1.0 + 1e-10);

    // Depth-first keeps panels in parameter order.
    work.reverse();
    while let Some((a, b)) = work.pop() {
        if b - a < 1e-14 * TAU {
            return Err(Error::Geometry(format!(
                "panel refinement collapsed near t = {a}; curve is irregular or unresolvable"
            )));
        }
        let len = panel_length(comp, a, b, rule)?;
        let split = len > long || (len > opts.min_panel_len && !resolved(comp, a, b, rule, &check, opts));
        if split {
            let m = 0.5 * (a + b);
            work.push((m, b));
            work.push((a, m));
        } else {
            done.push((a, b, len));
        }
    }

    // Level restriction on the cyclic sequence.
    loop {
        let n = done.len();
        let mut target = None;
        for i in 0..n {
            let j = (i + 1) % n;
            if n > 1 && done[i].2 > 2.0 * done[j].2 * (1.0 + 1e-12) {
                target = Some(i);
                break;
            }
            if n > 1 && done[j].2 > 2.0 * done[i].2 * (1.0 + 1e-12) {
                target = Some(j);
                break;
            }
        }
        let Some(i) = target else { break };
        let (a, b, _) = done[i];
        let m = 0.5 * (a + b);
        let left = (a, m, panel_length(comp, a, m, rule)?);
        let right = (m, b, panel_length(comp, m, b, rule)?);
        done.splice(i..=i, [left, right]);
    }
    Ok(done.into_iter().map(|(a, b, _)| (a, b)).collect())
}

fn panel_length(comp: &CurveComponent, a: f64, b: f64, rule: &GaussRule) -> Result<f64> {
    let half = (b - a) / 2.0;
    let mut len = 0.0;
    for (u, w) in rule.nodes.iter().zip(&rule.weights) {
        let d = comp.eval(a + (u + 1.0) * half).dx;
        let s = d[0].hypot(d[1]);
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Geometry(format!(
                "curve is irregular (|x'| = {s}) near t = {}",
                a + (u + 1.0) * half
            )));
        }
        len += w * s * half;
    }
    Ok(len)
}

/// Interpolate position and speed from the 16 nodes to the 15-point nodes.
fn resolved(
    comp: &CurveComponent,
    a: f64,
    b: f64,
    rule: &GaussRule,
    check: &GaussRule,
    opts: &PanelizeOptions,
) -> bool {
    let half = (b - a) / 2.0;
    let mut xs = [[0.0; ORDER]; 3];
    for (n, u) in rule.nodes.iter().enumerate() {
        let p = comp.eval(a + (u + 1.0) * half);
        xs[0][n] = p.x[0];
        xs[1][n] = p.x[1];
        xs[2][n] = p.dx[0].hypot(p.dx[1]) * half;
    }
    let smax = xs[2].iter().cloned().fold(0.0, f64::max);
    check.nodes.iter().all(|&u| {
        let p = comp.eval(a + (u + 1.0) * half);
        let ex = (rule.interpolate(&xs[0], u) - p.x[0]).abs();
        let ey = (rule.interpolate(&xs[1], u) - p.x[1]).abs();
        let es = (rule.interpolate(&xs[2], u) - p.dx[0].hypot(p.dx[1]) * half).abs();
        ex <= opts.resolution_tol && ey <= opts.resolution_tol && es <= 10.0 * opts.resolution_tol * smax
    })
}

/// Discretize all components with 16-point Gauss–Legendre panels.
pub fn panelize(components: &[CurveComponent], max_panel_len: f64, min_panel_len: f64) -> Result<BoundaryPanels> {
    panelize_with(components, &PanelizeOptions::new(max_panel_len, min_panel_len))
}

pub fn panelize_with(components: &[CurveComponent], opts: &PanelizeOptions) -> Result<BoundaryPanels> {
    if !(opts.max_panel_len > opts.min_panel_len) || !(opts.min_panel_len > 0.0) {
        return Err(Error::Geometry(format!(
            "need max_panel_len > min_panel_len > 0, got {} and {}",
            opts.max_panel_len, opts.min_panel_len
        )));
    }
    if components.is_empty() {
        return Err(Error::Geometry("no boundary components".into()));
    }
    let mut per_component = Vec::with_capacity(components.len());
    for comp in components {
        let n0 = match comp.initial_panels {
            Some(n) if n > 0 => n,
            Some(_) => return Err(Error::Geometry("initial panel count must be positive".into())),
            None => {
                let len = comp.arc_length(0.0, TAU, 256);
                ((len / opts.max_panel_len - 1e-9).ceil() as usize).max(1)
            }
        };
        let breaks: Vec<f64> = (0..=n0).map(|i| TAU * i as f64 / n0 as f64).collect();
        per_component.push(refine_component(comp, &breaks, opts)?);
    }
    Ok(build_panels(components, &per_component))
}

/// Node geometry for explicit parameter intervals per component.
pub fn build_panels(components: &[CurveComponent], intervals: &[Vec<(f64, f64)>]) -> BoundaryPanels {
    let rule = panel_rule();
    let mut out = BoundaryPanels {
        components: components.to_vec(),
        panels: Vec::new(),
        nodes: Vec::new(),
        normals: Vec::new(),
        tangents: Vec::new(),
        speeds: Vec::new(),
        weights: Vec::new(),
        params: Vec::new(),
        neighbors: Vec::new(),
        total_length: 0.0,
    };
    for (ci, (comp, list)) in components.iter().zip(intervals).enumerate() {
        let first = out.panels.len();
        let count = list.len();
        for (pi, &(a, b)) in list.iter().enumerate() {
            let half = (b - a) / 2.0;
            let mut length = 0.0;
            for (u, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = a + (u + 1.0) * half;
                let p = comp.eval(t);
                let s = p.dx[0].hypot(p.dx[1]);
                let tau = [p.dx[0] / s, p.dx[1] / s];
                out.nodes.push(p.x);
                out.tangents.push(tau);
                out.normals.push([tau[1], -tau[0]]);
                out.speeds.push(s);
                out.weights.push(w * s * half);
                out.params.push(t);
                length += w * s * half;
            }
            out.panels.push(Panel { component: ci, t0: a, t1: b, length });
            let prev = first + (pi + count - 1) % count;
            let next = first + (pi + 1) % count;
            out.neighbors.push([prev, next]);
        }
    }
    out.total_length = out.weights.iter().sum();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_circle() -> CurveComponent {
        CurveComponent::new(Circle { center: [0.0, 0.0], radius: 1.0 }, Orientation::Outer)
    }

    #[test]
    fn unit_circle_six_panels() {
        let p = panelize(&[unit_circle()], TAU / 6.0, 1e-3).unwrap();
        assert_eq!(p.num_panels(), 6);
        assert_eq!(p.num_nodes(), 96);
        assert!((p.total_length - TAU).abs() < 1e-12 * TAU);
    }

    #[test]
    fn figure_annulus_has_256_nodes() {
        let inner = CurveComponent::new(Circle { center: [0.0, 0.0], radius: 1.0 }, Orientation::Inclusion)
            .with_panels(6);
        let outer = CurveComponent::new(Circle { center: [0.0, 0.0], radius: 1.7 }, Orientation::Outer)
            .with_panels(10);
        let p = panelize(&[outer, inner], 10.0, 1e-3).unwrap();
        assert_eq!(p.num_nodes(), 256);
        assert_eq!(p.panel_counts(), vec![10, 6]);
    }

    #[test]
    fn level_restriction_splits_the_longer_panel() {
        let c = unit_circle();
        // Widths L, 2.5L, then the remainder in pieces of L.
        let l = TAU / 10.0;
        let mut breaks = vec![0.0, l, 3.5 * l];
        let mut t = 3.5 * l;
        while t + l < TAU - 1e-12 {
            t += l;
            breaks.push(t);
        }
        *breaks.last_mut().unwrap() = TAU;
        let before = breaks.len() - 1;
        let opts = PanelizeOptions::new(10.0, 1e-3);
        let out = refine_component(&c, &breaks, &opts).unwrap();
        assert!(out.len() > before);
        let lens: Vec<f64> = out.iter().map(|(a, b)| b - a).collect();
        for i in 0..lens.len() {
            let j = (i + 1) % lens.len();
            assert!(lens[i] / lens[j] <= 2.0 + 1e-12 && lens[j] / lens[i] <= 2.0 + 1e-12);
        }
        // The long panel was halved, not the short one.
        assert!(out.iter().any(|&(a, b)| (a - l).abs() < 1e-14 && (b - 2.25 * l).abs() < 1e-12));
        assert!(out.iter().any(|&(a, b)| a == 0.0 && (b - l).abs() < 1e-14));
    }

    #[test]
    fn normals_tangents_and_area() {
        let comps = make_annulus(1.0, 1.7, 8).unwrap();
        let p = panelize(&comps, 10.0, 1e-3).unwrap();
        assert_eq!(p.num_nodes(), 368);
        let mut area = 0.0;
        for i in 0..p.num_nodes() {
            let n = p.normals[i];
            let t = p.tangents[i];
            assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-14);
            assert!((n[0] * t[0] + n[1] * t[1]).abs() < 1e-14);
            // tau = nu rotated by +90 degrees.
            assert!((t[0] + n[1]).abs() < 1e-15 && (t[1] - n[0]).abs() < 1e-15);
            let x = p.nodes[i];
            area += p.weights[i] * (n[0] * x[0] + n[1] * x[1]) / 2.0;
        }
        assert!((area - PI * (1.7f64.powi(2) - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn interpolation_reproduces_curve_off_nodes() {
        let comps = make_starfish_domain(3).unwrap();
        let p = panelize(&comps, 0.5, 1e-4).unwrap();
        let rule = panel_rule();
        for (pi, panel) in p.panels.iter().enumerate().step_by(7) {
            let xs: Vec<f64> = (0..ORDER).map(|n| p.nodes[pi * ORDER + n][0]).collect();
            let ys: Vec<f64> = (0..ORDER).map(|n| p.nodes[pi * ORDER + n][1]).collect();
            for &u in &[-0.99, -0.5, 0.123, 0.77] {
                let t = panel.t0 + (u + 1.0) * (panel.t1 - panel.t0) / 2.0;
                let exact = p.components[panel.component].eval(t).x;
                assert!((rule.interpolate(&xs, u) - exact[0]).abs() < 1e-12);
                assert!((rule.interpolate(&ys, u) - exact[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weights_match_independent_arc_length() {
        let comps = make_barbell(0.06).unwrap();
        let p = panelize(&comps, 1.0, 1e-4).unwrap();
        let oracle = comps[0].arc_length(0.0, TAU, 4000);
        assert!((p.total_length - oracle).abs() < 1e-12 * oracle);
        for panel in &p.panels {
            assert!(panel.length <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn rejects_bad_lengths_and_irregular_curves() {
        assert!(panelize(&[unit_circle()], 1e-3, 1.0).is_err());
        let degenerate = CurveComponent::new(Circle { center: [0.0, 0.0], radius: 0.0 }, Orientation::Outer);
        assert!(panelize(&[degenerate], 1.0, 1e-3).is_err());
    }

    #[test]
    fn refined_halves_every_panel() {
        let p = panelize(&[unit_circle()], 1.0, 1e-3).unwrap();
        let r = p.refined();
        assert_eq!(r.num_panels(), 2 * p.num_panels());
        assert!((r.total_length - p.total_length).abs() < 1e-13);
        for (i, q) in p.panels.iter().enumerate() {
            assert!((r.panels[2 * i].length + r.panels[2 * i + 1].length - q.length).abs() < 1e-14);
            assert_eq!(r.panels[2 * i].t0, q.t0);
            assert_eq!(r.panels[2 * i + 1].t1, q.t1);
        }
    }

    #[test]
    fn winding_numbers() {
        let comps = make_annulus(1.0, 2.0, 4).unwrap();
        let p = panelize(&comps, 10.0, 1e-3).unwrap();
        assert!((p.winding_number([1.5, 0.0]) - 1.0).abs() < 1e-9);
        assert!(p.winding_number([0.2, 0.1]).abs() < 1e-9);
        assert!(p.winding_number([3.0, 0.0]).abs() < 1e-9);
        assert!(p.contains([0.0, -1.5]));
        assert!(!p.contains([0.0, 0.0]));
    }
}
