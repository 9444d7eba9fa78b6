//! Nyström quadrature for the layer potentials.
//!
//! Far panels use the native 16-point rule. For each target node the self
//! panel, its neighbours and any panel closer than a fraction of its length
//! are integrated against the 16 Lagrange basis functions by adaptive
//! bisection with nested Gauss–Legendre rules. On the self panel the
//! integral is split at the target and the substitution `u = u_i ± L v⁴`
//! clusters nodes at the singularity.
//!
//! The subdivision is decided once per geometry and reference frequency and
//! stored as a [`QuadraturePlan`]. Reusing one plan across an interval keeps
//! the discrete operator an analytic function of `k`, which the Chebyshev
//! fits in the sweep depend on.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss::{panel_rule, ORDER};
use crate::geometry::BoundaryPanels;
use crate::potentials::{KernelContext, Kernel2x2, Radial};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    Single,
    Double,
    /// Traction of the single layer, `∫ T_ijl(x, y) ν_l(x) μ_j(y) dS(y)`.
    Traction,
}

/// Coefficients of a linear combination of layer kernels.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LayerWeights {
    pub single: Complex64,
    pub double: Complex64,
    pub traction: Complex64,
}

impl LayerWeights {
    pub fn only(layer: Layer) -> Self {
        let one = Complex64::new(1.0, 0.0);
        match layer {
            Layer::Single => LayerWeights { single: one, ..Default::default() },
            Layer::Double => LayerWeights { double: one, ..Default::default() },
            Layer::Traction => LayerWeights { traction: one, ..Default::default() },
        }
    }

    #[inline]
    fn kernel(&self, rad: &Radial, nu_y: [f64; 2], nu_x: [f64; 2]) -> Kernel2x2 {
        let mut k = [[ZERO; 2]; 2];
        if self.single != ZERO {
            let g = rad.stokeslet();
            for i in 0..2 {
                for j in 0..2 {
                    k[i][j] += self.single * g[i][j];
                }
            }
        }
        if self.double != ZERO {
            let d = rad.double_layer(nu_y);
            for i in 0..2 {
                for j in 0..2 {
                    k[i][j] += self.double * d[i][j];
                }
            }
        }
        if self.traction != ZERO {
            let t = rad.stresslet();
            for i in 0..2 {
                for j in 0..2 {
                    k[i][j] += self.traction * (t[i][j][0] * nu_x[0] + t[i][j][1] * nu_x[1]);
                }
            }
        }
        k
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions {
    /// Absolute tolerance per subinterval, relative to the panel integral.
    pub tol: f64,
    pub max_depth: usize,
    /// Panels within this many adjacency steps get adaptive treatment.
    pub near_neighbors: usize,
    /// Other panels are adaptive when a node lies within this many of their lengths.
    pub near_factor: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            tol: 1e-13,
            max_depth: 40,
            near_neighbors: 1,
            near_factor: 0.6,
        }
    }
}

/// One stored quadrature point of a near interaction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadNode {
    /// Local coordinate on the source panel.
    pub u: f64,
    /// Separation `x_target − y`.
    pub r: [f64; 2],
    pub nu: [f64; 2],
    /// Arc-length weight.
    pub w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct NearBlock {
    panel: usize,
    start: usize,
    end: usize,
}

/// Fixed near-field quadrature for every target node.
#[derive(Clone, Debug)]
pub struct QuadraturePlan {
    pub k_ref: Complex64,
    pub options: QuadratureOptions,
    offsets: Vec<usize>,
    blocks: Vec<NearBlock>,
    nodes: Vec<QuadNode>,
}

impl QuadraturePlan {
    /// Build the plan for frequencies up to `k_ref` in modulus.
    pub fn build(panels: &BoundaryPanels, k_ref: Complex64, options: QuadratureOptions) -> Result<Self> {
        if k_ref == ZERO || !k_ref.is_finite() {
            return Err(Error::Domain("plan frequency must be finite and nonzero".into()));
        }
        let n = panels.num_nodes();
        let per_target: Vec<Result<Vec<(usize, Vec<QuadNode>)>>> = (0..n)
            .into_par_iter()
            .map(|i| near_field_for_target(panels, i, k_ref, &options))
            .collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut blocks = Vec::new();
        let mut nodes = Vec::new();
        offsets.push(0);
        for list in per_target {
            for (panel, qn) in list? {
                let start = nodes.len();
                nodes.extend(qn);
                blocks.push(NearBlock { panel, start, end: nodes.len() });
            }
            offsets.push(blocks.len());
        }
        Ok(QuadraturePlan {
            k_ref,
            options,
            offsets,
            blocks,
            nodes,
        })
    }

    /// Near panels of target node `i` with their quadrature nodes, sorted by panel.
    pub fn near(&self, i: usize) -> impl Iterator<Item = (usize, &[QuadNode])> + '_ {
        self.blocks[self.offsets[i]..self.offsets[i + 1]]
            .iter()
            .map(move |b| (b.panel, &self.nodes[b.start..b.end]))
    }

    pub fn total_nodes(&self) -> usize {
        self.nodes.len()
    }
}

/// Panels needing adaptive treatment for target node `i`, in increasing order.
fn near_panels(panels: &BoundaryPanels, i: usize, options: &QuadratureOptions) -> Vec<usize> {
    let own = panels.panel_of(i);
    let x = panels.nodes[i];
    let mut out = vec![own];
    let mut left = own;
    let mut right = own;
    for _ in 0..options.near_neighbors {
        left = panels.neighbors[left][0];
        right = panels.neighbors[right][1];
        out.push(left);
        out.push(right);
    }
    for (q, panel) in panels.panels.iter().enumerate() {
        let reach = options.near_factor * panel.length;
        let close = panels.nodes[q * ORDER..(q + 1) * ORDER]
            .iter()
            .any(|y| (x[0] - y[0]).hypot(x[1] - y[1]) < reach);
        if close {
            out.push(q);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn near_field_for_target(
    panels: &BoundaryPanels,
    i: usize,
    k_ref: Complex64,
    options: &QuadratureOptions,
) -> Result<Vec<(usize, Vec<QuadNode>)>> {
    let own = panels.panel_of(i);
    let rule = panel_rule();
    let p = &panels.panels[own];
    let probe = Probe {
        panels,
        x: panels.nodes[i],
        t_x: panels.params[i],
        component: p.component,
        own_width: p.t1 - p.t0,
        k: k_ref,
        target: i,
    };
    near_panels(panels, i, options)
        .into_iter()
        .map(|q| {
            let nodes = if q == own {
                let ui = rule.nodes[i % ORDER];
                let mut left = probe.adaptive(q, SubMap::Power { origin: ui, span: -(ui + 1.0) }, options)?;
                let right = probe.adaptive(q, SubMap::Power { origin: ui, span: 1.0 - ui }, options)?;
                left.extend(right);
                left
            } else {
                probe.adaptive(q, SubMap::Identity, options)?
            };
            Ok((q, nodes))
        })
        .collect()
}

/// Variable change from `v` to the panel coordinate `u`.
#[derive(Clone, Copy, Debug)]
enum SubMap {
    /// `u = v`, `v ∈ [-1, 1]`.
    Identity,
    /// `u = origin + span v⁴`, `v ∈ [0, 1]`.
    Power { origin: f64, span: f64 },
}

impl SubMap {
    fn range(&self) -> (f64, f64) {
        match self {
            SubMap::Identity => (-1.0, 1.0),
            SubMap::Power { .. } => (0.0, 1.0),
        }
    }

    /// `(u, |du/dv|, u − origin)`; the offset is exact where `u` would round.
    #[inline]
    fn apply(&self, v: f64) -> (f64, f64, Option<f64>) {
        match *self {
            SubMap::Identity => (v, 1.0, None),
            SubMap::Power { origin, span } => {
                let v3 = v * v * v;
                let offset = span * v3 * v;
                (origin + offset, (4.0 * span * v3).abs(), Some(offset))
            }
        }
    }
}

/// `x(t + dt) − x(t)` as the integral of `x'`, accurate relative to its own
/// size. Subtracting positions instead loses the normal component of short
/// chords, which the double-layer kernel divides by `|r|²`.
fn chord(panels: &BoundaryPanels, component: usize, t: f64, dt: f64, pieces: usize) -> [f64; 2] {
    let rule = panel_rule();
    let comp = &panels.components[component];
    let width = dt / pieces as f64;
    let mut acc = [0.0; 2];
    for p in 0..pieces {
        let a = t + p as f64 * width;
        for (g, w) in rule.nodes.iter().zip(&rule.weights) {
            let d = comp.eval(a + (g + 1.0) * width / 2.0).dx;
            acc[0] += w * d[0] * width / 2.0;
            acc[1] += w * d[1] * width / 2.0;
        }
    }
    acc
}

/// Wrap a parameter difference into `(−π, π]`.
fn wrap(dt: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut d = dt % TAU;
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    d
}

struct Probe<'a> {
    panels: &'a BoundaryPanels,
    x: [f64; 2],
    t_x: f64,
    component: usize,
    own_width: f64,
    k: Complex64,
    target: usize,
}

const NOISE_FLOOR: f64 = 5e-15;

/// Probe width: single and double kernels (4 entries each) × 16 basis functions.
const PROBE: usize = 2 * 4 * ORDER;

impl Probe<'_> {
    /// Separation `x − y` for a source at parameter offset or position.
    fn separation(&self, panel: usize, t_y: f64, y: [f64; 2], offset: Option<f64>) -> [f64; 2] {
        let p = &self.panels.panels[panel];
        if let Some(du) = offset {
            let c = chord(self.panels, self.component, self.t_x, du * (p.t1 - p.t0) / 2.0, 1);
            return [-c[0], -c[1]];
        }
        if p.component == self.component {
            let dt = wrap(t_y - self.t_x);
            if dt.abs() <= 2.0 * (self.own_width + (p.t1 - p.t0)) {
                let c = chord(self.panels, self.component, self.t_x, dt, 2);
                return [-c[0], -c[1]];
            }
        }
        [self.x[0] - y[0], self.x[1] - y[1]]
    }

    /// 16-point rule on `[v0, v1]`: integral of kernel ⊗ basis and the nodes used.
    fn segment(&self, panel: usize, map: SubMap, v0: f64, v1: f64) -> ([Complex64; PROBE], [QuadNode; ORDER]) {
        let rule = panel_rule();
        let half = (v1 - v0) / 2.0;
        let p = &self.panels.panels[panel];
        let comp = &self.panels.components[p.component];
        let mut acc = [ZERO; PROBE];
        let mut nodes = [QuadNode { u: 0.0, r: [0.0; 2], nu: [0.0; 2], w: 0.0 }; ORDER];
        let mut basis = [0.0; ORDER];
        for (n, (gv, gw)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let v = v0 + (gv + 1.0) * half;
            let (u, du, offset) = map.apply(v);
            let t_y = p.t0 + (u + 1.0) * (p.t1 - p.t0) / 2.0;
            let c = comp.eval(t_y);
            let speed = c.dx[0].hypot(c.dx[1]);
            let nu = [c.dx[1] / speed, -c.dx[0] / speed];
            let w = gw * half * du * speed * (p.t1 - p.t0) / 2.0;
            let r = self.separation(panel, t_y, c.x, offset);
            nodes[n] = QuadNode { u, r, nu, w };
            if r[0] == 0.0 && r[1] == 0.0 {
                nodes[n].w = 0.0;
                continue;
            }
            let rad = Radial::new(self.k, r);
            let s = rad.stokeslet();
            let d = rad.double_layer(nu);
            rule.lagrange_into(u, &mut basis);
            for (b, &l) in basis.iter().enumerate() {
                let lw = l * w;
                let base = 8 * b;
                for e in 0..4 {
                    acc[base + e] += s[e / 2][e % 2] * lw;
                    acc[base + 4 + e] += d[e / 2][e % 2] * lw;
                }
            }
        }
        (acc, nodes)
    }

    fn adaptive(&self, panel: usize, map: SubMap, options: &QuadratureOptions) -> Result<Vec<QuadNode>> {
        let (a, b) = map.range();
        let (whole, _) = self.segment(panel, map, a, b);
        let scale = whole.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        // Cancellation in the kernel near r = 0 leaves noise of order ε per
        // segment independent of panel size; the floor keeps short panels
        // from chasing it.
        let tol = (options.tol * scale).max(NOISE_FLOOR);
        let mut out = Vec::new();
        let mut stack = vec![(a, b, whole, 0usize)];
        while let Some((v0, v1, coarse, depth)) = stack.pop() {
            if let SubMap::Power { span, .. } = map {
                // The segment touching the singularity is dropped once its
                // share of the panel is below rounding of u.
                if v0 == 0.0 && (span * v1.powi(4)).abs() <= 1e-16 {
                    continue;
                }
            }
            let m = 0.5 * (v0 + v1);
            let (left, ln) = self.segment(panel, map, v0, m);
            let (right, rn) = self.segment(panel, map, m, v1);
            let diff = (0..PROBE).map(|e| (coarse[e] - left[e] - right[e]).norm()).fold(0.0, f64::max);
            if diff <= tol {
                out.extend_from_slice(&ln);
                out.extend_from_slice(&rn);
            } else if depth + 1 >= options.max_depth {
                return Err(Error::Quadrature {
                    panel,
                    target: self.target,
                    depth: options.max_depth,
                });
            } else {
                // Right first so the left half is processed next; keeps nodes ordered.
                stack.push((m, v1, right, depth + 1));
                stack.push((v0, m, left, depth + 1));
            }
        }
        Ok(out)
    }
}

/// Weighted Nyström rows `Σ_c coeff_c K_c(x_i, y) w` for the given target
/// nodes, written row-major into `out` (two rows of length `2N` per target).
fn assemble_target(
    ctx: &KernelContext,
    panels: &BoundaryPanels,
    plan: &QuadraturePlan,
    weights: &LayerWeights,
    i: usize,
    out: &mut [Complex64],
) {
    let n2 = 2 * panels.num_nodes();
    let (row0, row1) = out.split_at_mut(n2);
    let x = panels.nodes[i];
    let nu_x = panels.normals[i];
    let rule = panel_rule();
    let mut near = plan.near(i).peekable();
    let mut basis = [0.0; ORDER];
    for q in 0..panels.num_panels() {
        let first = q * ORDER;
        if near.peek().map(|(p, _)| *p) == Some(q) {
            let (_, qnodes) = near.next().unwrap();
            let mut block = [[[ZERO; 2]; 2]; ORDER];
            for qn in qnodes {
                if qn.w == 0.0 {
                    continue;
                }
                let rad = Radial::new(ctx.k, qn.r);
                let k = weights.kernel(&rad, qn.nu, nu_x);
                rule.lagrange_into(qn.u, &mut basis);
                for (b, &l) in basis.iter().enumerate() {
                    let lw = l * qn.w;
                    for a in 0..2 {
                        for c in 0..2 {
                            block[b][a][c] += k[a][c] * lw;
                        }
                    }
                }
            }
            for (b, blk) in block.iter().enumerate() {
                let j = first + b;
                row0[2 * j] = blk[0][0];
                row0[2 * j + 1] = blk[0][1];
                row1[2 * j] = blk[1][0];
                row1[2 * j + 1] = blk[1][1];
            }
        } else {
            for j in first..first + ORDER {
                let y = panels.nodes[j];
                let rad = Radial::new(ctx.k, [x[0] - y[0], x[1] - y[1]]);
                let k = weights.kernel(&rad, panels.normals[j], nu_x);
                let w = panels.weights[j];
                row0[2 * j] = k[0][0] * w;
                row0[2 * j + 1] = k[0][1] * w;
                row1[2 * j] = k[1][0] * w;
                row1[2 * j + 1] = k[1][1] * w;
            }
        }
    }
}

/// Row-major `2N × 2N` buffer of the weighted combination.
pub fn assemble_rows(
    ctx: &KernelContext,
    panels: &BoundaryPanels,
    plan: &QuadraturePlan,
    weights: &LayerWeights,
) -> Vec<Complex64> {
    let n2 = 2 * panels.num_nodes();
    let mut buf = vec![ZERO; n2 * n2];
    buf.par_chunks_mut(2 * n2)
        .enumerate()
        .for_each(|(i, rows)| assemble_target(ctx, panels, plan, weights, i, rows));
    buf
}

pub(crate) fn rows_to_mat(buf: &[Complex64], n: usize) -> Mat<Complex64> {
    Mat::from_fn(n, n, |i, j| buf[i * n + j])
}

/// Dense weighted matrix of one layer operator, with a plan built at `ctx.k`.
pub fn assemble_layer_matrix(ctx: &KernelContext, panels: &BoundaryPanels, which: Layer) -> Result<Mat<Complex64>> {
    let plan = QuadraturePlan::build(panels, ctx.k, QuadratureOptions::default())?;
    Ok(assemble_layer_matrix_with_plan(ctx, panels, &plan, which))
}

pub fn assemble_layer_matrix_with_plan(
    ctx: &KernelContext,
    panels: &BoundaryPanels,
    plan: &QuadraturePlan,
    which: Layer,
) -> Mat<Complex64> {
    let buf = assemble_rows(ctx, panels, plan, &LayerWeights::only(which));
    rows_to_mat(&buf, 2 * panels.num_nodes())
}

#[derive(Clone, Copy, Debug)]
pub struct OffsurfaceOptions {
    /// Panels closer than this many of their lengths are integrated adaptively.
    pub near_factor: f64,
    pub tol: f64,
    pub max_depth: usize,
}

impl Default for OffsurfaceOptions {
    fn default() -> Self {
        OffsurfaceOptions {
            near_factor: 5.0,
            tol: 1e-12,
            max_depth: 50,
        }
    }
}

/// Layer potential of density `mu` (interleaved, length `2N`) at points off Γ.
pub fn eval_offsurface(
    ctx: &KernelContext,
    panels: &BoundaryPanels,
    mu: &[Complex64],
    targets: &[[f64; 2]],
    which: Layer,
) -> Result<Vec<[Complex64; 2]>> {
    if which == Layer::Traction {
        return Err(Error::Domain("traction is only defined on the boundary".into()));
    }
    eval_offsurface_weighted(ctx, panels, mu, targets, &LayerWeights::only(which), &OffsurfaceOptions::default())
}

/// Combination `c_D D[μ] + c_S S[μ]` off the boundary.
pub fn eval_offsurface_weighted(
    ctx: &KernelContext,
    panels: &BoundaryPanels,
    mu: &[Complex64],
    targets: &[[f64; 2]],
    weights: &LayerWeights,
    options: &OffsurfaceOptions,
) -> Result<Vec<[Complex64; 2]>> {
    if mu.len() != 2 * panels.num_nodes() {
        return Err(Error::Inconsistent(format!(
            "density has length {}, expected {}",
            mu.len(),
            2 * panels.num_nodes()
        )));
    }
    if weights.traction != ZERO {
        return Err(Error::Domain("traction is only defined on the boundary".into()));
    }
    targets
        .par_iter()
        .map(|&x| eval_point(ctx, panels, mu, x, weights, options))
        .collect()
}

fn eval_point(
    ctx: &KernelContext,
    panels: &BoundaryPanels,
    mu: &[Complex64],
    x: [f64; 2],
    weights: &LayerWeights,
    options: &OffsurfaceOptions,
) -> Result<[Complex64; 2]> {
    let rule = panel_rule();
    let mut total = [ZERO; 2];
    let mu_norm = mu.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (q, panel) in panels.panels.iter().enumerate() {
        let first = q * ORDER;
        let dmin = panels.nodes[first..first + ORDER]
            .iter()
            .map(|y| (x[0] - y[0]).hypot(x[1] - y[1]))
            .fold(f64::INFINITY, f64::min);
        if dmin == 0.0 {
            return Err(Error::Domain(format!("target {x:?} lies on the boundary")));
        }
        if dmin >= options.near_factor * panel.length {
            for j in first..first + ORDER {
                let y = panels.nodes[j];
                let rad = Radial::new(ctx.k, [x[0] - y[0], x[1] - y[1]]);
                let k = weights.kernel(&rad, panels.normals[j], [0.0; 2]);
                let w = panels.weights[j];
                for a in 0..2 {
                    total[a] += (k[a][0] * mu[2 * j] + k[a][1] * mu[2 * j + 1]) * w;
                }
            }
            continue;
        }
        let local = &mu[2 * first..2 * first + 2 * ORDER];
        let seg = |v0: f64, v1: f64| -> [Complex64; 2] {
            let half = (v1 - v0) / 2.0;
            let mut basis = [0.0; ORDER];
            let mut acc = [ZERO; 2];
            for (gv, gw) in rule.nodes.iter().zip(&rule.weights) {
                let u = v0 + (gv + 1.0) * half;
                let (y, nu, jac) = panels.panel_point(q, u);
                rule.lagrange_into(u, &mut basis);
                let mut m = [ZERO; 2];
                for (b, &l) in basis.iter().enumerate() {
                    m[0] += local[2 * b] * l;
                    m[1] += local[2 * b + 1] * l;
                }
                let rad = Radial::new(ctx.k, [x[0] - y[0], x[1] - y[1]]);
                let k = weights.kernel(&rad, nu, [0.0; 2]);
                let w = gw * half * jac;
                for a in 0..2 {
                    acc[a] += (k[a][0] * m[0] + k[a][1] * m[1]) * w;
                }
            }
            acc
        };
        let tol = options.tol * mu_norm.max(1e-300) * panel.length;
        let mut stack = vec![(-1.0, 1.0, seg(-1.0, 1.0), 0usize)];
        while let Some((v0, v1, coarse, depth)) = stack.pop() {
            let m = 0.5 * (v0 + v1);
            let l = seg(v0, m);
            let r = seg(m, v1);
            let diff = (coarse[0] - l[0] - r[0]).norm().max((coarse[1] - l[1] - r[1]).norm());
            if diff <= tol {
                total[0] += l[0] + r[0];
                total[1] += l[1] + r[1];
            } else if depth + 1 >= options.max_depth {
                return Err(Error::Domain(format!(
                    "target {x:?} is too close to panel {q} for off-surface evaluation"
                )));
            } else {
                stack.push((m, v1, r, depth + 1));
                stack.push((v0, m, l, depth + 1));
            }
        }
    }
    Ok(total)
}
