//! Gauss–Legendre rules on `[-1, 1]` and barycentric Lagrange interpolation
//! through their nodes.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes per panel.
pub const ORDER: usize = 16;

#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Barycentric weights for interpolation through `nodes`.
    pub bary: Vec<f64>,
}

impl GaussRule {
    /// `n`-point rule, nodes ascending. Newton on `P_n` from Chebyshev guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        // Barycentric weights for Gauss–Legendre points: (-1)^i sqrt((1-x²) w).
        let bary = nodes
            .iter()
            .zip(&weights)
            .enumerate()
            .map(|(i, (&x, &w))| {
                let s = ((1.0 - x * x) * w).sqrt();
                if i % 2 == 0 { s } else { -s }
            })
            .collect();
        GaussRule { nodes, weights, bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lagrange basis values `ℓ_j(x)` for all `j`, written into `out`.
    pub fn lagrange_into(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        let mut denom = 0.0;
        for (j, (&xj, &bj)) in self.nodes.iter().zip(&self.bary).enumerate() {
            let d = x - xj;
            if d == 0.0 {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[j] = 1.0;
                return;
            }
            out[j] = bj / d;
            denom += out[j];
        }
        let inv = 1.0 / denom;
        out.iter_mut().for_each(|v| *v *= inv);
    }

    /// Interpolate samples `f` at `x`.
    pub fn interpolate(&self, f: &[f64], x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&xj, &bj), &fj) in self.nodes.iter().zip(&self.bary).zip(f) {
            let d = x - xj;
            if d == 0.0 {
                return fj;
            }
            let c = bj / d;
            num += c * fj;
            den += c;
        }
        num / den
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The shared 16-point rule used for panels.
pub fn panel_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(ORDER))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_nodes_are_symmetric() {
        for n in [1, 2, 5, 16, 33] {
            let r = GaussRule::new(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "n = {n}");
            for i in 0..n {
                assert!((r.nodes[i] + r.nodes[n - 1 - i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let r = panel_rule();
        for deg in 0..32 {
            let q: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn known_two_point_rule() {
        let r = GaussRule::new(2);
        assert!((r.nodes[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lagrange_reproduces_degree_15() {
        let r = panel_rule();
        let f: Vec<f64> = r.nodes.iter().map(|&x| x.powi(15) - 0.3 * x.powi(4) + 1.0).collect();
        let mut basis = vec![0.0; ORDER];
        for &x in &[-1.0f64, -0.37, 0.0, 0.91, 1.0] {
            let exact = x.powi(15) - 0.3 * x.powi(4) + 1.0;
            assert!((r.interpolate(&f, x) - exact).abs() < 1e-13);
            r.lagrange_into(x, &mut basis);
            let via_basis: f64 = basis.iter().zip(&f).map(|(b, v)| b * v).sum();
            assert!((via_basis - exact).abs() < 1e-13);
        }
        r.lagrange_into(r.nodes[3], &mut basis);
        assert_eq!(basis[3], 1.0);
    }
}
