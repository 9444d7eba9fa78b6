//! Second-kind system matrices `I − 2D − 2iηS − 2W` and their dense factorizations.

use std::sync::OnceLock;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::BoundaryPanels;
use crate::linalg::{log_det, smallest_singular, LogDet, SingularPairs};
use crate::potentials::{Formulation, KernelContext};
use crate::quadrature::{assemble_rows, rows_to_mat, LayerWeights, QuadratureOptions, QuadraturePlan};

#[derive(Clone, Copy, Debug)]
pub struct SystemOptions {
    /// Add the rank-one correction `−2W`.
    pub null_space_correction: bool,
    /// Permit the double-layer formulation on multiply connected boundaries.
    pub allow_double_layer_multiply_connected: bool,
    pub quadrature: QuadratureOptions,
}

impl Default for SystemOptions {
    fn default() -> Self {
        SystemOptions {
            null_space_correction: true,
            allow_double_layer_multiply_connected: false,
            quadrature: QuadratureOptions::default(),
        }
    }
}

/// Dense Nyström system at one frequency.
#[derive(Debug)]
pub struct SystemMatrix {
    pub ctx: KernelContext,
    pub matrix: Mat<Complex64>,
    det: OnceLock<LogDet>,
}

impl SystemMatrix {
    /// Wrap an already assembled matrix.
    pub fn from_matrix(ctx: KernelContext, matrix: Mat<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Inconsistent("system matrix must be square".into()));
        }
        Ok(SystemMatrix { ctx, matrix, det: OnceLock::new() })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Determinant in log form; computed once and cached.
    pub fn log_det(&self) -> Result<LogDet> {
        if let Some(d) = self.det.get() {
            return Ok(*d);
        }
        let d = log_det(self.matrix.as_ref())?;
        Ok(*self.det.get_or_init(|| d))
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * x[j]).sum())
            .collect()
    }

    /// `count` (1 or 2) smallest singular values and right vectors.
    ///
    /// If the SVD fails, an exactly singular matrix is assumed and `σ_min = 0`
    /// is reported with a null vector from inverse iteration on the LU factors.
    pub fn smallest_singular_values(&self, count: usize) -> Result<SingularPairs> {
        if !(1..=2).contains(&count) {
            return Err(Error::Inconsistent(format!("asked for {count} singular values, expected 1 or 2")));
        }
        match smallest_singular(&self.matrix, count) {
            Ok(s) => Ok(s),
            Err(Error::Factorization(msg)) => self.null_vector_fallback(count).ok_or(Error::Factorization(msg)),
            Err(e) => Err(e),
        }
    }

    fn null_vector_fallback(&self, count: usize) -> Option<SingularPairs> {
        let n = self.dim();
        let lu = self.matrix.partial_piv_lu();
        let mut x = Mat::<Complex64>::from_fn(n, 1, |i, _| Complex64::new(1.0 + (i as f64 * 0.37).sin(), 0.1));
        for _ in 0..3 {
            x = faer::linalg::solvers::Solve::solve(&lu, &x);
            let norm = (0..n).map(|i| x[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return None;
            }
            for i in 0..n {
                x[(i, 0)] /= norm;
            }
        }
        let v: Vec<Complex64> = (0..n).map(|i| x[(i, 0)]).collect();
        Some(SingularPairs {
            values: vec![0.0; count],
            vectors: vec![v; count],
            sigma_max: f64::NAN,
        })
    }
}

fn is_multiply_connected(panels: &BoundaryPanels) -> bool {
    panels.components.len() > 1
}

/// Builds systems for a family of frequencies sharing one near-field plan.
///
/// The plan fixes the singular quadrature nodes so that the assembled matrix is
/// an analytic function of `k` across the family.
#[derive(Debug)]
pub struct SystemBuilder<'a> {
    pub panels: &'a BoundaryPanels,
    pub template: KernelContext,
    pub options: SystemOptions,
    plan: QuadraturePlan,
}

impl<'a> SystemBuilder<'a> {
    /// `k_ref` should be the frequency of largest modulus that will be requested.
    pub fn new(template: KernelContext, panels: &'a BoundaryPanels, k_ref: Complex64, options: SystemOptions) -> Result<Self> {
        if template.formulation == Formulation::DoubleLayer
            && is_multiply_connected(panels)
            && !options.allow_double_layer_multiply_connected
        {
            return Err(Error::config(
                "formulation",
                "double_layer is not invertible on multiply connected domains; use combined_field or set the override",
            ));
        }
        let plan = QuadraturePlan::build(panels, k_ref, options.quadrature)?;
        Ok(SystemBuilder { panels, template, options, plan })
    }

    pub fn plan(&self) -> &QuadraturePlan {
        &self.plan
    }

    pub fn build(&self, k: Complex64) -> Result<SystemMatrix> {
        let ctx = KernelContext::new(k, self.template.eta, self.template.formulation)?;
        let two = Complex64::new(-2.0, 0.0);
        let weights = LayerWeights {
            double: two,
            single: match ctx.formulation {
                Formulation::DoubleLayer => Complex64::new(0.0, 0.0),
                Formulation::CombinedField => Complex64::new(0.0, -2.0 * ctx.eta),
            },
            traction: Complex64::new(0.0, 0.0),
        };
        let n = self.panels.num_nodes();
        let n2 = 2 * n;
        let mut buf = assemble_rows(&ctx, self.panels, &self.plan, &weights);
        for i in 0..n2 {
            buf[i * n2 + i] += 1.0;
        }
        if self.options.null_space_correction {
            let p = self.panels;
            let scale = -2.0 / p.total_length;
            for i in 0..n {
                for a in 0..2 {
                    let row = &mut buf[(2 * i + a) * n2..(2 * i + a + 1) * n2];
                    let lhs = scale * p.normals[i][a];
                    for j in 0..n {
                        let f = lhs * p.weights[j];
                        row[2 * j] += f * p.normals[j][0];
                        row[2 * j + 1] += f * p.normals[j][1];
                    }
                }
            }
        }
        let matrix = rows_to_mat(&buf, n2);
        drop(buf);
        SystemMatrix::from_matrix(ctx, matrix)
    }
}

/// One-off system with a plan built at `ctx.k`.
pub fn build_system(ctx: &KernelContext, panels: &BoundaryPanels) -> Result<SystemMatrix> {
    build_system_with(ctx, panels, SystemOptions::default())
}

pub fn build_system_with(ctx: &KernelContext, panels: &BoundaryPanels, options: SystemOptions) -> Result<SystemMatrix> {
    SystemBuilder::new(*ctx, panels, ctx.k, options)?.build(ctx.k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_annulus, panelize, Circle, CurveComponent, Orientation};
    use crate::potentials::w_apply;
    use crate::quadrature::{assemble_layer_matrix, Layer};

    fn circle(panels: usize) -> BoundaryPanels {
        let comp = CurveComponent::new(Circle { center: [0.0, 0.0], radius: 1.0 }, Orientation::Outer)
            .with_panels(panels);
        panelize(&[comp], 10.0, 1e-3).unwrap()
    }

    fn no_w() -> SystemOptions {
        SystemOptions { null_space_correction: false, ..Default::default() }
    }

    #[test]
    fn matrix_matches_layer_combination() {
        let p = circle(4);
        let ctx = KernelContext::new(Complex64::new(2.5, 0.0), 0.7, Formulation::CombinedField).unwrap();
        let sys = build_system(&ctx, &p).unwrap();
        let d = assemble_layer_matrix(&ctx, &p, Layer::Double).unwrap();
        let s = assemble_layer_matrix(&ctx, &p, Layer::Single).unwrap();
        let n = sys.dim();
        let mu: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64 * 0.1).cos(), 0.3)).collect();
        let got = sys.apply(&mu);
        let wmu = w_apply(&p, &mu);
        for i in 0..n {
            let mut expect = mu[i] - 2.0 * wmu[i];
            for j in 0..n {
                expect -= (2.0 * d[(i, j)] + Complex64::new(0.0, 2.0 * 0.7) * s[(i, j)]) * mu[j];
            }
            assert!((got[i] - expect).norm() < 1e-12, "{i}");
        }
    }

    #[test]
    fn double_layer_refused_on_annulus_without_override() {
        let p = panelize(&make_annulus(1.0, 1.7, 4).unwrap(), 10.0, 1e-3).unwrap();
        let ctx = KernelContext::real(5.0, Formulation::DoubleLayer).unwrap();
        assert!(matches!(build_system(&ctx, &p), Err(Error::Config { .. })));
        let opts = SystemOptions { allow_double_layer_multiply_connected: true, ..Default::default() };
        assert!(build_system_with(&ctx, &p, opts).is_ok());
        let cf = KernelContext::real(5.0, Formulation::CombinedField).unwrap();
        assert!(build_system(&cf, &p).is_ok());
    }

    #[test]
    fn w_removes_rank_deficiency_on_circle() {
        let p = circle(8);
        for k in [2.0, 5.0] {
            let ctx = KernelContext::real(k, Formulation::DoubleLayer).unwrap();
            let without = build_system_with(&ctx, &p, no_w()).unwrap().smallest_singular_values(1).unwrap();
            let with = build_system(&ctx, &p).unwrap().smallest_singular_values(1).unwrap();
            assert!(without.values[0] <= 1e-8, "k={k}: {}", without.values[0]);
            assert!(with.values[0] >= 1e-3, "k={k}: {}", with.values[0]);
        }
    }

    #[test]
    fn builder_reuses_plan_across_frequencies() {
        let p = circle(6);
        let ctx = KernelContext::real(4.0, Formulation::DoubleLayer).unwrap();
        let b = SystemBuilder::new(ctx, &p, Complex64::new(4.0, 0.0), SystemOptions::default()).unwrap();
        let one = b.build(Complex64::new(4.0, 0.0)).unwrap();
        let direct = build_system(&ctx, &p).unwrap();
        assert!(one.matrix == direct.matrix);
        let lower = b.build(Complex64::new(3.5, 0.0)).unwrap();
        let fresh = build_system(&ctx.with_k(Complex64::new(3.5, 0.0)), &p).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..lower.dim() {
            for j in 0..lower.dim() {
                worst = worst.max((lower.matrix[(i, j)] - fresh.matrix[(i, j)]).norm());
            }
        }
        assert!(worst < 1e-11, "{worst}");
    }

    #[test]
    fn determinant_is_cached_and_deterministic() {
        let p = circle(4);
        let ctx = KernelContext::real(2.0, Formulation::DoubleLayer).unwrap();
        let sys = build_system(&ctx, &p).unwrap();
        let a = sys.log_det().unwrap();
        let b = sys.log_det().unwrap();
        assert_eq!(a, b);
        let again = build_system(&ctx, &p).unwrap().log_det().unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let ctx = KernelContext::real(1.0, Formulation::DoubleLayer).unwrap();
        let m = Mat::from_fn(10, 10, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        let sys = SystemMatrix::from_matrix(ctx, m).unwrap();
        let s = sys.smallest_singular_values(2).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-14);
        assert!(sys.smallest_singular_values(3).is_err());
    }
}
