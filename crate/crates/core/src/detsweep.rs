//! Determinant sweeps over `k`: adaptive Chebyshev fits per interval, root
//! extraction and filtering of spurious roots.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{envelope_decay, lobatto_points, ChebSeries};
use crate::error::{Error, Result};
use crate::geometry::BoundaryPanels;
use crate::linalg::{misalignment, LogDet, SingularPairs};
use crate::operator::{SystemBuilder, SystemMatrix, SystemOptions};
use crate::potentials::KernelContext;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub eps_cheb: f64,
    /// Lobatto grid size of the first pass; doubled until converged.
    pub initial_points: usize,
    pub max_degree: usize,
    /// Bernstein ellipse parameter bounding the roots that are kept.
    pub ellipse_rho: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            eps_cheb: 1e-13,
            initial_points: 16,
            max_degree: 1024,
            ellipse_rho: 1.01,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetSample {
    pub k: f64,
    pub log_abs: f64,
    pub phase: Complex64,
}

/// Chebyshev fit of the normalized determinant on one interval.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChebInterpolant {
    pub a: f64,
    pub b: f64,
    /// Full interpolant of `det / exp(log_scale)` on the final grid.
    pub series: ChebSeries,
    /// Degree after dropping trailing coefficients below `eps_cheb`.
    pub degree: usize,
    pub trailing_ratio: f64,
    /// Largest sampled `log|det|`, the normalization constant.
    pub log_scale: f64,
    pub samples: Vec<DetSample>,
}

impl ChebInterpolant {
    pub fn chopped(&self, eps: f64) -> ChebSeries {
        self.series.chopped(eps)
    }

    /// Slope and R² of the log-linear fit to the coefficient envelope.
    pub fn decay(&self, eps: f64) -> (f64, f64) {
        envelope_decay(&self.series.coeffs, eps)
    }
}

/// Determinant of a system matrix in log form.
pub fn det_at(sys: &SystemMatrix) -> Result<LogDet> {
    sys.log_det()
}

/// Adaptive fit of a determinant-like function given in log form.
///
/// `eval` receives the new abscissae of each refinement pass.
pub fn fit_samples<F>(a: f64, b: f64, opts: &FitOptions, eval: F) -> Result<ChebInterpolant>
where
    F: Fn(&[f64]) -> Result<Vec<LogDet>>,
{
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("invalid interval [{a}, {b}]")));
    }
    if a <= 0.0 && b >= 0.0 {
        return Err(Error::Domain(format!("interval [{a}, {b}] contains k = 0")));
    }
    let mut n = opts.initial_points.max(2);
    let mut ks = lobatto_points(a, b, n);
    let mut dets = eval(&ks)?;
    loop {
        let log_scale = dets
            .iter()
            .filter(|d| !d.is_zero())
            .map(|d| d.log_abs)
            .fold(f64::NEG_INFINITY, f64::max);
        let log_scale = if log_scale.is_finite() { log_scale } else { 0.0 };
        let values: Vec<Complex64> = dets.iter().map(|d| d.scaled(log_scale)).collect();
        let series = ChebSeries::from_lobatto_values(a, b, &values);
        let trailing_ratio = series.trailing_ratio();
        if trailing_ratio <= opts.eps_cheb {
            let degree = series.chopped(opts.eps_cheb).degree();
            let samples = ks
                .iter()
                .zip(&dets)
                .map(|(&k, d)| DetSample { k, log_abs: d.log_abs, phase: d.phase })
                .collect();
            return Ok(ChebInterpolant {
                a,
                b,
                series,
                degree,
                trailing_ratio,
                log_scale,
                samples,
            });
        }
        if 2 * n > opts.max_degree {
            return Err(Error::FitFailed { a, b, degree: n });
        }
        // new points are the odd-indexed ones of the doubled grid
        let fine = lobatto_points(a, b, 2 * n);
        let fresh: Vec<f64> = fine.iter().skip(1).step_by(2).copied().collect();
        let new_dets = eval(&fresh)?;
        let mut merged_k = Vec::with_capacity(2 * n + 1);
        let mut merged_d = Vec::with_capacity(2 * n + 1);
        for j in 0..=2 * n {
            if j % 2 == 0 {
                merged_k.push(ks[j / 2]);
                merged_d.push(dets[j / 2]);
            } else {
                merged_k.push(fine[j]);
                merged_d.push(new_dets[j / 2]);
            }
        }
        ks = merged_k;
        dets = merged_d;
        n *= 2;
    }
}

/// Fit of `det A(k)` over `[a, b]` using a shared near-field plan.
pub fn fit_interval(builder: &SystemBuilder<'_>, a: f64, b: f64, opts: &FitOptions) -> Result<ChebInterpolant> {
    fit_samples(a, b, opts, |ks| {
        ks.par_iter()
            .map(|&k| builder.build(Complex64::new(k, 0.0))?.log_det())
            .collect()
    })
}

/// Roots of the chopped interpolant within the Bernstein ellipse.
pub fn find_roots(fit: &ChebInterpolant, opts: &FitOptions) -> Result<Vec<Complex64>> {
    fit.chopped(opts.eps_cheb).roots(opts.ellipse_rho)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootStatus {
    Accepted,
    /// Duplicate of a neighbouring root with the same singular vector.
    SpuriousPair,
    /// Imaginary part too large for a real eigenvalue.
    ComplexDiscarded,
    /// The singular-value check could not be carried out.
    Unverified,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenReport {
    pub k_root: f64,
    pub k_cheb: Complex64,
    pub sigma_min: Option<f64>,
    pub sigma_2: Option<f64>,
    pub sigma_max: Option<f64>,
    pub error_estimate: f64,
    pub interval: usize,
    pub status: RootStatus,
    /// Near-double candidate whose second singular value is small too.
    pub possible_double: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub null_density: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PostprocessOptions {
    pub eps_cheb: f64,
    /// Singular vectors closer than this (up to phase) mark a duplicate pair.
    pub duplicate_tol: f64,
    /// Second singular value above which a root is declared simple.
    pub simple_sigma2: f64,
}

impl Default for PostprocessOptions {
    fn default() -> Self {
        PostprocessOptions {
            eps_cheb: 1e-13,
            duplicate_tol: 1e-5,
            simple_sigma2: 1e-5,
        }
    }
}

/// Source of the two smallest singular triplets at a real frequency.
pub trait SingularOracle {
    fn singular_pairs(&self, k: f64) -> Result<SingularPairs>;
}

impl SingularOracle for SystemBuilder<'_> {
    fn singular_pairs(&self, k: f64) -> Result<SingularPairs> {
        self.build(Complex64::new(k, 0.0))?.smallest_singular_values(2)
    }
}

/// `ε ‖P‖_∞ / |P′(k)|`.
pub fn error_estimate(series: &ChebSeries, k: Complex64, eps: f64) -> f64 {
    let d = series.derivative().eval(k).norm();
    eps * series.sup_norm() / d
}

/// Filter and annotate the roots of one interval's interpolant.
pub fn postprocess(
    roots: &[Complex64],
    series: &ChebSeries,
    oracle: &(impl SingularOracle + Sync),
    interval: usize,
    opts: &PostprocessOptions,
) -> Vec<EigenReport> {
    let cutoff = opts.eps_cheb.sqrt();
    let mut sorted = roots.to_vec();
    sorted.sort_by(|p, q| p.re.total_cmp(&q.re));
    let base = |z: Complex64, status| EigenReport {
        k_root: z.re,
        k_cheb: z,
        sigma_min: None,
        sigma_2: None,
        sigma_max: None,
        error_estimate: error_estimate(series, z, opts.eps_cheb),
        interval,
        status,
        possible_double: false,
        note: None,
        null_density: Vec::new(),
    };
    let (real, complex): (Vec<Complex64>, Vec<Complex64>) = sorted.into_iter().partition(|z| z.im.abs() <= cutoff);
    let mut out: Vec<EigenReport> = complex.into_iter().map(|z| base(z, RootStatus::ComplexDiscarded)).collect();

    let checked: Vec<(Complex64, Result<SingularPairs>)> =
        real.par_iter().map(|&z| (z, oracle.singular_pairs(z.re))).collect();
    let mut reports: Vec<EigenReport> = checked
        .into_iter()
        .map(|(z, svd)| match svd {
            Ok(s) => {
                let mut r = base(z, RootStatus::Accepted);
                r.sigma_min = Some(s.values[0]);
                r.sigma_2 = s.values.get(1).copied();
                r.sigma_max = s.sigma_max.is_finite().then_some(s.sigma_max);
                r.null_density = s.vectors.into_iter().next().unwrap_or_default();
                r
            }
            Err(e) => {
                let mut r = base(z, RootStatus::Unverified);
                r.note = Some(e.to_string());
                r
            }
        })
        .collect();

    // close pairs among consecutive real roots
    for q in 1..reports.len() {
        let p = q - 1;
        if reports[q].k_root - reports[p].k_root >= cutoff
            || reports[p].status != RootStatus::Accepted
            || reports[q].status != RootStatus::Accepted
        {
            continue;
        }
        let same = misalignment(&reports[p].null_density, &reports[q].null_density) < opts.duplicate_tol;
        if same {
            // keep the better-resolved one
            let (keep, drop) = if reports[q].sigma_min < reports[p].sigma_min { (q, p) } else { (p, q) };
            reports[drop].status = RootStatus::SpuriousPair;
            reports[drop].note = Some(format!("duplicate of root at {}", reports[keep].k_root));
            reports[keep].possible_double = reports[keep].sigma_2.is_none_or(|s| s <= opts.simple_sigma2);
        } else {
            reports[p].possible_double = true;
            reports[q].possible_double = true;
        }
    }
    out.extend(reports);
    out.sort_by(|a, b| a.k_root.total_cmp(&b.k_root));
    out
}

/// Per-interval record written alongside the root list.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntervalDiagnostics {
    pub id: usize,
    pub a: f64,
    pub b: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub degree: usize,
    pub trailing_ratio: f64,
    pub log_scale: f64,
    pub coefficients: Vec<Complex64>,
    pub samples: Vec<DetSample>,
    pub roots: Vec<Complex64>,
    /// Some root has a large error estimate; a narrower interval is advised.
    pub refine: bool,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    pub fit: FitOptions,
    pub post: PostprocessOptions,
    /// Error estimates above this flag the interval for subdivision.
    pub refine_tol: f64,
    #[serde(skip)]
    pub system: SystemOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            fit: FitOptions::default(),
            post: PostprocessOptions::default(),
            refine_tol: 1e-9,
            system: SystemOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub reports: Vec<EigenReport>,
    pub intervals: Vec<IntervalDiagnostics>,
}

impl SweepResult {
    pub fn accepted(&self) -> impl Iterator<Item = &EigenReport> {
        self.reports.iter().filter(|r| r.status == RootStatus::Accepted)
    }

    pub fn all_converged(&self) -> bool {
        self.intervals.iter().all(|d| d.converged)
    }
}

/// Fit, root-find and filter one interval.
pub fn sweep_interval(
    template: &KernelContext,
    panels: &BoundaryPanels,
    id: usize,
    (a, b): (f64, f64),
    opts: &SweepOptions,
) -> Result<(IntervalDiagnostics, Vec<EigenReport>)> {
    let builder = SystemBuilder::new(*template, panels, Complex64::new(b, 0.0), opts.system)?;
    let fit = match fit_interval(&builder, a, b, &opts.fit) {
        Ok(f) => f,
        Err(e @ Error::FitFailed { .. }) => {
            let diag = IntervalDiagnostics {
                id,
                a,
                b,
                converged: false,
                message: Some(e.to_string()),
                degree: 0,
                trailing_ratio: f64::NAN,
                log_scale: f64::NAN,
                coefficients: Vec::new(),
                samples: Vec::new(),
                roots: Vec::new(),
                refine: true,
            };
            return Ok((diag, Vec::new()));
        }
        Err(e) => return Err(e),
    };
    let chopped = fit.chopped(opts.fit.eps_cheb);
    let roots = chopped.roots(opts.fit.ellipse_rho)?;
    let reports = postprocess(&roots, &chopped, &builder, id, &opts.post);
    let refine = reports
        .iter()
        .any(|r| r.status != RootStatus::ComplexDiscarded && r.error_estimate > opts.refine_tol);
    let diag = IntervalDiagnostics {
        id,
        a,
        b,
        converged: true,
        message: None,
        degree: fit.degree,
        trailing_ratio: fit.trailing_ratio,
        log_scale: fit.log_scale,
        coefficients: fit.series.coeffs.clone(),
        samples: fit.samples.clone(),
        roots,
        refine,
    };
    Ok((diag, reports))
}

/// Sweep all intervals and merge the reports, sorted by `k`.
///
/// Accepted roots from different intervals closer than `√ε_cheb` (shared
/// endpoints) are merged, keeping the one with the smaller `σ_min`.
pub fn sweep(
    template: &KernelContext,
    panels: &BoundaryPanels,
    intervals: &[(f64, f64)],
    opts: &SweepOptions,
) -> Result<SweepResult> {
    let mut diags = Vec::with_capacity(intervals.len());
    let mut reports = Vec::new();
    for (id, &iv) in intervals.iter().enumerate() {
        let (d, r) = sweep_interval(template, panels, id, iv, opts)?;
        diags.push(d);
        reports.extend(r);
    }
    reports.sort_by(|a, b| a.k_root.total_cmp(&b.k_root).then(a.interval.cmp(&b.interval)));
    let cutoff = opts.post.eps_cheb.sqrt();
    let accepted: Vec<usize> = (0..reports.len())
        .filter(|&i| reports[i].status == RootStatus::Accepted)
        .collect();
    for w in accepted.windows(2) {
        let (p, q) = (w[0], w[1]);
        if reports[p].interval != reports[q].interval
            && reports[q].k_root - reports[p].k_root < cutoff
            && reports[p].status == RootStatus::Accepted
        {
            let drop = if reports[q].sigma_min < reports[p].sigma_min { p } else { q };
            let keep = p + q - drop;
            reports[drop].status = RootStatus::SpuriousPair;
            reports[drop].note = Some(format!("also found in interval {}", reports[keep].interval));
        }
    }
    Ok(SweepResult { reports, intervals: diags })
}

/// Root of `det A(k)` nearest `k0`, from a small fit on `[k0 − h, k0 + h]`.
pub fn polish_root(builder: &SystemBuilder<'_>, k0: f64, h: f64, opts: &FitOptions) -> Result<(f64, ChebInterpolant)> {
    let small = FitOptions { initial_points: opts.initial_points.min(4), ..*opts };
    let fit = fit_interval(builder, k0 - h, k0 + h, &small)?;
    let roots = find_roots(&fit, &small)?;
    roots
        .iter()
        .min_by(|p, q| (*p - k0).norm().total_cmp(&(*q - k0).norm()))
        .map(|z| (z.re, fit.clone()))
        .ok_or_else(|| Error::Inconsistent(format!("no root within {h} of {k0}")))
}

/// Real root of a determinant by secant steps from `k0`, `k1`; stops once a
/// step is below `tol`.
pub fn secant_root(det: impl Fn(f64) -> Result<LogDet>, k0: f64, k1: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let d0 = det(k0)?;
    let scale = d0.log_abs;
    if d0.is_zero() {
        return Ok(k0);
    }
    let (mut ka, mut fa) = (k0, d0.scaled(scale));
    let (mut kb, mut fb) = (k1, det(k1)?.scaled(scale));
    for _ in 0..max_iter {
        if fb.norm() == 0.0 {
            return Ok(kb);
        }
        let slope = (fb - fa) / (kb - ka);
        if slope.norm() == 0.0 {
            break;
        }
        let step = (fb / slope).re;
        ka = kb;
        fa = fb;
        kb -= step;
        if step.abs() <= tol {
            return Ok(kb);
        }
        fb = det(kb)?.scaled(scale);
    }
    Err(Error::Inconsistent(format!("secant iteration from {k0} did not settle within {max_iter} steps")))
}

/// Builder for `template` over frequencies up to `k_max`.
pub fn builder_for<'a>(
    template: &KernelContext,
    panels: &'a BoundaryPanels,
    k_max: f64,
    system: SystemOptions,
) -> Result<SystemBuilder<'a>> {
    SystemBuilder::new(*template, panels, Complex64::new(k_max, 0.0), system)
}
