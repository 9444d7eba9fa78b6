//! JSON run configuration.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detsweep::{FitOptions, PostprocessOptions, SweepOptions};
use crate::error::{Error, Result};
use crate::geometry::{
    make_annulus, make_barbell_scaled, make_starfish_domain_with, panelize, BoundaryPanels, Circle, CurveComponent,
    Orientation, RadialFourier, StarfishParams,
};
use crate::operator::SystemOptions;
use crate::potentials::{Formulation, KernelContext};
use crate::quadrature::QuadratureOptions;

/// Built-in domain, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    /// Concentric circles; the outer one gets `⌈(r2/r1) n⌉ + 1` panels.
    Annulus { r1: f64, r2: f64, n_inner_panels: usize },
    Circle {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        panels: Option<usize>,
    },
    Barbell {
        #[serde(default = "one")]
        scale: f64,
        rounding_h: f64,
    },
    /// Rounded rectangle with starfish holes rotated by the run seed.
    Starfish {
        #[serde(default)]
        params: StarfishParams,
    },
    /// Star-shaped curve `r(θ) = a0 + Σ (a cos jθ + b sin jθ)`; modes are `[j, a, b]`.
    Fourier {
        #[serde(default)]
        center: [f64; 2],
        a0: f64,
        #[serde(default)]
        modes: Vec<(u32, f64, f64)>,
    },
}

fn one() -> f64 {
    1.0
}

impl GeometrySpec {
    /// Whether this geometry fixes its own panel counts.
    pub fn prescribes_panels(&self) -> bool {
        matches!(self, GeometrySpec::Annulus { .. } | GeometrySpec::Circle { panels: Some(_), .. })
    }

    pub fn components(&self, seed: u64) -> Result<Vec<CurveComponent>> {
        match self {
            GeometrySpec::Annulus { r1, r2, n_inner_panels } => make_annulus(*r1, *r2, *n_inner_panels),
            GeometrySpec::Circle { radius, panels } => {
                if !(*radius > 0.0) {
                    return Err(Error::config("geometry.radius", "must be positive"));
                }
                let c = CurveComponent::new(Circle { center: [0.0, 0.0], radius: *radius }, Orientation::Outer);
                Ok(vec![match panels {
                    Some(n) => c.with_panels(*n),
                    None => c,
                }])
            }
            GeometrySpec::Barbell { scale, rounding_h } => make_barbell_scaled(*scale, *rounding_h),
            GeometrySpec::Starfish { params } => make_starfish_domain_with(seed, params),
            GeometrySpec::Fourier { center, a0, modes } => {
                let curve = RadialFourier { center: *center, a0: *a0, modes: modes.clone() };
                if !(curve.min_radius() > 0.0) {
                    return Err(Error::config("geometry.a0", "radius function must stay positive"));
                }
                Ok(vec![CurveComponent::new(curve, Orientation::Outer)])
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub duplicate_tol: f64,
    pub simple_sigma2: f64,
    pub refine_tol: f64,
    pub quadrature_tol: f64,
    pub initial_points: usize,
    pub max_degree: usize,
    pub ellipse_rho: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let fit = FitOptions::default();
        let post = PostprocessOptions::default();
        Tolerances {
            duplicate_tol: post.duplicate_tol,
            simple_sigma2: post.simple_sigma2,
            refine_tol: SweepOptions::default().refine_tol,
            quadrature_tol: QuadratureOptions::default().tol,
            initial_points: fit.initial_points,
            max_degree: fit.max_degree,
            ellipse_rho: fit.ellipse_rho,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometrySpec,
    #[serde(default = "default_formulation")]
    pub formulation: Formulation,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default)]
    pub allow_double_layer_multiply_connected: bool,
    pub intervals: Vec<[f64; 2]>,
    #[serde(default = "default_eps")]
    pub eps_cheb: f64,
    /// Defaults to one wavelength `2π/k_max` unless the geometry fixes panel counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_panel_len: Option<f64>,
    #[serde(default = "default_min_panel")]
    pub min_panel_len: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_formulation() -> Formulation {
    Formulation::CombinedField
}

fn default_eps() -> f64 {
    1e-13
}

fn default_min_panel() -> f64 {
    1e-3
}

/// Panel cap used when a geometry prescribes its own counts.
const UNCAPPED: f64 = 1e6;

impl RunConfig {
    /// Parse and validate. Errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::config("config", format!("not valid JSON: {e}")))?;
        let obj = value.as_object().ok_or_else(|| Error::config("config", "expected a JSON object"))?;
        for key in ["geometry", "intervals"] {
            if !obj.contains_key(key) {
                return Err(Error::config(key, "missing"));
            }
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let field = path.split(['.', '[']).next().filter(|f| !f.is_empty() && *f != "?").unwrap_or("config");
            Error::config(field, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals.is_empty() {
            return Err(Error::config("intervals", "at least one interval is required"));
        }
        for (i, iv) in self.intervals.iter().enumerate() {
            if !(iv[0] > 0.0 && iv[1] > iv[0] && iv[1].is_finite()) {
                return Err(Error::config("intervals", format!("interval {i} = {iv:?} must satisfy 0 < a < b")));
            }
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::config("eta", "must be positive and finite"));
        }
        if !(self.eps_cheb > 0.0 && self.eps_cheb < 1e-2) {
            return Err(Error::config("eps_cheb", "must lie in (0, 1e-2)"));
        }
        if let Some(m) = self.max_panel_len {
            if !(m > self.min_panel_len) {
                return Err(Error::config("max_panel_len", "must exceed min_panel_len"));
            }
        }
        if !(self.min_panel_len > 0.0) {
            return Err(Error::config("min_panel_len", "must be positive"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        let t = &self.tolerances;
        if !(t.duplicate_tol > 0.0 && t.simple_sigma2 > 0.0 && t.refine_tol > 0.0 && t.quadrature_tol > 0.0) {
            return Err(Error::config("tolerances", "all tolerances must be positive"));
        }
        if t.initial_points < 2 || t.max_degree < t.initial_points {
            return Err(Error::config("tolerances", "need 2 <= initial_points <= max_degree"));
        }
        if !(t.ellipse_rho >= 1.0) {
            return Err(Error::config("tolerances.ellipse_rho", "must be at least 1"));
        }
        let multiply = match &self.geometry {
            GeometrySpec::Annulus { .. } => true,
            GeometrySpec::Starfish { params } => !params.centers.is_empty(),
            _ => false,
        };
        if multiply && self.formulation == Formulation::DoubleLayer && !self.allow_double_layer_multiply_connected {
            return Err(Error::config(
                "formulation",
                "double_layer is not invertible on multiply connected domains; use combined_field or set allow_double_layer_multiply_connected",
            ));
        }
        Ok(())
    }

    pub fn k_max(&self) -> f64 {
        self.intervals.iter().map(|iv| iv[1]).fold(0.0, f64::max)
    }

    pub fn effective_max_panel_len(&self) -> f64 {
        match self.max_panel_len {
            Some(m) => m,
            None if self.geometry.prescribes_panels() => UNCAPPED,
            None => TAU / self.k_max(),
        }
    }

    pub fn panels(&self) -> Result<BoundaryPanels> {
        let comps = self.geometry.components(self.seed)?;
        panelize(&comps, self.effective_max_panel_len(), self.min_panel_len)
    }

    /// Kernel template; the frequency is replaced per sample.
    pub fn template(&self) -> Result<KernelContext> {
        KernelContext::new(Complex64::new(self.k_max(), 0.0), self.eta, self.formulation)
    }

    pub fn sweep_options(&self) -> SweepOptions {
        let t = &self.tolerances;
        SweepOptions {
            fit: FitOptions {
                eps_cheb: self.eps_cheb,
                initial_points: t.initial_points,
                max_degree: t.max_degree,
                ellipse_rho: t.ellipse_rho,
            },
            post: PostprocessOptions {
                eps_cheb: self.eps_cheb,
                duplicate_tol: t.duplicate_tol,
                simple_sigma2: t.simple_sigma2,
            },
            refine_tol: t.refine_tol,
            system: SystemOptions {
                allow_double_layer_multiply_connected: self.allow_double_layer_multiply_connected,
                quadrature: QuadratureOptions { tol: t.quadrature_tol, ..Default::default() },
                ..Default::default()
            },
        }
    }

    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.intervals.iter().map(|iv| (iv[0], iv[1])).collect()
    }
}
