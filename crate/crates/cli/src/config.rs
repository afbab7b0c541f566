//! JSON experiment configs.
//!
//! Scalar fields are expression strings in the core grammar: `x`, `y`, numeric
//! literals, `pi`, `+ - * /`, `^` with integer exponents, and `sin`/`cos`.

use std::f64::consts::PI;

use bsq_core::{HalfDensity, InducedObservable, Loop, ModuliPoint, PlaneGauge, ScalarField, SurfaceKind, SymplecticSurface, Vec2};
use serde::Deserialize;

use crate::CliError;

fn prep<T>(what: &str, r: bsq_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(format!("{what}: {e}")))
}

pub fn field(src: &str) -> Result<ScalarField, CliError> {
    prep(&format!("field `{src}`"), ScalarField::parse(src))
}

pub fn observable(src: &str, tau: f64) -> Result<InducedObservable, CliError> {
    prep(&format!("observable `{src}`"), InducedObservable::with_scale(field(src)?, tau))
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    #[default]
    Plane,
    /// Plane with `α = x dy` or `α = −y dx` instead of the symmetric potential.
    PlaneGauge { gauge: GaugeSpec },
    Torus { lx: f64, ly: f64 },
    /// Plane chart with a non-constant area density `w` and potential `α`.
    Density { density: String, alpha_x: String, alpha_y: String },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeSpec {
    Symmetric,
    XDy,
    MinusYDx,
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<SymplecticSurface, CliError> {
        match self {
            SurfaceSpec::Plane => Ok(SymplecticSurface::plane()),
            SurfaceSpec::PlaneGauge { gauge } => Ok(SymplecticSurface::plane_with_gauge(match gauge {
                GaugeSpec::Symmetric => PlaneGauge::Symmetric,
                GaugeSpec::XDy => PlaneGauge::XDy,
                GaugeSpec::MinusYDx => PlaneGauge::MinusYDx,
            })),
            SurfaceSpec::Torus { lx, ly } => prep("torus", SymplecticSurface::torus(*lx, *ly)),
            SurfaceSpec::Density { density, alpha_x, alpha_y } => prep(
                "surface",
                SymplecticSurface::with_density(SurfaceKind::Plane, field(density)?, field(alpha_x)?, field(alpha_y)?),
            ),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoopShape {
    Circle { center: [f64; 2], radius: f64 },
    Ellipse { center: [f64; 2], a: f64, b: f64 },
    /// Radius `r(1 + Σ a_k cos kt + b_k sin kt)`, modes given as `[k, a_k, b_k]`.
    Perturbed { center: [f64; 2], radius: f64, modes: Vec<(u32, f64, f64)> },
    /// Explicit samples, spectrally resampled to the requested `N`.
    Points { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Deserialize)]
pub struct LoopSpec {
    pub id: String,
    #[serde(flatten)]
    pub shape: LoopShape,
    /// Rescale onto the nearest Bohr–Sommerfeld level before use.
    #[serde(default = "yes")]
    pub project: bool,
}

fn yes() -> bool {
    true
}

fn v([x, y]: [f64; 2]) -> Vec2 {
    Vec2::new(x, y)
}

impl LoopSpec {
    /// The raw loop at `n` samples, before any projection.
    pub fn sample(&self, n: usize) -> Result<Loop, CliError> {
        let what = format!("loop `{}`", self.id);
        let l = match &self.shape {
            LoopShape::Circle { center, radius } => Loop::circle(v(*center), *radius, n),
            LoopShape::Ellipse { center, a, b } => Loop::ellipse(v(*center), *a, *b, n),
            LoopShape::Perturbed { center, radius, modes } => Loop::perturbed_circle(v(*center), *radius, modes, n),
            LoopShape::Points { points } => Loop::new(points.iter().copied().map(v).collect()).and_then(|l| l.resample(n)),
        };
        prep(&what, l)
    }

    pub fn build(&self, surface: &SymplecticSurface, n: usize) -> Result<Loop, CliError> {
        let l = self.sample(n)?;
        if self.project {
            prep(&format!("loop `{}`", self.id), l.project_to_bs(surface))
        } else {
            Ok(l)
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaShape {
    Uniform,
    /// `1 + amplitude·cos(2π·mode·s)` before normalization.
    Cosine {
        amplitude: f64,
        #[serde(default = "one")]
        mode: u32,
    },
    Values { values: Vec<f64> },
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Deserialize)]
pub struct ThetaSpec {
    pub id: String,
    #[serde(flatten)]
    pub shape: ThetaShape,
}

impl ThetaSpec {
    /// Unit-volume half-density at `n` samples.
    pub fn build(&self, n: usize) -> Result<HalfDensity, CliError> {
        let th = match &self.shape {
            ThetaShape::Uniform => Ok(HalfDensity::uniform(n)),
            ThetaShape::Cosine { amplitude, mode } => {
                let (a, k) = (*amplitude, *mode as f64);
                HalfDensity::from_fn(n, |s| 1.0 + a * (2.0 * PI * k * s).cos())
            }
            ThetaShape::Values { values } => HalfDensity::new(values.clone()).and_then(|h| h.resample(n)),
        };
        prep(&format!("theta `{}`", self.id), th.and_then(|h| h.normalized()))
    }
}

pub fn moduli_point(surface: &SymplecticSurface, l: &LoopSpec, th: &ThetaSpec, n: usize) -> Result<ModuliPoint, CliError> {
    let cycle = l.build(surface, n)?;
    let theta = th.build(n)?;
    prep(&format!("point `{}/{}`", l.id, th.id), ModuliPoint::new(surface, cycle, theta))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketConfig {
    #[serde(default)]
    pub surface: SurfaceSpec,
    pub pairs: Vec<(String, String)>,
    #[serde(default)]
    pub loops: Vec<LoopSpec>,
    #[serde(default)]
    pub thetas: Vec<ThetaSpec>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default = "unit")]
    pub tau: f64,
    #[serde(default = "bracket_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn unit() -> f64 {
    1.0
}

fn bracket_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityConfig {
    #[serde(default)]
    pub surface: SurfaceSpec,
    pub pairs: Vec<(String, String)>,
    #[serde(default)]
    pub loops: Vec<LoopSpec>,
    #[serde(default)]
    pub n: Vec<usize>,
    /// Bound on the pointwise restriction-identity residual.
    #[serde(default = "identity_tol")]
    pub tol: f64,
    /// Bound on the horizontal/vertical compatibility residuals.
    #[serde(default = "compat_tol")]
    pub compat_tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn identity_tol() -> f64 {
    1e-8
}

fn compat_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalFlowSpec {
    pub id: String,
    pub f: String,
    pub p0: [f64; 2],
    pub t: f64,
    pub h: f64,
    #[serde(default = "every_step")]
    pub sample_every: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuliFlowSpec {
    pub id: String,
    pub f: String,
    #[serde(default = "unit")]
    pub tau: f64,
    #[serde(rename = "loop")]
    pub cycle: LoopSpec,
    pub theta: ThetaSpec,
    pub n: usize,
    pub t: f64,
    pub h: f64,
    #[serde(default = "every_step")]
    pub sample_every: usize,
    /// Write a JSON snapshot every this many steps; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_every: usize,
}

fn every_step() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default)]
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub classical: Vec<ClassicalFlowSpec>,
    #[serde(default)]
    pub moduli: Vec<ModuliFlowSpec>,
    /// Optional bound on the conserved-quantity drift of every trajectory.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub id: String,
    #[serde(rename = "loop")]
    pub cycle: LoopSpec,
    pub n: usize,
    /// Homothety factors about the loop centroid, `steps` samples from `from` to `to`.
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default)]
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub scans: Vec<ScanSpec>,
    /// Bound on the defect of every located Bohr–Sommerfeld scale.
    #[serde(default = "scan_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn scan_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QmConfig {
    #[serde(default)]
    pub dims: Vec<usize>,
    #[serde(default = "qm_instances")]
    pub instances: usize,
    #[serde(default = "unit")]
    pub hbar: f64,
    #[serde(default = "unit")]
    pub t: f64,
    #[serde(default = "qm_step")]
    pub h: f64,
    /// Bound on the RK4 versus exact propagation error.
    #[serde(default = "qm_tol")]
    pub tol: f64,
    /// Bound on eigenvector residuals and on the relative spread of κ.
    #[serde(default = "eig_tol")]
    pub eig_tol: f64,
    #[serde(default)]
    pub seed: u64,
}

fn qm_instances() -> usize {
    10
}

fn qm_step() -> f64 {
    1e-3
}

fn qm_tol() -> f64 {
    1e-8
}

fn eig_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default)]
    pub surface: SurfaceSpec,
    pub pairs: Vec<(String, String)>,
    #[serde(rename = "loop")]
    pub cycle: LoopSpec,
    pub theta: ThetaSpec,
    pub n: Vec<usize>,
    /// Bound on the bracket spread and restriction residual at the finest `N`.
    #[serde(default = "bracket_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_and_theta_specs_parse() {
        let l: LoopSpec = serde_json::from_str(r#"{"id": "p", "kind": "perturbed", "center": [0, 0], "radius": 0.6, "modes": [[2, 0.1, 0.0]]}"#).unwrap();
        assert!(l.project);
        let m = SymplecticSurface::plane();
        let cycle = l.build(&m, 64).unwrap();
        assert!(cycle.bs_defect(&m).unwrap() < 1e-9);
        let th: ThetaSpec = serde_json::from_str(r#"{"id": "c", "kind": "cosine", "amplitude": 0.5, "mode": 2}"#).unwrap();
        assert!((th.build(64).unwrap().volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn explicit_points_are_resampled() {
        let pts: Vec<[f64; 2]> = (0..20).map(|i| {
            let t = 2.0 * PI * i as f64 / 20.0;
            [t.cos(), t.sin()]
        }).collect();
        let l = LoopSpec { id: "pts".into(), shape: LoopShape::Points { points: pts }, project: false };
        assert_eq!(l.sample(64).unwrap().len(), 64);
    }

    #[test]
    fn bad_inputs_are_config_errors() {
        assert!(matches!(field("x +"), Err(CliError::Config(_))));
        assert!(matches!(observable("x", -1.0), Err(CliError::Config(_))));
        let tiny = LoopSpec { id: "t".into(), shape: LoopShape::Circle { center: [0.0, 0.0], radius: 0.01 }, project: true };
        assert!(matches!(tiny.build(&SymplecticSurface::plane(), 32), Err(CliError::Config(_))));
        assert!(serde_json::from_str::<SurfaceSpec>(r#"{"kind": "sphere"}"#).is_err());
    }

    #[test]
    fn surfaces_build() {
        let s: SurfaceSpec = serde_json::from_str(r#"{"kind": "density", "density": "1/pi", "alpha_x": "-y/(2*pi)", "alpha_y": "x/(2*pi)"}"#).unwrap();
        let m = s.build().unwrap();
        let unit = Loop::circle(Vec2::zeros(), 1.0, 64).unwrap();
        assert!(unit.bs_defect(&m).unwrap() < 1e-12);
        let t: SurfaceSpec = serde_json::from_str(r#"{"kind": "torus", "lx": 2, "ly": 1}"#).unwrap();
        assert!(t.build().is_ok());
    }
}
