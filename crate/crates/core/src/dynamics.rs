//! Hamiltonian flows on the surface and on the moduli space.
//!
//! The classical flow uses the implicit midpoint rule, which is symplectic and
//! preserves quadratic invariants exactly. The moduli flow is classical RK4 in
//! the ambient variables `(γ(s_i), θ₀(s_i))`: each stage moves the loop along
//! the normal field realizing `H_{F_f}` and the half-density by its `θ` part.
//! After every step `θ₀` is renormalized and the loop rescaled onto its
//! Bohr–Sommerfeld level; both corrections are logged.

use crate::cycles::{HalfDensity, Loop};
use crate::error::{Error, Result};
use crate::moduli::{normal_velocity, ModuliPoint};
use crate::spectral;
use crate::observables::{hamiltonian_field_explicit, InducedObservable};
use crate::symplectic::{ScalarField, SurfaceKind, SymplecticSurface, Vec2};

/// Newton iterations allowed per implicit-midpoint step.
pub const NEWTON_MAX_ITER: usize = 50;

/// Strength and order of the exponential filter applied to the loop
/// coordinates and `θ₀` after every moduli step. Collocated products in the
/// transport terms alias energy into the top modes; without the filter the
/// flow goes unstable at `N ≥ 64` whatever the step.
pub const FILTER_STRENGTH: f64 = 36.0;
pub const FILTER_ORDER: i32 = 36;

/// Residual above which an unconverged Newton solve is reported.
pub const NEWTON_TOL: f64 = 1e-12;

/// Number of steps and the uniform step that exactly covers `[0, t]`.
fn step_plan(t: f64, h: f64) -> Result<(usize, f64)> {
    if !(h > 0.0 && h.is_finite()) || !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("need h > 0 and T ≥ 0, got h = {h}, T = {t}")));
    }
    let n = (t / h).round() as usize;
    Ok(if n == 0 { (0, 0.0) } else { (n, t / n as f64) })
}

#[derive(Debug, Clone)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec2>,
}

impl ClassicalTrajectory {
    pub fn last(&self) -> Vec2 {
        *self.points.last().expect("trajectories start with p0")
    }

    /// `max_t |f(p_t) − f(p_0)|`.
    pub fn energy_drift(&self, f: &ScalarField) -> f64 {
        let e0 = f.eval(self.points[0]);
        self.points.iter().fold(0.0, |m, &p| m.max((f.eval(p) - e0).abs()))
    }
}

/// Implicit-midpoint integration of `ṗ = X_f(p)` up to time `t`.
pub fn flow_classical(surface: &SymplecticSurface, f: &ScalarField, p0: Vec2, t: f64, h: f64) -> Result<ClassicalTrajectory> {
    let (steps, dt) = step_plan(t, h)?;
    let torus = matches!(surface.kind(), SurfaceKind::Torus { .. });
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    let mut p = p0;
    times.push(0.0);
    points.push(if torus { surface.wrap(p) } else { p });
    for k in 0..steps {
        p = midpoint_step(surface, f, p, dt).map_err(|residual| Error::NewtonDivergence { time: k as f64 * dt, residual })?;
        times.push((k + 1) as f64 * dt);
        points.push(if torus { surface.wrap(p) } else { p });
    }
    Ok(ClassicalTrajectory { times, points })
}

/// Solve `q = p + dt·X((p + q)/2)` by Newton's method with a central
/// difference Jacobian. On failure returns the last residual.
fn midpoint_step(surface: &SymplecticSurface, f: &ScalarField, p: Vec2, dt: f64) -> std::result::Result<Vec2, f64> {
    let x = |q: Vec2| surface.hamiltonian_vector_field(f, q);
    let residual = |q: Vec2| q - p - x((p + q) / 2.0) * dt;
    let mut q = p + x(p) * dt;
    let mut r = residual(q);
    for _ in 0..NEWTON_MAX_ITER {
        let scale = 1.0 + q.norm();
        if r.norm() <= 1e-15 * scale {
            return Ok(q);
        }
        let m = (p + q) / 2.0;
        let eps = 1e-6 * (1.0 + m.norm());
        let dx = (x(m + Vec2::new(eps, 0.0)) - x(m - Vec2::new(eps, 0.0))) / (2.0 * eps);
        let dy = (x(m + Vec2::new(0.0, eps)) - x(m - Vec2::new(0.0, eps))) / (2.0 * eps);
        let jac = nalgebra::Matrix2::identity() - nalgebra::Matrix2::from_columns(&[dx, dy]) * (dt / 2.0);
        let Some(delta) = jac.lu().solve(&r) else {
            return Err(r.norm());
        };
        q -= delta;
        let next = residual(q);
        if !next.x.is_finite() || !next.y.is_finite() {
            return Err(f64::INFINITY);
        }
        // stalled at rounding level
        if delta.norm() <= 4.0 * f64::EPSILON * scale && next.norm() <= NEWTON_TOL * scale {
            return Ok(q);
        }
        r = next;
    }
    if r.norm() <= NEWTON_TOL * (1.0 + q.norm()) {
        Ok(q)
    } else {
        Err(r.norm())
    }
}

/// One row of the moduli trajectory log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub t: f64,
    /// `F_f` at the projected point.
    pub value: f64,
    /// `|∫θ₀² − 1|` before renormalization.
    pub volume_defect: f64,
    /// Bohr–Sommerfeld defect before re-projection.
    pub bs_defect: f64,
    /// `mean(x + √2·y)` over the loop samples.
    pub loop_checksum: f64,
}

#[derive(Debug, Clone)]
pub struct ModuliTrajectory {
    pub samples: Vec<FlowSample>,
    /// `(t, point)` every `snapshot_every` steps, including `t = 0`.
    pub snapshots: Vec<(f64, ModuliPoint)>,
    pub final_point: ModuliPoint,
}

pub fn loop_checksum(cycle: &Loop) -> f64 {
    let s = std::f64::consts::SQRT_2;
    cycle.points().iter().map(|p| p.x + s * p.y).sum::<f64>() / cycle.len() as f64
}

struct Ambient {
    points: Vec<Vec2>,
    theta: Vec<f64>,
}

impl Ambient {
    fn axpy(&self, c: f64, d: &Ambient) -> Ambient {
        Ambient {
            points: self.points.iter().zip(&d.points).map(|(a, b)| a + b * c).collect(),
            theta: self.theta.iter().zip(&d.theta).map(|(a, b)| a + b * c).collect(),
        }
    }
}

fn filtered(state: Ambient) -> Ambient {
    let filter = |u: &[f64]| spectral::exponential_filter(u, FILTER_STRENGTH, FILTER_ORDER);
    let xs: Vec<f64> = state.points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = state.points.iter().map(|p| p.y).collect();
    let (xs, ys) = (filter(&xs), filter(&ys));
    Ambient {
        points: xs.into_iter().zip(ys).map(|(x, y)| Vec2::new(x, y)).collect(),
        theta: filter(&state.theta),
    }
}

fn velocity(surface: &SymplecticSurface, f: &InducedObservable, state: &Ambient, winding: (i64, i64)) -> Result<Ambient> {
    let cycle = Loop::with_winding(state.points.clone(), winding)?;
    let p = ModuliPoint::from_parts_unchecked(cycle, HalfDensity::new(state.theta.clone())?);
    let h = hamiltonian_field_explicit(surface, f, &p)?;
    let nu = normal_velocity(surface, p.cycle().points(), &p.cycle().tangents(), &h.fvec)?;
    Ok(Ambient { points: nu, theta: h.tvec })
}

/// One RK4 step of the moduli flow followed by renormalization and
/// Bohr–Sommerfeld re-projection.
pub fn step_moduli(surface: &SymplecticSurface, f: &InducedObservable, p: &ModuliPoint, h: f64) -> Result<(ModuliPoint, FlowSample)> {
    let winding = p.cycle().winding();
    let y = Ambient { points: p.cycle().points().to_vec(), theta: p.theta_values().to_vec() };
    let k1 = velocity(surface, f, &y, winding)?;
    let k2 = velocity(surface, f, &y.axpy(h / 2.0, &k1), winding)?;
    let k3 = velocity(surface, f, &y.axpy(h / 2.0, &k2), winding)?;
    let k4 = velocity(surface, f, &y.axpy(h, &k3), winding)?;
    let next = y.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4);
    let next = filtered(next);
    let theta = HalfDensity::new(next.theta)?;
    let volume_defect = (theta.volume() - 1.0).abs();
    let cycle = Loop::with_winding(next.points, winding)?;
    let bs_defect = cycle.bs_defect(surface)?;
    let q = ModuliPoint::from_parts_unchecked(cycle.project_to_bs(surface)?, theta.normalized()?);
    let sample = FlowSample { t: 0.0, value: f.evaluate(&q), volume_defect, bs_defect, loop_checksum: loop_checksum(q.cycle()) };
    Ok((q, sample))
}

/// RK4 flow of `H_{F_f}` from `p0` up to time `t`. `snapshot_every = 0`
/// disables snapshots.
pub fn flow_moduli(surface: &SymplecticSurface, f: &InducedObservable, p0: &ModuliPoint, t: f64, h: f64, snapshot_every: usize) -> Result<ModuliTrajectory> {
    let (steps, dt) = step_plan(t, h)?;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    samples.push(FlowSample {
        t: 0.0,
        value: f.evaluate(p0),
        volume_defect: (p0.theta().volume() - 1.0).abs(),
        bs_defect: p0.cycle().bs_defect(surface)?,
        loop_checksum: loop_checksum(p0.cycle()),
    });
    if snapshot_every > 0 {
        snapshots.push((0.0, p0.clone()));
    }
    let mut p = p0.clone();
    for k in 0..steps {
        let (q, mut sample) = step_moduli(surface, f, &p, dt)?;
        sample.t = (k + 1) as f64 * dt;
        samples.push(sample);
        if snapshot_every > 0 && (k + 1) % snapshot_every == 0 {
            snapshots.push((sample.t, q.clone()));
        }
        p = q;
    }
    Ok(ModuliTrajectory { samples, snapshots, final_point: p })
}
