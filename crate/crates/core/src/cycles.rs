//! Discretized closed loops, half-densities, and the Bohr–Sommerfeld condition.
//!
//! A [`Loop`] stores `N` samples `γ(s_i)`, `s_i = i/N`, of a closed curve.
//! Every embedded closed curve in a surface is Lagrangian, so no further
//! constraint is needed. Loops are kept in a fixed uniform parametrization;
//! all observables are invariant under cyclic index rotation, which is how the
//! reparametrization freedom shows up at this level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;
use crate::symplectic::{SurfaceKind, SymplecticSurface, Vec2};

/// Minimum allowed distance between consecutive samples.
pub const MIN_SEGMENT: f64 = 1e-12;

/// Default Bohr–Sommerfeld tolerance on `|∮α − round(∮α)|`.
pub const TOL_BS: f64 = 1e-9;

/// Smallest `|∮α|` that [`Loop::project_to_bs`] will rescale.
pub const MIN_PROJECTABLE_ACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    points: Vec<Vec2>,
    winding: (i64, i64),
}

impl Loop {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        Self::with_winding(points, (0, 0))
    }

    /// Loop on the torus lift with homotopy witness `winding`.
    pub fn with_winding(points: Vec<Vec2>, winding: (i64, i64)) -> Result<Self> {
        let n = points.len();
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("loops need an even sample count N ≥ 16, got {n}")));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::DegenerateLoop("non-finite sample".into()));
        }
        let l = Self { points, winding };
        let seg = l.min_segment_length();
        if seg <= MIN_SEGMENT {
            return Err(Error::DegenerateLoop(format!("consecutive samples {seg:e} apart")));
        }
        Ok(l)
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> Vec2) -> Result<Self> {
        Self::new(spectral::grid(n).into_iter().map(f).collect())
    }

    /// Positively oriented circle.
    pub fn circle(center: Vec2, radius: f64, n: usize) -> Result<Self> {
        Self::ellipse(center, radius, radius, n)
    }

    /// Positively oriented axis-aligned ellipse with semi-axes `(a, b)`.
    pub fn ellipse(center: Vec2, a: f64, b: f64, n: usize) -> Result<Self> {
        Self::from_fn(n, |s| {
            let t = 2.0 * std::f64::consts::PI * s;
            center + Vec2::new(a * t.cos(), b * t.sin())
        })
    }

    /// Star-shaped loop `r(t) = radius·(1 + Σ a_k cos kt + b_k sin kt)`.
    pub fn perturbed_circle(center: Vec2, radius: f64, modes: &[(u32, f64, f64)], n: usize) -> Result<Self> {
        Self::from_fn(n, |s| {
            let t = 2.0 * std::f64::consts::PI * s;
            let r = radius
                * (1.0
                    + modes
                        .iter()
                        .map(|&(k, a, b)| a * (k as f64 * t).cos() + b * (k as f64 * t).sin())
                        .sum::<f64>());
            center + Vec2::new(r * t.cos(), r * t.sin())
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn winding(&self) -> (i64, i64) {
        self.winding
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.y).collect()
    }

    /// Spectral tangent `γ'(s_i)`.
    pub fn tangents(&self) -> Vec<Vec2> {
        let dx = spectral::derivative(&self.xs());
        let dy = spectral::derivative(&self.ys());
        dx.into_iter().zip(dy).map(|(a, b)| Vec2::new(a, b)).collect()
    }

    /// `f ∘ γ` sampled on the grid.
    pub fn restrict(&self, f: impl Fn(Vec2) -> f64) -> Vec<f64> {
        self.points.iter().map(|&p| f(p)).collect()
    }

    pub fn min_segment_length(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| (self.points[(i + 1) % n] - self.points[i]).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> Vec2 {
        self.points.iter().sum::<Vec2>() / self.points.len() as f64
    }

    /// Cyclic index shift: sample `i` of the result is sample `i + shift`.
    pub fn rotated(&self, shift: usize) -> Self {
        let mut points = self.points.clone();
        points.rotate_left(shift % self.points.len());
        Self { points, winding: self.winding }
    }

    /// Opposite orientation, keeping `s = 0` fixed.
    pub fn reversed(&self) -> Self {
        let n = self.points.len();
        let points = (0..n).map(|i| self.points[(n - i) % n]).collect();
        Self { points, winding: (-self.winding.0, -self.winding.1) }
    }

    pub fn scaled_about_centroid(&self, factor: f64) -> Result<Self> {
        let c = self.centroid();
        Self::with_winding(self.points.iter().map(|&p| c + (p - c) * factor).collect(), self.winding)
    }

    pub fn translated(&self, by: Vec2) -> Self {
        Self { points: self.points.iter().map(|&p| p + by).collect(), winding: self.winding }
    }

    /// Whether the closed polygon through the samples is simple. Brute-force
    /// segment test; meant for diagnostics, not for hot loops.
    pub fn is_simple(&self) -> bool {
        let n = self.points.len();
        let seg = |i: usize| (self.points[i], self.points[(i + 1) % n]);
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = seg(i);
                let (c, d) = seg(j);
                if segments_cross(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    fn check_contractible(&self, surface: &SymplecticSurface) -> Result<()> {
        if let SurfaceKind::Torus { .. } = surface.kind() {
            surface.check_prequantizable()?;
            if self.winding != (0, 0) {
                return Err(Error::NonContractibleLoop(self.winding.0, self.winding.1));
            }
        }
        Ok(())
    }

    /// `A(γ) = ∮ α`, so that the prequantum holonomy is `exp(2πi A)`.
    pub fn action_integral(&self, surface: &SymplecticSurface) -> Result<f64> {
        self.check_contractible(surface)?;
        let t = self.tangents();
        let integrand: Vec<f64> = self
            .points
            .iter()
            .zip(&t)
            .map(|(&p, dp)| surface.potential(p).dot(dp))
            .collect();
        Ok(spectral::integrate(&integrand))
    }

    /// `A(γ) − round(A(γ))`, in `[−½, ½)`.
    pub fn bs_defect(&self, surface: &SymplecticSurface) -> Result<f64> {
        let a = self.action_integral(surface)?;
        Ok(a - (a + 0.5).floor())
    }

    pub fn is_bohr_sommerfeld(&self, surface: &SymplecticSurface, tol: f64) -> Result<bool> {
        Ok(self.bs_defect(surface)?.abs() <= tol)
    }

    /// Homothety about the vertex centroid onto the nearest nonzero integer
    /// action level. For constant density one factor `√(k/A)` is exact; the
    /// secant refinement covers non-constant densities.
    pub fn project_to_bs(&self, surface: &SymplecticSurface) -> Result<Self> {
        let a0 = self.action_integral(surface)?;
        let k = a0.round();
        if a0.abs() <= MIN_PROJECTABLE_ACTION || k == 0.0 {
            return Err(Error::AreaTooSmall { action: a0 });
        }
        let mut lam = (k / a0).sqrt();
        let mut candidate = self.scaled_about_centroid(lam)?;
        let mut a = candidate.action_integral(surface)?;
        let (mut lam_prev, mut a_prev) = (1.0, a0);
        for _ in 0..50 {
            if (a - k).abs() <= 1e-13 * k.abs().max(1.0) || a == a_prev {
                break;
            }
            let next = lam - (a - k) * (lam - lam_prev) / (a - a_prev);
            lam_prev = lam;
            a_prev = a;
            lam = next;
            candidate = self.scaled_about_centroid(lam)?;
            a = candidate.action_integral(surface)?;
        }
        Ok(candidate)
    }

    /// Trigonometric interpolation onto an `m`-point grid.
    pub fn resample(&self, m: usize) -> Result<Self> {
        let xs = spectral::interpolate(&self.xs(), m);
        let ys = spectral::interpolate(&self.ys(), m);
        Self::with_winding(xs.into_iter().zip(ys).map(|(x, y)| Vec2::new(x, y)).collect(), self.winding)
    }

    pub fn to_json(&self, theta: Option<&HalfDensity>) -> String {
        let doc = CycleJson {
            points: self.points.iter().map(|p| [p.x, p.y]).collect(),
            theta: theta.map(|t| t.values.clone()),
        };
        serde_json::to_string(&doc).expect("plain data serializes")
    }

    pub fn from_json(src: &str) -> Result<(Self, Option<HalfDensity>)> {
        let doc: CycleJson = serde_json::from_str(src).map_err(|e| Error::InvalidInput(e.to_string()))?;
        doc.into_parts()
    }

    /// Per-sample diagnostics as CSV: `s,x,y,dx,dy,theta`.
    pub fn diagnostics_csv(&self, theta: Option<&HalfDensity>) -> String {
        let t = self.tangents();
        let mut out = String::from("s,x,y,dx,dy,theta\n");
        for (i, (p, d)) in self.points.iter().zip(&t).enumerate() {
            let th = theta.map_or(f64::NAN, |h| h.values[i]);
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                i as f64 / self.len() as f64,
                p.x,
                p.y,
                d.x,
                d.y,
                th
            ));
        }
        out
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// JSON layout shared by loops and moduli points:
/// `{"points": [[x, y], ...], "theta": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleJson {
    pub points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
}

impl CycleJson {
    pub fn into_parts(self) -> Result<(Loop, Option<HalfDensity>)> {
        let l = Loop::new(self.points.into_iter().map(|[x, y]| Vec2::new(x, y)).collect())?;
        let theta = match self.theta {
            Some(v) if v.len() != l.len() => {
                return Err(Error::DimensionMismatch { expected: l.len(), got: v.len() });
            }
            Some(v) => Some(HalfDensity::new(v)?),
            None => None,
        };
        Ok((l, theta))
    }
}

/// A half-density `θ = h(s)√ds` on the parameter circle, stored as `h(s_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfDensity {
    values: Vec<f64>,
}

impl HalfDensity {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("half-density values must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn uniform(n: usize) -> Self {
        Self { values: vec![1.0; n] }
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(spectral::grid(n).into_iter().map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `∫ θ² = (1/N) Σ h_i²`.
    pub fn volume(&self) -> f64 {
        spectral::inner(&self.values, &self.values)
    }

    pub fn normalized(&self) -> Result<Self> {
        let v = self.volume();
        if !(v > 0.0) {
            return Err(Error::InvalidInput("cannot normalize a zero half-density".into()));
        }
        let s = v.sqrt().recip();
        Ok(Self { values: self.values.iter().map(|h| h * s).collect() })
    }

    pub fn rotated(&self, shift: usize) -> Self {
        let mut values = self.values.clone();
        values.rotate_left(shift % self.values.len());
        Self { values }
    }

    pub fn resample(&self, m: usize) -> Result<Self> {
        Self::new(spectral::interpolate(&self.values, m))
    }
}
