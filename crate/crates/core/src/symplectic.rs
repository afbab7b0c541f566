//! Two-dimensional symplectic surfaces in global coordinates.
//!
//! Conventions fixed here and used by every other module:
//!
//! - `ω = w(x, y) dx∧dy` with `w > 0`.
//! - The Hamiltonian vector field satisfies `i_{X_f} ω = df`, so
//!   `X_f = (f_y / w, -f_x / w)`.
//! - `{f, g} = df(X_g) = (f_x g_y - f_y g_x) / w`, hence `{x, y} = 1`.
//! - `J(u_x, u_y) = (-u_y, u_x)` and `g(u, v) = ω(u, Jv) = w (u·v)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::expr::{self, Expr, Var};

pub type Vec2 = Vector2<f64>;

/// Default central-difference step for fields without a symbolic gradient.
pub const FD_STEP: f64 = 1e-4;

type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Symbolic { expr: Expr, dx: Expr, dy: Expr },
    Numeric { f: FieldFn, step: f64 },
}

/// A smooth real function on the chart.
///
/// Symbolic fields carry exact gradients; numeric fields fall back to
/// central differences with step [`FD_STEP`].
#[derive(Clone)]
pub struct ScalarField {
    repr: Repr,
    label: String,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("label", &self.label).finish()
    }
}

impl ScalarField {
    pub fn parse(src: &str) -> Result<Self> {
        let expr = Expr::parse(src)?;
        Ok(Self::with_label(expr, src.trim().to_string()))
    }

    pub fn from_expr(expr: Expr) -> Self {
        let label = expr.to_string();
        Self::with_label(expr, label)
    }

    fn with_label(expr: Expr, label: String) -> Self {
        let dx = expr.derivative(Var::X);
        let dy = expr.derivative(Var::Y);
        Self { repr: Repr::Symbolic { expr, dx, dy }, label }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_expr(Expr::Const(c))
    }

    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self { repr: Repr::Numeric { f: Arc::new(f), step: FD_STEP }, label: label.into() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn expr(&self) -> Option<&Expr> {
        match &self.repr {
            Repr::Symbolic { expr, .. } => Some(expr),
            Repr::Numeric { .. } => None,
        }
    }

    pub fn is_symbolic(&self) -> bool {
        self.expr().is_some()
    }

    pub fn eval(&self, p: Vec2) -> f64 {
        match &self.repr {
            Repr::Symbolic { expr, .. } => expr.eval(p.x, p.y),
            Repr::Numeric { f, .. } => f(p.x, p.y),
        }
    }

    pub fn grad(&self, p: Vec2) -> Vec2 {
        match &self.repr {
            Repr::Symbolic { dx, dy, .. } => Vec2::new(dx.eval(p.x, p.y), dy.eval(p.x, p.y)),
            Repr::Numeric { step, .. } => self.fd_grad(p, *step),
        }
    }

    /// Central-difference gradient, independent of any symbolic form.
    pub fn fd_grad(&self, p: Vec2, h: f64) -> Vec2 {
        let ex = Vec2::new(h, 0.0);
        let ey = Vec2::new(0.0, h);
        Vec2::new(
            (self.eval(p + ex) - self.eval(p - ex)) / (2.0 * h),
            (self.eval(p + ey) - self.eval(p - ey)) / (2.0 * h),
        )
    }

    /// Partial derivative as a field; only available for symbolic fields.
    pub fn partial(&self, v: Var) -> Result<ScalarField> {
        match &self.repr {
            Repr::Symbolic { dx, dy, .. } => {
                let d = if v == Var::X { dx.clone() } else { dy.clone() };
                Ok(ScalarField::from_expr(d))
            }
            Repr::Numeric { .. } => Err(Error::NotSymbolic(self.label.clone())),
        }
    }

    fn combine(&self, other: &ScalarField, op: char) -> ScalarField {
        let label = format!("({}){op}({})", self.label, other.label);
        match (self.expr(), other.expr()) {
            (Some(a), Some(b)) => {
                let e = match op {
                    '+' => expr::add(a.clone(), b.clone()),
                    '-' => expr::sub(a.clone(), b.clone()),
                    '*' => expr::mul(a.clone(), b.clone()),
                    _ => expr::div(a.clone(), b.clone()),
                };
                Self::with_label(e, label)
            }
            _ => {
                let (a, b) = (self.clone(), other.clone());
                Self::from_fn(label, move |x, y| {
                    let p = Vec2::new(x, y);
                    let (u, v) = (a.eval(p), b.eval(p));
                    match op {
                        '+' => u + v,
                        '-' => u - v,
                        '*' => u * v,
                        _ => u / v,
                    }
                })
            }
        }
    }

    pub fn plus(&self, other: &ScalarField) -> ScalarField {
        self.combine(other, '+')
    }

    pub fn minus(&self, other: &ScalarField) -> ScalarField {
        self.combine(other, '-')
    }

    pub fn times(&self, other: &ScalarField) -> ScalarField {
        self.combine(other, '*')
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        ScalarField::constant(c).times(self)
    }

    pub fn powi(&self, n: i32) -> ScalarField {
        match self.expr() {
            Some(e) => Self::with_label(expr::pow(e.clone(), n), format!("({})^{n}", self.label)),
            None => {
                let a = self.clone();
                Self::from_fn(format!("({})^{n}", self.label), move |x, y| a.eval(Vec2::new(x, y)).powi(n))
            }
        }
    }
}

/// Standard gauge choices of the symplectic potential on the plane (`w ≡ 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneGauge {
    /// `α = ½(x dy − y dx)`
    Symmetric,
    /// `α = x dy`
    XDy,
    /// `α = −y dx`
    MinusYDx,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceKind {
    Plane,
    Torus { lx: f64, ly: f64 },
}

/// A symplectic surface `(M, ω)` with a symplectic potential `α`, `dα = ω`.
///
/// The potential models the prequantum connection: the holonomy around a
/// contractible loop is `exp(2πi ∮ α)`.
#[derive(Debug, Clone)]
pub struct SymplecticSurface {
    kind: SurfaceKind,
    density: ScalarField,
    potential: [ScalarField; 2],
}

/// Tolerance of the finite-difference curl check `∂_x α_y − ∂_y α_x = w`.
pub const CURL_TOL: f64 = 1e-8;

impl SymplecticSurface {
    pub fn plane() -> Self {
        Self::plane_with_gauge(PlaneGauge::Symmetric)
    }

    pub fn plane_with_gauge(gauge: PlaneGauge) -> Self {
        let (ax, ay) = match gauge {
            PlaneGauge::Symmetric => ("-y/2", "x/2"),
            PlaneGauge::XDy => ("0", "x"),
            PlaneGauge::MinusYDx => ("-y", "0"),
        };
        Self {
            kind: SurfaceKind::Plane,
            density: ScalarField::constant(1.0),
            potential: [ScalarField::parse(ax).expect("static"), ScalarField::parse(ay).expect("static")],
        }
    }

    /// Flat torus `[0, lx) × [0, ly)` with `w ≡ 1` and `α = x dy` on the lift.
    pub fn torus(lx: f64, ly: f64) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidInput(format!("torus periods must be positive, got ({lx}, {ly})")));
        }
        Ok(Self {
            kind: SurfaceKind::Torus { lx, ly },
            density: ScalarField::constant(1.0),
            potential: [ScalarField::constant(0.0), ScalarField::parse("x").expect("static")],
        })
    }

    /// Surface with a user-supplied density and potential. The pair is checked
    /// with the finite-difference curl test at a fixed grid of sample points.
    pub fn with_density(kind: SurfaceKind, density: ScalarField, alpha_x: ScalarField, alpha_y: ScalarField) -> Result<Self> {
        let s = Self { kind, density, potential: [alpha_x, alpha_y] };
        for p in s.sample_points() {
            let w = s.density.eval(p);
            if !(w > 0.0) {
                return Err(Error::InvalidInput(format!("density must be positive, w({}, {}) = {w}", p.x, p.y)));
            }
            let r = s.curl_residual(p);
            if r > CURL_TOL * w.abs().max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "potential is not a primitive of ω at ({}, {}): |dα − ω| = {r:e}",
                    p.x, p.y
                )));
            }
        }
        Ok(s)
    }

    fn sample_points(&self) -> Vec<Vec2> {
        let (x0, x1, y0, y1) = match self.kind {
            SurfaceKind::Plane => (-2.0, 2.0, -2.0, 2.0),
            SurfaceKind::Torus { lx, ly } => (0.0, lx, 0.0, ly),
        };
        let m = 7;
        let mut out = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let tx = (i as f64 + 0.37) / m as f64;
                let ty = (j as f64 + 0.61) / m as f64;
                out.push(Vec2::new(x0 + tx * (x1 - x0), y0 + ty * (y1 - y0)));
            }
        }
        out
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn density_field(&self) -> &ScalarField {
        &self.density
    }

    pub fn density(&self, p: Vec2) -> f64 {
        self.density.eval(p)
    }

    pub fn potential(&self, p: Vec2) -> Vec2 {
        Vec2::new(self.potential[0].eval(p), self.potential[1].eval(p))
    }

    /// `|∂_x α_y − ∂_y α_x − w|` by central differences with step [`FD_STEP`].
    pub fn curl_residual(&self, p: Vec2) -> f64 {
        let h = FD_STEP;
        let ex = Vec2::new(h, 0.0);
        let ey = Vec2::new(0.0, h);
        let day_dx = (self.potential[1].eval(p + ex) - self.potential[1].eval(p - ex)) / (2.0 * h);
        let dax_dy = (self.potential[0].eval(p + ey) - self.potential[0].eval(p - ey)) / (2.0 * h);
        (day_dx - dax_dy - self.density(p)).abs()
    }

    /// `ω_p(u, v)`.
    pub fn omega(&self, p: Vec2, u: Vec2, v: Vec2) -> f64 {
        self.density(p) * (u.x * v.y - u.y * v.x)
    }

    /// Total symplectic area; a torus is prequantizable iff this is a positive integer.
    pub fn total_area(&self) -> Option<f64> {
        match self.kind {
            SurfaceKind::Plane => None,
            SurfaceKind::Torus { lx, ly } => {
                let m = 64;
                let mut sum = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        let p = Vec2::new(lx * i as f64 / m as f64, ly * j as f64 / m as f64);
                        sum += self.density(p);
                    }
                }
                Some(lx * ly * sum / (m * m) as f64)
            }
        }
    }

    pub fn check_prequantizable(&self) -> Result<()> {
        match self.total_area() {
            None => Ok(()),
            Some(area) => {
                if area.round() >= 1.0 && (area - area.round()).abs() <= 1e-9 {
                    Ok(())
                } else {
                    Err(Error::NotPrequantizable { area })
                }
            }
        }
    }

    /// Reduce a point into the fundamental domain (identity on the plane).
    pub fn wrap(&self, p: Vec2) -> Vec2 {
        match self.kind {
            SurfaceKind::Plane => p,
            SurfaceKind::Torus { lx, ly } => Vec2::new(p.x.rem_euclid(lx), p.y.rem_euclid(ly)),
        }
    }

    /// Max deviation `|f(p + period) − f(p)|` on boundary sample pairs.
    pub fn periodicity_defect(&self, f: &ScalarField) -> f64 {
        let SurfaceKind::Torus { lx, ly } = self.kind else {
            return 0.0;
        };
        let m = 16;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            let t = (i as f64 + 0.5) / m as f64;
            let py = Vec2::new(0.0, t * ly);
            worst = worst.max((f.eval(py) - f.eval(py + Vec2::new(lx, 0.0))).abs());
            let px = Vec2::new(t * lx, 0.0);
            worst = worst.max((f.eval(px) - f.eval(px + Vec2::new(0.0, ly))).abs());
        }
        worst
    }

    /// `X_f = ω⁻¹(df)`, the unique vector with `i_{X_f} ω = df`.
    pub fn hamiltonian_vector_field(&self, f: &ScalarField, p: Vec2) -> Vec2 {
        let g = f.grad(p);
        let w = self.density(p);
        Vec2::new(g.y / w, -g.x / w)
    }

    /// `{f, g}(p) = df(X_g)(p)`.
    pub fn poisson_bracket(&self, f: &ScalarField, g: &ScalarField, p: Vec2) -> f64 {
        let a = f.grad(p);
        let b = g.grad(p);
        (a.x * b.y - a.y * b.x) / self.density(p)
    }

    /// The classical bracket `{f, g}` as a symbolic field.
    pub fn poisson_bracket_field(&self, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
        let (fx, fy) = (f.partial(Var::X)?, f.partial(Var::Y)?);
        let (gx, gy) = (g.partial(Var::X)?, g.partial(Var::Y)?);
        let numer = fx.times(&gy).minus(&fy.times(&gx));
        let field = if self.density.expr() == Some(&Expr::Const(1.0)) {
            numer
        } else {
            if !self.density.is_symbolic() {
                return Err(Error::NotSymbolic(self.density.label().to_string()));
            }
            numer.combine(&self.density, '/')
        };
        let expr = field.expr().expect("symbolic by construction").clone();
        Ok(ScalarField::with_label(expr, format!("{{{},{}}}", f.label(), g.label())))
    }

    pub fn compatible_structure(&self) -> CompatibleStructure<'_> {
        CompatibleStructure { surface: self }
    }

    /// Split `v` into its `g`-orthogonal projection onto `span(t)` and the rest.
    pub fn tangential_normal_split(&self, v: Vec2, t: Vec2, p: Vec2) -> Result<(Vec2, Vec2)> {
        self.compatible_structure().split(v, t, p)
    }
}

/// The hermitian triple `(g, J, ω)` built from the standard chart rotation.
#[derive(Debug, Clone, Copy)]
pub struct CompatibleStructure<'a> {
    surface: &'a SymplecticSurface,
}

/// Tangent vectors shorter than this are treated as a collapsed loop segment.
pub const MIN_TANGENT_NORM: f64 = 1e-14;

impl CompatibleStructure<'_> {
    pub fn j(&self, u: Vec2) -> Vec2 {
        Vec2::new(-u.y, u.x)
    }

    pub fn metric(&self, p: Vec2, u: Vec2, v: Vec2) -> f64 {
        self.surface.omega(p, u, self.j(v))
    }

    /// `g⁻¹(df)`, the metric gradient of `f`.
    pub fn gradient(&self, f: &ScalarField, p: Vec2) -> Vec2 {
        f.grad(p) / self.surface.density(p)
    }

    pub fn split(&self, v: Vec2, t: Vec2, p: Vec2) -> Result<(Vec2, Vec2)> {
        if t.norm() < MIN_TANGENT_NORM {
            return Err(Error::DegenerateLoop(format!(
                "tangent of norm {:e} at ({}, {})",
                t.norm(),
                p.x,
                p.y
            )));
        }
        let hor = t * (self.metric(p, v, t) / self.metric(p, t, t));
        Ok((hor, v - hor))
    }

    /// Coefficient `c` with `v_hor = c·t`.
    pub fn tangential_coefficient(&self, v: Vec2, t: Vec2, p: Vec2) -> Result<f64> {
        if t.norm() < MIN_TANGENT_NORM {
            return Err(Error::DegenerateLoop(format!("tangent of norm {:e}", t.norm())));
        }
        Ok(self.metric(p, v, t) / self.metric(p, t, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(s: &str) -> ScalarField {
        ScalarField::parse(s).unwrap()
    }

    #[test]
    fn hamiltonian_vector_field_examples() {
        let m = SymplecticSurface::plane();
        assert_eq!(m.hamiltonian_vector_field(&field("x"), Vec2::zeros()), Vec2::new(0.0, -1.0));
        assert_eq!(m.hamiltonian_vector_field(&field("3.5"), Vec2::new(0.4, 2.0)), Vec2::zeros());
        // d(x²+y²) = (2x, 2y) = (2, 4) at (1, 2)
        assert_eq!(m.hamiltonian_vector_field(&field("x^2+y^2"), Vec2::new(1.0, 2.0)), Vec2::new(4.0, -2.0));
    }

    #[test]
    fn interior_product_reproduces_df() {
        let m = SymplecticSurface::plane();
        let f = field("x^3*y - sin(x+2*y)");
        let p = Vec2::new(0.3, -0.8);
        let xf = m.hamiltonian_vector_field(&f, p);
        for v in [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(0.3, -2.0)] {
            assert!((m.omega(p, xf, v) - f.grad(p).dot(&v)).abs() < 1e-14);
        }
    }

    #[test]
    fn poisson_bracket_examples() {
        let m = SymplecticSurface::plane();
        let p = Vec2::new(3.0, 5.0);
        assert_eq!(m.poisson_bracket(&field("x"), &field("y"), Vec2::new(-1.0, 7.0)), 1.0);
        assert_eq!(m.poisson_bracket(&field("x*y+x"), &field("x*y+x"), p), 0.0);
        // {x², y} = 2x = 6
        assert_eq!(m.poisson_bracket(&field("x^2"), &field("y"), p), 6.0);
    }

    #[test]
    fn bracket_field_matches_pointwise_bracket() {
        let m = SymplecticSurface::plane();
        let (f, g) = (field("x*y"), field("x^2 - y^2"));
        let b = m.poisson_bracket_field(&f, &g).unwrap();
        for &(x, y) in &[(0.2, 0.1), (-1.0, 2.0), (1.5, -0.7)] {
            let p = Vec2::new(x, y);
            assert!((b.eval(p) - m.poisson_bracket(&f, &g, p)).abs() < 1e-13);
        }
        let numeric = ScalarField::from_fn("num", |x, y| x * y);
        assert!(matches!(m.poisson_bracket_field(&numeric, &g), Err(Error::NotSymbolic(_))));
    }

    #[test]
    fn nonuniform_density_bracket() {
        let w = field("2 + x^2");
        let m = SymplecticSurface::with_density(SurfaceKind::Plane, w, field("0"), field("2*x + x^3/3")).unwrap();
        let p = Vec2::new(0.5, 0.1);
        let b = m.poisson_bracket(&field("x"), &field("y"), p);
        assert!((b - 1.0 / 2.25).abs() < 1e-15);
        let bf = m.poisson_bracket_field(&field("x"), &field("y")).unwrap();
        assert!((bf.eval(p) - b).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_potential_is_rejected() {
        let r = SymplecticSurface::with_density(SurfaceKind::Plane, field("1"), field("0"), field("2*x"));
        assert!(matches!(r, Err(Error::InvalidInput(_))));
        let r = SymplecticSurface::with_density(SurfaceKind::Plane, field("x"), field("0"), field("x^2/2"));
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn standard_gauges_pass_curl_check() {
        for g in [PlaneGauge::Symmetric, PlaneGauge::XDy, PlaneGauge::MinusYDx] {
            let m = SymplecticSurface::plane_with_gauge(g);
            for p in m.sample_points() {
                assert!(m.curl_residual(p) < CURL_TOL);
            }
        }
    }

    #[test]
    fn torus_prequantizability_and_periodicity() {
        assert!(SymplecticSurface::torus(2.0, 1.5).unwrap().check_prequantizable().is_ok());
        assert!(matches!(
            SymplecticSurface::torus(1.0, 1.5).unwrap().check_prequantizable(),
            Err(Error::NotPrequantizable { .. })
        ));
        let t = SymplecticSurface::torus(2.0, 1.0).unwrap();
        assert!(t.periodicity_defect(&field("sin(pi*x) + cos(2*pi*y)")) < 1e-14);
        assert!(t.periodicity_defect(&field("x")) > 1.0);
        let w = t.wrap(Vec2::new(-0.5, 3.25));
        assert!((w - Vec2::new(1.5, 0.25)).norm() < 1e-15);
    }

    #[test]
    fn tangential_normal_split_examples() {
        let m = SymplecticSurface::plane();
        let p = Vec2::new(0.1, 0.2);
        let t = Vec2::new(0.6, -0.8);
        let (h, v) = m.tangential_normal_split(t, t, p).unwrap();
        assert!((h - t).norm() < 1e-15 && v.norm() < 1e-15);
        let jt = m.compatible_structure().j(t);
        let (h, v) = m.tangential_normal_split(jt, t, p).unwrap();
        assert!(h.norm() < 1e-15 && (v - jt).norm() < 1e-15);
        let (h, v) = m.tangential_normal_split(Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0), p).unwrap();
        assert_eq!((h, v), (Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)));
        assert!(matches!(
            m.tangential_normal_split(Vec2::new(1.0, 1.0), Vec2::new(1e-15, 0.0), p),
            Err(Error::DegenerateLoop(_))
        ));
    }
}
