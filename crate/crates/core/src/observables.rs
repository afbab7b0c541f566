//! Induced observables `F_f(γ, θ₀) = τ ∫ f(γ) θ₀²` and their Hamiltonian
//! calculus on the moduli space.
//!
//! For a loop `γ` write `f' = d/ds (f∘γ)` and `u_f` for the tangential
//! coefficient of `X_f` along `γ'`, so that `X_f^hor = u_f γ'`. Moving the loop
//! by a tangent vector `(f₁, θ₁)` changes `f∘γ` by `df(ν) = −u_f f₁'`, hence
//!
//! ```text
//! dF_f(f₁, θ₁) = 2τ ∫ f θ₀ θ₁ − τ ∫ f₁' u_f θ₀²  =  2 B_f − C*_f
//! H_{F_f}      = (2τ (f∘γ − F_f/τ),  −τ (u_f θ₀²)' / θ₀)
//! Ω(H_f, H_g)  = 2 τ_f τ_g ∫ (f' u_g − g' u_f) θ₀²
//! ```
//!
//! and the integrand of the last line is `{f, g}∘γ` pointwise.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::conventions::BRACKET_SIGN;
use crate::cycles::{HalfDensity, Loop};
use crate::error::{Error, Result};
use crate::moduli::{omega, project_tangent, ModuliPoint, OmegaSystem, TangentVector};
use crate::spectral;
use crate::symplectic::{ScalarField, SymplecticSurface, Vec2};

/// Half-densities with `min |θ₀|` below this make the explicit `H` formula
/// meaningless; `Ω` itself degenerates there too.
pub const MIN_THETA: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct InducedObservable {
    field: ScalarField,
    scale: f64,
}

impl InducedObservable {
    pub fn new(field: ScalarField) -> Self {
        Self { field, scale: 1.0 }
    }

    pub fn with_scale(field: ScalarField, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("observable scale must be positive, got {scale}")));
        }
        Ok(Self { field, scale })
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Self::new(ScalarField::parse(src)?))
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `τ ∫ f(γ) θ₀²`.
    pub fn evaluate(&self, p: &ModuliPoint) -> f64 {
        let th = p.theta_values();
        self.scale * spectral::inner3(&restricted(&self.field, p.cycle()), th, th)
    }
}

impl From<ScalarField> for InducedObservable {
    fn from(field: ScalarField) -> Self {
        Self::new(field)
    }
}

pub fn evaluate_f(obs: &InducedObservable, p: &ModuliPoint) -> f64 {
    obs.evaluate(p)
}

/// `f ∘ γ` on the grid.
pub fn restricted(f: &ScalarField, cycle: &Loop) -> Vec<f64> {
    cycle.restrict(|q| f.eval(q))
}

/// `u_f(s_i)` with `X_f^hor = u_f γ'`.
pub fn tangential_coefficients(surface: &SymplecticSurface, f: &ScalarField, cycle: &Loop) -> Result<Vec<f64>> {
    let cs = surface.compatible_structure();
    cycle
        .points()
        .iter()
        .zip(cycle.tangents())
        .map(|(&q, t)| cs.tangential_coefficient(surface.hamiltonian_vector_field(f, q), t, q))
        .collect()
}

/// `A^f = τ·(f∘γ − const, 0)`, the constant fixed by the `θ₀²` constraint.
pub fn field_a(obs: &InducedObservable, p: &ModuliPoint) -> TangentVector {
    let raw: Vec<f64> = restricted(&obs.field, p.cycle()).iter().map(|v| v * obs.scale).collect();
    project_tangent(p, &raw, &vec![0.0; p.len()])
}

/// `θ₀²`-weighted variance of `f∘γ` below `tol`: the loop is a zero of `A^f`.
pub fn is_stationary_cycle(f: &ScalarField, p: &ModuliPoint, tol: f64) -> bool {
    weighted_variance(f, p) < tol
}

pub fn weighted_variance(f: &ScalarField, p: &ModuliPoint) -> f64 {
    let th = p.theta_values();
    let vol = spectral::inner(th, th);
    let r = restricted(f, p.cycle());
    let mean = spectral::inner3(&r, th, th) / vol;
    let dev: Vec<f64> = r.iter().map(|v| (v - mean) * (v - mean)).collect();
    spectral::inner3(&dev, th, th) / vol
}

/// `B_f(v) = τ ∫ f θ₀ θ₁`.
pub fn oneform_b(obs: &InducedObservable, p: &ModuliPoint, v: &TangentVector) -> f64 {
    obs.scale * spectral::inner3(&restricted(&obs.field, p.cycle()), p.theta_values(), &v.tvec)
}

/// `C*_f(v) = τ ∫ f₁' u_f θ₀²`.
pub fn oneform_cstar(surface: &SymplecticSurface, obs: &InducedObservable, p: &ModuliPoint, v: &TangentVector) -> Result<f64> {
    let u = tangential_coefficients(surface, &obs.field, p.cycle())?;
    let df1 = spectral::derivative(&v.fvec);
    let th = p.theta_values();
    let weighted: Vec<f64> = u.iter().zip(th).map(|(u, h)| u * h * h).collect();
    Ok(obs.scale * spectral::inner(&df1, &weighted))
}

/// `dF_f(v) = 2 B_f(v) − C*_f(v)`.
pub fn differential_df(surface: &SymplecticSurface, obs: &InducedObservable, p: &ModuliPoint, v: &TangentVector) -> Result<f64> {
    Ok(2.0 * oneform_b(obs, p, v) - oneform_cstar(surface, obs, p, v)?)
}

/// The pair `(a, b)` with `dF_f(v) = ∫ a f₁ + ∫ b θ₁` for every `v`:
/// `a = τ (u_f θ₀²)'`, `b = 2τ f θ₀`.
pub fn differential_representer(surface: &SymplecticSurface, obs: &InducedObservable, p: &ModuliPoint) -> Result<TangentVector> {
    let th = p.theta_values();
    let u = tangential_coefficients(surface, &obs.field, p.cycle())?;
    let weighted: Vec<f64> = u.iter().zip(th).map(|(u, h)| u * h * h).collect();
    let a = spectral::derivative(&weighted).iter().map(|v| v * obs.scale).collect();
    let b = restricted(&obs.field, p.cycle()).iter().zip(th).map(|(f, h)| 2.0 * obs.scale * f * h).collect();
    Ok(TangentVector::new(a, b))
}

/// `dF_f` on the basis of `sys`.
pub fn differential_on_basis(surface: &SymplecticSurface, sys: &OmegaSystem, obs: &InducedObservable, p: &ModuliPoint) -> Result<DVector<f64>> {
    Ok(sys.coordinates(&differential_representer(surface, obs, p)?))
}

/// `H_{F_f} = ♯(dF_f)`.
pub fn hamiltonian_field_h(surface: &SymplecticSurface, sys: &OmegaSystem, obs: &InducedObservable, p: &ModuliPoint) -> Result<TangentVector> {
    sys.sharp(&differential_on_basis(surface, sys, obs, p)?)
}

/// `H_{F_f}` in closed form, `(2A^f, −τ (u_f θ₀²)' / θ₀)`; agrees with
/// [`hamiltonian_field_h`] without building `Ω`.
pub fn hamiltonian_field_explicit(surface: &SymplecticSurface, obs: &InducedObservable, p: &ModuliPoint) -> Result<TangentVector> {
    let th = p.theta_values();
    let smallest = th.iter().fold(f64::INFINITY, |m, h| m.min(h.abs()));
    if smallest < MIN_THETA {
        return Err(Error::SingularPairing { min_singular_value: smallest });
    }
    let rep = differential_representer(surface, obs, p)?;
    let a = field_a(obs, p);
    let fvec = a.fvec.iter().map(|v| 2.0 * v).collect::<Vec<_>>();
    let tvec = rep.fvec.iter().zip(th).map(|(d, h)| -d / h).collect::<Vec<_>>();
    Ok(project_tangent(p, &fvec, &tvec))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BracketMethod {
    /// `Ω(H_{F_f}, H_{F_g})` through the factored `Ω` matrix.
    Matrix,
    /// `σ·2τ_fτ_g ∫ (f' u_g − g' u_f) θ₀²`.
    ClosedForm,
    /// `2τ_fτ_g F_{{f,g}}` with the symbolic classical bracket.
    Target,
}

impl BracketMethod {
    pub const ALL: [BracketMethod; 3] = [BracketMethod::Matrix, BracketMethod::ClosedForm, BracketMethod::Target];

    pub fn name(self) -> &'static str {
        match self {
            BracketMethod::Matrix => "matrix",
            BracketMethod::ClosedForm => "closed_form",
            BracketMethod::Target => "target",
        }
    }
}

impl fmt::Display for BracketMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BracketMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BracketMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown bracket method `{s}`")))
    }
}

/// `2τ_fτ_g ∫ (f' u_g − g' u_f) θ₀²` without the sign convention.
pub fn closed_form_unsigned(surface: &SymplecticSurface, f: &InducedObservable, g: &InducedObservable, p: &ModuliPoint) -> Result<f64> {
    let integrand = restricted_bracket(surface, &f.field, &g.field, p.cycle())?;
    let th = p.theta_values();
    Ok(2.0 * f.scale * g.scale * spectral::inner3(&integrand, th, th))
}

/// `f' u_g − g' u_f` along the loop.
fn restricted_bracket(surface: &SymplecticSurface, f: &ScalarField, g: &ScalarField, cycle: &Loop) -> Result<Vec<f64>> {
    let df = spectral::derivative(&restricted(f, cycle));
    let dg = spectral::derivative(&restricted(g, cycle));
    let uf = tangential_coefficients(surface, f, cycle)?;
    let ug = tangential_coefficients(surface, g, cycle)?;
    Ok((0..cycle.len()).map(|i| df[i] * ug[i] - dg[i] * uf[i]).collect())
}

pub fn moduli_bracket(surface: &SymplecticSurface, f: &InducedObservable, g: &InducedObservable, p: &ModuliPoint, method: BracketMethod) -> Result<f64> {
    match method {
        BracketMethod::Matrix => moduli_bracket_with(surface, &OmegaSystem::new(p), f, g, p, method),
        _ => moduli_bracket_with_opt(surface, None, f, g, p, method),
    }
}

/// [`moduli_bracket`] reusing a prebuilt `Ω` factorization at `p`.
pub fn moduli_bracket_with(surface: &SymplecticSurface, sys: &OmegaSystem, f: &InducedObservable, g: &InducedObservable, p: &ModuliPoint, method: BracketMethod) -> Result<f64> {
    moduli_bracket_with_opt(surface, Some(sys), f, g, p, method)
}

fn moduli_bracket_with_opt(surface: &SymplecticSurface, sys: Option<&OmegaSystem>, f: &InducedObservable, g: &InducedObservable, p: &ModuliPoint, method: BracketMethod) -> Result<f64> {
    match method {
        BracketMethod::Matrix => {
            let owned;
            let sys = match sys {
                Some(s) => s,
                None => {
                    owned = OmegaSystem::new(p);
                    &owned
                }
            };
            let hf = hamiltonian_field_h(surface, sys, f, p)?;
            let hg = hamiltonian_field_h(surface, sys, g, p)?;
            Ok(omega(p, &hf, &hg))
        }
        BracketMethod::ClosedForm => Ok(BRACKET_SIGN * closed_form_unsigned(surface, f, g, p)?),
        BracketMethod::Target => {
            let fg = surface.poisson_bracket_field(&f.field, &g.field)?;
            Ok(2.0 * f.scale * g.scale * InducedObservable::new(fg).evaluate(p))
        }
    }
}

/// The three bracket values at one point and their relative spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketComparison {
    pub matrix: f64,
    pub closed_form: f64,
    pub target: f64,
}

impl BracketComparison {
    pub fn rel_spread(&self) -> f64 {
        rel_spread(&[self.matrix, self.closed_form, self.target])
    }
}

pub fn compare_brackets(surface: &SymplecticSurface, sys: &OmegaSystem, f: &InducedObservable, g: &InducedObservable, p: &ModuliPoint) -> Result<BracketComparison> {
    Ok(BracketComparison {
        matrix: moduli_bracket_with(surface, sys, f, g, p, BracketMethod::Matrix)?,
        closed_form: moduli_bracket_with(surface, sys, f, g, p, BracketMethod::ClosedForm)?,
        target: moduli_bracket_with(surface, sys, f, g, p, BracketMethod::Target)?,
    })
}

/// Values below this magnitude are compared absolutely by [`rel_spread`].
pub const SPREAD_FLOOR: f64 = 1e-3;

/// `(max − min) / max(max |v|, SPREAD_FLOOR)`.
pub fn rel_spread(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(SPREAD_FLOOR);
    (hi - lo) / scale
}

/// The reference instance used to fix [`BRACKET_SIGN`]: `f = x`, `g = y` on
/// the plane, a circle of area one centred at `(0.2, −0.1)`, `N = 64`.
pub fn reference_point() -> Result<(SymplecticSurface, ModuliPoint)> {
    let surface = SymplecticSurface::plane();
    let cycle = Loop::circle(Vec2::new(0.2, -0.1), 1.0 / std::f64::consts::PI.sqrt(), 64)?;
    let p = ModuliPoint::new(&surface, cycle, HalfDensity::uniform(64))?;
    Ok((surface, p))
}

/// `sign(matrix / closed_form)` on [`reference_point`].
pub fn measure_bracket_sign() -> Result<f64> {
    let (surface, p) = reference_point()?;
    let f = InducedObservable::parse("x")?;
    let g = InducedObservable::parse("y")?;
    let m = moduli_bracket(&surface, &f, &g, &p, BracketMethod::Matrix)?;
    let c = closed_form_unsigned(&surface, &f, &g, &p)?;
    Ok((m / c).signum())
}

/// `{f, g}(γ(s_i)) − (f' u_g − g' u_f)(s_i)`.
pub fn restriction_identity_residual(surface: &SymplecticSurface, f: &ScalarField, g: &ScalarField, cycle: &Loop) -> Result<Vec<f64>> {
    let rb = restricted_bracket(surface, f, g, cycle)?;
    Ok(cycle
        .points()
        .iter()
        .zip(rb)
        .map(|(&q, r)| surface.poisson_bracket(f, g, q) - r)
        .collect())
}

/// Pointwise residuals of the two compatibility identities
///
/// ```text
/// df(vert(J∇g)) + dg(hor(J∇f)) = 0
/// df(hor(J∇g))  + dg(vert(J∇f)) = 0
/// ```
///
/// with `∇` the metric gradient and the split taken along `γ'`.
pub fn compatibility_residuals(surface: &SymplecticSurface, f: &ScalarField, g: &ScalarField, cycle: &Loop) -> Result<(Vec<f64>, Vec<f64>)> {
    let cs = surface.compatible_structure();
    let mut vert_hor = Vec::with_capacity(cycle.len());
    let mut hor_vert = Vec::with_capacity(cycle.len());
    for (&q, t) in cycle.points().iter().zip(cycle.tangents()) {
        let (dfq, dgq) = (f.grad(q), g.grad(q));
        let (jf, jg) = (cs.j(cs.gradient(f, q)), cs.j(cs.gradient(g, q)));
        let (jg_hor, jg_vert) = cs.split(jg, t, q)?;
        let (jf_hor, jf_vert) = cs.split(jf, t, q)?;
        vert_hor.push(dfq.dot(&jg_vert) + dgq.dot(&jf_hor));
        hor_vert.push(dfq.dot(&jg_hor) + dgq.dot(&jf_vert));
    }
    Ok((vert_hor, hor_vert))
}

/// `(F_{f₁f₂}(p), F_{f₁}(p)·F_{f₂}(p))`.
pub fn non_multiplicativity_witness(f1: &ScalarField, f2: &ScalarField, p: &ModuliPoint) -> (f64, f64) {
    let prod = InducedObservable::new(f1.times(f2)).evaluate(p);
    let a = InducedObservable::new(f1.clone()).evaluate(p);
    let b = InducedObservable::new(f2.clone()).evaluate(p);
    (prod, a * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conventions::BRACKET_SIGN;
    use crate::moduli::{constraint_residuals, realize_tangent};
    use std::f64::consts::PI;

    fn plane() -> SymplecticSurface {
        SymplecticSurface::plane()
    }

    fn obs(s: &str) -> InducedObservable {
        InducedObservable::parse(s).unwrap()
    }

    fn field(s: &str) -> ScalarField {
        ScalarField::parse(s).unwrap()
    }

    fn point(n: usize, amp: f64) -> ModuliPoint {
        let l = Loop::perturbed_circle(Vec2::new(0.3, -0.2), 0.9, &[(2, 0.1, 0.05), (3, 0.0, 0.04)], n).unwrap();
        let th = HalfDensity::from_fn(n, |s| 1.0 + amp * (2.0 * PI * s).cos()).unwrap();
        ModuliPoint::projected(&plane(), &l, &th).unwrap()
    }

    fn unit_area_circle(center: Vec2, n: usize) -> ModuliPoint {
        let l = Loop::circle(center, 1.0 / PI.sqrt(), n).unwrap();
        ModuliPoint::new(&plane(), l, HalfDensity::uniform(n)).unwrap()
    }

    /// `θ₀²` of unit volume on any loop, ignoring the Bohr–Sommerfeld check
    /// so that loops of arbitrary area can be probed.
    fn any_loop(l: Loop) -> ModuliPoint {
        let n = l.len();
        ModuliPoint::from_parts_unchecked(l, HalfDensity::uniform(n))
    }

    fn probe(p: &ModuliPoint, k: usize) -> TangentVector {
        let s = spectral::grid(p.len());
        let raw_f: Vec<f64> = s.iter().map(|s| (2.0 * PI * (k as f64) * s + 0.3).sin() + 0.2 * (4.0 * PI * s).cos()).collect();
        let raw_t: Vec<f64> = s.iter().map(|s| (2.0 * PI * ((k + 1) as f64) * s).cos() - 0.1 * s).collect();
        project_tangent(p, &raw_f, &raw_t)
    }

    #[test]
    fn evaluate_examples() {
        let p = point(64, 0.4);
        assert!((obs("3.5").evaluate(&p) - 3.5).abs() < 1e-13);
        let c = any_loop(Loop::circle(Vec2::new(2.0, 0.0), 1.0, 64).unwrap());
        assert!((obs("x").evaluate(&c) - 2.0).abs() < 1e-12);
        let r = 0.7;
        let c = any_loop(Loop::circle(Vec2::zeros(), r, 64).unwrap());
        assert!((obs("x^2 + y^2").evaluate(&c) - r * r).abs() < 1e-12);
        let scaled = InducedObservable::with_scale(field("x"), 2.5).unwrap();
        assert!((scaled.evaluate(&p) - 2.5 * obs("x").evaluate(&p)).abs() < 1e-13);
        assert!(InducedObservable::with_scale(field("x"), 0.0).is_err());
    }

    #[test]
    fn field_a_examples() {
        let p = point(32, 0.2);
        assert!(field_a(&obs("4"), &p).max_abs() < 1e-13);
        let origin = unit_area_circle(Vec2::zeros(), 32);
        assert!(field_a(&obs("x^2 + y^2"), &origin).max_abs() < 1e-13);
        let unit = any_loop(Loop::circle(Vec2::zeros(), 1.0, 32).unwrap());
        let a = field_a(&obs("x"), &unit);
        for (v, s) in a.fvec.iter().zip(spectral::grid(32)) {
            assert!((v - (2.0 * PI * s).cos()).abs() < 1e-13);
        }
        assert!(a.tvec.iter().all(|&t| t == 0.0));
        let (c1, c2) = constraint_residuals(&p, &field_a(&obs("x*y + sin(x)"), &p));
        assert!(c1.abs() < 1e-14 && c2 == 0.0);
    }

    #[test]
    fn stationary_cycles() {
        let origin = unit_area_circle(Vec2::zeros(), 64);
        let shifted = unit_area_circle(Vec2::new(0.4, 0.0), 64);
        assert!(is_stationary_cycle(&field("x^2 + y^2"), &origin, 1e-20));
        assert!(!is_stationary_cycle(&field("x^2 + y^2"), &shifted, 1e-6));
        assert!(!is_stationary_cycle(&field("x"), &origin, 1e-6));
        assert!(is_stationary_cycle(&field("7"), &point(64, 0.3), 1e-20));
        // variance and ‖A^f‖² coincide for unit volume and uniform θ₀
        let a = field_a(&obs("x^2 + y^2"), &shifted);
        let var = weighted_variance(&field("x^2 + y^2"), &shifted);
        assert!((a.norm().powi(2) - var).abs() < 1e-13);
    }

    #[test]
    fn oneform_b_examples_and_duality() {
        let p = point(64, 0.3);
        let f = obs("x^2 - y + 0.5*x*y");
        let pure_f = project_tangent(&p, &probe(&p, 2).fvec, &vec![0.0; 64]);
        assert_eq!(oneform_b(&f, &p, &pure_f), 0.0);
        assert!(oneform_b(&obs("2"), &p, &probe(&p, 3)).abs() < 1e-14);
        let a = field_a(&f, &p);
        for k in 1..20 {
            let v = probe(&p, k);
            assert!((omega(&p, &a, &v) - oneform_b(&f, &p, &v)).abs() < 1e-12);
        }
    }

    #[test]
    fn oneform_cstar_examples() {
        let m = plane();
        let p = point(64, 0.3);
        assert_eq!(oneform_cstar(&m, &obs("1"), &p, &probe(&p, 2)).unwrap(), 0.0);
        let f = obs("x*y + cos(y)");
        let pure_t = TangentVector::new(vec![0.0; 64], probe(&p, 2).tvec);
        assert_eq!(oneform_cstar(&m, &f, &p, &pure_t).unwrap(), 0.0);
        // integration by parts
        let v = probe(&p, 4);
        let u = tangential_coefficients(&m, f.field(), p.cycle()).unwrap();
        let th = p.theta_values();
        let w: Vec<f64> = u.iter().zip(th).map(|(u, h)| u * h * h).collect();
        let by_parts = -spectral::inner(&v.fvec, &spectral::derivative(&w));
        assert!((oneform_cstar(&m, &f, &p, &v).unwrap() - by_parts).abs() < 1e-10);
    }

    #[test]
    fn differential_matches_finite_differences() {
        let m = plane();
        let p = point(64, 0.3);
        let f = obs("x^2 + 0.3*y - x*y");
        let v = probe(&p, 2);
        let exact = differential_df(&m, &f, &p, &v).unwrap();
        let f0 = f.evaluate(&p);
        let errs: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
            .iter()
            .map(|&t| {
                let q = realize_tangent(&m, &p, &v, t).unwrap().point;
                ((f.evaluate(&q) - f0) / t - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 0.9, "errors {errs:?}");
        }
        assert!(differential_df(&m, &obs("5"), &p, &v).unwrap().abs() < 1e-13);
        assert_eq!(differential_df(&m, &f, &p, &TangentVector::zeros(64)).unwrap(), 0.0);
    }

    #[test]
    fn representer_agrees_with_literal_oneforms() {
        let m = plane();
        let p = point(32, 0.4);
        let sys = OmegaSystem::new(&p);
        let f = obs("sin(x) + y^2");
        let literal = sys.functional_on_basis(|v| differential_df(&m, &f, &p, v)).unwrap();
        let fast = differential_on_basis(&m, &sys, &f, &p).unwrap();
        assert!((literal - fast).amax() < 1e-12);
    }

    #[test]
    fn hamiltonian_field_structure() {
        let m = plane();
        let p = point(64, 0.3);
        let sys = OmegaSystem::new(&p);
        assert!(hamiltonian_field_h(&m, &sys, &obs("2.5"), &p).unwrap().max_abs() < 1e-10);
        let f = obs("x^2 - x*y + cos(y)");
        let h = hamiltonian_field_h(&m, &sys, &f, &p).unwrap();
        let a = field_a(&f, &p);
        let gap = h.fvec.iter().zip(&a.fvec).fold(0.0f64, |g, (x, y)| g.max((x - 2.0 * y).abs()));
        assert!(gap < 1e-10, "{gap}");
        assert!(omega(&p, &h, &h).abs() < 1e-14);
        // θ part is the Ω-dual of −C*: Ω((0, h_θ), v) = −C*(v)
        let h_t = TangentVector::new(vec![0.0; 64], h.tvec.clone());
        for k in 1..6 {
            let v = probe(&p, k);
            let c = oneform_cstar(&m, &f, &p, &v).unwrap();
            assert!((omega(&p, &h_t, &v) + c).abs() < 1e-10);
        }
        let explicit = hamiltonian_field_explicit(&m, &f, &p).unwrap();
        assert!(explicit.minus(&h).max_abs() < 1e-9);
    }

    #[test]
    fn sign_convention_is_reproduced() {
        assert_eq!(measure_bracket_sign().unwrap(), BRACKET_SIGN);
    }

    #[test]
    fn bracket_examples() {
        let m = plane();
        let p = point(64, 0.3);
        let sys = OmegaSystem::new(&p);
        let (x, y) = (obs("x"), obs("y"));
        let cmp = compare_brackets(&m, &sys, &x, &y, &p).unwrap();
        assert!((cmp.target - 2.0).abs() < 1e-12);
        assert!(cmp.rel_spread() < 1e-9, "{cmp:?}");
        let f = obs("x^2 + sin(y)");
        for method in BracketMethod::ALL {
            assert!(moduli_bracket_with(&m, &sys, &f, &f, &p, method).unwrap().abs() < 1e-10);
        }
        let cmp = compare_brackets(&m, &sys, &obs("x^2"), &y, &p).unwrap();
        assert!((cmp.target - 4.0 * x.evaluate(&p)).abs() < 1e-12);
        assert!(cmp.rel_spread() < 1e-8, "{cmp:?}");
    }

    #[test]
    fn bracket_method_names_round_trip() {
        for method in BracketMethod::ALL {
            assert_eq!(method.name().parse::<BracketMethod>().unwrap(), method);
        }
        assert!("exact".parse::<BracketMethod>().is_err());
    }

    #[test]
    fn rel_spread_uses_floor() {
        assert_eq!(rel_spread(&[]), 0.0);
        assert!((rel_spread(&[2.0, 2.0, 2.002]) - 0.002 / 2.002).abs() < 1e-12);
        assert!((rel_spread(&[0.0, 1e-6, -1e-6]) - 2e-3).abs() < 1e-12);
    }

    #[test]
    fn restriction_identity_examples() {
        let m = plane();
        let unit = Loop::circle(Vec2::zeros(), 1.0, 128).unwrap();
        let r = restriction_identity_residual(&m, &field("x"), &field("y"), &unit).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
        let f = field("x*y + sin(x)");
        let r = restriction_identity_residual(&m, &f, &f, &unit).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
        let (a, b) = compatibility_residuals(&m, &f, &field("x^2 - cos(y)"), &unit).unwrap();
        assert!(a.iter().chain(&b).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn restriction_identity_on_nonuniform_density() {
        let w = field("1 + x^2/4");
        let m = SymplecticSurface::with_density(crate::SurfaceKind::Plane, w, field("0"), field("x + x^3/12")).unwrap();
        let l = Loop::ellipse(Vec2::new(0.2, 0.1), 1.1, 0.8, 256).unwrap();
        let r = restriction_identity_residual(&m, &field("x^2"), &field("sin(y)"), &l).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-10), "{}", r.iter().fold(0.0f64, |a, b| a.max(b.abs())));
        let (a, b) = compatibility_residuals(&m, &field("x*y"), &field("y^2"), &l).unwrap();
        assert!(a.iter().chain(&b).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn non_multiplicativity() {
        let unit = any_loop(Loop::circle(Vec2::zeros(), 1.0, 64).unwrap());
        let (prod, sq) = non_multiplicativity_witness(&field("x"), &field("x"), &unit);
        assert!((prod - 0.5).abs() < 1e-12 && sq.abs() < 1e-12);
        let p = point(64, 0.3);
        let (a, b) = non_multiplicativity_witness(&field("1"), &field("x*y"), &p);
        assert!((a - b).abs() < 1e-13);
        let origin = unit_area_circle(Vec2::zeros(), 64);
        let (a, b) = non_multiplicativity_witness(&field("x^2 + y^2"), &field("x"), &origin);
        assert!((a - b).abs() < 1e-13);
    }
}
