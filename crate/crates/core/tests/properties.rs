use std::f64::consts::PI;

use bsq_core::moduli::realize_tangent;
use bsq_core::observables::{hamiltonian_field_h, moduli_bracket_with, BracketMethod};
use bsq_core::{HalfDensity, InducedObservable, Loop, ModuliPoint, OmegaSystem, ScalarField, SymplecticSurface, Vec2};
use proptest::prelude::*;

/// Random quadratic-plus-trig field `c0 x + c1 y + c2 x² + c3 xy + c4 y² + c5 sin(x + y)`.
fn poly(c: &[f64]) -> String {
    format!("({})*x + ({})*y + ({})*x^2 + ({})*x*y + ({})*y^2 + ({})*sin(x + y)", c[0], c[1], c[2], c[3], c[4], c[5])
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 6)
}

fn field(c: &[f64]) -> ScalarField {
    ScalarField::parse(&poly(c)).unwrap()
}

fn obs(c: &[f64]) -> InducedObservable {
    InducedObservable::new(field(c))
}

fn point(cx: f64, cy: f64, amp: f64, n: usize) -> ModuliPoint {
    let m = SymplecticSurface::plane();
    let l = Loop::perturbed_circle(Vec2::new(cx, cy), 0.6, &[(2, amp, 0.04), (3, 0.0, 0.05)], n).unwrap();
    let th = HalfDensity::from_fn(n, |s| 1.0 + 0.3 * (2.0 * PI * s).cos()).unwrap();
    ModuliPoint::projected(&m, &l, &th).unwrap()
}

fn bracket(sys: &OmegaSystem, f: &InducedObservable, g: &InducedObservable, p: &ModuliPoint) -> f64 {
    moduli_bracket_with(&SymplecticSurface::plane(), sys, f, g, p, BracketMethod::Matrix).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn moduli_bracket_is_antisymmetric(a in coeffs(), b in coeffs(), cx in -0.3..0.3f64, amp in 0.0..0.1f64) {
        let p = point(cx, 0.1, amp, 32);
        let sys = OmegaSystem::new(&p);
        let (f, g) = (obs(&a), obs(&b));
        let fg = bracket(&sys, &f, &g, &p);
        let gf = bracket(&sys, &g, &f, &p);
        prop_assert!((fg + gf).abs() <= 1e-10 * (1.0 + fg.abs()));
        prop_assert!(bracket(&sys, &f, &f, &p).abs() <= 1e-10);
    }

    #[test]
    fn moduli_bracket_is_bilinear(a in coeffs(), b in coeffs(), c in coeffs(), s in -2.0..2.0f64) {
        let p = point(0.1, -0.2, 0.05, 32);
        let sys = OmegaSystem::new(&p);
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
        let lhs = bracket(&sys, &obs(&combo), &obs(&c), &p);
        let rhs = bracket(&sys, &obs(&a), &obs(&c), &p) + s * bracket(&sys, &obs(&b), &obs(&c), &p);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn induced_observable_is_linear(a in coeffs(), b in coeffs(), s in -3.0..3.0f64) {
        let p = point(-0.1, 0.2, 0.08, 64);
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
        let lhs = obs(&combo).evaluate(&p);
        let rhs = obs(&a).evaluate(&p) + s * obs(&b).evaluate(&p);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn observable_and_bracket_are_rotation_invariant(a in coeffs(), b in coeffs(), k in 1usize..32) {
        let p = point(0.2, 0.0, 0.06, 32);
        let q = p.rotated(k);
        let (f, g) = (obs(&a), obs(&b));
        prop_assert!((f.evaluate(&p) - f.evaluate(&q)).abs() <= 1e-12);
        let bp = bracket(&OmegaSystem::new(&p), &f, &g, &p);
        let bq = bracket(&OmegaSystem::new(&q), &f, &g, &q);
        prop_assert!((bp - bq).abs() <= 1e-10 * (1.0 + bp.abs()));
    }

    #[test]
    fn classical_bracket_leibniz(a in coeffs(), b in coeffs(), c in coeffs(), x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let m = SymplecticSurface::plane();
        let (f, g, h) = (field(&a), field(&b), field(&c));
        let q = Vec2::new(x, y);
        let lhs = m.poisson_bracket(&f, &g.times(&h), q);
        let rhs = m.poisson_bracket(&f, &g, q) * h.eval(q) + g.eval(q) * m.poisson_bracket(&f, &h, q);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn classical_bracket_jacobi(a in coeffs(), b in coeffs(), c in coeffs(), x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let m = SymplecticSurface::plane();
        let (f, g, h) = (field(&a), field(&b), field(&c));
        let q = Vec2::new(x, y);
        let cyc = |f: &ScalarField, g: &ScalarField, h: &ScalarField| {
            m.poisson_bracket(f, &m.poisson_bracket_field(g, h).unwrap(), q)
        };
        let sum = cyc(&f, &g, &h) + cyc(&g, &h, &f) + cyc(&h, &f, &g);
        prop_assert!(sum.abs() <= 1e-11);
    }
}

/// `Ω(H_f, ·) = dF_f`, so the slope of `F_f` along `H_g` is `Ω(H_f, H_g)` and the
/// slope of `F_g` along `H_f` is its negative.
#[test]
fn bracket_is_a_directional_derivative() {
    let m = SymplecticSurface::plane();
    let p = point(0.1, -0.1, 0.05, 64);
    let sys = OmegaSystem::new(&p);
    let f = InducedObservable::parse("x^2 - y").unwrap();
    let g = InducedObservable::parse("x*y + sin(x)").unwrap();
    let b = bracket(&sys, &f, &g, &p);
    let slope = |obs: &InducedObservable, along: &InducedObservable, t: f64| {
        let v = hamiltonian_field_h(&m, &sys, along, &p).unwrap();
        let plus = realize_tangent(&m, &p, &v, t).unwrap().point;
        let minus = realize_tangent(&m, &p, &v, -t).unwrap().point;
        (obs.evaluate(&plus) - obs.evaluate(&minus)) / (2.0 * t)
    };
    for t in [1e-3, 5e-4] {
        assert!((slope(&f, &g, t) - b).abs() < 1e-4 * (1.0 + b.abs()), "{} vs {b}", slope(&f, &g, t));
        assert!((slope(&g, &f, t) + b).abs() < 1e-4 * (1.0 + b.abs()), "{} vs {}", slope(&g, &f, t), -b);
    }
}
