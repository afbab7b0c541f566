//! Benchmark fixtures shared by the criterion targets.

use std::f64::consts::PI;

use bsq_core::{HalfDensity, Loop, ModuliPoint, SymplecticSurface, Vec2};

/// A projected perturbed circle with a non-uniform half-density at `n` samples.
pub fn fixture(n: usize) -> ModuliPoint {
    let surface = SymplecticSurface::plane();
    let cycle = Loop::perturbed_circle(Vec2::new(-0.2, 0.1), 0.6, &[(2, 0.1, 0.05), (3, 0.0, 0.06)], n).expect("valid loop");
    let theta = HalfDensity::from_fn(n, |s| 1.0 + 0.3 * (2.0 * PI * s).cos()).expect("positive density");
    ModuliPoint::projected(&surface, &cycle, &theta).expect("projectable loop")
}
