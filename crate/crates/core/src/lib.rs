//! Half-weighted Bohr–Sommerfeld cycles over two-dimensional symplectic
//! surfaces.
//!
//! The crate discretizes closed loops in a symplectic surface together with
//! half-densities of unit volume, equips the resulting moduli space with its
//! canonical symplectic form, and compares the Poisson bracket of induced
//! observables `F_f(γ, θ) = ∫ f(γ) θ²` with the classical bracket on the base.
//!
//! Module map:
//!
//! - [`expr`]: the scalar-field expression grammar with symbolic derivatives.
//! - [`symplectic`]: surfaces, Hamiltonian vector fields, the classical bracket.
//! - [`spectral`]: periodic differentiation, quadrature and interpolation.
//! - [`cycles`]: discretized loops, half-densities, prequantum holonomy.
//! - [`moduli`]: moduli points, constrained tangents, the form `Ω`.
//! - [`observables`]: induced observables and the bracket correspondence.
//! - [`qm`]: the finite-dimensional geometric quantum mechanics reference model.
//! - [`dynamics`]: classical and moduli-space Hamiltonian flows.

// `!(x > 0.0)` is the NaN-rejecting form on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::redundant_guards)]

pub mod conventions;
pub mod cycles;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod moduli;
pub mod observables;
pub mod qm;
pub mod spectral;
pub mod symplectic;

pub use cycles::{HalfDensity, Loop};
pub use error::{Error, Result};
pub use expr::Expr;
pub use moduli::{ModuliPoint, OmegaSystem, TangentVector};
pub use observables::{BracketMethod, InducedObservable};

pub use symplectic::{CompatibleStructure, PlaneGauge, ScalarField, SurfaceKind, SymplecticSurface, Vec2};
