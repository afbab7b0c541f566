//! Measured conventions, frozen once and reported in every CLI output.

/// Global sign `σ` between the matrix bracket `Ω(H_{F_f}, H_{F_g})` and
/// `2∫[df(X_g^hor) − dg(X_f^hor)] θ₀²`. Measured by
/// [`crate::observables::measure_bracket_sign`].
pub const BRACKET_SIGN: f64 = 1.0;

/// Proportionality `κ` in `Ω(Y_F, Y_K) = κ ⟨Ψ, (1/iℏ)[F̂, K̂] Ψ⟩`. Measured by
/// [`crate::qm::measure_kappa`].
pub const KAPPA_QM: f64 = 1.0;
