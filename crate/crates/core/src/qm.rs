//! Geometric quantum mechanics on `ℂⁿ`.
//!
//! `ℂⁿ` is a real symplectic vector space with `J = i` and
//!
//! ```text
//! ⟨Φ, Ψ⟩ = (1/2ℏ) G(Φ, Ψ) + (i/2ℏ) Ω(Φ, Ψ)
//! ```
//!
//! where `⟨·,·⟩` is conjugate-linear in the first slot. The expectation
//! `F(Ψ) = ⟨Ψ, F̂Ψ⟩` has Hamiltonian field `Y_F = −(i/ℏ) F̂Ψ` under
//! `i_Y Ω = dF`, so its flow is the Schrödinger evolution.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Entrywise tolerance for `F̂ = F̂†`.
pub const HERMITIAN_TOL: f64 = 1e-13;

/// Allowed `|‖Ψ‖ − 1|` for operations on the unit sphere.
pub const UNIT_TOL: f64 = 1e-12;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: CVector,
    hbar: f64,
}

impl StateVector {
    pub fn new(amps: CVector, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidInput(format!("ħ must be positive, got {hbar}")));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("state amplitudes must be finite".into()));
        }
        Ok(Self { amps, hbar })
    }

    pub fn from_slice(amps: &[Complex64], hbar: f64) -> Result<Self> {
        Self::new(CVector::from_column_slice(amps), hbar)
    }

    /// The standard basis vector `e_k` of `ℂⁿ`.
    pub fn basis(n: usize, k: usize, hbar: f64) -> Result<Self> {
        if k >= n {
            return Err(Error::InvalidInput(format!("basis index {k} out of range for n = {n}")));
        }
        let mut amps = CVector::zeros(n);
        amps[k] = Complex64::new(1.0, 0.0);
        Self::new(amps, hbar)
    }

    pub fn amps(&self) -> &CVector {
        &self.amps
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::NonUnitState { norm: n });
        }
        Ok(Self { amps: self.amps.unscale(n), hbar: self.hbar })
    }

    fn with_amps(&self, amps: CVector) -> Self {
        Self { amps, hbar: self.hbar }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianObservable {
    matrix: CMatrix,
}

impl HermitianObservable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidInput(format!("observable must be square, got {}×{}", matrix.nrows(), matrix.ncols())));
        }
        let defect = (&matrix - matrix.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!("observable is not Hermitian (defect {defect:e})")));
        }
        Ok(Self { matrix })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = CVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0)));
        Self { matrix: CMatrix::from_diagonal(&d) }
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: CMatrix::identity(n, n) }
    }

    pub fn pauli_x() -> Self {
        let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        Self { matrix: CMatrix::from_row_slice(2, 2, &[o, l, l, o]) }
    }

    pub fn pauli_y() -> Self {
        let o = Complex64::new(0.0, 0.0);
        Self { matrix: CMatrix::from_row_slice(2, 2, &[o, -I, I, o]) }
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, psi: &StateVector) -> Result<CVector> {
        check_dims(self.dim(), psi.dim())?;
        Ok(&self.matrix * &psi.amps)
    }

    /// Eigenvalues (ascending) and the matching orthonormal eigenvectors.
    pub fn eigenpairs(&self) -> Vec<(f64, CVector)> {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut pairs: Vec<(f64, CVector)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &l)| (l, eig.eigenvectors.column(k).into_owned()))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `⟨a, b⟩ = Σ ā_k b_k`.
pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

/// `(G, Ω) = (2ℏ Re⟨Φ,Ψ⟩, 2ℏ Im⟨Φ,Ψ⟩)`.
pub fn decompose_inner(phi: &StateVector, psi: &StateVector) -> Result<(f64, f64)> {
    check_dims(phi.dim(), psi.dim())?;
    let z = inner(&phi.amps, &psi.amps);
    let h = psi.hbar;
    Ok((2.0 * h * z.re, 2.0 * h * z.im))
}

/// `Ω(u, v) = 2ℏ Im⟨u, v⟩` on raw tangent vectors.
pub fn omega(hbar: f64, u: &CVector, v: &CVector) -> f64 {
    2.0 * hbar * inner(u, v).im
}

/// `G(u, v) = 2ℏ Re⟨u, v⟩` on raw tangent vectors.
pub fn metric(hbar: f64, u: &CVector, v: &CVector) -> f64 {
    2.0 * hbar * inner(u, v).re
}

/// `Y_F(Ψ) = −(1/ℏ) J F̂Ψ = −(i/ℏ) F̂Ψ`.
pub fn schrodinger_field(h: &HermitianObservable, psi: &StateVector) -> Result<CVector> {
    Ok(h.apply(psi)? * (-I / psi.hbar))
}

/// `⟨Ψ, F̂Ψ⟩`.
pub fn expectation(f: &HermitianObservable, psi: &StateVector) -> Result<f64> {
    Ok(inner(&psi.amps, &f.apply(psi)?).re)
}

/// `(1/2ℏ) G(Ψ, F̂Ψ)`; equal to [`expectation`].
pub fn expectation_metric(f: &HermitianObservable, psi: &StateVector) -> Result<f64> {
    Ok(metric(psi.hbar, &psi.amps, &f.apply(psi)?) / (2.0 * psi.hbar))
}

/// Fixed-step RK4 integration of `Ψ̇ = Y_H(Ψ)` up to time `t`.
pub fn evolve_rk4(h: &HermitianObservable, psi: &StateVector, t: f64, step: f64) -> Result<StateVector> {
    check_dims(h.dim(), psi.dim())?;
    if !(step > 0.0) || t < 0.0 {
        return Err(Error::InvalidInput(format!("need step > 0 and t ≥ 0, got step {step}, t {t}")));
    }
    let a = h.matrix() * (-I / psi.hbar);
    let steps = (t / step).round().max(0.0) as usize;
    let dt = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut y = psi.amps.clone();
    for _ in 0..steps {
        let k1 = &a * &y;
        let k2 = &a * (&y + &k1 * Complex64::from(dt / 2.0));
        let k3 = &a * (&y + &k2 * Complex64::from(dt / 2.0));
        let k4 = &a * (&y + &k3 * Complex64::from(dt));
        y += (k1 + k2 * Complex64::from(2.0) + k3 * Complex64::from(2.0) + k4) * Complex64::from(dt / 6.0);
    }
    Ok(psi.with_amps(y))
}

/// `e^{−iĤt/ℏ} Ψ` through the eigendecomposition of `Ĥ`.
pub fn propagate_exact(h: &HermitianObservable, psi: &StateVector, t: f64) -> Result<StateVector> {
    check_dims(h.dim(), psi.dim())?;
    let mut out = CVector::zeros(psi.dim());
    for (e, v) in h.eigenpairs() {
        let c = inner(&v, &psi.amps) * Complex64::from_polar(1.0, -e * t / psi.hbar);
        out += v * c;
    }
    Ok(psi.with_amps(out))
}

/// `Ω(Y_F(Ψ), probe) − dF(Ψ)[probe]`, the derivative by a central difference
/// with the given step.
pub fn hamilton_identity_residual(f: &HermitianObservable, psi: &StateVector, probe: &CVector, step: f64) -> Result<f64> {
    check_dims(psi.dim(), probe.len())?;
    let y = schrodinger_field(f, psi)?;
    let shifted = |s: f64| -> Result<f64> {
        let q = psi.with_amps(&psi.amps + probe * Complex64::from(s));
        expectation(f, &q)
    };
    let fd = (shifted(step)? - shifted(-step)?) / (2.0 * step);
    Ok(omega(psi.hbar, &y, probe) - fd)
}

/// `(residual, value_error)` for a candidate critical point of `F` on the
/// projective space: the part of the gradient `2F̂Ψ` orthogonal to `Ψ` and
/// `iΨ`, and `|F(Ψ) − λ|`.
pub fn projective_critical_check(f: &HermitianObservable, psi: &StateVector, eigval: f64) -> Result<(f64, f64)> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitState { norm });
    }
    let grad = f.apply(psi)? * Complex64::from(2.0);
    let v = &psi.amps;
    let iv = v * I;
    let along = inner(v, &grad).re;
    let phase = inner(&iv, &grad).re;
    let rest = &grad - v * Complex64::from(along) - &iv * Complex64::from(phase);
    Ok((rest.norm(), (expectation(f, psi)? - eigval).abs()))
}

/// `(Ω(Y_F, Y_K), ⟨Ψ, (1/iℏ)[F̂, K̂] Ψ⟩)` at `Ψ`.
pub fn bracket_commutator_check(f: &HermitianObservable, k: &HermitianObservable, psi: &StateVector) -> Result<(f64, f64)> {
    check_dims(f.dim(), k.dim())?;
    let lhs = omega(psi.hbar, &schrodinger_field(f, psi)?, &schrodinger_field(k, psi)?);
    let comm = f.matrix() * k.matrix() - k.matrix() * f.matrix();
    let scaled = comm * (Complex64::new(1.0, 0.0) / (I * psi.hbar));
    let rhs = inner(&psi.amps, &(scaled * &psi.amps)).re;
    Ok((lhs, rhs))
}

/// `lhs / rhs` of [`bracket_commutator_check`] for `σ_x, σ_y` at a fixed
/// state with `⟨σ_z⟩ ≠ 0`.
pub fn measure_kappa() -> Result<f64> {
    let psi = StateVector::from_slice(&[Complex64::new(0.8, 0.1), Complex64::new(0.3, -0.5)], 1.0)?.normalized()?;
    let (lhs, rhs) = bracket_commutator_check(&HermitianObservable::pauli_x(), &HermitianObservable::pauli_y(), &psi)?;
    Ok(lhs / rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conventions::KAPPA_QM;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize, hbar: f64) -> StateVector {
        let amps = CVector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        StateVector::new(amps, hbar).unwrap().normalized().unwrap()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianObservable {
        let a = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        HermitianObservable::new((&a + a.adjoint()) * c(0.5, 0.0)).unwrap()
    }

    #[test]
    fn decompose_examples() {
        let e1 = StateVector::basis(3, 0, 1.0).unwrap();
        assert_eq!(decompose_inner(&e1, &e1).unwrap(), (2.0, 0.0));
        let ie1 = e1.with_amps(e1.amps() * I);
        assert_eq!(decompose_inner(&e1, &ie1).unwrap(), (0.0, 2.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let hbar = rng.random_range(0.2..3.0);
            let (a, b) = (random_state(&mut rng, 4, hbar), random_state(&mut rng, 4, hbar));
            let (g1, o1) = decompose_inner(&a, &b).unwrap();
            let (g2, o2) = decompose_inner(&b, &a).unwrap();
            assert!((g1 - g2).abs() < 1e-13 && (o1 + o2).abs() < 1e-13);
            let back = c(g1, o1) / (2.0 * hbar);
            assert!((back - inner(a.amps(), b.amps())).norm() < 1e-15);
            assert!(decompose_inner(&a, &a).unwrap().0 > 0.0);
        }
        let short = StateVector::basis(2, 0, 1.0).unwrap();
        assert!(matches!(decompose_inner(&e1, &short), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn hermitian_check() {
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)]);
        assert!(HermitianObservable::new(bad).is_err());
        assert!(HermitianObservable::new(HermitianObservable::pauli_y().matrix().clone()).is_ok());
    }

    #[test]
    fn schrodinger_field_examples() {
        let e1 = StateVector::basis(2, 0, 1.0).unwrap();
        let y = schrodinger_field(&HermitianObservable::identity(2), &e1).unwrap();
        assert_eq!(y, CVector::from_column_slice(&[c(0.0, -1.0), c(0.0, 0.0)]));
        let zero = HermitianObservable::diagonal(&[0.0, 0.0]);
        assert_eq!(schrodinger_field(&zero, &e1).unwrap().norm(), 0.0);
    }

    #[test]
    fn diagonal_flow_matches_phases() {
        let h = HermitianObservable::diagonal(&[0.5, -1.0, 2.0, 3.0]);
        let psi = StateVector::from_slice(&[c(0.5, 0.0), c(0.0, 0.5), c(0.5, 0.5), c(-0.5, 0.0)], 1.0).unwrap().normalized().unwrap();
        let rk = evolve_rk4(&h, &psi, 1.0, 1e-3).unwrap();
        // oracle: each amplitude picks up e^{−iE t}
        let energies = [0.5, -1.0, 2.0, 3.0];
        for (k, e) in energies.iter().enumerate() {
            let want = psi.amps()[k] * Complex64::from_polar(1.0, -e);
            assert!((rk.amps()[k] - want).norm() < 1e-8);
        }
        let exact = propagate_exact(&h, &psi, 1.0).unwrap();
        assert!((exact.amps() - rk.amps()).norm() < 1e-8);
    }

    #[test]
    fn flow_conserves_norm_and_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(&mut rng, 4);
        let psi = random_state(&mut rng, 4, 0.7);
        let out = evolve_rk4(&h, &psi, 1.0, 1e-3).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-9);
        assert!((expectation(&h, &out).unwrap() - expectation(&h, &psi).unwrap()).abs() < 1e-9);
        let exact = propagate_exact(&h, &psi, 1.0).unwrap();
        assert!((exact.amps() - out.amps()).norm() < 1e-8);
    }

    #[test]
    fn expectation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_state(&mut rng, 3, 1.0);
        assert!((expectation(&HermitianObservable::identity(3), &psi).unwrap() - 1.0).abs() < 1e-14);
        let e2 = StateVector::basis(2, 1, 1.0).unwrap();
        assert_eq!(expectation(&HermitianObservable::diagonal(&[3.0, 5.0]), &e2).unwrap(), 5.0);
        for _ in 0..10 {
            let f = random_hermitian(&mut rng, 5);
            let hbar = rng.random_range(0.3..2.0);
            let psi = random_state(&mut rng, 5, hbar);
            let z = inner(psi.amps(), &f.apply(&psi).unwrap());
            assert!(z.im.abs() < 1e-13);
            assert!((expectation(&f, &psi).unwrap() - expectation_metric(&f, &psi).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn hamilton_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_hermitian(&mut rng, 4);
        let psi = random_state(&mut rng, 4, 1.3);
        assert_eq!(hamilton_identity_residual(&f, &psi, &CVector::zeros(4), 1e-3).unwrap(), 0.0);
        let probe = random_state(&mut rng, 4, 1.0).amps().clone();
        // the expectation is quadratic, so the central difference is exact
        // up to rounding at every step
        for step in [1e-1, 1e-2, 1e-3] {
            assert!(hamilton_identity_residual(&f, &psi, &probe, step).unwrap().abs() < 1e-11);
        }
        let id = HermitianObservable::identity(4);
        let tangent = psi.amps() * I;
        assert!(hamilton_identity_residual(&id, &psi, &tangent, 1e-3).unwrap().abs() < 1e-12);
    }

    #[test]
    fn eigenvectors_are_projective_critical_points() {
        let e1 = StateVector::basis(2, 0, 1.0).unwrap();
        let (r, v) = projective_critical_check(&HermitianObservable::diagonal(&[1.0, 2.0]), &e1, 1.0).unwrap();
        assert!(r < 1e-12 && v < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_hermitian(&mut rng, 5);
        for (l, vec) in f.eigenpairs() {
            let psi = StateVector::new(vec, 1.0).unwrap();
            let (r, v) = projective_critical_check(&f, &psi, l).unwrap();
            assert!(r < 1e-10 && v < 1e-10);
        }
        let generic = random_state(&mut rng, 5, 1.0);
        assert!(projective_critical_check(&f, &generic, 0.0).unwrap().0 > 1e-3);
        let long = StateVector::new(generic.amps() * c(2.0, 0.0), 1.0).unwrap();
        assert!(matches!(projective_critical_check(&f, &long, 0.0), Err(Error::NonUnitState { .. })));
    }

    #[test]
    fn bracket_commutator_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi2 = random_state(&mut rng, 2, 1.0);
        let (a, b) = (HermitianObservable::diagonal(&[1.0, -2.0]), HermitianObservable::diagonal(&[0.5, 4.0]));
        let (l, r) = bracket_commutator_check(&a, &b, &psi2).unwrap();
        assert!(l.abs() < 1e-15 && r.abs() < 1e-15);
        // oracle: [σx, σy] = 2iσz, so the right side is (2/ℏ)⟨σz⟩
        for hbar in [1.0, 0.5] {
            let psi = random_state(&mut rng, 2, hbar);
            let (l, r) = bracket_commutator_check(&HermitianObservable::pauli_x(), &HermitianObservable::pauli_y(), &psi).unwrap();
            let sz = expectation(&HermitianObservable::pauli_z(), &psi).unwrap();
            assert!((r - 2.0 / hbar * sz).abs() < 1e-13);
            assert!((l - KAPPA_QM * r).abs() < 1e-13);
        }
        let f = random_hermitian(&mut rng, 3);
        let psi3 = random_state(&mut rng, 3, 1.0);
        let (l, r) = bracket_commutator_check(&f, &f, &psi3).unwrap();
        assert!(l.abs() < 1e-14 && r.abs() < 1e-14);
        assert_eq!(measure_kappa().unwrap().round(), KAPPA_QM);
        assert!((measure_kappa().unwrap() - KAPPA_QM).abs() < 1e-13);
    }
}
