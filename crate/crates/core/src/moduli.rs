//! The moduli space of half-weighted Bohr–Sommerfeld cycles of volume one.
//!
//! A point is a pair `(γ, θ₀)`: a Bohr–Sommerfeld loop and a half-density with
//! `∫θ₀² = 1`. A tangent vector is a pair `(f₁, θ₁)` of grid functions subject
//! to
//!
//! ```text
//! ∫ f₁ θ₀² = 0        ∫ θ₀ θ₁ = 0
//! ```
//!
//! and the symplectic form is `Ω(v₁, v₂) = ∫ (f₁θ₂ − f₂θ₁) θ₀`.
//!
//! Geometrically `f₁` moves the loop along the normal field `ν` fixed by
//! `ω(ν, γ') = f₁'`; the tangential part of a deformation is a
//! reparametrization and is gauged away.

use nalgebra::{DMatrix, DVector, LU};

use crate::cycles::{CycleJson, HalfDensity, Loop, TOL_BS};
use crate::error::{Error, Result};
use crate::spectral;
use crate::symplectic::{SymplecticSurface, Vec2, MIN_TANGENT_NORM};

/// Allowed deviation of `∫θ₀²` from one at a moduli point.
pub const VOLUME_TOL: f64 = 1e-10;

/// `Ω` pairings with a smaller minimum singular value are treated as singular.
pub const MIN_SINGULAR_VALUE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ModuliPoint {
    cycle: Loop,
    theta: HalfDensity,
}

impl ModuliPoint {
    pub fn new(surface: &SymplecticSurface, cycle: Loop, theta: HalfDensity) -> Result<Self> {
        if cycle.len() != theta.len() {
            return Err(Error::DimensionMismatch { expected: cycle.len(), got: theta.len() });
        }
        let vol = theta.volume();
        if (vol - 1.0).abs() > VOLUME_TOL {
            return Err(Error::InvalidInput(format!("half-density volume {vol} is not 1")));
        }
        let defect = cycle.bs_defect(surface)?;
        if defect.abs() > TOL_BS {
            return Err(Error::InvalidInput(format!("loop is not Bohr–Sommerfeld (defect {defect:e})")));
        }
        Ok(Self { cycle, theta })
    }

    /// Rescale `cycle` onto the nearest Bohr–Sommerfeld level and normalize `theta`.
    pub fn projected(surface: &SymplecticSurface, cycle: &Loop, theta: &HalfDensity) -> Result<Self> {
        Self::new(surface, cycle.project_to_bs(surface)?, theta.normalized()?)
    }

    /// Skip validation; used for points produced by validated operations.
    pub(crate) fn from_parts_unchecked(cycle: Loop, theta: HalfDensity) -> Self {
        Self { cycle, theta }
    }

    pub fn cycle(&self) -> &Loop {
        &self.cycle
    }

    pub fn theta(&self) -> &HalfDensity {
        &self.theta
    }

    pub fn theta_values(&self) -> &[f64] {
        self.theta.values()
    }

    pub fn len(&self) -> usize {
        self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle.is_empty()
    }

    pub fn rotated(&self, shift: usize) -> Self {
        Self { cycle: self.cycle.rotated(shift), theta: self.theta.rotated(shift) }
    }

    pub fn to_json(&self) -> String {
        self.cycle.to_json(Some(&self.theta))
    }

    pub fn from_json(surface: &SymplecticSurface, src: &str) -> Result<Self> {
        let doc: CycleJson = serde_json::from_str(src).map_err(|e| Error::InvalidInput(e.to_string()))?;
        match doc.into_parts()? {
            (cycle, Some(theta)) => Self::new(surface, cycle, theta),
            (_, None) => Err(Error::InvalidInput("moduli point needs a `theta` array".into())),
        }
    }
}

/// A pair `(f₁, θ₁)`. Vectors returned by [`project_tangent`] satisfy both
/// linear constraints; raw pairs used as constant-coefficient fields need not.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub fvec: Vec<f64>,
    pub tvec: Vec<f64>,
}

impl TangentVector {
    pub fn new(fvec: Vec<f64>, tvec: Vec<f64>) -> Self {
        assert_eq!(fvec.len(), tvec.len(), "tangent components must have equal length");
        Self { fvec, tvec }
    }

    pub fn zeros(n: usize) -> Self {
        Self { fvec: vec![0.0; n], tvec: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.fvec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fvec.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { fvec: self.fvec.iter().map(|v| v * c).collect(), tvec: self.tvec.iter().map(|v| v * c).collect() }
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self {
            fvec: self.fvec.iter().zip(&other.fvec).map(|(a, b)| a + b).collect(),
            tvec: self.tvec.iter().zip(&other.tvec).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(-1.0))
    }

    /// Grid `L²` norm of both components together.
    pub fn norm(&self) -> f64 {
        (spectral::inner(&self.fvec, &self.fvec) + spectral::inner(&self.tvec, &self.tvec)).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.fvec.iter().chain(&self.tvec).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn rotated(&self, shift: usize) -> Self {
        let mut f = self.fvec.clone();
        let mut t = self.tvec.clone();
        let n = f.len();
        f.rotate_left(shift % n);
        t.rotate_left(shift % n);
        Self { fvec: f, tvec: t }
    }
}

/// Remove the constant from `raw_f` (weighted by `θ₀²`) and the `θ₀`
/// component from `raw_t`.
pub fn project_tangent(p: &ModuliPoint, raw_f: &[f64], raw_t: &[f64]) -> TangentVector {
    project_with_theta(p.theta_values(), raw_f, raw_t)
}

pub(crate) fn project_with_theta(theta: &[f64], raw_f: &[f64], raw_t: &[f64]) -> TangentVector {
    let vol = spectral::inner(theta, theta);
    let c = spectral::inner3(raw_f, theta, theta) / vol;
    let d = spectral::inner(theta, raw_t) / vol;
    TangentVector {
        fvec: raw_f.iter().map(|v| v - c).collect(),
        tvec: raw_t.iter().zip(theta).map(|(t, h)| t - d * h).collect(),
    }
}

/// `∫ f₁ θ₀²` and `∫ θ₀ θ₁`; both vanish for constrained vectors.
pub fn constraint_residuals(p: &ModuliPoint, v: &TangentVector) -> (f64, f64) {
    let th = p.theta_values();
    (spectral::inner3(&v.fvec, th, th), spectral::inner(th, &v.tvec))
}

/// `Ω(v₁, v₂) = ∫ (f₁θ₂ − f₂θ₁) θ₀`.
pub fn omega(p: &ModuliPoint, v1: &TangentVector, v2: &TangentVector) -> f64 {
    omega_with_theta(p.theta_values(), v1, v2)
}

fn omega_with_theta(theta: &[f64], v1: &TangentVector, v2: &TangentVector) -> f64 {
    spectral::inner3(&v1.fvec, &v2.tvec, theta) - spectral::inner3(&v2.fvec, &v1.tvec, theta)
}

/// Normal velocity field `ν` with `ω(ν, γ') = f₁'` along a loop given by its
/// samples and spectral tangents.
pub(crate) fn normal_velocity(surface: &SymplecticSurface, points: &[Vec2], tangents: &[Vec2], fvec: &[f64]) -> Result<Vec<Vec2>> {
    let df = spectral::derivative(fvec);
    points
        .iter()
        .zip(tangents)
        .zip(df)
        .map(|((&p, t), d)| {
            let t2 = t.norm_squared();
            if t2.sqrt() < MIN_TANGENT_NORM {
                return Err(Error::DegenerateLoop(format!("tangent of norm {:e}", t2.sqrt())));
            }
            let jt = Vec2::new(-t.y, t.x);
            Ok(jt * (-d / (surface.density(p) * t2)))
        })
        .collect()
}

/// The ambient displacement `(ν, θ₁)` realizing a tangent vector.
pub fn displacement(surface: &SymplecticSurface, p: &ModuliPoint, v: &TangentVector) -> Result<(Vec<Vec2>, Vec<f64>)> {
    let nu = normal_velocity(surface, p.cycle().points(), &p.cycle().tangents(), &v.fvec)?;
    Ok((nu, v.tvec.clone()))
}

/// Inverse of [`displacement`]: recover the constrained `(f₁, θ₁)` from an
/// ambient displacement `(δγ, δθ)`. Tangential components of `δγ` are
/// reparametrizations and drop out.
pub fn tangent_from_displacement(surface: &SymplecticSurface, p: &ModuliPoint, dgamma: &[Vec2], dtheta: &[f64]) -> TangentVector {
    let t = p.cycle().tangents();
    let flux: Vec<f64> = p
        .cycle()
        .points()
        .iter()
        .zip(dgamma)
        .zip(&t)
        .map(|((&q, d), tq)| surface.omega(q, *d, *tq))
        .collect();
    project_tangent(p, &spectral::antiderivative(&flux), dtheta)
}

/// Result of a finite step along a tangent vector, with the size of the
/// corrections applied to land back on the moduli space.
#[derive(Debug, Clone)]
pub struct Realization {
    pub point: ModuliPoint,
    /// `|∫(θ₀ + tθ₁)² − 1|` before renormalization.
    pub volume_correction: f64,
    /// Bohr–Sommerfeld defect of the displaced loop before re-projection.
    pub bs_defect_before: f64,
    /// `|λ − 1|` for the homothety factor `λ` used by the re-projection.
    pub bs_correction: f64,
}

/// Move `p` by `t·v`: loop points by `t·ν`, the half-density by `t·θ₁`, then
/// renormalize the volume and rescale onto the Bohr–Sommerfeld level.
pub fn realize_tangent(surface: &SymplecticSurface, p: &ModuliPoint, v: &TangentVector, t: f64) -> Result<Realization> {
    let (nu, dtheta) = displacement(surface, p, v)?;
    let moved: Vec<Vec2> = p.cycle().points().iter().zip(&nu).map(|(q, d)| q + d * t).collect();
    let moved = Loop::with_winding(moved, p.cycle().winding())?;
    let theta = HalfDensity::new(p.theta_values().iter().zip(&dtheta).map(|(h, d)| h + t * d).collect())?;
    let volume_correction = (theta.volume() - 1.0).abs();
    let theta = theta.normalized()?;
    let bs_defect_before = moved.bs_defect(surface)?;
    let projected = moved.project_to_bs(surface)?;
    let c0 = moved.centroid();
    let bs_correction = projected
        .points()
        .iter()
        .zip(moved.points())
        .map(|(a, b)| (b - c0).norm().max(f64::MIN_POSITIVE).recip() * (a - c0).norm())
        .fold(0.0, |m: f64, r| m.max((r - 1.0).abs()));
    if projected.min_segment_length() <= crate::cycles::MIN_SEGMENT {
        return Err(Error::DegenerateLoop("displaced loop collapsed".into()));
    }
    Ok(Realization {
        point: ModuliPoint::from_parts_unchecked(projected, theta),
        volume_correction,
        bs_defect_before,
        bs_correction,
    })
}

/// `Ω` at a point in an orthonormal basis of the constrained tangent space,
/// factored for repeated `♯`/`♭` conversions.
///
/// The basis is the real Fourier basis of each component, Householder-reflected
/// so that it spans the orthogonal complement of the constraint direction
/// (`θ₀²` for `f₁`, `θ₀` for `θ₁`). `Ω` only pairs `f` with `θ`, so its matrix
/// is `[[0, K], [−Kᵀ, 0]]` with `K_ij = ∫ b^f_i θ₀ b^θ_j`.
pub struct OmegaSystem {
    n: usize,
    f_basis: Vec<Vec<f64>>,
    t_basis: Vec<Vec<f64>>,
    k: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_t: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    k_singular_values: Vec<f64>,
}

fn reflected_basis(constraint: &[f64], modes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let norm = spectral::inner(constraint, constraint).sqrt();
    let w: Vec<f64> = constraint.iter().map(|c| c / norm).collect();
    let sign = if spectral::integrate(&w) >= 0.0 { 1.0 } else { -1.0 };
    // v = ŵ + sign·e₀ maps ŵ to −sign·e₀; modes orthogonal to e₀ land in ŵ^⊥.
    let v: Vec<f64> = w.iter().map(|x| x + sign).collect();
    let vv = spectral::inner(&v, &v);
    modes[1..]
        .iter()
        .map(|m| {
            let c = 2.0 * spectral::inner(&v, m) / vv;
            m.iter().zip(&v).map(|(a, b)| a - c * b).collect()
        })
        .collect()
}

impl OmegaSystem {
    pub fn new(p: &ModuliPoint) -> Self {
        let n = p.len();
        let theta = p.theta_values();
        let modes = spectral::fourier_modes(n);
        let theta2: Vec<f64> = theta.iter().map(|h| h * h).collect();
        let f_basis = reflected_basis(&theta2, &modes);
        let t_basis = reflected_basis(theta, &modes);
        let m = n - 1;
        let bf = DMatrix::from_fn(n, m, |i, j| f_basis[j][i]);
        let bt = DMatrix::from_fn(n, m, |i, j| t_basis[j][i] * theta[i]);
        let k = bf.transpose() * bt / n as f64;
        let mut k_singular_values: Vec<f64> = k.clone().svd(false, false).singular_values.iter().copied().collect();
        k_singular_values.sort_by(|a, b| a.total_cmp(b));
        Self {
            n,
            f_basis,
            t_basis,
            lu: k.clone().lu(),
            lu_t: k.transpose().lu(),
            k,
            k_singular_values,
        }
    }

    /// Dimension of the constrained tangent space, `2N − 2`.
    pub fn dim(&self) -> usize {
        2 * (self.n - 1)
    }

    pub fn grid_len(&self) -> usize {
        self.n
    }

    /// Basis vector `j` of the constrained tangent space; the first `N − 1`
    /// are pure `f` directions, the rest pure `θ` directions.
    pub fn basis_vector(&self, j: usize) -> TangentVector {
        let m = self.n - 1;
        if j < m {
            TangentVector { fvec: self.f_basis[j].clone(), tvec: vec![0.0; self.n] }
        } else {
            TangentVector { fvec: vec![0.0; self.n], tvec: self.t_basis[j - m].clone() }
        }
    }

    /// The full `(2N−2)×(2N−2)` matrix `Ω_ij = Ω(e_i, e_j)`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let m = self.n - 1;
        let mut om = DMatrix::zeros(2 * m, 2 * m);
        om.view_mut((0, m), (m, m)).copy_from(&self.k);
        om.view_mut((m, 0), (m, m)).copy_from(&(-self.k.transpose()));
        om
    }

    /// Singular values of `Ω`, ascending. Each singular value of the
    /// off-diagonal block appears twice.
    pub fn singular_values(&self) -> Vec<f64> {
        self.k_singular_values.iter().flat_map(|&s| [s, s]).collect()
    }

    pub fn min_singular_value(&self) -> f64 {
        self.k_singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn coordinates(&self, v: &TangentVector) -> DVector<f64> {
        let m = self.n - 1;
        DVector::from_fn(2 * m, |j, _| {
            if j < m {
                spectral::inner(&self.f_basis[j], &v.fvec)
            } else {
                spectral::inner(&self.t_basis[j - m], &v.tvec)
            }
        })
    }

    pub fn vector(&self, coords: &DVector<f64>) -> TangentVector {
        let m = self.n - 1;
        let mut v = TangentVector::zeros(self.n);
        for j in 0..m {
            let (cf, ct) = (coords[j], coords[m + j]);
            for i in 0..self.n {
                v.fvec[i] += cf * self.f_basis[j][i];
                v.tvec[i] += ct * self.t_basis[j][i];
            }
        }
        v
    }

    /// `♭(v) = Ω(v, ·)` on the basis.
    pub fn flat(&self, v: &TangentVector) -> DVector<f64> {
        let c = self.coordinates(v);
        let m = self.n - 1;
        let cf = c.rows(0, m);
        let ct = c.rows(m, m);
        let lf = -(&self.k * ct);
        let lt = self.k.transpose() * cf;
        let mut out = DVector::zeros(2 * m);
        out.rows_mut(0, m).copy_from(&lf);
        out.rows_mut(m, m).copy_from(&lt);
        out
    }

    /// Values of a linear functional on the basis vectors.
    pub fn functional_on_basis(&self, ell: impl Fn(&TangentVector) -> Result<f64>) -> Result<DVector<f64>> {
        let vals = (0..self.dim()).map(|j| ell(&self.basis_vector(j))).collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(vals))
    }

    /// `♯(ℓ)`: the unique constrained `v` with `Ω(v, ·) = ℓ`.
    pub fn sharp(&self, ell: &DVector<f64>) -> Result<TangentVector> {
        let sv = self.min_singular_value();
        if sv < MIN_SINGULAR_VALUE {
            return Err(Error::SingularPairing { min_singular_value: sv });
        }
        let m = self.n - 1;
        if ell.len() != 2 * m {
            return Err(Error::DimensionMismatch { expected: 2 * m, got: ell.len() });
        }
        // Ωᵀ c = ℓ  ⇔  −K c_θ = ℓ_f,  Kᵀ c_f = ℓ_θ
        let lf = ell.rows(0, m).into_owned();
        let lt = ell.rows(m, m).into_owned();
        let ct = -self.lu.solve(&lf).ok_or(Error::SingularPairing { min_singular_value: sv })?;
        let cf = self.lu_t.solve(&lt).ok_or(Error::SingularPairing { min_singular_value: sv })?;
        let mut c = DVector::zeros(2 * m);
        c.rows_mut(0, m).copy_from(&cf);
        c.rows_mut(m, m).copy_from(&ct);
        Ok(self.vector(&c))
    }
}

/// Finite-difference exterior derivative `dΩ(u, v, w)` for three
/// constant-coefficient fields.
///
/// Each field is `q ↦ project_tangent(q, raw)`, carried by its ambient
/// displacement `(ν, θ₁)`. Directional derivatives and Lie brackets are
/// central differences over points reached by [`realize_tangent`] with step
/// `±h`, so the result tends to zero with the step.
pub fn domega_check(surface: &SymplecticSurface, p: &ModuliPoint, raws: [&TangentVector; 3], h: f64) -> Result<f64> {
    let field = |q: &ModuliPoint, raw: &TangentVector| project_tangent(q, &raw.fvec, &raw.tvec);
    let ambient = |q: &ModuliPoint, raw: &TangentVector| -> Result<(Vec<Vec2>, Vec<f64>)> {
        displacement(surface, q, &field(q, raw))
    };
    let shifted = |dir: &TangentVector, t: f64| -> Result<ModuliPoint> {
        Ok(realize_tangent(surface, p, &field(p, dir), t)?.point)
    };
    // X(Ω(Y, Z))
    let directional = |x: &TangentVector, y: &TangentVector, z: &TangentVector| -> Result<f64> {
        let plus = shifted(x, h)?;
        let minus = shifted(x, -h)?;
        let a = omega(&plus, &field(&plus, y), &field(&plus, z));
        let b = omega(&minus, &field(&minus, y), &field(&minus, z));
        Ok((a - b) / (2.0 * h))
    };
    // [X, Y] = DY·X − DX·Y in ambient coordinates
    let bracket = |x: &TangentVector, y: &TangentVector| -> Result<TangentVector> {
        let diff = |along: &TangentVector, of: &TangentVector| -> Result<(Vec<Vec2>, Vec<f64>)> {
            let (gp, tp) = ambient(&shifted(along, h)?, of)?;
            let (gm, tm) = ambient(&shifted(along, -h)?, of)?;
            Ok((
                gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect(),
                tp.iter().zip(&tm).map(|(a, b)| (a - b) / (2.0 * h)).collect(),
            ))
        };
        let (g1, t1) = diff(x, y)?;
        let (g2, t2) = diff(y, x)?;
        let dg: Vec<Vec2> = g1.iter().zip(&g2).map(|(a, b)| a - b).collect();
        let dt: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| a - b).collect();
        Ok(tangent_from_displacement(surface, p, &dg, &dt))
    };
    let [u, v, w] = raws;
    let (fu, fv, fw) = (field(p, u), field(p, v), field(p, w));
    let derivative_terms = directional(u, v, w)? + directional(v, w, u)? + directional(w, u, v)?;
    let bracket_terms = omega(p, &bracket(u, v)?, &fw) + omega(p, &bracket(v, w)?, &fu) + omega(p, &bracket(w, u)?, &fv);
    Ok(derivative_terms - bracket_terms)
}
