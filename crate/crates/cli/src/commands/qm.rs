use bsq_core::conventions::KAPPA_QM;
use bsq_core::qm::{self, CMatrix, CVector, HermitianObservable, StateVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::QmConfig;
use crate::report::{num, Report, Table};
use crate::{numeric, CliError, Overrides};

/// Central-difference step for the Hamilton identity; the expectation is
/// quadratic, so the difference is exact up to rounding.
const FD_STEP: f64 = 1e-3;

fn uniform_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn hermitian(rng: &mut ChaCha8Rng, n: usize) -> Result<HermitianObservable, CliError> {
    let a = CMatrix::from_fn(n, n, |_, _| uniform_complex(rng));
    numeric("random observable", HermitianObservable::new((&a + a.adjoint()) * Complex64::from(0.5)))
}

fn state(rng: &mut ChaCha8Rng, n: usize, hbar: f64) -> Result<StateVector, CliError> {
    let amps = CVector::from_fn(n, |_, _| uniform_complex(rng));
    numeric("random state", StateVector::new(amps, hbar).and_then(|s| s.normalized()))
}

/// `(check, value, tolerance)` rows for one random instance.
fn instance(cfg: &QmConfig, seed: u64, dim: usize, k: usize, tol: f64) -> Result<Vec<(&'static str, f64, f64)>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((dim as u64) << 32) | k as u64);
    let h = hermitian(&mut rng, dim)?;
    let f = hermitian(&mut rng, dim)?;
    let psi = state(&mut rng, dim, cfg.hbar)?;
    let probe = CVector::from_fn(dim, |_, _| uniform_complex(&mut rng));

    let rk = numeric("rk4", qm::evolve_rk4(&h, &psi, cfg.t, cfg.h))?;
    let exact = numeric("exact propagation", qm::propagate_exact(&h, &psi, cfg.t))?;
    let flow_error = (rk.amps() - exact.amps()).norm();

    let (mut residual, mut value_error) = (0.0f64, 0.0f64);
    for (l, v) in f.eigenpairs() {
        let s = numeric("eigenvector", StateVector::new(v, cfg.hbar))?;
        let (r, e) = numeric("critical point", qm::projective_critical_check(&f, &s, l))?;
        residual = residual.max(r);
        value_error = value_error.max(e);
    }

    let (lhs, rhs) = numeric("bracket", qm::bracket_commutator_check(&h, &f, &psi))?;
    let kappa_spread = (lhs - KAPPA_QM * rhs).abs() / (KAPPA_QM * rhs.abs());
    let hamilton = numeric("hamilton identity", qm::hamilton_identity_residual(&f, &psi, &probe, FD_STEP))?.abs();
    Ok(vec![
        ("flow_vs_exact", flow_error, tol),
        ("critical_residual", residual, cfg.eig_tol),
        ("critical_value_error", value_error, cfg.eig_tol),
        ("kappa_spread", kappa_spread, cfg.eig_tol),
        ("hamilton_identity", hamilton, cfg.eig_tol),
    ])
}

pub fn qm_check(cfg: QmConfig, o: Overrides) -> Result<Report, CliError> {
    let tol = o.tol.unwrap_or(cfg.tol);
    let seed = o.seed.unwrap_or(cfg.seed);
    if cfg.hbar.is_nan() || cfg.hbar <= 0.0 || cfg.dims.contains(&0) {
        return Err(CliError::Config("need hbar > 0 and positive dims".into()));
    }
    let jobs: Vec<(usize, usize)> = cfg.dims.iter().flat_map(|&d| (0..cfg.instances).map(move |k| (d, k))).collect();
    let rows: Vec<_> = jobs.par_iter().map(|&(d, k)| instance(&cfg, seed, d, k, tol)).collect::<Result<_, _>>()?;

    let mut table = Table::new("qm-check", &["check", "dim", "instance", "value", "tol", "pass"])
        .meta("hbar", num(cfg.hbar))
        .meta("t", num(cfg.t))
        .meta("h", num(cfg.h))
        .meta("tol", num(tol))
        .meta("eig_tol", num(cfg.eig_tol))
        .meta("seed", seed);
    let mut report = Report::new();
    let mut failures = 0;
    for ((d, k), checks) in jobs.iter().zip(&rows) {
        for (name, value, bound) in checks {
            let pass = value <= bound;
            failures += usize::from(!pass);
            table.row([name.to_string(), d.to_string(), k.to_string(), num(*value), num(*bound), pass.to_string()]);
        }
    }
    report.passed = failures == 0;
    report.note(format!("{} instances, {failures} failed checks", jobs.len()));
    report.file("qm_check.csv", table.finish());
    Ok(report)
}
