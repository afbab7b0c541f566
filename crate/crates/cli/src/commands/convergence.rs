use bsq_core::observables::{compare_brackets, restriction_identity_residual};
use bsq_core::{InducedObservable, OmegaSystem, ScalarField};
use rayon::prelude::*;

use super::max_abs;
use crate::config::{field, moduli_point, ConvergenceConfig};
use crate::report::{num, Report, Table};
use crate::{numeric, CliError, Overrides};

pub fn convergence(cfg: ConvergenceConfig, o: Overrides) -> Result<Report, CliError> {
    let tol = o.tol.unwrap_or(cfg.tol);
    let seed = o.seed.unwrap_or(cfg.seed);
    let surface = cfg.surface.build()?;
    let pairs: Vec<(&str, &str, ScalarField, ScalarField)> = cfg
        .pairs
        .iter()
        .map(|(f, g)| Ok((f.as_str(), g.as_str(), field(f)?, field(g)?)))
        .collect::<Result<_, CliError>>()?;
    let mut ns = cfg.n.clone();
    ns.sort_unstable();
    ns.dedup();
    let points = if pairs.is_empty() {
        Vec::new()
    } else {
        ns.iter().map(|&n| moduli_point(&surface, &cfg.cycle, &cfg.theta, n)).collect::<Result<Vec<_>, _>>()?
    };

    // per N, per pair: [matrix, closed_form, target, rel_spread, restriction]
    let values: Vec<Vec<[f64; 5]>> = points
        .par_iter()
        .map(|p| {
            let sys = OmegaSystem::new(p);
            pairs
                .iter()
                .map(|(fs, gs, f, g)| {
                    let what = format!("({fs}, {gs}) at N = {}", p.len());
                    let (fo, go) = (InducedObservable::new(f.clone()), InducedObservable::new(g.clone()));
                    let c = numeric(&what, compare_brackets(&surface, &sys, &fo, &go, p))?;
                    let r = numeric(&what, restriction_identity_residual(&surface, f, g, p.cycle()))?;
                    Ok([c.matrix, c.closed_form, c.target, c.rel_spread(), max_abs(&r)])
                })
                .collect()
        })
        .collect::<Result<_, CliError>>()?;

    let mut table = Table::new(
        "convergence",
        &["f", "g", "N", "matrix", "closed_form", "target", "rel_spread", "restriction_residual", "matrix_change_vs_finest"],
    )
    .meta("loop", &cfg.cycle.id)
    .meta("theta", &cfg.theta.id)
    .meta("tol", num(tol))
    .meta("seed", seed);
    let mut report = Report::new();
    for (k, (fs, gs, _, _)) in pairs.iter().enumerate() {
        let finest = values.last().map(|v| v[k]);
        for (n, v) in ns.iter().zip(&values) {
            let [m, c, t, s, r] = v[k];
            let delta = (m - finest.expect("non-empty")[0]).abs();
            table.row([fs.to_string(), gs.to_string(), n.to_string(), num(m), num(c), num(t), num(s), num(r), num(delta)]);
        }
        if let Some([_, _, _, s, r]) = finest {
            report.passed &= s <= tol && r <= tol;
            report.note(format!("({fs}, {gs}) at N = {}: rel_spread {}, restriction residual {}", ns[ns.len() - 1], num(s), num(r)));
        }
    }
    report.file("convergence.csv", table.finish());
    Ok(report)
}
