use bsq_core::observables::compare_brackets;
use bsq_core::{InducedObservable, ModuliPoint, OmegaSystem};
use rayon::prelude::*;

use crate::config::{moduli_point, observable, BracketConfig};
use crate::report::{num, Report, Table};
use crate::{numeric, CliError, Overrides};

pub fn bracket_check(cfg: BracketConfig, o: Overrides) -> Result<Report, CliError> {
    let tol = o.tol.unwrap_or(cfg.tol);
    let seed = o.seed.unwrap_or(cfg.seed);
    let surface = cfg.surface.build()?;
    let pairs: Vec<(&str, &str, InducedObservable, InducedObservable)> = cfg
        .pairs
        .iter()
        .map(|(f, g)| Ok((f.as_str(), g.as_str(), observable(f, cfg.tau)?, observable(g, cfg.tau)?)))
        .collect::<Result<_, CliError>>()?;

    let mut points: Vec<(String, usize, ModuliPoint)> = Vec::new();
    if !pairs.is_empty() {
        for &n in &cfg.n {
            for l in &cfg.loops {
                for th in &cfg.thetas {
                    points.push((format!("{}/{}", l.id, th.id), n, moduli_point(&surface, l, th, n)?));
                }
            }
        }
    }

    let blocks: Vec<Vec<(usize, [f64; 4])>> = points
        .par_iter()
        .map(|(id, _, p)| {
            let sys = OmegaSystem::new(p);
            pairs
                .iter()
                .enumerate()
                .map(|(k, (fs, gs, f, g))| {
                    let c = numeric(&format!("bracket ({fs}, {gs}) on {id}"), compare_brackets(&surface, &sys, f, g, p))?;
                    Ok((k, [c.matrix, c.closed_form, c.target, c.rel_spread()]))
                })
                .collect()
        })
        .collect::<Result<_, CliError>>()?;

    let mut table = Table::new("bracket-check", &["f", "g", "loop_id", "N", "matrix", "closed_form", "target", "sigma", "rel_spread"])
        .meta("tol", num(tol))
        .meta("tau", num(cfg.tau))
        .meta("seed", seed);
    let mut worst: f64 = 0.0;
    for ((id, n, _), block) in points.iter().zip(&blocks) {
        for (k, [m, c, t, s]) in block {
            let (fs, gs, _, _) = &pairs[*k];
            worst = worst.max(*s);
            table.row([fs.to_string(), gs.to_string(), id.clone(), n.to_string(), num(*m), num(*c), num(*t), num(bsq_core::conventions::BRACKET_SIGN), num(*s)]);
        }
    }
    let cases: usize = blocks.iter().map(Vec::len).sum();
    let mut report = Report::new();
    report.passed = worst <= tol;
    report.note(format!("{cases} cases, max rel_spread {} (tol {})", num(worst), num(tol)));
    report.file("bracket_check.csv", table.finish());
    Ok(report)
}
