use bsq_core::{Loop, SymplecticSurface};
#[cfg(test)]
use std::f64::consts::PI;
use rayon::prelude::*;

use crate::config::{ScanConfig, ScanSpec};
use crate::report::{num, Report, Table};
use crate::{numeric, CliError, Overrides};

const BISECTION_STEPS: usize = 200;

struct Scan {
    samples: Vec<[f64; 3]>,
    /// `(level, scale, action, bs_defect)`
    levels: Vec<(i64, f64, f64, f64)>,
}

fn run_scan(surface: &SymplecticSurface, spec: &ScanSpec) -> Result<Scan, CliError> {
    let base = spec.cycle.sample(spec.n)?;
    let what = format!("scan `{}`", spec.id);
    let action = |s: f64| -> Result<(f64, f64), CliError> {
        let l: Loop = numeric(&what, base.scaled_about_centroid(s))?;
        Ok((numeric(&what, l.action_integral(surface))?, numeric(&what, l.bs_defect(surface))?))
    };
    let scales: Vec<f64> = (0..spec.steps)
        .map(|i| spec.from + (spec.to - spec.from) * i as f64 / (spec.steps - 1) as f64)
        .collect();
    let mut samples = Vec::with_capacity(scales.len());
    for &s in &scales {
        let (a, d) = action(s)?;
        samples.push([s, a, d]);
    }
    let mut levels = Vec::new();
    if let Some(&[s0, a0, d0]) = samples.first() {
        if a0 != 0.0 && a0.fract() == 0.0 {
            levels.push((a0 as i64, s0, a0, d0));
        }
    }
    for w in samples.windows(2) {
        let ([s0, a0, _], [s1, a1, _]) = (w[0], w[1]);
        // levels k with a0 < k ≤ a1 (or a1 ≤ k < a0): each crossing counted once
        let ks: Vec<i64> = if a1 >= a0 {
            ((a0.floor() as i64 + 1)..=(a1.floor() as i64)).collect()
        } else {
            ((a1.ceil() as i64)..=(a0.ceil() as i64 - 1)).rev().collect()
        };
        for k in ks.into_iter().filter(|&k| k != 0) {
            let target = k as f64;
            let (mut l, mut r) = (s0, s1);
            let mut fl = a0 - target;
            let mut s = s1;
            for _ in 0..BISECTION_STEPS {
                s = 0.5 * (l + r);
                let fs = action(s)?.0 - target;
                if fs == 0.0 || (r - l).abs() <= 2.0 * f64::EPSILON * s.abs() {
                    break;
                }
                if (fs < 0.0) == (fl < 0.0) {
                    l = s;
                    fl = fs;
                } else {
                    r = s;
                }
            }
            let (a, d) = action(s)?;
            levels.push((k, s, a, d));
        }
    }
    Ok(Scan { samples, levels })
}

pub fn bs_scan(cfg: ScanConfig, o: Overrides) -> Result<Report, CliError> {
    let tol = o.tol.unwrap_or(cfg.tol);
    let seed = o.seed.unwrap_or(cfg.seed);
    let surface = cfg.surface.build()?;
    for s in &cfg.scans {
        if s.steps < 2 || !(s.from > 0.0 && s.to > 0.0) {
            return Err(CliError::Config(format!("scan `{}`: need steps ≥ 2 and positive scales", s.id)));
        }
    }
    let scans: Vec<Scan> = cfg.scans.par_iter().map(|s| run_scan(&surface, s)).collect::<Result<_, _>>()?;

    let mut samples = Table::new("bs-scan", &["id", "scale", "action", "bs_defect", "nearest_level"]).meta("seed", seed);
    let mut levels = Table::new("bs-scan", &["id", "level", "scale", "action", "bs_defect"]).meta("tol", num(tol)).meta("seed", seed);
    let mut report = Report::new();
    for (spec, scan) in cfg.scans.iter().zip(&scans) {
        for [s, a, d] in &scan.samples {
            samples.row([spec.id.clone(), num(*s), num(*a), num(*d), (a.round() as i64).to_string()]);
        }
        for (k, s, a, d) in &scan.levels {
            levels.row([spec.id.clone(), k.to_string(), num(*s), num(*a), num(*d)]);
            report.passed &= *d <= tol;
        }
        let found: Vec<String> = scan.levels.iter().map(|(k, s, _, _)| format!("{k}@{}", num(*s))).collect();
        report.note(format!("scan `{}`: levels [{}]", spec.id, found.join(", ")));
    }
    report.file("bs_scan.csv", samples.finish());
    report.file("bs_levels.csv", levels.finish());
    Ok(report)
}
