use bsq_core::dynamics::{flow_classical, flow_moduli};
use bsq_core::{SymplecticSurface, Vec2};
use rayon::prelude::*;

use super::check_id;
use crate::config::{field, moduli_point, observable, ClassicalFlowSpec, FlowConfig, ModuliFlowSpec};
use crate::report::{num, Report, Table};
use crate::{numeric, CliError, Overrides};

struct Run {
    kind: &'static str,
    id: String,
    steps: usize,
    drift: f64,
    files: Vec<(String, String)>,
}

fn keep(i: usize, last: usize, every: usize) -> bool {
    i.is_multiple_of(every.max(1)) || i == last
}

fn classical(surface: &SymplecticSurface, spec: &ClassicalFlowSpec, tol: Option<f64>) -> Result<Run, CliError> {
    let f = field(&spec.f)?;
    let p0 = Vec2::new(spec.p0[0], spec.p0[1]);
    let tr = numeric(&format!("classical flow `{}`", spec.id), flow_classical(surface, &f, p0, spec.t, spec.h))?;
    let e0 = f.eval(p0);
    let mut table = Table::new("flow", &["t", "x", "y", "f", "energy_drift"]).meta("flow", "classical").meta("id", &spec.id).meta("f", &spec.f);
    if let Some(tol) = tol {
        table = table.meta("tol", num(tol));
    }
    let last = tr.points.len() - 1;
    for (i, (t, p)) in tr.times.iter().zip(&tr.points).enumerate() {
        if keep(i, last, spec.sample_every) {
            let e = f.eval(*p);
            table.row([num(*t), num(p.x), num(p.y), num(e), num((e - e0).abs())]);
        }
    }
    Ok(Run {
        kind: "classical",
        id: spec.id.clone(),
        steps: last,
        drift: tr.energy_drift(&f),
        files: vec![(format!("flow_classical_{}.csv", spec.id), table.finish())],
    })
}

fn moduli(surface: &SymplecticSurface, spec: &ModuliFlowSpec, tol: Option<f64>) -> Result<Run, CliError> {
    let f = observable(&spec.f, spec.tau)?;
    let p0 = moduli_point(surface, &spec.cycle, &spec.theta, spec.n)?;
    let tr = numeric(&format!("moduli flow `{}`", spec.id), flow_moduli(surface, &f, &p0, spec.t, spec.h, spec.snapshot_every))?;
    let mut table = Table::new("flow", &["t", "F_f", "volume_defect", "bs_defect", "loop_checksum"])
        .meta("flow", "moduli")
        .meta("id", &spec.id)
        .meta("f", &spec.f)
        .meta("tau", num(spec.tau))
        .meta("N", spec.n);
    if let Some(tol) = tol {
        table = table.meta("tol", num(tol));
    }
    let f0 = tr.samples[0].value;
    let last = tr.samples.len() - 1;
    let mut drift: f64 = 0.0;
    for (i, s) in tr.samples.iter().enumerate() {
        drift = drift.max((s.value - f0).abs());
        if keep(i, last, spec.sample_every) {
            table.row([num(s.t), num(s.value), num(s.volume_defect), num(s.bs_defect), num(s.loop_checksum)]);
        }
    }
    let mut files = vec![(format!("flow_moduli_{}.csv", spec.id), table.finish())];
    for (k, (t, p)) in tr.snapshots.iter().enumerate() {
        let point: serde_json::Value = serde_json::from_str(&p.to_json()).expect("core emits valid JSON");
        let snap = serde_json::json!({ "t": t, "point": point });
        let text = serde_json::to_string(&snap).expect("JSON value serializes") + "\n";
        files.push((format!("flow_moduli_{}_snapshot_{k:04}.json", spec.id), text));
    }
    Ok(Run { kind: "moduli", id: spec.id.clone(), steps: last, drift, files })
}

pub fn flow(cfg: FlowConfig, o: Overrides) -> Result<Report, CliError> {
    let tol = o.tol.or(cfg.tol);
    let seed = o.seed.unwrap_or(cfg.seed);
    let surface = cfg.surface.build()?;
    for id in cfg.classical.iter().map(|s| &s.id).chain(cfg.moduli.iter().map(|s| &s.id)) {
        check_id(id)?;
    }
    let mut runs: Vec<Run> = cfg.classical.par_iter().map(|s| classical(&surface, s, tol)).collect::<Result<_, _>>()?;
    runs.extend(cfg.moduli.par_iter().map(|s| moduli(&surface, s, tol)).collect::<Result<Vec<_>, _>>()?);

    let mut summary = Table::new("flow", &["kind", "id", "steps", "drift"]).meta("seed", seed);
    if let Some(tol) = tol {
        summary = summary.meta("tol", num(tol));
    }
    let mut report = Report::new();
    for run in runs {
        summary.row([run.kind.to_string(), run.id.clone(), run.steps.to_string(), num(run.drift)]);
        report.note(format!("{} `{}`: {} steps, conserved-quantity drift {}", run.kind, run.id, run.steps, num(run.drift)));
        if tol.is_some_and(|t| run.drift > t) {
            report.passed = false;
        }
        for (name, text) in run.files {
            report.file(name, text);
        }
    }
    report.file("flow_summary.csv", summary.finish());
    Ok(report)
}
