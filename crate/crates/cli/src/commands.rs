use std::fmt::Write as _;

use anyhow::{Context, Result};
use irp_core::discretization::DgField;
use irp_core::exact::{solve_riemann, Wave};
use irp_core::harness::{
    convergence_table, plot_data_text, riemann_run, table_csv, violation_scan, ConvergenceStudy, ExperimentPreset,
    PresetId, StudyOptions, ViolationScan,
};
use irp_core::limiter::{limit_field, LimiterReport};
use irp_core::schemes::{run_irp, DtPolicy, RunResult, StepLog};
use irp_core::{Error, SystemKind};

use crate::output::Output;
use crate::spec::{Command, RunSpec};

/// What a command found; a certified violation makes the process exit
/// nonzero.
#[derive(Debug, Default)]
pub struct Outcome {
    pub violations: Vec<String>,
}

fn label(limiter: bool) -> &'static str {
    if limiter {
        "limiter_on"
    } else {
        "limiter_off"
    }
}

fn g(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn execute(spec: &RunSpec, out: &mut Output) -> Result<Outcome> {
    match spec.command {
        Command::Run => run(spec, out),
        Command::Table => table(spec, out),
        Command::Riemann => riemann(spec, out),
        Command::Scan => scan(spec, out),
        Command::Theta => theta(spec, out),
    }
}

/// Strict runs abort on the first violation; report it instead of failing.
fn certified<T>(result: irp_core::Result<T>, what: String, outcome: &mut Outcome) -> Result<Option<T>> {
    match result {
        Ok(v) => Ok(Some(v)),
        Err(e @ Error::AverageOutsideInterior { .. }) => {
            outcome.violations.push(format!("{what}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e).context(what),
    }
}

fn run_log(run: &RunResult) -> String {
    let mut s = format!("{}\n", StepLog::CSV_HEADER);
    for l in &run.log {
        let _ = writeln!(s, "{}", l.csv_row());
    }
    s
}

fn profile_text(field: &DgField, samples: usize) -> String {
    let mut s = String::new();
    for j in 0..field.n_cells() {
        for i in 0..samples {
            let xi = -1.0 + (2 * i + 1) as f64 / samples as f64;
            let w = field.cells[j].evaluate(xi);
            let _ = writeln!(s, "{} {} {}", g(field.mesh.x_of(j, xi)), g(w.c1), g(w.c2));
        }
    }
    s
}

fn run_summary(run: &RunResult) -> String {
    let activations: usize = run.log.iter().map(|l| l.activations).sum();
    format!(
        "steps {}, t {}, limiter activations {}, average violations {}, test-set violations {}, conservation drift {}",
        run.steps(),
        g(run.t),
        activations,
        run.total_violations,
        run.total_test_set_violations,
        g(run.conservation_drift())
    )
}

fn check_certified(spec: &RunSpec, run: &RunResult, what: &str, outcome: &mut Outcome) {
    if spec.dt_policy == DtPolicy::TheoremBound && run.total_violations + run.total_test_set_violations > 0 {
        outcome.violations.push(format!(
            "{what}: {} average and {} test-set violations",
            run.total_violations, run.total_test_set_violations
        ));
    }
}

fn run(spec: &RunSpec, out: &mut Output) -> Result<Outcome> {
    let preset = spec.preset()?;
    let mut outcome = Outcome::default();
    let exact = preset.riemann.is_some() && preset.law.kind == SystemKind::PSystem;
    for &limiter in spec.limiter.configurations() {
        let cfg = spec.scheme(preset.law, limiter);
        let tag = label(limiter);
        let what = format!("run {tag}");
        let run = if exact {
            certified(
                riemann_run(&preset, spec.cells, &cfg, spec.samples),
                what.clone(),
                &mut outcome,
            )?
            .map(|r| {
                println!("{tag}: L1 distance to exact solution {}", g(r.l1_error));
                (r.run, Some(r.plot))
            })
        } else {
            certified(preset.run(preset.mesh(0)?, &cfg), what.clone(), &mut outcome)?.map(|r| (r, None))
        };
        let Some((run, plot)) = run else { continue };
        println!("{tag}: {}", run_summary(&run));
        check_certified(spec, &run, &what, &mut outcome);
        out.write(&format!("run_log_{tag}.csv"), &run_log(&run))?;
        out.write(&format!("field_{tag}.txt"), &run.field.to_text())?;
        match plot {
            Some(rows) => out.write(&format!("plot_{tag}.dat"), &plot_data_text(&rows))?,
            None => out.write(&format!("profile_{tag}.dat"), &profile_text(&run.field, spec.samples))?,
        }
    }
    Ok(outcome)
}

fn levels_csv(study: &ConvergenceStudy) -> String {
    let mut s = String::from("cells,steps,limiter_activations,violations,test_set_violations,conservation_drift\n");
    for l in &study.levels {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            l.cells,
            l.steps,
            l.limiter_activations,
            l.violations,
            l.test_set_violations,
            g(l.conservation_drift)
        );
    }
    s
}

fn table(spec: &RunSpec, out: &mut Output) -> Result<Outcome> {
    let preset = spec.preset()?;
    let mut outcome = Outcome::default();
    // The viscous-limit study picks ε = Δx^(k+1) per level, and with it the mode.
    let natural = preset.id == PresetId::Ex4ViscousLimit;
    for &limiter in spec.limiter.configurations() {
        let opts = StudyOptions {
            dt_policy: spec.dt_policy,
            epsilon: Some(spec.epsilon),
            cfl_mode: (!natural).then_some(spec.cfl_mode),
            beta0: spec.beta0,
            beta1: spec.beta1,
            gamma_t: (!natural).then_some(spec.gamma_t),
            ..StudyOptions::new(spec.degree, spec.levels, limiter)
        };
        let tag = label(limiter);
        let what = format!("table {tag}");
        let Some(study) = certified(convergence_table(&preset, &opts), what.clone(), &mut outcome)? else {
            continue;
        };
        let csv = table_csv(&study.rows);
        println!("{} P{} {tag}\n{csv}", preset.id.name(), spec.degree);
        out.write(&format!("table_{tag}.csv"), &csv)?;
        out.write(&format!("table_{tag}_v.csv"), &table_csv(&study.component_rows[0]))?;
        out.write(&format!("table_{tag}_u.csv"), &table_csv(&study.component_rows[1]))?;
        out.write(&format!("levels_{tag}.csv"), &levels_csv(&study))?;
        let violations: usize = study.levels.iter().map(|l| l.violations + l.test_set_violations).sum();
        if spec.dt_policy == DtPolicy::TheoremBound && violations > 0 {
            outcome.violations.push(format!("{what}: {violations} violations"));
        }
    }
    Ok(outcome)
}

fn wave_text(w: &Wave) -> String {
    match *w {
        Wave::Shock { speed } => format!("shock, speed {}", g(speed)),
        Wave::Rarefaction { head, tail } => format!("rarefaction, speeds {} .. {}", g(head), g(tail)),
    }
}

fn riemann(spec: &RunSpec, out: &mut Output) -> Result<Outcome> {
    let (left, right) = (spec.left.context("--left")?, spec.right.context("--right")?);
    let fan = solve_riemann(&spec.law()?, left, right).context("riemann")?;
    println!("middle state v = {}, u = {}", g(fan.middle.c1), g(fan.middle.c2));
    println!("back wave: {}", wave_text(&fan.back));
    println!("front wave: {}", wave_text(&fan.front));
    let mut s = String::from("x,v,u\n");
    for i in 0..spec.samples {
        let x = -1.0 + 2.0 * (i as f64 + 0.5) / spec.samples as f64;
        let w = fan.sample_at(x, spec.t, 0.0);
        let _ = writeln!(s, "{},{},{}", g(x), g(w.c1), g(w.c2));
    }
    out.write("riemann.csv", &s)?;
    Ok(Outcome::default())
}

fn final_field(
    spec: &RunSpec,
    preset: &ExperimentPreset,
    limiter: bool,
    outcome: &mut Outcome,
) -> Result<Option<DgField>> {
    let cfg = spec.scheme(preset.law, limiter);
    let field = preset.project(preset.mesh(0)?, spec.degree)?;
    if spec.t_final > 0.0 {
        let what = format!("scan {}", label(limiter));
        let run = certified(
            run_irp(&field, &preset.region, &cfg, spec.t_final),
            what.clone(),
            outcome,
        )?;
        if let Some(r) = &run {
            check_certified(spec, r, &what, outcome);
        }
        return Ok(run.map(|r| r.field));
    }
    if limiter {
        let what = format!("limit {}", label(limiter));
        return Ok(certified(limit_field(&field, &preset.region, &cfg.test_set()?), what, outcome)?.map(|(f, _)| f));
    }
    Ok(Some(field))
}

fn scan(spec: &RunSpec, out: &mut Output) -> Result<Outcome> {
    let preset = spec.preset()?;
    let mut outcome = Outcome::default();
    for &limiter in spec.limiter.configurations() {
        let Some(field) = final_field(spec, &preset, limiter, &mut outcome)? else {
            continue;
        };
        let test_set = spec.scheme(preset.law, limiter).test_set()?;
        let report: ViolationScan = violation_scan(&field, &preset.region, &test_set, spec.samples);
        let tag = label(limiter);
        println!(
            "{tag}: test-set violations {}, off-test-set violations {}",
            report.test_set_violations, report.off_test_set_violations
        );
        out.write(&format!("scan_{tag}.csv"), &report.csv())?;
        if limiter && report.test_set_violations > 0 {
            outcome.violations.push(format!(
                "scan {tag}: {} test-set violations",
                report.test_set_violations
            ));
        }
    }
    Ok(outcome)
}

fn theta(spec: &RunSpec, out: &mut Output) -> Result<Outcome> {
    let preset = spec.preset()?;
    let mut outcome = Outcome::default();
    let cfg = spec.scheme(preset.law, true);
    let field = preset.project(preset.mesh(0)?, spec.degree)?;
    let Some((_, reports)) = certified(
        limit_field(&field, &preset.region, &cfg.test_set()?),
        "theta".into(),
        &mut outcome,
    )?
    else {
        return Ok(outcome);
    };
    let mut s = format!("{}\n", LimiterReport::CSV_HEADER);
    for r in &reports {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    let active = reports.iter().filter(|r| r.activated).count();
    let min = reports.iter().map(|r| r.theta).fold(1.0, f64::min);
    println!(
        "cells {}, limiter activations {active}, min theta {}",
        reports.len(),
        g(min)
    );
    out.write("theta.csv", &s)?;
    Ok(outcome)
}
