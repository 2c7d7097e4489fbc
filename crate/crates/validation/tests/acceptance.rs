//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use irp_core::discretization::CellPoly;
use irp_core::exact::solve_riemann;
use irp_core::harness::{
    convergence_table, riemann_run, viscous_limit_study, ConvergenceRow, ConvergenceStudy, ExperimentPreset, PresetId,
    StudyOptions,
};
use irp_core::limiter::{compute_theta, TestSet};
use irp_core::schemes::{
    certified_mu0, convex_decomposition_coefficients, fv1_step, run_irp_steps, CflMode, DtPolicy, SchemeConfig,
};
use irp_core::{InvariantRegion, PressureLaw, State};

const ORDER_TOL: f64 = 0.3;
const SLACK: f64 = 1e-12;
const DRIFT_TOL: f64 = 1e-11;
const MIN_STEPS: usize = 200;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

/// Collects conservation drifts of every run made by the suite.
#[derive(Default)]
struct Drift {
    worst: f64,
    runs: usize,
}

impl Drift {
    fn record(&mut self, d: f64) {
        self.worst = self.worst.max(d);
        self.runs += 1;
    }

    fn study(&mut self, s: &ConvergenceStudy) {
        for l in &s.levels {
            if l.steps > 0 {
                self.record(l.conservation_drift);
            }
        }
    }
}

fn finest(rows: &[ConvergenceRow]) -> (f64, f64) {
    let last = rows.last().expect("non-empty table");
    (last.linf_order.unwrap_or(f64::NAN), last.l1_order.unwrap_or(f64::NAN))
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn steep_cell(h: f64) -> (CellPoly, InvariantRegion) {
    let law = PressureLaw::p_system(1.0, 3.0, 1.0).unwrap();
    let sq = 2.0 * 3f64.sqrt();
    let w = |x: f64| {
        State::new(
            sq / (sq + (1.0 + h * h) * 2.0 * (x - 1.0)),
            (1.0 - h * h) * x + (h * h - 1.0) / 2.0,
        )
    };
    let (mid, quarter) = (w(0.5), w(0.25));
    let b = (1.0 - h * h) / 2.0;
    (
        CellPoly::from_modes(&[mid, (mid - quarter) * 2.0]),
        InvariantRegion::new(law, b, b),
    )
}

/// Printed decimals define the tolerance: half a unit in the last place.
fn matches_printed(value: f64, printed: &str) -> bool {
    let decimals = printed.split('.').nth(1).map_or(0, str::len) as i32;
    let target: f64 = printed.parse().unwrap();
    (value - target).abs() <= 0.5 * 10f64.powi(-decimals) + 1e-15
}

fn criterion_1() -> Outcome {
    let ends = TestSet::gauss_lobatto(2).unwrap();
    // (h, r_max, s_min, θ₁, θ₂) as printed
    let cases = [
        (0.5, "3.831", "-3.081", "0.224", "0.068"),
        (0.1, "1.310", "-0.320", "0.551", "0.012"),
        (0.01, "1.27823", "-0.27833", "0.562234", "0.00013"),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (h, r_max, s_min, t1, t2) in cases {
        let (poly, region) = steep_cell(h);
        let rep = compute_theta(&poly, poly.average(), &region, &ends, 0).unwrap();
        let ok = matches_printed(rep.theta1, t1) && matches_printed(rep.theta2, t2);
        let extrema = matches_printed(rep.r_max, r_max) && matches_printed(rep.s_min, s_min);
        pass &= ok;
        parts.push(format!(
            "h={h}: ({:.6}, {:.6e}) vs ({t1}, {t2}){}{}",
            rep.theta1,
            rep.theta2,
            if ok { "" } else { " MISMATCH" },
            if extrema { "" } else { " (extrema differ too)" }
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn criterion_2() -> Outcome {
    let tol = 1e-4;
    let mut pass = true;
    let mut parts = Vec::new();
    for (id, expect) in [
        (PresetId::Ex5ShockRarefaction, State::new(0.5, -0.9053)),
        (PresetId::Ex6RarefactionShock, State::new(1.2, 0.2118)),
    ] {
        let p = ExperimentPreset::new(id);
        let (l, r) = p.riemann.unwrap();
        let fan = solve_riemann(&p.law, l, r).unwrap();
        let ok = (fan.middle - expect).max_abs() <= tol;
        pass &= ok;
        parts.push(format!(
            "{}: ({:.6}, {:.6}) vs ({}, {})",
            id.name(),
            fan.middle.c1,
            fan.middle.c2,
            expect.c1,
            expect.c2
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let p = ExperimentPreset::new(PresetId::Ex1ProjAccuracy);
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, target, linf0, l10) in [(1, 2.0, 6.70e-4, 1.11e-4), (2, 3.0, 9.16e-6, 5.95e-6)] {
        let s = convergence_table(&p, &StudyOptions::new(k, 5, true)).unwrap();
        let (o_inf, o_1) = finest(&s.rows);
        let orders = within(o_inf, target, ORDER_TOL) && within(o_1, target, ORDER_TOL);
        let first = s.rows[0];
        let ratio = |a: f64, b: f64| (a / b).max(b / a);
        let (r_inf, r_1) = (ratio(first.linf_error, linf0), ratio(first.l1_error, l10));
        let magnitudes = r_inf <= 2.0 && r_1 <= 2.0;
        pass &= orders && magnitudes;
        parts.push(format!(
            "k={k}: orders ({o_inf:.2}, {o_1:.2}) {}; first row ({:.3e}, {:.3e}) vs ({linf0:.2e}, {l10:.2e}), factors ({r_inf:.1}, {r_1:.1}) {}",
            if orders { "ok" } else { "off" },
            first.linf_error,
            first.l1_error,
            if magnitudes { "ok" } else { "outside 2x" }
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn criterion_4(drift: &mut Drift) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (id, k, min_order) in [
        (PresetId::Ex2PSysAccuracy, 1, 1.9),
        (PresetId::Ex2PSysAccuracy, 2, 2.8),
        (PresetId::Ex3ViscAccuracy, 1, 1.9),
        (PresetId::Ex3ViscAccuracy, 2, 2.6),
    ] {
        let p = ExperimentPreset::new(id);
        let s = convergence_table(&p, &StudyOptions::new(k, 4, true)).unwrap();
        drift.study(&s);
        let (_, o_1) = finest(&s.rows);
        let ok = o_1 >= min_order;
        pass &= ok;
        parts.push(format!("{} k={k}: L1 order {o_1:.2} (need ≥ {min_order})", id.name()));
    }
    Outcome::new(pass, parts.join("; "))
}

fn certified_configs(law: PressureLaw, epsilon: f64) -> Vec<(String, SchemeConfig)> {
    let mut out = Vec::new();
    out.push((
        "first-order".to_string(),
        SchemeConfig::new(law, 0, CflMode::FirstOrder, 0.0),
    ));
    for k in 1..=2 {
        out.push((
            format!("convective k={k}"),
            SchemeConfig::new(law, k, CflMode::HighOrderConvective, 0.0),
        ));
    }
    for beta0 in [0.5, 2.0] {
        let mut c = SchemeConfig::new(law, 1, CflMode::ViscousSecond, epsilon);
        c.flux.beta0 = beta0;
        out.push((format!("viscous k=1 beta0={beta0}"), c));
    }
    for (beta0, beta1) in [(1.0, 0.125), (2.0, 0.25)] {
        let mut c = SchemeConfig::new(law, 2, CflMode::ViscousThird, epsilon);
        c.flux.beta0 = beta0;
        c.flux.beta1 = beta1;
        out.push((format!("viscous k=2 ({beta0},{beta1})"), c));
    }
    out
}

fn criterion_5(drift: &mut Drift) -> Outcome {
    let mut pass = true;
    let mut failures = Vec::new();
    let mut runs = 0;
    for (id, cells) in [
        (PresetId::Ex1ProjAccuracy, 64),
        (PresetId::Ex5ShockRarefaction, 128),
        (PresetId::Ex6RarefactionShock, 128),
    ] {
        let p = ExperimentPreset::new(id).with_window_cells(cells);
        let mesh = p.mesh(0).unwrap();
        for (name, cfg) in certified_configs(p.law, 0.01) {
            let field = p.project(mesh, cfg.degree).unwrap();
            runs += 1;
            match run_irp_steps(&field, &p.region, &cfg, MIN_STEPS) {
                Ok(res) => {
                    drift.record(res.conservation_drift());
                    let clean = res.total_violations == 0 && res.total_test_set_violations == 0;
                    let final_ok = res
                        .field
                        .cell_averages()
                        .iter()
                        .all(|w| p.region.contains_with_slack(*w, SLACK));
                    if !(clean && final_ok && res.steps() >= MIN_STEPS) {
                        pass = false;
                        failures.push(format!(
                            "{} {name}: {} avg / {} test-set violations",
                            id.name(),
                            res.total_violations,
                            res.total_test_set_violations
                        ));
                    }
                }
                Err(e) => {
                    pass = false;
                    failures.push(format!("{} {name}: {e}", id.name()));
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{runs} certified runs of {MIN_STEPS} steps, no violations")
    } else {
        failures.join("; ")
    };
    Outcome::new(pass, detail)
}

fn criterion_6() -> Outcome {
    let law = PressureLaw::p_system(1.0, 1.4, 1.0).unwrap();
    let eps = 0.01;
    let mut tuples = 0;
    let mut negatives = Vec::new();
    for i in 0..10 {
        let beta0 = 1.0 + 3.0 * i as f64 / 9.0;
        for j in 0..10 {
            let beta1 = 0.125 + 0.125 * j as f64 / 9.0;
            let gmax = (8.0 * beta1 - 1.0).min(1.0 / 3.0 - 1e-9);
            for l in 0..10 {
                let mut cfg = SchemeConfig::new(law, 2, CflMode::ViscousThird, eps);
                cfg.flux.beta0 = beta0;
                cfg.flux.beta1 = beta1;
                cfg.gamma_t = gmax * (-1.0 + 2.0 * l as f64 / 9.0);
                cfg.validate().unwrap();
                let mu = certified_mu0(&cfg).unwrap() * ((i + j + l) % 10) as f64 / 9.0;
                tuples += 1;
                if let Err(e) = convex_decomposition_coefficients(&cfg, mu) {
                    negatives.push(format!("({beta0:.3},{beta1:.4},{:.4}): {e}", cfg.gamma_t));
                }
            }
        }
    }
    for i in 0..100 {
        let beta0 = 0.5 + 3.5 * (i / 10) as f64 / 9.0;
        let gmin = (1.0 - 1.0 / beta0).abs();
        let mut cfg = SchemeConfig::new(law, 1, CflMode::ViscousSecond, eps);
        cfg.flux.beta0 = beta0;
        cfg.gamma_t = gmin + (1.0 - gmin) * (i % 10) as f64 / 9.0;
        if cfg.gamma_t == 0.0 {
            cfg.gamma_t = 1.0;
        }
        cfg.validate().unwrap();
        let mu = certified_mu0(&cfg).unwrap() * (i % 7) as f64 / 6.0;
        tuples += 1;
        if let Err(e) = convex_decomposition_coefficients(&cfg, mu) {
            negatives.push(format!("k=1 beta0={beta0:.3}: {e}"));
        }
    }
    let probes = [
        SchemeConfig::new(law, 1, CflMode::ViscousSecond, eps),
        SchemeConfig::new(law, 2, CflMode::ViscousThird, eps),
    ];
    let flagged = probes
        .iter()
        .filter(|c| convex_decomposition_coefficients(c, 1.5 * certified_mu0(c).unwrap()).is_err())
        .count();
    let pass = negatives.is_empty() && flagged == probes.len();
    let detail = if negatives.is_empty() {
        format!(
            "{tuples} tuples nonnegative; {flagged}/{} probes at 1.5 mu0 negative",
            probes.len()
        )
    } else {
        negatives.join("; ")
    };
    Outcome::new(pass, detail)
}

fn criterion_7(drift: &Drift) -> Outcome {
    Outcome::new(
        drift.worst <= DRIFT_TOL && drift.runs > 0,
        format!("worst relative drift {:.2e} over {} runs", drift.worst, drift.runs),
    )
}

fn criterion_8(drift: &mut Drift) -> Outcome {
    let p = ExperimentPreset::new(PresetId::Ex4ViscousLimit);
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, r) in [(1usize, 2.0), (2, 3.0)] {
        let s = viscous_limit_study(&p, &StudyOptions::new(k, 4, false), r).unwrap();
        drift.study(&s);
        let (o_inf, o_1) = finest(&s.rows);
        let target = (k + 1) as f64;
        let ok = within(o_inf, target, ORDER_TOL) && within(o_1, target, ORDER_TOL);
        pass &= ok;
        parts.push(format!("k={k} eps=dx^{r}: orders ({o_inf:.2}, {o_1:.2})"));
    }
    Outcome::new(pass, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let law = PressureLaw::p_system(1.0, 3.0, 1.0).unwrap();
    let cells = [State::new(1.0, 0.0), State::new(2.0, 0.0)];
    // F(v, u) = (-u, v^-3), sqrt(-p'(v)) = sqrt(3) v^-2
    let flux = |w: State| State::new(-w.c2, w.c1.powi(-3));
    let sigma = 3f64.sqrt();
    let dx = 0.5;
    let dt = dx / sigma;
    let out = fv1_step(&cells, &law, dt, dx).unwrap();
    let lam = dt / dx;
    let mut err = 0f64;
    for j in 0..2 {
        let (wm, wp) = (cells[(j + 1) % 2], cells[(j + 1) % 2]);
        let star = (wm + wp) * 0.5 - (flux(wp) - flux(wm)) * (0.5 / sigma);
        let comb = cells[j] * (1.0 - lam * sigma) + star * (lam * sigma);
        err = err.max((out[j] - comb).max_abs());
    }
    Outcome::new(err <= 1e-13, format!("max deviation {err:.2e}"))
}

fn criterion_10(drift: &mut Drift) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for id in [PresetId::Ex5ShockRarefaction, PresetId::Ex6RarefactionShock] {
        let p = ExperimentPreset::new(id);
        let cfg = p.scheme(1, 0.0, true, DtPolicy::PaperExperiment);
        let errs: Vec<f64> = [128, 256]
            .iter()
            .map(|&n| {
                let r = riemann_run(&p, n, &cfg, 4).unwrap();
                drift.record(r.run.conservation_drift());
                r.l1_error
            })
            .collect();
        let ok = errs[1] < errs[0];
        pass &= ok;
        parts.push(format!("{}: L1 {:.4e} -> {:.4e}", id.name(), errs[0], errs[1]));
    }
    Outcome::new(pass, parts.join("; "))
}

fn main() -> ExitCode {
    let mut drift = Drift::default();
    let mut results: Vec<(usize, Outcome, f64)> = Vec::new();
    let mut run = |n: usize, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        results.push((n, o, t.elapsed().as_secs_f64()));
    };
    run(1, &mut criterion_1);
    run(2, &mut criterion_2);
    run(3, &mut criterion_3);
    run(4, &mut || criterion_4(&mut drift));
    run(5, &mut || criterion_5(&mut drift));
    run(6, &mut criterion_6);
    run(8, &mut || criterion_8(&mut drift));
    run(9, &mut criterion_9);
    run(10, &mut || criterion_10(&mut drift));
    run(7, &mut || criterion_7(&drift));
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (n, o, secs) in &results {
        println!(
            "criterion {n:>2}: {} - {} [{secs:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", results.len());
        ExitCode::FAILURE
    }
}
