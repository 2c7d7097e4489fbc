//! Experiment presets, error norms, convergence tables and invariant scans.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::discretization::{gauss_legendre, project_initial, DgField, Mesh};
use crate::error::{Error, Result};
use crate::exact::{solve_riemann, WaveFan};
use crate::limiter::{limit_field, TestSet};
use crate::model::{InvariantRegion, PressureLaw, State, SystemKind, MEMBERSHIP_SLACK};
use crate::schemes::{run_irp, CflMode, DtPolicy, RunResult, SchemeConfig};

pub const GAMMA: f64 = 1.4;

/// Ratio between the reference mesh and the finest study mesh.
pub const REFERENCE_REFINEMENT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetId {
    Ex1ProjAccuracy,
    Ex2PSysAccuracy,
    Ex3ViscAccuracy,
    Ex4ViscousLimit,
    Ex5ShockRarefaction,
    Ex6RarefactionShock,
}

impl PresetId {
    pub const ALL: [PresetId; 6] = [
        PresetId::Ex1ProjAccuracy,
        PresetId::Ex2PSysAccuracy,
        PresetId::Ex3ViscAccuracy,
        PresetId::Ex4ViscousLimit,
        PresetId::Ex5ShockRarefaction,
        PresetId::Ex6RarefactionShock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetId::Ex1ProjAccuracy => "ex1",
            PresetId::Ex2PSysAccuracy => "ex2",
            PresetId::Ex3ViscAccuracy => "ex3",
            PresetId::Ex4ViscousLimit => "ex4",
            PresetId::Ex5ShockRarefaction => "ex5",
            PresetId::Ex6RarefactionShock => "ex6",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s.to_ascii_lowercase())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentPreset {
    pub id: PresetId,
    pub law: PressureLaw,
    pub region: InvariantRegion,
    pub x_min: f64,
    pub x_max: f64,
    pub base_cells: usize,
    pub t_final: f64,
    pub epsilon: f64,
    /// Interval on which errors are measured.
    pub window: Option<(f64, f64)>,
    /// Left and right Riemann states, jump at `x = 0`.
    pub riemann: Option<(State, State)>,
}

impl ExperimentPreset {
    pub fn new(id: PresetId) -> Self {
        let smooth = |epsilon: f64| {
            let law = PressureLaw::p_system(1.0, GAMMA, 1.0).expect("valid law");
            ExperimentPreset {
                id,
                law,
                region: InvariantRegion::new(law, 1.0, 1.0),
                x_min: 0.0,
                x_max: 2.0 * PI,
                base_cells: 32,
                t_final: 0.1,
                epsilon,
                window: None,
                riemann: None,
            }
        };
        let riemann = |left: State, right: State| {
            let region = InvariantRegion::from_initial_samples(
                PressureLaw::p_system(1.0, GAMMA, 1.0).expect("valid law"),
                &[left, right],
            )
            .expect("physical Riemann data");
            // Padded periodic domain; waves from the wrap-around jump do not
            // reach [-1, 1] before the final time.
            ExperimentPreset {
                id,
                law: region.law,
                region,
                x_min: -2.0,
                x_max: 2.0,
                base_cells: 256,
                t_final: 0.1,
                epsilon: 0.0,
                window: Some((-1.0, 1.0)),
                riemann: Some((left, right)),
            }
        };
        match id {
            PresetId::Ex1ProjAccuracy | PresetId::Ex2PSysAccuracy | PresetId::Ex4ViscousLimit => smooth(0.0),
            PresetId::Ex3ViscAccuracy => smooth(0.01),
            PresetId::Ex5ShockRarefaction => riemann(State::new(1.0, 0.0), State::new(0.25, 0.1053)),
            PresetId::Ex6RarefactionShock => riemann(State::new(1.0, 0.0), State::new(2.0, -0.3509)),
        }
    }

    /// Same experiment under another law; the region is rebuilt from the
    /// initial data.
    pub fn with_law(mut self, law: PressureLaw) -> Result<Self> {
        let samples: Vec<State> = match self.riemann {
            Some((l, r)) => vec![l, r],
            None => (0..=4096)
                .map(|i| self.initial(self.x_min + (self.x_max - self.x_min) * i as f64 / 4096.0))
                .collect(),
        };
        self.region = if self.riemann.is_none() && law.kind == SystemKind::PSystem {
            // min v = 1 at x = π/2, where u - g = u + g = 1.
            InvariantRegion::new(law.with_m_ref(1.0)?, 1.0, 1.0)
        } else {
            InvariantRegion::from_initial_samples(law, &samples)?
        };
        self.law = self.region.law;
        Ok(self)
    }

    /// Preset with `cells` cells on the comparison window (or the whole
    /// domain when there is none).
    pub fn with_window_cells(mut self, cells: usize) -> Self {
        self.base_cells = match self.window {
            Some((a, b)) => (cells as f64 * (self.x_max - self.x_min) / (b - a)).round() as usize,
            None => cells,
        };
        self
    }

    pub fn initial(&self, x: f64) -> State {
        match self.riemann {
            Some((l, r)) => {
                if x < 0.0 {
                    l
                } else {
                    r
                }
            }
            None => State::new(2.0 - x.sin(), 1.0),
        }
    }

    pub fn mesh(&self, level: usize) -> Result<Mesh> {
        Mesh::new(self.x_min, self.x_max, self.base_cells << level)
    }

    pub fn project(&self, mesh: Mesh, degree: usize) -> Result<DgField> {
        project_initial(mesh, degree, |x| self.initial(x))
    }

    pub fn exact_fan(&self) -> Option<Result<WaveFan>> {
        self.riemann.map(|(l, r)| solve_riemann(&self.law, l, r))
    }

    /// Scheme used by the numerical experiments: natural mode for the degree,
    /// `(β₀, β₁) = (2, 1/4)` and the experiment time steps.
    pub fn scheme(&self, degree: usize, epsilon: f64, limiter: bool, dt_policy: DtPolicy) -> SchemeConfig {
        let mut cfg = SchemeConfig::new(self.law, degree, SchemeConfig::default_mode(degree, epsilon), epsilon);
        cfg.dt_policy = dt_policy;
        cfg.limiter_enabled = limiter;
        cfg
    }

    pub fn run(&self, mesh: Mesh, config: &SchemeConfig) -> Result<RunResult> {
        let field = self.project(mesh, config.degree)?;
        run_irp(&field, &self.region, config, self.t_final)
    }
}

/// Test set used by the limiter for a given degree in the inviscid experiments.
pub fn default_test_set(degree: usize) -> Result<TestSet> {
    match degree {
        2 => TestSet::interior(0.0),
        _ => TestSet::gauss_lobatto(2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorms {
    pub linf: f64,
    pub l1: f64,
    pub linf_components: [f64; 2],
    pub l1_components: [f64; 2],
}

/// Errors against `reference`. Pointwise errors are Euclidean over the two
/// components; L¹ is normalized by the measured length and uses composite
/// Gauss quadrature with `k + 3` points, L∞ samples `2k + 3` equispaced points
/// per cell. With a window only cells whose centre lies inside are measured.
pub fn error_norms<F>(numeric: &DgField, reference: F, window: Option<(f64, f64)>) -> Result<ErrorNorms>
where
    F: Fn(f64) -> State + Sync,
{
    let mesh = numeric.mesh;
    let k = numeric.degree;
    let q = gauss_legendre(k + 3)?;
    let m = 2 * k + 3;
    let inside = |j: usize| match window {
        Some((a, b)) => (a..=b).contains(&mesh.center(j)),
        None => true,
    };
    let cells: Vec<usize> = (0..mesh.n_cells).filter(|&j| inside(j)).collect();
    if cells.is_empty() {
        return Err(Error::InvalidConfig("error window contains no cells".into()));
    }
    let dx = mesh.dx();
    let per_cell: Vec<ErrorNorms> = cells
        .par_iter()
        .map(|&j| {
            let mut e = ErrorNorms::default();
            for (&xi, &w) in q.nodes.iter().zip(&q.weights) {
                let d = numeric.cells[j].evaluate(xi) - reference(mesh.x_of(j, xi));
                let h = 0.5 * w * dx;
                e.l1 += h * d.norm();
                e.l1_components[0] += h * d.c1.abs();
                e.l1_components[1] += h * d.c2.abs();
            }
            for i in 0..m {
                let xi = -1.0 + 2.0 * i as f64 / (m - 1) as f64;
                let d = numeric.cells[j].evaluate(xi) - reference(mesh.x_of(j, xi));
                e.linf = e.linf.max(d.norm());
                e.linf_components[0] = e.linf_components[0].max(d.c1.abs());
                e.linf_components[1] = e.linf_components[1].max(d.c2.abs());
            }
            e
        })
        .collect();
    let length = dx * cells.len() as f64;
    let mut out = ErrorNorms::default();
    for e in per_cell {
        out.linf = out.linf.max(e.linf);
        out.l1 += e.l1 / length;
        for c in 0..2 {
            out.linf_components[c] = out.linf_components[c].max(e.linf_components[c]);
            out.l1_components[c] += e.l1_components[c] / length;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub dx: f64,
    pub linf_error: f64,
    pub linf_order: Option<f64>,
    pub l1_error: f64,
    pub l1_order: Option<f64>,
}

impl ConvergenceRow {
    pub const CSV_HEADER: &'static str = "dx,linf_error,linf_order,l1_error,l1_order";

    pub fn csv_row(&self) -> String {
        let order = |o: Option<f64>| o.map(|v| format!("{v:.11e}")).unwrap_or_default();
        format!(
            "{:.11e},{:.11e},{},{:.11e},{}",
            self.dx,
            self.linf_error,
            order(self.linf_order),
            self.l1_error,
            order(self.l1_order)
        )
    }
}

/// Rows with `order(i) = log(e(i-1)/e(i)) / log(dx(i-1)/dx(i))`.
pub fn convergence_rows(errors: &[(f64, f64, f64)]) -> Vec<ConvergenceRow> {
    let order = |prev: f64, cur: f64, r: f64| (prev / cur).ln() / r;
    errors
        .iter()
        .enumerate()
        .map(|(i, &(dx, linf, l1))| {
            let (linf_order, l1_order) = if i == 0 {
                (None, None)
            } else {
                let (pdx, plinf, pl1) = errors[i - 1];
                let r = (pdx / dx).ln();
                (Some(order(plinf, linf, r)), Some(order(pl1, l1, r)))
            };
            ConvergenceRow {
                dx,
                linf_error: linf,
                linf_order,
                l1_error: l1,
                l1_order,
            }
        })
        .collect()
}

pub fn table_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", ConvergenceRow::CSV_HEADER);
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Per-level bookkeeping of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub cells: usize,
    pub norms: ErrorNorms,
    pub steps: usize,
    pub limiter_activations: usize,
    pub violations: usize,
    pub test_set_violations: usize,
    pub conservation_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub preset: PresetId,
    pub degree: usize,
    pub limiter: bool,
    /// Combined norm, then the `c1` and `c2` components.
    pub rows: Vec<ConvergenceRow>,
    pub component_rows: [Vec<ConvergenceRow>; 2],
    pub levels: Vec<LevelSummary>,
}

impl ConvergenceStudy {
    fn from_levels(preset: PresetId, degree: usize, limiter: bool, mesh0: Mesh, levels: Vec<LevelSummary>) -> Self {
        let dx = |i: usize| mesh0.length() / levels[i].cells as f64;
        let collect = |f: &dyn Fn(&ErrorNorms) -> (f64, f64)| {
            convergence_rows(
                &(0..levels.len())
                    .map(|i| {
                        let (a, b) = f(&levels[i].norms);
                        (dx(i), a, b)
                    })
                    .collect::<Vec<_>>(),
            )
        };
        let rows = collect(&|n| (n.linf, n.l1));
        let component_rows = [
            collect(&|n| (n.linf_components[0], n.l1_components[0])),
            collect(&|n| (n.linf_components[1], n.l1_components[1])),
        ];
        Self {
            preset,
            degree,
            limiter,
            rows,
            component_rows,
            levels,
        }
    }

    pub fn total_violations(&self) -> usize {
        self.levels.iter().map(|l| l.violations + l.test_set_violations).sum()
    }

    pub fn max_conservation_drift(&self) -> f64 {
        self.levels.iter().map(|l| l.conservation_drift).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions {
    pub degree: usize,
    pub levels: usize,
    pub limiter: bool,
    pub dt_policy: DtPolicy,
    /// Overrides the preset viscosity.
    pub epsilon: Option<f64>,
    /// Overrides the natural mode for the degree.
    pub cfl_mode: Option<CflMode>,
    pub beta0: f64,
    pub beta1: f64,
    /// Overrides the mode default.
    pub gamma_t: Option<f64>,
}

impl StudyOptions {
    pub fn new(degree: usize, levels: usize, limiter: bool) -> Self {
        Self {
            degree,
            levels,
            limiter,
            dt_policy: DtPolicy::PaperExperiment,
            epsilon: None,
            cfl_mode: None,
            beta0: 2.0,
            beta1: 0.25,
            gamma_t: None,
        }
    }

    /// Scheme for one level at viscosity `epsilon`.
    pub fn scheme(&self, preset: &ExperimentPreset, epsilon: f64) -> SchemeConfig {
        let mode = self
            .cfl_mode
            .unwrap_or_else(|| SchemeConfig::default_mode(self.degree, epsilon));
        let mut cfg = SchemeConfig::new(preset.law, self.degree, mode, epsilon);
        cfg.flux.beta0 = self.beta0;
        cfg.flux.beta1 = self.beta1;
        if let Some(g) = self.gamma_t {
            cfg.gamma_t = g;
        }
        cfg.dt_policy = self.dt_policy;
        cfg.limiter_enabled = self.limiter;
        cfg
    }
}

fn level_summary(cells: usize, norms: ErrorNorms, run: Option<&RunResult>) -> LevelSummary {
    LevelSummary {
        cells,
        norms,
        steps: run.map_or(0, RunResult::steps),
        limiter_activations: run.map_or(0, |r| r.log.iter().map(|l| l.activations).sum()),
        violations: run.map_or(0, |r| r.total_violations),
        test_set_violations: run.map_or(0, |r| r.total_test_set_violations),
        conservation_drift: run.map_or(0.0, RunResult::conservation_drift),
    }
}

/// Projection accuracy with or without the limiter.
fn projection_study(preset: &ExperimentPreset, opts: &StudyOptions) -> Result<ConvergenceStudy> {
    let test_set = default_test_set(opts.degree)?;
    let levels = (0..opts.levels)
        .into_par_iter()
        .map(|level| {
            let mesh = preset.mesh(level)?;
            let mut field = preset.project(mesh, opts.degree)?;
            let mut activations = 0;
            if opts.limiter {
                let (lim, reports) = limit_field(&field, &preset.region, &test_set)?;
                activations = reports.iter().filter(|r| r.activated).count();
                field = lim;
            }
            let norms = error_norms(&field, |x| preset.initial(x), preset.window)?;
            let mut s = level_summary(mesh.n_cells, norms, None);
            s.limiter_activations = activations;
            s.test_set_violations = crate::limiter::test_set_violations(&field, &preset.region, &test_set);
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceStudy::from_levels(
        preset.id,
        opts.degree,
        opts.limiter,
        preset.mesh(0)?,
        levels,
    ))
}

/// Fine-mesh `k = 2` solution used as the reference for time-dependent
/// studies.
pub fn reference_solution(
    preset: &ExperimentPreset,
    finest_level: usize,
    epsilon: f64,
    limiter: bool,
    dt_policy: DtPolicy,
) -> Result<DgField> {
    let cells = (preset.base_cells << finest_level) * REFERENCE_REFINEMENT;
    let mesh = Mesh::new(preset.x_min, preset.x_max, cells)?;
    let cfg = preset.scheme(2, epsilon, limiter, dt_policy);
    Ok(preset.run(mesh, &cfg)?.field)
}

fn solver_study(
    preset: &ExperimentPreset,
    opts: &StudyOptions,
    epsilon_of: impl Fn(f64) -> f64 + Sync,
    reference_epsilon: f64,
) -> Result<ConvergenceStudy> {
    if opts.levels == 0 {
        return Err(Error::InvalidConfig("levels must be ≥ 1".into()));
    }
    let reference = reference_solution(preset, opts.levels - 1, reference_epsilon, opts.limiter, opts.dt_policy)?;
    let levels = (0..opts.levels)
        .into_par_iter()
        .map(|level| {
            let mesh = preset.mesh(level)?;
            let cfg = opts.scheme(preset, epsilon_of(mesh.dx()));
            cfg.validate()?;
            let run = preset.run(mesh, &cfg)?;
            let norms = error_norms(&run.field, |x| reference.evaluate_at(x), preset.window)?;
            Ok(level_summary(mesh.n_cells, norms, Some(&run)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceStudy::from_levels(
        preset.id,
        opts.degree,
        opts.limiter,
        preset.mesh(0)?,
        levels,
    ))
}

/// Convergence table at `h, h/2, …`. The projection preset measures
/// against the initial data; solver presets use a fine-mesh reference.
pub fn convergence_table(preset: &ExperimentPreset, opts: &StudyOptions) -> Result<ConvergenceStudy> {
    match preset.id {
        PresetId::Ex1ProjAccuracy => projection_study(preset, opts),
        PresetId::Ex4ViscousLimit => viscous_limit_study(preset, opts, (opts.degree + 1) as f64),
        _ => {
            let eps = opts.epsilon.unwrap_or(preset.epsilon);
            solver_study(preset, opts, |_| eps, eps)
        }
    }
}

/// `ε = Δx^r` on each level, measured against the inviscid reference.
pub fn viscous_limit_study(
    preset: &ExperimentPreset,
    opts: &StudyOptions,
    r_exponent: f64,
) -> Result<ConvergenceStudy> {
    if !(r_exponent >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "r exponent must be ≥ 0 (got {r_exponent})"
        )));
    }
    solver_study(preset, opts, |dx| dx.powf(r_exponent), 0.0)
}

/// Dense membership scan of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationScan {
    pub test_set_violations: usize,
    pub off_test_set_violations: usize,
    /// Per cell: smallest `r0 - r` and `s - s0` over all sampled points
    /// (`-inf` where a value is non-physical).
    pub margins: Vec<(f64, f64)>,
}

impl ViolationScan {
    pub const CSV_HEADER: &'static str = "cell_index,min_r_margin,min_s_margin";

    pub fn csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", Self::CSV_HEADER);
        for (j, (a, b)) in self.margins.iter().enumerate() {
            let _ = writeln!(out, "{j},{a:.11e},{b:.11e}");
        }
        out
    }
}

/// Samples `samples_per_cell` equispaced points plus the test set in every
/// cell.
pub fn violation_scan(
    field: &DgField,
    region: &InvariantRegion,
    test_set: &TestSet,
    samples_per_cell: usize,
) -> ViolationScan {
    let m = samples_per_cell.max(2);
    let per_cell: Vec<(usize, usize, (f64, f64))> = field
        .cells
        .par_iter()
        .map(|p| {
            let margin = |xi: f64| {
                region
                    .margins(p.evaluate(xi))
                    .unwrap_or((f64::NEG_INFINITY, f64::NEG_INFINITY))
            };
            let bad = |(a, b): (f64, f64)| a < -MEMBERSHIP_SLACK || b < -MEMBERSHIP_SLACK;
            let mut mins = (f64::INFINITY, f64::INFINITY);
            let mut on = 0;
            for &xi in test_set.abscissae() {
                let mg = margin(xi);
                on += bad(mg) as usize;
                mins = (mins.0.min(mg.0), mins.1.min(mg.1));
            }
            let mut off = 0;
            for i in 0..m {
                let xi = -1.0 + 2.0 * i as f64 / (m - 1) as f64;
                if test_set.abscissae().iter().any(|&t| (t - xi).abs() < 1e-15) {
                    continue;
                }
                let mg = margin(xi);
                off += bad(mg) as usize;
                mins = (mins.0.min(mg.0), mins.1.min(mg.1));
            }
            (on, off, mins)
        })
        .collect();
    ViolationScan {
        test_set_violations: per_cell.iter().map(|c| c.0).sum(),
        off_test_set_violations: per_cell.iter().map(|c| c.1).sum(),
        margins: per_cell.into_iter().map(|c| c.2).collect(),
    }
}

/// One row `(x, v_numeric, u_numeric, v_exact, u_exact)` per sample.
pub type PlotRow = [f64; 5];

pub fn plot_data_text(rows: &[PlotRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(
            out,
            "{:.11e} {:.11e} {:.11e} {:.11e} {:.11e}",
            r[0], r[1], r[2], r[3], r[4]
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiemannRun {
    pub run: RunResult,
    pub fan: WaveFan,
    /// L¹ distance to the exact solution on the window.
    pub l1_error: f64,
    pub plot: Vec<PlotRow>,
}

/// Riemann preset at `window_cells` cells on `[-1, 1]`.
pub fn riemann_run(
    preset: &ExperimentPreset,
    window_cells: usize,
    config: &SchemeConfig,
    samples_per_cell: usize,
) -> Result<RiemannRun> {
    let fan = preset
        .exact_fan()
        .ok_or_else(|| Error::InvalidConfig(format!("{} has no Riemann data", preset.id.name())))??;
    let p = preset.with_window_cells(window_cells);
    let mesh = p.mesh(0)?;
    let run = p.run(mesh, config)?;
    let exact = |x: f64| fan.sample_at(x, run.t, 0.0);
    let norms = error_norms(&run.field, exact, p.window)?;
    let (a, b) = p.window.unwrap_or((p.x_min, p.x_max));
    let m = samples_per_cell.max(1);
    let mut plot = Vec::new();
    for j in 0..mesh.n_cells {
        let c = mesh.center(j);
        if !(a..=b).contains(&c) {
            continue;
        }
        for i in 0..m {
            let xi = -1.0 + (2 * i + 1) as f64 / m as f64;
            let x = mesh.x_of(j, xi);
            let w = run.field.cells[j].evaluate(xi);
            let e = exact(x);
            plot.push([x, w.c1, w.c2, e.c1, e.c2]);
        }
    }
    Ok(RiemannRun {
        run,
        fan,
        l1_error: norms.l1,
        plot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_pin_constants() {
        let p = ExperimentPreset::new(PresetId::Ex2PSysAccuracy);
        assert_eq!((p.base_cells, p.t_final, p.law.gamma), (32, 0.1, 1.4));
        assert!((p.mesh(0).unwrap().dx() - 2.0 * PI / 32.0).abs() < 1e-15);
        let e5 = ExperimentPreset::new(PresetId::Ex5ShockRarefaction);
        assert!((e5.region.r0 - 0.1053).abs() < 1e-12 && (e5.region.s0 - 0.1053).abs() < 1e-12);
        let e6 = ExperimentPreset::new(PresetId::Ex6RarefactionShock);
        assert!(e6.region.r0.abs() < 1e-12 && e6.region.s0.abs() < 1e-12);
        let m = e6.with_window_cells(128).mesh(0).unwrap();
        assert_eq!(m.dx(), 2.0 / 128.0);
        assert_eq!(PresetId::parse("EX3"), Some(PresetId::Ex3ViscAccuracy));
    }

    #[test]
    fn with_law_rebuilds_region() {
        let p = ExperimentPreset::new(PresetId::Ex2PSysAccuracy);
        let q = p.with_law(PressureLaw::p_system(1.0, GAMMA, 1.0).unwrap()).unwrap();
        assert_eq!(q.region, p.region);
        let e5 = ExperimentPreset::new(PresetId::Ex5ShockRarefaction);
        let law = PressureLaw::p_system(2.0, 3.0, 1.0).unwrap();
        let q = e5.with_law(law).unwrap();
        assert_eq!((q.law.k, q.law.gamma, q.law.m_ref), (2.0, 3.0, 0.25));
        let (l, r) = q.riemann.unwrap();
        assert!(q.region.contains(l) && q.region.contains(r));
        let euler = p.with_law(PressureLaw::eulerian(1.0, GAMMA).unwrap()).unwrap();
        for i in 0..50 {
            assert!(euler.region.contains(euler.initial(0.1 * i as f64)));
        }
    }

    #[test]
    fn smooth_region_contains_initial_data() {
        let p = ExperimentPreset::new(PresetId::Ex1ProjAccuracy);
        for i in 0..200 {
            let x = 2.0 * PI * i as f64 / 200.0;
            assert!(p.region.contains(p.initial(x)));
        }
    }

    #[test]
    fn norms_of_self_and_offset() {
        let mesh = Mesh::new(0.0, 2.0, 16).unwrap();
        let lin = |x: f64| State::new(1.0 + x, 2.0 - x);
        let f = project_initial(mesh, 1, lin).unwrap();
        let e = error_norms(&f, lin, None).unwrap();
        assert!(e.linf < 1e-14 && e.l1 < 1e-14);
        let d = 1e-3;
        let e = error_norms(&f, |x| lin(x) + State::new(d, 0.0), None).unwrap();
        assert!((e.linf - d).abs() < 1e-12 && (e.l1 - d).abs() < 1e-12);
        assert!((e.l1_components[0] - d).abs() < 1e-12 && e.l1_components[1] < 1e-14);
        let e = error_norms(&f, |x| lin(x) + State::new(d, 0.0), Some((0.0, 1.0))).unwrap();
        assert!((e.l1 - d).abs() < 1e-12);
    }

    #[test]
    fn orders_from_errors() {
        let rows = convergence_rows(&[(0.1, 4.0, 8.0), (0.05, 1.0, 1.0)]);
        assert_eq!(rows[0].l1_order, None);
        assert!((rows[1].linf_order.unwrap() - 2.0).abs() < 1e-14);
        assert!((rows[1].l1_order.unwrap() - 3.0).abs() < 1e-14);
        let single = convergence_rows(&[(0.1, 1.0, 1.0)]);
        assert_eq!(single.len(), 1);
        assert!(single[0].csv_row().ends_with(','));
        assert!(table_csv(&rows).starts_with(ConvergenceRow::CSV_HEADER));
    }

    #[test]
    fn scan_finds_unlimited_jump_violations() {
        let p = ExperimentPreset::new(PresetId::Ex5ShockRarefaction);
        let mesh = Mesh::new(-1.0, 1.0, 33).unwrap();
        let f = p.project(mesh, 1).unwrap();
        let ts = default_test_set(1).unwrap();
        let scan = violation_scan(&f, &p.region, &ts, 9);
        assert!(scan.test_set_violations + scan.off_test_set_violations > 0);
        let (lim, _) = limit_field(&f, &p.region, &ts).unwrap();
        assert_eq!(violation_scan(&lim, &p.region, &ts, 9).test_set_violations, 0);
        let wide = InvariantRegion::unbounded(p.law);
        let scan = violation_scan(&f, &wide, &ts, 9);
        assert_eq!(scan.test_set_violations + scan.off_test_set_violations, 0);
    }

    #[test]
    fn projection_table_orders() {
        let p = ExperimentPreset::new(PresetId::Ex1ProjAccuracy);
        let s = convergence_table(&p, &StudyOptions::new(2, 3, false)).unwrap();
        let last = s.rows.last().unwrap();
        assert!((last.l1_order.unwrap() - 3.0).abs() < 0.1);
    }
}
