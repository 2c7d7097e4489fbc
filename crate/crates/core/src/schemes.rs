//! First-order finite volume and DG schemes, time steppers and the limiter
//! loop.
//!
//! The semi-discrete DG scheme for `w_t + F(w)_x = ε w_xx` reads, for each
//! cell and Legendre mode `l`,
//!
//! ```text
//! (Δx/(2l+1)) da_l/dt = ∫F P_l' dξ - F̂ P_l |∂I - (2ε/Δx) ∫w_ξ P_l' dξ
//!                       + ε (ŵ_x P_l + (w - {w}) (2/Δx) P_l') |∂I
//! ```
//!
//! with the Lax–Friedrichs flux `F̂`, the direct DG derivative `ŵ_x` and the
//! interior trace of the cell in the last boundary term.

use rayon::prelude::*;

use crate::discretization::{
    average_rule_weights, basis, basis_derivative, gauss_legendre, AverageRule, CellPoly, DgField,
};
use crate::error::{Error, Result};
use crate::fluxes::{ddg_flux, interface_fluxes, interface_sigmas, lax_friedrichs, FluxParams, SigmaPolicy};
use crate::limiter::{limit_field, test_set_violations, LimiterReport, TestSet};
use crate::model::{InvariantRegion, PressureLaw, State, SystemKind, MEMBERSHIP_SLACK};

/// Relative tolerance when comparing a time step against its bound.
const DT_TOLERANCE: f64 = 1e-12;

const MAX_DT_RETRIES: usize = 30;
const RETRY_FACTOR: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CflMode {
    FirstOrder,
    HighOrderConvective,
    ViscousSecond,
    ViscousThird,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DtPolicy {
    TheoremBound,
    PaperExperiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeIntegrator {
    ForwardEuler,
    SspRk3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub law: PressureLaw,
    pub degree: usize,
    pub flux: FluxParams,
    pub cfl_mode: CflMode,
    /// Interior abscissa of the three-point decomposition (k = 2) or the
    /// symmetric test points `±γ_t` (k = 1, viscous).
    pub gamma_t: f64,
    pub dt_policy: DtPolicy,
    pub limiter_enabled: bool,
    /// When false only the diffusive part of the residual is assembled.
    pub convective: bool,
    pub integrator: TimeIntegrator,
}

impl SchemeConfig {
    /// Defaults for a mode: degree 0 for first order, `(β₀, β₁) = (2, 1/4)`,
    /// `γ_t = 1` for second-order viscous runs and `0` otherwise.
    pub fn new(law: PressureLaw, degree: usize, cfl_mode: CflMode, epsilon: f64) -> Self {
        let (sigma_policy, gamma_t) = match cfl_mode {
            CflMode::FirstOrder => (SigmaPolicy::FirstOrderStencil, 0.0),
            CflMode::ViscousSecond => (SigmaPolicy::TheoremStencil, 1.0),
            _ => (SigmaPolicy::TheoremStencil, 0.0),
        };
        Self {
            law,
            degree,
            flux: FluxParams {
                sigma_policy,
                beta0: 2.0,
                beta1: 0.25,
                epsilon,
            },
            cfl_mode,
            gamma_t,
            dt_policy: DtPolicy::TheoremBound,
            limiter_enabled: true,
            convective: true,
            integrator: if degree == 0 {
                TimeIntegrator::ForwardEuler
            } else {
                TimeIntegrator::SspRk3
            },
        }
    }

    /// Natural mode for a degree and viscosity.
    pub fn default_mode(degree: usize, epsilon: f64) -> CflMode {
        match (degree, epsilon > 0.0) {
            (0, _) => CflMode::FirstOrder,
            (_, false) => CflMode::HighOrderConvective,
            (1, true) => CflMode::ViscousSecond,
            (_, true) => CflMode::ViscousThird,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.flux.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let eps = self.flux.epsilon;
        let (b0, b1, g) = (self.flux.beta0, self.flux.beta1, self.gamma_t);
        if self.degree > 2 {
            return bad(format!("degree {} exceeds 2", self.degree));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return bad(format!("viscosity must be finite and ≥ 0 (got {eps})"));
        }
        if self.law.kind != SystemKind::PSystem && (self.degree > 0 || eps > 0.0) {
            return bad("Eulerian and shallow-water systems support the first-order inviscid scheme only".into());
        }
        if !self.convective && eps == 0.0 {
            return bad("diffusion-only mode needs ε > 0".into());
        }
        match self.cfl_mode {
            CflMode::FirstOrder => {
                if self.degree != 0 || eps > 0.0 {
                    return bad("first-order mode needs degree 0 and ε = 0".into());
                }
            }
            CflMode::HighOrderConvective => {
                if eps > 0.0 {
                    return bad("high-order convective mode needs ε = 0".into());
                }
                if self.degree == 2 && !(g.abs() <= 1.0 / 3.0) {
                    return bad(format!("|gamma_t| must be ≤ 1/3 (got {g})"));
                }
            }
            CflMode::ViscousSecond => {
                if self.degree != 1 {
                    return bad("viscous second-order mode needs degree 1".into());
                }
                if !(eps > 0.0) {
                    return bad("viscous modes need ε > 0".into());
                }
                if !(b0 >= 0.5) {
                    return bad(format!("beta0 must be ≥ 1/2 (got {b0})"));
                }
                if g == 0.0 || !(g.abs() <= 1.0) || !((1.0 - 1.0 / b0).abs() <= g.abs() + 1e-15) {
                    return bad(format!(
                        "gamma_t must satisfy |1 - 1/beta0| ≤ |gamma_t| ≤ 1, gamma_t ≠ 0 (got {g})"
                    ));
                }
            }
            CflMode::ViscousThird => {
                if self.degree != 2 {
                    return bad("viscous third-order mode needs degree 2".into());
                }
                if !(eps > 0.0) {
                    return bad("viscous modes need ε > 0".into());
                }
                if !(b0 >= 1.0) {
                    return bad(format!("beta0 must be ≥ 1 (got {b0})"));
                }
                if !(0.125..=0.25).contains(&b1) {
                    return bad(format!("beta1 must lie in [1/8, 1/4] (got {b1})"));
                }
                if !(g.abs() < 1.0 / 3.0) || !(g.abs() <= 8.0 * b1 - 1.0 + 1e-15) {
                    return bad(format!(
                        "gamma_t must satisfy |gamma_t| < 1/3 and |gamma_t| ≤ 8 beta1 - 1 (got {g})"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Points at which the limiter enforces membership.
    pub fn test_set(&self) -> Result<TestSet> {
        match (self.cfl_mode, self.degree) {
            (CflMode::ViscousSecond, _) => TestSet::union(&[
                TestSet::gauss_lobatto(2)?,
                TestSet::custom(vec![-self.gamma_t.abs(), self.gamma_t.abs()])?,
            ]),
            (CflMode::ViscousThird, _) | (CflMode::HighOrderConvective, 2) => TestSet::interior(self.gamma_t),
            _ => TestSet::gauss_lobatto(2),
        }
    }

    /// Decomposition of the cell average used by the convective bound.
    pub fn average_rule(&self) -> AverageRule {
        match self.degree {
            2 => AverageRule::Interior3(self.gamma_t),
            _ => AverageRule::Lobatto(2),
        }
    }

    fn certified(&self) -> bool {
        self.dt_policy == DtPolicy::TheoremBound
    }
}

/// `μ₀` of the third-order viscous bound,
/// `(1/(12ε)) min{(1+3γ)/((1+γ)β₀-θ), (1-3γ)/((1-γ)β₀-θ), 2/θ}`, `θ = 2 - 8β₁`.
/// Branches with a non-positive denominator are dropped.
pub fn mu0_third(beta0: f64, beta1: f64, gamma_t: f64, epsilon: f64) -> f64 {
    let theta = 2.0 - 8.0 * beta1;
    let branch = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::INFINITY };
    let m = branch(1.0 + 3.0 * gamma_t, (1.0 + gamma_t) * beta0 - theta)
        .min(branch(1.0 - 3.0 * gamma_t, (1.0 - gamma_t) * beta0 - theta))
        .min(branch(2.0, theta));
    m / (12.0 * epsilon)
}

/// `μ₀` of the configured viscous mode.
pub fn certified_mu0(config: &SchemeConfig) -> Result<f64> {
    let f = &config.flux;
    match config.cfl_mode {
        CflMode::ViscousSecond => Ok(1.0 / (4.0 * f.epsilon * f.beta0)),
        CflMode::ViscousThird => Ok(mu0_third(f.beta0, f.beta1, config.gamma_t, f.epsilon)),
        _ => Err(Error::InvalidConfig("μ₀ is only defined for viscous modes".into())),
    }
}

/// Largest wave-speed bound over all interfaces under `policy`.
pub fn global_sigma(field: &DgField, law: &PressureLaw, policy: SigmaPolicy) -> Result<f64> {
    Ok(interface_sigmas(field, law, policy)?.into_iter().fold(0.0, f64::max))
}

/// Largest time step allowed by the configured policy.
pub fn certified_dt(field: &DgField, config: &SchemeConfig) -> Result<f64> {
    let dx = field.mesh.dx();
    let eps = config.flux.epsilon;
    let k = config.degree;
    let policy = match config.dt_policy {
        DtPolicy::TheoremBound => config.flux.sigma_policy,
        DtPolicy::PaperExperiment => SigmaPolicy::Global,
    };
    let convective = |factor: f64| -> Result<f64> {
        if !config.convective {
            return Ok(f64::INFINITY);
        }
        let sigma = global_sigma(field, &config.law, policy)?;
        if !(sigma > 0.0) {
            return Err(Error::DegenerateSigma);
        }
        Ok(factor * dx / sigma)
    };
    let (b0, b1) = (config.flux.beta0, config.flux.beta1);
    let dt = match config.dt_policy {
        DtPolicy::TheoremBound => match config.cfl_mode {
            CflMode::FirstOrder => convective(1.0)?,
            CflMode::HighOrderConvective => {
                let (_, w) = average_rule_weights(config.average_rule(), k)?;
                convective(w[0].min(w[w.len() - 1]))?
            }
            CflMode::ViscousSecond => convective(0.25)?.min(dx * dx / (4.0 * eps * b0)),
            CflMode::ViscousThird => convective(1.0 / 12.0)?.min(dx * dx * mu0_third(b0, b1, config.gamma_t, eps)),
        },
        DtPolicy::PaperExperiment => match (k, eps > 0.0) {
            (0, _) => convective(1.0)?,
            (1, false) => convective(1.0 / 3.0)?.min(dx.powf(2.0 / 3.0)),
            (_, false) => convective(1.0 / 6.0)?,
            (1, true) => convective(0.25)?
                .min(dx * dx / (6.0 * eps * b0))
                .min(dx.powf(2.0 / 3.0)),
            (_, true) => convective(1.0 / 12.0)?.min(dx * dx / (12.0 * eps * (8.0 * b1 + b0 - 2.0))),
        },
    };
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::DegenerateSigma);
    }
    Ok(dt)
}

/// One first-order Lax–Friedrichs step on cell averages with the
/// neighbourhood wave-speed bound; refuses steps with `λσ > 1`.
pub fn fv1_step(cells: &[State], law: &PressureLaw, dt: f64, dx: f64) -> Result<Vec<State>> {
    let n = cells.len();
    if n == 0 {
        return Err(Error::EmptyStencil);
    }
    let speeds = cells.iter().map(|w| law.wave_speed(*w)).collect::<Result<Vec<_>>>()?;
    let at = |j: isize| (j.rem_euclid(n as isize)) as usize;
    let mut fluxes = Vec::with_capacity(n);
    for j in 0..n as isize {
        let sigma = (-1..=2).map(|o| speeds[at(j + o)]).fold(0.0, f64::max);
        if dt * sigma > dx * (1.0 + DT_TOLERANCE) {
            return Err(Error::CflViolation {
                dt,
                allowed: dx / sigma,
            });
        }
        fluxes.push(lax_friedrichs(law, cells[at(j)], cells[at(j + 1)], sigma)?);
    }
    let lambda = dt / dx;
    Ok((0..n)
        .map(|j| cells[j] - (fluxes[j] - fluxes[at(j as isize - 1)]) * lambda)
        .collect())
}

/// Semi-discrete right-hand side in modal form.
pub fn dg_residual(field: &DgField, config: &SchemeConfig) -> Result<DgField> {
    let mesh = field.mesh;
    let n = mesh.n_cells;
    let k = field.degree;
    let dx = mesh.dx();
    let eps = config.flux.epsilon;
    let law = &config.law;

    let fluxes = if config.convective {
        let sigmas = interface_sigmas(field, law, config.flux.sigma_policy)?;
        interface_fluxes(field, law, &sigmas)?
    } else {
        vec![State::ZERO; n]
    };
    let (ddg, jumps): (Vec<State>, Vec<State>) = if eps > 0.0 {
        (0..n)
            .into_par_iter()
            .map(|j| {
                (
                    ddg_flux(field, j, &config.flux),
                    field.trace_left(mesh.wrap(j, 1)) - field.trace_right(j),
                )
            })
            .unzip()
    } else {
        (Vec::new(), Vec::new())
    };

    let q = gauss_legendre(k + 2)?;
    let cells = (0..n)
        .into_par_iter()
        .map(|j| {
            let poly = &field.cells[j];
            let jl = mesh.wrap(j, -1);
            let mut out = CellPoly::constant(State::ZERO, k);
            let flux_vals = if config.convective && k > 0 {
                q.nodes
                    .iter()
                    .map(|&xi| law.flux(poly.evaluate(xi)))
                    .collect::<Result<Vec<_>>>()?
            } else {
                Vec::new()
            };
            for l in 0..=k {
                let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                let dp_right = basis_derivative(l, 1.0);
                let dp_left = basis_derivative(l, -1.0);
                let mut r = State::ZERO;
                if config.convective {
                    for ((&xi, &w), f) in q.nodes.iter().zip(&q.weights).zip(&flux_vals) {
                        r += *f * (w * basis_derivative(l, xi));
                    }
                    r -= fluxes[j] - fluxes[jl] * sign;
                }
                if eps > 0.0 {
                    let mut vol = State::ZERO;
                    for (&xi, &w) in q.nodes.iter().zip(&q.weights) {
                        vol += poly.derivative(xi) * (w * basis_derivative(l, xi));
                    }
                    r -= vol * (2.0 * eps / dx);
                    r += (ddg[j] - ddg[jl] * sign) * eps;
                    r -= (jumps[j] * dp_right + jumps[jl] * dp_left) * (eps / dx);
                }
                out.set_mode(l, r * ((2 * l + 1) as f64 / dx));
            }
            debug_assert!((basis(0, 0.3) - 1.0).abs() < 1e-15);
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    DgField::from_cells(mesh, cells)
}

/// `a·x + b·y` cell by cell.
fn combine(a: f64, x: &DgField, b: f64, y: &DgField) -> DgField {
    let cells = x
        .cells
        .iter()
        .zip(&y.cells)
        .map(|(p, q)| {
            let mut c = CellPoly::constant(State::ZERO, p.degree);
            c.axpy(a, p);
            c.axpy(b, q);
            c
        })
        .collect();
    DgField {
        mesh: x.mesh,
        degree: x.degree,
        cells,
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepReport {
    pub dt: f64,
    pub sigma_global: f64,
    /// Reports of cells where the limiter was active.
    pub limiter_reports: Vec<LimiterReport>,
    pub limiter_activations: usize,
    pub min_theta: f64,
    pub avg_membership_violations: usize,
    pub test_set_violations: usize,
    /// `(cell, r0 - r, s - s0)` of the first average violation.
    pub first_violation: Option<(usize, f64, f64)>,
    pub stage_count: usize,
}

impl StepReport {
    fn new(dt: f64) -> Self {
        Self {
            dt,
            min_theta: 1.0,
            ..Default::default()
        }
    }

    fn absorb_limiter(&mut self, reports: Vec<LimiterReport>) {
        for r in reports {
            self.min_theta = self.min_theta.min(r.theta);
            if r.activated {
                self.limiter_activations += 1;
                self.limiter_reports.push(r);
            }
        }
    }

    fn merge(&mut self, other: StepReport) {
        self.sigma_global = self.sigma_global.max(other.sigma_global);
        self.limiter_activations += other.limiter_activations;
        self.limiter_reports.extend(other.limiter_reports);
        self.min_theta = self.min_theta.min(other.min_theta);
        self.avg_membership_violations += other.avg_membership_violations;
        self.test_set_violations += other.test_set_violations;
        self.first_violation = self.first_violation.or(other.first_violation);
        self.stage_count += other.stage_count;
    }
}

/// Counts averages of `output` outside the region by more than
/// [`MEMBERSHIP_SLACK`]. Strict interior membership cannot be resolved in
/// floating point once averages sit on a boundary curve, as they do inside a
/// rarefaction that carries `r = r0` or `s = s0`.
fn count_average_violations(output: &DgField, region: &InvariantRegion, report: &mut StepReport) {
    for j in 0..output.n_cells() {
        let avg = output.cell_average(j);
        if region.contains_with_slack(avg, MEMBERSHIP_SLACK) {
            continue;
        }
        report.avg_membership_violations += 1;
        if report.first_violation.is_none() {
            let (a, b) = region.margins(avg).unwrap_or((f64::NAN, f64::NAN));
            report.first_violation = Some((j, a, b));
        }
    }
}

/// Forward Euler stage from a field that already satisfies the limiter
/// postcondition.
fn euler_stage(
    field: &DgField,
    region: &InvariantRegion,
    config: &SchemeConfig,
    dt: f64,
) -> Result<(DgField, StepReport)> {
    let mut report = StepReport::new(dt);
    report.stage_count = 1;
    if config.convective {
        let policy = match config.dt_policy {
            DtPolicy::TheoremBound => config.flux.sigma_policy,
            DtPolicy::PaperExperiment => SigmaPolicy::Global,
        };
        report.sigma_global = global_sigma(field, &config.law, policy)?;
    }
    if config.certified() {
        let allowed = certified_dt(field, config)?;
        if dt > allowed * (1.0 + DT_TOLERANCE) {
            return Err(Error::CflViolation { dt, allowed });
        }
    }
    let rate = dg_residual(field, config)?;
    let out = combine(1.0, field, dt, &rate);
    count_average_violations(&out, region, &mut report);
    Ok((out, report))
}

fn limit_stage(
    field: &DgField,
    region: &InvariantRegion,
    config: &SchemeConfig,
    test_set: &TestSet,
    report: &mut StepReport,
) -> Result<DgField> {
    if !config.limiter_enabled {
        return Ok(field.clone());
    }
    let (lim, reports) = limit_field(field, region, test_set)?;
    report.absorb_limiter(reports);
    report.test_set_violations += test_set_violations(&lim, region, test_set);
    Ok(lim)
}

/// One forward Euler step. The input is expected to be limited already.
pub fn forward_euler_step(
    field: &DgField,
    region: &InvariantRegion,
    config: &SchemeConfig,
    dt: f64,
) -> Result<(DgField, StepReport)> {
    euler_stage(field, region, config, dt)
}

/// One SSP-RK3 step. The input is expected to be limited already; the two
/// intermediate stages are limited before their residuals are evaluated.
pub fn ssp_rk3_step(
    field: &DgField,
    region: &InvariantRegion,
    config: &SchemeConfig,
    dt: f64,
) -> Result<(DgField, StepReport)> {
    let test_set = config.test_set()?;
    let (e1, mut report) = euler_stage(field, region, config, dt)?;

    let mut lim_report = StepReport::new(dt);
    let w1 = limit_stage(&e1, region, config, &test_set, &mut lim_report)?;
    let (e2, r2) = euler_stage(&w1, region, config, dt)?;
    let w2 = combine(0.75, field, 0.25, &e2);

    let w2 = limit_stage(&w2, region, config, &test_set, &mut lim_report)?;
    let (e3, r3) = euler_stage(&w2, region, config, dt)?;
    let out = combine(1.0 / 3.0, field, 2.0 / 3.0, &e3);

    report.merge(r2);
    report.merge(r3);
    report.merge(lim_report);
    Ok((out, report))
}

fn advance(field: &DgField, region: &InvariantRegion, config: &SchemeConfig, dt: f64) -> Result<(DgField, StepReport)> {
    match config.integrator {
        TimeIntegrator::ForwardEuler => forward_euler_step(field, region, config, dt),
        TimeIntegrator::SspRk3 => ssp_rk3_step(field, region, config, dt),
    }
}

/// One row of the run log.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLog {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub sigma: f64,
    pub min_theta: f64,
    pub activations: usize,
    pub violations: usize,
}

impl StepLog {
    pub const CSV_HEADER: &'static str = "step,t,dt,sigma,min_theta,activations,violations";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.11e},{:.11e},{:.11e},{:.11e},{},{}",
            self.step, self.t, self.dt, self.sigma, self.min_theta, self.activations, self.violations
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub field: DgField,
    pub t: f64,
    pub log: Vec<StepLog>,
    pub total_violations: usize,
    pub total_test_set_violations: usize,
    pub initial_totals: State,
    pub final_totals: State,
}

impl RunResult {
    pub fn steps(&self) -> usize {
        self.log.len()
    }

    /// Largest relative change of the conserved totals.
    pub fn conservation_drift(&self) -> f64 {
        let rel = |a: f64, b: f64| (b - a).abs() / a.abs().max(1.0);
        rel(self.initial_totals.c1, self.final_totals.c1).max(rel(self.initial_totals.c2, self.final_totals.c2))
    }
}

enum Stop {
    Time(f64),
    Steps(usize),
}

fn run(field0: &DgField, region: &InvariantRegion, config: &SchemeConfig, stop: Stop) -> Result<RunResult> {
    config.validate()?;
    if field0.degree != config.degree {
        return Err(Error::InvalidConfig(format!(
            "field degree {} differs from scheme degree {}",
            field0.degree, config.degree
        )));
    }
    let test_set = config.test_set()?;
    let initial_totals = field0.totals();
    let mut field = field0.clone();
    let mut t = 0.0;
    let mut log = Vec::new();
    let mut total_violations = 0;
    let mut total_ts = 0;
    let strict = config.certified() && config.limiter_enabled;

    loop {
        let remaining = match stop {
            Stop::Time(t_final) => {
                if t >= t_final {
                    break;
                }
                t_final - t
            }
            Stop::Steps(n) => {
                if log.len() >= n {
                    break;
                }
                f64::INFINITY
            }
        };
        let mut report = StepReport::new(0.0);
        let limited = limit_stage(&field, region, config, &test_set, &mut report)?;
        let mut dt = certified_dt(&limited, config)?;
        let mut last = remaining <= dt;
        if last {
            dt = remaining;
        }
        let mut attempt = 0;
        let (next, step_report) = loop {
            match advance(&limited, region, config, dt) {
                Err(Error::CflViolation { allowed, .. }) if attempt < MAX_DT_RETRIES => {
                    dt = dt.min(allowed) * RETRY_FACTOR;
                    last = false;
                    attempt += 1;
                }
                other => break other?,
            }
        };
        report.merge(step_report);
        report.dt = dt;
        if strict && (report.avg_membership_violations > 0 || report.test_set_violations > 0) {
            let (cell, r_margin, s_margin) = report.first_violation.unwrap_or((0, f64::NAN, f64::NAN));
            return Err(Error::AverageOutsideInterior {
                cell,
                r_margin,
                s_margin,
            });
        }
        total_violations += report.avg_membership_violations;
        total_ts += report.test_set_violations;
        t = match stop {
            Stop::Time(t_final) if last => t_final,
            _ => t + dt,
        };
        log.push(StepLog {
            step: log.len() + 1,
            t,
            dt,
            sigma: report.sigma_global,
            min_theta: report.min_theta,
            activations: report.limiter_activations,
            violations: report.avg_membership_violations,
        });
        field = next;
    }

    let mut final_report = StepReport::new(0.0);
    let field = limit_stage(&field, region, config, &test_set, &mut final_report)?;
    total_ts += final_report.test_set_violations;
    let final_totals = field.totals();
    Ok(RunResult {
        field,
        t,
        log,
        total_violations,
        total_test_set_violations: total_ts,
        initial_totals,
        final_totals,
    })
}

/// Limiter loop up to `t_final`; the last step is shortened to land on it.
pub fn run_irp(field0: &DgField, region: &InvariantRegion, config: &SchemeConfig, t_final: f64) -> Result<RunResult> {
    run(field0, region, config, Stop::Time(t_final))
}

/// Limiter loop for a fixed number of steps.
pub fn run_irp_steps(
    field0: &DgField,
    region: &InvariantRegion,
    config: &SchemeConfig,
    steps: usize,
) -> Result<RunResult> {
    run(field0, region, config, Stop::Steps(steps))
}

/// Named coefficients of the convex decomposition of the diffusive part of
/// the averaged update.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub mu: f64,
    pub alphas: Vec<(String, f64)>,
    /// Weights of the point values; they sum to 1.
    pub weights: Vec<(String, f64)>,
}

impl CoefficientTable {
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().map(|(_, w)| w).sum()
    }

    pub fn min_entry(&self) -> (String, f64) {
        self.alphas
            .iter()
            .chain(&self.weights)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .cloned()
            .unwrap_or_default()
    }
}

/// Coefficients at `μ = Δt/Δx²` without any sign check.
pub fn decomposition_table(config: &SchemeConfig, mu: f64) -> Result<CoefficientTable> {
    let eps = config.flux.epsilon;
    let (b0, b1, g) = (config.flux.beta0, config.flux.beta1, config.gamma_t);
    let c = 2.0 * eps * mu;
    let named = |v: &[(&str, f64)]| v.iter().map(|(n, x)| (n.to_string(), *x)).collect::<Vec<_>>();
    match config.degree {
        1 => {
            if g == 0.0 {
                return Err(Error::InvalidConfig("gamma_t must be nonzero for degree 1".into()));
            }
            let a1 = b0 / 2.0 + (b0 - 1.0) / (2.0 * g);
            let a2 = b0 / 2.0 - (b0 - 1.0) / (2.0 * g);
            let center = 0.5 - c * (a1 + a2);
            Ok(CoefficientTable {
                mu,
                alphas: named(&[("alpha1", a1), ("alpha2", a2)]),
                weights: named(&[
                    ("p_{j+1}(-g)", c * a1),
                    ("p_{j+1}(g)", c * a2),
                    ("p_{j-1}(-g)", c * a2),
                    ("p_{j-1}(g)", c * a1),
                    ("p_j(-g)", center),
                    ("p_j(g)", center),
                ]),
            })
        }
        2 => {
            let a1 = |g: f64| b0 + (8.0 * b1 - 3.0 - g) / (2.0 * (g + 1.0));
            let a2 = |g: f64| (8.0 * b1 - 2.0) / (g * g - 1.0);
            let a3 = |g: f64| (8.0 * b1 - 1.0 - g) / (2.0 * (1.0 - g));
            let (_, cw) = average_rule_weights(AverageRule::Interior3(g), 2)?;
            let a4 = cw[0] - c * (a3(-g) + a1(g));
            let a5 = cw[1] - c * (a2(-g) + a2(g));
            let a6 = cw[2] - c * (a1(-g) + a3(g));
            Ok(CoefficientTable {
                mu,
                alphas: named(&[
                    ("alpha1(g)", a1(g)),
                    ("alpha1(-g)", a1(-g)),
                    ("alpha2(g)", a2(g)),
                    ("alpha2(-g)", a2(-g)),
                    ("alpha3(g)", a3(g)),
                    ("alpha3(-g)", a3(-g)),
                    ("alpha4", a4),
                    ("alpha5", a5),
                    ("alpha6", a6),
                ]),
                weights: named(&[
                    ("p_{j+1}(-1)", c * a1(g)),
                    ("p_{j+1}(g)", c * a2(g)),
                    ("p_{j+1}(1)", c * a3(g)),
                    ("p_{j-1}(-1)", c * a3(-g)),
                    ("p_{j-1}(g)", c * a2(-g)),
                    ("p_{j-1}(1)", c * a1(-g)),
                    ("p_j(-1)", a4),
                    ("p_j(g)", a5),
                    ("p_j(1)", a6),
                ]),
            })
        }
        k => Err(Error::InvalidConfig(format!(
            "decomposition coefficients need degree 1 or 2 (got {k})"
        ))),
    }
}

/// Coefficients at `μ`, failing on the first negative entry.
pub fn convex_decomposition_coefficients(config: &SchemeConfig, mu: f64) -> Result<CoefficientTable> {
    let table = decomposition_table(config, mu)?;
    let (name, value) = table.min_entry();
    if value < -1e-14 {
        return Err(Error::NegativeCoefficient { name, value });
    }
    Ok(table)
}
