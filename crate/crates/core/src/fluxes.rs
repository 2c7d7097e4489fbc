//! Lax–Friedrichs convective flux and the direct DG diffusive flux.
//!
//! Interfaces are indexed by the cell on their left: interface `j` is
//! `x_{j+1/2}`, between cells `j` and `j + 1` (periodically wrapped).

use rayon::prelude::*;

use crate::discretization::DgField;
use crate::error::{Error, Result};
use crate::model::{PressureLaw, State};

/// Which states enter the wave-speed bound `σ` of an interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SigmaPolicy {
    /// The two traces at the interface.
    Interface,
    /// Cell averages of cells `j-1 ..= j+2`, covering both cells that share
    /// the interface.
    FirstOrderStencil,
    /// Both traces at `x_{j-1/2}`, `x_{j+1/2}` and `x_{j+3/2}`.
    TheoremStencil,
    /// One value for the whole mesh: the maximum over all traces and averages.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxParams {
    pub sigma_policy: SigmaPolicy,
    pub beta0: f64,
    pub beta1: f64,
    pub epsilon: f64,
}

impl Default for FluxParams {
    fn default() -> Self {
        Self {
            sigma_policy: SigmaPolicy::Global,
            beta0: 2.0,
            beta1: 0.25,
            epsilon: 0.0,
        }
    }
}

/// `½(F(wl) + F(wr)) - (σ/2)(wr - wl)`.
pub fn lax_friedrichs(law: &PressureLaw, wl: State, wr: State, sigma: f64) -> Result<State> {
    let fl = law.flux(wl)?;
    let fr = law.flux(wr)?;
    Ok((fl + fr) * 0.5 - (wr - wl) * (0.5 * sigma))
}

/// Largest wave speed over a set of states.
pub fn max_wave_speed(law: &PressureLaw, states: &[State]) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::EmptyStencil);
    }
    states.iter().try_fold(0f64, |acc, w| Ok(acc.max(law.wave_speed(*w)?)))
}

/// Per-interface `σ` values under `policy`.
pub fn interface_sigmas(field: &DgField, law: &PressureLaw, policy: SigmaPolicy) -> Result<Vec<f64>> {
    let n = field.n_cells();
    let mesh = field.mesh;
    // Wave speeds at each cell's left trace, right trace and average.
    let speeds: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            Ok((
                law.wave_speed(field.trace_left(j))?,
                law.wave_speed(field.trace_right(j))?,
                law.wave_speed(field.cell_average(j))?,
            ))
        })
        .collect::<Result<_>>()?;
    let sigmas = match policy {
        SigmaPolicy::Interface => (0..n).map(|j| speeds[j].1.max(speeds[mesh.wrap(j, 1)].0)).collect(),
        SigmaPolicy::FirstOrderStencil => (0..n)
            .map(|j| (-1..=2).map(|o| speeds[mesh.wrap(j, o)].2).fold(0.0, f64::max))
            .collect(),
        SigmaPolicy::TheoremStencil => {
            let at_face: Vec<f64> = (0..n).map(|j| speeds[j].1.max(speeds[mesh.wrap(j, 1)].0)).collect();
            (0..n)
                .map(|j| (-1..=1).map(|o| at_face[mesh.wrap(j, o)]).fold(0.0, f64::max))
                .collect()
        }
        SigmaPolicy::Global => {
            let g = speeds.iter().map(|&(a, b, c)| a.max(b).max(c)).fold(0.0, f64::max);
            vec![g; n]
        }
    };
    Ok(sigmas)
}

/// Lax–Friedrichs flux at every interface.
pub fn interface_fluxes(field: &DgField, law: &PressureLaw, sigmas: &[f64]) -> Result<Vec<State>> {
    let mesh = field.mesh;
    (0..field.n_cells())
        .into_par_iter()
        .map(|j| lax_friedrichs(law, field.trace_right(j), field.trace_left(mesh.wrap(j, 1)), sigmas[j]))
        .collect()
}

/// Direct DG numerical derivative at interface `j`:
/// `β₀[w]/Δx + {w_x} + β₁Δx[w_xx]`, with `[·]` = right trace − left trace.
/// The second-derivative jump only enters for degree ≥ 2.
pub fn ddg_flux(field: &DgField, j: usize, params: &FluxParams) -> State {
    let dx = field.mesh.dx();
    let jr = field.mesh.wrap(j, 1);
    let jump = field.trace_left(jr) - field.trace_right(j);
    let mean_dx = (field.derivative_x(j, 1.0) + field.derivative_x(jr, -1.0)) * 0.5;
    let mut flux = jump * (params.beta0 / dx) + mean_dx;
    if field.degree >= 2 {
        let jump_xx = field.second_derivative_x(jr, -1.0) - field.second_derivative_x(j, 1.0);
        flux += jump_xx * (params.beta1 * dx);
    }
    flux
}
