//! Exact Riemann solver for the p-system with `p(v) = k v^(-γ)`.
//!
//! The solution consists of a back wave (speed < 0) and a front wave
//! (speed > 0) separated by a constant middle state. Along the back wave
//! `r = u - g(v)` is constant across rarefactions; along the front wave
//! `s = u + g(v)`.

use crate::error::{Error, Result};
use crate::model::{PressureLaw, State, SystemKind};

const V_LO: f64 = 1e-8;
const V_HI: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wave {
    Shock {
        speed: f64,
    },
    /// Fan between characteristic speeds `head ≤ tail`.
    Rarefaction {
        head: f64,
        tail: f64,
    },
}

impl Wave {
    pub fn min_speed(&self) -> f64 {
        match *self {
            Wave::Shock { speed } => speed,
            Wave::Rarefaction { head, .. } => head,
        }
    }

    pub fn max_speed(&self) -> f64 {
        match *self {
            Wave::Shock { speed } => speed,
            Wave::Rarefaction { tail, .. } => tail,
        }
    }

    pub fn is_shock(&self) -> bool {
        matches!(self, Wave::Shock { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveFan {
    pub law: PressureLaw,
    pub left: State,
    pub back: Wave,
    pub middle: State,
    pub front: Wave,
    pub right: State,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

fn require_psystem(law: &PressureLaw, op: &'static str) -> Result<()> {
    if law.kind == SystemKind::PSystem {
        Ok(())
    } else {
        Err(Error::UnsupportedSystem { op })
    }
}

/// `u = u_l - √((v - v_l)(p(v_l) - p(v)))`.
pub fn shock_curve(law: &PressureLaw, wl: State, v: f64) -> Result<f64> {
    require_psystem(law, "shock_curve")?;
    let rad = (v - wl.c1) * (law.pressure(wl.c1)? - law.pressure(v)?);
    if rad < 0.0 {
        return Err(Error::NegativeRadicand(rad));
    }
    Ok(wl.c2 - rad.sqrt())
}

/// `u = u_l ± (g(v) - g(v_l))`.
pub fn rarefaction_curve(law: &PressureLaw, wl: State, v: f64, branch: Branch) -> Result<f64> {
    require_psystem(law, "rarefaction_curve")?;
    let dg = law.g_integral(v)? - law.g_integral(wl.c1)?;
    Ok(match branch {
        Branch::Plus => wl.c2 + dg,
        Branch::Minus => wl.c2 - dg,
    })
}

/// Velocity reached from `wl` through a back wave ending at volume `v`.
fn back_velocity(law: &PressureLaw, wl: State, v: f64) -> Result<f64> {
    if v > wl.c1 {
        rarefaction_curve(law, wl, v, Branch::Plus)
    } else {
        shock_curve(law, wl, v)
    }
}

/// Middle velocity at volume `v` that connects to `wr` through a front wave.
fn front_velocity(law: &PressureLaw, wr: State, v: f64) -> Result<f64> {
    if wr.c1 < v {
        Ok(wr.c2 + law.g_integral(wr.c1)? - law.g_integral(v)?)
    } else {
        let rad = (wr.c1 - v) * (law.pressure(v)? - law.pressure(wr.c1)?);
        if rad < 0.0 {
            return Err(Error::NegativeRadicand(rad));
        }
        Ok(wr.c2 + rad.sqrt())
    }
}

fn back_wave(law: &PressureLaw, wl: State, vm: f64) -> Result<Wave> {
    Ok(if vm > wl.c1 {
        Wave::Rarefaction {
            head: -law.sound_speed(wl.c1)?,
            tail: -law.sound_speed(vm)?,
        }
    } else if vm < wl.c1 {
        Wave::Shock {
            speed: -((law.pressure(vm)? - law.pressure(wl.c1)?) / (wl.c1 - vm)).sqrt(),
        }
    } else {
        Wave::Shock {
            speed: -law.sound_speed(vm)?,
        }
    })
}

fn front_wave(law: &PressureLaw, wr: State, vm: f64) -> Result<Wave> {
    Ok(if wr.c1 < vm {
        Wave::Rarefaction {
            head: law.sound_speed(vm)?,
            tail: law.sound_speed(wr.c1)?,
        }
    } else if wr.c1 > vm {
        Wave::Shock {
            speed: ((law.pressure(vm)? - law.pressure(wr.c1)?) / (wr.c1 - vm)).sqrt(),
        }
    } else {
        Wave::Shock {
            speed: law.sound_speed(vm)?,
        }
    })
}

/// Solves the Riemann problem with left state `wl` and right state `wr`.
pub fn solve_riemann(law: &PressureLaw, wl: State, wr: State) -> Result<WaveFan> {
    require_psystem(law, "solve_riemann")?;
    law.pressure(wl.c1)?;
    law.pressure(wr.c1)?;
    let f = |v: f64| -> Result<f64> { Ok(back_velocity(law, wl, v)? - front_velocity(law, wr, v)?) };

    let vm = if wl == wr {
        wl.c1
    } else {
        let (mut a, mut b) = (V_LO.ln(), V_HI.ln());
        let fa = f(V_LO)?;
        let fb = f(V_HI)?;
        if !(fa <= 0.0 && fb >= 0.0) {
            return Err(Error::NoSolution);
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(m.exp())? < 0.0 {
                a = m;
            } else {
                b = m;
            }
            if b - a < 1e-10 {
                break;
            }
        }
        let mut v = (0.5 * (a + b)).exp();
        for _ in 0..50 {
            let fv = f(v)?;
            if fv.abs() <= 1e-14 {
                break;
            }
            let h = 1e-7 * v;
            let d = (f(v + h)? - f(v - h)?) / (2.0 * h);
            let next = v - fv / d;
            if !(next > a.exp() * 0.5 && next < b.exp() * 2.0) || d <= 0.0 {
                break;
            }
            v = next;
        }
        v
    };
    let um = back_velocity(law, wl, vm)?;
    Ok(WaveFan {
        law: *law,
        left: wl,
        back: back_wave(law, wl, vm)?,
        middle: State::new(vm, um),
        front: front_wave(law, wr, vm)?,
        right: wr,
    })
}

impl WaveFan {
    /// State at self-similar coordinate `xi = x/t`. Exactly at a shock speed
    /// the state on the right of the shock is returned.
    pub fn sample(&self, xi: f64) -> State {
        let law = &self.law;
        let inside = |c: f64, anchor: State, branch: Branch| -> State {
            let v = law.volume_for_sound_speed(c).expect("fan speeds are positive");
            let u = match branch {
                Branch::Plus => anchor.c2 + law.g_integral(v).unwrap() - law.g_integral(anchor.c1).unwrap(),
                Branch::Minus => anchor.c2 - law.g_integral(v).unwrap() + law.g_integral(anchor.c1).unwrap(),
            };
            State::new(v, u)
        };
        match self.back {
            Wave::Shock { speed } if xi < speed => return self.left,
            Wave::Rarefaction { head, .. } if xi < head => return self.left,
            Wave::Rarefaction { tail, .. } if xi <= tail => return inside(-xi, self.left, Branch::Plus),
            _ => {}
        }
        match self.front {
            Wave::Shock { speed } if xi < speed => self.middle,
            Wave::Rarefaction { head, .. } if xi < head => self.middle,
            Wave::Rarefaction { tail, .. } if xi <= tail => inside(xi, self.right, Branch::Minus),
            _ => self.right,
        }
    }

    /// State at `(x, t)` for a discontinuity initially at `x0`.
    pub fn sample_at(&self, x: f64, t: f64, x0: f64) -> State {
        if t <= 0.0 {
            return if x < x0 { self.left } else { self.right };
        }
        self.sample((x - x0) / t)
    }
}

/// Solution of a Riemann problem placed at `x0`, for comparing against a
/// numerical solution at time `t`.
pub fn sample_profile(fan: &WaveFan, xs: &[f64], t: f64, x0: f64) -> Vec<State> {
    xs.iter().map(|&x| fan.sample_at(x, t, x0)).collect()
}
