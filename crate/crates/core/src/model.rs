//! Conservation-law systems with a convex invariant region.
//!
//! Three 2×2 systems are supported, all written for a conserved pair
//! `(c1, c2)`:
//!
//! * the p-system in Lagrangian coordinates, `(v, u)`, with `p(v) = k v^(-γ)`;
//! * isentropic Euler in Eulerian coordinates, `(ρ, m = ρu)`, with `p(ρ) = k ρ^γ`;
//! * shallow water over a flat bottom, `(h, m = hu)`, with `p(h) = g h² / 2`.
//!
//! Each system carries two Riemann invariants `r` and `s`, and the invariant
//! region is `Σ = {r ≤ r0, s ≥ s0}`. For the p-system `r = u - g(v)` is convex
//! and `s = u + g(v)` is concave, where `g(v) = ∫_m^v √(-p'(ξ)) dξ`.
//!
//! For the Eulerian and shallow-water systems the invariants are
//! `r = u + T(c1)` and `s = u - T(c1)`, with `T` the sound-speed integral. The
//! orientation is the reverse of the p-system (the `+` branch is bounded from
//! above), and the region is bounded in `(c1, c2)`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Densities below this are treated as vacuum when recovering velocity.
pub const VACUUM_THRESHOLD: f64 = 1e-13;

/// Absolute slack used for closed-region membership tests.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// A point in phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub c1: f64,
    pub c2: f64,
}

impl State {
    pub const ZERO: State = State { c1: 0.0, c2: 0.0 };

    pub const fn new(c1: f64, c2: f64) -> Self {
        Self { c1, c2 }
    }

    pub fn component(&self, index: usize) -> f64 {
        match index {
            0 => self.c1,
            1 => self.c2,
            _ => panic!("state component index {index} out of range"),
        }
    }

    pub fn norm(&self) -> f64 {
        self.c1.hypot(self.c2)
    }

    pub fn max_abs(&self) -> f64 {
        self.c1.abs().max(self.c2.abs())
    }
}

impl Add for State {
    type Output = State;
    fn add(self, rhs: State) -> State {
        State::new(self.c1 + rhs.c1, self.c2 + rhs.c2)
    }
}

impl Sub for State {
    type Output = State;
    fn sub(self, rhs: State) -> State {
        State::new(self.c1 - rhs.c1, self.c2 - rhs.c2)
    }
}

impl Neg for State {
    type Output = State;
    fn neg(self) -> State {
        State::new(-self.c1, -self.c2)
    }
}

impl Mul<f64> for State {
    type Output = State;
    fn mul(self, rhs: f64) -> State {
        State::new(self.c1 * rhs, self.c2 * rhs)
    }
}

impl Mul<State> for f64 {
    type Output = State;
    fn mul(self, rhs: State) -> State {
        rhs * self
    }
}

impl AddAssign for State {
    fn add_assign(&mut self, rhs: State) {
        self.c1 += rhs.c1;
        self.c2 += rhs.c2;
    }
}

impl SubAssign for State {
    fn sub_assign(&mut self, rhs: State) {
        self.c1 -= rhs.c1;
        self.c2 -= rhs.c2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemKind {
    PSystem,
    EulerianIsentropic,
    ShallowWater,
}

/// Pressure law and the constants needed to evaluate Riemann invariants.
///
/// `gamma` is the adiabatic exponent, except for shallow water where it holds
/// the gravitational constant. `m_ref` is the lower limit of the `g` integral
/// (the infimum of the initial specific volume) and is only used by the
/// p-system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureLaw {
    pub kind: SystemKind,
    pub k: f64,
    pub gamma: f64,
    pub m_ref: f64,
}

impl PressureLaw {
    pub fn p_system(k: f64, gamma: f64, m_ref: f64) -> Result<Self> {
        if !(k > 0.0) || !(gamma > 1.0) || !(m_ref > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "p-system needs k > 0, gamma > 1, m_ref > 0 (got k={k}, gamma={gamma}, m_ref={m_ref})"
            )));
        }
        Ok(Self {
            kind: SystemKind::PSystem,
            k,
            gamma,
            m_ref,
        })
    }

    pub fn eulerian(k: f64, gamma: f64) -> Result<Self> {
        if !(k > 0.0) || !(gamma > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "Eulerian system needs k > 0, gamma > 1 (got k={k}, gamma={gamma})"
            )));
        }
        Ok(Self {
            kind: SystemKind::EulerianIsentropic,
            k,
            gamma,
            m_ref: 1.0,
        })
    }

    pub fn shallow_water(gravity: f64) -> Result<Self> {
        if !(gravity > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "shallow water needs g > 0 (got {gravity})"
            )));
        }
        Ok(Self {
            kind: SystemKind::ShallowWater,
            k: 1.0,
            gamma: gravity,
            m_ref: 1.0,
        })
    }

    /// Same law with a different lower integration limit for `g`.
    pub fn with_m_ref(self, m_ref: f64) -> Result<Self> {
        if !(m_ref > 0.0) {
            return Err(Error::NonPositiveVolume(m_ref));
        }
        Ok(Self { m_ref, ..self })
    }

    /// `m_ref = min v` over initial-data samples (p-system only; other
    /// systems are returned unchanged).
    pub fn with_m_ref_from_samples(self, samples: &[State]) -> Result<Self> {
        if self.kind != SystemKind::PSystem {
            return Ok(self);
        }
        let m = samples.iter().map(|w| w.c1).fold(f64::INFINITY, f64::min);
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        self.with_m_ref(m)
    }

    pub fn gravity(&self) -> f64 {
        self.gamma
    }

    fn check(&self, c1: f64) -> Result<()> {
        match self.kind {
            SystemKind::PSystem if !(c1 > 0.0) => Err(Error::NonPositiveVolume(c1)),
            SystemKind::EulerianIsentropic | SystemKind::ShallowWater if !(c1 >= 0.0) => {
                Err(Error::NegativeDensity(c1))
            }
            _ => Ok(()),
        }
    }

    /// Velocity carried by a state; the conserved momentum is divided by the
    /// density except in (near-)vacuum, where the velocity is taken as 0.
    pub fn velocity(&self, w: State) -> f64 {
        match self.kind {
            SystemKind::PSystem => w.c2,
            _ if w.c1 < VACUUM_THRESHOLD => 0.0,
            _ => w.c2 / w.c1,
        }
    }

    pub fn pressure(&self, c1: f64) -> Result<f64> {
        self.check(c1)?;
        Ok(match self.kind {
            SystemKind::PSystem => self.k * c1.powf(-self.gamma),
            SystemKind::EulerianIsentropic => self.k * c1.powf(self.gamma),
            SystemKind::ShallowWater => 0.5 * self.gamma * c1 * c1,
        })
    }

    pub fn pressure_derivative(&self, c1: f64) -> Result<f64> {
        self.check(c1)?;
        Ok(match self.kind {
            SystemKind::PSystem => -self.k * self.gamma * c1.powf(-self.gamma - 1.0),
            SystemKind::EulerianIsentropic => self.k * self.gamma * c1.powf(self.gamma - 1.0),
            SystemKind::ShallowWater => self.gamma * c1,
        })
    }

    pub fn pressure_second_derivative(&self, c1: f64) -> Result<f64> {
        self.check(c1)?;
        Ok(match self.kind {
            SystemKind::PSystem => self.k * self.gamma * (self.gamma + 1.0) * c1.powf(-self.gamma - 2.0),
            SystemKind::EulerianIsentropic => self.k * self.gamma * (self.gamma - 1.0) * c1.powf(self.gamma - 2.0),
            SystemKind::ShallowWater => self.gamma,
        })
    }

    /// Characteristic speed without the advective part: `√(-p'(v))` for the
    /// p-system, `√(p'(c1))` otherwise.
    pub fn sound_speed(&self, c1: f64) -> Result<f64> {
        self.check(c1)?;
        Ok(match self.kind {
            SystemKind::PSystem => (self.k * self.gamma).sqrt() * c1.powf(-0.5 * (self.gamma + 1.0)),
            SystemKind::EulerianIsentropic => (self.k * self.gamma).sqrt() * c1.powf(0.5 * (self.gamma - 1.0)),
            SystemKind::ShallowWater => (self.gamma * c1).sqrt(),
        })
    }

    /// Inverse of [`sound_speed`](Self::sound_speed) for the p-system.
    pub fn volume_for_sound_speed(&self, c: f64) -> Result<f64> {
        if self.kind != SystemKind::PSystem {
            return Err(Error::UnsupportedSystem {
                op: "volume_for_sound_speed",
            });
        }
        if !(c > 0.0) {
            return Err(Error::NonPositiveVolume(f64::INFINITY));
        }
        Ok((c / (self.k * self.gamma).sqrt()).powf(-2.0 / (self.gamma + 1.0)))
    }

    /// Largest absolute eigenvalue of the flux Jacobian at `w`.
    pub fn wave_speed(&self, w: State) -> Result<f64> {
        let c = self.sound_speed(w.c1)?;
        Ok(match self.kind {
            SystemKind::PSystem => c,
            _ => self.velocity(w).abs() + c,
        })
    }

    pub fn flux(&self, w: State) -> Result<State> {
        let p = self.pressure(w.c1)?;
        Ok(match self.kind {
            SystemKind::PSystem => State::new(-w.c2, p),
            _ => State::new(w.c2, w.c2 * self.velocity(w) + p),
        })
    }

    fn g_scale(&self) -> f64 {
        2.0 * (self.k * self.gamma).sqrt() / (self.gamma - 1.0)
    }

    /// `g(v) = ∫_{m_ref}^v √(-p'(ξ)) dξ` in closed form (p-system only).
    pub fn g_integral(&self, v: f64) -> Result<f64> {
        if self.kind != SystemKind::PSystem {
            return Err(Error::UnsupportedSystem { op: "g_integral" });
        }
        self.check(v)?;
        let b = 0.5 * (self.gamma - 1.0);
        Ok(self.g_scale() * (self.m_ref.powf(-b) - v.powf(-b)))
    }

    /// Supremum of `g` as `v → ∞`.
    pub fn g_supremum(&self) -> f64 {
        let b = 0.5 * (self.gamma - 1.0);
        self.g_scale() * self.m_ref.powf(-b)
    }

    /// Closed-form inverse of [`g_integral`](Self::g_integral).
    pub fn g_inverse(&self, y: f64) -> Result<f64> {
        if self.kind != SystemKind::PSystem {
            return Err(Error::UnsupportedSystem { op: "g_inverse" });
        }
        let b = 0.5 * (self.gamma - 1.0);
        let base = self.m_ref.powf(-b) - y / self.g_scale();
        if !(base > 0.0) {
            return Err(Error::NonPositiveVolume(f64::INFINITY));
        }
        Ok(base.powf(-1.0 / b))
    }

    /// Sound-speed integral `T(c1)` for the Eulerian and shallow-water systems.
    fn speed_integral(&self, c1: f64) -> f64 {
        match self.kind {
            SystemKind::EulerianIsentropic => self.g_scale() * c1.powf(0.5 * (self.gamma - 1.0)),
            SystemKind::ShallowWater => 2.0 * (self.gamma * c1).sqrt(),
            SystemKind::PSystem => unreachable!("p-system uses g_integral"),
        }
    }

    fn speed_integral_inverse(&self, t: f64) -> f64 {
        match self.kind {
            SystemKind::EulerianIsentropic => (t / self.g_scale()).powf(2.0 / (self.gamma - 1.0)),
            SystemKind::ShallowWater => 0.25 * t * t / self.gamma,
            SystemKind::PSystem => unreachable!("p-system uses g_inverse"),
        }
    }

    /// Riemann invariants `(r, s)`.
    pub fn riemann_invariants(&self, w: State) -> Result<(f64, f64)> {
        self.check(w.c1)?;
        let u = self.velocity(w);
        match self.kind {
            SystemKind::PSystem => {
                let g = self.g_integral(w.c1)?;
                Ok((u - g, u + g))
            }
            _ => {
                let t = self.speed_integral(w.c1);
                Ok((u + t, u - t))
            }
        }
    }

    /// Recover the conserved state from a pair of Riemann invariants.
    pub fn from_invariants(&self, r: f64, s: f64) -> Result<State> {
        let u = 0.5 * (r + s);
        match self.kind {
            SystemKind::PSystem => Ok(State::new(self.g_inverse(0.5 * (s - r))?, u)),
            _ => {
                let t = 0.5 * (r - s);
                if t < 0.0 {
                    return Err(Error::NoIntersection { r0: r, s0: s });
                }
                let c1 = self.speed_integral_inverse(t);
                Ok(State::new(c1, c1 * u))
            }
        }
    }
}

/// `Σ = {r ≤ r0, s ≥ s0}` for a given pressure law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantRegion {
    pub r0: f64,
    pub s0: f64,
    pub law: PressureLaw,
}

impl InvariantRegion {
    pub fn new(law: PressureLaw, r0: f64, s0: f64) -> Self {
        Self { r0, s0, law }
    }

    /// `r0 = max r`, `s0 = min s` over the samples, using the law as given.
    pub fn from_samples(law: PressureLaw, samples: &[State]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        let mut r0 = f64::NEG_INFINITY;
        let mut s0 = f64::INFINITY;
        for w in samples {
            let (r, s) = law.riemann_invariants(*w)?;
            r0 = r0.max(r);
            s0 = s0.min(s);
        }
        Ok(Self { r0, s0, law })
    }

    /// Region from initial data: fixes `m_ref = min v` first (p-system), then
    /// takes the sampled extrema of the invariants.
    pub fn from_initial_samples(law: PressureLaw, samples: &[State]) -> Result<Self> {
        let law = law.with_m_ref_from_samples(samples)?;
        Self::from_samples(law, samples)
    }

    /// Region with every bound removed.
    pub fn unbounded(law: PressureLaw) -> Self {
        Self {
            r0: f64::INFINITY,
            s0: f64::NEG_INFINITY,
            law,
        }
    }

    /// `(r0 - r(w), s(w) - s0)`; both non-negative iff `w ∈ Σ`.
    pub fn margins(&self, w: State) -> Result<(f64, f64)> {
        let (r, s) = self.law.riemann_invariants(w)?;
        Ok((self.r0 - r, s - self.s0))
    }

    pub fn contains_with_slack(&self, w: State, slack: f64) -> bool {
        matches!(self.margins(w), Ok((a, b)) if a >= -slack && b >= -slack)
    }

    /// Closed-region membership with [`MEMBERSHIP_SLACK`].
    pub fn contains(&self, w: State) -> bool {
        self.contains_with_slack(w, MEMBERSHIP_SLACK)
    }

    /// Strict membership in the open region `Σ0`.
    pub fn contains_interior(&self, w: State) -> bool {
        matches!(self.margins(w), Ok((a, b)) if a > 0.0 && b > 0.0)
    }

    /// Intersection of the two boundary curves `r = r0` and `s = s0`.
    pub fn corner_state(&self) -> Result<State> {
        let half_gap = 0.5 * (self.s0 - self.r0);
        if self.law.kind == SystemKind::PSystem && half_gap >= self.law.g_supremum() {
            return Err(Error::NoIntersection {
                r0: self.r0,
                s0: self.s0,
            });
        }
        self.law
            .from_invariants(self.r0, self.s0)
            .map_err(|_| Error::NoIntersection {
                r0: self.r0,
                s0: self.s0,
            })
    }
}
