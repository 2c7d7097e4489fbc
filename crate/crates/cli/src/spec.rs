//! Run specification: flags, flat `key = value` config files and the
//! resolved form echoed as a reproducibility header.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use irp_core::harness::{ExperimentPreset, PresetId, GAMMA};
use irp_core::schemes::{CflMode, DtPolicy, SchemeConfig};
use irp_core::{PressureLaw, State, SystemKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Table,
    Riemann,
    Scan,
    Theta,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Table => "table",
            Command::Riemann => "riemann",
            Command::Scan => "scan",
            Command::Theta => "theta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimiterSetting {
    On,
    Off,
    Both,
}

impl LimiterSetting {
    pub fn configurations(self) -> &'static [bool] {
        match self {
            LimiterSetting::On => &[true],
            LimiterSetting::Off => &[false],
            LimiterSetting::Both => &[true, false],
        }
    }
}

/// Every flag as an optional raw value; the same keys are accepted in
/// config files.
#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// ex1 … ex6
    #[arg(long)]
    pub preset: Option<String>,
    /// psystem | euler | shallow
    #[arg(long)]
    pub system: Option<String>,
    /// Adiabatic exponent (gravity for shallow water).
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub k_const: Option<String>,
    #[arg(long)]
    pub degree: Option<String>,
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub beta0: Option<String>,
    #[arg(long)]
    pub beta1: Option<String>,
    #[arg(long)]
    pub gamma_t: Option<String>,
    /// first-order | convective | viscous-second | viscous-third
    #[arg(long)]
    pub cfl_mode: Option<String>,
    /// Cells on the base mesh (on [-1, 1] for Riemann presets).
    #[arg(long)]
    pub cells: Option<String>,
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub t_final: Option<String>,
    /// theorem | paper
    #[arg(long)]
    pub dt_policy: Option<String>,
    /// on | off | both
    #[arg(long)]
    pub limiter: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<String>,
    /// Left Riemann state `v,u`.
    #[arg(long, allow_hyphen_values = true)]
    pub left: Option<String>,
    /// Right Riemann state `v,u`.
    #[arg(long, allow_hyphen_values = true)]
    pub right: Option<String>,
    /// Sampling time of the exact solution.
    #[arg(long)]
    pub t: Option<String>,
    /// Sample count (riemann) or samples per cell (run, scan).
    #[arg(long)]
    pub samples: Option<String>,
}

pub const KEYS: [&str; 20] = [
    "preset",
    "system",
    "gamma",
    "k-const",
    "degree",
    "epsilon",
    "beta0",
    "beta1",
    "gamma-t",
    "cfl-mode",
    "cells",
    "levels",
    "t-final",
    "dt-policy",
    "limiter",
    "out",
    "left",
    "right",
    "t",
    "samples",
];

impl Flags {
    fn pairs(&self) -> [(&'static str, &Option<String>); 20] {
        [
            ("preset", &self.preset),
            ("system", &self.system),
            ("gamma", &self.gamma),
            ("k-const", &self.k_const),
            ("degree", &self.degree),
            ("epsilon", &self.epsilon),
            ("beta0", &self.beta0),
            ("beta1", &self.beta1),
            ("gamma-t", &self.gamma_t),
            ("cfl-mode", &self.cfl_mode),
            ("cells", &self.cells),
            ("levels", &self.levels),
            ("t-final", &self.t_final),
            ("dt-policy", &self.dt_policy),
            ("limiter", &self.limiter),
            ("out", &self.out),
            ("left", &self.left),
            ("right", &self.right),
            ("t", &self.t),
            ("samples", &self.samples),
        ]
    }
}

/// Parses a flat config file. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`, got `{}`", n + 1, raw.trim());
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            bail!("config line {}: unknown key `{key}`", n + 1);
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            bail!("config line {}: duplicate key `{key}`", n + 1);
        }
    }
    Ok(map)
}

fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("--config: cannot read {}", path.display()))?;
    parse_config_text(&text).with_context(|| format!("--config {}", path.display()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub preset: Option<PresetId>,
    pub system: SystemKind,
    pub gamma: f64,
    pub k_const: f64,
    pub degree: usize,
    pub epsilon: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub gamma_t: f64,
    pub cfl_mode: CflMode,
    pub cells: usize,
    pub levels: usize,
    pub t_final: f64,
    pub dt_policy: DtPolicy,
    pub limiter: LimiterSetting,
    pub out: PathBuf,
    pub left: Option<State>,
    pub right: Option<State>,
    pub t: f64,
    pub samples: usize,
}

struct Raw(BTreeMap<String, String>);

impl Raw {
    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow::anyhow!("--{key}: invalid value `{v}`: {e}"))
            })
            .transpose()
    }

    fn state(&self, key: &str) -> Result<Option<State>> {
        self.get(key)
            .map(|v| {
                let parts: Vec<&str> = v.split(',').map(str::trim).collect();
                match parts.as_slice() {
                    [a, b] => match (a.parse::<f64>(), b.parse::<f64>()) {
                        (Ok(a), Ok(b)) => Ok(State::new(a, b)),
                        _ => bail!("--{key}: expected two numbers `v,u`, got `{v}`"),
                    },
                    _ => bail!("--{key}: expected `v,u`, got `{v}`"),
                }
            })
            .transpose()
    }
}

fn system_name(kind: SystemKind) -> &'static str {
    match kind {
        SystemKind::PSystem => "psystem",
        SystemKind::EulerianIsentropic => "euler",
        SystemKind::ShallowWater => "shallow",
    }
}

fn mode_name(mode: CflMode) -> &'static str {
    match mode {
        CflMode::FirstOrder => "first-order",
        CflMode::HighOrderConvective => "convective",
        CflMode::ViscousSecond => "viscous-second",
        CflMode::ViscousThird => "viscous-third",
    }
}

fn choice<T: Copy>(key: &str, value: &str, options: &[(&str, T)]) -> Result<T> {
    options
        .iter()
        .find(|(name, _)| *name == value)
        .map(|&(_, v)| v)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            anyhow::anyhow!("--{key}: expected one of {}, got `{value}`", names.join(", "))
        })
}

const MODES: [(&str, CflMode); 4] = [
    ("first-order", CflMode::FirstOrder),
    ("convective", CflMode::HighOrderConvective),
    ("viscous-second", CflMode::ViscousSecond),
    ("viscous-third", CflMode::ViscousThird),
];

impl RunSpec {
    /// Merges the config file (if any) under the command-line flags and
    /// resolves every default.
    pub fn parse(command: Command, flags: &Flags) -> Result<Self> {
        let mut raw = match &flags.config {
            Some(path) => parse_config_file(path)?,
            None => BTreeMap::new(),
        };
        for (key, value) in flags.pairs() {
            if let Some(v) = value {
                raw.insert(key.to_string(), v.clone());
            }
        }
        Self::resolve(command, Raw(raw))
    }

    fn resolve(command: Command, raw: Raw) -> Result<Self> {
        let preset = raw
            .get("preset")
            .map(|p| PresetId::parse(p).ok_or_else(|| anyhow::anyhow!("--preset: unknown preset `{p}` (ex1 … ex6)")))
            .transpose()?;
        if preset.is_none() && command != Command::Riemann {
            bail!("--preset is required for `{}`", command.name());
        }
        let base = preset.map(ExperimentPreset::new);
        let riemann_preset = base.as_ref().and_then(|p| p.riemann);

        let system = match raw.get("system") {
            Some(s) => choice(
                "system",
                s,
                &[
                    ("psystem", SystemKind::PSystem),
                    ("euler", SystemKind::EulerianIsentropic),
                    ("shallow", SystemKind::ShallowWater),
                ],
            )?,
            None => SystemKind::PSystem,
        };
        let gamma = raw.parse("gamma")?.unwrap_or(match system {
            SystemKind::ShallowWater => 9.81,
            _ => GAMMA,
        });
        let k_const = raw.parse("k-const")?.unwrap_or(1.0);
        let degree: usize = raw.parse("degree")?.unwrap_or(1);
        let epsilon = raw
            .parse("epsilon")?
            .unwrap_or_else(|| base.as_ref().map_or(0.0, |p| p.epsilon));
        let cfl_mode = match raw.get("cfl-mode") {
            Some(m) => choice("cfl-mode", m, &MODES)?,
            None => SchemeConfig::default_mode(degree, epsilon),
        };
        let beta0 = raw.parse("beta0")?.unwrap_or(2.0);
        let beta1 = raw.parse("beta1")?.unwrap_or(0.25);
        let law = build_law(system, gamma, k_const)?;
        let gamma_t = match raw.parse("gamma-t")? {
            Some(g) => g,
            None => SchemeConfig::new(law, degree, cfl_mode, epsilon).gamma_t,
        };
        let default_cells = match &base {
            Some(p) if p.window.is_some() => 128,
            Some(p) => p.base_cells,
            None => 128,
        };
        let cells: usize = raw.parse("cells")?.unwrap_or(default_cells);
        let levels: usize = raw.parse("levels")?.unwrap_or(4);
        let t_final = raw
            .parse("t-final")?
            .unwrap_or_else(|| base.as_ref().map_or(0.1, |p| p.t_final));
        let dt_policy = match raw.get("dt-policy") {
            Some(p) => choice(
                "dt-policy",
                p,
                &[
                    ("theorem", DtPolicy::TheoremBound),
                    ("paper", DtPolicy::PaperExperiment),
                ],
            )?,
            None if command == Command::Table => DtPolicy::PaperExperiment,
            None => DtPolicy::TheoremBound,
        };
        let limiter = match raw.get("limiter") {
            Some(l) => choice(
                "limiter",
                l,
                &[
                    ("on", LimiterSetting::On),
                    ("off", LimiterSetting::Off),
                    ("both", LimiterSetting::Both),
                ],
            )?,
            None if command == Command::Table => LimiterSetting::Both,
            None => LimiterSetting::On,
        };
        let out = PathBuf::from(raw.get("out").unwrap_or("out"));
        let left = raw.state("left")?.or(riemann_preset.map(|(l, _)| l));
        let right = raw.state("right")?.or(riemann_preset.map(|(_, r)| r));
        let t = raw.parse("t")?.unwrap_or(t_final);
        let samples = raw.parse("samples")?.unwrap_or(match command {
            Command::Riemann => 512,
            Command::Scan => 16,
            _ => 4,
        });

        let spec = RunSpec {
            command,
            preset,
            system,
            gamma,
            k_const,
            degree,
            epsilon,
            beta0,
            beta1,
            gamma_t,
            cfl_mode,
            cells,
            levels,
            t_final,
            dt_policy,
            limiter,
            out,
            left,
            right,
            t,
            samples,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.cells == 0 {
            bail!("--cells: must be ≥ 1");
        }
        if self.levels == 0 {
            bail!("--levels: must be ≥ 1");
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            bail!("--t-final: must be finite and ≥ 0 (got {})", self.t_final);
        }
        if self.samples == 0 {
            bail!("--samples: must be ≥ 1");
        }
        if self.command == Command::Riemann {
            if self.left.is_none() || self.right.is_none() {
                bail!("--left and --right are required without a Riemann preset");
            }
            if !(self.t > 0.0 && self.t.is_finite()) {
                bail!("--t: must be finite and > 0 (got {})", self.t);
            }
            if self.system != SystemKind::PSystem {
                bail!("--system: the exact Riemann solver supports psystem only");
            }
            return Ok(());
        }
        let law = self.law()?;
        for &limiter in self.limiter.configurations() {
            self.scheme(law, limiter).validate().map_err(|e| {
                anyhow::anyhow!("{} (--cfl-mode {}): {e}", self.scheme_flags(), mode_name(self.cfl_mode))
            })?;
        }
        Ok(())
    }

    fn scheme_flags(&self) -> String {
        format!(
            "--degree {} --epsilon {} --beta0 {} --beta1 {} --gamma-t {}",
            self.degree, self.epsilon, self.beta0, self.beta1, self.gamma_t
        )
    }

    pub fn law(&self) -> Result<PressureLaw> {
        build_law(self.system, self.gamma, self.k_const)
    }

    /// Preset rebuilt under the requested law.
    pub fn preset(&self) -> Result<ExperimentPreset> {
        let id = self.preset.context("--preset is required")?;
        let p = ExperimentPreset::new(id).with_law(self.law()?)?;
        let p = match p.window {
            Some(_) => p.with_window_cells(self.cells),
            None => ExperimentPreset {
                base_cells: self.cells,
                ..p
            },
        };
        Ok(ExperimentPreset {
            t_final: self.t_final,
            epsilon: self.epsilon,
            ..p
        })
    }

    pub fn scheme(&self, law: PressureLaw, limiter: bool) -> SchemeConfig {
        let mut cfg = SchemeConfig::new(law, self.degree, self.cfl_mode, self.epsilon);
        cfg.flux.beta0 = self.beta0;
        cfg.flux.beta1 = self.beta1;
        cfg.gamma_t = self.gamma_t;
        cfg.dt_policy = self.dt_policy;
        cfg.limiter_enabled = limiter;
        cfg
    }

    /// Resolved specification in config-file syntax.
    pub fn header(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# irp {}", self.command.name());
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        if let Some(p) = self.preset {
            kv("preset", p.name().to_string());
        }
        kv("system", system_name(self.system).into());
        kv("gamma", self.gamma.to_string());
        kv("k-const", self.k_const.to_string());
        kv("degree", self.degree.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("beta0", self.beta0.to_string());
        kv("beta1", self.beta1.to_string());
        kv("gamma-t", self.gamma_t.to_string());
        kv("cfl-mode", mode_name(self.cfl_mode).into());
        kv("cells", self.cells.to_string());
        kv("levels", self.levels.to_string());
        kv("t-final", self.t_final.to_string());
        kv(
            "dt-policy",
            match self.dt_policy {
                DtPolicy::TheoremBound => "theorem",
                DtPolicy::PaperExperiment => "paper",
            }
            .into(),
        );
        kv(
            "limiter",
            match self.limiter {
                LimiterSetting::On => "on",
                LimiterSetting::Off => "off",
                LimiterSetting::Both => "both",
            }
            .into(),
        );
        kv("out", self.out.display().to_string());
        if let Some(w) = self.left {
            kv("left", format!("{},{}", w.c1, w.c2));
        }
        if let Some(w) = self.right {
            kv("right", format!("{},{}", w.c1, w.c2));
        }
        kv("t", self.t.to_string());
        kv("samples", self.samples.to_string());
        out
    }
}

fn build_law(system: SystemKind, gamma: f64, k: f64) -> Result<PressureLaw> {
    let law = match system {
        SystemKind::PSystem => PressureLaw::p_system(k, gamma, 1.0),
        SystemKind::EulerianIsentropic => PressureLaw::eulerian(k, gamma),
        SystemKind::ShallowWater => PressureLaw::shallow_water(gamma),
    };
    law.map_err(|e| anyhow::anyhow!("--system/--gamma/--k-const: {e}"))
}
