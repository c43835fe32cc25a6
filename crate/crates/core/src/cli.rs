//! Command-line surface: spectra, profiles and dynamics as CSV, validation and feasibility
//! reports as JSON.
//!
//! Settings are layered. Built-in command defaults sit at the bottom, then a
//! named preset, then a flat JSON config file, then command-line flags.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dynamics::{cross_validate, evolve_site, time_grid};
use crate::eigen::{analytic_eigenset_with_cutoff, biorthonormality_error, max_residual, verify_similarity, Branch};
use crate::error::{Error, Result};
use crate::ion::{proposal_check, IonParams};
use crate::model::{adiabatic_elimination_error, derive_couplings, BasisSpec, Level, ModelParams, StateVector};
use crate::observables::{cell_distribution, eigenset_observables};
use crate::uniform::{self, skin_profile, solve_uniform, UniformParams, ZERO_MODE_TOL};

pub const SCHEMA_VERSION: u32 = 1;

pub const RESIDUAL_TOL: f64 = 1e-8;
pub const BIORTHO_TOL: f64 = 1e-8;
pub const BIORTHO_MODES: usize = 50;
pub const SIMILARITY_TOL: f64 = 1e-6;
pub const SIMILARITY_N_MAX: usize = 200;
pub const ADIABATIC_TOL: f64 = 0.05;
pub const ADIABATIC_T_END: f64 = 5.0;
pub const ADIABATIC_T_STEPS: usize = 101;
pub const ADIABATIC_N_MAX: usize = 40;
pub const AGREEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "fockskin", version, about = "Non-reciprocal SSH model on a Fock-state lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Exact spectrum with per-mode mean cell and IPR
    Spectrum(RunConfig),
    /// Cell distribution of one eigenmode under the three skew settings
    Eigenstate(RunConfig),
    /// Normalized conditional evolution from a single site
    Dynamics(RunConfig),
    /// Spectrum and localization of the finite uniform chain
    Uniform(RunConfig),
    /// Numerical self-checks as a JSON report; nonzero exit on failure
    Validate(RunConfig),
    /// Trapped-ion feasibility report
    Ion(RunConfig),
    /// Summary observables over a one-parameter sweep
    Sweep(RunConfig),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Eigenstate(_) => "eigenstate",
            Command::Dynamics(_) => "dynamics",
            Command::Uniform(_) => "uniform",
            Command::Validate(_) => "validate",
            Command::Ion(_) => "ion",
            Command::Sweep(_) => "sweep",
        }
    }

    pub fn flags(&self) -> &RunConfig {
        match self {
            Command::Spectrum(c)
            | Command::Eigenstate(c)
            | Command::Dynamics(c)
            | Command::Uniform(c)
            | Command::Validate(c)
            | Command::Ion(c)
            | Command::Sweep(c) => c,
        }
    }
}

/// Every tunable of every command. Unset fields fall through to the next
/// layer; a config file may only contain these keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand the file is meant for; must match when present
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    /// Flat JSON config file
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub j1: Option<f64>,
    #[arg(long)]
    pub j2: Option<f64>,
    #[arg(long)]
    pub j3: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub n_modes: Option<usize>,
    /// Forces the Fock cutoff instead of choosing it automatically
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub t_steps: Option<usize>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub mode_n: Option<usize>,
    /// zero, minus or plus
    #[arg(long)]
    pub branch: Option<String>,
    /// Unit cells of the uniform chain
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub initial_cell: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub phonon_budget: Option<usize>,
    /// Laser wave number in 1/m; with --nu and --mass it determines eta
    #[arg(long)]
    pub k_l: Option<f64>,
    /// Trap angular frequency in rad/s
    #[arg(long)]
    pub nu: Option<f64>,
    /// Ion mass in kg
    #[arg(long)]
    pub mass: Option<f64>,
    /// j1, j2, j3, gamma or phi
    #[arg(long)]
    pub sweep_param: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub sweep_from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sweep_to: Option<f64>,
    #[arg(long)]
    pub sweep_points: Option<usize>,
    /// analytic or uniform
    #[arg(long)]
    pub sweep_model: Option<String>,
}

macro_rules! layer {
    ($base:expr, $top:expr; $($f:ident),* $(,)?) => {
        RunConfig { $($f: $top.$f.clone().or_else(|| $base.$f.clone())),* }
    };
}

impl RunConfig {
    /// Fields set in `top` win over those in `self`.
    pub fn overlay(&self, top: &RunConfig) -> RunConfig {
        layer!(self, top; command, config, preset, out, j1, j2, j3, gamma, phi, n_modes, n_max,
            t_end, t_steps, rtol, mode_n, branch, cells, initial_cell, eta, threshold, phonon_budget,
            k_l, nu, mass, sweep_param, sweep_from, sweep_to, sweep_points, sweep_model)
    }

    fn model(j1: f64, j3: f64, phi: f64) -> RunConfig {
        RunConfig { j1: Some(j1), j2: Some(1.0), j3: Some(j3), gamma: Some(50.0), phi: Some(phi), ..Default::default() }
    }

    /// Built-in defaults of a subcommand.
    pub fn defaults(command: &str) -> Result<RunConfig> {
        let base = RunConfig {
            rtol: Some(crate::dynamics::DEFAULT_RTOL),
            t_end: Some(crate::dynamics::DEFAULT_T_END),
            t_steps: Some(crate::dynamics::DEFAULT_T_STEPS),
            ..Default::default()
        };
        let specific = match command {
            "spectrum" => RunConfig { n_modes: Some(99), ..Self::model(0.6, 0.0, FRAC_PI_2) },
            "eigenstate" => RunConfig { mode_n: Some(0), branch: Some("zero".into()), ..Self::model(1.5, 3.0, FRAC_PI_2) },
            "dynamics" => RunConfig { initial_cell: Some(40), ..Self::model(0.6, 0.0, FRAC_PI_2) },
            "uniform" => RunConfig { cells: Some(100), ..Self::model(0.6, 0.0, FRAC_PI_2) },
            "validate" => RunConfig {
                n_modes: Some(61),
                initial_cell: Some(40),
                rtol: Some(1e-10),
                ..Self::model(1.5, 3.0, FRAC_PI_2)
            },
            "ion" => RunConfig {
                initial_cell: Some(10),
                eta: Some(0.05),
                threshold: Some(crate::ion::DEFAULT_THRESHOLD),
                phonon_budget: Some(crate::ion::DEFAULT_PHONON_BUDGET),
                ..Self::model(0.6, 3.0, FRAC_PI_2)
            },
            "sweep" => RunConfig {
                n_modes: Some(99),
                cells: Some(100),
                sweep_param: Some("j3".into()),
                sweep_from: Some(0.0),
                sweep_to: Some(3.0),
                sweep_points: Some(7),
                sweep_model: Some("analytic".into()),
                ..Self::model(0.6, 3.0, FRAC_PI_2)
            },
            other => return Err(Error::Config(format!("unknown command '{other}'"))),
        };
        Ok(base.overlay(&specific))
    }

    /// Named parameter sets. The fig3 and fig4 panels share parameters; the
    /// `:plus` and `:minus` suffixes select the J3 = 3, φ = ±π/2 series and
    /// the bare name the J3 = 0 series.
    pub fn preset(name: &str) -> Result<RunConfig> {
        let (panel, series) = match name.split_once(':') {
            Some((p, s)) => (p, Some(s)),
            None => (name, None),
        };
        let (j3, phi) = match series {
            None => (0.0, 0.0),
            Some("plus") => (3.0, FRAC_PI_2),
            Some("minus") => (3.0, -FRAC_PI_2),
            Some(other) => return Err(Error::Config(format!("unknown preset series '{other}' in '{name}'"))),
        };
        let fixed = |j1: f64| Self::model(j1, j3, phi);
        let cfg = match panel {
            "fig2" if series.is_none() => Self::model(1.5, 3.0, FRAC_PI_2),
            "fig3a" | "fig4a" => RunConfig { cells: Some(100), ..fixed(0.6) },
            "fig3b" | "fig4b" => RunConfig { cells: Some(100), ..fixed(1.5) },
            "fig3c" | "fig4c" => RunConfig { n_modes: Some(99), ..fixed(0.6) },
            "fig3d" | "fig4d" => RunConfig { n_modes: Some(99), ..fixed(1.5) },
            "fig5a" if series.is_none() => Self::model(0.6, 0.0, 0.0),
            "fig5b" if series.is_none() => Self::model(1.5, 0.0, 0.0),
            "fig5c" if series.is_none() => Self::model(0.6, 3.0, FRAC_PI_2),
            "fig5d" if series.is_none() => Self::model(1.5, 3.0, FRAC_PI_2),
            "fig5e" if series.is_none() => Self::model(0.6, 3.0, -FRAC_PI_2),
            "fig5f" if series.is_none() => Self::model(1.5, 3.0, -FRAC_PI_2),
            "proposal" if series.is_none() => RunConfig { initial_cell: Some(10), ..Self::model(0.6, 3.0, FRAC_PI_2) },
            _ => return Err(Error::Config(format!("unknown preset '{name}'"))),
        };
        let cfg = if panel.starts_with("fig5") { RunConfig { initial_cell: Some(40), ..cfg } } else { cfg };
        Ok(RunConfig { preset: Some(name.to_string()), ..cfg })
    }

    /// Parses a config document, reporting the offending line and column.
    pub fn from_json(text: &str, origin: &str) -> Result<RunConfig> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Applies the layering for `command` on top of the built-in defaults.
    pub fn resolve(command: &str, flags: &RunConfig) -> Result<RunConfig> {
        let file = match &flags.config {
            Some(path) => Self::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(c) = &file.command {
            if c != command {
                return Err(Error::Config(format!("config file is for '{c}', not '{command}'")));
            }
        }
        let preset = match flags.preset.as_ref().or(file.preset.as_ref()) {
            Some(name) => Self::preset(name)?,
            None => RunConfig::default(),
        };
        Ok(Self::defaults(command)?.overlay(&preset).overlay(&file).overlay(flags))
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(
            need(self.j1, "j1")?,
            need(self.j2, "j2")?,
            need(self.j3, "j3")?,
            need(self.gamma, "gamma")?,
            need(self.phi, "phi")?,
        )
    }

    fn times(&self) -> Result<Vec<f64>> {
        let t_end = need(self.t_end, "t_end")?;
        let steps = need(self.t_steps, "t_steps")?;
        if !(t_end > 0.0 && t_end.is_finite()) || steps < 2 {
            return Err(Error::Config(format!("time grid needs t_end > 0 and t_steps >= 2, got {t_end}, {steps}")));
        }
        Ok(time_grid(t_end, steps))
    }
}

fn need<T: Clone>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing value for '{key}'")))
}

/// 17 significant digits, enough to round-trip any f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(kind: &str, p: &ModelParams, extra: &[(&str, String)]) -> String {
    let mut s = format!(
        "# fockskin {kind} v{SCHEMA_VERSION} j1={} j2={} j3={} gamma={} phi={}",
        num(p.j1),
        num(p.j2),
        num(p.j3),
        num(p.gamma),
        num(p.phi)
    );
    for (k, v) in extra {
        let _ = write!(s, " {k}={v}");
    }
    s.push('\n');
    s
}

/// Rows (mode_n, branch, energy, mean_n, ipr) for the zero mode and
/// `n_modes` doublets.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<String> {
    let p = cfg.params()?;
    let n_modes = need(cfg.n_modes, "n_modes")?;
    let eig = analytic_eigenset_with_cutoff(&p, n_modes, cfg.n_max)?;
    let mut out = header("spectrum", &p, &[("n_modes", n_modes.to_string()), ("n_max", eig.basis.n_max().to_string())]);
    out.push_str("mode_n,branch,energy,mean_n,ipr\n");
    for (n, branch, obs) in eigenset_observables(&eig)? {
        let _ = writeln!(out, "{n},{},{},{},{}", branch.as_str(), num(obs.energy), num(obs.mean_n), num(obs.ipr));
    }
    Ok(out)
}

/// Rows (cell, p_reciprocal, p_plus, p_minus): the requested mode at J3 = 0
/// and at the configured J3 with φ = +|φ| and −|φ|.
pub fn cmd_eigenstate(cfg: &RunConfig) -> Result<String> {
    let p = cfg.params()?;
    let n = need(cfg.mode_n, "mode_n")?;
    let label = need(cfg.branch.clone(), "branch")?;
    let branch = Branch::parse(&label).ok_or_else(|| Error::UnknownMode(format!("branch '{label}'")))?;
    if branch == Branch::Zero && n != 0 {
        return Err(Error::UnknownMode(format!("the zero mode has no index {n}")));
    }
    let sets = [p.with_j3(0.0).with_phi(0.0), p.with_phi(p.phi.abs()), p.with_phi(-p.phi.abs())];
    let dists = sets
        .iter()
        .map(|q| {
            let eig = analytic_eigenset_with_cutoff(q, n + 1, cfg.n_max)?;
            let trip = eig.get(n, branch).ok_or_else(|| Error::UnknownMode(format!("({n}, {label})")))?;
            cell_distribution(&trip.right)
        })
        .collect::<Result<Vec<_>>>()?;
    let cells = dists.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = header("eigenstate", &p, &[("mode_n", n.to_string()), ("branch", branch.as_str().to_string())]);
    out.push_str("cell,p_reciprocal,p_plus,p_minus\n");
    for c in 0..cells {
        let at = |d: &Vec<f64>| num(d.get(c).copied().unwrap_or(0.0));
        let _ = writeln!(out, "{c},{},{},{}", at(&dists[0]), at(&dists[1]), at(&dists[2]));
    }
    Ok(out)
}

/// Long-format rows (t, cell, probability, norm, survival) of the normalized
/// evolution from |g, initial_cell⟩.
pub fn cmd_dynamics(cfg: &RunConfig) -> Result<String> {
    let p = cfg.params()?;
    let cell = need(cfg.initial_cell, "initial_cell")?;
    let times = cfg.times()?;
    let (eig, res) = evolve_site(&p, Level::G, cell, &times)?;
    let dists = res.distributions()?;
    let survival = res.survival.clone().unwrap_or_default();
    let mut out = header(
        "dynamics",
        &p,
        &[("initial", format!("g{cell}")), ("n_modes", eig.n_modes.to_string()), ("n_max", eig.basis.n_max().to_string())],
    );
    out.push_str("t,cell,probability,norm,survival\n");
    for (i, t) in res.times.iter().enumerate() {
        let (t, norm, surv) = (num(*t), num(res.norms[i]), num(survival[i]));
        for (c, prob) in dists[i].iter().enumerate() {
            let _ = writeln!(out, "{t},{c},{},{norm},{surv}", num(*prob));
        }
    }
    Ok(out)
}

/// Rows (energy, mean_n, ipr) of every mode of the uniform chain.
pub fn cmd_uniform(cfg: &RunConfig) -> Result<String> {
    let p = cfg.params()?;
    let up = UniformParams::new(p, need(cfg.cells, "cells")?)?;
    let eig = solve_uniform(&up)?;
    let mut out = header("uniform", &p, &[("cells", up.cells.to_string())]);
    out.push_str("energy,mean_n,ipr\n");
    for (e, mean, ipr) in skin_profile(&eig)? {
        let _ = writeln!(out, "{},{},{}", num(e), num(mean), num(ipr));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn below(name: &str, measured: Result<f64>, threshold: f64) -> Self {
        match measured {
            Ok(v) => Check { name: name.into(), value: Some(v), threshold, pass: v < threshold, detail: None },
            Err(e) => Check { name: name.into(), value: None, threshold, pass: false, detail: Some(e.to_string()) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub schema: String,
    pub version: u32,
    pub params: ModelParams,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

impl ValidationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is plain data");
        s.push('\n');
        s
    }
}

/// Residual, biorthonormality, similarity, adiabatic-elimination and
/// dynamics cross-checks at the configured parameters.
pub fn cmd_validate(cfg: &RunConfig) -> Result<ValidationReport> {
    let p = cfg.params()?;
    let n_modes = need(cfg.n_modes, "n_modes")?;
    let cell = need(cfg.initial_cell, "initial_cell")?;
    let rtol = need(cfg.rtol, "rtol")?;
    let times = cfg.times()?;

    let eig = analytic_eigenset_with_cutoff(&p, n_modes, cfg.n_max);
    let residual = eig.as_ref().map_err(Clone::clone).and_then(max_residual);
    let biortho = eig
        .as_ref()
        .map_err(Clone::clone)
        .map(|e| biorthonormality_error(e, BIORTHO_MODES.min(e.n_modes)));
    let init = StateVector::basis_state(&BasisSpec::effective(ADIABATIC_N_MAX), Level::G, 0)?;
    let adiabatic = adiabatic_elimination_error(&p, &init, ADIABATIC_T_END, ADIABATIC_T_STEPS);
    let adiabatic_tenfold = adiabatic_elimination_error(&p.with_gamma(10.0 * p.gamma), &init, ADIABATIC_T_END, ADIABATIC_T_STEPS);
    let shrink = match (&adiabatic, &adiabatic_tenfold) {
        (Ok(a), Ok(b)) if *a > 0.0 => Ok(b / a),
        (Ok(_), Ok(_)) => Err(Error::InvalidParams("elimination error is exactly zero".into())),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };

    let checks = vec![
        Check::below("eigen_residual", residual, RESIDUAL_TOL),
        Check::below("biorthonormality", biortho, BIORTHO_TOL),
        Check::below("similarity", verify_similarity(&p, SIMILARITY_N_MAX), SIMILARITY_TOL),
        Check::below("adiabatic_elimination", adiabatic, ADIABATIC_TOL),
        Check::below("adiabatic_elimination_gamma_x10_ratio", shrink, 1.0),
        Check::below("dynamics_agreement", cross_validate(&p, Level::G, cell, &times, rtol), AGREEMENT_TOL),
    ];
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(ValidationReport { schema: "fockskin-validate".into(), version: SCHEMA_VERSION, params: p, checks, all_pass })
}

/// Flat key-value report of the proposal check.
pub fn cmd_ion(cfg: &RunConfig) -> Result<String> {
    let p = cfg.params()?;
    let threshold = need(cfg.threshold, "threshold")?;
    let ion = match (cfg.k_l, cfg.nu, cfg.mass) {
        (Some(k), Some(nu), Some(m)) => IonParams::from_trap(k, nu, m, threshold)?,
        (None, None, None) => IonParams::new(need(cfg.eta, "eta")?, threshold)?,
        _ => return Err(Error::Config("k_l, nu and mass must be given together".into())),
    };
    let ion = ion.with_phonon_budget(need(cfg.phonon_budget, "phonon_budget")?);
    let report = proposal_check(&p, need(cfg.initial_cell, "initial_cell")?, &ion, &cfg.times()?)?;
    let mut doc = Map::new();
    doc.insert("schema".into(), Value::from("fockskin-ion"));
    doc.insert("version".into(), Value::from(SCHEMA_VERSION));
    for (k, v) in [("j1", p.j1), ("j2", p.j2), ("j3", p.j3), ("gamma", p.gamma), ("phi", p.phi)] {
        doc.insert(k.into(), Value::from(v));
    }
    if let Value::Object(fields) = serde_json::to_value(&report).expect("report is plain data") {
        doc.extend(fields);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("report is plain data");
    s.push('\n');
    Ok(s)
}

fn set_param(p: ModelParams, name: &str, v: f64) -> Result<ModelParams> {
    Ok(match name {
        "j1" => p.with_j1(v),
        "j2" => ModelParams { j2: v, ..p },
        "j3" => p.with_j3(v),
        "gamma" => p.with_gamma(v),
        "phi" => p.with_phi(v),
        other => return Err(Error::Config(format!("unknown sweep parameter '{other}'"))),
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    sum / count as f64
}

fn sweep_point(model: &str, p: &ModelParams, cfg: &RunConfig) -> Result<String> {
    p.validate()?;
    let g = derive_couplings(p).g;
    match model {
        "analytic" => {
            let eig = analytic_eigenset_with_cutoff(p, need(cfg.n_modes, "n_modes")?, cfg.n_max)?;
            let obs = eigenset_observables(&eig)?;
            let zero = &obs[0].2;
            Ok(format!(
                "{},{},{},{},{},{}",
                num(g),
                num(mean(obs.iter().map(|o| o.2.mean_n))),
                num(mean(obs.iter().map(|o| o.2.ipr))),
                num(zero.mean_n),
                num(zero.ipr),
                num(max_residual(&eig)?)
            ))
        }
        "uniform" => {
            let up = UniformParams::new(*p, need(cfg.cells, "cells")?)?;
            let eig = solve_uniform(&up)?;
            let profile = skin_profile(&eig)?;
            let zeros = eig.modes.iter().filter(|m| m.energy.abs() < ZERO_MODE_TOL * p.j2).count();
            Ok(format!(
                "{},{},{},{},{},{}",
                num(g),
                num(mean(profile.iter().map(|r| r.1))),
                num(mean(profile.iter().map(|r| r.2))),
                num(eig.reduction.t_intra),
                zeros,
                num(uniform::max_residual(&eig))
            ))
        }
        other => Err(Error::Config(format!("unknown sweep model '{other}'"))),
    }
}

/// One row per sweep point, computed in parallel and emitted in grid order.
/// Points where the model is undefined carry the error in `status`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<String> {
    let p = cfg.params()?;
    let name = need(cfg.sweep_param.clone(), "sweep_param")?;
    let model = need(cfg.sweep_model.clone(), "sweep_model")?;
    let (from, to) = (need(cfg.sweep_from, "sweep_from")?, need(cfg.sweep_to, "sweep_to")?);
    let points = need(cfg.sweep_points, "sweep_points")?;
    if points == 0 {
        return Err(Error::Config("sweep_points must be positive".into()));
    }
    let columns = match model.as_str() {
        "analytic" => "g,mean_mean_n,mean_ipr,zero_mode_mean_n,zero_mode_ipr,max_residual",
        "uniform" => "g,mean_mean_n,mean_ipr,t_intra,zero_modes,max_residual",
        other => return Err(Error::Config(format!("unknown sweep model '{other}'"))),
    };
    set_param(p, &name, from)?;
    let values: Vec<f64> = if points == 1 {
        vec![from]
    } else {
        (0..points).map(|i| from + (to - from) * i as f64 / (points - 1) as f64).collect()
    };
    let blanks = ",".repeat(columns.matches(',').count());
    let rows: Vec<String> = values
        .par_iter()
        .map(|&v| {
            let row = set_param(p, &name, v).and_then(|q| sweep_point(&model, &q, cfg));
            match row {
                Ok(r) => format!("{},{r},ok", num(v)),
                Err(e) => format!("{},{blanks},{}", num(v), e.to_string().replace([',', '\n'], ";")),
            }
        })
        .collect();
    let mut out = header("sweep", &p, &[("param", name.clone()), ("model", model.clone())]);
    let _ = writeln!(out, "{name},{columns},status");
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    Ok(out)
}

/// Output of a command and whether it counts as success.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub success: bool,
    pub out: Option<PathBuf>,
}

pub fn run(command: &Command) -> Result<Outcome> {
    let cfg = RunConfig::resolve(command.name(), command.flags())?;
    let (text, success) = match command {
        Command::Spectrum(_) => (cmd_spectrum(&cfg)?, true),
        Command::Eigenstate(_) => (cmd_eigenstate(&cfg)?, true),
        Command::Dynamics(_) => (cmd_dynamics(&cfg)?, true),
        Command::Uniform(_) => (cmd_uniform(&cfg)?, true),
        Command::Validate(_) => {
            let report = cmd_validate(&cfg)?;
            (report.to_json(), report.all_pass)
        }
        Command::Ion(_) => (cmd_ion(&cfg)?, true),
        Command::Sweep(_) => (cmd_sweep(&cfg)?, true),
    };
    Ok(Outcome { text, success, out: cfg.out })
}

/// Writes the outcome to its destination file or to stdout.
pub fn emit(outcome: &Outcome) -> Result<()> {
    match &outcome.out {
        Some(path) => std::fs::write(path, &outcome.text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(outcome.text.as_bytes()).map_err(|e| Error::Io(e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering_order() {
        let flags = RunConfig { j1: Some(0.9), preset: Some("fig5d".into()), ..Default::default() };
        let cfg = RunConfig::resolve("dynamics", &flags).unwrap();
        assert_eq!(cfg.j1, Some(0.9));
        assert_eq!(cfg.j3, Some(3.0));
        assert_eq!(cfg.initial_cell, Some(40));
        assert_eq!(cfg.t_steps, Some(400));
    }

    #[test]
    fn unknown_key_reports_position() {
        let err = RunConfig::from_json("{\n  \"j1\": 0.6,\n  \"bogus\": 1\n}", "cfg.json").unwrap_err();
        match err {
            Error::Config(msg) => assert!(msg.starts_with("cfg.json:3:"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn presets_are_complete() {
        for name in ["fig2", "fig3a", "fig3b:plus", "fig4d:minus", "fig5a", "fig5f", "proposal"] {
            let cfg = RunConfig::preset(name).unwrap();
            assert!(cfg.params().is_ok(), "{name}");
        }
        assert!(RunConfig::preset("fig9").is_err());
        assert!(RunConfig::preset("fig5a:plus").is_err());
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
