//! Run configuration: a TOML file with `noise`, `oscillator`, `numerics`,
//! `output` and per-command sections. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use kerrnoise::{BathGroup, NoiseComponent, NoiseModel, Nonlinearity, OscillatorModel, SpectralTable};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const PAPER_FIG1: &str = include_str!("../presets/paper_fig1.toml");
pub const PAPER_FIG3: &str = include_str!("../presets/paper_fig3.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub noise: NoiseSection,
    pub oscillator: OscillatorSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub g2tau: G2TauSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub oracle: OracleSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub omega_min: f64,
    pub omega_max: f64,
    #[serde(default, rename = "component")]
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentSpec {
    /// `W_S = Γ/ω`
    OneOverF { gamma: f64 },
    /// `W_A = Γ ω^s` at inverse temperature `β`
    SuperOhmic { gamma: f64, s: f64, beta: f64 },
    /// `W_A = Γ` at inverse temperature `β`; `beta = inf` is a cold detector
    Flat { gamma: f64, beta: f64 },
    /// Three columns `ω W_S W_A`
    Table { path: PathBuf, group: GroupSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupSpec {
    Classical,
    Phonon,
    Detector,
}

impl From<GroupSpec> for BathGroup {
    fn from(g: GroupSpec) -> Self {
        match g {
            GroupSpec::Classical => BathGroup::Classical,
            GroupSpec::Phonon => BathGroup::Phonon,
            GroupSpec::Detector => BathGroup::Detector,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorSection {
    pub omega: f64,
    pub chi: f64,
    /// Tabulated `U(n)` replacing the Kerr term `n(n−1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_table: Option<PathBuf>,
    /// Fixed truncation; chosen from the population tail when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSection {
    pub tail_tol: f64,
    pub truncation_cap: usize,
    /// `|C(t)|` threshold for the memory time; `√(min quantum W_A)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory_threshold: Option<f64>,
    pub memory_step: f64,
    pub memory_horizon: f64,
    pub quadrature_tol: f64,
    pub force_resolvent: bool,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let mt = kerrnoise::MemoryTimeOptions::default();
        Self {
            tail_tol: 1e-15,
            truncation_cap: kerrnoise::oscillator::TRUNCATION_CAP,
            memory_threshold: None,
            memory_step: mt.step,
            memory_horizon: mt.horizon,
            quadrature_tol: mt.tolerance,
            force_resolvent: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub plot: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            plot: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Log
}

impl Axis {
    pub fn log(min: f64, max: f64, points: usize) -> Self {
        Self {
            min,
            max,
            points,
            spacing: Spacing::Log,
        }
    }

    /// Sorted, de-duplicated sample values.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        let mut v: Vec<f64> = if n == 1 || self.min == self.max {
            vec![self.min]
        } else {
            (0..n)
                .map(|i| {
                    let t = i as f64 / (n - 1) as f64;
                    if i == 0 {
                        return self.min;
                    }
                    if i == n - 1 {
                        return self.max;
                    }
                    match self.spacing {
                        Spacing::Linear => self.min + (self.max - self.min) * t,
                        Spacing::Log => (self.min.ln() + (self.max / self.min).ln() * t).exp(),
                    }
                })
                .collect()
        };
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    fn validate(&self, name: &str) -> Result<(), CliError> {
        let floor_ok = match self.spacing {
            Spacing::Log => self.min > 0.0,
            Spacing::Linear => self.min >= 0.0,
        };
        if !(self.min.is_finite() && self.max.is_finite() && floor_ok && self.max >= self.min) {
            return Err(CliError::Config(format!(
                "{name}: need min <= max with min > 0 (min >= 0 for linear spacing), got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.points == 0 {
            return Err(CliError::Config(format!("{name}: points must be >= 1")));
        }
        Ok(())
    }
}

/// Parses `min:max:points`.
pub fn parse_axis(text: &str) -> Result<Axis, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected min:max:points, got {text:?}"));
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    let points = parts[2].trim().parse::<usize>().map_err(|e| format!("{:?}: {e}", parts[2]))?;
    Ok(Axis::log(num(parts[0])?, num(parts[1])?, points))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub chi: Axis,
    pub omega: Axis,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            chi: Axis::log(0.1, 10.0, 20),
            omega: Axis::log(0.1, 10.0, 20),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct G2TauSection {
    pub tau_max: f64,
    pub steps: usize,
}

impl Default for G2TauSection {
    fn default() -> Self {
        Self {
            tau_max: 5000.0,
            steps: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    /// Output window; the noise cutoffs when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_hi: Option<f64>,
    pub points: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            omega_lo: None,
            omega_hi: None,
            points: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub n_max: usize,
    pub tau_max: f64,
    pub tau_points: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            n_max: 6,
            tau_max: 2000.0,
            tau_points: 20,
        }
    }
}

impl RunConfig {
    /// Parses and validates; relative table paths are resolved against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(base) = base {
            cfg.resolve_paths(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        match name {
            "paper_fig1" => Self::parse(PAPER_FIG1, None),
            "paper_fig3" => Self::parse(PAPER_FIG3, None),
            other => Err(CliError::Config(format!(
                "unknown preset {other:?} (available: paper_fig1, paper_fig3)"
            ))),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for c in &mut self.noise.components {
            if let ComponentSpec::Table { path, .. } = c {
                fix(path);
            }
        }
        if let Some(p) = &mut self.oscillator.u_table {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let n = &self.noise;
        if !(n.omega_min > 0.0 && n.omega_max > n.omega_min && n.omega_max.is_finite()) {
            return bad(format!(
                "noise: need 0 < omega_min < omega_max, got [{}, {}]",
                n.omega_min, n.omega_max
            ));
        }
        for c in &n.components {
            if let ComponentSpec::Table { path, .. } = c {
                if !path.is_file() {
                    return bad(format!("noise table {} does not exist", path.display()));
                }
            }
        }
        let o = &self.oscillator;
        if !(o.omega.is_finite() && o.omega > 0.0) {
            return bad(format!("oscillator.omega must be > 0, got {}", o.omega));
        }
        if !(o.chi.is_finite() && o.chi >= 0.0) {
            return bad(format!("oscillator.chi must be >= 0, got {}", o.chi));
        }
        if o.n_max == Some(0) {
            return bad("oscillator.n_max must be >= 1".into());
        }
        if let Some(p) = &o.u_table {
            if !p.is_file() {
                return bad(format!("u_table {} does not exist", p.display()));
            }
        }
        let m = &self.numerics;
        if !(m.tail_tol > 0.0 && m.tail_tol < 1.0) {
            return bad(format!("numerics.tail_tol must lie in (0, 1), got {}", m.tail_tol));
        }
        if m.truncation_cap < 2 {
            return bad("numerics.truncation_cap must be >= 2".into());
        }
        if m.memory_threshold.is_some_and(|t| !(t > 0.0)) {
            return bad("numerics.memory_threshold must be > 0".into());
        }
        if !(m.memory_step > 0.0 && m.memory_horizon > m.memory_step && m.quadrature_tol > 0.0) {
            return bad("numerics: memory_step, memory_horizon and quadrature_tol must be positive".into());
        }
        self.sweep.chi.validate("sweep.chi")?;
        self.sweep.omega.validate("sweep.omega")?;
        let g = &self.g2tau;
        if !(g.tau_max > 0.0 && g.tau_max.is_finite()) || g.steps == 0 {
            return bad("g2tau: need tau_max > 0 and steps >= 1".into());
        }
        let s = &self.spectrum;
        if s.points < 2 {
            return bad("spectrum.points must be >= 2".into());
        }
        let (lo, hi) = self.spectrum_window();
        if !(lo > 0.0 && hi > lo) {
            return bad(format!("spectrum window [{lo}, {hi}] is empty"));
        }
        let r = &self.oracle;
        if r.n_max == 0 || r.tau_points == 0 || !(r.tau_max > 0.0) {
            return bad("oracle: need n_max >= 1, tau_points >= 1, tau_max > 0".into());
        }
        Ok(())
    }

    pub fn spectrum_window(&self) -> (f64, f64) {
        (
            self.spectrum.omega_lo.unwrap_or(self.noise.omega_min),
            self.spectrum.omega_hi.unwrap_or(self.noise.omega_max),
        )
    }

    pub fn noise_model(&self) -> Result<NoiseModel, CliError> {
        let components = self
            .noise
            .components
            .iter()
            .map(|c| {
                Ok(match c {
                    ComponentSpec::OneOverF { gamma } => NoiseComponent::Classical1OverF { gamma: *gamma },
                    ComponentSpec::SuperOhmic { gamma, s, beta } => NoiseComponent::SuperOhmicThermal {
                        gamma: *gamma,
                        s: *s,
                        beta: *beta,
                    },
                    ComponentSpec::Flat { gamma, beta } => NoiseComponent::FlatThermal {
                        gamma: *gamma,
                        beta: *beta,
                    },
                    ComponentSpec::Table { path, group } => {
                        NoiseComponent::Tabulated(SpectralTable::from_path(path, (*group).into())?)
                    }
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(NoiseModel::new(components, self.noise.omega_min, self.noise.omega_max)?)
    }

    /// The oscillator at `(Ω, χ)`; `n_max` is the configured one or 1 as a
    /// placeholder for automatic truncation.
    pub fn oscillator_at(&self, omega: f64, chi: f64) -> Result<OscillatorModel, CliError> {
        let nl = match &self.oscillator.u_table {
            Some(p) => Nonlinearity::from_path(p)?,
            None => Nonlinearity::Kerr,
        };
        Ok(OscillatorModel::new(omega, chi, nl, self.oscillator.n_max.unwrap_or(1))?)
    }

    pub fn oscillator(&self) -> Result<OscillatorModel, CliError> {
        self.oscillator_at(self.oscillator.omega, self.oscillator.chi)
    }

    /// SHA-256 of the canonical serialization of the effective configuration.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("configuration serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        let c = RunConfig::preset("paper_fig1").unwrap();
        assert_eq!(c.noise.components.len(), 3);
        assert_eq!(c.noise_model().unwrap(), kerrnoise::presets::fig1_noise());
        let c3 = RunConfig::preset("paper_fig3").unwrap();
        assert_eq!(c3.noise_model().unwrap(), kerrnoise::presets::fig3_noise());
        assert!(RunConfig::preset("fig2").is_err());
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = PAPER_FIG1.replace("[oscillator]", "[oscillator]\nkappa = 1.0");
        let err = RunConfig::parse(&text, None).unwrap_err().to_string();
        assert!(err.contains("kappa"), "{err}");
        let text = PAPER_FIG1.replacen("gamma = 1e-3", "gamma = 1e-3\nwidth = 2", 1);
        let err = RunConfig::parse(&text, None).unwrap_err().to_string();
        assert!(err.contains("width"), "{err}");
    }

    #[test]
    fn floats_round_trip_exactly() {
        let text = PAPER_FIG1.replace("omega = 5.0", "omega = 0.1000000000000000055511151231257827");
        let c = RunConfig::parse(&text, None).unwrap();
        assert_eq!(c.oscillator.omega, 0.1);
        let again = RunConfig::parse(&toml::to_string(&c).unwrap(), None).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn infinite_beta_is_accepted() {
        let text = PAPER_FIG1.replace("beta = 10.0\n\n[oscillator]", "beta = inf\n\n[oscillator]");
        let c = RunConfig::parse(&text, None).unwrap();
        let nz = c.noise_model().unwrap();
        assert_eq!(nz.components()[2].beta(), Some(f64::INFINITY));
    }

    #[test]
    fn range_checks() {
        for (from, to) in [
            ("chi = 3.0", "chi = -1.0"),
            ("omega = 5.0", "omega = 0.0"),
            ("omega_max = 50.0", "omega_max = 0.001"),
        ] {
            let text = PAPER_FIG1.replace(from, to);
            assert!(matches!(RunConfig::parse(&text, None), Err(CliError::Config(_))), "{to}");
        }
    }

    #[test]
    fn axis_values_are_sorted_and_inclusive() {
        let a = Axis::log(0.1, 10.0, 3).values();
        assert_eq!(a.len(), 3);
        assert!((a[1] - 1.0).abs() < 1e-15 && a[0] == 0.1 && (a[2] - 10.0).abs() < 1e-14);
        assert_eq!(Axis::log(3.0, 3.0, 5).values(), vec![3.0]);
        assert_eq!(parse_axis("1:30:4").unwrap().points, 4);
        assert!(parse_axis("1:30").is_err());
    }
}
