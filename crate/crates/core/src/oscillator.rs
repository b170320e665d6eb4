//! The RWA oscillator `H = Ω n + χ U(n)` and its Fock-space truncation.

use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::noise::NoiseModel;

/// Default hard limit for [`choose_truncation`].
pub const TRUNCATION_CAP: usize = 512;

/// Ratios this close to one are treated as an infinite-temperature ladder.
pub(crate) const FLAT_RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    /// `U(n) = n(n-1)`
    Kerr,
    /// `U(0), U(1), ...`
    Table(Vec<f64>),
}

impl Nonlinearity {
    /// Parses two columns `n U(n)` with `n = 0, 1, 2, ...` in order.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            let bad = |what: &str| Error::InvalidTable(format!("U table line {}: {what}", lineno + 1));
            if cols.len() != 2 {
                return Err(bad("expected two columns n, U(n)"));
            }
            let n: usize = cols[0].parse().map_err(|_| bad("n must be a non-negative integer"))?;
            if n != values.len() {
                return Err(bad(&format!("expected n = {}, found {n}", values.len())));
            }
            let u: f64 = cols[1].parse().map_err(|_| bad("U(n) is not a number"))?;
            if !u.is_finite() {
                return Err(bad("U(n) must be finite"));
            }
            values.push(u);
        }
        if values.len() < 3 {
            return Err(Error::InvalidTable("U table needs at least U(0), U(1), U(2)".into()));
        }
        Ok(Nonlinearity::Table(values))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_table(&text)
    }

    fn u(&self, n: usize) -> f64 {
        match self {
            Nonlinearity::Kerr => (n * n.saturating_sub(1)) as f64,
            Nonlinearity::Table(u) => u[n],
        }
    }

    /// Largest truncation for which `U(n_max + 1)` is known.
    pub fn max_n_max(&self) -> usize {
        match self {
            Nonlinearity::Kerr => usize::MAX,
            Nonlinearity::Table(u) => u.len() - 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorModel {
    omega: f64,
    chi: f64,
    nonlinearity: Nonlinearity,
    n_max: usize,
}

impl OscillatorModel {
    pub fn new(omega: f64, chi: f64, nonlinearity: Nonlinearity, n_max: usize) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(invalid(format!("omega must be > 0, got {omega}")));
        }
        if !(chi.is_finite() && chi >= 0.0) {
            return Err(invalid(format!("chi must be >= 0, got {chi}")));
        }
        if n_max < 1 {
            return Err(invalid("n_max must be >= 1"));
        }
        if n_max > nonlinearity.max_n_max() {
            return Err(invalid(format!(
                "U table covers n_max <= {}, requested {n_max}",
                nonlinearity.max_n_max()
            )));
        }
        let model = Self {
            omega,
            chi,
            nonlinearity,
            n_max,
        };
        for n in 0..=n_max {
            let w = model.omega_n(n);
            if !(w > 0.0) {
                return Err(invalid(format!("ladder frequency Omega_{n} = {w} is not positive")));
            }
        }
        Ok(model)
    }

    pub fn kerr(omega: f64, chi: f64, n_max: usize) -> Result<Self> {
        Self::new(omega, chi, Nonlinearity::Kerr, n_max)
    }

    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::new(self.omega, self.chi, self.nonlinearity.clone(), n_max)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn u(&self, n: usize) -> f64 {
        self.nonlinearity.u(n)
    }

    fn omega_n(&self, n: usize) -> f64 {
        match self.nonlinearity {
            Nonlinearity::Kerr => self.omega + 2.0 * self.chi * n as f64,
            Nonlinearity::Table(_) => self.omega + self.chi * (self.u(n + 1) - self.u(n)),
        }
    }

    /// `Ω_n = Ω + χ[U(n+1) − U(n)]`, the transition frequency `n → n+1`.
    pub fn ladder_frequency(&self, n: usize) -> Result<f64> {
        if n > self.n_max {
            return Err(Error::LevelOutOfRange { n, n_max: self.n_max });
        }
        Ok(self.omega_n(n))
    }

    /// `Ω_0 ..= Ω_{n_max}`
    pub fn ladder_frequencies(&self) -> Vec<f64> {
        (0..=self.n_max).map(|n| self.omega_n(n)).collect()
    }

    /// `E_n = Ω n + χ U(n)`
    pub fn energy(&self, n: usize) -> f64 {
        self.omega * n as f64 + self.chi * self.u(n)
    }

    pub fn chi_over_omega(&self) -> f64 {
        self.chi / self.omega
    }
}

/// Smallest `n_max` whose steady-state tail `ρ_{n_max} / max ρ` is below
/// `tail_tol`, or the level where the ladder leaves the noise support.
pub fn choose_truncation(model: &OscillatorModel, noise: &NoiseModel, tail_tol: f64) -> Result<usize> {
    choose_truncation_capped(model, noise, tail_tol, TRUNCATION_CAP)
}

pub fn choose_truncation_capped(model: &OscillatorModel, noise: &NoiseModel, tail_tol: f64, cap: usize) -> Result<usize> {
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(invalid(format!("tail_tol must lie in (0, 1), got {tail_tol}")));
    }
    if noise.is_classical_only() {
        return Err(Error::NonNormalizable);
    }
    let cap = cap.min(model.nonlinearity.max_n_max()).max(1);
    let ln_tol = tail_tol.ln();
    let mut log_rho = 0.0;
    let mut log_max: f64 = 0.0;
    let mut all_flat = true;
    for n in 1..=cap {
        let v = noise.eval(model.omega_n(n - 1));
        if v.absorption <= 0.0 {
            if n == 1 && v.emission <= 0.0 {
                return Err(Error::DisconnectedLadder(format!(
                    "no noise at Omega_0 = {}; nothing couples the ground state",
                    model.omega_n(0)
                )));
            }
            return Ok((n - 1).max(1));
        }
        let ratio = v.absorption / v.emission;
        all_flat &= ratio >= 1.0 - FLAT_RATIO_TOL;
        log_rho += ratio.ln();
        log_max = log_max.max(log_rho);
        if log_rho - log_max < ln_tol {
            return Ok(n);
        }
    }
    if all_flat {
        Err(Error::NonNormalizable)
    } else {
        Err(Error::TruncationCap {
            cap,
            tail_ratio: (log_rho - log_max).exp(),
        })
    }
}
