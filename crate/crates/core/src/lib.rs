//! A weakly damped nonlinear oscillator `H = Ω n + χ U(n)` driven by an
//! arbitrary sum of classical and quantum noise sources, treated with the
//! rotating-wave Redfield master equation.
//!
//! The pipeline is
//!
//! 1. [`noise::NoiseModel`]: symmetric/antisymmetric spectral functions,
//!    bath correlation and memory time;
//! 2. [`oscillator::OscillatorModel`]: ladder frequencies and truncation;
//! 3. [`redfield`]: rates, steady state, currents, population dynamics;
//! 4. [`correlations`]: `g²(0)`, `g²(τ)`, `g¹(τ)` and the emission spectrum;
//! 5. [`oracle`]: a dense Liouvillian reference used for cross-checks.

pub mod correlations;
pub mod error;
pub mod linalg;
pub mod noise;
pub mod oracle;
pub mod oscillator;
pub mod presets;
pub mod quadrature;
pub mod redfield;

pub use correlations::{
    g1_tau, g2_tau, g2_zero, spectrum, CoherenceSystem, CorrelationSeries, Peak, SpectrumMethod, SpectrumOptions,
    SpectrumResult,
};
pub use error::{Error, ErrorCategory, Result};
pub use noise::{BathGroup, MemoryTimeOptions, NoiseComponent, NoiseKind, NoiseModel, SpectralTable};
pub use oscillator::{choose_truncation, Nonlinearity, OscillatorModel};
pub use redfield::{
    currents, ness, CurrentReport, LevelShifts, PopulationDistribution, PopulationPropagator, RedfieldCoefficients,
    ShiftPart,
};

/// Everything needed downstream of a single `(noise, oscillator)` point.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub model: OscillatorModel,
    pub coefficients: RedfieldCoefficients,
    pub rho: PopulationDistribution,
}

impl SteadyState {
    /// Picks the truncation from the steady-state tail, then builds the
    /// coefficients and populations.
    pub fn solve(model: &OscillatorModel, noise: &NoiseModel, tail_tol: f64) -> Result<Self> {
        let n_max = choose_truncation(model, noise, tail_tol)?;
        Self::with_fixed_truncation(&model.with_n_max(n_max)?, noise)
    }

    pub fn with_fixed_truncation(model: &OscillatorModel, noise: &NoiseModel) -> Result<Self> {
        let coefficients = RedfieldCoefficients::new(model, noise)?;
        let rho = ness(&coefficients)?;
        Ok(Self {
            model: model.clone(),
            coefficients,
            rho,
        })
    }

    pub fn currents(&self) -> CurrentReport {
        currents(&self.coefficients, &self.rho)
    }
}
