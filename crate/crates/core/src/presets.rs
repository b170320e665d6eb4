//! Reference noise environments.
//!
//! `fig1`: 1/f classical noise, a cold super-Ohmic phonon bath and a cold
//! wide-band detector. `fig3`: the same without phonons.

use crate::noise::{NoiseComponent, NoiseModel};

pub const GAMMA_CL: f64 = 1e-3;
pub const GAMMA_Q: f64 = 1e-6;
pub const GAMMA_D: f64 = 1e-3;
pub const EXPONENT: f64 = 3.0;
pub const BETA: f64 = 10.0;
pub const OMEGA_MIN: f64 = 0.01;
pub const OMEGA_MAX: f64 = 50.0;

pub fn fig1_components() -> Vec<NoiseComponent> {
    vec![
        NoiseComponent::Classical1OverF { gamma: GAMMA_CL },
        NoiseComponent::SuperOhmicThermal {
            gamma: GAMMA_Q,
            s: EXPONENT,
            beta: BETA,
        },
        NoiseComponent::FlatThermal {
            gamma: GAMMA_D,
            beta: BETA,
        },
    ]
}

pub fn fig1_noise() -> NoiseModel {
    NoiseModel::new(fig1_components(), OMEGA_MIN, OMEGA_MAX).expect("preset parameters are valid")
}

pub fn fig3_noise() -> NoiseModel {
    let components = fig1_components()
        .into_iter()
        .filter(|c| !matches!(c, NoiseComponent::SuperOhmicThermal { .. }))
        .collect();
    NoiseModel::new(components, OMEGA_MIN, OMEGA_MAX).expect("preset parameters are valid")
}
