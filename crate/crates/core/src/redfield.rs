//! Redfield coefficients on the ladder, the birth–death rate equation,
//! its steady state, photon currents and population dynamics.
//!
//! Conventions: `C_n` is the rate `n → n+1`, `D_n` the rate `n → n−1`,
//!
//! ```text
//! C_n = (n+1) [W_S(Ω_n) − W_A(Ω_n)],   D_n = n [W_S(Ω_{n−1}) + W_A(Ω_{n−1})].
//! ```
//!
//! The ladder is cut at `top`: the truncation level, or the first level that
//! cannot be reached because the noise vanishes at the transition frequency
//! below it. `C_top = 0` (reflecting boundary).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::noise::{BathGroup, NoiseModel};
use crate::oscillator::{OscillatorModel, FLAT_RATIO_TOL};
use crate::quadrature::{self, QuadOptions};

/// Rates contributed by one noise component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentRates {
    pub group: BathGroup,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedfieldCoefficients {
    /// Requested truncation.
    pub n_max: usize,
    /// Highest reachable level, `top <= n_max`.
    pub top: usize,
    /// `Ω_0 ..= Ω_top`
    pub omega: Vec<f64>,
    /// `E_0 ..= E_top`
    pub energy: Vec<f64>,
    /// `W_S + W_A` at `Ω_n`, `n = 0..=top`
    pub emission: Vec<f64>,
    /// `W_S − W_A` at `Ω_n`
    pub absorption: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub components: Vec<ComponentRates>,
}

impl RedfieldCoefficients {
    pub fn new(model: &OscillatorModel, noise: &NoiseModel) -> Result<Self> {
        let n_max = model.n_max();
        let all_omega = model.ladder_frequencies();
        let values: Vec<_> = all_omega.iter().map(|&w| noise.eval(w)).collect();

        let mut top = n_max;
        for n in 1..=n_max {
            if values[n - 1].absorption <= 0.0 {
                top = n - 1;
                break;
            }
        }
        if top == 0 && values[0].emission <= 0.0 {
            return Err(Error::DisconnectedLadder(format!(
                "no noise at Omega_0 = {}; the steady state is undefined",
                all_omega[0]
            )));
        }
        if top < n_max {
            log::warn!(
                "ladder truncated at n = {top}: Omega_{} = {} is outside the noise support or noiseless",
                top,
                all_omega[top]
            );
        }

        let omega = all_omega[..=top].to_vec();
        let emission: Vec<f64> = values[..=top].iter().map(|v| v.emission).collect();
        let absorption: Vec<f64> = values[..=top].iter().map(|v| v.absorption).collect();
        let up = |n: usize, a: &[f64]| if n < top { (n + 1) as f64 * a[n] } else { 0.0 };
        let down = |n: usize, e: &[f64]| if n > 0 { n as f64 * e[n - 1] } else { 0.0 };
        let c = (0..=top).map(|n| up(n, &absorption)).collect();
        let d = (0..=top).map(|n| down(n, &emission)).collect();

        let components = (0..noise.components().len())
            .map(|l| {
                let ev: Vec<_> = omega.iter().map(|&w| noise.eval_component(l, w)).collect();
                let em: Vec<f64> = ev.iter().map(|v| v.emission).collect();
                let ab: Vec<f64> = ev.iter().map(|v| v.absorption).collect();
                ComponentRates {
                    group: noise.components()[l].group(),
                    c: (0..=top).map(|n| up(n, &ab)).collect(),
                    d: (0..=top).map(|n| down(n, &em)).collect(),
                }
            })
            .collect();

        Ok(Self {
            n_max,
            top,
            omega,
            energy: (0..=top).map(|n| model.energy(n)).collect(),
            emission,
            absorption,
            c,
            d,
            components,
        })
    }

    /// `F_+(Ω_n) = (W_S + W_A)/2`
    pub fn f_plus(&self, n: usize) -> f64 {
        0.5 * self.emission[n]
    }

    /// `F_−(Ω_n) = (W_S − W_A)/2`
    pub fn f_minus(&self, n: usize) -> f64 {
        0.5 * self.absorption[n]
    }

    pub fn dim(&self) -> usize {
        self.top + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftPart {
    /// `R_S`: kernels `1/(Ω+ω) + 1/(Ω−ω)` against `W_S`
    Symmetric,
    /// `R_A`: kernels `1/(Ω+ω) − 1/(Ω−ω)` against `W_A`
    Antisymmetric,
}

/// Principal-value frequency shift `R_S(Ω0)` or `R_A(Ω0)` of the summed noise.
pub fn principal_value_shift(noise: &NoiseModel, omega0: f64, part: ShiftPart) -> Result<f64> {
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(invalid(format!("transition frequency must be > 0, got {omega0}")));
    }
    let (lo, hi) = (noise.omega_min(), noise.omega_max());
    for cutoff in [lo, hi] {
        if (omega0 - cutoff).abs() < 1e-9 {
            return Err(Error::CutoffSingularity { omega: omega0, cutoff });
        }
    }
    let f = |w: f64| {
        let v = noise.eval(w);
        match part {
            ShiftPart::Symmetric => v.symmetric,
            ShiftPart::Antisymmetric => v.antisymmetric,
        }
    };
    let opts = QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        ..QuadOptions::default()
    };
    let mut breaks = Vec::new();
    let mut w = lo * 2.0;
    while w < hi {
        breaks.push(w);
        w *= 2.0;
    }
    for c in noise.components() {
        if let crate::noise::NoiseComponent::Tabulated(t) = c {
            breaks.extend(t.omega().iter().copied());
        }
    }

    let plus = quadrature::integrate(|w| f(w) / (omega0 + w), lo, hi, &breaks, &opts)?.value;
    let minus = if omega0 > lo && omega0 < hi {
        let f0 = f(omega0);
        breaks.push(omega0);
        let regular = quadrature::integrate(
            |w| if w == omega0 { 0.0 } else { (f(w) - f0) / (omega0 - w) },
            lo,
            hi,
            &breaks,
            &opts,
        )?
        .value;
        regular + f0 * ((omega0 - lo) / (hi - omega0)).ln()
    } else {
        quadrature::integrate(|w| f(w) / (omega0 - w), lo, hi, &breaks, &opts)?.value
    };
    let total = match part {
        ShiftPart::Symmetric => plus + minus,
        ShiftPart::Antisymmetric => plus - minus,
    };
    Ok(total / (2.0 * PI))
}

/// `R_S`, `R_A` at the transition frequencies `Ω_0 .. Ω_{top−1}`, the only
/// ones that enter the truncated dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelShifts {
    pub r_s: Vec<f64>,
    pub r_a: Vec<f64>,
}

impl LevelShifts {
    pub fn new(noise: &NoiseModel, coeffs: &RedfieldCoefficients) -> Result<Self> {
        let levels = &coeffs.omega[..coeffs.top];
        let r_s = levels
            .iter()
            .map(|&w| principal_value_shift(noise, w, ShiftPart::Symmetric))
            .collect::<Result<_>>()?;
        let r_a = levels
            .iter()
            .map(|&w| principal_value_shift(noise, w, ShiftPart::Antisymmetric))
            .collect::<Result<_>>()?;
        Ok(Self { r_s, r_a })
    }

    /// Shifts switched off.
    pub fn zero(coeffs: &RedfieldCoefficients) -> Self {
        Self {
            r_s: vec![0.0; coeffs.top],
            r_a: vec![0.0; coeffs.top],
        }
    }

    pub fn r_plus(&self, n: usize) -> f64 {
        self.r_s[n] + self.r_a[n]
    }

    pub fn r_minus(&self, n: usize) -> f64 {
        self.r_s[n] - self.r_a[n]
    }
}

/// Dense generator `L` with `dρ/dt = L ρ`; columns sum to zero.
pub fn rate_matrix(coeffs: &RedfieldCoefficients) -> DMatrix<f64> {
    let n = coeffs.dim();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = -(coeffs.c[i] + coeffs.d[i]);
        if i > 0 {
            l[(i, i - 1)] = coeffs.c[i - 1];
            l[(i - 1, i)] = coeffs.d[i];
        }
    }
    l
}

fn apply_rates(coeffs: &RedfieldCoefficients, rho: &DVector<f64>) -> DVector<f64> {
    let n = coeffs.dim();
    DVector::from_fn(n, |i, _| {
        let mut v = -(coeffs.c[i] + coeffs.d[i]) * rho[i];
        if i > 0 {
            v += coeffs.c[i - 1] * rho[i - 1];
        }
        if i + 1 < n {
            v += coeffs.d[i + 1] * rho[i + 1];
        }
        v
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationDistribution {
    pub rho: Vec<f64>,
    /// `ln ρ_n − ln ρ_0`, finite even where `ρ_n` underflows.
    pub log_rho: Vec<f64>,
}

impl PopulationDistribution {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.rho.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// `⟨n(n−1)⟩`
    pub fn second_factorial_moment(&self) -> f64 {
        self.rho
            .iter()
            .enumerate()
            .map(|(n, p)| (n * n.saturating_sub(1)) as f64 * p)
            .sum()
    }

    /// `β_eff = −ln r / Ω` from the first ratio `r = ρ_1/ρ_0`.
    pub fn effective_beta(&self, omega: f64) -> Option<f64> {
        self.log_rho.get(1).map(|l| -l / omega)
    }
}

/// Steady state `ρ_n = ρ_0 ∏ (W_S − W_A)/(W_S + W_A)` evaluated in log space.
pub fn ness(coeffs: &RedfieldCoefficients) -> Result<PopulationDistribution> {
    let n = coeffs.dim();
    let mut log_rho = vec![0.0; n];
    let mut all_flat = n > 1;
    for p in 1..n {
        let (a, e) = (coeffs.absorption[p - 1], coeffs.emission[p - 1]);
        all_flat &= a >= (1.0 - FLAT_RATIO_TOL) * e;
        log_rho[p] = log_rho[p - 1] + a.ln() - e.ln();
    }
    if all_flat {
        return Err(Error::NonNormalizable);
    }
    let peak = log_rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_rho.iter().map(|l| (l - peak).exp()).collect();
    let norm: f64 = weights.iter().sum();
    Ok(PopulationDistribution {
        rho: weights.iter().map(|w| w / norm).collect(),
        log_rho,
    })
}

/// Currents into each bath, `I_ℓ = Σ ρ_n (D_n^ℓ − C_n^ℓ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentReport {
    pub per_component: Vec<(BathGroup, f64)>,
    /// Rate at which classical noise excites quanta (`−Σ I_ℓ` over classical sources).
    pub classical: f64,
    pub phonon: f64,
    pub detector: f64,
}

impl CurrentReport {
    /// `(I_cl − I_q − I_D) / I_cl`
    pub fn imbalance(&self) -> f64 {
        (self.classical - self.phonon - self.detector) / self.classical
    }
}

pub fn currents(coeffs: &RedfieldCoefficients, rho: &PopulationDistribution) -> CurrentReport {
    let per_component: Vec<(BathGroup, f64)> = coeffs
        .components
        .iter()
        .map(|r| {
            let i = (0..coeffs.dim()).map(|n| rho.rho[n] * (r.d[n] - r.c[n])).sum();
            (r.group, i)
        })
        .collect();
    let sum = |g: BathGroup| -> f64 { per_component.iter().filter(|(k, _)| *k == g).map(|(_, i)| i).sum() };
    CurrentReport {
        classical: -sum(BathGroup::Classical),
        phonon: sum(BathGroup::Phonon),
        detector: sum(BathGroup::Detector),
        per_component,
    }
}

/// Largest ratio `sqrt(max π / min π)` for which the symmetrized
/// eigendecomposition is trusted.
pub const PROPAGATOR_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
enum Propagation {
    Spectral {
        sqrt_pi: DVector<f64>,
        values: DVector<f64>,
        vectors: DMatrix<f64>,
    },
    Integrate,
}

/// `ρ(t) = e^{Lt} ρ(0)` for the birth–death generator.
///
/// Detailed balance makes `Π^{-1/2} L Π^{1/2}` symmetric, so a real symmetric
/// eigensolver suffices. When the steady state spans too many decades the
/// similarity transform is ill-conditioned and explicit Dormand–Prince
/// integration is used instead.
#[derive(Debug, Clone)]
pub struct PopulationPropagator {
    coeffs: RedfieldCoefficients,
    mode: Propagation,
    pub condition: f64,
}

impl PopulationPropagator {
    pub fn new(coeffs: &RedfieldCoefficients, steady: &PopulationDistribution) -> Self {
        let n = coeffs.dim();
        let lmax = steady.log_rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lmin = steady.log_rho.iter().copied().fold(f64::INFINITY, f64::min);
        let condition = (0.5 * (lmax - lmin)).exp();
        let mode = if condition > PROPAGATOR_CONDITION_LIMIT {
            log::debug!("population propagator: condition {condition:e}, integrating explicitly");
            Propagation::Integrate
        } else {
            let sqrt_pi = DVector::from_fn(n, |i, _| (0.5 * (steady.log_rho[i] - lmax)).exp());
            let mut s = DMatrix::zeros(n, n);
            for i in 0..n {
                s[(i, i)] = -(coeffs.c[i] + coeffs.d[i]);
                if i + 1 < n {
                    let off = (coeffs.c[i] * coeffs.d[i + 1]).sqrt();
                    s[(i, i + 1)] = off;
                    s[(i + 1, i)] = off;
                }
            }
            let eig = SymmetricEigen::new(s);
            Propagation::Spectral {
                sqrt_pi,
                values: eig.eigenvalues,
                vectors: eig.eigenvectors,
            }
        };
        Self {
            coeffs: coeffs.clone(),
            mode,
            condition,
        }
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self.mode, Propagation::Spectral { .. })
    }

    /// Slowest nonzero relaxation rate of the populations (spectral mode only).
    pub fn gap(&self) -> Option<f64> {
        match &self.mode {
            Propagation::Spectral { values, .. } if values.len() > 1 => {
                let mut rates: Vec<f64> = values.iter().map(|v| -v).collect();
                rates.sort_by(f64::total_cmp);
                Some(rates[1])
            }
            _ => None,
        }
    }

    pub fn evolve(&self, rho0: &[f64], t: f64) -> Result<Vec<f64>> {
        let n = self.coeffs.dim();
        if rho0.len() != n {
            return Err(invalid(format!("initial populations have length {}, expected {n}", rho0.len())));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(invalid(format!("time must be finite and >= 0, got {t}")));
        }
        if rho0.iter().any(|&p| !(p >= 0.0)) {
            return Err(invalid("initial populations must be non-negative"));
        }
        match &self.mode {
            Propagation::Spectral {
                sqrt_pi,
                values,
                vectors,
            } => {
                let y = DVector::from_fn(n, |i, _| rho0[i] / sqrt_pi[i]);
                let mut modal = vectors.tr_mul(&y);
                for (m, v) in modal.iter_mut().zip(values.iter()) {
                    *m *= (v * t).exp();
                }
                let z = vectors * modal;
                Ok((0..n).map(|i| z[i] * sqrt_pi[i]).collect())
            }
            Propagation::Integrate => {
                let y0 = DVector::from_column_slice(rho0);
                let mass: f64 = rho0.iter().sum();
                let y = linalg::dopri5(|y| apply_rates(&self.coeffs, y), &y0, t, 1e-11, 1e-16 * mass.max(1e-300))?;
                Ok(y.iter().copied().collect())
            }
        }
    }
}

/// One-shot `e^{Lt} ρ0`.
pub fn evolve_populations(
    coeffs: &RedfieldCoefficients,
    steady: &PopulationDistribution,
    rho0: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    PopulationPropagator::new(coeffs, steady).evolve(rho0, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{NoiseComponent, SpectralTable};
    use crate::presets::fig1_noise;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn flat_noise(ws: f64, wa: f64) -> NoiseModel {
        let t = SpectralTable::flat(0.01, 1e4, ws, wa, BathGroup::Phonon).unwrap();
        NoiseModel::new(vec![NoiseComponent::Tabulated(t)], 0.01, 1e4).unwrap()
    }

    #[test]
    fn two_level_generator() {
        let c = RedfieldCoefficients::new(&OscillatorModel::kerr(1.0, 0.0, 1).unwrap(), &flat_noise(3.0, 1.0)).unwrap();
        assert_eq!((c.c[0], c.d[1]), (2.0, 4.0));
        let l = rate_matrix(&c);
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[-2.0, 4.0, 2.0, -4.0]));
        let rho = ness(&c).unwrap();
        assert_relative_eq!(rho.rho[0], 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(rho.rho[1], 1.0 / 3.0, max_relative = 1e-15);
        let prop = PopulationPropagator::new(&c, &rho);
        for t in [0.0, 0.01, 0.2, 1.5] {
            let r = prop.evolve(&[1.0, 0.0], t).unwrap();
            assert!((r[1] - (1.0 - (-6.0 * t).exp()) / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn geometric_flat_ness() {
        let c = RedfieldCoefficients::new(&OscillatorModel::kerr(1.0, 0.7, 80).unwrap(), &flat_noise(3.0, 1.0)).unwrap();
        let rho = ness(&c).unwrap();
        for n in 0..20 {
            assert_relative_eq!(rho.rho[n], 0.5f64.powi(n as i32 + 1), max_relative = 1e-12);
        }
        assert!((rho.mean() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_flat_closed_form() {
        let t = SpectralTable::flat(1.0, 3.0, 1.0, 0.0, BathGroup::Classical).unwrap();
        let noise = NoiseModel::new(vec![NoiseComponent::Tabulated(t)], 1.0, 3.0).unwrap();
        let r = principal_value_shift(&noise, 2.0, ShiftPart::Symmetric).unwrap();
        assert!((r - (5.0f64 / 3.0).ln() / (2.0 * PI)).abs() < 1e-12, "{r}");
        assert_eq!(principal_value_shift(&noise, 2.0, ShiftPart::Antisymmetric).unwrap(), 0.0);
        assert!(matches!(
            principal_value_shift(&noise, 3.0 + 1e-10, ShiftPart::Symmetric),
            Err(Error::CutoffSingularity { .. })
        ));
    }

    #[test]
    fn shift_of_zero_noise_is_zero() {
        let noise = NoiseModel::new(vec![], 0.1, 10.0).unwrap();
        assert_eq!(principal_value_shift(&noise, 2.0, ShiftPart::Symmetric).unwrap(), 0.0);
    }

    #[test]
    fn shift_of_smooth_spectrum_matches_fine_midpoint_rule() {
        // Independent oracle: symmetric excision around the pole on a fine uniform grid.
        let noise = fig1_noise();
        let w0 = 5.0;
        let (lo, hi) = (noise.omega_min(), noise.omega_max());
        // h = 1e-5 puts the pole on a cell boundary, so the excision is symmetric.
        let n = 4_999_000usize;
        let h = (hi - lo) / n as f64;
        let mut sum = 0.0;
        let mut sum_a = 0.0;
        for i in 0..n {
            let w = lo + (i as f64 + 0.5) * h;
            let (s, a) = noise.eval_total(w);
            sum += s * (1.0 / (w0 + w) + 1.0 / (w0 - w)) * h;
            sum_a += a * (1.0 / (w0 + w) - 1.0 / (w0 - w)) * h;
        }
        let rs = principal_value_shift(&noise, w0, ShiftPart::Symmetric).unwrap();
        let ra = principal_value_shift(&noise, w0, ShiftPart::Antisymmetric).unwrap();
        assert!((rs - sum / (2.0 * PI)).abs() < 1e-7, "{rs} {}", sum / (2.0 * PI));
        assert!((ra - sum_a / (2.0 * PI)).abs() < 1e-7, "{ra} {}", sum_a / (2.0 * PI));
    }

    #[test]
    fn cold_detector_current_closed_form() {
        let noise = NoiseModel::new(
            vec![
                NoiseComponent::Classical1OverF { gamma: 1e-3 },
                NoiseComponent::FlatThermal {
                    gamma: 1e-3,
                    beta: f64::INFINITY,
                },
            ],
            0.01,
            50.0,
        )
        .unwrap();
        let c = RedfieldCoefficients::new(&OscillatorModel::kerr(1.0, 2.0, 12).unwrap(), &noise).unwrap();
        let rho = ness(&c).unwrap();
        let cur = currents(&c, &rho);
        assert_relative_eq!(cur.detector, 2e-3 * rho.mean(), max_relative = 1e-12);
        assert!(cur.imbalance().abs() < 1e-12);
    }

    #[test]
    fn single_bath_currents_vanish() {
        let noise = NoiseModel::new(vec![NoiseComponent::FlatThermal { gamma: 1e-2, beta: 0.5 }], 0.01, 100.0).unwrap();
        let c = RedfieldCoefficients::new(&OscillatorModel::kerr(1.0, 0.3, 10).unwrap(), &noise).unwrap();
        let cur = currents(&c, &ness(&c).unwrap());
        assert!(cur.detector.abs() < 1e-17);
    }

    #[test]
    fn ladder_leaving_support_truncates() {
        let noise = fig1_noise();
        let c = RedfieldCoefficients::new(&OscillatorModel::kerr(5.0, 3.0, 20).unwrap(), &noise).unwrap();
        // Ω_7 = 47 inside, Ω_8 = 53 outside
        assert_eq!(c.top, 8);
        assert_eq!(c.c[8], 0.0);
    }

    #[test]
    fn empty_noise_is_disconnected() {
        let noise = NoiseModel::new(vec![], 0.01, 50.0).unwrap();
        assert!(matches!(
            RedfieldCoefficients::new(&OscillatorModel::kerr(5.0, 3.0, 4).unwrap(), &noise),
            Err(Error::DisconnectedLadder(_))
        ));
    }

    #[test]
    fn classical_only_is_non_normalizable() {
        let noise = NoiseModel::new(vec![NoiseComponent::Classical1OverF { gamma: 1e-3 }], 0.01, 50.0).unwrap();
        let c = RedfieldCoefficients::new(&OscillatorModel::kerr(5.0, 3.0, 20).unwrap(), &noise).unwrap();
        assert!(matches!(ness(&c), Err(Error::NonNormalizable)));
    }

    #[test]
    fn ill_conditioned_propagator_integrates() {
        // ρ spans ~ e^{-400}: the symmetric transform is unusable.
        let noise = NoiseModel::new(vec![NoiseComponent::FlatThermal { gamma: 0.1, beta: 40.0 }], 0.01, 100.0).unwrap();
        let c = RedfieldCoefficients::new(&OscillatorModel::kerr(1.0, 0.0, 10).unwrap(), &noise).unwrap();
        let rho = ness(&c).unwrap();
        let prop = PopulationPropagator::new(&c, &rho);
        assert!(!prop.is_spectral());
        let mut init = vec![0.0; c.dim()];
        init[3] = 1.0;
        let r = prop.evolve(&init, 5.0).unwrap();
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        // Rates are 2Γ n: the linear ladder relaxes ⟨n⟩ as e^{-2Γ t} when cold.
        let mean: f64 = r.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        assert!((mean - 3.0 * (-0.2f64 * 5.0).exp()).abs() < 1e-8, "{mean}");
    }

    fn random_noise(g_cl: f64, g_q: f64, s: f64, beta: f64, g_d: f64) -> NoiseModel {
        NoiseModel::new(
            vec![
                NoiseComponent::Classical1OverF { gamma: g_cl },
                NoiseComponent::SuperOhmicThermal { gamma: g_q, s, beta },
                NoiseComponent::FlatThermal { gamma: g_d, beta },
            ],
            0.01,
            50.0,
        )
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn generator_columns_sum_to_zero_and_ness_is_kernel(
            omega in 0.2f64..8.0, chi in 0.0f64..3.0, n_max in 1usize..12,
            g_cl in 1e-4f64..1e-2, g_q in 1e-7f64..1e-4, s in 1.5f64..4.0, beta in 0.5f64..20.0, g_d in 1e-4f64..1e-2,
        ) {
            let noise = random_noise(g_cl, g_q, s, beta, g_d);
            let c = RedfieldCoefficients::new(&OscillatorModel::kerr(omega, chi, n_max).unwrap(), &noise).unwrap();
            let l = rate_matrix(&c);
            for j in 0..c.dim() {
                let col: f64 = l.column(j).iter().sum();
                let scale: f64 = l.column(j).iter().map(|x| x.abs()).sum();
                prop_assert!(col.abs() <= 1e-14 * scale.max(1e-300));
            }
            let rho = ness(&c).unwrap();
            // Independent oracle: replace one equation by normalization and LU-solve.
            let n = c.dim();
            let mut a = l.clone();
            let mut b = DVector::zeros(n);
            for j in 0..n { a[(0, j)] = 1.0; }
            b[0] = 1.0;
            let x = a.lu().solve(&b).unwrap();
            for i in 0..n {
                prop_assert!((x[i] - rho.rho[i]).abs() < 1e-10, "{} vs {}", x[i], rho.rho[i]);
            }
            for k in 1..n {
                let lhs = rho.rho[k - 1] * c.c[k - 1];
                let rhs = rho.rho[k] * c.d[k];
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()));
            }
        }

        #[test]
        fn gibbs_for_single_thermal_bath(
            omega in 0.2f64..5.0, chi in 0.0f64..2.0, beta in 0.1f64..3.0, s in 1.0f64..4.0, n_max in 1usize..10,
        ) {
            let noise = NoiseModel::new(vec![NoiseComponent::SuperOhmicThermal { gamma: 1e-3, s, beta }], 1e-3, 1e3).unwrap();
            let m = OscillatorModel::kerr(omega, chi, n_max).unwrap();
            let c = RedfieldCoefficients::new(&m, &noise).unwrap();
            let rho = ness(&c).unwrap();
            for n in 0..c.dim() {
                let expected = -beta * m.energy(n);
                prop_assert!((rho.log_rho[n] - expected).abs() < 1e-10 * (1.0 + expected.abs()));
            }
        }

        #[test]
        fn populations_mass_and_fixed_point(
            omega in 0.5f64..6.0, chi in 0.0f64..3.0, t in 0.0f64..2000.0,
        ) {
            let noise = fig1_noise();
            let m = OscillatorModel::kerr(omega, chi, 6).unwrap();
            let c = RedfieldCoefficients::new(&m, &noise).unwrap();
            let rho = ness(&c).unwrap();
            let prop = PopulationPropagator::new(&c, &rho);
            let r = prop.evolve(&rho.rho, t).unwrap();
            for i in 0..c.dim() {
                prop_assert!((r[i] - rho.rho[i]).abs() < 1e-10);
            }
            let mut init = vec![0.0; c.dim()];
            init[c.dim() / 2] = 0.7;
            let r = prop.evolve(&init, t).unwrap();
            prop_assert!((r.iter().sum::<f64>() - 0.7).abs() < 1e-10);
        }

        #[test]
        fn piecewise_flat_shift_closed_form(level in 0.01f64..5.0, w0 in 0.05f64..20.0) {
            let (a, b) = (0.3, 7.0);
            prop_assume!((w0 - a).abs() > 1e-3 && (w0 - b).abs() > 1e-3);
            let t = SpectralTable::flat(a, b, level, 0.0, BathGroup::Classical).unwrap();
            let noise = NoiseModel::new(vec![NoiseComponent::Tabulated(t)], a, b).unwrap();
            let expected = level / (2.0 * PI) * (((w0 + b) / (w0 + a)).ln() + ((w0 - a) / (w0 - b)).abs().ln());
            let r = principal_value_shift(&noise, w0, ShiftPart::Symmetric).unwrap();
            prop_assert!((r - expected).abs() < 1e-8, "{r} vs {expected}");
        }
    }
}
