//! Photon statistics and emission spectrum from the regression formula.
//!
//! `g²(τ)` needs only populations: the dressed state `a ρ a†` is diagonal and
//! evolves with the rate equation. `g¹(τ)` lives on the first off-diagonal
//! band; with `P_n = √n ρ̃_{n,n−1}`, `n = 1..=top`, the RWA generator closes on
//! that band as `dP/dτ = −M P` with `M` tridiagonal:
//!
//! ```text
//! M_{n,n}   = iΩ_{n−1} + n G¹_{n−1} + (n−1) G¹*_{n−2} + n G²_{n−1} + (n+1) G²*_n
//! M_{n,n+1} = −n (G¹_n + G¹*_{n−1})
//! M_{n,n−1} = −n (G²_{n−2} + G²*_{n−1})
//! G¹_k = F_+(Ω_k) + i R_−(Ω_k),   G²_k = F_−(Ω_k) + i R_+(Ω_k)
//! ```
//!
//! Terms with a negative index vanish through their prefactor, and the
//! `G²*_top` term is absent because `a†` annihilates the top level of the
//! truncated space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, ComplexEigen};
use crate::quadrature;
use crate::redfield::{LevelShifts, PopulationDistribution, PopulationPropagator, RedfieldCoefficients};

/// Largest eigenvector condition number accepted for modal sums.
pub const MODAL_CONDITION_LIMIT: f64 = 1e12;

/// `Σ n(n−1) ρ_n / (Σ n ρ_n)²`
pub fn g2_zero(rho: &PopulationDistribution) -> Result<f64> {
    let mean = rho.mean();
    if !(mean > 0.0) {
        return Err(Error::UndefinedStatistic("g2(0) needs <n> > 0"));
    }
    Ok(rho.second_factorial_moment() / (mean * mean))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries<T> {
    pub tau: Vec<f64>,
    pub values: Vec<T>,
    /// `false` for samples with `τ < τ_M`, where the regression formula is not justified.
    pub valid: Vec<bool>,
    pub memory_time: Option<f64>,
}

fn check_grid(tau: &[f64]) -> Result<()> {
    if tau.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(invalid("tau values must be finite and >= 0"));
    }
    if tau.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("tau grid must be strictly increasing"));
    }
    Ok(())
}

fn validity(tau: &[f64], memory_time: Option<f64>) -> Vec<bool> {
    tau.iter().map(|&t| memory_time.is_none_or(|m| t >= m)).collect()
}

/// Normalized intensity correlation `⟨a†(0) a†(τ) a(τ) a(0)⟩ / ⟨n⟩²`.
pub fn g2_tau(
    coeffs: &RedfieldCoefficients,
    rho: &PopulationDistribution,
    tau: &[f64],
    memory_time: Option<f64>,
) -> Result<CorrelationSeries<f64>> {
    check_grid(tau)?;
    let g0 = g2_zero(rho)?;
    let mean = rho.mean();
    let n = coeffs.dim();
    let dressed: Vec<f64> = (0..n)
        .map(|m| if m + 1 < n { (m + 1) as f64 * rho.rho[m + 1] } else { 0.0 })
        .collect();
    let prop = PopulationPropagator::new(coeffs, rho);
    let values = tau
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(g0);
            }
            let r = prop.evolve(&dressed, t)?;
            Ok(r.iter().enumerate().map(|(m, p)| m as f64 * p).sum::<f64>() / (mean * mean))
        })
        .collect::<Result<_>>()?;
    Ok(CorrelationSeries {
        tau: tau.to_vec(),
        values,
        valid: validity(tau, memory_time),
        memory_time,
    })
}

/// Tridiagonal first-band generator; index `i` holds `P_{i+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceSystem {
    pub diag: Vec<Complex64>,
    /// `upper[i] = M_{i+1, i+2}`
    pub upper: Vec<Complex64>,
    /// `lower[i] = M_{i+2, i+1}`
    pub lower: Vec<Complex64>,
    /// `P_n(0) = n ρ_n`
    pub initial: Vec<Complex64>,
}

impl CoherenceSystem {
    pub fn new(coeffs: &RedfieldCoefficients, shifts: &LevelShifts, rho: &PopulationDistribution) -> Result<Self> {
        let top = coeffs.top;
        if shifts.r_s.len() != top || shifts.r_a.len() != top {
            return Err(invalid("level shifts do not match the ladder"));
        }
        if top == 0 {
            return Err(Error::UndefinedStatistic("no coherences: only the ground state is populated"));
        }
        let g1 = |k: usize| Complex64::new(coeffs.f_plus(k), shifts.r_minus(k));
        let g2 = |k: usize| Complex64::new(coeffs.f_minus(k), shifts.r_plus(k));
        let mut diag = Vec::with_capacity(top);
        let mut upper = Vec::with_capacity(top - 1);
        let mut lower = Vec::with_capacity(top - 1);
        for n in 1..=top {
            let nf = n as f64;
            let mut d = Complex64::new(0.0, coeffs.omega[n - 1]) + nf * g1(n - 1) + nf * g2(n - 1);
            if n >= 2 {
                d += (nf - 1.0) * g1(n - 2).conj();
            }
            if n < top {
                d += (nf + 1.0) * g2(n).conj();
                upper.push(-nf * (g1(n) + g1(n - 1).conj()));
            }
            if n >= 2 {
                lower.push(-nf * (g2(n - 2) + g2(n - 1).conj()));
            }
            diag.push(d);
        }
        let initial = (1..=top).map(|n| Complex64::new(n as f64 * rho.rho[n], 0.0)).collect();
        Ok(Self {
            diag,
            upper,
            lower,
            initial,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.upper[i];
                m[(i + 1, i)] = self.lower[i];
            }
        }
        m
    }

    /// `1ᵀ (M − iω)⁻¹ P(0)`
    pub fn resolvent(&self, omega: f64) -> Result<Complex64> {
        let shifted: Vec<Complex64> = self.diag.iter().map(|d| d - Complex64::new(0.0, omega)).collect();
        let x = linalg::tridiagonal_solve(&self.lower, &shifted, &self.upper, &self.initial)?;
        Ok(x.iter().sum())
    }
}

/// Modal form `g¹(τ) = Σ_ℓ w_ℓ e^{−λ_ℓ τ}`, `w_ℓ = (1ᵀV)_ℓ (V⁻¹P0)_ℓ`.
#[derive(Debug, Clone)]
pub struct ModalExpansion {
    pub eigenvalues: Vec<Complex64>,
    pub weights: Vec<Complex64>,
    pub condition: f64,
}

impl ModalExpansion {
    pub fn new(system: &CoherenceSystem) -> Result<Self> {
        let eig = ComplexEigen::new(&system.dense())?;
        let p0 = DVector::from_column_slice(&system.initial);
        let right = &eig.inverse * p0;
        let weights = (0..system.dim())
            .map(|l| eig.vectors.column(l).iter().sum::<Complex64>() * right[l])
            .collect();
        Ok(Self {
            eigenvalues: eig.values,
            weights,
            condition: eig.condition,
        })
    }

    pub fn g1(&self, tau: f64) -> Complex64 {
        self.eigenvalues
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| w * (-l * tau).exp())
            .sum()
    }

    pub fn spectrum(&self, omega: f64) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| (w / (l - Complex64::new(0.0, omega))).re)
            .sum()
    }
}

/// `g¹(τ) = Tr[a ρ̃(τ)]` with `ρ̃(0) = ρ a†`.
pub fn g1_tau(
    coeffs: &RedfieldCoefficients,
    shifts: &LevelShifts,
    rho: &PopulationDistribution,
    tau: &[f64],
    memory_time: Option<f64>,
) -> Result<CorrelationSeries<Complex64>> {
    check_grid(tau)?;
    let system = CoherenceSystem::new(coeffs, shifts, rho)?;
    let modal = ModalExpansion::new(&system).ok().filter(|m| m.condition <= MODAL_CONDITION_LIMIT);
    let values = match modal {
        Some(m) => tau
            .iter()
            .map(|&t| if t == 0.0 { system.initial.iter().sum() } else { m.g1(t) })
            .collect(),
        None => {
            let dense = system.dense();
            let p0 = DVector::from_column_slice(&system.initial);
            tau.iter()
                .map(|&t| (dense.scale(-t).exp() * &p0).iter().sum())
                .collect()
        }
    };
    Ok(CorrelationSeries {
        tau: tau.to_vec(),
        values,
        valid: validity(tau, memory_time),
        memory_time,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumMethod {
    /// Eigen-decomposition of `M` and a sum of Lorentzians.
    Modal,
    /// Direct tridiagonal solve of `(M − iω) x = P0` at every frequency.
    Resolvent,
}

impl SpectrumMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectrumMethod::Modal => "modal",
            SpectrumMethod::Resolvent => "resolvent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub omega: f64,
    pub height: f64,
    /// Full width at half maximum, measured on `S(ω)` itself.
    pub fwhm: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumOptions {
    /// Uniform-in-log samples over the cutoffs for the sum rule.
    pub background_points: usize,
    /// Half-width, in linewidths, of the dense window around each mode.
    pub window_linewidths: f64,
    pub window_points: usize,
    /// Peaks lower than this fraction of the maximum are ignored.
    pub peak_floor: f64,
    /// Skip the eigen-decomposition and use the resolvent.
    pub force_resolvent: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            background_points: 4000,
            window_linewidths: 10.0,
            window_points: 401,
            peak_floor: 1e-12,
            force_resolvent: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
    pub eigenvalues: Vec<Complex64>,
    /// `∫ S dω / π` over the cutoffs.
    pub sum_rule_integral: f64,
    pub mean_occupation: f64,
    pub method: SpectrumMethod,
    pub condition: Option<f64>,
    pub peaks: Vec<Peak>,
    /// Every eigenvalue has a positive real part.
    pub all_decaying: bool,
    /// Most negative sample relative to the maximum (0 when `S ≥ 0`).
    pub worst_negative: f64,
}

impl SpectrumResult {
    pub fn sum_rule_ratio(&self) -> f64 {
        self.sum_rule_integral / self.mean_occupation
    }
}

enum Evaluator<'a> {
    Modal(ModalExpansion),
    Resolvent(&'a CoherenceSystem),
}

impl Evaluator<'_> {
    fn eval(&self, omega: f64) -> Result<f64> {
        match self {
            Evaluator::Modal(m) => Ok(m.spectrum(omega)),
            Evaluator::Resolvent(s) => Ok(s.resolvent(omega)?.re),
        }
    }
}

/// `S(ω) = Re ∫_0^∞ e^{iωτ} g¹(τ) dτ` on `grid`, with the sum rule and peak list.
pub fn spectrum(
    coeffs: &RedfieldCoefficients,
    shifts: &LevelShifts,
    rho: &PopulationDistribution,
    cutoffs: (f64, f64),
    grid: &[f64],
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    let mean = rho.mean();
    if !(mean > 0.0) {
        return Err(Error::UndefinedStatistic("spectrum needs <n> > 0"));
    }
    let system = CoherenceSystem::new(coeffs, shifts, rho)?;
    let dense_eig = ComplexEigen::new(&system.dense());
    let eigenvalues = match &dense_eig {
        Ok(e) => e.values.clone(),
        Err(_) => nalgebra::Schur::new(system.dense()).unpack().1.diagonal().iter().copied().collect(),
    };
    let modal = if opts.force_resolvent {
        None
    } else {
        ModalExpansion::new(&system).ok().filter(|m| m.condition <= MODAL_CONDITION_LIMIT)
    };
    let condition = dense_eig.as_ref().ok().map(|e| e.condition);
    let (method, eval) = match modal {
        Some(m) => (SpectrumMethod::Modal, Evaluator::Modal(m)),
        None => {
            log::info!("spectrum: modal sum rejected (condition {condition:?}), using the resolvent");
            (SpectrumMethod::Resolvent, Evaluator::Resolvent(&system))
        }
    };
    let all_decaying = eigenvalues.iter().all(|l| l.re > 0.0);
    if !all_decaying {
        log::warn!("coherence generator has non-decaying modes: {eigenvalues:?}");
    }

    let values = grid.iter().map(|&w| eval.eval(w)).collect::<Result<Vec<f64>>>()?;

    let (lo, hi) = cutoffs;
    let fine = refined_grid(lo, hi, &eigenvalues, opts);
    let fine_values = fine.iter().map(|&w| eval.eval(w)).collect::<Result<Vec<f64>>>()?;
    let sum_rule_integral = quadrature::simpson_nonuniform(&fine, &fine_values) / std::f64::consts::PI;

    let s_max = fine_values.iter().chain(&values).copied().fold(0.0, f64::max);
    let worst_negative = fine_values
        .iter()
        .chain(&values)
        .map(|&v| if v < 0.0 { v / s_max.max(f64::MIN_POSITIVE) } else { 0.0 })
        .fold(0.0, f64::min);
    if worst_negative < -1e-12 {
        log::warn!("spectrum dips below zero: min S / max S = {worst_negative:e}");
    }
    let peaks = find_peaks(&fine, &fine_values, opts.peak_floor * s_max, &eval)?;

    Ok(SpectrumResult {
        omega: grid.to_vec(),
        values,
        eigenvalues,
        sum_rule_integral,
        mean_occupation: mean,
        method,
        condition,
        peaks,
        all_decaying,
        worst_negative,
    })
}

/// Log grid over the cutoffs plus dense windows around each mode.
fn refined_grid(lo: f64, hi: f64, eigenvalues: &[Complex64], opts: &SpectrumOptions) -> Vec<f64> {
    let mut pts = crate::noise::log_grid(lo, hi, opts.background_points.max(2));
    let half = opts.window_linewidths;
    let m = opts.window_points.max(3);
    for l in eigenvalues {
        let (center, width) = (l.im, l.re.abs().max(1e-12));
        for i in 0..m {
            pts.push(center + width * (-half + 2.0 * half * i as f64 / (m - 1) as f64));
        }
        // geometric tails out to the cutoffs
        let mut d = half * width;
        while d < hi - lo {
            d *= 1.05;
            pts.push(center + d);
            pts.push(center - d);
        }
    }
    pts.retain(|w| *w >= lo && *w <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1.0));
    pts
}

fn find_peaks(x: &[f64], y: &[f64], floor: f64, eval: &Evaluator) -> Result<Vec<Peak>> {
    let mut peaks = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > floor) {
            continue;
        }
        let (omega, height) = golden_max(eval, x[i - 1], x[i + 1])?;
        let half = 0.5 * height;
        let right = half_crossing(eval, omega, x[x.len() - 1], half)?;
        let left = half_crossing(eval, omega, x[0], half)?;
        let fwhm = match (left, right) {
            (Some(l), Some(r)) => r - l,
            (None, Some(r)) => 2.0 * (r - omega),
            (Some(l), None) => 2.0 * (omega - l),
            (None, None) => f64::NAN,
        };
        peaks.push(Peak { omega, height, fwhm });
    }
    Ok(peaks)
}

fn golden_max(eval: &Evaluator, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = eval.eval(c)?;
    let mut fd = eval.eval(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * b.abs().max(1.0) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval.eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval.eval(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, eval.eval(x)?))
}

/// First point between `from` and `toward` where `S` drops to `level`,
/// located by stepping outward geometrically then bisecting.
fn half_crossing(eval: &Evaluator, from: f64, toward: f64, level: f64) -> Result<Option<f64>> {
    let dir = (toward - from).signum();
    let span = (toward - from).abs();
    let mut step = 1e-9 * from.abs().max(1.0);
    let mut inner = from;
    loop {
        let outer = from + dir * step.min(span);
        if eval.eval(outer)? <= level {
            let (mut a, mut b) = (inner, outer);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if eval.eval(m)? > level {
                    a = m;
                } else {
                    b = m;
                }
                if (b - a).abs() <= 1e-15 * from.abs().max(1.0) {
                    break;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        if step >= span {
            return Ok(None);
        }
        inner = outer;
        step *= 1.25;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{BathGroup, NoiseComponent, NoiseModel, SpectralTable};
    use crate::oscillator::OscillatorModel;
    use crate::redfield::ness;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn pd(rho: Vec<f64>) -> PopulationDistribution {
        let log_rho = rho.iter().map(|p| (p / rho[0]).ln()).collect();
        PopulationDistribution { rho, log_rho }
    }

    #[test]
    fn g2_zero_examples() {
        assert_eq!(g2_zero(&pd(vec![0.9, 0.1, 0.0])).unwrap(), 0.0);
        assert!(matches!(g2_zero(&pd(vec![1.0, 0.0])), Err(Error::UndefinedStatistic(_))));
        let mut w = vec![(-2.0f64).exp()];
        for n in 1..=40 {
            let prev = w[n - 1];
            w.push(prev * 2.0 / n as f64);
        }
        let g = g2_zero(&pd(w)).unwrap();
        assert!((g - 1.0).abs() < 1e-6, "{g}");
        let geo: Vec<f64> = (0..200).map(|n| 0.5 * 0.5f64.powi(n)).collect();
        assert!((g2_zero(&pd(geo)).unwrap() - 2.0).abs() < 1e-12);
    }

    fn flat(ws: f64, wa: f64) -> NoiseModel {
        let t = SpectralTable::flat(0.01, 1e3, ws, wa, BathGroup::Detector).unwrap();
        NoiseModel::new(vec![NoiseComponent::Tabulated(t)], 0.01, 1e3).unwrap()
    }

    #[test]
    fn single_mode_boundary_structure() {
        let noise = flat(3e-3, 1e-3);
        let c = RedfieldCoefficients::new(&OscillatorModel::kerr(2.0, 0.5, 1).unwrap(), &noise).unwrap();
        let rho = ness(&c).unwrap();
        let sh = LevelShifts::zero(&c);
        let m = CoherenceSystem::new(&c, &sh, &rho).unwrap();
        assert_eq!(m.dim(), 1);
        // iΩ_0 + G¹_0 + G²_0; the G²*_1 term is cut by the truncation.
        let expected = Complex64::new(c.f_plus(0) + c.f_minus(0), 2.0);
        assert!((m.diag[0] - expected).norm() < 1e-15);
    }

    #[test]
    fn free_evolution_without_dissipation() {
        // Shift-free, nearly noiseless: g¹ ≈ Σ n ρ_n e^{−iΩ_{n−1}τ}.
        let noise = flat(3e-9, 1e-9);
        let c = RedfieldCoefficients::new(&OscillatorModel::kerr(1.0, 0.4, 6).unwrap(), &noise).unwrap();
        let rho = ness(&c).unwrap();
        let sh = LevelShifts::zero(&c);
        let tau = [0.0, 0.5, 3.0];
        let s = g1_tau(&c, &sh, &rho, &tau, None).unwrap();
        for (k, &t) in tau.iter().enumerate() {
            let expected: Complex64 = (1..c.dim())
                .map(|n| n as f64 * rho.rho[n] * Complex64::from_polar(1.0, -c.omega[n - 1] * t))
                .sum();
            assert!((s.values[k] - expected).norm() < 1e-7 * rho.mean());
        }
        assert_eq!(s.values[0].re, rho.mean());
    }

    #[test]
    fn linear_cold_detector_is_a_single_lorentzian() {
        let noise = NoiseModel::new(
            vec![
                NoiseComponent::Classical1OverF { gamma: 1e-3 },
                NoiseComponent::FlatThermal {
                    gamma: 1e-3,
                    beta: 10.0,
                },
            ],
            0.01,
            50.0,
        )
        .unwrap();
        let c = RedfieldCoefficients::new(&OscillatorModel::kerr(3.0, 0.0, 12).unwrap(), &noise).unwrap();
        let rho = ness(&c).unwrap();
        let sh = LevelShifts::new(&noise, &c).unwrap();
        let grid = crate::noise::log_grid(1.0, 10.0, 50);
        let s = spectrum(&c, &sh, &rho, (0.01, 50.0), &grid, &SpectrumOptions::default()).unwrap();
        assert_eq!(s.peaks.len(), 1);
        assert!((s.sum_rule_ratio() - 1.0).abs() < 0.01);
        // flat-in-n rates: all eigenvalues coincide with W_A-ish decay near Ω
        let p = s.peaks[0];
        assert!((p.omega - 3.0).abs() < 0.05);
    }

    #[test]
    fn spectrum_sum_rule_and_resolvent_agree() {
        let noise = crate::presets::fig1_noise();
        let c = RedfieldCoefficients::new(&OscillatorModel::kerr(5.0, 3.0, 6).unwrap(), &noise).unwrap();
        let rho = ness(&c).unwrap();
        let sh = LevelShifts::new(&noise, &c).unwrap();
        let grid = crate::noise::log_grid(1.0, 40.0, 300);
        let modal = spectrum(&c, &sh, &rho, (0.01, 50.0), &grid, &SpectrumOptions::default()).unwrap();
        let opts = SpectrumOptions {
            force_resolvent: true,
            ..Default::default()
        };
        let res = spectrum(&c, &sh, &rho, (0.01, 50.0), &grid, &opts).unwrap();
        assert_eq!(modal.method, SpectrumMethod::Modal);
        assert_eq!(res.method, SpectrumMethod::Resolvent);
        for (a, b) in modal.values.iter().zip(&res.values) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12), "{a} {b}");
        }
        // Independent oracle for the integral: closed-form antiderivative of each Lorentzian.
        let m = ModalExpansion::new(&CoherenceSystem::new(&c, &sh, &rho).unwrap()).unwrap();
        let exact: f64 = m
            .eigenvalues
            .iter()
            .zip(&m.weights)
            .map(|(l, w)| {
                let f = |x: f64| (Complex64::i() * w * (l - Complex64::new(0.0, x)).ln()).re;
                f(50.0) - f(0.01)
            })
            .sum::<f64>()
            / PI;
        assert!((modal.sum_rule_integral - exact).abs() < 1e-6 * exact, "{} {exact}", modal.sum_rule_integral);
        assert!((modal.sum_rule_ratio() - 1.0).abs() < 0.01);
        assert!(modal.all_decaying);
    }

    #[test]
    fn tau_grid_validation() {
        let noise = flat(3e-3, 1e-3);
        let c = RedfieldCoefficients::new(&OscillatorModel::kerr(2.0, 0.5, 4).unwrap(), &noise).unwrap();
        let rho = ness(&c).unwrap();
        assert!(g2_tau(&c, &rho, &[0.0, 1.0, 1.0], None).is_err());
        assert!(g2_tau(&c, &rho, &[-1.0], None).is_err());
        let s = g2_tau(&c, &rho, &[0.0, 1.0, 5.0], Some(2.0)).unwrap();
        assert_eq!(s.valid, vec![false, false, true]);
        assert_eq!(s.values[0], g2_zero(&rho).unwrap());
    }

    #[test]
    fn geometric_g2_tau_has_single_exponential_form() {
        // Linear flat ladder: g²(τ) = 1 + e^{−λτ}, λ the population gap.
        let noise = flat(3e-2, 1e-2);
        let c = RedfieldCoefficients::new(&OscillatorModel::kerr(1.0, 0.0, 120).unwrap(), &noise).unwrap();
        let rho = ness(&c).unwrap();
        let gap = 2.0 * 1e-2; // (W_S + W_A) − (W_S − W_A)
        let s = g2_tau(&c, &rho, &[0.0, 10.0, 40.0, 100.0], None).unwrap();
        for (t, v) in s.tau.iter().zip(&s.values) {
            assert_relative_eq!(*v, 1.0 + (-gap * t).exp(), max_relative = 1e-8);
        }
    }
}
