//! Noise spectral functions and the bath correlation function.
//!
//! Frequencies are measured in units of the reference scale `ω_*`, which is
//! fixed to 1, and times in `1/ω_*`. The weak-coupling prefactor is absorbed
//! into the dimensionless amplitudes `Γ`.
//!
//! Besides the symmetric and antisymmetric parts `W_S`, `W_A`, every
//! evaluation carries the combinations `W_S + W_A` (emission, drives
//! downward transitions) and `W_S - W_A` (absorption, drives upward
//! transitions). For thermal baths both are formed from `expm1`, so their
//! ratio stays accurate even when `βω` is large and a plain subtraction of
//! the totals would cancel to zero.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{self, Estimate, NodeSet, QuadOptions};

/// Which current aggregate a component contributes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BathGroup {
    /// Classical noise, a source of quanta.
    Classical,
    /// A quantum bath absorbing quanta (phonons).
    Phonon,
    /// The wide-band photon detector.
    Detector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Classical1OverF,
    SuperOhmicThermal,
    FlatThermal,
    Tabulated,
}

/// Spectral function values at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpectralValue {
    pub symmetric: f64,
    pub antisymmetric: f64,
    /// `W_S + W_A`
    pub emission: f64,
    /// `W_S - W_A`
    pub absorption: f64,
}

impl SpectralValue {
    fn thermal(amplitude: f64, beta: f64, omega: f64) -> Self {
        let x = beta * omega;
        Self {
            symmetric: amplitude / (0.5 * x).tanh(),
            antisymmetric: amplitude,
            emission: 2.0 * amplitude / -(-x).exp_m1(),
            absorption: 2.0 * amplitude / x.exp_m1(),
        }
    }

    fn from_parts(symmetric: f64, antisymmetric: f64) -> Self {
        Self {
            symmetric,
            antisymmetric,
            emission: symmetric + antisymmetric,
            absorption: symmetric - antisymmetric,
        }
    }

    fn accumulate(&mut self, other: SpectralValue) {
        self.symmetric += other.symmetric;
        self.antisymmetric += other.antisymmetric;
        self.emission += other.emission;
        self.absorption += other.absorption;
    }
}

/// Sampled spectral function `(ω, W_S, W_A)`.
///
/// Between samples both parts are interpolated geometrically in `ln ω`
/// (exact for power laws); where an endpoint value is zero the interpolation
/// falls back to linear in `ln ω`. Outside the sampled range the table is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    omega: Vec<f64>,
    symmetric: Vec<f64>,
    antisymmetric: Vec<f64>,
    group: BathGroup,
}

impl SpectralTable {
    pub fn new(omega: Vec<f64>, symmetric: Vec<f64>, antisymmetric: Vec<f64>, group: BathGroup) -> Result<Self> {
        if omega.len() < 2 {
            return Err(Error::InvalidTable("at least two samples are required".into()));
        }
        if omega.len() != symmetric.len() || omega.len() != antisymmetric.len() {
            return Err(Error::InvalidTable("column lengths differ".into()));
        }
        if omega[0] <= 0.0 || omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidTable("frequencies must be positive and finite".into()));
        }
        if let Some(i) = omega.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTable(format!(
                "frequencies must be strictly increasing (row {})",
                i + 2
            )));
        }
        for (i, (&s, &a)) in symmetric.iter().zip(&antisymmetric).enumerate() {
            if !(s.is_finite() && a.is_finite()) || a < 0.0 || s < a {
                return Err(Error::InvalidTable(format!(
                    "row {} violates W_S >= W_A >= 0 (W_S = {s}, W_A = {a})",
                    i + 1
                )));
            }
        }
        Ok(Self {
            omega,
            symmetric,
            antisymmetric,
            group,
        })
    }

    /// A frequency-independent spectrum on `[lo, hi]`.
    pub fn flat(lo: f64, hi: f64, symmetric: f64, antisymmetric: f64, group: BathGroup) -> Result<Self> {
        Self::new(vec![lo, hi], vec![symmetric; 2], vec![antisymmetric; 2], group)
    }

    /// Parses three whitespace or comma separated columns `ω W_S W_A`;
    /// `#` starts a comment.
    pub fn parse(text: &str, group: BathGroup) -> Result<Self> {
        let mut omega = Vec::new();
        let mut symmetric = Vec::new();
        let mut antisymmetric = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 3 {
                return Err(Error::InvalidTable(format!(
                    "line {}: expected 3 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let mut vals = [0.0; 3];
            for (v, c) in vals.iter_mut().zip(&cols) {
                *v = c
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidTable(format!("line {}: {c:?}: {e}", lineno + 1)))?;
            }
            omega.push(vals[0]);
            symmetric.push(vals[1]);
            antisymmetric.push(vals[2]);
        }
        Self::new(omega, symmetric, antisymmetric, group)
    }

    pub fn from_path(path: &Path, group: BathGroup) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, group)
    }

    pub fn group(&self) -> BathGroup {
        self.group
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    fn eval(&self, w: f64) -> SpectralValue {
        let n = self.omega.len();
        if !(w >= self.omega[0] && w <= self.omega[n - 1]) {
            return SpectralValue::default();
        }
        let i = match self.omega.partition_point(|&x| x <= w) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (w0, w1) = (self.omega[i], self.omega[i + 1]);
        let t = (w / w0).ln() / (w1 / w0).ln();
        let interp = |v: &[f64]| {
            let (a, b) = (v[i], v[i + 1]);
            if a == b {
                a
            } else if a > 0.0 && b > 0.0 {
                a * (b / a).powf(t)
            } else {
                a + (b - a) * t
            }
        };
        SpectralValue::from_parts(interp(&self.symmetric), interp(&self.antisymmetric))
    }
}

/// One additive noise source.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseComponent {
    /// `W_S = Γ/ω`, `W_A = 0`.
    Classical1OverF { gamma: f64 },
    /// `W_A = Γ ω^s`, `W_S = W_A coth(βω/2)`.
    SuperOhmicThermal { gamma: f64, s: f64, beta: f64 },
    /// `W_A = Γ`, `W_S = W_A coth(βω/2)`; `β = ∞` is an empty bath.
    FlatThermal { gamma: f64, beta: f64 },
    Tabulated(SpectralTable),
}

impl NoiseComponent {
    pub fn kind(&self) -> NoiseKind {
        match self {
            NoiseComponent::Classical1OverF { .. } => NoiseKind::Classical1OverF,
            NoiseComponent::SuperOhmicThermal { .. } => NoiseKind::SuperOhmicThermal,
            NoiseComponent::FlatThermal { .. } => NoiseKind::FlatThermal,
            NoiseComponent::Tabulated(_) => NoiseKind::Tabulated,
        }
    }

    pub fn group(&self) -> BathGroup {
        match self {
            NoiseComponent::Classical1OverF { .. } => BathGroup::Classical,
            NoiseComponent::SuperOhmicThermal { .. } => BathGroup::Phonon,
            NoiseComponent::FlatThermal { .. } => BathGroup::Detector,
            NoiseComponent::Tabulated(t) => t.group(),
        }
    }

    pub fn is_thermal(&self) -> bool {
        matches!(
            self,
            NoiseComponent::SuperOhmicThermal { .. } | NoiseComponent::FlatThermal { .. }
        )
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            NoiseComponent::SuperOhmicThermal { beta, .. } | NoiseComponent::FlatThermal { beta, .. } => Some(*beta),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_gamma = |g: f64| {
            if g.is_finite() && g >= 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("noise amplitude must be finite and >= 0, got {g}")))
            }
        };
        let check_beta = |b: f64| {
            if b > 0.0 && !b.is_nan() {
                Ok(())
            } else {
                Err(invalid(format!("inverse temperature must be > 0, got {b}")))
            }
        };
        match *self {
            NoiseComponent::Classical1OverF { gamma } => check_gamma(gamma),
            NoiseComponent::SuperOhmicThermal { gamma, s, beta } => {
                check_gamma(gamma)?;
                check_beta(beta)?;
                if !(s.is_finite() && s > 0.0) {
                    return Err(invalid(format!("super-Ohmic exponent must be > 0, got {s}")));
                }
                if s <= 1.0 {
                    log::warn!("exponent s = {s} <= 1 is not super-Ohmic");
                }
                Ok(())
            }
            NoiseComponent::FlatThermal { gamma, beta } => {
                check_gamma(gamma)?;
                check_beta(beta)
            }
            NoiseComponent::Tabulated(_) => Ok(()),
        }
    }

    /// Spectral value ignoring the model cutoffs. `ω` must be positive.
    pub fn eval(&self, w: f64) -> SpectralValue {
        match *self {
            NoiseComponent::Classical1OverF { gamma } => SpectralValue::from_parts(gamma / w, 0.0),
            NoiseComponent::SuperOhmicThermal { gamma, s, beta } => SpectralValue::thermal(gamma * w.powf(s), beta, w),
            NoiseComponent::FlatThermal { gamma, beta } => SpectralValue::thermal(gamma, beta, w),
            NoiseComponent::Tabulated(ref t) => t.eval(w),
        }
    }
}

/// `W_A / W_S` of a thermal component; `tanh(βω/2)` by construction.
pub fn kms_check(component: &NoiseComponent, w: f64) -> Result<f64> {
    if !component.is_thermal() {
        return Err(Error::NotThermal);
    }
    let v = component.eval(w);
    Ok(v.antisymmetric / v.symmetric)
}

/// A sum of noise components with common hard cutoffs `[ω_min, ω_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    components: Vec<NoiseComponent>,
    omega_min: f64,
    omega_max: f64,
}

impl NoiseModel {
    pub fn new(components: Vec<NoiseComponent>, omega_min: f64, omega_max: f64) -> Result<Self> {
        if !(omega_min > 0.0 && omega_max.is_finite() && omega_min < omega_max) {
            return Err(invalid(format!(
                "cutoffs must satisfy 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]"
            )));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self {
            components,
            omega_min,
            omega_max,
        })
    }

    pub fn components(&self) -> &[NoiseComponent] {
        &self.components
    }

    pub fn omega_min(&self) -> f64 {
        self.omega_min
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn in_support(&self, w: f64) -> bool {
        w >= self.omega_min && w <= self.omega_max
    }

    /// Value of component `index` with the cutoffs applied.
    pub fn eval_component(&self, index: usize, w: f64) -> SpectralValue {
        if self.in_support(w) {
            self.components[index].eval(w)
        } else {
            SpectralValue::default()
        }
    }

    /// Summed spectral value with the cutoffs applied.
    pub fn eval(&self, w: f64) -> SpectralValue {
        let mut total = SpectralValue::default();
        if self.in_support(w) {
            for c in &self.components {
                total.accumulate(c.eval(w));
            }
        }
        total
    }

    /// `(W_S^tot(ω), W_A^tot(ω))`; zero outside the cutoffs.
    pub fn eval_total(&self, w: f64) -> (f64, f64) {
        let v = self.eval(w);
        (v.symmetric, v.antisymmetric)
    }

    pub fn is_classical_only(&self) -> bool {
        self.components.iter().all(|c| c.group() == BathGroup::Classical)
    }

    /// Threshold used for the memory time when none is given: the square root
    /// of the weakest quantum bath's peak `W_A` over the support.
    pub fn default_memory_threshold(&self) -> Option<f64> {
        let grid = log_grid(self.omega_min, self.omega_max, 2001);
        (0..self.components.len())
            .filter(|&i| self.components[i].group() != BathGroup::Classical)
            .map(|i| {
                grid.iter()
                    .map(|&w| self.components[i].eval(w).antisymmetric)
                    .fold(0.0, f64::max)
            })
            .filter(|&peak| peak > 0.0)
            .min_by(f64::total_cmp)
            .map(f64::sqrt)
    }

    fn correlation_panels(&self, t: f64) -> Vec<(f64, f64)> {
        let mut breaks = Vec::new();
        let mut w = self.omega_min * 2.0;
        while w < self.omega_max.min(1.0) {
            breaks.push(w);
            w *= 2.0;
        }
        for c in &self.components {
            if let NoiseComponent::Tabulated(table) = c {
                breaks.extend(table.omega().iter().copied());
            }
        }
        quadrature::partition(self.omega_min, self.omega_max, &breaks, PI / (2.0 * t.abs().max(1.0)))
    }

    /// Bath correlation `C(t) = (1/π) ∫ [W_S cos ωt − i W_A sin ωt] dω` over the support.
    pub fn correlation_function(&self, t: f64, abs_tol: f64) -> Result<Estimate<Complex64>> {
        if !t.is_finite() {
            return Err(invalid(format!("time must be finite, got {t}")));
        }
        let panels = self.correlation_panels(t);
        let breaks: Vec<f64> = panels.iter().skip(1).map(|p| p.0).collect();
        let opts = QuadOptions {
            abs_tol,
            rel_tol: 0.0,
            ..QuadOptions::default()
        };
        let est = quadrature::integrate(
            |w| {
                let v = self.eval(w);
                let (s, c) = (w * t).sin_cos();
                Complex64::new(v.symmetric * c, -v.antisymmetric * s)
            },
            self.omega_min,
            self.omega_max,
            &breaks,
            &opts,
        )?;
        Ok(Estimate {
            value: est.value / PI,
            error: est.error / PI,
        })
    }

    /// Samples `C(t)` on `t_k = k·step`, `k = 0..=steps`.
    pub fn correlation_series(&self, step: f64, steps: usize) -> CorrelationSampler {
        CorrelationSampler::new(self, step, steps)
    }

    /// Smallest grid time after which `|C(t)|` stays below `threshold` up to the horizon.
    pub fn memory_time(&self, threshold: f64, opts: &MemoryTimeOptions) -> Result<f64> {
        if !(threshold > 0.0) {
            return Err(invalid(format!("memory-time threshold must be > 0, got {threshold}")));
        }
        if !(opts.step > 0.0 && opts.horizon > 0.0) {
            return Err(invalid("memory-time grid needs positive step and horizon"));
        }
        let steps = (opts.horizon / opts.step).round() as usize;
        let sampler = self.correlation_series(opts.step, steps);
        if sampler.error > opts.tolerance {
            return Err(Error::Quadrature {
                estimate: sampler.error,
                tolerance: opts.tolerance,
            });
        }
        let values = &sampler.values;
        let last = values.last().map(|c| c.norm()).unwrap_or(0.0);
        if last >= threshold {
            return Err(Error::NoMemoryTime {
                threshold,
                horizon: opts.horizon,
                value: last,
            });
        }
        let tau = match values.iter().rposition(|c| c.norm() >= threshold) {
            None => 0.0,
            Some(k) => sampler.times[k + 1],
        };
        Ok(tau)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MemoryTimeOptions {
    pub step: f64,
    pub horizon: f64,
    /// Largest acceptable quadrature error on any sample.
    pub tolerance: f64,
}

impl Default for MemoryTimeOptions {
    fn default() -> Self {
        Self {
            step: 0.01,
            horizon: 50.0,
            tolerance: 1e-8,
        }
    }
}

/// `C(t)` on a uniform time grid from one fixed Gauss–Kronrod node set,
/// sized for the largest time. Phases are advanced by rotation and
/// re-anchored every few hundred steps.
#[derive(Debug, Clone)]
pub struct CorrelationSampler {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Largest Kronrod–Gauss discrepancy over the grid.
    pub error: f64,
}

impl CorrelationSampler {
    const REANCHOR: usize = 256;

    fn new(model: &NoiseModel, step: f64, steps: usize) -> Self {
        let t_max = step * steps as f64;
        let nodes = NodeSet::new(&model.correlation_panels(t_max));
        let n = nodes.len();
        let mut sym_k = Vec::with_capacity(n);
        let mut anti_k = Vec::with_capacity(n);
        let mut sym_g = Vec::with_capacity(n);
        let mut anti_g = Vec::with_capacity(n);
        for i in 0..n {
            let v = model.eval(nodes.nodes[i]);
            sym_k.push(v.symmetric * nodes.kronrod_weights[i] / PI);
            anti_k.push(v.antisymmetric * nodes.kronrod_weights[i] / PI);
            sym_g.push(v.symmetric * nodes.gauss_weights[i] / PI);
            anti_g.push(v.antisymmetric * nodes.gauss_weights[i] / PI);
        }
        let rotation: Vec<Complex64> = nodes.nodes.iter().map(|&w| Complex64::from_polar(1.0, w * step)).collect();
        let mut phase = vec![Complex64::new(1.0, 0.0); n];

        let mut times = Vec::with_capacity(steps + 1);
        let mut values = Vec::with_capacity(steps + 1);
        let mut error: f64 = 0.0;
        for k in 0..=steps {
            let t = step * k as f64;
            if k > 0 {
                if k % Self::REANCHOR == 0 {
                    for (p, &w) in phase.iter_mut().zip(&nodes.nodes) {
                        *p = Complex64::from_polar(1.0, w * t);
                    }
                } else {
                    for (p, r) in phase.iter_mut().zip(&rotation) {
                        *p *= r;
                    }
                }
            }
            let (mut kr, mut ki, mut gr, mut gi) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..n {
                let (c, s) = (phase[i].re, phase[i].im);
                kr += sym_k[i] * c;
                ki -= anti_k[i] * s;
                gr += sym_g[i] * c;
                gi -= anti_g[i] * s;
            }
            error = error.max(((kr - gr).powi(2) + (ki - gi).powi(2)).sqrt());
            times.push(t);
            values.push(Complex64::new(kr, ki));
        }
        Self { times, values, error }
    }
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}
