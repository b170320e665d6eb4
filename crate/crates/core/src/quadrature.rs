//! Adaptive Gauss–Kronrod (7/15) quadrature for real and complex integrands.
//!
//! Integration ranges are pre-split at caller supplied breakpoints and into
//! panels no wider than `max_panel`, which is how oscillatory integrands are
//! kept resolved. Panels are then bisected greedily (largest error first)
//! until the summed Kronrod–Gauss error estimate meets the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values that can be integrated: closed under addition and real scaling.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// An integral value together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Widest initial panel; `f64::INFINITY` disables pre-splitting.
    pub max_panel: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_panel: f64::INFINITY,
            max_panels: 200_000,
        }
    }
}

/// One Gauss–Kronrod panel: returns (kronrod, |kronrod - gauss|).
pub fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    (kronrod, (kronrod - gauss).magnitude())
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Splits `[a, b]` at the interior `breakpoints` and then into panels no
/// wider than `max_panel`.
pub fn partition(a: f64, b: f64, breakpoints: &[f64], max_panel: f64) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut panels = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let pieces = if max_panel.is_finite() && max_panel > 0.0 {
            ((hi - lo) / max_panel).ceil().max(1.0) as usize
        } else {
            1
        };
        let h = (hi - lo) / pieces as f64;
        for k in 0..pieces {
            let p_lo = lo + h * k as f64;
            let p_hi = if k + 1 == pieces { hi } else { lo + h * (k + 1) as f64 };
            panels.push((p_lo, p_hi));
        }
    }
    panels
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<Estimate<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "integration bounds must be finite, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Estimate {
            value: T::zero(),
            error: 0.0,
        });
    }
    if b < a {
        let est = integrate(f, b, a, breakpoints, opts)?;
        return Ok(Estimate {
            value: est.value * -1.0,
            error: est.error,
        });
    }

    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut total_err = 0.0;
    for (lo, hi) in partition(a, b, breakpoints, opts.max_panel) {
        let (value, error) = gk15(&f, lo, hi);
        total = total + value;
        total_err += error;
        heap.push(Panel {
            a: lo,
            b: hi,
            value,
            error,
        });
    }

    let target = |total: &T| opts.abs_tol.max(opts.rel_tol * total.magnitude());
    while total_err > target(&total) {
        if heap.len() >= opts.max_panels {
            return Err(Error::Quadrature {
                estimate: total_err,
                tolerance: target(&total),
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split in floating point.
            return Err(Error::Quadrature {
                estimate: total_err,
                tolerance: target(&total),
            });
        }
        let (lv, le) = gk15(&f, worst.a, mid);
        let (rv, re) = gk15(&f, mid, worst.b);
        total = total - worst.value + lv + rv;
        total_err += le + re - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }

    // Re-sum to shed the drift accumulated by incremental updates.
    let mut value = T::zero();
    let mut error = 0.0;
    for p in heap.iter() {
        value = value + p.value;
        error += p.error;
    }
    Ok(Estimate { value, error })
}

/// Fixed Gauss–Kronrod node set over a list of panels, for integrands that
/// are evaluated many times against different weights.
#[derive(Debug, Clone)]
pub struct NodeSet {
    pub nodes: Vec<f64>,
    pub kronrod_weights: Vec<f64>,
    /// Zero for the nodes that are not Gauss points.
    pub gauss_weights: Vec<f64>,
}

impl NodeSet {
    pub fn new(panels: &[(f64, f64)]) -> Self {
        let n = panels.len() * 15;
        let mut nodes = Vec::with_capacity(n);
        let mut kronrod_weights = Vec::with_capacity(n);
        let mut gauss_weights = Vec::with_capacity(n);
        for &(a, b) in panels {
            let center = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for j in 0..7 {
                let g = if j % 2 == 1 { WG[j / 2] * half } else { 0.0 };
                for sign in [-1.0, 1.0] {
                    nodes.push(center + sign * half * XGK[j]);
                    kronrod_weights.push(WGK[j] * half);
                    gauss_weights.push(g);
                }
            }
            nodes.push(center);
            kronrod_weights.push(WGK[7] * half);
            gauss_weights.push(WG[3] * half);
        }
        Self {
            nodes,
            kronrod_weights,
            gauss_weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Composite Simpson rule on an arbitrary increasing grid. Consecutive
/// interval pairs use the unequal-spacing three-point formula; an odd
/// trailing interval is closed with a three-point correction.
pub fn simpson_nonuniform(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
    }
    let pair = |i: usize| {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let hs = h0 + h1;
        hs / 6.0
            * (y[i] * (2.0 - h1 / h0) + y[i + 1] * hs * hs / (h0 * h1) + y[i + 2] * (2.0 - h0 / h1))
    };
    let intervals = n - 1;
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        total += pair(i);
        i += 2;
    }
    if intervals % 2 == 1 {
        // Last interval [x[n-2], x[n-1]] from the parabola through the last three points.
        let (x0, x1, x2) = (x[n - 3], x[n - 2], x[n - 1]);
        let h0 = x1 - x0;
        let h1 = x2 - x1;
        let alpha = (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1));
        let beta = (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0);
        let eta = (h1 * h1 * h1) / (6.0 * h0 * (h0 + h1));
        total += alpha * y[n - 1] + beta * y[n - 2] - eta * y[n - 3];
    }
    total
}
