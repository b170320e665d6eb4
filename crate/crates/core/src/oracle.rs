//! Dense reference: the full RWA Redfield Liouvillian on the truncated
//! density matrix, for cross-checking the reduced equations.
//!
//! ```text
//! dρ/dt = i[ρ, H] − ( [a†, X a ρ] + [ρ Y a, a†] + h.c. ),
//! X = F_+(Ω̂) + i R_−(Ω̂),   Y = F_−(Ω̂) + i R_+(Ω̂)
//! ```
//!
//! Vectorization is row-major: `vec(ρ)[i·N + j] = ρ_ij`, so the map
//! `ρ ↦ A ρ B` is the matrix `A ⊗ Bᵀ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::noise::NoiseModel;
use crate::oscillator::OscillatorModel;
use crate::redfield::{LevelShifts, RedfieldCoefficients};

/// Largest `n_max` the dense construction accepts.
pub const MAX_N_MAX: usize = 32;

/// Leakage into the top Fock level above this is reported.
pub const LEAKAGE_TOL: f64 = 1e-8;

pub fn vectorize(rho: &DMatrix<Complex64>) -> DVector<Complex64> {
    let n = rho.nrows();
    DVector::from_fn(n * n, |k, _| rho[(k / n, k % n)])
}

pub fn unvectorize(v: &DVector<Complex64>, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// Matrix of `ρ ↦ A ρ B`.
fn sandwich(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(&b.transpose())
}

fn annihilation(n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderOp {
    A,
    Adag,
    N,
}

/// Product of ladder operators, leftmost factor first; empty is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LadderWord(pub Vec<LadderOp>);

impl LadderWord {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    pub fn single(op: LadderOp) -> Self {
        Self(vec![op])
    }

    pub fn matrix(&self, dim: usize) -> DMatrix<Complex64> {
        let a = annihilation(dim);
        let mut m = DMatrix::identity(dim, dim);
        for op in &self.0 {
            let f = match op {
                LadderOp::A => a.clone(),
                LadderOp::Adag => a.adjoint(),
                LadderOp::N => a.adjoint() * &a,
            };
            m *= f;
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub dim: usize,
    pub matrix: DMatrix<Complex64>,
}

#[derive(Debug, Clone)]
pub struct RegressionSeries {
    pub tau: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Largest `‖top row and column of ρ̃(τ)‖ / ‖ρ̃(0)‖` over the grid.
    pub leakage: f64,
}

impl RegressionSeries {
    pub fn leaks(&self) -> bool {
        self.leakage > LEAKAGE_TOL
    }
}

impl Liouvillian {
    /// Builds the generator on levels `0..=top` of the model truncated at `n_max`.
    pub fn build(model: &OscillatorModel, noise: &NoiseModel, n_max: usize) -> Result<Self> {
        if n_max > MAX_N_MAX {
            return Err(Error::OracleTooLarge {
                limit: MAX_N_MAX,
                requested: n_max,
            });
        }
        let coeffs = RedfieldCoefficients::new(&model.with_n_max(n_max)?, noise)?;
        let shifts = LevelShifts::new(noise, &coeffs)?;
        Self::from_coefficients(&coeffs, &shifts)
    }

    pub fn from_coefficients(coeffs: &RedfieldCoefficients, shifts: &LevelShifts) -> Result<Self> {
        let n = coeffs.dim();
        if n > MAX_N_MAX + 1 {
            return Err(Error::OracleTooLarge {
                limit: MAX_N_MAX,
                requested: n - 1,
            });
        }
        if shifts.r_s.len() != coeffs.top {
            return Err(invalid("level shifts do not match the ladder"));
        }
        let zero = Complex64::new(0.0, 0.0);
        let i = Complex64::i();
        let id = DMatrix::<Complex64>::identity(n, n);
        let a = annihilation(n);
        let ad = a.adjoint();
        let h = DMatrix::from_diagonal(&DVector::from_iterator(
            n,
            coeffs.energy.iter().map(|&e| Complex64::new(e, 0.0)),
        ));
        // X, Y only ever act on levels below the top.
        let x = DMatrix::from_diagonal(&DVector::from_fn(n, |k, _| {
            if k < coeffs.top {
                Complex64::new(coeffs.f_plus(k), shifts.r_minus(k))
            } else {
                zero
            }
        }));
        let y = DMatrix::from_diagonal(&DVector::from_fn(n, |k, _| {
            if k < coeffs.top {
                Complex64::new(coeffs.f_minus(k), shifts.r_plus(k))
            } else {
                zero
            }
        }));
        let xa = &x * &a;
        let ya = &y * &a;
        let xd = x.adjoint();
        let yd = y.adjoint();

        let mut l = (sandwich(&id, &h) - sandwich(&h, &id)) * i;
        l -= sandwich(&(&ad * &xa), &id);
        l += sandwich(&xa, &ad);
        l -= sandwich(&id, &(&ya * &ad));
        l += sandwich(&ad, &ya);
        l -= sandwich(&id, &(&ad * &xd * &a));
        l += sandwich(&a, &(&ad * &xd));
        l -= sandwich(&(&a * &ad * &yd), &id);
        l += sandwich(&(&ad * &yd), &a);
        Ok(Self { dim: n, matrix: l })
    }

    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        unvectorize(&(&self.matrix * vectorize(rho)), self.dim)
    }

    pub fn evolve(&self, rho: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
        if t == 0.0 {
            return rho.clone();
        }
        let prop = (&self.matrix * Complex64::new(t, 0.0)).exp();
        unvectorize(&(prop * vectorize(rho)), self.dim)
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        nalgebra::Schur::new(self.matrix.clone()).unpack().1.diagonal().iter().copied().collect()
    }

    /// Null vector normalized to unit trace; one equation is replaced by the trace condition.
    pub fn steady_state(&self) -> Result<DMatrix<Complex64>> {
        let n = self.dim;
        let mut m = self.matrix.clone();
        let mut rhs = DVector::zeros(n * n);
        for k in 0..n * n {
            m[(0, k)] = Complex64::new(0.0, 0.0);
        }
        for k in 0..n {
            m[(0, k * n + k)] = Complex64::new(1.0, 0.0);
        }
        rhs[0] = Complex64::new(1.0, 0.0);
        let v = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Linalg("Liouvillian steady state is not unique".into()))?;
        Ok(unvectorize(&v, n))
    }

    /// Entry `[(i,i),(j,j)]` of the generator: the population block.
    pub fn population_block(&self) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |i, j| self.matrix[(i * n + i, j * n + j)].re)
    }

    /// The generator restricted to `P_n = √n ρ_{n,n−1}`, returned as `−M`.
    pub fn coherence_band_block(&self) -> DMatrix<Complex64> {
        let n = self.dim;
        let k = n - 1;
        DMatrix::from_fn(k, k, |r, c| {
            let (p, q) = (r + 1, c + 1);
            let scale = (p as f64 / q as f64).sqrt();
            self.matrix[(p * n + p - 1, q * n + q - 1)] * scale
        })
    }

    /// `Tr[O ρ̃(τ)]` with `ρ̃(0) = L ρ R`.
    pub fn regression_correlator(
        &self,
        rho: &DMatrix<Complex64>,
        dress_left: &LadderWord,
        dress_right: &LadderWord,
        observe: &LadderWord,
        tau: &[f64],
    ) -> Result<RegressionSeries> {
        if tau.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("tau values must be finite and >= 0"));
        }
        let n = self.dim;
        let dressed = dress_left.matrix(n) * rho * dress_right.matrix(n);
        let obs = observe.matrix(n);
        let scale = dressed.norm().max(f64::MIN_POSITIVE);
        let mut leakage: f64 = 0.0;
        let mut values = Vec::with_capacity(tau.len());
        for &t in tau {
            let r = self.evolve(&dressed, t);
            let top_band = (0..n)
                .map(|k| r[(n - 1, k)].norm_sqr() + if k < n - 1 { r[(k, n - 1)].norm_sqr() } else { 0.0 })
                .sum::<f64>()
                .sqrt();
            leakage = leakage.max(top_band / scale);
            values.push((&obs * r).trace());
        }
        if leakage > LEAKAGE_TOL {
            log::warn!("regression correlator: top-level leakage {leakage:e}");
        }
        Ok(RegressionSeries {
            tau: tau.to_vec(),
            values,
            leakage,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseComponent;
    use crate::presets::fig1_noise;
    use crate::redfield::{ness, rate_matrix};

    #[test]
    fn vectorization_round_trip_and_sandwich() {
        let n = 3;
        let rho = DMatrix::from_fn(n, n, |i, j| Complex64::new(i as f64 + 0.1 * j as f64, j as f64 - i as f64));
        let v = vectorize(&rho);
        assert_eq!(v[1 * n + 2], rho[(1, 2)]);
        assert_eq!(unvectorize(&v, n), rho);
        let a = annihilation(n);
        let b = DMatrix::from_fn(n, n, |i, j| Complex64::new((i * j) as f64, 1.0));
        let direct = &a * &rho * &b;
        let via = unvectorize(&(sandwich(&a, &b) * v), n);
        assert!((direct - via).norm() < 1e-13);
    }

    #[test]
    fn ladder_words() {
        let n = LadderWord(vec![LadderOp::Adag, LadderOp::A]).matrix(5);
        assert_eq!(n, LadderWord::single(LadderOp::N).matrix(5));
        assert!((n[(3, 3)].re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn guard() {
        let m = OscillatorModel::kerr(5.0, 3.0, 2).unwrap();
        assert!(matches!(
            Liouvillian::build(&m, &fig1_noise(), 40),
            Err(Error::OracleTooLarge { limit: 32, requested: 40 })
        ));
    }

    fn preset_liouvillian(n_max: usize) -> (RedfieldCoefficients, Liouvillian) {
        let noise = fig1_noise();
        let m = OscillatorModel::kerr(2.0, 0.5, n_max).unwrap();
        let c = RedfieldCoefficients::new(&m, &noise).unwrap();
        let l = Liouvillian::from_coefficients(&c, &LevelShifts::new(&noise, &c).unwrap()).unwrap();
        (c, l)
    }

    #[test]
    fn population_block_is_the_rate_matrix() {
        let (c, l) = preset_liouvillian(6);
        let diff = l.population_block() - rate_matrix(&c);
        assert!(diff.amax() < 1e-12);
    }

    #[test]
    fn trace_preserving() {
        let (_, l) = preset_liouvillian(6);
        let n = l.dim;
        for col in 0..n * n {
            let tr: Complex64 = (0..n).map(|k| l.matrix[(k * n + k, col)]).sum();
            assert!(tr.norm() < 1e-12);
        }
    }

    #[test]
    fn steady_state_is_diagonal_ness() {
        let (c, l) = preset_liouvillian(6);
        let ss = l.steady_state().unwrap();
        let rho = ness(&c).unwrap();
        for i in 0..l.dim {
            for j in 0..l.dim {
                let expected = if i == j { rho.rho[i] } else { 0.0 };
                assert!((ss[(i, j)] - Complex64::new(expected, 0.0)).norm() < 1e-8);
            }
        }
        let near_zero = l.eigenvalues().iter().filter(|z| z.norm() < 1e-10).count();
        assert_eq!(near_zero, 1);
    }

    #[test]
    fn hermiticity_and_diagonal_sector_preserved() {
        let (_, l) = preset_liouvillian(5);
        let n = l.dim;
        let herm = DMatrix::from_fn(n, n, |i, j| {
            let re = 1.0 / (1.0 + (i + j) as f64);
            let im = if i == j { 0.0 } else { (i as f64 - j as f64) * 0.05 };
            Complex64::new(re, im)
        });
        let r = l.evolve(&herm, 37.0);
        assert!((r.adjoint() - &r).norm() < 1e-10);
        let diag = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| Complex64::new(1.0 / (i + 1) as f64, 0.0)));
        let r = l.evolve(&diag, 50.0);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    assert!(r[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn noiseless_generator_is_pure_commutator() {
        let m = OscillatorModel::kerr(1.0, 0.3, 3).unwrap();
        let cold = NoiseModel::new(
            vec![NoiseComponent::FlatThermal {
                gamma: 1.0,
                beta: f64::INFINITY,
            }],
            0.01,
            100.0,
        )
        .unwrap();
        // Start from a valid set of coefficients and switch every rate off.
        let mut c = RedfieldCoefficients::new(&m, &cold).unwrap();
        c.top = 3;
        c.omega = m.ladder_frequencies();
        c.energy = (0..=3).map(|n| m.energy(n)).collect();
        c.emission = vec![0.0; 4];
        c.absorption = vec![0.0; 4];
        let l = Liouvillian::from_coefficients(&c, &LevelShifts::zero(&c)).unwrap();
        let eigenvalues = l.eigenvalues();
        assert!(eigenvalues.iter().all(|z| z.re.abs() < 1e-12));
        let mut eig: Vec<f64> = eigenvalues.iter().map(|z| z.im).collect();
        let mut expected: Vec<f64> = Vec::new();
        for p in 0..4 {
            for q in 0..4 {
                expected.push(m.energy(p) - m.energy(q));
            }
        }
        eig.sort_by(f64::total_cmp);
        expected.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn leakage_is_reported() {
        let (_, l) = preset_liouvillian(2);
        let n = l.dim;
        let mut rho = DMatrix::zeros(n, n);
        rho[(n - 1, n - 1)] = Complex64::new(1.0, 0.0);
        let s = l
            .regression_correlator(&rho, &LadderWord::identity(), &LadderWord::identity(), &LadderWord::identity(), &[0.0])
            .unwrap();
        assert!(s.leaks());
    }
}
