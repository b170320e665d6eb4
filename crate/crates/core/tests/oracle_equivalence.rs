use kerrnoise::correlations::{CoherenceSystem, ModalExpansion};
use kerrnoise::oracle::{LadderOp, LadderWord, Liouvillian};
use kerrnoise::redfield::{ness, rate_matrix};
use kerrnoise::{g1_tau, g2_tau, LevelShifts, NoiseComponent, NoiseModel, OscillatorModel, RedfieldCoefficients};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn noise(g_cl: f64, g_q: f64, s: f64, beta: f64, g_d: f64) -> NoiseModel {
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

struct Case {
    coeffs: RedfieldCoefficients,
    shifts: LevelShifts,
    liou: Liouvillian,
}

fn case(omega: f64, chi: f64, n_max: usize, nz: &NoiseModel) -> Case {
    let m = OscillatorModel::kerr(omega, chi, n_max).unwrap();
    let coeffs = RedfieldCoefficients::new(&m, nz).unwrap();
    let shifts = LevelShifts::new(nz, &coeffs).unwrap();
    let liou = Liouvillian::from_coefficients(&coeffs, &shifts).unwrap();
    Case { coeffs, shifts, liou }
}

fn diag_matrix(rho: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(rho.len(), rho.len(), |i, j| {
        if i == j {
            Complex64::new(rho[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[test]
fn coherence_band_of_liouvillian_matches_reduced_generator() {
    let nz = noise(1e-3, 1e-6, 3.0, 10.0, 1e-3);
    for (omega, chi, n_max) in [(5.0, 3.0, 6), (1.0, 0.2, 8), (2.5, 0.0, 5), (0.7, 1.1, 3)] {
        let c = case(omega, chi, n_max, &nz);
        let rho = ness(&c.coeffs).unwrap();
        let reduced = CoherenceSystem::new(&c.coeffs, &c.shifts, &rho).unwrap().dense();
        let band = -c.liou.coherence_band_block();
        let scale = reduced.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((band - &reduced).camax() <= 1e-13 * scale, "omega={omega} chi={chi}");
    }
}

#[test]
fn population_block_matches_rate_matrix() {
    let nz = noise(2e-3, 3e-6, 2.5, 4.0, 5e-4);
    let c = case(1.3, 0.8, 8, &nz);
    assert!((c.liou.population_block() - rate_matrix(&c.coeffs)).amax() < 1e-12);
}

#[test]
fn zero_tau_regression_gives_mean_occupation() {
    let nz = noise(1e-3, 1e-6, 3.0, 10.0, 1e-3);
    let c = case(2.0, 1.0, 6, &nz);
    let rho = ness(&c.coeffs).unwrap();
    let s = c
        .liou
        .regression_correlator(
            &diag_matrix(&rho.rho),
            &LadderWord::single(LadderOp::A),
            &LadderWord::single(LadderOp::Adag),
            &LadderWord::identity(),
            &[0.0],
        )
        .unwrap();
    assert!((s.values[0].re - rho.mean()).abs() < 1e-15);
}

#[test]
fn linear_cold_detector_has_one_lorentzian_mode_at_omega() {
    let nz = NoiseModel::new(
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
    let c = case(3.0, 0.0, 8, &nz);
    let rho = ness(&c.coeffs).unwrap();
    let modal = ModalExpansion::new(&CoherenceSystem::new(&c.coeffs, &c.shifts, &rho).unwrap()).unwrap();
    // With χ = 0 and nearly flat noise the weight concentrates in one mode near iΩ + Γ-scale.
    let (l, w) = modal
        .eigenvalues
        .iter()
        .zip(&modal.weights)
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .unwrap();
    assert!(w.norm() > 0.99 * rho.mean());
    assert!((l.im - 3.0).abs() < 0.05);
    assert!(l.re > 0.0 && l.re < 1e-2);
    // Oracle eigenvalues contain the same mode.
    let oracle = c.liou.eigenvalues();
    assert!(oracle.iter().any(|z| (z + l).norm() < 1e-9 || (z.conj() + l.conj()).norm() < 1e-9));
}

fn rel_close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn reduced_equations_match_full_liouvillian(
        omega in 0.5f64..8.0, chi in 0.0f64..3.0, n_max in 2usize..=8,
        g_cl in 3e-4f64..3e-3, g_q in 1e-7f64..1e-5, s in 2.0f64..4.0, beta in 2.0f64..20.0, g_d in 3e-4f64..3e-3,
    ) {
        let nz = noise(g_cl, g_q, s, beta, g_d);
        let c = case(omega, chi, n_max, &nz);
        let rho = ness(&c.coeffs).unwrap();
        prop_assume!(rho.mean() > 0.0 && c.coeffs.top >= 2);

        let ss = c.liou.steady_state().unwrap();
        for i in 0..c.liou.dim {
            for j in 0..c.liou.dim {
                let expected = if i == j { rho.rho[i] } else { 0.0 };
                prop_assert!((ss[(i, j)].re - expected).abs() < 1e-8 && ss[(i, j)].im.abs() < 1e-8);
            }
        }

        let tau: Vec<f64> = (0..20).map(|k| 100.0 * k as f64).collect();
        let rho_m = diag_matrix(&rho.rho);
        let mean = rho.mean();

        let g2 = g2_tau(&c.coeffs, &rho, &tau, None).unwrap();
        let o2 = c.liou.regression_correlator(
            &rho_m,
            &LadderWord::single(LadderOp::A),
            &LadderWord::single(LadderOp::Adag),
            &LadderWord::single(LadderOp::N),
            &tau,
        ).unwrap();
        for k in 0..tau.len() {
            let o = o2.values[k].re / (mean * mean);
            prop_assert!((g2.values[k] - o).abs() <= 1e-8 * o.abs(), "g2 tau={} {} vs {}", tau[k], g2.values[k], o);
        }

        let g1 = g1_tau(&c.coeffs, &c.shifts, &rho, &tau, None).unwrap();
        let o1 = c.liou.regression_correlator(
            &rho_m,
            &LadderWord::identity(),
            &LadderWord::single(LadderOp::Adag),
            &LadderWord::single(LadderOp::A),
            &tau,
        ).unwrap();
        for k in 0..tau.len() {
            prop_assert!(rel_close(g1.values[k], o1.values[k], 1e-6), "g1 tau={} {} vs {}", tau[k], g1.values[k], o1.values[k]);
        }
    }
}
