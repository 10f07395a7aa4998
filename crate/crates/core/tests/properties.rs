//! Randomized invariants of the solvers.

mod common;

use std::f64::consts::PI;

use atomforce::contfrac::{self, PairOptions, Recurrence};
use atomforce::floquet;
use atomforce::lattice::Rational;
use atomforce::scenarios::{self, Solver, Tolerances};
use atomforce::FieldConfig;
use nalgebra::Vector3;
use proptest::prelude::*;

use common::*;

fn arb_wave() -> impl Strategy<Value = atomforce::PlaneWave> {
    (0.1f64..20.0, 0.0..2.0 * PI, -40i128..=40, prop::sample::select(vec![-1.0, 1.0]))
        .prop_map(|(rabi, phase, d2, kx)| wave(rabi, phase, Rational::new(d2, 2), Vector3::new(kx, 0.0, 0.0)))
}

fn arb_pair() -> impl Strategy<Value = FieldConfig> {
    (arb_wave(), arb_wave())
        .prop_filter("distinct frequencies", |(a, b)| a.detuning != b.detuning)
        .prop_map(|(a, b)| FieldConfig::new(1.0, vec![a, b]).unwrap())
}

fn arb_config() -> impl Strategy<Value = FieldConfig> {
    prop::collection::vec((0.1f64..4.0, 0.0..2.0 * PI, -6i128..=6), 1..=4).prop_map(|ws| {
        let waves = ws
            .into_iter()
            .enumerate()
            .map(|(j, (rabi, phase, d))| {
                let k = if j % 2 == 0 { Vector3::x() } else { -Vector3::x() };
                wave(rabi, phase, Rational::new(d, 2), k)
            })
            .collect();
        FieldConfig::new(1.0, waves).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn continued_fraction_matches_matrix(config in arb_pair()) {
        let lattice = config.lattice().unwrap();
        let matrix = floquet::solve_adaptive(&config, &lattice, &Default::default()).unwrap();
        let forces = floquet::mean_forces(&matrix, &config);
        let pair = contfrac::solve_pair(&config, &PairOptions::default()).unwrap();
        let scale = forces.total.norm().max(1.0);
        for j in 0..2 {
            prop_assert!((forces.forces[j] - pair.forces.forces[j]).norm() <= 1e-8 * scale);
        }
        let n_s = pair.pair.n_s;
        prop_assert!((matrix.r_at(n_s) - pair.solution.r_at(n_s)).norm() <= 1e-8);
        // off the n_s sublattice everything vanishes
        for n in 1..n_s {
            prop_assert_eq!(pair.solution.r_at(n), num_complex::Complex64::new(0.0, 0.0));
        }
        for k in 1..4 {
            let n = k * n_s;
            prop_assert_eq!(pair.solution.r_at(-n), pair.solution.r_at(n).conj());
        }
    }

    #[test]
    fn global_phase_and_photon_balance(config in arb_config(), shift in -PI..PI) {
        let tol = Tolerances::default();
        let a = scenarios::solve(&config, Solver::Matrix, &tol).unwrap();
        let mut moved = config.clone();
        for w in &mut moved.waves {
            w.phase += shift;
        }
        let b = scenarios::solve(&moved, Solver::Matrix, &tol).unwrap();
        for j in 0..config.waves.len() {
            prop_assert!((a.solution.s[j] - b.solution.s[j]).abs() < 1e-12);
            prop_assert!((a.forces.rates[j] - b.forces.rates[j]).abs() < 1e-12);
        }
        prop_assert!((a.solution.s_eff - b.solution.s_eff).abs() < 1e-12);

        let rates: f64 = floquet::mean_rates_from_coherences(&a.solution, &config, &a.lattice).iter().sum();
        prop_assert!((rates - (a.solution.w0.re + 0.5)).abs() < 1e-10);
        prop_assert!(a.solution.w0.re > -0.5 && a.solution.w0.re < 0.0);
    }

    #[test]
    fn forward_recurrence_agrees_when_it_is_stable(config in arb_pair()) {
        let ratio = contfrac::solve_pair(&config, &PairOptions::default()).unwrap();
        let opts = PairOptions { recurrence: Recurrence::Forward, ..PairOptions::default() };
        // the forward run may refuse (growth guard), but must not return garbage
        if let Ok(forward) = contfrac::solve_pair(&config, &opts) {
            for j in 0..2 {
                prop_assert!((forward.forces.rates[j] - ratio.forces.rates[j]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn truncation_residuals_shrink_after_the_first_doubling() {
    for (name, config) in regression_set() {
        let lattice = config.lattice().unwrap();
        let sol = floquet::solve_adaptive(&config, &lattice, &Default::default()).unwrap();
        for pair in sol.history.windows(2).skip(1) {
            assert!(pair[1] <= pair[0], "{name}: residual history {:?}", sol.history);
        }
    }
}

#[test]
fn random_configs_match_the_time_domain_oracle() {
    let mut rng = rng(11);
    for trial in 0..12 {
        let config = random_short_period(&mut rng, 4, 3.0);
        let solved = scenarios::solve(&config, Solver::Auto, &Tolerances::default()).unwrap();
        let oracle = atomforce::bloch::periodic_average_rates(&config, &Default::default()).unwrap();
        for j in 0..config.waves.len() {
            let e = (oracle.rates[j] - solved.forces.rates[j]).abs();
            assert!(e < 1e-4, "trial {trial} wave {j}: {e:e}");
        }
    }
}
