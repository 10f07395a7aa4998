//! Shared fixtures: random config generators, the regression config set and
//! an independent stationary-state oracle.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use atomforce::lattice::{doppler_shift, Rational};
use atomforce::scenarios;
use atomforce::{FieldConfig, PlaneWave};
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn wave(rabi: f64, phase: f64, detuning: Rational, k: Vector3<f64>) -> PlaneWave {
    PlaneWave { rabi, phase, detuning, k }
}

pub fn half_integer(rng: &mut ChaCha8Rng, max: i128) -> Rational {
    Rational::new(rng.gen_range(-2 * max..=2 * max), 2)
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Two distinct frequencies, `Ω_R ≤ rabi_max`, `|δ| ≤ detuning_max`, random
/// phases, directions and lattice weights.
pub fn random_pair(rng: &mut ChaCha8Rng, rabi_max: f64, detuning_max: i128) -> FieldConfig {
    let d1 = half_integer(rng, detuning_max);
    let d2 = loop {
        let d = half_integer(rng, detuning_max);
        if d != d1 {
            break d;
        }
    };
    let waves = vec![
        wave(rng.gen_range(0.1..rabi_max), rng.gen_range(0.0..2.0 * PI), d1, random_unit(rng)),
        wave(rng.gen_range(0.1..rabi_max), rng.gen_range(0.0..2.0 * PI), d2, random_unit(rng)),
    ];
    let w1 = *[Rational::new(1, 2), Rational::new(1, 3), Rational::new(2, 3), Rational::new(1, 4)]
        .choose(rng)
        .unwrap();
    FieldConfig::new(1.0, waves)
        .unwrap()
        .with_weights(vec![w1, Rational::from_integer(1) - w1])
        .unwrap()
}

/// `N ≤ n_max` waves with detunings `c + N a_j`, so that every detuning
/// difference from the weighted mean is an integer and `T_c ≤ 2π`.
pub fn random_short_period(rng: &mut ChaCha8Rng, n_max: usize, rabi_max: f64) -> FieldConfig {
    let n = rng.gen_range(1..=n_max);
    let c = rng.gen_range(-2..=2) as i128;
    let waves = (0..n)
        .map(|_| {
            let a = rng.gen_range(-1..=1) as i128;
            wave(
                rng.gen_range(0.1..rabi_max),
                rng.gen_range(0.0..2.0 * PI),
                Rational::from_integer(c + n as i128 * a),
                random_unit(rng),
            )
        })
        .collect();
    FieldConfig::new(1.0, waves).unwrap()
}

/// Named configs every invariant is checked on.
pub fn regression_set() -> Vec<(&'static str, FieldConfig)> {
    let int = Rational::from_integer;
    let x = Vector3::x();
    let bichromatic = scenarios::bichromatic(10.0, 10.0 * 1.5f64.sqrt(), 2, FRAC_PI_2).unwrap();
    vec![
        ("single wave s=2", FieldConfig::new(1.0, vec![wave(1.0, 0.0, int(0), x)]).unwrap()),
        (
            "detuned single wave",
            FieldConfig::new(1.0, vec![wave(2.0, 0.4, Rational::new(-3, 2), Vector3::new(0.0, 0.6, 0.8))]).unwrap(),
        ),
        ("zero field", FieldConfig::new(1.0, vec![wave(0.0, 0.0, int(1), x)]).unwrap()),
        ("counterprop pair", scenarios::counterprop_pair(1.5, 0.8, -1.0, PI / 3.0).unwrap()),
        (
            "destructive copropagating pair",
            FieldConfig::new(1.0, vec![wave(1.0, 0.0, int(0), x), wave(1.0, PI, int(0), x)]).unwrap(),
        ),
        (
            "two frequencies",
            FieldConfig::new(1.0, vec![wave(5.0, 0.0, int(10), x), wave(5.0, 0.3, int(-10), -x)]).unwrap(),
        ),
        (
            "unequal weights",
            FieldConfig::new(1.0, vec![wave(2.0, 0.7, int(3), x), wave(1.0, -0.2, int(0), -x)])
                .unwrap()
                .with_weights(vec![Rational::new(1, 3), Rational::new(2, 3)])
                .unwrap(),
        ),
        (
            "three waves",
            FieldConfig::new(
                1.0,
                vec![
                    wave(1.2, 0.3, int(3), x),
                    wave(0.7, 1.1, Rational::new(-1, 2), -x),
                    wave(2.0, -0.4, int(-1), Vector3::y()),
                ],
            )
            .unwrap(),
        ),
        ("bichromatic v=0", bichromatic.clone()),
        (
            "bichromatic v=1.5",
            doppler_shift(&bichromatic, &Vector3::new(1.5, 0.0, 0.0)).unwrap(),
        ),
    ]
}

/// Constant-drive steady state from a direct 3×3 solve: returns `(u, v, w)`
/// and the per-wave rates `Re[Ω_j (v + i u)]`. All waves must share one
/// frequency.
pub fn stationary_oracle(config: &FieldConfig) -> (Vector3<f64>, Vec<f64>) {
    let gamma = config.gamma();
    let delta = config.waves[0].detuning_f64();
    let omega: Complex64 = config.omegas().iter().sum();
    let a = Matrix3::new(
        -gamma / 2.0, delta, omega.im,
        -delta, -gamma / 2.0, -omega.re,
        -omega.im, omega.re, -gamma,
    );
    let b = Vector3::new(0.0, 0.0, -gamma / 2.0);
    let x = a.lu().solve(&(-b)).expect("stationary system is regular");
    let rates = config
        .omegas()
        .iter()
        .map(|o| (o * Complex64::new(x[1], x[0])).re)
        .collect();
    (x, rates)
}
