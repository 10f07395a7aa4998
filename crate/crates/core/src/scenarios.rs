//! Named field configurations, reference formulas, velocity sweeps and
//! phase averaging.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bloch::{FieldConfig, PlaneWave};
use crate::contfrac::{self, PairOptions};
use crate::error::{Error, Result};
use crate::floquet::{self, FourierSolution, ForceResult, SolveOptions};
use crate::lattice::{self, doppler_shift, FrequencyLattice, DEFAULT_MAX_DEN};

/// Rows whose Doppler-shifted lattice needs harmonics beyond this are
/// flagged instead of solved.
pub const MAX_SWEEP_HARMONIC: i64 = 1000;

/// Environment variable capping sweep concurrency.
pub const THREADS_ENV: &str = "ATOMFORCE_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// One traveling wave along `direction`.
    Single {
        rabi: f64,
        detuning: f64,
        direction: Vector3<f64>,
    },
    /// Two counterpropagating waves of equal frequency, the second one
    /// carrying the phase `delta_phi`.
    CounterpropPair {
        rabi1: f64,
        rabi2: f64,
        detuning: f64,
        delta_phi: f64,
        direction: Vector3<f64>,
    },
    /// Four traveling waves: `(+δ, +k̂)`, `(-δ, +k̂)`, `(+δ, -k̂)`, `(-δ, -k̂)`,
    /// all with amplitude `rabi`; wave `shifted_wave` carries `phase_shift`.
    Bichromatic {
        detuning: f64,
        rabi: f64,
        shifted_wave: usize,
        phase_shift: f64,
        direction: Vector3<f64>,
    },
}

impl Preset {
    /// The stimulated bichromatic force setup: δ = 10Γ, Ω_R = √(3/2) δ and a
    /// π/2 shift on the first counterpropagating wave.
    pub fn bichromatic_reference() -> Self {
        let detuning = 10.0;
        Preset::Bichromatic {
            detuning,
            rabi: (1.5f64).sqrt() * detuning,
            shifted_wave: 2,
            phase_shift: FRAC_PI_2,
            direction: Vector3::x(),
        }
    }
}

fn unit(direction: &Vector3<f64>) -> Result<Vector3<f64>> {
    let n = direction.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::invalid("direction must be a finite nonzero vector"));
    }
    Ok(direction / n)
}

fn traveling(rabi: f64, phase: f64, detuning: f64, k: Vector3<f64>) -> Result<PlaneWave> {
    if !(rabi > 0.0 && rabi.is_finite()) {
        return Err(Error::invalid("preset Rabi frequencies must be positive"));
    }
    Ok(PlaneWave {
        rabi,
        phase,
        detuning: lattice::rationalize(detuning, DEFAULT_MAX_DEN)?,
        k,
    })
}

pub fn preset(kind: &Preset) -> Result<FieldConfig> {
    match kind {
        Preset::Single {
            rabi,
            detuning,
            direction,
        } => FieldConfig::new(1.0, vec![traveling(*rabi, 0.0, *detuning, unit(direction)?)?]),
        Preset::CounterpropPair {
            rabi1,
            rabi2,
            detuning,
            delta_phi,
            direction,
        } => {
            let k = unit(direction)?;
            FieldConfig::new(
                1.0,
                vec![
                    traveling(*rabi1, 0.0, *detuning, k)?,
                    traveling(*rabi2, *delta_phi, *detuning, -k)?,
                ],
            )
        }
        Preset::Bichromatic {
            detuning,
            rabi,
            shifted_wave,
            phase_shift,
            direction,
        } => {
            if *shifted_wave > 3 {
                return Err(Error::invalid("shifted_wave must be in 0..4"));
            }
            let k = unit(direction)?;
            let layout = [(*detuning, k), (-detuning, k), (*detuning, -k), (-detuning, -k)];
            let waves = layout
                .iter()
                .enumerate()
                .map(|(j, (d, kj))| {
                    let phase = if j == *shifted_wave { *phase_shift } else { 0.0 };
                    traveling(*rabi, phase, *d, *kj)
                })
                .collect::<Result<Vec<_>>>()?;
            FieldConfig::new(1.0, waves)
        }
    }
}

pub fn single(rabi: f64, detuning: f64) -> Result<FieldConfig> {
    preset(&Preset::Single {
        rabi,
        detuning,
        direction: Vector3::x(),
    })
}

pub fn counterprop_pair(rabi1: f64, rabi2: f64, detuning: f64, delta_phi: f64) -> Result<FieldConfig> {
    preset(&Preset::CounterpropPair {
        rabi1,
        rabi2,
        detuning,
        delta_phi,
        direction: Vector3::x(),
    })
}

pub fn bichromatic(detuning: f64, rabi: f64, shifted_wave: usize, phase_shift: f64) -> Result<FieldConfig> {
    preset(&Preset::Bichromatic {
        detuning,
        rabi,
        shifted_wave,
        phase_shift,
        direction: Vector3::x(),
    })
}

/// Textbook formulas the solver is validated against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Saturation parameter of an isolated wave, `(Ω²/2) / (δ² + Γ²/4)`.
    Saturation { rabi: f64, detuning: f64, gamma: f64 },
    /// Radiation pressure of one wave along its k, `(Γ/2) s/(1+s)`.
    SingleWaveForce { rabi: f64, detuning: f64, gamma: f64 },
    /// Net force of two counterpropagating waves along k_1 from their s_j.
    CounterpropFromSaturation { s1: f64, s2: f64, gamma: f64 },
    /// Phase-dependent dipole force of an equal-intensity standing wave along k_1.
    DipoleForce {
        rabi: f64,
        detuning: f64,
        delta_phi: f64,
        gamma: f64,
    },
    /// Ceiling of the spontaneous force, `Γ/2`.
    MaximalSpontaneousForce { gamma: f64 },
    /// No closed form exists.
    Bichromatic,
}

pub fn closed_form_reference(kind: &Reference) -> Result<f64> {
    match *kind {
        Reference::Saturation { rabi, detuning, gamma } => {
            Ok((rabi * rabi / 2.0) / (detuning * detuning + gamma * gamma / 4.0))
        }
        Reference::SingleWaveForce { rabi, detuning, gamma } => {
            let s = closed_form_reference(&Reference::Saturation { rabi, detuning, gamma })?;
            Ok(0.5 * gamma * s / (1.0 + s))
        }
        Reference::CounterpropFromSaturation { s1, s2, gamma } => Ok(0.5 * gamma * (s1 - s2) / (1.0 + s1 + s2)),
        Reference::DipoleForce {
            rabi,
            detuning,
            delta_phi,
            gamma,
        } => {
            let r2 = rabi * rabi;
            let c = (delta_phi / 2.0).cos();
            Ok(4.0 * r2 * detuning * delta_phi.sin()
                / (gamma * gamma + 4.0 * detuning * detuning + 8.0 * r2 * c * c))
        }
        Reference::MaximalSpontaneousForce { gamma } => Ok(0.5 * gamma),
        Reference::Bichromatic => Err(Error::Unsupported(
            "the bichromatic force has no closed form".into(),
        )),
    }
}

/// Saturation parameters of an all-same-frequency config,
/// `s_j = Re[Ω_j / (Γ/2 - iδ) Ω*/Γ]` with `Ω = Σ_l Ω_l`.
pub fn monochromatic_saturation(config: &FieldConfig) -> Result<Vec<f64>> {
    let d0 = config.waves[0].detuning;
    if config.waves.iter().any(|w| w.detuning != d0) {
        return Err(Error::invalid("waves do not share a single frequency"));
    }
    let gamma = config.gamma();
    let total: num_complex::Complex64 = config.omegas().iter().sum();
    let denom = num_complex::Complex64::new(gamma / 2.0, -config.waves[0].detuning_f64());
    Ok(config
        .omegas()
        .iter()
        .map(|o| (o / denom * total.conj() / gamma).re)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Continued fraction for two distinct frequencies, matrix otherwise.
    #[default]
    Auto,
    Matrix,
    ContFrac,
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Solver::Auto),
            "matrix" => Ok(Solver::Matrix),
            "contfrac" => Ok(Solver::ContFrac),
            other => Err(Error::invalid(format!("unknown solver `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-10, atol: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub lattice: FrequencyLattice,
    pub solution: FourierSolution,
    pub forces: ForceResult,
    pub solver: Solver,
}

fn is_distinct_pair(config: &FieldConfig) -> bool {
    config.waves.len() == 2 && config.waves[0].detuning != config.waves[1].detuning
}

/// Solves one configuration with the requested method.
pub fn solve(config: &FieldConfig, solver: Solver, tol: &Tolerances) -> Result<Solved> {
    let lattice = config.lattice()?;
    let matrix = |lattice: FrequencyLattice| -> Result<Solved> {
        let opts = SolveOptions {
            rtol: tol.rtol,
            atol: tol.atol,
            ..SolveOptions::default()
        };
        let solution = floquet::solve_adaptive(config, &lattice, &opts)?;
        let forces = floquet::mean_forces(&solution, config);
        Ok(Solved {
            lattice,
            solution,
            forces,
            solver: Solver::Matrix,
        })
    };
    let pair = |lattice: FrequencyLattice| -> Result<Solved> {
        let opts = PairOptions {
            rtol: tol.rtol,
            atol: tol.atol,
            ..PairOptions::default()
        };
        let ps = contfrac::solve_pair(config, &opts)?;
        Ok(Solved {
            lattice,
            solution: ps.solution,
            forces: ps.forces,
            solver: Solver::ContFrac,
        })
    };
    match solver {
        Solver::Matrix => matrix(lattice),
        Solver::ContFrac => pair(lattice),
        Solver::Auto if is_distinct_pair(config) => pair(lattice.clone()).or_else(|_| matrix(lattice)),
        Solver::Auto => matrix(lattice),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub velocities: Vec<Vector3<f64>>,
    /// Total force per row (units ħ k_ref Γ); NaN on failed rows.
    pub forces: Vec<Vector3<f64>>,
    /// Per-wave mean force per row.
    pub wave_forces: Vec<Vec<Vector3<f64>>>,
    /// Per-wave mean rates per row.
    pub rates: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
    /// Failure reason for rows that did not converge.
    pub diagnostics: Vec<Option<String>>,
}

impl SweepResult {
    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }
}

struct Row {
    force: Vector3<f64>,
    wave_forces: Vec<Vector3<f64>>,
    rates: Vec<f64>,
    error: Option<String>,
}

fn sweep_row(config: &FieldConfig, v: &Vector3<f64>, solver: Solver, tol: &Tolerances) -> Row {
    let n = config.waves.len();
    let failed = |msg: String| Row {
        force: Vector3::repeat(f64::NAN),
        wave_forces: vec![Vector3::repeat(f64::NAN); n],
        rates: vec![f64::NAN; n],
        error: Some(msg),
    };
    let shifted = match doppler_shift(config, v) {
        Ok(c) => c,
        Err(e) => return failed(e.to_string()),
    };
    match shifted.lattice() {
        Ok(lat) if lat.max_abs_m() > MAX_SWEEP_HARMONIC => {
            return failed(format!(
                "rationalized lattice needs harmonic {} (> {MAX_SWEEP_HARMONIC})",
                lat.max_abs_m()
            ))
        }
        Err(e) => return failed(e.to_string()),
        Ok(_) => {}
    }
    let solver = if solver == Solver::ContFrac && !is_distinct_pair(&shifted) {
        Solver::Matrix
    } else {
        solver
    };
    match solve(&shifted, solver, tol) {
        Ok(s) => Row {
            force: s.forces.total,
            wave_forces: s.forces.forces,
            rates: s.forces.rates,
            error: None,
        },
        Err(e) => failed(e.to_string()),
    }
}

/// Sweep concurrency from `ATOMFORCE_THREADS` (unset or 0: all cores).
pub fn sweep_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Mean force at each velocity (quasi-static: the atom is frozen at each
/// velocity). Rows are solved independently and returned in input order;
/// per-row failures are recorded, not propagated.
pub fn velocity_sweep(
    config: &FieldConfig,
    velocities: &[Vector3<f64>],
    solver: Solver,
    tol: &Tolerances,
) -> Result<SweepResult> {
    config.validate()?;
    if velocities.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
        return Err(Error::invalid("sweep velocities must be finite"));
    }
    if solver == Solver::ContFrac && config.waves.len() != 2 {
        return Err(Error::invalid("the contfrac solver needs exactly two waves"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep_threads())
        .build()
        .map_err(|e| Error::invalid(format!("cannot start sweep workers: {e}")))?;
    let rows: Vec<Row> = pool.install(|| {
        velocities
            .par_iter()
            .map(|v| sweep_row(config, v, solver, tol))
            .collect()
    });
    let mut out = SweepResult {
        velocities: velocities.to_vec(),
        forces: Vec::with_capacity(rows.len()),
        wave_forces: Vec::with_capacity(rows.len()),
        rates: Vec::with_capacity(rows.len()),
        converged: Vec::with_capacity(rows.len()),
        diagnostics: Vec::with_capacity(rows.len()),
    };
    for row in rows {
        out.forces.push(row.force);
        out.wave_forces.push(row.wave_forces);
        out.rates.push(row.rates);
        out.converged.push(row.error.is_none());
        out.diagnostics.push(row.error);
    }
    Ok(out)
}

/// `n` evenly spaced velocities `axis · v`, `v ∈ [v_min, v_max]`.
pub fn velocity_grid(axis: &Vector3<f64>, v_min: f64, v_max: f64, n: usize) -> Result<Vec<Vector3<f64>>> {
    if n < 2 || !(v_min < v_max) {
        return Err(Error::invalid("velocity grid needs n >= 2 and v_min < v_max"));
    }
    let axis = unit(axis)?;
    let step = (v_max - v_min) / (n - 1) as f64;
    Ok((0..n).map(|i| axis * (v_min + i as f64 * step)).collect())
}

/// Sample means and standard errors over random phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAverage {
    pub samples: usize,
    pub mean_rates: Vec<f64>,
    pub stderr_rates: Vec<f64>,
    pub mean_forces: Vec<Vector3<f64>>,
    pub stderr_forces: Vec<Vector3<f64>>,
    pub mean_s: Vec<f64>,
    pub stderr_s: Vec<f64>,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Incoherent averages: every wave gets an independent uniform phase in
/// `[0, 2π)` per sample, drawn from a ChaCha stream seeded with `seed`.
pub fn phase_average(config: &FieldConfig, n_samples: usize, seed: u64, solver: Solver) -> Result<PhaseAverage> {
    config.validate()?;
    if n_samples == 0 {
        return Err(Error::invalid("phase averaging needs at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nw = config.waves.len();
    let mut rates = vec![Vec::with_capacity(n_samples); nw];
    let mut forces = vec![[Vec::with_capacity(n_samples), Vec::new(), Vec::new()]; nw];
    let mut sat = vec![Vec::with_capacity(n_samples); nw];
    let tol = Tolerances::default();
    for _ in 0..n_samples {
        let mut sample = config.clone();
        for w in &mut sample.waves {
            w.phase = rng.gen_range(0.0..2.0 * PI);
        }
        let solved = solve(&sample, solver, &tol)?;
        for j in 0..nw {
            rates[j].push(solved.forces.rates[j]);
            sat[j].push(solved.solution.s[j]);
            for (samples, value) in forces[j].iter_mut().zip(solved.forces.forces[j].iter()) {
                samples.push(*value);
            }
        }
    }
    let (mean_rates, stderr_rates) = rates.iter().map(|r| mean_and_stderr(r)).unzip();
    let (mean_s, stderr_s) = sat.iter().map(|r| mean_and_stderr(r)).unzip();
    let mut mean_forces = Vec::with_capacity(nw);
    let mut stderr_forces = Vec::with_capacity(nw);
    for f in &forces {
        let stats: Vec<(f64, f64)> = f.iter().map(|c| mean_and_stderr(c)).collect();
        mean_forces.push(Vector3::new(stats[0].0, stats[1].0, stats[2].0));
        stderr_forces.push(Vector3::new(stats[0].1, stats[1].1, stats[2].1));
    }
    Ok(PhaseAverage {
        samples: n_samples,
        mean_rates,
        stderr_rates,
        mean_forces,
        stderr_forces,
        mean_s,
        stderr_s,
    })
}
