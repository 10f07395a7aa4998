//! Harmonic-balance solution of the periodically driven Bloch equations.
//!
//! Inserting `x(t) = Σ_n x_n e^{i n ω_c t}` into the Bloch equations lets
//! every coherence component be written in terms of the population
//! components `w_n`, which then obey the banded system
//!
//! ```text
//! w_n + Σ_{m ∈ M_0} W_{n,m} w_{n+m} = -δ_{n,0} / (2 (1 + s̃))
//! ```
//!
//! with
//!
//! ```text
//! τ±_n    = 1 / (Γ + 2i (n ω_c ± δ̄))
//! α_n     = Γ + i n ω_c
//! β_{n,m} = Σ_{j,l : m_l - m_j = m} Ω_j Ω_l* (τ+_{n+m_l} + τ-_{n-m_j})
//! W_{n,m} = β_{n,m} / (α_n + β_{n,0})
//! ```
//!
//! Only harmonics on the sublattice `n = g q` (g = gcd M_0) couple to
//! `w_0`; the rest solve a homogeneous system and vanish, so unknowns are
//! indexed by `q ∈ [-K, K]`. The truncated system is solved for growing `K`
//! until two successive truncations agree.
//!
//! From the ratios `r_n = w_n / w_0` follow the generalized saturation
//! parameters
//!
//! ```text
//! s_j = Re[ Ω_j / (Γ/2 - i δ_j) Σ_l (Ω_l*/Γ) r_{m_l - m_j} ],   w_0 = -1/2 / (1 + Σ_j s_j)
//! ```
//!
//! and the mean rate and force of each wave, `R̄_j = (Γ/2) s_j / (1 + s_eff)`
//! and `F̄_j = R̄_j ħ k_j`.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::banded::BandMatrix;
use crate::bloch::{BlochState, FieldConfig};
use crate::error::{Error, Result};
use crate::lattice::FrequencyLattice;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Coefficients of the harmonic-balance system for one configuration.
#[derive(Debug, Clone)]
pub struct HarmonicSystem {
    pub gamma: f64,
    pub omega_c: f64,
    pub delta_bar: f64,
    pub omegas: Vec<Complex64>,
    pub m: Vec<i64>,
    /// δ_j = δ̄ + m_j ω_c.
    pub detunings: Vec<f64>,
    pub g: i64,
    pub offsets: Vec<i64>,
    /// Wave pairs (j, l) grouped by m_l - m_j, including 0.
    pairs: BTreeMap<i64, Vec<(usize, usize)>>,
}

impl HarmonicSystem {
    pub fn new(config: &FieldConfig, lattice: &FrequencyLattice) -> Result<Self> {
        config.validate()?;
        if lattice.m.len() != config.waves.len() {
            return Err(Error::invalid("lattice does not belong to this config"));
        }
        let omega_c = lattice.omega_c_f64();
        let delta_bar = lattice.delta_bar_f64();
        let mut pairs: BTreeMap<i64, Vec<(usize, usize)>> = BTreeMap::new();
        for (j, mj) in lattice.m.iter().enumerate() {
            for (l, ml) in lattice.m.iter().enumerate() {
                pairs.entry(ml - mj).or_default().push((j, l));
            }
        }
        Ok(HarmonicSystem {
            gamma: config.gamma(),
            omega_c,
            delta_bar,
            omegas: config.omegas(),
            m: lattice.m.clone(),
            detunings: lattice.m.iter().map(|m| delta_bar + *m as f64 * omega_c).collect(),
            g: lattice.g,
            offsets: lattice.m_offsets.clone(),
            pairs,
        })
    }

    pub fn n_waves(&self) -> usize {
        self.omegas.len()
    }

    pub fn tau_plus(&self, n: i64) -> Complex64 {
        1.0 / Complex64::new(self.gamma, 2.0 * (n as f64 * self.omega_c + self.delta_bar))
    }

    pub fn tau_minus(&self, n: i64) -> Complex64 {
        1.0 / Complex64::new(self.gamma, 2.0 * (n as f64 * self.omega_c - self.delta_bar))
    }

    pub fn alpha(&self, n: i64) -> Complex64 {
        Complex64::new(self.gamma, n as f64 * self.omega_c)
    }

    pub fn beta(&self, n: i64, m: i64) -> Complex64 {
        self.pairs.get(&m).map_or(ZERO, |pairs| {
            pairs
                .iter()
                .map(|&(j, l)| {
                    self.omegas[j]
                        * self.omegas[l].conj()
                        * (self.tau_plus(n + self.m[l]) + self.tau_minus(n - self.m[j]))
                })
                .sum()
        })
    }

    /// Diagonal normalizer `α_n + β_{n,0}`.
    pub fn diagonal(&self, n: i64) -> Result<Complex64> {
        let d = self.alpha(n) + self.beta(n, 0);
        if d.norm() == 0.0 || !d.is_finite() {
            return Err(Error::SingularAssembly { n });
        }
        Ok(d)
    }

    /// Coupling `W_{n,m}` for `m ≠ 0`.
    pub fn coupling(&self, n: i64, m: i64) -> Result<Complex64> {
        Ok(self.beta(n, m) / self.diagonal(n)?)
    }

    /// `Σ_l (Ω_l*/Γ) r_{n + m_l - m_j}` for wave `j`.
    fn coherent_sum(&self, j: usize, n: i64, r: impl Fn(i64) -> Complex64) -> Complex64 {
        self.omegas
            .iter()
            .zip(&self.m)
            .map(|(ol, ml)| ol.conj() / self.gamma * r(n + ml - self.m[j]))
            .sum()
    }
}

/// `W_{n,m}` for `m ∈ M_0`, or the diagonal normalizer `α_n + β_{n,0}` for
/// `m = 0`.
pub fn matrix_element(n: i64, m: i64, config: &FieldConfig, lattice: &FrequencyLattice) -> Result<Complex64> {
    let sys = HarmonicSystem::new(config, lattice)?;
    if m == 0 {
        sys.diagonal(n)
    } else if lattice.m_offsets.contains(&m) {
        sys.coupling(n, m)
    } else {
        Err(Error::invalid(format!("offset {m} is not in M_0")))
    }
}

/// Same-frequency saturation parameters `s̃_j` and their sum `s̃`. Only waves
/// with exactly equal detunings interfere here.
pub fn s_tilde(config: &FieldConfig) -> (Vec<f64>, f64) {
    let gamma = config.gamma();
    let parts: Vec<f64> = config
        .waves
        .iter()
        .map(|wj| {
            let same: Complex64 = config
                .waves
                .iter()
                .filter(|wl| wl.detuning == wj.detuning)
                .map(|wl| wl.omega().conj() / gamma)
                .sum();
            (wj.omega() / Complex64::new(gamma / 2.0, -wj.detuning_f64()) * same).re
        })
        .collect();
    let total = parts.iter().sum();
    (parts, total)
}

/// Truncated system `(I + W) w = c` on `n = g q`, `q ∈ [-K, K]`.
#[derive(Debug, Clone)]
pub struct TruncatedSystem {
    pub k: usize,
    pub g: i64,
    pub matrix: BandMatrix,
    pub rhs: Vec<Complex64>,
}

impl TruncatedSystem {
    /// Row/column index of harmonic `n = g q`.
    pub fn index(&self, q: i64) -> Option<usize> {
        let k = self.k as i64;
        (-k..=k).contains(&q).then(|| (q + k) as usize)
    }
}

pub fn assemble_truncated(config: &FieldConfig, lattice: &FrequencyLattice, k: usize) -> Result<TruncatedSystem> {
    let sys = HarmonicSystem::new(config, lattice)?;
    assemble_with(&sys, config, k)
}

fn assemble_with(sys: &HarmonicSystem, config: &FieldConfig, k: usize) -> Result<TruncatedSystem> {
    if k == 0 {
        return Err(Error::invalid("truncation K must be at least 1"));
    }
    let g = sys.g;
    let band = sys.offsets.iter().map(|m| (m.abs() / g) as usize).max().unwrap_or(0);
    let dim = 2 * k + 1;
    let mut matrix = BandMatrix::zeros(dim, band, band);
    let ki = k as i64;
    let at = |q: i64| (q + ki) as usize;
    // only q >= 0 is evaluated; W_{-n,-m} = conj(W_{n,m}) fills the rest exactly
    for q in 0..=ki {
        matrix.set(at(q), at(q), Complex64::new(1.0, 0.0));
        matrix.set(at(-q), at(-q), Complex64::new(1.0, 0.0));
        if sys.offsets.is_empty() {
            continue;
        }
        let n = g * q;
        let diag = sys.diagonal(n)?;
        for &m in &sys.offsets {
            if q == 0 && m < 0 {
                continue;
            }
            let qc = q + m / g;
            if (-ki..=ki).contains(&qc) {
                let value = sys.beta(n, m) / diag;
                matrix.set(at(q), at(qc), value);
                matrix.set(at(-q), at(-qc), value.conj());
            }
        }
    }
    let (_, st) = s_tilde(config);
    let mut rhs = vec![ZERO; dim];
    rhs[k] = Complex64::new(-0.5 / (1.0 + st), 0.0);
    Ok(TruncatedSystem { k, g, matrix, rhs })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial half-width in sublattice steps; `None` picks [`default_k0`].
    pub k0: Option<usize>,
    pub k_max: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            rtol: 1e-10,
            atol: 1e-12,
            k0: None,
            k_max: 1 << 14,
        }
    }
}

/// Starting truncation: covers the coupling band twice and grows with the
/// total drive strength.
pub fn default_k0(config: &FieldConfig, lattice: &FrequencyLattice) -> usize {
    let drive = (4.0 * config.total_rabi().ceil()) as usize;
    8.max(2 * lattice.bandwidth()).max(drive)
}

/// Converged Fourier representation of the periodic regime.
#[derive(Debug, Clone)]
pub struct FourierSolution {
    /// Half-width of the window in sublattice steps.
    pub k: usize,
    pub g: i64,
    pub omega_c: f64,
    pub gamma: f64,
    /// `w_{g q}` for `q ∈ [-K, K]`.
    pub w: Vec<Complex64>,
    /// `r_{g q} = w_{g q} / w_0`.
    pub r: Vec<Complex64>,
    pub u: BTreeMap<i64, Complex64>,
    pub v: BTreeMap<i64, Complex64>,
    pub s_tilde: Vec<f64>,
    pub s_tilde_total: f64,
    pub s: Vec<f64>,
    pub s_eff: f64,
    pub w0: Complex64,
    pub converged: bool,
    /// Last Cauchy difference between successive truncations.
    pub residual: f64,
    pub history: Vec<f64>,
}

impl FourierSolution {
    /// Largest harmonic index inside the window, `K g`.
    pub fn window(&self) -> i64 {
        self.k as i64 * self.g
    }

    fn slot(&self, n: i64) -> Option<usize> {
        if n.rem_euclid(self.g) != 0 || n.abs() > self.window() {
            return None;
        }
        Some((n / self.g + self.k as i64) as usize)
    }

    /// `w_n`; zero off the sublattice and outside the window.
    pub fn w_at(&self, n: i64) -> Complex64 {
        self.slot(n).map_or(ZERO, |i| self.w[i])
    }

    /// `r_n`; zero off the sublattice and outside the window.
    pub fn r_at(&self, n: i64) -> Complex64 {
        self.slot(n).map_or(ZERO, |i| self.r[i])
    }

    pub fn u_at(&self, n: i64) -> Complex64 {
        self.u.get(&n).copied().unwrap_or(ZERO)
    }

    pub fn v_at(&self, n: i64) -> Complex64 {
        self.v.get(&n).copied().unwrap_or(ZERO)
    }

    /// Harmonics `n` carried by the solution window, ascending.
    pub fn harmonics(&self) -> impl Iterator<Item = i64> + '_ {
        let k = self.k as i64;
        (-k..=k).map(move |q| q * self.g)
    }

    /// Mean excited-state population `w_0 + 1/2`.
    pub fn excited_population(&self) -> f64 {
        self.w0.re + 0.5
    }
}

fn symmetrize(w: &mut [Complex64]) {
    let n = w.len();
    for i in 0..n / 2 + 1 {
        let j = n - 1 - i;
        let a = 0.5 * (w[i] + w[j].conj());
        w[i] = a;
        w[j] = a.conj();
    }
}

fn solve_window(sys: &HarmonicSystem, config: &FieldConfig, k: usize) -> Result<Vec<Complex64>> {
    let t = assemble_with(sys, config, k)?;
    let mut w = t.matrix.solve(&t.rhs)?;
    symmetrize(&mut w);
    Ok(w)
}

/// Solves the truncated system at `K0, 2 K0, 4 K0, ...` until successive
/// solutions differ by less than `atol + rtol |w_0|` and the edge components
/// of the larger window are below `atol`.
pub fn solve_adaptive(config: &FieldConfig, lattice: &FrequencyLattice, options: &SolveOptions) -> Result<FourierSolution> {
    if !(options.rtol > 0.0 && options.atol > 0.0) {
        return Err(Error::invalid("rtol and atol must be positive"));
    }
    let sys = HarmonicSystem::new(config, lattice)?;
    let band = lattice.bandwidth();
    let k0 = match options.k0 {
        Some(k0) if k0 > options.k_max => {
            return Err(Error::invalid(format!("K0 = {k0} exceeds K_max = {}", options.k_max)));
        }
        Some(k0) => k0,
        // a strong drive may ask for more than K_max; try the largest window anyway
        None => default_k0(config, lattice).min(options.k_max / 2),
    }
    .max(2)
    .max(band);
    if band > options.k_max {
        return Err(Error::LatticeOverflow(format!(
            "coupling bandwidth {band} exceeds K_max = {}",
            options.k_max
        )));
    }

    if lattice.is_stationary() {
        // Constant drive: the system is diagonal and w_n = c_n exactly.
        let w = solve_window(&sys, config, k0)?;
        return finish(&sys, config, k0, w, 0.0, Vec::new());
    }

    let mut k = k0;
    let mut coarse = solve_window(&sys, config, k)?;
    let mut history = Vec::new();
    while 2 * k <= options.k_max {
        let fine_k = 2 * k;
        let fine = solve_window(&sys, config, fine_k)?;
        let w0 = fine[fine_k].norm();
        let diff = coarse
            .iter()
            .enumerate()
            .map(|(i, c)| (fine[i + k] - c).norm())
            .fold(0.0, f64::max);
        let edge = fine[0].norm().max(fine[2 * fine_k].norm());
        history.push(diff);
        if diff < options.atol + options.rtol * w0 && edge < options.atol {
            return finish(&sys, config, fine_k, fine, diff, history);
        }
        k = fine_k;
        coarse = fine;
    }
    Err(Error::ConvergenceFailure {
        k_max: options.k_max,
        history,
    })
}

fn finish(
    sys: &HarmonicSystem,
    config: &FieldConfig,
    k: usize,
    w: Vec<Complex64>,
    residual: f64,
    history: Vec<f64>,
) -> Result<FourierSolution> {
    let w0 = w[k];
    if w0.norm() == 0.0 {
        return Err(Error::InternalConsistency("w_0 vanished".into()));
    }
    let r = w.iter().map(|x| x / w0).collect();
    let (s_tilde_parts, s_tilde_total) = s_tilde(config);
    let mut sol = FourierSolution {
        k,
        g: sys.g,
        omega_c: sys.omega_c,
        gamma: sys.gamma,
        w,
        r,
        u: BTreeMap::new(),
        v: BTreeMap::new(),
        s_tilde: s_tilde_parts,
        s_tilde_total,
        s: Vec::new(),
        s_eff: 0.0,
        w0,
        converged: true,
        residual,
        history,
    };
    let (u, v) = coherences_with(&sol, sys);
    sol.u = u;
    sol.v = v;
    let (s, s_eff) = saturation_with(&sol, sys)?;
    sol.s = s;
    sol.s_eff = s_eff;
    Ok(sol)
}

/// Builds a solution from externally computed ratios `r_{g q}`, `q ∈ [-K, K]`
/// (used by the two-wave continued-fraction path). `w_0` follows from the
/// saturation parameters.
pub(crate) fn solution_from_ratios(
    config: &FieldConfig,
    lattice: &FrequencyLattice,
    r: Vec<Complex64>,
    residual: f64,
) -> Result<FourierSolution> {
    let sys = HarmonicSystem::new(config, lattice)?;
    let k = (r.len() - 1) / 2;
    let probe = FourierSolution {
        k,
        g: sys.g,
        omega_c: sys.omega_c,
        gamma: sys.gamma,
        w: r.clone(),
        r: r.clone(),
        u: BTreeMap::new(),
        v: BTreeMap::new(),
        s_tilde: Vec::new(),
        s_tilde_total: 0.0,
        s: Vec::new(),
        s_eff: 0.0,
        w0: Complex64::new(1.0, 0.0),
        converged: true,
        residual,
        history: Vec::new(),
    };
    let s_eff: f64 = (0..sys.n_waves()).map(|j| s_parameter(&sys, j, |n| probe.r_at(n))).sum();
    let w0 = -0.5 / (1.0 + s_eff);
    let w = r.iter().map(|x| x * w0).collect();
    finish(&sys, config, k, w, residual, Vec::new())
}

fn s_parameter(sys: &HarmonicSystem, j: usize, r: impl Fn(i64) -> Complex64) -> f64 {
    let pre = sys.omegas[j] / Complex64::new(sys.gamma / 2.0, -sys.detunings[j]);
    (pre * sys.coherent_sum(j, 0, r)).re
}

fn coherences_with(sol: &FourierSolution, sys: &HarmonicSystem) -> (BTreeMap<i64, Complex64>, BTreeMap<i64, Complex64>) {
    let mut u = BTreeMap::new();
    let mut v = BTreeMap::new();
    let window = sol.window();
    let g = sys.g;
    let m1 = sys.m[0];
    // z_n = v_n + i u_n lives on n ≡ -m_1 (mod g), its conjugate on n ≡ m_1.
    let mut support: Vec<i64> = (-window..=window)
        .filter(|n| (n + m1).rem_euclid(g) == 0 || (n - m1).rem_euclid(g) == 0)
        .collect();
    support.dedup();
    for n in support {
        let plus: Complex64 = sys
            .omegas
            .iter()
            .zip(&sys.m)
            .map(|(o, m)| o * sol.w_at(n - m))
            .sum::<Complex64>()
            * sys.tau_plus(n);
        let minus: Complex64 = sys
            .omegas
            .iter()
            .zip(&sys.m)
            .map(|(o, m)| o.conj() * sol.w_at(n + m))
            .sum::<Complex64>()
            * sys.tau_minus(n);
        u.insert(n, -I * (plus - minus));
        v.insert(n, -(plus + minus));
    }
    (u, v)
}

/// Coherence components `u_n`, `v_n` from the population components.
pub fn coherence_components(
    solution: &FourierSolution,
    config: &FieldConfig,
    lattice: &FrequencyLattice,
) -> Result<(BTreeMap<i64, Complex64>, BTreeMap<i64, Complex64>)> {
    let sys = HarmonicSystem::new(config, lattice)?;
    Ok(coherences_with(solution, &sys))
}

fn saturation_with(sol: &FourierSolution, sys: &HarmonicSystem) -> Result<(Vec<f64>, f64)> {
    let s: Vec<f64> = (0..sys.n_waves()).map(|j| s_parameter(sys, j, |n| sol.r_at(n))).collect();
    let s_eff: f64 = s.iter().sum();
    let expected = -0.5 / (1.0 + s_eff);
    let gap = (sol.w0 - expected).norm();
    if !(gap <= 1e-9 * (1.0 + expected.abs())) {
        return Err(Error::InternalConsistency(format!(
            "w_0 = {} but -1/(2(1+s_eff)) = {expected} (gap {gap:e}); enlarge the truncation",
            sol.w0
        )));
    }
    Ok((s, s_eff))
}

/// Generalized saturation parameters `s_j`, their sum and `w_0`, with the
/// consistency check `w_0 = -1/2 / (1 + s_eff)`.
pub fn saturation_parameters(
    solution: &FourierSolution,
    config: &FieldConfig,
    lattice: &FrequencyLattice,
) -> Result<(Vec<f64>, f64, Complex64)> {
    let sys = HarmonicSystem::new(config, lattice)?;
    let (s, s_eff) = saturation_with(solution, &sys)?;
    Ok((s, s_eff, solution.w0))
}

/// Harmonic content of the rates; forces follow as `F_{j,n} = R_{j,n} ħ k_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Harmonic indices `n` (multiples of g), ascending.
    pub harmonics: Vec<i64>,
    /// `rates[i][j] = R_{j, harmonics[i]}`.
    pub rates: Vec<Vec<Complex64>>,
    pub k: Vec<Vector3<f64>>,
}

impl Spectrum {
    pub fn rate(&self, j: usize, n: i64) -> Option<Complex64> {
        self.harmonics.binary_search(&n).ok().map(|i| self.rates[i][j])
    }

    pub fn force(&self, j: usize, n: i64) -> Option<Vector3<Complex64>> {
        self.rate(j, n).map(|r| self.k[j].map(|c| r * c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceResult {
    /// Mean rate R̄_j per wave (units Γ).
    pub rates: Vec<f64>,
    /// Mean force F̄_j per wave (units ħ k_ref Γ).
    pub forces: Vec<Vector3<f64>>,
    pub total: Vector3<f64>,
    pub spectra: Option<Spectrum>,
}

/// Mean rates and forces, `F̄_j = (Γ/2) s_j / (1 + s_eff) ħ k_j`.
pub fn mean_forces(solution: &FourierSolution, config: &FieldConfig) -> ForceResult {
    let gamma = config.gamma();
    let rates: Vec<f64> = solution
        .s
        .iter()
        .map(|s| 0.5 * gamma * s / (1.0 + solution.s_eff))
        .collect();
    let forces: Vec<Vector3<f64>> = rates.iter().zip(&config.waves).map(|(r, w)| w.k * *r).collect();
    let total = forces.iter().sum();
    ForceResult {
        rates,
        forces,
        total,
        spectra: None,
    }
}

/// Mean rates recomputed from the coherence components,
/// `R̄_j = Re[Ω_j (v_{-m_j} + i u_{-m_j})]`.
pub fn mean_rates_from_coherences(solution: &FourierSolution, config: &FieldConfig, lattice: &FrequencyLattice) -> Vec<f64> {
    config
        .waves
        .iter()
        .zip(&lattice.m)
        .map(|(wave, m)| (wave.omega() * (solution.v_at(-m) + I * solution.u_at(-m))).re)
        .collect()
}

/// Mean forces plus the rate spectrum `R_{j,n}` for `|n| <= n_max`.
pub fn rate_and_force_spectrum(
    solution: &FourierSolution,
    config: &FieldConfig,
    lattice: &FrequencyLattice,
    n_max: i64,
) -> Result<ForceResult> {
    if n_max < 0 || n_max > solution.window() {
        return Err(Error::OutOfWindow {
            requested: n_max,
            window: solution.window(),
        });
    }
    let sys = HarmonicSystem::new(config, lattice)?;
    let gamma = sys.gamma;
    let norm = 0.5 * gamma / (1.0 + solution.s_eff);
    let sigma = |j: usize, n: i64| -> Complex64 {
        let pre = sys.omegas[j] / Complex64::new(gamma / 2.0, n as f64 * sys.omega_c - sys.detunings[j]);
        pre * sys.coherent_sum(j, n, |x| solution.r_at(x))
    };
    let g = solution.g;
    let q_max = n_max / g;
    let harmonics: Vec<i64> = (-q_max..=q_max).map(|q| q * g).collect();
    let rates = harmonics
        .iter()
        .map(|&n| {
            (0..sys.n_waves())
                .map(|j| norm * 0.5 * (sigma(j, n) + sigma(j, -n).conj()))
                .collect()
        })
        .collect();
    let mut result = mean_forces(solution, config);
    result.spectra = Some(Spectrum {
        harmonics,
        rates,
        k: config.waves.iter().map(|w| w.k).collect(),
    });
    Ok(result)
}

/// Evaluates the Fourier series of the Bloch vector at time `t`.
pub fn reconstruct_time(solution: &FourierSolution, t: f64) -> BlochState {
    let phase = |n: i64| Complex64::from_polar(1.0, n as f64 * solution.omega_c * t);
    let series = |map: &BTreeMap<i64, Complex64>| map.iter().map(|(n, c)| c * phase(*n)).sum::<Complex64>().re;
    let w = solution
        .harmonics()
        .zip(&solution.w)
        .map(|(n, c)| c * phase(n))
        .sum::<Complex64>()
        .re;
    BlochState::new(series(&solution.u), series(&solution.v), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::PlaneWave;
    use crate::lattice::Rational;

    fn wave(rabi: f64, phase: f64, detuning: Rational, kx: f64) -> PlaneWave {
        PlaneWave {
            rabi,
            phase,
            detuning,
            k: Vector3::new(kx, 0.0, 0.0),
        }
    }

    fn int(n: i128) -> Rational {
        Rational::from_integer(n)
    }

    fn solve(cfg: &FieldConfig) -> (FrequencyLattice, FourierSolution) {
        let lat = cfg.lattice().unwrap();
        let sol = solve_adaptive(cfg, &lat, &SolveOptions::default()).unwrap();
        (lat, sol)
    }

    #[test]
    fn single_wave_normalizer_and_tau() {
        let cfg = FieldConfig::new(1.0, vec![wave(1.0, 0.0, int(0), 1.0)]).unwrap();
        let lat = cfg.lattice().unwrap();
        let d = matrix_element(0, 0, &cfg, &lat).unwrap();
        assert!((d - Complex64::new(3.0, 0.0)).norm() < 1e-15);
        assert!(matrix_element(0, 2, &cfg, &lat).is_err());

        // δ̄ = 0, ω_c = 1
        let cfg = FieldConfig::new(1.0, vec![wave(1.0, 0.0, int(1), 1.0), wave(1.0, 0.0, int(-1), -1.0)]).unwrap();
        let lat = cfg.lattice().unwrap();
        let sys = HarmonicSystem::new(&cfg, &lat).unwrap();
        let expected = 1.0 / Complex64::new(1.0, 2.0);
        assert!((sys.tau_plus(1) - expected).norm() < 1e-15);
        assert!((sys.tau_minus(1) - expected).norm() < 1e-15);
    }

    #[test]
    fn diagonal_normalizer_equals_gamma_one_plus_s_tilde() {
        let cfg = FieldConfig::new(
            1.0,
            vec![
                wave(1.2, 0.3, int(2), 1.0),
                wave(0.7, 1.1, int(2), -1.0),
                wave(2.0, -0.4, int(-1), 0.0),
            ],
        )
        .unwrap();
        let lat = cfg.lattice().unwrap();
        let (_, st) = s_tilde(&cfg);
        let d = matrix_element(0, 0, &cfg, &lat).unwrap();
        assert!((d - Complex64::new(1.0 + st, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn matrix_elements_are_centrohermitian() {
        let cfg = FieldConfig::new(
            1.0,
            vec![
                wave(1.2, 0.3, int(3), 1.0),
                wave(0.7, 1.1, Rational::new(-1, 2), -1.0),
                wave(2.0, -0.4, int(-1), 0.0),
            ],
        )
        .unwrap();
        let lat = cfg.lattice().unwrap();
        for n in -5..=5 {
            for &m in &lat.m_offsets {
                let a = matrix_element(n, m, &cfg, &lat).unwrap();
                let b = matrix_element(-n, -m, &cfg, &lat).unwrap();
                assert!((a - b.conj()).norm() < 1e-15 * (1.0 + a.norm()));
            }
        }
    }

    #[test]
    fn s_tilde_examples() {
        let cfg = FieldConfig::new(1.0, vec![wave(1.7, 0.5, int(3), 1.0)]).unwrap();
        let (parts, _) = s_tilde(&cfg);
        let expected = (1.7f64.powi(2) / 2.0) / (9.0 + 0.25);
        assert!((parts[0] - expected).abs() < 1e-15);

        let cfg = FieldConfig::new(1.0, vec![wave(1.0, 0.0, int(10), 1.0), wave(1.0, 0.0, int(-10), -1.0)]).unwrap();
        let (_, total) = s_tilde(&cfg);
        assert!((total - 2.0 * 0.5 / 100.25).abs() < 1e-15);
        assert!((total - 0.009975).abs() < 1e-6);
        let (parts, _) = s_tilde(&cfg);
        assert!((parts[0] - 0.004988).abs() < 1e-6);

        let cfg = FieldConfig::new(
            1.0,
            vec![wave(1.0, 0.0, int(0), 1.0), wave(1.0, std::f64::consts::PI, int(0), 1.0)],
        )
        .unwrap();
        let (parts, _) = s_tilde(&cfg);
        assert!(parts[0].abs() < 1e-15 && parts[1].abs() < 1e-15);
    }

    #[test]
    fn assembly_shapes() {
        let cfg = FieldConfig::new(1.0, vec![wave(1.0, 0.0, int(0), 1.0)]).unwrap();
        let lat = cfg.lattice().unwrap();
        let t = assemble_truncated(&cfg, &lat, 3).unwrap();
        assert_eq!(t.matrix.dim(), 7);
        assert_eq!(t.matrix.lower_bandwidth(), 0);
        assert!((t.rhs[3] - Complex64::new(-1.0 / 6.0, 0.0)).norm() < 1e-15);

        let cfg = crate::scenarios::bichromatic(10.0, 10.0 * 1.5f64.sqrt(), 2, std::f64::consts::FRAC_PI_2).unwrap();
        let lat = cfg.lattice().unwrap();
        let t = assemble_truncated(&cfg, &lat, 5).unwrap();
        assert_eq!(t.matrix.lower_bandwidth(), 1);
        assert_eq!(t.matrix.upper_bandwidth(), 1);
        let n = t.matrix.dim();
        for i in 0..n {
            for j in 0..n {
                let a = t.matrix.get(i, j);
                let b = t.matrix.get(n - 1 - i, n - 1 - j);
                assert_eq!(a, b.conj(), "centrohermitian at ({i}, {j})");
            }
        }
        let k = 5i64;
        for q in -k..=k {
            for &m in &lat.m_offsets {
                let qc = q + m / lat.g;
                if qc.abs() <= k {
                    let direct = matrix_element(q * lat.g, m, &cfg, &lat).unwrap();
                    let stored = t.matrix.get((q + k) as usize, (qc + k) as usize);
                    assert!((direct - stored).norm() <= 1e-15 * (1.0 + direct.norm()));
                }
            }
        }
        assert!(assemble_truncated(&cfg, &lat, 0).is_err());
    }

    #[test]
    fn zero_field_limit_is_identity() {
        let cfg = FieldConfig::new(1.0, vec![wave(0.0, 0.0, int(1), 1.0), wave(0.0, 0.0, int(-1), -1.0)]).unwrap();
        let lat = cfg.lattice().unwrap();
        let t = assemble_truncated(&cfg, &lat, 4).unwrap();
        for i in 0..t.matrix.dim() {
            for j in 0..t.matrix.dim() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_eq!(t.matrix.get(i, j), Complex64::new(expected, 0.0));
            }
        }
        let (_, sol) = solve(&cfg);
        assert_eq!(sol.w0, Complex64::new(-0.5, 0.0));
        assert!(sol.w.iter().enumerate().all(|(i, w)| i == sol.k || *w == ZERO));
        assert!(sol.s.iter().all(|s| *s == 0.0));
        assert!(sol.u.values().chain(sol.v.values()).all(|c| *c == ZERO));
    }

    #[test]
    fn resonant_single_wave() {
        let cfg = FieldConfig::new(1.0, vec![wave(1.0, 0.0, int(0), 1.0)]).unwrap();
        let (lat, sol) = solve(&cfg);
        assert!((sol.w0 - Complex64::new(-1.0 / 6.0, 0.0)).norm() < 1e-15);
        assert!(sol.harmonics().filter(|n| *n != 0).all(|n| sol.r_at(n) == ZERO));
        assert!((sol.s[0] - 2.0).abs() < 1e-14);
        assert!(sol.u_at(0).norm() < 1e-15);
        assert!((sol.v_at(0) - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        let f = mean_forces(&sol, &cfg);
        assert!((f.total.x - 1.0 / 3.0).abs() < 1e-14);
        let spec = rate_and_force_spectrum(&sol, &cfg, &lat, sol.window()).unwrap();
        let s = spec.spectra.unwrap();
        for (i, n) in s.harmonics.iter().enumerate() {
            if *n != 0 {
                assert_eq!(s.rates[i][0], ZERO);
            }
        }
        let x = reconstruct_time(&sol, 1.234);
        assert!((x.v - 1.0 / 3.0).abs() < 1e-15 && (x.w + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn detuned_single_wave_matches_standard_saturation() {
        let cfg = FieldConfig::new(1.0, vec![wave(2.5, 0.7, Rational::new(-3, 2), 1.0)]).unwrap();
        let (_, sol) = solve(&cfg);
        let s = (2.5f64.powi(2) / 2.0) / (2.25 + 0.25);
        assert!((sol.s[0] - s).abs() < 1e-13);
    }

    #[test]
    fn monochromatic_s_parameters_simplify() {
        let cfg = FieldConfig::new(
            1.0,
            vec![
                wave(0.8, 0.2, int(1), 1.0),
                wave(1.5, 2.1, int(1), -1.0),
                wave(0.3, -1.0, int(1), 0.0),
            ],
        )
        .unwrap();
        let (_, sol) = solve(&cfg);
        let total: Complex64 = cfg.waves.iter().map(|w| w.omega()).sum();
        for (j, w) in cfg.waves.iter().enumerate() {
            let expected = (w.omega() / Complex64::new(0.5, -1.0) * total.conj()).re;
            assert!((sol.s[j] - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn solution_invariants_for_bichromatic_preset() {
        let cfg = crate::scenarios::bichromatic(10.0, 10.0 * 1.5f64.sqrt(), 2, std::f64::consts::FRAC_PI_2).unwrap();
        let (lat, sol) = solve(&cfg);
        assert!(sol.converged);
        assert!(sol.s_eff >= 0.0);
        assert!(sol.w0.im.abs() < 1e-10 * sol.w0.norm());
        assert!(sol.w0.re > -0.5 && sol.w0.re < 0.0);
        assert_eq!(sol.r_at(0), Complex64::new(1.0, 0.0));
        for n in sol.harmonics() {
            assert_eq!(sol.w_at(-n), sol.w_at(n).conj());
            assert_eq!(sol.r_at(-n), sol.r_at(n).conj());
        }
        for (n, u) in &sol.u {
            assert!((sol.u_at(-n) - u.conj()).norm() < 1e-14);
            assert!((sol.v_at(-n) - sol.v_at(*n).conj()).norm() < 1e-14);
        }
        let f = mean_forces(&sol, &cfg);
        let balance: f64 = f.rates.iter().sum();
        assert!((balance - cfg.gamma() * (sol.w0.re + 0.5)).abs() < 1e-12);
        let alt = mean_rates_from_coherences(&sol, &cfg, &lat);
        for (a, b) in alt.iter().zip(&f.rates) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        let spec = rate_and_force_spectrum(&sol, &cfg, &lat, 20).unwrap();
        let s = spec.spectra.as_ref().unwrap();
        for j in 0..4 {
            assert!((s.rate(j, 0).unwrap().re - f.rates[j]).abs() < 1e-12);
            for n in &s.harmonics {
                assert!((s.rate(j, -n).unwrap() - s.rate(j, *n).unwrap().conj()).norm() < 1e-13);
            }
            let fz = s.force(j, 2).unwrap();
            assert_eq!(fz.x, s.rate(j, 2).unwrap() * cfg.waves[j].k.x);
        }
        assert!(rate_and_force_spectrum(&sol, &cfg, &lat, sol.window() + 1).is_err());
        // odd harmonics are off the g = 2 sublattice
        assert_eq!(sol.r_at(1), ZERO);
    }

    #[test]
    fn reconstruction_is_periodic_on_sublattice_for_w() {
        let cfg = crate::scenarios::bichromatic(5.0, 6.0, 2, 1.0).unwrap();
        let (lat, sol) = solve(&cfg);
        let tp = lat.reduced_period();
        for t in [0.0, 0.3, 1.7] {
            let a = reconstruct_time(&sol, t);
            let b = reconstruct_time(&sol, t + tp);
            let c = reconstruct_time(&sol, t + lat.period());
            assert!((a.w - b.w).abs() < 1e-12);
            assert!(a.distance(&c) < 1e-12);
        }
    }

    #[test]
    fn convergence_failure_reports_history() {
        let cfg = crate::scenarios::bichromatic(10.0, 12.0, 2, 1.0).unwrap();
        let lat = cfg.lattice().unwrap();
        let opts = SolveOptions {
            k0: Some(2),
            k_max: 8,
            ..SolveOptions::default()
        };
        match solve_adaptive(&cfg, &lat, &opts) {
            Err(Error::ConvergenceFailure { history, .. }) => assert_eq!(history.len(), 2),
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }
}
