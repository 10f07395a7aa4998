//! Problem definition and time-domain optical Bloch equations.
//!
//! In the frame rotating at the κ-weighted mean laser frequency the Bloch
//! vector `x = (u, v, w)` obeys `ẋ = A(t) x + b` with
//!
//! ```text
//!        | -Γ/2     δ̄      Im Ω(t) |
//! A(t) = | -δ̄     -Γ/2    -Re Ω(t) |,   b = (0, 0, -Γ/2)
//!        | -Im Ω(t) Re Ω(t)   -Γ    |
//! ```
//!
//! and `Ω(t) = Σ_j Ω_j exp(i m_j ω_c t)`. The fixed-step RK4 integrator in
//! this module is the brute-force reference the harmonic-balance solver is
//! checked against.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{self, build_lattice, FrequencyLattice, Rational, DEFAULT_MAX_DEN};

const STATE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomParams {
    /// Spontaneous decay rate of the excited state.
    pub gamma: f64,
}

impl Default for AtomParams {
    fn default() -> Self {
        AtomParams { gamma: 1.0 }
    }
}

/// One quasi-resonant plane wave.
///
/// `phase` is the phase of the complex Rabi frequency, i.e. it already
/// contains the laser phase, the spatial phase `-k·r` and the phase of the
/// dipole matrix element.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWave {
    pub rabi: f64,
    pub phase: f64,
    pub detuning: Rational,
    pub k: Vector3<f64>,
}

impl PlaneWave {
    /// Complex Rabi frequency `Ω_R e^{iφ}`.
    pub fn omega(&self) -> Complex64 {
        Complex64::from_polar(self.rabi, self.phase)
    }

    pub fn detuning_f64(&self) -> f64 {
        lattice::to_f64(&self.detuning)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    pub atom: AtomParams,
    pub waves: Vec<PlaneWave>,
    pub weights: Vec<Rational>,
    pub max_den: u64,
}

impl FieldConfig {
    /// Config with equal weights and the default rationalization bound.
    pub fn new(gamma: f64, waves: Vec<PlaneWave>) -> Result<Self> {
        let weights = lattice::equal_weights(waves.len().max(1));
        let cfg = FieldConfig {
            atom: AtomParams { gamma },
            waves,
            weights,
            max_den: DEFAULT_MAX_DEN,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_weights(mut self, weights: Vec<Rational>) -> Result<Self> {
        self.weights = weights;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.atom.gamma > 0.0 && self.atom.gamma.is_finite()) {
            return Err(Error::invalid("gamma must be positive and finite"));
        }
        if self.waves.is_empty() {
            return Err(Error::invalid("at least one plane wave is required"));
        }
        if self.max_den == 0 {
            return Err(Error::invalid("max_den must be at least 1"));
        }
        for (j, w) in self.waves.iter().enumerate() {
            // rabi == 0 is tolerated as the zero-field limit.
            if !(w.rabi >= 0.0 && w.rabi.is_finite()) {
                return Err(Error::invalid(format!("wave {j}: rabi must be nonnegative and finite")));
            }
            if !w.phase.is_finite() || !w.k.iter().all(|x| x.is_finite()) {
                return Err(Error::invalid(format!("wave {j}: phase and k must be finite")));
            }
        }
        if self.weights.len() != self.waves.len() {
            return Err(Error::invalid("one weight per wave is required"));
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.atom.gamma
    }

    pub fn detunings(&self) -> Vec<Rational> {
        self.waves.iter().map(|w| w.detuning).collect()
    }

    pub fn lattice(&self) -> Result<FrequencyLattice> {
        build_lattice(&self.detunings(), &self.weights)
    }

    /// Normalized total drive strength `Σ_j Ω_R,j / Γ`.
    pub fn total_rabi(&self) -> f64 {
        self.waves.iter().map(|w| w.rabi).sum::<f64>() / self.gamma()
    }

    pub fn omegas(&self) -> Vec<Complex64> {
        self.waves.iter().map(PlaneWave::omega).collect()
    }
}

/// Bloch vector `(u, v, w)` with `u + i v = ρ_ge` in the rotating frame and
/// `w = ρ_ee - 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochState {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl BlochState {
    pub const GROUND: BlochState = BlochState {
        u: 0.0,
        v: 0.0,
        w: -0.5,
    };

    pub fn new(u: f64, v: f64, w: f64) -> Self {
        BlochState { u, v, w }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.u * self.u + self.v * self.v + self.w * self.w
    }

    pub fn distance(&self, other: &BlochState) -> f64 {
        let d = [self.u - other.u, self.v - other.v, self.w - other.w];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    /// Whether the state is a valid density matrix up to `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.w.abs() <= 0.5 + tol && self.norm_sqr() <= 0.25 + tol
    }

    fn to_array(self) -> [f64; 3] {
        [self.u, self.v, self.w]
    }

    fn from_array(a: [f64; 3]) -> Self {
        BlochState {
            u: a[0],
            v: a[1],
            w: a[2],
        }
    }
}

/// Complex drive envelope `Ω(t) = Σ_j Ω_j e^{i m_j ω_c t}`.
pub fn rabi_envelope(config: &FieldConfig, lattice: &FrequencyLattice, t: f64) -> Complex64 {
    let wc = lattice.omega_c_f64();
    config
        .waves
        .iter()
        .zip(&lattice.m)
        .map(|(w, m)| w.omega() * Complex64::from_polar(1.0, *m as f64 * wc * t))
        .sum()
}

/// Right-hand side `A(t) x + b`.
pub fn obe_rhs(state: &BlochState, t: f64, config: &FieldConfig, lattice: &FrequencyLattice) -> BlochState {
    let omega = rabi_envelope(config, lattice, t);
    let rhs = rhs_with(config.gamma(), lattice.delta_bar_f64(), omega, state.to_array(), true);
    BlochState::from_array(rhs)
}

#[inline]
fn rhs_with(gamma: f64, delta_bar: f64, omega: Complex64, x: [f64; 3], driven: bool) -> [f64; 3] {
    let [u, v, w] = x;
    let (re, im) = (omega.re, omega.im);
    let b = if driven { -0.5 * gamma } else { 0.0 };
    [
        -0.5 * gamma * u + delta_bar * v + im * w,
        -delta_bar * u - 0.5 * gamma * v - re * w,
        -im * u + re * v - gamma * w + b,
    ]
}

/// Precomputed OBE coefficients for repeated right-hand-side evaluation.
#[derive(Debug, Clone)]
struct ObeSystem {
    gamma: f64,
    delta_bar: f64,
    omegas: Vec<Complex64>,
    freqs: Vec<f64>,
}

impl ObeSystem {
    fn new(config: &FieldConfig, lattice: &FrequencyLattice) -> Self {
        let wc = lattice.omega_c_f64();
        ObeSystem {
            gamma: config.gamma(),
            delta_bar: lattice.delta_bar_f64(),
            omegas: config.omegas(),
            freqs: lattice.m.iter().map(|m| *m as f64 * wc).collect(),
        }
    }

    fn phasors(&self, t: f64) -> impl Iterator<Item = Complex64> + '_ {
        self.omegas
            .iter()
            .zip(&self.freqs)
            .map(move |(o, f)| o * Complex64::from_polar(1.0, f * t))
    }

    fn envelope(&self, t: f64) -> Complex64 {
        self.phasors(t).sum()
    }

    fn rhs(&self, t: f64, x: [f64; 3], driven: bool) -> [f64; 3] {
        rhs_with(self.gamma, self.delta_bar, self.envelope(t), x, driven)
    }

    /// Instantaneous per-wave rates `R_j(t) = Re[Ω_j e^{i m_j ω_c t} (v + i u)]`.
    fn rates(&self, t: f64, x: [f64; 3], out: &mut [f64]) {
        let z = Complex64::new(x[1], x[0]);
        for (r, p) in out.iter_mut().zip(self.phasors(t)) {
            *r = (p * z).re;
        }
    }

    fn step(&self, t: f64, x: [f64; 3], h: f64, driven: bool) -> [f64; 3] {
        let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
        let k1 = self.rhs(t, x, driven);
        let k2 = self.rhs(t + 0.5 * h, add(x, k1, 0.5 * h), driven);
        let k3 = self.rhs(t + 0.5 * h, add(x, k2, 0.5 * h), driven);
        let k4 = self.rhs(t + h, add(x, k3, h), driven);
        let mut out = x;
        for i in 0..3 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }
}

fn check_state(t: f64, x: [f64; 3]) -> Result<()> {
    let s = BlochState::from_array(x);
    if !s.is_physical(STATE_TOL) || !x.iter().all(|c| c.is_finite()) {
        return Err(Error::NumericalInstability {
            t,
            detail: format!(
                "state ({:.6e}, {:.6e}, {:.6e}) left the Bloch ball; reduce dt_max",
                s.u, s.v, s.w
            ),
        });
    }
    Ok(())
}

/// Number of equal steps of size at most `dt_max` covering `span`.
fn step_count(span: f64, dt_max: f64) -> usize {
    ((span / dt_max).ceil() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
}

/// Fixed-step classical RK4 from `t0` to `t1`; the step is
/// `(t1 - t0) / ceil((t1 - t0) / dt_max)` and both endpoints are sampled.
pub fn integrate_obe(
    config: &FieldConfig,
    lattice: &FrequencyLattice,
    x0: BlochState,
    t0: f64,
    t1: f64,
    dt_max: f64,
) -> Result<Trajectory> {
    if !(t1 > t0) || !(dt_max > 0.0) {
        return Err(Error::invalid("integration requires t1 > t0 and dt_max > 0"));
    }
    let sys = ObeSystem::new(config, lattice);
    let n = step_count(t1 - t0, dt_max);
    let h = (t1 - t0) / n as f64;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut x = x0.to_array();
    times.push(t0);
    states.push(x0);
    for i in 0..n {
        let t = t0 + i as f64 * h;
        x = sys.step(t, x, h, true);
        let t_next = t0 + (i + 1) as f64 * h;
        check_state(t_next, x)?;
        times.push(t_next);
        states.push(BlochState::from_array(x));
    }
    Ok(Trajectory { times, states })
}

/// Burn-in time `safety × 2/Γ` after which transients have died out.
pub fn transient_time(gamma: f64, safety: f64) -> f64 {
    safety * 2.0 / gamma
}

/// Default RK4 step: resolves the beat note, the decay scale and the Rabi
/// oscillation at the peak drive strength.
pub fn default_dt_max(config: &FieldConfig, lattice: &FrequencyLattice) -> f64 {
    let harmonics = lattice.max_abs_m().max(1) as f64;
    let peak_rabi: f64 = config.waves.iter().map(|w| w.rabi).sum();
    let beat = lattice.period() / (64.0 * harmonics);
    let decay = 0.02 / config.gamma();
    let rabi = if peak_rabi > 0.0 { 0.02 / peak_rabi } else { f64::INFINITY };
    beat.min(decay).min(rabi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Burn-in length in units of the slowest transient time 2/Γ.
    pub safety: f64,
    pub dt_max: Option<f64>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            safety: 20.0,
            dt_max: None,
        }
    }
}

/// Period averages from direct integration.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAverage {
    /// Mean per-wave rates R̄_j.
    pub rates: Vec<f64>,
    pub mean_state: BlochState,
    /// Averaging window length (one drive period T_c).
    pub period: f64,
    pub steps: usize,
}

/// Integrates past the transient, then trapezoid-averages `R_j(t)` and the
/// Bloch components over one full drive period.
pub fn periodic_average_rates(config: &FieldConfig, options: &OracleOptions) -> Result<TimeAverage> {
    config.validate()?;
    let lattice = config.lattice()?;
    let sys = ObeSystem::new(config, &lattice);
    let dt = options.dt_max.unwrap_or_else(|| default_dt_max(config, &lattice));
    if !(dt > 0.0) || !(options.safety >= 1.0) {
        return Err(Error::invalid("oracle needs dt_max > 0 and safety >= 1"));
    }

    let burn = transient_time(config.gamma(), options.safety);
    let n_burn = step_count(burn, dt);
    let h_burn = burn / n_burn as f64;
    let mut x = BlochState::GROUND.to_array();
    for i in 0..n_burn {
        let t = i as f64 * h_burn;
        x = sys.step(t, x, h_burn, true);
        check_state(t + h_burn, x)?;
    }

    // u and v are only T_c periodic in general (R_j and w repeat after T_c/g).
    let period = lattice.period();
    let n = step_count(period, dt);
    let h = period / n as f64;
    let nw = config.waves.len();
    let mut rates = vec![0.0; nw];
    let mut acc_rates = vec![0.0; nw];
    let mut acc_state = [0.0; 3];
    let mut t = burn;
    for i in 0..=n {
        let weight = if i == 0 || i == n { 0.5 } else { 1.0 };
        sys.rates(t, x, &mut rates);
        for (a, r) in acc_rates.iter_mut().zip(&rates) {
            *a += weight * r;
        }
        for c in 0..3 {
            acc_state[c] += weight * x[c];
        }
        if i < n {
            x = sys.step(t, x, h, true);
            t = burn + (i + 1) as f64 * h;
            check_state(t, x)?;
        }
    }
    let norm = 1.0 / n as f64;
    Ok(TimeAverage {
        rates: acc_rates.iter().map(|a| a * norm).collect(),
        mean_state: BlochState::new(acc_state[0] * norm, acc_state[1] * norm, acc_state[2] * norm),
        period,
        steps: n_burn + n,
    })
}

/// Monodromy matrix of the homogeneous OBEs over one drive period.
pub fn monodromy(config: &FieldConfig, lattice: &FrequencyLattice, dt_max: f64) -> Matrix3<f64> {
    let sys = ObeSystem::new(config, lattice);
    let period = lattice.period();
    let n = step_count(period, dt_max);
    let h = period / n as f64;
    let mut m = Matrix3::zeros();
    for col in 0..3 {
        let mut x = [0.0; 3];
        x[col] = 1.0;
        for i in 0..n {
            x = sys.step(i as f64 * h, x, h, false);
        }
        for row in 0..3 {
            m[(row, col)] = x[row];
        }
    }
    m
}

/// Floquet exponents `ln(λ_i)/T_c` from the eigenvalues `λ_i` of the
/// monodromy matrix (principal branch), sorted by increasing real part.
///
/// Working with the eigenvalues directly gives the spectrum of the principal
/// matrix logarithm and stays valid when the monodromy matrix is defective.
pub fn floquet_exponents(config: &FieldConfig, lattice: &FrequencyLattice) -> Result<[Complex64; 3]> {
    config.validate()?;
    let dt = default_dt_max(config, lattice);
    let m = monodromy(config, lattice, dt);
    let period = lattice.period();
    let eig = m.complex_eigenvalues();
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (o, lambda) in out.iter_mut().zip(eig.iter()) {
        if lambda.norm() == 0.0 || !lambda.norm().is_finite() {
            return Err(Error::NumericalInstability {
                t: period,
                detail: "monodromy eigenvalue underflowed; drive period too long".into(),
            });
        }
        *o = lambda.ln() / period;
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}
