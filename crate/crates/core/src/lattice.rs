//! Exact commensurability skeleton of a multi-frequency drive.
//!
//! All detunings are carried as exact rationals (in units of Γ). The common
//! beat frequency `omega_c` and the integer harmonics `m_j` are obtained with
//! integer gcd/lcm arithmetic so that `(δ_j - δ̄) / ω_c` is always an exact
//! integer.

use nalgebra::Vector3;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};

use crate::bloch::FieldConfig;
use crate::error::{Error, Result};

/// Canonical rational number (`den > 0`, reduced).
pub type Rational = Ratio<i128>;

/// Default bound on denominators produced by [`rationalize`].
pub const DEFAULT_MAX_DEN: u64 = 4096;

/// Largest magnitude accepted by [`rationalize`]; keeps convergents in range.
const RATIONALIZE_LIMIT: f64 = 1e15;

/// Best rational approximation of `x` with denominator at most `max_den`.
///
/// Walks the continued-fraction expansion of `x` and, once the next
/// convergent would exceed the bound, also considers the largest admissible
/// semiconvergent. Among all fractions with `den <= max_den` the result
/// minimises `|x - num/den|`; ties go to the smaller denominator.
pub fn rationalize(x: f64, max_den: u64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("cannot rationalize non-finite value {x}")));
    }
    if max_den == 0 {
        return Err(Error::invalid("max_den must be at least 1"));
    }
    if x.abs() > RATIONALIZE_LIMIT {
        return Err(Error::invalid(format!("value {x} is too large to rationalize")));
    }
    let max_den = max_den as i128;
    let target = x.abs();

    // h_{k-2}/k_{k-2} = 0/1, h_{k-1}/k_{k-1} = 1/0
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut y = target;
    loop {
        let a = y.floor();
        let ai = a as i128;
        let p2 = ai * p1 + p0;
        let q2 = ai * q1 + q0;
        if q2 > max_den {
            // q1 >= 1 here: the first convergent always has denominator 1.
            let t = (max_den - q0) / q1;
            let ps = t * p1 + p0;
            let qs = t * q1 + q0;
            let err_semi = (target - ps as f64 / qs as f64).abs();
            let err_conv = (target - p1 as f64 / q1 as f64).abs();
            if t > 0 && err_semi < err_conv {
                p1 = ps;
                q1 = qs;
            }
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = y - a;
        if frac <= 0.0 || p1 as f64 / q1 as f64 == target {
            break;
        }
        y = 1.0 / frac;
        if !y.is_finite() || y > RATIONALIZE_LIMIT {
            break;
        }
    }
    let num = if x < 0.0 { -p1 } else { p1 };
    Ok(Rational::new(num, q1))
}

/// Lossy conversion used when rationals enter floating-point formulas.
pub fn to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Equal weights `1/N`.
pub fn equal_weights(n: usize) -> Vec<Rational> {
    vec![Rational::new(1, n as i128); n]
}

/// Integer frequency lattice of a commensurable set of waves.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyLattice {
    /// κ-weighted mean detuning δ̄.
    pub delta_bar: Rational,
    /// Fundamental beat frequency ω_c > 0.
    pub omega_c: Rational,
    /// Harmonic index m_j of each wave, `δ_j = δ̄ + m_j ω_c`.
    pub m: Vec<i64>,
    /// Sorted distinct nonzero pairwise differences `m_l - m_j` (the set M_0).
    pub m_offsets: Vec<i64>,
    /// gcd of M_0 (1 when M_0 is empty).
    pub g: i64,
    pub weights: Vec<Rational>,
}

impl FrequencyLattice {
    pub fn delta_bar_f64(&self) -> f64 {
        to_f64(&self.delta_bar)
    }

    pub fn omega_c_f64(&self) -> f64 {
        to_f64(&self.omega_c)
    }

    /// Drive period T_c = 2π/ω_c.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega_c_f64()
    }

    /// Period of w(t) and of the rates R_j(t), T_c/g.
    pub fn reduced_period(&self) -> f64 {
        self.period() / self.g as f64
    }

    pub fn max_abs_m(&self) -> i64 {
        self.m.iter().map(|m| m.abs()).max().unwrap_or(0)
    }

    /// Half bandwidth of the reduced system, `max|M_0| / g`.
    pub fn bandwidth(&self) -> usize {
        self.m_offsets
            .iter()
            .map(|m| (m.abs() / self.g) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn is_stationary(&self) -> bool {
        self.m_offsets.is_empty()
    }
}

fn overflow(what: &str) -> Error {
    Error::LatticeOverflow(format!("integer overflow while computing {what}"))
}

fn checked_lcm(a: i128, b: i128) -> Result<i128> {
    let g = a.gcd(&b);
    (a / g).checked_mul(b).map(|x| x.abs()).ok_or_else(|| overflow("lcm"))
}

/// Positive gcd of two nonzero rationals: gcd of numerators over the lcm of
/// denominators after bringing both to a common denominator.
fn rational_gcd(x: &Rational, y: &Rational) -> Result<Rational> {
    let l = checked_lcm(*x.denom(), *y.denom())?;
    let a = x
        .numer()
        .to_owned()
        .checked_mul(l / x.denom())
        .ok_or_else(|| overflow("rational gcd"))?;
    let b = y
        .numer()
        .to_owned()
        .checked_mul(l / y.denom())
        .ok_or_else(|| overflow("rational gcd"))?;
    Ok(Rational::new(a.gcd(&b), l))
}

/// Builds the frequency lattice for the given detunings and weights.
pub fn build_lattice(detunings: &[Rational], weights: &[Rational]) -> Result<FrequencyLattice> {
    if detunings.is_empty() {
        return Err(Error::invalid("at least one wave is required"));
    }
    if weights.len() != detunings.len() {
        return Err(Error::invalid(format!(
            "{} weights given for {} waves",
            weights.len(),
            detunings.len()
        )));
    }
    if weights.iter().any(|k| k.is_negative()) {
        return Err(Error::invalid("weights must be nonnegative"));
    }
    let total = weights
        .iter()
        .try_fold(Rational::zero(), |acc, k| acc.checked_add(k))
        .ok_or_else(|| overflow("weight sum"))?;
    if total != Rational::from_integer(1) {
        return Err(Error::invalid(format!("weights sum to {total}, expected 1")));
    }

    let mut delta_bar = Rational::zero();
    for (d, k) in detunings.iter().zip(weights) {
        let term = d.checked_mul(k).ok_or_else(|| overflow("mean detuning"))?;
        delta_bar = delta_bar
            .checked_add(&term)
            .ok_or_else(|| overflow("mean detuning"))?;
    }

    let diffs = detunings
        .iter()
        .map(|d| d.checked_sub(&delta_bar).ok_or_else(|| overflow("detuning offsets")))
        .collect::<Result<Vec<_>>>()?;

    let mut omega_c: Option<Rational> = None;
    for d in diffs.iter().filter(|d| !d.is_zero()) {
        let a = d.abs();
        omega_c = Some(match omega_c {
            None => a,
            Some(w) => rational_gcd(&w, &a)?,
        });
    }
    let Some(omega_c) = omega_c else {
        return Ok(FrequencyLattice {
            delta_bar,
            omega_c: Rational::from_integer(1),
            m: vec![0; detunings.len()],
            m_offsets: Vec::new(),
            g: 1,
            weights: weights.to_vec(),
        });
    };

    let mut m = Vec::with_capacity(diffs.len());
    for d in &diffs {
        let q = d / omega_c;
        debug_assert!(q.is_integer());
        let q = q
            .to_integer()
            .to_i64()
            .filter(|q| q.abs() < i64::MAX / 4)
            .ok_or_else(|| overflow("harmonic indices"))?;
        m.push(q);
    }

    let mut m_offsets: Vec<i64> = m
        .iter()
        .flat_map(|ml| m.iter().map(move |mj| ml - mj))
        .filter(|d| *d != 0)
        .collect();
    m_offsets.sort_unstable();
    m_offsets.dedup();
    let g = m_offsets.iter().fold(0i64, |acc, d| acc.gcd(d)).max(1);

    Ok(FrequencyLattice {
        delta_bar,
        omega_c,
        m,
        m_offsets,
        g,
        weights: weights.to_vec(),
    })
}

/// Returns `config` seen from an atom moving with `velocity` (units Γ/k_ref):
/// each detuning becomes `δ_j - k_j·v`, with the Doppler shift rationalized
/// using the config's `max_den`.
pub fn doppler_shift(config: &FieldConfig, velocity: &Vector3<f64>) -> Result<FieldConfig> {
    config.validate()?;
    if !velocity.iter().all(|x| x.is_finite()) {
        return Err(Error::invalid("velocity must be finite"));
    }
    let mut shifted = config.clone();
    for wave in &mut shifted.waves {
        let shift = rationalize(wave.k.dot(velocity), config.max_den)?;
        wave.detuning = wave
            .detuning
            .checked_sub(&shift)
            .ok_or_else(|| overflow("Doppler-shifted detuning"))?;
    }
    Ok(shifted)
}
