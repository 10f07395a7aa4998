//! Two-wave fast path.
//!
//! For two waves of different frequencies the population equations only
//! couple `w_{k n_s}` to its neighbours `w_{(k±1) n_s}`. The ratio
//! `r_{n_s}` is then a continued fraction,
//!
//! ```text
//! r_{n_s} = -W*_{-n_s, n_s} / (1 + K_{k≥1}(p_k / 1)),   p_k = -W_{k n_s, n_s} W*_{-(k+1) n_s, n_s},
//! ```
//!
//! and the higher ratios follow from the three-term recurrence
//! `r_{(k+1) n_s} = -(r_{k n_s} + W*_{-k n_s, n_s} r_{(k-1) n_s}) / W_{k n_s, n_s}`.

use num_complex::Complex64;
use num_integer::Integer;

use crate::bloch::FieldConfig;
use crate::error::{Error, Result};
use crate::floquet::{self, FourierSolution, ForceResult, HarmonicSystem};

/// Substitute for vanishing denominators in the modified Lentz algorithm.
const TINY: f64 = 1e-30;
pub const DEFAULT_MAX_DEPTH: usize = 10_000;
/// Forward recurrence is declared unstable once |r| grows past this factor.
const GROWTH_LIMIT: f64 = 1e6;

/// Integer structure of a two-frequency drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairLattice {
    pub n1: i64,
    pub n2: i64,
    pub n_s: i64,
    pub m1: i64,
    pub m2: i64,
    /// sgn(ω_1 - ω_2).
    pub sign: i64,
}

pub fn pair_lattice(config: &FieldConfig) -> Result<PairLattice> {
    if config.waves.len() != 2 {
        return Err(Error::invalid(format!(
            "the continued-fraction path needs exactly two waves, got {}",
            config.waves.len()
        )));
    }
    let (d1, d2) = (config.waves[0].detuning, config.waves[1].detuning);
    if d1 == d2 {
        return Err(Error::invalid(
            "two waves of equal frequency have a stationary solution; use the matrix solver",
        ));
    }
    let lattice = config.lattice()?;
    let sign = if d1 > d2 { 1 } else { -1 };
    let (m1, m2) = (lattice.m[0], lattice.m[1]);
    let n2 = sign * m1;
    let n1 = -sign * m2;
    debug_assert!(n1 >= 0 && n2 >= 0 && n1.gcd(&n2) == 1);
    Ok(PairLattice {
        n1,
        n2,
        n_s: n1 + n2,
        m1,
        m2,
        sign,
    })
}

/// Evaluates `K_{k≥1}(p_k / 1) = p_1 / (1 + p_2 / (1 + ...))` with the
/// modified Lentz algorithm. Returns the value and the number of terms used.
pub fn eval_continued_fraction_with_depth(
    mut partial_numerators: impl FnMut(usize) -> Complex64,
    tol: f64,
    max_depth: usize,
) -> Result<(Complex64, usize)> {
    if !(tol > 0.0) {
        return Err(Error::invalid("continued-fraction tolerance must be positive"));
    }
    let tiny = Complex64::new(TINY, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let first = partial_numerators(1);
    if first == Complex64::new(0.0, 0.0) {
        return Ok((first, 1));
    }
    // b_0 = 0
    let mut f = tiny;
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    let mut previous = f;
    for k in 1..=max_depth {
        let a = if k == 1 { first } else { partial_numerators(k) };
        d = one + a * d;
        if d.norm() < TINY {
            d = tiny;
        }
        c = one + a / c;
        if c.norm() < TINY {
            c = tiny;
        }
        d = d.inv();
        previous = f;
        f *= c * d;
        if !f.is_finite() {
            break;
        }
        if k >= 2 && (f - previous).norm() < tol {
            return Ok((f, k));
        }
    }
    Err(Error::ContinuedFraction {
        depth: max_depth,
        last: f,
        previous,
    })
}

pub fn eval_continued_fraction(
    partial_numerators: impl FnMut(usize) -> Complex64,
    tol: f64,
    max_depth: usize,
) -> Result<Complex64> {
    eval_continued_fraction_with_depth(partial_numerators, tol, max_depth).map(|(v, _)| v)
}

/// How the harmonics beyond `r_{n_s}` are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Recurrence {
    /// Successive ratios `r_{k n_s} / r_{(k-1) n_s}` from downward recursion
    /// of the continued-fraction tails.
    #[default]
    Ratio,
    /// The three-term recurrence run upwards, guarded against growth of the
    /// dominant solution.
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_depth: usize,
    pub recurrence: Recurrence,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_depth: DEFAULT_MAX_DEPTH,
            recurrence: Recurrence::Ratio,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PairSolution {
    pub pair: PairLattice,
    pub solution: FourierSolution,
    pub forces: ForceResult,
    /// Terms needed by the continued fraction for `r_{n_s}`.
    pub depth: usize,
}

struct Couplings<'a> {
    sys: &'a HarmonicSystem,
    ns: i64,
}

impl Couplings<'_> {
    /// `W_{k n_s, n_s}`.
    fn up(&self, k: i64) -> Complex64 {
        let n = k * self.ns;
        self.sys.beta(n, self.ns) / (self.sys.alpha(n) + self.sys.beta(n, 0))
    }

    /// `W*_{-k n_s, n_s} = W_{k n_s, -n_s}`.
    fn down(&self, k: i64) -> Complex64 {
        self.up(-k).conj()
    }
}

/// Solves a two-frequency configuration through the continued fraction.
pub fn solve_pair(config: &FieldConfig, options: &PairOptions) -> Result<PairSolution> {
    let pair = pair_lattice(config)?;
    let lattice = config.lattice()?;
    let sys = HarmonicSystem::new(config, &lattice)?;
    debug_assert_eq!(lattice.g, pair.n_s);
    let w = Couplings { sys: &sys, ns: pair.n_s };

    let cf_tol = 0.01 * options.atol.min(options.rtol);
    let (tail, depth) =
        eval_continued_fraction_with_depth(|k| -w.up(k as i64) * w.down(k as i64 + 1), cf_tol, options.max_depth)?;
    let r1 = -w.down(1) / (1.0 + tail);

    let upper = match options.recurrence {
        Recurrence::Ratio => ratio_harmonics(&w, r1, depth, options)?,
        Recurrence::Forward => forward_harmonics(&w, r1, options)?,
    };

    // r on q ∈ [-K, K]
    let k = upper.len() - 1;
    let mut r = Vec::with_capacity(2 * k + 1);
    r.extend(upper.iter().rev().map(|x| x.conj()));
    r.extend(upper.iter().skip(1).copied());
    let solution = floquet::solution_from_ratios(config, &lattice, r, 0.0)?;
    let forces = floquet::mean_forces(&solution, config);
    Ok(PairSolution {
        pair,
        solution,
        forces,
        depth,
    })
}

/// `[r_0, r_{n_s}, r_{2 n_s}, ...]` until the magnitude drops below `atol`.
fn ratio_harmonics(w: &Couplings, r1: Complex64, depth: usize, options: &PairOptions) -> Result<Vec<Complex64>> {
    let mut start = (2 * depth).max(16);
    loop {
        // ρ_k = r_k / r_{k-1} = -W*_{-k} / (1 + W_k ρ_{k+1}), seeded with ρ_{start+1} = 0
        let mut rho = vec![Complex64::new(0.0, 0.0); start + 2];
        for k in (1..=start).rev() {
            rho[k] = -w.down(k as i64) / (1.0 + w.up(k as i64) * rho[k + 1]);
        }
        let mut out = vec![Complex64::new(1.0, 0.0), r1];
        if r1.norm() < options.atol {
            return Ok(out);
        }
        for k in 2..=start / 2 {
            let next = out[k - 1] * rho[k];
            out.push(next);
            if next.norm() < options.atol {
                return Ok(out);
            }
        }
        if start >= options.max_depth {
            return Err(Error::ContinuedFraction {
                depth: start,
                last: *out.last().unwrap(),
                previous: out[out.len() - 2],
            });
        }
        start = (2 * start).min(options.max_depth);
    }
}

fn forward_harmonics(w: &Couplings, r1: Complex64, options: &PairOptions) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::new(1.0, 0.0), r1];
    let limit = GROWTH_LIMIT * r1.norm().max(1.0);
    for k in 1..options.max_depth {
        if out[k].norm() < options.atol && out[k - 1].norm() < options.atol.sqrt() {
            return Ok(out);
        }
        let next = -(out[k] + w.down(k as i64) * out[k - 1]) / w.up(k as i64);
        if !next.is_finite() || next.norm() > limit {
            return Err(Error::RecurrenceInstability {
                k: k + 1,
                magnitude: next.norm(),
            });
        }
        out.push(next);
    }
    Err(Error::RecurrenceInstability {
        k: options.max_depth,
        magnitude: out.last().map_or(0.0, |x| x.norm()),
    })
}
