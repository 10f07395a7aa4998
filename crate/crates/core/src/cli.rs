//! Config ingestion, command dispatch and CSV serialization behind the
//! `atomforce` binary.
//!
//! Config files are JSON:
//!
//! ```json
//! { "gamma": 1, "max_den": 4096, "weights": "equal",
//!   "lasers": [ { "rabi": 1.0, "phase": 0.0, "detuning": {"num": -1, "den": 2}, "k": [1, 0, 0] } ] }
//! ```
//!
//! Units everywhere: frequencies in Γ, wavevectors in k_ref, velocities in
//! Γ/k_ref, forces in ħ k_ref Γ (or ħ k_ref Γ/2 with `half-gamma`).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde_json::{Map, Value};

use crate::bloch::{self, AtomParams, FieldConfig, OracleOptions, PlaneWave};
use crate::contfrac::{self, PairOptions};
use crate::error::{Error, Result};
use crate::floquet::{self, SolveOptions};
use crate::lattice::{self, Rational, DEFAULT_MAX_DEN};
use crate::scenarios::{self, Reference, Solver, Tolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Time-domain and harmonic-balance rates must agree to this (units Γ).
pub const ORACLE_TOL: f64 = 1e-4;
/// Matrix and continued-fraction paths must agree to this.
pub const PATH_TOL: f64 = 1e-8;
const CLOSED_FORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Force,
    Spectrum,
    Sweep,
    Oracle,
    Validate,
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "force" => Ok(Command::Force),
            "spectrum" => Ok(Command::Spectrum),
            "sweep" => Ok(Command::Sweep),
            "oracle" => Ok(Command::Oracle),
            "validate" => Ok(Command::Validate),
            other => Err(Error::invalid(format!("unknown command `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForceUnits {
    /// ħ k_ref Γ
    #[default]
    Gamma,
    /// ħ k_ref Γ/2
    HalfGamma,
}

impl ForceUnits {
    fn scale(self) -> f64 {
        match self {
            ForceUnits::Gamma => 1.0,
            ForceUnits::HalfGamma => 2.0,
        }
    }
}

impl std::str::FromStr for ForceUnits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(ForceUnits::Gamma),
            "half-gamma" => Ok(ForceUnits::HalfGamma),
            other => Err(Error::invalid(format!("unknown force unit `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Vector3<f64>,
    pub v_min: f64,
    pub v_max: f64,
    pub n_points: usize,
}

impl SweepSpec {
    /// Parses `min,max,n`.
    pub fn parse_range(axis: Vector3<f64>, range: &str) -> Result<Self> {
        let parts: Vec<&str> = range.split(',').map(str::trim).collect();
        let bad = || Error::invalid(format!("--vrange expects min,max,n, got `{range}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let spec = SweepSpec {
            axis,
            v_min: parts[0].parse().map_err(|_| bad())?,
            v_max: parts[1].parse().map_err(|_| bad())?,
            n_points: parts[2].parse().map_err(|_| bad())?,
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        if self.n_points < 2 || !(self.v_min < self.v_max) {
            return Err(Error::invalid("sweep needs n >= 2 and v_min < v_max"));
        }
        Ok(())
    }
}

/// Parses `x,y,z`.
pub fn parse_vector(text: &str) -> Result<Vector3<f64>> {
    let bad = || Error::invalid(format!("expected x,y,z, got `{text}`"));
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(Vector3::new(parts[0], parts[1], parts[2]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub config_path: PathBuf,
    pub output_path: PathBuf,
    /// Dotted key (`lasers.0.rabi`) to replacement value.
    pub overrides: BTreeMap<String, Value>,
    pub tolerances: Tolerances,
    pub sweep: Option<SweepSpec>,
    pub spectrum_n_max: Option<i64>,
    /// Accepted for interface stability; every command is deterministic,
    /// so nothing reads it yet.
    pub seed: Option<u64>,
    pub solver: Solver,
    pub force_units: ForceUnits,
    /// Also write a gnuplot script next to the CSV.
    pub gnuplot: bool,
}

impl RunSpec {
    pub fn new(command: Command, config_path: impl Into<PathBuf>, output_path: impl Into<PathBuf>) -> Self {
        RunSpec {
            command,
            config_path: config_path.into(),
            output_path: output_path.into(),
            overrides: BTreeMap::new(),
            tolerances: Tolerances::default(),
            sweep: None,
            spectrum_n_max: None,
            seed: None,
            solver: Solver::Auto,
            force_units: ForceUnits::Gamma,
            gnuplot: false,
        }
    }
}

/// Parses `key=value`; the value is read as JSON, or as a string if that fails.
pub fn parse_override(text: &str) -> Result<(String, Value)> {
    let (key, value) = text
        .split_once('=')
        .ok_or_else(|| Error::invalid(format!("override `{text}` is not key=value")))?;
    let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((key.trim().to_string(), value))
}

fn io_error(path: &Path, err: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: err.to_string(),
    }
}

pub fn parse_config(path: &Path) -> Result<FieldConfig> {
    parse_config_with(path, &BTreeMap::new())
}

pub fn parse_config_with(path: &Path, overrides: &BTreeMap<String, Value>) -> Result<FieldConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_config_str(&text, overrides)
}

pub fn parse_config_str(text: &str, overrides: &BTreeMap<String, Value>) -> Result<FieldConfig> {
    let mut doc: Value =
        serde_json::from_str(text).map_err(|e| Error::config("<document>", format!("malformed JSON: {e}")))?;
    for (key, value) in overrides {
        apply_override(&mut doc, key, value.clone())?;
    }
    config_from_value(&doc)
}

fn apply_override(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert(Value::Object(Map::new()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| Error::config(key, format!("`{part}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::config(key, format!("index {idx} out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::config(key, "cannot descend into a scalar")),
        };
    }
    Err(Error::config(key, "empty override key"))
}

fn number(v: &Value, key: &str) -> Result<f64> {
    let x = v.as_f64().ok_or_else(|| Error::config(key, "expected a number"))?;
    if !x.is_finite() {
        return Err(Error::config(key, "must be finite"));
    }
    Ok(x)
}

fn integer(v: &Value, key: &str) -> Result<i128> {
    v.as_i64()
        .map(i128::from)
        .ok_or_else(|| Error::config(key, "expected an integer"))
}

fn rational(v: &Value, key: &str, max_den: u64) -> Result<Rational> {
    match v {
        Value::Object(map) => {
            for k in map.keys() {
                if k != "num" && k != "den" {
                    return Err(Error::config(format!("{key}.{k}"), "unknown field"));
                }
            }
            let num = map
                .get("num")
                .ok_or_else(|| Error::config(format!("{key}.num"), "missing"))?;
            let num = integer(num, &format!("{key}.num"))?;
            let den = match map.get("den") {
                Some(d) => integer(d, &format!("{key}.den"))?,
                None => 1,
            };
            if den == 0 {
                return Err(Error::config(format!("{key}.den"), "must be nonzero"));
            }
            Ok(Rational::new(num, den))
        }
        _ => {
            let x = number(v, key)?;
            lattice::rationalize(x, max_den).map_err(|e| Error::config(key, e.to_string()))
        }
    }
}

fn config_from_value(doc: &Value) -> Result<FieldConfig> {
    let root = doc
        .as_object()
        .ok_or_else(|| Error::config("<document>", "expected a JSON object"))?;
    for k in root.keys() {
        if !matches!(k.as_str(), "gamma" | "max_den" | "weights" | "lasers") {
            return Err(Error::config(k, "unknown field"));
        }
    }
    let gamma = match root.get("gamma") {
        Some(v) => number(v, "gamma")?,
        None => 1.0,
    };
    if gamma <= 0.0 {
        return Err(Error::config("gamma", "must be positive"));
    }
    let max_den = match root.get("max_den") {
        Some(v) => v
            .as_u64()
            .filter(|d| *d >= 1)
            .ok_or_else(|| Error::config("max_den", "expected a positive integer"))?,
        None => DEFAULT_MAX_DEN,
    };
    let lasers = root
        .get("lasers")
        .ok_or_else(|| Error::config("lasers", "missing"))?
        .as_array()
        .ok_or_else(|| Error::config("lasers", "expected an array"))?;
    if lasers.is_empty() {
        return Err(Error::config("lasers", "at least one laser is required"));
    }
    let mut waves = Vec::with_capacity(lasers.len());
    for (j, laser) in lasers.iter().enumerate() {
        let at = |field: &str| format!("lasers.{j}.{field}");
        let obj = laser
            .as_object()
            .ok_or_else(|| Error::config(format!("lasers.{j}"), "expected an object"))?;
        for k in obj.keys() {
            if !matches!(k.as_str(), "rabi" | "phase" | "detuning" | "k") {
                return Err(Error::config(at(k), "unknown field"));
            }
        }
        let rabi = number(obj.get("rabi").ok_or_else(|| Error::config(at("rabi"), "missing"))?, &at("rabi"))?;
        // 0 is accepted as the zero-field limit
        if rabi < 0.0 {
            return Err(Error::config(at("rabi"), "must be nonnegative"));
        }
        let phase = match obj.get("phase") {
            Some(v) => number(v, &at("phase"))?,
            None => 0.0,
        };
        let detuning = rational(
            obj.get("detuning")
                .ok_or_else(|| Error::config(at("detuning"), "missing"))?,
            &at("detuning"),
            max_den,
        )?;
        let k = obj
            .get("k")
            .ok_or_else(|| Error::config(at("k"), "missing"))?
            .as_array()
            .filter(|a| a.len() == 3)
            .ok_or_else(|| Error::config(at("k"), "expected [x, y, z]"))?;
        let k = Vector3::new(
            number(&k[0], &format!("{}.0", at("k")))?,
            number(&k[1], &format!("{}.1", at("k")))?,
            number(&k[2], &format!("{}.2", at("k")))?,
        );
        waves.push(PlaneWave { rabi, phase, detuning, k });
    }
    let weights = match root.get("weights") {
        None => lattice::equal_weights(waves.len()),
        Some(Value::String(s)) if s == "equal" => lattice::equal_weights(waves.len()),
        Some(Value::Array(items)) => {
            if items.len() != waves.len() {
                return Err(Error::config("weights", "one weight per laser is required"));
            }
            let w = items
                .iter()
                .enumerate()
                .map(|(i, v)| rational(v, &format!("weights.{i}"), max_den))
                .collect::<Result<Vec<_>>>()?;
            if w.iter().any(|x| *x < Rational::from_integer(0)) {
                return Err(Error::config("weights", "weights must be nonnegative"));
            }
            if w.iter().sum::<Rational>() != Rational::from_integer(1) {
                return Err(Error::config("weights", "weights must sum to 1"));
            }
            w
        }
        Some(_) => return Err(Error::config("weights", "expected \"equal\" or an array")),
    };
    let cfg = FieldConfig {
        atom: AtomParams { gamma },
        waves,
        weights,
        max_den,
    };
    cfg.validate().map_err(|e| Error::config("<document>", e.to_string()))?;
    Ok(cfg)
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::ConvergenceFailure { .. }
        | Error::ContinuedFraction { .. }
        | Error::RecurrenceInstability { .. }
        | Error::NumericalInstability { .. }
        | Error::SingularAssembly { .. }
        | Error::SingularSystem { .. }
        | Error::InternalConsistency(_) => EXIT_CONVERGENCE,
        Error::InvalidArgument(_)
        | Error::Config { .. }
        | Error::OutOfWindow { .. }
        | Error::LatticeOverflow(_)
        | Error::Unsupported(_) => EXIT_CONFIG,
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_row<I: IntoIterator<Item = String>>(out: &mut String, fields: I) {
    let row: Vec<String> = fields.into_iter().collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

const AXES: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub exit_code: i32,
    /// Human-readable summary (the pass/fail table for `validate`).
    pub summary: String,
}

pub fn run(spec: &RunSpec) -> Result<RunReport> {
    let config = parse_config_with(&spec.config_path, &spec.overrides)?;
    let (csv, summary, exit_code) = match spec.command {
        Command::Force => {
            let csv = force_csv(&config, spec)?;
            (csv, String::new(), EXIT_OK)
        }
        Command::Spectrum => (spectrum_csv(&config, spec)?, String::new(), EXIT_OK),
        Command::Sweep => (sweep_csv(&config, spec)?, String::new(), EXIT_OK),
        Command::Oracle => (oracle_csv(&config, spec)?, String::new(), EXIT_OK),
        Command::Validate => {
            let checks = validate(&config, &spec.tolerances)?;
            let ok = checks.iter().all(|c| c.passed);
            let mut csv = String::new();
            csv_row(&mut csv, ["check", "passed", "error", "tolerance"].map(String::from));
            let mut table = String::new();
            for c in &checks {
                csv_row(
                    &mut csv,
                    [c.name.clone(), c.passed.to_string(), fmt_f64(c.error), fmt_f64(c.tolerance)],
                );
                let _ = writeln!(
                    table,
                    "{:<4} {:<40} err={:.3e} tol={:.1e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.error,
                    c.tolerance
                );
            }
            (csv, table, if ok { EXIT_OK } else { EXIT_VALIDATION_FAILED })
        }
    };
    std::fs::write(&spec.output_path, csv).map_err(|e| io_error(&spec.output_path, e))?;
    if spec.gnuplot {
        write_gnuplot(spec, &config)?;
    }
    Ok(RunReport { exit_code, summary })
}

fn force_csv(config: &FieldConfig, spec: &RunSpec) -> Result<String> {
    let solved = scenarios::solve(config, spec.solver, &spec.tolerances)?;
    let scale = spec.force_units.scale();
    let n = config.waves.len();
    let mut header = Vec::new();
    for j in 0..n {
        header.extend(AXES.iter().map(|a| format!("F{j}_{a}")));
    }
    header.extend(AXES.iter().map(|a| format!("F_{a}")));
    header.extend((0..n).map(|j| format!("s{j}")));
    header.extend(["s_eff", "w0"].map(String::from));
    let mut row = Vec::new();
    for f in &solved.forces.forces {
        row.extend(f.iter().map(|x| fmt_f64(x * scale)));
    }
    row.extend(solved.forces.total.iter().map(|x| fmt_f64(x * scale)));
    row.extend(solved.solution.s.iter().map(|x| fmt_f64(*x)));
    row.push(fmt_f64(solved.solution.s_eff));
    row.push(fmt_f64(solved.solution.w0.re));
    let mut out = String::new();
    csv_row(&mut out, header);
    csv_row(&mut out, row);
    Ok(out)
}

fn spectrum_csv(config: &FieldConfig, spec: &RunSpec) -> Result<String> {
    let lattice = config.lattice()?;
    let n_max = spec.spectrum_n_max.unwrap_or(4 * lattice.g.max(1));
    if n_max < 0 {
        return Err(Error::invalid("--nmax must be nonnegative"));
    }
    let mut opts = SolveOptions {
        rtol: spec.tolerances.rtol,
        atol: spec.tolerances.atol,
        ..SolveOptions::default()
    };
    let needed = (n_max / lattice.g.max(1)) as usize + 1;
    if needed > floquet::default_k0(config, &lattice) {
        opts.k0 = Some(needed);
    }
    let solution = floquet::solve_adaptive(config, &lattice, &opts)?;
    let result = floquet::rate_and_force_spectrum(&solution, config, &lattice, n_max)?;
    let spectrum = result.spectra.expect("spectrum requested");
    let mut out = String::new();
    csv_row(&mut out, ["j", "n", "re_R", "im_R"].map(String::from));
    for j in 0..config.waves.len() {
        for (i, n) in spectrum.harmonics.iter().enumerate() {
            let r = spectrum.rates[i][j];
            csv_row(&mut out, [j.to_string(), n.to_string(), fmt_f64(r.re), fmt_f64(r.im)]);
        }
    }
    Ok(out)
}

fn sweep_csv(config: &FieldConfig, spec: &RunSpec) -> Result<String> {
    let sweep = spec
        .sweep
        .as_ref()
        .ok_or_else(|| Error::invalid("sweep needs --vrange min,max,n"))?;
    sweep.check()?;
    let grid = scenarios::velocity_grid(&sweep.axis, sweep.v_min, sweep.v_max, sweep.n_points)?;
    let result = scenarios::velocity_sweep(config, &grid, spec.solver, &spec.tolerances)?;
    let scale = spec.force_units.scale();
    let n = config.waves.len();
    let mut out = String::new();
    let mut header: Vec<String> = ["vx", "vy", "vz", "Fx", "Fy", "Fz"].map(String::from).to_vec();
    header.extend((0..n).map(|j| format!("R{j}")));
    header.push("converged".into());
    csv_row(&mut out, header);
    for i in 0..result.len() {
        let mut row: Vec<String> = result.velocities[i].iter().map(|x| fmt_f64(*x)).collect();
        row.extend(result.forces[i].iter().map(|x| fmt_f64(x * scale)));
        row.extend(result.rates[i].iter().map(|x| fmt_f64(*x)));
        row.push(u8::from(result.converged[i]).to_string());
        csv_row(&mut out, row);
    }
    Ok(out)
}

fn oracle_csv(config: &FieldConfig, spec: &RunSpec) -> Result<String> {
    let solved = scenarios::solve(config, spec.solver, &spec.tolerances)?;
    let avg = bloch::periodic_average_rates(config, &OracleOptions::default())?;
    let mut out = String::new();
    csv_row(&mut out, ["j", "R_time_domain", "R_harmonic_balance", "abs_diff"].map(String::from));
    for j in 0..config.waves.len() {
        let (a, b) = (avg.rates[j], solved.forces.rates[j]);
        csv_row(&mut out, [j.to_string(), fmt_f64(a), fmt_f64(b), fmt_f64((a - b).abs())]);
    }
    Ok(out)
}

fn write_gnuplot(spec: &RunSpec, config: &FieldConfig) -> Result<()> {
    let path = spec.output_path.with_extension("gp");
    let data = spec.output_path.display();
    let unit = match spec.force_units {
        ForceUnits::Gamma => "hbar k Gamma",
        ForceUnits::HalfGamma => "hbar k Gamma/2",
    };
    let body = match spec.command {
        Command::Sweep => format!(
            "set datafile separator ','\nset xlabel 'v (Gamma/k)'\nset ylabel 'F ({unit})'\n\
             plot '{data}' every ::1 using 1:4 with lines title 'F_x'\n"
        ),
        Command::Spectrum => format!(
            "set datafile separator ','\nset xlabel 'n'\nset ylabel '|R_(j,n)|'\n\
             plot for [j=0:{}] '{data}' every ::1 using ($1==j ? $2 : 1/0):(sqrt($3**2+$4**2)) with impulses title sprintf('j=%d', j)\n",
            config.waves.len() - 1
        ),
        _ => format!("set datafile separator ','\n# {data}: tabular output, no default plot\n"),
    };
    std::fs::write(&path, body).map_err(|e| io_error(&path, e))
}

/// One row of the `validate` table.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: impl Into<String>, error: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            passed: error <= tolerance,
            error,
            tolerance,
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Closed-form, invariant, oracle and (for two frequencies) cross-path checks.
pub fn validate(config: &FieldConfig, tol: &Tolerances) -> Result<Vec<Check>> {
    let gamma = config.gamma();
    let solved = scenarios::solve(config, Solver::Matrix, tol)?;
    let sol = &solved.solution;
    let forces = &solved.forces;
    let mut checks = Vec::new();

    let rate_sum: f64 = forces.rates.iter().sum();
    checks.push(Check::new(
        "photon balance",
        (rate_sum - gamma * sol.excited_population()).abs(),
        1e-9,
    ));
    let in_range = sol.w0.re >= -0.5 && sol.w0.re < 0.0 && sol.w0.im == 0.0;
    checks.push(Check::new("w0 range", if in_range { 0.0 } else { 1.0 }, 0.0));
    let asym = sol
        .w
        .iter()
        .zip(sol.w.iter().rev())
        .map(|(a, b)| (a - b.conj()).norm())
        .fold(0.0, f64::max);
    checks.push(Check::new("conjugate symmetry", asym, 0.0));
    let from_coherences = floquet::mean_rates_from_coherences(sol, config, &solved.lattice);
    checks.push(Check::new(
        "rates from coherences",
        max_abs_diff(&from_coherences, &forces.rates),
        1e-9,
    ));

    let same_frequency = config.waves.iter().all(|w| w.detuning == config.waves[0].detuning);
    if config.waves.len() == 1 {
        let w = &config.waves[0];
        let expected = closed_form_reference(Reference::SingleWaveForce {
            rabi: w.rabi,
            detuning: w.detuning_f64(),
            gamma,
        })?;
        checks.push(Check::new(
            "single-wave closed form",
            (forces.rates[0] - expected).abs(),
            CLOSED_FORM_TOL * expected.abs() + 1e-15,
        ));
    } else if same_frequency {
        let s = scenarios::monochromatic_saturation(config)?;
        checks.push(Check::new(
            "monochromatic closed form",
            max_abs_diff(&s, &sol.s),
            CLOSED_FORM_TOL * s.iter().fold(1.0f64, |m, x| m.max(x.abs())),
        ));
    }

    let oracle = bloch::periodic_average_rates(config, &OracleOptions::default())?;
    checks.push(Check::new(
        "time-domain oracle",
        max_abs_diff(&oracle.rates, &forces.rates),
        ORACLE_TOL * gamma,
    ));

    if config.waves.len() == 2 && !same_frequency {
        let pair = contfrac::solve_pair(
            config,
            &PairOptions {
                rtol: tol.rtol,
                atol: tol.atol,
                ..PairOptions::default()
            },
        )?;
        let scale = forces.rates.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        checks.push(Check::new(
            "continued fraction vs matrix",
            max_abs_diff(&pair.forces.rates, &forces.rates),
            PATH_TOL * scale,
        ));
    }
    Ok(checks)
}

fn closed_form_reference(kind: Reference) -> Result<f64> {
    scenarios::closed_form_reference(&kind)
}
