//! Velocity profile of the four-wave bichromatic force.
//!
//! `cargo run --release --example bichromatic_force [n_points]`

use std::f64::consts::PI;
use std::time::Instant;

use atomforce::scenarios::{self, Preset, Solver, Tolerances};
use nalgebra::Vector3;

fn main() -> atomforce::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(301);
    let config = scenarios::preset(&Preset::bichromatic_reference())?;
    let grid = scenarios::velocity_grid(&Vector3::x(), -15.0, 15.0, n)?;
    let start = Instant::now();
    let sweep = scenarios::velocity_sweep(&config, &grid, Solver::Auto, &Tolerances::default())?;
    let elapsed = start.elapsed();

    // forces in units of ħkΓ/2
    println!("# v  F_total  converged");
    for i in 0..sweep.len() {
        println!("{:8.3} {:12.6} {}", sweep.velocities[i].x, 2.0 * sweep.forces[i].x, sweep.converged[i]);
    }
    let peak = sweep
        .forces
        .iter()
        .filter(|f| f.x.is_finite())
        .map(|f| 2.0 * f.x.abs())
        .fold(0.0, f64::max);
    let failed = sweep.converged.iter().filter(|c| !**c).count();
    println!("# peak |F| = {peak:.4} hbar k Gamma/2, (2/pi) delta/Gamma = {:.4}", 2.0 / PI * 10.0);
    println!("# {failed} of {n} rows not solved, {:.1?}", elapsed);
    Ok(())
}
