//! Direct integration of the optical Bloch equations, averaged over one
//! drive period, against the harmonic-balance rates.

use atomforce::bloch::{self, BlochState, OracleOptions};
use atomforce::scenarios::{self, Solver, Tolerances};

fn main() -> atomforce::Result<()> {
    let config = scenarios::bichromatic(3.0, 3.0, 2, std::f64::consts::FRAC_PI_2)?;
    let lattice = config.lattice()?;

    let avg = bloch::periodic_average_rates(&config, &OracleOptions::default())?;
    let solved = scenarios::solve(&config, Solver::Auto, &Tolerances::default())?;
    println!("period T_c = {:.4}/Γ, {} RK4 steps", avg.period, avg.steps);
    for j in 0..config.waves.len() {
        println!(
            "wave {j}: R_time = {:+.8}  R_harmonic = {:+.8}",
            avg.rates[j], solved.forces.rates[j]
        );
    }

    // first few /Γ of the transient
    let dt = bloch::default_dt_max(&config, &lattice);
    let traj = bloch::integrate_obe(&config, &lattice, BlochState::GROUND, 0.0, 2.0, dt)?;
    for (t, s) in traj.times.iter().zip(&traj.states).step_by(traj.times.len() / 8) {
        println!("t = {t:5.2}  u = {:+.4}  v = {:+.4}  w = {:+.4}", s.u, s.v, s.w);
    }
    Ok(())
}
