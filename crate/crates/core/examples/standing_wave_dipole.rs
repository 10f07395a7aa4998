//! Phase-dependent force of two counterpropagating waves of equal frequency.
//! The relative phase Δφ stands for the atom's position in the standing wave.

use std::f64::consts::PI;

use atomforce::scenarios::{self, Reference, Solver, Tolerances};

fn main() -> atomforce::Result<()> {
    let (rabi, detuning) = (1.0, 1.0);
    println!("{:>8} {:>14} {:>14} {:>10}", "dphi", "F_solver", "F_closed", "s_eff");
    for i in 0..=8 {
        let dphi = i as f64 * PI / 4.0;
        let config = scenarios::counterprop_pair(rabi, rabi, detuning, dphi)?;
        let solved = scenarios::solve(&config, Solver::Auto, &Tolerances::default())?;
        let closed = scenarios::closed_form_reference(&Reference::DipoleForce {
            rabi,
            detuning,
            delta_phi: dphi,
            gamma: 1.0,
        })?;
        println!(
            "{dphi:8.4} {:14.10} {closed:14.10} {:10.6}",
            solved.forces.total.x, solved.solution.s_eff
        );
    }
    Ok(())
}
