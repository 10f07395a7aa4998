//! Radiation pressure of a single traveling wave against the textbook
//! `(Γ/2) s/(1+s)` law.

use atomforce::scenarios::{self, Reference, Solver, Tolerances};

fn main() -> atomforce::Result<()> {
    println!("{:>6} {:>6} {:>14} {:>14}", "rabi", "delta", "F_solver", "F_closed_form");
    for rabi in [0.1, 1.0, 10.0] {
        for detuning in [0.0, -0.5, -5.0] {
            let config = scenarios::single(rabi, detuning)?;
            let solved = scenarios::solve(&config, Solver::Auto, &Tolerances::default())?;
            let closed = scenarios::closed_form_reference(&Reference::SingleWaveForce {
                rabi,
                detuning,
                gamma: 1.0,
            })?;
            println!("{rabi:6.1} {detuning:6.1} {:14.10} {closed:14.10}", solved.forces.total.x);
        }
    }
    Ok(())
}
