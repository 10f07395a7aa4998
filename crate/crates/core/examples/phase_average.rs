//! Random-phase averages: two weak copropagating waves of one frequency
//! interfere for any fixed phase, but on average act independently.

use atomforce::lattice::Rational;
use atomforce::scenarios::{self, Reference, Solver};
use atomforce::{FieldConfig, PlaneWave};
use nalgebra::Vector3;

fn main() -> atomforce::Result<()> {
    let rabi = 0.05;
    let wave = |phase| PlaneWave { rabi, phase, detuning: Rational::from_integer(0), k: Vector3::x() };
    let config = FieldConfig::new(1.0, vec![wave(0.0), wave(0.0)])?;
    let avg = scenarios::phase_average(&config, 2000, 7, Solver::Auto)?;
    let isolated = scenarios::closed_form_reference(&Reference::Saturation { rabi, detuning: 0.0, gamma: 1.0 })?;
    for j in 0..2 {
        println!(
            "wave {j}: <s_j> = {:.6e} +- {:.1e}  (isolated wave {isolated:.6e})",
            avg.mean_s[j], avg.stderr_s[j]
        );
        println!("        <R_j> = {:.6e} +- {:.1e}", avg.mean_rates[j], avg.stderr_rates[j]);
    }
    Ok(())
}
