//! Two waves of different frequencies: the continued-fraction path next to
//! the banded matrix solver.

use atomforce::contfrac::{self, PairOptions};
use atomforce::floquet;
use atomforce::lattice::Rational;
use atomforce::{FieldConfig, PlaneWave};
use nalgebra::Vector3;

fn main() -> atomforce::Result<()> {
    let config = FieldConfig::new(
        1.0,
        vec![
            PlaneWave { rabi: 8.0, phase: 0.0, detuning: Rational::from_integer(6), k: Vector3::x() },
            PlaneWave { rabi: 5.0, phase: 0.7, detuning: Rational::new(-3, 2), k: -Vector3::x() },
        ],
    )?;
    let pair = contfrac::solve_pair(&config, &PairOptions::default())?;
    println!(
        "n1 = {}, n2 = {}, n_s = {}, continued fraction depth {}",
        pair.pair.n1, pair.pair.n2, pair.pair.n_s, pair.depth
    );

    let lattice = config.lattice()?;
    let matrix = floquet::solve_adaptive(&config, &lattice, &Default::default())?;
    let forces = floquet::mean_forces(&matrix, &config);
    for j in 0..2 {
        println!(
            "wave {j}: F_contfrac = {:+.12}  F_matrix = {:+.12}",
            pair.forces.forces[j].x, forces.forces[j].x
        );
    }
    for k in 1..=4 {
        let n = k * pair.pair.n_s;
        println!("r_{n:<3} = {:.3e}", pair.solution.r_at(n).norm());
    }
    Ok(())
}
