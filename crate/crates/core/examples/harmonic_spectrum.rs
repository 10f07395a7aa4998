//! Harmonic content of the per-wave rates: the mean force plus its
//! oscillating parts at multiples of the beat frequency.

use atomforce::floquet;
use atomforce::scenarios;

fn main() -> atomforce::Result<()> {
    let config = scenarios::bichromatic(5.0, 5.0 * 1.5f64.sqrt(), 2, std::f64::consts::FRAC_PI_2)?;
    let lattice = config.lattice()?;
    let solution = floquet::solve_adaptive(&config, &lattice, &Default::default())?;
    println!(
        "omega_c = {}, g = {}, window |n| <= {}, s_eff = {:.6}",
        lattice.omega_c_f64(),
        lattice.g,
        solution.window(),
        solution.s_eff
    );
    let n_max = 8 * lattice.g;
    let result = floquet::rate_and_force_spectrum(&solution, &config, &lattice, n_max)?;
    let spectrum = result.spectra.expect("requested");
    for (i, n) in spectrum.harmonics.iter().enumerate().filter(|(_, n)| **n >= 0) {
        let row: Vec<String> = spectrum.rates[i].iter().map(|r| format!("{:.3e}", r.norm())).collect();
        println!("n = {n:3}: |R_j,n| = {}", row.join("  "));
    }
    Ok(())
}
