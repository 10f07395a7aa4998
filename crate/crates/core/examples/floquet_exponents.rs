//! Floquet exponents of the periodically driven Bloch equations from the
//! monodromy matrix. Their real parts stay within [-Γ, -Γ/2].

use atomforce::bloch;
use atomforce::scenarios;

fn main() -> atomforce::Result<()> {
    for (detuning, rabi) in [(1.0, 0.5), (2.0, 2.0), (4.0, 5.0)] {
        let config = scenarios::bichromatic(detuning, rabi, 2, std::f64::consts::FRAC_PI_2)?;
        let lattice = config.lattice()?;
        let exps = bloch::floquet_exponents(&config, &lattice)?;
        let sum: f64 = exps.iter().map(|e| e.re).sum();
        println!("delta = {detuning}, rabi = {rabi}: T_c = {:.4}", lattice.period());
        for e in exps {
            println!("    {:+.8} {:+.8}i", e.re, e.im);
        }
        println!("    sum of real parts {sum:+.8} (expected -2)");
    }
    Ok(())
}
