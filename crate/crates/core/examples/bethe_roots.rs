//! Bethe roots for every eigenstate, reconstructed from eigenvectors and
//! checked against the diagonalisation.

use std::error::Error;

use qpclab::bethe::solve_all;
use qpclab::hamiltonians::{Model, ModelParams};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for (model, n, gamma) in [(Model::Am, 7, 1.0), (Model::Bh, 5, 3.0)] {
        let params = ModelParams::from_gamma(model, n, gamma)?;
        println!("{model} N={n} gamma={gamma}");
        for state in solve_all(&params)? {
            println!(
                "  E = {:>14.10}  |E_bethe - E| = {:.1e}  residual = {:.1e}",
                state.eigenvalue,
                (state.bethe_energy - state.eigenvalue).abs(),
                state.residual
            );
        }
    }
    let ground = &solve_all(&ModelParams::from_gamma(Model::Am, 7, 1.0)?)?[0];
    for v in &ground.roots.roots {
        println!("  ground-state root {:.8} {:+.8}i", v.re, v.im);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
