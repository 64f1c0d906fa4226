//! Finite-difference spectrum of the Schrödinger operator: QES energies
//! embed in it and its ground state reproduces the many-body ground energy.

use std::error::Error;

use qpclab::hamiltonians::{Model, ModelParams};
use qpclab::qes::qes_family;
use qpclab::schrodinger_fd::{embedding_check, verify_ground_faithfulness};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for (model, n, gamma) in [(Model::Am, 10, 3.0), (Model::Bh, 8, 2.0)] {
        let params = ModelParams::from_gamma(model, n, gamma)?;
        let embedding = embedding_check(&params, &qes_family(&params)?)?;
        println!("{model} N={n} gamma={gamma}");
        for row in &embedding.rows {
            println!(
                "  QES {:>12.6}  FD[{:>2}] {:>12.6}  diff {:.1e}",
                row.energy_so, row.fd_index, row.fd_energy, row.difference
            );
        }
        let f = verify_ground_faithfulness(&params)?;
        println!("  E0 diag = {:.8}  chi*E0 FD = {:.8}  passed = {}", f.e0_diag, f.e0_fd, f.passed);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
