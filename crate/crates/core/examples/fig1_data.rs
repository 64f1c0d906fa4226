//! Coherence correlator and atomic fraction for N = 20, 30, 40 over scaled
//! coupling δ/(Ω√N) in [0, 3], written as CSV to a temporary directory.

use std::error::Error;

use qpclab::cli::sweep_table;
use qpclab::correlators::{fig1_grid, fig1_summary, sweep, SweepOptions, FIG1_SIZES};
use qpclab::hamiltonians::Model;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join("qpclab_fig1");
    std::fs::create_dir_all(&dir)?;
    for n in FIG1_SIZES {
        let result = sweep(Model::Am, n, &fig1_grid(n), &SweepOptions::default())?;
        let path = dir.join(format!("fig1_n{n}.csv"));
        std::fs::write(&path, sweep_table(&result).to_csv())?;
        let s = fig1_summary(&result)?;
        println!(
            "N={n}: locator {:.2}, <n_a>/N at 2.5 = {:.4}, monotone = {}  -> {}",
            s.locator,
            s.atom_fraction_at_probe,
            s.monotone,
            path.display()
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
