//! Exact spectra of both models and ground-state observables.

use std::error::Error;

use qpclab::hamiltonians::{build_block, eigs, expectation, ModelParams, Observable};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let am = ModelParams::am(20, 3.0, 1.0)?;
    let spectrum = eigs(&build_block(&am), true);
    println!("AM N=20 gamma={}: lowest levels {:?}", am.gamma(), &spectrum.eigenvalues[..3]);
    let ground = &spectrum.eigenvectors.as_ref().ok_or("no vectors")?[0];
    println!(
        "  <n_a> = {:.6}, theta = {:.6}",
        expectation(&am, ground, Observable::NAtoms)?,
        expectation(&am, ground, Observable::CoherenceAm)?
    );

    let bh = ModelParams::bh(10, 1.0, 2.0)?;
    let spectrum = eigs(&build_block(&bh), true);
    let ground = &spectrum.eigenvectors.as_ref().ok_or("no vectors")?[0];
    println!("BH N=10 gamma={}: E0 = {:.10}", bh.gamma(), spectrum.eigenvalues[0]);
    println!(
        "  <(n1-n2)^2> = {:.6}, theta = {:.6}",
        expectation(&bh, ground, Observable::ImbalanceSq)?,
        expectation(&bh, ground, Observable::CoherenceBh)?
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
