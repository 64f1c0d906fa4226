//! QES wavefunctions built from Bethe roots: constant residual and node
//! ordering, plus the effect of perturbing the roots.

use std::error::Error;

use qpclab::hamiltonians::{Model, ModelParams};
use qpclab::qes::{node_ordering_holds, perturbed, qes_family, residual_constancy, PotentialSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for (model, n, gamma) in [(Model::Am, 10, 3.0), (Model::Bh, 8, 2.0)] {
        let params = ModelParams::from_gamma(model, n, gamma)?;
        let spec = PotentialSpec::from_params(&params);
        let family = qes_family(&params)?;
        println!("{model} N={n} gamma={gamma}: node ordering holds = {}", node_ordering_holds(&params, &family));
        for state in &family {
            let r = residual_constancy(state, &spec)?;
            println!(
                "  E/chi = {:>12.6}  nodes = {:>2}  max residual = {:.1e} over {} points",
                r.energy_so, r.node_count, r.max_abs_residual, r.points
            );
        }
        let bad = perturbed(&params, &family[0], 1e-3)?;
        println!("  perturbed ground state residual = {:.1e}", residual_constancy(&bad, &spec)?.max_abs_residual);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
