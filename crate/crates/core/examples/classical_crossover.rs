//! Classical picture: potential minima, crossover coupling and order,
//! critical exponent, Landau fit and N-scaling.

use std::error::Error;

use qpclab::classical::{
    classify_order, crossover_coupling, exponent_fit, landau_fit, scaling_checks, ModelFamily, PotentialFamily,
};
use qpclab::hamiltonians::Model;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for (model, n) in [(Model::Am, 100), (Model::Bh, 30)] {
        let family = ModelFamily::new(model, n);
        let c = crossover_coupling(model, n)?;
        println!("{model} N={n}: gamma_c = {:.8} (numeric {:.8})", c.closed_form, c.numeric);
        let grid: Vec<f64> = (-50..=50).map(|i| c.closed_form + i as f64 * 1e-3).collect();
        let report = classify_order(&family, &grid)?;
        println!("  order m = {}", report.order);
        let gc = c.closed_form;
        let beta = exponent_fit(&family, gc, (gc - 1e-2, gc - 1e-4), 9)?;
        println!("  beta = {:.5} +- {:.1e}", beta.beta, beta.stderr);
        let g = 0.8 * gc;
        let minima = family.minima(g)?;
        let fit = landau_fit(&family.spec(g), 0.0)?;
        println!(
            "  gamma = {g:.3}: x0 = {:.6}, E0 = {:.6}, Landau estimate {:.6}",
            minima.position(),
            minima.e_tilde0,
            fit.energy_estimate()
        );
    }
    let bh = scaling_checks(Model::Bh, &[10, 30, 90], 0.0)?;
    for r in &bh.rows {
        println!("BH N={} at gamma_c: chi*E0 = {} (expected {:?})", r.n, r.chi_e_tilde0, r.expected);
    }
    let am = scaling_checks(Model::Am, &[50, 100, 200, 400], -5.0)?;
    println!("AM gamma=-5: log-log slope of |chi*E0|/N = {:.4}", am.slope.unwrap_or(f64::NAN));
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
