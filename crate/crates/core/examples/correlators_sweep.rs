//! Ground-state correlators: Hellmann–Feynman derivatives, a γ sweep and
//! linear fits of θ on either side of the crossover.

use std::error::Error;

use qpclab::classical::closed_form_crossover;
use qpclab::correlators::{critical_behaviour_fit, hf_derivative, sweep, Coupling, SweepOptions, ThetaSource};
use qpclab::hamiltonians::{Model, ModelParams};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let p = ModelParams::am(2, 0.0, 1.0)?;
    let d = hf_derivative(&p, Coupling::Omega, 1e-4)?;
    println!("AM N=2: theta = -dE0/dOmega = {:.10} (error {:.1e})", -d.value, d.error);

    let n = 40;
    let gc = closed_form_crossover(Model::Bh, n);
    let grid: Vec<f64> = (0..=120).map(|i| gc * (0.4 + i as f64 / 100.0)).collect();
    let result = sweep(Model::Bh, n, &grid, &SweepOptions::default())?;
    for row in result.rows.iter().step_by(20) {
        println!(
            "  gamma = {:>7.3}  theta = {:>9.5}  classical = {:>9.5}  |HF - direct| = {:.1e}",
            row.gamma,
            row.theta.unwrap_or(f64::NAN),
            row.classical_theta.unwrap_or(f64::NAN),
            row.theta_hf_diff.unwrap_or(f64::NAN)
        );
    }
    for source in [ThetaSource::Classical, ThetaSource::Quantum] {
        let fit = critical_behaviour_fit(&result, gc, None, source)?;
        println!(
            "  {source:?}: slope below {:.4}, above {:.4}, theta_c {:.4} (reference {})",
            fit.slope_below, fit.slope_above, fit.theta_c, fit.theta_c_reference
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
