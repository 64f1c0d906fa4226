//! Continuation of a solved root set in the coupling γ.
//!
//! Roots of the generating polynomial never coincide, never vanish and never
//! escape to infinity (each would force the polynomial solution of the
//! ODE to vanish identically), so along real γ every root moves on a
//! smooth path. Predictor: the tangent `dv/dγ = -J⁻¹ ∂r/∂γ`; corrector:
//! capped Newton.

use nalgebra::DVector;
use num_complex::Complex64;

use super::newton::{jacobian, newton_core};
use super::BetheRoots;
use crate::error::{Error, Result};
use crate::hamiltonians::Model;

const CORRECTOR_ITERATIONS: usize = 10;
const MAX_STEPS: usize = 300;
/// Corrector moves larger than this fraction of the local root spacing are
/// rejected as possible jumps to another solution.
const MAX_MOVE: f64 = 0.25;

fn tangent(roots: &BetheRoots) -> Option<DVector<Complex64>> {
    let rhs = DVector::from_iterator(
        roots.roots.len(),
        roots.roots.iter().map(|v| match roots.model {
            Model::Am => Complex64::new(1.0, 0.0),
            Model::Bh => -(1.0 - v * v) / (v * v),
        }),
    );
    let t = jacobian(roots).lu().solve(&rhs)?;
    t.iter().all(|z| z.is_finite()).then_some(t)
}

fn spacing(roots: &[Complex64], j: usize) -> f64 {
    let mut d = roots[j].norm();
    for (k, v) in roots.iter().enumerate() {
        if k != j {
            d = d.min((v - roots[j]).norm());
        }
    }
    d
}

/// Track the solution `start` (which must solve the equations at
/// `start.gamma`) to the coupling `target`. The result is unsorted.
pub fn continue_roots(start: &BetheRoots, target: f64) -> Result<BetheRoots> {
    if !target.is_finite() {
        return Err(Error::InvalidParams("target coupling must be finite".into()));
    }
    let solved = newton_core(start, CORRECTOR_ITERATIONS, true)?;
    if !solved.converged {
        return Err(Error::NewtonFailed {
            iterations: solved.iterations,
            residual: solved.scaled_residual,
        });
    }
    let mut current = solved.roots;
    if current.roots.is_empty() {
        current.gamma = target;
        return Ok(current);
    }
    let mut step = (target - current.gamma) / 16.0;
    let min_step = 1e-13 * (1.0 + target.abs().max(current.gamma.abs()));
    for _ in 0..MAX_STEPS {
        let remaining = target - current.gamma;
        if remaining == 0.0 {
            return Ok(current);
        }
        if step.abs() >= remaining.abs() {
            step = remaining;
        }
        let mut predicted = current.clone();
        predicted.gamma = current.gamma + step;
        if let Some(t) = tangent(&current) {
            for (v, dv) in predicted.roots.iter_mut().zip(t.iter()) {
                *v += dv * step;
            }
        }
        let accepted = match newton_core(&predicted, CORRECTOR_ITERATIONS, false) {
            Ok(out) if out.converged => {
                let (next, iterations) = (out.roots, out.iterations);
                let stayed = next.roots.iter().enumerate().all(|(j, v)| {
                    (v - predicted.roots[j]).norm() <= MAX_MOVE * spacing(&predicted.roots, j)
                });
                stayed.then_some((next, iterations))
            }
            _ => None,
        };
        match accepted {
            Some((mut next, iterations)) => {
                if step == remaining {
                    next.gamma = target;
                    return Ok(next);
                }
                current = next;
                if iterations <= 4 {
                    step *= 1.5;
                }
            }
            None => {
                step *= 0.5;
                if step.abs() < min_step {
                    return Err(Error::NewtonFailed {
                        iterations: 0,
                        residual: f64::NAN,
                    });
                }
            }
        }
    }
    Err(Error::NewtonFailed {
        iterations: MAX_STEPS,
        residual: f64::NAN,
    })
}
