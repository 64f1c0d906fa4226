//! Damped Newton refinement of Bethe roots with the analytic Jacobian.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{check_configuration, residual_terms, BetheRoots};
use crate::error::{Error, Result};
use crate::hamiltonians::Model;

/// Convergence target on the scaled residual `|r_j| / (1 + Σ|terms_j|)`.
pub const NEWTON_TOLERANCE: f64 = 1e-12;
/// Accept a stalled iteration when the scaled residual is at this level.
const STALL_ACCEPT: f64 = 1e-11;
pub(crate) const MAX_ITERATIONS: usize = 100;
const MIN_STEP: f64 = 1.0 / 1024.0 / 1024.0;
const SVD_CUTOFF: f64 = 1e-13;
/// The SVD step is only tried close to a solution.
const SVD_REGIME: f64 = 1e-8;

pub(crate) fn jacobian(roots: &BetheRoots) -> DMatrix<Complex64> {
    let v = &roots.roots;
    let len = v.len();
    let gamma = roots.gamma;
    let mut jac = DMatrix::<Complex64>::zeros(len, len);
    match roots.model {
        Model::Am => {
            let q = 2.0 * roots.parity as f64 + 1.0;
            for j in 0..len {
                let mut diag = -q / (2.0 * v[j] * v[j]) - 1.0;
                for k in 0..len {
                    if k != j {
                        let w = 2.0 / ((v[k] - v[j]) * (v[k] - v[j]));
                        diag -= w;
                        jac[(j, k)] = w;
                    }
                }
                jac[(j, j)] = diag;
            }
        }
        Model::Bh => {
            let n = len as f64;
            for k in 0..len {
                let vk = v[k];
                let mut diag = -2.0 * gamma / (vk * vk * vk) - (1.0 - n) / (vk * vk);
                for j in 0..len {
                    if j != k {
                        let w = 2.0 / ((v[j] - vk) * (v[j] - vk));
                        diag -= w;
                        jac[(k, j)] = w;
                    }
                }
                jac[(k, k)] = diag;
            }
        }
    }
    jac
}

fn scaled_norm(roots: &BetheRoots) -> Result<(f64, f64)> {
    let (res, scale) = residual_terms(roots)?;
    let scaled = res
        .iter()
        .zip(&scale)
        .map(|(r, s)| r.norm() / (1.0 + s))
        .fold(0.0, f64::max);
    let l2 = res.iter().map(|r| r.norm_sqr()).sum::<f64>().sqrt();
    Ok((scaled, l2))
}

fn line_search(
    current: &BetheRoots,
    step: &DVector<Complex64>,
    l2: f64,
) -> Option<(BetheRoots, f64, f64, bool)> {
    if step.iter().any(|s| !s.is_finite()) {
        return None;
    }
    let mut t = 1.0;
    while t >= MIN_STEP {
        let mut trial = current.clone();
        for (v, s) in trial.roots.iter_mut().zip(step.iter()) {
            *v += s * t;
        }
        if let Ok((ts, tl)) = scaled_norm(&trial) {
            if tl < l2 {
                return Some((trial, ts, tl, t == 1.0));
            }
        }
        t *= 0.5;
    }
    None
}

/// Newton iteration on the Bethe residual vector. Steps are halved until the
/// residual 2-norm decreases. Near a solution, a truncated-SVD step competes
/// with any damped LU step.
pub fn solve_newton(initial: &BetheRoots) -> Result<BetheRoots> {
    let outcome = newton_core(initial, MAX_ITERATIONS, true)?;
    if !outcome.converged {
        return Err(Error::NewtonFailed {
            iterations: outcome.iterations,
            residual: outcome.scaled_residual,
        });
    }
    let mut roots = outcome.roots;
    roots.sort();
    Ok(roots)
}

pub(crate) struct NewtonOutcome {
    /// Last iterate; the best one seen since the residual never increases.
    pub roots: BetheRoots,
    pub iterations: usize,
    pub scaled_residual: f64,
    pub converged: bool,
}

/// Unsorted Newton solve with an iteration cap. Stops early when ten
/// iterations reduce the residual by less than one percent.
pub(crate) fn newton_core(
    initial: &BetheRoots,
    max_iterations: usize,
    allow_svd: bool,
) -> Result<NewtonOutcome> {
    check_configuration(initial)?;
    let mut current = initial.clone();
    let (mut scaled, mut l2) = if current.roots.is_empty() {
        (0.0, 0.0)
    } else {
        scaled_norm(&current)?
    };
    let mut history = vec![l2];
    let mut iterations = 0;
    while iterations < max_iterations && scaled >= NEWTON_TOLERANCE {
        if history.len() > 10 && l2 > 0.99 * history[history.len() - 11] {
            break;
        }
        iterations += 1;
        let (res, _) = residual_terms(&current)?;
        let rhs = DVector::from_iterator(res.len(), res.iter().map(|r| -r));
        let jac = jacobian(&current);
        let mut accepted = jac
            .clone()
            .lu()
            .solve(&rhs)
            .and_then(|step| line_search(&current, &step, l2));
        let full_step = accepted.as_ref().is_some_and(|a| a.3);
        if allow_svd && !full_step && scaled < SVD_REGIME {
            // near-singular Jacobian: drop directions below the roundoff level
            let svd = jac.svd(true, true);
            let cutoff = svd.singular_values.max() * SVD_CUTOFF;
            if let Some(alt) = svd
                .solve(&rhs, cutoff)
                .ok()
                .and_then(|step| line_search(&current, &step, l2))
            {
                if accepted.as_ref().is_none_or(|a| alt.2 < a.2) {
                    accepted = Some(alt);
                }
            }
        }
        let Some((trial, ts, tl, _)) = accepted else { break };
        current = trial;
        scaled = ts;
        l2 = tl;
        history.push(l2);
    }
    Ok(NewtonOutcome {
        roots: current,
        iterations,
        scaled_residual: scaled,
        converged: scaled < STALL_ACCEPT,
    })
}
