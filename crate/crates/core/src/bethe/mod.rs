//! Bethe ansatz equations for both models.
//!
//! AM (`N = 2M + p`):
//! `(2p+1)/(2v_j) - v_j - γ = Σ_{k≠j} 2/(v_k - v_j)`,
//! `E = δ(M + p/2) + Ω Σ v_j`.
//!
//! BH:
//! `[𝓔(1 - v_k²) + k(1 - N)v_k]/(k v_k²) = Σ_{j≠k} 2/(v_j - v_k)`,
//! `E = -kN²/8 + (𝓔/2) Σ v_j`.
//!
//! Roots are produced from Fock eigenvectors (generating polynomial and
//! companion matrix) and then certified by Newton refinement on the
//! equations themselves.

mod continuation;
mod generating;
mod newton;

use num_complex::Complex64;
use rayon::prelude::*;

pub use continuation::continue_roots;
pub use generating::{
    am_coefficients, bh_coefficients, bh_rotated_roots, coefficients, polynomial_roots,
    refine_eigenvector,
};
pub use newton::{solve_newton, NEWTON_TOLERANCE};

use crate::error::{Error, Result};
use crate::hamiltonians::{build_block, Couplings, Model, ModelParams};

/// Acceptance threshold for reconstructed roots (max-abs residual).
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-8;
/// Tolerance on `|Im Σ v_j|`, relative to `1 + Σ|v_j|`.
pub const PAIRING_TOLERANCE: f64 = 1e-10;

/// A configuration of Bethe roots.
#[derive(Debug, Clone, PartialEq)]
pub struct BetheRoots {
    pub model: Model,
    /// `N mod 2` for AM, 0 for BH.
    pub parity: usize,
    pub gamma: f64,
    pub roots: Vec<Complex64>,
}

impl BetheRoots {
    pub fn new(params: &ModelParams, roots: Vec<Complex64>) -> Self {
        Self {
            model: params.model(),
            parity: params.parity(),
            gamma: params.gamma(),
            roots,
        }
    }

    pub fn real(params: &ModelParams, roots: &[f64]) -> Self {
        Self::new(params, roots.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    /// Sort by real part, then imaginary part.
    pub fn sort(&mut self) {
        self.roots
            .sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    }

    pub fn sum(&self) -> Complex64 {
        self.roots.iter().sum()
    }

    /// Whether every non-real root has its conjugate in the set.
    pub fn is_conjugate_closed(&self, tol: f64) -> bool {
        self.roots.iter().all(|z| {
            self.roots
                .iter()
                .any(|w| (w - z.conj()).norm() <= tol * (1.0 + z.norm()))
        })
    }

    /// Roots that are real to relative tolerance `tol` and positive.
    pub fn positive_real_roots(&self, tol: f64) -> Vec<f64> {
        self.roots
            .iter()
            .filter(|z| z.im.abs() < tol * (1.0 + z.norm()) && z.re > 0.0)
            .map(|z| z.re)
            .collect()
    }
}

pub(crate) fn check_configuration(roots: &BetheRoots) -> Result<()> {
    let v = &roots.roots;
    for (j, z) in v.iter().enumerate() {
        if !z.is_finite() {
            return Err(Error::SingularConfiguration(format!("root {j} is not finite")));
        }
        if *z == Complex64::new(0.0, 0.0) {
            return Err(Error::SingularConfiguration(format!("root {j} is zero")));
        }
        for (k, w) in v.iter().enumerate().skip(j + 1) {
            if z == w {
                return Err(Error::SingularConfiguration(format!(
                    "roots {j} and {k} coincide"
                )));
            }
        }
    }
    Ok(())
}

/// Residuals together with the sum of absolute values of their terms.
pub(crate) fn residual_terms(roots: &BetheRoots) -> Result<(Vec<Complex64>, Vec<f64>)> {
    check_configuration(roots)?;
    let v = &roots.roots;
    let gamma = roots.gamma;
    let len = v.len();
    let mut res = Vec::with_capacity(len);
    let mut scale = Vec::with_capacity(len);
    match roots.model {
        Model::Am => {
            let q = 2.0 * roots.parity as f64 + 1.0;
            for j in 0..len {
                let a = q / (2.0 * v[j]);
                let mut r = a - v[j] - gamma;
                let mut s = a.norm() + v[j].norm() + gamma.abs();
                for k in 0..len {
                    if k != j {
                        let t = 2.0 / (v[k] - v[j]);
                        r -= t;
                        s += t.norm();
                    }
                }
                res.push(r);
                scale.push(s);
            }
        }
        Model::Bh => {
            let n = len as f64;
            for k in 0..len {
                let vk = v[k];
                let a = gamma * (1.0 - vk * vk) / (vk * vk);
                let b = (1.0 - n) / vk;
                let mut r = a + b;
                let mut s = gamma.abs() * (1.0 / (vk * vk)).norm() + gamma.abs() + b.norm();
                for j in 0..len {
                    if j != k {
                        let t = 2.0 / (v[j] - vk);
                        r -= t;
                        s += t.norm();
                    }
                }
                res.push(r);
                scale.push(s);
            }
        }
    }
    Ok((res, scale))
}

/// Residuals of the Bethe equations (left side minus right side).
pub fn bae_residual(roots: &BetheRoots) -> Result<Vec<Complex64>> {
    residual_terms(roots).map(|(r, _)| r)
}

/// Max-abs residual.
pub fn max_residual(roots: &BetheRoots) -> Result<f64> {
    Ok(bae_residual(roots)?
        .iter()
        .map(|r| r.norm())
        .fold(0.0, f64::max))
}

/// Energy of a root configuration. The roots are assumed to solve the
/// equations (see [`max_residual`]).
pub fn bethe_energy(params: &ModelParams, roots: &BetheRoots) -> Result<f64> {
    if roots.roots.len() != params.root_count() {
        return Err(Error::DimensionMismatch {
            expected: params.root_count(),
            got: roots.roots.len(),
        });
    }
    if roots.model != params.model() {
        return Err(Error::InvalidParams("root set belongs to a different model".into()));
    }
    let sum = roots.sum();
    let magnitude: f64 = roots.roots.iter().map(|z| z.norm()).sum();
    if sum.im.abs() > PAIRING_TOLERANCE * (1.0 + magnitude) {
        return Err(Error::PairingViolation { imag: sum.im });
    }
    let m = params.root_count() as f64;
    let n = params.n() as f64;
    Ok(match params.couplings() {
        Couplings::Am { delta, omega } => {
            delta * (m + 0.5 * params.parity() as f64) + omega * sum.re
        }
        Couplings::Bh { k, eps } => -k * n * n / 8.0 + 0.5 * eps * sum.re,
    })
}

/// Bethe roots of the eigenstate `state` (Fock basis) via its generating
/// polynomial, certified by Newton refinement against the equations.
///
/// BH states are also tried in a rotated spin frame. When no direct
/// reconstruction converges, the same eigenstate (by energy rank) is
/// reconstructed at a nearby coupling and continued in γ.
pub fn roots_from_eigenvector(params: &ModelParams, state: &[f64]) -> Result<BetheRoots> {
    let (lambda, refined) = refine_eigenvector(params, state)?;
    if params.root_count() == 0 {
        return Ok(BetheRoots::new(params, vec![]));
    }
    let mut best = f64::INFINITY;
    match direct_reconstruction(params, lambda, &refined, &mut best) {
        Some(roots) => return Ok(roots),
        None if params.gamma() == 0.0 => {
            return Err(Error::ReconstructionFailed { residual: best })
        }
        None => {}
    }

    let family = generating::family_of(params, &refined);
    let rank = generating::state_families(params)[family]
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 .0 - lambda).abs().total_cmp(&(b.1 .0 - lambda).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let gamma = params.gamma();
    let mut starts = vec![0.5 * gamma, 2.0 * gamma, 0.25 * gamma, gamma.signum()];
    starts.dedup_by(|a, b| a == b);
    for g in starts {
        let Ok(ps) = params.with_gamma(g) else { continue };
        let families = generating::state_families(&ps);
        let Some((_, state)) = families[family].get(rank) else { continue };
        let Ok((mu, v)) = refine_eigenvector(&ps, state) else { continue };
        let mut ignored = f64::INFINITY;
        let Some(start) = direct_reconstruction(&ps, mu, &v, &mut ignored) else { continue };
        let Ok(mut roots) = continuation::continue_roots(&start, gamma) else { continue };
        roots.sort();
        if accept(params, lambda, &roots, &mut best) {
            return Ok(roots);
        }
    }
    Err(Error::ReconstructionFailed { residual: best })
}

fn accept(params: &ModelParams, lambda: f64, roots: &BetheRoots, best: &mut f64) -> bool {
    let Ok(residual) = max_residual(roots) else { return false };
    *best = best.min(residual);
    let scale = build_block(params).matrix().norm_inf().max(f64::MIN_POSITIVE);
    residual < RECONSTRUCTION_TOLERANCE
        && bethe_energy(params, roots).is_ok_and(|e| (e - lambda).abs() <= 1e-8 * scale)
}

fn direct_reconstruction(
    params: &ModelParams,
    lambda: f64,
    refined: &[f64],
    best: &mut f64,
) -> Option<BetheRoots> {
    let mut candidates = Vec::new();
    if let Ok(r) = polynomial_roots(&coefficients(params, refined)) {
        candidates.push(r);
    }
    if params.model() == Model::Bh {
        if let Ok(r) = bh_rotated_roots(params, lambda) {
            candidates.push(r);
        }
    }
    for roots in candidates {
        let initial = BetheRoots::new(params, roots);
        if let Ok(r) = max_residual(&initial) {
            *best = best.min(r);
        }
        if let Ok(out) = newton::newton_core(&initial, newton::MAX_ITERATIONS, true) {
            let mut solved = out.roots;
            solved.sort();
            if accept(params, lambda, &solved, best) {
                return Some(solved);
            }
        }
    }
    None
}

/// One eigenstate with its certified roots.
#[derive(Debug, Clone)]
pub struct BetheState {
    /// Diagonalization eigenvalue.
    pub eigenvalue: f64,
    pub roots: BetheRoots,
    pub bethe_energy: f64,
    /// Max-abs equation residual.
    pub residual: f64,
}

/// Roots for every eigenstate of the block, in ascending energy order.
///
/// BH sectors interlace exactly (even, odd, even, …): the odd block is the
/// even block with its middle row removed (N even) or plus a positive
/// rank-one term (N odd). Taking that order directly keeps tunnelling
/// doublets ordered when their splitting is below roundoff.
pub fn solve_all(params: &ModelParams) -> Result<Vec<BetheState>> {
    let families = generating::state_families(params);
    let pairs: Vec<(f64, Vec<f64>)> = match <[_; 2]>::try_from(families) {
        Ok([even, odd]) => {
            let mut merged = Vec::with_capacity(even.len() + odd.len());
            let mut odd = odd.into_iter();
            for e in even {
                merged.push(e);
                merged.extend(odd.next());
            }
            merged
        }
        Err(families) => {
            let mut pairs: Vec<_> = families.into_iter().flatten().collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            pairs
        }
    };
    pairs
        .par_iter()
        .map(|(eigenvalue, v)| {
            let roots = roots_from_eigenvector(params, v)?;
            let bethe_energy = bethe_energy(params, &roots)?;
            let residual = max_residual(&roots)?;
            Ok(BetheState {
                eigenvalue: *eigenvalue,
                roots,
                bethe_energy,
                residual,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn quadratic_am_roots_have_zero_residual() {
        let p = ModelParams::am(2, 0.0, 1.0).unwrap();
        for v in [S, -S] {
            let r = bae_residual(&BetheRoots::real(&p, &[v])).unwrap();
            assert!(r[0].norm() < 1e-15);
        }
    }

    #[test]
    fn bh_single_root() {
        for (k, eps) in [(1.0, 1.0), (2.0, 0.3), (0.5, 7.0)] {
            let p = ModelParams::bh(1, k, eps).unwrap();
            let r = bae_residual(&BetheRoots::real(&p, &[-1.0])).unwrap();
            assert!(r[0].norm() < 1e-15);
        }
    }

    #[test]
    fn singular_configurations() {
        let p = ModelParams::am(4, 1.0, 1.0).unwrap();
        assert!(matches!(
            bae_residual(&BetheRoots::real(&p, &[0.5, 0.5])),
            Err(Error::SingularConfiguration(_))
        ));
        assert!(matches!(
            bae_residual(&BetheRoots::real(&p, &[0.0, 0.5])),
            Err(Error::SingularConfiguration(_))
        ));
        assert!(matches!(
            solve_newton(&BetheRoots::real(&p, &[-1.0, -1.0])),
            Err(Error::SingularConfiguration(_))
        ));
    }

    #[test]
    fn energies_from_roots() {
        let p = ModelParams::am(2, 0.0, 1.0).unwrap();
        let e = bethe_energy(&p, &BetheRoots::real(&p, &[-S])).unwrap();
        assert!((e + S).abs() < 1e-15);

        let p = ModelParams::bh(1, 1.0, 1.0).unwrap();
        let e = bethe_energy(&p, &BetheRoots::real(&p, &[-1.0])).unwrap();
        assert!((e + 0.625).abs() < 1e-15);

        let p = ModelParams::am(1, 2.0, 1.0).unwrap();
        let e = bethe_energy(&p, &BetheRoots::new(&p, vec![])).unwrap();
        assert_eq!(e, 1.0);
    }

    #[test]
    fn unpaired_roots_are_rejected() {
        let p = ModelParams::am(4, 0.0, 1.0).unwrap();
        let roots = BetheRoots::new(&p, vec![Complex64::new(-1.0, 0.5), Complex64::new(1.0, 0.5)]);
        assert!(matches!(bethe_energy(&p, &roots), Err(Error::PairingViolation { .. })));
        assert!(!roots.is_conjugate_closed(1e-9));
    }

    #[test]
    fn newton_finds_both_quadratic_roots() {
        let p = ModelParams::am(2, 1.0, 1.0).unwrap();
        let sqrt3 = 3.0_f64.sqrt();
        let a = solve_newton(&BetheRoots::real(&p, &[-1.5])).unwrap();
        assert!((a.roots[0].re - (-1.0 - sqrt3) / 2.0).abs() < 1e-12);
        let b = solve_newton(&BetheRoots::real(&p, &[0.3])).unwrap();
        assert!((b.roots[0].re - (-1.0 + sqrt3) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruct_small_states() {
        let p = ModelParams::bh(1, 1.0, 1.0).unwrap();
        let r = roots_from_eigenvector(&p, &[S, S]).unwrap();
        assert!((r.roots[0] - c(-1.0)).norm() < 1e-12);

        let p = ModelParams::am(2, 0.0, 1.0).unwrap();
        let r = roots_from_eigenvector(&p, &[S, -S]).unwrap();
        assert!((r.roots[0] - c(-S)).norm() < 1e-12);

        assert!(roots_from_eigenvector(&p, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn degenerate_doublets_alternate_parity() {
        // splitting far below roundoff at this coupling
        let p = ModelParams::from_gamma(Model::Bh, 16, 0.2).unwrap();
        let states = solve_all(&p).unwrap();
        for (i, s) in states.iter().enumerate() {
            // odd states carry the roots ±1
            let odd = s.roots.roots.iter().any(|v| (v - c(1.0)).norm() < 1e-6);
            assert_eq!(odd, i % 2 == 1, "state {i}");
        }
        for w in states.windows(2) {
            assert!(w[1].eigenvalue >= w[0].eigenvalue - 1e-12 * w[0].eigenvalue.abs());
        }
    }

    #[test]
    fn spectrum_round_trip_small_systems() {
        for (model, n, gamma) in [
            (Model::Am, 7, 0.2),
            (Model::Am, 12, 3.0),
            (Model::Am, 9, -2.0),
            (Model::Bh, 6, 0.5),
            (Model::Bh, 9, 4.0),
        ] {
            let p = ModelParams::from_gamma(model, n, gamma).unwrap();
            let states = solve_all(&p).unwrap();
            assert_eq!(states.len(), p.dimension());
            for s in &states {
                let scale = s.eigenvalue.abs().max(1.0);
                assert!(
                    (s.bethe_energy - s.eigenvalue).abs() < 1e-9 * scale,
                    "{model} N={n} γ={gamma}: {} vs {}",
                    s.bethe_energy,
                    s.eigenvalue
                );
                assert!(s.residual < RECONSTRUCTION_TOLERANCE);
                assert!(s.roots.is_conjugate_closed(1e-8));
            }
        }
    }
}
