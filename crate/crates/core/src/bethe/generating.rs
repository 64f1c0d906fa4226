//! Generating polynomials: Fock amplitudes → polynomial coefficients → roots.
//!
//! BH: the differential realisation of su(2) sends the Fock state with
//! `n₁ = m` to `√C(N,m) · uᵐ`, so an eigenvector `f` becomes
//! `Q(u) = Σ f_m √C(N,m) uᵐ`.
//!
//! AM: with `y = x²/4` and `P(y) = Π(y - v_j)`, the Bethe equations are
//! equivalent to
//!
//! ```text
//! 2y P'' + [(2p+1) - 2γy - 2y²] P' + (2My + b) P = 0,   b = 2γM + 2Σv_j,
//! ```
//!
//! and `H ≅ -(Ω/2) L + δp/2` on polynomials of degree ≤ M. Matching the
//! off-diagonal elements of this operator with the Fock block (basis index
//! `n = M - m`, the number of atom pairs) gives the diagonal similarity
//! `c_n = s_n f_n` with `s_0 = 1`,
//! `s_n = -2 s_{n-1} √((M-n+1) / ((2n+p)(2n+p-1)))`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonians::{build_block, Model, ModelParams};
use crate::tridiag::SymTridiagonal;

/// Polynomial coefficients (ascending powers) of `P(y)` for an AM state
/// given in the Fock basis ordered by molecule number `m`.
pub fn am_coefficients(params: &ModelParams, state: &[f64]) -> Vec<f64> {
    let m_max = params.root_count();
    let p = params.parity() as f64;
    let mut out = Vec::with_capacity(m_max + 1);
    let mut s = 1.0_f64;
    for pairs in 0..=m_max {
        if pairs > 0 {
            let atoms = 2.0 * pairs as f64 + p;
            s *= -2.0 * (((m_max - pairs + 1) as f64) / (atoms * (atoms - 1.0))).sqrt();
        }
        out.push(s * state[m_max - pairs]);
    }
    out
}

/// Polynomial coefficients (ascending powers) of `Q(u)` for a BH state.
pub fn bh_coefficients(n: usize, state: &[f64]) -> Vec<f64> {
    let mut weight = 1.0_f64;
    state
        .iter()
        .enumerate()
        .map(|(m, f)| {
            if m > 0 {
                weight *= (((n - m + 1) as f64) / m as f64).sqrt();
            }
            f * weight
        })
        .collect()
}

pub fn coefficients(params: &ModelParams, state: &[f64]) -> Vec<f64> {
    match params.model() {
        Model::Am => am_coefficients(params, state),
        Model::Bh => bh_coefficients(params.n(), state),
    }
}

/// BH block restricted to states even (`sign = +1`) or odd (`-1`) under
/// `m ↔ N - m`. Basis: `(|m⟩ ± |N-m⟩)/√2` for `m < N/2`, plus `|N/2⟩` in the
/// even sector when `N` is even.
fn bh_parity_sector(full: &SymTridiagonal, n: usize, sign: f64) -> SymTridiagonal {
    let d = full.diag();
    let e = full.offdiag();
    let half = n / 2;
    if n.is_multiple_of(2) {
        if sign > 0.0 {
            let diag = d[..=half].to_vec();
            let mut off = e[..half].to_vec();
            if let Some(last) = off.last_mut() {
                *last *= std::f64::consts::SQRT_2;
            }
            SymTridiagonal::new(diag, off).expect("sub-block of a valid block")
        } else {
            let diag = d[..half].to_vec();
            let off = e[..half.saturating_sub(1)].to_vec();
            SymTridiagonal::new(diag, off).expect("sub-block of a valid block")
        }
    } else {
        let mut diag = d[..=half].to_vec();
        diag[half] += sign * e[half];
        let off = e[..half].to_vec();
        SymTridiagonal::new(diag, off).expect("sub-block of a valid block")
    }
}

fn bh_expand_sector(sector: &[f64], n: usize, sign: f64) -> Vec<f64> {
    let mut full = vec![0.0; n + 1];
    let half = n / 2;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for (m, g) in sector.iter().enumerate() {
        if n.is_multiple_of(2) && m == half {
            full[m] = *g;
        } else {
            full[m] = g * r;
            full[n - m] = sign * g * r;
        }
    }
    full
}

/// Eigenpairs grouped into families whose spectra are simple and keep their
/// order under changes of γ: the whole block for AM, the even and odd
/// sectors under `m ↔ N - m` for BH. Vectors are in the full Fock basis.
pub(crate) fn state_families(params: &ModelParams) -> Vec<Vec<(f64, Vec<f64>)>> {
    let block = build_block(params);
    let pairs = |m: &SymTridiagonal| {
        let spec = m.eigen(true);
        spec.eigenvalues
            .into_iter()
            .zip(spec.eigenvectors.unwrap_or_default())
            .collect::<Vec<_>>()
    };
    match params.model() {
        Model::Am => vec![pairs(block.matrix())],
        Model::Bh if params.n() == 0 => vec![pairs(block.matrix())],
        Model::Bh => {
            let n = params.n();
            [1.0, -1.0]
                .into_iter()
                .map(|sign| {
                    pairs(&bh_parity_sector(block.matrix(), n, sign))
                        .into_iter()
                        .map(|(e, g)| (e, bh_expand_sector(&g, n, sign)))
                        .collect()
                })
                .collect()
        }
    }
}

/// Family index of a state (see [`state_families`]).
pub(crate) fn family_of(params: &ModelParams, state: &[f64]) -> usize {
    match params.model() {
        Model::Am => 0,
        Model::Bh => {
            let n = params.n();
            let overlap: f64 = (0..=n).map(|m| state[m] * state[n - m]).sum();
            usize::from(n > 0 && overlap < 0.0)
        }
    }
}

/// Re-derive an eigenvector with high relative accuracy in its small
/// components. Returns the refined eigenvalue and vector.
pub fn refine_eigenvector(params: &ModelParams, state: &[f64]) -> Result<(f64, Vec<f64>)> {
    let block = build_block(params);
    let dim = block.size();
    if state.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: state.len(),
        });
    }
    let norm2: f64 = state.iter().map(|f| f * f).sum();
    if !(norm2 > 0.0) || !norm2.is_finite() {
        return Err(Error::InvalidState("eigenvector must be nonzero and finite".into()));
    }
    let matrix = block.matrix();
    let rel_residual = matrix.residual(matrix.rayleigh_quotient(state), state) / norm2.sqrt();
    if rel_residual > 1e-6 * matrix.norm_inf().max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidState(format!(
            "vector is not an eigenvector (residual {rel_residual:e})"
        )));
    }

    match params.model() {
        Model::Am => {
            let mut lambda = matrix.rayleigh_quotient(state);
            let mut v = matrix.twisted_eigenvector(lambda);
            for _ in 0..2 {
                lambda = matrix.rayleigh_quotient(&v);
                v = matrix.twisted_eigenvector(lambda);
            }
            Ok((lambda, v))
        }
        Model::Bh => {
            let n = params.n();
            let overlap: f64 = (0..=n).map(|m| state[m] * state[n - m]).sum();
            let sign = if overlap >= 0.0 { 1.0 } else { -1.0 };
            if n == 0 {
                return Ok((matrix.diag()[0], vec![1.0]));
            }
            let sector = bh_parity_sector(matrix, n, sign);
            if sector.size() == 0 {
                return Err(Error::InvalidState("empty parity sector".into()));
            }
            let mut lambda = matrix.rayleigh_quotient(state);
            let mut g = sector.twisted_eigenvector(lambda);
            for _ in 0..2 {
                lambda = sector.rayleigh_quotient(&g);
                g = sector.twisted_eigenvector(lambda);
            }
            Ok((lambda, bh_expand_sector(&g, n, sign)))
        }
    }
}

/// Initial BH roots from the frame rotated by `exp(-iπ S_y/2)`, where
/// `H' = -(k/2)(S^x)² + 𝓔 S^z` splits into even-`m` and odd-`m` tridiagonal
/// blocks. The rotated polynomial `Q'(t) = Σ f'_m √C(N,m) tᵐ` has roots
/// `t_j` related to the original ones by `u = (1 + t)/(1 - t)`; a degree
/// deficit of `Q'` corresponds to roots at `u = -1`. Root clusters near
/// `u = ±1`, which make the monomial representation ill-conditioned, are
/// moved to `t = 0` and `t = ∞`.
pub fn bh_rotated_roots(params: &ModelParams, lambda: f64) -> Result<Vec<Complex64>> {
    let (k, eps) = match params.couplings() {
        crate::hamiltonians::Couplings::Bh { k, eps } => (k, eps),
        _ => return Err(Error::InvalidParams("rotated frame exists only for BH".into())),
    };
    let n = params.n();
    let j = n as f64 / 2.0;
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for q in 0..=1usize.min(n) {
        let ms: Vec<usize> = (q..=n).step_by(2).collect();
        let diag: Vec<f64> = ms
            .iter()
            .map(|&m| {
                let mz = m as f64 - j;
                -0.25 * k * (j * (j + 1.0) - mz * mz) + eps * mz
            })
            .collect();
        let off: Vec<f64> = ms[..ms.len() - 1]
            .iter()
            .map(|&m| {
                let (a, b) = ((n - m) as f64, m as f64);
                -0.125 * k * (a * (b + 1.0) * (a - 1.0) * (b + 2.0)).sqrt()
            })
            .collect();
        let block = SymTridiagonal::new(diag, off)?;
        let mut mu = lambda;
        let mut g = block.twisted_eigenvector(mu);
        for _ in 0..2 {
            mu = block.rayleigh_quotient(&g);
            g = block.twisted_eigenvector(mu);
        }
        let res = block.residual(lambda, &g);
        if best.as_ref().is_none_or(|(r, _, _)| res < *r) {
            best = Some((res, q, g));
        }
    }
    let (_, q, g) = best.ok_or_else(|| Error::InvalidState("empty system".into()))?;

    // R(s) with Q'(t) = t^q R(t²); weights √C(N, q + 2i)
    let mut weight = 1.0_f64;
    let mut coeffs = Vec::with_capacity(g.len());
    let mut next = 0usize;
    for m in 0..=n {
        if m > 0 {
            weight *= (((n - m + 1) as f64) / m as f64).sqrt();
        }
        if m == q + 2 * next && next < g.len() {
            coeffs.push(g[next] * weight);
            next += 1;
        }
    }
    let mut ts: Vec<Complex64> = Vec::with_capacity(n);
    for s in polynomial_roots(&coeffs)? {
        let t = s.sqrt();
        ts.push(t);
        ts.push(-t);
    }
    if q == 1 {
        ts.push(Complex64::new(0.0, 0.0));
    }
    let mut roots: Vec<Complex64> = ts
        .iter()
        .map(|t| (1.0 + t) / (1.0 - t))
        .collect();
    roots.resize(n, Complex64::new(-1.0, 0.0));
    Ok(roots)
}

/// Roots of `Σ c_j t^j` from the eigenvalues of the balanced companion
/// matrix. The variable is first rescaled so the constant and leading
/// coefficients have equal magnitude.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return Ok(vec![]);
    }
    let lead = coeffs[degree];
    let constant = coeffs[0];
    if lead == 0.0 || !lead.is_finite() {
        return Err(Error::SingularConfiguration(
            "leading coefficient vanishes (root at infinity)".into(),
        ));
    }
    if constant == 0.0 {
        return Err(Error::SingularConfiguration("root at zero".into()));
    }
    let scale = (constant.abs().ln() - lead.abs().ln()) / degree as f64;
    let sigma = scale.exp();
    // monic, rescaled: b_j = c_j σ^j / (c_d σ^d)
    let monic: Vec<f64> = (0..degree)
        .map(|j| {
            let log_ratio = (j as f64 - degree as f64) * scale;
            coeffs[j] / lead * log_ratio.exp()
        })
        .collect();
    if degree == 1 {
        return Ok(vec![Complex64::new(-monic[0] * sigma, 0.0)]);
    }
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for j in 0..degree {
        companion[(0, j)] = -monic[degree - 1 - j];
    }
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    nalgebra::linalg::balancing::balance_parlett_reinsch(&mut companion);
    let schur = nalgebra::linalg::Schur::try_new(companion, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Inconsistent("companion Schur iteration did not converge".into()))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|t| t * sigma)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::eigs;

    #[test]
    fn roots_of_known_polynomials() {
        // (t - 1)(t + 2)(t - 3) = t³ - 2t² - 5t + 6
        let mut r = polynomial_roots(&[6.0, -5.0, -2.0, 1.0]).unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (x, want) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((x.re - want).abs() < 1e-12 && x.im.abs() < 1e-12);
        }
        // t² + 1
        let r = polynomial_roots(&[1.0, 0.0, 1.0]).unwrap();
        assert!(r.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14 && z.re.abs() < 1e-14));
        // widely separated magnitudes: (t - 1e-4)(t - 1e4)
        let r = polynomial_roots(&[1.0, -(1e4 + 1e-4), 1.0]).unwrap();
        let mut mags: Vec<f64> = r.iter().map(|z| z.re).collect();
        mags.sort_by(f64::total_cmp);
        assert!((mags[0] / 1e-4 - 1.0).abs() < 1e-10);
        assert!((mags[1] / 1e4 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_polynomials_are_rejected() {
        assert!(polynomial_roots(&[1.0, 2.0, 0.0]).is_err());
        assert!(polynomial_roots(&[0.0, 2.0, 1.0]).is_err());
        assert!(polynomial_roots(&[3.0]).unwrap().is_empty());
    }

    #[test]
    fn bh_weights_are_binomial() {
        let c = bh_coefficients(4, &[1.0; 5]);
        let want = [1.0, 2.0, 6.0_f64.sqrt(), 2.0, 1.0];
        for (a, b) in c.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn parity_sectors_reproduce_full_spectrum() {
        for n in [1usize, 2, 5, 8] {
            let p = ModelParams::bh(n, 1.0, 0.9).unwrap();
            let block = build_block(&p);
            let full = eigs(&block, false).eigenvalues;
            let mut parts = bh_parity_sector(block.matrix(), n, 1.0).eigen(false).eigenvalues;
            parts.extend(bh_parity_sector(block.matrix(), n, -1.0).eigen(false).eigenvalues);
            parts.sort_by(f64::total_cmp);
            assert_eq!(parts.len(), full.len());
            for (a, b) in parts.iter().zip(&full) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn refined_vector_matches_input() {
        let p = ModelParams::bh(6, 1.0, 2.0).unwrap();
        let spec = eigs(&build_block(&p), true);
        for (lam, v) in spec.eigenvalues.iter().zip(spec.eigenvectors.unwrap()) {
            let (mu, w) = refine_eigenvector(&p, &v).unwrap();
            assert!((mu - lam).abs() < 1e-12);
            let dot: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rotated_frame_gives_same_roots() {
        for n in [4usize, 7] {
            let p = ModelParams::bh(n, 1.0, 2.5).unwrap();
            let spec = eigs(&build_block(&p), true);
            for (lam, v) in spec.eigenvalues.iter().zip(spec.eigenvectors.unwrap()) {
                let (_, w) = refine_eigenvector(&p, &v).unwrap();
                let mut a = polynomial_roots(&bh_coefficients(n, &w)).unwrap();
                let mut b = bh_rotated_roots(&p, *lam).unwrap();
                let key = |z: &Complex64, w: &Complex64| z.re.total_cmp(&w.re).then(z.im.total_cmp(&w.im));
                a.sort_by(key);
                b.sort_by(key);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).norm() < 1e-8, "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn refine_rejects_non_eigenvectors() {
        let p = ModelParams::am(6, 1.0, 1.0).unwrap();
        assert!(refine_eigenvector(&p, &[0.0; 4]).is_err());
        assert!(refine_eigenvector(&p, &[1.0, 1.0, 0.0, 0.0]).is_err());
        assert!(refine_eigenvector(&p, &[1.0, 0.0]).is_err());
    }
}
