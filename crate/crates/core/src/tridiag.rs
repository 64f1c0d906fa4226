//! Real symmetric tridiagonal eigensolvers.
//!
//! Three routines cover everything the crate needs:
//!
//! * [`SymTridiagonal::eigen`] runs implicit-shift QL on the whole matrix and
//!   optionally accumulates eigenvectors. Used for the small Fock blocks.
//! * [`SymTridiagonal::lowest_eigenvalues`] counts Sturm sign changes and
//!   bisects, which is much cheaper than QL when only a few eigenvalues of a
//!   large finite-difference matrix are wanted.
//! * [`SymTridiagonal::twisted_eigenvector`] rebuilds an eigenvector from an
//!   accurate eigenvalue through a twisted LDLᵀ/UDUᵀ factorization. Tail
//!   components come out with small *relative* error, which matters when the
//!   vector feeds a polynomial whose roots depend on tiny coefficients.

use crate::error::{Error, Result};

/// A real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

/// Eigenvalues in ascending order, optionally with unit-norm eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

const MAX_QL_SWEEPS: usize = 60;

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        let expected = diag.len().saturating_sub(1);
        if offdiag.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: offdiag.len(),
            });
        }
        if diag.iter().chain(&offdiag).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("matrix entries must be finite".into()));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Max-row-sum norm, an upper bound for the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        (0..self.size())
            .map(|i| {
                let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
                let right = self.offdiag.get(i).map_or(0.0, |e| e.abs());
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.size();
        assert_eq!(v.len(), n, "matvec dimension mismatch");
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc += self.offdiag[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    acc += self.offdiag[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }

    /// `v·Hv / v·v`.
    pub fn rayleigh_quotient(&self, v: &[f64]) -> f64 {
        let hv = self.matvec(v);
        let num: f64 = hv.iter().zip(v).map(|(a, b)| a * b).sum();
        let den: f64 = v.iter().map(|x| x * x).sum();
        num / den
    }

    /// Max-norm of `Hv - λv`.
    pub fn residual(&self, lambda: f64, v: &[f64]) -> f64 {
        self.matvec(v)
            .iter()
            .zip(v)
            .map(|(hv, x)| (hv - lambda * x).abs())
            .fold(0.0, f64::max)
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.size();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = self.offdiag.get(i).map_or(0.0, |e| e.abs());
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// All eigenvalues (ascending) by implicit-shift QL. Eigenvectors are
    /// normalised and oriented so that their first nonzero component is
    /// positive.
    pub fn eigen(&self, want_vectors: bool) -> Spectrum {
        let n = self.size();
        if n == 0 {
            return Spectrum {
                eigenvalues: vec![],
                eigenvectors: want_vectors.then(Vec::new),
            };
        }
        let mut d = self.diag.clone();
        let mut e = self.offdiag.clone();
        e.push(0.0);
        // z[col][row]
        let mut z: Option<Vec<Vec<f64>>> = want_vectors.then(|| {
            (0..n)
                .map(|j| {
                    let mut col = vec![0.0; n];
                    col[j] = 1.0;
                    col
                })
                .collect()
        });

        for l in 0..n {
            let mut sweeps = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                sweeps += 1;
                // QL converges cubically on symmetric input; hitting this
                // bound indicates non-finite data, which `new` rejects.
                assert!(sweeps <= MAX_QL_SWEEPS, "QL iteration failed to converge");

                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0_f64, 1.0_f64, 0.0_f64);
                let mut deflated = false;
                let mut i = m;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        deflated = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    if let Some(z) = z.as_mut() {
                        let (lo, hi) = z.split_at_mut(i + 1);
                        let zi = &mut lo[i];
                        let zi1 = &mut hi[0];
                        for k in 0..n {
                            let f = zi1[k];
                            zi1[k] = s * zi[k] + c * f;
                            zi[k] = c * zi[k] - s * f;
                        }
                    }
                }
                if deflated {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let eigenvalues = order.iter().map(|&j| d[j]).collect();
        let eigenvectors = z.map(|z| {
            order
                .iter()
                .map(|&j| {
                    let mut v = z[j].clone();
                    normalize_and_orient(&mut v);
                    v
                })
                .collect()
        });
        Spectrum {
            eigenvalues,
            eigenvectors,
        }
    }

    /// Number of eigenvalues strictly below `lambda` (Sturm count via the
    /// LDLᵀ pivots of `H - λ`).
    pub fn count_below(&self, lambda: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut q = self.diag[0] - lambda;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.size() {
            let e = self.offdiag[i - 1];
            q = self.diag[i] - lambda - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn pivmin(&self) -> f64 {
        let emax = self.offdiag.iter().map(|e| e * e).fold(1.0, f64::max);
        f64::MIN_POSITIVE * emax
    }

    /// The `k` lowest eigenvalues, ascending, by bisection.
    pub fn lowest_eigenvalues(&self, k: usize) -> Vec<f64> {
        let k = k.min(self.size());
        let (glo, ghi) = self.gershgorin();
        let span = (ghi - glo).max(f64::MIN_POSITIVE);
        let mut out: Vec<f64> = Vec::with_capacity(k);
        for j in 0..k {
            let mut lo = out.last().copied().unwrap_or(glo - 1e-3 * span).min(ghi);
            // The previous eigenvalue may coincide; back off by one ulp-ish.
            lo -= 4.0 * f64::EPSILON * lo.abs().max(f64::MIN_POSITIVE);
            let mut hi = ghi + 1e-3 * span;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if hi - lo <= 2.0 * f64::EPSILON * (lo.abs() + hi.abs()) {
                    break;
                }
                if self.count_below(mid) > j {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }

    /// Eigenvector for an (accurate) eigenvalue `lambda` via the twisted
    /// factorization. The twist index minimises |γ_r|, the component where the
    /// vector is largest in the sense of the diagonal of `(H - λ)⁻¹`.
    pub fn twisted_eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.size();
        if n == 1 {
            return vec![1.0];
        }
        let tiny = f64::EPSILON * self.norm_inf().max(f64::MIN_POSITIVE);
        let guard = |x: f64| if x.abs() < tiny { tiny.copysign(x) } else { x };

        let mut dp = vec![0.0; n];
        dp[0] = guard(self.diag[0] - lambda);
        for i in 1..n {
            let e = self.offdiag[i - 1];
            dp[i] = guard(self.diag[i] - lambda - e * e / dp[i - 1]);
        }
        let mut dm = vec![0.0; n];
        dm[n - 1] = guard(self.diag[n - 1] - lambda);
        for i in (0..n - 1).rev() {
            let e = self.offdiag[i];
            dm[i] = guard(self.diag[i] - lambda - e * e / dm[i + 1]);
        }
        let twist = (0..n)
            .min_by(|&a, &b| {
                let ga = (dp[a] + dm[a] - (self.diag[a] - lambda)).abs();
                let gb = (dp[b] + dm[b] - (self.diag[b] - lambda)).abs();
                ga.total_cmp(&gb)
            })
            .unwrap_or(0);

        let mut z = vec![0.0; n];
        z[twist] = 1.0;
        for i in (0..twist).rev() {
            z[i] = -self.offdiag[i] / dp[i] * z[i + 1];
        }
        for i in twist + 1..n {
            z[i] = -self.offdiag[i - 1] / dm[i] * z[i - 1];
        }
        normalize_and_orient(&mut z);
        z
    }
}

/// Scale to unit 2-norm and flip so that the first nonzero entry is positive.
pub fn normalize_and_orient(v: &mut [f64]) {
    let scale = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if scale == 0.0 {
        return;
    }
    let norm = scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt();
    let threshold = 1e-14 * scale;
    let sign = v
        .iter()
        .find(|x| x.abs() > threshold)
        .map_or(1.0, |x| x.signum());
    for x in v.iter_mut() {
        *x *= sign / norm;
    }
}
