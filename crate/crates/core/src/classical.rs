//! Classical (potential-minimum) picture of the crossover.
//!
//! `Ẽ₀(γ) = min_x V(x; γ)`. A crossover of order `m` is the lowest
//! derivative of `Ẽ₀` that jumps. For both models the minimum bifurcates
//! from `x = 0` at `γ_c`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonians::{Model, ModelParams};
use crate::qes::{potential_value, PotentialSpec};

/// Agreement required between closed-form and numeric minima.
pub const MINIMA_TOLERANCE: f64 = 1e-10;
/// Agreement required between closed-form and detected `γ_c`.
pub const CROSSOVER_TOLERANCE: f64 = 1e-6;
/// Bisection width for the bifurcation point.
pub const BISECTION_WIDTH: f64 = 1e-9;
/// Spacing of the one-sided derivative stencils.
pub const STENCIL_SPACING: f64 = 1e-4;
/// Offset of the stencils from the bifurcation point.
const STENCIL_OFFSET: f64 = 1e-7;
/// Distance of the smooth reference points used for the noise floor.
const REFERENCE_OFFSET: f64 = 1e-2;
/// A jump must exceed the noise floor by this factor.
pub const JUMP_FACTOR: f64 = 10.0;
pub const MAX_ORDER: usize = 4;
const CURVATURE_STEP: f64 = 1e-3;
const SCAN_POINTS: usize = 4000;

/// A one-parameter family of even potentials `V(x; γ)`.
pub trait PotentialFamily: Sync {
    fn potential(&self, gamma: f64, x: f64) -> f64;

    /// `∂V/∂γ` at fixed `x`.
    fn d_gamma(&self, gamma: f64, x: f64) -> f64 {
        let h = 1e-6 * (1.0 + gamma.abs());
        (self.potential(gamma + h, x) - self.potential(gamma - h, x)) / (2.0 * h)
    }

    /// Radius beyond which no global minimum lies.
    fn search_radius(&self, _gamma: f64) -> f64 {
        10.0
    }

    fn minima(&self, gamma: f64) -> Result<Minima> {
        let (x, value) = numeric_global_minimum(|x| self.potential(gamma, x), self.search_radius(gamma));
        Ok(Minima::symmetric(x, value))
    }
}

/// Global minima of an even potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minima {
    /// `[0]` or `[-x0, x0]`.
    pub x0: Vec<f64>,
    pub e_tilde0: f64,
}

impl Minima {
    fn symmetric(x: f64, value: f64) -> Self {
        let x = x.abs();
        let x0 = if x == 0.0 { vec![0.0] } else { vec![-x, x] };
        Self { x0, e_tilde0: value }
    }

    /// `|x0|`.
    pub fn position(&self) -> f64 {
        self.x0.last().copied().unwrap_or(0.0).abs()
    }
}

/// Grid scan on `[0, radius]` followed by golden-section refinement.
pub fn numeric_global_minimum(f: impl Fn(f64) -> f64, radius: f64) -> (f64, f64) {
    let h = radius / SCAN_POINTS as f64;
    let (best, _) = (0..=SCAN_POINTS)
        .map(|i| (i, f(i as f64 * h)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let lo = (best as f64 - 1.0).max(0.0) * h;
    let hi = (best as f64 + 1.0) * h;
    let x = golden_section(&f, lo, hi);
    // the origin is a candidate in its own right
    let (v0, vx) = (f(0.0), f(x));
    if v0 <= vx {
        (0.0, v0)
    } else {
        (x, vx)
    }
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// The AM sextic or BH double-Morse family at fixed `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelFamily {
    pub model: Model,
    pub n: usize,
}

impl ModelFamily {
    pub fn new(model: Model, n: usize) -> Self {
        Self { model, n }
    }

    pub fn spec(&self, gamma: f64) -> PotentialSpec {
        PotentialSpec {
            model: self.model,
            gamma,
            n: self.n,
            chi: 1.0,
        }
    }

    /// Closed-form minima; `x0 = 0` exactly at `γ_c`.
    pub fn closed_form_minima(&self, gamma: f64) -> Result<Minima> {
        let n = self.n as f64;
        let spec = self.spec(gamma);
        let v = |x: f64| potential_value(&spec, x);
        match self.model {
            Model::Am => {
                let single = gamma > 0.0 && gamma * gamma >= 2.0 * n + 3.0;
                let u = (4.0 / 3.0) * (gamma * gamma + 9.0 + 6.0 * n).sqrt() - 8.0 * gamma / 3.0;
                if single || u <= 0.0 {
                    return Ok(Minima::symmetric(0.0, v(0.0)));
                }
                let x = u.sqrt();
                Ok(if v(x) < v(0.0) {
                    Minima::symmetric(x, v(x))
                } else {
                    Minima::symmetric(0.0, v(0.0))
                })
            }
            Model::Bh => {
                if !(gamma > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "double-Morse minima need gamma > 0, got {gamma}"
                    )));
                }
                if 2.0 * gamma >= n + 1.0 {
                    Ok(Minima::symmetric(0.0, v(0.0)))
                } else {
                    let x = ((n + 1.0) / (2.0 * gamma)).acosh();
                    // V(x0) = -(N+1)²/4 - γ², exact on the broken branch
                    Ok(Minima::symmetric(x, -(n + 1.0).powi(2) / 4.0 - gamma * gamma))
                }
            }
        }
    }

    pub fn closed_form_crossover(&self) -> f64 {
        closed_form_crossover(self.model, self.n)
    }
}

impl PotentialFamily for ModelFamily {
    fn potential(&self, gamma: f64, x: f64) -> f64 {
        potential_value(&self.spec(gamma), x)
    }

    fn d_gamma(&self, gamma: f64, x: f64) -> f64 {
        let n = self.n as f64;
        match self.model {
            Model::Am => {
                let x2 = x * x;
                -0.25 + gamma * x2 / 8.0 + x2 * x2 / 32.0
            }
            Model::Bh => 2.0 * gamma * x.sinh().powi(2) - (n + 1.0) * x.cosh(),
        }
    }

    fn search_radius(&self, gamma: f64) -> f64 {
        let n = self.n as f64;
        match self.model {
            Model::Am => {
                let u = (4.0 / 3.0) * (gamma * gamma + 9.0 + 6.0 * n).sqrt() + 8.0 * gamma.abs() / 3.0;
                2.0 * u.sqrt() + 2.0
            }
            Model::Bh => ((n + 1.0) / (2.0 * gamma.max(1e-12))).max(1.0).acosh() * 2.0 + 2.0,
        }
    }

    /// Closed form, cross-checked against a numeric minimisation.
    fn minima(&self, gamma: f64) -> Result<Minima> {
        let closed = self.closed_form_minima(gamma)?;
        let (_, numeric) = numeric_global_minimum(|x| self.potential(gamma, x), self.search_radius(gamma));
        let tol = MINIMA_TOLERANCE * (1.0 + closed.e_tilde0.abs());
        if (numeric - closed.e_tilde0).abs() > tol {
            return Err(Error::Inconsistent(format!(
                "closed-form minimum {} vs numeric {numeric} at gamma = {gamma}",
                closed.e_tilde0
            )));
        }
        Ok(closed)
    }
}

/// Global minima of one potential (closed form with numeric cross-check).
pub fn global_minima(spec: &PotentialSpec) -> Result<Minima> {
    ModelFamily::new(spec.model, spec.n).minima(spec.gamma)
}

/// `√(2N+3)` (AM) or `(N+1)/2` (BH).
pub fn closed_form_crossover(model: Model, n: usize) -> f64 {
    match model {
        Model::Am => ((2 * n + 3) as f64).sqrt(),
        Model::Bh => (n as f64 + 1.0) / 2.0,
    }
}

/// `V''(0)` by the fourth-order central stencil.
fn curvature_at_origin<F: PotentialFamily + ?Sized>(family: &F, gamma: f64) -> f64 {
    let h = CURVATURE_STEP;
    let v = |x: f64| family.potential(gamma, x);
    (-v(2.0 * h) + 16.0 * v(h) - 30.0 * v(0.0) + 16.0 * v(-h) - v(-2.0 * h)) / (12.0 * h * h)
}

/// True when the global minimum has left the origin: `V''(0) < 0`, or the
/// origin is not the lowest point on a scan.
pub fn is_bifurcated<F: PotentialFamily + ?Sized>(family: &F, gamma: f64) -> bool {
    if curvature_at_origin(family, gamma) < 0.0 {
        return true;
    }
    let v0 = family.potential(gamma, 0.0);
    let r = family.search_radius(gamma);
    let h = r / SCAN_POINTS as f64;
    (1..=SCAN_POINTS).any(|i| family.potential(gamma, i as f64 * h) < v0 - 1e-12 * (1.0 + v0.abs()))
}

/// Bisect the bifurcation predicate on `[lo, hi]` (bifurcated at `lo`,
/// single-well at `hi`).
pub fn bisect_bifurcation<F: PotentialFamily + ?Sized>(family: &F, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if is_bifurcated(family, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossoverCoupling {
    pub closed_form: f64,
    pub numeric: f64,
    pub agree: bool,
}

/// Closed-form `γ_c` and the bifurcation point found numerically (bracket by
/// doubling from γ = 1, then bisection).
pub fn crossover_coupling(model: Model, n: usize) -> Result<CrossoverCoupling> {
    let family = ModelFamily::new(model, n);
    let mut lo = 1e-3;
    let mut hi = 1.0;
    if !is_bifurcated(&family, lo) {
        return Err(Error::NoCrossover);
    }
    while is_bifurcated(&family, hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::NoCrossover);
        }
    }
    let numeric = bisect_bifurcation(&family, lo, hi);
    let closed_form = closed_form_crossover(model, n);
    Ok(CrossoverCoupling {
        closed_form,
        numeric,
        agree: (numeric - closed_form).abs() <= CROSSOVER_TOLERANCE,
    })
}

/// Forward stencils on offsets `0, h, …, 4h` for derivative orders 1–4;
/// the derivative is taken at offset 0.
const FORWARD: [[f64; 5]; 4] = [
    [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25],
    [35.0 / 12.0, -26.0 / 3.0, 19.0 / 2.0, -14.0 / 3.0, 11.0 / 12.0],
    [-2.5, 9.0, -12.0, 7.0, -1.5],
    [1.0, -4.0, 6.0, -4.0, 1.0],
];

/// One-sided `m`-th derivative of `f` at `x`, from the right (`side = 1`)
/// or the left (`side = -1`).
fn one_sided(f: &impl Fn(f64) -> f64, x: f64, m: usize, side: f64) -> f64 {
    let h = STENCIL_SPACING;
    let w = &FORWARD[m - 1];
    let sum: f64 = (0..5).map(|i| w[i] * f(x + side * i as f64 * h)).sum();
    // odd orders change sign under reflection
    let sign = if m % 2 == 1 { side } else { 1.0 };
    sign * sum / h.powi(m as i32)
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderProbe {
    pub order: usize,
    pub left: f64,
    pub right: f64,
    pub jump: f64,
    pub noise_floor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub gamma: f64,
    pub e_tilde0: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossoverReport {
    pub gamma_c: f64,
    pub order: usize,
    pub probes: Vec<OrderProbe>,
    pub beta: Option<ExponentFit>,
    pub e_tilde_curve: Vec<CurvePoint>,
}

/// Order of the crossover in a window of γ. The grid must be ascending with
/// spacing at most 1e-3 and contain the bifurcation.
pub fn classify_order<F: PotentialFamily + ?Sized>(family: &F, grid: &[f64]) -> Result<CrossoverReport> {
    if grid.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: grid.len(),
        });
    }
    if grid.windows(2).any(|w| !(w[1] > w[0]) || w[1] - w[0] > 1e-3 * (1.0 + 1e-9)) {
        return Err(Error::InvalidParams(
            "gamma grid must be ascending with spacing <= 1e-3".into(),
        ));
    }
    let flags: Vec<bool> = grid.par_iter().map(|&g| is_bifurcated(family, g)).collect();
    let Some(i) = flags.windows(2).position(|w| w[0] && !w[1]) else {
        return Err(Error::NoCrossover);
    };
    let gamma_c = bisect_bifurcation(family, grid[i], grid[i + 1]);

    let e = |g: f64| family.minima(g).map(|m| m.e_tilde0);
    // Ẽ₀ is needed as a plain function; errors are surfaced up front.
    e(gamma_c)?;
    let f = |g: f64| e(g).unwrap_or(f64::NAN);
    let scale = [gamma_c - REFERENCE_OFFSET, gamma_c, gamma_c + REFERENCE_OFFSET]
        .iter()
        .map(|&g| f(g).abs())
        .fold(1.0, f64::max);

    let mut probes = Vec::new();
    let mut order = None;
    for m in 1..=MAX_ORDER {
        let left = one_sided(&f, gamma_c - STENCIL_OFFSET, m, -1.0);
        let right = one_sided(&f, gamma_c + STENCIL_OFFSET, m, 1.0);
        let jump = (right - left).abs();
        let noise = [gamma_c - REFERENCE_OFFSET, gamma_c + REFERENCE_OFFSET]
            .iter()
            .map(|&r| {
                (one_sided(&f, r + STENCIL_OFFSET, m, 1.0) - one_sided(&f, r - STENCIL_OFFSET, m, -1.0)).abs()
            })
            .fold(0.0, f64::max);
        let roundoff = 1e3 * f64::EPSILON * scale / STENCIL_SPACING.powi(m as i32);
        let noise_floor = noise.max(roundoff);
        if !jump.is_finite() || !noise_floor.is_finite() {
            return Err(Error::Inconsistent("non-finite derivative estimate".into()));
        }
        probes.push(OrderProbe {
            order: m,
            left,
            right,
            jump,
            noise_floor,
        });
        if jump > JUMP_FACTOR * noise_floor {
            order = Some(m);
            break;
        }
    }
    let order = order.ok_or(Error::NoCrossover)?;

    let values: Vec<f64> = grid.par_iter().map(|&g| f(g)).collect();
    let e_tilde_curve = curve(grid, &values);
    let beta = exponent_fit(
        family,
        gamma_c,
        (gamma_c - 1e-2, gamma_c - 1e-4),
        DEFAULT_EXPONENT_SAMPLES,
    )
    .ok();
    Ok(CrossoverReport {
        gamma_c,
        order,
        probes,
        beta,
        e_tilde_curve,
    })
}

/// First and second derivatives on a (possibly non-uniform) grid by
/// three-point formulas; one-sided at the ends.
fn curve(grid: &[f64], values: &[f64]) -> Vec<CurvePoint> {
    let n = grid.len();
    (0..n)
        .map(|i| {
            let (a, b, c) = if i == 0 {
                (0, 1, 2.min(n - 1))
            } else if i == n - 1 {
                (n.saturating_sub(3), n - 2, n - 1)
            } else {
                (i - 1, i, i + 1)
            };
            let (d1, d2) = if n >= 3 {
                three_point(grid[a], grid[b], grid[c], values[a], values[b], values[c], grid[i])
            } else {
                ((values[1] - values[0]) / (grid[1] - grid[0]), 0.0)
            };
            CurvePoint {
                gamma: grid[i],
                e_tilde0: values[i],
                d1,
                d2,
            }
        })
        .collect()
}

/// Derivatives at `x` of the parabola through three points.
fn three_point(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64, x: f64) -> (f64, f64) {
    let l0 = y0 / ((x0 - x1) * (x0 - x2));
    let l1 = y1 / ((x1 - x0) * (x1 - x2));
    let l2 = y2 / ((x2 - x0) * (x2 - x1));
    let d1 = l0 * (2.0 * x - x1 - x2) + l1 * (2.0 * x - x0 - x2) + l2 * (2.0 * x - x0 - x1);
    (d1, 2.0 * (l0 + l1 + l2))
}

/// Quartic model `V ≈ V0 - 2V1 (x-x0)² + V2 (x-x0)⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandauFit {
    pub x0: f64,
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
}

impl LandauFit {
    /// `⟨(x-x0)²⟩`: 0 for `V1 ≤ 0`, `V1/V2` otherwise.
    pub fn fluctuation(&self) -> f64 {
        fluctuation_estimate(self)
    }

    /// `V0` for `V1 ≤ 0`, `V0 - V1²/V2` otherwise.
    pub fn energy_estimate(&self) -> f64 {
        if self.v1 > 0.0 {
            self.v0 - self.v1 * self.v1 / self.v2
        } else {
            self.v0
        }
    }
}

const LANDAU_STEP: f64 = 1e-2;

/// Quartic fit at `x_ref` from fourth-order central differences.
pub fn landau_fit(spec: &PotentialSpec, x_ref: f64) -> Result<LandauFit> {
    let h = LANDAU_STEP;
    let v = |k: f64| potential_value(spec, x_ref + k * h);
    let d2 = (-v(2.0) + 16.0 * v(1.0) - 30.0 * v(0.0) + 16.0 * v(-1.0) - v(-2.0)) / (12.0 * h * h);
    let d4 = (-v(3.0) + 12.0 * v(2.0) - 39.0 * v(1.0) + 56.0 * v(0.0) - 39.0 * v(-1.0) + 12.0 * v(-2.0)
        - v(-3.0))
        / (6.0 * h.powi(4));
    let fit = LandauFit {
        x0: x_ref,
        v0: v(0.0),
        v1: -d2 / 4.0,
        v2: d4 / 24.0,
    };
    if !(fit.v2 > 0.0) {
        return Err(Error::QuarticInstability { v2: fit.v2 });
    }
    Ok(fit)
}

pub fn fluctuation_estimate(fit: &LandauFit) -> f64 {
    if fit.v1 > 0.0 {
        fit.v1 / fit.v2
    } else {
        0.0
    }
}

pub const DEFAULT_EXPONENT_SAMPLES: usize = 9;

#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub beta: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// RMS of the log-log residuals.
    pub residual: f64,
    pub points: usize,
    /// Window inside `[γ_c - 1e-2, γ_c - 1e-4]`.
    pub asymptotic: bool,
}

/// Slope of `log x0` against `log(γ_c - γ)` over log-spaced samples in
/// `window` (which must lie below `γ_c`).
pub fn exponent_fit<F: PotentialFamily + ?Sized>(
    family: &F,
    gamma_c: f64,
    window: (f64, f64),
    samples: usize,
) -> Result<ExponentFit> {
    if samples < 5 {
        return Err(Error::InsufficientSamples {
            needed: 5,
            got: samples,
        });
    }
    let (lo, hi) = window;
    if !(lo < hi) || hi >= gamma_c {
        return Err(Error::WindowOutOfRange(format!(
            "window [{lo}, {hi}] must be ordered and below gamma_c = {gamma_c}"
        )));
    }
    let (dlo, dhi) = ((gamma_c - hi).ln(), (gamma_c - lo).ln());
    let pts: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let ld = dlo + (dhi - dlo) * i as f64 / (samples - 1) as f64;
            let g = gamma_c - ld.exp();
            family.minima(g).map(|m| (ld, m.position().ln()))
        })
        .collect::<Result<_>>()?;
    if pts.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Error::Inconsistent("minimum at the origin inside the window".into()));
    }
    let (slope, _, residual, stderr) = least_squares(&pts);
    let tol = 1e-12 * (1.0 + gamma_c.abs());
    Ok(ExponentFit {
        beta: slope,
        stderr,
        residual,
        points: pts.len(),
        asymptotic: lo >= gamma_c - 1e-2 - tol && hi <= gamma_c - 1e-4 + tol,
    })
}

/// Ordinary least squares: (slope, intercept, rms residual, slope stderr).
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let rms = (ss / n).sqrt();
    let stderr = if pts.len() > 2 {
        (ss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, rms, stderr)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub gamma: f64,
    /// `χ·Ẽ₀` in the natural energy unit (Ω = 1 or k = 1).
    pub chi_e_tilde0: f64,
    pub per_particle: f64,
    /// BH only: `-k(N+1)²/4`.
    pub expected: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub model: Model,
    pub rows: Vec<ScalingRow>,
    /// AM: slope of `log(|χẼ₀|/N)` against `log N`.
    pub slope: Option<f64>,
    /// BH: largest deviation from `-k(N+1)²/4`.
    pub identity_error: Option<f64>,
}

/// AM at fixed `gamma`, or BH at `γ_c(N)` for each `N` (`gamma` ignored).
pub fn scaling_checks(model: Model, ns: &[usize], gamma: f64) -> Result<ScalingReport> {
    let (min, max) = (
        ns.iter().copied().min().unwrap_or(0),
        ns.iter().copied().max().unwrap_or(0),
    );
    if ns.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: ns.len(),
        });
    }
    if min == 0 || max < 4 * min {
        return Err(Error::InvalidParams(
            "N values must be positive and span a factor of 4".into(),
        ));
    }
    let rows: Vec<ScalingRow> = ns
        .iter()
        .map(|&n| {
            let g = match model {
                Model::Am => gamma,
                Model::Bh => closed_form_crossover(model, n),
            };
            let params = ModelParams::from_gamma(model, n, g)?;
            let e = ModelFamily::new(model, n).minima(g)?.e_tilde0 * params.chi();
            Ok(ScalingRow {
                n,
                gamma: g,
                chi_e_tilde0: e,
                per_particle: e.abs() / n as f64,
                expected: (model == Model::Bh).then(|| -((n + 1) as f64).powi(2) / 4.0),
            })
        })
        .collect::<Result<_>>()?;
    let (slope, identity_error) = match model {
        Model::Am => {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| ((r.n as f64).ln(), r.per_particle.ln()))
                .collect();
            (Some(least_squares(&pts).0), None)
        }
        Model::Bh => (
            None,
            Some(rows.iter().fold(0.0_f64, |m, r| {
                m.max((r.chi_e_tilde0 - r.expected.unwrap_or(f64::NAN)).abs())
            })),
        ),
    };
    Ok(ScalingReport {
        model,
        rows,
        slope,
        identity_error,
    })
}

/// `dẼ₀/dγ` by the envelope theorem: `∂V/∂γ` at the minimiser.
pub fn e_tilde_derivative(family: &ModelFamily, gamma: f64) -> Result<f64> {
    let m = family.closed_form_minima(gamma)?;
    Ok(family.d_gamma(gamma, m.position()))
}

/// Classical estimate of θ: `-Ẽ₀ + γẼ₀'` (AM, from `-∂(ΩẼ₀)/∂Ω`) or
/// `-Ẽ₀'/2` (BH, from `-∂((k/2)Ẽ₀)/∂𝓔`). Dimensionless (Ω = 1 or k = 1).
pub fn classical_theta(model: Model, n: usize, gamma: f64) -> Result<f64> {
    let family = ModelFamily::new(model, n);
    let d = e_tilde_derivative(&family, gamma)?;
    Ok(match model {
        Model::Am => -family.closed_form_minima(gamma)?.e_tilde0 + gamma * d,
        Model::Bh => -0.5 * d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flat;
    impl PotentialFamily for Flat {
        fn potential(&self, _gamma: f64, x: f64) -> f64 {
            x * x
        }
    }

    #[test]
    fn minima_examples() {
        let am = global_minima(&ModelFamily::new(Model::Am, 100).spec(30.0)).unwrap();
        assert_eq!(am.x0, vec![0.0]);
        assert!((am.e_tilde0 + 7.5).abs() < 1e-12);
        for n in [4usize, 10, 50] {
            let m = global_minima(&ModelFamily::new(Model::Am, n).spec(0.0)).unwrap();
            let want = 4.0 / 3.0_f64.sqrt() * ((2 * n + 3) as f64).sqrt();
            assert!((m.position().powi(2) - want).abs() < 1e-12 * want);
            assert_eq!(m.x0.len(), 2);
            assert_eq!(m.x0[0], -m.x0[1]);
        }
        let n = 9;
        let m = global_minima(&ModelFamily::new(Model::Bh, n).spec((n as f64 + 1.0) / 4.0)).unwrap();
        assert!((m.position() - 2.0_f64.acosh()).abs() < 1e-12);
        assert!((2.0_f64.acosh() - 1.31696).abs() < 1e-5);
        // negative AM coupling keeps the broken branch
        let m = global_minima(&ModelFamily::new(Model::Am, 10).spec(-8.0)).unwrap();
        assert!(m.position() > 0.0);
    }

    #[test]
    fn crossover_couplings() {
        for (model, n, want) in [
            (Model::Am, 100, 203f64.sqrt()),
            (Model::Bh, 9, 5.0),
            (Model::Am, 20, 43f64.sqrt()),
            (Model::Bh, 30, 15.5),
        ] {
            let c = crossover_coupling(model, n).unwrap();
            assert!((c.closed_form - want).abs() < 1e-12);
            assert!(c.agree, "{c:?}");
        }
        assert!((43f64.sqrt() / 20f64.sqrt() - 1.4663).abs() < 1e-4);
    }

    #[test]
    fn order_is_two_for_both_models() {
        for (model, n) in [(Model::Am, 40usize), (Model::Bh, 10)] {
            let fam = ModelFamily::new(model, n);
            let gc = fam.closed_form_crossover();
            let grid: Vec<f64> = (-50..=50).map(|i| gc + i as f64 * 1e-3).collect();
            let rep = classify_order(&fam, &grid).unwrap();
            assert_eq!(rep.order, 2, "{:?}", rep.probes);
            assert!((rep.gamma_c - gc).abs() < 1e-6);
            let beta = rep.beta.unwrap();
            assert!((beta.beta - 0.5).abs() < 0.02);
        }
        let grid: Vec<f64> = (0..100).map(|i| i as f64 * 1e-3).collect();
        assert!(matches!(classify_order(&Flat, &grid), Err(Error::NoCrossover)));
        assert!(classify_order(&Flat, &[0.0, 0.1]).is_err());
    }

    #[test]
    fn landau_examples() {
        let fam = ModelFamily::new(Model::Am, 100);
        let at = landau_fit(&fam.spec(203f64.sqrt()), 0.0).unwrap();
        assert!(at.v1.abs() < 1e-8);
        let below = landau_fit(&fam.spec(14.0), 0.0).unwrap();
        assert!(below.v1 > 0.0 && below.fluctuation() > 0.0);
        let above = landau_fit(&fam.spec(15.0), 0.0).unwrap();
        assert_eq!(above.fluctuation(), 0.0);
        // leading-order agreement just below the crossover
        for (model, n) in [(Model::Am, 100usize), (Model::Bh, 30)] {
            let fam = ModelFamily::new(model, n);
            let g = fam.closed_form_crossover() - 1e-3;
            let fit = landau_fit(&fam.spec(g), 0.0).unwrap();
            let exact = fam.minima(g).unwrap().e_tilde0;
            assert!((fit.energy_estimate() - exact).abs() <= 1e-2 * exact.abs());
        }
        let bad = PotentialSpec::new(Model::Bh, 0.0, 3, 0.5).unwrap();
        assert!(matches!(landau_fit(&bad, 0.0), Err(Error::QuarticInstability { .. })));
    }

    #[test]
    fn exponents() {
        for (model, n) in [(Model::Am, 100usize), (Model::Bh, 30)] {
            let fam = ModelFamily::new(model, n);
            let gc = fam.closed_form_crossover();
            let fit = exponent_fit(&fam, gc, (gc - 1e-2, gc - 1e-4), 9).unwrap();
            assert!((fit.beta - 0.5).abs() < 0.02 && fit.asymptotic);
            let far = exponent_fit(&fam, gc, (gc - 1.0, gc - 0.5), 9).unwrap();
            assert!(!far.asymptotic);
        }
        let fam = ModelFamily::new(Model::Bh, 30);
        assert!(matches!(
            exponent_fit(&fam, 15.5, (15.49, 15.4999), 4),
            Err(Error::InsufficientSamples { .. })
        ));
        assert!(exponent_fit(&fam, 15.5, (15.49, 15.6), 9).is_err());
    }

    #[test]
    fn scaling() {
        let bh = scaling_checks(Model::Bh, &[10, 20, 40], 0.0).unwrap();
        assert!((bh.rows[0].chi_e_tilde0 + 30.25).abs() < 1e-12);
        assert!(bh.identity_error.unwrap() < 1e-9);
        let n = 10.0_f64;
        assert!((n * (1.0 + 1.0 / n).powi(2) / 4.0 - 30.25 / n).abs() < 1e-12);
        // subleading O(γN) terms dominate the slope at small N
        let small = scaling_checks(Model::Am, &[50, 100, 200, 400], -5.0).unwrap();
        assert!((small.slope.unwrap() - 0.29600).abs() < 1e-4, "{small:?}");
        for g in [-5.0, 5.0] {
            let am = scaling_checks(Model::Am, &[100_000, 200_000, 400_000, 800_000], g).unwrap();
            assert!((am.slope.unwrap() - 0.5).abs() < 0.01, "{am:?}");
        }
        assert!(scaling_checks(Model::Am, &[50, 100], -5.0).is_err());
        assert!(scaling_checks(Model::Am, &[50, 60, 70], -5.0).is_err());
    }

    #[test]
    fn classical_theta_branches() {
        let n = 10;
        let gc = 5.5;
        assert!((classical_theta(Model::Bh, n, 2.0).unwrap() - 2.0).abs() < 1e-10);
        assert!((classical_theta(Model::Bh, n, 8.0).unwrap() - gc).abs() < 1e-10);
        assert!(classical_theta(Model::Am, 40, 12.0).unwrap().abs() < 1e-12);
        assert!(classical_theta(Model::Am, 40, 2.0).unwrap() > 0.0);
        // envelope derivative matches a finite difference
        let fam = ModelFamily::new(Model::Am, 40);
        let g = 3.0;
        let h = 1e-5;
        let fd = (fam.minima(g + h).unwrap().e_tilde0 - fam.minima(g - h).unwrap().e_tilde0) / (2.0 * h);
        assert!((e_tilde_derivative(&fam, g).unwrap() - fd).abs() < 1e-6);
    }
}
