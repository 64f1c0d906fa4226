//! Ground-state correlators from direct expectation values and from
//! Hellmann–Feynman derivatives, and γ-sweeps built on them.

use rayon::prelude::*;
use serde::Serialize;

use crate::classical::{classical_theta, closed_form_crossover, least_squares, ModelFamily, PotentialFamily};
use crate::error::{Error, Result};
use crate::hamiltonians::{block_elements, build_block, eigs, expectation, Couplings, Model, ModelParams, Observable};
use crate::tridiag::SymTridiagonal;

/// Ground states closer than this to the first excited state are treated as
/// degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;
pub const DEFAULT_HF_STEP: f64 = 1e-4;
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Coupling {
    Delta,
    Omega,
    K,
    Eps,
}

impl Coupling {
    fn model(self) -> Model {
        match self {
            Coupling::Delta | Coupling::Omega => Model::Am,
            Coupling::K | Coupling::Eps => Model::Bh,
        }
    }

    fn shifted(self, c: Couplings, by: f64) -> Couplings {
        match (self, c) {
            (Coupling::Delta, Couplings::Am { delta, omega }) => Couplings::Am { delta: delta + by, omega },
            (Coupling::Omega, Couplings::Am { delta, omega }) => Couplings::Am { delta, omega: omega + by },
            (Coupling::K, Couplings::Bh { k, eps }) => Couplings::Bh { k: k + by, eps },
            (Coupling::Eps, Couplings::Bh { k, eps }) => Couplings::Bh { k, eps: eps + by },
            _ => unreachable!("coupling checked against the model"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HfDerivative {
    /// Richardson-extrapolated `∂𝓔₀/∂c`.
    pub value: f64,
    /// `|extrapolated - central(h/2)|`.
    pub error: f64,
    pub gap: f64,
    /// Gap below 1e-10: the derivative may be one-sided.
    pub degenerate: bool,
}

fn lowest_two(n: usize, c: Couplings) -> (f64, f64) {
    let (diag, off) = block_elements(n, c);
    let ev = SymTridiagonal::new(diag, off)
        .map(|m| m.lowest_eigenvalues(2))
        .unwrap_or_default();
    let e0 = ev.first().copied().unwrap_or(f64::NAN);
    let gap = ev.get(1).map_or(f64::INFINITY, |e1| e1 - e0);
    (e0, gap)
}

/// `∂𝓔₀/∂c` by central differences with steps `h` and `h/2`, Richardson
/// extrapolated.
pub fn hf_derivative(params: &ModelParams, coupling: Coupling, h: f64) -> Result<HfDerivative> {
    if coupling.model() != params.model() {
        return Err(Error::InvalidParams(format!(
            "coupling {coupling:?} does not belong to model {}",
            params.model()
        )));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParams(format!("step must be positive, got {h}")));
    }
    let n = params.n();
    let c = params.couplings();
    let e = |by: f64| lowest_two(n, coupling.shifted(c, by)).0;
    let central = |s: f64| (e(s) - e(-s)) / (2.0 * s);
    let (d1, d2) = (central(h), central(0.5 * h));
    let value = (4.0 * d2 - d1) / 3.0;
    let (_, gap) = lowest_two(n, c);
    if !value.is_finite() {
        return Err(Error::Inconsistent("non-finite energy derivative".into()));
    }
    Ok(HfDerivative {
        value,
        error: (value - d2).abs(),
        gap,
        degenerate: gap < DEGENERACY_GAP,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepOptions {
    /// Ω (AM) or k (BH) held fixed across the sweep.
    pub energy_unit: f64,
    pub hf_step: f64,
    pub classical: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            energy_unit: 1.0,
            hf_step: DEFAULT_HF_STEP,
            classical: true,
        }
    }
}

/// One γ point. Columns that could not be computed are `None`; `status`
/// says why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    /// `δ/(Ω√N)` (AM) or `𝓔/k` (BH).
    pub scaled: f64,
    pub energy: Option<f64>,
    pub gap: Option<f64>,
    pub theta: Option<f64>,
    pub theta_per_n: Option<f64>,
    /// `⟨n_a⟩/N` (AM) or `⟨(n₁-n₂)²⟩/N²` (BH).
    pub occupation: Option<f64>,
    /// Hellmann–Feynman θ: `-∂𝓔₀/∂Ω` or `-∂𝓔₀/∂𝓔`.
    pub theta_hf: Option<f64>,
    pub theta_hf_diff: Option<f64>,
    /// Hellmann–Feynman occupation: `2∂𝓔₀/∂δ` or `-8∂𝓔₀/∂k`, same
    /// normalisation as `occupation`.
    pub occupation_hf: Option<f64>,
    pub occupation_hf_diff: Option<f64>,
    pub classical_energy: Option<f64>,
    pub classical_theta: Option<f64>,
    /// `d²𝓔₀/dγ²` from the grid at fixed energy unit.
    pub d2_energy: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMeta {
    pub model: Model,
    pub n: usize,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_count: usize,
    pub energy_unit: f64,
    pub hf_step: f64,
    pub degeneracy_gap: f64,
    pub locator: &'static str,
    pub tool_version: &'static str,
    pub schema_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub meta: SweepMeta,
    pub rows: Vec<SweepRow>,
}

pub const LOCATOR_NOTE: &str = "quantum crossover locator: argmax |d2 E0/d gamma2| on the grid";

/// `γ/√N` (AM) or `γ` (BH).
pub fn scaled_coupling(model: Model, n: usize, gamma: f64) -> f64 {
    match model {
        Model::Am if n > 0 => gamma / (n as f64).sqrt(),
        _ => gamma,
    }
}

fn empty_row(model: Model, n: usize, gamma: f64, status: String) -> SweepRow {
    SweepRow {
        gamma,
        scaled: scaled_coupling(model, n, gamma),
        energy: None,
        gap: None,
        theta: None,
        theta_per_n: None,
        occupation: None,
        theta_hf: None,
        theta_hf_diff: None,
        occupation_hf: None,
        occupation_hf_diff: None,
        classical_energy: None,
        classical_theta: None,
        d2_energy: None,
        status,
    }
}

fn sweep_row(model: Model, n: usize, gamma: f64, opts: &SweepOptions) -> SweepRow {
    let base = match model {
        Model::Am => ModelParams::am(n, gamma * opts.energy_unit, opts.energy_unit),
        Model::Bh => ModelParams::bh(n, opts.energy_unit, gamma * opts.energy_unit),
    };
    let params = match base {
        Ok(p) => p,
        Err(e) => return empty_row(model, n, gamma, format!("error: {e}")),
    };
    let mut row = empty_row(model, n, gamma, String::new());
    let mut notes = Vec::new();

    let spectrum = eigs(&build_block(&params), true);
    let Some(ground) = spectrum.eigenvectors.as_ref().and_then(|v| v.first()) else {
        return empty_row(model, n, gamma, "error: no eigenvectors".into());
    };
    let e0 = spectrum.eigenvalues[0];
    let gap = spectrum.eigenvalues.get(1).map_or(f64::INFINITY, |e1| e1 - e0);
    let nf = n.max(1) as f64;
    let (theta_obs, occ_obs, occ_norm) = match model {
        Model::Am => (Observable::CoherenceAm, Observable::NAtoms, nf),
        Model::Bh => (Observable::CoherenceBh, Observable::ImbalanceSq, nf * nf),
    };
    let theta = expectation(&params, ground, theta_obs).ok();
    let occupation = expectation(&params, ground, occ_obs).ok().map(|v| v / occ_norm);
    row.energy = Some(e0);
    row.gap = gap.is_finite().then_some(gap);
    row.theta = theta;
    row.theta_per_n = theta.map(|t| t / nf);
    row.occupation = occupation;

    if gap < DEGENERACY_GAP {
        notes.push("degenerate ground state: Hellmann-Feynman columns invalid".to_string());
    } else {
        let (tc, oc, oscale) = match model {
            Model::Am => (Coupling::Omega, Coupling::Delta, 2.0),
            Model::Bh => (Coupling::Eps, Coupling::K, -8.0),
        };
        match (
            hf_derivative(&params, tc, opts.hf_step),
            hf_derivative(&params, oc, opts.hf_step),
        ) {
            (Ok(t), Ok(o)) => {
                let t = -t.value;
                let o = oscale * o.value / occ_norm;
                row.theta_hf = Some(t);
                row.theta_hf_diff = theta.map(|d| (d - t).abs());
                row.occupation_hf = Some(o);
                row.occupation_hf_diff = occupation.map(|d| (d - o).abs());
            }
            (Err(e), _) | (_, Err(e)) => notes.push(format!("hellmann-feynman: {e}")),
        }
    }

    if opts.classical {
        let family = ModelFamily::new(model, n);
        match family.minima(gamma).and_then(|m| Ok((m, classical_theta(model, n, gamma)?))) {
            Ok((m, t)) => {
                row.classical_energy = Some(m.e_tilde0 * params.chi());
                row.classical_theta = Some(t);
            }
            Err(e) => notes.push(format!("classical: {e}")),
        }
    }
    row.status = if notes.is_empty() {
        "ok".into()
    } else {
        notes.join("; ")
    };
    row
}

/// Evaluate every grid point (in parallel, assembled in grid order) and
/// fill the second-difference column.
pub fn sweep(model: Model, n: usize, grid: &[f64], opts: &SweepOptions) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidParams("grid values must be finite".into()));
    }
    let mut grid = grid.to_vec();
    if grid.len() > 1 && grid[1] < grid[0] {
        grid.reverse();
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("grid must be strictly monotone".into()));
    }
    if !(opts.energy_unit > 0.0) || !(opts.hf_step > 0.0) {
        return Err(Error::InvalidParams("energy unit and step must be positive".into()));
    }
    let mut rows: Vec<SweepRow> = grid.par_iter().map(|&g| sweep_row(model, n, g, opts)).collect();
    fill_second_difference(&mut rows);
    Ok(SweepResult {
        meta: SweepMeta {
            model,
            n,
            grid_min: grid[0],
            grid_max: grid[grid.len() - 1],
            grid_count: grid.len(),
            energy_unit: opts.energy_unit,
            hf_step: opts.hf_step,
            degeneracy_gap: DEGENERACY_GAP,
            locator: LOCATOR_NOTE,
            tool_version: env!("CARGO_PKG_VERSION"),
            schema_version: SCHEMA_VERSION,
        },
        rows,
    })
}

/// Five-point stencil where five equally spaced neighbours exist, otherwise
/// the three-point parabola.
fn fill_second_difference(rows: &mut [SweepRow]) {
    let n = rows.len();
    if n < 3 {
        return;
    }
    let g: Vec<f64> = rows.iter().map(|r| r.gamma).collect();
    let e: Vec<Option<f64>> = rows.iter().map(|r| r.energy).collect();
    let uniform = |i: usize, j: usize| {
        let h = g[i + 1] - g[i];
        (i..j).all(|k| ((g[k + 1] - g[k]) - h).abs() <= 1e-9 * h.abs())
    };
    for i in 0..n {
        let d2 = if i >= 2 && i + 2 < n && uniform(i - 2, i + 2) {
            let h = g[i + 1] - g[i];
            match (e[i - 2], e[i - 1], e[i], e[i + 1], e[i + 2]) {
                (Some(a), Some(b), Some(c), Some(d), Some(f)) => {
                    Some((-a + 16.0 * b - 30.0 * c + 16.0 * d - f) / (12.0 * h * h))
                }
                _ => None,
            }
        } else if i >= 1 && i + 1 < n {
            match (e[i - 1], e[i], e[i + 1]) {
                (Some(a), Some(b), Some(c)) => {
                    let (x0, x1, x2) = (g[i - 1], g[i], g[i + 1]);
                    let l = a / ((x0 - x1) * (x0 - x2)) + b / ((x1 - x0) * (x1 - x2)) + c / ((x2 - x0) * (x2 - x1));
                    Some(2.0 * l)
                }
                _ => None,
            }
        } else {
            None
        };
        rows[i].d2_energy = d2;
    }
}

/// Row with the largest `|d²𝓔₀/dγ²|`.
pub fn quantum_locator(result: &SweepResult) -> Option<&SweepRow> {
    result
        .rows
        .iter()
        .filter(|r| r.d2_energy.is_some_and(f64::is_finite))
        .max_by(|a, b| {
            let (x, y) = (a.d2_energy.unwrap_or(0.0).abs(), b.d2_energy.unwrap_or(0.0).abs());
            x.total_cmp(&y)
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ThetaSource {
    Quantum,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalFit {
    pub gamma_c: f64,
    pub window: f64,
    pub slope_below: f64,
    pub slope_above: f64,
    /// Below-side fit evaluated at `γ_c`.
    pub theta_c: f64,
    /// Above-side fit evaluated at `γ_c`.
    pub theta_c_above: f64,
    /// Classical value: 0 (AM) or `γ_c` in units of k (BH).
    pub theta_c_reference: f64,
}

/// Linear fits of θ on `[γ_c - w, γ_c)` and `(γ_c, γ_c + w]`, default
/// `w = 0.1·γ_c`.
pub fn critical_behaviour_fit(
    result: &SweepResult,
    gamma_c: f64,
    window: Option<f64>,
    source: ThetaSource,
) -> Result<CriticalFit> {
    let w = window.unwrap_or(0.1 * gamma_c.abs());
    if !(w > 0.0) {
        return Err(Error::InvalidParams(format!("window must be positive, got {w}")));
    }
    let tol = 1e-12 * (1.0 + gamma_c.abs());
    if gamma_c - w < result.meta.grid_min - tol || gamma_c + w > result.meta.grid_max + tol {
        return Err(Error::WindowOutOfRange(format!(
            "[{}, {}] is not inside the grid [{}, {}]",
            gamma_c - w,
            gamma_c + w,
            result.meta.grid_min,
            result.meta.grid_max
        )));
    }
    let theta = |r: &SweepRow| match source {
        ThetaSource::Quantum => r.theta,
        ThetaSource::Classical => r.classical_theta,
    };
    let side = |below: bool| -> Result<(f64, f64)> {
        let pts: Vec<(f64, f64)> = result
            .rows
            .iter()
            .filter(|r| {
                if below {
                    r.gamma >= gamma_c - w - tol && r.gamma < gamma_c
                } else {
                    r.gamma > gamma_c && r.gamma <= gamma_c + w + tol
                }
            })
            .filter_map(|r| theta(r).map(|t| (r.gamma - gamma_c, t)))
            .collect();
        if pts.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: pts.len(),
            });
        }
        let (slope, intercept, _, _) = least_squares(&pts);
        Ok((slope, intercept))
    };
    let (slope_below, theta_c) = side(true)?;
    let (slope_above, theta_c_above) = side(false)?;
    let theta_c_reference = match result.meta.model {
        Model::Am => 0.0,
        Model::Bh => closed_form_crossover(Model::Bh, result.meta.n),
    };
    Ok(CriticalFit {
        gamma_c,
        window: w,
        slope_below,
        slope_above,
        theta_c,
        theta_c_above,
        theta_c_reference,
    })
}

pub const FIG1_SIZES: [usize; 3] = [20, 30, 40];
pub const FIG1_POINTS: usize = 301;
pub const FIG1_SCALED_MAX: f64 = 3.0;
/// Scaled coupling at which the molecular fraction is read off.
pub const FIG1_PROBE: f64 = 2.5;

/// AM grid in γ covering scaled coupling `[0, 3]` with 301 points.
pub fn fig1_grid(n: usize) -> Vec<f64> {
    let root = (n as f64).sqrt();
    (0..FIG1_POINTS)
        .map(|i| FIG1_SCALED_MAX * i as f64 / (FIG1_POINTS - 1) as f64 * root)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig1Summary {
    pub n: usize,
    /// Scaled coupling of the quantum locator.
    pub locator: f64,
    /// `⟨n_a⟩/N` at the grid point nearest scaled coupling 2.5.
    pub atom_fraction_at_probe: f64,
    /// `⟨n_a⟩/N` is nonincreasing along the grid.
    pub monotone: bool,
}

pub fn fig1_summary(result: &SweepResult) -> Result<Fig1Summary> {
    let locator = quantum_locator(result)
        .ok_or(Error::InsufficientSamples {
            needed: 3,
            got: result.rows.len(),
        })?
        .scaled;
    let probe = result
        .rows
        .iter()
        .min_by(|a, b| (a.scaled - FIG1_PROBE).abs().total_cmp(&(b.scaled - FIG1_PROBE).abs()))
        .and_then(|r| r.occupation)
        .ok_or(Error::InvalidState("no occupation at the probe point".into()))?;
    let occ: Vec<f64> = result.rows.iter().filter_map(|r| r.occupation).collect();
    let monotone = occ.len() == result.rows.len() && occ.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(Fig1Summary {
        n: result.meta.n,
        locator,
        atom_fraction_at_probe: probe,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hf_examples() {
        let p = ModelParams::am(2, 0.0, 1.0).unwrap();
        let t = hf_derivative(&p, Coupling::Omega, 1e-4).unwrap();
        assert!((-t.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
        assert!(!t.degenerate);
        let d = hf_derivative(&p, Coupling::Delta, 1e-4).unwrap();
        assert!((2.0 * d.value - 1.0).abs() < 1e-10);
        let p = ModelParams::bh(1, 1.0, 1.0).unwrap();
        let e = hf_derivative(&p, Coupling::Eps, 1e-4).unwrap();
        assert!((-e.value - 0.5).abs() < 1e-10);
        // the step may leave the validated domain
        let p = ModelParams::bh(4, 1.0, 0.0).unwrap();
        assert!(hf_derivative(&p, Coupling::Eps, 1e-4).unwrap().degenerate);
        assert!(hf_derivative(&p, Coupling::Delta, 1e-4).is_err());
    }

    #[test]
    fn am_sweep_is_consistent() {
        let n = 20;
        let grid: Vec<f64> = (0..101).map(|i| i as f64 * 0.13).collect();
        let res = sweep(Model::Am, n, &grid, &SweepOptions::default()).unwrap();
        assert_eq!(res.rows.len(), 101);
        for r in &res.rows {
            assert_eq!(r.status, "ok");
            let t = r.theta.unwrap();
            assert!(r.theta_hf_diff.unwrap() < 1e-6 * (1.0 + t.abs()));
            assert!(r.occupation_hf_diff.unwrap() * n as f64 <= 1e-6 * n as f64);
            let na = r.occupation.unwrap() * n as f64;
            assert!((0.0..=n as f64).contains(&na));
        }
        assert!(res.rows.windows(2).all(|w| w[1].occupation <= w[0].occupation));
        assert!(res.rows[0].d2_energy.is_none() && res.rows[2].d2_energy.is_some());
    }

    #[test]
    fn bh_sweep_marks_degenerate_rows() {
        let res = sweep(Model::Bh, 40, &[0.0, 0.5, 25.0], &SweepOptions::default()).unwrap();
        assert!(res.rows[0].theta_hf.is_none());
        assert!(res.rows[0].status.contains("degenerate"));
        assert!(res.rows[0].classical_energy.is_none());
        let r = &res.rows[2];
        assert!(r.theta_hf_diff.unwrap() < 1e-6 * (1.0 + r.theta.unwrap().abs()));
        assert!(r.occupation_hf_diff.unwrap() < 1e-9);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let o = SweepOptions::default();
        assert!(sweep(Model::Am, 4, &[], &o).is_err());
        assert!(sweep(Model::Am, 4, &[0.0, 1.0, 1.0], &o).is_err());
        let desc = sweep(Model::Am, 4, &[2.0, 1.0, 0.0], &o).unwrap();
        assert_eq!(desc.rows[0].gamma, 0.0);
        let bad = sweep(Model::Bh, 4, &[-1.0, 1.0], &o).unwrap();
        assert!(bad.rows[0].status.starts_with("error"));
        assert!(bad.rows[0].energy.is_none());
    }

    #[test]
    fn classical_critical_fits() {
        let n = 40;
        let gc = closed_form_crossover(Model::Am, n);
        let grid: Vec<f64> = (0..=200).map(|i| gc * (0.5 + i as f64 / 200.0)).collect();
        let res = sweep(Model::Am, n, &grid, &SweepOptions::default()).unwrap();
        let fit = critical_behaviour_fit(&res, gc, None, ThetaSource::Classical).unwrap();
        assert!(fit.slope_above.abs() < 1e-9 && fit.theta_c_above.abs() < 1e-9);
        assert!(fit.theta_c.abs() < 0.05 * fit.slope_below.abs() * gc);
        let q = critical_behaviour_fit(&res, gc, None, ThetaSource::Quantum).unwrap();
        assert!(q.slope_below.is_finite() && q.slope_above.is_finite());
        assert!(critical_behaviour_fit(&res, gc, Some(gc), ThetaSource::Quantum).is_err());

        let gc = closed_form_crossover(Model::Bh, n);
        let grid: Vec<f64> = (0..=100).map(|i| gc * (0.5 + i as f64 / 100.0)).collect();
        let res = sweep(Model::Bh, n, &grid, &SweepOptions::default()).unwrap();
        let fit = critical_behaviour_fit(&res, gc, None, ThetaSource::Classical).unwrap();
        assert!((fit.theta_c - 20.5).abs() < 1e-6 && (fit.theta_c_above - 20.5).abs() < 1e-9);
        assert!((fit.slope_below - 1.0).abs() < 1e-6 && fit.slope_above.abs() < 1e-9);
        assert_eq!(fit.theta_c_reference, 20.5);
    }

    #[test]
    fn fig1_locators() {
        // the quantum peak sits below the classical γ_c/√N and drifts up with N
        let mut last = 0.0;
        for (n, want) in FIG1_SIZES.into_iter().zip([1.02, 1.11, 1.16]) {
            let res = sweep(Model::Am, n, &fig1_grid(n), &SweepOptions::default()).unwrap();
            let s = fig1_summary(&res).unwrap();
            assert!((s.locator - want).abs() < 0.015, "{s:?}");
            assert!(s.locator > last && s.locator < closed_form_crossover(Model::Am, n) / (n as f64).sqrt());
            last = s.locator;
            assert!(s.monotone && s.atom_fraction_at_probe < 0.2, "{s:?}");
        }
    }
}
