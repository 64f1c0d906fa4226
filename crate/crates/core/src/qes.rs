//! Quasi-exactly solvable Schrödinger states built from Bethe roots.
//!
//! AM: `ψ(x) = x^p exp(-γx²/8 - x⁴/64) Π_j (x²/4 - v_j)` in the sextic
//! potential `V(x) = -γ/4 + (γ² - 3 - 2N)x²/16 + γx⁴/32 + x⁶/256`, χ = Ω.
//!
//! BH: `ψ(x) = exp(-γ cosh x) Π_j (e^{x/2} - v_j e^{-x/2})` in the double
//! Morse potential `V(x) = γ² sinh²x - (N+1)γ cosh x`, χ = k/2.
//!
//! In both cases `-ψ'' + Vψ = (𝓔/χ) ψ`. Only log-derivatives and
//! log-magnitudes of ψ are evaluated.

use rayon::prelude::*;
use serde::Serialize;

use crate::bethe::{bethe_energy, solve_all, BetheRoots};
use crate::error::{Error, Result};
use crate::hamiltonians::{Model, ModelParams};

/// Relative tolerance for treating a root as real.
pub const REALNESS_TOLERANCE: f64 = 1e-9;
/// Log-derivatives are not evaluated closer than this to a node.
pub const NODE_EXCLUSION: f64 = 1e-6;
/// Sample points are kept at least this far from nodes.
pub const SAMPLE_NODE_GAP: f64 = 1e-3;
/// Left end of the sampling interval.
pub const SAMPLE_START: f64 = 0.1;
/// Relative magnitude of ψ that defines the sampling radius.
pub const DECAY_THRESHOLD: f64 = 1e-12;
/// Residual bound is `RESIDUAL_TOLERANCE · (1 + |E|)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-7;

/// The Schrödinger potential of one model at fixed `(γ, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub model: Model,
    pub gamma: f64,
    pub n: usize,
    pub chi: f64,
}

impl PotentialSpec {
    pub fn new(model: Model, gamma: f64, n: usize, chi: f64) -> Result<Self> {
        if !(chi > 0.0) || !chi.is_finite() {
            return Err(Error::InvalidParams(format!("chi must be > 0, got {chi}")));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidParams("gamma must be finite".into()));
        }
        Ok(Self {
            model,
            gamma,
            n,
            chi,
        })
    }

    pub fn from_params(params: &ModelParams) -> Self {
        Self {
            model: params.model(),
            gamma: params.gamma(),
            n: params.n(),
            chi: params.chi(),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        potential_value(self, x)
    }
}

pub fn potential_value(spec: &PotentialSpec, x: f64) -> f64 {
    let g = spec.gamma;
    let n = spec.n as f64;
    match spec.model {
        Model::Am => {
            let x2 = x * x;
            -g / 4.0 + (g * g - 3.0 - 2.0 * n) * x2 / 16.0 + g * x2 * x2 / 32.0
                + x2 * x2 * x2 / 256.0
        }
        Model::Bh => {
            let s = x.sinh();
            g * g * s * s - (n + 1.0) * g * x.cosh()
        }
    }
}

/// A QES eigenstate: its roots and both energies.
#[derive(Debug, Clone)]
pub struct QesState {
    pub roots: BetheRoots,
    /// Many-body energy 𝓔.
    pub energy_im: f64,
    /// Schrödinger energy `𝓔/χ`.
    pub energy_so: f64,
    pub node_count: usize,
}

impl QesState {
    /// `energy_im` is recomputed as `energy_so · χ` so the two agree exactly.
    pub fn new(params: &ModelParams, roots: BetheRoots) -> Result<Self> {
        let chi = params.chi();
        let energy_so = map_energy(bethe_energy(params, &roots)?, chi)?;
        let node_count = count_nodes_of(&roots);
        Ok(Self {
            roots,
            energy_im: energy_so * chi,
            energy_so,
            node_count,
        })
    }
}

/// SO-side energy `𝓔/χ`.
pub fn map_energy(energy_im: f64, chi: f64) -> Result<f64> {
    if !(chi > 0.0) || !chi.is_finite() {
        return Err(Error::InvalidParams(format!("chi must be > 0, got {chi}")));
    }
    Ok(energy_im / chi)
}

fn positive_real(roots: &BetheRoots) -> Vec<f64> {
    roots.positive_real_roots(REALNESS_TOLERANCE)
}

fn count_nodes_of(roots: &BetheRoots) -> usize {
    let positive = positive_real(roots).len();
    match roots.model {
        Model::Am => 2 * positive + roots.parity,
        Model::Bh => positive,
    }
}

pub fn count_nodes(state: &QesState) -> usize {
    count_nodes_of(&state.roots)
}

/// Real zeros of ψ on the whole line, ascending.
pub fn node_positions(state: &QesState) -> Vec<f64> {
    let mut nodes: Vec<f64> = match state.roots.model {
        Model::Am => {
            let mut z: Vec<f64> = positive_real(&state.roots)
                .iter()
                .flat_map(|v| {
                    let x = 2.0 * v.sqrt();
                    [-x, x]
                })
                .collect();
            if state.roots.parity == 1 {
                z.push(0.0);
            }
            z
        }
        Model::Bh => positive_real(&state.roots).iter().map(|v| v.ln()).collect(),
    };
    nodes.sort_by(f64::total_cmp);
    nodes
}

fn check_node_distance(state: &QesState, x: f64) -> Result<()> {
    for node in node_positions(state) {
        let distance = (x - node).abs();
        if distance < NODE_EXCLUSION {
            return Err(Error::NodeProximity { x, distance });
        }
    }
    Ok(())
}

/// `(L, L')` with `L = ψ'/ψ`.
pub fn log_derivative(state: &QesState, spec: &PotentialSpec, x: f64) -> Result<(f64, f64)> {
    check_node_distance(state, x)?;
    let g = spec.gamma;
    match spec.model {
        Model::Am => {
            let p = state.roots.parity as f64;
            let y = x * x / 4.0;
            let (mut l, mut dl) = (-g * x / 4.0 - x * x * x / 16.0, -g / 4.0 - 3.0 * x * x / 16.0);
            if p > 0.0 {
                l += p / x;
                dl -= p / (x * x);
            }
            for v in &state.roots.roots {
                let d = y - v;
                let a = (x / 2.0) / d;
                l += a.re;
                dl += ((0.5 * d - x * x / 4.0) / (d * d)).re;
            }
            Ok((l, dl))
        }
        Model::Bh => {
            let (a, b) = ((0.5 * x).exp(), (-0.5 * x).exp());
            let (mut l, mut dl) = (-g * x.sinh(), -g * x.cosh());
            for v in &state.roots.roots {
                let d = a - v * b;
                l += (0.5 * (a + v * b) / d).re;
                dl += (-v / (d * d)).re;
            }
            Ok((l, dl))
        }
    }
}

/// `ln|ψ(x)|` up to an x-independent constant.
pub fn log_magnitude(state: &QesState, spec: &PotentialSpec, x: f64) -> f64 {
    let g = spec.gamma;
    match spec.model {
        Model::Am => {
            let p = state.roots.parity as f64;
            let y = x * x / 4.0;
            let base = -g * x * x / 8.0 - x.powi(4) / 64.0;
            let lead = if p > 0.0 { p * x.abs().ln() } else { 0.0 };
            base + lead + state.roots.roots.iter().map(|v| (y - v).norm().ln()).sum::<f64>()
        }
        Model::Bh => {
            let (a, b) = ((0.5 * x).exp(), (-0.5 * x).exp());
            -g * x.cosh() + state.roots.roots.iter().map(|v| (a - v * b).norm().ln()).sum::<f64>()
        }
    }
}

/// `R(x) = V(x) - ψ''/ψ - E` at each sample point.
pub fn log_derivative_residual(
    state: &QesState,
    spec: &PotentialSpec,
    xs: &[f64],
) -> Result<Vec<f64>> {
    xs.iter()
        .map(|&x| {
            let (l, dl) = log_derivative(state, spec, x)?;
            Ok(potential_value(spec, x) - (l * l + dl) - state.energy_so)
        })
        .collect()
}

/// Smallest `x > 0` beyond which `|ψ|` stays below `DECAY_THRESHOLD` times
/// its maximum (scanned on a grid of step 0.01).
pub fn decay_radius(state: &QesState, spec: &PotentialSpec) -> f64 {
    const STEP: f64 = 0.01;
    const LIMIT: f64 = 1e3;
    let cut = DECAY_THRESHOLD.ln();
    let mut peak = f64::NEG_INFINITY;
    let mut x = 0.0;
    let mut below_since: Option<f64> = None;
    while x < LIMIT {
        let lm = log_magnitude(state, spec, x.max(1e-300));
        if lm.is_finite() {
            peak = peak.max(lm);
        }
        if lm - peak < cut && potential_value(spec, x) > state.energy_so {
            let start = *below_since.get_or_insert(x);
            // stay below over a stretch before accepting
            if x - start > 0.5 {
                return start;
            }
        } else {
            below_since = None;
        }
        x += STEP;
    }
    LIMIT
}

/// Chebyshev points in `[SAMPLE_START, x_max]` and their mirror images,
/// minus points within `SAMPLE_NODE_GAP` of a node.
pub fn sample_points(state: &QesState, x_max: f64, count: usize) -> Vec<f64> {
    let nodes = node_positions(state);
    let (a, b) = (SAMPLE_START, x_max.max(SAMPLE_START * 2.0));
    let mut xs = Vec::with_capacity(2 * count);
    for i in 0..count {
        let t = ((2 * i + 1) as f64 * std::f64::consts::PI / (2 * count) as f64).cos();
        let x = 0.5 * (a + b) + 0.5 * (b - a) * t;
        for s in [x, -x] {
            if nodes.iter().all(|n| (s - n).abs() >= SAMPLE_NODE_GAP) {
                xs.push(s);
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs
}

/// Outcome of the residual-constancy check for one state.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub energy_so: f64,
    pub node_count: usize,
    pub x_max: f64,
    pub points: usize,
    pub max_abs_residual: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Number of Chebyshev points per half-line in [`residual_constancy`].
pub const SAMPLES_PER_SIDE: usize = 24;

pub fn residual_constancy(state: &QesState, spec: &PotentialSpec) -> Result<ResidualReport> {
    let x_max = decay_radius(state, spec);
    let xs = sample_points(state, x_max, SAMPLES_PER_SIDE);
    let r = log_derivative_residual(state, spec, &xs)?;
    let max_abs_residual = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let bound = RESIDUAL_TOLERANCE * (1.0 + state.energy_so.abs());
    Ok(ResidualReport {
        energy_so: state.energy_so,
        node_count: state.node_count,
        x_max,
        points: xs.len(),
        max_abs_residual,
        bound,
        passed: xs.len() >= 20 && max_abs_residual < bound,
    })
}

/// The same state with every root shifted by `shift`; the energy is
/// recomputed from the shifted roots. Conjugate pairs stay paired.
pub fn perturbed(params: &ModelParams, state: &QesState, shift: f64) -> Result<QesState> {
    let mut roots = state.roots.clone();
    for v in &mut roots.roots {
        *v += shift;
    }
    QesState::new(params, roots)
}

/// All QES states of the sector, ascending in energy.
pub fn qes_family(params: &ModelParams) -> Result<Vec<QesState>> {
    let states = solve_all(params)?;
    // keep the eigenvalue order; Bethe energies of degenerate doublets
    // differ only by roundoff
    states
        .into_par_iter()
        .map(|s| QesState::new(params, s.roots))
        .collect()
}

/// Node counts expected for the energy-ordered family: `p, p+2, …, 2M+p`
/// (AM) or `0, 1, …, N` (BH).
pub fn expected_node_sequence(params: &ModelParams) -> Vec<usize> {
    match params.model() {
        Model::Am => (0..=params.root_count())
            .map(|k| 2 * k + params.parity())
            .collect(),
        Model::Bh => (0..=params.n()).collect(),
    }
}

pub fn node_ordering_holds(params: &ModelParams, family: &[QesState]) -> bool {
    family.iter().map(|s| s.node_count).eq(expected_node_sequence(params))
}
