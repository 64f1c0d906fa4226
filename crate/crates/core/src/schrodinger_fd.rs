//! Finite-difference eigensolver for `-ψ'' + V(x)ψ = Eψ` with Dirichlet
//! walls, independent of the Bethe machinery.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonians::{ground_energy, ModelParams};
use crate::qes::{potential_value, PotentialSpec, QesState};
use crate::tridiag::SymTridiagonal;

/// Required gap between `V` at the walls and the largest wanted eigenvalue.
pub const WALL_MARGIN: f64 = 50.0;
/// Domain expansions attempted before giving up.
pub const MAX_EXPANSIONS: usize = 3;
const EXPANSION_FACTOR: f64 = 1.5;
pub const DEFAULT_POINTS: usize = 4001;
/// Grid doubling stops when the largest Richardson estimate is below this.
pub const RICHARDSON_TARGET: f64 = 1e-5;
const MAX_DOUBLINGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `[-x_max, x_max]`.
    FullLine,
    /// `[0, x_max]` with `ψ(0) = 0` (hard wall at the origin).
    HalfLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdGrid {
    pub x_max: f64,
    pub n_points: usize,
    pub domain: Domain,
}

impl FdGrid {
    pub fn new(x_max: f64, n_points: usize, domain: Domain) -> Result<Self> {
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::InvalidParams(format!("x_max must be > 0, got {x_max}")));
        }
        if n_points < 3 {
            return Err(Error::InvalidParams(format!("need at least 3 grid points, got {n_points}")));
        }
        Ok(Self {
            x_max,
            n_points,
            domain,
        })
    }

    pub fn spacing(&self) -> f64 {
        let width = match self.domain {
            Domain::FullLine => 2.0 * self.x_max,
            Domain::HalfLine => self.x_max,
        };
        width / (self.n_points - 1) as f64
    }

    fn left(&self) -> f64 {
        match self.domain {
            Domain::FullLine => -self.x_max,
            Domain::HalfLine => 0.0,
        }
    }

    /// Interior points (walls excluded).
    pub fn interior(&self) -> Vec<f64> {
        let h = self.spacing();
        (1..self.n_points - 1).map(|i| self.left() + i as f64 * h).collect()
    }

    /// Same domain, spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }

    /// Domain widened by `factor` at (roughly) constant spacing.
    fn expanded(&self, factor: f64) -> Self {
        let n = ((self.n_points - 1) as f64 * factor).ceil() as usize + 1;
        Self {
            x_max: self.x_max * factor,
            n_points: n,
            domain: self.domain,
        }
    }
}

/// The three-point discretisation: diagonal `2/h² + V(x_i)`, off-diagonal
/// `-1/h²`.
pub fn fd_matrix(spec: &PotentialSpec, grid: &FdGrid) -> SymTridiagonal {
    let h2 = grid.spacing().powi(2);
    let xs = grid.interior();
    let diag: Vec<f64> = xs.iter().map(|&x| 2.0 / h2 + potential_value(spec, x)).collect();
    let off = vec![-1.0 / h2; xs.len().saturating_sub(1)];
    SymTridiagonal::new(diag, off).expect("finite potential on a valid grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdEigenvalue {
    /// Eigenvalue on the returned grid.
    pub value: f64,
    /// `(4E_{h/2} - E_h)/3`.
    pub extrapolated: f64,
    /// `|E_{h/2} - E_h|/3`, the error estimate of `value`.
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FdSpectrum {
    /// The finer of the two Richardson grids.
    pub grid: FdGrid,
    pub eigenvalues: Vec<FdEigenvalue>,
    pub expansions: usize,
}

impl FdSpectrum {
    pub fn extrapolated(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.extrapolated).collect()
    }

    pub fn max_error_estimate(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0_f64, |m, e| m.max(e.error_estimate))
    }
}

fn wall_ok(spec: &PotentialSpec, grid: &FdGrid, highest: f64) -> bool {
    let v_wall = match grid.domain {
        Domain::FullLine => potential_value(spec, grid.x_max).min(potential_value(spec, -grid.x_max)),
        Domain::HalfLine => potential_value(spec, grid.x_max),
    };
    v_wall >= highest + WALL_MARGIN
}

/// The `k` lowest eigenvalues on `grid` (and on the grid with half the
/// spacing, for the Richardson estimate). The domain is widened when the
/// wall condition fails.
pub fn fd_spectrum(spec: &PotentialSpec, grid: &FdGrid, k: usize) -> Result<FdSpectrum> {
    if k > grid.n_points - 2 {
        return Err(Error::InvalidParams(format!(
            "requested {k} eigenvalues from {} interior points",
            grid.n_points - 2
        )));
    }
    let mut grid = *grid;
    for expansions in 0..=MAX_EXPANSIONS {
        let coarse = fd_matrix(spec, &grid).lowest_eigenvalues(k);
        let highest = coarse.last().copied().unwrap_or(f64::NEG_INFINITY);
        if !wall_ok(spec, &grid, highest) {
            grid = grid.expanded(EXPANSION_FACTOR);
            continue;
        }
        let fine_grid = grid.refined();
        let fine = fd_matrix(spec, &fine_grid).lowest_eigenvalues(k);
        let eigenvalues = coarse
            .iter()
            .zip(&fine)
            .map(|(&c, &f)| FdEigenvalue {
                value: f,
                extrapolated: (4.0 * f - c) / 3.0,
                error_estimate: (f - c).abs() / 3.0,
            })
            .collect();
        return Ok(FdSpectrum {
            grid: fine_grid,
            eigenvalues,
            expansions,
        });
    }
    Err(Error::DomainTooSmall {
        expansions: MAX_EXPANSIONS,
    })
}

/// Initial half-width: where `V` first exceeds `floor + WALL_MARGIN`, with
/// `floor` the minimum of `V` found on the way, times 1.2.
pub fn initial_x_max(spec: &PotentialSpec, at_least: f64) -> f64 {
    let mut floor = potential_value(spec, 0.0);
    let mut x = 0.0;
    while x < 1e3 {
        let v = potential_value(spec, x);
        floor = floor.min(v);
        if v > floor + WALL_MARGIN && v > potential_value(spec, 0.0) + WALL_MARGIN {
            break;
        }
        x += 0.01;
    }
    (1.2 * x).max(at_least).max(1.0)
}

/// Lowest `k` eigenvalues with the grid refined until the Richardson estimate
/// of every value is below `RICHARDSON_TARGET` (at most four doublings).
pub fn converged_spectrum(
    spec: &PotentialSpec,
    k: usize,
    domain: Domain,
    x_min: f64,
) -> Result<FdSpectrum> {
    let grid = FdGrid::new(initial_x_max(spec, x_min), DEFAULT_POINTS, domain)?;
    let mut result = fd_spectrum(spec, &grid, k)?;
    for _ in 0..MAX_DOUBLINGS {
        if result.max_error_estimate() < RICHARDSON_TARGET {
            break;
        }
        // the previous fine grid becomes the coarse one
        result = fd_spectrum(spec, &result.grid, k)?;
    }
    Ok(result)
}

/// Sign changes of each of the `k` lowest eigenvectors on `grid`.
pub fn fd_node_counts(spec: &PotentialSpec, grid: &FdGrid, k: usize) -> Vec<usize> {
    let m = fd_matrix(spec, grid);
    m.lowest_eigenvalues(k)
        .iter()
        .map(|&lambda| sign_changes(&m.twisted_eigenvector(lambda)))
        .collect()
}

fn sign_changes(v: &[f64]) -> usize {
    let scale = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let mut last = 0.0_f64;
    let mut count = 0;
    for &x in v {
        // tails below roundoff carry no sign information
        if x.abs() <= 1e-12 * scale {
            continue;
        }
        if last != 0.0 && x.signum() != last.signum() {
            count += 1;
        }
        last = x;
    }
    count
}

/// Domain appropriate to the QES sector: the half-line for odd AM states.
pub fn domain_for(params: &ModelParams) -> Domain {
    if params.parity() == 1 {
        Domain::HalfLine
    } else {
        Domain::FullLine
    }
}

/// Index of a QES state in the FD spectrum of [`domain_for`]: its node
/// count on the full line, or the count of positive nodes on the half line.
pub fn fd_index(node_count: usize, domain: Domain) -> usize {
    match domain {
        Domain::FullLine => node_count,
        Domain::HalfLine => node_count / 2,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingRow {
    pub energy_so: f64,
    pub node_count: usize,
    pub fd_index: usize,
    pub fd_energy: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingReport {
    pub rows: Vec<EmbeddingRow>,
    pub max_difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Tolerance for matching QES and FD energies (SO units).
pub const EMBEDDING_TOLERANCE: f64 = 1e-4;

/// Compare every QES energy with the FD eigenvalue of matching index.
pub fn embedding_check(params: &ModelParams, family: &[QesState]) -> Result<EmbeddingReport> {
    let spec = PotentialSpec::from_params(params);
    let domain = domain_for(params);
    let highest = family
        .iter()
        .map(|s| fd_index(s.node_count, domain))
        .max()
        .unwrap_or(0);
    let x_min = family
        .iter()
        .map(|s| crate::qes::decay_radius(s, &spec))
        .fold(0.0, f64::max);
    let fd = converged_spectrum(&spec, highest + 1, domain, x_min)?;
    let values = fd.extrapolated();
    let rows: Vec<EmbeddingRow> = family
        .iter()
        .map(|s| {
            let idx = fd_index(s.node_count, domain);
            EmbeddingRow {
                energy_so: s.energy_so,
                node_count: s.node_count,
                fd_index: idx,
                fd_energy: values[idx],
                difference: values[idx] - s.energy_so,
            }
        })
        .collect();
    let max_difference = rows.iter().fold(0.0_f64, |m, r| m.max(r.difference.abs()));
    Ok(EmbeddingReport {
        rows,
        max_difference,
        tolerance: EMBEDDING_TOLERANCE,
        passed: max_difference < EMBEDDING_TOLERANCE,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FaithfulnessReport {
    /// Ground energy of the Fock block.
    pub e0_diag: f64,
    /// `χ · E₀` from the FD spectrum.
    pub e0_fd: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub richardson_error: f64,
    pub passed: bool,
}

/// Does the Fock-block ground state map onto the SO ground state?
pub fn verify_ground_faithfulness(params: &ModelParams) -> Result<FaithfulnessReport> {
    let spec = PotentialSpec::from_params(params);
    let e0_diag = ground_energy(params);
    let fd = converged_spectrum(&spec, 1, domain_for(params), 0.0)?;
    let e0_fd = params.chi() * fd.eigenvalues[0].extrapolated;
    let difference = e0_fd - e0_diag;
    let tolerance = 1e-3 * (1.0 + e0_diag.abs());
    Ok(FaithfulnessReport {
        e0_diag,
        e0_fd,
        difference,
        tolerance,
        richardson_error: params.chi() * fd.eigenvalues[0].error_estimate,
        passed: difference.abs() < tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::Model;
    use crate::qes::qes_family;

    /// `x⁶/256 - 3x²/16`
    fn sextic() -> PotentialSpec {
        PotentialSpec::new(Model::Am, 0.0, 0, 1.0).unwrap()
    }

    fn quadratic_matrix(grid: &FdGrid) -> SymTridiagonal {
        let h2 = grid.spacing().powi(2);
        let xs = grid.interior();
        SymTridiagonal::new(
            xs.iter().map(|x| 2.0 / h2 + x * x).collect(),
            vec![-1.0 / h2; xs.len() - 1],
        )
        .unwrap()
    }

    #[test]
    fn harmonic_oscillator() {
        let grid = FdGrid::new(8.0, 4001, Domain::FullLine).unwrap();
        let e = quadratic_matrix(&grid).lowest_eigenvalues(3);
        for (got, want) in e.iter().zip([1.0, 3.0, 5.0]) {
            assert!((got - want).abs() < 1e-4, "{got}");
        }
        // second order: halving h cuts the error by ~4
        let e1 = quadratic_matrix(&FdGrid::new(8.0, 401, Domain::FullLine).unwrap()).lowest_eigenvalues(1)[0];
        let e2 = quadratic_matrix(&FdGrid::new(8.0, 801, Domain::FullLine).unwrap()).lowest_eigenvalues(1)[0];
        assert!((e1 - 1.0).abs() / (e2 - 1.0).abs() > 3.5);
        // half line picks the odd states
        let half = FdGrid::new(8.0, 2001, Domain::HalfLine).unwrap();
        assert!((quadratic_matrix(&half).lowest_eigenvalues(1)[0] - 3.0).abs() < 1e-4);
    }

    #[test]
    fn node_counts_follow_index() {
        let spec = PotentialSpec::new(Model::Bh, 2.0, 8, 0.5).unwrap();
        let grid = FdGrid::new(6.0, 2001, Domain::FullLine).unwrap();
        assert_eq!(fd_node_counts(&spec, &grid, 8), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn domain_is_expanded_or_rejected() {
        let spec = sextic();
        let small = FdGrid::new(4.0, 201, Domain::FullLine).unwrap();
        let out = fd_spectrum(&spec, &small, 2).unwrap();
        assert!(out.expansions > 0 && out.grid.x_max > 4.0);
        let tiny = FdGrid::new(0.01, 11, Domain::FullLine).unwrap();
        assert!(matches!(
            fd_spectrum(&spec, &tiny, 2),
            Err(Error::DomainTooSmall { .. })
        ));
        assert!(fd_spectrum(&spec, &small, 500).is_err());
    }

    #[test]
    fn qes_energies_embed() {
        for p in [
            ModelParams::am(10, 3.0, 1.0).unwrap(),
            ModelParams::bh(8, 1.0, 2.0).unwrap(),
            ModelParams::am(7, 1.0, 1.0).unwrap(),
        ] {
            let family = qes_family(&p).unwrap();
            let rep = embedding_check(&p, &family).unwrap();
            assert!(rep.passed, "{p:?} {rep:?}");
        }
    }

    #[test]
    fn ground_states_are_faithful() {
        for p in [
            ModelParams::am(10, 3.0, 1.0).unwrap(),
            ModelParams::bh(8, 1.0, 2.0).unwrap(),
            ModelParams::bh(8, 1.0, 20.0).unwrap(),
        ] {
            let rep = verify_ground_faithfulness(&p).unwrap();
            assert!(rep.passed, "{rep:?}");
        }
    }
}
