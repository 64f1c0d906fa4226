//! The two number-conserving two-mode boson models and their fixed-N blocks.
//!
//! * Atom–molecule conversion (AM): `H = (δ/2) n_a + (Ω/2)(a†a†b + b†aa)`,
//!   basis `|N-2m, m⟩`, `m = 0..=M`.
//! * Attractive two-site Bose–Hubbard (BH):
//!   `H = -(k/8)(n₁-n₂)² - (𝓔/2)(b₁†b₂ + b₂†b₁)`, basis `|m, N-m⟩`,
//!   `m = 0..=N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tridiag::{Spectrum, SymTridiagonal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Atomic–molecular conversion model.
    Am,
    /// Two-site Bose–Hubbard dimer.
    Bh,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Am => "am",
            Model::Bh => "bh",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "am" => Ok(Model::Am),
            "bh" => Ok(Model::Bh),
            other => Err(Error::InvalidParams(format!("unknown model `{other}`"))),
        }
    }
}

/// Physical couplings of either model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Couplings {
    Am { delta: f64, omega: f64 },
    Bh { k: f64, eps: f64 },
}

/// A validated model instance at fixed particle number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    n: usize,
    couplings: Couplings,
}

impl ModelParams {
    pub fn new(n: usize, couplings: Couplings) -> Result<Self> {
        match couplings {
            Couplings::Am { delta, omega } => {
                if !delta.is_finite() || !omega.is_finite() {
                    return Err(Error::InvalidParams("couplings must be finite".into()));
                }
                if omega <= 0.0 {
                    return Err(Error::InvalidParams(format!("omega must be > 0, got {omega}")));
                }
            }
            Couplings::Bh { k, eps } => {
                if !k.is_finite() || !eps.is_finite() {
                    return Err(Error::InvalidParams("couplings must be finite".into()));
                }
                if k <= 0.0 {
                    return Err(Error::InvalidParams(format!("k must be > 0, got {k}")));
                }
                if eps < 0.0 {
                    return Err(Error::InvalidParams(format!("eps must be >= 0, got {eps}")));
                }
            }
        }
        Ok(Self { n, couplings })
    }

    pub fn am(n: usize, delta: f64, omega: f64) -> Result<Self> {
        Self::new(n, Couplings::Am { delta, omega })
    }

    pub fn bh(n: usize, k: f64, eps: f64) -> Result<Self> {
        Self::new(n, Couplings::Bh { k, eps })
    }

    /// Parameters in the model's natural energy unit (Ω = 1 or k = 1).
    pub fn from_gamma(model: Model, n: usize, gamma: f64) -> Result<Self> {
        match model {
            Model::Am => Self::am(n, gamma, 1.0),
            Model::Bh => Self::bh(n, 1.0, gamma),
        }
    }

    pub fn model(&self) -> Model {
        match self.couplings {
            Couplings::Am { .. } => Model::Am,
            Couplings::Bh { .. } => Model::Bh,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn couplings(&self) -> Couplings {
        self.couplings
    }

    /// Dimensionless coupling: δ/Ω or 𝓔/k.
    pub fn gamma(&self) -> f64 {
        match self.couplings {
            Couplings::Am { delta, omega } => delta / omega,
            Couplings::Bh { k, eps } => eps / k,
        }
    }

    /// Energy unit of the model: Ω (AM) or k (BH).
    pub fn energy_unit(&self) -> f64 {
        match self.couplings {
            Couplings::Am { omega, .. } => omega,
            Couplings::Bh { k, .. } => k,
        }
    }

    /// Scale factor between many-body and Schrödinger-operator energies:
    /// Ω (AM) or k/2 (BH).
    pub fn chi(&self) -> f64 {
        match self.couplings {
            Couplings::Am { omega, .. } => omega,
            Couplings::Bh { k, .. } => 0.5 * k,
        }
    }

    /// AM parity `N mod 2`; zero for BH.
    pub fn parity(&self) -> usize {
        match self.model() {
            Model::Am => self.n % 2,
            Model::Bh => 0,
        }
    }

    /// Number of Bethe roots: `(N - p)/2` (AM) or `N` (BH).
    pub fn root_count(&self) -> usize {
        match self.model() {
            Model::Am => self.n / 2,
            Model::Bh => self.n,
        }
    }

    /// Hilbert-space dimension of the fixed-N sector.
    pub fn dimension(&self) -> usize {
        self.root_count() + 1
    }

    /// Same model with the dimensionless coupling replaced and the energy
    /// unit kept.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        match self.couplings {
            Couplings::Am { omega, .. } => Self::am(self.n, gamma * omega, omega),
            Couplings::Bh { k, .. } => Self::bh(self.n, k, gamma * k),
        }
    }
}

/// Occupations of the two modes for basis state `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLabel {
    /// `(n_a, n_b) = (N - 2m, m)`.
    Am { atoms: usize, molecules: usize },
    /// `(n₁, n₂) = (m, N - m)`.
    Bh { n1: usize, n2: usize },
}

/// H restricted to the fixed-N sector.
#[derive(Debug, Clone, PartialEq)]
pub struct FockBlock {
    params: ModelParams,
    matrix: SymTridiagonal,
}

impl FockBlock {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn matrix(&self) -> &SymTridiagonal {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.size()
    }

    pub fn diag(&self) -> &[f64] {
        self.matrix.diag()
    }

    pub fn offdiag(&self) -> &[f64] {
        self.matrix.offdiag()
    }

    pub fn basis_label(&self, m: usize) -> BasisLabel {
        let n = self.params.n();
        match self.params.model() {
            Model::Am => BasisLabel::Am {
                atoms: n - 2 * m,
                molecules: m,
            },
            Model::Bh => BasisLabel::Bh { n1: m, n2: n - m },
        }
    }
}

/// Coupling-free matrix elements of the off-diagonal operator:
/// `⟨m+1| b†aa |m⟩` (AM) or `⟨m+1| b₁†b₂ |m⟩` (BH).
pub fn hopping_elements(model: Model, n: usize) -> Vec<f64> {
    match model {
        Model::Am => (0..n / 2)
            .map(|m| {
                let atoms = (n - 2 * m) as f64;
                (atoms * (atoms - 1.0) * (m + 1) as f64).sqrt()
            })
            .collect(),
        Model::Bh => (0..n)
            .map(|m| (((m + 1) * (n - m)) as f64).sqrt())
            .collect(),
    }
}

/// Diagonal and off-diagonal elements for arbitrary (unvalidated) couplings.
pub(crate) fn block_elements(n: usize, couplings: Couplings) -> (Vec<f64>, Vec<f64>) {
    match couplings {
        Couplings::Am { delta, omega } => {
            let diag = (0..=n / 2)
                .map(|m| 0.5 * delta * (n - 2 * m) as f64)
                .collect();
            let off = hopping_elements(Model::Am, n).iter().map(|t| 0.5 * omega * t).collect();
            (diag, off)
        }
        Couplings::Bh { k, eps } => {
            let diag = (0..=n)
                .map(|m| {
                    let imbalance = 2.0 * m as f64 - n as f64;
                    -0.125 * k * imbalance * imbalance
                })
                .collect();
            let off = hopping_elements(Model::Bh, n).iter().map(|t| -0.5 * eps * t).collect();
            (diag, off)
        }
    }
}

pub fn build_block(params: &ModelParams) -> FockBlock {
    let (diag, offdiag) = block_elements(params.n(), params.couplings());
    let matrix = SymTridiagonal::new(diag, offdiag).expect("validated parameters give a finite block");
    FockBlock {
        params: *params,
        matrix,
    }
}

pub fn eigs(block: &FockBlock, want_vectors: bool) -> Spectrum {
    block.matrix.eigen(want_vectors)
}

/// Ground-state energy of the model.
pub fn ground_energy(params: &ModelParams) -> f64 {
    eigs(&build_block(params), false).eigenvalues[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// `⟨n_a⟩` (AM).
    NAtoms,
    /// `-⟨a†a†b + b†aa⟩/2` (AM).
    CoherenceAm,
    /// `⟨(n₁ - n₂)²⟩` (BH).
    ImbalanceSq,
    /// `+⟨b₁†b₂ + b₂†b₁⟩/2 = -∂𝓔/∂𝓔` (BH). The sign makes θ equal minus the
    /// coupling derivative of the energy, as for AM.
    CoherenceBh,
}

impl Observable {
    fn model(self) -> Model {
        match self {
            Observable::NAtoms | Observable::CoherenceAm => Model::Am,
            Observable::ImbalanceSq | Observable::CoherenceBh => Model::Bh,
        }
    }
}

/// Expectation value of `obs` in a (real) state of the fixed-N block.
pub fn expectation(params: &ModelParams, state: &[f64], obs: Observable) -> Result<f64> {
    let n = params.n();
    let dim = params.dimension();
    if state.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: state.len(),
        });
    }
    if obs.model() != params.model() {
        return Err(Error::InvalidParams(format!(
            "observable {obs:?} does not belong to model {}",
            params.model()
        )));
    }
    let norm: f64 = state.iter().map(|f| f * f).sum();
    if norm == 0.0 {
        return Err(Error::InvalidState("zero vector".into()));
    }
    let hop = hopping_elements(params.model(), n);
    let hopping: f64 = hop
        .iter()
        .enumerate()
        .map(|(m, t)| 2.0 * state[m] * state[m + 1] * t)
        .sum::<f64>()
        / norm;
    let value = match obs {
        Observable::NAtoms => {
            state
                .iter()
                .enumerate()
                .map(|(m, f)| f * f * (n - 2 * m) as f64)
                .sum::<f64>()
                / norm
        }
        Observable::ImbalanceSq => {
            state
                .iter()
                .enumerate()
                .map(|(m, f)| {
                    let d = 2.0 * m as f64 - n as f64;
                    f * f * d * d
                })
                .sum::<f64>()
                / norm
        }
        Observable::CoherenceAm => -0.5 * hopping,
        Observable::CoherenceBh => 0.5 * hopping,
    };
    Ok(value)
}
