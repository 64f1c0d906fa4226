//! Command-line front end for `qpclab`.
//!
//! Exit codes: 0 pass, 1 numerical failure, 2 configuration error,
//! 3 inconclusive (for example no crossover inside the window).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bethe::{solve_all, RECONSTRUCTION_TOLERANCE};
use crate::classical::{classify_order, crossover_coupling, scaling_checks, ModelFamily};
use crate::correlators::{fig1_grid, fig1_summary, sweep, SweepOptions, SweepResult, SweepRow, FIG1_SIZES};
use crate::error::Error;
use crate::hamiltonians::{build_block, eigs, Model, ModelParams};
use crate::qes::{node_ordering_holds, perturbed, qes_family, residual_constancy, PotentialSpec};
use crate::schrodinger_fd::{embedding_check, verify_ground_faithfulness};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NUMERICAL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;

/// Magnitude used by `--inject-error` without a value.
pub const DEFAULT_INJECTED_ERROR: f64 = 1e-3;
/// Half-width and spacing of the default crossover window.
const CROSSOVER_HALF_WIDTH: f64 = 0.05;
const CROSSOVER_SPACING: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "qpclab", version, about = "Exact and classical analysis of two-mode bosonic crossovers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// All eigenvalues of the fixed-N Hamiltonian.
    Spectrum(RunArgs),
    /// Bethe roots of every eigenstate with residuals and energy cross-checks.
    Bethe(RunArgs),
    /// QES residual constancy, node ordering, FD embedding and faithfulness.
    QesVerify(RunArgs),
    /// Classical crossover report.
    Classical(RunArgs),
    /// Ground-state correlators over a γ grid.
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
}

/// Flags shared by every subcommand; the config file uses the same keys.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunArgs {
    /// `am` (atom-molecule) or `bh` (two-site Bose-Hubbard).
    #[arg(long, value_parser = parse_model)]
    pub model: Option<Model>,
    /// Particle number.
    #[arg(long)]
    pub n: Option<usize>,
    /// Particle numbers for scaling tables.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// AM detuning δ.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// AM conversion amplitude Ω, default 1.
    #[arg(long)]
    pub omega: Option<f64>,
    /// BH interaction k, default 1.
    #[arg(long)]
    pub k: Option<f64>,
    /// BH tunnelling 𝓔.
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// Dimensionless coupling δ/Ω or 𝓔/k.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Lower end of a uniform γ grid.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_min: Option<f64>,
    /// Upper end of a uniform γ grid.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_max: Option<f64>,
    /// Number of γ grid points, at least 2.
    #[arg(long)]
    pub gamma_count: Option<usize>,
    /// Output format, default csv.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file, `-` for standard output, or a directory for presets.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; output does not depend on it.
    #[arg(long, env = "QPCLAB_JOBS")]
    pub jobs: Option<usize>,
    /// Preset sweep writing one file per N into `--out`.
    #[arg(long, value_enum)]
    pub figure: Option<Figure>,
    /// Shift every certified root by this amount before verification.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.001", allow_hyphen_values = true)]
    pub inject_error: Option<f64>,
    /// Override of the Bethe residual tolerance.
    #[arg(long)]
    pub residual_tolerance: Option<f64>,
    /// JSON file of defaults; command-line flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse::<Model>().map_err(|e| e.to_string())
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParams(_) | Error::DimensionMismatch { .. } => EXIT_CONFIG,
            Error::NoCrossover | Error::WindowOutOfRange(_) | Error::InsufficientSamples { .. } => EXIT_INCONCLUSIVE,
            _ => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: format!("i/o: {e}"),
        }
    }
}

type CmdResult = Result<u8, Failure>;

impl RunArgs {
    /// Config-file values, overridden by any flag given on the command line.
    pub fn resolve(self) -> Result<Self, Failure> {
        let Some(path) = self.config.clone() else {
            return self.validate();
        };
        let text = fs::read_to_string(&path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        let base: RunArgs = serde_json::from_str(&text)
            .map_err(|e| Failure::config(format!("invalid config {}: {e}", path.display())))?;
        macro_rules! overlay {
            ($($f:ident),*) => { RunArgs { $($f: self.$f.or(base.$f),)* config: None } };
        }
        overlay!(
            model, n, n_list, delta, omega, k, eps, gamma, gamma_min, gamma_max, gamma_count, format, out, jobs,
            figure, inject_error, residual_tolerance
        )
        .validate()
    }

    fn validate(self) -> Result<Self, Failure> {
        if self.jobs == Some(0) {
            return Err(Failure::config("jobs must be >= 1"));
        }
        if self.gamma_count.is_some_and(|c| c < 2) {
            return Err(Failure::config("gamma-count must be >= 2"));
        }
        Ok(self)
    }

    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    fn model(&self) -> Result<Model, Failure> {
        self.model.ok_or_else(|| Failure::config("--model is required"))
    }

    fn n(&self) -> Result<usize, Failure> {
        self.n.ok_or_else(|| Failure::config("--n is required"))
    }

    /// Physical couplings or γ, never both for the same role.
    fn params(&self) -> Result<ModelParams, Failure> {
        let model = self.model()?;
        let n = self.n()?;
        let params = match model {
            Model::Am => {
                if self.k.is_some() || self.eps.is_some() {
                    return Err(Failure::config("--k/--eps do not apply to the am model"));
                }
                let omega = self.omega.unwrap_or(1.0);
                let delta = match (self.delta, self.gamma) {
                    (Some(_), Some(_)) => return Err(Failure::config("give --delta or --gamma, not both")),
                    (Some(d), None) => d,
                    (None, Some(g)) => g * omega,
                    (None, None) => return Err(Failure::config("--delta or --gamma is required")),
                };
                ModelParams::am(n, delta, omega)
            }
            Model::Bh => {
                if self.delta.is_some() || self.omega.is_some() {
                    return Err(Failure::config("--delta/--omega do not apply to the bh model"));
                }
                let k = self.k.unwrap_or(1.0);
                let eps = match (self.eps, self.gamma) {
                    (Some(_), Some(_)) => return Err(Failure::config("give --eps or --gamma, not both")),
                    (Some(e), None) => e,
                    (None, Some(g)) => g * k,
                    (None, None) => return Err(Failure::config("--eps or --gamma is required")),
                };
                ModelParams::bh(n, k, eps)
            }
        };
        Ok(params?)
    }

    fn grid(&self) -> Result<Option<Vec<f64>>, Failure> {
        match (self.gamma_min, self.gamma_max, self.gamma_count) {
            (None, None, None) => Ok(None),
            (Some(lo), Some(hi), Some(count)) => {
                if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                    return Err(Failure::config("gamma-min must be below gamma-max"));
                }
                Ok(Some(
                    (0..count)
                        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                        .collect(),
                ))
            }
            _ => Err(Failure::config("a grid needs gamma-min, gamma-max and gamma-count")),
        }
    }

    /// Energy unit for sweeps: Ω or k, default 1.
    fn energy_unit(&self) -> Result<f64, Failure> {
        match self.model()? {
            Model::Am => {
                if self.delta.is_some() || self.k.is_some() || self.eps.is_some() {
                    return Err(Failure::config("sweeps take --gamma or a gamma grid, with --omega as the unit"));
                }
                Ok(self.omega.unwrap_or(1.0))
            }
            Model::Bh => {
                if self.eps.is_some() || self.delta.is_some() || self.omega.is_some() {
                    return Err(Failure::config("sweeps take --gamma or a gamma grid, with --k as the unit"));
                }
                Ok(self.k.unwrap_or(1.0))
            }
        }
    }
}

/// Parse arguments, run, and return the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: Command) -> CmdResult {
    let (args, f): (RunArgs, fn(&RunArgs) -> CmdResult) = match command {
        Command::Spectrum(a) => (a, cmd_spectrum),
        Command::Bethe(a) => (a, cmd_bethe),
        Command::QesVerify(a) => (a, cmd_qes_verify),
        Command::Classical(a) => (a, cmd_classical),
        Command::Sweep(a) => (a, cmd_sweep),
    };
    let args = args.resolve()?;
    let jobs = args.jobs.unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    pool.install(|| f(&args))
}

/// A column-oriented table rendered as CSV or JSON.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Float(Option<f64>),
    Int(usize),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(Some(v)) => format_float(*v),
            Cell::Float(None) => String::new(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Float(Some(v)) if v.is_finite() => json!(v),
            Cell::Float(_) => serde_json::Value::Null,
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(Some(v))
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits, `.` separator, independent of locale.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        // writes to memory cannot fail
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn to_json(&self, meta: serde_json::Value) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::Value::Object(
                    self.header
                        .iter()
                        .zip(r)
                        .map(|(h, c)| (h.to_string(), c.json()))
                        .collect(),
                )
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&json!({ "meta": meta, "rows": rows })).expect("json values");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format, meta: serde_json::Value) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(meta),
        }
    }
}

fn base_meta(command: &str, args: &RunArgs) -> serde_json::Value {
    json!({
        "command": command,
        "model": args.model,
        "n": args.n,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "schema_version": crate::correlators::SCHEMA_VERSION,
    })
}

fn emit(out: Option<&Path>, text: &str) -> io::Result<()> {
    match out {
        None => io::stdout().lock().write_all(text.as_bytes()),
        Some(p) if p == Path::new("-") => io::stdout().lock().write_all(text.as_bytes()),
        Some(p) => fs::write(p, text),
    }
}

pub fn cmd_spectrum(args: &RunArgs) -> CmdResult {
    let params = args.params()?;
    let spectrum = eigs(&build_block(&params), false);
    let mut t = Table::new(vec!["index", "energy"]);
    for (i, e) in spectrum.eigenvalues.iter().enumerate() {
        t.push(vec![i.into(), (*e).into()]);
    }
    let mut meta = base_meta("spectrum", args);
    meta["gamma"] = json!(params.gamma());
    emit(args.out.as_deref(), &t.render(args.format(), meta))?;
    Ok(EXIT_OK)
}

pub fn cmd_bethe(args: &RunArgs) -> CmdResult {
    let params = args.params()?;
    let tolerance = args.residual_tolerance.unwrap_or(RECONSTRUCTION_TOLERANCE);
    let mut t = Table::new(vec![
        "state",
        "eigenvalue",
        "bethe_energy",
        "energy_diff",
        "residual",
        "root",
        "re",
        "im",
    ]);
    let states = solve_all(&params)?;
    let mut worst = 0.0_f64;
    for (s, state) in states.iter().enumerate() {
        worst = worst.max(state.residual);
        for (j, v) in state.roots.roots.iter().enumerate() {
            t.push(vec![
                s.into(),
                state.eigenvalue.into(),
                state.bethe_energy.into(),
                (state.bethe_energy - state.eigenvalue).into(),
                state.residual.into(),
                j.into(),
                v.re.into(),
                v.im.into(),
            ]);
        }
    }
    let mut meta = base_meta("bethe", args);
    meta["gamma"] = json!(params.gamma());
    meta["residual_tolerance"] = json!(tolerance);
    emit(args.out.as_deref(), &t.render(args.format(), meta))?;
    Ok(if worst > tolerance { EXIT_NUMERICAL } else { EXIT_OK })
}

pub fn cmd_qes_verify(args: &RunArgs) -> CmdResult {
    let params = args.params()?;
    let spec = PotentialSpec::from_params(&params);
    let mut family = qes_family(&params)?;
    if let Some(shift) = args.inject_error {
        family = family
            .iter()
            .map(|s| perturbed(&params, s, shift))
            .collect::<Result<_, _>>()?;
    }
    let mut t = Table::new(vec!["check", "state", "value", "bound", "passed"]);
    let mut all = true;
    for (i, state) in family.iter().enumerate() {
        let r = residual_constancy(state, &spec)?;
        all &= r.passed;
        t.push(vec![
            "residual".into(),
            i.into(),
            r.max_abs_residual.into(),
            r.bound.into(),
            r.passed.into(),
        ]);
    }
    let ordered = node_ordering_holds(&params, &family);
    all &= ordered;
    t.push(vec![
        "node_ordering".into(),
        Cell::Text(String::new()),
        Cell::Float(None),
        Cell::Float(None),
        ordered.into(),
    ]);
    let embedding = embedding_check(&params, &family)?;
    all &= embedding.passed;
    t.push(vec![
        "fd_embedding".into(),
        Cell::Text(String::new()),
        embedding.max_difference.into(),
        embedding.tolerance.into(),
        embedding.passed.into(),
    ]);
    let faithful = verify_ground_faithfulness(&params)?;
    all &= faithful.passed;
    t.push(vec![
        "faithfulness".into(),
        Cell::Text(String::new()),
        faithful.difference.abs().into(),
        faithful.tolerance.into(),
        faithful.passed.into(),
    ]);
    let mut meta = base_meta("qes-verify", args);
    meta["gamma"] = json!(params.gamma());
    meta["injected_error"] = json!(args.inject_error);
    emit(args.out.as_deref(), &t.render(args.format(), meta))?;
    Ok(if all { EXIT_OK } else { EXIT_NUMERICAL })
}

pub fn cmd_classical(args: &RunArgs) -> CmdResult {
    let model = args.model()?;
    let n = args.n()?;
    let family = ModelFamily::new(model, n);
    let gc = family.closed_form_crossover();
    let grid = match args.grid()? {
        Some(g) => g,
        None => {
            let steps = (2.0 * CROSSOVER_HALF_WIDTH / CROSSOVER_SPACING).round() as usize;
            (0..=steps)
                .map(|i| gc - CROSSOVER_HALF_WIDTH + i as f64 * CROSSOVER_SPACING)
                .collect()
        }
    };
    let coupling = crossover_coupling(model, n)?;
    let report = classify_order(&family, &grid)?;
    let mut t = Table::new(vec!["section", "key", "value"]);
    let row = |t: &mut Table, s: &str, k: String, v: Cell| t.push(vec![s.into(), k.into(), v]);
    row(&mut t, "crossover", "gamma_c_closed_form".into(), coupling.closed_form.into());
    row(&mut t, "crossover", "gamma_c_numeric".into(), coupling.numeric.into());
    row(&mut t, "crossover", "gamma_c_window".into(), report.gamma_c.into());
    row(&mut t, "crossover", "agree".into(), coupling.agree.into());
    row(&mut t, "crossover", "order".into(), report.order.into());
    if let Some(b) = &report.beta {
        row(&mut t, "exponent", "beta".into(), b.beta.into());
        row(&mut t, "exponent", "beta_stderr".into(), b.stderr.into());
    }
    let scaling = match &args.n_list {
        Some(ns) => Some(scaling_checks(model, ns, args.gamma.unwrap_or(-5.0))?),
        None => None,
    };
    if let Some(s) = &scaling {
        for r in &s.rows {
            row(&mut t, "scaling", format!("chi_e_tilde0[{}]", r.n), r.chi_e_tilde0.into());
            row(&mut t, "scaling", format!("per_particle[{}]", r.n), r.per_particle.into());
        }
        if let Some(v) = s.slope {
            row(&mut t, "scaling", "slope".into(), v.into());
        }
        if let Some(v) = s.identity_error {
            row(&mut t, "scaling", "identity_error".into(), v.into());
        }
    }
    let text = match args.format() {
        Format::Csv => t.to_csv(),
        Format::Json => {
            let mut meta = base_meta("classical", args);
            meta["window"] = json!([grid[0], grid[grid.len() - 1]]);
            let mut s = serde_json::to_string_pretty(&json!({
                "meta": meta,
                "crossover": coupling,
                "report": report,
                "scaling": scaling,
            }))
            .expect("json values");
            s.push('\n');
            s
        }
    };
    emit(args.out.as_deref(), &text)?;
    Ok(if coupling.agree { EXIT_OK } else { EXIT_NUMERICAL })
}

/// Column layout shared by the CSV and JSON writers.
pub const SWEEP_COLUMNS: [&str; 15] = [
    "gamma",
    "scaled",
    "energy",
    "gap",
    "theta",
    "theta_per_n",
    "occupation",
    "theta_hf",
    "theta_hf_diff",
    "occupation_hf",
    "occupation_hf_diff",
    "classical_energy",
    "classical_theta",
    "d2_energy",
    "status",
];

pub fn sweep_table(result: &SweepResult) -> Table {
    let mut t = Table::new(SWEEP_COLUMNS.to_vec());
    for r in &result.rows {
        let SweepRow {
            gamma,
            scaled,
            energy,
            gap,
            theta,
            theta_per_n,
            occupation,
            theta_hf,
            theta_hf_diff,
            occupation_hf,
            occupation_hf_diff,
            classical_energy,
            classical_theta,
            d2_energy,
            status,
        } = r.clone();
        t.push(vec![
            gamma.into(),
            scaled.into(),
            energy.into(),
            gap.into(),
            theta.into(),
            theta_per_n.into(),
            occupation.into(),
            theta_hf.into(),
            theta_hf_diff.into(),
            occupation_hf.into(),
            occupation_hf_diff.into(),
            classical_energy.into(),
            classical_theta.into(),
            d2_energy.into(),
            status.into(),
        ]);
    }
    t
}

fn render_sweep(result: &SweepResult, format: Format) -> String {
    let meta = serde_json::to_value(&result.meta).expect("meta serialises");
    sweep_table(result).render(format, meta)
}

fn sweep_failed(result: &SweepResult) -> bool {
    result.rows.iter().any(|r| r.status.starts_with("error"))
}

pub fn cmd_sweep(args: &RunArgs) -> CmdResult {
    let format = args.format();
    if args.figure == Some(Figure::Fig1) {
        if args.model.is_some_and(|m| m != Model::Am) {
            return Err(Failure::config("fig1 is an am preset"));
        }
        let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
        if dir == Path::new("-") {
            return Err(Failure::config("fig1 writes one file per N; --out must be a directory"));
        }
        fs::create_dir_all(&dir)?;
        let ext = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let mut failed = false;
        for n in FIG1_SIZES {
            let result = sweep(Model::Am, n, &fig1_grid(n), &SweepOptions::default())?;
            failed |= sweep_failed(&result);
            fs::write(dir.join(format!("fig1_n{n}.{ext}")), render_sweep(&result, format))?;
            let s = fig1_summary(&result)?;
            println!(
                "n={} locator={:.4} atom_fraction_at_2.5={:.6} monotone={}",
                s.n, s.locator, s.atom_fraction_at_probe, s.monotone
            );
        }
        return Ok(if failed { EXIT_NUMERICAL } else { EXIT_OK });
    }
    let model = args.model()?;
    let n = args.n()?;
    let unit = args.energy_unit()?;
    let grid = match (args.grid()?, args.gamma) {
        (Some(_), Some(_)) => return Err(Failure::config("give --gamma or a grid, not both")),
        (Some(g), None) => g,
        (None, Some(g)) => vec![g],
        (None, None) => return Err(Failure::config("sweep needs --gamma, a gamma grid or --figure")),
    };
    let opts = SweepOptions {
        energy_unit: unit,
        ..SweepOptions::default()
    };
    let result = sweep(model, n, &grid, &opts)?;
    emit(args.out.as_deref(), &render_sweep(&result, format))?;
    Ok(if sweep_failed(&result) { EXIT_NUMERICAL } else { EXIT_OK })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(extra: &[&str]) -> RunArgs {
        let mut v = vec!["qpclab", "spectrum"];
        v.extend_from_slice(extra);
        match Cli::try_parse_from(v).unwrap().command {
            Command::Spectrum(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn coupling_resolution() {
        let p = args(&["--model", "am", "--n", "4", "--gamma", "2", "--omega", "0.5"]).params().unwrap();
        assert_eq!(p.couplings(), crate::hamiltonians::Couplings::Am { delta: 1.0, omega: 0.5 });
        assert!(args(&["--model", "am", "--n", "4", "--gamma", "2", "--delta", "1"]).params().is_err());
        assert!(args(&["--model", "bh", "--n", "4", "--delta", "1"]).params().is_err());
        assert!(args(&["--model", "bh", "--n", "4"]).params().is_err());
        let p = args(&["--model", "bh", "--n", "3", "--eps", "0.5", "--k", "2"]).params().unwrap();
        assert_eq!(p.gamma(), 0.25);
    }

    #[test]
    fn config_overlay_and_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"model": "bh", "n": 5, "eps": 2.0, "format": "json"}"#).unwrap();
        let a = args(&["--config", path.to_str().unwrap(), "--n", "7"]).resolve().unwrap();
        assert_eq!((a.model, a.n, a.eps, a.format), (Some(Model::Bh), Some(7), Some(2.0), Some(Format::Json)));
        fs::write(&path, r#"{"model": "bh", "bogus": 1}"#).unwrap();
        let e = args(&["--config", path.to_str().unwrap()]).resolve().unwrap_err();
        assert_eq!(e.code, EXIT_CONFIG);
        assert_eq!(args(&["--jobs", "0"]).resolve().unwrap_err().code, EXIT_CONFIG);
    }

    #[test]
    fn table_rendering() {
        let mut t = Table::new(vec!["a", "b", "c"]);
        t.push(vec![1.5.into(), Cell::Float(None), "x,y".into()]);
        assert_eq!(t.to_csv(), "a,b,c\n1.5000000000000000e0,,\"x,y\"\n");
        let j: serde_json::Value = serde_json::from_str(&t.to_json(json!({}))).unwrap();
        assert_eq!(j["rows"][0]["b"], serde_json::Value::Null);
    }
}
