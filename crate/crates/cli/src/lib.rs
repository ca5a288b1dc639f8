//! Command-line front end and HTTP diagnosis service for [`emsbn`].
//!
//! Every subcommand is a thin wrapper over one library call: inputs are
//! parsed, the call is made, and its result is serialized as JSON.

mod commands;
mod load;
pub mod service;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use emsbn::{Error, ValidationError};
use serde_json::json;

pub use commands::run;
pub use load::{load_model, LoadedModel, ModelRef};

/// Exit status for malformed input.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for failures during a computation.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "emsbn", version, about = "Discrete Bayesian networks: inference, EM/EMS learning, structure search")]
pub struct Cli {
    /// Write the result to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model file and print a summary.
    Validate {
        /// Model file, or `tumor[:SEED]` for the built-in tumor network.
        model: String,
    },
    /// Posterior distributions given evidence.
    Infer {
        /// Model file or `tumor[:SEED]`.
        model: String,
        /// Observed values as `VAR=label,VAR=label`.
        #[arg(long, default_value = "")]
        evidence: String,
        /// Query one variable; all unobserved variables otherwise.
        #[arg(long)]
        target: Option<String>,
    },
    /// Most probable state of a decision variable.
    Classify {
        /// Model file or `tumor[:SEED]`.
        model: String,
        /// Observed values as `VAR=label,VAR=label`.
        #[arg(long, default_value = "")]
        evidence: String,
        /// Variable to classify.
        #[arg(long)]
        decision: String,
    },
    /// Fit CPTs for a fixed structure.
    LearnParams {
        /// Model or structure-only file (`variables` and `edges`).
        structure: String,
        /// CSV with one column per variable; `?` marks a missing cell.
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = ParamAlgo::Em)]
        algo: ParamAlgo,
        /// When EMS thresholds into the bounds.
        #[arg(long, value_enum, default_value_t = Mode::PerIteration)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        /// CSV of complete imaginary cases used as Dirichlet pseudo-counts.
        #[arg(long, value_name = "CSV")]
        prior: Option<PathBuf>,
        /// Write the per-iteration trace as JSON.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        /// Include wall-clock time in the trace.
        #[arg(long)]
        timings: bool,
    },
    /// Interval bounds on every parameter from a counting pass over the data.
    Bounds {
        /// Model or structure-only file.
        structure: String,
        /// CSV with one column per variable; `?` marks a missing cell.
        data: PathBuf,
    },
    /// Learn a structure from data.
    LearnStructure {
        /// CSV with one column per variable; `?` marks a missing cell.
        data: PathBuf,
        #[arg(long, value_enum)]
        algo: StructureAlgo,
        /// Class variable for nb, tan and fan.
        #[arg(long)]
        class: Option<String>,
        /// FAN threshold in nats.
        #[arg(long, default_value_t = emsbn::structure::DEFAULT_FAN_THRESHOLD)]
        tau: f64,
        /// Tree root for mwst, mwst-em and sem+t.
        #[arg(long)]
        root: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        max_parents: usize,
        /// Model or structure file fixing the variables and state order.
        #[arg(long, value_name = "FILE")]
        schema: Option<String>,
        /// Write the search provenance and score as JSON.
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Sample a dataset from a network and mask it; prints CSV.
    Generate {
        /// JSON with `model`, `records`, `missing_rate`, `seed`, `overrides` and `exempt`.
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Also write the unmasked sample.
        #[arg(long, value_name = "FILE")]
        complete: Option<PathBuf>,
    },
    /// Run a train/test experiment and compare the runs.
    Evaluate {
        /// JSON with `model`, `train`, `test`, `missing_rate`, `seed` and `runs`.
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Write the summary table as CSV.
        #[arg(long, value_name = "FILE")]
        table: Option<PathBuf>,
        /// Write the per-iteration series as CSV.
        #[arg(long, value_name = "FILE")]
        series: Option<PathBuf>,
        /// Include wall-clock times in the report.
        #[arg(long)]
        timings: bool,
    },
    /// Serve a model over HTTP for interactive diagnosis.
    Serve {
        #[arg(long, default_value = "tumor")]
        model: String,
        /// Decision variable; `DT` for the tumor network.
        #[arg(long)]
        decision: Option<String>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParamAlgo {
    Mle,
    Em,
    Ems,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    PerIteration,
    PostHoc,
}

impl From<Mode> for emsbn::params::EmsMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::PerIteration => emsbn::params::EmsMode::PerIteration,
            Mode::PostHoc => emsbn::params::EmsMode::PostHoc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StructureAlgo {
    Nb,
    Tan,
    Fan,
    Mwst,
    MwstEm,
    Sem,
    #[value(name = "sem+t")]
    SemPlusT,
}

/// A failed invocation: the exit status plus the JSON body written to stderr.
#[derive(Debug)]
pub struct CliError {
    pub status: i32,
    pub code: String,
    pub detail: String,
}

impl CliError {
    pub fn validation(code: &str, detail: impl Into<String>) -> Self {
        CliError { status: EXIT_VALIDATION, code: code.into(), detail: detail.into() }
    }

    pub fn runtime(code: &str, detail: impl Into<String>) -> Self {
        CliError { status: EXIT_RUNTIME, code: code.into(), detail: detail.into() }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.code, "detail": self.detail }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let input = e.is_validation() || matches!(e, Error::InvalidArgument(_) | Error::TargetInEvidence(_) | Error::IncompleteData);
        let status = if input { EXIT_VALIDATION } else { EXIT_RUNTIME };
        CliError { status, code: error_code(&e).into(), detail: e.to_string() }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        Error::from(e).into()
    }
}

/// Stable machine-readable name of an error, used in JSON error bodies.
pub fn error_code(e: &Error) -> &'static str {
    match e {
        Error::Validation(v) => match v {
            ValidationError::CycleDetected { .. } => "CycleDetected",
            ValidationError::ShapeMismatch(_) => "ShapeMismatch",
            ValidationError::RowNotNormalized { .. } => "RowNotNormalized",
            ValidationError::DuplicateVariable(_) => "DuplicateVariable",
            ValidationError::DuplicateState { .. } => "DuplicateState",
            ValidationError::TooFewStates(_) => "TooFewStates",
            ValidationError::UnknownVariable(..) => "UnknownVariable",
            ValidationError::ProbabilityOutOfRange { .. } => "ProbabilityOutOfRange",
        },
        Error::Parse { .. } => "ParseError",
        Error::MissingParentValue { .. } => "MissingParentValue",
        Error::PartialAssignment => "PartialAssignment",
        Error::IncompleteData => "IncompleteData",
        Error::ZeroEvidence => "ZeroEvidence",
        Error::TargetInEvidence(_) => "TargetInEvidence",
        Error::StateSpaceTooLarge { .. } => "StateSpaceTooLarge",
        Error::NoObservedData(_) => "NoObservedData",
        Error::NoCompletePairs(..) => "NoCompletePairs",
        Error::EmptyData => "EmptyData",
        Error::EmptyTestSet => "EmptyTestSet",
        Error::SchemaMismatch(_) => "SchemaMismatch",
        Error::StateOutOfRange { .. } => "StateOutOfRange",
        Error::InvalidArgument(_) => "InvalidArgument",
        Error::Io(_) => "Io",
    }
}
