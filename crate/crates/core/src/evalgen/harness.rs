//! Train/test experiments: generate data from a known network, learn a
//! structure and its parameters, classify the test records and report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sample::GeneratorSpec;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::inference::{classify, JunctionTree};
use crate::network::{Assignment, Dag, Network};
use crate::params::{em, ems, DirichletPrior, EmOptions, EmsMode, Init};
use crate::structure::{fan, mwst_em, naive_bayes, sem, sem_plus_t, tan, SearchOptions, DEFAULT_FAN_THRESHOLD};

/// Fraction of correct decisions.
pub fn precision(correct: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    correct as f64 / total as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub correct: usize,
    pub total: usize,
    pub precision: f64,
    /// `confusion[true][predicted]`, with one extra last column counting
    /// records whose evidence has zero probability under the model (no
    /// decision, counted as incorrect).
    pub confusion: Vec<Vec<usize>>,
}

/// Classifies every test record from its `evidence` cells and compares the
/// decision with the recorded label.
pub fn evaluate(model: &Network, test: &Dataset, evidence: &[usize], decision: usize) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    test.check_schema(model.variables())?;
    if evidence.contains(&decision) {
        return Err(Error::TargetInEvidence(decision));
    }
    let jt = JunctionTree::new(model);
    let r = model.variable(decision).cardinality();
    let mut confusion = vec![vec![0usize; r + 1]; r];
    let mut correct = 0;
    for (row, rec) in test.records().iter().enumerate() {
        let truth = rec[decision].ok_or_else(|| Error::InvalidArgument(format!("test record {row} has no label")))?;
        let mut e = Assignment::empty(model.len());
        for &v in evidence {
            let s = rec[v].ok_or_else(|| {
                Error::InvalidArgument(format!("test record {row} lacks evidence variable {}", model.variable(v).name))
            })?;
            e.set(v, Some(s));
        }
        let predicted = match classify(&jt, &e, decision) {
            Ok(c) => c.state,
            Err(Error::ZeroEvidence) => r,
            Err(err) => return Err(err),
        };
        confusion[truth][predicted] += 1;
        if predicted == truth {
            correct += 1;
        }
    }
    Ok(Evaluation { correct, total: test.len(), precision: precision(correct, test.len()), confusion })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureKind {
    /// The structure of the generating network.
    Generating,
    #[serde(rename = "nb")]
    NaiveBayes,
    Tan,
    Fan,
    MwstEm,
    Sem,
    #[serde(rename = "sem+t")]
    SemPlusT,
    #[serde(skip)]
    Given(String, Dag),
}

impl StructureKind {
    pub fn id(&self) -> String {
        match self {
            StructureKind::Generating => "generating".into(),
            StructureKind::NaiveBayes => "nb".into(),
            StructureKind::Tan => "tan".into(),
            StructureKind::Fan => "fan".into(),
            StructureKind::MwstEm => "mwst-em".into(),
            StructureKind::Sem => "sem".into(),
            StructureKind::SemPlusT => "sem+t".into(),
            StructureKind::Given(name, _) => name.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Learner {
    Em,
    Ems,
}

/// One structure/learner combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub structure: StructureKind,
    pub learner: Learner,
    #[serde(default)]
    pub mode: EmsMode,
    /// FAN threshold in nats.
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Symmetric Dirichlet pseudo-count added to every parameter.
    #[serde(default)]
    pub prior_alpha: Option<f64>,
}

fn default_tau() -> f64 {
    DEFAULT_FAN_THRESHOLD
}

impl RunSpec {
    pub fn new(structure: StructureKind, learner: Learner) -> Self {
        RunSpec { structure, learner, mode: EmsMode::default(), tau: DEFAULT_FAN_THRESHOLD, prior_alpha: None }
    }
}

/// A generating network, the train/test split sizes, and the runs to compare
/// on that one split.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub network: Network,
    pub decision: usize,
    pub evidence: Vec<usize>,
    pub train: usize,
    pub test: usize,
    /// MCAR rate of the training cells; the decision column is never masked.
    pub missing_rate: f64,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub runs: Vec<RunSpec>,
    pub flags: Vec<String>,
}

impl ExperimentConfig {
    /// 60 training and 17 test records, 30% of training cells missing.
    pub fn tumor_preset(model_seed: u64, seed: u64, runs: Vec<RunSpec>) -> Self {
        let schema = super::tumor::tumor_schema(model_seed);
        ExperimentConfig {
            network: schema.network,
            decision: schema.decision,
            evidence: schema.features,
            train: 60,
            test: 17,
            missing_rate: 0.3,
            seed,
            tol: 1e-6,
            max_iter: 200,
            runs,
            flags: schema.flags,
        }
    }

    /// Training set (masked) and test set (complete), from one sample.
    pub fn split(&self) -> Result<(Dataset, Dataset)> {
        let mut spec = GeneratorSpec::new(self.network.clone(), self.train + self.test, self.missing_rate, self.seed);
        spec.exempt = vec![self.decision];
        let (complete, masked) = spec.generate()?;
        let train = masked.subset(0..self.train);
        let test = complete.subset(self.train..self.train + self.test);
        Ok((train, test))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub structure: String,
    pub algorithm: String,
    pub seed: u64,
    pub precision: f64,
    pub correct: usize,
    pub total: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Environment-dependent; omitted from reproducible output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    pub ll_trace: Vec<f64>,
    pub bound_satisfaction_trace: Vec<f64>,
    /// Decision-node state labels, the index space of `confusion`.
    pub states: Vec<String>,
    /// As [`Evaluation::confusion`].
    pub confusion: Vec<Vec<usize>>,
    /// Precision of the generating network on the same test records.
    pub bayes_rate: f64,
    pub edges: Vec<(usize, usize)>,
    pub flags: Vec<String>,
}

fn learn_structure(kind: &StructureKind, train: &Dataset, cfg: &ExperimentConfig, tau: f64) -> Result<Dag> {
    let search = SearchOptions { seed: cfg.seed, tol: cfg.tol, max_iter: cfg.max_iter, ..Default::default() };
    let features: Vec<usize> = (0..train.width()).filter(|&v| v != cfg.decision).collect();
    Ok(match kind {
        StructureKind::Generating => cfg.network.dag().clone(),
        StructureKind::NaiveBayes => naive_bayes(train.width(), cfg.decision, &features),
        StructureKind::Tan => tan(train, cfg.decision)?,
        StructureKind::Fan => fan(train, cfg.decision, tau)?,
        StructureKind::MwstEm => mwst_em(train, None, &search)?.dag().clone(),
        StructureKind::Sem => sem(train, &search)?.dag().clone(),
        StructureKind::SemPlusT => sem_plus_t(train, None, &search)?.dag().clone(),
        StructureKind::Given(_, dag) => dag.clone(),
    })
}

fn run_one(cfg: &ExperimentConfig, run: &RunSpec, train: &Dataset, test: &Dataset, bayes: f64) -> Result<ExperimentReport> {
    let dag = learn_structure(&run.structure, train, cfg, run.tau)?;
    let prior = match run.prior_alpha {
        Some(a) => Some(DirichletPrior::uniform(&train.cardinalities(), &dag, a)?),
        None => None,
    };
    let opts = EmOptions { init: Init::Random { seed: cfg.seed }, tol: cfg.tol, max_iter: cfg.max_iter, prior, keep_snapshots: false };
    let fit = match run.learner {
        Learner::Em => em(&dag, train, &opts)?,
        Learner::Ems => ems(&dag, train, &opts, run.mode)?,
    };
    let eval = evaluate(&fit.network, test, &cfg.evidence, cfg.decision)?;
    let algorithm = match run.learner {
        Learner::Em => "em".to_string(),
        Learner::Ems if run.mode == EmsMode::PostHoc => "ems-post-hoc".to_string(),
        Learner::Ems => "ems".to_string(),
    };
    Ok(ExperimentReport {
        structure: run.structure.id(),
        algorithm,
        seed: cfg.seed,
        precision: eval.precision,
        correct: eval.correct,
        total: eval.total,
        iterations: fit.trace.iterations.len(),
        converged: fit.trace.converged,
        wall_time_s: Some(fit.trace.wall_time_s),
        ll_trace: fit.trace.iterations.iter().map(|r| r.ll).collect(),
        bound_satisfaction_trace: fit.trace.iterations.iter().map(|r| r.bound_satisfaction).collect(),
        states: cfg.network.variable(cfg.decision).states.clone(),
        confusion: eval.confusion,
        bayes_rate: bayes,
        edges: dag.edges(),
        flags: cfg.flags.clone(),
    })
}

/// Runs every [`RunSpec`] of `cfg` on one shared train/test split, in
/// parallel. Reports come back in the order of `cfg.runs`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentReport>> {
    let (train, test) = cfg.split()?;
    let bayes = evaluate(&cfg.network, &test, &cfg.evidence, cfg.decision)?.precision;
    cfg.runs.par_iter().map(|run| run_one(cfg, run, &train, &test, bayes)).collect()
}

/// Summary table and per-iteration series for external plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `structure,algorithm,seed,precision,correct,total,iterations,converged,final_ll,bayes_rate`,
    /// sorted by precision (descending), then structure, algorithm and seed.
    pub table_csv: String,
    /// `structure,algorithm,seed,iteration,ll,bound_satisfaction`.
    pub series_csv: String,
    pub json: serde_json::Value,
}

pub const TABLE_COLUMNS: [&str; 10] =
    ["structure", "algorithm", "seed", "precision", "correct", "total", "iterations", "converged", "final_ll", "bayes_rate"];
pub const SERIES_COLUMNS: [&str; 6] = ["structure", "algorithm", "seed", "iteration", "ll", "bound_satisfaction"];

pub fn compare_runs(reports: &[ExperimentReport]) -> Result<Comparison> {
    let mut sorted: Vec<&ExperimentReport> = reports.iter().collect();
    sorted.sort_by(|a, b| {
        b.precision
            .total_cmp(&a.precision)
            .then_with(|| a.structure.cmp(&b.structure))
            .then_with(|| a.algorithm.cmp(&b.algorithm))
            .then_with(|| a.seed.cmp(&b.seed))
    });

    let mut table = csv::Writer::from_writer(Vec::new());
    table.write_record(TABLE_COLUMNS).map_err(csv_error)?;
    let mut series = csv::Writer::from_writer(Vec::new());
    series.write_record(SERIES_COLUMNS).map_err(csv_error)?;
    for r in &sorted {
        let final_ll = r.ll_trace.last().map(|x| x.to_string()).unwrap_or_default();
        table
            .write_record([
                r.structure.clone(),
                r.algorithm.clone(),
                r.seed.to_string(),
                r.precision.to_string(),
                r.correct.to_string(),
                r.total.to_string(),
                r.iterations.to_string(),
                r.converged.to_string(),
                final_ll,
                r.bayes_rate.to_string(),
            ])
            .map_err(csv_error)?;
        for (i, (ll, sat)) in r.ll_trace.iter().zip(&r.bound_satisfaction_trace).enumerate() {
            series
                .write_record([
                    r.structure.clone(),
                    r.algorithm.clone(),
                    r.seed.to_string(),
                    (i + 1).to_string(),
                    ll.to_string(),
                    sat.to_string(),
                ])
                .map_err(csv_error)?;
        }
    }
    let finish = |w: csv::Writer<Vec<u8>>| -> Result<String> {
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    };
    let json = serde_json::json!({ "runs": sorted });
    Ok(Comparison { table_csv: finish(table)?, series_csv: finish(series)?, json })
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidArgument(e.to_string())
}
