use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::bounds::{rbe_phase1_bounds, BoundTable};
use super::expected::{expected_counts, EStep};
use super::{mle_from_counts, DirichletPrior};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::network::{config_count, Cpt, Dag, Network, Variable};

/// Starting parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Uniform,
    /// Each row drawn from a symmetric Dirichlet(1).
    Random { seed: u64 },
    Given(Network),
}

/// When the thresholding step runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmsMode {
    /// After every M-step.
    #[default]
    PerIteration,
    /// Once, after EM has converged.
    PostHoc,
}

#[derive(Debug, Clone)]
pub struct EmOptions {
    pub init: Init,
    pub tol: f64,
    pub max_iter: usize,
    pub prior: Option<DirichletPrior>,
    /// Keep the parameters of every iteration in the trace.
    pub keep_snapshots: bool,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions { init: Init::Random { seed: 0 }, tol: 1e-6, max_iter: 200, prior: None, keep_snapshots: false }
    }
}

impl EmOptions {
    pub fn seeded(seed: u64) -> Self {
        EmOptions { init: Init::Random { seed }, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Observed-data log-likelihood of the parameters produced by this iteration.
    pub ll: f64,
    /// `Σ N ln θ` over the expected counts at these parameters.
    pub expected_ll: f64,
    /// Percentage of parameters inside their bounds, after normalization.
    pub bound_satisfaction: f64,
    /// Same percentage right after thresholding, before normalization (EMS only).
    pub thresholded_satisfaction: Option<f64>,
}

/// Parameters after one iteration. `thresholded` holds the clamped,
/// not yet renormalized tables when thresholding ran.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub thresholded: Option<Vec<Vec<f64>>>,
    pub params: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmTrace {
    pub initial_ll: f64,
    pub iterations: Vec<IterationRecord>,
    pub wall_time_s: f64,
    pub converged: bool,
    /// `(variable, row)` pairs that had no mass in some M-step.
    pub zero_mass_rows: Vec<(usize, usize)>,
    /// `(variable, row)` pairs whose clamped row summed to zero.
    pub degenerate_rows: Vec<(usize, usize)>,
    pub snapshots: Vec<Snapshot>,
}

impl EmTrace {
    pub fn final_ll(&self) -> f64 {
        self.iterations.last().map_or(self.initial_ll, |r| r.ll)
    }

    pub fn final_bound_satisfaction(&self) -> f64 {
        self.iterations.last().map_or(0.0, |r| r.bound_satisfaction)
    }

    pub fn to_file(&self) -> TraceFile {
        TraceFile {
            iterations: self
                .iterations
                .iter()
                .map(|r| TraceEntry { ll: r.ll, bound_satisfaction: r.bound_satisfaction })
                .collect(),
            wall_time_s: self.wall_time_s,
            converged: self.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub ll: f64,
    pub bound_satisfaction: f64,
}

/// Trace JSON: `{"iterations":[{"ll","bound_satisfaction"}],"wall_time_s","converged"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub iterations: Vec<TraceEntry>,
    pub wall_time_s: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub network: Network,
    pub trace: EmTrace,
    pub bounds: BoundTable,
}

fn initial_network(variables: &[Variable], dag: &Dag, init: &Init) -> Result<Network> {
    let cards: Vec<usize> = variables.iter().map(Variable::cardinality).collect();
    match init {
        Init::Uniform => Ok(Network::uniform(variables.to_vec(), dag.clone())?),
        Init::Given(net) => {
            if net.variables() != variables || net.dag() != dag {
                return Err(Error::SchemaMismatch("initial network differs in variables or structure".into()));
            }
            Ok(net.clone())
        }
        Init::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let cpts = (0..dag.len())
                .map(|i| {
                    let r = cards[i];
                    let q = config_count(&cards, dag.parents(i));
                    let mut values = Vec::with_capacity(q * r);
                    for _ in 0..q {
                        let draws: Vec<f64> = (0..r).map(|_| Exp1.sample(&mut rng)).collect::<Vec<f64>>();
                        let total: f64 = draws.iter().sum();
                        values.extend(draws.iter().map(|x| x / total));
                    }
                    Cpt::new(i, dag.parents(i).to_vec(), r, values)
                })
                .collect();
            Ok(Network::new(variables.to_vec(), dag.clone(), cpts)?)
        }
    }
}

fn expected_ll(net: &Network, e: &EStep) -> f64 {
    crate::likelihood::counts_log_likelihood(net, &e.counts).value()
}

struct Thresholding<'a> {
    bounds: &'a BoundTable,
    mode: EmsMode,
}

/// Clamps every row into its bounds, then renormalizes it. Returns the clamped
/// tables before normalization.
fn threshold(net: &Network, bounds: &BoundTable, degenerate: &mut Vec<(usize, usize)>) -> Result<(Network, Vec<Vec<f64>>)> {
    let mut clamped = Vec::with_capacity(net.len());
    let mut cpts = Vec::with_capacity(net.len());
    for (i, cpt) in net.cpts().iter().enumerate() {
        let mut values = cpt.values().to_vec();
        bounds.clamp(i, &mut values);
        clamped.push(values.clone());
        let r = cpt.states();
        for (j, row) in values.chunks_mut(r).enumerate() {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|x| *x /= total);
            } else {
                row.iter_mut().for_each(|x| *x = 1.0 / r as f64);
                degenerate.push((i, j));
            }
        }
        cpts.push(Cpt::new(i, cpt.parents().to_vec(), r, values));
    }
    Ok((net.with_cpts(cpts)?, clamped))
}

fn satisfaction_of_tables(tables: &[Vec<f64>], bounds: &BoundTable) -> f64 {
    let (mut inside, mut total) = (0, 0);
    for (i, t) in tables.iter().enumerate() {
        let (a, b) = bounds.satisfied(i, t);
        inside += a;
        total += b;
    }
    if total == 0 {
        100.0
    } else {
        100.0 * inside as f64 / total as f64
    }
}

fn check_observed(data: &Dataset, prior: Option<&DirichletPrior>) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    for (v, var) in data.variables().iter().enumerate() {
        let observed = data.records().iter().any(|r| r[v].is_some());
        let has_prior = prior.is_some_and(|p| p.alpha().table(v).iter().any(|&a| a > 0.0));
        if !observed && !has_prior {
            return Err(Error::NoObservedData(var.name.clone()));
        }
    }
    Ok(())
}

fn run(dag: &Dag, data: &Dataset, opts: &EmOptions, thresholding: Option<Thresholding<'_>>) -> Result<EmFit> {
    let start = Instant::now();
    check_observed(data, opts.prior.as_ref())?;
    if opts.tol.is_nan() || opts.tol < 0.0 {
        return Err(Error::InvalidArgument("tolerance must be non-negative".into()));
    }
    let variables = data.variables();
    let owned_bounds;
    let (bounds, mode) = match &thresholding {
        Some(t) => (t.bounds, Some(t.mode)),
        None => {
            owned_bounds = rbe_phase1_bounds(dag, data);
            (&owned_bounds, None)
        }
    };
    let complete = data.is_complete();

    let mut net = initial_network(variables, dag, &opts.init)?;
    let mut estep = expected_counts(&net, data)?;
    let mut trace = EmTrace {
        initial_ll: estep.log_likelihood,
        iterations: Vec::new(),
        wall_time_s: 0.0,
        converged: false,
        zero_mass_rows: Vec::new(),
        degenerate_rows: Vec::new(),
        snapshots: Vec::new(),
    };
    let mut previous = estep.log_likelihood;

    for _ in 0..opts.max_iter.max(1) {
        let fit = mle_from_counts(variables, dag, &estep.counts, opts.prior.as_ref())?;
        for z in fit.zero_mass_rows {
            if !trace.zero_mass_rows.contains(&z) {
                trace.zero_mass_rows.push(z);
            }
        }
        net = fit.network;
        let mut thresholded = None;
        if mode == Some(EmsMode::PerIteration) {
            let (normalized, clamped) = threshold(&net, bounds, &mut trace.degenerate_rows)?;
            net = normalized;
            thresholded = Some(clamped);
        }
        estep = expected_counts(&net, data)?;
        trace.iterations.push(IterationRecord {
            ll: estep.log_likelihood,
            expected_ll: expected_ll(&net, &estep),
            bound_satisfaction: net.bound_satisfaction(bounds),
            thresholded_satisfaction: thresholded.as_ref().map(|t| satisfaction_of_tables(t, bounds)),
        });
        if opts.keep_snapshots {
            trace.snapshots.push(Snapshot {
                thresholded,
                params: net.cpts().iter().map(|c| c.values().to_vec()).collect(),
            });
        }
        // complete data: the E-step does not depend on θ, so the next M-step
        // would reproduce the same parameters
        if complete || (estep.log_likelihood - previous).abs() < opts.tol {
            trace.converged = true;
            break;
        }
        previous = estep.log_likelihood;
    }

    if mode == Some(EmsMode::PostHoc) {
        let (normalized, clamped) = threshold(&net, bounds, &mut trace.degenerate_rows)?;
        net = normalized;
        estep = expected_counts(&net, data)?;
        let thresholded_satisfaction = Some(satisfaction_of_tables(&clamped, bounds));
        trace.iterations.push(IterationRecord {
            ll: estep.log_likelihood,
            expected_ll: expected_ll(&net, &estep),
            bound_satisfaction: net.bound_satisfaction(bounds),
            thresholded_satisfaction,
        });
        if opts.keep_snapshots {
            trace.snapshots.push(Snapshot {
                thresholded: Some(clamped),
                params: net.cpts().iter().map(|c| c.values().to_vec()).collect(),
            });
        }
    }
    trace.wall_time_s = start.elapsed().as_secs_f64();
    Ok(EmFit { network: net, trace, bounds: bounds.clone() })
}

/// Expectation-maximization for incomplete data. Stops when the observed-data
/// log-likelihood changes by less than `tol` or after `max_iter` iterations.
pub fn em(dag: &Dag, data: &Dataset, opts: &EmOptions) -> Result<EmFit> {
    run(dag, data, opts, None)
}

/// EM with thresholding: after the M-step each parameter is clamped into its
/// interval from [`rbe_phase1_bounds`] (computed once from `data`) and every
/// row is renormalized.
pub fn ems(dag: &Dag, data: &Dataset, opts: &EmOptions, mode: EmsMode) -> Result<EmFit> {
    let bounds = rbe_phase1_bounds(dag, data);
    ems_with_bounds(dag, data, opts, mode, &bounds)
}

/// EMS with caller-supplied intervals.
pub fn ems_with_bounds(dag: &Dag, data: &Dataset, opts: &EmOptions, mode: EmsMode, bounds: &BoundTable) -> Result<EmFit> {
    if bounds.variables() != dag.len() || (0..dag.len()).any(|i| bounds.parents(i) != dag.parents(i)) {
        return Err(Error::SchemaMismatch("bounds were built for a different structure".into()));
    }
    run(dag, data, opts, Some(Thresholding { bounds, mode }))
}
