use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use emsbn::evalgen::{compare_runs, run_experiment, ExperimentConfig, GeneratorSpec, RunSpec};
use emsbn::inference::query_posterior;
use emsbn::params::{em, ems, mle, rbe_phase1_bounds, DirichletPrior, EmOptions, Init};
use emsbn::structure::{chow_liu, fan, mwst_em, naive_bayes, sem, sem_plus_t, tan, SearchOptions, StructureCandidate};
use emsbn::{classify, Dag, Dataset, Error, JunctionTree, ModelFile, Result, Variable};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::load::{self, load_model, load_model_arg, load_structure, parse_evidence, read, read_csv, var_index, ModelRef};
use crate::{service, Cli, CliError, Command, ParamAlgo, StructureAlgo};

/// Runs one invocation, writing its result to stdout or `--out`.
pub fn run(cli: Cli) -> std::result::Result<(), CliError> {
    let text = match cli.command {
        Command::Serve { model, decision, host, port } => return serve(&model, decision.as_deref(), &host, port),
        command => execute(command)?,
    };
    match &cli.out {
        Some(path) => write_file(path, &text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(Error::from)?;
        }
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s
}

/// Output text of every non-server subcommand.
pub(crate) fn execute(command: Command) -> Result<String> {
    match command {
        Command::Validate { model } => validate(&model),
        Command::Infer { model, evidence, target } => infer(&model, &evidence, target.as_deref()),
        Command::Classify { model, evidence, decision } => classify_cmd(&model, &evidence, &decision),
        Command::LearnParams { structure, data, algo, mode, seed, tol, max_iter, prior, trace, timings } => {
            let (variables, dag) = load_structure(&structure)?;
            let data = read_csv(&data, &variables)?;
            let prior = match prior {
                Some(path) => Some(DirichletPrior::from_imaginary_cases(&dag, &read_csv(&path, &variables)?)?),
                None => None,
            };
            let network = match algo {
                ParamAlgo::Mle => mle(&dag, &data, prior.as_ref())?.network,
                ParamAlgo::Em | ParamAlgo::Ems => {
                    let opts = EmOptions { init: Init::Random { seed }, tol, max_iter, prior, keep_snapshots: false };
                    let fit = if algo == ParamAlgo::Em { em(&dag, &data, &opts)? } else { ems(&dag, &data, &opts, mode.into())? };
                    if let Some(path) = trace {
                        let mut t = serde_json::to_value(fit.trace.to_file()).expect("trace serializes");
                        if !timings {
                            t.as_object_mut().expect("trace is an object").remove("wall_time_s");
                        }
                        write_file(&path, &pretty(&t))?;
                    }
                    fit.network
                }
            };
            Ok(emsbn::network_to_json(&network))
        }
        Command::Bounds { structure, data } => {
            let (variables, dag) = load_structure(&structure)?;
            let data = read_csv(&data, &variables)?;
            let names: Vec<String> = variables.iter().map(|v| v.name.clone()).collect();
            Ok(pretty(&rbe_phase1_bounds(&dag, &data).to_json(&names)))
        }
        Command::LearnStructure { data, algo, class, tau, root, seed, max_parents, schema, report } => {
            let text = read(&data)?;
            let data = match schema {
                Some(s) => Dataset::from_csv(&text, &load_structure(&s)?.0)?,
                None => Dataset::from_csv_inferred(&text)?,
            };
            let (file, provenance) = learn_structure(&data, algo, class.as_deref(), tau, root.as_deref(), seed, max_parents)?;
            if let Some(path) = report {
                write_file(&path, &pretty(&provenance))?;
            }
            Ok(file.to_json())
        }
        Command::Generate { spec, complete } => {
            let g: GenerateFile = parse_json(&spec)?;
            let (complete_data, masked) = g.into_spec(spec.parent())?.generate()?;
            if let Some(path) = complete {
                write_file(&path, &complete_data.to_csv())?;
            }
            Ok(masked.to_csv())
        }
        Command::Evaluate { config, table, series, timings } => {
            let file: ExperimentFile = parse_json(&config)?;
            let cfg = file.into_config(config.parent())?;
            let mut reports = run_experiment(&cfg)?;
            if !timings {
                reports.iter_mut().for_each(|r| r.wall_time_s = None);
            }
            let comparison = compare_runs(&reports)?;
            if let Some(path) = table {
                write_file(&path, &comparison.table_csv)?;
            }
            if let Some(path) = series {
                write_file(&path, &comparison.series_csv)?;
            }
            Ok(pretty(&comparison.json))
        }
        Command::Serve { .. } => unreachable!("serve is dispatched before execute"),
    }
}

fn validate(model: &str) -> Result<String> {
    let net = load_model_arg(model)?.network;
    Ok(pretty(&json!({
        "valid": true,
        "variables": net.len(),
        "edges": net.dag().edge_count(),
        "parameters": net.dimension(),
    })))
}

fn infer(model: &str, evidence: &str, target: Option<&str>) -> Result<String> {
    let net = load_model_arg(model)?.network;
    let vars = net.variables();
    let evidence = parse_evidence(vars, evidence)?;
    let targets: Vec<usize> = match target {
        Some(name) => vec![var_index(vars, name)?],
        None => (0..net.len()).filter(|&v| evidence.get(v).is_none()).collect(),
    };
    let jt = JunctionTree::new(&net);
    let mut out = BTreeMap::new();
    for t in targets {
        out.insert(vars[t].name.clone(), query_posterior(&jt, &evidence, t)?.distribution);
    }
    Ok(pretty(&json!(out)))
}

fn classify_cmd(model: &str, evidence: &str, decision: &str) -> Result<String> {
    let net = load_model_arg(model)?.network;
    let vars = net.variables();
    let evidence = parse_evidence(vars, evidence)?;
    let d = var_index(vars, decision)?;
    let c = classify(&JunctionTree::new(&net), &evidence, d)?;
    Ok(pretty(&json!({
        "decision": vars[d].name,
        "state": vars[d].states[c.state],
        "states": vars[d].states,
        "distribution": c.posterior.distribution,
    })))
}

fn learn_structure(
    data: &Dataset,
    algo: StructureAlgo,
    class: Option<&str>,
    tau: f64,
    root: Option<&str>,
    seed: u64,
    max_parents: usize,
) -> Result<(ModelFile, Value)> {
    let vars = data.variables();
    let class = || -> Result<usize> {
        let name = class.ok_or_else(|| Error::InvalidArgument(format!("--class is required for {algo:?}")))?;
        var_index(vars, name)
    };
    let root = root.map(|r| var_index(vars, r)).transpose()?;
    let opts = SearchOptions { seed, max_parents, ..SearchOptions::seeded(seed) };
    let structure_only = |dag: Dag, algorithm: &str| {
        (structure_file(vars, &dag), json!({ "algorithm": algorithm, "seed": seed }))
    };
    let searched = |c: StructureCandidate| {
        let report = json!({ "provenance": c.provenance, "score_history": c.score_history });
        (ModelFile::from_network(&c.network), report)
    };
    Ok(match algo {
        StructureAlgo::Nb => {
            let c = class()?;
            let features: Vec<usize> = (0..vars.len()).filter(|&v| v != c).collect();
            structure_only(naive_bayes(vars.len(), c, &features), "nb")
        }
        StructureAlgo::Tan => structure_only(tan(data, class()?)?, "tan"),
        StructureAlgo::Fan => structure_only(fan(data, class()?, tau)?, "fan"),
        StructureAlgo::Mwst => structure_only(chow_liu(data, root.unwrap_or(0))?, "mwst"),
        StructureAlgo::MwstEm => searched(mwst_em(data, root, &opts)?),
        StructureAlgo::Sem => searched(sem(data, &opts)?),
        StructureAlgo::SemPlusT => searched(sem_plus_t(data, root, &opts)?),
    })
}

/// A structure-only model file: variables and edges, no CPTs.
fn structure_file(variables: &[Variable], dag: &Dag) -> ModelFile {
    ModelFile {
        variables: variables
            .iter()
            .map(|v| emsbn::model_file::VariableSpec { name: v.name.clone(), states: v.states.clone() })
            .collect(),
        edges: dag.edges().into_iter().map(|(p, c)| [p, c]).collect(),
        cpts: Vec::new(),
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| {
        load::parse_error(format!("{} line {} column {}", path.display(), e.line(), e.column()), e.to_string())
    })
}

/// `generate --spec` file. Model paths are relative to the spec file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateFile {
    model: String,
    records: usize,
    #[serde(default)]
    missing_rate: f64,
    #[serde(default)]
    seed: u64,
    /// Per-variable missingness rates.
    #[serde(default)]
    overrides: BTreeMap<String, f64>,
    /// Variables never masked.
    #[serde(default)]
    exempt: Vec<String>,
}

impl GenerateFile {
    fn into_spec(self, base: Option<&Path>) -> Result<GeneratorSpec> {
        let network = load_model(&ModelRef::parse(&self.model, base)?)?.network;
        let vars = network.variables().to_vec();
        let mut spec = GeneratorSpec::new(network, self.records, self.missing_rate, self.seed);
        for (name, rate) in &self.overrides {
            spec.overrides.insert(var_index(&vars, name)?, *rate);
        }
        spec.exempt = self.exempt.iter().map(|n| var_index(&vars, n)).collect::<Result<_>>()?;
        Ok(spec)
    }
}

/// `evaluate --config` file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    #[serde(default = "default_model")]
    model: String,
    /// Defaults to `DT` for the tumor network; required otherwise.
    #[serde(default)]
    decision: Option<String>,
    /// Observed variables at test time; defaults to the tumor features, or to
    /// every variable but the decision.
    #[serde(default)]
    evidence: Option<Vec<String>>,
    train: usize,
    test: usize,
    missing_rate: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default = "default_max_iter")]
    max_iter: usize,
    runs: Vec<RunSpec>,
}

fn default_model() -> String {
    "tumor".into()
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    200
}

impl ExperimentFile {
    fn into_config(self, base: Option<&Path>) -> Result<ExperimentConfig> {
        let model = load_model(&ModelRef::parse(&self.model, base)?)?;
        let vars = model.network.variables().to_vec();
        let model_decision = model.decision;
        let decision = match (&self.decision, model.decision) {
            (Some(name), _) => var_index(&vars, name)?,
            (None, Some(d)) => d,
            (None, None) => return Err(Error::InvalidArgument("config needs a \"decision\" variable".into())),
        };
        let evidence = match (&self.evidence, model.features) {
            (Some(names), _) => names.iter().map(|n| var_index(&vars, n)).collect::<Result<_>>()?,
            (None, Some(f)) if model_decision == Some(decision) => f,
            _ => (0..vars.len()).filter(|&v| v != decision).collect(),
        };
        Ok(ExperimentConfig {
            network: model.network,
            decision,
            evidence,
            train: self.train,
            test: self.test,
            missing_rate: self.missing_rate,
            seed: self.seed,
            tol: self.tol,
            max_iter: self.max_iter,
            runs: self.runs,
            flags: model.flags,
        })
    }
}

fn serve(model: &str, decision: Option<&str>, host: &str, port: u16) -> std::result::Result<(), CliError> {
    let loaded = load_model_arg(model)?;
    let decision = match (decision, loaded.decision) {
        (Some(name), _) => var_index(loaded.network.variables(), name)?,
        (None, Some(d)) => d,
        (None, None) => return Err(CliError::validation("InvalidArgument", "--decision is required for model files")),
    };
    let app = service::router(service::Service::new(loaded.network, decision));
    let runtime = tokio::runtime::Runtime::new().map_err(Error::from)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await.map_err(Error::from)?;
        eprintln!("listening on http://{}", listener.local_addr().map_err(Error::from)?);
        axum::serve(listener, app).await.map_err(Error::from)?;
        Ok(())
    })
}
