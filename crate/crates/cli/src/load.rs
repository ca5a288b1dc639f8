use std::fs;
use std::path::{Path, PathBuf};

use emsbn::evalgen::tumor;
use emsbn::{Assignment, Dag, Dataset, Error, ModelFile, Network, Result, Variable};

/// Where a model comes from: a JSON file or the seeded built-in tumor network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelRef {
    Tumor { seed: u64 },
    File(PathBuf),
}

impl ModelRef {
    /// `tumor` or `tumor:SEED` select the built-in network; anything else is a
    /// path, resolved against `base` when relative.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        if text == "tumor" {
            return Ok(ModelRef::Tumor { seed: 0 });
        }
        if let Some(seed) = text.strip_prefix("tumor:") {
            let seed = seed.parse().map_err(|_| parse_error(text, "tumor seed must be an unsigned integer"))?;
            return Ok(ModelRef::Tumor { seed });
        }
        let path = PathBuf::from(text);
        Ok(ModelRef::File(match base {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path,
        }))
    }
}

/// A loaded network plus the defaults that come with the built-in model.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub network: Network,
    pub decision: Option<usize>,
    pub features: Option<Vec<usize>>,
    pub flags: Vec<String>,
}

pub fn load_model(model: &ModelRef) -> Result<LoadedModel> {
    match model {
        ModelRef::Tumor { seed } => {
            let s = tumor::tumor_schema(*seed);
            Ok(LoadedModel { network: s.network, decision: Some(s.decision), features: Some(s.features), flags: s.flags })
        }
        ModelRef::File(path) => {
            let network = emsbn::network_from_json(&read(path)?)?;
            Ok(LoadedModel { network, decision: None, features: None, flags: Vec::new() })
        }
    }
}

pub fn load_model_arg(text: &str) -> Result<LoadedModel> {
    load_model(&ModelRef::parse(text, None)?)
}

/// Variables and graph of a model or structure-only file. The built-in tumor
/// reference yields its generating structure.
pub fn load_structure(text: &str) -> Result<(Vec<Variable>, Dag)> {
    match ModelRef::parse(text, None)? {
        ModelRef::Tumor { .. } => Ok((tumor::tumor_variables(), tumor::generating_structure())),
        ModelRef::File(path) => Ok(ModelFile::from_json(&read(&path)?)?.structure()?),
    }
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn read_csv(path: &Path, variables: &[Variable]) -> Result<Dataset> {
    Dataset::from_csv(&read(path)?, variables)
}

pub fn parse_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), message: message.into() }
}

pub fn var_index(variables: &[Variable], name: &str) -> Result<usize> {
    variables.iter().position(|v| v.name == name).ok_or_else(|| parse_error(name, "unknown variable"))
}

/// Parses `VAR=label,VAR=label`; an empty string is empty evidence.
pub fn parse_evidence(variables: &[Variable], text: &str) -> Result<Assignment> {
    let mut pairs = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, label) = item.split_once('=').ok_or_else(|| parse_error(item, "expected VAR=label"))?;
        pairs.push((name.trim(), label.trim()));
    }
    Assignment::parse_labels(variables, pairs)
}
