//! JSON model format.
//!
//! ```json
//! {"variables":[{"name":"A","states":["0","1"]}],
//!  "edges":[[0,1]],
//!  "cpts":[{"child":0,"parents":[],"rows":[[0.5,0.5]]}]}
//! ```
//!
//! Rows follow the parent-configuration order of [`crate::network`].
//! Serialization is canonical: edges sorted, CPTs in variable order,
//! pretty-printed with two-space indentation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};
use crate::network::{validate_variables, Cpt, Dag, Network, Variable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptSpec {
    pub child: usize,
    pub parents: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

/// Unvalidated model as read from disk. A file without `cpts` describes a
/// structure only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub variables: Vec<VariableSpec>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub cpts: Vec<CptSpec>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_network(net: &Network) -> Self {
        ModelFile {
            variables: net
                .variables()
                .iter()
                .map(|v| VariableSpec { name: v.name.clone(), states: v.states.clone() })
                .collect(),
            edges: net.dag().edges().into_iter().map(|(p, c)| [p, c]).collect(),
            cpts: net
                .cpts()
                .iter()
                .map(|c| CptSpec {
                    child: c.child(),
                    parents: c.parents().to_vec(),
                    rows: c.iter_rows().map(<[f64]>::to_vec).collect(),
                })
                .collect(),
        }
    }

    /// Variables and graph, ignoring any CPTs.
    pub fn structure(&self) -> Result<(Vec<Variable>, Dag), ValidationError> {
        let variables: Vec<Variable> =
            self.variables.iter().map(|v| Variable::new(v.name.clone(), v.states.clone())).collect();
        validate_variables(&variables)?;
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|&[p, c]| (p, c)).collect();
        for &(p, c) in &edges {
            if p >= variables.len() || c >= variables.len() {
                return Err(ValidationError::UnknownVariable(p, c));
            }
        }
        let dag = Dag::from_edges(variables.len(), &edges)?;
        Ok((variables, dag))
    }

    /// Checks the model and builds a [`Network`].
    pub fn validate(&self) -> Result<Network, ValidationError> {
        let (variables, dag) = self.structure()?;
        let n = variables.len();
        let mut cpts = Vec::with_capacity(self.cpts.len());
        for spec in &self.cpts {
            if spec.child >= n {
                return Err(ValidationError::ShapeMismatch(format!("CPT for unknown variable {}", spec.child)));
            }
            let r = variables[spec.child].cardinality();
            if let Some(bad) = spec.rows.iter().find(|row| row.len() != r) {
                return Err(ValidationError::ShapeMismatch(format!(
                    "row of {} has {} entries, expected {}",
                    variables[spec.child].name,
                    bad.len(),
                    r
                )));
            }
            cpts.push(Cpt::new(spec.child, spec.parents.clone(), r, spec.rows.concat()));
        }
        Network::new(variables, dag, cpts)
    }
}

pub fn network_from_json(text: &str) -> Result<Network> {
    Ok(ModelFile::from_json(text)?.validate()?)
}

pub fn network_to_json(net: &Network) -> String {
    ModelFile::from_network(net).to_json()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"{
  "variables": [
    {
      "name": "A",
      "states": [
        "0",
        "1"
      ]
    },
    {
      "name": "B",
      "states": [
        "0",
        "1"
      ]
    }
  ],
  "edges": [
    [
      0,
      1
    ]
  ],
  "cpts": [
    {
      "child": 0,
      "parents": [],
      "rows": [
        [
          0.5,
          0.5
        ]
      ]
    },
    {
      "child": 1,
      "parents": [
        0
      ],
      "rows": [
        [
          0.7,
          0.3
        ],
        [
          0.2,
          0.8
        ]
      ]
    }
  ]
}
"#;

    #[test]
    fn canonical_round_trip() {
        let net = network_from_json(CHAIN).unwrap();
        assert_eq!(network_to_json(&net), CHAIN);
    }

    #[test]
    fn cyclic_model_rejected() {
        let text = r#"{"variables":[{"name":"A","states":["0","1"]},{"name":"B","states":["0","1"]}],
            "edges":[[0,1],[1,0]],"cpts":[]}"#;
        let err = ModelFile::from_json(text).unwrap().validate().unwrap_err();
        assert!(matches!(err, ValidationError::CycleDetected { .. }));
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = ModelFile::from_json("{\"variables\": [}").unwrap_err();
        match err {
            Error::Parse { location, .. } => assert!(location.starts_with("line 1")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
