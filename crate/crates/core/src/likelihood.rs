//! Sufficient statistics `N[i, j, k]` and the log-likelihood
//! `Σ_i Σ_j Σ_k N[i,j,k] ln θ[i,j,k]`.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::network::{config_count, encode_config, Dag, Network};

/// Per-family count tables, laid out like the CPTs (`j * r + k`). Counts are
/// real-valued so expected counts from EM fit the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct Counts {
    cards: Vec<usize>,
    parents: Vec<Vec<usize>>,
    tables: Vec<Vec<f64>>,
}

impl Counts {
    pub fn zeros(cards: &[usize], dag: &Dag) -> Self {
        let parents: Vec<Vec<usize>> = (0..dag.len()).map(|i| dag.parents(i).to_vec()).collect();
        let tables = parents.iter().enumerate().map(|(i, ps)| vec![0.0; config_count(cards, ps) * cards[i]]).collect();
        Counts { cards: cards.to_vec(), parents, tables }
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn states(&self, i: usize) -> usize {
        self.cards[i]
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn table(&self, i: usize) -> &[f64] {
        &self.tables[i]
    }

    pub fn table_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.tables[i]
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.tables[i][j * self.cards[i] + k]
    }

    /// `Σ_k N[i, j, k]`.
    pub fn row_total(&self, i: usize, j: usize) -> f64 {
        let r = self.cards[i];
        self.tables[i][j * r..(j + 1) * r].iter().sum()
    }

    pub fn add_assign(&mut self, other: &Counts) {
        for (a, b) in self.tables.iter_mut().zip(&other.tables) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Adds one fully observed record with weight `w`.
    pub(crate) fn add_record(&mut self, record: &[Option<usize>], w: f64) {
        for i in 0..self.tables.len() {
            let j = encode_config(&self.cards, &self.parents[i], self.parents[i].iter().map(|&p| record[p].unwrap()));
            self.tables[i][j * self.cards[i] + record[i].unwrap()] += w;
        }
    }
}

/// Exact tallies from a complete dataset.
pub fn complete_counts(dag: &Dag, data: &Dataset) -> Result<Counts> {
    if !data.is_complete() {
        return Err(Error::IncompleteData);
    }
    let mut counts = Counts::zeros(&data.cardinalities(), dag);
    for rec in data.records() {
        counts.add_record(rec, 1.0);
    }
    Ok(counts)
}

/// Log-likelihood in nats. A positive count on a zero-probability parameter
/// makes it [`LogLikelihood::NegInfinity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LogLikelihood {
    Finite(f64),
    NegInfinity,
}

impl LogLikelihood {
    pub fn value(self) -> f64 {
        match self {
            LogLikelihood::Finite(v) => v,
            LogLikelihood::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, LogLikelihood::Finite(_))
    }

    pub fn from_value(v: f64) -> Self {
        if v == f64::NEG_INFINITY {
            LogLikelihood::NegInfinity
        } else {
            LogLikelihood::Finite(v)
        }
    }
}

/// `Σ N ln θ` with `0 · ln 0 = 0`.
pub fn counts_log_likelihood(net: &Network, counts: &Counts) -> LogLikelihood {
    let mut ll = 0.0;
    for (i, cpt) in net.cpts().iter().enumerate() {
        for (&n, &theta) in counts.table(i).iter().zip(cpt.values()) {
            if n > 0.0 {
                if theta <= 0.0 {
                    return LogLikelihood::NegInfinity;
                }
                ll += n * theta.ln();
            }
        }
    }
    LogLikelihood::Finite(ll)
}

pub fn log_likelihood(net: &Network, data: &Dataset) -> Result<LogLikelihood> {
    data.check_schema(net.variables())?;
    let counts = complete_counts(net.dag(), data)?;
    Ok(counts_log_likelihood(net, &counts))
}
