//! Parameter estimation: closed-form MLE with Dirichlet pseudo-counts, EM for
//! incomplete data, interval bounds from a counting pass over the data, and
//! EMS (EM with a thresholding step into those bounds followed by row
//! renormalization).

mod bounds;
mod em;
mod expected;

pub use bounds::{bound_satisfaction, rbe_phase1_bounds, BoundTable, SATISFACTION_SLACK};
pub use em::{em, ems, ems_with_bounds, EmFit, EmOptions, EmTrace, EmsMode, Init, IterationRecord, Snapshot, TraceFile};
pub use expected::{expected_counts, expected_tables, EStep};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::{complete_counts, Counts};
use crate::network::{Cpt, Dag, Network, Variable};

/// Dirichlet pseudo-counts `α[i, j, k]`, laid out like the CPTs.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPrior {
    alpha: Counts,
}

impl DirichletPrior {
    /// The same pseudo-count on every parameter (1.0 gives Laplace smoothing).
    pub fn uniform(cards: &[usize], dag: &Dag, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("pseudo-count {alpha} must be a finite non-negative number")));
        }
        let mut counts = Counts::zeros(cards, dag);
        for i in 0..counts.len() {
            counts.table_mut(i).iter_mut().for_each(|a| *a = alpha);
        }
        Ok(DirichletPrior { alpha: counts })
    }

    /// Tallies of a complete set of imaginary cases, used as pseudo-counts.
    pub fn from_imaginary_cases(dag: &Dag, cases: &Dataset) -> Result<Self> {
        Ok(DirichletPrior { alpha: complete_counts(dag, cases)? })
    }

    pub fn alpha(&self) -> &Counts {
        &self.alpha
    }

    fn matches(&self, dag: &Dag) -> bool {
        self.alpha.len() == dag.len() && (0..dag.len()).all(|i| self.alpha.parents(i) == dag.parents(i))
    }
}

/// Result of an M-step: the network plus the rows that had no mass and were set uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub network: Network,
    pub zero_mass_rows: Vec<(usize, usize)>,
}

/// `θ = (N + α) / Σ_k (N + α)`, uniform on rows with no mass.
pub fn mle_from_counts(
    variables: &[Variable],
    dag: &Dag,
    counts: &Counts,
    prior: Option<&DirichletPrior>,
) -> Result<MleFit> {
    if let Some(p) = prior {
        if !p.matches(dag) {
            return Err(Error::SchemaMismatch("prior was built for a different structure".into()));
        }
    }
    let mut cpts = Vec::with_capacity(dag.len());
    let mut zero_mass_rows = Vec::new();
    for i in 0..dag.len() {
        let r = counts.states(i);
        let mut values = counts.table(i).to_vec();
        if let Some(p) = prior {
            for (v, a) in values.iter_mut().zip(p.alpha.table(i)) {
                *v += a;
            }
        }
        for (j, row) in values.chunks_mut(r).enumerate() {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|x| *x /= total);
            } else {
                row.iter_mut().for_each(|x| *x = 1.0 / r as f64);
                zero_mass_rows.push((i, j));
            }
        }
        cpts.push(Cpt::new(i, dag.parents(i).to_vec(), r, values));
    }
    let network = Network::new(variables.to_vec(), dag.clone(), cpts)?;
    Ok(MleFit { network, zero_mass_rows })
}

/// Closed-form estimate from complete data.
pub fn mle(dag: &Dag, data: &Dataset, prior: Option<&DirichletPrior>) -> Result<MleFit> {
    let counts = complete_counts(dag, data)?;
    mle_from_counts(data.variables(), dag, &counts, prior)
}
