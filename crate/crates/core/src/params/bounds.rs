//! Probability intervals from a single counting pass over the data.
//!
//! For variable `i` and parent configuration `j`, let `n[i,j,k]` count records
//! fully observed on the family with `X_i = k` and parents in `j`, and let
//! `m[i,j]` count records whose observed parents agree with `j` but where the
//! child or some parent is missing. Assigning all the ambiguous records
//! against or in favour of state `k` gives
//!
//! ```text
//! min = n[i,j,k] / (n[i,j,.] + m[i,j])
//! max = (n[i,j,k] + m[i,j]) / (n[i,j,.] + m[i,j])
//! ```
//!
//! and `[0, 1]` when no record is compatible with `j`.

use serde::Serialize;

use crate::dataset::Dataset;
use crate::network::{config_count, decode_config, encode_config, Cpt, Dag, Network};

/// Slack used when checking whether a parameter lies inside its interval.
pub const SATISFACTION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTable {
    #[serde(skip)]
    cards: Vec<usize>,
    #[serde(skip)]
    parents: Vec<Vec<usize>>,
    min: Vec<Vec<f64>>,
    max: Vec<Vec<f64>>,
}

impl BoundTable {
    /// `[0, 1]` for every parameter of `dag`.
    pub fn vacuous(cards: &[usize], dag: &Dag) -> Self {
        let parents: Vec<Vec<usize>> = (0..dag.len()).map(|i| dag.parents(i).to_vec()).collect();
        let sizes: Vec<usize> = (0..dag.len()).map(|i| config_count(cards, &parents[i]) * cards[i]).collect();
        BoundTable {
            cards: cards.to_vec(),
            min: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            max: sizes.iter().map(|&n| vec![1.0; n]).collect(),
            parents,
        }
    }

    pub fn variables(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self, i: usize, j: usize, k: usize) -> f64 {
        self.min[i][j * self.cards[i] + k]
    }

    pub fn max(&self, i: usize, j: usize, k: usize) -> f64 {
        self.max[i][j * self.cards[i] + k]
    }

    pub fn min_table(&self, i: usize) -> &[f64] {
        &self.min[i]
    }

    pub fn max_table(&self, i: usize) -> &[f64] {
        &self.max[i]
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    /// Whether every interval is `[0, 1]`.
    pub fn is_vacuous(&self) -> bool {
        self.min.iter().flatten().all(|&x| x == 0.0) && self.max.iter().flatten().all(|&x| x == 1.0)
    }

    /// Clamps every parameter of variable `i` into its interval, in place.
    pub fn clamp(&self, i: usize, values: &mut [f64]) {
        for ((v, &lo), &hi) in values.iter_mut().zip(&self.min[i]).zip(&self.max[i]) {
            if *v < lo {
                *v = lo;
            } else if *v > hi {
                *v = hi;
            }
        }
    }

    /// Number of `(i, j, k)` entries lying inside their interval, and the total.
    pub fn satisfied(&self, i: usize, values: &[f64]) -> (usize, usize) {
        let inside = values
            .iter()
            .zip(&self.min[i])
            .zip(&self.max[i])
            .filter(|((&v, &lo), &hi)| lo - SATISFACTION_SLACK <= v && v <= hi + SATISFACTION_SLACK)
            .count();
        (inside, values.len())
    }

    pub fn to_json(&self, net_or_names: &[String]) -> serde_json::Value {
        let vars: Vec<serde_json::Value> = (0..self.variables())
            .map(|i| {
                let r = self.cards[i];
                serde_json::json!({
                    "variable": net_or_names[i],
                    "parents": self.parents[i].iter().map(|&p| &net_or_names[p]).collect::<Vec<_>>(),
                    "min": self.min[i].chunks(r).collect::<Vec<_>>(),
                    "max": self.max[i].chunks(r).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({ "bounds": vars })
    }
}

pub fn rbe_phase1_bounds(dag: &Dag, data: &Dataset) -> BoundTable {
    let cards = data.cardinalities();
    let n_vars = dag.len();
    let parents: Vec<Vec<usize>> = (0..n_vars).map(|i| dag.parents(i).to_vec()).collect();
    let mut exact: Vec<Vec<f64>> =
        (0..n_vars).map(|i| vec![0.0; config_count(&cards, &parents[i]) * cards[i]]).collect();
    let mut ambiguous: Vec<Vec<f64>> = (0..n_vars).map(|i| vec![0.0; config_count(&cards, &parents[i])]).collect();

    for (rec, w) in data.weighted_unique() {
        for i in 0..n_vars {
            let ps = &parents[i];
            let fully = rec[i].is_some() && ps.iter().all(|&p| rec[p].is_some());
            if fully {
                let j = encode_config(&cards, ps, ps.iter().map(|&p| rec[p].unwrap()));
                exact[i][j * cards[i] + rec[i].unwrap()] += w;
                continue;
            }
            // every configuration agreeing with the observed parents
            let q = config_count(&cards, ps);
            for j in 0..q {
                let values = decode_config(&cards, ps, j);
                if ps.iter().zip(&values).all(|(&p, &x)| rec[p].is_none_or(|o| o == x)) {
                    ambiguous[i][j] += w;
                }
            }
        }
    }

    let mut min = Vec::with_capacity(n_vars);
    let mut max = Vec::with_capacity(n_vars);
    for i in 0..n_vars {
        let r = cards[i];
        let mut lo = vec![0.0; exact[i].len()];
        let mut hi = vec![1.0; exact[i].len()];
        for (j, &m) in ambiguous[i].iter().enumerate() {
            let row = &exact[i][j * r..(j + 1) * r];
            let denom: f64 = row.iter().sum::<f64>() + m;
            if denom == 0.0 {
                continue;
            }
            for k in 0..r {
                lo[j * r + k] = row[k] / denom;
                hi[j * r + k] = (row[k] + m) / denom;
            }
        }
        min.push(lo);
        max.push(hi);
    }
    BoundTable { cards, parents, min, max }
}

/// Percentage of parameters lying inside their intervals (within
/// [`SATISFACTION_SLACK`]).
pub fn bound_satisfaction(cpts: &[Cpt], bounds: &BoundTable) -> f64 {
    let (mut inside, mut total) = (0, 0);
    for (i, cpt) in cpts.iter().enumerate() {
        let (a, b) = bounds.satisfied(i, cpt.values());
        inside += a;
        total += b;
    }
    if total == 0 {
        100.0
    } else {
        100.0 * inside as f64 / total as f64
    }
}

impl Network {
    /// Shorthand for [`bound_satisfaction`] on this network's CPTs.
    pub fn bound_satisfaction(&self, bounds: &BoundTable) -> f64 {
        bound_satisfaction(self.cpts(), bounds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Variable;

    fn single(rows: &[Option<usize>]) -> Dataset {
        Dataset::new(vec![Variable::with_cardinality("A", 2)], rows.iter().map(|&c| vec![c]).collect()).unwrap()
    }

    #[test]
    fn single_node_with_one_missing() {
        let b = rbe_phase1_bounds(&Dag::empty(1), &single(&[Some(1), Some(1), Some(0), None]));
        assert_eq!(b.min(0, 0, 1), 0.5);
        assert_eq!(b.max(0, 0, 1), 0.75);
        assert_eq!(b.min(0, 0, 0), 0.25);
        assert_eq!(b.max(0, 0, 0), 0.5);
    }

    #[test]
    fn complete_data_collapses_to_frequency() {
        let b = rbe_phase1_bounds(&Dag::empty(1), &single(&[Some(1), Some(1), Some(0)]));
        assert_eq!(b.min(0, 0, 1), b.max(0, 0, 1));
        assert!((b.min(0, 0, 1) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn all_missing_is_vacuous() {
        let b = rbe_phase1_bounds(&Dag::empty(1), &single(&[None, None]));
        assert!(b.is_vacuous());
    }

    #[test]
    fn missing_parent_is_a_wildcard() {
        let vars = vec![Variable::with_cardinality("P", 2), Variable::with_cardinality("C", 2)];
        let d = Dataset::new(vars, vec![vec![None, Some(1)], vec![Some(0), Some(0)]]).unwrap();
        let b = rbe_phase1_bounds(&Dag::from_edges(2, &[(0, 1)]).unwrap(), &d);
        // config P=0: n = (1, 0), m = 1
        assert_eq!((b.min(1, 0, 0), b.max(1, 0, 0)), (0.5, 1.0));
        // config P=1: n = 0, m = 1
        assert_eq!((b.min(1, 1, 1), b.max(1, 1, 1)), (0.0, 1.0));
    }

    #[test]
    fn satisfaction_examples() {
        let b = rbe_phase1_bounds(&Dag::empty(1), &single(&[Some(0), Some(0), Some(1), None]));
        // state0: [0.5, 0.75], state1: [0.25, 0.5]
        let violating = Cpt::new(0, vec![], 2, vec![0.9, 0.1]);
        assert_eq!(bound_satisfaction(&[violating], &b), 0.0);
        let mut clamped = vec![0.9, 0.1];
        b.clamp(0, &mut clamped);
        assert_eq!(clamped, vec![0.75, 0.25]);
        assert_eq!(bound_satisfaction(&[Cpt::new(0, vec![], 2, clamped)], &b), 100.0);
        let vacuous = rbe_phase1_bounds(&Dag::empty(1), &single(&[None]));
        assert_eq!(bound_satisfaction(&[Cpt::new(0, vec![], 2, vec![0.9, 0.1])], &vacuous), 100.0);
    }
}
