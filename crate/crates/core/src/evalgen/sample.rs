//! Ancestral sampling, MCAR masking and seeded random networks.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::network::{Cpt, Dag, Network, Variable};

/// Draws `n` complete records, each variable in topological order.
pub fn forward_sample(net: &Network, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = net.dag().topological_order();
    let cards = net.cardinalities();
    let mut records = Vec::with_capacity(n);
    let mut x = vec![0usize; net.len()];
    for _ in 0..n {
        for &v in &order {
            let cpt = net.cpt(v);
            let j = cpt.parents().iter().fold(0, |acc, &p| acc * cards[p] + x[p]);
            x[v] = draw(cpt.row(j), &mut rng);
        }
        records.push(x.iter().map(|&s| Some(s)).collect());
    }
    Dataset::new(net.variables().to_vec(), records).expect("sampled states are in range")
}

fn draw(row: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left `acc` just under 1: take the last state with mass
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("missingness rate {rate} must be in [0, 1)")));
    }
    Ok(())
}

/// Hides each cell independently with probability `rate`; columns in `exempt`
/// stay observed. One uniform draw is consumed per cell either way, so the
/// exemption list does not shift the masks of other columns.
pub fn mask_mcar(data: &Dataset, rate: f64, seed: u64, exempt: &[usize]) -> Result<Dataset> {
    mask_with(data, seed, exempt, |_| rate)
}

fn mask_with(data: &Dataset, seed: u64, exempt: &[usize], rate: impl Fn(usize) -> f64) -> Result<Dataset> {
    for v in 0..data.width() {
        check_rate(rate(v))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = data
        .records()
        .iter()
        .map(|rec| {
            rec.iter()
                .enumerate()
                .map(|(v, &cell)| {
                    let u: f64 = rng.random();
                    if u < rate(v) && !exempt.contains(&v) {
                        None
                    } else {
                        cell
                    }
                })
                .collect()
        })
        .collect();
    Dataset::new(data.variables().to_vec(), records)
}

/// Everything needed to reproduce one synthetic dataset.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub network: Network,
    pub records: usize,
    pub missing_rate: f64,
    pub seed: u64,
    /// Per-variable missingness rates replacing `missing_rate`.
    pub overrides: BTreeMap<usize, f64>,
    pub exempt: Vec<usize>,
}

impl GeneratorSpec {
    pub fn new(network: Network, records: usize, missing_rate: f64, seed: u64) -> Self {
        GeneratorSpec { network, records, missing_rate, seed, overrides: BTreeMap::new(), exempt: Vec::new() }
    }

    /// Complete sample and its masked copy. Masking uses a seed derived from
    /// `seed`, so the complete sample does not depend on the missingness settings.
    pub fn generate(&self) -> Result<(Dataset, Dataset)> {
        check_rate(self.missing_rate)?;
        let complete = forward_sample(&self.network, self.records, self.seed);
        let rate = |v: usize| self.overrides.get(&v).copied().unwrap_or(self.missing_rate);
        let masked = mask_with(&complete, self.seed ^ MASK_STREAM, &self.exempt, rate)?;
        Ok((complete, masked))
    }
}

const MASK_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Shape of a random network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomNetSpec {
    pub nodes: usize,
    /// Cardinalities are drawn uniformly from `2..=max_states`.
    pub max_states: usize,
    pub max_parents: usize,
    /// Probability of each allowed edge `i -> j`, `i < j`.
    pub edge_probability: f64,
    /// Symmetric Dirichlet concentration of every CPT row.
    pub concentration: f64,
}

impl Default for RandomNetSpec {
    fn default() -> Self {
        RandomNetSpec { nodes: 6, max_states: 3, max_parents: 3, edge_probability: 0.4, concentration: 1.0 }
    }
}

pub(crate) fn dirichlet_row(r: usize, alpha: f64, rng: &mut impl Rng) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("positive concentration");
    loop {
        let draws: Vec<f64> = (0..r).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        // small concentrations can underflow every draw to zero
        if total > 0.0 {
            return draws.into_iter().map(|x| x / total).collect();
        }
    }
}

pub(crate) fn random_cpts(cards: &[usize], dag: &Dag, alpha: f64, rng: &mut impl Rng) -> Vec<Cpt> {
    (0..dag.len())
        .map(|i| {
            let q: usize = dag.parents(i).iter().map(|&p| cards[p]).product();
            let values = (0..q).flat_map(|_| dirichlet_row(cards[i], alpha, rng)).collect();
            Cpt::new(i, dag.parents(i).to_vec(), cards[i], values)
        })
        .collect()
}

/// Random DAG over `V0..V(n-1)` with edges from lower to higher index only,
/// random cardinalities and Dirichlet CPT rows.
pub fn random_network(spec: &RandomNetSpec, seed: u64) -> Network {
    assert!(spec.nodes > 0 && spec.max_states >= 2 && spec.concentration > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cards: Vec<usize> = (0..spec.nodes).map(|_| rng.random_range(2..=spec.max_states)).collect();
    let mut edges = Vec::new();
    for c in 0..spec.nodes {
        let mut parents = 0;
        for p in 0..c {
            if parents < spec.max_parents && rng.random::<f64>() < spec.edge_probability {
                edges.push((p, c));
                parents += 1;
            }
        }
    }
    let dag = Dag::from_edges(spec.nodes, &edges).expect("forward edges are acyclic");
    let cpts = random_cpts(&cards, &dag, spec.concentration, &mut rng);
    let variables = cards.iter().enumerate().map(|(i, &r)| Variable::with_cardinality(format!("V{i}"), r)).collect();
    Network::new(variables, dag, cpts).expect("generated network is valid")
}

/// Random tree over `n` binary variables in which every child copies its
/// parent with probability `1 - flip` (and its parent's opposite otherwise),
/// `flip` drawn from `[0.05, 0.25]`. Each node's parent is a uniformly chosen
/// lower-index node; the root has the prior `(0.5, 0.5)`.
pub fn random_tree_network(n: usize, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // relabel a random attachment tree through a random permutation
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let edges: Vec<(usize, usize)> = (1..n).map(|c| (perm[rng.random_range(0..c)], perm[c])).collect();
    let dag = Dag::from_edges(n, &edges).expect("a tree is acyclic");
    let cpts = (0..n)
        .map(|i| match dag.parents(i) {
            [] => Cpt::new(i, vec![], 2, vec![0.5, 0.5]),
            ps => {
                let flip = rng.random_range(0.05..=0.25);
                Cpt::new(i, ps.to_vec(), 2, vec![1.0 - flip, flip, flip, 1.0 - flip])
            }
        })
        .collect();
    let variables = (0..n).map(|i| Variable::with_cardinality(format!("V{i}"), 2)).collect();
    Network::new(variables, dag, cpts).expect("generated network is valid")
}
