//! EM-embedded structure search: MWST-EM, structural EM (SEM) and SEM started
//! from the MWST-EM tree (SEM+T).

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::info::{mi_from_table, mi_weights, WeightMatrix};
use super::mwst::mwst;
use super::score::{bic_score, family_score};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::Counts;
use crate::network::{Dag, Network};
use crate::params::{em, expected_tables, mle_from_counts, EmOptions, Init};

/// Improvements below this are treated as ties with the current structure.
const MIN_DELTA: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub algorithm: String,
    pub seed: u64,
    pub score: f64,
    /// Tree constructions for MWST-EM, accepted moves for SEM.
    pub rounds: usize,
}

#[derive(Debug, Clone)]
pub struct StructureCandidate {
    pub network: Network,
    /// BIC of `network`.
    pub score: f64,
    pub provenance: Provenance,
    /// Score after each accepted step, starting with the initial structure.
    pub score_history: Vec<f64>,
}

impl StructureCandidate {
    pub fn dag(&self) -> &Dag {
        self.network.dag()
    }
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub seed: u64,
    pub max_parents: usize,
    pub max_moves: usize,
    pub max_rounds: usize,
    /// EM convergence threshold and iteration cap for every inner fit.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { seed: 0, max_parents: 4, max_moves: 50, max_rounds: 10, tol: 1e-6, max_iter: 200 }
    }
}

impl SearchOptions {
    pub fn seeded(seed: u64) -> Self {
        SearchOptions { seed, ..Default::default() }
    }

    fn em(&self, init: Init) -> EmOptions {
        EmOptions { init, tol: self.tol, max_iter: self.max_iter, prior: None, keep_snapshots: false }
    }
}

fn check(data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(())
}

/// Chow-Liu tree: the maximum-weight spanning tree of pairwise mutual
/// information (pairwise-complete records), directed away from `root`.
pub fn chow_liu(data: &Dataset, root: usize) -> Result<Dag> {
    check(data)?;
    if root >= data.width() {
        return Err(Error::InvalidArgument(format!("root {root} out of range")));
    }
    Ok(tree_dag(data.width(), &mwst(&mi_weights(data), root)))
}

fn tree_dag(n: usize, edges: &[(usize, usize)]) -> Dag {
    Dag::from_edges(n, edges).expect("a directed tree is acyclic")
}

/// Mutual information of every pair from expected pairwise counts under `net`.
fn expected_mi_weights(net: &Network, data: &Dataset) -> Result<WeightMatrix> {
    let n = net.len();
    let cards = net.cardinalities();
    let pairs: Vec<Vec<usize>> = (0..n).flat_map(|a| (a + 1..n).map(move |b| vec![a, b])).collect();
    let (tables, _) = expected_tables(net, data, &pairs)?;
    let mut w = WeightMatrix::zeros(n);
    for (p, t) in pairs.iter().zip(&tables) {
        w.set(p[0], p[1], mi_from_table(t, cards[p[0]], cards[p[1]]));
    }
    Ok(w)
}

/// Alternates EM on the current tree with a spanning-tree rebuild from the
/// expected pairwise statistics of the fit, until the tree repeats or
/// `max_rounds` trees have been built. The first tree uses pairwise-complete
/// mutual information. Without `root`, one is drawn from the seed.
pub fn mwst_em(data: &Dataset, root: Option<usize>, opts: &SearchOptions) -> Result<StructureCandidate> {
    check(data)?;
    let n = data.width();
    let root = match root {
        Some(r) if r >= n => return Err(Error::InvalidArgument(format!("root {r} out of range"))),
        Some(r) => r,
        None => ChaCha8Rng::seed_from_u64(opts.seed).random_range(0..n),
    };
    let mut edges = mwst(&mi_weights(data), root);
    let mut rounds = 1;
    let mut history = Vec::new();
    let fit = loop {
        let fit = em(&tree_dag(n, &edges), data, &opts.em(Init::Random { seed: opts.seed }))?;
        history.push(bic_score(&fit.network, data)?);
        if rounds >= opts.max_rounds.max(1) {
            break fit;
        }
        let next = mwst(&expected_mi_weights(&fit.network, data)?, root);
        rounds += 1;
        if next == edges {
            break fit;
        }
        edges = next;
    };
    let score = *history.last().unwrap();
    Ok(StructureCandidate {
        network: fit.network,
        score,
        provenance: Provenance { algorithm: "mwst-em".into(), seed: opts.seed, score, rounds },
        score_history: history,
    })
}

/// Structural EM from the chain `V0 -> V1 -> ... -> V(n-1)`.
pub fn sem(data: &Dataset, opts: &SearchOptions) -> Result<StructureCandidate> {
    check(data)?;
    let fit = em(&Dag::chain(data.width()), data, &opts.em(Init::Random { seed: opts.seed }))?;
    sem_from(data, fit.network, opts, "sem")
}

/// SEM started from the MWST-EM tree and its fitted parameters.
pub fn sem_plus_t(data: &Dataset, root: Option<usize>, opts: &SearchOptions) -> Result<StructureCandidate> {
    let tree = mwst_em(data, root, opts)?;
    sem_from(data, tree.network, opts, "sem+t")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Move {
    Delete(usize, usize),
    Reverse(usize, usize),
    Add(usize, usize),
}

impl Move {
    fn apply(self, dag: &Dag) -> Option<Dag> {
        let mut d = dag.clone();
        match self {
            Move::Delete(p, c) => {
                d.remove_edge(p, c);
            }
            Move::Reverse(p, c) => {
                d.remove_edge(p, c);
                if !d.try_add_edge(c, p) {
                    return None;
                }
            }
            Move::Add(p, c) => {
                if !d.try_add_edge(p, c) {
                    return None;
                }
            }
        }
        Some(d)
    }

    fn touched(self) -> Vec<usize> {
        match self {
            Move::Delete(_, c) | Move::Add(_, c) => vec![c],
            Move::Reverse(p, c) => vec![p, c],
        }
    }
}

/// Neighbors in tie-break order: deletions, then reversals, then additions,
/// each by lexicographic edge.
fn neighbors(dag: &Dag, max_parents: usize) -> Vec<(Move, Dag)> {
    let n = dag.len();
    let edges = dag.edges();
    let mut moves: Vec<Move> = edges.iter().map(|&(p, c)| Move::Delete(p, c)).collect();
    moves.extend(edges.iter().map(|&(p, c)| Move::Reverse(p, c)));
    for p in 0..n {
        for c in 0..n {
            if p != c && !dag.has_edge(p, c) && !dag.has_edge(c, p) {
                moves.push(Move::Add(p, c));
            }
        }
    }
    moves
        .into_iter()
        .filter_map(|m| m.apply(dag).map(|d| (m, d)))
        .filter(|(m, d)| m.touched().iter().all(|&v| d.parents(v).len() <= max_parents))
        .collect()
}

fn family(dag: &Dag, v: usize) -> Vec<usize> {
    let mut f = dag.parents(v).to_vec();
    f.push(v);
    f
}

/// Greedy hill-climb from `start`. Candidates are ranked by the change in
/// family BIC computed from expected counts under the current model; the best
/// is refitted by EM and accepted only if its BIC beats the current one.
pub fn sem_from(data: &Dataset, start: Network, opts: &SearchOptions, algorithm: &str) -> Result<StructureCandidate> {
    check(data)?;
    data.check_schema(start.variables())?;
    let n_records = data.len();
    let cards = start.cardinalities();
    let mut current = start;
    let mut score = bic_score(&current, data)?;
    let mut history = vec![score];
    let mut moves = 0;

    while moves < opts.max_moves {
        let dag = current.dag().clone();
        let candidates = neighbors(&dag, opts.max_parents);

        let mut sets: Vec<Vec<usize>> = (0..dag.len()).map(|v| family(&dag, v)).collect();
        for (_, d) in &candidates {
            for v in 0..d.len() {
                sets.push(family(d, v));
            }
        }
        sets.sort();
        sets.dedup();
        let (tables, _) = expected_tables(&current, data, &sets)?;
        let cache: HashMap<&[usize], f64> = sets
            .iter()
            .zip(&tables)
            .map(|(s, t)| (s.as_slice(), family_score(t, cards[*s.last().unwrap()], n_records)))
            .collect();
        let table_of: HashMap<&[usize], &Vec<f64>> = sets.iter().map(|s| s.as_slice()).zip(&tables).collect();

        let mut best: Option<(f64, &Dag)> = None;
        for (m, d) in &candidates {
            let delta: f64 = m
                .touched()
                .iter()
                .map(|&v| cache[family(d, v).as_slice()] - cache[family(&dag, v).as_slice()])
                .sum();
            if delta > MIN_DELTA && best.is_none_or(|(b, _)| delta > b) {
                best = Some((delta, d));
            }
        }
        let Some((_, next)) = best else { break };

        let mut counts = Counts::zeros(&cards, next);
        for v in 0..next.len() {
            counts.table_mut(v).copy_from_slice(table_of[family(next, v).as_slice()]);
        }
        let init = mle_from_counts(current.variables(), next, &counts, None)?.network;
        let fit = em(next, data, &opts.em(Init::Given(init)))?;
        let next_score = bic_score(&fit.network, data)?;
        if next_score <= score {
            break;
        }
        current = fit.network;
        score = next_score;
        history.push(score);
        moves += 1;
    }

    Ok(StructureCandidate {
        network: current,
        score,
        provenance: Provenance { algorithm: algorithm.into(), seed: opts.seed, score, rounds: moves },
        score_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Variable;

    fn vars(n: usize) -> Vec<Variable> {
        (0..n).map(|i| Variable::with_cardinality(format!("V{i}"), 2)).collect()
    }

    #[test]
    fn neighbor_order_and_caps() {
        let dag = Dag::from_edges(3, &[(0, 1)]).unwrap();
        let ms: Vec<Move> = neighbors(&dag, 4).into_iter().map(|(m, _)| m).collect();
        assert_eq!(ms[0], Move::Delete(0, 1));
        assert_eq!(ms[1], Move::Reverse(0, 1));
        assert_eq!(&ms[2..], &[Move::Add(0, 2), Move::Add(1, 2), Move::Add(2, 0), Move::Add(2, 1)]);
        let capped: Vec<Move> = neighbors(&dag, 1).into_iter().map(|(m, _)| m).collect();
        assert!(capped.contains(&Move::Add(0, 2)));
        assert!(!capped.contains(&Move::Add(2, 1)));
    }

    #[test]
    fn reversal_that_closes_cycle_is_skipped() {
        let dag = Dag::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let ms: Vec<Move> = neighbors(&dag, 4).into_iter().map(|(m, _)| m).collect();
        assert!(!ms.contains(&Move::Reverse(0, 2)));
        assert!(ms.contains(&Move::Reverse(0, 1)));
        assert!(ms.contains(&Move::Reverse(1, 2)));
    }

    #[test]
    fn complete_data_mwst_em_stops_at_second_round() {
        let rows = vec![
            vec![Some(0), Some(0), Some(1)],
            vec![Some(1), Some(1), Some(1)],
            vec![Some(1), Some(1), Some(0)],
            vec![Some(0), Some(0), Some(0)],
            vec![Some(0), Some(1), Some(0)],
        ];
        let d = Dataset::new(vars(3), rows).unwrap();
        let c = mwst_em(&d, Some(0), &SearchOptions::default()).unwrap();
        assert_eq!(c.provenance.rounds, 2);
        assert_eq!(c.dag(), &chow_liu(&d, 0).unwrap());
    }

    #[test]
    fn empty_data_rejected() {
        let d = Dataset::new(vars(2), vec![]).unwrap();
        assert!(matches!(sem(&d, &SearchOptions::default()), Err(Error::EmptyData)));
        assert!(matches!(mwst_em(&d, None, &SearchOptions::default()), Err(Error::EmptyData)));
    }
}
