//! Reference computations written independently of the library internals.
#![allow(dead_code)]

use emsbn::evalgen::{forward_sample, mask_mcar, random_network, RandomNetSpec};
use emsbn::{Dataset, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Product of CPT entries at a full assignment, reading the tables directly.
pub fn joint_weight(net: &Network, x: &[usize]) -> f64 {
    let cards = net.cardinalities();
    (0..net.len())
        .map(|i| {
            let cpt = net.cpt(i);
            let mut j = 0;
            for &p in cpt.parents() {
                j = j * cards[p] + x[p];
            }
            cpt.values()[j * cards[i] + x[i]]
        })
        .product()
}

/// Calls `f` on every full assignment.
pub fn for_each_assignment(cards: &[usize], mut f: impl FnMut(&[usize])) {
    let mut x = vec![0usize; cards.len()];
    loop {
        f(&x);
        let mut d = cards.len();
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            x[d] += 1;
            if x[d] < cards[d] {
                break;
            }
            x[d] = 0;
        }
    }
}

/// Normalized `P(vars | evidence)` laid out over `vars` in the given order,
/// last fastest, by summing the joint. `None` when the evidence has zero mass.
pub fn brute_force(net: &Network, evidence: &[Option<usize>], vars: &[usize]) -> Option<Vec<f64>> {
    let cards = net.cardinalities();
    let size: usize = vars.iter().map(|&v| cards[v]).product();
    let mut out = vec![0.0; size];
    for_each_assignment(&cards, |x| {
        if evidence.iter().zip(x).any(|(e, &s)| e.is_some_and(|e| e != s)) {
            return;
        }
        let idx = vars.iter().fold(0, |acc, &v| acc * cards[v] + x[v]);
        out[idx] += joint_weight(net, x);
    });
    let z: f64 = out.iter().sum();
    if z == 0.0 {
        return None;
    }
    Some(out.into_iter().map(|p| p / z).collect())
}

/// Observed-data log-likelihood by summing the joint over each record's missing cells.
pub fn brute_log_likelihood(net: &Network, data: &Dataset) -> f64 {
    let cards = net.cardinalities();
    data.records()
        .iter()
        .map(|rec| {
            let mut p = 0.0;
            for_each_assignment(&cards, |x| {
                if rec.iter().zip(x).all(|(c, &s)| c.is_none_or(|c| c == s)) {
                    p += joint_weight(net, x);
                }
            });
            p.ln()
        })
        .sum()
}

/// Random evidence on roughly a third of the variables, states drawn uniformly.
pub fn random_evidence(net: &Network, rng: &mut impl Rng) -> Vec<Option<usize>> {
    (0..net.len())
        .map(|i| rng.random_bool(0.35).then(|| rng.random_range(0..net.variable(i).cardinality())))
        .collect()
}

/// Random network with 2..=`max_nodes` nodes and 2..=`max_states` states.
pub fn small_net(seed: u64, max_nodes: usize, max_states: usize) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let nodes = rng.random_range(2..=max_nodes);
    let spec = RandomNetSpec {
        nodes,
        max_states,
        max_parents: 3,
        edge_probability: rng.random_range(0.2..0.7),
        concentration: 1.0,
    };
    random_network(&spec, seed)
}

/// A random network plus an MCAR-masked sample from it.
pub fn incomplete_instance(seed: u64, nodes: usize, records: usize, rate: f64) -> (Network, Dataset) {
    let spec = RandomNetSpec { nodes, max_states: 3, max_parents: 2, edge_probability: 0.4, concentration: 1.0 };
    let net = random_network(&spec, seed);
    let complete = forward_sample(&net, records, seed.wrapping_add(1));
    let data = mask_mcar(&complete, rate, seed.wrapping_add(2), &[]).unwrap();
    (net, data)
}

/// Every labelled spanning tree on `n` nodes, decoded from Prüfer sequences.
pub fn all_spanning_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n == 1 {
        return vec![vec![]];
    }
    if n == 2 {
        return vec![vec![(0, 1)]];
    }
    let mut trees = Vec::new();
    let mut seq = vec![0usize; n - 2];
    loop {
        trees.push(prufer_decode(&seq, n));
        let mut d = seq.len();
        loop {
            if d == 0 {
                return trees;
            }
            d -= 1;
            seq[d] += 1;
            if seq[d] < n {
                break;
            }
            seq[d] = 0;
        }
    }
}

fn prufer_decode(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf.min(s), leaf.max(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}
