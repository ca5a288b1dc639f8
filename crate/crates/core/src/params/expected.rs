//! Expected sufficient statistics under a network, computed record by record
//! from junction-tree posteriors over each record's missing cells.

use rayon::prelude::*;

use crate::dataset::{Dataset, Record};
use crate::error::{Error, Result};
use crate::inference::{Calibration, JunctionTree};
use crate::likelihood::Counts;
use crate::network::{Assignment, Network};

/// Records per parallel work unit. Chunks are summed sequentially and then
/// reduced in chunk order, so results do not depend on the thread count.
const CHUNK: usize = 32;

/// Output of an E-step.
#[derive(Debug, Clone)]
pub struct EStep {
    pub counts: Counts,
    /// Log-likelihood of the observed cells, `Σ_records ln P(observed | θ)`.
    pub log_likelihood: f64,
}

/// Expected counts for arbitrary ordered variable sets. Each table is laid out
/// over its set in the given order, last variable fastest. Also returns the
/// observed-data log-likelihood.
pub fn expected_tables(net: &Network, data: &Dataset, sets: &[Vec<usize>]) -> Result<(Vec<Vec<f64>>, f64)> {
    data.check_schema(net.variables())?;
    let cards = net.cardinalities();
    let sizes: Vec<usize> = sets.iter().map(|s| s.iter().map(|&v| cards[v]).product()).collect();
    let unique = data.weighted_unique();
    let needs_tree = unique.iter().any(|(r, _)| r.iter().any(Option::is_none));
    let jt = needs_tree.then(|| JunctionTree::new(net));

    let partials: Vec<Result<(Vec<Vec<f64>>, f64)>> = unique
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut tables: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
            let mut ll = 0.0;
            for (rec, w) in chunk {
                let cal = match &jt {
                    Some(jt) if rec.iter().any(Option::is_none) => {
                        Some(jt.calibrate(&Assignment::from_values(rec.clone()))?)
                    }
                    _ => None,
                };
                ll += w * match &cal {
                    Some(c) => c.log_evidence(),
                    None => net.joint_probability(&Assignment::from_values(rec.clone()))?.ln(),
                };
                for (set, table) in sets.iter().zip(tables.iter_mut()) {
                    accumulate(jt.as_ref(), cal.as_ref(), &cards, rec, *w, set, table);
                }
            }
            Ok((tables, ll))
        })
        .collect();

    let mut tables: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
    let mut ll = 0.0;
    for part in partials {
        let (t, l) = part?;
        for (acc, x) in tables.iter_mut().zip(t) {
            for (a, b) in acc.iter_mut().zip(x) {
                *a += b;
            }
        }
        ll += l;
    }
    if ll.is_nan() {
        return Err(Error::ZeroEvidence);
    }
    Ok((tables, ll))
}

fn accumulate(
    jt: Option<&JunctionTree>,
    cal: Option<&Calibration>,
    cards: &[usize],
    rec: &Record,
    w: f64,
    set: &[usize],
    table: &mut [f64],
) {
    let missing: Vec<usize> = set.iter().copied().filter(|&v| rec[v].is_none()).collect();
    if missing.is_empty() {
        let idx = set.iter().fold(0, |acc, &v| acc * cards[v] + rec[v].unwrap());
        table[idx] += w;
        return;
    }
    let (jt, cal) = (jt.expect("incomplete record has a tree"), cal.expect("incomplete record is calibrated"));
    let post = jt.joint(cal, &missing);
    // `post` is over `missing` sorted ascending, last fastest
    let mut sorted = missing.clone();
    sorted.sort_unstable();
    let mut x: Vec<usize> = rec.iter().map(|c| c.unwrap_or(0)).collect();
    for (idx, &p) in post.values().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let mut rest = idx;
        for &v in sorted.iter().rev() {
            x[v] = rest % cards[v];
            rest /= cards[v];
        }
        let t = set.iter().fold(0, |acc, &v| acc * cards[v] + x[v]);
        table[t] += w * p;
    }
}

/// Expected family counts `E[N[i, j, k]]` for the network's own structure.
pub fn expected_counts(net: &Network, data: &Dataset) -> Result<EStep> {
    let sets: Vec<Vec<usize>> = (0..net.len())
        .map(|i| {
            let mut s = net.dag().parents(i).to_vec();
            s.push(i);
            s
        })
        .collect();
    let (tables, log_likelihood) = expected_tables(net, data, &sets)?;
    let mut counts = Counts::zeros(&net.cardinalities(), net.dag());
    for (i, t) in tables.into_iter().enumerate() {
        counts.table_mut(i).copy_from_slice(&t);
    }
    Ok(EStep { counts, log_likelihood })
}
