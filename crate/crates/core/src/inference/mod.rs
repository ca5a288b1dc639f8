//! Exact posterior queries.

mod junction_tree;

pub use junction_tree::{Calibration, JunctionTree, Separator};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::network::{Assignment, Network};

/// Default cap on the joint state space for enumeration.
pub const ENUMERATION_CAP: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Posterior {
    pub variable: usize,
    pub distribution: Vec<f64>,
    #[serde(skip)]
    pub evidence: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub state: usize,
    pub posterior: Posterior,
}

fn check_target(evidence: &Assignment, target: usize) -> Result<()> {
    if target >= evidence.len() {
        return Err(Error::InvalidArgument(format!("no variable {target}")));
    }
    if evidence.get(target).is_some() {
        return Err(Error::TargetInEvidence(target));
    }
    Ok(())
}

/// `P(target | evidence)` from the junction tree.
pub fn query_posterior(jt: &JunctionTree, evidence: &Assignment, target: usize) -> Result<Posterior> {
    check_target(evidence, target)?;
    let cal = jt.calibrate(evidence)?;
    Ok(Posterior { variable: target, distribution: jt.marginal(&cal, target), evidence: evidence.clone() })
}

/// Same query by summing the joint over every completion of the evidence.
pub fn enumerate_posterior(net: &Network, evidence: &Assignment, target: usize, cap: u128) -> Result<Posterior> {
    check_target(evidence, target)?;
    let f = enumerate_joint(net, evidence, &[target], cap)?;
    Ok(Posterior { variable: target, distribution: f.values().to_vec(), evidence: evidence.clone() })
}

/// Normalized joint of `vars` given evidence, by brute-force enumeration.
pub fn enumerate_joint(net: &Network, evidence: &Assignment, vars: &[usize], cap: u128) -> Result<Factor> {
    evidence.check(net.variables())?;
    let cards = net.cardinalities();
    let size: u128 = cards.iter().map(|&c| c as u128).product();
    if size > cap {
        return Err(Error::StateSpaceTooLarge { size, cap });
    }
    let mut q = vars.to_vec();
    q.sort_unstable();
    q.dedup();
    let mut out = Factor::new(q.clone(), q.iter().map(|&v| cards[v]).collect(), vec![0.0; q.iter().map(|&v| cards[v]).product()]);
    let free: Vec<usize> = (0..net.len()).filter(|&v| evidence.get(v).is_none()).collect();
    let mut x: Vec<usize> = (0..net.len()).map(|v| evidence.get(v).unwrap_or(0)).collect();
    loop {
        let p = net.joint_probability(&Assignment::total(&x))?;
        let idx = q.iter().fold(0, |acc, &v| acc * cards[v] + x[v]);
        out.values_mut()[idx] += p;
        // odometer over the free variables
        let mut d = free.len();
        loop {
            if d == 0 {
                let z = out.normalize();
                if z <= 0.0 {
                    return Err(Error::ZeroEvidence);
                }
                return Ok(out);
            }
            d -= 1;
            let v = free[d];
            x[v] += 1;
            if x[v] < cards[v] {
                break;
            }
            x[v] = 0;
        }
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(distribution: &[f64]) -> usize {
    let mut best = 0;
    for (k, &p) in distribution.iter().enumerate() {
        if p > distribution[best] {
            best = k;
        }
    }
    best
}

/// Most probable state of the decision variable given the evidence.
pub fn classify(jt: &JunctionTree, evidence: &Assignment, decision: usize) -> Result<Classification> {
    let posterior = query_posterior(jt, evidence, decision)?;
    Ok(Classification { state: argmax(&posterior.distribution), posterior })
}
