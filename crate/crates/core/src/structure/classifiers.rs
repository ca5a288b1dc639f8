//! Classifier structures around a class variable: naive Bayes, tree-augmented
//! naive Bayes (TAN) and forest-augmented naive Bayes (FAN).

use super::info::{conditional_mutual_information, mutual_information, WeightMatrix};
use super::mwst::mwst;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::network::Dag;

/// `class -> feature` for every listed feature and nothing else.
pub fn naive_bayes(n: usize, class: usize, features: &[usize]) -> Dag {
    let edges: Vec<(usize, usize)> = features.iter().filter(|&&f| f != class).map(|&f| (class, f)).collect();
    Dag::from_edges(n, &edges).expect("a star is acyclic")
}

/// Feature tree of a TAN with the conditional MI of each tree edge.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentingTree {
    pub root: usize,
    /// `(parent, child, cmi)` in variable indices.
    pub edges: Vec<(usize, usize, f64)>,
}

/// Builds the feature tree: conditional MI given the class as edge weights,
/// rooted at the feature with the largest MI with the class (lowest index on ties).
pub fn augmenting_tree(data: &Dataset, class: usize) -> Result<AugmentingTree> {
    let features: Vec<usize> = (0..data.width()).filter(|&v| v != class).collect();
    if features.len() < 2 {
        return Err(Error::InvalidArgument("TAN needs at least two features".into()));
    }
    let mut root = features[0];
    let mut best = f64::NEG_INFINITY;
    for &f in &features {
        let mi = mutual_information(data, f, class)?;
        if mi > best {
            best = mi;
            root = f;
        }
    }
    let mut weights = WeightMatrix::zeros(features.len());
    for a in 0..features.len() {
        for b in a + 1..features.len() {
            weights.set(a, b, conditional_mutual_information(data, features[a], features[b], class)?);
        }
    }
    let local_root = features.iter().position(|&f| f == root).unwrap();
    let edges = mwst(&weights, local_root)
        .into_iter()
        .map(|(a, b)| (features[a], features[b], weights.get(a, b)))
        .collect();
    Ok(AugmentingTree { root, edges })
}

fn augmented(n: usize, class: usize, tree_edges: impl IntoIterator<Item = (usize, usize)>) -> Dag {
    let mut edges: Vec<(usize, usize)> = (0..n).filter(|&f| f != class).map(|f| (class, f)).collect();
    edges.extend(tree_edges);
    Dag::from_edges(n, &edges).expect("class star plus a directed tree is acyclic")
}

/// Tree-augmented naive Bayes over every non-class variable of `data`.
pub fn tan(data: &Dataset, class: usize) -> Result<Dag> {
    let tree = augmenting_tree(data, class)?;
    Ok(augmented(data.width(), class, tree.edges.iter().map(|&(p, c, _)| (p, c))))
}

/// TAN with every feature edge whose conditional MI is below `tau` removed.
pub fn fan(data: &Dataset, class: usize, tau: f64) -> Result<Dag> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidArgument(format!("threshold {tau} must be non-negative")));
    }
    let tree = augmenting_tree(data, class)?;
    Ok(augmented(data.width(), class, tree.edges.iter().filter(|e| e.2 >= tau).map(|&(p, c, _)| (p, c))))
}
