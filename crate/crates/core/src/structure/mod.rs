//! Structure learning: information measures, spanning trees, classifier
//! structures, BIC scoring and EM-embedded search.

mod classifiers;
mod info;
mod mwst;
mod score;
mod search;

pub use classifiers::{augmenting_tree, fan, naive_bayes, tan, AugmentingTree};
pub use info::{
    cmi_from_table, conditional_mutual_information, mi_from_table, mi_weights, mutual_information, WeightMatrix,
};
pub use mwst::{mwst, tree_weight};
pub use score::{bic_score, family_score, penalty};
pub use search::{chow_liu, mwst_em, sem, sem_from, sem_plus_t, Provenance, SearchOptions, StructureCandidate};

/// Default FAN threshold in nats.
pub const DEFAULT_FAN_THRESHOLD: f64 = 0.01;
