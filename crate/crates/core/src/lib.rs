//! Discrete Bayesian networks for diagnosis support: exact junction-tree
//! inference, parameter learning from incomplete data (EM and EMS, EM with
//! interval thresholding), structure learning (naive Bayes, TAN, FAN,
//! Chow-Liu, MWST-EM, structural EM) and a synthetic evaluation harness.

pub mod dataset;
pub mod error;
pub mod evalgen;
pub mod factor;
pub mod inference;
pub mod likelihood;
pub mod model_file;
pub mod network;
pub mod params;
pub mod structure;

pub use dataset::{Dataset, Record};
pub use error::{Error, Result, ValidationError};
pub use inference::{classify, enumerate_posterior, query_posterior, Classification, JunctionTree, Posterior};
pub use likelihood::{complete_counts, log_likelihood, Counts, LogLikelihood};
pub use model_file::{network_from_json, network_to_json, ModelFile};
pub use network::{Assignment, Cpt, Dag, Network, Variable};
