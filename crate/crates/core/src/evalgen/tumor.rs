//! The 30-variable brain-tumor schema: variable inventory, class prior,
//! a seeded generating network and the physicians' layered structure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sample::random_cpts;
use crate::network::{Cpt, Dag, Network, Variable};

/// Class frequencies in percent, `Tumeur 1` to `Tumeur 8`.
pub const CLASS_FREQUENCIES: [f64; 8] = [16.66, 11.11, 31.94, 9.72, 2.77, 22.22, 0.0, 5.58];

/// Replacement for zero class frequencies before renormalization.
pub const CLASS_EPSILON: f64 = 1e-6;

/// Dirichlet concentration of the generated non-class CPT rows; below 1 so
/// rows are peaked and the features carry signal.
pub const FEATURE_CONCENTRATION: f64 = 0.5;

pub const DECISION: &str = "DT";

const ABSENT_PRESENT: &[&str] = &["absent", "present"];
const NORMAL_ABNORMAL: &[&str] = &["normal", "abnormal"];
const SIGNAL: &[&str] = &["hypo", "iso", "hyper"];

/// `(name, states)` in index order.
fn inventory() -> Vec<(&'static str, Vec<String>)> {
    let s = |labels: &[&str]| labels.iter().map(|l| l.to_string()).collect::<Vec<_>>();
    vec![
        ("DT", (1..=8).map(|k| format!("Tumeur {k}")).collect()),
        ("ES", s(NORMAL_ABNORMAL)),
        ("EM", s(NORMAL_ABNORMAL)),
        ("EDA", s(NORMAL_ABNORMAL)),
        ("EDE", s(NORMAL_ABNORMAL)),
        ("EDL", s(NORMAL_ABNORMAL)),
        ("EDT", s(NORMAL_ABNORMAL)),
        ("EPC", s(NORMAL_ABNORMAL)),
        ("EPS", s(NORMAL_ABNORMAL)),
        ("AG", s(&["child", "adult", "senior"])),
        ("SX", s(&["F", "M"])),
        ("DM", s(ABSENT_PRESENT)),
        ("MA", s(ABSENT_PRESENT)),
        ("PI", s(ABSENT_PRESENT)),
        ("ECC", s(ABSENT_PRESENT)),
        ("Ems", s(ABSENT_PRESENT)),
        ("NT", s(&["single", "multiple"])),
        ("TT", s(&["small", "medium", "large"])),
        ("LTT", s(&["sharp", "diffuse"])),
        ("CK", s(ABSENT_PRESENT)),
        ("HM", s(ABSENT_PRESENT)),
        ("CP", s(&["solid", "cystic", "mixed"])),
        ("IPC", s(&["none", "moderate", "strong"])),
        ("TPC", s(&["homogeneous", "heterogeneous", "ring"])),
        ("PST1", s(SIGNAL)),
        ("PST2", s(SIGNAL)),
        ("SG", s(&["cortical", "deep", "periventricular"])),
        ("Poe", s(ABSENT_PRESENT)),
        ("CL", s(ABSENT_PRESENT)),
        ("LT", s(&["frontal", "temporal", "parietal"])),
    ]
}

pub fn tumor_variables() -> Vec<Variable> {
    inventory().into_iter().map(|(n, s)| Variable::new(n, s)).collect()
}

fn idx(name: &str) -> usize {
    inventory().iter().position(|(n, _)| *n == name).unwrap_or_else(|| panic!("unknown variable {name}"))
}

fn edges(list: &[(&str, &[&str])]) -> Vec<(usize, usize)> {
    list.iter().flat_map(|&(child, parents)| parents.iter().map(move |p| (idx(p), idx(child)))).collect()
}

/// Observed characteristics used as evidence when classifying.
pub const FEATURES: [&str; 21] = [
    "AG", "SX", "DM", "MA", "PI", "ECC", "Ems", "NT", "TT", "LTT", "CK", "HM", "CP", "IPC", "TPC", "PST1", "PST2",
    "SG", "Poe", "CL", "LT",
];

/// Class prior with zero frequencies replaced by [`CLASS_EPSILON`], renormalized.
pub fn class_prior() -> Vec<f64> {
    let raw: Vec<f64> = CLASS_FREQUENCIES.iter().map(|&f| if f == 0.0 { CLASS_EPSILON } else { f / 100.0 }).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// Physicians' four-level structure: characteristics feed intermediate
/// state nodes, which feed the decision node `DT`.
pub fn physician_structure() -> Dag {
    let e = edges(&[
        ("EDA", &["DM", "MA", "PI"]),
        ("EDE", &["ECC", "Ems", "Poe", "NT"]),
        ("EDL", &["CK", "HM", "CP"]),
        ("EDT", &["LT", "SG", "CL", "TT", "LTT"]),
        ("EPC", &["IPC", "TPC"]),
        ("EPS", &["PST1", "PST2"]),
        ("ES", &["AG", "SX", "EDA"]),
        ("EM", &["EDE", "EDL", "EDT", "EPC", "EPS"]),
        ("DT", &["ES", "EM"]),
    ]);
    Dag::from_edges(30, &e).expect("physician structure is acyclic")
}

/// The physician structure with uniform CPTs.
pub fn physician_network() -> Network {
    Network::uniform(tumor_variables(), physician_structure()).expect("uniform network is valid")
}

/// Generating structure: the physician layering with every arc reversed so
/// that `DT` is the root, plus the priority characteristics (SG, Poe, CL, LT)
/// attached directly to `DT`.
pub fn generating_structure() -> Dag {
    let e = edges(&[
        ("ES", &["DT"]),
        ("EM", &["DT"]),
        ("SG", &["DT"]),
        ("Poe", &["DT"]),
        ("CL", &["DT"]),
        ("LT", &["DT"]),
        ("EDA", &["ES"]),
        ("AG", &["ES"]),
        ("SX", &["ES"]),
        ("EDE", &["EM"]),
        ("EDL", &["EM"]),
        ("EDT", &["EM"]),
        ("EPC", &["EM"]),
        ("EPS", &["EM"]),
        ("DM", &["EDA"]),
        ("MA", &["EDA"]),
        ("PI", &["EDA"]),
        ("ECC", &["EDE"]),
        ("Ems", &["EDE"]),
        ("NT", &["EDT"]),
        ("TT", &["EDT"]),
        ("LTT", &["EDT"]),
        ("CK", &["EDL"]),
        ("HM", &["EDL"]),
        ("CP", &["EDL"]),
        ("IPC", &["EPC"]),
        ("TPC", &["EPC"]),
        ("PST1", &["EPS"]),
        ("PST2", &["EPS"]),
    ]);
    Dag::from_edges(30, &e).expect("generating structure is acyclic")
}

#[derive(Debug, Clone)]
pub struct TumorSchema {
    pub network: Network,
    pub decision: usize,
    pub features: Vec<usize>,
    /// Notes about adjustments made to the published figures.
    pub flags: Vec<String>,
}

/// Seeded generating network. `DT` has the published class prior (smoothed);
/// every other CPT row is drawn from a symmetric Dirichlet.
pub fn tumor_schema(seed: u64) -> TumorSchema {
    let variables = tumor_variables();
    let cards: Vec<usize> = variables.iter().map(Variable::cardinality).collect();
    let dag = generating_structure();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cpts = random_cpts(&cards, &dag, FEATURE_CONCENTRATION, &mut rng);
    let decision = idx(DECISION);
    cpts[decision] = Cpt::new(decision, vec![], 8, class_prior());
    let flags = CLASS_FREQUENCIES
        .iter()
        .enumerate()
        .filter(|(_, &f)| f == 0.0)
        .map(|(k, _)| format!("DT state \"Tumeur {}\" has frequency 0; smoothed to {CLASS_EPSILON:e}", k + 1))
        .collect();
    let network = Network::new(variables, dag, cpts).expect("generated network is valid");
    TumorSchema { network, decision, features: FEATURES.iter().map(|f| idx(f)).collect(), flags }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_variables() {
        assert_eq!(tumor_variables().len(), 30);
        assert_eq!(tumor_schema(0).network.len(), 30);
    }

    #[test]
    fn class_prior_matches_table() {
        let p = class_prior();
        assert!((p[2] - 0.3194).abs() < 1e-6);
        assert!((p[6] - 1e-6).abs() < 1e-9);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let s = tumor_schema(3);
        assert!(s.network.cpt(s.decision).values().iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-15));
        assert_eq!(s.flags.len(), 1);
    }

    #[test]
    fn physician_decision_node_has_four_configurations() {
        let dag = physician_structure();
        let dt = idx("DT");
        assert_eq!(dag.parents(dt), &[idx("ES"), idx("EM")]);
        assert_eq!(physician_network().cpt(dt).rows(), 4);
    }

    #[test]
    fn features_are_roots_of_physician_structure() {
        let dag = physician_structure();
        assert!(FEATURES.iter().all(|f| dag.parents(idx(f)).is_empty()));
    }
}
