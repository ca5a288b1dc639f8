//! BIC scores. On incomplete data the log-likelihood term is evaluated on the
//! expected counts under the fitted network.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::{complete_counts, counts_log_likelihood};
use crate::network::Network;
use crate::params::expected_counts;

/// `LL - (dim / 2) ln N` with `dim = Σ q_i (r_i - 1)`.
pub fn bic_score(net: &Network, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    data.check_schema(net.variables())?;
    let counts = if data.is_complete() {
        complete_counts(net.dag(), data)?
    } else {
        expected_counts(net, data)?.counts
    };
    let ll = counts_log_likelihood(net, &counts).value();
    Ok(ll - penalty(net.dimension(), data.len()))
}

pub fn penalty(dimension: usize, records: usize) -> f64 {
    0.5 * dimension as f64 * (records as f64).ln()
}

/// BIC contribution of one family from a count table laid out
/// `(parents..., child)`, using the maximum-likelihood parameters of those counts.
pub fn family_score(table: &[f64], states: usize, records: usize) -> f64 {
    let mut ll = 0.0;
    for row in table.chunks(states) {
        let total: f64 = row.iter().sum();
        for &n in row {
            if n > 0.0 {
                ll += n * (n / total).ln();
            }
        }
    }
    let configs = table.len() / states;
    ll - penalty(configs * (states - 1), records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Cpt, Dag, Variable};

    #[test]
    fn single_node_hand_value() {
        let net = Network::new(
            vec![Variable::with_cardinality("A", 2)],
            Dag::empty(1),
            vec![Cpt::new(0, vec![], 2, vec![0.5, 0.5])],
        )
        .unwrap();
        let d = Dataset::new(net.variables().to_vec(), [1, 1, 0, 0].iter().map(|&s| vec![Some(s)]).collect()).unwrap();
        let bic = bic_score(&net, &d).unwrap();
        assert!((bic - (-3.4657)).abs() < 1e-4);
        assert!((family_score(&[2.0, 2.0], 2, 4) - bic).abs() < 1e-12);
    }

    #[test]
    fn empty_data_rejected() {
        let net = Network::uniform(vec![Variable::with_cardinality("A", 2)], Dag::empty(1)).unwrap();
        let d = Dataset::new(net.variables().to_vec(), vec![]).unwrap();
        assert!(matches!(bic_score(&net, &d), Err(Error::EmptyData)));
    }

    #[test]
    fn useless_edge_lowers_bic() {
        // A and B independent with product counts: the edge adds parameters, not likelihood
        let vars = vec![Variable::with_cardinality("A", 2), Variable::with_cardinality("B", 2)];
        let rows = vec![vec![Some(0), Some(0)], vec![Some(0), Some(1)], vec![Some(1), Some(0)], vec![Some(1), Some(1)]];
        let d = Dataset::new(vars.clone(), rows).unwrap();
        let empty = crate::params::mle(&Dag::empty(2), &d, None).unwrap().network;
        let edge = crate::params::mle(&Dag::from_edges(2, &[(0, 1)]).unwrap(), &d, None).unwrap().network;
        assert!(bic_score(&edge, &d).unwrap() < bic_score(&empty, &d).unwrap());
    }
}
