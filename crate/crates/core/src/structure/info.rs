//! Empirical mutual information and conditional mutual information, in nats.
//!
//! Records missing any of the involved variables are skipped (pairwise- or
//! triple-wise complete records only).

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Symmetric matrix of edge weights; the diagonal is unused.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    w: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(n: usize) -> Self {
        WeightMatrix { n, w: vec![0.0; n * n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.w[a * self.n + b]
    }

    pub fn set(&mut self, a: usize, b: usize, value: f64) {
        self.w[a * self.n + b] = value;
        self.w[b * self.n + a] = value;
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = WeightMatrix::zeros(n);
        for a in 0..n {
            for b in a + 1..n {
                m.set(a, b, f(a, b));
            }
        }
        m
    }
}

/// MI of a joint count table laid out `[x * ry + y]`.
pub fn mi_from_table(table: &[f64], rx: usize, ry: usize) -> f64 {
    let total: f64 = table.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut nx = vec![0.0; rx];
    let mut ny = vec![0.0; ry];
    for x in 0..rx {
        for y in 0..ry {
            nx[x] += table[x * ry + y];
            ny[y] += table[x * ry + y];
        }
    }
    let mut mi = 0.0;
    for x in 0..rx {
        for y in 0..ry {
            let nxy = table[x * ry + y];
            if nxy > 0.0 {
                mi += nxy / total * ((nxy * total) / (nx[x] * ny[y])).ln();
            }
        }
    }
    mi.max(0.0)
}

/// CMI of a count table laid out `[(c * rx + x) * ry + y]`.
pub fn cmi_from_table(table: &[f64], rc: usize, rx: usize, ry: usize) -> f64 {
    let total: f64 = table.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut cmi = 0.0;
    for c in 0..rc {
        let slice = &table[c * rx * ry..(c + 1) * rx * ry];
        let nc: f64 = slice.iter().sum();
        if nc <= 0.0 {
            continue;
        }
        let mut nxc = vec![0.0; rx];
        let mut nyc = vec![0.0; ry];
        for x in 0..rx {
            for y in 0..ry {
                nxc[x] += slice[x * ry + y];
                nyc[y] += slice[x * ry + y];
            }
        }
        for x in 0..rx {
            for y in 0..ry {
                let n = slice[x * ry + y];
                if n > 0.0 {
                    cmi += n / total * ((n * nc) / (nxc[x] * nyc[y])).ln();
                }
            }
        }
    }
    cmi.max(0.0)
}

fn name(data: &Dataset, v: usize) -> String {
    data.variables()[v].name.clone()
}

pub fn mutual_information(data: &Dataset, x: usize, y: usize) -> Result<f64> {
    let cards = data.cardinalities();
    let mut table = vec![0.0; cards[x] * cards[y]];
    let mut seen = false;
    for rec in data.records() {
        if let (Some(a), Some(b)) = (rec[x], rec[y]) {
            table[a * cards[y] + b] += 1.0;
            seen = true;
        }
    }
    if !seen {
        return Err(Error::NoCompletePairs(name(data, x), name(data, y)));
    }
    Ok(mi_from_table(&table, cards[x], cards[y]))
}

pub fn conditional_mutual_information(data: &Dataset, x: usize, y: usize, c: usize) -> Result<f64> {
    let cards = data.cardinalities();
    let (rx, ry) = (cards[x], cards[y]);
    let mut table = vec![0.0; cards[c] * rx * ry];
    let mut seen = false;
    for rec in data.records() {
        if let (Some(a), Some(b), Some(k)) = (rec[x], rec[y], rec[c]) {
            table[(k * rx + a) * ry + b] += 1.0;
            seen = true;
        }
    }
    if !seen {
        return Err(Error::NoCompletePairs(name(data, x), name(data, y)));
    }
    Ok(cmi_from_table(&table, cards[c], rx, ry))
}

/// Pairwise MI over all variables; pairs never observed together get weight 0.
pub fn mi_weights(data: &Dataset) -> WeightMatrix {
    WeightMatrix::from_fn(data.width(), |a, b| mutual_information(data, a, b).unwrap_or(0.0))
}
