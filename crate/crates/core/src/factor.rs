//! Dense potential tables over sorted variable sets, last variable fastest.

use crate::network::Cpt;

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    vars: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

/// Walks every entry of a table over `vars`/`cards` and yields, for each, the
/// offset into a table over the subset whose strides are `sub_strides`
/// (stride 0 for variables outside the subset).
fn walk(cards: &[usize], sub_strides: &[usize], mut f: impl FnMut(usize, usize)) {
    let size: usize = cards.iter().product();
    let mut digits = vec![0usize; cards.len()];
    let mut sub = 0usize;
    for idx in 0..size {
        f(idx, sub);
        for d in (0..cards.len()).rev() {
            digits[d] += 1;
            sub += sub_strides[d];
            if digits[d] < cards[d] {
                break;
            }
            sub -= sub_strides[d] * cards[d];
            digits[d] = 0;
        }
    }
}

impl Factor {
    pub fn new(vars: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]), "factor variables must be sorted");
        debug_assert_eq!(cards.iter().product::<usize>(), values.len());
        Factor { vars, cards, values }
    }

    pub fn ones(vars: Vec<usize>, cards: Vec<usize>) -> Self {
        let size = cards.iter().product();
        Factor::new(vars, cards, vec![1.0; size])
    }

    pub fn scalar(v: f64) -> Self {
        Factor::new(Vec::new(), Vec::new(), vec![v])
    }

    /// The CPT as a factor over its family.
    pub fn from_cpt(cpt: &Cpt, all_cards: &[usize]) -> Self {
        let mut vars: Vec<usize> = cpt.parents().to_vec();
        vars.push(cpt.child());
        vars.sort_unstable();
        let cards: Vec<usize> = vars.iter().map(|&v| all_cards[v]).collect();
        // stride of each family variable inside the CPT layout (parents..., child)
        let mut cpt_strides = vec![0usize; vars.len()];
        let mut s = cpt.states();
        for &p in cpt.parents().iter().rev() {
            let pos = vars.binary_search(&p).unwrap();
            cpt_strides[pos] = s;
            s *= all_cards[p];
        }
        cpt_strides[vars.binary_search(&cpt.child()).unwrap()] = 1;
        let mut values = vec![0.0; cards.iter().product()];
        walk(&cards, &cpt_strides, |idx, off| values[idx] = cpt.values()[off]);
        Factor::new(vars, cards, values)
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vars.binary_search(&v).is_ok()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Scales to unit mass and returns the previous mass. A zero-mass factor is left as is.
    pub fn normalize(&mut self) -> f64 {
        let z = self.sum();
        if z > 0.0 {
            self.values.iter_mut().for_each(|x| *x /= z);
        }
        z
    }

    /// Strides of `self` expressed over another variable list (0 where absent).
    fn strides_in(&self, vars: &[usize]) -> Vec<usize> {
        let mut own = vec![0usize; self.vars.len()];
        let mut s = 1;
        for d in (0..self.vars.len()).rev() {
            own[d] = s;
            s *= self.cards[d];
        }
        vars.iter().map(|v| self.vars.binary_search(v).map(|d| own[d]).unwrap_or(0)).collect()
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        for (&v, &c) in other.vars.iter().zip(&other.cards) {
            if let Err(pos) = vars.binary_search(&v) {
                vars.insert(pos, v);
                cards.insert(pos, c);
            }
        }
        let sa = self.strides_in(&vars);
        let sb = other.strides_in(&vars);
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut digits = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            for d in (0..vars.len()).rev() {
                digits[d] += 1;
                ia += sa[d];
                ib += sb[d];
                if digits[d] < cards[d] {
                    break;
                }
                ia -= sa[d] * cards[d];
                ib -= sb[d] * cards[d];
                digits[d] = 0;
            }
        }
        Factor::new(vars, cards, values)
    }

    /// Multiplies by a factor whose variables are a subset of ours.
    pub fn multiply_by_subset(&mut self, other: &Factor) {
        let so = other.strides_in(&self.vars);
        let values = &mut self.values;
        walk(&self.cards, &so, |idx, off| values[idx] *= other.values[off]);
    }

    /// Divides by a factor whose variables are a subset of ours, with `0 / 0 = 0`.
    pub fn divide_by_subset(&mut self, other: &Factor) {
        let so = other.strides_in(&self.vars);
        let values = &mut self.values;
        walk(&self.cards, &so, |idx, off| {
            let d = other.values[off];
            values[idx] = if d == 0.0 { 0.0 } else { values[idx] / d };
        });
    }

    /// Sums out every variable not in `keep` (which must be sorted).
    pub fn marginalize_to(&self, keep: &[usize]) -> Factor {
        let vars: Vec<usize> = keep.iter().copied().filter(|v| self.contains(*v)).collect();
        let cards: Vec<usize> = vars.iter().map(|v| self.cards[self.vars.binary_search(v).unwrap()]).collect();
        let size = cards.iter().product();
        let mut out = Factor::new(vars, cards, vec![0.0; size]);
        let so = out.strides_in(&self.vars);
        let src = &self.values;
        let dst = &mut out.values;
        walk(&self.cards, &so, |idx, off| dst[off] += src[idx]);
        out
    }

    /// Zeroes every entry inconsistent with `var = state`.
    pub fn observe(&mut self, var: usize, state: usize) {
        let Ok(d) = self.vars.binary_search(&var) else { return };
        let inner: usize = self.cards[d + 1..].iter().product();
        let card = self.cards[d];
        for (idx, x) in self.values.iter_mut().enumerate() {
            if (idx / inner) % card != state {
                *x = 0.0;
            }
        }
    }

    /// Value at a full assignment of this factor's variables (indexed by variable).
    pub fn value_at(&self, assignment: &[usize]) -> f64 {
        let idx = self.vars.iter().zip(&self.cards).fold(0, |acc, (&v, &c)| acc * c + assignment[v]);
        self.values[idx]
    }

    /// Reorders the table so that `vars` come in the order given (which may be
    /// unsorted), last fastest. Returns the raw values in that layout.
    pub fn values_in_order(&self, order: &[usize]) -> Vec<f64> {
        let own = self.strides_in(order);
        let cards: Vec<usize> = order.iter().map(|v| self.cards[self.vars.binary_search(v).unwrap()]).collect();
        let mut out = vec![0.0; self.values.len()];
        walk(&cards, &own, |idx, off| out[idx] = self.values[off]);
        out
    }

    pub fn max_abs_diff(&self, other: &Factor) -> f64 {
        assert_eq!(self.vars, other.vars);
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}
