//! Junction-tree construction (moralize, min-fill triangulation, maximum
//! separator spanning tree) and two-pass message passing.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::network::{Assignment, Network, Variable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Separator {
    pub cliques: (usize, usize),
    pub vars: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct JunctionTree {
    variables: Vec<Variable>,
    cliques: Vec<Vec<usize>>,
    separators: Vec<Separator>,
    adjacency: Vec<Vec<(usize, usize)>>,
    potentials: Vec<Factor>,
    var_clique: Vec<usize>,
    family_clique: Vec<usize>,
    /// Rooted at clique 0: `(clique, parent, separator)` in post-order.
    collect_order: Vec<(usize, usize, usize)>,
    children: Vec<Vec<(usize, usize)>>,
    prior: Calibration,
}

/// Clique and separator marginals after message passing with some evidence.
#[derive(Debug, Clone)]
pub struct Calibration {
    beliefs: Vec<Factor>,
    separators: Vec<Factor>,
    log_evidence: f64,
}

impl Calibration {
    pub fn beliefs(&self) -> &[Factor] {
        &self.beliefs
    }

    pub fn separator_beliefs(&self) -> &[Factor] {
        &self.separators
    }

    /// `ln P(evidence)`.
    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }
}

fn moral_graph(net: &Network) -> Vec<BTreeSet<usize>> {
    let n = net.len();
    let mut adj = vec![BTreeSet::new(); n];
    for i in 0..n {
        let ps = net.dag().parents(i);
        for (a, &p) in ps.iter().enumerate() {
            adj[i].insert(p);
            adj[p].insert(i);
            for &q in &ps[a + 1..] {
                adj[p].insert(q);
                adj[q].insert(p);
            }
        }
    }
    adj
}

/// Elimination cliques under min-fill, ties to the lowest variable index.
fn triangulate(mut adj: Vec<BTreeSet<usize>>) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut alive: BTreeSet<usize> = (0..n).collect();
    let mut cliques = Vec::new();
    while !alive.is_empty() {
        let mut best = None;
        for &v in &alive {
            let nbrs: Vec<usize> = adj[v].iter().copied().collect();
            let mut fill = 0;
            for (a, &x) in nbrs.iter().enumerate() {
                for &y in &nbrs[a + 1..] {
                    if !adj[x].contains(&y) {
                        fill += 1;
                    }
                }
            }
            if best.is_none_or(|(f, _)| fill < f) {
                best = Some((fill, v));
            }
        }
        let (_, v) = best.unwrap();
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        for (a, &x) in nbrs.iter().enumerate() {
            for &y in &nbrs[a + 1..] {
                adj[x].insert(y);
                adj[y].insert(x);
            }
        }
        let mut clique = nbrs.clone();
        clique.push(v);
        clique.sort_unstable();
        for &x in &nbrs {
            adj[x].remove(&v);
        }
        adj[v].clear();
        alive.remove(&v);
        cliques.push(clique);
    }
    // keep maximal cliques only, first occurrence wins on equality
    let mut kept: Vec<Vec<usize>> = Vec::new();
    for (a, c) in cliques.iter().enumerate() {
        let dominated = cliques.iter().enumerate().any(|(b, other)| {
            b != a && is_subset(c, other) && (c.len() < other.len() || b < a)
        });
        if !dominated {
            kept.push(c.clone());
        }
    }
    kept
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

impl JunctionTree {
    /// Builds and calibrates (without evidence) the junction tree of `net`.
    pub fn new(net: &Network) -> Self {
        let n = net.len();
        let cards = net.cardinalities();
        let cliques = triangulate(moral_graph(net));
        let m = cliques.len();

        // maximum-weight spanning tree over separator sizes
        let mut candidates = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                candidates.push((intersect(&cliques[a], &cliques[b]).len(), a, b));
            }
        }
        candidates.sort_by(|x, y| y.0.cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut uf: Vec<usize> = (0..m).collect();
        let mut separators = Vec::new();
        let mut adjacency = vec![Vec::new(); m];
        for (_, a, b) in candidates {
            let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
            if ra != rb {
                uf[ra] = rb;
                let s = separators.len();
                separators.push(Separator { cliques: (a, b), vars: intersect(&cliques[a], &cliques[b]) });
                adjacency[a].push((b, s));
                adjacency[b].push((a, s));
            }
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }

        let smallest_containing = |vars: &[usize]| {
            (0..m)
                .filter(|&c| is_subset(vars, &cliques[c]))
                .min_by_key(|&c| (cliques[c].len(), c))
                .expect("triangulation covers every family")
        };
        let var_clique: Vec<usize> = (0..n).map(|v| smallest_containing(&[v])).collect();
        let mut potentials: Vec<Factor> =
            cliques.iter().map(|c| Factor::ones(c.clone(), c.iter().map(|&v| cards[v]).collect())).collect();
        let mut family_clique = Vec::with_capacity(n);
        for i in 0..n {
            let mut fam = net.dag().parents(i).to_vec();
            fam.push(i);
            fam.sort_unstable();
            let c = (0..m).find(|&c| is_subset(&fam, &cliques[c])).expect("family contained in a clique");
            family_clique.push(c);
            potentials[c].multiply_by_subset(&Factor::from_cpt(net.cpt(i), &cards));
        }

        // root at clique 0, iterative DFS for a deterministic post-order
        let mut children = vec![Vec::new(); m];
        let mut collect_order = Vec::new();
        if m > 0 {
            let mut stack = vec![(0usize, usize::MAX, usize::MAX, false)];
            while let Some((c, parent, sep, expanded)) = stack.pop() {
                if expanded {
                    if parent != usize::MAX {
                        collect_order.push((c, parent, sep));
                    }
                    continue;
                }
                stack.push((c, parent, sep, true));
                for &(nb, s) in adjacency[c].iter().rev() {
                    if nb != parent {
                        children[c].push((nb, s));
                        stack.push((nb, c, s, false));
                    }
                }
            }
            for ch in &mut children {
                ch.sort_unstable();
            }
        }

        let mut jt = JunctionTree {
            variables: net.variables().to_vec(),
            cliques,
            separators,
            adjacency,
            potentials,
            var_clique,
            family_clique,
            collect_order,
            children,
            prior: Calibration { beliefs: Vec::new(), separators: Vec::new(), log_evidence: 0.0 },
        };
        jt.prior = jt.calibrate(&Assignment::empty(n)).expect("a valid network has positive total mass");
        jt
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn separators(&self) -> &[Separator] {
        &self.separators
    }

    pub fn neighbors(&self, clique: usize) -> &[(usize, usize)] {
        &self.adjacency[clique]
    }

    /// Clique holding the CPT of variable `i`.
    pub fn family_clique(&self, i: usize) -> usize {
        self.family_clique[i]
    }

    /// Calibration without evidence.
    pub fn prior(&self) -> &Calibration {
        &self.prior
    }

    /// Two-pass message passing from the root, each message normalized.
    pub fn calibrate(&self, evidence: &Assignment) -> Result<Calibration> {
        evidence.check(&self.variables)?;
        let m = self.cliques.len();
        let mut pots = self.potentials.clone();
        for (v, s) in evidence.observed() {
            pots[self.var_clique[v]].observe(v, s);
        }

        let mut log_z = 0.0;
        let mut up: Vec<Option<Factor>> = vec![None; m];
        for &(c, _, s) in &self.collect_order {
            let mut f = pots[c].clone();
            for &(ch, _) in &self.children[c] {
                f.multiply_by_subset(up[ch].as_ref().unwrap());
            }
            let mut msg = f.marginalize_to(&self.separators[s].vars);
            let z = msg.normalize();
            if z <= 0.0 {
                return Err(Error::ZeroEvidence);
            }
            log_z += z.ln();
            up[c] = Some(msg);
        }
        if m > 0 {
            let mut root = pots[0].clone();
            for &(ch, _) in &self.children[0] {
                root.multiply_by_subset(up[ch].as_ref().unwrap());
            }
            let z = root.sum();
            if z <= 0.0 {
                return Err(Error::ZeroEvidence);
            }
            log_z += z.ln();
        }

        let mut down: Vec<Option<Factor>> = vec![None; m];
        for &(c, parent, s) in self.collect_order.iter().rev() {
            let mut f = pots[parent].clone();
            if let Some(d) = &down[parent] {
                f.multiply_by_subset(d);
            }
            for &(sib, _) in &self.children[parent] {
                if sib != c {
                    f.multiply_by_subset(up[sib].as_ref().unwrap());
                }
            }
            let mut msg = f.marginalize_to(&self.separators[s].vars);
            msg.normalize();
            down[c] = Some(msg);
        }

        let mut beliefs = Vec::with_capacity(m);
        for c in 0..m {
            let mut b = pots[c].clone();
            if let Some(d) = &down[c] {
                b.multiply_by_subset(d);
            }
            for &(ch, _) in &self.children[c] {
                b.multiply_by_subset(up[ch].as_ref().unwrap());
            }
            b.normalize();
            beliefs.push(b);
        }
        let separators = self
            .separators
            .iter()
            .map(|s| {
                let mut f = beliefs[s.cliques.0].marginalize_to(&s.vars);
                f.normalize();
                f
            })
            .collect();
        Ok(Calibration { beliefs, separators, log_evidence: log_z })
    }

    /// Marginal of `target` from a calibration.
    pub fn marginal(&self, cal: &Calibration, target: usize) -> Vec<f64> {
        let mut f = cal.beliefs[self.var_clique[target]].marginalize_to(&[target]);
        f.normalize();
        f.values().to_vec()
    }

    /// Joint posterior over an arbitrary variable set, as a factor over the
    /// sorted set. Variables not sharing a clique are joined through the
    /// connecting subtree (clique beliefs over separator beliefs).
    pub fn joint(&self, cal: &Calibration, vars: &[usize]) -> Factor {
        let mut q: Vec<usize> = vars.to_vec();
        q.sort_unstable();
        q.dedup();
        if q.is_empty() {
            return Factor::scalar(1.0);
        }
        if let Some(c) = (0..self.cliques.len())
            .filter(|&c| is_subset(&q, &self.cliques[c]))
            .min_by_key(|&c| (self.cliques[c].len(), c))
        {
            let mut f = cal.beliefs[c].marginalize_to(&q);
            f.normalize();
            return f;
        }

        let m = self.cliques.len();
        let root = self.var_clique[q[0]];
        let mut required = vec![false; m];
        for &v in &q {
            required[self.var_clique[v]] = true;
        }
        // root the tree at `root`
        let mut parent = vec![(usize::MAX, usize::MAX); m];
        let mut order = vec![root];
        let mut seen = vec![false; m];
        seen[root] = true;
        let mut i = 0;
        while i < order.len() {
            let c = order[i];
            for &(nb, s) in &self.adjacency[c] {
                if !seen[nb] {
                    seen[nb] = true;
                    parent[nb] = (c, s);
                    order.push(nb);
                }
            }
            i += 1;
        }
        let mut needed = required.clone();
        for &c in order.iter().rev() {
            if needed[c] && c != root {
                needed[parent[c].0] = true;
            }
        }
        let mut partial: Vec<Option<Factor>> = vec![None; m];
        for &c in order.iter().rev() {
            if !needed[c] {
                continue;
            }
            let mut f = partial[c].take().unwrap_or_else(|| cal.beliefs[c].clone());
            if c == root {
                let mut out = f.marginalize_to(&q);
                out.normalize();
                return out;
            }
            let (p, s) = parent[c];
            f.divide_by_subset(&cal.separators[s]);
            let mut keep: Vec<usize> = q.iter().chain(&self.separators[s].vars).copied().collect();
            keep.sort_unstable();
            keep.dedup();
            let g = f.marginalize_to(&keep);
            let acc = partial[p].take().unwrap_or_else(|| cal.beliefs[p].clone());
            partial[p] = Some(acc.product(&g));
        }
        unreachable!("root is always reached")
    }

    /// One Hugin-style collect/distribute pass over an existing calibration.
    /// On a calibrated tree this is the identity up to rounding.
    pub fn repropagate(&self, cal: &Calibration) -> Calibration {
        let mut beliefs = cal.beliefs.clone();
        let mut seps = cal.separators.clone();
        let mut absorb = |from: usize, to: usize, s: usize, beliefs: &mut Vec<Factor>| {
            let mut new = beliefs[from].marginalize_to(&self.separators[s].vars);
            new.normalize();
            let mut ratio = new.clone();
            ratio.divide_by_subset(&seps[s]);
            beliefs[to].multiply_by_subset(&ratio);
            beliefs[to].normalize();
            seps[s] = new;
        };
        for &(c, p, s) in &self.collect_order {
            absorb(c, p, s, &mut beliefs);
        }
        for &(c, p, s) in self.collect_order.iter().rev() {
            absorb(p, c, s, &mut beliefs);
        }
        Calibration { beliefs, separators: seps, log_evidence: cal.log_evidence }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Cpt, Dag, Variable};

    fn binary_net(edges: &[(usize, usize)], n: usize) -> Network {
        let vars = (0..n).map(|i| Variable::with_cardinality(format!("V{i}"), 2)).collect();
        Network::uniform(vars, Dag::from_edges(n, edges).unwrap()).unwrap()
    }

    #[test]
    fn chain_cliques() {
        let jt = JunctionTree::new(&binary_net(&[(0, 1), (1, 2)], 3));
        assert_eq!(jt.cliques(), &[vec![0, 1], vec![1, 2]]);
        assert_eq!(jt.separators()[0].vars, vec![1]);
    }

    #[test]
    fn single_node_clique() {
        let jt = JunctionTree::new(&binary_net(&[], 1));
        assert_eq!(jt.cliques(), &[vec![0]]);
        assert!(jt.separators().is_empty());
    }

    #[test]
    fn diverging_cliques() {
        // A <- B -> C
        let jt = JunctionTree::new(&binary_net(&[(1, 0), (1, 2)], 3));
        assert_eq!(jt.cliques(), &[vec![0, 1], vec![1, 2]]);
    }

    #[test]
    fn v_structure_is_married() {
        let jt = JunctionTree::new(&binary_net(&[(0, 2), (1, 2)], 3));
        assert_eq!(jt.cliques(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn bayes_rule_posterior() {
        let vars = vec![Variable::with_cardinality("A", 2), Variable::with_cardinality("B", 2)];
        let net = Network::new(
            vars,
            Dag::from_edges(2, &[(0, 1)]).unwrap(),
            vec![Cpt::new(0, vec![], 2, vec![0.5, 0.5]), Cpt::new(1, vec![0], 2, vec![0.7, 0.3, 0.2, 0.8])],
        )
        .unwrap();
        let jt = JunctionTree::new(&net);
        let cal = jt.calibrate(&Assignment::empty(2).with(1, 1)).unwrap();
        let post = jt.marginal(&cal, 0);
        assert!((post[1] - 8.0 / 11.0).abs() < 1e-12);
        assert!((cal.log_evidence() - 0.55f64.ln()).abs() < 1e-12);
    }
}
