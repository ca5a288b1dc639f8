//! Discrete Bayesian networks: variables, DAG structure and conditional
//! probability tables.
//!
//! Parent configurations are encoded as a mixed-radix index over the parents
//! in ascending variable-index order, with the last parent varying fastest.
//! A CPT is stored row-major: row `j` (parent configuration) holds the `r`
//! child-state probabilities.

use std::collections::HashSet;

use crate::error::{Error, Result, ValidationError};

/// Tolerance on CPT row sums when loading a model.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// Row sums this close to one are left alone, so rows of correctly rounded
/// ratios such as `n / N` keep their exact values.
pub const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: impl Into<String>, states: impl IntoIterator<Item = S>) -> Self {
        Variable { name: name.into(), states: states.into_iter().map(Into::into).collect() }
    }

    /// Variable with states labelled `"0"`, `"1"`, ...
    pub fn with_cardinality(name: impl Into<String>, card: usize) -> Self {
        Variable { name: name.into(), states: (0..card).map(|k| k.to_string()).collect() }
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// Checks names and state labels for a variable list.
pub fn validate_variables(variables: &[Variable]) -> Result<(), ValidationError> {
    let mut names = HashSet::new();
    for v in variables {
        if !names.insert(v.name.as_str()) {
            return Err(ValidationError::DuplicateVariable(v.name.clone()));
        }
        if v.states.len() < 2 {
            return Err(ValidationError::TooFewStates(v.name.clone()));
        }
        let mut labels = HashSet::new();
        for s in &v.states {
            if !labels.insert(s.as_str()) {
                return Err(ValidationError::DuplicateState { variable: v.name.clone(), state: s.clone() });
            }
        }
    }
    Ok(())
}

/// Directed acyclic graph over variable indices. Parent lists are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    parents: Vec<Vec<usize>>,
}

impl Dag {
    pub fn empty(n: usize) -> Self {
        Dag { parents: vec![Vec::new(); n] }
    }

    /// Builds a DAG from `(parent, child)` pairs, rejecting cycles.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, ValidationError> {
        let mut parents = vec![Vec::new(); n];
        for &(p, c) in edges {
            if p >= n || c >= n {
                return Err(ValidationError::UnknownVariable(p, c));
            }
            if p == c {
                return Err(ValidationError::CycleDetected { cycle: vec![p.to_string(), p.to_string()] });
            }
            if !parents[c].contains(&p) {
                parents[c].push(p);
            }
        }
        for ps in &mut parents {
            ps.sort_unstable();
        }
        let dag = Dag { parents };
        if let Some(cycle) = dag.find_cycle() {
            return Err(ValidationError::CycleDetected { cycle: cycle.iter().map(usize::to_string).collect() });
        }
        Ok(dag)
    }

    /// Chain `0 -> 1 -> ... -> n-1`.
    pub fn chain(n: usize) -> Self {
        let mut dag = Dag::empty(n);
        for c in 1..n {
            dag.parents[c].push(c - 1);
        }
        dag
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn has_edge(&self, p: usize, c: usize) -> bool {
        self.parents[c].binary_search(&p).is_ok()
    }

    /// Edges as `(parent, child)` sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(c, ps)| ps.iter().map(move |&p| (p, c)))
            .collect();
        e.sort_unstable();
        e
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.has_edge(v, c)).collect()
    }

    /// Adds `p -> c` unless it would create a cycle. Returns whether the edge was added.
    pub fn try_add_edge(&mut self, p: usize, c: usize) -> bool {
        if p == c || self.has_edge(p, c) || self.reaches(c, p) {
            return false;
        }
        let pos = self.parents[c].binary_search(&p).unwrap_err();
        self.parents[c].insert(pos, p);
        true
    }

    pub fn remove_edge(&mut self, p: usize, c: usize) -> bool {
        match self.parents[c].binary_search(&p) {
            Ok(pos) => {
                self.parents[c].remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    /// Whether a directed path `from ~> to` exists.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let children: Vec<Vec<usize>> = (0..self.len()).map(|v| self.children(v)).collect();
        let mut seen = vec![false; self.len()];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for &c in &children[v] {
                if c == to {
                    return true;
                }
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    /// Topological order, ties broken by lowest index.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let children: Vec<Vec<usize>> = (0..n).map(|v| self.children(v)).collect();
        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.len();
        let children: Vec<Vec<usize>> = (0..n).map(|v| self.children(v)).collect();
        let mut color = vec![0u8; n];
        let mut stack_path = Vec::new();
        fn visit(
            v: usize,
            children: &[Vec<usize>],
            color: &mut [u8],
            path: &mut Vec<usize>,
        ) -> Option<Vec<usize>> {
            color[v] = 1;
            path.push(v);
            for &c in &children[v] {
                if color[c] == 1 {
                    let start = path.iter().position(|&x| x == c).unwrap();
                    let mut cycle = path[start..].to_vec();
                    cycle.push(c);
                    return Some(cycle);
                }
                if color[c] == 0 {
                    if let Some(cy) = visit(c, children, color, path) {
                        return Some(cy);
                    }
                }
            }
            path.pop();
            color[v] = 2;
            None
        }
        for v in 0..n {
            if color[v] == 0 {
                if let Some(cy) = visit(v, &children, &mut color, &mut stack_path) {
                    return Some(cy);
                }
            }
        }
        None
    }
}

/// Number of parent configurations for the given parents.
pub fn config_count(cards: &[usize], parents: &[usize]) -> usize {
    parents.iter().map(|&p| cards[p]).product()
}

/// Mixed-radix encoding of parent values, last parent fastest.
pub fn encode_config(cards: &[usize], parents: &[usize], values: impl IntoIterator<Item = usize>) -> usize {
    parents.iter().zip(values).fold(0, |j, (&p, x)| j * cards[p] + x)
}

/// Inverse of [`encode_config`]: parent values for configuration `j`.
pub fn decode_config(cards: &[usize], parents: &[usize], mut j: usize) -> Vec<usize> {
    let mut out = vec![0; parents.len()];
    for (slot, &p) in out.iter_mut().zip(parents).rev() {
        *slot = j % cards[p];
        j /= cards[p];
    }
    out
}

/// Conditional probability table `P(child | parents)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    child: usize,
    parents: Vec<usize>,
    states: usize,
    values: Vec<f64>,
}

impl Cpt {
    /// `values` is row-major, `rows * states` long.
    pub fn new(child: usize, parents: Vec<usize>, states: usize, values: Vec<f64>) -> Self {
        assert!(states > 0 && values.len() % states == 0, "CPT values must be rows x states");
        Cpt { child, parents, states, values }
    }

    pub fn uniform(child: usize, parents: Vec<usize>, states: usize, rows: usize) -> Self {
        Cpt::new(child, parents, states, vec![1.0 / states as f64; rows * states])
    }

    pub fn child(&self) -> usize {
        self.child
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.states
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.states..(j + 1) * self.states]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.states..(j + 1) * self.states]
    }

    pub fn prob(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.states + k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.states)
    }
}

/// Partial or total assignment of state indices to variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Assignment(Vec<Option<usize>>);

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Assignment(vec![None; n])
    }

    pub fn from_values(values: Vec<Option<usize>>) -> Self {
        Assignment(values)
    }

    pub fn total(values: &[usize]) -> Self {
        Assignment(values.iter().map(|&v| Some(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(Option::is_none)
    }

    pub fn get(&self, v: usize) -> Option<usize> {
        self.0[v]
    }

    pub fn set(&mut self, v: usize, state: Option<usize>) {
        self.0[v] = state;
    }

    pub fn with(mut self, v: usize, state: usize) -> Self {
        self.0[v] = Some(state);
        self
    }

    pub fn is_total(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    pub fn observed(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().enumerate().filter_map(|(v, s)| s.map(|s| (v, s)))
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.0
    }

    /// Checks every observed state is in range.
    pub fn check(&self, variables: &[Variable]) -> Result<()> {
        if self.0.len() != variables.len() {
            return Err(Error::SchemaMismatch(format!(
                "assignment has {} entries, model has {} variables",
                self.0.len(),
                variables.len()
            )));
        }
        for (v, s) in self.observed() {
            if s >= variables[v].cardinality() {
                return Err(Error::StateOutOfRange { variable: v, state: s });
            }
        }
        Ok(())
    }

    /// Parses `name=label` pairs against a variable list.
    pub fn parse_labels<'a>(
        variables: &[Variable],
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut out = Assignment::empty(variables.len());
        for (name, label) in pairs {
            let v = variables
                .iter()
                .position(|x| x.name == name)
                .ok_or_else(|| Error::parse(name, "unknown variable"))?;
            let s = variables[v]
                .state_index(label)
                .ok_or_else(|| Error::parse(format!("{name}={label}"), "unknown state label"))?;
            out.0[v] = Some(s);
        }
        Ok(out)
    }
}

/// A validated Bayesian network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    variables: Vec<Variable>,
    dag: Dag,
    cpts: Vec<Cpt>,
}

impl Network {
    /// Validates and assembles a network. Rows within [`ROW_TOLERANCE`] of one
    /// are renormalized unless already within [`ROUNDING_SLACK`]; anything
    /// further off is rejected.
    pub fn new(variables: Vec<Variable>, dag: Dag, mut cpts: Vec<Cpt>) -> Result<Self, ValidationError> {
        validate_variables(&variables)?;
        let n = variables.len();
        if dag.len() != n || cpts.len() != n {
            return Err(ValidationError::ShapeMismatch(format!(
                "{} variables, {} graph nodes, {} CPTs",
                n,
                dag.len(),
                cpts.len()
            )));
        }
        let cards: Vec<usize> = variables.iter().map(Variable::cardinality).collect();
        cpts.sort_by_key(Cpt::child);
        for (i, cpt) in cpts.iter_mut().enumerate() {
            let name = &variables[i].name;
            if cpt.child != i {
                return Err(ValidationError::ShapeMismatch(format!("no CPT for variable {name}")));
            }
            if cpt.parents != dag.parents(i) {
                return Err(ValidationError::ShapeMismatch(format!(
                    "CPT parents of {name} are {:?}, graph parents are {:?}",
                    cpt.parents,
                    dag.parents(i)
                )));
            }
            let q = config_count(&cards, &cpt.parents);
            if cpt.states != cards[i] || cpt.rows() != q {
                return Err(ValidationError::ShapeMismatch(format!(
                    "CPT of {name} is {}x{}, expected {}x{}",
                    cpt.rows(),
                    cpt.states,
                    q,
                    cards[i]
                )));
            }
            for j in 0..q {
                let row = cpt.row_mut(j);
                if let Some(&bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(ValidationError::ProbabilityOutOfRange { variable: name.clone(), value: bad });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOLERANCE {
                    return Err(ValidationError::RowNotNormalized { variable: name.clone(), row: j, sum });
                }
                if (sum - 1.0).abs() > ROUNDING_SLACK {
                    row.iter_mut().for_each(|p| *p /= sum);
                }
            }
        }
        Ok(Network { variables, dag, cpts })
    }

    /// Network over `dag` with uniform CPTs.
    pub fn uniform(variables: Vec<Variable>, dag: Dag) -> Result<Self, ValidationError> {
        let cards: Vec<usize> = variables.iter().map(Variable::cardinality).collect();
        let cpts = (0..variables.len())
            .map(|i| {
                let ps = dag.parents(i).to_vec();
                let q = config_count(&cards, &ps);
                Cpt::uniform(i, ps, cards[i], q)
            })
            .collect();
        Network::new(variables, dag, cpts)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, i: usize) -> &Variable {
        &self.variables[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, i: usize) -> &Cpt {
        &self.cpts[i]
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::cardinality).collect()
    }

    /// Swaps in new CPTs for the same structure.
    pub fn with_cpts(&self, cpts: Vec<Cpt>) -> Result<Self, ValidationError> {
        Network::new(self.variables.clone(), self.dag.clone(), cpts)
    }

    /// Index `j` of the parent configuration of `i` under `assignment`.
    pub fn parent_config_index(&self, i: usize, assignment: &Assignment) -> Result<usize> {
        let cards = self.cardinalities();
        let ps = self.dag.parents(i);
        let mut values = Vec::with_capacity(ps.len());
        for &p in ps {
            values.push(assignment.get(p).ok_or(Error::MissingParentValue { variable: i, parent: p })?);
        }
        Ok(encode_config(&cards, ps, values))
    }

    /// Parent values of `i` for configuration `j` as `(parent, state)` pairs.
    pub fn parent_config(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let cards = self.cardinalities();
        let ps = self.dag.parents(i);
        ps.iter().copied().zip(decode_config(&cards, ps, j)).collect()
    }

    /// Product of `θ[i, j(x), x_i]` over all variables.
    pub fn joint_probability(&self, x: &Assignment) -> Result<f64> {
        if x.len() != self.len() || !x.is_total() {
            return Err(Error::PartialAssignment);
        }
        x.check(&self.variables)?;
        let mut p = 1.0;
        for i in 0..self.len() {
            let j = self.parent_config_index(i, x)?;
            p *= self.cpts[i].prob(j, x.get(i).unwrap());
        }
        Ok(p)
    }

    /// Number of free parameters, `Σ q_i (r_i - 1)`.
    pub fn dimension(&self) -> usize {
        dimension(&self.cardinalities(), &self.dag)
    }
}

/// Number of free parameters of `dag` over variables with these cardinalities.
pub fn dimension(cards: &[usize], dag: &Dag) -> usize {
    (0..dag.len()).map(|i| config_count(cards, dag.parents(i)) * (cards[i] - 1)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(name: &str) -> Variable {
        Variable::with_cardinality(name, 2)
    }

    pub(crate) fn chain_ab() -> Network {
        let vars = vec![binary("A"), binary("B")];
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let cpts = vec![
            Cpt::new(0, vec![], 2, vec![0.5, 0.5]),
            Cpt::new(1, vec![0], 2, vec![0.7, 0.3, 0.2, 0.8]),
        ];
        Network::new(vars, dag, cpts).unwrap()
    }

    #[test]
    fn valid_chain_accepted() {
        let net = chain_ab();
        assert_eq!(net.dag().edges(), vec![(0, 1)]);
    }

    #[test]
    fn two_cycle_rejected() {
        let err = Dag::from_edges(2, &[(0, 1), (1, 0)]).unwrap_err();
        match err {
            ValidationError::CycleDetected { cycle } => {
                assert_eq!(cycle.first(), cycle.last());
                assert_eq!(cycle.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unnormalized_row_rejected() {
        let vars = vec![binary("A")];
        let err = Network::new(vars, Dag::empty(1), vec![Cpt::new(0, vec![], 2, vec![0.5, 0.6])]).unwrap_err();
        match err {
            ValidationError::RowNotNormalized { row, sum, .. } => {
                assert_eq!(row, 0);
                assert!((sum - 1.1).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn near_normalized_row_is_renormalized() {
        let vars = vec![binary("A")];
        let net = Network::new(vars, Dag::empty(1), vec![Cpt::new(0, vec![], 2, vec![0.3, 0.7 + 5e-10])]).unwrap();
        let s: f64 = net.cpt(0).row(0).iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let vars = vec![binary("A"), binary("B")];
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let cpts = vec![Cpt::new(0, vec![], 2, vec![0.5, 0.5]), Cpt::new(1, vec![], 2, vec![0.5, 0.5])];
        assert!(matches!(Network::new(vars, dag, cpts), Err(ValidationError::ShapeMismatch(_))));
    }

    #[test]
    fn parentless_config_is_zero() {
        let net = chain_ab();
        assert_eq!(net.parent_config_index(0, &Assignment::empty(2)).unwrap(), 0);
    }

    #[test]
    fn mixed_radix_config_matches_enumeration() {
        // parents P1 (binary) and P2 (ternary): enumerate in order, last fastest
        let cards = [2, 3, 2];
        let parents = [0, 1];
        let mut expected = Vec::new();
        for p1 in 0..2 {
            for p2 in 0..3 {
                expected.push(vec![p1, p2]);
            }
        }
        for (j, values) in expected.iter().enumerate() {
            assert_eq!(encode_config(&cards, &parents, values.iter().copied()), j);
            assert_eq!(&decode_config(&cards, &parents, j), values);
        }
        assert_eq!(encode_config(&cards, &parents, [1, 2]), 5);
        assert_eq!(decode_config(&cards, &parents, 5), vec![1, 2]);
    }

    #[test]
    fn missing_parent_value_reported() {
        let net = chain_ab();
        let err = net.parent_config_index(1, &Assignment::empty(2)).unwrap_err();
        assert!(matches!(err, Error::MissingParentValue { variable: 1, parent: 0 }));
    }

    #[test]
    fn joint_probability_examples() {
        let single = Network::new(vec![binary("A")], Dag::empty(1), vec![Cpt::new(0, vec![], 2, vec![0.3, 0.7])]).unwrap();
        assert_eq!(single.joint_probability(&Assignment::total(&[1])).unwrap(), 0.7);
        let net = chain_ab();
        assert!((net.joint_probability(&Assignment::total(&[1, 1])).unwrap() - 0.4).abs() < 1e-15);
        assert!(matches!(
            net.joint_probability(&Assignment::empty(2).with(0, 1)),
            Err(Error::PartialAssignment)
        ));
    }

    #[test]
    fn deterministic_net_gives_one() {
        let vars = vec![binary("A"), binary("B")];
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let cpts = vec![Cpt::new(0, vec![], 2, vec![0.0, 1.0]), Cpt::new(1, vec![0], 2, vec![1.0, 0.0, 0.0, 1.0])];
        let net = Network::new(vars, dag, cpts).unwrap();
        assert_eq!(net.joint_probability(&Assignment::total(&[1, 1])).unwrap(), 1.0);
    }

    #[test]
    fn duplicate_names_and_states_rejected() {
        let vars = vec![binary("A"), binary("A")];
        assert!(matches!(validate_variables(&vars), Err(ValidationError::DuplicateVariable(_))));
        let vars = vec![Variable::new("A", ["x", "x"])];
        assert!(matches!(validate_variables(&vars), Err(ValidationError::DuplicateState { .. })));
    }

    #[test]
    fn dag_edit_operations() {
        let mut dag = Dag::chain(3);
        assert!(!dag.try_add_edge(2, 0));
        assert!(dag.try_add_edge(0, 2));
        assert_eq!(dag.parents(2), &[0, 1]);
        assert!(dag.remove_edge(1, 2));
        assert_eq!(dag.topological_order(), vec![0, 1, 2]);
        assert_eq!(dag.edge_count(), 2);
    }
}
