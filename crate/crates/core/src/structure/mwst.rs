use super::info::WeightMatrix;

/// Maximum-weight spanning tree (Kruskal; equal weights resolved by
/// lexicographic `(a, b)` order), oriented away from `root` by depth-first
/// traversal visiting neighbors in ascending order. Returns `(parent, child)`
/// edges in the index space of `weights`.
pub fn mwst(weights: &WeightMatrix, root: usize) -> Vec<(usize, usize)> {
    let n = weights.len();
    if n <= 1 {
        return Vec::new();
    }
    assert!(root < n, "root {root} out of range");
    let mut candidates: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    candidates.sort_by(|&(a, b), &(c, d)| weights.get(c, d).total_cmp(&weights.get(a, b)).then((a, b).cmp(&(c, d))));

    let mut comp: Vec<usize> = (0..n).collect();
    fn find(comp: &mut [usize], mut x: usize) -> usize {
        while comp[x] != x {
            comp[x] = comp[comp[x]];
            x = comp[x];
        }
        x
    }
    let mut adj = vec![Vec::new(); n];
    let mut taken = 0;
    for (a, b) in candidates {
        let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
        if ra != rb {
            comp[ra] = rb;
            adj[a].push(b);
            adj[b].push(a);
            taken += 1;
            if taken == n - 1 {
                break;
            }
        }
    }
    for nb in &mut adj {
        nb.sort_unstable();
    }

    let mut edges = Vec::with_capacity(n - 1);
    let mut visited = vec![false; n];
    let mut stack = vec![root];
    visited[root] = true;
    while let Some(v) = stack.pop() {
        for &u in adj[v].iter().rev() {
            if !visited[u] {
                visited[u] = true;
                edges.push((v, u));
                stack.push(u);
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Total weight of an edge set.
pub fn tree_weight(weights: &WeightMatrix, edges: &[(usize, usize)]) -> f64 {
    edges.iter().map(|&(a, b)| weights.get(a, b)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_node_example() {
        let mut w = WeightMatrix::zeros(3);
        w.set(0, 1, 0.9);
        w.set(1, 2, 0.8);
        w.set(0, 2, 0.1);
        assert_eq!(mwst(&w, 0), vec![(0, 1), (1, 2)]);
        assert_eq!(mwst(&w, 2), vec![(1, 0), (2, 1)]);
    }

    #[test]
    fn single_variable_has_no_edges() {
        assert!(mwst(&WeightMatrix::zeros(1), 0).is_empty());
    }

    #[test]
    fn equal_weights_are_deterministic() {
        let w = WeightMatrix::from_fn(4, |_, _| 1.0);
        // lexicographic order picks the star (0,1), (0,2), (0,3)
        assert_eq!(mwst(&w, 0), vec![(0, 1), (0, 2), (0, 3)]);
        assert_eq!(mwst(&w, 0), mwst(&w.clone(), 0));
    }
}
