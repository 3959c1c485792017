//! The sparse formula left once 2-clauses are exhausted: its clause-interaction
//! graph, the forest test, and a constructive satisfier for forests.
//!
//! Two clauses are adjacent when they share at least one variable. Duplicate
//! clauses are distinct nodes joined by one edge.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use thiserror::Error;

use crate::formula::{Assignment, Formula, Variable};

#[derive(Clone, Debug)]
struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return a;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        a
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Component {
    pub size: usize,
    pub edges: usize,
}

impl Component {
    pub fn is_tree(&self) -> bool {
        self.edges + 1 == self.size
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionGraph {
    nodes: usize,
    /// Sorted, deduplicated pairs `(i, j)` with `i < j`.
    edges: Vec<(u32, u32)>,
}

impl InteractionGraph {
    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.nodes];
        for &(i, j) in &self.edges {
            adj[i as usize].push(j);
            adj[j as usize].push(i);
        }
        adj
    }

    /// Components sorted by decreasing size.
    pub fn components(&self) -> Vec<Component> {
        let mut dsu = DisjointSet::new(self.nodes);
        for &(i, j) in &self.edges {
            dsu.union(i as usize, j as usize);
        }
        let mut by_root: BTreeMap<usize, Component> = BTreeMap::new();
        for v in 0..self.nodes {
            let root = dsu.find(v);
            by_root
                .entry(root)
                .or_insert(Component { size: 0, edges: 0 })
                .size += 1;
        }
        for &(i, _) in &self.edges {
            let root = dsu.find(i as usize);
            by_root.get_mut(&root).expect("root seen").edges += 1;
        }
        let mut comps: Vec<Component> = by_root.into_values().collect();
        comps.sort_by(|a, b| b.cmp(a));
        comps
    }

    /// Histogram of component sizes: `size -> (count, trees among them)`.
    pub fn size_histogram(&self) -> BTreeMap<usize, (usize, usize)> {
        let mut hist = BTreeMap::new();
        for c in self.components() {
            let e = hist.entry(c.size).or_insert((0, 0));
            e.0 += 1;
            e.1 += usize::from(c.is_tree());
        }
        hist
    }
}

pub fn build_graph(f: &Formula) -> InteractionGraph {
    let mut edges = Vec::new();
    for ids in f.occurrence_lists() {
        for (k, &i) in ids.iter().enumerate() {
            for &j in &ids[k + 1..] {
                edges.push((i.min(j), i.max(j)));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    InteractionGraph {
        nodes: f.m(),
        edges,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ForestCheck {
    pub is_forest: bool,
    pub max_component: usize,
}

pub fn is_forest(g: &InteractionGraph) -> ForestCheck {
    let comps = g.components();
    ForestCheck {
        is_forest: comps.iter().all(Component::is_tree),
        max_component: comps.first().map_or(0, |c| c.size),
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum ResidualError {
    #[error("clause-interaction graph has a cycle (largest component {max_component})")]
    NotForest { max_component: usize },
}

/// Order in which clauses are removed when repeatedly taking the lowest-id
/// clause with at most one remaining neighbour. Clauses left on cycles are
/// never removed.
pub fn peeling_order(g: &InteractionGraph) -> Vec<usize> {
    let adj = g.neighbors();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut removed = vec![false; g.nodes];
    let mut ready: BinaryHeap<Reverse<usize>> = (0..g.nodes)
        .filter(|&c| degree[c] <= 1)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(g.nodes);
    while let Some(Reverse(c)) = ready.pop() {
        if removed[c] {
            continue;
        }
        removed[c] = true;
        order.push(c);
        for &nb in &adj[c] {
            let nb = nb as usize;
            if !removed[nb] {
                degree[nb] -= 1;
                if degree[nb] == 1 || degree[nb] == 0 {
                    ready.push(Reverse(nb));
                }
            }
        }
    }
    order
}

/// Satisfies a formula whose interaction graph is a forest by assigning
/// clauses in reverse peeling order. Each clause then sees only variables
/// fixed by its single later-peeled neighbour: if one of them is true the
/// rest go false, otherwise its lowest unassigned variable goes true.
pub fn leaf_peel_satisfy(f: &Formula) -> Result<Assignment, ResidualError> {
    let g = build_graph(f);
    let check = is_forest(&g);
    if !check.is_forest {
        return Err(ResidualError::NotForest {
            max_component: check.max_component,
        });
    }
    let order = peeling_order(&g);
    assert_eq!(order.len(), f.m(), "a forest peels completely");

    let mut value: Vec<Option<bool>> = vec![None; f.n()];
    for &c in order.iter().rev() {
        let slots = f.clauses()[c].slots();
        let trues = slots.iter().filter(|&&s| value[s] == Some(true)).count();
        assert!(trues <= 1, "clause {c} already has {trues} true variables");
        let mut need_true = trues == 0;
        for s in slots {
            if value[s].is_none() {
                value[s] = Some(need_true);
                need_true = false;
            }
        }
        assert!(
            !need_true,
            "clause {c} has no true variable and none left to set"
        );
    }
    let a = Assignment::from_values(value.into_iter().map(|v| v.unwrap_or(false)).collect());
    assert!(
        f.evaluate(&a),
        "leaf peeling produced an invalid assignment"
    );
    Ok(a)
}

/// Clauses still alive once a greedy run exhausts its 2-clauses, reindexed
/// over the still-unset variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualFormula {
    pub formula: Formula,
    /// Map from residual variable slot to the original variable.
    pub original: Vec<Variable>,
}

impl ResidualFormula {
    /// Clauses per remaining variable.
    pub fn density(&self) -> f64 {
        if self.formula.n() == 0 {
            0.0
        } else {
            self.formula.density()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Clause;

    fn f(n: usize, cs: &[[u32; 3]]) -> Formula {
        Formula::new(
            n,
            cs.iter()
                .map(|c| Clause::new(c[0], c[1], c[2]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn triangle() -> Formula {
        f(6, &[[1, 2, 3], [3, 4, 5], [1, 5, 6]])
    }

    #[test]
    fn graph_examples() {
        let g = build_graph(&f(6, &[[1, 2, 3], [4, 5, 6]]));
        assert_eq!((g.node_count(), g.edge_count()), (2, 0));
        assert_eq!(g.components(), vec![Component { size: 1, edges: 0 }; 2]);

        let g = build_graph(&f(5, &[[1, 2, 3], [3, 4, 5]]));
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.components(), vec![Component { size: 2, edges: 1 }]);

        let g = build_graph(&triangle());
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.components(), vec![Component { size: 3, edges: 3 }]);
    }

    #[test]
    fn forest_examples() {
        assert_eq!(
            is_forest(&build_graph(&triangle())),
            ForestCheck {
                is_forest: false,
                max_component: 3
            }
        );
        assert_eq!(
            is_forest(&build_graph(&f(4, &[]))),
            ForestCheck {
                is_forest: true,
                max_component: 0
            }
        );
    }

    #[test]
    fn shared_pair_is_a_single_edge() {
        let g = build_graph(&f(4, &[[1, 2, 3], [1, 2, 4]]));
        assert_eq!(g.edges(), &[(0, 1)]);
        let dup = build_graph(&f(3, &[[1, 2, 3], [1, 2, 3]]));
        assert_eq!(dup.edges(), &[(0, 1)]);
        assert!(is_forest(&dup).is_forest);
    }

    #[test]
    fn peel_single_clause() {
        let g = f(5, &[[1, 2, 3]]);
        let a = leaf_peel_satisfy(&g).unwrap();
        assert!(g.evaluate(&a));
        assert_eq!(
            a.true_vars().collect::<Vec<_>>(),
            vec![Variable::new(1).unwrap()]
        );
    }

    #[test]
    fn peel_clauses_sharing_two_variables() {
        let g = f(4, &[[1, 2, 3], [1, 2, 4]]);
        let sat = (0..16u64)
            .filter(|&b| g.evaluate(&Assignment::from_bits(4, b)))
            .count();
        assert!(sat > 0);
        let a = leaf_peel_satisfy(&g).unwrap();
        assert_eq!(a, Assignment::from_values(vec![true, false, false, false]));
    }

    #[test]
    fn peel_duplicates_and_chains() {
        let g = f(
            10,
            &[[1, 2, 3], [1, 2, 3], [4, 5, 6], [6, 7, 8], [8, 9, 10]],
        );
        assert!(is_forest(&build_graph(&g)).is_forest);
        assert!(g.evaluate(&leaf_peel_satisfy(&g).unwrap()));
        // A duplicate pair plus any third clause on a shared variable is a triangle.
        let tri = f(5, &[[1, 2, 3], [1, 2, 3], [3, 4, 5]]);
        assert!(leaf_peel_satisfy(&tri).is_err());
    }

    #[test]
    fn peel_rejects_cycles() {
        assert_eq!(
            leaf_peel_satisfy(&triangle()),
            Err(ResidualError::NotForest { max_component: 3 })
        );
        // Three clauses through one variable also form a triangle.
        let star = f(7, &[[1, 2, 3], [1, 4, 5], [1, 6, 7]]);
        assert!(leaf_peel_satisfy(&star).is_err());
    }

    #[test]
    fn peeling_prefers_low_ids() {
        let g = build_graph(&f(7, &[[1, 2, 3], [3, 4, 5], [5, 6, 7]]));
        assert_eq!(peeling_order(&g), vec![0, 1, 2]);
    }

    #[test]
    fn histogram_counts_trees() {
        let g = build_graph(&f(
            12,
            &[[1, 2, 3], [3, 4, 5], [1, 5, 6], [7, 8, 9], [10, 11, 12]],
        ));
        let h = g.size_histogram();
        assert_eq!(h[&1], (2, 2));
        assert_eq!(h[&3], (1, 0));
    }
}
