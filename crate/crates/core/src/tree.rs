//! Finite trees, n-labeled trees, stability and minimal stabilizations.
//!
//! Vertex ids are small non-negative integers. Every listing produced here
//! is sorted by vertex id so that reports are reproducible.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

/// Vertex identifier.
pub type Vertex = usize;

/// Largest vertex count accepted by the enumeration and group routines.
pub const MAX_ENUMERATED_VERTICES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("a tree needs at least one vertex")]
    Empty,
    #[error("vertex {0} is listed twice")]
    DuplicateVertex(Vertex),
    #[error("edge ({0}, {0}) is a self loop")]
    SelfLoop(Vertex),
    #[error("edge ({0}, {1}) is listed more than once")]
    DuplicateEdge(Vertex, Vertex),
    #[error("edge ({0}, {1}) mentions a vertex outside the vertex set")]
    UnknownVertex(Vertex, Vertex),
    #[error("edge ({0}, {1}) closes a cycle")]
    HasCycle(Vertex, Vertex),
    #[error("vertex {0} is not connected to vertex {1}")]
    Disconnected(Vertex, Vertex),
    #[error("size {size} exceeds the supported limit {limit}")]
    SizeLimitExceeded { size: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("n must be positive")]
    NoLabels,
    #[error("label map has {got} entries but n = {n}")]
    WrongLength { n: usize, got: usize },
    #[error("label {label} points at unknown vertex {vertex}")]
    UnknownVertex { label: usize, vertex: Vertex },
}

/// A finite simplicial tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    vertices: Vec<Vertex>,
    edges: Vec<(Vertex, Vertex)>,
    adjacency: BTreeMap<Vertex, Vec<Vertex>>,
}

impl Tree {
    /// Validates a candidate vertex/edge set and builds the tree.
    pub fn new(
        vertices: impl IntoIterator<Item = Vertex>,
        edges: impl IntoIterator<Item = (Vertex, Vertex)>,
    ) -> Result<Self, TreeError> {
        let mut vs: Vec<Vertex> = vertices.into_iter().collect();
        if vs.is_empty() {
            return Err(TreeError::Empty);
        }
        vs.sort_unstable();
        if let Some(w) = vs.windows(2).find(|w| w[0] == w[1]) {
            return Err(TreeError::DuplicateVertex(w[0]));
        }
        let index: BTreeMap<Vertex, usize> = vs.iter().enumerate().map(|(i, &v)| (v, i)).collect();

        let mut seen = BTreeSet::new();
        let mut es = Vec::new();
        let mut parent: Vec<usize> = (0..vs.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (a, b) in edges {
            if a == b {
                return Err(TreeError::SelfLoop(a));
            }
            let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) else {
                return Err(TreeError::UnknownVertex(a, b));
            };
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(TreeError::DuplicateEdge(e.0, e.1));
            }
            let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
            if ra == rb {
                return Err(TreeError::HasCycle(e.0, e.1));
            }
            parent[ra] = rb;
            es.push(e);
        }
        let root = find(&mut parent, 0);
        for i in 1..vs.len() {
            if find(&mut parent, i) != root {
                return Err(TreeError::Disconnected(vs[i], vs[0]));
            }
        }
        es.sort_unstable();
        Ok(Self::from_parts(vs, es))
    }

    fn from_parts(vertices: Vec<Vertex>, edges: Vec<(Vertex, Vertex)>) -> Self {
        let mut adjacency: BTreeMap<Vertex, Vec<Vertex>> =
            vertices.iter().map(|&v| (v, Vec::new())).collect();
        for &(a, b) in &edges {
            adjacency.get_mut(&a).unwrap().push(b);
            adjacency.get_mut(&b).unwrap().push(a);
        }
        for list in adjacency.values_mut() {
            list.sort_unstable();
        }
        Tree { vertices, edges, adjacency }
    }

    pub fn single(v: Vertex) -> Self {
        Self::from_parts(vec![v], Vec::new())
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        assert!(n >= 1);
        Self::from_parts((0..n).collect(), (1..n).map(|i| (i - 1, i)).collect())
    }

    /// Star with center `0` and leaves `1..=leaves`.
    pub fn star(leaves: usize) -> Self {
        Self::from_parts((0..=leaves).collect(), (1..=leaves).map(|i| (0, i)).collect())
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Edges as `(min, max)` pairs in ascending order.
    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.adjacency.contains_key(&v)
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        self.adjacency.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn valence(&self, v: Vertex) -> usize {
        self.neighbors(v).len()
    }

    pub fn has_edge(&self, a: Vertex, b: Vertex) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Position of `v` in the sorted vertex list.
    pub fn index_of(&self, v: Vertex) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    /// Vertices of valence one. The lone vertex of a single-vertex tree
    /// counts as a tip so that it can start a total order.
    pub fn tips(&self) -> Vec<Vertex> {
        if self.len() == 1 {
            return self.vertices.clone();
        }
        self.vertices.iter().copied().filter(|&v| self.valence(v) == 1).collect()
    }

    pub fn is_tip(&self, v: Vertex) -> bool {
        self.contains(v) && (self.len() == 1 || self.valence(v) == 1)
    }

    /// The unique chain from `a` to `b`, both ends included.
    pub fn path_between(&self, a: Vertex, b: Vertex) -> Vec<Vertex> {
        let parents = self.parents_from(a);
        let mut out = vec![b];
        let mut cur = b;
        while cur != a {
            cur = parents[&cur];
            out.push(cur);
        }
        out.reverse();
        out
    }

    /// Parent pointers of a breadth-first search rooted at `root`.
    pub fn parents_from(&self, root: Vertex) -> BTreeMap<Vertex, Vertex> {
        let mut parents = BTreeMap::new();
        parents.insert(root, root);
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &w in self.neighbors(v) {
                if let Entry::Vacant(e) = parents.entry(w) {
                    e.insert(v);
                    queue.push_back(w);
                }
            }
        }
        parents
    }

    /// Breadth-first vertex order from `root`.
    pub fn bfs_order(&self, root: Vertex) -> Vec<Vertex> {
        let mut seen = BTreeSet::from([root]);
        let mut order = vec![root];
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            for &w in self.neighbors(v) {
                if seen.insert(w) {
                    order.push(w);
                }
            }
            i += 1;
        }
        order
    }

    /// Vertices reachable from `start` without passing through `blocked`.
    pub fn branch(&self, start: Vertex, blocked: Vertex) -> BTreeSet<Vertex> {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in self.neighbors(v) {
                if w != blocked && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Whether `set` induces a connected subgraph. The empty set counts as connected.
    pub fn is_connected_subset(&self, set: &BTreeSet<Vertex>) -> bool {
        let Some(&first) = set.iter().next() else {
            return true;
        };
        let mut seen = BTreeSet::from([first]);
        let mut stack = vec![first];
        while let Some(v) = stack.pop() {
            for &w in self.neighbors(v) {
                if set.contains(&w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == set.len()
    }

    /// Renames vertices through `rename`, which must be injective on the vertex set.
    pub fn relabel(&self, rename: impl Fn(Vertex) -> Vertex) -> Tree {
        let vertices: Vec<Vertex> = self.vertices.iter().map(|&v| rename(v)).collect();
        let edges: Vec<(Vertex, Vertex)> =
            self.edges.iter().map(|&(a, b)| (rename(a), rename(b))).collect();
        Tree::new(vertices, edges).expect("relabeling must be injective")
    }

    /// One or two central vertices (the last survivors of leaf peeling).
    pub fn center(&self) -> Vec<Vertex> {
        let mut degree: BTreeMap<Vertex, usize> =
            self.vertices.iter().map(|&v| (v, self.valence(v))).collect();
        let mut layer: Vec<Vertex> = self.vertices.iter().copied().filter(|v| degree[v] <= 1).collect();
        let mut remaining = self.len();
        while remaining > 2 {
            remaining -= layer.len();
            let mut next = Vec::new();
            for &leaf in &layer {
                degree.insert(leaf, 0);
                for &w in self.neighbors(leaf) {
                    let d = degree.get_mut(&w).unwrap();
                    if *d > 0 {
                        *d -= 1;
                        if *d == 1 {
                            next.push(w);
                        }
                    }
                }
            }
            next.sort_unstable();
            layer = next;
        }
        let mut c = if remaining == self.len() { self.vertices.clone() } else { layer };
        c.sort_unstable();
        c
    }

    /// AHU encoding of the subtree hanging below `v` away from `parent`.
    pub fn rooted_encoding(&self, v: Vertex, parent: Option<Vertex>) -> String {
        let mut children: Vec<String> = self
            .neighbors(v)
            .iter()
            .filter(|&&w| Some(w) != parent)
            .map(|&w| self.rooted_encoding(w, Some(v)))
            .collect();
        children.sort_unstable();
        let mut s = String::with_capacity(2 + children.iter().map(String::len).sum::<usize>());
        s.push('(');
        for c in children {
            s.push_str(&c);
        }
        s.push(')');
        s
    }

    /// Isomorphism-invariant encoding: the AHU string rooted at the center,
    /// taking the smaller string when there are two centers.
    pub fn canonical_form(&self) -> String {
        self.center()
            .into_iter()
            .map(|c| self.rooted_encoding(c, None))
            .min()
            .expect("a tree has a center")
    }

    /// Copy of the tree relabeled `0..n` in breadth-first order from the
    /// canonical root, children visited in canonical-encoding order.
    pub fn canonical_relabel(&self) -> Tree {
        let root = self
            .center()
            .into_iter()
            .min_by_key(|&c| self.rooted_encoding(c, None))
            .unwrap();
        let mut order = vec![root];
        let mut parent_of = BTreeMap::from([(root, None::<Vertex>)]);
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            let p = parent_of[&v];
            let mut kids: Vec<(String, Vertex)> = self
                .neighbors(v)
                .iter()
                .filter(|&&w| Some(w) != p)
                .map(|&w| (self.rooted_encoding(w, Some(v)), w))
                .collect();
            kids.sort();
            for (_, w) in kids {
                parent_of.insert(w, Some(v));
                order.push(w);
            }
            i += 1;
        }
        let rank: BTreeMap<Vertex, Vertex> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        self.relabel(|v| rank[&v])
    }
}

/// Checks a candidate vertex and edge set, naming the violated invariant on failure.
pub fn validate_tree(
    vertices: &[Vertex],
    edges: &[(Vertex, Vertex)],
) -> Result<Tree, TreeError> {
    Tree::new(vertices.iter().copied(), edges.iter().copied())
}

/// All trees with `1..=v_max` vertices, one per isomorphism class.
///
/// Trees are grouped by vertex count, sorted by canonical form inside each
/// group, and relabeled `0..k` by [`Tree::canonical_relabel`].
pub fn enumerate_trees(v_max: usize) -> Result<Vec<Tree>, TreeError> {
    Ok(enumerate_by_size(v_max)?.into_iter().flatten().collect())
}

/// Same as [`enumerate_trees`], with one list per vertex count (index 0 holds size 1).
pub fn enumerate_by_size(v_max: usize) -> Result<Vec<Vec<Tree>>, TreeError> {
    if v_max == 0 || v_max > MAX_ENUMERATED_VERTICES {
        return Err(TreeError::SizeLimitExceeded { size: v_max, limit: MAX_ENUMERATED_VERTICES });
    }
    let mut levels = vec![vec![Tree::single(0)]];
    for k in 2..=v_max {
        let mut classes: BTreeMap<String, Tree> = BTreeMap::new();
        for t in &levels[k - 2] {
            for &v in t.vertices() {
                let mut edges = t.edges().to_vec();
                edges.push((v, k - 1));
                let grown = Tree::from_parts((0..k).collect(), {
                    edges.sort_unstable();
                    edges
                });
                classes.entry(grown.canonical_form()).or_insert(grown);
            }
        }
        levels.push(classes.into_values().map(|t| t.canonical_relabel()).collect());
    }
    Ok(levels)
}

/// Tree with a total label map `{1..n} -> vertices`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledTree {
    tree: Tree,
    labels: Vec<Vertex>,
}

impl LabeledTree {
    /// `labels[i - 1]` is the vertex carrying label `i`.
    pub fn new(tree: Tree, labels: Vec<Vertex>) -> Result<Self, LabelError> {
        if labels.is_empty() {
            return Err(LabelError::NoLabels);
        }
        for (i, &v) in labels.iter().enumerate() {
            if !tree.contains(v) {
                return Err(LabelError::UnknownVertex { label: i + 1, vertex: v });
            }
        }
        Ok(LabeledTree { tree, labels })
    }

    /// Builds from an explicit `label -> vertex` map that must cover `1..=n`.
    pub fn from_map(tree: Tree, n: usize, map: &BTreeMap<usize, Vertex>) -> Result<Self, LabelError> {
        if n == 0 {
            return Err(LabelError::NoLabels);
        }
        if map.len() != n || map.keys().copied().ne(1..=n) {
            return Err(LabelError::WrongLength { n, got: map.len() });
        }
        Self::new(tree, map.values().copied().collect())
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Vertex carrying label `i` (1-based).
    pub fn label(&self, i: usize) -> Vertex {
        self.labels[i - 1]
    }

    pub fn labels(&self) -> &[Vertex] {
        &self.labels
    }

    /// `L^{-1}(v)` in ascending order.
    pub fn labels_at(&self, v: Vertex) -> Vec<usize> {
        (1..=self.n()).filter(|&i| self.labels[i - 1] == v).collect()
    }

    pub fn label_count(&self, v: Vertex) -> usize {
        self.labels.iter().filter(|&&w| w == v).count()
    }

    pub fn is_stable_at(&self, v: Vertex) -> bool {
        self.tree.valence(v) + self.label_count(v) >= 3
    }

    pub fn is_stable(&self) -> bool {
        is_stable_labeled(self)
    }

    pub fn shape(&self) -> NodalShape {
        NodalShape::of(self)
    }
}

/// `Val(v) + #L^{-1}(v) >= 3` at every vertex.
pub fn is_stable_labeled(lt: &LabeledTree) -> bool {
    lt.tree.vertices().iter().all(|&v| lt.is_stable_at(v))
}

/// Per-vertex special-point counts of a nodal curve modeled on a labeled tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodalShape {
    pub double_points: BTreeMap<Vertex, usize>,
    pub marked_points: BTreeMap<Vertex, usize>,
}

impl NodalShape {
    pub fn of(lt: &LabeledTree) -> Self {
        let vs = lt.tree.vertices();
        NodalShape {
            double_points: vs.iter().map(|&v| (v, lt.tree.valence(v))).collect(),
            marked_points: vs.iter().map(|&v| (v, lt.label_count(v))).collect(),
        }
    }

    pub fn special_points(&self, v: Vertex) -> usize {
        self.double_points[&v] + self.marked_points[&v]
    }
}

/// Number of labels a minimal stabilization puts on each vertex.
fn forced_label_counts(t: &Tree) -> Vec<(Vertex, usize)> {
    t.vertices().iter().map(|&v| (v, 3usize.saturating_sub(t.valence(v)))).collect()
}

/// Minimal stabilizations of `t`.
///
/// The number of labels per vertex is forced (`3 - Val(v)` on unstable
/// vertices, none elsewhere), so up to renaming the labels there is exactly
/// one; it is returned with `1..n` handed out in vertex-id order. Every
/// distinct label map is available from [`minimal_labelings`].
pub fn minimal_stabilizations(t: &Tree) -> Vec<LabeledTree> {
    let labels: Vec<Vertex> = forced_label_counts(t)
        .into_iter()
        .flat_map(|(v, k)| std::iter::repeat_n(v, k))
        .collect();
    vec![LabeledTree::new(t.clone(), labels).expect("every tree has an unstable vertex")]
}

/// Every label map realizing the minimal stabilization of `t`, in
/// lexicographic order of `(L(1), ..., L(n))`.
pub fn minimal_labelings(t: &Tree) -> Vec<LabeledTree> {
    let counts = forced_label_counts(t);
    let n: usize = counts.iter().map(|c| c.1).sum();
    let mut remaining: Vec<usize> = counts.iter().map(|c| c.1).collect();
    let mut current = Vec::with_capacity(n);
    let mut out = Vec::new();
    fn rec(
        counts: &[(Vertex, usize)],
        remaining: &mut [usize],
        current: &mut Vec<Vertex>,
        n: usize,
        t: &Tree,
        out: &mut Vec<LabeledTree>,
    ) {
        if current.len() == n {
            out.push(LabeledTree { tree: t.clone(), labels: current.clone() });
            return;
        }
        for i in 0..counts.len() {
            if remaining[i] > 0 {
                remaining[i] -= 1;
                current.push(counts[i].0);
                rec(counts, remaining, current, n, t, out);
                current.pop();
                remaining[i] += 1;
            }
        }
    }
    rec(&counts, &mut remaining, &mut current, n, t, &mut out);
    out
}

/// Checks `n - 3 = #E + sum over stable v of (#d_v - 3)` for a labeled tree.
pub fn stabilization_formula_holds(lt: &LabeledTree) -> bool {
    let t = lt.tree();
    let excess: usize = t
        .vertices()
        .iter()
        .map(|&v| t.valence(v))
        .filter(|&d| d >= 3)
        .map(|d| d - 3)
        .sum();
    lt.n() as i64 - 3 == (t.edge_count() + excess) as i64
}
