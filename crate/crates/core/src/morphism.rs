//! Pre-morphisms, morphisms, flipped identifications and edge contractions.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::tree::{Tree, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MorphismError {
    #[error("vertex {0} of the domain has no image")]
    NotTotal(Vertex),
    #[error("vertex {0} is mapped outside the codomain")]
    ImageOutsideCodomain(Vertex),
    #[error("map is not a pre-morphism")]
    NotAPremorphism,
    #[error("map is not a morphism")]
    NotAMorphism,
    #[error("map is not surjective")]
    NotSurjective,
    #[error("({0}, {1}) is not an edge")]
    NotAnEdge(Vertex, Vertex),
}

/// Vertex map between two trees, with the morphism conditions evaluated at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeMorphism {
    domain: Tree,
    codomain: Tree,
    map: BTreeMap<Vertex, Vertex>,
    premorphism: bool,
    morphism: bool,
}

impl TreeMorphism {
    pub fn new(domain: Tree, codomain: Tree, map: BTreeMap<Vertex, Vertex>) -> Result<Self, MorphismError> {
        for &v in domain.vertices() {
            match map.get(&v) {
                None => return Err(MorphismError::NotTotal(v)),
                Some(&w) if !codomain.contains(w) => return Err(MorphismError::ImageOutsideCodomain(v)),
                _ => {}
            }
        }
        let map: BTreeMap<Vertex, Vertex> =
            domain.vertices().iter().map(|v| (*v, map[v])).collect();
        let premorphism = premorphism_condition(&domain, &codomain, &map);
        let morphism = premorphism && fibers_connected(&domain, &map);
        Ok(TreeMorphism { domain, codomain, map, premorphism, morphism })
    }

    pub fn from_fn(domain: &Tree, codomain: &Tree, f: impl Fn(Vertex) -> Vertex) -> Result<Self, MorphismError> {
        let map = domain.vertices().iter().map(|&v| (v, f(v))).collect();
        Self::new(domain.clone(), codomain.clone(), map)
    }

    pub fn identity(t: &Tree) -> Self {
        Self::from_fn(t, t, |v| v).unwrap()
    }

    pub fn domain(&self) -> &Tree {
        &self.domain
    }

    pub fn codomain(&self) -> &Tree {
        &self.codomain
    }

    pub fn map(&self) -> &BTreeMap<Vertex, Vertex> {
        &self.map
    }

    pub fn apply(&self, v: Vertex) -> Vertex {
        self.map[&v]
    }

    pub fn is_premorphism(&self) -> bool {
        self.premorphism
    }

    pub fn is_morphism(&self) -> bool {
        self.morphism
    }

    pub fn is_surjective(&self) -> bool {
        let image: BTreeSet<Vertex> = self.map.values().copied().collect();
        image.len() == self.codomain.len()
    }

    /// Bijective morphism whose inverse is also a morphism.
    pub fn is_isomorphism(&self) -> bool {
        self.morphism
            && self.domain.len() == self.codomain.len()
            && self.is_surjective()
            && self.domain.edges().iter().all(|&(a, b)| self.apply(a) != self.apply(b))
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &TreeMorphism) -> Result<TreeMorphism, MorphismError> {
        let map = self.map.iter().map(|(&v, &w)| (v, other.apply(w))).collect();
        TreeMorphism::new(self.domain.clone(), other.codomain.clone(), map)
    }

    pub fn fiber(&self, w: Vertex) -> BTreeSet<Vertex> {
        self.map.iter().filter(|(_, &x)| x == w).map(|(&v, _)| v).collect()
    }
}

fn premorphism_condition(domain: &Tree, codomain: &Tree, map: &BTreeMap<Vertex, Vertex>) -> bool {
    domain.edges().iter().all(|&(a, b)| {
        let (x, y) = (map[&a], map[&b]);
        x == y || codomain.has_edge(x, y)
    })
}

fn fibers_connected(domain: &Tree, map: &BTreeMap<Vertex, Vertex>) -> bool {
    let mut fibers: BTreeMap<Vertex, BTreeSet<Vertex>> = BTreeMap::new();
    for (&v, &w) in map {
        fibers.entry(w).or_default().insert(v);
    }
    fibers.values().all(|f| domain.is_connected_subset(f))
}

/// Condition (1): adjacent vertices go to equal or adjacent vertices.
pub fn is_premorphism(m: &TreeMorphism) -> bool {
    m.is_premorphism()
}

/// Condition (1) plus connected (or empty) fibers.
pub fn is_morphism(m: &TreeMorphism) -> bool {
    m.is_morphism()
}

/// A chain `a, b_1, ..., b_k, c` of the domain folded onto one edge: the
/// ends share an image and every interior vertex goes to one adjacent vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlippedWitness {
    pub chain: Vec<Vertex>,
}

impl FlippedWitness {
    pub fn ends(&self) -> (Vertex, Vertex) {
        (self.chain[0], *self.chain.last().unwrap())
    }
}

/// Finds a flipped identification, if any.
///
/// The folded chain is a length-two chain once the interior run, which is
/// collapsed to a single image vertex, is read as one vertex. The witness is
/// the one with the lexicographically least pair of ends.
pub fn has_flipped_identification(m: &TreeMorphism) -> Result<Option<FlippedWitness>, MorphismError> {
    if !m.is_premorphism() {
        return Err(MorphismError::NotAPremorphism);
    }
    let vs = m.domain().vertices();
    for (i, &a) in vs.iter().enumerate() {
        for &c in &vs[i + 1..] {
            if m.apply(a) != m.apply(c) {
                continue;
            }
            let chain = m.domain().path_between(a, c);
            let interior = &chain[1..chain.len() - 1];
            let Some(&b) = interior.first() else { continue };
            let mid = m.apply(b);
            if mid != m.apply(a) && interior.iter().all(|&x| m.apply(x) == mid) {
                return Ok(Some(FlippedWitness { chain }));
            }
        }
    }
    Ok(None)
}

/// Strict reading: a length-two chain `a - b - c` with `φ(a) = φ(c) != φ(b)`.
/// Kept for comparison; it misses folds whose middle spans several vertices.
pub fn has_strict_length_two_flip(m: &TreeMorphism) -> bool {
    let t = m.domain();
    t.vertices().iter().any(|&b| {
        let nb = t.neighbors(b);
        nb.iter().enumerate().any(|(i, &a)| {
            nb[i + 1..].iter().any(|&c| m.apply(a) == m.apply(c) && m.apply(a) != m.apply(b))
        })
    })
}

/// Collapse of the edge `[v u]` into `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contraction {
    pub source: Tree,
    pub contracted_edge: (Vertex, Vertex),
    pub result: Tree,
    pub map: TreeMorphism,
}

impl Contraction {
    pub fn kept(&self) -> Vertex {
        self.contracted_edge.0
    }

    pub fn removed(&self) -> Vertex {
        self.contracted_edge.1
    }
}

/// Removes `u`, re-attaching its other neighbors to `v`.
pub fn contract_edge(t: &Tree, v: Vertex, u: Vertex) -> Result<Contraction, MorphismError> {
    if v == u || !t.has_edge(v, u) {
        return Err(MorphismError::NotAnEdge(v, u));
    }
    let rename = |x: Vertex| if x == u { v } else { x };
    let vertices = t.vertices().iter().copied().filter(|&x| x != u);
    let edges = t
        .edges()
        .iter()
        .filter(|&&(a, b)| (a, b) != (v.min(u), v.max(u)))
        .map(|&(a, b)| (rename(a), rename(b)));
    let result = Tree::new(vertices, edges).expect("contracting an edge keeps a tree");
    let map = TreeMorphism::from_fn(t, &result, rename)?;
    debug_assert!(map.is_morphism());
    Ok(Contraction { source: t.clone(), contracted_edge: (v, u), result, map })
}

/// Factors a surjective morphism as a chain of edge contractions followed by an isomorphism.
///
/// Each step contracts the least edge lying inside a fiber into its smaller
/// endpoint. Applying the contractions in order and then the isomorphism
/// reproduces `m` vertex by vertex.
pub fn factor_surjective_morphism(m: &TreeMorphism) -> Result<(Vec<Contraction>, TreeMorphism), MorphismError> {
    if !m.is_morphism() {
        return Err(MorphismError::NotAMorphism);
    }
    if !m.is_surjective() {
        return Err(MorphismError::NotSurjective);
    }
    let mut current = m.domain().clone();
    let mut rest: BTreeMap<Vertex, Vertex> = m.map().clone();
    let mut steps = Vec::new();
    while let Some(&(a, b)) = current.edges().iter().find(|&&(a, b)| rest[&a] == rest[&b]) {
        let c = contract_edge(&current, a, b)?;
        rest.remove(&b);
        current = c.result.clone();
        steps.push(c);
    }
    let iso = TreeMorphism::new(current, m.codomain().clone(), rest)?;
    debug_assert!(iso.is_isomorphism());
    Ok((steps, iso))
}

/// Every morphism extending a map defined on the tips of `t1`.
///
/// Non-tip vertices are filled in by backtracking along a breadth-first
/// order, pruning with condition (1); complete maps are then filtered by
/// fiber connectivity. Output is sorted by vertex map.
pub fn morphisms_with_tip_values(
    t1: &Tree,
    t2: &Tree,
    tip_assignment: &BTreeMap<Vertex, Vertex>,
) -> Vec<TreeMorphism> {
    let tips = t1.tips();
    if tips.iter().any(|v| !tip_assignment.get(v).is_some_and(|w| t2.contains(*w))) {
        return Vec::new();
    }
    let order = t1.bfs_order(tips[0]);
    let mut partial: BTreeMap<Vertex, Vertex> = tips.iter().map(|v| (*v, tip_assignment[v])).collect();
    let mut out = Vec::new();
    extend_premorphisms(t1, t2, &order, 0, &mut partial, &mut |map| {
        let m = TreeMorphism::new(t1.clone(), t2.clone(), map.clone()).unwrap();
        if m.is_morphism() {
            out.push(m);
        }
    });
    out
}

/// All pre-morphisms `t1 -> t2`, by backtracking over a breadth-first order.
pub fn premorphisms(t1: &Tree, t2: &Tree) -> Vec<TreeMorphism> {
    let order = t1.bfs_order(t1.vertices()[0]);
    let mut partial = BTreeMap::new();
    let mut out = Vec::new();
    extend_premorphisms(t1, t2, &order, 0, &mut partial, &mut |map| {
        out.push(TreeMorphism::new(t1.clone(), t2.clone(), map.clone()).unwrap());
    });
    out
}

fn extend_premorphisms(
    t1: &Tree,
    t2: &Tree,
    order: &[Vertex],
    i: usize,
    partial: &mut BTreeMap<Vertex, Vertex>,
    emit: &mut dyn FnMut(&BTreeMap<Vertex, Vertex>),
) {
    if i == order.len() {
        emit(partial);
        return;
    }
    let v = order[i];
    let compatible = |w: Vertex, partial: &BTreeMap<Vertex, Vertex>| {
        t1.neighbors(v).iter().all(|n| match partial.get(n) {
            Some(&x) => x == w || t2.has_edge(x, w),
            None => true,
        })
    };
    if let Some(&w) = partial.get(&v) {
        if compatible(w, partial) {
            extend_premorphisms(t1, t2, order, i + 1, partial, emit);
        }
        return;
    }
    for &w in t2.vertices() {
        if compatible(w, partial) {
            partial.insert(v, w);
            extend_premorphisms(t1, t2, order, i + 1, partial, emit);
            partial.remove(&v);
        }
    }
}
