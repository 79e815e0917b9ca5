//! Automorphism groups of trees and labeled trees, fixed-point analysis,
//! stabilizer structure, and the reparametrization-group shape of a nodal curve.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::mobius::{exceptional_element_orders, FiniteGroupKind};
use crate::tree::{LabeledTree, Tree, TreeError, Vertex, MAX_ENUMERATED_VERTICES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("permutation is not an automorphism of the tree")]
    NotAnAutomorphism,
    #[error("vertex {0} is not in the tree")]
    UnknownVertex(Vertex),
}

/// Permutation of vertex positions (indices into the sorted vertex list).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Option<Self> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || std::mem::replace(&mut seen[i], true) {
                return None;
            }
        }
        Some(Permutation(images))
    }

    /// Builds from a vertex map on `t`.
    pub fn from_vertex_map(t: &Tree, map: &BTreeMap<Vertex, Vertex>) -> Option<Self> {
        let images = t
            .vertices()
            .iter()
            .map(|v| map.get(v).and_then(|w| t.index_of(*w)))
            .collect::<Option<Vec<_>>>()?;
        Self::from_images(images)
    }

    pub fn to_vertex_map(&self, t: &Tree) -> BTreeMap<Vertex, Vertex> {
        let vs = t.vertices();
        self.0.iter().enumerate().map(|(i, &j)| (vs[i], vs[j])).collect()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&j| self.0[j]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Permutation(inv)
    }

    pub fn order(&self) -> usize {
        let mut p = self.clone();
        let mut k = 1;
        while !p.is_identity() {
            p = p.compose(self);
            k += 1;
        }
        k
    }

    /// Image of vertex `v` of `t`.
    pub fn apply(&self, t: &Tree, v: Vertex) -> Vertex {
        t.vertices()[self.0[t.index_of(v).expect("vertex of the tree")]]
    }

    pub fn is_automorphism_of(&self, t: &Tree) -> bool {
        self.0.len() == t.len() && t.edges().iter().all(|&(a, b)| t.has_edge(self.apply(t, a), self.apply(t, b)))
    }
}

/// A group of tree automorphisms, elements sorted with the identity first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutomorphismGroup {
    tree: Tree,
    elements: Vec<Permutation>,
}

impl AutomorphismGroup {
    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        self.elements.binary_search(p).is_ok()
    }

    fn filtered(&self, keep: impl Fn(&Permutation) -> bool) -> AutomorphismGroup {
        AutomorphismGroup {
            tree: self.tree.clone(),
            elements: self.elements.iter().filter(|p| keep(p)).cloned().collect(),
        }
    }

    /// Generators picked greedily: an element joins when it is not yet in the
    /// subgroup generated so far.
    pub fn generators(&self) -> Vec<Permutation> {
        let mut gens = Vec::new();
        let mut span: HashSet<Permutation> = HashSet::from([Permutation::identity(self.tree.len())]);
        for p in &self.elements {
            if span.len() == self.elements.len() {
                break;
            }
            if !span.contains(p) {
                gens.push(p.clone());
                span = closure(&gens, self.tree.len());
            }
        }
        gens
    }

    /// Identity present, every element an automorphism, inverses present,
    /// and the element set equal to the closure of its generators.
    pub fn satisfies_group_axioms(&self) -> bool {
        let n = self.tree.len();
        let set: HashSet<&Permutation> = self.elements.iter().collect();
        set.len() == self.elements.len()
            && set.contains(&Permutation::identity(n))
            && self.elements.iter().all(|p| p.is_automorphism_of(&self.tree) && set.contains(&p.inverse()))
            && {
                let gens = self.generators();
                let span = closure(&gens, n);
                span.len() == set.len() && span.iter().all(|p| set.contains(p))
            }
    }
}

/// Subgroup generated by `gens`, by breadth-first multiplication.
pub fn closure(gens: &[Permutation], n: usize) -> HashSet<Permutation> {
    let id = Permutation::identity(n);
    let mut set = HashSet::from([id.clone()]);
    let mut frontier = vec![id];
    while let Some(p) = frontier.pop() {
        for g in gens {
            let q = g.compose(&p);
            if set.insert(q.clone()) {
                frontier.push(q);
            }
        }
    }
    set
}

/// Rooted structure used by the automorphism search: children lists and
/// interned subtree codes for a rooting at the center.
struct RootedCodes {
    children: Vec<Vec<usize>>,
    code: Vec<usize>,
    roots: Vec<usize>,
}

impl RootedCodes {
    fn new(t: &Tree) -> Self {
        let n = t.len();
        let centers: Vec<usize> = t.center().iter().map(|&c| t.index_of(c).unwrap()).collect();
        let mut children = vec![Vec::new(); n];
        let mut order = Vec::with_capacity(n);
        let mut parent = vec![usize::MAX; n];
        for &c in &centers {
            parent[c] = c;
            order.push(c);
        }
        let vs = t.vertices();
        let mut i = 0;
        while i < order.len() {
            let u = order[i];
            for &w in t.neighbors(vs[u]) {
                let wi = t.index_of(w).unwrap();
                if parent[wi] == usize::MAX {
                    parent[wi] = u;
                    children[u].push(wi);
                    order.push(wi);
                }
            }
            i += 1;
        }
        let mut intern: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut code = vec![0; n];
        for &u in order.iter().rev() {
            let mut key: Vec<usize> = children[u].iter().map(|&c| code[c]).collect();
            key.sort_unstable();
            let next = intern.len();
            code[u] = *intern.entry(key).or_insert(next);
        }
        RootedCodes { children, code, roots: centers }
    }

    fn search(&self, pending: &mut Vec<(usize, usize)>, img: &mut [usize], emit: &mut dyn FnMut(&[usize])) {
        let Some((u, w)) = pending.pop() else {
            emit(img);
            return;
        };
        img[u] = w;
        let mut used = vec![false; self.children[w].len()];
        self.match_children(u, w, 0, &mut used, pending, img, emit);
        pending.push((u, w));
    }

    #[allow(clippy::too_many_arguments)]
    fn match_children(
        &self,
        u: usize,
        w: usize,
        i: usize,
        used: &mut [bool],
        pending: &mut Vec<(usize, usize)>,
        img: &mut [usize],
        emit: &mut dyn FnMut(&[usize]),
    ) {
        let (cu, cw) = (&self.children[u], &self.children[w]);
        if i == cu.len() {
            self.search(pending, img, emit);
            return;
        }
        for j in 0..cw.len() {
            if !used[j] && self.code[cu[i]] == self.code[cw[j]] {
                used[j] = true;
                pending.push((cu[i], cw[j]));
                self.match_children(u, w, i + 1, used, pending, img, emit);
                pending.pop();
                used[j] = false;
            }
        }
    }
}

/// All automorphisms of `t`.
///
/// The center is fixed (or the two centers swapped), so the search roots
/// there and only matches children carrying the same subtree code.
pub fn automorphism_group(t: &Tree) -> Result<AutomorphismGroup, AutError> {
    if t.len() > MAX_ENUMERATED_VERTICES {
        return Err(TreeError::SizeLimitExceeded { size: t.len(), limit: MAX_ENUMERATED_VERTICES }.into());
    }
    let rc = RootedCodes::new(t);
    let mut elements = Vec::new();
    let mut img = vec![0; t.len()];
    let mut starts = vec![rc.roots.iter().map(|&r| (r, r)).collect::<Vec<_>>()];
    if let [c1, c2] = rc.roots[..] {
        if rc.code[c1] == rc.code[c2] {
            starts.push(vec![(c1, c2), (c2, c1)]);
        }
    }
    for mut pending in starts {
        rc.search(&mut pending, &mut img, &mut |m| elements.push(Permutation(m.to_vec())));
    }
    elements.sort_unstable();
    Ok(AutomorphismGroup { tree: t.clone(), elements })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// `φ ∘ L = L`.
    Ordered,
    /// `φ ∘ L = L ∘ p` for some permutation `p` of the labels.
    Unordered,
}

pub fn labeled_automorphism_group(lt: &LabeledTree, mode: LabelMode) -> Result<AutomorphismGroup, AutError> {
    let t = lt.tree();
    let group = automorphism_group(t)?;
    Ok(match mode {
        LabelMode::Ordered => {
            group.filtered(|p| lt.labels().iter().all(|&v| p.apply(t, v) == v))
        }
        LabelMode::Unordered => {
            // A relabeling p exists iff φ preserves the number of labels per vertex.
            group.filtered(|p| t.vertices().iter().all(|&v| lt.label_count(p.apply(t, v)) == lt.label_count(v)))
        }
    })
}

/// Fixed locus of an automorphism on the geometric realization of the tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixedPointSet {
    pub fixed_vertices: BTreeSet<Vertex>,
    pub pointwise_fixed_edges: BTreeSet<(Vertex, Vertex)>,
    /// Edges whose endpoints are swapped, so only their midpoint is fixed.
    pub midpoint_only_edges: BTreeSet<(Vertex, Vertex)>,
}

impl FixedPointSet {
    pub fn dimension(&self) -> usize {
        usize::from(!self.pointwise_fixed_edges.is_empty())
    }

    pub fn is_empty(&self) -> bool {
        self.fixed_vertices.is_empty() && self.midpoint_only_edges.is_empty()
    }

    pub fn is_single_vertex(&self, v: Vertex) -> bool {
        self.fixed_vertices.len() == 1 && self.fixed_vertices.contains(&v) && self.midpoint_only_edges.is_empty()
    }
}

pub fn fixed_point_set(t: &Tree, phi: &Permutation) -> Result<FixedPointSet, AutError> {
    if !phi.is_automorphism_of(t) {
        return Err(AutError::NotAnAutomorphism);
    }
    let fixed_vertices: BTreeSet<Vertex> = t.vertices().iter().copied().filter(|&v| phi.apply(t, v) == v).collect();
    let pointwise_fixed_edges = t
        .edges()
        .iter()
        .copied()
        .filter(|(a, b)| fixed_vertices.contains(a) && fixed_vertices.contains(b))
        .collect();
    let midpoint_only_edges = t
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| phi.apply(t, a) == b && phi.apply(t, b) == a)
        .collect();
    Ok(FixedPointSet { fixed_vertices, pointwise_fixed_edges, midpoint_only_edges })
}

/// Edges whose endpoints are swapped by some involution of the tree.
pub fn midpoint_involution_edges(t: &Tree) -> Result<Vec<(Vertex, Vertex)>, AutError> {
    let group = automorphism_group(t)?;
    let mut found = BTreeSet::new();
    for p in group.elements() {
        if p.is_identity() || !p.compose(p).is_identity() {
            continue;
        }
        for &(a, b) in t.edges() {
            if p.apply(t, a) == b && p.apply(t, b) == a {
                found.insert((a, b));
            }
        }
    }
    Ok(found.into_iter().collect())
}

/// Edges whose endpoints are swapped by any automorphism at all.
pub fn flipped_edges(t: &Tree) -> Result<Vec<(Vertex, Vertex)>, AutError> {
    let group = automorphism_group(t)?;
    Ok(t.edges()
        .iter()
        .copied()
        .filter(|&(a, b)| group.elements().iter().any(|p| p.apply(t, a) == b && p.apply(t, b) == a))
        .collect())
}

/// The edge admitting a midpoint involution, if there is one. At most one
/// edge of a tree can have this property.
pub fn involution_midpoint(t: &Tree) -> Result<Option<(Vertex, Vertex)>, AutError> {
    let edges = midpoint_involution_edges(t)?;
    assert!(edges.len() <= 1, "more than one involution midpoint: {edges:?}");
    Ok(edges.first().copied())
}

/// Non-tip vertices ending a maximal simple chain from a tip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelOnePoints {
    pub points: BTreeSet<Vertex>,
    /// For each level one point, the tips whose maximal simple chain ends there.
    pub chains_from: BTreeMap<Vertex, Vec<Vertex>>,
    /// A level one point reached from two tips, with those two tips.
    pub witness: Option<(Vertex, Vertex, Vertex)>,
}

pub fn level_one_points(t: &Tree) -> LevelOnePoints {
    let mut chains_from: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
    if t.len() > 1 {
        for tip in t.tips() {
            let (mut prev, mut cur) = (tip, t.neighbors(tip)[0]);
            while t.valence(cur) == 2 {
                let next = t.neighbors(cur).iter().copied().find(|&w| w != prev).unwrap();
                (prev, cur) = (cur, next);
            }
            if t.valence(cur) >= 3 {
                chains_from.entry(cur).or_default().push(tip);
            }
        }
    }
    let witness = chains_from.iter().find(|(_, tips)| tips.len() >= 2).map(|(&v, tips)| (v, tips[0], tips[1]));
    LevelOnePoints { points: chains_from.keys().copied().collect(), chains_from, witness }
}

/// Automorphisms fixing `v0`.
pub fn stabilizer(t: &Tree, v0: Vertex) -> Result<AutomorphismGroup, AutError> {
    if !t.contains(v0) {
        return Err(AutError::UnknownVertex(v0));
    }
    Ok(automorphism_group(t)?.filtered(|p| p.apply(t, v0) == v0))
}

/// Isomorphism class of branches hanging off the base vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BranchClass {
    /// Roots `v_k` of the isomorphic branches, ascending.
    pub roots: Vec<Vertex>,
    pub multiplicity: usize,
    /// Order of the root-fixing automorphism group of one branch.
    pub branch_order: u128,
    /// Structure of that group, computed on the first branch.
    pub branch: StabilizerStructure,
}

/// `Γ_{v0}` as an iterated product over branch classes: each class of `l`
/// isomorphic branches contributes `|Γ_branch|^l · l!`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilizerStructure {
    pub base: Vertex,
    /// Excluded neighbor when describing a branch rooted at `base`.
    pub parent: Option<Vertex>,
    pub classes: Vec<BranchClass>,
    pub order: u128,
}

impl StabilizerStructure {
    /// Cycle lengths `l_i` of the maximal element acting on the neighbors of the base.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.multiplicity).collect()
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

fn rooted_structure(t: &Tree, base: Vertex, parent: Option<Vertex>) -> StabilizerStructure {
    let mut by_code: BTreeMap<String, Vec<Vertex>> = BTreeMap::new();
    for &w in t.neighbors(base) {
        if Some(w) != parent {
            by_code.entry(t.rooted_encoding(w, Some(base))).or_default().push(w);
        }
    }
    let mut classes: Vec<BranchClass> = by_code
        .into_values()
        .map(|roots| {
            let branch = rooted_structure(t, roots[0], Some(base));
            BranchClass { multiplicity: roots.len(), branch_order: branch.order, roots, branch }
        })
        .collect();
    classes.sort_by_key(|c| c.roots[0]);
    let order = classes
        .iter()
        .map(|c| c.branch_order.pow(c.multiplicity as u32) * factorial(c.multiplicity))
        .product();
    StabilizerStructure { base, parent, classes, order }
}

pub fn decompose_stabilizer(t: &Tree, v0: Vertex) -> Result<StabilizerStructure, AutError> {
    if !t.contains(v0) {
        return Err(AutError::UnknownVertex(v0));
    }
    Ok(rooted_structure(t, v0, None))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleFixedVertexReport {
    pub exists_witness: bool,
    /// First element of `Γ_{v0}` whose only fixed point is `v0`.
    pub witness: Option<Permutation>,
    pub s_t_equals_stabilizer: bool,
    /// Whether the common fixed set of `Γ_{v0}` is exactly `{v0}`.
    pub common_fixed_is_base: bool,
}

pub fn single_fixed_vertex_analysis(t: &Tree, v0: Vertex) -> Result<SingleFixedVertexReport, AutError> {
    let group = automorphism_group(t)?;
    if !t.contains(v0) {
        return Err(AutError::UnknownVertex(v0));
    }
    let stab = group.filtered(|p| p.apply(t, v0) == v0);
    let mut witness = None;
    let mut common: BTreeSet<Vertex> = t.vertices().iter().copied().collect();
    let mut common_midpoint = false;
    for p in stab.elements() {
        let fixed = fixed_point_set(t, p)?;
        if witness.is_none() && fixed.is_single_vertex(v0) {
            witness = Some(p.clone());
        }
        common.retain(|v| fixed.fixed_vertices.contains(v));
        common_midpoint |= !fixed.midpoint_only_edges.is_empty();
    }
    Ok(SingleFixedVertexReport {
        exists_witness: witness.is_some(),
        witness,
        s_t_equals_stabilizer: stab.order() == group.order(),
        common_fixed_is_base: common.len() == 1 && common.contains(&v0) && !common_midpoint,
    })
}

/// Point-stabilizer subgroup of `PSL(2, C)` on an unstable component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum GroupFactor {
    /// All of `PSL(2, C)`: no double points.
    G0,
    /// Fixing one double point: `z -> a z + b`.
    G1,
    /// Fixing two double points: `z -> a z`.
    G2,
}

impl GroupFactor {
    pub fn real_dimension(self) -> usize {
        match self {
            GroupFactor::G0 => 6,
            GroupFactor::G1 => 4,
            GroupFactor::G2 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReparametrizationShape {
    /// One factor per component with at most two double points.
    pub factors: BTreeMap<Vertex, GroupFactor>,
    pub real_dimension: usize,
}

/// Continuous reparametrization group of a nodal curve modeled on the tree:
/// one point-stabilizer factor per component carrying fewer than three double points.
pub fn reparametrization_shape(lt: &LabeledTree) -> ReparametrizationShape {
    let t = lt.tree();
    let factors: BTreeMap<Vertex, GroupFactor> = t
        .vertices()
        .iter()
        .filter_map(|&v| match t.valence(v) {
            0 => Some((v, GroupFactor::G0)),
            1 => Some((v, GroupFactor::G1)),
            2 => Some((v, GroupFactor::G2)),
            _ => None,
        })
        .collect();
    let real_dimension = factors.values().map(|f| f.real_dimension()).sum();
    ReparametrizationShape { factors, real_dimension }
}

/// Finite subgroup kinds of `PSL(2, C)` that can contain an element of order `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissibleImage {
    /// `C_m` for every `m` divisible by `multiple_of`.
    Cyclic { multiple_of: usize },
    /// `D_m` for every `m` divisible by `multiple_of`.
    Dihedral { multiple_of: usize },
    Tetrahedral,
    Octahedral,
    Icosahedral,
}

impl AdmissibleImage {
    /// Whether a concrete kind falls in this family.
    pub fn admits(&self, kind: FiniteGroupKind) -> bool {
        match (*self, kind) {
            (AdmissibleImage::Cyclic { multiple_of }, FiniteGroupKind::Cyclic(m)) => m % multiple_of == 0,
            (AdmissibleImage::Dihedral { multiple_of }, FiniteGroupKind::Dihedral(m)) => m % multiple_of == 0,
            (AdmissibleImage::Tetrahedral, FiniteGroupKind::Tetrahedral)
            | (AdmissibleImage::Octahedral, FiniteGroupKind::Octahedral)
            | (AdmissibleImage::Icosahedral, FiniteGroupKind::Icosahedral) => true,
            _ => false,
        }
    }
}

/// Families of finite subgroups containing an element of order `l`.
///
/// `C_m` needs `l | m`. `D_m` needs `l | m`, except that every dihedral
/// group has involutions, so `l = 2` admits all of them. The three
/// exceptional groups are kept when their element-order scan contains `l`.
pub fn admissible_images(l: usize) -> Vec<AdmissibleImage> {
    let mut out = vec![
        AdmissibleImage::Cyclic { multiple_of: l },
        AdmissibleImage::Dihedral { multiple_of: if l == 2 { 1 } else { l } },
    ];
    let orders = exceptional_element_orders();
    for (kind, image) in [
        (FiniteGroupKind::Tetrahedral, AdmissibleImage::Tetrahedral),
        (FiniteGroupKind::Octahedral, AdmissibleImage::Octahedral),
        (FiniteGroupKind::Icosahedral, AdmissibleImage::Icosahedral),
    ] {
        if orders[&kind].contains(&l) {
            out.push(image);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleReport {
    pub roots: Vec<Vertex>,
    pub length: usize,
    pub admissible: Vec<AdmissibleImage>,
}

/// For each cycle of isomorphic branches at `v0`, the finite-subgroup images
/// in `PSL(2, C)` that could realize its cyclic permutation.
pub fn realizable_symmetry_report(t: &Tree, v0: Vertex) -> Result<Vec<CycleReport>, AutError> {
    let s = decompose_stabilizer(t, v0)?;
    Ok(s.classes
        .iter()
        .map(|c| CycleReport { roots: c.roots.clone(), length: c.multiplicity, admissible: admissible_images(c.multiplicity) })
        .collect())
}
