//! Total orders on vertices and edges induced by an ordering of the tips,
//! their behavior under edge contraction, and the special-point order of a
//! labeled tree.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::morphism::Contraction;
use crate::tree::{LabeledTree, Tree, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("the tip sequence is not a permutation of the tips")]
    NotATipPermutation,
    #[error("order was built on a different tree than the contraction source")]
    WrongTree,
    #[error("induced order disagrees with the order rebuilt from the induced tips")]
    IncompatibleOrder,
    #[error("labeled tree is not stable")]
    UnstableLabeledTree,
    #[error("tip {0} carries no label")]
    TipWithoutLabel(Vertex),
}

/// Total order on the vertices and edges of a tree.
///
/// Built by walking the chain from the initial vertex to the first target,
/// then, for each further target, the part of its chain not yet ordered.
/// Each edge is ranked with the vertex that first reached it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TotalOrder {
    tree: Tree,
    initial: Vertex,
    ordered_tips: Vec<Vertex>,
    vertex_order: Vec<Vertex>,
    edge_order: Vec<(Vertex, Vertex)>,
}

impl TotalOrder {
    /// Chain construction from `initial` through `targets` in order.
    ///
    /// Targets must cover every tip other than `initial`, so the union of
    /// chains is the whole tree.
    pub fn from_chains(tree: &Tree, initial: Vertex, targets: &[Vertex]) -> Self {
        let parents = tree.parents_from(initial);
        let mut vertex_order = vec![initial];
        let mut edge_order = Vec::new();
        let mut seen = BTreeSet::from([initial]);
        for &t in targets {
            let mut suffix = Vec::new();
            let mut cur = t;
            while !seen.contains(&cur) {
                suffix.push(cur);
                cur = parents[&cur];
            }
            for &x in suffix.iter().rev() {
                let p = parents[&x];
                seen.insert(x);
                vertex_order.push(x);
                edge_order.push((p.min(x), p.max(x)));
            }
        }
        let ordered_tips = std::iter::once(initial)
            .chain(targets.iter().copied())
            .filter(|&v| tree.is_tip(v))
            .fold(Vec::new(), |mut acc, v| {
                if !acc.contains(&v) {
                    acc.push(v);
                }
                acc
            });
        TotalOrder { tree: tree.clone(), initial, ordered_tips, vertex_order, edge_order }
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn initial(&self) -> Vertex {
        self.initial
    }

    pub fn ordered_tips(&self) -> &[Vertex] {
        &self.ordered_tips
    }

    pub fn vertex_order(&self) -> &[Vertex] {
        &self.vertex_order
    }

    pub fn edge_order(&self) -> &[(Vertex, Vertex)] {
        &self.edge_order
    }

    pub fn is_complete(&self) -> bool {
        self.vertex_order.len() == self.tree.len() && self.edge_order.len() == self.tree.edge_count()
    }

    pub fn vertex_rank(&self, v: Vertex) -> Option<usize> {
        self.vertex_order.iter().position(|&x| x == v)
    }

    pub fn edge_rank(&self, a: Vertex, b: Vertex) -> Option<usize> {
        let e = (a.min(b), a.max(b));
        self.edge_order.iter().position(|&x| x == e)
    }

    pub fn vertex_ranks(&self) -> BTreeMap<Vertex, usize> {
        self.vertex_order.iter().enumerate().map(|(i, &v)| (v, i)).collect()
    }
}

/// Total order from a permutation of the tips; the first tip is the initial vertex.
pub fn total_order_from_tip_order(t: &Tree, ordered_tips: &[Vertex]) -> Result<TotalOrder, OrderError> {
    let mut given = ordered_tips.to_vec();
    given.sort_unstable();
    if given != t.tips() {
        return Err(OrderError::NotATipPermutation);
    }
    Ok(TotalOrder::from_chains(t, ordered_tips[0], &ordered_tips[1..]))
}

/// Order on the contracted tree induced by an order on the source.
///
/// Each vertex of the result is ranked by the smallest rank in its fiber,
/// and the initial vertex is the image of the old one, kept initial even
/// when it is no longer a tip. The chain targets are the images of the old
/// tips in order. A tip swallowed by the contraction is replaced by its
/// image, which may be an interior vertex, so that its chain keeps its
/// place in the sequence. The order is rebuilt from those chains and
/// compared with the pushed-forward ranks.
pub fn induced_order_under_contraction(o: &TotalOrder, c: &Contraction) -> Result<TotalOrder, OrderError> {
    if o.tree() != &c.source {
        return Err(OrderError::WrongTree);
    }
    let phi = |v: Vertex| c.map.apply(v);
    let initial = phi(o.initial());
    let mut targets = Vec::new();
    for &t in o.ordered_tips() {
        let image = phi(t);
        if image != initial && !targets.contains(&image) {
            targets.push(image);
        }
    }
    let rebuilt = TotalOrder::from_chains(&c.result, initial, &targets);

    let mut pushed: BTreeMap<Vertex, usize> = BTreeMap::new();
    for (rank, &v) in o.vertex_order().iter().enumerate() {
        pushed.entry(phi(v)).or_insert(rank);
    }
    let mut pushed_order: Vec<Vertex> = pushed.keys().copied().collect();
    pushed_order.sort_by_key(|v| pushed[v]);

    let pushed_edges: Vec<(Vertex, Vertex)> = o
        .edge_order()
        .iter()
        .map(|&(a, b)| (phi(a), phi(b)))
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();

    if !rebuilt.is_complete() || rebuilt.vertex_order() != pushed_order || rebuilt.edge_order() != pushed_edges {
        return Err(OrderError::IncompatibleOrder);
    }
    Ok(rebuilt)
}

/// Order preservation of a contraction: whenever every preimage of `a`
/// ranks below every preimage of `b`, `a` ranks below `b`.
pub fn contraction_preserves_order(source: &TotalOrder, c: &Contraction, target: &TotalOrder) -> bool {
    let ranks = source.vertex_ranks();
    let target_ranks = target.vertex_ranks();
    let fibers: BTreeMap<Vertex, Vec<usize>> = c.result.vertices().iter().map(|&w| {
        (w, c.map.fiber(w).iter().map(|v| ranks[v]).collect())
    }).collect();
    c.result.vertices().iter().all(|&a| {
        c.result.vertices().iter().all(|&b| {
            let below = fibers[&a].iter().max() < fibers[&b].iter().min();
            !below || target_ranks[&a] < target_ranks[&b]
        })
    })
}

/// A special point on a component: a double point toward a neighbor, or a marked point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialPoint {
    Double(Vertex),
    Marked(usize),
}

/// Total order of a stable labeled tree with the ordered special points of every vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledOrder {
    pub order: TotalOrder,
    pub special_points: BTreeMap<Vertex, Vec<SpecialPoint>>,
}

impl LabeledOrder {
    /// The three special points sent to `0, 1, ∞` on each component.
    pub fn first_three(&self, v: Vertex) -> &[SpecialPoint] {
        &self.special_points[&v][..3]
    }
}

/// Orders the tips of a stable labeled tree by their smallest label, builds
/// the total order, and lists each vertex's special points: double points by
/// the rank of their edge, then marked points in ascending label order.
pub fn order_from_labeling(lt: &LabeledTree) -> Result<LabeledOrder, OrderError> {
    if !lt.is_stable() {
        return Err(OrderError::UnstableLabeledTree);
    }
    let t = lt.tree();
    let mut keyed = Vec::new();
    for tip in t.tips() {
        let key = *lt.labels_at(tip).first().ok_or(OrderError::TipWithoutLabel(tip))?;
        keyed.push((key, tip));
    }
    keyed.sort_unstable();
    let tips: Vec<Vertex> = keyed.into_iter().map(|(_, v)| v).collect();
    let order = total_order_from_tip_order(t, &tips)?;
    let special_points = t
        .vertices()
        .iter()
        .map(|&v| {
            let mut doubles: Vec<Vertex> = t.neighbors(v).to_vec();
            doubles.sort_by_key(|&u| order.edge_rank(v, u));
            let pts = doubles
                .into_iter()
                .map(SpecialPoint::Double)
                .chain(lt.labels_at(v).into_iter().map(SpecialPoint::Marked))
                .collect();
            (v, pts)
        })
        .collect();
    Ok(LabeledOrder { order, special_points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphism::contract_edge;
    use crate::tree::minimal_stabilizations;

    #[test]
    fn tip_order_examples() {
        let o = total_order_from_tip_order(&Tree::path(3), &[0, 2]).unwrap();
        assert_eq!(o.vertex_order(), &[0, 1, 2]);
        assert_eq!(o.edge_order(), &[(0, 1), (1, 2)]);

        // center c = 0, leaves a = 1, b = 2, d = 3
        let o = total_order_from_tip_order(&Tree::star(3), &[1, 2, 3]).unwrap();
        assert_eq!(o.vertex_order(), &[1, 0, 2, 3]);

        let o = total_order_from_tip_order(&Tree::path(2), &[0, 1]).unwrap();
        assert_eq!(o.vertex_order(), &[0, 1]);

        let o = total_order_from_tip_order(&Tree::single(4), &[4]).unwrap();
        assert_eq!(o.vertex_order(), &[4]);
        assert!(o.edge_order().is_empty());
    }

    #[test]
    fn rejects_non_permutations() {
        let t = Tree::star(3);
        assert_eq!(total_order_from_tip_order(&t, &[1, 2]), Err(OrderError::NotATipPermutation));
        assert_eq!(total_order_from_tip_order(&t, &[1, 2, 0]), Err(OrderError::NotATipPermutation));
    }

    #[test]
    fn contraction_examples() {
        let o = total_order_from_tip_order(&Tree::path(3), &[0, 2]).unwrap();
        let c = contract_edge(&Tree::path(3), 1, 2).unwrap();
        let induced = induced_order_under_contraction(&o, &c).unwrap();
        assert_eq!(induced.vertex_order(), &[0, 1]);

        // star a, c, b, d: contract (c, a) at c, the initial tip is absorbed.
        let star = Tree::star(3);
        let o = total_order_from_tip_order(&star, &[1, 2, 3]).unwrap();
        let c = contract_edge(&star, 0, 1).unwrap();
        let induced = induced_order_under_contraction(&o, &c).unwrap();
        assert_eq!(induced.vertex_order(), &[0, 2, 3]);
        assert_eq!(induced.initial(), 0);
        assert!(contraction_preserves_order(&o, &c, &induced));
    }

    #[test]
    fn swallowed_tip_keeps_its_chain() {
        // tip 4 merges into 1, which then precedes 3 as it did before
        let t = Tree::new(vec![0, 1, 2, 3, 4, 5], vec![(0, 1), (0, 2), (0, 3), (1, 4), (1, 5)]).unwrap();
        let o = total_order_from_tip_order(&t, &[2, 4, 3, 5]).unwrap();
        let c = contract_edge(&t, 1, 4).unwrap();
        let induced = induced_order_under_contraction(&o, &c).unwrap();
        assert_eq!(induced.vertex_order(), &[2, 0, 1, 3, 5]);
        assert!(contraction_preserves_order(&o, &c, &induced));
    }

    #[test]
    fn wrong_tree_is_reported() {
        let o = total_order_from_tip_order(&Tree::path(3), &[0, 2]).unwrap();
        let c = contract_edge(&Tree::star(3), 0, 1).unwrap();
        assert_eq!(induced_order_under_contraction(&o, &c), Err(OrderError::WrongTree));
    }

    #[test]
    fn labeled_orders() {
        let lt = LabeledTree::new(Tree::single(0), vec![0, 0, 0]).unwrap();
        let lo = order_from_labeling(&lt).unwrap();
        assert_eq!(
            lo.special_points[&0],
            vec![SpecialPoint::Marked(1), SpecialPoint::Marked(2), SpecialPoint::Marked(3)]
        );

        let lt = LabeledTree::new(Tree::path(2), vec![0, 0, 1, 1]).unwrap();
        let lo = order_from_labeling(&lt).unwrap();
        assert_eq!(lo.order.vertex_order(), &[0, 1]);
        assert_eq!(
            lo.special_points[&0],
            vec![SpecialPoint::Double(1), SpecialPoint::Marked(1), SpecialPoint::Marked(2)]
        );
        assert_eq!(
            lo.special_points[&1],
            vec![SpecialPoint::Double(0), SpecialPoint::Marked(3), SpecialPoint::Marked(4)]
        );
    }

    #[test]
    fn labeled_order_of_path_three_is_stable() {
        use SpecialPoint::*;
        let lt = &minimal_stabilizations(&Tree::path(3))[0];
        let lo = order_from_labeling(lt).unwrap();
        assert_eq!(lo.order.vertex_order(), &[0, 1, 2]);
        let expected = BTreeMap::from([
            (0, vec![Double(1), Marked(1), Marked(2)]),
            (1, vec![Double(0), Double(2), Marked(3)]),
            (2, vec![Double(1), Marked(4), Marked(5)]),
        ]);
        assert_eq!(lo.special_points, expected);
    }

    #[test]
    fn tips_follow_their_smallest_label() {
        // Labels 1, 2 on vertex 2 put that end first.
        let lt = LabeledTree::new(Tree::path(3), vec![2, 2, 1, 0, 0]).unwrap();
        let lo = order_from_labeling(&lt).unwrap();
        assert_eq!(lo.order.vertex_order(), &[2, 1, 0]);
    }

    #[test]
    fn unstable_labelings_are_rejected() {
        let lt = LabeledTree::new(Tree::path(2), vec![0, 0, 1]).unwrap();
        assert_eq!(order_from_labeling(&lt), Err(OrderError::UnstableLabeledTree));
    }
}
