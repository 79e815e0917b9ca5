//! Acceptance suite: one test per criterion, each checked against an
//! independent oracle (brute-force permutation scans, direct formulas, or
//! closed-form quadrature values).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nodal_core::aut::{
    automorphism_group, decompose_stabilizer, labeled_automorphism_group, midpoint_involution_edges,
    single_fixed_vertex_analysis, LabelMode,
};
use nodal_core::energy::{
    c0_distance, constant_image_separation, energy, energy_separation, inclusion, properness_experiment,
    random_admissible_frame, reparametrize, s1_invariance_defect, sample_map, standard_s1_map,
    PropernessExperimentConfig, Region, Verdict,
};
use nodal_core::mobius::{
    classify_finite_subgroup, exceptional_element_orders, kak_decompose, random_mobius, random_su2,
    standard_finite_subgroup, FiniteGroupKind, Mobius, SpherePoint, C64,
};
use nodal_core::moduli::{chart, h_t_act, random_config, reconstruct_from_chart, to_slice, CrossRatioCoordinates};
use nodal_core::morphism::{contract_edge, has_flipped_identification, morphisms_with_tip_values, premorphisms, TreeMorphism};
use nodal_core::order::{contraction_preserves_order, induced_order_under_contraction, total_order_from_tip_order};
use nodal_core::tree::{enumerate_trees, minimal_labelings, minimal_stabilizations, LabeledTree, Tree, Vertex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, passed: bool, detail: String) {
    println!("criterion {id:>2}: {} | {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "criterion {id} failed: {detail}");
}

// ---- oracles ----

/// Every map `V1 -> V2` sending edges to edges or points, by exhaustive scan.
fn brute_premorphisms(t1: &Tree, t2: &Tree) -> Vec<BTreeMap<Vertex, Vertex>> {
    let (v1, v2) = (t1.vertices(), t2.vertices());
    let total = v2.len().pow(v1.len() as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let map: BTreeMap<Vertex, Vertex> = v1
            .iter()
            .map(|&v| {
                let w = v2[c % v2.len()];
                c /= v2.len();
                (v, w)
            })
            .collect();
        if t1.edges().iter().all(|&(a, b)| map[&a] == map[&b] || t2.has_edge(map[&a], map[&b])) {
            out.push(map);
        }
    }
    out
}

/// Fibers connected, by breadth-first search inside each fiber.
fn fibers_connected(t: &Tree, map: &BTreeMap<Vertex, Vertex>) -> bool {
    let images: BTreeSet<Vertex> = map.values().copied().collect();
    images.into_iter().all(|w| {
        let fiber: Vec<Vertex> = t.vertices().iter().copied().filter(|v| map[v] == w).collect();
        let mut seen = BTreeSet::from([fiber[0]]);
        let mut queue = VecDeque::from([fiber[0]]);
        while let Some(x) = queue.pop_front() {
            for &y in t.neighbors(x) {
                if map[&y] == w && seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        seen.len() == fiber.len()
    })
}

/// All automorphisms as index permutations, by scanning every permutation.
fn brute_automorphisms(t: &Tree) -> Vec<Vec<usize>> {
    fn rec(t: &Tree, img: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        let n = t.len();
        let vs = t.vertices();
        if img.len() == n {
            out.push(img.clone());
            return;
        }
        let i = img.len();
        for j in 0..n {
            if used[j] || t.valence(vs[i]) != t.valence(vs[j]) {
                continue;
            }
            // Edges to already placed vertices must map to edges.
            let ok = (0..i).all(|k| t.has_edge(vs[i], vs[k]) == t.has_edge(vs[j], vs[img[k]]));
            if ok {
                used[j] = true;
                img.push(j);
                rec(t, img, used, out);
                img.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(t, &mut Vec::new(), &mut vec![false; t.len()], &mut out);
    out.sort();
    out
}

fn fixed_vertices(t: &Tree, p: &[usize]) -> BTreeSet<Vertex> {
    (0..t.len()).filter(|&i| p[i] == i).map(|i| t.vertices()[i]).collect()
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x.clone());
            out.push(p);
        }
    }
    out
}

fn elapsed_ok(start: Instant, limit: Duration) -> (bool, String) {
    let e = start.elapsed();
    (e <= limit, format!("{:.2}s of {}s", e.as_secs_f64(), limit.as_secs()))
}

// ---- criteria ----

#[test]
fn criterion_01_morphism_iff_no_flipped_identification() {
    let start = Instant::now();
    let trees = enumerate_trees(5).unwrap();
    let (mut checked, mut bad) = (0usize, Vec::new());
    for t1 in &trees {
        for t2 in &trees {
            let brute = brute_premorphisms(t1, t2);
            let lib = premorphisms(t1, t2);
            let lib_maps: BTreeSet<BTreeMap<Vertex, Vertex>> = lib.iter().map(|m| m.map().clone()).collect();
            if lib_maps != brute.iter().cloned().collect() {
                bad.push(format!("premorphism sets differ for {} -> {}", t1.canonical_form(), t2.canonical_form()));
            }
            for map in brute {
                let m = TreeMorphism::new(t1.clone(), t2.clone(), map.clone()).unwrap();
                let morphism = fibers_connected(t1, &map);
                let flipped = has_flipped_identification(&m).unwrap();
                if m.is_morphism() != morphism || morphism == flipped.is_some() {
                    bad.push(format!("{map:?}"));
                }
                if let Some(w) = flipped {
                    // The witness is a genuine fold: both ends share an image the interior avoids.
                    let (a, c) = w.ends();
                    let interior = &w.chain[1..w.chain.len() - 1];
                    let ok = map[&a] == map[&c]
                        && interior.iter().all(|x| map[x] == map[&interior[0]] && map[x] != map[&a])
                        && w.chain.windows(2).all(|e| t1.has_edge(e[0], e[1]));
                    if !ok {
                        bad.push(format!("bad witness {:?}", w.chain));
                    }
                }
                checked += 1;
            }
        }
    }
    let (fast, time) = elapsed_ok(start, Duration::from_secs(60));
    report(1, bad.is_empty() && fast, format!("{checked} pre-morphisms, {} counterexamples, {time}", bad.len()));
}

#[test]
fn criterion_02_isomorphisms_determined_by_tips() {
    let mut pairs = 0usize;
    let mut bad = 0usize;
    for t in enumerate_trees(7).unwrap() {
        let auts = brute_automorphisms(&t);
        let vs = t.vertices();
        let tips = t.tips();
        let tip_idx: Vec<usize> = tips.iter().map(|&v| t.index_of(v).unwrap()).collect();
        for p in &auts {
            for q in &auts {
                if tip_idx.iter().all(|&i| p[i] == q[i]) {
                    pairs += 1;
                    if p != q {
                        bad += 1;
                    }
                }
            }
            // The library's extension search finds this isomorphism and no other.
            let assignment: BTreeMap<Vertex, Vertex> = tip_idx.iter().map(|&i| (vs[i], vs[p[i]])).collect();
            let isos: Vec<_> = morphisms_with_tip_values(&t, &t, &assignment)
                .into_iter()
                .filter(|m| m.is_isomorphism())
                .collect();
            let expected: BTreeMap<Vertex, Vertex> = (0..vs.len()).map(|i| (vs[i], vs[p[i]])).collect();
            if isos.len() != 1 || isos[0].map() != &expected {
                bad += 1;
            }
        }
    }
    report(2, bad == 0, format!("{pairs} tip-agreeing isomorphism pairs, {bad} counterexamples"));
}

#[test]
fn criterion_03_stable_labeled_automorphisms() {
    let (mut labelings, mut bad) = (0usize, 0usize);
    for t in enumerate_trees(6).unwrap() {
        let auts = brute_automorphisms(&t);
        let full: BTreeSet<Vec<usize>> = auts.iter().cloned().collect();
        let lib_full: BTreeSet<Vec<usize>> =
            automorphism_group(&t).unwrap().elements().iter().map(|p| p.images().to_vec()).collect();
        if full != lib_full {
            bad += 1;
        }
        for lt in minimal_labelings(&t) {
            labelings += 1;
            let ordered = labeled_automorphism_group(&lt, LabelMode::Ordered).unwrap();
            let unordered = labeled_automorphism_group(&lt, LabelMode::Unordered).unwrap();
            // Oracle: automorphisms fixing every labeled vertex.
            let fixing = auts
                .iter()
                .filter(|p| lt.labels().iter().all(|&v| {
                    let i = t.index_of(v).unwrap();
                    p[i] == i
                }))
                .count();
            let unordered_set: BTreeSet<Vec<usize>> = unordered.elements().iter().map(|p| p.images().to_vec()).collect();
            if !lt.is_stable() || fixing != 1 || ordered.order() != 1 || unordered_set != full {
                bad += 1;
            }
        }
    }
    report(3, bad == 0, format!("{labelings} minimal stabilizations, {bad} counterexamples"));
}

#[test]
fn criterion_04_minimal_stabilization_formula() {
    let (mut count, mut bad) = (0usize, 0usize);
    for t in enumerate_trees(8).unwrap() {
        for lt in minimal_stabilizations(&t) {
            count += 1;
            let n = lt.n() as i64;
            let edges = t.edge_count() as i64;
            // Stable vertices of T carry no labels, so #d_v is their valence.
            let excess: i64 =
                t.vertices().iter().map(|&v| t.valence(v) as i64).filter(|&d| d >= 3).map(|d| d - 3).sum();
            let minimal = t.vertices().iter().all(|&v| {
                let special = t.valence(v) + lt.label_count(v);
                if t.valence(v) >= 3 { lt.label_count(v) == 0 } else { special == 3 }
            });
            if n - 3 != edges + excess || !minimal || !lt.is_stable() {
                bad += 1;
            }
        }
    }
    report(4, bad == 0, format!("{count} stabilizations, {bad} violations"));
}

#[test]
fn criterion_05_total_order_contraction_compatibility() {
    let (mut cases, mut bad) = (0usize, Vec::new());
    for t in enumerate_trees(6).unwrap() {
        if t.len() < 2 {
            continue;
        }
        for tips in permutations(&t.tips()) {
            let o = total_order_from_tip_order(&t, &tips).unwrap();
            for &(a, b) in t.edges() {
                for (v, u) in [(a, b), (b, a)] {
                    cases += 1;
                    let c = contract_edge(&t, v, u).unwrap();
                    let induced = match induced_order_under_contraction(&o, &c) {
                        Ok(x) => x,
                        Err(e) => {
                            bad.push(format!("{:?} tips {tips:?} contract ({v},{u}): {e}", t.edges()));
                            continue;
                        }
                    };
                    // Oracle: rank each new vertex by its earliest preimage.
                    let rank = |x: Vertex| o.vertex_rank(x).unwrap();
                    let mut expected: Vec<Vertex> = c.result.vertices().to_vec();
                    expected.sort_by_key(|&w| {
                        t.vertices().iter().filter(|&&x| (if x == u { v } else { x }) == w).map(|&x| rank(x)).min()
                    });
                    let tips_in_order = induced.ordered_tips().iter().all(|&w| c.result.is_tip(w));
                    if induced.vertex_order() != expected.as_slice()
                        || !induced.is_complete()
                        || !tips_in_order
                        || !contraction_preserves_order(&o, &c, &induced)
                    {
                        bad.push(format!("{:?} tips {tips:?} contract ({v},{u}): order {:?}", t.edges(), induced.vertex_order()));
                    }
                }
            }
        }
    }
    report(5, bad.is_empty(), format!("{cases} (tip order, contraction) cases, {} failures {:?}", bad.len(), bad.first()));
}

#[test]
fn criterion_06_at_most_one_involution_midpoint() {
    let (mut trees, mut bad, mut with_midpoint) = (0usize, 0usize, 0usize);
    for t in enumerate_trees(8).unwrap() {
        trees += 1;
        let mut oracle = BTreeSet::new();
        for p in brute_automorphisms(&t) {
            let involution = (0..p.len()).all(|i| p[p[i]] == i) && (0..p.len()).any(|i| p[i] != i);
            if !involution {
                continue;
            }
            for &(a, b) in t.edges() {
                let (ia, ib) = (t.index_of(a).unwrap(), t.index_of(b).unwrap());
                if p[ia] == ib && p[ib] == ia {
                    oracle.insert((a, b));
                }
            }
        }
        let lib: BTreeSet<_> = midpoint_involution_edges(&t).unwrap().into_iter().collect();
        with_midpoint += usize::from(!oracle.is_empty());
        if oracle.len() > 1 || lib != oracle {
            bad += 1;
        }
    }
    report(6, bad == 0, format!("{trees} trees, {with_midpoint} with a midpoint, {bad} violations"));
}

#[test]
fn criterion_07_stabilizer_formula_and_single_fixed_vertex() {
    let start = Instant::now();
    let (mut cases, mut witnesses, mut bad) = (0usize, 0usize, Vec::new());
    for t in enumerate_trees(8).unwrap() {
        let auts = brute_automorphisms(&t);
        for (i, &v0) in t.vertices().iter().enumerate() {
            cases += 1;
            let stab: Vec<&Vec<usize>> = auts.iter().filter(|p| p[i] == i).collect();
            let formula = decompose_stabilizer(&t, v0).unwrap().order;
            if formula != stab.len() as u128 {
                bad.push(format!("{} at {v0}: formula {formula} vs {}", t.canonical_form(), stab.len()));
            }
            let witness = stab.iter().any(|p| fixed_vertices(&t, p) == BTreeSet::from([v0]));
            let mut common: BTreeSet<Vertex> = t.vertices().iter().copied().collect();
            for p in &stab {
                common = common.intersection(&fixed_vertices(&t, p)).copied().collect();
            }
            let common_is_base = common == BTreeSet::from([v0]);
            let r = single_fixed_vertex_analysis(&t, v0).unwrap();
            if r.exists_witness != witness || r.common_fixed_is_base != common_is_base {
                bad.push(format!("{} at {v0}: analysis disagrees with oracle", t.canonical_form()));
            }
            // Witness => S_T = stabilizer and common fixed set {v0}; common fixed set {v0} => witness.
            if witness {
                witnesses += 1;
                if stab.len() != auts.len() || !common_is_base || !r.s_t_equals_stabilizer {
                    bad.push(format!("{} at {v0}: forward direction", t.canonical_form()));
                }
            }
            if common_is_base && !witness {
                bad.push(format!("{} at {v0}: converse direction", t.canonical_form()));
            }
        }
    }
    let (fast, time) = elapsed_ok(start, Duration::from_secs(300));
    report(
        7,
        bad.is_empty() && fast,
        format!("{cases} (tree, base) cases, {witnesses} with witnesses, {} counterexamples {:?}, {time}", bad.len(), bad.first()),
    );
}

fn chart_trees() -> Vec<LabeledTree> {
    let mut out = Vec::new();
    for t in enumerate_trees(5).unwrap() {
        let lt = minimal_stabilizations(&t).remove(0);
        // Extra marked points on the first and last vertices give nonempty charts everywhere.
        let (first, last) = (t.vertices()[0], *t.vertices().last().unwrap());
        let labels = [lt.labels(), &[first, last, last]].concat();
        out.push(lt);
        out.push(LabeledTree::new(t.clone(), labels).unwrap());
    }
    out
}

#[test]
fn criterion_08_chart_invariance_and_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let trees = chart_trees();
    let mut worst = 0.0f64;
    let mut exact = true;
    for k in 0..1000 {
        let lt = &trees[k % trees.len()];
        let cfg = random_config(lt, &mut rng).unwrap();
        let g: BTreeMap<Vertex, Mobius> = lt.tree().vertices().iter().map(|&v| (v, random_mobius(&mut rng))).collect();
        let before = chart(&cfg).unwrap();
        worst = worst.max(before.max_deviation(&chart(&h_t_act(&cfg, &g).unwrap()).unwrap()));
        let (slice, _) = to_slice(&cfg).unwrap();
        worst = worst.max(before.max_deviation(&chart(&slice).unwrap()));

        // Random coordinates through reconstruct and back must be returned unchanged.
        let coords = CrossRatioCoordinates {
            values: cfg
                .all_points()
                .iter()
                .map(|(&v, ps)| {
                    let w = (3..ps.len())
                        .map(|i| SpherePoint::finite(C64::new(2.0 + i as f64 + rng.gen::<f64>(), rng.gen::<f64>() - 0.5)))
                        .collect();
                    (v, w)
                })
                .collect(),
        };
        let rebuilt = reconstruct_from_chart(lt, &coords).unwrap();
        exact &= rebuilt.is_slice() && chart(&rebuilt).unwrap() == coords;
    }
    report(8, worst <= 1e-9 && exact, format!("max chart deviation {worst:.2e}, round trips exact: {exact}"));
}

#[test]
fn criterion_09_kak_decomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    let mut frames_ok = true;
    for _ in 0..10_000 {
        let g = random_mobius(&mut rng);
        let k = kak_decompose(&g);
        worst = worst.max(k.residual(&g));
        frames_ok &= k.u.is_su2() && k.v.is_su2() && k.a > 0.0 && k.a <= 1.0;
    }
    let mut su2_exact = true;
    for _ in 0..1000 {
        let u = random_su2(&mut rng);
        let k = kak_decompose(&u);
        su2_exact &= k.a == 1.0 && k.residual(&u) == 0.0;
    }
    report(
        9,
        worst <= 1e-12 && frames_ok && su2_exact,
        format!("max residual {worst:.2e}, unitary frames {frames_ok}, a = 1 on SU(2) {su2_exact}"),
    );
}

#[test]
fn criterion_10_finite_subgroup_classification() {
    let mut kinds: Vec<FiniteGroupKind> = (1..=8).map(FiniteGroupKind::Cyclic).collect();
    kinds.extend((2..=8).map(FiniteGroupKind::Dihedral));
    kinds.extend([FiniteGroupKind::Tetrahedral, FiniteGroupKind::Octahedral, FiniteGroupKind::Icosahedral]);
    let mut wrong = Vec::new();
    for &kind in &kinds {
        let g = standard_finite_subgroup(kind).unwrap();
        let c = classify_finite_subgroup(&g).unwrap();
        let expected_order = match kind {
            FiniteGroupKind::Cyclic(l) => l,
            FiniteGroupKind::Dihedral(l) => 2 * l,
            FiniteGroupKind::Tetrahedral => 12,
            FiniteGroupKind::Octahedral => 24,
            FiniteGroupKind::Icosahedral => 60,
        };
        if c.kind != kind || g.order() != expected_order || c.element_orders.values().sum::<usize>() != expected_order {
            wrong.push(kind);
        }
    }
    let max_order = exceptional_element_orders().values().flat_map(|s| s.iter().copied()).max().unwrap();
    report(
        10,
        wrong.is_empty() && max_order <= 6,
        format!("{} kinds, misclassified {wrong:?}, max exceptional element order {max_order}", kinds.len()),
    );
}

#[test]
fn criterion_11_energy_quadrature_and_invariance() {
    let f = sample_map(inclusion, 256).unwrap();
    let e = energy(&f, Region::Whole);
    let rel = (e - 4.0 * PI).abs() / (4.0 * PI);
    let constant = energy(&sample_map(|_| vec![0.3, -1.0, 2.0], 256).unwrap(), Region::Whole);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for a in [0.1, 0.1, 0.2, 0.5, 1.0] {
        let g = random_su2(&mut rng) * Mobius::dilation(a) * random_su2(&mut rng);
        let r = energy(&reparametrize(&f, &g), Region::Whole);
        worst = worst.max((r - e).abs() / e);
    }
    report(
        11,
        rel <= 0.005 && constant < 1e-10 && worst <= 0.01,
        format!("identity energy rel. error {rel:.2e}, constant energy {constant:.1e}, reparametrization drift {worst:.2e}"),
    );
}

#[test]
fn criterion_12_properness_decay() {
    let start = Instant::now();
    let h = sample_map(inclusion, 256).unwrap();
    let base = PropernessExperimentConfig::standard(8, 256);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut frames = vec![(Mobius::identity(), Mobius::identity())];
    frames.extend((0..10).map(|_| random_admissible_frame(&mut rng, base.radius)));
    let mut exponents = Vec::new();
    let mut all_pass = true;
    for (u, v) in frames {
        let cfg = PropernessExperimentConfig { u, v, ..base.clone() };
        let r = properness_experiment(&h, &cfg).unwrap();
        let below = r.energies.last().is_some_and(|&e| e < r.threshold);
        all_pass &= r.verdict == Verdict::Pass && below;
        exponents.push(r.exponent.unwrap_or(f64::NAN));
    }
    let in_band = exponents.iter().all(|p| (1.8..=2.2).contains(p));
    let (lo, hi) = exponents.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &p| (l.min(p), h.max(p)));
    let (fast, time) = elapsed_ok(start, Duration::from_secs(120));
    report(12, all_pass && in_band && fast, format!("11 frames, exponents in [{lo:.3}, {hi:.3}], {time}"));
}

#[test]
fn criterion_13_energy_and_constant_image_separation() {
    let n = 128;
    let constant = sample_map(|_| vec![0.0, 0.0, 0.0], n).unwrap();
    let other_constant = sample_map(|_| vec![1.0, 0.0, 0.0], n).unwrap();
    let f = sample_map(inclusion, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let g = random_su2(&mut rng) * Mobius::dilation(0.4) * random_su2(&mut rng);

    let s1 = energy_separation(&constant, &f).unwrap();
    let e1 = s1.threshold.is_some_and(|c| (c - 2.0 * PI).abs() < 0.05 * 2.0 * PI);
    let e2 = energy_separation(&f, &reparametrize(&f, &g)).unwrap().threshold.is_none();
    let e3 = energy_separation(&constant, &other_constant).unwrap().threshold.is_none();

    let c1 = c0_distance(&constant, &constant).unwrap() == 0.0
        && !constant_image_separation(&constant, &constant, 0.1, 0.1).unwrap();
    let c2 = constant_image_separation(&constant, &other_constant, 0.1, 0.1).unwrap();
    let c3 = c0_distance(&other_constant, &reparametrize(&other_constant, &g)).unwrap() == 0.0;
    report(
        13,
        e1 && e2 && e3 && c1 && c2 && c3,
        format!("energy separation [{e1}, {e2}, {e3}], constant-image separation [{c1}, {c2}, {c3}]"),
    );
}

#[test]
fn criterion_14_s1_invariance() {
    let n = 128;
    let standard = standard_s1_map(|t| vec![t, 0.0, 0.0], n).unwrap();
    let d_standard = s1_invariance_defect(&standard);
    let d_rotated = s1_invariance_defect(&reparametrize(&standard, &Mobius::rotation_z(1.1)));
    let perturbed = sample_map(
        |p| {
            let t = nodal_core::mobius::moment_height(p);
            let phase = p.z * p.w.conj();
            let c = if phase.norm() > 0.0 { phase.re / phase.norm() } else { 1.0 };
            vec![t + 0.1 * c, 0.0, 0.0]
        },
        n,
    )
    .unwrap();
    let d_perturbed = s1_invariance_defect(&perturbed);
    report(
        14,
        d_standard <= 1e-12 && d_rotated <= 1e-12 && d_perturbed >= 0.05,
        format!("defects: standard {d_standard:.1e}, rotated standard {d_rotated:.1e}, perturbed {d_perturbed:.3}"),
    );
}
