mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use melonforge::feynman::{
    maximal_2cut_check, BubbleCopy, Ensemble, EnumerateOptions, FeynmanGraph, GluedGraph, TwoCutVerdict,
};
use melonforge::gluing::decompose;
use melonforge::ifield::{j_inverse, j_quartic};
use melonforge::large_n::{covariance_series, solve_covariance, Interaction};
use melonforge::plane_tree::{from_plane_tree, to_plane_tree};
use melonforge::random::{color_sets_up_to, random_gm_bubble, random_plane_tree};
use melonforge::{recognize_gm, Bubble, ColorSet, VertexId};
use num_rational::Rational64;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn bubble_from_seed(seed: u64, max_insertions: usize) -> Bubble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(3..=6);
    let k = rng.gen_range(1..=max_insertions);
    random_gm_bubble(&mut rng, d, k, &ColorSet::all_admissible(d))
}

fn random_quartic_graph(rng: &mut ChaCha8Rng, d: usize, k: usize) -> FeynmanGraph {
    let all = ColorSet::all_admissible(d);
    let copies = (0..k)
        .map(|_| BubbleCopy {
            interaction: 0,
            bubble: Arc::new(
                Bubble::quartic_with_ids(d, all[rng.gen_range(0..all.len())], [0, 1, 2, 3].map(VertexId)).unwrap(),
            ),
        })
        .collect();
    let ens = Arc::new(Ensemble::new(copies).unwrap());
    let mut perm: Vec<u32> = (0..2 * k as u32).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    FeynmanGraph::new(ens, perm).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_orders_agree(seed in any::<u64>(), order_seed in any::<u64>()) {
        let b = bubble_from_seed(seed, 5);
        let reference = recognize_gm(&b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(order_seed);
        let other = melonforge::gm::recognize_gm_with(&b, |found| rng.gen_range(0..found.len())).unwrap();
        prop_assert_eq!(&other.multiset, &reference.multiset);
        prop_assert_eq!(&other.pairing, &reference.pairing);
        prop_assert!(reference.verify(&b).is_ok());
    }

    #[test]
    fn boundary_of_decomposition_is_the_bubble(seed in any::<u64>()) {
        let b = bubble_from_seed(seed, 5);
        let cert = recognize_gm(&b).unwrap();
        let g = decompose(&b, &cert).unwrap();
        prop_assert!(g.is_tree_gluing());
        prop_assert_eq!(g.boundary().unwrap(), b.clone());
        let mut sets = g.color_sets();
        sets.sort();
        prop_assert_eq!(sets, expand(&cert.multiset));
        // plane tree round trip keeps the boundary up to isomorphism
        let t = to_plane_tree(&g).unwrap();
        prop_assert_eq!(t.bubble_vertex_count(), b.vertex_count());
        let back = from_plane_tree(&t).unwrap().boundary().unwrap();
        prop_assert_eq!(back.is_isomorphic(&b), Ok(true));
    }

    #[test]
    fn intermediate_field_roundtrip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(3..=6);
        let k = rng.gen_range(1..=6);
        let g = random_quartic_graph(&mut rng, d, k);
        let m = j_quartic(&g).unwrap();
        for c in 1..=d {
            prop_assert_eq!(m.faces_of_color(c), g.bicolored_cycles(c));
        }
        prop_assert_eq!(m.is_connected(), g.is_connected());
        let back = j_inverse(&m).unwrap();
        prop_assert_eq!(back.cycle_counts(), g.cycle_counts());
        prop_assert_eq!(j_quartic(&back).unwrap().normalized(), m.normalized());
    }

    #[test]
    fn unhooking_never_lowers_delta(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(3..=5);
        let k = rng.gen_range(2..=6);
        let m = j_quartic(&random_quartic_graph(&mut rng, d, k)).unwrap();
        for e in 0..m.edge_count() {
            if m.is_bridge(e) {
                continue;
            }
            for end in 0..2 {
                let u = m.unhook(e, end).unwrap();
                prop_assert!(u.delta() >= m.delta());
                if m.colors()[e].is_unbalanced(d) {
                    prop_assert!(u.delta() > m.delta());
                }
            }
        }
    }

    #[test]
    fn submaps_of_dominant_maps_are_dominant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(3..=5);
        let count = rng.gen_range(1..=5);
        let b = random_gm_bubble(&mut rng, d, count, &ColorSet::all_admissible(d));
        let cert = recognize_gm(&b).unwrap();
        let g = decompose(&b, &cert).unwrap();
        // the tree gluing, read at quartic level with canonical pairs closing it up, is dominant
        let glued = GluedGraph {
            d,
            copies: vec![(0, Arc::new(g.clone()))],
            matching: cert.pairing.pairs().iter().map(|&(w, k)| ((0, w), (0, k))).collect(),
        };
        let m = j_quartic(&glued.quartic_level().unwrap()).unwrap();
        prop_assert_eq!(m.delta(), d as i64);
        prop_assert!(m.classify_dominant().dominant);
        let edges: Vec<usize> = (0..m.edge_count()).filter(|_| rng.gen_bool(0.5)).collect();
        let sub = m.edge_submap(&edges).unwrap();
        prop_assert_eq!(sub.genus(), 0);
    }

    #[test]
    fn surjection_preserves_cycles(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(3..=5);
        let sets = ColorSet::all_admissible(d);
        let n = rng.gen_range(1..=3);
        let mut copies = Vec::new();
        let (mut whites, mut blacks) = (Vec::new(), Vec::new());
        for i in 0..n {
            let count = rng.gen_range(1..=3);
            let b = random_gm_bubble(&mut rng, d, count, &sets);
            let cert = recognize_gm(&b).unwrap();
            let g = decompose(&b, &cert).unwrap();
            whites.extend(b.whites().map(|w| (i, w)));
            blacks.extend(b.blacks().map(|k| (i, k)));
            copies.push((0, Arc::new(g)));
        }
        for i in (1..blacks.len()).rev() {
            blacks.swap(i, rng.gen_range(0..=i));
        }
        let glued = GluedGraph { d, copies, matching: whites.into_iter().zip(blacks).collect() };
        let fine = glued.quartic_level().unwrap();
        let coarse = glued.surject().unwrap();
        prop_assert_eq!(fine.cycle_counts(), coarse.cycle_counts());
        prop_assert_eq!(fine.is_connected(), coarse.is_connected());
    }

    #[test]
    fn flipping_a_crossed_pair_changes_cycles_by_at_most_d(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(3..=5);
        let count = rng.gen_range(1..=5);
        let g = random_quartic_graph(&mut rng, d, count);
        let w = rng.gen_range(0..g.matching().len());
        let k = rng.gen_range(0..g.matching().len());
        let f = g.flipped(w, k);
        prop_assert_eq!(f.matching()[w] as usize, k);
        let (a, b) = (g.total_cycles() as i64, f.total_cycles() as i64);
        prop_assert!((a - b).abs() <= d as i64);
        let back = f.flipped(w, g.matching()[w] as usize);
        prop_assert_eq!(back.matching(), g.matching());
    }

    #[test]
    fn newton_matches_series(x in -1.0f64..1.0, v in prop::sample::select(vec![4usize, 6, 8])) {
        // radius of convergence of C = 1 + a t C^k with a = V/2 = k
        let k = (v / 2) as f64;
        let radius = (k - 1.0).powf(k - 1.0) / (k * k.powf(k));
        let t = 0.15 * radius * x;
        let exact = solve_covariance(&[Interaction { t, v }], 1e-14).unwrap().value;
        let series = covariance_series(&[v], 12).unwrap();
        let approx = series.evaluate(&[t]);
        prop_assert!((exact - approx).abs() < 1e-9, "{} vs {}", exact, approx);
    }

    #[test]
    fn eta_constraints_hold(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(3..=7);
        let count = rng.gen_range(1..=8);
        let t = random_plane_tree(&mut rng, d, count, &ColorSet::all_admissible(d));
        let tm = melonforge::matrix_model::TreeModel::new(t);
        prop_assert!(melonforge::matrix_model::eta_exponents(&tm).check(&tm).is_ok());
    }

    #[test]
    fn determinant_lemma_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(3..=6);
        let count = rng.gen_range(1..=5);
        let t = random_plane_tree(&mut rng, d, count, &color_sets_up_to(d, d / 2));
        let r = melonforge::matrix_model::determinant_lemma_check(&t, rng.gen_range(1..=3), 2, seed).unwrap();
        prop_assert!(r.max_rel_error <= 1e-9);
    }
}

#[test]
fn tree_family_formula_small_b() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let d = rng.gen_range(3..=6);
        let count = rng.gen_range(0..=4);
        let b = random_gm_bubble(&mut rng, d, count, &ColorSet::all_admissible(d));
        let cert = recognize_gm(&b).unwrap();
        let s = cert.scaling_coefficient().to_i64().unwrap();
        for count in 1..=5 {
            let g = melonforge::feynman::tree_family(&b, &cert, count).unwrap();
            assert_eq!(g.total_cycles() as i64, -s * count as i64 + d as i64);
        }
    }
}

#[test]
fn d4_example_tree_family_b2() {
    let b = d4_example();
    let cert = recognize_gm(&b).unwrap();
    assert_eq!(cert.scaling_coefficient(), Rational64::from_integer(-15));
    let g = melonforge::feynman::tree_family(&b, &cert, 2).unwrap();
    assert_eq!(g.total_cycles(), 34);
}

/// Every dominant graph of a small totally unbalanced ensemble has the
/// maximal 2-cut property at every copy.
#[test]
fn dominant_graphs_have_maximal_two_cuts() {
    let q = |c: &[usize]| Bubble::quartic(4, c).unwrap();
    let hex = recognize_gm(&melonic_d3_v6()).map(|_| melonic_d3_v6()).unwrap();
    let ensembles = [
        vec![(q(&[1]), 2)],
        vec![(q(&[1]), 1), (q(&[2]), 2)],
        vec![(hex.clone(), 2)],
        vec![(hex, 1), (Bubble::quartic(3, &[2]).unwrap(), 1)],
    ];
    for counts in ensembles {
        let ens = Arc::new(Ensemble::from_counts(&counts).unwrap());
        let scalings: BTreeMap<usize, Rational64> =
            counts.iter().enumerate().map(|(r, (b, _))| (r, recognize_gm(b).unwrap().scaling_coefficient())).collect();
        let mut graphs = Vec::new();
        let mut it = melonforge::feynman::enumerate(ens.clone(), EnumerateOptions::default()).unwrap();
        while let Some(g) = it.advance() {
            graphs.push(g.clone());
        }
        let top = melonforge::feynman::gmax_filter(graphs, &scalings).unwrap();
        assert!(!top.is_empty());
        for g in &top {
            assert_eq!(g.delta(&scalings).unwrap().n_exponent, Rational64::from_integer(g.d() as i64));
            for copy in 0..ens.copies().len() {
                assert_eq!(maximal_2cut_check(g, copy).unwrap(), TwoCutVerdict::Maximal2Cut);
            }
        }
    }
}

/// Balanced edges may close cycles: two crossed copies of Q_{12} at d = 4
/// are dominant yet have no 2-cut pairing.
#[test]
fn balanced_quartics_escape_the_two_cut_property() {
    let q = Bubble::quartic(4, &[1, 2]).unwrap();
    let ens = Arc::new(Ensemble::from_counts(&[(q, 2)]).unwrap());
    let v = VertexId;
    let pairs = [((0, v(0)), (1, v(1))), ((0, v(2)), (1, v(3))), ((1, v(0)), (0, v(1))), ((1, v(2)), (0, v(3)))];
    let g = FeynmanGraph::from_pairs(ens, &pairs).unwrap();
    let scalings = BTreeMap::from([(0, Rational64::from_integer(-2))]);
    assert_eq!(g.delta(&scalings).unwrap().n_exponent, Rational64::from_integer(4));
    assert!(j_quartic(&g).unwrap().classify_dominant().dominant);
    assert_eq!(maximal_2cut_check(&g, 0).unwrap(), TwoCutVerdict::Neither);
}

#[test]
fn plane_tree_json_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let count = rng.gen_range(1..=6);
        let t = random_plane_tree(&mut rng, 5, count, &ColorSet::all_admissible(5));
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<melonforge::plane_tree::PlaneTree>(&s).unwrap(), t);
    }
}

#[test]
fn certificate_json_roundtrip_and_replay() {
    let b = d4_example();
    let cert = recognize_gm(&b).unwrap();
    let s = serde_json::to_string(&cert).unwrap();
    let back: melonforge::GmCertificate = serde_json::from_str(&s).unwrap();
    assert_eq!(back, cert);
    assert_eq!(back.replay().unwrap().is_isomorphic(&b), Ok(true));
    assert_eq!(cs(4, &[4]).len(), 1);
}
