#![allow(dead_code)]

use std::collections::BTreeMap;

use melonforge::gluing::decompose;
use melonforge::plane_tree::{to_plane_tree, PlaneTree};
use melonforge::{recognize_gm, Bubble, ColorSet, VertexId};

pub fn cs(d: usize, c: &[usize]) -> ColorSet {
    ColorSet::new(d, c).unwrap()
}

/// d = 4, 14 vertices: Q_{4} followed by insertions of {1,2}, {4}, {1,4},
/// {1,3}, {1} at vertices 0, 1, 2, 3, 4.
pub fn d4_example() -> Bubble {
    let mut b = Bubble::quartic(4, &[4]).unwrap();
    let steps: [(u32, &[usize]); 5] = [(0, &[1, 2]), (1, &[4]), (2, &[1, 4]), (3, &[1, 3]), (4, &[1])];
    for (at, c) in steps {
        b = b.insert_bidipole(VertexId(at), cs(4, c)).unwrap().0;
    }
    b
}

pub fn d4_example_multiset() -> BTreeMap<ColorSet, usize> {
    let mut m = BTreeMap::new();
    for c in [&[4][..], &[1, 2], &[4], &[1, 4], &[1, 3], &[1]] {
        *m.entry(cs(4, c)).or_insert(0) += 1;
    }
    m
}

/// The melonic d = 3, V = 6 bubble: Q_{1} with a {2} insertion.
pub fn melonic_d3_v6() -> Bubble {
    let q = Bubble::quartic(3, &[1]).unwrap();
    q.insert_bidipole(VertexId(0), cs(3, &[2])).unwrap().0
}

pub fn tree_of(b: &Bubble) -> PlaneTree {
    let cert = recognize_gm(b).expect("GM bubble");
    to_plane_tree(&decompose(b, &cert).unwrap()).unwrap()
}

/// Multiset expanded into a sorted list.
pub fn expand(m: &BTreeMap<ColorSet, usize>) -> Vec<ColorSet> {
    m.iter().flat_map(|(&c, &n)| std::iter::repeat_n(c, n)).collect()
}
