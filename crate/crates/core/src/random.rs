//! Seeded random generators for bubbles and plane trees.

use rand::Rng;

use crate::bubble::Bubble;
use crate::color::ColorSet;
use crate::plane_tree::{HalfEdgeId, PlaneTree, TreeEdge, TreeVertex};

/// Admissible color sets of size at most `max_size`.
pub fn color_sets_up_to(d: usize, max_size: usize) -> Vec<ColorSet> {
    ColorSet::all_admissible(d).into_iter().filter(|c| c.len() <= max_size).collect()
}

/// GM bubble built by `insertions` bidipole insertions at uniformly chosen
/// vertices with sets drawn from `sets`, starting from the 2-vertex bubble.
pub fn random_gm_bubble<R: Rng>(rng: &mut R, d: usize, insertions: usize, sets: &[ColorSet]) -> Bubble {
    let mut b = Bubble::two_vertex(d).expect("d >= 2");
    for _ in 0..insertions {
        let vs: Vec<_> = b.vertices().collect();
        let at = vs[rng.gen_range(0..vs.len())];
        let c = sets[rng.gen_range(0..sets.len())];
        b = b.insert_bidipole(at, c).expect("fresh ids").0;
    }
    b
}

/// Plane tree with `edges` edges: each new vertex hangs off a uniform
/// existing vertex at a uniform position of its rotation; marks are uniform.
pub fn random_plane_tree<R: Rng>(rng: &mut R, d: usize, edges: usize, sets: &[ColorSet]) -> PlaneTree {
    let mut rot: Vec<Vec<HalfEdgeId>> = vec![Vec::new()];
    let mut es = Vec::with_capacity(edges);
    for j in 0..edges {
        let (h1, h2) = (HalfEdgeId(2 * j as u32), HalfEdgeId(2 * j as u32 + 1));
        let p = rng.gen_range(0..rot.len());
        let at = rng.gen_range(0..=rot[p].len());
        rot[p].insert(at, h1);
        rot.push(vec![h2]);
        es.push(TreeEdge { h1, h2, colors: sets[rng.gen_range(0..sets.len())] });
    }
    let vertices = rot
        .into_iter()
        .map(|halfedges| {
            let marked_corner = rng.gen_range(0..halfedges.len().max(1));
            TreeVertex { halfedges, marked_corner }
        })
        .collect();
    PlaneTree::new(d, vertices, es).expect("generated tree is valid")
}
