//! Plane trees with one marked corner per vertex, in bijection with tree
//! gluings of quartics: quartics become edges, canonical pairs become
//! half-edges and dashed lines become unmarked corners.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bubble::VertexId;
use crate::color::{ColorSet, ColorSetError};
use crate::gluing::{GluingError, GluingGraph, Quartic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfEdgeId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlaneTreeError {
    #[error("half-edge {0:?} is missing or repeated")]
    BadHalfEdge(HalfEdgeId),
    #[error("marked corner {corner} out of range at vertex {vertex}")]
    BadMarkedCorner { vertex: usize, corner: usize },
    #[error("vertex {0} has no half-edges")]
    IsolatedVertex(usize),
    #[error("not a tree")]
    NotATree,
    #[error(transparent)]
    Color(#[from] ColorSetError),
    #[error(transparent)]
    Gluing(#[from] GluingError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeVertex {
    /// Counter-clockwise order. Corner `k` sits just before `halfedges[k]`.
    pub halfedges: Vec<HalfEdgeId>,
    pub marked_corner: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub h1: HalfEdgeId,
    pub h2: HalfEdgeId,
    #[serde(rename = "C")]
    pub colors: ColorSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPlaneTree", into = "RawPlaneTree")]
pub struct PlaneTree {
    d: usize,
    vertices: Vec<TreeVertex>,
    edges: Vec<TreeEdge>,
    // derived
    vertex_of: BTreeMap<HalfEdgeId, usize>,
    edge_of: BTreeMap<HalfEdgeId, usize>,
}

#[derive(Serialize, Deserialize)]
struct RawPlaneTree {
    d: usize,
    vertices: Vec<TreeVertex>,
    edges: Vec<TreeEdge>,
}

impl TryFrom<RawPlaneTree> for PlaneTree {
    type Error = PlaneTreeError;
    fn try_from(r: RawPlaneTree) -> Result<Self, Self::Error> {
        PlaneTree::new(r.d, r.vertices, r.edges)
    }
}

impl From<PlaneTree> for RawPlaneTree {
    fn from(t: PlaneTree) -> Self {
        RawPlaneTree { d: t.d, vertices: t.vertices, edges: t.edges }
    }
}

impl PlaneTree {
    pub fn new(d: usize, vertices: Vec<TreeVertex>, mut edges: Vec<TreeEdge>) -> Result<Self, PlaneTreeError> {
        let mut vertex_of = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if v.halfedges.is_empty() && vertices.len() > 1 {
                return Err(PlaneTreeError::IsolatedVertex(i));
            }
            if v.marked_corner >= v.halfedges.len().max(1) {
                return Err(PlaneTreeError::BadMarkedCorner { vertex: i, corner: v.marked_corner });
            }
            for &h in &v.halfedges {
                if vertex_of.insert(h, i).is_some() {
                    return Err(PlaneTreeError::BadHalfEdge(h));
                }
            }
        }
        let mut edge_of = BTreeMap::new();
        for (j, e) in edges.iter_mut().enumerate() {
            e.colors = e.colors.normalized(d)?;
            for h in [e.h1, e.h2] {
                if !vertex_of.contains_key(&h) || edge_of.insert(h, j).is_some() {
                    return Err(PlaneTreeError::BadHalfEdge(h));
                }
            }
        }
        if let Some(h) = vertex_of.keys().find(|h| !edge_of.contains_key(h)) {
            return Err(PlaneTreeError::BadHalfEdge(*h));
        }
        if vertices.len() != edges.len() + 1 {
            return Err(PlaneTreeError::NotATree);
        }
        let t = PlaneTree { d, vertices, edges, vertex_of, edge_of };
        if t.component_count() != 1 {
            return Err(PlaneTreeError::NotATree);
        }
        Ok(t)
    }

    fn component_count(&self) -> usize {
        let n = self.vertices.len();
        let mut uf = crate::gluing::UnionFind::new(n);
        let mut k = n;
        for e in &self.edges {
            if uf.union(self.vertex_of[&e.h1], self.vertex_of[&e.h2]) {
                k -= 1;
            }
        }
        k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn vertices(&self) -> &[TreeVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn halfedges(&self) -> impl Iterator<Item = HalfEdgeId> + '_ {
        self.vertex_of.keys().copied()
    }

    pub fn vertex_of(&self, h: HalfEdgeId) -> usize {
        self.vertex_of[&h]
    }

    pub fn edge_of(&self, h: HalfEdgeId) -> usize {
        self.edge_of[&h]
    }

    /// The other half of `h`'s edge.
    pub fn opposite(&self, h: HalfEdgeId) -> HalfEdgeId {
        let e = &self.edges[self.edge_of[&h]];
        if e.h1 == h {
            e.h2
        } else {
            e.h1
        }
    }

    /// Half-edges at `v` in ccw order starting right after the marked corner.
    pub fn ordered_from_mark(&self, v: usize) -> Vec<HalfEdgeId> {
        let tv = &self.vertices[v];
        let k = tv.halfedges.len();
        (0..k).map(|i| tv.halfedges[(tv.marked_corner + i) % k]).collect()
    }

    /// Number of edges in the subtree hanging from `h` (its own edge included),
    /// i.e. the component of the far endpoint once `h`'s vertex is cut away.
    pub fn subtree_edges(&self, h: HalfEdgeId) -> Vec<usize> {
        let root = self.vertex_of[&h];
        let mut out = vec![self.edge_of[&h]];
        let mut queue = VecDeque::from([(self.vertex_of[&self.opposite(h)], root)]);
        while let Some((v, parent)) = queue.pop_front() {
            for &g in &self.vertices[v].halfedges {
                let u = self.vertex_of[&self.opposite(g)];
                if u != parent {
                    out.push(self.edge_of[&g]);
                    queue.push_back((u, v));
                }
            }
        }
        out
    }

    pub fn unmarked_corner_count(&self) -> usize {
        self.vertices.iter().map(|v| v.halfedges.len().saturating_sub(1)).sum()
    }

    /// Color sets of the edges, sorted.
    pub fn color_sets(&self) -> Vec<ColorSet> {
        let mut v: Vec<_> = self.edges.iter().map(|e| e.colors).collect();
        v.sort();
        v
    }

    /// Bubble vertex count `V` of the boundary: two per edge plus two.
    pub fn bubble_vertex_count(&self) -> usize {
        2 * self.edges.len() + 2
    }
}

/// Gluing → plane tree. Each tree vertex is a path that starts at a free
/// white vertex, crosses a canonical pair, follows a dashed line, and so on
/// until a free black vertex. Quartic `j` becomes edge `j` with half-edges
/// `2j` (pair `a, ā`) and `2j+1` (pair `b, b̄`). Tree vertices are listed by
/// their first half-edge.
pub fn to_plane_tree(g: &GluingGraph) -> Result<PlaneTree, PlaneTreeError> {
    g.check_tree()?;
    let pos = g.positions();
    let black_to_white: BTreeMap<VertexId, VertexId> = g.dashed().iter().map(|&(w, b)| (b, w)).collect();
    let half = |j: usize, k: usize| HalfEdgeId((2 * j + k / 2) as u32);
    let mut vertices = Vec::new();
    let mut seen = BTreeSet::new();
    for start in g.free_vertices() {
        if !pos[&start].1.is_multiple_of(2) {
            continue;
        }
        let mut hs = Vec::new();
        let mut white = start;
        loop {
            let (j, k) = pos[&white];
            let h = half(j, k);
            if !seen.insert(h) {
                return Err(PlaneTreeError::NotATree);
            }
            hs.push(h);
            let partner = g.quartics()[j].vertices[k + 1];
            match black_to_white.get(&partner) {
                Some(&w) => white = w,
                None => break,
            }
        }
        vertices.push(TreeVertex { halfedges: hs, marked_corner: 0 });
    }
    if seen.len() != 2 * g.quartics().len() {
        return Err(PlaneTreeError::NotATree);
    }
    // positional order, independent of the vertex ids of `g`
    vertices.sort_by_key(|v| v.halfedges[0]);
    let edges = g
        .quartics()
        .iter()
        .enumerate()
        .map(|(j, q)| TreeEdge { h1: half(j, 0), h2: half(j, 2), colors: q.colors })
        .collect();
    PlaneTree::new(g.d(), vertices, edges)
}

/// Plane tree → gluing. Edge `j` becomes a quartic on ids `4j..4j+3`; around
/// each vertex, consecutive half-edges `h_i, h_{i+1}` (from the marked corner)
/// produce the dashed line (white of `h_{i+1}`, black of `h_i`).
pub fn from_plane_tree(t: &PlaneTree) -> Result<GluingGraph, PlaneTreeError> {
    let quartics: Vec<Quartic> = t
        .edges()
        .iter()
        .enumerate()
        .map(|(j, e)| Quartic { colors: e.colors, vertices: [0, 1, 2, 3].map(|k| VertexId(4 * j as u32 + k)) })
        .collect();
    // (white, black) of the pair a half-edge stands for
    let pair = |h: HalfEdgeId| {
        let j = t.edge_of(h);
        let base = 4 * j as u32 + if t.edges()[j].h1 == h { 0 } else { 2 };
        (VertexId(base), VertexId(base + 1))
    };
    let mut dashed = Vec::new();
    for v in 0..t.vertices().len() {
        let hs = t.ordered_from_mark(v);
        for w in hs.windows(2) {
            dashed.push((pair(w[1]).0, pair(w[0]).1));
        }
    }
    Ok(GluingGraph::new(t.d(), quartics, dashed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::Bubble;
    use crate::gluing::decompose;
    use crate::gm::recognize_gm;

    fn melonic_d3() -> Bubble {
        let q = Bubble::quartic(3, &[1]).unwrap();
        q.insert_bidipole(VertexId(0), ColorSet::single(2)).unwrap().0
    }

    #[test]
    fn single_quartic_tree() {
        let b = Bubble::quartic(3, &[1]).unwrap();
        let g = decompose(&b, &recognize_gm(&b).unwrap()).unwrap();
        let t = to_plane_tree(&g).unwrap();
        assert_eq!(t.vertices().len(), 2);
        assert_eq!(t.edges().len(), 1);
        assert_eq!(t.unmarked_corner_count(), 0);
        assert!(t.vertices().iter().all(|v| v.halfedges.len() == 1));
    }

    #[test]
    fn melonic_example_is_a_path() {
        let b = melonic_d3();
        let g = decompose(&b, &recognize_gm(&b).unwrap()).unwrap();
        let t = to_plane_tree(&g).unwrap();
        assert_eq!(t.vertices().len(), 3);
        let mut degs: Vec<_> = t.vertices().iter().map(|v| v.halfedges.len()).collect();
        degs.sort();
        assert_eq!(degs, vec![1, 1, 2]);
        assert_eq!(t.color_sets(), vec![ColorSet::single(1), ColorSet::single(2)]);
        assert_eq!(t.unmarked_corner_count(), 1);
    }

    #[test]
    fn roundtrips() {
        let b = melonic_d3();
        let g = decompose(&b, &recognize_gm(&b).unwrap()).unwrap();
        let t = to_plane_tree(&g).unwrap();
        let g2 = from_plane_tree(&t).unwrap();
        assert_eq!(g2, g.canonical_relabel());
        assert_eq!(to_plane_tree(&g2).unwrap(), t);
        assert!(g2.boundary().unwrap().is_isomorphic(&b).unwrap());
    }

    #[test]
    fn subtree_sizes_on_path() {
        let b = melonic_d3();
        let g = decompose(&b, &recognize_gm(&b).unwrap()).unwrap();
        let t = to_plane_tree(&g).unwrap();
        for h in t.halfedges() {
            let deg = t.vertices()[t.vertex_of(h)].halfedges.len();
            let far_deg = t.vertices()[t.vertex_of(t.opposite(h))].halfedges.len();
            let n = t.subtree_edges(h).len();
            if far_deg == 1 {
                assert_eq!(n, 1);
            } else {
                assert_eq!((deg, n), (1, 2));
            }
        }
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let b = melonic_d3();
        let t = to_plane_tree(&decompose(&b, &recognize_gm(&b).unwrap()).unwrap()).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: PlaneTree = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        let bad = r#"{"d":3,"vertices":[{"halfedges":[0],"marked_corner":1},{"halfedges":[1],"marked_corner":0}],
                     "edges":[{"h1":0,"h2":1,"C":[1]}]}"#;
        assert!(serde_json::from_str::<PlaneTree>(bad).is_err());
    }
}
