//! Combinatorial maps with a color set on every edge: the intermediate-field
//! picture of quartic Feynman graphs.
//!
//! Edge `e` owns half-edges `2e` and `2e+1`. Each vertex lists its half-edges
//! counter-clockwise. Faces of color `c` are the faces of the submap keeping
//! the edges whose color set contains `c`; isolated vertices count one face.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bubble::{Bubble, VertexId};
use crate::color::{ColorSet, ColorSetError};
use crate::feynman::{BubbleCopy, Ensemble, FeynmanError, FeynmanGraph};
use crate::gluing::UnionFind;
use crate::plane_tree::PlaneTree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("half-edge {0} missing or repeated")]
    BadHalfEdge(u32),
    #[error("copy {0} is not a quartic bubble")]
    NonQuarticBubble(usize),
    #[error("edge {0} is a bridge")]
    EdgeIsBridge(usize),
    #[error("edge {0} out of range")]
    NoSuchEdge(usize),
    #[error("marked corner out of range at vertex {0}")]
    BadMarkedCorner(usize),
    #[error(transparent)]
    Color(#[from] ColorSetError),
    #[error(transparent)]
    Feynman(#[from] FeynmanError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoratedMap {
    d: usize,
    rotations: Vec<Vec<u32>>,
    colors: Vec<ColorSet>,
    marked: Option<Vec<usize>>,
    vertex_of: Vec<u32>,
    next_ccw: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DominanceCondition {
    Planar,
    UnbalancedEdgesAreBridges,
    SubmapsPlanar,
    BlocksSingleColorSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dominance {
    pub dominant: bool,
    pub first_violation: Option<DominanceCondition>,
    pub genus: usize,
    pub bridges: Vec<usize>,
}

impl DecoratedMap {
    pub fn new(d: usize, rotations: Vec<Vec<u32>>, colors: Vec<ColorSet>) -> Result<Self, MapError> {
        Self::with_marks(d, rotations, colors, None)
    }

    pub fn with_marks(
        d: usize,
        rotations: Vec<Vec<u32>>,
        mut colors: Vec<ColorSet>,
        marked: Option<Vec<usize>>,
    ) -> Result<Self, MapError> {
        let n = 2 * colors.len();
        for c in colors.iter_mut() {
            *c = c.normalized(d)?;
        }
        let mut vertex_of = vec![u32::MAX; n];
        let mut next_ccw = vec![0u32; n];
        for (v, rot) in rotations.iter().enumerate() {
            for (i, &h) in rot.iter().enumerate() {
                if h as usize >= n || vertex_of[h as usize] != u32::MAX {
                    return Err(MapError::BadHalfEdge(h));
                }
                vertex_of[h as usize] = v as u32;
                next_ccw[h as usize] = rot[(i + 1) % rot.len()];
            }
        }
        if let Some(h) = vertex_of.iter().position(|&v| v == u32::MAX) {
            return Err(MapError::BadHalfEdge(h as u32));
        }
        if let Some(m) = &marked {
            for (v, &k) in m.iter().enumerate() {
                if v >= rotations.len() || k >= rotations[v].len().max(1) {
                    return Err(MapError::BadMarkedCorner(v));
                }
            }
        }
        Ok(DecoratedMap { d, rotations, colors, marked, vertex_of, next_ccw })
    }

    /// The map of a plane tree; half-edges are renumbered edge by edge.
    pub fn from_plane_tree(t: &PlaneTree) -> Result<Self, MapError> {
        let mut id = BTreeMap::new();
        for (j, e) in t.edges().iter().enumerate() {
            id.insert(e.h1, 2 * j as u32);
            id.insert(e.h2, 2 * j as u32 + 1);
        }
        let rotations = t.vertices().iter().map(|v| v.halfedges.iter().map(|h| id[h]).collect()).collect();
        let marks = t.vertices().iter().map(|v| v.marked_corner).collect();
        Self::with_marks(t.d(), rotations, t.edges().iter().map(|e| e.colors).collect(), Some(marks))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn vertex_count(&self) -> usize {
        self.rotations.len()
    }

    pub fn edge_count(&self) -> usize {
        self.colors.len()
    }

    pub fn rotations(&self) -> &[Vec<u32>] {
        &self.rotations
    }

    pub fn colors(&self) -> &[ColorSet] {
        &self.colors
    }

    pub fn marked_corners(&self) -> Option<&[usize]> {
        self.marked.as_deref()
    }

    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        (self.vertex_of[2 * e] as usize, self.vertex_of[2 * e + 1] as usize)
    }

    /// Rotations start at their smallest half-edge; vertices sorted by it.
    /// Marks are dropped since rotating would move them.
    pub fn normalized(&self) -> DecoratedMap {
        let mut rots: Vec<Vec<u32>> = self
            .rotations
            .iter()
            .map(|r| {
                let k = r.iter().enumerate().min_by_key(|(_, h)| **h).map(|(i, _)| i).unwrap_or(0);
                r[k..].iter().chain(&r[..k]).copied().collect()
            })
            .collect();
        rots.sort_by_key(|r| r.first().copied().unwrap_or(u32::MAX));
        DecoratedMap::new(self.d, rots, self.colors.clone()).expect("same half-edges")
    }

    /// Faces of the submap keeping edges with `keep(e)`.
    fn faces_where(&self, keep: &dyn Fn(usize) -> bool) -> usize {
        self.face_orbits(keep).len() + self.isolated_where(keep).len()
    }

    fn isolated_where(&self, keep: &dyn Fn(usize) -> bool) -> Vec<usize> {
        (0..self.rotations.len()).filter(|&v| self.rotations[v].iter().all(|&h| !keep(h as usize / 2))).collect()
    }

    /// Orbits of `σ∘α` on the kept half-edges, as lists of half-edges.
    fn face_orbits(&self, keep: &dyn Fn(usize) -> bool) -> Vec<Vec<u32>> {
        let n = 2 * self.colors.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] || !keep(start / 2) {
                continue;
            }
            let mut orbit = Vec::new();
            let mut h = start;
            while !seen[h] {
                seen[h] = true;
                orbit.push(h as u32);
                let mut g = self.next_ccw[h ^ 1] as usize;
                while !keep(g / 2) {
                    g = self.next_ccw[g] as usize;
                }
                h = g;
            }
            out.push(orbit);
        }
        out
    }

    pub fn faces_of_color(&self, c: usize) -> usize {
        self.faces_where(&|e| self.colors[e].contains(c))
    }

    pub fn face_count(&self) -> usize {
        self.faces_where(&|_| true)
    }

    /// `δ = Σ_c F_c + Σ_e (|C_e| − d)`.
    pub fn delta(&self) -> i64 {
        let f: usize = (1..=self.d).map(|c| self.faces_of_color(c)).sum();
        f as i64 + self.colors.iter().map(|c| c.len() as i64 - self.d as i64).sum::<i64>()
    }

    /// Sum of component genera of the submap keeping `keep` edges.
    fn genus_where(&self, keep: &dyn Fn(usize) -> bool) -> usize {
        let nv = self.rotations.len();
        let mut uf = UnionFind::new(nv);
        for e in (0..self.colors.len()).filter(|&e| keep(e)) {
            let (a, b) = self.endpoints(e);
            uf.union(a, b);
        }
        // per component: V − E + F = 2 − 2g
        let mut chi: BTreeMap<usize, i64> = BTreeMap::new();
        for v in 0..nv {
            *chi.entry(uf.find(v)).or_default() += 1;
        }
        for e in (0..self.colors.len()).filter(|&e| keep(e)) {
            *chi.entry(uf.find(self.endpoints(e).0)).or_default() -= 1;
        }
        for orbit in self.face_orbits(keep) {
            *chi.entry(uf.find(self.vertex_of[orbit[0] as usize] as usize)).or_default() += 1;
        }
        for v in self.isolated_where(keep) {
            *chi.entry(uf.find(v)).or_default() += 1;
        }
        chi.values().map(|&x| ((2 - x) / 2) as usize).sum()
    }

    pub fn genus(&self) -> usize {
        self.genus_where(&|_| true)
    }

    fn component_count_where(&self, keep: &dyn Fn(usize) -> bool) -> usize {
        let nv = self.rotations.len();
        let mut uf = UnionFind::new(nv);
        let mut k = nv;
        for e in (0..self.colors.len()).filter(|&e| keep(e)) {
            let (a, b) = self.endpoints(e);
            if uf.union(a, b) {
                k -= 1;
            }
        }
        k
    }

    pub fn is_connected(&self) -> bool {
        self.component_count_where(&|_| true) == 1
    }

    pub fn is_bridge(&self, e: usize) -> bool {
        self.component_count_where(&|f| f != e) > self.component_count_where(&|_| true)
    }

    pub fn bridges(&self) -> Vec<usize> {
        (0..self.colors.len()).filter(|&e| self.is_bridge(e)).collect()
    }

    /// Biconnected blocks as lists of edges. Self-loops form their own blocks.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let nv = self.rotations.len();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
        let mut blocks = Vec::new();
        for e in 0..self.colors.len() {
            let (a, b) = self.endpoints(e);
            if a == b {
                blocks.push(vec![e]);
            } else {
                adj[a].push((b, e));
                adj[b].push((a, e));
            }
        }
        let mut disc = vec![usize::MAX; nv];
        let mut low = vec![0; nv];
        let mut time = 0;
        let mut stack: Vec<usize> = Vec::new();
        for root in 0..nv {
            if disc[root] != usize::MAX {
                continue;
            }
            // iterative DFS: (vertex, parent edge, next neighbor index)
            let mut dfs: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            disc[root] = time;
            low[root] = time;
            time += 1;
            while let Some(&mut (v, pe, ref mut i)) = dfs.last_mut() {
                if *i < adj[v].len() {
                    let (u, e) = adj[v][*i];
                    *i += 1;
                    if e == pe {
                        continue;
                    }
                    if disc[u] == usize::MAX {
                        stack.push(e);
                        disc[u] = time;
                        low[u] = time;
                        time += 1;
                        dfs.push((u, e, 0));
                    } else if disc[u] < disc[v] {
                        stack.push(e);
                        low[v] = low[v].min(disc[u]);
                    }
                } else {
                    dfs.pop();
                    if let Some(&(p, _, _)) = dfs.last() {
                        low[p] = low[p].min(low[v]);
                        if low[v] >= disc[p] {
                            let mut block = Vec::new();
                            while let Some(f) = stack.pop() {
                                block.push(f);
                                if f == pe {
                                    break;
                                }
                            }
                            block.sort();
                            blocks.push(block);
                        }
                    }
                }
            }
        }
        blocks.sort();
        blocks
    }

    /// The four dominance conditions for quartic maps, checked in order.
    pub fn classify_dominant(&self) -> Dominance {
        let d = self.d;
        let genus = self.genus();
        let bridges = self.bridges();
        let violation = if genus != 0 {
            Some(DominanceCondition::Planar)
        } else if (0..self.colors.len()).any(|e| self.colors[e].is_unbalanced(d) && !bridges.contains(&e)) {
            Some(DominanceCondition::UnbalancedEdgesAreBridges)
        } else if self
            .colors
            .iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .any(|&c| self.genus_where(&|e| self.colors[e] == c) != 0)
        {
            Some(DominanceCondition::SubmapsPlanar)
        } else if self.blocks().iter().any(|b| b.iter().any(|&e| self.colors[e] != self.colors[b[0]])) {
            Some(DominanceCondition::BlocksSingleColorSet)
        } else {
            None
        };
        Dominance { dominant: violation.is_none(), first_violation: violation, genus, bridges }
    }

    /// Detaches end `end` (0 → `2e`, 1 → `2e+1`) of edge `e` onto a new leaf vertex.
    pub fn unhook(&self, e: usize, end: usize) -> Result<DecoratedMap, MapError> {
        if e >= self.colors.len() {
            return Err(MapError::NoSuchEdge(e));
        }
        if self.is_bridge(e) {
            return Err(MapError::EdgeIsBridge(e));
        }
        let h = (2 * e + end.min(1)) as u32;
        let mut rots = self.rotations.clone();
        for r in rots.iter_mut() {
            r.retain(|&g| g != h);
        }
        rots.push(vec![h]);
        DecoratedMap::new(self.d, rots, self.colors.clone())
    }

    /// The submap on the given edges and their endpoints.
    pub fn edge_submap(&self, edges: &[usize]) -> Result<DecoratedMap, MapError> {
        let mut new_id = BTreeMap::new();
        let mut colors = Vec::new();
        for (k, &e) in edges.iter().enumerate() {
            new_id.insert(2 * e as u32, 2 * k as u32);
            new_id.insert(2 * e as u32 + 1, 2 * k as u32 + 1);
            colors.push(self.colors[e]);
        }
        let rots: Vec<Vec<u32>> = self
            .rotations
            .iter()
            .map(|r| r.iter().filter_map(|h| new_id.get(h).copied()).collect::<Vec<_>>())
            .filter(|r| !r.is_empty())
            .collect();
        let rots = if rots.is_empty() { vec![vec![]] } else { rots };
        DecoratedMap::new(self.d, rots, colors)
    }

    pub fn to_json(&self) -> MapJson {
        MapJson {
            d: self.d,
            vertices: self.rotations.clone(),
            edges: (0..self.colors.len())
                .map(|e| MapEdge { h1: 2 * e as u32, h2: 2 * e as u32 + 1, colors: self.colors[e] })
                .collect(),
            marked_corners: self.marked.clone(),
        }
    }

    /// Accepts arbitrary half-edge ids and renumbers them edge by edge.
    pub fn from_json(j: &MapJson) -> Result<DecoratedMap, MapError> {
        let mut id = BTreeMap::new();
        for (k, e) in j.edges.iter().enumerate() {
            for (h, new) in [(e.h1, 2 * k as u32), (e.h2, 2 * k as u32 + 1)] {
                if id.insert(h, new).is_some() {
                    return Err(MapError::BadHalfEdge(h));
                }
            }
        }
        let mut rots = Vec::new();
        for r in &j.vertices {
            let mut row = Vec::new();
            for h in r {
                row.push(*id.get(h).ok_or(MapError::BadHalfEdge(*h))?);
            }
            rots.push(row);
        }
        Self::with_marks(j.d, rots, j.edges.iter().map(|e| e.colors).collect(), j.marked_corners.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapJson {
    pub d: usize,
    pub vertices: Vec<Vec<u32>>,
    pub edges: Vec<MapEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marked_corners: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapEdge {
    pub h1: u32,
    pub h2: u32,
    #[serde(rename = "C")]
    pub colors: ColorSet,
}

/// Canonical pairs of a quartic copy, whites in increasing id order, and its color set.
fn quartic_pairs(b: &Bubble) -> Option<([(VertexId, VertexId); 2], ColorSet)> {
    if b.vertex_count() != 4 {
        return None;
    }
    let d = b.d();
    let whites: Vec<_> = b.whites().collect();
    let mut pairs = [(VertexId(0), VertexId(0)); 2];
    let mut colors = None;
    for (i, &w) in whites.iter().enumerate() {
        let blacks: BTreeSet<_> = b.neighbors(w).iter().copied().collect();
        if blacks.len() != 2 {
            return None;
        }
        for k in blacks {
            let s = b.colors_between(w, k);
            let c = s.normalized(d).ok()?;
            colors = Some(c);
            if s != c {
                pairs[i] = (w, k);
            }
        }
    }
    Some((pairs, colors?))
}

/// Quartic Feynman graph → decorated map. Copy `j` becomes edge `j`; its
/// canonical pairs become half-edges `2j`, `2j+1`; a vertex is a cycle
/// pair → black → color-0 edge back to a white → its pair → …
pub fn j_quartic(g: &FeynmanGraph) -> Result<DecoratedMap, MapError> {
    let ens = g.ensemble();
    let mut colors = Vec::new();
    let mut half_of_white = vec![0u32; ens.white_count()];
    let mut black_of_half = Vec::new();
    for (j, copy) in ens.copies().iter().enumerate() {
        let (pairs, c) = quartic_pairs(&copy.bubble).ok_or(MapError::NonQuarticBubble(j))?;
        colors.push(c);
        for (k, &(w, b)) in pairs.iter().enumerate() {
            half_of_white[ens.white_index((j, w)).unwrap()] = (2 * j + k) as u32;
            black_of_half.push(ens.black_index((j, b)).unwrap());
        }
    }
    let mut inv = vec![0usize; ens.white_count()];
    for (w, &b) in g.matching().iter().enumerate() {
        inv[b as usize] = w;
    }
    let n = black_of_half.len();
    let sigma: Vec<u32> = (0..n).map(|h| half_of_white[inv[black_of_half[h]]]).collect();
    let mut seen = vec![false; n];
    let mut rots = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut rot = Vec::new();
        let mut h = start;
        while !seen[h] {
            seen[h] = true;
            rot.push(h as u32);
            h = sigma[h] as usize;
        }
        rots.push(rot);
    }
    DecoratedMap::new(ens.d(), rots, colors)
}

/// Inverse of [`j_quartic`]: edge `e` becomes a copy of `Q_{C_e}` on ids
/// `[a, ā, b, b̄] = [0, 1, 2, 3]`; interaction ids index the distinct color sets.
pub fn j_inverse(m: &DecoratedMap) -> Result<FeynmanGraph, MapError> {
    let d = m.d();
    let distinct: Vec<ColorSet> = m.colors().iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut copies = Vec::new();
    for &c in m.colors() {
        let b = Bubble::quartic_with_ids(d, c, [0, 1, 2, 3].map(VertexId)).map_err(|e| match e {
            crate::bubble::BubbleError::Color(c) => MapError::Color(c),
            _ => MapError::NonQuarticBubble(copies.len()),
        })?;
        let r = distinct.binary_search(&c).unwrap();
        copies.push(BubbleCopy { interaction: r, bubble: Arc::new(b) });
    }
    let ens = Arc::new(Ensemble::new(copies)?);
    let pair = |h: u32| {
        let (j, k) = ((h / 2) as usize, h % 2);
        ((j, VertexId(2 * k)), (j, VertexId(2 * k + 1)))
    };
    let mut prev = vec![0u32; 2 * m.edge_count()];
    for r in m.rotations() {
        for (i, &h) in r.iter().enumerate() {
            prev[r[(i + 1) % r.len()] as usize] = h;
        }
    }
    let pairs: Vec<_> = (0..2 * m.edge_count() as u32).map(|h| (pair(h).0, pair(prev[h as usize]).1)).collect();
    Ok(FeynmanGraph::from_pairs(ens, &pairs)?)
}
