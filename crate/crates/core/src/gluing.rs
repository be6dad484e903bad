//! Quartic bubbles glued by dashed lines, and the boundary operator.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bubble::{Bubble, BubbleError, RawBubble, RawEdge, Side, VertexId};
use crate::color::{ColorSet, ColorSetError};
use crate::gm::{CertificateError, GmCertificate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GluingError {
    #[error("vertex {0} appears twice")]
    DuplicateVertex(VertexId),
    #[error("dashed line #{line} uses unknown vertex {vertex}")]
    UnknownVertex { line: usize, vertex: VertexId },
    #[error("dashed line #{line} must join a white to a black vertex")]
    DashedWrongSides { line: usize },
    #[error("vertex {0} is incident to more than one dashed line")]
    VertexInTwoDashedLines(VertexId),
    #[error("gluing graph is not connected")]
    Disconnected,
    #[error("gluing has no quartics")]
    Empty,
    #[error("dashed line #{line} is not an edge-cut")]
    NotATreeGluing { line: usize },
    #[error("certificate does not belong to the bubble")]
    CertificateMismatch,
    #[error(transparent)]
    Bubble(#[from] BubbleError),
    #[error(transparent)]
    Color(#[from] ColorSetError),
}

impl From<CertificateError> for GluingError {
    fn from(_: CertificateError) -> Self {
        GluingError::CertificateMismatch
    }
}

/// A copy of `Q_C`. `vertices = [a, ā, b, b̄]` with `a, b` white; the
/// canonical pairs are `(a, ā)` and `(b, b̄)`, joined by `Ĉ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quartic {
    #[serde(rename = "C")]
    pub colors: ColorSet,
    pub vertices: [VertexId; 4],
}

impl Quartic {
    pub fn side_of(pos: usize) -> Side {
        if pos.is_multiple_of(2) {
            Side::White
        } else {
            Side::Black
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGluing", into = "RawGluing")]
pub struct GluingGraph {
    d: usize,
    quartics: Vec<Quartic>,
    /// (white, black), sorted.
    dashed: Vec<(VertexId, VertexId)>,
}

#[derive(Serialize, Deserialize)]
struct RawGluing {
    d: usize,
    quartics: Vec<Quartic>,
    dashed: Vec<(VertexId, VertexId)>,
}

impl TryFrom<RawGluing> for GluingGraph {
    type Error = GluingError;
    fn try_from(r: RawGluing) -> Result<Self, Self::Error> {
        GluingGraph::new(r.d, r.quartics, r.dashed)
    }
}

impl From<GluingGraph> for RawGluing {
    fn from(g: GluingGraph) -> Self {
        RawGluing { d: g.d, quartics: g.quartics, dashed: g.dashed }
    }
}

impl GluingGraph {
    pub fn new(
        d: usize,
        mut quartics: Vec<Quartic>,
        mut dashed: Vec<(VertexId, VertexId)>,
    ) -> Result<Self, GluingError> {
        if quartics.is_empty() {
            return Err(GluingError::Empty);
        }
        let mut pos = BTreeMap::new();
        for (j, q) in quartics.iter_mut().enumerate() {
            q.colors = q.colors.normalized(d)?;
            for (k, &v) in q.vertices.iter().enumerate() {
                if pos.insert(v, (j, k)).is_some() {
                    return Err(GluingError::DuplicateVertex(v));
                }
            }
        }
        let mut used = BTreeSet::new();
        for (i, &(w, b)) in dashed.iter().enumerate() {
            for v in [w, b] {
                if !pos.contains_key(&v) {
                    return Err(GluingError::UnknownVertex { line: i, vertex: v });
                }
                if !used.insert(v) {
                    return Err(GluingError::VertexInTwoDashedLines(v));
                }
            }
            if Quartic::side_of(pos[&w].1) != Side::White || Quartic::side_of(pos[&b].1) != Side::Black {
                return Err(GluingError::DashedWrongSides { line: i });
            }
        }
        dashed.sort();
        let g = GluingGraph { d, quartics, dashed };
        let mut uf = UnionFind::new(g.quartics.len());
        for &(w, b) in &g.dashed {
            uf.union(pos[&w].0, pos[&b].0);
        }
        if (0..g.quartics.len()).any(|j| uf.find(j) != uf.find(0)) {
            return Err(GluingError::Disconnected);
        }
        Ok(g)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn quartics(&self) -> &[Quartic] {
        &self.quartics
    }

    pub fn dashed(&self) -> &[(VertexId, VertexId)] {
        &self.dashed
    }

    /// Vertex → (quartic index, position in `[a, ā, b, b̄]`).
    pub fn positions(&self) -> BTreeMap<VertexId, (usize, usize)> {
        let mut pos = BTreeMap::new();
        for (j, q) in self.quartics.iter().enumerate() {
            for (k, &v) in q.vertices.iter().enumerate() {
                pos.insert(v, (j, k));
            }
        }
        pos
    }

    pub fn free_vertices(&self) -> Vec<VertexId> {
        let used: BTreeSet<_> = self.dashed.iter().flat_map(|&(w, b)| [w, b]).collect();
        let mut out: Vec<_> = self.quartics.iter().flat_map(|q| q.vertices).filter(|v| !used.contains(v)).collect();
        out.sort();
        out
    }

    /// Checks that every dashed line joins two quartics and is an edge-cut of
    /// the quartic-level graph; the first offending line is reported.
    pub fn check_tree(&self) -> Result<(), GluingError> {
        let pos = self.positions();
        let mut uf = UnionFind::new(self.quartics.len());
        for (i, &(w, b)) in self.dashed.iter().enumerate() {
            if !uf.union(pos[&w].0, pos[&b].0) {
                return Err(GluingError::NotATreeGluing { line: i });
            }
        }
        Ok(())
    }

    pub fn is_tree_gluing(&self) -> bool {
        self.check_tree().is_ok()
    }

    /// Contracts every dashed line; the result is a bubble on the free vertices.
    pub fn boundary(&self) -> Result<Bubble, GluingError> {
        let d = self.d;
        let mut adj: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
        let mut side = BTreeMap::new();
        for q in &self.quartics {
            let [a, abar, b, bbar] = q.vertices;
            let mut row = |v: VertexId, f: &dyn Fn(usize) -> VertexId| {
                adj.insert(v, (1..=d).map(f).collect());
            };
            row(a, &|c| if q.colors.contains(c) { bbar } else { abar });
            row(abar, &|c| if q.colors.contains(c) { b } else { a });
            row(b, &|c| if q.colors.contains(c) { abar } else { bbar });
            row(bbar, &|c| if q.colors.contains(c) { a } else { b });
            for (k, &v) in q.vertices.iter().enumerate() {
                side.insert(v, Quartic::side_of(k));
            }
        }
        for &(u, u2) in &self.dashed {
            for c in 0..d {
                let p = adj[&u][c];
                let q = adj[&u2][c];
                if p == u2 {
                    continue;
                }
                adj.get_mut(&q).unwrap()[c] = p;
                adj.get_mut(&p).unwrap()[c] = q;
            }
            adj.remove(&u);
            adj.remove(&u2);
            side.remove(&u);
            side.remove(&u2);
        }
        let mut raw = RawBubble { d, whites: vec![], blacks: vec![], edges: vec![] };
        for (&v, &s) in &side {
            match s {
                Side::White => {
                    raw.whites.push(v);
                    for c in 1..=d {
                        raw.edges.push(RawEdge { c, w: v, b: adj[&v][c - 1] });
                    }
                }
                Side::Black => raw.blacks.push(v),
            }
        }
        Ok(Bubble::validate(&raw)?)
    }

    /// Same gluing with quartic `j` on ids `4j..4j+3`.
    pub fn canonical_relabel(&self) -> GluingGraph {
        let pos = self.positions();
        let f = |v: VertexId| {
            let (j, k) = pos[&v];
            VertexId((4 * j + k) as u32)
        };
        let quartics =
            self.quartics.iter().map(|q| Quartic { colors: q.colors, vertices: q.vertices.map(f) }).collect();
        let mut dashed: Vec<_> = self.dashed.iter().map(|&(w, b)| (f(w), f(b))).collect();
        dashed.sort();
        GluingGraph { d: self.d, quartics, dashed }
    }

    /// Color sets of the quartics, sorted.
    pub fn color_sets(&self) -> Vec<ColorSet> {
        let mut v: Vec<_> = self.quartics.iter().map(|q| q.colors).collect();
        v.sort();
        v
    }
}

/// Tree of quartics whose boundary is `b`, built by replaying `cert`.
///
/// Every insertion at `x` adds one quartic; unless it is the first, the old
/// `x` is renamed to a fresh internal id and glued by a dashed line to the new
/// quartic. Free vertices keep the ids of `b`.
pub fn decompose(b: &Bubble, cert: &GmCertificate) -> Result<GluingGraph, GluingError> {
    cert.verify(b)?;
    let d = b.d();
    if cert.sequence.is_empty() {
        return Err(GluingError::Empty);
    }
    let mut next = cert
        .sequence
        .iter()
        .flat_map(|s| [s.at, s.v, s.vbar])
        .chain([cert.seed.0, cert.seed.1])
        .chain(b.vertices())
        .map(|v| v.0)
        .max()
        .unwrap()
        + 1;
    let mut fresh = || {
        next += 1;
        VertexId(next - 1)
    };
    let mut quartics: Vec<Quartic> = Vec::new();
    let mut dashed = Vec::new();
    let mut pos: BTreeMap<VertexId, (usize, usize)> = BTreeMap::new();
    let (sx, sy) = cert.seed;
    for (i, s) in cert.sequence.iter().enumerate() {
        let vertices = if i == 0 {
            if s.at == sx {
                [sx, sy, s.v, s.vbar]
            } else if s.at == sy {
                [sx, sy, s.vbar, s.v]
            } else {
                return Err(GluingError::CertificateMismatch);
            }
        } else {
            let &(j, k) = pos.get(&s.at).ok_or(GluingError::CertificateMismatch)?;
            let f = fresh();
            let f2 = fresh();
            quartics[j].vertices[k] = f;
            pos.remove(&s.at);
            pos.insert(f, (j, k));
            if Quartic::side_of(k) == Side::White {
                dashed.push((f, f2));
                [s.at, f2, s.v, s.vbar]
            } else {
                dashed.push((f2, f));
                [s.vbar, s.v, f2, s.at]
            }
        };
        for (k, &v) in vertices.iter().enumerate() {
            pos.insert(v, (quartics.len(), k));
        }
        quartics.push(Quartic { colors: s.colors, vertices });
    }
    GluingGraph::new(d, quartics, dashed)
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gm::recognize_gm;

    fn q(d: usize, c: &[usize], ids: [u32; 4]) -> Quartic {
        Quartic { colors: ColorSet::new(d, c).unwrap(), vertices: ids.map(VertexId) }
    }

    #[test]
    fn single_quartic_boundary() {
        let g = GluingGraph::new(3, vec![q(3, &[1], [0, 1, 2, 3])], vec![]).unwrap();
        assert_eq!(g.boundary().unwrap(), Bubble::quartic(3, &[1]).unwrap());
        assert!(g.is_tree_gluing());
    }

    #[test]
    fn two_quartics_give_bidipole_bubble() {
        let g = GluingGraph::new(
            3,
            vec![q(3, &[1], [0, 1, 2, 3]), q(3, &[2], [4, 5, 6, 7])],
            vec![(VertexId(0), VertexId(5))],
        )
        .unwrap();
        let b = g.boundary().unwrap();
        assert_eq!(b.vertex_count(), 6);
        let cert = recognize_gm(&b).unwrap();
        assert_eq!(cert.color_sets(), vec![ColorSet::single(1), ColorSet::single(2)]);
    }

    #[test]
    fn rejects_bad_gluings() {
        let qs = vec![q(3, &[1], [0, 1, 2, 3]), q(3, &[2], [4, 5, 6, 7])];
        assert_eq!(
            GluingGraph::new(3, qs.clone(), vec![(VertexId(1), VertexId(4))]),
            Err(GluingError::DashedWrongSides { line: 0 })
        );
        assert_eq!(GluingGraph::new(3, qs.clone(), vec![]), Err(GluingError::Disconnected));
        let g = GluingGraph::new(3, qs, vec![(VertexId(0), VertexId(5)), (VertexId(6), VertexId(3))]).unwrap();
        assert_eq!(g.check_tree(), Err(GluingError::NotATreeGluing { line: 1 }));
        // a self-glued quartic
        let g = GluingGraph::new(3, vec![q(3, &[1], [0, 1, 2, 3])], vec![(VertexId(0), VertexId(3))]).unwrap();
        assert!(!g.is_tree_gluing());
    }

    #[test]
    fn decompose_quartic_is_itself() {
        let b = Bubble::quartic(4, &[1, 2]).unwrap();
        let cert = recognize_gm(&b).unwrap();
        let g = decompose(&b, &cert).unwrap();
        assert_eq!(g.quartics().len(), 1);
        assert!(g.dashed().is_empty());
        assert_eq!(g.boundary().unwrap(), b);
    }

    #[test]
    fn decompose_rejects_foreign_certificate() {
        let b = Bubble::quartic(4, &[1, 2]).unwrap();
        let other = Bubble::quartic(4, &[1]).unwrap();
        let cert = recognize_gm(&other).unwrap();
        assert_eq!(decompose(&b, &cert), Err(GluingError::CertificateMismatch));
    }
}
