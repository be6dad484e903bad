//! Bubbles: connected, bipartite, d-regular, properly edge-colored graphs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{ColorSet, ColorSetError, MAX_COLORS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    White,
    Black,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::White => Side::Black,
            Side::Black => Side::White,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BubbleError {
    #[error("dimension {0} unsupported (need 3..={MAX_COLORS})")]
    InvalidDimension(usize),
    #[error("bubble has no vertices")]
    Empty,
    #[error("vertex {0} listed twice")]
    DuplicateVertex(VertexId),
    #[error("edge #{edge} refers to unknown vertex {vertex}")]
    UnknownVertex { edge: usize, vertex: VertexId },
    #[error("edge #{edge} does not join a white to a black vertex (at {vertex})")]
    NotBipartite { edge: usize, vertex: VertexId },
    #[error("vertex {vertex} has color {color} more than once or out of range")]
    NotProperlyColored { vertex: VertexId, color: usize },
    #[error("vertex {vertex} has no edge of color {color}")]
    NotRegular { vertex: VertexId, color: usize },
    #[error("vertex {vertex} is not connected to vertex {root}")]
    NotConnected { vertex: VertexId, root: VertexId },
    #[error("vertex {0} not found")]
    VertexNotFound(VertexId),
    #[error("vertex id {0} already in use")]
    IdInUse(VertexId),
    #[error("not a bidipole: {0}")]
    NotABidipole(String),
    #[error("isomorphism search limited to {limit} vertices, got {got}")]
    SizeLimitExceeded { limit: usize, got: usize },
    #[error(transparent)]
    Color(#[from] ColorSetError),
}

/// Unchecked bubble data as read from JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawBubble {
    pub d: usize,
    pub whites: Vec<VertexId>,
    pub blacks: Vec<VertexId>,
    pub edges: Vec<RawEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEdge {
    pub c: usize,
    pub w: VertexId,
    pub b: VertexId,
}

/// A validated bubble. Each vertex stores its neighbor along every color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bubble {
    d: usize,
    side: BTreeMap<VertexId, Side>,
    adj: BTreeMap<VertexId, Vec<VertexId>>,
}

/// A C-bidipole: `vbar` is joined to `w` by the colors of `colors` and to `v`
/// by the complementary colors. `{v, vbar}` is the pair it contributes to the
/// canonical pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bidipole {
    pub v: VertexId,
    pub vbar: VertexId,
    pub w: VertexId,
    #[serde(rename = "C")]
    pub colors: ColorSet,
}

/// Vertices above this count are refused by [`Bubble::is_isomorphic`].
pub const ISO_SIZE_LIMIT: usize = 4096;

impl Bubble {
    pub fn validate(raw: &RawBubble) -> Result<Bubble, BubbleError> {
        let d = raw.d;
        if !(3..=MAX_COLORS).contains(&d) {
            return Err(BubbleError::InvalidDimension(d));
        }
        if raw.whites.is_empty() && raw.blacks.is_empty() {
            return Err(BubbleError::Empty);
        }
        let mut side = BTreeMap::new();
        for (&v, s) in raw.whites.iter().map(|v| (v, Side::White)).chain(raw.blacks.iter().map(|v| (v, Side::Black))) {
            if side.insert(v, s).is_some() {
                return Err(BubbleError::DuplicateVertex(v));
            }
        }
        let mut slots: BTreeMap<VertexId, Vec<Option<VertexId>>> = side.keys().map(|&v| (v, vec![None; d])).collect();
        for (i, e) in raw.edges.iter().enumerate() {
            for v in [e.w, e.b] {
                if !side.contains_key(&v) {
                    return Err(BubbleError::UnknownVertex { edge: i, vertex: v });
                }
            }
            if side[&e.w] != Side::White {
                return Err(BubbleError::NotBipartite { edge: i, vertex: e.w });
            }
            if side[&e.b] != Side::Black {
                return Err(BubbleError::NotBipartite { edge: i, vertex: e.b });
            }
            if e.c == 0 || e.c > d {
                return Err(BubbleError::NotProperlyColored { vertex: e.w, color: e.c });
            }
            for (v, u) in [(e.w, e.b), (e.b, e.w)] {
                let slot = &mut slots.get_mut(&v).unwrap()[e.c - 1];
                if slot.is_some() {
                    return Err(BubbleError::NotProperlyColored { vertex: v, color: e.c });
                }
                *slot = Some(u);
            }
        }
        let mut adj = BTreeMap::new();
        for (v, s) in slots {
            let mut row = Vec::with_capacity(d);
            for (i, u) in s.into_iter().enumerate() {
                match u {
                    Some(u) => row.push(u),
                    None => return Err(BubbleError::NotRegular { vertex: v, color: i + 1 }),
                }
            }
            adj.insert(v, row);
        }
        let b = Bubble { d, side, adj };
        b.check_connected()?;
        Ok(b)
    }

    fn check_connected(&self) -> Result<(), BubbleError> {
        let root = *self.adj.keys().next().ok_or(BubbleError::Empty)?;
        let mut seen = BTreeSet::from([root]);
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &u in &self.adj[&v] {
                if seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
        if let Some(&v) = self.adj.keys().find(|v| !seen.contains(v)) {
            return Err(BubbleError::NotConnected { vertex: v, root });
        }
        Ok(())
    }

    pub fn to_raw(&self) -> RawBubble {
        let mut edges = Vec::new();
        for w in self.whites() {
            for c in 1..=self.d {
                edges.push(RawEdge { c, w, b: self.neighbor(w, c) });
            }
        }
        RawBubble { d: self.d, whites: self.whites().collect(), blacks: self.blacks().collect(), edges }
    }

    /// The unique 2-vertex bubble (all `d` colors between one white and one black).
    pub fn two_vertex(d: usize) -> Result<Bubble, BubbleError> {
        Self::two_vertex_with_ids(d, VertexId(0), VertexId(1))
    }

    pub fn two_vertex_with_ids(d: usize, white: VertexId, black: VertexId) -> Result<Bubble, BubbleError> {
        let edges = (1..=d).map(|c| RawEdge { c, w: white, b: black }).collect();
        Self::validate(&RawBubble { d, whites: vec![white], blacks: vec![black], edges })
    }

    /// The quartic bubble `Q_C` with ids `a=0, ā=1, b=2, b̄=3`.
    pub fn quartic(d: usize, colors: &[usize]) -> Result<Bubble, BubbleError> {
        let c = ColorSet::new(d, colors)?;
        Self::quartic_with_ids(d, c, [VertexId(0), VertexId(1), VertexId(2), VertexId(3)])
    }

    /// `Q_C` on explicit ids `[a, ā, b, b̄]`: `a–ā` and `b–b̄` are joined by
    /// `Ĉ`, `a–b̄` and `b–ā` by `C`.
    pub fn quartic_with_ids(d: usize, colors: ColorSet, ids: [VertexId; 4]) -> Result<Bubble, BubbleError> {
        let c = colors.normalized(d)?;
        let [a, abar, b, bbar] = ids;
        let mut edges = Vec::with_capacity(2 * d);
        for col in 1..=d {
            if c.contains(col) {
                edges.push(RawEdge { c: col, w: a, b: bbar });
                edges.push(RawEdge { c: col, w: b, b: abar });
            } else {
                edges.push(RawEdge { c: col, w: a, b: abar });
                edges.push(RawEdge { c: col, w: b, b: bbar });
            }
        }
        Self::validate(&RawBubble { d, whites: vec![a, b], blacks: vec![abar, bbar], edges })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.adj.keys().copied()
    }

    pub fn whites(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.side.iter().filter(|(_, s)| **s == Side::White).map(|(v, _)| *v)
    }

    pub fn blacks(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.side.iter().filter(|(_, s)| **s == Side::Black).map(|(v, _)| *v)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn side(&self, v: VertexId) -> Option<Side> {
        self.side.get(&v).copied()
    }

    /// Neighbor of `v` along color `c`. Panics on unknown `v` or `c`.
    pub fn neighbor(&self, v: VertexId, c: usize) -> VertexId {
        self.adj[&v][c - 1]
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[&v]
    }

    /// The colors of the edges joining `u` and `v` (possibly empty).
    pub fn colors_between(&self, u: VertexId, v: VertexId) -> ColorSet {
        let mut s = ColorSet::empty();
        for (i, &x) in self.adj[&u].iter().enumerate() {
            if x == v {
                s.insert(i + 1);
            }
        }
        s
    }

    pub fn max_id(&self) -> VertexId {
        *self.adj.keys().next_back().expect("bubbles are non-empty")
    }

    /// Replaces `at` by a C-bidipole, choosing fresh ids for the new vertices.
    pub fn insert_bidipole(&self, at: VertexId, colors: ColorSet) -> Result<(Bubble, Bidipole), BubbleError> {
        let next = self.max_id().0 + 1;
        let (v, vbar) = (VertexId(next), VertexId(next + 1));
        let b = self.insert_bidipole_with_ids(at, colors, v, vbar)?;
        let colors = colors.normalized(self.d)?;
        Ok((b, Bidipole { v, vbar, w: at, colors }))
    }

    /// Replaces `at` by three vertices: `at` itself (now `w`, keeping the
    /// `Ĉ`-edges), `v` (same side, taking the `C`-edges) and `vbar` (other
    /// side) joined to `w` by `C` and to `v` by `Ĉ`.
    pub fn insert_bidipole_with_ids(
        &self,
        at: VertexId,
        colors: ColorSet,
        v: VertexId,
        vbar: VertexId,
    ) -> Result<Bubble, BubbleError> {
        let c = colors.normalized(self.d)?;
        let s = self.side(at).ok_or(BubbleError::VertexNotFound(at))?;
        for id in [v, vbar] {
            if self.contains(id) {
                return Err(BubbleError::IdInUse(id));
            }
        }
        if v == vbar {
            return Err(BubbleError::IdInUse(v));
        }
        let mut out = self.clone();
        let old = self.adj[&at].clone();
        let mut row_w = vec![VertexId(0); self.d];
        let mut row_v = vec![VertexId(0); self.d];
        let mut row_vbar = vec![VertexId(0); self.d];
        for col in 1..=self.d {
            let n = old[col - 1];
            if c.contains(col) {
                row_v[col - 1] = n;
                out.adj.get_mut(&n).unwrap()[col - 1] = v;
                row_w[col - 1] = vbar;
                row_vbar[col - 1] = at;
            } else {
                row_w[col - 1] = n;
                row_v[col - 1] = vbar;
                row_vbar[col - 1] = v;
            }
        }
        out.adj.insert(at, row_w);
        out.adj.insert(v, row_v);
        out.adj.insert(vbar, row_vbar);
        out.side.insert(v, s);
        out.side.insert(vbar, s.opposite());
        Ok(out)
    }

    /// Inverse of the insertion: merges `v`, `vbar`, `w` into one vertex with id `w`.
    pub fn remove_bidipole(&self, bd: &Bidipole) -> Result<Bubble, BubbleError> {
        if !self.is_bidipole(bd) {
            return Err(BubbleError::NotABidipole(format!("{bd:?}")));
        }
        let c = bd.colors;
        let mut out = self.clone();
        let mut row = vec![VertexId(0); self.d];
        for col in 1..=self.d {
            let n = if c.contains(col) { self.adj[&bd.v][col - 1] } else { self.adj[&bd.w][col - 1] };
            row[col - 1] = n;
            out.adj.get_mut(&n).unwrap()[col - 1] = bd.w;
        }
        out.adj.remove(&bd.v);
        out.adj.remove(&bd.vbar);
        out.side.remove(&bd.v);
        out.side.remove(&bd.vbar);
        out.adj.insert(bd.w, row);
        Ok(out)
    }

    pub fn is_bidipole(&self, bd: &Bidipole) -> bool {
        let ids = [bd.v, bd.vbar, bd.w];
        if ids.iter().any(|v| !self.contains(*v)) || bd.v == bd.w {
            return false;
        }
        if !bd.colors.is_admissible(self.d) {
            return false;
        }
        self.colors_between(bd.vbar, bd.w) == bd.colors
            && self.colors_between(bd.vbar, bd.v) == bd.colors.complement(self.d)
    }

    /// Every bidipole, sorted by `(w, C, vbar)`.
    pub fn find_bidipoles(&self) -> Vec<Bidipole> {
        let mut out = Vec::new();
        for (&center, row) in &self.adj {
            let first = row[0];
            let mut s1 = ColorSet::empty();
            let mut other = None;
            let mut ok = true;
            for (i, &n) in row.iter().enumerate() {
                if n == first {
                    s1.insert(i + 1);
                } else if other.is_none() || other == Some(n) {
                    other = Some(n);
                } else {
                    ok = false;
                    break;
                }
            }
            let Some(second) = other else { continue };
            if !ok {
                continue;
            }
            let c = s1.normalized(self.d).expect("proper subset");
            let (w, v) = if c == s1 { (first, second) } else { (second, first) };
            out.push(Bidipole { v, vbar: center, w, colors: c });
        }
        out.sort_by_key(|a| (a.w, a.colors, a.vbar));
        out
    }

    /// Color- and side-preserving isomorphism test.
    pub fn is_isomorphic(&self, other: &Bubble) -> Result<bool, BubbleError> {
        let n = self.vertex_count().max(other.vertex_count());
        if n > ISO_SIZE_LIMIT {
            return Err(BubbleError::SizeLimitExceeded { limit: ISO_SIZE_LIMIT, got: n });
        }
        Ok(self.isomorphism(other).is_some())
    }

    /// An explicit isomorphism `self → other`, if one exists.
    pub fn isomorphism(&self, other: &Bubble) -> Option<BTreeMap<VertexId, VertexId>> {
        if self.d != other.d || self.vertex_count() != other.vertex_count() {
            return None;
        }
        let root = self.whites().next()?;
        // A connected, properly colored graph: the image of one vertex fixes the rest.
        'cand: for target in other.whites() {
            let mut map = BTreeMap::from([(root, target)]);
            let mut used = BTreeSet::from([target]);
            let mut queue = VecDeque::from([root]);
            while let Some(x) = queue.pop_front() {
                let y = map[&x];
                for c in 1..=self.d {
                    let (xn, yn) = (self.neighbor(x, c), other.neighbor(y, c));
                    match map.get(&xn) {
                        Some(&m) if m != yn => continue 'cand,
                        Some(_) => {}
                        None => {
                            if !used.insert(yn) {
                                continue 'cand;
                            }
                            map.insert(xn, yn);
                            queue.push_back(xn);
                        }
                    }
                }
            }
            if map.len() == self.vertex_count() {
                return Some(map);
            }
        }
        None
    }

    /// Same bubble with vertex ids renamed through `f`.
    pub fn relabeled(&self, f: impl Fn(VertexId) -> VertexId) -> Bubble {
        Bubble {
            d: self.d,
            side: self.side.iter().map(|(v, s)| (f(*v), *s)).collect(),
            adj: self.adj.iter().map(|(v, row)| (f(*v), row.iter().map(|u| f(*u)).collect())).collect(),
        }
    }
}

impl Serialize for Bubble {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_raw().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Bubble {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let raw = RawBubble::deserialize(de)?;
        Bubble::validate(&raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cs(d: usize, c: &[usize]) -> ColorSet {
        ColorSet::new(d, c).unwrap()
    }

    #[test]
    fn validate_small_cases() {
        let b = Bubble::two_vertex(3).unwrap();
        assert_eq!(b.vertex_count(), 2);
        assert_eq!(Bubble::quartic(3, &[1]).unwrap().vertex_count(), 4);

        let mut raw = b.to_raw();
        raw.edges.retain(|e| e.c != 3);
        assert_eq!(Bubble::validate(&raw), Err(BubbleError::NotRegular { vertex: VertexId(0), color: 3 }));
    }

    #[test]
    fn validate_names_violations() {
        let raw = RawBubble {
            d: 3,
            whites: vec![VertexId(0)],
            blacks: vec![VertexId(1)],
            edges: vec![
                RawEdge { c: 1, w: VertexId(0), b: VertexId(1) },
                RawEdge { c: 1, w: VertexId(0), b: VertexId(1) },
            ],
        };
        assert!(matches!(Bubble::validate(&raw), Err(BubbleError::NotProperlyColored { color: 1, .. })));

        let raw = RawBubble {
            d: 3,
            whites: vec![VertexId(0), VertexId(2)],
            blacks: vec![VertexId(1)],
            edges: vec![RawEdge { c: 1, w: VertexId(1), b: VertexId(0) }],
        };
        assert!(matches!(Bubble::validate(&raw), Err(BubbleError::NotBipartite { edge: 0, .. })));

        // two disjoint 2-vertex bubbles
        let mut edges = Vec::new();
        for c in 1..=3 {
            edges.push(RawEdge { c, w: VertexId(0), b: VertexId(1) });
            edges.push(RawEdge { c, w: VertexId(2), b: VertexId(3) });
        }
        let raw =
            RawBubble { d: 3, whites: vec![VertexId(0), VertexId(2)], blacks: vec![VertexId(1), VertexId(3)], edges };
        assert_eq!(Bubble::validate(&raw), Err(BubbleError::NotConnected { vertex: VertexId(2), root: VertexId(0) }));
    }

    #[test]
    fn validate_is_idempotent() {
        let q = Bubble::quartic(4, &[1, 3]).unwrap();
        assert_eq!(Bubble::validate(&q.to_raw()).unwrap(), q);
    }

    #[test]
    fn quartic_normalizes_and_rejects() {
        let q = Bubble::quartic(4, &[3, 4]).unwrap();
        assert_eq!(q.colors_between(VertexId(0), VertexId(3)), cs(4, &[1, 2]));
        assert_eq!(q, Bubble::quartic(4, &[1, 2]).unwrap());
        assert!(matches!(
            Bubble::quartic(3, &[1, 2, 3]),
            Err(BubbleError::Color(ColorSetError::EmptyOrFullColorSet { .. }))
        ));
        let q = Bubble::quartic(3, &[1]).unwrap();
        assert_eq!(q.colors_between(VertexId(0), VertexId(1)).to_vec(), vec![2, 3]);
    }

    #[test]
    fn insertion_into_two_vertex_gives_quartic() {
        let two = Bubble::two_vertex(3).unwrap();
        for at in [VertexId(0), VertexId(1)] {
            for c in 1..=3 {
                let (b, bd) = two.insert_bidipole(at, ColorSet::single(c)).unwrap();
                assert_eq!(b.vertex_count(), 4);
                assert!(b.is_bidipole(&bd));
                let q = Bubble::quartic(3, &[c]).unwrap();
                assert!(b.is_isomorphic(&q).unwrap());
            }
        }
        assert_eq!(
            two.insert_bidipole(VertexId(9), ColorSet::single(1)).unwrap_err(),
            BubbleError::VertexNotFound(VertexId(9))
        );
    }

    #[test]
    fn insert_then_remove_restores() {
        let q = Bubble::quartic(4, &[1, 2]).unwrap();
        for at in q.vertices().collect::<Vec<_>>() {
            for c in ColorSet::all_admissible(4) {
                let (b, bd) = q.insert_bidipole(at, c).unwrap();
                assert_eq!(b.remove_bidipole(&bd).unwrap(), q);
            }
        }
    }

    #[test]
    fn bidipoles_of_quartic_and_two_vertex() {
        assert!(Bubble::two_vertex(3).unwrap().find_bidipoles().is_empty());
        let q = Bubble::quartic(3, &[1]).unwrap();
        let bds = q.find_bidipoles();
        assert_eq!(bds.len(), 4);
        let ws: BTreeSet<_> = bds.iter().map(|b| b.w).collect();
        assert_eq!(ws.len(), 4);
    }

    #[test]
    fn nested_insertions_expose_inner_dipole() {
        let q = Bubble::quartic(3, &[1]).unwrap();
        let (b, bd) = q.insert_bidipole(VertexId(2), ColorSet::single(2)).unwrap();
        assert!(b.find_bidipoles().contains(&bd));
    }

    #[test]
    fn isomorphism_cases() {
        let q1 = Bubble::quartic(3, &[1]).unwrap();
        let q23 = Bubble::quartic(3, &[2, 3]).unwrap();
        let q2 = Bubble::quartic(3, &[2]).unwrap();
        assert!(q1.is_isomorphic(&q1).unwrap());
        assert!(q1.is_isomorphic(&q23).unwrap());
        assert!(!q1.is_isomorphic(&q2).unwrap());
        let shifted = q1.relabeled(|v| VertexId(v.0 + 10));
        assert!(q1.is_isomorphic(&shifted).unwrap());
    }

    #[test]
    fn json_roundtrip() {
        let q = Bubble::quartic(4, &[1, 3]).unwrap();
        let s = serde_json::to_string(&q).unwrap();
        let back: Bubble = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }
}
