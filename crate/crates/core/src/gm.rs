//! Recognition of generalized melonic (GM) bubbles.
//!
//! A bubble is GM when repeated bidipole removals reduce it to the 2-vertex
//! bubble. The certificate records the removals in replay (insertion) order,
//! the multiset of color sets and the canonical pairing.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bubble::{Bidipole, Bubble, BubbleError, Side, VertexId};
use crate::color::ColorSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateError {
    #[error("certificate does not replay: {0}")]
    Replay(#[from] BubbleError),
    #[error("replayed bubble differs from the given one")]
    Mismatch,
}

/// One insertion: vertex `at` is replaced by a bidipole whose `w` keeps the id `at`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsertionStep {
    pub at: VertexId,
    #[serde(rename = "C")]
    pub colors: ColorSet,
    pub v: VertexId,
    pub vbar: VertexId,
}

/// A fixed-point-free white↔black involution, stored as sorted (white, black) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pairing(Vec<(VertexId, VertexId)>);

impl Pairing {
    pub fn new(mut pairs: Vec<(VertexId, VertexId)>) -> Pairing {
        pairs.sort();
        Pairing(pairs)
    }

    pub fn pairs(&self) -> &[(VertexId, VertexId)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn partner(&self, v: VertexId) -> Option<VertexId> {
        self.0.iter().find_map(|&(w, b)| {
            if w == v {
                Some(b)
            } else if b == v {
                Some(w)
            } else {
                None
            }
        })
    }

    /// True if this is a perfect white→black matching of `b`'s vertices.
    pub fn is_perfect_for(&self, b: &Bubble) -> bool {
        let mut seen = BTreeSet::new();
        for &(w, k) in &self.0 {
            if b.side(w) != Some(Side::White) || b.side(k) != Some(Side::Black) {
                return false;
            }
            if !seen.insert(w) || !seen.insert(k) {
                return false;
            }
        }
        seen.len() == b.vertex_count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GmCertificate {
    pub d: usize,
    pub vertex_count: usize,
    /// The 2-vertex bubble the replay starts from, as (white, black).
    pub seed: (VertexId, VertexId),
    pub sequence: Vec<InsertionStep>,
    /// `b_C`, with the first insertion (the initial quartic) counted once.
    #[serde(with = "multiset_serde")]
    pub multiset: BTreeMap<ColorSet, usize>,
    pub pairing: Pairing,
}

mod multiset_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        #[serde(rename = "C")]
        colors: ColorSet,
        count: usize,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<ColorSet, usize>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter().map(|(c, n)| Entry { colors: *c, count: *n }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<BTreeMap<ColorSet, usize>, D::Error> {
        let v = Vec::<Entry>::deserialize(de)?;
        Ok(v.into_iter().map(|e| (e.colors, e.count)).collect())
    }
}

impl GmCertificate {
    /// `removals` in removal order, each with the side of its `v`.
    fn from_removals(d: usize, vertex_count: usize, seed: &Bubble, removals: &[(Bidipole, Side)]) -> GmCertificate {
        let white = seed.whites().next().expect("seed has a white vertex");
        let black = seed.blacks().next().expect("seed has a black vertex");
        let sequence: Vec<InsertionStep> = removals
            .iter()
            .rev()
            .map(|(bd, _)| InsertionStep { at: bd.w, colors: bd.colors, v: bd.v, vbar: bd.vbar })
            .collect();
        let mut multiset = BTreeMap::new();
        for s in &sequence {
            *multiset.entry(s.colors).or_insert(0) += 1;
        }
        let mut pairs = vec![(white, black)];
        pairs.extend(removals.iter().map(|(bd, side)| oriented(*side, bd.v, bd.vbar)));
        GmCertificate { d, vertex_count, seed: (white, black), sequence, multiset, pairing: Pairing::new(pairs) }
    }

    /// Rebuilds the bubble from the seed.
    pub fn replay(&self) -> Result<Bubble, BubbleError> {
        let mut b = Bubble::two_vertex_with_ids(self.d, self.seed.0, self.seed.1)?;
        for s in &self.sequence {
            b = b.insert_bidipole_with_ids(s.at, s.colors, s.v, s.vbar)?;
        }
        Ok(b)
    }

    pub fn verify(&self, b: &Bubble) -> Result<(), CertificateError> {
        if &self.replay()? == b {
            Ok(())
        } else {
            Err(CertificateError::Mismatch)
        }
    }

    /// The multiset as a flat sorted list of color sets.
    pub fn color_sets(&self) -> Vec<ColorSet> {
        self.multiset.iter().flat_map(|(c, n)| std::iter::repeat_n(*c, *n)).collect()
    }

    pub fn canonical_pairing(&self) -> &Pairing {
        &self.pairing
    }

    /// Every insertion set satisfies `|C| < d/2`.
    pub fn is_totally_unbalanced(&self) -> bool {
        self.multiset.keys().all(|c| c.is_unbalanced(self.d))
    }

    pub fn scaling_coefficient(&self) -> Rational64 {
        scaling_coefficient(&self.multiset, self.d, self.vertex_count)
    }
}

fn oriented(side_of_v: Side, v: VertexId, vbar: VertexId) -> (VertexId, VertexId) {
    match side_of_v {
        Side::White => (v, vbar),
        Side::Black => (vbar, v),
    }
}

/// `s = Σ_C |C| b_C − d(V−2)/2`.
pub fn scaling_coefficient(multiset: &BTreeMap<ColorSet, usize>, d: usize, vertex_count: usize) -> Rational64 {
    let sum: i64 = multiset.iter().map(|(c, n)| (c.len() * n) as i64).sum();
    Rational64::from_integer(sum) - Rational64::new((d * (vertex_count - 2)) as i64, 2)
}

/// Greedy recognition, always removing the first bidipole found.
pub fn recognize_gm(b: &Bubble) -> Option<GmCertificate> {
    recognize_gm_with(b, |_| 0)
}

/// Recognition where `choose` picks which of the available bidipoles to remove.
pub fn recognize_gm_with(b: &Bubble, mut choose: impl FnMut(&[Bidipole]) -> usize) -> Option<GmCertificate> {
    let mut cur = b.clone();
    let mut removals = Vec::new();
    while cur.vertex_count() > 2 {
        let bds = cur.find_bidipoles();
        if bds.is_empty() {
            return None;
        }
        let bd = bds[choose(&bds).min(bds.len() - 1)];
        let side = cur.side(bd.v).expect("bidipole vertex");
        cur = cur.remove_bidipole(&bd).expect("found bidipoles are removable");
        removals.push((bd, side));
    }
    Some(GmCertificate::from_removals(b.d(), b.vertex_count(), &cur, &removals))
}

/// Outcome of exploring every removal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExhaustiveRecognition {
    /// Some order got stuck before reaching 2 vertices.
    pub some_order_stuck: bool,
    /// Some order reached the 2-vertex bubble.
    pub some_order_succeeded: bool,
    pub multisets: BTreeSet<Vec<ColorSet>>,
    pub pairings: BTreeSet<Pairing>,
}

impl ExhaustiveRecognition {
    pub fn is_gm(&self) -> bool {
        self.some_order_succeeded
    }

    /// All successful orders agree and none got stuck.
    pub fn is_confluent(&self) -> bool {
        !self.some_order_stuck && self.multisets.len() <= 1 && self.pairings.len() <= 1
    }
}

/// Backtracking over all removal orders; exponential, meant for small bubbles.
pub fn recognize_exhaustive(b: &Bubble) -> ExhaustiveRecognition {
    let mut out = ExhaustiveRecognition {
        some_order_stuck: false,
        some_order_succeeded: false,
        multisets: BTreeSet::new(),
        pairings: BTreeSet::new(),
    };
    let mut stack = Vec::new();
    let mut pairs = Vec::new();
    explore(b, &mut stack, &mut pairs, &mut out);
    out
}

fn explore(
    cur: &Bubble,
    sets: &mut Vec<ColorSet>,
    pairs: &mut Vec<(VertexId, VertexId)>,
    out: &mut ExhaustiveRecognition,
) {
    if cur.vertex_count() == 2 {
        out.some_order_succeeded = true;
        let mut m = sets.clone();
        m.sort();
        out.multisets.insert(m);
        let mut p = pairs.clone();
        p.push((cur.whites().next().unwrap(), cur.blacks().next().unwrap()));
        out.pairings.insert(Pairing::new(p));
        return;
    }
    let bds = cur.find_bidipoles();
    if bds.is_empty() {
        out.some_order_stuck = true;
        return;
    }
    for bd in bds {
        let next = cur.remove_bidipole(&bd).unwrap();
        sets.push(bd.colors);
        pairs.push(oriented(cur.side(bd.v).unwrap(), bd.v, bd.vbar));
        explore(&next, sets, pairs, out);
        sets.pop();
        pairs.pop();
    }
}

/// Vertex pairs joined by more than `d/2` colors, or by exactly `d/2` colors
/// not including color 1. For GM bubbles each such pair belongs to the
/// canonical pairing.
pub fn strongly_joined_pairs(b: &Bubble) -> Vec<(VertexId, VertexId)> {
    let d = b.d();
    let mut out = Vec::new();
    for w in b.whites() {
        let mut seen = BTreeSet::new();
        for &k in b.neighbors(w) {
            if !seen.insert(k) {
                continue;
            }
            let s = b.colors_between(w, k);
            if 2 * s.len() > d || (2 * s.len() == d && !s.contains(1)) {
                out.push((w, k));
            }
        }
    }
    out
}
