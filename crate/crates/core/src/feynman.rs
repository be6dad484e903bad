//! Feynman graphs: copies of bubbles joined by a color-0 perfect matching.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bubble::{Bubble, VertexId};
use crate::gluing::{GluingError, GluingGraph};
use crate::gm::{GmCertificate, Pairing};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeynmanError {
    #[error("no bubbles given")]
    Empty,
    #[error("bubbles of different dimensions ({0} and {1})")]
    DimensionMismatch(usize, usize),
    #[error("matching is not a perfect white-to-black matching: {0}")]
    BadMatching(String),
    #[error("no scaling coefficient for interaction {0}")]
    MissingScaling(usize),
    #[error("{whites} white vertices exceed the enumeration cap {cap}")]
    CapExceeded { whites: usize, cap: usize },
    #[error("copy index {0} out of range")]
    NoSuchCopy(usize),
    #[error("certificate does not match the bubble")]
    CertificateMismatch,
    #[error(transparent)]
    Gluing(#[from] GluingError),
}

/// A bubble placed in a graph, tagged with its interaction id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BubbleCopy {
    pub interaction: usize,
    pub bubble: Arc<Bubble>,
}

/// A vertex of an ensemble: (copy index, vertex id within the copy).
pub type Slot = (usize, VertexId);

/// The bubbles of a graph with flattened white/black indices. Shared by
/// every matching enumerated over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ensemble {
    d: usize,
    copies: Vec<BubbleCopy>,
    whites: Vec<Slot>,
    blacks: Vec<Slot>,
    white_index: HashMap<Slot, u32>,
    black_index: HashMap<Slot, u32>,
    /// `wb[c-1][white] = black` along color `c`.
    wb: Vec<Vec<u32>>,
    /// `bw[c-1][black] = white` along color `c`.
    bw: Vec<Vec<u32>>,
    white_copy: Vec<u32>,
    black_copy: Vec<u32>,
}

impl Ensemble {
    pub fn new(copies: Vec<BubbleCopy>) -> Result<Ensemble, FeynmanError> {
        let d = copies.first().ok_or(FeynmanError::Empty)?.bubble.d();
        if let Some(c) = copies.iter().find(|c| c.bubble.d() != d) {
            return Err(FeynmanError::DimensionMismatch(d, c.bubble.d()));
        }
        let mut whites = Vec::new();
        let mut blacks = Vec::new();
        for (i, c) in copies.iter().enumerate() {
            whites.extend(c.bubble.whites().map(|v| (i, v)));
            blacks.extend(c.bubble.blacks().map(|v| (i, v)));
        }
        let white_index: HashMap<Slot, u32> = whites.iter().enumerate().map(|(k, s)| (*s, k as u32)).collect();
        let black_index: HashMap<Slot, u32> = blacks.iter().enumerate().map(|(k, s)| (*s, k as u32)).collect();
        let mut wb = vec![vec![0u32; whites.len()]; d];
        let mut bw = vec![vec![0u32; blacks.len()]; d];
        for (k, &(i, v)) in whites.iter().enumerate() {
            for c in 1..=d {
                let b = black_index[&(i, copies[i].bubble.neighbor(v, c))];
                wb[c - 1][k] = b;
                bw[c - 1][b as usize] = k as u32;
            }
        }
        let white_copy = whites.iter().map(|s| s.0 as u32).collect();
        let black_copy = blacks.iter().map(|s| s.0 as u32).collect();
        Ok(Ensemble { d, copies, whites, blacks, white_index, black_index, wb, bw, white_copy, black_copy })
    }

    /// `count` copies of each bubble; interaction id = position in `bubbles`.
    pub fn from_counts(bubbles: &[(Bubble, usize)]) -> Result<Ensemble, FeynmanError> {
        let mut copies = Vec::new();
        for (r, (b, n)) in bubbles.iter().enumerate() {
            let shared = Arc::new(b.clone());
            copies.extend((0..*n).map(|_| BubbleCopy { interaction: r, bubble: shared.clone() }));
        }
        Self::new(copies)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn copies(&self) -> &[BubbleCopy] {
        &self.copies
    }

    pub fn white_count(&self) -> usize {
        self.whites.len()
    }

    pub fn white(&self, k: usize) -> Slot {
        self.whites[k]
    }

    pub fn black(&self, k: usize) -> Slot {
        self.blacks[k]
    }

    pub fn white_index(&self, s: Slot) -> Option<usize> {
        self.white_index.get(&s).map(|&k| k as usize)
    }

    pub fn black_index(&self, s: Slot) -> Option<usize> {
        self.black_index.get(&s).map(|&k| k as usize)
    }

    /// Black neighbor of white `w` along color `c` (flattened indices).
    pub fn color_neighbor_of_white(&self, w: usize, c: usize) -> usize {
        self.wb[c - 1][w] as usize
    }

    pub fn color_neighbor_of_black(&self, b: usize, c: usize) -> usize {
        self.bw[c - 1][b] as usize
    }

    /// `b_r` for every interaction present.
    pub fn coupling_word(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for c in &self.copies {
            *m.entry(c.interaction).or_insert(0) += 1;
        }
        m
    }
}

/// Large-N amplitude: `N^δ` times the coupling word `Π_r t_r^{b_r}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Amplitude {
    #[serde(with = "crate::rational::r64")]
    pub n_exponent: Rational64,
    pub coupling_word: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeynmanGraph {
    ens: Arc<Ensemble>,
    /// white index → black index
    matching: Vec<u32>,
}

impl FeynmanGraph {
    pub fn new(ens: Arc<Ensemble>, matching: Vec<u32>) -> Result<Self, FeynmanError> {
        let n = ens.white_count();
        if matching.len() != n {
            return Err(FeynmanError::BadMatching(format!("{} entries for {} whites", matching.len(), n)));
        }
        let mut hit = vec![false; n];
        for &b in &matching {
            let b = b as usize;
            if b >= n || std::mem::replace(&mut hit[b], true) {
                return Err(FeynmanError::BadMatching(format!("black {b} used twice or out of range")));
            }
        }
        Ok(FeynmanGraph { ens, matching })
    }

    /// From explicit (white slot, black slot) pairs.
    pub fn from_pairs(ens: Arc<Ensemble>, pairs: &[(Slot, Slot)]) -> Result<Self, FeynmanError> {
        let n = ens.white_count();
        let mut m = vec![u32::MAX; n];
        for &(w, b) in pairs {
            let wi = ens.white_index(w).ok_or_else(|| FeynmanError::BadMatching(format!("{w:?} is not white")))?;
            let bi = ens.black_index(b).ok_or_else(|| FeynmanError::BadMatching(format!("{b:?} is not black")))?;
            if m[wi] != u32::MAX {
                return Err(FeynmanError::BadMatching(format!("{w:?} matched twice")));
            }
            m[wi] = bi as u32;
        }
        Self::new(ens, m)
    }

    /// A single bubble whose vertices are matched by `pairing`.
    pub fn single(b: &Bubble, pairing: &Pairing) -> Result<Self, FeynmanError> {
        let ens = Arc::new(Ensemble::from_counts(&[(b.clone(), 1)])?);
        let pairs: Vec<_> = pairing.pairs().iter().map(|&(w, k)| ((0, w), (0, k))).collect();
        Self::from_pairs(ens, &pairs)
    }

    pub fn ensemble(&self) -> &Arc<Ensemble> {
        &self.ens
    }

    pub fn d(&self) -> usize {
        self.ens.d
    }

    pub fn matching(&self) -> &[u32] {
        &self.matching
    }

    pub fn pairs(&self) -> Vec<(Slot, Slot)> {
        self.matching.iter().enumerate().map(|(w, &b)| (self.ens.whites[w], self.ens.blacks[b as usize])).collect()
    }

    fn inverse(&self) -> Vec<u32> {
        let mut inv = vec![0u32; self.matching.len()];
        for (w, &b) in self.matching.iter().enumerate() {
            inv[b as usize] = w as u32;
        }
        inv
    }

    /// Number of cycles alternating colors 0 and `c`.
    pub fn bicolored_cycles(&self, c: usize) -> usize {
        let mut seen = vec![false; self.matching.len()];
        self.cycles_with(c, &mut seen)
    }

    fn cycles_with(&self, c: usize, seen: &mut [bool]) -> usize {
        seen.fill(false);
        let bw = &self.ens.bw[c - 1];
        let mut count = 0;
        for start in 0..self.matching.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut w = start;
            while !seen[w] {
                seen[w] = true;
                w = bw[self.matching[w] as usize] as usize;
            }
        }
        count
    }

    /// `L_{0c}` for `c = 1..=d`.
    pub fn cycle_counts(&self) -> Vec<usize> {
        let mut seen = vec![false; self.matching.len()];
        (1..=self.ens.d).map(|c| self.cycles_with(c, &mut seen)).collect()
    }

    pub fn total_cycles(&self) -> usize {
        self.cycle_counts().iter().sum()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.ens.copies.len();
        let mut uf = crate::gluing::UnionFind::new(n);
        let mut parts = n;
        for (w, &b) in self.matching.iter().enumerate() {
            if uf.union(self.ens.white_copy[w] as usize, self.ens.black_copy[b as usize] as usize) {
                parts -= 1;
            }
        }
        parts == 1
    }

    pub fn coupling_word(&self) -> BTreeMap<usize, usize> {
        self.ens.coupling_word()
    }

    /// `δ = Σ_c L_{0c} + Σ_r s_r b_r`.
    pub fn delta(&self, scalings: &BTreeMap<usize, Rational64>) -> Result<Amplitude, FeynmanError> {
        let word = self.coupling_word();
        let mut n = Rational64::from_integer(self.total_cycles() as i64);
        for (&r, &b) in &word {
            let s = scalings.get(&r).ok_or(FeynmanError::MissingScaling(r))?;
            n += s * Rational64::from_integer(b as i64);
        }
        Ok(Amplitude { n_exponent: n, coupling_word: word })
    }

    /// Rematches so that `w` and `b` (flattened indices) are joined, pairing
    /// their former partners with each other.
    pub fn flipped(&self, w: usize, b: usize) -> FeynmanGraph {
        let mut m = self.matching.clone();
        let inv = self.inverse();
        let w2 = inv[b] as usize;
        let b2 = m[w];
        m[w] = b as u32;
        m[w2] = b2;
        FeynmanGraph { ens: self.ens.clone(), matching: m }
    }

    /// Does removing the color-0 edges at whites `w1`, `w2` disconnect the graph?
    pub fn is_zero_edge_cut(&self, w1: usize, w2: usize) -> bool {
        let n = self.matching.len();
        // vertices: whites 0..n, blacks n..2n
        let mut seen = vec![false; 2 * n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        let mut visit = |x: usize, queue: &mut VecDeque<usize>, seen: &mut Vec<bool>| {
            if !seen[x] {
                seen[x] = true;
                reached += 1;
                queue.push_back(x);
            }
        };
        let inv = self.inverse();
        while let Some(x) = queue.pop_front() {
            if x < n {
                for c in 0..self.ens.d {
                    visit(n + self.ens.wb[c][x] as usize, &mut queue, &mut seen);
                }
                if x != w1 && x != w2 {
                    visit(n + self.matching[x] as usize, &mut queue, &mut seen);
                }
            } else {
                let b = x - n;
                for c in 0..self.ens.d {
                    visit(self.ens.bw[c][b] as usize, &mut queue, &mut seen);
                }
                let w = inv[b] as usize;
                if w != w1 && w != w2 {
                    visit(w, &mut queue, &mut seen);
                }
            }
        }
        reached < 2 * n
    }

    pub fn to_json(&self) -> FeynmanGraphJson {
        FeynmanGraphJson { d: self.ens.d, bubbles: self.ens.copies.clone(), matching: self.pairs() }
    }

    pub fn from_json(j: &FeynmanGraphJson) -> Result<Self, FeynmanError> {
        let ens = Arc::new(Ensemble::new(j.bubbles.clone())?);
        if ens.d != j.d {
            return Err(FeynmanError::DimensionMismatch(j.d, ens.d));
        }
        Self::from_pairs(ens, &j.matching)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeynmanGraphJson {
    pub d: usize,
    pub bubbles: Vec<BubbleCopy>,
    /// ((copy, white id), (copy, black id))
    pub matching: Vec<(Slot, Slot)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerateOptions {
    pub connected_only: bool,
    /// Maximal number of white vertices.
    pub cap: usize,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions { connected_only: true, cap: 10 }
    }
}

/// Hard ceiling on enumeration size regardless of options.
pub const ABSOLUTE_CAP: usize = 16;

fn check_cap(ens: &Ensemble, opts: &EnumerateOptions) -> Result<(), FeynmanError> {
    let cap = opts.cap.min(ABSOLUTE_CAP);
    if ens.white_count() > cap {
        return Err(FeynmanError::CapExceeded { whites: ens.white_count(), cap });
    }
    Ok(())
}

/// Every matching in lexicographic order of the white targets.
pub fn enumerate(ens: Arc<Ensemble>, opts: EnumerateOptions) -> Result<Matchings, FeynmanError> {
    check_cap(&ens, &opts)?;
    let n = ens.white_count();
    Ok(Matchings {
        graph: FeynmanGraph { ens, matching: (0..n as u32).collect() },
        started: false,
        done: false,
        fixed: 0,
        connected_only: opts.connected_only,
    })
}

/// Lexicographic stream of matchings; the first `fixed` entries never move.
pub struct Matchings {
    graph: FeynmanGraph,
    started: bool,
    done: bool,
    fixed: usize,
    connected_only: bool,
}

impl Matchings {
    /// Matchings whose first white is sent to black `first`.
    fn with_first(ens: Arc<Ensemble>, first: usize, connected_only: bool) -> Matchings {
        let n = ens.white_count();
        let mut m: Vec<u32> = vec![first as u32];
        m.extend((0..n as u32).filter(|&b| b as usize != first));
        Matchings { graph: FeynmanGraph { ens, matching: m }, started: false, done: false, fixed: 1, connected_only }
    }

    /// Advances to the next matching and lends it out.
    pub fn advance(&mut self) -> Option<&FeynmanGraph> {
        loop {
            if self.done {
                return None;
            }
            if self.started {
                if !next_permutation(&mut self.graph.matching[self.fixed..]) {
                    self.done = true;
                    return None;
                }
            } else {
                self.started = true;
            }
            if !self.connected_only || self.graph.is_connected() {
                return Some(&self.graph);
            }
        }
    }
}

impl Iterator for Matchings {
    type Item = FeynmanGraph;
    fn next(&mut self) -> Option<FeynmanGraph> {
        self.advance().cloned()
    }
}

fn next_permutation(a: &mut [u32]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Parallel fold over all matchings; work is split by the first white's target.
pub fn par_fold<T, Id, F, R>(
    ens: &Arc<Ensemble>,
    opts: EnumerateOptions,
    identity: Id,
    fold: F,
    reduce: R,
) -> Result<T, FeynmanError>
where
    T: Send,
    Id: Fn() -> T + Sync + Send,
    F: Fn(T, &FeynmanGraph) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    check_cap(ens, &opts)?;
    let n = ens.white_count();
    Ok((0..n)
        .into_par_iter()
        .map(|first| {
            let mut it = Matchings::with_first(ens.clone(), first, opts.connected_only);
            let mut acc = identity();
            while let Some(g) = it.advance() {
                acc = fold(acc, g);
            }
            acc
        })
        .reduce(&identity, &reduce))
}

/// Graphs attaining the largest `δ` in `graphs`.
pub fn gmax_filter(
    graphs: impl IntoIterator<Item = FeynmanGraph>,
    scalings: &BTreeMap<usize, Rational64>,
) -> Result<Vec<FeynmanGraph>, FeynmanError> {
    let mut best: Option<Rational64> = None;
    let mut out = Vec::new();
    for g in graphs {
        let delta = g.delta(scalings)?.n_exponent;
        match best {
            Some(b) if delta < b => {}
            Some(b) if delta == b => out.push(g),
            _ => {
                best = Some(delta);
                out.clear();
                out.push(g);
            }
        }
    }
    Ok(out)
}

/// Maximal `δ` and the number of (connected, per `opts`) matchings reaching it.
pub fn gmax_count(
    ens: &Arc<Ensemble>,
    opts: EnumerateOptions,
    scalings: &BTreeMap<usize, Rational64>,
) -> Result<Option<(Rational64, u64)>, FeynmanError> {
    let word = ens.coupling_word();
    let mut offset = Rational64::from_integer(0);
    for (&r, &b) in &word {
        offset += scalings.get(&r).ok_or(FeynmanError::MissingScaling(r))? * Rational64::from_integer(b as i64);
    }
    let best = par_fold(
        ens,
        opts,
        || None::<(usize, u64)>,
        |acc, g| {
            let l = g.total_cycles();
            match acc {
                Some((b, n)) if l < b => Some((b, n)),
                Some((b, n)) if l == b => Some((b, n + 1)),
                _ => Some((l, 1)),
            }
        },
        |a, b| match (a, b) {
            (None, x) | (x, None) => x,
            (Some((la, na)), Some((lb, nb))) => Some(if la > lb {
                (la, na)
            } else if lb > la {
                (lb, nb)
            } else {
                (la, na + nb)
            }),
        },
    )?;
    Ok(best.map(|(l, n)| (Rational64::from_integer(l as i64) + offset, n)))
}

/// `count` copies of a GM bubble, each matched canonically, then chained by
/// swapping the 0-edge at copy 0's first white with copy k's first pair.
pub fn tree_family(b: &Bubble, cert: &GmCertificate, count: usize) -> Result<FeynmanGraph, FeynmanError> {
    cert.verify(b).map_err(|_| FeynmanError::CertificateMismatch)?;
    if count == 0 {
        return Err(FeynmanError::Empty);
    }
    let ens = Arc::new(Ensemble::from_counts(&[(b.clone(), count)])?);
    let mut pairs = Vec::new();
    for k in 0..count {
        pairs.extend(cert.pairing.pairs().iter().map(|&(w, bl)| ((k, w), (k, bl))));
    }
    let mut g = FeynmanGraph::from_pairs(ens.clone(), &pairs)?;
    let (x0, _) = cert.pairing.pairs()[0];
    let w0 = ens.white_index((0, x0)).unwrap();
    for k in 1..count {
        let wk = ens.white_index((k, x0)).unwrap();
        let bk = g.matching[wk];
        let b0 = g.matching[w0];
        g.matching[w0] = bk;
        g.matching[wk] = b0;
    }
    Ok(g)
}

/// A Feynman graph whose vertices are gluings of quartics; its color-0 edges
/// match free vertices across copies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluedGraph {
    pub d: usize,
    pub copies: Vec<(usize, Arc<GluingGraph>)>,
    /// ((copy, free white), (copy, free black))
    pub matching: Vec<(Slot, Slot)>,
}

impl GluedGraph {
    /// Quartic-level graph: every quartic is a copy, dashed lines become 0-edges.
    pub fn quartic_level(&self) -> Result<FeynmanGraph, FeynmanError> {
        let mut copies = Vec::new();
        let mut where_: HashMap<Slot, Slot> = HashMap::new();
        for (i, (r, g)) in self.copies.iter().enumerate() {
            for q in g.quartics() {
                let k = copies.len();
                let b = Bubble::quartic_with_ids(self.d, q.colors, q.vertices).map_err(GluingError::from)?;
                copies.push(BubbleCopy { interaction: *r, bubble: Arc::new(b) });
                for v in q.vertices {
                    where_.insert((i, v), (k, v));
                }
            }
        }
        let ens = Arc::new(Ensemble::new(copies)?);
        let mut pairs = Vec::new();
        for (i, (_, g)) in self.copies.iter().enumerate() {
            pairs.extend(g.dashed().iter().map(|&(w, b)| (where_[&(i, w)], where_[&(i, b)])));
        }
        for &(w, b) in &self.matching {
            let (Some(&w2), Some(&b2)) = (where_.get(&w), where_.get(&b)) else {
                return Err(FeynmanError::BadMatching(format!("{w:?}/{b:?} not in the graph")));
            };
            pairs.push((w2, b2));
        }
        FeynmanGraph::from_pairs(ens, &pairs)
    }

    /// The surjection: each gluing replaced by its boundary bubble.
    pub fn surject(&self) -> Result<FeynmanGraph, FeynmanError> {
        let mut copies = Vec::new();
        for (r, g) in &self.copies {
            copies.push(BubbleCopy { interaction: *r, bubble: Arc::new(g.boundary()?) });
        }
        FeynmanGraph::from_pairs(Arc::new(Ensemble::new(copies)?), &self.matching)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwoCutVerdict {
    Maximal2Cut,
    TwoCutOnly,
    Neither,
}

/// All perfect white→black matchings of a single bubble.
pub fn all_pairings(b: &Bubble) -> Vec<Pairing> {
    let whites: Vec<_> = b.whites().collect();
    let blacks: Vec<_> = b.blacks().collect();
    let mut perm: Vec<u32> = (0..blacks.len() as u32).collect();
    let mut out = Vec::new();
    loop {
        out.push(Pairing::new(whites.iter().zip(&perm).map(|(&w, &k)| (w, blacks[k as usize])).collect()));
        if !next_permutation(&mut perm) {
            break;
        }
    }
    out
}

/// Single-bubble pairings with the most bicolored cycles.
pub fn dominant_pairings(b: &Bubble) -> Result<Vec<Pairing>, FeynmanError> {
    let mut best = 0;
    let mut out = Vec::new();
    for p in all_pairings(b) {
        let l = FeynmanGraph::single(b, &p)?.total_cycles();
        if l > best {
            best = l;
            out.clear();
        }
        if l == best {
            out.push(p);
        }
    }
    Ok(out)
}

/// Looks for a pairing of the marked copy whose every pair is either a
/// 0-edge or has its two 0-edges forming a 2-edge-cut.
pub fn maximal_2cut_check(g: &FeynmanGraph, marked: usize) -> Result<TwoCutVerdict, FeynmanError> {
    let ens = g.ensemble();
    let b = &ens.copies.get(marked).ok_or(FeynmanError::NoSuchCopy(marked))?.bubble;
    let inv = g.inverse();
    let dominant = dominant_pairings(b)?;
    let mut verdict = TwoCutVerdict::Neither;
    for p in all_pairings(b) {
        let ok = p.pairs().iter().all(|&(w, k)| {
            let wi = ens.white_index((marked, w)).unwrap();
            let bi = ens.black_index((marked, k)).unwrap();
            g.matching[wi] as usize == bi || g.is_zero_edge_cut(wi, inv[bi] as usize)
        });
        if ok {
            if dominant.contains(&p) {
                return Ok(TwoCutVerdict::Maximal2Cut);
            }
            verdict = TwoCutVerdict::TwoCutOnly;
        }
    }
    Ok(verdict)
}
