//! Numeric and exact checks of the tree-indexed matrix model: the scalar
//! Hubbard–Stratonovich identity, the corner block determinant, the rescaling
//! exponents, the saddle point, and the word expansion of the log.

// `!(x <= tol)` is used on purpose so that NaN counts as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::ColorSet;
use crate::gm::scaling_coefficient;
use crate::plane_tree::{HalfEdgeId, PlaneTree};

pub const MAX_DET_EDGES: usize = 8;
pub const MAX_DET_N: usize = 6;
pub const MAX_LOG_ORDER: usize = 8;
const MAX_LOG_TERMS: f64 = 2.0e6;
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixModelError {
    #[error("quadrature tail {tail:e} is not negligible")]
    QuadratureDiverged { tail: f64 },
    #[error("random draw still singular after {redraws} redraws")]
    SingularDiagnostic { redraws: usize },
    #[error("no convergence for W: last {last}, residual {residual:e}")]
    NoConvergence { last: f64, residual: f64 },
    #[error("gradient norm {norm:e} above tolerance; worst half-edge {worst:?} with component {component:e}")]
    GradientTooLarge { norm: f64, worst: HalfEdgeId, component: f64 },
    #[error("log argument {arg} is not positive")]
    LogDomain { arg: f64 },
    #[error("coupling {0} out of range")]
    InvalidCoupling(f64),
    #[error("order {order} above cap {cap}")]
    OrderCap { order: usize, cap: usize },
    #[error("expansion would have about {estimate} terms")]
    TooManyTerms { estimate: f64 },
    #[error("tree with {edges} edges at n = {n} exceeds the size caps")]
    TooLarge { edges: usize, n: usize },
    #[error("signs must be ±1 on every half-edge with product −1")]
    BadEpsilons,
    #[error("edge color set {0:?} is not unbalanced")]
    NotTotallyUnbalanced(ColorSet),
    #[error("no value for half-edge {0:?}")]
    MissingHalfEdge(HalfEdgeId),
    #[error("rescaling constraint violated: {0}")]
    EtaConstraint(EtaViolation),
}

/// A plane tree with the sign decoration of the model and the scaling
/// exponent `s` of its boundary bubble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeModel {
    tree: PlaneTree,
    #[serde(rename = "V")]
    v: usize,
    #[serde(with = "crate::rational::r64")]
    s: Rational64,
    epsilons: BTreeMap<HalfEdgeId, i8>,
}

impl TreeModel {
    /// `ε = −1` on the smallest half-edge, `+1` elsewhere.
    pub fn new(tree: PlaneTree) -> Self {
        let first = tree.halfedges().next().expect("a tree has at least one edge");
        let eps = tree.halfedges().map(|h| (h, if h == first { -1 } else { 1 })).collect();
        Self::with_epsilons(tree, eps).expect("default signs are valid")
    }

    pub fn with_epsilons(tree: PlaneTree, epsilons: BTreeMap<HalfEdgeId, i8>) -> Result<Self, MatrixModelError> {
        let keys_match = epsilons.keys().copied().eq(tree.halfedges());
        let signs_ok = epsilons.values().all(|&e| e == 1 || e == -1);
        if !keys_match || !signs_ok || epsilons.values().map(|&e| e as i64).product::<i64>() != -1 {
            return Err(MatrixModelError::BadEpsilons);
        }
        let v = tree.bubble_vertex_count();
        let mut multiset = BTreeMap::new();
        for c in tree.color_sets() {
            *multiset.entry(c).or_insert(0) += 1;
        }
        let s = scaling_coefficient(&multiset, tree.d(), v);
        Ok(TreeModel { tree, v, s, epsilons })
    }

    pub fn tree(&self) -> &PlaneTree {
        &self.tree
    }

    pub fn d(&self) -> usize {
        self.tree.d()
    }

    pub fn vertex_count(&self) -> usize {
        self.v
    }

    pub fn s(&self) -> Rational64 {
        self.s
    }

    pub fn epsilon(&self, h: HalfEdgeId) -> f64 {
        self.epsilons[&h] as f64
    }

    pub fn edge_epsilon(&self, e: usize) -> f64 {
        let edge = &self.tree.edges()[e];
        self.epsilon(edge.h1) * self.epsilon(edge.h2)
    }

    /// Product of the signs around a tree vertex.
    pub fn vertex_epsilon(&self, v: usize) -> i8 {
        self.tree.vertices()[v].halfedges.iter().map(|h| self.epsilons[h]).product()
    }

    pub fn is_totally_unbalanced(&self) -> bool {
        self.tree.edges().iter().all(|e| e.colors.is_unbalanced(self.d()))
    }

    fn require_totally_unbalanced(&self) -> Result<(), MatrixModelError> {
        match self.tree.edges().iter().find(|e| !e.colors.is_unbalanced(self.d())) {
            Some(e) => Err(MatrixModelError::NotTotallyUnbalanced(e.colors)),
            None => Ok(()),
        }
    }
}

// ---------------------------------------------------------------------------
// scalar Hubbard–Stratonovich

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HsCheck {
    #[serde(with = "complex")]
    pub lhs: Complex64,
    #[serde(with = "complex")]
    pub rhs: Complex64,
    pub err: f64,
}

mod complex {
    use super::*;
    pub fn serialize<S: serde::Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }
}

const HS_RADIUS: f64 = 9.0;
const HS_RADIAL_NODES: usize = 96;
const HS_ANGULAR_NODES: usize = 128;

/// Gauss–Legendre nodes and weights on `[a, b]`.
fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w));
    }
    out
}

fn hs_quadrature(z1: Complex64, z2: Complex64) -> Complex64 {
    let radial = gauss_legendre(HS_RADIAL_NODES, 0.0, HS_RADIUS);
    let dtheta = 2.0 * std::f64::consts::PI / HS_ANGULAR_NODES as f64;
    let mut acc = Complex64::zero();
    for &(r, w) in &radial {
        let mut ring = Complex64::zero();
        for k in 0..HS_ANGULAR_NODES {
            let z = Complex64::from_polar(r, k as f64 * dtheta);
            ring += (-z * z1 + z.conj() * z2).exp();
        }
        acc += ring * (w * r * (-r * r).exp() * dtheta);
    }
    acc
}

/// `∫ dz dz̄ exp(−zz̄ − zZ₁ + z̄Z₂)` by quadrature on a disk, normalized so
/// that `Z₁ = Z₂ = 0` gives 1, against the closed form `exp(−Z₁Z₂)`.
pub fn hs_scalar_check(z1: Complex64, z2: Complex64) -> Result<HsCheck, MatrixModelError> {
    // integrand bound on the cut-off circle, times its length
    let r = HS_RADIUS;
    let tail = 2.0 * std::f64::consts::PI * r * (-r * r + r * (z1.norm() + z2.norm())).exp();
    if !(tail < 1e-12) {
        return Err(MatrixModelError::QuadratureDiverged { tail });
    }
    let lhs = hs_quadrature(z1, z2) / hs_quadrature(Complex64::zero(), Complex64::zero());
    let rhs = (-z1 * z2).exp();
    Ok(HsCheck { lhs, rhs, err: (lhs - rhs).norm() })
}

// ---------------------------------------------------------------------------
// block determinant

/// Block index of every corner: marked corners share index 0, unmarked
/// corners get `1, 2, …` in vertex order. `corner[v][k]` is the corner just
/// before `halfedges[k]`.
fn corner_indices(t: &PlaneTree) -> (Vec<Vec<usize>>, usize) {
    let mut next = 1;
    let idx = t
        .vertices()
        .iter()
        .map(|v| {
            (0..v.halfedges.len().max(1))
                .map(|k| {
                    if k == v.marked_corner {
                        0
                    } else {
                        next += 1;
                        next - 1
                    }
                })
                .collect()
        })
        .collect();
    (idx, next)
}

/// The corner-indexed block matrix: identity on unmarked diagonal blocks,
/// `Y_h` at (corner before `h`, corner after `h`) in counter-clockwise order,
/// and `Y_0` plus the leaf half-edges in the marked block.
pub fn block_matrix(t: &PlaneTree, y0: &DMatrix<f64>, ys: &BTreeMap<HalfEdgeId, DMatrix<f64>>) -> DMatrix<f64> {
    let n = y0.nrows();
    let (idx, blocks) = corner_indices(t);
    let mut p = DMatrix::zeros(n * blocks, n * blocks);
    p.view_mut((0, 0), (n, n)).copy_from(y0);
    for b in 1..blocks {
        p.view_mut((n * b, n * b), (n, n)).fill_with_identity();
    }
    for (v, tv) in t.vertices().iter().enumerate() {
        let k = tv.halfedges.len();
        for (i, h) in tv.halfedges.iter().enumerate() {
            let (before, after) = (idx[v][i], idx[v][(i + 1) % k]);
            let mut block = p.view_mut((n * before, n * after), (n, n));
            block += &ys[h];
        }
    }
    p
}

/// `Y_0 + Σ_v (−1)^{deg v − 1} Π_{h at v} Y_h`, the product running
/// counter-clockwise from the marked corner.
pub fn compact_matrix(t: &PlaneTree, y0: &DMatrix<f64>, ys: &BTreeMap<HalfEdgeId, DMatrix<f64>>) -> DMatrix<f64> {
    let mut m = y0.clone();
    for v in 0..t.vertices().len() {
        let hs = t.ordered_from_mark(v);
        let mut prod = DMatrix::identity(y0.nrows(), y0.nrows());
        for h in &hs {
            prod *= &ys[h];
        }
        if hs.len().is_multiple_of(2) {
            m -= prod;
        } else {
            m += prod;
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeterminantReport {
    pub n: usize,
    pub trials: usize,
    pub redraws: usize,
    pub max_rel_error: f64,
}

fn random_matrix<R: Rng>(rng: &mut R, n: usize, shift: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| rng.gen_range(-1.0..=1.0) + if i == j { shift } else { 0.0 })
}

fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares `det P_𝒯` with the compact determinant for random `n × n`
/// blocks. Trial `i` draws from stream `i` of a ChaCha generator seeded with
/// `seed`, so reports do not depend on the thread count.
pub fn determinant_lemma_check(
    t: &PlaneTree,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<DeterminantReport, MatrixModelError> {
    if t.edges().len() > MAX_DET_EDGES || n == 0 || n > MAX_DET_N {
        return Err(MatrixModelError::TooLarge { edges: t.edges().len(), n });
    }
    const MAX_REDRAWS: usize = 16;
    let results: Result<Vec<(f64, usize)>, MatrixModelError> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            for redraw in 0..MAX_REDRAWS {
                let y0 = random_matrix(&mut rng, n, 2.0);
                let ys: BTreeMap<_, _> = t.halfedges().map(|h| (h, random_matrix(&mut rng, n, 0.5))).collect();
                let compact = compact_matrix(t, &y0, &ys).determinant();
                if compact.abs() < 1e-6 {
                    continue;
                }
                let block = block_matrix(t, &y0, &ys).determinant();
                return Ok((relative_error(block, compact), redraw));
            }
            Err(MatrixModelError::SingularDiagnostic { redraws: MAX_REDRAWS })
        })
        .collect();
    let results = results?;
    Ok(DeterminantReport {
        n,
        trials,
        redraws: results.iter().map(|r| r.1).sum(),
        max_rel_error: results.iter().map(|r| r.0).fold(0.0, f64::max),
    })
}

// ---------------------------------------------------------------------------
// rescaling exponents

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EtaViolation {
    Edge { edge: usize, sum: Rational64, expected: Rational64 },
    Vertex { vertex: usize, sum: Rational64 },
}

impl fmt::Display for EtaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaViolation::Edge { edge, sum, expected } => write!(f, "edge {edge}: η sum {sum}, expected {expected}"),
            EtaViolation::Vertex { vertex, sum } => write!(f, "vertex {vertex}: η sum {sum}, expected 0"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EtaAssignment {
    #[serde(serialize_with = "eta_map")]
    pub eta: BTreeMap<HalfEdgeId, Rational64>,
}

fn eta_map<S: serde::Serializer>(m: &BTreeMap<HalfEdgeId, Rational64>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(h, r)| (h.0.to_string(), r.to_string())))
}

/// `d + 2s/(V−2)`.
fn eta_slope(tm: &TreeModel) -> Rational64 {
    Rational64::from_integer(tm.d() as i64) + tm.s() * Rational64::new(2, tm.vertex_count() as i64 - 2)
}

/// `η_h = (d + 2s/(V−2))·E(𝒯_h) − Σ_{e ⊂ 𝒯_h} |C_e|`, where `𝒯_h` is `h`'s
/// edge together with the subtree on the far side.
pub fn eta_exponents(tm: &TreeModel) -> EtaAssignment {
    let t = tm.tree();
    let slope = eta_slope(tm);
    let eta = t
        .halfedges()
        .map(|h| {
            let sub = t.subtree_edges(h);
            let colors: i64 = sub.iter().map(|&e| t.edges()[e].colors.len() as i64).sum();
            (h, slope * Rational64::from_integer(sub.len() as i64) - Rational64::from_integer(colors))
        })
        .collect();
    EtaAssignment { eta }
}

impl EtaAssignment {
    /// Exact check of `η_h + η_{h'} = d + 2s/(V−2) − |C_e|` on every edge and
    /// `Σ_{h at v} η_h = 0` at every vertex.
    pub fn check(&self, tm: &TreeModel) -> Result<(), MatrixModelError> {
        let slope = eta_slope(tm);
        for (j, e) in tm.tree().edges().iter().enumerate() {
            let sum = self.eta[&e.h1] + self.eta[&e.h2];
            let expected = slope - Rational64::from_integer(e.colors.len() as i64);
            if sum != expected {
                return Err(MatrixModelError::EtaConstraint(EtaViolation::Edge { edge: j, sum, expected }));
            }
        }
        for (v, tv) in tm.tree().vertices().iter().enumerate() {
            let sum: Rational64 = tv.halfedges.iter().map(|h| self.eta[h]).sum();
            if !sum.is_zero() {
                return Err(MatrixModelError::EtaConstraint(EtaViolation::Vertex { vertex: v, sum }));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// potential and saddle point

fn coupling_factor(tm: &TreeModel, t: f64) -> Result<f64, MatrixModelError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(MatrixModelError::InvalidCoupling(t));
    }
    Ok(t.powf(-2.0 / (tm.vertex_count() as f64 - 2.0)))
}

fn value_of(y: &BTreeMap<HalfEdgeId, f64>, h: HalfEdgeId) -> Result<f64, MatrixModelError> {
    y.get(&h).copied().ok_or(MatrixModelError::MissingHalfEdge(h))
}

/// `1 − Σ_v Π_{h at v} ε_h y_h`.
fn log_argument(tm: &TreeModel, y: &BTreeMap<HalfEdgeId, f64>) -> Result<f64, MatrixModelError> {
    let mut sum = 0.0;
    for tv in tm.tree().vertices() {
        let mut prod = 1.0;
        for &h in &tv.halfedges {
            prod *= tm.epsilon(h) * value_of(y, h)?;
        }
        sum += prod;
    }
    Ok(1.0 - sum)
}

/// `V̂_𝒯(y) = t^{−2/(V−2)} Σ_e y_{h₁} y_{h₂} + ln(1 − Σ_v Π_{h at v} ε_h y_h)`.
pub fn potential_eval(tm: &TreeModel, y: &BTreeMap<HalfEdgeId, f64>, t: f64) -> Result<f64, MatrixModelError> {
    let k = coupling_factor(tm, t)?;
    let mut quad = 0.0;
    for e in tm.tree().edges() {
        quad += value_of(y, e.h1)? * value_of(y, e.h2)?;
    }
    let arg = log_argument(tm, y)?;
    if !(arg > 0.0) {
        return Err(MatrixModelError::LogDomain { arg });
    }
    Ok(k * quad + arg.ln())
}

/// Closed-form `∂V̂/∂y_h = t^{−2/(V−2)} y_{h'} − Ŵ ε_h Π_{g ≠ h at v} ε_g y_g`
/// with `Ŵ = 1/(1 − Σ_v Π ε y)`.
pub fn potential_gradient(
    tm: &TreeModel,
    y: &BTreeMap<HalfEdgeId, f64>,
    t: f64,
) -> Result<BTreeMap<HalfEdgeId, f64>, MatrixModelError> {
    let k = coupling_factor(tm, t)?;
    let arg = log_argument(tm, y)?;
    if !(arg > 0.0) {
        return Err(MatrixModelError::LogDomain { arg });
    }
    let w = 1.0 / arg;
    let tree = tm.tree();
    let mut out = BTreeMap::new();
    for h in tree.halfedges() {
        let v = tree.vertex_of(h);
        let mut rest = tm.epsilon(h);
        for &g in tree.vertices()[v].halfedges.iter().filter(|&&g| g != h) {
            rest *= tm.epsilon(g) * value_of(y, g)?;
        }
        out.insert(h, k * value_of(y, tree.opposite(h))? - w * rest);
    }
    Ok(out)
}

/// Central finite differences of [`potential_eval`] with step `step`.
pub fn numeric_gradient(
    tm: &TreeModel,
    y: &BTreeMap<HalfEdgeId, f64>,
    t: f64,
    step: f64,
) -> Result<BTreeMap<HalfEdgeId, f64>, MatrixModelError> {
    let mut out = BTreeMap::new();
    let mut probe = y.clone();
    for h in tm.tree().halfedges() {
        let y0 = value_of(y, h)?;
        probe.insert(h, y0 + step);
        let plus = potential_eval(tm, &probe, t)?;
        probe.insert(h, y0 - step);
        let minus = potential_eval(tm, &probe, t)?;
        probe.insert(h, y0);
        out.insert(h, (plus - minus) / (2.0 * step));
    }
    Ok(out)
}

/// Which fixed-point relation fixes `W` at the saddle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WRelation {
    /// `W = 1 − (V/2)·t·W^{V/2}`: every one of the `V/2` tree vertices
    /// contributes `−t W^{V/2−1}` to the log argument at the critical point.
    VertexSum,
    /// `W = 1 − t·W^{V/2}`, without the vertex count.
    Unweighted,
}

impl WRelation {
    fn weight(self, v: usize) -> f64 {
        match self {
            WRelation::VertexSum => v as f64 / 2.0,
            WRelation::Unweighted => 1.0,
        }
    }

    pub fn residual(self, v: usize, t: f64, w: f64) -> f64 {
        w - 1.0 + self.weight(v) * t * w.powi(v as i32 / 2)
    }
}

/// Newton from `W = 1` for the chosen relation; `t ≥ 0` keeps the map
/// increasing and convex on `W > 0`, so the iteration is monotone.
pub fn solve_w(v: usize, t: f64, relation: WRelation, tol: f64) -> Result<(f64, f64, usize), MatrixModelError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(MatrixModelError::InvalidCoupling(t));
    }
    let k = relation.weight(v) * t;
    let p = v as i32 / 2;
    let mut w = 1.0;
    for it in 0..100 {
        let f = relation.residual(v, t, w);
        if f.abs() <= tol {
            return Ok((w, f, it));
        }
        let df = 1.0 + k * p as f64 * w.powi(p - 1);
        w -= f / df;
        if !w.is_finite() {
            break;
        }
    }
    Err(MatrixModelError::NoConvergence { last: w, residual: relation.residual(v, t, w) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleSolution {
    #[serde(rename = "W")]
    pub w: f64,
    pub relation: WRelation,
    pub w_residual: f64,
    pub newton_iterations: usize,
    #[serde(serialize_with = "float_map")]
    pub y: BTreeMap<HalfEdgeId, f64>,
    pub gradient_norm: f64,
    pub worst: Option<(HalfEdgeId, f64)>,
}

fn float_map<S: serde::Serializer>(m: &BTreeMap<HalfEdgeId, f64>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(h, x)| (h.0.to_string(), x)))
}

/// `y_h = ε_h (Π_{e ⊂ 𝒯_h} ε_e) (t^{2/(V−2)} W)^{E(𝒯_h)}`.
pub fn saddle_ansatz(tm: &TreeModel, t: f64, w: f64) -> BTreeMap<HalfEdgeId, f64> {
    let tree = tm.tree();
    let base = t.powf(2.0 / (tm.vertex_count() as f64 - 2.0)) * w;
    tree.halfedges()
        .map(|h| {
            let sub = tree.subtree_edges(h);
            let sign: f64 = sub.iter().map(|&e| tm.edge_epsilon(e)).product();
            (h, tm.epsilon(h) * sign * base.powi(sub.len() as i32))
        })
        .collect()
}

/// The saddle point candidate for a relation, with its finite-difference
/// gradient measured but not judged.
pub fn saddle_candidate(tm: &TreeModel, t: f64, relation: WRelation) -> Result<SaddleSolution, MatrixModelError> {
    tm.require_totally_unbalanced()?;
    let (w, w_residual, newton_iterations) = solve_w(tm.vertex_count(), t, relation, 1e-15)?;
    let y = saddle_ansatz(tm, t, w);
    if t == 0.0 {
        // free theory: y = 0 and the potential is its quadratic part alone
        return Ok(SaddleSolution { w, relation, w_residual, newton_iterations, y, gradient_norm: 0.0, worst: None });
    }
    let grad = numeric_gradient(tm, &y, t, FD_STEP)?;
    let gradient_norm = grad.values().map(|g| g * g).sum::<f64>().sqrt();
    let worst = grad.iter().map(|(&h, &g)| (h, g)).max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));
    Ok(SaddleSolution { w, relation, w_residual, newton_iterations, y, gradient_norm, worst })
}

/// Saddle point with `W` from [`WRelation::VertexSum`]; fails if the
/// finite-difference gradient exceeds `tol`.
pub fn saddle_point(tm: &TreeModel, t: f64, tol: f64) -> Result<SaddleSolution, MatrixModelError> {
    saddle_point_with(tm, t, tol, WRelation::VertexSum)
}

pub fn saddle_point_with(
    tm: &TreeModel,
    t: f64,
    tol: f64,
    relation: WRelation,
) -> Result<SaddleSolution, MatrixModelError> {
    let sol = saddle_candidate(tm, t, relation)?;
    if !(sol.gradient_norm <= tol) {
        let (worst, component) = sol.worst.unwrap_or((HalfEdgeId(0), f64::NAN));
        return Err(MatrixModelError::GradientTooLarge { norm: sol.gradient_norm, worst, component });
    }
    Ok(sol)
}

// ---------------------------------------------------------------------------
// expansion of the log

/// One cyclic class of words in `−tr ln(1 − Σ_v M_v) = Σ_k (1/k) tr (Σ_v M_v)^k`,
/// where the symbol `M_v` is the signed counter-clockwise product at vertex `v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LogTerm {
    /// Lexicographically least rotation, as tree-vertex indices.
    pub word: Vec<usize>,
    pub letters: String,
    /// Number of distinct rotations, each weighted by `1/k` under the trace.
    pub multiplicity: usize,
    #[serde(with = "crate::rational::r64")]
    pub trace_factor: Rational64,
    /// `multiplicity · trace_factor`.
    #[serde(with = "crate::rational::r64")]
    pub coefficient: Rational64,
    /// Product of the signs `ε_h` over all half-edges in the word.
    pub epsilon_sign: i8,
    /// Number of half-edge matrices in the word, i.e. the power of the
    /// coupling factor carried by each one.
    pub coupling_power: usize,
}

/// Necklaces of length `k` over `n` letters with their periods
/// (Fredricksen–Kessler–Maiorana).
fn necklaces(n: usize, k: usize) -> Vec<(Vec<usize>, usize)> {
    let mut out = vec![(vec![0; k], 1)];
    if n <= 1 {
        return out;
    }
    let mut a = vec![0; k + 1];
    loop {
        let mut i = k;
        while i > 0 && a[i] == n - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        a[i] += 1;
        for j in i + 1..=k {
            a[j] = a[j - i];
        }
        if k.is_multiple_of(i) {
            out.push((a[1..].to_vec(), i));
        }
    }
    out
}

fn letter(v: usize) -> char {
    if v < 26 {
        (b'a' + v as u8) as char
    } else {
        '?'
    }
}

pub fn expand_log_interaction(tm: &TreeModel, order: usize) -> Result<Vec<LogTerm>, MatrixModelError> {
    if order > MAX_LOG_ORDER {
        return Err(MatrixModelError::OrderCap { order, cap: MAX_LOG_ORDER });
    }
    let n = tm.tree().vertices().len();
    let estimate: f64 = (1..=order).map(|k| (n as f64).powi(k as i32) / k as f64).sum();
    if estimate > MAX_LOG_TERMS {
        return Err(MatrixModelError::TooManyTerms { estimate });
    }
    let deg: Vec<usize> = tm.tree().vertices().iter().map(|v| v.halfedges.len()).collect();
    let eps: Vec<i8> = (0..n).map(|v| tm.vertex_epsilon(v)).collect();
    let mut out = Vec::new();
    for k in 1..=order {
        for (word, period) in necklaces(n, k) {
            let trace_factor = Rational64::new(1, k as i64);
            out.push(LogTerm {
                letters: word.iter().map(|&v| letter(v)).collect(),
                multiplicity: period,
                trace_factor,
                coefficient: trace_factor * Rational64::from_integer(period as i64),
                epsilon_sign: word.iter().map(|&v| eps[v]).product(),
                coupling_power: word.iter().map(|&v| deg[v]).sum(),
                word,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogCheckReport {
    pub order: usize,
    pub trials: usize,
    pub max_norm: f64,
    pub max_error: f64,
    /// Largest ratio of the observed error to the truncation bound.
    pub worst_ratio: f64,
    pub passed: bool,
}

/// Instantiates every half-edge with a random 2×2 matrix, rescales the vertex
/// symbols so that `‖Σ_v M_v‖_F` is at most `radius`, and compares the
/// truncated word sum with `−ln det(1 − Σ_v M_v)`. The discarded tail is
/// bounded by `2 r^{K+1} / ((K+1)(1 − r))` with `r` the Frobenius norm.
pub fn log_expansion_check(
    tm: &TreeModel,
    order: usize,
    radius: f64,
    trials: usize,
    seed: u64,
) -> Result<LogCheckReport, MatrixModelError> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(MatrixModelError::InvalidCoupling(radius));
    }
    let terms = expand_log_interaction(tm, order)?;
    let tree = tm.tree();
    let nv = tree.vertices().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut max_norm, mut max_error, mut worst_ratio) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..trials {
        let xs: BTreeMap<_, _> = tree.halfedges().map(|h| (h, random_matrix(&mut rng, 2, 0.0))).collect();
        let mut ms: Vec<DMatrix<f64>> = (0..nv)
            .map(|v| {
                let mut m = DMatrix::identity(2, 2);
                for h in tree.ordered_from_mark(v) {
                    m *= &xs[&h] * tm.epsilon(h);
                }
                m
            })
            .collect();
        let a0: DMatrix<f64> = ms.iter().fold(DMatrix::zeros(2, 2), |acc, m| acc + m);
        let target = radius * rng.gen_range(0.5..=1.0);
        let scale = target / a0.norm().max(f64::MIN_POSITIVE);
        for m in &mut ms {
            *m *= scale;
        }
        let a = a0 * scale;
        let r = a.norm();
        let exact = -(DMatrix::<f64>::identity(2, 2) - &a).determinant().ln();
        let mut approx = 0.0;
        for term in &terms {
            let mut p = DMatrix::identity(2, 2);
            for &v in &term.word {
                p *= &ms[v];
            }
            approx += crate::rational::r64_to_f64(term.coefficient) * p.trace();
        }
        let bound = 2.0 * r.powi(order as i32 + 1) / ((order as f64 + 1.0) * (1.0 - r)) + 1e-13;
        let err = (exact - approx).abs();
        max_norm = max_norm.max(r);
        max_error = max_error.max(err);
        worst_ratio = worst_ratio.max(err / bound);
    }
    Ok(LogCheckReport { order, trials, max_norm, max_error, worst_ratio, passed: worst_ratio <= 1.0 })
}
