//! Large-N covariance: numeric solution, formal series, and a brute-force
//! cross-check against enumerated dominant 2-point graphs.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bubble::Bubble;
use crate::feynman::{dominant_pairings, gmax_count, Ensemble, EnumerateOptions, FeynmanError};
use crate::gm::recognize_gm;
use crate::series::{rat, SeriesPoly};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CovarianceError {
    #[error("Newton did not converge after {iterations} iterations (last iterate {last}, residual {residual:e})")]
    NoConvergence { iterations: usize, last: f64, residual: f64 },
    #[error("iteration left the branch through C(0) = 1 (at C = {at})")]
    OutsideBranch { at: f64 },
    #[error("interaction size {0} must be even and at least 2")]
    BadInteraction(usize),
    #[error("enumeration needs {whites} white vertices, cap is {cap}")]
    EnumerationCap { whites: usize, cap: usize },
    #[error("bubble is not generalized melonic")]
    NotGm,
    #[error("bubble is not totally unbalanced")]
    NotTotallyUnbalanced,
    #[error("order-1 coefficients do not fix a sign: enumerated {enumerated}, series {series}")]
    SignUndetermined { enumerated: String, series: String },
    #[error(transparent)]
    Feynman(#[from] FeynmanError),
}

/// One interaction: coupling `t` and bubble size `V` (even).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub t: f64,
    #[serde(rename = "V")]
    pub v: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSolution {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesPoly>,
}

/// `f(C) = C − 1 − Σ_r ½ t_r V_r C^{V_r/2}` and `f'(C)`.
fn residual(ints: &[Interaction], c: f64) -> (f64, f64) {
    let mut f = c - 1.0;
    let mut df = 1.0;
    for i in ints {
        let h = (i.v / 2) as i32;
        f -= 0.5 * i.t * i.v as f64 * c.powi(h);
        df -= 0.5 * i.t * i.v as f64 * h as f64 * c.powi(h - 1);
    }
    (f, df)
}

fn check_sizes(ints: &[Interaction]) -> Result<(), CovarianceError> {
    match ints.iter().find(|i| i.v < 2 || i.v % 2 != 0) {
        Some(i) => Err(CovarianceError::BadInteraction(i.v)),
        None => Ok(()),
    }
}

const MAX_NEWTON: usize = 100;

/// Newton from `start`; `Err(None)` flags a non-monotone residual.
fn newton(ints: &[Interaction], start: f64, tol: f64) -> Result<(f64, f64, usize), Option<CovarianceError>> {
    let mut c = start;
    let (mut f, mut df) = residual(ints, c);
    for it in 0..MAX_NEWTON {
        if f.abs() <= tol {
            if df <= 0.0 {
                return Err(Some(CovarianceError::OutsideBranch { at: c }));
            }
            return Ok((c, f, it));
        }
        if df <= 0.0 || !df.is_finite() {
            return Err(None);
        }
        let next = c - f / df;
        let (f2, df2) = residual(ints, next);
        // quadratic convergence allows a tiny uptick only at roundoff level
        if !(f2.abs() < f.abs() || f2.abs() <= tol) {
            return Err(None);
        }
        c = next;
        f = f2;
        df = df2;
    }
    Err(Some(CovarianceError::NoConvergence { iterations: MAX_NEWTON, last: c, residual: f }))
}

/// Root of the covariance equation on the branch with `C(0) = 1`. Plain
/// Newton first; if the residual stops decreasing, the couplings are ramped
/// up from zero and the root is followed step by step.
pub fn solve_covariance(ints: &[Interaction], tol: f64) -> Result<CovarianceSolution, CovarianceError> {
    check_sizes(ints)?;
    match newton(ints, 1.0, tol) {
        Ok((value, residual, iterations)) => {
            return Ok(CovarianceSolution { value, residual, iterations, series: None });
        }
        Err(Some(e)) => return Err(e),
        Err(None) => {}
    }
    const STEPS: usize = 256;
    let mut c = 1.0;
    let mut total = 0;
    for k in 1..=STEPS {
        let lam = k as f64 / STEPS as f64;
        let scaled: Vec<Interaction> = ints.iter().map(|i| Interaction { t: i.t * lam, v: i.v }).collect();
        match newton(&scaled, c, tol) {
            Ok((v, _, it)) => {
                c = v;
                total += it;
            }
            Err(Some(e)) => return Err(e),
            Err(None) => return Err(CovarianceError::OutsideBranch { at: c }),
        }
    }
    let (f, _) = residual(ints, c);
    Ok(CovarianceSolution { value: c, residual: f, iterations: total, series: None })
}

/// Formal solution `C(t_1, …)` truncated at total degree `order`; variable
/// `r` is the coupling of the interaction with size `sizes[r]`.
pub fn covariance_series(sizes: &[usize], order: u32) -> Result<SeriesPoly, CovarianceError> {
    for &v in sizes {
        if v < 2 || v % 2 != 0 {
            return Err(CovarianceError::BadInteraction(v));
        }
    }
    let n = sizes.len().max(1);
    let one = SeriesPoly::one(n, order);
    let mut c = one.clone();
    // each pass fixes one more degree
    for _ in 0..=order {
        let mut next = one.clone();
        for (r, &v) in sizes.iter().enumerate() {
            let term = SeriesPoly::var(n, order, r).mul(&c.pow((v / 2) as u32)).scale(&rat(v as i64, 2));
            next = next.add(&term);
        }
        c = next;
    }
    Ok(c)
}

/// Number of dominant single-bubble pairings and `count · C^{V/2}`.
pub fn gaussian_expectation_leading(b: &Bubble, cov: f64) -> Result<(u64, f64), CovarianceError> {
    const CAP: usize = 9;
    let whites = b.vertex_count() / 2;
    if whites > CAP {
        return Err(CovarianceError::EnumerationCap { whites, cap: CAP });
    }
    let count = dominant_pairings(b)?.len() as u64;
    Ok((count, count as f64 * cov.powi(whites as i32)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub order: usize,
    /// Sign relating the series variable to the graph coupling.
    pub sign: i64,
    /// Labeled counts of dominant connected 2-point graphs per order.
    pub dominant_counts: Vec<u64>,
    #[serde(with = "big_vec")]
    pub enumerated: Vec<BigRational>,
    #[serde(with = "big_vec")]
    pub series: Vec<BigRational>,
    #[serde(with = "r64_vec")]
    pub delta_max: Vec<Rational64>,
    pub first_mismatch: Option<usize>,
    pub passed: bool,
}

mod big_vec {
    use super::*;
    pub fn serialize<S: serde::Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }
    pub fn deserialize<'de, D: serde::Deserializer<'de>>(de: D) -> Result<Vec<BigRational>, D::Error> {
        let v = Vec::<String>::deserialize(de)?;
        v.iter().map(|s| s.parse().map_err(|_| serde::de::Error::custom("bad rational"))).collect()
    }
}

mod r64_vec {
    use super::*;
    pub fn serialize<S: serde::Serializer>(v: &[Rational64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }
    pub fn deserialize<'de, D: serde::Deserializer<'de>>(de: D) -> Result<Vec<Rational64>, D::Error> {
        let v = Vec::<String>::deserialize(de)?;
        v.iter().map(|s| s.parse().map_err(|_| serde::de::Error::custom("bad rational"))).collect()
    }
}

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |a, i| a * BigInt::from(i))
}

/// Enumerates the connected 2-point graphs made of a marked 2-vertex bubble
/// and `k` copies of `b` (k = 1..=order), keeps those with the most bicolored
/// cycles, and compares `(−1)^k · count / k!` with the covariance series
/// coefficients, after fixing the overall sign at order 1.
pub fn universality_crosscheck(b: &Bubble, order: usize, cap: usize) -> Result<CrosscheckReport, CovarianceError> {
    let cert = recognize_gm(b).ok_or(CovarianceError::NotGm)?;
    if !cert.is_totally_unbalanced() {
        return Err(CovarianceError::NotTotallyUnbalanced);
    }
    let v = b.vertex_count();
    let whites = 1 + order * v / 2;
    if whites > cap {
        return Err(CovarianceError::EnumerationCap { whites, cap });
    }
    let s = cert.scaling_coefficient();
    let scalings = BTreeMap::from([(0, s), (1, Rational64::zero())]);
    let two = Bubble::two_vertex(b.d()).expect("d already validated");
    let series = covariance_series(&[v], order as u32)?.univariate_coeffs();

    let mut counts = vec![1u64];
    let mut enumerated = vec![BigRational::one()];
    let mut delta_max = vec![Rational64::from_integer(b.d() as i64)];
    for k in 1..=order {
        let ens = Arc::new(Ensemble::from_counts(&[(b.clone(), k), (two.clone(), 1)])?);
        let opts = EnumerateOptions { connected_only: true, cap };
        let (dm, count) = gmax_count(&ens, opts, &scalings)?.expect("connected graphs exist");
        counts.push(count);
        delta_max.push(dm);
        let sign = if k % 2 == 0 { 1 } else { -1 };
        enumerated.push(BigRational::new(BigInt::from(sign) * BigInt::from(count), factorial(k)));
    }

    let sign = if order == 0 {
        1
    } else if series[1].is_zero() || enumerated[1].abs() != series[1].abs() {
        return Err(CovarianceError::SignUndetermined {
            enumerated: enumerated[1].to_string(),
            series: series[1].to_string(),
        });
    } else if enumerated[1] == series[1] {
        1
    } else {
        -1
    };
    let first_mismatch = (0..=order).find(|&k| {
        let rho = if sign < 0 && k % 2 == 1 { -BigRational::one() } else { BigRational::one() };
        enumerated[k] != rho * &series[k] || delta_max[k] != delta_max[0]
    });
    Ok(CrosscheckReport {
        order,
        sign,
        dominant_counts: counts,
        enumerated,
        series,
        delta_max,
        first_mismatch,
        passed: first_mismatch.is_none(),
    })
}
