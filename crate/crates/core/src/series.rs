//! Truncated multivariate power series with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesPoly {
    nvars: usize,
    /// Terms of total degree above `order` are dropped.
    order: u32,
    coeffs: BTreeMap<Vec<u32>, BigRational>,
}

impl SeriesPoly {
    pub fn zero(nvars: usize, order: u32) -> Self {
        SeriesPoly { nvars, order, coeffs: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, order: u32, c: BigRational) -> Self {
        let mut s = Self::zero(nvars, order);
        s.set(vec![0; nvars], c);
        s
    }

    pub fn one(nvars: usize, order: u32) -> Self {
        Self::constant(nvars, order, BigRational::one())
    }

    /// The variable `t_i`.
    pub fn var(nvars: usize, order: u32, i: usize) -> Self {
        let mut s = Self::zero(nvars, order);
        let mut e = vec![0; nvars];
        e[i] = 1;
        s.set(e, BigRational::one());
        s
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    fn set(&mut self, e: Vec<u32>, c: BigRational) {
        if e.iter().sum::<u32>() > self.order || c.is_zero() {
            self.coeffs.remove(&e);
        } else {
            self.coeffs.insert(e, c);
        }
    }

    pub fn coeff(&self, e: &[u32]) -> BigRational {
        self.coeffs.get(e).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.coeffs.iter()
    }

    pub fn add(&self, other: &SeriesPoly) -> SeriesPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = SeriesPoly::zero(self.nvars, self.order.min(other.order));
        for (e, c) in self.coeffs.iter().chain(other.coeffs.iter()) {
            let v = out.coeff(e) + c;
            out.set(e.clone(), v);
        }
        out
    }

    pub fn scale(&self, k: &BigRational) -> SeriesPoly {
        let mut out = SeriesPoly::zero(self.nvars, self.order);
        for (e, c) in &self.coeffs {
            out.set(e.clone(), c * k);
        }
        out
    }

    pub fn mul(&self, other: &SeriesPoly) -> SeriesPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = SeriesPoly::zero(self.nvars, self.order.min(other.order));
        for (e1, c1) in &self.coeffs {
            for (e2, c2) in &other.coeffs {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                if e.iter().sum::<u32>() > out.order {
                    continue;
                }
                let v = out.coeff(&e) + c1 * c2;
                out.set(e, v);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> SeriesPoly {
        let mut out = SeriesPoly::one(self.nvars, self.order);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Numeric value at `t`.
    pub fn evaluate(&self, t: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(e, c)| {
                let m: f64 = e.iter().zip(t).map(|(&k, &x)| x.powi(k as i32)).product();
                c.to_f64().unwrap_or(f64::NAN) * m
            })
            .sum()
    }

    pub fn has_integer_coefficients(&self) -> bool {
        self.coeffs.values().all(|c| c.is_integer())
    }

    /// Coefficients of a single-variable series, degree 0 up to `order`.
    pub fn univariate_coeffs(&self) -> Vec<BigRational> {
        assert_eq!(self.nvars, 1);
        (0..=self.order).map(|k| self.coeff(&[k])).collect()
    }
}

impl fmt::Display for SeriesPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (j, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "·t{j}")?,
                    _ => write!(f, "·t{j}^{k}")?,
                }
            }
        }
        write!(f, " + O(t^{})", self.order + 1)
    }
}

#[derive(Serialize, Deserialize)]
struct Term {
    exponents: Vec<u32>,
    #[serde(with = "crate::rational::big")]
    coeff: BigRational,
}

#[derive(Serialize, Deserialize)]
struct RawSeries {
    nvars: usize,
    order: u32,
    terms: Vec<Term>,
}

impl Serialize for SeriesPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawSeries {
            nvars: self.nvars,
            order: self.order,
            terms: self.coeffs.iter().map(|(e, c)| Term { exponents: e.clone(), coeff: c.clone() }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SeriesPoly {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let r = RawSeries::deserialize(de)?;
        let mut s = SeriesPoly::zero(r.nvars, r.order);
        for t in r.terms {
            if t.exponents.len() != r.nvars {
                return Err(serde::de::Error::custom("exponent length differs from nvars"));
            }
            s.set(t.exponents, t.coeff);
        }
        Ok(s)
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series() {
        // (1 - t)^{-1} truncated: check (1 - t) * sum t^k = 1
        let order = 6;
        let t = SeriesPoly::var(1, order, 0);
        let mut g = SeriesPoly::zero(1, order);
        for k in 0..=order {
            g = g.add(&t.pow(k));
        }
        let one_minus_t = SeriesPoly::one(1, order).add(&t.scale(&rat(-1, 1)));
        assert_eq!(one_minus_t.mul(&g), SeriesPoly::one(1, order));
    }

    #[test]
    fn truncation_and_eval() {
        let t = SeriesPoly::var(2, 2, 1);
        assert!(t.pow(3).terms().next().is_none());
        let p = SeriesPoly::one(2, 2).add(&t.scale(&rat(1, 2)));
        assert!((p.evaluate(&[0.0, 0.5]) - 1.25).abs() < 1e-15);
        assert!(!p.has_integer_coefficients());
    }

    #[test]
    fn json_roundtrip() {
        let p = SeriesPoly::one(1, 3).add(&SeriesPoly::var(1, 3, 0).scale(&rat(-3, 7)));
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"-3/7\""));
        assert_eq!(serde_json::from_str::<SeriesPoly>(&s).unwrap(), p);
    }
}
