//! Sparse multivariate polynomials over a [`Scalar`] field.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use serde_json::{json, Value};

use crate::error::{check_dim, Error, Result};
use crate::multiindex::MultiIndex;
use crate::scalar::{Rational, Scalar};

#[derive(Clone, PartialEq)]
pub struct Poly<T> {
    dim: usize,
    terms: BTreeMap<MultiIndex, T>,
}

/// Exact polynomial with rational coefficients.
pub type QPoly = Poly<Rational>;

impl<T: Scalar> Poly<T> {
    pub fn zero(dim: usize) -> Self {
        Poly { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: T) -> Self {
        Self::term(MultiIndex::zero(dim), c)
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, T::one())
    }

    /// `x^α`.
    pub fn monomial(alpha: MultiIndex) -> Self {
        Self::term(alpha, T::one())
    }

    pub fn term(alpha: MultiIndex, c: T) -> Self {
        let mut p = Self::zero(alpha.dim());
        p.add_term(alpha, c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(dim: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(dim, i))
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, T)>) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (alpha, c) in terms {
            check_dim(dim, alpha.dim())?;
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> T {
        self.terms.get(alpha).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: T) {
        debug_assert_eq!(alpha.dim(), self.dim);
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(alpha);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_term(a.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-T::one()))
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zero(self.dim);
        }
        Poly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(a, v)| (a.clone(), v.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = Self::zero(self.dim);
        for (a, c) in &self.terms {
            for (b, d) in &other.terms {
                out.add_term(a.add(b), c.clone() * d.clone());
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(self.dim), |acc, _| acc.mul(self))
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        check_dim(self.dim, x.len())?;
        Ok(self
            .terms
            .iter()
            .fold(T::zero(), |acc, (a, c)| acc + c.clone() * a.power(x)))
    }

    /// `∂^β p`.
    pub fn derivative(&self, beta: &MultiIndex) -> Result<Self> {
        check_dim(self.dim, beta.dim())?;
        let mut out = Self::zero(self.dim);
        for (a, c) in &self.terms {
            let (k, rest) = a.monomial_derivative(beta)?;
            if let Some(rest) = rest {
                out.add_term(rest, c.clone() * T::from_bigint(&k));
            }
        }
        Ok(out)
    }

    /// `x ↦ p(x + shift)`.
    pub fn shifted(&self, shift: &[T]) -> Result<Self> {
        check_dim(self.dim, shift.len())?;
        let mut out = Self::zero(self.dim);
        for (a, c) in &self.terms {
            let mut acc = Self::constant(self.dim, c.clone());
            for (i, &e) in a.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let lin = Self::var(self.dim, i).add(&Self::constant(self.dim, shift[i].clone()));
                acc = acc.mul(&lin.pow(e));
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    /// Restriction to the line `s ↦ base + s·dir`, as a polynomial in one variable.
    pub fn along_line(&self, base: &[T], dir: &[T]) -> Result<Poly<T>> {
        check_dim(self.dim, base.len())?;
        check_dim(self.dim, dir.len())?;
        let coords: Vec<Poly<T>> = (0..self.dim)
            .map(|i| {
                Poly::constant(1, base[i].clone()).add(&Poly::var(1, 0).scale(&dir[i]))
            })
            .collect();
        let mut out = Poly::zero(1);
        for (a, c) in &self.terms {
            let mut acc = Poly::constant(1, c.clone());
            for (i, &e) in a.exponents().iter().enumerate() {
                if e > 0 {
                    acc = acc.mul(&coords[i].pow(e));
                }
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Poly<U> {
        let mut out = Poly::zero(self.dim);
        for (a, c) in &self.terms {
            out.add_term(a.clone(), f(c));
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// JSON form: list of `{alpha, value}` terms.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(a, c)| json!({ "alpha": a, "value": c.to_json() }))
                .collect(),
        )
    }

    pub fn from_json(dim: usize, v: &Value) -> Result<Self> {
        let items = v
            .as_array()
            .ok_or_else(|| Error::Parse("polynomial must be an array of terms".into()))?;
        let mut p = Self::zero(dim);
        for item in items {
            let alpha: MultiIndex = serde_json::from_value(item["alpha"].clone())
                .map_err(|e| Error::Parse(format!("term alpha: {e}")))?;
            check_dim(dim, alpha.dim())?;
            p.add_term(alpha, T::from_json(&item["value"])?);
        }
        Ok(p)
    }
}

impl QPoly {
    pub fn to_f64(&self) -> Poly<f64> {
        self.map(Scalar::to_f64)
    }

    /// Evaluates with coefficients converted into the target scalar type.
    pub fn eval_as<T: Scalar>(&self, x: &[T]) -> Result<T> {
        check_dim(self.dim, x.len())?;
        Ok(self
            .terms
            .iter()
            .fold(T::zero(), |acc, (a, c)| acc + T::from_rational(c) * a.power(x)))
    }

    pub fn from_ints(dim: usize, terms: &[(&[u32], i64)]) -> Self {
        let mut p = Self::zero(dim);
        for (a, c) in terms {
            p.add_term(MultiIndex::new(a.to_vec()), Rational::from_integer(BigInt::from(*c)));
        }
        p
    }
}

impl<T: Scalar> fmt::Debug for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (a, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c:?}·x^{a}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    #[test]
    fn arithmetic_and_eval() {
        // (1 + x)(1 - x) = 1 - x^2
        let one_plus = QPoly::from_ints(1, &[(&[0], 1), (&[1], 1)]);
        let one_minus = QPoly::from_ints(1, &[(&[0], 1), (&[1], -1)]);
        let prod = one_plus.mul(&one_minus);
        assert_eq!(prod, QPoly::from_ints(1, &[(&[0], 1), (&[2], -1)]));
        assert_eq!(prod.eval(&[rat(1, 2)]).unwrap(), rat(3, 4));
        assert_eq!(prod.degree(), Some(2));
        assert!(prod.sub(&prod).is_zero());
    }

    #[test]
    fn derivative_and_shift() {
        // x^2 y
        let p = QPoly::from_ints(2, &[(&[2, 1], 1)]);
        let d = p.derivative(&MultiIndex::from([1, 1])).unwrap();
        assert_eq!(d, QPoly::from_ints(2, &[(&[1, 0], 2)]));
        let s = p.shifted(&[int(1), int(1)]).unwrap();
        // (x+1)^2 (y+1) at (0,0) = 1, at (1,0) = 4
        assert_eq!(s.eval(&[int(0), int(0)]).unwrap(), int(1));
        assert_eq!(s.eval(&[int(1), int(0)]).unwrap(), int(4));
    }

    #[test]
    fn line_restriction() {
        // x y restricted to (1,2) + s(1,-1) = (1+s)(2-s) = 2 + s - s^2
        let p = QPoly::from_ints(2, &[(&[1, 1], 1)]);
        let l = p.along_line(&[int(1), int(2)], &[int(1), int(-1)]).unwrap();
        assert_eq!(l, QPoly::from_ints(1, &[(&[0], 2), (&[1], 1), (&[2], -1)]));
    }

    #[test]
    fn json_roundtrip() {
        let p = QPoly::from_ints(2, &[(&[2, 1], 3), (&[0, 0], -1)]).scale(&rat(1, 2));
        let v = p.to_json();
        assert_eq!(QPoly::from_json(2, &v).unwrap(), p);
    }
}
