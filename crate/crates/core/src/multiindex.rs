//! Multi-indices: exponent vectors for monomials `x^α` and mixed partials `∂^α`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// The unit index `e_i`, i.e. `∂_i` or `x_i`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    /// `|α| = Σ α_i`.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// `α! = Π α_i!`, exact.
    pub fn factorial(&self) -> BigInt {
        self.0
            .iter()
            .fold(BigInt::one(), |acc, &a| acc * factorial(a))
    }

    /// Componentwise order `β ≤ α` (called as `beta.leq(alpha)`).
    pub fn leq(&self, alpha: &MultiIndex) -> Result<bool> {
        check_dim(alpha.dim(), self.dim())?;
        Ok(self.0.iter().zip(&alpha.0).all(|(b, a)| b <= a))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if self.dim() != other.dim() {
            return None;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `∂^β x^α = (α!/(α−β)!) x^{α−β}` when `β ≤ α`, otherwise zero.
    ///
    /// `self` is the exponent `α`; returns the integer coefficient and the
    /// remaining exponent (`None` when the derivative vanishes).
    pub fn monomial_derivative(&self, beta: &MultiIndex) -> Result<(BigInt, Option<MultiIndex>)> {
        check_dim(self.dim(), beta.dim())?;
        match self.checked_sub(beta) {
            None => Ok((BigInt::from(0), None)),
            Some(rest) => {
                let coeff = self
                    .0
                    .iter()
                    .zip(&beta.0)
                    .fold(BigInt::one(), |acc, (&a, &b)| acc * falling_factorial(a, b));
                Ok((coeff, Some(rest)))
            }
        }
    }

    /// `x^α` evaluated with any multiplicative scalar type.
    pub fn power<T: crate::scalar::Scalar>(&self, x: &[T]) -> T {
        let mut acc = T::one();
        for (xi, &a) in x.iter().zip(&self.0) {
            for _ in 0..a {
                acc = acc * xi.clone();
            }
        }
        acc
    }

    /// Position of `self` inside [`enumerate_upto`]`(n, m)` for any `m ≥ |α|`.
    pub fn graded_rank(&self) -> usize {
        let n = self.dim();
        let d = self.degree();
        let below = if d == 0 { 0 } else { binomial(n + d - 1, n) };
        let mut rank = 0;
        let mut remaining = d;
        for i in 0..n.saturating_sub(1) {
            let slots = n - i - 1;
            for v in 0..self.0[i] as usize {
                // compositions of remaining - v into `slots` parts
                rank += binomial(remaining - v + slots - 1, slots - 1);
            }
            remaining -= self.0[i] as usize;
        }
        below + rank
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl<const N: usize> From<[u32; N]> for MultiIndex {
    fn from(v: [u32; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

pub fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * i)
}

/// `a (a−1) ⋯ (a−b+1)`; assumes `b ≤ a`.
pub fn falling_factorial(a: u32, b: u32) -> BigInt {
    ((a - b + 1)..=a).fold(BigInt::one(), |acc, i| acc * i)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All `α` of dimension `n` with `|α| ≤ m`, by increasing degree and
/// lexicographically inside each degree.
pub fn enumerate_upto(n: usize, m: usize) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(binomial(n + m, n));
    for d in 0..=m {
        out.extend(enumerate_degree(n, d));
    }
    out
}

/// All `α` of dimension `n` with `|α| = d`, lexicographically.
pub fn enumerate_degree(n: usize, d: usize) -> Vec<MultiIndex> {
    fn rec(n: usize, d: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == n {
            prefix.push(d as u32);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for v in 0..=d {
            prefix.push(v as u32);
            rec(n, d - v, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if d == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return out;
    }
    rec(n, d, &mut Vec::with_capacity(n), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn degree_and_factorial() {
        assert_eq!(mi(&[0, 0]).degree(), 0);
        assert_eq!(mi(&[2, 1]).degree(), 3);
        assert_eq!(mi(&[0, 0, 5]).degree(), 5);
        assert_eq!(mi(&[0, 0]).factorial(), BigInt::from(1));
        assert_eq!(mi(&[2, 1]).factorial(), BigInt::from(2));
        assert_eq!(mi(&[3, 2]).factorial(), BigInt::from(12));
    }

    #[test]
    fn componentwise_order() {
        assert!(mi(&[1, 0]).leq(&mi(&[2, 1])).unwrap());
        assert!(!mi(&[0, 2]).leq(&mi(&[2, 1])).unwrap());
        assert!(mi(&[1, 1]).leq(&mi(&[1, 1])).unwrap());
        assert!(mi(&[1]).leq(&mi(&[1, 1])).is_err());
    }

    #[test]
    fn monomial_derivatives() {
        let (c, e) = mi(&[2, 0]).monomial_derivative(&mi(&[1, 0])).unwrap();
        assert_eq!((c, e), (BigInt::from(2), Some(mi(&[1, 0]))));
        let (c, e) = mi(&[2, 1]).monomial_derivative(&mi(&[2, 1])).unwrap();
        assert_eq!((c, e), (BigInt::from(2), Some(mi(&[0, 0]))));
        let (c, e) = mi(&[1, 0]).monomial_derivative(&mi(&[0, 1])).unwrap();
        assert_eq!((c, e), (BigInt::from(0), None));
        assert!(mi(&[1, 0]).monomial_derivative(&mi(&[1])).is_err());
    }

    #[test]
    fn enumeration() {
        assert_eq!(enumerate_upto(1, 2), vec![mi(&[0]), mi(&[1]), mi(&[2])]);
        let two = enumerate_upto(2, 2);
        assert_eq!(two.len(), 6);
        assert_eq!(
            two,
            vec![mi(&[0, 0]), mi(&[0, 1]), mi(&[1, 0]), mi(&[0, 2]), mi(&[1, 1]), mi(&[2, 0])]
        );
        assert_eq!(enumerate_upto(3, 0), vec![mi(&[0, 0, 0])]);
    }

    #[test]
    fn exhaustive_small_properties() {
        for n in 1..=4 {
            let all = enumerate_upto(n, 6);
            assert_eq!(all.len(), binomial(n + 6, n));
            for (pos, alpha) in all.iter().enumerate() {
                assert_eq!(alpha.graded_rank(), pos);
                let (c, _) = alpha.monomial_derivative(alpha).unwrap();
                assert_eq!(c, alpha.factorial());
            }
            for w in all.windows(2) {
                assert!(
                    w[0].degree() < w[1].degree()
                        || (w[0].degree() == w[1].degree() && w[0] < w[1])
                );
            }
        }
        let all = enumerate_upto(3, 4);
        for a in &all {
            for b in &all {
                let (c, _) = a.monomial_derivative(b).unwrap();
                assert_eq!(c == BigInt::from(0), !b.leq(a).unwrap());
            }
        }
    }

    #[test]
    fn json_is_plain_array() {
        assert_eq!(serde_json::to_string(&mi(&[2, 1])).unwrap(), "[2,1]");
        let back: MultiIndex = serde_json::from_str("[0,3]").unwrap();
        assert_eq!(back, mi(&[0, 3]));
    }
}
