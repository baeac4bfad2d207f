//! Seeded generators for randomized trials.
//!
//! All randomness goes through SplitMix64 so that reports reproduce across
//! platforms for a given seed.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::diffop::{CoefficientFn, DiffOperator};
use crate::multiindex::{enumerate_degree, enumerate_upto, MultiIndex};
use crate::poly::QPoly;
use crate::pwpoly::witness_cm;
use crate::scalar::Rational;

pub type TrialRng = SplitMix64;

pub fn rng(seed: u64) -> TrialRng {
    SplitMix64::seed_from_u64(seed)
}

/// Rational `p/q` with `q ∈ 1..=4` and value in `[-bound, bound]`.
pub fn rational(rng: &mut TrialRng, bound: i64) -> Rational {
    let q: i64 = rng.random_range(1..=4);
    let p: i64 = rng.random_range(-bound * q..=bound * q);
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn nonzero_rational(rng: &mut TrialRng, bound: i64) -> Rational {
    loop {
        let r = rational(rng, bound);
        if r != Rational::from_integer(BigInt::from(0)) {
            return r;
        }
    }
}

/// Random polynomial of total degree at most `max_degree` with up to
/// `max_terms` terms and coefficients in `[-5, 5]`.
pub fn polynomial(rng: &mut TrialRng, dim: usize, max_degree: usize, max_terms: usize) -> QPoly {
    let monomials = enumerate_upto(dim, max_degree);
    let terms = rng.random_range(1..=max_terms.max(1));
    let mut p = QPoly::zero(dim);
    for _ in 0..terms {
        let alpha = monomials[rng.random_range(0..monomials.len())].clone();
        p.add_term(alpha, rational(rng, 5));
    }
    p
}

pub fn nonzero_polynomial(rng: &mut TrialRng, dim: usize, max_degree: usize, max_terms: usize) -> QPoly {
    loop {
        let p = polynomial(rng, dim, max_degree, max_terms);
        if !p.is_zero() {
            return p;
        }
    }
}

/// Polynomial whose derivatives of order `≤ m` all vanish at the origin.
pub fn flat_polynomial(rng: &mut TrialRng, dim: usize, m: usize) -> QPoly {
    let mut monomials = enumerate_degree(dim, m + 1);
    monomials.extend(enumerate_degree(dim, m + 2));
    let mut p = QPoly::zero(dim);
    while p.is_zero() {
        for _ in 0..rng.random_range(1..=4) {
            let alpha = monomials[rng.random_range(0..monomials.len())].clone();
            p.add_term(alpha, rational(rng, 5));
        }
    }
    p
}

/// Operator with polynomial coefficients of degree `≤ coeff_degree` and
/// effective order exactly `order`.
pub fn operator_of_order(
    rng: &mut TrialRng,
    dim: usize,
    order: usize,
    coeff_degree: usize,
) -> DiffOperator {
    let mut op = DiffOperator::zero(dim);
    let top = enumerate_degree(dim, order);
    let alpha = top[rng.random_range(0..top.len())].clone();
    op = op
        .with(alpha, CoefficientFn::Poly(nonzero_polynomial(rng, dim, coeff_degree, 3)))
        .expect("generated index has the operator dimension");
    for alpha in enumerate_upto(dim, order) {
        if rng.random_bool(0.35) {
            let c = polynomial(rng, dim, coeff_degree, 3);
            op = op.with(alpha, CoefficientFn::Poly(c)).expect("dimension matches");
        }
    }
    if op.effective_order(0.0) != Some(order) {
        // the random fill may have overwritten the top coefficient with zero
        return operator_of_order(rng, dim, order, coeff_degree);
    }
    op
}

/// Operator with polynomial coefficients, order `≤ max_order`, possibly zero.
pub fn operator(rng: &mut TrialRng, dim: usize, max_order: usize, coeff_degree: usize) -> DiffOperator {
    let order = rng.random_range(0..=max_order);
    let op = operator_of_order(rng, dim, order, coeff_degree);
    op.with_nominal_order(max_order).expect("order within bound")
}

/// One-dimensional coefficient of class exactly `class` (a shifted, scaled
/// witness plus a polynomial), or a polynomial when `class` is `None`.
pub fn coefficient_1d(rng: &mut TrialRng, class: Option<u32>) -> CoefficientFn {
    let p = polynomial(rng, 1, 2, 2);
    match class {
        None => CoefficientFn::Poly(if p.is_zero() { QPoly::one(1) } else { p }),
        Some(k) => {
            let x0 = rational(rng, 2);
            let w = witness_cm(k, &x0).scale(&nonzero_rational(rng, 3));
            let pw = w.add(&crate::pwpoly::PiecewisePoly::polynomial(
                crate::pwpoly::UPoly::from_poly(&p).expect("one-dimensional"),
            ));
            CoefficientFn::Piecewise(pw)
        }
    }
}

pub fn index(rng: &mut TrialRng, dim: usize, degree: usize) -> MultiIndex {
    let all = enumerate_degree(dim, degree);
    all[rng.random_range(0..all.len())].clone()
}
