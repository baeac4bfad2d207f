//! Truncated Taylor expansions ("jets") and the smooth-function interface.
//!
//! A [`Jet`] of order `m` at a base point `a` stores `∂^α f(a)/α!` for every
//! `|α| ≤ m`, densely, in [`enumerate_upto`] order.

use std::f64::consts::FRAC_PI_2;

use serde_json::{json, Value};

use crate::error::{check_dim, Error, Result};
use crate::multiindex::{binomial, enumerate_degree, enumerate_upto, MultiIndex};
use crate::poly::Poly;
use crate::scalar::Scalar;
use crate::smoothness::Smoothness;

/// Default Gauss–Legendre node count for remainder integrals.
pub const DEFAULT_NODES: usize = 32;

/// Default absolute tolerance for float comparisons.
pub const FLOAT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    base: Vec<T>,
    order: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> Jet<T> {
    pub fn zero(base: Vec<T>, order: usize) -> Self {
        let len = binomial(base.len() + order, base.len());
        Jet { base, order, coeffs: vec![T::zero(); len] }
    }

    pub fn constant(base: Vec<T>, order: usize, c: T) -> Self {
        let mut j = Self::zero(base, order);
        j.coeffs[0] = c;
        j
    }

    /// Jet of the coordinate function `x_i`.
    pub fn variable(base: Vec<T>, order: usize, i: usize) -> Self {
        let n = base.len();
        let mut j = Self::constant(base, order, T::zero());
        j.coeffs[0] = j.base[i].clone();
        if order >= 1 {
            j.coeffs[MultiIndex::unit(n, i).graded_rank()] = T::one();
        }
        j
    }

    /// Builds a jet from `(α, coefficient)` pairs; missing entries are zero.
    pub fn from_coeffs(
        base: Vec<T>,
        order: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, T)>,
    ) -> Result<Self> {
        let mut j = Self::zero(base, order);
        for (alpha, c) in coeffs {
            check_dim(j.dim(), alpha.dim())?;
            if alpha.degree() > order {
                return Err(Error::Alignment(format!("{alpha} exceeds jet order {order}")));
            }
            j.coeffs[alpha.graded_rank()] = c;
        }
        Ok(j)
    }

    /// Jet of a polynomial: exact re-expansion of `p(a + h)`.
    pub fn of_poly(p: &Poly<T>, base: &[T], order: usize) -> Result<Self> {
        check_dim(p.dim(), base.len())?;
        let n = base.len();
        let mut j = Self::zero(base.to_vec(), order);
        for (alpha, c) in p.terms() {
            // (a + h)^e = Σ_b C(e, b)·a^{e−b}·h^b, axis by axis
            let factors: Vec<Vec<T>> = alpha
                .exponents()
                .iter()
                .zip(base)
                .map(|(&e, a)| {
                    let mut powers = vec![T::one()];
                    for _ in 0..e {
                        powers.push(powers.last().unwrap().clone() * a.clone());
                    }
                    (0..=e as usize)
                        .map(|b| T::from_int(binomial(e as usize, b) as i64) * powers[e as usize - b].clone())
                        .collect()
                })
                .collect();
            let mut beta = vec![0u32; n];
            loop {
                if beta.iter().sum::<u32>() as usize <= order {
                    let mut term = c.clone();
                    for (f, b) in factors.iter().zip(&beta) {
                        term = term * f[*b as usize].clone();
                    }
                    let slot = &mut j.coeffs[MultiIndex::new(beta.clone()).graded_rank()];
                    *slot = slot.clone() + term;
                }
                let mut i = 0;
                while i < n {
                    beta[i] += 1;
                    if beta[i] <= alpha.get(i) {
                        break;
                    }
                    beta[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
        }
        Ok(j)
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base(&self) -> &[T] {
        &self.base
    }

    pub fn value(&self) -> T {
        self.coeffs[0].clone()
    }

    /// Coefficient of `(x − a)^α`, i.e. `∂^α f(a)/α!`.
    pub fn coeff(&self, alpha: &MultiIndex) -> T {
        if alpha.degree() > self.order {
            return T::zero();
        }
        self.coeffs[alpha.graded_rank()].clone()
    }

    /// `∂^α f(a) = α!·coeff[α]`.
    pub fn derivative(&self, alpha: &MultiIndex) -> Result<T> {
        check_dim(self.dim(), alpha.dim())?;
        if alpha.degree() > self.order {
            return Err(Error::Alignment(format!(
                "derivative {alpha} beyond jet order {}",
                self.order
            )));
        }
        Ok(T::from_bigint(&alpha.factorial()) * self.coeff(alpha))
    }

    pub fn entries(&self) -> impl Iterator<Item = (MultiIndex, &T)> {
        enumerate_upto(self.dim(), self.order).into_iter().zip(&self.coeffs)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.negligible(tol))
    }

    /// Same jet viewed at a lower order.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let len = binomial(self.dim() + order, self.dim());
        Jet { base: self.base.clone(), order, coeffs: self.coeffs[..len].to_vec() }
    }

    fn check_aligned(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::dim(self.dim(), other.dim()));
        }
        if self.order != other.order {
            return Err(Error::Alignment(format!("orders {} and {}", self.order, other.order)));
        }
        if self.base != other.base {
            return Err(Error::Alignment("different base points".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_aligned(other)?;
        Ok(self.zip_with(other, |a, b| a.clone() + b.clone()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_aligned(other)?;
        Ok(self.zip_with(other, |a, b| a.clone() - b.clone()))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        Jet {
            base: self.base.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        Jet {
            base: self.base.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|a| a.clone() * c.clone()).collect(),
        }
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_aligned(other)?;
        let index = enumerate_upto(self.dim(), self.order);
        let mut out = Self::zero(self.base.clone(), self.order);
        for (i, a) in index.iter().enumerate() {
            if self.coeffs[i].is_zero() {
                continue;
            }
            let room = self.order - a.degree();
            let upto = binomial(self.dim() + room, self.dim());
            for (j, b) in index[..upto].iter().enumerate() {
                if other.coeffs[j].is_zero() {
                    continue;
                }
                let k = a.add(b).graded_rank();
                out.coeffs[k] =
                    out.coeffs[k].clone() + self.coeffs[i].clone() * other.coeffs[j].clone();
            }
        }
        Ok(out)
    }

    /// Composes a univariate function `g` with this jet, given the Taylor
    /// coefficients `g^{(k)}(u0)/k!`, `k = 0..=order`, at `u0 = self.value()`.
    pub fn compose(&self, taylor: &[T]) -> Result<Self> {
        debug_assert!(taylor.len() > self.order);
        let mut h = self.clone();
        h.coeffs[0] = T::zero();
        let mut power = Self::constant(self.base.clone(), self.order, T::one());
        let mut out = Self::constant(self.base.clone(), self.order, taylor[0].clone());
        for c in taylor.iter().take(self.order + 1).skip(1) {
            power = power.mul(&h)?;
            out = out.add(&power.scale(c))?;
        }
        Ok(out)
    }

    /// `1/f`; fails when the value is zero.
    pub fn recip(&self) -> Result<Self> {
        let u0 = self.value();
        if u0.is_zero() {
            return Err(Error::Domain("reciprocal of a jet with zero value".into()));
        }
        let inv = T::one() / u0;
        let mut taylor = Vec::with_capacity(self.order + 1);
        let mut term = inv.clone();
        for _ in 0..=self.order {
            taylor.push(term.clone());
            term = -(term * inv.clone());
        }
        self.compose(&taylor)
    }

    /// Polynomial `Σ coeff[α]·(x − a)^α` in global coordinates.
    pub fn to_poly(&self) -> Result<Poly<T>> {
        let local = Poly::from_terms(
            self.dim(),
            self.entries().map(|(a, c)| (a, c.clone())),
        )?;
        let neg: Vec<T> = self.base.iter().map(|v| -v.clone()).collect();
        local.shifted(&neg)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "base": self.base.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "order": self.order,
            "coeffs": self
                .entries()
                .filter(|(_, c)| !c.is_zero())
                .map(|(a, c)| json!({ "alpha": a, "value": c.to_json() }))
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let base = v["base"]
            .as_array()
            .ok_or_else(|| Error::Parse("jet.base must be an array".into()))?
            .iter()
            .map(T::from_json)
            .collect::<Result<Vec<_>>>()?;
        let order = v["order"]
            .as_u64()
            .ok_or_else(|| Error::Parse("jet.order must be a nonnegative integer".into()))?
            as usize;
        let coeffs = v["coeffs"]
            .as_array()
            .ok_or_else(|| Error::Parse("jet.coeffs must be an array".into()))?
            .iter()
            .map(|item| {
                let alpha: MultiIndex = serde_json::from_value(item["alpha"].clone())
                    .map_err(|e| Error::Parse(format!("jet coefficient alpha: {e}")))?;
                Ok((alpha, T::from_json(&item["value"])?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_coeffs(base, order, coeffs)
    }
}

impl Jet<f64> {
    pub fn exp(&self) -> Result<Self> {
        let e = self.value().exp();
        let mut taylor = Vec::with_capacity(self.order + 1);
        let mut fact = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                fact *= k as f64;
            }
            taylor.push(e / fact);
        }
        self.compose(&taylor)
    }

    pub fn sin(&self) -> Result<Self> {
        self.compose(&trig_taylor(self.value(), self.order, 0.0))
    }

    pub fn cos(&self) -> Result<Self> {
        self.compose(&trig_taylor(self.value(), self.order, FRAC_PI_2))
    }

    /// `√f`; requires a positive value.
    pub fn sqrt(&self) -> Result<Self> {
        let u0 = self.value();
        if u0 <= 0.0 {
            return Err(Error::Domain("square root of a nonpositive jet".into()));
        }
        let mut taylor = Vec::with_capacity(self.order + 1);
        // binom(1/2, k) u0^{1/2 - k}
        let mut binom = 1.0;
        let mut pow = u0.sqrt();
        for k in 0..=self.order {
            if k > 0 {
                binom *= (0.5 - (k as f64 - 1.0)) / k as f64;
                pow /= u0;
            }
            taylor.push(binom * pow);
        }
        self.compose(&taylor)
    }
}

fn trig_taylor(u0: f64, order: usize, phase: f64) -> Vec<f64> {
    let mut fact = 1.0;
    (0..=order)
        .map(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            (u0 + phase + k as f64 * FRAC_PI_2).sin() / fact
        })
        .collect()
}

/// A function that can report its jet at any point of its domain.
pub trait SmoothFn<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    /// Declared differentiability class; jets up to this order always succeed.
    fn class(&self) -> Smoothness;

    fn jet(&self, at: &[T], order: usize) -> Result<Jet<T>>;

    fn value(&self, at: &[T]) -> Result<T> {
        Ok(self.jet(at, 0)?.value())
    }
}

pub(crate) fn check_order(class: Smoothness, order: usize) -> Result<()> {
    if class.admits(order) {
        Ok(())
    } else {
        Err(Error::Smoothness { requested: order, class: class.to_string() })
    }
}

impl<T: Scalar> SmoothFn<T> for Poly<T> {
    fn dim(&self) -> usize {
        Poly::dim(self)
    }

    fn class(&self) -> Smoothness {
        Smoothness::Smooth
    }

    fn jet(&self, at: &[T], order: usize) -> Result<Jet<T>> {
        Jet::of_poly(self, at, order)
    }

    fn value(&self, at: &[T]) -> Result<T> {
        self.eval(at)
    }
}

impl<T: Scalar, F: SmoothFn<T> + ?Sized> SmoothFn<T> for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn class(&self) -> Smoothness {
        (**self).class()
    }
    fn jet(&self, at: &[T], order: usize) -> Result<Jet<T>> {
        (**self).jet(at, order)
    }
    fn value(&self, at: &[T]) -> Result<T> {
        (**self).value(at)
    }
}

/// Analytic expressions built from polynomials, `exp`, `sin`, `cos`, sums
/// and products. Float mode only.
#[derive(Clone, Debug)]
pub enum Analytic {
    Poly(Poly<f64>),
    Exp(Box<Analytic>),
    Sin(Box<Analytic>),
    Cos(Box<Analytic>),
    Sum(Box<Analytic>, Box<Analytic>),
    Product(Box<Analytic>, Box<Analytic>),
}

impl Analytic {
    /// `a·x + b` as an argument expression.
    pub fn affine(weights: &[f64], offset: f64) -> Analytic {
        let n = weights.len();
        let mut p = Poly::constant(n, offset);
        for (i, &w) in weights.iter().enumerate() {
            p = p.add(&Poly::var(n, i).scale(&w));
        }
        Analytic::Poly(p)
    }

    pub fn exp(arg: Analytic) -> Analytic {
        Analytic::Exp(Box::new(arg))
    }

    pub fn sin(arg: Analytic) -> Analytic {
        Analytic::Sin(Box::new(arg))
    }

    pub fn cos(arg: Analytic) -> Analytic {
        Analytic::Cos(Box::new(arg))
    }

    pub fn sum(a: Analytic, b: Analytic) -> Analytic {
        Analytic::Sum(Box::new(a), Box::new(b))
    }

    pub fn product(a: Analytic, b: Analytic) -> Analytic {
        Analytic::Product(Box::new(a), Box::new(b))
    }

    fn dimension(&self) -> usize {
        match self {
            Analytic::Poly(p) => p.dim(),
            Analytic::Exp(a) | Analytic::Sin(a) | Analytic::Cos(a) => a.dimension(),
            Analytic::Sum(a, _) | Analytic::Product(a, _) => a.dimension(),
        }
    }
}

impl SmoothFn<f64> for Analytic {
    fn dim(&self) -> usize {
        self.dimension()
    }

    fn class(&self) -> Smoothness {
        Smoothness::Smooth
    }

    fn jet(&self, at: &[f64], order: usize) -> Result<Jet<f64>> {
        match self {
            Analytic::Poly(p) => Jet::of_poly(p, at, order),
            Analytic::Exp(a) => a.jet(at, order)?.exp(),
            Analytic::Sin(a) => a.jet(at, order)?.sin(),
            Analytic::Cos(a) => a.jet(at, order)?.cos(),
            Analytic::Sum(a, b) => a.jet(at, order)?.add(&b.jet(at, order)?),
            Analytic::Product(a, b) => a.jet(at, order)?.mul(&b.jet(at, order)?),
        }
    }
}

/// `∂^α f(a)`.
pub fn derivative_at<T: Scalar>(f: &dyn SmoothFn<T>, alpha: &MultiIndex, at: &[T]) -> Result<T> {
    check_dim(f.dim(), alpha.dim())?;
    check_dim(f.dim(), at.len())?;
    check_order(f.class(), alpha.degree())?;
    f.jet(at, alpha.degree())?.derivative(alpha)
}

/// Degree-`k` Taylor polynomial of `f` at `a`, in global coordinates.
pub fn taylor_polynomial<T: Scalar>(f: &dyn SmoothFn<T>, at: &[T], k: usize) -> Result<Poly<T>> {
    check_dim(f.dim(), at.len())?;
    check_order(f.class(), k)?;
    f.jet(at, k)?.to_poly()
}

/// Integral remainder
/// `R_β(x) = (|β|/β!) ∫₀¹ (1−t)^{|β|−1} ∂^β f(a + t(x−a)) dt`
/// by Gauss–Legendre quadrature.
pub fn taylor_remainder_quadrature(
    f: &dyn SmoothFn<f64>,
    at: &[f64],
    beta: &MultiIndex,
    x: &[f64],
    nodes: usize,
) -> Result<f64> {
    let n = f.dim();
    check_dim(n, at.len())?;
    check_dim(n, x.len())?;
    check_dim(n, beta.dim())?;
    let k = beta.degree();
    if k == 0 {
        return Err(Error::Parameter("remainder index must have |β| ≥ 1".into()));
    }
    check_order(f.class(), k)?;
    let rule = GaussLegendre::new(nodes);
    let mut integral = 0.0;
    for (t, w) in rule.unit_interval() {
        let point: Vec<f64> = at.iter().zip(x).map(|(a, xi)| a + t * (xi - a)).collect();
        let d = f.jet(&point, k)?.derivative(beta)?;
        integral += w * (1.0 - t).powi(k as i32 - 1) * d;
    }
    let beta_fact = Scalar::to_f64(&crate::scalar::Rational::from_integer(beta.factorial()));
    Ok(k as f64 / beta_fact * integral)
}

/// `f(x) − q_k(x) − Σ_{|β|=k+1} R_β(x)(x−a)^β`; zero up to quadrature error.
pub fn taylor_identity_residual(
    f: &dyn SmoothFn<f64>,
    at: &[f64],
    k: usize,
    x: &[f64],
    nodes: usize,
) -> Result<f64> {
    let n = f.dim();
    let q = taylor_polynomial(f, at, k)?;
    let diff: Vec<f64> = x.iter().zip(at).map(|(xi, a)| xi - a).collect();
    let mut total = q.eval(x)?;
    for beta in enumerate_degree(n, k + 1) {
        total += taylor_remainder_quadrature(f, at, &beta, x, nodes)? * beta.power(&diff);
    }
    Ok(f.value(x)? - total)
}

/// Membership in the flat ideal: every `∂^α f(x0)`, `|α| ≤ m`, vanishes.
pub fn vanishes_to_order<T: Scalar>(
    f: &dyn SmoothFn<T>,
    x0: &[T],
    m: usize,
    tol: f64,
) -> Result<bool> {
    check_dim(f.dim(), x0.len())?;
    check_order(f.class(), m)?;
    Ok(f.jet(x0, m)?.is_zero(tol))
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to `[0, 1]`.
    pub fn unit_interval(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
