//! Exact one-dimensional piecewise polynomials and smoothness witnesses.

use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::diffop::DiffOperator;
use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::poly::QPoly;
use crate::scalar::{format_rational, Rational, Scalar};
use crate::smoothness::Smoothness;

/// Dense univariate polynomial, coefficients from the constant term upwards.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct UPoly(Vec<Rational>);

impl UPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        UPoly(coeffs)
    }

    pub fn zero() -> Self {
        UPoly(Vec::new())
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// `(x − x0)^k`.
    pub fn power_at(x0: &Rational, k: u32) -> Self {
        let lin = UPoly::new(vec![-x0.clone(), Rational::one()]);
        (0..k).fold(UPoly::constant(Rational::one()), |acc, _| acc.mul(&lin))
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.0
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn add(&self, other: &UPoly) -> UPoly {
        let len = self.0.len().max(other.0.len());
        let z = Rational::zero();
        UPoly::new(
            (0..len)
                .map(|i| self.0.get(i).unwrap_or(&z) + other.0.get(i).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn sub(&self, other: &UPoly) -> UPoly {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> UPoly {
        UPoly::new(self.0.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, other: &UPoly) -> UPoly {
        if self.is_zero() || other.is_zero() {
            return UPoly::zero();
        }
        let mut out = vec![Rational::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UPoly::new(out)
    }

    pub fn derivative(&self) -> UPoly {
        UPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Rational::from_int(k as i64))
                .collect(),
        )
    }

    /// `x ↦ p(x + t)`.
    pub fn shifted(&self, t: &Rational) -> UPoly {
        let lin = UPoly::new(vec![t.clone(), Rational::one()]);
        self.0
            .iter()
            .rev()
            .fold(UPoly::zero(), |acc, c| acc.mul(&lin).add(&UPoly::constant(c.clone())))
    }

    /// Lowest `k` with `p^{(k)}(x0) ≠ 0`; `None` for the zero polynomial.
    pub fn vanishing_order_at(&self, x0: &Rational) -> Option<usize> {
        let mut d = self.clone();
        let mut k = 0;
        while !d.is_zero() {
            if !d.eval(x0).is_zero() {
                return Some(k);
            }
            d = d.derivative();
            k += 1;
        }
        None
    }

    pub fn from_poly(p: &QPoly) -> Result<UPoly> {
        if p.dim() != 1 {
            return Err(Error::dim(1, p.dim()));
        }
        let deg = p.degree().unwrap_or(0);
        Ok(UPoly::new(
            (0..=deg).map(|k| p.coeff(&MultiIndex::new(vec![k as u32]))).collect(),
        ))
    }

    pub fn to_poly(&self) -> QPoly {
        let mut p = QPoly::zero(1);
        for (k, c) in self.0.iter().enumerate() {
            p.add_term(MultiIndex::new(vec![k as u32]), c.clone());
        }
        p
    }
}

impl fmt::Debug for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| match k {
                0 => format_rational(c),
                1 => format!("{}·x", format_rational(c)),
                _ => format!("{}·x^{k}", format_rational(c)),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Piecewise polynomial on the real line.
///
/// `pieces[i]` is valid on `(breakpoints[i-1], breakpoints[i])`, with the two
/// unbounded end intervals included, so there is one more piece than
/// breakpoints. Continuity is not assumed.
#[derive(Clone, PartialEq, Debug)]
pub struct PiecewisePoly {
    breakpoints: Vec<Rational>,
    pieces: Vec<UPoly>,
}

impl PiecewisePoly {
    pub fn new(breakpoints: Vec<Rational>, pieces: Vec<UPoly>) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::Parameter(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter("breakpoints must be strictly increasing".into()));
        }
        Ok(PiecewisePoly { breakpoints, pieces })
    }

    pub fn polynomial(p: UPoly) -> Self {
        PiecewisePoly { breakpoints: Vec::new(), pieces: vec![p] }
    }

    pub fn zero() -> Self {
        Self::polynomial(UPoly::zero())
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[UPoly] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(UPoly::is_zero)
    }

    /// Index of the piece governing `x`; at a breakpoint the right piece.
    fn piece_index(&self, x: &Rational) -> usize {
        self.breakpoints.partition_point(|b| b <= x)
    }

    /// Right-continuous evaluation.
    pub fn eval(&self, x: &Rational) -> Rational {
        self.pieces[self.piece_index(x)].eval(x)
    }

    /// Float evaluation, for plotting.
    pub fn eval_f64(&self, x: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|b| Scalar::to_f64(b) <= x);
        self.pieces[idx]
            .coeffs()
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + Scalar::to_f64(c))
    }

    /// Evaluation in any scalar mode (breakpoints compared after conversion).
    pub fn eval_as<T: Scalar>(&self, x: &T) -> T {
        let idx = self.breakpoints.partition_point(|b| T::from_rational(b) <= *x);
        self.pieces[idx]
            .coeffs()
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x.clone() + T::from_rational(c))
    }

    /// Piecewise derivative on the same breakpoints.
    pub fn derivative(&self) -> PiecewisePoly {
        PiecewisePoly {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(UPoly::derivative).collect(),
        }
    }

    /// Class at `x0`: the largest `k` such that the one-sided derivatives of
    /// orders `0..=k` agree.
    pub fn smoothness_class_at(&self, x0: &Rational) -> Smoothness {
        let Ok(i) = self.breakpoints.binary_search(x0) else {
            return Smoothness::Smooth;
        };
        let jump = self.pieces[i + 1].sub(&self.pieces[i]);
        match jump.vanishing_order_at(x0) {
            None => Smoothness::Smooth,
            Some(0) => Smoothness::Discontinuous,
            Some(k) => Smoothness::Class(k as u32 - 1),
        }
    }

    /// Class on the whole line: minimum over breakpoints.
    pub fn global_class(&self) -> Smoothness {
        self.breakpoints
            .iter()
            .map(|b| self.smoothness_class_at(b))
            .min()
            .unwrap_or(Smoothness::Smooth)
    }

    /// Same function on the union of both breakpoint sets.
    fn refine(&self, points: &[Rational]) -> PiecewisePoly {
        let mut all: Vec<Rational> = self.breakpoints.iter().chain(points).cloned().collect();
        all.sort();
        all.dedup();
        let mut pieces = Vec::with_capacity(all.len() + 1);
        for i in 0..=all.len() {
            // a point strictly inside interval i decides the original piece
            let idx = match (i.checked_sub(1).map(|j| &all[j]), all.get(i)) {
                (None, None) => 0,
                (None, Some(r)) => self.breakpoints.partition_point(|b| b < r),
                (Some(l), _) => self.breakpoints.partition_point(|b| b <= l),
            };
            pieces.push(self.pieces[idx].clone());
        }
        PiecewisePoly { breakpoints: all, pieces }
    }

    fn combine(&self, other: &PiecewisePoly, f: impl Fn(&UPoly, &UPoly) -> UPoly) -> PiecewisePoly {
        let a = self.refine(&other.breakpoints);
        let b = other.refine(&self.breakpoints);
        debug_assert_eq!(a.breakpoints, b.breakpoints);
        PiecewisePoly {
            breakpoints: a.breakpoints,
            pieces: a.pieces.iter().zip(&b.pieces).map(|(p, q)| f(p, q)).collect(),
        }
    }

    pub fn add(&self, other: &PiecewisePoly) -> PiecewisePoly {
        self.combine(other, UPoly::add)
    }

    pub fn mul(&self, other: &PiecewisePoly) -> PiecewisePoly {
        self.combine(other, UPoly::mul)
    }

    pub fn mul_poly(&self, p: &UPoly) -> PiecewisePoly {
        PiecewisePoly {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|q| q.mul(p)).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> PiecewisePoly {
        self.mul_poly(&UPoly::constant(c.clone()))
    }

    /// `x ↦ f(x + t)`.
    pub fn shifted(&self, t: &Rational) -> PiecewisePoly {
        PiecewisePoly {
            breakpoints: self.breakpoints.iter().map(|b| b - t).collect(),
            pieces: self.pieces.iter().map(|p| p.shifted(t)).collect(),
        }
    }

    /// Drops breakpoints whose neighbouring pieces coincide.
    pub fn simplified(&self) -> PiecewisePoly {
        let mut breakpoints = Vec::new();
        let mut pieces = vec![self.pieces[0].clone()];
        for (b, p) in self.breakpoints.iter().zip(&self.pieces[1..]) {
            if pieces.last() != Some(p) {
                breakpoints.push(b.clone());
                pieces.push(p.clone());
            }
        }
        PiecewisePoly { breakpoints, pieces }
    }

    /// Semantic equality (ignores redundant breakpoints).
    pub fn same_function(&self, other: &PiecewisePoly) -> bool {
        self.simplified() == other.simplified()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "breakpoints": self.breakpoints.iter().map(format_rational).collect::<Vec<_>>(),
            "pieces": self
                .pieces
                .iter()
                .map(|p| p.coeffs().iter().map(format_rational).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let breakpoints = v["breakpoints"]
            .as_array()
            .ok_or_else(|| Error::Parse("piecewise.breakpoints must be an array".into()))?
            .iter()
            .map(Rational::from_json)
            .collect::<Result<Vec<_>>>()?;
        let pieces = v["pieces"]
            .as_array()
            .ok_or_else(|| Error::Parse("piecewise.pieces must be an array".into()))?
            .iter()
            .map(|piece| {
                piece
                    .as_array()
                    .ok_or_else(|| Error::Parse("each piece must be a coefficient array".into()))?
                    .iter()
                    .map(Rational::from_json)
                    .collect::<Result<Vec<_>>>()
                    .map(UPoly::new)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(breakpoints, pieces)
    }
}

/// `b(x) = (x − x0)^m·|x − x0|`: of class exactly `C^m` at `x0`.
pub fn witness_cm(m: u32, x0: &Rational) -> PiecewisePoly {
    let right = UPoly::power_at(x0, m + 1);
    let left = right.scale(&-Rational::one());
    PiecewisePoly { breakpoints: vec![x0.clone()], pieces: vec![left, right] }
}

/// `Σ a_α·∂^α f` computed exactly for a one-dimensional operator.
///
/// Fails with [`Error::UndefinedDerivative`] when a nonzero coefficient of
/// order `k` meets a breakpoint where `f` is not `C^k`.
pub fn pw_apply_operator(op: &DiffOperator, f: &PiecewisePoly) -> Result<PiecewisePoly> {
    if op.dim() != 1 {
        return Err(Error::dim(1, op.dim()));
    }
    let mut derivs = vec![f.clone()];
    let mut out = PiecewisePoly::zero();
    for (alpha, coeff) in op.coefficients() {
        let k = alpha.degree();
        while derivs.len() <= k {
            let next = derivs.last().unwrap().derivative();
            derivs.push(next);
        }
        for b in f.breakpoints() {
            if !f.smoothness_class_at(b).admits(k) {
                return Err(Error::UndefinedDerivative { order: k, at: format_rational(b) });
            }
        }
        let a = coeff.as_piecewise()?;
        out = out.add(&a.mul(&derivs[k]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffop::{CoefficientFn, DiffOperator};
    use crate::scalar::{int, rat};

    fn up(c: &[i64]) -> UPoly {
        UPoly::new(c.iter().map(|&v| int(v)).collect())
    }

    fn abs_x() -> PiecewisePoly {
        witness_cm(0, &int(0))
    }

    #[test]
    fn derivative_examples() {
        let f = witness_cm(2, &int(0));
        let d = f.derivative();
        assert_eq!(d.pieces(), &[up(&[0, 0, -3]), up(&[0, 0, 3])]);
        let five = PiecewisePoly::polynomial(up(&[5]));
        assert!(five.derivative().is_zero());
        assert_eq!(abs_x().derivative().pieces(), &[up(&[-1]), up(&[1])]);
    }

    #[test]
    fn class_examples() {
        assert_eq!(witness_cm(2, &int(0)).smoothness_class_at(&int(0)), Smoothness::Class(2));
        assert_eq!(abs_x().smoothness_class_at(&int(0)), Smoothness::Class(0));
        let cube = PiecewisePoly::polynomial(up(&[0, 0, 0, 1]));
        assert_eq!(cube.smoothness_class_at(&int(0)), Smoothness::Smooth);
        let step = PiecewisePoly::new(vec![int(0)], vec![up(&[0]), up(&[1])]).unwrap();
        assert_eq!(step.smoothness_class_at(&int(0)), Smoothness::Discontinuous);
        assert_eq!(abs_x().smoothness_class_at(&int(1)), Smoothness::Smooth);
    }

    #[test]
    fn witness_examples() {
        assert_eq!(abs_x().pieces(), &[up(&[0, -1]), up(&[0, 1])]);
        let w = witness_cm(1, &int(1));
        assert_eq!(w.smoothness_class_at(&int(1)), Smoothness::Class(1));
        assert_eq!(w.eval(&int(3)), int(4));
        assert_eq!(w.eval(&int(-1)), int(-4));
        for m in 0..=8 {
            for x0 in [int(0), rat(1, 3), int(-2)] {
                assert_eq!(witness_cm(m, &x0).smoothness_class_at(&x0), Smoothness::Class(m));
            }
        }
    }

    #[test]
    fn apply_examples() {
        let d = DiffOperator::derivative(1, 0);
        let out = pw_apply_operator(&d, &witness_cm(2, &int(0))).unwrap();
        // 3x|x|
        let expected = witness_cm(1, &int(0)).scale(&int(3));
        assert!(out.same_function(&expected));

        let mult_x = DiffOperator::multiplication(QPoly::var(1, 0));
        let out = pw_apply_operator(&mult_x, &abs_x()).unwrap();
        assert!(out.same_function(&witness_cm(1, &int(0))));
        assert_eq!(out.smoothness_class_at(&int(0)), Smoothness::Class(1));

        let d2 = DiffOperator::zero(1)
            .with(MultiIndex::from([2]), CoefficientFn::Poly(QPoly::one(1)))
            .unwrap();
        assert!(matches!(
            pw_apply_operator(&d2, &abs_x()),
            Err(Error::UndefinedDerivative { order: 2, .. })
        ));

        let zero = DiffOperator::zero(1);
        assert!(pw_apply_operator(&zero, &abs_x()).unwrap().is_zero());
    }

    #[test]
    fn refine_keeps_values() {
        let f = witness_cm(1, &int(0));
        let g = witness_cm(0, &int(1));
        let sum = f.add(&g);
        assert_eq!(sum.breakpoints(), &[int(0), int(1)]);
        for x in [int(-2), rat(1, 2), int(3), int(0), int(1)] {
            assert_eq!(sum.eval(&x), f.eval(&x) + g.eval(&x));
        }
        let prod = f.mul(&g);
        for x in [int(-2), rat(1, 2), int(3)] {
            assert_eq!(prod.eval(&x), f.eval(&x) * g.eval(&x));
        }
    }

    #[test]
    fn json_form() {
        let w = witness_cm(1, &rat(1, 2));
        let v = w.to_json();
        assert_eq!(v["breakpoints"], json!(["1/2"]));
        assert_eq!(PiecewisePoly::from_json(&v).unwrap(), w);
        assert!(PiecewisePoly::from_json(&json!({"breakpoints": ["1"], "pieces": [["1"]]})).is_err());
    }
}
