//! Linear differential operators `P = Σ_α a_α(x) ∂^α` in a single chart.

use std::collections::{BTreeMap, HashMap};

use serde_json::{json, Value};

use crate::error::{check_dim, Error, Result};
use crate::jets::{check_order, SmoothFn};
use crate::multiindex::MultiIndex;
use crate::poly::QPoly;
use crate::pwpoly::{PiecewisePoly, UPoly};
use crate::scalar::{Rational, Scalar};
use crate::smoothness::Smoothness;

/// Coefficient values sampled on a finite point set (float mode).
#[derive(Clone, Debug)]
pub struct SampledGrid {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    declared: Smoothness,
    index: HashMap<Vec<u64>, usize>,
    peak: f64,
}

impl SampledGrid {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>, declared: Smoothness) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::Parameter(format!(
                "{} grid points but {} values",
                points.len(),
                values.len()
            )));
        }
        let index = points.iter().enumerate().map(|(i, p)| (bits(p), i)).collect();
        let peak = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        Ok(SampledGrid { points, values, declared, index, peak })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn declared_class(&self) -> Smoothness {
        self.declared
    }

    /// Value at a grid node; exact match first, then nearest within 1e-12.
    pub fn lookup(&self, x: &[f64]) -> Result<f64> {
        if let Some(&i) = self.index.get(&bits(x)) {
            return Ok(self.values[i]);
        }
        self.points
            .iter()
            .position(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= 1e-12))
            .map(|i| self.values[i])
            .ok_or_else(|| Error::Domain(format!("{x:?} is not a grid node")))
    }

    pub fn max_abs(&self) -> f64 {
        self.peak
    }
}

fn bits(x: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 must hash alike
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

#[derive(Clone, Debug)]
pub enum CoefficientFn {
    Poly(QPoly),
    /// One-dimensional piecewise polynomial.
    Piecewise(PiecewisePoly),
    Grid(SampledGrid),
}

impl CoefficientFn {
    /// Exact class for polynomial and piecewise variants; declared for samples.
    pub fn class(&self) -> Smoothness {
        match self {
            CoefficientFn::Poly(_) => Smoothness::Smooth,
            CoefficientFn::Piecewise(p) => p.global_class(),
            CoefficientFn::Grid(g) => g.declared,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, CoefficientFn::Grid(_))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        match self {
            CoefficientFn::Poly(p) => p.is_zero(),
            CoefficientFn::Piecewise(p) => p.is_zero(),
            CoefficientFn::Grid(g) => g.max_abs() <= tol,
        }
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> Result<T> {
        match self {
            CoefficientFn::Poly(p) => p.eval_as(x),
            CoefficientFn::Piecewise(p) => {
                check_dim(1, x.len())?;
                Ok(p.eval_as(&x[0]))
            }
            CoefficientFn::Grid(g) => {
                let xf: Vec<f64> = x.iter().map(Scalar::to_f64).collect();
                let v = g.lookup(&xf)?;
                T::from_f64(v).ok_or_else(|| Error::Domain("non-finite grid value".into()))
            }
        }
    }

    /// Exact piecewise form of a one-dimensional exact coefficient.
    pub fn as_piecewise(&self) -> Result<PiecewisePoly> {
        match self {
            CoefficientFn::Poly(p) => Ok(PiecewisePoly::polynomial(UPoly::from_poly(p)?)),
            CoefficientFn::Piecewise(p) => Ok(p.clone()),
            CoefficientFn::Grid(_) => {
                Err(Error::Inconclusive("sampled coefficients have no exact form".into()))
            }
        }
    }

    /// Restriction to `s ↦ base + s·dir` as a one-dimensional coefficient.
    pub fn along_line(&self, base: &[Rational], dir: &[Rational]) -> Result<CoefficientFn> {
        match self {
            CoefficientFn::Poly(p) => Ok(CoefficientFn::Poly(p.along_line(base, dir)?)),
            CoefficientFn::Piecewise(p) => {
                check_dim(1, base.len())?;
                check_dim(1, dir.len())?;
                if dir[0] != Rational::from_int(1) {
                    return Err(Error::Unsupported(
                        "piecewise coefficients restrict along the unit direction only".into(),
                    ));
                }
                Ok(CoefficientFn::Piecewise(p.shifted(&base[0])))
            }
            CoefficientFn::Grid(_) => {
                Err(Error::Inconclusive("sampled coefficients cannot be restricted".into()))
            }
        }
    }

    fn same_exact(&self, other: &CoefficientFn) -> Option<bool> {
        match (self, other) {
            (CoefficientFn::Poly(a), CoefficientFn::Poly(b)) => Some(a == b),
            (CoefficientFn::Grid(_), _) | (_, CoefficientFn::Grid(_)) => None,
            _ => {
                let a = self.as_piecewise().ok()?;
                let b = other.as_piecewise().ok()?;
                Some(a.same_function(&b))
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CoefficientFn::Poly(p) => json!({ "kind": "poly", "data": p.to_json() }),
            CoefficientFn::Piecewise(p) => json!({ "kind": "pw", "data": p.to_json() }),
            CoefficientFn::Grid(g) => json!({
                "kind": "grid",
                "data": {
                    "points": g.points,
                    "values": g.values,
                    "class": g.declared,
                },
            }),
        }
    }

    pub fn from_json(dim: usize, v: &Value) -> Result<Self> {
        let data = &v["data"];
        match v["kind"].as_str() {
            Some("poly") => Ok(CoefficientFn::Poly(QPoly::from_json(dim, data)?)),
            Some("pw") => {
                if dim != 1 {
                    return Err(Error::Parse("piecewise coefficients require dimension 1".into()));
                }
                Ok(CoefficientFn::Piecewise(PiecewisePoly::from_json(data)?))
            }
            Some("grid") => {
                let points: Vec<Vec<f64>> = serde_json::from_value(data["points"].clone())
                    .map_err(|e| Error::Parse(format!("grid points: {e}")))?;
                let values: Vec<f64> = serde_json::from_value(data["values"].clone())
                    .map_err(|e| Error::Parse(format!("grid values: {e}")))?;
                let declared: Smoothness = match data.get("class") {
                    Some(c) => serde_json::from_value(c.clone())
                        .map_err(|e| Error::Parse(format!("grid class: {e}")))?,
                    None => Smoothness::Class(0),
                };
                if points.iter().any(|p| p.len() != dim) {
                    return Err(Error::Parse("grid point dimension mismatch".into()));
                }
                Ok(CoefficientFn::Grid(SampledGrid::new(points, values, declared)?))
            }
            other => Err(Error::Parse(format!("unknown coefficient kind {other:?}"))),
        }
    }
}

/// Differential operator in normal form. The zero operator has no coefficients.
#[derive(Clone, Debug)]
pub struct DiffOperator {
    dim: usize,
    order: usize,
    coeffs: BTreeMap<MultiIndex, CoefficientFn>,
}

impl DiffOperator {
    pub fn zero(dim: usize) -> Self {
        DiffOperator { dim, order: 0, coeffs: BTreeMap::new() }
    }

    /// Operator with explicit nominal order; all keys must satisfy `|α| ≤ order`.
    pub fn new(
        dim: usize,
        order: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, CoefficientFn)>,
    ) -> Result<Self> {
        let mut op = DiffOperator { dim, order, coeffs: BTreeMap::new() };
        for (alpha, c) in coeffs {
            op.insert(alpha, c)?;
        }
        Ok(op)
    }

    /// Adds a coefficient, raising the nominal order if needed.
    pub fn with(mut self, alpha: MultiIndex, c: CoefficientFn) -> Result<Self> {
        self.order = self.order.max(alpha.degree());
        self.insert(alpha, c)?;
        Ok(self)
    }

    fn insert(&mut self, alpha: MultiIndex, c: CoefficientFn) -> Result<()> {
        check_dim(self.dim, alpha.dim())?;
        if alpha.degree() > self.order {
            return Err(Error::Parameter(format!(
                "coefficient {alpha} exceeds nominal order {}",
                self.order
            )));
        }
        match &c {
            CoefficientFn::Poly(p) => check_dim(self.dim, p.dim())?,
            CoefficientFn::Piecewise(_) => check_dim(1, self.dim)?,
            CoefficientFn::Grid(g) => {
                if let Some(p) = g.points.first() {
                    check_dim(self.dim, p.len())?;
                }
            }
        }
        if c.is_zero(0.0) {
            self.coeffs.remove(&alpha);
        } else {
            self.coeffs.insert(alpha, c);
        }
        Ok(())
    }

    /// `∂_i`.
    pub fn derivative(dim: usize, i: usize) -> Self {
        DiffOperator::zero(dim)
            .with(MultiIndex::unit(dim, i), CoefficientFn::Poly(QPoly::one(dim)))
            .expect("unit index matches dimension")
    }

    /// Multiplication by a polynomial.
    pub fn multiplication(p: QPoly) -> Self {
        let dim = p.dim();
        DiffOperator::zero(dim)
            .with(MultiIndex::zero(dim), CoefficientFn::Poly(p))
            .expect("zero index matches dimension")
    }

    /// Operator with polynomial coefficients.
    pub fn from_polys(
        dim: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, QPoly)>,
    ) -> Result<Self> {
        let mut op = DiffOperator::zero(dim);
        for (a, p) in coeffs {
            op = op.with(a, CoefficientFn::Poly(p))?;
        }
        Ok(op)
    }

    pub fn with_nominal_order(mut self, order: usize) -> Result<Self> {
        if let Some(k) = self.coeffs.keys().map(MultiIndex::degree).max() {
            if k > order {
                return Err(Error::Parameter(format!("order {order} below coefficient degree {k}")));
            }
        }
        self.order = order;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nominal_order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&MultiIndex, &CoefficientFn)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> Option<&CoefficientFn> {
        self.coeffs.get(alpha)
    }

    pub fn is_exact(&self) -> bool {
        self.coeffs.values().all(CoefficientFn::is_exact)
    }

    /// Largest `|α|` with a coefficient that is not identically zero;
    /// `None` for the zero operator.
    pub fn effective_order(&self, tol: f64) -> Option<usize> {
        self.coeffs
            .iter()
            .filter(|(_, c)| !c.is_zero(tol))
            .map(|(a, _)| a.degree())
            .max()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.effective_order(tol).is_none()
    }

    /// Class of every stored coefficient.
    pub fn coefficient_class(&self) -> BTreeMap<MultiIndex, Smoothness> {
        self.coeffs.iter().map(|(a, c)| (a.clone(), c.class())).collect()
    }

    /// Minimum coefficient class; `Smooth` for the zero operator.
    pub fn min_coefficient_class(&self) -> Smoothness {
        self.coeffs
            .values()
            .map(CoefficientFn::class)
            .min()
            .unwrap_or(Smoothness::Smooth)
    }

    /// `P(f)(x) = Σ a_α(x)·∂^α f(x)`.
    pub fn apply<T: Scalar>(&self, f: &dyn SmoothFn<T>, x: &[T]) -> Result<T> {
        check_dim(self.dim, f.dim())?;
        check_dim(self.dim, x.len())?;
        let Some(order) = self.effective_order(0.0) else {
            return Ok(T::zero());
        };
        check_order(f.class(), order)?;
        let jet = f.jet(x, order)?;
        let mut acc = T::zero();
        for (alpha, c) in &self.coeffs {
            acc = acc + c.eval(x)? * jet.derivative(alpha)?;
        }
        Ok(acc)
    }

    /// `P(p)` as a polynomial; requires polynomial coefficients.
    pub fn apply_symbolic(&self, p: &QPoly) -> Result<QPoly> {
        check_dim(self.dim, p.dim())?;
        let mut out = QPoly::zero(self.dim);
        for (alpha, c) in &self.coeffs {
            let CoefficientFn::Poly(a) = c else {
                return Err(Error::Unsupported(
                    "symbolic application needs polynomial coefficients".into(),
                ));
            };
            out = out.add(&a.mul(&p.derivative(alpha)?));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dimension": self.dim,
            "order": self.order,
            "coefficients": self
                .coeffs
                .iter()
                .map(|(a, c)| {
                    let mut v = c.to_json();
                    v["alpha"] = json!(a);
                    v
                })
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let dim = v["dimension"]
            .as_u64()
            .ok_or_else(|| Error::Parse("operator.dimension must be a positive integer".into()))?
            as usize;
        if dim == 0 {
            return Err(Error::Parse("operator.dimension must be positive".into()));
        }
        let items = match &v["coefficients"] {
            Value::Array(items) => items.as_slice(),
            Value::Null => &[],
            _ => return Err(Error::Parse("operator.coefficients must be an array".into())),
        };
        let mut op = DiffOperator::zero(dim);
        for item in items {
            let alpha: MultiIndex = serde_json::from_value(item["alpha"].clone())
                .map_err(|e| Error::Parse(format!("coefficient alpha: {e}")))?;
            check_dim(dim, alpha.dim()).map_err(|e| Error::Parse(e.to_string()))?;
            op = op.with(alpha, CoefficientFn::from_json(dim, item)?)?;
        }
        if let Some(order) = v.get("order").and_then(Value::as_u64) {
            op = op.with_nominal_order(order as usize)?;
        }
        Ok(op)
    }
}

/// Coefficientwise comparison: exact when both sides are exact, otherwise
/// `max |a^P_α − a^Q_α| ≤ tol` over the grid.
pub fn operator_equal(p: &DiffOperator, q: &DiffOperator, grid: &[Vec<f64>], tol: f64) -> Result<bool> {
    check_dim(p.dim, q.dim)?;
    let keys: std::collections::BTreeSet<&MultiIndex> =
        p.coeffs.keys().chain(q.coeffs.keys()).collect();
    for alpha in keys {
        match (p.coeffs.get(alpha), q.coeffs.get(alpha)) {
            (Some(a), Some(b)) => {
                if let Some(same) = a.same_exact(b) {
                    if !same {
                        return Ok(false);
                    }
                    continue;
                }
                for x in grid {
                    if (a.eval(x)? - b.eval(x)?).abs() > tol {
                        return Ok(false);
                    }
                }
            }
            (Some(c), None) | (None, Some(c)) => {
                if c.is_exact() {
                    // stored exact coefficients are never zero
                    return Ok(false);
                }
                for x in grid {
                    if c.eval::<f64>(x)?.abs() > tol {
                        return Ok(false);
                    }
                }
            }
            (None, None) => unreachable!(),
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwpoly::witness_cm;
    use crate::scalar::{int, rat};

    /// `3 + x·∂²` in one variable.
    fn three_plus_x_d2() -> DiffOperator {
        DiffOperator::from_polys(
            1,
            [
                (MultiIndex::from([0]), QPoly::constant(1, int(3))),
                (MultiIndex::from([2]), QPoly::var(1, 0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn apply_examples() {
        let d = DiffOperator::derivative(1, 0);
        let x2 = QPoly::monomial([2].into());
        assert_eq!(d.apply(&x2, &[int(3)]).unwrap(), int(6));

        let x3 = QPoly::monomial([3].into());
        // 3·8 + 2·(6·2) = 48
        assert_eq!(three_plus_x_d2().apply(&x3, &[int(2)]).unwrap(), int(48));

        let zero = DiffOperator::zero(1);
        assert_eq!(zero.apply(&x3, &[int(7)]).unwrap(), int(0));

        // float mode agrees
        let v = three_plus_x_d2().apply(&x3.to_f64(), &[2.0]).unwrap();
        assert!((v - 48.0).abs() < 1e-12);
    }

    #[test]
    fn effective_order_examples() {
        assert_eq!(DiffOperator::multiplication(QPoly::constant(1, int(5))).effective_order(0.0), Some(0));
        assert_eq!(three_plus_x_d2().effective_order(0.0), Some(2));
        let zeros = DiffOperator::from_polys(1, [(MultiIndex::from([1]), QPoly::zero(1))]).unwrap();
        assert_eq!(zeros.effective_order(0.0), None);
        assert_eq!(zeros.nominal_order(), 1);
    }

    #[test]
    fn coefficient_class_examples() {
        let classes = three_plus_x_d2().coefficient_class();
        assert!(classes.values().all(|c| *c == Smoothness::Smooth));
        let abs = DiffOperator::zero(1)
            .with([0].into(), CoefficientFn::Piecewise(witness_cm(0, &int(0))))
            .unwrap();
        assert_eq!(abs.min_coefficient_class(), Smoothness::Class(0));
        let cubic = DiffOperator::zero(1)
            .with([0].into(), CoefficientFn::Piecewise(witness_cm(2, &int(0))))
            .unwrap();
        assert_eq!(cubic.min_coefficient_class(), Smoothness::Class(2));
    }

    #[test]
    fn equality_examples() {
        let p = three_plus_x_d2();
        assert!(operator_equal(&p, &p, &[], 1e-9).unwrap());
        let d = DiffOperator::derivative(1, 0);
        let two_d = DiffOperator::from_polys(1, [([1].into(), QPoly::constant(1, int(2)))]).unwrap();
        assert!(!operator_equal(&d, &two_d, &[vec![1.0]], 1e-9).unwrap());

        let grid: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 4.0]).collect();
        let sampled = DiffOperator::zero(1)
            .with(
                [1].into(),
                CoefficientFn::Grid(
                    SampledGrid::new(grid.clone(), vec![2.0 + 1e-12; 5], Smoothness::Class(0)).unwrap(),
                ),
            )
            .unwrap();
        assert!(operator_equal(&two_d, &sampled, &grid, 1e-9).unwrap());
        assert!(!operator_equal(&d, &sampled, &grid, 1e-9).unwrap());
    }

    #[test]
    fn multiplication_and_locality() {
        // order-0 operator multiplies
        let a0 = QPoly::from_ints(2, &[(&[1, 0], 2), (&[0, 1], -1)]);
        let m = DiffOperator::multiplication(a0.clone());
        let f = QPoly::from_ints(2, &[(&[2, 1], 1), (&[0, 0], 3)]);
        let x = [rat(1, 2), int(-3)];
        assert_eq!(m.apply(&f, &x).unwrap(), a0.eval(&x).unwrap() * f.eval(&x).unwrap());

        // functions sharing a 2-jet at x give the same P(f)(x)
        let p = three_plus_x_d2();
        let g = QPoly::monomial([5].into());
        let x0 = [int(1)];
        let taylor = crate::jets::taylor_polynomial(&g, &x0, 2).unwrap();
        assert_eq!(p.apply(&g, &x0).unwrap(), p.apply(&taylor, &x0).unwrap());
    }

    #[test]
    fn symbolic_matches_pointwise() {
        let p = three_plus_x_d2();
        let f = QPoly::from_ints(1, &[(&[4], 1), (&[1], -2)]);
        let sym = p.apply_symbolic(&f).unwrap();
        for x in [int(-1), rat(2, 3), int(5)] {
            assert_eq!(sym.eval(std::slice::from_ref(&x)).unwrap(), p.apply(&f, &[x]).unwrap());
        }
    }

    #[test]
    fn json_roundtrip() {
        let p = three_plus_x_d2();
        let v = p.to_json();
        let back = DiffOperator::from_json(&v).unwrap();
        assert!(operator_equal(&p, &back, &[], 0.0).unwrap());
        let pw = DiffOperator::zero(1)
            .with([1].into(), CoefficientFn::Piecewise(witness_cm(1, &rat(1, 2))))
            .unwrap();
        let back = DiffOperator::from_json(&pw.to_json()).unwrap();
        assert!(operator_equal(&pw, &back, &[], 0.0).unwrap());
        assert!(DiffOperator::from_json(&json!({"dimension": 2, "coefficients": [{"alpha": [1], "kind": "poly", "data": []}]})).is_err());
    }

    #[test]
    fn rejects_inconsistent_coefficients() {
        assert!(DiffOperator::new(1, 1, [([2].into(), CoefficientFn::Poly(QPoly::one(1)))]).is_err());
        assert!(DiffOperator::zero(2)
            .with([1, 0].into(), CoefficientFn::Piecewise(witness_cm(0, &int(0))))
            .is_err());
    }
}
