//! Recovering a differential operator from a black box by monomial probing.
//!
//! Coefficients are defined by induction on `|α|`: `a_0 = u(1)` and
//!
//! ```text
//! a_α(x) = (1/α!) · [ u(x^α)(x) − Σ_{|β|<|α|} a_β(x) · ∂^β x^α (x) ]
//! ```
//!
//! so that `(u − P)(x^β) = 0` for every `|β| ≤ m`. Without the `1/α!`
//! factor that identity fails whenever `α! > 1`; [`Normalization::Omitted`]
//! keeps the unnormalized variant available for comparison.

use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::diffop::{CoefficientFn, DiffOperator, SampledGrid};
use crate::error::{check_dim, Error, Result};
use crate::jets::SmoothFn;
use crate::multiindex::{enumerate_upto, MultiIndex};
use crate::poly::{Poly, QPoly};
use crate::random::{self, TrialRng};
use crate::scalar::{Rational, Scalar};
use crate::smoothness::Smoothness;

/// Evaluation of `u(f)(x)` in one scalar mode.
pub trait Probe<T: Scalar>: Send + Sync {
    fn eval(&self, f: &dyn SmoothFn<T>, x: &[T]) -> Result<T>;
}

/// A black-box morphism, evaluable in both scalar modes.
pub trait Evaluator: Probe<Rational> + Probe<f64> {
    /// `u(p)` as a polynomial, when the box can produce one.
    fn symbolic(&self, _p: &QPoly) -> Result<QPoly> {
        Err(Error::Unsupported(format!("{} has no symbolic mode", self.describe())))
    }

    fn describe(&self) -> String;
}

/// Evaluation-only view of a morphism `C^m → C^r` on a chart of dimension `n`.
///
/// Linearity and locality are assumed, not enforced; see
/// [`linearity_spot_check`] and the locality module.
#[derive(Clone)]
pub struct BlackBox {
    dim: usize,
    source_class: u32,
    target_class: u32,
    inner: Arc<dyn Evaluator>,
}

impl BlackBox {
    pub fn new(dim: usize, source_class: u32, target_class: u32, inner: Arc<dyn Evaluator>) -> Self {
        BlackBox { dim, source_class, target_class, inner }
    }

    /// Black box backed by an operator (self-test).
    pub fn from_operator(op: DiffOperator, source_class: u32, target_class: u32) -> Self {
        let dim = op.dim();
        Self::new(dim, source_class, target_class, Arc::new(OperatorBox(op)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source_class(&self) -> u32 {
        self.source_class
    }

    pub fn target_class(&self) -> u32 {
        self.target_class
    }

    pub fn describe(&self) -> String {
        self.inner.describe()
    }

    pub fn eval<T: Scalar>(&self, f: &dyn SmoothFn<T>, x: &[T]) -> Result<T>
    where
        dyn Evaluator: Probe<T>,
    {
        check_dim(self.dim, f.dim())?;
        check_dim(self.dim, x.len())?;
        Probe::<T>::eval(&*self.inner, f, x)
    }

    pub fn symbolic(&self, p: &QPoly) -> Result<QPoly> {
        check_dim(self.dim, p.dim())?;
        self.inner.symbolic(p)
    }
}

impl fmt::Debug for BlackBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBox")
            .field("dim", &self.dim)
            .field("source_class", &self.source_class)
            .field("target_class", &self.target_class)
            .field("inner", &self.inner.describe())
            .finish()
    }
}

/// A genuine differential operator.
pub struct OperatorBox(pub DiffOperator);

impl<T: Scalar> Probe<T> for OperatorBox {
    fn eval(&self, f: &dyn SmoothFn<T>, x: &[T]) -> Result<T> {
        self.0.apply(f, x)
    }
}

impl Evaluator for OperatorBox {
    fn symbolic(&self, p: &QPoly) -> Result<QPoly> {
        self.0.apply_symbolic(p)
    }

    fn describe(&self) -> String {
        "differential operator".into()
    }
}

/// Nonlocal adversary `u(f)(x) = P(f)(x) + f(x + shift)`.
pub struct ShiftBox {
    pub base: Option<DiffOperator>,
    pub shift: Vec<Rational>,
}

impl<T: Scalar> Probe<T> for ShiftBox {
    fn eval(&self, f: &dyn SmoothFn<T>, x: &[T]) -> Result<T> {
        let moved: Vec<T> = x
            .iter()
            .zip(&self.shift)
            .map(|(xi, s)| xi.clone() + T::from_rational(s))
            .collect();
        let shifted = f.value(&moved)?;
        match &self.base {
            Some(op) => Ok(op.apply(f, x)? + shifted),
            None => Ok(shifted),
        }
    }
}

impl Evaluator for ShiftBox {
    fn symbolic(&self, p: &QPoly) -> Result<QPoly> {
        let shifted = p.shifted(&self.shift)?;
        match &self.base {
            Some(op) => Ok(op.apply_symbolic(p)?.add(&shifted)),
            None => Ok(shifted),
        }
    }

    fn describe(&self) -> String {
        "nonlocal shift".into()
    }
}

/// Nonlinear adversary `u(f) = f²`.
pub struct SquareBox;

impl<T: Scalar> Probe<T> for SquareBox {
    fn eval(&self, f: &dyn SmoothFn<T>, x: &[T]) -> Result<T> {
        let v = f.value(x)?;
        Ok(v.clone() * v)
    }
}

impl Evaluator for SquareBox {
    fn symbolic(&self, p: &QPoly) -> Result<QPoly> {
        Ok(p.mul(p))
    }

    fn describe(&self) -> String {
        "nonlinear square".into()
    }
}

/// Nonlinear adversary `u(f) = |f|`.
pub struct AbsBox;

impl<T: Scalar> Probe<T> for AbsBox {
    fn eval(&self, f: &dyn SmoothFn<T>, x: &[T]) -> Result<T> {
        Ok(f.value(x)?.magnitude())
    }
}

impl Evaluator for AbsBox {
    fn describe(&self) -> String {
        "nonlinear absolute value".into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide by `α!`, which makes `(u − P)(x^β) = 0` hold.
    #[default]
    DivideByFactorial,
    /// The induction formula without the `1/α!` factor.
    Omitted,
}

#[derive(Clone, Copy, Debug)]
pub enum Extraction<'a> {
    /// Exact polynomial coefficients from the box's symbolic mode.
    Symbolic,
    /// Float samples of each coefficient at the given grid points.
    Sampled(&'a [Vec<f64>]),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Clone, Debug)]
pub struct ReconstructionReport {
    pub operator: DiffOperator,
    pub residual: f64,
    pub probes_used: usize,
    pub mode: Mode,
}

/// Recovers `P = Σ_{|α|≤m} a_α ∂^α` from `u` by probing with `x^α`.
pub fn extract_coefficients(u: &BlackBox, m: usize, how: Extraction<'_>) -> Result<DiffOperator> {
    extract_with(u, m, how, Normalization::DivideByFactorial)
}

pub fn extract_with(
    u: &BlackBox,
    m: usize,
    how: Extraction<'_>,
    normalization: Normalization,
) -> Result<DiffOperator> {
    match how {
        Extraction::Symbolic => extract_symbolic(u, m, normalization),
        Extraction::Sampled(grid) => extract_sampled(u, m, grid, normalization),
    }
}

fn probe_error(alpha: &MultiIndex, e: Error) -> Error {
    Error::Probe { alpha: alpha.clone(), reason: e.to_string() }
}

fn extract_symbolic(u: &BlackBox, m: usize, normalization: Normalization) -> Result<DiffOperator> {
    let n = u.dim();
    let indices = enumerate_upto(n, m);
    let mut found: Vec<(MultiIndex, QPoly)> = Vec::new();
    for alpha in &indices {
        let probe = QPoly::monomial(alpha.clone());
        let mut a = u.symbolic(&probe).map_err(|e| probe_error(alpha, e))?;
        for (beta, a_beta) in &found {
            if beta.degree() < alpha.degree() {
                a = a.sub(&a_beta.mul(&probe.derivative(beta)?));
            }
        }
        if normalization == Normalization::DivideByFactorial {
            a = a.scale(&Rational::new(1.into(), alpha.factorial()));
        }
        if !a.is_zero() {
            found.push((alpha.clone(), a));
        }
    }
    DiffOperator::from_polys(n, found)?.with_nominal_order(m)
}

fn extract_sampled(
    u: &BlackBox,
    m: usize,
    grid: &[Vec<f64>],
    normalization: Normalization,
) -> Result<DiffOperator> {
    let n = u.dim();
    for x in grid {
        check_dim(n, x.len())?;
    }
    let indices = enumerate_upto(n, m);
    // samples[k][j] = a_{indices[k]}(grid[j])
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(indices.len());
    let probes: Vec<Poly<f64>> = indices.iter().map(|a| Poly::monomial(a.clone())).collect();
    for (k, alpha) in indices.iter().enumerate() {
        let scale = 1.0 / Scalar::to_f64(&Rational::from_integer(alpha.factorial()));
        let lower: Vec<(usize, Poly<f64>)> = indices[..k]
            .iter()
            .enumerate()
            .filter(|(_, b)| b.degree() < alpha.degree())
            .map(|(i, b)| probes[k].derivative(b).map(|d| (i, d)))
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(grid.len());
        for (j, x) in grid.iter().enumerate() {
            let mut v = u.eval(&probes[k], x).map_err(|e| probe_error(alpha, e))?;
            for (i, d) in &lower {
                if d.is_zero() {
                    continue;
                }
                v -= samples[*i][j] * d.eval(x)?;
            }
            if normalization == Normalization::DivideByFactorial {
                v *= scale;
            }
            values.push(v);
        }
        samples.push(values);
    }
    let declared = Smoothness::Class(u.target_class());
    let mut op = DiffOperator::zero(n);
    for (alpha, values) in indices.into_iter().zip(samples) {
        let g = SampledGrid::new(grid.to_vec(), values, declared)?;
        op = op.with(alpha, CoefficientFn::Grid(g))?;
    }
    op.with_nominal_order(m)
}

/// `max |u(f)(x) − P(f)(x)|` over tests and grid points.
pub fn residual_check<T: Scalar>(
    u: &BlackBox,
    p: &DiffOperator,
    tests: &[&dyn SmoothFn<T>],
    grid: &[Vec<T>],
) -> Result<T>
where
    dyn Evaluator: Probe<T>,
{
    let mut worst = T::zero();
    for f in tests {
        for x in grid {
            let r = (u.eval(*f, x)? - p.apply(*f, x)?).magnitude();
            if r > worst {
                worst = r;
            }
        }
    }
    Ok(worst)
}

/// Largest coefficient of `u(f) − P(f)` over the tests, computed symbolically.
pub fn residual_symbolic(u: &BlackBox, p: &DiffOperator, tests: &[QPoly]) -> Result<Rational> {
    let mut worst = Rational::zero();
    for f in tests {
        let diff = u.symbolic(f)?.sub(&p.apply_symbolic(f)?);
        for (_, c) in diff.terms() {
            if c.abs() > worst {
                worst = c.abs();
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearityReport {
    pub pass: bool,
    pub worst: Rational,
    pub trials: usize,
}

/// Checks `u(f + c·g) = u(f) + c·u(g)` exactly for random polynomial pairs.
///
/// The first trial always uses `g = −f, c = 1`.
pub fn linearity_spot_check(
    u: &BlackBox,
    trials: usize,
    grid: &[Vec<Rational>],
    rng: &mut TrialRng,
) -> Result<LinearityReport> {
    let n = u.dim();
    let mut worst = Rational::zero();
    for t in 0..trials {
        let f = random::nonzero_polynomial(rng, n, 3, 4);
        let (g, c) = if t == 0 {
            (f.scale(&Rational::from_int(-1)), Rational::from_int(1))
        } else {
            (random::polynomial(rng, n, 3, 4), random::rational(rng, 5))
        };
        let combo = f.add(&g.scale(&c));
        for x in grid {
            let lhs = u.eval(&combo, x)?;
            let rhs = u.eval(&f, x)? + c.clone() * u.eval(&g, x)?;
            let v = (lhs - rhs).abs();
            if v > worst {
                worst = v;
            }
        }
    }
    Ok(LinearityReport { pass: worst.is_zero(), worst, trials })
}

/// Symbolic extraction followed by a symbolic residual over `tests`.
pub fn reconstruct_symbolic(u: &BlackBox, m: usize, tests: &[QPoly]) -> Result<ReconstructionReport> {
    let operator = extract_coefficients(u, m, Extraction::Symbolic)?;
    let residual = Scalar::to_f64(&residual_symbolic(u, &operator, tests)?);
    Ok(ReconstructionReport {
        probes_used: enumerate_upto(u.dim(), m).len(),
        operator,
        residual,
        mode: Mode::Exact,
    })
}

/// Sampled extraction followed by a float residual over `tests` on `grid`.
pub fn reconstruct_sampled(
    u: &BlackBox,
    m: usize,
    grid: &[Vec<f64>],
    tests: &[&dyn SmoothFn<f64>],
) -> Result<ReconstructionReport> {
    let operator = extract_coefficients(u, m, Extraction::Sampled(grid))?;
    let residual = residual_check(u, &operator, tests, grid)?;
    Ok(ReconstructionReport {
        probes_used: enumerate_upto(u.dim(), m).len() * grid.len(),
        operator,
        residual,
        mode: Mode::Float,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffop::operator_equal;
    use crate::scalar::{int, rat};

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

    /// Straight transcription of the induction, evaluated at one point with
    /// plain rational arithmetic on explicit probe values.
    fn brute_force_coefficients(
        u: impl Fn(&QPoly, &[Rational]) -> Rational,
        n: usize,
        m: usize,
        x: &[Rational],
        divide: bool,
    ) -> Vec<(MultiIndex, Rational)> {
        let mut out: Vec<(MultiIndex, Rational)> = Vec::new();
        for alpha in enumerate_upto(n, m) {
            let probe = QPoly::monomial(alpha.clone());
            let mut v = u(&probe, x);
            for (beta, a) in &out {
                if beta.degree() < alpha.degree() {
                    let d = probe.derivative(beta).unwrap().eval(x).unwrap();
                    v -= a * d;
                }
            }
            if divide {
                v /= Rational::from_integer(alpha.factorial());
            }
            out.push((alpha, v));
        }
        out
    }

    #[test]
    fn recovers_first_derivative() {
        let u = BlackBox::from_operator(DiffOperator::derivative(1, 0), 1, 0);
        let p = extract_coefficients(&u, 1, Extraction::Symbolic).unwrap();
        assert!(p.coefficient(&[0].into()).is_none());
        assert!(operator_equal(&p, &DiffOperator::derivative(1, 0), &[], 0.0).unwrap());
    }

    #[test]
    fn recovers_three_plus_x_d2() {
        let op = three_plus_x_d2();
        let u = BlackBox::from_operator(op.clone(), 2, 0);
        let p = extract_coefficients(&u, 2, Extraction::Symbolic).unwrap();
        assert!(operator_equal(&p, &op, &[], 0.0).unwrap());

        // oracle at several points: (3, 0, x)
        for x in [int(0), rat(1, 2), int(-3)] {
            let oracle = brute_force_coefficients(
                |f, x| op.apply(f, x).unwrap(),
                1,
                2,
                std::slice::from_ref(&x),
                true,
            );
            assert_eq!(oracle[0].1, int(3));
            assert_eq!(oracle[1].1, int(0));
            assert_eq!(oracle[2].1, x.clone());
            for (alpha, v) in oracle {
                let got = p
                    .coefficient(&alpha)
                    .map(|c| c.eval(std::slice::from_ref(&x)).unwrap())
                    .unwrap_or_else(Rational::zero);
                assert_eq!(got, v);
            }
        }
    }

    #[test]
    fn recovers_mixed_partial() {
        let op = DiffOperator::from_polys(2, [([1, 1].into(), QPoly::one(2))]).unwrap();
        let u = BlackBox::from_operator(op.clone(), 2, 0);
        let p = extract_coefficients(&u, 2, Extraction::Symbolic).unwrap();
        assert_eq!(p.coefficients().count(), 1);
        assert!(operator_equal(&p, &op, &[], 0.0).unwrap());
        let oracle = brute_force_coefficients(
            |f, x| op.apply(f, x).unwrap(),
            2,
            2,
            &[rat(1, 3), int(2)],
            true,
        );
        for (alpha, v) in oracle {
            let want = if alpha == MultiIndex::from([1, 1]) { int(1) } else { int(0) };
            assert_eq!(v, want, "{alpha}");
        }
    }

    #[test]
    fn omitted_normalization_doubles_second_order() {
        let u = BlackBox::from_operator(three_plus_x_d2(), 2, 0);
        let p = extract_with(&u, 2, Extraction::Symbolic, Normalization::Omitted).unwrap();
        match p.coefficient(&[2].into()) {
            Some(CoefficientFn::Poly(a2)) => assert_eq!(*a2, QPoly::var(1, 0).scale(&int(2))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sampled_extraction_matches() {
        let op = three_plus_x_d2();
        let u = BlackBox::from_operator(op.clone(), 2, 0);
        let grid: Vec<Vec<f64>> = (0..11).map(|i| vec![-1.0 + 0.2 * i as f64]).collect();
        let p = extract_coefficients(&u, 2, Extraction::Sampled(&grid)).unwrap();
        assert!(operator_equal(&p, &op, &grid, 1e-9).unwrap());
    }

    #[test]
    fn residual_examples() {
        let op = three_plus_x_d2();
        let u = BlackBox::from_operator(op.clone(), 2, 0);
        let tests = [
            QPoly::monomial([3].into()),
            QPoly::monomial([4].into()),
            QPoly::from_ints(1, &[(&[0], 1), (&[1], 3), (&[2], 3), (&[3], 1)]),
        ];
        let p = extract_coefficients(&u, 2, Extraction::Symbolic).unwrap();
        let refs: Vec<&dyn SmoothFn<Rational>> = tests.iter().map(|t| t as _).collect();
        let grid: Vec<Vec<Rational>> = (-2..=2).map(|i| vec![rat(i, 2)]).collect();
        assert_eq!(residual_check(&u, &p, &refs, &grid).unwrap(), int(0));
        assert_eq!(residual_symbolic(&u, &p, &tests).unwrap(), int(0));

        // nonlocal contamination: residual = |f(x + 1)|
        let shift = BlackBox::new(
            1,
            2,
            0,
            Arc::new(ShiftBox { base: Some(op.clone()), shift: vec![int(1)] }),
        );
        let r = residual_check(&shift, &op, &refs, &grid).unwrap();
        // largest |f(x+1)| on the grid: (1 + x + 1)^3 at x = 1
        assert_eq!(r, int(27));
    }

    #[test]
    fn linearity_examples() {
        let grid: Vec<Vec<Rational>> = vec![vec![int(0)], vec![rat(1, 2)], vec![int(2)]];
        let mut r = random::rng(0);
        let op = BlackBox::from_operator(three_plus_x_d2(), 2, 0);
        let rep = linearity_spot_check(&op, 10, &grid, &mut r).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.worst, int(0));

        let sq = BlackBox::new(1, 0, 0, Arc::new(SquareBox));
        assert!(!linearity_spot_check(&sq, 10, &grid, &mut r).unwrap().pass);

        let abs = BlackBox::new(1, 0, 0, Arc::new(AbsBox));
        let rep = linearity_spot_check(&abs, 1, &grid, &mut r).unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn probe_errors_name_the_index() {
        let abs = BlackBox::new(1, 0, 0, Arc::new(AbsBox));
        match extract_coefficients(&abs, 1, Extraction::Symbolic) {
            Err(Error::Probe { alpha, .. }) => assert_eq!(alpha, MultiIndex::from([0])),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_box_gives_zero_operator() {
        let u = BlackBox::from_operator(DiffOperator::zero(3), 3, 0);
        let p = extract_coefficients(&u, 3, Extraction::Symbolic).unwrap();
        assert!(p.is_zero(0.0));
    }
}
