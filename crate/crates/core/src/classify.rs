//! Regime classification of operators `C^m → C^r` with exact piecewise witnesses.
//!
//! An exact operator of effective order `d` maps `C^m` into `C^r` only when
//! `d ≤ m − r` and all coefficients are `C^r`. Violations are confirmed by
//! applying the operator to an explicit piecewise-polynomial input and reading
//! off the exact smoothness class of the output.

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::diffop::{CoefficientFn, DiffOperator};
use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::pwpoly::{pw_apply_operator, witness_cm, PiecewisePoly, UPoly};
use crate::scalar::{format_rational, int, rat, Rational};
use crate::smoothness::Smoothness;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `r < m`: order at most `m − r`.
    OrderBounded(u32),
    /// `r = m`: multiplication by a `C^m` function.
    MultiplicationOnly,
    /// `r > m`: only the zero operator.
    ForcedZero,
}

impl Regime {
    pub fn of(m: u32, r: u32) -> Regime {
        match r.cmp(&m) {
            std::cmp::Ordering::Less => Regime::OrderBounded(m - r),
            std::cmp::Ordering::Equal => Regime::MultiplicationOnly,
            std::cmp::Ordering::Greater => Regime::ForcedZero,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Regime::OrderBounded(k) => json!({ "kind": "order_bounded", "max_order": k }),
            Regime::MultiplicationOnly => json!({ "kind": "multiplication_only" }),
            Regime::ForcedZero => json!({ "kind": "forced_zero" }),
        }
    }
}

/// Smoothness of `P(b)` at the witness breakpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessOutput {
    Class(Smoothness),
    /// `P` differentiates the witness more often than it allows.
    UndefinedDerivative { order: usize },
}

impl WitnessOutput {
    fn below(&self, r: u32) -> bool {
        match self {
            WitnessOutput::Class(c) => !c.is_at_least(r),
            WitnessOutput::UndefinedDerivative { .. } => true,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            WitnessOutput::Class(c) => json!({ "class": c.to_string() }),
            WitnessOutput::UndefinedDerivative { order } => json!({ "undefined_derivative": order }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// Effective order exceeds `m − r`.
    Order,
    /// A coefficient is not of class `C^r`.
    CoefficientClass,
}

/// A confirmed failure of `P: C^m → C^r`.
///
/// The input is `F(x) = b(⟨x − point, direction⟩/|direction|²)`; `output` is
/// the class of `P(F)` restricted to the line `point + s·direction` at `s = breakpoint`.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub alpha: MultiIndex,
    pub point: Vec<Rational>,
    pub direction: Vec<Rational>,
    pub breakpoint: Rational,
    pub witness: PiecewisePoly,
    pub output: WitnessOutput,
    pub required: u32,
}

impl Violation {
    pub fn to_json(&self) -> Value {
        let q = |v: &[Rational]| v.iter().map(format_rational).collect::<Vec<_>>();
        json!({
            "kind": match self.kind {
                ViolationKind::Order => "order",
                ViolationKind::CoefficientClass => "coefficient_class",
            },
            "alpha": self.alpha,
            "point": q(&self.point),
            "direction": q(&self.direction),
            "breakpoint": format_rational(&self.breakpoint),
            "witness": self.witness.to_json(),
            "output": self.output.to_json(),
            "required_class": self.required,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationVerdict {
    pub regime: Regime,
    pub pass: bool,
    pub effective_order: Option<usize>,
    pub min_coefficient_class: Smoothness,
    pub violation: Option<Violation>,
}

impl ClassificationVerdict {
    pub fn to_json(&self) -> Value {
        json!({
            "regime": self.regime.to_json(),
            "pass": self.pass,
            "effective_order": self.effective_order,
            "min_coefficient_class": self.min_coefficient_class.to_string(),
            "violation": self.violation.as_ref().map(Violation::to_json),
        })
    }
}

fn require_exact(p: &DiffOperator) -> Result<()> {
    if p.is_exact() {
        Ok(())
    } else {
        Err(Error::Inconclusive("classification needs exact coefficients".into()))
    }
}

/// Decides whether `P` maps `C^m` into `C^r`, attaching a witness on failure.
pub fn classify(p: &DiffOperator, m: u32, r: u32) -> Result<ClassificationVerdict> {
    require_exact(p)?;
    let regime = Regime::of(m, r);
    let effective_order = p.effective_order(0.0);
    let min_class = p.min_coefficient_class();
    let order_ok = match effective_order {
        None => true,
        Some(d) => d as i64 <= m as i64 - r as i64,
    };
    let pass = order_ok && min_class.is_at_least(r);
    let violation = if pass { None } else { find_violation_witness(p, m, r)? };
    Ok(ClassificationVerdict {
        regime,
        pass,
        effective_order,
        min_coefficient_class: min_class,
        violation,
    })
}

/// Searches for an input `b ∈ C^m` with `P(b) ∉ C^r`.
pub fn find_violation_witness(p: &DiffOperator, m: u32, r: u32) -> Result<Option<Violation>> {
    require_exact(p)?;
    let Some(d) = p.effective_order(0.0) else {
        return Ok(None);
    };
    if d as i64 > m as i64 - r as i64 {
        if let Some(v) = order_witness(p, d, m, r)? {
            return Ok(Some(v));
        }
    }
    coefficient_witness(p, m, r)
}

/// Rational candidates `0, 1, −1, 1/2, −1/2, 2, −2, 1/3, …`.
fn candidates(count: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero()];
    let mut k = 1i64;
    while out.len() < count {
        for c in [int(k), rat(1, k + 1), int(-k), rat(-1, k + 1)] {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        k += 1;
    }
    out.truncate(count);
    out
}

/// Tuples over `values` in order of their largest index, so that small
/// coordinates are tried first.
fn tuples(values: &[Rational], dim: usize) -> impl Iterator<Item = Vec<Rational>> + '_ {
    (0..values.len()).flat_map(move |top| {
        let side = top + 1;
        (0..side.pow(dim as u32)).filter_map(move |code| {
            let mut idx = Vec::with_capacity(dim);
            let mut c = code;
            for _ in 0..dim {
                idx.push(c % side);
                c /= side;
            }
            if idx.contains(&top) {
                Some(idx.iter().map(|i| values[*i].clone()).collect())
            } else {
                None
            }
        })
    })
}

fn coefficient_breakpoints(p: &DiffOperator) -> Vec<Rational> {
    let mut out: Vec<Rational> = p
        .coefficients()
        .filter_map(|(_, c)| match c {
            CoefficientFn::Piecewise(pw) => Some(pw.breakpoints().to_vec()),
            _ => None,
        })
        .flatten()
        .collect();
    out.sort();
    out.dedup();
    out
}

fn monomial_value(alpha: &MultiIndex, v: &[Rational]) -> Rational {
    alpha.power(v)
}

/// `Σ_{|α|=d} a_α(x)·v^α` evaluated exactly.
fn symbol_at(p: &DiffOperator, d: usize, x: &[Rational], v: &[Rational]) -> Result<Rational> {
    let mut acc = Rational::zero();
    for (alpha, c) in p.coefficients().filter(|(a, _)| a.degree() == d) {
        let w = monomial_value(alpha, v);
        if !w.is_zero() {
            acc += c.eval::<Rational>(x)? * w;
        }
    }
    Ok(acc)
}

fn max_coefficient_degree(p: &DiffOperator) -> usize {
    p.coefficients()
        .map(|(_, c)| match c {
            CoefficientFn::Poly(q) => q.degree().unwrap_or(0),
            CoefficientFn::Piecewise(pw) => pw.pieces().iter().filter_map(UPoly::degree).max().unwrap_or(0),
            CoefficientFn::Grid(_) => 0,
        })
        .max()
        .unwrap_or(0)
}

/// Picks a direction `v` and point `y` with nonzero principal symbol, then
/// applies the one-dimensional reduction of `P` to `s^m·|s|`.
fn order_witness(p: &DiffOperator, d: usize, m: u32, r: u32) -> Result<Option<Violation>> {
    let n = p.dim();
    let breakpoints = coefficient_breakpoints(p);
    let directions: Vec<Vec<Rational>> = if n == 1 {
        vec![vec![int(1)]]
    } else {
        let axes = (0..n).map(|i| {
            let mut e = vec![Rational::zero(); n];
            e[i] = Rational::one();
            e
        });
        let grid: Vec<Vec<Rational>> = tuples(&candidates(d + 1), n).collect();
        axes.chain(grid.into_iter().filter(|v| v.iter().any(|c| !c.is_zero())))
            .collect()
    };
    let point_budget = max_coefficient_degree(p) + breakpoints.len() + 2;
    let points: Vec<Vec<Rational>> = tuples(&candidates(point_budget), n)
        .filter(|y| n != 1 || !breakpoints.contains(&y[0]))
        .collect();
    for v in &directions {
        for y in &points {
            if symbol_at(p, d, y, v)?.is_zero() {
                continue;
            }
            let reduced = reduce_to_line(p, y, v)?;
            let witness = witness_cm(m, &Rational::zero());
            let output = match pw_apply_operator(&reduced, &witness) {
                Ok(out) => WitnessOutput::Class(out.smoothness_class_at(&Rational::zero())),
                Err(Error::UndefinedDerivative { order, .. }) => WitnessOutput::UndefinedDerivative { order },
                Err(e) => return Err(e),
            };
            if !output.below(r) {
                // the principal term fixes the class wherever the symbol is nonzero
                return Ok(None);
            }
            let alpha = p
                .coefficients()
                .filter(|(a, _)| a.degree() == d)
                .find(|(a, c)| {
                    !monomial_value(a, v).is_zero() && c.eval::<Rational>(y).map(|x| !x.is_zero()).unwrap_or(false)
                })
                .map(|(a, _)| a.clone())
                .unwrap_or_else(|| MultiIndex::zero(n));
            return Ok(Some(Violation {
                kind: ViolationKind::Order,
                alpha,
                point: y.clone(),
                direction: v.clone(),
                breakpoint: Rational::zero(),
                witness,
                output,
                required: r,
            }));
        }
    }
    Ok(None)
}

/// `Q = Σ_k B_k(s)/|v|^{2k}·∂_s^k` with `B_k(s) = Σ_{|α|=k} a_α(y + s·v)·v^α`,
/// so that `P(b∘t)(y + s·v) = Q(b)(s)` for `t(x) = ⟨x − y, v⟩/|v|²`.
fn reduce_to_line(p: &DiffOperator, y: &[Rational], v: &[Rational]) -> Result<DiffOperator> {
    let norm2 = v.iter().fold(Rational::zero(), |acc, c| acc + c * c);
    let order = p.nominal_order();
    let mut reduced = DiffOperator::zero(1);
    for k in 0..=order {
        let mut b = PiecewisePoly::zero();
        for (alpha, c) in p.coefficients().filter(|(a, _)| a.degree() == k) {
            let w = monomial_value(alpha, v);
            if w.is_zero() {
                continue;
            }
            let restricted = c.along_line(y, v)?.as_piecewise()?;
            b = b.add(&restricted.scale(&w));
        }
        let scale = Rational::one() / num_traits::pow(norm2.clone(), k);
        let b = b.scale(&scale).simplified();
        if !b.is_zero() {
            reduced = reduced.with(MultiIndex::new(vec![k as u32]), CoefficientFn::Piecewise(b))?;
        }
    }
    Ok(reduced)
}

/// Probes each coefficient breakpoint `p` with `(x − p)^k`: the smallest `k`
/// whose coefficient is below `C^r` at `p` yields an output of exactly that class.
fn coefficient_witness(p: &DiffOperator, m: u32, r: u32) -> Result<Option<Violation>> {
    if p.dim() != 1 {
        return Ok(None);
    }
    let order = p.effective_order(0.0).unwrap_or(0);
    for bp in coefficient_breakpoints(p) {
        for k in 0..=order.min(m as usize) {
            let witness = PiecewisePoly::polynomial(UPoly::power_at(&bp, k as u32));
            let out = pw_apply_operator(p, &witness)?;
            let class = out.smoothness_class_at(&bp);
            if !class.is_at_least(r) {
                return Ok(Some(Violation {
                    kind: ViolationKind::CoefficientClass,
                    alpha: MultiIndex::new(vec![k as u32]),
                    point: vec![Rational::zero()],
                    direction: vec![Rational::one()],
                    breakpoint: bp,
                    witness,
                    output: WitnessOutput::Class(class),
                    required: r,
                }));
            }
        }
    }
    Ok(None)
}

/// For `k < m ≤ n` and `P` conforming to `C^m → C^n`, whether `P` also
/// conforms to `C^m → C^k`.
pub fn diagram_consistency(m: u32, n: u32, k: u32, p: &DiffOperator) -> Result<bool> {
    if !(k < m && m <= n) {
        return Err(Error::Parameter(format!("need k < m ≤ n, got k={k}, m={m}, n={n}")));
    }
    if !classify(p, m, n)?.pass {
        return Err(Error::Parameter(format!("operator does not map C^{m} into C^{n}")));
    }
    Ok(classify(p, m, k)?.pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffop::SampledGrid;
    use crate::poly::QPoly;
    use crate::random;
    use proptest::prelude::*;

    fn constant_op(dim: usize, c: i64) -> DiffOperator {
        DiffOperator::multiplication(QPoly::constant(dim, int(c)))
    }

    fn d2() -> DiffOperator {
        DiffOperator::from_polys(1, [([2].into(), QPoly::one(1))]).unwrap()
    }

    #[test]
    fn classify_examples() {
        let v = classify(&constant_op(1, 5), 2, 2).unwrap();
        assert_eq!(v.regime, Regime::MultiplicationOnly);
        assert!(v.pass && v.violation.is_none());

        let v = classify(&d2(), 3, 1).unwrap();
        assert_eq!(v.regime, Regime::OrderBounded(2));
        assert!(v.pass);

        let v = classify(&constant_op(1, 1), 2, 3).unwrap();
        assert_eq!(v.regime, Regime::ForcedZero);
        assert!(!v.pass);
        let w = v.violation.unwrap();
        assert!(w.witness.same_function(&witness_cm(2, &int(0))));
        assert_eq!(w.output, WitnessOutput::Class(Smoothness::Class(2)));
    }

    #[test]
    fn witness_examples() {
        let w = find_violation_witness(&constant_op(1, 1), 2, 3).unwrap().unwrap();
        assert_eq!(w.output, WitnessOutput::Class(Smoothness::Class(2)));

        let w = find_violation_witness(&DiffOperator::derivative(1, 0), 2, 2).unwrap().unwrap();
        assert_eq!(w.kind, ViolationKind::Order);
        assert_eq!(w.output, WitnessOutput::Class(Smoothness::Class(1)));
        // 3x|x| is the image of x²|x|
        let image = pw_apply_operator(&DiffOperator::derivative(1, 0), &w.witness).unwrap();
        assert!(image.same_function(&witness_cm(1, &int(0)).scale(&int(3))));

        for (m, r) in [(0, 0), (2, 1), (1, 3)] {
            assert!(find_violation_witness(&DiffOperator::zero(2), m, r).unwrap().is_none());
        }
    }

    #[test]
    fn order_beyond_source_class_is_undefined() {
        let w = find_violation_witness(&d2(), 1, 0).unwrap().unwrap();
        assert_eq!(w.output, WitnessOutput::UndefinedDerivative { order: 2 });
    }

    #[test]
    fn principal_symbol_avoids_zeros() {
        // x·∂ vanishes at the first candidate point
        let op = DiffOperator::from_polys(1, [([1].into(), QPoly::var(1, 0))]).unwrap();
        let w = find_violation_witness(&op, 1, 1).unwrap().unwrap();
        assert_ne!(w.point[0], int(0));
        assert_eq!(w.output, WitnessOutput::Class(Smoothness::Class(0)));

        // ∂x∂y has zero symbol along both axes
        let op = DiffOperator::from_polys(2, [([1, 1].into(), QPoly::one(2))]).unwrap();
        let w = find_violation_witness(&op, 2, 1).unwrap().unwrap();
        assert!(w.direction.iter().all(|c| !c.is_zero()));
        assert_eq!(w.output, WitnessOutput::Class(Smoothness::Class(0)));
    }

    #[test]
    fn rough_coefficients_are_caught() {
        let a0 = CoefficientFn::Piecewise(witness_cm(1, &rat(1, 2)));
        let op = DiffOperator::zero(1).with([0].into(), a0).unwrap();
        let v = classify(&op, 3, 2).unwrap();
        assert!(!v.pass);
        let w = v.violation.unwrap();
        assert_eq!(w.kind, ViolationKind::CoefficientClass);
        assert_eq!(w.breakpoint, rat(1, 2));
        assert_eq!(w.output, WitnessOutput::Class(Smoothness::Class(1)));
        assert!(classify(&op, 3, 1).unwrap().pass);
    }

    #[test]
    fn sampled_coefficients_are_inconclusive() {
        let g = SampledGrid::new(vec![vec![0.0]], vec![1.0], Smoothness::Smooth).unwrap();
        let op = DiffOperator::zero(1).with([0].into(), CoefficientFn::Grid(g)).unwrap();
        assert!(matches!(classify(&op, 1, 1), Err(Error::Inconclusive(_))));
    }

    #[test]
    fn diagram_examples() {
        let mult = DiffOperator::multiplication(QPoly::from_ints(1, &[(&[2], 1), (&[0], 3)]));
        assert!(diagram_consistency(2, 2, 1, &mult).unwrap());
        assert!(diagram_consistency(3, 4, 0, &DiffOperator::zero(2)).unwrap());
        // c·∂ maps C^3 into C^2 and C^1, but (m, n) = (3, 2) is outside k < m ≤ n
        let d = DiffOperator::from_polys(1, [([1].into(), QPoly::constant(1, int(7)))]).unwrap();
        assert!(classify(&d, 3, 2).unwrap().pass && classify(&d, 3, 1).unwrap().pass);
        assert!(matches!(diagram_consistency(3, 2, 1, &d), Err(Error::Parameter(_))));
        assert!(matches!(diagram_consistency(2, 2, 1, &d), Err(Error::Parameter(_))));
        assert!(matches!(diagram_consistency(2, 2, 2, &mult), Err(Error::Parameter(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn forced_zero_always_has_witness(seed in any::<u64>(), dim in 1usize..=3, m in 0u32..=4) {
            let mut rng = random::rng(seed);
            let order = rng_order(&mut rng);
            let p = random::operator_of_order(&mut rng, dim, order, 2);
            let w = find_violation_witness(&p, m, m + 1).unwrap();
            prop_assert!(w.map(|v| v.output.below(m + 1)).unwrap_or(false));
        }

        #[test]
        fn multiplication_only_rejects_derivatives(seed in any::<u64>(), dim in 1usize..=3, m in 1u32..=4) {
            let mut rng = random::rng(seed);
            let order = 1 + rng_order(&mut rng) % 4;
            let p = random::operator_of_order(&mut rng, dim, order, 2);
            let v = classify(&p, m, m).unwrap();
            prop_assert!(!v.pass);
            prop_assert!(v.violation.is_some());
        }

        #[test]
        fn conforming_operators_pass(seed in any::<u64>(), dim in 1usize..=3, m in 0u32..=4, r in 0u32..=4) {
            prop_assume!(r <= m);
            let mut rng = random::rng(seed);
            let order = (m - r) as usize;
            let d = rng_order(&mut rng) % (order + 1);
            let p = random::operator_of_order(&mut rng, dim, d, 2);
            let v = classify(&p, m, r).unwrap();
            prop_assert!(v.pass);
            prop_assert!(v.violation.is_none());
        }

        #[test]
        fn passing_is_monotone_in_target(seed in any::<u64>(), m in 0u32..=4, n in 0u32..=4) {
            let mut rng = random::rng(seed);
            let class = rng_order(&mut rng) as u32;
            let a = random::coefficient_1d(&mut rng, Some(class));
            let p = DiffOperator::zero(1).with([0].into(), a).unwrap();
            let p = if n >= 1 && rng_order(&mut rng).is_multiple_of(2) {
                p.with([1].into(), random::coefficient_1d(&mut rng, None)).unwrap()
            } else {
                p
            };
            if classify(&p, m, n).unwrap().pass {
                for k in 0..n {
                    prop_assert!(classify(&p, m, k).unwrap().pass);
                }
            }
        }

        #[test]
        fn rough_coefficients_fail_exactly(seed in any::<u64>(), class in 0u32..=3) {
            let mut rng = random::rng(seed);
            let a = random::coefficient_1d(&mut rng, Some(class));
            let p = DiffOperator::zero(1).with([0].into(), a).unwrap();
            let v = classify(&p, 4, class + 1).unwrap();
            prop_assert!(!v.pass);
            let w = v.violation.unwrap();
            prop_assert_eq!(w.output, WitnessOutput::Class(Smoothness::Class(class)));
        }
    }

    fn rng_order(rng: &mut random::TrialRng) -> usize {
        use rand::Rng;
        rng.random_range(0..=4)
    }
}
