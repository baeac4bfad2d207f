//! WebAssembly bindings for the browser demo.
//!
//! Every export takes plain strings and numbers and returns a JSON string;
//! failures come back as `{"error": "..."}`.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use peetre::classify::classify;
use peetre::diffop::DiffOperator;
use peetre::locality::{Cap, SpherePartition};
use peetre::multiindex::MultiIndex;
use peetre::poly::QPoly;
use peetre::pwpoly::{pw_apply_operator, witness_cm, UPoly};
use peetre::random;
use peetre::reconstruct::{extract_coefficients, residual_symbolic, BlackBox, Extraction, ShiftBox};
use peetre::scalar::{format_rational, parse_rational, Rational};
use peetre::{Error, Result};

const CURVE_POINTS: usize = 201;

/// Parses one coefficient per line, `k: c0 c1 c2 …`, meaning
/// `a_k(x) = c0 + c1·x + c2·x² + …`.
pub fn parse_operator(text: &str) -> Result<DiffOperator> {
    let mut op = DiffOperator::zero(1);
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, coeffs) = line
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `k: c0 c1 …`", n + 1)))?;
        let k: u32 = k
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad derivative order {k:?}", n + 1)))?;
        let coeffs = coeffs
            .split_whitespace()
            .map(parse_rational)
            .collect::<Result<Vec<Rational>>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
        let p = UPoly::new(coeffs).to_poly();
        let existing = match op.coefficient(&MultiIndex::from([k])) {
            Some(peetre::diffop::CoefficientFn::Poly(q)) => q.clone(),
            _ => QPoly::zero(1),
        };
        op = op.with(
            MultiIndex::from([k]),
            peetre::diffop::CoefficientFn::Poly(existing.add(&p)),
        )?;
    }
    Ok(op)
}

fn samples() -> Vec<f64> {
    (0..CURVE_POINTS).map(|i| -1.0 + 2.0 * i as f64 / (CURVE_POINTS - 1) as f64).collect()
}

/// Applies the operator to `x^m·|x|` and classifies it for every target class
/// up to `m + 1`.
pub fn witness_curve_json(operator: &str, m: u32) -> Result<Value> {
    let op = parse_operator(operator)?;
    let witness = witness_cm(m, &Rational::from_integer(0.into()));
    let xs = samples();
    let image = match pw_apply_operator(&op, &witness) {
        Ok(img) => json!({
            "values": xs.iter().map(|x| img.eval_f64(*x)).collect::<Vec<_>>(),
            "class_at_zero": img.smoothness_class_at(&Rational::from_integer(0.into())).to_string(),
        }),
        Err(Error::UndefinedDerivative { order, .. }) => json!({ "undefined_derivative": order }),
        Err(e) => return Err(e),
    };
    let verdicts = (0..=m + 1)
        .map(|r| {
            classify(&op, m, r).map(|v| {
                json!({
                    "target_class": r,
                    "pass": v.pass,
                    "regime": v.regime.to_json(),
                })
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "x": xs,
        "witness": xs.iter().map(|x| witness.eval_f64(*x)).collect::<Vec<_>>(),
        "witness_class": format!("C^{m}"),
        "image": image,
        "verdicts": verdicts,
    }))
}

/// Both partition functions on the unit circle, by polar angle from the north pole.
pub fn partition_curves_json(half_angle_degrees: f64, points: usize) -> Result<Value> {
    let p = SpherePartition::new(2, half_angle_degrees.to_radians())?;
    let points = points.clamp(8, 4096);
    let angles: Vec<f64> = (0..=points).map(|i| TAU * i as f64 / points as f64).collect();
    let mut north = Vec::with_capacity(angles.len());
    let mut south = Vec::with_capacity(angles.len());
    for t in &angles {
        let x = [t.sin(), t.cos()];
        north.push(p.phi(Cap::North, &x)?);
        south.push(p.phi(Cap::South, &x)?);
    }
    let max_sum_error = north
        .iter()
        .zip(&south)
        .fold(0.0f64, |m, (a, b)| m.max((a + b - 1.0).abs()));
    Ok(json!({
        "angle": angles,
        "north": north,
        "south": south,
        "max_sum_error": max_sum_error,
        "excluded_half_angle": half_angle_degrees,
    }))
}

/// Reconstructs the operator (or the shift adversary built on it) from
/// probe responses and reports the recovered coefficients and residual.
pub fn reconstruct_json(operator: &str, m: u32, shift: bool, seed: u64) -> Result<Value> {
    let op = parse_operator(operator)?;
    let u = if shift {
        let evaluator = ShiftBox { base: Some(op.clone()), shift: vec![Rational::from_integer(1.into())] };
        BlackBox::new(1, m, 0, Arc::new(evaluator))
    } else {
        BlackBox::from_operator(op.clone(), m, 0)
    };
    let recovered = extract_coefficients(&u, m as usize, Extraction::Symbolic)?;
    let mut rng = random::rng(seed);
    let tests: Vec<QPoly> = (0..20)
        .map(|_| random::nonzero_polynomial(&mut rng, 1, m as usize + 2, 4))
        .collect();
    let residual = residual_symbolic(&u, &recovered, &tests)?;
    let coefficients: Vec<Value> = recovered
        .coefficients()
        .map(|(alpha, c)| {
            let p = match c {
                peetre::diffop::CoefficientFn::Poly(p) => p.clone(),
                _ => QPoly::zero(1),
            };
            let coeffs = UPoly::from_poly(&p).map(|u| u.coeffs().iter().map(format_rational).collect::<Vec<_>>());
            json!({ "order": alpha.get(0), "coefficients": coeffs.unwrap_or_default() })
        })
        .collect();
    Ok(json!({
        "subject": u.describe(),
        "coefficients": coefficients,
        "residual": format_rational(&residual),
        "exact": residual == Rational::from_integer(0.into()),
    }))
}

fn respond(result: Result<Value>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

#[wasm_bindgen]
pub fn witness_curve(operator: &str, m: u32) -> String {
    respond(witness_curve_json(operator, m))
}

#[wasm_bindgen]
pub fn partition_curves(half_angle_degrees: f64, points: usize) -> String {
    respond(partition_curves_json(half_angle_degrees, points))
}

#[wasm_bindgen]
pub fn reconstruct(operator: &str, m: u32, shift: bool, seed: u64) -> String {
    respond(reconstruct_json(operator, m, shift, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_operator_text() {
        let op = parse_operator("# 3 + x d^2\n0: 3\n2: 0 1\n").unwrap();
        assert_eq!(op.effective_order(0.0), Some(2));
        assert!(parse_operator("2 0 1").is_err());
        assert!(parse_operator("x: 1").is_err());
    }

    #[test]
    fn witness_curve_reports_classes() {
        let v = witness_curve_json("1: 1", 2).unwrap();
        assert_eq!(v["image"]["class_at_zero"], "C^1");
        assert_eq!(v["verdicts"][1]["pass"], true);
        assert_eq!(v["verdicts"][2]["pass"], false);
        let v = witness_curve_json("3: 1", 2).unwrap();
        assert_eq!(v["image"]["undefined_derivative"], 3);
    }

    #[test]
    fn partition_curves_sum_to_one() {
        let v = partition_curves_json(67.5, 360).unwrap();
        assert!(v["max_sum_error"].as_f64().unwrap() <= 1e-12);
        assert_eq!(v["north"][0], 1.0);
        assert!(partition_curves_json(30.0, 10).is_err());
    }

    #[test]
    fn reconstruct_roundtrips_and_flags_shift() {
        let v = reconstruct_json("0: 3\n2: 0 1", 2, false, 0).unwrap();
        assert_eq!(v["exact"], true);
        assert_eq!(v["coefficients"][1]["coefficients"], json!(["0", "1"]));
        let v = reconstruct_json("0: 3\n2: 0 1", 2, true, 0).unwrap();
        assert_eq!(v["exact"], false);
        let err: Value = serde_json::from_str(&reconstruct("bad", 1, false, 0)).unwrap();
        assert!(err["error"].is_string());
    }
}
