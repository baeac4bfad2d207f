//! Scenario files, runners and JSON reports behind the `peetre` binary.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classify::classify;
use crate::diffop::{operator_equal, CoefficientFn, DiffOperator};
use crate::error::{Error, Result};
use crate::locality::{
    flatness_transfer_check, partition_sanity, support_condition_check, Bump, Cap, SpherePartition,
};
use crate::poly::{Poly, QPoly};
use crate::random;
use crate::reconstruct::{
    extract_coefficients, linearity_spot_check, reconstruct_sampled, reconstruct_symbolic, AbsBox,
    BlackBox, Extraction, Mode, ShiftBox, SquareBox,
};
use crate::scalar::{format_rational, int, rat, Rational, Scalar};
use crate::jets::SmoothFn;

pub const SCENARIO_SCHEMA: &str = "peetre-scenario/1";
pub const REPORT_SCHEMA: &str = "peetre-report/1";

/// Grid points beyond this count are rejected as a scenario error.
const MAX_GRID_POINTS: usize = 1_000_000;
/// Linearity is spot-checked on at most this many grid points.
const LINEARITY_POINTS: usize = 27;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Reconstruct,
    Classify,
    CheckLocality,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Reconstruct => "reconstruct",
            Command::Classify => "classify",
            Command::CheckLocality => "check-locality",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adversary {
    /// `u(f)(x) = base(f)(x) + f(x + shift)`.
    Shift,
    /// `u(f) = f²`.
    Square,
    /// `u(f) = |f|`.
    Abs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Subject {
    Operator(Value),
    Adversary {
        name: Adversary,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Value>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<Vec<String>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub points_per_axis: usize,
}

fn default_mode() -> Mode {
    Mode::Exact
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_trials() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<String>,
    pub dimension: usize,
    pub source_class: u32,
    pub target_class: u32,
    pub subject: Subject,
    pub grid: GridSpec,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_half_angle: Option<f64>,
}

/// Parses and validates a scenario; serde messages carry line and column.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    s.validate()?;
    Ok(s)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if let Some(v) = &self.schema_version {
            if v != SCENARIO_SCHEMA {
                return Err(Error::Parse(format!("schema_version: expected {SCENARIO_SCHEMA:?}, got {v:?}")));
            }
        }
        if self.dimension == 0 {
            return Err(Error::Parse("dimension: must be positive".into()));
        }
        let g = &self.grid;
        if g.min.len() != self.dimension || g.max.len() != self.dimension {
            return Err(Error::Parse("grid: min and max need one entry per dimension".into()));
        }
        if g.points_per_axis == 0 {
            return Err(Error::Parse("grid.points_per_axis: must be at least 1".into()));
        }
        if g.min.iter().chain(&g.max).any(|v| !v.is_finite()) || g.min.iter().zip(&g.max).any(|(a, b)| a > b) {
            return Err(Error::Parse("grid: bounds must be finite with min ≤ max".into()));
        }
        if g.points_per_axis.checked_pow(self.dimension as u32).is_none_or(|c| c > MAX_GRID_POINTS) {
            return Err(Error::Parse(format!("grid: more than {MAX_GRID_POINTS} points")));
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(Error::Parse("tolerance: must be a finite non-negative number".into()));
        }
        if let Some(angle) = self.cap_half_angle {
            SpherePartition::new(self.dimension.max(1), angle)?;
        }
        let grid = self.grid_f64();
        for op in self.operators()? {
            if op.dim() != self.dimension {
                return Err(Error::Parse(format!(
                    "subject: operator dimension {} does not match scenario dimension {}",
                    op.dim(),
                    self.dimension
                )));
            }
            for (alpha, c) in op.coefficients() {
                if let CoefficientFn::Grid(samples) = c {
                    if let Some(x) = grid.iter().find(|x| samples.lookup(x).is_err()) {
                        return Err(Error::Parse(format!(
                            "grid: point {x:?} lies outside the samples of coefficient {alpha}"
                        )));
                    }
                }
            }
        }
        if let Subject::Adversary { shift: Some(shift), .. } = &self.subject {
            if shift.len() != self.dimension {
                return Err(Error::Parse("subject.shift: one entry per dimension".into()));
            }
        }
        Ok(())
    }

    fn operators(&self) -> Result<Vec<DiffOperator>> {
        let context = |e: Error| Error::Parse(format!("subject: {e}"));
        Ok(match &self.subject {
            Subject::Operator(v) => vec![DiffOperator::from_json(v).map_err(context)?],
            Subject::Adversary { base: Some(v), .. } => vec![DiffOperator::from_json(v).map_err(context)?],
            Subject::Adversary { base: None, .. } => vec![],
        })
    }

    /// The operator under test, if the subject is an operator.
    pub fn operator(&self) -> Result<Option<DiffOperator>> {
        match &self.subject {
            Subject::Operator(_) => Ok(self.operators()?.pop()),
            Subject::Adversary { .. } => Ok(None),
        }
    }

    pub fn black_box(&self) -> Result<BlackBox> {
        let (m, r) = (self.source_class, self.target_class);
        match &self.subject {
            Subject::Operator(_) => {
                let op = self.operator()?.expect("operator subject");
                Ok(BlackBox::from_operator(op, m, r))
            }
            Subject::Adversary { name, shift, .. } => {
                let evaluator: Arc<dyn crate::reconstruct::Evaluator> = match name {
                    Adversary::Shift => {
                        let shift = match shift {
                            Some(s) => s.iter().map(|v| crate::scalar::parse_rational(v)).collect::<Result<_>>()?,
                            None => {
                                let mut e = vec![Rational::zero(); self.dimension];
                                e[0] = Rational::one();
                                e
                            }
                        };
                        Arc::new(ShiftBox { base: self.operators()?.pop(), shift })
                    }
                    Adversary::Square => Arc::new(SquareBox),
                    Adversary::Abs => Arc::new(AbsBox),
                };
                Ok(BlackBox::new(self.dimension, m, r, evaluator))
            }
        }
    }

    fn axis_values<T>(&self, axis: usize, conv: impl Fn(f64) -> T, lerp: impl Fn(&T, &T, usize, usize) -> T) -> Vec<T> {
        let k = self.grid.points_per_axis;
        let lo = conv(self.grid.min[axis]);
        let hi = conv(self.grid.max[axis]);
        if k == 1 {
            return vec![lo];
        }
        (0..k).map(|i| lerp(&lo, &hi, i, k - 1)).collect()
    }

    fn tensor<T: Clone>(axes: Vec<Vec<T>>) -> Vec<Vec<T>> {
        let mut points: Vec<Vec<T>> = vec![vec![]];
        for values in axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(v.clone());
                        q
                    })
                })
                .collect();
        }
        points
    }

    /// Tensor grid, first axis slowest.
    pub fn grid_f64(&self) -> Vec<Vec<f64>> {
        let axes = (0..self.dimension)
            .map(|a| {
                self.axis_values(a, |v| v, |lo, hi, i, n| {
                    if i == n {
                        *hi
                    } else {
                        lo + (hi - lo) * i as f64 / n as f64
                    }
                })
            })
            .collect();
        Self::tensor(axes)
    }

    /// The same grid with exact rational coordinates.
    pub fn grid_rational(&self) -> Vec<Vec<Rational>> {
        let axes = (0..self.dimension)
            .map(|a| {
                self.axis_values(
                    a,
                    |v| Rational::from_f64(v).expect("validated finite"),
                    |lo, hi, i, n| lo + (hi - lo) * rat(i as i64, n as i64),
                )
            })
            .collect();
        Self::tensor(axes)
    }
}

/// A finished run: the report body and whether every check passed.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub pass: bool,
}

/// Every `len/count`-th element, at most `count` of them.
fn thin<T: Clone>(items: &[T], count: usize) -> Vec<T> {
    let stride = items.len().div_ceil(count).max(1);
    items.iter().step_by(stride).cloned().collect()
}

fn random_tests(s: &Scenario, rng: &mut random::TrialRng) -> Vec<QPoly> {
    // degree m + 2 so that order-m truncations of nonlocal boxes show up
    let degree = s.source_class as usize + 2;
    (0..s.trials.max(1))
        .map(|_| random::nonzero_polynomial(rng, s.dimension, degree, 4))
        .collect()
}

pub fn run_reconstruct(s: &Scenario) -> Result<Outcome> {
    let u = s.black_box()?;
    let m = s.source_class as usize;
    let mut rng = random::rng(s.seed);
    let tests = random_tests(s, &mut rng);
    let grid = s.grid_f64();
    let report = match s.mode {
        Mode::Exact => reconstruct_symbolic(&u, m, &tests)?,
        Mode::Float => {
            let floats: Vec<Poly<f64>> = tests.iter().map(QPoly::to_f64).collect();
            let refs: Vec<&dyn SmoothFn<f64>> = floats.iter().map(|p| p as &dyn SmoothFn<f64>).collect();
            reconstruct_sampled(&u, m, &grid, &refs)?
        }
    };
    let residual_pass = match s.mode {
        Mode::Exact => report.residual == 0.0,
        Mode::Float => report.residual <= s.tolerance,
    };
    let linearity = linearity_spot_check(&u, s.trials.max(1), &thin(&s.grid_rational(), LINEARITY_POINTS), &mut rng)?;
    let matches_subject = match s.operator()? {
        Some(op) => Some(operator_equal(&op, &report.operator, &grid, s.tolerance)?),
        None => None,
    };
    let pass = residual_pass && linearity.pass && matches_subject.unwrap_or(true);
    Ok(Outcome {
        pass,
        report: json!({
            "subject": u.describe(),
            "mode": report.mode,
            "operator": report.operator.to_json(),
            "probes_used": report.probes_used,
            "tests": tests.len(),
            "residual": report.residual,
            "residual_pass": residual_pass,
            "linearity": {
                "pass": linearity.pass,
                "worst": format_rational(&linearity.worst),
                "trials": linearity.trials,
            },
            "matches_subject": matches_subject,
        }),
    })
}

pub fn run_classify(s: &Scenario) -> Result<Outcome> {
    let (op, reconstructed) = match s.operator()? {
        Some(op) => (op, false),
        None => (extract_coefficients(&s.black_box()?, s.source_class as usize, Extraction::Symbolic)?, true),
    };
    let verdict = classify(&op, s.source_class, s.target_class)?;
    Ok(Outcome {
        pass: verdict.pass,
        report: json!({
            "operator": op.to_json(),
            "reconstructed": reconstructed,
            "verdict": verdict.to_json(),
        }),
    })
}

pub fn run_locality(s: &Scenario) -> Result<Outcome> {
    let u = s.black_box()?;
    let n = s.dimension;
    let mut rng = random::rng(s.seed);
    let angle = s.cap_half_angle.unwrap_or(3.0 * PI / 8.0);
    let partition = SpherePartition::new(n, angle)?;
    let sanity = partition_sanity(&partition, 1000, &mut rng)?;
    let partition_pass = sanity.pass(1e-12);

    let mut homogeneous = true;
    for _ in 0..20 {
        let x: Vec<Rational> = loop {
            let x: Vec<Rational> = (0..n).map(|_| random::rational(&mut rng, 5)).collect();
            if x.iter().any(|v| !v.is_zero()) {
                break x;
            }
        };
        for cap in [Cap::North, Cap::South] {
            let psi = partition.radial_extension(cap, 0);
            let base = psi.eval_rational(&x)?;
            let lambda = random::rational(&mut rng, 5).abs() + rat(1, 7);
            for l in [rat(1, 2), int(2), int(10), lambda] {
                let scaled: Vec<Rational> = x.iter().map(|v| v * &l).collect();
                homogeneous &= psi.eval_rational(&scaled)? == base;
            }
        }
    }

    let center: Vec<f64> = s.grid.min.iter().zip(&s.grid.max).map(|(a, b)| (a + b) / 2.0).collect();
    let radius: Vec<f64> = s
        .grid
        .min
        .iter()
        .zip(&s.grid.max)
        .map(|(a, b)| if b > a { (b - a) / 4.0 } else { 0.25 })
        .collect();
    let bump = Bump::new(center, radius)?;
    let support = support_condition_check(&u, &bump, &bump.support(), &s.grid_f64(), s.tolerance)?;

    let flatness = flatness_transfer_check(&u, s.source_class as usize, s.trials.max(1), &mut rng)?;
    let pass = partition_pass && homogeneous && support.pass && flatness.pass;
    Ok(Outcome {
        pass,
        report: json!({
            "subject": u.describe(),
            "partition": {
                "pass": partition_pass,
                "half_angle": angle,
                "samples": sanity.samples,
                "max_sum_error": sanity.max_sum_error,
                "min_value": sanity.min_value,
                "max_value": sanity.max_value,
                "exact_support": sanity.exact_support,
            },
            "homogeneity": { "pass": homogeneous },
            "support": {
                "pass": support.pass,
                "box": bump.support(),
                "points_checked": support.points_checked,
                "worst": support.worst,
                "worst_point": support.worst_point,
            },
            "flatness": {
                "pass": flatness.pass,
                "trials": flatness.trials,
                "worst": format_rational(&flatness.worst),
                "witness": flatness.witness.as_ref().filter(|_| !flatness.pass).map(QPoly::to_json),
            },
        }),
    })
}

/// Runs one command and wraps the result in the versioned report envelope.
pub fn run(command: Command, s: &Scenario, timings: bool) -> Result<Outcome> {
    let start = Instant::now();
    let outcome = match command {
        Command::Reconstruct => run_reconstruct(s)?,
        Command::Classify => run_classify(s)?,
        Command::CheckLocality => run_locality(s)?,
    };
    let section = match command {
        Command::Reconstruct => "reconstruction",
        Command::Classify => "classification",
        Command::CheckLocality => "locality",
    };
    let mut report = json!({
        "schema_version": REPORT_SCHEMA,
        "command": command.name(),
        "scenario": s,
        "pass": outcome.pass,
    });
    report[section] = outcome.report;
    if timings {
        report["timings_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(Outcome { report, pass: outcome.pass })
}

/// Applies command-line overrides on top of a parsed scenario.
pub fn with_overrides(mut s: Scenario, seed: Option<u64>, tolerance: Option<f64>) -> Result<Scenario> {
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(tol) = tolerance {
        s.tolerance = tol;
    }
    s.validate()?;
    Ok(s)
}

/// Built-in scenarios: name, command, scenario text, expected verdict.
pub const DEMO: &[(&str, Command, &str, bool)] = &[
    ("three_plus_x_d2", Command::Reconstruct, include_str!("../scenarios/reconstruct_three_plus_x_d2.json"), true),
    ("three_plus_x_d2_float", Command::Reconstruct, include_str!("../scenarios/reconstruct_three_plus_x_d2_float.json"), true),
    ("zero_operator", Command::Reconstruct, include_str!("../scenarios/reconstruct_zero.json"), true),
    ("shift_adversary", Command::Reconstruct, include_str!("../scenarios/reconstruct_shift.json"), false),
    ("identity_forced_zero", Command::Classify, include_str!("../scenarios/classify_identity_forced_zero.json"), false),
    ("five_multiplication", Command::Classify, include_str!("../scenarios/classify_five_multiplication.json"), true),
    ("d2_order_bounded", Command::Classify, include_str!("../scenarios/classify_d2_order_bounded.json"), true),
    ("derivative_locality", Command::CheckLocality, include_str!("../scenarios/locality_derivative.json"), true),
    ("shift_locality", Command::CheckLocality, include_str!("../scenarios/locality_shift.json"), false),
];

/// Runs every built-in scenario; passes when each verdict matches its expectation.
pub fn run_demo(seed: Option<u64>, tolerance: Option<f64>, timings: bool) -> Result<Outcome> {
    let mut runs = Vec::new();
    let mut all = true;
    for (name, command, text, expected) in DEMO {
        let s = with_overrides(parse_scenario(text)?, seed, tolerance)?;
        let out = run(*command, &s, timings)?;
        all &= out.pass == *expected;
        runs.push(json!({
            "name": name,
            "command": command.name(),
            "expected_pass": expected,
            "pass": out.pass,
            "report": out.report,
        }));
    }
    Ok(Outcome {
        pass: all,
        report: json!({
            "schema_version": REPORT_SCHEMA,
            "command": "demo",
            "pass": all,
            "runs": runs,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(name: &str) -> Scenario {
        let (_, _, text, _) = DEMO.iter().find(|(n, ..)| *n == name).unwrap();
        parse_scenario(text).unwrap()
    }

    #[test]
    fn reconstruct_examples() {
        let out = run_reconstruct(&scenario("three_plus_x_d2")).unwrap();
        assert!(out.pass);
        assert_eq!(out.report["residual"], json!(0.0));
        assert_eq!(out.report["matches_subject"], json!(true));

        let out = run_reconstruct(&scenario("zero_operator")).unwrap();
        assert!(out.pass);
        assert_eq!(out.report["operator"]["coefficients"], json!([]));

        let out = run_reconstruct(&scenario("shift_adversary")).unwrap();
        assert!(!out.pass);
        assert!(out.report["residual"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn classify_examples() {
        let out = run_classify(&scenario("identity_forced_zero")).unwrap();
        assert!(!out.pass);
        assert_eq!(out.report["verdict"]["regime"]["kind"], json!("forced_zero"));
        assert_eq!(out.report["verdict"]["violation"]["output"]["class"], json!("C^2"));
        assert!(run_classify(&scenario("five_multiplication")).unwrap().pass);
        assert!(run_classify(&scenario("d2_order_bounded")).unwrap().pass);
    }

    #[test]
    fn locality_examples() {
        let out = run_locality(&scenario("derivative_locality")).unwrap();
        assert!(out.pass);
        assert!(out.report["partition"]["max_sum_error"].as_f64().unwrap() <= 1e-12);
        let out = run_locality(&scenario("shift_locality")).unwrap();
        assert!(!out.pass);
        assert_eq!(out.report["support"]["pass"], json!(false));
        assert_eq!(out.report["flatness"]["pass"], json!(false));
    }

    #[test]
    fn demo_matches_expectations() {
        assert!(run_demo(None, None, false).unwrap().pass);
    }

    #[test]
    fn grids_agree() {
        let s = scenario("zero_operator");
        let f = s.grid_f64();
        let q = s.grid_rational();
        assert_eq!(f.len(), 121);
        assert_eq!(f[0], vec![-1.0, -1.0]);
        assert_eq!(f[120], vec![1.0, 1.0]);
        for (a, b) in f.iter().zip(&q) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - Scalar::to_f64(y)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn scenario_errors_name_the_field() {
        let bad = r#"{"dimension": 1, "source_class": 1, "target_class": 0,
            "subject": {"operator": {"dimension": 1}}}"#;
        let msg = parse_scenario(bad).unwrap_err().to_string();
        assert!(msg.contains("grid") && msg.contains("line 2"), "{msg}");

        let mut s = scenario("three_plus_x_d2");
        s.grid.points_per_axis = 0;
        assert!(s.validate().is_err());
        let mut s = scenario("three_plus_x_d2");
        s.dimension = 2;
        assert!(s.validate().is_err());
        let mut s = scenario("three_plus_x_d2");
        s.cap_half_angle = Some(0.3);
        assert!(matches!(s.validate(), Err(Error::Coverage(_))));
    }

    #[test]
    fn reports_are_byte_stable() {
        let s = scenario("three_plus_x_d2");
        let a = serde_json::to_string(&run(Command::Reconstruct, &s, false).unwrap().report).unwrap();
        let b = serde_json::to_string(&run(Command::Reconstruct, &s, false).unwrap().report).unwrap();
        assert_eq!(a, b);
    }
}
