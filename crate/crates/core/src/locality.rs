//! Partitions of unity on the sphere, cone cutoffs, and empirical locality checks.
//!
//! The sphere `S^{n−1}` is covered by a north and a south cap. Writing
//! `z = x_n/‖x‖` for the height of a direction and `c = cos θ`, where `θ` is
//! the exclusion half-angle, the bumps are
//!
//! ```text
//! b_N(z) = ρ((1 − z)/(1 + c)),   b_S(z) = ρ((1 + z)/(1 + c)),   ρ(t) = exp(−1/(1 − t²))
//! ```
//!
//! and `φ_i = b_i / (b_N + b_S)`. `φ_N` vanishes exactly on the closed cone of
//! half-angle `θ` around the south pole, and symmetrically for `φ_S`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_traits::{Signed, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::jets::{check_order, vanishes_to_order, Jet, SmoothFn, FLOAT_TOL};
use crate::multiindex::{enumerate_upto, MultiIndex};
use crate::poly::QPoly;
use crate::random::{self, TrialRng};
use crate::reconstruct::BlackBox;
use crate::scalar::{Rational, Scalar};
use crate::smoothness::Smoothness;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cap {
    North,
    South,
}

impl Cap {
    pub fn index(self) -> usize {
        match self {
            Cap::North => 0,
            Cap::South => 1,
        }
    }
}

/// The standard mollifier profile, zero for `|t| ≥ 1`.
pub fn mollifier(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

/// Jet of `ρ ∘ t`; the zero jet where `|t| ≥ 1` (ρ is flat there).
fn mollifier_jet(t: &Jet<f64>) -> Result<Jet<f64>> {
    let t0 = t.value();
    if t0.abs() >= 1.0 {
        return Ok(Jet::zero(t.base().to_vec(), t.order()));
    }
    let one = Jet::constant(t.base().to_vec(), t.order(), 1.0);
    let s = one.sub(&t.mul(t)?)?;
    s.recip()?.scale(&-1.0).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpherePartition {
    dim: usize,
    half_angle: f64,
    cos_half_angle: f64,
}

impl SpherePartition {
    /// Two-cap partition of `S^{n−1}`; `half_angle` must lie in `(π/4, π/2)`.
    pub fn new(dim: usize, half_angle: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("dimension must be positive".into()));
        }
        if !(half_angle > FRAC_PI_4 && half_angle < FRAC_PI_2) {
            return Err(Error::Coverage(format!(
                "exclusion half-angle {half_angle} outside (π/4, π/2)"
            )));
        }
        Ok(SpherePartition { dim, half_angle, cos_half_angle: half_angle.cos() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    /// `cos θ`: `φ_N` vanishes for `z ≤ −cos θ`, `φ_S` for `z ≥ cos θ`.
    pub fn cap_boundary(&self) -> f64 {
        self.cos_half_angle
    }

    fn bumps(&self, z: f64) -> (f64, f64) {
        let w = 1.0 + self.cos_half_angle;
        (mollifier((1.0 - z) / w), mollifier((1.0 + z) / w))
    }

    /// `φ_i` as a function of the height `z ∈ [−1, 1]`.
    pub fn phi_at_height(&self, cap: Cap, z: f64) -> f64 {
        let (north, south) = self.bumps(z);
        let own = match cap {
            Cap::North => north,
            Cap::South => south,
        };
        if own == 0.0 {
            return 0.0;
        }
        own / (north + south)
    }

    /// `φ_i` at a point of the unit sphere.
    pub fn phi(&self, cap: Cap, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.phi_at_height(cap, height(x)?))
    }

    /// Whether the cap's bump is allowed to be nonzero at height `z`.
    pub fn in_cap(&self, cap: Cap, z: f64) -> bool {
        match cap {
            Cap::North => z > -self.cos_half_angle,
            Cap::South => z < self.cos_half_angle,
        }
    }

    /// `ψ_i(x) = φ_i(x/‖x‖)`, declared of class `C^order`.
    pub fn radial_extension(&self, cap: Cap, order: u32) -> ConeCutoff {
        ConeCutoff { partition: self.clone(), cap, order }
    }

    fn phi_jet(&self, cap: Cap, z: &Jet<f64>) -> Result<Jet<f64>> {
        let w = 1.0 + self.cos_half_angle;
        let one = Jet::constant(z.base().to_vec(), z.order(), 1.0);
        let north = mollifier_jet(&one.sub(z)?.scale(&(1.0 / w)))?;
        let south = mollifier_jet(&one.add(z)?.scale(&(1.0 / w)))?;
        let own = match cap {
            Cap::North => &north,
            Cap::South => &south,
        };
        if own.is_zero(0.0) {
            return Ok(own.clone());
        }
        own.mul(&north.add(&south)?.recip()?)
    }
}

/// `x_n/‖x‖`, computed so that positive rescalings by powers of two are exact.
fn height(x: &[f64]) -> Result<f64> {
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return Err(Error::Apex);
    }
    let last = *x.last().expect("nonempty point");
    Ok(last.signum() * (last * last / norm2).sqrt())
}

/// Degree-zero homogeneous extension of a sphere bump to `ℝⁿ ∖ {0}`.
#[derive(Clone, Debug)]
pub struct ConeCutoff {
    partition: SpherePartition,
    cap: Cap,
    order: u32,
}

impl ConeCutoff {
    pub fn cap(&self) -> Cap {
        self.cap
    }

    pub fn partition(&self) -> &SpherePartition {
        &self.partition
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.partition.dim, x.len())?;
        Ok(self.partition.phi_at_height(self.cap, height(x)?))
    }

    /// Exact-input evaluation: the squared height is formed in rational
    /// arithmetic, so `ψ(λx) = ψ(x)` holds bit for bit for rational `λ > 0`.
    pub fn eval_rational(&self, x: &[Rational]) -> Result<f64> {
        check_dim(self.partition.dim, x.len())?;
        let norm2 = x.iter().fold(Rational::zero(), |acc, v| acc + v * v);
        if norm2.is_zero() {
            return Err(Error::Apex);
        }
        let last = x.last().expect("nonempty point");
        let z2 = Scalar::to_f64(&(last * last / norm2));
        let sign = if last.is_negative() { -1.0 } else { 1.0 };
        Ok(self.partition.phi_at_height(self.cap, sign * z2.sqrt()))
    }

    /// Whether `x` lies in the open cone on which the cutoff vanishes.
    pub fn in_excluded_cone(&self, x: &[f64]) -> Result<bool> {
        let z = height(x)?;
        let c = self.partition.cos_half_angle;
        Ok(match self.cap {
            Cap::North => z < -c,
            Cap::South => z > c,
        })
    }
}

impl SmoothFn<f64> for ConeCutoff {
    fn dim(&self) -> usize {
        self.partition.dim
    }

    fn class(&self) -> Smoothness {
        Smoothness::Class(self.order)
    }

    fn jet(&self, at: &[f64], order: usize) -> Result<Jet<f64>> {
        check_dim(self.partition.dim, at.len())?;
        check_order(self.class(), order)?;
        if at.iter().all(|v| *v == 0.0) {
            return Err(Error::Apex);
        }
        let n = at.len();
        let mut norm2 = Jet::zero(at.to_vec(), order);
        for i in 0..n {
            let xi = Jet::variable(at.to_vec(), order, i);
            norm2 = norm2.add(&xi.mul(&xi)?)?;
        }
        let z = Jet::variable(at.to_vec(), order, n - 1).mul(&norm2.sqrt()?.recip()?)?;
        self.partition.phi_jet(self.cap, &z)
    }

    fn value(&self, at: &[f64]) -> Result<f64> {
        self.eval(at)
    }
}

/// `ψ·φ` away from the origin, extended by `0` at the origin.
pub struct CutoffProduct<F> {
    cutoff: ConeCutoff,
    inner: F,
    flat_order: usize,
}

/// Builds `ψ·φ` for `φ` flat to order `m` at the origin.
pub fn cutoff_product<F: SmoothFn<f64>>(cutoff: ConeCutoff, phi: F, m: usize) -> Result<CutoffProduct<F>> {
    check_dim(cutoff.partition.dim, phi.dim())?;
    let origin = vec![0.0; phi.dim()];
    if !vanishes_to_order(&phi, &origin, m, FLOAT_TOL)? {
        return Err(Error::Flatness { order: m });
    }
    Ok(CutoffProduct { cutoff, inner: phi, flat_order: m })
}

impl<F: SmoothFn<f64>> SmoothFn<f64> for CutoffProduct<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn class(&self) -> Smoothness {
        Smoothness::Class(self.flat_order as u32).min(self.inner.class())
    }

    fn jet(&self, at: &[f64], order: usize) -> Result<Jet<f64>> {
        check_order(self.class(), order)?;
        if at.iter().all(|v| *v == 0.0) {
            return Ok(Jet::zero(at.to_vec(), order));
        }
        let cutoff = ConeCutoff { order: order as u32, ..self.cutoff.clone() };
        cutoff.jet(at, order)?.mul(&self.inner.jet(at, order)?)
    }

    fn value(&self, at: &[f64]) -> Result<f64> {
        if at.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        Ok(self.cutoff.eval(at)? * self.inner.value(at)?)
    }
}

/// Axis-aligned box used as declared support metadata.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl SupportBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

/// Product of mollifiers `Π ρ((x_i − c_i)/r_i)`, supported in the box `c ± r`.
#[derive(Clone, Debug)]
pub struct Bump {
    center: Vec<f64>,
    radius: Vec<f64>,
}

impl Bump {
    pub fn new(center: Vec<f64>, radius: Vec<f64>) -> Result<Self> {
        check_dim(center.len(), radius.len())?;
        if radius.iter().any(|r| *r <= 0.0) {
            return Err(Error::Parameter("bump radii must be positive".into()));
        }
        Ok(Bump { center, radius })
    }

    pub fn support(&self) -> SupportBox {
        SupportBox {
            min: self.center.iter().zip(&self.radius).map(|(c, r)| c - r).collect(),
            max: self.center.iter().zip(&self.radius).map(|(c, r)| c + r).collect(),
        }
    }
}

impl SmoothFn<f64> for Bump {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn class(&self) -> Smoothness {
        Smoothness::Smooth
    }

    fn jet(&self, at: &[f64], order: usize) -> Result<Jet<f64>> {
        check_dim(self.center.len(), at.len())?;
        let mut out = Jet::constant(at.to_vec(), order, 1.0);
        for i in 0..at.len() {
            let shifted = Jet::variable(at.to_vec(), order, i)
                .sub(&Jet::constant(at.to_vec(), order, self.center[i]))?
                .scale(&(1.0 / self.radius[i]));
            out = out.mul(&mollifier_jet(&shifted)?)?;
        }
        Ok(out)
    }

    fn value(&self, at: &[f64]) -> Result<f64> {
        check_dim(self.center.len(), at.len())?;
        Ok(at
            .iter()
            .enumerate()
            .map(|(i, x)| mollifier((x - self.center[i]) / self.radius[i]))
            .product())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportReport {
    pub pass: bool,
    pub worst: f64,
    pub worst_point: Option<Vec<f64>>,
    pub points_checked: usize,
}

/// `supp u(f) ⊆ supp f` tested on grid points outside the declared box.
pub fn support_condition_check(
    u: &BlackBox,
    f: &dyn SmoothFn<f64>,
    support: &SupportBox,
    grid: &[Vec<f64>],
    tol: f64,
) -> Result<SupportReport> {
    let mut worst = 0.0;
    let mut worst_point = None;
    let mut checked = 0;
    for x in grid.iter().filter(|x| !support.contains(x)) {
        checked += 1;
        let v = u.eval(f, x)?.abs();
        if v > worst {
            worst = v;
            worst_point = Some(x.clone());
        }
    }
    Ok(SupportReport { pass: worst <= tol, worst, worst_point, points_checked: checked })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessReport {
    pub pass: bool,
    pub worst: Rational,
    pub witness: Option<QPoly>,
    pub trials: usize,
}

/// Checks `u(M^m_0) ⊆ M^0_0` with random polynomial probes flat to order `m`,
/// evaluating `u(φ)(0)` exactly.
pub fn flatness_transfer_check(
    u: &BlackBox,
    m: usize,
    trials: usize,
    rng: &mut TrialRng,
) -> Result<FlatnessReport> {
    let origin = vec![Rational::zero(); u.dim()];
    let mut worst = Rational::zero();
    let mut witness = None;
    for _ in 0..trials {
        let phi = random::flat_polynomial(rng, u.dim(), m);
        let v = u.eval(&phi, &origin)?.abs();
        if v > worst {
            worst = v;
            witness = Some(phi);
        }
    }
    Ok(FlatnessReport { pass: worst.is_zero(), worst, witness, trials })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionReport {
    pub samples: usize,
    pub max_sum_error: f64,
    pub min_value: f64,
    pub max_value: f64,
    /// Every sample outside a cap has an exactly zero bump for that cap.
    pub exact_support: bool,
}

impl PartitionReport {
    pub fn pass(&self, tol: f64) -> bool {
        self.max_sum_error <= tol && self.min_value >= 0.0 && self.max_value <= 1.0 && self.exact_support
    }
}

/// Random unit vector (normalized uniform cube sample).
pub fn sphere_sample(rng: &mut TrialRng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Evaluates both bumps at `samples` random sphere points plus the poles.
pub fn partition_sanity(p: &SpherePartition, samples: usize, rng: &mut TrialRng) -> Result<PartitionReport> {
    let mut points: Vec<Vec<f64>> = (0..samples).map(|_| sphere_sample(rng, p.dim)).collect();
    let mut north = vec![0.0; p.dim];
    north[p.dim - 1] = 1.0;
    let south: Vec<f64> = north.iter().map(|v| -v).collect();
    points.push(north);
    points.push(south);
    let mut report = PartitionReport {
        samples: points.len(),
        max_sum_error: 0.0,
        min_value: f64::INFINITY,
        max_value: f64::NEG_INFINITY,
        exact_support: true,
    };
    for x in &points {
        let z = height(x)?;
        let vals = [p.phi(Cap::North, x)?, p.phi(Cap::South, x)?];
        report.max_sum_error = report.max_sum_error.max((vals[0] + vals[1] - 1.0).abs());
        for (cap, v) in [Cap::North, Cap::South].into_iter().zip(vals) {
            report.min_value = report.min_value.min(v);
            report.max_value = report.max_value.max(v);
            if !p.in_cap(cap, z) && v != 0.0 {
                report.exact_support = false;
            }
        }
    }
    Ok(report)
}

/// Central finite-difference approximation of `∂^α f(x)` with step `h`.
pub fn finite_difference(f: &dyn Fn(&[f64]) -> Result<f64>, alpha: &MultiIndex, x: &[f64], h: f64) -> Result<f64> {
    fn rec(
        f: &dyn Fn(&[f64]) -> Result<f64>,
        alpha: &MultiIndex,
        axis: usize,
        x: &mut Vec<f64>,
        h: f64,
    ) -> Result<f64> {
        if axis == alpha.dim() {
            return f(x);
        }
        let k = alpha.get(axis) as usize;
        if k == 0 {
            return rec(f, alpha, axis + 1, x, h);
        }
        let orig = x[axis];
        let mut acc = 0.0;
        let mut binom = 1.0;
        for j in 0..=k {
            if j > 0 {
                binom *= (k - j + 1) as f64 / j as f64;
            }
            x[axis] = orig + (k as f64 / 2.0 - j as f64) * h;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * rec(f, alpha, axis + 1, x, h)?;
        }
        x[axis] = orig;
        Ok(acc / h.powi(k as i32))
    }
    let mut point = x.to_vec();
    rec(f, alpha, 0, &mut point, h)
}

/// `max |∂^α ψ|` over `samples` equally spaced directions of the unit circle
/// (dimension 2), by finite differences.
pub fn derivative_bound_fd(cutoff: &ConeCutoff, alpha: &MultiIndex, samples: usize, h: f64) -> Result<f64> {
    check_dim(2, cutoff.partition.dim)?;
    let eval = |x: &[f64]| cutoff.eval(x);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let angle = std::f64::consts::TAU * i as f64 / samples as f64;
        let x = [angle.cos(), angle.sin()];
        worst = worst.max(finite_difference(&eval, alpha, &x, h)?.abs());
    }
    Ok(worst)
}

/// Bounds of all `|α| ≤ max_order` derivatives at three refinements
/// (`samples`, `2·samples`, `4·samples`).
pub fn derivative_bounds(
    cutoff: &ConeCutoff,
    max_order: usize,
    samples: usize,
    h: f64,
) -> Result<Vec<(MultiIndex, [f64; 3])>> {
    enumerate_upto(2, max_order)
        .into_iter()
        .skip(1)
        .map(|alpha| {
            let b = [
                derivative_bound_fd(cutoff, &alpha, samples, h)?,
                derivative_bound_fd(cutoff, &alpha, 2 * samples, h)?,
                derivative_bound_fd(cutoff, &alpha, 4 * samples, h)?,
            ];
            Ok((alpha, b))
        })
        .collect()
}
