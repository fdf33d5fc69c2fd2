//! Signed total variation of piecewise functions.
//!
//! `V_a^b(f)` is the total variation on `[a, b]` when `a ≤ b` and
//! `−V_b^a(f)` otherwise, so `V_a^b + V_b^c = V_a^c` for any order of points.

use serde::{Deserialize, Serialize};

use crate::error::VariationError;
use crate::piecewise::PiecewiseFunction;

/// Stop refining once successive dyadic sums agree this closely.
pub const ADAPTIVE_TOL: f64 = 1e-9;
pub const ADAPTIVE_MIN_LEVEL: u32 = 2;
pub const ADAPTIVE_MAX_LEVEL: u32 = 24;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariationMethod {
    /// Prefix sums over a monotone decomposition.
    #[default]
    MonotoneExact,
    /// Dyadic partition refinement between kinks.
    Adaptive,
    /// The alternating peak/valley supremum over the function's junctions.
    Alternating,
}

impl std::str::FromStr for VariationMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "monotone-exact" | "exact" => Ok(VariationMethod::MonotoneExact),
            "adaptive" => Ok(VariationMethod::Adaptive),
            "alternating" => Ok(VariationMethod::Alternating),
            other => Err(format!("unknown variation method `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VariationQuery<'a> {
    pub f: &'a PiecewiseFunction,
    pub a: f64,
    pub b: f64,
    pub method: VariationMethod,
}

impl VariationQuery<'_> {
    pub fn run(&self) -> Result<f64, VariationError> {
        variation(self.f, self.a, self.b, self.method)
    }
}

/// Signed variation `V_a^b(f)`.
pub fn variation(f: &PiecewiseFunction, a: f64, b: f64, method: VariationMethod) -> Result<f64, VariationError> {
    f.eval(a)?;
    f.eval(b)?;
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let v = match method {
        VariationMethod::MonotoneExact => exact(f, lo, hi)?,
        VariationMethod::Adaptive => adaptive(f, lo, hi)?,
        VariationMethod::Alternating => {
            let pts: Vec<f64> = f.kinks().into_iter().filter(|&t| t > lo && t < hi).collect();
            alternating_variation(f, lo, hi, &pts)
        }
    };
    Ok(sign * v)
}

/// Unsigned variation on `[lo, hi]` from the monotone decomposition.
pub fn exact(f: &PiecewiseFunction, lo: f64, hi: f64) -> Result<f64, VariationError> {
    let upper = f.variation_from_zero(hi).ok_or(VariationError::MissingMonotoneMetadata)?;
    let lower = f.variation_from_zero(lo).ok_or(VariationError::MissingMonotoneMetadata)?;
    Ok((upper - lower).max(0.0))
}

fn dyadic_sum(f: &PiecewiseFunction, lo: f64, hi: f64, level: u32) -> f64 {
    let n = 1usize << level;
    let h = (hi - lo) / n as f64;
    let mut prev = f.value(lo);
    let mut total = 0.0;
    for i in 1..=n {
        let t = if i == n { hi } else { lo + h * i as f64 };
        let v = f.value(t);
        total += (v - prev).abs();
        prev = v;
    }
    total
}

/// Unsigned variation on `[lo, hi]` by refining a uniform partition of each
/// smooth stretch until the partition sums settle.
pub fn adaptive(f: &PiecewiseFunction, lo: f64, hi: f64) -> Result<f64, VariationError> {
    let mut cuts = vec![lo];
    cuts.extend(f.kinks().into_iter().filter(|&t| t > lo && t < hi));
    cuts.push(hi);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (l, r) = (w[0], w[1]);
        let mut previous = dyadic_sum(f, l, r, ADAPTIVE_MIN_LEVEL - 1);
        let mut level = ADAPTIVE_MIN_LEVEL;
        loop {
            let current = dyadic_sum(f, l, r, level);
            if (current - previous).abs() <= ADAPTIVE_TOL {
                total += current;
                break;
            }
            if level == ADAPTIVE_MAX_LEVEL {
                return Err(VariationError::NonConvergence { previous, last: current });
            }
            previous = current;
            level += 1;
        }
    }
    Ok(total)
}

/// Unsigned variation on `[lo, hi]` as the supremum of alternating sums
///
/// `−f(a) + 2f(x₁) − 2f(y₁) + 2f(x₂) − … + 2f(x_k) − f(b)`
///
/// over ordered peak/valley points drawn from `points ∪ {lo, hi}`.
/// The result is exact when the candidates include every local extremum and
/// a lower bound otherwise.
pub fn alternating_variation(f: &PiecewiseFunction, lo: f64, hi: f64, points: &[f64]) -> f64 {
    let mut xs: Vec<f64> = points.iter().copied().filter(|&t| t > lo && t < hi).collect();
    xs.push(lo);
    xs.push(hi);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    // best sum ending on a valley / on a peak, over points seen so far
    let mut best_valley = -f.value(lo);
    let mut best_peak = f64::NEG_INFINITY;
    for &x in &xs {
        let v = f.value(x);
        best_peak = best_peak.max(best_valley + 2.0 * v);
        best_valley = best_valley.max(best_peak - 2.0 * v);
    }
    (best_peak - f.value(hi)).max(0.0)
}
