//! Curve maps `φ`, curvilinear sections `Γ` and their gap functions.
//!
//! A section is admissible for `φ` when
//!
//! * `max{0, t + φ(t) − 1} ≤ Γ(t) ≤ min{t, φ(t)}`, and
//! * `0 ≤ Γ(t₂) − Γ(t₁) ≤ (t₂ − t₁) + (φ(t₂) − φ(t₁))` for `t₁ < t₂`.
//!
//! [`validate_section`] certifies both at a finite resolution and derives the
//! gap functions `hat(t) = t − Γ(t)` and `tilde(t) = φ(t) − Γ(t)` together
//! with their monotone decompositions.

use crate::error::ModelError;
use crate::piecewise::{pointwise_min, Piece, PiecewiseFunction, Term};

/// Tolerance for the section bounds and increment conditions.
pub const ADMISSIBILITY_TOL: f64 = 1e-10;
/// Slack required between consecutive samples of a curve map.
pub const STRICTNESS_TOL: f64 = 1e-12;
/// Samples used to certify that a curve map strictly increases.
pub const CURVE_SAMPLES: usize = 1024;
/// Default number of validation samples for sections.
pub const DEFAULT_SECTION_SAMPLES: usize = 1024;
pub const MIN_SECTION_SAMPLES: usize = 256;

/// A continuous, strictly increasing bijection of `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveMap {
    f: PiecewiseFunction,
}

impl CurveMap {
    pub fn new(f: PiecewiseFunction) -> Result<Self, ModelError> {
        let f = f.monotone_split()?;
        let at0 = f.value(0.0);
        if at0.abs() > STRICTNESS_TOL {
            return Err(ModelError::CurveEndpoint { t: 0.0, value: at0 });
        }
        let at1 = f.value(1.0);
        if (at1 - 1.0).abs() > STRICTNESS_TOL {
            return Err(ModelError::CurveEndpoint { t: 1.0, value: at1 });
        }
        for k in 0..f.pieces().len() {
            let (v0, v1) = f.piece_ends(k);
            if v1 - v0 <= 0.0 {
                let p = &f.pieces()[k];
                return Err(ModelError::NotStrictlyIncreasing { t1: p.start(), t2: p.end() });
            }
        }
        let mut prev = 0.0;
        for k in 1..=CURVE_SAMPLES {
            let t = k as f64 / CURVE_SAMPLES as f64;
            let v = if k == CURVE_SAMPLES { 1.0 } else { f.value(t) };
            if v - prev <= STRICTNESS_TOL {
                return Err(ModelError::NotStrictlyIncreasing {
                    t1: (k - 1) as f64 / CURVE_SAMPLES as f64,
                    t2: t,
                });
            }
            prev = v;
        }
        Ok(CurveMap { f })
    }

    pub fn identity() -> Self {
        CurveMap::new(PiecewiseFunction::identity()).expect("identity is a curve map")
    }

    /// `t^p` for `p > 0`.
    pub fn power(p: f64) -> Result<Self, ModelError> {
        CurveMap::new(PiecewiseFunction::power_sum(vec![Term::new(1.0, p)])?)
    }

    pub fn function(&self) -> &PiecewiseFunction {
        &self.f
    }

    /// `φ(t)`, exactly `0` and `1` at the ends.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else {
            self.f.value(t)
        }
    }

    /// `φ⁻¹(y)`: closed form per piece when the piece is a single shifted
    /// monomial or a table, bisection otherwise.
    pub fn inverse(&self, y: f64) -> Result<f64, ModelError> {
        if !(0.0..=1.0).contains(&y) {
            return Err(ModelError::Domain { t: y });
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if y == 1.0 {
            return Ok(1.0);
        }
        let n = self.f.pieces().len();
        let k = (0..n)
            .collect::<Vec<_>>()
            .partition_point(|&k| self.f.piece_ends(k).1 < y)
            .min(n - 1);
        let piece = &self.f.pieces()[k];
        let (v0, v1) = self.f.piece_ends(k);
        if y < v0 - STRICTNESS_TOL || y > v1 + STRICTNESS_TOL {
            return Err(ModelError::Bracketing { y });
        }
        if let Some(t) = closed_form_inverse(piece, y) {
            if t >= piece.start() && t <= piece.end() && (piece.eval(t) - y).abs() <= STRICTNESS_TOL {
                return Ok(t);
            }
        }
        Ok(bisect_inverse(piece, y))
    }
}

fn closed_form_inverse(piece: &Piece, y: f64) -> Option<f64> {
    let knots = piece.knots();
    if !knots.is_empty() {
        if !piece.terms().is_empty() {
            return None;
        }
        let i = knots.partition_point(|k| k.1 < y).clamp(1, knots.len() - 1);
        let (t0, v0) = knots[i - 1];
        let (t1, v1) = knots[i];
        return Some(t0 + (y - v0) * (t1 - t0) / (v1 - v0));
    }
    let mut shift = 0.0;
    let mut mono = None;
    for term in piece.terms() {
        if term.exp == 0.0 {
            shift += term.coef;
        } else if mono.is_none() {
            mono = Some(*term);
        } else {
            return None;
        }
    }
    let m = mono?;
    let base = (y - shift) / m.coef;
    if base < 0.0 {
        return None;
    }
    Some(if m.exp == 1.0 { base } else if m.exp == 2.0 { base.sqrt() } else { base.powf(1.0 / m.exp) })
}

fn bisect_inverse(piece: &Piece, y: f64) -> f64 {
    let (mut lo, mut hi) = (piece.start(), piece.end());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if piece.eval(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (piece.eval(lo) - y).abs() <= (piece.eval(hi) - y).abs() {
        lo
    } else {
        hi
    }
}

/// An admissible section together with its gap functions.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionPair {
    phi: CurveMap,
    gamma: PiecewiseFunction,
    hat: PiecewiseFunction,
    tilde: PiecewiseFunction,
    hat_breaks: Vec<f64>,
    tilde_breaks: Vec<f64>,
    resolution: usize,
}

impl SectionPair {
    pub fn phi(&self) -> &CurveMap {
        &self.phi
    }

    pub fn gamma(&self) -> &PiecewiseFunction {
        &self.gamma
    }

    /// `t − Γ(t)`, split into monotone pieces.
    pub fn hat(&self) -> &PiecewiseFunction {
        &self.hat
    }

    /// `φ(t) − Γ(t)`, split into monotone pieces.
    pub fn tilde(&self) -> &PiecewiseFunction {
        &self.tilde
    }

    /// Interior extremum locations of `hat`.
    pub fn hat_breaks(&self) -> &[f64] {
        &self.hat_breaks
    }

    /// Interior extremum locations of `tilde`.
    pub fn tilde_breaks(&self) -> &[f64] {
        &self.tilde_breaks
    }

    /// Number of uniform samples the section was certified at.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Every structural point of the section: junctions of `φ`, `Γ`, `hat`
    /// and `tilde`, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = self.phi.function().junctions();
        out.extend(self.gamma.kinks());
        out.extend(self.hat.junctions());
        out.extend(self.tilde.junctions());
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);
        out
    }
}

/// Certifies `gamma` as an admissible section for `phi` on `samples`
/// uniform points (plus every junction) and builds the gap functions.
pub fn validate_section(phi: CurveMap, gamma: PiecewiseFunction, samples: usize) -> Result<SectionPair, ModelError> {
    if samples < MIN_SECTION_SAMPLES {
        return Err(ModelError::TooFewSamples {
            min: MIN_SECTION_SAMPLES,
            got: samples,
        });
    }
    let at1 = gamma.value(1.0);
    if (at1 - 1.0).abs() > STRICTNESS_TOL {
        return Err(ModelError::Endpoint { value: at1 });
    }

    let mut ts: Vec<f64> = (0..=samples).map(|k| k as f64 / samples as f64).collect();
    ts.extend(gamma.kinks());
    ts.extend(phi.function().junctions());
    ts.sort_by(f64::total_cmp);
    ts.dedup();

    let g: Vec<f64> = ts.iter().map(|&t| gamma.value(t)).collect();
    let p: Vec<f64> = ts.iter().map(|&t| phi.eval(t)).collect();

    for ((&t, &gv), &pv) in ts.iter().zip(&g).zip(&p) {
        let lower = (t + pv - 1.0).max(0.0);
        if gv < lower - ADMISSIBILITY_TOL {
            return Err(ModelError::BelowLowerBound { t, gamma: gv, bound: lower });
        }
        let upper = t.min(pv);
        if gv > upper + ADMISSIBILITY_TOL {
            return Err(ModelError::AboveUpperBound { t, gamma: gv, bound: upper });
        }
    }

    // Both increment conditions over all sampled pairs, via suffix extrema:
    // Γ must not drop below Γ(t₁) later on, and Γ − t − φ must not rise.
    let n = ts.len();
    let slack: Vec<f64> = (0..n).map(|i| g[i] - ts[i] - p[i]).collect();
    let (mut min_g, mut min_g_at) = (g[n - 1], n - 1);
    let (mut max_s, mut max_s_at) = (slack[n - 1], n - 1);
    for i in (0..n - 1).rev() {
        if g[i] - min_g > ADMISSIBILITY_TOL {
            return Err(ModelError::Decreasing {
                t1: ts[i],
                t2: ts[min_g_at],
                excess: g[i] - min_g,
            });
        }
        if max_s - slack[i] > ADMISSIBILITY_TOL {
            return Err(ModelError::IncrementTooLarge {
                t1: ts[i],
                t2: ts[max_s_at],
                excess: max_s - slack[i],
            });
        }
        if g[i] < min_g {
            min_g = g[i];
            min_g_at = i;
        }
        if slack[i] > max_s {
            max_s = slack[i];
            max_s_at = i;
        }
    }

    let hat = PiecewiseFunction::identity().combine(1.0, &gamma, -1.0)?.monotone_split()?;
    let tilde = phi.function().combine(1.0, &gamma, -1.0)?.monotone_split()?;
    let hat_breaks = hat.direction_changes();
    let tilde_breaks = tilde.direction_changes();
    Ok(SectionPair {
        phi,
        gamma,
        hat,
        tilde,
        hat_breaks,
        tilde_breaks,
        resolution: samples,
    })
}

/// `min{t, φ(t)}`, the largest admissible section.
pub fn upper_section(phi: &CurveMap) -> Result<PiecewiseFunction, ModelError> {
    pointwise_min(&PiecewiseFunction::identity(), phi.function())
}

/// Solves `φ(t) + t = target` on `[a, b]` by bisection.
fn solve_knot(phi: &CurveMap, target: f64, a: f64, b: f64) -> Result<f64, ModelError> {
    let h = |t: f64| phi.eval(t) + t - target;
    if !(h(a) < 0.0 && h(b) > 0.0) {
        return Err(ModelError::KnotSolve { a, b });
    }
    let (mut lo, mut hi) = (a, b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = if h(lo).abs() <= h(hi).abs() { lo } else { hi };
    if h(root).abs() > STRICTNESS_TOL {
        return Err(ModelError::KnotSolve { a, b });
    }
    Ok(root)
}

/// The knot `u*` of one interval of an interval-family section.
pub fn interval_knot(phi: &CurveMap, a: f64, b: f64) -> Result<f64, ModelError> {
    let low = a.min(phi.eval(a));
    let high = b.max(phi.eval(b));
    solve_knot(phi, low + high, a, b)
}

/// The section generated by disjoint open intervals `(aᵢ, bᵢ)`: on each
/// interval it stays flat at `min{aᵢ, φ(aᵢ)}` up to the knot `uᵢ*`, then
/// follows `φ(t) + t − max{bᵢ, φ(bᵢ)}`; elsewhere it equals `min{t, φ(t)}`.
pub fn interval_family_section(phi: CurveMap, intervals: &[(f64, f64)]) -> Result<SectionPair, ModelError> {
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    for &(a, b) in &sorted {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(ModelError::Intervals(format!("({a}, {b}) is not an interval inside [0, 1]")));
        }
    }
    for w in sorted.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(ModelError::Intervals(format!(
                "({}, {}) overlaps ({}, {})",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    let base = upper_section(&phi)?;
    let mut pieces: Vec<Piece> = Vec::new();
    let mut cursor = 0.0;
    for &(a, b) in &sorted {
        if a > cursor {
            pieces.extend(base.restrict(cursor, a));
        }
        let low = a.min(phi.eval(a));
        let high = b.max(phi.eval(b));
        let knot = solve_knot(&phi, low + high, a, b)?;
        pieces.push(Piece::constant(a, knot, low)?);
        for p in phi.function().restrict(knot, b) {
            pieces.push(p.plus_terms(&[Term::new(1.0, 1.0), Term::new(-high, 0.0)]));
        }
        cursor = b;
    }
    if cursor < 1.0 {
        pieces.extend(base.restrict(cursor, 1.0));
    }
    let gamma = PiecewiseFunction::new(pieces)?;
    validate_section(phi, gamma, DEFAULT_SECTION_SAMPLES)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> CurveMap {
        CurveMap::power(2.0).unwrap()
    }

    fn cube() -> PiecewiseFunction {
        PiecewiseFunction::power_sum(vec![Term::new(1.0, 3.0)]).unwrap()
    }

    #[test]
    fn inverse_of_square() {
        let phi = square();
        assert_eq!(phi.inverse(0.25).unwrap(), 0.5);
        assert_eq!(phi.inverse(1.0).unwrap(), 1.0);
        assert_eq!(phi.inverse(0.0).unwrap(), 0.0);
        assert!(phi.inverse(1.5).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let phis = [
            square(),
            CurveMap::power(0.37).unwrap(),
            CurveMap::new(PiecewiseFunction::power_sum(vec![Term::new(0.5, 1.0), Term::new(0.5, 3.5)]).unwrap()).unwrap(),
        ];
        for phi in &phis {
            for k in 0..1024 {
                let t = k as f64 / 1023.0;
                let back = phi.inverse(phi.eval(t)).unwrap();
                assert!((back - t).abs() <= 1e-10, "t = {t}, back = {back}");
                assert!((phi.eval(back) - phi.eval(t)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn curve_map_rejects_non_bijections() {
        let flat = PiecewiseFunction::new(vec![
            Piece::power_sum(0.0, 0.5, vec![Term::new(1.0, 1.0)]).unwrap(),
            Piece::constant(0.5, 0.75, 0.5).unwrap(),
            Piece::power_sum(0.75, 1.0, vec![Term::new(2.0, 1.0), Term::new(-1.0, 0.0)]).unwrap(),
        ])
        .unwrap();
        assert!(matches!(CurveMap::new(flat), Err(ModelError::NotStrictlyIncreasing { .. })));
        let short = PiecewiseFunction::power_sum(vec![Term::new(0.9, 1.0)]).unwrap();
        assert!(matches!(CurveMap::new(short), Err(ModelError::CurveEndpoint { .. })));
    }

    #[test]
    fn cubic_section_on_square_curve() {
        let s = validate_section(square(), cube(), 1024).unwrap();
        assert_eq!(s.hat_breaks().len(), 1);
        assert!((s.hat_breaks()[0] - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(s.tilde_breaks().len(), 1);
        assert!((s.tilde_breaks()[0] - 2.0 / 3.0).abs() < 1e-14);
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            assert!((s.hat().value(t) + s.gamma().value(t) - t).abs() <= 1e-12);
            assert!((s.tilde().value(t) + s.gamma().value(t) - s.phi().eval(t)).abs() <= 1e-12);
        }
    }

    #[test]
    fn diagonal_of_m() {
        let s = validate_section(CurveMap::identity(), PiecewiseFunction::identity(), 512).unwrap();
        for k in 0..=64 {
            assert_eq!(s.hat().value(k as f64 / 64.0), 0.0);
        }
    }

    #[test]
    fn identity_section_on_square_curve_is_too_large() {
        let err = validate_section(square(), PiecewiseFunction::identity(), 1024).unwrap_err();
        assert!(matches!(err, ModelError::AboveUpperBound { .. }), "{err}");
    }

    #[test]
    fn endpoint_and_sample_count() {
        let low = PiecewiseFunction::power_sum(vec![Term::new(0.5, 3.0)]).unwrap();
        assert!(matches!(
            validate_section(square(), low, 1024),
            Err(ModelError::Endpoint { .. })
        ));
        assert!(matches!(
            validate_section(square(), cube(), 100),
            Err(ModelError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn increment_bound_violation_reports_pair() {
        // on φ = id the middle piece grows with slope 3 > 2
        let gamma = PiecewiseFunction::new(vec![
            Piece::constant(0.0, 0.5, 0.0).unwrap(),
            Piece::power_sum(0.5, 0.75, vec![Term::new(3.0, 1.0), Term::new(-1.5, 0.0)]).unwrap(),
            Piece::power_sum(0.75, 1.0, vec![Term::new(1.0, 1.0)]).unwrap(),
        ])
        .unwrap();
        let err = validate_section(CurveMap::identity(), gamma, 256).unwrap_err();
        assert!(matches!(err, ModelError::IncrementTooLarge { .. }), "{err}");
    }

    #[test]
    fn golden_knot_for_unit_interval() {
        let phi = square();
        let knot = interval_knot(&phi, 0.0, 1.0).unwrap();
        assert!((knot - (5f64.sqrt() - 1.0) / 2.0).abs() <= 1e-12);
        let s = interval_family_section(phi, &[(0.0, 1.0)]).unwrap();
        assert_eq!(s.gamma().value(0.3), 0.0);
        assert!((s.gamma().value(0.8) - (0.64 + 0.8 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn identity_knot_is_midpoint() {
        let phi = CurveMap::identity();
        for &(a, b) in &[(0.1, 0.5), (0.2, 0.9), (0.0, 0.3)] {
            assert!((interval_knot(&phi, a, b).unwrap() - 0.5 * (a + b)).abs() <= 1e-12);
        }
    }

    #[test]
    fn empty_family_is_upper_section() {
        let s = interval_family_section(square(), &[]).unwrap();
        for k in 0..=50 {
            let t = k as f64 / 50.0;
            assert!((s.gamma().value(t) - t * t).abs() < 1e-15);
        }
    }

    #[test]
    fn overlapping_intervals_rejected() {
        assert!(matches!(
            interval_family_section(square(), &[(0.1, 0.5), (0.4, 0.8)]),
            Err(ModelError::Intervals(_))
        ));
    }

    #[test]
    fn gap_functions_vanish_at_ends() {
        let s = interval_family_section(CurveMap::power(0.6).unwrap(), &[(0.1, 0.4), (0.5, 0.95)]).unwrap();
        for f in [s.hat(), s.tilde()] {
            assert!(f.value(0.0).abs() <= 1e-12);
            assert!(f.value(1.0).abs() <= 1e-12);
        }
    }
}
