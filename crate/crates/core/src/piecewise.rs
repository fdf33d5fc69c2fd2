//! Piecewise scalar functions on `[0, 1]`.
//!
//! A [`PiecewiseFunction`] is an ordered list of [`Piece`]s whose domains
//! partition the unit interval. Each piece is a power sum `Σ cᵢ·t^eᵢ`, a
//! linearly interpolated table, or (after arithmetic on functions) the sum of
//! both. Pieces carry a monotonicity flag; when every piece is flagged
//! monotone the function also stores the cumulative variation at each
//! junction, which makes interval variations `O(log pieces)`.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Tolerance for matching endpoints and values across piece junctions.
pub const JUNCTION_TOL: f64 = 1e-12;
/// Tolerance applied when checking a monotonicity flag against samples.
pub const FLAG_TOL: f64 = 1e-12;
/// Interior samples used to verify a monotonicity flag.
const FLAG_SAMPLES: usize = 64;
/// Derivative samples used to bracket extrema of non-polynomial pieces.
const SLOPE_SCAN_SAMPLES: usize = 1024;
/// Samples used to locate extrema of pieces with no monotone metadata.
const EXTREMUM_SCAN_SAMPLES: usize = 512;
/// Value changes smaller than this classify a segment as flat.
const FLAT_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    NonMonotone,
}

impl Monotonicity {
    pub fn is_monotone(self) -> bool {
        !matches!(self, Monotonicity::NonMonotone)
    }
}

/// One `coef · t^exp` summand.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub exp: f64,
}

impl Term {
    pub fn new(coef: f64, exp: f64) -> Self {
        Term { coef, exp }
    }

    #[inline]
    fn eval(&self, t: f64) -> f64 {
        self.coef * pow(t, self.exp)
    }

    #[inline]
    fn slope(&self, t: f64) -> f64 {
        if self.exp == 0.0 {
            0.0
        } else {
            self.coef * self.exp * pow(t, self.exp - 1.0)
        }
    }
}

#[inline]
fn pow(t: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == e.trunc() && e.abs() <= 16.0 {
        t.powi(e as i32)
    } else {
        t.powf(e)
    }
}

/// A function on a closed sub-interval of `[0, 1]`.
///
/// The value is `Σ terms(t) + table(t)`; either part may be empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    start: f64,
    end: f64,
    terms: Vec<Term>,
    knots: Vec<(f64, f64)>,
    monotonicity: Monotonicity,
}

impl Piece {
    pub fn power_sum(start: f64, end: f64, terms: Vec<Term>) -> Result<Self, ModelError> {
        let piece = Piece {
            start,
            end,
            terms: normalize_terms(terms),
            knots: Vec::new(),
            monotonicity: Monotonicity::NonMonotone,
        };
        piece.check()?;
        Ok(piece)
    }

    /// A linearly interpolated table; the domain is the knot span.
    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        if knots.len() < 2 {
            return Err(ModelError::InvalidPiece(
                "a table needs at least two knots".into(),
            ));
        }
        let piece = Piece {
            start: knots[0].0,
            end: knots[knots.len() - 1].0,
            terms: Vec::new(),
            knots,
            monotonicity: Monotonicity::NonMonotone,
        };
        piece.check()?;
        Ok(piece)
    }

    pub fn constant(start: f64, end: f64, value: f64) -> Result<Self, ModelError> {
        Piece::power_sum(start, end, vec![Term::new(value, 0.0)])
    }

    pub fn with_monotonicity(mut self, flag: Monotonicity) -> Self {
        self.monotonicity = flag;
        self
    }

    fn check(&self) -> Result<(), ModelError> {
        if !(self.start.is_finite() && self.end.is_finite()) || self.start >= self.end {
            return Err(ModelError::InvalidPiece(format!(
                "empty or non-finite domain [{}, {}]",
                self.start, self.end
            )));
        }
        if self.start < 0.0 || self.end > 1.0 {
            return Err(ModelError::InvalidPiece(format!(
                "domain [{}, {}] leaves [0, 1]",
                self.start, self.end
            )));
        }
        for term in &self.terms {
            if !term.coef.is_finite() || !term.exp.is_finite() || term.exp < 0.0 {
                return Err(ModelError::InvalidPiece(format!(
                    "term ({}, {}) needs a finite coefficient and a finite exponent >= 0",
                    term.coef, term.exp
                )));
            }
        }
        if !self.knots.is_empty() {
            for w in self.knots.windows(2) {
                if !(w[0].0 < w[1].0) {
                    return Err(ModelError::InvalidPiece(format!(
                        "table knots must be strictly increasing in t (at t = {})",
                        w[1].0
                    )));
                }
            }
            if self.knots.iter().any(|k| !k.0.is_finite() || !k.1.is_finite()) {
                return Err(ModelError::InvalidPiece("non-finite table knot".into()));
            }
            if self.knots[0].0 > self.start || self.knots[self.knots.len() - 1].0 < self.end {
                return Err(ModelError::InvalidPiece(
                    "table knots do not cover the piece domain".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    /// `"power-sum"`, `"table"`, or `"mixed"` for sums produced by arithmetic.
    pub fn kind(&self) -> &'static str {
        match (self.terms.is_empty(), self.knots.is_empty()) {
            (_, true) => "power-sum",
            (true, false) => "table",
            (false, false) => "mixed",
        }
    }

    /// Evaluates the piece; `t` is clamped to the piece domain.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(self.start, self.end);
        let mut v: f64 = self.terms.iter().map(|term| term.eval(t)).sum();
        if !self.knots.is_empty() {
            v += table_eval(&self.knots, t);
        }
        v
    }

    /// Slope at `t`; for tables the right-hand slope unless `t` is the last knot.
    pub fn slope(&self, t: f64) -> f64 {
        let mut d: f64 = self.terms.iter().map(|term| term.slope(t)).sum();
        if !self.knots.is_empty() {
            d += table_slope(&self.knots, t);
        }
        d
    }

    /// True when every exponent is an integer no larger than 3.
    fn is_cubic(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.exp == t.exp.trunc() && t.exp <= 3.0)
    }

    /// The same expression on the sub-domain `[lo, hi]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Piece {
        let lo = lo.max(self.start);
        let hi = hi.min(self.end);
        let knots = if self.knots.is_empty() {
            Vec::new()
        } else {
            let mut k = vec![(lo, table_eval(&self.knots, lo))];
            k.extend(self.knots.iter().copied().filter(|&(t, _)| t > lo && t < hi));
            k.push((hi, table_eval(&self.knots, hi)));
            k
        };
        Piece {
            start: lo,
            end: hi,
            terms: self.terms.clone(),
            knots,
            monotonicity: self.monotonicity,
        }
    }

    /// `alpha·self + beta·other` on the intersection of both domains.
    pub fn combine(&self, alpha: f64, other: &Piece, beta: f64) -> Piece {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        let mut terms: Vec<Term> = self
            .terms
            .iter()
            .map(|t| Term::new(alpha * t.coef, t.exp))
            .chain(other.terms.iter().map(|t| Term::new(beta * t.coef, t.exp)))
            .collect();
        terms = normalize_terms(terms);
        let knots = if self.knots.is_empty() && other.knots.is_empty() {
            Vec::new()
        } else {
            let mut ts: Vec<f64> = vec![lo, hi];
            ts.extend(self.knots.iter().map(|k| k.0).filter(|&t| t > lo && t < hi));
            ts.extend(other.knots.iter().map(|k| k.0).filter(|&t| t > lo && t < hi));
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            ts.into_iter()
                .map(|t| {
                    let a = if self.knots.is_empty() { 0.0 } else { table_eval(&self.knots, t) };
                    let b = if other.knots.is_empty() { 0.0 } else { table_eval(&other.knots, t) };
                    (t, alpha * a + beta * b)
                })
                .collect()
        };
        Piece {
            start: lo,
            end: hi,
            terms,
            knots,
            monotonicity: Monotonicity::NonMonotone,
        }
    }

    /// Adds `terms` to the expression.
    pub fn plus_terms(&self, extra: &[Term]) -> Piece {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(extra);
        Piece {
            terms: normalize_terms(terms),
            monotonicity: Monotonicity::NonMonotone,
            ..self.clone()
        }
    }

    /// Locations in `(start, end)` where the piece may switch direction:
    /// table knots and sign changes of the slope.
    fn critical_points(&self) -> Vec<f64> {
        let mut cuts: Vec<f64> = self
            .knots
            .iter()
            .map(|k| k.0)
            .filter(|&t| t > self.start && t < self.end)
            .collect();
        let mut bounds = vec![self.start];
        bounds.extend(cuts.iter().copied());
        bounds.push(self.end);
        for w in bounds.windows(2) {
            cuts.extend(self.slope_roots(w[0], w[1]));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts
    }

    /// Sign changes of the slope strictly inside `(lo, hi)`, where the
    /// table part (if any) is linear.
    fn slope_roots(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mid = 0.5 * (lo + hi);
        let table_slope = if self.knots.is_empty() { 0.0 } else { table_slope(&self.knots, mid) };
        if self.is_cubic() {
            // slope = q2·t² + q1·t + q0
            let (mut q2, mut q1, mut q0) = (0.0, 0.0, table_slope);
            for term in &self.terms {
                match term.exp as i32 {
                    1 => q0 += term.coef,
                    2 => q1 += 2.0 * term.coef,
                    3 => q2 += 3.0 * term.coef,
                    _ => {}
                }
            }
            return quadratic_sign_changes(q2, q1, q0)
                .into_iter()
                .filter(|&r| r > lo && r < hi)
                .collect();
        }
        let slope = |t: f64| {
            let d: f64 = self.terms.iter().map(|term| term.slope(t)).sum();
            d + table_slope
        };
        let mut roots = Vec::new();
        let step = (hi - lo) / SLOPE_SCAN_SAMPLES as f64;
        let mut prev_t = lo + step;
        let mut prev = slope(prev_t);
        for k in 2..SLOPE_SCAN_SAMPLES {
            let t = lo + step * k as f64;
            let d = slope(t);
            if prev != 0.0 && d != 0.0 && (prev < 0.0) != (d < 0.0) {
                roots.push(bisect_sign_change(&slope, prev_t, t));
            } else if d == 0.0 && prev != 0.0 {
                // exact zero on a sample: look one step ahead for a sign change
                let next = slope(t + step);
                if next != 0.0 && (next < 0.0) != (prev < 0.0) {
                    roots.push(t);
                }
            }
            if d != 0.0 {
                prev = d;
                prev_t = t;
            }
        }
        roots
    }
}

fn normalize_terms(mut terms: Vec<Term>) -> Vec<Term> {
    terms.sort_by(|a, b| a.exp.total_cmp(&b.exp));
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.last_mut() {
            Some(last) if last.exp == t.exp => last.coef += t.coef,
            _ => out.push(t),
        }
    }
    out.retain(|t| t.coef != 0.0);
    out
}

#[inline]
fn table_eval(knots: &[(f64, f64)], t: f64) -> f64 {
    let n = knots.len();
    if t <= knots[0].0 {
        return knots[0].1;
    }
    if t >= knots[n - 1].0 {
        return knots[n - 1].1;
    }
    let i = knots.partition_point(|k| k.0 <= t).max(1);
    let (t0, v0) = knots[i - 1];
    let (t1, v1) = knots[i];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

fn table_slope(knots: &[(f64, f64)], t: f64) -> f64 {
    let n = knots.len();
    let i = knots.partition_point(|k| k.0 <= t).clamp(1, n - 1);
    let (t0, v0) = knots[i - 1];
    let (t1, v1) = knots[i];
    (v1 - v0) / (t1 - t0)
}

/// Real roots of `a·t² + b·t + c` at which the polynomial changes sign.
fn quadratic_sign_changes(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // numerically stable pair
    let q = -0.5 * (b + b.signum() * sq);
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    let mut roots = vec![r1, r2];
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

/// Bisection on a sign change of `f` in `[lo, hi]`, run to machine precision.
pub(crate) fn bisect_sign_change(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let neg_lo = f(lo) < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A continuous function on `[0, 1]` made of contiguous pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseFunction {
    pieces: Vec<Piece>,
    /// `(value at start, value at end)` per piece.
    ends: Vec<(f64, f64)>,
    /// Variation on `[0, start of piece k]`, present when all pieces are monotone.
    cumulative: Option<Vec<f64>>,
}

impl PiecewiseFunction {
    pub fn new(mut pieces: Vec<Piece>) -> Result<Self, ModelError> {
        if pieces.is_empty() {
            return Err(ModelError::InvalidPiece("no pieces".into()));
        }
        if pieces[0].start.abs() > JUNCTION_TOL {
            return Err(ModelError::NonContiguous { at: pieces[0].start });
        }
        let last = pieces.len() - 1;
        if (pieces[last].end - 1.0).abs() > JUNCTION_TOL {
            return Err(ModelError::NonContiguous { at: pieces[last].end });
        }
        pieces[0].start = 0.0;
        pieces[last].end = 1.0;
        for k in 1..pieces.len() {
            let left_end = pieces[k - 1].end;
            if (pieces[k].start - left_end).abs() > JUNCTION_TOL {
                return Err(ModelError::NonContiguous { at: left_end });
            }
            pieces[k].start = left_end;
            if pieces[k].start >= pieces[k].end {
                return Err(ModelError::NonContiguous { at: left_end });
            }
        }
        for p in &pieces {
            p.check()?;
        }
        let ends: Vec<(f64, f64)> = pieces.iter().map(|p| (p.eval(p.start), p.eval(p.end))).collect();
        for k in 1..pieces.len() {
            let (left, right) = (ends[k - 1].1, ends[k].0);
            if !((left - right).abs() <= JUNCTION_TOL) {
                return Err(ModelError::Discontinuous {
                    at: pieces[k].start,
                    left,
                    right,
                });
            }
        }
        for (p, &(v0, v1)) in pieces.iter().zip(&ends) {
            if !(v0.is_finite() && v1.is_finite()) {
                return Err(ModelError::InvalidPiece(format!(
                    "non-finite value on [{}, {}]",
                    p.start, p.end
                )));
            }
            check_flag(p)?;
        }
        let cumulative = if pieces.iter().all(|p| p.monotonicity.is_monotone()) {
            let mut acc = 0.0;
            let mut cum = Vec::with_capacity(pieces.len());
            for &(v0, v1) in &ends {
                cum.push(acc);
                acc += (v1 - v0).abs();
            }
            Some(cum)
        } else {
            None
        };
        Ok(PiecewiseFunction {
            pieces,
            ends,
            cumulative,
        })
    }

    /// Single power-sum piece on `[0, 1]`.
    pub fn power_sum(terms: Vec<Term>) -> Result<Self, ModelError> {
        PiecewiseFunction::new(vec![Piece::power_sum(0.0, 1.0, terms)?])
    }

    pub fn identity() -> Self {
        PiecewiseFunction::power_sum(vec![Term::new(1.0, 1.0)])
            .expect("identity is a valid power sum")
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Index of the piece that owns `t`; at a junction the left piece wins.
    #[inline]
    pub fn piece_index(&self, t: f64) -> usize {
        self.pieces
            .partition_point(|p| p.end < t)
            .min(self.pieces.len() - 1)
    }

    pub fn eval(&self, t: f64) -> Result<f64, ModelError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(ModelError::Domain { t });
        }
        Ok(self.value(t))
    }

    /// Infallible evaluation for callers that already hold `t ∈ [0, 1]`;
    /// out-of-range input is clamped.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        self.pieces[self.piece_index(t)].eval(t)
    }

    /// Values at the two ends of piece `k`.
    pub fn piece_ends(&self, k: usize) -> (f64, f64) {
        self.ends[k]
    }

    /// Interior junctions between pieces.
    pub fn junctions(&self) -> Vec<f64> {
        self.pieces[1..].iter().map(|p| p.start).collect()
    }

    /// All piece boundaries including `0` and `1`.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.pieces.iter().map(|p| p.start).collect();
        b.push(1.0);
        b
    }

    /// Junctions plus interior table knots: every place the function may kink.
    pub fn kinks(&self) -> Vec<f64> {
        let mut out = self.junctions();
        for p in &self.pieces {
            out.extend(p.knots.iter().map(|k| k.0).filter(|&t| t > p.start && t < p.end));
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn is_monotone_decomposed(&self) -> bool {
        self.cumulative.is_some()
    }

    /// Variation on `[0, t]` from the monotone decomposition.
    pub(crate) fn variation_from_zero(&self, t: f64) -> Option<f64> {
        let cum = self.cumulative.as_ref()?;
        let t = t.clamp(0.0, 1.0);
        let k = self.piece_index(t);
        Some(cum[k] + (self.pieces[k].eval(t) - self.ends[k].0).abs())
    }

    /// The pieces overlapping `[lo, hi]`, clipped to it.
    pub fn restrict(&self, lo: f64, hi: f64) -> Vec<Piece> {
        self.pieces
            .iter()
            .filter(|p| p.end > lo && p.start < hi)
            .map(|p| p.restrict(lo, hi))
            .collect()
    }

    /// `alpha·self + beta·other`, split at the junctions of both.
    pub fn combine(&self, alpha: f64, other: &PiecewiseFunction, beta: f64) -> Result<Self, ModelError> {
        let mut cuts = self.boundaries();
        cuts.extend(other.boundaries());
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut pieces = Vec::with_capacity(cuts.len());
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi - lo <= 0.0 {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            let a = self.pieces[self.piece_index(mid)].restrict(lo, hi);
            let b = other.pieces[other.piece_index(mid)].restrict(lo, hi);
            pieces.push(a.combine(alpha, &b, beta));
        }
        PiecewiseFunction::new(pieces)
    }

    /// Splits every piece at its extrema and flags each part monotone.
    ///
    /// Extrema come from closed-form roots of the slope for polynomial
    /// pieces of degree at most three, and from a sampled slope scan refined
    /// by bisection otherwise. Table knots are always candidate extrema.
    pub fn monotone_split(&self) -> Result<Self, ModelError> {
        let mut out = Vec::new();
        for piece in &self.pieces {
            let mut cuts = vec![piece.start];
            cuts.extend(piece.critical_points());
            cuts.push(piece.end);
            let segments: Vec<(f64, f64, i8)> = cuts
                .windows(2)
                .filter(|w| w[1] > w[0])
                .map(|w| {
                    let d = piece.eval(w[1]) - piece.eval(w[0]);
                    let dir = if d.abs() <= FLAT_TOL {
                        0
                    } else if d > 0.0 {
                        1
                    } else {
                        -1
                    };
                    (w[0], w[1], dir)
                })
                .collect();
            let mut merged: Vec<(f64, f64, i8)> = Vec::new();
            for seg in segments {
                match merged.last_mut() {
                    Some(last) if last.2 == seg.2 => last.1 = seg.1,
                    _ => merged.push(seg),
                }
            }
            for (lo, hi, dir) in merged {
                let flag = if dir < 0 {
                    Monotonicity::Decreasing
                } else {
                    Monotonicity::Increasing
                };
                out.push(piece.restrict(lo, hi).with_monotonicity(flag));
            }
        }
        PiecewiseFunction::new(out)
    }

    /// Interior junctions where the direction of a monotone decomposition
    /// changes (flat stretches count as their own direction).
    pub fn direction_changes(&self) -> Vec<f64> {
        let dir = |k: usize| {
            let (v0, v1) = self.ends[k];
            let d = v1 - v0;
            if d.abs() <= FLAT_TOL {
                0
            } else if d > 0.0 {
                1
            } else {
                -1
            }
        };
        (1..self.pieces.len())
            .filter(|&k| dir(k) != dir(k - 1))
            .map(|k| self.pieces[k].start)
            .collect()
    }

    /// Minimum over `[a, b]` (endpoints in either order).
    pub fn interval_min(&self, a: f64, b: f64) -> f64 {
        self.interval_extremum(a, b, true)
    }

    /// Maximum over `[a, b]` (endpoints in either order).
    pub fn interval_max(&self, a: f64, b: f64) -> f64 {
        self.interval_extremum(a, b, false)
    }

    fn interval_extremum(&self, a: f64, b: f64, minimize: bool) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
        let better = |x: f64, y: f64| if minimize { x.min(y) } else { x.max(y) };
        let mut best = better(self.value(lo), self.value(hi));
        let first = self.piece_index(lo);
        let last = self.piece_index(hi);
        for k in first..=last {
            let p = &self.pieces[k];
            if k > first {
                best = better(best, self.ends[k].0);
            }
            if !p.monotonicity.is_monotone() {
                let (l, h) = (lo.max(p.start), hi.min(p.end));
                if h > l {
                    best = better(best, scan_extremum(|t| p.eval(t), l, h, minimize));
                }
            }
        }
        best
    }
}

/// Dense scan followed by golden-section refinement around the best sample.
fn scan_extremum(f: impl Fn(f64) -> f64, lo: f64, hi: f64, minimize: bool) -> f64 {
    let sign = if minimize { 1.0 } else { -1.0 };
    let g = |t: f64| sign * f(t);
    let n = EXTREMUM_SCAN_SAMPLES;
    let step = (hi - lo) / n as f64;
    let (mut best_k, mut best) = (0, g(lo));
    for k in 1..=n {
        let v = g(lo + step * k as f64);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let mut a = (lo + step * (best_k as f64 - 1.0)).max(lo);
    let mut b = (lo + step * (best_k as f64 + 1.0)).min(hi);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-10 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - ratio * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + ratio * (b - a);
            gd = g(d);
        }
    }
    sign * best.min(gc).min(gd)
}

fn check_flag(p: &Piece) -> Result<(), ModelError> {
    let sign = match p.monotonicity {
        Monotonicity::Increasing => 1.0,
        Monotonicity::Decreasing => -1.0,
        Monotonicity::NonMonotone => return Ok(()),
    };
    let step = (p.end - p.start) / (FLAG_SAMPLES + 1) as f64;
    let mut prev = p.eval(p.start);
    for k in 1..=FLAG_SAMPLES + 1 {
        let t = if k == FLAG_SAMPLES + 1 { p.end } else { p.start + step * k as f64 };
        let v = p.eval(t);
        if sign * (v - prev) < -FLAG_TOL {
            return Err(ModelError::FlagViolation {
                start: p.start,
                end: p.end,
                at: t,
            });
        }
        prev = v;
    }
    Ok(())
}

/// Pointwise minimum of two functions, split exactly at their crossings.
pub fn pointwise_min(f: &PiecewiseFunction, g: &PiecewiseFunction) -> Result<PiecewiseFunction, ModelError> {
    let diff = f.combine(1.0, g, -1.0)?.monotone_split()?;
    // On each monotone piece of f − g there is at most one sign change.
    let mut cuts = vec![0.0];
    for p in diff.pieces() {
        let (a, b) = (p.eval(p.start), p.eval(p.end));
        if a != 0.0 && b != 0.0 && (a < 0.0) != (b < 0.0) {
            let root = bisect_sign_change(&|t| p.eval(t), p.start, p.end);
            if root > p.start && root < p.end {
                cuts.push(root);
            }
        }
        cuts.push(p.end);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out: Vec<Piece> = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let src = if f.value(mid) <= g.value(mid) { f } else { g };
        let seg = src.pieces[src.piece_index(mid)].restrict(lo, hi);
        out.push(seg.with_monotonicity(Monotonicity::NonMonotone));
    }
    merge_adjacent(out)
}

/// Glues neighbouring pieces that carry the same expression.
fn merge_adjacent(pieces: Vec<Piece>) -> Result<PiecewiseFunction, ModelError> {
    let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
    for p in pieces {
        if let Some(last) = out.last_mut() {
            if last.terms == p.terms && last.knots.is_empty() && p.knots.is_empty() {
                last.end = p.end;
                continue;
            }
        }
        out.push(p);
    }
    PiecewiseFunction::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eval_power_sum_and_table() {
        let sq = PiecewiseFunction::power_sum(vec![Term::new(1.0, 2.0)]).unwrap();
        assert_eq!(sq.eval(0.5).unwrap(), 0.25);
        let root = PiecewiseFunction::power_sum(vec![Term::new(1.0, 0.5)]).unwrap();
        assert_eq!(root.eval(0.25).unwrap(), 0.5);
        let table = PiecewiseFunction::new(vec![Piece::table(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap()]).unwrap();
        assert!(close(table.eval(0.3).unwrap(), 0.3, 1e-15));
    }

    #[test]
    fn domain_violation() {
        let id = PiecewiseFunction::identity();
        assert!(matches!(id.eval(1.5), Err(ModelError::Domain { .. })));
        assert!(matches!(id.eval(-0.1), Err(ModelError::Domain { .. })));
        assert!(id.eval(f64::NAN).is_err());
    }

    #[test]
    fn gaps_and_jumps_are_rejected() {
        let a = Piece::power_sum(0.0, 0.4, vec![Term::new(1.0, 1.0)]).unwrap();
        let b = Piece::power_sum(0.5, 1.0, vec![Term::new(1.0, 1.0)]).unwrap();
        assert!(matches!(
            PiecewiseFunction::new(vec![a.clone(), b]),
            Err(ModelError::NonContiguous { .. })
        ));
        let c = Piece::power_sum(0.4, 1.0, vec![Term::new(1.0, 1.0), Term::new(0.1, 0.0)]).unwrap();
        assert!(matches!(
            PiecewiseFunction::new(vec![a, c]),
            Err(ModelError::Discontinuous { .. })
        ));
    }

    #[test]
    fn junction_uses_left_piece() {
        let a = Piece::power_sum(0.0, 0.5, vec![Term::new(1.0, 1.0)]).unwrap();
        let b = Piece::power_sum(0.5, 1.0, vec![Term::new(0.5, 0.0)]).unwrap();
        let f = PiecewiseFunction::new(vec![a, b]).unwrap();
        assert_eq!(f.piece_index(0.5), 0);
        assert_eq!(f.piece_index(0.50001), 1);
        assert_eq!(f.value(0.5), 0.5);
    }

    #[test]
    fn wrong_flag_is_rejected() {
        let p = Piece::power_sum(0.0, 1.0, vec![Term::new(1.0, 1.0), Term::new(-1.0, 2.0)])
            .unwrap()
            .with_monotonicity(Monotonicity::Increasing);
        assert!(matches!(
            PiecewiseFunction::new(vec![p]),
            Err(ModelError::FlagViolation { .. })
        ));
    }

    #[test]
    fn split_finds_cubic_extremum() {
        // t − t³ peaks at 1/√3
        let f = PiecewiseFunction::power_sum(vec![Term::new(1.0, 1.0), Term::new(-1.0, 3.0)])
            .unwrap()
            .monotone_split()
            .unwrap();
        let changes = f.direction_changes();
        assert_eq!(changes.len(), 1);
        assert!(close(changes[0], 1.0 / 3f64.sqrt(), 1e-15));
        assert!(f.is_monotone_decomposed());
    }

    #[test]
    fn split_finds_fractional_extremum() {
        // √t/2 − t + t² on [0, 1/4] peaks at (3 − √5)/8
        let p = Piece::power_sum(
            0.0,
            0.25,
            vec![Term::new(0.5, 0.5), Term::new(-1.0, 1.0), Term::new(1.0, 2.0)],
        )
        .unwrap();
        let rest = Piece::constant(0.25, 1.0, 1.0 / 16.0).unwrap();
        let f = PiecewiseFunction::new(vec![p, rest]).unwrap().monotone_split().unwrap();
        let expected = (3.0 - 5f64.sqrt()) / 8.0;
        assert!(f.direction_changes().iter().any(|&t| close(t, expected, 1e-12)));
    }

    #[test]
    fn table_split_at_knots() {
        let p = Piece::table(vec![(0.0, 0.0), (0.3, 0.5), (0.6, 0.1), (1.0, 0.2)]).unwrap();
        let f = PiecewiseFunction::new(vec![p]).unwrap().monotone_split().unwrap();
        assert_eq!(f.direction_changes(), vec![0.3, 0.6]);
        assert!(close(f.interval_min(0.2, 0.9), 0.1, 1e-15));
        assert!(close(f.interval_max(0.0, 1.0), 0.5, 1e-15));
    }

    #[test]
    fn interval_extrema_without_metadata_scan() {
        let f = PiecewiseFunction::power_sum(vec![Term::new(1.0, 1.0), Term::new(-1.0, 3.0)]).unwrap();
        let peak = 2.0 * 3f64.sqrt() / 9.0;
        assert!(close(f.interval_max(0.0, 1.0), peak, 1e-12));
        assert!(close(f.interval_min(0.2, 0.9), 0.9 - 0.729, 1e-12));
    }

    #[test]
    fn combine_merges_junctions() {
        let a = PiecewiseFunction::new(vec![
            Piece::power_sum(0.0, 0.5, vec![Term::new(1.0, 1.0)]).unwrap(),
            Piece::power_sum(0.5, 1.0, vec![Term::new(0.5, 0.0)]).unwrap(),
        ])
        .unwrap();
        let b = PiecewiseFunction::new(vec![Piece::table(vec![(0.0, 0.0), (0.25, 0.5), (1.0, 0.5)]).unwrap()]).unwrap();
        let c = a.combine(2.0, &b, -1.0).unwrap();
        for &t in &[0.0, 0.1, 0.25, 0.4, 0.5, 0.7, 1.0] {
            assert!(close(c.value(t), 2.0 * a.value(t) - b.value(t), 1e-15));
        }
        assert_eq!(c.junctions(), vec![0.5]);
    }

    #[test]
    fn pointwise_min_splits_at_crossing() {
        let id = PiecewiseFunction::identity();
        let line = PiecewiseFunction::power_sum(vec![Term::new(0.5, 1.0), Term::new(0.2, 0.0)]).unwrap();
        let m = pointwise_min(&id, &line).unwrap();
        assert_eq!(m.junctions().len(), 1);
        assert!(close(m.junctions()[0], 0.4, 1e-15));
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            assert!(close(m.value(t), t.min(0.5 * t + 0.2), 1e-15));
        }
    }
}
