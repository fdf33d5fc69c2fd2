//! Grid surfaces and the decision procedures run on them.
//!
//! Every universally quantified condition is tested on a finite point set
//! enriched with the breakpoints of the section, so a passing verdict means
//! "pass at this resolution", never a proof over the continuum.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, GridError};
use crate::model::SectionPair;
use crate::par::map_indices;
use crate::piecewise::PiecewiseFunction;
use crate::surfaces::{EvalContext, SurfaceKind};

pub const CHECK_TOL: f64 = 1e-9;
/// Reports keep at most this many failing witnesses.
pub const MAX_WITNESSES: usize = 8;
/// Step halvings used to tighten a failing witness.
pub const REFINE_ROUNDS: usize = 20;
/// Half-width, in cells, of the rectangle search around a negative cell.
pub const RECTANGLE_SEARCH_RADIUS: usize = 8;
/// Coordinates closer than this are merged.
pub const COORD_MERGE_TOL: f64 = 1e-12;

pub const DERIVATIVE_STEP: f64 = 1e-6;
pub const DERIVATIVE_TOL: f64 = 1e-6;

/// `n + 1` equispaced coordinates `i/n`.
pub fn uniform_coords(n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Sorts, clips to `[0, 1]`, adds both ends and merges near-duplicates
/// (the first of a cluster wins).
pub fn merge_coords(mut coords: Vec<f64>) -> Vec<f64> {
    coords.retain(|t| (0.0..=1.0).contains(t));
    coords.push(0.0);
    coords.push(1.0);
    coords.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(coords.len());
    for t in coords {
        match out.last() {
            Some(&last) if t - last <= COORD_MERGE_TOL => {}
            _ => out.push(t),
        }
    }
    // keep exact end points
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

/// Uniform points plus every breakpoint of the section.
pub fn criterion_points(section: &SectionPair, n: usize) -> Vec<f64> {
    let mut pts = uniform_coords(n);
    pts.extend(section.breakpoints());
    merge_coords(pts)
}

/// Grid matched to the criterion scans: `xs` are the criterion points and
/// `ys` add their images under `φ`, so curve nodes are grid nodes.
pub fn matched_grid(section: &SectionPair, n: usize) -> (Vec<f64>, Vec<f64>) {
    let xs = criterion_points(section, n);
    let mut ys = uniform_coords(n);
    ys.extend(xs.iter().map(|&x| section.phi().eval(x)));
    (xs, merge_coords(ys))
}

fn validate_coords(name: &str, c: &[f64]) -> Result<(), GridError> {
    if c.len() < 2 || c[0] != 0.0 || c[c.len() - 1] != 1.0 {
        return Err(GridError::Coordinates(format!("{name} must run from 0 to 1")));
    }
    if let Some(w) = c.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(GridError::Coordinates(format!(
            "{name} not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Values of a surface on a rectangular grid; `values[i][j]` sits at
/// `(xs[i], ys[j])`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSurface {
    kind: Option<SurfaceKind>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl GridSurface {
    /// Wraps precomputed values. Values are not required to lie in `[W, M]`
    /// so that the checks can be pointed at arbitrary data.
    pub fn from_values(
        kind: Option<SurfaceKind>,
        xs: Vec<f64>,
        ys: Vec<f64>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self, GridError> {
        validate_coords("xs", &xs)?;
        validate_coords("ys", &ys)?;
        let bad_shape = values.len() != xs.len() || values.iter().any(|row| row.len() != ys.len());
        if bad_shape {
            return Err(GridError::Shape {
                rows: values.len(),
                cols: values.first().map_or(0, Vec::len),
                expected_rows: xs.len(),
                expected_cols: ys.len(),
            });
        }
        Ok(GridSurface { kind, xs, ys, values })
    }

    /// Evaluates `f` on every node, rows in parallel.
    pub fn from_fn<F>(kind: Option<SurfaceKind>, xs: Vec<f64>, ys: Vec<f64>, f: F) -> Result<Self, GridError>
    where
        F: Fn(f64, f64) -> Result<f64, EvalError> + Sync + Send,
    {
        validate_coords("xs", &xs)?;
        validate_coords("ys", &ys)?;
        let rows = map_indices(xs.len(), |i| {
            ys.iter()
                .map(|&y| {
                    f(xs[i], y).map_err(|source| GridError::Eval { x: xs[i], y, source })
                })
                .collect::<Result<Vec<f64>, GridError>>()
        });
        let values = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(GridSurface { kind, xs, ys, values })
    }

    pub fn kind(&self) -> Option<SurfaceKind> {
        self.kind
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    /// Volume of the rectangle `[xs[i1], xs[i2]] × [ys[j1], ys[j2]]`.
    pub fn volume(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        self.values[i2][j2] - self.values[i1][j2] - self.values[i2][j1] + self.values[i1][j1]
    }

    pub fn x_index(&self, x: f64) -> Option<usize> {
        self.xs.iter().position(|&t| (t - x).abs() <= COORD_MERGE_TOL)
    }

    pub fn y_index(&self, y: f64) -> Option<usize> {
        self.ys.iter().position(|&t| (t - y).abs() <= COORD_MERGE_TOL)
    }

    /// Largest absolute difference to another grid on the same nodes.
    pub fn max_abs_diff(&self, other: &GridSurface) -> Option<f64> {
        if self.xs != other.xs || self.ys != other.ys {
            return None;
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            for (u, v) in a.iter().zip(b) {
                worst = worst.max((u - v).abs());
            }
        }
        Some(worst)
    }
}

/// Fills a grid with one surface of `ctx`; results do not depend on the
/// number of worker threads.
pub fn fill_grid(ctx: &EvalContext, kind: SurfaceKind, xs: Vec<f64>, ys: Vec<f64>) -> Result<GridSurface, GridError> {
    GridSurface::from_fn(Some(kind), xs, ys, |x, y| ctx.surface(kind, x, y))
}

/// Volume of `[x1, x2] × [y1, y2]` under a surface.
pub fn rectangle_volume(ctx: &EvalContext, kind: SurfaceKind, x1: f64, x2: f64, y1: f64, y2: f64) -> Result<f64, EvalError> {
    Ok(ctx.surface(kind, x2, y2)? - ctx.surface(kind, x1, y2)? - ctx.surface(kind, x2, y1)? + ctx.surface(kind, x1, y1)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PassAtResolution,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub boundary: bool,
    pub coords: Vec<f64>,
    pub slack: f64,
}

impl Witness {
    pub fn new(coords: Vec<f64>, slack: f64) -> Self {
        Witness {
            boundary: false,
            coords,
            slack,
        }
    }

    fn boundary(coords: Vec<f64>, slack: f64) -> Self {
        Witness {
            boundary: true,
            coords,
            slack,
        }
    }
}

fn witness_order(a: &Witness, b: &Witness) -> Ordering {
    a.slack.total_cmp(&b.slack).then_with(|| {
        a.coords
            .iter()
            .zip(&b.coords)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// The `cap` smallest-slack witnesses in a deterministic order.
fn keep_worst(mut items: Vec<Witness>, cap: usize) -> Vec<Witness> {
    items.sort_by(witness_order);
    items.truncate(cap);
    items
}

/// Outcome of one check. Fields are declared in key order so serialized
/// JSON comes out sorted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub check: String,
    pub metrics: BTreeMap<String, f64>,
    pub resolution: usize,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
}

impl VerdictReport {
    fn new(check: &str, resolution: usize, tolerance: f64, failures: Vec<Witness>, boundary: Vec<Witness>) -> Self {
        let verdict = if failures.iter().any(|w| w.slack < -tolerance) {
            Verdict::Fail
        } else {
            Verdict::PassAtResolution
        };
        let mut witnesses = keep_worst(failures, MAX_WITNESSES);
        witnesses.extend(keep_worst(boundary, MAX_WITNESSES));
        VerdictReport {
            check: check.to_string(),
            metrics: BTreeMap::new(),
            resolution,
            tolerance,
            verdict,
            witnesses,
        }
    }

    fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::PassAtResolution
    }

    /// Passed, but some condition was only decided inside the tolerance band.
    pub fn boundary_only(&self) -> bool {
        self.passed() && self.witnesses.iter().any(|w| w.boundary)
    }

    /// The tightest witness, if any.
    pub fn worst(&self) -> Option<&Witness> {
        self.witnesses.iter().filter(|w| !w.boundary).min_by(|a, b| witness_order(a, b))
    }
}

fn min_slack(items: &[Witness]) -> f64 {
    items.iter().map(|w| w.slack).fold(f64::INFINITY, f64::min)
}

/// Boundary condition, monotonicity and the 1-Lipschitz property on all
/// adjacent node pairs.
pub fn check_quasi_copula(g: &GridSurface, tol: f64) -> VerdictReport {
    let (xs, ys) = (g.xs(), g.ys());
    let (nx, ny) = (xs.len(), ys.len());
    let rows = map_indices(nx, |i| {
        let mut fails = Vec::new();
        let mut worst = f64::INFINITY;
        let mut note = |coords: Vec<f64>, slack: f64, fails: &mut Vec<Witness>| {
            worst = worst.min(slack);
            if slack < -tol {
                fails.push(Witness::new(coords, slack));
            }
        };
        for j in 0..ny {
            let v = g.value(i, j);
            let (x, y) = (xs[i], ys[j]);
            let mut boundary_err: f64 = 0.0;
            if i == 0 || j == 0 {
                boundary_err = boundary_err.max(v.abs());
            }
            if i == nx - 1 {
                boundary_err = boundary_err.max((v - y).abs());
            }
            if j == ny - 1 {
                boundary_err = boundary_err.max((v - x).abs());
            }
            note(vec![x, y], -boundary_err, &mut fails);
            if i + 1 < nx {
                let d = g.value(i + 1, j) - v;
                note(vec![x, y, xs[i + 1], y], d.min(xs[i + 1] - x - d.abs()), &mut fails);
            }
            if j + 1 < ny {
                let d = g.value(i, j + 1) - v;
                note(vec![x, y, x, ys[j + 1]], d.min(ys[j + 1] - y - d.abs()), &mut fails);
            }
        }
        (keep_worst(fails, MAX_WITNESSES), worst)
    });
    let worst = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let fails: Vec<Witness> = rows.into_iter().flat_map(|r| r.0).collect();
    VerdictReport::new("quasi-copula", nx.max(ny), tol, fails, Vec::new()).metric("min_slack", worst)
}

/// Non-negative volume of every grid cell. On failure the report leads with
/// the most negative multi-cell rectangle found near the worst cell.
pub fn check_two_increasing(g: &GridSurface, tol: f64) -> VerdictReport {
    let (xs, ys) = (g.xs(), g.ys());
    let (nx, ny) = (xs.len(), ys.len());
    let rows = map_indices(nx - 1, |i| {
        let mut fails = Vec::new();
        let mut worst = (f64::INFINITY, i, 0);
        for j in 0..ny - 1 {
            let v = g.volume(i, i + 1, j, j + 1);
            if v < worst.0 {
                worst = (v, i, j);
            }
            if v < -tol {
                fails.push(Witness::new(vec![xs[i], xs[i + 1], ys[j], ys[j + 1]], v));
            }
        }
        (keep_worst(fails, MAX_WITNESSES), worst)
    });
    let worst = rows
        .iter()
        .map(|r| r.1)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)))
        .unwrap_or((0.0, 0, 0));
    let mut fails: Vec<Witness> = rows.into_iter().flat_map(|r| r.0).collect();
    let mut searched = worst.0;
    if worst.0 < -tol {
        let r = RECTANGLE_SEARCH_RADIUS;
        let (ci, cj) = (worst.1, worst.2);
        let (i_lo, i_hi) = (ci.saturating_sub(r), (ci + 1 + r).min(nx - 1));
        let (j_lo, j_hi) = (cj.saturating_sub(r), (cj + 1 + r).min(ny - 1));
        let mut best = (worst.0, ci, ci + 1, cj, cj + 1);
        for i1 in i_lo..i_hi {
            for i2 in i1 + 1..=i_hi {
                for j1 in j_lo..j_hi {
                    for j2 in j1 + 1..=j_hi {
                        let v = g.volume(i1, i2, j1, j2);
                        if v < best.0 {
                            best = (v, i1, i2, j1, j2);
                        }
                    }
                }
            }
        }
        searched = best.0;
        fails.push(Witness::new(vec![xs[best.1], xs[best.2], ys[best.3], ys[best.4]], best.0));
    }
    VerdictReport::new("two-increasing", nx.max(ny), tol, fails, Vec::new())
        .metric("min_cell_volume", worst.0)
        .metric("min_rectangle_volume", searched)
}

/// Variation of a gap function from its monotone decomposition.
fn gap_variation(f: &PiecewiseFunction, a: f64, b: f64) -> f64 {
    crate::variation::exact(f, a.min(b), a.max(b)).expect("gap functions carry a monotone decomposition")
}

/// Slacks of the pair inequalities at `x₁ < x₂` (each holds when `≥ 0`):
///
/// * `ineq1`: `Γ(x₁) + Γ(x₂) − x₁ − φ(x₁)`
/// * `s2`: `V(hat) − hat(x₁) − hat(x₂)`
/// * `s3`: `V(tilde) − tilde(x₁) − tilde(x₂)`
/// * `s4`: `V(hat) + V(tilde) − (x₂ − x₁) − (φ(x₂) − φ(x₁))`
///
/// with variations over `[x₁, x₂]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairSlacks {
    pub ineq1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
}

impl PairSlacks {
    /// Slack of the disjunction "(2) or (3) or (4)".
    pub fn best(&self) -> f64 {
        self.s2.max(self.s3).max(self.s4)
    }
}

pub fn pair_slacks(section: &SectionPair, x1: f64, x2: f64) -> PairSlacks {
    let (hat, tilde, gamma) = (section.hat(), section.tilde(), section.gamma());
    let phi = section.phi();
    let vh = gap_variation(hat, x1, x2);
    let vt = gap_variation(tilde, x1, x2);
    PairSlacks {
        ineq1: gamma.value(x1) + gamma.value(x2) - x1 - phi.eval(x1),
        s2: vh - hat.value(x1) - hat.value(x2),
        s3: vt - tilde.value(x1) - tilde.value(x2),
        s4: vh + vt - (x2 - x1) - (phi.eval(x2) - phi.eval(x1)),
    }
}

/// Pattern search that lowers `objective` over pairs `0 ≤ a < b ≤ 1`,
/// halving the step `REFINE_ROUNDS` times.
fn refine_pair(start: (f64, f64), step: f64, objective: impl Fn(f64, f64) -> f64) -> (f64, f64, f64) {
    let (mut a, mut b) = start;
    let mut best = objective(a, b);
    let mut step = step;
    let moves = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0)];
    for _ in 0..REFINE_ROUNDS {
        loop {
            let mut improved = false;
            for (da, db) in moves {
                let (na, nb) = ((a + da * step).clamp(0.0, 1.0), (b + db * step).clamp(0.0, 1.0));
                if na >= nb {
                    continue;
                }
                let v = objective(na, nb);
                if v < best {
                    best = v;
                    a = na;
                    b = nb;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        step *= 0.5;
    }
    (a, b, best)
}

fn pair_scan<F>(pts: &[f64], tol: f64, eval: F) -> (Vec<Witness>, Vec<Witness>, BTreeMap<String, f64>)
where
    F: Fn(f64, f64) -> Option<(f64, BTreeMap<&'static str, f64>)> + Sync + Send,
{
    let rows = map_indices(pts.len(), |i| {
        let mut fails = Vec::new();
        let mut boundary = Vec::new();
        let mut stats: BTreeMap<&'static str, f64> = BTreeMap::new();
        for j in i + 1..pts.len() {
            let Some((slack, extra)) = eval(pts[i], pts[j]) else {
                continue;
            };
            if slack < -tol {
                fails.push(Witness::new(vec![pts[i], pts[j]], slack));
            } else if slack <= tol {
                boundary.push(Witness::boundary(vec![pts[i], pts[j]], slack));
            }
            for (k, v) in extra {
                let e = stats.entry(k).or_insert(v);
                *e = e.max(v);
            }
        }
        (keep_worst(fails, MAX_WITNESSES), keep_worst(boundary, MAX_WITNESSES), stats)
    });
    let mut fails = Vec::new();
    let mut boundary = Vec::new();
    let mut stats: BTreeMap<String, f64> = BTreeMap::new();
    for (f, b, s) in rows {
        fails.extend(f);
        boundary.extend(b);
        for (k, v) in s {
            let e = stats.entry(k.to_string()).or_insert(v);
            *e = e.max(v);
        }
    }
    (fails, boundary, stats)
}

/// Tests, for every pair of criterion points, that at least one of the pair
/// inequalities (2), (3), (4) holds. Failure means the splice is not a copula.
pub fn copulahood_criterion(section: &SectionPair, n: usize, tol: f64) -> VerdictReport {
    let pts = criterion_points(section, n);
    let (mut fails, _, stats) = pair_scan(&pts, tol, |a, b| {
        let s = pair_slacks(section, a, b);
        let mut extra = BTreeMap::new();
        extra.insert("max_abs_s4", s.s4.abs());
        extra.insert("max_s4", s.s4);
        extra.insert("neg_min_best", -s.best());
        Some((s.best(), extra))
    });
    if let Some(start) = keep_worst(fails.clone(), 1).pop() {
        let (a, b, v) = refine_pair((start.coords[0], start.coords[1]), 1.0 / n as f64, |a, b| {
            pair_slacks(section, a, b).best()
        });
        fails.push(Witness::new(vec![a, b], v));
    }
    let pairs = pts.len() * (pts.len() - 1) / 2;
    let mut report = VerdictReport::new("copulahood", n, tol, fails, Vec::new())
        .metric("pairs", pairs as f64)
        .metric("points", pts.len() as f64);
    for (k, v) in stats {
        match k.as_str() {
            "neg_min_best" => report = report.metric("min_best_slack", -v),
            _ => report = report.metric(&k, v),
        }
    }
    report
}

/// Slack of the interval conditions on `[x, y]`; `None` when neither gap
/// function dips below its endpoint values by more than `tol`.
pub fn coincidence_slack(section: &SectionPair, x: f64, y: f64, tol: f64) -> Option<f64> {
    let phi = section.phi();
    let mut worst: Option<f64> = None;
    let tilde = section.tilde();
    let (tx, ty) = (tilde.value(x), tilde.value(y));
    if tx.min(ty) - tilde.interval_min(x, y) > tol {
        let s = (phi.eval(y) - x) - tx.max(ty);
        worst = Some(worst.map_or(s, |w: f64| w.min(s)));
    }
    let hat = section.hat();
    let (hx, hy) = (hat.value(x), hat.value(y));
    if hx.min(hy) - hat.interval_min(x, y) > tol {
        let s = (y - phi.eval(x)) - hx.max(hy);
        worst = Some(worst.map_or(s, |w: f64| w.min(s)));
    }
    worst
}

/// Tests the interval form of the coincidence characterization: whenever a
/// gap function dips strictly inside `[x, y]`, the matching strict
/// inequality must hold. Pass means the splice equals `A` at this resolution.
pub fn coincidence_criterion(section: &SectionPair, n: usize, tol: f64) -> VerdictReport {
    let pts = criterion_points(section, n);
    let (mut fails, boundary, _) = pair_scan(&pts, tol, |a, b| coincidence_slack(section, a, b, tol).map(|s| (s, BTreeMap::new())));
    if let Some(start) = keep_worst(fails.clone(), 1).pop() {
        let (a, b, v) = refine_pair((start.coords[0], start.coords[1]), 1.0 / n as f64, |a, b| {
            coincidence_slack(section, a, b, tol).unwrap_or(f64::INFINITY)
        });
        fails.push(Witness::new(vec![a, b], v));
    }
    let worst = min_slack(&fails);
    let mut report = VerdictReport::new("coincidence", n, tol, fails, boundary).metric("points", pts.len() as f64);
    if worst.is_finite() {
        report = report.metric("min_slack", worst);
    }
    report
}

/// Quasi-concavity of both gap functions over all pairs of criterion points.
pub fn phi_simple_report(section: &SectionPair, n: usize, tol: f64) -> VerdictReport {
    let pts = criterion_points(section, n);
    let dip = |f: &PiecewiseFunction, a: f64, b: f64| f.interval_min(a, b) - f.value(a).min(f.value(b));
    let (fails, _, _) = pair_scan(&pts, tol, |a, b| {
        let s = dip(section.hat(), a, b).min(dip(section.tilde(), a, b));
        // only failures matter; ties at zero are the normal case
        (s < -tol).then(|| (s, BTreeMap::new()))
    });
    VerdictReport::new("phi-simple", n, tol, fails, Vec::new()).metric("points", pts.len() as f64)
}

pub fn phi_simple_check(section: &SectionPair, n: usize) -> bool {
    phi_simple_report(section, n, CHECK_TOL).passed()
}

/// Monotonicity of `2t − Γ(t)` and `2t − Γ(φ⁻¹(t))` across adjacent samples.
pub fn k_condition_report(section: &SectionPair, samples: usize, tol: f64) -> VerdictReport {
    let phi = section.phi();
    let gamma = section.gamma();
    let mut pts = uniform_coords(samples);
    for t in section.breakpoints() {
        pts.push(t);
        pts.push(phi.eval(t));
    }
    let pts = merge_coords(pts);
    let g1: Vec<f64> = pts.iter().map(|&t| 2.0 * t - gamma.value(t)).collect();
    let g2: Vec<f64> = pts
        .iter()
        .map(|&t| 2.0 * t - gamma.value(phi.inverse(t).expect("points lie in [0, 1]")))
        .collect();
    let mut fails = Vec::new();
    let mut worst = f64::INFINITY;
    for k in 0..pts.len() - 1 {
        for (map, g) in [(1.0, &g1), (2.0, &g2)] {
            let s = g[k + 1] - g[k];
            worst = worst.min(s);
            if s < -tol {
                fails.push(Witness::new(vec![map, pts[k], pts[k + 1]], s));
            }
        }
    }
    VerdictReport::new("k-condition", samples, tol, fails, Vec::new()).metric("min_increment", worst)
}

pub fn k_copula_condition(section: &SectionPair, samples: usize) -> bool {
    k_condition_report(section, samples, CHECK_TOL).passed()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeVerdict {
    SufficientPass,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub verdict: DerivativeVerdict,
    /// Samples inside `{Γ < min{t, φ(t)}}` away from kinks.
    pub tested: usize,
    /// Largest distance of `Γ′` to the nearer of `0` and `1 + φ′`.
    pub worst_deviation: f64,
    pub worst_t: Option<f64>,
}

/// Sufficient copulahood test: `Γ′ ∈ {0, 1 + φ′}` on the set where
/// `Γ < min{t, φ(t)}`, with derivatives from central differences.
pub fn derivative_criterion(section: &SectionPair, samples: usize) -> DerivativeReport {
    let h = DERIVATIVE_STEP;
    let phi = section.phi();
    let gamma = section.gamma();
    let mut kinks = gamma.kinks();
    kinks.extend(phi.function().kinks());
    let near_kink = |t: f64| kinks.iter().any(|&k| (t - k).abs() <= 2.0 * h);
    let mut tested = 0;
    let mut worst = (0.0, None);
    for k in 0..samples {
        let t = (k as f64 + 0.5) / samples as f64;
        if t - 2.0 * h <= 0.0 || t + 2.0 * h >= 1.0 || near_kink(t) {
            continue;
        }
        if gamma.value(t) >= t.min(phi.eval(t)) - CHECK_TOL {
            continue;
        }
        tested += 1;
        let dg = (gamma.value(t + h) - gamma.value(t - h)) / (2.0 * h);
        let dphi = (phi.eval(t + h) - phi.eval(t - h)) / (2.0 * h);
        let dev = dg.abs().min((dg - 1.0 - dphi).abs());
        if dev > worst.0 {
            worst = (dev, Some(t));
        }
    }
    DerivativeReport {
        verdict: if worst.0 <= DERIVATIVE_TOL {
            DerivativeVerdict::SufficientPass
        } else {
            DerivativeVerdict::Inconclusive
        },
        tested,
        worst_deviation: worst.0,
        worst_t: worst.1,
    }
}

/// Interior nodes where the surface equals `M = min{x, y}`.
pub fn m_behavior_scan(g: &GridSurface, tol: f64) -> Vec<[f64; 2]> {
    let (xs, ys) = (g.xs(), g.ys());
    let mut out = Vec::new();
    for i in 1..xs.len() - 1 {
        for j in 1..ys.len() - 1 {
            if (g.value(i, j) - xs[i].min(ys[j])).abs() <= tol {
                out.push([xs[i], ys[j]]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::builtin;
    use crate::surfaces::reference;

    fn ctx(name: &str) -> EvalContext {
        EvalContext::new(builtin(name).unwrap())
    }

    fn reference_grid(kind: SurfaceKind, n: usize) -> GridSurface {
        GridSurface::from_fn(Some(kind), uniform_coords(n), uniform_coords(n), |x, y| reference(kind, x, y)).unwrap()
    }

    #[test]
    fn merge_coords_dedups_and_bounds() {
        let c = merge_coords(vec![0.5, 0.5 + 1e-13, 0.25, 1.0, 2.0, -1.0]);
        assert_eq!(c, vec![0.0, 0.25, 0.5, 1.0]);
    }

    #[test]
    fn fill_m_grid() {
        let g = fill_grid(&ctx("example-1"), SurfaceKind::M, vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 1.0]).unwrap();
        for (i, x) in g.xs().iter().enumerate() {
            for (j, y) in g.ys().iter().enumerate() {
                assert_eq!(g.value(i, j), x.min(*y));
            }
        }
    }

    #[test]
    fn splice_grid_hits_curve_node() {
        let g = fill_grid(
            &ctx("example-1"),
            SurfaceKind::Splice,
            vec![0.0, 1.0 / 3.0, 1.0],
            vec![0.0, 1.0 / 9.0, 1.0],
        )
        .unwrap();
        assert!((g.value(1, 1) - 1.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn bad_coordinates_rejected() {
        assert!(matches!(
            GridSurface::from_values(None, vec![0.0, 0.7, 0.5, 1.0], uniform_coords(1), vec![vec![0.0; 2]; 4]),
            Err(GridError::Coordinates(_))
        ));
        assert!(matches!(
            GridSurface::from_values(None, uniform_coords(2), uniform_coords(2), vec![vec![0.0; 3]; 2]),
            Err(GridError::Shape { .. })
        ));
    }

    #[test]
    fn reference_quasi_copula_checks() {
        assert!(check_quasi_copula(&reference_grid(SurfaceKind::W, 20), CHECK_TOL).passed());
        assert!(check_two_increasing(&reference_grid(SurfaceKind::M, 20), CHECK_TOL).passed());
        let pi = reference_grid(SurfaceKind::Pi, 4);
        let mut values = pi.values().to_vec();
        values[4][2] = 0.0; // (1, 0.5) must equal 0.5
        let broken = GridSurface::from_values(None, pi.xs().to_vec(), pi.ys().to_vec(), values).unwrap();
        let r = check_quasi_copula(&broken, CHECK_TOL);
        assert!(!r.passed());
        assert!(r.witnesses.iter().any(|w| w.coords == vec![1.0, 0.5]));
    }

    #[test]
    fn m_behavior_reference_grids() {
        assert!(m_behavior_scan(&reference_grid(SurfaceKind::Pi, 10), CHECK_TOL).is_empty());
        assert_eq!(m_behavior_scan(&reference_grid(SurfaceKind::M, 10), CHECK_TOL).len(), 81);
    }

    #[test]
    fn pair_slacks_of_cubic_section() {
        let s = builtin("example-1").unwrap();
        let p = pair_slacks(&s, 0.25, 1.0 / 3.0);
        assert!(p.best() < -1e-3, "{p:?}");
        assert!(p.s4 <= 1e-12);
    }

    #[test]
    fn derivative_criterion_cases() {
        let ex1 = builtin("example-1").unwrap();
        assert_eq!(derivative_criterion(&ex1, 1000).verdict, DerivativeVerdict::Inconclusive);
        let fam = builtin("interval-family").unwrap();
        let r = derivative_criterion(&fam, 1000);
        assert_eq!(r.verdict, DerivativeVerdict::SufficientPass, "{r:?}");
        assert!(r.tested > 900);
        let upper = crate::model::interval_family_section(crate::model::CurveMap::power(2.0).unwrap(), &[]).unwrap();
        let r = derivative_criterion(&upper, 1000);
        assert_eq!(r.verdict, DerivativeVerdict::SufficientPass);
        assert_eq!(r.tested, 0);
    }

    #[test]
    fn k_condition_cases() {
        assert!(k_copula_condition(&builtin("diag-pi").unwrap(), 512));
        assert!(!k_copula_condition(&builtin("interval-family").unwrap(), 512));
        let upper = crate::model::interval_family_section(crate::model::CurveMap::power(2.0).unwrap(), &[]).unwrap();
        assert!(k_copula_condition(&upper, 512));
    }

    #[test]
    fn phi_simple_cases() {
        assert!(phi_simple_check(&builtin("example-1").unwrap(), 100));
        assert!(!phi_simple_check(&builtin("example-2").unwrap(), 100));
        let upper = crate::model::interval_family_section(crate::model::CurveMap::power(2.0).unwrap(), &[]).unwrap();
        assert!(phi_simple_check(&upper, 100));
    }

    #[test]
    fn report_serializes_sorted() {
        let r = coincidence_criterion(&builtin("example-1").unwrap(), 40, CHECK_TOL);
        let json = serde_json::to_string(&r).unwrap();
        let keys = ["\"check\"", "\"metrics\"", "\"resolution\"", "\"tolerance\"", "\"verdict\"", "\"witnesses\""];
        let pos: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{json}");
        assert!(json.contains("\"pass-at-resolution\""));
    }
}
