//! Checkerboard linear-programming oracle for the pointwise supremum.
//!
//! Knots `xᵢ = i/n` and `yⱼ = φ(j/n)` cut the square into `n × n` cells.
//! A cell mass `m_ij ≥ 0` is feasible when its row sums equal `Δxᵢ`, its
//! column sums equal `Δyⱼ` and the cumulative mass over `[0, x_k] × [0, y_k]`
//! equals `Γ(x_k)`. Any copula with section `Γ` induces a feasible mass, so
//! maximizing the cumulative mass at a node bounds the supremum from above.
//! The program is built from these constraints alone and never consults the
//! closed-form splice.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use serde::Serialize;

use crate::error::OracleError;
use crate::model::SectionPair;
use crate::par::map_indices;
use crate::surfaces::EvalContext;

pub const MIN_KNOTS: usize = 2;
pub const MAX_KNOTS: usize = 64;
/// Tolerance for mass invariants.
pub const INVARIANT_TOL: f64 = 1e-10;
/// Lower side of the acceptance band for `LP − splice`.
pub const GAP_FLOOR: f64 = -1e-7;

/// Knot coordinates `(i/n, φ(i/n))`.
pub fn knots(section: &SectionPair, n: usize) -> (Vec<f64>, Vec<f64>) {
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let ys = xs.iter().map(|&x| section.phi().eval(x)).collect();
    (xs, ys)
}

/// `max_i (Δxᵢ + Δyᵢ)`.
pub fn mesh(section: &SectionPair, n: usize) -> f64 {
    let (xs, ys) = knots(section, n);
    (0..n)
        .map(|i| xs[i + 1] - xs[i] + ys[i + 1] - ys[i])
        .fold(0.0, f64::max)
}

fn check_size(n: usize) -> Result<(), OracleError> {
    if (MIN_KNOTS..=MAX_KNOTS).contains(&n) {
        Ok(())
    } else {
        Err(OracleError::KnotCount(n))
    }
}

fn check_node(n: usize, a: usize, b: usize) -> Result<(), OracleError> {
    if a == 0 || b == 0 || a >= n || b >= n {
        Err(OracleError::Node { a, b, n })
    } else {
        Ok(())
    }
}

/// A cell mass on the knot grid of a section.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckerboardProblem {
    pub n: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `Γ(x_k)` for `k = 1..n−1`; empty when the mass is not tied to a section.
    pub targets: Vec<f64>,
    /// `mass[i][j]` sits on `[xᵢ, xᵢ₊₁] × [yⱼ, yⱼ₊₁]`.
    pub mass: Vec<Vec<f64>>,
}

impl CheckerboardProblem {
    /// The mass a surface `c` induces on the knot grid of `section`.
    pub fn induced<F: Fn(f64, f64) -> f64>(section: &SectionPair, n: usize, c: F) -> Result<Self, OracleError> {
        check_size(n)?;
        let (xs, ys) = knots(section, n);
        let mass = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| c(xs[i + 1], ys[j + 1]) - c(xs[i], ys[j + 1]) - c(xs[i + 1], ys[j]) + c(xs[i], ys[j]))
                    .collect()
            })
            .collect();
        let targets = (1..n).map(|k| section.gamma().value(xs[k])).collect();
        Ok(CheckerboardProblem { n, xs, ys, targets, mass })
    }

    /// Independence mass on a uniform grid, with no section targets.
    pub fn independence(n: usize) -> Self {
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let cell = 1.0 / (n * n) as f64;
        CheckerboardProblem {
            n,
            ys: xs.clone(),
            xs,
            targets: Vec::new(),
            mass: vec![vec![cell; n]; n],
        }
    }

    /// Mass of `[0, x_a] × [0, y_b]`.
    pub fn cumulative(&self, a: usize, b: usize) -> f64 {
        self.mass[..a].iter().map(|row| row[..b].iter().sum::<f64>()).sum()
    }

    /// Non-negativity, margins and, when present, the section targets.
    pub fn check_invariants(&self, tol: f64) -> Result<(), OracleError> {
        let n = self.n;
        let fail = |what: String, excess: f64| Err(OracleError::Invariant { what, excess });
        for (i, row) in self.mass.iter().enumerate() {
            for (j, &m) in row.iter().enumerate() {
                if m < -tol {
                    return fail(format!("non-negativity of cell ({i}, {j})"), -m);
                }
            }
            let e = (row.iter().sum::<f64>() - (self.xs[i + 1] - self.xs[i])).abs();
            if e > tol {
                return fail(format!("row sum {i}"), e);
            }
        }
        for j in 0..n {
            let col: f64 = self.mass.iter().map(|row| row[j]).sum();
            let e = (col - (self.ys[j + 1] - self.ys[j])).abs();
            if e > tol {
                return fail(format!("column sum {j}"), e);
            }
        }
        for (k, &target) in self.targets.iter().enumerate() {
            let e = (self.cumulative(k + 1, k + 1) - target).abs();
            if e > tol {
                return fail(format!("section at knot {}", k + 1), e);
            }
        }
        Ok(())
    }

    fn prefix(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut p = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..n {
            for j in 0..n {
                p[i + 1][j + 1] = self.mass[i][j] + p[i][j + 1] + p[i + 1][j] - p[i][j];
            }
        }
        p
    }

    /// Distribution function of the mass spread uniformly inside each cell.
    pub fn extension(&self) -> Result<CheckerboardCopula, OracleError> {
        self.check_invariants(INVARIANT_TOL)?;
        Ok(CheckerboardCopula {
            xs: self.xs.clone(),
            ys: self.ys.clone(),
            mass: self.mass.clone(),
            prefix: self.prefix(),
        })
    }
}

/// The bilinear-in-cell extension of a feasible checkerboard mass.
#[derive(Clone, Debug)]
pub struct CheckerboardCopula {
    xs: Vec<f64>,
    ys: Vec<f64>,
    mass: Vec<Vec<f64>>,
    prefix: Vec<Vec<f64>>,
}

fn locate(knots: &[f64], t: f64) -> (usize, f64) {
    let n = knots.len() - 1;
    let i = knots.partition_point(|&k| k <= t).saturating_sub(1).min(n - 1);
    let u = ((t - knots[i]) / (knots[i + 1] - knots[i])).clamp(0.0, 1.0);
    (i, u)
}

impl CheckerboardCopula {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (i, u) = locate(&self.xs, x.clamp(0.0, 1.0));
        let (j, v) = locate(&self.ys, y.clamp(0.0, 1.0));
        let p = &self.prefix;
        p[i][j] + u * (p[i + 1][j] - p[i][j]) + v * (p[i][j + 1] - p[i][j]) + u * v * self.mass[i][j]
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
}

/// Validates `p` and evaluates its extension at `(x, y)`.
pub fn checkerboard_extend(p: &CheckerboardProblem, x: f64, y: f64) -> Result<f64, OracleError> {
    Ok(p.extension()?.eval(x, y))
}

/// The program in row form: objective coefficients and equality rows over
/// variables `i·n + j`.
struct LinearProgram {
    n: usize,
    objective: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, f64)>,
}

fn build_program(section: &SectionPair, n: usize, a: usize, b: usize) -> LinearProgram {
    let (xs, ys) = knots(section, n);
    let var = |i: usize, j: usize| i * n + j;
    let mut objective = vec![0.0; n * n];
    for i in 0..a {
        for j in 0..b {
            objective[var(i, j)] = 1.0;
        }
    }
    let mut rows = Vec::with_capacity(3 * n);
    for i in 0..n {
        rows.push(((0..n).map(|j| (var(i, j), 1.0)).collect(), xs[i + 1] - xs[i]));
    }
    // the last column sum follows from the others
    for j in 0..n - 1 {
        rows.push(((0..n).map(|i| (var(i, j), 1.0)).collect(), ys[j + 1] - ys[j]));
    }
    for k in 1..n {
        let terms = (0..k).flat_map(|i| (0..k).map(move |j| (var(i, j), 1.0))).collect();
        rows.push((terms, section.gamma().value(xs[k])));
    }
    LinearProgram { n, objective, rows }
}

/// Optimal cumulative mass at node `(a, b)` and a mass attaining it.
pub fn lp_solve(section: &SectionPair, n: usize, a: usize, b: usize) -> Result<(f64, CheckerboardProblem), OracleError> {
    check_size(n)?;
    check_node(n, a, b)?;
    let lp = build_program(section, n, a, b);
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<Variable> = lp.objective.iter().map(|&c| problem.add_var(c, (0.0, f64::INFINITY))).collect();
    for (terms, rhs) in &lp.rows {
        let expr: Vec<(Variable, f64)> = terms.iter().map(|&(v, c)| (vars[v], c)).collect();
        problem.add_constraint(expr.as_slice(), ComparisonOp::Eq, *rhs);
    }
    let solution = problem.solve().map_err(|e| match e {
        minilp::Error::Infeasible => OracleError::Infeasible,
        other => OracleError::Solver(other.to_string()),
    })?;
    let (xs, ys) = knots(section, n);
    let mass = (0..n)
        .map(|i| (0..n).map(|j| solution[vars[i * n + j]].max(0.0)).collect())
        .collect();
    let targets = (1..n).map(|k| section.gamma().value(xs[k])).collect();
    let p = CheckerboardProblem { n, xs, ys, targets, mass };
    Ok((solution.objective(), p))
}

/// Supremum of the cumulative mass at node `(a, b)` over feasible masses.
pub fn lp_sup_at(section: &SectionPair, n: usize, a: usize, b: usize) -> Result<f64, OracleError> {
    lp_solve(section, n, a, b).map(|(v, _)| v)
}

/// Plain-text tableau of the program for external solvers:
///
/// ```text
/// rows R
/// cols C
/// objective max
/// c_1 ... c_C
/// constraints
/// a_11 ... a_1C = b_1
/// ```
pub fn lp_dump(section: &SectionPair, n: usize, a: usize, b: usize) -> Result<String, OracleError> {
    check_size(n)?;
    check_node(n, a, b)?;
    let lp = build_program(section, n, a, b);
    let cols = lp.n * lp.n;
    let fmt_row = |dense: &[f64]| dense.iter().map(|v| format_number(*v)).collect::<Vec<_>>().join(" ");
    let mut out = format!("rows {}\ncols {}\nobjective max\n{}\nconstraints\n", lp.rows.len(), cols, fmt_row(&lp.objective));
    for (terms, rhs) in &lp.rows {
        let mut dense = vec![0.0; cols];
        for &(v, c) in terms {
            dense[v] = c;
        }
        out.push_str(&fmt_row(&dense));
        out.push_str(" = ");
        out.push_str(&format_number(*rhs));
        out.push('\n');
    }
    Ok(out)
}

fn format_number(v: f64) -> String {
    crate::format::float(v)
}

/// Curve nodes `(k, k)` plus up to five off-curve interior nodes.
pub fn default_nodes(n: usize) -> Vec<(usize, usize)> {
    let mut nodes: Vec<(usize, usize)> = (1..n).map(|k| (k, k)).collect();
    let q = |num: usize| (num * n) / 4;
    let candidates = [(q(2), q(1)), (q(1), q(2)), (q(3), q(2)), (q(2), q(3)), (q(3), q(1))];
    for (a, b) in candidates {
        if a != b && a > 0 && b > 0 && a < n && b < n && !nodes.contains(&(a, b)) {
            nodes.push((a, b));
        }
    }
    nodes
}

/// One row of an oracle comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeComparison {
    pub a: usize,
    pub b: usize,
    pub gap: f64,
    pub lp: f64,
    pub on_curve: bool,
    pub splice: f64,
    pub within_band: bool,
    pub x: f64,
    pub y: f64,
}

/// Solves one program per node and compares it with the splice; the band is
/// `[GAP_FLOOR, 2·mesh]`.
pub fn compare_nodes(ctx: &EvalContext, n: usize, nodes: &[(usize, usize)]) -> Result<Vec<NodeComparison>, OracleError> {
    check_size(n)?;
    let section = ctx.section();
    let (xs, ys) = knots(section, n);
    let ceiling = 2.0 * mesh(section, n);
    let rows = map_indices(nodes.len(), |k| {
        let (a, b) = nodes[k];
        let lp = lp_sup_at(section, n, a, b)?;
        let splice = ctx.splice(xs[a], ys[b])?;
        let gap = lp - splice;
        Ok(NodeComparison {
            a,
            b,
            gap,
            lp,
            on_curve: a == b,
            splice,
            within_band: (GAP_FLOOR..=ceiling).contains(&gap),
            x: xs[a],
            y: ys[b],
        })
    });
    rows.into_iter().collect()
}
