//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes a section source, which is either a builtin name or a
//! JSON section config, and returns plain strings or float arrays.

use serde_json::json;
use wasm_bindgen::prelude::*;

use splicebound::checks::{check_two_increasing, copulahood_criterion, fill_grid, matched_grid, phi_simple_check, CHECK_TOL};
use splicebound::{builtin, load_section, EvalContext, SectionPair, SurfaceKind, BUILTIN_NAMES};

const MAX_SIDE: usize = 400;

fn section(source: &str) -> Result<SectionPair, String> {
    let source = source.trim();
    let result = if source.starts_with('{') {
        load_section(source).map(|(_, s)| s)
    } else {
        builtin(source)
    };
    result.map_err(|e| e.to_string())
}

fn side(n: usize) -> Result<usize, String> {
    if (2..=MAX_SIDE).contains(&n) {
        Ok(n)
    } else {
        Err(format!("grid side must lie in [2, {MAX_SIDE}], got {n}"))
    }
}

/// JSON array of the builtin section names.
#[wasm_bindgen]
pub fn builtins() -> String {
    json!(BUILTIN_NAMES).to_string()
}

/// Surface values on the uniform `n × n` grid, row by row from `y = 1`
/// down to `y = 0` so the result maps straight onto canvas pixels. The
/// last `n` entries hold the curve `φ(i/(n−1))`.
#[wasm_bindgen]
pub fn surface_grid(source: &str, kind: &str, n: usize) -> Result<Vec<f64>, String> {
    let n = side(n)?;
    let kind: SurfaceKind = kind.parse()?;
    let ctx = EvalContext::new(section(source)?);
    let coords: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut out = Vec::with_capacity(n * n + n);
    for j in (0..n).rev() {
        for &x in &coords {
            out.push(ctx.surface(kind, x, coords[j]).map_err(|e| e.to_string())?);
        }
    }
    out.extend(coords.iter().map(|&t| ctx.section().phi().eval(t)));
    Ok(out)
}

/// Copulahood of the splice: the pair criterion next to a direct volume scan.
#[wasm_bindgen]
pub fn check_copula(source: &str, n: usize) -> Result<String, String> {
    let n = side(n)?;
    let s = section(source)?;
    let criterion = copulahood_criterion(&s, n, CHECK_TOL);
    let (xs, ys) = matched_grid(&s, n);
    let ctx = EvalContext::new(s);
    let grid = fill_grid(&ctx, SurfaceKind::Splice, xs, ys).map_err(|e| e.to_string())?;
    let direct = check_two_increasing(&grid, CHECK_TOL);
    Ok(json!({
        "copula": criterion.passed() && direct.passed(),
        "criterion": criterion,
        "grid": direct,
    })
    .to_string())
}

/// Largest gap between the splice and the greatest quasi-copula with the
/// same section, together with the φ-simple verdict.
#[wasm_bindgen]
pub fn compare_splice_a(source: &str, n: usize) -> Result<String, String> {
    let n = side(n)?;
    let ctx = EvalContext::new(section(source)?);
    let coords: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut worst = (0.0f64, 0.0, 0.0);
    for &x in &coords {
        for &y in &coords {
            let a = ctx.a_upper(x, y).map_err(|e| e.to_string())?;
            let s = ctx.splice(x, y).map_err(|e| e.to_string())?;
            if a - s > worst.0 {
                worst = (a - s, x, y);
            }
        }
    }
    Ok(json!({
        "max_gap": worst.0,
        "at": [worst.1, worst.2],
        "phi_simple": phi_simple_check(ctx.section(), n),
    })
    .to_string())
}
