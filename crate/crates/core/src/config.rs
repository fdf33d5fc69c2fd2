//! JSON section configs and the built-in sections.
//!
//! ```json
//! {
//!   "name": "cubic",
//!   "phi":   {"pieces": [{"domain": [0, 1], "kind": "power-sum", "terms": [[1, 2]]}]},
//!   "gamma": {"pieces": [{"kind": "table", "knots": [[0, 0], [0.5, 0.1], [1, 1]]}]}
//! }
//! ```
//!
//! Any scalar may be written as a decimal or as a `[num, den]` pair.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ModelError};
use crate::model::{interval_family_section, validate_section, CurveMap, SectionPair, DEFAULT_SECTION_SAMPLES};
use crate::piecewise::{Monotonicity, Piece, PiecewiseFunction, Term};

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "example-1",
    "example-2",
    "example-3",
    "example-5ii",
    "diag-pi",
    "interval-family",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Decimal(f64),
    Ratio([f64; 2]),
}

impl Scalar {
    pub fn value(self) -> Result<f64, ConfigError> {
        match self {
            Scalar::Decimal(v) => Ok(v),
            Scalar::Ratio([num, den]) => {
                let v = num / den;
                if den == 0.0 || !v.is_finite() {
                    Err(ConfigError::Rational { num, den })
                } else {
                    Ok(v)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PieceConfig {
    PowerSum {
        domain: [Scalar; 2],
        terms: Vec<[Scalar; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        monotonicity: Option<Monotonicity>,
    },
    Table {
        knots: Vec<[Scalar; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        monotonicity: Option<Monotonicity>,
    },
}

impl PieceConfig {
    pub fn build(&self) -> Result<Piece, ConfigError> {
        let (piece, flag) = match self {
            PieceConfig::PowerSum { domain, terms, monotonicity } => {
                let terms = terms
                    .iter()
                    .map(|[c, e]| Ok(Term::new(c.value()?, e.value()?)))
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                (Piece::power_sum(domain[0].value()?, domain[1].value()?, terms)?, monotonicity)
            }
            PieceConfig::Table { knots, monotonicity } => {
                let knots = knots
                    .iter()
                    .map(|[t, v]| Ok((t.value()?, v.value()?)))
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                (Piece::table(knots)?, monotonicity)
            }
        };
        Ok(match flag {
            Some(f) => piece.with_monotonicity(*f),
            None => piece,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    pub pieces: Vec<PieceConfig>,
}

impl FunctionConfig {
    pub fn build(&self) -> Result<PiecewiseFunction, ConfigError> {
        let pieces = self.pieces.iter().map(PieceConfig::build).collect::<Result<Vec<_>, _>>()?;
        Ok(PiecewiseFunction::new(pieces)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionConfig {
    pub name: String,
    pub phi: FunctionConfig,
    pub gamma: FunctionConfig,
}

impl SectionConfig {
    pub fn parse(json: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn build(&self) -> Result<SectionPair, ConfigError> {
        let phi = CurveMap::new(self.phi.build()?)?;
        let gamma = self.gamma.build()?;
        Ok(validate_section(phi, gamma, DEFAULT_SECTION_SAMPLES)?)
    }
}

/// Parses and validates a section config.
pub fn load_section(json: &str) -> Result<(String, SectionPair), ConfigError> {
    let cfg = SectionConfig::parse(json)?;
    let section = cfg.build()?;
    Ok((cfg.name, section))
}

fn poly(start: f64, end: f64, terms: &[(f64, f64)]) -> Result<Piece, ModelError> {
    Piece::power_sum(start, end, terms.iter().map(|&(c, e)| Term::new(c, e)).collect())
}

/// Root of `t + t² = 1 + 26/225`, where the flat stretch of `example-2` ends.
pub fn example_2_t0() -> f64 {
    (-1.0 + 1229f64.sqrt() / 15.0) / 2.0
}

fn example_1() -> Result<SectionPair, ModelError> {
    let phi = CurveMap::power(2.0)?;
    let gamma = PiecewiseFunction::new(vec![poly(0.0, 1.0, &[(1.0, 3.0)])?])?;
    validate_section(phi, gamma, DEFAULT_SECTION_SAMPLES)
}

fn example_2() -> Result<SectionPair, ModelError> {
    let phi = CurveMap::power(2.0)?;
    let t0 = example_2_t0();
    let gamma = PiecewiseFunction::new(vec![
        Piece::constant(0.0, 1.0 / 3.0, 0.0)?,
        poly(1.0 / 3.0, 0.4, &[(1.0, 1.0), (1.0, 2.0), (-4.0 / 9.0, 0.0)])?,
        Piece::constant(0.4, t0, 26.0 / 225.0)?,
        poly(t0, 1.0, &[(1.0, 1.0), (1.0, 2.0), (-1.0, 0.0)])?,
    ])?;
    validate_section(phi, gamma, DEFAULT_SECTION_SAMPLES)
}

fn example_5ii() -> Result<SectionPair, ModelError> {
    let phi = CurveMap::new(PiecewiseFunction::new(vec![
        poly(0.0, 0.25, &[(0.5, 0.5)])?,
        poly(0.25, 0.75, &[(1.0, 1.0)])?,
        poly(0.75, 1.0, &[(4.0 / 7.0, 2.0), (3.0 / 7.0, 0.0)])?,
    ])?)?;
    let gamma = PiecewiseFunction::new(vec![
        poly(0.0, 0.25, &[(1.0, 1.0), (-1.0, 2.0)])?,
        poly(0.25, 0.5, &[(9.0 / 8.0, 1.0), (-3.0 / 32.0, 0.0)])?,
        poly(0.5, 0.75, &[(1.0, 1.0), (-1.0 / 32.0, 0.0)])?,
        poly(0.75, 0.875, &[(0.25, 1.0), (17.0 / 32.0, 0.0)])?,
        poly(0.875, 1.0, &[(2.0, 1.0), (-1.0, 0.0)])?,
    ])?;
    validate_section(phi, gamma, DEFAULT_SECTION_SAMPLES)
}

fn diag_pi() -> Result<SectionPair, ModelError> {
    let gamma = PiecewiseFunction::new(vec![poly(0.0, 1.0, &[(1.0, 2.0)])?])?;
    validate_section(CurveMap::identity(), gamma, DEFAULT_SECTION_SAMPLES)
}

/// Builds a named built-in section:
///
/// * `example-1`: `φ = t²`, `Γ = t³`;
/// * `example-2` (alias `example-3`): `φ = t²` with a four-piece section
///   that is flat on `[0, 1/3]` and `[2/5, t₀]`;
/// * `example-5ii`: a three-piece `φ` mixing `√t/2`, `t`, `(4t² + 3)/7`
///   with a five-piece section;
/// * `diag-pi`: `φ = id`, `Γ = t²`, the diagonal of the product copula;
/// * `interval-family`: `φ = t²` with the section generated by `(0, 1)`.
pub fn builtin(name: &str) -> Result<SectionPair, ConfigError> {
    let section = match name {
        "example-1" => example_1()?,
        "example-2" | "example-3" => example_2()?,
        "example-5ii" => example_5ii()?,
        "diag-pi" => diag_pi()?,
        "interval-family" => interval_family_section(CurveMap::power(2.0)?, &[(0.0, 1.0)])?,
        other => return Err(ConfigError::UnknownBuiltin(other.to_string())),
    };
    Ok(section)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates() {
        for name in BUILTIN_NAMES {
            builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(matches!(builtin("nope"), Err(ConfigError::UnknownBuiltin(_))));
    }

    #[test]
    fn example_2_knot() {
        let t0 = example_2_t0();
        assert!((t0 - 0.66856987620).abs() < 1e-10);
        assert!((t0 + t0 * t0 - 1.0 - 26.0 / 225.0).abs() < 1e-15);
    }

    #[test]
    fn example_2_gap_functions() {
        let s = builtin("example-2").unwrap();
        // hat rises, falls to 64/225 at 2/5, rises, falls
        assert_eq!(s.hat_breaks().len(), 3);
        assert!((s.hat_breaks()[1] - 0.4).abs() < 1e-15);
        assert!((s.hat().value(0.4) - 64.0 / 225.0).abs() < 1e-15);
        assert_eq!(s.tilde_breaks().len(), 3);
    }

    #[test]
    fn example_5ii_inverse_on_middle_piece() {
        let s = builtin("example-5ii").unwrap();
        assert_eq!(s.phi().inverse(0.5).unwrap(), 0.5);
        let peak = (3.0 - 5f64.sqrt()) / 8.0;
        assert!(s.tilde_breaks().iter().any(|&t| (t - peak).abs() < 1e-10));
    }

    #[test]
    fn parses_rationals_and_tables() {
        let json = r#"{
            "name": "cubic",
            "phi": {"pieces": [{"domain": [0, 1], "kind": "power-sum", "terms": [[1, [4, 2]]]}]},
            "gamma": {"pieces": [{"domain": [0, [1, 1]], "kind": "power-sum", "terms": [[1, 3]], "monotonicity": "increasing"}]}
        }"#;
        let (name, s) = load_section(json).unwrap();
        assert_eq!(name, "cubic");
        assert_eq!(s.phi().eval(0.5), 0.25);

        let json = r#"{
            "name": "tab",
            "phi": {"pieces": [{"kind": "table", "knots": [[0, 0], [1, 1]]}]},
            "gamma": {"pieces": [{"kind": "table", "knots": [[0, 0], [0.5, 0.25], [1, 1]]}]}
        }"#;
        let (_, s) = load_section(json).unwrap();
        assert_eq!(s.gamma().value(0.25), 0.125);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(SectionConfig::parse("{"), Err(ConfigError::Parse(_))));
        let zero_den = r#"{"name": "z",
            "phi": {"pieces": [{"domain": [0, 1], "kind": "power-sum", "terms": [[1, [1, 0]]]}]},
            "gamma": {"pieces": [{"domain": [0, 1], "kind": "power-sum", "terms": [[1, 1]]}]}}"#;
        assert!(matches!(load_section(zero_den), Err(ConfigError::Rational { .. })));
        let too_big = r#"{"name": "big",
            "phi": {"pieces": [{"domain": [0, 1], "kind": "power-sum", "terms": [[1, 2]]}]},
            "gamma": {"pieces": [{"domain": [0, 1], "kind": "power-sum", "terms": [[1, 1]]}]}}"#;
        assert!(matches!(
            load_section(too_big),
            Err(ConfigError::Model(ModelError::AboveUpperBound { .. }))
        ));
    }
}
