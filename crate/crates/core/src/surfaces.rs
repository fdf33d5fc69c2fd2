//! Bivariate surfaces induced by a section.
//!
//! With `u = φ⁻¹(y)`:
//!
//! * `f₁(x, y) = x − ½(V_u^x(hat) + hat(x) + hat(u))`
//! * `f₂(x, y) = y − ½(V_x^u(tilde) + tilde(x) + tilde(u))`
//! * `Cᵢ = min{x, y, fᵢ}`; the splice is `C₁` on and below the curve
//!   `y = φ(x)` and `C₂` above it.
//! * the lower bound `B` and the upper quasi-copula `A` use interval extrema
//!   of the gap functions between `x` and `u`.
//! * `K = min{x, y, (Γ(x) + Γ(u)) / 2}`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::model::SectionPair;
use crate::variation::{variation, VariationMethod};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceKind {
    F1,
    F2,
    C1,
    C2,
    Splice,
    Bertino,
    AUpper,
    K,
    W,
    M,
    Pi,
}

impl SurfaceKind {
    pub const ALL: [SurfaceKind; 11] = [
        SurfaceKind::F1,
        SurfaceKind::F2,
        SurfaceKind::C1,
        SurfaceKind::C2,
        SurfaceKind::Splice,
        SurfaceKind::Bertino,
        SurfaceKind::AUpper,
        SurfaceKind::K,
        SurfaceKind::W,
        SurfaceKind::M,
        SurfaceKind::Pi,
    ];

    /// Surfaces that reproduce the section along `y = φ(x)`.
    pub const SECTION_MATCHING: [SurfaceKind; 5] = [
        SurfaceKind::C1,
        SurfaceKind::C2,
        SurfaceKind::Splice,
        SurfaceKind::Bertino,
        SurfaceKind::AUpper,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::F1 => "f1",
            SurfaceKind::F2 => "f2",
            SurfaceKind::C1 => "c1",
            SurfaceKind::C2 => "c2",
            SurfaceKind::Splice => "splice",
            SurfaceKind::Bertino => "bertino",
            SurfaceKind::AUpper => "a-upper",
            SurfaceKind::K => "k",
            SurfaceKind::W => "w",
            SurfaceKind::M => "m",
            SurfaceKind::Pi => "pi",
        }
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurfaceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase().replace('_', "-");
        let alias = match lower.as_str() {
            "b" => "bertino",
            "a" | "a-upper" | "aupper" => "a-upper",
            "product" | "π" => "pi",
            other => other,
        };
        SurfaceKind::ALL
            .into_iter()
            .find(|k| k.name() == alias)
            .ok_or_else(|| format!("unknown surface `{s}`"))
    }
}

/// A validated section plus the variation method used by `f₁`, `f₂`.
#[derive(Clone, Debug)]
pub struct EvalContext {
    section: SectionPair,
    method: VariationMethod,
}

impl EvalContext {
    pub fn new(section: SectionPair) -> Self {
        EvalContext {
            section,
            method: VariationMethod::MonotoneExact,
        }
    }

    pub fn with_method(mut self, method: VariationMethod) -> Self {
        self.method = method;
        self
    }

    pub fn section(&self) -> &SectionPair {
        &self.section
    }

    pub fn method(&self) -> VariationMethod {
        self.method
    }

    fn check_point(x: f64, y: f64) -> Result<(), EvalError> {
        if (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) {
            Ok(())
        } else {
            Err(EvalError::OutsideSquare { x, y })
        }
    }

    pub fn f1(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        Self::check_point(x, y)?;
        let hat = self.section.hat();
        let u = self.section.phi().inverse(y)?;
        let v = variation(hat, u, x, self.method)?;
        Ok(x - 0.5 * (v + hat.value(x) + hat.value(u)))
    }

    pub fn f2(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        Self::check_point(x, y)?;
        let tilde = self.section.tilde();
        let u = self.section.phi().inverse(y)?;
        let v = variation(tilde, x, u, self.method)?;
        Ok(y - 0.5 * (v + tilde.value(x) + tilde.value(u)))
    }

    pub fn c1(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        Ok(x.min(y).min(self.f1(x, y)?))
    }

    pub fn c2(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        Ok(x.min(y).min(self.f2(x, y)?))
    }

    fn below_curve(&self, x: f64, y: f64) -> bool {
        y <= self.section.phi().eval(x)
    }

    pub fn splice(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        Self::check_point(x, y)?;
        if self.below_curve(x, y) {
            self.c1(x, y)
        } else {
            self.c2(x, y)
        }
    }

    pub fn bertino(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        Self::check_point(x, y)?;
        let u = self.section.phi().inverse(y)?;
        Ok(if self.below_curve(x, y) {
            y - self.section.tilde().interval_min(u, x)
        } else {
            x - self.section.hat().interval_min(x, u)
        })
    }

    pub fn a_upper(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        Self::check_point(x, y)?;
        let u = self.section.phi().inverse(y)?;
        Ok(if self.below_curve(x, y) {
            y.min(x - self.section.hat().interval_max(u, x))
        } else {
            x.min(y - self.section.tilde().interval_max(x, u))
        })
    }

    pub fn k(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        Self::check_point(x, y)?;
        let gamma = self.section.gamma();
        let u = self.section.phi().inverse(y)?;
        Ok(x.min(y).min(0.5 * (gamma.value(x) + gamma.value(u))))
    }

    pub fn surface(&self, kind: SurfaceKind, x: f64, y: f64) -> Result<f64, EvalError> {
        match kind {
            SurfaceKind::F1 => self.f1(x, y),
            SurfaceKind::F2 => self.f2(x, y),
            SurfaceKind::C1 => self.c1(x, y),
            SurfaceKind::C2 => self.c2(x, y),
            SurfaceKind::Splice => self.splice(x, y),
            SurfaceKind::Bertino => self.bertino(x, y),
            SurfaceKind::AUpper => self.a_upper(x, y),
            SurfaceKind::K => self.k(x, y),
            SurfaceKind::W => reference(kind, x, y),
            SurfaceKind::M => reference(kind, x, y),
            SurfaceKind::Pi => reference(kind, x, y),
        }
    }
}

/// `W`, `M` and `Π`, which need no section.
pub fn reference(kind: SurfaceKind, x: f64, y: f64) -> Result<f64, EvalError> {
    EvalContext::check_point(x, y)?;
    Ok(match kind {
        SurfaceKind::W => (x + y - 1.0).max(0.0),
        SurfaceKind::M => x.min(y),
        SurfaceKind::Pi => x * y,
        _ => panic!("{kind} is not a reference surface"),
    })
}
