//! Piecewise curvilinear sections and the copula bounds they induce.

pub mod checks;
pub mod config;
pub mod error;
pub mod format;
pub mod generator;
pub mod model;
pub mod oracle;
mod par;
pub mod piecewise;
pub mod surfaces;
pub mod variation;

pub use config::{builtin, load_section, SectionConfig, BUILTIN_NAMES};
pub use error::{ConfigError, EvalError, GridError, ModelError, OracleError, VariationError};
pub use model::{interval_family_section, validate_section, CurveMap, SectionPair};
pub use piecewise::{Monotonicity, Piece, PiecewiseFunction, Term};
pub use surfaces::{EvalContext, SurfaceKind};
pub use variation::{variation, VariationMethod, VariationQuery};
