//! Flux laws, tidal forcing and the assembled transport coefficients.

mod assemble;
mod flux;
mod forcing;
mod validate;

pub use assemble::{assemble_coefficients, CoefficientSample, ModelConstants};
pub use flux::FluxLaw;
pub use forcing::{ForcingParams, ForcingSample, Regime, SpatialModulation, TidalForcing};
pub use validate::{validate_hypotheses, Check, ValidationReport, Violation};
