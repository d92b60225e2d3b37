//! Finite fields `F_{q^m}` with prescribed traces into intermediate
//! subfields: linearized polynomials, character oracles, existence bounds
//! and exhaustive censuses.

pub mod arith;
pub mod bounds;
pub mod census;
pub mod characters;
pub mod error;
pub mod field;
pub mod hp;
pub mod intfactor;
pub mod linalg;
pub mod linearized;
pub mod packed;
pub mod polyq;

pub use bounds::{BoundReport, Mode, QValue, Verdict};
pub use census::{CensusOptions, CensusReport, TheoremCheck};
pub use error::{Error, Result};
pub use field::{build_context, FieldContext, FieldElement, FieldSpec, FieldSummary};
pub use linearized::TraceProfile;
pub use polyq::{BaseField, Factorization, PolyQ};
