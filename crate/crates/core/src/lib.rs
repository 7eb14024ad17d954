//! Dimension theory toolkit for self-affine carpets with overlapping
//! projections.

pub mod assouad;
pub mod boxcount;
pub mod carpet;
pub mod csv;
pub mod endpoints;
pub mod error;
pub mod exact;
pub mod fit;
pub mod json;
pub mod measure;
pub mod preset;
pub mod symbolic;
pub mod theorem;

pub use carpet::{pu_carpet, validate_carpet, CarpetIfs, CylinderRect, RawCarpet, Translation, Word};
pub use endpoints::{Budget, EndpointLevel};
pub use error::{Error, Result};
pub use exact::{FieldElement, NumberField};
pub use fit::{fit_line, SlopeFit};
