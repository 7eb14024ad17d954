//! Exact arithmetic: rationals, rational intervals and real number fields.

mod ball;
mod field;
mod interval;
pub mod modp;
mod poly;

pub use ball::Ball;
pub use field::{FieldElement, NumberField};
pub use interval::RatInterval;
pub use poly::QPoly;
