pub mod context;
pub mod error;
pub mod expr;
pub mod identities;
pub mod multisum;
pub mod quadrature;
pub mod series;
pub mod special;

pub use context::{Estimate, PrecisionContext};
pub use error::{Error, Result};
