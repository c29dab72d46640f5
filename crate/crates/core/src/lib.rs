pub mod certify;
pub mod convex;
pub mod entropy;
pub mod error;
pub mod exec;
pub mod mc;
pub mod numeric;
pub mod process;
pub mod psi;
pub mod ri;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
