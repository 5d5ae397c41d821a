pub mod cases;
pub mod error;
pub mod executor;
pub mod fields;
pub mod gas;
pub mod mesh;
pub mod numerics;
pub mod timestep;

pub use error::{Error, Result};
