pub mod error;
pub mod forms;
pub mod mesh;
pub mod space;
pub mod spectral;
pub mod study;

pub use error::{Error, Result};
