pub mod chi2;
pub mod data;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod matrix;
pub mod permute;
pub mod report;
pub mod seeding;
pub mod surfaces;
pub mod ws;

pub use error::{Error, Result};
