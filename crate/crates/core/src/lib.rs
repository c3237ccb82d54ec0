pub mod cli;
pub mod complexity;
pub mod error;
pub mod io;
pub mod optim;
pub mod procedures;
pub mod simulation;
pub mod stats;
pub mod structure;
pub mod svg;
pub mod weights;

pub use error::{Error, Result};
