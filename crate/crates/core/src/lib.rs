pub mod attitude;
pub mod cascade;
pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod observability;
pub mod riccati;
pub mod series;
pub mod sim;
pub mod so3;

pub use error::{Error, Result};
