pub mod adra;
pub mod deviations;
pub mod dra;
pub mod error;
pub mod ledger;
pub mod matroid;
pub mod mechanism;
pub mod montecarlo;
pub mod sim;
pub mod valuedist;

pub use error::{Error, Result};
