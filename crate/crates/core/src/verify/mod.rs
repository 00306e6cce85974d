//! Monte Carlo verification of the subordinator identities against their
//! closed forms.

mod checks;
mod report;
pub mod stats;

pub use checks::*;
pub use report::{Criterion, VerificationReport};
pub use stats::Estimate;
