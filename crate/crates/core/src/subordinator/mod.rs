//! Subordinator paths via the Lévy-Itô construction, Laplace exponents,
//! closed-form identities, character functionals and Bochner time changes.

mod bochner;
mod exponent;
mod functional;
mod path;

pub use bochner::{bochner_subordinate, clock_exponent};
pub(crate) use exponent::check_times;
pub use exponent::{fdd_closed_form, laplace_exponent_eval, moments_closed_form, LaplaceExponent};
pub use functional::character_functional;
pub use path::{levy_ito_path, path_at, write_points_csv, PathRealization, PATH_CSV_HEADER};
