//! Subordinators on Feller topological monoids.
//!
//! A [`FellerMonoid`] is a commutative monoid with a point at infinity and a
//! countable family of characters. Paths are built from Poisson point
//! processes by folding marks with `⊕` ([`levy_ito_path`]); their laws are
//! described by a Laplace exponent `Ψ` ([`LaplaceExponent`]) and checked by
//! Monte Carlo against closed forms in [`verify`].

pub mod error;
pub mod instances;
pub mod monoid;
pub mod ppp;
pub mod rng;
pub mod subordinator;
pub mod verify;

pub use error::{Error, Result};
pub use instances::{make_instance, AdditiveReals, AnyInstance, InstanceSpec, LatticeUnion, MaxReals, SiteSet};
pub use monoid::{CharacterId, Extended, FellerMonoid};
pub use ppp::{IntegralMode, LevyMeasure, LevyMeasureLayer, MarkLaw, MarkSpace, PointRealization};
pub use rng::StreamKey;
pub use subordinator::{levy_ito_path, LaplaceExponent, PathRealization};
pub use verify::VerificationReport;
