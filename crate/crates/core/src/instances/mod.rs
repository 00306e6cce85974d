//! The shipped monoids: additive reals, max reals, and a lattice-box union.

mod additive;
mod lattice;
mod max;
pub mod rationals;

pub use additive::{AdditiveReals, ExpCharacter};
pub use lattice::{AvoidanceCharacter, LatticeUnion, SiteSet};
pub use max::{IndicatorCharacter, MaxReals};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Instance selection as it appears in experiment configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceSpec {
    Additive,
    Max,
    LatticeUnion {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_side")]
        side: usize,
    },
}

fn default_dim() -> usize {
    2
}

fn default_side() -> usize {
    10
}

/// A constructed instance of one of the shipped monoids.
#[derive(Debug, Clone)]
pub enum AnyInstance {
    Additive(AdditiveReals),
    Max(MaxReals),
    LatticeUnion(LatticeUnion),
}

pub fn make_instance(spec: &InstanceSpec) -> Result<AnyInstance> {
    Ok(match *spec {
        InstanceSpec::Additive => AnyInstance::Additive(AdditiveReals::new()),
        InstanceSpec::Max => AnyInstance::Max(MaxReals::new()),
        InstanceSpec::LatticeUnion { dim, side } => AnyInstance::LatticeUnion(LatticeUnion::new(dim, side)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::monoid::{CharacterId, FellerMonoid};

    #[test]
    fn make_each_instance() {
        let AnyInstance::Additive(a) = make_instance(&InstanceSpec::Additive).unwrap() else { panic!() };
        let e1 = a.resolve(&CharacterId::base(0)).unwrap();
        assert!((a.eval(&e1, &std::f64::consts::LN_2) - 0.5).abs() < 1e-15);

        let AnyInstance::Max(m) = make_instance(&InstanceSpec::Max).unwrap() else { panic!() };
        assert!(m.is_idempotent());

        let spec = InstanceSpec::LatticeUnion { dim: 1, side: 3 };
        let AnyInstance::LatticeUnion(l) = make_instance(&spec).unwrap() else { panic!() };
        assert_eq!(l.n_sites(), 3);
    }

    #[test]
    fn spec_parsing_and_errors() {
        let spec: InstanceSpec = serde_json::from_str(r#"{"kind":"lattice-union"}"#).unwrap();
        assert_eq!(spec, InstanceSpec::LatticeUnion { dim: 2, side: 10 });
        assert!(serde_json::from_str::<InstanceSpec>(r#"{"kind":"heisenberg"}"#).is_err());
        let empty = InstanceSpec::LatticeUnion { dim: 2, side: 0 };
        assert!(matches!(make_instance(&empty), Err(Error::InvalidSpec(_))));
    }
}
