use rand::Rng;

use super::rationals::{cantor_table, ENUMERATION_LEN};
use crate::error::{Error, Result};
use crate::monoid::{check_index, CharacterId, Extended, FellerMonoid};
use crate::ppp::{MarkLaw, MarkSpace};

/// `([0, ∞), max)` with indicator characters `1_{[0,λ]}`, `λ` running over
/// the positive rationals in Cantor order.
///
/// Distinct points `x < y` are separated by the enumerated characters exactly
/// when some enumerated `λ` lies in `[x, y)`; among the first 64 that holds
/// for pairs straddling one of the first 64 rationals.
#[derive(Debug, Clone, Default)]
pub struct MaxReals;

/// `1_{[0, threshold]}`; a product of indicators keeps the smallest threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorCharacter {
    pub threshold: f64,
}

impl MaxReals {
    pub fn new() -> Self {
        MaxReals
    }
}

impl FellerMonoid for MaxReals {
    type Elem = f64;
    type Character = IndicatorCharacter;

    fn name(&self) -> &'static str {
        "max"
    }

    fn neutral(&self) -> f64 {
        0.0
    }

    fn combine_finite(&self, x: &f64, y: &f64) -> Extended<f64> {
        let m = x.max(*y);
        if m.is_finite() {
            Extended::Finite(m)
        } else {
            Extended::Infinity
        }
    }

    fn enumeration_len(&self) -> Option<usize> {
        Some(ENUMERATION_LEN)
    }

    fn resolve(&self, c: &CharacterId) -> Result<IndicatorCharacter> {
        check_index(self.enumeration_len(), c)?;
        let table = cantor_table();
        let threshold = c
            .indices()
            .iter()
            .map(|&i| table[i].to_f64())
            .fold(f64::INFINITY, f64::min);
        Ok(IndicatorCharacter { threshold })
    }

    fn eval(&self, chi: &IndicatorCharacter, x: &f64) -> f64 {
        if *x <= chi.threshold {
            1.0
        } else {
            0.0
        }
    }

    fn is_idempotent(&self) -> bool {
        true
    }

    fn action(&self, r: f64, x: &f64) -> Option<f64> {
        Some(r * x)
    }

    fn rescale_character(&self, chi: &IndicatorCharacter, r: f64) -> Option<IndicatorCharacter> {
        Some(IndicatorCharacter { threshold: chi.threshold * r })
    }

    fn analytic_alpha(&self, _chi: &IndicatorCharacter) -> Option<f64> {
        Some(0.0)
    }

    fn format_elem(&self, x: &f64) -> String {
        x.to_string()
    }
}

impl MarkSpace for MaxReals {
    fn validate_law(&self, law: &MarkLaw) -> Result<()> {
        if !law.is_real_valued() {
            return Err(Error::UnsupportedLaw { law: law.label().into(), instance: self.name().into() });
        }
        law.validate_real()
    }

    fn sample_mark<R: Rng + ?Sized>(&self, law: &MarkLaw, rng: &mut R) -> f64 {
        law.sample_real(rng)
    }

    /// `E[1 − 1_{X ≤ λ}] = P(X > λ)`.
    fn closed_form_one_minus_chi(&self, chi: &IndicatorCharacter, law: &MarkLaw) -> Option<f64> {
        law.survival(chi.threshold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_interval_indicator() {
        let m = MaxReals::new();
        // index 2 is the rational 2
        let chi = m.resolve(&CharacterId::base(2)).unwrap();
        assert_eq!(m.eval(&chi, &3.0), 0.0);
        assert_eq!(m.eval(&chi, &2.0), 1.0);
    }

    #[test]
    fn product_keeps_smaller_threshold() {
        let m = MaxReals::new();
        let chi = m.resolve(&CharacterId::new(vec![0, 2])).unwrap();
        assert_eq!(chi.threshold, 1.0);
    }

    #[test]
    fn survival_closed_forms() {
        let m = MaxReals::new();
        let chi = IndicatorCharacter { threshold: 1.5 };
        let v = m.closed_form_one_minus_chi(&chi, &MarkLaw::Exponential { rate: 1.0 }).unwrap();
        assert!((v - (-1.5f64).exp()).abs() < 1e-15);
        let p = m.closed_form_one_minus_chi(&chi, &MarkLaw::Pareto { alpha: 1.0, x_min: 1.0 }).unwrap();
        assert!((p - 1.0 / 1.5).abs() < 1e-15);
    }
}
