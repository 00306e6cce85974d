use rand::Rng;

use super::rationals::{cantor_table, weighted_rational_sum, ENUMERATION_LEN};
use crate::error::{Error, Result};
use crate::monoid::{check_index, CharacterId, Extended, FellerMonoid};
use crate::ppp::{MarkLaw, MarkSpace};

/// `([0, ∞), +)` with characters `e_λ(x) = e^{−λx}`, `λ` running over the
/// positive rationals in Cantor order.
#[derive(Debug, Clone, Default)]
pub struct AdditiveReals;

/// `e_λ` with `λ` the summed rational index of the multiset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpCharacter {
    pub rate: f64,
}

impl AdditiveReals {
    pub fn new() -> Self {
        AdditiveReals
    }

    /// `1/α = Σ_n λ_n / 2ⁿ` for the Cantor enumeration, to double precision.
    pub fn inverse_alpha() -> f64 {
        weighted_rational_sum(64).0
    }
}

impl FellerMonoid for AdditiveReals {
    type Elem = f64;
    type Character = ExpCharacter;

    fn name(&self) -> &'static str {
        "additive"
    }

    fn neutral(&self) -> f64 {
        0.0
    }

    fn combine_finite(&self, x: &f64, y: &f64) -> Extended<f64> {
        let s = x + y;
        if s.is_finite() {
            Extended::Finite(s)
        } else {
            Extended::Infinity
        }
    }

    fn enumeration_len(&self) -> Option<usize> {
        Some(ENUMERATION_LEN)
    }

    fn resolve(&self, c: &CharacterId) -> Result<ExpCharacter> {
        check_index(self.enumeration_len(), c)?;
        let table = cantor_table();
        Ok(ExpCharacter { rate: c.indices().iter().map(|&i| table[i].to_f64()).sum() })
    }

    fn eval(&self, chi: &ExpCharacter, x: &f64) -> f64 {
        (-chi.rate * x).exp()
    }

    fn one_minus_eval(&self, chi: &ExpCharacter, x: &f64) -> f64 {
        -(-chi.rate * x).exp_m1()
    }

    fn is_idempotent(&self) -> bool {
        false
    }

    fn action(&self, r: f64, x: &f64) -> Option<f64> {
        Some(r * x)
    }

    fn rescale_character(&self, chi: &ExpCharacter, r: f64) -> Option<ExpCharacter> {
        Some(ExpCharacter { rate: chi.rate / r })
    }

    fn drift_element(&self, amount: f64) -> Option<f64> {
        Some(amount)
    }

    fn drift_pairing(&self, drift: f64, chi: &ExpCharacter) -> Option<f64> {
        Some(drift * chi.rate)
    }

    fn integrate_drifted(
        &self,
        chi: &ExpCharacter,
        state: &Extended<f64>,
        drift: f64,
        a: f64,
        b: f64,
    ) -> f64 {
        let s = match state {
            Extended::Finite(s) => *s,
            Extended::Infinity => return 0.0,
        };
        let k = chi.rate * drift;
        if k == 0.0 {
            return (-chi.rate * s).exp() * (b - a);
        }
        // ∫_a^b e^{−λ(d·u + s)} du
        (-chi.rate * (s + drift * a)).exp() * -(-k * (b - a)).exp_m1() / k
    }

    fn analytic_alpha(&self, chi: &ExpCharacter) -> Option<f64> {
        Some(chi.rate / Self::inverse_alpha())
    }

    fn format_elem(&self, x: &f64) -> String {
        x.to_string()
    }
}

impl MarkSpace for AdditiveReals {
    fn validate_law(&self, law: &MarkLaw) -> Result<()> {
        if !law.is_real_valued() {
            return Err(Error::UnsupportedLaw { law: law.label().into(), instance: self.name().into() });
        }
        law.validate_real()
    }

    fn sample_mark<R: Rng + ?Sized>(&self, law: &MarkLaw, rng: &mut R) -> f64 {
        law.sample_real(rng)
    }

    fn closed_form_one_minus_chi(&self, chi: &ExpCharacter, law: &MarkLaw) -> Option<f64> {
        law.one_minus_laplace(chi.rate)
    }
}
