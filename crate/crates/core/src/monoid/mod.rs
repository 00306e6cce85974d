//! Abelian monoids carrying a countable determining class of characters.
//!
//! A [`FellerMonoid`] bundles the element type, the commutative operation
//! `⊕`, the neutral element, the point at infinity `∂∞`, and an enumeration
//! `χ_1, χ_2, …` of base characters. Products of base characters are named by
//! [`CharacterId`] multisets and compiled into an instance-specific
//! [`FellerMonoid::Character`] before evaluation.

mod ops;

pub use ops::{
    alpha_coefficient, oplus_fold, partition_additivity_check, phi, rho_distance, sum_diagnosis,
    AlphaEstimate, ExtrapolationConfig, ProbeProduct, SeriesBound, SumConfig, SumVerdict,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A monoid element or the absorbing point at infinity.
#[derive(Debug, Clone, PartialEq)]
pub enum Extended<E> {
    Finite(E),
    Infinity,
}

impl<E> Extended<E> {
    pub fn is_infinity(&self) -> bool {
        matches!(self, Extended::Infinity)
    }

    pub fn finite(&self) -> Option<&E> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::Infinity => None,
        }
    }
}

impl<E> From<E> for Extended<E> {
    fn from(x: E) -> Self {
        Extended::Finite(x)
    }
}

/// Multiset of base-character indices (0-based positions in the instance
/// enumeration). Denotes the pointwise product of the named base characters.
///
/// Indices are kept sorted so equal multisets compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct CharacterId(Vec<usize>);

impl CharacterId {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        CharacterId(indices)
    }

    /// The `n`-th enumerated base character.
    pub fn base(index: usize) -> Self {
        CharacterId(vec![index])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Multiset union: the pointwise product of the two characters.
    pub fn product(&self, other: &CharacterId) -> CharacterId {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        CharacterId::new(v)
    }

    /// `k`-fold product of the character with itself.
    pub fn power(&self, k: usize) -> CharacterId {
        let mut v = Vec::with_capacity(self.0.len() * k);
        for _ in 0..k {
            v.extend_from_slice(&self.0);
        }
        CharacterId::new(v)
    }
}

impl From<Vec<usize>> for CharacterId {
    fn from(v: Vec<usize>) -> Self {
        CharacterId::new(v)
    }
}

impl From<CharacterId> for Vec<usize> {
    fn from(c: CharacterId) -> Self {
        c.0
    }
}

impl fmt::Display for CharacterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "}}")
    }
}

/// An abelian monoid with a determining class of `[0,1]`-valued characters.
///
/// Implementations must satisfy `χ(𝒆) = 1`, `χ(x ⊕ y) = χ(x)χ(y)`, and the
/// characters must separate points. `∂∞` is never encoded in-band: it is
/// [`Extended::Infinity`], absorbing for `⊕`, and every character is zero
/// there.
pub trait FellerMonoid: Send + Sync {
    type Elem: Clone + PartialEq + fmt::Debug + Send + Sync;
    /// A character compiled from a [`CharacterId`].
    type Character: Clone + fmt::Debug + Send + Sync;

    fn name(&self) -> &'static str;

    fn neutral(&self) -> Self::Elem;

    /// `x ⊕ y` for finite arguments. May escape to `∂∞`.
    fn combine_finite(&self, x: &Self::Elem, y: &Self::Elem) -> Extended<Self::Elem>;

    /// Number of base characters in the enumeration, `None` when unbounded.
    fn enumeration_len(&self) -> Option<usize>;

    /// Compile a product of base characters. Fails for the empty multiset and
    /// for indices outside the enumeration.
    fn resolve(&self, c: &CharacterId) -> Result<Self::Character>;

    /// `χ(x)` for a finite element.
    fn eval(&self, chi: &Self::Character, x: &Self::Elem) -> f64;

    /// `1 − χ(x)`; instances override this when cancellation matters.
    fn one_minus_eval(&self, chi: &Self::Character, x: &Self::Elem) -> f64 {
        1.0 - self.eval(chi, x)
    }

    fn is_idempotent(&self) -> bool;

    /// Scaling action `r · x`, if the instance has one.
    fn action(&self, _r: f64, _x: &Self::Elem) -> Option<Self::Elem> {
        None
    }

    /// The character `x ↦ χ(r⁻¹ · x)`, if expressible in the instance.
    fn rescale_character(&self, _chi: &Self::Character, _r: f64) -> Option<Self::Character> {
        None
    }

    /// Element reached by a linear drift of the given amount, for instances
    /// carrying a classical drift.
    fn drift_element(&self, _amount: f64) -> Option<Self::Elem> {
        None
    }

    /// Pairing `⟨d, χ⟩` of a drift coefficient with a character, contributing
    /// `d·λ(χ)` to the Laplace exponent.
    fn drift_pairing(&self, _drift: f64, _chi: &Self::Character) -> Option<f64> {
        None
    }

    /// `∫_a^b χ(drift·s ⊕ state) ds`. The default handles the driftless case.
    fn integrate_drifted(
        &self,
        chi: &Self::Character,
        state: &Extended<Self::Elem>,
        drift: f64,
        a: f64,
        b: f64,
    ) -> f64 {
        debug_assert!(drift == 0.0, "instance has no drift");
        self.char_eval(chi, state) * (b - a)
    }

    /// Analytic small-jump coefficient, where the instance knows it.
    fn analytic_alpha(&self, _chi: &Self::Character) -> Option<f64> {
        None
    }

    /// Decimal / site-list rendering used in CSV dumps.
    fn format_elem(&self, x: &Self::Elem) -> String;

    fn combine(&self, x: &Extended<Self::Elem>, y: &Extended<Self::Elem>) -> Extended<Self::Elem> {
        match (x, y) {
            (Extended::Finite(a), Extended::Finite(b)) => self.combine_finite(a, b),
            _ => Extended::Infinity,
        }
    }

    /// `χ` on the extended space, with `χ(∂∞) = 0`.
    fn char_eval(&self, chi: &Self::Character, x: &Extended<Self::Elem>) -> f64 {
        match x {
            Extended::Finite(e) => self.eval(chi, e),
            Extended::Infinity => 0.0,
        }
    }

    fn one_minus_char_eval(&self, chi: &Self::Character, x: &Extended<Self::Elem>) -> f64 {
        match x {
            Extended::Finite(e) => self.one_minus_eval(chi, e),
            Extended::Infinity => 1.0,
        }
    }

    /// Evaluate the `index`-th enumerated base character.
    fn base_eval(&self, index: usize, x: &Extended<Self::Elem>) -> Result<f64> {
        let chi = self.resolve(&CharacterId::base(index))?;
        Ok(self.char_eval(&chi, x))
    }

    /// Resolve the first `n` base characters (clipped to the enumeration).
    fn base_characters(&self, n: usize) -> Result<Vec<Self::Character>> {
        let n = self.enumeration_len().map_or(n, |len| n.min(len));
        (0..n).map(|i| self.resolve(&CharacterId::base(i))).collect()
    }
}

pub(crate) fn check_index(len: Option<usize>, c: &CharacterId) -> Result<()> {
    if c.is_empty() {
        return Err(Error::EmptyCharacter);
    }
    if let Some(len) = len {
        if c.indices().iter().any(|&i| i >= len) {
            return Err(Error::CharacterOutOfRange(c.to_string()));
        }
    }
    Ok(())
}
