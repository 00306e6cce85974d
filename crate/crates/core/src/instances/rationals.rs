use std::fmt;
use std::sync::OnceLock;

use num_integer::Integer;
use serde::Serialize;

/// An exact positive rational `num / den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(num > 0 && den > 0, "positive rationals only");
        let g = num.gcd(&den);
        Rational { num: num / g, den: den / g }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Diagonal (Cantor) enumeration of the positive rationals without repeats.
///
/// Diagonal `s = p + q` is walked by increasing numerator, skipping pairs with
/// a common factor: `1, 1/2, 2, 1/3, 3, 1/4, 2/3, 3/2, 4, …`. Every value on
/// diagonal `s` is at most `s − 1`, and at least one term from each earlier
/// diagonal precedes it, so the `n`-th term (1-based) never exceeds `n`.
#[derive(Debug, Clone)]
pub struct CantorRationals {
    diagonal: u64,
    num: u64,
}

impl CantorRationals {
    pub fn new() -> Self {
        CantorRationals { diagonal: 2, num: 0 }
    }
}

impl Default for CantorRationals {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for CantorRationals {
    type Item = Rational;

    fn next(&mut self) -> Option<Rational> {
        loop {
            self.num += 1;
            if self.num >= self.diagonal {
                self.diagonal += 1;
                self.num = 1;
            }
            let den = self.diagonal - self.num;
            if self.num.gcd(&den) == 1 {
                return Some(Rational { num: self.num, den });
            }
        }
    }
}

/// Length of the cached enumeration prefix used by the real-line instances.
pub const ENUMERATION_LEN: usize = 1 << 14;

pub(crate) fn cantor_table() -> &'static [Rational] {
    static TABLE: OnceLock<Vec<Rational>> = OnceLock::new();
    TABLE.get_or_init(|| CantorRationals::new().take(ENUMERATION_LEN).collect())
}

/// `Σ_{n≥1} λ_n / 2ⁿ` for the Cantor enumeration, truncated after `n_terms`,
/// with the tail bound `Σ_{n>N} n/2ⁿ = (N + 2)/2^N` from `λ_n ≤ n`.
pub fn weighted_rational_sum(n_terms: usize) -> (f64, f64) {
    let mut sum = 0.0;
    let mut weight = 1.0;
    for r in CantorRationals::new().take(n_terms) {
        weight *= 0.5;
        sum += weight * r.to_f64();
    }
    let n = n_terms as f64;
    (sum, (n + 2.0) * weight)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_terms_follow_the_diagonals() {
        let first: Vec<String> = CantorRationals::new().take(11).map(|r| r.to_string()).collect();
        assert_eq!(first, ["1", "1/2", "2", "1/3", "3", "1/4", "2/3", "3/2", "4", "1/5", "5"]);
    }

    #[test]
    fn no_repeats_in_prefix() {
        let mut seen = std::collections::HashSet::new();
        for r in CantorRationals::new().take(20_000) {
            assert!(seen.insert(r), "repeated {r}");
        }
    }

    #[test]
    fn rational_reduces() {
        assert_eq!(Rational::new(4, 6), Rational { num: 2, den: 3 });
    }

    #[test]
    fn weighted_sum_tail_bound_brackets_longer_sums() {
        let (s20, tail20) = weighted_rational_sum(20);
        let (s60, _) = weighted_rational_sum(60);
        assert!(s60 >= s20 && s60 <= s20 + tail20);
    }
}
