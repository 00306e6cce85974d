use rand::seq::index;
use rand::Rng;
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};
use crate::monoid::{check_index, CharacterId, Extended, FellerMonoid};
use crate::ppp::{MarkLaw, MarkSpace};

/// Bitset over the sites of the lattice box. Inline up to 128 sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SiteSet {
    words: SmallVec<[u64; 2]>,
}

impl SiteSet {
    pub fn empty(n_sites: usize) -> Self {
        SiteSet { words: smallvec![0; n_sites.div_ceil(64).max(1)] }
    }

    pub fn full(n_sites: usize) -> Self {
        let mut s = Self::empty(n_sites);
        for i in 0..n_sites {
            s.insert(i);
        }
        s
    }

    pub fn from_sites(n_sites: usize, sites: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(n_sites);
        for i in sites {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, site: usize) {
        self.words[site / 64] |= 1 << (site % 64);
    }

    pub fn contains(&self, site: usize) -> bool {
        self.words[site / 64] & (1 << (site % 64)) != 0
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        SiteSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect() }
    }

    pub fn is_disjoint(&self, other: &SiteSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            (0..64).filter(move |b| w & (1 << b) != 0).map(move |b| k * 64 + b)
        })
    }
}

/// Proper subsets of a finite box in `ℤ^d` under union, with `∂∞` the full
/// box and avoidance characters `χ_K(J) = 1_{J ∩ K = ∅}`.
///
/// The hitting form `1_{J ∩ K ≠ ∅}` is not a character: it vanishes at `∅`
/// and is not closed under products. Avoidance satisfies `χ_K(∅) = 1` and
/// `χ_K χ_{K'} = χ_{K ∪ K'}`, and gives `P(J_t ∩ K = ∅) = exp(−t·cap(K))`.
///
/// Sites are numbered row-major; the base characters enumerate the nonempty
/// `K ⊆ box` by size, then lexicographically.
#[derive(Debug, Clone)]
pub struct LatticeUnion {
    dim: usize,
    side: usize,
    n_sites: usize,
    full: SiteSet,
}

/// Avoidance character of a site set.
#[derive(Debug, Clone, PartialEq)]
pub struct AvoidanceCharacter {
    pub mask: SiteSet,
}

impl LatticeUnion {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if dim == 0 || side == 0 {
            return Err(Error::InvalidSpec("lattice box must be nonempty".into()));
        }
        let n_sites = u32::try_from(dim)
            .ok()
            .and_then(|d| side.checked_pow(d))
            .filter(|&n| n <= 1 << 16)
            .ok_or_else(|| Error::InvalidSpec(format!("box {side}^{dim} is too large")))?;
        Ok(LatticeUnion { dim, side, n_sites, full: SiteSet::full(n_sites) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Row-major coordinates of a site.
    pub fn coords(&self, mut site: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        for slot in c.iter_mut().rev() {
            *slot = site % self.side;
            site /= self.side;
        }
        c
    }

    pub fn site(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &x| acc * self.side + x)
    }

    pub fn set(&self, sites: impl IntoIterator<Item = usize>) -> SiteSet {
        SiteSet::from_sites(self.n_sites, sites)
    }

    /// Wraps a union result, mapping the full box to `∂∞`.
    fn wrap(&self, s: SiteSet) -> Extended<SiteSet> {
        if s == self.full {
            Extended::Infinity
        } else {
            Extended::Finite(s)
        }
    }

    /// The nonempty site set `K` with the given enumeration index.
    pub fn subset_at(&self, mut rank: usize) -> Result<Vec<usize>> {
        let n = self.n_sites;
        let mut rank128 = rank as u128;
        for k in 1..=n {
            let count = binomial(n, k);
            if rank128 < count {
                rank = rank128 as usize;
                return Ok(unrank_combination(n, k, rank));
            }
            rank128 -= count;
        }
        Err(Error::CharacterOutOfRange(format!("subset index {rank}")))
    }
}

/// `C(n, k)`, saturated just above `usize::MAX`.
fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let cap = usize::MAX as u128 + 1;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c >= cap {
            return cap;
        }
    }
    c
}

/// Lexicographic unranking of `k`-subsets of `{0, …, n−1}`.
fn unrank_combination(n: usize, k: usize, rank: usize) -> Vec<usize> {
    let mut rank = rank as u128;
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for pos in 0..k {
        let mut e = next;
        loop {
            let with_e = binomial(n - e - 1, k - pos - 1);
            if rank < with_e {
                break;
            }
            rank -= with_e;
            e += 1;
        }
        out.push(e);
        next = e + 1;
    }
    out
}

impl FellerMonoid for LatticeUnion {
    type Elem = SiteSet;
    type Character = AvoidanceCharacter;

    fn name(&self) -> &'static str {
        "lattice-union"
    }

    fn neutral(&self) -> SiteSet {
        SiteSet::empty(self.n_sites)
    }

    fn combine_finite(&self, x: &SiteSet, y: &SiteSet) -> Extended<SiteSet> {
        self.wrap(x.union(y))
    }

    fn enumeration_len(&self) -> Option<usize> {
        // 2^n − 1 nonempty subsets, when that fits.
        (self.n_sites < usize::BITS as usize).then(|| (1usize << self.n_sites) - 1)
    }

    fn resolve(&self, c: &CharacterId) -> Result<AvoidanceCharacter> {
        check_index(self.enumeration_len(), c)?;
        let mut mask = SiteSet::empty(self.n_sites);
        for &i in c.indices() {
            for s in self.subset_at(i)? {
                mask.insert(s);
            }
        }
        Ok(AvoidanceCharacter { mask })
    }

    fn eval(&self, chi: &AvoidanceCharacter, x: &SiteSet) -> f64 {
        if x.is_disjoint(&chi.mask) {
            1.0
        } else {
            0.0
        }
    }

    fn is_idempotent(&self) -> bool {
        true
    }

    fn analytic_alpha(&self, _chi: &AvoidanceCharacter) -> Option<f64> {
        Some(0.0)
    }

    fn format_elem(&self, x: &SiteSet) -> String {
        x.sites().map(|s| s.to_string()).collect::<Vec<_>>().join(";")
    }
}

impl MarkSpace for LatticeUnion {
    fn validate_law(&self, law: &MarkLaw) -> Result<()> {
        let unsupported =
            || Error::UnsupportedLaw { law: law.label().into(), instance: self.name().into() };
        match *law {
            MarkLaw::UniformSingleton if self.n_sites >= 2 => Ok(()),
            MarkLaw::UniformSubset { size } if size >= 1 && size < self.n_sites => Ok(()),
            MarkLaw::UniformSingleton | MarkLaw::UniformSubset { .. } => Err(Error::InvalidLayer(
                format!("{} marks must be nonempty proper subsets of the box", law.label()),
            )),
            _ => Err(unsupported()),
        }
    }

    fn sample_mark<R: Rng + ?Sized>(&self, law: &MarkLaw, rng: &mut R) -> SiteSet {
        match *law {
            MarkLaw::UniformSingleton => self.set([rng.random_range(0..self.n_sites)]),
            MarkLaw::UniformSubset { size } => {
                self.set(index::sample(rng, self.n_sites, size))
            }
            _ => panic!("{} marks are not supported on {}", law.label(), self.name()),
        }
    }

    /// `P(mark ∩ K ≠ ∅)` by counting.
    fn closed_form_one_minus_chi(&self, chi: &AvoidanceCharacter, law: &MarkLaw) -> Option<f64> {
        let n = self.n_sites as f64;
        let k = chi.mask.len() as f64;
        match *law {
            MarkLaw::UniformSingleton => Some(k / n),
            MarkLaw::UniformSubset { size } => {
                let miss: f64 = (0..size).map(|i| ((n - k - i as f64) / (n - i as f64)).max(0.0)).product();
                Some(1.0 - miss)
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn avoidance_on_a_line() {
        let m = LatticeUnion::new(1, 3).unwrap();
        let chi = m.resolve(&CharacterId::base(1)).unwrap(); // K = {1}
        assert_eq!(m.eval(&chi, &m.set([0, 2])), 1.0);
        assert_eq!(m.eval(&chi, &m.set([1])), 0.0);
        assert_eq!(m.eval(&chi, &m.neutral()), 1.0);
    }

    #[test]
    fn enumeration_by_size_then_lex() {
        let m = LatticeUnion::new(1, 3).unwrap();
        let all: Vec<Vec<usize>> = (0..7).map(|i| m.subset_at(i).unwrap()).collect();
        assert_eq!(
            all,
            vec![vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2]]
        );
        assert!(m.subset_at(7).is_err());
        assert_eq!(m.enumeration_len(), Some(7));
    }

    #[test]
    fn union_of_all_sites_is_infinity() {
        let m = LatticeUnion::new(1, 2).unwrap();
        assert!(m.combine_finite(&m.set([0]), &m.set([1])).is_infinity());
        assert_eq!(m.combine_finite(&m.set([0]), &m.set([0])), Extended::Finite(m.set([0])));
    }

    #[test]
    fn coords_round_trip() {
        let m = LatticeUnion::new(2, 10).unwrap();
        assert_eq!(m.coords(37), vec![3, 7]);
        assert_eq!(m.site(&[3, 7]), 37);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(100, 2), 4950);
        assert_eq!(binomial(100, 3), 161_700);
        assert_eq!(binomial(5, 7), 0);
        assert_eq!(binomial(200, 100), usize::MAX as u128 + 1);
    }

    #[test]
    fn subset_closed_form_counts() {
        let m = LatticeUnion::new(2, 10).unwrap();
        let chi = AvoidanceCharacter { mask: m.set(0..5) };
        assert!((m.closed_form_one_minus_chi(&chi, &MarkLaw::UniformSingleton).unwrap() - 0.05).abs() < 1e-15);
        // P(2 random sites avoid 5 given) = C(95,2)/C(100,2)
        let hit = m.closed_form_one_minus_chi(&chi, &MarkLaw::UniformSubset { size: 2 }).unwrap();
        assert!((hit - (1.0 - 4465.0 / 4950.0)).abs() < 1e-14);
    }

    #[test]
    fn empty_box_is_invalid() {
        assert!(matches!(LatticeUnion::new(2, 0), Err(Error::InvalidSpec(_))));
    }
}
