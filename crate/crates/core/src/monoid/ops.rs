use std::collections::BTreeSet;

use serde::Serialize;

use super::{CharacterId, Extended, FellerMonoid};
use crate::error::{Error, Result};

/// A truncated nonnegative series with a bound on the omitted tail: the true
/// value lies in `[partial, partial + tail]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesBound {
    pub partial: f64,
    pub tail: f64,
}

impl SeriesBound {
    pub fn contains(&self, value: f64) -> bool {
        value >= self.partial && value <= self.partial + self.tail
    }
}

fn weighted_series<M, F>(m: &M, n_terms: usize, mut term: F) -> Result<SeriesBound>
where
    M: FellerMonoid + ?Sized,
    F: FnMut(&M::Character) -> f64,
{
    if n_terms == 0 {
        return Err(Error::InvalidArgument("n_terms must be at least 1".into()));
    }
    let chars = m.base_characters(n_terms)?;
    let mut partial = 0.0;
    let mut weight = 1.0;
    for chi in &chars {
        weight *= 0.5;
        partial += weight * term(chi);
    }
    // A finite enumeration that is exhausted leaves no tail.
    let tail = if chars.len() < n_terms { 0.0 } else { weight };
    Ok(SeriesBound { partial, tail })
}

/// `ρ(x, y) = Σ_n |χ_n(x) − χ_n(y)| / 2ⁿ`, truncated after `n_terms`.
pub fn rho_distance<M: FellerMonoid + ?Sized>(
    m: &M,
    x: &Extended<M::Elem>,
    y: &Extended<M::Elem>,
    n_terms: usize,
) -> Result<SeriesBound> {
    weighted_series(m, n_terms, |chi| (m.char_eval(chi, x) - m.char_eval(chi, y)).abs())
}

/// `φ(x) = Σ_n (1 − χ_n(x)) / 2ⁿ`, truncated after `n_terms`.
pub fn phi<M: FellerMonoid + ?Sized>(
    m: &M,
    x: &Extended<M::Elem>,
    n_terms: usize,
) -> Result<SeriesBound> {
    weighted_series(m, n_terms, |chi| m.one_minus_char_eval(chi, x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtrapolationConfig {
    /// Number of trailing sequence points fed to the extrapolation table.
    pub window: usize,
    /// Largest accepted difference between the two highest-order estimates.
    pub tolerance: f64,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        ExtrapolationConfig { window: 4, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaEstimate {
    pub value: f64,
    /// Difference between the two highest-order extrapolants.
    pub residual: f64,
    /// Raw ratios `(1 − χ(x_k)) / φ(x_k)` along the sequence.
    pub ratios: Vec<f64>,
}

/// Numeric estimate of `lim_{x→𝒆} (1 − χ(x)) / φ(x)` along a sequence
/// converging to the neutral element.
///
/// The trailing `cfg.window` ratios are extrapolated to `φ = 0` with Neville's
/// scheme, using `φ(x_k)` as the abscissa.
pub fn alpha_coefficient<M: FellerMonoid + ?Sized>(
    m: &M,
    c: &CharacterId,
    sequence: &[M::Elem],
    n_terms: usize,
    cfg: &ExtrapolationConfig,
) -> Result<AlphaEstimate> {
    if cfg.window < 2 || sequence.len() < cfg.window {
        return Err(Error::InvalidArgument(format!(
            "need at least window = {} >= 2 sequence points, got {}",
            cfg.window,
            sequence.len()
        )));
    }
    let chi = m.resolve(c)?;
    let mut abscissae = Vec::with_capacity(sequence.len());
    let mut ratios = Vec::with_capacity(sequence.len());
    for (k, x) in sequence.iter().enumerate() {
        let x = Extended::Finite(x.clone());
        let h = phi(m, &x, n_terms)?.partial;
        if h <= 0.0 {
            return Err(Error::DegenerateRatio(k));
        }
        abscissae.push(h);
        ratios.push(m.one_minus_char_eval(&chi, &x) / h);
    }

    let start = sequence.len() - cfg.window;
    let h = &abscissae[start..];
    let mut table: Vec<f64> = ratios[start..].to_vec();
    let mut previous_order = table[table.len() - 1];
    for k in 1..cfg.window {
        // Before the last sweep, remember the best estimate of order k−1.
        if k == cfg.window - 1 {
            previous_order = table[1];
        }
        for i in 0..cfg.window - k {
            let (hi, hk) = (h[i], h[i + k]);
            table[i] = if hi == hk {
                table[i + 1]
            } else {
                (hi * table[i + 1] - hk * table[i]) / (hi - hk)
            };
        }
    }
    let value = table[0];
    let residual = (value - previous_order).abs();
    if !(residual <= cfg.tolerance) {
        return Err(Error::NonConvergent { residual, tolerance: cfg.tolerance });
    }
    Ok(AlphaEstimate { value, residual, ratios })
}

/// Left fold of `⊕`, starting from the neutral element.
pub fn oplus_fold<M: FellerMonoid + ?Sized>(m: &M, xs: &[M::Elem]) -> Extended<M::Elem> {
    let mut acc = Extended::Finite(m.neutral());
    for x in xs {
        acc = match acc {
            Extended::Finite(a) => m.combine_finite(&a, x),
            Extended::Infinity => return Extended::Infinity,
        };
    }
    acc
}

/// Checks `fold(xs|P) ⊕ fold(xs|Q) = fold(xs)` for the bipartition given by
/// `part` (indices in `P`), by comparing the first 64 enumerated characters.
pub fn partition_additivity_check<M: FellerMonoid + ?Sized>(
    m: &M,
    xs: &[M::Elem],
    part: &[usize],
    tolerance: f64,
) -> Result<bool> {
    let in_p: BTreeSet<usize> = part.iter().copied().collect();
    let (p, q): (Vec<_>, Vec<_>) = xs
        .iter()
        .enumerate()
        .partition(|(i, _)| in_p.contains(i));
    let p: Vec<M::Elem> = p.into_iter().map(|(_, x)| x.clone()).collect();
    let q: Vec<M::Elem> = q.into_iter().map(|(_, x)| x.clone()).collect();
    let split = m.combine(&oplus_fold(m, &p), &oplus_fold(m, &q));
    let whole = oplus_fold(m, xs);
    let chars = m.base_characters(64)?;
    Ok(chars
        .iter()
        .all(|chi| (m.char_eval(chi, &split) - m.char_eval(chi, &whole)).abs() <= tolerance))
}

/// Thresholds for [`sum_diagnosis`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumConfig {
    /// Maximum number of stream terms consumed.
    pub max_terms: usize,
    /// Log-product floor standing in for "the product is zero".
    pub log_floor: f64,
    /// Increment size below which a log-product counts as settled.
    pub tail_eps: f64,
    /// Consecutive settled increments required before declaring convergence.
    pub stable_run: usize,
    /// Accepted residual in the product identity `χ(⊕x_i) = ∏χ(x_i)`.
    pub identity_tolerance: f64,
}

impl Default for SumConfig {
    fn default() -> Self {
        SumConfig {
            max_terms: 1_000_000,
            log_floor: -700.0,
            tail_eps: 1e-12,
            stable_run: 64,
            identity_tolerance: 1e-9,
        }
    }
}

/// Per-probe summary of the accumulated character products.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeProduct {
    pub character: CharacterId,
    pub log_product: f64,
    pub product: f64,
    /// `χ` evaluated on the prefix fold.
    pub fold_value: f64,
    /// `|χ(fold) − ∏χ(x_i)|`.
    pub residual: f64,
    /// Log-product extrapolated over the unseen tail.
    pub projected_log: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SumVerdict<E> {
    Converges { sum: Extended<E>, table: Vec<ProbeProduct> },
    Diverges { table: Vec<ProbeProduct> },
    Undecided { table: Vec<ProbeProduct> },
}

impl<E> SumVerdict<E> {
    pub fn table(&self) -> &[ProbeProduct] {
        match self {
            SumVerdict::Converges { table, .. }
            | SumVerdict::Diverges { table }
            | SumVerdict::Undecided { table } => table,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SumVerdict::Converges { .. } => "converges",
            SumVerdict::Diverges { .. } => "diverges",
            SumVerdict::Undecided { .. } => "undecided",
        }
    }
}

struct ProbeState {
    log: f64,
    settled_run: usize,
    // Sums of |Δ log| over dyadic index blocks [2^k, 2^{k+1}).
    blocks: Vec<f64>,
}

impl ProbeState {
    /// Extrapolates the remaining log-product by treating the dyadic block
    /// sums as a geometric series (Cauchy condensation). A ratio ≥ 1 projects
    /// to −∞.
    fn projected(&self, terms_seen: usize) -> f64 {
        if self.log == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        // Block k is complete once index 2^{k+1} − 1 has been seen.
        let complete = (usize::BITS - (terms_seen + 1).leading_zeros()) as usize - 1;
        let complete = complete.min(self.blocks.len());
        if complete < 3 {
            return self.log;
        }
        let b = &self.blocks[complete - 3..complete];
        let ratio = |num: f64, den: f64| {
            if den > 0.0 {
                num / den
            } else if num > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        };
        let r = (ratio(b[1], b[0]) * ratio(b[2], b[1])).sqrt();
        if r >= 1.0 || r.is_nan() {
            return f64::NEG_INFINITY;
        }
        self.log - b[2] * r / (1.0 - r)
    }
}

/// Numerical diagnostic for infinite `⊕`-sums.
///
/// Accumulates `log χ(x_n)` per probe over at most `cfg.max_terms` terms. The
/// sum is reported divergent when every probe's log-product is below
/// `cfg.log_floor`, either outright or after geometric extrapolation of its
/// dyadic block sums. It is reported convergent when some probe stays above
/// the floor with its last `cfg.stable_run` increments below `cfg.tail_eps`.
/// This is a heuristic, not a proof.
pub fn sum_diagnosis<M, I>(
    m: &M,
    xs: I,
    probes: &[CharacterId],
    cfg: &SumConfig,
) -> Result<SumVerdict<M::Elem>>
where
    M: FellerMonoid + ?Sized,
    I: IntoIterator<Item = M::Elem>,
{
    if probes.is_empty() {
        return Err(Error::InvalidArgument("sum_diagnosis needs at least one probe".into()));
    }
    let chars = probes.iter().map(|c| m.resolve(c)).collect::<Result<Vec<_>>>()?;
    let mut states: Vec<ProbeState> = chars
        .iter()
        .map(|_| ProbeState { log: 0.0, settled_run: 0, blocks: Vec::new() })
        .collect();
    let mut fold = Extended::Finite(m.neutral());
    let mut seen = 0usize;

    for x in xs.into_iter().take(cfg.max_terms) {
        seen += 1;
        let block = (usize::BITS - seen.leading_zeros()) as usize - 1;
        for (chi, st) in chars.iter().zip(states.iter_mut()) {
            let v = m.eval(chi, &x);
            let inc = if v > 0.0 { v.ln() } else { f64::NEG_INFINITY };
            st.log += inc;
            if st.blocks.len() <= block {
                st.blocks.resize(block + 1, 0.0);
            }
            st.blocks[block] += -inc;
            if -inc < cfg.tail_eps {
                st.settled_run += 1;
            } else {
                st.settled_run = 0;
            }
        }
        fold = match fold {
            Extended::Finite(a) => m.combine_finite(&a, &x),
            Extended::Infinity => Extended::Infinity,
        };
        if states.iter().all(|s| s.log < cfg.log_floor) {
            break;
        }
    }

    let table: Vec<ProbeProduct> = probes
        .iter()
        .zip(&chars)
        .zip(&states)
        .map(|((c, chi), st)| {
            let product = st.log.exp();
            let fold_value = m.char_eval(chi, &fold);
            ProbeProduct {
                character: c.clone(),
                log_product: st.log,
                product,
                fold_value,
                residual: (fold_value - product).abs(),
                projected_log: st.projected(seen),
            }
        })
        .collect();

    if table.iter().all(|p| p.projected_log < cfg.log_floor) {
        return Ok(SumVerdict::Diverges { table });
    }
    let settled = states.iter().zip(&table).any(|(st, p)| {
        p.log_product >= cfg.log_floor && st.settled_run >= cfg.stable_run.min(seen.max(1))
    });
    if settled {
        Ok(SumVerdict::Converges { sum: fold, table })
    } else {
        Ok(SumVerdict::Undecided { table })
    }
}
