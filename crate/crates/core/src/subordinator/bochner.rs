use crate::error::{Error, Result};
use crate::instances::AdditiveReals;
use crate::monoid::{Extended, FellerMonoid};
use crate::ppp::LevyMeasure;

use super::path::{with_drift, PathRealization};

/// Classical exponent `Φ(μ) = d·μ + ∫(1 − e^{−μx}) Π(dx)` of an additive
/// clock, at any real `μ ≥ 0`.
pub fn clock_exponent(measure: &LevyMeasure, drift: f64, mu: f64) -> Result<f64> {
    let mut total = drift * mu;
    for layer in &measure.layers {
        let v = layer
            .law
            .one_minus_laplace(mu)
            .ok_or_else(|| Error::NoClosedForm(format!("clock with {} marks", layer.law.label())))?;
        total += layer.mass * v;
    }
    Ok(total)
}

/// Time change `Y_t = X_{σ_t}` of an outer path by an additive clock path.
///
/// `Y` changes state at the clock's jump times and, when the clock drifts,
/// at the times the clock crosses an outer jump time. An outer drift `d` and
/// clock drift `d'` give `Y` the drift `d·d'`.
pub fn bochner_subordinate<M: FellerMonoid + ?Sized>(
    m: &M,
    outer: &PathRealization<M::Elem>,
    inner: &PathRealization<f64>,
) -> Result<PathRealization<M::Elem>> {
    let clock = AdditiveReals::new();
    let horizon = inner.horizon();
    let clock_at = |t: f64| -> Result<f64> {
        match inner.at(&clock, t)? {
            Extended::Finite(s) => Ok(s),
            Extended::Infinity => Err(Error::HorizonExceeded { needed: f64::INFINITY, horizon: outer.horizon() }),
        }
    };
    let sup = clock_at(horizon)?;
    if sup > outer.horizon() {
        return Err(Error::HorizonExceeded { needed: sup, horizon: outer.horizon() });
    }

    let inner_drift = inner.drift();
    let mut candidates: Vec<f64> = inner.jump_times().to_vec();
    if inner_drift > 0.0 {
        // Within [t_k, t_{k+1}) the clock is d'·u + J_k.
        let mut start = 0.0;
        let mut jumps = 0.0;
        let ends = inner.jump_times().iter().copied().chain(std::iter::once(horizon));
        for (k, end) in ends.enumerate() {
            let lo = inner_drift * start + jumps;
            let hi = inner_drift * end + jumps;
            for &s in outer.jump_times() {
                if s > lo && s < hi {
                    candidates.push((s - jumps) / inner_drift);
                }
            }
            if let Some(Extended::Finite(j)) = inner.states().get(k) {
                jumps = *j;
            }
            start = end;
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let outer_drift = outer.drift();
    let state_at = |t: f64| -> Result<Extended<M::Elem>> {
        let sigma = clock_at(t)?;
        let clock_jumps = match inner.jump_state_at(&clock, t)? {
            Extended::Finite(j) => j,
            Extended::Infinity => f64::INFINITY,
        };
        let folded = outer.jump_state_at(m, sigma)?;
        Ok(with_drift(m, outer_drift * clock_jumps, folded))
    };

    let mut times = Vec::with_capacity(candidates.len());
    let mut states: Vec<Extended<M::Elem>> = Vec::with_capacity(candidates.len());
    let mut current = Extended::Finite(m.neutral());
    for t in candidates {
        let next = state_at(t)?;
        if next != current {
            times.push(t);
            states.push(next.clone());
            current = next;
        }
    }
    Ok(PathRealization::from_parts(times, states, horizon, outer_drift * inner_drift))
}
