use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{Criterion, VerificationReport};
use super::stats::{hoeffding_halfwidth, Estimate};
use crate::error::{Error, Result};
use crate::instances::AdditiveReals;
use crate::monoid::{
    alpha_coefficient, sum_diagnosis, CharacterId, Extended, ExtrapolationConfig, FellerMonoid,
    SumConfig, SumVerdict,
};
use crate::ppp::{IntegralMode, LevyMeasure, MarkLaw, MarkSpace};
use crate::rng::{open01, substream, StreamKey};
use crate::subordinator::{
    bochner_subordinate, character_functional, clock_exponent, levy_ito_path, LaplaceExponent,
    PathRealization,
};

/// Slack added to every comparison against an analytic value.
pub const ANALYTIC_TOLERANCE: f64 = 1e-9;

// Lanes keep independent copies within a replicate apart.
const LANE_OUTER: u64 = 0;
const LANE_CLOCK: u64 = 1;
const LANE_THIRD: u64 = 2;
const LANE_PSI: u64 = 1 << 20;

/// Common parameters of a Monte Carlo check.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub measure: LevyMeasure,
    pub drift: f64,
    pub horizon: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Family-wise error budget of one check, split across its probes.
    pub delta: f64,
    pub probes: Vec<CharacterId>,
    pub times: Vec<f64>,
    /// Samples per layer when `Ψ` has no closed form.
    pub psi_samples: usize,
}

impl Scenario {
    pub fn new(measure: LevyMeasure, drift: f64, horizon: f64) -> Self {
        Scenario {
            measure,
            drift,
            horizon,
            replicates: 100_000,
            seed: 0,
            delta: 0.01,
            probes: vec![CharacterId::base(0)],
            times: vec![horizon],
            psi_samples: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.probes.is_empty() || self.times.is_empty() {
            return bad("at least one probe character and one time are required".into());
        }
        if let Some(t) = self.times.iter().find(|t| !(0.0..=self.horizon).contains(*t)) {
            return bad(format!("probe time {t} outside [0, {}]", self.horizon));
        }
        Ok(())
    }

    fn key(&self, lane: u64, replicate: u64) -> StreamKey {
        StreamKey::new(self.seed).with_lane(lane).for_replicate(replicate)
    }
}

fn resolve_all<M: FellerMonoid + ?Sized>(m: &M, probes: &[CharacterId]) -> Result<Vec<M::Character>> {
    probes.iter().map(|c| m.resolve(c)).collect()
}

/// Runs `f` for every replicate in parallel; output order is replicate order.
fn per_replicate<F>(n: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync + Send,
{
    (0..n as u64).into_par_iter().map(f).collect()
}

fn columns(rows: &[Vec<f64>], width: usize) -> Vec<Vec<f64>> {
    (0..width).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

/// `Ψ(χ)` with its uncertainty: analytic when registered, otherwise a Monte
/// Carlo integral with a Hoeffding radius.
fn psi<M: MarkSpace + ?Sized>(
    m: &M,
    measure: &LevyMeasure,
    drift: f64,
    chi: &M::Character,
    sc: &Scenario,
    salt: u64,
) -> Result<(f64, f64)> {
    let exponent = LaplaceExponent::new(m, measure, drift)?;
    match exponent.eval_resolved(chi) {
        Err(Error::NoClosedForm(_)) => exponent
            .with_mode(IntegralMode::MonteCarlo {
                samples: sc.psi_samples,
                delta: sc.delta,
                key: StreamKey::new(sc.seed).with_lane(LANE_PSI + salt),
            })
            .eval_resolved(chi),
        other => other,
    }
}

/// Largest change of `f` when its argument moves by `±h`.
fn spread(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    let v = f(x);
    (f((x - h).max(0.0)) - v).abs().max((f(x + h) - v).abs())
}

fn path<M: MarkSpace + ?Sized>(
    m: &M,
    sc: &Scenario,
    horizon: f64,
    key: StreamKey,
) -> Result<PathRealization<M::Elem>> {
    levy_ito_path(m, &sc.measure, sc.drift, horizon, key)
}

/// `X_t` sampled on its own horizon; `𝒆` at `t = 0`.
fn value_at<M: MarkSpace + ?Sized>(m: &M, sc: &Scenario, t: f64, key: StreamKey) -> Result<Extended<M::Elem>> {
    if t == 0.0 {
        return Ok(Extended::Finite(m.neutral()));
    }
    path(m, sc, t, key)?.at(m, t)
}

/// Empirical `E[χ(X_t)]` over a stored ensemble, with a Hoeffding radius.
pub fn estimate_laplace<M: FellerMonoid + ?Sized>(
    m: &M,
    ensemble: &[PathRealization<M::Elem>],
    c: &CharacterId,
    t: f64,
    delta: f64,
    seed: u64,
) -> Result<Estimate> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let chi = m.resolve(c)?;
    let values = ensemble
        .par_iter()
        .map(|p| Ok(m.char_eval(&chi, &p.at(m, t)?)))
        .collect::<Result<Vec<f64>>>()?;
    Estimate::bounded(&values, 1.0, delta, seed)
}

/// `E[χ(X_t)] = exp(−tΨ(χ))` for every probe character and time.
pub fn check_lk<M: MarkSpace + ?Sized>(m: &M, sc: &Scenario) -> Result<Vec<VerificationReport>> {
    sc.validate()?;
    let chars = resolve_all(m, &sc.probes)?;
    let width = chars.len() * sc.times.len();
    let delta = sc.delta / width as f64;
    let rows = per_replicate(sc.replicates, |r| {
        let p = path(m, sc, sc.horizon, sc.key(LANE_OUTER, r))?;
        let mut out = Vec::with_capacity(width);
        for chi in &chars {
            for &t in &sc.times {
                out.push(m.char_eval(chi, &p.at(m, t)?));
            }
        }
        Ok(out)
    })?;
    let cols = columns(&rows, width);
    let mut reports = Vec::with_capacity(width);
    for (i, (c, chi)) in sc.probes.iter().zip(&chars).enumerate() {
        let (psi, psi_hw) = psi(m, &sc.measure, sc.drift, chi, sc, i as u64)?;
        for (j, &t) in sc.times.iter().enumerate() {
            let est = Estimate::bounded(&cols[i * sc.times.len() + j], 1.0, delta, sc.seed)?;
            let target = (-t * psi).exp();
            let allowance = spread(|p| (-t * p).exp(), psi, psi_hw) + ANALYTIC_TOLERANCE;
            reports.push(VerificationReport::new(
                "lk",
                json!({ "instance": m.name(), "probe": c, "t": t, "psi": psi, "psi_halfwidth": psi_hw, "delta": delta }),
                target,
                est.mean,
                est.halfwidth,
                allowance,
                Criterion::TwoSided,
                est.samples,
                sc.seed,
            ));
        }
    }
    Ok(reports)
}

/// `E[χ(X_{t_1})⋯χ(X_{t_n})] = ∏ exp(−(t_k − t_{k−1})Ψ(χ^{n−k+1}))` over
/// `sc.times` for every probe.
pub fn check_fdd<M: MarkSpace + ?Sized>(m: &M, sc: &Scenario) -> Result<Vec<VerificationReport>> {
    sc.validate()?;
    crate::subordinator::check_times(&sc.times)?;
    let chars = resolve_all(m, &sc.probes)?;
    let delta = sc.delta / chars.len() as f64;
    let rows = per_replicate(sc.replicates, |r| {
        let p = path(m, sc, sc.horizon, sc.key(LANE_OUTER, r))?;
        chars
            .iter()
            .map(|chi| {
                sc.times
                    .iter()
                    .map(|&t| Ok(m.char_eval(chi, &p.at(m, t)?)))
                    .product::<Result<f64>>()
            })
            .collect()
    })?;
    let cols = columns(&rows, chars.len());
    let n = sc.times.len();
    let mut reports = Vec::new();
    for (i, c) in sc.probes.iter().enumerate() {
        let mut log = 0.0;
        let mut log_spread = 0.0;
        let mut prev = 0.0;
        for (k, &t) in sc.times.iter().enumerate() {
            let power = c.power(n - k);
            let (p, h) = psi(m, &sc.measure, sc.drift, &m.resolve(&power)?, sc, (i * n + k) as u64)?;
            log -= (t - prev) * p;
            log_spread += (t - prev) * h;
            prev = t;
        }
        let target = log.exp();
        let allowance = target * log_spread.exp_m1() + ANALYTIC_TOLERANCE;
        let est = Estimate::bounded(&cols[i], 1.0, delta, sc.seed)?;
        reports.push(VerificationReport::new(
            "fdd",
            json!({ "instance": m.name(), "probe": c, "times": sc.times, "delta": delta }),
            target,
            est.mean,
            est.halfwidth,
            allowance,
            Criterion::TwoSided,
            est.samples,
            sc.seed,
        ));
    }
    Ok(reports)
}

/// `E[χ(X_t) e^{tΨ(χ)}] = 1` on the grid `sc.times`.
pub fn check_martingale<M: MarkSpace + ?Sized>(m: &M, sc: &Scenario) -> Result<Vec<VerificationReport>> {
    sc.validate()?;
    let chars = resolve_all(m, &sc.probes)?;
    let psis = chars
        .iter()
        .enumerate()
        .map(|(i, chi)| psi(m, &sc.measure, sc.drift, chi, sc, i as u64))
        .collect::<Result<Vec<_>>>()?;
    let width = chars.len() * sc.times.len();
    let delta = sc.delta / width as f64;
    let rows = per_replicate(sc.replicates, |r| {
        let p = path(m, sc, sc.horizon, sc.key(LANE_OUTER, r))?;
        let mut out = Vec::with_capacity(width);
        for (chi, (psi, _)) in chars.iter().zip(&psis) {
            for &t in &sc.times {
                out.push(m.char_eval(chi, &p.at(m, t)?) * (t * psi).exp());
            }
        }
        Ok(out)
    })?;
    let cols = columns(&rows, width);
    let mut reports = Vec::new();
    for (i, c) in sc.probes.iter().enumerate() {
        let (psi, h) = psis[i];
        for (j, &t) in sc.times.iter().enumerate() {
            let range = (t * psi).exp();
            let est = Estimate::bounded(&cols[i * sc.times.len() + j], range, delta, sc.seed)?;
            reports.push(VerificationReport::new(
                "martingale",
                json!({ "instance": m.name(), "probe": c, "t": t, "psi": psi, "delta": delta }),
                1.0,
                est.mean,
                est.halfwidth,
                (t * h).exp_m1() + ANALYTIC_TOLERANCE,
                Criterion::TwoSided,
                est.samples,
                sc.seed,
            ));
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentParams {
    /// Rate of the independent exponential killing time.
    pub q: f64,
    /// Highest moment checked.
    pub n_max: usize,
}

/// `E[(I_{e_q})ᵏ] = k! / ∏_{j≤k}(q + Ψ(χʲ))` for `k = 1..n_max`, with
/// empirical-Bernstein radii.
pub fn check_moments<M: MarkSpace + ?Sized>(
    m: &M,
    sc: &Scenario,
    params: &MomentParams,
) -> Result<Vec<VerificationReport>> {
    sc.validate()?;
    if !(params.q > 0.0) || params.n_max == 0 {
        return Err(Error::InvalidArgument("moments need q > 0 and n_max >= 1".into()));
    }
    let chars = resolve_all(m, &sc.probes)?;
    let width = chars.len() * params.n_max;
    let delta = sc.delta / width as f64;
    let rows = per_replicate(sc.replicates, |r| {
        let key = sc.key(LANE_OUTER, r);
        let kill = -open01(&mut key.rng(substream::KILLING_TIME)).ln() / params.q;
        let p = path(m, sc, kill, key)?;
        let mut out = Vec::with_capacity(width);
        for chi in &chars {
            let integral = character_functional(m, &p, chi, kill)?;
            out.extend((1..=params.n_max).map(|k| integral.powi(k as i32)));
        }
        Ok(out)
    })?;
    let cols = columns(&rows, width);
    let mut reports = Vec::new();
    for (i, c) in sc.probes.iter().enumerate() {
        let mut psis = Vec::with_capacity(params.n_max);
        for k in 1..=params.n_max {
            psis.push(psi(m, &sc.measure, sc.drift, &m.resolve(&c.power(k))?, sc, (i * params.n_max + k) as u64)?);
        }
        for k in 1..=params.n_max {
            let moment = |shift: f64| -> f64 {
                (1..=k).map(|j| j as f64 / (params.q + (psis[j - 1].0 + shift).max(0.0))).product()
            };
            let target = moment(0.0);
            for (j, (p, _)) in psis.iter().enumerate().take(k) {
                if params.q + p <= 0.0 {
                    return Err(Error::DegenerateRate(j + 1));
                }
            }
            let h = psis[..k].iter().map(|p| p.1).fold(0.0, f64::max);
            let allowance = spread(moment, 0.0, h) + ANALYTIC_TOLERANCE;
            let est = Estimate::unbounded(&cols[i * params.n_max + k - 1], delta, sc.seed)?;
            reports.push(VerificationReport::new(
                "moments",
                json!({ "instance": m.name(), "probe": c, "q": params.q, "k": k, "delta": delta }),
                target,
                est.mean,
                est.halfwidth,
                allowance,
                Criterion::TwoSided,
                est.samples,
                sc.seed,
            ));
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransienceParams {
    /// A path counts as escaped when every probe satisfies `χ(X_T) < threshold`.
    pub threshold: f64,
    /// Required fraction of escaped paths.
    pub min_fraction: f64,
}

impl Default for TransienceParams {
    fn default() -> Self {
        TransienceParams { threshold: 1e-3, min_fraction: 0.999 }
    }
}

/// Fraction of paths with `max_χ χ(X_T) < threshold` at `T = sc.horizon`.
pub fn check_transience<M: MarkSpace + ?Sized>(
    m: &M,
    sc: &Scenario,
    params: &TransienceParams,
) -> Result<Vec<VerificationReport>> {
    sc.validate()?;
    let chars = resolve_all(m, &sc.probes)?;
    let rows = per_replicate(sc.replicates, |r| {
        let end = path(m, sc, sc.horizon, sc.key(LANE_OUTER, r))?.at(m, sc.horizon)?;
        let worst = chars.iter().map(|chi| m.char_eval(chi, &end)).fold(0.0, f64::max);
        Ok(vec![if worst < params.threshold { 1.0 } else { 0.0 }])
    })?;
    let est = Estimate::bounded(&columns(&rows, 1)[0], 1.0, sc.delta, sc.seed)?;
    Ok(vec![VerificationReport::new(
        "transience",
        json!({ "instance": m.name(), "probes": sc.probes, "T": sc.horizon, "threshold": params.threshold }),
        params.min_fraction,
        est.mean,
        est.halfwidth,
        0.0,
        Criterion::AtLeast,
        est.samples,
        sc.seed,
    )])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionParams {
    /// `(s, t)` pairs: `X_s ⊕ X'_t` is compared with `X_{s+t}`.
    pub pairs: Vec<(f64, f64)>,
}

/// Two-sample check that `𝓛(X_s ⊕ X'_t) = 𝓛(X_{s+t})` for independent copies.
pub fn check_convolution<M: MarkSpace + ?Sized>(
    m: &M,
    sc: &Scenario,
    params: &ConvolutionParams,
) -> Result<Vec<VerificationReport>> {
    sc.validate()?;
    if params.pairs.iter().any(|&(s, t)| !(s >= 0.0 && t >= 0.0 && (s + t).is_finite())) {
        return Err(Error::InvalidArgument("convolution times must be nonnegative".into()));
    }
    let chars = resolve_all(m, &sc.probes)?;
    let width = chars.len() * params.pairs.len();
    let delta = sc.delta / (2 * width) as f64;
    let rows = per_replicate(sc.replicates, |r| {
        let mut out = Vec::with_capacity(2 * width);
        for &(s, t) in &params.pairs {
            let a = value_at(m, sc, s, sc.key(LANE_OUTER, r))?;
            let b = value_at(m, sc, t, sc.key(LANE_CLOCK, r))?;
            let sum = m.combine(&a, &b);
            let whole = value_at(m, sc, s + t, sc.key(LANE_THIRD, r))?;
            for chi in &chars {
                out.push(m.char_eval(chi, &sum));
                out.push(m.char_eval(chi, &whole));
            }
        }
        Ok(out)
    })?;
    let cols = columns(&rows, 2 * width);
    let mut reports = Vec::new();
    for (pi, &(s, t)) in params.pairs.iter().enumerate() {
        for (i, (c, chi)) in sc.probes.iter().zip(&chars).enumerate() {
            let col = 2 * (pi * chars.len() + i);
            let split = Estimate::bounded(&cols[col], 1.0, delta, sc.seed)?;
            let whole = Estimate::bounded(&cols[col + 1], 1.0, delta, sc.seed)?;
            let analytic = psi(m, &sc.measure, sc.drift, chi, sc, i as u64)
                .ok()
                .map(|(p, _)| (-(s + t) * p).exp());
            reports.push(VerificationReport::new(
                "convolution",
                json!({ "instance": m.name(), "probe": c, "s": s, "t": t, "analytic": analytic, "delta": delta }),
                whole.mean,
                split.mean,
                split.halfwidth + whole.halfwidth,
                ANALYTIC_TOLERANCE,
                Criterion::TwoSided,
                split.samples,
                sc.seed,
            ));
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BochnerParams {
    /// Lévy measure of the additive clock.
    pub clock: LevyMeasure,
    #[serde(default)]
    pub clock_drift: f64,
}

/// `E[χ(X_{σ_t})] = exp(−tΦ(Ψ(χ)))` for an independent additive clock `σ`.
pub fn check_bochner<M: MarkSpace + ?Sized>(
    m: &M,
    sc: &Scenario,
    params: &BochnerParams,
) -> Result<Vec<VerificationReport>> {
    sc.validate()?;
    let clock_instance = AdditiveReals::new();
    params.clock.validate_for(&clock_instance)?;
    let chars = resolve_all(m, &sc.probes)?;
    let width = chars.len() * sc.times.len();
    let delta = sc.delta / width as f64;
    let rows = per_replicate(sc.replicates, |r| {
        let clock = levy_ito_path(&clock_instance, &params.clock, params.clock_drift, sc.horizon, sc.key(LANE_CLOCK, r))?;
        let sup = clock.at(&clock_instance, sc.horizon)?.finite().copied().unwrap_or(f64::INFINITY);
        let outer = path(m, sc, sup.max(f64::MIN_POSITIVE), sc.key(LANE_OUTER, r))?;
        let y = bochner_subordinate(m, &outer, &clock)?;
        let mut out = Vec::with_capacity(width);
        for chi in &chars {
            for &t in &sc.times {
                out.push(m.char_eval(chi, &y.at(m, t)?));
            }
        }
        Ok(out)
    })?;
    let cols = columns(&rows, width);
    let mut reports = Vec::new();
    for (i, (c, chi)) in sc.probes.iter().zip(&chars).enumerate() {
        let (p, h) = psi(m, &sc.measure, sc.drift, chi, sc, i as u64)?;
        let composed = clock_exponent(&params.clock, params.clock_drift, p)?;
        for (j, &t) in sc.times.iter().enumerate() {
            let target = (-t * composed).exp();
            let f = |x: f64| clock_exponent(&params.clock, params.clock_drift, x).map_or(f64::NAN, |v| (-t * v).exp());
            let allowance = spread(f, p, h) + ANALYTIC_TOLERANCE;
            let est = Estimate::bounded(&cols[i * sc.times.len() + j], 1.0, delta, sc.seed)?;
            reports.push(VerificationReport::new(
                "bochner",
                json!({ "instance": m.name(), "probe": c, "t": t, "psi": p, "phi_of_psi": composed, "delta": delta }),
                target,
                est.mean,
                est.halfwidth,
                allowance,
                Criterion::TwoSided,
                est.samples,
                sc.seed,
            ));
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceParams {
    /// Law of the i.i.d. steps `ζ_i`.
    pub step_law: MarkLaw,
    /// Values of `n`, increasing.
    pub ladder: Vec<usize>,
    /// `b_n = scale · n^exponent`.
    #[serde(default = "one")]
    pub b_exponent: f64,
    #[serde(default = "one")]
    pub b_scale: f64,
    /// Allowed `|E[χ(X^{(n)}_t)] − exp(−tΨ(χ))|` beyond the halfwidth at the
    /// last rung.
    #[serde(default = "default_bias")]
    pub bias_allowance: f64,
}

fn one() -> f64 {
    1.0
}

fn default_bias() -> f64 {
    0.01
}

/// Marginal form of the invariance principle: the law of
/// `b_n⁻¹·(ζ_1 ⊕ ⋯ ⊕ ζ_{⌊nt⌋})` approaches that of `X_t`, whose exponent is
/// given by `sc.measure` and `sc.drift`.
///
/// Along the ladder the discrepancy to `exp(−tΨ)` must strictly decrease. It
/// is computed from the exact finite-`n` value `(1 − E[1 − χ(ζ/b_n)])^{⌊nt⌋}`
/// when the step law has a registered closed form (each rung's Monte Carlo
/// estimate is then checked against that value), and from the Monte Carlo
/// estimate otherwise. The last rung's estimate must be within
/// `halfwidth + bias_allowance` of the limit.
pub fn check_invariance<M: MarkSpace + ?Sized>(
    m: &M,
    sc: &Scenario,
    params: &InvarianceParams,
) -> Result<Vec<VerificationReport>> {
    sc.validate()?;
    if m.action(1.0, &m.neutral()).is_none() {
        return Err(Error::NoAction(m.name().into()));
    }
    m.validate_law(&params.step_law)?;
    if params.ladder.len() < 2 || params.ladder.windows(2).any(|w| w[0] >= w[1]) || params.ladder[0] == 0 {
        return Err(Error::InvalidArgument("ladder needs at least two increasing positive rungs".into()));
    }
    let chars = resolve_all(m, &sc.probes)?;
    let width = chars.len() * sc.times.len();
    let b = |n: usize| params.b_scale * (n as f64).powf(params.b_exponent);

    // finite-n exact values, if the step law supports them
    let exact: Vec<Option<Vec<f64>>> = params
        .ladder
        .iter()
        .map(|&n| {
            let mut v = Vec::with_capacity(width);
            for chi in &chars {
                let scaled = m.rescale_character(chi, b(n))?;
                let miss = m.closed_form_one_minus_chi(&scaled, &params.step_law)?;
                for &t in &sc.times {
                    v.push((1.0 - miss).powf((n as f64 * t).floor()));
                }
            }
            Some(v)
        })
        .collect();
    let has_exact = exact.iter().all(Option::is_some);
    let two_sided = width * (1 + if has_exact { params.ladder.len() } else { 0 });
    let delta = sc.delta / two_sided as f64;

    let mut estimates: Vec<Vec<Estimate>> = Vec::with_capacity(params.ladder.len());
    for (rung, &n) in params.ladder.iter().enumerate() {
        let steps: Vec<usize> = sc.times.iter().map(|&t| (n as f64 * t).floor() as usize).collect();
        let max_steps = steps.iter().copied().max().unwrap_or(0);
        let inv_b = 1.0 / b(n);
        let rows = per_replicate(sc.replicates, |r| {
            let mut rng = sc.key(rung as u64, r).rng(substream::INVARIANCE_STEPS);
            let mut fold = Extended::Finite(m.neutral());
            let mut at_steps: Vec<Extended<M::Elem>> = vec![Extended::Infinity; steps.len()];
            for (slot, &s) in steps.iter().enumerate() {
                if s == 0 {
                    at_steps[slot] = fold.clone();
                }
            }
            for k in 1..=max_steps {
                if let Extended::Finite(a) = &fold {
                    let z = m.sample_mark(&params.step_law, &mut rng);
                    fold = m.combine_finite(a, &z);
                }
                for (slot, &s) in steps.iter().enumerate() {
                    if s == k {
                        at_steps[slot] = fold.clone();
                    }
                }
            }
            let scaled: Vec<Extended<M::Elem>> = at_steps
                .into_iter()
                .map(|x| match x {
                    Extended::Finite(e) => m.action(inv_b, &e).map_or(Extended::Infinity, Extended::Finite),
                    Extended::Infinity => Extended::Infinity,
                })
                .collect();
            let mut out = Vec::with_capacity(width);
            for chi in &chars {
                for x in &scaled {
                    out.push(m.char_eval(chi, x));
                }
            }
            Ok(out)
        })?;
        estimates.push(
            columns(&rows, width)
                .iter()
                .map(|col| Estimate::bounded(col, 1.0, delta, sc.seed))
                .collect::<Result<_>>()?,
        );
    }

    let mut reports = Vec::new();
    for (i, (c, chi)) in sc.probes.iter().zip(&chars).enumerate() {
        let (p, h) = psi(m, &sc.measure, sc.drift, chi, sc, i as u64)?;
        for (j, &t) in sc.times.iter().enumerate() {
            let col = i * sc.times.len() + j;
            let target = (-t * p).exp();
            let mut discrepancies = Vec::with_capacity(params.ladder.len());
            for (rung, &n) in params.ladder.iter().enumerate() {
                let est = &estimates[rung][col];
                match &exact[rung] {
                    Some(v) => {
                        discrepancies.push((v[col] - target).abs());
                        reports.push(VerificationReport::new(
                            "invariance-rung",
                            json!({ "instance": m.name(), "probe": c, "t": t, "n": n, "delta": delta }),
                            v[col],
                            est.mean,
                            est.halfwidth,
                            ANALYTIC_TOLERANCE,
                            Criterion::TwoSided,
                            est.samples,
                            sc.seed,
                        ));
                    }
                    None => discrepancies.push((est.mean - target).abs()),
                }
            }
            reports.push(VerificationReport::new(
                "invariance-monotone",
                json!({
                    "instance": m.name(), "probe": c, "t": t, "ladder": params.ladder,
                    "discrepancies": discrepancies, "source": if has_exact { "finite-n" } else { "monte-carlo" },
                }),
                0.0,
                *discrepancies.last().unwrap(),
                0.0,
                1e-12,
                Criterion::Decreasing,
                sc.replicates,
                sc.seed,
            ));
            let last = estimates.last().unwrap()[col];
            let allowance = params.bias_allowance + spread(|x| (-t * x).exp(), p, h) + ANALYTIC_TOLERANCE;
            reports.push(VerificationReport::new(
                "invariance-limit",
                json!({ "instance": m.name(), "probe": c, "t": t, "n": params.ladder.last(), "delta": delta }),
                target,
                last.mean,
                last.halfwidth,
                allowance,
                Criterion::TwoSided,
                last.samples,
                sc.seed,
            ));
        }
    }
    Ok(reports)
}

/// Deterministic real-valued streams for the `⊕`-sum diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RealStream {
    /// `first · ratio^{n−1}`
    Geometric { first: f64, ratio: f64 },
    /// `scale / n`
    Harmonic { scale: f64 },
    /// `n^{−exponent}`
    Power { exponent: f64 },
    /// `1 − 1/n`
    OneMinusReciprocal,
    Constant { value: f64 },
}

impl RealStream {
    pub fn iter(self) -> impl Iterator<Item = f64> {
        (1u64..).map(move |n| {
            let n = n as f64;
            match self {
                RealStream::Geometric { first, ratio } => first * ratio.powf(n - 1.0),
                RealStream::Harmonic { scale } => scale / n,
                RealStream::Power { exponent } => n.powf(-exponent),
                RealStream::OneMinusReciprocal => 1.0 - 1.0 / n,
                RealStream::Constant { value } => value,
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectedVerdict {
    Converges,
    Diverges,
    Undecided,
}

impl ExpectedVerdict {
    fn code(self) -> f64 {
        match self {
            ExpectedVerdict::Converges => 1.0,
            ExpectedVerdict::Diverges => -1.0,
            ExpectedVerdict::Undecided => 0.0,
        }
    }
}

fn verdict_code<E>(v: &SumVerdict<E>) -> f64 {
    match v {
        SumVerdict::Converges { .. } => 1.0,
        SumVerdict::Diverges { .. } => -1.0,
        SumVerdict::Undecided { .. } => 0.0,
    }
}

/// Runs the `⊕`-sum diagnostic on a real stream and compares the verdict
/// with the expected one. A convergent verdict also reports the product
/// identity `χ(⊕x_i) = ∏χ(x_i)` per probe.
pub fn check_sum_criterion<M: FellerMonoid<Elem = f64> + ?Sized>(
    m: &M,
    probes: &[CharacterId],
    stream: RealStream,
    expect: ExpectedVerdict,
    cfg: &SumConfig,
) -> Result<Vec<VerificationReport>> {
    let verdict = sum_diagnosis(m, stream.iter(), probes, cfg)?;
    let mut reports = vec![VerificationReport::new(
        "sum-criterion",
        json!({
            "instance": m.name(), "stream": stream, "verdict": verdict.label(),
            "expected": expect, "table": verdict.table(),
        }),
        expect.code(),
        verdict_code(&verdict),
        0.0,
        0.0,
        Criterion::Exact,
        cfg.max_terms,
        0,
    )];
    if let SumVerdict::Converges { sum, table } = &verdict {
        for p in table {
            reports.push(VerificationReport::new(
                "sum-identity",
                json!({ "instance": m.name(), "probe": p.character, "sum": sum.finite() }),
                p.product,
                p.fold_value,
                0.0,
                cfg.identity_tolerance,
                Criterion::TwoSided,
                cfg.max_terms,
                0,
            ));
        }
    }
    Ok(reports)
}

/// Compares the extrapolated coefficient `lim (1 − χ(x))/φ(x)` with the
/// analytic one. An idempotent instance with an empty sequence reports its
/// structural value `0` (characters are `{0, 1}`-valued there, so the ratio
/// vanishes on a neighbourhood of the neutral element).
pub fn check_alpha<M: FellerMonoid + ?Sized>(
    m: &M,
    probes: &[CharacterId],
    sequence: &[M::Elem],
    n_terms: usize,
    cfg: &ExtrapolationConfig,
    allowance: f64,
) -> Result<Vec<VerificationReport>> {
    probes
        .iter()
        .map(|c| {
            let chi = m.resolve(c)?;
            let analytic = m
                .analytic_alpha(&chi)
                .ok_or_else(|| Error::NoClosedForm(format!("alpha on {}", m.name())))?;
            let (value, residual, ratios, source) = if sequence.is_empty() && m.is_idempotent() {
                (0.0, 0.0, Vec::new(), "idempotent")
            } else {
                let est = alpha_coefficient(m, c, sequence, n_terms, cfg)?;
                (est.value, est.residual, est.ratios, "extrapolated")
            };
            Ok(VerificationReport::new(
                "alpha",
                json!({ "instance": m.name(), "probe": c, "n_terms": n_terms, "source": source, "ratios": ratios }),
                analytic,
                value,
                residual,
                allowance,
                Criterion::TwoSided,
                sequence.len(),
                0,
            ))
        })
        .collect()
}

/// Hoeffding radius used by the checks, exposed for reporting.
pub fn halfwidth(n: usize, delta: f64) -> f64 {
    hoeffding_halfwidth(n, 1.0, delta)
}
