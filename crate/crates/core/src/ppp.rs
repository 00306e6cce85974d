//! Lévy measures and marked Poisson point processes on `(0, T] × 𝕄`.
//!
//! A σ-finite Lévy measure is supplied as an ordered list of finite-mass
//! layers, each a total mass times a probability law for the marks. Sampling
//! superposes independent per-layer Poisson processes.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monoid::{CharacterId, FellerMonoid};
use crate::rng::{open01, substream, StreamKey};
use crate::verify::stats::pairwise_sum;

/// Probability law of the marks within one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MarkLaw {
    Exponential { rate: f64 },
    /// `P(X > x) = (x_min / x)^alpha` for `x ≥ x_min`.
    Pareto { alpha: f64, x_min: f64 },
    Constant { value: f64 },
    /// A single site drawn uniformly from the lattice box.
    UniformSingleton,
    /// A uniformly drawn subset of the box with `size` sites.
    UniformSubset { size: usize },
    /// Normalised restriction of `c·x^{−1−α} dx` to shell `k`: `(1, ∞)` for
    /// `k = 0`, `(2^{−k}, 2^{1−k}]` for `k ≥ 1`.
    StableShell { alpha: f64, c: f64, k: u32 },
}

impl MarkLaw {
    pub fn label(&self) -> &'static str {
        match self {
            MarkLaw::Exponential { .. } => "exponential",
            MarkLaw::Pareto { .. } => "pareto",
            MarkLaw::Constant { .. } => "constant",
            MarkLaw::UniformSingleton => "uniform-singleton",
            MarkLaw::UniformSubset { .. } => "uniform-subset",
            MarkLaw::StableShell { .. } => "stable-shell",
        }
    }

    pub fn is_real_valued(&self) -> bool {
        !matches!(self, MarkLaw::UniformSingleton | MarkLaw::UniformSubset { .. })
    }

    /// Parameter checks for real-valued laws; marks must be strictly positive.
    pub fn validate_real(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidLayer(format!("{}: {msg}", self.label())));
        match *self {
            MarkLaw::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                bad("rate must be positive")
            }
            MarkLaw::Pareto { alpha, x_min } if !(alpha > 0.0 && x_min > 0.0) => {
                bad("alpha and x_min must be positive")
            }
            MarkLaw::Constant { value } if !(value > 0.0 && value.is_finite()) => {
                bad("value must be positive (the neutral element is not a mark)")
            }
            MarkLaw::StableShell { alpha, c, .. } if !(alpha > 0.0 && alpha < 1.0 && c > 0.0) => {
                bad("need 0 < alpha < 1 and c > 0")
            }
            _ => Ok(()),
        }
    }

    /// Draw a strictly positive real mark.
    pub fn sample_real<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MarkLaw::Exponential { rate } => -open01(rng).ln() / rate,
            MarkLaw::Pareto { alpha: 1.0, x_min } => x_min / open01(rng),
            MarkLaw::Pareto { alpha, x_min } => x_min * open01(rng).powf(-1.0 / alpha),
            MarkLaw::Constant { value } => value,
            MarkLaw::StableShell { alpha, k, .. } => {
                let (lo, hi) = stable_shell_bounds(k);
                let (a, b) = (lo.powf(-alpha), hi.powf(-alpha));
                (a - open01(rng) * (a - b)).powf(-1.0 / alpha)
            }
            MarkLaw::UniformSingleton | MarkLaw::UniformSubset { .. } => {
                panic!("{} is not a real-valued law", self.label())
            }
        }
    }

    /// `E[1 − e^{−μX}]` where registered.
    pub fn one_minus_laplace(&self, mu: f64) -> Option<f64> {
        match *self {
            MarkLaw::Exponential { rate } => Some(mu / (rate + mu)),
            MarkLaw::Constant { value } => Some(-(-mu * value).exp_m1()),
            _ => None,
        }
    }

    /// `P(X > x)` where registered.
    pub fn survival(&self, x: f64) -> Option<f64> {
        match *self {
            MarkLaw::Exponential { rate } => Some((-rate * x.max(0.0)).exp()),
            MarkLaw::Constant { value } => Some(if value > x { 1.0 } else { 0.0 }),
            MarkLaw::Pareto { alpha, x_min } => {
                Some(if x < x_min { 1.0 } else { (x_min / x).powf(alpha) })
            }
            MarkLaw::StableShell { alpha, k, .. } => {
                let (lo, hi) = stable_shell_bounds(k);
                Some(if x <= lo {
                    1.0
                } else if x >= hi {
                    0.0
                } else {
                    (x.powf(-alpha) - hi.powf(-alpha)) / (lo.powf(-alpha) - hi.powf(-alpha))
                })
            }
            MarkLaw::UniformSingleton | MarkLaw::UniformSubset { .. } => None,
        }
    }
}

fn stable_shell_bounds(k: u32) -> (f64, f64) {
    if k == 0 {
        (1.0, f64::INFINITY)
    } else {
        let hi = 0.5f64.powi(k as i32 - 1);
        (hi * 0.5, hi)
    }
}

/// Mass of `c·x^{−1−α} dx` on shell `k`, from the primitive `−(c/α)x^{−α}`.
pub fn stable_shell_mass(alpha: f64, c: f64, k: u32) -> f64 {
    let (lo, hi) = stable_shell_bounds(k);
    c / alpha * (lo.powf(-alpha) - hi.powf(-alpha))
}

/// Layers for `c·x^{−1−α} dx` restricted to `x > 2^{−k_max}`.
pub fn stable_layers(alpha: f64, c: f64, k_max: u32) -> Result<Vec<LevyMeasureLayer>> {
    (0..=k_max)
        .map(|k| {
            LevyMeasureLayer::new(stable_shell_mass(alpha, c, k), MarkLaw::StableShell { alpha, c, k })
        })
        .collect()
}

/// Bound on the small-jump part `∫_0^ε (1 − e^{−μx}) c x^{−1−α} dx ≤ μ c ε^{1−α} / (1−α)`
/// dropped by truncating the stable measure at `ε`.
pub fn stable_small_jump_bound(alpha: f64, c: f64, eps: f64, mu: f64) -> f64 {
    mu * c * eps.powf(1.0 - alpha) / (1.0 - alpha)
}

/// One finite-mass piece of a Lévy measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyMeasureLayer {
    pub mass: f64,
    pub law: MarkLaw,
}

impl LevyMeasureLayer {
    pub fn new(mass: f64, law: MarkLaw) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidLayer(format!("mass must be finite and positive, got {mass}")));
        }
        Ok(LevyMeasureLayer { mass, law })
    }
}

/// Ordered layers `K_n ∖ K_{n−1}` of a σ-finite Lévy measure.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevyMeasure {
    pub layers: Vec<LevyMeasureLayer>,
}

impl LevyMeasure {
    pub fn new(layers: Vec<LevyMeasureLayer>) -> Self {
        LevyMeasure { layers }
    }

    pub fn zero() -> Self {
        LevyMeasure::default()
    }

    pub fn total_mass(&self) -> f64 {
        self.layers.iter().map(|l| l.mass).sum()
    }

    pub fn validate_for<M: MarkSpace + ?Sized>(&self, m: &M) -> Result<()> {
        self.layers.iter().try_for_each(|l| m.validate_law(&l.law))
    }
}

/// Instances that can draw marks from registered laws.
pub trait MarkSpace: FellerMonoid {
    fn validate_law(&self, law: &MarkLaw) -> Result<()>;

    /// Draw a mark; never the neutral element.
    fn sample_mark<R: Rng + ?Sized>(&self, law: &MarkLaw, rng: &mut R) -> Self::Elem;

    /// `E[1 − χ(X)]` for `X` drawn from `law`, where a closed form is registered.
    fn closed_form_one_minus_chi(&self, chi: &Self::Character, law: &MarkLaw) -> Option<f64>;
}

/// Closed-form `∫(1 − χ) d(law)` for a character given by index multiset.
pub fn char_closed_form_integral<M: MarkSpace + ?Sized>(
    m: &M,
    c: &CharacterId,
    law: &MarkLaw,
) -> Result<f64> {
    let chi = m.resolve(c)?;
    m.closed_form_one_minus_chi(&chi, law)
        .ok_or_else(|| Error::NoClosedForm(format!("{} with {} marks", m.name(), law.label())))
}

/// Jump times in `(0, T]` with their marks, sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRealization<E> {
    pub points: Vec<(f64, E)>,
    pub horizon: f64,
    pub key: StreamKey,
}

impl<E> PointRealization<E> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be finite and positive, got {t}")));
    }
    Ok(())
}

fn draw_layer<M: MarkSpace + ?Sized, R: Rng + ?Sized>(
    m: &M,
    layer: &LevyMeasureLayer,
    horizon: f64,
    rng: &mut R,
) -> Vec<(f64, M::Elem)> {
    let mean = layer.mass * horizon;
    let count = if mean > 0.0 {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
    } else {
        0
    };
    let mut points: Vec<(f64, M::Elem)> = (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let t = horizon * (1.0 - u);
            (t, m.sample_mark(&layer.law, rng))
        })
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    points
}

/// Poisson process on `(0, T]` with intensity `dt ⊗ mass·law`, drawn from the
/// key's layer-0 substream.
pub fn sample_layer<M: MarkSpace + ?Sized>(
    m: &M,
    layer: &LevyMeasureLayer,
    horizon: f64,
    key: StreamKey,
) -> Result<PointRealization<M::Elem>> {
    check_horizon(horizon)?;
    m.validate_law(&layer.law)?;
    let mut rng = key.rng(0);
    Ok(PointRealization { points: draw_layer(m, layer, horizon, &mut rng), horizon, key })
}

/// Superposition of independent per-layer processes. Layer `j` draws from
/// substream `j`; ties in time keep layer order.
pub fn sample_ppp<M: MarkSpace + ?Sized>(
    m: &M,
    measure: &LevyMeasure,
    horizon: f64,
    key: StreamKey,
) -> Result<PointRealization<M::Elem>> {
    check_horizon(horizon)?;
    measure.validate_for(m)?;
    let mut points = Vec::new();
    for (j, layer) in measure.layers.iter().enumerate() {
        let mut rng = key.rng(j as u64);
        points.extend(draw_layer(m, layer, horizon, &mut rng));
    }
    // Stable: equal times stay in insertion order.
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(PointRealization { points, horizon, key })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegralMode {
    Analytic,
    MonteCarlo { samples: usize, delta: f64, key: StreamKey },
}

/// `∫(1 − χ) dΠ = Σ_layers mass·E[1 − χ(mark)]` with a confidence halfwidth
/// (zero in analytic mode).
pub fn integral_one_minus_chi<M: MarkSpace + ?Sized>(
    m: &M,
    measure: &LevyMeasure,
    chi: &M::Character,
    mode: IntegralMode,
) -> Result<(f64, f64)> {
    match mode {
        IntegralMode::Analytic => {
            let mut total = 0.0;
            for layer in &measure.layers {
                let v = m.closed_form_one_minus_chi(chi, &layer.law).ok_or_else(|| {
                    Error::NoClosedForm(format!("{} with {} marks", m.name(), layer.law.label()))
                })?;
                total += layer.mass * v;
            }
            Ok((total, 0.0))
        }
        IntegralMode::MonteCarlo { samples, delta, key } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("Monte Carlo integral needs samples > 0".into()));
            }
            // union bound over layers
            let layer_delta = delta / measure.layers.len().max(1) as f64;
            let radius = ((2.0 / layer_delta).ln() / (2.0 * samples as f64)).sqrt();
            let mut total = 0.0;
            let mut halfwidth = 0.0;
            for (j, layer) in measure.layers.iter().enumerate() {
                m.validate_law(&layer.law)?;
                let mut rng = key.for_replicate(j as u64).rng(substream::MC_INTEGRAL);
                let values: Vec<f64> = (0..samples)
                    .map(|_| m.one_minus_eval(chi, &m.sample_mark(&layer.law, &mut rng)))
                    .collect();
                total += layer.mass * pairwise_sum(&values) / samples as f64;
                halfwidth += layer.mass * radius;
            }
            Ok((total, halfwidth))
        }
    }
}
