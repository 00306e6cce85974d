//! Experiment configuration files.
//!
//! ```toml
//! [instance]
//! kind = "additive"            # additive | max | lattice-union (dim, side)
//!
//! [measure]
//! drift = 0.0
//! [[measure.layers]]
//! mass = 2.0
//! law = { kind = "exponential", rate = 1.0 }
//!
//! [run]
//! horizon = 1.0
//! replicates = 100000
//! seed = 42
//! delta = 0.01
//! probes = [[0]]               # base-index multisets
//! times = [1.0]
//!
//! [checks.moments]
//! q = 1.0
//! n_max = 2
//! ```
//!
//! Every `[checks.*]` section may override `horizon`, `replicates`, `probes`
//! and `times` from `[run]`.

use std::path::Path;

use anyhow::{bail, Context};
use feller_subordinators::monoid::SumConfig;
use feller_subordinators::ppp::{LevyMeasure, LevyMeasureLayer, MarkLaw};
use feller_subordinators::verify::{ExpectedVerdict, RealStream, Scenario};
use feller_subordinators::{CharacterId, InstanceSpec};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    #[serde(default)]
    pub measure: MeasureConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub layers: Vec<LayerConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub mass: f64,
    pub law: MarkLaw,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_probes")]
    pub probes: Vec<Vec<usize>>,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default = "default_psi_samples")]
    pub psi_samples: usize,
}

fn default_replicates() -> usize {
    100_000
}

fn default_delta() -> f64 {
    0.01
}

fn default_probes() -> Vec<Vec<usize>> {
    vec![vec![0]]
}

fn default_psi_samples() -> usize {
    1_000_000
}

/// Per-check overrides of `[run]`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub horizon: Option<f64>,
    pub replicates: Option<usize>,
    pub probes: Option<Vec<Vec<usize>>>,
    pub times: Option<Vec<f64>>,
}

/// A check section: its own fields plus optional `[run]` overrides.
macro_rules! section {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $($(#[$fmeta])* pub $field: $ty,)*
            pub horizon: Option<f64>,
            pub replicates: Option<usize>,
            pub probes: Option<Vec<Vec<usize>>>,
            pub times: Option<Vec<f64>>,
        }

        impl $name {
            pub fn overrides(&self) -> Overrides {
                Overrides {
                    horizon: self.horizon,
                    replicates: self.replicates,
                    probes: self.probes.clone(),
                    times: self.times.clone(),
                }
            }
        }
    };
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    pub lk: Option<Overrides>,
    pub fdd: Option<Overrides>,
    pub martingale: Option<Overrides>,
    pub moments: Option<MomentsSection>,
    pub transience: Option<TransienceSection>,
    pub convolution: Option<ConvolutionSection>,
    pub bochner: Option<BochnerSection>,
    pub invariance: Option<InvarianceSection>,
    #[serde(rename = "sum-criterion")]
    pub sum_criterion: Option<SumCriterionSection>,
    pub alpha: Option<AlphaSection>,
}

section! {
    MomentsSection {
        q: f64,
        n_max: usize,
    }
}

section! {
    TransienceSection {
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default = "default_min_fraction")]
        min_fraction: f64,
    }
}

fn default_threshold() -> f64 {
    1e-3
}

fn default_min_fraction() -> f64 {
    0.999
}

section! {
    ConvolutionSection {
        pairs: Vec<(f64, f64)>,
    }
}

section! {
    BochnerSection {
        #[serde(default)]
        clock_drift: f64,
        #[serde(default)]
        clock_layers: Vec<LayerConfig>,
    }
}

section! {
    InvarianceSection {
        step_law: MarkLaw,
        ladder: Vec<usize>,
        #[serde(default = "one")]
        b_exponent: f64,
        #[serde(default = "one")]
        b_scale: f64,
        #[serde(default = "default_bias")]
        bias_allowance: f64,
    }
}

fn one() -> f64 {
    1.0
}

fn default_bias() -> f64 {
    0.01
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumCriterionSection {
    pub streams: Vec<StreamCase>,
    pub max_terms: Option<usize>,
    pub probes: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamCase {
    pub stream: RealStream,
    pub expect: ExpectedVerdict,
}

/// A geometric sequence `x0·ratio^k`, `k < count`, approaching the neutral
/// element of a real instance.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSection {
    #[serde(default = "half")]
    pub x0: f64,
    #[serde(default = "half")]
    pub ratio: f64,
    /// Defaults to 20 terms on the additive reals. On the max reals the
    /// truncated `φ` vanishes below the smallest enumerated threshold, so the
    /// default there is 5 terms with `n_terms = 1024`.
    pub count: Option<usize>,
    pub n_terms: Option<usize>,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_extrapolation_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_alpha_allowance")]
    pub allowance: f64,
    pub probes: Option<Vec<Vec<usize>>>,
}

impl Default for AlphaSection {
    fn default() -> Self {
        AlphaSection {
            x0: half(),
            ratio: half(),
            count: None,
            n_terms: None,
            window: default_window(),
            tolerance: default_extrapolation_tolerance(),
            allowance: default_alpha_allowance(),
            probes: None,
        }
    }
}

fn half() -> f64 {
    0.5
}

fn default_window() -> usize {
    4
}

fn default_extrapolation_tolerance() -> f64 {
    1e-6
}

fn default_alpha_allowance() -> f64 {
    1e-3
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config file {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> anyhow::Result<()> {
        let r = &self.run;
        if !(r.horizon > 0.0 && r.horizon.is_finite()) {
            bail!("run.horizon: must be finite and positive, got {}", r.horizon);
        }
        if r.replicates == 0 {
            bail!("run.replicates: must be at least 1");
        }
        if !(r.delta > 0.0 && r.delta < 1.0) {
            bail!("run.delta: must lie in (0, 1), got {}", r.delta);
        }
        if let Some(t) = r.times.iter().find(|t| !(0.0..=r.horizon).contains(*t)) {
            bail!("run.times: {t} lies outside [0, run.horizon = {}]", r.horizon);
        }
        if r.probes.iter().any(Vec::is_empty) {
            bail!("run.probes: a probe character needs at least one base index");
        }
        if !self.measure.drift.is_finite() || self.measure.drift < 0.0 {
            bail!("measure.drift: must be finite and nonnegative");
        }
        self.measure()?;
        Ok(())
    }

    pub fn measure(&self) -> anyhow::Result<LevyMeasure> {
        layers(&self.measure.layers, "measure.layers")
    }

    /// The `[run]` scenario with a check section's overrides applied.
    pub fn scenario(&self, overrides: Option<&Overrides>, section: &str) -> anyhow::Result<Scenario> {
        let r = &self.run;
        let o = overrides.cloned().unwrap_or_default();
        let horizon = o.horizon.unwrap_or(r.horizon);
        let times = o.times.unwrap_or_else(|| if r.times.is_empty() { vec![horizon] } else { r.times.clone() });
        let probes = o.probes.unwrap_or_else(|| r.probes.clone());
        let sc = Scenario {
            measure: self.measure()?,
            drift: self.measure.drift,
            horizon,
            replicates: o.replicates.unwrap_or(r.replicates),
            seed: r.seed,
            delta: r.delta,
            probes: character_ids(&probes, &format!("checks.{section}.probes"))?,
            times,
            psi_samples: r.psi_samples,
        };
        sc.validate().with_context(|| format!("checks.{section}"))?;
        Ok(sc)
    }

    pub fn sum_config(&self, s: &SumCriterionSection) -> SumConfig {
        let mut cfg = SumConfig::default();
        if let Some(n) = s.max_terms {
            cfg.max_terms = n;
        }
        cfg
    }
}

pub fn layers(layers: &[LayerConfig], field: &str) -> anyhow::Result<LevyMeasure> {
    layers
        .iter()
        .enumerate()
        .map(|(i, l)| {
            LevyMeasureLayer::new(l.mass, l.law.clone()).with_context(|| format!("{field}[{i}].mass"))
        })
        .collect::<anyhow::Result<_>>()
        .map(LevyMeasure::new)
}

pub fn character_ids(probes: &[Vec<usize>], field: &str) -> anyhow::Result<Vec<CharacterId>> {
    if probes.iter().any(Vec::is_empty) {
        bail!("{field}: a probe character needs at least one base index");
    }
    Ok(probes.iter().map(|p| CharacterId::new(p.clone())).collect())
}
