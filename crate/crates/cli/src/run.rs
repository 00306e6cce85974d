use std::io::Write;

use anyhow::{bail, Context};
use feller_subordinators::instances::AnyInstance;
use feller_subordinators::monoid::ExtrapolationConfig;
use feller_subordinators::ppp::{sample_ppp, MarkSpace};
use feller_subordinators::subordinator::write_points_csv;
use feller_subordinators::verify::{self, *};
use feller_subordinators::{make_instance, FellerMonoid, StreamKey};
use rayon::prelude::*;

use crate::config::{character_ids, layers, AlphaSection, ExperimentConfig};
use crate::Check;

/// Runs `$body` with `$m` bound to the configured instance.
macro_rules! with_instance {
    ($inst:expr, $m:ident => $body:expr) => {
        match &$inst {
            AnyInstance::Additive($m) => $body,
            AnyInstance::Max($m) => $body,
            AnyInstance::LatticeUnion($m) => $body,
        }
    };
}

fn instance(cfg: &ExperimentConfig) -> anyhow::Result<AnyInstance> {
    make_instance(&cfg.instance).context("instance")
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut dyn Write) -> anyhow::Result<usize> {
    let inst = instance(cfg)?;
    with_instance!(inst, m => simulate_on(m, cfg, out))
}

fn simulate_on<M: MarkSpace>(m: &M, cfg: &ExperimentConfig, out: &mut dyn Write) -> anyhow::Result<usize> {
    let measure = cfg.measure()?;
    measure.validate_for(m).context("measure.layers")?;
    let master = StreamKey::new(cfg.run.seed);
    let realizations = (0..cfg.run.replicates as u64)
        .into_par_iter()
        .map(|r| sample_ppp(m, &measure, cfg.run.horizon, master.for_replicate(r)).map(|p| (r, p)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = out;
    write_points_csv(m, &mut w, realizations.iter().map(|(r, p)| (*r, p)))?;
    Ok(realizations.len())
}

pub fn verify(cfg: &ExperimentConfig, check: Check) -> anyhow::Result<Vec<VerificationReport>> {
    let inst = instance(cfg)?;
    if check == Check::All {
        let mut checks = vec![Check::Lk, Check::Fdd, Check::Martingale];
        let c = &cfg.checks;
        let optional = [
            (c.moments.is_some(), Check::Moments),
            (c.transience.is_some(), Check::Transience),
            (c.convolution.is_some(), Check::Convolution),
            (c.bochner.is_some(), Check::Bochner),
            (c.invariance.is_some(), Check::Invariance),
            (c.sum_criterion.is_some(), Check::SumCriterion),
        ];
        checks.extend(optional.iter().filter(|(on, _)| *on).map(|(_, k)| *k));
        let mut all = Vec::new();
        for k in checks {
            all.extend(verify(cfg, k)?);
        }
        return Ok(all);
    }
    if check == Check::SumCriterion {
        return match &inst {
            AnyInstance::Additive(m) => sum_criterion(m, cfg),
            AnyInstance::Max(m) => sum_criterion(m, cfg),
            AnyInstance::LatticeUnion(_) => bail!("checks.sum-criterion: needs a real-valued instance"),
        };
    }
    with_instance!(inst, m => run_check(m, cfg, check))
}

fn run_check<M: MarkSpace>(m: &M, cfg: &ExperimentConfig, check: Check) -> anyhow::Result<Vec<VerificationReport>> {
    let c = &cfg.checks;
    let reports = match check {
        Check::Lk => check_lk(m, &cfg.scenario(c.lk.as_ref(), "lk")?),
        Check::Fdd => check_fdd(m, &cfg.scenario(c.fdd.as_ref(), "fdd")?),
        Check::Martingale => check_martingale(m, &cfg.scenario(c.martingale.as_ref(), "martingale")?),
        Check::Moments => {
            let s = c.moments.as_ref();
            let params = s.map_or(MomentParams { q: 1.0, n_max: 2 }, |s| MomentParams { q: s.q, n_max: s.n_max });
            check_moments(m, &cfg.scenario(s.map(|s| s.overrides()).as_ref(), "moments")?, &params)
        }
        Check::Transience => {
            let s = c.transience.as_ref();
            let params = s.map_or(TransienceParams::default(), |s| TransienceParams {
                threshold: s.threshold,
                min_fraction: s.min_fraction,
            });
            check_transience(m, &cfg.scenario(s.map(|s| s.overrides()).as_ref(), "transience")?, &params)
        }
        Check::Convolution => {
            let s = c.convolution.as_ref();
            let sc = cfg.scenario(s.map(|s| s.overrides()).as_ref(), "convolution")?;
            let pairs = s.map_or_else(|| vec![(sc.horizon / 2.0, sc.horizon / 2.0)], |s| s.pairs.clone());
            check_convolution(m, &sc, &ConvolutionParams { pairs })
        }
        Check::Bochner => {
            let s = c.bochner.as_ref().context("checks.bochner: section required (clock_layers, clock_drift)")?;
            let clock = layers(&s.clock_layers, "checks.bochner.clock_layers")?;
            check_bochner(
                m,
                &cfg.scenario(Some(&s.overrides()), "bochner")?,
                &BochnerParams { clock, clock_drift: s.clock_drift },
            )
        }
        Check::Invariance => {
            let s = c.invariance.as_ref().context("checks.invariance: section required (step_law, ladder)")?;
            let params = InvarianceParams {
                step_law: s.step_law.clone(),
                ladder: s.ladder.clone(),
                b_exponent: s.b_exponent,
                b_scale: s.b_scale,
                bias_allowance: s.bias_allowance,
            };
            check_invariance(m, &cfg.scenario(Some(&s.overrides()), "invariance")?, &params)
        }
        Check::SumCriterion | Check::All => unreachable!("dispatched by verify"),
    };
    reports.with_context(|| format!("check {check:?}"))
}

fn sum_criterion<M: FellerMonoid<Elem = f64>>(m: &M, cfg: &ExperimentConfig) -> anyhow::Result<Vec<VerificationReport>> {
    let default;
    let s = match &cfg.checks.sum_criterion {
        Some(s) => s,
        None => {
            default = toml::from_str::<crate::config::SumCriterionSection>(
                r#"streams = [
                    { stream = { kind = "geometric", first = 0.5, ratio = 0.5 }, expect = "converges" },
                    { stream = { kind = "harmonic", scale = 1.0 }, expect = "diverges" },
                ]"#,
            )
            .expect("default sum-criterion section");
            &default
        }
    };
    let probes = character_ids(s.probes.as_ref().unwrap_or(&cfg.run.probes), "checks.sum-criterion.probes")?;
    let sum_cfg = cfg.sum_config(s);
    let mut reports = Vec::new();
    for case in &s.streams {
        reports.extend(check_sum_criterion(m, &probes, case.stream, case.expect, &sum_cfg).context("checks.sum-criterion")?);
    }
    Ok(reports)
}

pub fn alpha(cfg: &ExperimentConfig) -> anyhow::Result<Vec<VerificationReport>> {
    let inst = instance(cfg)?;
    let s = cfg.checks.alpha.clone().unwrap_or_default();
    let probes = character_ids(s.probes.as_ref().unwrap_or(&cfg.run.probes), "checks.alpha.probes")?;
    let extrapolation = ExtrapolationConfig { window: s.window, tolerance: s.tolerance };
    let sequence = |s: &AlphaSection, count: usize| -> Vec<f64> {
        (0..s.count.unwrap_or(count)).map(|k| s.x0 * s.ratio.powi(k as i32)).collect()
    };
    let reports = match &inst {
        AnyInstance::Additive(m) => {
            verify::check_alpha(m, &probes, &sequence(&s, 20), s.n_terms.unwrap_or(64), &extrapolation, s.allowance)
        }
        AnyInstance::Max(m) => {
            verify::check_alpha(m, &probes, &sequence(&s, 5), s.n_terms.unwrap_or(1024), &extrapolation, s.allowance)
        }
        AnyInstance::LatticeUnion(m) => {
            verify::check_alpha(m, &probes, &[], s.n_terms.unwrap_or(64), &extrapolation, s.allowance)
        }
    };
    reports.context("checks.alpha")
}
