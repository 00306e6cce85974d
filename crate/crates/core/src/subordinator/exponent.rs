use crate::error::{Error, Result};
use crate::monoid::CharacterId;
use crate::ppp::{integral_one_minus_chi, IntegralMode, LevyMeasure, MarkSpace};

use super::path::check_drift;

/// `Ψ(χ) = ⟨d, χ⟩ + ∫(1 − χ) dΠ`, so that `E[χ(X_t)] = exp(−tΨ(χ))`.
///
/// The drift pairing is `d·λ(χ)` on the additive reals and absent elsewhere.
#[derive(Debug, Clone, Copy)]
pub struct LaplaceExponent<'a, M: ?Sized> {
    pub instance: &'a M,
    pub measure: &'a LevyMeasure,
    pub drift: f64,
    pub mode: IntegralMode,
}

impl<'a, M: MarkSpace + ?Sized> LaplaceExponent<'a, M> {
    pub fn new(instance: &'a M, measure: &'a LevyMeasure, drift: f64) -> Result<Self> {
        check_drift(instance, drift)?;
        Ok(LaplaceExponent { instance, measure, drift, mode: IntegralMode::Analytic })
    }

    pub fn with_mode(self, mode: IntegralMode) -> Self {
        LaplaceExponent { mode, ..self }
    }

    /// `Ψ(χ)` and its confidence halfwidth (zero when analytic).
    pub fn eval_resolved(&self, chi: &M::Character) -> Result<(f64, f64)> {
        let drift_term = if self.drift > 0.0 {
            self.instance
                .drift_pairing(self.drift, chi)
                .ok_or_else(|| Error::DriftUnsupported(self.instance.name().into()))?
        } else {
            0.0
        };
        let (integral, halfwidth) = integral_one_minus_chi(self.instance, self.measure, chi, self.mode)?;
        Ok((drift_term + integral, halfwidth))
    }

    pub fn eval(&self, c: &CharacterId) -> Result<(f64, f64)> {
        self.eval_resolved(&self.instance.resolve(c)?)
    }
}

/// Laplace exponent evaluation for a character.
pub fn laplace_exponent_eval<M: MarkSpace + ?Sized>(
    exponent: &LaplaceExponent<'_, M>,
    c: &CharacterId,
) -> Result<(f64, f64)> {
    exponent.eval(c)
}

/// `E[χ(X_{t_1})⋯χ(X_{t_n})] = ∏_k exp(−(t_k − t_{k−1}) Ψ(χ^{n−k+1}))`, `t_0 = 0`.
pub fn fdd_closed_form<M: MarkSpace + ?Sized>(
    exponent: &LaplaceExponent<'_, M>,
    c: &CharacterId,
    times: &[f64],
) -> Result<f64> {
    check_times(times)?;
    let n = times.len();
    let mut log = 0.0;
    let mut prev = 0.0;
    for (k, &t) in times.iter().enumerate() {
        let (psi, _) = exponent.eval(&c.power(n - k))?;
        log -= (t - prev) * psi;
        prev = t;
    }
    Ok(log.exp())
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("at least one time is required".into()));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("times must be nonnegative and strictly increasing".into()));
    }
    Ok(())
}

/// `E[(I_{e_q})ⁿ] = n! / ∏_{k=1}^n (q + Ψ(χᵏ))` for `I_t = ∫_0^t χ(X_s) ds`
/// and an independent exponential time `e_q`.
pub fn moments_closed_form<M: MarkSpace + ?Sized>(
    exponent: &LaplaceExponent<'_, M>,
    c: &CharacterId,
    q: f64,
    n: usize,
) -> Result<f64> {
    if n == 0 || q < 0.0 {
        return Err(Error::InvalidArgument("need n >= 1 and q >= 0".into()));
    }
    let mut value = 1.0;
    for k in 1..=n {
        let rate = q + exponent.eval(&c.power(k))?.0;
        if rate <= 0.0 {
            return Err(Error::DegenerateRate(k));
        }
        value *= k as f64 / rate;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{AdditiveReals, MaxReals};
    use crate::ppp::{LevyMeasureLayer, MarkLaw};

    fn exp_measure(mass: f64) -> LevyMeasure {
        LevyMeasure::new(vec![LevyMeasureLayer::new(mass, MarkLaw::Exponential { rate: 1.0 }).unwrap()])
    }

    const E1: fn() -> CharacterId = || CharacterId::base(0);

    #[test]
    fn compound_poisson_exponent() {
        let m = AdditiveReals::new();
        let pi = exp_measure(2.0);
        let psi = LaplaceExponent::new(&m, &pi, 0.0).unwrap();
        // 2·(1 − 1/(1+1))
        assert_eq!(psi.eval(&E1()).unwrap(), (1.0, 0.0));
        // e_2 = e_1·e_1: 2·2/3
        assert!((psi.eval(&E1().power(2)).unwrap().0 - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pure_drift_exponent() {
        let m = AdditiveReals::new();
        let zero = LevyMeasure::zero();
        let psi = LaplaceExponent::new(&m, &zero, 1.0).unwrap();
        // index 2 is λ = 2
        assert_eq!(psi.eval(&CharacterId::base(2)).unwrap().0, 2.0);
    }

    #[test]
    fn extremal_exponent() {
        let m = MaxReals::new();
        let pi = exp_measure(1.0);
        let psi = LaplaceExponent::new(&m, &pi, 0.0).unwrap();
        assert!((psi.eval(&E1()).unwrap().0 - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn fdd_cases() {
        let m = AdditiveReals::new();
        let zero = LevyMeasure::zero();
        let drift = LaplaceExponent::new(&m, &zero, 1.0).unwrap();
        let v = fdd_closed_form(&drift, &E1(), &[1.0, 2.0]).unwrap();
        assert!((v - (-3.0f64).exp()).abs() < 1e-15);
        let single = fdd_closed_form(&drift, &E1(), &[0.7]).unwrap();
        assert!((single - (-0.7f64).exp()).abs() < 1e-15);

        // idempotent: χ^k = χ, so the product telescopes to exp(−t_n Ψ(χ))
        let mx = MaxReals::new();
        let pi = exp_measure(1.0);
        let psi = LaplaceExponent::new(&mx, &pi, 0.0).unwrap();
        let v = fdd_closed_form(&psi, &E1(), &[0.5, 1.0, 3.0]).unwrap();
        assert!((v - (-3.0 * (-1.0f64).exp()).exp()).abs() < 1e-15);

        assert!(fdd_closed_form(&psi, &E1(), &[1.0, 1.0]).is_err());
    }

    #[test]
    fn moment_cases() {
        let m = AdditiveReals::new();
        let zero = LevyMeasure::zero();
        let drift = LaplaceExponent::new(&m, &zero, 1.0).unwrap();
        let v = moments_closed_form(&drift, &E1(), 1.0, 2).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);

        let mx = MaxReals::new();
        let pi = exp_measure(1.0);
        let psi = LaplaceExponent::new(&mx, &pi, 0.0).unwrap();
        let r = 1.0 + (-1.0f64).exp();
        assert!((moments_closed_form(&psi, &E1(), 1.0, 1).unwrap() - 1.0 / r).abs() < 1e-15);
        assert!((moments_closed_form(&psi, &E1(), 1.0, 2).unwrap() - 2.0 / (r * r)).abs() < 1e-15);

        let still = LaplaceExponent::new(&m, &zero, 0.0).unwrap();
        assert_eq!(moments_closed_form(&still, &E1(), 0.0, 1), Err(Error::DegenerateRate(1)));
    }

    #[test]
    fn no_closed_form_propagates() {
        let m = AdditiveReals::new();
        let pi = LevyMeasure::new(vec![
            LevyMeasureLayer::new(1.0, MarkLaw::Pareto { alpha: 1.5, x_min: 1.0 }).unwrap(),
        ]);
        let psi = LaplaceExponent::new(&m, &pi, 0.0).unwrap();
        assert!(matches!(psi.eval(&E1()), Err(Error::NoClosedForm(_))));
    }
}
