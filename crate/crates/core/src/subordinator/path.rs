use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::monoid::{Extended, FellerMonoid};
use crate::ppp::{sample_ppp, LevyMeasure, MarkSpace, PointRealization};
use crate::rng::StreamKey;

/// Right-continuous step path `t ↦ drift·t ⊕ s_{k(t)}` with `s_k` the prefix
/// folds of the jump marks and `k(t) = max{k : t_k ≤ t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRealization<E> {
    times: Vec<f64>,
    states: Vec<Extended<E>>,
    horizon: f64,
    drift: f64,
}

impl<E: Clone + PartialEq> PathRealization<E> {
    /// Assemble a path from sorted jump times and their cumulative states.
    pub fn from_parts(times: Vec<f64>, states: Vec<Extended<E>>, horizon: f64, drift: f64) -> Self {
        debug_assert_eq!(times.len(), states.len());
        debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        PathRealization { times, states, horizon, drift }
    }

    /// Prefix-fold the marks of a point realization.
    pub fn from_points<M>(m: &M, points: &PointRealization<E>, drift: f64) -> Result<Self>
    where
        M: FellerMonoid<Elem = E> + ?Sized,
    {
        check_drift(m, drift)?;
        let mut acc = Extended::Finite(m.neutral());
        let mut times = Vec::with_capacity(points.len());
        let mut states = Vec::with_capacity(points.len());
        for (t, x) in &points.points {
            acc = match acc {
                Extended::Finite(a) => m.combine_finite(&a, x),
                Extended::Infinity => Extended::Infinity,
            };
            times.push(*t);
            states.push(acc.clone());
        }
        Ok(PathRealization { times, states, horizon: points.horizon, drift })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Extended<E>] {
        &self.states
    }

    pub fn jump_count(&self) -> usize {
        self.times.len()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::OutOfHorizon { t, horizon: self.horizon });
        }
        Ok(())
    }

    /// Number of jumps in `(0, t]`.
    pub fn jumps_up_to(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    /// Fold of the jump marks in `(0, t]`, without the drift.
    pub fn jump_state_at<M>(&self, m: &M, t: f64) -> Result<Extended<E>>
    where
        M: FellerMonoid<Elem = E> + ?Sized,
    {
        self.check_time(t)?;
        Ok(match self.jumps_up_to(t) {
            0 => Extended::Finite(m.neutral()),
            k => self.states[k - 1].clone(),
        })
    }

    /// Path value at `t`; `∂∞` once the fold has been absorbed.
    pub fn at<M>(&self, m: &M, t: f64) -> Result<Extended<E>>
    where
        M: FellerMonoid<Elem = E> + ?Sized,
    {
        let state = self.jump_state_at(m, t)?;
        Ok(with_drift(m, self.drift * t, state))
    }
}

pub(crate) fn check_drift<M: FellerMonoid + ?Sized>(m: &M, drift: f64) -> Result<()> {
    if drift < 0.0 || !drift.is_finite() {
        return Err(Error::InvalidArgument(format!("drift must be finite and nonnegative, got {drift}")));
    }
    if drift > 0.0 && m.drift_element(0.0).is_none() {
        return Err(Error::DriftUnsupported(m.name().into()));
    }
    Ok(())
}

/// `amount ⊕ state` for instances with drift; `state` when `amount` is zero.
pub(crate) fn with_drift<M: FellerMonoid + ?Sized>(
    m: &M,
    amount: f64,
    state: Extended<M::Elem>,
) -> Extended<M::Elem> {
    if amount == 0.0 {
        return state;
    }
    match m.drift_element(amount) {
        Some(d) => m.combine(&Extended::Finite(d), &state),
        None => state,
    }
}

/// Sample a path `drift·t ⊕ (⊕_{t_i ≤ t} x_i)` from a Poisson point process
/// with intensity `dt ⊗ Π`.
pub fn levy_ito_path<M: MarkSpace + ?Sized>(
    m: &M,
    measure: &LevyMeasure,
    drift: f64,
    horizon: f64,
    key: StreamKey,
) -> Result<PathRealization<M::Elem>> {
    check_drift(m, drift)?;
    let points = sample_ppp(m, measure, horizon, key)?;
    PathRealization::from_points(m, &points, drift)
}

/// Path value at `t`.
pub fn path_at<M: FellerMonoid + ?Sized>(
    m: &M,
    path: &PathRealization<M::Elem>,
    t: f64,
) -> Result<Extended<M::Elem>> {
    path.at(m, t)
}

pub const PATH_CSV_HEADER: &str = "replicate,jump_time,mark_repr";

/// Write jump marks as CSV rows `replicate,jump_time,mark_repr`.
pub fn write_points_csv<'a, M, W, I>(m: &M, out: &mut W, realizations: I) -> io::Result<()>
where
    M: FellerMonoid + ?Sized,
    M::Elem: 'a,
    W: Write,
    I: IntoIterator<Item = (u64, &'a PointRealization<M::Elem>)>,
{
    writeln!(out, "{PATH_CSV_HEADER}")?;
    for (replicate, points) in realizations {
        for (t, x) in &points.points {
            writeln!(out, "{replicate},{t},{}", m.format_elem(x))?;
        }
    }
    Ok(())
}
