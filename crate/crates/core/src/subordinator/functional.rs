use crate::error::{Error, Result};
use crate::monoid::{Extended, FellerMonoid};

use super::path::PathRealization;

/// `I_t = ∫_0^t χ(X_s) ds`, integrated exactly over the path's steps.
pub fn character_functional<M: FellerMonoid + ?Sized>(
    m: &M,
    path: &PathRealization<M::Elem>,
    chi: &M::Character,
    t: f64,
) -> Result<f64> {
    if !(0.0..=path.horizon()).contains(&t) {
        return Err(Error::OutOfHorizon { t, horizon: path.horizon() });
    }
    let drift = path.drift();
    let neutral = Extended::Finite(m.neutral());
    let mut total = 0.0;
    let mut start = 0.0;
    let mut state = &neutral;
    for (tk, sk) in path.jump_times().iter().zip(path.states()) {
        if *tk > t {
            break;
        }
        total += m.integrate_drifted(chi, state, drift, start, *tk);
        // Characters vanish from ∂∞ on; so does the rest of the integral.
        if sk.is_infinity() {
            return Ok(total);
        }
        start = *tk;
        state = sk;
    }
    Ok(total + m.integrate_drifted(chi, state, drift, start, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{AdditiveReals, MaxReals};
    use crate::monoid::CharacterId;
    use crate::ppp::PointRealization;
    use crate::rng::StreamKey;

    #[test]
    fn empty_path_integrates_to_t() {
        let m = MaxReals::new();
        let pts = PointRealization { points: vec![], horizon: 4.0, key: StreamKey::new(0) };
        let p = PathRealization::from_points(&m, &pts, 0.0).unwrap();
        let chi = m.resolve(&CharacterId::base(0)).unwrap();
        assert_eq!(character_functional(&m, &p, &chi, 2.5).unwrap(), 2.5);
    }

    #[test]
    fn indicator_dies_at_jump() {
        let m = MaxReals::new();
        let pts = PointRealization { points: vec![(1.0, 3.0)], horizon: 5.0, key: StreamKey::new(0) };
        let p = PathRealization::from_points(&m, &pts, 0.0).unwrap();
        let chi = m.resolve(&CharacterId::base(2)).unwrap(); // 1_{[0,2]}
        assert_eq!(character_functional(&m, &p, &chi, 5.0).unwrap(), 1.0);
    }

    #[test]
    fn drift_path_closed_form() {
        let m = AdditiveReals::new();
        let pts = PointRealization { points: vec![], horizon: 3.0, key: StreamKey::new(0) };
        let p = PathRealization::from_points(&m, &pts, 1.0).unwrap();
        let chi = m.resolve(&CharacterId::base(0)).unwrap();
        for t in [0.0, 0.3, 1.0, 3.0] {
            let v = character_functional(&m, &p, &chi, t).unwrap();
            assert!((v - (1.0 - (-t).exp())).abs() < 1e-15, "t = {t}");
        }
    }

    #[test]
    fn drift_with_jumps_matches_quadrature() {
        let m = AdditiveReals::new();
        let pts = PointRealization {
            points: vec![(0.4, 0.7), (1.1, 0.2)],
            horizon: 2.0,
            key: StreamKey::new(0),
        };
        let p = PathRealization::from_points(&m, &pts, 0.5).unwrap();
        let chi = m.resolve(&CharacterId::base(1)).unwrap(); // λ = 1/2
        let exact = character_functional(&m, &p, &chi, 1.8).unwrap();
        // midpoint rule on a grid containing both jump times
        let n = 180_000;
        let h = 1.8 / n as f64;
        let quad: f64 = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) * h;
                let Extended::Finite(x) = p.at(&m, s).unwrap() else { unreachable!() };
                (-0.5 * x).exp() * h
            })
            .sum();
        assert!((exact - quad).abs() < 1e-8, "{exact} vs {quad}");
    }
}
