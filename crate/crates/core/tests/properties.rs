use std::sync::Arc;

use proptest::prelude::*;

use nearstat::adversaries::HardQuadratic;
use nearstat::oracle_game::{play, validate_span, SPAN_TOL};
use nearstat::rng::RngStream;
use nearstat::solvers::{default_span_schedule, steepest_descent_exact, subgradient_method, DEFAULT_PROBE_STEP};
use nearstat::stationarity::{min_norm_point, WOLFE_TOL};
use nearstat::zoo::{norm_distance_eval, sqrt_oracle_transform, ChannelInstance, InstanceSpec, Spiral, Warga};
use nearstat::{Function, Vector};

fn vec_in(d: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-r..r, d)
}

fn nonzero(d: usize) -> impl Strategy<Value = Vec<f64>> {
    vec_in(d, 1.0).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
}

fn composed(t: usize, d: usize, w: &[f64]) -> (ChannelInstance, HardQuadratic) {
    let hq = HardQuadratic::new(t, d).unwrap();
    let c = ChannelInstance::composed(Vector::from_slice(w), Arc::new(hq.metric()), hq.x_star().clone()).unwrap();
    (c, hq)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn channel_is_seven_lipschitz(w in nonzero(3), x in vec_in(3, 2.0), y in vec_in(3, 2.0)) {
        let c = ChannelInstance::pure(Vector::from_slice(&w)).unwrap();
        let (x, y) = (Vector::from_slice(&x), Vector::from_slice(&y));
        let gap = (c.eval(&x).unwrap().value - c.eval(&y).unwrap().value).abs();
        prop_assert!(gap <= 7.0 * x.distance(&y) + 1e-12);
    }

    #[test]
    fn channel_subgradients_bounded_below(w in nonzero(4), x in vec_in(4, 3.0)) {
        let c = ChannelInstance::pure(Vector::from_slice(&w)).unwrap();
        let n = c.eval(&Vector::from_slice(&x)).unwrap().subgrad.norm();
        prop_assert!(n >= std::f64::consts::FRAC_1_SQRT_2 - 1e-9 && n <= 7.0 + 1e-9);
    }

    /// Away from the channel the instance is the metric distance to x*.
    #[test]
    fn composed_channel_matches_distance_off_channel(w in nonzero(8), x in vec_in(8, 1.0)) {
        let w: Vec<f64> = w.iter().map(|v| v * 0.01).collect();
        let (c, hq) = composed(4, 8, &w);
        let mut x = Vector::from_slice(&x);
        let mut y = c.affine_map(&x).unwrap();
        if c.w_bar().dot(&y) > 0.0 {
            // Reflect through x* so y points away from w.
            x = &hq.x_star().scaled(2.0) - &x;
            y = c.affine_map(&x).unwrap();
        }
        let z = &y + c.w();
        let hinge = 4.0 * c.w_bar().dot(&z) - 2.0 * z.norm();
        prop_assume!(hinge < -1e-9);
        let h = c.eval(&x).unwrap();
        let n = norm_distance_eval(&hq.metric(), hq.x_star(), &x).unwrap();
        prop_assert!((h.value - n.value).abs() <= 1e-12);
        prop_assert!((&h.subgrad - &n.subgrad).norm() <= 1e-12);
    }

    #[test]
    fn sqrt_of_quadratic_is_distance(t in 2usize..8, x in vec_in(16, 1.0)) {
        let hq = HardQuadratic::new(t, 16).unwrap();
        let x = Vector::from_slice(&x);
        let a = sqrt_oracle_transform(&hq.eval(&x).unwrap()).unwrap();
        let b = norm_distance_eval(&hq.metric(), hq.x_star(), &x).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-12 * b.value.max(1.0));
        prop_assert!((&a.subgrad - &b.subgrad).norm() <= 1e-9);
    }

    #[test]
    fn instance_json_roundtrip(w in nonzero(6), x in vec_in(6, 1.0), delta in 0.1f64..3.0) {
        let x = Vector::from_slice(&x);
        let (c, _) = composed(3, 6, &w);
        let spiral = Spiral::new(delta, true).unwrap();
        let pairs: Vec<(InstanceSpec, Box<dyn Function>)> = vec![
            (InstanceSpec::channel(&c), Box::new(c)),
            (InstanceSpec::chain_quadratic(3, 6), Box::new(HardQuadratic::new(3, 6).unwrap())),
            (InstanceSpec::warga(), Box::new(Warga)),
        ];
        for (spec, f) in pairs {
            let back = InstanceSpec::from_json(&spec.to_json().unwrap()).unwrap().build().unwrap();
            let p = Vector::from_slice(&x.as_slice()[..f.dim()]);
            prop_assert!(f.eval(&p).unwrap().bitwise_eq(&back.eval(&p).unwrap()));
        }
        let p = Vector::from_slice(&x.as_slice()[..2]);
        let s = InstanceSpec::from_json(&InstanceSpec::spiral(delta, true).to_json().unwrap()).unwrap();
        prop_assert!(spiral.eval(&p).unwrap().bitwise_eq(&s.build().unwrap().eval(&p).unwrap()));
    }

    #[test]
    fn span_methods_stay_in_span(t in 2usize..12, seed in any::<u64>(), steepest in any::<bool>()) {
        let desc = if steepest {
            steepest_descent_exact(DEFAULT_PROBE_STEP)
        } else {
            subgradient_method(default_span_schedule())
        };
        let mut hq = HardQuadratic::new(t, 2 * t).unwrap();
        let tr = play(&desc, &mut hq, t, 2 * t, &mut RngStream::from_seed(seed)).unwrap();
        prop_assert!(validate_span(&tr, SPAN_TOL).valid);
        for (n, x) in tr.queries().enumerate() {
            prop_assert!(x.as_slice()[n..].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn min_norm_shrinks_as_points_are_added(pts in proptest::collection::vec(vec_in(3, 1.0), 1..6), extra in vec_in(3, 1.0)) {
        let mut pts: Vec<Vector> = pts.iter().map(|p| Vector::from_slice(p)).collect();
        let before = min_norm_point(&pts, WOLFE_TOL).unwrap();
        pts.push(Vector::from_slice(&extra));
        let after = min_norm_point(&pts, WOLFE_TOL).unwrap();
        prop_assert!(after.norm <= before.norm + 1e-9);
        let s: f64 = after.coefficients.iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-9 && after.coefficients.iter().all(|c| *c >= -1e-12));
    }
}
