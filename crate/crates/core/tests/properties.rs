use proptest::prelude::*;
use seihrd::cir::{euler_maruyama_path, path_rng, sample_path};
use seihrd::ensemble::quantile;
use seihrd::indicators::daily_from_cumulative;
use seihrd::{CirParameters, Model, StateVector, TimeGrid};

fn state() -> impl Strategy<Value = StateVector> {
    proptest::array::uniform9(0.0..1e9f64).prop_map(StateVector::from_array)
}

proptest! {
    #[test]
    fn vector_field_conserves_population(y in state(), t in 0.0..119.0f64, beta in 0.0..2.0f64) {
        let model = Model::china();
        let dy = model.vector_field(&y, t, beta);
        let scale = dy.to_array().iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!(dy.total().abs() <= 1e-12 * scale, "sum {} at scale {}", dy.total(), scale);
    }

    #[test]
    fn contact_scalers_stay_in_range(t in 0.0..119.0f64) {
        let model = Model::china();
        let p = model.params();
        let c = model.coefficients(t);
        prop_assert!(c.m > 0.0 && c.m <= 1.0);
        prop_assert!(c.theta >= p.theta_low && c.theta <= p.theta_high);
        prop_assert!(c.omega >= p.omega_low && c.omega <= p.omega_high() + 1e-15);
        prop_assert!(c.omega <= c.theta);
        prop_assert!(c.scalers.a_iu >= p.c_u - 1e-15 && c.scalers.a_iu <= 1.0 + 1e-15);
        prop_assert!(c.scalers.a_hr.is_finite() && c.scalers.a_hr >= 0.0);
        prop_assert_eq!(c.scalers.a_hr, c.scalers.a_hd);
        let r = c.rates;
        for rate in [r.gamma_e, r.gamma_i, r.gamma_iu, r.gamma_hr, r.gamma_hd] {
            prop_assert!(rate.is_finite() && rate > 0.0);
        }
    }

    #[test]
    fn coefficients_are_monotone(a in 0.0..119.0f64, b in 0.0..119.0f64) {
        let model = Model::china();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(model.control_measure(lo) >= model.control_measure(hi));
        prop_assert!(model.detection_fraction(lo) <= model.detection_fraction(hi));
        prop_assert!(model.fatality_rate(lo) >= model.fatality_rate(hi));
    }

    #[test]
    fn quantiles_are_ordered(xs in proptest::collection::vec(-1e6..1e6f64, 1..200)) {
        let q1 = quantile(&xs, 0.25).unwrap();
        let median = quantile(&xs, 0.5).unwrap();
        let q3 = quantile(&xs, 0.75).unwrap();
        let p95 = quantile(&xs, 0.95).unwrap();
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(min <= q1 && q1 <= median && median <= q3 && q3 <= p95 && p95 <= max);
    }

    #[test]
    fn rate_paths_are_non_negative(
        nu in 0.1..5.0f64,
        mu in 0.01..1.0f64,
        sigma in 0.0..2.0f64,
        beta0 in 0.0..1.0f64,
        seed in any::<u64>(),
    ) {
        let p = CirParameters { nu, mu, sigma, beta0 };
        let grid = TimeGrid::daily(10, 6).unwrap();
        let exact = sample_path(&grid, &p, &mut path_rng(seed, 0));
        let em = euler_maruyama_path(&grid, &p, &mut path_rng(seed, 1));
        prop_assert_eq!(exact.values()[0], beta0);
        prop_assert!(exact.values().iter().all(|v| v.is_finite() && *v >= 0.0));
        prop_assert!(em.values().iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn daily_differences_sum_to_the_cumulative(increments in proptest::collection::vec(0.0..1e4f64, 1..50)) {
        let cumulative: Vec<f64> = increments
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        let daily = daily_from_cumulative(&cumulative);
        prop_assert_eq!(daily.len(), cumulative.len());
        let total: f64 = daily.iter().sum();
        prop_assert!((total - cumulative.last().unwrap()).abs() <= 1e-9 * total.max(1.0));
    }
}

#[test]
fn coefficient_ranges_over_a_dense_sweep() {
    let model = Model::china();
    let p = model.params();
    for k in 0..=10_000 {
        let t = 119.0 * k as f64 / 10_000.0;
        let c = model.coefficients(t);
        assert!(c.theta >= p.theta_low && c.theta <= p.theta_high, "theta at {t}");
        assert!(c.omega <= c.theta, "omega above theta at {t}");
        assert!(c.scalers.a_iu >= p.c_u - 1e-15 && c.scalers.a_iu <= 1.0 + 1e-15, "A_Iu at {t}");
        assert!(model.contact_scalers(t).is_ok(), "degenerate at {t}");
    }
}
