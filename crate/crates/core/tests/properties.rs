use ged_core::channel::unit_rice_abs_moment;
use ged_core::detector::{threshold, worst_case_threshold, DetectorConfig};
use ged_core::noise::abs_moment_h0;
use ged_core::special::{gaussian_q, inverse_gaussian_q};
use ged_core::{db_to_linear, linear_to_db, McLeishNoise};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn second_moment_is_noise_power(v in 0.05f64..200.0, var in 0.01f64..100.0) {
        let m = abs_moment_h0(2.0, &McLeishNoise::new(var, v).unwrap()).unwrap();
        prop_assert!(((m - var) / var).abs() < 1e-12);
    }

    #[test]
    fn unit_rice_has_unit_power(alpha in 0.0f64..20.0) {
        prop_assert!((unit_rice_abs_moment(2.0, alpha).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn q_round_trip(q in 1e-12f64..0.999) {
        let back = gaussian_q(inverse_gaussian_q(q).unwrap());
        prop_assert!(((back - q) / q).abs() < 1e-12);
    }

    #[test]
    fn worst_case_threshold_is_variance_rescaling(
        p in 0.05f64..8.0,
        rho_db in 0.0f64..6.0,
        v in 0.1f64..50.0,
        pf in 1e-4f64..0.5,
    ) {
        let cfg = DetectorConfig::new(p, 1024, pf).unwrap();
        let nominal = threshold(&cfg, &McLeishNoise::new(1.0, v).unwrap()).unwrap();
        let inflated = threshold(&cfg, &McLeishNoise::new(db_to_linear(rho_db), v).unwrap()).unwrap();
        let scaled = worst_case_threshold(nominal, p, rho_db).unwrap();
        prop_assert!(((scaled - inflated) / inflated).abs() < 1e-11);
    }

    #[test]
    fn db_conversion_round_trips(x in -80.0f64..80.0) {
        prop_assert!((linear_to_db(db_to_linear(x)) - x).abs() < 1e-10);
    }
}

#[test]
fn invalid_noise_parameters_are_rejected() {
    assert!(McLeishNoise::new(-1.0, 1.0).is_err());
    assert!(McLeishNoise::new(1.0, 0.0).is_err());
    assert!(McLeishNoise::new(1.0, f64::NAN).is_err());
    assert!(abs_moment_h0(-2.0, &McLeishNoise::new(1.0, 1.0).unwrap()).is_err());
}
