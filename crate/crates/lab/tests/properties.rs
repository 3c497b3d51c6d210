use gbc_core::Complex64;
use gbc_lab::config::{parse_complex, parse_config, steps_for};
use gbc_lab::ensemble::ordered_map;
use gbc_lab::measurement::MeasurementModel;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complex_literals_round_trip(re in -1e3f64..1e3, im in -1e3f64..1e3) {
        let text = if im < 0.0 { format!("{re:e}-{:e}i", -im) } else { format!("{re:e}+{im:e}i") };
        prop_assert_eq!(parse_complex(&text), Some(Complex64::new(re, im)));
    }

    #[test]
    fn step_count_is_the_smallest_covering_the_duration(duration in 0.01f64..50.0, dt in 1e-3f64..0.5) {
        let steps = steps_for(duration, dt);
        prop_assert!(steps as f64 * dt >= duration * (1.0 - 1e-9));
        prop_assert!(((steps as f64) - 1.0) * dt < duration);
    }

    #[test]
    fn ordered_map_ignores_the_worker_count(count in 0usize..40, workers in 1usize..5) {
        let f = |i: usize| Ok((i as f64).sin() * 1e3);
        prop_assert_eq!(ordered_map(1, count, f).unwrap(), ordered_map(workers, count, f).unwrap());
    }

    #[test]
    fn branch_regions_partition_the_norm(p in 0.05f64..0.95, phase in 0.0f64..std::f64::consts::TAU, gap in 0.2f64..4.0) {
        let c2 = Complex64::from_polar((1.0 - p).sqrt(), phase);
        let text = format!(
            "[run]\nscenario = measurement\n[state]\nc1 = {:.17}\nc2 = {:.17}{:+.17}i\n[pointer]\ngap = {gap}\n",
            p.sqrt(), c2.re, c2.im
        );
        let cfg = parse_config(&text).unwrap();
        let model = MeasurementModel::new(&cfg, 0.0, 1.0).unwrap();
        let w = model.weights(model.initial_state());
        prop_assert!((w.total() - 1.0).abs() < 1e-12);
        prop_assert_eq!(model.branch_of(-gap / 2.0 - 1e-9), Some(1));
        prop_assert_eq!(model.branch_of(gap / 2.0), Some(2));
        prop_assert_eq!(model.branch_of(0.0), None);
    }
}
