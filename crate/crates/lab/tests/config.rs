use gbc_core::Complex64;
use gbc_lab::config::{parse_config, parse_config_as, ScenarioKind, StateConfig};

fn lines_of(text: &str) -> Vec<usize> {
    parse_config(text)
        .unwrap_err()
        .iter()
        .map(|e| e.line)
        .collect()
}

#[test]
fn minimal_measurement_config_gets_the_documented_defaults() {
    let cfg = parse_config("[run]\nscenario = measurement\n[state]\nc1 = 0.6\nc2 = 0.8\n").unwrap();
    assert_eq!(cfg.kind, ScenarioKind::Measurement);
    assert_eq!(
        (cfg.grid.dims, cfg.grid.particles, cfg.grid.points),
        (1, 2, 32)
    );
    assert_eq!(cfg.gravity.epsilon, 0.005);
    assert!(!cfg.gravity.hermitian);
    assert_eq!(
        (cfg.run.dt, cfg.run.ensemble, cfg.run.seed, cfg.run.workers),
        (0.02, 1000, 0, 1)
    );
    let pointer = cfg.pointer.unwrap();
    assert_eq!((pointer.mass_ratio, pointer.amplification), (10.0, 64.0));
    assert_eq!(pointer.sweep, vec![1.0, 4.0, 16.0, 64.0]);
    match cfg.state {
        StateConfig::TwoBranch(s) => assert!((s.c1.norm_sqr() - 0.36).abs() < 1e-15),
        other => panic!("unexpected state {other:?}"),
    }
}

#[test]
fn complex_weights_are_accepted() {
    let cfg =
        parse_config("[run]\nscenario = measurement\n[state]\nc1 = 0.6\nc2 = 0.8i\n").unwrap();
    match cfg.state {
        StateConfig::TwoBranch(s) => assert_eq!(s.c2, Complex64::new(0.0, 0.8)),
        other => panic!("unexpected state {other:?}"),
    }
}

#[test]
fn negative_epsilon_is_reported_with_its_line() {
    let text =
        "[run]\nscenario = measurement\n[state]\nc1 = 0.6\nc2 = 0.8\n[gravity]\nepsilon = -0.1\n";
    let errors = parse_config(text).unwrap_err();
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0].line, 7);
    assert!(errors[0].message.contains("epsilon"));
}

#[test]
fn unicode_minus_is_read_as_a_sign() {
    let text = "[run]\nscenario = measurement\n[state]\nc1 = 0.6\nc2 = 0.8\n[gravity]\nepsilon = \u{2212}0.1\n";
    assert_eq!(lines_of(text), vec![7]);
}

#[test]
fn missing_weight_has_no_line() {
    let errors = parse_config("[run]\nscenario = measurement\n[state]\nc2 = 1\n").unwrap_err();
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0].line, 0);
    assert!(errors[0].message.contains("c1"));
}

#[test]
fn unnormalized_weights_are_rejected() {
    assert_eq!(
        lines_of("[run]\nscenario = measurement\n[state]\nc1 = 0.6\nc2 = 0.7\n"),
        vec![5]
    );
}

#[test]
fn duplicate_and_unknown_keys_are_rejected() {
    let text = "[run]\nscenario = relaxation\nseed = 1\nseed = 2\n[state]\nmodez = 16\n";
    assert_eq!(lines_of(text), vec![4, 6]);
    assert_eq!(
        lines_of("[run]\nscenario = relaxation\n[colour]\nx = 1\n")[0],
        3
    );
}

#[test]
fn every_problem_is_collected() {
    let text = "[grid]\npoints = 33\n[run]\nscenario = relaxation\ndt = 0\nensemble = 0\n";
    assert_eq!(lines_of(text), vec![2, 5, 6]);
}

#[test]
fn command_and_scenario_key_must_agree() {
    let text = "[run]\nscenario = relaxation\n";
    assert!(parse_config_as(text, ScenarioKind::Relaxation).is_ok());
    let errors = parse_config_as(text, ScenarioKind::Dilute).unwrap_err();
    assert_eq!(errors[0].line, 2);
    assert!(parse_config_as("", ScenarioKind::Dilute).is_ok());
    assert_eq!(parse_config("").unwrap_err()[0].line, 0);
}

#[test]
fn relaxation_defaults_match_the_documented_run() {
    let cfg = parse_config("[run]\nscenario = relaxation\n").unwrap();
    assert_eq!((cfg.grid.dims, cfg.grid.points), (2, 32));
    assert!((cfg.grid.extent - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    assert_eq!((cfg.gravity.kappa, cfg.gravity.epsilon), (0.1, 1e-3));
    assert!(cfg.gravity.hermitian);
    assert_eq!((cfg.run.ensemble, cfg.run.snapshot_stride), (10000, 90));
    assert_eq!(cfg.run.steps(), 1796);
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        if let Err(errors) = parse_config(&text) {
            panic!("{}: {errors:?}", path.display());
        }
        seen += 1;
    }
    assert_eq!(seen, ScenarioKind::ALL.len());
}
