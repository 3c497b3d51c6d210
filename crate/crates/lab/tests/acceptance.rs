//! Acceptance criteria A1 to A10, one test each. Every test prints a single
//! PASS/FAIL line straight to stderr so it shows without `--nocapture`.

use std::io::Write;
use std::time::Instant;

use gbc_core::bohm::{member_rng, uniform};
use gbc_core::evolve::continuity_residual;
use gbc_core::fock::{
    fock_correlation, fock_correlation_complex, fock_correlation_oracle_complex,
    fock_current_correlation, fock_current_correlation_oracle, fock_density_rate, ORACLE_MAX_MODES,
    ORACLE_MAX_PARTICLES,
};
use gbc_core::observables::{
    current_density_correlation, current_rate_full, current_rate_gradient, density,
    density_correlation, density_rate_full, density_rate_gradient,
};
use gbc_core::wavefunction::{product_state, symmetrized_state};
use gbc_core::*;
use gbc_lab::config::parse_config;
use gbc_lab::dilute::timescale_block;
use gbc_lab::measurement::{run_born_ensemble, run_control, run_sweep};
use gbc_lab::nosignal::run_nosignaling_scenario;
use gbc_lab::relaxation::run_relaxation_scenario;

fn report(id: &str, pass: bool, started: Instant, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!(
        "{id} {verdict} ({:.1} s) {detail}\n",
        started.elapsed().as_secs_f64()
    );
    std::io::stderr().write_all(line.as_bytes()).unwrap();
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn origin(grid: &Grid) -> BohmianPoint {
    BohmianPoint::new(grid.particles(), grid.dims(), vec![0.0; grid.axes()]).unwrap()
}

/// Largest `|lhs − rhs|` of the continuity balance at `t = 0.1` and `max|rhs|`.
fn continuity(m: usize, dt: f64, epsilon: f64) -> (f64, f64) {
    let grid = Grid::new(1, 1, m, 20.0).unwrap();
    let g = GravityParams::with_default_softening(&grid, 1.0, epsilon).unwrap();
    let setup = EvolutionSetup::new(grid, g);
    let psi = product_state(grid, &[Orbital::moving_gaussian(&[0.0], 1.0, &[0.5])]).unwrap();
    let p = BohmianPoint::new(1, 1, vec![0.8]).unwrap();
    let mut state = EvolutionState::new(&setup, psi, p).unwrap();
    let prop = Propagator::new(setup.clone(), dt).unwrap();
    let steps = (0.1 / dt).round() as usize;
    let snaps = prop.run(&mut state, steps, 1).unwrap();
    let (lhs, rhs) = continuity_residual(&setup, &snaps[steps - 1], &snaps[steps]).unwrap();
    (max_diff(lhs.values(), rhs.values()), rhs.max_magnitude())
}

#[test]
fn a01_standard_limit_regression() {
    let t0 = Instant::now();
    // norm per step for a spreading free packet
    let grid = Grid::new(1, 1, 128, 40.0).unwrap();
    let setup = EvolutionSetup::new(grid, GravityParams::new(0.0, 0.0, 1.0).unwrap());
    let psi = product_state(grid, &[Orbital::moving_gaussian(&[0.0], 1.0, &[0.8])]).unwrap();
    let mut state = EvolutionState::new(&setup, psi, origin(&grid)).unwrap();
    let prop = Propagator::new(setup, 1e-2).unwrap();
    let mut norm_drift = 0.0f64;
    for _ in 0..200 {
        let before = state.psi().norm_sqr();
        prop.step_in_place(&mut state).unwrap();
        norm_drift = norm_drift.max((state.psi().norm_sqr() - before).abs());
    }

    // ground state of V = x²/2 over 1000 steps
    let grid = Grid::new(1, 1, 64, 16.0).unwrap();
    let mut setup = EvolutionSetup::new(grid, GravityParams::new(0.0, 0.0, 1.0).unwrap());
    setup.potential = ExternalPotentialSpec::new(vec![PotentialTerm::Harmonic {
        axis: 0,
        center: 0.0,
        stiffness: 1.0,
    }]);
    let psi = product_state(
        grid,
        &[Orbital::gaussian(&[0.0], std::f64::consts::FRAC_1_SQRT_2)],
    )
    .unwrap();
    let start = density(&psi);
    let mut state = EvolutionState::new(&setup, psi, origin(&grid)).unwrap();
    let prop = Propagator::new(setup, 2.5e-4).unwrap();
    for _ in 0..1000 {
        prop.step_in_place(&mut state).unwrap();
    }
    let density_drift = max_diff(start.values(), density(state.psi()).values());

    // continuity residual under dt halving
    let res: Vec<f64> = [2e-3, 1e-3, 5e-4]
        .iter()
        .map(|&dt| continuity(128, dt, 0.0).0)
        .collect();
    let orders: Vec<f64> = res.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let order = orders.iter().copied().fold(f64::INFINITY, f64::min);

    let pass = norm_drift < 1e-10 && density_drift < 1e-8 && order >= 2.0;
    report(
        "A1",
        pass,
        t0,
        &format!("norm drift/step {norm_drift:.2e}, ground-state drift {density_drift:.2e}, continuity orders {orders:.3?}"),
    );
    assert!(pass);
}

#[test]
fn a02_continuity_anomaly_identity() {
    let t0 = Instant::now();
    let (a, rhs) = continuity(256, 1e-3, 1e-2);
    let (b, _) = continuity(256, 5e-4, 1e-2);
    let pass = a / rhs < 5e-2 && b < a;
    report(
        "A2",
        pass,
        t0,
        &format!(
            "relative residual {:.3e} at dt=1e-3, {:.3e} at dt=5e-4",
            a / rhs,
            b / rhs
        ),
    );
    assert!(pass);
}

fn random_orbitals(n: usize, stream: u64) -> Vec<Orbital> {
    let mut rng = member_rng(0xA3, stream);
    (0..n)
        .map(|_| {
            let c = -3.0 + 6.0 * uniform(&mut rng);
            let w = 0.6 + 0.8 * uniform(&mut rng);
            let k = -1.5 + 3.0 * uniform(&mut rng);
            Orbital::moving_gaussian(&[c], w, &[k])
        })
        .collect()
}

struct SumRuleCheck {
    f_row: f64,
    k_row: f64,
    min_diag: f64,
    rate: f64,
}

fn check_sum_rules(f: &CorrelationData, k: &CorrelationData, rate: &[f64], h: f64) -> SumRuleCheck {
    let worst = |c: &CorrelationData| {
        let mut w = 0.0f64;
        for comp in 0..c.rank() {
            for r in 0..c.points() {
                w = w.max(c.row_integral(comp, r).abs());
            }
        }
        w / c.max_abs().max(f64::MIN_POSITIVE)
    };
    SumRuleCheck {
        f_row: worst(f),
        k_row: worst(k),
        min_diag: (0..f.points())
            .map(|r| f.diagonal(0, r))
            .fold(f64::INFINITY, f64::min),
        rate: (rate.iter().sum::<f64>() * h).abs() / max_abs(rate).max(f64::MIN_POSITIVE),
    }
}

#[test]
fn a03_sum_rules() {
    let t0 = Instant::now();
    let mut checks = Vec::new();
    let bumpy = |grid: Grid| {
        GravitySample::from_potential(Field::from_fn(grid, |x| {
            2.0 + (0.7 * x[0]).sin() + 0.3 * (1.9 * x[0]).cos()
        }))
        .unwrap()
    };
    for (n, m) in [(1usize, 128usize), (2, 64), (3, 32)] {
        for stream in 0..4 {
            let grid = Grid::new(1, n, m, 16.0).unwrap();
            let psi = symmetrized_state(grid, &random_orbitals(n, stream * 10 + n as u64)).unwrap();
            let f = density_correlation(&psi).unwrap();
            let k = current_density_correlation(&psi).unwrap();
            let rate = density_rate_full(&f, &bumpy(grid.physical()), 0.05).unwrap();
            checks.push(check_sum_rules(&f, &k, rate.values(), grid.spacing()));
        }
    }
    let grid = Grid::new(1, 1, 64, 16.0).unwrap();
    let sets = [
        ModeSet::ring_1d(&[-3, 0, 2, 5], &[2, 1, 3, 1]).unwrap(),
        ModeSet::ring_1d(&[1, 2], &[4, 0]).unwrap(),
        ModeSet::new(
            ModeFamily::Oscillator {
                width: 1.2,
                boost: vec![0.4],
            },
            1,
            vec![vec![0], vec![1], vec![3], vec![4], vec![6]],
            vec![1, 2, 0, 3, 1],
        )
        .unwrap(),
    ];
    for ms in &sets {
        let f = fock_correlation(ms, &grid).unwrap();
        let k = fock_current_correlation(ms, &grid).unwrap();
        let rate = fock_density_rate(ms, &bumpy(grid), 0.05).unwrap();
        checks.push(check_sum_rules(&f, &k, rate.values(), grid.spacing()));
    }
    let f_row = checks.iter().map(|c| c.f_row).fold(0.0, f64::max);
    let k_row = checks.iter().map(|c| c.k_row).fold(0.0, f64::max);
    let rate = checks.iter().map(|c| c.rate).fold(0.0, f64::max);
    let min_diag = checks
        .iter()
        .map(|c| c.min_diag)
        .fold(f64::INFINITY, f64::min);
    let pass = f_row < 1e-8 && k_row < 1e-8 && rate < 1e-8 && min_diag >= 0.0;
    report(
        "A3",
        pass,
        t0,
        &format!(
            "{} states: F rows {f_row:.1e}, K rows {k_row:.1e}, rate integral {rate:.1e} (relative), min diagonal {min_diag:.2e}",
            checks.len()
        ),
    );
    assert!(pass);
}

/// Every occupation vector over `p` modes with total at most `n_max`.
fn occupation_vectors(p: usize, n_max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..p {
        let mut next = Vec::new();
        for v in &out {
            let used: u32 = v.iter().sum();
            for n in 0..=n_max - used {
                let mut w = v.clone();
                w.push(n);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

#[test]
fn a04_fock_oracle_equivalence() {
    let t0 = Instant::now();
    let families = [
        (
            ModeFamily::Ring,
            vec![0i64, 1, -2, 3],
            Grid::new(1, 1, 16, 8.0).unwrap(),
        ),
        (
            ModeFamily::Oscillator {
                width: 1.0,
                boost: vec![0.6],
            },
            vec![0, 1, 2, 3],
            Grid::new(1, 1, 32, 16.0).unwrap(),
        ),
    ];
    let mut worst = 0.0f64;
    let mut count = 0;
    for (family, labels, grid) in families {
        for p in 1..=ORACLE_MAX_MODES {
            for occ in occupation_vectors(p, ORACLE_MAX_PARTICLES) {
                let indices = labels[..p].iter().map(|&i| vec![i]).collect();
                let ms = ModeSet::new(family.clone(), 1, indices, occ).unwrap();
                let fast = fock_correlation_complex(&ms, &grid).unwrap();
                let slow = fock_correlation_oracle_complex(&ms, &grid).unwrap();
                for (a, b) in fast.iter().zip(&slow) {
                    worst = worst.max((a - b).norm());
                }
                let k = fock_current_correlation(&ms, &grid).unwrap();
                let ko = fock_current_correlation_oracle(&ms, &grid).unwrap();
                worst = worst.max(max_diff(k.values(), ko.values()));
                count += 1;
            }
        }
    }
    let pass = worst < 1e-10;
    report(
        "A4",
        pass,
        t0,
        &format!("{count} mode sets, max deviation {worst:.2e}"),
    );
    assert!(pass);
}

fn measurement_config(c1_weight: f64) -> String {
    format!(
        "[run]\nscenario = measurement\nseed = 2024\n[state]\nc1 = {:.17}\nc2 = {:.17}\n",
        c1_weight.sqrt(),
        (1.0 - c1_weight).sqrt()
    )
}

#[test]
fn a05_a06_born_statistics_and_branch_selection() {
    let t0 = Instant::now();
    let mut born_ok = true;
    let mut born_lines = Vec::new();
    let (mut matched, mut eligible) = (0, 0);
    for p in [0.25, 0.5, 0.64] {
        let cfg = parse_config(&measurement_config(p)).unwrap();
        assert_eq!(cfg.run.ensemble, 1000);
        let e = run_born_ensemble(&cfg).unwrap();
        born_ok &= e.born.within_band && e.max_partition_error < 1e-8;
        born_lines.push(format!(
            "|c1|²={p}: {:.3} ± {:.3} ({} converged)",
            e.born.observed, e.born.band, e.born.converged
        ));
        matched += e.selection.matched;
        eligible += e.selection.eligible;
    }
    let cfg = parse_config(&measurement_config(0.5)).unwrap();
    let control = run_control(&cfg).unwrap();
    let control_ok = control.separated && control.drift < 1e-3;
    let pass5 = born_ok && control_ok;
    report(
        "A5",
        pass5,
        t0,
        &format!(
            "{}; control drift {:.2e}",
            born_lines.join(", "),
            control.drift
        ),
    );

    let t1 = Instant::now();
    let sweep = run_sweep(&cfg).unwrap();
    let fraction = matched as f64 / eligible as f64;
    let pass6 = fraction >= 0.99 && sweep.strictly_increasing;
    let rates: Vec<String> = sweep
        .rows
        .iter()
        .map(|r| format!("A={}: {:.4}", r.amplification, r.rate))
        .collect();
    report(
        "A6",
        pass6,
        t1,
        &format!(
            "{matched}/{eligible} survivors held the Bohmian pointer ({:.2}%); rates {}; fitted exponent {:.2}",
            100.0 * fraction,
            rates.join(", "),
            sweep.exponent.unwrap_or(f64::NAN)
        ),
    );
    assert!(pass5 && pass6);
}

#[test]
fn a07_no_signaling() {
    let t0 = Instant::now();
    let cfg =
        parse_config("[run]\nscenario = nosignaling\nseed = 11\n[state]\nc1 = 0.6\nc2 = 0.8\n")
            .unwrap();
    assert_eq!((cfg.run.ensemble, cfg.gravity.epsilon), (2000, 1e-2));
    let r = run_nosignaling_scenario(&cfg).unwrap();
    let pass = r.passed && r.control_identical_l1 < 1e-10 && r.control_standard_l1 < r.tolerance;
    report(
        "A7",
        pass,
        t0,
        &format!(
            "L1 {:.3e} < {:.3e}; ε=0 identical {:.1e}, ε=0 settings {:.1e}",
            r.l1, r.tolerance, r.control_identical_l1, r.control_standard_l1
        ),
    );
    assert!(pass);
}

#[test]
fn a08_equilibrium_relaxation() {
    let t0 = Instant::now();
    let cfg = parse_config("[run]\nscenario = relaxation\nseed = 5\n").unwrap();
    let r = run_relaxation_scenario(&cfg).unwrap();
    let pass = r.decayed && r.equilibrium_in_band && r.tracks_reference;
    report(
        "A8",
        pass,
        t0,
        &format!(
            "H(end)/H(0) {:.3} (ε=0: {:.3}); max curve gap {:.3}; equilibrium max {:.2e} vs band {:.2e}",
            r.final_ratio, r.reference_ratio, r.max_curve_deviation, r.equilibrium_max, r.noise_band
        ),
    );
    assert!(pass);
}

#[test]
fn a09_timescale_estimator() {
    let t0 = Instant::now();
    let cfg = parse_config("[run]\nscenario = dilute\n").unwrap();
    let si = &cfg.probe.as_ref().unwrap().si;
    // m = 1e-26 kg under Earth gravity
    assert_eq!(si.force, 9.81e-26);
    let b = timescale_block(si).unwrap();
    let ratio_ok = (b.lambda_ratio / 1e8 - 1.0).abs() < 1e-12;
    let pass = ratio_ok && b.within_two_orders;
    report(
        "A9",
        pass,
        t0,
        &format!(
            "τ = {:.4e} s against quoted {:.0e} s ({:.2} orders); λ_c ratio {:.6e}",
            b.seconds, b.quoted, b.orders_from_quoted, b.lambda_ratio
        ),
    );
    assert!(pass);
}

/// Relative deviation of the gradient expansion for the odd profile
/// `F(r, r+s) = (s/λ) exp(−s²/2λ²)` in the potential `2 + sin(x/ℓ)`.
fn expansion_deviation(scale: f64) -> f64 {
    let lambda = 0.5;
    let grid = Grid::new(1, 1, 256, 20.0).unwrap();
    let p = 256;
    let x = grid.coordinates();
    let mut values = vec![0.0; p * p];
    for r in 0..p {
        for rp in 0..p {
            let s = grid.min_image(x[rp] - x[r]) / lambda;
            values[r * p + rp] = s * (-0.5 * s * s).exp();
        }
    }
    let f = CorrelationData::from_parts(CorrelationKind::Density, grid, values, vec![0.0; p], None)
        .unwrap();
    let v = Field::from_fn(grid, |x| 2.0 + (x[0] / scale).sin());
    let force = Field::from_fn(grid, |x| (x[0] / scale).cos() / scale);
    let sample = GravitySample::from_parts(v, force).unwrap();
    let full = density_rate_full(&f, &sample, 0.1).unwrap();
    let grad = density_rate_gradient(&f, &sample, 0.1).unwrap();
    let interior: Vec<usize> = (0..p).filter(|&r| x[r].abs() <= 5.0).collect();
    let dev = interior.iter().fold(0.0f64, |m, &r| {
        m.max((full.values()[r] - grad.values()[r]).abs())
    });
    let size = interior
        .iter()
        .fold(0.0f64, |m, &r| m.max(full.values()[r].abs()));
    dev / size
}

fn linear_sample(grid: Grid, offset: f64, slope: f64) -> GravitySample {
    let v = Field::from_fn(grid, |x| offset + slope * x[0]);
    let f = Field::from_fn(grid, |_| slope);
    GravitySample::from_parts(v, f).unwrap()
}

#[test]
fn a10_gradient_expansion_consistency() {
    let t0 = Instant::now();
    let grid = Grid::new(1, 2, 64, 20.0).unwrap();
    let psi = symmetrized_state(
        grid,
        &[
            Orbital::moving_gaussian(&[-1.0], 0.9, &[0.7]),
            Orbital::moving_gaussian(&[1.2], 1.1, &[-0.3]),
        ],
    )
    .unwrap();
    let sample = linear_sample(grid.physical(), 5.0, 0.2);
    let f = density_correlation(&psi).unwrap();
    let k = current_density_correlation(&psi).unwrap();
    let rel = |a: &[f64], b: &[f64]| max_diff(a, b) / max_abs(a);
    let d_grid = rel(
        density_rate_full(&f, &sample, 0.03).unwrap().values(),
        density_rate_gradient(&f, &sample, 0.03).unwrap().values(),
    );
    let j_grid = rel(
        current_rate_full(&k, &sample, 0.03).unwrap().values(),
        current_rate_gradient(&k, &sample, 0.03).unwrap().values(),
    );
    let fock_grid = Grid::new(1, 1, 128, 20.0).unwrap();
    let ms = ModeSet::new(
        ModeFamily::Oscillator {
            width: 1.0,
            boost: vec![0.7],
        },
        1,
        vec![vec![0], vec![1]],
        vec![1, 1],
    )
    .unwrap();
    let fs = linear_sample(fock_grid, 5.0, 0.2);
    let d_fock = rel(
        fock_density_rate(&ms, &fs, 0.02).unwrap().values(),
        density_rate_gradient(&fock_correlation(&ms, &fock_grid).unwrap(), &fs, 0.02)
            .unwrap()
            .values(),
    );
    let devs: Vec<f64> = [10.0, 20.0, 40.0]
        .iter()
        .map(|&s| expansion_deviation(s))
        .collect();
    let ratios: Vec<f64> = devs.windows(2).map(|w| w[0] / w[1]).collect();
    let scaling_ok = ratios.iter().all(|r| (3.6..4.4).contains(r));
    let pass = d_grid < 1e-6 && j_grid < 1e-6 && d_fock < 1e-6 && scaling_ok;
    report(
        "A10",
        pass,
        t0,
        &format!(
            "linear potential: density {d_grid:.1e}, current {j_grid:.1e}, number state {d_fock:.1e}; deviation ratios per halving of λ/ℓ {ratios:.3?}"
        ),
    );
    assert!(pass);
}
