use gbc_core::bohm::sample_initial_positions;
use gbc_core::gravity::{localization_rate, pairwise_potential_energy, potential_from_positions};
use gbc_core::grid::spectral_gradient;
use gbc_core::observables::density;
use gbc_core::wavefunction::product_state;
use gbc_core::{BohmianPoint, Field, GravityParams, GravitySample, Grid, Orbital};

/// Independent minimum-image distance.
fn dist(a: &[f64], b: &[f64], l: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut s = x - y;
            s -= l * (s / l).round();
            s * s
        })
        .sum::<f64>()
        .sqrt()
}

/// Small deterministic generator for test inputs.
fn lcg(state: &mut u64) -> f64 {
    *state = state
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

#[test]
fn symmetric_sources_give_even_field_and_odd_force() {
    let grid = Grid::new(1, 2, 64, 16.0).unwrap();
    let params = GravityParams::with_default_softening(&grid, 2.0, 0.1).unwrap();
    let q = BohmianPoint::new(2, 1, vec![-1.5, 1.5]).unwrap();
    let g = potential_from_positions(&q, &grid, &params).unwrap();
    let v = g.abs_potential().values();
    let f = g.force().values();
    for i in 1..64 {
        let j = 64 - i;
        assert!((v[i] - v[j]).abs() < 1e-12);
        assert!((f[i] + f[j]).abs() < 1e-12);
    }
}

#[test]
fn five_sources_match_direct_summation() {
    let grid = Grid::new(2, 1, 32, 10.0).unwrap();
    let params = GravityParams::new(1.3, 0.2, 0.4).unwrap();
    let mut s = 7u64;
    let pos: Vec<f64> = (0..10).map(|_| (lcg(&mut s) - 0.5) * 10.0).collect();
    let q = BohmianPoint::new(5, 2, pos.clone()).unwrap();
    let g = potential_from_positions(&q, &grid, &params).unwrap();
    let physical = grid.physical();
    for _ in 0..100 {
        let idx = (lcg(&mut s) * physical.len() as f64) as usize;
        let mut r = [0.0; 2];
        physical.point(idx, &mut r);
        let direct: f64 = (0..5)
            .map(|n| 1.3 / (dist(&r, &pos[2 * n..2 * n + 2], 10.0).powi(2) + 0.16).sqrt())
            .sum();
        assert!((g.abs_potential().values()[idx] - direct).abs() < 1e-12);
    }
}

#[test]
fn pair_energy_matches_double_loop() {
    let grid = Grid::new(3, 3, 8, 6.0).unwrap();
    let params = GravityParams::new(0.7, 0.0, 0.3).unwrap();
    let mut s = 11u64;
    let sources: Vec<f64> = (0..9).map(|_| (lcg(&mut s) - 0.5) * 6.0).collect();
    let config: Vec<f64> = (0..9).map(|_| (lcg(&mut s) - 0.5) * 6.0).collect();
    let q = BohmianPoint::new(3, 3, sources.clone()).unwrap();
    let mut expected = 0.0;
    for n in 0..3 {
        for j in 0..3 {
            let r = dist(&config[3 * n..3 * n + 3], &sources[3 * j..3 * j + 3], 6.0);
            expected -= 0.7 / (r * r + 0.09).sqrt();
        }
    }
    let e = pairwise_potential_energy(&config, &q, &grid, &params).unwrap();
    assert!((e - expected).abs() < 1e-12);

    let one = Grid::new(1, 1, 8, 6.0).unwrap();
    let q1 = BohmianPoint::new(1, 1, vec![0.4]).unwrap();
    let e1 = pairwise_potential_energy(&[0.4], &q1, &one, &params).unwrap();
    assert!((e1 + 0.7 / 0.3).abs() < 1e-12);
}

#[test]
fn localization_rate_matches_quadrature_oracle() {
    let grid = Grid::new(1, 1, 256, 20.0).unwrap();
    let params = GravityParams::new(1.0, 0.05, 0.5).unwrap();
    let psi = product_state(grid, &[Orbital::gaussian(&[0.0], 1.0)]).unwrap();
    let rho = density(&psi);
    let q = BohmianPoint::new(1, 1, vec![1.7]).unwrap();
    let g = potential_from_positions(&q, &grid, &params).unwrap();
    // Configuration on a grid node so the sampled value is exact.
    let x = grid.coordinate(150);
    let rate = localization_rate(&[x], &rho, &g, &params).unwrap();

    let n = 20000;
    let dx = 20.0 / n as f64;
    let mut average = 0.0;
    for i in 0..n {
        let y = -10.0 + (i as f64 + 0.5) * dx;
        let d = (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt();
        average += d / (dist(&[y], &[1.7], 20.0).powi(2) + 0.25).sqrt() * dx;
    }
    let at_x = 1.0 / (dist(&[x], &[1.7], 20.0).powi(2) + 0.25).sqrt();
    let oracle = 0.05 * (at_x - average);
    assert!((rate - oracle).abs() < 1e-8, "{rate} vs {oracle}");
}

#[test]
fn flat_potential_and_zero_epsilon_give_zero_rate() {
    let grid = Grid::new(1, 2, 32, 10.0).unwrap();
    let physical = grid.physical();
    let psi = product_state(
        grid,
        &[
            Orbital::gaussian(&[-1.0], 1.0),
            Orbital::gaussian(&[1.0], 1.0),
        ],
    )
    .unwrap();
    let rho = density(&psi);
    let flat = GravitySample::from_potential(Field::from_fn(physical, |_| 3.0)).unwrap();
    let params = GravityParams::new(1.0, 0.3, 0.5).unwrap();
    assert!(
        localization_rate(&[0.1, 2.0], &rho, &flat, &params)
            .unwrap()
            .abs()
            < 1e-14
    );

    let zero = GravityParams::new(1.0, 0.0, 0.5).unwrap();
    let q = BohmianPoint::new(2, 1, vec![0.1, 2.0]).unwrap();
    let g = potential_from_positions(&q, &grid, &zero).unwrap();
    assert_eq!(
        localization_rate(&[0.1, 2.0], &rho, &g, &zero).unwrap(),
        0.0
    );
}

#[test]
fn localization_rate_averages_to_zero_over_quantum_distribution() {
    let grid = Grid::new(1, 1, 128, 16.0).unwrap();
    let params = GravityParams::new(1.0, 0.1, 0.5).unwrap();
    let psi = product_state(grid, &[Orbital::gaussian(&[0.5], 1.2)]).unwrap();
    let rho = density(&psi);
    let q = BohmianPoint::new(1, 1, vec![-0.8]).unwrap();
    let g = potential_from_positions(&q, &grid, &params).unwrap();
    let ens = sample_initial_positions(&psi, 4000, 3).unwrap();
    let rates: Vec<f64> = ens
        .members()
        .iter()
        .map(|p| localization_rate(p.positions(), &rho, &g, &params).unwrap())
        .collect();
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(
        mean.abs() < 4.0 * (var / n).sqrt(),
        "mean {mean}, sd {}",
        var.sqrt()
    );
}

#[test]
fn force_is_curl_free_in_two_dimensions() {
    let grid = Grid::new(2, 1, 32, 12.0).unwrap();
    let params = GravityParams::with_default_softening(&grid, 1.0, 0.1).unwrap();
    let q = BohmianPoint::new(3, 2, vec![0.3, -1.0, 2.2, 1.4, -3.1, 0.0]).unwrap();
    let g = potential_from_positions(&q, &grid, &params).unwrap();
    let physical = grid.physical();
    let fx = Field::from_values(physical, 1, g.force().component(0).to_vec()).unwrap();
    let fy = Field::from_values(physical, 1, g.force().component(1).to_vec()).unwrap();
    let curl_a = spectral_gradient(&fy, 0).unwrap();
    let curl_b = spectral_gradient(&fx, 1).unwrap();
    let curl = curl_a
        .values()
        .iter()
        .zip(curl_b.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(curl < 1e-8 * g.force().max_magnitude());
    let recomputed = spectral_gradient(g.abs_potential(), 0).unwrap();
    for (a, b) in recomputed.values().iter().zip(g.force().component(0)) {
        assert!((a - b).abs() < 1e-10);
    }
}
