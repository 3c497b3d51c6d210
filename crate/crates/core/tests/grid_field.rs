use std::f64::consts::PI;

use gbc_core::grid::{integrate_scalar, interpolate_scalar, spectral_gradient};
use gbc_core::{Complex64, Field, Grid};

const L: f64 = 20.0;

/// Fixed band-limited test signal and its exact derivative.
fn signal(x: f64) -> f64 {
    (1..=10)
        .map(|n| {
            let k = 2.0 * PI * n as f64 / L;
            (1.0 / n as f64) * (k * x + 0.7 * n as f64).cos()
        })
        .sum()
}

/// Eighth-order centred difference of `signal`.
fn fd_derivative(x: f64) -> f64 {
    let d = 1e-3;
    let c = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    c.iter()
        .enumerate()
        .map(|(j, cj)| {
            let s = (j + 1) as f64 * d;
            cj * (signal(x + s) - signal(x - s))
        })
        .sum::<f64>()
        / d
}

#[test]
fn spectral_derivative_matches_finite_difference_oracle() {
    let grid = Grid::new(1, 1, 256, L).unwrap();
    let f = Field::from_fn(grid, |x| signal(x[0]));
    let df = spectral_gradient(&f, 0).unwrap();
    let scale = grid
        .coordinates()
        .iter()
        .fold(0.0f64, |m, &x| m.max(fd_derivative(x).abs()));
    for (i, x) in grid.coordinates().iter().enumerate() {
        let err = (df.values()[i] - fd_derivative(*x)).abs() / scale;
        assert!(err < 1e-6, "x = {x}: relative error {err}");
    }
}

#[test]
fn gaussian_quadrature_against_double_resolution() {
    let gauss = |x: &[f64]| (-0.5 * x[0] * x[0]).exp() / (2.0 * PI).sqrt();
    let coarse = integrate_scalar(&Field::from_fn(Grid::new(1, 1, 64, L).unwrap(), gauss));
    let fine = integrate_scalar(&Field::from_fn(Grid::new(1, 1, 128, L).unwrap(), gauss));
    assert!((coarse - 1.0).abs() < 1e-8);
    assert!((coarse - fine).abs() < 1e-8);
    let zero = Field::<f64>::zeros(Grid::new(1, 1, 64, L).unwrap(), 1);
    assert_eq!(integrate_scalar(&zero), 0.0);
}

#[test]
fn mid_cell_interpolation_converges_at_third_order_or_better() {
    let analytic = |x: f64| (-(x - 0.3) * (x - 0.3) / 2.0).exp();
    let errors: Vec<f64> = [32usize, 64, 128]
        .iter()
        .map(|&m| {
            let grid = Grid::new(1, 1, m, L).unwrap();
            let f = Field::from_fn(grid, |x| analytic(x[0]));
            let h = grid.spacing();
            (0..m)
                .map(|i| {
                    let x = grid.coordinate(i) + 0.5 * h;
                    (interpolate_scalar(&f, &[x]).unwrap() - analytic(x)).abs()
                })
                .fold(0.0f64, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 3.0, "observed order {order} from {errors:?}");
    }
}

#[test]
fn complex_fields_differentiate_componentwise() {
    let grid = Grid::new(2, 1, 16, 2.0 * PI).unwrap();
    let f = Field::from_fn(grid, |x| Complex64::new(0.0, 2.0 * x[0] + x[1]).exp());
    let dy = spectral_gradient(&f, 1).unwrap();
    for (a, b) in f.values().iter().zip(dy.values()) {
        assert!((a * Complex64::i() - b).norm() < 1e-12);
    }
}

#[test]
fn budget_error_and_spacing_examples() {
    let g = Grid::new(1, 2, 256, 20.0).unwrap();
    assert_eq!(g.len(), 65536);
    assert_eq!(g.spacing(), 0.078125);
    assert!(Grid::new(1, 4, 4096, 40.0).is_err());
    assert!(Grid::new(1, 1, 100, 40.0).is_err());
}
