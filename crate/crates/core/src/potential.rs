//! External and interaction potentials `V(r_1, …, r_N)` built from named
//! analytic terms over configuration axes.
//!
//! Axis `n·d + c` is coordinate `c` of particle `n`. Displacements from a
//! centre use the minimum image, so wells sit smoothly on the torus as long
//! as the state stays away from the far side.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::grid::Grid;

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialTerm {
    Constant(f64),
    /// `½ k (x_axis − c)²`.
    Harmonic {
        axis: usize,
        center: f64,
        stiffness: f64,
    },
    /// `slope · x_axis`, evaluated on the raw coordinate in `[-L/2, L/2)`.
    Linear {
        axis: usize,
        slope: f64,
    },
    /// `depth · exp(−|r_n − c|² / (2 w²))` on particle `particle`.
    Gaussian {
        particle: usize,
        center: Vec<f64>,
        width: f64,
        depth: f64,
    },
    /// Pointer coupling `−χ · x_pointer · tanh(x_system / w)`.
    TanhCoupling {
        system_axis: usize,
        pointer_axis: usize,
        chi: f64,
        width: f64,
    },
}

impl PotentialTerm {
    fn validate(&self, grid: &Grid) -> Result<()> {
        let axes = grid.axes();
        let ok = match self {
            PotentialTerm::Constant(c) => c.is_finite(),
            PotentialTerm::Harmonic {
                axis,
                center,
                stiffness,
            } => *axis < axes && center.is_finite() && stiffness.is_finite(),
            PotentialTerm::Linear { axis, slope } => *axis < axes && slope.is_finite(),
            PotentialTerm::Gaussian {
                particle,
                center,
                width,
                depth,
            } => {
                *particle < grid.particles()
                    && center.len() == grid.dims()
                    && *width > 0.0
                    && depth.is_finite()
            }
            PotentialTerm::TanhCoupling {
                system_axis,
                pointer_axis,
                chi,
                width,
            } => {
                *system_axis < axes
                    && *pointer_axis < axes
                    && system_axis != pointer_axis
                    && chi.is_finite()
                    && *width > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(
                "potential term",
                "axis out of range or non-finite parameter",
            ))
        }
    }

    pub fn value(&self, grid: &Grid, x: &[f64]) -> f64 {
        match self {
            PotentialTerm::Constant(c) => *c,
            PotentialTerm::Harmonic {
                axis,
                center,
                stiffness,
            } => {
                let s = grid.min_image(x[*axis] - center);
                0.5 * stiffness * s * s
            }
            PotentialTerm::Linear { axis, slope } => slope * x[*axis],
            PotentialTerm::Gaussian {
                particle,
                center,
                width,
                depth,
            } => {
                let d = grid.dims();
                let r2: f64 = center
                    .iter()
                    .enumerate()
                    .map(|(c, cc)| {
                        let s = grid.min_image(x[particle * d + c] - cc);
                        s * s
                    })
                    .sum();
                depth * (-r2 / (2.0 * width * width)).exp()
            }
            PotentialTerm::TanhCoupling {
                system_axis,
                pointer_axis,
                chi,
                width,
            } => -chi * x[*pointer_axis] * (x[*system_axis] / width).tanh(),
        }
    }
}

/// Sum of potential terms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExternalPotentialSpec {
    pub terms: Vec<PotentialTerm>,
}

impl ExternalPotentialSpec {
    pub fn new(terms: Vec<PotentialTerm>) -> Self {
        Self { terms }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn value(&self, grid: &Grid, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.value(grid, x)).sum()
    }

    /// Values at every configuration node.
    pub fn evaluate(&self, grid: &Grid) -> Result<Vec<f64>> {
        for t in &self.terms {
            t.validate(grid)?;
        }
        let mut x = vec![0.0; grid.axes()];
        let values: Vec<f64> = (0..grid.len())
            .map(|idx| {
                grid.point(idx, &mut x);
                self.value(grid, &x)
            })
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("potential", "not finite on the grid"));
        }
        Ok(values)
    }
}
