//! Gravitational potential sourced by Bohmian positions, its Hermitian
//! pair energy, and the localization rate of a configuration.
//!
//! All kernels use the softened form `u_a(s) = 1/sqrt(|s|² + a²)` with
//! periodic minimum-image displacements.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::bohm::BohmianPoint;
use crate::error::{invalid, Error, Result};
use crate::grid::{integrate_scalar, interpolate_scalar, spectral_gradient, Field, Grid};

#[derive(Clone, Debug, PartialEq)]
pub struct GravityParams {
    /// Coupling `G m²` in simulation units (energy × length).
    pub kappa: f64,
    /// Imaginary fraction of the coupling.
    pub epsilon: f64,
    /// Softening length `a`.
    pub softening: f64,
    pub include_hermitian_gravity: bool,
    /// Whether a coordinate feels the Hermitian attraction of its own
    /// Bohmian source.
    pub include_self_pairs: bool,
    /// Per-particle multipliers on the sampled potential; empty means all
    /// ones. Used for the collective pointer coordinate.
    pub weights: Vec<f64>,
}

impl GravityParams {
    pub fn new(kappa: f64, epsilon: f64, softening: f64) -> Result<Self> {
        let p = Self {
            kappa,
            epsilon,
            softening,
            include_hermitian_gravity: true,
            include_self_pairs: true,
            weights: Vec::new(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Softening defaults to two grid spacings.
    pub fn with_default_softening(grid: &Grid, kappa: f64, epsilon: f64) -> Result<Self> {
        Self::new(kappa, epsilon, 2.0 * grid.spacing())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(invalid("kappa", "must be finite and >= 0"));
        }
        if !(self.softening > 0.0) || !self.softening.is_finite() {
            return Err(invalid("softening", "must be finite and > 0"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(invalid("epsilon", "must lie in [0, 1]"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("weights", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn weight(&self, n: usize) -> f64 {
        self.weights.get(n).copied().unwrap_or(1.0)
    }

    /// `Σ_n w_n`, which equals N for unit weights.
    pub fn total_weight(&self, particles: usize) -> f64 {
        (0..particles).map(|n| self.weight(n)).sum()
    }

    /// Softened kernel `1/sqrt(s² + a²)` for a squared distance.
    pub fn kernel(&self, dist_sqr: f64) -> f64 {
        1.0 / (dist_sqr + self.softening * self.softening).sqrt()
    }
}

/// `|V_G|` and its gradient on the physical grid, with the Bohmian point
/// that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct GravitySample {
    abs_potential: Field<f64>,
    force: Field<f64>,
    source_point: Option<BohmianPoint>,
}

impl GravitySample {
    /// Builds a sample from an externally prescribed potential and force,
    /// e.g. a uniform-force test potential that is not periodic.
    pub fn from_parts(abs_potential: Field<f64>, force: Field<f64>) -> Result<Self> {
        let grid = *abs_potential.grid();
        if grid.particles() != 1 || abs_potential.rank() != 1 {
            return Err(Error::GridMismatch(
                "potential must be a scalar physical-space field",
            ));
        }
        if *force.grid() != grid || force.rank() != grid.dims() {
            return Err(Error::GridMismatch(
                "force must be a d-vector field on the potential grid",
            ));
        }
        if abs_potential.values().iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("abs_potential", "must be non-negative everywhere"));
        }
        Ok(Self {
            abs_potential,
            force,
            source_point: None,
        })
    }

    /// Builds a sample from a periodic potential; the force is its
    /// spectral gradient.
    pub fn from_potential(abs_potential: Field<f64>) -> Result<Self> {
        let force = gradient_field(&abs_potential)?;
        Self::from_parts(abs_potential, force)
    }

    pub fn abs_potential(&self) -> &Field<f64> {
        &self.abs_potential
    }

    pub fn force(&self) -> &Field<f64> {
        &self.force
    }

    pub fn source_point(&self) -> Option<&BohmianPoint> {
        self.source_point.as_ref()
    }

    pub fn grid(&self) -> &Grid {
        self.abs_potential.grid()
    }
}

fn gradient_field(scalar: &Field<f64>) -> Result<Field<f64>> {
    let grid = *scalar.grid();
    let mut values = Vec::with_capacity(grid.len() * grid.dims());
    for axis in 0..grid.dims() {
        values.extend_from_slice(spectral_gradient(scalar, axis)?.values());
    }
    Field::from_values(grid, grid.dims(), values)
}

/// `κ Σ_j u_a(r - q_j)` over the listed sources, on the physical grid.
pub(crate) fn source_potential(
    physical: &Grid,
    point: &BohmianPoint,
    sources: impl Iterator<Item = usize> + Clone,
    params: &GravityParams,
) -> Vec<f64> {
    let d = physical.dims();
    let mut x = vec![0.0; d];
    (0..physical.len())
        .map(|idx| {
            physical.point(idx, &mut x);
            let sum: f64 = sources
                .clone()
                .map(|j| {
                    let q = point.particle(j);
                    let r2: f64 = (0..d)
                        .map(|c| {
                            let s = physical.min_image(x[c] - q[c]);
                            s * s
                        })
                        .sum();
                    params.kernel(r2)
                })
                .sum();
            params.kappa * sum
        })
        .collect()
}

/// `|V_G(r)| = κ Σ_n u_a(r - q_n)` and its spectral gradient.
pub fn potential_from_positions(
    point: &BohmianPoint,
    grid: &Grid,
    params: &GravityParams,
) -> Result<GravitySample> {
    params.validate()?;
    if point.dims() != grid.dims() {
        return Err(Error::GridMismatch(
            "Bohmian point dimension differs from grid",
        ));
    }
    let physical = grid.physical();
    let values = source_potential(&physical, point, 0..point.particles(), params);
    let abs_potential = Field::from_values(physical, 1, values)?;
    let force = gradient_field(&abs_potential)?;
    Ok(GravitySample {
        abs_potential,
        force,
        source_point: Some(point.clone()),
    })
}

/// Hermitian gravitational energy `-κ Σ_n w_n Σ_j u_a(r_n - q_j)` of the
/// configuration `config` (one coordinate per grid axis) in the field of
/// the Bohmian sources. Self pairs `j = n` are skipped when disabled.
pub fn pairwise_potential_energy(
    config: &[f64],
    sources: &BohmianPoint,
    grid: &Grid,
    params: &GravityParams,
) -> Result<f64> {
    if config.len() != sources.positions().len() || sources.dims() != grid.dims() {
        return Err(Error::GridMismatch(
            "configuration and sources differ in shape",
        ));
    }
    if !params.include_hermitian_gravity {
        return Ok(0.0);
    }
    let d = grid.dims();
    let n_particles = sources.particles();
    let mut total = 0.0;
    for n in 0..n_particles {
        let r = &config[n * d..(n + 1) * d];
        let mut partial = 0.0;
        for j in 0..n_particles {
            if j == n && !params.include_self_pairs {
                continue;
            }
            let q = sources.particle(j);
            let r2: f64 = (0..d)
                .map(|c| {
                    let s = grid.min_image(r[c] - q[c]);
                    s * s
                })
                .sum();
            partial += params.kernel(r2);
        }
        total += params.weight(n) * partial;
    }
    Ok(-params.kappa * total)
}

/// `ε (Σ_n w_n |V_G(r_n)| - ∫ ⟨D⟩ |V_G|)` at configuration `config`.
///
/// `mean_density` must integrate to `Σ_n w_n` (that is, `N` for unit
/// weights) within 1e-6.
pub fn localization_rate(
    config: &[f64],
    mean_density: &Field<f64>,
    gsample: &GravitySample,
    params: &GravityParams,
) -> Result<f64> {
    let physical = *gsample.grid();
    if *mean_density.grid() != physical {
        return Err(Error::GridMismatch(
            "mean density and gravity sample grids differ",
        ));
    }
    let d = physical.dims();
    if !config.len().is_multiple_of(d) {
        return Err(Error::GridMismatch(
            "configuration length is not a multiple of d",
        ));
    }
    let particles = config.len() / d;
    let expected = params.total_weight(particles);
    let found = integrate_scalar(mean_density);
    if (found - expected).abs() > 1e-6 {
        return Err(Error::DensityNormalization { expected, found });
    }
    let v = gsample.abs_potential();
    let mut sampled = 0.0;
    for n in 0..particles {
        sampled += params.weight(n) * interpolate_scalar(v, &config[n * d..(n + 1) * d])?;
    }
    let averaged: f64 = mean_density
        .values()
        .iter()
        .zip(v.values())
        .map(|(rho, vg)| rho * vg)
        .sum::<f64>()
        * physical.cell_volume();
    Ok(params.epsilon * (sampled - averaged))
}
