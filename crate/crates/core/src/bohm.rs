//! Bohmian configurations: sampling from `|Φ|²`, guidance velocities,
//! trajectory integration, branch membership and the coarse-grained
//! H-function.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{invalid, Error, Result};
use crate::grid::{interpolate_many, Field, Grid};
use crate::wavefunction::WaveFunction;

/// Relative density below which a configuration counts as sitting on a node.
pub const NODE_FLOOR: f64 = 1e-12;

/// Default coarse-graining length for the H-function, in grid spacings.
pub const DEFAULT_CELL_SPACINGS: f64 = 8.0;

/// The configuration point `(q_1, …, q_N)`, stored flat with particle
/// `n`'s `d` coordinates contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct BohmianPoint {
    particles: usize,
    dims: usize,
    positions: Vec<f64>,
}

impl BohmianPoint {
    pub fn new(particles: usize, dims: usize, positions: Vec<f64>) -> Result<Self> {
        if particles == 0 || dims == 0 || positions.len() != particles * dims {
            return Err(invalid("positions", "need exactly N·d coordinates"));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(invalid("positions", "coordinates must be finite"));
        }
        Ok(Self {
            particles,
            dims,
            positions,
        })
    }

    /// Builds a point for `grid` with every coordinate wrapped into the box.
    pub fn on_grid(grid: &Grid, positions: Vec<f64>) -> Result<Self> {
        let mut p = Self::new(grid.particles(), grid.dims(), positions)?;
        p.wrap(grid);
        Ok(p)
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn particle(&self, n: usize) -> &[f64] {
        &self.positions[n * self.dims..(n + 1) * self.dims]
    }

    pub fn wrap(&mut self, grid: &Grid) {
        for x in &mut self.positions {
            *x = grid.wrap(*x);
        }
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        if self.particles != grid.particles() || self.dims != grid.dims() {
            return Err(Error::GridMismatch("Bohmian point shape differs from grid"));
        }
        Ok(())
    }
}

/// RNG stream of ensemble member `index` under `seed`.
pub fn member_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw in `[0, 1)` with 53 random bits.
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    members: Vec<BohmianPoint>,
    seed: u64,
}

impl Ensemble {
    pub fn new(members: Vec<BohmianPoint>, seed: u64) -> Result<Self> {
        if members.is_empty() {
            return Err(invalid("count", "ensemble needs at least one member"));
        }
        Ok(Self { members, seed })
    }

    pub fn members(&self) -> &[BohmianPoint] {
        &self.members
    }

    pub fn members_mut(&mut self) -> &mut [BohmianPoint] {
        &mut self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream key of member `index`: the pair `(seed, index)`.
    pub fn stream_key(&self, index: usize) -> (u64, u64) {
        (self.seed, index as u64)
    }
}

/// Cumulative cell weights of a non-negative configuration-space density.
#[derive(Clone, Debug)]
pub struct ConfigurationSampler {
    grid: Grid,
    cumulative: Vec<f64>,
}

impl ConfigurationSampler {
    pub fn new(density: &Field<f64>) -> Result<Self> {
        if density.rank() != 1 {
            return Err(Error::GridMismatch("sampling density must be scalar"));
        }
        let mut total = 0.0;
        let mut cumulative = Vec::with_capacity(density.values().len());
        for &v in density.values() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid("density", "must be finite and non-negative"));
            }
            total += v;
            cumulative.push(total);
        }
        if !(total > 0.0) {
            return Err(invalid("density", "vanishes identically"));
        }
        Ok(Self {
            grid: *density.grid(),
            cumulative,
        })
    }

    /// Picks a cell by its weight, then jitters uniformly within it.
    pub fn draw(&self, rng: &mut impl RngCore) -> BohmianPoint {
        let total = *self.cumulative.last().expect("non-empty");
        let target = uniform(rng) * total;
        let cell = self
            .cumulative
            .partition_point(|&c| c <= target)
            .min(self.cumulative.len() - 1);
        let h = self.grid.spacing();
        let mut positions = vec![0.0; self.grid.axes()];
        self.grid.point(cell, &mut positions);
        for x in &mut positions {
            *x = self.grid.wrap(*x + (uniform(rng) - 0.5) * h);
        }
        BohmianPoint {
            particles: self.grid.particles(),
            dims: self.grid.dims(),
            positions,
        }
    }
}

/// Draws `count` configurations from an arbitrary density on the
/// configuration grid, member `i` using stream `(seed, i)`.
pub fn sample_from_density(density: &Field<f64>, count: usize, seed: u64) -> Result<Ensemble> {
    if count == 0 {
        return Err(invalid("count", "must be positive"));
    }
    let sampler = ConfigurationSampler::new(density)?;
    let members = (0..count)
        .map(|i| sampler.draw(&mut member_rng(seed, i as u64)))
        .collect();
    Ensemble::new(members, seed)
}

/// Draws `count` configurations from `ρ_N = |Φ|²`.
pub fn sample_initial_positions(psi: &WaveFunction, count: usize, seed: u64) -> Result<Ensemble> {
    sample_from_density(&psi.probability_density(), count, seed)
}

/// Velocity of a configuration, flagged when the node floor forced a
/// displaced evaluation point.
#[derive(Clone, Debug, PartialEq)]
pub struct Velocity {
    pub values: Vec<f64>,
    pub flagged: bool,
}

/// `Φ` and `∇_N Φ` on the grid, ready for repeated velocity queries.
#[derive(Clone, Debug)]
pub struct GuidanceField {
    grid: Grid,
    psi: Vec<Complex64>,
    gradients: Vec<Vec<Complex64>>,
    inverse_masses: Vec<f64>,
    floor: f64,
}

impl GuidanceField {
    /// `masses` holds one mass per particle; an empty slice means unit masses.
    pub fn new(psi: &WaveFunction, masses: &[f64]) -> Result<Self> {
        let grid = *psi.grid();
        let mut spectrum = psi.values().to_vec();
        grid.fft_plan()
            .transform_all(&mut spectrum, grid.axes(), false);
        Self::from_spectrum(psi, &spectrum, masses)
    }

    /// Same as [`GuidanceField::new`] when the caller already holds the
    /// forward transform of `psi`.
    pub fn from_spectrum(
        psi: &WaveFunction,
        spectrum: &[Complex64],
        masses: &[f64],
    ) -> Result<Self> {
        let grid = *psi.grid();
        if spectrum.len() != grid.len() {
            return Err(Error::GridMismatch("spectrum length differs from grid"));
        }
        let inverse_masses = inverse_masses(&grid, masses)?;
        let plan = grid.fft_plan();
        let gradients = (0..grid.axes())
            .map(|axis| {
                let mut buf = spectrum.to_vec();
                crate::grid::apply_derivative(&grid, &mut buf, axis);
                plan.transform_all(&mut buf, grid.axes(), true);
                buf
            })
            .collect();
        let max = psi.values().iter().fold(0.0f64, |m, v| m.max(v.norm_sqr()));
        Ok(Self {
            grid,
            psi: psi.values().to_vec(),
            gradients,
            inverse_masses,
            floor: NODE_FLOOR * max,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn gradient(&self, axis: usize) -> &[Complex64] {
        &self.gradients[axis]
    }

    /// `(Φ(x), ∇Φ(x))` by cubic interpolation.
    fn sample(&self, x: &[f64], out: &mut [Complex64]) {
        let mut arrays: Vec<&[Complex64]> = Vec::with_capacity(1 + self.gradients.len());
        arrays.push(&self.psi);
        for g in &self.gradients {
            arrays.push(g);
        }
        interpolate_many(&self.grid, &arrays, x, out);
    }

    /// `v_a = Im(∂_a Φ / Φ) / m_a` at `point`.
    pub fn velocity(&self, point: &BohmianPoint) -> Result<Velocity> {
        point.check(&self.grid)?;
        let axes = self.grid.axes();
        let mut buf = vec![Complex64::new(0.0, 0.0); 1 + axes];
        let mut x = point.positions().to_vec();
        self.sample(&x, &mut buf);
        let mut flagged = false;
        if buf[0].norm_sqr() < self.floor {
            flagged = true;
            self.escape_node(&mut x, &mut buf);
        }
        let phi = buf[0];
        let values = (0..axes)
            .map(|a| {
                let ratio = buf[1 + a] / phi;
                ratio.im * self.inverse_masses[a]
            })
            .collect();
        Ok(Velocity { values, flagged })
    }

    /// Climbs `∇|Φ|²` in quarter-spacing steps until the density clears
    /// the floor; falls back to the nearest node above the floor.
    fn escape_node(&self, x: &mut [f64], buf: &mut [Complex64]) {
        let step = 0.25 * self.grid.spacing();
        for _ in 0..64 {
            let phi = buf[0];
            let grad: Vec<f64> = buf[1..].iter().map(|g| 2.0 * (phi.conj() * g).re).collect();
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                break;
            }
            for (xi, gi) in x.iter_mut().zip(&grad) {
                *xi = self.grid.wrap(*xi + step * gi / norm);
            }
            self.sample(x, buf);
            if buf[0].norm_sqr() >= self.floor {
                return;
            }
        }
        let mut best = None;
        let mut node = vec![0.0; x.len()];
        for (idx, v) in self.psi.iter().enumerate() {
            if v.norm_sqr() < self.floor {
                continue;
            }
            self.grid.point(idx, &mut node);
            let dist: f64 = node
                .iter()
                .zip(x.iter())
                .map(|(a, b)| {
                    let s = self.grid.min_image(a - b);
                    s * s
                })
                .sum();
            if best.is_none_or(|(d, _)| dist < d) {
                best = Some((dist, idx));
            }
        }
        if let Some((_, idx)) = best {
            self.grid.point(idx, x);
            self.sample(x, buf);
        }
    }
}

fn inverse_masses(grid: &Grid, masses: &[f64]) -> Result<Vec<f64>> {
    if !masses.is_empty() && masses.len() != grid.particles() {
        return Err(invalid("masses", "need one mass per particle"));
    }
    if masses.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
        return Err(invalid("masses", "must be positive and finite"));
    }
    Ok((0..grid.axes())
        .map(|a| 1.0 / masses.get(a / grid.dims()).copied().unwrap_or(1.0))
        .collect())
}

/// De Broglie–Bohm velocity of `point` in `psi`.
pub fn guidance_velocity(
    psi: &WaveFunction,
    point: &BohmianPoint,
    masses: &[f64],
) -> Result<Velocity> {
    GuidanceField::new(psi, masses)?.velocity(point)
}

/// New configuration plus whether any velocity evaluation hit the node floor.
#[derive(Clone, Debug, PartialEq)]
pub struct Advance {
    pub point: BohmianPoint,
    pub flagged: bool,
}

fn displaced(grid: &Grid, p: &BohmianPoint, v: &[f64], dt: f64) -> BohmianPoint {
    let mut out = p.clone();
    for (x, vi) in out.positions.iter_mut().zip(v) {
        *x = grid.wrap(*x + vi * dt);
    }
    out
}

/// `P + v(Φ_start, P)·dt/2`.
pub fn predict_midpoint(p0: &BohmianPoint, start: &GuidanceField, dt: f64) -> Result<Advance> {
    let v = start.velocity(p0)?;
    Ok(Advance {
        point: displaced(&start.grid, p0, &v.values, 0.5 * dt),
        flagged: v.flagged,
    })
}

/// Completes a midpoint step from a predicted midpoint: the velocity there
/// is the average of the fields at the start and the end of the step.
pub fn advance_from_midpoint(
    p0: &BohmianPoint,
    mid: &Advance,
    start: &GuidanceField,
    end: &GuidanceField,
    dt: f64,
) -> Result<Advance> {
    let a = start.velocity(&mid.point)?;
    let b = end.velocity(&mid.point)?;
    let v: Vec<f64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    Ok(Advance {
        point: displaced(&start.grid, p0, &v, dt),
        flagged: mid.flagged || a.flagged || b.flagged,
    })
}

/// Second-order midpoint step of the guidance equation across one field step.
pub fn advance_positions(
    p0: &BohmianPoint,
    start: &GuidanceField,
    end: &GuidanceField,
    dt: f64,
) -> Result<Advance> {
    if start.grid != end.grid {
        return Err(Error::GridMismatch("guidance fields on different grids"));
    }
    let mid = predict_midpoint(p0, start, dt)?;
    advance_from_midpoint(p0, &mid, start, end, dt)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumReport {
    pub h_value: f64,
    pub cell_size: f64,
    pub member_count: usize,
    /// Number of coarse cells per configuration axis.
    pub cells_per_axis: usize,
}

/// Coarse-grained `H = Σ_c p_c ln(p_c / π_c)`, with `p_c` the ensemble
/// fraction and `π_c` the `|Φ|²` mass of coarse cell `c`.
pub fn h_function(
    ensemble: &Ensemble,
    psi: &WaveFunction,
    cell_size: f64,
) -> Result<EquilibriumReport> {
    let grid = *psi.grid();
    let h = grid.spacing();
    if !(cell_size >= h * (1.0 - 1e-12)) {
        return Err(invalid("cell_size", "must be at least one grid spacing"));
    }
    let k = ((cell_size / h + 1e-9).floor() as usize).max(1);
    let m = grid.points();
    let per_axis = m.div_ceil(k);
    let axes = grid.axes();
    let cells = per_axis.pow(axes as u32);
    let dv = grid.cell_volume();

    let mut prob = vec![0.0; cells];
    let mut ix = vec![0usize; axes];
    for (idx, v) in psi.values().iter().enumerate() {
        grid.unravel(idx, &mut ix);
        let c = ix.iter().fold(0, |acc, &i| acc * per_axis + i / k);
        prob[c] += v.norm_sqr() * dv;
    }
    let mut counts = vec![0usize; cells];
    for p in ensemble.members() {
        p.check(&grid)?;
        let c = p
            .positions()
            .iter()
            .fold(0, |acc, &x| acc * per_axis + grid.nearest_node(x) / k);
        counts[c] += 1;
    }
    let r = ensemble.len() as f64;
    let h_value = counts
        .iter()
        .zip(&prob)
        .filter(|(&n, _)| n > 0)
        .map(|(&n, &pi)| {
            let p = n as f64 / r;
            p * (p / pi.max(f64::MIN_POSITIVE)).ln()
        })
        .sum();
    Ok(EquilibriumReport {
        h_value,
        cell_size: k as f64 * h,
        member_count: ensemble.len(),
        cells_per_axis: per_axis,
    })
}

/// Axis-aligned box `lower ≤ x < upper` in configuration space, one bound
/// pair per configuration axis. Infinite bounds are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BranchRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(invalid("branch region", "need lower < upper on every axis"));
        }
        Ok(Self { lower, upper })
    }

    /// Half-space `lo ≤ x_axis < hi` of a single configuration axis.
    pub fn slab(axes: usize, axis: usize, lo: f64, hi: f64) -> Result<Self> {
        let mut lower = vec![f64::NEG_INFINITY; axes];
        let mut upper = vec![f64::INFINITY; axes];
        lower[axis] = lo;
        upper[axis] = hi;
        Self::new(lower, upper)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lower.len()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v < *u)
    }

    /// `∫ρ_N` over the grid nodes inside the region.
    pub fn weight(&self, psi: &WaveFunction) -> f64 {
        let grid = psi.grid();
        let mut x = vec![0.0; grid.axes()];
        let mut sum = 0.0;
        for (idx, v) in psi.values().iter().enumerate() {
            grid.point(idx, &mut x);
            if self.contains(&x) {
                sum += v.norm_sqr();
            }
        }
        sum * grid.cell_volume()
    }
}

/// Index of the first region containing `point`, if any.
pub fn locate_branch(point: &BohmianPoint, regions: &[BranchRegion]) -> Option<usize> {
    regions.iter().position(|r| r.contains(point.positions()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefunction::{product_state, Orbital};

    #[test]
    fn plane_wave_velocity_is_exact() {
        let grid = Grid::new(1, 1, 64, 2.0 * core::f64::consts::PI).unwrap();
        let psi = product_state(grid, &[Orbital::RingMode { index: vec![3] }]).unwrap();
        let p = BohmianPoint::new(1, 1, vec![0.4321]).unwrap();
        let v = guidance_velocity(&psi, &p, &[]).unwrap();
        assert!((v.values[0] - 3.0).abs() < 1e-10);
        assert!(!v.flagged);
        let heavy = guidance_velocity(&psi, &p, &[4.0]).unwrap();
        assert!((heavy.values[0] - 0.75).abs() < 1e-10);
    }

    #[test]
    fn branch_location() {
        let regions = [
            BranchRegion::slab(2, 1, f64::NEG_INFINITY, -1.0).unwrap(),
            BranchRegion::slab(2, 1, 1.0, f64::INFINITY).unwrap(),
        ];
        let inside = BohmianPoint::new(2, 1, vec![0.3, -2.0]).unwrap();
        let gap = BohmianPoint::new(2, 1, vec![0.3, 0.0]).unwrap();
        assert_eq!(locate_branch(&inside, &regions), Some(0));
        assert_eq!(locate_branch(&gap, &regions), None);
    }

    #[test]
    fn single_cell_h_function() {
        let grid = Grid::new(1, 1, 64, 8.0).unwrap();
        let psi = WaveFunction::from_fn(grid, |_| Complex64::new(1.0, 0.0))
            .normalized()
            .unwrap();
        let members = (0..10)
            .map(|_| BohmianPoint::new(1, 1, vec![0.01]).unwrap())
            .collect();
        let ens = Ensemble::new(members, 0).unwrap();
        let report = h_function(&ens, &psi, 1.0).unwrap();
        // One coarse cell of width 1 in a uniform box of length 8.
        assert!((report.h_value - 8f64.ln()).abs() < 1e-12);
        assert_eq!(report.cells_per_axis, 8);
    }

    #[test]
    fn member_streams_are_independent_of_count() {
        let grid = Grid::new(1, 1, 32, 8.0).unwrap();
        let psi = product_state(grid, &[Orbital::gaussian(&[0.0], 1.0)]).unwrap();
        let a = sample_initial_positions(&psi, 5, 9).unwrap();
        let b = sample_initial_positions(&psi, 50, 9).unwrap();
        assert_eq!(a.members(), &b.members()[..5]);
        assert!(sample_initial_positions(&psi, 0, 9).is_err());
    }
}
