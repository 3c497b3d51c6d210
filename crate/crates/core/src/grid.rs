//! Uniform periodic grids, spectral differentiation, quadrature and cubic
//! off-grid interpolation.
//!
//! A [`Grid`] describes `N` particles in `d` spatial dimensions, i.e. a
//! hypercube of `N·d` axes with `M` points each. Arrays are row-major with
//! particle `n`'s `d` axes contiguous, so the physical-space index of
//! particle `n` can be read off a configuration index with a division and
//! a modulus (see [`Grid::particle_cell`]).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fft::FftPlan;

/// Default memory budget for a single complex amplitude array (2 GiB).
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

const COMPLEX_BYTES: u128 = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dims: usize,
    particles: usize,
    points: usize,
    extent: f64,
}

impl Grid {
    /// Builds a grid under the default 2 GiB budget.
    pub fn new(dims: usize, particles: usize, points: usize, extent: f64) -> Result<Self> {
        Self::with_budget(dims, particles, points, extent, DEFAULT_MEMORY_BUDGET)
    }

    pub fn with_budget(
        dims: usize,
        particles: usize,
        points: usize,
        extent: f64,
        budget_bytes: u64,
    ) -> Result<Self> {
        if !(1..=3).contains(&dims) {
            return Err(invalid("dims", "spatial dimension must be 1, 2 or 3"));
        }
        if particles == 0 {
            return Err(invalid("particles", "need at least one particle"));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(points));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(invalid("extent", "must be positive and finite"));
        }
        let axes = (dims * particles) as u32;
        let required = (points as u128)
            .checked_pow(axes)
            .and_then(|n| n.checked_mul(COMPLEX_BYTES))
            .unwrap_or(u128::MAX);
        if required > budget_bytes as u128 {
            return Err(Error::BudgetExceeded {
                required,
                budget: budget_bytes as u128,
            });
        }
        Ok(Self {
            dims,
            particles,
            points,
            extent,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.points as f64
    }

    /// Number of axes, `N·d`.
    pub fn axes(&self) -> usize {
        self.dims * self.particles
    }

    /// Total number of grid points, `M^(N·d)`.
    pub fn len(&self) -> usize {
        self.points.pow(self.axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `spacing^(N·d)`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.axes() as i32)
    }

    /// The single-particle grid in physical space.
    pub fn physical(&self) -> Grid {
        Grid {
            particles: 1,
            ..*self
        }
    }

    /// Coordinate of node `i` along any axis, spanning `[-L/2, L/2)`.
    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.extent + i as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.coordinate(i)).collect()
    }

    /// Stride (in flat index units) of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.points.pow((self.axes() - 1 - axis) as u32)
    }

    /// Node index along `axis` of flat index `idx`.
    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        (idx / self.stride(axis)) % self.points
    }

    /// Writes the per-axis node indices of flat index `idx`.
    pub fn unravel(&self, mut idx: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = idx % self.points;
            idx /= self.points;
        }
    }

    pub fn ravel(&self, indices: &[usize]) -> usize {
        indices
            .iter()
            .fold(0, |acc, &i| acc * self.points + (i % self.points))
    }

    /// Flat physical-grid index of particle `n` for configuration index `idx`.
    pub fn particle_cell(&self, idx: usize, n: usize) -> usize {
        let cell = self.points.pow(self.dims as u32);
        let shift = cell.pow((self.particles - 1 - n) as u32);
        (idx / shift) % cell
    }

    /// Coordinates of every axis at flat index `idx`.
    pub fn point(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for slot in out.iter_mut().rev() {
            *slot = self.coordinate(rem % self.points);
            rem /= self.points;
        }
    }

    /// Angular wavenumber of FFT bin `i` for first derivatives; the
    /// Nyquist bin is zeroed.
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        let m = self.points;
        let j = if i < m / 2 {
            i as f64
        } else if i == m / 2 {
            0.0
        } else {
            i as f64 - m as f64
        };
        2.0 * PI * j / self.extent
    }

    /// Angular wavenumber of FFT bin `i` for the Laplacian (Nyquist kept).
    pub fn wavenumber(&self, i: usize) -> f64 {
        let m = self.points;
        let j = if i < m / 2 {
            i as f64
        } else {
            i as f64 - m as f64
        };
        2.0 * PI * j / self.extent
    }

    /// Largest resolved wavenumber, `pi / spacing`.
    pub fn max_wavenumber(&self) -> f64 {
        PI / self.spacing()
    }

    /// Wraps a coordinate into `[-L/2, L/2)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.extent;
        let mut y = (x + 0.5 * l) % l;
        if y < 0.0 {
            y += l;
        }
        if y >= l {
            y -= l;
        }
        y - 0.5 * l
    }

    /// Minimum-image displacement in `[-L/2, L/2)`.
    pub fn min_image(&self, s: f64) -> f64 {
        self.wrap(s)
    }

    /// Index of the node nearest to coordinate `x` (periodic).
    pub fn nearest_node(&self, x: f64) -> usize {
        let s = (self.wrap(x) + 0.5 * self.extent) / self.spacing();
        (s.round() as usize) % self.points
    }

    pub fn fft_plan(&self) -> FftPlan {
        FftPlan::new(self.points).expect("grid points are a power of two")
    }
}

/// Scalar types a [`Field`] can hold.
pub trait FieldValue:
    Copy + Default + PartialEq + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn to_complex(self) -> Complex64;
    fn from_complex(c: Complex64) -> Self;
    fn magnitude(self) -> f64;
}

impl FieldValue for f64 {
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_complex(c: Complex64) -> Self {
        c.re
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl FieldValue for Complex64 {
    fn to_complex(self) -> Complex64 {
        self
    }
    fn from_complex(c: Complex64) -> Self {
        c
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Values sampled on every node of a grid; `rank` components per node,
/// stored component-major (each component is a contiguous block).
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: Grid,
    rank: usize,
    values: Vec<T>,
}

impl<T: FieldValue> Field<T> {
    pub fn zeros(grid: Grid, rank: usize) -> Self {
        Self {
            grid,
            rank,
            values: vec![T::default(); grid.len() * rank],
        }
    }

    pub fn from_values(grid: Grid, rank: usize, values: Vec<T>) -> Result<Self> {
        if rank == 0 || values.len() != grid.len() * rank {
            return Err(Error::GridMismatch("value count does not match grid"));
        }
        Ok(Self { grid, rank, values })
    }

    /// Scalar field from a function of the node coordinates.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> T) -> Self {
        let mut x = vec![0.0; grid.axes()];
        let values = (0..grid.len())
            .map(|idx| {
                grid.point(idx, &mut x);
                f(&x)
            })
            .collect();
        Self {
            grid,
            rank: 1,
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[T] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.grid.len();
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn max_magnitude(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0, |acc: f64, v| acc.max(v.magnitude()))
    }
}

/// Partial derivative along `axis` by Fourier multiplication. Exact for
/// modes resolved on the periodic grid; the Nyquist mode is discarded.
pub fn spectral_gradient<T: FieldValue>(field: &Field<T>, axis: usize) -> Result<Field<T>> {
    let grid = field.grid;
    if axis >= grid.axes() {
        return Err(Error::AxisOutOfRange {
            axis,
            axes: grid.axes(),
        });
    }
    let plan = grid.fft_plan();
    let mut out = Vec::with_capacity(field.values.len());
    for c in 0..field.rank {
        let mut buf: Vec<Complex64> = field.component(c).iter().map(|v| v.to_complex()).collect();
        plan.transform_axis(&mut buf, grid.axes(), axis, false);
        apply_derivative(&grid, &mut buf, axis);
        plan.transform_axis(&mut buf, grid.axes(), axis, true);
        out.extend(buf.into_iter().map(T::from_complex));
    }
    Ok(Field {
        grid,
        rank: field.rank,
        values: out,
    })
}

/// Multiplies an array already transformed along `axis` by `i k`.
pub(crate) fn apply_derivative(grid: &Grid, buf: &mut [Complex64], axis: usize) {
    let stride = grid.stride(axis);
    let m = grid.points();
    for (idx, v) in buf.iter_mut().enumerate() {
        let k = grid.derivative_wavenumber((idx / stride) % m);
        *v = Complex64::new(-k * v.im, k * v.re);
    }
}

/// Riemann sum of every component times the cell volume.
pub fn integrate<T: FieldValue>(field: &Field<T>) -> Vec<T> {
    let dv = field.grid.cell_volume();
    (0..field.rank)
        .map(|c| {
            field
                .component(c)
                .iter()
                .fold(T::default(), |acc, &v| acc + v)
                * dv
        })
        .collect()
}

/// Integral of a scalar field.
pub fn integrate_scalar<T: FieldValue>(field: &Field<T>) -> T {
    integrate(field)[0]
}

/// Lagrange weights of the four nodes `i-1, i, i+1, i+2` at fraction `t`.
fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Base node and weights for one coordinate. Coordinates within 1e-12 of
/// a node snap onto it so that node queries are reproduced bit-exactly.
fn axis_stencil(grid: &Grid, x: f64) -> (usize, [f64; 4]) {
    let m = grid.points();
    let s = (grid.wrap(x) + 0.5 * grid.extent()) / grid.spacing();
    let mut base = s.floor();
    let mut t = s - base;
    if t < 1e-12 {
        t = 0.0;
    } else if t > 1.0 - 1e-12 {
        t = 0.0;
        base += 1.0;
    }
    ((base as usize) % m, cubic_weights(t))
}

/// Periodic tensor-product cubic interpolation of every component at
/// `point` (one coordinate per grid axis; wrapped if outside).
pub fn interpolate<T: FieldValue>(field: &Field<T>, point: &[f64]) -> Result<Vec<T>> {
    let grid = field.grid;
    if point.len() != grid.axes() {
        return Err(Error::GridMismatch(
            "point dimension differs from grid axes",
        ));
    }
    let stencils: Vec<(usize, [f64; 4])> = point.iter().map(|&x| axis_stencil(&grid, x)).collect();
    let mut out = vec![T::default(); field.rank];
    for_each_stencil_node(&grid, &stencils, |idx, w| {
        for (c, acc) in out.iter_mut().enumerate() {
            *acc = *acc + field.component(c)[idx] * w;
        }
    });
    Ok(out)
}

/// Scalar convenience wrapper around [`interpolate`].
pub fn interpolate_scalar<T: FieldValue>(field: &Field<T>, point: &[f64]) -> Result<T> {
    Ok(interpolate(field, point)?[0])
}

/// Interpolates several same-grid scalar arrays at one point in a single
/// stencil pass.
pub(crate) fn interpolate_many<T: FieldValue>(
    grid: &Grid,
    arrays: &[&[T]],
    point: &[f64],
    out: &mut [T],
) {
    let stencils: Vec<(usize, [f64; 4])> = point.iter().map(|&x| axis_stencil(grid, x)).collect();
    for v in out.iter_mut() {
        *v = T::default();
    }
    for_each_stencil_node(grid, &stencils, |idx, w| {
        for (acc, arr) in out.iter_mut().zip(arrays) {
            *acc = *acc + arr[idx] * w;
        }
    });
}

fn for_each_stencil_node(
    grid: &Grid,
    stencils: &[(usize, [f64; 4])],
    mut visit: impl FnMut(usize, f64),
) {
    let m = grid.points();
    let axes = stencils.len();
    let mut counter = vec![0usize; axes];
    loop {
        let mut weight = 1.0;
        let mut idx = 0;
        for (a, &(base, ref w)) in stencils.iter().enumerate() {
            weight *= w[counter[a]];
            idx = idx * m + (base + m + counter[a] - 1) % m;
        }
        if weight != 0.0 {
            visit(idx, weight);
        }
        let mut a = axes;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            counter[a] += 1;
            if counter[a] < 4 {
                break;
            }
            counter[a] = 0;
        }
    }
}
