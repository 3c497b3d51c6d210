//! N-particle wave functions and the analytic orbitals used to build them.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid};

/// Complex amplitudes over the configuration grid plus a time stamp.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    field: Field<Complex64>,
    time: f64,
}

impl WaveFunction {
    pub fn new(field: Field<Complex64>) -> Result<Self> {
        if field.rank() != 1 {
            return Err(Error::GridMismatch("wave function must be a scalar field"));
        }
        Ok(Self { field, time: 0.0 })
    }

    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        Self::new(Field::from_values(grid, 1, values)?)
    }

    pub fn from_fn(grid: Grid, f: impl FnMut(&[f64]) -> Complex64) -> Self {
        Self {
            field: Field::from_fn(grid, f),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn field(&self) -> &Field<Complex64> {
        &self.field
    }

    pub fn values(&self) -> &[Complex64] {
        self.field.values()
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        self.field.values_mut()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    /// `∫|Φ|²` over configuration space.
    pub fn norm_sqr(&self) -> f64 {
        self.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid().cell_volume()
    }

    /// Rescales to unit norm and returns the norm before rescaling.
    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm_sqr().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NonFinite {
                time: self.time,
                what: "wave-function norm",
            });
        }
        let s = 1.0 / n;
        for v in self.values_mut() {
            *v *= s;
        }
        Ok(n)
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// Configuration-space probability density `ρ_N = |Φ|²`.
    pub fn probability_density(&self) -> Field<f64> {
        let values = self.values().iter().map(|v| v.norm_sqr()).collect();
        Field::from_values(*self.grid(), 1, values).expect("same grid")
    }

    /// Normalized linear combination `Σ c_i Φ_i` of same-grid states.
    pub fn superpose(terms: &[(Complex64, &WaveFunction)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| invalid("terms", "need at least one component"))?;
        let grid = *first.1.grid();
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (c, psi) in terms {
            if *psi.grid() != grid {
                return Err(Error::GridMismatch(
                    "superposed states live on different grids",
                ));
            }
            for (acc, v) in values.iter_mut().zip(psi.values()) {
                *acc += c * v;
            }
        }
        WaveFunction::from_values(grid, values)?.normalized()
    }

    /// Swaps particles `a` and `b`.
    pub fn exchanged(&self, a: usize, b: usize) -> Self {
        let grid = *self.grid();
        let d = grid.dims();
        let mut ix = vec![0usize; grid.axes()];
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (idx, v) in self.values().iter().enumerate() {
            grid.unravel(idx, &mut ix);
            for c in 0..d {
                ix.swap(a * d + c, b * d + c);
            }
            values[grid.ravel(&ix)] = *v;
        }
        Self {
            field: Field::from_values(grid, 1, values).expect("same grid"),
            time: self.time,
        }
    }
}

/// Analytic single-particle wave functions in `d` dimensions.
#[derive(Clone, Debug, PartialEq)]
pub enum Orbital {
    /// Gaussian packet with position standard deviation `width`, mean
    /// momentum `momentum` and quadratic phase `exp(i chirp |x-c|²/2)`.
    Gaussian {
        center: Vec<f64>,
        width: f64,
        momentum: Vec<f64>,
        chirp: f64,
    },
    /// Plane wave `exp(i 2π n·x / L) / L^(d/2)` on the periodic box.
    RingMode { index: Vec<i64> },
}

impl Orbital {
    pub fn gaussian(center: &[f64], width: f64) -> Self {
        Orbital::Gaussian {
            center: center.to_vec(),
            width,
            momentum: vec![0.0; center.len()],
            chirp: 0.0,
        }
    }

    pub fn moving_gaussian(center: &[f64], width: f64, momentum: &[f64]) -> Self {
        Orbital::Gaussian {
            center: center.to_vec(),
            width,
            momentum: momentum.to_vec(),
            chirp: 0.0,
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            Orbital::Gaussian { center, .. } => center.len(),
            Orbital::RingMode { index } => index.len(),
        }
    }

    /// Value at `r` on a periodic grid (minimum-image displacement from
    /// the packet centre).
    pub fn value(&self, grid: &Grid, r: &[f64]) -> Complex64 {
        match self {
            Orbital::Gaussian {
                center,
                width,
                momentum,
                chirp,
            } => {
                let norm = (2.0 * PI * width * width).powf(-0.25 * r.len() as f64);
                let mut exponent = Complex64::new(0.0, 0.0);
                for c in 0..r.len() {
                    let s = grid.min_image(r[c] - center[c]);
                    exponent += Complex64::new(
                        -s * s / (4.0 * width * width),
                        momentum[c] * s + 0.5 * chirp * s * s,
                    );
                }
                exponent.exp() * norm
            }
            Orbital::RingMode { index } => {
                let l = grid.extent();
                let phase: f64 = index
                    .iter()
                    .zip(r)
                    .map(|(&n, &x)| 2.0 * PI * n as f64 * x / l)
                    .sum();
                Complex64::from_polar(l.powf(-0.5 * r.len() as f64), phase)
            }
        }
    }
}

/// Product state `φ_1(r_1) φ_2(r_2) … φ_N(r_N)`, normalized on the grid.
pub fn product_state(grid: Grid, orbitals: &[Orbital]) -> Result<WaveFunction> {
    check_orbitals(&grid, orbitals)?;
    let d = grid.dims();
    WaveFunction::from_fn(grid, |x| {
        orbitals
            .iter()
            .enumerate()
            .map(|(n, o)| o.value(&grid, &x[n * d..(n + 1) * d]))
            .product()
    })
    .normalized()
}

/// Bosonic symmetrization of a product state (permanent over the orbitals).
pub fn symmetrized_state(grid: Grid, orbitals: &[Orbital]) -> Result<WaveFunction> {
    check_orbitals(&grid, orbitals)?;
    let n = orbitals.len();
    let perms = permutations(n);
    let d = grid.dims();
    let mut cache = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    WaveFunction::from_fn(grid, |x| {
        for (i, o) in orbitals.iter().enumerate() {
            for p in 0..n {
                cache[i][p] = o.value(&grid, &x[p * d..(p + 1) * d]);
            }
        }
        perms
            .iter()
            .map(|perm| {
                perm.iter()
                    .enumerate()
                    .map(|(p, &i)| cache[i][p])
                    .product::<Complex64>()
            })
            .sum()
    })
    .normalized()
}

fn check_orbitals(grid: &Grid, orbitals: &[Orbital]) -> Result<()> {
    if orbitals.len() != grid.particles() {
        return Err(invalid("orbitals", "need one orbital per particle"));
    }
    if orbitals.iter().any(|o| o.dims() != grid.dims()) {
        return Err(invalid("orbitals", "orbital dimension differs from grid"));
    }
    Ok(())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
