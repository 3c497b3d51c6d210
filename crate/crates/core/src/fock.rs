//! Number states of orthonormal modes: analytic correlation functions, a
//! brute-force occupation-basis oracle, correlation lengths, rates without
//! pair storage and the SI collapse-timescale estimate.
//!
//! With `X_kl(r) = φ_k*(r) φ_l(r)` and `c_kl = n_k (n_l + 1)` the density
//! correlation over the listed modes is
//! `F(r,r′) = Σ_{k≠l} c_kl X_kl(r) X_kl(r′)*`. It is complex when
//! occupations differ; its real part is the symmetrized correlation
//! `½⟨D D′ + D′ D⟩ − ⟨D⟩⟨D′⟩`, which is what [`CorrelationData`] stores.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::gravity::GravitySample;
use crate::grid::{Field, Grid};
use crate::observables::{CorrelationData, CorrelationKind, RateField, RateMethod};

/// Overlap tolerance for orthonormality on the grid.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum ModeFamily {
    /// Plane waves `exp(i 2π n·x/Λ) / Λ^(d/2)` with `Λ` the grid extent.
    Ring,
    /// Hermite functions of width `width` centred at the origin, all
    /// multiplied by the common phase `exp(i boost·x)`.
    Oscillator { width: f64, boost: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeSet {
    family: ModeFamily,
    dims: usize,
    indices: Vec<Vec<i64>>,
    occupations: Vec<u32>,
}

impl ModeSet {
    pub fn new(
        family: ModeFamily,
        dims: usize,
        indices: Vec<Vec<i64>>,
        occupations: Vec<u32>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dims) {
            return Err(invalid("dims", "spatial dimension must be 1, 2 or 3"));
        }
        if indices.is_empty() || indices.len() != occupations.len() {
            return Err(invalid("modes", "need one occupation per mode"));
        }
        if indices.iter().any(|i| i.len() != dims) {
            return Err(invalid("modes", "mode index length differs from dimension"));
        }
        for (a, ia) in indices.iter().enumerate() {
            if indices[..a].contains(ia) {
                return Err(invalid("modes", "repeated mode index"));
            }
        }
        if let ModeFamily::Oscillator { width, boost } = &family {
            if !(*width > 0.0) || boost.len() != dims {
                return Err(invalid("oscillator", "need width > 0 and a d-vector boost"));
            }
            if indices.iter().flatten().any(|&n| n < 0) {
                return Err(invalid("oscillator", "quantum numbers must be >= 0"));
            }
        }
        Ok(Self {
            family,
            dims,
            indices,
            occupations,
        })
    }

    /// Ring modes in one dimension with the given integer wavenumbers.
    pub fn ring_1d(wavenumbers: &[i64], occupations: &[u32]) -> Result<Self> {
        Self::new(
            ModeFamily::Ring,
            1,
            wavenumbers.iter().map(|&n| vec![n]).collect(),
            occupations.to_vec(),
        )
    }

    pub fn family(&self) -> &ModeFamily {
        &self.family
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<i64>] {
        &self.indices
    }

    pub fn occupations(&self) -> &[u32] {
        &self.occupations
    }

    /// `N = Σ n_k`.
    pub fn particles(&self) -> u32 {
        self.occupations.iter().sum()
    }

    /// `(φ_k(x), ∇φ_k(x))` for mode `k`.
    pub fn mode(&self, k: usize, grid: &Grid, x: &[f64]) -> (Complex64, Vec<Complex64>) {
        let idx = &self.indices[k];
        match &self.family {
            ModeFamily::Ring => {
                let l = grid.extent();
                let phase: f64 = idx
                    .iter()
                    .zip(x)
                    .map(|(&n, &xi)| 2.0 * PI * n as f64 * xi / l)
                    .sum();
                let phi = Complex64::from_polar(l.powf(-0.5 * self.dims as f64), phase);
                let grad = idx
                    .iter()
                    .map(|&n| phi * Complex64::new(0.0, 2.0 * PI * n as f64 / l))
                    .collect();
                (phi, grad)
            }
            ModeFamily::Oscillator { width, boost } => {
                let mut factors = Vec::with_capacity(self.dims);
                let mut phase = 0.0;
                for c in 0..self.dims {
                    let s = grid.min_image(x[c]);
                    factors.push(hermite_function(idx[c] as usize, s, *width));
                    phase += boost[c] * s;
                }
                let carrier = Complex64::from_polar(1.0, phase);
                let value: f64 = factors.iter().map(|f| f.0).product();
                let phi = carrier * value;
                let grad = (0..self.dims)
                    .map(|c| {
                        let others: f64 = factors
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| *j != c)
                            .map(|(_, f)| f.0)
                            .product();
                        carrier * Complex64::new(factors[c].1 * others, boost[c] * value)
                    })
                    .collect();
                (phi, grad)
            }
        }
    }

    /// Mode values (and gradients, component-major) on the physical grid,
    /// after checking orthonormality under grid quadrature.
    pub fn sample(&self, grid: &Grid) -> Result<SampledModes> {
        let grid = grid.physical();
        if grid.dims() != self.dims {
            return Err(Error::GridMismatch("mode dimension differs from grid"));
        }
        let p = grid.len();
        let d = self.dims;
        let mut x = vec![0.0; d];
        let mut values = Vec::with_capacity(self.len());
        let mut gradients = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            let mut v = Vec::with_capacity(p);
            let mut g = vec![Complex64::new(0.0, 0.0); d * p];
            for r in 0..p {
                grid.point(r, &mut x);
                let (phi, grad) = self.mode(k, &grid, &x);
                v.push(phi);
                for c in 0..d {
                    g[c * p + r] = grad[c];
                }
            }
            values.push(v);
            gradients.push(g);
        }
        let dv = grid.cell_volume();
        for k in 0..self.len() {
            for l in 0..=k {
                let overlap: Complex64 = values[k]
                    .iter()
                    .zip(&values[l])
                    .map(|(a, b)| a.conj() * b)
                    .sum::<Complex64>()
                    * dv;
                let target = if k == l { 1.0 } else { 0.0 };
                let err = (overlap - target).norm();
                if !(err < ORTHONORMAL_TOLERANCE) {
                    return Err(Error::NonOrthonormal { k, l, overlap: err });
                }
            }
        }
        Ok(SampledModes {
            grid,
            values,
            gradients,
        })
    }
}

/// Normalized Hermite function `ψ_n(s)` of width `σ` and its derivative.
fn hermite_function(n: usize, s: f64, sigma: f64) -> (f64, f64) {
    let xi = s / sigma;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) / sigma.sqrt() * (-0.5 * xi * xi).exp();
    for j in 0..n {
        let next = (2.0 / (j as f64 + 1.0)).sqrt() * xi * cur
            - (j as f64 / (j as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    // ψ_n' = (√(n/2) ψ_{n−1} − √((n+1)/2) ψ_{n+1}) / σ
    let next =
        (2.0 / (n as f64 + 1.0)).sqrt() * xi * cur - (n as f64 / (n as f64 + 1.0)).sqrt() * prev;
    let deriv = ((n as f64 / 2.0).sqrt() * prev - ((n as f64 + 1.0) / 2.0).sqrt() * next) / sigma;
    (cur, deriv)
}

/// Mode functions sampled on a physical grid.
#[derive(Clone, Debug)]
pub struct SampledModes {
    grid: Grid,
    values: Vec<Vec<Complex64>>,
    gradients: Vec<Vec<Complex64>>,
}

impl SampledModes {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self, k: usize) -> &[Complex64] {
        &self.values[k]
    }

    fn x(&self, k: usize, l: usize, r: usize) -> Complex64 {
        self.values[k][r].conj() * self.values[l][r]
    }

    /// `j_kl = (φ_k* ∂φ_l − ∂φ_k* φ_l) / 2i` along component `c`.
    fn j(&self, k: usize, l: usize, c: usize, r: usize) -> Complex64 {
        let p = self.grid.len();
        let a = self.values[k][r].conj() * self.gradients[l][c * p + r];
        let b = self.gradients[k][c * p + r].conj() * self.values[l][r];
        (a - b) * Complex64::new(0.0, -0.5)
    }
}

fn weights(ms: &ModeSet) -> Vec<(usize, usize, f64)> {
    let n = ms.occupations();
    let mut out = Vec::new();
    for k in 0..ms.len() {
        for l in 0..ms.len() {
            if k != l {
                let c = n[k] as f64 * (n[l] as f64 + 1.0);
                if c != 0.0 {
                    out.push((k, l, c));
                }
            }
        }
    }
    out
}

fn mode_density(ms: &ModeSet, modes: &SampledModes) -> Vec<f64> {
    (0..modes.grid.len())
        .map(|r| {
            ms.occupations()
                .iter()
                .enumerate()
                .map(|(k, &n)| n as f64 * modes.values[k][r].norm_sqr())
                .sum()
        })
        .collect()
}

fn pair_count(grid: &Grid) -> Result<usize> {
    let p = grid.physical().len();
    let pairs = p.saturating_mul(p);
    if pairs > crate::observables::PAIR_LIMIT {
        return Err(Error::PairBudgetExceeded {
            pairs,
            limit: crate::observables::PAIR_LIMIT,
        });
    }
    Ok(p)
}

/// Complex `Σ_{k≠l} n_k (n_l+1) X_kl(r) X_kl(r′)*`, row-major over `(r, r′)`.
pub fn fock_correlation_complex(ms: &ModeSet, grid: &Grid) -> Result<Vec<Complex64>> {
    let p = pair_count(grid)?;
    let modes = ms.sample(grid)?;
    let mut out = vec![Complex64::new(0.0, 0.0); p * p];
    for (k, l, c) in weights(ms) {
        let x: Vec<Complex64> = (0..p).map(|r| modes.x(k, l, r)).collect();
        for r in 0..p {
            let a = x[r] * c;
            for rp in 0..p {
                out[r * p + rp] += a * x[rp].conj();
            }
        }
    }
    Ok(out)
}

/// Symmetrized density correlation of the number state (no contact term).
pub fn fock_correlation(ms: &ModeSet, grid: &Grid) -> Result<CorrelationData> {
    let values = fock_correlation_complex(ms, grid)?
        .into_iter()
        .map(|v| v.re)
        .collect();
    let modes = ms.sample(grid)?;
    let p = modes.grid.len();
    CorrelationData::from_parts(
        CorrelationKind::Density,
        modes.grid,
        values,
        vec![0.0; p],
        Some(mode_density(ms, &modes)),
    )
}

/// `K_i(r,r′) = Re Σ_{k≠l} n_k (n_l+1) j^i_kl(r) X_kl(r′)*`, the
/// symmetrized current-density correlation of the number state.
pub fn fock_current_correlation(ms: &ModeSet, grid: &Grid) -> Result<CorrelationData> {
    let p = pair_count(grid)?;
    let modes = ms.sample(grid)?;
    let d = ms.dims();
    let mut values = vec![0.0; d * p * p];
    for (k, l, c) in weights(ms) {
        let x: Vec<Complex64> = (0..p).map(|r| modes.x(k, l, r).conj()).collect();
        for i in 0..d {
            for r in 0..p {
                let a = modes.j(k, l, i, r) * c;
                let row = &mut values[(i * p + r) * p..(i * p + r + 1) * p];
                for (v, xr) in row.iter_mut().zip(&x) {
                    *v += (a * xr).re;
                }
            }
        }
    }
    CorrelationData::from_parts(
        CorrelationKind::Current,
        modes.grid,
        values,
        vec![0.0; d * p],
        Some(mode_density(ms, &modes)),
    )
}

/// Occupation basis of the `n`-particle sector over `modes` modes, in
/// lexicographic order.
fn sector(modes: usize, n: u32) -> Vec<Vec<u32>> {
    if modes == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in (0..=n).rev() {
        for mut rest in sector(modes - 1, n - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Dense real matrix, row-major.
struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    fn mul(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.data[i * self.cols + j] * v[j])
                    .sum()
            })
            .collect()
    }
}

/// Largest mode count and particle number the oracle accepts.
pub const ORACLE_MAX_MODES: usize = 4;
pub const ORACLE_MAX_PARTICLES: u32 = 6;

/// `E_kl Φ₀ = a_k† a_l Φ₀` for every mode pair, with the ladder operators
/// built as explicit matrices between the `N` and `N−1` sectors.
fn oracle_vectors(ms: &ModeSet) -> Result<(Vec<Vec<f64>>, usize)> {
    let p = ms.len();
    let n = ms.particles();
    if p > ORACLE_MAX_MODES || n > ORACLE_MAX_PARTICLES {
        return Err(Error::TruncationExceeded {
            modes: p,
            particles: n as usize,
        });
    }
    let upper = sector(p, n);
    let lower = if n > 0 { sector(p, n - 1) } else { Vec::new() };
    let annihilators: Vec<Matrix> = (0..p)
        .map(|l| {
            let mut a = Matrix::zeros(lower.len(), upper.len());
            for (s, occ) in upper.iter().enumerate() {
                if occ[l] > 0 {
                    let mut t = occ.clone();
                    t[l] -= 1;
                    let row = lower
                        .iter()
                        .position(|b| *b == t)
                        .expect("state in lower sector");
                    a.data[row * upper.len() + s] = (occ[l] as f64).sqrt();
                }
            }
            a
        })
        .collect();
    let creators: Vec<Matrix> = annihilators.iter().map(Matrix::transpose).collect();
    let start = upper
        .iter()
        .position(|b| b.as_slice() == ms.occupations())
        .expect("occupations lie in their own sector");
    let mut phi0 = vec![0.0; upper.len()];
    phi0[start] = 1.0;
    let mut out = Vec::with_capacity(p * p);
    for c in &creators {
        for a in &annihilators {
            out.push(c.mul(a).apply(&phi0));
        }
    }
    Ok((out, start))
}

fn combine(
    vectors: &[Vec<f64>],
    coeff: impl Fn(usize, usize) -> Complex64,
    p: usize,
) -> Vec<Complex64> {
    let dim = vectors[0].len();
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for k in 0..p {
        for l in 0..p {
            let c = coeff(k, l);
            for (o, v) in out.iter_mut().zip(&vectors[k * p + l]) {
                *o += c * v;
            }
        }
    }
    out
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `⟨Φ₀|D(r)D(r′)|Φ₀⟩ − ⟨D(r)⟩⟨D(r′)⟩` by explicit operator algebra in the
/// occupation basis, with `D(r) = Σ_kl X_kl(r) a_k† a_l`. Row-major over
/// `(r, r′)`.
pub fn fock_correlation_oracle_complex(ms: &ModeSet, grid: &Grid) -> Result<Vec<Complex64>> {
    let (vectors, start) = oracle_vectors(ms)?;
    let p = pair_count(grid)?;
    let modes = ms.sample(grid)?;
    let m = ms.len();
    let u: Vec<Vec<Complex64>> = (0..p)
        .map(|r| combine(&vectors, |k, l| modes.x(k, l, r), m))
        .collect();
    let mut out = Vec::with_capacity(p * p);
    for r in 0..p {
        for rp in 0..p {
            out.push(inner(&u[r], &u[rp]) - u[r][start] * u[rp][start]);
        }
    }
    Ok(out)
}

/// Symmetrized oracle correlation (real part of the complex one).
pub fn fock_correlation_oracle(ms: &ModeSet, grid: &Grid) -> Result<CorrelationData> {
    let values = fock_correlation_oracle_complex(ms, grid)?
        .into_iter()
        .map(|v| v.re)
        .collect();
    let modes = ms.sample(grid)?;
    let p = modes.grid.len();
    CorrelationData::from_parts(
        CorrelationKind::Density,
        modes.grid,
        values,
        vec![0.0; p],
        Some(mode_density(ms, &modes)),
    )
}

/// `½⟨J(r)D(r′) + D(r′)J(r)⟩ − ⟨J(r)⟩⟨D(r′)⟩` by the same operator algebra,
/// with `J(r) = Σ_kl j_kl(r) a_k† a_l`.
pub fn fock_current_correlation_oracle(ms: &ModeSet, grid: &Grid) -> Result<CorrelationData> {
    let (vectors, start) = oracle_vectors(ms)?;
    let p = pair_count(grid)?;
    let modes = ms.sample(grid)?;
    let m = ms.len();
    let d = ms.dims();
    let u: Vec<Vec<Complex64>> = (0..p)
        .map(|r| combine(&vectors, |k, l| modes.x(k, l, r), m))
        .collect();
    let mut values = vec![0.0; d * p * p];
    for i in 0..d {
        for r in 0..p {
            let v = combine(&vectors, |k, l| modes.j(k, l, i, r), m);
            for rp in 0..p {
                let jd = inner(&v, &u[rp]);
                values[(i * p + r) * p + rp] = jd.re - (v[start] * u[rp][start]).re;
            }
        }
    }
    CorrelationData::from_parts(
        CorrelationKind::Current,
        modes.grid,
        values,
        vec![0.0; d * p],
        Some(mode_density(ms, &modes)),
    )
}

/// Terms separating the number-state `F` from the first-quantized grid `F`
/// of the same state: `C(r,r′) = ⟨D(r)⟩ δ(r − r′) − Re Σ_{k,l} n_k X_kl(r) X_kl(r′)*`.
/// The delta sits in the contact weights.
pub fn contact_bookkeeping(ms: &ModeSet, grid: &Grid) -> Result<CorrelationData> {
    let p = pair_count(grid)?;
    let modes = ms.sample(grid)?;
    let n = ms.occupations();
    let mut values = vec![0.0; p * p];
    for (k, &nk) in n.iter().enumerate() {
        for l in 0..ms.len() {
            let x: Vec<Complex64> = (0..p).map(|r| modes.x(k, l, r)).collect();
            for (r, xr) in x.iter().enumerate() {
                for (rp, xrp) in x.iter().enumerate() {
                    values[r * p + rp] -= nk as f64 * (xr * xrp.conj()).re;
                }
            }
        }
    }
    let dens = mode_density(ms, &modes);
    CorrelationData::from_parts(
        CorrelationKind::Density,
        modes.grid,
        values,
        dens.clone(),
        Some(dens),
    )
}

/// `2ε ∫dr′ |V_G(r′)| F(r, r′)` with the number-state `F`, evaluated as
/// `2ε Re Σ c_kl X_kl(r) ⟨X_kl | V⟩` so no pair storage is needed.
pub fn fock_density_rate(ms: &ModeSet, gsample: &GravitySample, epsilon: f64) -> Result<RateField> {
    let grid = *gsample.grid();
    let modes = ms.sample(&grid)?;
    let p = grid.len();
    let v = gsample.abs_potential().values();
    let dv = grid.cell_volume();
    let mut out = vec![0.0; p];
    for (k, l, c) in weights(ms) {
        let y: Complex64 = (0..p)
            .map(|r| modes.x(k, l, r).conj() * v[r])
            .sum::<Complex64>()
            * dv;
        for (r, o) in out.iter_mut().enumerate() {
            *o += 2.0 * epsilon * c * (modes.x(k, l, r) * y).re;
        }
    }
    Ok(RateField {
        method: RateMethod::FullIntegral,
        field: Field::from_values(grid, 1, out)?,
    })
}

/// Radially binned, density-weighted average `C(s)` of `F(r, r+s)`, bins
/// one grid spacing wide; the contact term enters at `s = 0`.
pub fn radial_profile(f: &CorrelationData) -> Result<Vec<f64>> {
    if f.kind() != CorrelationKind::Density {
        return Err(invalid("correlation", "need a density correlation"));
    }
    let grid = *f.grid();
    let d = grid.dims();
    let h = grid.spacing();
    let p = f.points();
    let max_bin = ((0.5 * grid.extent() * (d as f64).sqrt()) / h).round() as usize + 1;
    let mut sum = vec![0.0; max_bin + 1];
    let mut weight = vec![0.0; max_bin + 1];
    let mut xr = vec![0.0; d];
    let mut xs = vec![0.0; d];
    for r in 0..p {
        let w = f.mean_density().map_or(1.0, |m| m[r]);
        if w <= 0.0 {
            continue;
        }
        grid.point(r, &mut xr);
        for rp in 0..p {
            grid.point(rp, &mut xs);
            let s2: f64 = (0..d)
                .map(|c| {
                    let s = grid.min_image(xs[c] - xr[c]);
                    s * s
                })
                .sum();
            let bin = (s2.sqrt() / h).round() as usize;
            let value = if rp == r {
                f.diagonal(0, r)
            } else {
                f.value(0, r, rp)
            };
            sum[bin] += w * value;
            weight[bin] += w;
        }
    }
    let last = weight.iter().rposition(|w| *w > 0.0).unwrap_or(0);
    Ok((0..=last)
        .map(|b| {
            if weight[b] > 0.0 {
                sum[b] / weight[b]
            } else {
                0.0
            }
        })
        .collect())
}

/// Smallest separation where the radial profile first crosses zero
/// (linear interpolation between bins); when it never does, the
/// separation where it first falls to `1/e` of its value at zero.
pub fn correlation_length(f: &CorrelationData) -> Result<f64> {
    let profile = radial_profile(f)?;
    let h = f.grid().spacing();
    let c0 = profile[0];
    let scale = profile.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) {
        return Err(Error::ZeroCorrelation);
    }
    if !(c0 > 0.0) {
        return Err(invalid("correlation", "diagonal must be positive"));
    }
    let crossing = |target: f64| {
        profile.windows(2).enumerate().find_map(|(b, w)| {
            (w[0] > target && w[1] <= target)
                .then(|| h * (b as f64 + (w[0] - target) / (w[0] - w[1])))
        })
    };
    crossing(0.0)
        .or_else(|| crossing(c0 / core::f64::consts::E))
        .ok_or_else(|| invalid("correlation", "profile never decays to 1/e within the box"))
}

/// SI inputs of the collapse-timescale estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiParams {
    pub epsilon: f64,
    /// Gravitational force on one particle, newtons.
    pub force: f64,
    /// Correlation length, metres.
    pub lambda_c: f64,
    /// Particle density, per cubic metre.
    pub density: f64,
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
}

/// CODATA value of `ħ` in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

impl SiParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(invalid("epsilon", "must lie in (0, 1]"));
        }
        for (name, v) in [
            ("force", self.force),
            ("lambda_c", self.lambda_c),
            ("density", self.density),
            ("hbar", self.hbar),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, "must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// `τ = ħ / (ε F_G λ_c⁴ ⟨D⟩)` in seconds.
pub fn collapse_timescale_si(p: &SiParams) -> Result<f64> {
    p.validate()?;
    Ok(p.hbar / (p.epsilon * p.force * p.lambda_c.powi(4) * p.density))
}
