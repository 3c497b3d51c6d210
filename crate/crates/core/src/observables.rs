//! Physical-space observables of an N-particle state: density, current,
//! the two-point functions F and K, localization rates and the force
//! modification tensor.
//!
//! Pair functions are stored densely on the physical grid. Same-particle
//! terms are delta functions on the diagonal; they are kept apart as a
//! per-point `contact_weight` (the delta's coefficient), so that on the
//! grid the diagonal carries `contact_weight / h^d` on top of `values`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gravity::GravitySample;
use crate::grid::{spectral_gradient, Field, Grid};
use crate::wavefunction::WaveFunction;

/// Largest number of stored pair values per component: 1D grids up to
/// M = 1024, 2D up to M = 32, 3D up to M = 8.
pub const PAIR_LIMIT: usize = 1 << 20;

/// Marginal `Σ_n w_n ∫|Φ|²` with `r_n = r`; unit weights give `⟨D(r)⟩`.
pub fn weighted_density(psi: &WaveFunction, weights: &[f64]) -> Field<f64> {
    let grid = *psi.grid();
    let physical = grid.physical();
    let marginal_volume = grid.cell_volume() / physical.cell_volume();
    let mut out = vec![0.0; physical.len()];
    for (idx, v) in psi.values().iter().enumerate() {
        let rho = v.norm_sqr() * marginal_volume;
        for n in 0..grid.particles() {
            out[grid.particle_cell(idx, n)] += weights.get(n).copied().unwrap_or(1.0) * rho;
        }
    }
    Field::from_values(physical, 1, out).expect("physical grid")
}

/// One-body density `⟨D(r)⟩`, integrating to `N`.
pub fn density(psi: &WaveFunction) -> Field<f64> {
    weighted_density(psi, &[])
}

/// `∂_a Φ` for every configuration axis.
pub(crate) fn configuration_gradients(psi: &WaveFunction) -> Vec<Field<Complex64>> {
    (0..psi.grid().axes())
        .map(|a| spectral_gradient(psi.field(), a).expect("axis in range"))
        .collect()
}

/// Configuration-space current `J_a = Im(Φ* ∂_a Φ) / m_a`, one array per axis.
pub fn configuration_current(psi: &WaveFunction, masses: &[f64]) -> Vec<Field<f64>> {
    let grid = *psi.grid();
    configuration_gradients(psi)
        .into_iter()
        .enumerate()
        .map(|(a, g)| {
            let inv_m = 1.0 / masses.get(a / grid.dims()).copied().unwrap_or(1.0);
            let values = psi
                .values()
                .iter()
                .zip(g.values())
                .map(|(p, dp)| (p.conj() * dp).im * inv_m)
                .collect();
            Field::from_values(grid, 1, values).expect("same grid")
        })
        .collect()
}

/// `∇_N · J_N`, evaluated as `Σ_a Im(Φ* ∂_a² Φ) / m_a` with the same
/// spectral Laplacian the propagator uses (Nyquist mode kept). This equals
/// the divergence of the spectral current for resolved states and keeps the
/// discrete continuity identity exact when `Φ` has weight near Nyquist.
pub fn current_divergence(psi: &WaveFunction, masses: &[f64]) -> Field<f64> {
    let grid = *psi.grid();
    let axes = grid.axes();
    let plan = grid.fft_plan();
    let mut buf = psi.values().to_vec();
    plan.transform_all(&mut buf, axes, false);
    let mut ix = vec![0usize; axes];
    for (idx, v) in buf.iter_mut().enumerate() {
        grid.unravel(idx, &mut ix);
        let k2: f64 = ix
            .iter()
            .enumerate()
            .map(|(a, &i)| {
                let k = grid.wavenumber(i);
                k * k / masses.get(a / grid.dims()).copied().unwrap_or(1.0)
            })
            .sum();
        *v *= -k2;
    }
    plan.transform_all(&mut buf, axes, true);
    let values = psi
        .values()
        .iter()
        .zip(&buf)
        .map(|(p, lap)| (p.conj() * lap).im)
        .collect();
    Field::from_values(grid, 1, values).expect("same grid")
}

/// One-body current `⟨J(r)⟩ = Σ_n Im(Φ* ∇_n Φ)` marginalized to
/// `r_n = r`, for unit masses.
pub fn current(psi: &WaveFunction) -> Field<f64> {
    let grid = *psi.grid();
    let d = grid.dims();
    let physical = grid.physical();
    let marginal_volume = grid.cell_volume() / physical.cell_volume();
    let grads = configuration_gradients(psi);
    let mut out = vec![0.0; d * physical.len()];
    for (idx, v) in psi.values().iter().enumerate() {
        for n in 0..grid.particles() {
            let cell = grid.particle_cell(idx, n);
            for c in 0..d {
                let j = (v.conj() * grads[n * d + c].values()[idx]).im;
                out[c * physical.len() + cell] += j * marginal_volume;
            }
        }
    }
    Field::from_values(physical, d, out).expect("physical grid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrelationKind {
    /// Density-density function `F(r, r′)`, scalar.
    Density,
    /// Current-density function `K(r, r′)`, a d-vector.
    Current,
}

/// Dense pair function on the physical grid with separate contact terms.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationData {
    kind: CorrelationKind,
    grid: Grid,
    rank: usize,
    values: Vec<f64>,
    contact_weight: Vec<f64>,
    mean_density: Option<Vec<f64>>,
}

impl CorrelationData {
    /// `values` is component-major, then row `r`, then column `r′`;
    /// `contact_weight` is component-major over `r`.
    pub fn from_parts(
        kind: CorrelationKind,
        grid: Grid,
        values: Vec<f64>,
        contact_weight: Vec<f64>,
        mean_density: Option<Vec<f64>>,
    ) -> Result<Self> {
        let grid = grid.physical();
        let rank = match kind {
            CorrelationKind::Density => 1,
            CorrelationKind::Current => grid.dims(),
        };
        let p = check_pair_budget(&grid)?;
        if values.len() != rank * p * p || contact_weight.len() != rank * p {
            return Err(Error::GridMismatch("pair values do not match the grid"));
        }
        if mean_density.as_ref().is_some_and(|d| d.len() != p) {
            return Err(Error::GridMismatch("mean density does not match the grid"));
        }
        Ok(Self {
            kind,
            grid,
            rank,
            values,
            contact_weight,
            mean_density,
        })
    }

    pub fn kind(&self) -> CorrelationKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of physical grid points `M^d`.
    pub fn points(&self) -> usize {
        self.grid.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contact_weights(&self) -> &[f64] {
        &self.contact_weight
    }

    pub fn mean_density(&self) -> Option<&[f64]> {
        self.mean_density.as_deref()
    }

    pub fn row(&self, component: usize, r: usize) -> &[f64] {
        let p = self.points();
        let start = (component * p + r) * p;
        &self.values[start..start + p]
    }

    pub fn value(&self, component: usize, r: usize, rp: usize) -> f64 {
        self.row(component, r)[rp]
    }

    pub fn contact(&self, component: usize, r: usize) -> f64 {
        self.contact_weight[component * self.points() + r]
    }

    /// `F(r, r)` including the contact term as `contact / h^d`.
    pub fn diagonal(&self, component: usize, r: usize) -> f64 {
        self.value(component, r, r) + self.contact(component, r) / self.grid.cell_volume()
    }

    /// `∫dr′ F(r, r′)` with the contact term.
    pub fn row_integral(&self, component: usize, r: usize) -> f64 {
        self.row(component, r).iter().sum::<f64>() * self.grid.cell_volume()
            + self.contact(component, r)
    }

    /// `∫dr F(r, r′)` with the contact term.
    pub fn column_integral(&self, component: usize, rp: usize) -> f64 {
        let p = self.points();
        (0..p).map(|r| self.value(component, r, rp)).sum::<f64>() * self.grid.cell_volume()
            + self.contact(component, rp)
    }

    /// Largest magnitude over stored values and on-grid diagonals.
    pub fn max_abs(&self) -> f64 {
        let mut m = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for c in 0..self.rank {
            for r in 0..self.points() {
                m = m.max(self.diagonal(c, r).abs());
            }
        }
        m
    }
}

fn check_pair_budget(grid: &Grid) -> Result<usize> {
    let p = grid.physical().len();
    match p.checked_mul(p) {
        Some(pairs) if pairs <= PAIR_LIMIT => Ok(p),
        _ => Err(Error::PairBudgetExceeded {
            pairs: p.saturating_mul(p),
            limit: PAIR_LIMIT,
        }),
    }
}

/// `F(r,r′) = ⟨D(r)D(r′)⟩ − ⟨D(r)⟩⟨D(r′)⟩` with the same-particle part as
/// a contact term.
pub fn density_correlation(psi: &WaveFunction) -> Result<CorrelationData> {
    let grid = *psi.grid();
    let physical = grid.physical();
    let p = check_pair_budget(&grid)?;
    let n_particles = grid.particles();
    let pair_volume = grid.cell_volume() / (physical.cell_volume() * physical.cell_volume());
    let mut values = vec![0.0; p * p];
    if n_particles > 1 {
        let mut cells = vec![0usize; n_particles];
        for (idx, v) in psi.values().iter().enumerate() {
            let rho = v.norm_sqr() * pair_volume;
            for (n, c) in cells.iter_mut().enumerate() {
                *c = grid.particle_cell(idx, n);
            }
            for a in 0..n_particles {
                for b in 0..n_particles {
                    if a != b {
                        values[cells[a] * p + cells[b]] += rho;
                    }
                }
            }
        }
    }
    let dens = density(psi).into_values();
    for r in 0..p {
        for rp in 0..p {
            values[r * p + rp] -= dens[r] * dens[rp];
        }
    }
    CorrelationData::from_parts(
        CorrelationKind::Density,
        physical,
        values,
        dens.clone(),
        Some(dens),
    )
}

/// `K(r,r′) = ½⟨J(r)D(r′) + D(r′)J(r)⟩ − ⟨J(r)⟩⟨D(r′)⟩` for unit masses.
/// The same-particle part is the contact term `δ(r − r′) j(r)`.
pub fn current_density_correlation(psi: &WaveFunction) -> Result<CorrelationData> {
    let grid = *psi.grid();
    let physical = grid.physical();
    let p = check_pair_budget(&grid)?;
    let d = grid.dims();
    let n_particles = grid.particles();
    let pair_volume = grid.cell_volume() / (physical.cell_volume() * physical.cell_volume());
    let mut values = vec![0.0; d * p * p];
    if n_particles > 1 {
        let grads = configuration_gradients(psi);
        let mut cells = vec![0usize; n_particles];
        for (idx, v) in psi.values().iter().enumerate() {
            for (n, c) in cells.iter_mut().enumerate() {
                *c = grid.particle_cell(idx, n);
            }
            for a in 0..n_particles {
                for c in 0..d {
                    let j = (v.conj() * grads[a * d + c].values()[idx]).im * pair_volume;
                    for b in 0..n_particles {
                        if a != b {
                            values[(c * p + cells[a]) * p + cells[b]] += j;
                        }
                    }
                }
            }
        }
    }
    let dens = density(psi).into_values();
    let cur = current(psi).into_values();
    for c in 0..d {
        for r in 0..p {
            let j = cur[c * p + r];
            for rp in 0..p {
                values[(c * p + r) * p + rp] -= j * dens[rp];
            }
        }
    }
    CorrelationData::from_parts(CorrelationKind::Current, physical, values, cur, Some(dens))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateMethod {
    FullIntegral,
    GradientExpansion,
}

/// Localization-driven rate of change of `⟨D⟩` (scalar) or `⟨J⟩` (vector).
#[derive(Clone, Debug, PartialEq)]
pub struct RateField {
    pub method: RateMethod,
    pub field: Field<f64>,
}

impl RateField {
    pub fn values(&self) -> &[f64] {
        self.field.values()
    }
}

fn check_sample(
    data: &CorrelationData,
    gsample: &GravitySample,
    kind: CorrelationKind,
) -> Result<()> {
    if data.kind != kind {
        return Err(Error::GridMismatch("wrong correlation kind for this rate"));
    }
    if *gsample.grid() != data.grid {
        return Err(Error::GridMismatch(
            "correlation and gravity sample grids differ",
        ));
    }
    Ok(())
}

/// `prefactor · [∫dr′ |V_G(r′)| C(r,r′) + contact(r) |V_G(r)|]` per component.
fn full_integral(data: &CorrelationData, gsample: &GravitySample, prefactor: f64) -> Field<f64> {
    let v = gsample.abs_potential().values();
    let p = data.points();
    let dv = data.grid.cell_volume();
    let mut out = vec![0.0; data.rank * p];
    for c in 0..data.rank {
        for r in 0..p {
            let s: f64 = data.row(c, r).iter().zip(v).map(|(f, vv)| f * vv).sum();
            out[c * p + r] = prefactor * (s * dv + data.contact(c, r) * v[r]);
        }
    }
    Field::from_values(data.grid, data.rank, out).expect("physical grid")
}

/// First moments `∫dr′ (r′ − r)_j C_i(r, r′)` (minimum image), as
/// `[component][r][j]`.
fn first_moments(data: &CorrelationData) -> Vec<f64> {
    let grid = data.grid;
    let d = grid.dims();
    let p = data.points();
    let dv = grid.cell_volume();
    let mut xr = vec![0.0; d];
    let mut xs = vec![0.0; d];
    let mut out = vec![0.0; data.rank * p * d];
    for r in 0..p {
        grid.point(r, &mut xr);
        for rp in 0..p {
            grid.point(rp, &mut xs);
            for j in 0..d {
                let s = grid.min_image(xs[j] - xr[j]) * dv;
                for c in 0..data.rank {
                    out[(c * p + r) * d + j] += s * data.value(c, r, rp);
                }
            }
        }
    }
    out
}

/// `2ε ∫dr′ |V_G(r′)| F(r, r′)`, contact included.
pub fn density_rate_full(
    f: &CorrelationData,
    gsample: &GravitySample,
    epsilon: f64,
) -> Result<RateField> {
    check_sample(f, gsample, CorrelationKind::Density)?;
    Ok(RateField {
        method: RateMethod::FullIntegral,
        field: full_integral(f, gsample, 2.0 * epsilon),
    })
}

/// `2ε F_G(r) · ∫dr′ (r′ − r) F(r, r′)`.
pub fn density_rate_gradient(
    f: &CorrelationData,
    gsample: &GravitySample,
    epsilon: f64,
) -> Result<RateField> {
    check_sample(f, gsample, CorrelationKind::Density)?;
    let grid = f.grid;
    let d = grid.dims();
    let p = f.points();
    let moments = first_moments(f);
    let force = gsample.force();
    let out = (0..p)
        .map(|r| {
            let dot: f64 = (0..d)
                .map(|j| force.component(j)[r] * moments[r * d + j])
                .sum();
            2.0 * epsilon * dot
        })
        .collect();
    Ok(RateField {
        method: RateMethod::GradientExpansion,
        field: Field::from_values(grid, 1, out)?,
    })
}

/// `ε ∫dr′ |V_G(r′)| K(r, r′)`, contact included.
pub fn current_rate_full(
    k: &CorrelationData,
    gsample: &GravitySample,
    epsilon: f64,
) -> Result<RateField> {
    check_sample(k, gsample, CorrelationKind::Current)?;
    Ok(RateField {
        method: RateMethod::FullIntegral,
        field: full_integral(k, gsample, epsilon),
    })
}

/// `T(r) · F_G(r)` with the force modification tensor at every point.
pub fn current_rate_gradient(
    k: &CorrelationData,
    gsample: &GravitySample,
    epsilon: f64,
) -> Result<RateField> {
    check_sample(k, gsample, CorrelationKind::Current)?;
    let grid = k.grid;
    let d = grid.dims();
    let p = k.points();
    let moments = first_moments(k);
    let force = gsample.force();
    let mut out = vec![0.0; d * p];
    for i in 0..d {
        for r in 0..p {
            let dot: f64 = (0..d)
                .map(|j| moments[(i * p + r) * d + j] * force.component(j)[r])
                .sum();
            out[i * p + r] = epsilon * dot;
        }
    }
    Ok(RateField {
        method: RateMethod::GradientExpansion,
        field: Field::from_values(grid, d, out)?,
    })
}

/// `T_ij(r) = ε ∫dr′ (r′ − r)_j K_i(r, r′)` at the node nearest `r_eval`,
/// returned row-major as `d × d`.
pub fn force_modification_tensor(
    k: &CorrelationData,
    r_eval: &[f64],
    epsilon: f64,
) -> Result<Vec<f64>> {
    if k.kind != CorrelationKind::Current {
        return Err(Error::GridMismatch(
            "force tensor needs a current-density correlation",
        ));
    }
    let grid = k.grid;
    let d = grid.dims();
    if r_eval.len() != d {
        return Err(Error::GridMismatch(
            "evaluation point dimension differs from grid",
        ));
    }
    let nodes: Vec<usize> = r_eval.iter().map(|&x| grid.nearest_node(x)).collect();
    let r = grid.ravel(&nodes);
    let p = k.points();
    let dv = grid.cell_volume();
    let mut xr = vec![0.0; d];
    let mut xs = vec![0.0; d];
    grid.point(r, &mut xr);
    let mut t = vec![0.0; d * d];
    for rp in 0..p {
        grid.point(rp, &mut xs);
        for j in 0..d {
            let s = grid.min_image(xs[j] - xr[j]) * dv;
            for i in 0..d {
                t[i * d + j] += s * k.value(i, r, rp);
            }
        }
    }
    for v in &mut t {
        *v *= epsilon;
    }
    Ok(t)
}
