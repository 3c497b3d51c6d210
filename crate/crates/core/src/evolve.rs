//! Split-step propagation of the normalized state under kinetic energy,
//! external potentials, Hermitian Bohmian gravity and the anti-Hermitian
//! localization term, with the Bohmian point advanced in the same step.
//!
//! One step of length `dt`:
//!
//! 1. predict the Bohmian midpoint `P_mid = P + v(Φ, P) dt/2`;
//! 2. Strang split: half kinetic, full diagonal
//!    `exp(−i V dt + ε W dt)` with `W = Σ_n w_n |V_G(r_n)|` sourced at
//!    `P_mid`, half kinetic;
//! 3. renormalize, which supplies the `−∫⟨D⟩|V_G|` counter-term;
//! 4. finish the midpoint step of `P` with the average of the old and new
//!    guidance fields;
//! 5. refresh `⟨D⟩` and the gravity sample at the new point.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::bohm::{advance_from_midpoint, predict_midpoint, BohmianPoint, GuidanceField};
use crate::error::{invalid, Error, Result};
use crate::fft::FftPlan;
use crate::gravity::{potential_from_positions, source_potential, GravityParams, GravitySample};
use crate::grid::{Field, Grid};
use crate::observables::{current_divergence, weighted_density};
use crate::potential::ExternalPotentialSpec;
use crate::wavefunction::WaveFunction;

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionSetup {
    pub grid: Grid,
    /// One mass per particle; empty means unit masses.
    pub masses: Vec<f64>,
    pub potential: ExternalPotentialSpec,
    pub gravity: GravityParams,
}

impl EvolutionSetup {
    pub fn new(grid: Grid, gravity: GravityParams) -> Self {
        Self {
            grid,
            masses: Vec::new(),
            potential: ExternalPotentialSpec::default(),
            gravity,
        }
    }

    pub fn mass(&self, particle: usize) -> f64 {
        self.masses.get(particle).copied().unwrap_or(1.0)
    }

    /// Whether the wave-function dynamics depend on the Bohmian point.
    pub fn bohm_coupled(&self) -> bool {
        self.gravity.kappa > 0.0
            && (self.gravity.epsilon > 0.0 || self.gravity.include_hermitian_gravity)
    }

    fn validate(&self) -> Result<()> {
        self.gravity.validate()?;
        let n = self.grid.particles();
        if !self.masses.is_empty() && self.masses.len() != n {
            return Err(invalid("masses", "need one mass per particle"));
        }
        if self.masses.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(invalid("masses", "must be positive and finite"));
        }
        if self.gravity.weights.len() > n {
            return Err(invalid("weights", "more gravity weights than particles"));
        }
        Ok(())
    }

    /// Largest kinetic energy the grid resolves, `Σ_axes (π/h)² / 2m`.
    pub fn kinetic_cutoff(&self) -> f64 {
        let k = self.grid.max_wavenumber();
        (0..self.grid.axes())
            .map(|a| 0.5 * k * k / self.mass(a / self.grid.dims()))
            .sum()
    }

    /// Upper bound on `|V_G|`-driven terms: `κ N Σw / a` times the
    /// Hermitian and anti-Hermitian strengths.
    pub fn gravity_bound(&self) -> f64 {
        let g = &self.gravity;
        let n = self.grid.particles();
        let strength = if g.include_hermitian_gravity {
            1.0
        } else {
            0.0
        } + g.epsilon;
        g.kappa * n as f64 * g.total_weight(n) / g.softening * strength
    }
}

/// Time-stamped copy of the state and its cached fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub psi: WaveFunction,
    pub bohm: BohmianPoint,
    /// Gravity-weighted one-body density `Σ_n w_n ⟨D_n⟩`.
    pub mean_density: Field<f64>,
    pub gravity: GravitySample,
}

#[derive(Clone, Debug)]
pub struct EvolutionState {
    psi: WaveFunction,
    bohm: BohmianPoint,
    step: usize,
    mean_density: Field<f64>,
    gravity: GravitySample,
    guidance: GuidanceField,
    flagged_steps: usize,
}

impl EvolutionState {
    /// Normalizes `psi` and builds the cached fields.
    pub fn new(
        setup: &EvolutionSetup,
        mut psi: WaveFunction,
        mut bohm: BohmianPoint,
    ) -> Result<Self> {
        setup.validate()?;
        if *psi.grid() != setup.grid {
            return Err(Error::GridMismatch("state and setup grids differ"));
        }
        if bohm.particles() != setup.grid.particles() || bohm.dims() != setup.grid.dims() {
            return Err(Error::GridMismatch("Bohmian point shape differs from grid"));
        }
        psi.normalize()?;
        bohm.wrap(&setup.grid);
        let guidance = GuidanceField::new(&psi, &setup.masses)?;
        let mean_density = weighted_density(&psi, &setup.gravity.weights);
        let gravity = potential_from_positions(&bohm, &setup.grid, &setup.gravity)?;
        Ok(Self {
            psi,
            bohm,
            step: 0,
            mean_density,
            gravity,
            guidance,
            flagged_steps: 0,
        })
    }

    pub fn psi(&self) -> &WaveFunction {
        &self.psi
    }

    pub fn bohm(&self) -> &BohmianPoint {
        &self.bohm
    }

    pub fn time(&self) -> f64 {
        self.psi.time()
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn mean_density(&self) -> &Field<f64> {
        &self.mean_density
    }

    pub fn gravity(&self) -> &GravitySample {
        &self.gravity
    }

    pub fn guidance(&self) -> &GuidanceField {
        &self.guidance
    }

    /// Steps in which a velocity query hit the node floor.
    pub fn flagged_steps(&self) -> usize {
        self.flagged_steps
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            step: self.step,
            time: self.time(),
            psi: self.psi.clone(),
            bohm: self.bohm.clone(),
            mean_density: self.mean_density.clone(),
            gravity: self.gravity.clone(),
        }
    }
}

/// Precomputed split-step factors for a fixed `dt`.
#[derive(Clone, Debug)]
pub struct Propagator {
    setup: EvolutionSetup,
    dt: f64,
    plan: FftPlan,
    kinetic_half: Vec<Complex64>,
    static_phase: Vec<Complex64>,
    bound: f64,
}

impl Propagator {
    /// Fails with [`Error::StepTooLarge`] unless
    /// `dt · (max|V_ext| + gravity bound + kinetic cutoff) < 1`.
    pub fn new(setup: EvolutionSetup, dt: f64) -> Result<Self> {
        setup.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", "must be positive and finite"));
        }
        let grid = setup.grid;
        let v = setup.potential.evaluate(&grid)?;
        let v_max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let bound = 1.0 / (v_max + setup.gravity_bound() + setup.kinetic_cutoff());
        if dt >= bound {
            return Err(Error::StepTooLarge { dt, bound });
        }
        let axes = grid.axes();
        let m = grid.points();
        let per_axis: Vec<Vec<f64>> = (0..axes)
            .map(|a| {
                let inv_m = 1.0 / setup.mass(a / grid.dims());
                (0..m)
                    .map(|i| {
                        let k = grid.wavenumber(i);
                        0.5 * k * k * inv_m
                    })
                    .collect()
            })
            .collect();
        let mut ix = vec![0usize; axes];
        let kinetic_half = (0..grid.len())
            .map(|idx| {
                grid.unravel(idx, &mut ix);
                let e: f64 = ix.iter().enumerate().map(|(a, &i)| per_axis[a][i]).sum();
                Complex64::from_polar(1.0, -0.5 * e * dt)
            })
            .collect();
        let static_phase = v
            .iter()
            .map(|vv| Complex64::from_polar(1.0, -vv * dt))
            .collect();
        Ok(Self {
            plan: grid.fft_plan(),
            setup,
            dt,
            kinetic_half,
            static_phase,
            bound,
        })
    }

    pub fn setup(&self) -> &EvolutionSetup {
        &self.setup
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Largest admissible `dt`.
    pub fn stability_bound(&self) -> f64 {
        self.bound
    }

    /// Per-particle diagonal factors `exp(ε w_n G dt + i w_n G_n dt)` on the
    /// physical grid, with `G = |V_G|` sourced at `sources` and `G_n` the
    /// Hermitian part seen by coordinate `n`.
    fn gravity_factors(&self, sources: &BohmianPoint) -> Vec<Vec<Complex64>> {
        let g = &self.setup.gravity;
        let grid = self.setup.grid;
        let physical = grid.physical();
        let n = grid.particles();
        let total = source_potential(&physical, sources, 0..n, g);
        (0..n)
            .map(|p| {
                let w = g.weight(p) * self.dt;
                let herm: Vec<f64> = if !g.include_hermitian_gravity {
                    vec![0.0; total.len()]
                } else if g.include_self_pairs {
                    total.clone()
                } else {
                    let own = source_potential(&physical, sources, p..p + 1, g);
                    total.iter().zip(&own).map(|(t, o)| t - o).collect()
                };
                total
                    .iter()
                    .zip(&herm)
                    .map(|(gv, hv)| Complex64::from_polar((g.epsilon * w * gv).exp(), w * hv))
                    .collect()
            })
            .collect()
    }

    /// One split step of `psi` with the gravity sourced at `sources`.
    /// Returns the normalized state and its guidance field.
    pub fn evolve_wave(
        &self,
        psi: &WaveFunction,
        sources: &BohmianPoint,
    ) -> Result<(WaveFunction, GuidanceField)> {
        let grid = self.setup.grid;
        if *psi.grid() != grid {
            return Err(Error::GridMismatch("state and propagator grids differ"));
        }
        let axes = grid.axes();
        let mut buf = psi.values().to_vec();
        self.plan.transform_all(&mut buf, axes, false);
        mul_assign(&mut buf, &self.kinetic_half);
        self.plan.transform_all(&mut buf, axes, true);

        if self.setup.bohm_coupled() {
            let factors = self.gravity_factors(sources);
            let n = grid.particles();
            for (idx, (v, s)) in buf.iter_mut().zip(&self.static_phase).enumerate() {
                let mut f = *s;
                for (p, table) in factors.iter().enumerate().take(n) {
                    f *= table[grid.particle_cell(idx, p)];
                }
                *v *= f;
            }
        } else {
            mul_assign(&mut buf, &self.static_phase);
        }

        self.plan.transform_all(&mut buf, axes, false);
        mul_assign(&mut buf, &self.kinetic_half);
        let mut spectrum = buf.clone();
        self.plan.transform_all(&mut buf, axes, true);

        let mut next = WaveFunction::from_values(grid, buf)?;
        next.set_time(psi.time() + self.dt);
        let norm = next.normalize()?;
        let scale = 1.0 / norm;
        for v in &mut spectrum {
            *v *= scale;
        }
        let guidance = GuidanceField::from_spectrum(&next, &spectrum, &self.setup.masses)?;
        Ok((next, guidance))
    }

    /// Advances `state` by one step.
    pub fn step(&self, state: &EvolutionState) -> Result<EvolutionState> {
        let mut next = state.clone();
        self.step_in_place(&mut next)?;
        Ok(next)
    }

    pub fn step_in_place(&self, state: &mut EvolutionState) -> Result<()> {
        let mid = predict_midpoint(&state.bohm, &state.guidance, self.dt)?;
        let (psi, guidance) = self.evolve_wave(&state.psi, &mid.point)?;
        let adv = advance_from_midpoint(&state.bohm, &mid, &state.guidance, &guidance, self.dt)?;
        if adv.point.positions().iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                time: psi.time(),
                what: "Bohmian position",
            });
        }
        state.mean_density = weighted_density(&psi, &self.setup.gravity.weights);
        state.gravity =
            potential_from_positions(&adv.point, &self.setup.grid, &self.setup.gravity)?;
        state.psi = psi;
        state.guidance = guidance;
        state.bohm = adv.point;
        state.step += 1;
        if adv.flagged {
            state.flagged_steps += 1;
        }
        Ok(())
    }

    /// Takes `steps` steps and returns snapshots at step 0, every
    /// `stride` steps, and at the final step.
    pub fn run(
        &self,
        state: &mut EvolutionState,
        steps: usize,
        stride: usize,
    ) -> Result<Vec<Snapshot>> {
        let stride = stride.max(1);
        let mut out = vec![state.snapshot()];
        for k in 1..=steps {
            self.step_in_place(state)?;
            if k % stride == 0 || k == steps {
                out.push(state.snapshot());
            }
        }
        Ok(out)
    }
}

fn mul_assign(a: &mut [Complex64], b: &[Complex64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x *= y;
    }
}

/// `2ε [Σ_n w_n |V_G(r_n)| − ∫⟨D_w⟩|V_G|] ρ_N` at every configuration node.
pub fn localization_source(setup: &EvolutionSetup, snap: &Snapshot) -> Field<f64> {
    let grid = setup.grid;
    let g = &setup.gravity;
    let v = snap.gravity.abs_potential().values();
    let average: f64 = snap
        .mean_density
        .values()
        .iter()
        .zip(v)
        .map(|(d, vv)| d * vv)
        .sum::<f64>()
        * grid.physical().cell_volume();
    let n = grid.particles();
    let values = snap
        .psi
        .values()
        .iter()
        .enumerate()
        .map(|(idx, phi)| {
            let w: f64 = (0..n)
                .map(|p| g.weight(p) * v[grid.particle_cell(idx, p)])
                .sum();
            2.0 * g.epsilon * (w - average) * phi.norm_sqr()
        })
        .collect();
    Field::from_values(grid, 1, values).expect("same grid")
}

/// Configuration-space continuity check across two consecutive snapshots:
/// `lhs = Δρ_N/Δt + ∇_N·J_N` and `rhs` the localization source, with the
/// divergence and the source averaged over both ends.
pub fn continuity_residual(
    setup: &EvolutionSetup,
    a: &Snapshot,
    b: &Snapshot,
) -> Result<(Field<f64>, Field<f64>)> {
    let grid = setup.grid;
    if *a.psi.grid() != grid || *b.psi.grid() != grid {
        return Err(Error::GridMismatch("snapshots and setup grids differ"));
    }
    let dt = b.time - a.time;
    if !(dt > 0.0) {
        return Err(invalid("snapshots", "must be in increasing time order"));
    }
    let da = current_divergence(&a.psi, &setup.masses);
    let db = current_divergence(&b.psi, &setup.masses);
    let sa = localization_source(setup, a);
    let sb = localization_source(setup, b);
    let lhs = a
        .psi
        .values()
        .iter()
        .zip(b.psi.values())
        .zip(da.values().iter().zip(db.values()))
        .map(|((pa, pb), (xa, xb))| (pb.norm_sqr() - pa.norm_sqr()) / dt + 0.5 * (xa + xb))
        .collect();
    let rhs = sa
        .values()
        .iter()
        .zip(sb.values())
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    Ok((
        Field::from_values(grid, 1, lhs)?,
        Field::from_values(grid, 1, rhs)?,
    ))
}

/// `⟨T⟩ + ⟨V_ext⟩`; Bohmian gravity is not included.
pub fn energy(setup: &EvolutionSetup, psi: &WaveFunction) -> Result<f64> {
    let grid = setup.grid;
    let axes = grid.axes();
    let mut spec = psi.values().to_vec();
    grid.fft_plan().transform_all(&mut spec, axes, false);
    let mut ix = vec![0usize; axes];
    let mut kinetic = 0.0;
    let mut total = 0.0;
    for (idx, v) in spec.iter().enumerate() {
        grid.unravel(idx, &mut ix);
        let e: f64 = ix
            .iter()
            .enumerate()
            .map(|(a, &i)| {
                let k = grid.wavenumber(i);
                0.5 * k * k / setup.mass(a / grid.dims())
            })
            .sum();
        kinetic += e * v.norm_sqr();
        total += v.norm_sqr();
    }
    let v = setup.potential.evaluate(&grid)?;
    let potential: f64 = psi
        .values()
        .iter()
        .zip(&v)
        .map(|(p, vv)| p.norm_sqr() * vv)
        .sum::<f64>()
        * grid.cell_volume();
    Ok(kinetic / total + potential / psi.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefunction::{product_state, Orbital};

    #[test]
    fn step_bound_is_enforced() {
        let grid = Grid::new(1, 1, 64, 8.0).unwrap();
        let setup = EvolutionSetup::new(grid, GravityParams::new(0.0, 0.0, 0.25).unwrap());
        let bound = 1.0 / setup.kinetic_cutoff();
        assert!(matches!(
            Propagator::new(setup.clone(), 1.01 * bound),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(Propagator::new(setup, 0.99 * bound).is_ok());
    }

    #[test]
    fn run_with_zero_steps_returns_initial_snapshot() {
        let grid = Grid::new(1, 1, 32, 10.0).unwrap();
        let setup = EvolutionSetup::new(grid, GravityParams::new(1.0, 0.1, 0.6).unwrap());
        let psi = product_state(grid, &[Orbital::gaussian(&[0.0], 1.0)]).unwrap();
        let p = BohmianPoint::new(1, 1, vec![0.2]).unwrap();
        let mut state = EvolutionState::new(&setup, psi, p).unwrap();
        let prop = Propagator::new(setup, 1e-3).unwrap();
        let snaps = prop.run(&mut state, 0, 5).unwrap();
        assert_eq!(snaps.len(), 1);
        assert_eq!(snaps[0].step, 0);
    }
}
