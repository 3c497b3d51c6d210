//! Coarse-grained relaxation of a Bohmian ensemble towards `|Φ|²`.
//!
//! One particle on a periodic box in a superposition of ring modes with
//! random phases. The ensemble starts either uniform (the density of any
//! single ring mode) or in equilibrium. Member 0 is the tracer whose
//! position sources gravity; every member follows the same wave function.
//!
//! Three curves are produced: the configured run, an `ε = 0` reference
//! with gravity switched off, and an equilibrium-start control.

use std::f64::consts::PI;

use gbc_core::bohm::{
    advance_positions, h_function, member_rng, sample_from_density, sample_initial_positions,
    uniform,
};
use gbc_core::wavefunction::product_state;
use gbc_core::{
    Complex64, Ensemble, EvolutionSetup, EvolutionState, Field, GravityParams, Grid, Orbital,
    Propagator, WaveFunction,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ModesState, ScenarioConfig, StateConfig};
use crate::error::{LabError, LabResult};
use crate::output::{CsvTable, ScenarioOutput};

/// Allowed departure between normalized `H` curves.
pub const CURVE_TOLERANCE: f64 = 0.1;
/// Required decay of `H` over the run.
pub const DECAY_TARGET: f64 = 0.5;

fn modes(cfg: &ScenarioConfig) -> LabResult<&ModesState> {
    match &cfg.state {
        StateConfig::RingModes(m) => Ok(m),
        _ => Err(LabError::Scenario(
            "relaxation needs a ring-mode superposition".into(),
        )),
    }
}

/// The first `count` index tuples of the cube `[−s/2, s/2)^d` in raster
/// order, with `s` the smallest side holding `count` tuples.
pub fn mode_indices(count: usize, dims: usize) -> Vec<Vec<i64>> {
    let mut side = 1usize;
    while side.pow(dims as u32) < count {
        side += 1;
    }
    let lo = -((side / 2) as i64);
    (0..count)
        .map(|mut i| {
            let mut idx = vec![0i64; dims];
            for slot in idx.iter_mut().rev() {
                *slot = lo + (i % side) as i64;
                i /= side;
            }
            idx
        })
        .collect()
}

/// Equal-amplitude superposition with phases drawn from the stream
/// `(seed, u64::MAX)`, kept apart from the member streams.
pub fn initial_state(grid: Grid, count: usize, seed: u64) -> LabResult<WaveFunction> {
    let mut rng = member_rng(seed, u64::MAX);
    let parts: Vec<(Complex64, WaveFunction)> = mode_indices(count, grid.dims())
        .into_iter()
        .map(|index| {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * uniform(&mut rng));
            Ok((phase, product_state(grid, &[Orbital::RingMode { index }])?))
        })
        .collect::<LabResult<_>>()?;
    let terms: Vec<(Complex64, &WaveFunction)> = parts.iter().map(|(c, w)| (*c, w)).collect();
    Ok(WaveFunction::superpose(&terms)?.normalized()?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HCurve {
    pub t: Vec<f64>,
    pub h: Vec<f64>,
    pub flagged_steps: usize,
}

impl HCurve {
    pub fn normalized(&self) -> Vec<f64> {
        self.h.iter().map(|h| h / self.h[0]).collect()
    }

    pub fn final_ratio(&self) -> f64 {
        self.h[self.h.len() - 1] / self.h[0]
    }
}

/// Evolves the wave function sourced by member 0 and carries the whole
/// ensemble along, recording `H` every `stride` steps.
pub fn h_curve(
    cfg: &ScenarioConfig,
    psi: WaveFunction,
    mut ensemble: Ensemble,
    gravity: GravityParams,
) -> LabResult<HCurve> {
    let m = modes(cfg)?;
    let grid = *psi.grid();
    let cell = m.cell * grid.spacing();
    let setup = EvolutionSetup::new(grid, gravity);
    let propagator = Propagator::new(setup, cfg.run.dt)?;
    let mut state = EvolutionState::new(propagator.setup(), psi, ensemble.members()[0].clone())?;
    let steps = cfg.run.steps();
    let stride = cfg.run.snapshot_stride;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.workers)
        .build()?;
    let mut curve = HCurve {
        t: Vec::new(),
        h: Vec::new(),
        flagged_steps: 0,
    };
    for k in 0..=steps {
        if k % stride == 0 || k == steps {
            curve.t.push(state.time());
            curve
                .h
                .push(h_function(&ensemble, state.psi(), cell)?.h_value);
        }
        if k == steps {
            break;
        }
        let start = state.guidance().clone();
        propagator.step_in_place(&mut state)?;
        let end = state.guidance();
        let dt = cfg.run.dt;
        let flagged = pool.install(|| {
            ensemble
                .members_mut()
                .par_iter_mut()
                .map(|p| {
                    let adv = advance_positions(p, &start, end, dt)?;
                    *p = adv.point;
                    Ok(adv.flagged as usize)
                })
                .sum::<gbc_core::Result<usize>>()
        })?;
        curve.flagged_steps += flagged;
    }
    Ok(curve)
}

/// Upper edge of the finite-sample band of an equilibrium ensemble: for
/// `R` members over `C` cells, `2R·H` is close to χ² with `C − 1` degrees of
/// freedom, and the band is its mean plus five standard deviations.
pub fn noise_band(cells: usize, members: usize) -> f64 {
    let dof = cells.saturating_sub(1) as f64;
    (dof + 5.0 * (2.0 * dof).sqrt()) / (2.0 * members as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelaxationReport {
    pub modes: usize,
    pub members: usize,
    pub cell_size: f64,
    pub main: HCurve,
    pub reference: HCurve,
    pub equilibrium: HCurve,
    /// `H(t_end)/H(0)` of the configured run.
    pub final_ratio: f64,
    pub reference_ratio: f64,
    /// Largest gap between the normalized main and reference curves.
    pub max_curve_deviation: f64,
    pub noise_band: f64,
    pub equilibrium_max: f64,
    pub decayed: bool,
    pub tracks_reference: bool,
    pub equilibrium_in_band: bool,
}

pub fn run_relaxation_scenario(cfg: &ScenarioConfig) -> LabResult<RelaxationReport> {
    let m = modes(cfg)?;
    let grid = cfg.grid.grid()?;
    let psi = initial_state(grid, m.modes, cfg.run.seed)?;
    let r = cfg.run.ensemble;
    let start = if m.initial == "equilibrium" {
        sample_initial_positions(&psi, r, cfg.run.seed)?
    } else {
        sample_from_density(&Field::from_fn(grid, |_| 1.0), r, cfg.run.seed)?
    };
    let gravity = cfg.gravity.params()?;
    let mut standard = gravity.clone();
    standard.kappa = 0.0;
    standard.epsilon = 0.0;
    standard.include_hermitian_gravity = false;

    let main = h_curve(cfg, psi.clone(), start.clone(), gravity.clone())?;
    let reference = h_curve(cfg, psi.clone(), start, standard)?;
    let eq_start = sample_initial_positions(&psi, r, cfg.run.seed)?;
    let report = h_function(&eq_start, &psi, m.cell * grid.spacing())?;
    let equilibrium = h_curve(cfg, psi, eq_start, gravity)?;

    let max_curve_deviation = main
        .normalized()
        .iter()
        .zip(reference.normalized())
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    let cells = report.cells_per_axis.pow(grid.axes() as u32);
    let band = noise_band(cells, r);
    let equilibrium_max = equilibrium
        .h
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let final_ratio = main.final_ratio();
    Ok(RelaxationReport {
        modes: m.modes,
        members: r,
        cell_size: report.cell_size,
        final_ratio,
        reference_ratio: reference.final_ratio(),
        max_curve_deviation,
        noise_band: band,
        equilibrium_max,
        decayed: final_ratio < DECAY_TARGET,
        tracks_reference: max_curve_deviation < CURVE_TOLERANCE,
        equilibrium_in_band: equilibrium_max <= band,
        main,
        reference,
        equilibrium,
    })
}

impl RelaxationReport {
    pub fn into_output(self, cfg: &ScenarioConfig) -> LabResult<ScenarioOutput> {
        let mut h = CsvTable::new("h_function.csv", &["t", "H"]);
        let mut curves = CsvTable::new(
            "h_curves.csv",
            &["t", "h_main", "h_reference", "h_equilibrium"],
        );
        for (i, t) in self.main.t.iter().enumerate() {
            h.push(vec![(*t).into(), self.main.h[i].into()]);
            curves.push(vec![
                (*t).into(),
                self.main.h[i].into(),
                self.reference.h[i].into(),
                self.equilibrium.h[i].into(),
            ]);
        }
        let mut warnings = Vec::new();
        let flagged =
            self.main.flagged_steps + self.reference.flagged_steps + self.equilibrium.flagged_steps;
        if flagged > 0 {
            warnings.push(format!(
                "{flagged} member steps hit the wave-function node floor"
            ));
        }
        if !self.decayed {
            warnings.push(format!(
                "H fell only to {} of its initial value",
                self.final_ratio
            ));
        }
        Ok(ScenarioOutput {
            name: cfg.kind.name().to_string(),
            config: serde_json::to_value(cfg)?,
            seed: cfg.run.seed,
            results: json!({
                "modes": self.modes,
                "members": self.members,
                "cell_size": self.cell_size,
                "h_initial": self.main.h[0],
                "h_final": self.main.h[self.main.h.len() - 1],
                "final_ratio": self.final_ratio,
                "reference_ratio": self.reference_ratio,
                "max_curve_deviation": self.max_curve_deviation,
                "curve_tolerance": CURVE_TOLERANCE,
                "noise_band": self.noise_band,
                "equilibrium_max": self.equilibrium_max,
                "decayed": self.decayed,
                "tracks_reference": self.tracks_reference,
                "equilibrium_in_band": self.equilibrium_in_band,
                "flagged_member_steps": flagged,
            }),
            warnings,
            tables: vec![h, curves],
        })
    }
}
