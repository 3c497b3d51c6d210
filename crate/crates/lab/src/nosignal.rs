//! Bob's marginal under two alternative local potentials on Alice's side.
//!
//! The state `c₁ g(x₁; a−s) g(x₂; b−s) + c₂ g(x₁; a+s) g(x₂; b+s)` is
//! evolved with a Gaussian well of setting-dependent depth around Alice's
//! centre `a`. Each seeded Bohmian point drives its own collapsing wave
//! function; the ensemble average of `∫|Φ|² dx₁` is compared between the
//! two settings. Both settings start from the same points.

use gbc_core::bohm::sample_initial_positions;
use gbc_core::wavefunction::product_state;
use gbc_core::{
    BohmianPoint, EvolutionSetup, EvolutionState, ExternalPotentialSpec, Orbital, PotentialTerm,
    Propagator, WaveFunction,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{EntangledState, ScenarioConfig, StateConfig};
use crate::ensemble::ordered_map;
use crate::error::{LabError, LabResult};
use crate::output::{CsvTable, ScenarioOutput};

/// Identical-settings control bound.
pub const IDENTICAL_TOLERANCE: f64 = 1e-10;

fn state(cfg: &ScenarioConfig) -> LabResult<&EntangledState> {
    match &cfg.state {
        StateConfig::Entangled(s) => Ok(s),
        _ => Err(LabError::Scenario(
            "no-signaling needs an entangled two-particle state".into(),
        )),
    }
}

#[derive(Clone, Debug)]
pub struct SettingModel {
    propagator: Propagator,
    psi0: WaveFunction,
}

impl SettingModel {
    pub fn new(cfg: &ScenarioConfig, epsilon: f64, depth: f64) -> LabResult<Self> {
        let s = state(cfg)?;
        let grid = cfg.grid.grid()?;
        let mut gravity = cfg.gravity.params()?;
        gravity.epsilon = epsilon;
        let mut setup = EvolutionSetup::new(grid, gravity);
        setup.potential = ExternalPotentialSpec::new(vec![PotentialTerm::Gaussian {
            particle: 0,
            center: vec![s.alice_center],
            width: s.setting_width,
            depth,
        }]);
        Ok(Self {
            propagator: Propagator::new(setup, cfg.run.dt)?,
            psi0: initial_state(cfg)?,
        })
    }

    /// Bob's marginal after `steps` steps from `point`, with the count of
    /// steps that hit the node floor.
    pub fn final_marginal(
        &self,
        point: BohmianPoint,
        steps: usize,
    ) -> LabResult<(Vec<f64>, usize)> {
        let mut st = EvolutionState::new(self.propagator.setup(), self.psi0.clone(), point)?;
        for _ in 0..steps {
            self.propagator.step_in_place(&mut st)?;
        }
        Ok((bob_marginal(st.psi()), st.flagged_steps()))
    }
}

pub fn initial_state(cfg: &ScenarioConfig) -> LabResult<WaveFunction> {
    let s = state(cfg)?;
    let grid = cfg.grid.grid()?;
    let pair = |shift: f64| {
        product_state(
            grid,
            &[
                Orbital::gaussian(&[s.alice_center + shift], s.width),
                Orbital::gaussian(&[s.bob_center + shift], s.width),
            ],
        )
    };
    let (lo, hi) = (pair(-s.separation)?, pair(s.separation)?);
    Ok(WaveFunction::superpose(&[(s.c1, &lo), (s.c2, &hi)])?.normalized()?)
}

/// `∫|Φ(x₁, x₂)|² dx₁` on the grid nodes of `x₂`.
pub fn bob_marginal(psi: &WaveFunction) -> Vec<f64> {
    let grid = psi.grid();
    let h = grid.spacing();
    let mut out = vec![0.0; grid.points()];
    for (idx, v) in psi.values().iter().enumerate() {
        out[grid.axis_index(idx, 1)] += v.norm_sqr() * h;
    }
    out
}

pub fn l1_distance(a: &[f64], b: &[f64], h: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * h
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoSignalReport {
    pub epsilon: f64,
    pub settings: Vec<f64>,
    pub runs: usize,
    pub bins: usize,
    /// `4 √(bins/R)` for marginals normalized to one.
    pub tolerance: f64,
    pub l1: f64,
    pub passed: bool,
    /// Identical settings at `ε = 0`.
    pub control_identical_l1: f64,
    /// The two settings at `ε = 0`.
    pub control_standard_l1: f64,
    pub flagged_steps: usize,
    pub x: Vec<f64>,
    pub marginals: [Vec<f64>; 2],
}

/// Ensemble-averaged final marginals for both settings at `epsilon`, and
/// the total of flagged steps.
pub fn averaged_marginals(cfg: &ScenarioConfig, epsilon: f64) -> LabResult<([Vec<f64>; 2], usize)> {
    let s = state(cfg)?;
    let models = [
        SettingModel::new(cfg, epsilon, s.settings[0])?,
        SettingModel::new(cfg, epsilon, s.settings[1])?,
    ];
    let steps = cfg.run.steps();
    // without collapse the wave function ignores the point, so one run is the ensemble
    let count = if epsilon == 0.0 { 1 } else { cfg.run.ensemble };
    let ensemble = sample_initial_positions(&models[0].psi0, count, cfg.run.seed)?;
    let per_run = ordered_map(cfg.run.workers, count, |i| {
        let p = &ensemble.members()[i];
        Ok([
            models[0].final_marginal(p.clone(), steps)?,
            models[1].final_marginal(p.clone(), steps)?,
        ])
    })?;
    let m = cfg.grid.points;
    let mut out = [vec![0.0; m], vec![0.0; m]];
    let mut flagged = 0;
    for run in &per_run {
        for (acc, (marginal, f)) in out.iter_mut().zip(run) {
            flagged += f;
            for (a, v) in acc.iter_mut().zip(marginal) {
                *a += v;
            }
        }
    }
    for acc in &mut out {
        for a in acc.iter_mut() {
            *a /= count as f64;
        }
    }
    Ok((out, flagged))
}

pub fn run_nosignaling_scenario(cfg: &ScenarioConfig) -> LabResult<NoSignalReport> {
    let s = state(cfg)?;
    let grid = cfg.grid.grid()?;
    let h = grid.spacing();
    let m = grid.points();
    let (marginals, flagged_steps) = averaged_marginals(cfg, cfg.gravity.epsilon)?;
    let l1 = l1_distance(&marginals[0], &marginals[1], h);
    let tolerance = 4.0 * (m as f64 / cfg.run.ensemble as f64).sqrt();

    let (standard, _) = averaged_marginals(cfg, 0.0)?;
    let same = SettingModel::new(cfg, 0.0, s.settings[0])?;
    let p = sample_initial_positions(&same.psi0, 1, cfg.run.seed)?.members()[0].clone();
    let (a, _) = same.final_marginal(p.clone(), cfg.run.steps())?;
    let (b, _) = same.final_marginal(p, cfg.run.steps())?;
    Ok(NoSignalReport {
        epsilon: cfg.gravity.epsilon,
        settings: s.settings.clone(),
        runs: cfg.run.ensemble,
        bins: m,
        tolerance,
        l1,
        passed: l1 < tolerance,
        control_identical_l1: l1_distance(&a, &b, h),
        control_standard_l1: l1_distance(&standard[0], &standard[1], h),
        flagged_steps,
        x: grid.coordinates(),
        marginals,
    })
}

impl NoSignalReport {
    pub fn into_output(self, cfg: &ScenarioConfig) -> LabResult<ScenarioOutput> {
        let mut table = CsvTable::new(
            "bob_marginals.csv",
            &["x", "setting1", "setting2", "difference"],
        );
        for (i, x) in self.x.iter().enumerate() {
            let (a, b) = (self.marginals[0][i], self.marginals[1][i]);
            table.push(vec![(*x).into(), a.into(), b.into(), (b - a).into()]);
        }
        let mut warnings = Vec::new();
        if !self.passed {
            warnings.push(format!(
                "L1 distance {} exceeds the statistical tolerance {}",
                self.l1, self.tolerance
            ));
        }
        Ok(ScenarioOutput {
            name: cfg.kind.name().to_string(),
            config: serde_json::to_value(cfg)?,
            seed: cfg.run.seed,
            results: json!({
                "epsilon": self.epsilon,
                "settings": self.settings,
                "runs": self.runs,
                "bins": self.bins,
                "tolerance": self.tolerance,
                "l1": self.l1,
                "passed": self.passed,
                "control_identical_l1": self.control_identical_l1,
                "control_standard_l1": self.control_standard_l1,
                "flagged_steps": self.flagged_steps,
            }),
            warnings,
            tables: vec![table],
        })
    }
}
