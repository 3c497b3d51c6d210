//! Generic run: Gaussian orbitals, optionally trapped, evolved with their
//! own Bohmian point as the gravitational source.

use gbc_core::bohm::sample_initial_positions;
use gbc_core::evolve::energy;
use gbc_core::observables::density;
use gbc_core::{
    EvolutionSetup, EvolutionState, ExternalPotentialSpec, PotentialTerm, Propagator, Snapshot,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{OrbitalState, ScenarioConfig, StateConfig};
use crate::dilute::orbital_state;
use crate::ensemble::ordered_map;
use crate::error::{LabError, LabResult};
use crate::output::{CsvTable, ScenarioOutput};

fn orbitals(cfg: &ScenarioConfig) -> LabResult<&OrbitalState> {
    match &cfg.state {
        StateConfig::Orbitals(s) => Ok(s),
        _ => Err(LabError::Scenario(
            "simulate needs Gaussian orbitals".into(),
        )),
    }
}

pub fn setup(cfg: &ScenarioConfig) -> LabResult<EvolutionSetup> {
    let s = orbitals(cfg)?;
    let grid = cfg.grid.grid()?;
    let mut setup = EvolutionSetup::new(grid, cfg.gravity.params()?);
    if s.trap > 0.0 {
        setup.potential = ExternalPotentialSpec::new(
            (0..grid.axes())
                .map(|axis| PotentialTerm::Harmonic {
                    axis,
                    center: 0.0,
                    stiffness: s.trap,
                })
                .collect(),
        );
    }
    Ok(setup)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnapshotSummary {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub positions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRun {
    pub run: usize,
    pub flagged_steps: usize,
    pub snapshots: Vec<SnapshotSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationReport {
    pub runs: Vec<TrajectoryRun>,
    /// Snapshots of run 0, for the density series.
    pub first: Vec<Snapshot>,
    pub max_norm_drift: f64,
}

pub fn run_simulation(cfg: &ScenarioConfig) -> LabResult<SimulationReport> {
    let setup = setup(cfg)?;
    let psi = orbital_state(setup.grid, orbitals(cfg)?)?;
    let ensemble = sample_initial_positions(&psi, cfg.run.ensemble, cfg.run.seed)?;
    let propagator = Propagator::new(setup, cfg.run.dt)?;
    let results = ordered_map(cfg.run.workers, ensemble.len(), |i| {
        let mut state = EvolutionState::new(
            propagator.setup(),
            psi.clone(),
            ensemble.members()[i].clone(),
        )?;
        let snaps = propagator.run(&mut state, cfg.run.steps(), cfg.run.snapshot_stride)?;
        let summary = snaps
            .iter()
            .map(|s| {
                Ok(SnapshotSummary {
                    t: s.time,
                    norm: s.psi.norm_sqr(),
                    energy: energy(propagator.setup(), &s.psi)?,
                    positions: s.bohm.positions().to_vec(),
                })
            })
            .collect::<LabResult<Vec<_>>>()?;
        let run = TrajectoryRun {
            run: i,
            flagged_steps: state.flagged_steps(),
            snapshots: summary,
        };
        Ok((run, if i == 0 { snaps } else { Vec::new() }))
    })?;
    let max_norm_drift = results
        .iter()
        .flat_map(|(r, _)| r.snapshots.iter().map(|s| (s.norm - 1.0).abs()))
        .fold(0.0f64, f64::max);
    let mut runs = Vec::new();
    let mut first = Vec::new();
    for (run, snaps) in results {
        if run.run == 0 {
            first = snaps;
        }
        runs.push(run);
    }
    Ok(SimulationReport {
        runs,
        first,
        max_norm_drift,
    })
}

impl SimulationReport {
    pub fn into_output(self, cfg: &ScenarioConfig) -> LabResult<ScenarioOutput> {
        let grid = cfg.grid.grid()?.physical();
        let d = grid.dims();
        let mut header = vec!["t"];
        header.extend(&["x", "y", "z"][..d]);
        header.push("value");
        let mut dens = CsvTable::new("density.csv", &header);
        let mut x = vec![0.0; d];
        for snap in &self.first {
            let rho = density(&snap.psi);
            for (r, v) in rho.values().iter().enumerate() {
                grid.point(r, &mut x);
                let mut row = vec![snap.time.into()];
                row.extend(x.iter().map(|c| (*c).into()));
                row.push((*v).into());
                dens.push(row);
            }
        }
        let axes = cfg.grid.particles * d;
        let q_names: Vec<String> = (0..axes).map(|a| format!("q{a}")).collect();
        let mut header: Vec<&str> = vec!["run", "t", "norm", "energy"];
        header.extend(q_names.iter().map(String::as_str));
        let mut traj = CsvTable::new("trajectories.csv", &header);
        for run in &self.runs {
            for s in &run.snapshots {
                let mut row = vec![run.run.into(), s.t.into(), s.norm.into(), s.energy.into()];
                row.extend(s.positions.iter().map(|q| (*q).into()));
                traj.push(row);
            }
        }
        let flagged: usize = self.runs.iter().map(|r| r.flagged_steps).sum();
        let mut warnings = Vec::new();
        if flagged > 0 {
            warnings.push(format!("{flagged} steps hit the wave-function node floor"));
        }
        let finals: Vec<_> = self
            .runs
            .iter()
            .map(|r| json!({"run": r.run, "final": r.snapshots.last(), "flagged_steps": r.flagged_steps}))
            .collect();
        Ok(ScenarioOutput {
            name: cfg.kind.name().to_string(),
            config: serde_json::to_value(cfg)?,
            seed: cfg.run.seed,
            results: json!({
                "steps": cfg.run.steps(),
                "max_norm_drift": self.max_norm_drift,
                "runs": finals,
            }),
            warnings,
            tables: vec![dens, traj],
        })
    }
}
