//! Two-branch measurement with a heavy collective pointer.
//!
//! The system coordinate `x₁` starts in `c₁ g_L + c₂ g_R`, each packet held
//! in its own Gaussian well. The pointer `x₂` starts in the ground state of
//! a harmonic trap and is pushed by `−χ x₂ tanh(x₁/w)` towards `∓`, so the
//! left packet drives the pointer into branch 1 (`x₂ < −gap/2`) and the
//! right packet into branch 2 (`x₂ ≥ gap/2`). Gravity on the pointer is
//! weighted by the amplification `A`.

use gbc_core::bohm::sample_initial_positions;
use gbc_core::wavefunction::product_state;
use gbc_core::{
    BohmianPoint, BranchRegion, EvolutionSetup, EvolutionState, ExternalPotentialSpec, Orbital,
    PotentialTerm, Propagator, WaveFunction,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{steps_for, PointerConfig, ScenarioConfig, StateConfig, TwoBranchState};
use crate::ensemble::{mean_sd, ordered_map, slope};
use crate::error::{LabError, LabResult};
use crate::output::{CsvTable, ScenarioOutput};

/// Gap weight below which the pointer branches count as separated.
pub const SEPARATION_GAP: f64 = 1e-3;
/// Looser completion threshold reported alongside the configured one.
pub const LOOSE_THRESHOLD: f64 = 1e-2;
/// Fit window on the empty-branch weight.
pub const FIT_WINDOW: (f64, f64) = (1e-2, 0.4);
/// Branches must be formed (gap weight below this) for a point to enter the fit.
pub const FIT_MAX_GAP: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchWeights {
    pub branch1: f64,
    pub branch2: f64,
    pub gap: f64,
}

impl BranchWeights {
    pub fn total(&self) -> f64 {
        self.branch1 + self.branch2 + self.gap
    }

    /// Weight of the branch on the other side of the ready position from `pointer`.
    pub fn empty_for(&self, pointer: f64) -> f64 {
        if pointer < 0.0 {
            self.branch2
        } else {
            self.branch1
        }
    }
}

/// Propagator, initial state and branch regions for one `(ε, A)` pair.
#[derive(Clone, Debug)]
pub struct MeasurementModel {
    propagator: Propagator,
    psi0: WaveFunction,
    regions: [BranchRegion; 3],
    half_gap: f64,
}

fn parts(cfg: &ScenarioConfig) -> LabResult<(&TwoBranchState, &PointerConfig)> {
    match (&cfg.state, &cfg.pointer) {
        (StateConfig::TwoBranch(s), Some(p)) => Ok((s, p)),
        _ => Err(LabError::Scenario(
            "measurement needs a two-branch state and a pointer section".into(),
        )),
    }
}

impl MeasurementModel {
    pub fn new(cfg: &ScenarioConfig, epsilon: f64, amplification: f64) -> LabResult<Self> {
        let (state, pointer) = parts(cfg)?;
        let grid = cfg.grid.grid()?;
        let mut gravity = cfg.gravity.params()?;
        gravity.epsilon = epsilon;
        gravity.weights = vec![1.0, amplification];
        let mu = pointer.mass_ratio;
        // trap frequency whose ground state has spread `pointer.width`
        let omega_p = 1.0 / (2.0 * mu * pointer.width * pointer.width);
        // wells whose curvature holds the system packets at their width
        let omega_s = 1.0 / (2.0 * state.width * state.width);
        let depth = -omega_s * omega_s * state.well_width * state.well_width;
        let well = |center: f64| PotentialTerm::Gaussian {
            particle: 0,
            center: vec![center],
            width: state.well_width,
            depth,
        };
        let mut setup = EvolutionSetup::new(grid, gravity);
        setup.masses = vec![1.0, mu];
        setup.potential = ExternalPotentialSpec::new(vec![
            PotentialTerm::TanhCoupling {
                system_axis: 0,
                pointer_axis: 1,
                chi: pointer.chi,
                width: pointer.switch_width,
            },
            PotentialTerm::Harmonic {
                axis: 1,
                center: 0.0,
                stiffness: mu * omega_p * omega_p,
            },
            well(-state.separation),
            well(state.separation),
        ]);
        let ready = Orbital::gaussian(&[0.0], pointer.width);
        let left = product_state(
            grid,
            &[
                Orbital::gaussian(&[-state.separation], state.width),
                ready.clone(),
            ],
        )?;
        let right = product_state(
            grid,
            &[Orbital::gaussian(&[state.separation], state.width), ready],
        )?;
        let psi0 =
            WaveFunction::superpose(&[(state.c1, &left), (state.c2, &right)])?.normalized()?;
        let half_gap = pointer.gap / 2.0;
        let regions = [
            BranchRegion::slab(2, 1, f64::NEG_INFINITY, -half_gap)?,
            BranchRegion::slab(2, 1, half_gap, f64::INFINITY)?,
            BranchRegion::slab(2, 1, -half_gap, half_gap)?,
        ];
        Ok(Self {
            propagator: Propagator::new(setup, cfg.run.dt)?,
            psi0,
            regions,
            half_gap,
        })
    }

    pub fn initial_state(&self) -> &WaveFunction {
        &self.psi0
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn weights(&self, psi: &WaveFunction) -> BranchWeights {
        BranchWeights {
            branch1: self.regions[0].weight(psi),
            branch2: self.regions[1].weight(psi),
            gap: self.regions[2].weight(psi),
        }
    }

    /// Branch (1 or 2) holding a pointer position, `None` inside the gap.
    pub fn branch_of(&self, pointer: f64) -> Option<usize> {
        if pointer < -self.half_gap {
            Some(1)
        } else if pointer >= self.half_gap {
            Some(2)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightRow {
    pub t: f64,
    pub weights: BranchWeights,
    pub empty: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    /// Stop once the configured threshold is crossed.
    Completion,
    /// Stop once the fit window has been passed after separation.
    FitWindow,
    /// Run the whole duration.
    Full,
}

/// Outcome of one seeded trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunOutcome {
    pub run: usize,
    pub survivor: Option<usize>,
    pub completion_time: Option<f64>,
    pub branch_at_separation: Option<usize>,
    pub separation_time: Option<f64>,
    pub loose_survivor: Option<usize>,
    pub loose_time: Option<f64>,
    pub fit_rate: Option<f64>,
    pub fit_points: usize,
    pub flagged_steps: usize,
    pub max_partition_error: f64,
    #[serde(skip)]
    pub series: Vec<WeightRow>,
}

fn completed(w: &BranchWeights, threshold: f64) -> Option<usize> {
    let done = w.branch1.min(w.branch2) < threshold && w.branch1 + w.branch2 >= 0.5;
    done.then_some(if w.branch1 >= w.branch2 { 1 } else { 2 })
}

/// Evolves one member from `point`, observing branch weights every `stride` steps.
#[allow(clippy::too_many_arguments)]
pub fn run_member(
    model: &MeasurementModel,
    run: usize,
    point: BohmianPoint,
    steps: usize,
    stride: usize,
    threshold: f64,
    rule: StopRule,
    record: bool,
) -> LabResult<RunOutcome> {
    let mut state = EvolutionState::new(model.propagator.setup(), model.psi0.clone(), point)?;
    let mut out = RunOutcome {
        run,
        survivor: None,
        completion_time: None,
        branch_at_separation: None,
        separation_time: None,
        loose_survivor: None,
        loose_time: None,
        fit_rate: None,
        fit_points: 0,
        flagged_steps: 0,
        max_partition_error: 0.0,
        series: Vec::new(),
    };
    let mut fit = Vec::new();
    let mut k = 0;
    loop {
        if k % stride == 0 || k == steps {
            let t = state.time();
            let w = model.weights(state.psi());
            let q2 = state.bohm().particle(1)[0];
            let empty = w.empty_for(q2);
            out.max_partition_error = out.max_partition_error.max((w.total() - 1.0).abs());
            if record {
                out.series.push(WeightRow {
                    t,
                    weights: w,
                    empty,
                });
            }
            if out.separation_time.is_none() && w.gap < SEPARATION_GAP {
                out.separation_time = Some(t);
                out.branch_at_separation = model.branch_of(q2);
            }
            if w.gap < FIT_MAX_GAP && empty > FIT_WINDOW.0 && empty < FIT_WINDOW.1 {
                fit.push((t, empty.ln()));
            }
            if out.loose_survivor.is_none() {
                if let Some(b) = completed(&w, LOOSE_THRESHOLD) {
                    out.loose_survivor = Some(b);
                    out.loose_time = Some(t);
                }
            }
            if out.survivor.is_none() {
                if let Some(b) = completed(&w, threshold) {
                    out.survivor = Some(b);
                    out.completion_time = Some(t);
                }
            }
            let stop = match rule {
                StopRule::Completion => out.survivor.is_some(),
                StopRule::FitWindow => out.separation_time.is_some() && empty <= FIT_WINDOW.0,
                StopRule::Full => false,
            };
            if stop || k >= steps {
                break;
            }
        }
        model.propagator.step_in_place(&mut state)?;
        k += 1;
    }
    out.flagged_steps = state.flagged_steps();
    out.fit_points = fit.len();
    out.fit_rate = slope(&fit).map(|s| -s);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BornComparison {
    pub expected: f64,
    pub observed: f64,
    pub sigma: f64,
    /// Half-width of the accepted band, three binomial standard deviations.
    pub band: f64,
    pub within_band: bool,
    pub converged: usize,
    pub not_converged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionSummary {
    /// Converged runs whose survivor is the branch holding the Bohmian
    /// pointer at separation.
    pub matched: usize,
    pub eligible: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdSensitivity {
    pub loose_threshold: f64,
    pub threshold: f64,
    /// Fraction of converged runs whose survivor is the same at both thresholds.
    pub agreement: f64,
    pub mean_completion_time: f64,
    pub mean_loose_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BornEnsemble {
    pub runs: Vec<RunOutcome>,
    pub born: BornComparison,
    pub selection: SelectionSummary,
    pub sensitivity: ThresholdSensitivity,
    pub max_partition_error: f64,
    pub flagged_steps: usize,
    #[serde(skip)]
    pub series: Vec<WeightRow>,
}

fn threshold(cfg: &ScenarioConfig) -> LabResult<f64> {
    Ok(parts(cfg)?.1.threshold)
}

/// `R` seeded runs at the configured `ε` and `A`, each stopped at collapse
/// completion except run 0, which is recorded over the whole duration.
pub fn run_born_ensemble(cfg: &ScenarioConfig) -> LabResult<BornEnsemble> {
    let (state, pointer) = parts(cfg)?;
    let model = MeasurementModel::new(cfg, cfg.gravity.epsilon, pointer.amplification)?;
    let ensemble = sample_initial_positions(model.initial_state(), cfg.run.ensemble, cfg.run.seed)?;
    let steps = cfg.run.steps();
    let threshold = threshold(cfg)?;
    let runs = ordered_map(cfg.run.workers, ensemble.len(), |i| {
        let rule = if i == 0 {
            StopRule::Full
        } else {
            StopRule::Completion
        };
        let point = ensemble.members()[i].clone();
        run_member(
            &model,
            i,
            point,
            steps,
            cfg.run.snapshot_stride,
            threshold,
            rule,
            i == 0,
        )
    })?;

    let converged: Vec<&RunOutcome> = runs.iter().filter(|r| r.survivor.is_some()).collect();
    let n = converged.len();
    let expected = state.c1.norm_sqr();
    let observed =
        converged.iter().filter(|r| r.survivor == Some(1)).count() as f64 / n.max(1) as f64;
    let sigma = (expected * (1.0 - expected) / n.max(1) as f64).sqrt();
    let born = BornComparison {
        expected,
        observed,
        sigma,
        band: 3.0 * sigma,
        within_band: n > 0 && (observed - expected).abs() <= 3.0 * sigma,
        converged: n,
        not_converged: runs.len() - n,
    };
    let matched = converged
        .iter()
        .filter(|r| r.branch_at_separation.is_some() && r.branch_at_separation == r.survivor)
        .count();
    let selection = SelectionSummary {
        matched,
        eligible: n,
        fraction: matched as f64 / n.max(1) as f64,
    };
    let agree = converged
        .iter()
        .filter(|r| r.loose_survivor == r.survivor)
        .count();
    let times: Vec<f64> = converged.iter().filter_map(|r| r.completion_time).collect();
    let loose: Vec<f64> = converged.iter().filter_map(|r| r.loose_time).collect();
    let sensitivity = ThresholdSensitivity {
        loose_threshold: LOOSE_THRESHOLD,
        threshold,
        agreement: agree as f64 / n.max(1) as f64,
        mean_completion_time: mean_sd(&times).0,
        mean_loose_time: mean_sd(&loose).0,
    };
    let max_partition_error = runs
        .iter()
        .fold(0.0f64, |m, r| m.max(r.max_partition_error));
    let flagged_steps = runs.iter().map(|r| r.flagged_steps).sum();
    let mut runs = runs;
    let series = std::mem::take(&mut runs[0].series);
    Ok(BornEnsemble {
        runs,
        born,
        selection,
        sensitivity,
        max_partition_error,
        flagged_steps,
        series,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub amplification: f64,
    pub rate: f64,
    pub rate_sd: f64,
    pub fitted_runs: usize,
    pub rates: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub epsilon: f64,
    pub duration: f64,
    pub rows: Vec<SweepRow>,
    pub strictly_increasing: bool,
    /// Log-log slope of rate against `A`, reported as data.
    pub exponent: Option<f64>,
}

/// Fitted empty-branch decay rate for each amplification, from the first
/// `sweep_runs` members of the ensemble.
pub fn run_sweep(cfg: &ScenarioConfig) -> LabResult<SweepTable> {
    let (_, pointer) = parts(cfg)?;
    let steps = steps_for(pointer.sweep_duration, cfg.run.dt);
    let threshold = threshold(cfg)?;
    let mut rows = Vec::new();
    for &a in &pointer.sweep {
        let model = MeasurementModel::new(cfg, cfg.gravity.epsilon, a)?;
        let ensemble =
            sample_initial_positions(model.initial_state(), pointer.sweep_runs, cfg.run.seed)?;
        let runs = ordered_map(cfg.run.workers, ensemble.len(), |i| {
            let point = ensemble.members()[i].clone();
            run_member(
                &model,
                i,
                point,
                steps,
                cfg.run.snapshot_stride,
                threshold,
                StopRule::FitWindow,
                false,
            )
        })?;
        let rates: Vec<f64> = runs.iter().filter_map(|r| r.fit_rate).collect();
        let (rate, rate_sd) = mean_sd(&rates);
        rows.push(SweepRow {
            amplification: a,
            rate,
            rate_sd,
            fitted_runs: rates.len(),
            rates,
        });
    }
    let strictly_increasing =
        rows.iter().all(|r| r.rate.is_finite()) && rows.windows(2).all(|w| w[1].rate > w[0].rate);
    let logs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.rate > 0.0)
        .map(|r| (r.amplification.ln(), r.rate.ln()))
        .collect();
    Ok(SweepTable {
        epsilon: cfg.gravity.epsilon,
        duration: pointer.sweep_duration,
        rows,
        strictly_increasing,
        exponent: slope(&logs),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlResult {
    pub separated: bool,
    pub window_start: f64,
    pub window_end: f64,
    /// Branch-1 weight at separation.
    pub plateau: f64,
    /// Largest change of either branch weight over the separated window.
    pub drift: f64,
}

/// `ε = 0` run. Without collapse the wave function ignores the Bohmian
/// point, so one evolution stands for the whole ensemble.
pub fn run_control(cfg: &ScenarioConfig) -> LabResult<ControlResult> {
    let (_, pointer) = parts(cfg)?;
    let model = MeasurementModel::new(cfg, 0.0, pointer.amplification)?;
    let point =
        sample_initial_positions(model.initial_state(), 1, cfg.run.seed)?.members()[0].clone();
    let run = run_member(
        &model,
        0,
        point,
        cfg.run.steps(),
        cfg.run.snapshot_stride,
        pointer.threshold,
        StopRule::Full,
        true,
    )?;
    let start = run
        .series
        .iter()
        .position(|r| r.weights.gap < SEPARATION_GAP);
    let Some(start) = start else {
        return Ok(ControlResult {
            separated: false,
            window_start: f64::NAN,
            window_end: f64::NAN,
            plateau: f64::NAN,
            drift: f64::NAN,
        });
    };
    let window: Vec<&WeightRow> = run.series[start..]
        .iter()
        .take_while(|r| r.weights.gap < SEPARATION_GAP)
        .collect();
    let first = window[0].weights;
    let drift = window.iter().fold(0.0f64, |m, r| {
        m.max((r.weights.branch1 - first.branch1).abs())
            .max((r.weights.branch2 - first.branch2).abs())
    });
    Ok(ControlResult {
        separated: true,
        window_start: window[0].t,
        window_end: window[window.len() - 1].t,
        plateau: first.branch1,
        drift,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementReport {
    pub c1_weight: f64,
    pub c2_weight: f64,
    pub ensemble: BornEnsemble,
    pub sweep: SweepTable,
    pub control: ControlResult,
}

pub fn run_measurement_scenario(cfg: &ScenarioConfig) -> LabResult<MeasurementReport> {
    let (state, _) = parts(cfg)?;
    Ok(MeasurementReport {
        c1_weight: state.c1.norm_sqr(),
        c2_weight: state.c2.norm_sqr(),
        ensemble: run_born_ensemble(cfg)?,
        sweep: run_sweep(cfg)?,
        control: run_control(cfg)?,
    })
}

impl MeasurementReport {
    pub fn into_output(self, cfg: &ScenarioConfig) -> LabResult<ScenarioOutput> {
        let mut weights = CsvTable::new(
            "branch_weights.csv",
            &["t", "w_branch1", "w_branch2", "w_gap", "w_empty"],
        );
        for r in &self.ensemble.series {
            weights.push(vec![
                r.t.into(),
                r.weights.branch1.into(),
                r.weights.branch2.into(),
                r.weights.gap.into(),
                r.empty.into(),
            ]);
        }
        let mut runs = CsvTable::new(
            "runs.csv",
            &[
                "run",
                "survivor",
                "branch_at_separation",
                "separation_time",
                "completion_time",
                "fit_rate",
            ],
        );
        for r in &self.ensemble.runs {
            runs.push(vec![
                r.run.into(),
                r.survivor.into(),
                r.branch_at_separation.into(),
                r.separation_time.unwrap_or(f64::NAN).into(),
                r.completion_time.unwrap_or(f64::NAN).into(),
                r.fit_rate.unwrap_or(f64::NAN).into(),
            ]);
        }
        let mut sweep = CsvTable::new(
            "sweep.csv",
            &["amplification", "rate", "rate_sd", "fitted_runs"],
        );
        for r in &self.sweep.rows {
            sweep.push(vec![
                r.amplification.into(),
                r.rate.into(),
                r.rate_sd.into(),
                r.fitted_runs.into(),
            ]);
        }
        let mut warnings = Vec::new();
        if self.ensemble.born.not_converged > 0 {
            warnings.push(format!(
                "{} runs did not finish collapsing within the duration and are excluded from Born statistics",
                self.ensemble.born.not_converged
            ));
        }
        if self.ensemble.flagged_steps > 0 {
            warnings.push(format!(
                "{} steps hit the wave-function node floor",
                self.ensemble.flagged_steps
            ));
        }
        if !self.sweep.strictly_increasing {
            warnings
                .push("fitted decay rate is not strictly increasing across the sweep".to_string());
        }
        Ok(ScenarioOutput {
            name: cfg.kind.name().to_string(),
            config: serde_json::to_value(cfg)?,
            seed: cfg.run.seed,
            results: json!({
                "c1_weight": self.c1_weight,
                "c2_weight": self.c2_weight,
                "born": self.ensemble.born,
                "selection": self.ensemble.selection,
                "threshold_sensitivity": self.ensemble.sensitivity,
                "max_partition_error": self.ensemble.max_partition_error,
                "flagged_steps": self.ensemble.flagged_steps,
                "runs": self.ensemble.runs,
                "sweep": self.sweep,
                "control": self.control,
                "separation_gap": SEPARATION_GAP,
                "fit_window": [FIT_WINDOW.0, FIT_WINDOW.1],
                "fit_max_gap": FIT_MAX_GAP,
            }),
            warnings,
            tables: vec![weights, runs, sweep],
        })
    }
}
