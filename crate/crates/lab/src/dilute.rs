//! Correlation functions, localization rates and the SI timescale for a
//! dilute source: a small grid state or a number state.

use gbc_core::fock::{
    collapse_timescale_si, correlation_length, fock_correlation, fock_correlation_oracle,
    fock_current_correlation, fock_current_correlation_oracle, fock_density_rate, radial_profile,
    ORACLE_MAX_MODES, ORACLE_MAX_PARTICLES,
};
use gbc_core::gravity::potential_from_positions;
use gbc_core::observables::{
    current_density_correlation, current_rate_full, current_rate_gradient, density_correlation,
    density_rate_full, density_rate_gradient, force_modification_tensor,
};
use gbc_core::wavefunction::{product_state, symmetrized_state};
use gbc_core::{
    BohmianPoint, CorrelationData, Field, GravityParams, GravitySample, Grid, ModeFamily, ModeSet,
    Orbital, RateField, SiParams, WaveFunction,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{FockState, OrbitalState, ProbeConfig, ScenarioConfig, SiInputs, StateConfig};
use crate::error::{LabError, LabResult};
use crate::output::{CsvTable, ScenarioOutput};

/// Timescale quoted for the gas estimate, seconds.
pub const QUOTED_TIMESCALE: f64 = 1e6;
/// Correlation lengths of the sensitivity block, metres.
pub const LAMBDA_PAIR: (f64, f64) = (1e-9, 1e-7);

pub fn orbital_state(grid: Grid, s: &OrbitalState) -> LabResult<WaveFunction> {
    let d = grid.dims();
    let orbitals: Vec<Orbital> = s
        .centers
        .chunks(d)
        .enumerate()
        .map(|(n, c)| {
            let w = if s.widths.len() == 1 {
                s.widths[0]
            } else {
                s.widths[n]
            };
            Orbital::moving_gaussian(c, w, &s.momenta[n * d..(n + 1) * d])
        })
        .collect();
    let psi = if s.symmetrize {
        symmetrized_state(grid, &orbitals)?
    } else {
        product_state(grid, &orbitals)?
    };
    Ok(psi)
}

pub fn mode_set(dims: usize, s: &FockState) -> LabResult<ModeSet> {
    let family = match s.family.as_str() {
        "ring" => ModeFamily::Ring,
        _ => ModeFamily::Oscillator {
            width: s.mode_width,
            boost: s.boost.clone(),
        },
    };
    let indices = s.mode_indices.chunks(dims).map(<[i64]>::to_vec).collect();
    Ok(ModeSet::new(family, dims, indices, s.occupations.clone())?)
}

/// `|V_G|` sample on the one-particle grid `physical`: a uniform-force linear profile
/// or the softened potential of fixed point sources.
pub fn probe_sample(
    physical: Grid,
    probe: &ProbeConfig,
    gravity: &GravityParams,
) -> LabResult<GravitySample> {
    let d = physical.dims();
    if probe.potential == "linear" {
        let v = Field::from_fn(physical, |x| {
            probe.offset + x.iter().zip(&probe.slope).map(|(a, b)| a * b).sum::<f64>()
        });
        let force: Vec<f64> = probe
            .slope
            .iter()
            .flat_map(|s| vec![*s; physical.len()])
            .collect();
        Ok(GravitySample::from_parts(
            v,
            Field::from_values(physical, d, force)?,
        )?)
    } else {
        let point = BohmianPoint::new(probe.sources.len() / d, d, probe.sources.clone())?;
        Ok(potential_from_positions(&point, &physical, gravity)?)
    }
}

pub fn si_params(si: &SiInputs, lambda_c: f64) -> SiParams {
    SiParams {
        epsilon: si.epsilon,
        force: si.force,
        lambda_c,
        density: si.density,
        hbar: si.hbar,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimescaleBlock {
    pub inputs: SiInputs,
    pub seconds: f64,
    /// `ħ/(ε F λ⁴ ⟨D⟩)` evaluated term by term as a cross-check.
    pub by_hand: f64,
    pub quoted: f64,
    /// `|log₁₀(τ/quoted)|`.
    pub orders_from_quoted: f64,
    pub within_two_orders: bool,
    pub lambda_short: f64,
    pub lambda_long: f64,
    /// `τ(λ_short)/τ(λ_long)`.
    pub lambda_ratio: f64,
}

pub fn timescale_block(si: &SiInputs) -> LabResult<TimescaleBlock> {
    let seconds = collapse_timescale_si(&si_params(si, si.lambda_c))?;
    let by_hand = si.hbar / si.epsilon / si.force / si.lambda_c.powi(4) / si.density;
    let short = collapse_timescale_si(&si_params(si, LAMBDA_PAIR.0))?;
    let long = collapse_timescale_si(&si_params(si, LAMBDA_PAIR.1))?;
    let orders = (seconds / QUOTED_TIMESCALE).log10().abs();
    Ok(TimescaleBlock {
        inputs: si.clone(),
        seconds,
        by_hand,
        quoted: QUOTED_TIMESCALE,
        orders_from_quoted: orders,
        within_two_orders: orders <= 2.0,
        lambda_short: LAMBDA_PAIR.0,
        lambda_long: LAMBDA_PAIR.1,
        lambda_ratio: short / long,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SumRules {
    /// Largest `|∫F(r,r′)dr′|` over `max|F|`.
    pub f_row: f64,
    /// Largest `|∫K_i(r,r′)dr′|` over `max|K|`.
    pub k_row: f64,
    pub min_diagonal: f64,
    /// `|∫ rate_full|` over `max|rate_full|`.
    pub rate_integral: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleCheck {
    pub f_error: f64,
    pub k_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorAt {
    pub point: Vec<f64>,
    pub tensor: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiluteReport {
    pub source: String,
    pub epsilon: f64,
    pub correlation_length: Option<f64>,
    pub sum_rules: SumRules,
    /// `max|full − gradient| / max|full|` for the density rate, zero when both vanish.
    pub density_rate_deviation: f64,
    pub current_rate_deviation: f64,
    pub max_density_rate: f64,
    pub oracle: Option<OracleCheck>,
    pub tensors: Vec<TensorAt>,
    pub timescale: TimescaleBlock,
    #[serde(skip)]
    pub grid: Option<Grid>,
    #[serde(skip)]
    pub profile: Vec<f64>,
    #[serde(skip)]
    pub density_rates: [Vec<f64>; 2],
    #[serde(skip)]
    pub current_rates: [Vec<f64>; 2],
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn relative_deviation(full: &[f64], grad: &[f64]) -> f64 {
    let scale = max_abs(full);
    let dev = full
        .iter()
        .zip(grad)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale == 0.0 {
        dev
    } else {
        dev / scale
    }
}

fn row_residual(c: &CorrelationData) -> f64 {
    let scale = c.max_abs();
    let mut worst = 0.0f64;
    for comp in 0..c.rank() {
        for r in 0..c.points() {
            worst = worst.max(c.row_integral(comp, r).abs());
        }
    }
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

fn oracle_tractable(ms: &ModeSet) -> bool {
    ms.len() <= ORACLE_MAX_MODES && ms.particles() <= ORACLE_MAX_PARTICLES
}

/// Full analysis of the configured source; `with_oracle` adds the
/// occupation-basis cross-check for tractable number states.
pub fn analyze(cfg: &ScenarioConfig, with_oracle: bool) -> LabResult<DiluteReport> {
    let probe = cfg
        .probe
        .as_ref()
        .ok_or_else(|| LabError::Scenario("rate analysis needs probe settings".into()))?;
    let eps = cfg.gravity.epsilon;
    let gravity = cfg.gravity.params()?;
    let physical = Grid::new(cfg.grid.dims, 1, cfg.grid.points, cfg.grid.extent)?;
    let sample = probe_sample(physical, probe, &gravity)?;
    let (source, f, k, full, oracle) = match &cfg.state {
        StateConfig::Orbitals(s) => {
            let grid = cfg.grid.grid()?;
            let psi = orbital_state(grid, s)?;
            let f = density_correlation(&psi)?;
            let k = current_density_correlation(&psi)?;
            let full = density_rate_full(&f, &sample, eps)?;
            ("grid_state", f, k, full, None)
        }
        StateConfig::NumberState(s) => {
            let grid = physical;
            let ms = mode_set(cfg.grid.dims, s)?;
            let f = fock_correlation(&ms, &grid)?;
            let k = fock_current_correlation(&ms, &grid)?;
            let full = fock_density_rate(&ms, &sample, eps)?;
            let oracle = if with_oracle && oracle_tractable(&ms) {
                let fo = fock_correlation_oracle(&ms, &grid)?;
                let ko = fock_current_correlation_oracle(&ms, &grid)?;
                let diff = |a: &[f64], b: &[f64]| {
                    a.iter()
                        .zip(b)
                        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
                };
                Some(OracleCheck {
                    f_error: diff(f.values(), fo.values()),
                    k_error: diff(k.values(), ko.values()),
                })
            } else {
                None
            };
            ("number_state", f, k, full, oracle)
        }
        _ => {
            return Err(LabError::Scenario(
                "rate analysis needs orbitals or a mode set".into(),
            ))
        }
    };
    let grad = density_rate_gradient(&f, &sample, eps)?;
    let jfull = current_rate_full(&k, &sample, eps)?;
    let jgrad = current_rate_gradient(&k, &sample, eps)?;
    let d = physical.dims();
    let tensors = probe
        .tensor_points
        .chunks(d)
        .map(|p| {
            Ok(TensorAt {
                point: p.to_vec(),
                tensor: force_modification_tensor(&k, p, eps)?,
            })
        })
        .collect::<LabResult<Vec<_>>>()?;
    let min_diagonal = (0..f.points())
        .map(|r| f.diagonal(0, r))
        .fold(f64::INFINITY, f64::min);
    let total: f64 = full.values().iter().sum::<f64>() * physical.cell_volume();
    let scale = max_abs(full.values());
    let profile = radial_profile(&f)?;
    Ok(DiluteReport {
        source: source.to_string(),
        epsilon: eps,
        correlation_length: correlation_length(&f).ok(),
        sum_rules: SumRules {
            f_row: row_residual(&f),
            k_row: row_residual(&k),
            min_diagonal,
            rate_integral: if scale == 0.0 {
                total.abs()
            } else {
                total.abs() / scale
            },
        },
        density_rate_deviation: relative_deviation(full.values(), grad.values()),
        current_rate_deviation: relative_deviation(jfull.values(), jgrad.values()),
        max_density_rate: scale,
        oracle,
        tensors,
        timescale: timescale_block(&probe.si)?,
        grid: Some(physical),
        profile,
        density_rates: [full.values().to_vec(), grad.values().to_vec()],
        current_rates: [values(&jfull), values(&jgrad)],
    })
}

fn values(r: &RateField) -> Vec<f64> {
    r.values().to_vec()
}

pub fn run_dilute_scenario(cfg: &ScenarioConfig) -> LabResult<DiluteReport> {
    analyze(cfg, false)
}

pub fn run_fock_scenario(cfg: &ScenarioConfig) -> LabResult<DiluteReport> {
    analyze(cfg, true)
}

fn coordinate_header(d: usize) -> Vec<&'static str> {
    ["x", "y", "z"][..d].to_vec()
}

impl DiluteReport {
    pub fn into_output(self, cfg: &ScenarioConfig) -> LabResult<ScenarioOutput> {
        let grid = self.grid.expect("analysis fills the grid");
        let d = grid.dims();
        let mut x = vec![0.0; d];

        let mut header = coordinate_header(d);
        header.extend(["rate_full", "rate_gradient"]);
        let mut rates = CsvTable::new("rates.csv", &header);
        for r in 0..grid.len() {
            grid.point(r, &mut x);
            let mut row: Vec<_> = x.iter().map(|v| (*v).into()).collect();
            row.push(self.density_rates[0][r].into());
            row.push(self.density_rates[1][r].into());
            rates.push(row);
        }

        let mut header = coordinate_header(d);
        header.extend(["axis", "rate_full", "rate_gradient"]);
        let mut currents = CsvTable::new("current_rates.csv", &header);
        for axis in 0..d {
            for r in 0..grid.len() {
                grid.point(r, &mut x);
                let mut row: Vec<_> = x.iter().map(|v| (*v).into()).collect();
                let i = axis * grid.len() + r;
                row.push(axis.into());
                row.push(self.current_rates[0][i].into());
                row.push(self.current_rates[1][i].into());
                currents.push(row);
            }
        }

        let mut profile = CsvTable::new("correlation.csv", &["s", "f"]);
        for (i, v) in self.profile.iter().enumerate() {
            profile.push(vec![(i as f64 * grid.spacing()).into(), (*v).into()]);
        }

        let mut warnings = Vec::new();
        if self.correlation_length.is_none() {
            warnings
                .push("correlation function vanishes; correlation length undefined".to_string());
        }
        if !self.timescale.within_two_orders {
            warnings.push(format!(
                "timescale {} s is more than two orders from the quoted {} s",
                self.timescale.seconds, self.timescale.quoted
            ));
        }
        let name = cfg.kind.name().to_string();
        let results = json!({
            "source": self.source,
            "epsilon": self.epsilon,
            "correlation_length": self.correlation_length,
            "sum_rules": self.sum_rules,
            "density_rate_deviation": self.density_rate_deviation,
            "current_rate_deviation": self.current_rate_deviation,
            "max_density_rate": self.max_density_rate,
            "oracle": self.oracle,
            "force_tensors": self.tensors,
            "timescale": self.timescale,
        });
        Ok(ScenarioOutput {
            name,
            config: serde_json::to_value(cfg)?,
            seed: cfg.run.seed,
            results,
            warnings,
            tables: vec![rates, currents, profile],
        })
    }
}
