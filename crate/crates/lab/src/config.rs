//! Line-oriented scenario configuration.
//!
//! ```text
//! # measurement with unequal weights
//! [run]
//! scenario = measurement
//! seed = 7
//!
//! [state]
//! c1 = 0.6
//! c2 = 0.8i
//! ```
//!
//! Sections are `[grid]`, `[gravity]`, `[state]`, `[pointer]` and `[run]`.
//! Values are numbers, `true`/`false`, bare or quoted strings, bracketed
//! lists like `[1, 4, 16]`, or complex numbers written `a+bi`. A key the
//! chosen scenario never reads is an error, so typos cannot pass silently.
//! Every parse collects all problems before reporting.

use std::cell::{Cell, RefCell};
use std::f64::consts::PI;

use gbc_core::fock::HBAR_SI;
use gbc_core::{Complex64, GravityParams, Grid};
use serde::{Serialize, Serializer};

use crate::error::ConfigError;

pub const SECTIONS: [&str; 5] = ["grid", "gravity", "state", "pointer", "run"];

/// Tolerance on `|c₁|² + |c₂|² = 1`.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Simulate,
    Measurement,
    Nosignaling,
    Relaxation,
    Dilute,
    Fock,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Simulate,
        ScenarioKind::Measurement,
        ScenarioKind::Nosignaling,
        ScenarioKind::Relaxation,
        ScenarioKind::Dilute,
        ScenarioKind::Fock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Simulate => "simulate",
            ScenarioKind::Measurement => "measurement",
            ScenarioKind::Nosignaling => "nosignaling",
            ScenarioKind::Relaxation => "relaxation",
            ScenarioKind::Dilute => "dilute",
            ScenarioKind::Fock => "fock",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub dims: usize,
    pub particles: usize,
    pub points: usize,
    pub extent: f64,
}

impl GridConfig {
    pub fn spacing(&self) -> f64 {
        self.extent / self.points as f64
    }

    pub fn grid(&self) -> gbc_core::Result<Grid> {
        Grid::new(self.dims, self.particles, self.points, self.extent)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GravityConfig {
    pub kappa: f64,
    pub epsilon: f64,
    pub softening: f64,
    pub hermitian: bool,
    pub self_pairs: bool,
}

impl GravityConfig {
    pub fn params(&self) -> gbc_core::Result<GravityParams> {
        let mut p = GravityParams::new(self.kappa, self.epsilon, self.softening)?;
        p.include_hermitian_gravity = self.hermitian;
        p.include_self_pairs = self.self_pairs;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub dt: f64,
    pub duration: f64,
    pub snapshot_stride: usize,
    pub ensemble: usize,
    pub workers: usize,
    pub output: String,
}

impl RunConfig {
    pub fn steps(&self) -> usize {
        steps_for(self.duration, self.dt)
    }
}

/// Whole steps of length `dt` covering `duration`.
pub fn steps_for(duration: f64, dt: f64) -> usize {
    (duration / dt - 1e-9).ceil().max(0.0) as usize
}

/// System in a superposition of two packets held in Gaussian wells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoBranchState {
    #[serde(serialize_with = "complex_pair")]
    pub c1: Complex64,
    #[serde(serialize_with = "complex_pair")]
    pub c2: Complex64,
    /// Packets sit at `∓separation`.
    pub separation: f64,
    pub width: f64,
    pub well_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointerConfig {
    /// Pointer mass over system mass.
    pub mass_ratio: f64,
    /// Gravity weight `A` of the pointer coordinate.
    pub amplification: f64,
    pub chi: f64,
    pub switch_width: f64,
    /// Position spread of the ready state, which is the trap ground state.
    pub width: f64,
    /// Full width of the gap band around the ready position.
    pub gap: f64,
    /// Collapse completion threshold on the empty-branch weight.
    pub threshold: f64,
    pub sweep: Vec<f64>,
    pub sweep_runs: usize,
    pub sweep_duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntangledState {
    #[serde(serialize_with = "complex_pair")]
    pub c1: Complex64,
    #[serde(serialize_with = "complex_pair")]
    pub c2: Complex64,
    pub alice_center: f64,
    pub bob_center: f64,
    pub separation: f64,
    pub width: f64,
    /// Depth of Alice's local Gaussian potential under each setting.
    pub settings: Vec<f64>,
    pub setting_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModesState {
    pub modes: usize,
    pub initial: String,
    /// Coarse-graining cell in grid spacings.
    pub cell: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitalState {
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    pub momenta: Vec<f64>,
    pub symmetrize: bool,
    pub trap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FockState {
    pub family: String,
    pub mode_indices: Vec<i64>,
    pub occupations: Vec<u32>,
    pub mode_width: f64,
    pub boost: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiInputs {
    pub epsilon: f64,
    pub force: f64,
    pub lambda_c: f64,
    pub density: f64,
    pub hbar: f64,
}

/// Potential sample and evaluation points for rate tabulation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub potential: String,
    pub offset: f64,
    pub slope: Vec<f64>,
    pub sources: Vec<f64>,
    pub tensor_points: Vec<f64>,
    pub si: SiInputs,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "recipe", rename_all = "snake_case")]
pub enum StateConfig {
    TwoBranch(TwoBranchState),
    Entangled(EntangledState),
    RingModes(ModesState),
    Orbitals(OrbitalState),
    NumberState(FockState),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub grid: GridConfig,
    pub gravity: GravityConfig,
    pub run: RunConfig,
    pub state: StateConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pointer: Option<PointerConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
}

fn complex_pair<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [c.re, c.im].serialize(s)
}

/// Parses a configuration whose `[run]` section names the scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, Vec<ConfigError>> {
    parse_with(text, None)
}

/// Parses a configuration for a scenario fixed by the caller; a
/// `scenario` key, if present, must agree.
pub fn parse_config_as(text: &str, kind: ScenarioKind) -> Result<ScenarioConfig, Vec<ConfigError>> {
    parse_with(text, Some(kind))
}

fn parse_with(
    text: &str,
    forced: Option<ScenarioKind>,
) -> Result<ScenarioConfig, Vec<ConfigError>> {
    let doc = Document::parse(text);
    let named = doc.get::<String>("run", "scenario");
    let kind = match (forced, named) {
        (Some(k), None) => Some(k),
        (Some(k), Some(name)) => {
            if name != k.name() {
                doc.fail(
                    "run",
                    "scenario",
                    format!(
                        "`scenario = {name}` conflicts with the `{}` command",
                        k.name()
                    ),
                );
            }
            Some(k)
        }
        (None, Some(name)) => {
            let k = ScenarioKind::from_name(&name);
            if k.is_none() {
                doc.fail("run", "scenario", format!("unknown scenario `{name}`"));
            }
            k
        }
        (None, None) => {
            doc.missing("run", "scenario");
            None
        }
    };
    let Some(kind) = kind else {
        return Err(doc.finish());
    };
    let cfg = build(&doc, kind);
    let errors = doc.finish();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

/// Scenario defaults that differ between kinds.
struct Defaults {
    dims: usize,
    points: usize,
    extent: f64,
    kappa: f64,
    epsilon: f64,
    hermitian: bool,
    dt: f64,
    duration: f64,
    stride: usize,
    ensemble: usize,
}

fn defaults(kind: ScenarioKind) -> Defaults {
    let base = Defaults {
        dims: 1,
        points: 64,
        extent: 16.0,
        kappa: 1.0,
        epsilon: 0.01,
        hermitian: true,
        dt: 1e-3,
        duration: 1.0,
        stride: 10,
        ensemble: 1,
    };
    match kind {
        ScenarioKind::Simulate | ScenarioKind::Dilute | ScenarioKind::Fock => base,
        ScenarioKind::Measurement => Defaults {
            points: 32,
            epsilon: 0.005,
            hermitian: false,
            dt: 0.02,
            duration: 40.0,
            stride: 5,
            ensemble: 1000,
            ..base
        },
        ScenarioKind::Nosignaling => Defaults {
            points: 32,
            hermitian: false,
            dt: 0.02,
            duration: 3.0,
            stride: 50,
            ensemble: 2000,
            ..base
        },
        ScenarioKind::Relaxation => Defaults {
            dims: 2,
            points: 32,
            extent: 2.0 * PI,
            kappa: 0.1,
            epsilon: 1e-3,
            dt: 3.5e-3,
            duration: 2.0 * PI,
            stride: 90,
            ensemble: 10000,
            ..base
        },
    }
}

fn build(doc: &Document, kind: ScenarioKind) -> ScenarioConfig {
    let d = defaults(kind);

    let dims = doc.or("grid", "dims", d.dims);
    doc.check("grid", "dims", (1..=3).contains(&dims), "must be 1, 2 or 3");
    let points = doc.or("grid", "points", d.points);
    doc.check(
        "grid",
        "points",
        points >= 4 && points.is_power_of_two(),
        "must be a power of two, at least 4",
    );
    let extent = doc.or("grid", "extent", d.extent);
    doc.check("grid", "extent", extent > 0.0, "must be positive");

    let state = match kind {
        ScenarioKind::Measurement => StateConfig::TwoBranch(two_branch(doc)),
        ScenarioKind::Nosignaling => StateConfig::Entangled(entangled(doc)),
        ScenarioKind::Relaxation => StateConfig::RingModes(ring_modes(doc)),
        ScenarioKind::Simulate => StateConfig::Orbitals(orbitals(doc, dims, 0.0)),
        ScenarioKind::Fock => StateConfig::NumberState(number_state(doc, dims)),
        ScenarioKind::Dilute => {
            let source = doc.or("state", "source", "orbitals".to_string());
            match source.as_str() {
                "orbitals" => StateConfig::Orbitals(orbitals(doc, dims, 0.8)),
                "modes" => StateConfig::NumberState(number_state(doc, dims)),
                _ => {
                    doc.fail(
                        "state",
                        "source",
                        format!("must be `orbitals` or `modes`, found `{source}`"),
                    );
                    StateConfig::Orbitals(orbitals(doc, dims, 0.8))
                }
            }
        }
    };

    let implied = match (&state, kind) {
        (StateConfig::TwoBranch(_) | StateConfig::Entangled(_), _) => Some(2),
        (StateConfig::RingModes(_), _) => Some(1),
        (StateConfig::Orbitals(o), _) => Some((o.centers.len() / dims.max(1)).max(1)),
        (StateConfig::NumberState(_), _) => None,
    };
    let particles = match implied {
        Some(n) => {
            if let Some(given) = doc.get::<usize>("grid", "particles") {
                doc.check(
                    "grid",
                    "particles",
                    given == n,
                    &format!("must be {n} for this state"),
                );
            }
            n
        }
        None => 1,
    };
    if matches!(kind, ScenarioKind::Measurement | ScenarioKind::Nosignaling) {
        doc.check("grid", "dims", dims == 1, "must be 1 for this scenario");
    }
    if let StateConfig::Orbitals(_) = state {
        let cap = if kind == ScenarioKind::Dilute { 3 } else { 4 };
        doc.check(
            "state",
            "centers",
            particles <= cap,
            &format!("at most {cap} particles"),
        );
    }

    let grid = GridConfig {
        dims,
        particles,
        points,
        extent,
    };

    let kappa = doc.or("gravity", "kappa", d.kappa);
    doc.check("gravity", "kappa", kappa >= 0.0, "must be non-negative");
    let epsilon = doc.or("gravity", "epsilon", d.epsilon);
    doc.check("gravity", "epsilon", epsilon >= 0.0, "must be non-negative");
    doc.check("gravity", "epsilon", epsilon <= 1.0, "must not exceed 1");
    let softening = doc.or("gravity", "softening", 2.0 * grid.spacing());
    doc.check("gravity", "softening", softening > 0.0, "must be positive");
    let gravity = GravityConfig {
        kappa,
        epsilon,
        softening,
        hermitian: doc.or("gravity", "hermitian", d.hermitian),
        self_pairs: doc.or("gravity", "self_pairs", true),
    };

    let dt = doc.or("run", "dt", d.dt);
    doc.check("run", "dt", dt > 0.0, "must be positive");
    let duration = doc.or("run", "duration", d.duration);
    doc.check("run", "duration", duration >= 0.0, "must be non-negative");
    let snapshot_stride = doc.or("run", "snapshot_stride", d.stride);
    doc.check(
        "run",
        "snapshot_stride",
        snapshot_stride >= 1,
        "must be at least 1",
    );
    let ensemble = doc.or("run", "ensemble", d.ensemble);
    doc.check("run", "ensemble", ensemble >= 1, "must be at least 1");
    let workers = doc.or("run", "workers", 1usize);
    doc.check("run", "workers", workers >= 1, "must be at least 1");
    let run = RunConfig {
        seed: doc.or("run", "seed", 0u64),
        dt,
        duration,
        snapshot_stride,
        ensemble,
        workers,
        output: doc.or("run", "output", "out".to_string()),
    };

    let pointer = (kind == ScenarioKind::Measurement).then(|| pointer(doc, &grid));
    let probe = matches!(kind, ScenarioKind::Dilute | ScenarioKind::Fock).then(|| probe(doc, dims));

    ScenarioConfig {
        kind,
        grid,
        gravity,
        run,
        state,
        pointer,
        probe,
    }
}

fn weights(doc: &Document) -> (Complex64, Complex64) {
    let c1 = doc.required::<Complex64>("state", "c1");
    let c2 = doc.required::<Complex64>("state", "c2");
    match (c1, c2) {
        (Some(a), Some(b)) => {
            let total = a.norm_sqr() + b.norm_sqr();
            doc.check(
                "state",
                "c2",
                (total - 1.0).abs() <= WEIGHT_TOLERANCE,
                &format!("|c1|² + |c2|² must equal 1 within 1e-12 (found {total})"),
            );
            (a, b)
        }
        _ => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
    }
}

fn positive(doc: &Document, section: &str, key: &str, default: f64) -> f64 {
    let v = doc.or(section, key, default);
    doc.check(section, key, v > 0.0, "must be positive");
    v
}

fn two_branch(doc: &Document) -> TwoBranchState {
    let (c1, c2) = weights(doc);
    TwoBranchState {
        c1,
        c2,
        separation: positive(doc, "state", "separation", 3.5),
        width: positive(doc, "state", "width", 0.7),
        well_width: positive(doc, "state", "well_width", 1.5),
    }
}

fn pointer(doc: &Document, grid: &GridConfig) -> PointerConfig {
    let mass_ratio = doc.or("pointer", "mass_ratio", 10.0);
    doc.check(
        "pointer",
        "mass_ratio",
        mass_ratio >= 10.0,
        "must be at least 10",
    );
    let chi = doc.or("pointer", "chi", 0.56);
    doc.check("pointer", "chi", chi >= 0.0, "must be non-negative");
    let gap = positive(doc, "pointer", "gap", 1.5);
    doc.check(
        "pointer",
        "gap",
        gap < grid.extent,
        "must be narrower than the box",
    );
    let threshold = doc.or("pointer", "threshold", 1e-3);
    doc.check(
        "pointer",
        "threshold",
        threshold > 0.0 && threshold < 0.5,
        "must lie in (0, 0.5)",
    );
    let sweep = doc.or("pointer", "sweep", vec![1.0, 4.0, 16.0, 64.0]);
    doc.check(
        "pointer",
        "sweep",
        !sweep.is_empty() && sweep.iter().all(|a| *a > 0.0),
        "must be a non-empty list of positive amplifications",
    );
    let sweep_runs = doc.or("pointer", "sweep_runs", 3usize);
    doc.check(
        "pointer",
        "sweep_runs",
        sweep_runs >= 1,
        "must be at least 1",
    );
    PointerConfig {
        mass_ratio,
        amplification: positive(doc, "pointer", "amplification", 64.0),
        chi,
        switch_width: positive(doc, "pointer", "switch_width", 0.3),
        width: positive(doc, "pointer", "width", 0.5),
        gap,
        threshold,
        sweep,
        sweep_runs,
        sweep_duration: positive(doc, "pointer", "sweep_duration", 80.0),
    }
}

fn entangled(doc: &Document) -> EntangledState {
    let (c1, c2) = weights(doc);
    let settings = doc.or("state", "settings", vec![0.0, 2.0]);
    doc.check(
        "state",
        "settings",
        settings.len() == 2,
        "must list exactly two depths",
    );
    EntangledState {
        c1,
        c2,
        alice_center: doc.or("state", "alice_center", -4.0),
        bob_center: doc.or("state", "bob_center", 4.0),
        separation: positive(doc, "state", "separation", 1.5),
        width: positive(doc, "state", "width", 0.7),
        settings,
        setting_width: positive(doc, "state", "setting_width", 1.0),
    }
}

fn ring_modes(doc: &Document) -> ModesState {
    let modes = doc.or("state", "modes", 16usize);
    doc.check("state", "modes", modes >= 16, "must be at least 16");
    let initial = doc.or("state", "initial", "nonequilibrium".to_string());
    doc.check(
        "state",
        "initial",
        initial == "nonequilibrium" || initial == "equilibrium",
        "must be `nonequilibrium` or `equilibrium`",
    );
    let cell = doc.or("state", "cell", 4.0);
    doc.check(
        "state",
        "cell",
        cell >= 1.0,
        "must be at least one grid spacing",
    );
    ModesState {
        modes,
        initial,
        cell,
    }
}

fn orbitals(doc: &Document, dims: usize, speed: f64) -> OrbitalState {
    let centers = doc.or("state", "centers", vec![-1.5, 1.5]);
    let ok = !centers.is_empty() && centers.len().is_multiple_of(dims.max(1));
    doc.check(
        "state",
        "centers",
        ok,
        "needs a whole number of d-dimensional centres",
    );
    let n = (centers.len() / dims.max(1)).max(1);
    let widths = doc.or("state", "widths", vec![0.8]);
    doc.check(
        "state",
        "widths",
        (widths.len() == 1 || widths.len() == n) && widths.iter().all(|w| *w > 0.0),
        "needs one positive width or one per particle",
    );
    let default_momenta: Vec<f64> = (0..n * dims)
        .map(|i| {
            if (i / dims).is_multiple_of(2) {
                speed
            } else {
                -speed
            }
        })
        .collect();
    let momenta = doc.or("state", "momenta", default_momenta);
    doc.check(
        "state",
        "momenta",
        momenta.len() == n * dims,
        "needs one momentum component per centre component",
    );
    let trap = doc.or("state", "trap", 0.0);
    doc.check("state", "trap", trap >= 0.0, "must be non-negative");
    OrbitalState {
        centers,
        widths,
        momenta,
        symmetrize: doc.or("state", "symmetrize", true),
        trap,
    }
}

fn number_state(doc: &Document, dims: usize) -> FockState {
    let family = doc.or("state", "family", "oscillator".to_string());
    doc.check(
        "state",
        "family",
        family == "ring" || family == "oscillator",
        "must be `ring` or `oscillator`",
    );
    let occupations = doc.or("state", "occupations", vec![1u32, 1]);
    doc.check(
        "state",
        "occupations",
        !occupations.is_empty(),
        "must not be empty",
    );
    // oscillator levels 0, 1, 2, … or ring wavenumbers 1, 3, 5, … along x
    let first = |j: usize| {
        if family == "ring" {
            2 * j as i64 + 1
        } else {
            j as i64
        }
    };
    let default_indices: Vec<i64> = (0..occupations.len() * dims)
        .map(|i| if i % dims == 0 { first(i / dims) } else { 0 })
        .collect();
    let mode_indices = doc.or("state", "mode_indices", default_indices);
    doc.check(
        "state",
        "mode_indices",
        mode_indices.len() == occupations.len() * dims,
        "needs d indices per occupied mode",
    );
    let mut boost = vec![0.0; dims];
    boost[0] = 0.7;
    let boost = doc.or("state", "boost", boost);
    doc.check(
        "state",
        "boost",
        boost.len() == dims,
        "needs one component per axis",
    );
    FockState {
        family,
        mode_indices,
        occupations,
        mode_width: positive(doc, "state", "mode_width", 1.0),
        boost,
    }
}

fn probe(doc: &Document, dims: usize) -> ProbeConfig {
    let potential = doc.or("state", "potential", "linear".to_string());
    doc.check(
        "state",
        "potential",
        potential == "linear" || potential == "sources",
        "must be `linear` or `sources`",
    );
    let mut slope = vec![0.0; dims];
    slope[0] = 0.2;
    let slope = doc.or("state", "slope", slope);
    doc.check(
        "state",
        "slope",
        slope.len() == dims,
        "needs one component per axis",
    );
    let sources = doc.or("state", "sources", vec![0.0; dims]);
    doc.check(
        "state",
        "sources",
        !sources.is_empty() && sources.len().is_multiple_of(dims),
        "needs a whole number of d-dimensional positions",
    );
    let tensor_points = doc.or("state", "tensor_points", vec![0.0; dims]);
    doc.check(
        "state",
        "tensor_points",
        !tensor_points.is_empty() && tensor_points.len().is_multiple_of(dims),
        "needs a whole number of d-dimensional points",
    );
    let si = SiInputs {
        epsilon: positive(doc, "gravity", "si_epsilon", 1e-3),
        force: positive(doc, "gravity", "si_force", 9.81e-26),
        lambda_c: positive(doc, "gravity", "si_lambda_c", 1e-9),
        density: positive(doc, "gravity", "si_density", 1e26),
        hbar: positive(doc, "gravity", "si_hbar", HBAR_SI),
    };
    ProbeConfig {
        potential,
        offset: doc.or("state", "offset", 5.0),
        slope,
        sources,
        tensor_points,
        si,
    }
}

/// A value type the parser can read from the right-hand side of a line.
pub trait ConfigValue: Sized {
    const TYPE: &'static str;
    fn read(raw: &str) -> Option<Self>;
}

fn number(raw: &str) -> Option<f64> {
    let v: f64 = raw.trim().replace('\u{2212}', "-").parse().ok()?;
    v.is_finite().then_some(v)
}

impl ConfigValue for f64 {
    const TYPE: &'static str = "a number";
    fn read(raw: &str) -> Option<Self> {
        number(raw)
    }
}

impl ConfigValue for usize {
    const TYPE: &'static str = "a non-negative integer";
    fn read(raw: &str) -> Option<Self> {
        raw.trim().parse().ok()
    }
}

impl ConfigValue for u64 {
    const TYPE: &'static str = "a non-negative integer";
    fn read(raw: &str) -> Option<Self> {
        raw.trim().parse().ok()
    }
}

impl ConfigValue for u32 {
    const TYPE: &'static str = "a non-negative integer";
    fn read(raw: &str) -> Option<Self> {
        raw.trim().parse().ok()
    }
}

impl ConfigValue for i64 {
    const TYPE: &'static str = "an integer";
    fn read(raw: &str) -> Option<Self> {
        raw.trim().replace('\u{2212}', "-").parse().ok()
    }
}

impl ConfigValue for bool {
    const TYPE: &'static str = "`true` or `false`";
    fn read(raw: &str) -> Option<Self> {
        match raw.trim() {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        }
    }
}

impl ConfigValue for String {
    const TYPE: &'static str = "a string";
    fn read(raw: &str) -> Option<Self> {
        let t = raw.trim();
        let unquoted = t
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .unwrap_or(t);
        (!unquoted.is_empty() && !unquoted.contains('"')).then(|| unquoted.to_string())
    }
}

impl<T: ConfigValue> ConfigValue for Vec<T> {
    const TYPE: &'static str = "a bracketed list";
    fn read(raw: &str) -> Option<Self> {
        let inner = raw.trim().strip_prefix('[')?.strip_suffix(']')?.trim();
        if inner.is_empty() {
            return Some(Vec::new());
        }
        inner.split(',').map(T::read).collect()
    }
}

impl ConfigValue for Complex64 {
    const TYPE: &'static str = "a complex number like 0.6-0.8i";
    fn read(raw: &str) -> Option<Self> {
        parse_complex(raw)
    }
}

/// Reads `a`, `bi`, `a+bi` or `a-bi` (exponents allowed in both parts).
pub fn parse_complex(raw: &str) -> Option<Complex64> {
    let s: String = raw
        .trim()
        .replace('\u{2212}', "-")
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    let Some(body) = s.strip_suffix('i') else {
        return number(&s).map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (number(&body[..i])?, &body[i..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => number(v)?,
    };
    Some(Complex64::new(re, im))
}

struct Entry {
    section: String,
    key: String,
    raw: String,
    line: usize,
    used: Cell<bool>,
}

/// Parsed lines plus the errors found so far.
struct Document {
    entries: Vec<Entry>,
    errors: RefCell<Vec<ConfigError>>,
}

impl Document {
    fn parse(text: &str) -> Self {
        let mut entries: Vec<Entry> = Vec::new();
        let mut errors = Vec::new();
        let mut section: Option<String> = None;
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = strip_comment(raw_line).trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if SECTIONS.contains(&name) {
                    section = Some(name.to_string());
                } else {
                    errors.push(ConfigError {
                        line,
                        message: format!("unknown section `[{name}]`"),
                    });
                    section = None;
                }
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                errors.push(ConfigError {
                    line,
                    message: format!("expected `key = value`, found `{content}`"),
                });
                continue;
            };
            let key = key.trim();
            let Some(sec) = &section else {
                errors.push(ConfigError {
                    line,
                    message: format!("`{key}` appears outside a known section"),
                });
                continue;
            };
            if let Some(first) = entries.iter().find(|e| e.section == *sec && e.key == key) {
                errors.push(ConfigError {
                    line,
                    message: format!("duplicate key `{key}` (first set on line {})", first.line),
                });
                continue;
            }
            entries.push(Entry {
                section: sec.clone(),
                key: key.to_string(),
                raw: value.trim().to_string(),
                line,
                used: Cell::new(false),
            });
        }
        Self {
            entries,
            errors: RefCell::new(errors),
        }
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries
            .iter()
            .find(|e| e.section == section && e.key == key)
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.entry(section, key).map_or(0, |e| e.line)
    }

    fn push(&self, line: usize, message: String) {
        self.errors.borrow_mut().push(ConfigError { line, message });
    }

    fn get<T: ConfigValue>(&self, section: &str, key: &str) -> Option<T> {
        let e = self.entry(section, key)?;
        e.used.set(true);
        let v = T::read(&e.raw);
        if v.is_none() {
            self.push(
                e.line,
                format!("`{key}` expects {}, found `{}`", T::TYPE, e.raw),
            );
        }
        v
    }

    fn or<T: ConfigValue>(&self, section: &str, key: &str, default: T) -> T {
        self.get(section, key).unwrap_or(default)
    }

    fn required<T: ConfigValue>(&self, section: &str, key: &str) -> Option<T> {
        if self.entry(section, key).is_none() {
            self.missing(section, key);
            return None;
        }
        self.get(section, key)
    }

    fn missing(&self, section: &str, key: &str) {
        self.push(0, format!("missing required key `{key}` in [{section}]"));
    }

    fn fail(&self, section: &str, key: &str, message: String) {
        self.push(self.line_of(section, key), message);
    }

    fn check(&self, section: &str, key: &str, ok: bool, reason: &str) {
        if !ok {
            let found = self.entry(section, key).map_or_else(
                || "default value".to_string(),
                |e| format!("found `{}`", e.raw),
            );
            self.fail(section, key, format!("`{key}` {reason} ({found})"));
        }
    }

    /// Errors sorted by line, with every unread key reported as unknown.
    fn finish(self) -> Vec<ConfigError> {
        let mut errors = self.errors.into_inner();
        for e in &self.entries {
            if !e.used.get() {
                errors.push(ConfigError {
                    line: e.line,
                    message: format!(
                        "unknown key `{}` in [{}] for this scenario",
                        e.key, e.section
                    ),
                });
            }
        }
        errors.sort_by_key(|e| e.line);
        errors
    }
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let cases = [
            ("0.6", (0.6, 0.0)),
            ("0.8i", (0.0, 0.8)),
            ("-i", (0.0, -1.0)),
            ("0.6-0.8i", (0.6, -0.8)),
            ("1e-3+2.5e-2i", (1e-3, 2.5e-2)),
            (" -0.5 + 0.5i ", (-0.5, 0.5)),
            ("\u{2212}0.1", (-0.1, 0.0)),
        ];
        for (text, (re, im)) in cases {
            assert_eq!(parse_complex(text), Some(Complex64::new(re, im)), "{text}");
        }
        for bad in ["", "i0.5", "0.5j", "1+2", "abc"] {
            assert_eq!(parse_complex(bad), None, "{bad}");
        }
    }

    #[test]
    fn lists_and_comments() {
        assert_eq!(Vec::<f64>::read("[1, 4, 16]"), Some(vec![1.0, 4.0, 16.0]));
        assert_eq!(Vec::<f64>::read("[]"), Some(vec![]));
        assert_eq!(Vec::<f64>::read("1, 2"), None);
        assert_eq!(Vec::<i64>::read("[1, x]"), None);
        assert_eq!(strip_comment("a = \"x#y\" # note"), "a = \"x#y\" ");
        assert_eq!(String::read("\"quoted\""), Some("quoted".to_string()));
    }

    #[test]
    fn step_count_covers_duration() {
        assert_eq!(steps_for(1.0, 0.1), 10);
        assert_eq!(steps_for(1.05, 0.1), 11);
        assert_eq!(steps_for(0.0, 0.1), 0);
    }
}
