//! Scenario configuration, named presets and the high-level runs built on
//! them (diagonalization, PITE trajectories, filtration and δE sweeps,
//! current fields).
//!
//! A configuration is one JSON document. A `"preset"` key selects a named
//! base document; every other key is deep-merged on top of it before the
//! result is validated, so unknown keys are rejected after merging.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{FqeError, Result};
use crate::evolution::{Propagator, SplittingPattern};
use crate::filtration::{filter, FiltrationOrder, FiltrationParams};
use crate::grid::{eigenweights, init_state, BranchState, Grid, InitialStateSpec};
use crate::hamiltonian::{
    fock_darwin_levels, lowest_eigenpairs, EigenSet, GaugeSpec, Hamiltonian, HamiltonianSpec,
    LanczosOptions, PotentialSpec,
};
use crate::observables::{
    current_fields_measured, current_fields_oracle, CurrentFields, CurrentUnits, MeasurementModel,
};
use crate::pite::{run_pite, PiteParams, Schedule, Trajectory};
use crate::units::UNITS;

pub const PRESET_NAMES: [&str; 5] = [
    "harmonic-gaussian",
    "harmonic-exponential",
    "dw-bonding-s",
    "dw-antibonding-s",
    "dw-px-filtered",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_per_axis: u32,
    #[serde(default = "two")]
    pub dims: usize,
    pub box_len: f64,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    pub mass_ratio: f64,
    #[serde(default)]
    pub b_tesla: f64,
    /// Defaults to the cell center.
    #[serde(default)]
    pub gauge_center: Option<f64>,
    pub potential: PotentialSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    #[serde(default = "ten")]
    pub count: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Also write eigenvector amplitudes.
    #[serde(default)]
    pub dump_vectors: bool,
    /// Extra field values for a spectrum-versus-B sweep.
    #[serde(default)]
    pub b_sweep: Option<BSweep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BSweep {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl BSweep {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            p => (0..p)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (p - 1) as f64)
                .collect(),
        }
    }
}

fn ten() -> usize {
    10
}

fn default_tol() -> f64 {
    1e-8
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            count: 10,
            tol: default_tol(),
            dump_vectors: false,
            b_sweep: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorKind {
    /// Split-operator circuit evolution.
    #[default]
    Trotter,
    /// Dense eigendecomposition; small grids only.
    Exact,
    /// Matrix-free exact exponential.
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiteConfig {
    pub m0: f64,
    pub splitting: SplittingPattern,
    pub schedule: Schedule,
    pub n_steps: usize,
    #[serde(default)]
    pub propagator: PropagatorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelError {
    pub level: usize,
    pub delta_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Level whose estimated energy is scanned.
    pub level: usize,
    pub delta_e: Vec<f64>,
}

/// Filtration of eigenstates `targets` (in order) before PITE. The circuit
/// for target `t` uses `λ = Ẽ_t` and `Δt_f = π/|Ẽ_t − Ẽ_keep|`, where
/// `Ẽ = E + δE` are the estimated eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltrationConfig {
    pub order: FiltrationOrder,
    pub targets: Vec<usize>,
    pub keep: usize,
    #[serde(default)]
    pub errors: Vec<LevelError>,
    #[serde(default = "krylov")]
    pub propagator: PropagatorKind,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn krylov() -> PropagatorKind {
    PropagatorKind::Krylov
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Density,
    Paramagnetic,
    Diamagnetic,
    Total,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesConfig {
    #[serde(default = "all_fields")]
    pub fields: Vec<FieldKind>,
    #[serde(default = "one")]
    pub d: i64,
    #[serde(default)]
    pub measurement: MeasurementModel,
    #[serde(default)]
    pub units: CurrentUnits,
    /// Use the spectral oracle instead of the interferometric formula.
    #[serde(default)]
    pub oracle: bool,
    /// Field-computation state: the PITE final state, or an eigenstate.
    #[serde(default)]
    pub source: FieldSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSource {
    #[default]
    PiteFinal,
    Eigenstate {
        level: usize,
    },
}

fn all_fields() -> Vec<FieldKind> {
    vec![
        FieldKind::Density,
        FieldKind::Paramagnetic,
        FieldKind::Diamagnetic,
        FieldKind::Total,
    ]
}

fn one() -> i64 {
    1
}

impl Default for ObservablesConfig {
    fn default() -> Self {
        ObservablesConfig {
            fields: all_fields(),
            d: 1,
            measurement: MeasurementModel::Exact,
            units: CurrentUnits::Probability,
            oracle: false,
            source: FieldSource::PiteFinal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: String,
    #[serde(default = "csv_only")]
    pub formats: Vec<OutputFormat>,
}

fn default_dir() -> String {
    "out".into()
}

fn csv_only() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_dir(),
            formats: csv_only(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    /// One-line description copied into every output header.
    #[serde(default)]
    pub provenance: String,
    pub grid: GridConfig,
    /// Verify the unit constants before running.
    #[serde(default)]
    pub units_check: bool,
    pub hamiltonian: HamiltonianConfig,
    #[serde(default)]
    pub eigen: EigenConfig,
    pub initial_state: InitialStateSpec,
    pub pite: PiteConfig,
    #[serde(default)]
    pub filtration: Option<FiltrationConfig>,
    #[serde(default)]
    pub observables: ObservablesConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

fn harmonic(
    name: &str,
    provenance: &str,
    initial: InitialStateSpec,
    schedule: Schedule,
) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        provenance: provenance.into(),
        grid: GridConfig {
            n_per_axis: 6,
            dims: 2,
            box_len: 120.0,
        },
        units_check: false,
        hamiltonian: HamiltonianConfig {
            mass_ratio: 0.067,
            b_tesla: 5.0,
            gauge_center: None,
            potential: PotentialSpec::Harmonic { omega0: 4.0 },
        },
        eigen: EigenConfig::default(),
        initial_state: initial,
        pite: PiteConfig {
            m0: 0.9,
            splitting: SplittingPattern::TVT,
            schedule,
            n_steps: 30,
            propagator: PropagatorKind::Trotter,
        },
        filtration: None,
        observables: ObservablesConfig::default(),
        outputs: OutputConfig::default(),
        seed: 0,
    }
}

/// Dot separation used by the double-well presets.
pub const DW_A: f64 = 20.0;

fn double_well(
    name: &str,
    provenance: &str,
    initial: InitialStateSpec,
    schedule: Schedule,
) -> ScenarioConfig {
    let mut c = harmonic(name, provenance, initial, schedule);
    c.hamiltonian.b_tesla = 3.0;
    c.hamiltonian.potential = PotentialSpec::DoubleWell {
        v0: -59.3,
        vp: 41.51,
        a: DW_A,
        delta: 24.48,
        delta_x: 2.94,
        delta_y: 24.48,
    };
    c
}

impl ScenarioConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let w = 11.0;
        let cfg = match name {
            "harmonic-gaussian" => harmonic(
                name,
                "harmonic trap 4 meV, B = 5 T, Gaussian start w = 20 nm, TVT ramp 0.02..0.05 kappa 5",
                InitialStateSpec::Gaussian { x_c: 0.0, width: 20.0 },
                Schedule::Ramp { dtau_min: 0.02, dtau_max: 0.05, kappa: 5.0 },
            ),
            "harmonic-exponential" => harmonic(
                name,
                "harmonic trap 4 meV, B = 5 T, exponential start d = 15 nm, TVT ramp 0.006..0.035 kappa 5",
                InitialStateSpec::Exponential { decay: 15.0 },
                Schedule::Ramp { dtau_min: 0.006, dtau_max: 0.035, kappa: 5.0 },
            ),
            "dw-bonding-s" => double_well(
                name,
                "double well, B = 3 T, bonding s start w = 11 nm, TVT ramp 0.004..0.008 kappa 10",
                InitialStateSpec::BondingS { a: DW_A, width: w },
                Schedule::Ramp { dtau_min: 0.004, dtau_max: 0.008, kappa: 10.0 },
            ),
            "dw-antibonding-s" => double_well(
                name,
                "double well, B = 3 T, antibonding s start w = 11 nm, TVT ramp 0.004..0.008 kappa 10",
                InitialStateSpec::AntibondingS { a: DW_A, width: w },
                Schedule::Ramp { dtau_min: 0.004, dtau_max: 0.008, kappa: 10.0 },
            ),
            "dw-px-filtered" => {
                let mut c = double_well(
                    name,
                    "double well, B = 3 T, bonding px start w = 11 nm, first-order filtration of levels 0 and 5, TVT ramp 0.003..0.005 kappa 10",
                    InitialStateSpec::BondingPx { a: DW_A, width: w },
                    Schedule::Ramp { dtau_min: 0.003, dtau_max: 0.005, kappa: 10.0 },
                );
                c.pite.n_steps = 20;
                c.filtration = Some(FiltrationConfig {
                    order: FiltrationOrder::First,
                    targets: vec![0, 5],
                    keep: 2,
                    errors: Vec::new(),
                    propagator: PropagatorKind::Krylov,
                    sweep: Some(SweepConfig { level: 5, delta_e: vec![-0.2, 0.0, 0.2] }),
                });
                c
            }
            other => {
                return Err(FqeError::invalid(format!(
                    "unknown preset {other:?}; known presets: {}",
                    PRESET_NAMES.join(", ")
                )))
            }
        };
        Ok(cfg)
    }

    /// Parses a JSON document, overlaying it on `"preset"` when present.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        Self::from_value(value, None)
    }

    /// Builds a configuration from an optional overlay document and an
    /// optional preset name. A preset passed here wins over one named in the
    /// document.
    pub fn from_value(mut overlay: Value, preset: Option<&str>) -> Result<Self> {
        let obj = overlay
            .as_object_mut()
            .ok_or_else(|| FqeError::invalid("configuration must be a JSON object"))?;
        let named = match obj.remove("preset") {
            Some(Value::String(s)) => Some(s),
            Some(other) => {
                return Err(FqeError::invalid(format!(
                    "preset must be a string, got {other}"
                )))
            }
            None => None,
        };
        let base = match preset.map(str::to_owned).or(named) {
            Some(p) => {
                let mut base = serde_json::to_value(Self::preset(&p)?)?;
                merge(&mut base, overlay);
                base
            }
            None => overlay,
        };
        let cfg: ScenarioConfig = serde_json::from_value(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.spec()?;
        self.pite.schedule.validate()?;
        PiteParams::new(self.pite.m0)?;
        if self.eigen.count == 0 {
            return Err(FqeError::invalid("eigen.count must be at least 1"));
        }
        if !(self.eigen.tol > 0.0) {
            return Err(FqeError::invalid("eigen.tol must be positive"));
        }
        if let Some(f) = &self.filtration {
            let mut levels: Vec<usize> = f.targets.clone();
            levels.push(f.keep);
            levels.extend(f.errors.iter().map(|e| e.level));
            levels.extend(f.sweep.iter().map(|s| s.level));
            if let Some(&bad) = levels.iter().find(|&&l| l >= self.eigen.count) {
                return Err(FqeError::invalid(format!(
                    "filtration refers to level {bad} but only {} eigenpairs are computed",
                    self.eigen.count
                )));
            }
            if f.targets.contains(&f.keep) {
                return Err(FqeError::invalid(
                    "the kept level cannot also be a filtration target",
                ));
            }
        }
        if self.observables.d < 1 {
            return Err(FqeError::invalid("observables.d must be at least 1"));
        }
        if let FieldSource::Eigenstate { level } = self.observables.source {
            if level >= self.eigen.count {
                return Err(FqeError::invalid(format!(
                    "field source level {level} is not computed"
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n_per_axis, self.grid.dims, self.grid.box_len)
    }

    pub fn gauge(&self) -> Result<GaugeSpec> {
        let grid = self.grid()?;
        Ok(GaugeSpec::new(
            self.hamiltonian.b_tesla,
            self.hamiltonian
                .gauge_center
                .unwrap_or(0.5 * grid.box_len()),
        ))
    }

    pub fn spec(&self) -> Result<HamiltonianSpec> {
        let h = &self.hamiltonian;
        HamiltonianSpec::new(
            self.grid()?,
            h.mass_ratio,
            self.gauge()?,
            h.potential.clone(),
        )
    }

    pub fn spec_at_field(&self, b_tesla: f64) -> Result<HamiltonianSpec> {
        let mut s = self.spec()?;
        s.gauge.field_tesla = b_tesla;
        s.validate()?;
        Ok(s)
    }

    pub fn lanczos_options(&self) -> LanczosOptions {
        LanczosOptions {
            seed: self.seed ^ 0x5eed,
            tol: self.eigen.tol,
            ..LanczosOptions::default()
        }
    }

    /// Key/value pairs describing the run, for output headers.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let h = &self.hamiltonian;
        let mut m = vec![
            (
                "scenario".into(),
                if self.name.is_empty() {
                    "custom".into()
                } else {
                    self.name.clone()
                },
            ),
            (
                "units".into(),
                "energy meV, length nm, time 1/meV, hbar = 1".into(),
            ),
            (
                "grid".into(),
                format!(
                    "n = {}, dims = {}, L = {}",
                    self.grid.n_per_axis, self.grid.dims, self.grid.box_len
                ),
            ),
            ("mass_ratio".into(), h.mass_ratio.to_string()),
            ("b_tesla".into(), h.b_tesla.to_string()),
            (
                "potential".into(),
                serde_json::to_string(&h.potential).unwrap_or_default(),
            ),
            ("seed".into(), self.seed.to_string()),
        ];
        if !self.provenance.is_empty() {
            m.insert(1, ("provenance".into(), self.provenance.clone()));
        }
        m
    }
}

/// Recursive object merge; non-object values in `overlay` replace.
pub fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    // Tagged enums switch variant wholesale when the tag changes.
                    Some(slot) if !tag_changes(slot, &v) => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn tag_changes(base: &Value, overlay: &Value) -> bool {
    ["kind", "mode"]
        .iter()
        .any(|tag| matches!((base.get(tag), overlay.get(tag)), (Some(a), Some(b)) if a != b))
}

/// Checks the unit constants against reference values.
pub fn check_units() -> Result<()> {
    let checks = [
        (
            "hbar^2/2m_e [meV nm^2]",
            UNITS.kinetic_coeff,
            38.099_821,
            1e-6,
        ),
        (
            "e/hbar [nm^-2 T^-1]",
            UNITS.tesla_to_inv_len2,
            1.519_267_4e-3,
            1e-6,
        ),
        (
            "GaAs cyclotron energy at 1 T [meV]",
            UNITS.cyclotron_energy(1.0, 0.067),
            1.727_87,
            1e-4,
        ),
    ];
    for (what, got, want, rel) in checks {
        if ((got - want) / want).abs() > rel {
            return Err(FqeError::invalid(format!(
                "unit check failed for {what}: {got} vs {want}"
            )));
        }
    }
    Ok(())
}

pub fn build_propagator(
    spec: &HamiltonianSpec,
    kind: PropagatorKind,
    splitting: SplittingPattern,
) -> Result<Propagator> {
    match kind {
        PropagatorKind::Trotter => Propagator::trotter(spec, splitting),
        PropagatorKind::Exact => Propagator::exact(spec),
        PropagatorKind::Krylov => Propagator::krylov(spec),
    }
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub b_tesla: f64,
    pub eig: EigenSet,
    /// Fock–Darwin levels when the potential is a 2D harmonic trap.
    pub analytic: Option<Vec<f64>>,
}

pub fn diagonalize_at(cfg: &ScenarioConfig, b_tesla: f64) -> Result<Spectrum> {
    let spec = cfg.spec_at_field(b_tesla)?;
    let eig = lowest_eigenpairs(&spec, cfg.eigen.count, &cfg.lanczos_options())?;
    let analytic = match (&spec.potential, spec.grid.dims()) {
        (PotentialSpec::Harmonic { omega0 }, 2) => Some(fock_darwin_levels(
            *omega0,
            b_tesla,
            spec.mass_ratio,
            cfg.eigen.count,
        )?),
        _ => None,
    };
    Ok(Spectrum {
        b_tesla,
        eig,
        analytic,
    })
}

/// The configured field followed by any sweep values. Sweep points run in
/// parallel.
pub fn diagonalize(cfg: &ScenarioConfig) -> Result<Vec<Spectrum>> {
    let mut fields = vec![cfg.hamiltonian.b_tesla];
    if let Some(s) = cfg.eigen.b_sweep {
        fields = s.values();
    }
    fields.par_iter().map(|&b| diagonalize_at(cfg, b)).collect()
}

#[derive(Debug, Clone)]
pub struct FilterStage {
    pub target: usize,
    pub lambda: f64,
    pub dt_f: f64,
    pub p_success: f64,
    pub weights_after: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub state: BranchState,
    pub stages: Vec<FilterStage>,
    pub weights_before: Vec<f64>,
    /// Product of the stage success probabilities.
    pub p_success: f64,
}

fn estimated(eig: &EigenSet, errors: &[LevelError], level: usize) -> f64 {
    eig.eigenvalues()[level]
        + errors
            .iter()
            .filter(|e| e.level == level)
            .map(|e| e.delta_e)
            .sum::<f64>()
}

/// Applies the configured filtration circuits in sequence.
pub fn apply_filtration(
    state: &BranchState,
    f: &FiltrationConfig,
    order: FiltrationOrder,
    errors: &[LevelError],
    prop: &Propagator,
    eig: &EigenSet,
) -> Result<FilterOutcome> {
    let weights_before = eigenweights(state, eig)?.individual;
    let mut current = state.clone();
    let mut stages = Vec::new();
    let mut p_total = 1.0;
    let keep = estimated(eig, errors, f.keep);
    for &t in &f.targets {
        let lambda = estimated(eig, errors, t);
        let gap = (lambda - keep).abs();
        if gap == 0.0 {
            return Err(FqeError::invalid(format!(
                "level {t} and the kept level {} have equal estimates",
                f.keep
            )));
        }
        let dt_f = std::f64::consts::PI / gap;
        let report = filter(
            &current,
            prop,
            &FiltrationParams::new(lambda, dt_f, order)?,
            Some(eig),
        )?;
        p_total *= report.p_success;
        let weights_after = report.weights_after.clone();
        let p_success = report.p_success;
        current = report.into_state()?;
        stages.push(FilterStage {
            target: t,
            lambda,
            dt_f,
            p_success,
            weights_after,
        });
    }
    Ok(FilterOutcome {
        state: current,
        stages,
        weights_before,
        p_success: p_total,
    })
}

#[derive(Debug, Clone)]
pub struct PiteRun {
    pub eig: EigenSet,
    pub filtration: Option<FilterOutcome>,
    pub trajectory: Trajectory,
}

/// Eigen oracle, optional filtration of the initial state, then PITE.
pub fn run_scenario_pite(cfg: &ScenarioConfig, eig: Option<EigenSet>) -> Result<PiteRun> {
    let spec = cfg.spec()?;
    let eig = match eig {
        Some(e) => e,
        None => lowest_eigenpairs(&spec, cfg.eigen.count, &cfg.lanczos_options())?,
    };
    let mut state = init_state(&spec.grid, &cfg.initial_state)?;
    let filtration = match &cfg.filtration {
        Some(f) => {
            let prop = build_propagator(&spec, f.propagator, cfg.pite.splitting)?;
            let out = apply_filtration(&state, f, f.order, &f.errors, &prop, &eig)?;
            state = out.state.clone();
            Some(out)
        }
        None => None,
    };
    let ham = Hamiltonian::new(&spec)?;
    let prop = build_propagator(&spec, cfg.pite.propagator, cfg.pite.splitting)?;
    let params = PiteParams::new(cfg.pite.m0)?;
    let trajectory = run_pite(
        &state,
        &prop,
        &ham,
        &params,
        &cfg.pite.schedule,
        cfg.pite.n_steps,
        Some(&eig),
    )?;
    Ok(PiteRun {
        eig,
        filtration,
        trajectory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOrderResult {
    pub order: u8,
    pub p_success: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub level: usize,
    pub delta_e: f64,
    pub orders: Vec<SweepOrderResult>,
}

/// Filters the initial state at every sweep value with both circuit
/// orders. Sweep points are independent and run in parallel.
pub fn filter_sweep(cfg: &ScenarioConfig, eig: &EigenSet) -> Result<Vec<SweepRow>> {
    let f = cfg
        .filtration
        .as_ref()
        .ok_or_else(|| FqeError::invalid("filter-sweep needs a filtration section"))?;
    let sweep = f
        .sweep
        .as_ref()
        .ok_or_else(|| FqeError::invalid("filter-sweep needs filtration.sweep"))?;
    let spec = cfg.spec()?;
    let state = init_state(&spec.grid, &cfg.initial_state)?;
    let prop = build_propagator(&spec, f.propagator, cfg.pite.splitting)?;
    sweep
        .delta_e
        .par_iter()
        .map(|&de| {
            let mut errors: Vec<LevelError> = f
                .errors
                .iter()
                .filter(|e| e.level != sweep.level)
                .copied()
                .collect();
            errors.push(LevelError {
                level: sweep.level,
                delta_e: de,
            });
            let orders = [FiltrationOrder::First, FiltrationOrder::Second]
                .into_iter()
                .map(|order| {
                    let out = apply_filtration(&state, f, order, &errors, &prop, eig)?;
                    let weights = eigenweights(&out.state, eig)?.individual;
                    Ok(SweepOrderResult {
                        order: order.number(),
                        p_success: out.p_success,
                        weights,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRow {
                level: sweep.level,
                delta_e: de,
                orders,
            })
        })
        .collect()
}

/// Current fields of the configured source state.
pub fn current_fields(cfg: &ScenarioConfig, state: &BranchState) -> Result<CurrentFields> {
    let o = &cfg.observables;
    let gauge = cfg.gauge()?;
    let model = match o.measurement {
        MeasurementModel::Sampled { shots, .. } => MeasurementModel::Sampled {
            shots,
            seed: cfg.seed,
        },
        exact => exact,
    };
    if o.oracle {
        current_fields_oracle(state, &gauge, cfg.hamiltonian.mass_ratio, o.units)
    } else {
        current_fields_measured(
            state,
            &gauge,
            cfg.hamiltonian.mass_ratio,
            o.d,
            model,
            o.units,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_round_trip() {
        for name in PRESET_NAMES {
            let cfg = ScenarioConfig::preset(name).unwrap();
            cfg.validate().unwrap();
            let text = serde_json::to_string(&cfg).unwrap();
            assert_eq!(ScenarioConfig::from_json_str(&text).unwrap(), cfg);
        }
        assert!(ScenarioConfig::preset("nope").is_err());
    }

    #[test]
    fn overlay_replaces_scalars_and_switches_variants() {
        let text = r#"{"preset": "harmonic-gaussian", "seed": 9,
            "pite": {"schedule": {"kind": "constant", "dtau": 0.05}},
            "hamiltonian": {"b_tesla": 2.0}}"#;
        let cfg = ScenarioConfig::from_json_str(text).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.pite.schedule, Schedule::Constant { dtau: 0.05 });
        assert_eq!(cfg.pite.m0, 0.9);
        assert_eq!(cfg.hamiltonian.b_tesla, 2.0);
        assert_eq!(
            cfg.hamiltonian.potential,
            PotentialSpec::Harmonic { omega0: 4.0 }
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = ScenarioConfig::from_json_str(
            r#"{"preset": "harmonic-gaussian", "pite": {"mo": 0.9}}"#,
        );
        assert!(matches!(e, Err(FqeError::Json(_))));
        let e = ScenarioConfig::from_json_str(r#"{"preset": "harmonic-gaussian", "extra": 1}"#);
        assert!(matches!(e, Err(FqeError::Json(_))));
        let e = ScenarioConfig::from_json_str(
            r#"{"preset": "harmonic-gaussian", "pite": {"m0": 1.5}}"#,
        );
        assert!(matches!(e, Err(FqeError::InvalidParameter(_))));
    }

    #[test]
    fn filtration_levels_checked() {
        let mut cfg = ScenarioConfig::preset("dw-px-filtered").unwrap();
        cfg.eigen.count = 4;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn units_are_consistent() {
        check_units().unwrap();
    }

    #[test]
    fn b_sweep_values() {
        assert_eq!(
            BSweep {
                start: 0.0,
                stop: 5.0,
                points: 3
            }
            .values(),
            vec![0.0, 2.5, 5.0]
        );
        assert_eq!(
            BSweep {
                start: 1.0,
                stop: 5.0,
                points: 1
            }
            .values(),
            vec![1.0]
        );
    }

    #[test]
    fn small_scenario_runs_end_to_end() {
        let mut cfg = ScenarioConfig::preset("dw-px-filtered").unwrap();
        cfg.grid.n_per_axis = 4;
        cfg.pite.n_steps = 3;
        let run = run_scenario_pite(&cfg, None).unwrap();
        let f = run.filtration.unwrap();
        assert_eq!(f.stages.len(), 2);
        // zero errors: both targets removed to rounding
        let last = &f.stages[1].weights_after;
        assert!(last[0] < 1e-20 && last[5] < 1e-20, "{last:?}");
        assert_eq!(run.trajectory.rows.len(), 3);
        let rows = filter_sweep(&cfg, &run.eig).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[1].orders.iter().all(|o| o.weights[5] < 1e-20));
        assert!(rows[0].orders[0].weights[5] > rows[0].orders[1].weights[5]);
    }
}
