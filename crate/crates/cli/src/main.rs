//! `fqe`: batch runner for the first-quantized PITE simulator.
//!
//! Every scenario subcommand takes a JSON config (`--config`), a preset
//! (`--preset`) or both, in which case the config is overlaid on the preset.
//! Outputs go to `outputs.directory` (or `--out`) as CSV files with a
//! `#`-prefixed metadata header.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fqe_core::evolution::SplittingPattern;
use fqe_core::export::{
    field_meta, filtration_table, quiver_table, scalar_field_table, spectrum_table, sweep_table,
    trajectory_table, write_amplitudes_csv, Metadata,
};
use fqe_core::grid::Grid;
use fqe_core::hamiltonian::lowest_eigenpairs;
use fqe_core::observables::{
    reconstruct_derivatives, CircuitSampler, DerivativeProblem, MeasurementModel,
};
use fqe_core::resources::{
    cnot_counts, collapsed_kinetic_count, CnotModel, DoubleWellSubcosts, PotentialScenario,
};
use fqe_core::scenario::{
    check_units, current_fields, diagonalize, filter_sweep, run_scenario_pite, BSweep, FieldKind,
    FieldSource, ScenarioConfig, PRESET_NAMES,
};
use fqe_core::{BranchState, FqeError, C64};
use output::Sink;
use serde_json::{json, Value};

const GIT_REVISION: &str = env!("FQE_GIT_REVISION");

#[derive(Parser, Debug)]
#[command(
    name = "fqe",
    version,
    about = "First-quantized PITE eigensolver for a charged particle on a qubit grid"
)]
struct Cli {
    /// Worker threads for parallel sweeps and operator application.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON scenario file; overlaid on `--preset` (or its own `"preset"` key).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory; overrides `outputs.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for Lanczos start vectors and sampled measurements.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lowest eigenpairs, optionally over a field sweep.
    Diagonalize {
        #[command(flatten)]
        common: Common,
        /// Field sweep `START:STOP:POINTS` in tesla.
        #[arg(long, value_parser = parse_sweep)]
        b_sweep: Option<BSweep>,
        /// Number of eigenpairs.
        #[arg(long)]
        count: Option<usize>,
        /// Also write each eigenvector as an amplitude table.
        #[arg(long)]
        dump_vectors: bool,
    },
    /// Optional filtration followed by the PITE trajectory.
    Pite {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_steps: Option<usize>,
    },
    /// Filtration weights over the configured δE grid for both circuit orders.
    FilterSweep {
        #[command(flatten)]
        common: Common,
    },
    /// Density and current fields of the configured source state.
    Current {
        #[command(flatten)]
        common: Common,
    },
    /// CNOT count of one PITE step, printed as JSON.
    Gatecount {
        /// Qubits per axis.
        #[arg(long, default_value_t = 6)]
        n: u32,
        #[arg(long, value_enum, default_value_t = Splitting::Tv)]
        splitting: Splitting,
        #[arg(long, value_enum, default_value_t = Potential::Harmonic)]
        potential: Potential,
        /// Double-well arithmetic costs `S,ADD,U_E,CU_E`.
        #[arg(long, value_parser = parse_subcosts)]
        dw_costs: Option<DoubleWellSubcosts>,
    },
    /// Reconstructs the first derivative distribution of an encoded Gaussian.
    DerivativeDemo {
        /// Qubits per axis.
        #[arg(long, default_value_t = 6)]
        n: u32,
        /// Shots per circuit; exact probabilities when absent.
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the reconstructed field table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Splitting {
    Tv,
    Tvt,
}

impl From<Splitting> for SplittingPattern {
    fn from(s: Splitting) -> Self {
        match s {
            Splitting::Tv => SplittingPattern::TV,
            Splitting::Tvt => SplittingPattern::TVT,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Potential {
    Harmonic,
    DoubleWell,
    Symbolic,
}

fn parse_sweep(s: &str) -> Result<BSweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected START:STOP:POINTS".into());
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
    let points = parts[2]
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("{:?}: {e}", parts[2]))?;
    Ok(BSweep {
        start: num(parts[0])?,
        stop: num(parts[1])?,
        points,
    })
}

fn parse_subcosts(s: &str) -> Result<DoubleWellSubcosts, String> {
    let v: Vec<u64> = s
        .split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [s, add, u_e, cu_e] => Ok(DoubleWellSubcosts { s, add, u_e, cu_e }),
        _ => Err("expected four comma-separated costs S,ADD,U_E,CU_E".into()),
    }
}

/// Maps library errors onto the documented exit codes.
fn exit_code(e: &FqeError) -> u8 {
    match e {
        FqeError::InvalidParameter(_)
        | FqeError::Json(_)
        | FqeError::GridMismatch(_)
        | FqeError::Representation { .. }
        | FqeError::SizeGuard(_) => 2,
        FqeError::NotConverged { .. }
        | FqeError::VanishingSuccess { .. }
        | FqeError::Singular(_) => 3,
        FqeError::Io(_) | FqeError::Csv(_) => 1,
    }
}

fn load(common: &Common) -> fqe_core::Result<ScenarioConfig> {
    let overlay = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                FqeError::InvalidParameter(format!("cannot read config {}: {e}", p.display()))
            })?;
            serde_json::from_str(&text)?
        }
        None => json!({}),
    };
    if common.config.is_none() && common.preset.is_none() {
        return Err(FqeError::InvalidParameter(format!(
            "give --config or --preset (presets: {})",
            PRESET_NAMES.join(", ")
        )));
    }
    let mut cfg = ScenarioConfig::from_value(overlay, common.preset.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.outputs.directory = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn prepare(cfg: &ScenarioConfig) -> fqe_core::Result<()> {
    cfg.validate()?;
    if cfg.units_check {
        check_units()?;
    }
    Ok(())
}

fn metadata(cfg: &ScenarioConfig, command: &str) -> Vec<(String, String)> {
    let mut m = cfg.metadata();
    m.push(("command".into(), command.into()));
    m.push(("git_revision".into(), GIT_REVISION.into()));
    m
}

fn sink(cfg: &ScenarioConfig) -> fqe_core::Result<Sink> {
    let stem = if cfg.name.is_empty() {
        "custom"
    } else {
        cfg.name.as_str()
    };
    Sink::new(
        Path::new(&cfg.outputs.directory),
        stem,
        &cfg.outputs.formats,
    )
}

fn cmd_diagonalize(
    common: &Common,
    b_sweep: Option<BSweep>,
    count: Option<usize>,
    dump: bool,
) -> fqe_core::Result<Vec<PathBuf>> {
    let mut cfg = load(common)?;
    if b_sweep.is_some() {
        cfg.eigen.b_sweep = b_sweep;
    }
    if let Some(c) = count {
        cfg.eigen.count = c;
    }
    cfg.eigen.dump_vectors |= dump;
    prepare(&cfg)?;
    let spectra = diagonalize(&cfg)?;
    let meta = metadata(&cfg, "diagonalize");
    let mut out = sink(&cfg)?;
    let (h, r) = spectrum_table(&spectra);
    out.table("spectrum", &meta, &h, &r)?;
    if cfg.eigen.dump_vectors {
        for sp in &spectra {
            for i in 0..sp.eig.len() {
                let p = out.path(&format!("b{}_level{i}", sp.b_tesla), "csv");
                let mut m = meta.clone();
                m.push(("b_tesla_run".into(), sp.b_tesla.to_string()));
                m.push(("level".into(), i.to_string()));
                m.push(("energy_mev".into(), sp.eig.eigenvalues()[i].to_string()));
                write_amplitudes_csv(&p, &m, &sp.eig.state(i))?;
                out.note(p);
            }
        }
    }
    Ok(out.written)
}

fn cmd_pite(common: &Common, n_steps: Option<usize>) -> fqe_core::Result<Vec<PathBuf>> {
    let mut cfg = load(common)?;
    if let Some(n) = n_steps {
        cfg.pite.n_steps = n;
    }
    prepare(&cfg)?;
    let run = run_scenario_pite(&cfg, None)?;
    let mut meta = metadata(&cfg, "pite");
    meta.push(("splitting".into(), format!("{:?}", cfg.pite.splitting)));
    meta.push((
        "schedule".into(),
        serde_json::to_string(&cfg.pite.schedule)?,
    ));
    meta.push(("m0".into(), cfg.pite.m0.to_string()));
    let mut out = sink(&cfg)?;
    if let (Some(f), Some(outcome)) = (&cfg.filtration, &run.filtration) {
        let (h, r) = filtration_table(outcome, f.order);
        out.table("filtration", &meta, &h, &r)?;
    }
    let (h, mut r) = trajectory_table(&run.trajectory);
    if cfg.pite.n_steps == 0 {
        r.clear();
    }
    out.table("trajectory", &meta, &h, &r)?;
    Ok(out.written)
}

fn cmd_filter_sweep(common: &Common) -> fqe_core::Result<Vec<PathBuf>> {
    let cfg = load(common)?;
    prepare(&cfg)?;
    let eig = lowest_eigenpairs(&cfg.spec()?, cfg.eigen.count, &cfg.lanczos_options())?;
    let rows = filter_sweep(&cfg, &eig)?;
    let mut meta = metadata(&cfg, "filter-sweep");
    let f = cfg
        .filtration
        .as_ref()
        .expect("filter_sweep checked the section");
    meta.push(("targets".into(), format!("{:?}", f.targets)));
    meta.push(("keep".into(), f.keep.to_string()));
    meta.push(("eigenvalues_mev".into(), format!("{:?}", eig.eigenvalues())));
    let mut out = sink(&cfg)?;
    let (h, r) = sweep_table(&rows);
    out.table("sweep", &meta, &h, &r)?;
    Ok(out.written)
}

fn cmd_current(common: &Common) -> fqe_core::Result<Vec<PathBuf>> {
    let cfg = load(common)?;
    prepare(&cfg)?;
    let (state, source) = match cfg.observables.source {
        FieldSource::PiteFinal => (
            run_scenario_pite(&cfg, None)?.trajectory.final_state,
            "pite final state".to_string(),
        ),
        FieldSource::Eigenstate { level } => {
            let eig = lowest_eigenpairs(&cfg.spec()?, level + 1, &cfg.lanczos_options())?;
            (eig.state(level), format!("eigenstate {level}"))
        }
    };
    let fields = current_fields(&cfg, &state)?;
    let mut meta = metadata(&cfg, "current");
    meta.push(("source".into(), source));
    meta.push((
        "method".into(),
        if cfg.observables.oracle {
            "spectral oracle".into()
        } else {
            format!(
                "interferometer, d = {}, {:?}",
                cfg.observables.d, cfg.observables.measurement
            )
        },
    ));
    let mut out = sink(&cfg)?;
    let dims = fields.density.grid.dims();
    for kind in &cfg.observables.fields {
        match kind {
            FieldKind::Density => {
                let (h, r) = scalar_field_table(&fields.density);
                out.table(
                    "density",
                    &field_meta(&meta, fields.density.unit, dims),
                    &h,
                    &r,
                )?;
            }
            k => {
                let (name, v) = match k {
                    FieldKind::Paramagnetic => ("paramagnetic", &fields.paramagnetic),
                    FieldKind::Diamagnetic => ("diamagnetic", &fields.diamagnetic),
                    _ => ("total", &fields.total),
                };
                let (h, r) = quiver_table(v)?;
                out.table(name, &field_meta(&meta, v.unit, dims), &h, &r)?;
            }
        }
    }
    Ok(out.written)
}

fn cmd_gatecount(
    n: u32,
    splitting: SplittingPattern,
    potential: Potential,
    dw: Option<DoubleWellSubcosts>,
) -> fqe_core::Result<Value> {
    let mut model = CnotModel::new(n)?;
    if let Some(c) = dw {
        model = model.with_double_well(c);
    }
    let scenario = match potential {
        Potential::Harmonic => PotentialScenario::Harmonic,
        Potential::DoubleWell => PotentialScenario::DoubleWell,
        Potential::Symbolic => PotentialScenario::Symbolic,
    };
    let report = cnot_counts(&model, splitting, scenario)?;
    let mut v = serde_json::to_value(&report)?;
    if n.is_multiple_of(2) {
        v["collapsed_kinetic"] = json!(collapsed_kinetic_count(n, splitting));
    }
    Ok(v)
}

const DEMO_CENTER: [f64; 2] = [8.5, 7.0];
const DEMO_WIDTH: f64 = 2.5;
const DEMO_K: [f64; 2] = [0.6, -0.35];

fn cmd_derivative_demo(
    n: u32,
    shots: Option<u64>,
    seed: u64,
    out: Option<&Path>,
) -> fqe_core::Result<Value> {
    let g = Grid::new(n, 2, 16.0)?;
    let pts: Vec<[f64; 2]> = (0..g.len())
        .map(|i| {
            let k = g.unravel(i);
            [g.coord(k[0]), g.coord(k[1])]
        })
        .collect();
    let raw: Vec<C64> = pts
        .iter()
        .map(|r| {
            let r2 = (r[0] - DEMO_CENTER[0]).powi(2) + (r[1] - DEMO_CENTER[1]).powi(2);
            C64::from_polar(
                (-r2 / (2.0 * DEMO_WIDTH * DEMO_WIDTH)).exp(),
                DEMO_K[0] * r[0] + DEMO_K[1] * r[1],
            )
        })
        .collect();
    let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let amps: Vec<C64> = raw.iter().map(|a| a / norm).collect();
    let state = BranchState::from_amplitudes(g, amps.clone())?;
    let model = match shots {
        Some(shots) => MeasurementModel::Sampled { shots, seed },
        None => MeasurementModel::Exact,
    };
    let first = DerivativeProblem::first_order_axes(2)?;
    let second =
        DerivativeProblem::new(2, 2, vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![1, -1]])?;
    let mut src = CircuitSampler::new(&state, model)?;
    let rec = reconstruct_derivatives(&first, &mut src)?;
    let mut errors = Vec::new();
    let mut rows = Vec::new();
    let exact = |i: usize, axis: usize| {
        amps[i].norm_sqr()
            * C64::new(
                -(pts[i][axis] - DEMO_CENTER[axis]) / (DEMO_WIDTH * DEMO_WIDTH),
                -DEMO_K[axis],
            )
    };
    let gx = rec.get(&[1, 0])?;
    let gy = rec.get(&[0, 1])?;
    for (axis, got) in [gx, gy].iter().enumerate() {
        let (mut err, mut scale) = (0.0f64, 0.0f64);
        for (i, v) in got.iter().enumerate() {
            let e = exact(i, axis);
            err = err.max((v - e).norm());
            scale = scale.max(e.norm());
        }
        errors.push(err / scale);
    }
    for i in 0..g.len() {
        let k = g.unravel(i);
        let (ex, ey) = (exact(i, 0), exact(i, 1));
        let mut row = vec![k[0].to_string(), k[1].to_string()];
        row.extend(
            [
                gx[i].re, gx[i].im, gy[i].re, gy[i].im, ex.re, ex.im, ey.re, ey.im,
            ]
            .iter()
            .map(|x| format!("{x:?}")),
        );
        rows.push(row);
    }
    let matrix = |p: &DerivativeProblem| -> Vec<Vec<f64>> {
        let m = p.system_matrix(g.dx());
        (0..m.nrows())
            .map(|r| m.row(r).iter().copied().collect())
            .collect()
    };
    let mut report = json!({
        "n": n,
        "dx": g.dx(),
        "measurement": format!("{model:?}"),
        "first_order": { "unknowns": first.unknowns(), "system": matrix(&first) },
        "second_order": { "unknowns": second.unknowns(), "system": matrix(&second) },
        "relative_max_error": { "x": errors[0], "y": errors[1] },
    });
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let p = dir.join("derivative_demo.csv");
        let header: Vec<String> = [
            "k_x",
            "k_y",
            "gx_re",
            "gx_im",
            "gy_re",
            "gy_im",
            "gx_exact_re",
            "gx_exact_im",
            "gy_exact_re",
            "gy_exact_im",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let meta: &Metadata = &[
            ("scenario".into(), "derivative-demo".into()),
            ("function".into(), format!("gaussian center {DEMO_CENTER:?} width {DEMO_WIDTH} wavevector {DEMO_K:?}, L = 16")),
            ("quantity".into(), "f d(f*)/dx_a".into()),
            ("measurement".into(), format!("{model:?}")),
            ("git_revision".into(), GIT_REVISION.into()),
        ];
        fqe_core::export::write_csv(&p, meta, &header, &rows)?;
        report["file"] = json!(p.to_string_lossy());
    }
    Ok(report)
}

fn print_written(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn run(cli: Cli) -> fqe_core::Result<()> {
    match cli.command {
        Command::Diagonalize {
            common,
            b_sweep,
            count,
            dump_vectors,
        } => print_written(&cmd_diagonalize(&common, b_sweep, count, dump_vectors)?),
        Command::Pite { common, n_steps } => print_written(&cmd_pite(&common, n_steps)?),
        Command::FilterSweep { common } => print_written(&cmd_filter_sweep(&common)?),
        Command::Current { common } => print_written(&cmd_current(&common)?),
        Command::Gatecount {
            n,
            splitting,
            potential,
            dw_costs,
        } => {
            let v = cmd_gatecount(n, splitting.into(), potential, dw_costs)?;
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Command::DerivativeDemo {
            n,
            shots,
            seed,
            out,
        } => {
            let v = cmd_derivative_demo(n, shots, seed, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("fqe: cannot configure {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fqe: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
