use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use scatter1d::amplitudes::{amplitude_table, identity_report, BranchSheet};
use scatter1d::bound_states::{bound_spectrum, BoundStateSearch};
use scatter1d::{PhysicsParams, PotentialSpec};
use scatter1d_cli::output::{self, BoundRow};
use scatter1d_cli::pipeline::{self, RESIDUE_TOLERANCE};
use scatter1d_cli::scenario::{preset, Figure, Output, Scenario};
use scatter1d_cli::RunError;

/// Worker threads for the parallel loops; unset uses every core.
const THREADS_VAR: &str = "SCATTER1D_THREADS";

const IDENTITY_TOLERANCE: f64 = 1e-11;

#[derive(Parser)]
#[command(name = "scatter1d", version, about = "Scattering amplitudes, bound states and packet evolution for 1D cut-off potentials")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sheet {
    Above,
    Below,
}

#[derive(Subcommand)]
enum Command {
    /// Amplitude table with identity residuals; CSV on stdout unless --out is given.
    Amplitudes {
        #[arg(long)]
        potential: PathBuf,
        /// `min:max:n`, inclusive.
        #[arg(long, value_parser = parse_p_grid, allow_hyphen_values = true)]
        p_grid: (f64, f64, usize),
        #[arg(long, value_enum, default_value = "above")]
        sheet: Sheet,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
    },
    /// Bound-state report as JSON; stdout unless --out is given.
    BoundStates {
        #[arg(long)]
        potential: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
    },
    /// Spectral frames and the transmission time series of a scenario.
    Evolve {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Grid frames of a scenario, optionally compared with the spectral frames.
    Oracle {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        compare: bool,
    },
    /// Reproduce a figure from its preset.
    Figure {
        #[arg(value_enum)]
        name: Figure,
        /// Print the preset scenario as JSON instead of running it.
        #[arg(long)]
        print_scenario: bool,
    },
    /// Run every output a scenario file requests.
    Scenario { path: PathBuf },
}

fn parse_p_grid(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(format!("expected min:max:n, got `{s}`"));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    let n: usize = n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?;
    Ok((num(lo)?, num(hi)?, n))
}

fn load_potential(path: &Path) -> Result<PotentialSpec, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Read { path: path.into(), source })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let spec: PotentialSpec = serde_path_to_error::deserialize(de)
        .map_err(|e| scatter1d::Error::Schema { path: e.path().to_string(), message: e.inner().to_string() })?;
    spec.validate()?;
    Ok(spec)
}

fn configure_threads() -> Result<(), RunError> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        RunError::Usage(format!("{THREADS_VAR} must be a positive integer, got `{v}`"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| RunError::Usage(format!("cannot size the thread pool: {e}")))
}

/// Writes to `out/name`, or stdout without `--out`.
fn sink(out: Option<&Path>, name: &str) -> Result<Box<dyn Write>, RunError> {
    match out {
        Some(dir) => Ok(Box::new(output::create(&dir.join(name))?)),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn amplitudes(
    out: Option<&Path>,
    potential: &Path,
    (lo, hi, n): (f64, f64, usize),
    sheet: Sheet,
    params: PhysicsParams,
) -> Result<bool, RunError> {
    let spec = load_potential(potential)?;
    params.validate()?;
    let grid = scatter1d_cli::scenario::AmplitudeGrid {
        p_min: lo,
        p_max: hi,
        count: n,
        sheet: match sheet {
            Sheet::Above => BranchSheet::AboveCut,
            Sheet::Below => BranchSheet::BelowCut,
        },
        identity_tolerance: IDENTITY_TOLERANCE,
    };
    let ps = grid.momenta()?;
    let rows = amplitude_table(&spec, &params, &ps, grid.sheet)?;
    let checks = match grid.sheet {
        BranchSheet::AboveCut => {
            ps.iter().map(|&p| identity_report(&spec, &params, p).map(Some)).collect::<Result<Vec<_>, _>>()?
        }
        BranchSheet::BelowCut => vec![None; ps.len()],
    };
    output::write_amplitudes(sink(out, "amplitudes.csv")?, &rows, &checks)?;
    let worst = checks.iter().flatten().map(|c| c.max_residual()).fold(0.0, f64::max);
    if worst > IDENTITY_TOLERANCE {
        eprintln!("identity residual {worst:.3e} exceeds {IDENTITY_TOLERANCE:.0e}");
        return Ok(false);
    }
    Ok(true)
}

fn bound_states(out: Option<&Path>, potential: &Path, params: PhysicsParams) -> Result<bool, RunError> {
    let spec = load_potential(potential)?;
    params.validate()?;
    let spectrum = bound_spectrum(&spec, &params, &BoundStateSearch::default())?;
    let rows: Vec<BoundRow> = spectrum.states.iter().map(BoundRow::from).collect();
    let mut w = sink(out, "bound_states.json")?;
    let io = |source| RunError::Write { path: out.unwrap_or(Path::new("-")).into(), source };
    serde_json::to_writer_pretty(&mut w, &rows).map_err(|e| io(e.into()))?;
    writeln!(w).map_err(io)?;
    w.flush().map_err(io)?;
    let mut ok = true;
    for r in &rows {
        if r.residue_relative_difference > RESIDUE_TOLERANCE {
            eprintln!("gamma = {}: residues differ by {:.3e}", r.gamma, r.residue_relative_difference);
            ok = false;
        }
    }
    Ok(ok)
}

fn run_scenario(scenario: &Scenario, command: &str, out: &Path) -> Result<bool, RunError> {
    let manifest = pipeline::run(scenario, command, out)?;
    info!("wrote {} files and the manifest to {}", manifest.files.len(), out.display());
    for c in &manifest.comparisons {
        eprintln!("t = {}: L2 {:.3e}, Linf {:.3e}, relative L2 {:.3e}", c.t, c.l2, c.linf, c.relative_l2);
    }
    for f in &manifest.tolerance_failures {
        eprintln!("tolerance failure: {f}");
    }
    Ok(manifest.passed())
}

fn dispatch(cli: Cli) -> Result<bool, RunError> {
    let out = cli.out.as_deref();
    let default_out = |sub: &str| out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out").join(sub));
    match cli.command {
        Command::Amplitudes { potential, p_grid, sheet, mass, hbar } => {
            amplitudes(out, &potential, p_grid, sheet, PhysicsParams { m: mass, hbar })
        }
        Command::BoundStates { potential, mass, hbar } => bound_states(out, &potential, PhysicsParams { m: mass, hbar }),
        Command::Evolve { scenario } => {
            let mut s = Scenario::load(&scenario)?;
            let mut keep: Vec<Output> = s
                .resolved_outputs()
                .into_iter()
                .filter(|o| matches!(o, Output::Frames | Output::TimeSeries))
                .collect();
            if keep.is_empty() {
                keep.push(Output::Frames);
            }
            s.outputs = Some(keep);
            s.compare = false;
            run_scenario(&s, "evolve", &default_out(&s.label))
        }
        Command::Oracle { scenario, compare } => {
            let mut s = Scenario::load(&scenario)?;
            s.outputs = Some(vec![Output::OracleFrames]);
            s.compare |= compare;
            run_scenario(&s, "oracle", &default_out(&s.label))
        }
        Command::Figure { name, print_scenario } => {
            let s = preset(name);
            if print_scenario {
                let text = serde_json::to_string_pretty(&s).map_err(scatter1d::Error::from)?;
                println!("{text}");
                return Ok(true);
            }
            run_scenario(&s, &format!("figure {}", name.name()), &default_out(name.name()))
        }
        Command::Scenario { path } => {
            let s = Scenario::load(&path)?;
            run_scenario(&s, "scenario", &default_out(&s.label))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| dispatch(cli));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
