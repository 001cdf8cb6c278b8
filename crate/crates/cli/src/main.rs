use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use optosync::model::PRESETS;
use optosync::sweep::{
    parse_csv, records_to_csv, run_sweep, summary, Measure, SweepAxes, SweepSpec,
};
use optosync::{simulate, standard_config, validate, RunSummary, SystemConfig};

mod render;

#[derive(Parser)]
#[command(
    name = "optosync",
    version,
    about = "Synchronization and discord of two coupled optomechanical oscillators"
)]
struct Cli {
    /// Print extra diagnostics.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its trajectory and measure series.
    Simulate {
        #[command(flatten)]
        source: ConfigSource,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a two-parameter grid and write the record table.
    Sweep {
        #[command(flatten)]
        source: ConfigSource,
        /// Grid description (JSON with axis1, axis2 and optional workers).
        #[arg(long)]
        spec: PathBuf,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads, overriding the grid file.
        #[arg(long, env = "OPTOSYNC_WORKERS")]
        workers: Option<usize>,
    },
    /// Draw one measure of a sweep table as a heatmap (PNG or PPM by extension).
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = ["Sp", "DG", "EN"])]
        measure: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the built-in parameter sets.
    Presets,
}

#[derive(Args)]
struct ConfigSource {
    /// Configuration file (JSON).
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in parameter set instead of a file.
    #[arg(long)]
    preset: Option<String>,
    /// Dotted-path override, e.g. `bath.n_th=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigSource {
    fn load(&self) -> Result<SystemConfig> {
        let text = match (&self.config, &self.preset) {
            (Some(path), _) => {
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
            }
            (None, Some(name)) => standard_config(name)?.to_json(),
            (None, None) => bail!("either --config or --preset is required"),
        };
        let config = SystemConfig::from_json_with_overrides(&text, &self.overrides)?;
        let report = validate(&config);
        if !report.is_ok() {
            let lines: Vec<String> = report
                .violations
                .iter()
                .map(|v| format!("  {}: {}", v.path, v.message))
                .collect();
            bail!("invalid configuration:\n{}", lines.join("\n"));
        }
        Ok(config)
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn run_simulate(source: &ConfigSource, out: &Path, verbose: bool) -> Result<()> {
    let config = source.load()?;
    let sim = simulate(&config)?;
    let s = RunSummary::from(&sim);

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let meta = serde_json::json!({
        "config": config,
        "discord_measured_on": config.measures.discord_side,
        "window": { "start": sim.window.0, "length": sim.window.1 },
        "limit_cycle": sim.limit_cycle(),
        "summary": s,
        "min_uncertainty_eig": sim.min_uncertainty_eig,
    });
    write_atomic(
        &out.join("trajectory.csv"),
        sim.trajectory.to_csv().as_bytes(),
    )?;
    write_atomic(&out.join("measures.csv"), sim.measures.to_csv().as_bytes())?;
    write_atomic(
        &out.join("run.json"),
        serde_json::to_string_pretty(&meta)?.as_bytes(),
    )?;

    println!(
        "mean_Sp={} mean_DG={} mean_EN={}",
        s.mean_sp, s.mean_dg, s.mean_en
    );
    if verbose {
        let lc = sim.limit_cycle();
        println!("mean_DG_other_side={}", s.mean_dg_other);
        println!(
            "converged={} fixed_point={} period={:?} transient_end={:?}",
            lc.converged, lc.fixed_point, lc.period_estimate, lc.transient_end
        );
        println!(
            "window=[{}, {}] physical={} min_uncertainty_eig={:e}",
            sim.window.0,
            sim.window.0 + sim.window.1,
            s.physical,
            sim.min_uncertainty_eig
        );
    }
    Ok(())
}

fn run_sweep_command(
    source: &ConfigSource,
    spec_path: &Path,
    out: &Path,
    workers: Option<usize>,
    verbose: bool,
) -> Result<()> {
    let base = source.load()?;
    let text = fs::read_to_string(spec_path)
        .with_context(|| format!("reading {}", spec_path.display()))?;
    let axes: SweepAxes =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", spec_path.display()))?;
    let mut spec = SweepSpec::new(base, axes);
    if workers.is_some() {
        spec.workers = workers;
    }
    spec.validate()?;
    let records = run_sweep(&spec)?;
    write_atomic(out, records_to_csv(&spec, &records).as_bytes())?;
    let names = (spec.axis1.parameter.name(), spec.axis2.parameter.name());
    print!("{}", summary(names, &records));
    if verbose {
        let total: f64 = records.iter().map(|r| r.runtime_seconds).sum();
        println!("total point runtime {total:.2} s");
    }
    Ok(())
}

fn run_render(input: &Path, measure: &str, out: &Path) -> Result<()> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let table = parse_csv(&text)?;
    let measure = Measure::parse(measure)?;
    let map = render::Heatmap::from_table(&table, measure);
    let image = match out.extension().and_then(|e| e.to_str()) {
        Some("png") => map.to_png()?,
        Some("ppm") => map.to_ppm(),
        _ => bail!("output must end in .png or .ppm"),
    };
    let mut sidecar = out.as_os_str().to_owned();
    sidecar.push(".txt");
    write_atomic(out, &image)?;
    write_atomic(Path::new(&sidecar), map.legend(&table).as_bytes())?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { source, out } => run_simulate(source, out, cli.verbose),
        Command::Sweep {
            source,
            spec,
            out,
            workers,
        } => run_sweep_command(source, spec, out, *workers, cli.verbose),
        Command::Render {
            input,
            measure,
            out,
        } => run_render(input, measure, out),
        Command::Presets => {
            for name in PRESETS {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
