use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qmc_core::cycle::cycle_report;
use qmc_core::sweep::{
    parse_csv, parse_real, render_key_values, report_key_values, run_sweep, verify_rows, KeyValues,
    Preset, SweepConfig,
};

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qmc",
    version,
    about = "Measurement-driven qubit refrigerator simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write CSV plus `<out>.manifest`.
    Sweep(SweepArgs),
    /// Re-check the thermodynamic invariants of a sweep CSV.
    Verify { csv: PathBuf },
    /// Evaluate a single cycle and print its report.
    Point(LayerArgs),
}

#[derive(Args)]
struct LayerArgs {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["fig2a", "fig2b"])]
    preset: Option<String>,
    /// Override one config key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    layers: LayerArgs,
    #[arg(long)]
    jobs: Option<usize>,
    /// Output CSV; stdout when neither this nor the `out` key is given.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Verify(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Verify(_) => EXIT_VERIFY,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Verify(m) | Failure::Io(m) => m,
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn manifest_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn load_config(layers: &LayerArgs, extra: &[(&str, String)]) -> Result<SweepConfig, Failure> {
    let file = match &layers.config {
        Some(p) => KeyValues::parse(&read_text(p)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => KeyValues::new(),
    };
    let mut cli = KeyValues::new();
    for s in &layers.set {
        let (k, v) = KeyValues::parse_assignment(s).map_err(|e| Failure::Usage(e.to_string()))?;
        cli.insert(&k, &v);
    }
    for (k, v) in extra {
        cli.insert(k, v);
    }
    let preset = match &layers.preset {
        Some(name) => Some(
            name.parse::<Preset>()
                .map_err(|e| Failure::Usage(e.to_string()))?,
        ),
        None => None,
    };
    SweepConfig::from_layers(preset, &file, &cli).map_err(|e| Failure::Usage(e.to_string()))
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let mut extra = Vec::new();
    if let Some(j) = args.jobs {
        extra.push(("jobs", j.to_string()));
    }
    if let Some(out) = &args.out {
        extra.push(("out", out.display().to_string()));
    }
    let config = load_config(&args.layers, &extra)?;
    let output = run_sweep(&config).map_err(|e| Failure::Usage(e.to_string()))?;
    match &config.output_path {
        Some(path) => {
            write_text(path, &output.csv())?;
            write_text(&manifest_path(path), &output.manifest_text())?;
            eprintln!("wrote {} rows to {}", output.rows.len(), path.display());
        }
        None => print!("{}", output.csv()),
    }
    Ok(())
}

fn verify(csv: &Path) -> Result<(), Failure> {
    let rows = parse_csv(&read_text(csv)?)
        .map_err(|e| Failure::Verify(format!("{}: {e}", csv.display())))?;
    let manifest = manifest_path(csv);
    let hot_temperature = if manifest.exists() {
        let kv = KeyValues::parse(&read_text(&manifest)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", manifest.display())))?;
        kv.get("T_h").and_then(|v| parse_real(v).ok())
    } else {
        None
    };
    let summary = verify_rows(&rows, hot_temperature);
    print!("{summary}");
    if summary.all_passed() {
        Ok(())
    } else {
        Err(Failure::Verify("verification failed".into()))
    }
}

fn point(layers: &LayerArgs) -> Result<(), Failure> {
    let config = load_config(layers, &[])?;
    let spec = config
        .base
        .to_spec()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let report = cycle_report(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut kv = report_key_values(&report);
    for (k, v) in config.to_key_values().iter() {
        if !matches!(k, "axis" | "start" | "stop" | "n_points" | "spacing") {
            kv.insert(k, v);
        }
    }
    print!("{}", render_key_values(&kv));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Sweep(args) => sweep(args),
        Command::Verify { csv } => verify(csv),
        Command::Point(layers) => point(layers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qmc: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
