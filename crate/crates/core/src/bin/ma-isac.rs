use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ma_isac::experiments::{
    emit, emit_timing, emit_traces, summarize, sweep, Format, RunRecord, Scheme, SweepAxis,
};
use ma_isac::scenario::{load_config, ScenarioConfig};

/// Movable-antenna full-duplex ISAC simulator.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    /// Swarm 20 x 15 and 30 random initializations.
    Desk,
    /// Search budget exactly as configured.
    Paper,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scheme x value x seed cell and write one row per cell.
    Run {
        /// TOML file overriding the default parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Parameter to vary: p_dl, p_ul, n_tx, n_rx, weights_cs, weights_dl_ul, region_size or none.
        #[arg(long, default_value = "none")]
        sweep: String,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        values: Vec<f64>,
        /// Comma-separated schemes out of FPA, AO-MA, RI-MA, PSO-MA.
        #[arg(long, value_delimiter = ',', default_value = "FPA,AO-MA,RI-MA,PSO-MA")]
        schemes: Vec<String>,
        /// Number of channel realizations per sweep point.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, value_enum, default_value = "desk")]
        profile: Profile,
        /// Result table; a sibling `<stem>.timing.csv` receives wall times.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        /// Directory receiving one iteration trace per cell.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
}

/// Runs a parsed command; `Ok(false)` when at least one cell failed.
fn execute(command: Command) -> Result<bool, Box<dyn std::error::Error>> {
    let Command::Run {
        config,
        sweep: axis,
        values,
        schemes,
        seeds,
        profile,
        out,
        format,
        trace_dir,
    } = command;

    let mut cfg = match config {
        Some(path) => load_config(&std::fs::read_to_string(path)?)?,
        None => ScenarioConfig::default(),
    };
    if let Profile::Desk = profile {
        cfg = cfg.desk_profile();
    }
    let axis: SweepAxis = axis.parse()?;
    let format: Format = format.parse()?;
    let schemes = schemes
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<Scheme>, _>>()?;

    let cells = sweep(&cfg, axis, &values, &schemes, seeds)?;
    let records: Vec<RunRecord> = cells.iter().map(|c| c.record.clone()).collect();
    emit(&records, format, &out)?;
    emit_timing(&cells, &out.with_extension("timing.csv"))?;
    if let Some(dir) = trace_dir {
        emit_traces(&cells, &dir)?;
    }

    for s in summarize(&records) {
        eprintln!(
            "{:<7} {}={:<8} n={:<3} mean={:.4} std={:.4}",
            s.scheme,
            axis.name(),
            s.sweep_value,
            s.n,
            s.mean,
            s.std
        );
    }
    let failed: Vec<&RunRecord> = records.iter().filter(|r| !r.ok).collect();
    if failed.is_empty() {
        return Ok(true);
    }
    eprintln!("{} failed cell(s):", failed.len());
    for r in failed {
        eprintln!(
            "  {} seed={} {}={}: {}",
            r.scheme, r.seed, r.sweep_axis, r.sweep_value, r.error
        );
    }
    Ok(false)
}

fn run() -> Result<bool, Box<dyn std::error::Error>> {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("MA_ISAC_THREADS") {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.parse()?)
            .build_global()?;
    }
    execute(cli.command)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use std::fs;
    use std::path::Path;

    use ma_isac::experiments::{parse_csv, parse_json};

    use super::*;

    const SMALL: &str = "n_tx = 4\nn_rx = 2\nk_dl = 2\nk_ul = 1\nn_clutter = 1\nn_paths = 3\nmax_ao_iters = 2\nmax_inner_iters = 30\n";

    fn command(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("ma-isac").chain(args.iter().copied()))
            .unwrap()
            .command
    }

    fn s(p: &Path) -> &str {
        p.to_str().unwrap()
    }

    #[test]
    fn run_writes_tables_and_traces() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("small.toml");
        fs::write(&cfg, SMALL).unwrap();
        let csv = dir.path().join("out.csv");
        let json = dir.path().join("out.json");
        let traces = dir.path().join("traces");
        for (out, fmt) in [(&csv, "csv"), (&json, "json")] {
            let cmd = command(&[
                "run",
                "--config",
                s(&cfg),
                "--sweep",
                "p_dl",
                "--values",
                "20,30",
                "--schemes",
                "FPA,AO-MA",
                "--seeds",
                "2",
                "--format",
                fmt,
                "--out",
                s(out),
                "--trace-dir",
                s(&traces),
            ]);
            assert!(execute(cmd).unwrap());
        }
        let from_csv = parse_csv(&fs::read(&csv).unwrap()).unwrap();
        let from_json = parse_json(&fs::read(&json).unwrap()).unwrap();
        assert_eq!(from_csv.len(), 2 * 2 * 2);
        assert_eq!(from_csv, from_json);
        assert!(dir.path().join("out.timing.csv").exists());
        assert_eq!(fs::read_dir(&traces).unwrap().count(), 8);
    }

    #[test]
    fn failed_cells_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out.csv");
        // a linear array of eight antennas at 5 mm pitch spans 35 mm and does not fit a 20 mm region
        let cmd = command(&[
            "run",
            "--sweep",
            "region_size",
            "--values",
            "0.02,0.06",
            "--schemes",
            "FPA",
            "--seeds",
            "1",
            "--out",
            s(&out),
        ]);
        assert!(!execute(cmd).unwrap());
        let rows = parse_csv(&fs::read(&out).unwrap()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(!rows[0].ok && rows[1].ok);
    }

    #[test]
    fn bad_arguments_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out.csv");
        assert!(execute(command(&["run", "--sweep", "bogus", "--out", s(&out)])).is_err());
        assert!(execute(command(&["run", "--schemes", "XYZ", "--out", s(&out)])).is_err());
        assert!(Cli::try_parse_from(["ma-isac", "run"]).is_err());
    }
}
