use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crowdstop::earlystop::StopReport;
use crowdstop_cli::{
    cmd_check_stop, cmd_convert, cmd_run, cmd_sweep, oracle_from_curve, oracle_from_log,
    summary_table, FileConfig, OracleRow, Overrides, SweepAxis, ORACLE_HEADER,
};

/// Early stopping for crowdsourced pairwise ranking.
#[derive(Parser)]
#[command(name = "crowdstop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Stopping criterion (ES, MA(w), WMA(w)); repeatable.
    #[arg(long = "criterion")]
    criteria: Vec<String>,
    /// Rank process such as Local-Random or CrowdBT-CrowdBT.
    #[arg(long)]
    process: Option<String>,
    /// Cap on worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (default: $CROWDSTOP_OUT, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write results.csv and curves.csv.
    Run(Common),
    /// Run one experiment per value of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// k, n_batch, B or theta.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Optimal stopping point of completed runs.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Curve CSV as written by `run`.
        #[arg(long, conflicts_with = "log")]
        curve: Option<PathBuf>,
        /// Complete answer log (needs --objects and a config).
        #[arg(long, requires = "objects")]
        log: Option<PathBuf>,
        /// Object list in the truth format.
        #[arg(long)]
        objects: Option<PathBuf>,
    },
    /// Early-stopping decision for a partial answer log.
    CheckStop {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        log: PathBuf,
        /// Object list in the truth format.
        #[arg(long)]
        objects: PathBuf,
    },
    /// Convert a worker,winner,loser table to the answers format.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "worker")]
        worker_col: String,
        #[arg(long, default_value = "winner")]
        winner_col: String,
        #[arg(long, default_value = "loser")]
        loser_col: String,
    },
}

/// Failure that maps to a specific exit status.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn load(common: &Common) -> Result<FileConfig> {
    let file = match &common.config {
        Some(p) if !p.exists() => {
            return Err(Usage(format!("config file not found: {}", p.display())).into())
        }
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let merged = file.merged(&Overrides {
        seed: common.seed,
        theta: common.theta,
        criteria: common.criteria.clone(),
        process: common.process.clone(),
        threads: common.threads,
        out: common.out.clone(),
    });
    #[cfg(feature = "parallel")]
    if let Some(n) = merged.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    if merged.threads.is_some() {
        log::warn!("built without the `parallel` feature; `threads` is ignored");
    }
    Ok(merged)
}

fn print_oracle(rows: &[OracleRow], out: Option<&Path>) -> Result<()> {
    let mut text = format!("{ORACLE_HEADER}\n");
    for r in rows {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    print!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("oracle.csv");
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn print_report(report: &StopReport, out: Option<&Path>) -> Result<()> {
    print!("{}", report.text_record());
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("check_stop.csv");
        let text = format!("{}\n{}\n", StopReport::CSV_HEADER, report.csv_row());
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = load(&common)?;
            let (result, written) = cmd_run(&cfg)?;
            print!("{}", summary_table(&result));
            for p in written.0 {
                log::info!("wrote {}", p.display());
            }
        }
        Command::Sweep {
            common,
            axis,
            values,
        } => {
            let cfg = load(&common)?;
            let axis: SweepAxis = axis.parse()?;
            let (blocks, written) = cmd_sweep(&cfg, axis, &values)?;
            println!("{blocks} of {} sweep values completed", values.len());
            for p in written.0 {
                println!("wrote {}", p.display());
            }
        }
        Command::Oracle {
            common,
            curve,
            log,
            objects,
        } => {
            let cfg = load(&common)?;
            let rows = match (curve, log) {
                (Some(path), _) => {
                    let theta = cfg
                        .theta
                        .context("oracle needs --theta or `theta` in the config")?;
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("cannot read {}", path.display()))?;
                    oracle_from_curve(&text, theta)?
                }
                (None, Some(log)) => {
                    let objects = objects.expect("clap enforces --objects");
                    vec![oracle_from_log(&cfg, &log, &objects)?]
                }
                (None, None) => anyhow::bail!("oracle needs --curve or --log"),
            };
            let out = common.out.clone().or(cfg.out.clone());
            print_oracle(&rows, out.as_deref())?;
        }
        Command::CheckStop {
            common,
            log,
            objects,
        } => {
            let cfg = load(&common)?;
            let report = cmd_check_stop(&cfg, &log, &objects)?;
            let out = common.out.clone().or(cfg.out.clone());
            print_report(&report, out.as_deref())?;
        }
        Command::Convert {
            input,
            output,
            worker_col,
            winner_col,
            loser_col,
        } => {
            let n = cmd_convert(&input, &output, [&worker_col, &winner_col, &loser_col])?;
            println!("converted {n} answers into {}", output.display());
        }
    }
    std::io::stdout().flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
