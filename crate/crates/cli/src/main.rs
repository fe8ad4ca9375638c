use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use pom_qsd_cli::output::{write_all, RunRecord};
use pom_qsd_cli::runner::run_all;
use pom_qsd_cli::{parse_config, FigurePreset, RunConfig};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_AUDIT: u8 = 4;

/// Non-Markovian dynamics of a piezoelectric optomechanical system.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named figure preset.
    #[arg(long, value_enum)]
    preset: Option<FigurePreset>,
    /// Override the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output root; results go to `<out>/<name>`.
    #[arg(long, env = "POM_QSD_OUT", default_value = "pom-qsd-out")]
    out: PathBuf,
    /// Disable the truncation audit.
    #[arg(long)]
    no_audit: bool,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match (&cli.config, cli.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut c = parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            if c.name == "run" {
                if let Some(stem) = path.file_stem() {
                    c.name = stem.to_string_lossy().into_owned();
                }
            }
            c
        }
        (None, Some(p)) => p.config(),
        (None, None) => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.no_audit {
        cfg.audit.enabled = false;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if cli.print_config {
        match toml::to_string_pretty(&cfg) {
            Ok(s) => {
                print!("{s}");
                return ExitCode::SUCCESS;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    if let Some(n) = cli.workers {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot start {n} worker threads");
            return ExitCode::from(EXIT_CONFIG);
        }
    }

    let start = Instant::now();
    let results = run_all(&cfg);
    let dir = cli.out.join(&cfg.name);
    let record = RunRecord {
        config: &cfg,
        results: &results,
        workers: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    if let Err(e) = write_all(&dir, &record) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_IO);
    }

    let mut code = ExitCode::SUCCESS;
    let mut audit_failed = false;
    for r in &results {
        match r {
            Ok(res) => {
                if let Some(a) = &res.audit {
                    if a.warned {
                        eprintln!(
                            "warning: point {}: truncation drift {:.2}% at dims {:?}",
                            res.point.index,
                            100.0 * a.relative_drift,
                            a.dims
                        );
                    }
                    audit_failed |= a.failed;
                }
            }
            Err(f) => {
                eprintln!("error: point {} {:?}: {}", f.point.index, f.point.assignments, f.error);
                code = ExitCode::from(EXIT_NUMERICAL);
            }
        }
    }
    if audit_failed && code == ExitCode::SUCCESS {
        code = ExitCode::from(EXIT_AUDIT);
    }
    eprintln!("wrote {}", dir.display());
    code
}
