use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use shape_core::scenegen::Scene;
use shape_harness::experiment::{ExperimentConfig, Method, Mode, SimulationPlan};
use shape_harness::{bench, estimate_scene, simulate, write_bench_csv, EstimatorSettings};

#[derive(Parser)]
#[command(name = "shape", version, about = "Consistency-region camera pose estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the pose for one scene file.
    Estimate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value = "shape")]
        method: Method,
        #[arg(long, default_value = "known")]
        mode: Mode,
        /// Optional experiment config supplying estimator settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Monte-Carlo error-decay experiment.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        m_min: usize,
        #[arg(long, default_value_t = 15)]
        m_max: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value = "shape,l2,linf")]
        methods: String,
        #[arg(long, default_value = "known")]
        mode: Mode,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write a gnuplot-style .dat table next to the CSV.
        #[arg(long)]
        dat: bool,
        /// Write median_ms as zero so the CSV is byte-stable.
        #[arg(long)]
        no_timing: bool,
    },
    /// Time consistency-region construction for growing M.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "100,200,1000,2000")]
        m: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Exit status for input that fails to parse.
const EXIT_PARSE: u8 = 2;
/// Exit status for estimator failures.
const EXIT_ESTIMATOR: u8 = 3;

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn configure_threads() {
    if let Some(n) = std::env::var("SHAPE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // only fails if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match cli.command {
        Command::Estimate { scene, method, mode, config } => {
            let parsed = fs::read_to_string(&scene)
                .with_context(|| format!("reading {}", scene.display()))
                .and_then(|t| {
                    serde_json::from_str::<Scene>(&t)
                        .with_context(|| format!("parsing {}", scene.display()))
                })
                .and_then(|s| {
                    let settings = match &config {
                        Some(p) => read_config(p)?.settings,
                        None => EstimatorSettings::default(),
                    };
                    Ok((s, settings))
                });
            let (scene, settings) = match parsed {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(EXIT_PARSE);
                }
            };
            match estimate_scene(&scene, method, mode, &settings) {
                Ok(report) => {
                    print!("{report}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_ESTIMATOR)
                }
            }
        }
        Command::Simulate { config, m_min, m_max, trials, methods, mode, seed, out, dat, no_timing } => {
            let run = || -> Result<()> {
                let mut cfg = read_config(&config)?;
                if let Some(seed) = seed {
                    cfg.scene.seed = seed;
                }
                anyhow::ensure!(m_min >= 1 && m_min <= m_max, "need 1 <= m-min <= m-max");
                let plan = SimulationPlan {
                    m_values: (m_min..=m_max).collect(),
                    trials,
                    methods: Method::parse_list(&methods)?,
                    mode,
                };
                let result = simulate(&cfg, &plan)?;
                result.write_csv(create(&out)?, !no_timing)?;
                if dat {
                    let mut w = create(&out.with_extension("dat"))?;
                    result.write_dat(&mut w)?;
                    w.flush()?;
                }
                for r in &result.rows {
                    if r.trials_excluded > 0 {
                        eprintln!(
                            "warning: {} M={}: {} of {} trials excluded",
                            r.method,
                            r.m,
                            r.trials_excluded,
                            r.trials_used + r.trials_excluded
                        );
                    }
                }
                Ok(())
            };
            report_status(run())
        }
        Command::Bench { config, m, out } => {
            let run = || -> Result<()> {
                let cfg = read_config(&config)?;
                let rows = bench(&cfg, &m)?;
                write_bench_csv(&rows, create(&out)?)?;
                Ok(())
            };
            report_status(run())
        }
    }
}

fn report_status(r: Result<()>) -> ExitCode {
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_PARSE)
        }
    }
}
