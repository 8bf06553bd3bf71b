use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use jpta::batch::{
    batch_csv_string, run_batch, sweep, sweep_csv_string, BatchOptions, SweepParameter,
};
use jpta::config::load_config;
use jpta::metrics::{gain_map, GainMapSpec, PowerModel, SubbandSelector};
use jpta::optimizer::{solve, ScaOptions};
use jpta::scenario::{sample_users, synthesize_channels};
use jpta::{Architecture, SystemConfig64, UtilityKind};

mod output;

#[derive(Parser)]
#[command(
    name = "jpta",
    about = "Joint phase-time array beamforming simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scenario configuration file (TOML key-value). Missing keys take the
    /// reference-setup defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for user placement; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and emit the solution as JSON, with a JSON-lines
    /// convergence trace on stderr.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        /// Beamforming architecture.
        #[arg(long, default_value = "jpta")]
        arch: Architecture,
        /// Rate utility to maximize.
        #[arg(long, default_value = "log")]
        utility: UtilityKind,
    },
    /// Solve one scenario (or reuse a saved solution) and tabulate the
    /// array gain over a polar grid (CSV: angle_deg, range_m, f_hz, gain).
    GainMap {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "jpta")]
        arch: Architecture,
        #[arg(long, default_value = "log")]
        utility: UtilityKind,
        /// Reuse the beamformer and allocation from a solution JSON written
        /// by `optimize` instead of solving; the config must match.
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Subband selection: "all", "averaged", or a 0-based subband index.
        #[arg(long, default_value = "averaged")]
        subband: String,
        #[arg(long, default_value_t = 0.5)]
        angle_min_deg: f64,
        #[arg(long, default_value_t = 179.5)]
        angle_max_deg: f64,
        #[arg(long, default_value_t = 1.0)]
        angle_step_deg: f64,
        #[arg(long, default_value_t = 0.5)]
        range_min_m: f64,
        #[arg(long, default_value_t = 20.0)]
        range_max_m: f64,
        #[arg(long, default_value_t = 0.5)]
        range_step_m: f64,
    },
    /// Run seeded scenario batches for one or more architectures and
    /// utilities (CSV: seed, scenario, arch, utility, user, rate_bps,
    /// log_rate, se, ee, runtime_s, status).
    Batch {
        #[command(flatten)]
        common: CommonArgs,
        /// Architectures to solve; repeat the flag for several.
        #[arg(long = "arch", default_values = ["fd", "pa", "jpta"])]
        archs: Vec<Architecture>,
        /// Utilities to solve; repeat the flag for several.
        #[arg(long = "utility", default_values = ["sum", "log"])]
        utilities: Vec<UtilityKind>,
        /// Number of seeded scenarios.
        #[arg(long, default_value_t = 50)]
        scenarios: usize,
        /// Write runtime_s as zero so repeated runs are byte-identical.
        #[arg(long)]
        no_runtime: bool,
    },
    /// Batch over a swept config parameter with paired seeds (CSV with a
    /// leading param,value column pair).
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "arch", default_values = ["pa", "jpta"])]
        archs: Vec<Architecture>,
        #[arg(long = "utility", default_values = ["log"])]
        utilities: Vec<UtilityKind>,
        #[arg(long, default_value_t = 20)]
        scenarios: usize,
        /// Swept parameter: num_ttds, max_delay_s, or bandwidth_hz.
        #[arg(long)]
        param: SweepParameter,
        /// Comma-separated values for the swept parameter (SI units).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        no_runtime: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": err.to_string(),
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> jpta::Result<()> {
    match cli.command {
        Command::Optimize {
            common,
            arch,
            utility,
        } => {
            let (cfg, seed) = load_scenario(&common)?;
            let users = sample_users(seed, &cfg)?;
            let channels = synthesize_channels(&users, &cfg)?;
            let state = solve(&channels, &cfg, utility, &ScaOptions::default(), arch)?;
            for record in &state.trace {
                eprintln!("{}", output::trace_json(record));
            }
            let solution = output::solution_json(&state, &users, &channels, &cfg, arch, seed);
            emit(&common.out, &solution)?;
        }
        Command::GainMap {
            common,
            arch,
            utility,
            solution,
            subband,
            angle_min_deg,
            angle_max_deg,
            angle_step_deg,
            range_min_m,
            range_max_m,
            range_step_m,
        } => {
            let (cfg, seed) = load_scenario(&common)?;
            let (beamformer, plan) = match solution {
                Some(path) => {
                    let (beamformer, plan) = output::load_solution(&path)?;
                    plan.validate(&cfg)?;
                    (beamformer, plan)
                }
                None => {
                    let users = sample_users(seed, &cfg)?;
                    let channels = synthesize_channels(&users, &cfg)?;
                    let state = solve(&channels, &cfg, utility, &ScaOptions::default(), arch)?;
                    (state.beamformer, state.plan)
                }
            };
            let selector = parse_selector(&subband)?;
            let spec = GainMapSpec {
                angle_min_deg,
                angle_max_deg,
                angle_step_deg,
                range_min_m,
                range_max_m,
                range_step_m,
                selector,
            };
            let rows = gain_map(&beamformer, &plan, &cfg, &spec)?;
            emit(&common.out, &output::gain_map_csv(&rows))?;
        }
        Command::Batch {
            common,
            archs,
            utilities,
            scenarios,
            no_runtime,
        } => {
            let (cfg, seed) = load_scenario(&common)?;
            let opts = BatchOptions {
                measure_runtime: !no_runtime,
                ..BatchOptions::default()
            };
            let result = run_batch(
                &cfg,
                scenarios,
                seed,
                &archs,
                &utilities,
                &PowerModel::default(),
                &opts,
            )?;
            emit(&common.out, &batch_csv_string(&result))?;
        }
        Command::Sweep {
            common,
            archs,
            utilities,
            scenarios,
            param,
            values,
            no_runtime,
        } => {
            let (cfg, seed) = load_scenario(&common)?;
            let opts = BatchOptions {
                measure_runtime: !no_runtime,
                ..BatchOptions::default()
            };
            let result = sweep(
                param,
                &values,
                &cfg,
                scenarios,
                seed,
                &archs,
                &utilities,
                &PowerModel::default(),
                &opts,
            )?;
            emit(&common.out, &sweep_csv_string(&result))?;
        }
    }
    Ok(())
}

fn load_scenario(common: &CommonArgs) -> jpta::Result<(SystemConfig64, u64)> {
    let (cfg, file_seed) = match &common.config {
        Some(path) => load_config::<f64>(path)?,
        None => (SystemConfig64::default(), 0),
    };
    Ok((cfg, common.seed.unwrap_or(file_seed)))
}

fn parse_selector(text: &str) -> jpta::Result<SubbandSelector> {
    match text {
        "all" => Ok(SubbandSelector::All),
        "averaged" => Ok(SubbandSelector::Averaged),
        other => other
            .parse::<usize>()
            .map(SubbandSelector::One)
            .map_err(|_| {
                jpta::Error::Parse(format!(
                    "subband must be all, averaged, or an index; got {other:?}"
                ))
            }),
    }
}

fn emit(target: &Option<PathBuf>, body: &str) -> jpta::Result<()> {
    match target {
        Some(path) => std::fs::write(path, body)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            if !body.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}
