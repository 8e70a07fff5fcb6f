use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rope_core::channel::{build_database, load_database, save_database, RadioEnvironment};
use rope_core::harness::{
    derive_seed, evaluated_ticks, experiment_map, prepare_models, read_rows, read_warns, run_cell, run_experiment,
    summarize, tick_topology, train_models, write_cdf, write_results, write_rows, write_warns, ExperimentConfig,
    Models, World,
};
use rope_core::scenario::{export_traces, generate_map, generate_traces_with, import_traces, WorldMap};
use rope_core::verification::LOG_HEADER;
use rope_core::{Error, Result};

// Stream ids for seeds drawn by the standalone subcommands.
const CLI_TRACES: u64 = 31;
const CLI_CHANNEL: u64 = 32;

#[derive(Parser)]
#[command(name = "rope", version, about = "Predictive multi-hop V2X routing experiments")]
struct Cli {
    /// Base seed; overrides the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the grid city and write the map file.
    GenMap {
        #[arg(long, default_value = "map.txt")]
        out: PathBuf,
    },
    /// Simulate traffic on a map and write a trace file.
    GenTraces {
        #[arg(long)]
        map: PathBuf,
        /// Insertion rate in vehicles per hour per km; defaults to the first
        /// configured density.
        #[arg(long)]
        density: Option<f64>,
        /// Simulated seconds; defaults to the configured run duration.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value = "traces.csv")]
        out: PathBuf,
    },
    /// Measure every V2I and V2V link of a trace into a link database.
    BuildDb {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        traces: PathBuf,
        #[arg(long, default_value = "links.csv")]
        out: PathBuf,
    },
    /// Train the V2I and V2V predictors. Without `--db` the database is built
    /// from the configuration.
    Train {
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long, default_value = "models")]
        out: PathBuf,
    },
    /// Run the cycle over one trace file and write raw rows, summaries and
    /// verification logs.
    Run {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        models: PathBuf,
        /// Density label written to the rows; defaults to the nominal rate
        /// of the trace's density level.
        #[arg(long)]
        density: Option<f64>,
        /// Also dump the predicted topology of this tick index at the first
        /// threshold.
        #[arg(long)]
        dump_topology: Option<usize>,
        #[arg(long, default_value = "run")]
        out_dir: PathBuf,
    },
    /// Rebuild the results table from raw rows.
    Eval {
        #[arg(long)]
        rows: PathBuf,
        #[arg(long)]
        warns: PathBuf,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
    },
    /// Full factorial experiment: results and path-strength CDF.
    Sweep {
        /// Trained models; trained from the configuration when absent.
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long, default_value = "sweep")]
        out_dir: PathBuf,
        /// Also write the raw rows and warning decisions.
        #[arg(long)]
        raw: bool,
    },
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = config(cli)?;
    match &cli.command {
        Command::GenMap { out } => {
            let mut layout = cfg.map.clone();
            if let Some(seed) = cli.seed {
                layout.seed = seed;
            }
            generate_map(&layout)?.save(out)
        }
        Command::GenTraces { map, density, duration, out } => {
            let map = WorldMap::load(map)?;
            let density = density.unwrap_or(cfg.densities[0]);
            let seed = derive_seed(cfg.seed, CLI_TRACES, density.to_bits());
            let traces = generate_traces_with(
                &map,
                &cfg.traffic,
                density,
                duration.unwrap_or(cfg.duration),
                cfg.cycle.tau,
                seed,
            )?;
            export_traces(&traces, out)
        }
        Command::BuildDb { map, traces, out } => {
            let env = RadioEnvironment::new(WorldMap::load(map)?, cfg.channel.clone(), derive_seed(cfg.seed, CLI_CHANNEL, 0));
            let db = build_database(&env, &import_traces(traces)?, cfg.cycle.d_i, cfg.cycle.d_v)?;
            log::info!("{} link records", db.len());
            save_database(&db, out)
        }
        Command::Train { db, out } => {
            let models = match db {
                Some(p) => train_models(&load_database(p)?, &cfg.training)?.0,
                None => prepare_models(&cfg, &experiment_map(&cfg)?)?,
            };
            models.save(out)
        }
        Command::Run {
            map,
            traces,
            models,
            density,
            dump_topology,
            out_dir,
        } => {
            let traces = import_traces(traces)?;
            let density = density.unwrap_or(traces.density_level.nominal_rate());
            let env = RadioEnvironment::new(WorldMap::load(map)?, cfg.channel.clone(), derive_seed(cfg.seed, CLI_CHANNEL, 0));
            let world = World { env, traces };
            let models = Models::load(models)?;
            let out = run_cell(&world, &models, &cfg, density, 0, true)?;
            write(&out_dir.join("rows.csv"), &write_rows(&out.rows))?;
            write(&out_dir.join("warns.csv"), &write_warns(&out.warns))?;
            write(
                &out_dir.join("results.csv"),
                &write_results(&summarize(&out.rows, &out.warns, &cfg.methods)?),
            )?;
            for (g, log) in cfg.gamma_th.iter().zip(&out.logs) {
                write(&out_dir.join(format!("verification_{g}.log")), &format!("{LOG_HEADER}\n{log}"))?;
            }
            if let Some(k) = dump_topology {
                if !evaluated_ticks(&world, &cfg.cycle).contains(k) {
                    return Err(Error::invalid(format!("tick {k} has no full history or future")));
                }
                let topo = tick_topology(&world, &models, *k, &cfg.cycle, cfg.gamma_th[0])?;
                write(&out_dir.join("topology.txt"), &topo.dump())?;
            }
            Ok(())
        }
        Command::Eval { rows, warns, out } => {
            let rows = read_rows(&read(rows)?, &rows.display().to_string())?;
            let warns = read_warns(&read(warns)?, &warns.display().to_string())?;
            write(out, &write_results(&summarize(&rows, &warns, &cfg.methods)?))
        }
        Command::Sweep { models, out_dir, raw } => {
            let map = experiment_map(&cfg)?;
            let models = match models {
                Some(p) => Models::load(p)?,
                None => prepare_models(&cfg, &map)?,
            };
            let out = run_experiment(&cfg, &map, &models)?;
            write(&out_dir.join("results.csv"), &write_results(&out.summaries))?;
            write(&out_dir.join("cdf.csv"), &write_cdf(&out.rows))?;
            if *raw {
                write(&out_dir.join("rows.csv"), &write_rows(&out.rows))?;
                write(&out_dir.join("warns.csv"), &write_warns(&out.warns))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
