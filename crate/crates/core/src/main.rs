use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aoi_rrm::drqn::{train_from_config, Checkpoint};
use aoi_rrm::harness::report::{write_metrics_csv, write_summary_csv};
use aoi_rrm::harness::{run_episode, run_experiment, Environment, ExperimentConfig, MetricsRow, PolicyKind, SweepParam};
use aoi_rrm::mdp::OracleFixture;
use aoi_rrm::{Error, Result};

#[derive(Parser)]
#[command(name = "aoi-rrm", version, about = "AoI-aware V2V band allocation and packet scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the shared network and write checkpoint.bin, loss.csv and utility.csv.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config training budget.
        #[arg(long)]
        slots: Option<u64>,
    },
    /// Run one policy and write per-slot metrics.
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        policy: PolicyKind,
        #[arg(long)]
        slots: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Metrics CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every (value, policy, seed) cell and write metrics.csv and summary.csv.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "channel-aware,packet-aware,aoi-aware,random")]
        policies: Vec<PolicyKind>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        slots: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump slot-0 midpoints and group labels as CSV.
    ClusterDemo {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve a fixture MDP by value iteration and compare with its expected values.
    OracleCheck {
        #[arg(long)]
        fixture: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn load_checkpoint(path: Option<&Path>, cfg: &ExperimentConfig) -> Result<Option<Checkpoint>> {
    let Some(path) = path else { return Ok(None) };
    let ckpt = Checkpoint::load(path)?;
    if ckpt.config_hash != cfg.hash() {
        log::warn!("checkpoint was trained under a different configuration");
    }
    Ok(Some(ckpt))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn train(config: Option<&Path>, out: &Path, seed: Option<u64>, slots: Option<u64>) -> Result<()> {
    let mut cfg = load_config(config)?;
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.train_slots = slots.unwrap_or(cfg.train_slots);
    fs::create_dir_all(out)?;
    let mut report = |slot: u64, loss: Option<f64>| {
        if (slot + 1).is_multiple_of(1000) {
            log::info!("slot {} loss {:?}", slot + 1, loss);
        }
    };
    let (outcome, ckpt) = train_from_config(&cfg, Some(&mut report))?;
    ckpt.save(&out.join("checkpoint.bin"))?;
    fs::write(out.join("config.toml"), cfg.to_toml_string())?;

    let mut w = csv::Writer::from_writer(create(&out.join("loss.csv"))?);
    w.write_record(["slot", "loss"])?;
    for p in &outcome.loss_trace {
        w.serialize((p.slot, p.loss))?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(&out.join("utility.csv"))?);
    w.write_record(["slot", "avg_utility"])?;
    for (slot, u) in outcome.utility_trace.iter().enumerate() {
        w.serialize((slot, u))?;
    }
    w.flush()?;
    log::info!(
        "trained {} slots, {} gradient steps, plateau stop: {}",
        outcome.slots_run,
        outcome.loss_trace.len(),
        outcome.stopped_on_plateau
    );
    Ok(())
}

fn eval(
    config: Option<&Path>,
    checkpoint: Option<&Path>,
    policy: PolicyKind,
    slots: Option<u64>,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let ckpt = load_checkpoint(checkpoint, &cfg)?;
    let ep = run_episode(&cfg, policy, ckpt.as_ref().map(|c| &c.params), slots.unwrap_or(cfg.eval_slots), seed)?;
    let rows: Vec<MetricsRow> = ep.slots.iter().map(|m| MetricsRow::new("none", 0.0, policy, seed, m)).collect();
    match out {
        Some(p) => write_metrics_csv(&rows, create(p)?)?,
        None => write_metrics_csv(&rows, io::stdout().lock())?,
    }
    let s = ep.summary;
    log::info!(
        "{policy}: power {:.6e} W, drops {:.4}, aoi {:.4} slots, utility {:.6}",
        s.avg_power_w,
        s.avg_drops,
        s.avg_aoi_slots,
        s.avg_utility
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    config: Option<&Path>,
    param: SweepParam,
    values: &[f64],
    policies: &[PolicyKind],
    seeds: &[u64],
    checkpoint: Option<&Path>,
    slots: Option<u64>,
    out: &Path,
) -> Result<()> {
    let cfg = load_config(config)?;
    let ckpt = load_checkpoint(checkpoint, &cfg)?;
    let report = run_experiment(
        &cfg,
        param,
        values,
        policies,
        seeds,
        ckpt.as_ref().map(|c| &c.params),
        slots.unwrap_or(cfg.eval_slots),
    )?;
    fs::create_dir_all(out)?;
    write_metrics_csv(&report.rows, create(&out.join("metrics.csv"))?)?;
    write_summary_csv(&report.summary, create(&out.join("summary.csv"))?)?;
    Ok(())
}

fn cluster_demo(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<()> {
    let cfg = load_config(config)?;
    let env = Environment::new(&cfg, seed.unwrap_or(cfg.seed))?;
    let mut w = csv::Writer::from_writer(create(out)?);
    w.write_record(["vue", "midpoint_x", "midpoint_y", "group"])?;
    for (k, s) in env.states().iter().enumerate() {
        let m = s.vtx.midpoint(s.vrx);
        w.serialize((k, m.x, m.y, env.grouping().group_of[k]))?;
    }
    w.flush()?;
    Ok(())
}

fn oracle_check(fixture: &Path) -> Result<bool> {
    let fx = OracleFixture::load(fixture)?;
    let mdp = fx.to_mdp()?;
    let vi = mdp.value_iteration(fx.tol);
    let mut out = io::stdout().lock();
    writeln!(out, "state,value,action")?;
    for (s, (v, a)) in vi.values.iter().zip(&vi.policy).enumerate() {
        writeln!(out, "{s},{v},{a}")?;
    }
    let Some(expected) = &fx.expected_values else { return Ok(true) };
    if expected.len() != vi.values.len() {
        return Err(Error::Config(format!(
            "{} expected values for {} states",
            expected.len(),
            vi.values.len()
        )));
    }
    let worst = expected
        .iter()
        .zip(&vi.values)
        .map(|(e, v)| (e - v).abs())
        .fold(0.0, f64::max);
    eprintln!("max deviation from expected values: {worst:e} (tolerance {:e})", fx.tol);
    Ok(worst <= fx.tol)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let result = match Cli::parse().command {
        Command::Train { config, out, seed, slots } => train(config.as_deref(), &out, seed, slots).map(|_| true),
        Command::Eval {
            config,
            checkpoint,
            policy,
            slots,
            seed,
            out,
        } => eval(config.as_deref(), checkpoint.as_deref(), policy, slots, seed, out.as_deref()).map(|_| true),
        Command::Sweep {
            config,
            param,
            values,
            policies,
            seeds,
            checkpoint,
            slots,
            out,
        } => sweep(
            config.as_deref(),
            param,
            &values,
            &policies,
            &seeds,
            checkpoint.as_deref(),
            slots,
            &out,
        )
        .map(|_| true),
        Command::ClusterDemo { config, out, seed } => cluster_demo(config.as_deref(), &out, seed).map(|_| true),
        Command::OracleCheck { fixture } => oracle_check(&fixture),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
