use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use echoroom::config::{ExperimentConfig, OracleKind, Scenario};
use echoroom::corner::{corner_trial, early_second_order, CornerConfig};
use echoroom::error::{HarnessError, Result};
use echoroom::report::{self, write_batch};
use echoroom::trial::trial_room;
use echoroom::{rir_dump, run_batch, run_trial};
use echoroom_core::{seed, Point2};

#[derive(Parser)]
#[command(name = "echoroom", version, about = "Room shape estimation from robot-mounted microphones (simulation)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and print its stops.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Trial index within the experiment.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Run a Monte-Carlo batch and write trials.csv and aggregate.json.
    Batch {
        #[command(flatten)]
        common: Common,
        /// Also write one trace file per trial.
        #[arg(long)]
        traces: bool,
    },
    /// Write the raw RIRs of a static pose.
    RirDump {
        #[command(flatten)]
        common: Common,
        /// Source position in room coordinates (defaults to the room centroid).
        #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true)]
        at: Option<Vec<f64>>,
        /// Arm angle in degrees.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        angle: f64,
        /// Arm extension in meters.
        #[arg(long, default_value_t = 0.5)]
        extension: f64,
    },
    /// Source near a corner: sweep at decreasing arm extensions.
    DemoCorner {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Signal-to-noise ratio in dB; `inf` for noiseless.
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, value_enum)]
    scenario: Option<Scenario>,
    #[arg(long, value_enum)]
    oracle: Option<OracleKind>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.snr_db {
            cfg.snr_db = s;
        }
        if let Some(s) = self.scenario {
            cfg.scenario = s;
        }
        if let Some(o) = self.oracle {
            cfg.oracle = o;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn fmt_err(e: Option<f64>) -> String {
    e.map_or_else(|| "-".into(), |v| format!("{:.2} mm", v * 1000.0))
}

fn simulate(common: &Common, trial: usize) -> Result<()> {
    let cfg = common.config()?;
    let r = run_trial(&cfg, trial)?;
    for s in &r.trace {
        let c = r.start.apply(s.center);
        println!(
            "stop {:>3}  ({:7.3}, {:7.3})  {:<15} walls {}  clusters {:?}",
            s.stop_index,
            c.x,
            c.y,
            format!("{:?}", s.action),
            s.confirmed_walls,
            &s.cluster_sizes[..s.cluster_sizes.len().min(4)]
        );
    }
    let errs: Vec<String> = r.wall_errors.iter().map(|e| fmt_err(*e)).collect();
    println!(
        "trial {} success {} steps {} wall errors [{}]",
        r.trial,
        r.success,
        r.steps,
        errs.join(", ")
    );
    if let Some(f) = &r.failure {
        println!("stopped: {f}");
    }
    fs::create_dir_all(&common.out_dir)?;
    report::write_trace(fs::File::create(common.out_dir.join(format!("trace_{trial:05}.json")))?, &r)?;
    report::write_csv(fs::File::create(common.out_dir.join(report::CSV_FILE))?, std::slice::from_ref(&r))?;
    Ok(())
}

fn batch(common: &Common, traces: bool) -> Result<()> {
    let mut cfg = common.config()?;
    cfg.traces |= traces;
    let b = run_batch(&cfg)?;
    write_batch(&common.out_dir, &cfg, &b)?;
    let a = &b.aggregate;
    println!("trials {}  success rate {:.3}", a.trials, a.success_rate);
    if let Some(q) = &a.error_quantiles_m {
        println!(
            "wall error median {:.2} mm  p95 {:.2} mm  below 1 cm {:.1}%",
            q.p50 * 1000.0,
            q.p95 * 1000.0,
            a.fraction_errors_below_1cm * 100.0
        );
    }
    if let Some(q) = &a.step_quantiles {
        println!(
            "steps median {}  mode {:?}  below 100 {:.1}%",
            q.p50,
            a.step_mode,
            a.fraction_steps_below_100 * 100.0
        );
    }
    println!("wrote {}", common.out_dir.display());
    Ok(())
}

fn rir_dump_cmd(common: &Common, at: Option<&[f64]>, angle: f64, extension: f64) -> Result<()> {
    let cfg = common.config()?;
    let room = trial_room(&cfg, seed::derive(cfg.master_seed, 0))?;
    let center = match at {
        Some([x, y]) => Point2::new(*x, *y),
        _ => room.polygon().centroid(),
    };
    if !echoroom_core::geometry::polygon_contains(room.polygon(), center) {
        return Err(HarnessError::Config(format!("source ({}, {}) is not inside the room", center.x, center.y)));
    }
    let sim = cfg.sim_config(cfg.master_seed);
    let paths = rir_dump::dump_rirs(&common.out_dir, &room, center, angle.to_radians(), extension, &sim)?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn demo_corner(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let corner = CornerConfig {
        snr_db: cfg.snr_db,
        ..CornerConfig::default()
    };
    let trials = common.trials.unwrap_or(1);
    let mut out = Vec::with_capacity(trials);
    for i in 0..trials {
        let s = seed::derive(cfg.master_seed, i as u64);
        let t = corner_trial(&corner, s, seed::derive(s, 3))?;
        if trials <= 5 {
            let (room, _, _) = echoroom::corner::corner_room(&corner, seed::derive(s, 1))?;
            if let Some(e) = early_second_order(&room, t.source, 343.0)? {
                println!(
                    "mic ({:.3}, {:.3}): second-order arrival {:.3} ms before a first-order one",
                    e.mic.x,
                    e.mic.y,
                    (e.first_order_toa - e.second_order_toa) * 1000.0
                );
            }
            println!(
                "source ({:.2}, {:.2})  first-order images {:?}  corner image {:?}",
                t.source.x, t.source.y, t.first_images, t.corner_image
            );
            for e in &t.extensions {
                println!(
                    "  extension {:.2} m (effective {:.2}): best {:?} size {} -> {:?}",
                    e.requested, e.effective, e.best, e.best_size, e.label
                );
            }
        }
        out.push(t);
    }
    let failed_full = out.iter().filter(|t| !t.full_ok).count();
    let recovered = out.iter().filter(|t| !t.full_ok && t.recovered).count();
    println!("full-length sweep failed in {failed_full}/{trials}; shorter arms recovered {recovered}/{failed_full}");
    fs::create_dir_all(&common.out_dir)?;
    let f = fs::File::create(common.out_dir.join("corner.json"))?;
    serde_json::to_writer_pretty(f, &out)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { common, trial } => simulate(common, *trial),
        Command::Batch { common, traces } => batch(common, *traces),
        Command::RirDump {
            common,
            at,
            angle,
            extension,
        } => rir_dump_cmd(common, at.as_deref(), *angle, *extension),
        Command::DemoCorner { common } => demo_corner(common),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &HarnessError) -> u8 {
    e.exit_code() as u8
}
