//! Output files: per-trial CSV, aggregate JSON and per-trial traces.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use echoroom_core::{Line2, Point2, Polygon2, StopRecord};
use serde::Serialize;

use crate::batch::{Aggregate, BatchReport};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::trial::TrialReport;

pub const CSV_HEADER: [&str; 7] = ["trial", "success", "steps", "err_w1", "err_w2", "err_w3", "err_w4"];
pub const CSV_FILE: &str = "trials.csv";
pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const TRACE_DIR: &str = "traces";

/// Writes the per-trial table. Error columns hold the first four walls in
/// meters with six decimals; unmatched walls are left empty.
pub fn write_csv<W: Write>(out: W, reports: &[TrialReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        let mut row = vec![r.trial.to_string(), u8::from(r.success).to_string(), r.steps.to_string()];
        for k in 0..4 {
            row.push(match r.wall_errors.get(k).copied().flatten() {
                Some(e) => format!("{e:.6}"),
                None => String::new(),
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct AggregateFile<'a> {
    config: &'a ExperimentConfig,
    aggregate: &'a Aggregate,
}

/// Aggregate statistics with the configuration that produced them.
/// Non-finite numbers (a noiseless `snr_db`) are written as `null`.
pub fn write_aggregate<W: Write>(out: W, cfg: &ExperimentConfig, aggregate: &Aggregate) -> Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, &AggregateFile { config: cfg, aggregate })?;
    out.write_all(b"\n")?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct TraceStop {
    world_center: Point2,
    world_next_center: Point2,
    /// Robot frame.
    #[serde(flatten)]
    record: StopRecord,
}

#[derive(Debug, Serialize)]
struct TraceFile<'a> {
    trial: usize,
    seed: u64,
    success: bool,
    room_complete: bool,
    steps: usize,
    wall_errors: &'a [Option<f64>],
    true_room: &'a Polygon2,
    start: echoroom_core::RigidTransform,
    recovered_polygon: &'a Option<Polygon2>,
    estimated_walls: &'a [Line2],
    confirmed_walls: &'a [Line2],
    failure: &'a Option<String>,
    stops: Vec<TraceStop>,
}

/// One trial as JSON: truth, estimate and every stop.
pub fn write_trace<W: Write>(out: W, r: &TrialReport) -> Result<()> {
    let stops = r
        .trace
        .iter()
        .map(|s| TraceStop {
            world_center: r.start.apply(s.center),
            world_next_center: r.start.apply(s.next_center),
            record: s.clone(),
        })
        .collect();
    let file = TraceFile {
        trial: r.trial,
        seed: r.seed,
        success: r.success,
        room_complete: r.room_complete,
        steps: r.steps,
        wall_errors: &r.wall_errors,
        true_room: &r.true_room,
        start: r.start,
        recovered_polygon: &r.recovered_polygon,
        estimated_walls: &r.estimated_walls,
        confirmed_walls: &r.confirmed_walls,
        failure: &r.failure,
        stops,
    };
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, &file)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn trace_path(dir: &Path, trial: usize) -> PathBuf {
    dir.join(TRACE_DIR).join(format!("trial_{trial:05}.json"))
}

/// Writes `trials.csv`, `aggregate.json` and, when enabled, the traces.
pub fn write_batch(dir: &Path, cfg: &ExperimentConfig, batch: &BatchReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(fs::File::create(dir.join(CSV_FILE))?, &batch.reports)?;
    write_aggregate(fs::File::create(dir.join(AGGREGATE_FILE))?, cfg, &batch.aggregate)?;
    if cfg.traces {
        fs::create_dir_all(dir.join(TRACE_DIR))?;
        for r in &batch.reports {
            write_trace(fs::File::create(trace_path(dir, r.trial))?, r)?;
        }
    }
    Ok(())
}
