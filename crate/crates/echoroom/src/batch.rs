//! Monte-Carlo batches and their aggregate statistics.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::trial::{run_trial, TrialReport};

/// Error histogram bin width in micrometers (0.1 cm).
pub const ERROR_BIN_UM: u64 = 1000;
/// Step histogram bin width, stops.
pub const STEP_BIN: u64 = 4;

/// An error in meters as the integer micrometers written to the CSV.
pub fn micrometers(err: f64) -> u64 {
    (err * 1e6).round() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// `counts[k]` covers `[k·bin_width, (k+1)·bin_width)`.
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Bins integer values `ticks` of size `unit`; the bin width is
    /// `width` ticks. Integer arithmetic keeps the counts reproducible from
    /// the CSV values.
    fn build(ticks: &[u64], width: u64, unit: f64) -> Self {
        let bin_width = width as f64 * unit;
        let mut counts = Vec::new();
        for &v in ticks {
            let k = (v / width) as usize;
            if counts.len() <= k {
                counts.resize(k + 1, 0);
            }
            counts[k] += 1;
        }
        Self { bin_width, counts }
    }

    /// Lower edge of the fullest bin, the lowest one on ties.
    pub fn mode(&self) -> Option<f64> {
        let max = *self.counts.iter().max()?;
        let k = self.counts.iter().position(|&c| c == max)?;
        Some(k as f64 * self.bin_width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantiles {
    pub p50: f64,
    pub p90: f64,
    pub p95: f64,
    pub max: f64,
}

/// Nearest-rank quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

impl Quantiles {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            p50: quantile(&v, 0.5),
            p90: quantile(&v, 0.9),
            p95: quantile(&v, 0.95),
            max: v[v.len() - 1],
        })
    }
}

/// Batch summary; every field is recomputable from the per-trial rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Over every matched wall of every trial.
    pub wall_errors: usize,
    pub fraction_errors_below_1cm: f64,
    pub error_quantiles_m: Option<Quantiles>,
    pub error_histogram_m: Histogram,
    pub step_quantiles: Option<Quantiles>,
    pub step_histogram: Histogram,
    /// Lower edge of the fullest step bin.
    pub step_mode_bin: Option<f64>,
    /// Most frequent exact step count, the smallest on ties.
    pub step_mode: Option<usize>,
    pub fraction_steps_below_100: f64,
}

impl Aggregate {
    pub fn from_reports(reports: &[TrialReport]) -> Self {
        let n = reports.len();
        let successes = reports.iter().filter(|r| r.success).count();
        let errors: Vec<f64> = reports.iter().flat_map(|r| r.wall_errors.iter().flatten().copied()).collect();
        let steps: Vec<f64> = reports.iter().map(|r| r.steps as f64).collect();
        let step_ticks: Vec<u64> = reports.iter().map(|r| r.steps as u64).collect();
        let error_ticks: Vec<u64> = errors.iter().map(|&e| micrometers(e)).collect();
        let step_histogram = Histogram::build(&step_ticks, STEP_BIN, 1.0);
        let step_mode = {
            let mut s: Vec<usize> = reports.iter().map(|r| r.steps).collect();
            s.sort_unstable();
            let mut best: Option<(usize, usize)> = None;
            for chunk in s.chunk_by(|a, b| a == b) {
                if best.is_none_or(|(_, c)| chunk.len() > c) {
                    best = Some((chunk[0], chunk.len()));
                }
            }
            best.map(|(v, _)| v)
        };
        let frac = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Self {
            trials: n,
            successes,
            success_rate: frac(successes, n),
            wall_errors: errors.len(),
            fraction_errors_below_1cm: frac(errors.iter().filter(|&&e| e < 0.01).count(), errors.len()),
            error_quantiles_m: Quantiles::of(&errors),
            error_histogram_m: Histogram::build(&error_ticks, ERROR_BIN_UM, 1e-6),
            step_quantiles: Quantiles::of(&steps),
            step_mode_bin: step_histogram.mode(),
            step_histogram,
            step_mode,
            fraction_steps_below_100: frac(reports.iter().filter(|r| r.steps < 100).count(), n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    /// Sorted by trial index.
    pub reports: Vec<TrialReport>,
    pub aggregate: Aggregate,
}

/// Runs `cfg.trials` trials on `cfg.workers` threads. The result does not
/// depend on scheduling.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<BatchReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    let mut reports = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(cfg, i))
            .collect::<Result<Vec<_>>>()
    })?;
    reports.sort_by_key(|r| r.trial);
    let aggregate = Aggregate::from_reports(&reports);
    Ok(BatchReport { reports, aggregate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_bins_and_mode() {
        let h = Histogram::build(&[0, 3, 4, 9, 10, 11], 4, 1.0);
        assert_eq!(h.counts, vec![2, 1, 3]);
        assert_eq!(h.mode(), Some(8.0));
        assert_eq!(Histogram::build(&[], 1, 1.0).mode(), None);
        assert_eq!(micrometers(0.003), 3000);
        let e = Histogram::build(&[micrometers(0.003), micrometers(0.0009999)], ERROR_BIN_UM, 1e-6);
        assert_eq!(e.counts, vec![0, 1, 0, 1]);
    }

    #[test]
    fn nearest_rank_quantiles() {
        let q = Quantiles::of(&[5.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
        assert_eq!((q.p50, q.p90, q.p95, q.max), (3.0, 5.0, 5.0, 5.0));
        assert!(Quantiles::of(&[]).is_none());
    }
}
