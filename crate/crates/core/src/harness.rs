//! Monte-Carlo detection-rate experiments.

use std::path::Path;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canceller::{Canceller, DetectionReport, DetectorConfig, Method};
use crate::error::{Error, Result};
use crate::rdmap::{cyclic_distance, signed_doppler_bin};
use crate::scene::{Echo, Noise, Scene, Synthesizer};

/// Caps the number of worker threads used by [`sweep`].
pub const THREADS_ENV: &str = "ZCRADAR_THREADS";

/// Worker count: `ZCRADAR_THREADS` if set to a positive integer, otherwise
/// the available parallelism.
pub fn worker_threads() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n,
        _ => available,
    }
}

/// Ground-truth bins of one echo: delay and nearest signed Doppler bin.
pub fn truth_bins(echo: &Echo, n: usize, eta: usize) -> (usize, i64) {
    let d = (echo.normalized_doppler * (n * eta) as f64).round() as i64;
    (echo.delay_samples % n, d)
}

/// Whether `report` holds a detection for `echo` within one bin on both axes.
pub fn is_hit<T: crate::Real>(report: &DetectionReport<T>, echo: &Echo, n: usize, eta: usize) -> bool {
    let (l0, d0) = truth_bins(echo, n, eta);
    report.for_tx(echo.tx_index).any(|d| {
        cyclic_distance(d.detection.delay_bin, l0, n) <= 1
            && (signed_doppler_bin(d.detection.doppler_bin, eta) - d0).abs() <= 1
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub snr_db: f64,
    pub trial_index: usize,
    pub method: Method,
    /// `hits[q][i]`: target `q` detected in waveform `i`.
    pub hits: Vec<Vec<bool>>,
}

impl TrialResult {
    pub fn any(&self, target: usize) -> bool {
        self.hits[target].iter().any(|&h| h)
    }

    pub fn all(&self, target: usize) -> bool {
        self.hits[target].iter().all(|&h| h)
    }
}

/// Synthesizer and detector for one scene, reusable across trials and
/// threads.
#[derive(Debug, Clone)]
pub struct Experiment {
    scene: Scene,
    synth: Synthesizer<f64>,
    canceller: Canceller<f64>,
}

impl Experiment {
    pub fn new(scene: &Scene, config: DetectorConfig) -> Result<Self> {
        let synth = Synthesizer::new(scene)?;
        let canceller = Canceller::for_waveforms(scene, config)?;
        Ok(Self {
            scene: scene.clone(),
            synth,
            canceller,
        })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn canceller(&self) -> &Canceller<f64> {
        &self.canceller
    }

    pub fn received(&self, snr_db: f64, rng_seed: u64) -> Result<Vec<Complex<f64>>> {
        Ok(self.synth.realize(Noise::CompositeSnrDb(snr_db), rng_seed)?.samples)
    }

    pub fn score(&self, report: &DetectionReport<f64>) -> Vec<Vec<bool>> {
        let (n, eta) = (self.scene.n, self.scene.eta);
        let mut hits = vec![vec![false; self.scene.tx_count()]; self.scene.target_count];
        for e in &self.scene.echoes {
            if is_hit(report, e, n, eta) {
                hits[e.target_index][e.tx_index] = true;
            }
        }
        hits
    }

    pub fn trial(&self, snr_db: f64, method: Method, rng_seed: u64, trial_index: usize) -> Result<TrialResult> {
        let r = self.received(snr_db, rng_seed)?;
        let report = self.canceller.run(&r, method)?;
        Ok(TrialResult {
            snr_db,
            trial_index,
            method,
            hits: self.score(&report),
        })
    }
}

pub fn run_trial(scene: &Scene, snr_db: f64, method: Method, pfa: f64, rng_seed: u64) -> Result<TrialResult> {
    Experiment::new(scene, DetectorConfig::with_pfa(pfa))?.trial(snr_db, method, rng_seed, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub method: Method,
    pub base_seed: u64,
    pub detector: DetectorConfig,
    /// Worker threads; `None` uses [`worker_threads`].
    pub threads: Option<usize>,
}

impl SweepConfig {
    pub fn new(snr_db: Vec<f64>, trials: usize, method: Method, pfa: f64, base_seed: u64) -> Self {
        Self {
            snr_db,
            trials,
            method,
            base_seed,
            detector: DetectorConfig::with_pfa(pfa),
            threads: None,
        }
    }
}

/// Hit counts per SNR point. Rates are `count / trials` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRateTable {
    pub snr_grid: Vec<f64>,
    pub trials: usize,
    pub target_count: usize,
    pub tx_count: usize,
    /// `hits[s][q][i]`.
    pub hits: Vec<Vec<Vec<u64>>>,
    /// `any[s][q]`: detected in at least one waveform.
    pub any: Vec<Vec<u64>>,
    /// `all[s][q]`: detected in every waveform.
    pub all: Vec<Vec<u64>>,
}

impl DetectionRateTable {
    pub fn empty(target_count: usize, tx_count: usize, trials: usize) -> Self {
        Self {
            snr_grid: Vec::new(),
            trials,
            target_count,
            tx_count,
            hits: Vec::new(),
            any: Vec::new(),
            all: Vec::new(),
        }
    }

    pub fn push_point(&mut self, snr_db: f64, results: &[TrialResult]) {
        let (k, m) = (self.target_count, self.tx_count);
        let mut hits = vec![vec![0u64; m]; k];
        let mut any = vec![0u64; k];
        let mut all = vec![0u64; k];
        for r in results {
            debug_assert_eq!(r.hits.len(), k);
            for q in 0..k {
                for i in 0..m {
                    hits[q][i] += r.hits[q][i] as u64;
                }
                any[q] += r.any(q) as u64;
                all[q] += r.all(q) as u64;
            }
        }
        self.snr_grid.push(snr_db);
        self.hits.push(hits);
        self.any.push(any);
        self.all.push(all);
    }

    fn ratio(&self, count: u64) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            count as f64 / self.trials as f64
        }
    }

    pub fn rate(&self, snr_index: usize, target: usize, tx: usize) -> f64 {
        self.ratio(self.hits[snr_index][target][tx])
    }

    pub fn any_rate(&self, snr_index: usize, target: usize) -> f64 {
        self.ratio(self.any[snr_index][target])
    }

    pub fn all_rate(&self, snr_index: usize, target: usize) -> f64 {
        self.ratio(self.all[snr_index][target])
    }

    /// Any-waveform curve of one target across the SNR grid.
    pub fn any_curve(&self, target: usize) -> Vec<f64> {
        (0..self.snr_grid.len()).map(|s| self.any_rate(s, target)).collect()
    }

    pub fn all_curve(&self, target: usize) -> Vec<f64> {
        (0..self.snr_grid.len()).map(|s| self.all_rate(s, target)).collect()
    }

    pub fn rows(&self) -> Vec<RateRow> {
        let mut rows = Vec::new();
        for (s, &snr_db) in self.snr_grid.iter().enumerate() {
            for q in 0..self.target_count {
                for i in 0..self.tx_count {
                    rows.push(RateRow {
                        snr_db,
                        target: q,
                        tx: i.to_string(),
                        rate: self.rate(s, q, i),
                    });
                }
                rows.push(RateRow {
                    snr_db,
                    target: q,
                    tx: "any".into(),
                    rate: self.any_rate(s, q),
                });
                rows.push(RateRow {
                    snr_db,
                    target: q,
                    tx: "all".into(),
                    rate: self.all_rate(s, q),
                });
            }
        }
        rows
    }
}

/// One line of the rate CSV. `tx` is a transmitter index, `any` or `all`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub snr_db: f64,
    pub target: usize,
    pub tx: String,
    pub rate: f64,
}

pub fn sweep(scene: &Scene, config: &SweepConfig) -> Result<DetectionRateTable> {
    if config.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let exp = Experiment::new(scene, config.detector)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or_else(worker_threads))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let mut table = DetectionRateTable::empty(scene.target_count, scene.tx_count(), config.trials);
    for &snr_db in &config.snr_db {
        let results: Vec<TrialResult> = pool.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|t| exp.trial(snr_db, config.method, config.base_seed.wrapping_add(t as u64), t))
                .collect::<Result<Vec<_>>>()
        })?;
        table.push_point(snr_db, &results);
    }
    Ok(table)
}

/// Writes `snr_db,target,tx,rate` rows and, optionally, a rate-vs-SNR plot.
pub fn emit_results(table: &DetectionRateTable, out_csv: &Path, out_plot: Option<&Path>) -> Result<()> {
    // Header written by hand so an empty table still yields one.
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(out_csv)?;
    w.write_record(["snr_db", "target", "tx", "rate"])?;
    for row in table.rows() {
        w.serialize(&row)?;
    }
    w.flush()?;
    if let Some(path) = out_plot {
        crate::plot::rate_plot(table, path)?;
    }
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<RateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| Ok(row?)).collect()
}

/// Two transmitters (seeds 1 and 3) and two targets, the second 36 dB below
/// the first. `N = 2048`, `η = 8`. The weak target trails the strong one by
/// five or six delay bins and sits about four Doppler bins away, so it lies
/// in the region where a band-limited strong echo leaves the most residue.
pub fn near_far_scene() -> Scene {
    let (n, eta) = (2048, 8);
    let bin = 1.0 / (n * eta) as f64;
    let weak = 10f64.powf(-36.0 / 20.0);
    let echo = |tx, tgt, delay, bins: f64, mag: f64, phase: f64| Echo {
        tx_index: tx,
        target_index: tgt,
        delay_samples: delay,
        normalized_doppler: bins * bin,
        amplitude: Complex::from_polar(mag, phase),
    };
    Scene {
        n,
        eta,
        seeds: vec![1, 3],
        target_count: 2,
        echoes: vec![
            echo(0, 0, 300, 0.4, 1.0, 0.7),
            echo(1, 0, 1100, 0.3, 1.0, -2.1),
            echo(0, 1, 306, -3.5, weak, 1.9),
            echo(1, 1, 1105, -3.6, weak, -0.4),
        ],
        band_limit_fraction: None,
    }
}
