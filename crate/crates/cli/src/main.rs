use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex;

use zcradar::canceller::{Canceller, DetectorConfig, Method, DEFAULT_MAX_PASSES};
use zcradar::harness::{emit_results, sweep, SweepConfig};
use zcradar::rdmap::NoiseFloor;
use zcradar::scene::{load_scene, Noise, Scene, Synthesizer};
use zcradar::{dcft, idcft, plot, selftest, ChirpSpectrum, ZcSequence};

#[derive(Parser)]
#[command(name = "zcradar", version, about = "Zadoff-Chu distributed radar detection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a Zadoff-Chu sequence as `n,re,im` rows.
    GenZc {
        #[arg(long)]
        seed: u32,
        #[arg(long)]
        length: usize,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete chirp-Fourier transform of a CSV signal.
    Dcft {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        beta: u32,
        /// Treat the input as a spectrum and invert it.
        #[arg(long)]
        inverse: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Range-Doppler map of one transmitter's waveform at one receiver.
    Rdmap {
        #[command(flatten)]
        signal: SignalArgs,
        #[arg(long, default_value_t = 0)]
        tx: usize,
        #[arg(long, value_enum, default_value_t = FloorArg::Mean)]
        noise_floor: FloorArg,
        /// `.png` writes an image, anything else CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect targets in one synthesized receive block.
    Detect {
        #[command(flatten)]
        signal: SignalArgs,
        #[arg(long, default_value = "sc-dcft")]
        method: Method,
        #[arg(long, default_value_t = 1e-4)]
        pfa: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_PASSES)]
        max_passes: usize,
        /// DCFT bins nulled per cancellation (odd).
        #[arg(long, default_value_t = 1)]
        null_width: usize,
        #[arg(long, value_enum, default_value_t = FloorArg::Mean)]
        noise_floor: FloorArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo detection rates over a list of SNRs.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        rx: usize,
        #[arg(long, default_value = "sc-dcft")]
        method: Method,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        snr_db_list: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 1e-4)]
        pfa: f64,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long)]
        out_plot: Option<PathBuf>,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Args)]
struct SignalArgs {
    /// Scenario or echo-level scene JSON.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    rx: usize,
    /// Composite SNR; noiseless when omitted.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FloorArg {
    Mean,
    Median,
}

impl From<FloorArg> for NoiseFloor {
    fn from(f: FloorArg) -> Self {
        match f {
            FloorArg::Mean => NoiseFloor::MeanPower,
            FloorArg::Median => NoiseFloor::Median,
        }
    }
}

impl SignalArgs {
    fn realize(&self) -> Result<(Scene, Vec<Complex<f64>>)> {
        let scene = load_scene(&self.scenario, self.rx)
            .with_context(|| format!("loading {}", self.scenario.display()))?;
        let noise = self.snr_db.map_or(Noise::None, Noise::CompositeSnrDb);
        let r = Synthesizer::<f64>::new(&scene)?.realize(noise, self.seed)?.samples;
        Ok((scene, r))
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn csv_writer(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(sink(out)?))
}

/// Reads `index,re,im` rows (header required) into a vector ordered by row.
fn read_complex_csv(path: &Path) -> Result<Vec<Complex<f64>>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 3 {
            bail!("row {}: expected 3 columns, found {}", i + 1, rec.len());
        }
        let re: f64 = rec[1].trim().parse().with_context(|| format!("row {}: re", i + 1))?;
        let im: f64 = rec[2].trim().parse().with_context(|| format!("row {}: im", i + 1))?;
        out.push(Complex::new(re, im));
    }
    Ok(out)
}

fn write_complex_csv(out: Option<&Path>, index: &str, values: &[Complex<f64>]) -> Result<()> {
    let mut w = csv_writer(out)?;
    w.write_record([index, "re", "im"])?;
    for (k, v) in values.iter().enumerate() {
        w.write_record([k.to_string(), format!("{:.16e}", v.re), format!("{:.16e}", v.im)])?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::GenZc { seed, length, out } => {
            let z = ZcSequence::<f64>::new(seed, length)?;
            write_complex_csv(out.as_deref(), "n", z.samples())?;
        }
        Command::Dcft { input, beta, inverse, out } => {
            let x = read_complex_csv(&input)?;
            if inverse {
                let y = idcft(&ChirpSpectrum::new(x, beta)?);
                write_complex_csv(out.as_deref(), "n", &y)?;
            } else {
                let spec = dcft(&x, beta)?;
                write_complex_csv(out.as_deref(), "k", spec.coefficients())?;
            }
        }
        Command::Rdmap { signal, tx, noise_floor, out } => {
            let (scene, r) = signal.realize()?;
            let config = DetectorConfig {
                noise_floor: noise_floor.into(),
                ..DetectorConfig::default()
            };
            let map = Canceller::for_waveforms(&scene, config)?.range_doppler_map(&r, tx)?;
            let is_png = out
                .as_deref()
                .and_then(|p| p.extension())
                .is_some_and(|e| e.eq_ignore_ascii_case("png"));
            if is_png {
                plot::rdmap_png(&map, out.as_deref().unwrap())?;
            } else {
                let mut w = csv_writer(out.as_deref())?;
                w.write_record(["delay_bin", "doppler_bin", "magnitude"])?;
                for l in 0..map.n() {
                    for j in 0..map.eta() {
                        w.write_record([l.to_string(), j.to_string(), format!("{:.16e}", map.magnitude(l, j))])?;
                    }
                }
                w.flush()?;
            }
        }
        Command::Detect {
            signal,
            method,
            pfa,
            max_passes,
            null_width,
            noise_floor,
            out,
        } => {
            let (scene, r) = signal.realize()?;
            let config = DetectorConfig {
                pfa,
                max_passes,
                null_width,
                noise_floor: noise_floor.into(),
            };
            let report = Canceller::for_waveforms(&scene, config)?.run(&r, method)?;
            let mut w = csv_writer(out.as_deref())?;
            w.write_record(["pass", "tx", "delay_bin", "doppler_bin", "xi_hat", "alpha_re", "alpha_im", "magnitude"])?;
            for d in &report.detections {
                let (det, est) = (&d.detection, &d.estimate);
                w.write_record([
                    d.pass.to_string(),
                    det.tx_index.to_string(),
                    det.delay_bin.to_string(),
                    det.doppler_bin.to_string(),
                    format!("{:.16e}", est.xi_hat),
                    format!("{:.16e}", est.alpha_hat.re),
                    format!("{:.16e}", est.alpha_hat.im),
                    format!("{:.16e}", det.peak_magnitude),
                ])?;
            }
            w.flush()?;
        }
        Command::Sweep {
            scenario,
            rx,
            method,
            snr_db_list,
            trials,
            pfa,
            base_seed,
            out_csv,
            out_plot,
        } => {
            let scene = load_scene(&scenario, rx).with_context(|| format!("loading {}", scenario.display()))?;
            let table = sweep(&scene, &SweepConfig::new(snr_db_list, trials, method, pfa, base_seed))?;
            emit_results(&table, &out_csv, out_plot.as_deref())?;
        }
        Command::Selftest => {
            let outcomes = selftest::run_all();
            let mut all = true;
            for o in &outcomes {
                println!("{} {} ({})", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
                all &= o.passed;
            }
            return Ok(all);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
