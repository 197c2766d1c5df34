//! Fast invariant checks runnable from the command line.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::canceller::{cancel_one, raw_detect, sc_dcft, Method};
use crate::dcft::{dcft, idcft, matched_peak_bin};
use crate::harness::{sweep, SweepConfig};
use crate::rdmap::{range_doppler_map, signed_doppler_bin};
use crate::scalar::{energy, turn};
use crate::scene::{superpose_echo, Echo, Noise, Scene, Synthesizer};
use crate::zcseq::{generate_zc, pccf_peak_bound, periodic_correlation};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> (bool, String);

const CHECKS: [(&str, Check); 9] = [
    ("zc autocorrelation is an impulse", pacf),
    ("zc cross-correlation meets the gcd bound", pccf),
    ("dcft collapses a matched sequence to one bin", matched_impulse),
    ("dcft round trip and energy preservation", round_trip),
    ("range-doppler fast path matches direct sum", rdmap_direct),
    ("cancellation removes a known echo", cancel_known),
    ("nulling never adds energy", energy_monotone),
    ("raw detections reappear in the first pass", raw_subset),
    ("sweeps are deterministic", sweep_determinism),
];

pub fn run_all() -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|&(name, f)| {
            let (passed, detail) = f();
            CheckOutcome { name, passed, detail }
        })
        .collect()
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex<f64>> {
    (0..len)
        .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn pacf() -> (bool, String) {
    let n = 64;
    let mut worst = 0.0f64;
    for u in (1..=n as u32 / 2 - 2).step_by(2) {
        let z = generate_zc::<f64>(u, n).unwrap();
        let c = periodic_correlation(z.samples(), z.samples()).unwrap();
        worst = worst.max((c.values()[0].norm() - n as f64).abs());
        for v in &c.values()[1..] {
            worst = worst.max(v.norm());
        }
    }
    (worst < 1e-9, format!("worst deviation {worst:.2e}"))
}

fn pccf() -> (bool, String) {
    let n = 64;
    let mut worst = 0.0f64;
    for a in (1..=n as u32 / 2 - 2).step_by(2) {
        for b in (1..=n as u32 / 2 - 2).step_by(2).filter(|&b| b != a) {
            let za = generate_zc::<f64>(a, n).unwrap();
            let zb = generate_zc::<f64>(b, n).unwrap();
            let peak = periodic_correlation(za.samples(), zb.samples()).unwrap().peak_magnitude();
            let bound = pccf_peak_bound(n, a, b).unwrap();
            worst = worst.max((peak - bound).abs());
        }
    }
    (worst < 1e-9, format!("worst deviation {worst:.2e}"))
}

fn matched_impulse() -> (bool, String) {
    let n = 256;
    let mut worst = 0.0f64;
    for (u, l) in [(1u32, 0i64), (3, 17), (63, 200), (125, 255)] {
        let z = generate_zc::<f64>(u, n).unwrap();
        let spec = dcft(&z.delayed(l), u).unwrap();
        let k0 = matched_peak_bin(u as i64, l, n);
        for (k, c) in spec.coefficients().iter().enumerate() {
            let want = if k == k0 { (n as f64).sqrt() } else { 0.0 };
            worst = worst.max((c.norm() - want).abs());
        }
    }
    (worst < 1e-9, format!("worst deviation {worst:.2e}"))
}

fn round_trip() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for n in [8usize, 64, 512] {
        for beta in [0u32, 1, crate::zcseq::max_seed(n) as u32] {
            let x = random_vec(&mut rng, n);
            let spec = dcft(&x, beta).unwrap();
            let y = idcft(&spec);
            let ex = energy(&x);
            let err: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(err / ex.sqrt());
            worst = worst.max((energy(spec.coefficients()) / ex - 1.0).abs());
        }
    }
    (worst < 1e-9, format!("worst relative error {worst:.2e}"))
}

fn rdmap_direct() -> (bool, String) {
    let (n, eta, u) = (32usize, 4usize, 5u32);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let r = random_vec(&mut rng, n * eta);
    let z = generate_zc::<f64>(u, n).unwrap();
    let map = range_doppler_map(&r, &z, eta).unwrap();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for l in 0..n {
        for j in 0..eta {
            let d = signed_doppler_bin(j, eta) as f64;
            let mut acc = Complex::<f64>::zero();
            for (k, v) in r.iter().enumerate() {
                let s = z.samples()[(k + n - l) % n];
                acc += v * s.conj() * turn::<f64>(-d * k as f64 / (n * eta) as f64);
            }
            worst = worst.max((acc - map.cell(l, j)).norm());
            scale = scale.max(acc.norm());
        }
    }
    (worst <= 1e-10 * scale, format!("max error {worst:.2e} of {scale:.2e}"))
}

fn cancel_known() -> (bool, String) {
    let (n, eta) = (256, 8);
    let xi = 1.3 / (n * eta) as f64;
    let z = generate_zc::<f64>(7, n).unwrap();
    let mut r = vec![Complex::zero(); n * eta];
    superpose_echo(&mut r, z.samples(), 91, xi, Complex::new(0.7, -0.2));
    let out = cancel_one(&r, eta, 7, 91, xi).unwrap();
    let ratio = energy(&out) / energy(&r);
    (ratio <= 1e-9, format!("residual fraction {ratio:.2e}"))
}

fn energy_monotone() -> (bool, String) {
    let (n, eta) = (128, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let r = random_vec(&mut rng, n * eta);
        let u = 2 * rng.random_range(0..(n as u32 / 4 - 1)) + 1;
        let l = rng.random_range(0..n);
        let xi = rng.random_range(-0.01..0.01);
        let out = cancel_one(&r, eta, u, l, xi).unwrap();
        worst = worst.max(energy(&out) / energy(&r) - 1.0);
    }
    (worst <= 1e-12, format!("largest relative gain {worst:.2e}"))
}

fn two_tx_scene() -> Scene {
    let (n, eta) = (256usize, 4usize);
    let bin = 1.0 / (n * eta) as f64;
    let echo = |tx, tgt, delay, bins: f64, mag: f64| Echo {
        tx_index: tx,
        target_index: tgt,
        delay_samples: delay,
        normalized_doppler: bins * bin,
        amplitude: Complex::new(mag, 0.0),
    };
    Scene {
        n,
        eta,
        seeds: vec![1, 3],
        target_count: 2,
        echoes: vec![
            echo(0, 0, 20, 0.2, 1.0),
            echo(1, 0, 60, 0.4, 1.0),
            echo(0, 1, 150, -1.3, 0.03),
            echo(1, 1, 200, -1.1, 0.03),
        ],
        band_limit_fraction: None,
    }
}

fn raw_subset() -> (bool, String) {
    let sc = two_tx_scene();
    let syn = Synthesizer::<f64>::new(&sc).unwrap();
    let mut ok = true;
    let mut records_ok = true;
    for seed in 0..5 {
        let r = syn.realize(Noise::CompositeSnrDb(15.0), seed).unwrap().samples;
        let raw = raw_detect(&r, &sc, 1e-4).unwrap();
        let rep = sc_dcft(&r, &sc, 1e-4, 8).unwrap();
        ok &= raw
            .for_tx(0)
            .all(|d| rep.detections.iter().any(|s| s.pass == 1 && s.detection == d.detection));
        records_ok &= rep.records.iter().all(|c| {
            c.nulled_bin == matched_peak_bin(sc.seeds[c.tx_index] as i64, c.delay_bin as i64, sc.n)
        });
        records_ok &= rep.residual_energy() <= energy(&r);
    }
    (ok && records_ok, format!("subset {ok}, records consistent {records_ok}"))
}

fn sweep_determinism() -> (bool, String) {
    let sc = two_tx_scene();
    let mut cfg = SweepConfig::new(vec![-5.0, 5.0], 8, Method::ScDcft, 1e-3, 17);
    cfg.threads = Some(1);
    let a = sweep(&sc, &cfg).unwrap();
    cfg.threads = Some(3);
    let b = sweep(&sc, &cfg).unwrap();
    (a == b, "single-thread and multi-thread tables compared".into())
}
