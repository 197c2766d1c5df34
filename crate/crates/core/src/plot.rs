//! Minimal raster plots written as PNG.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::Result;
use crate::harness::DetectionRateTable;
use crate::rdmap::{signed_doppler_bin, RangeDopplerMap};
use crate::scalar::Real;

const PALETTE: [[u8; 3]; 6] = [
    [31, 119, 180],
    [214, 39, 40],
    [44, 160, 44],
    [255, 127, 14],
    [148, 103, 189],
    [23, 190, 207],
];

fn line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), color: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn dot(img: &mut RgbImage, (x, y): (i64, i64), color: Rgb<u8>) {
    for dx in -2..=2 {
        for dy in -2..=2 {
            line(img, (x + dx, y + dy), (x + dx, y + dy), color);
        }
    }
}

/// Rate-vs-SNR chart. Each target gets one colour: a solid line with dots
/// for the any-waveform curve and a thin pale line for the all-waveforms
/// curve. Horizontal grid lines sit at rates 0, 0.25, 0.5, 0.75 and 1.
pub fn rate_plot(table: &DetectionRateTable, path: &Path) -> Result<()> {
    let (w, h, margin) = (640i64, 400i64, 40i64);
    let mut img = RgbImage::from_pixel(w as u32, h as u32, Rgb([255, 255, 255]));
    let grey = Rgb([200, 200, 200]);
    for k in 0..=4 {
        let y = h - margin - k * (h - 2 * margin) / 4;
        line(&mut img, (margin, y), (w - margin, y), grey);
    }
    line(&mut img, (margin, margin), (margin, h - margin), Rgb([0, 0, 0]));

    let snr = &table.snr_grid;
    let (lo, hi) = snr
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let px = |s: f64, r: f64| {
        let x = margin as f64 + (s - lo) / span * (w - 2 * margin) as f64;
        let y = (h - margin) as f64 - r * (h - 2 * margin) as f64;
        (x.round() as i64, y.round() as i64)
    };
    for q in 0..table.target_count {
        let c = PALETTE[q % PALETTE.len()];
        let solid = Rgb(c);
        let pale = Rgb(c.map(|v| v / 2 + 128));
        for (curve, color) in [(table.all_curve(q), pale), (table.any_curve(q), solid)] {
            let pts: Vec<_> = snr.iter().zip(&curve).map(|(&s, &r)| px(s, r)).collect();
            for pair in pts.windows(2) {
                line(&mut img, pair[0], pair[1], color);
            }
            if color == solid {
                pts.iter().for_each(|&p| dot(&mut img, p, color));
            }
        }
    }
    img.save(path)?;
    Ok(())
}

/// Range-Doppler magnitude in dB relative to the peak, 60 dB span. Columns
/// are delay bins, rows are signed Doppler bins with positive Doppler at the
/// top. Each Doppler row is stretched to keep the image legible.
pub fn rdmap_png<T: Real>(map: &RangeDopplerMap<T>, path: &Path) -> Result<()> {
    let (n, eta) = (map.n(), map.eta());
    let row_h = (256 / eta).max(1) as u32;
    let peak = map.max_magnitude().to_f64_lossy().max(f64::MIN_POSITIVE);
    let mut img = RgbImage::new(n as u32, eta as u32 * row_h);
    // Rows ordered from the highest signed bin down.
    let mut order: Vec<usize> = (0..eta).collect();
    order.sort_by_key(|&j| std::cmp::Reverse(signed_doppler_bin(j, eta)));
    for (row, &j) in order.iter().enumerate() {
        for l in 0..n {
            let db = 20.0 * (map.magnitude(l, j).to_f64_lossy() / peak).max(1e-12).log10();
            let v = ((db + 60.0) / 60.0).clamp(0.0, 1.0);
            let px = Rgb([(255.0 * v) as u8, (255.0 * v * v) as u8, (255.0 * (1.0 - v) * v * 2.0).min(255.0) as u8]);
            for y in 0..row_h {
                img.put_pixel(l as u32, row as u32 * row_h + y, px);
            }
        }
    }
    img.save(path)?;
    Ok(())
}
