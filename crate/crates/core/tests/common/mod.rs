#![allow(dead_code)]

use std::path::Path;

use image::{Rgb, RgbImage};
use rand::Rng;

/// Writes a few smooth night-ish plates of different sizes into `dir`.
pub fn write_clean_plates(dir: &Path, count: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        let (w, h) = (160 + 16 * i as u32, 140);
        let img = RgbImage::from_fn(w, h, |x, y| {
            let t = (x as f64 / w as f64 + i as f64 * 0.1).fract();
            let v = 10.0 + 60.0 * t + 30.0 * ((y as f64) * 0.07).sin().abs();
            Rgb([(v * 0.8) as u8, (v * 0.9) as u8, v as u8])
        });
        img.save(dir.join(format!("plate_{i:02}.png"))).unwrap();
    }
}

/// Direct 11×11 double loop per window, 2-D Gaussian weights built from
/// scratch.
pub fn ssim_brute(a: &RgbImage, b: &RgbImage) -> f64 {
    let (w, h) = (a.width() as usize, a.height() as usize);
    let mut g = [[0.0f64; 11]; 11];
    let mut s = 0.0;
    for (i, row) in g.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            s += *v;
        }
    }
    g.iter_mut().flatten().for_each(|v| *v /= s);
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let mut total = 0.0;
    let mut count = 0usize;
    for ch in 0..3 {
        for y0 in 0..=h - 11 {
            for x0 in 0..=w - 11 {
                let (mut ma, mut mb) = (0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let (x, y) = ((x0 + j) as u32, (y0 + i) as u32);
                        ma += g[i][j] * a.get_pixel(x, y)[ch] as f64;
                        mb += g[i][j] * b.get_pixel(x, y)[ch] as f64;
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let (x, y) = ((x0 + j) as u32, (y0 + i) as u32);
                        let da = a.get_pixel(x, y)[ch] as f64 - ma;
                        let db = b.get_pixel(x, y)[ch] as f64 - mb;
                        va += g[i][j] * da * da;
                        vb += g[i][j] * db * db;
                        cov += g[i][j] * da * db;
                    }
                }
                total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
    }
    total / count as f64
}

/// Random plate and a noisy copy, both at least one SSIM window wide.
pub fn random_pair<R: Rng>(rng: &mut R) -> (RgbImage, RgbImage) {
    let (w, h) = (rng.random_range(11..30), rng.random_range(11..30));
    let noise = rng.random_range(0.0..80.0);
    let a = RgbImage::from_fn(w, h, |_, _| Rgb([(); 3].map(|_| rng.random::<u8>())));
    let b = RgbImage::from_fn(w, h, |x, y| {
        Rgb(a.get_pixel(x, y).0.map(|v| (v as f64 + rng.random_range(-noise..=noise)).clamp(0.0, 255.0) as u8))
    });
    (a, b)
}
