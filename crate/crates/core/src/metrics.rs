//! Paired full-reference metrics on 8-bit RGB images.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Mask;

/// Reported for bit-identical inputs instead of infinity.
pub const PSNR_CAP: f64 = 100.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const PEAK: f64 = 255.0;

fn check_dims(a: &RgbImage, b: &RgbImage, mask: Option<&Mask>) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::param(format!("image sizes differ: {:?} vs {:?}", a.dimensions(), b.dimensions())));
    }
    if let Some(m) = mask {
        if (m.width as u32, m.height as u32) != a.dimensions() {
            return Err(Error::param("mask size does not match images"));
        }
        if m.is_empty() {
            return Err(Error::param("empty mask"));
        }
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB over all channels of the (masked) pixels.
pub fn psnr(a: &RgbImage, b: &RgbImage, mask: Option<&Mask>) -> Result<f64> {
    check_dims(a, b, mask)?;
    let mut sse = 0.0;
    let mut n = 0usize;
    for (i, (pa, pb)) in a.pixels().zip(b.pixels()).enumerate() {
        if mask.is_some_and(|m| !m.data[i]) {
            continue;
        }
        for c in 0..3 {
            let d = pa[c] as f64 - pb[c] as f64;
            sse += d * d;
        }
        n += 3;
    }
    if sse == 0.0 {
        return Ok(PSNR_CAP);
    }
    let mse = sse / n as f64;
    Ok((10.0 * (PEAK * PEAK / mse).log10()).min(PSNR_CAP))
}

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut taps = [0.0; SSIM_WINDOW];
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - half;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

/// Separable filter, valid region only.
fn filter_valid(src: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let k = SSIM_WINDOW;
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..k).map(|i| taps[i] * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..k).map(|i| taps[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Per-window SSIM for one channel, indexed by window top-left.
fn ssim_map(a: &[f64], b: &[f64], w: usize, h: usize) -> Vec<f64> {
    let taps = gaussian_taps();
    let c1 = (K1 * PEAK).powi(2);
    let c2 = (K2 * PEAK).powi(2);
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(a, w, h, &taps);
    let mu_b = filter_valid(b, w, h, &taps);
    let e_aa = filter_valid(&aa, w, h, &taps);
    let e_bb = filter_valid(&bb, w, h, &taps);
    let e_ab = filter_valid(&ab, w, h, &taps);
    (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .collect()
}

/// Gaussian-window SSIM averaged over windows and channels.
///
/// With a mask, one window is taken per masked pixel, centered on it and
/// pushed inward where it would cross the border.
pub fn ssim(a: &RgbImage, b: &RgbImage, mask: Option<&Mask>) -> Result<f64> {
    check_dims(a, b, mask)?;
    let (w, h) = (a.width() as usize, a.height() as usize);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::param(format!("image {w}x{h} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")));
    }
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let half = SSIM_WINDOW / 2;
    let mut total = 0.0;
    for c in 0..3 {
        let ca: Vec<f64> = a.pixels().map(|p| p[c] as f64).collect();
        let cb: Vec<f64> = b.pixels().map(|p| p[c] as f64).collect();
        let map = ssim_map(&ca, &cb, w, h);
        total += match mask {
            None => map.iter().sum::<f64>() / map.len() as f64,
            Some(m) => {
                let mut s = 0.0;
                for y in 0..h {
                    for x in 0..w {
                        if m.get(x, y) {
                            let wx = x.saturating_sub(half).min(ow - 1);
                            let wy = y.saturating_sub(half).min(oh - 1);
                            s += map[wy * ow + wx];
                        }
                    }
                }
                s / m.count() as f64
            }
        };
    }
    Ok(total / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub psnr: f64,
    pub ssim: f64,
}

impl Score {
    pub fn compute(a: &RgbImage, b: &RgbImage, mask: Option<&Mask>) -> Result<Self> {
        Ok(Self {
            psnr: psnr(a, b, mask)?,
            ssim: ssim(a, b, mask)?,
        })
    }
}

/// Region score, or a marker when the region does not exist in the pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RegionScore {
    Scored { psnr: f64, ssim: f64 },
    NotApplicable,
}

impl RegionScore {
    pub fn score(&self) -> Option<Score> {
        match *self {
            RegionScore::Scored { psnr, ssim } => Some(Score { psnr, ssim }),
            RegionScore::NotApplicable => None,
        }
    }
}

/// Scores `restored` against `gt` inside the bounding boxes of the ghost
/// mask components, so scattering-flare residue elsewhere is ignored.
pub fn masked_reflective_eval(gt: &RgbImage, ghost_mask: &Mask, restored: &RgbImage) -> Result<RegionScore> {
    if ghost_mask.is_empty() {
        return Ok(RegionScore::NotApplicable);
    }
    let region = ghost_mask.box_hull();
    let s = Score::compute(gt, restored, Some(&region))?;
    Ok(RegionScore::Scored { psnr: s.psnr, ssim: s.ssim })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub id: String,
    pub full: Score,
    pub flare_region: RegionScore,
    pub ghost_region: RegionScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Stat {
    /// Population mean and standard deviation; `None` for no samples.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, std: var.sqrt(), count: values.len() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub psnr: Option<Stat>,
    pub ssim: Option<Stat>,
}

impl Aggregate {
    fn of(scores: impl Iterator<Item = Score> + Clone) -> Self {
        let p: Vec<f64> = scores.clone().map(|s| s.psnr).collect();
        let s: Vec<f64> = scores.map(|s| s.ssim).collect();
        Self { psnr: Stat::of(&p), ssim: Stat::of(&s) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pairs: Vec<PairReport>,
    pub full: Aggregate,
    pub flare_region: Aggregate,
    pub ghost_region: Aggregate,
}

impl EvalReport {
    pub fn from_pairs(pairs: Vec<PairReport>) -> Self {
        let full = Aggregate::of(pairs.iter().map(|p| p.full));
        let flare_region = Aggregate::of(pairs.iter().filter_map(|p| p.flare_region.score()));
        let ghost_region = Aggregate::of(pairs.iter().filter_map(|p| p.ghost_region.score()));
        Self { pairs, full, flare_region, ghost_region }
    }
}

/// Full-image, flare-region and ghost-region scores for one pair.
pub fn evaluate_pair(id: &str, gt: &RgbImage, flare_mask: &Mask, ghost_mask: &Mask, restored: &RgbImage) -> Result<PairReport> {
    let full = Score::compute(gt, restored, None)?;
    let flare_region = if flare_mask.is_empty() {
        RegionScore::NotApplicable
    } else {
        let s = Score::compute(gt, restored, Some(flare_mask))?;
        RegionScore::Scored { psnr: s.psnr, ssim: s.ssim }
    };
    Ok(PairReport {
        id: id.to_string(),
        full,
        flare_region,
        ghost_region: masked_reflective_eval(gt, ghost_mask, restored)?,
    })
}
