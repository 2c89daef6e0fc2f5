//! Linear-light compositing of flare layers onto clean plates.
//!
//! Flare is additive stray light: the clean plate is decoded with a pure
//! 2.2 power law, layers are summed in linear light, the result is clipped
//! to `[0, 1]` and re-encoded to 8 bits.

use image::RgbImage;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{encode, LinearRgb, Mask};
use crate::rng::{self, Stream};

/// Default mask threshold on linear radiance.
pub const MASK_THRESHOLD: f64 = 1.0 / 255.0;

/// Signal-dependent Gaussian approximation of Poisson-Gaussian sensor noise.
/// The same realization is added to input and ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub seed: u64,
    /// Shot-noise variance per unit linear signal.
    pub shot: f64,
    /// Read-noise standard deviation, linear units.
    pub read: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposeOptions {
    pub light_source_in_gt: bool,
    pub mask_threshold: f64,
    pub noise: Option<NoiseSpec>,
}

impl Default for ComposeOptions {
    fn default() -> Self {
        Self {
            light_source_in_gt: true,
            mask_threshold: MASK_THRESHOLD,
            noise: None,
        }
    }
}

/// Flare and source contributions for one pair, all in linear radiance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Layers<'a> {
    pub scatter: &'a [LinearRgb],
    pub ghosts: &'a [LinearRgb],
    /// Flare-free light-source cores.
    pub cores: &'a [LinearRgb],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairMasks {
    /// Everything that differs between input and ground truth.
    pub flare: Mask,
    pub light: Mask,
    pub ghost: Mask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPair {
    pub input: RgbImage,
    pub gt: RgbImage,
    pub masks: PairMasks,
    /// Clipped linear input before quantization.
    pub input_linear: LinearRgb,
    pub gt_linear: LinearRgb,
}

fn sum_layers(width: usize, height: usize, layers: &[LinearRgb]) -> LinearRgb {
    let mut acc = LinearRgb::zeros(width, height);
    for l in layers {
        acc.add_assign(l);
    }
    acc
}

fn clip(img: &mut LinearRgb) {
    for p in img.data.iter_mut() {
        for v in p.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
    }
}

fn max3(p: [f64; 3]) -> f64 {
    p[0].max(p[1]).max(p[2])
}

fn codes(p: [f64; 3]) -> [u8; 3] {
    p.map(encode)
}

/// Builds one training pair from a clean 8-bit plate.
pub fn compose(clean: &RgbImage, layers: Layers<'_>, opts: &ComposeOptions) -> Result<DataPair> {
    let base = LinearRgb::from_srgb8(clean);
    let (w, h) = (base.width, base.height);
    let all = layers.scatter.iter().chain(layers.ghosts).chain(layers.cores);
    if let Some(bad) = all.into_iter().find(|l| !l.same_size(&base)) {
        return Err(Error::param(format!(
            "layer is {}x{}, plate is {w}x{h}",
            bad.width, bad.height
        )));
    }
    let scatter = sum_layers(w, h, layers.scatter);
    let ghosts = sum_layers(w, h, layers.ghosts);
    let cores = sum_layers(w, h, layers.cores);

    let mut gt_linear = base.clone();
    if opts.light_source_in_gt && !layers.cores.is_empty() {
        gt_linear.add_assign(&cores);
    }
    // degradation = input − gt before clipping
    let mut degradation = scatter.clone();
    degradation.add_assign(&ghosts);
    if !opts.light_source_in_gt {
        degradation.add_assign(&cores);
    }
    let mut input_linear = gt_linear.clone();
    if !layers.scatter.is_empty() || !layers.ghosts.is_empty() || !opts.light_source_in_gt {
        input_linear.add_assign(&degradation);
    }

    if let Some(noise) = opts.noise {
        let mut rng = rng::stream(noise.seed, Stream::Noise);
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        for (g, i) in gt_linear.data.iter_mut().zip(input_linear.data.iter_mut()) {
            for c in 0..3 {
                let sigma = (noise.shot * g[c].clamp(0.0, 1.0) + noise.read * noise.read).sqrt();
                let n = sigma * unit.sample(&mut rng);
                g[c] += n;
                i[c] += n;
            }
        }
    }
    clip(&mut gt_linear);
    clip(&mut input_linear);

    let input = input_linear.to_srgb8();
    let gt = gt_linear.to_srgb8();
    let tau = opts.mask_threshold;

    let mut flare = Mask::empty(w, h);
    let mut ghost = Mask::empty(w, h);
    let mut light = Mask::empty(w, h);
    for i in 0..w * h {
        let gt_codes = gt.as_raw()[3 * i..3 * i + 3].to_vec();
        let in_codes = &input.as_raw()[3 * i..3 * i + 3];
        flare.data[i] = max3(degradation.data[i]) > tau || in_codes != &gt_codes[..];
        let g = ghosts.data[i];
        if max3(g) > 0.0 {
            let with_ghost = [
                gt_linear.data[i][0] + g[0],
                gt_linear.data[i][1] + g[1],
                gt_linear.data[i][2] + g[2],
            ];
            ghost.data[i] = max3(g) > tau || codes(with_ghost)[..] != gt_codes[..];
        }
        let k = cores.data[i];
        if max3(k) > 0.0 {
            let b = base.data[i];
            light.data[i] = max3(k) > tau || codes([b[0] + k[0], b[1] + k[1], b[2] + k[2]]) != codes(b);
        }
    }

    Ok(DataPair {
        input,
        gt,
        masks: PairMasks { flare, light, ghost },
        input_linear,
        gt_linear,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::decode;
    use image::Rgb;

    fn plate(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| Rgb([(x * 7 % 256) as u8, (y * 13 % 256) as u8, ((x + y) * 3 % 200) as u8]))
    }

    #[test]
    fn no_layers_is_identity() {
        let clean = plate(32, 24);
        let pair = compose(&clean, Layers::default(), &ComposeOptions::default()).unwrap();
        assert_eq!(pair.input, clean);
        assert_eq!(pair.gt, clean);
        assert!(pair.masks.flare.is_empty() && pair.masks.ghost.is_empty() && pair.masks.light.is_empty());
    }

    #[test]
    fn single_scatter_layer_is_additive() {
        let clean = plate(16, 16);
        let mut layer = LinearRgb::zeros(16, 16);
        for (i, p) in layer.data.iter_mut().enumerate() {
            *p = [0.001 * (i % 7) as f64, 0.002, 0.0];
        }
        let opts = ComposeOptions {
            light_source_in_gt: false,
            ..Default::default()
        };
        let pair = compose(&clean, Layers { scatter: std::slice::from_ref(&layer), ..Default::default() }, &opts).unwrap();
        assert_eq!(pair.gt, clean);
        for (i, px) in clean.pixels().enumerate() {
            for c in 0..3 {
                let expect = decode(px[c]) + layer.data[i][c];
                if expect < 1.0 {
                    assert!((pair.input_linear.data[i][c] - expect).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn saturated_core_clips_and_is_masked() {
        let clean = RgbImage::from_pixel(8, 8, Rgb([40, 40, 40]));
        let mut layer = LinearRgb::zeros(8, 8);
        layer.data[3 * 8 + 3] = [10.0, 10.0, 10.0];
        let pair = compose(&clean, Layers { scatter: std::slice::from_ref(&layer), ..Default::default() }, &ComposeOptions::default()).unwrap();
        assert_eq!(pair.input.get_pixel(3, 3).0, [255, 255, 255]);
        assert_eq!(pair.input_linear.get(3, 3), [1.0; 3]);
        assert!(pair.masks.flare.get(3, 3));
        assert_eq!(pair.masks.flare.count(), 1);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let clean = plate(8, 8);
        let layer = LinearRgb::zeros(9, 8);
        let r = compose(&clean, Layers { ghosts: std::slice::from_ref(&layer), ..Default::default() }, &ComposeOptions::default());
        assert!(matches!(r, Err(Error::Parameter(_))));
    }

    #[test]
    fn light_core_kept_or_removed_from_gt() {
        let clean = RgbImage::from_pixel(8, 8, Rgb([10, 10, 10]));
        let mut core = LinearRgb::zeros(8, 8);
        core.data[9] = [5.0, 4.0, 3.0];
        let layers = Layers { cores: std::slice::from_ref(&core), ..Default::default() };
        let with = compose(&clean, layers, &ComposeOptions::default()).unwrap();
        assert_eq!(with.gt.get_pixel(1, 1).0, [255, 255, 255]);
        assert!(with.masks.light.get(1, 1));
        assert!(with.masks.flare.is_empty());
        let without = compose(&clean, layers, &ComposeOptions { light_source_in_gt: false, ..Default::default() }).unwrap();
        assert_eq!(without.gt, clean);
        assert_eq!(without.input.get_pixel(1, 1).0, [255, 255, 255]);
        assert!(without.masks.flare.get(1, 1));
    }

    #[test]
    fn noise_is_shared_between_input_and_gt() {
        let clean = RgbImage::from_pixel(16, 16, Rgb([120, 120, 120]));
        let opts = ComposeOptions {
            noise: Some(NoiseSpec { seed: 3, shot: 1e-3, read: 0.01 }),
            ..Default::default()
        };
        let pair = compose(&clean, Layers::default(), &opts).unwrap();
        assert_ne!(pair.gt, clean);
        assert_eq!(pair.input, pair.gt);
    }
}
