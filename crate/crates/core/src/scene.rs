//! Multi-light-source scenes and per-source scattering-flare layers.
//!
//! Image geometry: pixel `(x, y)` has its center at continuous coordinate
//! `(x, y)`, and normalized position `(u, v)` maps to `(u·W, v·H)`. The
//! kernel's DC sample `(N/2, N/2)` sits on pixel `(W/2, H/2)`, and one
//! kernel sample of the reference band spans one pixel.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffraction::{tilt_shift_with, FlareKernel, ShiftMode, TiltSpec};
use crate::error::{Error, Result};
use crate::fft;
use crate::pupil::Range;
use crate::raster::{LinearRgb, Plane};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceShape {
    Point,
    Disk,
    /// Elongated emitter; `angle` in radians from +x.
    Streak { angle: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightSource {
    /// Normalized image coordinates in `[0, 1]²`, `v` pointing down.
    pub position: [f64; 2],
    /// Linear radiance scale.
    pub intensity: f64,
    /// RGB chromaticity, components sum to 1.
    pub color: [f64; 3],
    /// Angular size as a fraction of image width.
    pub radius: f64,
    pub shape: SourceShape,
}

impl LightSource {
    pub fn point(position: [f64; 2], intensity: f64) -> Self {
        Self {
            position,
            intensity,
            color: [1.0 / 3.0; 3],
            radius: 0.0,
            shape: SourceShape::Point,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [u, v] = self.position;
        if !((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v)) {
            return Err(Error::param(format!("source position {:?} outside unit square", self.position)));
        }
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return Err(Error::param("source intensity must be > 0"));
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(Error::param("source radius must be >= 0"));
        }
        let sum: f64 = self.color.iter().sum();
        if self.color.iter().any(|c| *c < 0.0) || (sum - 1.0).abs() > 1e-6 {
            return Err(Error::param("source color must be a chromaticity summing to 1"));
        }
        Ok(())
    }

    /// Per-channel gain: intensity times chromaticity, normalized so that a
    /// neutral source has unit gain in every channel.
    pub fn channel_gain(&self) -> [f64; 3] {
        self.color.map(|c| 3.0 * c * self.intensity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub sources: Vec<LightSource>,
    pub seed: u64,
    /// Full horizontal field of view, radians.
    pub fov: f64,
}

/// Sampling distribution for [`sample_scene`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    /// Inclusive source-count range.
    pub count: (usize, usize),
    pub max_sources: usize,
    pub position_u: Range,
    pub position_v: Range,
    /// Sampled log-uniformly.
    pub intensity: Range,
    pub radius: Range,
    pub palette: Vec<[f64; 3]>,
    pub shapes: Vec<ShapeKind>,
    pub fov: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Point,
    Disk,
    Streak,
}

/// Night-time LED palette: mostly warm and cool whites, a few saturated
/// signal colors.
pub fn led_palette() -> Vec<[f64; 3]> {
    let raw: [[f64; 3]; 9] = [
        [0.42, 0.34, 0.24], // warm white
        [0.45, 0.34, 0.21], // 2700K
        [0.55, 0.33, 0.12], // sodium vapor
        [0.36, 0.33, 0.31], // neutral white
        [0.30, 0.33, 0.37], // cool white
        [0.27, 0.32, 0.41], // 6500K LED
        [0.24, 0.30, 0.46], // blue-ish LED
        [0.62, 0.24, 0.14], // red signal
        [0.18, 0.52, 0.30], // green signal
    ];
    raw.iter()
        .map(|c| {
            let s: f64 = c.iter().sum();
            c.map(|v| v / s)
        })
        .collect()
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            count: (1, 8),
            max_sources: 8,
            position_u: Range::new(0.05, 0.95),
            position_v: Range::new(0.05, 0.95),
            intensity: Range::new(2.0, 40.0),
            radius: Range::new(0.002, 0.012),
            palette: led_palette(),
            shapes: vec![ShapeKind::Point, ShapeKind::Disk, ShapeKind::Disk, ShapeKind::Streak],
            fov: 60f64.to_radians(),
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.count;
        if lo == 0 || lo > hi || hi > self.max_sources {
            return Err(Error::param(format!(
                "source count range {lo}..={hi} must be non-empty within 1..={}",
                self.max_sources
            )));
        }
        let unit = |r: &Range| r.is_valid() && r.lo >= 0.0 && r.hi <= 1.0;
        if !unit(&self.position_u) || !unit(&self.position_v) {
            return Err(Error::param("position ranges must lie in [0, 1]"));
        }
        if !self.intensity.is_valid() || self.intensity.lo <= 0.0 {
            return Err(Error::param("intensity range must be positive"));
        }
        if !self.radius.is_valid() || self.radius.lo < 0.0 {
            return Err(Error::param("radius range must be non-negative"));
        }
        if self.palette.is_empty() || self.shapes.is_empty() {
            return Err(Error::param("palette and shape list must be non-empty"));
        }
        if !(self.fov > 0.0 && self.fov < std::f64::consts::PI) {
            return Err(Error::param("fov must lie in (0, π)"));
        }
        Ok(())
    }
}

pub fn sample_scene(seed: u64, config: &SceneConfig) -> Result<SceneSpec> {
    config.validate()?;
    let mut rng = rng::stream(seed, Stream::Scene);
    let k = rng.random_range(config.count.0..=config.count.1);
    let log_range = Range::new(config.intensity.lo.ln(), config.intensity.hi.ln());
    let sources = (0..k)
        .map(|_| {
            let position = [config.position_u.sample(&mut rng), config.position_v.sample(&mut rng)];
            let intensity = log_range.sample(&mut rng).exp();
            let color = config.palette[rng.random_range(0..config.palette.len())];
            let radius = config.radius.sample(&mut rng);
            let shape = match config.shapes[rng.random_range(0..config.shapes.len())] {
                ShapeKind::Point => SourceShape::Point,
                ShapeKind::Disk => SourceShape::Disk,
                ShapeKind::Streak => SourceShape::Streak {
                    angle: rng.random_range(0.0..std::f64::consts::PI),
                },
            };
            LightSource {
                position,
                intensity,
                color,
                radius,
                shape,
            }
        })
        .collect();
    Ok(SceneSpec {
        sources,
        seed,
        fov: config.fov,
    })
}

/// Incidence angle of a source under a rectilinear projection with full
/// field of view `fov`: `θ = atan((coord − ½) · 2 · tan(fov/2))` per axis.
pub fn position_to_tilt(source: &LightSource, fov: f64) -> TiltSpec {
    assert!(fov > 0.0 && fov < std::f64::consts::PI, "fov must lie in (0, π)");
    let k = 2.0 * (fov / 2.0).tan();
    let [u, v] = source.position;
    TiltSpec::new(((u - 0.5) * k).atan(), ((v - 0.5) * k).atan())
}

/// Field of view spanned by `width` pixels when one pixel equals one sample
/// of kernel band `band`.
pub fn kernel_fov(kernel: &FlareKernel, band: usize, width: usize) -> f64 {
    2.0 * (width as f64 * kernel.sample_pitch_mm(band) / (2.0 * kernel.focal_length_mm())).atan()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementOptions {
    pub width: usize,
    pub height: usize,
    pub mode: ShiftMode,
    /// Kernel band whose sample pitch equals one pixel.
    pub reference_band: usize,
    /// Widen each layer by the source's disk (extended sources).
    pub extended_sources: bool,
}

impl PlacementOptions {
    pub fn for_kernel(kernel: &FlareKernel) -> Self {
        Self {
            width: kernel.n(),
            height: kernel.n(),
            mode: ShiftMode::Wrap,
            reference_band: kernel.wavelengths_nm().len() / 2,
            extended_sources: true,
        }
    }
}

/// One source's scattering flare on the image grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FlareLayer {
    pub source_index: usize,
    pub tilt: TiltSpec,
    /// Pixel coordinates where the kernel's DC lands.
    pub center_px: [f64; 2],
    /// Unit-gain, un-widened intensity of the reference band.
    pub shape: Plane,
    pub radiance: LinearRgb,
}

/// Pixel position the flare of `source` lands on.
pub fn flare_center(kernel: &FlareKernel, tilt: TiltSpec, opts: &PlacementOptions) -> [f64; 2] {
    let (dx, dy) = kernel.sample_shift(tilt, opts.reference_band);
    [(opts.width / 2) as f64 + dx, (opts.height / 2) as f64 + dy]
}

/// Crops (or zero-pads) a kernel plane onto the image grid, rescaling band
/// `band` to the reference pitch about the kernel center.
fn to_image_plane(kernel: &FlareKernel, plane: &[f64], band: usize, opts: &PlacementOptions) -> Plane {
    let n = kernel.n();
    let c = (n / 2) as f64;
    let (w, h) = (opts.width, opts.height);
    let ratio = kernel.sample_pitch_mm(opts.reference_band) / kernel.sample_pitch_mm(band);
    let mut out = Plane::zeros(w, h);
    if ratio == 1.0 {
        for y in 0..h {
            let ky = y as i64 - (h / 2) as i64 + (n / 2) as i64;
            if ky < 0 || ky >= n as i64 {
                continue;
            }
            for x in 0..w {
                let kx = x as i64 - (w / 2) as i64 + (n / 2) as i64;
                if kx >= 0 && kx < n as i64 {
                    out.data[y * w + x] = plane[ky as usize * n + kx as usize];
                }
            }
        }
        return out;
    }
    // Scaling about the optical axis keeps the landing point achromatic while
    // the pattern itself grows with wavelength.
    let energy_scale = ratio * ratio;
    for y in 0..h {
        for x in 0..w {
            let kx = c + (x as f64 - (w / 2) as f64) * ratio;
            let ky = c + (y as f64 - (h / 2) as f64) * ratio;
            let (x0, y0) = (kx.floor(), ky.floor());
            let (fx, fy) = (kx - x0, ky - y0);
            let sample = |xi: f64, yi: f64| -> f64 {
                if xi < 0.0 || yi < 0.0 || xi >= n as f64 || yi >= n as f64 {
                    0.0
                } else {
                    plane[yi as usize * n + xi as usize]
                }
            };
            let v = sample(x0, y0) * (1.0 - fx) * (1.0 - fy)
                + sample(x0 + 1.0, y0) * fx * (1.0 - fy)
                + sample(x0, y0 + 1.0) * (1.0 - fx) * fy
                + sample(x0 + 1.0, y0 + 1.0) * fx * fy;
            out.data[y * w + x] = v * energy_scale;
        }
    }
    out
}

/// Normalized disk of `radius_px` with one-pixel anti-aliased edge, laid
/// out for circular convolution (center at index 0).
fn disk_psf(w: usize, h: usize, radius_px: f64) -> Vec<Complex64> {
    let mut k = vec![Complex64::default(); w * h];
    let reach = radius_px.ceil() as i64 + 1;
    let mut total = 0.0;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let d = ((dx * dx + dy * dy) as f64).sqrt();
            let cov = (radius_px - d + 0.5).clamp(0.0, 1.0);
            if cov > 0.0 {
                let idx = dy.rem_euclid(h as i64) as usize * w + dx.rem_euclid(w as i64) as usize;
                k[idx].re += cov;
                total += cov;
            }
        }
    }
    k.iter_mut().for_each(|v| *v /= total);
    k
}

fn convolve_circular(plane: &Plane, psf_spectrum: &[Complex64]) -> Plane {
    let (w, h) = (plane.width, plane.height);
    let mut buf: Vec<Complex64> = plane.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward(&mut buf, h, w);
    for (a, b) in buf.iter_mut().zip(psf_spectrum) {
        *a *= b;
    }
    fft::inverse(&mut buf, h, w);
    Plane {
        width: w,
        height: h,
        data: buf.iter().map(|v| v.re.max(0.0)).collect(),
    }
}

/// One translated copy of `kernel` per source, scaled by the source's
/// intensity and tinted by its chromaticity.
pub fn instantiate_flares(scene: &SceneSpec, kernel: &FlareKernel, opts: &PlacementOptions) -> Result<Vec<FlareLayer>> {
    let kernels = vec![kernel; scene.sources.len()];
    instantiate_with_kernels(scene, &kernels, opts)
}

/// Like [`instantiate_flares`] but with one kernel per source, for
/// datasets that do not share a pupil across the frame.
pub fn instantiate_with_kernels(scene: &SceneSpec, kernels: &[&FlareKernel], opts: &PlacementOptions) -> Result<Vec<FlareLayer>> {
    if kernels.len() != scene.sources.len() {
        return Err(Error::param("need exactly one kernel per source"));
    }
    for s in &scene.sources {
        s.validate()?;
    }
    if !(scene.fov > 0.0 && scene.fov < std::f64::consts::PI) {
        return Err(Error::param("scene fov must lie in (0, π)"));
    }
    scene
        .sources
        .par_iter()
        .zip(kernels.par_iter())
        .enumerate()
        .map(|(index, (source, kernel))| {
            let bands = kernel.wavelengths_nm().len();
            if opts.reference_band >= bands {
                return Err(Error::param("reference band out of range"));
            }
            let tilt = position_to_tilt(source, scene.fov);
            let moved = tilt_shift_with(kernel, tilt, opts.mode);
            let planes: Vec<Plane> = (0..bands)
                .map(|b| to_image_plane(kernel, moved.intensity(b), b, opts))
                .collect();
            let shape = planes[opts.reference_band].clone();
            // map bands onto RGB: three bands map directly, otherwise every
            // channel receives the band average
            let mut rgb: Vec<Plane> = if bands == 3 {
                planes
            } else {
                let mut mean = Plane::zeros(opts.width, opts.height);
                for p in &planes {
                    for (m, v) in mean.data.iter_mut().zip(&p.data) {
                        *m += v / bands as f64;
                    }
                }
                vec![mean.clone(), mean.clone(), mean]
            };
            let radius_px = source.radius * opts.width as f64;
            if opts.extended_sources && radius_px >= 0.5 {
                let mut psf = disk_psf(opts.width, opts.height, radius_px);
                fft::forward(&mut psf, opts.height, opts.width);
                rgb = rgb.iter().map(|p| convolve_circular(p, &psf)).collect();
            }
            let gain = source.channel_gain();
            for (c, plane) in rgb.iter_mut().enumerate() {
                plane.data.iter_mut().for_each(|v| *v *= gain[c]);
            }
            Ok(FlareLayer {
                source_index: index,
                tilt,
                center_px: flare_center(kernel, tilt, opts),
                shape,
                radiance: LinearRgb::from_channels(&rgb[0], &rgb[1], &rgb[2]),
            })
        })
        .collect()
}

/// Peak of the normalized circular cross-correlation over whole-pixel lags,
/// `max_k Σ a(x) b(x − k) / (‖a‖ ‖b‖)`. Equals 1 when `b` is a translated,
/// rescaled copy of `a`.
pub fn correlation_peak(a: &Plane, b: &Plane) -> f64 {
    assert_eq!((a.width, a.height), (b.width, b.height));
    let (w, h) = (a.width, a.height);
    let norm = |p: &Plane| p.data.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let mut fa: Vec<Complex64> = a.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward(&mut fa, h, w);
    fft::forward(&mut fb, h, w);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = x.conj() * y;
    }
    fft::inverse(&mut fa, h, w);
    fa.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max) / (na * nb)
}

/// Light-source cores as seen by the sensor without any flare: the source
/// disk (or streak capsule) at its landing position, at full radiance.
pub fn rasterize_core(source: &LightSource, center_px: [f64; 2], width: usize, height: usize) -> LinearRgb {
    let mut out = LinearRgb::zeros(width, height);
    let r = (source.radius * width as f64).max(0.75);
    let (ax, ay, bx, by) = match source.shape {
        SourceShape::Streak { angle } => {
            let half = 2.0 * r;
            let (dx, dy) = (half * angle.cos(), half * angle.sin());
            (center_px[0] - dx, center_px[1] - dy, center_px[0] + dx, center_px[1] + dy)
        }
        _ => (center_px[0], center_px[1], center_px[0], center_px[1]),
    };
    let gain = source.channel_gain();
    let reach = 3.0 * r + 2.0;
    let x_lo = (ax.min(bx) - reach).floor().max(0.0) as usize;
    let y_lo = (ay.min(by) - reach).floor().max(0.0) as usize;
    let x_hi = ((ax.max(bx) + reach).ceil().max(0.0) as usize).min(width);
    let y_hi = ((ay.max(by) + reach).ceil().max(0.0) as usize).min(height);
    let (sx, sy) = (bx - ax, by - ay);
    let len2 = sx * sx + sy * sy;
    for y in y_lo..y_hi {
        for x in x_lo..x_hi {
            let (px, py) = (x as f64, y as f64);
            let t = if len2 > 0.0 {
                (((px - ax) * sx + (py - ay) * sy) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let d = ((px - ax - t * sx).powi(2) + (py - ay - t * sy).powi(2)).sqrt();
            let cov = (r - d + 0.5).clamp(0.0, 1.0);
            if cov > 0.0 {
                let p = &mut out.data[y * width + x];
                for c in 0..3 {
                    p[c] = gain[c] * cov;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_config_gives_centered_source() {
        let cfg = SceneConfig {
            count: (1, 1),
            position_u: Range::point(0.5),
            position_v: Range::point(0.5),
            ..Default::default()
        };
        let s = sample_scene(3, &cfg).unwrap();
        assert_eq!(s.sources.len(), 1);
        assert_eq!(s.sources[0].position, [0.5, 0.5]);
        s.sources[0].validate().unwrap();
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = SceneConfig::default();
        assert_eq!(sample_scene(77, &cfg).unwrap(), sample_scene(77, &cfg).unwrap());
        assert_ne!(sample_scene(77, &cfg).unwrap(), sample_scene(78, &cfg).unwrap());
    }

    #[test]
    fn rejects_empty_count_range() {
        let cfg = SceneConfig {
            count: (3, 2),
            ..Default::default()
        };
        assert!(sample_scene(0, &cfg).is_err());
        let cfg = SceneConfig {
            count: (1, 9),
            ..Default::default()
        };
        assert!(sample_scene(0, &cfg).is_err());
    }

    #[test]
    fn tilt_of_known_positions() {
        let at = |u: f64| LightSource::point([u, 0.5], 1.0);
        let t = position_to_tilt(&at(0.5), 1.0);
        assert_eq!((t.theta_x, t.theta_y), (0.0, 0.0));
        let t = position_to_tilt(&at(1.0), std::f64::consts::FRAC_PI_2);
        assert!((t.theta_x - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        // atan(0.5 · tan 30°), evaluated independently
        let expect = (0.5 * (30f64).to_radians().tan()).atan().to_degrees();
        let t = position_to_tilt(&at(0.75), 60f64.to_radians());
        assert!((t.theta_x.to_degrees() - expect).abs() < 1e-12);
        assert!((t.theta_x.to_degrees() - 16.10).abs() < 5e-3);
    }

    #[test]
    fn neutral_gain_is_unit() {
        let s = LightSource::point([0.2, 0.2], 1.0);
        for g in s.channel_gain() {
            assert!((g - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn core_is_clipped_to_frame() {
        let mut s = LightSource::point([0.0, 0.0], 5.0);
        s.radius = 0.05;
        let core = rasterize_core(&s, [0.0, 0.0], 64, 64);
        assert!(core.get(0, 0)[0] > 4.9);
        assert_eq!(core.get(20, 20), [0.0; 3]);
    }
}
