//! Far-field (Fraunhofer) scattering kernels and tilt-induced translation.
//!
//! A pupil illuminated by a plane wave tilted by `θ₀` picks up the linear
//! phase `exp(i2π u₀ x)` with `u₀ = sin θ₀ / λ`. Its far field is the
//! untilted far field translated by `u₀`, so one kernel serves every source
//! position in the frame. [`tilt_shift`] applies that translation directly
//! to a computed kernel; [`tilt_pupil`] builds the explicitly tilted screen
//! for comparison.
//!
//! Intensities are unnormalized `|DFT|²`, so `Σ I = N² Σ |pupil|²`. The
//! constant phase prefactor of the diffraction integral has unit modulus and
//! is dropped.

use std::io::{Read, Write};
use std::path::Path;

use image::{ImageBuffer, Luma, Rgb};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::pupil::PupilField;

pub const RAW_MAGIC: [u8; 4] = *b"FFKR";
pub const VISIBLE_NM: (f64, f64) = (380.0, 780.0);
/// Default chromatic sampling, ordered R, G, B.
pub const RGB_WAVELENGTHS_NM: [f64; 3] = [610.0, 540.0, 470.0];
pub const MAX_BANDS: usize = 31;

/// How content shifted past the grid edge is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ShiftMode {
    /// Circular wrap; the exact shift-theorem contract.
    #[default]
    Wrap,
    /// Whole-sample part translated with zero fill, sub-sample remainder
    /// applied as a phase ramp.
    CropPad,
}

/// Scattering-flare intensity for one or more wavelengths on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FlareKernel {
    n: usize,
    wavelengths_nm: Vec<f64>,
    focal_length_mm: f64,
    pupil_pitch_mm: f64,
    /// fftshifted intensity per wavelength, DC at `(n/2, n/2)`.
    intensity: Vec<Vec<f64>>,
    /// fftshifted complex far field per wavelength, when known.
    field: Option<Vec<Vec<Complex64>>>,
    energy: Vec<f64>,
}

/// Incidence angle of a source, per image axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TiltSpec {
    /// Radians, signed; positive x moves the pattern toward larger columns.
    pub theta_x: f64,
    /// Radians, signed; positive y moves the pattern toward larger rows.
    pub theta_y: f64,
}

impl TiltSpec {
    pub const ZERO: TiltSpec = TiltSpec {
        theta_x: 0.0,
        theta_y: 0.0,
    };

    pub fn new(theta_x: f64, theta_y: f64) -> Self {
        Self { theta_x, theta_y }
    }

    /// Spatial-frequency shift `(sin θx / λ, sin θy / λ)` in cycles/mm.
    pub fn u0(&self, wavelength_nm: f64) -> (f64, f64) {
        let lambda_mm = wavelength_nm * 1e-6;
        (self.theta_x.sin() / lambda_mm, self.theta_y.sin() / lambda_mm)
    }

    /// Tilt that displaces the pattern by `(dx, dy)` far-field samples at
    /// `wavelength_nm` on a grid of `n` samples spaced `pitch_mm`.
    pub fn from_sample_shift(dx: f64, dy: f64, wavelength_nm: f64, n: usize, pitch_mm: f64) -> Self {
        let k = wavelength_nm * 1e-6 / (n as f64 * pitch_mm);
        Self {
            theta_x: (dx * k).clamp(-1.0, 1.0).asin(),
            theta_y: (dy * k).clamp(-1.0, 1.0).asin(),
        }
    }
}

fn check_wavelengths(wavelengths: &[f64]) -> Result<()> {
    if wavelengths.is_empty() {
        return Err(Error::param("at least one wavelength is required"));
    }
    if wavelengths.len() > MAX_BANDS {
        return Err(Error::param(format!("at most {MAX_BANDS} wavelengths are supported")));
    }
    if let Some(w) = wavelengths
        .iter()
        .find(|w| !(VISIBLE_NM.0..=VISIBLE_NM.1).contains(*w))
    {
        return Err(Error::param(format!("wavelength {w} nm outside [380, 780] nm")));
    }
    Ok(())
}

/// Far-field intensity `|DFT(pupil)|²` for each wavelength.
///
/// The screen is treated as dispersion-free, so all wavelengths share one
/// intensity array; they differ only in the output sample pitch
/// `λ f / (N Δx)` reported by [`FlareKernel::sample_pitch_mm`].
pub fn diffract(pupil: &PupilField, wavelengths_nm: &[f64], focal_length_mm: f64) -> Result<FlareKernel> {
    check_wavelengths(wavelengths_nm)?;
    if !(focal_length_mm > 0.0 && focal_length_mm.is_finite()) {
        return Err(Error::param("focal length must be > 0"));
    }
    let n = pupil.n();
    let mut spectrum = pupil.grid().to_vec();
    fft::forward(&mut spectrum, n, n);
    let field = fft::fftshift(&spectrum, n, n);
    let intensity: Vec<f64> = field.iter().map(|v| v.norm_sqr()).collect();
    let energy = intensity.iter().sum::<f64>() / (n * n) as f64;
    let k = wavelengths_nm.len();
    Ok(FlareKernel {
        n,
        wavelengths_nm: wavelengths_nm.to_vec(),
        focal_length_mm,
        pupil_pitch_mm: pupil.pitch_mm(),
        intensity: vec![intensity; k],
        field: Some(vec![field; k]),
        energy: vec![energy; k],
    })
}

/// Pupil multiplied by the linear phase of a plane wave incident at `tilt`.
pub fn tilt_pupil(pupil: &PupilField, tilt: TiltSpec, wavelength_nm: f64) -> PupilField {
    let n = pupil.n();
    let dx = pupil.pitch_mm();
    let (ux, uy) = tilt.u0(wavelength_nm);
    let grid = pupil
        .grid()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v == Complex64::default() {
                return v;
            }
            let (row, col) = ((i / n) as f64, (i % n) as f64);
            let phase = std::f64::consts::TAU * (ux * col * dx + uy * row * dx);
            v * Complex64::from_polar(1.0, phase)
        })
        .collect();
    PupilField::from_parts(
        n,
        pupil.aperture_samples(),
        pupil.extent_mm(),
        pupil.wavelength_ref_nm(),
        grid,
    )
    .expect("a unit-modulus phase ramp preserves pupil invariants")
}

/// Translates every wavelength plane of `kernel` by the far-field
/// displacement of `tilt`, using circular wrap.
pub fn tilt_shift(kernel: &FlareKernel, tilt: TiltSpec) -> FlareKernel {
    tilt_shift_with(kernel, tilt, ShiftMode::Wrap)
}

pub fn tilt_shift_with(kernel: &FlareKernel, tilt: TiltSpec, mode: ShiftMode) -> FlareKernel {
    let shifts: Vec<(f64, f64)> = (0..kernel.wavelengths_nm.len())
        .map(|i| kernel.sample_shift(tilt, i))
        .collect();
    kernel.shifted_by_samples(&shifts, mode)
}

/// Shifts within `1e-9` of a whole sample are treated as grid aligned.
fn snap(v: f64) -> Option<f64> {
    let r = v.round();
    ((v - r).abs() < 1e-9).then_some(r)
}

/// Zero-filled translation by whole samples.
fn translate<T: Copy + Default>(data: &[T], n: usize, dy: i64, dx: i64) -> Vec<T> {
    let mut out = vec![T::default(); n * n];
    for row in 0..n as i64 {
        let src_r = row - dy;
        if src_r < 0 || src_r >= n as i64 {
            continue;
        }
        for col in 0..n as i64 {
            let src_c = col - dx;
            if src_c < 0 || src_c >= n as i64 {
                continue;
            }
            out[(row * n as i64 + col) as usize] = data[(src_r * n as i64 + src_c) as usize];
        }
    }
    out
}

/// Shift of an fftshifted complex far field through a pupil-domain phase ramp.
fn ramp_shift_field(field: &[Complex64], n: usize, sy: f64, sx: f64) -> Vec<Complex64> {
    let mut pupil = fft::ifftshift(field, n, n);
    fft::inverse(&mut pupil, n, n);
    let nf = n as f64;
    for (i, v) in pupil.iter_mut().enumerate() {
        let (row, col) = ((i / n) as f64, (i % n) as f64);
        *v *= Complex64::from_polar(1.0, std::f64::consts::TAU * (sx * col + sy * row) / nf);
    }
    fft::forward(&mut pupil, n, n);
    fft::fftshift(&pupil, n, n)
}

/// Fourier-interpolated shift of a real intensity plane. Exact for
/// band-limited (at least 2× oversampled) patterns.
fn ramp_shift_intensity(plane: &[f64], n: usize, sy: f64, sx: f64) -> Vec<f64> {
    let mut spec: Vec<Complex64> = fft::ifftshift(plane, n, n)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    fft::forward(&mut spec, n, n);
    let nf = n as f64;
    for (i, v) in spec.iter_mut().enumerate() {
        let fy = fft::signed_bin(i / n, n);
        let fx = fft::signed_bin(i % n, n);
        *v *= Complex64::from_polar(1.0, -std::f64::consts::TAU * (sx * fx + sy * fy) / nf);
    }
    fft::inverse(&mut spec, n, n);
    fft::fftshift(&spec, n, n)
        .into_iter()
        .map(|v| v.re.max(0.0))
        .collect()
}

impl FlareKernel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn focal_length_mm(&self) -> f64 {
        self.focal_length_mm
    }

    pub fn pupil_pitch_mm(&self) -> f64 {
        self.pupil_pitch_mm
    }

    /// Output-plane sample pitch `λ f / (N Δx)` for wavelength `i`, mm.
    pub fn sample_pitch_mm(&self, i: usize) -> f64 {
        self.wavelengths_nm[i] * 1e-6 * self.focal_length_mm / (self.n as f64 * self.pupil_pitch_mm)
    }

    pub fn intensity(&self, i: usize) -> &[f64] {
        &self.intensity[i]
    }

    pub fn has_field(&self) -> bool {
        self.field.is_some()
    }

    /// `Σ I / N²` per wavelength at construction; equals the pupil energy.
    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    pub fn total_intensity(&self, i: usize) -> f64 {
        self.intensity[i].iter().sum()
    }

    pub fn peak(&self, i: usize) -> f64 {
        self.intensity[i].iter().copied().fold(0.0, f64::max)
    }

    /// Far-field displacement of `tilt` for wavelength `i`, in samples
    /// `(dx, dy)`: `u₀ · N · Δx`.
    pub fn sample_shift(&self, tilt: TiltSpec, i: usize) -> (f64, f64) {
        let (ux, uy) = tilt.u0(self.wavelengths_nm[i]);
        let k = self.n as f64 * self.pupil_pitch_mm;
        (ux * k, uy * k)
    }

    /// Translate wavelength plane `i` by `shifts[i] = (dx, dy)` samples.
    pub fn shifted_by_samples(&self, shifts: &[(f64, f64)], mode: ShiftMode) -> FlareKernel {
        assert_eq!(shifts.len(), self.wavelengths_nm.len());
        let n = self.n;
        let mut out = self.clone();
        for (i, &(dx, dy)) in shifts.iter().enumerate() {
            if dx == 0.0 && dy == 0.0 {
                continue;
            }
            let (whole_x, whole_y, frac_x, frac_y) = match (mode, snap(dx), snap(dy)) {
                (ShiftMode::Wrap, Some(x), Some(y)) => (x as i64, y as i64, 0.0, 0.0),
                (ShiftMode::Wrap, _, _) => (0, 0, dx, dy),
                (ShiftMode::CropPad, _, _) => {
                    let (rx, ry) = (dx.round(), dy.round());
                    (rx as i64, ry as i64, dx - rx, dy - ry)
                }
            };
            let place = |plane: &[f64]| match mode {
                ShiftMode::Wrap => fft::roll(plane, n, n, whole_y, whole_x),
                ShiftMode::CropPad => translate(plane, n, whole_y, whole_x),
            };
            let place_c = |plane: &[Complex64]| match mode {
                ShiftMode::Wrap => fft::roll(plane, n, n, whole_y, whole_x),
                ShiftMode::CropPad => translate(plane, n, whole_y, whole_x),
            };

            if frac_x == 0.0 && frac_y == 0.0 {
                out.intensity[i] = place(&self.intensity[i]);
                if let Some(f) = out.field.as_mut() {
                    f[i] = place_c(&f[i]);
                }
                continue;
            }
            match out.field.as_mut() {
                Some(f) => {
                    let moved = ramp_shift_field(&f[i], n, frac_y, frac_x);
                    let moved = place_c(&moved);
                    out.intensity[i] = moved.iter().map(|v| v.norm_sqr()).collect();
                    f[i] = moved;
                }
                None => {
                    let moved = ramp_shift_intensity(&self.intensity[i], n, frac_y, frac_x);
                    out.intensity[i] = place(&moved);
                }
            }
        }
        out
    }

    /// Multiplies every intensity by `gain` (and the field by `√gain`).
    pub fn scaled(&self, gain: f64) -> FlareKernel {
        let mut out = self.clone();
        for plane in out.intensity.iter_mut() {
            plane.iter_mut().for_each(|v| *v *= gain);
        }
        if let Some(f) = out.field.as_mut() {
            let a = gain.sqrt();
            for plane in f.iter_mut() {
                plane.iter_mut().for_each(|v| *v *= a);
            }
        }
        out.energy.iter_mut().for_each(|e| *e *= gain);
        out
    }

    /// Builds an intensity-only kernel, e.g. one read back from disk.
    pub fn from_intensity(
        n: usize,
        wavelengths_nm: Vec<f64>,
        focal_length_mm: f64,
        pupil_pitch_mm: f64,
        intensity: Vec<Vec<f64>>,
    ) -> Result<FlareKernel> {
        check_wavelengths(&wavelengths_nm)?;
        if intensity.len() != wavelengths_nm.len() || intensity.iter().any(|p| p.len() != n * n) {
            return Err(Error::param("intensity planes do not match wavelengths × n²"));
        }
        if intensity.iter().flatten().any(|v| !(*v >= 0.0)) {
            return Err(Error::param("intensity must be non-negative"));
        }
        let energy = intensity
            .iter()
            .map(|p| p.iter().sum::<f64>() / (n * n) as f64)
            .collect();
        Ok(FlareKernel {
            n,
            wavelengths_nm,
            focal_length_mm,
            pupil_pitch_mm,
            intensity,
            field: None,
            energy,
        })
    }

    /// Raw float32 layout (little-endian): magic `b"FFKR"`, `u32` N,
    /// `u32` band count B, `f32` focal length mm, `f32` pupil pitch mm,
    /// B × `f32` wavelengths nm, then B planes of N² `f32` intensities,
    /// row major with DC at `(N/2, N/2)`.
    pub fn write_raw<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&RAW_MAGIC)?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.wavelengths_nm.len() as u32).to_le_bytes())?;
        w.write_all(&(self.focal_length_mm as f32).to_le_bytes())?;
        w.write_all(&(self.pupil_pitch_mm as f32).to_le_bytes())?;
        for wl in &self.wavelengths_nm {
            w.write_all(&(*wl as f32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.n * self.n * 4);
        for plane in &self.intensity {
            buf.clear();
            for v in plane {
                buf.extend_from_slice(&(*v as f32).to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_raw<R: Read>(mut r: R) -> Result<FlareKernel> {
        let bad = |reason: &str| Error::Format {
            what: "kernel raw file",
            reason: reason.to_string(),
        };
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| bad(&e.to_string()))?;
        if bytes.len() < 20 || bytes[0..4] != RAW_MAGIC {
            return Err(bad("bad magic or truncated header"));
        }
        let word = |at: usize| -> [u8; 4] { bytes[at..at + 4].try_into().unwrap() };
        let n = u32::from_le_bytes(word(4)) as usize;
        let bands = u32::from_le_bytes(word(8)) as usize;
        let focal = f32::from_le_bytes(word(12)) as f64;
        let pitch = f32::from_le_bytes(word(16)) as f64;
        let expected = 20 + bands * 4 + bands * n * n * 4;
        if bytes.len() != expected {
            return Err(bad("payload length does not match header"));
        }
        let wavelengths = (0..bands)
            .map(|b| f32::from_le_bytes(word(20 + 4 * b)) as f64)
            .collect();
        let base = 20 + bands * 4;
        let intensity = (0..bands)
            .map(|b| {
                bytes[base + b * n * n * 4..base + (b + 1) * n * n * 4]
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                    .collect()
            })
            .collect();
        FlareKernel::from_intensity(n, wavelengths, focal, pitch, intensity)
    }

    pub fn save_raw(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_raw(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load_raw(path: &Path) -> Result<FlareKernel> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_raw(std::io::BufReader::new(file))
    }

    /// 16-bit preview: `min(1, exposure · I / peak)^(1/2.2)`. Three-band
    /// kernels become RGB (first band red); others become the band sum.
    pub fn to_png16(&self, exposure: f64) -> Png16 {
        let n = self.n as u32;
        let tone = |v: f64, peak: f64| -> u16 {
            let x = if peak > 0.0 { (exposure * v / peak).clamp(0.0, 1.0) } else { 0.0 };
            (x.powf(1.0 / 2.2) * 65535.0).round() as u16
        };
        if self.intensity.len() == 3 {
            let peak = (0..3).map(|i| self.peak(i)).fold(0.0, f64::max);
            Png16::Rgb(ImageBuffer::from_fn(n, n, |x, y| {
                let idx = (y * n + x) as usize;
                Rgb([
                    tone(self.intensity[0][idx], peak),
                    tone(self.intensity[1][idx], peak),
                    tone(self.intensity[2][idx], peak),
                ])
            }))
        } else {
            let sum: Vec<f64> = (0..self.n * self.n)
                .map(|idx| self.intensity.iter().map(|p| p[idx]).sum())
                .collect();
            let peak = sum.iter().copied().fold(0.0, f64::max);
            Png16::Gray(ImageBuffer::from_fn(n, n, |x, y| {
                Luma([tone(sum[(y * n + x) as usize], peak)])
            }))
        }
    }
}

pub enum Png16 {
    Rgb(ImageBuffer<Rgb<u16>, Vec<u16>>),
    Gray(ImageBuffer<Luma<u16>, Vec<u16>>),
}

impl Png16 {
    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            Png16::Rgb(img) => crate::raster::save_png(img, path),
            Png16::Gray(img) => crate::raster::save_png(img, path),
        }
    }
}

/// Diffracts several pupils in parallel.
pub fn diffract_batch(pupils: &[PupilField], wavelengths_nm: &[f64], focal_length_mm: f64) -> Result<Vec<FlareKernel>> {
    pupils
        .par_iter()
        .map(|p| diffract(p, wavelengths_nm, focal_length_mm))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pupil::{contaminate, make_clean_pupil, ContaminationSpec};

    fn rel_max_diff(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().copied().fold(0.0, f64::max);
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn clean_pupil_peaks_at_center() {
        let k = diffract(&make_clean_pupil(64, 5.0).unwrap(), &[550.0], 50.0).unwrap();
        let center = 32 * 64 + 32;
        let argmax = k
            .intensity(0)
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, center);
    }

    #[test]
    fn rejects_bad_wavelengths() {
        let p = make_clean_pupil(64, 5.0).unwrap();
        assert!(matches!(diffract(&p, &[], 50.0), Err(Error::Parameter(_))));
        assert!(matches!(diffract(&p, &[900.0], 50.0), Err(Error::Parameter(_))));
        assert!(matches!(diffract(&p, &[500.0], 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn output_pitch_scales_with_wavelength() {
        let p = make_clean_pupil(64, 6.4).unwrap();
        let k = diffract(&p, &RGB_WAVELENGTHS_NM, 50.0).unwrap();
        // λ f / (N Δx) with Δx = 0.1 mm
        assert!((k.sample_pitch_mm(0) - 610e-6 * 50.0 / 6.4).abs() < 1e-15);
        assert!(k.sample_pitch_mm(2) < k.sample_pitch_mm(0));
    }

    #[test]
    fn zero_tilt_is_identity() {
        let p = contaminate(&make_clean_pupil(64, 5.0).unwrap(), &ContaminationSpec::default()).unwrap();
        let k = diffract(&p, &[550.0], 50.0).unwrap();
        assert_eq!(tilt_shift(&k, TiltSpec::ZERO), k);
    }

    #[test]
    fn intensity_scales_quadratically() {
        let p = contaminate(&make_clean_pupil(64, 5.0).unwrap(), &ContaminationSpec::default()).unwrap();
        let half = PupilField::from_parts(64, 64, 5.0, 550.0, p.grid().iter().map(|v| v * 0.5).collect()).unwrap();
        let k = diffract(&p, &[550.0], 50.0).unwrap();
        let kh = diffract(&half, &[550.0], 50.0).unwrap();
        let peak = k.peak(0);
        for (a, b) in k.intensity(0).iter().zip(kh.intensity(0)) {
            assert!((a * 0.25 - b).abs() <= 1e-12 * peak);
        }
    }

    #[test]
    fn intensity_only_kernel_shifts_by_interpolation() {
        // 4x oversampled pattern is band-limited on the grid
        let p = make_clean_pupil(64, 5.0).unwrap().padded(4).unwrap();
        let k = diffract(&p, &[550.0], 50.0).unwrap();
        let bare = FlareKernel::from_intensity(256, vec![550.0], 50.0, k.pupil_pitch_mm(), vec![k.intensity(0).to_vec()]).unwrap();
        let shifts = [(3.3, -1.7)];
        let exact = k.shifted_by_samples(&shifts, ShiftMode::Wrap);
        let interp = bare.shifted_by_samples(&shifts, ShiftMode::Wrap);
        assert!(rel_max_diff(interp.intensity(0), exact.intensity(0)) < 1e-9);
    }

    #[test]
    fn crop_pad_does_not_wrap() {
        let p = make_clean_pupil(64, 5.0).unwrap().padded(2).unwrap();
        let k = diffract(&p, &[550.0], 50.0).unwrap();
        let moved = k.shifted_by_samples(&[(100.0, 0.0)], ShiftMode::CropPad);
        // columns 0..100 were vacated
        for row in 0..128 {
            for col in 0..100 {
                assert_eq!(moved.intensity(0)[row * 128 + col], 0.0);
            }
        }
        assert_eq!(moved.intensity(0)[64 * 128 + 64 + 100 - 128], 0.0);
        let wrapped = k.shifted_by_samples(&[(100.0, 0.0)], ShiftMode::Wrap);
        assert!(wrapped.intensity(0)[64 * 128 + 36] > 0.0);
    }

    #[test]
    fn raw_roundtrip_keeps_intensity() {
        let p = make_clean_pupil(64, 5.0).unwrap();
        let k = diffract(&p, &RGB_WAVELENGTHS_NM, 35.0).unwrap().scaled(1e-6);
        let mut buf = Vec::new();
        k.write_raw(&mut buf).unwrap();
        let back = FlareKernel::read_raw(&buf[..]).unwrap();
        assert_eq!(back.wavelengths_nm(), k.wavelengths_nm());
        assert!(!back.has_field());
        for i in 0..3 {
            for (a, b) in back.intensity(i).iter().zip(k.intensity(i)) {
                assert!((a - b).abs() <= b.abs() * 1e-6 + 1e-30);
            }
        }
        assert!(FlareKernel::read_raw(&buf[..buf.len() - 1]).is_err());
    }
}
