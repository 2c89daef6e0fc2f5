//! Entrance-pupil screens: a clean circular aperture plus seeded dust,
//! scratch and oil contamination.
//!
//! Contamination composes multiplicatively on amplitude and additively on
//! phase, applied in the fixed order dust → scratches → oil. Each category
//! draws from its own ChaCha stream (see [`crate::rng`]), so changing the
//! scratch count never moves a dust disk.
//!
//! # Raw file layout
//!
//! All values little-endian:
//!
//! | offset | type      | field                                    |
//! |--------|-----------|------------------------------------------|
//! | 0      | `[u8; 4]` | magic `b"FFPU"`                          |
//! | 4      | `u16`     | grid size `N`                            |
//! | 6      | `u16`     | aperture diameter in samples             |
//! | 8      | `f32`     | aperture diameter in millimeters         |
//! | 12     | `f32`     | reference wavelength in nanometers       |
//! | 16     | `f32 × 2N²` | interleaved `(re, im)`, row major      |

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::rng::{self, Stream};

pub const RAW_MAGIC: [u8; 4] = *b"FFPU";
pub const MIN_GRID: usize = 64;
pub const DEFAULT_WAVELENGTH_REF_NM: f64 = 550.0;

/// Complex amplitude transmission of the aperture plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PupilField {
    n: usize,
    aperture_samples: usize,
    extent_mm: f64,
    wavelength_ref_nm: f64,
    grid: Vec<Complex64>,
}

fn check_grid_size(n: usize) -> Result<()> {
    if n < MIN_GRID || !n.is_power_of_two() {
        return Err(Error::param(format!(
            "grid size must be a power of two >= {MIN_GRID}, got {n}"
        )));
    }
    Ok(())
}

/// Circle test shared by construction and validation; `d` is the aperture
/// diameter in samples, centered on sample `(n/2, n/2)`.
#[inline]
fn inside_aperture(row: usize, col: usize, n: usize, d: usize) -> bool {
    let c = (n / 2) as f64;
    let r = d as f64 / 2.0;
    let (y, x) = (row as f64 - c, col as f64 - c);
    x * x + y * y < r * r
}

/// Unit-amplitude, zero-phase circular aperture inscribed in an `n × n` grid.
pub fn make_clean_pupil(n: usize, extent_mm: f64) -> Result<PupilField> {
    check_grid_size(n)?;
    if !(extent_mm > 0.0 && extent_mm.is_finite()) {
        return Err(Error::param(format!("extent must be > 0, got {extent_mm}")));
    }
    let mut grid = vec![Complex64::default(); n * n];
    for row in 0..n {
        for col in 0..n {
            if inside_aperture(row, col, n, n) {
                grid[row * n + col] = Complex64::new(1.0, 0.0);
            }
        }
    }
    Ok(PupilField {
        n,
        aperture_samples: n,
        extent_mm,
        wavelength_ref_nm: DEFAULT_WAVELENGTH_REF_NM,
        grid,
    })
}

impl PupilField {
    /// Builds a field from raw samples, checking every invariant.
    pub fn from_parts(
        n: usize,
        aperture_samples: usize,
        extent_mm: f64,
        wavelength_ref_nm: f64,
        grid: Vec<Complex64>,
    ) -> Result<Self> {
        check_grid_size(n)?;
        if aperture_samples == 0 || aperture_samples > n {
            return Err(Error::param(format!(
                "aperture of {aperture_samples} samples does not fit grid {n}"
            )));
        }
        if !(extent_mm > 0.0 && extent_mm.is_finite()) {
            return Err(Error::param("extent must be > 0"));
        }
        if !(wavelength_ref_nm > 0.0 && wavelength_ref_nm.is_finite()) {
            return Err(Error::param("reference wavelength must be > 0"));
        }
        if grid.len() != n * n {
            return Err(Error::param("grid length does not match n*n"));
        }
        let field = Self {
            n,
            aperture_samples,
            extent_mm,
            wavelength_ref_nm,
            grid,
        };
        field.check_invariants()?;
        Ok(field)
    }

    pub fn check_invariants(&self) -> Result<()> {
        for row in 0..self.n {
            for col in 0..self.n {
                let v = self.grid[row * self.n + col];
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::param(format!("non-finite sample at ({row}, {col})")));
                }
                if v.norm() > 1.0 + 1e-6 {
                    return Err(Error::param(format!("|amplitude| > 1 at ({row}, {col})")));
                }
                if !inside_aperture(row, col, self.n, self.aperture_samples) && v != Complex64::default() {
                    return Err(Error::param(format!(
                        "non-zero sample outside aperture at ({row}, {col})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn aperture_samples(&self) -> usize {
        self.aperture_samples
    }

    /// Aperture diameter in millimeters.
    pub fn extent_mm(&self) -> f64 {
        self.extent_mm
    }

    /// Sample spacing on the aperture plane, millimeters.
    pub fn pitch_mm(&self) -> f64 {
        self.extent_mm / self.aperture_samples as f64
    }

    pub fn wavelength_ref_nm(&self) -> f64 {
        self.wavelength_ref_nm
    }

    pub fn with_wavelength_ref(mut self, nm: f64) -> Self {
        self.wavelength_ref_nm = nm;
        self
    }

    pub fn grid(&self) -> &[Complex64] {
        &self.grid
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.grid[row * self.n + col]
    }

    /// `Σ |amplitude|²`.
    pub fn energy(&self) -> f64 {
        self.grid.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn in_aperture(&self, row: usize, col: usize) -> bool {
        inside_aperture(row, col, self.n, self.aperture_samples)
    }

    /// Centers the field in a grid `factor` times larger, zero filled. The
    /// sample pitch is unchanged, so the far-field pattern gains `factor`×
    /// oversampling.
    pub fn padded(&self, factor: usize) -> Result<PupilField> {
        if factor == 0 || !factor.is_power_of_two() {
            return Err(Error::param("padding factor must be a power of two"));
        }
        let m = self.n * factor;
        let off = m / 2 - self.n / 2;
        let mut grid = vec![Complex64::default(); m * m];
        for row in 0..self.n {
            let dst = (row + off) * m + off;
            grid[dst..dst + self.n].copy_from_slice(&self.grid[row * self.n..(row + 1) * self.n]);
        }
        Ok(PupilField {
            n: m,
            aperture_samples: self.aperture_samples,
            extent_mm: self.extent_mm,
            wavelength_ref_nm: self.wavelength_ref_nm,
            grid,
        })
    }

    pub fn write_raw<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&RAW_MAGIC)?;
        w.write_all(&(self.n as u16).to_le_bytes())?;
        w.write_all(&(self.aperture_samples as u16).to_le_bytes())?;
        w.write_all(&(self.extent_mm as f32).to_le_bytes())?;
        w.write_all(&(self.wavelength_ref_nm as f32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.grid.len() * 8);
        for v in &self.grid {
            buf.extend_from_slice(&(v.re as f32).to_le_bytes());
            buf.extend_from_slice(&(v.im as f32).to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_raw<R: Read>(mut r: R) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            what: "pupil raw file",
            reason: reason.to_string(),
        };
        let mut header = [0u8; 16];
        r.read_exact(&mut header).map_err(|_| bad("truncated header"))?;
        if header[0..4] != RAW_MAGIC {
            return Err(bad("bad magic"));
        }
        let n = u16::from_le_bytes([header[4], header[5]]) as usize;
        let aperture = u16::from_le_bytes([header[6], header[7]]) as usize;
        let extent = f32::from_le_bytes(header[8..12].try_into().unwrap()) as f64;
        let wl = f32::from_le_bytes(header[12..16].try_into().unwrap()) as f64;
        let mut body = Vec::new();
        r.read_to_end(&mut body).map_err(|e| bad(&e.to_string()))?;
        if body.len() != n * n * 8 {
            return Err(bad("payload length does not match N"));
        }
        let grid = body
            .chunks_exact(8)
            .map(|c| {
                Complex64::new(
                    f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
                    f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
                )
            })
            .collect();
        PupilField::from_parts(n, aperture, extent, wl, grid)
    }

    pub fn save_raw(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_raw(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load_raw(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_raw(std::io::BufReader::new(file))
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            // still consume one draw so stream positions do not depend on widths
            let _: f64 = rng.random();
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * rng.random::<f64>()
        }
    }

    fn within(&self, lo: f64, hi: f64) -> bool {
        self.lo >= lo && self.hi <= hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DustSpec {
    pub count: usize,
    /// Disk radius, samples.
    pub radius: Range,
    pub opacity: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScratchSpec {
    pub count: usize,
    /// Full width, samples.
    pub width: Range,
    /// End-to-end length, samples.
    pub length: Range,
    /// Radians from the +x axis.
    pub orientation: Range,
    pub opacity: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OilSpec {
    pub blobs: usize,
    /// Standard deviation of the Gaussian low-pass filter, samples.
    pub smoothness: f64,
    /// Peak phase excursion at the reference wavelength, radians.
    pub phase_amplitude: f64,
}

/// Parameters of the seeded contamination model. The defaults were tuned by
/// eye for a 128-sample aperture; they are not measured statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub seed: u64,
    pub dust: DustSpec,
    pub scratches: ScratchSpec,
    pub oil: OilSpec,
}

impl Default for ContaminationSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            dust: DustSpec {
                count: 80,
                radius: Range::new(0.8, 3.5),
                opacity: Range::new(0.4, 1.0),
            },
            scratches: ScratchSpec {
                count: 3,
                width: Range::new(0.6, 1.5),
                length: Range::new(20.0, 80.0),
                orientation: Range::new(0.0, std::f64::consts::PI),
                opacity: Range::new(0.6, 1.0),
            },
            oil: OilSpec {
                blobs: 3,
                smoothness: 4.0,
                phase_amplitude: 2.5,
            },
        }
    }
}

impl ContaminationSpec {
    /// No contamination at all.
    pub fn none(seed: u64) -> Self {
        let mut spec = Self { seed, ..Self::default() };
        spec.dust.count = 0;
        spec.scratches.count = 0;
        spec.oil.blobs = 0;
        spec
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |r: &Range| r.is_valid() && r.within(0.0, 1.0);
        let nonneg = |r: &Range| r.is_valid() && r.lo >= 0.0;
        if !nonneg(&self.dust.radius) || !unit(&self.dust.opacity) {
            return Err(Error::param("dust ranges must be valid, radius >= 0, opacity in [0,1]"));
        }
        let s = &self.scratches;
        if !nonneg(&s.width) || !nonneg(&s.length) || !s.orientation.is_valid() || !unit(&s.opacity) {
            return Err(Error::param("scratch ranges must be valid and non-negative"));
        }
        if !(self.oil.smoothness > 0.0 && self.oil.smoothness.is_finite()) {
            return Err(Error::param("oil smoothness must be > 0"));
        }
        if !self.oil.phase_amplitude.is_finite() {
            return Err(Error::param("oil phase amplitude must be finite"));
        }
        Ok(())
    }
}

/// One seeded dust particle, in sample coordinates (`x` = column).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DustDisk {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub opacity: f64,
}

impl DustDisk {
    /// Fractional coverage with a one-sample raised-cosine edge.
    pub fn coverage(&self, x: f64, y: f64) -> f64 {
        let d = ((x - self.x).powi(2) + (y - self.y).powi(2)).sqrt();
        let inner = self.radius - 0.5;
        if d <= inner {
            1.0
        } else if d >= self.radius + 0.5 {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * (d - inner)).cos())
        }
    }
}

/// Capsule-shaped scratch between two end points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scratch {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub width: f64,
    pub opacity: f64,
}

impl Scratch {
    /// Anti-aliased coverage: one-sample linear ramp at the capsule boundary.
    pub fn coverage(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (self.x1 - self.x0, self.y1 - self.y0);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((x - self.x0) * dx + (y - self.y0) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (px, py) = (self.x0 + t * dx, self.y0 + t * dy);
        let d = ((x - px).powi(2) + (y - py).powi(2)).sqrt();
        (self.width / 2.0 - d + 0.5).clamp(0.0, 1.0)
    }
}

/// The concrete contamination drawn from a spec for a given aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct Contaminants {
    pub dust: Vec<DustDisk>,
    pub scratches: Vec<Scratch>,
    /// Additive phase per sample at the reference wavelength; empty when oil-free.
    pub oil_phase: Vec<f64>,
}

fn point_in_disk<R: Rng + ?Sized>(rng: &mut R, cx: f64, cy: f64, radius: f64) -> (f64, f64) {
    let r = radius * rng.random::<f64>().sqrt();
    let a = std::f64::consts::TAU * rng.random::<f64>();
    (cx + r * a.cos(), cy + r * a.sin())
}

/// Draws the contaminant geometry for `pupil` from `spec`.
pub fn sample_contaminants(pupil: &PupilField, spec: &ContaminationSpec) -> Result<Contaminants> {
    spec.validate()?;
    let n = pupil.n;
    let c = (n / 2) as f64;
    let ap = pupil.aperture_samples as f64 / 2.0;

    let mut rng = rng::stream(spec.seed, Stream::Dust);
    let dust = (0..spec.dust.count)
        .map(|_| {
            let (x, y) = point_in_disk(&mut rng, c, c, ap);
            DustDisk {
                x,
                y,
                radius: spec.dust.radius.sample(&mut rng),
                opacity: spec.dust.opacity.sample(&mut rng),
            }
        })
        .collect();

    let mut rng = rng::stream(spec.seed, Stream::Scratches);
    let s = &spec.scratches;
    let scratches = (0..s.count)
        .map(|_| {
            let (mx, my) = point_in_disk(&mut rng, c, c, ap);
            let half = s.length.sample(&mut rng) / 2.0;
            let theta = s.orientation.sample(&mut rng);
            let (dx, dy) = (half * theta.cos(), half * theta.sin());
            Scratch {
                x0: mx - dx,
                y0: my - dy,
                x1: mx + dx,
                y1: my + dy,
                width: s.width.sample(&mut rng),
                opacity: s.opacity.sample(&mut rng),
            }
        })
        .collect();

    let oil_phase = if spec.oil.blobs == 0 || spec.oil.phase_amplitude == 0.0 {
        Vec::new()
    } else {
        oil_screen(n, c, ap, &spec.oil, spec.seed)
    };

    Ok(Contaminants {
        dust,
        scratches,
        oil_phase,
    })
}

/// Low-pass-filtered white noise under Gaussian blob envelopes, scaled so the
/// largest excursion equals the configured phase amplitude.
fn oil_screen(n: usize, c: f64, ap: f64, oil: &OilSpec, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, Stream::Oil);
    let mut noise: Vec<Complex64> = (0..n * n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, 0.0))
        .collect();
    fft::forward(&mut noise, n, n);
    // Gaussian low-pass with spatial std `smoothness` samples.
    let s = oil.smoothness;
    for row in 0..n {
        let fy = fft::signed_bin(row, n) / n as f64;
        for col in 0..n {
            let fx = fft::signed_bin(col, n) / n as f64;
            let f2 = fx * fx + fy * fy;
            noise[row * n + col] *= (-2.0 * (std::f64::consts::PI * s).powi(2) * f2).exp();
        }
    }
    fft::inverse(&mut noise, n, n);

    let blobs: Vec<(f64, f64, f64)> = (0..oil.blobs)
        .map(|_| {
            let (x, y) = point_in_disk(&mut rng, c, c, ap);
            let sigma = ap * (0.15 + 0.25 * rng.random::<f64>());
            (x, y, sigma)
        })
        .collect();

    let mut phase: Vec<f64> = (0..n * n)
        .map(|i| {
            let (y, x) = ((i / n) as f64, (i % n) as f64);
            let env: f64 = blobs
                .iter()
                .map(|&(bx, by, s)| (-((x - bx).powi(2) + (y - by).powi(2)) / (2.0 * s * s)).exp())
                .sum();
            noise[i].re * env
        })
        .collect();
    let peak = phase.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let k = oil.phase_amplitude / peak;
        phase.iter_mut().for_each(|v| *v *= k);
    }
    phase
}

/// Applies seeded contamination; dust, then scratches, then oil.
pub fn contaminate(pupil: &PupilField, spec: &ContaminationSpec) -> Result<PupilField> {
    let found = sample_contaminants(pupil, spec)?;
    Ok(apply_contaminants(pupil, &found))
}

pub fn apply_contaminants(pupil: &PupilField, found: &Contaminants) -> PupilField {
    let n = pupil.n;
    let mut out = pupil.clone();
    for row in 0..n {
        for col in 0..n {
            let idx = row * n + col;
            if out.grid[idx] == Complex64::default() {
                continue;
            }
            let (x, y) = (col as f64, row as f64);
            let mut transmission = 1.0;
            for d in &found.dust {
                transmission *= 1.0 - d.opacity * d.coverage(x, y);
            }
            for s in &found.scratches {
                transmission *= 1.0 - s.opacity * s.coverage(x, y);
            }
            if transmission != 1.0 {
                out.grid[idx] *= transmission;
            }
            if let Some(&phi) = found.oil_phase.get(idx) {
                if phi != 0.0 {
                    out.grid[idx] *= Complex64::from_polar(1.0, phi);
                }
            }
        }
    }
    out
}
