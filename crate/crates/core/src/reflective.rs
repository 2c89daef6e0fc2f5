//! Reflective ghosts placed on the line through the light source and the
//! image center.
//!
//! An element with offset `t` is centered at `c + t·(c − s)`, where `s` is
//! the source and `c` the image center (both normalized). `t = +1` is the
//! centrosymmetric point `2c − s`, `t = −1` the source itself. Moving the
//! source by `δ` therefore moves each element by `−t·δ`.
//!
//! Chains are parametric, so collinearity holds by construction. Template
//! files are JSON Lines, one chain per line:
//!
//! ```text
//! {"template_id": "disk-pair", "rotation_free": true, "elements": [
//!   {"offset": 0.5, "radius": 0.025, "color": [0.5, 1.0, 0.7], "opacity": 0.8,
//!    "shape": {"kind": "disk"}}, ...]}
//! ```
//!
//! `shape.kind` is one of `disk`, `ring` (`thickness` as a fraction of the
//! radius), `arc` (`thickness`, angular `span` in radians) or `iris`
//! (`blades`, a regular polygon). `radius` is a fraction of the shorter image
//! side. `rotation` (radians, default 0) turns every element shape about its
//! own center.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::LinearRgb;
use crate::rng::{self, Stream};
use crate::scene::LightSource;

const BUILTIN: &str = include_str!("../templates/ghost_templates.jsonl");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GhostShape {
    Disk,
    Ring { thickness: f64 },
    Arc { thickness: f64, span: f64 },
    Iris { blades: u32 },
}

impl GhostShape {
    fn rotation_symmetric(&self) -> bool {
        matches!(self, GhostShape::Disk | GhostShape::Ring { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostElement {
    pub offset: f64,
    pub radius: f64,
    pub color: [f64; 3],
    pub opacity: f64,
    pub shape: GhostShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostChain {
    pub template_id: String,
    pub elements: Vec<GhostElement>,
    /// Orientation may be chosen freely when the axis is undefined.
    #[serde(default)]
    pub rotation_free: bool,
    #[serde(default)]
    pub rotation: f64,
}

impl GhostElement {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.opacity) {
            return Err(Error::param("ghost opacity must lie in [0, 1]"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) || !self.offset.is_finite() {
            return Err(Error::param("ghost radius must be > 0 and offset finite"));
        }
        match self.shape {
            GhostShape::Ring { thickness } | GhostShape::Arc { thickness, .. } if !(thickness > 0.0 && thickness <= 1.0) => {
                Err(Error::param("ring thickness must lie in (0, 1]"))
            }
            GhostShape::Iris { blades } if blades < 3 => Err(Error::param("iris needs at least 3 blades")),
            _ => Ok(()),
        }
    }
}

impl GhostChain {
    pub fn validate(&self) -> Result<()> {
        self.elements.iter().try_for_each(GhostElement::validate)
    }

    pub fn is_rotation_symmetric(&self) -> bool {
        self.elements.iter().all(|e| e.shape.rotation_symmetric())
    }
}

/// Parses JSON Lines chain records; blank lines and `#` comments are skipped.
pub fn parse_templates(text: &str) -> Result<Vec<GhostChain>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            let chain: GhostChain = serde_json::from_str(l).map_err(|e| Error::Format {
                what: "ghost template",
                reason: format!("line {}: {e}", i + 1),
            })?;
            chain.validate()?;
            Ok(chain)
        })
        .collect()
}

pub fn load_templates(path: &Path) -> Result<Vec<GhostChain>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_templates(&text)
}

/// The ten bundled chains (disk / ring / arc / iris mixes).
pub fn builtin_templates() -> Vec<GhostChain> {
    parse_templates(BUILTIN).expect("bundled templates are valid")
}

/// Normalized center of the element at `offset` for a source at `s`.
pub fn element_center(offset: f64, source: [f64; 2]) -> [f64; 2] {
    let c = 0.5;
    [c + offset * (c - source[0]), c + offset * (c - source[1])]
}

/// Opacity after aperture clipping plus the cut applied to the element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClippedOpacity {
    pub opacity: f64,
    pub cut: Option<ArcCut>,
}

/// Half-plane cut: element points `p` with `(p − e)·direction > keep · r`
/// are erased, `e` the element center and `r` its radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcCut {
    /// Unit vector pointing away from the source.
    pub direction: [f64; 2],
    /// Signed distance of the cut line from the center, in radii, `[-1, 1]`.
    pub keep: f64,
}

/// Aperture clipping. Opacity grows linearly with the normalized
/// source–element distance `d` with slope `1/threshold`, reaching the base
/// opacity at `d = threshold`. Beyond the threshold the far side of the
/// element is cut away: half at `1.5·threshold`, all of it at `2·threshold`.
pub fn clip_opacity(element: &GhostElement, source: &LightSource, threshold: f64) -> Result<ClippedOpacity> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::param("clip threshold must lie in (0, 1]"));
    }
    let e = element_center(element.offset, source.position);
    let (vx, vy) = (e[0] - source.position[0], e[1] - source.position[1]);
    let d = (vx * vx + vy * vy).sqrt();
    let opacity = (element.opacity * d / threshold).clamp(0.0, element.opacity.min(1.0));
    let cut = (d > threshold).then(|| ArcCut {
        direction: [vx / d, vy / d],
        keep: (1.0 - 2.0 * (d - threshold) / threshold).clamp(-1.0, 1.0),
    });
    Ok(ClippedOpacity { opacity, cut })
}

/// Area of a unit-radius disk lying beyond a chord at signed distance `h`.
pub fn segment_area_fraction(h: f64) -> f64 {
    let h = h.clamp(-1.0, 1.0);
    (h.acos() - h * (1.0 - h * h).sqrt()) / PI
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhostOptions {
    /// Aperture-clipping threshold; `None` disables clipping.
    pub clip_threshold: Option<f64>,
    /// Radiance per unit source intensity at full opacity and unit tint.
    pub gain: f64,
}

impl Default for GhostOptions {
    fn default() -> Self {
        Self {
            clip_threshold: None,
            gain: 0.03,
        }
    }
}

/// One rasterized element, radiance premultiplied by opacity.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostLayer {
    pub element_index: usize,
    pub center_px: [f64; 2],
    pub radiance: LinearRgb,
}

struct Footprint {
    center: [f64; 2],
    radius: f64,
    orientation: f64,
    shape: GhostShape,
    cut: Option<ArcCut>,
}

impl Footprint {
    fn coverage(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let d = (dx * dx + dy * dy).sqrt();
        let r = self.radius;
        let outer = (r - d + 0.5).clamp(0.0, 1.0);
        if outer == 0.0 {
            return 0.0;
        }
        let cov = match self.shape {
            GhostShape::Disk => outer,
            GhostShape::Ring { thickness } => outer * (d - r * (1.0 - thickness) + 0.5).clamp(0.0, 1.0),
            GhostShape::Arc { thickness, span } => {
                let ring = outer * (d - r * (1.0 - thickness) + 0.5).clamp(0.0, 1.0);
                let a = (dy.atan2(dx) - self.orientation).rem_euclid(TAU);
                let off = if a > PI { TAU - a } else { a };
                let excess_px = (off - span / 2.0) * d;
                ring * (0.5 - excess_px).clamp(0.0, 1.0)
            }
            GhostShape::Iris { blades } => {
                let n = blades as f64;
                let apothem = r * (PI / n).cos();
                let (s, c) = (-self.orientation).sin_cos();
                let (lx, ly) = (dx * c - dy * s, dx * s + dy * c);
                let sd = (0..blades)
                    .map(|k| {
                        let phi = TAU * (k as f64 + 0.5) / n;
                        lx * phi.cos() + ly * phi.sin() - apothem
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                (0.5 - sd).clamp(0.0, 1.0)
            }
        };
        match self.cut {
            Some(cut) => {
                let along = dx * cut.direction[0] + dy * cut.direction[1];
                cov * (cut.keep * r - along + 0.5).clamp(0.0, 1.0)
            }
            None => cov,
        }
    }

    fn rasterize(&self, tint: [f64; 3], width: usize, height: usize) -> LinearRgb {
        let mut out = LinearRgb::zeros(width, height);
        let reach = self.radius + 2.0;
        let x_lo = (self.center[0] - reach).floor().max(0.0) as usize;
        let y_lo = (self.center[1] - reach).floor().max(0.0) as usize;
        let x_hi = ((self.center[0] + reach).ceil().max(0.0) as usize).min(width);
        let y_hi = ((self.center[1] + reach).ceil().max(0.0) as usize).min(height);
        for y in y_lo..y_hi {
            for x in x_lo..x_hi {
                let cov = self.coverage(x as f64, y as f64);
                if cov > 0.0 {
                    out.data[y * width + x] = tint.map(|t| t * cov);
                }
            }
        }
        out
    }
}

/// Rasterizes every element of `chain` on the source–center axis.
pub fn place_chain(chain: &GhostChain, source: &LightSource, width: usize, height: usize) -> Result<Vec<GhostLayer>> {
    place_chain_with(chain, source, width, height, &GhostOptions::default())
}

pub fn place_chain_with(
    chain: &GhostChain,
    source: &LightSource,
    width: usize,
    height: usize,
    opts: &GhostOptions,
) -> Result<Vec<GhostLayer>> {
    source.validate()?;
    chain.validate()?;
    let s = source.position;
    let (ax, ay) = ((0.5 - s[0]) * width as f64, (0.5 - s[1]) * height as f64);
    let axis = if ax == 0.0 && ay == 0.0 {
        if !(chain.rotation_free || chain.is_rotation_symmetric()) {
            return Err(Error::DegenerateAxis);
        }
        0.0
    } else {
        ay.atan2(ax)
    };
    let centers: Vec<[f64; 2]> = chain
        .elements
        .iter()
        .map(|e| {
            let n = element_center(e.offset, s);
            [n[0] * width as f64, n[1] * height as f64]
        })
        .collect();
    place_at(chain, source, &centers, axis, width, height, opts)
}

/// Scatters the chain's elements uniformly over the frame, ignoring the
/// source axis. Baseline for datasets without the centrosymmetry prior.
pub fn place_chain_random(
    chain: &GhostChain,
    source: &LightSource,
    width: usize,
    height: usize,
    seed: u64,
    opts: &GhostOptions,
) -> Result<Vec<GhostLayer>> {
    source.validate()?;
    chain.validate()?;
    let mut rng = rng::stream(seed, Stream::Ghosts);
    let centers: Vec<[f64; 2]> = chain
        .elements
        .iter()
        .map(|_| [rng.random::<f64>() * width as f64, rng.random::<f64>() * height as f64])
        .collect();
    let axis = rng.random::<f64>() * TAU;
    place_at(chain, source, &centers, axis, width, height, opts)
}

fn place_at(
    chain: &GhostChain,
    source: &LightSource,
    centers: &[[f64; 2]],
    axis: f64,
    width: usize,
    height: usize,
    opts: &GhostOptions,
) -> Result<Vec<GhostLayer>> {
    let scale = width.min(height) as f64;
    chain
        .elements
        .iter()
        .zip(centers)
        .enumerate()
        .map(|(i, (e, &center))| {
            let (opacity, cut) = match opts.clip_threshold {
                Some(t) => {
                    let c = clip_opacity(e, source, t)?;
                    (c.opacity, c.cut)
                }
                None => (e.opacity, None),
            };
            let fp = Footprint {
                center,
                radius: e.radius * scale,
                orientation: axis + chain.rotation,
                shape: e.shape,
                cut,
            };
            let k = opts.gain * source.intensity * opacity;
            Ok(GhostLayer {
                element_index: i,
                center_px: center,
                radiance: fp.rasterize(e.color.map(|c| c * k), width, height),
            })
        })
        .collect()
}

/// Turns every element shape by `angle`; placement is unaffected.
pub fn rotate_template(chain: &GhostChain, angle: f64) -> GhostChain {
    let mut out = chain.clone();
    out.rotation = (chain.rotation + angle).rem_euclid(TAU);
    out
}

/// [`rotate_template`] by an angle drawn uniformly from `[0, 2π)`.
pub fn random_rotate_template(chain: &GhostChain, seed: u64) -> GhostChain {
    let mut rng = rng::stream(seed, Stream::Ghosts);
    rotate_template(chain, rng.random::<f64>() * TAU)
}

/// Largest perpendicular distance (pixels) of `points` from the line through
/// `source_px` and `center_px`. With coincident endpoints the distance to
/// that point is used.
pub fn collinearity_deviation(points: &[[f64; 2]], source_px: [f64; 2], center_px: [f64; 2]) -> f64 {
    let (dx, dy) = (center_px[0] - source_px[0], center_px[1] - source_px[1]);
    let len = (dx * dx + dy * dy).sqrt();
    points
        .iter()
        .map(|p| {
            let (px, py) = (p[0] - source_px[0], p[1] - source_px[1]);
            if len < 1e-12 {
                (px * px + py * py).sqrt()
            } else {
                (px * dy - py * dx).abs() / len
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(offset: f64, radius: f64) -> GhostElement {
        GhostElement {
            offset,
            radius,
            color: [1.0, 1.0, 1.0],
            opacity: 1.0,
            shape: GhostShape::Disk,
        }
    }

    fn chain(elements: Vec<GhostElement>) -> GhostChain {
        GhostChain {
            template_id: "test".into(),
            elements,
            rotation_free: false,
            rotation: 0.0,
        }
    }

    #[test]
    fn bundled_library_has_ten_chains() {
        let t = builtin_templates();
        assert_eq!(t.len(), 10);
        for c in &t {
            assert_eq!(c.rotation_free, c.is_rotation_symmetric(), "{}", c.template_id);
        }
    }

    #[test]
    fn offset_one_lands_on_mirror_point() {
        let c = element_center(1.0, [0.75, 0.25]);
        assert!((c[0] - 0.25).abs() < 1e-15 && (c[1] - 0.75).abs() < 1e-15);
        assert_eq!(element_center(-1.0, [0.75, 0.25]), [0.75, 0.25]);
    }

    #[test]
    fn centered_source_collapses_symmetric_chain() {
        let src = LightSource::point([0.5, 0.5], 1.0);
        let layers = place_chain(&chain(vec![disk(0.5, 0.05), disk(1.3, 0.02)]), &src, 64, 64).unwrap();
        for l in &layers {
            assert_eq!(l.center_px, [32.0, 32.0]);
        }
    }

    #[test]
    fn centered_source_rejects_oriented_chain() {
        let src = LightSource::point([0.5, 0.5], 1.0);
        let mut c = chain(vec![GhostElement {
            shape: GhostShape::Iris { blades: 6 },
            ..disk(1.0, 0.05)
        }]);
        assert!(matches!(place_chain(&c, &src, 64, 64), Err(Error::DegenerateAxis)));
        c.rotation_free = true;
        assert!(place_chain(&c, &src, 64, 64).is_ok());
    }

    #[test]
    fn clip_rule_boundaries() {
        let src = LightSource::point([0.2, 0.5], 1.0);
        // element at t = -1 coincides with the source
        let at_source = clip_opacity(&disk(-1.0, 0.05), &src, 0.5).unwrap();
        assert_eq!(at_source.opacity, 0.0);
        assert!(at_source.cut.is_none());
        // |1 + t| · 0.3 = 0.5  →  t = 2/3
        let mut e = disk(2.0 / 3.0, 0.05);
        e.opacity = 0.8;
        let at_threshold = clip_opacity(&e, &src, 0.5).unwrap();
        assert!((at_threshold.opacity - 0.8).abs() < 1e-12);
        assert!(at_threshold.cut.is_none() || at_threshold.cut.unwrap().keep >= 1.0 - 1e-12);
        let half = clip_opacity(&disk(1.5, 0.05), &src, 0.3).unwrap();
        // d = 2.5 · 0.3 = 0.75 = 2.5 × threshold → fully cut
        assert_eq!(half.cut.unwrap().keep, -1.0);
        assert!(clip_opacity(&e, &src, 0.0).is_err());
    }

    #[test]
    fn segment_area_known_values() {
        assert!((segment_area_fraction(0.0) - 0.5).abs() < 1e-15);
        assert!(segment_area_fraction(1.0).abs() < 1e-15);
        assert!((segment_area_fraction(-1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_and_full_turn_rotations_are_identity() {
        let t = builtin_templates();
        let c = &t[0];
        let src = LightSource::point([0.3, 0.2], 5.0);
        let base = place_chain(c, &src, 96, 96).unwrap();
        let same = place_chain(&rotate_template(c, 0.0), &src, 96, 96).unwrap();
        assert_eq!(base, same);
        let turned = place_chain(&rotate_template(c, TAU), &src, 96, 96).unwrap();
        for (a, b) in base.iter().zip(&turned) {
            for (p, q) in a.radiance.data.iter().zip(&b.radiance.data) {
                for k in 0..3 {
                    assert!((p[k] - q[k]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn half_turn_leaves_disks_unchanged() {
        let c = chain(vec![disk(0.4, 0.05), disk(1.0, 0.08)]);
        let src = LightSource::point([0.8, 0.3], 2.0);
        let base = place_chain(&c, &src, 80, 80).unwrap();
        let turned = place_chain(&random_rotate_template(&c, 5), &src, 80, 80).unwrap();
        let half = place_chain(&rotate_template(&c, PI), &src, 80, 80).unwrap();
        assert_eq!(base, half);
        assert_eq!(base, turned);
    }

    #[test]
    fn bad_template_lines_report_position() {
        let err = parse_templates("{\"template_id\":\"a\",\"elements\":[]}\n\nnot json").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let bad_opacity = r#"{"template_id":"a","elements":[{"offset":1,"radius":0.1,"color":[1,1,1],"opacity":2,"shape":{"kind":"disk"}}]}"#;
        assert!(parse_templates(bad_opacity).is_err());
    }

    #[test]
    fn collinearity_of_axis_points() {
        let pts = [[10.0, 10.0], [20.0, 20.0], [40.0, 40.0]];
        assert!(collinearity_deviation(&pts, [0.0, 0.0], [32.0, 32.0]) < 1e-12);
        assert!((collinearity_deviation(&[[0.0, 1.0]], [0.0, 0.0], [1.0, 0.0]) - 1.0).abs() < 1e-12);
    }
}
