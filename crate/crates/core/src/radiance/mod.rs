//! Voxel radiance field with a differentiable volume renderer.
//!
//! Density and color live on an `R³` grid of voxel centers and are read
//! with trilinear interpolation. Rays are integrated with midpoint samples
//! and front-to-back alpha compositing; [`fit`] recovers a field from
//! posed views by plain gradient descent. Color is view independent.

mod camera;
mod demo;
mod field;
mod fit;
mod render;

pub use camera::{inject_ghost, render_view, Camera, GhostInjection, View, ViewSet, MIN_VIEWS};
pub use demo::{orbit_cameras, run_rejection, three_box_scene, RejectionConfig, RejectionOutcome, RejectionReport};
pub use field::{sigmoid, softplus, Bounds, FieldParams, VoxelField};
pub use fit::{fit, fit_with, FitOptions, FitReport};
pub use render::{backward, render, trace, FieldGrad, Rendered, Trace};

use crate::error::{Error, Result};

/// `r(t) = o + t·d` for `t ∈ [t_near, t_far]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    origin: [f64; 3],
    direction: [f64; 3],
    t_near: f64,
    t_far: f64,
}

impl Ray {
    pub fn new(origin: [f64; 3], direction: [f64; 3], t_near: f64, t_far: f64) -> Result<Self> {
        let norm = dot(direction, direction).sqrt();
        if !origin.iter().chain(&direction).all(|v| v.is_finite()) || (norm - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("degenerate ray: |d| = {norm}")));
        }
        if !(t_near.is_finite() && t_far.is_finite() && t_near < t_far) {
            return Err(Error::param(format!("degenerate ray: t_near {t_near} >= t_far {t_far}")));
        }
        Ok(Self { origin, direction, t_near, t_far })
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    pub fn t_near(&self) -> f64 {
        self.t_near
    }

    pub fn t_far(&self) -> f64 {
        self.t_far
    }

    pub fn at(&self, t: f64) -> [f64; 3] {
        add(self.origin, scale(self.direction, t))
    }
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn normalize(a: [f64; 3]) -> [f64; 3] {
    scale(a, 1.0 / dot(a, a).sqrt())
}
