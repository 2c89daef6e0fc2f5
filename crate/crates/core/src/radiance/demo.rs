use std::time::Instant;

use image::RgbImage;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::camera::{inject_ghost, render_view, Camera, View, ViewSet};
use super::field::{Bounds, VoxelField};
use super::fit::{fit_with, FitOptions};
use crate::error::{Error, Result};
use crate::metrics::psnr;
use crate::raster::Mask;
use crate::reflective::builtin_templates;
use crate::rng::{self, Stream};

/// Three colored boxes in `[-1, 1]³`, everything else empty.
pub fn three_box_scene(res: usize) -> Result<VoxelField> {
    let boxes = [
        ([-0.4, -0.35, -0.3], [0.35, 0.3, 0.3], [0.85, 0.25, 0.2]),
        ([0.4, -0.2, 0.35], [0.25, 0.45, 0.25], [0.2, 0.6, 0.9]),
        ([0.05, 0.45, -0.1], [0.3, 0.15, 0.3], [0.95, 0.85, 0.3]),
    ];
    VoxelField::from_fn(res, Bounds::cube(1.0), |p| {
        for (c, h, col) in boxes {
            if (0..3).all(|a| (p[a] - c[a]).abs() <= h[a]) {
                return (20.0, col);
            }
        }
        (0.0, [0.0; 3])
    })
}

/// `n` cameras on a jittered orbit of radius 3.5, each aimed at its own
/// point within 0.5 of the origin so the optical axes do not share a
/// common point.
pub fn orbit_cameras(n: usize, size: usize, fov_y: f64, seed: u64) -> Result<Vec<Camera>> {
    let mut rng = rng::stream(seed, Stream::Views);
    (0..n)
        .map(|i| {
            let az = std::f64::consts::TAU * (i as f64 + 0.3 * rng.random::<f64>()) / n as f64;
            let el = (-20.0 + 50.0 * rng.random::<f64>()).to_radians();
            let r = 3.5;
            let eye = [r * el.cos() * az.cos(), r * el.sin(), r * el.cos() * az.sin()];
            let target = [(); 3].map(|_| rng.random_range(-0.5..0.5));
            Camera::look_at(eye, target, [0.0, 1.0, 0.0], fov_y, size, size)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionConfig {
    pub views: usize,
    pub image_size: usize,
    pub fov_y: f64,
    /// World position of the light whose ghosts are injected.
    pub light: [f64; 3],
    /// Built-in ghost template.
    pub template_id: String,
    pub seed: u64,
    pub fit: FitOptions,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        Self {
            views: 16,
            image_size: 64,
            fov_y: 55f64.to_radians(),
            light: [0.35, -0.3, 0.25],
            template_id: "iris6-trail".to_string(),
            seed: 5,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionReport {
    pub views: usize,
    pub image_size: usize,
    pub grid: usize,
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Mean over views of the ghost-region MSE of the injected views
    /// against the clean renders (linear RGB).
    pub injected_ghost_mse: f64,
    /// Smallest per-view injected ghost-region MSE.
    pub min_injected_ghost_mse: f64,
    /// Mean over views of the ghost-region MSE of the fitted renders.
    pub fitted_ghost_mse: f64,
    pub ghost_ratio: f64,
    /// 8-bit PSNR of fitted vs clean renders outside the ghost masks.
    pub background_psnr_db: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RejectionOutcome {
    pub report: RejectionReport,
    pub field: VoxelField,
    pub clean: Vec<View>,
    pub injected: Vec<View>,
    pub fitted: Vec<View>,
}

fn masked_mse(a: &View, b: &View, mask: &Mask) -> f64 {
    let mut sse = 0.0;
    for (i, m) in mask.data.iter().enumerate() {
        if *m {
            for k in 0..3 {
                sse += (a.image[i][k] - b.image[i][k]).powi(2);
            }
        }
    }
    sse / (3 * mask.count()) as f64
}

fn stack(views: &[View]) -> RgbImage {
    let (w, h) = (views[0].camera.width as u32, views[0].camera.height as u32);
    let mut out = RgbImage::new(w, h * views.len() as u32);
    for (i, v) in views.iter().enumerate() {
        image::imageops::replace(&mut out, &v.to_rgb8(), 0, (i as u32 * h) as i64);
    }
    out
}

/// Renders clean views of the three-box scene, injects one centrosymmetric
/// ghost chain per view, fits a field to the ghosted views and measures
/// how much of the ghosts survives in the re-rendered views.
pub fn run_rejection(cfg: &RejectionConfig) -> Result<RejectionOutcome> {
    let start = Instant::now();
    let chain = builtin_templates()
        .into_iter()
        .find(|c| c.template_id == cfg.template_id)
        .ok_or_else(|| Error::param(format!("unknown ghost template {:?}", cfg.template_id)))?;
    let truth = three_box_scene(cfg.fit.res)?;
    let cameras = orbit_cameras(cfg.views, cfg.image_size, cfg.fov_y, cfg.seed)?;
    let samples = cfg.fit.samples;
    let clean: Vec<View> = cameras.iter().map(|c| render_view(&truth, c, samples)).collect::<Result<_>>()?;
    let injected: Vec<View> = clean.iter().map(|v| inject_ghost(v, cfg.light, &chain)).collect::<Result<_>>()?;
    let set = ViewSet::new(injected.clone())?;
    let (field, fit_report) = fit_with(&set, &cfg.fit)?;
    let fitted: Vec<View> = cameras.iter().map(|c| render_view(&field, c, samples)).collect::<Result<_>>()?;

    let mut injected_mse = Vec::new();
    let mut fitted_mse = Vec::new();
    let (w, h) = (cfg.image_size, cfg.image_size);
    let mut background = Mask::empty(w, h * cfg.views);
    for (i, ((c, inj), fit)) in clean.iter().zip(&injected).zip(&fitted).enumerate() {
        let mask = inj.ghost.as_ref().map(|g| g.mask.clone()).unwrap_or_else(|| Mask::empty(w, h));
        for (j, m) in mask.data.iter().enumerate() {
            background.data[i * w * h + j] = !m;
        }
        if !mask.is_empty() {
            injected_mse.push(masked_mse(inj, c, &mask));
            fitted_mse.push(masked_mse(fit, c, &mask));
        }
    }
    if injected_mse.is_empty() {
        return Err(Error::param("the light is outside every view; no ghost was injected"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let injected_ghost_mse = mean(&injected_mse);
    let fitted_ghost_mse = mean(&fitted_mse);
    let report = RejectionReport {
        views: cfg.views,
        image_size: cfg.image_size,
        grid: cfg.fit.res,
        iterations: cfg.fit.iterations,
        initial_loss: fit_report.loss.first().copied().unwrap_or(fit_report.final_loss),
        final_loss: fit_report.final_loss,
        injected_ghost_mse,
        min_injected_ghost_mse: injected_mse.iter().copied().fold(f64::INFINITY, f64::min),
        fitted_ghost_mse,
        ghost_ratio: fitted_ghost_mse / injected_ghost_mse,
        background_psnr_db: psnr(&stack(&fitted), &stack(&clean), Some(&background))?,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RejectionOutcome {
        report,
        field,
        clean,
        injected,
        fitted,
    })
}
