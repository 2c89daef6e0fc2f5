use rayon::prelude::*;

use super::camera::ViewSet;
use super::field::{sigmoid, Bounds, FieldParams, VoxelField};
use super::render::{backward_with, FieldGrad};
use super::Ray;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub iterations: usize,
    /// Fixed gradient-descent step on the raw parameters.
    pub lr: f64,
    pub samples: usize,
    pub res: usize,
    pub bounds: Bounds,
    pub init_density: f64,
    pub init_gray: f64,
    /// Rays per gradient buffer; fixes the summation order.
    pub chunk_rays: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            iterations: 300,
            // the loss is a per-pixel mean, so each voxel sees a small share
            lr: 1.0e6,
            samples: 48,
            res: 32,
            bounds: Bounds::cube(1.0),
            init_density: 0.1,
            init_gray: 0.5,
            chunk_rays: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Loss before each update.
    pub loss: Vec<f64>,
    pub final_loss: f64,
}

/// [`fit_with`] with default options apart from the schedule.
pub fn fit(views: &ViewSet, iterations: usize, lr: f64) -> Result<VoxelField> {
    let opts = FitOptions {
        iterations,
        lr,
        ..FitOptions::default()
    };
    fit_with(views, &opts).map(|(f, _)| f)
}

struct Batch {
    rays: Vec<(Ray, [f64; 3])>,
    /// Loss of pixels whose rays miss the grid (rendered black).
    miss_sse: f64,
    pixels: usize,
}

fn collect_rays(views: &ViewSet, bounds: &Bounds) -> Batch {
    let mut rays = Vec::new();
    let mut miss_sse = 0.0;
    let mut pixels = 0;
    for v in &views.views {
        let cam = &v.camera;
        for y in 0..cam.height {
            for x in 0..cam.width {
                let target = v.image[y * cam.width + x];
                pixels += 1;
                match cam.ray(x, y, bounds) {
                    Some(r) => rays.push((r, target)),
                    None => miss_sse += target.iter().map(|t| t * t).sum::<f64>(),
                }
            }
        }
    }
    Batch { rays, miss_sse, pixels }
}

/// Mean squared photometric error and its gradient w.r.t. voxel values.
fn loss_and_grad(field: &VoxelField, batch: &Batch, opts: &FitOptions) -> Result<(f64, FieldGrad)> {
    let norm = 1.0 / (3 * batch.pixels) as f64;
    let voxels = field.res().pow(3);
    let parts = batch
        .rays
        .par_chunks(opts.chunk_rays.max(1))
        .map(|chunk| {
            let mut g = FieldGrad::zeros(voxels);
            let mut sse = 0.0;
            for (ray, target) in chunk {
                let upstream = |c: [f64; 3]| {
                    let r = [c[0] - target[0], c[1] - target[1], c[2] - target[2]];
                    sse += r.iter().map(|v| v * v).sum::<f64>();
                    r.map(|v| 2.0 * v * norm)
                };
                backward_with(field, ray, opts.samples, upstream, &mut g)?;
            }
            Ok((sse, g))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = FieldGrad::zeros(voxels);
    let mut sse = batch.miss_sse;
    for (s, g) in &parts {
        sse += s;
        total.add_assign(g);
    }
    Ok((sse * norm, total))
}

/// Fits a field to the views by gradient descent on the mean squared
/// photometric error, through `σ = softplus(ρ)` and `c = sigmoid(κ)`.
pub fn fit_with(views: &ViewSet, opts: &FitOptions) -> Result<(VoxelField, FitReport)> {
    if opts.samples < 2 || !(opts.lr > 0.0 && opts.lr.is_finite()) {
        return Err(Error::param("fit needs >= 2 samples and a finite positive step"));
    }
    let batch = collect_rays(views, &opts.bounds);
    let mut params = FieldParams::uniform(opts.res, opts.bounds, opts.init_density, opts.init_gray)?;
    let mut history = Vec::with_capacity(opts.iterations);
    for iteration in 0..opts.iterations {
        let field = params.to_field()?;
        let (loss, grad) = loss_and_grad(&field, &batch, opts)?;
        if !loss.is_finite() {
            return Err(Error::Divergence { iteration, loss });
        }
        history.push(loss);
        for (i, rho) in params.density_raw.iter_mut().enumerate() {
            *rho -= opts.lr * grad.density[i] * sigmoid(*rho);
        }
        for (i, kappa) in params.color_raw.iter_mut().enumerate() {
            for k in 0..3 {
                let s = sigmoid(kappa[k]);
                kappa[k] -= opts.lr * grad.color[i][k] * s * (1.0 - s);
            }
        }
        if params.density_raw.iter().chain(params.color_raw.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iteration, loss: f64::NAN });
        }
    }
    let field = params.to_field()?;
    let (final_loss, _) = loss_and_grad(&field, &batch, opts)?;
    if !final_loss.is_finite() {
        return Err(Error::Divergence {
            iteration: opts.iterations,
            loss: final_loss,
        });
    }
    Ok((field, FitReport { loss: history, final_loss }))
}
