use super::field::VoxelField;
use super::Ray;
use crate::error::{Error, Result};

/// Per-sample quantities of one integrated ray.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// Sample midpoints.
    pub t: Vec<f64>,
    /// Spacing between consecutive samples.
    pub delta: f64,
    pub sigma: Vec<f64>,
    pub color: Vec<[f64; 3]>,
    /// `T_i` before each sample, plus `T(t_far)` as the last entry.
    pub transmittance: Vec<f64>,
    /// `T_i (1 − exp(−σ_i δ))`.
    pub weights: Vec<f64>,
}

impl Trace {
    pub fn rgb(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for (w, col) in self.weights.iter().zip(&self.color) {
            for k in 0..3 {
                c[k] += w * col[k];
            }
        }
        c
    }

    pub fn final_transmittance(&self) -> f64 {
        *self.transmittance.last().expect("at least one entry")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rendered {
    pub rgb: [f64; 3],
    /// Light passing the whole segment.
    pub transmittance: f64,
}

fn check_samples(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::param("need at least 2 samples per ray"));
    }
    Ok(())
}

pub fn trace(field: &VoxelField, ray: &Ray, n: usize) -> Result<Trace> {
    check_samples(n)?;
    let delta = (ray.t_far() - ray.t_near()) / n as f64;
    let mut out = Trace {
        t: Vec::with_capacity(n),
        delta,
        sigma: Vec::with_capacity(n),
        color: Vec::with_capacity(n),
        transmittance: Vec::with_capacity(n + 1),
        weights: Vec::with_capacity(n),
    };
    let mut tr = 1.0;
    for i in 0..n {
        let t = ray.t_near() + (i as f64 + 0.5) * delta;
        let (s, c) = field.sample(ray.at(t));
        let alpha = -(-s * delta).exp_m1();
        out.t.push(t);
        out.sigma.push(s);
        out.color.push(c);
        out.transmittance.push(tr);
        out.weights.push(tr * alpha);
        tr *= 1.0 - alpha;
    }
    out.transmittance.push(tr);
    Ok(out)
}

pub fn render(field: &VoxelField, ray: &Ray, n: usize) -> Result<Rendered> {
    let tr = trace(field, ray, n)?;
    Ok(Rendered {
        rgb: tr.rgb(),
        transmittance: tr.final_transmittance(),
    })
}

/// Gradient buffers shaped like a field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrad {
    pub density: Vec<f64>,
    pub color: Vec<[f64; 3]>,
}

impl FieldGrad {
    pub fn zeros(voxels: usize) -> Self {
        Self {
            density: vec![0.0; voxels],
            color: vec![[0.0; 3]; voxels],
        }
    }

    pub fn add_assign(&mut self, other: &FieldGrad) {
        for (a, b) in self.density.iter_mut().zip(&other.density) {
            *a += b;
        }
        for (a, b) in self.color.iter_mut().zip(&other.color) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
    }
}

/// Renders `ray` and accumulates `∂L/∂σ` and `∂L/∂c` for every voxel into
/// `grad`, given the upstream `∂L/∂C`. Returns the rendered color.
///
/// With `w_i = T_i α_i` and `S_i = Σ_{j≥i} w_j c_j`:
/// `∂C/∂σ_i = δ (T_{i+1} c_i − S_{i+1})`, `∂C/∂c_i = w_i`.
pub fn backward(field: &VoxelField, ray: &Ray, n: usize, dl_drgb: [f64; 3], grad: &mut FieldGrad) -> Result<[f64; 3]> {
    backward_with(field, ray, n, |_| dl_drgb, grad)
}

/// [`backward`] with the upstream gradient computed from the rendered color.
pub(crate) fn backward_with(
    field: &VoxelField,
    ray: &Ray,
    n: usize,
    upstream: impl FnOnce([f64; 3]) -> [f64; 3],
    grad: &mut FieldGrad,
) -> Result<[f64; 3]> {
    check_samples(n)?;
    let delta = (ray.t_far() - ray.t_near()) / n as f64;
    let mut corners = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut after = Vec::with_capacity(n);
    let mut tr = 1.0;
    let mut rgb = [0.0; 3];
    for i in 0..n {
        let t = ray.t_near() + (i as f64 + 0.5) * delta;
        let c = field.corners(ray.at(t));
        let (s, col) = match &c {
            Some((idx, w)) => field.gather(idx, w),
            None => (0.0, [0.0; 3]),
        };
        let alpha = -(-s * delta).exp_m1();
        let w = tr * alpha;
        tr *= 1.0 - alpha;
        for k in 0..3 {
            rgb[k] += w * col[k];
        }
        corners.push(c);
        colors.push(col);
        weights.push(w);
        after.push(tr);
    }
    let dl_drgb = upstream(rgb);
    let mut suffix = [0.0; 3];
    for i in (0..n).rev() {
        let col = colors[i];
        let mut ds = 0.0;
        for k in 0..3 {
            ds += dl_drgb[k] * delta * (after[i] * col[k] - suffix[k]);
            suffix[k] += weights[i] * col[k];
        }
        if let Some((idx, w)) = &corners[i] {
            for j in 0..8 {
                let v = idx[j];
                grad.density[v] += ds * w[j];
                let wc = weights[i] * w[j];
                for k in 0..3 {
                    grad.color[v][k] += dl_drgb[k] * wc;
                }
            }
        }
    }
    Ok(rgb)
}
