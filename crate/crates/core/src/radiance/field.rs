use crate::error::{Error, Result};

/// Axis-aligned world box covered by the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Bounds {
    pub fn cube(half: f64) -> Self {
        Self {
            min: [-half; 3],
            max: [half; 3],
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    /// Entry and exit distances of `o + t·d` for `t ≥ 0`, if it hits.
    pub fn intersect(&self, o: [f64; 3], d: [f64; 3]) -> Option<(f64, f64)> {
        let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
        for a in 0..3 {
            if d[a].abs() < 1e-15 {
                if o[a] < self.min[a] || o[a] > self.max[a] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d[a];
            let (mut lo, mut hi) = ((self.min[a] - o[a]) * inv, (self.max[a] - o[a]) * inv);
            if lo > hi {
                std::mem::swap(&mut lo, &mut hi);
            }
            t0 = t0.max(lo);
            t1 = t1.min(hi);
        }
        (t0 < t1).then_some((t0, t1))
    }

    fn is_valid(&self) -> bool {
        (0..3).all(|a| self.min[a].is_finite() && self.max[a].is_finite() && self.min[a] < self.max[a])
    }
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Density (per unit length) and RGB color at voxel centers.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelField {
    res: usize,
    bounds: Bounds,
    density: Vec<f64>,
    color: Vec<[f64; 3]>,
}

impl VoxelField {
    pub fn empty(res: usize, bounds: Bounds) -> Result<Self> {
        Self::from_parts(res, bounds, vec![0.0; res.pow(3)], vec![[0.0; 3]; res.pow(3)])
    }

    /// Grid of `res³` voxels, index `(z·res + y)·res + x`.
    pub fn from_parts(res: usize, bounds: Bounds, density: Vec<f64>, color: Vec<[f64; 3]>) -> Result<Self> {
        if res < 2 {
            return Err(Error::param("grid resolution must be >= 2"));
        }
        if !bounds.is_valid() {
            return Err(Error::param("bounds must be finite with min < max"));
        }
        let n = res.pow(3);
        if density.len() != n || color.len() != n {
            return Err(Error::param(format!("expected {n} voxels")));
        }
        if density.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::param("density must be finite and >= 0"));
        }
        if color.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::param("colors must lie in [0, 1]"));
        }
        Ok(Self { res, bounds, density, color })
    }

    /// Samples `f(center)` at every voxel.
    pub fn from_fn(res: usize, bounds: Bounds, f: impl Fn([f64; 3]) -> (f64, [f64; 3])) -> Result<Self> {
        let mut density = Vec::with_capacity(res.pow(3));
        let mut color = Vec::with_capacity(res.pow(3));
        for z in 0..res {
            for y in 0..res {
                for x in 0..res {
                    let (s, c) = f(voxel_center(res, &bounds, [x, y, z]));
                    density.push(s);
                    color.push(c);
                }
            }
        }
        Self::from_parts(res, bounds, density, color)
    }

    pub fn res(&self) -> usize {
        self.res
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn color(&self) -> &[[f64; 3]] {
        &self.color
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    pub fn voxel_center(&self, idx: [usize; 3]) -> [f64; 3] {
        voxel_center(self.res, &self.bounds, idx)
    }

    /// The eight voxels around `p` and their trilinear weights. Outside the
    /// bounds the field is empty; between the outermost centers and the
    /// bounds it is held constant.
    pub(crate) fn corners(&self, p: [f64; 3]) -> Option<([usize; 8], [f64; 8])> {
        if !self.bounds.contains(p) {
            return None;
        }
        let r = self.res;
        let mut i0 = [0usize; 3];
        let mut f = [0.0; 3];
        for a in 0..3 {
            let h = (self.bounds.max[a] - self.bounds.min[a]) / r as f64;
            let g = ((p[a] - self.bounds.min[a]) / h - 0.5).clamp(0.0, (r - 1) as f64);
            let i = (g.floor() as usize).min(r - 2);
            i0[a] = i;
            f[a] = g - i as f64;
        }
        let mut idx = [0usize; 8];
        let mut w = [0.0; 8];
        for k in 0..8 {
            let (dx, dy, dz) = (k & 1, (k >> 1) & 1, (k >> 2) & 1);
            idx[k] = ((i0[2] + dz) * r + i0[1] + dy) * r + i0[0] + dx;
            let wx = if dx == 1 { f[0] } else { 1.0 - f[0] };
            let wy = if dy == 1 { f[1] } else { 1.0 - f[1] };
            let wz = if dz == 1 { f[2] } else { 1.0 - f[2] };
            w[k] = wx * wy * wz;
        }
        Some((idx, w))
    }

    /// Interpolated `(σ, c)` at `p`.
    pub fn sample(&self, p: [f64; 3]) -> (f64, [f64; 3]) {
        match self.corners(p) {
            None => (0.0, [0.0; 3]),
            Some((idx, w)) => self.gather(&idx, &w),
        }
    }

    pub(crate) fn gather(&self, idx: &[usize; 8], w: &[f64; 8]) -> (f64, [f64; 3]) {
        let mut s = 0.0;
        let mut c = [0.0; 3];
        for k in 0..8 {
            s += w[k] * self.density[idx[k]];
            let v = self.color[idx[k]];
            c[0] += w[k] * v[0];
            c[1] += w[k] * v[1];
            c[2] += w[k] * v[2];
        }
        (s, c)
    }
}

fn voxel_center(res: usize, b: &Bounds, idx: [usize; 3]) -> [f64; 3] {
    let mut p = [0.0; 3];
    for a in 0..3 {
        let h = (b.max[a] - b.min[a]) / res as f64;
        p[a] = b.min[a] + (idx[a] as f64 + 0.5) * h;
    }
    p
}

/// Unconstrained parameters: `σ = softplus(ρ)`, `c = sigmoid(κ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldParams {
    pub res: usize,
    pub bounds: Bounds,
    pub density_raw: Vec<f64>,
    pub color_raw: Vec<[f64; 3]>,
}

impl FieldParams {
    /// Uniform start at density `sigma` and gray level `gray`.
    pub fn uniform(res: usize, bounds: Bounds, sigma: f64, gray: f64) -> Result<Self> {
        if !(sigma > 0.0 && gray > 0.0 && gray < 1.0) {
            return Err(Error::param("initial density must be > 0 and gray in (0, 1)"));
        }
        let n = res.pow(3);
        Ok(Self {
            res,
            bounds,
            density_raw: vec![softplus_inv(sigma); n],
            color_raw: vec![[logit(gray); 3]; n],
        })
    }

    pub fn to_field(&self) -> Result<VoxelField> {
        VoxelField::from_parts(
            self.res,
            self.bounds,
            self.density_raw.iter().map(|&r| softplus(r)).collect(),
            self.color_raw.iter().map(|c| c.map(sigmoid)).collect(),
        )
    }
}
