use image::RgbImage;

use super::field::VoxelField;
use super::render::render;
use super::{cross, dot, normalize, sub, Ray};
use crate::error::{Error, Result};
use crate::raster::Mask;
use crate::reflective::{place_chain_with, GhostChain, GhostOptions};
use crate::scene::LightSource;

/// Fewer views cannot separate transient ghosts from the scene.
pub const MIN_VIEWS: usize = 8;

/// Pinhole camera. Pixel `(x, y)` has its center at image coordinate
/// `(x, y)`; the principal point is `(W/2, H/2)` and `y` grows downward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub position: [f64; 3],
    forward: [f64; 3],
    right: [f64; 3],
    down: [f64; 3],
    pub focal_px: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    /// Camera at `eye` looking at `target` with vertical field of view `fov_y`.
    pub fn look_at(eye: [f64; 3], target: [f64; 3], up: [f64; 3], fov_y: f64, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || !(fov_y > 0.0 && fov_y < std::f64::consts::PI) {
            return Err(Error::param("camera needs a positive size and fov in (0, π)"));
        }
        let f = sub(target, eye);
        if dot(f, f) < 1e-24 {
            return Err(Error::param("camera eye and target coincide"));
        }
        let forward = normalize(f);
        let r = cross(forward, up);
        if dot(r, r) < 1e-18 {
            return Err(Error::param("up vector parallel to the view direction"));
        }
        let right = normalize(r);
        let down = cross(forward, right);
        Ok(Self {
            position: eye,
            forward,
            right,
            down,
            focal_px: height as f64 / 2.0 / (fov_y / 2.0).tan(),
            width,
            height,
        })
    }

    fn principal(&self) -> [f64; 2] {
        [(self.width / 2) as f64, (self.height / 2) as f64]
    }

    /// Unit direction through image point `(x, y)`.
    pub fn direction(&self, x: f64, y: f64) -> [f64; 3] {
        let [cx, cy] = self.principal();
        let (u, v) = ((x - cx) / self.focal_px, (y - cy) / self.focal_px);
        normalize([
            self.forward[0] + u * self.right[0] + v * self.down[0],
            self.forward[1] + u * self.right[1] + v * self.down[1],
            self.forward[2] + u * self.right[2] + v * self.down[2],
        ])
    }

    /// Ray through pixel `(x, y)` clipped to `field`'s bounds.
    pub fn ray(&self, x: usize, y: usize, field_bounds: &super::Bounds) -> Option<Ray> {
        let d = self.direction(x as f64, y as f64);
        let (t0, t1) = field_bounds.intersect(self.position, d)?;
        Ray::new(self.position, d, t0, t1).ok()
    }

    /// Image coordinates of a world point in front of the camera.
    pub fn project(&self, p: [f64; 3]) -> Option<[f64; 2]> {
        let v = sub(p, self.position);
        let z = dot(v, self.forward);
        if z <= 1e-9 {
            return None;
        }
        let [cx, cy] = self.principal();
        Some([cx + self.focal_px * dot(v, self.right) / z, cy + self.focal_px * dot(v, self.down) / z])
    }
}

/// Ghost composited onto one view.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostInjection {
    pub template_id: String,
    pub source_px: [f64; 2],
    pub centers_px: Vec<[f64; 2]>,
    pub mask: Mask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub camera: Camera,
    /// Rendered RGB in `[0, 1]`, row major. Field colors are display
    /// values, so no transfer curve is applied on output.
    pub image: Vec<[f64; 3]>,
    pub ghost: Option<GhostInjection>,
}

impl View {
    /// Quantizes the display-referred values to 8 bits.
    pub fn to_rgb8(&self) -> RgbImage {
        let w = self.camera.width;
        RgbImage::from_fn(w as u32, self.camera.height as u32, |x, y| {
            image::Rgb(self.image[y as usize * w + x as usize].map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewSet {
    pub views: Vec<View>,
}

impl ViewSet {
    pub fn new(views: Vec<View>) -> Result<Self> {
        if views.len() < MIN_VIEWS {
            return Err(Error::param(format!("need at least {MIN_VIEWS} views, got {}", views.len())));
        }
        for v in &views {
            if v.image.len() != v.camera.width * v.camera.height {
                return Err(Error::param("view image does not match its camera size"));
            }
        }
        Ok(Self { views })
    }
}

/// Renders every pixel of `camera`; rays missing the field stay black.
pub fn render_view(field: &VoxelField, camera: &Camera, samples: usize) -> Result<View> {
    let b = field.bounds();
    let mut image = vec![[0.0; 3]; camera.width * camera.height];
    for y in 0..camera.height {
        for x in 0..camera.width {
            if let Some(ray) = camera.ray(x, y, &b) {
                image[y * camera.width + x] = render(field, &ray, samples)?.rgb;
            }
        }
    }
    Ok(View {
        camera: *camera,
        image,
        ghost: None,
    })
}

/// Composites `chain`, placed for the projection of world point `light`,
/// over the view. Each element occludes what lies behind it ("over"
/// compositing with its opacity as alpha). A light outside the frame or
/// behind the camera leaves the view unchanged.
pub fn inject_ghost(view: &View, light: [f64; 3], chain: &GhostChain) -> Result<View> {
    let cam = &view.camera;
    let (w, h) = (cam.width, cam.height);
    let Some(px) = cam.project(light) else {
        return Ok(view.clone());
    };
    let pos = [px[0] / w as f64, px[1] / h as f64];
    if !(0.0..=1.0).contains(&pos[0]) || !(0.0..=1.0).contains(&pos[1]) {
        return Ok(view.clone());
    }
    let source = LightSource::point(pos, 1.0);
    // unit gain and intensity: layer radiance = opacity · color · coverage
    let opts = GhostOptions {
        clip_threshold: None,
        gain: 1.0,
    };
    let mut alpha_chain = chain.clone();
    alpha_chain.elements.iter_mut().for_each(|e| e.color = [1.0; 3]);
    let place = |c: &GhostChain| match place_chain_with(c, &source, w, h, &opts) {
        // on-axis source: the axis direction is arbitrary
        Err(Error::DegenerateAxis) => {
            let mut free = c.clone();
            free.rotation_free = true;
            place_chain_with(&free, &source, w, h, &opts)
        }
        r => r,
    };
    let colored = place(chain)?;
    let alphas = place(&alpha_chain)?;
    let mut image = view.image.clone();
    let mut mask = Mask::empty(w, h);
    for (layer, a) in colored.iter().zip(&alphas) {
        for i in 0..w * h {
            let alpha = a.radiance.data[i][0].clamp(0.0, 1.0);
            if alpha == 0.0 {
                continue;
            }
            let prem = layer.radiance.data[i];
            for k in 0..3 {
                image[i][k] = (prem[k] + (1.0 - alpha) * image[i][k]).clamp(0.0, 1.0);
            }
            if alpha > 1.0 / 255.0 {
                mask.data[i] = true;
            }
        }
    }
    Ok(View {
        camera: *cam,
        image,
        ghost: Some(GhostInjection {
            template_id: chain.template_id.clone(),
            source_px: px,
            centers_px: colored.iter().map(|l| l.center_px).collect(),
            mask,
        }),
    })
}
