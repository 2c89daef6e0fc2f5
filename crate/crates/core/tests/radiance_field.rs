use flareforge::radiance::{
    backward, fit_with, inject_ghost, render_view, trace, Bounds, Camera, FieldGrad, FitOptions, Ray, ViewSet,
    VoxelField,
};
use flareforge::reflective::builtin_templates;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(seed: u64) -> VoxelField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 4usize.pow(3);
    let density = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
    let color = (0..n).map(|_| [(); 3].map(|_| rng.random_range(0.05..0.95))).collect();
    VoxelField::from_parts(4, Bounds::cube(1.0), density, color).unwrap()
}

fn rays() -> Vec<Ray> {
    let dirs: [[f64; 3]; 3] = [[0.1, 0.2, 1.0], [-0.3, 0.1, 1.0], [0.05, -0.4, 1.0]];
    dirs.iter()
        .map(|d| {
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let d = d.map(|v| v / n);
            let o = [0.05, -0.1, -3.0];
            let (t0, t1) = Bounds::cube(1.0).intersect(o, d).unwrap();
            Ray::new(o, d, t0, t1).unwrap()
        })
        .collect()
}

const TARGET: [f64; 3] = [0.3, 0.6, 0.2];
const SAMPLES: usize = 24;

fn loss(field: &VoxelField) -> f64 {
    rays()
        .iter()
        .map(|r| {
            let c = trace(field, r, SAMPLES).unwrap().rgb();
            (0..3).map(|k| (c[k] - TARGET[k]).powi(2)).sum::<f64>()
        })
        .sum()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

#[test]
fn analytic_gradients_match_central_differences() {
    let field = random_field(9);
    let mut grad = FieldGrad::zeros(64);
    for r in rays() {
        let c = trace(&field, &r, SAMPLES).unwrap().rgb();
        let dl = [0, 1, 2].map(|k| 2.0 * (c[k] - TARGET[k]));
        backward(&field, &r, SAMPLES, dl, &mut grad).unwrap();
    }
    let eps = 1e-3;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for v in 0..64 {
        let perturb = |dv: f64, ch: Option<usize>| {
            let mut d = field.density().to_vec();
            let mut c = field.color().to_vec();
            match ch {
                None => d[v] += dv,
                Some(k) => c[v][k] += dv,
            }
            VoxelField::from_parts(4, field.bounds(), d, c).unwrap()
        };
        let fd = (loss(&perturb(eps, None)) - loss(&perturb(-eps, None))) / (2.0 * eps);
        if grad.density[v].abs() > 1e-6 || fd.abs() > 1e-6 {
            worst = worst.max(rel_err(grad.density[v], fd));
            checked += 1;
        }
        for k in 0..3 {
            let fd = (loss(&perturb(eps, Some(k))) - loss(&perturb(-eps, Some(k)))) / (2.0 * eps);
            if grad.color[v][k].abs() > 1e-6 || fd.abs() > 1e-6 {
                worst = worst.max(rel_err(grad.color[v][k], fd));
                checked += 1;
            }
        }
    }
    assert!(checked > 50, "only {checked} non-zero gradients");
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn alpha_weights_are_a_partition_of_unity() {
    for seed in 0..10 {
        let field = random_field(seed);
        for r in rays() {
            for n in [2, 7, 64, 300] {
                let t = trace(&field, &r, n).unwrap();
                let total: f64 = t.weights.iter().sum::<f64>() + t.final_transmittance();
                assert!((total - 1.0).abs() < 1e-12, "{total}");
            }
        }
    }
}

fn small_cameras(n: usize) -> Vec<Camera> {
    (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            Camera::look_at([3.0 * a.cos(), 0.7, 3.0 * a.sin()], [0.0; 3], [0.0, 1.0, 0.0], 0.9, 16, 16).unwrap()
        })
        .collect()
}

#[test]
fn empty_scene_fits_to_empty_field() {
    let empty = VoxelField::empty(8, Bounds::cube(1.0)).unwrap();
    let views = small_cameras(8).iter().map(|c| render_view(&empty, c, 16).unwrap()).collect();
    let opts = FitOptions {
        iterations: 60,
        res: 8,
        samples: 16,
        ..FitOptions::default()
    };
    let (field, report) = fit_with(&ViewSet::new(views).unwrap(), &opts).unwrap();
    assert!(field.max_density() < 1e-2, "max density {}", field.max_density());
    assert!(report.final_loss < report.loss[0]);
}

#[test]
fn too_few_views_rejected() {
    let empty = VoxelField::empty(4, Bounds::cube(1.0)).unwrap();
    let views = small_cameras(7).iter().map(|c| render_view(&empty, c, 4).unwrap()).collect();
    assert!(ViewSet::new(views).is_err());
}

#[test]
fn non_finite_loss_is_reported_as_divergence() {
    let field = VoxelField::from_fn(4, Bounds::cube(1.0), |_| (1.0, [0.8; 3])).unwrap();
    let mut views: Vec<_> = small_cameras(8).iter().map(|c| render_view(&field, c, 8).unwrap()).collect();
    views[3].image[40] = [f64::NAN; 3];
    let opts = FitOptions {
        iterations: 5,
        res: 4,
        samples: 8,
        ..FitOptions::default()
    };
    let err = fit_with(&ViewSet::new(views).unwrap(), &opts).unwrap_err();
    assert!(matches!(err, flareforge::Error::Divergence { iteration: 0, .. }), "{err}");
}

fn gray_view(cam: &Camera) -> flareforge::radiance::View {
    let field = VoxelField::from_fn(4, Bounds::cube(1.0), |_| (0.5, [0.4; 3])).unwrap();
    render_view(&field, cam, 8).unwrap()
}

#[test]
fn zero_opacity_ghost_leaves_view_unchanged() {
    let cam = Camera::look_at([0.0, 0.0, -3.0], [0.0; 3], [0.0, 1.0, 0.0], 0.9, 32, 32).unwrap();
    let view = gray_view(&cam);
    let mut chain = builtin_templates()[0].clone();
    chain.elements.iter_mut().for_each(|e| e.opacity = 0.0);
    let out = inject_ghost(&view, [0.3, 0.2, 0.0], &chain).unwrap();
    assert_eq!(out.image, view.image);
    assert!(out.ghost.unwrap().mask.is_empty());
}

#[test]
fn ghost_on_axis_source_sits_at_center() {
    let cam = Camera::look_at([0.0, 0.0, -3.0], [0.0; 3], [0.0, 1.0, 0.0], 0.9, 32, 32).unwrap();
    let chain = builtin_templates().into_iter().find(|c| !c.rotation_free).unwrap();
    let out = inject_ghost(&gray_view(&cam), [0.0; 3], &chain).unwrap();
    for c in out.ghost.unwrap().centers_px {
        assert!((c[0] - 16.0).abs() < 1e-9 && (c[1] - 16.0).abs() < 1e-9);
    }
}

#[test]
fn ghost_moves_against_the_source() {
    // translating the camera sideways shifts the source image by δ; the
    // offset-1 element is the point reflection and shifts by −δ
    let chain = builtin_templates().into_iter().find(|c| c.template_id == "disk-pair").unwrap();
    let light = [0.2, 0.1, 0.0];
    let a = Camera::look_at([0.0, 0.0, -3.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0], 0.9, 64, 64).unwrap();
    let b = Camera::look_at([0.1, 0.0, -3.0], [0.1, 0.0, 0.0], [0.0, 1.0, 0.0], 0.9, 64, 64).unwrap();
    let ga = inject_ghost(&gray_view(&a), light, &chain).unwrap().ghost.unwrap();
    let gb = inject_ghost(&gray_view(&b), light, &chain).unwrap().ghost.unwrap();
    let delta = [gb.source_px[0] - ga.source_px[0], gb.source_px[1] - ga.source_px[1]];
    assert!(delta[0].abs() > 1.0);
    let i = chain.elements.iter().position(|e| e.offset == 1.0).unwrap();
    let moved = [gb.centers_px[i][0] - ga.centers_px[i][0], gb.centers_px[i][1] - ga.centers_px[i][1]];
    assert!((moved[0] + delta[0]).abs() < 1e-9 && (moved[1] + delta[1]).abs() < 1e-9);
}

#[test]
fn ghost_free_views_are_reproduced() {
    use flareforge::metrics::psnr;
    use flareforge::radiance::{orbit_cameras, three_box_scene};
    let truth = three_box_scene(16).unwrap();
    let cams = orbit_cameras(16, 32, 55f64.to_radians(), 1).unwrap();
    let views: Vec<_> = cams.iter().map(|c| render_view(&truth, c, 32).unwrap()).collect();
    let opts = FitOptions {
        res: 16,
        samples: 32,
        ..FitOptions::default()
    };
    let (field, _) = fit_with(&ViewSet::new(views.clone()).unwrap(), &opts).unwrap();
    for (cam, v) in cams.iter().zip(&views) {
        let again = render_view(&field, cam, 32).unwrap();
        let p = psnr(&again.to_rgb8(), &v.to_rgb8(), None).unwrap();
        assert!(p > 30.0, "PSNR {p:.2} dB");
    }
}
