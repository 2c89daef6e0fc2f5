//! Independent oracles for the far-field kernel: closed-form box aperture,
//! Parseval, and the explicit tilted-pupil route for the shift theorem.

use flareforge::diffraction::{diffract, tilt_pupil, tilt_shift, ShiftMode, TiltSpec};
use flareforge::pupil::{contaminate, make_clean_pupil, ContaminationSpec, PupilField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn box_pupil(n: usize, k: usize) -> PupilField {
    let mut grid = vec![Complex64::default(); n * n];
    let start = n / 2 - k / 2;
    for r in start..start + k {
        for c in start..start + k {
            grid[r * n + c] = Complex64::new(1.0, 0.0);
        }
    }
    PupilField::from_parts(n, n, 5.0, 550.0, grid).unwrap()
}

/// |Σ_{m<k} exp(-i2π m q / n)| evaluated in closed form.
fn dirichlet(q: i64, k: usize, n: usize) -> f64 {
    if q.rem_euclid(n as i64) == 0 {
        return k as f64;
    }
    let x = std::f64::consts::PI * q as f64 / n as f64;
    ((k as f64 * x).sin() / x.sin()).abs()
}

#[test]
fn box_aperture_matches_dirichlet_profile() {
    let (n, k) = (256, 7);
    let kernel = diffract(&box_pupil(n, k), &[550.0], 50.0).unwrap();
    let i = kernel.intensity(0);
    let c = n / 2;
    let mut worst = 0.0f64;
    for q in -(c as i64)..(c as i64) {
        let expect = (k as f64).powi(2) * dirichlet(q, k, n).powi(2);
        let along_x = i[c * n + (c as i64 + q) as usize];
        let along_y = i[(c as i64 + q) as usize * n + c];
        worst = worst
            .max((along_x - expect).abs() / expect)
            .max((along_y - expect).abs() / expect);
    }
    assert!(worst < 1e-6, "worst relative error {worst}");
}

#[test]
fn parseval_holds_for_random_pupils() {
    for seed in 0..5 {
        let p = contaminate(
            &make_clean_pupil(128, 4.0).unwrap(),
            &ContaminationSpec {
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        let k = diffract(&p, &[470.0, 610.0], 50.0).unwrap();
        let direct: f64 = p.grid().iter().map(|v| v.norm_sqr()).sum();
        for band in 0..2 {
            let sum: f64 = k.intensity(band).iter().sum();
            let rel = (sum / (128.0 * 128.0) - direct).abs() / direct;
            assert!(rel < 1e-9, "seed {seed}: {rel}");
            assert!(k.energy()[band] <= direct * (1.0 + 1e-6));
            assert!(k.intensity(band).iter().all(|&v| v >= 0.0));
        }
    }
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let peak = b.iter().copied().fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / peak
}

#[test]
fn tilt_shift_equals_tilted_pupil_diffraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 0..4 {
        let p = contaminate(
            &make_clean_pupil(64, 3.2).unwrap(),
            &ContaminationSpec {
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        let k = diffract(&p, &[540.0], 40.0).unwrap();
        for _ in 0..3 {
            let t = TiltSpec::new(rng.random_range(-0.004..0.004), rng.random_range(-0.004..0.004));
            let explicit = diffract(&tilt_pupil(&p, t, 540.0), &[540.0], 40.0).unwrap();
            let shifted = tilt_shift(&k, t);
            assert!(max_rel(shifted.intensity(0), explicit.intensity(0)) < 1e-6);
        }
    }
}

#[test]
fn integer_shift_is_exact_roll() {
    let p = contaminate(&make_clean_pupil(64, 3.2).unwrap(), &ContaminationSpec::default()).unwrap();
    let k = diffract(&p, &[540.0], 40.0).unwrap();
    let shifted = k.shifted_by_samples(&[(5.0, -3.0)], ShiftMode::Wrap);
    let base = k.intensity(0);
    for r in 0..64usize {
        for c in 0..64usize {
            let src = ((r + 64 + 3) % 64) * 64 + (c + 64 - 5) % 64;
            assert_eq!(shifted.intensity(0)[r * 64 + c].to_bits(), base[src].to_bits());
        }
    }
    // a tilt landing on a whole bin takes the same path
    let t = TiltSpec::from_sample_shift(5.0, -3.0, 540.0, 64, k.pupil_pitch_mm());
    assert_eq!(tilt_shift(&k, t), shifted);
}

#[test]
fn opposite_tilts_mirror_about_center() {
    // real (oil-free) screen: |F(u)| = |F(-u)|
    let mut spec = ContaminationSpec {
        seed: 4,
        ..Default::default()
    };
    spec.oil.blobs = 0;
    let p = contaminate(&make_clean_pupil(64, 3.2).unwrap(), &spec).unwrap();
    let k = diffract(&p, &[610.0], 40.0).unwrap();
    let n = 64;
    let alpha = 0.0023;
    let plus = tilt_shift(&k, TiltSpec::new(alpha, -0.5 * alpha));
    let minus_explicit = diffract(&tilt_pupil(&p, TiltSpec::new(-alpha, 0.5 * alpha), 610.0), &[610.0], 40.0).unwrap();
    let peak = k.peak(0);
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let mirrored = plus.intensity(0)[((n - r) % n) * n + (n - c) % n];
            worst = worst.max((mirrored - minus_explicit.intensity(0)[r * n + c]).abs() / peak);
        }
    }
    assert!(worst < 1e-9, "{worst}");
}
