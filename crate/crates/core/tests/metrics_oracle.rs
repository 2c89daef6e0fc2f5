mod common;

use common::{random_pair, ssim_brute};
use flareforge::metrics::{masked_reflective_eval, psnr, ssim, RegionScore, Score};
use flareforge::raster::Mask;
use image::{Rgb, RgbImage};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn ssim_agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let (a, b) = random_pair(&mut rng);
        let fast = ssim(&a, &b, None).unwrap();
        let slow = ssim_brute(&a, &b);
        assert!((fast - slow).abs() < 1e-6, "{fast} vs {slow}");
    }
}

fn ghost_case() -> (RgbImage, RgbImage, Mask) {
    let gt = RgbImage::from_fn(48, 40, |x, y| Rgb([(x * 3) as u8, (y * 3) as u8, 90]));
    let mut input = gt.clone();
    let mut mask = Mask::empty(48, 40);
    for y in 14..22 {
        for x in 20..30 {
            let p = input.get_pixel_mut(x, y);
            p.0 = p.0.map(|v| v.saturating_add(120));
            mask.data[y as usize * 48 + x as usize] = true;
        }
    }
    // scattering residue outside the ghost region must not count
    input.put_pixel(2, 2, Rgb([255, 255, 255]));
    (gt, input, mask)
}

#[test]
fn reflective_eval_uses_ghost_boxes_only() {
    let (gt, input, mask) = ghost_case();
    assert_eq!(
        masked_reflective_eval(&gt, &mask, &gt).unwrap(),
        RegionScore::Scored { psnr: 100.0, ssim: 1.0 }
    );
    let region = mask.box_hull();
    let direct = Score::compute(&gt, &input, Some(&region)).unwrap();
    let got = masked_reflective_eval(&gt, &mask, &input).unwrap().score().unwrap();
    assert_eq!(got, direct);

    // remove half of the ghost
    let mut half = input.clone();
    for y in 14..22 {
        for x in 20..25 {
            half.put_pixel(x, y, *gt.get_pixel(x, y));
        }
    }
    let mid = masked_reflective_eval(&gt, &mask, &half).unwrap().score().unwrap();
    assert!(mid.psnr > got.psnr && mid.psnr < 100.0);
    assert!((mid.psnr - got.psnr - 10.0 * 2f64.log10()).abs() < 1e-9);
}

#[test]
fn psnr_ignores_unmasked_pixels() {
    let (gt, input, mask) = ghost_case();
    let inside = psnr(&gt, &input, Some(&mask)).unwrap();
    let mse = 120.0f64 * 120.0;
    assert!((inside - 10.0 * (255.0f64 * 255.0 / mse).log10()).abs() < 1e-9);
}
