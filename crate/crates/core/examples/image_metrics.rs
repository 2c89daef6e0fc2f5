//! Score a restored image against its ground truth, optionally restricted
//! to the boxes around a ghost mask.
//!
//! cargo run --release --example image_metrics -- GT.png RESTORED.png [GHOST_MASK.png]

use flareforge::metrics::{masked_reflective_eval, Score};
use flareforge::raster::{load_gray8, load_rgb8, Mask};

fn main() -> flareforge::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 2 {
        eprintln!("usage: image_metrics GT.png RESTORED.png [GHOST_MASK.png]");
        std::process::exit(2);
    }
    let gt = load_rgb8(args[0].as_ref())?;
    let restored = load_rgb8(args[1].as_ref())?;
    let full = Score::compute(&gt, &restored, None)?;
    println!("full image  PSNR {:6.2} dB  SSIM {:.4}", full.psnr, full.ssim);
    if let Some(path) = args.get(2) {
        let mask = Mask::from_gray8(&load_gray8(path.as_ref())?);
        println!("ghost boxes {}", serde_json::to_string(&masked_reflective_eval(&gt, &mask, &restored)?)?);
    }
    Ok(())
}
