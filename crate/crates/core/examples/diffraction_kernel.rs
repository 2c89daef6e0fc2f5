//! Contaminate a clean aperture and render its RGB scattering kernel.
//!
//! cargo run --release --example diffraction_kernel -- [SEED] [OUT_DIR]

use std::path::PathBuf;

use flareforge::diffraction::{diffract, RGB_WAVELENGTHS_NM};
use flareforge::pupil::{contaminate, make_clean_pupil, sample_contaminants, ContaminationSpec};

fn main() -> flareforge::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("SEED must be an integer"));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "kernel-out".into()));
    std::fs::create_dir_all(&out).expect("create output dir");

    let clean = make_clean_pupil(256, 8.0)?;
    let spec = ContaminationSpec {
        seed,
        ..ContaminationSpec::default()
    };
    let found = sample_contaminants(&clean, &spec)?;
    println!("{} dust disks, {} scratches", found.dust.len(), found.scratches.len());

    let pupil = contaminate(&clean, &spec)?.padded(2)?;
    pupil.save_raw(&out.join("pupil.raw"))?;
    let kernel = diffract(&pupil, &RGB_WAVELENGTHS_NM, 24.0)?;
    for (i, nm) in kernel.wavelengths_nm().iter().enumerate() {
        println!(
            "{nm:>5} nm  pitch {:.2e} mm  energy {:.4e}  peak/total {:.3e}",
            kernel.sample_pitch_mm(i),
            kernel.total_intensity(i),
            kernel.peak(i) / kernel.total_intensity(i)
        );
    }
    kernel.save_raw(&out.join("kernel.raw"))?;
    // heavy exposure so the faint streaks show up
    kernel.to_png16(400.0).save(&out.join("kernel.png"))?;
    println!("wrote {}", out.display());
    Ok(())
}
