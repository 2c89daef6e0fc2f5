//! One kernel serves every field angle: shifting it matches diffracting the
//! tilted aperture directly.
//!
//! cargo run --release --example tilt_similarity

use flareforge::diffraction::{diffract, tilt_pupil, tilt_shift, TiltSpec};
use flareforge::pupil::{contaminate, make_clean_pupil, ContaminationSpec};

fn main() -> flareforge::Result<()> {
    let nm = 540.0;
    let spec = ContaminationSpec {
        seed: 3,
        ..ContaminationSpec::default()
    };
    let pupil = contaminate(&make_clean_pupil(128, 8.0)?, &spec)?;
    let kernel = diffract(&pupil, &[nm], 24.0)?;
    let n = kernel.n();

    println!("{:>10} {:>10} {:>12} {:>12}", "theta_x", "theta_y", "shift (px)", "max rel err");
    for (tx, ty) in [(0.0, 0.0), (1e-3, 0.0), (-2e-3, 1.5e-3), (3.3e-3, -2.7e-3)] {
        let tilt = TiltSpec::new(tx, ty);
        let shifted = tilt_shift(&kernel, tilt);
        let direct = diffract(&tilt_pupil(&pupil, tilt, nm), &[nm], 24.0)?;
        let peak = direct.peak(0);
        let err = shifted
            .intensity(0)
            .iter()
            .zip(direct.intensity(0))
            .map(|(a, b)| (a - b).abs() / peak)
            .fold(0.0, f64::max);
        let (dx, dy) = kernel.sample_shift(tilt, 0);
        println!("{tx:>10.1e} {ty:>10.1e} {:>12} {err:>12.2e}", format!("{dx:.2},{dy:.2}"));
    }

    // whole-sample tilts are a plain roll of the grid
    let t = TiltSpec::from_sample_shift(4.0, -9.0, nm, n, kernel.pupil_pitch_mm());
    let rolled = tilt_shift(&kernel, t);
    let src = kernel.intensity(0);
    let exact = (0..n * n).all(|i| {
        let (r, c) = (i / n, i % n);
        rolled.intensity(0)[i].to_bits() == src[((r + 9) % n) * n + (c + n - 4) % n].to_bits()
    });
    let (dx, dy) = kernel.sample_shift(t, 0);
    println!("integer tilt shift ({dx}, {dy}) samples, bit-exact roll: {exact}");
    Ok(())
}
