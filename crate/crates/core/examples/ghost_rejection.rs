//! Multi-view fitting discards ghosts that do not agree between views.
//!
//! cargo run --release --example ghost_rejection -- [ITERATIONS] [STEP] [OUT_DIR]

use std::path::PathBuf;

use flareforge::radiance::{run_rejection, RejectionConfig};

fn main() -> flareforge::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = RejectionConfig::default();
    if let Some(it) = args.next() {
        cfg.fit.iterations = it.parse().expect("ITERATIONS must be an integer");
    }
    if let Some(lr) = args.next() {
        cfg.fit.lr = lr.parse().expect("STEP must be a number");
    }
    let out = args.next().map(PathBuf::from);

    let outcome = run_rejection(&cfg)?;
    let r = &outcome.report;
    println!("views {}  grid {}^3  {} iterations in {:.1}s", r.views, r.grid, r.iterations, r.seconds);
    println!("loss {:.6} -> {:.6}", r.initial_loss, r.final_loss);
    println!("ghost-region MSE: injected {:.5}, fitted {:.5} (ratio {:.3})", r.injected_ghost_mse, r.fitted_ghost_mse, r.ghost_ratio);
    println!("background PSNR {:.2} dB", r.background_psnr_db);

    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(|e| flareforge::Error::Io { path: dir.clone(), source: e })?;
        for (i, ((c, g), f)) in outcome.clean.iter().zip(&outcome.injected).zip(&outcome.fitted).enumerate() {
            c.to_rgb8().save(dir.join(format!("view{i:02}_clean.png"))).ok();
            g.to_rgb8().save(dir.join(format!("view{i:02}_ghosted.png"))).ok();
            f.to_rgb8().save(dir.join(format!("view{i:02}_fitted.png"))).ok();
        }
        println!("views written to {}", dir.display());
    }
    Ok(())
}
