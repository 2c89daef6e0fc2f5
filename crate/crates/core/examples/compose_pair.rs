//! Turn one clean plate into an (input, ground truth, masks) training pair.
//!
//! cargo run --release --example compose_pair -- CLEAN.png [VARIANT] [INDEX] [OUT_DIR]

use std::path::PathBuf;

use flareforge::pipeline::{render_pair, GenerateConfig, VariantSpec};
use flareforge::raster::load_rgb8;

fn main() -> flareforge::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(clean) = args.first() else {
        eprintln!("usage: compose_pair CLEAN.png [VARIANT] [INDEX] [OUT_DIR]");
        std::process::exit(2);
    };
    let variant = VariantSpec::named(args.get(1).map_or("MRP", String::as_str), 1, 0)?;
    let index: usize = args.get(2).map_or(0, |s| s.parse().expect("INDEX"));
    let out = PathBuf::from(args.get(3).cloned().unwrap_or_else(|| "pair-out".into()));
    std::fs::create_dir_all(&out).expect("create output dir");

    let plate = load_rgb8(clean.as_ref())?;
    let config = GenerateConfig::default();
    let g = render_pair(&variant, &config, index, clean, &plate)?;

    g.pair.input.save(out.join("input.png")).expect("write");
    g.pair.gt.save(out.join("gt.png")).expect("write");
    for (name, m) in [("flare", &g.pair.masks.flare), ("light", &g.pair.masks.light), ("ghost", &g.pair.masks.ghost)] {
        m.to_gray8().save(out.join(format!("mask_{name}.png"))).expect("write");
        println!("{name:>6} mask: {} px", m.count());
    }
    println!("{} sources, {} ghost chains", g.entry.scene.sources.len(), g.entry.ghosts.len());
    println!("{}", serde_json::to_string_pretty(&g.entry)?);
    Ok(())
}
