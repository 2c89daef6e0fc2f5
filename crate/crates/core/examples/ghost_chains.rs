//! Lay each built-in ghost template along the axis of one light source and
//! report how far the element centers stray from that axis.
//!
//! cargo run --release --example ghost_chains -- [U V] [OUT_DIR]

use std::path::PathBuf;

use flareforge::raster::LinearRgb;
use flareforge::reflective::{builtin_templates, collinearity_deviation, place_chain_with, GhostOptions};
use flareforge::scene::LightSource;

const SIZE: usize = 256;

fn main() -> flareforge::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (u, v) = match args.as_slice() {
        [u, v, ..] => (u.parse().expect("U"), v.parse().expect("V")),
        _ => (0.22, 0.3),
    };
    let out = PathBuf::from(args.get(2).cloned().unwrap_or_else(|| "ghosts-out".into()));
    std::fs::create_dir_all(&out).expect("create output dir");

    let source = LightSource::point([u, v], 40.0);
    let opts = GhostOptions {
        clip_threshold: Some(0.45),
        gain: 0.03,
    };
    let s_px = [u * SIZE as f64, v * SIZE as f64];
    let c_px = [SIZE as f64 / 2.0; 2];
    for chain in builtin_templates() {
        let placed = place_chain_with(&chain, &source, SIZE, SIZE, &opts)?;
        let centers: Vec<[f64; 2]> = placed.iter().map(|g| g.center_px).collect();
        let dev = collinearity_deviation(&centers, s_px, c_px);
        let mut img = LinearRgb::zeros(SIZE, SIZE);
        placed.iter().for_each(|g| img.add_assign(&g.radiance));
        // brighten: ghosts are faint by design
        img.data.iter_mut().for_each(|p| *p = p.map(|c| c * 8.0));
        let path = out.join(format!("{}.png", chain.template_id));
        img.to_srgb8().save(&path).expect("write png");
        println!("{:<16} {} elements, off-axis {:.2e} px -> {}", chain.template_id, placed.len(), dev, path.display());
    }
    Ok(())
}
