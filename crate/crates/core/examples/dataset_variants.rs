//! Generates a few pairs for every variant of the grid and validates them.
//!
//! cargo run --release --example dataset_variants -- CLEAN_DIR OUT_DIR [COUNT]

use std::path::PathBuf;

use flareforge::pipeline::{generate, validate, VariantSpec, MANIFEST_FILE};

fn main() -> flareforge::Result<()> {
    let mut args = std::env::args().skip(1);
    let clean = PathBuf::from(args.next().expect("usage: dataset_variants CLEAN_DIR OUT_DIR [COUNT]"));
    let out = PathBuf::from(args.next().expect("usage: dataset_variants CLEAN_DIR OUT_DIR [COUNT]"));
    let count = args.next().map(|c| c.parse().expect("COUNT must be an integer")).unwrap_or(4);

    for variant in VariantSpec::grid(count, 2024) {
        let dir = out.join(&variant.name);
        let manifest = generate(&variant, &clean, &dir)?;
        let report = validate(&dir.join(MANIFEST_FILE))?;
        let sources: usize = manifest.entries.iter().map(|e| e.scene.sources.len()).sum();
        let ghosts: usize = manifest.entries.iter().map(|e| e.ghosts.len()).sum();
        println!(
            "{:<9} pairs {:>3}  sources {:>3}  ghost chains {:>3}  valid {}",
            variant.name,
            manifest.entries.len(),
            sources,
            ghosts,
            report.is_ok()
        );
    }
    Ok(())
}
