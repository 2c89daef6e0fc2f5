//! Sample a night scene with several lights and place one shared kernel
//! per source.
//!
//! cargo run --release --example multi_source_scene -- [SEED] [OUT.png]

use flareforge::diffraction::ShiftMode;
use flareforge::pipeline::GenerateConfig;
use flareforge::raster::LinearRgb;
use flareforge::scene::{instantiate_flares, rasterize_core, sample_scene, PlacementOptions, SceneConfig};

fn main() -> flareforge::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(11, |s| s.parse().expect("SEED must be an integer"));
    let out = args.next().unwrap_or_else(|| "scene.png".into());

    let config = GenerateConfig::default();
    let res = config.resolution as usize;
    let kernel = config.kernel(seed)?;
    let mut scene = sample_scene(
        seed,
        &SceneConfig {
            count: (3, 6),
            ..SceneConfig::default()
        },
    )?;
    scene.fov = config.fov(&kernel);

    let opts = PlacementOptions {
        width: res,
        height: res,
        mode: ShiftMode::CropPad,
        reference_band: config.reference_band,
        extended_sources: true,
    };
    let layers = instantiate_flares(&scene, &kernel, &opts)?;
    let mut img = LinearRgb::zeros(res, res);
    for (layer, src) in layers.iter().zip(&scene.sources) {
        println!(
            "source {}: uv ({:.3}, {:.3})  I {:>7.2}  {:?}  -> flare at ({:.1}, {:.1}) px",
            layer.source_index, src.position[0], src.position[1], src.intensity, src.shape, layer.center_px[0], layer.center_px[1]
        );
        img.add_assign(&layer.radiance);
        img.add_assign(&rasterize_core(src, layer.center_px, res, res));
    }
    img.to_srgb8().save(&out).expect("write png");
    println!("wrote {out}");
    Ok(())
}
