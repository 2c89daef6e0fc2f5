//! Dataset variants, generation and validation.
//!
//! A dataset directory holds `manifest.json` plus `input/`, `gt/` and
//! `masks/{flare,light,ghost}/` PNG folders. Every path in the manifest is
//! relative to the manifest's own directory.
//!
//! Manifest layout (`schema_version` 1):
//!
//! ```text
//! { "schema_version": 1,
//!   "variant": { "name": "MRP", "flags": {..}, "count": 100, "seed": 7 },
//!   "config":  { resolution, pupil, scene, ghost and noise settings },
//!   "entries": [ { "id", "clean", "seed", "input", "gt", "masks",
//!                  "scene", "pupil_seeds", "flare_centers_px", "ghosts" } ] }
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::RgbImage;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composite::{compose, ComposeOptions, DataPair, Layers, NoiseSpec, MASK_THRESHOLD};
use crate::diffraction::{diffract, tilt_pupil, FlareKernel, ShiftMode, RGB_WAVELENGTHS_NM};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_pair, EvalReport};
use crate::pupil::{contaminate, make_clean_pupil, ContaminationSpec, PupilField};
use crate::raster::{self, LinearRgb, Mask};
use crate::reflective::{
    builtin_templates, collinearity_deviation, place_chain_random, place_chain_with, random_rotate_template,
    GhostChain, GhostOptions,
};
use crate::rng::{self, derive_seed, Stream};
use crate::scene::{
    correlation_peak, instantiate_flares, instantiate_with_kernels, kernel_fov, rasterize_core, sample_scene,
    LightSource, PlacementOptions, SceneConfig, SceneSpec,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
/// Ghost centers must sit within this distance of the source–center line.
pub const COLLINEARITY_TOL_PX: f64 = 0.5;
/// Minimum normalized correlation between a shared-kernel flare and the
/// direct diffraction of its tilted pupil.
pub const SIMILARITY_MIN: f64 = 0.99999;

const TAG_PAIR: u64 = 0x5041_4952;
const TAG_PUPIL: u64 = 0x5055_5049;
const TAG_GHOST: u64 = 0x4748_5354;
const TAG_GHOST_POS: u64 = 0x4750_4f53;
const TAG_NOISE: u64 = 0x4e4f_4953;

/// The five method columns of the ablation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariantKind {
    #[serde(rename = "base")]
    Base,
    R,
    RP,
    MR,
    MRP,
}

impl VariantKind {
    pub const ALL: [VariantKind; 5] = [Self::Base, Self::R, Self::RP, Self::MR, Self::MRP];

    pub fn name(self) -> &'static str {
        match self {
            Self::Base => "base",
            Self::R => "R",
            Self::RP => "RP",
            Self::MR => "MR",
            Self::MRP => "MRP",
        }
    }

    /// Method flags with the light source kept in the ground truth.
    pub fn flags(self) -> VariantFlags {
        let (m, r, s, c) = match self {
            Self::Base => (false, false, false, false),
            Self::R => (false, true, false, false),
            Self::RP => (false, true, false, true),
            Self::MR => (true, true, false, true),
            Self::MRP => (true, true, true, true),
        };
        VariantFlags {
            increase_scattering: m,
            reflective_in_input: r,
            similarity: s,
            centrosymmetry: c,
            light_source_in_gt: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantFlags {
    /// More than one source per frame.
    pub increase_scattering: bool,
    pub reflective_in_input: bool,
    /// All scatter layers come from one kernel moved by tilt.
    pub similarity: bool,
    /// Ghosts on the source axis (otherwise scattered uniformly).
    pub centrosymmetry: bool,
    pub light_source_in_gt: bool,
}

/// Variant name such as `MRP` or `MRP-woL`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VariantName {
    pub kind: VariantKind,
    pub light_source_in_gt: bool,
}

impl VariantName {
    pub fn all() -> Vec<VariantName> {
        [true, false]
            .into_iter()
            .flat_map(|l| VariantKind::ALL.map(|kind| VariantName { kind, light_source_in_gt: l }))
            .collect()
    }

    pub fn flags(self) -> VariantFlags {
        VariantFlags {
            light_source_in_gt: self.light_source_in_gt,
            ..self.kind.flags()
        }
    }
}

impl fmt::Display for VariantName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        if !self.light_source_in_gt {
            f.write_str("-woL")?;
        }
        Ok(())
    }
}

impl FromStr for VariantName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (stem, light) = match s
            .strip_suffix("-woL")
            .or_else(|| s.strip_suffix("-w/oL"))
            .or_else(|| s.strip_suffix(" w/o L"))
        {
            Some(stem) => (stem, false),
            None => (s, true),
        };
        let kind = VariantKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(stem))
            .ok_or_else(|| Error::param(format!("unknown variant {s:?}; expected base, R, RP, MR or MRP, optionally with -woL")))?;
        Ok(VariantName { kind, light_source_in_gt: light })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub name: String,
    pub flags: VariantFlags,
    pub count: usize,
    pub seed: u64,
}

impl VariantSpec {
    pub fn named(name: &str, count: usize, seed: u64) -> Result<Self> {
        let parsed: VariantName = name.parse()?;
        Ok(Self {
            name: parsed.to_string(),
            flags: parsed.flags(),
            count,
            seed,
        })
    }

    /// All ten configurations of the grid.
    pub fn grid(count: usize, seed: u64) -> Vec<VariantSpec> {
        VariantName::all()
            .into_iter()
            .map(|n| VariantSpec {
                name: n.to_string(),
                flags: n.flags(),
                count,
                seed,
            })
            .collect()
    }

    /// Checks that the flags are the ones the name stands for.
    pub fn validate(&self) -> Result<()> {
        let parsed: VariantName = self.name.parse()?;
        if parsed.flags() != self.flags {
            return Err(Error::param(format!("flags do not match variant {}", self.name)));
        }
        if self.count == 0 {
            return Err(Error::param("count must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorNoise {
    pub shot: f64,
    pub read: f64,
}

/// Everything besides the variant that determines the output bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    /// Output images are `resolution × resolution`.
    pub resolution: u32,
    /// Pupil grid before the 2× zero padding.
    pub pupil_grid: usize,
    pub pupil_extent_mm: f64,
    pub focal_length_mm: f64,
    pub wavelengths_nm: Vec<f64>,
    /// Kernel band whose sample equals one pixel.
    pub reference_band: usize,
    /// Contamination model; its seed is replaced per kernel.
    pub contamination: ContaminationSpec,
    /// Source sampling; the count is forced to 1 without `increase_scattering`.
    pub scene: SceneConfig,
    /// Scatter-layer energy per unit source intensity, reference band.
    pub scatter_gain: f64,
    /// Ghost chains added to each pair with reflective flare.
    pub ghost_chains: usize,
    pub ghost_gain: f64,
    pub ghost_clip_threshold: Option<f64>,
    /// Chains to sample from; empty means the built-in set.
    #[serde(default)]
    pub templates: Vec<GhostChain>,
    pub noise: Option<SensorNoise>,
    pub mask_threshold: f64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            resolution: 128,
            pupil_grid: 128,
            pupil_extent_mm: 8.0,
            focal_length_mm: 24.0,
            wavelengths_nm: RGB_WAVELENGTHS_NM.to_vec(),
            reference_band: 1,
            contamination: ContaminationSpec::default(),
            scene: SceneConfig::default(),
            scatter_gain: 30.0,
            ghost_chains: 2,
            ghost_gain: 0.03,
            ghost_clip_threshold: Some(0.45),
            templates: Vec::new(),
            noise: None,
            mask_threshold: MASK_THRESHOLD,
        }
    }
}

impl GenerateConfig {
    pub fn validate(&self) -> Result<()> {
        let r = self.resolution as usize;
        if r < 16 || r > 2 * self.pupil_grid {
            return Err(Error::param(format!(
                "resolution must lie in 16..={} for a {}-sample pupil",
                2 * self.pupil_grid,
                self.pupil_grid
            )));
        }
        if self.reference_band >= self.wavelengths_nm.len() {
            return Err(Error::param("reference band out of range"));
        }
        if !(self.scatter_gain >= 0.0 && self.ghost_gain >= 0.0) {
            return Err(Error::param("gains must be non-negative"));
        }
        if let Some(t) = self.ghost_clip_threshold {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::param("clip threshold must lie in (0, 1]"));
            }
        }
        self.contamination.validate()?;
        self.scene.validate()
    }

    fn templates(&self) -> Vec<GhostChain> {
        if self.templates.is_empty() {
            builtin_templates()
        } else {
            self.templates.clone()
        }
    }

    fn placement(&self) -> PlacementOptions {
        let r = self.resolution as usize;
        PlacementOptions {
            width: r,
            height: r,
            mode: ShiftMode::CropPad,
            reference_band: self.reference_band,
            extended_sources: true,
        }
    }

    /// The contaminated, 2× padded pupil for one kernel seed.
    pub fn pupil(&self, seed: u64) -> Result<PupilField> {
        let clean = make_clean_pupil(self.pupil_grid, self.pupil_extent_mm)?;
        let spec = ContaminationSpec {
            seed,
            ..self.contamination.clone()
        };
        contaminate(&clean, &spec)?.padded(2)
    }

    /// Kernel for one seed, scaled to `scatter_gain` total energy in the
    /// reference band.
    pub fn kernel(&self, seed: u64) -> Result<FlareKernel> {
        let k = diffract(&self.pupil(seed)?, &self.wavelengths_nm, self.focal_length_mm)?;
        let total = k.total_intensity(self.reference_band);
        Ok(k.scaled(self.scatter_gain / total))
    }

    /// Field of view that puts each flare on its source.
    pub fn fov(&self, kernel: &FlareKernel) -> f64 {
        kernel_fov(kernel, self.reference_band, self.resolution as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskPaths {
    pub flare: String,
    pub light: String,
    pub ghost: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostRecord {
    pub template_id: String,
    pub source_index: usize,
    pub rotation: f64,
    pub centers_px: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub id: String,
    /// Clean plate file name inside the clean directory.
    pub clean: String,
    pub seed: u64,
    pub input: String,
    pub gt: String,
    pub masks: MaskPaths,
    pub scene: SceneSpec,
    /// One seed when the kernel is shared, else one per source.
    pub pupil_seeds: Vec<u64>,
    pub flare_centers_px: Vec<[f64; 2]>,
    pub ghosts: Vec<GhostRecord>,
}

impl PairEntry {
    fn files(&self) -> [&str; 5] {
        [&self.input, &self.gt, &self.masks.flare, &self.masks.light, &self.masks.ghost]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub variant: VariantSpec,
    pub config: GenerateConfig,
    pub entries: Vec<PairEntry>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: DatasetManifest = serde_json::from_str(&text)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::Format {
                what: "manifest",
                reason: format!("schema_version {} (expected {SCHEMA_VERSION})", m.schema_version),
            });
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Image files in `dir` (png, jpg, jpeg), sorted by name.
pub fn list_clean_plates(dir: &Path) -> Result<Vec<PathBuf>> {
    let read = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in read {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("png" | "jpg" | "jpeg")) {
            out.push(path);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::Input(format!("no png or jpeg images in {}", dir.display())));
    }
    Ok(out)
}

/// In-memory result of one generated pair.
#[derive(Debug, Clone)]
pub struct GeneratedPair {
    pub entry: PairEntry,
    pub pair: DataPair,
}

fn pair_id(index: usize) -> String {
    format!("{index:06}")
}

/// Renders pair `index` of `variant` on top of `plate`. Paths in the entry
/// are filled in but nothing is written.
pub fn render_pair(
    variant: &VariantSpec,
    config: &GenerateConfig,
    index: usize,
    clean_name: &str,
    plate: &RgbImage,
) -> Result<GeneratedPair> {
    let flags = variant.flags;
    let res = config.resolution as usize;
    let plate = raster::fit_square(plate, config.resolution);
    let seed = derive_seed(variant.seed, TAG_PAIR, index as u64);

    let mut scene_cfg = config.scene.clone();
    if !flags.increase_scattering {
        scene_cfg.count = (1, 1);
    }
    let mut scene = sample_scene(seed, &scene_cfg)?;
    let k = scene.sources.len();

    let pupil_seeds: Vec<u64> = if flags.similarity {
        vec![derive_seed(seed, TAG_PUPIL, 0)]
    } else {
        (0..k as u64).map(|i| derive_seed(seed, TAG_PUPIL, i)).collect()
    };
    let kernels = pupil_seeds.iter().map(|&s| config.kernel(s)).collect::<Result<Vec<_>>>()?;
    scene.fov = config.fov(&kernels[0]);
    let opts = config.placement();
    let flares = if flags.similarity {
        instantiate_flares(&scene, &kernels[0], &opts)?
    } else {
        let refs: Vec<&FlareKernel> = kernels.iter().collect();
        instantiate_with_kernels(&scene, &refs, &opts)?
    };
    let flare_centers_px: Vec<[f64; 2]> = flares.iter().map(|f| f.center_px).collect();
    let cores: Vec<LinearRgb> = scene
        .sources
        .iter()
        .zip(&flare_centers_px)
        .map(|(s, &c)| rasterize_core(s, c, res, res))
        .collect();
    let scatter: Vec<LinearRgb> = flares.into_iter().map(|f| f.radiance).collect();

    let mut ghosts = Vec::new();
    let mut ghost_layers = Vec::new();
    if flags.reflective_in_input && config.ghost_chains > 0 {
        let templates = config.templates();
        if templates.is_empty() {
            return Err(Error::param("no ghost templates"));
        }
        let mut rng = rng::stream(derive_seed(seed, TAG_GHOST, 0), Stream::Ghosts);
        let ghost_opts = GhostOptions {
            clip_threshold: config.ghost_clip_threshold,
            gain: config.ghost_gain,
        };
        for j in 0..config.ghost_chains {
            let t = rng.random_range(0..templates.len());
            let source_index = rng.random_range(0..k);
            let chain = random_rotate_template(&templates[t], derive_seed(seed, TAG_GHOST, 1 + j as u64));
            let source = &scene.sources[source_index];
            let placed = if flags.centrosymmetry {
                match place_chain_with(&chain, source, res, res, &ghost_opts) {
                    Ok(p) => p,
                    // a source exactly on the optical axis has no ghost axis
                    Err(Error::DegenerateAxis) => continue,
                    Err(e) => return Err(e),
                }
            } else {
                let pos_seed = derive_seed(seed, TAG_GHOST_POS, j as u64);
                place_chain_random(&chain, source, res, res, pos_seed, &ghost_opts)?
            };
            ghosts.push(GhostRecord {
                template_id: chain.template_id.clone(),
                source_index,
                rotation: chain.rotation,
                centers_px: placed.iter().map(|g| g.center_px).collect(),
            });
            ghost_layers.extend(placed.into_iter().map(|g| g.radiance));
        }
    }

    let compose_opts = ComposeOptions {
        light_source_in_gt: flags.light_source_in_gt,
        mask_threshold: config.mask_threshold,
        noise: config.noise.map(|n| NoiseSpec {
            seed: derive_seed(seed, TAG_NOISE, 0),
            shot: n.shot,
            read: n.read,
        }),
    };
    let layers = Layers {
        scatter: &scatter,
        ghosts: &ghost_layers,
        cores: &cores,
    };
    let pair = compose(&plate, layers, &compose_opts)?;
    let id = pair_id(index);
    let entry = PairEntry {
        input: format!("input/{id}.png"),
        gt: format!("gt/{id}.png"),
        masks: MaskPaths {
            flare: format!("masks/flare/{id}.png"),
            light: format!("masks/light/{id}.png"),
            ghost: format!("masks/ghost/{id}.png"),
        },
        id,
        clean: clean_name.to_string(),
        seed,
        scene,
        pupil_seeds,
        flare_centers_px,
        ghosts,
    };
    Ok(GeneratedPair { entry, pair })
}

const OUTPUT_DIRS: [&str; 5] = ["input", "gt", "masks/flare", "masks/light", "masks/ghost"];

fn write_pair(out_dir: &Path, g: &GeneratedPair) -> Result<()> {
    let e = &g.entry;
    raster::save_png(&g.pair.input, &out_dir.join(&e.input))?;
    raster::save_png(&g.pair.gt, &out_dir.join(&e.gt))?;
    raster::save_png(&g.pair.masks.flare.to_gray8(), &out_dir.join(&e.masks.flare))?;
    raster::save_png(&g.pair.masks.light.to_gray8(), &out_dir.join(&e.masks.light))?;
    raster::save_png(&g.pair.masks.ghost.to_gray8(), &out_dir.join(&e.masks.ghost))
}

/// [`generate_with`] using the default configuration.
pub fn generate(variant: &VariantSpec, clean_dir: &Path, out_dir: &Path) -> Result<DatasetManifest> {
    generate_with(variant, &GenerateConfig::default(), clean_dir, out_dir)
}

/// Generates `variant.count` pairs into `out_dir` and writes the manifest.
/// Pairs are rendered in parallel; output bytes depend only on the variant,
/// the config and the sorted clean-plate list. On failure, output created
/// by this call is removed.
pub fn generate_with(variant: &VariantSpec, config: &GenerateConfig, clean_dir: &Path, out_dir: &Path) -> Result<DatasetManifest> {
    variant.validate()?;
    config.validate()?;
    let plates = list_clean_plates(clean_dir)?;
    let names: Vec<String> = plates
        .iter()
        .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
        .collect();

    let mut created = Vec::new();
    let result = (|| {
        if !out_dir.exists() {
            created.push(out_dir.to_path_buf());
        }
        for d in OUTPUT_DIRS {
            let path = out_dir.join(d);
            let top = out_dir.join(d.split('/').next().unwrap_or(d));
            if !top.exists() {
                created.push(top);
            }
            fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        }
        let entries = (0..variant.count)
            .into_par_iter()
            .map(|i| {
                let plate = raster::load_rgb8(&plates[i % plates.len()])?;
                let g = render_pair(variant, config, i, &names[i % plates.len()], &plate)?;
                write_pair(out_dir, &g)?;
                Ok(g.entry)
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = DatasetManifest {
            schema_version: SCHEMA_VERSION,
            variant: variant.clone(),
            config: config.clone(),
            entries,
        };
        manifest.save(&out_dir.join(MANIFEST_FILE))?;
        Ok(manifest)
    })();
    if result.is_err() {
        let _ = fs::remove_file(out_dir.join(MANIFEST_FILE));
        for path in created.iter().rev() {
            let _ = fs::remove_dir_all(path);
        }
    }
    result
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub status: CheckStatus,
    pub passed: usize,
    pub total: usize,
    pub failures: Vec<String>,
}

impl CheckResult {
    fn not_applicable() -> Self {
        Self {
            status: CheckStatus::NotApplicable,
            passed: 0,
            total: 0,
            failures: Vec::new(),
        }
    }

    fn from_outcomes(outcomes: Vec<(String, std::result::Result<(), String>)>) -> Self {
        let total = outcomes.len();
        let failures: Vec<String> = outcomes
            .into_iter()
            .filter_map(|(id, r)| r.err().map(|e| format!("{id}: {e}")))
            .collect();
        Self {
            status: if failures.is_empty() { CheckStatus::Pass } else { CheckStatus::Fail },
            passed: total - failures.len(),
            total,
            failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub variant: String,
    pub pairs: usize,
    pub missing_files: Vec<String>,
    pub checks: BTreeMap<String, CheckResult>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.missing_files.is_empty() && self.checks.values().all(|c| c.status != CheckStatus::Fail)
    }
}

type Outcome = std::result::Result<(), String>;

fn check_structure(flags: &VariantFlags, e: &PairEntry) -> Outcome {
    let k = e.scene.sources.len();
    if !flags.increase_scattering && k != 1 {
        return Err(format!("{k} sources without increased scattering"));
    }
    if !flags.reflective_in_input && !e.ghosts.is_empty() {
        return Err("ghosts present without reflective flare".into());
    }
    let expect_kernels = if flags.similarity { 1 } else { k };
    if e.pupil_seeds.len() != expect_kernels {
        return Err(format!("{} kernels for {k} sources", e.pupil_seeds.len()));
    }
    if e.flare_centers_px.len() != k {
        return Err("flare center count differs from source count".into());
    }
    Ok(())
}

fn check_masks(base: &Path, flags: &VariantFlags, e: &PairEntry) -> Outcome {
    let load_mask = |rel: &str| raster::load_gray8(&base.join(rel)).map(|g| Mask::from_gray8(&g)).map_err(|x| x.to_string());
    let input = raster::load_rgb8(&base.join(&e.input)).map_err(|x| x.to_string())?;
    let gt = raster::load_rgb8(&base.join(&e.gt)).map_err(|x| x.to_string())?;
    let flare = load_mask(&e.masks.flare)?;
    let light = load_mask(&e.masks.light)?;
    let ghost = load_mask(&e.masks.ghost)?;
    if input.dimensions() != gt.dimensions() || (flare.width as u32, flare.height as u32) != gt.dimensions() {
        return Err("image and mask sizes differ".into());
    }
    if !ghost.is_subset_of(&flare) {
        return Err("ghost mask not inside flare mask".into());
    }
    if !flags.light_source_in_gt && !light.is_subset_of(&flare) {
        return Err("light mask not inside flare mask with the source removed from gt".into());
    }
    if !flags.reflective_in_input && !ghost.is_empty() {
        return Err("ghost mask set without reflective flare".into());
    }
    for (i, (a, b)) in input.pixels().zip(gt.pixels()).enumerate() {
        if !flare.data[i] && a != b {
            return Err(format!("pixel {i} differs outside the flare mask"));
        }
    }
    Ok(())
}

fn check_collinearity(config: &GenerateConfig, e: &PairEntry) -> Outcome {
    let r = config.resolution as f64;
    let center = [r / 2.0, r / 2.0];
    for g in &e.ghosts {
        let s = e.scene.sources.get(g.source_index).ok_or("ghost source index out of range")?;
        let source_px = [s.position[0] * r, s.position[1] * r];
        let dev = collinearity_deviation(&g.centers_px, source_px, center);
        if dev > COLLINEARITY_TOL_PX {
            return Err(format!("{} off axis by {dev:.3} px", g.template_id));
        }
    }
    Ok(())
}

/// Compares each shared-kernel flare with a direct diffraction of the pupil
/// tilted toward that source.
fn check_similarity(config: &GenerateConfig, e: &PairEntry) -> Outcome {
    let err = |x: Error| x.to_string();
    let seed = *e.pupil_seeds.first().ok_or("no pupil seed")?;
    let pupil = config.pupil(seed).map_err(err)?;
    let kernel = config.kernel(seed).map_err(err)?;
    let mut scene = e.scene.clone();
    scene.fov = config.fov(&kernel);
    let opts = PlacementOptions {
        extended_sources: false,
        ..config.placement()
    };
    let shared = instantiate_flares(&scene, &kernel, &opts).map_err(err)?;
    let band = config.reference_band;
    let lambda = config.wavelengths_nm[band];
    let on_axis = SceneSpec {
        sources: vec![LightSource::point([0.5, 0.5], 1.0)],
        seed: 0,
        fov: scene.fov,
    };
    for (layer, source) in shared.iter().zip(&scene.sources) {
        let tilted = tilt_pupil(&pupil, layer.tilt, lambda);
        let direct = diffract(&tilted, &[lambda], config.focal_length_mm).map_err(err)?;
        let direct_opts = PlacementOptions {
            reference_band: 0,
            ..opts
        };
        let reference = instantiate_flares(&on_axis, &direct, &direct_opts).map_err(err)?;
        let c = correlation_peak(&layer.shape, &reference[0].shape);
        if c < SIMILARITY_MIN {
            return Err(format!(
                "source at ({:.3}, {:.3}) correlates {c:.6} with its direct diffraction",
                source.position[0], source.position[1]
            ));
        }
    }
    Ok(())
}

/// Re-checks a generated dataset: referenced files, per-variant structure,
/// mask consistency, ghost collinearity (centrosymmetric variants) and
/// flare similarity (shared-kernel variants).
pub fn validate(manifest_path: &Path) -> Result<ValidationReport> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let flags = manifest.variant.flags;
    let config = &manifest.config;

    let mut missing = Vec::new();
    let mut complete = Vec::new();
    for e in &manifest.entries {
        let absent: Vec<String> = e.files().iter().filter(|f| !base.join(f).is_file()).map(|f| f.to_string()).collect();
        if absent.is_empty() {
            complete.push(e);
        }
        missing.extend(absent);
    }

    let mut checks = BTreeMap::new();
    let mut count = CheckResult::from_outcomes(vec![(
        "manifest".into(),
        if manifest.entries.len() == manifest.variant.count {
            Ok(())
        } else {
            Err(format!("{} entries for count {}", manifest.entries.len(), manifest.variant.count))
        },
    )]);
    if let Err(e) = manifest.variant.validate() {
        count.status = CheckStatus::Fail;
        count.failures.push(e.to_string());
    }
    checks.insert("entry_count".to_string(), count);
    checks.insert(
        "structure".to_string(),
        CheckResult::from_outcomes(manifest.entries.iter().map(|e| (e.id.clone(), check_structure(&flags, e))).collect()),
    );
    checks.insert(
        "mask_consistency".to_string(),
        CheckResult::from_outcomes(complete.par_iter().map(|e| (e.id.clone(), check_masks(base, &flags, e))).collect()),
    );
    checks.insert(
        "collinearity".to_string(),
        if flags.reflective_in_input && flags.centrosymmetry {
            CheckResult::from_outcomes(manifest.entries.iter().map(|e| (e.id.clone(), check_collinearity(config, e))).collect())
        } else {
            CheckResult::not_applicable()
        },
    );
    checks.insert(
        "similarity".to_string(),
        if flags.similarity {
            CheckResult::from_outcomes(manifest.entries.par_iter().map(|e| (e.id.clone(), check_similarity(config, e))).collect())
        } else {
            CheckResult::not_applicable()
        },
    );
    Ok(ValidationReport {
        variant: manifest.variant.name.clone(),
        pairs: manifest.entries.len(),
        missing_files: missing,
        checks,
    })
}

/// Scores restored images against the ground truth of every pair. The
/// restored image of pair `id` is `restored_dir/{id}.png`.
pub fn evaluate(manifest_path: &Path, restored_dir: &Path) -> Result<EvalReport> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let pairs = manifest
        .entries
        .par_iter()
        .map(|e| {
            let gt = raster::load_rgb8(&base.join(&e.gt))?;
            let flare = Mask::from_gray8(&raster::load_gray8(&base.join(&e.masks.flare))?);
            let ghost = Mask::from_gray8(&raster::load_gray8(&base.join(&e.masks.ghost))?);
            let restored = raster::load_rgb8(&restored_dir.join(format!("{}.png", e.id)))?;
            evaluate_pair(&e.id, &gt, &flare, &ghost, &restored)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_pairs(pairs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_ten_distinct_variants() {
        let grid = VariantSpec::grid(1, 0);
        assert_eq!(grid.len(), 10);
        let names: std::collections::HashSet<_> = grid.iter().map(|v| v.name.clone()).collect();
        assert_eq!(names.len(), 10);
        for v in &grid {
            v.validate().unwrap();
        }
    }

    #[test]
    fn flag_table() {
        let f = |s: &str| VariantSpec::named(s, 1, 0).unwrap().flags;
        let base = f("base");
        assert!(!base.increase_scattering && !base.reflective_in_input && !base.similarity && !base.centrosymmetry);
        assert!(f("R").reflective_in_input && !f("R").centrosymmetry);
        assert!(f("RP").centrosymmetry && !f("RP").increase_scattering);
        assert!(f("MR").increase_scattering && !f("MR").similarity);
        let mrp = f("MRP-woL");
        assert!(mrp.increase_scattering && mrp.reflective_in_input && mrp.similarity && mrp.centrosymmetry);
        assert!(!mrp.light_source_in_gt);
    }

    #[test]
    fn names_round_trip() {
        for n in VariantName::all() {
            assert_eq!(n.to_string().parse::<VariantName>().unwrap(), n);
        }
        assert!("XR".parse::<VariantName>().is_err());
    }

    #[test]
    fn mismatched_flags_are_rejected() {
        let mut v = VariantSpec::named("RP", 3, 1).unwrap();
        v.flags.similarity = true;
        assert!(v.validate().is_err());
    }
}
