use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flareforge::pipeline::{self, GenerateConfig, VariantSpec, MANIFEST_FILE};
use flareforge::radiance::{run_rejection, RejectionConfig};
use flareforge::{Error, Result};

#[derive(Parser)]
#[command(name = "flareforge", version, about = "Lens flare synthesis and paired dataset generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a paired dataset for one variant.
    Generate {
        /// base, R, RP, MR or MRP, optionally suffixed with -woL.
        #[arg(long)]
        variant: String,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory of clean png/jpeg plates.
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON generation config; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-check a generated dataset. Exits with 1 when a check fails.
    Validate { manifest: PathBuf },
    /// Score restored images against the ground truth.
    Eval {
        #[arg(long)]
        pairs: PathBuf,
        /// Directory holding `{id}.png` for every pair.
        #[arg(long)]
        restored: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Fit a radiance field to ghosted views and report how much ghost survives.
    NerfDemo {
        #[arg(long, default_value = "nerf-demo")]
        out: PathBuf,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        views: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate {
            variant,
            count,
            seed,
            clean,
            out,
            config,
        } => {
            let spec = VariantSpec::named(&variant, count, seed)?;
            let config = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
                    serde_json::from_str::<GenerateConfig>(&text)?
                }
                None => GenerateConfig::default(),
            };
            let m = pipeline::generate_with(&spec, &config, &clean, &out)?;
            println!("{}: {} pairs -> {}", m.variant.name, m.entries.len(), out.join(MANIFEST_FILE).display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { manifest } => {
            let report = pipeline::validate(&manifest)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.is_ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Eval { pairs, restored, report } => {
            let r = pipeline::evaluate(&pairs, &restored)?;
            write_json(&r, &report)?;
            if let (Some(p), Some(s)) = (r.full.psnr, r.full.ssim) {
                println!("{} pairs: PSNR {:.2} ± {:.2} dB, SSIM {:.4} ± {:.4}", p.count, p.mean, p.std, s.mean, s.std);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::NerfDemo { out, iterations, views, seed } => {
            let mut cfg = RejectionConfig::default();
            if let Some(i) = iterations {
                cfg.fit.iterations = i;
            }
            if let Some(v) = views {
                cfg.views = v;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let outcome = run_rejection(&cfg)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
            for (i, ((c, g), f)) in outcome.clean.iter().zip(&outcome.injected).zip(&outcome.fitted).enumerate() {
                for (tag, v) in [("clean", c), ("ghosted", g), ("fitted", f)] {
                    flareforge::raster::save_png(&v.to_rgb8(), &out.join(format!("view{i:02}_{tag}.png")))?;
                }
            }
            write_json(&outcome.report, &out.join("report.json"))?;
            let r = &outcome.report;
            println!(
                "ghost-region MSE {:.5} -> {:.5} (ratio {:.3}), background PSNR {:.2} dB",
                r.injected_ghost_mse, r.fitted_ghost_mse, r.ghost_ratio, r.background_psnr_db
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
