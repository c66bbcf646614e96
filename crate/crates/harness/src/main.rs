use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use surface_fv_harness::output::write_json;
use surface_fv_harness::{mesh_info, run_experiment, verify_flux, ExperimentConfig};

#[derive(Parser)]
#[command(name = "surface-fv", version, about = "Finite volume refinement studies on the sphere and the flat torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory; overrides `output.dir` in the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Seed for random sampling in verifications.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the refinement study of a config.
    Run { config: PathBuf },
    /// Check consistency, conservation and monotonicity of both face fluxes.
    VerifyFlux { config: PathBuf },
    /// Audit the meshes of every configured level and export them as JSON.
    MeshInfo { config: PathBuf },
}

fn output_dir(cli: &Cli, cfg: &ExperimentConfig) -> PathBuf {
    cli.output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| Path::new("out").join(if cfg.name.is_empty() { "run" } else { &cfg.name }))
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(config)?;
            let out = output_dir(&cli, &cfg);
            let summary = run_experiment(&cfg, &out).with_context(|| format!("running {}", config.display()))?;
            println!("{:>5} {:>12} {:>12} {:>14} {:>9}", "level", "h", "tau", "l1_error", "wall_s");
            for r in summary.rows() {
                println!("{:>5} {:>12.5e} {:>12.5e} {:>14.6e} {:>9.3}", r.level, r.h, r.tau, r.l1_error, r.wall_s);
            }
            if let Some(fit) = &summary.fit {
                match fit.rate {
                    Some(rate) => println!("rate {rate:.4} (residual {:.2e}, {} points)", fit.residual, fit.points),
                    None => println!("rate: exact (all errors zero)"),
                }
            }
            let violations: usize = summary.levels.iter().map(|l| l.diagnostics.entropy_violations).sum();
            println!("entropy violations {violations}");
            println!("wrote {}", out.display());
        }
        Command::VerifyFlux { config } => {
            let cfg = load(config)?;
            let out = output_dir(&cli, &cfg);
            std::fs::create_dir_all(&out)?;
            let outcome = verify_flux(&cfg, cli.seed)?;
            for r in &outcome.reports {
                println!(
                    "{:<15} samples {} consistency {:.2e} conservation {:.2e} violations {}",
                    r.scheme.name(),
                    r.samples,
                    r.max_consistency_error,
                    r.max_conservation_residual,
                    r.violations.len()
                );
            }
            println!(
                "zero-speed control: {} monotonicity violations",
                outcome.negative_control.monotonicity_violations
            );
            write_json(&out.join("verify-flux.json"), &outcome)?;
            if !outcome.is_clean() {
                bail!("flux axioms violated; see {}", out.join("verify-flux.json").display());
            }
        }
        Command::MeshInfo { config } => {
            let cfg = load(config)?;
            let out = output_dir(&cli, &cfg);
            for m in mesh_info(&cfg, &out)? {
                println!(
                    "level {} ({}): cells {} faces {} vertices {} chi {} h {:.5e} area {:.12} gamma2 {:.4} sup p/|K| {:.4e}",
                    m.level,
                    m.kind,
                    m.cells,
                    m.faces,
                    m.vertices,
                    m.euler_characteristic,
                    m.h,
                    m.total_area,
                    m.gamma2,
                    m.sup_perimeter_area_ratio
                );
            }
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
