use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use maxwell_dg::mesh::write_mesh;
use maxwell_dg::scenarios::{build_sphere_in_box_mesh, ScenarioKind, SphereMeshSpec};
use maxwell_dg_cli::{compare_with_reference, output, run, sweep, write_run, RunConfig};

#[derive(Parser)]
#[command(name = "maxwell-dg", version, about = "Time-domain Maxwell DG solver with H(curl) postprocessing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario once, or over the meshes of `--sweep`.
    Run(Overrides),
    /// Compare a run against a higher-order reference run at probe points.
    Compare(Overrides),
    /// Write the dielectric-sphere stand-in mesh.
    MeshGen {
        /// Output mesh file.
        #[arg(long)]
        out: PathBuf,
        /// Cubes per side.
        #[arg(long, default_value_t = SphereMeshSpec::default().n)]
        n: usize,
        #[arg(long, default_value_t = SphereMeshSpec::default().seed)]
        seed: u64,
    },
}

#[derive(Args)]
struct Overrides {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<ScenarioKind>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Comma-separated list of mesh resolutions.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Time step (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Extra `key=value` settings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.scenario {
            cfg.scenario = s;
        }
        if let Some(k) = self.degree {
            cfg.degree = k;
        }
        if let Some(n) = self.n {
            cfg.n = Some(n);
        }
        if let Some(m) = &self.mesh {
            cfg.mesh = Some(m.clone());
        }
        if let Some(s) = &self.sweep {
            cfg.set("sweep", s)?;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(dt) = self.dt {
            cfg.dt = Some(dt);
        }
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got `{kv}`");
            };
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run(o) => {
            let cfg = o.resolve()?;
            std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
            if cfg.sweep.is_empty() {
                let outcome = run(&cfg)?;
                write_run(&outcome, &cfg.out)?;
            } else {
                let result = sweep(&cfg)?;
                output::write_eoc_csv(&cfg.out.join("eoc.csv"), &result)?;
                for row in output::eoc_rows(&result)? {
                    info!(
                        "n={:3} E {:.3e} ({}) post {:.3e} ({})",
                        row.n,
                        row.err_e_raw,
                        row.eoc_e_raw.map_or("-".into(), |e| format!("{e:.2}")),
                        row.err_e_post,
                        row.eoc_e_post.map_or("-".into(), |e| format!("{e:.2}")),
                    );
                }
            }
        }
        Command::Compare(o) => {
            let cfg = o.resolve()?;
            let reference = RunConfig {
                degree: cfg.reference_degree.unwrap_or(cfg.degree + 2),
                dt: None,
                ..cfg.clone()
            };
            reference.validate()?;
            let cmp = compare_with_reference(&cfg, &reference)?;
            std::fs::create_dir_all(&cfg.out)?;
            output::write_probe_csv(&cfg.out.join("probe_errors.csv"), &cmp.points, &cmp.errors)?;
            for e in &cmp.errors {
                info!("A{} {}: err {:.3} err* {:.3}", e.probe + 1, e.field.name(), e.err, e.err_post);
            }
        }
        Command::MeshGen { out, n, seed } => {
            let spec = SphereMeshSpec {
                n,
                seed,
                ..SphereMeshSpec::default()
            };
            let mesh = build_sphere_in_box_mesh(&spec)?;
            write_mesh(&mesh, &out)?;
            info!("wrote {} elements to {}", mesh.num_elements(), out.display());
        }
    }
    Ok(())
}
