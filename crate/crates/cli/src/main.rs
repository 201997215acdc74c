//! `nilcmc`: generate, build, verify and export CMC surfaces in Nil.
//!
//! Every command prints exactly one JSON document on stdout. Exit codes:
//! 0 ok, 1 other failure, 2 inadmissible data, 3 transport norm guard,
//! 4 unreadable or missing input, 5 residual over tolerance. Usage errors
//! exit with 1.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use nilcmc::artifacts::{
    read_immersion, read_potential, read_spinor, write_immersion, write_potential, write_spinor,
    REPORT_FILE,
};
use nilcmc::immersion::{mean_curvature_estimate, CurvatureOptions};
use nilcmc::mesh::{export_mesh, MeshFormat};
use nilcmc::pipeline::{self, PipelineConfig, Report};
use nilcmc::spinor::SpinorMeta;
use nilcmc::Error;

const CONFIG_FILE: &str = "config.json";
const EXIT_TOLERANCE: u8 = 5;

#[derive(Parser)]
#[command(
    name = "nilcmc",
    version,
    about = "CMC surfaces in the Heisenberg group from sinh-Gordon data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for an admissible potential and write v.cfld + v.json.
    Generate(Common),
    /// Run the full construction and write every artifact.
    Build(Common),
    /// Re-run all residual suites on stored artifacts.
    Verify(Common),
    /// Re-export the mesh from a stored immersion.
    Export(Common),
}

#[derive(Args)]
struct Common {
    /// JSON pipeline config. `verify` and `export` fall back to <out>/config.json.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Mesh format; overrides `outputs.mesh` in the config.
    #[arg(long)]
    format: Option<MeshFormat>,
    /// Tolerance override, `name=value`; repeatable.
    #[arg(long = "tol", value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("`{v}` is not a number"))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(format!(
            "tolerance for `{k}` must be finite and non-negative"
        ));
    }
    Ok((k.trim().to_string(), v))
}

impl Common {
    fn load_config(&self, fallback: bool) -> Result<PipelineConfig, Error> {
        let path = match (&self.config, fallback) {
            (Some(p), _) => p.clone(),
            (None, true) => self.out.join(CONFIG_FILE),
            (None, false) => return Err(Error::Parse("--config is required".into())),
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = PipelineConfig::from_json(&text)?;
        cfg.tolerances.extend(self.tol.iter().cloned());
        if let Some(f) = self.format {
            cfg.outputs.mesh = f;
        }
        cfg.resolved()
    }
}

enum Outcome {
    Report(Report),
    Value(serde_json::Value),
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn prepare_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn save_config(dir: &Path, cfg: &PipelineConfig) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(cfg)?;
    s.push('\n');
    write_text(&dir.join(CONFIG_FILE), &s)
}

fn mesh_name(format: MeshFormat) -> String {
    format!("immersion.{}", format.extension())
}

fn run(command: Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Generate(c) => {
            let cfg = c.load_config(false)?;
            let (v, report) = pipeline::generate(&cfg)?;
            prepare_dir(&c.out)?;
            write_potential(&c.out, &v, cfg.mode)?;
            save_config(&c.out, &report.config)?;
            write_text(&c.out.join(REPORT_FILE), &report.to_json())?;
            Ok(Outcome::Report(report))
        }
        Command::Build(c) => {
            let cfg = c.load_config(false)?;
            let out = pipeline::build(&cfg)?;
            let cfg = &out.report.config;
            prepare_dir(&c.out)?;
            write_potential(&c.out, &out.v, cfg.mode)?;
            let meta = SpinorMeta {
                h: out.v.mean_curvature(),
                anchor: cfg.anchor,
                psi0: out.psi0.map(|z| [z.re, z.im]),
            };
            write_spinor(&c.out, &out.psi, &meta)?;
            write_immersion(&c.out, &out.immersion)?;
            let mesh = export_mesh(&out.immersion, cfg.outputs.mesh, &out.scalars.named())?;
            write_text(&c.out.join(mesh_name(cfg.outputs.mesh)), &mesh)?;
            save_config(&c.out, cfg)?;
            write_text(&c.out.join(REPORT_FILE), &out.report.to_json())?;
            Ok(Outcome::Report(out.report))
        }
        Command::Verify(c) => {
            let cfg = c.load_config(true)?;
            let (v, _) = read_potential(&c.out)?;
            let (psi, _) = read_spinor(&c.out)?;
            let f = read_immersion(&c.out)?;
            Ok(Outcome::Report(pipeline::verify(&cfg, &v, &psi, &f)?))
        }
        Command::Export(c) => {
            let cfg = c.load_config(true)?;
            let f = read_immersion(&c.out)?;
            let (psi, meta) = read_spinor(&c.out)?;
            let mc = mean_curvature_estimate(&f, Some(&psi), meta.h, &CurvatureOptions::default())?;
            let format = cfg.outputs.mesh;
            let mesh = export_mesh(&f, format, &[("H_est", &mc.h_est)])?;
            let path = c.out.join(mesh_name(format));
            write_text(&path, &mesh)?;
            Ok(Outcome::Value(serde_json::json!({
                "command": "export",
                "format": format,
                "path": path.display().to_string(),
                "vertices": f.points().len(),
                "mean_curvature": mc.report,
            })))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) => e.exit_code() as u8,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help, --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            println!(
                "{}",
                serde_json::json!({ "error": e.kind().to_string(), "exit_code": 1 })
            );
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(Outcome::Report(report)) => {
            print!("{}", report.to_json());
            if report.pass {
                ExitCode::SUCCESS
            } else {
                let names: Vec<&str> = report
                    .failures()
                    .iter()
                    .map(|e| e.residual.name.as_str())
                    .collect();
                eprintln!("residuals over tolerance: {}", names.join(", "));
                ExitCode::from(EXIT_TOLERANCE)
            }
        }
        Ok(Outcome::Value(v)) => {
            println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(err) => {
            let code = exit_code(&err);
            eprintln!("error: {err:#}");
            let doc = serde_json::json!({ "error": format!("{err:#}"), "exit_code": code });
            println!("{doc}");
            ExitCode::from(code)
        }
    }
}
