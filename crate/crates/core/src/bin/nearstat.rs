use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use nearstat::adversaries::{build_channel_instance, ChannelAdversaryConfig};
use nearstat::harness::config::ExperimentConfig;
use nearstat::harness::figures::default_grid;
use nearstat::harness::{default_output_dir, figure_csv, run_experiment, run_suite, FigureId, GridSpec, Suite, SuiteSizes};
use nearstat::rng::{role, RngStream};
use nearstat::solvers::default_nonsmooth_schedule;
use nearstat::stationarity::{certify_delta_eps, certify_eps, subdiff_norm_lower_bound, Sampling};
use nearstat::zoo::{InstanceKind, InstanceSpec};
use nearstat::{Error, Vector};

#[derive(Parser)]
#[command(name = "nearstat", version, about = "Hard instances and stationarity certificates for nonsmooth optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play a configured experiment; writes transcripts and report.json.
    Run {
        /// JSON config document.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Field overrides such as `--solver.kind steepest` or `--T=5`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Certify (or fail to certify) stationarity of a function at a point.
    Certify {
        /// Instance JSON, inline or as a file path.
        #[arg(long)]
        function: String,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, value_enum)]
        notion: Notion,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[arg(long)]
        delta: Option<f64>,
        /// Uniform ball samples (ignored with --stencil).
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Offsets `a,b;c,d;...` used instead of ball sampling.
        #[arg(long, allow_hyphen_values = true)]
        stencil: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build and persist a channel instance against the configured solver.
    Adversary {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// CSV value grid of a figure.
    FigureData {
        #[arg(value_enum)]
        figure: FigureId,
        #[arg(long, allow_hyphen_values = true)]
        u_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        u_max: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        v_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        v_max: Option<f64>,
        #[arg(long)]
        resolution: Option<usize>,
        /// Output file (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the report here as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Notion {
    Eps,
    DeltaEps,
}

/// Exit status: 1 for failed verdicts or runtime errors, 2 for bad input.
enum Failure {
    Config(Error),
    Runtime(Error),
    Verdicts,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn config_err(e: Error) -> Failure {
    Failure::Config(e)
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig, Failure> {
    let base = match path {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| Failure::Config(e.into()))?),
        None => None,
    };
    let cfg = ExperimentConfig::from_parts(base.as_deref(), overrides).map_err(config_err)?;
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn parse_point(s: &str) -> Result<Vector, Failure> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| Failure::Config(Error::InvalidParameter(format!("bad point `{s}`: {e}"))))?;
    Vector::new(vals).map_err(config_err)
}

fn read_inline_or_file(s: &str) -> Result<String, Failure> {
    if s.trim_start().starts_with('{') {
        Ok(s.to_string())
    } else {
        fs::read_to_string(s).map_err(|e| Failure::Config(e.into()))
    }
}

fn cmd_run(config: Option<PathBuf>, overrides: Vec<String>) -> Result<(), Failure> {
    let cfg = load_config(config.as_deref(), &overrides)?;
    let out = run_experiment(&cfg)?;
    let dir = cfg.output_path.clone().unwrap_or_else(default_output_dir);
    out.write(&dir)?;
    for v in &out.report.verdicts {
        println!("{}", v.line());
    }
    println!("report: {}", dir.join("report.json").display());
    if out.report.passed() {
        Ok(())
    } else {
        Err(Failure::Verdicts)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_certify(
    function: &str,
    point: &str,
    notion: Notion,
    eps: f64,
    delta: Option<f64>,
    samples: usize,
    stencil: Option<String>,
    seed: u64,
) -> Result<(), Failure> {
    let spec = InstanceSpec::from_json(&read_inline_or_file(function)?).map_err(config_err)?;
    let mut f = spec.build().map_err(config_err)?;
    let x = parse_point(point)?;
    let mut rng = RngStream::derive(seed, role::CERTIFIER);
    let cert = match notion {
        Notion::Eps => certify_eps(&mut f, &x, eps)?,
        Notion::DeltaEps => {
            let delta = delta.ok_or_else(|| Failure::Config(Error::InvalidParameter("--delta is required".into())))?;
            let sampling = match stencil {
                Some(s) => Sampling::Stencil(s.split(';').map(parse_point).collect::<Result<_, _>>()?),
                None => Sampling::BallUniform(samples),
            };
            certify_delta_eps(&mut f, &x, delta, eps, &sampling, &mut rng)?
        }
    };
    let lower = if spec.kind == InstanceKind::Channel {
        subdiff_norm_lower_bound(&spec.build_channel()?, &x).ok()
    } else {
        None
    };
    let conclusive = cert.kind.is_witness() || lower.as_ref().is_some_and(|l| l.value > eps);
    let doc = match &lower {
        Some(l) => json!({ "certificate": cert, "lower_bound": l }),
        None => json!({ "certificate": cert }),
    };
    println!("{}", serde_json::to_string_pretty(&doc).map_err(Error::from)?);
    if conclusive {
        Ok(())
    } else {
        Err(Failure::Verdicts)
    }
}

fn cmd_adversary(config: Option<PathBuf>, overrides: Vec<String>) -> Result<(), Failure> {
    let cfg = load_config(config.as_deref(), &overrides)?;
    let desc = cfg.solver.descriptor(default_nonsmooth_schedule()).map_err(config_err)?;
    let adv = ChannelAdversaryConfig {
        mode: cfg.w_mode(desc.class),
        w_norm: cfg.adversary.w_norm,
    };
    let alg_rng = RngStream::derive(cfg.seed, role::ALGORITHM);
    let mut adv_rng = RngStream::derive(cfg.seed, role::ADVERSARY);
    let build = build_channel_instance(&adv, &desc, cfg.t, cfg.d, &alg_rng, &mut adv_rng)?;
    let dir = cfg.output_path.clone().unwrap_or_else(default_output_dir);
    fs::create_dir_all(&dir).map_err(Error::from)?;
    let inst = dir.join("instance.json");
    fs::write(&inst, InstanceSpec::channel(&build.instance).to_json()?).map_err(Error::from)?;
    let diag = dir.join("diagnostics.json");
    fs::write(&diag, serde_json::to_string_pretty(&build.diagnostics).map_err(Error::from)?).map_err(Error::from)?;
    fs::write(dir.join("f_tilde.jsonl"), build.f_tilde_transcript.to_jsonl()?).map_err(Error::from)?;
    println!("instance: {}", inst.display());
    println!("diagnostics: {}", diag.display());
    Ok(())
}

fn cmd_figure(figure: FigureId, overrides: [Option<f64>; 4], resolution: Option<usize>, out: Option<PathBuf>) -> Result<(), Failure> {
    let mut grid: GridSpec = default_grid(figure);
    let [a, b, c, d] = overrides;
    grid.u_min = a.unwrap_or(grid.u_min);
    grid.u_max = b.unwrap_or(grid.u_max);
    grid.v_min = c.unwrap_or(grid.v_min);
    grid.v_max = d.unwrap_or(grid.v_max);
    grid.resolution = resolution.unwrap_or(grid.resolution);
    grid.validate().map_err(config_err)?;
    let csv = figure_csv(figure, &grid)?;
    match out {
        Some(p) => fs::write(p, csv).map_err(Error::from)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_verify(suite: Suite, seed: u64, out: Option<PathBuf>) -> Result<(), Failure> {
    let report = run_suite(suite, seed, &SuiteSizes::default())?;
    for v in &report.verdicts {
        println!("{}", v.line());
    }
    println!("elapsed: {:.2} s", report.elapsed_seconds);
    if let Some(p) = out {
        fs::write(p, report.to_json()?).map_err(Error::from)?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verdicts)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides } => cmd_run(config, overrides),
        Command::Certify {
            function,
            point,
            notion,
            eps,
            delta,
            samples,
            stencil,
            seed,
        } => cmd_certify(&function, &point, notion, eps, delta, samples, stencil, seed),
        Command::Adversary { config, overrides } => cmd_adversary(config, overrides),
        Command::FigureData {
            figure,
            u_min,
            u_max,
            v_min,
            v_max,
            resolution,
            out,
        } => cmd_figure(figure, [u_min, u_max, v_min, v_max], resolution, out),
        Command::Verify { suite, seed, out } => cmd_verify(suite, seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdicts) => ExitCode::from(1),
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("invalid input: {e}");
            ExitCode::from(2)
        }
    }
}
