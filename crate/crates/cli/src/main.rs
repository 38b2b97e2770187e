use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tpmcert::certify::{certify_counts, BootstrapOptions};
use tpmcert::classical::classical_bounds;
use tpmcert::compat::partial_swap_compat_region;
use tpmcert::counts::ingest_counts;
use tpmcert::experiment::{run_experiment, ExperimentConfig, NoiseSpec, Shots};
use tpmcert::proclib::{
    alpha_grid, crossing_time, decay_prediction, partial_swap_gamma_curve, DecayOptions,
    NoiseParams,
};
use tpmcert::report::{emit_report, Curve, CurvePoint};
use tpmcert::{Error, Result};

#[derive(Parser)]
#[command(name = "tpmcert", version, about = "Quantum memory certification from two-point measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify count data read from CSV.
    Certify(CertifyArgs),
    /// Simulate a configured experiment and certify it.
    Simulate(SimulateArgs),
    /// Predicted Γ under memory decay.
    Decay(DecayArgs),
    /// Γ of the partial-swap protocol over α ∈ [0, π].
    SwapCurve(SwapCurveArgs),
    /// Exact classical bounds by vertex enumeration.
    ClassicalBound(ClassicalArgs),
    /// Worst joint-measurability margin of the partial-swap assemblage.
    JmScan(JmScanArgs),
}

#[derive(Args)]
struct OutArg {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    /// Observational counts (`x,a,b,count`).
    #[arg(long)]
    counts: PathBuf,
    /// Interventional counts (`do_a,x,b,count`).
    #[arg(long)]
    do_counts: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    resamples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    sigma_k: f64,
    /// Keep the argmin settings of the data fixed across resamples.
    #[arg(long)]
    frozen_argmin: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in configuration (`memory_test`, `partial_swap`).
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use exact probabilities instead of sampling.
    #[arg(long, conflicts_with = "shots")]
    exact: bool,
    /// Shots per setting.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long)]
    sigma_k: Option<f64>,
    /// Zero-wait Γ; adds the reference noise model when the config has none.
    #[arg(long)]
    initial_gamma: Option<f64>,
    /// Waiting time in ms under the noise model.
    #[arg(long)]
    wait_ms: Option<f64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct DecayArgs {
    #[arg(long, default_value_t = 0.642)]
    initial_gamma: f64,
    #[arg(long, default_value_t = 364.0)]
    t2: f64,
    #[arg(long, default_value_t = 1170.0)]
    t1: f64,
    #[arg(long, default_value_t = 0.995)]
    echo_fidelity: f64,
    #[arg(long, default_value_t = 2.5)]
    echo_interval: f64,
    #[arg(long)]
    include_t1: bool,
    /// Last waiting time in ms.
    #[arg(long, default_value_t = 200.0)]
    t_max: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SwapCurveArgs {
    #[arg(long, default_value_t = 64)]
    points: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ClassicalArgs {
    /// Size of the setting alphabet.
    #[arg(long = "x", default_value_t = 4)]
    x_size: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct JmScanArgs {
    /// Comma-separated α values in radians; defaults to an even grid.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Grid size when `--alphas` is absent.
    #[arg(long, default_value_t = 17)]
    points: usize,
    /// Angle grid density per Bloch angle.
    #[arg(long, default_value_t = 20)]
    density: usize,
    #[command(flatten)]
    out: OutArg,
}

fn written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("JSON value");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(path)
}

fn run_certify(a: CertifyArgs) -> Result<()> {
    let obs = ingest_counts(&a.counts)?;
    let intv = a.do_counts.as_ref().map(ingest_counts).transpose()?;
    let boot = BootstrapOptions {
        resamples: a.resamples,
        seed: a.seed,
        frozen_argmin: a.frozen_argmin,
    };
    let report = certify_counts(&obs, intv.as_ref(), a.sigma_k, &boot)?;
    println!(
        "gamma = {} ± {}",
        report.gamma,
        report.gamma_stderr.unwrap_or(f64::NAN)
    );
    println!("pearl_delta = {}", report.pearl_delta);
    if let Some(v) = report.acde {
        println!("acde = {v}");
    }
    println!("nonclassical = {}", report.verdict_nonclassical);
    written(&emit_report(Some(&report), &[], &a.out.out)?);
    Ok(())
}

fn run_simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = match (&a.preset, &a.config) {
        (Some(name), _) => ExperimentConfig::preset(name)?,
        (None, Some(path)) => ExperimentConfig::load(path)?,
        (None, None) => return Err(Error::Config("give --preset or --config".into())),
    };
    if a.exact {
        cfg.shots = Shots::Mode("exact".into());
    }
    if let Some(n) = a.shots {
        cfg.shots = Shots::Count(n);
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(r) = a.resamples {
        cfg.resamples = r;
    }
    if let Some(k) = a.sigma_k {
        cfg.sigma_k = k;
    }
    if let Some(g) = a.initial_gamma {
        let p = NoiseParams::reference(g);
        let noise = cfg.noise.get_or_insert(NoiseSpec {
            t2: p.t2,
            t1: p.t1,
            echo_fidelity: p.echo_fidelity,
            echo_interval: p.echo_interval,
            initial_gamma: g,
            wait_ms: 0.0,
            include_t1: false,
        });
        noise.initial_gamma = g;
    }
    if let Some(t) = a.wait_ms {
        match cfg.noise.as_mut() {
            Some(n) => n.wait_ms = t,
            None => {
                return Err(Error::Config(
                    "--wait-ms needs a noise model (config [noise] or --initial-gamma)".into(),
                ))
            }
        }
    }
    let out = run_experiment(&cfg)?;
    println!("gamma = {}", out.report.gamma);
    println!("pearl_delta = {}", out.report.pearl_delta);
    if let Some(v) = out.report.acde {
        println!("acde = {v}");
    }
    println!("nonclassical = {}", out.report.verdict_nonclassical);
    let mut paths = emit_report(Some(&out.report), &[], &a.out.out)?;
    if let Some((obs, intv)) = &out.counts {
        for (name, t) in [("counts.csv", obs), ("do_counts.csv", intv)] {
            let path = a.out.out.join(name);
            let file = std::fs::File::create(&path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            t.write_csv(file)?;
            paths.push(path);
        }
    }
    written(&paths);
    Ok(())
}

fn run_decay(a: DecayArgs) -> Result<()> {
    if a.points < 2 || !(a.t_max > 0.0) {
        return Err(Error::Validation("need at least 2 points and t_max > 0".into()));
    }
    let params = NoiseParams {
        t2: a.t2,
        t1: a.t1,
        echo_fidelity: a.echo_fidelity,
        echo_interval: a.echo_interval,
        initial_gamma: a.initial_gamma,
    };
    let opts = DecayOptions {
        include_t1: a.include_t1,
    };
    let times: Vec<f64> = (0..a.points)
        .map(|k| a.t_max * k as f64 / (a.points - 1) as f64)
        .collect();
    let pred = decay_prediction(&params, &times, opts)?;
    match crossing_time(&params, opts)? {
        Some(t) => println!("crossing_time_ms = {t}"),
        None => println!("crossing_time_ms = none (already classical at t = 0)"),
    }
    let curve = Curve::new(
        "decay",
        pred.iter().map(|&(t, g)| CurvePoint::exact(t, g)).collect(),
    );
    written(&emit_report(None, &[curve], &a.out.out)?);
    Ok(())
}

fn run_swap_curve(a: SwapCurveArgs) -> Result<()> {
    if a.points < 2 {
        return Err(Error::Validation("need at least 2 points".into()));
    }
    let curve = partial_swap_gamma_curve(&alpha_grid::<f64>(a.points))?;
    let violations = curve.iter().filter(|(_, g)| *g < 1.0 - 1e-9).count();
    let (alpha, gamma) = curve
        .iter()
        .copied()
        .fold((0.0, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best });
    println!("points = {}", curve.len());
    println!("violations = {violations}");
    println!("min_gamma = {gamma} at alpha = {alpha}");
    let curve = Curve::new(
        "swap_curve",
        curve.into_iter().map(|(x, g)| CurvePoint::exact(x, g)).collect(),
    );
    written(&emit_report(None, &[curve], &a.out.out)?);
    Ok(())
}

fn run_classical(a: ClassicalArgs) -> Result<()> {
    let b = classical_bounds(a.x_size)?;
    let value = json!({
        "x_size": b.x_size,
        "vertices": b.vertices,
        "min_gamma": b.min_gamma.to_string(),
        "max_pearl": b.max_pearl.to_string(),
        "crosstalk_vertices": b.crosstalk_vertices,
        "min_corrected": b.min_corrected.to_string(),
        "max_pearl_crosstalk": b.max_pearl_crosstalk.to_string(),
    });
    println!("x_size = {}", b.x_size);
    println!("vertices = {}", b.vertices);
    println!("min_gamma = {}", b.min_gamma);
    println!("max_pearl = {}", b.max_pearl);
    println!("crosstalk_vertices = {}", b.crosstalk_vertices);
    println!("min_corrected = {}", b.min_corrected);
    println!("max_pearl_crosstalk = {}", b.max_pearl_crosstalk);
    written(&[write_json(&a.out.out, "classical_bound.json", &value)?]);
    Ok(())
}

fn run_jm_scan(a: JmScanArgs) -> Result<()> {
    let alphas = a.alphas.unwrap_or_else(|| alpha_grid(a.points));
    let pts = partial_swap_compat_region(&alphas, a.density)?;
    for p in &pts {
        println!("alpha = {} margin = {}", p.alpha, p.min_margin);
    }
    let curve = Curve::new(
        "jm_scan",
        pts.iter().map(|p| CurvePoint::exact(p.alpha, p.min_margin)).collect(),
    );
    written(&emit_report(None, &[curve], &a.out.out)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Certify(a) => run_certify(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Decay(a) => run_decay(a),
        Command::SwapCurve(a) => run_swap_curve(a),
        Command::ClassicalBound(a) => run_classical(a),
        Command::JmScan(a) => run_jm_scan(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
