//! `swsync`: command-line front end for the synchronization pipeline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod repro;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use swsync_core::dynamics::{find_limit_cycle, CycleOptions};
use swsync_core::graph::{format_edge_list, generate_small_world, read_edge_list};
use swsync_core::msf::{stability_interval, IntervalOptions};
use swsync_core::netsim::{perturbed_initials, simulate_network, sync_verdict, SimOptions, SYNC_TOL, SYNC_WINDOW};
use swsync_core::predictor::{predict_from_sigma_max, validate_prediction, validation_csv, ValidationOptions};
use swsync_core::spectral::{exact_moments, expected_moments, laplacian_spectrum};
use swsync_core::triangle::fit_triangle;
use swsync_core::{Graph, Linearization, MomentSource, MomentVariant, Rossler, SmallWorldParams};

#[derive(Parser, Debug)]
#[command(name = "swsync", version, about = "Synchronization prediction for small-world oscillator networks")]
struct Cli {
    /// Directory for output files when --output is not given.
    #[arg(long, global = true, env = "SWSYNC_OUT_DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a small-world graph and write it as an edge list.
    Generate(GenerateArgs),
    /// First three Laplacian moments of a graph file or the model expectation.
    Moments(MomentsArgs),
    /// Laplacian eigenvalues of a graph, ascending, as CSV.
    Eigs(EigsArgs),
    /// Triangular density matching three moments.
    Fit(FitArgs),
    /// Master stability function sweep and stability threshold.
    Msf(MsfArgs),
    /// Simulate a Rössler network on a graph file.
    Simulate(SimulateArgs),
    /// Predict the admissible coupling interval.
    Predict(PredictArgs),
    /// Simulate small-world networks at several couplings and report verdicts.
    Validate(ValidateArgs),
    /// Regenerate every reference table and data series into a directory.
    Repro(repro::ReproArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, value_parser = non_negative)]
    r: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MomentsArgs {
    /// Edge-list file, `-` for stdin.
    graph: Option<PathBuf>,
    /// Use the closed-form expectation for (k, r) instead of a graph.
    #[arg(long, requires_all = ["k", "r"], conflicts_with = "graph")]
    expected: bool,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_parser = non_negative)]
    r: Option<f64>,
    #[arg(long, default_value_t = MomentVariant::Corrected)]
    variant: MomentVariant,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EigsArgs {
    /// Edge-list file, `-` or omitted for stdin.
    graph: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, allow_hyphen_values = true)]
    m1: f64,
    #[arg(long, allow_hyphen_values = true)]
    m2: f64,
    #[arg(long, allow_hyphen_values = true)]
    m3: f64,
    /// Also write the density as `lambda,density` with this many samples.
    #[arg(long)]
    density_samples: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 0.2)]
    a: f64,
    #[arg(long, default_value_t = 0.2)]
    b: f64,
    #[arg(long, default_value_t = 2.5)]
    c: f64,
    /// Variational matrix: `exact` or `fixed-z-decay`.
    #[arg(long, default_value_t = Linearization::Exact)]
    linearization: Linearization,
}

impl ModelArgs {
    fn model(&self) -> Rossler {
        Rossler::new(self.a, self.b, self.c).with_linearization(self.linearization)
    }

    fn echo(&self) -> Value {
        json!({"a": self.a, "b": self.b, "c": self.c, "linearization": self.linearization.to_string()})
    }
}

#[derive(Args, Debug)]
struct MsfArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    sigma_start: f64,
    /// Upper end of the sweep.
    #[arg(long, alias = "sigma-max", default_value_t = 15.0, value_parser = non_negative)]
    sigma_end: f64,
    #[arg(long, default_value_t = 0.2, value_parser = positive)]
    step: f64,
    #[arg(long, default_value_t = 1e-3, value_parser = positive)]
    refine_tol: f64,
    /// Curve CSV (`sigma,F`).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Edge-list file, `-` for stdin.
    graph: PathBuf,
    #[arg(long, value_parser = non_negative)]
    gamma: f64,
    #[arg(long, default_value_t = 40.0, value_parser = positive)]
    t_end: f64,
    #[arg(long, default_value_t = 0.01, value_parser = positive)]
    dt: f64,
    #[arg(long)]
    seed: u64,
    /// Half-width of the uniform perturbation around the anchor state.
    #[arg(long, default_value_t = 2.0, value_parser = non_negative)]
    amplitude: f64,
    #[arg(long, default_value_t = 10)]
    sample_every: usize,
    /// Add each node's first coordinate to the trace.
    #[arg(long)]
    record_nodes: bool,
    #[command(flatten)]
    model: ModelArgs,
    /// Trace CSV.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SourceKind {
    Expected,
    Exact,
    Literal,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, value_parser = non_negative)]
    r: f64,
    #[arg(long, value_enum, default_value_t = SourceKind::Expected)]
    source: SourceKind,
    #[arg(long, default_value_t = MomentVariant::Corrected)]
    variant: MomentVariant,
    #[arg(long, allow_hyphen_values = true)]
    m1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    m2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    m3: Option<f64>,
    /// Required with `--source exact`.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the stability computation and use this threshold.
    #[arg(long, value_parser = positive)]
    sigma_max: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, value_parser = non_negative)]
    r: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    gammas: Vec<f64>,
    /// Each seed draws one graph and one set of initial states.
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 2.0, value_parser = non_negative)]
    amplitude: f64,
    #[arg(long, default_value_t = 40.0, value_parser = positive)]
    t_end: f64,
    #[arg(long, default_value_t = 0.01, value_parser = positive)]
    dt: f64,
    /// Annotate rows with the interval predicted from this threshold.
    #[arg(long, value_parser = positive)]
    sigma_max: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("must be finite".into())
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err("must be positive".into())
    }
}

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err("must be non-negative".into())
    }
}

/// Invalid flag combination detected after parsing; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

pub(crate) fn resolve_output(out_dir: Option<&Path>, output: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    output.map(Path::to_path_buf).or_else(|| out_dir.map(|d| d.join(default_name)))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes to `path` if given, otherwise to stdout.
fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, contents),
        None => {
            io::stdout().write_all(contents.as_bytes())?;
            Ok(())
        }
    }
}

pub(crate) fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn read_graph(path: Option<&Path>) -> Result<Graph> {
    match path {
        None => read_stdin_graph(),
        Some(p) if p == Path::new("-") => read_stdin_graph(),
        Some(p) => Ok(swsync_core::graph::load_edge_list(p).with_context(|| format!("reading {}", p.display()))?),
    }
}

fn read_stdin_graph() -> Result<Graph> {
    let mut buf = String::new();
    io::stdin().read_to_string(&mut buf)?;
    read_edge_list(buf.as_bytes()).context("reading edge list from stdin")
}

fn path_echo(p: Option<&Path>) -> Value {
    p.map_or(Value::Null, |p| Value::String(p.display().to_string()))
}

fn run(cli: Cli) -> Result<()> {
    let out_dir = cli.out_dir.as_deref();
    match cli.command {
        Command::Generate(a) => {
            let g = generate_small_world(&SmallWorldParams::new(a.nodes, a.k, a.r, a.seed))?;
            emit(resolve_output(out_dir, a.output.as_deref(), "graph.edges").as_deref(), &format_edge_list(&g))
        }
        Command::Moments(a) => {
            let (moments, inputs, mut notes) = if a.expected {
                let (k, r) = (a.k.expect("required by clap"), a.r.expect("required by clap"));
                let m = expected_moments(k, r, a.variant)?;
                let notes = match a.variant {
                    MomentVariant::Paper => {
                        let corrected = expected_moments(k, r, MomentVariant::Corrected)?;
                        vec![format!(
                            "q3 from the uncorrected closed form; the corrected variant gives {}",
                            corrected.q3
                        )]
                    }
                    MomentVariant::Corrected => Vec::new(),
                };
                (m, json!({"expected": true, "k": k, "r": r, "variant": a.variant.to_string()}), notes)
            } else {
                if a.k.is_some() || a.r.is_some() {
                    return Err(usage("--k and --r need --expected"));
                }
                let g = read_graph(a.graph.as_deref())?;
                let m = exact_moments(&g)?;
                (m, json!({"graph": path_echo(a.graph.as_deref())}), Vec::new())
            };
            if a.expected && a.k == Some(3) && a.r == Some(4.0) && a.variant == MomentVariant::Paper {
                notes.push("neither closed form yields the sometimes-quoted q3 = 1431 for these parameters".into());
            }
            let out = json!({
                "inputs": inputs,
                "q1": moments.q1,
                "q2": moments.q2,
                "q3": moments.q3,
                "normalized": moments.normalized,
                "notes": notes,
            });
            emit(resolve_output(out_dir, a.output.as_deref(), "moments.json").as_deref(), &to_json(&out))
        }
        Command::Eigs(a) => {
            let g = read_graph(a.graph.as_deref())?;
            let spec = laplacian_spectrum(&g)?;
            emit(resolve_output(out_dir, a.output.as_deref(), "eigenvalues.csv").as_deref(), &spec.to_csv())
        }
        Command::Fit(a) => {
            let fit = fit_triangle(a.m1, a.m2, a.m3)?;
            let out = json!({
                "inputs": {"m1": a.m1, "m2": a.m2, "m3": a.m3},
                "x1": fit.x1,
                "x2": fit.x2,
                "x3": fit.x3,
                "height": fit.height,
            });
            let json_path = resolve_output(out_dir, a.output.as_deref(), "fit.json");
            if let Some(samples) = a.density_samples {
                let dir = json_path
                    .as_deref()
                    .and_then(Path::parent)
                    .map(Path::to_path_buf)
                    .or(out_dir.map(Path::to_path_buf));
                let dir = dir.ok_or_else(|| usage("--density-samples needs --output or --out-dir"))?;
                write_file(&dir.join("fit_density.csv"), &fit.density_csv(samples))?;
            }
            emit(json_path.as_deref(), &to_json(&out))
        }
        Command::Msf(a) => {
            if a.sigma_end < a.sigma_start {
                return Err(usage("--sigma-end must not be below --sigma-start"));
            }
            let model = a.model.model();
            let cycle = find_limit_cycle(&model, &Rossler::REFERENCE_ANCHOR, CycleOptions::default())?;
            let opts = IntervalOptions {
                start: a.sigma_start,
                end: a.sigma_end,
                coarse_step: a.step,
                refine_tol: a.refine_tol,
            };
            let interval = stability_interval(&model, &cycle, opts)?;
            if let Some(p) = resolve_output(out_dir, a.output.as_deref(), "msf.csv") {
                write_file(&p, &interval.curve.to_csv())?;
            } else {
                io::stderr().write_all(interval.curve.to_csv().as_bytes())?;
            }
            let out = json!({
                "inputs": {
                    "model": a.model.echo(),
                    "sigma_start": a.sigma_start,
                    "sigma_end": a.sigma_end,
                    "step": a.step,
                    "refine_tol": a.refine_tol,
                },
                "sigma_max": interval.sigma_max,
                "bracket": [interval.bracket.0, interval.bracket.1],
                "period": cycle.period,
            });
            emit(None, &to_json(&out))
        }
        Command::Simulate(a) => {
            if a.sample_every == 0 {
                return Err(usage("--sample-every must be positive"));
            }
            let g = read_graph(Some(&a.graph))?;
            let model = a.model.model();
            let init = perturbed_initials(&Rossler::REFERENCE_ANCHOR, a.amplitude, g.node_count(), a.seed);
            let opts =
                SimOptions { t_end: a.t_end, dt: a.dt, sample_every: a.sample_every, record_nodes: a.record_nodes };
            let trace = simulate_network(&g, &model, a.gamma, &init, opts)?;
            let window = SYNC_WINDOW.min(a.t_end);
            let report = sync_verdict(&trace, SYNC_TOL, window)?;
            let trace_path = resolve_output(out_dir, a.output.as_deref(), "trace.csv");
            let out = json!({
                "inputs": {
                    "graph": path_echo(Some(&a.graph)),
                    "gamma": a.gamma,
                    "t_end": a.t_end,
                    "dt": a.dt,
                    "seed": a.seed,
                    "amplitude": a.amplitude,
                    "sample_every": a.sample_every,
                    "model": a.model.echo(),
                },
                "verdict": report.verdict,
                "final_err": report.final_err,
                "tol": SYNC_TOL,
                "window": window,
                "trace": path_echo(trace_path.as_deref()),
            });
            match trace_path {
                Some(p) => {
                    write_file(&p, &trace.to_csv())?;
                    emit(None, &to_json(&out))
                }
                None => {
                    io::stderr().write_all(to_json(&out).as_bytes())?;
                    emit(None, &trace.to_csv())
                }
            }
        }
        Command::Predict(a) => {
            let source = match a.source {
                SourceKind::Expected => MomentSource::Expected { variant: a.variant },
                SourceKind::Exact => MomentSource::Exact,
                SourceKind::Literal => match (a.m1, a.m2, a.m3) {
                    (Some(m1), Some(m2), Some(m3)) => MomentSource::Literal { m1, m2, m3 },
                    _ => return Err(usage("--source literal needs --m1, --m2 and --m3")),
                },
            };
            if a.source != SourceKind::Literal && (a.m1.is_some() || a.m2.is_some() || a.m3.is_some()) {
                return Err(usage("--m1/--m2/--m3 only apply to --source literal"));
            }
            if a.source == SourceKind::Exact && a.seed.is_none() {
                return Err(usage("--source exact draws a graph and needs --seed"));
            }
            let params = SmallWorldParams::new(a.nodes, a.k, a.r, a.seed.unwrap_or(0));
            params.validate()?;
            let model = a.model.model();
            let sigma_max = match a.sigma_max {
                Some(s) => s,
                None => {
                    let cycle = find_limit_cycle(&model, &Rossler::REFERENCE_ANCHOR, CycleOptions::default())?;
                    stability_interval(&model, &cycle, IntervalOptions::default())?.sigma_max
                }
            };
            let p = predict_from_sigma_max(&params, sigma_max, source)?;
            let mut out = serde_json::to_value(&p)?;
            out["inputs"] = json!({
                "nodes": a.nodes,
                "k": a.k,
                "r": a.r,
                "seed": a.seed,
                "source": p.source,
                "sigma_max": a.sigma_max,
                "model": a.model.echo(),
            });
            out["gamma_interval"] = json!([0.0, p.gamma_max]);
            emit(resolve_output(out_dir, a.output.as_deref(), "prediction.json").as_deref(), &to_json(&out))
        }
        Command::Validate(a) => {
            if a.gammas.iter().any(|g| !g.is_finite() || *g < 0.0) {
                return Err(usage("--gammas must be non-negative"));
            }
            let params = SmallWorldParams::new(a.nodes, a.k, a.r, 0);
            params.validate()?;
            let model = a.model.model();
            let opts = ValidationOptions {
                amplitude: a.amplitude,
                sim: SimOptions { t_end: a.t_end, dt: a.dt, ..SimOptions::default() },
                tol: SYNC_TOL,
                window: SYNC_WINDOW.min(a.t_end),
            };
            let prediction = a.sigma_max.map(|s| {
                predict_from_sigma_max(&params, s, MomentSource::Expected { variant: MomentVariant::Corrected })
            });
            let prediction_error = prediction.as_ref().and_then(|p| p.as_ref().err()).map(ToString::to_string);
            let prediction = prediction.and_then(|p| p.ok());
            let rows = validate_prediction(&params, &model, &Rossler::REFERENCE_ANCHOR, &a.gammas, &a.seeds, opts)?;
            let csv_path = resolve_output(out_dir, a.output.as_deref(), "validation.csv");
            emit(csv_path.as_deref(), &validation_csv(&rows))?;
            if csv_path.is_some() {
                let out = json!({
                    "inputs": {
                        "nodes": a.nodes,
                        "k": a.k,
                        "r": a.r,
                        "gammas": a.gammas,
                        "seeds": a.seeds,
                        "amplitude": a.amplitude,
                        "t_end": a.t_end,
                        "dt": a.dt,
                        "sigma_max": a.sigma_max,
                        "model": a.model.echo(),
                    },
                    "gamma_max": prediction.as_ref().map(|p| p.gamma_max),
                    "prediction_error": prediction_error,
                    "rows": rows.iter().map(|r| json!({
                        "gamma": r.gamma,
                        "seed": r.seed,
                        "verdict": r.verdict,
                        "final_err": if r.final_err.is_finite() { json!(r.final_err) } else { Value::Null },
                        "blow_up": r.blow_up,
                        "predicted_inside": prediction.as_ref().map(|p| p.contains(r.gamma)),
                    })).collect::<Vec<_>>(),
                });
                emit(None, &to_json(&out))?;
            }
            Ok(())
        }
        Command::Repro(a) => repro::run(a, out_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            eprintln!("run `swsync --help` for usage");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
