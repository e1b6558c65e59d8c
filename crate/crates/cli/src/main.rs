//! `cqed`: run the cavity-ensemble scenarios from a config file.
//!
//! Exit codes: 0 success, 1 config or usage error, 2 every grid point
//! failed, 3 some grid points failed. Tables are written in both failure
//! cases.

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, CommandFactory, Parser, Subcommand};
use cqed_scenarios::config::{self, Overrides, ScenarioHint};
use cqed_scenarios::runners::steady_report;
use cqed_scenarios::{persist, sweep, EngineKind, Scenario, ScenarioError, ScenarioSpec};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const UNITS: &str = "\
Units: rates and frequencies in rad/s (keys ending in _over_2pi take Hz), \
temperatures in kelvin. Scientific notation is accepted everywhere.

Config sections: [system] parameters, [scan] grid axes, [engine] solver \
settings, [output] dir and prefix. A sweep file lists [[runs]].

Environment: CQED_OUT_DIR sets the output directory and CQED_WORKERS the \
worker count; the --out and --workers flags take precedence.

Exit codes: 0 success, 1 config error, 2 all grid points failed, \
3 some grid points failed.";

#[derive(Parser, Debug)]
#[command(name = "cqed", version, about = "Atomic ensembles in a thermal microwave cavity", after_help = UNITS)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

fn scenario_parser() -> impl TypedValueParser<Value = Scenario> {
    PossibleValuesParser::new(Scenario::ALL.map(|s| s.name())).map(|s| s.parse::<Scenario>().expect("listed name"))
}

fn engine_parser() -> impl TypedValueParser<Value = EngineKind> {
    PossibleValuesParser::new(["exact_tensor", "exact_dicke", "cumulant"])
        .map(|s| s.parse::<EngineKind>().expect("listed name"))
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("'{s}' is not a positive number")),
    }
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory (overrides [output] dir and CQED_OUT_DIR)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for the grid (overrides CQED_WORKERS)
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
    /// Relative integration tolerance
    #[arg(long, global = true, value_parser = positive)]
    rel_tol: Option<f64>,
    /// Absolute integration tolerance
    #[arg(long, global = true, value_parser = positive)]
    abs_tol: Option<f64>,
    /// Solver engine
    #[arg(long, global = true, value_parser = engine_parser())]
    engine: Option<EngineKind>,
    /// Print nothing but errors
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Report every failed grid point and the timings
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run one scenario; without --config its preset parameters are used
    Run {
        #[arg(value_parser = scenario_parser())]
        scenario: Scenario,
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
    },
    /// Run every scenario listed in a config file
    Sweep {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// Output spectrum; the scenario follows from the drive unless named
    Spectrum {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// Print the steady state at the [system] parameters, ignoring [scan]
    Steady {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// Check a config and every grid point without computing or writing
    Validate {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// List the scenarios with their engines and inner axes
    ListScenarios,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Verbosity {
    Quiet,
    Normal,
    Verbose,
}

struct Ctx {
    overrides: Overrides,
    workers: usize,
    verbosity: Verbosity,
}

impl Ctx {
    fn say(&self, msg: impl AsRef<str>) {
        if self.verbosity >= Verbosity::Normal {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn detail(&self, msg: impl AsRef<str>) {
        if self.verbosity >= Verbosity::Verbose {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn context(c: &Common) -> Result<Ctx, ScenarioError> {
    let env_workers = config::env_workers()?;
    let workers = c
        .workers
        .map(|w| w as usize)
        .or(env_workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let out_dir = c.out.as_ref().map(|p| p.to_string_lossy().into_owned()).or_else(config::env_out_dir);
    let verbosity = match (c.quiet, c.verbose) {
        (true, _) => Verbosity::Quiet,
        (_, true) => Verbosity::Verbose,
        _ => Verbosity::Normal,
    };
    Ok(Ctx {
        overrides: Overrides {
            out_dir,
            engine: c.engine,
            rel_tol: c.rel_tol,
            abs_tol: c.abs_tol,
        },
        workers,
        verbosity,
    })
}

fn load(ctx: &Ctx, path: &Path, hint: ScenarioHint) -> Result<Vec<ScenarioSpec>, ScenarioError> {
    let mut specs = config::load_file(path, hint)?;
    for s in &mut specs {
        ctx.overrides.apply(s)?;
    }
    Ok(specs)
}

/// Runs and writes every spec. Returns (grid points, failed points).
fn execute(ctx: &Ctx, specs: &[ScenarioSpec]) -> Result<(usize, usize), ScenarioError> {
    let (mut points, mut failed) = (0, 0);
    for spec in specs {
        ctx.say(format!("{}: {} grid points on {} workers", spec.prefix(), spec.grid_points().map_err(ScenarioError::Config)?.len(), ctx.workers));
        let r = sweep::run(spec, ctx.workers)?;
        let w = persist::write(&r, Path::new(&spec.output.dir))?;
        if ctx.verbosity >= Verbosity::Verbose {
            let (status, msg) = (r.table.column("status"), r.table.column("message"));
            if let (Some(s), Some(m), Some(i)) = (status, msg, r.table.column("index")) {
                let mut seen = None;
                for row in r.table.rows.iter().filter(|row| row[s].render() == "failed") {
                    let idx = row[i].render();
                    if seen.as_ref() != Some(&idx) {
                        ctx.detail(format!("  point {idx} failed: {}", row[m].render()));
                        seen = Some(idx);
                    }
                }
            }
            ctx.detail(format!("  {:.2} s", r.wall_time_s));
        }
        ctx.say(format!(
            "  {} of {} points ok -> {}",
            r.points - r.failed,
            r.points,
            w.table.display()
        ));
        if let Some(s) = &w.summary {
            ctx.detail(format!("  summary -> {}", s.display()));
        }
        ctx.detail(format!("  metadata -> {}", w.sidecar.display()));
        points += r.points;
        failed += r.failed;
    }
    Ok((points, failed))
}

fn exit_for(points: usize, failed: usize) -> ExitCode {
    if failed == 0 {
        ExitCode::SUCCESS
    } else if failed == points {
        ExitCode::from(2)
    } else {
        ExitCode::from(3)
    }
}

fn validate(ctx: &Ctx, specs: &[ScenarioSpec]) -> Result<serde_json::Value, ScenarioError> {
    let mut runs = Vec::new();
    for spec in specs {
        let points = spec.grid_points().map_err(ScenarioError::Config)?;
        let mut errors = Vec::new();
        for p in &points {
            if let Err(e) = spec.params_at(p).and_then(|q| q.validate().map_err(|e| e.to_string())) {
                errors.push(format!("point {}: {e}", p.index));
            }
        }
        if !errors.is_empty() {
            let more = errors.len().saturating_sub(10);
            let mut msg = errors.into_iter().take(10).collect::<Vec<_>>().join("\n  ");
            if more > 0 {
                msg.push_str(&format!("\n  ... and {more} more"));
            }
            return Err(ScenarioError::Config(format!("{}: invalid grid points:\n  {msg}", spec.prefix())));
        }
        let base = spec.system.validate().map_err(|e| ScenarioError::Config(e.to_string()))?;
        let rows = points.len() * spec.inner_grid().map_err(ScenarioError::Config)?.map_or(1, |g| g.len());
        runs.push(serde_json::json!({
            "scenario": spec.scenario.name(),
            "points": points.len(),
            "rows": rows,
            "workers": ctx.workers,
            "params": base,
            "spec": spec,
        }));
    }
    Ok(serde_json::json!({ "valid": true, "runs": runs }))
}

/// A line to stdout. A reader that has gone away (`| head`) is not an error.
fn stdout(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn dispatch(cli: Cli) -> Result<ExitCode, ScenarioError> {
    if let Cmd::ListScenarios = cli.cmd {
        for s in Scenario::ALL {
            let engines: Vec<_> = s.engines().iter().map(|e| e.name()).collect();
            stdout(&format!(
                "{:<28} {:<34} inner axis: {:<6} {}",
                s.name(),
                engines.join(","),
                s.inner_axis().unwrap_or("-"),
                s.description()
            ));
        }
        return Ok(ExitCode::SUCCESS);
    }
    let ctx = context(&cli.common)?;
    match cli.cmd {
        Cmd::ListScenarios => unreachable!(),
        Cmd::Run { scenario, config } => {
            let specs = match config {
                Some(p) => load(&ctx, &p, ScenarioHint::Given(scenario))?,
                None => {
                    let mut s = cqed_scenarios::preset(scenario);
                    ctx.overrides.apply(&mut s)?;
                    vec![s]
                }
            };
            let (p, f) = execute(&ctx, &specs)?;
            Ok(exit_for(p, f))
        }
        Cmd::Sweep { config } => {
            let specs = load(&ctx, &config, ScenarioHint::None)?;
            let (p, f) = execute(&ctx, &specs)?;
            Ok(exit_for(p, f))
        }
        Cmd::Spectrum { config } => {
            let specs = load(&ctx, &config, ScenarioHint::Spectrum)?;
            let (p, f) = execute(&ctx, &specs)?;
            Ok(exit_for(p, f))
        }
        Cmd::Steady { config } => {
            let specs = load(&ctx, &config, ScenarioHint::None)?;
            let mut out = Vec::new();
            let mut failed = 0;
            for s in &specs {
                match steady_report(s) {
                    Ok(v) => out.push(v),
                    Err(e) => {
                        eprintln!("{}: {e}", s.prefix());
                        out.push(serde_json::json!({ "scenario": s.scenario.name(), "error": e }));
                        failed += 1;
                    }
                }
            }
            let v = if out.len() == 1 { out.remove(0) } else { serde_json::Value::Array(out) };
            stdout(&serde_json::to_string_pretty(&v).expect("serialisable"));
            Ok(exit_for(specs.len(), failed))
        }
        Cmd::Validate { config } => {
            let specs = load(&ctx, &config, ScenarioHint::None)?;
            let v = validate(&ctx, &specs)?;
            stdout(&serde_json::to_string_pretty(&v).expect("serialisable"));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                // --help and --version
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cqed: {e}");
            ExitCode::from(1)
        }
    }
}
