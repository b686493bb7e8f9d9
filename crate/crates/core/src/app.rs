//! Command-line front end: argument types and the subcommand drivers.

use crate::dsl::{compile, eval::DsSpeedPolicy, Diagnostic};
use crate::engine::{
    debounce, evaluate, has_safety_failure, summary_csv, verdicts_jsonl, AssertionDef, Debouncer, EvaluationContext,
    StreamEngine, Verdict,
};
use crate::models::{ModelError, ProfileSet};
use crate::perception::{self, CameraCalibration, EstimatorConfig, PerceptionError};
use crate::rulepack::{detect_stages, stage_report};
use crate::scenario::{self, ScenarioError};
use crate::trace::{load_trace, TraceError};
use crate::worldmap::{load_map, MapError, RoadMap, Strictness};
use crate::zones::{zone_csv, zone_rows, ZoneError, ZoneThresholds};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SAFETY_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "highway-assert", version, about = "Check overtaking traces against highway-code assertions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate assertions over a recorded trace.
    Check(CheckArgs),
    /// Evaluate a JSON-lines trace from stdin as it arrives.
    Monitor(MonitorArgs),
    /// Write a preset scenario (map, trace, spec) to a directory.
    Gen(GenArgs),
    /// Turn detection boxes into a trace.
    Estimate(EstimateArgs),
    /// Classify verdicts carrying distance-ahead measurements into zones.
    Zones(ZonesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DsSpeed {
    Derived,
    Recorded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
    Summary,
}

#[derive(Debug, Args)]
pub struct RuleArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// Assertion files.
    #[arg(long, required = true, num_args = 1..)]
    pub rules: Vec<PathBuf>,
    /// Active ODD tags; defaults to every tag used by the loaded rules.
    #[arg(long, value_delimiter = ',')]
    pub odd: Vec<String>,
    #[arg(long, default_value = "nominal")]
    pub profile: String,
    /// Profile set JSON replacing the bundled calibration.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Suppress result runs shorter than N verdicts.
    #[arg(long, default_value_t = 1)]
    pub debounce: usize,
    /// Report windows running past the trace as not applicable instead of failing.
    #[arg(long)]
    pub lenient_windows: bool,
    #[arg(long, value_enum, default_value = "derived")]
    pub ds_speed: DsSpeed,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub rules: RuleArgs,
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: Format,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the per-assertion summary CSV here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Write detected manoeuvre stages and per-stage outcomes as JSON.
    #[arg(long)]
    pub stage_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    #[command(flatten)]
    pub rules: RuleArgs,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// One of safe, near_miss, collision, occlusion_abort.
    pub preset: String,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub calibration: PathBuf,
    /// Estimator settings JSON (AV speed, class dimensions, speed source).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ZonesArgs {
    #[arg(long)]
    pub verdicts: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
    #[arg(long, default_value_t = 2.5)]
    pub ttc_conservative: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Map { path: String, source: MapError },
    #[error("{path}: {source}")]
    Trace { path: String, source: TraceError },
    #[error("{path}:{diag}")]
    Rules { path: String, diag: Diagnostic },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Zone(#[from] ZoneError),
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

fn read(path: &Path) -> Result<String, AppError> {
    fs::read_to_string(path).map_err(|source| AppError::Io { path: path.display().to_string(), source })
}

fn write_file(path: &Path, text: &str) -> Result<(), AppError> {
    fs::write(path, text).map_err(|source| AppError::Io { path: path.display().to_string(), source })
}

fn json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, AppError> {
    serde_json::from_str(&read(path)?).map_err(|source| AppError::Json { path: path.display().to_string(), source })
}

fn io_err(source: std::io::Error) -> AppError {
    AppError::Io { path: "<output>".into(), source }
}

/// Streams shared by the drivers, injectable for tests.
pub struct Io<'a> {
    pub stdin: &'a mut dyn BufRead,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

pub fn run(cli: Cli, io: &mut Io) -> i32 {
    let result = match cli.command {
        Command::Check(a) => check(&a, io),
        Command::Monitor(a) => monitor(&a, io),
        Command::Gen(a) => gen(&a, io).map(|_| EXIT_OK),
        Command::Estimate(a) => estimate(&a, io).map(|_| EXIT_OK),
        Command::Zones(a) => zones(&a, io).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn load_map_file(path: &Path) -> Result<RoadMap, AppError> {
    let (map, warnings) = load_map(&read(path)?, Strictness::Strict)
        .map_err(|source| AppError::Map { path: path.display().to_string(), source })?;
    warnings.iter().for_each(|w| log::warn!("{w}"));
    Ok(map)
}

pub fn load_rules(paths: &[PathBuf]) -> Result<Vec<AssertionDef>, AppError> {
    let mut defs: Vec<AssertionDef> = Vec::new();
    for p in paths {
        let src = read(p)?;
        let more = compile(&src).map_err(|diag| AppError::Rules { path: p.display().to_string(), diag })?;
        for d in more {
            if defs.iter().any(|e| e.id == d.id) {
                return Err(AppError::Usage(format!("{}: assertion {} already defined", p.display(), d.id)));
            }
            defs.push(d);
        }
    }
    Ok(defs)
}

fn context(args: &RuleArgs, defs: &[AssertionDef]) -> Result<EvaluationContext, AppError> {
    let map = load_map_file(&args.map)?;
    let profiles = match &args.profiles {
        Some(p) => ProfileSet::from_json(&read(p)?)?,
        None => ProfileSet::default(),
    };
    let odd: BTreeSet<String> = if args.odd.is_empty() {
        defs.iter().flat_map(|d| d.odd_tags.iter().cloned()).collect()
    } else {
        args.odd.iter().cloned().collect()
    };
    let mut ctx = EvaluationContext::new(map, odd);
    ctx.config.profile = profiles.get(&args.profile)?.clone();
    ctx.config.profiles = profiles;
    ctx.config.ds_speed = match args.ds_speed {
        DsSpeed::Derived => DsSpeedPolicy::Derived,
        DsSpeed::Recorded => DsSpeedPolicy::Recorded,
    };
    ctx.strict_windows = !args.lenient_windows;
    if args.debounce == 0 {
        return Err(AppError::Usage("--debounce must be at least 1".into()));
    }
    Ok(ctx)
}

fn verdicts_csv(verdicts: &[Verdict]) -> String {
    let mut s = String::from("assertion_id,t,result,measured,threshold,reason\n");
    for v in verdicts {
        let num = |x: Option<f64>| x.map(|x| x.to_string()).unwrap_or_default();
        let result = serde_json::to_value(v.result).expect("outcome serialises");
        let reason = v.detail.get("reason").and_then(|r| r.as_str()).unwrap_or("");
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            v.assertion_id,
            v.t,
            result.as_str().unwrap_or(""),
            num(v.measured()),
            num(v.threshold()),
            reason
        ));
    }
    s
}

fn check(args: &CheckArgs, io: &mut Io) -> Result<i32, AppError> {
    let defs = load_rules(&args.rules.rules)?;
    let ctx = context(&args.rules, &defs)?;
    let (trace, warnings) = load_trace(&read(&args.trace)?)
        .map_err(|source| AppError::Trace { path: args.trace.display().to_string(), source })?;
    warnings.iter().for_each(|w| log::warn!("{w}"));
    let mut verdicts = evaluate(&defs, &trace, &ctx);
    if args.rules.debounce > 1 {
        verdicts = debounce(&verdicts, args.rules.debounce);
    }
    let text = match args.format {
        Format::Jsonl => verdicts_jsonl(&verdicts),
        Format::Csv => verdicts_csv(&verdicts),
        Format::Summary => summary_csv(&verdicts),
    };
    match &args.output {
        Some(p) => write_file(p, &text)?,
        None => io.stdout.write_all(text.as_bytes()).map_err(io_err)?,
    }
    if let Some(p) = &args.summary {
        write_file(p, &summary_csv(&verdicts))?;
    }
    if let Some(p) = &args.stage_report {
        let report = match detect_stages(&trace, &ctx.map) {
            Ok(st) => serde_json::json!({ "stages": st, "outcomes": stage_report(&st, &verdicts) }),
            Err(e) => serde_json::json!({ "error": e.to_string() }),
        };
        write_file(p, &serde_json::to_string_pretty(&report).expect("report serialises"))?;
    }
    Ok(if has_safety_failure(&defs, &verdicts) { EXIT_SAFETY_FAIL } else { EXIT_OK })
}

fn monitor(args: &MonitorArgs, io: &mut Io) -> Result<i32, AppError> {
    let defs = load_rules(&args.rules.rules)?;
    let ctx = context(&args.rules, &defs)?;
    let mut engine = StreamEngine::new(defs.clone(), ctx);
    let mut deb = Debouncer::new(args.rules.debounce);
    let mut failed = false;
    let mut emit = |vs: Vec<Verdict>, out: &mut dyn Write| -> Result<(), AppError> {
        for v in vs.into_iter().flat_map(|v| deb.push(v)) {
            failed |= has_safety_failure(&defs, std::slice::from_ref(&v));
            out.write_all(verdicts_jsonl(std::slice::from_ref(&v)).as_bytes()).map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    };
    let mut line = String::new();
    loop {
        line.clear();
        let n = io.stdin.read_line(&mut line).map_err(io_err)?;
        if n == 0 {
            break;
        }
        match engine.push_line(line.trim_end()) {
            Ok(vs) => emit(vs, io.stdout)?,
            Err(e) => {
                let _ = writeln!(io.stderr, "error: {e}");
                return Ok(EXIT_SAFETY_FAIL);
            }
        }
    }
    match engine.finish() {
        Ok(vs) => emit(vs, io.stdout)?,
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {e}");
            return Ok(EXIT_SAFETY_FAIL);
        }
    }
    let rest = deb.finish();
    failed |= has_safety_failure(&defs, &rest);
    io.stdout.write_all(verdicts_jsonl(&rest).as_bytes()).map_err(io_err)?;
    io.stdout.flush().map_err(io_err)?;
    Ok(if failed { EXIT_SAFETY_FAIL } else { EXIT_OK })
}

/// Calibration written next to generated detections.
pub fn default_calibration() -> CameraCalibration {
    CameraCalibration {
        c: 1200.0,
        assumed_vehicle_width_m: 1.8,
        lane_width_real_m: 3.65,
        lane_width_px: 365.0,
        frame_centre_px: 640.0,
    }
}

fn gen(args: &GenArgs, io: &mut Io) -> Result<(), AppError> {
    let spec = scenario::preset(&args.preset)?;
    let s = scenario::generate(&spec)?;
    fs::create_dir_all(&args.out).map_err(|source| AppError::Io { path: args.out.display().to_string(), source })?;
    let mut files = vec![
        ("map.json", s.map.to_json()),
        ("trace.jsonl", s.trace.to_jsonl()),
        ("spec.json", serde_json::to_string_pretty(&spec).expect("spec serialises")),
    ];
    if let Ok(st) = detect_stages(&s.trace, &s.map) {
        files.push(("stages.json", serde_json::to_string_pretty(&st).expect("stages serialise")));
    }
    if spec.occlusion.is_some() {
        let cal = default_calibration();
        let dets = perception::synthesize_detections(&s.trace, &cal);
        files.push(("detections.jsonl", perception::detections_jsonl(&dets)));
        files.push(("calibration.json", serde_json::to_string_pretty(&cal).expect("calibration serialises")));
    }
    for (name, text) in files {
        let p = args.out.join(name);
        write_file(&p, &text)?;
        writeln!(io.stdout, "{}", p.display()).map_err(io_err)?;
    }
    Ok(())
}

fn estimate(args: &EstimateArgs, io: &mut Io) -> Result<(), AppError> {
    let records = perception::parse_detections(&read(&args.detections)?)?;
    let cal: CameraCalibration = json(&args.calibration)?;
    let cfg: EstimatorConfig = match &args.config {
        Some(p) => json(p)?,
        None => EstimatorConfig::default(),
    };
    let (trace, warnings) = perception::boxes_to_trace(&records, &cal, &cfg)?;
    warnings.iter().for_each(|w| log::warn!("{w}"));
    let text = trace.to_jsonl();
    match &args.output {
        Some(p) => write_file(p, &text),
        None => io.stdout.write_all(text.as_bytes()).map_err(io_err),
    }
}

fn zones(args: &ZonesArgs, io: &mut Io) -> Result<(), AppError> {
    let text = read(&args.verdicts)?;
    let path = args.verdicts.display().to_string();
    let verdicts = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<Verdict>(l).map_err(|source| AppError::Json { path: path.clone(), source }))
        .collect::<Result<Vec<_>, _>>()?;
    let th = ZoneThresholds { safety_margin_fraction: args.margin, ttc_conservative_s: args.ttc_conservative };
    let csv = zone_csv(&zone_rows(&verdicts, &th)?);
    match &args.output {
        Some(p) => write_file(p, &csv),
        None => io.stdout.write_all(csv.as_bytes()).map_err(io_err),
    }
}
