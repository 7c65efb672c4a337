//! Command-line front end: `run`, `sweep`, `servo`, `report` and `selftest`.
//!
//! Exit codes: 0 success, 1 I/O, 2 configuration, 3 numerical failure,
//! 4 servo feature loss.

use crate::analysis::{ds_metric, timing_from_samples, ComparisonReport, ErrorSample};
use crate::dynamics::{AcmModel, AcmParams, ModelMode};
use crate::error::{AcmError, Result};
use crate::selftest;
use crate::servo::{
    read_servo_csv, run_servo, write_servo_csv, PathSpec, ServoConfig, ServoSummary, ServoTrace, TaConvention,
    LETTERS,
};
use crate::simulation::{
    builtin_scenario, parameter_sweep, read_trace_csv, run_with_model, trace_csv_header, write_trace_csv,
    ModeSelection, Scenario, SimTrace, SweepAxis,
};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_SERVO: i32 = 4;

/// Exit code for an error.
pub fn exit_code(e: &AcmError) -> i32 {
    match e {
        AcmError::Config { .. } | AcmError::UnknownScenario { .. } | AcmError::Parse(_) | AcmError::Dimension { .. } => {
            EXIT_CONFIG
        }
        AcmError::Domain(_)
        | AcmError::GimbalLock { .. }
        | AcmError::SingularDynamics { .. }
        | AcmError::Blowup { .. }
        | AcmError::Misaligned(_) => EXIT_NUMERIC,
        AcmError::FeatureLoss { .. } => EXIT_SERVO,
        AcmError::Io(_) => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "acm-sim", version, about = "Coupled and decoupled aerial continuum manipulator simulation")]
pub struct Cli {
    /// TOML config file, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long, global = true, env = "ACM_SIM_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one open-loop scenario.
    Run(RunArgs),
    /// Sweep one parameter and emit figure data.
    Sweep(SweepArgs),
    /// Closed-loop tracking of letter paths or a path file.
    Servo(ServoArgs),
    /// Recompute metrics from trace CSVs in a directory.
    Report(ReportArgs),
    /// Run the finite-difference self-checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// coupled, decoupled or both.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Physical parameter override `key=value`, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Use the printed inverse Euler-rate map in the Jacobian.
    #[arg(long)]
    pub paper_literal_te: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Built-in scenario name or scenario JSON file.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// r_a, m_u, l_a, E, kappa0 or phi0.
    #[arg(long)]
    pub axis: Option<String>,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Option<Vec<f64>>,
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ServoArgs {
    /// `mral`, a single letter, or a path JSON file.
    #[arg(long)]
    pub path: Option<String>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Use the block `T_e` transform for the task Jacobian.
    #[arg(long)]
    pub paper_literal_ta: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding `<name>_coupled.csv` / `<name>_decoupled.csv` pairs.
    #[arg(long, default_value = "out")]
    pub dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Random samples per check.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// `[run]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub scenario: String,
    pub duration: Option<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            scenario: "testB".into(),
            duration: None,
        }
    }
}

/// `[sweep]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub axis: String,
    pub values: Option<Vec<f64>>,
    /// Base scenario; the axis default when absent.
    pub scenario: Option<String>,
    pub duration: Option<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axis: "r_a".into(),
            values: None,
            scenario: None,
            duration: None,
        }
    }
}

/// Complete, validated input of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub out: PathBuf,
    pub seed: u64,
    pub model: ModeSelection,
    /// Integration step override for `run` and `sweep` [s].
    pub dt: Option<f64>,
    /// `mral`, a letter or a path file.
    pub servo_path: String,
    pub params: AcmParams,
    pub run: RunSection,
    pub sweep: SweepSection,
    pub servo: ServoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out"),
            seed: 0,
            model: ModeSelection::Both,
            dt: None,
            servo_path: "mral".into(),
            params: AcmParams::default(),
            run: RunSection::default(),
            sweep: SweepSection::default(),
            servo: ServoConfig::default(),
        }
    }
}

/// Provenance written next to the outputs of every command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: RunConfig,
    pub version: String,
    pub platform: String,
    pub started_unix_s: f64,
    pub wall_clock_s: f64,
    pub outputs: Vec<String>,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl RunConfig {
    /// Parse a TOML config, or take the `config` of a manifest JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AcmError::Io(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let m: Manifest = serde_json::from_str(&text)
                .map_err(|e| AcmError::Parse(format!("{}: {e}", path.display())))?;
            return Ok(m.config);
        }
        Self::from_toml(&text).map_err(|e| match e {
            AcmError::Parse(msg) => AcmError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| AcmError::Parse(e.to_string()))?;
        cfg.params.validate()?;
        cfg.servo.validate()?;
        Ok(cfg)
    }

    fn apply_common(&mut self, c: &CommonArgs) -> Result<()> {
        if let Some(m) = &c.model {
            self.model = m.parse()?;
        }
        if let Some(dt) = c.dt {
            self.dt = Some(dt);
            self.servo.dt = dt;
        }
        if let Some(out) = &c.out {
            self.out = out.clone();
        }
        if c.paper_literal_te {
            self.params.paper_literal_te = true;
        }
        for kv in &c.params {
            self.params = override_param(&self.params, kv)?;
        }
        self.params.validate()
    }
}

/// Apply one `key=value` override through the serde schema, so unknown keys
/// and ill-typed values are rejected like in a config file.
fn override_param(params: &AcmParams, kv: &str) -> Result<AcmParams> {
    let (key, value) = kv
        .split_once('=')
        .ok_or_else(|| AcmError::config("param", format!("expected KEY=VALUE, got `{kv}`")))?;
    let mut table = toml::Table::try_from(params).map_err(|e| AcmError::Parse(e.to_string()))?;
    let parsed: toml::Value = format!("v = {value}")
        .parse::<toml::Table>()
        .map_err(|e| AcmError::config(format!("params.{key}"), e.to_string()))?
        .remove("v")
        .expect("key present");
    table.insert(key.trim().to_string(), parsed);
    let p: AcmParams = table
        .try_into()
        .map_err(|e: toml::de::Error| AcmError::config(format!("params.{key}"), e.message().to_string()))?;
    p.validate()?;
    Ok(p)
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Collects written files for the manifest.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    fn trace(&mut self, name: &str, tr: &SimTrace) -> Result<()> {
        let mut buf = Vec::new();
        write_trace_csv(tr, &mut buf)?;
        self.write(name, &buf)
    }
}

fn resolve_scenario(name: &str) -> Result<Scenario> {
    if name.ends_with(".json") {
        let text = std::fs::read_to_string(name).map_err(|e| AcmError::Io(format!("{name}: {e}")))?;
        let sc: Scenario = serde_json::from_str(&text).map_err(|e| AcmError::Parse(format!("{name}: {e}")))?;
        sc.validate()?;
        Ok(sc)
    } else {
        builtin_scenario(name)
    }
}

/// Letters or path file named by `spec`.
pub fn resolve_paths(spec: &str) -> Result<Vec<PathSpec>> {
    if spec.ends_with(".json") {
        let text = std::fs::read_to_string(spec).map_err(|e| AcmError::Io(format!("{spec}: {e}")))?;
        return Ok(vec![PathSpec::from_json(&text)?]);
    }
    if spec.eq_ignore_ascii_case("mral") {
        return LETTERS.iter().map(|l| PathSpec::letter(l)).collect();
    }
    Ok(vec![PathSpec::letter(&spec.to_ascii_uppercase())?])
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(AcmError::config("jobs", "must be at least 1"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| AcmError::config("jobs", e.to_string()))
}

fn fmt_value(v: f64) -> String {
    format!("{v:e}")
}

fn cmd_run(cfg: &mut RunConfig, args: &RunArgs, out: &mut Option<Outputs>) -> Result<()> {
    cfg.apply_common(&args.common)?;
    if let Some(s) = &args.scenario {
        cfg.run.scenario = s.clone();
    }
    if args.duration.is_some() {
        cfg.run.duration = args.duration;
    }
    let mut sc = resolve_scenario(&cfg.run.scenario)?;
    if let Some(dt) = cfg.dt {
        sc.dt = dt;
    }
    if let Some(d) = cfg.run.duration {
        sc.duration = d;
    }
    sc.model_mode = cfg.model;
    sc.validate()?;
    let model = AcmModel::new(cfg.params.clone())?;
    let o = out.insert(Outputs::new(&cfg.out)?);
    let res = run_with_model(&sc, &model)?;
    for tr in res.traces() {
        o.trace(&format!("{}_{}.csv", sc.name, tr.mode), tr)?;
    }
    let report = ComparisonReport::from_traces(&sc.name, res.coupled.as_ref(), res.decoupled.as_ref())?;
    o.json("report.json", &report)?;
    let text = report.to_text();
    o.write("report.txt", text.as_bytes())?;
    print!("{text}");
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepEntry {
    value: f64,
    nrmse_t: Option<f64>,
    nrmse_r: Option<f64>,
    error: Option<String>,
}

fn cmd_sweep(cfg: &mut RunConfig, args: &SweepArgs, jobs: Option<usize>, out: &mut Option<Outputs>) -> Result<Vec<String>> {
    cfg.apply_common(&args.common)?;
    if let Some(a) = &args.axis {
        cfg.sweep.axis = a.clone();
    }
    if let Some(v) = &args.values {
        cfg.sweep.values = Some(v.clone());
    }
    if let Some(s) = &args.scenario {
        cfg.sweep.scenario = Some(s.clone());
    }
    if args.duration.is_some() {
        cfg.sweep.duration = args.duration;
    }
    let axis: SweepAxis = cfg.sweep.axis.parse()?;
    let values = cfg.sweep.values.clone().unwrap_or_else(|| axis.default_values());
    if values.is_empty() {
        return Err(AcmError::config("sweep.values", "empty value list"));
    }
    let mut base = resolve_scenario(cfg.sweep.scenario.as_deref().unwrap_or(axis.default_scenario()))?;
    if let Some(dt) = cfg.dt {
        base.dt = dt;
    }
    if let Some(d) = cfg.sweep.duration {
        base.duration = d;
    }
    base.validate()?;
    let points = pool(jobs)?.install(|| parameter_sweep(&base, &cfg.params, axis, &values));

    let o = out.insert(Outputs::new(&cfg.out)?);
    let panel = axis.panel();
    let mut plot = csv::Writer::from_writer(Vec::new());
    plot.write_record(["axis", "value", "mode", "t", "tipx", "tipy", "tipz"])?;
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for p in &points {
        match &p.result {
            Ok((c, d)) => {
                for tr in [c, d] {
                    o.trace(&format!("{panel}_{}={}_{}.csv", axis.name(), fmt_value(p.value), tr.mode), tr)?;
                    for (t, tip) in tr.times.iter().zip(&tr.tip_positions) {
                        plot.write_record([
                            axis.name().to_string(),
                            p.value.to_string(),
                            tr.mode.to_string(),
                            t.to_string(),
                            tip.x.to_string(),
                            tip.y.to_string(),
                            tip.z.to_string(),
                        ])?;
                    }
                }
                let r = ComparisonReport::from_traces(&c.scenario, Some(c), Some(d))?;
                entries.push(SweepEntry {
                    value: p.value,
                    nrmse_t: r.nrmse_t,
                    nrmse_r: r.nrmse_r,
                    error: None,
                });
                println!(
                    "{}={:<10} nrmse_T {:.4e}  nrmse_R {:.4e}",
                    axis.name(),
                    fmt_value(p.value),
                    r.nrmse_t.unwrap_or(f64::NAN),
                    r.nrmse_r.unwrap_or(f64::NAN)
                );
            }
            Err(e) => {
                eprintln!("{}={}: {e}", axis.name(), fmt_value(p.value));
                errors.push(format!("{}={}: {e}", axis.name(), p.value));
                entries.push(SweepEntry {
                    value: p.value,
                    nrmse_t: None,
                    nrmse_r: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let buf = plot.into_inner().map_err(|e| AcmError::Io(e.to_string()))?;
    o.write(&format!("{panel}.csv"), &buf)?;
    o.json("sweep.json", &entries)?;
    Ok(errors)
}

#[derive(Debug, Serialize)]
struct ServoRunSummary {
    target: String,
    mode: ModelMode,
    summary: ServoSummary,
}

#[derive(Debug, Serialize)]
struct ServoTiming {
    target: String,
    timing: crate::analysis::TimingReport,
}

fn cmd_servo(cfg: &mut RunConfig, args: &ServoArgs, jobs: Option<usize>, out: &mut Option<Outputs>) -> Result<Vec<String>> {
    cfg.apply_common(&args.common)?;
    if let Some(p) = &args.path {
        cfg.servo_path = p.clone();
    }
    if let Some(h) = args.horizon {
        cfg.servo.horizon = h;
    }
    if args.paper_literal_ta {
        cfg.servo.ta = TaConvention::PaperLiteral;
    }
    cfg.servo.validate()?;
    let paths = resolve_paths(&cfg.servo_path)?;
    let model = AcmModel::new(cfg.params.clone())?;
    let modes = cfg.model.modes();
    let jobs_list: Vec<(usize, ModelMode)> =
        (0..paths.len()).flat_map(|i| modes.iter().map(move |&m| (i, m))).collect();
    let servo_cfg = cfg.servo.clone();
    let results: Vec<Result<ServoTrace>> = pool(jobs)?.install(|| {
        jobs_list
            .par_iter()
            .map(|&(i, m)| run_servo(&model, &servo_cfg, Some(paths[i].clone()), m))
            .collect()
    });

    let o = out.insert(Outputs::new(&cfg.out)?);
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for (r, &(i, m)) in results.into_iter().zip(&jobs_list) {
        match r {
            Ok(t) => traces.push(t),
            Err(e) => failures.push((paths[i].name.clone(), m, e)),
        }
    }
    let mut fig4 = csv::Writer::from_writer(Vec::new());
    fig4.write_record(["target", "mode", "t", "tipx", "tipy", "tipz"])?;
    let mut summaries = Vec::new();
    for t in &traces {
        let mut buf = Vec::new();
        write_servo_csv(t, &mut buf)?;
        o.write(&format!("servo_{}_{}.csv", t.target, t.mode), &buf)?;
        for r in &t.records {
            fig4.write_record([
                t.target.clone(),
                t.mode.to_string(),
                r.t.to_string(),
                r.tip.x.to_string(),
                r.tip.y.to_string(),
                r.tip.z.to_string(),
            ])?;
        }
        println!(
            "{:<6} {:<10} final {:.3} px  max {:.3} px  monitor {}/{}  median step {:.1} us",
            t.target,
            t.mode,
            t.summary.final_e_px,
            t.summary.max_e_px,
            t.summary.monitor_violations,
            t.summary.monitor_checks,
            t.summary.median_step_s * 1e6
        );
        summaries.push(ServoRunSummary {
            target: t.target.clone(),
            mode: t.mode,
            summary: t.summary.clone(),
        });
    }
    o.write("fig4.csv", &fig4.into_inner().map_err(|e| AcmError::Io(e.to_string()))?)?;
    o.json("servo_summary.json", &summaries)?;

    let mut ds = csv::Writer::from_writer(Vec::new());
    ds.write_record(["target", "t", "ds_px"])?;
    let mut timing = Vec::new();
    for p in &paths {
        let find = |m: ModelMode| traces.iter().find(|t| t.target == p.name && t.mode == m);
        let (c, d) = (find(ModelMode::Coupled), find(ModelMode::Decoupled));
        if let (Some(c), Some(d)) = (c, d) {
            let series = ds_metric(&c.error_samples(), &d.error_samples())?;
            let max = series.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
            println!("{:<6} max |DS| {max:.4} px", p.name);
            for (t, v) in series {
                ds.write_record([p.name.clone(), t.to_string(), v.to_string()])?;
            }
        }
        if c.is_some() || d.is_some() {
            timing.push(ServoTiming {
                target: p.name.clone(),
                timing: timing_from_samples(c.map(|t| &t.step_wall_s[..]), d.map(|t| &t.step_wall_s[..]))?,
            });
        }
    }
    if modes.len() == 2 {
        o.write("ds.csv", &ds.into_inner().map_err(|e| AcmError::Io(e.to_string()))?)?;
    }
    o.json("timing.json", &timing)?;

    let mut errors = Vec::new();
    let mut worst: Option<AcmError> = None;
    for (name, m, e) in failures {
        eprintln!("{name} {m}: {e}");
        errors.push(format!("{name} {m}: {e}"));
        let rank = |e: &AcmError| match exit_code(e) {
            EXIT_SERVO => 2,
            EXIT_NUMERIC => 1,
            _ => 0,
        };
        if worst.as_ref().is_none_or(|w| rank(&e) > rank(w)) {
            worst = Some(e);
        }
    }
    match worst {
        Some(e) => Err(e),
        None => Ok(errors),
    }
}

#[derive(Debug, Serialize)]
struct ServoPairReport {
    target: String,
    max_abs_ds_px: f64,
    ds_series: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
struct DirReport {
    open_loop: Vec<ComparisonReport>,
    servo: Vec<ServoPairReport>,
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let dir = &args.dir;
    let mut stems: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| AcmError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix("_coupled.csv")).map(str::to_string))
        .filter(|s| dir.join(format!("{s}_decoupled.csv")).exists())
        .collect();
    stems.sort();
    if stems.is_empty() {
        return Err(AcmError::config("dir", format!("no *_coupled.csv / *_decoupled.csv pairs in {}", dir.display())));
    }
    let open = |p: PathBuf| std::fs::File::open(&p).map_err(|e| AcmError::Io(format!("{}: {e}", p.display())));
    let mut rep = DirReport {
        open_loop: Vec::new(),
        servo: Vec::new(),
    };
    let trace_header = trace_csv_header().join(",");
    let mut text = String::new();
    for stem in stems {
        let cp = dir.join(format!("{stem}_coupled.csv"));
        let dp = dir.join(format!("{stem}_decoupled.csv"));
        let first = std::fs::read_to_string(&cp)?.lines().next().unwrap_or_default().to_string();
        if first == trace_header {
            let c = read_trace_csv(open(cp)?, &stem, ModelMode::Coupled)?;
            let d = read_trace_csv(open(dp)?, &stem, ModelMode::Decoupled)?;
            let r = ComparisonReport::from_traces(&stem, Some(&c), Some(&d))?;
            text.push_str(&r.to_text());
            text.push('\n');
            rep.open_loop.push(r);
        } else {
            let (_, c) = read_servo_csv(open(cp)?)?;
            let (_, d) = read_servo_csv(open(dp)?)?;
            let samples = |v: &[crate::servo::ServoRecord]| -> Vec<ErrorSample> {
                v.iter()
                    .map(|r| ErrorSample {
                        t: r.t,
                        e_norm_px: r.e_norm_px,
                    })
                    .collect()
            };
            let series = ds_metric(&samples(&c), &samples(&d))?;
            let max = series.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
            text.push_str(&format!("{stem}  max |DS| {max:.4} px\n"));
            rep.servo.push(ServoPairReport {
                target: stem,
                max_abs_ds_px: max,
                ds_series: series,
            });
        }
    }
    let mut o = Outputs::new(dir)?;
    o.json("report.json", &rep)?;
    o.write("report.txt", text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn cmd_selftest(cfg: &RunConfig, args: &SelftestArgs) -> Result<bool> {
    let seed = args.seed.unwrap_or(cfg.seed);
    let checks = selftest::run_all(&cfg.params, seed, args.samples.max(1))?;
    for c in &checks {
        println!("{}", c.line());
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Run(_) => "run",
        Command::Sweep(_) => "sweep",
        Command::Servo(_) => "servo",
        Command::Report(_) => "report",
        Command::Selftest(_) => "selftest",
    }
}

/// Parse `args` (including the program name), execute, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let started = Instant::now();
    let started_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let mut out: Option<Outputs> = None;
    let result: Result<Vec<String>> = match &cli.command {
        Command::Run(a) => cmd_run(&mut cfg, a, &mut out).map(|_| Vec::new()),
        Command::Sweep(a) => cmd_sweep(&mut cfg, a, cli.jobs, &mut out),
        Command::Servo(a) => cmd_servo(&mut cfg, a, cli.jobs, &mut out),
        Command::Report(a) => return cmd_report(a).map(|_| EXIT_OK),
        Command::Selftest(a) => {
            return cmd_selftest(&cfg, a).map(|ok| if ok { EXIT_OK } else { EXIT_NUMERIC });
        }
    };
    let (code, errors) = match &result {
        Ok(errs) if errs.is_empty() => (EXIT_OK, Vec::new()),
        Ok(errs) => (EXIT_NUMERIC, errs.clone()),
        Err(e) => (exit_code(e), vec![e.to_string()]),
    };
    if let Some(mut o) = out {
        let manifest = Manifest {
            command: command_name(&cli.command).to_string(),
            config: cfg,
            version: env!("CARGO_PKG_VERSION").to_string(),
            platform: format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH),
            started_unix_s,
            wall_clock_s: started.elapsed().as_secs_f64(),
            outputs: o.files.clone(),
            exit_code: code,
            errors,
        };
        o.json("manifest.json", &manifest)?;
    }
    result.map(|_| code)
}
