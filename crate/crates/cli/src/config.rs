//! TOML run configuration: strict key checking, then typed decoding, then
//! validation that reports every violation at once.

use std::path::{Path, PathBuf};

use rddmk::domain::PartitionOptions;
use rddmk::engine::{MeanStrategy, RunConfig};
use rddmk::manifold::ManifoldKind;
use rddmk::simgen::{CDomainSpec, FieldKind, FieldSpec};
use rddmk::variogram::{KernelConfig, LagBins, VariogramFamily};
use serde::Deserialize;
use serde_json::json;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    Krige,
    Cv,
    Variogram,
    McStudy,
}

impl Command {
    fn needs_data(self) -> bool {
        matches!(self, Command::Krige | Command::Cv | Command::Variogram)
    }
}

const TOP_KEYS: &[&str] = &["run", "data", "simulation", "mc_study", "output"];
const RUN_KEYS: &[&str] = &[
    "k",
    "b",
    "seed",
    "workers",
    "family",
    "manifold",
    "dim",
    "mean_strategy",
    "metric",
    "n_bins",
    "min_tile_size",
    "max_attempts",
    "kernel",
];
const KERNEL_KEYS: &[&str] = &["kind", "bandwidth"];
const DATA_KEYS: &[&str] = &["sites", "matrices", "boundary", "targets"];
const SIMULATION_KEYS: &[&str] = &[
    "field",
    "n_sites",
    "n_replicates",
    "phi_max",
    "r_min",
    "r_max",
    "radius",
    "arm_length",
    "n_phi",
    "n_r",
    "grf_range",
    "grf_sill",
];
const MC_KEYS: &[&str] = &["n_replicates", "n_sites", "k_values", "field", "regenerate_field"];
const OUTPUT_KEYS: &[&str] = &["dir", "keep_iterations", "dump_spe"];

#[derive(Debug, Deserialize, Default)]
#[serde(default)]
struct RawConfig {
    run: RawRun,
    data: Option<RawData>,
    simulation: RawSimulation,
    mc_study: RawMc,
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct RawRun {
    k: Option<i64>,
    b: i64,
    seed: u64,
    workers: i64,
    family: String,
    manifold: String,
    dim: i64,
    mean_strategy: String,
    metric: String,
    n_bins: i64,
    min_tile_size: i64,
    max_attempts: i64,
    kernel: RawKernel,
}

impl Default for RawRun {
    fn default() -> Self {
        Self {
            k: None,
            b: 100,
            seed: 0,
            workers: 1,
            family: "spherical".into(),
            manifold: "spd".into(),
            dim: 2,
            mean_strategy: "extrinsic_fallback".into(),
            metric: "graph".into(),
            n_bins: 15,
            min_tile_size: 3,
            max_attempts: 100,
            kernel: RawKernel::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct RawKernel {
    kind: String,
    bandwidth: f64,
}

impl Default for RawKernel {
    fn default() -> Self {
        Self {
            kind: "gaussian".into(),
            bandwidth: 1.5,
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawData {
    sites: PathBuf,
    matrices: PathBuf,
    boundary: Option<PathBuf>,
    targets: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct RawSimulation {
    field: String,
    n_sites: i64,
    n_replicates: i64,
    phi_max: f64,
    r_min: f64,
    r_max: f64,
    radius: f64,
    arm_length: f64,
    n_phi: i64,
    n_r: i64,
    grf_range: f64,
    grf_sill: f64,
}

impl Default for RawSimulation {
    fn default() -> Self {
        let d = CDomainSpec::default();
        let f = FieldSpec::default();
        Self {
            field: "spd".into(),
            n_sites: 100,
            n_replicates: 1,
            phi_max: d.phi_max,
            r_min: d.r_min,
            r_max: d.r_max,
            radius: d.radius,
            arm_length: d.arm_length,
            n_phi: d.n_phi as i64,
            n_r: d.n_r as i64,
            grf_range: f.grf_range,
            grf_sill: f.grf_sill,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct RawMc {
    n_replicates: i64,
    n_sites: i64,
    k_values: Vec<i64>,
    field: String,
    regenerate_field: Option<bool>,
}

impl Default for RawMc {
    fn default() -> Self {
        Self {
            n_replicates: 30,
            n_sites: 100,
            k_values: vec![1, 2, 4, 6, 8, 10],
            field: "spd".into(),
            regenerate_field: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct RawOutput {
    dir: PathBuf,
    keep_iterations: bool,
    dump_spe: bool,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            keep_iterations: false,
            dump_spe: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricChoice {
    Graph,
    Euclidean,
}

#[derive(Debug, Clone)]
pub struct DataPaths {
    pub sites: PathBuf,
    pub matrices: PathBuf,
    pub boundary: Option<PathBuf>,
    pub targets: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SimulationSettings {
    pub field: FieldKind,
    pub domain: CDomainSpec,
    pub field_spec: FieldSpec,
    pub n_sites: usize,
    pub n_replicates: usize,
}

#[derive(Debug, Clone)]
pub struct McSettings {
    pub n_replicates: usize,
    pub n_sites: usize,
    pub k_values: Vec<usize>,
    pub field: FieldKind,
    pub regenerate_field: bool,
}

#[derive(Debug, Clone)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub keep_iterations: bool,
    pub dump_spe: bool,
}

/// A validated configuration with paths resolved against the config file.
#[derive(Debug, Clone)]
pub struct Config {
    /// `run.k` is only meaningful when `k_given`.
    pub run: RunConfig,
    pub k_given: bool,
    pub metric: MetricChoice,
    pub data: Option<DataPaths>,
    pub simulation: SimulationSettings,
    pub mc_study: McSettings,
    pub output: OutputSettings,
}

/// Reads, checks and validates `path` for `command`.
pub fn parse_config(path: &Path, command: Command) -> CliResult<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base, command)
}

pub fn parse_config_str(text: &str, base_dir: &Path, command: Command) -> CliResult<Config> {
    let table: toml::Table = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    check_keys(text, &table)?;
    let raw: RawConfig = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    validate(raw, base_dir, command)
}

fn toml_error(text: &str, e: &toml::de::Error) -> CliError {
    let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1));
    CliError::Parse {
        message: e.message().to_string(),
        context: json!({ "line": line }),
    }
}

/// Closest allowed key within edit distance 3.
pub fn suggest<'a>(key: &str, allowed: &[&'a str]) -> Option<&'a str> {
    allowed
        .iter()
        .map(|a| (strsim::levenshtein(key, a), *a))
        .filter(|(d, _)| *d <= 3)
        .min()
        .map(|(_, a)| a)
}

fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        let l = l.strip_prefix('"').unwrap_or(l);
        l.strip_prefix(key)
            .map(|rest| rest.trim_start_matches('"').trim_start().starts_with('='))
            .unwrap_or(false)
            || l.trim_start_matches('[').trim_end_matches(']').rsplit('.').next() == Some(key)
    })
    .map(|i| i + 1)
}

fn check_keys(text: &str, table: &toml::Table) -> CliResult<()> {
    let mut unknown = Vec::new();
    let mut visit = |section: &str, t: &toml::Table, allowed: &[&str]| {
        for key in t.keys() {
            if !allowed.contains(&key.as_str()) {
                let qualified = if section.is_empty() { key.clone() } else { format!("{section}.{key}") };
                unknown.push(json!({
                    "key": qualified,
                    "line": line_of(text, key),
                    "suggestion": suggest(key, allowed),
                }));
            }
        }
    };
    visit("", table, TOP_KEYS);
    let sub = |name: &str| table.get(name).and_then(toml::Value::as_table);
    if let Some(run) = sub("run") {
        visit("run", run, RUN_KEYS);
        if let Some(k) = run.get("kernel").and_then(toml::Value::as_table) {
            visit("run.kernel", k, KERNEL_KEYS);
        }
    }
    for (name, keys) in [("data", DATA_KEYS), ("simulation", SIMULATION_KEYS), ("mc_study", MC_KEYS), ("output", OUTPUT_KEYS)] {
        if let Some(t) = sub(name) {
            visit(name, t, keys);
        }
    }
    if unknown.is_empty() {
        return Ok(());
    }
    let parts: Vec<String> = unknown
        .iter()
        .map(|u| match u["suggestion"].as_str() {
            Some(s) => format!("unknown key `{}` (did you mean `{s}`?)", u["key"].as_str().unwrap_or_default()),
            None => format!("unknown key `{}`", u["key"].as_str().unwrap_or_default()),
        })
        .collect();
    Err(CliError::Parse {
        message: parts.join("; "),
        context: json!({ "unknown_keys": unknown }),
    })
}

fn choice<'a>(errors: &mut Vec<String>, key: &str, value: &str, allowed: &[&'a str]) -> Option<&'a str> {
    if let Some(a) = allowed.iter().find(|a| **a == value) {
        return Some(a);
    }
    let hint = suggest(value, allowed).map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default();
    errors.push(format!("{key} = \"{value}\" is not one of {}{hint}", allowed.join(", ")));
    None
}

fn positive(errors: &mut Vec<String>, key: &str, value: i64) -> usize {
    if value < 1 {
        errors.push(format!("{key} = {value} must be at least 1"));
        1
    } else {
        value as usize
    }
}

fn field_kind(errors: &mut Vec<String>, key: &str, value: &str) -> FieldKind {
    match choice(errors, key, value, &["spd", "correlation"]) {
        Some("correlation") => FieldKind::Correlation,
        _ => FieldKind::Spd,
    }
}

fn validate(raw: RawConfig, base: &Path, command: Command) -> CliResult<Config> {
    let mut errors = Vec::new();
    let r = &raw.run;

    let k = match r.k {
        Some(k) if k < 1 => {
            errors.push(format!("run.k = {k} violates 1 ≤ K ≤ n"));
            1
        }
        Some(k) => k as usize,
        None => {
            if command.needs_data() {
                errors.push("run.k is required for this command (1 ≤ K ≤ n)".into());
            }
            1
        }
    };
    let b = positive(&mut errors, "run.b", r.b);
    let workers = positive(&mut errors, "run.workers", r.workers);
    let dim = if r.dim < 2 {
        errors.push(format!("run.dim = {} must be at least 2", r.dim));
        2
    } else {
        r.dim as usize
    };
    let manifold = match choice(&mut errors, "run.manifold", &r.manifold, &["spd", "sphere", "cholesky"]) {
        Some("sphere") => ManifoldKind::Sphere(dim),
        Some("cholesky") => ManifoldKind::Cholesky(dim),
        _ => ManifoldKind::Spd(dim),
    };
    let family = match choice(&mut errors, "run.family", &r.family, &["spherical", "exponential"]) {
        Some("exponential") => VariogramFamily::Exponential,
        _ => VariogramFamily::Spherical,
    };
    let mean_strategy = match choice(&mut errors, "run.mean_strategy", &r.mean_strategy, &["intrinsic", "extrinsic_fallback"]) {
        Some("intrinsic") => MeanStrategy::Intrinsic,
        _ => MeanStrategy::ExtrinsicFallback,
    };
    let metric = match choice(&mut errors, "run.metric", &r.metric, &["graph", "euclidean"]) {
        Some("euclidean") => MetricChoice::Euclidean,
        _ => MetricChoice::Graph,
    };
    let kernel = match choice(&mut errors, "run.kernel.kind", &r.kernel.kind, &["gaussian", "tile_indicator"]) {
        Some("tile_indicator") => KernelConfig::TileIndicator,
        _ => {
            let bw = r.kernel.bandwidth;
            if !(bw.is_finite() && bw > 0.0) {
                errors.push(format!("run.kernel.bandwidth = {bw} must be positive"));
            }
            KernelConfig::Gaussian { bandwidth: bw }
        }
    };
    let n_bins = positive(&mut errors, "run.n_bins", r.n_bins);
    let min_tile_size = positive(&mut errors, "run.min_tile_size", r.min_tile_size);
    let max_attempts = positive(&mut errors, "run.max_attempts", r.max_attempts);

    let mut run = RunConfig::new(k, b, manifold);
    run.kernel = kernel;
    run.family = family;
    run.mean_strategy = mean_strategy;
    run.master_seed = r.seed;
    run.workers = workers;
    run.partition = PartitionOptions {
        min_tile_size,
        max_attempts,
    };
    run.bins = LagBins {
        n_bins,
        ..LagBins::default()
    };
    run.keep_iterations = raw.output.keep_iterations;

    let data = match raw.data {
        Some(d) => Some(DataPaths {
            sites: base.join(d.sites),
            matrices: base.join(d.matrices),
            boundary: d.boundary.map(|p| base.join(p)),
            targets: d.targets.map(|p| base.join(p)),
        }),
        None => {
            if command.needs_data() {
                errors.push("[data] section with `sites` and `matrices` is required for this command".into());
            }
            None
        }
    };

    let s = &raw.simulation;
    let domain = CDomainSpec {
        phi_max: s.phi_max,
        r_min: s.r_min,
        r_max: s.r_max,
        radius: s.radius,
        arm_length: s.arm_length,
        n_phi: s.n_phi.max(0) as usize,
        n_r: s.n_r.max(0) as usize,
    };
    if let Err(e) = domain.validate() {
        errors.push(format!("[simulation] {e}"));
    }
    if !(s.grf_range > 0.0 && s.grf_sill > 0.0) {
        errors.push("simulation.grf_range and simulation.grf_sill must be positive".into());
    }
    let grid_size = domain.n_phi * domain.n_r;
    let field_spec = FieldSpec {
        grf_range: s.grf_range,
        grf_sill: s.grf_sill,
        ..FieldSpec::default()
    };
    let sim_field = field_kind(&mut errors, "simulation.field", &s.field);
    let sim_sites = positive(&mut errors, "simulation.n_sites", s.n_sites);
    if command == Command::Simulate && sim_sites > grid_size {
        errors.push(format!("simulation.n_sites = {sim_sites} exceeds the grid size {grid_size}"));
    }
    let simulation = SimulationSettings {
        field: sim_field,
        domain,
        field_spec,
        n_sites: sim_sites,
        n_replicates: positive(&mut errors, "simulation.n_replicates", s.n_replicates),
    };

    let m = &raw.mc_study;
    let mc_field = field_kind(&mut errors, "mc_study.field", &m.field);
    let mc_sites = positive(&mut errors, "mc_study.n_sites", m.n_sites);
    let mut k_values = Vec::with_capacity(m.k_values.len());
    if m.k_values.is_empty() {
        errors.push("mc_study.k_values must not be empty".into());
    }
    for &kv in &m.k_values {
        if kv < 1 || kv as usize > mc_sites {
            errors.push(format!("mc_study.k_values entry {kv} violates 1 ≤ K ≤ n (n = {mc_sites})"));
        } else {
            k_values.push(kv as usize);
        }
    }
    if command == Command::McStudy && mc_sites > grid_size {
        errors.push(format!("mc_study.n_sites = {mc_sites} exceeds the grid size {grid_size}"));
    }
    let mc_study = McSettings {
        n_replicates: positive(&mut errors, "mc_study.n_replicates", m.n_replicates),
        n_sites: mc_sites,
        k_values,
        field: mc_field,
        regenerate_field: m.regenerate_field.unwrap_or(mc_field == FieldKind::Correlation),
    };

    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    Ok(Config {
        run,
        k_given: raw.run.k.is_some(),
        metric,
        data,
        simulation,
        mc_study,
        output: OutputSettings {
            dir: base.join(raw.output.dir),
            keep_iterations: raw.output.keep_iterations,
            dump_spe: raw.output.dump_spe,
        },
    })
}
