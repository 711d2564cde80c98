//! Plain-text run configuration: `[section]` headers with `key = value`
//! lines, `#` comments. Unknown sections or keys are rejected so typos
//! fail loudly. Command-line flags override file values, which override
//! the built-in defaults.

use std::path::PathBuf;

use spdefem::ic::InitialCondition;
use spdefem::mesh::Rect;
use spdefem::model::{DiffusionKind, DiffusionSpec, DriftSpec, ModelSpec};
use spdefem::scheme::{NoiseLoad, SchemeConfig};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    /// Tabulated refinement levels (convergence rows / mesh-check depth).
    pub levels: usize,
    /// Extra refinements separating the reference from the finest row.
    pub reference_extra: usize,
    /// Optional mesh file to check instead of the built grid.
    pub mesh_file: Option<PathBuf>,
    pub model: ModelSpec,
    pub ic: InitialCondition,
    pub tau: f64,
    pub n_steps: usize,
    pub newton_tol: Option<f64>,
    pub newton_maxit: usize,
    pub linear_tol: f64,
    pub noise_load: NoiseLoad,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub snapshots: Vec<usize>,
}

impl RunConfig {
    pub fn scheme_config(&self) -> Result<SchemeConfig, String> {
        let mut cfg = SchemeConfig::new(self.tau, self.n_steps, self.rect.area())
            .map_err(|e| e.to_string())?;
        if let Some(tol) = self.newton_tol {
            cfg.newton_tol = tol;
        }
        cfg.newton_maxit = self.newton_maxit;
        cfg.linear_tol = self.linear_tol;
        cfg.noise_load = self.noise_load;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

/// Raw key/value state accumulated during parsing; turned into a
/// [`RunConfig`] once all sections are read.
#[derive(Default)]
struct RawConfig {
    xmin: Option<f64>,
    xmax: Option<f64>,
    ymin: Option<f64>,
    ymax: Option<f64>,
    nx: Option<usize>,
    ny: Option<usize>,
    levels: Option<usize>,
    reference_extra: Option<usize>,
    mesh_file: Option<PathBuf>,
    drift: Option<String>,
    q: Option<u32>,
    c0: Option<f64>,
    drift_scale: Option<f64>,
    diffusion: Option<String>,
    delta: Option<f64>,
    ic_kind: Option<String>,
    epsilon: Option<f64>,
    tau: Option<f64>,
    n_steps: Option<usize>,
    newton_tol: Option<f64>,
    newton_maxit: Option<usize>,
    linear_tol: Option<f64>,
    noise_load: Option<String>,
    samples: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    out_dir: Option<PathBuf>,
    snapshots: Option<Vec<usize>>,
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("bad value {value:?} for key {key:?}"))
}

/// Time steps may be written as a comma list (one per level); the
/// coupling protocol requires them all equal.
fn parse_tau(value: &str) -> Result<f64, String> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    let taus: Vec<f64> = parts
        .iter()
        .map(|p| parse_num::<f64>("tau", p))
        .collect::<Result<_, _>>()?;
    if taus.windows(2).any(|w| w[0] != w[1]) {
        return Err(format!(
            "tau must be identical across levels (one shared path per sample), got {value:?}"
        ));
    }
    Ok(taus[0])
}

fn parse_snapshots(value: &str) -> Result<Vec<usize>, String> {
    let mut steps: Vec<usize> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num::<usize>("snapshots", s))
        .collect::<Result<_, _>>()?;
    steps.sort_unstable();
    steps.dedup();
    Ok(steps)
}

pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    let mut raw = RawConfig::default();
    let mut section = String::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| format!("line {}: malformed section header", lineno + 1))?;
            match name {
                "domain" | "model" | "ic" | "scheme" | "ensemble" | "output" | "levelset" => {
                    section = name.to_string();
                }
                other => return Err(format!("line {}: unknown section [{other}]", lineno + 1)),
            }
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let err_unknown = || format!("line {}: unknown key {key:?} in [{section}]", lineno + 1);
        match (section.as_str(), key) {
            ("domain", "xmin") => raw.xmin = Some(parse_num(key, value)?),
            ("domain", "xmax") => raw.xmax = Some(parse_num(key, value)?),
            ("domain", "ymin") => raw.ymin = Some(parse_num(key, value)?),
            ("domain", "ymax") => raw.ymax = Some(parse_num(key, value)?),
            ("domain", "nx") => raw.nx = Some(parse_num(key, value)?),
            ("domain", "ny") => raw.ny = Some(parse_num(key, value)?),
            ("domain", "levels") => raw.levels = Some(parse_num(key, value)?),
            ("domain", "reference_extra") => raw.reference_extra = Some(parse_num(key, value)?),
            ("domain", "mesh_file") => raw.mesh_file = Some(PathBuf::from(value)),
            ("model", "drift") => raw.drift = Some(value.to_string()),
            ("model", "q") => raw.q = Some(parse_num(key, value)?),
            ("model", "c0") => raw.c0 = Some(parse_num(key, value)?),
            ("model", "drift_scale") => raw.drift_scale = Some(parse_num(key, value)?),
            ("model", "diffusion") => raw.diffusion = Some(value.to_string()),
            ("model", "delta") => raw.delta = Some(parse_num(key, value)?),
            ("ic", "kind") => raw.ic_kind = Some(value.to_string()),
            ("ic", "epsilon") => raw.epsilon = Some(parse_num(key, value)?),
            ("scheme", "tau") => raw.tau = Some(parse_tau(value)?),
            ("scheme", "n_steps") => raw.n_steps = Some(parse_num(key, value)?),
            ("scheme", "newton_tol") => raw.newton_tol = Some(parse_num(key, value)?),
            ("scheme", "newton_maxit") => raw.newton_maxit = Some(parse_num(key, value)?),
            ("scheme", "linear_tol") => raw.linear_tol = Some(parse_num(key, value)?),
            ("scheme", "noise_load") => raw.noise_load = Some(value.to_string()),
            ("ensemble", "samples") => raw.samples = Some(parse_num(key, value)?),
            ("ensemble", "seed") => raw.seed = Some(parse_num(key, value)?),
            ("ensemble", "workers") => raw.workers = Some(parse_num(key, value)?),
            ("output", "dir") => raw.out_dir = Some(PathBuf::from(value)),
            ("levelset", "snapshots") => raw.snapshots = Some(parse_snapshots(value)?),
            _ => return Err(err_unknown()),
        }
    }
    build(raw)
}

pub fn default_config() -> RunConfig {
    build(RawConfig::default()).expect("defaults are valid")
}

fn build(raw: RawConfig) -> Result<RunConfig, String> {
    let rect = Rect::new(
        raw.xmin.unwrap_or(-1.0),
        raw.xmax.unwrap_or(1.0),
        raw.ymin.unwrap_or(-1.0),
        raw.ymax.unwrap_or(1.0),
    )
    .map_err(|e| e.to_string())?;
    let nx = raw.nx.unwrap_or(4);
    let ny = raw.ny.unwrap_or(4);
    if nx == 0 || ny == 0 {
        return Err(format!("cell counts must be positive (nx={nx}, ny={ny})"));
    }
    let levels = raw.levels.unwrap_or(4);
    if levels == 0 {
        return Err("levels must be positive".into());
    }
    let reference_extra = raw.reference_extra.unwrap_or(1);
    if reference_extra == 0 {
        return Err("reference_extra must be at least 1".into());
    }

    let scale = raw.drift_scale.unwrap_or(1.0);
    let drift = match raw.drift.as_deref().unwrap_or("u_minus_uq") {
        "u_minus_uq" => DriftSpec::u_minus_uq(raw.q.unwrap_or(3))
            .and_then(|d| d.with_scale(scale))
            .map_err(|e| e.to_string())?,
        "linear" => DriftSpec::linear(raw.c0.unwrap_or(1.0))
            .with_scale(scale)
            .map_err(|e| e.to_string())?,
        other => return Err(format!("unknown drift kind {other:?} (u_minus_uq|linear)")),
    };
    let delta = raw.delta.unwrap_or(1.0);
    let diffusion = match raw.diffusion.as_deref().unwrap_or("linear") {
        "linear" => DiffusionSpec::new(DiffusionKind::Linear, delta),
        "sqrt_shift" => DiffusionSpec::new(DiffusionKind::SqrtShift, delta),
        other => return Err(format!("unknown diffusion kind {other:?} (linear|sqrt_shift)")),
    }
    .map_err(|e| e.to_string())?;
    let model = ModelSpec::new(drift, diffusion);
    if let Err(reason) = model.validate() {
        return Err(format!("drift fails the one-sided Lipschitz validation: {reason}"));
    }

    let ic = InitialCondition::parse(
        raw.ic_kind.as_deref().unwrap_or("test1"),
        raw.epsilon.unwrap_or(0.2),
    )
    .map_err(|e| e.to_string())?;

    let tau = raw.tau.unwrap_or(1e-6);
    let n_steps = raw.n_steps.unwrap_or(20);
    let noise_load = match raw.noise_load.as_deref().unwrap_or("interpolated") {
        "interpolated" => NoiseLoad::Interpolated,
        "quadrature" => NoiseLoad::Quadrature,
        other => {
            return Err(format!(
                "unknown noise_load {other:?} (interpolated|quadrature)"
            ))
        }
    };
    let snapshots = raw.snapshots.unwrap_or_default();
    if let Some(last) = snapshots.last() {
        if *last > n_steps {
            return Err(format!(
                "snapshot step {last} outside [0, {n_steps}]"
            ));
        }
    }

    let cfg = RunConfig {
        rect,
        nx,
        ny,
        levels,
        reference_extra,
        mesh_file: raw.mesh_file,
        model,
        ic,
        tau,
        n_steps,
        newton_tol: raw.newton_tol,
        newton_maxit: raw.newton_maxit.unwrap_or(30),
        linear_tol: raw.linear_tol.unwrap_or(1e-10),
        noise_load,
        samples: raw.samples.unwrap_or(500),
        seed: raw.seed.unwrap_or(0),
        workers: raw.workers.unwrap_or(0),
        out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from("out")),
        snapshots,
    };
    cfg.scheme_config()?; // surface scheme validation at parse time
    Ok(cfg)
}
