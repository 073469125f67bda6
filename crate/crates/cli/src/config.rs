//! `key = value` run configuration with dotted sections.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use qdgate_core::analysis::{sweep_solver_options, Thresholds};
use qdgate_core::device::{DeviceConfig, DriveFrequency, Gate, DEFAULT_G};
use qdgate_core::dynamics::SolverOptions;
use qdgate_core::noise::{NoiseConfig, PhononEnergyMode};
use qdgate_core::quantum::BasisState;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: `{}`: {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Sweep,
    Ranges,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
            Mode::Ranges => "ranges",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    Rwa,
    Lab,
}

/// Device parameters; `b_z` is only needed for single simulations.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceSection {
    pub gate: Gate,
    pub exchange: Vec<f64>,
    pub b_z: Option<Vec<f64>>,
    pub b_ac: f64,
    pub g: f64,
    pub drive_frequency: DriveFrequency,
}

impl DeviceSection {
    pub fn config(&self) -> Option<DeviceConfig> {
        self.b_z.as_ref().map(|b_z| DeviceConfig {
            gate: self.gate,
            exchange: self.exchange.clone(),
            b_z: b_z.clone(),
            b_ac: self.b_ac,
            g: self.g,
            drive_frequency: self.drive_frequency,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub scale: Scale,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        qdgate_core::analysis::grid(self.start, self.stop, self.points, self.scale == Scale::Log)
            .expect("axis validated at parse time")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateSection {
    pub initial: BasisState,
    /// End time in ns; the flip time when absent.
    pub t_end_ns: Option<f64>,
    pub samples: usize,
    pub frame: Frame,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub mode: Mode,
    pub device: DeviceSection,
    pub noise: NoiseConfig,
    pub thresholds: Thresholds,
    pub axis: Option<SweepAxis>,
    /// Target field (CNOT) or left-control field (Toffoli) of each sweep row.
    pub fixed_fields: Vec<f64>,
    pub refine: bool,
    pub simulate: SimulateSection,
    pub solver: SolverOptions,
    pub output_dir: PathBuf,
    pub workers: usize,
}

/// Points on a log axis at 60 per decade.
pub fn default_log_points(start: f64, stop: f64) -> usize {
    (60.0 * (stop / start).log10()).ceil() as usize + 1
}

struct Fields {
    entries: BTreeMap<String, (String, usize)>,
}

fn err(key: &str, line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError { key: key.to_string(), line, message: message.into() }
}

impl Fields {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(err(content, Some(line), "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(err(key, Some(line), "empty key"));
            }
            if let Some((_, first)) = entries.insert(key.to_string(), (value.to_string(), line)) {
                return Err(err(key, Some(line), format!("duplicate key, first set on line {first}")));
            }
        }
        Ok(Fields { entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn parsed<T>(&mut self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<(T, usize)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => parse(&v)
                .map(|x| Some((x, line)))
                .ok_or_else(|| err(key, Some(line), format!("expected {what}, got `{v}`"))),
        }
    }

    fn f64_checked(&mut self, key: &str, default: Option<f64>, check: impl Fn(f64) -> bool, rule: &str) -> Result<f64, ConfigError> {
        match self.parsed(key, "a number", parse_f64)? {
            Some((x, line)) if !check(x) => Err(err(key, Some(line), format!("{rule}, got {x}"))),
            Some((x, _)) => Ok(x),
            None => default.ok_or_else(|| err(key, None, "missing required key")),
        }
    }

    fn f64_opt(&mut self, key: &str, check: impl Fn(f64) -> bool, rule: &str) -> Result<Option<f64>, ConfigError> {
        match self.parsed(key, "a number", parse_f64)? {
            Some((x, line)) if !check(x) => Err(err(key, Some(line), format!("{rule}, got {x}"))),
            other => Ok(other.map(|(x, _)| x)),
        }
    }

    fn usize_checked(&mut self, key: &str, default: Option<usize>, min: usize) -> Result<usize, ConfigError> {
        match self.parsed(key, "a non-negative integer", |s| s.parse::<usize>().ok())? {
            Some((x, line)) if x < min => Err(err(key, Some(line), format!("must be >= {min}, got {x}"))),
            Some((x, _)) => Ok(x),
            None => default.ok_or_else(|| err(key, None, "missing required key")),
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        let parse = |s: &str| match s {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        };
        Ok(self.parsed(key, "true or false", parse)?.map_or(default, |(b, _)| b))
    }

    fn list(&mut self, key: &str) -> Result<Option<(Vec<f64>, usize)>, ConfigError> {
        self.parsed(key, "a comma-separated list of numbers", |s| s.split(',').map(parse_f64).collect::<Option<Vec<_>>>())
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().min_by_key(|(_, (_, line))| *line) {
            Some((key, (_, line))) => Err(err(&key, Some(line), "unknown key")),
            None => Ok(()),
        }
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn keyword<'a, T: Copy>(options: &'a [(&'a str, T)]) -> impl Fn(&str) -> Option<T> + 'a {
    move |s| options.iter().find(|(name, _)| name.eq_ignore_ascii_case(s)).map(|&(_, v)| v)
}

/// Parse a configuration. The mode defaults to `simulate`.
pub fn parse_config(text: &str) -> Result<RunSpec, ConfigError> {
    parse_config_with_mode(text, None)
}

/// Parse with the mode fixed by the caller; a conflicting `mode` key is an error.
pub fn parse_config_with_mode(text: &str, forced: Option<Mode>) -> Result<RunSpec, ConfigError> {
    let mut f = Fields::parse(text)?;
    let modes = [("simulate", Mode::Simulate), ("sweep", Mode::Sweep), ("ranges", Mode::Ranges)];
    let mode = match (f.parsed("mode", "simulate, sweep or ranges", keyword(&modes))?, forced) {
        (Some((m, line)), Some(want)) if m != want => {
            return Err(err("mode", Some(line), format!("config says {} but {} was requested", m.name(), want.name())))
        }
        (Some((m, _)), _) => m,
        (None, Some(want)) => want,
        (None, None) => Mode::Simulate,
    };

    let gates = [("cnot", Gate::Cnot), ("toffoli", Gate::Toffoli)];
    let gate = f.parsed("device.gate", "cnot or toffoli", keyword(&gates))?.ok_or_else(|| err("device.gate", None, "missing required key"))?.0;
    let non_negative = |x: f64| x >= 0.0;
    let exchange = match gate {
        Gate::Cnot => vec![f.f64_checked("device.j", None, non_negative, "must be >= 0")?],
        Gate::Toffoli => vec![
            f.f64_checked("device.j12", None, non_negative, "must be >= 0")?,
            f.f64_checked("device.j23", None, non_negative, "must be >= 0")?,
        ],
    };
    let b_z = match f.list("device.b_z")? {
        Some((v, line)) if v.len() != gate.n_qubits() => {
            return Err(err("device.b_z", Some(line), format!("expected {} fields for {}, got {}", gate.n_qubits(), gate.name(), v.len())))
        }
        other => other.map(|(v, _)| v),
    };
    if mode == Mode::Simulate && b_z.is_none() {
        return Err(err("device.b_z", None, "missing required key for simulate"));
    }
    let b_ac = f.f64_checked("device.b_ac", None, non_negative, "must be >= 0")?;
    let g = f.f64_checked("device.g", Some(DEFAULT_G), |x| x != 0.0, "must be nonzero")?;
    let drive_frequency = match f.take("device.drive_frequency") {
        None => DriveFrequency::Auto,
        Some((v, _)) if v.eq_ignore_ascii_case("auto") => DriveFrequency::Auto,
        Some((v, line)) => DriveFrequency::Explicit(
            parse_f64(&v).ok_or_else(|| err("device.drive_frequency", Some(line), format!("expected auto or a number, got `{v}`")))?,
        ),
    };
    let device = DeviceSection { gate, exchange, b_z, b_ac, g, drive_frequency };

    let defaults = NoiseConfig::default();
    let positive = |x: f64| x > 0.0;
    let energy_modes = [("gap", PhononEnergyMode::Gap), ("bare_zeeman", PhononEnergyMode::BareZeeman)];
    let noise = NoiseConfig {
        upsilon: f.f64_checked("noise.upsilon", Some(defaults.upsilon), non_negative, "must be >= 0")?,
        phonon: f.f64_checked("noise.phonon", Some(defaults.phonon), non_negative, "must be >= 0")?,
        delta_e_nuc: f.f64_checked("noise.delta_e_nuc", Some(defaults.delta_e_nuc), positive, "must be > 0")?,
        t_k: f.f64_checked("noise.t_k", Some(defaults.t_k), positive, "must be > 0")?,
        t2_star_ns: f.f64_checked("noise.t2_star", Some(defaults.t2_star_ns), positive, "must be > 0")?,
        hyperfine: f.bool_or("noise.hyperfine_enabled", true)?,
        phonon_enabled: f.bool_or("noise.phonon_enabled", true)?,
        dephasing: f.bool_or("noise.dephasing_enabled", true)?,
        phonon_energy: f
            .parsed("noise.phonon_energy", "gap or bare_zeeman", keyword(&energy_modes))?
            .map_or(PhononEnergyMode::Gap, |(m, _)| m),
    };

    let upper = f.f64_checked("thresholds.upper", Some(0.8), |x| x > 0.0 && x < 1.0, "must lie in (0, 1)")?;
    let lower_line = f.entries.get("thresholds.lower").map(|(_, l)| *l);
    let lower = f.f64_checked("thresholds.lower", Some(0.2), |x| x > 0.0 && x < 1.0, "must lie in (0, 1)")?;
    if lower >= upper {
        return Err(err("thresholds.lower", lower_line, format!("must be below thresholds.upper ({upper}), got {lower}")));
    }
    let thresholds = Thresholds { upper, lower };

    let sweeping = mode != Mode::Simulate;
    let fixed_fields = match f.list("sweep.fixed_fields")? {
        Some((v, _)) => v,
        None if sweeping => return Err(err("sweep.fixed_fields", None, "missing required key for sweep and ranges")),
        None => Vec::new(),
    };
    let scale = f
        .parsed("sweep.scale", "linear or log", keyword(&[("linear", Scale::Linear), ("log", Scale::Log)]))?
        .map_or(Scale::Log, |(s, _)| s);
    let start = f.f64_opt("sweep.start", positive, "must be > 0")?;
    let stop_line = f.entries.get("sweep.stop").map(|(_, l)| *l);
    let stop = f.f64_opt("sweep.stop", positive, "must be > 0")?;
    let axis = match (start, stop) {
        (Some(start), Some(stop)) => {
            if stop <= start {
                return Err(err("sweep.stop", stop_line, format!("must exceed sweep.start ({start}), got {stop}")));
            }
            let default_points = match scale {
                Scale::Log => default_log_points(start, stop),
                Scale::Linear => 61,
            };
            let points = f.usize_checked("sweep.points", Some(default_points), 2)?;
            Some(SweepAxis { start, stop, points, scale })
        }
        (None, _) if sweeping => return Err(err("sweep.start", None, "missing required key for sweep and ranges")),
        (_, None) if sweeping => return Err(err("sweep.stop", None, "missing required key for sweep and ranges")),
        (Some(_), None) => return Err(err("sweep.stop", None, "missing; sweep.start needs sweep.stop")),
        (None, Some(_)) => return Err(err("sweep.start", None, "missing; sweep.stop needs sweep.start")),
        (None, None) => None,
    };
    let refine = f.bool_or("sweep.refine", true)?;

    let n = gate.n_qubits();
    let initial = match f.take("simulate.initial") {
        None => BasisState::from_spins(&vec![true; n]),
        Some((v, line)) => match v.parse::<BasisState>() {
            Ok(s) if s.n_qubits() == n => s,
            _ => return Err(err("simulate.initial", Some(line), format!("expected {n} spins of u/d, got `{v}`"))),
        },
    };
    let simulate = SimulateSection {
        initial,
        t_end_ns: f.f64_opt("simulate.t_end", positive, "must be > 0")?,
        samples: f.usize_checked("simulate.samples", Some(2000), 2)?,
        frame: f
            .parsed("simulate.frame", "rwa or lab", keyword(&[("rwa", Frame::Rwa), ("lab", Frame::Lab)]))?
            .map_or(Frame::Rwa, |(fr, _)| fr),
    };

    let solver_defaults = if sweeping { sweep_solver_options() } else { SolverOptions::default() };
    let solver = SolverOptions {
        rtol: f.f64_checked("solver.rtol", Some(solver_defaults.rtol), positive, "must be > 0")?,
        atol: f.f64_checked("solver.atol", Some(solver_defaults.atol), positive, "must be > 0")?,
        ..solver_defaults
    };

    let output_dir = PathBuf::from(f.take("output.dir").map_or_else(|| ".".to_string(), |(v, _)| v));
    let workers = f.usize_checked("run.workers", Some(1), 1)?;
    f.finish()?;

    let spec = RunSpec { mode, device, noise, thresholds, axis, fixed_fields, refine, simulate, solver, output_dir, workers };
    if let Some(cfg) = spec.device.config() {
        cfg.validate().map_err(|e| err("device", None, e.to_string()))?;
    }
    Ok(spec)
}

fn list(values: &[f64]) -> String {
    values.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

/// Serialize a spec with every key explicit; `parse_config` reads it back unchanged.
pub fn render(spec: &RunSpec) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("mode", spec.mode.name().into());
    let d = &spec.device;
    kv("device.gate", d.gate.name().into());
    match d.gate {
        Gate::Cnot => kv("device.j", format!("{:?}", d.exchange[0])),
        Gate::Toffoli => {
            kv("device.j12", format!("{:?}", d.exchange[0]));
            kv("device.j23", format!("{:?}", d.exchange[1]));
        }
    }
    if let Some(b_z) = &d.b_z {
        kv("device.b_z", list(b_z));
    }
    kv("device.b_ac", format!("{:?}", d.b_ac));
    kv("device.g", format!("{:?}", d.g));
    kv(
        "device.drive_frequency",
        match d.drive_frequency {
            DriveFrequency::Auto => "auto".into(),
            DriveFrequency::Explicit(w) => format!("{w:?}"),
        },
    );
    let n = &spec.noise;
    kv("noise.upsilon", format!("{:?}", n.upsilon));
    kv("noise.phonon", format!("{:?}", n.phonon));
    kv("noise.delta_e_nuc", format!("{:?}", n.delta_e_nuc));
    kv("noise.t_k", format!("{:?}", n.t_k));
    kv("noise.t2_star", format!("{:?}", n.t2_star_ns));
    kv("noise.hyperfine_enabled", n.hyperfine.to_string());
    kv("noise.phonon_enabled", n.phonon_enabled.to_string());
    kv("noise.dephasing_enabled", n.dephasing.to_string());
    kv(
        "noise.phonon_energy",
        match n.phonon_energy {
            PhononEnergyMode::Gap => "gap".into(),
            PhononEnergyMode::BareZeeman => "bare_zeeman".into(),
        },
    );
    kv("thresholds.upper", format!("{:?}", spec.thresholds.upper));
    kv("thresholds.lower", format!("{:?}", spec.thresholds.lower));
    if !spec.fixed_fields.is_empty() {
        kv("sweep.fixed_fields", list(&spec.fixed_fields));
    }
    if let Some(a) = &spec.axis {
        kv("sweep.start", format!("{:?}", a.start));
        kv("sweep.stop", format!("{:?}", a.stop));
        kv("sweep.points", a.points.to_string());
        kv("sweep.scale", if a.scale == Scale::Log { "log" } else { "linear" }.into());
    }
    kv("sweep.refine", spec.refine.to_string());
    kv("simulate.initial", spec.simulate.initial.ascii());
    if let Some(t) = spec.simulate.t_end_ns {
        kv("simulate.t_end", format!("{t:?}"));
    }
    kv("simulate.samples", spec.simulate.samples.to_string());
    kv("simulate.frame", if spec.simulate.frame == Frame::Lab { "lab" } else { "rwa" }.into());
    kv("solver.rtol", format!("{:?}", spec.solver.rtol));
    kv("solver.atol", format!("{:?}", spec.solver.atol));
    kv("output.dir", spec.output_dir.display().to_string());
    kv("run.workers", spec.workers.to_string());
    s
}
