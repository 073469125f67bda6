//! Run orchestration and CSV export.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use qdgate_core::analysis::{classify, flip_time, operating_range, population_up, sweep_points, Bound, SweepResult, SweepSpec};
use qdgate_core::device::{build_hamiltonian_rwa, lab_hamiltonian, time_to_ns, ns_to_time, DriveFrequency, Gate};
use qdgate_core::dynamics::{evolve, uniform_grid, Hamiltonian};
use qdgate_core::noise::{collapse_set_for_device, CALIBRATED_PHONON, CALIBRATED_UPSILON};

use crate::config::{render, Frame, Mode, RunSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] qdgate_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Spec(String),
}

/// Files written by a run, in write order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Extra `key = value` facts recorded in the manifest.
    pub facts: Vec<(String, String)>,
}

pub fn run(spec: &RunSpec) -> Result<RunReport, RunError> {
    fs::create_dir_all(&spec.output_dir).map_err(|source| RunError::Io { path: spec.output_dir.clone(), source })?;
    let mut report = match spec.mode {
        Mode::Simulate => simulate(spec)?,
        Mode::Sweep => sweep(spec)?,
        Mode::Ranges => ranges(spec)?,
    };
    let manifest = spec.output_dir.join("manifest.txt");
    write_manifest(&manifest, spec, &report)?;
    report.files.push(manifest);
    Ok(report)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, RunError> {
    csv::Writer::from_path(path).map_err(|source| RunError::Csv { path: path.to_path_buf(), source })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> RunError + '_ {
    move |source| RunError::Csv { path: path.to_path_buf(), source }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

fn simulate(spec: &RunSpec) -> Result<RunReport, RunError> {
    let cfg = spec
        .device
        .config()
        .ok_or_else(|| RunError::Spec("simulate needs device.b_z".into()))?
        .resolved()?;
    let t_flip = match flip_time(&cfg) {
        Ok(t) => Some(t),
        Err(qdgate_core::Error::NoFlipDetected { .. }) if spec.simulate.t_end_ns.is_some() => None,
        Err(e) => return Err(e.into()),
    };
    let t_end = spec.simulate.t_end_ns.map(ns_to_time).or(t_flip).expect("one of the two is set");
    let hamiltonian = match spec.simulate.frame {
        Frame::Rwa => Hamiltonian::Static(build_hamiltonian_rwa(&cfg)?),
        Frame::Lab => Hamiltonian::Periodic(lab_hamiltonian(&cfg)?),
    };
    let collapse = collapse_set_for_device(&cfg, &spec.noise)?;
    let rho0 = qdgate_core::quantum::DensityMatrix::basis(spec.simulate.initial);
    let mut times = uniform_grid(t_end, spec.simulate.samples);
    if let Some(t) = t_flip.filter(|&t| t < t_end) {
        // keep the flip time on the grid so the verdict needs no interpolation
        if let Err(i) = times.binary_search_by(|x| x.total_cmp(&t)) {
            times.insert(i, t);
        }
    }
    let traj = evolve(&hamiltonian, &collapse, &rho0, &times, &spec.solver)?;

    let n = cfg.n_qubits();
    let path = spec.output_dir.join("trajectory.csv");
    let mut w = csv_writer(&path)?;
    let mut header = vec!["time_ns".to_string()];
    header.extend((0..n).map(|q| format!("P_up_q{q}")));
    header.push("trace_error".into());
    w.write_record(&header).map_err(csv_err(&path))?;
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![format!("{:.6}", time_to_ns(*t))];
        for q in 0..n {
            row.push(format!("{:.6}", population_up(rho, q)?));
        }
        row.push(format!("{:.3e}", (rho.operator().trace().re - 1.0).abs()));
        w.write_record(&row).map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let mut facts = Vec::new();
    if let DriveFrequency::Explicit(w) = cfg.drive_frequency {
        facts.push(("resolved.drive_frequency".into(), format!("{w:?}")));
    }
    if let Some(t) = t_flip {
        facts.push(("resolved.t_flip_ns".into(), format!("{:.6}", time_to_ns(t))));
        if t <= t_end {
            let v = classify(&traj, t, cfg.gate, spec.simulate.initial, &spec.thresholds)?;
            facts.push(("verdict".into(), if v.pass { "pass" } else { "fail" }.into()));
        }
    }
    let phys = traj.physicality();
    facts.push(("physicality.trace_error".into(), format!("{:.3e}", phys.trace_error)));
    facts.push(("physicality.min_eigenvalue".into(), format!("{:.3e}", phys.min_eigenvalue)));
    Ok(RunReport { files: vec![path], facts })
}

fn sweep_spec(spec: &RunSpec, fixed: f64) -> Result<SweepSpec, RunError> {
    let axis = spec.axis.as_ref().ok_or_else(|| RunError::Spec("sweep needs sweep.start and sweep.stop".into()))?;
    Ok(SweepSpec {
        gate: spec.device.gate,
        fixed_field: fixed,
        exchange: spec.device.exchange.clone(),
        b_ac: spec.device.b_ac,
        g: spec.device.g,
        axis: axis.values(),
        refine: spec.refine,
        solver: spec.solver,
        workers: spec.workers,
    })
}

fn field_tag(x: f64) -> String {
    format!("{x:?}")
}

fn sweep(spec: &RunSpec) -> Result<RunReport, RunError> {
    let gate = spec.device.gate;
    let mut files = Vec::new();
    for &fixed in &spec.fixed_fields {
        let s = sweep_spec(spec, fixed)?;
        let points = sweep_points(&s, &s.axis, &spec.noise, &spec.thresholds)?;
        let path = spec.output_dir.join(format!("sweep_{}T.csv", field_tag(fixed)));
        let mut w = csv_writer(&path)?;
        w.write_record(["gradient_T", "initial_state", "qubit_role", "P_up", "verdict"]).map_err(csv_err(&path))?;
        for p in &points {
            for v in &p.verdicts {
                for (q, &pu) in v.p_up.iter().enumerate() {
                    let ok = !v.failing.contains(&q);
                    w.write_record([
                        format!("{:?}", p.gradient),
                        v.initial.ascii(),
                        gate.qubit_role(q).to_string(),
                        format!("{pu:.6}"),
                        if ok { "pass" } else { "fail" }.to_string(),
                    ])
                    .map_err(csv_err(&path))?;
                }
            }
        }
        w.flush().map_err(io_err(&path))?;
        files.push(path);
    }
    Ok(RunReport { files, facts: Vec::new() })
}

/// Three significant figures.
pub fn sig3(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let decimals = (2 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Interval text for absolute fields `offset + scale·gradient`.
fn range_text(res: &SweepResult, offset: f64, scale: f64) -> String {
    let Some(r) = &res.range else { return "empty".into() };
    let at = |b: &Bound| sig3(offset + scale * b.value());
    match (r.lower.open, r.upper.open) {
        (false, false) => format!("{}-{}", at(&r.lower), at(&r.upper)),
        (false, true) => format!(">{}", at(&r.lower)),
        (true, false) => format!("<{}", at(&r.upper)),
        (true, true) => format!("{}-{} (whole grid)", at(&r.lower), at(&r.upper)),
    }
}

fn limit_text(gate: Gate, b: Option<&Bound>) -> String {
    match b.and_then(|b| b.limit) {
        Some(l) => format!("{}/{}", l.state.ascii(), gate.qubit_role(l.qubit)),
        None => "-".into(),
    }
}

fn ranges(spec: &RunSpec) -> Result<RunReport, RunError> {
    let gate = spec.device.gate;
    let path = spec.output_dir.join("ranges.csv");
    let mut w = csv_writer(&path)?;
    let header: &[&str] = match gate {
        Gate::Cnot => &["B_ac_T", "J_ueV", "B_T_T", "B_C_range_T", "lower_limit", "upper_limit"],
        Gate::Toffoli => &["B_ac_T", "J12_ueV", "J23_ueV", "B_CL_T", "B_TC_range_T", "B_CR_range_T", "lower_limit", "upper_limit"],
    };
    w.write_record(header).map_err(csv_err(&path))?;
    let mut facts = Vec::new();
    for &fixed in &spec.fixed_fields {
        let res = operating_range(&sweep_spec(spec, fixed)?, &spec.noise, &spec.thresholds)?;
        let lower = res.range.as_ref().map(|r| &r.lower);
        let upper = res.range.as_ref().map(|r| &r.upper);
        let mut row = vec![format!("{:?}", spec.device.b_ac)];
        row.extend(spec.device.exchange.iter().map(|j| format!("{j:?}")));
        row.push(format!("{fixed:?}"));
        row.push(range_text(&res, fixed, 1.0));
        if gate == Gate::Toffoli {
            row.push(range_text(&res, fixed, 2.0));
        }
        row.push(limit_text(gate, lower));
        row.push(limit_text(gate, upper));
        w.write_record(&row).map_err(csv_err(&path))?;
        let phys = res.physicality();
        facts.push((format!("physicality.trace_error[{}]", field_tag(fixed)), format!("{:.3e}", phys.trace_error)));
    }
    w.flush().map_err(io_err(&path))?;
    Ok(RunReport { files: vec![path], facts })
}

fn write_manifest(path: &Path, spec: &RunSpec, report: &RunReport) -> Result<(), RunError> {
    let mut out = String::new();
    out.push_str("# qdgate run manifest\n");
    out.push_str(&format!("tool.version = {VERSION}\n"));
    out.push_str(&format!("calibration.upsilon = {CALIBRATED_UPSILON:?}\n"));
    out.push_str(&format!("calibration.phonon = {CALIBRATED_PHONON:?}\n"));
    out.push_str(&render(spec));
    for (k, v) in &report.facts {
        out.push_str(&format!("{k} = {v}\n"));
    }
    for f in &report.files {
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        out.push_str(&format!("output = {name}\n"));
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(out.as_bytes()).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_significant_figures() {
        assert_eq!(sig3(3.0098), "3.01");
        assert_eq!(sig3(0.016604), "0.0166");
        assert_eq!(sig3(12.345), "12.3");
        assert_eq!(sig3(123.45), "123");
    }
}
