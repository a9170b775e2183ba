//! Batch runners behind the command-line front-end.
//!
//! Every runner computes its result in memory, then writes a CSV table and a
//! `*.summary.toml` sidecar next to it. Files are written to a temporary name
//! in the target directory and renamed into place.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::classify::{classify, Outcome, Reason, Side, Tag};
use crate::config::{RunConfig, SweepParameter};
use crate::consistency::AlgebraReport;
use crate::dynamics::{EomTable, Order};
use crate::integrator::{integrate, integrate_with_times, EventKind, Termination, Trajectory};
use crate::packet::GaussianPacket;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("algebra report differs from the golden record:\n{0}")]
    Golden(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) | AppError::Io(_) => 1,
            AppError::Integration(_) => 2,
            AppError::Golden(_) => 3,
        }
    }
}

impl From<crate::Error> for AppError {
    fn from(e: crate::Error) -> Self {
        AppError::Config(e.to_string())
    }
}

/// Sidecar path: `out.csv` becomes `out.summary.toml`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.toml")
}

/// Writes `contents` to a temporary file beside `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), AppError> {
    let io = |e: std::io::Error| AppError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, AppError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| AppError::Io(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| AppError::Io(e.to_string()))
}

/// Config with every default filled in, so summaries describe the run fully.
fn resolved(cfg: &RunConfig) -> Result<RunConfig, AppError> {
    let mut out = cfg.clone();
    let pot = cfg.potential()?;
    out.integrator.escape_radius = Some(cfg.integrator_config(&pot)?.escape_radius);
    out.classify.margin = Some(cfg.margin()?);
    Ok(out)
}

fn validated(cfg: &RunConfig) -> Result<(), AppError> {
    cfg.validate().map_err(AppError::from)
}

/// A single integrated and classified run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub packet: GaussianPacket,
    pub energy: f64,
    pub trajectory: Trajectory,
    pub outcome: Outcome,
}

fn run_one(
    cfg: &RunConfig,
    q0: f64,
    p0: Option<f64>,
    sigma0: Option<f64>,
    extra_times: &[f64],
) -> Result<RunResult, AppError> {
    let packet = cfg.packet(q0, p0, sigma0)?;
    let model = cfg.model_config()?;
    let pot = *model.potential();
    // a swept p0 overrides any configured energy
    let energy = match p0 {
        Some(p) => p * p / (2.0 * model.mass()) + pot.evaluate(q0),
        None => cfg.incident_energy(&packet)?,
    };
    let mut icfg = cfg.integrator_config(&pot)?;
    icfg.crossing_levels.clear();
    if energy > 0.0 && pot.gamma(energy)?.is_forbidden() {
        let (l, r) = pot.turning_points(energy)?;
        icfg.crossing_levels = vec![l, r];
    }
    let init = packet.initial_state(model.order(), cfg.convention())?;
    let trajectory = if extra_times.is_empty() {
        integrate(&init, &model, &icfg)?
    } else {
        integrate_with_times(&init, &model, &icfg, extra_times)?
    };
    let outcome = classify(&trajectory, &pot, energy, cfg.margin()?)?;
    Ok(RunResult {
        packet,
        energy,
        trajectory,
        outcome,
    })
}

/// Integrates and classifies the configured packet.
pub fn simulate(cfg: &RunConfig) -> Result<RunResult, AppError> {
    validated(cfg)?;
    run_one(cfg, cfg.packet.q0, None, None, &[])
}

pub fn trajectory_header(order: Order) -> Vec<&'static str> {
    match order {
        Order::Classical => vec!["t", "q", "p"],
        Order::Second => vec!["t", "q", "p", "G20", "G11", "G02", "H_Q", "V_eff", "residual"],
        Order::Third => vec![
            "t", "q", "p", "G20", "G11", "G02", "G30", "G21", "G12", "G03", "H_Q", "V_eff", "residual",
        ],
    }
}

pub fn trajectory_csv(traj: &Trajectory) -> Result<Vec<u8>, AppError> {
    let order = traj.model.order();
    let rows = traj.samples.iter().map(|s| {
        let mut row: Vec<String> = s.state.to_vec().into_iter().map(num).collect();
        row.insert(0, num(s.state.t));
        if order != Order::Classical {
            row.push(num(s.hamiltonian));
            row.push(num(s.effective_potential));
            row.push(opt_num(s.residual));
        }
        row
    });
    csv_text(&trajectory_header(order), rows)
}

#[derive(Serialize)]
struct EvidenceRecord {
    turning_point: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    entry_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exit_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exit_side: Option<Side>,
    sign_changes_inside: u32,
    sign_changes_near: u32,
    closest_approach: f64,
    final_q: f64,
    final_p: f64,
    horizon: f64,
}

#[derive(Serialize)]
struct OutcomeRecord {
    tag: Tag,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<Reason>,
    evidence: EvidenceRecord,
}

impl From<&Outcome> for OutcomeRecord {
    fn from(o: &Outcome) -> Self {
        let e = &o.evidence;
        OutcomeRecord {
            tag: o.tag,
            reason: o.reason,
            evidence: EvidenceRecord {
                turning_point: e.turning_point,
                entry_time: e.entry_time,
                exit_time: e.exit_time,
                exit_side: e.exit_side,
                sign_changes_inside: e.sign_changes_inside,
                sign_changes_near: e.sign_changes_near,
                closest_approach: e.closest_approach,
                final_q: e.final_q,
                final_p: e.final_p,
                horizon: e.horizon,
            },
        }
    }
}

#[derive(Serialize)]
struct EventRecord {
    t: f64,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    level: Option<f64>,
}

#[derive(Serialize)]
struct RunRecord {
    command: &'static str,
    energy: f64,
    p0: f64,
    termination: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
    energy_drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_violation: Option<f64>,
    t_end: f64,
    samples: usize,
    accepted_steps: usize,
    rejected_steps: usize,
}

fn run_record(command: &'static str, r: &RunResult) -> RunRecord {
    let t = &r.trajectory;
    RunRecord {
        command,
        energy: r.energy,
        p0: r.packet.p0(),
        termination: t.termination.as_str(),
        failure: t.failure.clone(),
        energy_drift: t.energy_drift(),
        min_residual: t.min_residual(),
        first_violation: t.first_violation,
        t_end: t.t_end(),
        samples: t.samples.len(),
        accepted_steps: t.stats.accepted,
        rejected_steps: t.stats.rejected,
    }
}

fn event_records(t: &Trajectory) -> Vec<EventRecord> {
    t.events
        .iter()
        .map(|e| match e.kind {
            EventKind::MomentumSignChange { to_positive } => EventRecord {
                t: e.t,
                kind: if to_positive { "p_to_positive" } else { "p_to_negative" },
                level: None,
            },
            EventKind::PositionCrossing { level, upward } => EventRecord {
                t: e.t,
                kind: if upward { "q_up_crossing" } else { "q_down_crossing" },
                level: Some(level),
            },
        })
        .collect()
}

pub fn simulation_summary(cfg: &RunConfig, r: &RunResult) -> Result<String, AppError> {
    #[derive(Serialize)]
    struct Summary {
        run: RunRecord,
        outcome: OutcomeRecord,
        config: RunConfig,
        event: Vec<EventRecord>,
    }
    let s = Summary {
        run: run_record("simulate", r),
        outcome: (&r.outcome).into(),
        config: resolved(cfg)?,
        event: event_records(&r.trajectory),
    };
    toml::to_string(&s).map_err(|e| AppError::Io(e.to_string()))
}

fn failure_check(r: &RunResult) -> Result<(), AppError> {
    if r.trajectory.termination == Termination::StepFailure {
        let why = r.trajectory.failure.clone().unwrap_or_default();
        return Err(AppError::Integration(format!(
            "step failure at t = {}: {why}",
            r.trajectory.t_end()
        )));
    }
    Ok(())
}

/// Runs one trajectory and writes its table and summary to `out`.
pub fn run_simulate(cfg: &RunConfig, out: &Path) -> Result<RunResult, AppError> {
    let r = simulate(cfg)?;
    write_atomic(out, &trajectory_csv(&r.trajectory)?)?;
    write_atomic(&summary_path(out), simulation_summary(cfg, &r)?.as_bytes())?;
    failure_check(&r)?;
    Ok(r)
}

/// One sweep point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub tag: Tag,
    /// Undetermined reason, or the error that stopped this point.
    pub reason: Option<String>,
    pub result: Option<RunResult>,
}

pub fn sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>, AppError> {
    validated(cfg)?;
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| AppError::Config("sweep requires a [sweep] section".into()))?;
    let rows = spec
        .values()
        .into_par_iter()
        .map(|v| {
            let res = match spec.parameter {
                SweepParameter::Q0 => run_one(cfg, v, None, None, &[]),
                SweepParameter::P0 => run_one(cfg, cfg.packet.q0, Some(v), None, &[]),
                SweepParameter::Sigma0 => run_one(cfg, cfg.packet.q0, None, Some(v), &[]),
            };
            match res {
                Ok(r) => SweepRow {
                    value: v,
                    tag: r.outcome.tag,
                    reason: r.outcome.reason.map(|x| x.as_str().to_string()),
                    result: Some(r),
                },
                Err(e) => SweepRow {
                    value: v,
                    tag: Tag::Undetermined,
                    reason: Some(e.to_string()),
                    result: None,
                },
            }
        })
        .collect();
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 12] = [
    "value",
    "tag",
    "reason",
    "entry_time",
    "exit_time",
    "exit_side",
    "final_q",
    "final_p",
    "energy_drift",
    "constraint_violated",
    "termination",
    "p0",
];

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>, AppError> {
    let lines = rows.iter().map(|row| {
        let mut line = vec![
            num(row.value),
            row.tag.to_string(),
            row.reason.clone().unwrap_or_default(),
        ];
        match &row.result {
            Some(r) => {
                let e = &r.outcome.evidence;
                line.extend([
                    opt_num(e.entry_time),
                    opt_num(e.exit_time),
                    match e.exit_side {
                        Some(Side::Left) => "left".into(),
                        Some(Side::Right) => "right".into(),
                        None => String::new(),
                    },
                    num(e.final_q),
                    num(e.final_p),
                    num(r.trajectory.energy_drift()),
                    r.trajectory.first_violation.is_some().to_string(),
                    r.trajectory.termination.as_str().into(),
                    num(r.packet.p0()),
                ]);
            }
            None => line.extend(std::iter::repeat_n(String::new(), SWEEP_HEADER.len() - 3)),
        }
        line
    });
    csv_text(&SWEEP_HEADER, lines)
}

pub fn sweep_summary(cfg: &RunConfig, rows: &[SweepRow]) -> Result<String, AppError> {
    #[derive(Serialize)]
    struct Counts {
        reflected: usize,
        tunneled: usize,
        trapped: usize,
        undetermined: usize,
    }
    #[derive(Serialize)]
    struct Summary {
        parameter: &'static str,
        points: usize,
        counts: Counts,
        config: RunConfig,
    }
    let count = |t| rows.iter().filter(|r| r.tag == t).count();
    let s = Summary {
        parameter: cfg.sweep.as_ref().map_or("", |s| s.parameter.as_str()),
        points: rows.len(),
        counts: Counts {
            reflected: count(Tag::Reflected),
            tunneled: count(Tag::Tunneled),
            trapped: count(Tag::Trapped),
            undetermined: count(Tag::Undetermined),
        },
        config: resolved(cfg)?,
    };
    toml::to_string(&s).map_err(|e| AppError::Io(e.to_string()))
}

/// Runs the sweep on the rayon pool and writes rows in sweep order.
pub fn run_sweep(cfg: &RunConfig, out: &Path) -> Result<Vec<SweepRow>, AppError> {
    let rows = sweep(cfg)?;
    write_atomic(out, &sweep_csv(&rows)?)?;
    write_atomic(&summary_path(out), sweep_summary(cfg, &rows)?.as_bytes())?;
    Ok(rows)
}

/// `V_eff(q, t)` on the configured grid with moments frozen at each `t`.
#[derive(Debug, Clone)]
pub struct Surface {
    pub run: RunResult,
    /// `(t, q, V_eff)` rows, `t`-major.
    pub rows: Vec<(f64, f64, f64)>,
    /// Grid times after the trajectory ended; they have no rows.
    pub skipped_times: Vec<f64>,
}

pub fn surface(cfg: &RunConfig) -> Result<Surface, AppError> {
    validated(cfg)?;
    let spec = cfg
        .surface
        .as_ref()
        .ok_or_else(|| AppError::Config("surface requires a [surface] section".into()))?;
    let times = spec.t_grid();
    let run = run_one(cfg, cfg.packet.q0, None, None, &times)?;
    let model = run.trajectory.model;
    let qs = spec.q_grid();
    let mut rows = Vec::with_capacity(times.len() * qs.len());
    let mut skipped_times = Vec::new();
    for &t in &times {
        match run.trajectory.sample_at(t) {
            Some(s) => rows.extend(qs.iter().map(|&q| (t, q, model.effective_potential(q, &s.state)))),
            None => skipped_times.push(t),
        }
    }
    Ok(Surface {
        run,
        rows,
        skipped_times,
    })
}

pub fn run_surface(cfg: &RunConfig, out: &Path) -> Result<Surface, AppError> {
    let s = surface(cfg)?;
    let table = csv_text(
        &["t", "q", "V_eff"],
        s.rows.iter().map(|&(t, q, v)| vec![num(t), num(q), num(v)]),
    )?;
    write_atomic(out, &table)?;
    #[derive(Serialize)]
    struct Summary {
        run: RunRecord,
        outcome: OutcomeRecord,
        rows: usize,
        skipped_times: Vec<f64>,
        config: RunConfig,
    }
    let summary = Summary {
        run: run_record("surface", &s.run),
        outcome: (&s.run.outcome).into(),
        rows: s.rows.len(),
        skipped_times: s.skipped_times.clone(),
        config: resolved(cfg)?,
    };
    let text = toml::to_string(&summary).map_err(|e| AppError::Io(e.to_string()))?;
    write_atomic(&summary_path(out), text.as_bytes())?;
    failure_check(&s.run)?;
    Ok(s)
}

/// Writes the algebra report for `tables` (the built-in ones when empty).
/// Fails with [`AppError::Golden`] on any difference not on record.
pub fn run_check_algebra(tables: &[EomTable], out: &Path) -> Result<AlgebraReport, AppError> {
    let report = if tables.is_empty() {
        AlgebraReport::builtin()
    } else {
        AlgebraReport::from_tables(tables)
    };
    write_atomic(out, report.to_text().as_bytes())?;
    write_atomic(&summary_path(out), report.to_toml().as_bytes())?;
    if !report.matches_golden() {
        let mut lines: Vec<String> = report
            .reports
            .iter()
            .flat_map(|r| {
                r.unexpected()
                    .map(move |e| format!("order {}: d{}/dt", r.order.as_u32(), e.variable))
            })
            .collect();
        lines.extend(
            report
                .properties
                .iter()
                .filter(|p| !p.passed())
                .map(|p| format!("property {}", p.name)),
        );
        return Err(AppError::Golden(lines.join("\n")));
    }
    Ok(report)
}

/// Reads an equation table from a TOML file.
pub fn load_table(path: &Path) -> Result<EomTable, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    EomTable::from_toml(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

pub fn load_config(path: &Path) -> Result<RunConfig, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_toml(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> RunConfig {
        RunConfig::from_toml(&format!("[packet]\nq0 = -2.0\nenergy = 0.98\n{extra}")).unwrap()
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            summary_path(Path::new("out/run.csv")),
            PathBuf::from("out/run.summary.toml")
        );
    }

    #[test]
    fn atomic_write_replaces_existing_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/a.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn classical_table_has_three_columns() {
        let mut cfg = config("");
        cfg.model.order = Order::Classical;
        let r = simulate(&cfg).unwrap();
        let text = String::from_utf8(trajectory_csv(&r.trajectory).unwrap()).unwrap();
        assert!(text.starts_with("t,q,p\n"));
        assert_eq!(r.outcome.tag, Tag::Reflected);
    }

    #[test]
    fn single_point_sweep_matches_simulate() {
        let cfg = config("[sweep]\nparameter = \"q0\"\nstart = -2.0\nstop = -2.0\ncount = 1\n");
        let rows = sweep(&cfg).unwrap();
        let single = simulate(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].result.as_ref().unwrap().outcome, single.outcome);
    }

    #[test]
    fn failed_points_do_not_stop_the_sweep() {
        // V(q0) exceeds the energy near the barrier top
        let cfg = config("[sweep]\nparameter = \"q0\"\nstart = -3.0\nstop = 0.0\ncount = 4\n");
        let rows = sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[3].result.is_none());
        assert_eq!(rows[3].tag, Tag::Undetermined);
        assert!(rows[3].reason.as_deref().unwrap().contains("energy"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(AppError::Config(String::new()).exit_code(), 1);
        assert_eq!(AppError::Integration(String::new()).exit_code(), 2);
        assert_eq!(AppError::Golden(String::new()).exit_code(), 3);
    }
}
