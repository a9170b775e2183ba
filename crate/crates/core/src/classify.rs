//! Reflected / tunneled / trapped classification of finished trajectories.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{Termination, Trajectory};
use crate::potential::BarrierPotential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    Reflected,
    Tunneled,
    Trapped,
    Undetermined,
}

impl Tag {
    pub const ALL: [Tag; 4] = [Tag::Reflected, Tag::Tunneled, Tag::Trapped, Tag::Undetermined];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Reflected => "Reflected",
            Tag::Tunneled => "Tunneled",
            Tag::Trapped => "Trapped",
            Tag::Undetermined => "Undetermined",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Tag::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown outcome tag {s:?}"))
    }
}

/// Why a trajectory could not be assigned a definite outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    /// `V0 / E <= 1`: no classical turning points.
    AboveBarrier,
    ConstraintViolated,
    StepFailure,
    /// None of the outcome rules matched.
    Inconclusive,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::AboveBarrier => "above_barrier",
            Reason::ConstraintViolated => "constraint_violated",
            Reason::StepFailure => "step_failure",
            Reason::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// Positive turning point `x`; zero when there is none.
    pub turning_point: f64,
    /// First sample with `|q| <= x`.
    pub entry_time: Option<f64>,
    /// First sample after the last one inside `|q| <= x`.
    pub exit_time: Option<f64>,
    pub exit_side: Option<Side>,
    /// Momentum sign changes while `|q| < x`.
    pub sign_changes_inside: u32,
    /// Momentum sign changes while `|q| < x + margin`.
    pub sign_changes_near: u32,
    pub closest_approach: f64,
    pub final_q: f64,
    pub final_p: f64,
    /// Time at which the trajectory ended.
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub tag: Tag,
    pub reason: Option<Reason>,
    pub evidence: Evidence,
}

/// Margin used when none is configured: `0.05 a`.
pub fn default_margin(pot: &BarrierPotential) -> f64 {
    0.05 * pot.width()
}

pub fn classify(traj: &Trajectory, pot: &BarrierPotential, energy: f64, margin: f64) -> Result<Outcome> {
    if !margin.is_finite() || margin < 0.0 {
        return Err(Error::InvalidMargin(margin));
    }
    let last = traj.last().state;
    let x = if energy > 0.0 && pot.gamma(energy)?.is_forbidden() {
        pot.turning_points(energy)?.1
    } else {
        0.0
    };
    let evidence = gather(traj, x, margin);
    let undetermined = |reason| Outcome {
        tag: Tag::Undetermined,
        reason: Some(reason),
        evidence,
    };
    if x == 0.0 {
        return Ok(undetermined(Reason::AboveBarrier));
    }
    match traj.termination {
        Termination::ConstraintViolated => return Ok(undetermined(Reason::ConstraintViolated)),
        Termination::StepFailure => return Ok(undetermined(Reason::StepFailure)),
        Termination::ReachedTmax | Termination::Escaped => {}
    }
    let (q, p) = (last.q, last.p);
    let tag = if q > x + margin && p > 0.0 {
        Tag::Tunneled
    } else if q < -x - margin && p < 0.0 && evidence.closest_approach <= 2.0 * x {
        Tag::Reflected
    } else if traj.termination == Termination::ReachedTmax && q.abs() < x + margin && evidence.sign_changes_near >= 2 {
        Tag::Trapped
    } else {
        return Ok(undetermined(Reason::Inconclusive));
    };
    Ok(Outcome {
        tag,
        reason: None,
        evidence,
    })
}

fn gather(traj: &Trajectory, x: f64, margin: f64) -> Evidence {
    let last = traj.last().state;
    let mut ev = Evidence {
        turning_point: x,
        entry_time: None,
        exit_time: None,
        exit_side: None,
        sign_changes_inside: 0,
        sign_changes_near: 0,
        closest_approach: f64::INFINITY,
        final_q: last.q,
        final_p: last.p,
        horizon: last.t,
    };
    let mut last_inside = None;
    let mut sign = 0.0f64;
    for (i, s) in traj.samples.iter().enumerate() {
        let (q, p) = (s.state.q, s.state.p);
        ev.closest_approach = ev.closest_approach.min(q.abs());
        if q.abs() <= x {
            ev.entry_time.get_or_insert(s.state.t);
            last_inside = Some(i);
        }
        if p != 0.0 {
            if sign != 0.0 && p.signum() != sign {
                if q.abs() < x {
                    ev.sign_changes_inside += 1;
                }
                if q.abs() < x + margin {
                    ev.sign_changes_near += 1;
                }
            }
            sign = p.signum();
        }
    }
    if let Some(exit) = last_inside.and_then(|i| traj.samples.get(i + 1)) {
        ev.exit_time = Some(exit.state.t);
        ev.exit_side = Some(if exit.state.q > 0.0 { Side::Right } else { Side::Left });
    }
    ev
}
