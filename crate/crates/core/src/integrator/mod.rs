//! Adaptive integration of moment trajectories.
//!
//! Output is sampled from the dense interpolant at multiples of `sample_dt`
//! and at located events (momentum sign changes, crossings of requested
//! position levels). Integration stops at `t_max`, when the packet escapes
//! outward beyond `escape_radius`, or when the uncertainty relation is
//! violated beyond roundoff.

mod dopri;

pub use dopri::{DenseStep, Dopri5, StepError, StepStats};

use crate::dynamics::{ModelConfig, MomentState, Order};
use crate::error::{check_positive, Error, Result};

/// Residual `G20 G02 - G11^2 - hbar^2/4` of the uncertainty relation;
/// `None` for classical states.
pub fn uncertainty_residual(state: &MomentState, hbar: f64) -> Option<f64> {
    if state.order() == Order::Classical {
        return None;
    }
    Some(state.g20() * state.g02() - state.g11() * state.g11() - hbar * hbar / 4.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub t_max: f64,
    pub max_step: f64,
    pub escape_radius: f64,
    pub sample_dt: f64,
    /// Positions whose crossings are located and recorded as events.
    pub crossing_levels: Vec<f64>,
    pub max_steps: usize,
    /// Stop at the first constraint violation; otherwise only record its time.
    pub stop_on_violation: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            t_max: 20.0,
            max_step: 0.1,
            escape_radius: 10.0,
            sample_dt: 0.01,
            crossing_levels: Vec::new(),
            max_steps: 5_000_000,
            stop_on_violation: true,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("rtol", self.rtol)?;
        check_positive("atol", self.atol)?;
        check_positive("t_max", self.t_max)?;
        check_positive("max_step", self.max_step)?;
        check_positive("escape_radius", self.escape_radius)?;
        check_positive("sample_dt", self.sample_dt)?;
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter {
                field: "max_steps",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Residual below which the run is stopped as a constraint violation.
    pub fn constraint_floor(&self) -> f64 {
        -10.0 * self.atol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    ReachedTmax,
    Escaped,
    ConstraintViolated,
    StepFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ReachedTmax => "reached_tmax",
            Termination::Escaped => "escaped",
            Termination::ConstraintViolated => "constraint_violated",
            Termination::StepFailure => "step_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    MomentumSignChange { to_positive: bool },
    PositionCrossing { level: f64, upward: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

/// One output point with its derived diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: MomentState,
    pub hamiltonian: f64,
    /// `V_eff(q(t), t)`.
    pub effective_potential: f64,
    pub residual: Option<f64>,
    pub event: Option<EventKind>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub model: ModelConfig,
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub termination: Termination,
    /// First step end at which the uncertainty residual fell below the floor.
    pub first_violation: Option<f64>,
    pub failure: Option<String>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn initial(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn t_end(&self) -> f64 {
        self.last().state.t
    }

    /// Largest `|H_Q(t) - H_Q(0)| / |H_Q(0)|` over the samples.
    pub fn energy_drift(&self) -> f64 {
        let h0 = self.initial().hamiltonian;
        let scale = if h0 == 0.0 { 1.0 } else { h0.abs() };
        self.samples
            .iter()
            .map(|s| (s.hamiltonian - h0).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Most negative uncertainty residual seen, if any state is quantum.
    pub fn min_residual(&self) -> Option<f64> {
        self.samples.iter().filter_map(|s| s.residual).reduce(f64::min)
    }

    pub fn constraint_violated(&self) -> bool {
        self.termination == Termination::ConstraintViolated
    }

    /// True if `G20` or `G02` went negative at any sample.
    pub fn negative_dispersion(&self) -> bool {
        self.samples.iter().any(|s| s.state.has_negative_dispersion())
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.state.t)
    }

    /// State at time `t` by locating the sample with that exact time stamp.
    pub fn sample_at(&self, t: f64) -> Option<&Sample> {
        self.samples.iter().find(|s| s.state.t == t)
    }
}

/// Integrates from `init` with the output grid of `icfg`.
pub fn integrate(init: &MomentState, model: &ModelConfig, icfg: &IntegratorConfig) -> Result<Trajectory> {
    integrate_with_times(init, model, icfg, &[])
}

/// Like [`integrate`], additionally sampling at each of `extra_times`.
pub fn integrate_with_times(
    init: &MomentState,
    model: &ModelConfig,
    icfg: &IntegratorConfig,
    extra_times: &[f64],
) -> Result<Trajectory> {
    icfg.validate()?;
    if init.order() != model.order() {
        return Err(Error::OrderMismatch {
            state: init.order().as_u32(),
            model: model.order().as_u32(),
        });
    }
    if !init.is_finite() {
        return Err(Error::InvalidParameter {
            field: "initial state",
            reason: "contains non-finite values".into(),
        });
    }
    Driver::new(init, model, icfg, extra_times).run()
}

struct Driver<'a> {
    model: &'a ModelConfig,
    icfg: &'a IntegratorConfig,
    order: Order,
    t0: f64,
    t_end: f64,
    output_times: Vec<f64>,
    next_output: usize,
    samples: Vec<Sample>,
    events: Vec<Event>,
    init: MomentState,
}

// Bisection on the dense interpolant; 60 halvings reach below 1e-15 of a step.
fn locate_root(dense: &DenseStep, g: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (dense.t_start, dense.t_end());
    let g_lo = g(lo);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > 0.0) == (g_lo > 0.0) && g(mid) != 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

impl<'a> Driver<'a> {
    fn new(init: &MomentState, model: &'a ModelConfig, icfg: &'a IntegratorConfig, extra_times: &[f64]) -> Self {
        let t0 = init.t;
        let t_end = t0 + icfg.t_max;
        let mut output_times = Vec::new();
        let count = (icfg.t_max / icfg.sample_dt + 1e-9).floor() as usize;
        for k in 1..=count {
            let t = t0 + k as f64 * icfg.sample_dt;
            output_times.push(if (t - t_end).abs() <= 1e-9 * icfg.sample_dt {
                t_end
            } else {
                t.min(t_end)
            });
        }
        if output_times.last().is_none_or(|&t| t < t_end) {
            output_times.push(t_end);
        }
        output_times.extend(extra_times.iter().copied().filter(|&t| t > t0 && t <= t_end));
        output_times.sort_by(f64::total_cmp);
        output_times.dedup();
        Self {
            model,
            icfg,
            order: init.order(),
            t0,
            t_end,
            output_times,
            next_output: 0,
            samples: Vec::new(),
            events: Vec::new(),
            init: *init,
        }
    }

    fn sample(&self, state: MomentState, event: Option<EventKind>) -> Sample {
        Sample {
            hamiltonian: self.model.effective_hamiltonian(&state),
            effective_potential: self.model.effective_potential(state.q, &state),
            residual: uncertainty_residual(&state, self.model.hbar()),
            state,
            event,
        }
    }

    fn push(&mut self, sample: Sample) {
        if let Some(last) = self.samples.last_mut() {
            if sample.state.t <= last.state.t {
                // coincident with an existing point: keep the event tag
                if sample.event.is_some() && last.event.is_none() {
                    last.event = sample.event;
                }
                return;
            }
        }
        self.samples.push(sample);
    }

    fn state_at(&self, dense: &DenseStep, t: f64) -> MomentState {
        let mut y = vec![0.0; self.order.dim()];
        dense.eval(t, &mut y);
        MomentState::from_slice(t, self.order, &y)
    }

    fn run(mut self) -> Result<Trajectory> {
        let first = self.sample(self.init, None);
        self.samples.push(first);
        let model = *self.model;
        let mut stepper = Dopri5::new(
            move |y: &[f64], dy: &mut [f64]| model.rhs_packed(y, dy),
            self.t0,
            self.init.to_vec(),
            self.icfg.rtol,
            self.icfg.atol,
            self.icfg.max_step,
            self.icfg.max_steps,
        );
        let mut prev = self.init.to_vec();
        let mut termination = Termination::ReachedTmax;
        let mut failure = None;
        let mut first_violation = None;
        while stepper.t() < self.t_end {
            let dense = match stepper.step(self.t_end) {
                Ok(d) => d.clone(),
                Err(e) => {
                    termination = Termination::StepFailure;
                    failure = Some(format!("{e:?}"));
                    break;
                }
            };
            let y_new = stepper.y().to_vec();
            let t_new = stepper.t();
            if y_new.iter().any(|v| !v.is_finite()) {
                termination = Termination::StepFailure;
                failure = Some(format!("non-finite state at t = {t_new}"));
                break;
            }

            let mut points: Vec<(f64, Option<EventKind>)> = Vec::new();
            while self.next_output < self.output_times.len() && self.output_times[self.next_output] <= t_new {
                points.push((self.output_times[self.next_output], None));
                self.next_output += 1;
            }
            self.collect_events(&dense, &prev, &y_new, &mut points);

            let mut stop_at = None;
            let (q_old, q_new, p_new) = (prev[0], y_new[0], y_new[1]);
            let radius = self.icfg.escape_radius;
            if q_new.abs() > radius && q_new * p_new > 0.0 {
                let t_escape = if q_old.abs() <= radius {
                    locate_root(&dense, |t| dense.eval_component(t, 0).abs() - radius)
                } else {
                    t_new
                };
                stop_at = Some((t_escape, Termination::Escaped));
            } else {
                let state = MomentState::from_slice(t_new, self.order, &y_new);
                let res = uncertainty_residual(&state, model.hbar());
                if res.is_some_and(|r| r < self.icfg.constraint_floor()) {
                    first_violation.get_or_insert(t_new);
                    if self.icfg.stop_on_violation {
                        stop_at = Some((t_new, Termination::ConstraintViolated));
                    }
                }
            }

            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let cutoff = stop_at.map_or(t_new, |(t, _)| t);
            for (t, kind) in points {
                if t > cutoff {
                    continue;
                }
                let state = if t == t_new {
                    MomentState::from_slice(t, self.order, &y_new)
                } else {
                    self.state_at(&dense, t)
                };
                if let Some(kind) = kind {
                    self.events.push(Event { t, kind });
                }
                let s = self.sample(state, kind);
                self.push(s);
            }
            if let Some((t, reason)) = stop_at {
                let state = if t == t_new {
                    MomentState::from_slice(t, self.order, &y_new)
                } else {
                    self.state_at(&dense, t)
                };
                let s = self.sample(state, None);
                self.push(s);
                termination = reason;
                break;
            }
            prev = y_new;
        }
        Ok(Trajectory {
            model,
            samples: self.samples,
            events: self.events,
            termination,
            first_violation,
            failure,
            stats: stepper.stats,
        })
    }

    fn collect_events(
        &self,
        dense: &DenseStep,
        y_old: &[f64],
        y_new: &[f64],
        points: &mut Vec<(f64, Option<EventKind>)>,
    ) {
        let (p_old, p_new) = (y_old[1], y_new[1]);
        if p_old != 0.0 && (p_new == 0.0 || (p_old > 0.0) != (p_new > 0.0)) {
            let t = if p_new == 0.0 {
                dense.t_end()
            } else {
                locate_root(dense, |t| dense.eval_component(t, 1))
            };
            points.push((
                t,
                Some(EventKind::MomentumSignChange {
                    to_positive: p_old < 0.0,
                }),
            ));
        }
        let (q_old, q_new) = (y_old[0], y_new[0]);
        for &level in &self.icfg.crossing_levels {
            let (a, b) = (q_old - level, q_new - level);
            if a != 0.0 && (b == 0.0 || (a > 0.0) != (b > 0.0)) {
                let t = if b == 0.0 {
                    dense.t_end()
                } else {
                    locate_root(dense, |t| dense.eval_component(t, 0) - level)
                };
                points.push((t, Some(EventKind::PositionCrossing { level, upward: a < 0.0 })));
            }
        }
    }
}
