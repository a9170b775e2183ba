//! TOML run configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::classify::default_margin;
use crate::dynamics::{ModelConfig, Order};
use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::packet::{GaussianPacket, ThirdMomentConvention};
use crate::potential::BarrierPotential;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    pub packet: PacketSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub classify: ClassifySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub mass: f64,
    pub hbar: f64,
    pub alpha: f64,
    /// Barrier width `a`.
    pub width: f64,
    /// Exponent `n` in `q^(2n)`.
    pub exponent: u32,
    pub order: Order,
    /// Include `V''' G30 / 6` in the order-3 effective potential.
    pub veff_cubic_term: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            mass: 1.0,
            hbar: 1.0,
            alpha: 1.0,
            width: 1.0,
            exponent: 4,
            order: Order::Second,
            veff_cubic_term: true,
        }
    }
}

/// Exactly one of `p0` and `energy` must be given. With `energy`, `p0` is
/// chosen so that `p0^2 / 2m + V(q0) = energy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    pub q0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(default = "default_sigma0")]
    pub sigma0: f64,
    #[serde(default)]
    pub third_moment_convention: ThirdMomentConvention,
}

fn default_sigma0() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub rtol: f64,
    pub atol: f64,
    pub t_max: f64,
    pub max_step: f64,
    /// Defaults to `10 a`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_radius: Option<f64>,
    pub sample_dt: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self {
            rtol: d.rtol,
            atol: d.atol,
            t_max: d.t_max,
            max_step: d.max_step,
            escape_radius: None,
            sample_dt: d.sample_dt,
            max_steps: d.max_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifySection {
    /// Defaults to `0.05 a`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Q0,
    P0,
    Sigma0,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Q0 => "q0",
            SweepParameter::P0 => "p0",
            SweepParameter::Sigma0 => "sigma0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepSection {
    /// Evenly spaced values from `start` to `stop` inclusive.
    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    pub q_min: f64,
    pub q_max: f64,
    pub q_count: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
}

impl SurfaceSection {
    pub fn q_grid(&self) -> Vec<f64> {
        linspace(self.q_min, self.q_max, self.q_count)
    }

    pub fn t_grid(&self) -> Vec<f64> {
        linspace(self.t_min, self.t_max, self.t_count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every field through its owning type.
    pub fn validate(&self) -> Result<()> {
        let model = self.model_config()?;
        self.integrator_config(model.potential())?;
        self.packet(self.packet.q0, None, None)?;
        self.margin()?;
        if let Some(sweep) = &self.sweep {
            if sweep.count == 0 {
                return Err(invalid("sweep.count", "must be at least 1"));
            }
            if !sweep.start.is_finite() || !sweep.stop.is_finite() {
                return Err(invalid("sweep.start", "sweep bounds must be finite"));
            }
            if sweep.parameter == SweepParameter::P0 && self.packet.p0.is_none() {
                return Err(invalid(
                    "sweep.parameter",
                    "sweeping p0 requires packet.p0 instead of packet.energy",
                ));
            }
        }
        if let Some(s) = &self.surface {
            if s.q_count == 0 {
                return Err(invalid("surface.q_count", "must be at least 1"));
            }
            if s.t_count == 0 {
                return Err(invalid("surface.t_count", "must be at least 1"));
            }
            if s.q_min.is_nan() || s.q_max.is_nan() || s.q_min > s.q_max {
                return Err(invalid("surface.q_min", "must not exceed surface.q_max"));
            }
            if !(s.t_min >= 0.0 && s.t_min <= s.t_max) {
                return Err(invalid("surface.t_min", "need 0 <= t_min <= t_max"));
            }
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<BarrierPotential> {
        BarrierPotential::new(self.model.alpha, self.model.width, self.model.exponent)
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        Ok(
            ModelConfig::new(self.model.mass, self.model.hbar, self.potential()?, self.model.order)?
                .with_veff_cubic_term(self.model.veff_cubic_term),
        )
    }

    pub fn integrator_config(&self, pot: &BarrierPotential) -> Result<IntegratorConfig> {
        let s = &self.integrator;
        let mut icfg = IntegratorConfig {
            rtol: s.rtol,
            atol: s.atol,
            t_max: s.t_max,
            max_step: s.max_step,
            escape_radius: s.escape_radius.unwrap_or(10.0 * pot.width()),
            sample_dt: s.sample_dt,
            max_steps: s.max_steps,
            ..Default::default()
        };
        if let Some(energy) = self.packet.energy {
            if energy > 0.0 && pot.gamma(energy)?.is_forbidden() {
                let (l, r) = pot.turning_points(energy)?;
                icfg.crossing_levels = vec![l, r];
            }
        }
        icfg.validate()?;
        Ok(icfg)
    }

    pub fn margin(&self) -> Result<f64> {
        let pot = self.potential()?;
        let m = self.classify.margin.unwrap_or_else(|| default_margin(&pot));
        if !m.is_finite() || m < 0.0 {
            return Err(Error::InvalidMargin(m));
        }
        Ok(m)
    }

    /// Packet with optional overrides of `q0` and, for sweeps, `p0` or `sigma0`.
    pub fn packet(&self, q0: f64, p0: Option<f64>, sigma0: Option<f64>) -> Result<GaussianPacket> {
        let pk = &self.packet;
        let sigma0 = sigma0.unwrap_or(pk.sigma0);
        let p0 = match (p0.or(pk.p0), pk.energy) {
            (Some(_), Some(_)) if p0.is_none() => {
                return Err(invalid("packet.p0", "give either packet.p0 or packet.energy, not both"))
            }
            (Some(p), _) => p,
            (None, Some(e)) => {
                let pot = self.potential()?;
                let kinetic = e - pot.evaluate(q0);
                if kinetic.is_nan() || kinetic < 0.0 {
                    return Err(invalid(
                        "packet.energy",
                        format!("energy {e} is below V(q0) = {}", pot.evaluate(q0)),
                    ));
                }
                (2.0 * self.model.mass * kinetic).sqrt()
            }
            (None, None) => return Err(invalid("packet.p0", "one of packet.p0 or packet.energy is required")),
        };
        GaussianPacket::new(q0, p0, sigma0, self.model.hbar)
    }

    /// Incident energy used for the turning points: the configured energy,
    /// or the classical energy of the packet centre.
    pub fn incident_energy(&self, packet: &GaussianPacket) -> Result<f64> {
        match self.packet.energy {
            Some(e) => Ok(e),
            None => {
                let pot = self.potential()?;
                Ok(packet.p0() * packet.p0() / (2.0 * self.model.mass) + pot.evaluate(packet.q0()))
            }
        }
    }

    pub fn convention(&self) -> ThirdMomentConvention {
        self.packet.third_moment_convention
    }
}
