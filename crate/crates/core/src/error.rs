use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("derivative order {requested} exceeds the supported maximum {max}")]
    UnsupportedOrder { requested: usize, max: usize },

    #[error("energy must be positive, got {0}")]
    InvalidEnergy(f64),

    #[error("no turning point: energy {energy} is above the barrier height {height}")]
    NoTurningPoint { energy: f64, height: f64 },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("truncation order {0} is not supported here")]
    InvalidOrder(u32),

    #[error("state has order {state} but the model expects order {model}")]
    OrderMismatch { state: u32, model: u32 },

    #[error("K-coefficient index n={n} outside the summation range for ({a},{b},{c},{d})")]
    RangeViolation { n: u32, a: u32, b: u32, c: u32, d: u32 },

    #[error("classification margin must be non-negative, got {0}")]
    InvalidMargin(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            reason: format!("must be a positive finite number, got {value}"),
        })
    }
}

pub(crate) fn check_finite(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            reason: format!("must be finite, got {value}"),
        })
    }
}
