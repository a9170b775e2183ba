//! Equations of motion for the truncated moment system, the effective
//! Hamiltonian, and the effective potential.
//!
//! State vectors are packed as `[q, p, G20, G11, G02, G30, G21, G12, G03]`
//! truncated to the order's dimension (2, 5 or 9 entries).

mod table;

pub use table::{eom_table, hamiltonian, Coupling, EomExpr, EomTable, EomTerm, Variable};

use serde::{Deserialize, Serialize};

use crate::algebra::MomentIndex;
use crate::error::{check_positive, Error, Result};
use crate::potential::BarrierPotential;

/// Truncation order of the moment hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Order {
    Classical,
    Second,
    Third,
}

impl Order {
    pub fn as_u32(self) -> u32 {
        match self {
            Order::Classical => 0,
            Order::Second => 2,
            Order::Third => 3,
        }
    }

    /// Length of the packed state vector.
    pub fn dim(self) -> usize {
        2 + self.moments().len()
    }

    /// Moments carried at this order, in packing order.
    pub fn moments(self) -> &'static [MomentIndex] {
        let n = match self {
            Order::Classical => 0,
            Order::Second => 3,
            Order::Third => 7,
        };
        &MOMENT_SLOTS[..n]
    }
}

impl TryFrom<u32> for Order {
    type Error = Error;
    fn try_from(value: u32) -> Result<Self> {
        match value {
            0 => Ok(Order::Classical),
            2 => Ok(Order::Second),
            3 => Ok(Order::Third),
            other => Err(Error::InvalidOrder(other)),
        }
    }
}

impl From<Order> for u32 {
    fn from(order: Order) -> u32 {
        order.as_u32()
    }
}

/// Packing order of the moments inside [`MomentState`].
pub const MOMENT_SLOTS: [MomentIndex; 7] = [
    MomentIndex::new(2, 0),
    MomentIndex::new(1, 1),
    MomentIndex::new(0, 2),
    MomentIndex::new(3, 0),
    MomentIndex::new(2, 1),
    MomentIndex::new(1, 2),
    MomentIndex::new(0, 3),
];

const G20: usize = 0;
const G11: usize = 1;
const G02: usize = 2;
const G30: usize = 3;
const G21: usize = 4;
const G12: usize = 5;
const G03: usize = 6;

/// Expectation values and central moments at one instant.
///
/// Moments beyond the state's order are kept at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState {
    pub t: f64,
    pub q: f64,
    pub p: f64,
    order: Order,
    moments: [f64; 7],
}

impl MomentState {
    pub fn classical(t: f64, q: f64, p: f64) -> Self {
        Self {
            t,
            q,
            p,
            order: Order::Classical,
            moments: [0.0; 7],
        }
    }

    /// Builds a state of the given order with all moments zero.
    pub fn with_order(t: f64, q: f64, p: f64, order: Order) -> Self {
        Self {
            order,
            ..Self::classical(t, q, p)
        }
    }

    pub fn order(&self) -> Order {
        self.order
    }

    /// Value of `G^{a,b}`; zero for moments not carried at this order.
    pub fn moment(&self, index: MomentIndex) -> f64 {
        self.order
            .moments()
            .iter()
            .position(|m| *m == index)
            .map_or(0.0, |slot| self.moments[slot])
    }

    /// Sets `G^{a,b}`. Returns an error if the moment is not carried at this order.
    pub fn set_moment(&mut self, index: MomentIndex, value: f64) -> Result<()> {
        let slot = self
            .order
            .moments()
            .iter()
            .position(|m| *m == index)
            .ok_or(Error::InvalidOrder(index.order()))?;
        self.moments[slot] = value;
        Ok(())
    }

    pub fn g20(&self) -> f64 {
        self.moments[G20]
    }
    pub fn g11(&self) -> f64 {
        self.moments[G11]
    }
    pub fn g02(&self) -> f64 {
        self.moments[G02]
    }
    pub fn g30(&self) -> f64 {
        self.moments[G30]
    }
    pub fn g21(&self) -> f64 {
        self.moments[G21]
    }
    pub fn g12(&self) -> f64 {
        self.moments[G12]
    }
    pub fn g03(&self) -> f64 {
        self.moments[G03]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.order.dim());
        y.push(self.q);
        y.push(self.p);
        y.extend_from_slice(&self.moments[..self.order.moments().len()]);
        y
    }

    pub fn from_slice(t: f64, order: Order, y: &[f64]) -> Self {
        assert_eq!(y.len(), order.dim(), "state vector length does not match order");
        let mut moments = [0.0; 7];
        moments[..y.len() - 2].copy_from_slice(&y[2..]);
        Self {
            t,
            q: y[0],
            p: y[1],
            order,
            moments,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite() && self.moments.iter().all(|g| g.is_finite())
    }

    /// True when the second-order dispersions have drifted negative.
    pub fn has_negative_dispersion(&self) -> bool {
        self.order != Order::Classical && (self.g20() < 0.0 || self.g02() < 0.0)
    }
}

/// Time derivative of a [`MomentState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRate {
    pub q: f64,
    pub p: f64,
    moments: [f64; 7],
}

impl StateRate {
    pub fn moment(&self, index: MomentIndex) -> f64 {
        MOMENT_SLOTS
            .iter()
            .position(|m| *m == index)
            .map_or(0.0, |slot| self.moments[slot])
    }
}

/// Physical parameters of one simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    mass: f64,
    hbar: f64,
    potential: BarrierPotential,
    order: Order,
    /// Include `V''' G30 / 6` in the order-3 effective potential.
    veff_cubic_term: bool,
}

impl ModelConfig {
    pub fn new(mass: f64, hbar: f64, potential: BarrierPotential, order: Order) -> Result<Self> {
        check_positive("mass", mass)?;
        check_positive("hbar", hbar)?;
        Ok(Self {
            mass,
            hbar,
            potential,
            order,
            veff_cubic_term: true,
        })
    }

    pub fn with_veff_cubic_term(mut self, include: bool) -> Self {
        self.veff_cubic_term = include;
        self
    }

    pub fn with_order(mut self, order: Order) -> Self {
        self.order = order;
        self
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn potential(&self) -> &BarrierPotential {
        &self.potential
    }
    pub fn order(&self) -> Order {
        self.order
    }
    pub fn veff_cubic_term(&self) -> bool {
        self.veff_cubic_term
    }

    /// Right-hand side on packed vectors; `y` and `dy` must have `order.dim()` entries.
    pub fn rhs_packed(&self, y: &[f64], dy: &mut [f64]) {
        let m = self.mass;
        let (q, p) = (y[0], y[1]);
        match self.order {
            Order::Classical => {
                let [_, v1] = self.potential.derivatives::<2>(q);
                dy[0] = p / m;
                dy[1] = -v1;
            }
            Order::Second => {
                let [_, v1, v2, v3] = self.potential.derivatives::<4>(q);
                let (g20, g11, g02) = (y[2], y[3], y[4]);
                dy[0] = p / m;
                dy[1] = -v1 - 0.5 * v3 * g20;
                dy[2] = -2.0 / m * g11;
                dy[3] = -g02 / m + v2 * g20;
                dy[4] = 2.0 * v2 * g11;
            }
            Order::Third => {
                let [_, v1, v2, v3, v4] = self.potential.derivatives::<5>(q);
                let (g20, g11, g02) = (y[2], y[3], y[4]);
                let (g30, g21, g12, g03) = (y[5], y[6], y[7], y[8]);
                dy[0] = p / m;
                dy[1] = -v1 - 0.5 * v3 * g20 - v4 * g30 / 6.0;
                dy[2] = -2.0 / m * g11;
                dy[3] = -g02 / m + v2 * g20 + 0.5 * v3 * g30;
                dy[4] = 2.0 * v2 * g11 + v3 * g21;
                dy[5] = -3.0 / m * g21;
                dy[6] = -2.0 / m * g12 + v2 * g30;
                dy[7] = -g03 / m + 2.0 * v2 * g21;
                dy[8] = 3.0 * v2 * g12;
            }
        }
    }

    pub fn rhs(&self, state: &MomentState) -> Result<StateRate> {
        self.check_order(state)?;
        let y = state.to_vec();
        let mut dy = vec![0.0; y.len()];
        self.rhs_packed(&y, &mut dy);
        let mut moments = [0.0; 7];
        moments[..dy.len() - 2].copy_from_slice(&dy[2..]);
        Ok(StateRate {
            q: dy[0],
            p: dy[1],
            moments,
        })
    }

    /// Effective Hamiltonian `H_Q` of the state, evaluated at the model's order.
    pub fn effective_hamiltonian(&self, state: &MomentState) -> f64 {
        // H_Q always carries the cubic term, whatever the V_eff convention.
        state.p * state.p / (2.0 * self.mass) + self.potential_terms(state.q, state, true)
    }

    /// `V_eff(q)` with the moments frozen at `state`.
    pub fn effective_potential(&self, q: f64, state: &MomentState) -> f64 {
        self.potential_terms(q, state, self.veff_cubic_term)
    }

    fn potential_terms(&self, q: f64, state: &MomentState, cubic: bool) -> f64 {
        match self.order {
            Order::Classical => self.potential.evaluate(q),
            Order::Second | Order::Third => {
                let [v0, _, v2] = self.potential.derivatives::<3>(q);
                let mut value = v0 + 0.5 * v2 * state.g20() + state.g02() / (2.0 * self.mass);
                if self.order == Order::Third && cubic {
                    value += self.cubic_term(q, state);
                }
                value
            }
        }
    }

    fn cubic_term(&self, q: f64, state: &MomentState) -> f64 {
        let [_, _, _, v3] = self.potential.derivatives::<4>(q);
        v3 * state.g30() / 6.0
    }

    fn check_order(&self, state: &MomentState) -> Result<()> {
        if state.order() != self.order {
            return Err(Error::OrderMismatch {
                state: state.order().as_u32(),
                model: self.order.as_u32(),
            });
        }
        Ok(())
    }
}
