//! Smoothed barrier family `V(q) = alpha / (q^(2n) + a^(2n))`.

use crate::error::{check_positive, Error, Result};
use crate::jet::Jet;

/// Highest derivative order served by [`BarrierPotential::derivative`].
pub const MAX_DERIVATIVE_ORDER: usize = 8;

type PotentialJet = Jet<{ MAX_DERIVATIVE_ORDER + 1 }>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierPotential {
    alpha: f64,
    a: f64,
    n: u32,
}

/// Ratio `V0 / E` of barrier height to particle energy.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EnergyRatio(f64);

impl EnergyRatio {
    pub fn value(self) -> f64 {
        self.0
    }

    /// True when the barrier top exceeds the energy, i.e. a classical
    /// particle cannot cross.
    pub fn is_forbidden(self) -> bool {
        self.0 >= 1.0
    }
}

impl BarrierPotential {
    pub fn new(alpha: f64, a: f64, n: u32) -> Result<Self> {
        check_positive("a", a)?;
        if !alpha.is_finite() || alpha == 0.0 {
            return Err(Error::InvalidParameter {
                field: "alpha",
                reason: format!("must be finite and nonzero, got {alpha}"),
            });
        }
        if n == 0 {
            return Err(Error::InvalidParameter {
                field: "n",
                reason: "must be a positive integer".into(),
            });
        }
        Ok(Self { alpha, a, n })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn width(&self) -> f64 {
        self.a
    }

    pub fn exponent(&self) -> u32 {
        self.n
    }

    /// Barrier height `V0 = V(0)`.
    pub fn height(&self) -> f64 {
        self.alpha / self.a.powi(2 * self.n as i32)
    }

    pub fn evaluate(&self, q: f64) -> f64 {
        let e = 2 * self.n as i32;
        self.alpha / (q.abs().powi(e) + self.a.powi(e))
    }

    fn jet(&self, q: f64) -> PotentialJet {
        let denom = PotentialJet::variable(q).powi(2 * self.n) + PotentialJet::constant(self.a.powi(2 * self.n as i32));
        denom.recip().scale(self.alpha)
    }

    /// Exact k-th derivative of `V` at `q`.
    pub fn derivative(&self, q: f64, k: usize) -> Result<f64> {
        if k > MAX_DERIVATIVE_ORDER {
            return Err(Error::UnsupportedOrder {
                requested: k,
                max: MAX_DERIVATIVE_ORDER,
            });
        }
        if k == 0 {
            return Ok(self.evaluate(q));
        }
        Ok(self.jet(q).derivative(k))
    }

    /// `[V, V', ..., V^(K-1)]` at `q` from a single jet evaluation.
    /// `K` must not exceed `MAX_DERIVATIVE_ORDER + 1`.
    pub fn derivatives<const K: usize>(&self, q: f64) -> [f64; K] {
        assert!(K <= MAX_DERIVATIVE_ORDER + 1, "too many derivatives requested");
        let jet = self.jet(q);
        let mut out = [0.0; K];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = jet.derivative(k);
        }
        out
    }

    pub fn gamma(&self, energy: f64) -> Result<EnergyRatio> {
        if !(energy.is_finite() && energy > 0.0) {
            return Err(Error::InvalidEnergy(energy));
        }
        Ok(EnergyRatio(self.height() / energy))
    }

    /// Classical return points `(-x, x)` where `V(x) = E`.
    pub fn turning_points(&self, energy: f64) -> Result<(f64, f64)> {
        let gamma = self.gamma(energy)?.value();
        if gamma < 1.0 {
            return Err(Error::NoTurningPoint {
                energy,
                height: self.height(),
            });
        }
        let x = self.a * (gamma - 1.0).powf(1.0 / (2.0 * self.n as f64));
        let x = self.polish_root(x, energy);
        Ok((-x, x))
    }

    // One Newton correction on V(x) = E, kept only if it lowers the residual.
    // Near gamma = 1 the slope vanishes and the closed form is already exact.
    fn polish_root(&self, x: f64, energy: f64) -> f64 {
        let residual = self.evaluate(x) - energy;
        let slope = self.jet(x).derivative(1);
        if slope == 0.0 || residual == 0.0 {
            return x;
        }
        let candidate = x - residual / slope;
        if candidate >= 0.0 && (self.evaluate(candidate) - energy).abs() < residual.abs() {
            candidate
        } else {
            x
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(n: u32) -> BarrierPotential {
        BarrierPotential::new(1.0, 1.0, n).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(unit(4).evaluate(0.0), 1.0);
        assert_eq!(unit(4).evaluate(1.0), 0.5);
        assert_relative_eq!(unit(1).evaluate(2.0), 0.2, max_relative = 1e-15);
    }

    #[test]
    fn height_is_alpha_over_a_to_2n() {
        let pot = BarrierPotential::new(3.0, 2.0, 2).unwrap();
        assert_eq!(pot.height(), 3.0 / 16.0);
        assert_eq!(pot.evaluate(0.0), pot.height());
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(unit(4).derivative(0.0, 1).unwrap(), 0.0);
        // frozen from a central-difference sweep on 1/(q^2+1), h in {1e-3, 1e-4}
        assert_relative_eq!(unit(1).derivative(0.0, 2).unwrap(), -2.0, max_relative = 1e-14);
        assert_eq!(unit(4).derivative(0.0, 2).unwrap(), 0.0);
    }

    #[test]
    fn derivative_rejects_unsupported_order() {
        assert_eq!(
            unit(4).derivative(0.3, 9),
            Err(Error::UnsupportedOrder { requested: 9, max: 8 })
        );
        assert!(unit(4).derivative(0.3, 8).is_ok());
    }

    #[test]
    fn derivative_of_lorentzian_matches_closed_form() {
        // V = 1/(q^2+1): V' = -2q/(q^2+1)^2
        let q = 0.37;
        let expected = -2.0 * q / (q * q + 1.0f64).powi(2);
        assert_relative_eq!(unit(1).derivative(q, 1).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn turning_points_examples() {
        let pot = unit(4);
        assert_eq!(pot.turning_points(1.0).unwrap(), (-0.0, 0.0));
        let (l, r) = pot.turning_points(1.0 / 1.46484).unwrap();
        // frozen from bisection of V(x) = E on (0, 2)
        assert!((r - 0.90867).abs() < 1e-4, "{r}");
        assert_eq!(l, -r);
        assert!(matches!(pot.turning_points(2.0), Err(Error::NoTurningPoint { .. })));
        assert_eq!(pot.turning_points(0.0), Err(Error::InvalidEnergy(0.0)));
    }

    #[test]
    fn gamma_examples() {
        let pot = unit(4);
        assert_relative_eq!(
            pot.gamma(0.98).unwrap().value(),
            1.0204081632653061,
            max_relative = 1e-15
        );
        assert_eq!(pot.gamma(1.0).unwrap().value(), 1.0);
        assert_eq!(pot.gamma(0.0), Err(Error::InvalidEnergy(0.0)));
        assert!(pot.gamma(0.5).unwrap().is_forbidden());
    }

    #[test]
    fn constructor_validates() {
        assert!(BarrierPotential::new(1.0, 0.0, 4).is_err());
        assert!(BarrierPotential::new(0.0, 1.0, 4).is_err());
        assert!(BarrierPotential::new(1.0, 1.0, 0).is_err());
        assert!(BarrierPotential::new(-1.0, 1.0, 1).is_ok());
    }

    #[test]
    fn sharpening_with_n_outside_the_core() {
        for q in [1.1, 1.5, 2.0, 3.0] {
            let mut prev = f64::INFINITY;
            for n in 1..=10 {
                let v = unit(n).evaluate(q);
                assert!(v < prev, "n={n}, q={q}");
                prev = v;
            }
        }
    }
}
