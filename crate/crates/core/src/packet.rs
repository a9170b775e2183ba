//! Initial moments of a minimum-uncertainty Gaussian wavepacket.

use std::ops::{Add, Div, Mul};

use serde::{Deserialize, Serialize};

use crate::dynamics::{MomentState, Order};
use crate::error::{check_finite, check_positive, Error, Result};

/// Convention for the initial third momentum moment `G03`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThirdMomentConvention {
    /// `G03 = -hbar^2 p0 / sigma0^2`.
    #[default]
    #[serde(rename = "paper")]
    Skewed,
    /// All third moments start at zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    q0: f64,
    p0: f64,
    sigma0: f64,
    hbar: f64,
}

/// `(G20, G11, G02)` of a Gaussian of width `sigma0`. Generic so the
/// saturation identity can be checked in exact arithmetic.
pub fn gaussian_second_moments<T>(sigma0: T, hbar: T) -> (T, T, T)
where
    T: Clone + Add<Output = T> + Mul<Output = T> + Div<Output = T> + num_traits::Zero,
{
    let two_sigma = sigma0.clone() + sigma0.clone();
    let g20 = sigma0.clone() * sigma0;
    let g02 = (hbar.clone() * hbar) / (two_sigma.clone() * two_sigma);
    (g20, T::zero(), g02)
}

impl GaussianPacket {
    pub fn new(q0: f64, p0: f64, sigma0: f64, hbar: f64) -> Result<Self> {
        check_finite("q0", q0)?;
        check_finite("p0", p0)?;
        check_positive("sigma0", sigma0)?;
        check_positive("hbar", hbar)?;
        Ok(Self { q0, p0, sigma0, hbar })
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }
    pub fn p0(&self) -> f64 {
        self.p0
    }
    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Moment state at `t = 0` for truncation order 2 or 3.
    pub fn initial_moments(&self, order: Order, convention: ThirdMomentConvention) -> Result<MomentState> {
        if order == Order::Classical {
            return Err(Error::InvalidOrder(0));
        }
        let (g20, g11, g02) = gaussian_second_moments(self.sigma0, self.hbar);
        let mut y = vec![self.q0, self.p0, g20, g11, g02];
        if order == Order::Third {
            let g03 = match convention {
                ThirdMomentConvention::Skewed => -self.hbar * self.hbar * self.p0 / (self.sigma0 * self.sigma0),
                ThirdMomentConvention::Zero => 0.0,
            };
            y.extend_from_slice(&[0.0, 0.0, 0.0, g03]);
        }
        Ok(MomentState::from_slice(0.0, order, &y))
    }

    /// Point-particle start for order 0.
    pub fn classical_state(&self) -> MomentState {
        MomentState::classical(0.0, self.q0, self.p0)
    }

    /// Start state for any order; order 0 ignores the width.
    pub fn initial_state(&self, order: Order, convention: ThirdMomentConvention) -> Result<MomentState> {
        match order {
            Order::Classical => Ok(self.classical_state()),
            _ => self.initial_moments(order, convention),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    #[test]
    fn second_order_example() {
        let s = GaussianPacket::new(-2.0, 1.0, 1.0, 1.0)
            .unwrap()
            .initial_moments(Order::Second, ThirdMomentConvention::Skewed)
            .unwrap();
        assert_eq!((s.g20(), s.g11(), s.g02()), (1.0, 0.0, 0.25));
        assert_eq!((s.q, s.p, s.t), (-2.0, 1.0, 0.0));
    }

    #[test]
    fn third_order_example() {
        let s = GaussianPacket::new(0.0, 1.0, 1.0, 1.0)
            .unwrap()
            .initial_moments(Order::Third, ThirdMomentConvention::Skewed)
            .unwrap();
        assert_eq!((s.g30(), s.g21(), s.g12(), s.g03()), (0.0, 0.0, 0.0, -1.0));
        let z = GaussianPacket::new(0.0, 1.0, 1.0, 1.0)
            .unwrap()
            .initial_moments(Order::Third, ThirdMomentConvention::Zero)
            .unwrap();
        assert_eq!(z.g03(), 0.0);
    }

    #[test]
    fn classical_order_is_rejected() {
        let p = GaussianPacket::new(0.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(
            p.initial_moments(Order::Classical, ThirdMomentConvention::Skewed),
            Err(Error::InvalidOrder(0))
        );
    }

    #[test]
    fn validation_names_the_field() {
        match GaussianPacket::new(0.0, 1.0, 0.0, 1.0) {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "sigma0"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(GaussianPacket::new(0.0, 1.0, 1.0, -1.0).is_err());
        assert!(GaussianPacket::new(f64::NAN, 1.0, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn saturation_is_exact_in_rationals(sn in 1i128..2000, sd in 1i128..2000, hn in 1i128..2000, hd in 1i128..2000) {
            let sigma = Ratio::new(sn, sd);
            let hbar = Ratio::new(hn, hd);
            let (g20, g11, g02) = gaussian_second_moments(sigma, hbar);
            prop_assert_eq!(g20 * g02 - g11 * g11, hbar * hbar / Ratio::from_integer(4));
        }

        #[test]
        fn doubling_width_rescales_dispersions(sigma in 0.01f64..10.0, hbar in 0.01f64..10.0) {
            let (a20, _, a02) = gaussian_second_moments(sigma, hbar);
            let (b20, _, b02) = gaussian_second_moments(2.0 * sigma, hbar);
            prop_assert_eq!(b20, 4.0 * a20);
            prop_assert_eq!(b02, a02 / 4.0);
            prop_assert!((a20 * a02 - b20 * b02).abs() <= 1e-15 * a20 * a02);
        }

        #[test]
        fn third_order_extends_second(q0 in -5.0f64..5.0, p0 in -3.0f64..3.0, sigma in 0.1f64..2.0) {
            let packet = GaussianPacket::new(q0, p0, sigma, 1.0).unwrap();
            let s2 = packet.initial_moments(Order::Second, ThirdMomentConvention::Skewed).unwrap();
            let s3 = packet.initial_moments(Order::Third, ThirdMomentConvention::Skewed).unwrap();
            prop_assert_eq!(&s2.to_vec()[..], &s3.to_vec()[..5]);
        }
    }
}
