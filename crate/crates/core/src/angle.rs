use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// A point of the unit circle, stored as its angle in `[0, 2pi)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitAngle(f64);

impl UnitAngle {
    pub const ONE: UnitAngle = UnitAngle(0.0);
    pub const MINUS_ONE: UnitAngle = UnitAngle(PI);

    pub fn new(theta: f64) -> Self {
        let mut a = theta - TAU * Float::floor(theta / TAU);
        if !(a < TAU) || a < 0.0 {
            a = 0.0;
        }
        UnitAngle(a)
    }

    /// `exp(2 pi i k / m)`.
    pub fn root_of_unity(k: usize, m: usize) -> Self {
        if 2 * k == m {
            return Self::MINUS_ONE;
        }
        Self::new(TAU * (k % m) as f64 / m as f64)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn conj(self) -> Self {
        Self::new(-self.0)
    }

    pub fn rotate(self, delta: f64) -> Self {
        Self::new(self.0 + delta)
    }

    pub fn is_one(self) -> bool {
        self.0 == 0.0
    }

    pub fn is_minus_one(self) -> bool {
        self.0 == PI
    }

    pub fn is_real(self) -> bool {
        self.is_one() || self.is_minus_one()
    }

    /// Distance along the circle.
    pub fn distance(self, other: Self) -> f64 {
        let d = Float::abs(self.0 - other.0);
        d.min(TAU - d)
    }

    pub fn to_complex(self) -> Complex64 {
        if self.is_one() {
            Complex64::new(1.0, 0.0)
        } else if self.is_minus_one() {
            Complex64::new(-1.0, 0.0)
        } else {
            Complex64::new(Float::cos(self.0), Float::sin(self.0))
        }
    }

    /// Snaps to 1 or -1 when within `tol` of them.
    pub fn snapped(self, tol: f64) -> Self {
        if self.distance(Self::ONE) <= tol {
            Self::ONE
        } else if self.distance(Self::MINUS_ONE) <= tol {
            Self::MINUS_ONE
        } else {
            self
        }
    }
}
