//! The eccentricity parameter `delta = 1/m`.
//!
//! Keeping the denominator `m` as an integer makes every lattice quantity
//! (cell corners, radii, plane offsets) an exact ratio of integers; floating
//! point enters only when a coordinate is actually materialized.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `delta = 1/m` with `m >= 2`, so that `0 < delta < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Delta {
    m: u32,
}

impl Delta {
    pub fn new(m: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::BadDelta(format!("1/{m}")));
        }
        Ok(Delta { m })
    }

    /// Parse `"1/m"`.
    pub fn parse(s: &str) -> Result<Self> {
        let body = s.trim();
        let rest = body
            .strip_prefix("1/")
            .ok_or_else(|| Error::BadDelta(body.to_string()))?;
        let m: u32 = rest
            .parse()
            .map_err(|_| Error::BadDelta(body.to_string()))?;
        Delta::new(m)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn value<S: Scalar>(&self) -> S {
        S::one() / S::of_usize(self.m as usize)
    }

    /// Quadrature spacing `delta / divisor`.
    pub fn h<S: Scalar>(&self, divisor: u32) -> S {
        S::one() / S::of_usize(self.m as usize * divisor as usize)
    }

    /// Number of radii in `[1,2] ∩ delta Z`, i.e. `1/delta + 1`.
    pub fn radius_count(&self) -> u32 {
        self.m + 1
    }

    /// The radius with index `idx`, `0..=m`: `(m + idx)/m`.
    pub fn radius_value<S: Scalar>(&self, idx: u32) -> S {
        debug_assert!(idx <= self.m);
        S::of_usize((self.m + idx) as usize) / S::of_usize(self.m as usize)
    }

    /// `[1, 2] ∩ delta Z`, ascending.
    pub fn radii<S: Scalar>(&self) -> Vec<S> {
        (0..=self.m).map(|i| self.radius_value(i)).collect()
    }

    /// Map a radius value back to its grid index, within a small tolerance.
    pub fn snap_radius<S: Scalar>(&self, r: S) -> Result<u32> {
        let t = (r * S::of_usize(self.m as usize) - S::of_usize(self.m as usize)).to64();
        let idx = t.round();
        if (t - idx).abs() > 1e-6 || idx < 0.0 || idx > self.m as f64 {
            return Err(Error::InvalidParam(format!(
                "radius {r} is not on the [1,2] ∩ {self} Z grid"
            )));
        }
        Ok(idx as u32)
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1/{}", self.m)
    }
}
