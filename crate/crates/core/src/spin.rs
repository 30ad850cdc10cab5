//! Half-integer spin quantum number.

use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A half-integer spin F, stored as 2F to keep arithmetic exact.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub const HALF: Spin = Spin { twice: 1 };
    pub const ONE: Spin = Spin { twice: 2 };

    /// Construct from 2F. Fails for 2F = 0 or absurdly large spins.
    pub fn from_twice(twice: u32) -> Result<Spin> {
        if twice == 0 || twice > 512 {
            return Err(Error::Domain(format!("invalid spin 2F = {twice}")));
        }
        Ok(Spin { twice })
    }

    /// Parse "1/2", "3/2", "1", "2", ... or a decimal like "0.5".
    pub fn parse(s: &str) -> Result<Spin> {
        let s = s.trim();
        let bad = || Error::Validation(format!("cannot parse spin `{s}`"));
        if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            let den: u32 = den.trim().parse().map_err(|_| bad())?;
            if den != 2 {
                return Err(bad());
            }
            return Spin::from_twice(num);
        }
        if let Ok(n) = s.parse::<u32>() {
            return Spin::from_twice(2 * n);
        }
        if let Ok(x) = s.parse::<f64>() {
            let twice = (2.0 * x).round();
            if (2.0 * x - twice).abs() < 1e-9 && twice >= 1.0 {
                return Spin::from_twice(twice as u32);
            }
        }
        Err(bad())
    }

    /// 2F as an integer.
    pub fn twice(self) -> u32 {
        self.twice
    }

    /// F as a float.
    pub fn f(self) -> f64 {
        self.twice as f64 / 2.0
    }

    /// Dimension of the spin space, 2F + 1.
    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    /// m_F for the s-th basis state; s = 0 corresponds to m_F = -F.
    pub fn m_of_index(self, s: usize) -> f64 {
        s as f64 - self.f()
    }

    /// Basis index of a given 2·m_F value, if it is a valid level.
    pub fn index_of_two_m(self, two_m: i32) -> Option<usize> {
        let shifted = two_m + self.twice as i32;
        if shifted < 0 || shifted % 2 != 0 || shifted / 2 > self.twice as i32 {
            return None;
        }
        Some((shifted / 2) as usize)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl TryFrom<String> for Spin {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Spin, String> {
        Spin::parse(&s).map_err(|e| e.to_string())
    }
}

impl From<Spin> for String {
    fn from(s: Spin) -> String {
        s.to_string()
    }
}
