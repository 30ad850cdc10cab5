//! Atomic species registry.
//!
//! The registry ships as a data file (`data/species.json`) bundled with the
//! crate. Landé factors are registry data computed once from the standard
//! Landé formula with a spin-only electronic g-factor (g_J = 2); they are not
//! recomputed at runtime.

use crate::error::Error;
use crate::spin::Spin;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// One entry of the species registry.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpecies {
    /// Identifier, e.g. `87Rb:F=1`.
    pub name: String,
    /// Atomic mass (kg).
    #[serde(rename = "mass_kg")]
    pub mass: f64,
    /// Hyperfine spin F of the level.
    #[serde(rename = "f")]
    pub spin: Spin,
    /// Signed Landé factor g_F of the level.
    pub g_f: f64,
}

impl AtomSpecies {
    fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::Validation(format!(
                "species {}: mass must be positive",
                self.name
            )));
        }
        if self.spin.twice() > 6 {
            return Err(Error::Validation(format!(
                "species {}: F = {} outside the supported range 1/2..3",
                self.name, self.spin
            )));
        }
        if !self.g_f.is_finite() || self.g_f == 0.0 {
            return Err(Error::Validation(format!(
                "species {}: g_F must be finite and non-zero",
                self.name
            )));
        }
        Ok(())
    }
}

static REGISTRY: OnceLock<Vec<AtomSpecies>> = OnceLock::new();

/// The bundled species registry.
pub fn registry() -> &'static [AtomSpecies] {
    REGISTRY
        .get_or_init(|| {
            let raw = include_str!("../data/species.json");
            let list: Vec<AtomSpecies> =
                serde_json::from_str(raw).expect("bundled species registry must parse");
            for sp in &list {
                sp.validate().expect("bundled species registry must validate");
            }
            list
        })
        .as_slice()
}

/// Look a species up by name.
pub fn species(name: &str) -> Result<&'static AtomSpecies> {
    registry()
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| {
            let known: Vec<&str> = registry().iter().map(|s| s.name.as_str()).collect();
            Error::Validation(format!(
                "unknown species `{name}`; registry contains: {}",
                known.join(", ")
            ))
        })
}
