//! Run configuration: height parameters, caps, seeds.
//!
//! One struct feeds every module; the CLI loads it from JSON and applies
//! flag overrides, and every report embeds the resolved copy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct Config {
    /// δ exponent for the modified local heights, in (0, 0.01].
    pub delta: f64,
    /// η quasi-null scale, in (0, 1].
    pub eta: f64,
    /// Diophantine exponent M > 1.
    pub m_type: f64,
    /// Absolute constant D > 1 in the ε thresholds; exposed as a knob.
    pub d_const: f64,
    /// Seed for every stochastic component.
    pub seed: u64,
    /// Cap on the lattice-enumeration coefficient box (product of side lengths).
    #[serde(rename = "enum.max_box")]
    pub enum_max_box: u64,
    /// Radius for the secondary cross-product condition in Siegel transforms.
    pub cross_radius: f64,
    /// Enumeration radius used to collect quadrature singularity hints.
    pub hint_radius: f64,
    /// Default quadrature tolerance.
    pub quad_tol: f64,
    /// Node budget per quadrature call.
    pub quad_max_nodes: usize,
    /// Census search radius for isotropic lines / degenerate planes.
    pub census_radius: i64,
    /// Number of K nodes for compact-group averages.
    pub k_nodes: usize,
    /// Monte Carlo sample count for volume estimates.
    pub mc_samples: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            delta: 0.01,
            eta: 0.5,
            m_type: 2.0,
            d_const: 1024.0,
            seed: 1,
            enum_max_box: 1 << 32,
            cross_radius: 20.0,
            hint_radius: 5.0,
            quad_tol: 1e-6,
            quad_max_nodes: 200_000,
            census_radius: 100,
            k_nodes: 1024,
            mc_samples: 40_000_000,
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
