//! Throughput-fairness trade-offs for two-user downlink NOMA over Rayleigh fading.
//!
//! The crate compares superposition coding with SIC (NOMA) against orthogonal
//! access with an adaptive share (OMA-II) or an equal split (OMA-I). It covers
//! two metrics, each under full and partial transmitter channel knowledge:
//!
//! * ergodic sum rate under a minimum per-user ergodic rate ([`ergodic`] and [`partial`]);
//! * sum of delay-limited throughput under a maximum per-user outage ([`dlt`] and [`partial`]).
//!
//! Full-knowledge problems are solved in the Lagrange dual domain. Each fading
//! state gets a closed-form per-state solution, and the multipliers are found
//! with a deep-cut ellipsoid method ([`ellipsoid`]). Partial-knowledge problems
//! use closed-form averages built on the exponential integral ([`special`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dlt;
pub mod ellipsoid;
pub mod ergodic;
pub mod error;
pub mod experiment;
pub mod partial;
pub mod rates;
pub mod special;

mod reduce;

use serde::{Deserialize, Serialize};

pub use channel::{draw_ensemble, FadingEnsemble, FadingState, User, UserProfile};
pub use error::{Error, Result};
pub use rates::{StatePolicy, TargetRates};

/// Multiple-access scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    /// Superposition coding, SIC at the stronger receiver.
    #[serde(rename = "noma")]
    Noma,
    /// Orthogonal access, adaptive per-state share.
    #[serde(rename = "oma2")]
    Oma2,
    /// Orthogonal access, fixed equal split.
    #[serde(rename = "oma1")]
    Oma1,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Noma, Scheme::Oma2, Scheme::Oma1];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Noma => "NOMA",
            Scheme::Oma2 => "OMA-II",
            Scheme::Oma1 => "OMA-I",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "noma" => Ok(Scheme::Noma),
            "oma2" | "omaii" => Ok(Scheme::Oma2),
            "oma1" | "omai" => Ok(Scheme::Oma1),
            _ => Err(Error::Config(format!("unknown scheme '{s}'"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
