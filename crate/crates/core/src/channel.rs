//! Large-scale propagation, receiver noise and seeded Rayleigh-fading ensembles.
//!
//! A fading state holds the normalized gains `g_k = |h_k|^2 / sigma^2` of the
//! two users. Under Rayleigh fading `|h_k|^2` is exponential with mean
//! `1 / lambda_k`, so `g_k` is exponential with rate `lambda_k * sigma^2`.
//!
//! Ensembles are drawn block by block. Each block of [`BLOCK_LEN`] states owns
//! its own ChaCha stream derived from `(seed, block index)`, which makes the
//! ensemble independent of how blocks are spread over worker threads.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of consecutive states sharing one generator stream.
pub const BLOCK_LEN: usize = 4096;

/// Path loss in dB at a distance given in kilometres.
pub fn pathloss_db(distance_km: f64) -> Result<f64> {
    if !(distance_km > 0.0) || !distance_km.is_finite() {
        return Err(Error::Domain(format!(
            "distance must be positive and finite, got {distance_km} km"
        )));
    }
    Ok(128.1 + 37.6 * distance_km.log10())
}

/// Thermal noise power in watts for a spectral density (dBm/Hz) over a bandwidth.
pub fn noise_power(psd_dbm_per_hz: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return Err(Error::Domain(format!(
            "bandwidth must be positive and finite, got {bandwidth_hz} Hz"
        )));
    }
    if !psd_dbm_per_hz.is_finite() {
        return Err(Error::Domain("noise density must be finite".into()));
    }
    let dbm = psd_dbm_per_hz + 10.0 * bandwidth_hz.log10();
    Ok(10f64.powf((dbm - 30.0) / 10.0))
}

/// Index of a user. Users keep their labels; "strong" and "weak" are roles
/// assigned per fading state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum User {
    One,
    Two,
}

impl User {
    pub fn index(self) -> usize {
        match self {
            User::One => 0,
            User::Two => 1,
        }
    }

    pub fn other(self) -> User {
        match self {
            User::One => User::Two,
            User::Two => User::One,
        }
    }
}

/// Statistical description of one user's link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub distance_km: f64,
    pub pathloss_db: f64,
    /// Inverse mean of the exponential power gain `|h|^2`.
    pub lambda: f64,
    pub noise_power_w: f64,
}

impl UserProfile {
    pub fn from_distance(distance_km: f64, noise_power_w: f64) -> Result<Self> {
        if !(noise_power_w > 0.0) || !noise_power_w.is_finite() {
            return Err(Error::Domain(format!(
                "noise power must be positive, got {noise_power_w} W"
            )));
        }
        let pathloss_db = pathloss_db(distance_km)?;
        Ok(UserProfile {
            distance_km,
            pathloss_db,
            lambda: 10f64.powf(pathloss_db / 10.0),
            noise_power_w,
        })
    }

    /// Profile given directly by its gain rate, for synthetic instances.
    pub fn from_lambda(lambda: f64, noise_power_w: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        if !(noise_power_w > 0.0) || !noise_power_w.is_finite() {
            return Err(Error::Domain(format!(
                "noise power must be positive, got {noise_power_w} W"
            )));
        }
        let pathloss_db = 10.0 * lambda.log10();
        Ok(UserProfile {
            distance_km: 10f64.powf((pathloss_db - 128.1) / 37.6),
            pathloss_db,
            lambda,
            noise_power_w,
        })
    }

    /// Rate of the exponential law followed by the normalized gain.
    pub fn gain_rate(&self) -> f64 {
        self.lambda * self.noise_power_w
    }

    /// Mean normalized gain `1 / (lambda * sigma^2)`.
    pub fn mean_gain(&self) -> f64 {
        1.0 / self.gain_rate()
    }
}

/// Normalized gains of both users in one fading state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingState {
    pub g1: f64,
    pub g2: f64,
}

impl FadingState {
    pub fn new(g1: f64, g2: f64) -> Self {
        FadingState { g1, g2 }
    }

    pub fn gain(&self, user: User) -> f64 {
        match user {
            User::One => self.g1,
            User::Two => self.g2,
        }
    }

    /// The user decoding with SIC. Exact ties go to user 1.
    pub fn strong_user(&self) -> User {
        if self.g2 > self.g1 {
            User::Two
        } else {
            User::One
        }
    }

    pub fn is_tie(&self) -> bool {
        self.g1 == self.g2
    }
}

/// A seeded sample of fading states.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingEnsemble {
    pub seed: u64,
    pub lambda: [f64; 2],
    pub noise_power_w: f64,
    pub states: Vec<FadingState>,
    /// States where `g1 == g2`; such ties are resolved in favour of user 1.
    pub ties: usize,
}

impl FadingEnsemble {
    /// Wraps explicit states, e.g. hand-built toy ensembles.
    pub fn from_states(states: Vec<FadingState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Precondition("ensemble needs at least one state".into()));
        }
        if let Some(s) = states
            .iter()
            .find(|s| !(s.g1 >= 0.0 && s.g2 >= 0.0 && s.g1.is_finite() && s.g2.is_finite()))
        {
            return Err(Error::Domain(format!("invalid gains {s:?}")));
        }
        let ties = states.iter().filter(|s| s.is_tie()).count();
        Ok(FadingEnsemble {
            seed: 0,
            lambda: [f64::NAN; 2],
            noise_power_w: f64::NAN,
            states,
            ties,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn mean_gains(&self) -> [f64; 2] {
        let n = self.states.len() as f64;
        let (s1, s2) = self
            .states
            .iter()
            .fold((0.0, 0.0), |(a, b), s| (a + s.g1, b + s.g2));
        [s1 / n, s2 / n]
    }

    /// Writes the ensemble as CSV: a metadata header and row, then one row per state.
    /// Values are printed in shortest round-trip form, so a reload is bit exact.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
        let to_err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["seed", "n", "lambda1", "lambda2", "sigma2"]).map_err(to_err)?;
        w.write_record([
            self.seed.to_string(),
            self.states.len().to_string(),
            self.lambda[0].to_string(),
            self.lambda[1].to_string(),
            self.noise_power_w.to_string(),
        ])
        .map_err(to_err)?;
        w.write_record(["g1", "g2"]).map_err(to_err)?;
        for s in &self.states {
            w.write_record([s.g1.to_string(), s.g2.to_string()]).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = r.records();
        let mut next = |what: &str| -> Result<csv::StringRecord> {
            records
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .map_err(|e| Error::Parse(e.to_string()))
        };
        let field = |rec: &csv::StringRecord, i: usize| -> Result<String> {
            rec.get(i)
                .map(str::to_owned)
                .ok_or_else(|| Error::Parse(format!("short record {rec:?}")))
        };
        let num = |s: String| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")))
        };

        let head = next("metadata header")?;
        if head.iter().collect::<Vec<_>>() != ["seed", "n", "lambda1", "lambda2", "sigma2"] {
            return Err(Error::Parse(format!("unexpected metadata header {head:?}")));
        }
        let meta = next("metadata row")?;
        let seed = field(&meta, 0)?
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("seed: {e}")))?;
        let n = field(&meta, 1)?
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("n: {e}")))?;
        let lambda = [num(field(&meta, 2)?)?, num(field(&meta, 3)?)?];
        let noise_power_w = num(field(&meta, 4)?)?;
        let _ = next("state header")?;

        let mut states = Vec::with_capacity(n);
        for rec in records {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            states.push(FadingState::new(num(field(&rec, 0)?)?, num(field(&rec, 1)?)?));
        }
        if states.len() != n {
            return Err(Error::Parse(format!(
                "header announces {n} states, found {}",
                states.len()
            )));
        }
        let mut ens = FadingEnsemble::from_states(states)?;
        ens.seed = seed;
        ens.lambda = lambda;
        ens.noise_power_w = noise_power_w;
        Ok(ens)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(BufReader::new(file))
    }
}

/// Draws `n` independent fading states for the two profiles.
pub fn draw_ensemble(profiles: &[UserProfile; 2], n: usize, seed: u64) -> Result<FadingEnsemble> {
    if n == 0 {
        return Err(Error::Precondition("ensemble size must be at least 1".into()));
    }
    if profiles[0].noise_power_w != profiles[1].noise_power_w {
        return Err(Error::Precondition(
            "both users must share the same noise power".into(),
        ));
    }
    let rates = [profiles[0].gain_rate(), profiles[1].gain_rate()];
    let blocks = n.div_ceil(BLOCK_LEN);
    let states: Vec<FadingState> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let len = BLOCK_LEN.min(n - b * BLOCK_LEN);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            (0..len)
                .map(|_| {
                    let e1 = -(1.0 - rng.random::<f64>()).ln();
                    let e2 = -(1.0 - rng.random::<f64>()).ln();
                    FadingState::new(e1 / rates[0], e2 / rates[1])
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let ties = states.iter().filter(|s| s.is_tie()).count();
    Ok(FadingEnsemble {
        seed,
        lambda: [profiles[0].lambda, profiles[1].lambda],
        noise_power_w: profiles[0].noise_power_w,
        states,
        ties,
    })
}
