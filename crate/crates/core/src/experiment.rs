//! Trade-off sweeps: configuration, dispatch to the solvers, CSV output, and
//! a closed-form versus Monte Carlo check for the partial-knowledge formulas.
//!
//! Configurations are flat TOML files with units in the key names:
//!
//! ```toml
//! mode = "ergodic_full"
//! distances_km = [0.1, 0.5]
//! pbar_w = 1.0
//! phat_w = 5.0
//! n_states = 100000
//! seed = 7
//! schemes = ["noma", "oma2", "oma1"]
//! sweep_axis = "rbar"
//! sweep_values = [0.0, 1.0, 2.0]
//! ```

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{draw_ensemble, noise_power, FadingEnsemble, UserProfile};
use crate::dlt::{outage_ceiling_feasible, solve_dlt, zetabar_min_bisection, DltSpec};
use crate::ellipsoid::EllipsoidOptions;
use crate::ergodic::{rate_floor_feasible, rmax_bisection, solve_ergodic, ErgodicSpec};
use crate::error::{Error, Result};
use crate::partial::{
    max_min_rate_partial, min_max_outage_partial, outage_noma_partial, outage_oma2_partial,
    partial_outages, partial_rates, solve_p1_prime_scheme, solve_p2_prime,
    ergodic_rate_noma_partial, ergodic_rate_oma2_partial, PartialPolicy, DEFAULT_GRID_N,
};
use crate::rates::{
    noma_outage_indicators, noma_rates_full, oma2_outage_indicators, oma2_rates_full, StatePolicy,
    TargetRates,
};
use crate::reduce::{chunked_sum, Sums};
use crate::Scheme;

/// Problem family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ErgodicFull,
    ErgodicPartial,
    DltFull,
    DltPartial,
}

/// Swept quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Rbar,
    RbarPrime,
    Zetabar,
    ZetabarPrime,
    Pbar,
}

impl SweepAxis {
    fn fits(self, mode: Mode) -> bool {
        matches!(
            (self, mode),
            (SweepAxis::Pbar, _)
                | (SweepAxis::Rbar, Mode::ErgodicFull)
                | (SweepAxis::RbarPrime, Mode::ErgodicPartial)
                | (SweepAxis::Zetabar, Mode::DltFull)
                | (SweepAxis::ZetabarPrime, Mode::DltPartial)
        )
    }

    /// Whether a larger value makes the problem harder.
    fn tightens(self) -> bool {
        matches!(self, SweepAxis::Rbar | SweepAxis::RbarPrime)
    }
}

fn default_psd() -> f64 {
    -169.0
}
fn default_bandwidth() -> f64 {
    1e7
}
fn default_pbar() -> f64 {
    1.0
}
fn default_phat() -> f64 {
    5.0
}
fn default_n_states() -> usize {
    100_000
}
fn default_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}
fn default_grid_n() -> usize {
    DEFAULT_GRID_N
}
fn default_zetabar() -> f64 {
    1.0
}

/// One sweep of one problem family over one or more schemes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub distances_km: [f64; 2],
    #[serde(default = "default_psd")]
    pub psd_dbm_hz: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    /// Receiver noise figure added to the noise density.
    #[serde(default)]
    pub noise_figure_db: f64,
    #[serde(default = "default_pbar")]
    pub pbar_w: f64,
    #[serde(default = "default_phat")]
    pub phat_w: f64,
    #[serde(default = "default_n_states")]
    pub n_states: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    /// Fixed-rate targets of the delay-limited modes.
    #[serde(default)]
    pub target_rates_bps_hz: Option<[f64; 2]>,
    /// Rate floor used when the sweep is over power.
    #[serde(default)]
    pub rbar_bps_hz: f64,
    /// Outage ceiling used when the sweep is over power.
    #[serde(default = "default_zetabar")]
    pub zetabar: f64,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.pbar_w > 0.0) || !(self.phat_w > 0.0) || self.pbar_w > self.phat_w {
            return bad(format!(
                "need 0 < pbar_w <= phat_w, got {} and {}",
                self.pbar_w, self.phat_w
            ));
        }
        if self.n_states == 0 {
            return bad("n_states must be at least 1".into());
        }
        if self.schemes.is_empty() {
            return bad("schemes must not be empty".into());
        }
        if self.sweep_values.is_empty() {
            return bad("sweep_values must not be empty".into());
        }
        if self.sweep_values.iter().any(|v| !v.is_finite()) {
            return bad("sweep_values must be finite".into());
        }
        if self.sweep_values.windows(2).any(|w| w[0] > w[1]) {
            return bad("sweep_values must be sorted ascending".into());
        }
        if !self.sweep_axis.fits(self.mode) {
            return bad(format!("axis {:?} does not fit mode {:?}", self.sweep_axis, self.mode));
        }
        if self.sweep_axis == SweepAxis::Pbar && self.sweep_values.iter().any(|&p| !(p > 0.0) || p > self.phat_w) {
            return bad("swept pbar values must lie in (0, phat_w]".into());
        }
        if matches!(self.mode, Mode::DltFull | Mode::DltPartial) && self.target_rates_bps_hz.is_none() {
            return bad("delay-limited modes need target_rates_bps_hz".into());
        }
        if self.grid_n < 2 {
            return bad("grid_n must be at least 2".into());
        }
        if let Some(t) = self.target_rates_bps_hz {
            TargetRates::new(t[0], t[1])?;
        }
        Ok(())
    }

    pub fn profiles(&self) -> Result<[UserProfile; 2]> {
        let s2 = noise_power(self.psd_dbm_hz + self.noise_figure_db, self.bandwidth_hz)?;
        Ok([
            UserProfile::from_distance(self.distances_km[0], s2)?,
            UserProfile::from_distance(self.distances_km[1], s2)?,
        ])
    }

    pub fn targets(&self) -> Result<TargetRates> {
        let t = self.target_rates_bps_hz.unwrap_or([1.0, 1.0]);
        TargetRates::new(t[0], t[1])
    }

    pub fn ensemble(&self) -> Result<FadingEnsemble> {
        draw_ensemble(&self.profiles()?, self.n_states, self.seed)
    }
}

/// Outcome class of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    /// The constraint level is out of reach.
    Infeasible,
    /// Solved, but the recovered policy misses a constraint by more than the slack.
    Residual,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Infeasible => "infeasible",
            PointStatus::Residual => "residual",
        }
    }
}

/// One row of a trade-off curve. Empty fields do not apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub axis: f64,
    pub objective: Option<f64>,
    /// Ergodic rate or delay-limited throughput per user.
    pub per_user: [Option<f64>; 2],
    pub outage: [Option<f64>; 2],
    pub avg_power: Option<f64>,
    pub dual_gap: Option<f64>,
    pub status: PointStatus,
}

impl TradeoffPoint {
    fn infeasible(axis: f64) -> Self {
        TradeoffPoint {
            axis,
            objective: None,
            per_user: [None; 2],
            outage: [None; 2],
            avg_power: None,
            dual_gap: None,
            status: PointStatus::Infeasible,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub scheme: Scheme,
    pub points: Vec<TradeoffPoint>,
}

impl TradeoffCurve {
    pub fn all_infeasible(&self) -> bool {
        self.points.iter().all(|p| p.status == PointStatus::Infeasible)
    }
}

/// Constraint levels of one sweep point.
struct Levels {
    pbar: f64,
    rbar: f64,
    zetabar: f64,
}

fn levels(cfg: &ExperimentConfig, v: f64) -> Levels {
    let mut l = Levels {
        pbar: cfg.pbar_w,
        rbar: cfg.rbar_bps_hz,
        zetabar: cfg.zetabar,
    };
    match cfg.sweep_axis {
        SweepAxis::Pbar => l.pbar = v,
        SweepAxis::Rbar | SweepAxis::RbarPrime => l.rbar = v,
        SweepAxis::Zetabar | SweepAxis::ZetabarPrime => l.zetabar = v,
    }
    l
}

fn ergodic_full_point(ens: &FadingEnsemble, cfg: &ExperimentConfig, scheme: Scheme, v: f64) -> Result<TradeoffPoint> {
    let l = levels(cfg, v);
    if !rate_floor_feasible(ens, l.pbar, cfg.phat_w, scheme, l.rbar)? {
        return Ok(TradeoffPoint::infeasible(v));
    }
    let spec = ErgodicSpec::new(l.pbar, cfg.phat_w, l.rbar)?;
    let sol = solve_ergodic(ens, &spec, scheme, &EllipsoidOptions::dual())?;
    let p = &sol.primal;
    Ok(TradeoffPoint {
        axis: v,
        objective: Some(p.esr),
        per_user: [Some(p.rates[0]), Some(p.rates[1])],
        outage: [None; 2],
        avg_power: Some(p.avg_power),
        dual_gap: Some(sol.relative_gap()),
        status: if p.feasible { PointStatus::Ok } else { PointStatus::Residual },
    })
}

fn dlt_full_point(
    ens: &FadingEnsemble,
    cfg: &ExperimentConfig,
    scheme: Scheme,
    v: f64,
    warm: &mut Option<Vec<f64>>,
) -> Result<TradeoffPoint> {
    let l = levels(cfg, v);
    let t = cfg.targets()?;
    if !outage_ceiling_feasible(ens, l.pbar, cfg.phat_w, &t, scheme, l.zetabar, None)? {
        return Ok(TradeoffPoint::infeasible(v));
    }
    let spec = DltSpec::new(l.pbar, cfg.phat_w, t, l.zetabar)?;
    let mut opts = EllipsoidOptions::dual();
    if let Some(c) = warm.as_ref() {
        opts.init_center = c.clone();
    }
    let sol = solve_dlt(ens, &spec, scheme, &opts)?;
    *warm = Some(sol.duals.to_vec());
    let p = &sol.primal;
    Ok(TradeoffPoint {
        axis: v,
        objective: Some(p.sum_dlt),
        per_user: [
            Some(t.rbar1 * (1.0 - p.outages[0])),
            Some(t.rbar2 * (1.0 - p.outages[1])),
        ],
        outage: [Some(p.outages[0]), Some(p.outages[1])],
        avg_power: Some(p.avg_power),
        dual_gap: Some(sol.relative_gap()),
        status: if p.feasible { PointStatus::Ok } else { PointStatus::Residual },
    })
}

fn partial_point(cfg: &ExperimentConfig, scheme: Scheme, v: f64) -> Result<TradeoffPoint> {
    let l = levels(cfg, v);
    let profiles = cfg.profiles()?;
    let best = match cfg.mode {
        Mode::ErgodicPartial => solve_p1_prime_scheme(&profiles, l.pbar, l.rbar, scheme, cfg.grid_n)?,
        _ => solve_p2_prime(&profiles, l.pbar, &cfg.targets()?, l.zetabar, scheme, cfg.grid_n)?,
    };
    let Some(best) = best else {
        return Ok(TradeoffPoint::infeasible(v));
    };
    let pol = best.policy;
    let (per_user, outage) = if cfg.mode == Mode::ErgodicPartial {
        ([Some(best.metrics[0]), Some(best.metrics[1])], [None; 2])
    } else {
        let t = cfg.targets()?;
        let z = best.metrics;
        (
            [Some(t.rbar1 * (1.0 - z[0])), Some(t.rbar2 * (1.0 - z[1]))],
            [Some(z[0]), Some(z[1])],
        )
    };
    Ok(TradeoffPoint {
        axis: v,
        objective: Some(best.objective),
        per_user,
        outage,
        avg_power: Some(pol.ps + pol.pw),
        dual_gap: None,
        status: PointStatus::Ok,
    })
}

/// Runs every sweep point for every configured scheme, one curve per scheme.
///
/// Along an axis that only tightens the problem, points past the first
/// infeasible one are marked infeasible without solving.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TradeoffCurve>> {
    cfg.validate()?;
    let ens = match cfg.mode {
        Mode::ErgodicFull | Mode::DltFull => Some(cfg.ensemble()?),
        _ => None,
    };
    let mut curves = vec![];
    for &scheme in &cfg.schemes {
        let mut points = vec![];
        let mut warm = None;
        let mut blocked = false;
        for &v in &cfg.sweep_values {
            if blocked {
                points.push(TradeoffPoint::infeasible(v));
                continue;
            }
            let pt = match (cfg.mode, ens.as_ref()) {
                (Mode::ErgodicFull, Some(e)) => ergodic_full_point(e, cfg, scheme, v)?,
                (Mode::DltFull, Some(e)) => dlt_full_point(e, cfg, scheme, v, &mut warm)?,
                _ => partial_point(cfg, scheme, v)?,
            };
            blocked = pt.status == PointStatus::Infeasible && cfg.sweep_axis.tightens();
            points.push(pt);
        }
        curves.push(TradeoffCurve { scheme, points });
    }
    Ok(curves)
}

pub const CSV_HEADER: [&str; 10] = [
    "axis",
    "scheme",
    "objective",
    "rate_or_dlt_user1",
    "rate_or_dlt_user2",
    "outage_user1",
    "outage_user2",
    "avg_power",
    "dual_gap",
    "status",
];

fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes the curves as CSV, ordered by axis value and then by scheme.
pub fn write_curves_csv<W: Write>(curves: &[TradeoffCurve], w: W) -> Result<()> {
    let to_parse = |e: csv::Error| Error::Parse(e.to_string());
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER).map_err(to_parse)?;
    let n = curves.iter().map(|c| c.points.len()).max().unwrap_or(0);
    for i in 0..n {
        for c in curves {
            let Some(p) = c.points.get(i) else { continue };
            out.write_record([
                num(p.axis),
                c.scheme.label().to_string(),
                opt(p.objective),
                opt(p.per_user[0]),
                opt(p.per_user[1]),
                opt(p.outage[0]),
                opt(p.outage[1]),
                opt(p.avg_power),
                opt(p.dual_gap),
                p.status.as_str().to_string(),
            ])
            .map_err(to_parse)?;
        }
    }
    out.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

/// Writes the curves to `path`.
pub fn emit_csv(curves: &[TradeoffCurve], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = std::io::BufWriter::new(f);
    write_curves_csv(curves, &mut buf)?;
    buf.flush().map_err(|e| Error::io(path, e))
}

/// Edge of the feasible region for one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub scheme: Scheme,
    /// `rbar_max` for rate floors, `zetabar_min` for outage ceilings.
    pub quantity: &'static str,
    pub value: f64,
}

/// Largest rate floor or smallest outage ceiling per scheme, at `pbar_w`.
pub fn feasibility_frontier(cfg: &ExperimentConfig) -> Result<Vec<FrontierEntry>> {
    cfg.validate()?;
    let ens = match cfg.mode {
        Mode::ErgodicFull | Mode::DltFull => Some(cfg.ensemble()?),
        _ => None,
    };
    let profiles = cfg.profiles()?;
    cfg.schemes
        .iter()
        .map(|&scheme| {
            let (quantity, value) = match (cfg.mode, ens.as_ref()) {
                (Mode::ErgodicFull, Some(e)) => {
                    ("rbar_max", rmax_bisection(e, cfg.pbar_w, cfg.phat_w, scheme, 1e-4)?.rmax)
                }
                (Mode::DltFull, Some(e)) => (
                    "zetabar_min",
                    zetabar_min_bisection(e, cfg.pbar_w, cfg.phat_w, &cfg.targets()?, scheme, 1e-4)?.zeta_min,
                ),
                (Mode::ErgodicPartial, _) => (
                    "rbar_max",
                    max_min_rate_partial(&profiles, cfg.pbar_w, scheme, cfg.grid_n)?.objective,
                ),
                _ => (
                    "zetabar_min",
                    min_max_outage_partial(&profiles, cfg.pbar_w, &cfg.targets()?, scheme, cfg.grid_n)?.objective,
                ),
            };
            Ok(FrontierEntry {
                scheme,
                quantity,
                value,
            })
        })
        .collect()
}

type RateFn = fn(&UserProfile, &UserProfile, f64, f64, f64) -> Result<f64>;
type OutageFn = fn(&UserProfile, &UserProfile, f64, f64, f64, f64, f64) -> Result<f64>;

/// Closed forms checked by [`validate_partial_with`]. Arguments follow the
/// partial-knowledge functions, with the share (ignored by NOMA) inserted
/// after the powers.
#[derive(Clone, Copy)]
pub struct PartialFormulas {
    pub noma_rate: RateFn,
    pub oma_rate: RateFn,
    /// `(own, other, ps, pw, share, own target, other target)`.
    pub noma_outage: OutageFn,
    pub oma_outage: OutageFn,
}

impl Default for PartialFormulas {
    fn default() -> Self {
        PartialFormulas {
            noma_rate: |a, b, ps, pw, _| ergodic_rate_noma_partial(a, b, ps, pw),
            oma_rate: ergodic_rate_oma2_partial,
            noma_outage: |a, b, ps, pw, _, r, ro| outage_noma_partial(a, b, ps, pw, r, ro),
            oma_outage: |a, b, ps, pw, al, r, _| outage_oma2_partial(a, b, ps, pw, al, r),
        }
    }
}

/// Closed form against sample average for one quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationEntry {
    pub scheme: Scheme,
    pub quantity: String,
    pub user: usize,
    pub ps: f64,
    pub pw: f64,
    pub alpha1: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    /// Allowed absolute error.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_states: usize,
    pub seed: u64,
    /// Relative tolerance on ergodic rates.
    pub rate_rel_tol: f64,
    /// Tolerance on outages, in binomial standard errors.
    pub outage_sigmas: f64,
    pub max_rate_rel_err: f64,
    pub max_outage_abs_err: f64,
    pub entries: Vec<ValidationEntry>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

pub const RATE_REL_TOL: f64 = 0.01;
pub const OUTAGE_SIGMAS: f64 = 3.0;

/// Policies used by the validation grid.
pub fn validation_policies(pbar: f64) -> Vec<(Scheme, PartialPolicy)> {
    let mut v = vec![];
    for i in 1..=4 {
        let ps = pbar * i as f64 / 5.0;
        v.push((Scheme::Noma, PartialPolicy { ps, pw: pbar - ps, alpha1: 0.0 }));
        for alpha1 in [0.3, 0.5, 0.7] {
            v.push((Scheme::Oma2, PartialPolicy { ps, pw: pbar - ps, alpha1 }));
        }
    }
    v
}

/// Sample averages of rates and outage flags for one policy.
pub fn monte_carlo_partial(
    ens: &FadingEnsemble,
    scheme: Scheme,
    pol: &PartialPolicy,
    t: &TargetRates,
) -> ([f64; 2], [f64; 2]) {
    let n = ens.len() as f64;
    let s: Sums = chunked_sum(&ens.states, |_, st| {
        let sp = StatePolicy::from_roles(st, pol.ps, pol.pw, pol.alpha1);
        let (r, x) = match scheme {
            Scheme::Noma => (noma_rates_full(&sp, st), noma_outage_indicators(&sp, st, t)),
            _ => (oma2_rates_full(&sp, st), oma2_outage_indicators(&sp, st, t)),
        };
        Sums {
            objective: r[0],
            power: r[1],
            metric: [x[0] as u8 as f64, x[1] as u8 as f64],
        }
    });
    ([s.objective / n, s.power / n], [s.metric[0] / n, s.metric[1] / n])
}

/// Compares closed forms with sample averages over [`validation_policies`].
pub fn validate_partial_with(cfg: &ExperimentConfig, formulas: &PartialFormulas) -> Result<ValidationReport> {
    cfg.validate()?;
    let ens = cfg.ensemble()?;
    let pr = cfg.profiles()?;
    let t = cfg.targets()?;
    let n = ens.len() as f64;
    let mut entries = vec![];
    for (scheme, pol) in validation_policies(cfg.pbar_w) {
        let (mc_rates, mc_out) = monte_carlo_partial(&ens, scheme, &pol, &t);
        for k in 0..2 {
            let (own, other) = (&pr[k], &pr[1 - k]);
            let share = if k == 0 { pol.alpha1 } else { 1.0 - pol.alpha1 };
            let (r_own, r_other) = if k == 0 { (t.rbar1, t.rbar2) } else { (t.rbar2, t.rbar1) };
            let (rate, out) = match scheme {
                Scheme::Noma => (
                    (formulas.noma_rate)(own, other, pol.ps, pol.pw, share)?,
                    (formulas.noma_outage)(own, other, pol.ps, pol.pw, share, r_own, r_other)?,
                ),
                _ => (
                    (formulas.oma_rate)(own, other, pol.ps, pol.pw, share)?,
                    (formulas.oma_outage)(own, other, pol.ps, pol.pw, share, r_own, r_other)?,
                ),
            };
            let abs = (rate - mc_rates[k]).abs();
            let bound = RATE_REL_TOL * rate.abs();
            entries.push(ValidationEntry {
                scheme,
                quantity: "rate".into(),
                user: k + 1,
                ps: pol.ps,
                pw: pol.pw,
                alpha1: pol.alpha1,
                analytic: rate,
                empirical: mc_rates[k],
                abs_err: abs,
                rel_err: abs / rate.abs().max(1e-300),
                bound,
                pass: abs <= bound,
            });
            let p = out.clamp(0.0, 1.0);
            let abs = (out - mc_out[k]).abs();
            // one count of slack keeps the bound positive at p in {0, 1}
            let bound = OUTAGE_SIGMAS * (p * (1.0 - p) / n).sqrt() + 1.0 / n;
            entries.push(ValidationEntry {
                scheme,
                quantity: "outage".into(),
                user: k + 1,
                ps: pol.ps,
                pw: pol.pw,
                alpha1: pol.alpha1,
                analytic: out,
                empirical: mc_out[k],
                abs_err: abs,
                rel_err: abs / out.abs().max(1e-300),
                bound,
                pass: abs <= bound,
            });
        }
    }
    let max_rate_rel_err = entries
        .iter()
        .filter(|e| e.quantity == "rate")
        .map(|e| e.rel_err)
        .fold(0.0, f64::max);
    let max_outage_abs_err = entries
        .iter()
        .filter(|e| e.quantity == "outage")
        .map(|e| e.abs_err)
        .fold(0.0, f64::max);
    let pass = entries.iter().all(|e| e.pass);
    Ok(ValidationReport {
        n_states: ens.len(),
        seed: cfg.seed,
        rate_rel_tol: RATE_REL_TOL,
        outage_sigmas: OUTAGE_SIGMAS,
        max_rate_rel_err,
        max_outage_abs_err,
        entries,
        pass,
    })
}

/// [`validate_partial_with`] on the shipped formulas.
pub fn validate_partial_csit(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    validate_partial_with(cfg, &PartialFormulas::default())
}

/// Per-user closed-form metrics of a policy, for reporting.
pub fn partial_metrics(
    cfg: &ExperimentConfig,
    scheme: Scheme,
    pol: &PartialPolicy,
) -> Result<([f64; 2], [f64; 2])> {
    let pr = cfg.profiles()?;
    Ok((
        partial_rates(&pr, scheme, pol)?,
        partial_outages(&pr, scheme, pol, &cfg.targets()?)?,
    ))
}
