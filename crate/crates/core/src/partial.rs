//! Closed-form averages when the transmitter only knows which user is
//! stronger, and grid-search policy optimizers built on them.
//!
//! The power rule is binary: the stronger user always gets `ps` and the
//! weaker one `pw`. With Rayleigh fading the normalized gain of user k is
//! exponential with rate `A = lambda_k sigma^2`, and the event "user k is
//! stronger" has probability `a = A / (A + B)`, where `B` belongs to the
//! other user. Every ergodic average reduces to the kernel
//! `E[ln(1 + c g)] = -f(rate / c)`, and every outage to sums of exponentials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::UserProfile;
use crate::error::{Error, Result};
use crate::rates::sinr_threshold;
use crate::special::f_kernel;
use crate::Scheme;

/// Default points per grid dimension.
pub const DEFAULT_GRID_N: usize = 1001;

/// Binary power rule, plus the share of user 1 for orthogonal access.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialPolicy {
    pub ps: f64,
    pub pw: f64,
    pub alpha1: f64,
}

/// Budgets and constraint levels for the partial-knowledge problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialSpec {
    pub pbar: f64,
    pub rbar_prime: f64,
    pub zetabar_prime: f64,
    pub targets: crate::rates::TargetRates,
}

impl PartialSpec {
    pub fn new(
        pbar: f64,
        rbar_prime: f64,
        zetabar_prime: f64,
        targets: crate::rates::TargetRates,
    ) -> Result<Self> {
        if !(pbar > 0.0) || !pbar.is_finite() {
            return Err(Error::Domain(format!("average power must be positive, got {pbar}")));
        }
        if !(rbar_prime >= 0.0) || !rbar_prime.is_finite() {
            return Err(Error::Domain(format!("rate floor must be finite and >= 0, got {rbar_prime}")));
        }
        if !(0.0..=1.0).contains(&zetabar_prime) {
            return Err(Error::Domain(format!("outage ceiling must lie in [0, 1], got {zetabar_prime}")));
        }
        Ok(PartialSpec {
            pbar,
            rbar_prime,
            zetabar_prime,
            targets,
        })
    }
}

/// Best grid point found by an optimizer. `metrics` holds per-user ergodic
/// rates or outage probabilities, depending on the problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialOptimum {
    pub policy: PartialPolicy,
    pub objective: f64,
    pub metrics: [f64; 2],
}

fn check_powers(ps: f64, pw: f64) -> Result<()> {
    if !(ps >= 0.0) || !(pw >= 0.0) || !ps.is_finite() || !pw.is_finite() {
        return Err(Error::Domain(format!(
            "powers must be finite and >= 0, got ps = {ps}, pw = {pw}"
        )));
    }
    Ok(())
}

/// `(A, Lambda, a)`: own rate, combined rate, probability of being stronger.
fn rates_of(pk: &UserProfile, pkbar: &UserProfile) -> (f64, f64, f64) {
    let a = pk.gain_rate();
    let l = a + pkbar.gain_rate();
    (a, l, a / l)
}

/// `-f(rate / c)` with the `c = 0` limit.
fn log_mean(rate: f64, c: f64) -> Result<f64> {
    if c <= 0.0 {
        return Ok(0.0);
    }
    Ok(-f_kernel(rate / c)?)
}

/// Ergodic NOMA rate of user k, in bits/s/Hz:
///
/// ```text
/// [2a f(L/ps) - a f(L/(ps+pw)) - f(A/ps)] / ln 2
/// ```
///
/// Zero powers are handled through the limit `f(inf) = 0`.
pub fn ergodic_rate_noma_partial(pk: &UserProfile, pkbar: &UserProfile, ps: f64, pw: f64) -> Result<f64> {
    check_powers(ps, pw)?;
    let (a_rate, l, a) = rates_of(pk, pkbar);
    let strong = log_mean(a_rate, ps)? - a * log_mean(l, ps)?;
    let weak = a * (log_mean(l, ps + pw)? - log_mean(l, ps)?);
    Ok(((strong + weak) / std::f64::consts::LN_2).max(0.0))
}

/// Ergodic OMA rate of user k holding the fixed share `alpha_k`:
///
/// ```text
/// (alpha/ln 2) [-f(A alpha/ps) + a f(L alpha/ps) - a f(L alpha/pw)]
/// ```
pub fn ergodic_rate_oma2_partial(
    pk: &UserProfile,
    pkbar: &UserProfile,
    ps: f64,
    pw: f64,
    alpha_k: f64,
) -> Result<f64> {
    check_powers(ps, pw)?;
    if !(0.0..=1.0).contains(&alpha_k) {
        return Err(Error::Domain(format!("share must lie in [0, 1], got {alpha_k}")));
    }
    if alpha_k == 0.0 {
        return Ok(0.0);
    }
    let (a_rate, l, a) = rates_of(pk, pkbar);
    let v = log_mean(a_rate * alpha_k, ps)? - a * log_mean(l * alpha_k, ps)? + a * log_mean(l * alpha_k, pw)?;
    Ok((alpha_k * v / std::f64::consts::LN_2).max(0.0))
}

/// True when `rate(pw)` never decreases along `grid`.
pub fn ergodic_rate_monotone_in_pw_check<F>(rate: F, grid: &[f64]) -> Result<bool>
where
    F: Fn(f64) -> Result<f64>,
{
    let vals = grid.iter().map(|&pw| rate(pw)).collect::<Result<Vec<f64>>>()?;
    Ok(vals.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)))
}

/// Which decoding path fixes the strong-side success threshold of user k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrongPath {
    /// Cancellation of the other message succeeds first; threshold `tau_k / ps`.
    Direct,
    /// Success starts where cancellation becomes possible.
    CancellationLimited,
    /// Decoding through the other message as noise; threshold `tau_k / (ps - pw tau_k)`.
    ThroughInterference,
    /// No gain is large enough.
    Never,
}

/// Regime of the ratio `ps / pw` for the outage of one NOMA user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NomaOutageRegime {
    pub strong: StrongPath,
    /// Whether user k can meet its target when it is the weaker user.
    pub weak_possible: bool,
}

struct Thresholds {
    strong: f64,
    weak: f64,
    regime: NomaOutageRegime,
}

/// Success thresholds on the normalized gain of user k.
fn noma_thresholds(ps: f64, pw: f64, tau_k: f64, tau_o: f64) -> Thresholds {
    let inf = f64::INFINITY;
    let e1 = if tau_k == 0.0 { 0.0 } else { tau_k / ps };
    let e2 = if tau_k == 0.0 {
        0.0
    } else if ps > pw * tau_k {
        tau_k / (ps - pw * tau_k)
    } else {
        inf
    };
    let e3 = if tau_k == 0.0 {
        0.0
    } else if pw > ps * tau_k {
        tau_k / (pw - ps * tau_k)
    } else {
        inf
    };
    let e4 = if tau_o == 0.0 {
        0.0
    } else if pw > ps * tau_o {
        tau_o / (pw - ps * tau_o)
    } else {
        inf
    };
    let via = e4.min(e2);
    let strong = e1.max(via);
    let path = if strong.is_infinite() {
        StrongPath::Never
    } else if e4 <= e1 {
        StrongPath::Direct
    } else if e4 <= e2 {
        StrongPath::CancellationLimited
    } else {
        StrongPath::ThroughInterference
    };
    Thresholds {
        strong,
        weak: e3,
        regime: NomaOutageRegime {
            strong: path,
            weak_possible: e3.is_finite(),
        },
    }
}

fn noma_outage_raw(a_rate: f64, l: f64, ps: f64, pw: f64, tau_k: f64, tau_o: f64) -> (f64, NomaOutageRegime) {
    let a = a_rate / l;
    let th = noma_thresholds(ps, pw, tau_k, tau_o);
    // Pr{g < t, g >= other} = (1 - e^{-A t}) - a (1 - e^{-L t})
    let strong = if th.strong.is_infinite() {
        1.0 - a
    } else {
        -(-a_rate * th.strong).exp_m1() + a * (-l * th.strong).exp_m1()
    };
    // Pr{g < t, g < other} = a (1 - e^{-L t})
    let weak = if th.weak.is_infinite() {
        a
    } else {
        -a * (-l * th.weak).exp_m1()
    };
    ((strong + weak).clamp(0.0, 1.0), th.regime)
}

/// Ratios `ps / pw` where the regime of user k changes.
pub fn noma_regime_boundaries(tau_k: f64, tau_o: f64) -> Vec<f64> {
    let mut b = vec![];
    if tau_o > 0.0 {
        b.push(1.0 / tau_o);
        b.push(tau_k / (tau_o * (tau_k + 1.0)));
        b.push(tau_k * (tau_o + 1.0) / (tau_o * (tau_k + 1.0)));
    }
    if tau_k > 0.0 {
        b.push(tau_k);
        b.push(1.0 / tau_k);
    }
    b.retain(|r| r.is_finite() && *r > 0.0);
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Outage probability of NOMA user k under the binary power rule, with the
/// regime it fell in.
///
/// At a regime boundary both neighbouring regimes are evaluated and must
/// agree to 1e-9, otherwise a consistency error is raised.
pub fn outage_noma_partial_with_regime(
    pk: &UserProfile,
    pkbar: &UserProfile,
    ps: f64,
    pw: f64,
    r_own: f64,
    r_other: f64,
) -> Result<(f64, NomaOutageRegime)> {
    check_powers(ps, pw)?;
    if ps + pw <= 0.0 {
        return Err(Error::Domain("at least one power must be positive".into()));
    }
    if !(r_own >= 0.0) || !(r_other >= 0.0) {
        return Err(Error::Domain("target rates must be >= 0".into()));
    }
    let (a_rate, l, _) = rates_of(pk, pkbar);
    let (tau_k, tau_o) = (sinr_threshold(r_own), sinr_threshold(r_other));
    let (val, regime) = noma_outage_raw(a_rate, l, ps, pw, tau_k, tau_o);
    if pw > 0.0 {
        let ratio = ps / pw;
        for b in noma_regime_boundaries(tau_k, tau_o) {
            if ((ratio - b) / b).abs() <= 1e-12 {
                let lo = noma_outage_raw(a_rate, l, b * (1.0 - 1e-12) * pw, pw, tau_k, tau_o).0;
                let hi = noma_outage_raw(a_rate, l, b * (1.0 + 1e-12) * pw, pw, tau_k, tau_o).0;
                if (lo - hi).abs() > 1e-9 {
                    return Err(Error::Consistency(format!(
                        "outage jumps from {lo} to {hi} across ratio {b}"
                    )));
                }
            }
        }
    }
    Ok((val, regime))
}

/// Outage probability of NOMA user k under the binary power rule.
pub fn outage_noma_partial(
    pk: &UserProfile,
    pkbar: &UserProfile,
    ps: f64,
    pw: f64,
    r_own: f64,
    r_other: f64,
) -> Result<f64> {
    outage_noma_partial_with_regime(pk, pkbar, ps, pw, r_own, r_other).map(|r| r.0)
}

/// Outage probability of OMA user k with fixed share `alpha_k`:
///
/// ```text
/// 1 - e^{-A phi1} + a (e^{-L phi1} - e^{-L phi2})
/// ```
///
/// with `phi1 = alpha xi / ps`, `phi2 = alpha xi / pw` and `xi = 2^{R/alpha} - 1`.
pub fn outage_oma2_partial(
    pk: &UserProfile,
    pkbar: &UserProfile,
    ps: f64,
    pw: f64,
    alpha_k: f64,
    target_k: f64,
) -> Result<f64> {
    check_powers(ps, pw)?;
    if !(0.0..=1.0).contains(&alpha_k) {
        return Err(Error::Domain(format!("share must lie in [0, 1], got {alpha_k}")));
    }
    if !(target_k >= 0.0) {
        return Err(Error::Domain("target rate must be >= 0".into()));
    }
    if target_k == 0.0 {
        return Ok(0.0);
    }
    if alpha_k == 0.0 {
        return Ok(1.0);
    }
    let (a_rate, l, a) = rates_of(pk, pkbar);
    let xi = sinr_threshold(target_k / alpha_k);
    let phi = |p: f64| if p > 0.0 { alpha_k * xi / p } else { f64::INFINITY };
    let (phi1, phi2) = (phi(ps), phi(pw));
    let v = 1.0 - (-a_rate * phi1).exp() + a * ((-l * phi1).exp() - (-l * phi2).exp());
    Ok(v.clamp(0.0, 1.0))
}

/// Uniform grid of `n` points on `[0, hi]`.
fn grid(n: usize, hi: f64) -> Vec<f64> {
    (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect()
}

fn check_grid(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Precondition(format!("grid needs at least 2 points, got {n}")));
    }
    Ok(())
}

/// Scores every candidate in parallel, then keeps the best in index order so
/// the lowest index wins ties. `None` scores are infeasible.
fn best_of<F>(cands: &[PartialPolicy], maximize: bool, score: F) -> Result<Option<PartialOptimum>>
where
    F: Fn(&PartialPolicy) -> Result<Option<(f64, [f64; 2])>> + Sync,
{
    let scored = cands
        .par_iter()
        .map(&score)
        .collect::<Result<Vec<Option<(f64, [f64; 2])>>>>()?;
    let mut best: Option<PartialOptimum> = None;
    for (pol, s) in cands.iter().zip(scored) {
        let Some((obj, metrics)) = s else { continue };
        let better = match &best {
            None => true,
            Some(b) if maximize => obj > b.objective,
            Some(b) => obj < b.objective,
        };
        if better {
            best = Some(PartialOptimum {
                policy: *pol,
                objective: obj,
                metrics,
            });
        }
    }
    Ok(best)
}

/// Candidate policies on the line `ps + pw = pbar`: 1-D for NOMA and OMA-I
/// (share 1/2), 2-D over the share for OMA-II.
fn candidates(scheme: Scheme, pbar: f64, grid_n: usize) -> Vec<PartialPolicy> {
    let ps_grid = grid(grid_n, pbar);
    let line = |alpha1: f64| {
        ps_grid.iter().map(move |&ps| PartialPolicy {
            ps,
            pw: (pbar - ps).max(0.0),
            alpha1,
        })
    };
    match scheme {
        Scheme::Noma => line(0.0).collect(),
        Scheme::Oma1 => line(0.5).collect(),
        Scheme::Oma2 => grid(grid_n, 1.0).into_iter().flat_map(line).collect(),
    }
}

/// Per-user ergodic rates of a partial-knowledge policy.
pub fn partial_rates(profiles: &[UserProfile; 2], scheme: Scheme, pol: &PartialPolicy) -> Result<[f64; 2]> {
    let [p1, p2] = profiles;
    Ok(match scheme {
        Scheme::Noma => [
            ergodic_rate_noma_partial(p1, p2, pol.ps, pol.pw)?,
            ergodic_rate_noma_partial(p2, p1, pol.ps, pol.pw)?,
        ],
        Scheme::Oma2 | Scheme::Oma1 => [
            ergodic_rate_oma2_partial(p1, p2, pol.ps, pol.pw, pol.alpha1)?,
            ergodic_rate_oma2_partial(p2, p1, pol.ps, pol.pw, 1.0 - pol.alpha1)?,
        ],
    })
}

/// Per-user outage probabilities of a partial-knowledge policy.
pub fn partial_outages(
    profiles: &[UserProfile; 2],
    scheme: Scheme,
    pol: &PartialPolicy,
    targets: &crate::rates::TargetRates,
) -> Result<[f64; 2]> {
    let [p1, p2] = profiles;
    let (r1, r2) = (targets.rbar1, targets.rbar2);
    if pol.ps + pol.pw <= 0.0 {
        return Ok([(r1 > 0.0) as u8 as f64, (r2 > 0.0) as u8 as f64]);
    }
    Ok(match scheme {
        Scheme::Noma => [
            outage_noma_partial(p1, p2, pol.ps, pol.pw, r1, r2)?,
            outage_noma_partial(p2, p1, pol.ps, pol.pw, r2, r1)?,
        ],
        Scheme::Oma2 | Scheme::Oma1 => [
            outage_oma2_partial(p1, p2, pol.ps, pol.pw, pol.alpha1, r1)?,
            outage_oma2_partial(p2, p1, pol.ps, pol.pw, 1.0 - pol.alpha1, r2)?,
        ],
    })
}

fn solve_p1_prime(
    profiles: &[UserProfile; 2],
    pbar: f64,
    rbar_prime: f64,
    scheme: Scheme,
    grid_n: usize,
) -> Result<Option<PartialOptimum>> {
    check_grid(grid_n)?;
    let cands = candidates(scheme, pbar, grid_n);
    best_of(&cands, true, |pol| {
        let r = partial_rates(profiles, scheme, pol)?;
        Ok((r[0] >= rbar_prime && r[1] >= rbar_prime).then_some((r[0] + r[1], r)))
    })
}

/// Largest ergodic sum rate with both ergodic rates at least `rbar_prime`,
/// scanning `ps` with `pw = pbar - ps`. `None` when no grid point qualifies.
pub fn solve_p1_prime_noma(
    profiles: &[UserProfile; 2],
    pbar: f64,
    rbar_prime: f64,
    grid_n: usize,
) -> Result<Option<PartialOptimum>> {
    solve_p1_prime(profiles, pbar, rbar_prime, Scheme::Noma, grid_n)
}

/// As [`solve_p1_prime_noma`], over a 2-D grid of `ps` and the share of user 1.
pub fn solve_p1_prime_oma2(
    profiles: &[UserProfile; 2],
    pbar: f64,
    rbar_prime: f64,
    grid_n: usize,
) -> Result<Option<PartialOptimum>> {
    solve_p1_prime(profiles, pbar, rbar_prime, Scheme::Oma2, grid_n)
}

/// As [`solve_p1_prime_noma`], with the band split in half.
pub fn solve_p1_prime_oma1(
    profiles: &[UserProfile; 2],
    pbar: f64,
    rbar_prime: f64,
    grid_n: usize,
) -> Result<Option<PartialOptimum>> {
    solve_p1_prime(profiles, pbar, rbar_prime, Scheme::Oma1, grid_n)
}

/// Any scheme, for dispatch.
pub fn solve_p1_prime_scheme(
    profiles: &[UserProfile; 2],
    pbar: f64,
    rbar_prime: f64,
    scheme: Scheme,
    grid_n: usize,
) -> Result<Option<PartialOptimum>> {
    solve_p1_prime(profiles, pbar, rbar_prime, scheme, grid_n)
}

/// Largest `R1 (1 - outage_1) + R2 (1 - outage_2)` with both outages at most
/// `zetabar_prime`. `None` when no grid point qualifies.
pub fn solve_p2_prime(
    profiles: &[UserProfile; 2],
    pbar: f64,
    targets: &crate::rates::TargetRates,
    zetabar_prime: f64,
    scheme: Scheme,
    grid_n: usize,
) -> Result<Option<PartialOptimum>> {
    check_grid(grid_n)?;
    let cands = candidates(scheme, pbar, grid_n);
    best_of(&cands, true, |pol| {
        let z = partial_outages(profiles, scheme, pol, targets)?;
        let dlt = targets.rbar1 * (1.0 - z[0]) + targets.rbar2 * (1.0 - z[1]);
        Ok((z[0] <= zetabar_prime && z[1] <= zetabar_prime).then_some((dlt, z)))
    })
}

/// Smallest reachable maximum outage over the grid. The objective is the
/// larger of the two outages.
pub fn min_max_outage_partial(
    profiles: &[UserProfile; 2],
    pbar: f64,
    targets: &crate::rates::TargetRates,
    scheme: Scheme,
    grid_n: usize,
) -> Result<PartialOptimum> {
    check_grid(grid_n)?;
    let cands = candidates(scheme, pbar, grid_n);
    let best = best_of(&cands, false, |pol| {
        let z = partial_outages(profiles, scheme, pol, targets)?;
        Ok(Some((z[0].max(z[1]), z)))
    })?;
    Ok(best.expect("grid is nonempty"))
}

/// Largest common ergodic rate floor over the grid: the max-min rate.
pub fn max_min_rate_partial(
    profiles: &[UserProfile; 2],
    pbar: f64,
    scheme: Scheme,
    grid_n: usize,
) -> Result<PartialOptimum> {
    check_grid(grid_n)?;
    let cands = candidates(scheme, pbar, grid_n);
    let best = best_of(&cands, true, |pol| {
        let r = partial_rates(profiles, scheme, pol)?;
        Ok(Some((r[0].min(r[1]), r)))
    })?;
    Ok(best.expect("grid is nonempty"))
}
