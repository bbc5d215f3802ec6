//! Sum of delay-limited throughput under a maximum outage per user, with full
//! channel knowledge at the transmitter.
//!
//! Delay-limited throughput of user k is `R_k (1 - outage_k)` for a fixed
//! target rate `R_k`. The dual multipliers are `lambda` (average power),
//! `delta` (user 1 outage) and `mu` (user 2 outage). Per fading state the
//! transmitter minimizes
//!
//! ```text
//! (R1 + delta) X1 + (R2 + mu) X2 + lambda (p1 + p2)
//! ```
//!
//! where `X_k` flags an outage. A served user never needs more than the
//! least power meeting its target, so four candidates suffice: serve nobody,
//! either user alone, or both. Each is admitted only if it fits under the
//! peak power.

use serde::{Deserialize, Serialize};

use crate::channel::{FadingEnsemble, FadingState};
use crate::ellipsoid::{ellipsoid_minimize, Bounds, EllipsoidDiagnostics, EllipsoidOptions};
use crate::ergodic::{DualEval, DualTriple, FEASIBILITY_TOL};
use crate::error::{Error, Result};
use crate::rates::{
    noma_outage_indicators, oma2_outage_indicators, oma_min_power, sinr_threshold, StatePolicy,
    TargetRates,
};
use crate::reduce::{chunked_sum, Sums};
use crate::Scheme;

/// Tolerance on the OMA share used by the dual solvers.
pub const ALPHA_TOL: f64 = 1e-12;

/// Average power, peak power, target rates and the outage ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DltSpec {
    pub pbar: f64,
    pub phat: f64,
    pub targets: TargetRates,
    pub zetabar: f64,
}

impl DltSpec {
    pub fn new(pbar: f64, phat: f64, targets: TargetRates, zetabar: f64) -> Result<Self> {
        if !(pbar > 0.0) || !(phat > 0.0) || !pbar.is_finite() || !phat.is_finite() {
            return Err(Error::Domain(format!(
                "power budgets must be positive, got average {pbar} W and peak {phat} W"
            )));
        }
        if pbar > phat {
            return Err(Error::Domain(format!(
                "average budget {pbar} W exceeds peak budget {phat} W"
            )));
        }
        if !(0.0..=1.0).contains(&zetabar) {
            return Err(Error::Domain(format!("outage ceiling must lie in [0, 1], got {zetabar}")));
        }
        Ok(DltSpec {
            pbar,
            phat,
            targets,
            zetabar,
        })
    }
}

/// Per-state objective `w1 X1 + w2 X2 + price (p1 + p2)`, to be minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageWeights {
    pub w: [f64; 2],
    pub price: f64,
}

impl OutageWeights {
    pub fn from_duals(d: &DualTriple, t: &TargetRates) -> Self {
        OutageWeights {
            w: [t.rbar1 + d.delta, t.rbar2 + d.mu],
            price: d.lambda,
        }
    }
}

/// Chosen per-state policy with its outage flags and objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DltCandidate {
    pub policy: StatePolicy,
    pub indicators: [bool; 2],
    pub lagrangian: f64,
}

fn indicators(scheme: Scheme, p: &StatePolicy, st: &FadingState, t: &TargetRates) -> [bool; 2] {
    match scheme {
        Scheme::Noma => noma_outage_indicators(p, st, t),
        Scheme::Oma2 | Scheme::Oma1 => oma2_outage_indicators(p, st, t),
    }
}

/// Picks the lowest objective; ties go to fewer served users, then lower power.
fn pick(
    scheme: Scheme,
    st: &FadingState,
    t: &TargetRates,
    wt: &OutageWeights,
    phat: f64,
    cands: &[(StatePolicy, usize)],
) -> DltCandidate {
    let mut best: Option<(DltCandidate, usize)> = None;
    for &(pol, served) in cands {
        let total = pol.total_power();
        if !(total <= phat) {
            continue;
        }
        let x = indicators(scheme, &pol, st, t);
        let l = wt.w[0] * x[0] as u8 as f64 + wt.w[1] * x[1] as u8 as f64 + wt.price * total;
        let better = match &best {
            None => true,
            Some((b, bs)) => {
                l < b.lagrangian
                    || (l == b.lagrangian
                        && (served < *bs
                            || (served == *bs && total < b.policy.total_power())))
            }
        };
        if better {
            best = Some((
                DltCandidate {
                    policy: pol,
                    indicators: x,
                    lagrangian: l,
                },
                served,
            ));
        }
    }
    // the idle candidate is always admissible
    best.map(|b| b.0).expect("idle candidate fits any peak budget")
}

/// NOMA per-state minimizer for general weights.
pub fn solve_noma_outage_weighted(
    st: &FadingState,
    wt: &OutageWeights,
    t: &TargetRates,
    phat: f64,
) -> DltCandidate {
    let s = st.strong_user();
    let w = s.other();
    let (gs, gw) = (st.gain(s), st.gain(w));
    let (tau_s, tau_w) = (t.tau(s), t.tau(w));
    let ps = if tau_s > 0.0 { tau_s / gs } else { 0.0 };
    let pw_alone = if tau_w > 0.0 { tau_w / gw } else { 0.0 };
    let pw_both = if tau_w > 0.0 { tau_w * (ps + 1.0 / gw) } else { 0.0 };
    let cands = [
        (StatePolicy::IDLE, 0),
        (StatePolicy::from_roles(st, ps, 0.0, 0.0), 1),
        (StatePolicy::from_roles(st, 0.0, pw_alone, 0.0), 1),
        (StatePolicy::from_roles(st, ps, pw_both, 0.0), 2),
    ];
    pick(Scheme::Noma, st, t, wt, phat, &cands)
}

/// Per-state NOMA subproblem for given multipliers.
pub fn solve_p2_noma_sub(
    st: &FadingState,
    duals: &DualTriple,
    targets: &TargetRates,
    phat: f64,
) -> DltCandidate {
    solve_noma_outage_weighted(st, &OutageWeights::from_duals(duals, targets), targets, phat)
}

/// Derivative of `a (2^(r/a) - 1)` with respect to `a`, written in `x = r/a`.
fn share_slope(x: f64) -> f64 {
    let e = (x * std::f64::consts::LN_2).exp();
    if e.is_infinite() {
        return f64::NEG_INFINITY;
    }
    e * (1.0 - x * std::f64::consts::LN_2) - 1.0
}

/// Share of user 1 minimizing the total OMA power that meets both targets,
/// and that power. The objective is convex in the share, so its derivative
/// is bisected.
pub fn solve_alpha_min_power(st: &FadingState, t: &TargetRates, tol: f64) -> Result<(f64, f64)> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("share tolerance must be positive".into()));
    }
    let (r1, r2) = (t.rbar1, t.rbar2);
    let (g1, g2) = (st.g1, st.g2);
    match (r1 > 0.0, r2 > 0.0) {
        (false, false) => return Ok((0.5, 0.0)),
        (true, false) => return Ok((1.0, sinr_threshold(r1) / g1)),
        (false, true) => return Ok((0.0, sinr_threshold(r2) / g2)),
        (true, true) => {}
    }
    if !(g1 > 0.0 && g2 > 0.0) {
        return Ok((0.5, f64::INFINITY));
    }
    let slope = |a: f64| share_slope(r1 / a) / g1 - share_slope(r2 / (1.0 - a)) / g2;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = 0.5 * (lo + hi);
    Ok((a, oma_min_power(a, r1, g1) + oma_min_power(1.0 - a, r2, g2)))
}

fn oma2_candidates(st: &FadingState, t: &TargetRates, split: (f64, f64)) -> [(StatePolicy, usize); 4] {
    let p1 = oma_min_power(1.0, t.rbar1, st.g1);
    let p2 = oma_min_power(1.0, t.rbar2, st.g2);
    let a = split.0;
    let both = StatePolicy::new(
        oma_min_power(a, t.rbar1, st.g1),
        oma_min_power(1.0 - a, t.rbar2, st.g2),
        a,
    );
    [
        (StatePolicy::IDLE, 0),
        (StatePolicy::new(p1, 0.0, 1.0), 1),
        (StatePolicy::new(0.0, p2, 0.0), 1),
        (both, 2),
    ]
}

/// OMA-II per-state minimizer with the share split precomputed.
pub fn solve_oma2_outage_weighted(
    st: &FadingState,
    wt: &OutageWeights,
    t: &TargetRates,
    phat: f64,
    split: (f64, f64),
) -> DltCandidate {
    pick(Scheme::Oma2, st, t, wt, phat, &oma2_candidates(st, t, split))
}

/// Per-state OMA-II subproblem for given multipliers.
pub fn solve_p2_oma2_sub(
    st: &FadingState,
    duals: &DualTriple,
    targets: &TargetRates,
    phat: f64,
    tol: f64,
) -> Result<DltCandidate> {
    let split = solve_alpha_min_power(st, targets, tol)?;
    Ok(solve_oma2_outage_weighted(
        st,
        &OutageWeights::from_duals(duals, targets),
        targets,
        phat,
        split,
    ))
}

/// OMA-I per-state minimizer: the same four choices with the band split in half.
pub fn solve_oma1_outage_weighted(
    st: &FadingState,
    wt: &OutageWeights,
    t: &TargetRates,
    phat: f64,
) -> DltCandidate {
    let p1 = oma_min_power(0.5, t.rbar1, st.g1);
    let p2 = oma_min_power(0.5, t.rbar2, st.g2);
    let cands = [
        (StatePolicy::new(0.0, 0.0, 0.5), 0),
        (StatePolicy::new(p1, 0.0, 0.5), 1),
        (StatePolicy::new(0.0, p2, 0.5), 1),
        (StatePolicy::new(p1, p2, 0.5), 2),
    ];
    pick(Scheme::Oma1, st, t, wt, phat, &cands)
}

/// Per-state OMA-I subproblem for given multipliers.
pub fn solve_p2_oma1_sub(
    st: &FadingState,
    duals: &DualTriple,
    targets: &TargetRates,
    phat: f64,
) -> DltCandidate {
    solve_oma1_outage_weighted(st, &OutageWeights::from_duals(duals, targets), targets, phat)
}

/// Least total power to meet all targets with superposition coding
/// (`p_noma`) and with an optimal orthogonal split (`p_oma`).
///
/// `g_sorted` must be in descending order, with `targets[i]` belonging to
/// the user with gain `g_sorted[i]`. The superposition power decodes the
/// weakest user first:
/// `sum_i (2^{R_(K-i)} - 1) 2^{sum_{j<i} R_(K-j)} / g_(K-i)`.
pub fn lemma41_power_gap(g_sorted: &[f64], targets: &[f64], tol: f64) -> Result<(f64, f64)> {
    let k = g_sorted.len();
    if k == 0 || targets.len() != k {
        return Err(Error::Precondition("gains and targets must be nonempty and aligned".into()));
    }
    if g_sorted.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
        return Err(Error::Domain("gains must be positive and finite".into()));
    }
    if targets.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
        return Err(Error::Domain("targets must be finite and >= 0".into()));
    }
    if g_sorted.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Precondition("gains must be sorted in descending order".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }

    let mut p_noma = 0.0;
    let mut decoded = 0.0;
    for i in (0..k).rev() {
        p_noma += sinr_threshold(targets[i]) * (decoded * std::f64::consts::LN_2).exp() / g_sorted[i];
        decoded += targets[i];
    }

    let p_oma = if k == 2 {
        let st = FadingState::new(g_sorted[0], g_sorted[1]);
        solve_alpha_min_power(&st, &TargetRates::new(targets[0], targets[1])?, ALPHA_TOL)?.1
    } else {
        oma_min_power_many(g_sorted, targets)
    };
    if p_oma < p_noma - tol {
        return Err(Error::Consistency(format!(
            "orthogonal power {p_oma} below superposition power {p_noma}"
        )));
    }
    Ok((p_oma, p_noma))
}

/// Least orthogonal power for any number of users: each active share solves
/// `slope(R_k / a_k) = -nu g_k`, with `nu` set so that the shares sum to one.
fn oma_min_power_many(g: &[f64], r: &[f64]) -> f64 {
    let active: Vec<usize> = (0..g.len()).filter(|&i| r[i] > 0.0).collect();
    if active.is_empty() {
        return 0.0;
    }
    // x(nu) solves share_slope(x) = -target; share_slope falls from 0 to -inf
    let x_of = |target: f64| {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while share_slope(hi) > -target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if share_slope(mid) > -target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let shares = |nu: f64| -> Vec<f64> { active.iter().map(|&i| r[i] / x_of(nu * g[i])).collect() };
    let (mut lo, mut hi) = (1e-300f64, 1.0f64);
    while shares(hi).iter().sum::<f64>() > 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if shares(mid).iter().sum::<f64>() > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = shares(hi);
    let norm: f64 = a.iter().sum();
    active
        .iter()
        .zip(&a)
        .map(|(&i, &ai)| oma_min_power(ai / norm, r[i], g[i]))
        .sum()
}

/// Share splits for every state, reused across dual iterations.
pub fn alpha_cache(ens: &FadingEnsemble, t: &TargetRates) -> Result<Vec<(f64, f64)>> {
    use rayon::prelude::*;
    ens.states
        .par_iter()
        .map(|st| solve_alpha_min_power(st, t, ALPHA_TOL))
        .collect()
}

fn solve_state(
    scheme: Scheme,
    st: &FadingState,
    wt: &OutageWeights,
    t: &TargetRates,
    phat: f64,
    split: Option<(f64, f64)>,
) -> DltCandidate {
    match scheme {
        Scheme::Noma => solve_noma_outage_weighted(st, wt, t, phat),
        Scheme::Oma1 => solve_oma1_outage_weighted(st, wt, t, phat),
        Scheme::Oma2 => {
            let split = split.unwrap_or_else(|| {
                solve_alpha_min_power(st, t, ALPHA_TOL).unwrap_or((0.5, f64::INFINITY))
            });
            solve_oma2_outage_weighted(st, wt, t, phat, split)
        }
    }
}

fn average_outage(
    ens: &FadingEnsemble,
    scheme: Scheme,
    wt: &OutageWeights,
    t: &TargetRates,
    phat: f64,
    cache: Option<&[(f64, f64)]>,
) -> Sums {
    let n = ens.len() as f64;
    let s: Sums = chunked_sum(&ens.states, |i, st| {
        let c = solve_state(scheme, st, wt, t, phat, cache.map(|c| c[i]));
        Sums {
            objective: c.lagrangian,
            power: c.policy.total_power(),
            metric: [c.indicators[0] as u8 as f64, c.indicators[1] as u8 as f64],
        }
    });
    Sums {
        objective: s.objective / n,
        power: s.power / n,
        metric: [s.metric[0] / n, s.metric[1] / n],
    }
}

fn eval_with_cache(
    ens: &FadingEnsemble,
    duals: &DualTriple,
    spec: &DltSpec,
    scheme: Scheme,
    cache: Option<&[(f64, f64)]>,
) -> DualEval {
    let t = &spec.targets;
    let a = average_outage(ens, scheme, &OutageWeights::from_duals(duals, t), t, spec.phat, cache);
    DualEval {
        value: t.rbar1 + t.rbar2 - a.objective
            + duals.lambda * spec.pbar
            + (duals.delta + duals.mu) * spec.zetabar,
        subgradient: [
            spec.pbar - a.power,
            spec.zetabar - a.metric[0],
            spec.zetabar - a.metric[1],
        ],
        avg_power: a.power,
        avg_metric: a.metric,
    }
}

/// Dual value `R1 + R2 - E[min L] + lambda Pbar + (delta + mu) zetabar` and
/// its subgradient `(Pbar - E[p1 + p2], zetabar - E[X1], zetabar - E[X2])`.
pub fn eval_dlt_dual_and_subgradient(
    ens: &FadingEnsemble,
    duals: &DualTriple,
    spec: &DltSpec,
    scheme: Scheme,
) -> DualEval {
    eval_with_cache(ens, duals, spec, scheme, None)
}

/// Recovered delay-limited policy and its averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DltPrimal {
    pub policies: Vec<StatePolicy>,
    pub sum_dlt: f64,
    pub outages: [f64; 2],
    pub avg_power: f64,
    /// `E[p1 + p2] - Pbar`; positive means over budget.
    pub power_residual: f64,
    /// `outage_k - zetabar`; positive means the ceiling is exceeded.
    pub outage_residuals: [f64; 2],
    pub feasible: bool,
}

/// Averages throughput, outage and power of explicit per-state policies.
pub fn summarize_dlt_policies(
    ens: &FadingEnsemble,
    policies: Vec<StatePolicy>,
    spec: &DltSpec,
    scheme: Scheme,
) -> DltPrimal {
    let n = ens.len() as f64;
    let t = &spec.targets;
    let s: Sums = chunked_sum(&ens.states, |i, st| {
        let x = indicators(scheme, &policies[i], st, t);
        Sums {
            objective: 0.0,
            power: policies[i].total_power(),
            metric: [x[0] as u8 as f64, x[1] as u8 as f64],
        }
    });
    let outages = [s.metric[0] / n, s.metric[1] / n];
    let avg_power = s.power / n;
    let power_residual = avg_power - spec.pbar;
    let outage_residuals = [outages[0] - spec.zetabar, outages[1] - spec.zetabar];
    DltPrimal {
        policies,
        sum_dlt: t.rbar1 * (1.0 - outages[0]) + t.rbar2 * (1.0 - outages[1]),
        outages,
        avg_power,
        power_residual,
        outage_residuals,
        feasible: power_residual <= FEASIBILITY_TOL * spec.pbar
            && outage_residuals.iter().all(|&r| r <= FEASIBILITY_TOL),
    }
}

fn recover_with_cache(
    ens: &FadingEnsemble,
    duals: &DualTriple,
    spec: &DltSpec,
    scheme: Scheme,
    cache: Option<&[(f64, f64)]>,
) -> DltPrimal {
    use rayon::prelude::*;
    let t = &spec.targets;
    let wt = OutageWeights::from_duals(duals, t);
    let policies: Vec<StatePolicy> = ens
        .states
        .par_iter()
        .enumerate()
        .map(|(i, st)| solve_state(scheme, st, &wt, t, spec.phat, cache.map(|c| c[i])).policy)
        .collect();
    summarize_dlt_policies(ens, policies, spec, scheme)
}

/// Recovers per-state policies at the given multipliers.
pub fn recover_dlt_primal(
    ens: &FadingEnsemble,
    duals: &DualTriple,
    spec: &DltSpec,
    scheme: Scheme,
) -> DltPrimal {
    recover_with_cache(ens, duals, spec, scheme, None)
}

/// Outcome of a delay-limited dual solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DltSolution {
    pub duals: DualTriple,
    pub dual_value: f64,
    pub primal: DltPrimal,
    pub diagnostics: EllipsoidDiagnostics,
}

impl DltSolution {
    pub fn relative_gap(&self) -> f64 {
        (self.dual_value - self.primal.sum_dlt).abs() / self.dual_value.abs().max(1e-12)
    }
}

/// Minimizes the dual over nonnegative multipliers and recovers the policy.
pub fn solve_dlt(
    ens: &FadingEnsemble,
    spec: &DltSpec,
    scheme: Scheme,
    opts: &EllipsoidOptions,
) -> Result<DltSolution> {
    let cache = match scheme {
        Scheme::Oma2 => Some(alpha_cache(ens, &spec.targets)?),
        _ => None,
    };
    let res = ellipsoid_minimize(
        |x| {
            let e = eval_with_cache(ens, &DualTriple::from_slice(x), spec, scheme, cache.as_deref());
            (e.value, e.subgradient.to_vec())
        },
        &Bounds::orthant(3),
        opts,
    )?;
    let duals = DualTriple::from_slice(&res.x);
    let primal = recover_with_cache(ens, &duals, spec, scheme, cache.as_deref());
    Ok(DltSolution {
        duals,
        dual_value: res.value,
        primal,
        diagnostics: res.diagnostics,
    })
}

/// Smallest reachable common outage ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaMinResult {
    pub zeta_min: f64,
    pub lower: f64,
    pub steps: usize,
}

/// Is the common outage ceiling `zetabar` reachable within the power budgets?
///
/// Uses the min-max dual `q(lambda, w) = E[min w X1 + (1-w) X2 + lambda p] - lambda Pbar`,
/// whose maximum is the smallest reachable ceiling.
pub fn outage_ceiling_feasible(
    ens: &FadingEnsemble,
    pbar: f64,
    phat: f64,
    targets: &TargetRates,
    scheme: Scheme,
    zetabar: f64,
    cache: Option<&[(f64, f64)]>,
) -> Result<bool> {
    let opts = EllipsoidOptions {
        init_center: vec![1.0, 0.5],
        init_radius: 1e3,
        max_iter: 500,
        tol: 1e-7,
        decision_threshold: Some(-zetabar),
    };
    let bounds = Bounds {
        lower: vec![0.0, 0.0],
        upper: vec![f64::INFINITY, 1.0],
    };
    let r = ellipsoid_minimize(
        |x| {
            let (lambda, w) = (x[0], x[1]);
            let wt = OutageWeights {
                w: [w, 1.0 - w],
                price: lambda,
            };
            let a = average_outage(ens, scheme, &wt, targets, phat, cache);
            (
                -(a.objective - lambda * pbar),
                vec![pbar - a.power, a.metric[1] - a.metric[0]],
            )
        },
        &bounds,
        &opts,
    )?;
    Ok(r.value >= -zetabar)
}

/// Smallest feasible common outage ceiling, by bisection on `[0, 1]` to `tol`.
pub fn zetabar_min_bisection(
    ens: &FadingEnsemble,
    pbar: f64,
    phat: f64,
    targets: &TargetRates,
    scheme: Scheme,
    tol: f64,
) -> Result<ZetaMinResult> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("bisection tolerance must be positive".into()));
    }
    if !(pbar >= 0.0) || !(phat > 0.0) || pbar > phat {
        return Err(Error::Domain(format!("invalid budgets: average {pbar} W, peak {phat} W")));
    }
    let cache = match scheme {
        Scheme::Oma2 => Some(alpha_cache(ens, targets)?),
        _ => None,
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut steps = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if outage_ceiling_feasible(ens, pbar, phat, targets, scheme, mid, cache.as_deref())? {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    Ok(ZetaMinResult {
        zeta_min: hi,
        lower: lo,
        steps,
    })
}
