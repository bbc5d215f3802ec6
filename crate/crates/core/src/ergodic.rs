//! Ergodic sum-rate maximization with a minimum ergodic rate per user and
//! full channel knowledge at the transmitter.
//!
//! The problem is solved through its Lagrange dual. The multipliers are `lambda`
//! for the average power, plus `delta` and `mu` for the rate floors of users
//! 1 and 2. For fixed multipliers the dual decouples into one small problem
//! per fading state:
//!
//! ```text
//! maximize  (1 + delta) R1 + (1 + mu) R2 - lambda (p1 + p2)   over p >= 0, p1 + p2 <= P_peak
//! ```
//!
//! The per-state solvers here accept arbitrary nonnegative rate weights, so
//! the same code also serves the max-min feasibility problem behind
//! [`rmax_bisection`].
//!
//! For OMA-II the candidate list also contains a time-sharing point on the
//! peak-power face `p1 + p2 = P_peak`. There the best value is the concave
//! envelope of the two single-user curves. When their common tangent touches
//! one curve below `P_peak` and the other above it, splitting the band beats
//! both single-user vertices.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::{FadingEnsemble, FadingState, User};
use crate::ellipsoid::{ellipsoid_minimize, Bounds, EllipsoidDiagnostics, EllipsoidOptions};
use crate::error::{Error, Result};
use crate::rates::{
    log2_1p, noma_rate_cross, noma_rates_full, oma2_rates_full, oma_rate, sinr_threshold,
    StatePolicy,
};
use crate::reduce::{chunked_sum, Sums};
use crate::Scheme;

/// Multipliers of the average-power and the two rate-floor constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualTriple {
    pub lambda: f64,
    /// Multiplier of user 1's constraint.
    pub delta: f64,
    /// Multiplier of user 2's constraint.
    pub mu: f64,
}

impl DualTriple {
    pub fn new(lambda: f64, delta: f64, mu: f64) -> Result<Self> {
        for v in [lambda, delta, mu] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("multipliers must be finite and >= 0, got {v}")));
            }
        }
        Ok(DualTriple { lambda, delta, mu })
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.lambda, self.delta, self.mu]
    }

    pub(crate) fn from_slice(x: &[f64]) -> Self {
        DualTriple {
            lambda: x[0],
            delta: x[1],
            mu: x[2],
        }
    }
}

/// Per-state objective `w1 R1 + w2 R2 - price (p1 + p2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateWeights {
    pub w: [f64; 2],
    pub price: f64,
}

impl RateWeights {
    pub fn from_duals(d: &DualTriple) -> Self {
        RateWeights {
            w: [1.0 + d.delta, 1.0 + d.mu],
            price: d.lambda,
        }
    }

    fn get(&self, u: User) -> f64 {
        self.w[u.index()]
    }
}

/// Average power, peak power and rate floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicSpec {
    pub pbar: f64,
    pub phat: f64,
    pub rbar: f64,
}

impl ErgodicSpec {
    pub fn new(pbar: f64, phat: f64, rbar: f64) -> Result<Self> {
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
        if !(rbar >= 0.0) || !rbar.is_finite() {
            return Err(Error::Domain(format!("rate floor must be >= 0, got {rbar}")));
        }
        Ok(ErgodicSpec { pbar, phat, rbar })
    }
}

/// Best policy of one state with its objective value and rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubproblemSolution {
    pub policy: StatePolicy,
    pub objective: f64,
    pub rates: [f64; 2],
}

/// Water level `[a / (price ln 2) - 1/g]` before clipping.
fn water_level(a: f64, price: f64, g: f64) -> f64 {
    if g <= 0.0 || a <= 0.0 {
        return 0.0;
    }
    if price <= 0.0 {
        return f64::INFINITY;
    }
    a / (price * LN_2) - 1.0 / g
}

fn clip(x: f64, hi: f64) -> f64 {
    x.max(0.0).min(hi)
}

/// Keeps the better of two candidates: higher value, then lower power,
/// then the earlier one.
struct Best {
    value: f64,
    power: f64,
    p: (f64, f64, f64),
}

impl Best {
    fn new() -> Self {
        Best {
            value: f64::NEG_INFINITY,
            power: f64::INFINITY,
            p: (0.0, 0.0, 0.0),
        }
    }

    fn offer(&mut self, value: f64, a: f64, b: f64, c: f64) {
        let power = a + b;
        if value > self.value || (value == self.value && power < self.power) {
            self.value = value;
            self.power = power;
            self.p = (a, b, c);
        }
    }
}

/// NOMA per-state objective for powers given by role.
fn noma_value(wt: &RateWeights, gs: f64, gw: f64, a_s: f64, a_w: f64, ps: f64, pw: f64) -> f64 {
    a_s * log2_1p(ps * gs) + a_w * noma_rate_cross(ps, pw, gw) - wt.price * (ps + pw)
}

/// Per-state NOMA optimum for general weights.
///
/// Candidates: the three vertices of the power triangle, the water-filling
/// point on each single-user edge, the stationary point on the peak-power
/// face and the interior stationary point.
pub fn solve_noma_weighted(state: &FadingState, wt: &RateWeights, phat: f64) -> SubproblemSolution {
    let s = state.strong_user();
    let w = s.other();
    let (gs, gw) = (state.gain(s), state.gain(w));
    let (a_s, a_w) = (wt.get(s), wt.get(w));
    let val = |ps: f64, pw: f64| noma_value(wt, gs, gw, a_s, a_w, ps, pw);

    let mut best = Best::new();
    best.offer(0.0, 0.0, 0.0, 0.0);
    best.offer(val(0.0, phat), 0.0, phat, 0.0);
    best.offer(val(phat, 0.0), phat, 0.0, 0.0);
    let cw = clip(water_level(a_w, wt.price, gw), phat);
    best.offer(val(0.0, cw), 0.0, cw, 0.0);
    let cs = clip(water_level(a_s, wt.price, gs), phat);
    best.offer(val(cs, 0.0), cs, 0.0, 0.0);

    // On the face where both marginal SIC-free rates match:
    // a_s / (1/gs + ps) = a_w / (1/gw + ps).
    if (a_s - a_w).abs() >= 1e-12 * (1.0 + a_s + a_w) && gs > 0.0 && gw > 0.0 {
        let q = (a_w / gs - a_s / gw) / (a_s - a_w);
        if q.is_finite() {
            let (ps, pw) = (clip(q, phat), clip(phat - q, phat));
            best.offer(val(ps, pw), ps, pw, 0.0);
            if wt.price > 0.0 && a_w > 0.0 {
                let pw = a_w / (wt.price * LN_2) - 1.0 / gw - q;
                if q >= 0.0 && pw >= 0.0 && q + pw <= phat {
                    best.offer(val(q, pw), q, pw, 0.0);
                }
            }
        }
    }

    let (ps, pw, _) = best.p;
    let policy = StatePolicy::from_roles(state, ps, pw, 0.0);
    SubproblemSolution {
        policy,
        objective: best.value,
        rates: noma_rates_full(&policy, state),
    }
}

/// Time-sharing candidates on the face `p1 + p2 = phat`, as `(p1, p2, alpha1)`.
///
/// A common tangent of `u_k(t) = a_k log2(1 + g_k t)` with slope `s` touches
/// curve `k` at `t_k(s) = a_k / (s ln 2) - 1/g_k`. The intercepts
/// `I_k(s) = u_k(t_k) - s t_k` must match, and `I_1 - I_2` has derivative
/// `t_2 - t_1`, which changes sign at most once. So there are at most two
/// roots, found by bisection on each monotone piece.
fn face_time_share(a: [f64; 2], g: [f64; 2], phat: f64) -> Vec<(f64, f64, f64)> {
    if a.iter().chain(&g).any(|&v| !(v > 0.0)) {
        return Vec::new();
    }
    let t = |k: usize, s: f64| a[k] / (s * LN_2) - 1.0 / g[k];
    let intercept = |k: usize, s: f64| {
        let tk = t(k, s).max(0.0);
        a[k] * log2_1p(g[k] * tk) - s * tk
    };
    let d = |s: f64| intercept(0, s) - intercept(1, s);

    let s_max = (a[0] * g[0]).min(a[1] * g[1]) / LN_2;
    let s_lo = 0.5 * (0..2).map(|k| a[k] / (LN_2 * (phat + 1.0 / g[k]))).fold(f64::INFINITY, f64::min);
    if !(s_lo < s_max) {
        return Vec::new();
    }
    let mut knots = vec![s_lo];
    let denom = LN_2 * (1.0 / g[1] - 1.0 / g[0]);
    if denom != 0.0 {
        let s_e = (a[1] - a[0]) / denom;
        if s_e > s_lo && s_e < s_max {
            knots.push(s_e);
        }
    }
    knots.push(s_max);

    let mut out = Vec::new();
    for win in knots.windows(2) {
        let (mut lo, mut hi) = (win[0], win[1]);
        let (dlo, dhi) = (d(lo), d(hi));
        if dlo == 0.0 {
            hi = lo;
        } else if dhi == 0.0 {
            lo = hi;
        } else if dlo.signum() == dhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if !(mid > lo && mid < hi) {
                break;
            }
            if d(mid).signum() == dlo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        let (t1, t2) = (t(0, s), t(1, s));
        if !(t1 >= 0.0 && t2 >= 0.0) {
            continue;
        }
        let alpha1 = if t1 < phat && phat < t2 {
            (t2 - phat) / (t2 - t1)
        } else if t2 < phat && phat < t1 {
            (phat - t2) / (t1 - t2)
        } else {
            continue;
        };
        let p1 = alpha1 * t1;
        out.push((p1, phat - p1, alpha1));
    }
    out
}

/// Per-state OMA-II optimum for general weights.
pub fn solve_oma2_weighted(state: &FadingState, wt: &RateWeights, phat: f64) -> SubproblemSolution {
    let (g1, g2) = (state.g1, state.g2);
    let [a1, a2] = wt.w;
    let val = |p1: f64, p2: f64, al: f64| {
        a1 * oma_rate(al, p1, g1) + a2 * oma_rate(1.0 - al, p2, g2) - wt.price * (p1 + p2)
    };

    let mut best = Best::new();
    best.offer(0.0, 0.0, 0.0, 0.0);
    best.offer(val(0.0, phat, 0.0), 0.0, phat, 0.0);
    best.offer(val(phat, 0.0, 1.0), phat, 0.0, 1.0);
    let c2 = water_level(a2, wt.price, g2);
    if (0.0..=phat).contains(&c2) {
        best.offer(val(0.0, c2, 0.0), 0.0, c2, 0.0);
    }
    let c1 = water_level(a1, wt.price, g1);
    if (0.0..=phat).contains(&c1) {
        best.offer(val(c1, 0.0, 1.0), c1, 0.0, 1.0);
    }
    // The face can only matter when some user would like more than the peak.
    if c1 > phat || c2 > phat {
        for (p1, p2, al) in face_time_share([a1, a2], [g1, g2], phat) {
            best.offer(val(p1, p2, al), p1, p2, al);
        }
    }

    let (p1, p2, al) = best.p;
    let policy = StatePolicy::new(p1, p2, al);
    SubproblemSolution {
        policy,
        objective: best.value,
        rates: oma2_rates_full(&policy, state),
    }
}

/// Per-state optimum with the band split in half, by two-user water-filling
/// with an extra multiplier for the peak constraint.
pub fn solve_oma1_weighted(state: &FadingState, wt: &RateWeights, phat: f64) -> SubproblemSolution {
    let g = [state.g1, state.g2];
    // p_k(theta) = [A_k / theta - B_k]^+ with theta = price + peak multiplier
    let big_a = [wt.w[0] / (2.0 * LN_2), wt.w[1] / (2.0 * LN_2)];
    let big_b = [0.5 / g[0], 0.5 / g[1]];
    let at = |theta: f64| -> [f64; 2] {
        let mut p = [0.0; 2];
        for k in 0..2 {
            if big_a[k] > 0.0 && g[k] > 0.0 {
                p[k] = (big_a[k] / theta - big_b[k]).max(0.0);
            }
        }
        p
    };

    let mut p = if wt.price > 0.0 { at(wt.price) } else { [f64::INFINITY; 2] };
    if p[0] + p[1] > phat {
        let both = (big_a[0] + big_a[1]) / (phat + big_b[0] + big_b[1]);
        let pb = at(both);
        p = if pb[0] > 0.0 && pb[1] > 0.0 {
            [pb[0], phat - pb[0]]
        } else if wt.w[0] * g[0] >= wt.w[1] * g[1] && wt.w[0] * g[0] > 0.0 {
            // only the user that switches on first is active
            [phat, 0.0]
        } else if wt.w[1] * g[1] > 0.0 {
            [0.0, phat]
        } else {
            [0.0, 0.0]
        };
    }

    let policy = StatePolicy::new(p[0], p[1], 0.5);
    let rates = oma2_rates_full(&policy, state);
    let objective = wt.w[0] * rates[0] + wt.w[1] * rates[1] - wt.price * (p[0] + p[1]);
    SubproblemSolution {
        policy,
        objective,
        rates,
    }
}

/// Dispatches to the per-state solver of a scheme.
pub fn solve_weighted(
    scheme: Scheme,
    state: &FadingState,
    wt: &RateWeights,
    phat: f64,
) -> SubproblemSolution {
    match scheme {
        Scheme::Noma => solve_noma_weighted(state, wt, phat),
        Scheme::Oma2 => solve_oma2_weighted(state, wt, phat),
        Scheme::Oma1 => solve_oma1_weighted(state, wt, phat),
    }
}

/// Per-state NOMA subproblem for given multipliers.
pub fn solve_p1_noma_sub(state: &FadingState, duals: &DualTriple, phat: f64) -> SubproblemSolution {
    solve_noma_weighted(state, &RateWeights::from_duals(duals), phat)
}

/// Per-state OMA-II subproblem for given multipliers.
pub fn solve_p1_oma2_sub(state: &FadingState, duals: &DualTriple, phat: f64) -> SubproblemSolution {
    solve_oma2_weighted(state, &RateWeights::from_duals(duals), phat)
}

/// Per-state OMA-I subproblem for given multipliers.
pub fn solve_p1_oma1_sub(state: &FadingState, duals: &DualTriple, phat: f64) -> SubproblemSolution {
    solve_oma1_weighted(state, &RateWeights::from_duals(duals), phat)
}

/// Per-state NOMA objective of a user-labelled policy.
pub fn noma_lagrangian(policy: &StatePolicy, state: &FadingState, wt: &RateWeights) -> f64 {
    let r = noma_rates_full(policy, state);
    wt.w[0] * r[0] + wt.w[1] * r[1] - wt.price * policy.total_power()
}

/// Analytic gradient of [`noma_lagrangian`] with respect to `(p1, p2)`.
pub fn noma_lagrangian_gradient(policy: &StatePolicy, state: &FadingState, wt: &RateWeights) -> [f64; 2] {
    let s = state.strong_user();
    let w = s.other();
    let (gs, gw) = (state.gain(s), state.gain(w));
    let (ps, pw) = (policy.power(s), policy.power(w));
    let (a_s, a_w) = (wt.get(s), wt.get(w));
    let d_weak_total = a_w * gw / ((1.0 + (ps + pw) * gw) * LN_2);
    let d_ps = a_s * gs / ((1.0 + ps * gs) * LN_2) + d_weak_total - a_w * gw / ((1.0 + ps * gw) * LN_2)
        - wt.price;
    let d_pw = d_weak_total - wt.price;
    let mut grad = [0.0; 2];
    grad[s.index()] = d_ps;
    grad[w.index()] = d_pw;
    grad
}

/// Norm of the gradient of the per-state NOMA objective at an interior policy.
pub fn stationarity_residual_noma(
    policy: &StatePolicy,
    state: &FadingState,
    duals: &DualTriple,
) -> Result<f64> {
    if !(policy.p1 > 0.0 && policy.p2 > 0.0) {
        return Err(Error::Precondition(format!(
            "stationarity is checked at interior points only, got ({}, {})",
            policy.p1, policy.p2
        )));
    }
    let g = noma_lagrangian_gradient(policy, state, &RateWeights::from_duals(duals));
    Ok(g[0].hypot(g[1]))
}

/// Dual function value with its subgradient and the averages behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualEval {
    pub value: f64,
    pub subgradient: [f64; 3],
    pub avg_power: f64,
    /// Per-user averages: ergodic rates here, outage probabilities for delay-limited problems.
    pub avg_metric: [f64; 2],
}

fn average_weighted(
    ens: &FadingEnsemble,
    scheme: Scheme,
    wt: &RateWeights,
    phat: f64,
) -> Sums {
    let n = ens.len() as f64;
    let s: Sums = chunked_sum(&ens.states, |_, st| {
        let sol = solve_weighted(scheme, st, wt, phat);
        Sums {
            objective: sol.objective,
            power: sol.policy.total_power(),
            metric: sol.rates,
        }
    });
    Sums {
        objective: s.objective / n,
        power: s.power / n,
        metric: [s.metric[0] / n, s.metric[1] / n],
    }
}

/// Dual value `E[max L] + lambda Pbar - (delta + mu) Rbar` and its subgradient
/// `(Pbar - E[p1 + p2], E[R1] - Rbar, E[R2] - Rbar)`.
pub fn eval_dual_and_subgradient(
    ens: &FadingEnsemble,
    duals: &DualTriple,
    spec: &ErgodicSpec,
    scheme: Scheme,
) -> DualEval {
    let a = average_weighted(ens, scheme, &RateWeights::from_duals(duals), spec.phat);
    DualEval {
        value: a.objective + duals.lambda * spec.pbar - (duals.delta + duals.mu) * spec.rbar,
        subgradient: [
            spec.pbar - a.power,
            a.metric[0] - spec.rbar,
            a.metric[1] - spec.rbar,
        ],
        avg_power: a.power,
        avg_metric: a.metric,
    }
}

/// Slack allowed on constraints when judging a recovered policy feasible.
pub const FEASIBILITY_TOL: f64 = 1e-3;

/// Policy recovered from a set of multipliers, with its averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicPrimal {
    pub policies: Vec<StatePolicy>,
    pub esr: f64,
    pub rates: [f64; 2],
    pub avg_power: f64,
    /// `E[p1 + p2] - Pbar`; positive means over budget.
    pub power_residual: f64,
    /// `E[R_k] - Rbar`; negative means the floor is missed.
    pub rate_residuals: [f64; 2],
    /// States where both users get power and a share strictly inside (0, 1).
    pub two_user_states: usize,
    pub feasible: bool,
}

/// Recovers per-state policies at the given multipliers.
pub fn recover_primal(
    ens: &FadingEnsemble,
    duals: &DualTriple,
    spec: &ErgodicSpec,
    scheme: Scheme,
) -> ErgodicPrimal {
    let wt = RateWeights::from_duals(duals);
    let policies: Vec<StatePolicy> = {
        use rayon::prelude::*;
        ens.states
            .par_iter()
            .map(|st| solve_weighted(scheme, st, &wt, spec.phat).policy)
            .collect()
    };
    summarize_policies(ens, policies, spec, scheme)
}

/// Averages rates and power of explicit per-state policies.
pub fn summarize_policies(
    ens: &FadingEnsemble,
    policies: Vec<StatePolicy>,
    spec: &ErgodicSpec,
    scheme: Scheme,
) -> ErgodicPrimal {
    let n = ens.len() as f64;
    let s: Sums = chunked_sum(&ens.states, |i, st| {
        let pol = &policies[i];
        let r = match scheme {
            Scheme::Noma => noma_rates_full(pol, st),
            Scheme::Oma2 | Scheme::Oma1 => oma2_rates_full(pol, st),
        };
        Sums {
            objective: r[0] + r[1],
            power: pol.total_power(),
            metric: r,
        }
    });
    let two_user_states = match scheme {
        Scheme::Noma => 0,
        _ => policies
            .iter()
            .filter(|p| p.p1 > 0.0 && p.p2 > 0.0 && p.alpha1 > 0.0 && p.alpha1 < 1.0)
            .count(),
    };
    let rates = [s.metric[0] / n, s.metric[1] / n];
    let avg_power = s.power / n;
    let power_residual = avg_power - spec.pbar;
    let rate_residuals = [rates[0] - spec.rbar, rates[1] - spec.rbar];
    let feasible = power_residual <= FEASIBILITY_TOL * spec.pbar
        && rate_residuals.iter().all(|&r| r >= -FEASIBILITY_TOL);
    ErgodicPrimal {
        policies,
        esr: s.objective / n,
        rates,
        avg_power,
        power_residual,
        rate_residuals,
        two_user_states,
        feasible,
    }
}

/// Outcome of a dual solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicSolution {
    pub duals: DualTriple,
    pub dual_value: f64,
    pub primal: ErgodicPrimal,
    pub diagnostics: EllipsoidDiagnostics,
}

impl ErgodicSolution {
    /// `|dual - primal|` relative to the dual value.
    pub fn relative_gap(&self) -> f64 {
        (self.dual_value - self.primal.esr).abs() / self.dual_value.abs().max(1e-12)
    }
}

/// Minimizes the dual over nonnegative multipliers and recovers the policy.
pub fn solve_ergodic(
    ens: &FadingEnsemble,
    spec: &ErgodicSpec,
    scheme: Scheme,
    opts: &EllipsoidOptions,
) -> Result<ErgodicSolution> {
    let res = ellipsoid_minimize(
        |x| {
            let d = DualTriple::from_slice(x);
            let e = eval_dual_and_subgradient(ens, &d, spec, scheme);
            (e.value, e.subgradient.to_vec())
        },
        &Bounds::orthant(3),
        opts,
    )?;
    let duals = DualTriple::from_slice(&res.x);
    let primal = recover_primal(ens, &duals, spec, scheme);
    Ok(ErgodicSolution {
        duals,
        dual_value: res.value,
        primal,
        diagnostics: res.diagnostics,
    })
}

/// Largest common rate floor and how it was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmaxResult {
    pub rmax: f64,
    pub upper: f64,
    pub steps: usize,
}

/// Max-min dual `h(lambda, w) = E[max w R1 + (1-w) R2 - lambda p] + lambda Pbar`.
fn maxmin_dual(ens: &FadingEnsemble, scheme: Scheme, pbar: f64, phat: f64, x: &[f64]) -> (f64, Vec<f64>) {
    let (lambda, w) = (x[0], x[1]);
    let wt = RateWeights {
        w: [w, 1.0 - w],
        price: lambda,
    };
    let a = average_weighted(ens, scheme, &wt, phat);
    (
        a.objective + lambda * pbar,
        vec![pbar - a.power, a.metric[0] - a.metric[1]],
    )
}

/// Is a common rate floor `rbar` reachable? Decided by minimizing the
/// max-min dual with `rbar` as the decision threshold.
pub fn rate_floor_feasible(
    ens: &FadingEnsemble,
    pbar: f64,
    phat: f64,
    scheme: Scheme,
    rbar: f64,
) -> Result<bool> {
    let opts = EllipsoidOptions {
        init_center: vec![1.0, 0.5],
        init_radius: 1e3,
        max_iter: 500,
        tol: 1e-7,
        decision_threshold: Some(rbar),
    };
    let bounds = Bounds {
        lower: vec![0.0, 0.0],
        upper: vec![f64::INFINITY, 1.0],
    };
    let r = ellipsoid_minimize(|x| maxmin_dual(ens, scheme, pbar, phat, x), &bounds, &opts)?;
    Ok(r.value >= rbar)
}

/// Largest `Rbar` with a feasible rate-floor problem, by bisection to `tol`.
pub fn rmax_bisection(
    ens: &FadingEnsemble,
    pbar: f64,
    phat: f64,
    scheme: Scheme,
    tol: f64,
) -> Result<RmaxResult> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("bisection tolerance must be positive".into()));
    }
    if !(pbar >= 0.0) || !(phat > 0.0) || pbar > phat {
        return Err(Error::Domain(format!("invalid budgets: average {pbar} W, peak {phat} W")));
    }
    if pbar == 0.0 {
        return Ok(RmaxResult {
            rmax: 0.0,
            upper: 0.0,
            steps: 0,
        });
    }
    // any dual value bounds the max-min rate from above
    let (mut hi, _) = maxmin_dual(ens, scheme, pbar, phat, &[0.0, 0.5]);
    let mut lo = 0.0;
    let mut steps = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if rate_floor_feasible(ens, pbar, phat, scheme, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    Ok(RmaxResult {
        rmax: lo,
        upper: hi,
        steps,
    })
}

/// NOMA policies reproducing the rates of given OMA policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NomaConstruction {
    pub policies: Vec<StatePolicy>,
    pub oma_rates: [f64; 2],
    pub noma_rates: [f64; 2],
    pub oma_power: f64,
    pub noma_power: f64,
    /// OMA states serving both users at once.
    pub two_user_states: usize,
}

/// Least NOMA power delivering `rates` in one state.
pub fn noma_min_power_policy(state: &FadingState, rates: [f64; 2]) -> StatePolicy {
    let s = state.strong_user();
    let w = s.other();
    let (rs, rw) = (rates[s.index()], rates[w.index()]);
    let ps = if rs > 0.0 { sinr_threshold(rs) / state.gain(s) } else { 0.0 };
    let pw = if rw > 0.0 {
        sinr_threshold(rw) * (ps + 1.0 / state.gain(w))
    } else {
        0.0
    };
    StatePolicy::from_roles(state, ps, pw, 0.0)
}

/// Maps every OMA-II state to the cheapest NOMA policy with the same rates.
///
/// Single-user states map to themselves. States serving both users get
/// superposition powers, which never cost more than the orthogonal split.
pub fn noma_dominates_oma2_construction(
    ens: &FadingEnsemble,
    oma_policies: &[StatePolicy],
) -> Result<NomaConstruction> {
    if oma_policies.len() != ens.len() {
        return Err(Error::Precondition(format!(
            "{} policies for {} states",
            oma_policies.len(),
            ens.len()
        )));
    }
    let mut out = NomaConstruction {
        policies: Vec::with_capacity(ens.len()),
        oma_rates: [0.0; 2],
        noma_rates: [0.0; 2],
        oma_power: 0.0,
        noma_power: 0.0,
        two_user_states: 0,
    };
    for (st, pol) in ens.states.iter().zip(oma_policies) {
        let r = oma2_rates_full(pol, st);
        let np = noma_min_power_policy(st, r);
        let nr = noma_rates_full(&np, st);
        if pol.p1 > 0.0 && pol.p2 > 0.0 && pol.alpha1 > 0.0 && pol.alpha1 < 1.0 {
            out.two_user_states += 1;
        }
        for k in 0..2 {
            out.oma_rates[k] += r[k];
            out.noma_rates[k] += nr[k];
        }
        out.oma_power += pol.total_power();
        out.noma_power += np.total_power();
        out.policies.push(np);
    }
    let n = ens.len() as f64;
    for k in 0..2 {
        out.oma_rates[k] /= n;
        out.noma_rates[k] /= n;
    }
    out.oma_power /= n;
    out.noma_power /= n;
    Ok(out)
}
