//! Instantaneous rates and outage indicators for superposition coding (NOMA)
//! and adaptive orthogonal sharing (OMA) in one fading state.
//!
//! Under NOMA the user with the larger gain decodes and cancels the other
//! user's message first, so it sees no interference. The weaker user treats
//! the stronger user's signal as noise. Under OMA user 1 gets a share `alpha1`
//! of the resource and user 2 the rest.
//!
//! Outage comparisons are done in the SINR domain: a rate meets a target `R`
//! exactly when the SINR reaches `2^R - 1`. A relative slack of
//! [`TARGET_REL_TOL`] absorbs the rounding of powers computed as the exact
//! minimum needed to reach a target.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::{FadingState, User};
use crate::error::{Error, Result};

/// Relative slack under which an SINR counts as meeting its threshold.
pub const TARGET_REL_TOL: f64 = 1e-12;

/// `log2(1 + x)` computed through `ln_1p`.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// `2^r - 1`, the SINR needed to carry `r` bits/s/Hz.
#[inline]
pub fn sinr_threshold(r: f64) -> f64 {
    (r * LN_2).exp_m1()
}

#[inline]
fn meets(sinr: f64, tau: f64) -> bool {
    sinr >= tau * (1.0 - TARGET_REL_TOL)
}

/// Transmit powers of both users in one state, plus user 1's OMA share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatePolicy {
    pub p1: f64,
    pub p2: f64,
    /// Fraction of time/frequency given to user 1. Ignored by NOMA.
    pub alpha1: f64,
}

impl StatePolicy {
    pub const IDLE: StatePolicy = StatePolicy {
        p1: 0.0,
        p2: 0.0,
        alpha1: 0.0,
    };

    pub fn new(p1: f64, p2: f64, alpha1: f64) -> Self {
        StatePolicy { p1, p2, alpha1 }
    }

    pub fn power(&self, user: User) -> f64 {
        match user {
            User::One => self.p1,
            User::Two => self.p2,
        }
    }

    pub fn share(&self, user: User) -> f64 {
        match user {
            User::One => self.alpha1,
            User::Two => 1.0 - self.alpha1,
        }
    }

    pub fn total_power(&self) -> f64 {
        self.p1 + self.p2
    }

    /// Builds a policy from per-role powers `(strong, weak)` in a given state.
    pub fn from_roles(state: &FadingState, p_strong: f64, p_weak: f64, alpha1: f64) -> Self {
        match state.strong_user() {
            User::One => StatePolicy::new(p_strong, p_weak, alpha1),
            User::Two => StatePolicy::new(p_weak, p_strong, alpha1),
        }
    }
}

/// Target rates of the two users in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRates {
    pub rbar1: f64,
    pub rbar2: f64,
}

impl TargetRates {
    pub fn new(rbar1: f64, rbar2: f64) -> Result<Self> {
        for r in [rbar1, rbar2] {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::Domain(format!("target rate must be finite and >= 0, got {r}")));
            }
        }
        Ok(TargetRates { rbar1, rbar2 })
    }

    pub fn get(&self, user: User) -> f64 {
        match user {
            User::One => self.rbar1,
            User::Two => self.rbar2,
        }
    }

    /// SINR threshold `2^R - 1` of a user.
    pub fn tau(&self, user: User) -> f64 {
        sinr_threshold(self.get(user))
    }
}

/// Rate at which a receiver with gain `g` decodes the *other* user's message
/// while its own signal (power `p_own`) acts as noise.
pub fn noma_rate_cross(p_own: f64, p_other: f64, g: f64) -> f64 {
    log2_1p(p_other * g / (p_own * g + 1.0))
}

/// NOMA rates `[user 1, user 2]` with full channel knowledge at the transmitter.
pub fn noma_rates_full(policy: &StatePolicy, state: &FadingState) -> [f64; 2] {
    let s = state.strong_user();
    let w = s.other();
    let (gs, gw) = (state.gain(s), state.gain(w));
    let (ps, pw) = (policy.power(s), policy.power(w));
    let mut out = [0.0; 2];
    out[s.index()] = log2_1p(ps * gs);
    out[w.index()] = noma_rate_cross(ps, pw, gw);
    out
}

/// Rate of one OMA user with share `alpha` and power `p`; zero when `alpha = 0`.
#[inline]
pub fn oma_rate(alpha: f64, p: f64, g: f64) -> f64 {
    if alpha <= 0.0 {
        0.0
    } else {
        alpha * log2_1p(p * g / alpha)
    }
}

/// Smallest power giving rate `r` on share `alpha` with gain `g`.
pub fn oma_min_power(alpha: f64, r: f64, g: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else if alpha <= 0.0 {
        f64::INFINITY
    } else {
        alpha * sinr_threshold(r / alpha) / g
    }
}

/// OMA rates `[user 1, user 2]` with adaptive share.
pub fn oma2_rates_full(policy: &StatePolicy, state: &FadingState) -> [f64; 2] {
    [
        oma_rate(policy.alpha1, policy.p1, state.g1),
        oma_rate(1.0 - policy.alpha1, policy.p2, state.g2),
    ]
}

/// NOMA rates when the transmitter only knows which user is stronger:
/// the strong user always gets `ps` and the weak one `pw`.
pub fn noma_rates_partial(ps: f64, pw: f64, state: &FadingState) -> [f64; 2] {
    noma_rates_full(&StatePolicy::from_roles(state, ps, pw, 0.0), state)
}

/// OMA rates under the same binary power rule, with a fixed share `alpha1`.
pub fn oma2_rates_partial(ps: f64, pw: f64, alpha1: f64, state: &FadingState) -> [f64; 2] {
    oma2_rates_full(&StatePolicy::from_roles(state, ps, pw, alpha1), state)
}

/// NOMA outage indicators `[user 1, user 2]`; `true` means outage.
///
/// The strong user first tries to decode the weak user's message at its
/// target rate. On success it decodes its own message interference-free,
/// otherwise it decodes its own message treating the other as noise.
pub fn noma_outage_indicators(
    policy: &StatePolicy,
    state: &FadingState,
    targets: &TargetRates,
) -> [bool; 2] {
    let s = state.strong_user();
    let w = s.other();
    let (gs, gw) = (state.gain(s), state.gain(w));
    let (ps, pw) = (policy.power(s), policy.power(w));
    let (tau_s, tau_w) = (targets.tau(s), targets.tau(w));

    let sic_ok = meets(pw * gs / (ps * gs + 1.0), tau_w);
    let own_sinr = if sic_ok {
        ps * gs
    } else {
        ps * gs / (pw * gs + 1.0)
    };
    let mut out = [false; 2];
    out[s.index()] = !meets(own_sinr, tau_s);
    out[w.index()] = !meets(pw * gw / (ps * gw + 1.0), tau_w);
    out
}

fn oma_outage(alpha: f64, p: f64, g: f64, r: f64) -> bool {
    if r <= 0.0 {
        return false;
    }
    if alpha <= 0.0 {
        return true;
    }
    !meets(p * g / alpha, sinr_threshold(r / alpha))
}

/// OMA outage indicators `[user 1, user 2]`, one independent test per user.
pub fn oma2_outage_indicators(
    policy: &StatePolicy,
    state: &FadingState,
    targets: &TargetRates,
) -> [bool; 2] {
    [
        oma_outage(policy.alpha1, policy.p1, state.g1, targets.rbar1),
        oma_outage(1.0 - policy.alpha1, policy.p2, state.g2, targets.rbar2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn cross_rate() {
        assert!(close(noma_rate_cross(0.0, 1.0, 1.0), 1.0));
        assert_eq!(noma_rate_cross(1.0, 0.0, 7.0), 0.0);
        assert!(close(noma_rate_cross(1.0, 2.0, 3.0), (1.0f64 + 6.0 / 4.0).log2()));
    }

    #[test]
    fn full_noma_rates() {
        let st = FadingState::new(2.0, 1.0);
        let r = noma_rates_full(&StatePolicy::new(1.0, 0.0, 0.0), &st);
        assert!(close(r[0], 3f64.log2()) && r[1] == 0.0);
        assert_eq!(noma_rates_full(&StatePolicy::IDLE, &st), [0.0, 0.0]);
        let r = noma_rates_full(&StatePolicy::new(1.0, 2.0, 0.0), &st);
        assert!(close(r[0], 3f64.log2()) && close(r[1], 1.0));
        // roles follow the gains, not the labels
        let r = noma_rates_full(&StatePolicy::new(2.0, 1.0, 0.0), &FadingState::new(1.0, 2.0));
        assert!(close(r[1], 3f64.log2()) && close(r[0], 1.0));
    }

    #[test]
    fn full_oma_rates() {
        let st = FadingState::new(2.0, 1.0);
        let r = oma2_rates_full(&StatePolicy::new(3.0, 0.0, 1.0), &st);
        assert!(close(r[0], 7f64.log2()) && r[1] == 0.0);
        let r = oma2_rates_full(&StatePolicy::new(3.0, 1.0, 0.0), &st);
        assert_eq!(r[0], 0.0);
        assert!(close(r[1], 1.0));
        let r = oma2_rates_full(&StatePolicy::new(1.0, 0.0, 0.5), &st);
        assert!(close(r[0], 0.5 * 5f64.log2()));
    }

    #[test]
    fn partial_rates() {
        let st = FadingState::new(3.0, 1.0);
        let r = noma_rates_partial(1.0, 0.0, &st);
        assert!(close(r[0], 2.0) && r[1] == 0.0);
        let r = noma_rates_partial(0.0, 1.0, &st);
        assert!(r[0] == 0.0 && close(r[1], 1.0));
        let r = noma_rates_partial(1.0, 2.0, &FadingState::new(2.0, 1.0));
        assert!(close(r[0], 3f64.log2()) && close(r[1], 1.0));

        let r = oma2_rates_partial(1.0, 0.0, 0.5, &st);
        assert!(close(r[0], 0.5 * 7f64.log2()) && r[1] == 0.0);
        let r = oma2_rates_partial(0.0, 1.0, 0.25, &st);
        assert!(r[0] == 0.0 && close(r[1], 0.75 * (1.0f64 + 1.0 / 0.75).log2()));
        let r = oma2_rates_partial(1.0, 2.0, 0.5, &FadingState::new(1.0, 2.0));
        assert!(close(r[1], 0.5 * 5f64.log2()) && close(r[0], 0.5 * 5f64.log2()));
    }

    #[test]
    fn noma_indicators() {
        let t = TargetRates::new(1.0, 1.0).unwrap();
        let st = FadingState::new(2.0, 1.0);
        assert_eq!(noma_outage_indicators(&StatePolicy::IDLE, &st, &t), [true, true]);
        let zero = TargetRates::new(0.0, 0.0).unwrap();
        assert_eq!(noma_outage_indicators(&StatePolicy::IDLE, &st, &zero), [false, false]);

        // minimum powers meeting both targets exactly
        for &(g1, g2, r1, r2) in &[(2.0, 1.0, 1.0, 1.0), (37.0, 0.3, 2.0, 0.7), (1e4, 9.0, 3.0, 2.0)] {
            let t = TargetRates::new(r1, r2).unwrap();
            let ps = t.tau(User::One) / g1;
            let pw = t.tau(User::Two) * (ps + 1.0 / g2);
            let st = FadingState::new(g1, g2);
            let pol = StatePolicy::new(ps, pw, 0.0);
            assert_eq!(noma_outage_indicators(&pol, &st, &t), [false, false]);
            let r = noma_rates_full(&pol, &st);
            assert!((r[0] - r1).abs() < 1e-9 && (r[1] - r2).abs() < 1e-9);
        }
    }

    #[test]
    fn strong_user_falls_back_to_treating_interference_as_noise() {
        // weak message too fast for SIC: strong user decodes its own message
        // against the weak user's signal
        let st = FadingState::new(2.0, 1.0);
        let t = TargetRates::new(0.5, 5.0).unwrap();
        let pol = StatePolicy::new(1.0, 0.1, 0.0);
        let own = 1.0 * 2.0 / (0.1 * 2.0 + 1.0);
        assert!(own >= t.tau(User::One));
        assert_eq!(noma_outage_indicators(&pol, &st, &t), [false, true]);
    }

    #[test]
    fn oma_indicators() {
        let st = FadingState::new(2.0, 1.0);
        let t = TargetRates::new(1.0, 1.0).unwrap();
        assert_eq!(oma2_outage_indicators(&StatePolicy::IDLE, &st, &t), [true, true]);
        // exactly on target: not an outage
        let p1 = oma_min_power(0.5, 1.0, 2.0);
        let p2 = oma_min_power(0.5, 1.0, 1.0);
        let pol = StatePolicy::new(p1, p2, 0.5);
        assert_eq!(oma2_outage_indicators(&pol, &st, &t), [false, false]);
        let r = oma2_rates_full(&pol, &st);
        assert!(close(r[0], 1.0) && close(r[1], 1.0));
        let pol = StatePolicy::new(p1 * 0.99, p2, 0.5);
        assert_eq!(oma2_outage_indicators(&pol, &st, &t), [true, false]);
    }
}
