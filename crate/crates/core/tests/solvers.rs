mod common;

use common::*;
use noma_tradeoff::channel::noise_power;
use noma_tradeoff::dlt::{
    eval_dlt_dual_and_subgradient, lemma41_power_gap, solve_dlt, solve_p2_noma_sub, solve_p2_oma2_sub, DltSpec,
};
use noma_tradeoff::ellipsoid::EllipsoidOptions;
use noma_tradeoff::ergodic::{
    eval_dual_and_subgradient, solve_ergodic, solve_p1_noma_sub, solve_p1_oma2_sub, DualTriple, ErgodicSpec,
};
use noma_tradeoff::{draw_ensemble, FadingState, Scheme, TargetRates, UserProfile};
use proptest::prelude::*;

const GRID: usize = 150;

fn small_ensemble() -> noma_tradeoff::FadingEnsemble {
    let s2 = noise_power(-169.0, 1e7).unwrap();
    let pr = [
        UserProfile::from_distance(0.3, s2).unwrap(),
        UserProfile::from_distance(0.6, s2).unwrap(),
    ];
    draw_ensemble(&pr, 60, 4).unwrap()
}

fn grid3(range: [f64; 3], n: usize) -> Vec<DualTriple> {
    let mut v = vec![];
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let s = |t: usize, r: f64| r * t as f64 / n as f64;
                v.push(DualTriple::new(s(i, range[0]), s(j, range[1]), s(k, range[2])).unwrap());
            }
        }
    }
    v
}

#[test]
fn ergodic_dual_minimum_below_grid() {
    let ens = small_ensemble();
    let spec = ErgodicSpec::new(1.0, 5.0, 2.0).unwrap();
    let sol = solve_ergodic(&ens, &spec, Scheme::Noma, &EllipsoidOptions::dual()).unwrap();
    let grid_min = grid3([1.0, 2.0, 2.0], 20)
        .iter()
        .map(|d| eval_dual_and_subgradient(&ens, d, &spec, Scheme::Noma).value)
        .fold(f64::INFINITY, f64::min);
    let tol = EllipsoidOptions::dual().tol * (1.0 + grid_min.abs());
    assert!(sol.dual_value <= grid_min + tol, "{} vs {grid_min}", sol.dual_value);
    // weak duality against the recovered policy
    if sol.primal.feasible {
        assert!(sol.primal.esr <= sol.dual_value + 1e-3);
    }
}

#[test]
fn outage_dual_minimum_below_grid() {
    let ens = small_ensemble();
    let t = TargetRates::new(1.5, 1.0).unwrap();
    let spec = DltSpec::new(1.0, 5.0, t, 0.2).unwrap();
    let sol = solve_dlt(&ens, &spec, Scheme::Noma, &EllipsoidOptions::dual()).unwrap();
    let grid_min = grid3([2.0, 4.0, 4.0], 20)
        .iter()
        .map(|d| eval_dlt_dual_and_subgradient(&ens, d, &spec, Scheme::Noma).value)
        .fold(f64::INFINITY, f64::min);
    let tol = EllipsoidOptions::dual().tol * (1.0 + grid_min.abs());
    assert!(sol.dual_value <= grid_min + tol, "{} vs {grid_min}", sol.dual_value);
    assert!(sol.primal.sum_dlt <= sol.dual_value + 1e-3);
}

fn state() -> impl Strategy<Value = FadingState> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| FadingState::new(10f64.powf(a), 10f64.powf(b)))
}

fn duals() -> impl Strategy<Value = DualTriple> {
    (0.01f64..2.0, 0.0f64..2.0, 0.0f64..2.0).prop_map(|(l, d, m)| DualTriple::new(l, d, m).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rate_noma_beats_grid(st in state(), d in duals(), phat in 0.5f64..5.0) {
        let c = solve_p1_noma_sub(&st, &d, phat);
        let a = [1.0 + d.delta, 1.0 + d.mu];
        let g = grid_p1_noma([st.g1, st.g2], a, d.lambda, phat, GRID);
        prop_assert!(c.objective >= g - 1e-9);
        prop_assert!(c.policy.total_power() <= phat * (1.0 + 1e-12));
    }

    #[test]
    fn rate_oma_beats_grid(st in state(), d in duals(), phat in 0.5f64..5.0) {
        let c = solve_p1_oma2_sub(&st, &d, phat);
        let a = [1.0 + d.delta, 1.0 + d.mu];
        let g = grid_p1_oma([st.g1, st.g2], a, d.lambda, phat, GRID, GRID, None);
        prop_assert!(c.objective >= g - 1e-9);
    }

    #[test]
    fn outage_noma_beats_grid(st in state(), d in duals(), phat in 0.5f64..5.0, r1 in 0.1f64..3.0, r2 in 0.1f64..3.0) {
        let t = TargetRates::new(r1, r2).unwrap();
        let c = solve_p2_noma_sub(&st, &d, &t, phat);
        let w = [r1 + d.delta, r2 + d.mu];
        let g = grid_p2_noma([st.g1, st.g2], [r1, r2], w, d.lambda, phat, GRID);
        prop_assert!(c.lagrangian <= g + 1e-9);
    }

    #[test]
    fn outage_oma_beats_grid(st in state(), d in duals(), phat in 0.5f64..5.0, r1 in 0.1f64..3.0, r2 in 0.1f64..3.0) {
        let t = TargetRates::new(r1, r2).unwrap();
        let c = solve_p2_oma2_sub(&st, &d, &t, phat, 1e-12).unwrap();
        let w = [r1 + d.delta, r2 + d.mu];
        let g = grid_p2_oma([st.g1, st.g2], [r1, r2], w, d.lambda, phat, GRID, GRID, None);
        prop_assert!(c.lagrangian <= g + 1e-9);
    }

    #[test]
    fn superposition_needs_less_power(
        mut g in prop::collection::vec(0.05f64..20.0, 2..5),
        t in prop::collection::vec(0.0f64..3.0, 4),
    ) {
        g.sort_by(|a, b| b.total_cmp(a));
        let t = &t[..g.len()];
        let (po, pn) = lemma41_power_gap(&g, t, 1e-9).unwrap();
        prop_assert!(po >= pn - 1e-9 * (1.0 + pn));
    }
}
