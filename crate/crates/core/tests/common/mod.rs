//! Independent reference computations shared by the integration tests:
//! quadrature for the exponential integral, brute-force grids for the
//! per-state problems, direct sample averages, and an LP over mixtures of
//! grid policies.

#![allow(dead_code)]

use std::f64::consts::LN_2;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use noma_tradeoff::{FadingEnsemble, FadingState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * r.random::<f64>()).exp()
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

// ---------------------------------------------------------------- quadrature

fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
}

/// Adaptive Simpson with Richardson correction on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, eps: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, eps, 60)
}

/// `e^x E1(x) = int_0^inf e^-t / (x + t) dt`, mapped to `[0, 1)` by
/// `t = s / (1 - s)` and integrated piecewise around the scale `x`.
pub fn scaled_e1_quadrature(x: f64) -> f64 {
    let g = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let t = s / (1.0 - s);
        (-t).exp() / ((x + t) * (1.0 - s) * (1.0 - s))
    };
    let mut knots: Vec<f64> = vec![0.0];
    for t in [x * 0.1, x, x * 10.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0] {
        knots.push(t / (1.0 + t));
    }
    knots.push(1.0);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    // rough size first, so the tolerance can be relative
    let rough: f64 = knots
        .windows(2)
        .map(|w| adaptive_simpson(g, w[0], w[1], 1e-6))
        .sum();
    let eps = rough * 1e-15 / knots.len() as f64;
    knots
        .windows(2)
        .map(|w| adaptive_simpson(g, w[0], w[1], eps))
        .sum()
}

// ------------------------------------------------------------ per-state rates

pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// NOMA rates by role: strong decodes interference-free, weak treats the
/// strong signal as noise. Returns `[user 1, user 2]`.
pub fn noma_rates(g: [f64; 2], p: [f64; 2]) -> [f64; 2] {
    let s = if g[0] >= g[1] { 0 } else { 1 };
    let w = 1 - s;
    let mut r = [0.0; 2];
    r[s] = log2_1p(p[s] * g[s]);
    r[w] = log2_1p(p[w] * g[w] / (p[s] * g[w] + 1.0));
    r
}

pub fn oma_rate(alpha: f64, p: f64, g: f64) -> f64 {
    if alpha <= 0.0 {
        0.0
    } else {
        alpha * log2_1p(p * g / alpha)
    }
}

const RATE_SLACK: f64 = 1e-11;

/// NOMA outage flags in the rate domain: the strong receiver first tries to
/// decode the weak message, then its own with or without interference.
pub fn noma_outage(g: [f64; 2], p: [f64; 2], r: [f64; 2]) -> [bool; 2] {
    let s = if g[0] >= g[1] { 0 } else { 1 };
    let w = 1 - s;
    let weak_at_strong = log2_1p(p[w] * g[s] / (p[s] * g[s] + 1.0));
    let own = if weak_at_strong >= r[w] - RATE_SLACK {
        log2_1p(p[s] * g[s])
    } else {
        log2_1p(p[s] * g[s] / (p[w] * g[s] + 1.0))
    };
    let mut x = [false; 2];
    x[s] = own < r[s] - RATE_SLACK;
    x[w] = log2_1p(p[w] * g[w] / (p[s] * g[w] + 1.0)) < r[w] - RATE_SLACK;
    x
}

pub fn oma_outage(alpha: f64, p: f64, g: f64, r: f64) -> bool {
    r > 0.0 && oma_rate(alpha, p, g) < r - RATE_SLACK
}

// ------------------------------------------------------- brute-force grids

/// Grid maximum of `a1 R1 + a2 R2 - price (p1 + p2)` for NOMA over powers
/// on multiples of `phat / n` with `p1 + p2 <= phat`.
///
/// With `T = ps + pw` the objective splits into a part in `ps` and a part
/// in `T`, so a suffix maximum over `T >= ps` covers every grid pair.
pub fn grid_p1_noma(g: [f64; 2], a: [f64; 2], price: f64, phat: f64, n: usize) -> f64 {
    let h = phat / n as f64;
    let s = if g[0] >= g[1] { 0 } else { 1 };
    let w = 1 - s;
    let (gs, gw, a_s, a_w) = (g[s], g[w], a[s], a[w]);
    let part_ps = |ps: f64| a_s * log2_1p(ps * gs) - a_w * log2_1p(ps * gw);
    let part_t = |t: f64| a_w * log2_1p(t * gw) - price * t;
    let mut suffix = vec![f64::NEG_INFINITY; n + 2];
    for j in (0..=n).rev() {
        suffix[j] = suffix[j + 1].max(part_t(j as f64 * h));
    }
    (0..=n)
        .map(|i| part_ps(i as f64 * h) + suffix[i])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Grid maximum for orthogonal access over shares on multiples of `1 / na`
/// (or the single share `fixed`) and powers on multiples of `phat / n`.
pub fn grid_p1_oma(
    g: [f64; 2],
    a: [f64; 2],
    price: f64,
    phat: f64,
    n: usize,
    na: usize,
    fixed: Option<f64>,
) -> f64 {
    let h = phat / n as f64;
    let shares: Vec<f64> = match fixed {
        Some(x) => vec![x],
        None => (0..=na).map(|k| k as f64 / na as f64).collect(),
    };
    let mut best = f64::NEG_INFINITY;
    let mut prefix = vec![0.0; n + 1];
    for al in shares {
        let mut run = f64::NEG_INFINITY;
        for j in 0..=n {
            let p = j as f64 * h;
            run = run.max(a[1] * oma_rate(1.0 - al, p, g[1]) - price * p);
            prefix[j] = run;
        }
        for i in 0..=n {
            let p = i as f64 * h;
            best = best.max(a[0] * oma_rate(al, p, g[0]) - price * p + prefix[n - i]);
        }
    }
    best
}

/// Grid minimum of `w1 X1 + w2 X2 + price (p1 + p2)` for NOMA over the full
/// 2-D power grid with `p1 + p2 <= phat`.
pub fn grid_p2_noma(g: [f64; 2], r: [f64; 2], w: [f64; 2], price: f64, phat: f64, n: usize) -> f64 {
    let h = phat / n as f64;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        for j in 0..=(n - i) {
            let p = [i as f64 * h, j as f64 * h];
            let x = noma_outage(g, p, r);
            let v = w[0] * x[0] as u8 as f64 + w[1] * x[1] as u8 as f64 + price * (p[0] + p[1]);
            best = best.min(v);
        }
    }
    best
}

/// Grid minimum for orthogonal access. For each share, the lowest grid power
/// that serves each user is found by scanning, and the four serve/idle
/// combinations that fit the peak are compared; any other grid point has
/// the same flags as one of them at higher power.
pub fn grid_p2_oma(
    g: [f64; 2],
    r: [f64; 2],
    w: [f64; 2],
    price: f64,
    phat: f64,
    n: usize,
    na: usize,
    fixed: Option<f64>,
) -> f64 {
    let h = phat / n as f64;
    let shares: Vec<f64> = match fixed {
        Some(x) => vec![x],
        None => (0..=na).map(|k| k as f64 / na as f64).collect(),
    };
    let first_served = |al: f64, gk: f64, rk: f64| -> Option<usize> {
        (0..=n).find(|&j| !oma_outage(al, j as f64 * h, gk, rk))
    };
    let mut best = f64::INFINITY;
    for al in shares {
        let s1 = first_served(al, g[0], r[0]);
        let s2 = first_served(1.0 - al, g[1], r[1]);
        let opts1 = [(0usize, oma_outage(al, 0.0, g[0], r[0]))]
            .into_iter()
            .chain(s1.map(|j| (j, false)));
        for (i, x1) in opts1 {
            let opts2 = [(0usize, oma_outage(1.0 - al, 0.0, g[1], r[1]))]
                .into_iter()
                .chain(s2.map(|j| (j, false)));
            for (j, x2) in opts2 {
                if i + j > n {
                    continue;
                }
                let v = w[0] * x1 as u8 as f64 + w[1] * x2 as u8 as f64 + price * (i + j) as f64 * h;
                best = best.min(v);
            }
        }
    }
    best
}

// ------------------------------------------------------------ sample averages

/// Direct sample averages of partial-knowledge rates and outage flags.
pub struct McPartial {
    pub noma_rate: [f64; 2],
    pub oma_rate: [f64; 2],
    pub noma_outage: [f64; 2],
    pub oma_outage: [f64; 2],
}

pub fn monte_carlo_partial(ens: &FadingEnsemble, ps: f64, pw: f64, alpha1: f64, r: [f64; 2]) -> McPartial {
    let mut acc = [0.0f64; 8];
    for st in &ens.states {
        let g = [st.g1, st.g2];
        let s = if g[0] >= g[1] { 0 } else { 1 };
        let mut p = [0.0; 2];
        p[s] = ps;
        p[1 - s] = pw;
        let nr = noma_rates(g, p);
        let no = noma_outage(g, p, r);
        let al = [alpha1, 1.0 - alpha1];
        for k in 0..2 {
            acc[k] += nr[k];
            acc[2 + k] += oma_rate(al[k], p[k], g[k]);
            acc[4 + k] += no[k] as u8 as f64;
            acc[6 + k] += oma_outage(al[k], p[k], g[k], r[k]) as u8 as f64;
        }
    }
    let n = ens.len() as f64;
    McPartial {
        noma_rate: [acc[0] / n, acc[1] / n],
        oma_rate: [acc[2] / n, acc[3] / n],
        noma_outage: [acc[4] / n, acc[5] / n],
        oma_outage: [acc[6] / n, acc[7] / n],
    }
}

// ----------------------------------------------------- mixture LP primals

/// One column of the mixture LP: a policy's objective value, power and two
/// constraint metrics in one state.
#[derive(Clone, Copy, Debug)]
pub struct Column {
    pub value: f64,
    pub power: f64,
    pub metric: [f64; 2],
}

/// Best average value over per-state mixtures of columns, with average
/// power at most `pbar` and each average metric compared against `level`
/// (`>=` when `at_least`, else `<=`). States are equally likely.
pub fn mixture_lp(columns: &[Vec<Column>], pbar: f64, level: f64, at_least: bool, maximize: bool) -> Option<f64> {
    let dir = if maximize {
        OptimizationDirection::Maximize
    } else {
        OptimizationDirection::Minimize
    };
    let m = columns.len() as f64;
    let mut lp = Problem::new(dir);
    let mut power = vec![];
    let mut metric = [vec![], vec![]];
    for cols in columns {
        let mut simplex = vec![];
        for c in cols {
            let v = lp.add_var(c.value / m, (0.0, 1.0));
            simplex.push((v, 1.0));
            power.push((v, c.power / m));
            metric[0].push((v, c.metric[0] / m));
            metric[1].push((v, c.metric[1] / m));
        }
        lp.add_constraint(simplex.as_slice(), ComparisonOp::Eq, 1.0);
    }
    lp.add_constraint(power.as_slice(), ComparisonOp::Le, pbar);
    let op = if at_least { ComparisonOp::Ge } else { ComparisonOp::Le };
    lp.add_constraint(metric[0].as_slice(), op, level);
    lp.add_constraint(metric[1].as_slice(), op, level);
    let sol = lp.solve().ok()?.into_solution().ok()?;
    Some(sol.objective())
}

/// Grid policies of one state for the ergodic NOMA problem.
pub fn noma_rate_columns(st: &FadingState, phat: f64, n: usize) -> Vec<Column> {
    let h = phat / n as f64;
    let mut cols = vec![];
    for i in 0..=n {
        for j in 0..=(n - i) {
            let p = [i as f64 * h, j as f64 * h];
            let r = noma_rates([st.g1, st.g2], p);
            cols.push(Column {
                value: r[0] + r[1],
                power: p[0] + p[1],
                metric: r,
            });
        }
    }
    cols
}

/// For each outage pattern, the least-power point of a fine NOMA grid that
/// achieves at least that pattern. The value is the delay-limited throughput.
pub fn noma_outage_columns(st: &FadingState, r: [f64; 2], phat: f64, n: usize) -> Vec<Column> {
    let h = phat / n as f64;
    let mut best: [Option<(f64, [bool; 2])>; 4] = [None; 4];
    for i in 0..=n {
        for j in 0..=(n - i) {
            let p = [i as f64 * h, j as f64 * h];
            let x = noma_outage([st.g1, st.g2], p, r);
            let k = x[0] as usize * 2 + x[1] as usize;
            let tot = p[0] + p[1];
            if best[k].is_none_or(|(b, _)| tot < b) {
                best[k] = Some((tot, x));
            }
        }
    }
    best.iter()
        .flatten()
        .map(|&(power, x)| {
            let (x1, x2) = (x[0] as u8 as f64, x[1] as u8 as f64);
            Column {
                value: r[0] * (1.0 - x1) + r[1] * (1.0 - x2),
                power,
                metric: [x1, x2],
            }
        })
        .collect()
}
