//! Deep-cut ellipsoid method for small nonsmooth convex programs over a box.
//!
//! The localization set is `{z : (z - x)^T P^-1 (z - x) <= 1}`. Every step
//! applies one cut `g^T (z - x) + h <= 0`:
//!
//! * if `x` leaves the box, a feasibility cut on the most violated
//!   coordinate, with depth equal to the violation;
//! * otherwise an objective cut from the oracle subgradient, with depth
//!   `f(x) - f_best`.
//!
//! The run stops once `sqrt(s^T P s)` for the latest subgradient `s` falls
//! below the tolerance. That quantity bounds how far `f(x)` can be above the
//! optimum inside the current ellipsoid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Knobs of a run. [`EllipsoidOptions::dual`] gives the defaults for the
/// three-multiplier dual problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidOptions {
    pub init_center: Vec<f64>,
    pub init_radius: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Stop early once the answer to "is the minimum below this value?" is
    /// certain: either an iterate went below it, or the lower bound rose above it.
    pub decision_threshold: Option<f64>,
}

impl EllipsoidOptions {
    pub fn dual() -> Self {
        EllipsoidOptions {
            init_center: vec![1.0; 3],
            init_radius: 1e3,
            max_iter: 500,
            tol: 1e-5,
            decision_threshold: None,
        }
    }
}

/// Axis-aligned bounds; use `f64::INFINITY` for an open upper side.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn orthant(n: usize) -> Self {
        Bounds {
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    /// Largest violation as `(coordinate, signed gradient, amount)`.
    fn most_violated(&self, x: &[f64]) -> Option<(usize, f64, f64)> {
        let mut worst: Option<(usize, f64, f64)> = None;
        for (i, &xi) in x.iter().enumerate() {
            let (sign, amount) = if xi < self.lower[i] {
                (-1.0, self.lower[i] - xi)
            } else if xi > self.upper[i] {
                (1.0, xi - self.upper[i])
            } else {
                continue;
            };
            if worst.is_none_or(|w| amount > w.2) {
                worst = Some((i, sign, amount));
            }
        }
        worst
    }
}

/// Result of applying one cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutOutcome {
    Applied { regularized: bool },
    /// The cut removes the whole ellipsoid.
    Empty,
}

/// Ellipsoid with center `x` and shape `P` (row-major, symmetric positive definite).
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub shape: Vec<f64>,
}

impl Ellipsoid {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let n = center.len();
        if n < 2 {
            return Err(Error::Precondition("ellipsoid method needs dimension >= 2".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Precondition(format!("radius must be positive, got {radius}")));
        }
        let mut shape = vec![0.0; n * n];
        for i in 0..n {
            shape[i * n + i] = radius * radius;
        }
        Ok(Ellipsoid { center, shape })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn shape_times(&self, g: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.shape[i * n + j] * g[j]).sum())
            .collect()
    }

    /// `g^T P g`.
    pub fn quad(&self, g: &[f64]) -> f64 {
        self.shape_times(g).iter().zip(g).map(|(a, b)| a * b).sum()
    }

    /// `ln det P`, or `None` when `P` is not positive definite.
    pub fn log_det(&self) -> Option<f64> {
        cholesky(&self.shape, self.dim()).map(|l| {
            let n = self.dim();
            (0..n).map(|i| 2.0 * l[i * n + i].ln()).sum()
        })
    }

    /// Applies the cut `g^T (z - x) + depth <= 0`.
    pub fn cut(&mut self, g: &[f64], depth: f64) -> CutOutcome {
        let n = self.dim();
        let nf = n as f64;
        let pg = self.shape_times(g);
        let q2: f64 = pg.iter().zip(g).map(|(a, b)| a * b).sum();
        if !(q2 > 0.0) {
            return CutOutcome::Empty;
        }
        let q = q2.sqrt();
        let a = (depth / q).max(0.0);
        if a >= 1.0 {
            return CutOutcome::Empty;
        }
        let step = (1.0 + nf * a) / (nf + 1.0);
        for i in 0..n {
            self.center[i] -= step * pg[i] / q;
        }
        let scale = nf * nf * (1.0 - a * a) / (nf * nf - 1.0);
        let rank1 = 2.0 * (1.0 + nf * a) / ((nf + 1.0) * (1.0 + a)) / q2;
        for i in 0..n {
            for j in 0..n {
                self.shape[i * n + j] = scale * (self.shape[i * n + j] - rank1 * pg[i] * pg[j]);
            }
        }
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (self.shape[i * n + j] + self.shape[j * n + i]);
                self.shape[i * n + j] = m;
                self.shape[j * n + i] = m;
            }
        }
        let mut regularized = false;
        if cholesky(&self.shape, n).is_none() {
            let trace: f64 = (0..n).map(|i| self.shape[i * n + i]).sum();
            let floor = 1e-14 * trace.abs().max(f64::MIN_POSITIVE);
            for i in 0..n {
                self.shape[i * n + i] += floor;
            }
            regularized = true;
        }
        CutOutcome::Applied { regularized }
    }
}

fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// An iterate reached a value below the decision threshold.
    DecidedBelow,
    /// The lower bound reached the decision threshold.
    DecidedAbove,
    /// The last cut left nothing; the incumbent is optimal to working precision.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidDiagnostics {
    pub iterations: usize,
    pub objective_cuts: usize,
    pub feasibility_cuts: usize,
    /// Last value of `sqrt(s^T P s)`.
    pub gap_bound: f64,
    /// Best certified lower bound on the minimum.
    pub lower_bound: f64,
    pub regularizations: usize,
    /// Incumbent lies within 1% of the initial ball's boundary.
    pub near_boundary: bool,
    pub stop: StopReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub subgradient: Vec<f64>,
    pub diagnostics: EllipsoidDiagnostics,
}

/// Minimizes a convex function given by `oracle(x) -> (f(x), subgradient)`
/// over `bounds`. Only points inside the bounds are passed to the oracle.
pub fn ellipsoid_minimize<F>(
    mut oracle: F,
    bounds: &Bounds,
    opts: &EllipsoidOptions,
) -> Result<EllipsoidResult>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = opts.init_center.len();
    if bounds.lower.len() != n || bounds.upper.len() != n {
        return Err(Error::Precondition("bounds and center differ in dimension".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let mut ell = Ellipsoid::ball(opts.init_center.clone(), opts.init_radius)?;

    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    let mut diag = EllipsoidDiagnostics {
        iterations: 0,
        objective_cuts: 0,
        feasibility_cuts: 0,
        gap_bound: f64::INFINITY,
        lower_bound: f64::NEG_INFINITY,
        regularizations: 0,
        near_boundary: false,
        stop: StopReason::MaxIterations,
    };

    // feasibility cuts do not count against the budget of oracle calls,
    // but a hard cap guards against a bounds/ellipsoid mismatch
    let mut guard = 0usize;
    while diag.iterations < opts.max_iter && guard < 100 * opts.max_iter.max(1) {
        guard += 1;
        if let Some((i, sign, amount)) = bounds.most_violated(&ell.center) {
            let mut g = vec![0.0; n];
            g[i] = sign;
            diag.feasibility_cuts += 1;
            match ell.cut(&g, amount) {
                CutOutcome::Applied { regularized } => diag.regularizations += regularized as usize,
                CutOutcome::Empty => {
                    if best.is_none() {
                        return Err(Error::Consistency(
                            "initial ellipsoid does not meet the feasible box".into(),
                        ));
                    }
                    diag.stop = StopReason::Exhausted;
                    break;
                }
            }
            continue;
        }

        diag.iterations += 1;
        let x = ell.center.clone();
        let (f, s) = oracle(&x);
        if !f.is_finite() || s.len() != n || s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Consistency(format!("oracle returned non-finite output at {x:?}")));
        }
        if best.as_ref().is_none_or(|b| f < b.1) {
            best = Some((x, f, s.clone()));
        }
        let f_best = best.as_ref().map(|b| b.1).unwrap_or(f);
        let gap = ell.quad(&s).max(0.0).sqrt();
        diag.gap_bound = gap;
        diag.lower_bound = diag.lower_bound.max(f - gap);
        diag.objective_cuts += 1;

        if gap <= opts.tol {
            diag.stop = StopReason::Converged;
            break;
        }
        if let Some(t) = opts.decision_threshold {
            if f_best < t {
                diag.stop = StopReason::DecidedBelow;
                break;
            }
            if diag.lower_bound >= t {
                diag.stop = StopReason::DecidedAbove;
                break;
            }
        }
        match ell.cut(&s, f - f_best) {
            CutOutcome::Applied { regularized } => diag.regularizations += regularized as usize,
            CutOutcome::Empty => {
                diag.stop = StopReason::Exhausted;
                break;
            }
        }
    }

    let (x, value, subgradient) = best.ok_or_else(|| {
        Error::Consistency("ellipsoid run ended without evaluating a feasible point".into())
    })?;
    let dist: f64 = x
        .iter()
        .zip(&opts.init_center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    diag.near_boundary = dist >= 0.99 * opts.init_radius;
    Ok(EllipsoidResult {
        x,
        value,
        subgradient,
        diagnostics: diag,
    })
}
