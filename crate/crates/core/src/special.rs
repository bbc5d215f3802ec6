//! Exponential integral `E1` and the kernel `f(x) = e^x Ei(-x) = -e^x E1(x)`.
//!
//! `E1` uses its power series on `(0, 1]` and a continued fraction evaluated
//! with the modified Lentz method above 1. The continued fraction yields
//! `e^x E1(x)` directly, so the kernel never forms `e^x` for large arguments.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;
const MAX_LEVELS: usize = 1000;
const TINY: f64 = 1e-300;

fn check(x: f64) -> Result<()> {
    if x > 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("exponential integral needs x > 0, got {x}")))
    }
}

fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut fact = 1.0;
    for k in 1..200 {
        fact *= x / k as f64;
        let term = fact / k as f64;
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < EPS * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// `e^x E1(x)` for `x > 1`.
fn scaled_e1_cf(x: f64) -> f64 {
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_LEVELS {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Exponential integral `E1(x) = int_x^inf e^-t / t dt`.
pub fn expint_e1(x: f64) -> Result<f64> {
    check(x)?;
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(if x <= 1.0 {
        e1_series(x)
    } else {
        scaled_e1_cf(x) * (-x).exp()
    })
}

/// `f(x) = -e^x E1(x)`, negative and increasing on `(0, inf)`.
pub fn f_kernel(x: f64) -> Result<f64> {
    check(x)?;
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(if x <= 1.0 {
        -x.exp() * e1_series(x)
    } else {
        -scaled_e1_cf(x)
    })
}
