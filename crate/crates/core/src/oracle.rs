//! Independent ground truth.
//!
//! Nothing here calls into the expansion engine or [`FinitePmf`]'s arithmetic:
//! convolution, differences and the remainder enumeration are written out
//! again so that a bug in one path cannot hide in the other.

use crate::dist::FinitePmf;
use crate::error::{Error, Result};
use crate::stein::TabulatedFunction;

const MAX_Y_SUPPORT: usize = 25;
const MAX_ORDER: usize = 6;

fn convolve_raw(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &pa) in a.iter().enumerate() {
        for (j, &pb) in b.iter().enumerate() {
            out[i + j] += pa * pb;
        }
    }
    out
}

fn grid_check(f: &TabulatedFunction, needed: usize) -> Result<()> {
    if f.grid_bound() < needed {
        return Err(Error::GridTooShort {
            needed,
            available: f.grid_bound(),
        });
    }
    Ok(())
}

/// `E[h(X_1 + ... + X_n)]` via left-to-right convolution.
pub fn exact_expectation(components: &[FinitePmf], h: &TabulatedFunction) -> Result<f64> {
    let mut law = vec![1.0];
    for c in components {
        law = convolve_raw(&law, c.probs());
    }
    grid_check(h, law.len() - 1)?;
    Ok(law.iter().enumerate().map(|(x, &p)| p * h.value(x)).sum())
}

/// `Δ^k f(x) = Σ_i (-1)^{k-i} C(k, i) f(x + i)`.
fn iterated_difference(f: &TabulatedFunction, k: usize, x: usize) -> f64 {
    let mut coeff = 1.0f64;
    let mut total = 0.0;
    for i in 0..=k {
        if i > 0 {
            coeff = coeff * (k - i + 1) as f64 / i as f64;
        }
        let sign = if (k - i).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * coeff * f.value(x + i);
    }
    total
}

/// Visits every strictly increasing tuple `0 <= j_1 < ... < j_len < bound`
/// and hands `j_1` to `visit`.
fn for_each_increasing(len: usize, start: usize, bound: usize, first: Option<usize>, visit: &mut dyn FnMut(usize)) {
    if len == 0 {
        visit(first.expect("tuples have at least one coordinate"));
        return;
    }
    for j in start..bound {
        for_each_increasing(len - 1, j + 1, bound, first.or(Some(j)), visit);
    }
}

/// `δ_N(f, X, Y)` by literal enumeration of `0 <= j_1 < ... < j_{N+1} < Y`.
pub fn brute_delta(f: &TabulatedFunction, order: usize, x: &FinitePmf, y: &FinitePmf) -> Result<f64> {
    if y.support_bound() > MAX_Y_SUPPORT {
        return Err(Error::TooLarge(format!(
            "support bound {} of Y exceeds {MAX_Y_SUPPORT}",
            y.support_bound()
        )));
    }
    if order > MAX_ORDER {
        return Err(Error::TooLarge(format!("order {order} exceeds {MAX_ORDER}")));
    }
    if y.support_bound() > order {
        grid_check(f, x.support_bound() + y.support_bound())?;
    }
    let mut total = 0.0;
    for (xv, &px) in x.probs().iter().enumerate() {
        for (yv, &py) in y.probs().iter().enumerate() {
            let mut inner = 0.0;
            for_each_increasing(order + 1, 0, yv, None, &mut |j1| {
                inner += iterated_difference(f, order + 1, xv + j1);
            });
            total += px * py * inner;
        }
    }
    Ok(total)
}
