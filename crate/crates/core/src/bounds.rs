//! Remainder bounds driven by the seminorm
//! `‖f‖_{N,p} = sup_{x >= 1} |Δ^{N+1} f(x)| / x^p`.
//!
//! The supremum is taken over the tabulated grid. Every point the remainders
//! evaluate lies inside that grid, so the bounds dominate the exact remainders
//! of the tabulated problem; whether the grid maximum is the true supremum is
//! reported through [`NormEstimate::exact`].

use std::collections::HashMap;

use crate::composition::enumerate_compositions;
use crate::dist::{FinitePmf, MomentKey};
use crate::error::{Error, Result};
use crate::expansion::{FunctionTree, SumModel, TermCoefficients};
use crate::stein::{SteinContext, TabulatedFunction};
use crate::sum::CompensatedSum;

/// Grid measurement of `‖f‖_{N,p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub p: f64,
    pub order: usize,
    /// Inclusive range of `x` the maximum was taken over.
    pub measured_on: (usize, usize),
    /// True when the ratio is non-increasing over the last quarter of the range.
    pub exact: bool,
}

/// `max(2^{p-1}, 1)`.
pub fn growth_factor(p: f64) -> f64 {
    2f64.powf(p - 1.0).max(1.0)
}

pub fn seminorm(f: &TabulatedFunction, order: usize, p: f64) -> Result<NormEstimate> {
    f.require_grid(order + 3)?;
    let mut d = f.values().to_vec();
    for _ in 0..=order {
        d = d.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let hi = d.len() - 1;
    let ratios: Vec<f64> = (1..=hi)
        .map(|x| d[x].abs() / (x as f64).powf(p))
        .collect();
    let value = ratios.iter().copied().fold(0.0, f64::max);
    let quarter_start = ratios.len() - (ratios.len() / 4).max(2).min(ratios.len());
    let exact = ratios[quarter_start..].windows(2).all(|w| w[1] <= w[0]);
    Ok(NormEstimate {
        value,
        p,
        order,
        measured_on: (1, hi),
        exact,
    })
}

fn moment_pair(x_pow: f64, y: &FinitePmf, k: usize, p: f64) -> f64 {
    x_pow * y.binom_moment(MomentKey::new(k)) + y.binom_moment(MomentKey::weighted(k, p))
}

/// Bound on `|δ_{N-k}(Δ^k f(·+1), X, Y)|`:
/// `max(2^{p-1},1) ‖f‖_{N,p} (E[X^p] m_Y^{(N-k+1)} + m_Y^{(N-k+1),p})`.
pub fn delta_bound(
    f_norm: &NormEstimate,
    x: &FinitePmf,
    y: &FinitePmf,
    order: usize,
    k: usize,
    p: f64,
) -> f64 {
    assert!(k <= order, "k = {k} must not exceed order = {order}");
    if f_norm.value == 0.0 {
        return 0.0;
    }
    growth_factor(p) * f_norm.value * moment_pair(x.raw_moment(p), y, order - k + 1, p)
}

/// Bound on `|ε_{N-k}(Δ^k f(·+1), X, Y)|`, summing the `δ` bounds over all
/// compositions `|J| <= N - k`.
pub fn epsilon_bound(
    f_norm: &NormEstimate,
    x: &FinitePmf,
    y: &FinitePmf,
    order: usize,
    k: usize,
    p: f64,
) -> f64 {
    assert!(k <= order, "k = {k} must not exceed order = {order}");
    if f_norm.value == 0.0 {
        return 0.0;
    }
    let x_pow = x.raw_moment(p);
    let rest = order - k;
    let sum: CompensatedSum = enumerate_compositions(rest)
        .iter()
        .map(|j| {
            let weight = y.binom_moment_product(j);
            if weight == 0.0 {
                0.0
            } else {
                weight * moment_pair(x_pow, y, rest - j.total() + 1, p)
            }
        })
        .collect();
    growth_factor(p) * f_norm.value * sum.value()
}

/// The order-zero bound
/// `A ‖f_h‖_{0,p} Σ_i (E[(W^(i))^p](E[X_i²] + λ_i² - λ_i) + λ_i(E[(X_i*)^{p+1}] + E[X_i^{p+1}]))`.
pub fn e0_bound(model: &SumModel, h: &TabulatedFunction, p: f64, tail_tol: f64) -> Result<f64> {
    let ctx = SteinContext::new(model.lambda_w(), tail_tol)?;
    let f = ctx.solve(h)?;
    let norm = seminorm(&f, 0, p)?;
    check_coverage(&norm, model)?;
    Ok(e0_from_norm(model, &norm, p))
}

fn e0_from_norm(model: &SumModel, norm: &NormEstimate, p: f64) -> f64 {
    if norm.value == 0.0 {
        return 0.0;
    }
    let sum: CompensatedSum = model
        .terms()
        .iter()
        .map(|t| {
            let lambda = t.lambda;
            t.rest.raw_moment(p) * (t.x.raw_moment(2.0) + lambda * lambda - lambda)
                + lambda * (t.x_star.raw_moment(p + 1.0) + t.x.raw_moment(p + 1.0))
        })
        .collect();
    growth_factor(p) * norm.value * sum.value()
}

fn check_coverage(norm: &NormEstimate, model: &SumModel) -> Result<()> {
    // δ terms read Δ^{N+1} f at X + 1 + j_1 <= s_W
    if norm.measured_on.1 < model.support_bound() {
        return Err(Error::GridTooShort {
            needed: model.support_bound() + norm.order + 1,
            available: norm.measured_on.1 + norm.order + 1,
        });
    }
    Ok(())
}

/// Recursive bound on `|e_N|`; the inner `|e_{N-|J|}(Δ^{|J|} f_h(·+1))|` are
/// themselves bounded recursively, each with a freshly measured seminorm of
/// its own Stein solution.
#[derive(Debug)]
pub struct RemainderBounds<'m> {
    model: &'m SumModel,
    p: f64,
    tree: FunctionTree,
    coefficients: Vec<TermCoefficients>,
    max_order: usize,
    memo: HashMap<(Vec<usize>, usize), f64>,
    norms: Vec<(Vec<usize>, NormEstimate)>,
}

impl<'m> RemainderBounds<'m> {
    pub fn new(
        model: &'m SumModel,
        h: &TabulatedFunction,
        max_order: usize,
        p: f64,
        tail_tol: f64,
    ) -> Result<Self> {
        let ctx = SteinContext::new(model.lambda_w(), tail_tol)?;
        let tree = FunctionTree::new(h.clone(), ctx)?;
        let coefficients = model
            .terms()
            .iter()
            .map(|t| TermCoefficients::new(t, max_order))
            .collect();
        Ok(Self {
            model,
            p,
            tree,
            coefficients,
            max_order,
            memo: HashMap::new(),
            norms: Vec::new(),
        })
    }

    pub fn bound(&mut self, order: usize) -> Result<f64> {
        if order > self.max_order {
            return Err(Error::BadParameter(format!(
                "order {order} exceeds the prepared maximum {}",
                self.max_order
            )));
        }
        self.bound_at(&[], order)
    }

    /// Every seminorm measured so far, keyed by function-tree path.
    pub fn norms(&self) -> &[(Vec<usize>, NormEstimate)] {
        &self.norms
    }

    /// True when every measured seminorm passed the decay check.
    pub fn grid_certified(&self) -> bool {
        self.norms.iter().all(|(_, n)| n.exact)
    }

    fn bound_at(&mut self, path: &[usize], order: usize) -> Result<f64> {
        let key = (path.to_vec(), order);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let model = self.model;
        let p = self.p;
        let node = self.tree.node(path)?;
        let norm = seminorm(&node.f, order, p)?;
        check_coverage(&norm, model)?;
        self.norms.push((path.to_vec(), norm.clone()));
        let value = if order == 0 {
            e0_from_norm(model, &norm, p)
        } else {
            let mut total = CompensatedSum::new();
            for (i, term) in model.terms().iter().enumerate() {
                let mut acc = CompensatedSum::new();
                let n_comp = self.coefficients[i].compositions.len();
                for c in 0..n_comp {
                    let (j_total, absolute) = {
                        let (j, _, absolute) = &self.coefficients[i].compositions[c];
                        (j.total(), *absolute)
                    };
                    if j_total > order || absolute == 0.0 {
                        continue;
                    }
                    let mut child = path.to_vec();
                    child.push(j_total);
                    acc.add(absolute * self.bound_at(&child, order - j_total)?);
                }
                for k in 0..=order {
                    let m_star = self.coefficients[i].m_star[k];
                    if m_star != 0.0 {
                        acc.add(m_star * epsilon_bound(&norm, &term.rest, &term.x, order, k, p));
                    }
                }
                acc.add(delta_bound(&norm, &term.rest, &term.x_star, order, 0, p));
                total.add(term.lambda * acc.value());
            }
            total.value()
        };
        self.memo.insert(key, value);
        Ok(value)
    }
}

/// Recursive bound on `|e_N(h)|` for `N >= 1`; order 0 reproduces [`e0_bound`].
pub fn recursive_e_bound(
    model: &SumModel,
    h: &TabulatedFunction,
    order: usize,
    p: f64,
    tail_tol: f64,
) -> Result<f64> {
    RemainderBounds::new(model, h, order, p, tail_tol)?.bound(order)
}
