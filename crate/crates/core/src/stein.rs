//! Tabulated test functions and the Stein–Chen equation
//! `x f(x) - λ f(x + 1) = h(x) - P_λ(h)`.
//!
//! Functions are stored on a contiguous grid `0..=M` together with a
//! [`GrowthEnvelope`] `(K, p)` asserting `|g(x)| <= K max(x, 1)^p`. The envelope
//! is what lets a finite table certify the Poisson tails beyond its last point.

use crate::dist::pow0;
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

const ENVELOPE_SLACK: f64 = 1e-12;

/// Certificate `|g(x)| <= k * max(x, 1)^p` for all `x >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthEnvelope {
    k: f64,
    p: f64,
}

impl GrowthEnvelope {
    pub fn new(k: f64, p: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::BadParameter(format!(
                "envelope constant must be finite and nonnegative, got {k}"
            )));
        }
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::BadParameter(format!(
                "envelope exponent must be finite and nonnegative, got {p}"
            )));
        }
        Ok(Self { k, p })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn bound(&self, x: usize) -> f64 {
        self.k * pow0(x.max(1) as f64, self.p)
    }

    fn ln_bound(&self, x: usize) -> f64 {
        self.k.ln() + self.p * (x.max(1) as f64).ln()
    }
}

/// Builtin test functions.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    /// `Σ c_i x^i`, coefficients in increasing degree.
    Polynomial(Vec<f64>),
    /// Indicator of a finite set of grid points.
    Indicator(Vec<usize>),
    /// `x^q`, with `0^0 = 1`.
    Monomial(f64),
    /// Raw values with a caller-supplied envelope.
    Table {
        values: Vec<f64>,
        envelope: GrowthEnvelope,
    },
}

/// Values of a function on the grid `0..=M`, `M >= 1`, plus its envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedFunction {
    values: Vec<f64>,
    envelope: GrowthEnvelope,
}

impl TabulatedFunction {
    /// Checks the envelope on every grid point.
    pub fn new(values: Vec<f64>, envelope: GrowthEnvelope) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::GridTooShort {
                needed: 1,
                available: values.len().saturating_sub(1),
            });
        }
        for (x, &v) in values.iter().enumerate() {
            let bound = envelope.bound(x);
            if !v.is_finite() || v.abs() > bound * (1.0 + ENVELOPE_SLACK) + f64::MIN_POSITIVE {
                return Err(Error::EnvelopeViolated { x, value: v, bound });
            }
        }
        Ok(Self { values, envelope })
    }

    pub fn builtin(spec: &FunctionSpec, grid_bound: usize) -> Result<Self> {
        if grid_bound < 1 {
            return Err(Error::GridTooShort {
                needed: 1,
                available: grid_bound,
            });
        }
        let grid = 0..=grid_bound;
        match spec {
            FunctionSpec::Polynomial(coeffs) => {
                let degree = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
                let k: f64 = coeffs.iter().map(|c| c.abs()).sum();
                let values = grid
                    .map(|x| coeffs.iter().rev().fold(0.0, |acc, &c| acc * x as f64 + c))
                    .collect();
                Self::new(values, GrowthEnvelope::new(k, degree as f64)?)
            }
            FunctionSpec::Indicator(set) => {
                let values = grid
                    .map(|x| if set.contains(&x) { 1.0 } else { 0.0 })
                    .collect();
                Self::new(values, GrowthEnvelope::new(1.0, 0.0)?)
            }
            FunctionSpec::Monomial(q) => {
                let envelope = GrowthEnvelope::new(1.0, *q)?;
                let values = grid.map(|x| pow0(x as f64, *q)).collect();
                Self::new(values, envelope)
            }
            FunctionSpec::Table { values, envelope } => {
                if values.len() < grid_bound + 1 {
                    return Err(Error::GridTooShort {
                        needed: grid_bound,
                        available: values.len().saturating_sub(1),
                    });
                }
                Self::new(values[..=grid_bound].to_vec(), *envelope)
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn envelope(&self) -> GrowthEnvelope {
        self.envelope
    }

    /// Last grid point `M`.
    pub fn grid_bound(&self) -> usize {
        self.values.len() - 1
    }

    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn get(&self, x: usize) -> Option<f64> {
        self.values.get(x).copied()
    }

    pub(crate) fn require_grid(&self, needed: usize) -> Result<()> {
        if self.grid_bound() < needed {
            Err(Error::GridTooShort {
                needed,
                available: self.grid_bound(),
            })
        } else {
            Ok(())
        }
    }

    /// `Δ^k f` on `0..=M-k`.
    ///
    /// Each difference maps the envelope `(K, p)` to `((1 + 2^p) K, p)`.
    pub fn forward_difference(&self, k: usize) -> Result<Self> {
        self.require_grid(k + 1)?;
        let mut values = self.values.clone();
        for _ in 0..k {
            values = values.windows(2).map(|w| w[1] - w[0]).collect();
        }
        let growth = 1.0 + 2f64.powf(self.envelope.p);
        let envelope = GrowthEnvelope {
            k: self.envelope.k * growth.powi(k as i32),
            p: self.envelope.p,
        };
        Ok(Self { values, envelope })
    }

    /// `x ↦ f(x + 1)` on `0..=M-1`.
    pub fn shift(&self) -> Result<Self> {
        self.require_grid(2)?;
        Ok(Self {
            values: self.values[1..].to_vec(),
            envelope: GrowthEnvelope {
                k: self.envelope.k * 2f64.powf(self.envelope.p),
                p: self.envelope.p,
            },
        })
    }

    /// `τ(f)(x) = f(x + 1) / (x + 1)` on `0..=M-1`.
    pub fn tau(&self) -> Result<Self> {
        self.require_grid(2)?;
        let values = self.values[1..]
            .iter()
            .enumerate()
            .map(|(x, v)| v / (x + 1) as f64)
            .collect();
        Ok(Self {
            values,
            envelope: GrowthEnvelope {
                k: self.envelope.k * 2f64.powf(self.envelope.p),
                p: (self.envelope.p - 1.0).max(0.0),
            },
        })
    }
}

/// A Poisson expectation over a finite grid together with its certified tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonExpectation {
    pub value: f64,
    /// Upper bound on `Σ_{x > cut} P(Z = x) |f(x)|`.
    pub tail_bound: f64,
    /// Last grid point included in the sum.
    pub cut: usize,
}

/// Parameters shared by Stein-equation computations for one Poisson law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteinContext {
    lambda: f64,
    tail_tol: f64,
}

impl SteinContext {
    pub fn new(lambda: f64, tail_tol: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::BadParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(Error::BadParameter(format!(
                "tail_tol must lie in (0, 1), got {tail_tol}"
            )));
        }
        Ok(Self { lambda, tail_tol })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// `P_λ(f)` summed over the whole grid.
    ///
    /// Beyond the grid the terms `e^{-λ} λ^x / x! K x^p` have ratio at most
    /// `r = λ/(M+2) ((M+2)/(M+1))^p`; when `r <= 1/2` the tail is at most
    /// `first / (1 - r)`.
    pub fn expectation(&self, f: &TabulatedFunction) -> Result<PoissonExpectation> {
        let lambda = self.lambda;
        let m = f.grid_bound();
        let ln_lambda = lambda.ln();
        let mut acc = CompensatedSum::new();
        let mut ln_weight = -lambda;
        for (x, &v) in f.values().iter().enumerate() {
            if x > 0 {
                ln_weight += ln_lambda - (x as f64).ln();
            }
            acc.add(ln_weight.exp() * v);
        }
        let env = f.envelope();
        let next = m + 1;
        let ln_first = ln_weight + ln_lambda - (next as f64).ln() + env.ln_bound(next);
        let ratio = lambda / (m + 2) as f64 * ((m + 2) as f64 / (m + 1) as f64).powf(env.p);
        let tail_bound = if env.k == 0.0 {
            0.0
        } else if ratio <= 0.5 {
            ln_first.exp() / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        if tail_bound.is_nan() || tail_bound >= self.tail_tol {
            return Err(Error::GridTooShort {
                needed: m + 1,
                available: m,
            });
        }
        Ok(PoissonExpectation {
            value: acc.value(),
            tail_bound,
            cut: m,
        })
    }

    /// `f_h(x) = (x-1)!/λ^x Σ_{i>=x} λ^i/i! (h(i) - P_λ(h))`, with `f_h(0) := 0`.
    pub fn solve(&self, h: &TabulatedFunction) -> Result<TabulatedFunction> {
        let centre = self.expectation(h)?.value;
        self.solve_tail_sum(h, centre)
    }

    /// `f̃_h(x) = (x-1)!/λ^x Σ_{i>=x} λ^i/i! h(i)` for `x >= 1`, `f̃_h(0) := 0`.
    pub fn solve_modified(&self, h: &TabulatedFunction) -> Result<TabulatedFunction> {
        self.solve_tail_sum(h, 0.0)
    }

    /// Runs the backward recursion on `u(x) = x f(x)`:
    /// `u(x) = ḡ(x) + λ/(x+1) u(x+1)` with `u(M+1)` replaced by 0.
    ///
    /// The neglected tail contributes
    /// `Σ_{i>M} ḡ(i) λ^{i-x} x!/i!` to `u(x)`, bounded with `|ḡ(i)| <= K i^p + |c|`.
    /// The output grid stops at the last `x` where that error divided by `x`
    /// stays below `tail_tol`.
    fn solve_tail_sum(&self, h: &TabulatedFunction, centre: f64) -> Result<TabulatedFunction> {
        let lambda = self.lambda;
        let m = h.grid_bound();
        let env = h.envelope();
        let ratio = lambda / (m + 2) as f64 * ((m + 2) as f64 / (m + 1) as f64).powf(env.p);
        if ratio > 0.5 {
            return Err(Error::TailNotCertified(format!(
                "grid bound {m} is too short for lambda = {lambda}"
            )));
        }
        let bound_next = env.bound(m + 1) + centre.abs();
        let m_out = if bound_next == 0.0 {
            m
        } else {
            let ln_lambda = lambda.ln();
            // ln of the first neglected term at x = 1
            let mut ln_first = bound_next.ln() + m as f64 * ln_lambda
                - (2..=m + 1).map(|j| (j as f64).ln()).sum::<f64>();
            let ln_scale = -(1.0 - ratio).ln();
            let ln_tol = self.tail_tol.ln();
            let mut last_ok = 0;
            for x in 1..=m {
                if x > 1 {
                    ln_first += (x as f64).ln() - ln_lambda;
                }
                if ln_first + ln_scale - (x as f64).ln() <= ln_tol {
                    last_ok = x;
                } else {
                    break;
                }
            }
            last_ok
        };
        if m_out < 1 {
            return Err(Error::TailNotCertified(format!(
                "grid bound {m} leaves no certified point for lambda = {lambda}"
            )));
        }

        let mut u = vec![0.0; m + 2];
        for x in (1..=m).rev() {
            u[x] = (h.value(x) - centre) + lambda / (x + 1) as f64 * u[x + 1];
        }
        let mut values = vec![0.0; m_out + 1];
        for x in 1..=m_out {
            values[x] = u[x] / x as f64;
        }
        let p = env.p;
        let k = 2.0 * values
            .iter()
            .enumerate()
            .map(|(x, v)| v.abs() / pow0(x.max(1) as f64, p))
            .fold(0.0, f64::max);
        let envelope = GrowthEnvelope { k, p };
        Ok(TabulatedFunction { values, envelope })
    }
}

pub fn poisson_expectation(
    f: &TabulatedFunction,
    lambda: f64,
    tail_tol: f64,
) -> Result<PoissonExpectation> {
    SteinContext::new(lambda, tail_tol)?.expectation(f)
}

pub fn stein_solution(
    h: &TabulatedFunction,
    lambda: f64,
    tail_tol: f64,
) -> Result<TabulatedFunction> {
    SteinContext::new(lambda, tail_tol)?.solve(h)
}

pub fn stein_solution_modified(
    h: &TabulatedFunction,
    lambda: f64,
    tail_tol: f64,
) -> Result<TabulatedFunction> {
    SteinContext::new(lambda, tail_tol)?.solve_modified(h)
}
