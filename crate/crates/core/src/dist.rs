//! Probability mass functions on `{0, 1, ..., s}`.
//!
//! Every random variable in this crate is a [`FinitePmf`]. Infinite-support
//! laws such as the Poisson enter only through truncation at construction, so
//! every expectation is a finite sum.

use crate::composition::Composition;
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// A pmf with finite support `{0, ..., s}` and a cached mean.
///
/// The last stored probability is positive unless the support bound is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePmf {
    probs: Vec<f64>,
    mean: f64,
}

/// Index of a binomial moment `E[C(Y, k) Y^p]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentKey {
    pub k: usize,
    pub p: f64,
}

impl MomentKey {
    /// The plain binomial moment `m_Y^(k) = E[C(Y, k)]`.
    pub fn new(k: usize) -> Self {
        Self { k, p: 0.0 }
    }

    /// The weighted moment `E[C(Y, k) Y^p]`.
    pub fn weighted(k: usize, p: f64) -> Self {
        Self { k, p }
    }
}

/// `C(n, k)` by the multiplicative recurrence. Zero when `k > n`.
pub fn binomial_coefficient(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// `x^p` with `0^0 = 1`.
pub(crate) fn pow0(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        x.powf(p)
    }
}

fn mean_of(probs: &[f64]) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(x, &q)| x as f64 * q)
        .collect::<CompensatedSum>()
        .value()
}

fn trim_trailing_zeros(probs: &mut Vec<f64>) {
    while probs.len() > 1 && probs[probs.len() - 1] == 0.0 {
        probs.pop();
    }
}

impl FinitePmf {
    /// Normalizes nonnegative weights into a pmf, trimming trailing zeros.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFiniteWeight { index });
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { index, value: w });
            }
        }
        let total: f64 = weights.iter().copied().collect::<CompensatedSum>().value();
        if total <= 0.0 {
            return Err(Error::AllZero);
        }
        let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        trim_trailing_zeros(&mut probs);
        let mean = mean_of(&probs);
        Ok(Self { probs, mean })
    }

    pub fn point_mass(x: usize) -> Self {
        let mut probs = vec![0.0; x + 1];
        probs[x] = 1.0;
        Self {
            probs,
            mean: x as f64,
        }
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::BadParameter(format!(
                "bernoulli p must lie in (0, 1), got {p}"
            )));
        }
        Ok(Self {
            probs: vec![1.0 - p, p],
            mean: p,
        })
    }

    pub fn binomial(n: usize, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::BadParameter(format!(
                "binomial p must lie in (0, 1), got {p}"
            )));
        }
        if n == 0 {
            return Err(Error::BadParameter("binomial n must be positive".into()));
        }
        let q = 1.0 - p;
        let weights: Vec<f64> = (0..=n)
            .map(|k| binomial_coefficient(n, k) * p.powi(k as i32) * q.powi((n - k) as i32))
            .collect();
        Self::from_weights(&weights)
    }

    /// Poisson(`lambda`) cut at the least `M` whose tail mass beyond `M` is
    /// below `tail_tol`, then renormalized.
    pub fn poisson_truncated(lambda: f64, tail_tol: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::BadParameter(format!(
                "poisson lambda must be positive, got {lambda}"
            )));
        }
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(Error::BadParameter(format!(
                "tail_tol must lie in (0, 1), got {tail_tol}"
            )));
        }
        // log-space terms so large lambda does not underflow e^{-lambda}
        let ln_lambda = lambda.ln();
        let mut terms = Vec::new();
        let mut ln_term = -lambda;
        let mut x = 0usize;
        loop {
            terms.push(ln_term.exp());
            x += 1;
            ln_term += ln_lambda - (x as f64).ln();
            // beyond 2*lambda the ratio is below 1/2, so the rest is < 2*term
            if x as f64 > 2.0 * lambda && 2.0 * ln_term.exp() < tail_tol * 1e-6 {
                break;
            }
        }
        let remainder = 2.0 * ln_term.exp();
        // suffix[m] = mass strictly beyond m
        let mut beyond = remainder;
        let mut cut = terms.len() - 1;
        for m in (0..terms.len()).rev() {
            if beyond >= tail_tol {
                break;
            }
            cut = m;
            beyond += terms[m];
        }
        Self::from_weights(&terms[..=cut])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest support point `s`.
    pub fn support_bound(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `P(X = x)`, zero outside the support.
    pub fn pmf(&self, x: usize) -> f64 {
        self.probs.get(x).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().copied().collect::<CompensatedSum>().value()
    }

    /// `E[f(X)]`.
    pub fn expect<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &q)| q != 0.0)
            .map(|(x, &q)| q * f(x))
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn convolve(&self, other: &FinitePmf) -> FinitePmf {
        let n = self.probs.len() + other.probs.len() - 1;
        let mut out = vec![0.0; n];
        for (x, &a) in self.probs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (y, &b) in other.probs.iter().enumerate() {
                out[x + y] += a * b;
            }
        }
        trim_trailing_zeros(&mut out);
        FinitePmf {
            probs: out,
            mean: self.mean + other.mean,
        }
    }

    /// The Poisson zero-biased law `P(X* = y) = (y + 1) P(X = y + 1) / E[X]`.
    pub fn zero_bias(&self) -> Result<FinitePmf> {
        if self.mean <= 0.0 || self.support_bound() == 0 {
            return Err(Error::ZeroMean);
        }
        let lambda = self.mean;
        let mut probs: Vec<f64> = (0..self.support_bound())
            .map(|y| (y + 1) as f64 * self.probs[y + 1] / lambda)
            .collect();
        trim_trailing_zeros(&mut probs);
        let mean = mean_of(&probs);
        Ok(FinitePmf { probs, mean })
    }

    /// `E[C(Y, k) Y^p]`, with `C(y, k) = 0` for `y < k` and `0^0 = 1`.
    pub fn binom_moment(&self, key: MomentKey) -> f64 {
        if key.k > self.support_bound() {
            return 0.0;
        }
        self.probs
            .iter()
            .enumerate()
            .skip(key.k)
            .map(|(y, &q)| q * binomial_coefficient(y, key.k) * pow0(y as f64, key.p))
            .collect::<CompensatedSum>()
            .value()
    }

    /// `m_Y^(J) = m_Y^(j_1) ... m_Y^(j_d)`; 1 for the empty composition.
    pub fn binom_moment_product(&self, j: &Composition) -> f64 {
        self.binom_moment_product_of(j.parts())
    }

    pub(crate) fn binom_moment_product_of(&self, parts: &[usize]) -> f64 {
        parts
            .iter()
            .map(|&k| self.binom_moment(MomentKey::new(k)))
            .product()
    }

    /// `E[X^p]` with `0^0 = 1`.
    pub fn raw_moment(&self, p: f64) -> f64 {
        self.expect(|x| pow0(x as f64, p))
    }
}

/// `a ∗ b`.
pub fn convolve(a: &FinitePmf, b: &FinitePmf) -> FinitePmf {
    a.convolve(b)
}
