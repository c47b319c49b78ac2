#![allow(dead_code)]

use poisson_zb::stein::{FunctionSpec, GrowthEnvelope, TabulatedFunction};
use poisson_zb::{FinitePmf, SumModel};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random pmf with support bound exactly `s` (last weight kept away from 0).
pub fn random_pmf(rng: &mut ChaCha8Rng, s: usize) -> FinitePmf {
    let mut w: Vec<f64> = (0..=s).map(|_| rng.gen_range(0.0..1.0)).collect();
    w[s] += 0.05;
    FinitePmf::from_weights(&w).unwrap()
}

/// Random table on `0..=m` with values `u(x) * max(x,1)^p`, `u ∈ [-1, 1]`.
pub fn random_function(rng: &mut ChaCha8Rng, m: usize, p: f64) -> TabulatedFunction {
    let values = (0..=m)
        .map(|x| rng.gen_range(-1.0..1.0) * (x.max(1) as f64).powf(p))
        .collect();
    TabulatedFunction::new(values, GrowthEnvelope::new(1.0, p).unwrap()).unwrap()
}

/// `(X, Y, order)` with supports at most 8 and order in 0..=3.
pub struct TaylorInstance {
    pub x: FinitePmf,
    pub y: FinitePmf,
    pub order: usize,
    pub p: f64,
    pub f: TabulatedFunction,
}

pub fn taylor_corpus(seed: u64, count: usize) -> Vec<TaylorInstance> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let (sx, sy) = (r.gen_range(0..=8), r.gen_range(0..=8));
            let x = random_pmf(&mut r, sx);
            let y = random_pmf(&mut r, sy);
            let order = r.gen_range(0..=3);
            let p = [0.0, 0.5, 1.0, 2.0, 3.0][r.gen_range(0..5)];
            let m = x.support_bound() + y.support_bound() + order + 4;
            let f = random_function(&mut r, m, p);
            TaylorInstance { x, y, order, p, f }
        })
        .collect()
}

/// Mixed Bernoulli / binomial components with means at most 0.3.
pub fn random_model(rng: &mut ChaCha8Rng, n: usize) -> SumModel {
    let comps = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                FinitePmf::bernoulli(rng.gen_range(0.01..0.3)).unwrap()
            } else {
                let trials = rng.gen_range(2..=3);
                let p = rng.gen_range(0.01..0.3) / trials as f64;
                FinitePmf::binomial(trials, p).unwrap()
            }
        })
        .collect();
    SumModel::new(comps).unwrap()
}

pub fn model_corpus(seed: u64, count: usize) -> Vec<SumModel> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let n = 1 + i % 6;
            random_model(&mut r, n)
        })
        .collect()
}

/// `{1, x, x², x³, 1{0}, 1{≤1}, 1{≤2}}`.
pub fn builtin_set() -> Vec<(&'static str, FunctionSpec)> {
    vec![
        ("1", FunctionSpec::Polynomial(vec![1.0])),
        ("x", FunctionSpec::Monomial(1.0)),
        ("x^2", FunctionSpec::Monomial(2.0)),
        ("x^3", FunctionSpec::Monomial(3.0)),
        ("1{0}", FunctionSpec::Indicator(vec![0])),
        ("1{<=1}", FunctionSpec::Indicator(vec![0, 1])),
        ("1{<=2}", FunctionSpec::Indicator(vec![0, 1, 2])),
    ]
}

pub fn print_line(criterion: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "[{}] criterion {criterion:>2}: {name} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}
