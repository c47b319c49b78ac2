//! Discrete Taylor remainders and the recursive Poisson expansion.
//!
//! For `W = X_1 + ... + X_n` with `λ_W = E[W]`, the expansion is
//!
//! ```text
//! C_0(h) = P_{λ_W}(h)
//! C_N(h) = C_0(h) + Σ_i λ_i Σ_{d>=1} (-1)^{d-1} Σ_{|J|<=N}
//!          m_{X_i}^{(J°)} (m_{X_i*}^{(J†)} - m_{X_i}^{(J†)}) C_{N-|J|}(Δ^{|J|} f_h(·+1))
//! ```
//!
//! where `f_h` solves the Stein–Chen equation for `λ_W`. The remainder
//! `e_N(h) = E[h(W)] - C_N(h)` obeys the same recursion with extra `ε` and `δ`
//! terms, which [`Expansion::e_via_remainders`] evaluates without touching
//! `E[h(W)]`.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use crate::composition::{enumerate_compositions, Composition};
use crate::dist::{binomial_coefficient, FinitePmf, MomentKey};
use crate::error::{Error, Result};
use crate::oracle;
use crate::stein::{PoissonExpectation, SteinContext, TabulatedFunction};
use crate::sum::CompensatedSum;

/// `E[f(X + Y)] = main + delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorExpansion {
    pub main: f64,
    pub delta: f64,
}

fn differences(values: &[f64], k: usize) -> Vec<f64> {
    let mut d = values.to_vec();
    for _ in 0..k {
        d = d.windows(2).map(|w| w[1] - w[0]).collect();
    }
    d
}

fn require(f: &TabulatedFunction, needed: usize) -> Result<()> {
    f.require_grid(needed)
}

/// `δ_N(f, X, Y) = E[Σ_{0<=j_1<...<j_{N+1}<Y} Δ^{N+1} f(X + j_1)]`.
///
/// For fixed `Y = y` and `j_1`, there are `C(y - 1 - j_1, N)` admissible tails,
/// so the inner sum collapses to a single index.
pub fn delta_remainder(
    f: &TabulatedFunction,
    order: usize,
    x: &FinitePmf,
    y: &FinitePmf,
) -> Result<f64> {
    if y.support_bound() <= order {
        return Ok(0.0);
    }
    require(f, x.support_bound() + y.support_bound())?;
    let d = differences(f.values(), order + 1);
    let mut acc = CompensatedSum::new();
    for (xv, &px) in x.probs().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (yv, &py) in y.probs().iter().enumerate().skip(order + 1) {
            if py == 0.0 {
                continue;
            }
            for j1 in 0..yv - order {
                let count = binomial_coefficient(yv - 1 - j1, order);
                acc.add(px * py * count * d[xv + j1]);
            }
        }
    }
    Ok(acc.value())
}

/// `E[f(X + Y)] = Σ_{k<=N} m_Y^(k) E[Δ^k f(X)] + δ_N(f, X, Y)`.
pub fn taylor_expand(
    f: &TabulatedFunction,
    order: usize,
    x: &FinitePmf,
    y: &FinitePmf,
) -> Result<TaylorExpansion> {
    require(f, x.support_bound() + order)?;
    let mut main = CompensatedSum::new();
    let mut d = f.values().to_vec();
    for k in 0..=order {
        if k > 0 {
            d = differences(&d, 1);
        }
        let m = y.binom_moment(MomentKey::new(k));
        if m != 0.0 {
            main.add(m * x.expect(|v| d[v]));
        }
    }
    Ok(TaylorExpansion {
        main: main.value(),
        delta: delta_remainder(f, order, x, y)?,
    })
}

/// `ε_N(f, X, Y) = -Σ_{d>=0} (-1)^d Σ_{|J|<=N} m_Y^(J) δ_{N-|J|}(Δ^{|J|} f, X, Y)`.
pub fn epsilon_remainder(
    f: &TabulatedFunction,
    order: usize,
    x: &FinitePmf,
    y: &FinitePmf,
) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for j in enumerate_compositions(order) {
        let weight = y.binom_moment_product(&j);
        if weight == 0.0 {
            continue;
        }
        let g = f.forward_difference(j.total())?;
        acc.add(-j.sign() * weight * delta_remainder(&g, order - j.total(), x, y)?);
    }
    Ok(acc.value())
}

/// Main part of the reverse Taylor formula:
/// `Σ_{d>=0} (-1)^d Σ_{|J|<=N} m_Y^(J) E[Δ^{|J|} f(X + Y)]`.
pub fn reverse_taylor_main(
    f: &TabulatedFunction,
    order: usize,
    x: &FinitePmf,
    y: &FinitePmf,
) -> Result<f64> {
    require(f, x.support_bound() + y.support_bound() + order)?;
    let sum = x.convolve(y);
    let mut acc = CompensatedSum::new();
    for j in enumerate_compositions(order) {
        let weight = y.binom_moment_product(&j);
        if weight == 0.0 {
            continue;
        }
        let d = differences(f.values(), j.total());
        acc.add(j.sign() * weight * sum.expect(|v| d[v]));
    }
    Ok(acc.value())
}

/// One summand `X_i` of `W`, with its zero-biased law and `W^(i) = W - X_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentTerm {
    pub index: usize,
    pub lambda: f64,
    pub x: FinitePmf,
    pub x_star: FinitePmf,
    pub rest: FinitePmf,
}

/// `W = X_1 + ... + X_n` with everything the expansion needs precomputed.
///
/// Components with zero mean carry a factor `λ_i = 0` and are left out of
/// [`SumModel::terms`].
#[derive(Debug, Clone, PartialEq)]
pub struct SumModel {
    components: Vec<FinitePmf>,
    w: FinitePmf,
    leave_one_out: Vec<FinitePmf>,
    terms: Vec<ComponentTerm>,
    lambda_w: f64,
}

impl SumModel {
    pub fn new(components: Vec<FinitePmf>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::BadParameter("a sum needs at least one component".into()));
        }
        let n = components.len();
        // prefix[i] = X_0 * ... * X_{i-1}, suffix[i] = X_i * ... * X_{n-1}
        let mut prefix = vec![FinitePmf::point_mass(0)];
        for c in &components {
            let next = prefix.last().unwrap().convolve(c);
            prefix.push(next);
        }
        let mut suffix = vec![FinitePmf::point_mass(0); n + 1];
        for i in (0..n).rev() {
            suffix[i] = components[i].convolve(&suffix[i + 1]);
        }
        let leave_one_out: Vec<FinitePmf> =
            (0..n).map(|i| prefix[i].convolve(&suffix[i + 1])).collect();
        let w = prefix.pop().unwrap();
        let lambda_w: f64 = components.iter().map(FinitePmf::mean).sum();
        if lambda_w.is_nan() || lambda_w <= 0.0 {
            return Err(Error::ZeroMean);
        }
        let mut terms = Vec::new();
        for (index, x) in components.iter().enumerate() {
            if x.mean() <= 0.0 {
                continue;
            }
            terms.push(ComponentTerm {
                index,
                lambda: x.mean(),
                x: x.clone(),
                x_star: x.zero_bias()?,
                rest: leave_one_out[index].clone(),
            });
        }
        Ok(Self {
            components,
            w,
            leave_one_out,
            terms,
            lambda_w,
        })
    }

    pub fn components(&self) -> &[FinitePmf] {
        &self.components
    }

    pub fn w(&self) -> &FinitePmf {
        &self.w
    }

    pub fn leave_one_out(&self, i: usize) -> &FinitePmf {
        &self.leave_one_out[i]
    }

    pub fn terms(&self) -> &[ComponentTerm] {
        &self.terms
    }

    pub fn lambda_w(&self) -> f64 {
        self.lambda_w
    }

    pub fn support_bound(&self) -> usize {
        self.w.support_bound()
    }
}

/// `max(32, ceil(4 λ_W + 8 (N + p) + s_W))`.
pub fn default_grid_bound(model: &SumModel, order: usize, p: f64) -> usize {
    let raw = 4.0 * model.lambda_w() + 8.0 * (order as f64 + p) + model.support_bound() as f64;
    (raw.ceil() as usize).max(32)
}

/// A function reached by the recursion, with its Stein solution.
#[derive(Debug, Clone)]
pub struct FunctionNode {
    /// The test function `g`.
    pub g: TabulatedFunction,
    /// `P_{λ_W}(g)` with its tail certificate.
    pub poisson: PoissonExpectation,
    /// `f_g`, with `f_g(0) = 0`.
    pub f: TabulatedFunction,
    /// `f_g(· + 1)`.
    pub f_shifted: TabulatedFunction,
}

/// Lazily built tree of test functions.
///
/// The root is `h`; the child of a node `g` along difference order `j` is
/// `Δ^j f_g(· + 1)`. A path `[j_1, j_2, ...]` names a node uniquely. Stein
/// solutions do not commute with `Δ`, so the whole path is the cache key.
#[derive(Debug, Clone)]
pub struct FunctionTree {
    ctx: SteinContext,
    nodes: HashMap<Vec<usize>, Rc<FunctionNode>>,
}

impl FunctionTree {
    pub fn new(h: TabulatedFunction, ctx: SteinContext) -> Result<Self> {
        let mut tree = Self {
            ctx,
            nodes: HashMap::new(),
        };
        let root = tree.build(h)?;
        tree.nodes.insert(Vec::new(), root);
        Ok(tree)
    }

    pub fn context(&self) -> SteinContext {
        self.ctx
    }

    fn build(&self, g: TabulatedFunction) -> Result<Rc<FunctionNode>> {
        let poisson = self.ctx.expectation(&g)?;
        let f = self.ctx.solve(&g)?;
        let f_shifted = f.shift()?;
        Ok(Rc::new(FunctionNode {
            g,
            poisson,
            f,
            f_shifted,
        }))
    }

    pub fn node(&mut self, path: &[usize]) -> Result<Rc<FunctionNode>> {
        if let Some(n) = self.nodes.get(path) {
            return Ok(Rc::clone(n));
        }
        let (&last, parent_path) = path.split_last().expect("root is always present");
        let parent = self.node(parent_path)?;
        let g = parent.f_shifted.forward_difference(last)?;
        let node = self.build(g)?;
        self.nodes.insert(path.to_vec(), Rc::clone(&node));
        Ok(node)
    }

    pub fn root(&self) -> Rc<FunctionNode> {
        Rc::clone(&self.nodes[&Vec::new()])
    }

    /// Smallest Stein-solution grid bound among the nodes built so far.
    pub fn min_solution_grid(&self) -> usize {
        self.nodes
            .values()
            .map(|n| n.f.grid_bound())
            .min()
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Moments and composition coefficients for one component.
#[derive(Debug, Clone)]
pub(crate) struct TermCoefficients {
    /// `m_{X_i*}^(k)` for `k = 0..=order+1`.
    pub(crate) m_star: Vec<f64>,
    /// `(J, (-1)^{d-1} m(J°)(m*(J†) - m(J†)), m(J°)(m*(J†) + m(J†)))`, `|J| >= 1`.
    pub(crate) compositions: Vec<(Composition, f64, f64)>,
}

impl TermCoefficients {
    pub(crate) fn new(term: &ComponentTerm, order: usize) -> Self {
        let m_x: Vec<f64> = (0..=order + 1)
            .map(|k| term.x.binom_moment(MomentKey::new(k)))
            .collect();
        let m_star: Vec<f64> = (0..=order + 1)
            .map(|k| term.x_star.binom_moment(MomentKey::new(k)))
            .collect();
        let compositions = enumerate_compositions(order)
            .into_iter()
            .filter(|j| !j.is_empty())
            .map(|j| {
                let head: f64 = j.head().iter().map(|&k| m_x[k]).product();
                let last = j.last().unwrap();
                let signed = -j.sign() * head * (m_star[last] - m_x[last]);
                let absolute = head * (m_star[last] + m_x[last]);
                (j, signed, absolute)
            })
            .collect();
        Self {
            m_star,
            compositions,
        }
    }
}

/// Memoized evaluation of `C_N` and of the remainder recursion for one `h`.
#[derive(Debug)]
pub struct Expansion<'m> {
    model: &'m SumModel,
    max_order: usize,
    tree: FunctionTree,
    coefficients: Vec<TermCoefficients>,
    c_memo: HashMap<(Vec<usize>, usize), f64>,
    e_memo: HashMap<(Vec<usize>, usize), f64>,
}

impl<'m> Expansion<'m> {
    pub fn new(
        model: &'m SumModel,
        h: &TabulatedFunction,
        max_order: usize,
        tail_tol: f64,
    ) -> Result<Self> {
        let needed = model.support_bound() + max_order + 2;
        require(h, needed)?;
        let ctx = SteinContext::new(model.lambda_w(), tail_tol)?;
        let tree = FunctionTree::new(h.clone(), ctx)?;
        let coefficients = model
            .terms()
            .iter()
            .map(|t| TermCoefficients::new(t, max_order))
            .collect();
        Ok(Self {
            model,
            max_order,
            tree,
            coefficients,
            c_memo: HashMap::new(),
            e_memo: HashMap::new(),
        })
    }

    pub fn tree(&self) -> &FunctionTree {
        &self.tree
    }

    pub fn model(&self) -> &SumModel {
        self.model
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if order > self.max_order {
            return Err(Error::BadParameter(format!(
                "order {order} exceeds the prepared maximum {}",
                self.max_order
            )));
        }
        Ok(())
    }

    /// `C_N(h)`.
    pub fn c(&mut self, order: usize) -> Result<f64> {
        self.check_order(order)?;
        self.c_at(&[], order)
    }

    /// `e_N(h)` from the remainder recursion (`δ`, `ε` and inner `e` terms).
    pub fn e_via_remainders(&mut self, order: usize) -> Result<f64> {
        self.check_order(order)?;
        self.e_at(&[], order)
    }

    fn c_at(&mut self, path: &[usize], order: usize) -> Result<f64> {
        let key = (path.to_vec(), order);
        if let Some(&v) = self.c_memo.get(&key) {
            return Ok(v);
        }
        let node = self.tree.node(path)?;
        let mut acc = CompensatedSum::new();
        acc.add(node.poisson.value);
        for i in 0..self.coefficients.len() {
            let lambda = self.model.terms()[i].lambda;
            let n_comp = self.coefficients[i].compositions.len();
            for c in 0..n_comp {
                let (total, signed) = {
                    let (j, signed, _) = &self.coefficients[i].compositions[c];
                    (j.total(), *signed)
                };
                if total > order || signed == 0.0 {
                    continue;
                }
                let child = extend(path, total);
                let inner = self.c_at(&child, order - total)?;
                acc.add(lambda * signed * inner);
            }
        }
        let v = acc.value();
        self.c_memo.insert(key, v);
        Ok(v)
    }

    fn e_at(&mut self, path: &[usize], order: usize) -> Result<f64> {
        let key = (path.to_vec(), order);
        if let Some(&v) = self.e_memo.get(&key) {
            return Ok(v);
        }
        let node = self.tree.node(path)?;
        let shifted = &node.f_shifted;
        let mut total_acc = CompensatedSum::new();
        for i in 0..self.coefficients.len() {
            let term = &self.model.terms()[i];
            let mut acc = CompensatedSum::new();
            let n_comp = self.coefficients[i].compositions.len();
            for c in 0..n_comp {
                let (total, signed) = {
                    let (j, signed, _) = &self.coefficients[i].compositions[c];
                    (j.total(), *signed)
                };
                if total > order || signed == 0.0 {
                    continue;
                }
                let child = extend(path, total);
                acc.add(signed * self.e_at(&child, order - total)?);
            }
            for k in 0..=order {
                let m_star = self.coefficients[i].m_star[k];
                if m_star == 0.0 {
                    continue;
                }
                let dk = shifted.forward_difference(k)?;
                acc.add(m_star * epsilon_remainder(&dk, order - k, &term.rest, &term.x)?);
            }
            acc.add(delta_remainder(shifted, order, &term.rest, &term.x_star)?);
            total_acc.add(term.lambda * acc.value());
        }
        let v = total_acc.value();
        self.e_memo.insert(key, v);
        Ok(v)
    }
}

fn extend(path: &[usize], j: usize) -> Vec<usize> {
    let mut p = Vec::with_capacity(path.len() + 1);
    p.extend_from_slice(path);
    p.push(j);
    p
}

/// One row of an [`ExpansionReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct OrderRecord {
    pub k: usize,
    pub c: f64,
    /// `E[h(W)] - C_k`, when the oracle ran.
    pub e_exact: Option<f64>,
    /// `e_k` from the remainder recursion.
    pub e_via_remainders: f64,
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub order: usize,
    pub per_order: Vec<OrderRecord>,
    pub oracle_value: Option<f64>,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Computes `C_k` and `e_k` for `k = 0..=order`, with `E[h(W)]` from the
/// exact oracle when `with_oracle` is set.
pub fn expand_with(
    model: &SumModel,
    h: &TabulatedFunction,
    order: usize,
    tail_tol: f64,
    with_oracle: bool,
) -> Result<ExpansionReport> {
    let mut engine = Expansion::new(model, h, order, tail_tol)?;
    let oracle_value = if with_oracle {
        Some(oracle::exact_expectation(model.components(), h)?)
    } else {
        None
    };
    let mut per_order = Vec::with_capacity(order + 1);
    let mut residual_max: f64 = 0.0;
    for k in 0..=order {
        let c = engine.c(k)?;
        let e_rec = engine.e_via_remainders(k)?;
        let e_exact = oracle_value.map(|o| o - c);
        if let Some(e) = e_exact {
            residual_max = residual_max.max((e - e_rec).abs());
        }
        per_order.push(OrderRecord {
            k,
            c,
            e_exact,
            e_via_remainders: e_rec,
            bound: None,
        });
    }
    let root = engine.tree().root();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("grid_bound".to_string(), h.grid_bound() as f64);
    diagnostics.insert("lambda_w".to_string(), model.lambda_w());
    diagnostics.insert("poisson_tail_bound".to_string(), root.poisson.tail_bound);
    diagnostics.insert("stein_grid_bound".to_string(), root.f.grid_bound() as f64);
    diagnostics.insert(
        "min_stein_grid_bound".to_string(),
        engine.tree().min_solution_grid() as f64,
    );
    diagnostics.insert("function_nodes".to_string(), engine.tree().len() as f64);
    diagnostics.insert("stein_envelope_k_measured".to_string(), root.f.envelope().k());
    if oracle_value.is_some() {
        diagnostics.insert("dual_path_residual_max".to_string(), residual_max);
    }
    Ok(ExpansionReport {
        order,
        per_order,
        oracle_value,
        diagnostics,
    })
}

/// [`expand_with`] including the oracle.
pub fn expand(
    model: &SumModel,
    h: &TabulatedFunction,
    order: usize,
    tail_tol: f64,
) -> Result<ExpansionReport> {
    expand_with(model, h, order, tail_tol, true)
}
