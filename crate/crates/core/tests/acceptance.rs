//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p poisson-zb --test acceptance -- --nocapture` to see
//! the per-criterion lines.

mod common;

use std::path::PathBuf;
use std::process::Command;

use common::*;
use poisson_zb::bounds::{
    delta_bound, e0_bound, epsilon_bound, seminorm, RemainderBounds,
};
use poisson_zb::expansion::{
    delta_remainder, epsilon_remainder, expand, reverse_taylor_main, taylor_expand, Expansion,
};
use poisson_zb::oracle::{brute_delta, exact_expectation};
use poisson_zb::stein::{FunctionSpec, SteinContext, TabulatedFunction};
use poisson_zb::{FinitePmf, SumModel};
use rand::Rng;

const TAIL_TOL: f64 = 1e-12;

// criterion tolerances
const STEIN_RESIDUAL_TOL: f64 = 1e-9;
const ZERO_BIAS_TOL: f64 = 1e-12;
const FIXED_POINT_TOL: f64 = 1e-11;
const TAYLOR_TOL: f64 = 1e-10;
const BRUTE_DELTA_TOL: f64 = 1e-12;
const CONSISTENCY_TOL: f64 = 1e-9;
const DUAL_PATH_TOL: f64 = 1e-9;
const BERNOULLI_REDUCTION_TOL: f64 = 1e-10;
const TAU_TOL: f64 = 1e-9;
const HALVING_FACTOR: f64 = 3.0;
/// Floor for dominance checks: rounding plus the certified truncation of `C_N`.
const DOMINANCE_FLOOR: f64 = 1e-12;

fn builtin(spec: &FunctionSpec, m: usize) -> TabulatedFunction {
    TabulatedFunction::builtin(spec, m).unwrap()
}

fn model_grid(model: &SumModel) -> usize {
    model.support_bound() + 70
}

#[test]
fn criterion_01_stein_residual() {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (_, spec) in builtin_set() {
        for lambda in [0.1, 0.5, 1.0, 3.0] {
            let h = builtin(&spec, 80);
            let ctx = SteinContext::new(lambda, TAIL_TOL).unwrap();
            let f = ctx.solve(&h).unwrap();
            let centre = ctx.expectation(&h).unwrap().value;
            let max_h = h.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for x in 1..f.grid_bound() {
                let r = x as f64 * f.value(x) - lambda * f.value(x + 1) - (h.value(x) - centre);
                let scaled = r.abs() / (1.0 + max_h);
                worst = worst.max(scaled);
                pass &= scaled <= STEIN_RESIDUAL_TOL;
            }
        }
    }
    print_line(1, "Stein residual", pass, &format!("max scaled residual {worst:.3e}"));
    assert!(pass);
}

#[test]
fn criterion_02_zero_bias_identity() {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for _ in 0..200 {
        let s = r.gen_range(1..=12);
        let x = random_pmf(&mut r, s);
        let f: Vec<f64> = (0..=s + 1).map(|_| r.gen_range(-3.0..3.0)).collect();
        let z = x.zero_bias().unwrap();
        let lhs = x.expect(|v| v as f64 * f[v]);
        let rhs = x.mean() * z.expect(|v| f[v + 1]);
        let scaled = (lhs - rhs).abs() / (1.0 + lhs.abs());
        worst = worst.max(scaled);
        pass &= scaled <= ZERO_BIAS_TOL;
    }
    print_line(2, "zero-bias identity", pass, &format!("200 pairs, max {worst:.3e}"));
    assert!(pass);
}

#[test]
fn criterion_03_poisson_fixed_point() {
    let mut worst: f64 = 0.0;
    for lambda in [0.2, 1.0, 4.0] {
        let pois = FinitePmf::poisson_truncated(lambda, 1e-14).unwrap();
        let zb = pois.zero_bias().unwrap();
        for x in 0..=pois.support_bound() {
            worst = worst.max((zb.pmf(x) - pois.pmf(x)).abs());
        }
    }
    let pass = worst <= FIXED_POINT_TOL;
    print_line(3, "Poisson fixed point", pass, &format!("max entry gap {worst:.3e}"));
    assert!(pass);
}

#[test]
fn criterion_04_taylor_identities() {
    let corpus = taylor_corpus(4, 200);
    let (mut t_worst, mut r_worst, mut b_worst) = (0.0f64, 0.0f64, 0.0f64);
    for inst in &corpus {
        let xy = [inst.x.clone(), inst.y.clone()];
        let truth = exact_expectation(&xy, &inst.f).unwrap();
        let t = taylor_expand(&inst.f, inst.order, &inst.x, &inst.y).unwrap();
        t_worst = t_worst.max((t.main + t.delta - truth).abs());

        let main = reverse_taylor_main(&inst.f, inst.order, &inst.x, &inst.y).unwrap();
        let eps = epsilon_remainder(&inst.f, inst.order, &inst.x, &inst.y).unwrap();
        let ex = exact_expectation(std::slice::from_ref(&inst.x), &inst.f).unwrap();
        r_worst = r_worst.max((ex - main - eps).abs());

        let brute = brute_delta(&inst.f, inst.order, &inst.x, &inst.y).unwrap();
        let fast = delta_remainder(&inst.f, inst.order, &inst.x, &inst.y).unwrap();
        b_worst = b_worst.max((brute - fast).abs());
    }
    let pass = t_worst <= TAYLOR_TOL && r_worst <= TAYLOR_TOL && b_worst <= BRUTE_DELTA_TOL;
    print_line(
        4,
        "discrete Taylor and reverse Taylor",
        pass,
        &format!("taylor {t_worst:.3e}, reverse {r_worst:.3e}, brute delta {b_worst:.3e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_expansion_consistency() {
    let models = model_corpus(5, 24);
    let (mut c_worst, mut d_worst) = (0.0f64, 0.0f64);
    let mut pass = true;
    let mut cases = 0;
    for model in &models {
        for (_, spec) in builtin_set() {
            let h = builtin(&spec, model_grid(model));
            let report = expand(model, &h, 3, TAIL_TOL).unwrap();
            let oracle = report.oracle_value.unwrap();
            for rec in &report.per_order {
                let scaled = (rec.c + rec.e_via_remainders - oracle).abs() / (1.0 + oracle.abs());
                let dual = (rec.e_via_remainders - rec.e_exact.unwrap()).abs();
                c_worst = c_worst.max(scaled);
                d_worst = d_worst.max(dual);
                pass &= scaled <= CONSISTENCY_TOL && dual <= DUAL_PATH_TOL;
                cases += 1;
            }
        }
    }
    print_line(
        5,
        "expansion consistency",
        pass,
        &format!("{cases} cases, scaled {c_worst:.3e}, dual path {d_worst:.3e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_bernoulli_reduction() {
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let n = 1 + trial % 6;
        let ps: Vec<f64> = (0..n).map(|_| r.gen_range(0.01..0.3)).collect();
        let model = SumModel::new(ps.iter().map(|&p| FinitePmf::bernoulli(p).unwrap()).collect())
            .unwrap();
        let sum_sq: f64 = ps.iter().map(|p| p * p).sum();
        for (_, spec) in builtin_set() {
            let h = builtin(&spec, model_grid(&model));
            let mut engine = Expansion::new(&model, &h, 1, TAIL_TOL).unwrap();
            let c0 = engine.c(0).unwrap();
            let c1 = engine.c(1).unwrap();
            let ctx = SteinContext::new(model.lambda_w(), TAIL_TOL).unwrap();
            let g = ctx.solve(&h).unwrap().shift().unwrap().forward_difference(1).unwrap();
            let pg = ctx.expectation(&g).unwrap().value;
            worst = worst.max((c1 - (c0 - sum_sq * pg)).abs());
        }
    }
    let pass = worst <= BERNOULLI_REDUCTION_TOL;
    print_line(6, "Bernoulli first-order reduction", pass, &format!("max gap {worst:.3e}"));
    assert!(pass);
}

#[test]
fn criterion_07_tau_identity() {
    let m = 80;
    let mut worst: f64 = 0.0;
    for (_, spec) in builtin_set() {
        for lambda in [0.1, 0.5, 1.0, 3.0] {
            let h = builtin(&spec, m);
            let ctx = SteinContext::new(lambda, TAIL_TOL).unwrap();
            let fh = ctx.solve_modified(&h).unwrap();
            let ft = ctx.solve_modified(&h.tau().unwrap()).unwrap();
            assert!(fh.grid_bound() > m / 2 && ft.grid_bound() >= m / 2);
            for x in 1..=m / 2 {
                worst = worst.max((ft.value(x) - fh.value(x + 1) / x as f64).abs());
            }
        }
    }
    let pass = worst <= TAU_TOL;
    print_line(7, "tau identity", pass, &format!("max deviation {worst:.3e}"));
    assert!(pass);
}

#[test]
fn criterion_08_bound_dominance() {
    let mut violations = Vec::new();
    let mut checked = 0usize;

    for (i, inst) in taylor_corpus(8, 200).iter().enumerate() {
        let shifted = inst.f.shift().unwrap();
        let norm = seminorm(&inst.f, inst.order, inst.p).unwrap();
        for k in 0..=inst.order {
            let g = shifted.forward_difference(k).unwrap();
            let rest = inst.order - k;
            let d = delta_remainder(&g, rest, &inst.x, &inst.y).unwrap();
            let e = epsilon_remainder(&g, rest, &inst.x, &inst.y).unwrap();
            let db = delta_bound(&norm, &inst.x, &inst.y, inst.order, k, inst.p);
            let eb = epsilon_bound(&norm, &inst.x, &inst.y, inst.order, k, inst.p);
            checked += 2;
            if d.abs() > db + DOMINANCE_FLOOR {
                violations.push(format!("delta instance {i} k {k}: {d} > {db}"));
            }
            if e.abs() > eb + DOMINANCE_FLOOR {
                violations.push(format!("epsilon instance {i} k {k}: {e} > {eb}"));
            }
        }
    }

    for (mi, model) in model_corpus(5, 24).iter().enumerate() {
        for (name, spec) in builtin_set() {
            let h = builtin(&spec, model_grid(model));
            let p = h.envelope().p();
            let report = expand(model, &h, 3, TAIL_TOL).unwrap();
            let oracle = report.oracle_value.unwrap();
            let floor = DOMINANCE_FLOOR * (1.0 + oracle.abs());
            let e0b = e0_bound(model, &h, p, TAIL_TOL).unwrap();
            let e0 = report.per_order[0].e_exact.unwrap();
            checked += 1;
            if e0.abs() > e0b + floor {
                violations.push(format!("e0 model {mi} h {name}: {e0} > {e0b}"));
            }
            let mut bounds = RemainderBounds::new(model, &h, 3, p, TAIL_TOL).unwrap();
            for rec in &report.per_order[1..] {
                let b = bounds.bound(rec.k).unwrap();
                let e = rec.e_exact.unwrap();
                checked += 1;
                if e.abs() > b + floor {
                    violations.push(format!("e{} model {mi} h {name}: {e} > {b}", rec.k));
                }
            }
        }
    }
    let pass = violations.is_empty();
    print_line(
        8,
        "bound dominance",
        pass,
        &format!("{checked} checks, {} violations", violations.len()),
    );
    assert!(pass, "{violations:#?}");
}

/// `e_0, e_1, e_2` for `h = x²` on independent Bernoulli summands.
fn x2_errors(ps: &[f64]) -> Vec<f64> {
    let model =
        SumModel::new(ps.iter().map(|&p| FinitePmf::bernoulli(p).unwrap()).collect()).unwrap();
    let h = builtin(&FunctionSpec::Monomial(2.0), model_grid(&model));
    let report = expand(&model, &h, 2, TAIL_TOL).unwrap();
    report.per_order.iter().map(|r| r.e_exact.unwrap()).collect()
}

#[test]
fn criterion_09_order_improvement() {
    let mut tuples = vec![vec![0.01, 0.02, 0.03, 0.04, 0.05]];
    let mut r = rng(9);
    for _ in 0..20 {
        tuples.push((0..5).map(|_| r.gen_range(0.001..=0.05)).collect());
    }

    let (mut first_failures, mut second_failures) = (0, 0);
    let mut min_factor = f64::INFINITY;
    let mut worst_e1: f64 = 0.0;
    let mut worst_e2: f64 = 0.0;
    for ps in &tuples {
        let full = x2_errors(ps);
        let halved: Vec<f64> = ps.iter().map(|p| p / 2.0).collect();
        let half = x2_errors(&halved);
        min_factor = min_factor.min(full[0].abs() / half[0].abs());
        worst_e1 = worst_e1.max(full[1].abs());
        worst_e2 = worst_e2.max(full[2].abs());
        first_failures += usize::from(full[1].abs() >= full[0].abs());
        second_failures += usize::from(full[2].abs() >= full[1].abs());
    }
    let pass = first_failures == 0 && second_failures == 0 && min_factor >= HALVING_FACTOR;
    print_line(
        9,
        "order improvement",
        pass,
        &format!(
            "{} tuples; |e_1| >= |e_0| in {first_failures}, |e_2| >= |e_1| in {second_failures}; \
             max |e_1| {worst_e1:.3e}, max |e_2| {worst_e2:.3e}; min halving factor {min_factor:.6}",
            tuples.len()
        ),
    );
    assert!(pass);
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn run_cli(config: &std::path::Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_poisson-zb"))
        .arg("--config")
        .arg(config)
        .output()
        .unwrap()
}

#[test]
fn criterion_10_cli_golden() {
    let mut notes = Vec::new();
    let mut pass = true;
    for name in ["mean_order0", "poisson_order2"] {
        let config = golden_dir().join(format!("{name}.json"));
        let expected = std::fs::read(golden_dir().join(format!("{name}.expected.json"))).unwrap();
        let first = run_cli(&config);
        let second = run_cli(&config);
        let ok = first.status.code() == Some(0)
            && first.stdout == expected
            && first.stdout == second.stdout;
        if !ok {
            notes.push(format!("{name} differs from golden"));
        }
        pass &= ok;
    }

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"order": 1, "variables": [{"kind": "bernoulli", "p": "x"}]"#).unwrap();
    let out = run_cli(&bad);
    let malformed_ok = out.status.code() == Some(2);
    pass &= malformed_ok;

    let wrong_field = dir.path().join("wrong.json");
    std::fs::write(
        &wrong_field,
        r#"{"order": 1, "variables": [{"kind": "bernoulli", "p": "x"}], "function": {"kind": "monomial", "power": 1}}"#,
    )
    .unwrap();
    let out = run_cli(&wrong_field);
    let named = String::from_utf8_lossy(&out.stderr).contains("variables[0].p");
    pass &= out.status.code() == Some(2) && named;

    print_line(
        10,
        "CLI golden files and exit codes",
        pass,
        &format!("malformed exit 2: {malformed_ok}, field named: {named} {notes:?}"),
    );
    assert!(pass);
}
