//! JSON problem configurations and expansion reports.

use serde::{Deserialize, Serialize};

use crate::bounds::RemainderBounds;
use crate::dist::FinitePmf;
use crate::error::Result;
use crate::expansion::{default_grid_bound, expand_with, SumModel};
use crate::stein::{FunctionSpec, GrowthEnvelope, TabulatedFunction};

fn default_tail_tol() -> f64 {
    1e-12
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct ProblemConfig {
    pub order: usize,
    pub tail_tol: f64,
    pub grid_bound: Option<usize>,
    pub variables: Vec<VariableSpec>,
    pub function: FunctionConfig,
    pub report: ReportOptions,
}

/// Top-level shape; the tagged entries are decoded separately so that errors
/// inside them can name the exact field.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    order: usize,
    #[serde(default = "default_tail_tol")]
    tail_tol: f64,
    #[serde(default)]
    grid_bound: Option<usize>,
    variables: Vec<serde_json::Value>,
    function: serde_json::Value,
    #[serde(default)]
    report: ReportOptions,
}

impl TryFrom<RawConfig> for ProblemConfig {
    type Error = String;

    fn try_from(raw: RawConfig) -> std::result::Result<Self, String> {
        let variables = raw
            .variables
            .into_iter()
            .enumerate()
            .map(|(i, v)| decode_tagged(v, &format!("variables[{i}]")))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self {
            order: raw.order,
            tail_tol: raw.tail_tol,
            grid_bound: raw.grid_bound,
            variables,
            function: decode_tagged(raw.function, "function")?,
            report: raw.report,
        })
    }
}

/// Decodes `{"kind": name, ...fields}` as the externally tagged
/// `{name: {...fields}}`, reporting errors as `prefix.field: message`.
fn decode_tagged<T: serde::de::DeserializeOwned>(
    value: serde_json::Value,
    prefix: &str,
) -> std::result::Result<T, String> {
    let serde_json::Value::Object(mut fields) = value else {
        return Err(format!("{prefix}: expected an object with a \"kind\" field"));
    };
    let kind = match fields.remove("kind") {
        Some(serde_json::Value::String(kind)) => kind,
        Some(_) => return Err(format!("{prefix}.kind: expected a string")),
        None => return Err(format!("{prefix}.kind: missing field")),
    };
    let mut wrapped = serde_json::Map::new();
    wrapped.insert(kind, serde_json::Value::Object(fields));
    serde_path_to_error::deserialize(serde_json::Value::Object(wrapped)).map_err(|e| {
        let path = e.path().to_string();
        // the path leads with the variant name; "." means the variant itself
        if path == "." {
            return format!("{prefix}.kind: {}", e.inner());
        }
        match path.split_once('.') {
            Some((_, field)) => format!("{prefix}.{field}: {}", e.inner()),
            None => format!("{prefix}: {}", e.inner()),
        }
    })
}

/// A summand law. `repeat` adds that many independent copies.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum VariableSpec {
    Bernoulli {
        p: f64,
        #[serde(default = "one")]
        repeat: usize,
    },
    Binomial {
        n: usize,
        p: f64,
        #[serde(default = "one")]
        repeat: usize,
    },
    Poisson {
        lambda: f64,
        /// Truncation tolerance; defaults to the problem's `tail_tol`.
        #[serde(default)]
        tail_tol: Option<f64>,
        #[serde(default = "one")]
        repeat: usize,
    },
    Pmf {
        weights: Vec<f64>,
        #[serde(default = "one")]
        repeat: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    #[serde(rename = "K")]
    pub k: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionConfig {
    Polynomial { coefficients: Vec<f64> },
    Indicator { set: Vec<usize> },
    Monomial { power: f64 },
    Table { values: Vec<f64>, envelope: EnvelopeConfig },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportOptions {
    #[serde(default = "yes")]
    pub include_bounds: bool,
    #[serde(default = "yes")]
    pub include_oracle: bool,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            include_bounds: true,
            include_oracle: true,
            format: OutputFormat::Json,
        }
    }
}

/// Parses a config, naming the offending field on failure.
pub fn parse_config(text: &str) -> std::result::Result<ProblemConfig, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            e.inner().to_string()
        } else {
            format!("{path}: {}", e.inner())
        }
    })
}

impl ProblemConfig {
    pub fn components(&self) -> Result<Vec<FinitePmf>> {
        let mut out = Vec::new();
        for v in &self.variables {
            let (pmf, repeat) = match v {
                VariableSpec::Bernoulli { p, repeat } => (FinitePmf::bernoulli(*p)?, *repeat),
                VariableSpec::Binomial { n, p, repeat } => {
                    (FinitePmf::binomial(*n, *p)?, *repeat)
                }
                VariableSpec::Poisson {
                    lambda,
                    tail_tol,
                    repeat,
                } => (
                    FinitePmf::poisson_truncated(*lambda, tail_tol.unwrap_or(self.tail_tol))?,
                    *repeat,
                ),
                VariableSpec::Pmf { weights, repeat } => {
                    (FinitePmf::from_weights(weights)?, *repeat)
                }
            };
            out.extend(std::iter::repeat_n(pmf, repeat));
        }
        Ok(out)
    }

    pub fn function_spec(&self) -> Result<FunctionSpec> {
        Ok(match &self.function {
            FunctionConfig::Polynomial { coefficients } => {
                FunctionSpec::Polynomial(coefficients.clone())
            }
            FunctionConfig::Indicator { set } => FunctionSpec::Indicator(set.clone()),
            FunctionConfig::Monomial { power } => FunctionSpec::Monomial(*power),
            FunctionConfig::Table { values, envelope } => FunctionSpec::Table {
                values: values.clone(),
                envelope: GrowthEnvelope::new(envelope.k, envelope.p)?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub k: usize,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_exact: Option<f64>,
    #[serde(rename = "e_via_eq11")]
    pub e_via_remainders: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormRecord {
    pub path: Vec<usize>,
    pub order: usize,
    pub p: f64,
    pub value: f64,
    pub measured_on: [usize; 2],
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub order: usize,
    pub grid_bound: usize,
    pub grid_bound_source: String,
    pub tail_tol: f64,
    pub lambda_w: f64,
    pub components: usize,
    pub support_bound: usize,
    pub poisson_tail_bound: f64,
    pub stein_grid_bound: usize,
    pub min_stein_grid_bound: usize,
    /// Stein-solution envelopes are measured on the grid, not proven.
    pub stein_envelope: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_path_residual_max: Option<f64>,
    /// Tolerance within which `C + e_via_eq11` reproduces the oracle.
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_status: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seminorms: Vec<SeminormRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub orders: Vec<OrderRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    pub provenance: Provenance,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per order: `k, C_k, e_k, bound_k, bound/|e|`.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:>3}  {:>24}  {:>24}  {:>24}  {:>12}\n",
            "k", "C_k", "e_k", "bound_k", "bound/|e|"
        );
        for row in &self.orders {
            let e = row.e_exact.unwrap_or(row.e_via_remainders);
            let bound = row
                .bound
                .map(|b| format!("{b:.16e}"))
                .unwrap_or_else(|| "-".into());
            let ratio = match row.bound {
                Some(b) if e != 0.0 => format!("{:.4e}", b / e.abs()),
                Some(_) => "inf".into(),
                None => "-".into(),
            };
            out.push_str(&format!(
                "{:>3}  {:>24.16e}  {:>24.16e}  {:>24}  {:>12}\n",
                row.k, row.c, e, bound, ratio
            ));
        }
        if let Some(o) = self.oracle {
            out.push_str(&format!("oracle E[h(W)] = {o:.16e}\n"));
        }
        out
    }
}

/// Builds the model, runs the expansion and attaches bounds and the oracle.
pub fn run(config: &ProblemConfig) -> Result<Report> {
    let model = SumModel::new(config.components()?)?;
    let spec = config.function_spec()?;
    let order = config.order;
    let tail_tol = config.tail_tol;
    let p = probe_exponent(&spec);
    let (grid_bound, grid_bound_source) = match config.grid_bound {
        Some(m) => (m, "config"),
        None => (default_grid_bound(&model, order, p), "default"),
    };
    let h = TabulatedFunction::builtin(&spec, grid_bound)?;
    let p = h.envelope().p();

    let expansion = expand_with(&model, &h, order, tail_tol, config.report.include_oracle)?;
    let mut orders: Vec<OrderRow> = expansion
        .per_order
        .iter()
        .map(|r| OrderRow {
            k: r.k,
            c: r.c,
            e_exact: r.e_exact,
            e_via_remainders: r.e_via_remainders,
            bound: None,
        })
        .collect();

    let mut seminorms = Vec::new();
    let mut bound_status = None;
    if config.report.include_bounds {
        let mut bounds = RemainderBounds::new(&model, &h, order, p, tail_tol)?;
        for row in orders.iter_mut() {
            row.bound = Some(bounds.bound(row.k)?);
        }
        bound_status = Some(
            if bounds.grid_certified() {
                "grid-certified"
            } else {
                "grid-measured"
            }
            .to_string(),
        );
        let mut norms: Vec<_> = bounds.norms().to_vec();
        norms.sort_by(|a, b| (a.1.order, &a.0).cmp(&(b.1.order, &b.0)));
        seminorms = norms
            .into_iter()
            .map(|(path, n)| SeminormRecord {
                path,
                order: n.order,
                p: n.p,
                value: n.value,
                measured_on: [n.measured_on.0, n.measured_on.1],
                exact: n.exact,
            })
            .collect();
    }

    let d = &expansion.diagnostics;
    let oracle = expansion.oracle_value;
    let provenance = Provenance {
        order,
        grid_bound,
        grid_bound_source: grid_bound_source.to_string(),
        tail_tol,
        lambda_w: model.lambda_w(),
        components: model.components().len(),
        support_bound: model.support_bound(),
        poisson_tail_bound: d["poisson_tail_bound"],
        stein_grid_bound: d["stein_grid_bound"] as usize,
        min_stein_grid_bound: d["min_stein_grid_bound"] as usize,
        stein_envelope: "measured".to_string(),
        dual_path_residual_max: d.get("dual_path_residual_max").copied(),
        tolerance: 1e-9 * (1.0 + oracle.map_or(0.0, f64::abs)),
        bound_exponent: config.report.include_bounds.then_some(p),
        bound_status,
        seminorms,
    };
    Ok(Report {
        orders,
        oracle,
        provenance,
    })
}

/// Growth exponent of a function spec, used to pick the default grid.
fn probe_exponent(spec: &FunctionSpec) -> f64 {
    match spec {
        FunctionSpec::Polynomial(c) => c.iter().rposition(|&v| v != 0.0).unwrap_or(0) as f64,
        FunctionSpec::Indicator(_) => 0.0,
        FunctionSpec::Monomial(q) => *q,
        FunctionSpec::Table { envelope, .. } => envelope.p(),
    }
}
