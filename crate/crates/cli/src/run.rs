//! Experiment kinds and report assembly.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use supertransport::exec;
use supertransport::flows::{even_flow, odd_flow, compose_odd_flows, trotter_table, TrotterRow};
use supertransport::grassmann::{GrassmannElement, GrassmannHom};
use supertransport::random;
use supertransport::transport::{
    constant_path_residual, endpoint_map, gluing_residual, q_naturality, reparam_residual, roundtrip_residual, s_naturality_residual, ConnectionTransport,
    Reparametrization, SuperCurve, TransportFunctor,
};
use supertransport::Error;

use crate::checks::{self, CheckResult, Ctx};
use crate::schema::{self, ConnectionJson, FieldJson, FormJson, PathJson, SchemaError, ValueJson};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    Flow(FlowSpec),
    Trotter(TrotterSpec),
    OddFlow(OddFlowSpec),
    Transport(TransportSpec),
    Roundtrip(RoundtripSpec),
    VerifyAll(VerifyAllSpec),
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::Flow(_) => "flow",
            ExperimentSpec::Trotter(_) => "trotter",
            ExperimentSpec::OddFlow(_) => "odd-flow",
            ExperimentSpec::Transport(_) => "transport",
            ExperimentSpec::Roundtrip(_) => "roundtrip",
            ExperimentSpec::VerifyAll(_) => "verify-all",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub field: FieldJson,
    pub x0: Vec<f64>,
    pub t: f64,
    #[serde(default)]
    pub expected: Option<Vec<f64>>,
    #[serde(default = "default_flow_tol")]
    pub tolerance: f64,
}

fn default_flow_tol() -> f64 {
    1e-8
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrotterSpec {
    #[serde(rename = "X")]
    pub x: FieldJson,
    #[serde(rename = "Y")]
    pub y: FieldJson,
    pub x0: Vec<f64>,
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    #[serde(default = "default_min_order")]
    pub min_order: f64,
    #[serde(default = "default_max_error")]
    pub max_error: f64,
}

fn one() -> f64 {
    1.0
}
fn default_max_n() -> usize {
    1024
}
fn default_min_order() -> f64 {
    0.9
}
fn default_max_error() -> f64 {
    5e-3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OddFlowSpec {
    #[serde(rename = "X")]
    pub x: FieldJson,
    #[serde(rename = "Y")]
    pub y: FieldJson,
    pub forms: Vec<FormJson>,
    #[serde(default = "default_exact_tol")]
    pub tolerance: f64,
}

fn default_exact_tol() -> f64 {
    1e-12
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum TransportCheck {
    Gluing,
    Constant,
    QNaturality,
    SNaturality,
    Reparam,
    Endpoint,
}

const ALL_TRANSPORT_CHECKS: [TransportCheck; 6] =
    [TransportCheck::Gluing, TransportCheck::Constant, TransportCheck::QNaturality, TransportCheck::SNaturality, TransportCheck::Reparam, TransportCheck::Endpoint];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSpec {
    pub connection: ConnectionJson,
    pub path: PathJson,
    pub v0: Vec<ValueJson>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub checks: Option<Vec<TransportCheck>>,
    #[serde(default = "default_transport_tol")]
    pub tolerance: f64,
}

fn default_transport_tol() -> f64 {
    1e-6
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundtripSpec {
    pub connection: ConnectionJson,
    #[serde(default)]
    pub probes: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_roundtrip_tol")]
    pub tolerance: f64,
}

fn default_roundtrip_tol() -> f64 {
    1e-5
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyAllSpec {
    #[serde(default)]
    pub checks: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub report_version: u32,
    pub kind: String,
    pub seed: u64,
    pub ode_tol: f64,
    pub passed: bool,
    pub results: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub data: Value,
    #[serde(skip)]
    pub trotter_rows: Option<Vec<TrotterRow>>,
}

#[derive(Debug)]
pub enum RunError {
    Schema(SchemaError),
    Divergence(String),
    Failed(String),
}

impl From<SchemaError> for RunError {
    fn from(e: SchemaError) -> Self {
        RunError::Schema(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { .. } => RunError::Divergence(e.to_string()),
            Error::InvalidInput(_)
            | Error::Schema(_)
            | Error::DimensionMismatch { .. }
            | Error::IncompatibleAlgebras { .. }
            | Error::MixedParity { .. }
            | Error::ParityInconsistent(_)
            | Error::TooManyGenerators { .. }
            | Error::InvalidReparametrization(_) => RunError::Schema(SchemaError { location: "spec".into(), message: e.to_string() }),
            other => RunError::Failed(other.to_string()),
        }
    }
}

type RunResult<T> = std::result::Result<T, RunError>;

fn result(name: &str, anchor: &str, residual: f64, tolerance: f64, detail: impl Into<String>) -> CheckResult {
    CheckResult { name: name.into(), anchor: anchor.into(), residual, tolerance, passed: residual.is_finite() && residual <= tolerance, detail: detail.into() }
}

fn positive(location: &str, v: f64) -> RunResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SchemaError { location: location.into(), message: format!("must be a positive number, got {v}") }.into())
    }
}

fn finite(location: &str, v: &[f64]) -> RunResult<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(SchemaError { location: location.into(), message: "values must be finite".into() }.into())
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn run(spec: &ExperimentSpec, ctx: &Ctx) -> RunResult<Report> {
    let (results, data, trotter_rows) = match spec {
        ExperimentSpec::Flow(s) => run_flow(s, ctx)?,
        ExperimentSpec::Trotter(s) => run_trotter(s, ctx)?,
        ExperimentSpec::OddFlow(s) => run_odd_flow(s)?,
        ExperimentSpec::Transport(s) => run_transport(s, ctx)?,
        ExperimentSpec::Roundtrip(s) => run_roundtrip(s, ctx)?,
        ExperimentSpec::VerifyAll(s) => run_verify_all(s, ctx)?,
    };
    Ok(Report {
        report_version: REPORT_VERSION,
        kind: spec.kind().into(),
        seed: ctx.seed,
        ode_tol: ctx.ode.tol,
        passed: results.iter().all(|r| r.passed),
        results,
        data,
        trotter_rows,
    })
}

type Parts = (Vec<CheckResult>, Value, Option<Vec<TrotterRow>>);

fn run_flow(s: &FlowSpec, ctx: &Ctx) -> RunResult<Parts> {
    let x = s.field.build("field")?;
    finite("x0", &s.x0)?;
    finite("t", &[s.t])?;
    positive("tolerance", s.tolerance)?;
    if s.x0.len() != x.dim() {
        return Err(SchemaError { location: "x0".into(), message: format!("expected {} coordinates", x.dim()) }.into());
    }
    let end = even_flow(&x, s.t, &s.x0, &ctx.ode)?;
    let half = even_flow(&x, 0.5 * s.t, &even_flow(&x, 0.5 * s.t, &s.x0, &ctx.ode)?, &ctx.ode)?;
    let mut results = vec![result("flow-group-law", "flows of even vector fields", max_diff(&end, &half), 10.0 * ctx.ode.tol, "γ_{t/2}∘γ_{t/2} against γ_t")];
    if let Some(want) = &s.expected {
        results.push(result("flow-expected", "flows of even vector fields", max_diff(&end, want), s.tolerance, "endpoint against the expected value"));
    }
    Ok((results, json!({ "endpoint": end }), None))
}

fn run_trotter(s: &TrotterSpec, ctx: &Ctx) -> RunResult<Parts> {
    let x = s.x.build("X")?;
    let y = s.y.build("Y")?;
    finite("x0", &s.x0)?;
    finite("t", &[s.t])?;
    positive("max_error", s.max_error)?;
    if !s.max_n.is_power_of_two() || s.max_n > 1 << 20 {
        return Err(SchemaError { location: "max_n".into(), message: "must be a power of two ≤ 2^20".into() }.into());
    }
    if s.x0.len() != x.dim() || y.dim() != x.dim() {
        return Err(SchemaError { location: "x0".into(), message: "X, Y and x0 must share a dimension".into() }.into());
    }
    let max_j = s.max_n.trailing_zeros();
    let table = trotter_table(&x, &y, s.t, &s.x0, max_j, &ctx.ode, ctx.exec)?;
    let last = table.rows.last().map(|r| r.error).unwrap_or(f64::NAN);
    let sum = x.add(&y)?;
    let whole = even_flow(&sum, s.t, &s.x0, &ctx.ode)?;
    let halves = even_flow(&sum, 0.5 * s.t, &even_flow(&sum, 0.5 * s.t, &s.x0, &ctx.ode)?, &ctx.ode)?;
    let mut order = result("trotter-order", "Trotter formula for the flow of X + Y", s.min_order - table.fitted_order, 0.0, format!("fitted order {:.6}", table.fitted_order));
    order.residual = table.fitted_order;
    order.tolerance = s.min_order;
    order.passed = table.fitted_order >= s.min_order;
    let results = vec![
        order,
        result("trotter-final-error", "Trotter formula for the flow of X + Y", last, s.max_error, format!("error at n = {}", s.max_n)),
        result("trotter-group-law", "Trotter limit is a flow: γ_tγ_s = γ_{t+s}", max_diff(&whole, &halves), 10.0 * ctx.ode.tol, "γ_{t/2}∘γ_{t/2} against γ_t"),
    ];
    let data = json!({ "fitted_order": table.fitted_order, "reference": table.reference });
    Ok((results, data, Some(table.rows)))
}

fn run_odd_flow(s: &OddFlowSpec) -> RunResult<Parts> {
    let x = s.x.build("X")?;
    let y = s.y.build("Y")?;
    positive("tolerance", s.tolerance)?;
    let composed = compose_odd_flows(&odd_flow(&x), &odd_flow(&y))?;
    let sum = odd_flow(&x.add(&y)?);
    let mut res: f64 = 0.0;
    for (j, f) in s.forms.iter().enumerate() {
        let w = f.build(&format!("forms[{j}]"))?;
        res = res.max(composed.apply_via_diagonal(&w)?.max_abs_diff(&sum.apply(&w)?)?);
    }
    let results = vec![result("odd-flow-composition", "odd flows: γ(θ, x) = β(θ, α(θ, x)) is the flow of ι_X + ι_Y", res, s.tolerance, format!("{} forms", s.forms.len()))];
    Ok((results, Value::Null, None))
}

fn grassmann_json(g: &GrassmannElement) -> Value {
    Value::Array(
        g.terms()
            .map(|(m, c)| {
                let subset: Vec<usize> = (0..g.num_generators()).filter(|i| m & (1 << i) != 0).collect();
                json!({ "subset": subset, "coeff": c })
            })
            .collect(),
    )
}

fn run_transport(s: &TransportSpec, ctx: &Ctx) -> RunResult<Parts> {
    let conn = s.connection.build("connection")?;
    let curve = s.path.build("path")?;
    positive("tolerance", s.tolerance)?;
    let k = curve.num_generators();
    if curve.num_even() != conn.bundle().dim {
        return Err(SchemaError { location: "path.coords".into(), message: format!("expected {} coordinates", conn.bundle().dim) }.into());
    }
    let v0 = s.v0.iter().enumerate().map(|(j, v)| schema::value(&format!("v0[{j}]"), k, v)).collect::<Result<Vec<_>, _>>()?;
    if v0.len() != conn.bundle().rank() {
        return Err(SchemaError { location: "v0".into(), message: format!("expected {} entries", conn.bundle().rank()) }.into());
    }
    let (t0, t1) = curve.horizon();
    let times = s.times.clone().unwrap_or_else(|| vec![t0, 0.5 * (t0 + t1), t1]);
    finite("times", &times)?;
    if times.windows(2).any(|w| w[1] <= w[0]) || times.is_empty() {
        return Err(SchemaError { location: "times".into(), message: "sample times must be strictly increasing".into() }.into());
    }
    let functor = ConnectionTransport::on_m(&conn, ctx.ode);
    let section = functor.transport(&curve, &v0, &times)?;
    let wanted = s.checks.clone().unwrap_or_else(|| ALL_TRANSPORT_CHECKS.to_vec());
    let theta_dependent = curve.coefficients().iter().flatten().any(|g| g.contains_generator(0));
    let mut results = Vec::new();
    for c in wanted {
        let r = match c {
            TransportCheck::Gluing => {
                let mid = 0.5 * (t0 + t1);
                result("transport-gluing", "transport axioms: compatibility with gluing", gluing_residual(&functor, &curve, &v0, t0, mid, t1)?, s.tolerance, format!("split at t = {mid}"))
            }
            TransportCheck::Constant => {
                let point = curve.coords(t0)?;
                let body: Vec<GrassmannElement> = point.iter().map(|g| g.split_left(0).0).collect();
                let r = constant_path_residual(&functor, body, 0, &v0, &times)?;
                result("transport-constant-identity", "transport axioms: identity on constant (super)paths", r, s.tolerance, "constant path at c(t₀)")
            }
            TransportCheck::QNaturality => {
                let polys: Vec<Vec<f64>> = curve.coefficients().iter().map(|p| p.iter().map(GrassmannElement::body).collect()).collect();
                let v: Vec<f64> = v0.iter().map(GrassmannElement::body).collect();
                let rep = q_naturality(&conn, &polys, &v, &times, &ctx.ode)?;
                result(
                    "transport-q-naturality",
                    "transport axioms: naturality for the projection ℝ^{1|1} → ℝ",
                    rep.body_residual.max(rep.theta_residual),
                    s.tolerance,
                    format!("body path; θ-component {:.2e}", rep.theta_residual),
                )
            }
            TransportCheck::SNaturality => {
                let mut images = vec![GrassmannElement::generator(k, 0)?];
                for g in 1..k {
                    let mut img = GrassmannElement::generator(k, g)?;
                    if g + 1 < k {
                        img = &img + &GrassmannElement::generator(k, g + 1)?.scale(0.5);
                    }
                    images.push(img);
                }
                let hom = GrassmannHom::new(k, images)?;
                let r = s_naturality_residual(&functor, &curve, &v0, &hom, &times)?;
                result("transport-s-naturality", "transport axioms: naturality in the parametrizing superpoint", r, s.tolerance, "ηⱼ ↦ ηⱼ + ηⱼ₊₁/2")
            }
            TransportCheck::Reparam => {
                let rt: Vec<f64> = times.iter().map(|t| t - t0).collect();
                let shifted = ShiftedCurve { inner: &curve, t0 };
                let mut r = reparam_residual(&functor, &shifted, &Reparametrization::cubic(true), &v0, &shifted.times_within(&rt))?;
                if !theta_dependent {
                    r = r.max(reparam_residual(&functor, &shifted, &Reparametrization::cubic(false), &v0, &shifted.times_within(&rt))?);
                }
                result("transport-reparam-invariance", "transport axioms: invariance under D-preserving reparametrization", r, s.tolerance, "b(t) = t³/3 + t")
            }
            TransportCheck::Endpoint => {
                let rep = endpoint_map(&functor, &curve, t0, t1, conn.bundle().p)?;
                let violation = if conn.is_even() { rep.parity_block_violation } else { 0.0 };
                result("endpoint-isomorphism", "endpoint maps are even linear isomorphisms", violation, s.tolerance, format!("condition number {:.6}", rep.condition_number))
            }
        };
        results.push(r);
    }
    let data = json!({
        "times": times,
        "s1": section.s1.iter().map(|row| row.iter().map(grassmann_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "s2": section.s2.iter().map(|row| row.iter().map(grassmann_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    Ok((results, data, None))
}

/// The curve t ↦ c(t₀ + t), so reparametrizations fixing 0 act at the start of the horizon.
struct ShiftedCurve<'a> {
    inner: &'a dyn SuperCurve,
    t0: f64,
}

impl ShiftedCurve<'_> {
    /// Times t with b(t) inside the horizon, for b(t) = t³/3 + t.
    fn times_within(&self, times: &[f64]) -> Vec<f64> {
        let len = self.inner.horizon().1 - self.t0;
        let phi = Reparametrization::cubic(false);
        times.iter().copied().filter(|&t| phi.b(t) <= len + 1e-12).collect()
    }
}

impl SuperCurve for ShiftedCurve<'_> {
    fn num_generators(&self) -> usize {
        self.inner.num_generators()
    }
    fn num_even(&self) -> usize {
        self.inner.num_even()
    }
    fn num_odd(&self) -> usize {
        self.inner.num_odd()
    }
    fn horizon(&self) -> (f64, f64) {
        let (a, b) = self.inner.horizon();
        (a - self.t0, b - self.t0)
    }
    fn coords(&self, t: f64) -> supertransport::Result<Vec<GrassmannElement>> {
        self.inner.coords(t + self.t0)
    }
    fn coords_dot(&self, t: f64) -> supertransport::Result<Vec<GrassmannElement>> {
        self.inner.coords_dot(t + self.t0)
    }
}

fn run_roundtrip(s: &RoundtripSpec, ctx: &Ctx) -> RunResult<Parts> {
    let conn = s.connection.build("connection")?;
    positive("tolerance", s.tolerance)?;
    if let Some((i, j)) = conn.evenness_violation() {
        return Err(SchemaError { location: "connection.A".into(), message: format!("connection must be even; entry ({i}, {j}) couples the even and odd parts") }.into());
    }
    let n = conn.bundle().dim;
    let probes = match &s.probes {
        Some(p) => {
            for (j, x) in p.iter().enumerate() {
                finite(&format!("probes[{j}]"), x)?;
                if x.len() != n {
                    return Err(SchemaError { location: format!("probes[{j}]"), message: format!("expected {n} coordinates") }.into());
                }
            }
            p.clone()
        }
        None => {
            let mut rng = random::rng(ctx.seed);
            (0..3).map(|_| random::point(&mut rng, n, 0.5)).collect()
        }
    };
    let mut rng = random::rng(ctx.seed ^ 0x5EED);
    let fields = vec![random::vector_field(&mut rng, n, 1)];
    let rep = roundtrip_residual(&conn, &probes, &fields, ctx.exec)?;
    let anchor = "connection → transport → connection is the identity";
    let results = vec![
        result("roundtrip-discrepancy", anchor, rep.max_discrepancy, s.tolerance, format!("{} probe points", rep.probes)),
        result("roundtrip-evenness", anchor, rep.evenness_defect, s.tolerance, "recovered connection is even"),
        result("roundtrip-odd-triviality", anchor, rep.odd_trivial_defect, s.tolerance, "recovered connection on ΠTM is the pullback"),
    ];
    Ok((results, json!({ "consistency_residual": rep.consistency_residual, "probes": probes }), None))
}

fn run_verify_all(s: &VerifyAllSpec, ctx: &Ctx) -> RunResult<Parts> {
    let selected: Vec<&checks::Check> = match &s.checks {
        None => checks::CHECKS.iter().collect(),
        Some(names) => names
            .iter()
            .enumerate()
            .map(|(j, n)| checks::find(n).ok_or_else(|| RunError::Schema(SchemaError { location: format!("checks[{j}]"), message: format!("unknown check {n:?}") })))
            .collect::<RunResult<_>>()?,
    };
    let outcomes = exec::map(ctx.exec, &selected, |c| checks::run_check(c, ctx));
    let mut results = Vec::with_capacity(outcomes.len());
    for (c, o) in selected.iter().zip(outcomes) {
        match o {
            Ok(r) => results.push(r),
            Err(e) if checks::is_divergence(&e) => return Err(RunError::Divergence(format!("{}: {e}", c.name))),
            Err(e) => results.push(CheckResult { name: c.name.into(), anchor: c.anchor.into(), residual: f64::NAN, tolerance: 0.0, passed: false, detail: format!("error: {e}") }),
        }
    }
    Ok((results, Value::Null, None))
}
