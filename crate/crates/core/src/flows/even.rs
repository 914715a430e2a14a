use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::grassmann::GrassmannElement;
use crate::manifold_forms::{ScalarField, VectorField};
use crate::ode::{integrate, OdeConfig};

fn check_point(x: &VectorField, x0_len: usize) -> Result<()> {
    if x.dim() != x0_len {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: x0_len });
    }
    Ok(())
}

fn eval_field(x: &VectorField, p: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(p.len());
    for c in x.components() {
        if !crate::grassmann::SmoothScalar::in_domain(c, p) {
            return Err(Error::OutsideDomain { point: p.to_vec() });
        }
        out.push(c.eval(p));
    }
    Ok(out)
}

/// Solves ẋ = X(x), x(0) = x0 up to time t.
pub fn even_flow(x: &VectorField, t: f64, x0: &[f64], cfg: &OdeConfig) -> Result<Vec<f64>> {
    check_point(x, x0.len())?;
    integrate(&|_s, p: &Vec<f64>| eval_field(x, p), 0.0, t, &x0.to_vec(), cfg)
}

/// The same flow with Grassmann-valued (even) initial data; the nilpotent part of the
/// state follows the variational equations through super evaluation of X.
pub fn even_flow_super(x: &VectorField, t: f64, x0: &[GrassmannElement], cfg: &OdeConfig) -> Result<Vec<GrassmannElement>> {
    check_point(x, x0.len())?;
    integrate(&|_s, p: &Vec<GrassmannElement>| x.super_eval(p), 0.0, t, &x0.to_vec(), cfg)
}

/// (α_{t/n} ∘ β_{t/n})ⁿ(x0) with α, β the flows of X and Y; β acts first in every factor.
pub fn trotter_flow(x: &VectorField, y: &VectorField, t: f64, x0: &[f64], n: usize, cfg: &OdeConfig) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("Trotter step count must be positive".into()));
    }
    check_point(y, x0.len())?;
    let h = t / n as f64;
    let mut p = x0.to_vec();
    for j in 0..n {
        let offset = |e: Error| match e {
            Error::Divergence { last_valid_t } => Error::Divergence { last_valid_t: j as f64 * h + last_valid_t },
            other => other,
        };
        p = even_flow(y, h, &p, cfg).map_err(offset)?;
        p = even_flow(x, h, &p, cfg).map_err(offset)?;
    }
    Ok(p)
}

/// One row of a Trotter convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct TrotterRow {
    pub n: usize,
    pub error: f64,
    /// log₂(error(n/2) / error(n)); absent on the first row.
    pub observed_order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrotterTable {
    pub rows: Vec<TrotterRow>,
    /// Least-squares slope of −log(error) against log(n).
    pub fitted_order: f64,
    pub reference: Vec<f64>,
}

/// Errors of the Trotter product for n = 2^j, j = 0..=max_j, against a tightly
/// integrated flow of X + Y.
pub fn trotter_table(
    x: &VectorField,
    y: &VectorField,
    t: f64,
    x0: &[f64],
    max_j: u32,
    cfg: &OdeConfig,
    exec: Exec,
) -> Result<TrotterTable> {
    let sum = x.add(y)?;
    let tight = OdeConfig { tol: cfg.tol.min(1e-12), ..*cfg };
    let reference = even_flow(&sum, t, x0, &tight)?;
    let errors = exec::try_map_range(exec, max_j as usize + 1, |j| {
        let n = 1usize << j;
        let p = trotter_flow(x, y, t, x0, n, cfg)?;
        Ok::<_, Error>(p.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    })?;
    let mut rows = Vec::with_capacity(errors.len());
    for (j, &error) in errors.iter().enumerate() {
        let observed_order = (j > 0 && error > 0.0 && errors[j - 1] > 0.0).then(|| (errors[j - 1] / error).log2());
        rows.push(TrotterRow { n: 1 << j, error, observed_order });
    }
    let fitted_order = fitted_order(&rows);
    Ok(TrotterTable { rows, fitted_order, reference })
}

/// Least-squares slope of −log(error) against log(n) over rows with a usable error.
pub fn fitted_order(rows: &[TrotterRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.error > 1e-14).map(|r| ((r.n as f64).ln(), -r.error.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(n, d), (x, y)| (n + (x - mx) * (y - my), d + (x - mx) * (x - mx)));
    num / den
}

/// |d/dt|₀ (α_{t/n}β_{t/n})ⁿ(x) − (X+Y)(x)| with a central difference of step h.
pub fn trotter_derivative_residual(x: &VectorField, y: &VectorField, x0: &[f64], n: usize, h: f64, cfg: &OdeConfig) -> Result<f64> {
    let plus = trotter_flow(x, y, h, x0, n, cfg)?;
    let minus = trotter_flow(x, y, -h, x0, n, cfg)?;
    let want = eval_field(&x.add(y)?, x0)?;
    Ok(plus.iter().zip(&minus).zip(&want).map(|((p, m), w)| ((p - m) / (2.0 * h) - w).abs()).fold(0.0, f64::max))
}

/// s(t) for ds/dt = f(α(s, x0)), s(0) = 0, where α is the flow of X.
pub fn reparam_time<F>(f: &F, x: &VectorField, t: f64, x0: &[f64], cfg: &OdeConfig) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    check_point(x, x0.len())?;
    // The inner flow is re-solved from x0 at every stage; a slightly tighter tolerance
    // keeps its error below the outer one.
    let inner = OdeConfig { tol: cfg.tol * 0.1, ..*cfg };
    let rhs = |_t: f64, s: &f64| {
        let p = even_flow(x, *s, x0, &inner)?;
        let v = f(&p)?;
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::NonPositive { point: p, value: v });
        }
        Ok(v)
    };
    integrate(&rhs, 0.0, t, &0.0, cfg)
}

/// α(s(t), x0) with ds/dt = f(α(s, x0)); agrees with the flow of fX.
pub fn reparam_flow_even(f: &ScalarField, x: &VectorField, t: f64, x0: &[f64], cfg: &OdeConfig) -> Result<Vec<f64>> {
    if f.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: f.dim() });
    }
    let s = reparam_time(&|p: &[f64]| Ok(f.eval(p)), x, t, x0, cfg)?;
    even_flow(x, s, x0, cfg)
}

/// Outcome of comparing the trajectories of two fields through one initial point.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryReport {
    /// (t, φ(t)) at every sample time.
    pub phi: Vec<(f64, f64)>,
    /// max ‖c_Y(t) − c_X(φ(t))‖ over the samples.
    pub residual: f64,
    /// A point of the Y-trajectory where Y is not a positive multiple of X.
    pub counterexample: Option<Vec<f64>>,
}

fn positive_ratio(xv: &[f64], yv: &[f64], tol: f64) -> Option<f64> {
    let xx: f64 = xv.iter().map(|v| v * v).sum();
    if xx == 0.0 {
        return None;
    }
    let f = xv.iter().zip(yv).map(|(a, b)| a * b).sum::<f64>() / xx;
    let scale = yv.iter().chain(xv).fold(1.0f64, |m, v| m.max(v.abs()));
    let off = xv.iter().zip(yv).map(|(a, b)| (b - f * a).abs()).fold(0.0, f64::max);
    (f > 0.0 && off <= tol * scale).then_some(f)
}

/// Checks that the integral curve of Y through x0 is the integral curve of X through x0
/// traversed with an orientation-preserving reparametrization φ, fitting Y = fX pointwise.
pub fn trajectory_equivalence_check(x: &VectorField, y: &VectorField, x0: &[f64], samples: &[f64], cfg: &OdeConfig) -> Result<TrajectoryReport> {
    check_point(x, x0.len())?;
    check_point(y, x0.len())?;
    let parallel_tol = 1e-9;
    for &t in samples {
        let p = even_flow(y, t, x0, cfg)?;
        if positive_ratio(&eval_field(x, &p)?, &eval_field(y, &p)?, parallel_tol).is_none() {
            return Ok(TrajectoryReport { phi: vec![], residual: f64::INFINITY, counterexample: Some(p) });
        }
    }
    let ratio = |p: &[f64]| -> Result<f64> {
        let (xv, yv) = (eval_field(x, p)?, eval_field(y, p)?);
        positive_ratio(&xv, &yv, parallel_tol).ok_or_else(|| Error::NotParallel { point: p.to_vec() })
    };
    let mut phi = Vec::with_capacity(samples.len());
    let mut residual: f64 = 0.0;
    for &t in samples {
        let s = reparam_time(&ratio, x, t, x0, cfg)?;
        let via_x = even_flow(x, s, x0, cfg)?;
        let direct = even_flow(y, t, x0, cfg)?;
        residual = residual.max(via_x.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        phi.push((t, s));
    }
    Ok(TrajectoryReport { phi, residual, counterexample: None })
}
