use nalgebra::DMatrix;
use serde::Serialize;

use crate::bundles::GradedConnection;
use crate::error::{Error, Result};
use crate::grassmann::{GrassmannElement, GrassmannHom};
use crate::ode::OdeConfig;

use super::curve::{MappedParameters, Reparametrization, ReparametrizedCurve, SuperCurve, SuperPath, THETA};
use super::engine::path_transport;
use super::functor::{ConnectionTransport, TransportFunctor};

/// |p(c; v₀)(t₂) − p(c|[t₁,t₂]; p(c; v₀)(t₁))(t₂)|: transporting in one go versus in two pieces.
pub fn gluing_residual(f: &dyn TransportFunctor, curve: &dyn SuperCurve, v0: &[GrassmannElement], t0: f64, t1: f64, t2: f64) -> Result<f64> {
    let whole = f.transport(curve, v0, &[t0, t2])?;
    let first = f.transport(curve, v0, &[t0, t1])?;
    let second = f.transport(curve, &first.s1[1], &[t1, t2])?;
    let d1 = whole.s1[1].iter().zip(&second.s1[1]).map(|(a, b)| a.max_abs_diff(b));
    let d2 = whole.s2[1].iter().zip(&second.s2[1]).map(|(a, b)| a.max_abs_diff(b));
    Ok(d1.chain(d2).fold(0.0, f64::max))
}

/// Largest deviation of the transport along the constant (super)path at `point` from v₀.
pub fn constant_path_residual(f: &dyn TransportFunctor, point: Vec<GrassmannElement>, num_odd: usize, v0: &[GrassmannElement], times: &[f64]) -> Result<f64> {
    let horizon = (times.iter().copied().fold(f64::INFINITY, f64::min), times.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let c = SuperPath::constant(horizon, point, num_odd)?;
    let s = f.transport(&c, v0, times)?;
    let mut worst: f64 = 0.0;
    for j in 0..times.len() {
        let v = s.value(j)?;
        for (a, b) in v.iter().zip(v0) {
            worst = worst.max(a.max_abs_diff(b));
        }
    }
    Ok(worst)
}

/// Comparison of the transport along c̄ = c∘(q × id) with ordinary path transport along c.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QNaturalityReport {
    /// |s₁ − path transport|.
    pub body_residual: f64,
    /// |s₂|, the θ-component.
    pub theta_residual: f64,
}

/// `polys[i]` are the coefficients of cⁱ(t); `v0` is real.
pub fn q_naturality(conn: &GradedConnection, polys: &[Vec<f64>], v0: &[f64], times: &[f64], cfg: &OdeConfig) -> Result<QNaturalityReport> {
    let c = SuperPath::path(1, (times[0], *times.last().unwrap_or(&times[0])), polys)?;
    let f = ConnectionTransport::on_m(conn, *cfg);
    let v = v0.iter().map(|&x| GrassmannElement::scalar(1, x)).collect::<Result<Vec<_>>>()?;
    let s = f.transport(&c, &v, times)?;
    let eval = |p: &[f64], t: f64| p.iter().rev().fold(0.0, |acc, c| acc * t + c);
    let deriv = |p: &[f64], t: f64| p.iter().enumerate().skip(1).rev().fold(0.0, |acc, (j, c)| acc * t + j as f64 * c);
    let path = |t: f64| (polys.iter().map(|p| eval(p, t)).collect(), polys.iter().map(|p| deriv(p, t)).collect());
    let real = path_transport(conn, path, v0, times, cfg)?;
    let mut body: f64 = 0.0;
    for (sj, rj) in s.s1.iter().zip(&real) {
        for (a, b) in sj.iter().zip(rj) {
            body = body.max((a.body() - b).abs()).max(a.soul().norm());
        }
    }
    Ok(QNaturalityReport { body_residual: body, theta_residual: s.theta_component_max() })
}

/// |h(p(c; v₀)) − p(h∘c; h(v₀))| for a parameter change h fixing θ.
pub fn s_naturality_residual(f: &dyn TransportFunctor, curve: &dyn SuperCurve, v0: &[GrassmannElement], hom: &GrassmannHom, times: &[f64]) -> Result<f64> {
    let s = f.transport(curve, v0, times)?;
    let mapped = MappedParameters::new(curve, hom.clone())?;
    let hv0 = v0.iter().map(|g| hom.apply(g)).collect::<Result<Vec<_>>>()?;
    let s_mapped = f.transport(&mapped, &hv0, times)?;
    let mut worst: f64 = 0.0;
    for j in 0..times.len() {
        let a = s.value(j)?;
        let b = s_mapped.value(j)?;
        for (a, b) in a.iter().zip(&b) {
            worst = worst.max(hom.apply(a)?.max_abs_diff(b));
        }
    }
    Ok(worst)
}

/// |p(c∘φ; v₀)(t) − φ*(p(c; v₀))(t)| over the sample times, where
/// φ*(s₁ + θs₂)(t) = s₁(b(t)) + √ḃ(t)·θ·s₂(b(t)) in the super case.
pub fn reparam_residual(f: &dyn TransportFunctor, curve: &dyn SuperCurve, phi: &Reparametrization, v0: &[GrassmannElement], times: &[f64]) -> Result<f64> {
    phi.validate(times)?;
    let composed = ReparametrizedCurve { inner: curve, phi: phi.clone() };
    let along_composed = f.transport(&composed, v0, times)?;
    let btimes: Vec<f64> = times.iter().map(|&t| phi.b(t)).collect();
    let along = f.transport(curve, v0, &btimes)?;
    let k = curve.num_generators();
    let theta = GrassmannElement::generator(k, THETA)?;
    let mut worst: f64 = 0.0;
    for (j, &t) in times.iter().enumerate() {
        let g = phi.theta_scale(t);
        let lhs = along_composed.value(j)?;
        for (a, (s1, s2)) in lhs.iter().zip(along.s1[j].iter().zip(&along.s2[j])) {
            let pulled = s1 + &(&theta * &s2.scale(g));
            worst = worst.max(a.max_abs_diff(&pulled));
        }
    }
    Ok(worst)
}

/// The endpoint map of a transport on real initial vectors.
#[derive(Clone, Debug, Serialize)]
pub struct EndpointReport {
    /// Body of the endpoint matrix, column a = transport of eᵢ.
    pub body: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub condition_number: f64,
    /// Largest entry coupling even and odd frame vectors.
    pub parity_block_violation: f64,
}

pub fn endpoint_map(f: &dyn TransportFunctor, curve: &dyn SuperCurve, t0: f64, t1: f64, num_even_fibre: usize) -> Result<EndpointReport> {
    let r = f.rank();
    let k = curve.num_generators();
    let mut body = vec![vec![0.0; r]; r];
    let mut violation: f64 = 0.0;
    for a in 0..r {
        let v0 = (0..r).map(|b| GrassmannElement::scalar(k, if a == b { 1.0 } else { 0.0 })).collect::<Result<Vec<_>>>()?;
        let s = f.transport(curve, &v0, &[t0, t1])?;
        let end = s.value(1)?;
        for (row, val) in end.iter().enumerate() {
            body[row][a] = val.body();
            if (row < num_even_fibre) != (a < num_even_fibre) {
                violation = violation.max(val.norm());
            }
        }
    }
    let m = DMatrix::from_fn(r, r, |i, j| body[i][j]);
    let svd = m.svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let smallest = sv.last().copied().unwrap_or(0.0);
    if smallest <= 0.0 {
        return Err(Error::PreconditionViolated("endpoint map is singular".into()));
    }
    Ok(EndpointReport { body, condition_number: sv[0] / smallest, singular_values: sv, parity_block_violation: violation })
}
