use serde::Serialize;

use crate::bundles::{GradedConnection, PiTConnection};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::grassmann::GrassmannElement;
use crate::manifold_forms::{exterior_d, DifferentialForm, ScalarField, VectorField};
use crate::ode::OdeConfig;

use super::curve::{odd_flow_curve, FlowCurve, SuperPath};
use super::engine::{mat_vec, GMatrix};
use super::functor::{generic_point, Base, ConnectionTransport, LiftedTransport, TransportFunctor};
use crate::manifold_forms::PiTDerivation;

/// Step sizes for the central differences; combined by two rounds of Richardson extrapolation.
pub const RECOVERY_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Connection data at one base point x, read off at the generic S-point (x, η): each
/// entry is Σ_K w_K(x) η^K for the form Σ_K w_K dx^K.
#[derive(Clone, Debug)]
pub struct RecoveredSample {
    pub x: Vec<f64>,
    pub lie: Vec<GMatrix>,
    pub contraction: Vec<GMatrix>,
}

#[derive(Clone, Debug)]
pub struct RecoveredConnection {
    pub rank: usize,
    pub samples: Vec<RecoveredSample>,
    /// Largest mismatch between a directly measured flow derivative and the value
    /// assembled from the coordinate data.
    pub consistency_residual: f64,
}

fn richardson(d: [Vec<GrassmannElement>; 3]) -> Vec<GrassmannElement> {
    // Central differences have even error expansions: eliminate h² then h⁴.
    let combine = |fine: &[GrassmannElement], coarse: &[GrassmannElement], p: f64| -> Vec<GrassmannElement> {
        fine.iter().zip(coarse).map(|(f, c)| (&f.scale(p) - c).scale(1.0 / (p - 1.0))).collect()
    };
    let r1 = combine(&d[1], &d[0], 4.0);
    let r2 = combine(&d[2], &d[1], 4.0);
    combine(&r2, &r1, 16.0)
}

fn frame(k: usize, r: usize, a: usize) -> Result<Vec<GrassmannElement>> {
    (0..r).map(|b| GrassmannElement::scalar(k, if a == b { 1.0 } else { 0.0 })).collect()
}

/// ṡ₁(0) along a curve family given as a function of the direction sign.
fn derivative_at_zero(f: &dyn TransportFunctor, curve: &dyn Fn(f64) -> Result<Box<dyn super::SuperCurve>>, v0: &[GrassmannElement]) -> Result<Vec<GrassmannElement>> {
    let times: Vec<f64> = std::iter::once(0.0).chain(RECOVERY_STEPS.iter().rev().copied()).collect();
    let plus = f.transport(curve(1.0)?.as_ref(), v0, &times)?;
    let minus = f.transport(curve(-1.0)?.as_ref(), v0, &times)?;
    let diff = |j: usize, h: f64| -> Vec<GrassmannElement> { plus.s1[j].iter().zip(&minus.s1[j]).map(|(p, m)| (p - m).scale(0.5 / h)).collect() };
    Ok(richardson([diff(3, RECOVERY_STEPS[0]), diff(2, RECOVERY_STEPS[1]), diff(1, RECOVERY_STEPS[2])]))
}

/// Values of Lᵢ, Iᵢ of a connection on ΠTM at the generic S-point over x.
pub fn connection_at(conn: &PiTConnection, x: &[f64]) -> Result<(Vec<GMatrix>, Vec<GMatrix>)> {
    let z = generic_point(x)?;
    let n = x.len();
    let eval = |mats: &[Vec<Vec<DifferentialForm>>]| -> Result<Vec<GMatrix>> {
        mats.iter().map(|m| m.iter().map(|row| row.iter().map(|w| w.eval_at(&z[..n], &z[n..])).collect()).collect()).collect()
    };
    Ok((eval(conn.lie_matrices())?, eval(conn.contraction_matrices())?))
}

fn matrices_diff(a: &[GMatrix], b: &[GMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y))
        .flat_map(|(x, y)| x.iter().zip(y))
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}

impl RecoveredConnection {
    /// Largest entrywise discrepancy from a known connection on ΠTM at the sample points.
    pub fn max_abs_diff_to(&self, conn: &PiTConnection) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            let (l, i) = connection_at(conn, &s.x)?;
            worst = worst.max(matrices_diff(&s.lie, &l)).max(matrices_diff(&s.contraction, &i));
        }
        Ok(worst)
    }

    /// Largest violation of odd-triviality: Iᵢ ≠ 0 or Lᵢ depending on η.
    pub fn odd_trivial_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            for g in s.contraction.iter().flatten().flatten() {
                worst = worst.max(g.norm());
            }
            for g in s.lie.iter().flatten().flatten() {
                worst = worst.max(g.soul().norm());
            }
        }
        worst
    }

    /// The connection matrices Aᵢ(x) on M obtained by restricting along the zero section.
    pub fn restricted(&self) -> Vec<(Vec<f64>, Vec<Vec<Vec<f64>>>)> {
        self.samples.iter().map(|s| (s.x.clone(), s.lie.iter().map(|m| m.iter().map(|row| row.iter().map(|g| g.body()).collect()).collect()).collect())).collect()
    }
}

/// Reconstructs the connection behind a transport functor on ΠTM at the probe points:
/// Lᵢe_a = −ṡ(0) along t ↦ (x + teᵢ, η) and Iᵢe_a = −s₂(0) along the superpath
/// (x, η + θeᵢ). Each field X in `probe_fields` is then transported along the flows of 𝓛_X
/// and ι_X and compared with the assembled values; a mismatch above `tol` is an error.
pub fn recover_connection(f: &dyn TransportFunctor, probes: &[Vec<f64>], probe_fields: &[VectorField], tol: f64, exec: Exec) -> Result<RecoveredConnection> {
    if f.base() != Base::PiTM {
        return Err(Error::InvalidInput("recovery needs a functor over ΠTM".into()));
    }
    let n = f.base_dim();
    let r = f.rank();
    if let Some(p) = probes.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: p.len() });
    }
    let k = n + 1;
    let tasks: Vec<(usize, usize, usize)> = (0..probes.len()).flat_map(|b| (0..n).flat_map(move |i| (0..r).map(move |a| (b, i, a)))).collect();
    let columns = exec::map(exec, &tasks, |&(b, i, a)| -> Result<(Vec<GrassmannElement>, Vec<GrassmannElement>)> {
        let x = &probes[b];
        let z = generic_point(x)?;
        let v0 = frame(k, r, a)?;
        let path = |sign: f64| -> Result<Box<dyn super::SuperCurve>> {
            let mut coords: Vec<Vec<GrassmannElement>> = Vec::with_capacity(2 * n);
            for j in 0..n {
                let slope = if i == j { sign } else { 0.0 };
                coords.push(vec![z[j].clone(), GrassmannElement::scalar(k, slope)?]);
            }
            for j in 0..n {
                coords.push(vec![z[n + j].clone()]);
            }
            Ok(Box::new(SuperPath::new(k, (-1.0, 1.0), coords, n)?))
        };
        let lie_col: Vec<GrassmannElement> = derivative_at_zero(f, &path, &v0)?.into_iter().map(|g| g.scale(-1.0)).collect();
        let odd = odd_flow_curve(&PiTDerivation::coordinate_contraction(n, i), &z, (0.0, 0.0))?;
        let s = f.transport(&odd, &v0, &[0.0])?;
        let con_col = s.s2[0].iter().map(|g| g.scale(-1.0)).collect();
        Ok((lie_col, con_col))
    });
    let zero = GrassmannElement::zero(k)?;
    let mut samples: Vec<RecoveredSample> =
        probes.iter().map(|x| RecoveredSample { x: x.clone(), lie: vec![vec![vec![zero.clone(); r]; r]; n], contraction: vec![vec![vec![zero.clone(); r]; r]; n] }).collect();
    for (&(b, i, a), col) in tasks.iter().zip(columns) {
        let (lie_col, con_col) = col?;
        for row in 0..r {
            samples[b].lie[i][row][a] = lie_col[row].clone();
            samples[b].contraction[i][row][a] = con_col[row].clone();
        }
    }
    let mut consistency: f64 = 0.0;
    let checks: Vec<(usize, usize)> = (0..samples.len()).flat_map(|b| (0..probe_fields.len()).map(move |p| (b, p))).collect();
    let residuals = exec::map(exec, &checks, |&(b, p)| consistency_residual(f, &samples[b], &probe_fields[p], k, r));
    for res in residuals {
        consistency = consistency.max(res?);
    }
    if consistency > tol {
        return Err(Error::Inconsistent(format!("flow derivatives disagree with coordinate data by {consistency:e}")));
    }
    Ok(RecoveredConnection { rank: r, samples, consistency_residual: consistency })
}

fn consistency_residual(f: &dyn TransportFunctor, sample: &RecoveredSample, x_field: &VectorField, k: usize, r: usize) -> Result<f64> {
    let n = sample.x.len();
    let z = generic_point(&sample.x)?;
    let xs: Vec<GrassmannElement> = x_field.eval(&sample.x).into_iter().map(|v| GrassmannElement::scalar(k, v)).collect::<Result<_>>()?;
    let dxs: Vec<GrassmannElement> = x_field
        .components()
        .iter()
        .map(|c: &ScalarField| exterior_d(&DifferentialForm::function(c.clone()))?.eval_at(&z[..n], &z[n..]))
        .collect::<Result<_>>()?;
    let lie = PiTDerivation::lie(x_field)?;
    let contraction = PiTDerivation::contraction(x_field);
    let mut worst: f64 = 0.0;
    for a in 0..r {
        let v0 = frame(k, r, a)?;
        let e_a = &v0;
        // K(𝓛_X) = Σ Xⁱ Lᵢ + dXⁱ Iᵢ, K(ι_X) = Σ Xⁱ Iᵢ
        let mut expect_lie = vec![GrassmannElement::zero(k)?; r];
        let mut expect_con = vec![GrassmannElement::zero(k)?; r];
        for i in 0..n {
            let li = mat_vec(&sample.lie[i], e_a);
            let ii = mat_vec(&sample.contraction[i], e_a);
            for row in 0..r {
                expect_lie[row] += &(&xs[i] * &li[row]);
                expect_lie[row] += &(&dxs[i] * &ii[row]);
                expect_con[row] += &(&xs[i] * &ii[row]);
            }
        }
        let flow = |sign: f64| -> Result<Box<dyn super::SuperCurve>> {
            Ok(Box::new(FlowCurve::new(lie.scale(sign), z.clone(), (0.0, RECOVERY_STEPS[0]), OdeConfig::with_tol(1e-13))?))
        };
        let measured = derivative_at_zero(f, &flow, &v0)?;
        for (m, e) in measured.iter().zip(&expect_lie) {
            worst = worst.max((m + e).norm());
        }
        let odd = odd_flow_curve(&contraction, &z, (0.0, 0.0))?;
        let s = f.transport(&odd, &v0, &[0.0])?;
        for (m, e) in s.s2[0].iter().zip(&expect_con) {
            worst = worst.max((m + e).norm());
        }
    }
    Ok(worst)
}

/// Result of transport → connection → transport for a connection on M.
#[derive(Clone, Debug, Serialize)]
pub struct RoundtripReport {
    /// max |A′ᵢ − Aᵢ| over the probe points.
    pub max_discrepancy: f64,
    pub odd_trivial_defect: f64,
    /// Largest entry of A′ coupling even and odd frame vectors.
    pub evenness_defect: f64,
    pub consistency_residual: f64,
    pub probes: usize,
}

/// Transports ∇ on M, lifts the functor to ΠTM, recovers the connection there, restricts
/// it back to M and compares with ∇ at the probe points.
pub fn roundtrip_residual(conn: &GradedConnection, probes: &[Vec<f64>], probe_fields: &[VectorField], exec: Exec) -> Result<RoundtripReport> {
    let b = conn.bundle();
    let lifted = LiftedTransport::new(ConnectionTransport::on_m(conn, OdeConfig::with_tol(1e-13)))?;
    let rec = recover_connection(&lifted, probes, probe_fields, 1e-6, exec)?;
    let mut worst: f64 = 0.0;
    let mut evenness: f64 = 0.0;
    for (x, mats) in rec.restricted() {
        for (i, m) in mats.iter().enumerate() {
            let a = conn.component(i);
            for row in 0..b.rank() {
                for col in 0..b.rank() {
                    worst = worst.max((m[row][col] - a[row][col].eval(&x)).abs());
                    if (row < b.p) != (col < b.p) {
                        evenness = evenness.max(m[row][col].abs());
                    }
                }
            }
        }
    }
    Ok(RoundtripReport {
        max_discrepancy: worst,
        odd_trivial_defect: rec.odd_trivial_defect(),
        evenness_defect: evenness,
        consistency_residual: rec.consistency_residual,
        probes: probes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    #[test]
    fn recovers_pullback_connection() {
        let mut rng = random::rng(7);
        let conn = random::connection(&mut rng, 2, 1, 1, 1, true);
        let probes = vec![vec![0.25, -0.5], vec![0.0, 0.5]];
        let fields = vec![random::vector_field(&mut rng, 2, 1)];
        let rep = roundtrip_residual(&conn, &probes, &fields, Exec::Sequential).unwrap();
        assert!(rep.max_discrepancy < 1e-8, "{rep:?}");
        assert!(rep.odd_trivial_defect < 1e-8);
        assert!(rep.evenness_defect < 1e-12);
    }

    #[test]
    fn recovers_non_odd_trivial_connection() {
        let mut rng = random::rng(11);
        let base = random::connection(&mut rng, 2, 1, 0, 1, true);
        let pit = PiTConnection::pullback(&base)
            .with_entry(true, 0, 0, 0, DifferentialForm::dx(2, 1).scale(0.5))
            .unwrap()
            .with_entry(false, 1, 0, 0, DifferentialForm::basis(2, &[0, 1], ScalarField::var(2, 0)).unwrap())
            .unwrap();
        let t = ConnectionTransport::on_pitm(&pit, OdeConfig::with_tol(1e-13));
        let fields = vec![VectorField::coordinate(2, 0), random::vector_field(&mut rng, 2, 1)];
        let rec = recover_connection(&t, &[vec![0.5, 0.25]], &fields, 1e-6, Exec::Sequential).unwrap();
        assert!(rec.max_abs_diff_to(&pit).unwrap() < 1e-7);
        assert!(rec.odd_trivial_defect() > 0.1);
    }
}
