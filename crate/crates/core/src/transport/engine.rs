use crate::bundles::{GradedConnection, PiTConnection};
use crate::error::{Error, Result};
use crate::grassmann::GrassmannElement;
use crate::manifold_forms::{DifferentialForm, ScalarField};
use crate::ode::{integrate_samples, OdeConfig};

use super::curve::{SuperCurve, THETA};

/// Square matrix with Grassmann entries, indexed `[row][col]`.
pub type GMatrix = Vec<Vec<GrassmannElement>>;

/// Connection matrices as functions of the Λ-valued coordinates of a point, one matrix
/// per coordinate (even coordinates first). Along a curve c the operator is
/// (c*∇)_D = D + Σ_c D(c^c)·M_c(c).
pub trait ConnectionField: Send + Sync {
    fn rank(&self) -> usize;
    fn num_even(&self) -> usize;
    fn num_odd(&self) -> usize;
    fn matrices(&self, z: &[GrassmannElement]) -> Result<Vec<GMatrix>>;
}

/// Connection on M: Mᵢ = Aᵢ.
pub struct BaseField {
    rank: usize,
    comps: Vec<Vec<Vec<ScalarField>>>,
}

impl BaseField {
    pub fn new(conn: &GradedConnection) -> Self {
        let b = conn.bundle();
        Self { rank: b.rank(), comps: (0..b.dim).map(|i| conn.component(i)).collect() }
    }
}

impl ConnectionField for BaseField {
    fn rank(&self) -> usize {
        self.rank
    }
    fn num_even(&self) -> usize {
        self.comps.len()
    }
    fn num_odd(&self) -> usize {
        0
    }
    fn matrices(&self, z: &[GrassmannElement]) -> Result<Vec<GMatrix>> {
        self.comps
            .iter()
            .map(|m| m.iter().map(|row| row.iter().map(|f| f.super_eval(z)).collect()).collect())
            .collect()
    }
}

/// Connection on ΠTM: M_{xⁱ} = Lᵢ, M_{ξⁱ} = Iᵢ, forms evaluated at the S-point (x, ξ).
pub struct PiTField {
    rank: usize,
    dim: usize,
    mats: Vec<Vec<Vec<DifferentialForm>>>,
}

impl PiTField {
    pub fn new(conn: &PiTConnection) -> Self {
        let b = conn.bundle();
        let mats = conn.lie_matrices().iter().chain(conn.contraction_matrices()).cloned().collect();
        Self { rank: b.rank(), dim: b.dim, mats }
    }
}

impl ConnectionField for PiTField {
    fn rank(&self) -> usize {
        self.rank
    }
    fn num_even(&self) -> usize {
        self.dim
    }
    fn num_odd(&self) -> usize {
        self.dim
    }
    fn matrices(&self, z: &[GrassmannElement]) -> Result<Vec<GMatrix>> {
        let (x, xi) = z.split_at(self.dim);
        self.mats
            .iter()
            .map(|m| m.iter().map(|row| row.iter().map(|w| w.eval_at(x, xi)).collect()).collect())
            .collect()
    }
}

/// A parallel section s = s₁ + θ·s₂ sampled at the requested times, with s₁, s₂ free of θ.
#[derive(Clone, Debug)]
pub struct ParallelSection {
    pub times: Vec<f64>,
    pub s1: Vec<Vec<GrassmannElement>>,
    pub s2: Vec<Vec<GrassmannElement>>,
}

impl ParallelSection {
    /// s₁ + θ·s₂ at sample j.
    pub fn value(&self, j: usize) -> Result<Vec<GrassmannElement>> {
        let k = self.s1[j].first().map(|g| g.num_generators()).unwrap_or(1);
        let theta = GrassmannElement::generator(k, THETA)?;
        Ok(self.s1[j].iter().zip(&self.s2[j]).map(|(a, b)| a + &(&theta * b)).collect())
    }

    pub fn last(&self) -> Result<Vec<GrassmannElement>> {
        self.value(self.times.len() - 1)
    }

    /// Largest coefficient of the θ-components.
    pub fn theta_component_max(&self) -> f64 {
        self.s2.iter().flatten().map(|g| g.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d1 = self.s1.iter().zip(&other.s1).flat_map(|(a, b)| a.iter().zip(b)).map(|(a, b)| a.max_abs_diff(b));
        let d2 = self.s2.iter().zip(&other.s2).flat_map(|(a, b)| a.iter().zip(b)).map(|(a, b)| a.max_abs_diff(b));
        d1.chain(d2).fold(0.0, f64::max)
    }
}

pub(crate) fn mat_vec(m: &GMatrix, v: &[GrassmannElement]) -> Vec<GrassmannElement> {
    m.iter()
        .map(|row| {
            let mut acc = GrassmannElement::zero(v[0].num_generators()).expect("k validated");
            for (a, b) in row.iter().zip(v) {
                if !a.is_zero() && !b.is_zero() {
                    acc += &(a * b);
                }
            }
            acc
        })
        .collect()
}

/// P(t) = Σ_c D(c^c)·M_c(c(t, θ)) split as P₀ + θ·P₁.
pub fn pairing_split(field: &dyn ConnectionField, curve: &dyn SuperCurve, t: f64) -> Result<(GMatrix, GMatrix)> {
    let k = curve.num_generators();
    let z = curve.coords(t)?;
    let zdot = curve.coords_dot(t)?;
    let theta = GrassmannElement::generator(k, THETA)?;
    let mats = field.matrices(&z)?;
    let r = field.rank();
    let zero = GrassmannElement::zero(k)?;
    let mut p = vec![vec![zero; r]; r];
    for ((zc, zd), m) in z.iter().zip(&zdot).zip(&mats) {
        // D = ∂_θ + θ∂_t on c = c₀ + θc₁ gives c₁ + θċ₀.
        let (_, c1) = zc.split_left(THETA);
        let (c0dot, _) = zd.split_left(THETA);
        let dc = &c1 + &(&theta * &c0dot);
        if dc.is_zero() {
            continue;
        }
        for (prow, mrow) in p.iter_mut().zip(m) {
            for (pe, me) in prow.iter_mut().zip(mrow) {
                if !me.is_zero() {
                    *pe += &(&dc * me);
                }
            }
        }
    }
    let split = |left: bool| -> GMatrix {
        p.iter()
            .map(|row| {
                row.iter()
                    .map(|e| {
                        let (a, b) = e.split_left(THETA);
                        if left {
                            a
                        } else {
                            b
                        }
                    })
                    .collect()
            })
            .collect()
    };
    Ok((split(true), split(false)))
}

/// Solves (c*∇)_D s = 0 with s₁(times[0]) = v0. Writing s = s₁ + θs₂ and P = P₀ + θP₁,
/// the equation is s₂ = −P₀s₁ and ṡ₁ = (P₀^σP₀ − P₁)s₁, σ the parity involution.
pub fn transport_along(field: &dyn ConnectionField, curve: &dyn SuperCurve, v0: &[GrassmannElement], times: &[f64], cfg: &OdeConfig) -> Result<ParallelSection> {
    if curve.num_even() != field.num_even() || curve.num_odd() != field.num_odd() {
        return Err(Error::DimensionMismatch { expected: field.num_even() + field.num_odd(), found: curve.num_even() + curve.num_odd() });
    }
    if v0.len() != field.rank() {
        return Err(Error::DimensionMismatch { expected: field.rank(), found: v0.len() });
    }
    let k = curve.num_generators();
    if let Some(g) = v0.iter().find(|g| g.num_generators() != k) {
        return Err(Error::IncompatibleAlgebras { left: g.num_generators(), right: k });
    }
    if v0.iter().any(|g| g.contains_generator(THETA)) {
        return Err(Error::InvalidInput("initial value must not depend on θ".into()));
    }
    if times.is_empty() {
        return Err(Error::InvalidInput("no sample times".into()));
    }
    let rhs = |t: f64, s1: &Vec<GrassmannElement>| -> Result<Vec<GrassmannElement>> {
        let (p0, p1) = pairing_split(field, curve, t)?;
        let p0s = mat_vec(&p0, s1);
        let p0sig: GMatrix = p0.iter().map(|row| row.iter().map(|e| e.involution()).collect()).collect();
        let a = mat_vec(&p0sig, &p0s);
        let b = mat_vec(&p1, s1);
        Ok(a.iter().zip(&b).map(|(a, b)| a - b).collect())
    };
    let s1 = integrate_samples(&rhs, times, &v0.to_vec(), cfg)?;
    let s2 = times
        .iter()
        .zip(&s1)
        .map(|(&t, s)| {
            let (p0, _) = pairing_split(field, curve, t)?;
            Ok(mat_vec(&p0, s).into_iter().map(|g| g.scale(-1.0)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParallelSection { times: times.to_vec(), s1, s2 })
}

/// Parallel transport of real vectors along an ordinary path c in M, ṡ + A(ċ)s = 0,
/// using only real arithmetic; `path(t)` returns (c(t), ċ(t)).
pub fn path_transport<F>(conn: &GradedConnection, path: F, v0: &[f64], times: &[f64], cfg: &OdeConfig) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64) -> (Vec<f64>, Vec<f64>),
{
    let b = conn.bundle();
    if v0.len() != b.rank() {
        return Err(Error::DimensionMismatch { expected: b.rank(), found: v0.len() });
    }
    let comps: Vec<_> = (0..b.dim).map(|i| conn.component(i)).collect();
    let rhs = |t: f64, s: &Vec<f64>| -> Result<Vec<f64>> {
        let (x, xd) = path(t);
        let mut out = vec![0.0; s.len()];
        for (i, a) in comps.iter().enumerate() {
            if xd[i] == 0.0 {
                continue;
            }
            for (row, arow) in a.iter().enumerate() {
                for (col, f) in arow.iter().enumerate() {
                    out[row] -= xd[i] * f.eval(&x) * s[col];
                }
            }
        }
        Ok(out)
    };
    integrate_samples(&rhs, times, &v0.to_vec(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::GradedBundle;
    use crate::transport::curve::SuperPath;

    fn diag_connection() -> GradedConnection {
        // A = diag(x dx, 2 dx) on ℝ¹, rank 1|1
        let b = GradedBundle::new(1, 1, 1).unwrap();
        let x = ScalarField::var(1, 0);
        let zero = ScalarField::zero(1);
        GradedConnection::from_components(b, &[vec![vec![x, zero.clone()], vec![zero, ScalarField::constant(1, 2.0)]]]).unwrap()
    }

    #[test]
    fn path_matches_closed_form() {
        let conn = diag_connection();
        let c = SuperPath::path(1, (0.0, 1.0), &[vec![0.0, 1.0]]).unwrap();
        let v0 = vec![GrassmannElement::one(1).unwrap(), GrassmannElement::one(1).unwrap()];
        let s = transport_along(&BaseField::new(&conn), &c, &v0, &[0.0, 1.0], &OdeConfig::default()).unwrap();
        assert!((s.s1[1][0].body() - (-0.5f64).exp()).abs() < 1e-10);
        assert!((s.s1[1][1].body() - (-2.0f64).exp()).abs() < 1e-10);
        assert_eq!(s.theta_component_max(), 0.0);
    }

    #[test]
    fn superpath_satisfies_equation_by_differences() {
        // c(t, θ) = t + θη with η a superpoint parameter
        let conn = diag_connection();
        let k = 2;
        let theta = GrassmannElement::generator(k, 0).unwrap();
        let eta = GrassmannElement::generator(k, 1).unwrap();
        let c = SuperPath::new(k, (0.0, 1.0), vec![vec![&theta * &eta, GrassmannElement::one(k).unwrap()]], 0).unwrap();
        let field = BaseField::new(&conn);
        let v0 = vec![GrassmannElement::one(k).unwrap(), eta.clone()];
        let h = 1e-4;
        let s = transport_along(&field, &c, &v0, &[0.0, 0.5 - h, 0.5, 0.5 + h], &OdeConfig::with_tol(1e-13)).unwrap();
        // (c*∇)_D s = s₂ + θṡ₁ + P s must vanish at t = 0.5
        let (p0, p1) = pairing_split(&field, &c, 0.5).unwrap();
        let val = s.value(2).unwrap();
        for a in 0..2 {
            let s1dot = (&s.s1[3][a] - &s.s1[1][a]).scale(0.5 / h);
            let mut p = p0.clone();
            for (row, r1) in p.iter_mut().zip(&p1) {
                for (e, e1) in row.iter_mut().zip(r1) {
                    *e += &(&theta * e1);
                }
            }
            let ps = mat_vec(&p, &val);
            let total = &(&s.s2[2][a] + &(&theta * &s1dot)) + &ps[a];
            assert!(total.norm() < 1e-7, "{total:?}");
        }
    }
}
