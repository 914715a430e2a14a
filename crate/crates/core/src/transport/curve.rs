use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grassmann::{GrassmannElement, GrassmannHom, Parity};
use crate::manifold_forms::PiTDerivation;
use crate::ode::{integrate, OdeConfig};

/// Generator index of θ in every curve's Grassmann algebra; superpoint parameters and
/// odd fibre coordinates use the generators after it.
pub const THETA: usize = 0;

/// A map ℝ^{1|1} × S → N into a space with `num_even` even and `num_odd` odd coordinates,
/// given by its coordinates c(t, θ) as elements of Λ_k (θ = generator 0).
pub trait SuperCurve: Send + Sync {
    fn num_generators(&self) -> usize;
    fn num_even(&self) -> usize;
    fn num_odd(&self) -> usize;
    fn horizon(&self) -> (f64, f64);
    /// Even coordinates first, then odd ones.
    fn coords(&self, t: f64) -> Result<Vec<GrassmannElement>>;
    /// ∂_t of the coordinates.
    fn coords_dot(&self, t: f64) -> Result<Vec<GrassmannElement>>;
}

fn poly_eval(p: &[GrassmannElement], t: f64, k: usize) -> GrassmannElement {
    let mut acc = GrassmannElement::zero(k).expect("k validated");
    for c in p.iter().rev() {
        acc = acc.scale(t);
        acc += c;
    }
    acc
}

fn poly_dot(p: &[GrassmannElement]) -> Vec<GrassmannElement> {
    p.iter().enumerate().skip(1).map(|(j, c)| c.scale(j as f64)).collect()
}

/// A (super)path whose coordinates are polynomials in t with Grassmann coefficients.
#[derive(Clone, Debug)]
pub struct SuperPath {
    k: usize,
    horizon: (f64, f64),
    num_odd: usize,
    coords: Vec<Vec<GrassmannElement>>,
    dots: Vec<Vec<GrassmannElement>>,
}

impl SuperPath {
    /// `coords[c]` lists the t-polynomial coefficients of coordinate c (lowest first).
    pub fn new(k: usize, horizon: (f64, f64), coords: Vec<Vec<GrassmannElement>>, num_odd: usize) -> Result<Self> {
        if !(horizon.0.is_finite() && horizon.1.is_finite()) {
            return Err(Error::InvalidInput("horizon must be finite".into()));
        }
        if num_odd > coords.len() {
            return Err(Error::InvalidInput("more odd coordinates than coordinates".into()));
        }
        let num_even = coords.len() - num_odd;
        for (c, poly) in coords.iter().enumerate() {
            let want = if c < num_even { Parity::Even } else { Parity::Odd };
            for coeff in poly {
                if coeff.num_generators() != k {
                    return Err(Error::IncompatibleAlgebras { left: coeff.num_generators(), right: k });
                }
                if !coeff.is_zero() && coeff.parity() != Some(want) {
                    return Err(Error::ParityInconsistent(format!("coordinate {c} has a coefficient {coeff:?} that is not {want:?}")));
                }
            }
        }
        let dots = coords.iter().map(|p| poly_dot(p)).collect();
        Ok(Self { k, horizon, num_odd, coords, dots })
    }

    /// An ordinary path: real polynomial coordinates, no θ dependence.
    pub fn path(k: usize, horizon: (f64, f64), polys: &[Vec<f64>]) -> Result<Self> {
        let coords = polys
            .iter()
            .map(|p| p.iter().map(|&c| GrassmannElement::scalar(k, c)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(k, horizon, coords, 0)
    }

    /// The constant (super)path at a point of Λ_k-valued coordinates.
    pub fn constant(horizon: (f64, f64), point: Vec<GrassmannElement>, num_odd: usize) -> Result<Self> {
        let k = point.first().map(|g| g.num_generators()).unwrap_or(1);
        Self::new(k, horizon, point.into_iter().map(|g| vec![g]).collect(), num_odd)
    }

    pub fn coefficients(&self) -> &[Vec<GrassmannElement>] {
        &self.coords
    }
}

impl SuperCurve for SuperPath {
    fn num_generators(&self) -> usize {
        self.k
    }
    fn num_even(&self) -> usize {
        self.coords.len() - self.num_odd
    }
    fn num_odd(&self) -> usize {
        self.num_odd
    }
    fn horizon(&self) -> (f64, f64) {
        self.horizon
    }
    fn coords(&self, t: f64) -> Result<Vec<GrassmannElement>> {
        Ok(self.coords.iter().map(|p| poly_eval(p, t, self.k)).collect())
    }
    fn coords_dot(&self, t: f64) -> Result<Vec<GrassmannElement>> {
        Ok(self.dots.iter().map(|p| poly_eval(p, t, self.k)).collect())
    }
}

/// π∘c: the even coordinates of a curve in ΠTM.
pub struct Projected<'a>(pub &'a dyn SuperCurve);

impl SuperCurve for Projected<'_> {
    fn num_generators(&self) -> usize {
        self.0.num_generators()
    }
    fn num_even(&self) -> usize {
        self.0.num_even()
    }
    fn num_odd(&self) -> usize {
        0
    }
    fn horizon(&self) -> (f64, f64) {
        self.0.horizon()
    }
    fn coords(&self, t: f64) -> Result<Vec<GrassmannElement>> {
        let mut z = self.0.coords(t)?;
        z.truncate(self.0.num_even());
        Ok(z)
    }
    fn coords_dot(&self, t: f64) -> Result<Vec<GrassmannElement>> {
        let mut z = self.0.coords_dot(t)?;
        z.truncate(self.0.num_even());
        Ok(z)
    }
}

/// i∘c: a curve in M followed by the zero section of ΠTM.
pub struct ZeroSection<'a>(pub &'a dyn SuperCurve);

impl SuperCurve for ZeroSection<'_> {
    fn num_generators(&self) -> usize {
        self.0.num_generators()
    }
    fn num_even(&self) -> usize {
        self.0.num_even()
    }
    fn num_odd(&self) -> usize {
        self.0.num_even()
    }
    fn horizon(&self) -> (f64, f64) {
        self.0.horizon()
    }
    fn coords(&self, t: f64) -> Result<Vec<GrassmannElement>> {
        let mut z = self.0.coords(t)?;
        z.extend(std::iter::repeat_n(GrassmannElement::zero(self.0.num_generators())?, self.0.num_even()));
        Ok(z)
    }
    fn coords_dot(&self, t: f64) -> Result<Vec<GrassmannElement>> {
        let mut z = self.0.coords_dot(t)?;
        z.extend(std::iter::repeat_n(GrassmannElement::zero(self.0.num_generators())?, self.0.num_even()));
        Ok(z)
    }
}

/// c composed with a change of superpoint S' → S, i.e. coordinates pushed through an
/// algebra map Λ_k → Λ_k' that sends θ to θ.
pub struct MappedParameters<'a> {
    pub inner: &'a dyn SuperCurve,
    pub hom: GrassmannHom,
    target_k: usize,
}

impl<'a> MappedParameters<'a> {
    pub fn new(inner: &'a dyn SuperCurve, hom: GrassmannHom) -> Result<Self> {
        if hom.source_k() != inner.num_generators() {
            return Err(Error::IncompatibleAlgebras { left: hom.source_k(), right: inner.num_generators() });
        }
        let theta = GrassmannElement::generator(hom.source_k(), THETA)?;
        let image = hom.apply(&theta)?;
        let target_k = image.num_generators();
        if image.max_abs_diff(&GrassmannElement::generator(target_k, THETA)?) > 0.0 {
            return Err(Error::InvalidInput("parameter change must send θ to θ".into()));
        }
        Ok(Self { inner, hom, target_k })
    }
}

impl SuperCurve for MappedParameters<'_> {
    fn num_generators(&self) -> usize {
        self.target_k
    }
    fn num_even(&self) -> usize {
        self.inner.num_even()
    }
    fn num_odd(&self) -> usize {
        self.inner.num_odd()
    }
    fn horizon(&self) -> (f64, f64) {
        self.inner.horizon()
    }
    fn coords(&self, t: f64) -> Result<Vec<GrassmannElement>> {
        self.inner.coords(t)?.iter().map(|z| self.hom.apply(z)).collect()
    }
    fn coords_dot(&self, t: f64) -> Result<Vec<GrassmannElement>> {
        self.inner.coords_dot(t)?.iter().map(|z| self.hom.apply(z)).collect()
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An orientation-preserving change of time b with b(0) = 0 and ḃ > 0.
#[derive(Clone)]
pub struct Reparametrization {
    b: RealFn,
    bdot: RealFn,
    bddot: RealFn,
    /// Also rescale θ by √ḃ, giving (t, θ) ↦ (b(t), √ḃ(t)·θ).
    pub super_case: bool,
}

impl Reparametrization {
    pub fn new(
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        bdot: impl Fn(f64) -> f64 + Send + Sync + 'static,
        bddot: impl Fn(f64) -> f64 + Send + Sync + 'static,
        super_case: bool,
    ) -> Self {
        Self { b: Arc::new(b), bdot: Arc::new(bdot), bddot: Arc::new(bddot), super_case }
    }

    pub fn identity(super_case: bool) -> Self {
        Self::new(|t| t, |_| 1.0, |_| 0.0, super_case)
    }

    /// b(t) = t³/3 + t.
    pub fn cubic(super_case: bool) -> Self {
        Self::new(|t| t * t * t / 3.0 + t, |t| t * t + 1.0, |t| 2.0 * t, super_case)
    }

    pub fn b(&self, t: f64) -> f64 {
        (self.b)(t)
    }

    pub fn bdot(&self, t: f64) -> f64 {
        (self.bdot)(t)
    }

    /// Scale applied to θ at time t.
    pub fn theta_scale(&self, t: f64) -> f64 {
        if self.super_case {
            self.bdot(t).sqrt()
        } else {
            1.0
        }
    }

    /// Confirms ḃ > 0 at the sample times and b(0) = 0.
    pub fn validate(&self, times: &[f64]) -> Result<()> {
        if self.b(0.0).abs() > 1e-14 {
            return Err(Error::InvalidReparametrization(format!("b(0) = {} ≠ 0", self.b(0.0))));
        }
        for &t in times {
            if self.bdot(t).is_nan() || self.bdot(t) <= 0.0 {
                return Err(Error::InvalidReparametrization(format!("ḃ({t}) = {} is not positive", self.bdot(t))));
            }
        }
        Ok(())
    }

    /// Residual of D∘φ* = √ḃ·φ*∘D on F = tʲ and F = θtʲ (j ≤ 3) at the sample times; zero
    /// for the super case, ‖1 − ḃ‖-sized in the even case with θ left alone.
    pub fn distribution_residual(&self, times: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &t in times {
            let (b, bd, g) = (self.b(t), self.bdot(t), self.theta_scale(t));
            // Multiplier fixed by the θ line: D(φ*(θF₁)) = g·F₁(b), φ*(D(θF₁)) = F₁(b).
            let mult = g;
            for j in 0..4i32 {
                // F = tʲ: D(φ*F) = θ·ḃ·j·b^{j−1}; φ*(DF) = g·θ·j·b^{j−1}.
                let lhs = bd * j as f64 * b.powi((j - 1).max(0));
                let rhs = mult * g * j as f64 * b.powi((j - 1).max(0));
                worst = worst.max((lhs - rhs).abs());
            }
        }
        worst
    }
}

/// c∘φ for a reparametrization φ.
pub struct ReparametrizedCurve<'a> {
    pub inner: &'a dyn SuperCurve,
    pub phi: Reparametrization,
}

impl SuperCurve for ReparametrizedCurve<'_> {
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
        self.inner.horizon()
    }
    fn coords(&self, t: f64) -> Result<Vec<GrassmannElement>> {
        let g = self.phi.theta_scale(t);
        self.inner
            .coords(self.phi.b(t))?
            .into_iter()
            .map(|z| {
                let (a, b) = z.split_left(THETA);
                Ok(&a + &(&GrassmannElement::generator(z.num_generators(), THETA)? * &b.scale(g)))
            })
            .collect()
    }
    fn coords_dot(&self, t: f64) -> Result<Vec<GrassmannElement>> {
        // d/dt [A(b) + g θ B(b)] = ḃ A'(b) + ġ θ B(b) + g ḃ θ B'(b)
        let (bt, bd) = (self.phi.b(t), self.phi.bdot(t));
        let g = self.phi.theta_scale(t);
        let gdot = if self.phi.super_case { (self.phi.bddot)(t) / (2.0 * g) } else { 0.0 };
        let z = self.inner.coords(bt)?;
        let zd = self.inner.coords_dot(bt)?;
        z.iter()
            .zip(&zd)
            .map(|(z, zd)| {
                let (_, b) = z.split_left(THETA);
                let (ad, bdd) = zd.split_left(THETA);
                let theta = GrassmannElement::generator(z.num_generators(), THETA)?;
                Ok(&ad.scale(bd) + &(&theta * &(&b.scale(gdot) + &bdd.scale(g * bd))))
            })
            .collect()
    }
}

/// The integral curve of an even derivation V of Ω* through an S-point of ΠTM:
/// ẋⁱ = V(xⁱ), ξ̇ⁱ = V(dxⁱ), evaluated at the S-point.
pub struct FlowCurve {
    generator: PiTDerivation,
    k: usize,
    horizon: (f64, f64),
    nodes: Vec<(f64, Vec<GrassmannElement>)>,
    cfg: OdeConfig,
}

fn flow_rhs(v: &PiTDerivation, z: &[GrassmannElement]) -> Result<Vec<GrassmannElement>> {
    let n = v.dim();
    let (x, xi) = z.split_at(n);
    let mut out = Vec::with_capacity(2 * n);
    for a in v.lie_coefficients() {
        out.push(a.eval_at(x, xi)?);
    }
    for b in v.contraction_coefficients() {
        out.push(b.eval_at(x, xi)?);
    }
    Ok(out)
}

impl FlowCurve {
    /// `start` holds n even coordinates then n odd ones, over Λ_k with θ unused.
    pub fn new(generator: PiTDerivation, start: Vec<GrassmannElement>, horizon: (f64, f64), cfg: OdeConfig) -> Result<Self> {
        if generator.parity() != Parity::Even {
            return Err(Error::MixedParity { expected: Parity::Even });
        }
        let n = generator.dim();
        if start.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: start.len() });
        }
        if start.iter().any(|z| z.contains_generator(THETA)) {
            return Err(Error::InvalidInput("flow starting point must not depend on θ".into()));
        }
        let k = start[0].num_generators();
        let spacing = 0.125;
        let mut nodes = vec![(0.0, start.clone())];
        for dir in [1.0, -1.0] {
            let end = if dir > 0.0 { horizon.1.max(0.0) } else { horizon.0.min(0.0) };
            let mut t = 0.0;
            let mut z = start.clone();
            while (end - t) * dir > 1e-15 {
                let next = if ((end - t) * dir) > spacing { t + dir * spacing } else { end };
                z = integrate(&|_s, z: &Vec<GrassmannElement>| flow_rhs(&generator, z), t, next, &z, &cfg)?;
                t = next;
                nodes.push((t, z.clone()));
            }
        }
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { generator, k, horizon, nodes, cfg })
    }
}

impl SuperCurve for FlowCurve {
    fn num_generators(&self) -> usize {
        self.k
    }
    fn num_even(&self) -> usize {
        self.generator.dim()
    }
    fn num_odd(&self) -> usize {
        self.generator.dim()
    }
    fn horizon(&self) -> (f64, f64) {
        self.horizon
    }
    fn coords(&self, t: f64) -> Result<Vec<GrassmannElement>> {
        let (t0, z0) = self.nodes.iter().min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs())).expect("at least one node");
        integrate(&|_s, z: &Vec<GrassmannElement>| flow_rhs(&self.generator, z), *t0, t, z0, &self.cfg)
    }
    fn coords_dot(&self, t: f64) -> Result<Vec<GrassmannElement>> {
        flow_rhs(&self.generator, &self.coords(t)?)
    }
}

/// The ℝ^{0|1}-flow of an odd derivation X with X² = 0 through an S-point of ΠTM:
/// (xⁱ, ξⁱ) ↦ (xⁱ + θ·X(xⁱ), ξⁱ + θ·X(dxⁱ)), constant in t.
pub fn odd_flow_curve(generator: &PiTDerivation, start: &[GrassmannElement], horizon: (f64, f64)) -> Result<SuperPath> {
    if generator.parity() != Parity::Odd {
        return Err(Error::MixedParity { expected: Parity::Odd });
    }
    let sq = crate::manifold_forms::graded_bracket(generator, generator)?;
    if !sq.is_zero() {
        return Err(Error::UnsupportedGenerator(format!("odd generator with nonzero square {sq:?}")));
    }
    let n = generator.dim();
    if start.len() != 2 * n {
        return Err(Error::DimensionMismatch { expected: 2 * n, found: start.len() });
    }
    let k = start[0].num_generators();
    let theta = GrassmannElement::generator(k, THETA)?;
    let v = flow_rhs(generator, start)?;
    let coords = start.iter().zip(&v).map(|(z, vz)| vec![z + &(&theta * vz)]).collect();
    SuperPath::new(k, horizon, coords, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reparametrized_derivative_matches_difference() {
        let k = 2;
        let eta = GrassmannElement::generator(k, 1).unwrap();
        let theta = GrassmannElement::generator(k, 0).unwrap();
        let c = SuperPath::new(
            k,
            (0.0, 1.0),
            vec![vec![GrassmannElement::scalar(k, 0.2).unwrap(), &GrassmannElement::one(k).unwrap() + &(&theta * &eta), GrassmannElement::scalar(k, 0.5).unwrap()]],
            0,
        )
        .unwrap();
        let r = ReparametrizedCurve { inner: &c, phi: Reparametrization::cubic(true) };
        let (t, h) = (0.4, 1e-5);
        let fd = &r.coords(t + h).unwrap()[0] - &r.coords(t - h).unwrap()[0];
        let exact = &r.coords_dot(t).unwrap()[0];
        assert!(fd.scale(0.5 / h).max_abs_diff(exact) < 1e-8);
    }

    #[test]
    fn super_reparametrization_preserves_distribution() {
        let times = [0.0, 0.3, 1.0];
        assert!(Reparametrization::cubic(true).distribution_residual(&times) < 1e-14);
        assert!(Reparametrization::cubic(false).distribution_residual(&times) > 1e-3);
        assert!(Reparametrization::new(|t| t, |_| -1.0, |_| 0.0, false).validate(&times).is_err());
    }
}
