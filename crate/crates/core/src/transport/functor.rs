use serde::Serialize;

use crate::bundles::{GradedConnection, PiTConnection, PiTSection};
use crate::error::{Error, Result};
use crate::grassmann::{GrassmannElement, Parity};
use crate::manifold_forms::{PiTDerivation, VectorField};
use crate::ode::OdeConfig;

use super::curve::{odd_flow_curve, FlowCurve, Projected, SuperCurve, ZeroSection, THETA};
use super::engine::{transport_along, BaseField, ConnectionField, ParallelSection, PiTField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Base {
    M,
    PiTM,
}

/// A rule assigning to each (super)path c and initial value v₀ ∈ E_{c(0)} ⊗ Λ_k a parallel
/// section along c.
pub trait TransportFunctor: Send + Sync {
    fn base(&self) -> Base;
    fn base_dim(&self) -> usize;
    fn rank(&self) -> usize;
    fn transport(&self, curve: &dyn SuperCurve, v0: &[GrassmannElement], times: &[f64]) -> Result<ParallelSection>;
}

/// Parallel transport of a connection, on M or on ΠTM.
pub struct ConnectionTransport {
    base: Base,
    dim: usize,
    field: Box<dyn ConnectionField>,
    pub cfg: OdeConfig,
}

impl ConnectionTransport {
    pub fn on_m(conn: &GradedConnection, cfg: OdeConfig) -> Self {
        Self { base: Base::M, dim: conn.bundle().dim, field: Box::new(BaseField::new(conn)), cfg }
    }

    pub fn on_pitm(conn: &PiTConnection, cfg: OdeConfig) -> Self {
        Self { base: Base::PiTM, dim: conn.bundle().dim, field: Box::new(PiTField::new(conn)), cfg }
    }

    pub fn field(&self) -> &dyn ConnectionField {
        self.field.as_ref()
    }
}

impl TransportFunctor for ConnectionTransport {
    fn base(&self) -> Base {
        self.base
    }
    fn base_dim(&self) -> usize {
        self.dim
    }
    fn rank(&self) -> usize {
        self.field.rank()
    }
    fn transport(&self, curve: &dyn SuperCurve, v0: &[GrassmannElement], times: &[f64]) -> Result<ParallelSection> {
        transport_along(self.field.as_ref(), curve, v0, times, &self.cfg)
    }
}

/// The functor on ΠTM induced by one on M: transport along π∘c.
pub struct LiftedTransport<T> {
    inner: T,
}

impl<T: TransportFunctor> LiftedTransport<T> {
    pub fn new(inner: T) -> Result<Self> {
        if inner.base() != Base::M {
            return Err(Error::InvalidInput("lifting needs a functor over M".into()));
        }
        Ok(Self { inner })
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }
}

impl<T: TransportFunctor> TransportFunctor for LiftedTransport<T> {
    fn base(&self) -> Base {
        Base::PiTM
    }
    fn base_dim(&self) -> usize {
        self.inner.base_dim()
    }
    fn rank(&self) -> usize {
        self.inner.rank()
    }
    fn transport(&self, curve: &dyn SuperCurve, v0: &[GrassmannElement], times: &[f64]) -> Result<ParallelSection> {
        self.inner.transport(&Projected(curve), v0, times)
    }
}

/// The functor on M induced by one on ΠTM: transport along i∘c.
pub struct ProjectedTransport<T> {
    inner: T,
}

impl<T: TransportFunctor> ProjectedTransport<T> {
    pub fn new(inner: T) -> Result<Self> {
        if inner.base() != Base::PiTM {
            return Err(Error::InvalidInput("projecting needs a functor over ΠTM".into()));
        }
        Ok(Self { inner })
    }
}

impl<T: TransportFunctor> TransportFunctor for ProjectedTransport<T> {
    fn base(&self) -> Base {
        Base::M
    }
    fn base_dim(&self) -> usize {
        self.inner.base_dim()
    }
    fn rank(&self) -> usize {
        self.inner.rank()
    }
    fn transport(&self, curve: &dyn SuperCurve, v0: &[GrassmannElement], times: &[f64]) -> Result<ParallelSection> {
        self.inner.transport(&ZeroSection(curve), v0, times)
    }
}

impl<T: TransportFunctor + ?Sized> TransportFunctor for &T {
    fn base(&self) -> Base {
        (**self).base()
    }
    fn base_dim(&self) -> usize {
        (**self).base_dim()
    }
    fn rank(&self) -> usize {
        (**self).rank()
    }
    fn transport(&self, curve: &dyn SuperCurve, v0: &[GrassmannElement], times: &[f64]) -> Result<ParallelSection> {
        (**self).transport(curve, v0, times)
    }
}

/// Infinitesimal generators whose flows on ΠTM can be transported along.
#[derive(Clone, Debug)]
pub enum FlowGenerator {
    /// 𝓛_X for a vector field X on M.
    Lie(VectorField),
    /// ι_X, with ℝ^{0|1}-flow.
    Contraction(VectorField),
    /// Any even derivation.
    Even(PiTDerivation),
    /// An odd derivation with V² = 0.
    OddNilpotent(PiTDerivation),
}

impl FlowGenerator {
    pub fn derivation(&self) -> Result<PiTDerivation> {
        match self {
            FlowGenerator::Lie(x) => PiTDerivation::lie(x),
            FlowGenerator::Contraction(x) => Ok(PiTDerivation::contraction(x)),
            FlowGenerator::Even(v) | FlowGenerator::OddNilpotent(v) => Ok(v.clone()),
        }
    }
}

/// The parallel family obtained by transporting σ₀ along the flow through an S-point.
#[derive(Clone, Debug)]
pub struct FlowFamily {
    pub parity: Parity,
    pub section: ParallelSection,
    /// The initial value σ₀(x₀, ξ₀).
    pub initial: Vec<GrassmannElement>,
}

/// Generic S-point of ΠTM over the real point x₀: ξⁱ = ηᵢ with ηᵢ the generators 1..=n
/// of Λ_{n+1} (generator 0 is θ).
pub fn generic_point(x0: &[f64]) -> Result<Vec<GrassmannElement>> {
    let n = x0.len();
    let k = n + 1;
    let mut z = x0.iter().map(|&x| GrassmannElement::scalar(k, x)).collect::<Result<Vec<_>>>()?;
    for i in 0..n {
        z.push(GrassmannElement::generator(k, i + 1)?);
    }
    Ok(z)
}

/// σ evaluated at an S-point (x, ξ) of ΠTM.
pub fn section_at(sigma: &PiTSection, z: &[GrassmannElement]) -> Result<Vec<GrassmannElement>> {
    let n = z.len() / 2;
    sigma.components.iter().map(|w| w.eval_at(&z[..n], &z[n..])).collect()
}

/// Transports σ₀ along the flow of `generator` starting at the S-point `start` of ΠTM.
/// Even generators flow for the given times; odd ones use the ℝ^{0|1} flow, reported at t = 0.
pub fn flow_transport(functor: &dyn TransportFunctor, generator: &FlowGenerator, sigma0: &PiTSection, start: &[GrassmannElement], times: &[f64], cfg: &OdeConfig) -> Result<FlowFamily> {
    if functor.base() != Base::PiTM {
        return Err(Error::InvalidInput("flow transport needs a functor over ΠTM".into()));
    }
    if start.iter().any(|z| z.contains_generator(THETA)) {
        return Err(Error::InvalidInput("starting point must not depend on θ".into()));
    }
    let v = generator.derivation()?;
    let initial = section_at(sigma0, start)?;
    match v.parity() {
        Parity::Even => {
            let lo = times.iter().copied().fold(0.0, f64::min);
            let hi = times.iter().copied().fold(0.0, f64::max);
            let curve = FlowCurve::new(v, start.to_vec(), (lo, hi), *cfg)?;
            let section = functor.transport(&curve, &initial, times)?;
            Ok(FlowFamily { parity: Parity::Even, section, initial })
        }
        Parity::Odd => {
            if !matches!(generator, FlowGenerator::Contraction(_) | FlowGenerator::OddNilpotent(_)) {
                return Err(Error::UnsupportedGenerator("odd flow for an even-labelled generator".into()));
            }
            let curve = odd_flow_curve(&v, start, (0.0, 0.0))?;
            let section = functor.transport(&curve, &initial, &[0.0])?;
            Ok(FlowFamily { parity: Parity::Odd, section, initial })
        }
    }
}
