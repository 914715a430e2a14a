//! The canonical maps between M, ΠTM, ℝ^{1|1}, ℝ^{0|1} and the point, on functions.

use crate::error::{Error, Result};
use crate::grassmann::GrassmannElement;

use super::form::DifferentialForm;
use super::scalar::ScalarField;

/// π*: functions on M become 0-forms.
pub fn pi_pullback(f: &ScalarField) -> DifferentialForm {
    DifferentialForm::function(f.clone())
}

/// i*: restriction of a form along the zero section keeps the degree-0 part.
pub fn i_pullback(w: &DifferentialForm) -> ScalarField {
    w.degree_zero_part()
}

/// A superfunction on ℝ^{1|1} × S: f(t, θ) = f₀(t) + θ f₁(t), with f₀, f₁ polynomials in t
/// whose coefficients lie in the Grassmann algebra of S.
#[derive(Clone, Debug)]
pub struct SuperFunction11 {
    k: usize,
    f0: Vec<GrassmannElement>,
    f1: Vec<GrassmannElement>,
}

impl SuperFunction11 {
    pub fn new(f0: Vec<GrassmannElement>, f1: Vec<GrassmannElement>) -> Result<Self> {
        let k = f0.iter().chain(&f1).map(GrassmannElement::num_generators).next().unwrap_or(0);
        if f0.iter().chain(&f1).any(|c| c.num_generators() != k) {
            return Err(Error::InvalidInput("coefficients over different algebras".into()));
        }
        Ok(Self { k, f0, f1 })
    }

    pub fn theta_free(&self) -> &[GrassmannElement] {
        &self.f0
    }

    pub fn theta_part(&self) -> &[GrassmannElement] {
        &self.f1
    }

    fn zero_poly(&self, len: usize) -> Vec<GrassmannElement> {
        vec![GrassmannElement::zero(self.k).expect("k validated"); len]
    }

    fn dt_poly(p: &[GrassmannElement]) -> Vec<GrassmannElement> {
        p.iter().enumerate().skip(1).map(|(j, c)| c.scale(j as f64)).collect()
    }

    /// ∂_t
    pub fn dt(&self) -> Self {
        Self { k: self.k, f0: Self::dt_poly(&self.f0), f1: Self::dt_poly(&self.f1) }
    }

    /// ∂_θ (left derivative)
    pub fn dtheta(&self) -> Self {
        Self { k: self.k, f0: self.f1.clone(), f1: vec![] }
    }

    /// D = ∂_θ + θ∂_t
    pub fn d(&self) -> Self {
        Self { k: self.k, f0: self.f1.clone(), f1: Self::dt_poly(&self.f0) }
    }

    pub fn eval(&self, t: f64) -> (GrassmannElement, GrassmannElement) {
        let ev = |p: &[GrassmannElement]| {
            let mut acc = GrassmannElement::zero(self.k).expect("k validated");
            for c in p.iter().rev() {
                acc = acc.scale(t);
                acc += c;
            }
            acc
        };
        (ev(&self.f0), ev(&self.f1))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let cmp = |a: &[GrassmannElement], b: &[GrassmannElement]| {
            let n = a.len().max(b.len());
            let z = self.zero_poly(1).remove(0);
            (0..n).map(|j| a.get(j).unwrap_or(&z).max_abs_diff(b.get(j).unwrap_or(&z))).fold(0.0, f64::max)
        };
        cmp(&self.f0, &other.f0).max(cmp(&self.f1, &other.f1))
    }

    /// q*: a function of t alone, pulled back along ℝ^{1|1} → ℝ.
    pub fn q_pullback(g: Vec<GrassmannElement>) -> Result<Self> {
        Self::new(g, vec![])
    }

    /// p*: a function h₀ + θh₁ on ℝ^{0|1}, pulled back along ℝ^{1|1} → ℝ^{0|1}.
    pub fn p_pullback(h0: GrassmannElement, h1: GrassmannElement) -> Result<Self> {
        Self::new(vec![h0], vec![h1])
    }

    /// j*: value at (t, θ) = (0, 0).
    pub fn j_pullback(&self) -> GrassmannElement {
        self.f0.first().cloned().unwrap_or_else(|| GrassmannElement::zero(self.k).expect("k validated"))
    }
}

/// Δ*: a function h₀₀ + θ₁h₁₀ + θ₂h₀₁ + θ₁θ₂h₁₁ on ℝ^{0|1}×ℝ^{0|1} restricted to the
/// diagonal is h₀₀ + θ(h₁₀ + h₀₁), returned as (θ-free part, θ part).
pub fn diagonal_pullback(
    h00: &GrassmannElement,
    h10: &GrassmannElement,
    h01: &GrassmannElement,
) -> (GrassmannElement, GrassmannElement) {
    (h00.clone(), h10 + h01)
}
