use crate::error::{Error, Result};
use crate::grassmann::GrassmannElement;

use super::scalar::ScalarField;

/// X = Σ Xⁱ ∂ᵢ on ℝⁿ.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::InvalidInput("vector field needs at least one component".into()));
        }
        for c in &components {
            if c.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: c.dim() });
            }
        }
        Ok(Self { components })
    }

    pub fn zero(dim: usize) -> Self {
        Self { components: (0..dim).map(|_| ScalarField::zero(dim)).collect() }
    }

    /// The coordinate field ∂ᵢ.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut v = Self::zero(dim);
        v.components[i] = ScalarField::constant(dim, 1.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(ScalarField::is_zero)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// J[i][j] = ∂ⱼXⁱ at x.
    pub fn jacobian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        self.components
            .iter()
            .map(|c| {
                (0..n)
                    .map(|j| {
                        let mut alpha = vec![0; n];
                        alpha[j] = 1;
                        if c.max_order_is_zero() {
                            return Err(Error::DerivativeOrderUnavailable { needed: 1, available: 0 });
                        }
                        Ok(crate::grassmann::SmoothScalar::derivative_at(c, x, &alpha))
                    })
                    .collect()
            })
            .collect()
    }

    /// Components evaluated at an even S-point.
    pub fn super_eval(&self, x: &[GrassmannElement]) -> Result<Vec<GrassmannElement>> {
        self.components.iter().map(|c| c.super_eval(x)).collect()
    }

    /// X(f) = Σ Xⁱ ∂ᵢf
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: f.dim() });
        }
        let mut out = ScalarField::zero(self.dim());
        for (i, xi) in self.components.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            out = out.add(&xi.mul(&f.partial(i)?)?)?;
        }
        Ok(out)
    }

    /// [X, Y]ⁱ = X(Yⁱ) − Y(Xⁱ)
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        let comps = (0..self.dim())
            .map(|i| self.apply(&other.components[i])?.sub(&other.apply(&self.components[i])?))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Self::new(self.components.iter().zip(&other.components).map(|(a, b)| a.add(b)).collect::<Result<_>>()?)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { components: self.components.iter().map(|c| c.scale(s)).collect() }
    }

    /// f·X
    pub fn mul_scalar(&self, f: &ScalarField) -> Result<Self> {
        Self::new(self.components.iter().map(|c| f.mul(c)).collect::<Result<_>>()?)
    }
}

impl ScalarField {
    pub(crate) fn max_order_is_zero(&self) -> bool {
        crate::grassmann::SmoothScalar::max_derivative_order(self) == Some(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_of_translation_and_shear() {
        // [∂x, x∂y] = ∂y
        let n = 2;
        let dx = VectorField::coordinate(n, 0);
        let shear = VectorField::new(vec![ScalarField::zero(n), ScalarField::var(n, 0)]).unwrap();
        let b = dx.bracket(&shear).unwrap();
        assert!(b.component(0).is_zero());
        assert_eq!(b.component(1).as_poly().unwrap(), ScalarField::constant(n, 1.0).as_poly().unwrap());
    }

    #[test]
    fn rejects_wrong_component_dimension() {
        assert!(VectorField::new(vec![ScalarField::var(2, 0)]).is_err());
    }
}
