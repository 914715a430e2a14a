use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::grassmann::{monomial_sign, GrassmannElement, Parity};

use super::scalar::ScalarField;
use super::vector::VectorField;

/// A differential form on ℝⁿ, i.e. a function on ΠTM.
///
/// Terms are keyed by the bitmask of the increasing index tuple (bit `i` ↔ dxⁱ), so the
/// wedge sign of two basis forms is the same merge sign as in the Grassmann algebra.
#[derive(Clone)]
pub struct DifferentialForm {
    dim: usize,
    terms: BTreeMap<u32, ScalarField>,
}

pub(crate) fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, found: b });
    }
    Ok(())
}

impl DifferentialForm {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    /// The 0-form f (π* on functions).
    pub fn function(f: ScalarField) -> Self {
        let mut w = Self::zero(f.dim());
        w.add_term(0, f);
        w
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::function(ScalarField::constant(dim, c))
    }

    /// dxⁱ
    pub fn dx(dim: usize, i: usize) -> Self {
        Self::basis(dim, &[i], ScalarField::constant(dim, 1.0)).expect("index in range")
    }

    /// f · dx^{i₁} ∧ … ∧ dx^{iₘ}; indices may come in any order (sign applied).
    pub fn basis(dim: usize, indices: &[usize], f: ScalarField) -> Result<Self> {
        check_dims(dim, f.dim())?;
        let mut mask = 0u32;
        let mut sign = 1.0;
        for &i in indices {
            if i >= dim {
                return Err(Error::InvalidInput(format!("index {i} out of range for dimension {dim}")));
            }
            sign *= monomial_sign(mask, 1 << i);
            mask |= 1 << i;
        }
        let mut w = Self::zero(dim);
        if sign != 0.0 {
            w.add_term(mask, f.scale(sign));
        }
        Ok(w)
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (u32, ScalarField)>) -> Result<Self> {
        let mut w = Self::zero(dim);
        for (mask, f) in terms {
            check_dims(dim, f.dim())?;
            if (mask as u64) >> dim != 0 {
                return Err(Error::InvalidInput(format!("index mask {mask:#b} exceeds dimension {dim}")));
            }
            w.add_term(mask, f);
        }
        Ok(w)
    }

    fn add_term(&mut self, mask: u32, f: ScalarField) {
        if f.is_zero() {
            return;
        }
        match self.terms.entry(mask) {
            Entry::Vacant(v) => {
                v.insert(f);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().add(&f).expect("dimensions checked");
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &ScalarField)> {
        self.terms.iter().map(|(m, f)| (*m, f))
    }

    pub fn coefficient(&self, mask: u32) -> Option<&ScalarField> {
        self.terms.get(&mask)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.values().all(ScalarField::is_poly)
    }

    /// Degrees carrying a non-zero term.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.terms.keys().map(|m| m.count_ones() as usize).collect();
        d.dedup();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Parity when homogeneous (zero counts as even).
    pub fn parity(&self) -> Option<Parity> {
        let mut it = self.terms.keys().map(|m| Parity::of_degree(m.count_ones() as usize));
        match it.next() {
            None => Some(Parity::Even),
            Some(p) => it.all(|q| q == p).then_some(p),
        }
    }

    pub fn is_function(&self) -> bool {
        self.terms.keys().all(|m| *m == 0)
    }

    /// Degree-0 part (i* along M → ΠTM).
    pub fn degree_zero_part(&self) -> ScalarField {
        self.terms.get(&0).cloned().unwrap_or_else(|| ScalarField::zero(self.dim))
    }

    pub fn homogeneous_part(&self, degree: usize) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().filter(|(m, _)| m.count_ones() as usize == degree).map(|(m, f)| (*m, f.clone())).collect(),
        }
    }

    pub fn parity_part(&self, parity: Parity) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| Parity::of_degree(m.count_ones() as usize) == parity)
                .map(|(m, f)| (*m, f.clone()))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        let mut out = self.clone();
        for (m, f) in &other.terms {
            out.add_term(*m, f.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, f) in &self.terms {
            out.add_term(*m, f.scale(s));
        }
        out
    }

    /// f·ω for a function f.
    pub fn mul_function(&self, f: &ScalarField) -> Result<Self> {
        check_dims(self.dim, f.dim())?;
        let mut out = Self::zero(self.dim);
        for (m, g) in &self.terms {
            out.add_term(*m, f.mul(g)?);
        }
        Ok(out)
    }

    /// ω ∧ η
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        let mut out = Self::zero(self.dim);
        for (a, f) in &self.terms {
            for (b, g) in &other.terms {
                let sign = monomial_sign(*a, *b);
                if sign == 0.0 {
                    continue;
                }
                out.add_term(a | b, f.mul(g)?.scale(sign));
            }
        }
        Ok(out)
    }

    /// ∂ω/∂xⁱ applied to the coefficients; this is 𝓛_{∂ᵢ}.
    pub fn partial(&self, i: usize) -> Result<Self> {
        let mut out = Self::zero(self.dim);
        for (m, f) in &self.terms {
            out.add_term(*m, f.partial(i)?);
        }
        Ok(out)
    }

    /// ι_{∂ᵢ}
    pub fn contract_coordinate(&self, i: usize) -> Self {
        let bit = 1u32 << i;
        let mut out = Self::zero(self.dim);
        for (m, f) in &self.terms {
            if m & bit == 0 {
                continue;
            }
            let rest = m & !bit;
            out.add_term(rest, f.scale(monomial_sign(bit, rest)));
        }
        out
    }

    /// Value at an S-point of ΠTM: x even, ξ odd (ξⁱ standing in for dxⁱ).
    pub fn eval_at(&self, x: &[GrassmannElement], xi: &[GrassmannElement]) -> Result<GrassmannElement> {
        check_dims(self.dim, x.len())?;
        check_dims(self.dim, xi.len())?;
        let k = x.first().map(|g| g.num_generators()).unwrap_or(0);
        let mut out = GrassmannElement::zero(k)?;
        for (m, f) in &self.terms {
            let mut term = f.super_eval(x)?;
            for (i, xi_i) in xi.iter().enumerate() {
                if m & (1 << i) != 0 {
                    term = &term * xi_i;
                }
            }
            out += &term;
        }
        Ok(out)
    }

    /// Largest coefficient difference; defined for polynomial forms only.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        let d = self.sub(other)?;
        let mut worst: f64 = 0.0;
        for f in d.terms.values() {
            match f.as_poly() {
                Some(p) => worst = worst.max(p.max_abs_coeff()),
                None => {
                    return Err(Error::InvalidInput("coefficientwise comparison needs polynomial forms".into()));
                }
            }
        }
        Ok(worst)
    }

    /// Largest coefficient difference at the given points; works for any coefficients.
    pub fn max_abs_diff_at(&self, other: &Self, points: &[Vec<f64>]) -> Result<f64> {
        check_dims(self.dim, other.dim)?;
        let mut masks: Vec<u32> = self.terms.keys().chain(other.terms.keys()).copied().collect();
        masks.sort_unstable();
        masks.dedup();
        let mut worst: f64 = 0.0;
        for x in points {
            for m in &masks {
                let a = self.terms.get(m).map(|f| f.eval(x)).unwrap_or(0.0);
                let b = other.terms.get(m).map(|f| f.eval(x)).unwrap_or(0.0);
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }
}

/// d
pub fn exterior_d(w: &DifferentialForm) -> Result<DifferentialForm> {
    let n = w.dim;
    let mut out = DifferentialForm::zero(n);
    for (m, f) in &w.terms {
        for j in 0..n {
            let bit = 1u32 << j;
            if m & bit != 0 {
                continue;
            }
            let df = f.partial(j)?;
            out.add_term(m | bit, df.scale(monomial_sign(bit, *m)));
        }
    }
    Ok(out)
}

/// ι_X
pub fn contract(x: &VectorField, w: &DifferentialForm) -> Result<DifferentialForm> {
    check_dims(w.dim, x.dim())?;
    let mut out = DifferentialForm::zero(w.dim);
    for (i, xi) in x.components().iter().enumerate() {
        if xi.is_zero() {
            continue;
        }
        out = out.add(&w.contract_coordinate(i).mul_function(xi)?)?;
    }
    Ok(out)
}

/// 𝓛_X, computed directly as an even derivation: X acts on coefficients and each dxⁱ
/// becomes dXⁱ in place.
pub fn lie_derivative(x: &VectorField, w: &DifferentialForm) -> Result<DifferentialForm> {
    let n = w.dim;
    check_dims(n, x.dim())?;
    let mut out = DifferentialForm::zero(n);
    for (m, f) in &w.terms {
        out.add_term(*m, x.apply(f)?);
        let indices: Vec<usize> = (0..n).filter(|i| m & (1 << i) != 0).collect();
        for (pos, &ip) in indices.iter().enumerate() {
            for j in 0..n {
                let dxj = x.component(ip).partial(j)?;
                if dxj.is_zero() {
                    continue;
                }
                let mut mask = 0u32;
                let mut sign = 1.0;
                for (q, &iq) in indices.iter().enumerate() {
                    let g = if q == pos { j } else { iq };
                    sign *= monomial_sign(mask, 1 << g);
                    mask |= 1 << g;
                }
                if sign == 0.0 {
                    continue;
                }
                out.add_term(mask, f.mul(&dxj)?.scale(sign));
            }
        }
    }
    Ok(out)
}

pub fn wedge(a: &DifferentialForm, b: &DifferentialForm) -> Result<DifferentialForm> {
    a.wedge(b)
}

impl fmt::Debug for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let idx: Vec<String> = (0..self.dim).filter(|i| m & (1 << i) != 0).map(|i| format!("dx{i}")).collect();
                if idx.is_empty() {
                    format!("({c:?})")
                } else {
                    format!("({c:?}) {}", idx.join("∧"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold_forms::polynomial::Polynomial;

    fn var(n: usize, i: usize) -> ScalarField {
        ScalarField::var(n, i)
    }

    #[test]
    fn d_of_x_dy_is_dx_dy() {
        let n = 2;
        let w = DifferentialForm::basis(n, &[1], var(n, 0)).unwrap();
        let dw = exterior_d(&w).unwrap();
        let expect = DifferentialForm::basis(n, &[0, 1], ScalarField::constant(n, 1.0)).unwrap();
        assert_eq!(dw.max_abs_diff(&expect).unwrap(), 0.0);
        assert!(exterior_d(&DifferentialForm::constant(n, 3.0)).unwrap().is_zero());
    }

    #[test]
    fn d_of_x2y() {
        let n = 2;
        let f = Polynomial::monomial(vec![2, 1], 1.0);
        let df = exterior_d(&DifferentialForm::function(f.into())).unwrap();
        let expect = DifferentialForm::basis(n, &[0], Polynomial::monomial(vec![1, 1], 2.0).into())
            .unwrap()
            .add(&DifferentialForm::basis(n, &[1], Polynomial::monomial(vec![2, 0], 1.0).into()).unwrap())
            .unwrap();
        assert_eq!(df.max_abs_diff(&expect).unwrap(), 0.0);
    }

    #[test]
    fn contraction_examples() {
        let n = 3;
        let dxdy = DifferentialForm::basis(n, &[0, 1], ScalarField::constant(n, 1.0)).unwrap();
        let r = contract(&VectorField::coordinate(n, 0), &dxdy).unwrap();
        assert_eq!(r.max_abs_diff(&DifferentialForm::dx(n, 1)).unwrap(), 0.0);
        let f = DifferentialForm::function(var(n, 2));
        assert!(contract(&VectorField::coordinate(n, 1), &f).unwrap().is_zero());
        // ι_{x∂y}(dy∧dz) = x dz
        let x_dy = VectorField::new(vec![ScalarField::zero(n), var(n, 0), ScalarField::zero(n)]).unwrap();
        let dydz = DifferentialForm::basis(n, &[1, 2], ScalarField::constant(n, 1.0)).unwrap();
        let r = contract(&x_dy, &dydz).unwrap();
        let expect = DifferentialForm::basis(n, &[2], var(n, 0)).unwrap();
        assert_eq!(r.max_abs_diff(&expect).unwrap(), 0.0);
    }

    #[test]
    fn lie_derivative_examples() {
        let n = 2;
        let dx = VectorField::coordinate(n, 0);
        let x_dy = DifferentialForm::basis(n, &[1], var(n, 0)).unwrap();
        let r = lie_derivative(&dx, &x_dy).unwrap();
        assert_eq!(r.max_abs_diff(&DifferentialForm::dx(n, 1)).unwrap(), 0.0);
        assert!(lie_derivative(&dx, &DifferentialForm::constant(n, 2.0)).unwrap().is_zero());
        assert!(lie_derivative(&dx, &DifferentialForm::dx(n, 0)).unwrap().is_zero());
    }

    #[test]
    fn wedge_examples() {
        let n = 2;
        let (dx, dy) = (DifferentialForm::dx(n, 0), DifferentialForm::dx(n, 1));
        let a = dx.wedge(&dy).unwrap();
        let b = dy.wedge(&dx).unwrap();
        assert!(a.add(&b).unwrap().is_zero());
        assert!(dx.wedge(&dx).unwrap().is_zero());
        let f = DifferentialForm::function(var(n, 1));
        assert_eq!(f.wedge(&dx).unwrap().max_abs_diff(&dx.mul_function(&var(n, 1)).unwrap()).unwrap(), 0.0);
        assert!(dx.wedge(&DifferentialForm::dx(3, 0)).is_err());
    }

    #[test]
    fn evaluation_at_s_point() {
        // ω = x dx + dy at (x = 2, ξ = (η₁, η₂)) = 2η₁ + η₂
        let n = 2;
        let k = 2;
        let w = DifferentialForm::basis(n, &[0], var(n, 0)).unwrap().add(&DifferentialForm::dx(n, 1)).unwrap();
        let x = vec![GrassmannElement::scalar(k, 2.0).unwrap(), GrassmannElement::zero(k).unwrap()];
        let xi = vec![GrassmannElement::generator(k, 0).unwrap(), GrassmannElement::generator(k, 1).unwrap()];
        let v = w.eval_at(&x, &xi).unwrap();
        assert_eq!(v.coeff(0b01), 2.0);
        assert_eq!(v.coeff(0b10), 1.0);
    }
}
