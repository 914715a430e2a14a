use std::fmt;

use crate::error::{Error, Result};
use crate::grassmann::Parity;

use super::form::{check_dims, DifferentialForm};
use super::scalar::ScalarField;
use super::vector::VectorField;

/// A derivation of Ω*(ℝⁿ) (a vector field on ΠTM) in coordinate normal form
/// V = Σ aᵢ 𝓛_{∂ᵢ} + Σ bᵢ ι_{∂ᵢ}, where aᵢ = V(xⁱ) and bᵢ = V(dxⁱ).
///
/// The action is V(ω) = Σ aᵢ ∧ ∂ᵢω + Σ bᵢ ∧ ι_{∂ᵢ}ω.
#[derive(Clone)]
pub struct PiTDerivation {
    parity: Parity,
    a: Vec<DifferentialForm>,
    b: Vec<DifferentialForm>,
}

fn require_parity(w: &DifferentialForm, p: Parity, what: &str) -> Result<()> {
    match w.parity() {
        Some(q) if q == p || w.is_zero() => Ok(()),
        _ => Err(Error::ParityInconsistent(format!("{what} = {w:?} is not {p:?}"))),
    }
}

impl PiTDerivation {
    /// Builds a derivation from its normal-form coefficients, checking parity.
    pub fn new(parity: Parity, a: Vec<DifferentialForm>, b: Vec<DifferentialForm>) -> Result<Self> {
        let n = a.len();
        check_dims(n, b.len())?;
        for (i, w) in a.iter().enumerate() {
            check_dims(n, w.dim())?;
            require_parity(w, parity, &format!("a[{i}]"))?;
        }
        for (i, w) in b.iter().enumerate() {
            check_dims(n, w.dim())?;
            require_parity(w, parity.flip(), &format!("b[{i}]"))?;
        }
        Ok(Self { parity, a, b })
    }

    pub fn zero(dim: usize, parity: Parity) -> Self {
        Self { parity, a: vec![DifferentialForm::zero(dim); dim], b: vec![DifferentialForm::zero(dim); dim] }
    }

    /// d = Σ dxⁱ 𝓛_{∂ᵢ}
    pub fn exterior_d(dim: usize) -> Self {
        Self { parity: Parity::Odd, a: (0..dim).map(|i| DifferentialForm::dx(dim, i)).collect(), b: vec![DifferentialForm::zero(dim); dim] }
    }

    /// ι_X = Σ Xⁱ ι_{∂ᵢ}
    pub fn contraction(x: &VectorField) -> Self {
        let n = x.dim();
        Self {
            parity: Parity::Odd,
            a: vec![DifferentialForm::zero(n); n],
            b: x.components().iter().map(|c| DifferentialForm::function(c.clone())).collect(),
        }
    }

    /// 𝓛_X = Σ Xⁱ 𝓛_{∂ᵢ} + Σ dXⁱ ι_{∂ᵢ}
    pub fn lie(x: &VectorField) -> Result<Self> {
        let a: Vec<_> = x.components().iter().map(|c| DifferentialForm::function(c.clone())).collect();
        let b = a.iter().map(super::form::exterior_d).collect::<Result<Vec<_>>>()?;
        Ok(Self { parity: Parity::Even, a, b })
    }

    /// 𝓛_{∂ᵢ}
    pub fn coordinate_lie(dim: usize, i: usize) -> Self {
        Self::lie(&VectorField::coordinate(dim, i)).expect("constant field")
    }

    /// ι_{∂ᵢ}
    pub fn coordinate_contraction(dim: usize, i: usize) -> Self {
        Self::contraction(&VectorField::coordinate(dim, i))
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Coefficients aᵢ of 𝓛_{∂ᵢ}.
    pub fn lie_coefficients(&self) -> &[DifferentialForm] {
        &self.a
    }

    /// Coefficients bᵢ of ι_{∂ᵢ}.
    pub fn contraction_coefficients(&self) -> &[DifferentialForm] {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(&self.b).all(DifferentialForm::is_zero)
    }

    /// True when all aᵢ vanish, i.e. V is an Ω*-combination of contractions.
    pub fn is_contraction_type(&self) -> bool {
        self.a.iter().all(DifferentialForm::is_zero)
    }

    pub fn apply(&self, w: &DifferentialForm) -> Result<DifferentialForm> {
        check_dims(self.dim(), w.dim())?;
        let mut out = DifferentialForm::zero(self.dim());
        for i in 0..self.dim() {
            if !self.a[i].is_zero() {
                out = out.add(&self.a[i].wedge(&w.partial(i)?)?)?;
            }
            if !self.b[i].is_zero() {
                out = out.add(&self.b[i].wedge(&w.contract_coordinate(i))?)?;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        if self.parity != other.parity {
            return Err(Error::MixedParity { expected: self.parity });
        }
        Ok(Self {
            parity: self.parity,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x.add(y)).collect::<Result<_>>()?,
            b: self.b.iter().zip(&other.b).map(|(x, y)| x.add(y)).collect::<Result<_>>()?,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { parity: self.parity, a: self.a.iter().map(|w| w.scale(s)).collect(), b: self.b.iter().map(|w| w.scale(s)).collect() }
    }

    /// ω·V for a homogeneous form ω; the parity is |ω| + |V|.
    pub fn left_mul(&self, w: &DifferentialForm) -> Result<Self> {
        let p = w.parity().ok_or_else(|| Error::ParityInconsistent("coefficient form is not homogeneous".into()))?;
        Ok(Self {
            parity: self.parity.add(p),
            a: self.a.iter().map(|x| w.wedge(x)).collect::<Result<_>>()?,
            b: self.b.iter().map(|x| w.wedge(x)).collect::<Result<_>>()?,
        })
    }

    /// Largest coefficient difference between normal forms (polynomial data).
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        let mut worst: f64 = 0.0;
        for (x, y) in self.a.iter().zip(&other.a).chain(self.b.iter().zip(&other.b)) {
            worst = worst.max(x.max_abs_diff(y)?);
        }
        Ok(worst)
    }
}

/// [V, W] = VW − (−1)^{|V||W|} WV, read off on coordinate functions.
pub fn graded_bracket(v: &PiTDerivation, w: &PiTDerivation) -> Result<PiTDerivation> {
    check_dims(v.dim(), w.dim())?;
    let sign = v.parity.koszul(w.parity);
    let n = v.dim();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        a.push(v.apply(&w.a[i])?.sub(&w.apply(&v.a[i])?.scale(sign))?);
        b.push(v.apply(&w.b[i])?.sub(&w.apply(&v.b[i])?.scale(sign))?);
    }
    PiTDerivation::new(v.parity.add(w.parity), a, b)
}

pub fn apply_derivation(v: &PiTDerivation, w: &DifferentialForm) -> Result<DifferentialForm> {
    v.apply(w)
}

/// Fixed probe forms used to confirm that a black-box operator acts as the derivation
/// determined by its values on xⁱ and dxⁱ.
pub fn leibniz_probes(dim: usize) -> Vec<DifferentialForm> {
    let x = |i: usize| ScalarField::var(dim, i);
    let mut probes = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            let xixj = x(i).mul(&x(j)).expect("same dimension");
            probes.push(DifferentialForm::function(xixj.clone()));
            probes.push(DifferentialForm::basis(dim, &[j], x(i)).expect("index in range"));
            for k in 0..dim {
                if k != j {
                    probes.push(DifferentialForm::basis(dim, &[j, k], xixj.clone()).expect("index in range"));
                }
            }
        }
    }
    probes
}

/// Reads the normal form of a derivation given as a black-box operator with a declared
/// parity, then confirms on probe forms that the operator is that derivation.
pub fn decompose_derivation(
    dim: usize,
    parity: Parity,
    op: &dyn Fn(&DifferentialForm) -> Result<DifferentialForm>,
) -> Result<PiTDerivation> {
    let mut a = Vec::with_capacity(dim);
    let mut b = Vec::with_capacity(dim);
    for i in 0..dim {
        let xi = op(&DifferentialForm::function(ScalarField::var(dim, i)))?;
        require_parity(&xi, parity, &format!("V(x{i})"))?;
        a.push(xi);
        let dxi = op(&DifferentialForm::dx(dim, i))?;
        require_parity(&dxi, parity.flip(), &format!("V(dx{i})"))?;
        b.push(dxi);
    }
    let v = PiTDerivation::new(parity, a, b)?;
    if !op(&DifferentialForm::constant(dim, 1.0))?.is_zero() {
        return Err(Error::LeibnizInconsistent("operator does not annihilate constants".into()));
    }
    for probe in leibniz_probes(dim) {
        let got = op(&probe)?;
        let want = v.apply(&probe)?;
        let diff = got.max_abs_diff(&want)?;
        if diff > 1e-12 {
            return Err(Error::LeibnizInconsistent(format!("on {probe:?}: operator gives {got:?}, derivation gives {want:?}")));
        }
    }
    Ok(v)
}

impl fmt::Debug for PiTDerivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} derivation {{", self.parity)?;
        for (i, w) in self.a.iter().enumerate() {
            if !w.is_zero() {
                write!(f, " ({w:?}) L{i};")?;
            }
        }
        for (i, w) in self.b.iter().enumerate() {
            if !w.is_zero() {
                write!(f, " ({w:?}) i{i};")?;
            }
        }
        write!(f, " }}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold_forms::form::{contract, exterior_d, lie_derivative};

    fn one(n: usize) -> ScalarField {
        ScalarField::constant(n, 1.0)
    }

    #[test]
    fn action_examples() {
        let n = 2;
        let ix = PiTDerivation::coordinate_contraction(n, 0);
        let r = ix.apply(&DifferentialForm::dx(n, 0)).unwrap();
        assert_eq!(r.max_abs_diff(&DifferentialForm::constant(n, 1.0)).unwrap(), 0.0);
        let dx_ix = ix.left_mul(&DifferentialForm::dx(n, 0)).unwrap();
        assert_eq!(dx_ix.parity(), Parity::Even);
        assert!(dx_ix.apply(&DifferentialForm::dx(n, 1)).unwrap().is_zero());
        let dy_ix = ix.left_mul(&DifferentialForm::dx(n, 1)).unwrap();
        let r = dy_ix.apply(&DifferentialForm::dx(n, 0)).unwrap();
        assert_eq!(r.max_abs_diff(&DifferentialForm::dx(n, 1)).unwrap(), 0.0);
    }

    #[test]
    fn bracket_examples() {
        let n = 2;
        let ix = PiTDerivation::coordinate_contraction(n, 0);
        let iy = PiTDerivation::coordinate_contraction(n, 1);
        assert!(graded_bracket(&ix, &iy).unwrap().is_zero());
        let lx = PiTDerivation::coordinate_lie(n, 0);
        let shear = VectorField::new(vec![ScalarField::zero(n), ScalarField::var(n, 0)]).unwrap();
        let b = graded_bracket(&lx, &PiTDerivation::contraction(&shear)).unwrap();
        assert_eq!(b.max_abs_diff(&iy).unwrap(), 0.0);
        let d = PiTDerivation::exterior_d(n);
        assert!(graded_bracket(&d, &d).unwrap().is_zero());
    }

    #[test]
    fn normal_forms_match_direct_operators() {
        let n = 3;
        let x = VectorField::new(vec![ScalarField::var(n, 1), ScalarField::var(n, 0).mul(&ScalarField::var(n, 2)).unwrap(), one(n)]).unwrap();
        let w = DifferentialForm::basis(n, &[0, 2], ScalarField::var(n, 1).mul(&ScalarField::var(n, 1)).unwrap())
            .unwrap()
            .add(&DifferentialForm::basis(n, &[1], ScalarField::var(n, 0)).unwrap())
            .unwrap();
        let d = PiTDerivation::exterior_d(n);
        assert_eq!(d.apply(&w).unwrap().max_abs_diff(&exterior_d(&w).unwrap()).unwrap(), 0.0);
        let i = PiTDerivation::contraction(&x);
        assert_eq!(i.apply(&w).unwrap().max_abs_diff(&contract(&x, &w).unwrap()).unwrap(), 0.0);
        let l = PiTDerivation::lie(&x).unwrap();
        assert_eq!(l.apply(&w).unwrap().max_abs_diff(&lie_derivative(&x, &w).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn decomposition_examples() {
        let n = 2;
        let d = decompose_derivation(n, Parity::Odd, &|w| exterior_d(w)).unwrap();
        for i in 0..n {
            assert_eq!(d.lie_coefficients()[i].max_abs_diff(&DifferentialForm::dx(n, i)).unwrap(), 0.0);
            assert!(d.contraction_coefficients()[i].is_zero());
        }
        let ix = decompose_derivation(n, Parity::Odd, &|w| Ok(w.contract_coordinate(0))).unwrap();
        assert!(ix.is_contraction_type());
        assert_eq!(ix.contraction_coefficients()[0].max_abs_diff(&DifferentialForm::constant(n, 1.0)).unwrap(), 0.0);
        let dy = DifferentialForm::dx(n, 1);
        let dylx = decompose_derivation(n, Parity::Odd, &|w| dy.wedge(&w.partial(0)?)).unwrap();
        assert_eq!(dylx.lie_coefficients()[0].max_abs_diff(&dy).unwrap(), 0.0);
        assert!(dylx.lie_coefficients()[1].is_zero());
    }

    #[test]
    fn decomposition_rejects_bad_input() {
        let n = 2;
        let e = decompose_derivation(n, Parity::Even, &|w| exterior_d(w)).unwrap_err();
        assert!(matches!(e, Error::ParityInconsistent(_)));
        // ∂²/∂x² is second order, so it is not a derivation
        let e = decompose_derivation(n, Parity::Even, &|w| w.partial(0)?.partial(0)).unwrap_err();
        assert!(matches!(e, Error::LeibnizInconsistent(_)));
    }
}
