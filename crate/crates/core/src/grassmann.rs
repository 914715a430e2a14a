//! Finite Grassmann algebras Λ_k over ℝ.
//!
//! Elements are stored densely, indexed by the bitmask of the generator subset
//! in ascending order. Bit `i` of a mask is the generator `θ_{i}`. Everything
//! else in the crate (S-points, the θ coordinate of ℝ^{1|1}, the universal
//! S-point of ΠTM) is expressed through this type.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest generator count supported by the dense representation.
pub const MAX_GENERATORS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_degree(degree: usize) -> Self {
        if degree.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    /// Parity of a product.
    pub fn add(self, other: Parity) -> Self {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    /// (−1)^{|a||b|}
    pub fn koszul(self, other: Parity) -> f64 {
        if self.is_odd() && other.is_odd() {
            -1.0
        } else {
            1.0
        }
    }
}

/// Sign of `e_a · e_b` rewritten in canonical order; zero when the monomials share a generator.
pub fn monomial_sign(a: u32, b: u32) -> f64 {
    if a & b != 0 {
        return 0.0;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let p = rest.trailing_zeros();
        swaps += (a >> (p + 1)).count_ones();
        rest &= rest - 1;
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Element of the exterior algebra on `k` generators.
#[derive(Clone, PartialEq)]
pub struct GrassmannElement {
    k: usize,
    coeffs: Vec<f64>,
}

impl GrassmannElement {
    pub fn zero(k: usize) -> Result<Self> {
        if k > MAX_GENERATORS {
            return Err(Error::TooManyGenerators { requested: k, max: MAX_GENERATORS });
        }
        Ok(Self { k, coeffs: vec![0.0; 1 << k] })
    }

    pub fn scalar(k: usize, c: f64) -> Result<Self> {
        let mut z = Self::zero(k)?;
        z.coeffs[0] = c;
        Ok(z)
    }

    pub fn one(k: usize) -> Result<Self> {
        Self::scalar(k, 1.0)
    }

    /// The generator `θ_i` (zero-based).
    pub fn generator(k: usize, i: usize) -> Result<Self> {
        if i >= k {
            return Err(Error::InvalidInput(format!("generator index {i} out of range for k = {k}")));
        }
        Self::monomial(k, 1 << i, 1.0)
    }

    pub fn monomial(k: usize, mask: u32, c: f64) -> Result<Self> {
        let mut z = Self::zero(k)?;
        if (mask as usize) >= z.coeffs.len() {
            return Err(Error::InvalidInput(format!("monomial {mask:#b} needs more than {k} generators")));
        }
        z.coeffs[mask as usize] = c;
        Ok(z)
    }

    /// Builds an element from (generator subset, coefficient) pairs. Subsets may be given in
    /// any order; the antisymmetry sign is applied while normalizing.
    pub fn from_terms(k: usize, terms: &[(Vec<usize>, f64)]) -> Result<Self> {
        let mut z = Self::zero(k)?;
        for (subset, c) in terms {
            let mut mask = 0u32;
            let mut sign = 1.0;
            for &g in subset {
                if g >= k {
                    return Err(Error::InvalidInput(format!("generator index {g} out of range for k = {k}")));
                }
                sign *= monomial_sign(mask, 1 << g);
                mask |= 1 << g;
            }
            z.coeffs[mask as usize] += sign * c;
        }
        Ok(z)
    }

    pub fn num_generators(&self) -> usize {
        self.k
    }

    pub fn coeff(&self, mask: u32) -> f64 {
        self.coeffs.get(mask as usize).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, mask: u32, c: f64) {
        self.coeffs[mask as usize] = c;
    }

    /// Non-zero terms as (mask, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(m, c)| (m as u32, *c))
    }

    pub fn body(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn soul(&self) -> Self {
        let mut s = self.clone();
        s.coeffs[0] = 0.0;
        s
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|m| (self.coeff(m as u32) - other.coeff(m as u32)).abs())
            .fold(0.0, f64::max)
    }

    pub fn parity_decompose(&self) -> (Self, Self) {
        let mut even = self.clone();
        let mut odd = self.clone();
        for m in 0..self.coeffs.len() {
            if (m as u32).count_ones().is_multiple_of(2) {
                odd.coeffs[m] = 0.0;
            } else {
                even.coeffs[m] = 0.0;
            }
        }
        (even, odd)
    }

    /// `Some(parity)` when the element is homogeneous; zero counts as even.
    pub fn parity(&self) -> Option<Parity> {
        let (even, odd) = self.parity_decompose();
        match (even.is_zero(), odd.is_zero()) {
            (_, true) => Some(Parity::Even),
            (true, false) => Some(Parity::Odd),
            (false, false) => None,
        }
    }

    /// Grading automorphism: negates the odd part.
    pub fn involution(&self) -> Self {
        let mut out = self.clone();
        for (m, c) in out.coeffs.iter_mut().enumerate() {
            if (m as u32).count_ones() % 2 == 1 {
                *c = -*c;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { k: self.k, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Writes `self = a + θ_g · b` with `a`, `b` free of `θ_g` and returns `(a, b)`.
    pub fn split_left(&self, g: usize) -> (Self, Self) {
        let gm = 1u32 << g;
        let mut a = Self { k: self.k, coeffs: vec![0.0; self.coeffs.len()] };
        let mut b = a.clone();
        for (m, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let m = m as u32;
            if m & gm == 0 {
                a.coeffs[m as usize] += c;
            } else {
                let rest = m & !gm;
                b.coeffs[rest as usize] += monomial_sign(gm, rest) * c;
            }
        }
        (a, b)
    }

    pub fn contains_generator(&self, g: usize) -> bool {
        self.terms().any(|(m, _)| m & (1 << g) != 0)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.k).expect("k already validated");
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Re-expresses the element in an algebra with more generators (identity on masks).
    pub fn extend(&self, k: usize) -> Result<Self> {
        if k < self.k {
            return Err(Error::IncompatibleAlgebras { left: self.k, right: k });
        }
        let mut z = Self::zero(k)?;
        z.coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        Ok(z)
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len()];
        for (a, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            for (b, &cb) in other.coeffs.iter().enumerate() {
                if cb == 0.0 || a & b != 0 {
                    continue;
                }
                out[a | b] += monomial_sign(a as u32, b as u32) * ca * cb;
            }
        }
        Self { k: self.k, coeffs: out }
    }
}

/// Product in Λ_k; both operands must live in the same algebra.
pub fn gr_mul(a: &GrassmannElement, b: &GrassmannElement) -> Result<GrassmannElement> {
    if a.k != b.k {
        return Err(Error::IncompatibleAlgebras { left: a.k, right: b.k });
    }
    Ok(a.mul_unchecked(b))
}

pub fn parity_decompose(a: &GrassmannElement) -> (GrassmannElement, GrassmannElement) {
    a.parity_decompose()
}

impl fmt::Debug for GrassmannElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for g in 0..self.k {
                if m & (1 << g) != 0 {
                    write!(f, "θ{}", g + 1)?;
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

// Operators panic on mismatched algebras; use `gr_mul` for a checked product.
impl Mul for &GrassmannElement {
    type Output = GrassmannElement;
    fn mul(self, rhs: &GrassmannElement) -> GrassmannElement {
        assert_eq!(self.k, rhs.k, "Grassmann algebras differ");
        self.mul_unchecked(rhs)
    }
}

impl Add for &GrassmannElement {
    type Output = GrassmannElement;
    fn add(self, rhs: &GrassmannElement) -> GrassmannElement {
        assert_eq!(self.k, rhs.k, "Grassmann algebras differ");
        GrassmannElement {
            k: self.k,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &GrassmannElement {
    type Output = GrassmannElement;
    fn sub(self, rhs: &GrassmannElement) -> GrassmannElement {
        assert_eq!(self.k, rhs.k, "Grassmann algebras differ");
        GrassmannElement {
            k: self.k,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &GrassmannElement {
    type Output = GrassmannElement;
    fn neg(self) -> GrassmannElement {
        self.scale(-1.0)
    }
}

impl AddAssign<&GrassmannElement> for GrassmannElement {
    fn add_assign(&mut self, rhs: &GrassmannElement) {
        assert_eq!(self.k, rhs.k, "Grassmann algebras differ");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&GrassmannElement> for GrassmannElement {
    fn sub_assign(&mut self, rhs: &GrassmannElement) {
        assert_eq!(self.k, rhs.k, "Grassmann algebras differ");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl GrassmannElement {
    /// `self += s · x`
    pub fn axpy(&mut self, s: f64, x: &GrassmannElement) {
        assert_eq!(self.k, x.k, "Grassmann algebras differ");
        for (a, b) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *a += s * b;
        }
    }
}

/// A homogeneous Grassmann element with declared parity.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperNumber {
    value: GrassmannElement,
    parity: Parity,
}

impl SuperNumber {
    pub fn new(value: GrassmannElement, parity: Parity) -> Result<Self> {
        let (even, odd) = value.parity_decompose();
        let stray = match parity {
            Parity::Even => odd,
            Parity::Odd => even,
        };
        if !stray.is_zero() {
            return Err(Error::MixedParity { expected: parity });
        }
        Ok(Self { value, parity })
    }

    pub fn even(value: GrassmannElement) -> Result<Self> {
        Self::new(value, Parity::Even)
    }

    pub fn odd(value: GrassmannElement) -> Result<Self> {
        Self::new(value, Parity::Odd)
    }

    pub fn real(k: usize, x: f64) -> Result<Self> {
        Self::even(GrassmannElement::scalar(k, x)?)
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn value(&self) -> &GrassmannElement {
        &self.value
    }

    pub fn into_value(self) -> GrassmannElement {
        self.value
    }

    pub fn body(&self) -> f64 {
        self.value.body()
    }

    pub fn soul(&self) -> GrassmannElement {
        self.value.soul()
    }
}

/// Algebra homomorphism Λ_k → Λ_{k'} fixed by the images of the generators
/// (each image must be odd). Models a superpoint map S' → S.
#[derive(Clone, Debug)]
pub struct GrassmannHom {
    target_k: usize,
    images: Vec<GrassmannElement>,
}

impl GrassmannHom {
    pub fn new(target_k: usize, images: Vec<GrassmannElement>) -> Result<Self> {
        for img in &images {
            if img.num_generators() != target_k {
                return Err(Error::IncompatibleAlgebras { left: img.num_generators(), right: target_k });
            }
            if img.parity() != Some(Parity::Odd) {
                return Err(Error::MixedParity { expected: Parity::Odd });
            }
        }
        Ok(Self { target_k, images })
    }

    /// Identity on the first `k` generators of Λ_k.
    pub fn identity(k: usize) -> Result<Self> {
        let images = (0..k).map(|g| GrassmannElement::generator(k, g)).collect::<Result<Vec<_>>>()?;
        Self::new(k, images)
    }

    /// Sends each generator in `sources` to generator `target`, fixes the others.
    /// With two sources this is the diagonal ℝ^{0|1} → ℝ^{0|1} × ℝ^{0|1} on functions.
    pub fn diagonal(k: usize, sources: &[usize], target: usize) -> Result<Self> {
        let images = (0..k)
            .map(|g| {
                if sources.contains(&g) {
                    GrassmannElement::generator(k, target)
                } else {
                    GrassmannElement::generator(k, g)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(k, images)
    }

    pub fn source_k(&self) -> usize {
        self.images.len()
    }

    pub fn apply(&self, a: &GrassmannElement) -> Result<GrassmannElement> {
        if a.num_generators() != self.images.len() {
            return Err(Error::IncompatibleAlgebras { left: a.num_generators(), right: self.images.len() });
        }
        let mut out = GrassmannElement::zero(self.target_k)?;
        for (m, c) in a.terms() {
            let mut term = GrassmannElement::scalar(self.target_k, c)?;
            for g in 0..self.images.len() {
                if m & (1 << g) != 0 {
                    term = &term * &self.images[g];
                }
            }
            out += &term;
        }
        Ok(out)
    }
}

/// A real function on ℝⁿ that can report exact partial derivatives at a point.
pub trait SmoothScalar {
    fn arity(&self) -> usize;

    /// Highest derivative order available; `None` means every order (polynomials).
    fn max_derivative_order(&self) -> Option<usize>;

    /// ∂^α f at `point`, `alpha` a multi-index of length `arity()`.
    fn derivative_at(&self, point: &[f64], alpha: &[usize]) -> f64;

    fn in_domain(&self, _point: &[f64]) -> bool {
        true
    }
}

/// Evaluates `f` at even super-number arguments through its Taylor expansion
/// about the body; the series terminates by nilpotency of the souls.
pub fn super_eval<F: SmoothScalar + ?Sized>(f: &F, args: &[GrassmannElement]) -> Result<GrassmannElement> {
    let n = f.arity();
    if args.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: args.len() });
    }
    let k = match args.first() {
        Some(a) => a.num_generators(),
        None => return Err(Error::InvalidInput("super_eval needs at least one argument".into())),
    };
    let mut body = Vec::with_capacity(n);
    let mut souls = Vec::with_capacity(n);
    for a in args {
        if a.num_generators() != k {
            return Err(Error::IncompatibleAlgebras { left: k, right: a.num_generators() });
        }
        let (_, odd) = a.parity_decompose();
        if !odd.is_zero() {
            return Err(Error::MixedParity { expected: Parity::Even });
        }
        body.push(a.body());
        souls.push(a.soul());
    }
    if !f.in_domain(&body) {
        return Err(Error::OutsideDomain { point: body });
    }
    let mut out = GrassmannElement::zero(k)?;
    let mut alpha = vec![0usize; n];
    out.coeffs[0] = f.derivative_at(&body, &alpha);
    if souls.iter().all(|s| s.is_zero()) {
        return Ok(out);
    }
    let one = GrassmannElement::one(k)?;
    taylor_terms(f, &body, &souls, 0, &one, 1.0, 0, &mut alpha, &mut out)?;
    Ok(out)
}

// Depth-first walk over multisets of variables in non-decreasing order; each node adds
// ∂^α f(body) · s^α / α!.
#[allow(clippy::too_many_arguments)]
fn taylor_terms<F: SmoothScalar + ?Sized>(
    f: &F,
    body: &[f64],
    souls: &[GrassmannElement],
    start: usize,
    product: &GrassmannElement,
    inv_factorial: f64,
    order: usize,
    alpha: &mut Vec<usize>,
    out: &mut GrassmannElement,
) -> Result<()> {
    for i in start..souls.len() {
        if souls[i].is_zero() {
            continue;
        }
        let next = product * &souls[i];
        if next.is_zero() {
            continue;
        }
        if let Some(max) = f.max_derivative_order() {
            if order + 1 > max {
                return Err(Error::DerivativeOrderUnavailable { needed: order + 1, available: max });
            }
        }
        alpha[i] += 1;
        let w = inv_factorial / alpha[i] as f64;
        let d = f.derivative_at(body, alpha);
        out.axpy(d * w, &next);
        taylor_terms(f, body, souls, i, &next, w, order + 1, alpha, out)?;
        alpha[i] -= 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th(k: usize, i: usize) -> GrassmannElement {
        GrassmannElement::generator(k, i).unwrap()
    }

    struct Square;
    impl SmoothScalar for Square {
        fn arity(&self) -> usize {
            1
        }
        fn max_derivative_order(&self) -> Option<usize> {
            None
        }
        fn derivative_at(&self, p: &[f64], a: &[usize]) -> f64 {
            match a[0] {
                0 => p[0] * p[0],
                1 => 2.0 * p[0],
                2 => 2.0,
                _ => 0.0,
            }
        }
    }

    struct Exp(Option<usize>);
    impl SmoothScalar for Exp {
        fn arity(&self) -> usize {
            1
        }
        fn max_derivative_order(&self) -> Option<usize> {
            self.0
        }
        fn derivative_at(&self, p: &[f64], _a: &[usize]) -> f64 {
            p[0].exp()
        }
    }

    #[test]
    fn antisymmetry_and_nilpotency() {
        let (a, b) = (th(4, 0), th(4, 1));
        let ab = &a * &b;
        let ba = &b * &a;
        assert_eq!(ab.coeff(0b11), 1.0);
        assert_eq!(ba.coeff(0b11), -1.0);
        assert!((&a * &a).is_zero());
        let one = GrassmannElement::one(4).unwrap();
        let p = &(&one + &a) * &(&one - &a);
        assert_eq!(p, one);
    }

    #[test]
    fn mismatched_algebras_are_rejected() {
        let a = th(2, 0);
        let b = th(3, 0);
        assert!(matches!(gr_mul(&a, &b), Err(Error::IncompatibleAlgebras { .. })));
        assert!(GrassmannElement::zero(9).is_err());
    }

    #[test]
    fn parity_split() {
        let k = 3;
        let x = GrassmannElement::from_terms(k, &[(vec![], 1.0), (vec![0], 1.0), (vec![0, 1], 1.0)]).unwrap();
        let (e, o) = x.parity_decompose();
        assert_eq!(e, GrassmannElement::from_terms(k, &[(vec![], 1.0), (vec![0, 1], 1.0)]).unwrap());
        assert_eq!(o, th(k, 0));
        let z = GrassmannElement::zero(k).unwrap();
        let (e, o) = z.parity_decompose();
        assert!(e.is_zero() && o.is_zero());
        let top = GrassmannElement::from_terms(k, &[(vec![0, 1, 2], 1.0)]).unwrap();
        let (e, o) = top.parity_decompose();
        assert!(e.is_zero());
        assert_eq!(o, top);
    }

    #[test]
    fn from_terms_applies_reordering_sign() {
        let x = GrassmannElement::from_terms(3, &[(vec![1, 0], 2.0)]).unwrap();
        assert_eq!(x.coeff(0b11), -2.0);
    }

    #[test]
    fn split_left_recovers_coefficient() {
        let k = 3;
        // x = θ2θ3 + θ1θ3 ; θ1-coefficient from the left is θ3
        let x = GrassmannElement::from_terms(k, &[(vec![1, 2], 1.0), (vec![0, 2], 1.0)]).unwrap();
        let (a, b) = x.split_left(0);
        let rebuilt = &a + &(&th(k, 0) * &b);
        assert_eq!(rebuilt, x);
        assert_eq!(b, th(k, 2));
        // generator not in lowest position
        let (a2, b2) = x.split_left(2);
        assert_eq!(&a2 + &(&th(k, 2) * &b2), x);
    }

    #[test]
    fn super_eval_square_and_exp() {
        let k = 4;
        let nil = &th(k, 0) * &th(k, 1);
        let x = &GrassmannElement::one(k).unwrap() + &nil;
        let y = super_eval(&Square, &[x]).unwrap();
        let expect = &GrassmannElement::one(k).unwrap() + &nil.scale(2.0);
        assert!(y.max_abs_diff(&expect) < 1e-15);

        let z = super_eval(&Exp(None), std::slice::from_ref(&nil)).unwrap();
        let expect = &GrassmannElement::one(k).unwrap() + &nil;
        assert!(z.max_abs_diff(&expect) < 1e-15);

        // classical evaluation when the soul vanishes, even with no derivatives available
        let c = super_eval(&Exp(Some(0)), &[GrassmannElement::scalar(k, 0.5).unwrap()]).unwrap();
        assert_eq!(c.body(), 0.5f64.exp());
        assert!(c.soul().is_zero());
    }

    #[test]
    fn super_eval_reports_missing_derivatives_and_odd_args() {
        let k = 4;
        let nil = &th(k, 0) * &th(k, 1);
        let err = super_eval(&Exp(Some(0)), std::slice::from_ref(&nil)).unwrap_err();
        assert!(matches!(err, Error::DerivativeOrderUnavailable { needed: 1, available: 0 }));
        let err = super_eval(&Square, &[th(k, 0)]).unwrap_err();
        assert!(matches!(err, Error::MixedParity { .. }));
    }

    #[test]
    fn supernumber_rejects_mixed() {
        let k = 2;
        let mixed = &GrassmannElement::one(k).unwrap() + &th(k, 0);
        assert!(SuperNumber::even(mixed.clone()).is_err());
        assert!(SuperNumber::odd(mixed).is_err());
        let s = SuperNumber::odd(th(k, 1)).unwrap();
        assert_eq!(s.body(), 0.0);
    }

    #[test]
    fn diagonal_hom_kills_products() {
        let k = 3;
        let d = GrassmannHom::diagonal(k, &[0, 1], 0).unwrap();
        let x = &th(k, 0) * &th(k, 1);
        assert!(d.apply(&x).unwrap().is_zero());
        let y = &th(k, 0) + &th(k, 1);
        assert_eq!(d.apply(&y).unwrap(), th(k, 0).scale(2.0));
    }
}
