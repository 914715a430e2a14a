use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grassmann::{super_eval, GrassmannElement, SmoothScalar};

use super::polynomial::Polynomial;

type DerivFn = dyn Fn(&[f64], &[usize]) -> f64 + Send + Sync;
type DomainFn = dyn Fn(&[f64]) -> bool + Send + Sync;

/// A function given by an evaluator that returns ∂^α f up to a declared order.
#[derive(Clone)]
pub struct FnOracle {
    dim: usize,
    max_order: usize,
    deriv: Arc<DerivFn>,
    domain: Option<Arc<DomainFn>>,
    label: String,
}

impl FnOracle {
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        max_order: usize,
        deriv: impl Fn(&[f64], &[usize]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { dim, max_order, deriv: Arc::new(deriv), domain: None, label: label.into() }
    }

    pub fn with_domain(mut self, domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Some(Arc::new(domain));
        self
    }
}

impl SmoothScalar for FnOracle {
    fn arity(&self) -> usize {
        self.dim
    }
    fn max_derivative_order(&self) -> Option<usize> {
        Some(self.max_order)
    }
    fn derivative_at(&self, point: &[f64], alpha: &[usize]) -> f64 {
        (self.deriv)(point, alpha)
    }
    fn in_domain(&self, point: &[f64]) -> bool {
        self.domain.as_ref().is_none_or(|d| d(point))
    }
}

/// Arithmetic on non-polynomial fields is kept as an expression tree whose derivatives
/// follow the sum and (multi-index) Leibniz rules.
#[derive(Clone)]
enum Expr {
    Leaf(FnOracle),
    Sum(Vec<ScalarField>),
    Product(Box<ScalarField>, Box<ScalarField>),
    Partial(Box<ScalarField>, usize),
}

/// A smooth real function on ℝⁿ: an exact polynomial or a derivative oracle.
#[derive(Clone)]
pub enum ScalarField {
    Poly(Polynomial),
    Oracle(Arc<OracleField>),
}

/// Opaque (non-polynomial) scalar field.
pub struct OracleField {
    dim: usize,
    max_order: usize,
    expr: Expr,
}

impl OracleField {
    fn deriv(&self, x: &[f64], alpha: &[usize]) -> f64 {
        match &self.expr {
            Expr::Leaf(o) => o.derivative_at(x, alpha),
            Expr::Sum(parts) => parts.iter().map(|p| p.derivative_at(x, alpha)).sum(),
            Expr::Partial(inner, i) => {
                let mut a = alpha.to_vec();
                a[*i] += 1;
                inner.derivative_at(x, &a)
            }
            Expr::Product(f, g) => leibniz(f, g, x, alpha),
        }
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        match &self.expr {
            Expr::Leaf(o) => o.in_domain(x),
            Expr::Sum(parts) => parts.iter().all(|p| p.in_domain(x)),
            Expr::Partial(inner, _) => inner.in_domain(x),
            Expr::Product(f, g) => f.in_domain(x) && g.in_domain(x),
        }
    }
}

// ∂^α(fg) = Σ_{β ≤ α} C(α, β) ∂^β f ∂^{α−β} g
fn leibniz(f: &ScalarField, g: &ScalarField, x: &[f64], alpha: &[usize]) -> f64 {
    let n = alpha.len();
    let mut beta = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let mut binom = 1.0;
        let mut rest = vec![0usize; n];
        for i in 0..n {
            binom *= binomial(alpha[i], beta[i]);
            rest[i] = alpha[i] - beta[i];
        }
        total += binom * f.derivative_at(x, &beta) * g.derivative_at(x, &rest);
        // next β in the box 0 ≤ β ≤ α
        let mut i = 0;
        loop {
            if i == n {
                return total;
            }
            if beta[i] < alpha[i] {
                beta[i] += 1;
                break;
            }
            beta[i] = 0;
            i += 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

impl ScalarField {
    pub fn zero(dim: usize) -> Self {
        ScalarField::Poly(Polynomial::zero(dim))
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        ScalarField::Poly(Polynomial::constant(dim, c))
    }

    pub fn var(dim: usize, i: usize) -> Self {
        ScalarField::Poly(Polynomial::var(dim, i))
    }

    pub fn oracle(oracle: FnOracle) -> Self {
        let (dim, max_order) = (oracle.dim, oracle.max_order);
        ScalarField::Oracle(Arc::new(OracleField { dim, max_order, expr: Expr::Leaf(oracle) }))
    }

    pub fn dim(&self) -> usize {
        match self {
            ScalarField::Poly(p) => p.dim(),
            ScalarField::Oracle(o) => o.dim,
        }
    }

    pub fn as_poly(&self) -> Option<&Polynomial> {
        match self {
            ScalarField::Poly(p) => Some(p),
            ScalarField::Oracle(_) => None,
        }
    }

    pub fn is_poly(&self) -> bool {
        matches!(self, ScalarField::Poly(_))
    }

    /// Exactly zero; always false for oracle fields.
    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarField::Poly(p) if p.is_zero())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Poly(p) => p.eval(x),
            ScalarField::Oracle(o) => o.deriv(x, &vec![0; o.dim]),
        }
    }

    pub fn super_eval(&self, args: &[GrassmannElement]) -> Result<GrassmannElement> {
        super_eval(self, args)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    fn wrap(dim: usize, max_order: usize, expr: Expr) -> Self {
        ScalarField::Oracle(Arc::new(OracleField { dim, max_order, expr }))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(match (self, other) {
            (ScalarField::Poly(a), ScalarField::Poly(b)) => ScalarField::Poly(a.add(b)),
            _ if self.is_zero() => other.clone(),
            _ if other.is_zero() => self.clone(),
            _ => {
                let order = self.order().min(other.order());
                Self::wrap(self.dim(), order, Expr::Sum(vec![self.clone(), other.clone()]))
            }
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        match self {
            ScalarField::Poly(p) => ScalarField::Poly(p.scale(s)),
            _ if s == 0.0 => ScalarField::zero(self.dim()),
            _ => {
                let c = ScalarField::constant(self.dim(), s);
                Self::wrap(self.dim(), self.order(), Expr::Product(Box::new(c), Box::new(self.clone())))
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(match (self, other) {
            (ScalarField::Poly(a), ScalarField::Poly(b)) => ScalarField::Poly(a.mul(b)),
            _ if self.is_zero() || other.is_zero() => ScalarField::zero(self.dim()),
            _ => {
                let order = self.order().min(other.order());
                Self::wrap(self.dim(), order, Expr::Product(Box::new(self.clone()), Box::new(other.clone())))
            }
        })
    }

    /// ∂f/∂xᵢ; fails for an oracle that has no first derivative.
    pub fn partial(&self, i: usize) -> Result<Self> {
        if i >= self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: i + 1 });
        }
        match self {
            ScalarField::Poly(p) => Ok(ScalarField::Poly(p.partial(i))),
            ScalarField::Oracle(o) => {
                if o.max_order == 0 {
                    return Err(Error::DerivativeOrderUnavailable { needed: 1, available: 0 });
                }
                Ok(Self::wrap(o.dim, o.max_order - 1, Expr::Partial(Box::new(self.clone()), i)))
            }
        }
    }

    fn order(&self) -> usize {
        match self {
            ScalarField::Poly(_) => usize::MAX,
            ScalarField::Oracle(o) => o.max_order,
        }
    }

    /// Largest deviation between the oracle's first derivatives and central differences
    /// with step `h` over the probes (O(h²) for a consistent oracle).
    pub fn oracle_consistency(&self, probes: &[Vec<f64>], h: f64) -> Result<f64> {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for x in probes {
            for i in 0..n {
                let mut alpha = vec![0; n];
                alpha[i] = 1;
                if self.order() == 0 {
                    return Err(Error::DerivativeOrderUnavailable { needed: 1, available: 0 });
                }
                let exact = self.derivative_at(x, &alpha);
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += h;
                xm[i] -= h;
                let fd = (self.eval(&xp) - self.eval(&xm)) / (2.0 * h);
                worst = worst.max((exact - fd).abs());
            }
        }
        Ok(worst)
    }
}

impl SmoothScalar for ScalarField {
    fn arity(&self) -> usize {
        self.dim()
    }

    fn max_derivative_order(&self) -> Option<usize> {
        match self {
            ScalarField::Poly(_) => None,
            ScalarField::Oracle(o) => Some(o.max_order),
        }
    }

    fn derivative_at(&self, x: &[f64], alpha: &[usize]) -> f64 {
        match self {
            ScalarField::Poly(p) => p.derivative_at(x, alpha),
            ScalarField::Oracle(o) => o.deriv(x, alpha),
        }
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        match self {
            ScalarField::Poly(_) => true,
            ScalarField::Oracle(o) => o.in_domain(x),
        }
    }
}

impl From<Polynomial> for ScalarField {
    fn from(p: Polynomial) -> Self {
        ScalarField::Poly(p)
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Poly(p) => write!(f, "{p:?}"),
            ScalarField::Oracle(o) => match &o.expr {
                Expr::Leaf(l) => write!(f, "<{}>", l.label),
                _ => write!(f, "<oracle expression>"),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_field() -> ScalarField {
        ScalarField::oracle(FnOracle::new("exp(x0)", 1, 8, |x, _| x[0].exp()))
    }

    #[test]
    fn oracle_products_follow_leibniz() {
        let x = ScalarField::var(1, 0);
        let f = x.mul(&exp_field()).unwrap(); // x eˣ
        let d = f.partial(0).unwrap(); // (1 + x) eˣ
        let at = 0.3;
        assert!((d.eval(&[at]) - (1.0 + at) * at.exp()).abs() < 1e-14);
        let dd = f.derivative_at(&[at], &[2]); // (2 + x) eˣ
        assert!((dd - (2.0 + at) * at.exp()).abs() < 1e-14);
    }

    #[test]
    fn oracle_consistent_with_finite_differences() {
        let f = exp_field().mul(&ScalarField::var(1, 0)).unwrap();
        let probes = vec![vec![-0.5], vec![0.0], vec![0.7]];
        let r1 = f.oracle_consistency(&probes, 1e-3).unwrap();
        let r2 = f.oracle_consistency(&probes, 5e-4).unwrap();
        assert!(r1 < 1e-5);
        // second order: halving h quarters the error
        assert!(r2 < r1 / 3.0);
    }

    #[test]
    fn zero_order_oracle_cannot_be_differentiated() {
        let f = ScalarField::oracle(FnOracle::new("g", 2, 0, |x, _| x[0] + x[1]));
        assert!(matches!(f.partial(0), Err(Error::DerivativeOrderUnavailable { .. })));
    }

    #[test]
    fn domain_is_enforced_by_super_eval() {
        let log = ScalarField::oracle(
            FnOracle::new("ln", 1, 4, |x, a| match a[0] {
                0 => x[0].ln(),
                n => {
                    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                    sign * (1..n).product::<usize>() as f64 / x[0].powi(n as i32)
                }
            })
            .with_domain(|x| x[0] > 0.0),
        );
        let bad = GrassmannElement::scalar(2, -1.0).unwrap();
        assert!(matches!(log.super_eval(&[bad]), Err(Error::OutsideDomain { .. })));
    }
}
