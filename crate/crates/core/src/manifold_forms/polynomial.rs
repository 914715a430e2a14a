use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::grassmann::SmoothScalar;

/// Multivariate polynomial on ℝⁿ with real coefficients, keyed by exponent vectors.
/// Terms with a zero coefficient are never stored.
#[derive(Clone, PartialEq, Default)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// The coordinate function xᵢ.
    pub fn var(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        let mut p = Self::zero(dim);
        p.add_term(e, 1.0);
        p
    }

    pub fn monomial(exp: Vec<u32>, c: f64) -> Self {
        let mut p = Self::zero(exp.len());
        p.add_term(exp, c);
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (e, c) in terms {
            if e.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: e.len() });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, exp: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(exp) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero(self.dim);
        }
        Self { dim: self.dim, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c * e[i] as f64);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&p, &xi)| xi.powi(p as i32)).product::<f64>())
            .sum()
    }

    /// Composition p(q₁, …, qₙ) with polynomials of a (possibly different) dimension.
    pub fn compose(&self, args: &[Polynomial]) -> Result<Polynomial> {
        if args.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: args.len() });
        }
        let target = args.first().map(|a| a.dim).unwrap_or(0);
        let mut out = Polynomial::zero(target);
        for (e, c) in &self.terms {
            let mut term = Polynomial::constant(target, *c);
            for (arg, &p) in args.iter().zip(e) {
                for _ in 0..p {
                    term = term.mul(arg);
                }
            }
            out = out.add(&term);
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs_coeff()
    }
}

impl SmoothScalar for Polynomial {
    fn arity(&self) -> usize {
        self.dim
    }

    fn max_derivative_order(&self) -> Option<usize> {
        None
    }

    fn derivative_at(&self, x: &[f64], alpha: &[usize]) -> f64 {
        let mut total = 0.0;
        'terms: for (e, c) in &self.terms {
            let mut v = *c;
            for i in 0..self.dim {
                let p = e[i] as usize;
                let a = alpha[i];
                if a > p {
                    continue 'terms;
                }
                for j in 0..a {
                    v *= (p - j) as f64;
                }
                v *= x[i].powi((p - a) as i32);
            }
            total += v;
        }
        total
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mons: String = e
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0)
                    .map(|(i, p)| if *p == 1 { format!("x{i}") } else { format!("x{i}^{p}") })
                    .collect();
                format!("{c}{mons}")
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_derivatives() {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let p = x.mul(&x).mul(&y); // x²y
        assert_eq!(p.partial(0), x.mul(&y).scale(2.0));
        assert_eq!(p.partial(1), x.mul(&x));
        assert_eq!(p.eval(&[2.0, 3.0]), 12.0);
        assert_eq!(p.derivative_at(&[2.0, 3.0], &[1, 1]), 4.0);
        assert_eq!(p.derivative_at(&[2.0, 3.0], &[0, 2]), 0.0);
        assert!(p.sub(&p).is_zero());
    }

    #[test]
    fn composition() {
        let x = Polynomial::var(1, 0);
        let p = x.mul(&x).add(&Polynomial::constant(1, 1.0)); // x² + 1
        let q = x.add(&Polynomial::constant(1, 2.0)); // x + 2
        let r = p.compose(&[q]).unwrap();
        assert_eq!(r.eval(&[0.5]), 2.5f64.powi(2) + 1.0);
    }
}
