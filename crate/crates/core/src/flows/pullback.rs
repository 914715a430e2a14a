use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::manifold_forms::{DifferentialForm, FnOracle, ScalarField, VectorField};
use crate::ode::{integrate, OdeConfig};

/// Flow of Z together with its Jacobian: (α_t(x), Dα_t(x)).
pub fn flow_with_jacobian(z: &VectorField, t: f64, x: &[f64], cfg: &OdeConfig) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = z.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.len() });
    }
    let mut j0 = vec![vec![0.0; n]; n];
    for (i, row) in j0.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let rhs = |_t: f64, (p, j): &(Vec<f64>, Vec<Vec<f64>>)| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let dz = z.jacobian(p)?;
        let dp = z.eval(p);
        let dj = (0..n).map(|r| (0..n).map(|c| (0..n).map(|k| dz[r][k] * j[k][c]).sum()).collect()).collect();
        Ok((dp, dj))
    };
    integrate(&rhs, 0.0, t, &(x.to_vec(), j0), cfg)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub(crate) fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap_or(c);
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

fn indices(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

/// Coefficients of (α_t)*ω at the point x, keyed by index mask.
pub fn pullback_coefficients_at(z: &VectorField, t: f64, w: &DifferentialForm, x: &[f64], cfg: &OdeConfig) -> Result<BTreeMap<u32, f64>> {
    let n = z.dim();
    crate::manifold_forms::form::check_dims(n, w.dim())?;
    let (p, j) = flow_with_jacobian(z, t, x, cfg)?;
    let mut out = BTreeMap::new();
    for (mask, a) in w.terms() {
        let value = a.eval(&p);
        if value == 0.0 {
            continue;
        }
        let rows = indices(mask, n);
        let degree = rows.len();
        for k in 0u32..(1 << n) {
            if k.count_ones() as usize != degree {
                continue;
            }
            let cols = indices(k, n);
            let minor = rows.iter().map(|&r| cols.iter().map(|&c| j[r][c]).collect()).collect();
            *out.entry(k).or_insert(0.0) += value * det(minor);
        }
    }
    Ok(out)
}

/// (α_t)*ω for the flow α of Z. The coefficients are evaluation-only fields that
/// integrate the flow and its Jacobian at each requested point.
pub fn pullback_along_even_flow(z: &VectorField, t: f64, w: &DifferentialForm, cfg: &OdeConfig) -> Result<DifferentialForm> {
    let n = z.dim();
    crate::manifold_forms::form::check_dims(n, w.dim())?;
    if t == 0.0 || w.is_zero() {
        return Ok(w.clone());
    }
    let degrees = w.degrees();
    let mut terms = Vec::new();
    for k in 0u32..(1 << n) {
        if !degrees.contains(&(k.count_ones() as usize)) {
            continue;
        }
        let (z, w, cfg) = (z.clone(), w.clone(), *cfg);
        let oracle = FnOracle::new(format!("flow pullback coefficient {k:#b}"), n, 0, move |x, _alpha| {
            pullback_coefficients_at(&z, t, &w, x, &cfg).map(|c| c.get(&k).copied().unwrap_or(0.0)).unwrap_or(f64::NAN)
        });
        terms.push((k, ScalarField::oracle(oracle)));
    }
    DifferentialForm::from_terms(n, terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_shifts_coefficients() {
        let n = 1;
        let w = DifferentialForm::basis(n, &[0], ScalarField::var(n, 0)).unwrap();
        let t = 0.3;
        let r = pullback_along_even_flow(&VectorField::coordinate(n, 0), t, &w, &OdeConfig::default()).unwrap();
        for x in [-1.0, 0.0, 2.5] {
            assert!((r.coefficient(1).unwrap().eval(&[x]) - (x + t)).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_preserves_area() {
        let z = VectorField::new(vec![ScalarField::var(2, 1).scale(-1.0), ScalarField::var(2, 0)]).unwrap();
        let area = DifferentialForm::basis(2, &[0, 1], ScalarField::constant(2, 1.0)).unwrap();
        let c = pullback_coefficients_at(&z, 1.3, &area, &[0.4, -0.2], &OdeConfig::default()).unwrap();
        assert!((c[&0b11] - 1.0).abs() < 1e-8);
    }
}
