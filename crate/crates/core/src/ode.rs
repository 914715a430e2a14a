//! Classical RK4 with step doubling, over any vector-like state.

use crate::error::{Error, Result};
use crate::grassmann::GrassmannElement;

/// State of an ODE: a finite-dimensional real vector space with a sup-norm distance.
pub trait OdeState: Clone {
    /// self += s·x
    fn axpy(&mut self, s: f64, x: &Self);
    fn max_abs_diff(&self, other: &Self) -> f64;
    fn max_abs(&self) -> f64;
}

impl OdeState for f64 {
    fn axpy(&mut self, s: f64, x: &Self) {
        *self += s * x;
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
}

impl OdeState for GrassmannElement {
    fn axpy(&mut self, s: f64, x: &Self) {
        GrassmannElement::axpy(self, s, x);
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        GrassmannElement::max_abs_diff(self, other)
    }
    fn max_abs(&self) -> f64 {
        self.norm()
    }
}

impl<T: OdeState> OdeState for Vec<T> {
    fn axpy(&mut self, s: f64, x: &Self) {
        for (a, b) in self.iter_mut().zip(x) {
            a.axpy(s, b);
        }
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.iter().zip(other).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }
    fn max_abs(&self) -> f64 {
        self.iter().map(OdeState::max_abs).fold(0.0, f64::max)
    }
}

impl<A: OdeState, B: OdeState> OdeState for (A, B) {
    fn axpy(&mut self, s: f64, x: &Self) {
        self.0.axpy(s, &x.0);
        self.1.axpy(s, &x.1);
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.max_abs_diff(&other.0).max(self.1.max_abs_diff(&other.1))
    }
    fn max_abs(&self) -> f64 {
        self.0.max_abs().max(self.1.max_abs())
    }
}

/// Integration controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeConfig {
    /// Accepted difference between N and 2N steps, per unit time.
    pub tol: f64,
    pub initial_steps: usize,
    pub max_doublings: u32,
    /// States larger than this count as blow-up.
    pub blowup: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self { tol: 1e-10, initial_steps: 8, max_doublings: 16, blowup: 1e12 }
    }
}

impl OdeConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// N fixed RK4 steps from t0 to t1. On failure returns the last time with a finite state.
pub fn rk4_fixed<S, F>(f: &F, t0: f64, t1: f64, y0: &S, steps: usize, blowup: f64) -> Result<S>
where
    S: OdeState,
    F: Fn(f64, &S) -> Result<S>,
{
    let h = (t1 - t0) / steps as f64;
    let mut y = y0.clone();
    for j in 0..steps {
        let t = t0 + j as f64 * h;
        let fail = || Error::Divergence { last_valid_t: t };
        let k1 = f(t, &y).map_err(|e| diverged(e, t))?;
        let mut y2 = y.clone();
        y2.axpy(0.5 * h, &k1);
        let k2 = f(t + 0.5 * h, &y2).map_err(|e| diverged(e, t))?;
        let mut y3 = y.clone();
        y3.axpy(0.5 * h, &k2);
        let k3 = f(t + 0.5 * h, &y3).map_err(|e| diverged(e, t))?;
        let mut y4 = y.clone();
        y4.axpy(h, &k3);
        let k4 = f(t + h, &y4).map_err(|e| diverged(e, t))?;
        y.axpy(h / 6.0, &k1);
        y.axpy(h / 3.0, &k2);
        y.axpy(h / 3.0, &k3);
        y.axpy(h / 6.0, &k4);
        let size = y.max_abs();
        if !size.is_finite() || size > blowup {
            return Err(fail());
        }
    }
    Ok(y)
}

// Errors raised by the right-hand side other than domain problems become divergence.
fn diverged(e: Error, t: f64) -> Error {
    match e {
        Error::OutsideDomain { .. } | Error::Divergence { .. } => Error::Divergence { last_valid_t: t },
        other => other,
    }
}

/// RK4 from t0 to t1, doubling the step count until two successive answers agree to
/// `tol·max(1, |t1 − t0|)`; returns the Richardson-corrected value.
pub fn integrate<S, F>(f: &F, t0: f64, t1: f64, y0: &S, cfg: &OdeConfig) -> Result<S>
where
    S: OdeState,
    F: Fn(f64, &S) -> Result<S>,
{
    if t0 == t1 {
        return Ok(y0.clone());
    }
    let target = cfg.tol * (t1 - t0).abs().max(1.0);
    let mut steps = cfg.initial_steps.max(1);
    let mut previous: Option<S> = None;
    let mut failure = None;
    for _ in 0..=cfg.max_doublings {
        match rk4_fixed(f, t0, t1, y0, steps, cfg.blowup) {
            Ok(fine) => {
                if let Some(coarse) = previous.take() {
                    if fine.max_abs_diff(&coarse) <= target {
                        let mut corrected = fine.clone();
                        let mut delta = fine;
                        delta.axpy(-1.0, &coarse);
                        corrected.axpy(1.0 / 15.0, &delta);
                        return Ok(corrected);
                    }
                }
                previous = Some(fine);
            }
            // A finer grid may still get through, or locate the blow-up more precisely.
            Err(Error::Divergence { last_valid_t }) => {
                failure = Some(last_valid_t);
                previous = None;
            }
            Err(e) => return Err(e),
        }
        steps *= 2;
    }
    Err(Error::Divergence { last_valid_t: failure.unwrap_or(t0) })
}

/// Values at each of the (monotone) `times`, integrating piecewise from `times[0]`.
pub fn integrate_samples<S, F>(f: &F, times: &[f64], y0: &S, cfg: &OdeConfig) -> Result<Vec<S>>
where
    S: OdeState,
    F: Fn(f64, &S) -> Result<S>,
{
    let mut out = Vec::with_capacity(times.len());
    let Some(&first) = times.first() else {
        return Ok(out);
    };
    let mut y = y0.clone();
    let mut t = first;
    out.push(y.clone());
    for &tn in &times[1..] {
        y = integrate(f, t, tn, &y, cfg).map_err(|e| match e {
            Error::Divergence { last_valid_t } => Error::Divergence { last_valid_t: last_valid_t.max(t) },
            other => other,
        })?;
        t = tn;
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y = integrate(&|_t, y: &f64| Ok(*y), 0.0, 1.0, &1.0, &OdeConfig::default()).unwrap();
        assert!((y - 1f64.exp()).abs() < 1e-10);
        let back = integrate(&|_t, y: &f64| Ok(*y), 1.0, 0.0, &y, &OdeConfig::default()).unwrap();
        assert!((back - 1.0).abs() < 1e-10);
    }

    #[test]
    fn blow_up_reports_last_time() {
        // ẏ = y², y(0) = 1 explodes at t = 1
        let e = integrate(&|_t, y: &f64| Ok(y * y), 0.0, 2.0, &1.0, &OdeConfig::default()).unwrap_err();
        match e {
            Error::Divergence { last_valid_t } => assert!((last_valid_t - 1.0).abs() < 0.05, "{last_valid_t}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grassmann_state() {
        // ẏ = (1 + θ)y: y(t) = e^t (1 + tθ)
        let k = 1;
        let a = GrassmannElement::from_terms(k, &[(vec![], 1.0), (vec![0], 1.0)]).unwrap();
        let y0 = GrassmannElement::one(k).unwrap();
        let y = integrate(&|_t, y: &GrassmannElement| Ok(&a * y), 0.0, 1.0, &y0, &OdeConfig::default()).unwrap();
        assert!((y.coeff(0) - 1f64.exp()).abs() < 1e-10);
        assert!((y.coeff(1) - 1f64.exp()).abs() < 1e-10);
    }
}
