use crate::error::{Error, Result};
use crate::grassmann::Parity;
use crate::manifold_forms::maps::SuperFunction11;
use crate::manifold_forms::{graded_bracket, DifferentialForm, PiTDerivation, VectorField};
use crate::ode::OdeConfig;

use super::odd::ThetaForm;
use super::pullback::pullback_along_even_flow;

/// Terms tried before a power series of X² is declared non-terminating.
const SERIES_LIMIT: usize = 64;

/// How e^{−tX²} is evaluated.
#[derive(Clone, Debug)]
pub enum SuperFlowRegime {
    /// X² is locally nilpotent on polynomial forms; the exponential series terminates.
    Nilpotent,
    /// X² = 𝓛_Z; e^{−tX²} is the pullback along the flow of Z at time −t.
    LieDerivative(VectorField),
}

/// The ℝ^{1|1}-action generated by an odd derivation X:
/// α*(t, θ)ω = e^{−tX²}(1 + θX)ω.
#[derive(Clone, Debug)]
pub struct SuperFlow {
    generator: PiTDerivation,
    square: PiTDerivation,
    regime: SuperFlowRegime,
    cfg: OdeConfig,
}

/// Z with X² = 𝓛_Z, when the normal form of X² has that shape.
fn as_lie_derivative(sq: &PiTDerivation) -> Result<Option<VectorField>> {
    if sq.lie_coefficients().iter().any(|a| !a.is_function()) {
        return Ok(None);
    }
    let comps: Vec<_> = sq.lie_coefficients().iter().map(DifferentialForm::degree_zero_part).collect();
    let z = VectorField::new(comps)?;
    let lie = PiTDerivation::lie(&z)?;
    for (b, want) in sq.contraction_coefficients().iter().zip(lie.contraction_coefficients()) {
        if b.max_abs_diff(want)? > 0.0 {
            return Ok(None);
        }
    }
    Ok(Some(z))
}

/// Applies Σ_m (−t)^m/m! Pᵐ ω, failing when the series has not terminated.
fn exp_series(p: &PiTDerivation, t: f64, w: &DifferentialForm) -> Result<Option<DifferentialForm>> {
    let mut out = w.clone();
    let mut term = w.clone();
    for m in 1..=SERIES_LIMIT {
        term = p.apply(&term)?.scale(-t / m as f64);
        if term.is_zero() {
            return Ok(Some(out));
        }
        out = out.add(&term)?;
    }
    Ok(None)
}

fn terminates(p: &PiTDerivation, w: &DifferentialForm) -> Result<bool> {
    let mut term = w.clone();
    for _ in 0..SERIES_LIMIT {
        term = p.apply(&term)?;
        if term.is_zero() {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn super_flow(x: &PiTDerivation) -> Result<SuperFlow> {
    super_flow_with(x, OdeConfig::default())
}

pub fn super_flow_with(x: &PiTDerivation, cfg: OdeConfig) -> Result<SuperFlow> {
    if x.parity() != Parity::Odd {
        return Err(Error::MixedParity { expected: Parity::Odd });
    }
    // X² = ½[X, X]
    let square = graded_bracket(x, x)?.scale(0.5);
    let regime = if let Some(z) = as_lie_derivative(&square)? {
        if square.is_zero() {
            SuperFlowRegime::Nilpotent
        } else {
            SuperFlowRegime::LieDerivative(z)
        }
    } else {
        let probes = crate::manifold_forms::derivation::leibniz_probes(x.dim());
        for w in &probes {
            if !w.is_polynomial() || !terminates(&square, w)? {
                return Err(Error::UnsupportedGenerator(format!(
                    "X² = {square:?} is neither 𝓛_Z nor nilpotent on polynomial forms"
                )));
            }
        }
        SuperFlowRegime::Nilpotent
    };
    Ok(SuperFlow { generator: x.clone(), square, regime, cfg })
}

impl SuperFlow {
    pub fn generator(&self) -> &PiTDerivation {
        &self.generator
    }

    /// X² as an even derivation.
    pub fn square(&self) -> &PiTDerivation {
        &self.square
    }

    pub fn regime(&self) -> &SuperFlowRegime {
        &self.regime
    }

    /// e^{−tX²}ω
    pub fn even_part(&self, t: f64, w: &DifferentialForm) -> Result<DifferentialForm> {
        if t == 0.0 {
            return Ok(w.clone());
        }
        if w.is_polynomial() {
            if let Some(r) = exp_series(&self.square, t, w)? {
                return Ok(r);
            }
        }
        match &self.regime {
            SuperFlowRegime::LieDerivative(z) => pullback_along_even_flow(z, -t, w, &self.cfg),
            SuperFlowRegime::Nilpotent => Err(Error::UnsupportedGenerator(format!("exponential series of X² does not terminate on {w:?}"))),
        }
    }

    /// α*(t, θ)ω = e^{−tX²}ω + θ e^{−tX²}Xω
    pub fn pullback(&self, t: f64, w: &DifferentialForm) -> Result<ThetaForm> {
        let a = self.even_part(t, w)?;
        let b = self.even_part(t, &self.generator.apply(w)?)?;
        ThetaForm::from_form(1, a)?.add(&ThetaForm::monomial(1, 1, b)?)
    }

    /// Residual of (∂_θ − θ∂_t)α*ω = α*(Xω) at time t, using a central difference of
    /// step h in t and comparing coefficients at the sample points.
    pub fn d_flow_residual(&self, t: f64, w: &DifferentialForm, h: f64, points: &[Vec<f64>]) -> Result<f64> {
        let lhs_free = self.pullback(t, w)?.component(1);
        let dt = self.pullback(t + h, w)?.component(0).sub(&self.pullback(t - h, w)?.component(0))?.scale(0.5 / h);
        let rhs = self.pullback(t, &self.generator.apply(w)?)?;
        let r0 = lhs_free.max_abs_diff_at(&rhs.component(0), points)?;
        let r1 = dt.scale(-1.0).max_abs_diff_at(&rhs.component(1), points)?;
        Ok(r0.max(r1))
    }
}

/// The family φ(t, θ) = (λt, μθ) of ℝ^{1|1}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFamily {
    pub lambda: f64,
    pub mu: f64,
}

impl ScalingFamily {
    /// The family that turns the flow of X into the flow of cX.
    pub fn for_constant(c: f64) -> Self {
        Self { lambda: c * c, mu: c }
    }

    /// φ*F for F(t, θ) = F₀(t) + θF₁(t) given by polynomial coefficients.
    pub fn pullback(&self, f: &SuperFunction11) -> Result<SuperFunction11> {
        let rescale = |p: &[crate::grassmann::GrassmannElement], extra: f64| {
            p.iter().enumerate().map(|(j, c)| c.scale(extra * self.lambda.powi(j as i32))).collect::<Vec<_>>()
        };
        SuperFunction11::new(rescale(f.theta_free(), 1.0), rescale(f.theta_part(), self.mu))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OddReparamReport {
    /// How far D∘φ* is from g·φ*∘D for the best multiplier g.
    pub distribution_residual: f64,
    /// max |α*(φ(t, θ))ω − β*(t, θ)ω| for β the flow of cX.
    pub flow_residual: f64,
    /// Description of the probe where the distribution condition fails.
    pub offending_probe: Option<String>,
}

/// Checks that precomposing the flow of X with φ gives the flow of cX (c > 0 constant),
/// and that φ preserves the distribution spanned by D = ∂_θ + θ∂_t.
pub fn verify_odd_reparam_lemma(
    c: f64,
    x: &PiTDerivation,
    phi: ScalingFamily,
    forms: &[DifferentialForm],
    times: &[f64],
    points: &[Vec<f64>],
) -> Result<OddReparamReport> {
    if c <= 0.0 || !c.is_finite() {
        return Err(Error::NonPositive { point: vec![], value: c });
    }
    // Distribution: with F = tʲ (even) and F = θtʲ, D∘φ* = g·φ*∘D forces g = μ on the θ
    // line and λ = gμ on the t line.
    let g = phi.mu;
    let mut distribution_residual: f64 = 0.0;
    let mut offending_probe = None;
    let one = crate::grassmann::GrassmannElement::one(0)?;
    let zero = crate::grassmann::GrassmannElement::zero(0)?;
    for j in 0..4usize {
        let mut mono = vec![zero.clone(); j + 1];
        mono[j] = one.clone();
        for (name, f) in [
            (format!("F = t^{j}"), SuperFunction11::new(mono.clone(), vec![])?),
            (format!("F = θ t^{j}"), SuperFunction11::new(vec![], mono.clone())?),
        ] {
            let lhs = phi.pullback(&f)?.d();
            let rhs = phi.pullback(&f.d())?;
            for &t in times {
                let (l0, l1) = lhs.eval(t);
                let (r0, r1) = rhs.eval(t);
                let r = (l0.body() - g * r0.body()).abs().max((l1.body() - g * r1.body()).abs());
                if r > distribution_residual {
                    distribution_residual = r;
                    if r > 1e-12 {
                        offending_probe = Some(format!("{name} at t = {t}"));
                    }
                }
            }
        }
    }
    let alpha = super_flow(x)?;
    let beta = super_flow(&x.scale(c))?;
    let mut flow_residual: f64 = 0.0;
    for w in forms {
        for &t in times {
            let a = alpha.pullback(phi.lambda * t, w)?;
            // α*(λt, μθ) = A + μθB
            let composed = ThetaForm::from_form(1, a.component(0))?.add(&ThetaForm::monomial(1, 1, a.component(1).scale(phi.mu))?)?;
            flow_residual = flow_residual.max(composed.max_abs_diff_at(&beta.pullback(t, w)?, points)?);
        }
    }
    Ok(OddReparamReport { distribution_residual, flow_residual, offending_probe })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold_forms::ScalarField;

    fn pts(n: usize) -> Vec<Vec<f64>> {
        vec![vec![0.3; n], vec![-1.1; n], (0..n).map(|i| i as f64 * 0.7 - 0.2).collect()]
    }

    #[test]
    fn contraction_flow_is_t_independent() {
        let n = 2;
        let x = PiTDerivation::coordinate_contraction(n, 0);
        let fl = super_flow(&x).unwrap();
        let w = DifferentialForm::basis(n, &[0, 1], ScalarField::var(n, 1)).unwrap();
        let a = fl.pullback(1.7, &w).unwrap();
        assert_eq!(a.component(0).max_abs_diff(&w).unwrap(), 0.0);
        assert_eq!(a.component(1).max_abs_diff(&w.contract_coordinate(0)).unwrap(), 0.0);
    }

    #[test]
    fn translation_square() {
        // X = d + ι_{∂x} on ℝ: X² = 𝓛_{∂x}
        let n = 1;
        let x = PiTDerivation::exterior_d(n).add(&PiTDerivation::coordinate_contraction(n, 0)).unwrap();
        let fl = super_flow(&x).unwrap();
        assert!(matches!(fl.regime(), SuperFlowRegime::LieDerivative(_)));
        let w = DifferentialForm::basis(n, &[0], ScalarField::var(n, 0)).unwrap();
        let t = 0.4;
        let a = fl.even_part(t, &w).unwrap();
        let want = DifferentialForm::basis(n, &[0], ScalarField::var(n, 0).sub(&ScalarField::constant(n, t)).unwrap()).unwrap();
        assert!(a.max_abs_diff(&want).unwrap() < 1e-15);
        assert!(fl.d_flow_residual(t, &w, 1e-3, &pts(n)).unwrap() < 1e-9);
    }

    #[test]
    fn reparam_scaling() {
        let n = 2;
        let x = PiTDerivation::exterior_d(n);
        let forms = vec![DifferentialForm::basis(n, &[0], ScalarField::var(n, 1).mul(&ScalarField::var(n, 0)).unwrap()).unwrap()];
        let times = [0.0, 0.5, 1.0];
        let ok = verify_odd_reparam_lemma(1.5, &x, ScalingFamily::for_constant(1.5), &forms, &times, &pts(n)).unwrap();
        assert!(ok.distribution_residual < 1e-12 && ok.flow_residual < 1e-10);
        let bad = verify_odd_reparam_lemma(1.5, &x, ScalingFamily { lambda: 1.0, mu: 1.5 }, &forms, &times, &pts(n)).unwrap();
        assert!(bad.distribution_residual > 1e-3 && bad.offending_probe.is_some());
    }
}
