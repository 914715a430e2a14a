use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::grassmann::{monomial_sign, Parity, MAX_GENERATORS};
use crate::manifold_forms::{graded_bracket, DifferentialForm, PiTDerivation, VectorField};

/// An element Σ_J θ^J ω_J of Ω*(ℝⁿ)[θ₁, …, θₘ], with the odd parameters written to the
/// left of the forms. Parameters anticommute with odd forms.
#[derive(Clone)]
pub struct ThetaForm {
    dim: usize,
    num_theta: usize,
    terms: BTreeMap<u32, DifferentialForm>,
}

impl ThetaForm {
    pub fn zero(dim: usize, num_theta: usize) -> Result<Self> {
        if num_theta > MAX_GENERATORS {
            return Err(Error::TooManyGenerators { requested: num_theta, max: MAX_GENERATORS });
        }
        Ok(Self { dim, num_theta, terms: BTreeMap::new() })
    }

    /// θ^J ω
    pub fn monomial(num_theta: usize, mask: u32, w: DifferentialForm) -> Result<Self> {
        let mut out = Self::zero(w.dim(), num_theta)?;
        if (mask as u64) >> num_theta != 0 {
            return Err(Error::InvalidInput(format!("θ mask {mask:#b} exceeds {num_theta} parameters")));
        }
        out.add_term(mask, w)?;
        Ok(out)
    }

    pub fn from_form(num_theta: usize, w: DifferentialForm) -> Result<Self> {
        Self::monomial(num_theta, 0, w)
    }

    fn add_term(&mut self, mask: u32, w: DifferentialForm) -> Result<()> {
        if w.is_zero() {
            return Ok(());
        }
        let sum = match self.terms.remove(&mask) {
            Some(old) => old.add(&w)?,
            None => w,
        };
        if !sum.is_zero() {
            self.terms.insert(mask, sum);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_theta(&self) -> usize {
        self.num_theta
    }

    /// ω_J (zero when absent).
    pub fn component(&self, mask: u32) -> DifferentialForm {
        self.terms.get(&mask).cloned().unwrap_or_else(|| DifferentialForm::zero(self.dim))
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &DifferentialForm)> {
        self.terms.iter().map(|(m, w)| (*m, w))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.num_theta != other.num_theta {
            return Err(Error::IncompatibleAlgebras { left: self.num_theta, right: other.num_theta });
        }
        crate::manifold_forms::form::check_dims(self.dim, other.dim)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, w) in &other.terms {
            out.add_term(*m, w.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self { dim: self.dim, num_theta: self.num_theta, terms: BTreeMap::new() };
        for (m, w) in &self.terms {
            out.add_term(*m, w.scale(s)).expect("same dimension");
        }
        out
    }

    /// (θ^J ω)(θ^K η) = (−1)^{|ω||K|} sign(J, K) θ^{J∪K} ω∧η
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = Self::zero(self.dim, self.num_theta)?;
        for (j, w) in &self.terms {
            for (k, v) in &other.terms {
                let sj = monomial_sign(*j, *k);
                if sj == 0.0 {
                    continue;
                }
                for parity in [Parity::Even, Parity::Odd] {
                    let part = w.parity_part(parity);
                    if part.is_zero() {
                        continue;
                    }
                    let koszul = if parity.is_odd() && k.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                    out.add_term(j | k, part.wedge(v)?.scale(sj * koszul))?;
                }
            }
        }
        Ok(out)
    }

    /// Restriction along the diagonal θ₁ = … = θₘ = θ: only |J| ≤ 1 survives.
    pub fn diagonal(&self) -> Result<Self> {
        let mut out = Self::zero(self.dim, 1)?;
        for (m, w) in &self.terms {
            match m.count_ones() {
                0 => out.add_term(0, w.clone())?,
                1 => out.add_term(1, w.clone())?,
                _ => {}
            }
        }
        Ok(out)
    }

    /// Largest coefficient difference (polynomial coefficients).
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check(other)?;
        let d = self.sub(other)?;
        d.terms.values().try_fold(0.0f64, |m, w| Ok(m.max(w.max_abs_diff(&DifferentialForm::zero(self.dim))?)))
    }

    /// Largest coefficient difference at the sample points (any coefficients).
    pub fn max_abs_diff_at(&self, other: &Self, points: &[Vec<f64>]) -> Result<f64> {
        self.check(other)?;
        let mut masks: Vec<u32> = self.terms.keys().chain(other.terms.keys()).copied().collect();
        masks.sort_unstable();
        masks.dedup();
        masks.iter().try_fold(0.0f64, |m, j| Ok(m.max(self.component(*j).max_abs_diff_at(&other.component(*j), points)?)))
    }
}

impl fmt::Debug for ThetaForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, w)| {
                let th: String = (0..self.num_theta).filter(|i| m & (1 << i) != 0).map(|i| format!("θ{}", i + 1)).collect();
                if th.is_empty() {
                    format!("[{w:?}]")
                } else {
                    format!("{th}[{w:?}]")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Action ω ↦ ω + θ·Xω of the ℝ^{0|1}-flow of odd square-zero derivations whose pairwise
/// brackets vanish; several factors compose through the diagonal of ℝ^{0|1}.
#[derive(Clone, Debug)]
pub struct OddFlowAction {
    dim: usize,
    factors: Vec<PiTDerivation>,
}

/// The flow of ι_X: ω ↦ ω + θ·ι_Xω.
pub fn odd_flow(x: &VectorField) -> OddFlowAction {
    OddFlowAction { dim: x.dim(), factors: vec![PiTDerivation::contraction(x)] }
}

fn require_commuting(a: &PiTDerivation, b: &PiTDerivation) -> Result<()> {
    let br = graded_bracket(a, b)?;
    if !br.is_zero() {
        return Err(Error::PreconditionViolated(format!("odd generators do not anticommute: bracket {br:?}")));
    }
    Ok(())
}

impl OddFlowAction {
    /// The flow of an odd derivation with [X, X] = 0 (for example ι_X or d).
    pub fn from_derivation(x: PiTDerivation) -> Result<Self> {
        if x.parity() != Parity::Odd {
            return Err(Error::MixedParity { expected: Parity::Odd });
        }
        require_commuting(&x, &x)?;
        Ok(Self { dim: x.dim(), factors: vec![x] })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, factors: vec![] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[PiTDerivation] {
        &self.factors
    }

    /// The infinitesimal generator Σ Xⱼ.
    pub fn generator(&self) -> Result<PiTDerivation> {
        self.factors.iter().try_fold(PiTDerivation::zero(self.dim, Parity::Odd), |acc, x| acc.add(x))
    }

    /// ω ↦ ω + θ·(Σ Xⱼ)ω
    pub fn apply(&self, w: &DifferentialForm) -> Result<ThetaForm> {
        let mut out = ThetaForm::from_form(1, w.clone())?;
        out.add_term(1, self.generator()?.apply(w)?)?;
        Ok(out)
    }

    /// The composite with one parameter θⱼ per factor, γ* = α₁*∘α₂*∘…, before restriction
    /// to the diagonal (the last factor acts first).
    pub fn apply_separate(&self, w: &DifferentialForm) -> Result<ThetaForm> {
        let m = self.factors.len();
        let mut cur = ThetaForm::from_form(m, w.clone())?;
        for (j, x) in self.factors.iter().enumerate().rev() {
            let bit = 1u32 << j;
            let mut next = cur.clone();
            for (mask, wj) in &cur.terms {
                let xw = x.apply(wj)?;
                // θ^J θⱼ = sign(J, {j}) θ^{J∪{j}}, and θⱼ(Xω) sits to the right of θ^J.
                let s = monomial_sign(*mask, bit);
                if s != 0.0 {
                    next.add_term(mask | bit, xw.scale(s))?;
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// apply_separate followed by the diagonal θⱼ = θ.
    pub fn apply_via_diagonal(&self, w: &DifferentialForm) -> Result<ThetaForm> {
        self.apply_separate(w)?.diagonal()
    }
}

/// The flow γ(θ, x) = β(θ, α(θ, x)) of X + Y from the flows α of X and β of Y.
pub fn compose_odd_flows(ax: &OddFlowAction, ay: &OddFlowAction) -> Result<OddFlowAction> {
    crate::manifold_forms::form::check_dims(ax.dim, ay.dim)?;
    for a in &ax.factors {
        for b in &ay.factors {
            require_commuting(a, b)?;
        }
    }
    let mut factors = ax.factors.clone();
    factors.extend(ay.factors.iter().cloned());
    Ok(OddFlowAction { dim: ax.dim, factors })
}

/// Which closed form the flow of f·ι_X takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FIotaMode {
    /// ι_X f = 0: α_t* = 1 + t·fι_X.
    Xf0,
    /// ι_X f = 1: α_t* = 1 + (eᵗ − 1)·fι_X.
    Xf1,
}

/// Closed-form flow of the even derivation f·ι_X for an odd form f.
#[derive(Clone, Debug)]
pub struct FIotaFlow {
    mode: FIotaMode,
    generator: PiTDerivation,
}

pub fn flow_f_iota(f: &DifferentialForm, x: &VectorField, mode: FIotaMode) -> Result<FIotaFlow> {
    if f.parity() != Some(Parity::Odd) || f.is_zero() {
        return Err(Error::MixedParity { expected: Parity::Odd });
    }
    let ixf = crate::manifold_forms::contract(x, f)?;
    let target = match mode {
        FIotaMode::Xf0 => DifferentialForm::zero(f.dim()),
        FIotaMode::Xf1 => DifferentialForm::constant(f.dim(), 1.0),
    };
    if ixf.max_abs_diff(&target)? > 0.0 {
        return Err(Error::PreconditionViolated(format!("{mode:?} needs ι_X f = {target:?}, found {ixf:?}")));
    }
    Ok(FIotaFlow { mode, generator: PiTDerivation::contraction(x).left_mul(f)? })
}

impl FIotaFlow {
    pub fn mode(&self) -> FIotaMode {
        self.mode
    }

    /// f·ι_X as a derivation.
    pub fn generator(&self) -> &PiTDerivation {
        &self.generator
    }

    /// The scalar c(t) in α_t* = 1 + c(t)·fι_X.
    pub fn coefficient(&self, t: f64) -> f64 {
        match self.mode {
            FIotaMode::Xf0 => t,
            FIotaMode::Xf1 => t.exp_m1(),
        }
    }

    pub fn pullback(&self, t: f64, w: &DifferentialForm) -> Result<DifferentialForm> {
        w.add(&self.generator.apply(w)?.scale(self.coefficient(t)))
    }

    /// |d/dt α_t*ω − α_t*(fι_X ω)| at time t, with a central difference of step h.
    pub fn flow_property_residual(&self, t: f64, w: &DifferentialForm, h: f64) -> Result<f64> {
        let fd = self.pullback(t + h, w)?.sub(&self.pullback(t - h, w)?)?.scale(0.5 / h);
        let exact = self.pullback(t, &self.generator.apply(w)?)?;
        fd.max_abs_diff(&exact)
    }
}
