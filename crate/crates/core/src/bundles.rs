//! Trivialized ℤ/2-graded bundles E = ℝⁿ × ℝ^{p|q}, connections ∇ = d + A on E, and
//! connections on the pullback π*E over ΠTM.

use crate::error::{Error, Result};
use crate::grassmann::Parity;
use crate::manifold_forms::form::check_dims;
use crate::manifold_forms::{graded_bracket, DifferentialForm, PiTDerivation, ScalarField, VectorField};
use crate::random;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GradedBundle {
    pub dim: usize,
    pub p: usize,
    pub q: usize,
}

impl GradedBundle {
    pub fn new(dim: usize, p: usize, q: usize) -> Result<Self> {
        if p + q == 0 {
            return Err(Error::InvalidInput("bundle rank p + q must be positive".into()));
        }
        Ok(Self { dim, p, q })
    }

    pub fn rank(&self) -> usize {
        self.p + self.q
    }

    /// Parity of the r-th frame vector (the first p are even).
    pub fn parity_of(&self, r: usize) -> Parity {
        if r < self.p {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn off_diagonal(&self, s: usize, r: usize) -> bool {
        self.parity_of(s) != self.parity_of(r)
    }
}

/// Square matrix of forms, indexed [row][column].
pub type FormMatrix = Vec<Vec<DifferentialForm>>;

fn zero_matrix(dim: usize, r: usize) -> FormMatrix {
    vec![vec![DifferentialForm::zero(dim); r]; r]
}

fn check_matrix(m: &FormMatrix, r: usize, dim: usize) -> Result<()> {
    check_dims(r, m.len())?;
    for row in m {
        check_dims(r, row.len())?;
        for w in row {
            check_dims(dim, w.dim())?;
        }
    }
    Ok(())
}

/// ∇ = d + A on E, A a matrix of 1-forms acting on column sections.
#[derive(Clone, Debug)]
pub struct GradedConnection {
    bundle: GradedBundle,
    a: FormMatrix,
}

impl GradedConnection {
    pub fn new(bundle: GradedBundle, a: FormMatrix) -> Result<Self> {
        check_matrix(&a, bundle.rank(), bundle.dim)?;
        for (s, row) in a.iter().enumerate() {
            for (r, w) in row.iter().enumerate() {
                if !w.is_zero() && w.degrees() != [1] {
                    return Err(Error::InvalidInput(format!("A[{s}][{r}] = {w:?} is not a 1-form")));
                }
            }
        }
        Ok(Self { bundle, a })
    }

    /// Like `new`, but rejects connections that mix the even and odd parts.
    pub fn new_even(bundle: GradedBundle, a: FormMatrix) -> Result<Self> {
        let c = Self::new(bundle, a)?;
        if let Some((s, r)) = c.evenness_violation() {
            return Err(Error::ParityInconsistent(format!("A[{s}][{r}] couples even and odd parts")));
        }
        Ok(c)
    }

    pub fn flat(bundle: GradedBundle) -> Self {
        Self { bundle, a: zero_matrix(bundle.dim, bundle.rank()) }
    }

    /// A = Σᵢ Aᵢ dxⁱ from the coefficient matrices Aᵢ.
    pub fn from_components(bundle: GradedBundle, comps: &[Vec<Vec<ScalarField>>]) -> Result<Self> {
        let n = bundle.dim;
        check_dims(n, comps.len())?;
        let r = bundle.rank();
        let mut a = zero_matrix(n, r);
        for (i, ai) in comps.iter().enumerate() {
            check_dims(r, ai.len())?;
            for s in 0..r {
                check_dims(r, ai[s].len())?;
                for c in 0..r {
                    a[s][c] = a[s][c].add(&DifferentialForm::basis(n, &[i], ai[s][c].clone())?)?;
                }
            }
        }
        Self::new(bundle, a)
    }

    pub fn bundle(&self) -> GradedBundle {
        self.bundle
    }

    pub fn matrix(&self) -> &FormMatrix {
        &self.a
    }

    /// Aᵢ, the coefficient matrix of dxⁱ.
    pub fn component(&self, i: usize) -> Vec<Vec<ScalarField>> {
        self.a.iter().map(|row| row.iter().map(|w| w.contract_coordinate(i).degree_zero_part()).collect()).collect()
    }

    /// First entry (s, r) that couples frame vectors of different parity.
    pub fn evenness_violation(&self) -> Option<(usize, usize)> {
        let r = self.bundle.rank();
        (0..r).flat_map(|s| (0..r).map(move |c| (s, c))).find(|&(s, c)| self.bundle.off_diagonal(s, c) && !self.a[s][c].is_zero())
    }

    pub fn is_even(&self) -> bool {
        self.evenness_violation().is_none()
    }

    /// A(X) = ι_X A as a matrix of functions.
    pub fn evaluate_on(&self, x: &VectorField) -> Result<Vec<Vec<ScalarField>>> {
        self.a
            .iter()
            .map(|row| row.iter().map(|w| Ok(crate::manifold_forms::contract(x, w)?.degree_zero_part())).collect())
            .collect()
    }

    /// ∇_X s = X(s) + A(X)s for a section s of E.
    pub fn covariant_derivative(&self, x: &VectorField, s: &[ScalarField]) -> Result<Vec<ScalarField>> {
        check_dims(self.bundle.rank(), s.len())?;
        let ax = self.evaluate_on(x)?;
        (0..s.len())
            .map(|row| {
                let mut v = x.apply(&s[row])?;
                for (c, sc) in s.iter().enumerate() {
                    v = v.add(&ax[row][c].mul(sc)?)?;
                }
                Ok(v)
            })
            .collect()
    }

    /// ∇s = ds + As, components 1-forms.
    pub fn covariant_differential(&self, s: &[ScalarField]) -> Result<Vec<DifferentialForm>> {
        check_dims(self.bundle.rank(), s.len())?;
        (0..s.len())
            .map(|row| {
                let mut v = crate::manifold_forms::exterior_d(&DifferentialForm::function(s[row].clone()))?;
                for (c, sc) in s.iter().enumerate() {
                    v = v.add(&self.a[row][c].mul_function(sc)?)?;
                }
                Ok(v)
            })
            .collect()
    }

    /// Largest coefficient difference of the connection matrices.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.bundle != other.bundle {
            return Err(Error::InvalidInput("connections on different bundles".into()));
        }
        let mut worst: f64 = 0.0;
        for (ra, rb) in self.a.iter().zip(&other.a) {
            for (x, y) in ra.iter().zip(rb) {
                worst = worst.max(x.max_abs_diff(y)?);
            }
        }
        Ok(worst)
    }
}

pub fn covariant_derivative_m(conn: &GradedConnection, x: &VectorField, s: &[ScalarField]) -> Result<Vec<ScalarField>> {
    conn.covariant_derivative(x, s)
}

/// A section of π*E over ΠTM: one form per frame vector, σ = Σ σʳ eᵣ.
#[derive(Clone, Debug)]
pub struct PiTSection {
    pub components: Vec<DifferentialForm>,
}

impl PiTSection {
    pub fn new(components: Vec<DifferentialForm>) -> Self {
        Self { components }
    }

    /// π*s for a section s of E.
    pub fn pullback(s: &[ScalarField]) -> Self {
        Self { components: s.iter().map(|f| DifferentialForm::function(f.clone())).collect() }
    }

    /// The constant frame section eᵣ.
    pub fn frame(dim: usize, rank: usize, r: usize) -> Self {
        Self::new((0..rank).map(|c| DifferentialForm::constant(dim, if c == r { 1.0 } else { 0.0 })).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(DifferentialForm::is_zero)
    }

    /// True when every component is a function, i.e. σ ∈ π*Γ(E).
    pub fn is_pulled_back(&self) -> bool {
        self.components.iter().all(DifferentialForm::is_function)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.components.len(), other.components.len())?;
        Ok(Self::new(self.components.iter().zip(&other.components).map(|(a, b)| a.add(b)).collect::<Result<_>>()?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&Self::new(other.components.iter().map(|w| w.scale(-1.0)).collect()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dims(self.components.len(), other.components.len())?;
        self.components.iter().zip(&other.components).try_fold(0.0f64, |m, (a, b)| Ok(m.max(a.max_abs_diff(b)?)))
    }
}

/// A connection ∇̃ on π*E, given by the matrices Lᵢ = ∇̃ along 𝓛_{∂ᵢ} and Iᵢ = ∇̃ along
/// ι_{∂ᵢ} on the frame:
/// ∇̃_V σ = V(σ) + Σᵣ (−1)^{|V||σʳ|} σʳ ∧ Kᵣ,  K = Σᵢ aᵢ∧Lᵢ + bᵢ∧Iᵢ,
/// for V = Σ aᵢ𝓛_{∂ᵢ} + bᵢι_{∂ᵢ}.
#[derive(Clone, Debug)]
pub struct PiTConnection {
    bundle: GradedBundle,
    lie: Vec<FormMatrix>,
    contraction: Vec<FormMatrix>,
}

impl PiTConnection {
    pub fn new(bundle: GradedBundle, lie: Vec<FormMatrix>, contraction: Vec<FormMatrix>) -> Result<Self> {
        check_dims(bundle.dim, lie.len())?;
        check_dims(bundle.dim, contraction.len())?;
        for m in lie.iter().chain(&contraction) {
            check_matrix(m, bundle.rank(), bundle.dim)?;
        }
        Ok(Self { bundle, lie, contraction })
    }

    /// π*∇: Lᵢ = Aᵢ as 0-forms, Iᵢ = 0.
    pub fn pullback(conn: &GradedConnection) -> Self {
        let b = conn.bundle();
        let lie = (0..b.dim)
            .map(|i| conn.component(i).into_iter().map(|row| row.into_iter().map(DifferentialForm::function).collect()).collect())
            .collect();
        Self { bundle: b, lie, contraction: vec![zero_matrix(b.dim, b.rank()); b.dim] }
    }

    pub fn bundle(&self) -> GradedBundle {
        self.bundle
    }

    pub fn lie_matrices(&self) -> &[FormMatrix] {
        &self.lie
    }

    pub fn contraction_matrices(&self) -> &[FormMatrix] {
        &self.contraction
    }

    /// Replaces one entry of Lᵢ or Iᵢ (used to build perturbed connections).
    pub fn with_entry(mut self, contraction: bool, i: usize, row: usize, col: usize, w: DifferentialForm) -> Result<Self> {
        check_dims(self.bundle.dim, w.dim())?;
        let m = if contraction { &mut self.contraction } else { &mut self.lie };
        let cell = m.get_mut(i).and_then(|m| m.get_mut(row)).and_then(|r| r.get_mut(col)).ok_or_else(|| Error::InvalidInput("entry out of range".into()))?;
        *cell = w;
        Ok(self)
    }

    /// The matrix K(V) = Σᵢ aᵢ∧Lᵢ + bᵢ∧Iᵢ.
    pub fn pairing_matrix(&self, v: &PiTDerivation) -> Result<FormMatrix> {
        let n = self.bundle.dim;
        check_dims(n, v.dim())?;
        let r = self.bundle.rank();
        let mut k = zero_matrix(n, r);
        for i in 0..n {
            let (ai, bi) = (&v.lie_coefficients()[i], &v.contraction_coefficients()[i]);
            for s in 0..r {
                for c in 0..r {
                    if !ai.is_zero() && !self.lie[i][s][c].is_zero() {
                        k[s][c] = k[s][c].add(&ai.wedge(&self.lie[i][s][c])?)?;
                    }
                    if !bi.is_zero() && !self.contraction[i][s][c].is_zero() {
                        k[s][c] = k[s][c].add(&bi.wedge(&self.contraction[i][s][c])?)?;
                    }
                }
            }
        }
        Ok(k)
    }

    /// ∇̃_V σ
    pub fn covariant(&self, v: &PiTDerivation, sigma: &PiTSection) -> Result<PiTSection> {
        let r = self.bundle.rank();
        check_dims(r, sigma.components.len())?;
        let k = self.pairing_matrix(v)?;
        let mut out = Vec::with_capacity(r);
        for s in 0..r {
            let mut comp = v.apply(&sigma.components[s])?;
            for c in 0..r {
                if k[s][c].is_zero() {
                    continue;
                }
                for parity in [Parity::Even, Parity::Odd] {
                    let part = sigma.components[c].parity_part(parity);
                    if part.is_zero() {
                        continue;
                    }
                    let sign = v.parity().koszul(parity);
                    comp = comp.add(&part.wedge(&k[s][c])?.scale(sign))?;
                }
            }
            out.push(comp);
        }
        Ok(PiTSection::new(out))
    }

    /// Lᵢ restricted to its even block structure.
    pub fn is_even(&self) -> bool {
        let r = self.bundle.rank();
        self.lie.iter().chain(&self.contraction).all(|m| (0..r).all(|s| (0..r).all(|c| !self.bundle.off_diagonal(s, c) || m[s][c].is_zero())))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.bundle != other.bundle {
            return Err(Error::InvalidInput("connections on different bundles".into()));
        }
        let mut worst: f64 = 0.0;
        for (ma, mb) in self.lie.iter().chain(&self.contraction).zip(other.lie.iter().chain(&other.contraction)) {
            for (ra, rb) in ma.iter().zip(mb) {
                for (x, y) in ra.iter().zip(rb) {
                    worst = worst.max(x.max_abs_diff(y)?);
                }
            }
        }
        Ok(worst)
    }
}

pub fn pullback_connection(conn: &GradedConnection) -> PiTConnection {
    PiTConnection::pullback(conn)
}

/// Which odd-triviality condition failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OddTrivialCondition {
    /// ⟨∇̃(π*s), ι_X⟩ ≠ 0
    ContractionNonzero,
    /// ⟨∇̃(π*s), 𝓛_X⟩ is not a pulled-back section
    LieNotPulledBack,
}

#[derive(Clone, Debug)]
pub struct OddTrivialWitness {
    pub section: usize,
    pub field: VectorField,
    pub condition: OddTrivialCondition,
    pub value: PiTSection,
}

#[derive(Clone, Debug)]
pub struct OddTrivialReport {
    pub odd_trivial: bool,
    pub probes_checked: usize,
    pub witness: Option<OddTrivialWitness>,
}

/// Checks ⟨∇̃(π*s), ι_X⟩ = 0 and ⟨∇̃(π*s), 𝓛_X⟩ ∈ π*Γ(E) for the frame sections and for
/// coordinate fields plus `random_fields` random fields of degree ≤ 2.
pub fn is_odd_trivial(conn: &PiTConnection, random_fields: usize, seed: u64) -> Result<OddTrivialReport> {
    let b = conn.bundle();
    let n = b.dim;
    let mut fields: Vec<VectorField> = (0..n).map(|i| VectorField::coordinate(n, i)).collect();
    let mut rng = random::rng(seed);
    fields.extend((0..random_fields).map(|_| random::vector_field(&mut rng, n, 2)));
    let mut checked = 0;
    for x in &fields {
        let iota = PiTDerivation::contraction(x);
        let lie = PiTDerivation::lie(x)?;
        for r in 0..b.rank() {
            let s = PiTSection::frame(n, b.rank(), r);
            checked += 1;
            let v = conn.covariant(&iota, &s)?;
            if !v.is_zero() {
                let witness = OddTrivialWitness { section: r, field: x.clone(), condition: OddTrivialCondition::ContractionNonzero, value: v };
                return Ok(OddTrivialReport { odd_trivial: false, probes_checked: checked, witness: Some(witness) });
            }
            let v = conn.covariant(&lie, &s)?;
            if !v.is_pulled_back() {
                let witness = OddTrivialWitness { section: r, field: x.clone(), condition: OddTrivialCondition::LieNotPulledBack, value: v };
                return Ok(OddTrivialReport { odd_trivial: false, probes_checked: checked, witness: Some(witness) });
            }
        }
    }
    Ok(OddTrivialReport { odd_trivial: true, probes_checked: checked, witness: None })
}

/// ∇ on E with ∇_X s = ⟨∇̃(π*s), 𝓛_X⟩, for an odd-trivial ∇̃.
pub fn restrict_connection(conn: &PiTConnection) -> Result<GradedConnection> {
    let report = is_odd_trivial(conn, 0, 0)?;
    if let Some(w) = report.witness {
        return Err(Error::NotOddTrivial(format!("{:?} for frame section {} along {:?}", w.condition, w.section, w.field)));
    }
    let b = conn.bundle();
    let comps: Vec<Vec<Vec<ScalarField>>> =
        conn.lie_matrices().iter().map(|m| m.iter().map(|row| row.iter().map(DifferentialForm::degree_zero_part).collect()).collect()).collect();
    GradedConnection::from_components(b, &comps)
}

/// ∇̃_X∇̃_Yσ + ∇̃_Y∇̃_Xσ − ∇̃_{[X,Y]}σ for odd X, Y.
pub fn odd_curvature(conn: &PiTConnection, x: &PiTDerivation, y: &PiTDerivation, sigma: &PiTSection) -> Result<PiTSection> {
    if x.parity() != Parity::Odd || y.parity() != Parity::Odd {
        return Err(Error::MixedParity { expected: Parity::Odd });
    }
    let xy = conn.covariant(x, &conn.covariant(y, sigma)?)?;
    let yx = conn.covariant(y, &conn.covariant(x, sigma)?)?;
    let br = conn.covariant(&graded_bracket(x, y)?, sigma)?;
    xy.add(&yx)?.sub(&br)
}

/// ⟨∇̃(π*s), d⟩ − ∇s, componentwise.
pub fn d_pairing_defect(pit: &PiTConnection, conn: &GradedConnection, s: &[ScalarField]) -> Result<PiTSection> {
    let lhs = pit.covariant(&PiTDerivation::exterior_d(conn.bundle().dim), &PiTSection::pullback(s))?;
    lhs.sub(&PiTSection::new(conn.covariant_differential(s)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_connection(a: f64, b: f64) -> GradedConnection {
        let bundle = GradedBundle::new(1, 1, 1).unwrap();
        GradedConnection::from_components(
            bundle,
            &[vec![vec![ScalarField::constant(1, a), ScalarField::zero(1)], vec![ScalarField::zero(1), ScalarField::constant(1, b)]]],
        )
        .unwrap()
    }

    #[test]
    fn covariant_derivative_examples() {
        let c = diag_connection(0.5, -2.0);
        let s = vec![ScalarField::constant(1, 1.0), ScalarField::zero(1)];
        let v = c.covariant_derivative(&VectorField::coordinate(1, 0), &s).unwrap();
        assert_eq!(v[0].as_poly().unwrap().eval(&[0.3]), 0.5);
        let flat = GradedConnection::flat(c.bundle());
        let v = flat.covariant_derivative(&VectorField::coordinate(1, 0), &s).unwrap();
        assert!(v.iter().all(ScalarField::is_zero));
    }

    #[test]
    fn pullback_is_odd_trivial_and_restricts_back() {
        let c = diag_connection(0.5, -2.0);
        let pit = PiTConnection::pullback(&c);
        assert!(is_odd_trivial(&pit, 4, 1).unwrap().odd_trivial);
        let back = restrict_connection(&pit).unwrap();
        assert_eq!(back.max_abs_diff(&c).unwrap(), 0.0);
        assert!(back.is_even());
    }

    #[test]
    fn perturbations_are_detected() {
        let c = diag_connection(0.5, -2.0);
        let bad = PiTConnection::pullback(&c).with_entry(true, 0, 0, 0, DifferentialForm::constant(1, 1.0)).unwrap();
        let r = is_odd_trivial(&bad, 0, 0).unwrap();
        assert_eq!(r.witness.unwrap().condition, OddTrivialCondition::ContractionNonzero);
        let two = GradedBundle::new(2, 1, 0).unwrap();
        let base = GradedConnection::flat(two);
        let dxdy = DifferentialForm::basis(2, &[0, 1], ScalarField::constant(2, 1.0)).unwrap();
        let bad = PiTConnection::pullback(&base).with_entry(false, 0, 0, 0, dxdy).unwrap();
        let r = is_odd_trivial(&bad, 0, 0).unwrap();
        assert_eq!(r.witness.unwrap().condition, OddTrivialCondition::LieNotPulledBack);
        assert!(matches!(restrict_connection(&bad), Err(Error::NotOddTrivial(_))));
    }

    #[test]
    fn odd_directions_are_flat() {
        let c = diag_connection(0.5, -2.0);
        let pit = PiTConnection::pullback(&c);
        let ix = PiTDerivation::coordinate_contraction(1, 0);
        let s = PiTSection::new(vec![DifferentialForm::dx(1, 0), DifferentialForm::function(ScalarField::var(1, 0))]);
        assert!(odd_curvature(&pit, &ix, &ix, &s).unwrap().is_zero());
    }
}
