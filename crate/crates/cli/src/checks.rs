//! Named verification checks with their tolerances.

use serde::Serialize;
use supertransport::bundles::{d_pairing_defect, is_odd_trivial, odd_curvature, restrict_connection, GradedBundle, GradedConnection, PiTConnection, PiTSection};
use supertransport::exec::{self, Exec};
use supertransport::flows::{
    compose_odd_flows, even_flow, flow_f_iota, odd_flow, reparam_flow_even, super_flow, trotter_table, verify_odd_reparam_lemma, FIotaMode, ScalingFamily,
};
use supertransport::grassmann::{GrassmannElement, GrassmannHom, Parity};
use supertransport::manifold_forms::{
    contract, decompose_derivation, exterior_d, lie_derivative, DifferentialForm, PiTDerivation, ScalarField, SuperFunction11, VectorField,
};
use supertransport::ode::OdeConfig;
use supertransport::random::{self, TestRng};
use supertransport::transport::{
    constant_path_residual, endpoint_map, flow_transport, generic_point, gluing_residual, q_naturality, reparam_residual, roundtrip_residual,
    s_naturality_residual, ConnectionTransport, FlowGenerator, LiftedTransport, ProjectedTransport, Reparametrization, SuperCurve, SuperPath,
    TransportFunctor,
};
use supertransport::{Error, Result};

/// Shared settings for one run of the suite.
#[derive(Clone, Copy, Debug)]
pub struct Ctx {
    pub seed: u64,
    pub ode: OdeConfig,
    pub exec: Exec,
}

impl Ctx {
    fn rng(&self, salt: u64) -> TestRng {
        random::rng(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt))
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

pub struct Check {
    pub name: &'static str,
    pub anchor: &'static str,
    pub run: fn(&Ctx) -> Result<Outcome>,
}

/// Residual, the tolerance it is held to, and extra conditions folded into `ok`.
pub struct Outcome {
    pub residual: f64,
    pub tolerance: f64,
    pub ok: bool,
    pub detail: String,
}

impl Outcome {
    fn within(residual: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { residual, tolerance, ok: residual <= tolerance, detail: detail.into() }
    }

    fn and(mut self, ok: bool, why: &str) -> Self {
        if !ok {
            self.ok = false;
            self.detail = format!("{}; {why}", self.detail);
        }
        self
    }
}

pub fn run_check(check: &Check, ctx: &Ctx) -> Result<CheckResult> {
    let out = (check.run)(ctx)?;
    Ok(CheckResult {
        name: check.name.into(),
        anchor: check.anchor.into(),
        residual: out.residual,
        tolerance: out.tolerance,
        passed: out.ok && out.residual.is_finite(),
        detail: out.detail,
    })
}

pub fn find(name: &str) -> Option<&'static Check> {
    CHECKS.iter().find(|c| c.name == name)
}

pub static CHECKS: &[Check] = &[
    Check { name: "grassmann-associativity", anchor: "Grassmann algebra: associative supercommutative product", run: grassmann_associativity },
    Check { name: "super-eval-homomorphism", anchor: "S-points: evaluating smooth functions on even Grassmann arguments", run: super_eval_homomorphism },
    Check { name: "d-squared", anchor: "exterior derivative: d∘d = 0", run: d_squared },
    Check { name: "cartan-formula", anchor: "Cartan formula: 𝓛_X = dι_X + ι_Xd", run: cartan_formula },
    Check { name: "contraction-anticommute", anchor: "contractions anticommute: ι_Xι_Y + ι_Yι_X = 0", run: contraction_anticommute },
    Check { name: "lie-contraction-bracket", anchor: "bracket relation [𝓛_X, ι_Y] = ι_[X,Y]", run: lie_contraction_bracket },
    Check { name: "derivation-decomposition", anchor: "derivations of forms: every derivation is Σ aᵢ𝓛_∂ᵢ + bᵢι_∂ᵢ", run: derivation_decomposition },
    Check { name: "d-squared-time", anchor: "standard odd vector field on ℝ^{1|1}: D² = ∂_t", run: d_squared_time },
    Check { name: "even-flow-closed-form", anchor: "flows of even vector fields: x∂x flows by eᵗ", run: even_flow_closed_form },
    Check { name: "trotter-convergence", anchor: "Trotter formula for the flow of X + Y", run: trotter_convergence },
    Check { name: "trotter-group-law", anchor: "Trotter limit is a flow: γ_tγ_s = γ_{t+s}", run: trotter_group_law },
    Check { name: "odd-flow-composition", anchor: "odd flows: γ(θ, x) = β(θ, α(θ, x)) is the flow of ι_X + ι_Y", run: odd_flow_composition },
    Check { name: "reparam-flow-even", anchor: "flow of fX is a time change of the flow of X", run: reparam_flow_check },
    Check { name: "f-iota-flows", anchor: "closed-form flows of f·ι_X when ι_Xf is 0 or 1", run: f_iota_flows },
    Check { name: "super-flow-equation", anchor: "ℝ^{1|1}-flow of an odd field: e^{−tX²}(1 + θX)", run: super_flow_equation },
    Check { name: "odd-reparam-scaling", anchor: "flow of cX is the flow of X reparametrized by (c²t, cθ)", run: odd_reparam_scaling },
    Check { name: "odd-triviality", anchor: "pullback connections are odd-trivial", run: odd_triviality },
    Check { name: "odd-flatness", anchor: "odd curvature of a pullback connection vanishes", run: odd_flatness },
    Check { name: "d-pairing", anchor: "pairing the pullback connection with d gives ∇", run: d_pairing },
    Check { name: "pullback-restrict-bijection", anchor: "odd-trivial connections on π*E correspond to connections on E", run: pullback_restrict },
    Check { name: "transport-gluing", anchor: "transport axioms: compatibility with gluing", run: transport_gluing },
    Check { name: "transport-constant-identity", anchor: "transport axioms: identity on constant (super)paths", run: transport_constant },
    Check { name: "transport-q-naturality", anchor: "transport axioms: naturality for the projection ℝ^{1|1} → ℝ", run: transport_q_naturality },
    Check { name: "transport-s-naturality", anchor: "transport axioms: naturality in the parametrizing superpoint", run: transport_s_naturality },
    Check { name: "transport-reparam-invariance", anchor: "transport axioms: invariance under D-preserving reparametrization", run: transport_reparam },
    Check { name: "endpoint-isomorphism", anchor: "endpoint maps are even linear isomorphisms", run: endpoint_isomorphism },
    Check { name: "superpath-closed-form", anchor: "D-parallel sections along the superpath t + θη", run: superpath_closed_form },
    Check { name: "odd-trivial-transport", anchor: "transport of π*∇ is the identity along flows of ι_X", run: odd_trivial_transport },
    Check { name: "lift-project-roundtrip", anchor: "transport on M and odd-trivial transport on ΠTM determine each other", run: lift_project_roundtrip },
    Check { name: "connection-roundtrip", anchor: "connection → transport → connection is the identity", run: connection_roundtrip },
];

fn max_form(w: &DifferentialForm) -> Result<f64> {
    w.max_abs_diff(&DifferentialForm::zero(w.dim()))
}

fn worst<I: IntoIterator<Item = Result<f64>>>(it: I) -> Result<f64> {
    it.into_iter().try_fold(0.0f64, |acc, r| Ok(acc.max(r?)))
}

/// (dim, X, Y, ω) instances over dims 1..=3.
fn calculus_instances(ctx: &Ctx, salt: u64, count: usize) -> Vec<(VectorField, VectorField, DifferentialForm)> {
    let mut rng = ctx.rng(salt);
    (0..count)
        .map(|j| {
            let n = 1 + j % 3;
            (random::vector_field(&mut rng, n, 2), random::vector_field(&mut rng, n, 2), random::form(&mut rng, n, 2))
        })
        .collect()
}

fn grassmann_associativity(ctx: &Ctx) -> Result<Outcome> {
    let mut rng = ctx.rng(1);
    let all: Vec<usize> = (0..4).collect();
    let mut res: f64 = 0.0;
    for _ in 0..100 {
        let (a, b, c) = (random::grassmann(&mut rng, 4, &all, false), random::grassmann(&mut rng, 4, &all, true), random::grassmann(&mut rng, 4, &all, true));
        res = res.max((&(&a * &b) * &c).max_abs_diff(&(&a * &(&b * &c))));
        // odd elements anticommute, even ones are central
        res = res.max((&b * &c).max_abs_diff(&(&c * &b).scale(-1.0)));
        res = res.max((&a * &b).max_abs_diff(&(&b * &a)));
    }
    Ok(Outcome::within(res, 1e-12, "100 triples in Λ_4"))
}

fn super_eval_homomorphism(ctx: &Ctx) -> Result<Outcome> {
    let mut rng = ctx.rng(2);
    let all: Vec<usize> = (0..4).collect();
    let mut res: f64 = 0.0;
    for _ in 0..50 {
        let f = random::scalar(&mut rng, 2, 3);
        let g = random::scalar(&mut rng, 2, 3);
        let args: Vec<GrassmannElement> = (0..2)
            .map(|_| {
                let mut a = random::grassmann(&mut rng, 4, &all, false);
                a.set_coeff(0, random::quarter(&mut rng));
                a
            })
            .collect();
        let lhs = f.mul(&g)?.super_eval(&args)?;
        let rhs = &f.super_eval(&args)? * &g.super_eval(&args)?;
        let sum = f.add(&g)?.super_eval(&args)?;
        res = res.max(lhs.max_abs_diff(&rhs)).max(sum.max_abs_diff(&(&f.super_eval(&args)? + &g.super_eval(&args)?)));
    }
    Ok(Outcome::within(res, 1e-12, "products and sums of 50 random pairs"))
}

fn d_squared(ctx: &Ctx) -> Result<Outcome> {
    let inst = calculus_instances(ctx, 3, 100);
    let res = worst(exec::map(ctx.exec, &inst, |(_, _, w)| max_form(&exterior_d(&exterior_d(w)?)?)))?;
    Ok(Outcome::within(res, 1e-12, "100 random forms, n ∈ {1,2,3}"))
}

fn cartan_formula(ctx: &Ctx) -> Result<Outcome> {
    let inst = calculus_instances(ctx, 4, 100);
    let res = worst(exec::map(ctx.exec, &inst, |(x, _, w)| {
        let rhs = exterior_d(&contract(x, w)?)?.add(&contract(x, &exterior_d(w)?)?)?;
        lie_derivative(x, w)?.max_abs_diff(&rhs)
    }))?;
    Ok(Outcome::within(res, 1e-12, "100 random (X, ω)"))
}

fn contraction_anticommute(ctx: &Ctx) -> Result<Outcome> {
    let inst = calculus_instances(ctx, 5, 100);
    let res = worst(exec::map(ctx.exec, &inst, |(x, y, w)| max_form(&contract(x, &contract(y, w)?)?.add(&contract(y, &contract(x, w)?)?)?)))?;
    Ok(Outcome::within(res, 1e-12, "100 random (X, Y, ω)"))
}

fn lie_contraction_bracket(ctx: &Ctx) -> Result<Outcome> {
    let inst = calculus_instances(ctx, 6, 100);
    let res = worst(exec::map(ctx.exec, &inst, |(x, y, w)| {
        let lhs = lie_derivative(x, &contract(y, w)?)?.sub(&contract(y, &lie_derivative(x, w)?)?)?;
        lhs.max_abs_diff(&contract(&x.bracket(y)?, w)?)
    }))?;
    Ok(Outcome::within(res, 1e-12, "100 random (X, Y, ω)"))
}

fn random_derivation(rng: &mut TestRng, n: usize, parity: Parity) -> Result<PiTDerivation> {
    let a = (0..n).map(|_| random::form(rng, n, 1).parity_part(parity)).collect();
    let b = (0..n).map(|_| random::form(rng, n, 1).parity_part(parity.flip())).collect();
    PiTDerivation::new(parity, a, b)
}

fn derivation_decomposition(ctx: &Ctx) -> Result<Outcome> {
    let mut rng = ctx.rng(7);
    let mut res: f64 = 0.0;
    for j in 0..20 {
        let n = 1 + j % 3;
        let parity = if j % 2 == 0 { Parity::Even } else { Parity::Odd };
        let v = random_derivation(&mut rng, n, parity)?;
        let found = decompose_derivation(n, parity, &|w| v.apply(w))?;
        res = res.max(found.max_abs_diff(&v)?);
    }
    let second = decompose_derivation(1, Parity::Even, &|w| w.partial(0)?.partial(0)).is_err();
    Ok(Outcome::within(res, 1e-12, "20 random derivations; ∂²/∂x² rejected").and(second, "∂²/∂x² was accepted as a derivation"))
}

fn d_squared_time(ctx: &Ctx) -> Result<Outcome> {
    let mut rng = ctx.rng(8);
    let all: Vec<usize> = (0..3).collect();
    let mut res: f64 = 0.0;
    for _ in 0..50 {
        let f0 = (0..4).map(|_| random::grassmann(&mut rng, 3, &all, false)).collect();
        let f1 = (0..4).map(|_| random::grassmann(&mut rng, 3, &all, true)).collect();
        let f = SuperFunction11::new(f0, f1)?;
        res = res.max(f.d().d().max_abs_diff(&f.dt()));
    }
    Ok(Outcome::within(res, 0.0, "50 random superfunctions of (t, θ), exact"))
}

fn even_flow_closed_form(ctx: &Ctx) -> Result<Outcome> {
    let x = VectorField::new(vec![ScalarField::var(1, 0)])?;
    let e = even_flow(&x, 1.0, &[1.0], &ctx.ode)?[0];
    Ok(Outcome::within((e - 1f64.exp()).abs(), 1e-8, format!("x(1) = {e}")))
}

/// Rotation and translation on ℝ².
pub fn rotation_translation() -> (VectorField, VectorField) {
    let rot = VectorField::new(vec![ScalarField::var(2, 1).scale(-1.0), ScalarField::var(2, 0)]).expect("dimension 2");
    let tr = VectorField::coordinate(2, 0);
    (rot, tr)
}

fn trotter_convergence(ctx: &Ctx) -> Result<Outcome> {
    let (x, y) = rotation_translation();
    let table = trotter_table(&x, &y, 1.0, &[1.0, 0.0], 10, &ctx.ode, ctx.exec)?;
    let last = table.rows.last().map(|r| r.error).unwrap_or(f64::NAN);
    Ok(Outcome::within(last, 5e-3, format!("fitted order {:.4} over n = 1..1024", table.fitted_order)).and(table.fitted_order >= 0.9, "fitted order below 0.9"))
}

fn trotter_group_law(ctx: &Ctx) -> Result<Outcome> {
    let (x, y) = rotation_translation();
    let sum = x.add(&y)?;
    let mut rng = ctx.rng(11);
    let mut res: f64 = 0.0;
    for _ in 0..5 {
        let p = random::point(&mut rng, 2, 1.0);
        let (t, s) = (random::quarter(&mut rng), random::quarter(&mut rng));
        let lhs = even_flow(&sum, t, &even_flow(&sum, s, &p, &ctx.ode)?, &ctx.ode)?;
        let rhs = even_flow(&sum, t + s, &p, &ctx.ode)?;
        res = res.max(lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    Ok(Outcome::within(res, 10.0 * ctx.ode.tol, "5 probes with rational times"))
}

fn odd_flow_composition(ctx: &Ctx) -> Result<Outcome> {
    let inst = calculus_instances(ctx, 12, 50);
    let res = worst(exec::map(ctx.exec, &inst, |(x, y, w)| {
        let composed = compose_odd_flows(&odd_flow(x), &odd_flow(y))?;
        composed.apply_via_diagonal(w)?.max_abs_diff(&odd_flow(&x.add(y)?).apply(w)?)
    }))?;
    Ok(Outcome::within(res, 1e-12, "50 random (X, Y, ω)"))
}

fn reparam_flow_check(ctx: &Ctx) -> Result<Outcome> {
    let x = VectorField::coordinate(1, 0);
    let f = ScalarField::constant(1, 1.0).add(&ScalarField::var(1, 0).mul(&ScalarField::var(1, 0))?)?;
    let mut res: f64 = 0.0;
    for t in [0.25, 0.5, 1.0, 1.25] {
        let got = reparam_flow_even(&f, &x, t, &[0.0], &ctx.ode)?[0];
        res = res.max((got - f64::tan(t)).abs());
    }
    let two = reparam_flow_even(&ScalarField::constant(1, 2.0), &x, 1.0, &[0.0], &ctx.ode)?[0];
    res = res.max((two - 2.0).abs());
    Ok(Outcome::within(res, 1e-6, "f = 1 + x² against tan t; f ≡ 2 against 2t"))
}

fn f_iota_flows(ctx: &Ctx) -> Result<Outcome> {
    let dy = DifferentialForm::dx(2, 1);
    let dx2 = DifferentialForm::dx(2, 0);
    let a = flow_f_iota(&dy, &VectorField::coordinate(2, 0), FIotaMode::Xf0)?;
    let b = flow_f_iota(&DifferentialForm::dx(1, 0), &VectorField::coordinate(1, 0), FIotaMode::Xf1)?;
    let mut res: f64 = 0.0;
    for t in [0.0, 0.5, 1.0, -0.75] {
        let want = dx2.add(&dy.scale(t))?;
        res = res.max(a.pullback(t, &dx2)?.max_abs_diff(&want)?);
        res = res.max(b.pullback(t, &DifferentialForm::dx(1, 0))?.max_abs_diff(&DifferentialForm::dx(1, 0).scale(t.exp()))?);
    }
    let mut rng = ctx.rng(14);
    for _ in 0..10 {
        let w = random::form(&mut rng, 2, 2);
        let w1 = random::form(&mut rng, 1, 2);
        let (t, s) = (random::quarter(&mut rng), random::quarter(&mut rng));
        res = res.max(a.pullback(t, &a.pullback(s, &w)?)?.max_abs_diff(&a.pullback(t + s, &w)?)?);
        res = res.max(b.pullback(t, &b.pullback(s, &w1)?)?.max_abs_diff(&b.pullback(t + s, &w1)?)?);
    }
    let flow_prop = a.flow_property_residual(0.5, &dx2, 1e-4)?.max(b.flow_property_residual(0.5, &DifferentialForm::dx(1, 0), 1e-4)?);
    Ok(Outcome::within(res, 1e-12, format!("hand instances and composition laws; flow equation residual {flow_prop:.2e}")).and(flow_prop < 1e-6, "flow equation fails"))
}

fn super_flow_equation(ctx: &Ctx) -> Result<Outcome> {
    let n = 2;
    let mut rng = ctx.rng(15);
    let points = vec![vec![0.25, -0.5], vec![0.5, 0.75]];
    let z = VectorField::new(vec![ScalarField::constant(n, 1.0), ScalarField::var(n, 0).scale(0.5)])?;
    let gens = [PiTDerivation::exterior_d(n), PiTDerivation::exterior_d(n).add(&PiTDerivation::contraction(&z))?];
    let mut res: f64 = 0.0;
    for g in &gens {
        let flow = super_flow(g)?;
        for _ in 0..3 {
            let w = random::form(&mut rng, n, 2);
            res = res.max(flow.d_flow_residual(0.5, &w, 1e-3, &points)?);
        }
    }
    Ok(Outcome::within(res, 1e-6, "X = d (nilpotent) and X = d + ι_Z (X² = 𝓛_Z)"))
}

fn odd_reparam_scaling(ctx: &Ctx) -> Result<Outcome> {
    let n = 2;
    let mut rng = ctx.rng(16);
    let forms: Vec<DifferentialForm> = (0..3).map(|_| random::form(&mut rng, n, 2)).collect();
    let points = vec![vec![0.25, 0.5]];
    let x = PiTDerivation::exterior_d(n);
    let c = 1.5;
    let good = verify_odd_reparam_lemma(c, &x, ScalingFamily::for_constant(c), &forms, &[0.0, 0.5, 1.0], &points)?;
    let bad = verify_odd_reparam_lemma(c, &x, ScalingFamily { lambda: c, mu: c }, &forms, &[0.0, 0.5, 1.0], &points)?;
    let res = good.distribution_residual.max(good.flow_residual);
    Ok(Outcome::within(res, 1e-10, "φ = (c²t, cθ), c = 1.5").and(bad.offending_probe.is_some(), "the family (ct, cθ) was not flagged"))
}

/// Ten random even connections, ranks up to 2|2, polynomial degree ≤ 2.
fn connections(ctx: &Ctx, salt: u64) -> Vec<GradedConnection> {
    let mut rng = ctx.rng(salt);
    (0..10)
        .map(|j| {
            let n = 1 + j % 2;
            let (p, q) = [(1, 1), (2, 1), (1, 2), (2, 2)][j % 4];
            random::connection(&mut rng, n, p, q, 2, true)
        })
        .collect()
}

fn odd_triviality(ctx: &Ctx) -> Result<Outcome> {
    let conns = connections(ctx, 17);
    let mut failures = 0usize;
    let mut detected = 0usize;
    let mut expected = 0usize;
    for (j, c) in conns.iter().enumerate() {
        let pit = PiTConnection::pullback(c);
        if !is_odd_trivial(&pit, 2, ctx.seed.wrapping_add(j as u64))?.odd_trivial {
            failures += 1;
        }
        let n = c.bundle().dim;
        let broken = pit.clone().with_entry(true, 0, 0, 0, DifferentialForm::dx(n, 0))?;
        expected += 1;
        detected += usize::from(is_odd_trivial(&broken, 0, 0)?.witness.is_some());
        if n >= 2 {
            let two_form = DifferentialForm::dx(n, 0).wedge(&DifferentialForm::dx(n, 1))?;
            let broken = pit.with_entry(false, 0, 0, 0, two_form)?;
            expected += 1;
            detected += usize::from(is_odd_trivial(&broken, 0, 0)?.witness.is_some());
        }
    }
    let detail = format!("{} pullbacks odd-trivial; {detected}/{expected} violations detected with witnesses", conns.len() - failures);
    Ok(Outcome::within(failures as f64, 0.0, detail).and(detected == expected, "a violation went undetected"))
}

fn random_sections(rng: &mut TestRng, b: GradedBundle) -> Vec<ScalarField> {
    (0..b.rank()).map(|_| random::scalar(rng, b.dim, 2)).collect()
}

fn section_size(s: &PiTSection) -> Result<f64> {
    s.max_abs_diff(&PiTSection::new(vec![DifferentialForm::zero(s.components.first().map(|w| w.dim()).unwrap_or(0)); s.components.len()]))
}

fn odd_flatness(ctx: &Ctx) -> Result<Outcome> {
    let conns = connections(ctx, 18);
    let mut rng = ctx.rng(118);
    let mut res: f64 = 0.0;
    for c in &conns {
        let b = c.bundle();
        let pit = PiTConnection::pullback(c);
        let sigma = PiTSection::pullback(&random_sections(&mut rng, b));
        let x = PiTDerivation::contraction(&random::vector_field(&mut rng, b.dim, 2));
        let y = PiTDerivation::contraction(&random::vector_field(&mut rng, b.dim, 2));
        // an even-form combination ω·ι_Z + ι_W
        let omega = random::form(&mut rng, b.dim, 1).parity_part(Parity::Even);
        let combo = PiTDerivation::contraction(&random::vector_field(&mut rng, b.dim, 1))
            .left_mul(&omega)?
            .add(&PiTDerivation::contraction(&random::vector_field(&mut rng, b.dim, 1)))?;
        for (u, v) in [(&x, &y), (&x, &x), (&x, &combo), (&combo, &combo)] {
            res = res.max(section_size(&odd_curvature(&pit, u, v, &sigma)?)?);
        }
    }
    Ok(Outcome::within(res, 0.0, "odd curvature on ι-type derivations and even-form combinations, exact"))
}

fn d_pairing(ctx: &Ctx) -> Result<Outcome> {
    let conns = connections(ctx, 19);
    let mut rng = ctx.rng(119);
    let mut res: f64 = 0.0;
    for c in &conns {
        let s = random_sections(&mut rng, c.bundle());
        res = res.max(section_size(&d_pairing_defect(&PiTConnection::pullback(c), c, &s)?)?);
    }
    Ok(Outcome::within(res, 0.0, "⟨∇̃(π*s), d⟩ − ∇s, exact"))
}

fn pullback_restrict(ctx: &Ctx) -> Result<Outcome> {
    let conns = connections(ctx, 20);
    let mut res: f64 = 0.0;
    let mut even = true;
    for c in &conns {
        let pit = PiTConnection::pullback(c);
        let back = restrict_connection(&pit)?;
        res = res.max(back.max_abs_diff(c)?);
        res = res.max(PiTConnection::pullback(&back).max_abs_diff(&pit)?);
        even &= back.is_even() && pit.is_even();
    }
    Ok(Outcome::within(res, 1e-12, "restrict∘pullback and pullback∘restrict on 10 connections").and(even, "evenness lost"))
}

/// ∇ = d + diag(a, b)dx on ℝ, rank 1|1.
pub fn diag_connection(a: f64, b: f64) -> GradedConnection {
    let bundle = GradedBundle::new(1, 1, 1).expect("valid ranks");
    let z = ScalarField::zero(1);
    GradedConnection::from_components(bundle, &[vec![vec![ScalarField::constant(1, a), z.clone()], vec![z, ScalarField::constant(1, b)]]]).expect("square matrix")
}

/// A superpath in ℝⁿ over Λ_3 (θ, η₁, η₂): body polynomial plus nilpotent and θ-linear parts.
fn random_superpath(rng: &mut TestRng, n: usize) -> Result<SuperPath> {
    let k = 3;
    let coords = (0..n)
        .map(|_| {
            (0..3)
                .map(|j| {
                    let mut c = random::grassmann(rng, k, &[0, 1, 2], false);
                    if j > 0 {
                        c.set_coeff(0, random::quarter(rng));
                    }
                    c
                })
                .collect()
        })
        .collect();
    SuperPath::new(k, (0.0, 1.0), coords, 0)
}

fn random_path(rng: &mut TestRng, n: usize, k: usize) -> Result<SuperPath> {
    let polys: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| random::quarter(rng)).collect()).collect();
    SuperPath::path(k, (0.0, 1.0), &polys)
}

fn unit_vector(k: usize, r: usize) -> Result<Vec<GrassmannElement>> {
    (0..r).map(|_| GrassmannElement::scalar(k, 1.0)).collect()
}

/// Transport instances: closed-form diag(a, b)dx along t, and random degree-2 connections
/// along random paths and superpaths. Entries are (label, tolerance, functor, curve, v₀).
fn transport_instances(ctx: &Ctx, salt: u64) -> Result<Vec<(String, f64, ConnectionTransport, SuperPath, Vec<GrassmannElement>)>> {
    let mut rng = ctx.rng(salt);
    let mut out = Vec::new();
    let diag = ConnectionTransport::on_m(&diag_connection(0.5, -0.25), ctx.ode);
    out.push(("diag path".to_string(), 1e-6, diag, SuperPath::path(3, (0.0, 2.0), &[vec![0.0, 1.0]])?, unit_vector(3, 2)?));
    let k = 3;
    let eta = GrassmannElement::generator(k, 1)?;
    let theta = GrassmannElement::generator(k, 0)?;
    let sp = SuperPath::new(k, (0.0, 2.0), vec![vec![&theta * &eta, GrassmannElement::one(k)?]], 0)?;
    out.push(("diag superpath".into(), 1e-6, ConnectionTransport::on_m(&diag_connection(0.5, -0.25), ctx.ode), sp, unit_vector(k, 2)?));
    for j in 0..2 {
        let conn = random::connection(&mut rng, 2, 1 + j, 1, 2, true);
        let r = conn.bundle().rank();
        let f = ConnectionTransport::on_m(&conn, ctx.ode);
        let curve = if j == 0 { random_path(&mut rng, 2, k)? } else { random_superpath(&mut rng, 2)? };
        let mut v0 = unit_vector(k, r)?;
        v0[0] = &v0[0] + &random::grassmann(&mut rng, k, &[1, 2], false);
        out.push((format!("random {}", if j == 0 { "path" } else { "superpath" }), 1e-5, f, curve, v0));
    }
    Ok(out)
}

fn per_instance<F>(ctx: &Ctx, salt: u64, f: F) -> Result<Outcome>
where
    F: Fn(&ConnectionTransport, &SuperPath, &[GrassmannElement]) -> Result<f64> + Sync,
{
    let inst = transport_instances(ctx, salt)?;
    let results = exec::map(ctx.exec, &inst, |(_, _, t, c, v)| f(t, c, v));
    let mut ok = true;
    let mut res: f64 = 0.0;
    let mut parts = Vec::new();
    for ((label, tol, ..), r) in inst.iter().zip(results) {
        let r = r?;
        ok &= r <= *tol;
        res = res.max(r);
        parts.push(format!("{label}: {r:.2e} (≤ {tol:.0e})"));
    }
    let tol = inst.iter().map(|i| i.1).fold(0.0, f64::max);
    Ok(Outcome { residual: res, tolerance: tol, ok, detail: parts.join("; ") })
}

fn transport_gluing(ctx: &Ctx) -> Result<Outcome> {
    per_instance(ctx, 21, |t, c, v| {
        let (a, b) = c.horizon();
        gluing_residual(t, c, v, a, 0.5 * (a + b), b)
    })
}

fn transport_constant(ctx: &Ctx) -> Result<Outcome> {
    let mut rng = ctx.rng(22);
    let conn = random::connection(&mut rng, 2, 2, 1, 2, true);
    let t = ConnectionTransport::on_m(&conn, ctx.ode);
    let k = 3;
    let mut point: Vec<GrassmannElement> = (0..2).map(|_| random::grassmann(&mut rng, k, &[1, 2], false)).collect();
    point[0].set_coeff(0, 0.5);
    let v0 = unit_vector(k, 3)?;
    let m = constant_path_residual(&t, point, 0, &v0, &[0.0, 0.5, 1.0])?;
    let pit = ConnectionTransport::on_pitm(&PiTConnection::pullback(&conn), ctx.ode);
    let pi = constant_path_residual(&pit, generic_point(&[0.25, -0.5])?, 2, &v0, &[0.0, 1.0])?;
    Ok(Outcome::within(m.max(pi), 0.0, "constant S-points in M and ΠTM, exact"))
}

fn transport_q_naturality(ctx: &Ctx) -> Result<Outcome> {
    let diag = q_naturality(&diag_connection(0.5, -0.25), &[vec![0.0, 1.0]], &[1.0, 1.0], &[0.0, 0.5, 1.0], &ctx.ode)?;
    let mut rng = ctx.rng(23);
    let conn = random::connection(&mut rng, 2, 2, 1, 2, true);
    let polys: Vec<Vec<f64>> = (0..2).map(|_| (0..3).map(|_| random::quarter(&mut rng)).collect()).collect();
    let rand = q_naturality(&conn, &polys, &[1.0, -0.5, 0.25], &[0.0, 0.5, 1.0], &ctx.ode)?;
    let ok = diag.body_residual.max(diag.theta_residual) <= 1e-8 && rand.body_residual.max(rand.theta_residual) <= 1e-6;
    let res = diag.body_residual.max(diag.theta_residual).max(rand.body_residual).max(rand.theta_residual);
    Ok(Outcome {
        residual: res,
        tolerance: 1e-6,
        ok,
        detail: format!("diag {:.2e} (θ {:.1e}), random {:.2e} (θ {:.1e})", diag.body_residual, diag.theta_residual, rand.body_residual, rand.theta_residual),
    })
}

fn transport_s_naturality(ctx: &Ctx) -> Result<Outcome> {
    // θ ↦ θ, η₁ ↦ η₁ + η₂, η₂ ↦ η₂/2
    let k = 3;
    let hom = GrassmannHom::new(
        k,
        vec![
            GrassmannElement::generator(k, 0)?,
            &GrassmannElement::generator(k, 1)? + &GrassmannElement::generator(k, 2)?,
            GrassmannElement::generator(k, 2)?.scale(0.5),
        ],
    )?;
    let collapse = GrassmannHom::new(k, vec![GrassmannElement::generator(k, 0)?, GrassmannElement::generator(k, 1)?, GrassmannElement::generator(k, 1)?])?;
    per_instance(ctx, 24, move |t, c, v| {
        let a = s_naturality_residual(t, c, v, &hom, &[0.0, 0.5, 1.0])?;
        let b = s_naturality_residual(t, c, v, &collapse, &[0.0, 1.0])?;
        Ok(a.max(b))
    })
}

fn transport_reparam(ctx: &Ctx) -> Result<Outcome> {
    per_instance(ctx, 25, |t, c, v| {
        let times = [0.0, 0.25, 0.5, 0.75];
        let even = reparam_residual(t, c, &Reparametrization::cubic(false), v, &times);
        let sup = reparam_residual(t, c, &Reparametrization::cubic(true), v, &times)?;
        // For curves with θ-dependence only the super family preserves D.
        let theta_dependent = c.coefficients().iter().flatten().any(|g| g.contains_generator(0));
        Ok(if theta_dependent { sup } else { even?.max(sup) })
    })
}

fn endpoint_isomorphism(ctx: &Ctx) -> Result<Outcome> {
    let inst = transport_instances(ctx, 26)?;
    let mut res: f64 = 0.0;
    let mut conds = Vec::new();
    for (label, _, t, c, _) in &inst {
        let p = if t.rank() == 2 { 1 } else { t.rank() - 1 };
        let rep = endpoint_map(t, c, 0.0, 1.0, p)?;
        res = res.max(rep.parity_block_violation);
        conds.push(format!("{label}: κ = {:.3}", rep.condition_number));
    }
    Ok(Outcome::within(res, 0.0, format!("parity blocks exact; {}", conds.join(", "))))
}

fn superpath_closed_form(ctx: &Ctx) -> Result<Outcome> {
    // Along c = t + θη for diag(a, b)dx: s = e^{−at}(1 − aθη) in the even slot.
    let (a, b) = (0.5, -0.25);
    let k = 2;
    let theta = GrassmannElement::generator(k, 0)?;
    let eta = GrassmannElement::generator(k, 1)?;
    let c = SuperPath::new(k, (0.0, 1.0), vec![vec![&theta * &eta, GrassmannElement::one(k)?]], 0)?;
    let t = ConnectionTransport::on_m(&diag_connection(a, b), ctx.ode);
    let times = [0.0, 0.5, 1.0];
    let s = t.transport(&c, &unit_vector(k, 2)?, &times)?;
    let mut res: f64 = 0.0;
    for (j, &tt) in times.iter().enumerate() {
        let v = s.value(j)?;
        for (slot, coef) in [(0usize, a), (1, b)] {
            let want = (&GrassmannElement::one(k)? - &(&theta * &eta).scale(coef)).scale((-coef * tt).exp());
            res = res.max(v[slot].max_abs_diff(&want));
        }
    }
    Ok(Outcome::within(res, 1e-8, "s(t) = e^{−at}(1 − aθη), e^{−bt}(1 − bθη)"))
}

fn odd_trivial_transport(ctx: &Ctx) -> Result<Outcome> {
    let mut rng = ctx.rng(28);
    let conn = random::connection(&mut rng, 2, 1, 1, 2, true);
    let lifted = LiftedTransport::new(ConnectionTransport::on_m(&conn, ctx.ode))?;
    let direct = ConnectionTransport::on_pitm(&PiTConnection::pullback(&conn), ctx.ode);
    let s = random_sections(&mut rng, conn.bundle());
    let sigma = PiTSection::pullback(&s);
    let x = random::vector_field(&mut rng, 2, 2);
    let start = generic_point(&[0.25, -0.25])?;
    let mut identity: f64 = 0.0;
    let mut theta: f64 = 0.0;
    let mut xi_dependence: f64 = 0.0;
    for f in [&lifted as &dyn TransportFunctor, &direct] {
        let fam = flow_transport(f, &FlowGenerator::Contraction(x.clone()), &sigma, &start, &[0.0], &ctx.ode)?;
        let v = fam.section.value(0)?;
        identity = identity.max(v.iter().zip(&fam.initial).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max));
        let fam = flow_transport(f, &FlowGenerator::Lie(x.clone()), &sigma, &start, &[0.0, 0.25, 0.5], &ctx.ode)?;
        theta = theta.max(fam.section.theta_component_max());
        // A pulled-back family does not see the odd coordinates of the starting point.
        for row in &fam.section.s1 {
            xi_dependence = xi_dependence.max(row.iter().map(|g| g.soul().norm()).fold(0.0, f64::max));
        }
    }
    let res = identity.max(theta).max(xi_dependence);
    Ok(Outcome::within(identity, 0.0, format!("ι_X family identity {identity:.1e}; 𝓛_X family θ-part {theta:.1e}, ξ-dependence {xi_dependence:.1e}"))
        .and(res <= 1e-10, "𝓛_X family is not pulled back"))
}

fn lift_project_roundtrip(ctx: &Ctx) -> Result<Outcome> {
    let mut rng = ctx.rng(29);
    let mut cases = Vec::new();
    for j in 0..20 {
        let conn = random::connection(&mut rng, 1 + j % 2, 1 + j % 2, 1, 2, true);
        let curve = if j % 2 == 0 { random_path(&mut rng, conn.bundle().dim, 3)? } else { random_superpath(&mut rng, conn.bundle().dim)? };
        cases.push((conn, curve));
    }
    let results = exec::map(ctx.exec, &cases, |(conn, curve)| -> Result<(f64, f64)> {
        let r = conn.bundle().rank();
        let v0 = unit_vector(3, r)?;
        let times = [0.0, 0.5, 1.0];
        let original = ConnectionTransport::on_m(conn, ctx.ode);
        let there_and_back = ProjectedTransport::new(LiftedTransport::new(ConnectionTransport::on_m(conn, ctx.ode))?)?;
        let a = original.transport(curve, &v0, &times)?;
        let b = there_and_back.transport(curve, &v0, &times)?;
        // the lifted functor agrees with transport of π*∇ on curves in ΠTM with odd data
        let lifted = LiftedTransport::new(ConnectionTransport::on_m(conn, ctx.ode))?;
        let pit = ConnectionTransport::on_pitm(&PiTConnection::pullback(conn), ctx.ode);
        let n = conn.bundle().dim;
        let k = curve.num_generators();
        let mut coords = curve.coefficients().to_vec();
        for i in 0..n {
            let g = GrassmannElement::generator(k, 1 + i % 2)?;
            coords.push(vec![g, GrassmannElement::generator(k, 0)?.scale(0.5)]);
        }
        let up = SuperPath::new(k, (0.0, 1.0), coords, n)?;
        let c = lifted.transport(&up, &v0, &times)?;
        let d = pit.transport(&up, &v0, &times)?;
        Ok((a.max_abs_diff(&b), c.max_abs_diff(&d)))
    });
    let mut rt: f64 = 0.0;
    let mut lift: f64 = 0.0;
    for r in results {
        let (x, y) = r?;
        rt = rt.max(x);
        lift = lift.max(y);
    }
    Ok(Outcome::within(rt, 1e-10, format!("20 cases; lifted functor vs transport of π*∇: {lift:.2e}")).and(lift <= 1e-8, "lifted functor differs from transport of π*∇"))
}

fn connection_roundtrip(ctx: &Ctx) -> Result<Outcome> {
    let mut rng = ctx.rng(30);
    let mut cases: Vec<(f64, GradedConnection)> = Vec::new();
    for (p, q) in [(1, 1), (2, 1)] {
        cases.push((1e-6, random::connection(&mut rng, 2, p, q, 0, true)));
        cases.push((1e-5, random::connection(&mut rng, 2, p, q, 2, true)));
    }
    let probes = vec![random::point(&mut rng, 2, 0.5), random::point(&mut rng, 2, 0.5)];
    let fields = vec![random::vector_field(&mut rng, 2, 1)];
    let mut ok = true;
    let mut res: f64 = 0.0;
    let mut parts = Vec::new();
    for (tol, c) in &cases {
        let rep = roundtrip_residual(c, &probes, &fields, ctx.exec)?;
        ok &= rep.max_discrepancy <= *tol && rep.evenness_defect <= *tol && rep.odd_trivial_defect <= *tol;
        res = res.max(rep.max_discrepancy);
        parts.push(format!("{}|{}: {:.2e}", c.bundle().p, c.bundle().q, rep.max_discrepancy));
    }
    Ok(Outcome { residual: res, tolerance: 1e-5, ok, detail: parts.join(", ") })
}

/// Maps library errors to the divergence exit path where appropriate.
pub fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::Divergence { .. })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_anchored() {
        let mut names: Vec<_> = CHECKS.iter().map(|c| c.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), CHECKS.len());
        assert!(CHECKS.len() >= 20);
        assert!(CHECKS.iter().all(|c| !c.anchor.is_empty()));
    }
}
