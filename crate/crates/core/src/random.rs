//! Seeded generators of random test data. Coefficients are multiples of 1/4 in [−1, 1],
//! so sums and products of the generated data stay exact in double precision.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundles::{GradedBundle, GradedConnection};
use crate::grassmann::GrassmannElement;
use crate::manifold_forms::{DifferentialForm, Polynomial, ScalarField, VectorField};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A multiple of 1/4 in [−1, 1].
pub fn quarter(rng: &mut TestRng) -> f64 {
    rng.gen_range(-4i32..=4) as f64 / 4.0
}

/// A random polynomial of total degree ≤ `degree` with about `terms` monomials.
pub fn polynomial(rng: &mut TestRng, dim: usize, degree: u32, terms: usize) -> Polynomial {
    let mut out = Polynomial::zero(dim);
    for _ in 0..terms {
        let mut exp = vec![0u32; dim];
        let total = rng.gen_range(0..=degree);
        for _ in 0..total {
            if dim > 0 {
                exp[rng.gen_range(0..dim)] += 1;
            }
        }
        out = out.add(&Polynomial::monomial(exp, quarter(rng)));
    }
    out
}

pub fn scalar(rng: &mut TestRng, dim: usize, degree: u32) -> ScalarField {
    polynomial(rng, dim, degree, 3).into()
}

pub fn vector_field(rng: &mut TestRng, dim: usize, degree: u32) -> VectorField {
    VectorField::new((0..dim).map(|_| scalar(rng, dim, degree)).collect()).expect("consistent dimensions")
}

/// A homogeneous form of the given degree with polynomial coefficients.
pub fn homogeneous_form(rng: &mut TestRng, dim: usize, degree: usize, poly_degree: u32) -> DifferentialForm {
    let masks: Vec<u32> = (0u32..(1 << dim)).filter(|m| m.count_ones() as usize == degree).collect();
    let mut terms = Vec::new();
    for &m in &masks {
        if rng.gen_bool(0.7) {
            terms.push((m, scalar(rng, dim, poly_degree)));
        }
    }
    DifferentialForm::from_terms(dim, terms).expect("masks within dimension")
}

/// A form with random homogeneous parts in every degree 0..=dim.
pub fn form(rng: &mut TestRng, dim: usize, poly_degree: u32) -> DifferentialForm {
    (0..=dim).fold(DifferentialForm::zero(dim), |acc, d| acc.add(&homogeneous_form(rng, dim, d, poly_degree)).expect("same dimension"))
}

pub fn point(rng: &mut TestRng, dim: usize, radius: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect()
}

/// Random element of Λ_k restricted to the generators in `allowed`, with a given parity.
pub fn grassmann(rng: &mut TestRng, k: usize, allowed: &[usize], odd: bool) -> GrassmannElement {
    let mut g = GrassmannElement::zero(k).expect("k within bounds");
    let allowed_mask: u32 = allowed.iter().map(|i| 1u32 << i).sum();
    for m in 0u32..(1 << k) {
        if m & !allowed_mask != 0 || (m.count_ones() % 2 == 1) != odd {
            continue;
        }
        g.set_coeff(m, quarter(rng));
    }
    g
}

/// ∇ = d + A with A a matrix of 1-forms with polynomial coefficients of degree ≤ `degree`;
/// block-diagonal when `even`.
pub fn connection(rng: &mut TestRng, dim: usize, p: usize, q: usize, degree: u32, even: bool) -> GradedConnection {
    let r = p + q;
    let bundle = GradedBundle::new(dim, p, q).expect("valid ranks");
    let a = (0..r)
        .map(|s| {
            (0..r)
                .map(|c| {
                    if even && (s < p) != (c < p) {
                        DifferentialForm::zero(dim)
                    } else {
                        homogeneous_form(rng, dim, 1, degree)
                    }
                })
                .collect()
        })
        .collect();
    GradedConnection::new(bundle, a).expect("1-form entries")
}

/// Picks one element uniformly.
pub fn choose<'a, T>(rng: &mut TestRng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty choice")
}
