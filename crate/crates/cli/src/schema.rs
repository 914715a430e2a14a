//! JSON input formats and their conversion into library types.

use serde::Deserialize;
use supertransport::bundles::{GradedBundle, GradedConnection};
use supertransport::grassmann::GrassmannElement;
use supertransport::manifold_forms::{DifferentialForm, Polynomial, ScalarField, VectorField};
use supertransport::transport::SuperPath;

/// Problem with an input file, with a location (line:column or a field path).
#[derive(Debug)]
pub struct SchemaError {
    pub location: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

pub type SchemaResult<T> = std::result::Result<T, SchemaError>;

fn bad<T>(location: impl Into<String>, message: impl Into<String>) -> SchemaResult<T> {
    Err(SchemaError { location: location.into(), message: message.into() })
}

fn lib<T>(location: &str, r: supertransport::Result<T>) -> SchemaResult<T> {
    r.map_err(|e| SchemaError { location: location.into(), message: e.to_string() })
}

fn finite(location: &str, values: &[f64]) -> SchemaResult<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => bad(format!("{location}[{i}]"), "not a finite number"),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialJson {
    pub exp: Vec<u32>,
    pub c: f64,
}

/// A polynomial as a list of monomials.
pub type PolyJson = Vec<MonomialJson>;

fn poly(location: &str, dim: usize, p: &PolyJson) -> SchemaResult<ScalarField> {
    let mut out = Polynomial::zero(dim);
    for (j, m) in p.iter().enumerate() {
        let at = format!("{location}[{j}]");
        if m.exp.len() != dim {
            return bad(at, format!("exponent vector has length {}, expected {dim}", m.exp.len()));
        }
        finite(&at, &[m.c])?;
        out = out.add(&Polynomial::monomial(m.exp.clone(), m.c));
    }
    Ok(out.into())
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldJson {
    pub dim: usize,
    pub components: Vec<PolyJson>,
}

impl FieldJson {
    pub fn build(&self, location: &str) -> SchemaResult<VectorField> {
        if self.components.len() != self.dim {
            return bad(format!("{location}.components"), format!("{} components for dimension {}", self.components.len(), self.dim));
        }
        let comps = self.components.iter().enumerate().map(|(i, p)| poly(&format!("{location}.components[{i}]"), self.dim, p)).collect::<SchemaResult<Vec<_>>>()?;
        lib(location, VectorField::new(comps))
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormTermJson {
    pub indices: Vec<usize>,
    pub poly: PolyJson,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormJson {
    pub dim: usize,
    pub terms: Vec<FormTermJson>,
}

impl FormJson {
    pub fn build(&self, location: &str) -> SchemaResult<DifferentialForm> {
        let mut w = DifferentialForm::zero(self.dim);
        for (j, t) in self.terms.iter().enumerate() {
            let at = format!("{location}.terms[{j}]");
            let mut seen = t.indices.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != t.indices.len() {
                return bad(format!("{at}.indices"), "repeated index");
            }
            let f = poly(&format!("{at}.poly"), self.dim, &t.poly)?;
            let term = lib(&at, DifferentialForm::basis(self.dim, &t.indices, f))?;
            w = lib(&at, w.add(&term))?;
        }
        Ok(w)
    }
}

/// ∇ = d + Σᵢ Aᵢ dxⁱ on the trivial bundle of rank p|q over ℝ^dim; `A[i][row][col]`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionJson {
    pub dim: usize,
    pub p: usize,
    pub q: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<PolyJson>>>,
}

impl ConnectionJson {
    pub fn build(&self, location: &str) -> SchemaResult<GradedConnection> {
        let bundle = lib(location, GradedBundle::new(self.dim, self.p, self.q))?;
        let r = self.p + self.q;
        if self.a.len() != self.dim {
            return bad(format!("{location}.A"), format!("{} matrices for dimension {}", self.a.len(), self.dim));
        }
        let mut comps = Vec::with_capacity(self.dim);
        for (i, m) in self.a.iter().enumerate() {
            if m.len() != r || m.iter().any(|row| row.len() != r) {
                return bad(format!("{location}.A[{i}]"), format!("expected a {r}×{r} matrix"));
            }
            let mat = m
                .iter()
                .enumerate()
                .map(|(row, cells)| cells.iter().enumerate().map(|(col, p)| poly(&format!("{location}.A[{i}][{row}][{col}]"), self.dim, p)).collect::<SchemaResult<Vec<_>>>())
                .collect::<SchemaResult<Vec<_>>>()?;
            comps.push(mat);
        }
        lib(location, GradedConnection::from_components(bundle, &comps))
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrassmannTermJson {
    pub subset: Vec<usize>,
    pub coeff: f64,
}

/// A Grassmann algebra element; generator 0 is θ, 1.. the superpoint generators.
pub type GrassmannJson = Vec<GrassmannTermJson>;

pub fn grassmann(location: &str, k: usize, g: &GrassmannJson) -> SchemaResult<GrassmannElement> {
    let mut terms = Vec::with_capacity(g.len());
    for (j, t) in g.iter().enumerate() {
        let at = format!("{location}[{j}]");
        finite(&at, &[t.coeff])?;
        if let Some(&i) = t.subset.iter().find(|&&i| i >= k) {
            return bad(format!("{at}.subset"), format!("generator {i} out of range for {k} generators"));
        }
        terms.push((t.subset.clone(), t.coeff));
    }
    lib(location, GrassmannElement::from_terms(k, &terms))
}

/// A real number or a Grassmann element.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ValueJson {
    Real(f64),
    Grassmann(GrassmannJson),
}

pub fn value(location: &str, k: usize, v: &ValueJson) -> SchemaResult<GrassmannElement> {
    match v {
        ValueJson::Real(x) => {
            finite(location, &[*x])?;
            lib(location, GrassmannElement::scalar(k, *x))
        }
        ValueJson::Grassmann(g) => grassmann(location, k, g),
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Path,
    Superpath,
}

fn default_superpoint_generators() -> usize {
    2
}

/// `coords[c]` are the t-polynomial coefficients (lowest first) of coordinate c: real
/// numbers for paths, real numbers or Grassmann elements for superpaths.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathJson {
    pub kind: PathKind,
    pub coords: Vec<Vec<ValueJson>>,
    pub horizon: [f64; 2],
    #[serde(default = "default_superpoint_generators")]
    pub superpoint_generators: usize,
}

impl PathJson {
    /// Number of Grassmann generators: θ plus the superpoint generators.
    pub fn generators(&self) -> usize {
        1 + self.superpoint_generators
    }

    pub fn build(&self, location: &str) -> SchemaResult<SuperPath> {
        finite(&format!("{location}.horizon"), &self.horizon)?;
        if self.horizon[1] <= self.horizon[0] {
            return bad(format!("{location}.horizon"), "horizon must be an increasing interval");
        }
        let k = self.generators();
        if k > supertransport::grassmann::MAX_GENERATORS {
            return bad(format!("{location}.superpoint_generators"), "too many superpoint generators");
        }
        let mut coords = Vec::with_capacity(self.coords.len());
        for (c, p) in self.coords.iter().enumerate() {
            let mut poly = Vec::with_capacity(p.len());
            for (j, v) in p.iter().enumerate() {
                let at = format!("{location}.coords[{c}][{j}]");
                if self.kind == PathKind::Path && !matches!(v, ValueJson::Real(_)) {
                    return bad(at, "ordinary paths take real coefficients");
                }
                poly.push(value(&at, k, v)?);
            }
            coords.push(poly);
        }
        lib(location, SuperPath::new(k, (self.horizon[0], self.horizon[1]), coords, 0))
    }
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> SchemaResult<T> {
    serde_json::from_str(text).map_err(|e| SchemaError { location: format!("line {} column {}", e.line(), e.column()), message: e.to_string() })
}
