//! Invariant coframes with constant structure coefficients, their exterior
//! derivative, the Levi-Civita connection of a constant metric, manifest I/O
//! and the built-in catalog.
//!
//! Structure constants follow `d e^i = -½ c^i_{jk} e^j ∧ e^k` with frame
//! brackets `[e_j, e_k] = c^i_{jk} e_i`. The su(2) factors are normalized by
//! `c^i_{jk} = -ε_{ijk}`, so `d e^1 = e^{23}` cyclically.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acs::AlmostComplexStructure;
use crate::error::{GeometryError, Result};
use crate::multilinear::{mask_indices, Form, Metric, C64, MAX_DIM};

#[derive(Clone, Debug)]
pub struct CoframeAlgebra {
    dim: usize,
    c: Vec<f64>,
    /// `d` of every basis monomial, indexed by degree then storage position.
    d_table: Vec<Vec<Form>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobiReport {
    pub holds: bool,
    /// `max_i |d(d e^i)|`.
    pub residual_d: f64,
    /// `max |Σ_cyc [[e_i, e_j], e_k]|`.
    pub residual_bracket: f64,
}

impl CoframeAlgebra {
    /// Builds the algebra from the full tensor `c[(i*n + j)*n + k] = c^i_{jk}`.
    pub fn from_tensor(dim: usize, c: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(GeometryError::Invalid(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        if c.len() != dim * dim * dim {
            return Err(GeometryError::Invalid("structure tensor has the wrong length".into()));
        }
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let a = c[(i * dim + j) * dim + k];
                    let b = c[(i * dim + k) * dim + j];
                    if !a.is_finite() || a != -b {
                        return Err(GeometryError::NotAntisymmetric { i: i + 1, j: j + 1, k: k + 1 });
                    }
                }
            }
        }
        let d_one: Vec<Form> = (0..dim)
            .map(|i| {
                let mut f = Form::zero(dim, 2);
                for j in 0..dim {
                    for k in (j + 1)..dim {
                        let v = c[(i * dim + j) * dim + k];
                        if v != 0.0 {
                            f.set(&[j, k], C64::new(-v, 0.0));
                        }
                    }
                }
                f
            })
            .collect();
        let d_table = (0..dim)
            .map(|k| {
                Form::basis_masks(dim, k)
                    .iter()
                    .map(|&m| {
                        let idx = mask_indices(m);
                        let mut out = Form::zero(dim, k + 1);
                        for slot in 0..idx.len() {
                            let sign = if slot % 2 == 0 { 1.0 } else { -1.0 };
                            let mut prod = Form::scalar(dim, C64::new(sign, 0.0));
                            for (r, &i) in idx.iter().enumerate() {
                                let factor = if r == slot { d_one[i].clone() } else { Form::monomial(dim, &[i]) };
                                prod = prod.wedge(&factor).expect("degrees fit");
                            }
                            out += &prod;
                        }
                        out
                    })
                    .collect()
            })
            .collect();
        Ok(CoframeAlgebra { dim, c, d_table })
    }

    /// Builds the algebra from 0-based `(i, j, k, c^i_{jk})` entries with `j < k`.
    pub fn from_entries(dim: usize, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut c = vec![0.0; dim * dim * dim];
        for &(i, j, k, v) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(GeometryError::Invalid(format!("index ({i},{j},{k}) out of range")));
            }
            if j >= k {
                return Err(GeometryError::NotAntisymmetric { i: i + 1, j: j + 1, k: k + 1 });
            }
            c[(i * dim + j) * dim + k] += v;
            c[(i * dim + k) * dim + j] -= v;
        }
        CoframeAlgebra::from_tensor(dim, c)
    }

    pub fn abelian(dim: usize) -> Self {
        CoframeAlgebra::from_tensor(dim, vec![0.0; dim * dim * dim]).expect("zero tensor is valid")
    }

    pub fn su2() -> Self {
        CoframeAlgebra::from_entries(3, &su2_entries(0, 1.0)).expect("su(2) constants are valid")
    }

    /// `su(2) ⊕ su(2)` with the second factor's constants multiplied by `scale`.
    pub fn su2_su2_scaled(scale: f64) -> Self {
        let mut e = su2_entries(0, 1.0);
        e.extend(su2_entries(3, scale));
        CoframeAlgebra::from_entries(6, &e).expect("su(2)+su(2) constants are valid")
    }

    pub fn su2_su2() -> Self {
        CoframeAlgebra::su2_su2_scaled(1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `c^i_{jk}`, 0-based.
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    pub fn tensor(&self) -> &[f64] {
        &self.c
    }

    /// 0-based `(i, j, k, c^i_{jk})` for `j < k` and nonzero values.
    pub fn entries(&self) -> Vec<(usize, usize, usize, f64)> {
        let n = self.dim;
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in (j + 1)..n {
                    let v = self.c(i, j, k);
                    if v != 0.0 {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        CoframeAlgebra::from_tensor(self.dim, self.c.iter().map(|v| v * s).collect()).expect("scaling keeps antisymmetry")
    }

    /// `[x, y]` for frame-coordinate vectors.
    pub fn bracket(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..n {
                if x[j] == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..n {
                    let v = self.c(i, j, k);
                    if v != 0.0 {
                        *o += x[j] * y[k] * v;
                    }
                }
            }
        }
        out
    }

    /// Invariant exterior derivative. Panics on a top-degree or wrong-dimension
    /// input; see [`CoframeAlgebra::try_d`].
    pub fn d(&self, a: &Form) -> Form {
        self.try_d(a).expect("d: incompatible form")
    }

    pub fn try_d(&self, a: &Form) -> Result<Form> {
        if a.dim() != self.dim {
            return Err(GeometryError::DimensionMismatch { left: self.dim, right: a.dim() });
        }
        if a.degree() >= self.dim {
            return Err(GeometryError::DegreeOverflow { degree: a.degree() + 1, dim: self.dim });
        }
        let table = &self.d_table[a.degree()];
        let mut out = Form::zero(self.dim, a.degree() + 1);
        for (p, &c) in a.coeffs().iter().enumerate() {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, t) in out.coeffs_mut().iter_mut().zip(table[p].coeffs()) {
                *o += c * t;
            }
        }
        Ok(out)
    }

    pub fn check_jacobi(&self) -> JacobiReport {
        let n = self.dim;
        let residual_d = if n < 3 {
            0.0
        } else {
            (0..n).map(|i| self.d(&self.d(&Form::monomial(n, &[i]))).max_abs()).fold(0.0, f64::max)
        };
        let mut residual_bracket: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += self.c(l, i, j) * self.c(m, l, k)
                                + self.c(l, j, k) * self.c(m, l, i)
                                + self.c(l, k, i) * self.c(m, l, j);
                        }
                        residual_bracket = residual_bracket.max(s.abs());
                    }
                }
            }
        }
        JacobiReport { holds: residual_d <= 1e-12, residual_d, residual_bracket }
    }

    /// The same algebra in the coframe `f^i = Σ_j A_{ij} e^j`.
    pub fn change_coframe(&self, a: &DMatrix<f64>) -> Result<Self> {
        let n = self.dim;
        let inv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| GeometryError::Invalid("coframe change is singular".into()))?;
        let back: Vec<Form> = (0..n).map(|k| Form::one_form_real(inv.row(k).transpose().as_slice())).collect();
        let mut c = vec![0.0; n * n * n];
        for i in 0..n {
            let mut df = Form::zero(n, 2);
            for j in 0..n {
                df += &(&self.d(&Form::monomial(n, &[j])) * a[(i, j)]);
            }
            let df = df.substitute(&back);
            for j in 0..n {
                for k in (j + 1)..n {
                    let v = -df.get(&[j, k]).re;
                    c[(i * n + j) * n + k] = v;
                    c[(i * n + k) * n + j] = -v;
                }
            }
        }
        CoframeAlgebra::from_tensor(n, c)
    }

    /// Levi-Civita connection of a constant metric, from the Koszul formula.
    pub fn levi_civita(&self, g: &Metric) -> Result<Connection> {
        let n = self.dim;
        if g.dim() != n {
            return Err(GeometryError::DimensionMismatch { left: n, right: g.dim() });
        }
        let gm = g.matrix();
        let ginv = gm
            .clone()
            .try_inverse()
            .ok_or_else(|| GeometryError::NotPositiveDefinite("singular metric".into()))?;
        // lowered[i][j][k] = g([e_i, e_j], e_k)
        let mut lowered = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    lowered[(i * n + j) * n + k] = (0..n).map(|l| self.c(l, i, j) * gm[(l, k)]).sum();
                }
            }
        }
        let cl = |i: usize, j: usize, k: usize| lowered[(i * n + j) * n + k];
        let mut gamma = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += ginv[(l, k)] * 0.5 * (cl(i, j, k) - cl(j, k, i) + cl(k, i, j));
                    }
                    gamma[(l * n + i) * n + j] = s;
                }
            }
        }
        Ok(Connection { dim: n, gamma, metric: gm.clone() })
    }
}

fn su2_entries(offset: usize, scale: f64) -> Vec<(usize, usize, usize, f64)> {
    // c^i_{jk} = -ε_{ijk}, stored with j < k.
    vec![
        (offset, offset + 1, offset + 2, -scale),
        (offset + 1, offset, offset + 2, scale),
        (offset + 2, offset, offset + 1, -scale),
    ]
}

/// `∇_{e_i} e_j = Γ^l_{ij} e_l` for an invariant metric.
#[derive(Clone, Debug)]
pub struct Connection {
    dim: usize,
    gamma: Vec<f64>,
    metric: DMatrix<f64>,
}

impl Connection {
    pub fn gamma(&self, l: usize, i: usize, j: usize) -> f64 {
        self.gamma[(l * self.dim + i) * self.dim + j]
    }

    /// `max |∇_{e_i}e_j − ∇_{e_j}e_i − [e_i, e_j]|`.
    pub fn torsion_residual(&self, alg: &CoframeAlgebra) -> f64 {
        let n = self.dim;
        let mut r: f64 = 0.0;
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    r = r.max((self.gamma(l, i, j) - self.gamma(l, j, i) - alg.c(l, i, j)).abs());
                }
            }
        }
        r
    }

    /// `max |g(∇_i e_j, e_k) + g(e_j, ∇_i e_k)|`.
    pub fn metric_residual(&self) -> f64 {
        let n = self.dim;
        let low = |i: usize, j: usize, k: usize| (0..n).map(|l| self.gamma(l, i, j) * self.metric[(l, k)]).sum::<f64>();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    r = r.max((low(i, j, k) + low(i, k, j)).abs());
                }
            }
        }
        r
    }

    /// `∇_{e_i} a` for each frame direction `i`. The frame-derivative term of
    /// an invariant form vanishes, leaving `∇_i e^l = -Γ^l_{ij} e^j` extended
    /// as a derivation.
    pub fn covariant_derivative(&self, a: &Form) -> Vec<Form> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let images: Vec<Form> = (0..n)
                    .map(|l| {
                        let coeffs: Vec<f64> = (0..n).map(|j| -self.gamma(l, i, j)).collect();
                        Form::one_form_real(&coeffs)
                    })
                    .collect();
                a.derive(&images)
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Manifests

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConstant {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormTerm {
    pub indices: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

/// JSON description of a model. Indices are 1-based; only `j < k` structure
/// constants are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub dimension: usize,
    pub structure_constants: Vec<StructureConstant>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub j: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<FormTerm>>,
    #[serde(rename = "Omega3", default, skip_serializing_if = "Option::is_none")]
    pub omega3: Option<Vec<FormTerm>>,
}

impl Manifest {
    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| {
            GeometryError::Manifest(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dimension;
        let bad = |msg: String| Err(GeometryError::Manifest(msg));
        if n == 0 || n > MAX_DIM {
            return bad(format!("dimension: {n} outside 1..={MAX_DIM}"));
        }
        let mut seen = std::collections::BTreeMap::new();
        for (p, s) in self.structure_constants.iter().enumerate() {
            if !s.value.is_finite() {
                return bad(format!("structure_constants[{p}]: non-finite value"));
            }
            for (name, v) in [("i", s.i), ("j", s.j), ("k", s.k)] {
                if v == 0 || v > n {
                    return bad(format!("structure_constants[{p}].{name}: index {v} outside 1..={n}"));
                }
            }
            if s.j == s.k {
                if s.value != 0.0 {
                    return Err(GeometryError::NotAntisymmetric { i: s.i, j: s.j, k: s.k });
                }
                continue;
            }
            let (j, k, v) = if s.j < s.k { (s.j, s.k, s.value) } else { (s.k, s.j, -s.value) };
            match seen.get(&(s.i, j, k)) {
                Some(&(prev, prev_ordered)) => {
                    if prev_ordered == (s.j < s.k) || prev != v {
                        return Err(GeometryError::NotAntisymmetric { i: s.i, j: s.j, k: s.k });
                    }
                }
                None => {
                    seen.insert((s.i, j, k), (v, s.j < s.k));
                }
            }
        }
        for (field, mat) in [("J", &self.j), ("metric", &self.metric)] {
            if let Some(rows) = mat {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return bad(format!("{field}: expected a {n}x{n} array"));
                }
                if rows.iter().flatten().any(|x| !x.is_finite()) {
                    return bad(format!("{field}: non-finite entry"));
                }
            }
        }
        if self.j.is_some() {
            if n != 6 {
                return bad("J: almost complex structures require dimension 6".into());
            }
            self.complex_structure()?;
        }
        if self.metric.is_some() {
            self.metric_matrix().map_err(|e| GeometryError::Manifest(format!("metric: {e}")))?;
        }
        for (field, terms, deg) in [("omega", &self.omega, 2usize), ("Omega3", &self.omega3, 3usize)] {
            if let Some(ts) = terms {
                for (p, t) in ts.iter().enumerate() {
                    if t.indices.len() != deg {
                        return bad(format!("{field}[{p}].indices: expected {deg} indices"));
                    }
                    if t.indices.iter().any(|&i| i == 0 || i > n) {
                        return bad(format!("{field}[{p}].indices: index outside 1..={n}"));
                    }
                    if !t.re.is_finite() || !t.im.is_finite() {
                        return bad(format!("{field}[{p}]: non-finite coefficient"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn algebra(&self) -> Result<CoframeAlgebra> {
        let n = self.dimension;
        let mut c = vec![0.0; n * n * n];
        for s in &self.structure_constants {
            if s.j == s.k {
                continue;
            }
            let (i, j, k) = (s.i - 1, s.j - 1, s.k - 1);
            c[(i * n + j) * n + k] = s.value;
            c[(i * n + k) * n + j] = -s.value;
        }
        CoframeAlgebra::from_tensor(n, c)
    }

    pub fn complex_structure(&self) -> Result<Option<AlmostComplexStructure>> {
        match &self.j {
            None => Ok(None),
            Some(rows) => {
                let m = DMatrix::from_fn(rows.len(), rows.len(), |r, c| rows[r][c]);
                AlmostComplexStructure::new(m).map(Some)
            }
        }
    }

    pub fn metric_matrix(&self) -> Result<Option<Metric>> {
        match &self.metric {
            None => Ok(None),
            Some(rows) => {
                let m = DMatrix::from_fn(rows.len(), rows.len(), |r, c| rows[r][c]);
                Metric::new(m, 1.0).map(Some)
            }
        }
    }

    pub fn omega_form(&self) -> Option<Form> {
        self.omega.as_ref().map(|t| terms_to_form(self.dimension, 2, t))
    }

    pub fn omega3_form(&self) -> Option<Form> {
        self.omega3.as_ref().map(|t| terms_to_form(self.dimension, 3, t))
    }

    pub fn from_parts(
        name: &str,
        alg: &CoframeAlgebra,
        j: Option<&DMatrix<f64>>,
        metric: Option<&DMatrix<f64>>,
        omega: Option<&Form>,
        omega3: Option<&Form>,
    ) -> Self {
        let rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect();
        Manifest {
            name: name.to_string(),
            dimension: alg.dim(),
            structure_constants: alg
                .entries()
                .into_iter()
                .map(|(i, j, k, value)| StructureConstant { i: i + 1, j: j + 1, k: k + 1, value })
                .collect(),
            j: j.map(rows),
            metric: metric.map(rows),
            omega: omega.map(form_to_terms),
            omega3: omega3.map(form_to_terms),
        }
    }
}

fn terms_to_form(dim: usize, degree: usize, terms: &[FormTerm]) -> Form {
    let mut f = Form::zero(dim, degree);
    for t in terms {
        let idx: Vec<usize> = t.indices.iter().map(|i| i - 1).collect();
        let mut m = Form::monomial(dim, &idx);
        m = &m * C64::new(t.re, t.im);
        f += &m;
    }
    f
}

fn form_to_terms(f: &Form) -> Vec<FormTerm> {
    f.terms()
        .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
        .map(|(m, c)| FormTerm { indices: mask_indices(m).iter().map(|i| i + 1).collect(), re: c.re, im: c.im })
        .collect()
}

// ---------------------------------------------------------------------------
// Catalog

pub const DEFAULT_PERTURBATION_SEED: u64 = 7;
pub const DEFAULT_PERTURBATION_MAGNITUDE: f64 = 0.05;

/// The nearly Kähler structure on S³×S³ found by the optimizer from the
/// product structure, stored as a manifest.
pub const S3S3_NK_FIXTURE: &str = include_str!("../fixtures/s3s3_nk.json");

pub fn catalog_names() -> Vec<&'static str> {
    vec!["torus6", "s3s3", "s3s3_perturbed", "s3s3_nk"]
}

/// Looks up a built-in manifest. `s3s3_perturbed` accepts an optional seed
/// suffix, e.g. `s3s3_perturbed:11`.
pub fn catalog(name: &str) -> Result<Manifest> {
    match name {
        "torus6" => Ok(torus6()),
        "s3s3" => Ok(s3s3()),
        "s3s3_nk" => Manifest::from_json(S3S3_NK_FIXTURE),
        "s3s3_perturbed" => s3s3_perturbed(DEFAULT_PERTURBATION_SEED, DEFAULT_PERTURBATION_MAGNITUDE),
        _ => {
            if let Some(seed) = name.strip_prefix("s3s3_perturbed:") {
                let seed: u64 = seed.parse().map_err(|_| GeometryError::UnknownCatalog(name.to_string()))?;
                s3s3_perturbed(seed, DEFAULT_PERTURBATION_MAGNITUDE)
            } else {
                Err(GeometryError::UnknownCatalog(name.to_string()))
            }
        }
    }
}

/// `J* e^{2k-1} = e^{2k}` on a flat coframe.
pub fn torus_j() -> DMatrix<f64> {
    let mut j = DMatrix::zeros(6, 6);
    for k in 0..3 {
        j[(2 * k, 2 * k + 1)] = 1.0;
        j[(2 * k + 1, 2 * k)] = -1.0;
    }
    j
}

/// `J* e^i = e^{i+3}`, `J* e^{i+3} = -e^i`: swaps the two su(2) factors.
pub fn product_j() -> DMatrix<f64> {
    let mut j = DMatrix::zeros(6, 6);
    for i in 0..3 {
        j[(i, i + 3)] = 1.0;
        j[(i + 3, i)] = -1.0;
    }
    j
}

pub fn torus6() -> Manifest {
    let id = DMatrix::identity(6, 6);
    Manifest::from_parts("torus6", &CoframeAlgebra::abelian(6), Some(&torus_j()), Some(&id), None, None)
}

pub fn s3s3() -> Manifest {
    let id = DMatrix::identity(6, 6);
    Manifest::from_parts("s3s3", &CoframeAlgebra::su2_su2(), Some(&product_j()), Some(&id), None, None)
}

/// `product_j() + E` with `‖E‖_F = magnitude · ‖J‖_F`, entries drawn
/// uniformly from `[-1, 1)` by ChaCha8 seeded with `seed`, then pulled back to
/// `J² = -Id` by the Newton iteration `X ← ½(X − X⁻¹)`.
pub fn perturbed_j(base: &DMatrix<f64>, seed: u64, magnitude: f64) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = base.nrows();
    let e = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let e = &e * (magnitude * base.norm() / e.norm());
    complex_structure_projection(&(base + e))
}

/// Newton iteration for the nearest square root of `-Id`.
pub fn complex_structure_projection(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut x = x.clone();
    for _ in 0..100 {
        if (&x * &x + &id).norm() < 1e-15 {
            return Ok(x);
        }
        let inv = x
            .clone()
            .try_inverse()
            .ok_or_else(|| GeometryError::Invalid("singular iterate in complex-structure projection".into()))?;
        x = (&x - inv) * 0.5;
    }
    let r = (&x * &x + &id).norm();
    if r < 1e-13 {
        Ok(x)
    } else {
        Err(GeometryError::NotComplexStructure(r))
    }
}

pub fn s3s3_perturbed(seed: u64, magnitude: f64) -> Result<Manifest> {
    let j = perturbed_j(&product_j(), seed, magnitude)?;
    let id = DMatrix::identity(6, 6);
    let name = format!("s3s3_perturbed:{seed}");
    Ok(Manifest::from_parts(&name, &CoframeAlgebra::su2_su2(), Some(&j), Some(&id), None, None))
}
