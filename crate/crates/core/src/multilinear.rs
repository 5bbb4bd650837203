//! Exterior algebra over a real vector space of dimension at most 7, with
//! complex coefficients.
//!
//! A k-form is stored densely over the `C(n, k)` strictly increasing index
//! tuples, ordered lexicographically. Index tuples are encoded as bitmasks
//! (bit `i` set means `e^i` is a factor), which keeps sign computations to a
//! couple of popcounts.
//!
//! Forms are antisymmetric multilinear maps with the determinant convention:
//! `(a ∧ b)(X, Y) = a(X) b(Y) - a(Y) b(X)`, so `e^{i_1 … i_k}` evaluated on
//! `(e_{i_1}, …, e_{i_k})` is 1.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{GeometryError, Result};

pub type C64 = Complex64;

pub const MAX_DIM: usize = 7;

const ZERO: C64 = C64::new(0.0, 0.0);
#[cfg(test)]
const ONE: C64 = C64::new(1.0, 0.0);

struct BasisTable {
    masks: Vec<u8>,
    position: [usize; 1 << MAX_DIM],
}

fn tables() -> &'static Vec<Vec<BasisTable>> {
    static TABLES: OnceLock<Vec<Vec<BasisTable>>> = OnceLock::new();
    TABLES.get_or_init(|| {
        (0..=MAX_DIM)
            .map(|n| {
                (0..=n)
                    .map(|k| {
                        let mut tuples = Vec::new();
                        let mut current = Vec::with_capacity(k);
                        collect_tuples(n, k, 0, &mut current, &mut tuples);
                        let masks: Vec<u8> = tuples
                            .iter()
                            .map(|t| t.iter().fold(0u8, |m, &i| m | (1 << i)))
                            .collect();
                        let mut position = [usize::MAX; 1 << MAX_DIM];
                        for (p, &m) in masks.iter().enumerate() {
                            position[m as usize] = p;
                        }
                        BasisTable { masks, position }
                    })
                    .collect()
            })
            .collect()
    })
}

fn collect_tuples(n: usize, k: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() == k {
        out.push(current.clone());
        return;
    }
    for i in start..n {
        current.push(i);
        collect_tuples(n, k, i + 1, current, out);
        current.pop();
    }
}

fn table(n: usize, k: usize) -> &'static BasisTable {
    &tables()[n][k]
}

/// Number of strictly increasing k-tuples in `0..n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        0
    } else {
        table(n, k).masks.len()
    }
}

/// Sign of the permutation sorting the concatenation of the index sets `a`
/// and `b` (which must be disjoint).
#[inline]
pub fn concat_sign(a: u8, b: u8) -> f64 {
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        inversions += (a as u32 >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Expands a bitmask into its increasing index list.
pub fn mask_indices(mask: u8) -> Vec<usize> {
    (0..8).filter(|i| mask & (1 << i) != 0).collect()
}

/// A complex-coefficient exterior form of fixed degree.
#[derive(Clone, PartialEq)]
pub struct Form {
    dim: usize,
    degree: usize,
    coeffs: Vec<C64>,
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form(n={}, k={}) [", self.dim, self.degree)?;
        let mut first = true;
        for (mask, c) in self.terms() {
            if c.norm() == 0.0 {
                continue;
            }
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            let idx: Vec<String> = mask_indices(mask).iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "e{}: {:.6}{:+.6}i", idx.join(""), c.re, c.im)?;
        }
        write!(f, "]")
    }
}

impl Form {
    pub fn zero(dim: usize, degree: usize) -> Self {
        assert!(dim <= MAX_DIM && degree <= dim, "form shape out of range");
        Form { dim, degree, coeffs: vec![ZERO; binomial(dim, degree)] }
    }

    pub fn scalar(dim: usize, value: C64) -> Self {
        let mut f = Form::zero(dim, 0);
        f.coeffs[0] = value;
        f
    }

    /// `e^{i_1} ∧ … ∧ e^{i_k}` for 0-based indices in any order; repeated
    /// indices give the zero form.
    pub fn monomial(dim: usize, indices: &[usize]) -> Self {
        let mut f = Form::zero(dim, indices.len());
        if let Some((mask, sign)) = sorted_mask(indices) {
            f.coeffs[table(dim, indices.len()).position[mask as usize]] = C64::new(sign, 0.0);
        }
        f
    }

    /// The 1-form `Σ v_i e^i`.
    pub fn one_form(coeffs: &[C64]) -> Self {
        let mut f = Form::zero(coeffs.len(), 1);
        f.coeffs.copy_from_slice(coeffs);
        f
    }

    pub fn one_form_real(coeffs: &[f64]) -> Self {
        let c: Vec<C64> = coeffs.iter().map(|&x| C64::new(x, 0.0)).collect();
        Form::one_form(&c)
    }

    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<C64>) -> Result<Self> {
        if dim > MAX_DIM || degree > dim {
            return Err(GeometryError::DegreeOverflow { degree, dim });
        }
        if coeffs.len() != binomial(dim, degree) {
            return Err(GeometryError::Invalid(format!(
                "expected {} coefficients for a {degree}-form in dimension {dim}, got {}",
                binomial(dim, degree),
                coeffs.len()
            )));
        }
        Ok(Form { dim, degree, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// Index masks of the basis monomials, in storage order.
    pub fn basis_masks(dim: usize, degree: usize) -> &'static [u8] {
        &table(dim, degree).masks
    }

    pub fn terms(&self) -> impl Iterator<Item = (u8, C64)> + '_ {
        table(self.dim, self.degree).masks.iter().copied().zip(self.coeffs.iter().copied())
    }

    /// Coefficient of `e^{indices}`, with the sign of the sorting permutation.
    pub fn get(&self, indices: &[usize]) -> C64 {
        assert_eq!(indices.len(), self.degree);
        match sorted_mask(indices) {
            Some((mask, sign)) => self.coeffs[table(self.dim, self.degree).position[mask as usize]] * sign,
            None => ZERO,
        }
    }

    pub fn get_mask(&self, mask: u8) -> C64 {
        self.coeffs[table(self.dim, self.degree).position[mask as usize]]
    }

    pub fn set(&mut self, indices: &[usize], value: C64) {
        assert_eq!(indices.len(), self.degree);
        if let Some((mask, sign)) = sorted_mask(indices) {
            let p = table(self.dim, self.degree).position[mask as usize];
            self.coeffs[p] = value * sign;
        }
    }

    pub fn add_mask(&mut self, mask: u8, value: C64) {
        let p = table(self.dim, self.degree).position[mask as usize];
        self.coeffs[p] += value;
    }

    /// Coefficient of the top-degree monomial `e^{1…n}`.
    pub fn density(&self) -> C64 {
        assert_eq!(self.degree, self.dim, "density of a non-top form");
        self.coeffs[0]
    }

    pub fn conj(&self) -> Form {
        self.map(|c| c.conj())
    }

    pub fn re(&self) -> Form {
        self.map(|c| C64::new(c.re, 0.0))
    }

    pub fn im(&self) -> Form {
        self.map(|c| C64::new(c.im, 0.0))
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Form {
        Form { dim: self.dim, degree: self.degree, coeffs: self.coeffs.iter().map(|&c| f(c)).collect() }
    }

    pub fn scale(&self, s: C64) -> Form {
        self.map(|c| c * s)
    }

    pub fn scale_real(&self, s: f64) -> Form {
        self.map(|c| c * s)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.im.abs() <= tol)
    }

    fn check_same_shape(&self, other: &Form) -> Result<()> {
        if self.dim != other.dim {
            return Err(GeometryError::DimensionMismatch { left: self.dim, right: other.dim });
        }
        if self.degree != other.degree {
            return Err(GeometryError::DegreeMismatch { left: self.degree, right: other.degree });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Form) -> Result<Form> {
        self.check_same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Form { dim: self.dim, degree: self.degree, coeffs })
    }

    pub fn wedge(&self, other: &Form) -> Result<Form> {
        if self.dim != other.dim {
            return Err(GeometryError::DimensionMismatch { left: self.dim, right: other.dim });
        }
        let degree = self.degree + other.degree;
        if degree > self.dim {
            return Err(GeometryError::DegreeOverflow { degree, dim: self.dim });
        }
        let mut out = Form::zero(self.dim, degree);
        let target = table(self.dim, degree);
        for (ma, ca) in self.terms() {
            if ca == ZERO {
                continue;
            }
            for (mb, cb) in other.terms() {
                if mb & ma != 0 || cb == ZERO {
                    continue;
                }
                out.coeffs[target.position[(ma | mb) as usize]] += ca * cb * concat_sign(ma, mb);
            }
        }
        Ok(out)
    }

    /// Interior product `ι_v a`, `(ι_v a)(X_2, …) = a(v, X_2, …)`.
    pub fn contract(&self, v: &[C64]) -> Result<Form> {
        if self.degree == 0 {
            return Err(GeometryError::ContractScalar);
        }
        if v.len() != self.dim {
            return Err(GeometryError::DimensionMismatch { left: self.dim, right: v.len() });
        }
        let mut out = Form::zero(self.dim, self.degree - 1);
        let target = table(self.dim, self.degree - 1);
        for (m, c) in self.terms() {
            if c == ZERO {
                continue;
            }
            let mut rest = m;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let below = (m & ((1u8 << i) - 1)).count_ones();
                let sign = if below.is_multiple_of(2) { 1.0 } else { -1.0 };
                out.coeffs[target.position[(m & !(1 << i)) as usize]] += c * v[i] * sign;
            }
        }
        Ok(out)
    }

    pub fn contract_real(&self, v: &[f64]) -> Result<Form> {
        let c: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.contract(&c)
    }

    /// Evaluates the form on `degree` vectors.
    pub fn eval(&self, vectors: &[Vec<C64>]) -> Result<C64> {
        if vectors.len() != self.degree {
            return Err(GeometryError::Invalid(format!(
                "a {}-form needs {} arguments, got {}",
                self.degree,
                self.degree,
                vectors.len()
            )));
        }
        let mut f = self.clone();
        for v in vectors {
            f = f.contract(v)?;
        }
        Ok(f.coeffs[0])
    }

    /// Substitutes `e^i ↦ images[i]` multiplicatively (pullback under a
    /// linear change of coframe).
    pub fn substitute(&self, images: &[Form]) -> Form {
        let dim = images.first().map(|f| f.dim).unwrap_or(self.dim);
        let mut out = Form::zero(dim, self.degree);
        for (m, c) in self.terms() {
            if c == ZERO {
                continue;
            }
            let mut prod = Form::scalar(dim, c);
            for i in mask_indices(m) {
                prod = prod.wedge(&images[i]).expect("substitution shapes agree");
            }
            out += &prod;
        }
        out
    }

    /// Extends the map `e^i ↦ images[i]` on 1-forms as a degree-preserving
    /// derivation.
    pub fn derive(&self, images: &[Form]) -> Form {
        let mut out = Form::zero(self.dim, self.degree);
        for (m, c) in self.terms() {
            if c == ZERO {
                continue;
            }
            let idx = mask_indices(m);
            for slot in 0..idx.len() {
                let mut prod = Form::scalar(self.dim, c);
                for (r, &i) in idx.iter().enumerate() {
                    let factor = if r == slot { images[i].clone() } else { Form::monomial(self.dim, &[i]) };
                    prod = prod.wedge(&factor).expect("derivation shapes agree");
                }
                out += &prod;
            }
        }
        out
    }

    /// Places a form on the first `self.dim` coordinates of a larger space.
    pub fn extend(&self, dim: usize) -> Form {
        assert!(dim >= self.dim && dim <= MAX_DIM);
        let mut out = Form::zero(dim, self.degree);
        for (m, c) in self.terms() {
            out.add_mask(m, c);
        }
        out
    }
}

fn sorted_mask(indices: &[usize]) -> Option<(u8, f64)> {
    let mut mask = 0u8;
    let mut sign = 1.0;
    for &i in indices {
        if mask & (1 << i) != 0 {
            return None;
        }
        if (mask >> (i + 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        mask |= 1 << i;
    }
    Some((mask, sign))
}

impl AddAssign<&Form> for Form {
    fn add_assign(&mut self, rhs: &Form) {
        assert!(self.dim == rhs.dim && self.degree == rhs.degree, "form shape mismatch in +=");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl Add for &Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        self.try_add(rhs).expect("form shape mismatch in +")
    }
}

impl Sub for &Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        self.try_add(&-rhs).expect("form shape mismatch in -")
    }
}

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        self.map(|c| -c)
    }
}

impl Mul<C64> for &Form {
    type Output = Form;
    fn mul(self, rhs: C64) -> Form {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Form {
    type Output = Form;
    fn mul(self, rhs: f64) -> Form {
        self.scale_real(rhs)
    }
}

/// A constant Riemannian metric in coframe indices together with an
/// orientation relative to `e^1 ∧ … ∧ e^n`.
#[derive(Clone, Debug)]
pub struct Metric {
    g: DMatrix<f64>,
    inverse: DMatrix<f64>,
    sqrt_det: f64,
    orientation: f64,
}

impl Metric {
    pub fn new(g: DMatrix<f64>, orientation: f64) -> Result<Self> {
        let n = g.nrows();
        if n != g.ncols() || n > MAX_DIM {
            return Err(GeometryError::Invalid(format!("metric must be square of size <= {MAX_DIM}")));
        }
        let scale = g.amax().max(1.0);
        if (&g - g.transpose()).amax() > 1e-12 * scale {
            return Err(GeometryError::NotPositiveDefinite("metric is not symmetric".into()));
        }
        let chol = g
            .clone()
            .cholesky()
            .ok_or_else(|| GeometryError::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        let min_eig = g.clone().symmetric_eigenvalues().min();
        if min_eig <= 1e-12 * scale {
            return Err(GeometryError::NotPositiveDefinite(format!("smallest eigenvalue {min_eig:e}")));
        }
        let sqrt_det = chol.l().diagonal().product();
        let inverse = chol.inverse();
        let orientation = if orientation < 0.0 { -1.0 } else { 1.0 };
        Ok(Metric { g, inverse, sqrt_det, orientation })
    }

    pub fn euclidean(n: usize) -> Self {
        Metric::new(DMatrix::identity(n, n), 1.0).expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn volume_form(&self) -> Form {
        let n = self.dim();
        Form::scalar(n, C64::new(self.orientation * self.sqrt_det, 0.0)).hodge_top()
    }

    /// Gram coefficient `⟨e^I, e^J⟩` on k-forms: the `I×J` minor of `g^{-1}`.
    fn gram(&self, a: u8, b: u8) -> f64 {
        let ia = mask_indices(a);
        let ib = mask_indices(b);
        let k = ia.len();
        if k == 0 {
            return 1.0;
        }
        DMatrix::from_fn(k, k, |r, c| self.inverse[(ia[r], ib[c])]).determinant()
    }

    /// Complex-bilinear inner product induced on forms of equal degree.
    pub fn inner(&self, a: &Form, b: &Form) -> Result<C64> {
        a.check_same_shape(b)?;
        if a.dim != self.dim() {
            return Err(GeometryError::DimensionMismatch { left: a.dim, right: self.dim() });
        }
        let mut acc = ZERO;
        for (ma, ca) in a.terms() {
            if ca == ZERO {
                continue;
            }
            for (mb, cb) in b.terms() {
                if cb == ZERO {
                    continue;
                }
                acc += ca * cb * self.gram(ma, mb);
            }
        }
        Ok(acc)
    }

    /// Hodge star, characterised by `a ∧ *b = ⟨a, b⟩ Vol_g`.
    pub fn hodge_star(&self, a: &Form) -> Result<Form> {
        let n = self.dim();
        if a.dim != n {
            return Err(GeometryError::DimensionMismatch { left: a.dim, right: n });
        }
        let full: u8 = if n == 8 { 0xff } else { ((1u16 << n) - 1) as u8 };
        let mut out = Form::zero(n, n - a.degree);
        let scale = self.orientation * self.sqrt_det;
        for &mi in Form::basis_masks(n, a.degree) {
            let mut raised = ZERO;
            for (mj, cj) in a.terms() {
                if cj != ZERO {
                    raised += cj * self.gram(mi, mj);
                }
            }
            if raised == ZERO {
                continue;
            }
            let comp = full & !mi;
            out.add_mask(comp, raised * concat_sign(mi, comp) * scale);
        }
        Ok(out)
    }
}

impl Form {
    /// Treats a 0-form `c` as `c e^{1…n}`.
    fn hodge_top(&self) -> Form {
        let mut out = Form::zero(self.dim, self.dim);
        out.coeffs[0] = self.coeffs[0];
        out
    }
}
