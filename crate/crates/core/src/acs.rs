//! Almost complex structures on 6-dimensional coframes.
//!
//! `J` is stored as a real 6×6 matrix whose row `i` holds the coefficients of
//! `J* e^i` (so column `j` holds `J e_j`). `Λ^{1,0}` is the `+i` eigenspace
//! of `J*`, and `T^{1,0}` the `+i` eigenspace of `J`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix3};

use crate::constants::VOLUME_PAIRING;
use crate::error::{GeometryError, Result};
use crate::frame::CoframeAlgebra;
use crate::linalg;
use crate::multilinear::{mask_indices, Form, C64};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bidegree {
    pub p: usize,
    pub q: usize,
}

impl Bidegree {
    pub fn new(p: usize, q: usize) -> Self {
        Bidegree { p, q }
    }

    pub fn degree(&self) -> usize {
        self.p + self.q
    }
}

/// A (1,0)-coframe `θ¹, θ², θ³` together with its conjugate and the dual
/// frame `Z_a, Z̄_a`.
#[derive(Clone, Debug)]
pub struct Frame10 {
    /// Rows `θ_a` (coefficients on `e^i`).
    theta: DMatrix<C64>,
    /// Columns `Z_1, Z_2, Z_3, Z̄_1, Z̄_2, Z̄_3` (frame coordinates).
    dual: DMatrix<C64>,
}

impl Frame10 {
    pub fn from_theta(theta: DMatrix<C64>) -> Result<Self> {
        if theta.nrows() != 3 || theta.ncols() != 6 {
            return Err(GeometryError::Invalid("a (1,0)-coframe needs 3 rows of 6 coefficients".into()));
        }
        let mut basis = DMatrix::zeros(6, 6);
        for a in 0..3 {
            for i in 0..6 {
                basis[(a, i)] = theta[(a, i)];
                basis[(a + 3, i)] = theta[(a, i)].conj();
            }
        }
        let dual = basis
            .try_inverse()
            .ok_or_else(|| GeometryError::Invalid("θ and θ̄ do not span the complexified coframe".into()))?;
        Ok(Frame10 { theta, dual })
    }

    pub fn theta_matrix(&self) -> &DMatrix<C64> {
        &self.theta
    }

    pub fn theta(&self, a: usize) -> Form {
        Form::one_form(&self.theta.row(a).iter().copied().collect::<Vec<_>>())
    }

    pub fn theta_bar(&self, a: usize) -> Form {
        self.theta(a).conj()
    }

    pub fn z(&self, a: usize) -> Vec<C64> {
        self.dual.column(a).iter().copied().collect()
    }

    pub fn z_bar(&self, a: usize) -> Vec<C64> {
        self.dual.column(a + 3).iter().copied().collect()
    }

    pub fn theta123(&self) -> Form {
        self.theta(0).wedge(&self.theta(1)).unwrap().wedge(&self.theta(2)).unwrap()
    }

    /// `θ̌_1 = θ^{23}`, `θ̌_2 = -θ^{13}`, `θ̌_3 = θ^{12}`; equivalently
    /// `θ̌_a = ι_{Z_a} θ^{123}`.
    pub fn theta_check(&self, a: usize) -> Form {
        match a {
            0 => self.theta(1).wedge(&self.theta(2)).unwrap(),
            1 => -&self.theta(0).wedge(&self.theta(2)).unwrap(),
            _ => self.theta(0).wedge(&self.theta(1)).unwrap(),
        }
    }

    /// The frame `θ'_a = Σ_b A_{ab} θ_b`.
    pub fn transformed(&self, a: &Matrix3<C64>) -> Result<Frame10> {
        let m = DMatrix::from_fn(3, 3, |r, c| a[(r, c)]);
        Frame10::from_theta(&m * &self.theta)
    }

    /// `θ_a(v)` for a frame-coordinate vector.
    pub fn coords10(&self, v: &[C64]) -> [C64; 3] {
        let mut out = [C64::new(0.0, 0.0); 3];
        for (a, o) in out.iter_mut().enumerate() {
            *o = (0..6).map(|i| self.theta[(a, i)] * v[i]).sum();
        }
        out
    }

    /// Components `(θ_a ∧ θ_b ∧ …)`-coefficients of a form, i.e. its values
    /// on `Z`/`Z̄` vectors. `slots[r]` selects `Z_a` (`a < 3`) or `Z̄_{a-3}`.
    pub fn eval(&self, f: &Form, slots: &[usize]) -> C64 {
        let vecs: Vec<Vec<C64>> = slots.iter().map(|&s| self.dual.column(s).iter().copied().collect()).collect();
        f.eval(&vecs).expect("slot count matches degree")
    }
}

#[derive(Clone, Debug)]
pub struct AlmostComplexStructure {
    j: DMatrix<f64>,
    p10: DMatrix<C64>,
    p01: DMatrix<C64>,
    pivot: [usize; 3],
    frame: Frame10,
    projectors: Vec<OnceLock<Vec<DMatrix<C64>>>>,
    real11: OnceLock<Vec<Form>>,
}

impl AlmostComplexStructure {
    /// Validates `J² = -Id` and builds the pivot (1,0)-frame that maximises
    /// `|det [θ; θ̄]|` over coordinate triples.
    pub fn new(j: DMatrix<f64>) -> Result<Self> {
        Self::build(j, None)
    }

    /// As [`AlmostComplexStructure::new`], with the frame pivot fixed. Keeping
    /// the pivot fixed makes the frame a smooth function of `J`.
    pub fn with_pivot(j: DMatrix<f64>, pivot: [usize; 3]) -> Result<Self> {
        Self::build(j, Some(pivot))
    }

    fn build(j: DMatrix<f64>, pivot: Option<[usize; 3]>) -> Result<Self> {
        if j.nrows() != 6 || j.ncols() != 6 {
            return Err(GeometryError::Invalid("J must be 6x6".into()));
        }
        let id = DMatrix::<f64>::identity(6, 6);
        let r = (&j * &j + &id).norm();
        if !(r <= 1e-12 * j.norm().max(1.0)) {
            return Err(GeometryError::NotComplexStructure(r));
        }
        let idc = DMatrix::<C64>::identity(6, 6);
        let jt = j.transpose().map(|x| C64::new(x, 0.0));
        let p10 = (&idc - &jt * I) * C64::new(0.5, 0.0);
        let p01 = (&idc + &jt * I) * C64::new(0.5, 0.0);
        let theta_for = |s: [usize; 3]| DMatrix::from_fn(3, 6, |a, i| p10[(i, s[a])]);
        let pivot = match pivot {
            Some(p) => p,
            None => {
                let mut best = (-1.0, [0, 1, 2]);
                for a in 0..6 {
                    for b in (a + 1)..6 {
                        for c in (b + 1)..6 {
                            let th = theta_for([a, b, c]);
                            let mut basis = DMatrix::zeros(6, 6);
                            for r in 0..3 {
                                for i in 0..6 {
                                    basis[(r, i)] = th[(r, i)];
                                    basis[(r + 3, i)] = th[(r, i)].conj();
                                }
                            }
                            let d = basis.determinant().norm();
                            if d > best.0 + 1e-9 {
                                best = (d, [a, b, c]);
                            }
                        }
                    }
                }
                best.1
            }
        };
        let frame = Frame10::from_theta(theta_for(pivot))?;
        Ok(AlmostComplexStructure {
            j,
            p10,
            p01,
            pivot,
            frame,
            projectors: (0..=6).map(|_| OnceLock::new()).collect(),
            real11: OnceLock::new(),
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn pivot(&self) -> [usize; 3] {
        self.pivot
    }

    pub fn frame(&self) -> &Frame10 {
        &self.frame
    }

    pub fn p10(&self) -> &DMatrix<C64> {
        &self.p10
    }

    pub fn p01(&self) -> &DMatrix<C64> {
        &self.p01
    }

    /// `J* α`, `(J*α)(X) = α(JX)`, on 1-forms.
    pub fn act_on_one_form(&self, a: &Form) -> Form {
        let v: Vec<C64> = (0..6).map(|j| (0..6).map(|i| a.coeffs()[i] * self.j[(i, j)]).sum()).collect();
        Form::one_form(&v)
    }

    /// `J` in the coframe `f = A e`: `A J A⁻¹`.
    pub fn transformed(&self, a: &DMatrix<f64>) -> Result<Self> {
        let inv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| GeometryError::Invalid("coframe change is singular".into()))?;
        AlmostComplexStructure::new(a * &self.j * inv)
    }

    fn projector_set(&self, k: usize) -> &Vec<DMatrix<C64>> {
        self.projectors[k].get_or_init(|| {
            let masks = Form::basis_masks(6, k);
            let dim = masks.len();
            let mut mats: Vec<DMatrix<C64>> = (0..=k).map(|_| DMatrix::zeros(dim, dim)).collect();
            let p10f: Vec<Form> = (0..6).map(|i| Form::one_form(&self.p10.column(i).iter().copied().collect::<Vec<_>>())).collect();
            let p01f: Vec<Form> = (0..6).map(|i| Form::one_form(&self.p01.column(i).iter().copied().collect::<Vec<_>>())).collect();
            for (col, &m) in masks.iter().enumerate() {
                // acc[c]: partial products carrying c factors of type (1,0)
                let mut acc: Vec<Form> = vec![Form::scalar(6, C64::new(1.0, 0.0))];
                for i in mask_indices(m) {
                    let deg = acc[0].degree() + 1;
                    let mut next: Vec<Form> = (0..=acc.len()).map(|_| Form::zero(6, deg)).collect();
                    for (c, f) in acc.iter().enumerate() {
                        next[c] += &f.wedge(&p01f[i]).unwrap();
                        next[c + 1] += &f.wedge(&p10f[i]).unwrap();
                    }
                    acc = next;
                }
                for (p, f) in acc.iter().enumerate() {
                    for (row, &v) in f.coeffs().iter().enumerate() {
                        mats[p][(row, col)] = v;
                    }
                }
            }
            mats
        })
    }

    /// `Π^{p,q} a`.
    pub fn project(&self, a: &Form, p: usize, q: usize) -> Result<Form> {
        let k = a.degree();
        if a.dim() != 6 {
            return Err(GeometryError::DimensionMismatch { left: 6, right: a.dim() });
        }
        if p + q != k || p > 3 || q > 3 {
            return Err(GeometryError::BadBidegree { p, q, degree: k });
        }
        let m = &self.projector_set(k)[p];
        let v = nalgebra::DVector::from_column_slice(a.coeffs());
        Form::from_coeffs(6, k, (m * v).iter().copied().collect())
    }

    /// Bidegree of `a` if it is pure to relative tolerance `tol`.
    pub fn pure_bidegree(&self, a: &Form, tol: f64) -> Option<Bidegree> {
        let k = a.degree();
        let scale = a.max_abs();
        let lo = k.saturating_sub(3);
        let hi = k.min(3);
        if scale == 0.0 {
            return Some(Bidegree::new(hi, k - hi));
        }
        (lo..=hi).map(|p| Bidegree::new(p, k - p)).find(|b| {
            let pr = self.project(a, b.p, b.q).unwrap();
            (&pr - a).max_abs() <= tol * scale
        })
    }

    /// The four bidegree components
    /// `(d^{2,-1} a, d^{1,0} a, d^{0,1} a, d^{-1,2} a)` of `da`.
    pub fn d_split(&self, alg: &CoframeAlgebra, a: &Form) -> Result<[Form; 4]> {
        let k = a.degree();
        let b = self.pure_bidegree(a, 1e-10).ok_or_else(|| {
            let best = (k.saturating_sub(3)..=k.min(3))
                .map(|p| (&self.project(a, p, k - p).unwrap() - a).max_abs())
                .fold(f64::INFINITY, f64::min);
            GeometryError::MixedBidegree(best)
        })?;
        let da = alg.try_d(a)?;
        let (p, q) = (b.p as isize, b.q as isize);
        let targets = [(p + 2, q - 1), (p + 1, q), (p, q + 1), (p - 1, q + 2)];
        let mut out: Vec<Form> = Vec::with_capacity(4);
        for (tp, tq) in targets {
            if (0..=3).contains(&tp) && (0..=3).contains(&tq) {
                out.push(self.project(&da, tp as usize, tq as usize)?);
            } else {
                out.push(Form::zero(6, k + 1));
            }
        }
        Ok([out[0].clone(), out[1].clone(), out[2].clone(), out[3].clone()])
    }

    /// Orthonormal (in coefficient space) basis of real (1,1)-forms.
    pub fn real11_basis(&self) -> &Vec<Form> {
        self.real11.get_or_init(|| {
            let masks = Form::basis_masks(6, 2);
            let cols: Vec<Vec<f64>> = masks
                .iter()
                .map(|&m| {
                    let f = Form::monomial(6, &mask_indices(m));
                    self.project(&f, 1, 1).unwrap().coeffs().iter().map(|c| c.re).collect()
                })
                .collect();
            let mat = DMatrix::from_fn(15, 15, |r, c| cols[c][r]);
            linalg::column_basis(&mat, 1e-9)
                .into_iter()
                .map(|v| Form::from_coeffs(6, 2, v.iter().map(|&x| C64::new(x, 0.0)).collect()).unwrap())
                .collect()
        })
    }

    /// Symmetric part of `g(X, Y) = ω(X, JY)` in frame indices.
    pub fn associated_metric(&self, omega: &Form) -> DMatrix<f64> {
        let w = two_form_matrix(omega);
        let g = w * &self.j;
        (&g + g.transpose()) * 0.5
    }

    /// Whether `ω(X, JX) > 0` for all `X ≠ 0`; returns the smallest eigenvalue
    /// of the associated symmetric form alongside.
    pub fn is_positive(&self, omega: &Form) -> (bool, f64) {
        let g = self.associated_metric(omega);
        let m = linalg::min_symmetric_eigenvalue(&g);
        let scale = g.amax().max(1e-300);
        (m > 1e-10 * scale, m)
    }

    /// Sign of the J-orientation `(i/8) θ^{123} ∧ θ̄^{123}` against `e^{1…6}`.
    pub fn orientation_sign(&self) -> f64 {
        let t = self.frame.theta123();
        let v = t.wedge(&t.conj()).unwrap().density() * VOLUME_PAIRING;
        if v.re >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// `W_{ij} = Re ω(e_i, e_j)`.
pub fn two_form_matrix(omega: &Form) -> DMatrix<f64> {
    let n = omega.dim();
    DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { omega.get(&[i, j]).re })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{product_j, torus_j};
    use proptest::prelude::*;

    fn random_j(x: &[f64]) -> AlmostComplexStructure {
        let a = DMatrix::from_fn(6, 6, |r, c| x[(r * 6 + c) % x.len()] * 0.4 + if r == c { 1.0 } else { 0.0 });
        AlmostComplexStructure::new(product_j()).unwrap().transformed(&a).unwrap()
    }

    fn random_form(k: usize, x: &[f64]) -> Form {
        let n = crate::multilinear::binomial(6, k);
        Form::from_coeffs(6, k, (0..n).map(|i| C64::new(x[i % x.len()], x[(i * 7 + 3) % x.len()])).collect()).unwrap()
    }

    #[test]
    fn projector_identities() {
        let j = AlmostComplexStructure::new(product_j()).unwrap();
        let id = DMatrix::<C64>::identity(6, 6);
        let cmax = |m: DMatrix<C64>| m.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(cmax(j.p10() + j.p01() - &id) < 1e-15);
        assert!(cmax(j.p10() * j.p10() - j.p10()) < 1e-15);
        assert!(cmax(j.p10().map(|c| c.conj()) - j.p01()) < 1e-15);
    }

    #[test]
    fn flat_dz_dzbar_is_type_11() {
        let j = AlmostComplexStructure::new(torus_j()).unwrap();
        let dz = Form::one_form(&[C64::new(1.0, 0.0), -I, C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert!((&j.project(&dz, 1, 0).unwrap() - &dz).max_abs() < 1e-15);
        let a = dz.wedge(&dz.conj()).unwrap();
        assert!((&j.project(&a, 1, 1).unwrap() - &a).max_abs() < 1e-15);
        assert!(j.project(&a, 2, 0).unwrap().max_abs() < 1e-15);
        assert!(matches!(j.project(&a, 2, 1), Err(GeometryError::BadBidegree { .. })));
    }

    /// Projection through an explicit eigenbasis of `J*`: write `a` in the
    /// basis of wedge products of eigen-covectors and keep the terms with `p`
    /// factors of type (1,0).
    fn eigen_projection(jm: &DMatrix<f64>, a: &Form, p: usize, seeds: &[f64]) -> Form {
        let jt = jm.transpose();
        let mut cov: Vec<Form> = Vec::new();
        for s in 0..3 {
            let y = nalgebra::DVector::from_fn(6, |i, _| seeds[(s * 6 + i) % seeds.len()] + if i == s { 2.0 } else { 0.0 });
            let x = &jt * &y;
            let v: Vec<C64> = (0..6).map(|i| C64::new(x[i], y[i])).collect();
            cov.push(Form::one_form(&v));
        }
        for s in 0..3 {
            cov.push(cov[s].conj());
        }
        let k = a.degree();
        let masks = Form::basis_masks(6, k);
        let dim = masks.len();
        let products: Vec<Form> = masks
            .iter()
            .map(|&m| {
                mask_indices(m).iter().fold(Form::scalar(6, C64::new(1.0, 0.0)), |acc, &s| acc.wedge(&cov[s]).unwrap())
            })
            .collect();
        let b = DMatrix::from_fn(dim, dim, |r, c| products[c].coeffs()[r]);
        let coords = b.lu().solve(&nalgebra::DVector::from_column_slice(a.coeffs())).unwrap();
        let mut out = Form::zero(6, k);
        for (c, &m) in masks.iter().enumerate() {
            if mask_indices(m).iter().filter(|&&s| s < 3).count() == p {
                out += &(&products[c] * coords[c]);
            }
        }
        out
    }

    #[test]
    fn projection_matches_eigenbasis_oracle_on_product_j() {
        let j = AlmostComplexStructure::new(product_j()).unwrap();
        let seeds = [0.3, -0.7, 0.2, 0.9, -0.1, 0.4, 0.8];
        let a = &Form::monomial(6, &[0, 1, 2]) - &Form::monomial(6, &[3, 4, 5]);
        for p in 0..=3 {
            let ours = j.project(&a, p, 3 - p).unwrap();
            let oracle = eigen_projection(j.matrix(), &a, p, &seeds);
            assert!((&ours - &oracle).max_abs() < 1e-12);
        }
        // e^{123} - e^{456} is not of pure type under this J
        assert!(j.project(&a, 3, 0).unwrap().max_abs() > 0.1);
    }

    #[test]
    fn integrable_torus_has_no_outer_parts() {
        let alg = CoframeAlgebra::abelian(6);
        let j = AlmostComplexStructure::new(torus_j()).unwrap();
        let t = j.frame().theta(0).wedge(&j.frame().theta_bar(1)).unwrap();
        let parts = j.d_split(&alg, &t).unwrap();
        assert!(parts.iter().all(|f| f.max_abs() == 0.0));
    }

    #[test]
    fn product_j_is_not_integrable() {
        let alg = CoframeAlgebra::su2_su2();
        let j = AlmostComplexStructure::new(product_j()).unwrap();
        let parts = j.d_split(&alg, &j.frame().theta_bar(0)).unwrap();
        assert!(parts[0].max_abs() > 0.1);
    }

    #[test]
    fn d_split_rejects_mixed_input() {
        let alg = CoframeAlgebra::su2_su2();
        let j = AlmostComplexStructure::new(product_j()).unwrap();
        let mixed = &j.frame().theta(0) + &j.frame().theta_bar(1);
        assert!(matches!(j.d_split(&alg, &mixed), Err(GeometryError::MixedBidegree(_))));
    }

    #[test]
    fn rejects_non_complex_structure() {
        assert!(matches!(AlmostComplexStructure::new(DMatrix::identity(6, 6)), Err(GeometryError::NotComplexStructure(_))));
    }

    #[test]
    fn real11_has_dimension_nine() {
        let j = AlmostComplexStructure::new(product_j()).unwrap();
        assert_eq!(j.real11_basis().len(), 9);
        for f in j.real11_basis() {
            assert!(f.is_real(1e-14));
            assert!((&j.project(f, 1, 1).unwrap() - f).max_abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn projectors_partition_identity(x in prop::collection::vec(-1.0f64..1.0, 40), k in 1usize..7) {
            let j = random_j(&x);
            let a = random_form(k, &x[3..]);
            let mut sum = Form::zero(6, k);
            for p in k.saturating_sub(3)..=k.min(3) {
                let pr = j.project(&a, p, k - p).unwrap();
                let twice = j.project(&pr, p, k - p).unwrap();
                prop_assert!((&twice - &pr).max_abs() < 1e-9 * a.max_abs().max(1.0));
                sum += &pr;
            }
            prop_assert!((&sum - &a).max_abs() < 1e-10 * a.max_abs().max(1.0));
        }

        #[test]
        fn conjugation_swaps_types(x in prop::collection::vec(-1.0f64..1.0, 40), k in 1usize..6) {
            let j = random_j(&x);
            let a = random_form(k, &x[5..]);
            for p in k.saturating_sub(3)..=k.min(3) {
                let lhs = j.project(&a.conj(), p, k - p).unwrap();
                let rhs = j.project(&a, k - p, p).unwrap().conj();
                prop_assert!((&lhs - &rhs).max_abs() < 1e-10 * a.max_abs().max(1.0));
            }
        }

        #[test]
        fn d_split_is_complete(x in prop::collection::vec(-1.0f64..1.0, 40), p in 0usize..3, q in 0usize..3) {
            let alg = CoframeAlgebra::su2_su2_scaled(1.0 + x[0].abs());
            let j = random_j(&x);
            let a = j.project(&random_form(p + q, &x[7..]), p, q).unwrap();
            prop_assume!(p + q >= 1);
            let parts = j.d_split(&alg, &a).unwrap();
            let mut sum = Form::zero(6, p + q + 1);
            for f in &parts {
                sum += f;
            }
            let da = alg.d(&a);
            prop_assert!((&sum - &da).max_abs() < 1e-10 * da.max_abs().max(1.0));
            // a (0,1)-form has no (-1,2) target
            if p == 0 && q == 1 {
                prop_assert_eq!(parts[3].max_abs(), 0.0);
            }
        }

        #[test]
        fn eigenbasis_oracle_agrees(x in prop::collection::vec(-1.0f64..1.0, 40), k in 1usize..6) {
            let j = random_j(&x);
            let a = random_form(k, &x[2..]);
            for p in k.saturating_sub(3)..=k.min(3) {
                let ours = j.project(&a, p, k - p).unwrap();
                let oracle = eigen_projection(j.matrix(), &a, p, &x[11..]);
                prop_assert!((&ours - &oracle).max_abs() < 1e-8 * a.max_abs().max(1.0));
            }
        }
    }
}
