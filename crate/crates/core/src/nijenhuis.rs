//! The Nijenhuis tensor by two routes, the canonical volume form `Vol_I` and
//! the density Ψ.
//!
//! `N*: Λ^{0,1} → Λ^{2,0}` is stored as a 3×3 matrix in the bases `θ̄_a` and
//! `θ̌_b` (see [`Frame10::theta_check`]): `N*(θ̄_a) = Σ_b M_{ba} θ̌_b`.

use nalgebra::Matrix3;

use crate::acs::{AlmostComplexStructure, Frame10};
use crate::constants::{CARTAN_SIGN, TOL_NONDEGENERATE, VOLUME_PAIRING};
use crate::error::{GeometryError, Result};
use crate::frame::CoframeAlgebra;
use crate::multilinear::{Form, C64};

#[derive(Clone, Debug)]
pub struct NijenhuisTensor {
    matrix: Matrix3<C64>,
    frame: Frame10,
}

fn zcheck_matrix(value: impl Fn(usize, usize, usize) -> C64) -> Matrix3<C64> {
    let mut m = Matrix3::zeros();
    for a in 0..3 {
        m[(0, a)] = value(a, 1, 2);
        m[(1, a)] = -value(a, 0, 2);
        m[(2, a)] = value(a, 0, 1);
    }
    m
}

impl NijenhuisTensor {
    /// `N* = d^{2,-1}` on `Λ^{0,1}`, in the structure's pivot frame.
    pub fn via_d(alg: &CoframeAlgebra, j: &AlmostComplexStructure) -> Self {
        Self::via_d_in_frame(alg, j.frame())
    }

    pub fn via_d_in_frame(alg: &CoframeAlgebra, frame: &Frame10) -> Self {
        let dtb: Vec<Form> = (0..3).map(|a| alg.d(&frame.theta_bar(a))).collect();
        let matrix = zcheck_matrix(|a, b, c| frame.eval(&dtb[a], &[b, c]));
        NijenhuisTensor { matrix, frame: frame.clone() }
    }

    /// `β ∘ N` with `N(X, Y) = P^{0,1}[P^{1,0}X, P^{1,0}Y]`, from brackets.
    pub fn via_brackets(alg: &CoframeAlgebra, j: &AlmostComplexStructure) -> Self {
        Self::via_brackets_in_frame(alg, j.frame())
    }

    pub fn via_brackets_in_frame(alg: &CoframeAlgebra, frame: &Frame10) -> Self {
        let z: Vec<Vec<C64>> = (0..3).map(|a| frame.z(a)).collect();
        let mut br = vec![vec![vec![C64::new(0.0, 0.0); 6]; 3]; 3];
        for b in 0..3 {
            for c in 0..3 {
                br[b][c] = alg.bracket(&z[b], &z[c]);
            }
        }
        let tb: Vec<Vec<C64>> = (0..3).map(|a| frame.theta_bar(a).coeffs().to_vec()).collect();
        // θ̄_a annihilates T^{1,0}, so θ̄_a ∘ P^{0,1} = θ̄_a
        let matrix = zcheck_matrix(|a, b, c| (0..6).map(|i| tb[a][i] * br[b][c][i]).sum());
        NijenhuisTensor { matrix, frame: frame.clone() }
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.matrix
    }

    pub fn frame(&self) -> &Frame10 {
        &self.frame
    }

    pub fn det(&self) -> C64 {
        self.matrix.determinant()
    }

    pub fn operator_norm(&self) -> f64 {
        let m = self.matrix;
        (m.adjoint() * m).map(|c| c.re).symmetric_eigenvalues().max().max(0.0).sqrt()
    }

    pub fn is_nondegenerate(&self) -> bool {
        let n = self.operator_norm();
        n > 0.0 && self.det().norm() > TOL_NONDEGENERATE * n * n * n
    }

    /// `N*(β)` for a (0,1)-form `β`.
    pub fn apply(&self, beta: &Form) -> Form {
        let mut out = Form::zero(6, 2);
        for a in 0..3 {
            let ca = self.frame.eval(beta, &[a + 3]);
            if ca == C64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..3 {
                out += &(&self.frame.theta_check(b) * (ca * self.matrix[(b, a)]));
            }
        }
        out
    }

    pub fn volume(&self) -> VolumeDensity {
        VolumeDensity::from_tensor(self)
    }
}

/// `Vol_I` and its density Ψ against the J-orientation.
#[derive(Clone, Debug)]
pub struct VolumeDensity {
    pub form: Form,
    pub psi: f64,
}

impl VolumeDensity {
    /// `Vol_I = |det M|² · (i/8) θ^{123} ∧ θ̄^{123}`. The pairing of the
    /// `(Λ^{3,0})*`- and `(Λ^{0,3})*`-legs of `det N* ⊗ conj(det N*)` against
    /// `θ^{123} ⊗ θ̄^{123}` leaves exactly this frame-independent 6-form.
    pub fn from_tensor(n: &NijenhuisTensor) -> Self {
        let t = n.frame.theta123();
        let base = t.wedge(&t.conj()).unwrap();
        let scale = n.det().norm_sqr();
        let form = (&base * (VOLUME_PAIRING * scale)).re();
        let reference = (base.density() * VOLUME_PAIRING).re;
        let sign = if reference >= 0.0 { 1.0 } else { -1.0 };
        let psi = form.density().re * sign;
        VolumeDensity { form, psi }
    }
}

/// Ψ of `J` on `alg`.
pub fn psi(alg: &CoframeAlgebra, j: &AlmostComplexStructure) -> f64 {
    NijenhuisTensor::via_d(alg, j).volume().psi
}

/// `C(a) = (Id ⊗ N*)(a)` for a (1,1)-form `a = Σ h_{cd} θ_c ∧ θ̄_d`,
/// returned as the tensor `C[c][x][y] = Σ_d h_{cd} N*(θ̄_d)(Z_x, Z_y)`.
pub fn c_map(n: &NijenhuisTensor, a: &Form) -> [[[C64; 3]; 3]; 3] {
    let f = &n.frame;
    let mut out = [[[C64::new(0.0, 0.0); 3]; 3]; 3];
    let images: Vec<Form> = (0..3).map(|d| n.apply(&f.theta_bar(d))).collect();
    for c in 0..3 {
        for d in 0..3 {
            let h = f.eval(a, &[c, d + 3]);
            if h == C64::new(0.0, 0.0) {
                continue;
            }
            for x in 0..3 {
                for y in 0..3 {
                    out[c][x][y] += h * f.eval(&images[d], &[x, y]);
                }
            }
        }
    }
    out
}

/// `∧C(a) = Σ h_{cd} θ_c ∧ N*(θ̄_d)`.
pub fn wedge_c_map(n: &NijenhuisTensor, a: &Form) -> Form {
    let f = &n.frame;
    let mut out = Form::zero(6, 3);
    for c in 0..3 {
        for d in 0..3 {
            let h = f.eval(a, &[c, d + 3]);
            if h != C64::new(0.0, 0.0) {
                out += &(&f.theta(c).wedge(&n.apply(&f.theta_bar(d))).unwrap() * h);
            }
        }
    }
    out
}

/// `|d^{2,-1} a − CARTAN_SIGN · ∧C(a)|` for a (1,1)-form `a`.
pub fn cartan_compatibility(alg: &CoframeAlgebra, j: &AlmostComplexStructure, a: &Form) -> Result<f64> {
    match j.pure_bidegree(a, 1e-10) {
        Some(b) if b.p == 1 && b.q == 1 => {}
        _ => {
            if a.max_abs() != 0.0 {
                return Err(GeometryError::Invalid("cartan_compatibility expects a (1,1)-form".into()));
            }
        }
    }
    let n = NijenhuisTensor::via_d(alg, j);
    let lhs = j.d_split(alg, a)?[0].clone();
    let rhs = &wedge_c_map(&n, a) * CARTAN_SIGN;
    Ok((&lhs - &rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::NIJENHUIS_ROUTE;
    use crate::frame::{product_j, torus_j};

    #[test]
    fn torus_tensor_vanishes() {
        let alg = CoframeAlgebra::abelian(6);
        let j = AlmostComplexStructure::new(torus_j()).unwrap();
        assert_eq!(NijenhuisTensor::via_d(&alg, &j).matrix().norm(), 0.0);
        assert_eq!(NijenhuisTensor::via_brackets(&alg, &j).matrix().norm(), 0.0);
        let v = NijenhuisTensor::via_d(&alg, &j).volume();
        assert_eq!(v.psi, 0.0);
        assert_eq!(v.form.max_abs(), 0.0);
    }

    #[test]
    fn abelian_algebra_any_j() {
        let alg = CoframeAlgebra::abelian(6);
        let j = AlmostComplexStructure::new(product_j()).unwrap();
        assert_eq!(NijenhuisTensor::via_brackets(&alg, &j).matrix().norm(), 0.0);
    }

    #[test]
    fn product_structure_is_nondegenerate() {
        let alg = CoframeAlgebra::su2_su2();
        let j = AlmostComplexStructure::new(product_j()).unwrap();
        let d = NijenhuisTensor::via_d(&alg, &j);
        let b = NijenhuisTensor::via_brackets(&alg, &j);
        assert!(d.is_nondegenerate());
        assert!((d.matrix() - b.matrix() * C64::new(NIJENHUIS_ROUTE, 0.0)).norm() < 1e-12);
        // Ψ of the product structure is 1/512 under the su(2) normalization
        assert!((d.volume().psi - 1.0 / 512.0).abs() < 1e-15);
    }

    #[test]
    fn volume_is_real_and_oriented() {
        let alg = CoframeAlgebra::su2_su2();
        let j = AlmostComplexStructure::new(product_j()).unwrap();
        let v = NijenhuisTensor::via_d(&alg, &j).volume();
        assert!(v.form.is_real(0.0));
        assert!(v.psi > 0.0);
        assert_eq!(j.orientation_sign(), 1.0);
        assert_eq!(AlmostComplexStructure::new(torus_j()).unwrap().orientation_sign(), -1.0);
    }

    #[test]
    fn apply_reproduces_projected_derivative() {
        let alg = CoframeAlgebra::su2_su2();
        let j = AlmostComplexStructure::new(product_j()).unwrap();
        let n = NijenhuisTensor::via_d(&alg, &j);
        let beta = j.project(&Form::one_form_real(&[0.3, -1.0, 0.2, 0.5, 0.0, 1.1]), 0, 1).unwrap();
        let direct = j.project(&alg.d(&beta), 2, 0).unwrap();
        assert!((&n.apply(&beta) - &direct).max_abs() < 1e-13);
    }

    #[test]
    fn cartan_sign_on_product_form() {
        let alg = CoframeAlgebra::su2_su2();
        let j = AlmostComplexStructure::new(product_j()).unwrap();
        let mut w = Form::zero(6, 2);
        for i in 0..3 {
            w += &Form::monomial(6, &[i, i + 3]);
        }
        assert!(cartan_compatibility(&alg, &j, &w).unwrap() < 1e-12);
        let wrong = {
            let n = NijenhuisTensor::via_d(&alg, &j);
            (&j.d_split(&alg, &w).unwrap()[0] - &wedge_c_map(&n, &w)).norm()
        };
        assert!(wrong > 0.1);
    }

    #[test]
    fn scaling_exponent() {
        let j = AlmostComplexStructure::new(product_j()).unwrap();
        let base = psi(&CoframeAlgebra::su2_su2(), &j);
        for s in [0.5, 2.0, 3.0] {
            let scaled = psi(&CoframeAlgebra::su2_su2().scaled(s), &j);
            let exponent = (scaled / base).ln() / f64::ln(s);
            assert!((exponent - crate::constants::PSI_SCALING_EXPONENT).abs() < 1e-10);
        }
    }
}
