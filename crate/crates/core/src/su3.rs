//! SU(3)-structures `(ω, Ω, λ)`, the nearly Kähler structure equations, the
//! Levi-Civita test `∇ω = dω / 3`, and the three-way equivalence between the
//! skew-torsion criterion, the structure equations and total antisymmetry of
//! `∇ω`.
//!
//! All residuals are Euclidean norms of coefficient vectors in the invariant
//! coframe. Structures built by the optimizer are normalized by `|ρ|_ω = 1`,
//! which puts `λ` at order one, so absolute tolerances are meaningful.

use nalgebra::{DMatrix, Matrix3};

use crate::acs::{AlmostComplexStructure, Frame10};
use crate::constants::{NABLA_TO_D, TOL_STRUCTURE, VOLUME_PAIRING, ZCHECK_PHASE};
use crate::error::{GeometryError, Result};
use crate::frame::CoframeAlgebra;
use crate::linalg;
use crate::multilinear::{Form, Metric, C64};
use crate::nijenhuis::NijenhuisTensor;
use crate::torsion::{check_hermitian_form, tensor_norm, torsion_criterion, unitary_frame, Tensor3};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug)]
pub struct SU3Structure {
    j: AlmostComplexStructure,
    omega: Form,
    big_omega: Form,
    lambda: f64,
}

impl SU3Structure {
    /// Validates that `ω` is a positive real (1,1)-form, `Ω` is of type (3,0)
    /// with `|Ω|_ω = 1`, and `λ ≥ 0`.
    pub fn new(j: AlmostComplexStructure, omega: Form, big_omega: Form, lambda: f64) -> Result<Self> {
        check_hermitian_form(&j, &omega)?;
        if big_omega.dim() != 6 || big_omega.degree() != 3 {
            return Err(GeometryError::Invalid("Ω must be a 3-form on the 6-dimensional coframe".into()));
        }
        let off = (&j.project(&big_omega, 3, 0)? - &big_omega).max_abs();
        if off > 1e-10 * big_omega.max_abs().max(1e-300) {
            return Err(GeometryError::MixedBidegree(off));
        }
        let n = norm_30(&j, &omega, &big_omega)?;
        if (n - 1.0).abs() > 1e-10 {
            return Err(GeometryError::Invalid(format!("|Ω|_ω = {n}, expected 1")));
        }
        if !(lambda >= 0.0) {
            return Err(GeometryError::Invalid(format!("λ = {lambda} must be non-negative")));
        }
        Ok(SU3Structure { j, omega, big_omega, lambda })
    }

    /// `Ω` and `λ` recovered from `dω` (see [`solve_omega`]).
    pub fn from_hermitian(alg: &CoframeAlgebra, j: &AlmostComplexStructure, omega: &Form) -> Result<Self> {
        let (big_omega, lambda) = solve_omega(alg, j, omega)?;
        Ok(SU3Structure { j: j.clone(), omega: omega.clone(), big_omega, lambda })
    }

    /// `Ω` and `λ` from the (3,0)-part of `dω` alone, ignoring any
    /// (2,1)+(1,2) part. Used to report on structures that are not nearly
    /// Kähler.
    pub fn best_fit(alg: &CoframeAlgebra, j: &AlmostComplexStructure, omega: &Form) -> Result<Self> {
        check_hermitian_form(j, omega)?;
        let p30 = j.project(&alg.d(omega), 3, 0)?;
        let n = norm_30(j, omega, &p30)?;
        if n == 0.0 {
            return Err(GeometryError::NotNkShape("no (3,0) component".into()));
        }
        Ok(SU3Structure { j: j.clone(), omega: omega.clone(), big_omega: &p30 * (1.0 / n), lambda: 2.0 * n / 3.0 })
    }

    pub fn j(&self) -> &AlmostComplexStructure {
        &self.j
    }

    pub fn omega(&self) -> &Form {
        &self.omega
    }

    pub fn big_omega(&self) -> &Form {
        &self.big_omega
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `Vol_h = ω³/6`.
    pub fn volume(&self) -> Form {
        let w2 = self.omega.wedge(&self.omega).unwrap();
        &w2.wedge(&self.omega).unwrap() * (1.0 / 6.0)
    }

    /// The same structure after `ω ↦ kω`: `Ω ↦ k^{3/2}Ω`, `λ ↦ k^{-1/2}λ`.
    pub fn rescaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(GeometryError::Invalid(format!("rescale factor {k} must be positive")));
        }
        Ok(SU3Structure {
            j: self.j.clone(),
            omega: &self.omega * k,
            big_omega: &self.big_omega * k.powf(1.5),
            lambda: self.lambda / k.sqrt(),
        })
    }
}

/// `T[a][b][c] = Ω(Z_a, Z_b, Z_c)` on the pivot frame.
fn three_form_tensor(frame: &Frame10, a: &Form) -> Tensor3 {
    let mut t = [[[C64::new(0.0, 0.0); 3]; 3]; 3];
    for x in 0..3 {
        for y in 0..3 {
            for z in 0..3 {
                if x != y && y != z && x != z {
                    t[x][y][z] = frame.eval(a, &[x, y, z]);
                }
            }
        }
    }
    t
}

/// `|Ω|_ω` for a (3,0)-form, through the shared tensor norm.
pub fn norm_30(j: &AlmostComplexStructure, omega: &Form, big_omega: &Form) -> Result<f64> {
    tensor_norm(j, omega, &three_form_tensor(j.frame(), big_omega))
}

/// `|Ω|_ω` from `|Ω|² = (i/8) Ω∧Ω̄ / (ω³/6)`.
pub fn norm_30_by_volume(omega: &Form, big_omega: &Form) -> f64 {
    let top = big_omega.wedge(&big_omega.conj()).unwrap().density() * VOLUME_PAIRING;
    let w3 = omega.wedge(omega).unwrap().wedge(omega).unwrap().density() / 6.0;
    (top.re / w3.re).sqrt()
}

/// Splits a real 3-form as `3λ ℜΩ` with `Ω` of type (3,0), `|Ω|_ω = 1` and
/// `λ ≥ 0`. Fails if the (2,1)+(1,2) part exceeds `TOL_STRUCTURE` relative to
/// the form, or if the (3,0) part vanishes.
pub fn split_three_form(j: &AlmostComplexStructure, omega: &Form, a: &Form) -> Result<(Form, f64)> {
    let p30 = j.project(a, 3, 0)?;
    let p03 = j.project(a, 0, 3)?;
    let mixed = &(a - &p30) - &p03;
    let scale = a.norm();
    if scale == 0.0 {
        return Err(GeometryError::NotNkShape("the 3-form vanishes, so λ = 0".into()));
    }
    if mixed.norm() > TOL_STRUCTURE * scale {
        return Err(GeometryError::NotNkShape(format!(
            "(2,1)+(1,2) part has relative size {:e}",
            mixed.norm() / scale
        )));
    }
    let n = norm_30(j, omega, &p30)?;
    if n <= TOL_STRUCTURE * scale {
        return Err(GeometryError::NotNkShape("no (3,0) component".into()));
    }
    // a = 2ℜ Π^{3,0}a = 3λℜΩ with |Ω| = 1
    let lambda = 2.0 * n / 3.0;
    Ok((&p30 * (1.0 / n), lambda))
}

/// `(Ω, λ)` with `dω = 3λℜΩ`.
pub fn solve_omega(alg: &CoframeAlgebra, j: &AlmostComplexStructure, omega: &Form) -> Result<(Form, f64)> {
    check_hermitian_form(j, omega)?;
    split_three_form(j, omega, &alg.d(omega))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureReport {
    /// `|dω − 3λℜΩ|`.
    pub r1: f64,
    /// `|dΩ + 2iλω²|`.
    pub r2: f64,
    /// `|dℑΩ + 2λω²|`.
    pub r3: f64,
    /// `|dℜΩ|`, forced to vanish by `d² = 0` once `r1` does and `λ > 0`.
    pub d_re_omega: f64,
}

impl StructureReport {
    pub fn max(&self) -> f64 {
        self.r1.max(self.r2).max(self.r3)
    }
}

pub fn check_structure_equations(alg: &CoframeAlgebra, s: &SU3Structure) -> StructureReport {
    let w = &s.omega;
    let w2 = w.wedge(w).unwrap();
    let lam = s.lambda;
    let d_big = alg.d(&s.big_omega);
    let r1 = (&alg.d(w) - &(&s.big_omega.re() * (3.0 * lam))).norm();
    let r2 = (&d_big + &(&w2 * (I * 2.0 * lam))).norm();
    let r3 = (&alg.d(&s.big_omega.im()) + &(&w2 * (2.0 * lam))).norm();
    let d_re_omega = alg.d(&s.big_omega.re()).norm();
    StructureReport { r1, r2, r3, d_re_omega }
}

#[derive(Clone, Debug)]
pub struct NablaReport {
    /// `max |∇ω(X, Y, Z) + ∇ω(Y, X, Z)|` over frame vectors.
    pub antisymmetry: f64,
    /// `max |∇ω − dω / NABLA_TO_D|` componentwise.
    pub d_residual: f64,
    /// `min_{|X|_g = 1} |∇_X ω|_g`.
    pub strictness: f64,
    pub strict: bool,
    pub max_component: f64,
}

fn components(a: &Form, i: usize, j: usize) -> f64 {
    if i == j {
        0.0
    } else {
        a.get(&[i, j]).re
    }
}

/// `∇ω` from the Levi-Civita connection of `g(X, Y) = ω(X, JY)`.
pub fn check_nabla_omega(alg: &CoframeAlgebra, s: &SU3Structure) -> Result<NablaReport> {
    nabla_report(alg, s.j(), s.omega())
}

pub fn nabla_report(alg: &CoframeAlgebra, j: &AlmostComplexStructure, omega: &Form) -> Result<NablaReport> {
    let g = j.associated_metric(omega);
    let metric = Metric::new(g.clone(), 1.0)?;
    let nabla = alg.levi_civita(&metric)?;
    let dw = alg.d(omega);
    let cov = nabla.covariant_derivative(omega);
    let n = 6;
    let t = |x: usize, y: usize, z: usize| components(&cov[x], y, z);
    let mut antisymmetry: f64 = 0.0;
    let mut d_residual: f64 = 0.0;
    let mut max_component: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let v = t(x, y, z);
                max_component = max_component.max(v.abs());
                antisymmetry = antisymmetry.max((v + t(y, x, z)).abs());
                let dv = if x == y || y == z || x == z { 0.0 } else { dw.get(&[x, y, z]).re };
                d_residual = d_residual.max((v - dv / NABLA_TO_D).abs());
            }
        }
    }
    // Q(X, X) = |∇_X ω|² with the metric on 2-forms, against g(X, X)
    let ginv = g.clone().try_inverse().ok_or_else(|| GeometryError::NotPositiveDefinite("metric is singular".into()))?;
    let tm: Vec<DMatrix<f64>> = (0..n).map(|x| DMatrix::from_fn(n, n, |y, z| t(x, y, z))).collect();
    let q = DMatrix::from_fn(n, n, |a, b| 0.5 * (&ginv * &tm[a] * &ginv).component_mul(&tm[b]).sum());
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| GeometryError::NotPositiveDefinite("ω(X, JX) is not positive".into()))?;
    let linv = chol.l().try_inverse().expect("Cholesky factor is invertible");
    let reduced = &linv * q * linv.transpose();
    let min_eig = linalg::min_symmetric_eigenvalue(&((&reduced + reduced.transpose()) * 0.5));
    let strictness = min_eig.max(0.0).sqrt();
    let strict = strictness > TOL_STRUCTURE * max_component.max(1.0);
    Ok(NablaReport { antisymmetry, d_residual, strictness, strict, max_component })
}

#[derive(Clone, Debug)]
pub struct NkSuiteReport {
    /// `dω ∈ Λ^{3,0} ⊕ Λ^{0,3}`, the standing hypothesis of the equivalence.
    pub hypothesis: bool,
    /// `λ = 0` or `N` singular: outside the scope of the equivalence.
    pub degenerate: bool,
    pub lambda: Option<f64>,
    /// (i) skew-torsion criterion.
    pub torsion: bool,
    pub torsion_residual: f64,
    /// (ii) structure equations after solving for `Ω`.
    pub structure: bool,
    pub structure_report: Option<StructureReport>,
    /// (iii) `∇ω` totally antisymmetric, equal to `dω / 3`, and strict.
    pub nabla: bool,
    pub nabla_report: NablaReport,
    /// Under the hypothesis and away from degeneracy the three verdicts agree.
    pub consistent: bool,
}

impl NkSuiteReport {
    pub fn all_true(&self) -> bool {
        self.hypothesis && !self.degenerate && self.torsion && self.structure && self.nabla
    }
}

pub fn nk_equivalence_suite(alg: &CoframeAlgebra, j: &AlmostComplexStructure, omega: &Form) -> Result<NkSuiteReport> {
    check_hermitian_form(j, omega)?;
    let tr = torsion_criterion(alg, j, omega)?;
    let nabla_report = nabla_report(alg, j, omega)?;
    let dw = alg.d(omega);
    let scale = dw.norm().max(1.0);
    let mixed = (&(&dw - &j.project(&dw, 3, 0)?) - &j.project(&dw, 0, 3)?).norm();
    let hypothesis = mixed <= TOL_STRUCTURE * scale;
    let n_degenerate = !NijenhuisTensor::via_d(alg, j).is_nondegenerate();
    let solved = split_three_form(j, omega, &dw).ok();
    let lambda = solved.as_ref().map(|s| s.1);
    let degenerate = n_degenerate || lambda.is_none_or(|l| l <= TOL_STRUCTURE);
    let structure_report = solved.map(|(big, lam)| {
        let s = SU3Structure { j: j.clone(), omega: omega.clone(), big_omega: big, lambda: lam };
        check_structure_equations(alg, &s)
    });
    let structure = structure_report.is_some_and(|r| r.max() <= TOL_STRUCTURE * scale);
    let nabla_tol = TOL_STRUCTURE * nabla_report.max_component.max(1.0);
    let nabla = nabla_report.antisymmetry <= nabla_tol && nabla_report.d_residual <= nabla_tol && nabla_report.strict;
    let torsion = tr.admits_connection;
    let consistent = !hypothesis || degenerate || (torsion == structure && structure == nabla);
    Ok(NkSuiteReport {
        hypothesis,
        degenerate,
        lambda,
        torsion,
        torsion_residual: tr.residual,
        structure,
        structure_report,
        nabla,
        nabla_report,
        consistent,
    })
}

#[derive(Clone, Debug)]
pub struct LemmaReport {
    /// `|d^{0,1}Ω|`.
    pub d01_omega: f64,
    /// `|d^{1,0}Ω̄|`.
    pub d10_omega_bar: f64,
    /// `|d^{2,-1}Ω̄ + d^{-1,2}Ω|`.
    pub outer_parts: f64,
    /// `|dΩ + d^{2,-1}Ω̄|`.
    pub d_omega_via_bar: f64,
    /// `|dΩ − d^{-1,2}Ω|`.
    pub d_omega_via_outer: f64,
    /// `N*` in a unitary frame with `Ω = θ^{123}`.
    pub adapted_matrix: Matrix3<C64>,
    /// `|N* − ZCHECK_PHASE · λ · Id|` in that frame.
    pub n_star_residual: f64,
}

impl LemmaReport {
    pub fn max(&self) -> f64 {
        [self.d01_omega, self.d10_omega_bar, self.outer_parts, self.d_omega_via_bar, self.d_omega_via_outer, self.n_star_residual]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Unitary frame for `ω` with the phase of `θ¹` turned so that `Ω = θ^{123}`.
pub fn adapted_frame(s: &SU3Structure) -> Result<Frame10> {
    let u = unitary_frame(&s.j, &s.omega)?;
    let c = u.eval(&s.big_omega, &[0, 1, 2]);
    if c.norm() == 0.0 {
        return Err(GeometryError::Invalid("Ω vanishes".into()));
    }
    u.transformed(&Matrix3::from_diagonal(&nalgebra::Vector3::new(c, C64::new(1.0, 0.0), C64::new(1.0, 0.0))))
}

pub fn lemma_d_splitting_checks(alg: &CoframeAlgebra, s: &SU3Structure) -> Result<LemmaReport> {
    let j = &s.j;
    let big = &s.big_omega;
    let bar = big.conj();
    let so = j.d_split(alg, big)?;
    let sb = j.d_split(alg, &bar)?;
    let d_big = alg.d(big);
    let frame = adapted_frame(s)?;
    let adapted_matrix = *NijenhuisTensor::via_d_in_frame(alg, &frame).matrix();
    let target = Matrix3::<C64>::identity() * (ZCHECK_PHASE * s.lambda);
    Ok(LemmaReport {
        d01_omega: so[2].norm(),
        d10_omega_bar: sb[1].norm(),
        outer_parts: (&sb[0] + &so[3]).norm(),
        d_omega_via_bar: (&d_big + &sb[0]).norm(),
        d_omega_via_outer: (&d_big - &so[3]).norm(),
        adapted_matrix,
        n_star_residual: (adapted_matrix - target).norm(),
    })
}

#[derive(Clone, Debug)]
pub struct UniquenessReport {
    /// `ratios[i]` is `ω_i / ω_0`.
    pub ratios: Vec<f64>,
    /// Largest componentwise relative spread of any ratio.
    pub spread: f64,
    /// Every candidate passes the suite.
    pub all_nk: bool,
}

/// Checks that Hermitian forms passing the suite on the same `J` are
/// constant multiples of one another.
pub fn uniqueness_check(alg: &CoframeAlgebra, j: &AlmostComplexStructure, candidates: &[Form]) -> Result<UniquenessReport> {
    let first = candidates
        .first()
        .ok_or_else(|| GeometryError::Invalid("no candidate forms".into()))?;
    let base: Vec<f64> = first.coeffs().iter().map(|c| c.re).collect();
    let mut ratios = Vec::with_capacity(candidates.len());
    let mut spread: f64 = 0.0;
    let mut all_nk = true;
    for w in candidates {
        all_nk &= nk_equivalence_suite(alg, j, w)?.all_true();
        let v: Vec<f64> = w.coeffs().iter().map(|c| c.re).collect();
        match linalg::ratio_spread(&v, &base) {
            Some((r, sp)) => {
                ratios.push(r);
                spread = spread.max(sp);
            }
            None => {
                ratios.push(f64::NAN);
                spread = f64::INFINITY;
            }
        }
    }
    Ok(UniquenessReport { ratios, spread, all_nk })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{product_j, torus_j};
    use crate::torsion::conformal_solve;

    fn flat() -> (AlmostComplexStructure, Form, Form) {
        let j = AlmostComplexStructure::new(torus_j()).unwrap();
        let z = |k: usize| {
            let mut v = vec![C64::new(0.0, 0.0); 6];
            v[2 * k] = C64::new(1.0, 0.0);
            v[2 * k + 1] = -I;
            Form::one_form(&v)
        };
        let mut w = Form::zero(6, 2);
        for k in 0..3 {
            w += &(&z(k).wedge(&z(k).conj()).unwrap() * (I * 0.5));
        }
        let big = z(0).wedge(&z(1)).unwrap().wedge(&z(2)).unwrap();
        (j, w.re(), big)
    }

    /// The nearly Kähler structure on `su(2) ⊕ su(2)` in closed form.
    pub(crate) fn nk_j() -> DMatrix<f64> {
        let r = 3f64.sqrt();
        let mut j = DMatrix::zeros(6, 6);
        for i in 0..3 {
            j[(i, i)] = -1.0 / r;
            j[(i, i + 3)] = 2.0 / r;
            j[(i + 3, i)] = -2.0 / r;
            j[(i + 3, i + 3)] = 1.0 / r;
        }
        j
    }

    fn nk_structure() -> (CoframeAlgebra, SU3Structure) {
        let alg = CoframeAlgebra::su2_su2();
        let j = AlmostComplexStructure::new(nk_j()).unwrap();
        let w = conformal_solve(&alg, &j).unwrap().omega.unwrap();
        let s = SU3Structure::from_hermitian(&alg, &j, &w).unwrap();
        (alg, s)
    }

    #[test]
    fn flat_model_calibrates_norm() {
        let (j, w, big) = flat();
        assert!(j.is_positive(&w).0);
        assert!((norm_30(&j, &w, &big).unwrap() - 1.0).abs() < 1e-14);
        assert!((norm_30_by_volume(&w, &big) - 1.0).abs() < 1e-14);
        let s = SU3Structure::new(j, w, big, 0.0).unwrap();
        let r = check_structure_equations(&CoframeAlgebra::abelian(6), &s);
        assert_eq!(r.r2, 0.0);
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn shared_norm_matches_volume_formula_off_frame() {
        let (_, s) = nk_structure();
        let w = s.omega() * 2.5;
        let a = norm_30(s.j(), &w, s.big_omega()).unwrap();
        let b = norm_30_by_volume(&w, s.big_omega());
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn planted_split_recovers_lambda_and_phase() {
        let (j, w, big) = flat();
        let c = C64::new(0.6, -0.8);
        let planted = &(&big * c).re() * (3.0 * 0.5);
        let (om, lam) = split_three_form(&j, &w, &planted).unwrap();
        assert!((lam - 0.5).abs() < 1e-14);
        let expected = &big * (c / c.norm());
        assert!((&om - &expected).max_abs() < 1e-14);
    }

    #[test]
    fn torus_has_no_nk_shape() {
        let (j, w, _) = flat();
        let err = solve_omega(&CoframeAlgebra::abelian(6), &j, &w).unwrap_err();
        assert!(matches!(err, GeometryError::NotNkShape(_)));
    }

    #[test]
    fn nk_structure_equations_hold() {
        let (alg, s) = nk_structure();
        let r = check_structure_equations(&alg, &s);
        assert!(r.max() < 1e-12, "{r:?}");
        assert!(r.d_re_omega < 1e-12);
        assert!(s.lambda() > 0.1);
    }

    #[test]
    fn structure_equations_are_scale_covariant() {
        let (alg, s) = nk_structure();
        let t = s.rescaled(4.0).unwrap();
        let again = SU3Structure::from_hermitian(&alg, t.j(), t.omega()).unwrap();
        assert!((again.lambda() - s.lambda() / 2.0).abs() < 1e-13);
        assert!(check_structure_equations(&alg, &t).max() < 1e-11);
    }

    #[test]
    fn nabla_omega_is_antisymmetric_and_strict() {
        let (alg, s) = nk_structure();
        let r = check_nabla_omega(&alg, &s).unwrap();
        assert!(r.antisymmetry < 1e-12 && r.d_residual < 1e-12, "{r:?}");
        assert!(r.strict && r.strictness > 0.1);
    }

    #[test]
    fn kahler_torus_is_not_strict() {
        let (j, w, big) = flat();
        let s = SU3Structure::new(j, w, big, 0.0).unwrap();
        let r = check_nabla_omega(&CoframeAlgebra::abelian(6), &s).unwrap();
        assert_eq!(r.antisymmetry, 0.0);
        assert!(!r.strict);
    }

    #[test]
    fn wrong_factor_scale_breaks_antisymmetry() {
        let (_, s) = nk_structure();
        let alg = CoframeAlgebra::su2_su2_scaled(1.5);
        let r = check_nabla_omega(&alg, &s).unwrap();
        assert!(r.antisymmetry > 1e-3);
    }

    #[test]
    fn suite_on_nk_structure() {
        let (alg, s) = nk_structure();
        let r = nk_equivalence_suite(&alg, s.j(), s.omega()).unwrap();
        assert!(r.all_true() && r.consistent, "{r:?}");
    }

    #[test]
    fn suite_on_torus_is_degenerate() {
        let (j, w, _) = flat();
        let r = nk_equivalence_suite(&CoframeAlgebra::abelian(6), &j, &w).unwrap();
        assert!(r.torsion && r.degenerate && r.hypothesis && r.consistent);
        assert!(!r.all_true());
    }

    #[test]
    fn suite_on_product_structure() {
        // the product structure admits a skew-torsion connection but dω has
        // mixed type, so the equivalence does not apply
        let alg = CoframeAlgebra::su2_su2();
        let j = AlmostComplexStructure::new(product_j()).unwrap();
        let w = conformal_solve(&alg, &j).unwrap().omega.unwrap();
        let r = nk_equivalence_suite(&alg, &j, &w).unwrap();
        assert!(r.torsion && !r.hypothesis && !r.structure && r.consistent);
    }

    #[test]
    fn lemma_identities_hold() {
        let (alg, s) = nk_structure();
        let r = lemma_d_splitting_checks(&alg, &s).unwrap();
        assert!(r.max() < 1e-12, "{r:?}");
    }

    #[test]
    fn lemma_identities_trivial_on_torus() {
        let (j, w, big) = flat();
        let s = SU3Structure::new(j, w, big, 0.0).unwrap();
        assert_eq!(lemma_d_splitting_checks(&CoframeAlgebra::abelian(6), &s).unwrap().max(), 0.0);
    }

    #[test]
    fn planted_multiples_have_constant_ratio() {
        let (alg, s) = nk_structure();
        let ws = [s.omega().clone(), s.omega() * 0.3, s.omega() * 7.0];
        let r = uniqueness_check(&alg, s.j(), &ws).unwrap();
        assert!(r.all_nk && r.spread < 1e-12);
        assert!((r.ratios[1] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn rejects_unnormalized_omega() {
        let (j, w, big) = flat();
        assert!(SU3Structure::new(j, w, &big * 2.0, 0.0).is_err());
    }
}
