//! Regression values and negative controls pinned on the shipped NK fixture
//! and the catalog models.

use nkgeom::cone::{build_cone_3form, fernandez_gray_check, metric_roundtrip};
use nkgeom::constants::cone_metric_ratio;
use nkgeom::frame::{catalog, product_j, s3s3_perturbed, S3S3_NK_FIXTURE};
use nkgeom::nijenhuis::{psi, NijenhuisTensor};
use nkgeom::par::Exec;
use nkgeom::su3::{check_structure_equations, lemma_d_splitting_checks, nabla_report, nk_equivalence_suite, SU3Structure};
use nkgeom::torsion::{conformal_solve, least_squares_omega, torsion_criterion};
use nkgeom::variation::{criticality_test, find_critical, normalized_hermitian_form, SearchOptions, SearchStatus};
use nkgeom::{AlmostComplexStructure, CoframeAlgebra, Form, Manifest};

const PSI_PRODUCT: f64 = 1.0 / 512.0;
const PSI_NK: f64 = 8.909726376383127e-4;

fn fixture() -> (CoframeAlgebra, AlmostComplexStructure, Form, Manifest) {
    let m = Manifest::from_json(S3S3_NK_FIXTURE).unwrap();
    let alg = m.algebra().unwrap();
    let j = m.complex_structure().unwrap().unwrap();
    let w = m.omega_form().unwrap();
    (alg, j, w, m)
}

#[test]
fn fixture_is_complete_and_valid() {
    let (_, j, w, m) = fixture();
    m.validate().unwrap();
    assert_eq!(m.name, "s3s3_nk");
    assert!(m.omega3_form().is_some());
    let g = m.metric_matrix().unwrap().unwrap();
    assert!((g.matrix() - j.associated_metric(&w)).amax() < 1e-14);
}

#[test]
fn psi_regression_values() {
    let alg = CoframeAlgebra::su2_su2();
    let product = AlmostComplexStructure::new(product_j()).unwrap();
    assert!((psi(&alg, &product) - PSI_PRODUCT).abs() < 1e-15);
    let (alg, j, _, _) = fixture();
    assert!((psi(&alg, &j) - PSI_NK).abs() < 1e-12);
    let n = NijenhuisTensor::via_d(&alg, &j);
    assert!(n.is_nondegenerate() && n.det().norm() > 0.0);
}

#[test]
fn fixture_structure_equations() {
    let (alg, j, w, m) = fixture();
    let s = SU3Structure::from_hermitian(&alg, &j, &w).unwrap();
    // |ρ|_ω = 1 with the su(2) normalization fixes λ = 2
    assert!((s.lambda() - 2.0).abs() < 1e-10, "lambda {}", s.lambda());
    assert!(check_structure_equations(&alg, &s).max() < 1e-9);
    assert!(lemma_d_splitting_checks(&alg, &s).unwrap().max() < 1e-9);
    let stored = m.omega3_form().unwrap();
    assert!((&stored - s.big_omega()).max_abs() < 1e-12);
}

#[test]
fn fixture_nabla_is_antisymmetric_and_strict() {
    let (alg, j, w, _) = fixture();
    let r = nabla_report(&alg, &j, &w).unwrap();
    assert!(r.antisymmetry < 1e-9 && r.d_residual < 1e-9);
    assert!(r.strict);
    assert!((r.strictness - 8f64.sqrt()).abs() < 1e-9, "strictness {}", r.strictness);
}

#[test]
fn fixture_suite_is_all_true() {
    let (alg, j, w, _) = fixture();
    let s = nk_equivalence_suite(&alg, &j, &w).unwrap();
    assert!(s.all_true() && s.consistent && !s.degenerate);
    let c = criticality_test(&alg, &j, &w, Exec::Sequential).unwrap();
    assert!(c.critical && c.gradient_vanishes && c.agrees);
    assert!(c.gradient_max < 1e-8);
}

#[test]
fn conformal_solve_reproduces_fixture_form() {
    let (alg, j, w, _) = fixture();
    let sol = conformal_solve(&alg, &j).unwrap();
    assert_eq!(sol.dimension(), 1);
    assert!((&sol.omega.unwrap() - &w).max_abs() < 1e-12);
}

#[test]
fn equal_scale_product_form_admits_skew_torsion() {
    let m = catalog("s3s3").unwrap();
    let alg = m.algebra().unwrap();
    let j = m.complex_structure().unwrap().unwrap();
    let w = conformal_solve(&alg, &j).unwrap().omega.unwrap();
    let r = torsion_criterion(&alg, &j, &w).unwrap();
    assert!(r.admits_connection);
    // the product structure is not nearly Kähler: dω has a mixed part
    let c = criticality_test(&alg, &j, &w, Exec::Sequential).unwrap();
    assert!(!c.critical && c.agrees);
    assert!(c.residual > 1e-3);
}

#[test]
fn perturbed_structure_fails_structure_equations() {
    let m = s3s3_perturbed(7, 0.05).unwrap();
    let alg = m.algebra().unwrap();
    let j = m.complex_structure().unwrap().unwrap();
    let w = normalized_hermitian_form(&alg, &j).unwrap();
    let suite = nk_equivalence_suite(&alg, &j, &w).unwrap();
    assert!(!suite.torsion && !suite.structure && !suite.nabla && suite.consistent);
    let s = SU3Structure::best_fit(&alg, &j, &w).unwrap();
    assert!(check_structure_equations(&alg, &s).max() > 1e-3);
    let fg = fernandez_gray_check(&alg, &s).unwrap();
    assert!(fg.d_rho < 1e-12, "d rho {}", fg.d_rho);
    assert!(fg.d_star_rho > 1e-3);
}

#[test]
fn rescaled_factor_breaks_antisymmetry() {
    let (_, j, w, _) = fixture();
    let r = nabla_report(&CoframeAlgebra::su2_su2_scaled(1.5), &j, &w).unwrap();
    assert!(r.antisymmetry > 1e-3, "antisymmetry {}", r.antisymmetry);
}

#[test]
fn cone_at_unit_slice() {
    let (alg, j, w, _) = fixture();
    let s = SU3Structure::from_hermitian(&alg, &j, &w).unwrap();
    let built = build_cone_3form(&alg, &s).unwrap();
    assert!((built.rescale - 4.0).abs() < 1e-9);
    assert_eq!(built.form.homogeneous_weight(), Some(3));
    let st = &built.structure;
    let dt = Form::monomial(7, &[6]);
    let expected = &(&st.omega().extend(7).wedge(&dt).unwrap() * 3.0) + &(&st.big_omega().re().extend(7) * 3.0);
    assert!((&built.form.eval_at(1.0) - &expected).max_abs() < 1e-10);
    let rt = metric_roundtrip(&alg, &s).unwrap();
    assert!((rt.ratio.unwrap() - cone_metric_ratio()).abs() < 1e-9);
}

#[test]
fn optimizer_reproduces_fixture_psi() {
    let m = s3s3_perturbed(7, 0.05).unwrap();
    let s = find_critical(&m.algebra().unwrap(), &m.complex_structure().unwrap().unwrap(), &SearchOptions::default()).unwrap();
    assert!(s.converged() && s.residual < 1e-12);
    assert!((s.psi - PSI_NK).abs() < 1e-8);
    assert!(s.suite.unwrap().all_true());
}

#[test]
fn large_perturbation_is_reported_honestly() {
    let m = s3s3_perturbed(7, 0.3).unwrap();
    let alg = m.algebra().unwrap();
    let s = find_critical(&alg, &m.complex_structure().unwrap().unwrap(), &SearchOptions::default()).unwrap();
    assert!(s.trace_is_monotone());
    match s.status {
        SearchStatus::Converged => assert!(s.suite.unwrap().all_true()),
        _ => assert!(s.residual > 1e-12),
    }
}

#[test]
fn least_squares_form_is_exact_on_fixture() {
    let (alg, j, _, _) = fixture();
    let (_, smin) = least_squares_omega(&alg, &j);
    assert!(smin < 1e-12);
}
