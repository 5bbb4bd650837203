//! Convention constants. Each value is fixed once here and asserted by the
//! test suite; nothing downstream re-derives them.

use num_complex::Complex64;

/// `N*` from the `d^{2,-1}` route equals this factor times the bracket route
/// (`dβ(X, Y) = -β([X, Y])` for invariant 1-forms).
pub const NIJENHUIS_ROUTE: f64 = -1.0;

/// `d^{2,-1} a = CARTAN_SIGN · ∧(Id ⊗ N*)(a)` on `Λ^{1,1}`, with the
/// `(1,0)`-leg of `a` written first.
pub const CARTAN_SIGN: f64 = -1.0;

/// `dω = NABLA_TO_D · η` where `η` is the 3-form with components
/// `(∇_{e_i} ω)(e_j, e_k)` when that tensor is totally antisymmetric.
pub const NABLA_TO_D: f64 = 3.0;

/// In an adapted unitary frame with `Ω = θ¹∧θ²∧θ³`:
/// `N*(θ̄_a) = ZCHECK_PHASE · λ · θ̌_a`.
pub const ZCHECK_PHASE: Complex64 = Complex64::new(0.0, 1.0);

/// `δ ∈ Λ^{0,1} ⊗ T^{1,0}` is sent to the (2,1)-form
/// `Σ δ_{ba} · GRADIENT_PHASE · ρ(·,·,Z_b) ∧ θ̄_a`.
pub const GRADIENT_PHASE: Complex64 = Complex64::new(0.0, 1.0);

/// Analytic first variation divided by the finite-difference derivative of Ψ.
pub const KAPPA_CONV: f64 = 0.125;

/// `Vol_I = |det M|² · VOLUME_PAIRING · θ^{123} ∧ θ̄^{123}`; also the factor
/// in `|Ω|²_ω = VOLUME_PAIRING · Ω∧Ω̄ / (ω³/6)`.
pub const VOLUME_PAIRING: Complex64 = Complex64::new(0.0, 0.125);

/// Scaling all structure constants by `s` multiplies Ψ by `s^PSI_SCALING_EXPONENT`.
pub const PSI_SCALING_EXPONENT: f64 = 6.0;

/// `B_φ(x, y) · vol = STABLE_FORM_FACTOR · (ι_x φ)∧(ι_y φ)∧φ`.
pub const STABLE_FORM_FACTOR: f64 = 1.0 / 6.0;

/// `g_φ / g_cone` for `φ = ρ_C` at `t = 1` (`ρ_C` is three times a unit G2 form).
pub fn cone_metric_ratio() -> f64 {
    3f64.powf(2.0 / 3.0)
}

/// Coefficient comparisons on unit-scale data.
pub const TOL_EXACT: f64 = 1e-12;
/// Identity checks that pass through an SVD or a matrix inverse.
pub const TOL_IDENTITY: f64 = 1e-10;
/// Structure-equation residuals.
pub const TOL_STRUCTURE: f64 = 1e-9;
/// Criticality residual `|Π^{(2,1)+(1,2)} dω|`.
pub const TOL_CRITICAL: f64 = 1e-8;
/// Relative threshold for numerical rank.
pub const TOL_RANK: f64 = 1e-9;
/// `|det M| > TOL_NONDEGENERATE · ‖M‖³`.
pub const TOL_NONDEGENERATE: f64 = 1e-9;

/// Convention table as (name, value) pairs, for reports.
pub fn table() -> Vec<(&'static str, f64)> {
    vec![
        ("nijenhuis_route", NIJENHUIS_ROUTE),
        ("cartan_sign", CARTAN_SIGN),
        ("nabla_to_d", NABLA_TO_D),
        ("zcheck_phase_im", ZCHECK_PHASE.im),
        ("gradient_phase_im", GRADIENT_PHASE.im),
        ("kappa_conv", KAPPA_CONV),
        ("volume_pairing_im", VOLUME_PAIRING.im),
        ("psi_scaling_exponent", PSI_SCALING_EXPONENT),
        ("stable_form_factor", STABLE_FORM_FACTOR),
        ("cone_metric_ratio", cone_metric_ratio()),
    ]
}
