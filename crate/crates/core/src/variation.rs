//! Invariant deformations of `J`, the functional Ψ along them, its analytic
//! first variation, the criticality criterion, and a Levenberg–Marquardt
//! search for critical points.
//!
//! Only invariant deformations are considered: `δ ∈ Λ^{0,1} ⊗ T^{1,0}` with
//! constant coefficients in the frame, a complex 3×3 matrix with
//! `δ(Z̄_a) = Σ_b δ_{ba} Z_b`. This is the finite-dimensional counterpart of
//! the full variational problem on a homogeneous model.

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::acs::AlmostComplexStructure;
use crate::constants::{GRADIENT_PHASE, TOL_CRITICAL};
use crate::error::{GeometryError, Result};
use crate::frame::CoframeAlgebra;
use crate::multilinear::{Form, C64};
use crate::nijenhuis::{psi, NijenhuisTensor};
use crate::par::Exec;
use crate::su3::{nk_equivalence_suite, NkSuiteReport};
use crate::torsion::{alt3, conformal_solve, least_squares_omega, normalize_rho, tensor_e_coordinates, tensor_sub, RhoMap};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Number of real parameters of an invariant deformation.
pub const DEFORMATION_DIM: usize = 18;

/// Richardson steps for the finite-difference derivative of Ψ.
pub const FD_STEPS: (f64, f64) = (1e-4, 5e-5);

/// `δ(Z̄_a) = Σ_b delta[(b, a)] Z_b` in a structure's pivot frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deformation {
    pub delta: Matrix3<C64>,
}

impl Deformation {
    pub fn new(delta: Matrix3<C64>) -> Self {
        Deformation { delta }
    }

    pub fn zero() -> Self {
        Deformation { delta: Matrix3::zeros() }
    }

    /// Real coordinates: `x[2k] = Re δ_k`, `x[2k+1] = Im δ_k` with `k = 3b + a`.
    pub fn from_real(x: &[f64]) -> Self {
        assert_eq!(x.len(), DEFORMATION_DIM);
        Deformation { delta: Matrix3::from_fn(|b, a| C64::new(x[2 * (3 * b + a)], x[2 * (3 * b + a) + 1])) }
    }

    pub fn to_real(&self) -> Vec<f64> {
        let mut x = vec![0.0; DEFORMATION_DIM];
        for b in 0..3 {
            for a in 0..3 {
                let c = self.delta[(b, a)];
                x[2 * (3 * b + a)] = c.re;
                x[2 * (3 * b + a) + 1] = c.im;
            }
        }
        x
    }

    /// The k-th real basis deformation.
    pub fn basis(k: usize) -> Self {
        let mut x = vec![0.0; DEFORMATION_DIM];
        x[k] = 1.0;
        Deformation::from_real(&x)
    }

    /// `δ̃ = Σ GRADIENT_PHASE · δ_{ba} ρ(·, ·, Z_b) ∧ θ̄_a`, a (2,1)-form.
    pub fn to_form(&self, j: &AlmostComplexStructure, rho: &crate::torsion::Tensor3) -> Form {
        let f = j.frame();
        let mut out = Form::zero(6, 3);
        for b in 0..3 {
            let mut two = Form::zero(6, 2);
            for x in 0..3 {
                for y in (x + 1)..3 {
                    let v = rho[x][y][b];
                    if v != ZERO {
                        two += &(&f.theta(x).wedge(&f.theta(y)).unwrap() * v);
                    }
                }
            }
            for a in 0..3 {
                let c = self.delta[(b, a)] * GRADIENT_PHASE;
                if c != ZERO {
                    out += &(&two.wedge(&f.theta_bar(a)).unwrap() * c);
                }
            }
        }
        out
    }

    /// Inverse of [`Deformation::to_form`] on its image.
    pub fn from_form(j: &AlmostComplexStructure, rho: &crate::torsion::Tensor3, form: &Form) -> Result<Self> {
        let f = j.frame();
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let m = Matrix3::from_fn(|p, b| GRADIENT_PHASE * rho[pairs[p].0][pairs[p].1][b]);
        let inv = m
            .try_inverse()
            .ok_or_else(|| GeometryError::DegenerateNijenhuis("ρ does not identify T^{1,0} with Λ^{2,0}".into()))?;
        let values = Matrix3::from_fn(|p, a| f.eval(form, &[pairs[p].0, pairs[p].1, a + 3]));
        Ok(Deformation { delta: inv * values })
    }
}

/// The structure whose `T^{0,1}` is spanned by `Z̄_a + t Σ_b δ_{ba} Z_b`, with
/// the frame pivot of `j` kept.
pub fn deform_j(j: &AlmostComplexStructure, d: &Deformation, t: f64) -> Result<AlmostComplexStructure> {
    let f = j.frame();
    let mut v = DMatrix::<C64>::zeros(6, 6);
    for a in 0..3 {
        let mut w = f.z_bar(a);
        for b in 0..3 {
            let c = d.delta[(b, a)] * t;
            if c != ZERO {
                for (wi, zi) in w.iter_mut().zip(f.z(b)) {
                    *wi += c * zi;
                }
            }
        }
        for i in 0..6 {
            v[(i, a + 3)] = w[i];
            v[(i, a)] = w[i].conj();
        }
    }
    let det = v.determinant();
    let scale: f64 = (0..6).map(|c| v.column(c).norm()).product();
    if det.norm() <= 1e-12 * scale {
        return Err(GeometryError::NonComplementary(det.norm()));
    }
    let inv = v.clone().try_inverse().ok_or(GeometryError::NonComplementary(det.norm()))?;
    let eig = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(6, |i, _| {
        if i < 3 {
            C64::new(0.0, 1.0)
        } else {
            C64::new(0.0, -1.0)
        }
    }));
    let jm = (v * eig * inv).map(|c| c.re);
    // J² = -Id holds to rounding; one Newton step on X ↦ ½(X − X⁻¹) removes it
    let jm = match jm.clone().try_inverse() {
        Some(ji) => (&jm - ji) * 0.5,
        None => jm,
    };
    AlmostComplexStructure::with_pivot(jm, j.pivot())
}

pub fn psi_value(alg: &CoframeAlgebra, j: &AlmostComplexStructure) -> f64 {
    psi(alg, j)
}

/// The Hermitian form used by the variational formulas: the conformal
/// solution when it exists, otherwise the least-squares form, scaled so that
/// `|ρ|_ω = 1`.
pub fn normalized_hermitian_form(alg: &CoframeAlgebra, j: &AlmostComplexStructure) -> Result<Form> {
    if let Some(w) = conformal_solve(alg, j)?.omega {
        return Ok(w);
    }
    let (w, _) = least_squares_omega(alg, j);
    if !j.is_positive(&w).0 {
        return Err(GeometryError::NotPositiveDefinite("least-squares Hermitian form is not positive".into()));
    }
    normalize_rho(alg, j, &w)
}

/// `2ℜ` of the density of `Π^{2,2}(dδ̃) ∧ ω`.
pub fn psi_gradient_analytic(alg: &CoframeAlgebra, j: &AlmostComplexStructure, omega: &Form, d: &Deformation) -> Result<f64> {
    if !NijenhuisTensor::via_d(alg, j).is_nondegenerate() {
        return Err(GeometryError::DegenerateNijenhuis("N is singular".into()));
    }
    let rho = RhoMap::new(alg, j).rho(omega);
    gradient_with_rho(alg, j, omega, &rho, d)
}

fn gradient_with_rho(
    alg: &CoframeAlgebra,
    j: &AlmostComplexStructure,
    omega: &Form,
    rho: &crate::torsion::Tensor3,
    d: &Deformation,
) -> Result<f64> {
    let form = d.to_form(j, rho);
    let p22 = j.project(&alg.d(&form), 2, 2)?;
    Ok(2.0 * p22.wedge(omega)?.density().re)
}

/// The analytic gradient on the 18 real basis deformations.
pub fn gradient_basis(alg: &CoframeAlgebra, j: &AlmostComplexStructure, omega: &Form, exec: Exec) -> Result<Vec<f64>> {
    if !NijenhuisTensor::via_d(alg, j).is_nondegenerate() {
        return Err(GeometryError::DegenerateNijenhuis("N is singular".into()));
    }
    let rho = RhoMap::new(alg, j).rho(omega);
    exec.map(DEFORMATION_DIM, |k| gradient_with_rho(alg, j, omega, &rho, &Deformation::basis(k)))
        .into_iter()
        .collect()
}

/// Central difference of `t ↦ Ψ(deform_j(J, δ, t))` at 0, Richardson-combined
/// over the steps in [`FD_STEPS`].
pub fn psi_fd_derivative(alg: &CoframeAlgebra, j: &AlmostComplexStructure, d: &Deformation) -> Result<f64> {
    let f = |t: f64| -> Result<f64> { Ok(psi(alg, &deform_j(j, d, t)?)) };
    let central = |h: f64| -> Result<f64> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
    let (h1, h2) = FD_STEPS;
    Ok((4.0 * central(h2)? - central(h1)?) / 3.0)
}

/// `|Π^{(2,1)+(1,2)} dω|`.
pub fn mixed_part_norm(alg: &CoframeAlgebra, j: &AlmostComplexStructure, omega: &Form) -> Result<f64> {
    let dw = alg.d(omega);
    Ok((&j.project(&dw, 2, 1)? + &j.project(&dw, 1, 2)?).norm())
}

#[derive(Clone, Debug)]
pub struct CriticalityReport {
    pub residual: f64,
    pub critical: bool,
    /// `N` singular: Ψ vanishes identically nearby and the criterion is vacuous.
    pub degenerate: bool,
    pub gradient: Vec<f64>,
    pub gradient_max: f64,
    pub gradient_vanishes: bool,
    /// Whether the two verdicts coincide (always true when degenerate).
    pub agrees: bool,
}

pub fn criticality_test(alg: &CoframeAlgebra, j: &AlmostComplexStructure, omega: &Form, exec: Exec) -> Result<CriticalityReport> {
    let residual = mixed_part_norm(alg, j, omega)?;
    let critical = residual <= TOL_CRITICAL;
    let degenerate = !NijenhuisTensor::via_d(alg, j).is_nondegenerate();
    if degenerate {
        return Ok(CriticalityReport {
            residual,
            critical,
            degenerate,
            gradient: Vec::new(),
            gradient_max: 0.0,
            gradient_vanishes: true,
            agrees: true,
        });
    }
    let gradient = gradient_basis(alg, j, omega, exec)?;
    let gradient_max = gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let gradient_vanishes = gradient_max <= TOL_CRITICAL;
    Ok(CriticalityReport { residual, critical, degenerate, gradient, gradient_max, gradient_vanishes, agrees: critical == gradient_vanishes })
}

/// The optimizer's residual vector at `J`: the (2,1)+(1,2) part of `dω`
/// relative to `|dω|` (20 numbers), then the non-skew part of `ρ` relative to
/// `|ρ|` in real coframe coordinates (180 numbers). `ω` is the least-squares
/// Hermitian form, so both blocks are functions of `J` alone.
pub fn residual_vector(alg: &CoframeAlgebra, j: &AlmostComplexStructure) -> Result<Vec<f64>> {
    let (w, _) = least_squares_omega(alg, j);
    let dw = alg.d(&w);
    let dn = dw.norm();
    if dn == 0.0 {
        return Err(GeometryError::DegenerateNijenhuis("dω vanishes".into()));
    }
    let mixed = &j.project(&dw, 2, 1)? + &j.project(&dw, 1, 2)?;
    let mut out: Vec<f64> = mixed.coeffs().iter().map(|c| c.re / dn).collect();
    let rho = RhoMap::new(alg, j).rho(&w);
    let rn = tensor_e_coordinates(j.frame(), &rho).iter().map(|x| x * x).sum::<f64>().sqrt();
    if rn == 0.0 {
        return Err(GeometryError::DegenerateNijenhuis("ρ vanishes".into()));
    }
    out.extend(tensor_e_coordinates(j.frame(), &tensor_sub(&rho, &alt3(&rho))).iter().map(|x| x / rn));
    Ok(out)
}

pub fn objective(alg: &CoframeAlgebra, j: &AlmostComplexStructure) -> Result<f64> {
    Ok(residual_vector(alg, j)?.iter().map(|x| x * x).sum())
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    /// Target for `R = |r|²`.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra iterations after reaching `tol`, while `R` still decreases.
    pub polish: usize,
    pub fd_step: f64,
    pub mu0: f64,
    pub mu_max: f64,
    pub exec: Exec,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { tol: 1e-12, max_iter: 200, polish: 4, fd_step: 1e-6, mu0: 1e-3, mu_max: 1e8, exec: Exec::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchStatus {
    Converged,
    MaxIterations,
    /// The damping parameter exceeded its bound without an acceptable step.
    TrustRegionExhausted,
}

#[derive(Clone, Debug)]
pub struct CriticalSearch {
    pub status: SearchStatus,
    pub j: AlmostComplexStructure,
    pub residual: f64,
    /// Accepted steps.
    pub iterations: usize,
    pub evaluations: usize,
    /// `R` after every accepted step, starting with the initial value.
    pub trace: Vec<f64>,
    pub psi: f64,
    /// The normalized Hermitian form at the result, if it could be built.
    pub omega: Option<Form>,
    /// The equivalence suite at the result, on convergence.
    pub suite: Option<NkSuiteReport>,
}

impl CriticalSearch {
    pub fn converged(&self) -> bool {
        self.status == SearchStatus::Converged
    }

    pub fn trace_is_monotone(&self) -> bool {
        self.trace.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Forward model for one step: the residual at `deform_j(J, δ, 1)`.
fn residual_at(alg: &CoframeAlgebra, j: &AlmostComplexStructure, x: &[f64]) -> Result<Vec<f64>> {
    residual_vector(alg, &deform_j(j, &Deformation::from_real(x), 1.0)?)
}

/// Central-difference Jacobian of the residual in the 18 deformation
/// coordinates at `δ = 0`.
pub fn residual_jacobian(alg: &CoframeAlgebra, j: &AlmostComplexStructure, h: f64, exec: Exec) -> Result<DMatrix<f64>> {
    let cols: Vec<Result<Vec<f64>>> = exec.map(DEFORMATION_DIM, |k| {
        let mut x = vec![0.0; DEFORMATION_DIM];
        x[k] = h;
        let plus = residual_at(alg, j, &x)?;
        x[k] = -h;
        let minus = residual_at(alg, j, &x)?;
        Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect())
    });
    let cols: Vec<Vec<f64>> = cols.into_iter().collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(cols[0].len(), DEFORMATION_DIM, |r, c| cols[c][r]))
}

pub fn find_critical(alg: &CoframeAlgebra, j0: &AlmostComplexStructure, opts: &SearchOptions) -> Result<CriticalSearch> {
    if !NijenhuisTensor::via_d(alg, j0).is_nondegenerate() {
        return Err(GeometryError::DegenerateNijenhuis("N(J₀) is singular".into()));
    }
    let mut j = AlmostComplexStructure::new(j0.matrix().clone())?;
    let mut r = residual_vector(alg, &j)?;
    let mut big_r: f64 = r.iter().map(|x| x * x).sum();
    let mut trace = vec![big_r];
    let mut mu = opts.mu0;
    let mut iterations = 0;
    let mut evaluations = 1;
    let mut polished = 0;
    let mut status = SearchStatus::MaxIterations;
    if big_r <= opts.tol {
        status = SearchStatus::Converged;
    }
    while status != SearchStatus::Converged || (polished < opts.polish && big_r > 0.0) {
        if status == SearchStatus::Converged {
            polished += 1;
        } else if iterations >= opts.max_iter {
            break;
        }
        let jac = residual_jacobian(alg, &j, opts.fd_step, opts.exec)?;
        evaluations += 2 * DEFORMATION_DIM;
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let mut accepted = false;
        while mu <= opts.mu_max {
            let a = &jtj + DMatrix::identity(DEFORMATION_DIM, DEFORMATION_DIM) * mu;
            let step = match a.cholesky() {
                Some(ch) => -ch.solve(&g),
                None => {
                    mu *= 4.0;
                    continue;
                }
            };
            let trial = deform_j(&j, &Deformation::from_real(step.as_slice()), 1.0)
                .and_then(|jn| AlmostComplexStructure::new(jn.matrix().clone()))
                .and_then(|jn| {
                    if NijenhuisTensor::via_d(alg, &jn).is_nondegenerate() {
                        Ok(jn)
                    } else {
                        Err(GeometryError::DegenerateNijenhuis("N degenerates along the step".into()))
                    }
                })
                .and_then(|jn| residual_vector(alg, &jn).map(|rn| (jn, rn)));
            evaluations += 1;
            if let Ok((jn, rn)) = trial {
                let rn_sq: f64 = rn.iter().map(|x| x * x).sum();
                if rn_sq < big_r {
                    j = jn;
                    r = rn;
                    big_r = rn_sq;
                    mu = (mu / 3.0).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            mu *= 4.0;
        }
        if !accepted {
            if status != SearchStatus::Converged {
                status = SearchStatus::TrustRegionExhausted;
            }
            break;
        }
        iterations += 1;
        trace.push(big_r);
        if big_r <= opts.tol {
            status = SearchStatus::Converged;
        }
    }
    let omega = normalized_hermitian_form(alg, &j).ok();
    let suite = match (&omega, status) {
        (Some(w), SearchStatus::Converged) => Some(nk_equivalence_suite(alg, &j, w)?),
        _ => None,
    };
    Ok(CriticalSearch { status, psi: psi(alg, &j), j, residual: big_r, iterations, evaluations, trace, omega, suite })
}
