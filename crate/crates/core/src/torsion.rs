//! Skew-torsion criterion, recovery of the Hermitian form from `J`, and the
//! `Alt₁₂` linear algebra.
//!
//! Tensors on `T^{1,0}` are stored as `[[[C64; 3]; 3]; 3]` of values on the
//! frame vectors `Z_a` of the structure's pivot frame.

use nalgebra::{DMatrix, DVector};

use crate::acs::{two_form_matrix, AlmostComplexStructure, Frame10};
use crate::constants::{TOL_IDENTITY, TOL_RANK};
use crate::error::{GeometryError, Result};
use crate::frame::CoframeAlgebra;
use crate::linalg;
use crate::multilinear::{mask_indices, Form, C64};

pub type Tensor3 = [[[C64; 3]; 3]; 3];

const ZERO: C64 = C64::new(0.0, 0.0);

pub fn zero_tensor() -> Tensor3 {
    [[[ZERO; 3]; 3]; 3]
}

/// Total antisymmetrization `(1/6) Σ_σ sgn(σ) T_{σ(abc)}`.
pub fn alt3(t: &Tensor3) -> Tensor3 {
    let mut out = zero_tensor();
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                out[a][b][c] = (t[a][b][c] + t[b][c][a] + t[c][a][b] - t[b][a][c] - t[a][c][b] - t[c][b][a]) / 6.0;
            }
        }
    }
    out
}

pub fn tensor_sub(a: &Tensor3, b: &Tensor3) -> Tensor3 {
    let mut out = *a;
    for (x, y) in out.iter_mut().flatten().flatten().zip(b.iter().flatten().flatten()) {
        *x -= y;
    }
    out
}

pub fn tensor_scale(a: &Tensor3, s: C64) -> Tensor3 {
    let mut out = *a;
    out.iter_mut().flatten().flatten().for_each(|x| *x *= s);
    out
}

/// Euclidean norm of the raw frame components.
pub fn tensor_frame_norm(a: &Tensor3) -> f64 {
    a.iter().flatten().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Pivot frame of `j` rescaled to be unitary for `ω`:
/// `ω = (i/2) Σ θ'_a ∧ θ̄'_a`, via the Cholesky factor of
/// `H_{ab} = -2i ω(Z_a, Z̄_b)` and `θ' = Lᵀ θ`.
pub fn unitary_frame(j: &AlmostComplexStructure, omega: &Form) -> Result<Frame10> {
    let f = j.frame();
    let h = DMatrix::from_fn(3, 3, |a, b| f.eval(omega, &[a, b + 3]) * C64::new(0.0, -2.0));
    let chol = h
        .clone()
        .cholesky()
        .ok_or_else(|| GeometryError::NotPositiveDefinite("ω(X, JX) is not positive".into()))?;
    let lt = chol.l().transpose();
    Frame10::from_theta(&lt * f.theta_matrix())
}

/// `A[b][a] = θ_b(Z'_a)`: coordinates of the primed frame vectors.
fn change_matrix(from: &Frame10, to: &Frame10) -> [[C64; 3]; 3] {
    let mut a = [[ZERO; 3]; 3];
    for c in 0..3 {
        let zc = to.z(c);
        let coords = from.coords10(&zc);
        for b in 0..3 {
            a[b][c] = coords[b];
        }
    }
    a
}

/// Re-expresses a tensor given on the `Z` of `from` in terms of the `Z` of `to`.
pub fn tensor_to_frame(t: &Tensor3, from: &Frame10, to: &Frame10) -> Tensor3 {
    let a = change_matrix(from, to);
    let mut out = zero_tensor();
    for x in 0..3 {
        for y in 0..3 {
            for z in 0..3 {
                let mut s = ZERO;
                for d in 0..3 {
                    for e in 0..3 {
                        for g in 0..3 {
                            s += t[d][e][g] * a[d][x] * a[e][y] * a[g][z];
                        }
                    }
                }
                out[x][y][z] = s;
            }
        }
    }
    out
}

/// Hermitian norm induced by `ω` on tensors antisymmetric in their first two
/// slots (`Λ^{2,0} ⊗ Λ^{1,0}`, containing `Λ^{3,0}`). Normalized so that
/// `|θ'^{123}| = 1` in a unitary frame; the same routine defines `|Ω|_ω`.
pub fn tensor_norm(j: &AlmostComplexStructure, omega: &Form, t: &Tensor3) -> Result<f64> {
    let u = unitary_frame(j, omega)?;
    let tu = tensor_to_frame(t, j.frame(), &u);
    Ok((tu.iter().flatten().flatten().map(|c| c.norm_sqr()).sum::<f64>() / 6.0).sqrt())
}

/// Values `N(Z_a, Z_b) = P^{0,1}[Z_a, Z_b]` on the pivot frame.
pub struct RhoMap {
    n_vectors: Vec<Vec<Vec<C64>>>,
    z: Vec<Vec<C64>>,
}

impl RhoMap {
    pub fn new(alg: &CoframeAlgebra, j: &AlmostComplexStructure) -> Self {
        let f = j.frame();
        let z: Vec<Vec<C64>> = (0..3).map(|a| f.z(a)).collect();
        let zb: Vec<Vec<C64>> = (0..3).map(|a| f.z_bar(a)).collect();
        let tb: Vec<Form> = (0..3).map(|a| f.theta_bar(a)).collect();
        let mut n_vectors = vec![vec![vec![ZERO; 6]; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let br = alg.bracket(&z[a], &z[b]);
                let mut v = vec![ZERO; 6];
                for d in 0..3 {
                    let coeff: C64 = (0..6).map(|i| tb[d].coeffs()[i] * br[i]).sum();
                    for i in 0..6 {
                        v[i] += coeff * zb[d][i];
                    }
                }
                n_vectors[a][b] = v;
            }
        }
        RhoMap { n_vectors, z }
    }

    /// `ρ(Z_a, Z_b, Z_c) = ω(N(Z_a, Z_b), Z_c)`.
    pub fn rho(&self, omega: &Form) -> Tensor3 {
        let w = omega;
        let mut out = zero_tensor();
        for a in 0..3 {
            for b in 0..3 {
                if a == b {
                    continue;
                }
                let inner = w.contract(&self.n_vectors[a][b]).unwrap();
                for c in 0..3 {
                    out[a][b][c] = inner.contract(&self.z[c]).unwrap().coeffs()[0];
                }
            }
        }
        out
    }
}

pub fn rho_tensor(alg: &CoframeAlgebra, j: &AlmostComplexStructure, omega: &Form) -> Tensor3 {
    RhoMap::new(alg, j).rho(omega)
}

/// Components in the real coframe: `T_e(e_i, e_j, e_k)` for `i < j` and all
/// `k`, real parts followed by imaginary parts (180 numbers).
pub fn tensor_e_coordinates(frame: &Frame10, t: &Tensor3) -> Vec<f64> {
    let th = frame.theta_matrix();
    let mut re = Vec::with_capacity(90);
    let mut im = Vec::with_capacity(90);
    for i in 0..6 {
        for jj in (i + 1)..6 {
            for k in 0..6 {
                let mut s = ZERO;
                for a in 0..3 {
                    for b in 0..3 {
                        let ab = th[(a, i)] * th[(b, jj)];
                        if t[a][b].iter().all(|x| *x == ZERO) {
                            continue;
                        }
                        for c in 0..3 {
                            s += t[a][b][c] * ab * th[(c, k)];
                        }
                    }
                }
                re.push(s.re);
                im.push(s.im);
            }
        }
    }
    re.extend(im);
    re
}

#[derive(Clone, Debug)]
pub struct TorsionReport {
    pub rho: Tensor3,
    pub skew_part: Tensor3,
    pub rho_norm: f64,
    /// `|ρ − Alt ρ|_ω`.
    pub residual: f64,
    pub admits_connection: bool,
}

pub(crate) fn check_hermitian_form(j: &AlmostComplexStructure, omega: &Form) -> Result<()> {
    if omega.dim() != 6 || omega.degree() != 2 {
        return Err(GeometryError::Invalid("ω must be a 2-form on the 6-dimensional coframe".into()));
    }
    let scale = omega.max_abs().max(1e-300);
    if !omega.is_real(1e-12 * scale) {
        return Err(GeometryError::Invalid("ω must be real".into()));
    }
    let off = (&j.project(omega, 1, 1)? - omega).max_abs();
    if off > 1e-10 * scale {
        return Err(GeometryError::MixedBidegree(off / scale));
    }
    let (pos, min) = j.is_positive(omega);
    if !pos {
        return Err(GeometryError::NotPositiveDefinite(format!(
            "ω(X, JX) has smallest eigenvalue {min:e}"
        )));
    }
    Ok(())
}

pub fn torsion_criterion(alg: &CoframeAlgebra, j: &AlmostComplexStructure, omega: &Form) -> Result<TorsionReport> {
    check_hermitian_form(j, omega)?;
    let rho = rho_tensor(alg, j, omega);
    let skew_part = alt3(&rho);
    let rho_norm = tensor_norm(j, omega, &rho)?;
    let residual = tensor_norm(j, omega, &tensor_sub(&rho, &skew_part))?;
    let admits_connection = residual <= TOL_IDENTITY * rho_norm;
    Ok(TorsionReport { rho, skew_part, rho_norm, residual, admits_connection })
}

#[derive(Clone, Debug)]
pub struct ConformalSolution {
    /// Orthonormal basis (in coefficient space) of the real solution space.
    pub basis: Vec<Form>,
    /// Singular values of the linear system, increasing.
    pub singular_values: Vec<f64>,
    pub contains_positive: bool,
    /// The positive solution scaled so that `|ρ|_ω = 1`, when the solution
    /// space is a line containing a positive form.
    pub omega: Option<Form>,
}

impl ConformalSolution {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }
}

/// Matrix of `a ↦ C(a) − Alt C(a)` on `Λ^{1,1}_ℝ`, in coframe coordinates.
fn complement_system(alg: &CoframeAlgebra, j: &AlmostComplexStructure) -> (Vec<Form>, DMatrix<f64>) {
    let basis = j.real11_basis().clone();
    let map = RhoMap::new(alg, j);
    let cols: Vec<Vec<f64>> = basis
        .iter()
        .map(|w| {
            let t = map.rho(w);
            tensor_e_coordinates(j.frame(), &tensor_sub(&t, &alt3(&t)))
        })
        .collect();
    let m = DMatrix::from_fn(cols[0].len(), cols.len(), |r, c| cols[c][r]);
    (basis, m)
}

fn combine(basis: &[Form], v: &DVector<f64>) -> Form {
    let mut w = Form::zero(6, 2);
    for (b, &x) in basis.iter().zip(v.iter()) {
        w += &(b * x);
    }
    w
}

/// Flips `ω` so that the trace of its associated metric is positive.
fn orient(j: &AlmostComplexStructure, omega: Form) -> Form {
    if j.associated_metric(&omega).trace() < 0.0 {
        -&omega
    } else {
        omega
    }
}

/// Scales a Hermitian form so that `|ρ|_ω = 1`. Since `|ρ|_{kω} = k^{-1/2} |ρ|_ω`,
/// the factor is `|ρ|²_ω`.
pub fn normalize_rho(alg: &CoframeAlgebra, j: &AlmostComplexStructure, omega: &Form) -> Result<Form> {
    let rho = rho_tensor(alg, j, omega);
    let n = tensor_norm(j, omega, &rho)?;
    if n == 0.0 {
        return Err(GeometryError::DegenerateNijenhuis("ρ vanishes".into()));
    }
    Ok(omega * (n * n))
}

pub fn conformal_solve(alg: &CoframeAlgebra, j: &AlmostComplexStructure) -> Result<ConformalSolution> {
    let (basis, m) = complement_system(alg, j);
    let pairs = linalg::right_singular_pairs(&m);
    let smax = pairs.last().map(|p| p.0).unwrap_or(0.0).max(1.0);
    let singular_values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let sol: Vec<Form> = pairs
        .iter()
        .filter(|(s, _)| *s <= TOL_RANK * smax)
        .map(|(_, v)| combine(&basis, v))
        .collect();
    let mut omega = None;
    let contains_positive = if sol.len() == 1 {
        let w = orient(j, sol[0].clone());
        let pos = j.is_positive(&w).0;
        if pos {
            omega = Some(normalize_rho(alg, j, &w)?);
        }
        pos
    } else if sol.is_empty() {
        false
    } else {
        let reference = reference_hermitian_form(j);
        let mut proj = Form::zero(6, 2);
        for b in &sol {
            let c: f64 = b.coeffs().iter().zip(reference.coeffs()).map(|(x, y)| x.re * y.re).sum();
            proj += &(b * c);
        }
        std::iter::once(proj)
            .chain(sol.iter().cloned())
            .any(|w| j.is_positive(&w).0 || j.is_positive(&-&w).0)
    };
    Ok(ConformalSolution { basis: sol, singular_values, contains_positive, omega })
}

/// `ω₀(X, Y) = g₀(JX, Y)` for the J-invariant average `g₀ = ½(Id + JᵀJ)`.
pub fn reference_hermitian_form(j: &AlmostComplexStructure) -> Form {
    let jm = j.matrix();
    let g0 = (DMatrix::<f64>::identity(6, 6) + jm.transpose() * jm) * 0.5;
    let w = jm.transpose() * g0;
    let mut f = Form::zero(6, 2);
    for a in 0..6 {
        for b in (a + 1)..6 {
            f.set(&[a, b], C64::new(0.5 * (w[(a, b)] - w[(b, a)]), 0.0));
        }
    }
    f
}

/// The least-squares Hermitian form: the unit (coefficient-norm) real
/// (1,1)-form minimising the skew-torsion defect, oriented to positive trace,
/// with the smallest singular value of the system.
pub fn least_squares_omega(alg: &CoframeAlgebra, j: &AlmostComplexStructure) -> (Form, f64) {
    let (basis, m) = complement_system(alg, j);
    let pairs = linalg::right_singular_pairs(&m);
    let (s, v) = &pairs[0];
    (orient(j, combine(&basis, v)), *s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Alt12Report {
    /// Rank on `Λ¹ ⊗ Λ²` (90-dimensional).
    pub rank_full: usize,
    /// Rank on `Λ¹ ⊗ Λ^{1,1}_ℝ` (54-dimensional).
    pub rank_hermitian: usize,
    /// Dimension of the image of `Λ¹ ⊗ Λ^{1,1}_ℝ` plus `(Λ^{2,1} ⊕ Λ^{1,2})_ℝ`.
    pub span_with_mixed_forms: usize,
}

/// `(Alt₁₂ A)(x, y; z) = A(x; y, z) − A(y; x, z)`, as coordinates
/// `(x < y, z)` in `Λ² ⊗ Λ¹`.
fn alt12_image(a: impl Fn(usize, usize, usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(90);
    for x in 0..6 {
        for y in (x + 1)..6 {
            for z in 0..6 {
                out.push(a(x, y, z) - a(y, x, z));
            }
        }
    }
    out
}

pub fn alt12_analysis(j: &AlmostComplexStructure) -> Alt12Report {
    let masks2 = Form::basis_masks(6, 2);
    let mut full = Vec::new();
    for p in 0..6 {
        for &m in masks2 {
            let idx = mask_indices(m);
            full.push(alt12_image(|x, y, z| {
                if x != p {
                    0.0
                } else if y == idx[0] && z == idx[1] {
                    1.0
                } else if y == idx[1] && z == idx[0] {
                    -1.0
                } else {
                    0.0
                }
            }));
        }
    }
    let mut herm = Vec::new();
    for p in 0..6 {
        for w in j.real11_basis() {
            let wm = two_form_matrix(w);
            herm.push(alt12_image(|x, y, z| if x == p { wm[(y, z)] } else { 0.0 }));
        }
    }
    let mixed: Vec<Vec<f64>> = {
        let cols: Vec<Vec<f64>> = Form::basis_masks(6, 3)
            .iter()
            .map(|&m| {
                let f = Form::monomial(6, &mask_indices(m));
                let g = &j.project(&f, 2, 1).unwrap() + &j.project(&f, 1, 2).unwrap();
                g.coeffs().iter().map(|c| c.re).collect()
            })
            .collect();
        let mat = DMatrix::from_fn(20, 20, |r, c| cols[c][r]);
        linalg::column_basis(&mat, TOL_RANK)
            .into_iter()
            .map(|v| {
                let f = Form::from_coeffs(6, 3, v.iter().map(|&x| C64::new(x, 0.0)).collect()).unwrap();
                alt12_image(|x, y, z| if x == y || y == z || x == z { 0.0 } else { f.get(&[x, y, z]).re * 0.5 })
            })
            .collect()
    };
    let to_mat = |cols: &[Vec<f64>]| DMatrix::from_fn(90, cols.len(), |r, c| cols[c][r]);
    let combined: Vec<Vec<f64>> = herm.iter().chain(mixed.iter()).cloned().collect();
    Alt12Report {
        rank_full: linalg::rank(&to_mat(&full), TOL_RANK),
        rank_hermitian: linalg::rank(&to_mat(&herm), TOL_RANK),
        span_with_mixed_forms: linalg::rank(&to_mat(&combined), TOL_RANK),
    }
}
