//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SVD};

/// SVD with a convergence threshold below machine epsilon. nalgebra's default
/// threshold can stop early on oblique projectors, leaving `UΣVᵀ` off by
/// 1e-4; the tighter threshold restores backward stability.
fn svd(m: DMatrix<f64>, u: bool, v: bool) -> SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    match m.clone().try_svd(u, v, 1e-18, 10_000) {
        Some(s) => s,
        None => m.svd(u, v),
    }
}

fn padded(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() >= m.ncols() {
        return m.clone();
    }
    let mut p = DMatrix::zeros(m.ncols(), m.ncols());
    p.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    p
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = svd(m.clone(), false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with threshold `rel_tol * max(σ_max, 1)`.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let cut = rel_tol * s.first().copied().unwrap_or(0.0).max(1.0);
    s.iter().filter(|&&x| x > cut).count()
}

/// Right singular pairs of `m`, sorted by increasing singular value. The
/// returned list always has `m.ncols()` entries.
pub fn right_singular_pairs(m: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let p = padded(m);
    let svd = svd(p, false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut pairs: Vec<(f64, DVector<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(r, &s)| (s, vt.row(r).transpose()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Orthonormal basis of the numerical null space, threshold
/// `rel_tol * max(σ_max, 1)`.
pub fn nullspace(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let pairs = right_singular_pairs(m);
    let smax = pairs.last().map(|p| p.0).unwrap_or(0.0).max(1.0);
    pairs.into_iter().filter(|(s, _)| *s <= rel_tol * smax).map(|(_, v)| v).collect()
}

/// Orthonormal basis of the column span of `m`.
pub fn column_basis(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let svd = svd(m.clone(), true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max().max(1.0);
    let mut cols: Vec<(f64, DVector<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > rel_tol * smax)
        .map(|(r, &s)| (s, u.column(r).into_owned()))
        .collect();
    cols.sort_by(|a, b| b.0.total_cmp(&a.0));
    cols.into_iter().map(|(_, v)| v).collect()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().min()
}

/// Componentwise ratio `a_i / b_i` over the entries where `|b_i|` exceeds
/// `1e-9 · max |b|`. Returns the mean ratio and the relative spread
/// `(max − min) / |mean|`, or `None` if `b` vanishes or the supports differ.
pub fn ratio_spread(a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    let bmax = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let amax = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if bmax == 0.0 || a.len() != b.len() {
        return None;
    }
    let mut ratios = Vec::new();
    for (&x, &y) in a.iter().zip(b) {
        if y.abs() > 1e-9 * bmax {
            ratios.push(x / y);
        } else if x.abs() > 1e-9 * amax {
            return None;
        }
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((mean, (hi - lo) / mean.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_is_backward_stable_on_oblique_projector() {
        // P = A diag(1, 1, 0) A⁻¹ with a badly skewed A
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, 0.3, 0.0, 1.0, 0.8, 0.2, 0.0, 1.0]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]));
        let p = &a * d * a.clone().try_inverse().unwrap();
        let b = column_basis(&p, 1e-9);
        assert_eq!(b.len(), 2);
        for v in b {
            assert!((&p * &v - &v).amax() < 1e-14);
        }
    }

    #[test]
    fn ratio_spread_detects_proportionality() {
        let (r, s) = ratio_spread(&[2.0, 0.0, -4.0], &[1.0, 0.0, -2.0]).unwrap();
        assert_eq!((r, s), (2.0, 0.0));
        assert!(ratio_spread(&[2.0, 1.0, -4.0], &[1.0, 0.0, -2.0]).is_none());
        assert!(ratio_spread(&[2.0, 3.0], &[1.0, 1.0]).unwrap().1 > 0.1);
        assert!(ratio_spread(&[1.0], &[0.0]).is_none());
    }

    #[test]
    fn rank_and_nullspace_of_wide_matrix() {
        let m = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 0.0, 0.0, 2.0, 4.0, 0.0, 1.0]);
        assert_eq!(rank(&m, 1e-12), 2);
        let ns = nullspace(&m, 1e-12);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!((&m * v).norm() < 1e-12);
        }
    }

    #[test]
    fn column_basis_spans() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 0.0, 1.0, 2.0]);
        assert_eq!(column_basis(&m, 1e-12).len(), 1);
    }
}
