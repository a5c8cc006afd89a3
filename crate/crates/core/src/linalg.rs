//! Small dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(cr)
}

pub fn re_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn im_part(m: &CMat) -> RMat {
    m.map(|z| z.im)
}

pub fn ceye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn sym_part(m: &CMat) -> CMat {
    (m + m.transpose()) * cr(0.5)
}

pub fn antisym_part(m: &CMat) -> CMat {
    (m - m.transpose()) * cr(0.5)
}

/// Frobenius norm.
pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn rfro(m: &RMat) -> f64 {
    m.iter().map(|z| z * z).sum::<f64>().sqrt()
}

/// Standard symplectic matrix Ω = [[0, −I], [I, 0]] of size 2m, so that
/// uᵀΩv = ⟨ξ_u, x_v⟩ − ⟨x_u, ξ_v⟩ (the form Σ dξ_j ∧ dx_j).
pub fn omega(m: usize) -> RMat {
    let mut o = RMat::zeros(2 * m, 2 * m);
    for j in 0..m {
        o[(j, m + j)] = -1.0;
        o[(m + j, j)] = 1.0;
    }
    o
}

pub fn comega(m: usize) -> CMat {
    to_complex(&omega(m))
}

/// Schur form Q T Q* of a square complex matrix, with T upper triangular.
pub fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    let s = Schur::try_new(m.clone(), 1e-15 * (1.0 + fro(m)), 10_000)
        .ok_or_else(|| Error::Singular("Schur iteration did not converge".into()))?;
    Ok(s.unpack())
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    if m.nrows() == 0 {
        return Ok(vec![]);
    }
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

fn check_right_half_plane(ev: &[C64]) -> Result<()> {
    let scale = ev.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    for z in ev {
        if z.re <= 1e-12 * scale {
            return Err(Error::BranchAmbiguity(format!("{:.3e}{:+.3e}i", z.re, z.im)));
        }
    }
    Ok(())
}

/// Principal square root of a matrix whose spectrum lies in the open right
/// half-plane. Computed from the Schur form with the triangular recurrence.
pub fn sqrtm(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    let (q, t) = schur(m)?;
    let ev: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    check_right_half_plane(&ev)?;
    let mut u = CMat::zeros(n, n);
    for i in 0..n {
        u[(i, i)] = t[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= u[(i, k)] * u[(k, j)];
            }
            let den = u[(i, i)] + u[(j, j)];
            if den.norm() < 1e-300 {
                return Err(Error::Singular("sqrtm recurrence".into()));
            }
            u[(i, j)] = s / den;
        }
    }
    Ok(&q * u * q.adjoint())
}

/// det(M)^{1/2} as the product of principal square roots of the eigenvalues.
/// Continuous along any path of matrices with spectrum in Re > 0 starting at I.
pub fn det_sqrt(m: &CMat) -> Result<C64> {
    let ev = eigenvalues(m)?;
    check_right_half_plane(&ev)?;
    Ok(ev.iter().map(|z| z.sqrt()).product())
}

pub fn det_inv_sqrt(m: &CMat) -> Result<C64> {
    Ok(cr(1.0) / det_sqrt(m)?)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    SVD::new(m.clone(), false, false).singular_values.iter().copied().collect()
}

pub fn cond(m: &CMat) -> f64 {
    let s = singular_values(m);
    let mx = s.iter().copied().fold(0.0, f64::max);
    let mn = s.iter().copied().fold(f64::INFINITY, f64::min);
    if mn == 0.0 {
        f64::INFINITY
    } else {
        mx / mn
    }
}

/// Inverse with a conditioning guard.
pub fn inverse(m: &CMat, max_cond: f64) -> Result<CMat> {
    let c = cond(m);
    if !(c < max_cond) {
        return Err(Error::Singular(format!("condition number {:.3e}", c)));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("matrix inverse".into()))
}

pub fn solve(m: &CMat, b: &CMat) -> Result<CMat> {
    m.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular("linear solve".into()))
}

/// Numerical rank with threshold `rtol · σ_max`.
pub fn rank(m: &CMat, rtol: f64) -> usize {
    let s = singular_values(m);
    let mx = s.iter().copied().fold(0.0, f64::max);
    if mx == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rtol * mx).count()
}

/// Right singular vectors of a (padded square) matrix, with singular values
/// sorted in decreasing order.
fn full_right_svd(m: &CMat) -> (Vec<f64>, CMat) {
    let (r, c) = m.shape();
    let sq = if r < c {
        let mut p = CMat::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(sq, false, true);
    let vt = svd.v_t.expect("v_t requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let s: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let v = CMat::from_fn(c, idx.len(), |row, k| vt[(idx[k], row)].conj());
    (s, v)
}

/// Orthonormal basis of the kernel of `m` (singular values ≤ `rtol · σ_max`).
pub fn null_space(m: &CMat, rtol: f64) -> CMat {
    let c = m.ncols();
    if m.nrows() == 0 {
        return ceye(c);
    }
    let (s, v) = full_right_svd(m);
    let mx = s.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..c)
        .filter(|&k| s.get(k).copied().unwrap_or(0.0) <= rtol * mx || mx == 0.0)
        .collect();
    CMat::from_fn(c, keep.len(), |row, k| v[(row, keep[k])])
}

/// Orthonormal basis of the column space.
pub fn orth(m: &CMat, rtol: f64) -> CMat {
    if m.ncols() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("u requested");
    let mx = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > rtol * mx && mx > 0.0)
        .collect();
    CMat::from_fn(m.nrows(), keep.len(), |r, k| u[(r, keep[k])])
}

/// Largest sine of the angle between a column of span(`b`) and span(`a`).
/// Zero iff span(b) ⊂ span(a).
pub fn containment_defect(a: &CMat, b: &CMat) -> f64 {
    let qa = orth(a, 1e-12);
    let qb = orth(b, 1e-12);
    if qb.ncols() == 0 {
        return 0.0;
    }
    let resid = &qb - &qa * (qa.adjoint() * &qb);
    singular_values(&resid).into_iter().fold(0.0, f64::max)
}

/// Sine of the largest principal angle between two subspaces; 1 when the
/// dimensions differ.
pub fn subspace_distance(a: &CMat, b: &CMat) -> f64 {
    let qa = orth(a, 1e-12);
    let qb = orth(b, 1e-12);
    if qa.ncols() != qb.ncols() {
        return 1.0;
    }
    containment_defect(&qa, &qb).max(containment_defect(&qb, &qa))
}

/// Basis of span(a) ∩ span(b).
pub fn intersection(a: &CMat, b: &CMat, rtol: f64) -> CMat {
    let qa = orth(a, 1e-12);
    let qb = orth(b, 1e-12);
    let mut stacked = CMat::zeros(qa.nrows(), qa.ncols() + qb.ncols());
    stacked.view_mut((0, 0), qa.shape()).copy_from(&qa);
    stacked
        .view_mut((0, qa.ncols()), qb.shape())
        .copy_from(&(-&qb));
    let ns = null_space(&stacked, rtol);
    let coef = ns.rows(0, qa.ncols()).into_owned();
    orth(&(&qa * coef), rtol)
}

pub fn hstack(blocks: &[&CMat]) -> CMat {
    let r = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(r, c);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.nrows(), r);
        out.view_mut((0, off), b.shape()).copy_from(*b);
        off += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&CMat]) -> CMat {
    let c = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(r, c);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.ncols(), c);
        out.view_mut((off, 0), b.shape()).copy_from(*b);
        off += b.nrows();
    }
    out
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &RMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return vec![];
    }
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn herm_eigenvalues(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return vec![];
    }
    let h = (m + m.adjoint()) * cr(0.5);
    let mut v: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Symmetric square root of a real symmetric positive definite matrix.
pub fn spd_sqrt(m: &RMat) -> Result<RMat> {
    let e = SymmetricEigen::new(m.clone());
    if e.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::Invariant("matrix is not positive definite".into()));
    }
    let d = RMat::from_diagonal(&e.eigenvalues.map(f64::sqrt));
    Ok(&e.eigenvectors * d * e.eigenvectors.transpose())
}

/// Symmetric solution X of G X + X G = Q for symmetric positive definite G.
pub fn lyapunov_sym(g: &RMat, q: &RMat) -> RMat {
    let e = SymmetricEigen::new(g.clone());
    let v = &e.eigenvectors;
    let qt = v.transpose() * q * v;
    let n = g.nrows();
    let xt = RMat::from_fn(n, n, |i, j| qt[(i, j)] / (e.eigenvalues[i] + e.eigenvalues[j]));
    v * xt * v.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrtm_squares_back() {
        let d = CMat::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.3), C64::new(0.4, -0.1), C64::new(0.4, -0.1), C64::new(1.0, 0.2)],
        );
        let l = sqrtm(&d).unwrap();
        assert!(fro(&(&l * &l - &d)) < 1e-13);
        assert!(fro(&(&l - l.transpose())) < 1e-13);
    }

    #[test]
    fn sqrtm_identity_is_identity() {
        let l = sqrtm(&ceye(4)).unwrap();
        assert!(fro(&(l - ceye(4))) < 1e-15);
    }

    #[test]
    fn det_sqrt_of_scaled_identity() {
        let v = det_sqrt(&(ceye(4) * cr(2.0))).unwrap();
        assert!((v - cr(4.0)).norm() < 1e-14);
    }

    #[test]
    fn det_sqrt_rejects_left_half_plane() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![cr(1.0), cr(-1.0)]));
        assert!(matches!(det_sqrt(&m), Err(Error::BranchAmbiguity(_))));
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = CMat::from_row_slice(1, 3, &[cr(1.0), cr(1.0), cr(0.0)]);
        let ns = null_space(&m, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert!(fro(&(&m * &ns)) < 1e-14);
    }

    #[test]
    fn intersection_of_planes() {
        let a = CMat::from_row_slice(3, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(1.0), cr(0.0), cr(0.0)]);
        let b = CMat::from_row_slice(3, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(0.0), cr(0.0), cr(1.0)]);
        let x = intersection(&a, &b, 1e-10);
        assert_eq!(x.ncols(), 1);
        assert!((x[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lyapunov_residual() {
        let g = RMat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let q = RMat::from_row_slice(2, 2, &[1.0, -0.3, -0.3, 0.7]);
        let x = lyapunov_sym(&g, &q);
        assert!(rfro(&(&g * &x + &x * &g - q)) < 1e-13);
    }
}
