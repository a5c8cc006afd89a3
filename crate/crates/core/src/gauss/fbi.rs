//! Linear FBI phase pairs ψ(α, x), ψ*(x, β) generating Λ_→ and Λ_←.
//!
//! After gauge normalization the phase is pulled back by a real Darboux
//! frame S with Sᵀ(2R)S = Ω and shifted by the flat gauge
//! ½⟨α_x, α_ξ⟩ − ½⟨β_x, β_ξ⟩, so that TΣ = {(u, (u_ξ, 0))} and the
//! identification Σ ≅ T*R^n reads u ↦ (u_x, u_ξ).

use num_complex::Complex64 as C64;

use super::I_UNIT;
use crate::error::{Error, Result};
use crate::linalg::{cond, cr, det_inv_sqrt, fro, herm_eigenvalues, im_part, null_space, re_part, to_complex, CMat, RMat};
use crate::phase::QuadraticPhase;
use crate::report::Report;

#[derive(Clone, Debug)]
pub struct FbiPair {
    pub n: usize,
    /// Darboux frame, columns (x_1..x_n, ξ_1..ξ_n).
    pub frame: RMat,
    /// Gauge Hessian removed before flattening.
    pub gauge: RMat,
    /// Hessian of ψ in (α_x, α_ξ, x).
    pub psi: CMat,
    /// Hessian of ψ* in (x, β_x, β_ξ).
    pub psi_star: CMat,
    pub checks: Report,
}

impl FbiPair {
    pub fn psi_value(&self, alpha: &[f64], x: &[f64]) -> C64 {
        quad_value(&self.psi, alpha.iter().chain(x))
    }

    pub fn psi_star_value(&self, x: &[f64], beta: &[f64]) -> C64 {
        quad_value(&self.psi_star, x.iter().chain(beta))
    }
}

fn quad_value<'a>(h: &CMat, z: impl Iterator<Item = &'a f64>) -> C64 {
    let v: Vec<f64> = z.copied().collect();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..v.len() {
        for j in 0..v.len() {
            s += h[(i, j)] * v[i] * v[j];
        }
    }
    s * 0.5
}

/// Symplectic Gram–Schmidt for ω(u, v) = uᵀWv, returning S with SᵀWS = Ω.
/// The identity is returned when W is already Ω.
pub fn darboux_frame(w: &RMat) -> Result<RMat> {
    let m = w.nrows();
    if m % 2 != 0 || w.ncols() != m {
        return Err(Error::Dimension("symplectic form must be square of even size".into()));
    }
    let n = m / 2;
    let om = |u: &nalgebra::DVector<f64>, v: &nalgebra::DVector<f64>| (u.transpose() * w * v)[(0, 0)];
    let mut pool: Vec<usize> = (0..m).collect();
    let mut xs: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut xis: Vec<nalgebra::DVector<f64>> = Vec::new();
    let project = |v: nalgebra::DVector<f64>, xs: &[nalgebra::DVector<f64>], xis: &[nalgebra::DVector<f64>]| {
        let mut p = v.clone();
        for (x, xi) in xs.iter().zip(xis) {
            let a = om(&v, xi);
            let b = -om(&v, x);
            p += x * a + xi * b;
        }
        p
    };
    for _ in 0..n {
        let (pos, x) = pool
            .iter()
            .enumerate()
            .map(|(p, &i)| (p, project(nalgebra::DVector::from_fn(m, |r, _| (r == i) as u8 as f64), &xs, &xis)))
            .find(|(_, v)| v.norm() > 1e-10)
            .ok_or_else(|| Error::Singular("degenerate symplectic form".into()))?;
        pool.remove(pos);
        let mut best: Option<(usize, nalgebra::DVector<f64>, f64)> = None;
        for (p, &i) in pool.iter().enumerate() {
            let v = project(nalgebra::DVector::from_fn(m, |r, _| (r == i) as u8 as f64), &xs, &xis);
            let s = om(&x, &v);
            if best.as_ref().map_or(true, |b| s.abs() > b.2.abs() + 1e-12) {
                best = Some((p, v, s));
            }
        }
        let (p, v, s) = best.ok_or_else(|| Error::Singular("degenerate symplectic form".into()))?;
        if s.abs() < 1e-12 {
            return Err(Error::Singular("degenerate symplectic form".into()));
        }
        pool.remove(p);
        xis.push(v * (-1.0 / s));
        xs.push(x);
    }
    let mut s = RMat::zeros(m, m);
    for k in 0..n {
        s.set_column(k, &xs[k]);
        s.set_column(n + k, &xis[k]);
    }
    Ok(s)
}

/// Hess = Y W⁻¹ for a Lagrangian given by the column pairs (W, Y).
fn generating_hessian(w: &CMat, y: &CMat, what: &str) -> Result<CMat> {
    let c = cond(w);
    if !(c < 1e10) {
        return Err(Error::Invariant(format!(
            "{what} is not transverse to the vertical (condition number {c:.3e})"
        )));
    }
    let winv = w.clone().try_inverse().ok_or_else(|| Error::Singular(what.into()))?;
    Ok(y * winv)
}

pub fn fbi_phase_pair(q: &QuadraticPhase) -> Result<FbiPair> {
    let m = q.m();
    let n = q.n;
    let gauge = re_part(&((&q.a - &q.c) * cr(0.5)));
    let gc = to_complex(&gauge);
    let a0 = &q.a - &gc;
    let c0 = &q.c + &gc;
    let r = re_part(&((q.b.transpose() - &q.b) * cr(0.5)));
    let s = darboux_frame(&(r * 2.0))?;
    let sc = to_complex(&s);
    let mut pd = CMat::zeros(m, m);
    for k in 0..n {
        pd[(k, n + k)] = cr(0.5);
        pd[(n + k, k)] = cr(0.5);
    }
    let a = sc.transpose() * a0 * &sc + &pd;
    let b = sc.transpose() * &q.b * &sc;
    let c = sc.transpose() * c0 * &sc - &pd;
    let apb = &a + &b;
    let bt = b.transpose();

    // Λ_→ = {(u + v, (A+B)u + Av; u_x, u_ξ) : v ∈ ker Bᵀ}
    let kbt = null_space(&bt, 1e-8);
    let kb = null_space(&b, 1e-8);
    if kbt.ncols() != n || kb.ncols() != n {
        return Err(Error::Dimension(format!(
            "dim ker Bᵀ = {}, dim ker B = {} (expected {n})",
            kbt.ncols(),
            kb.ncols()
        )));
    }
    let mut w = CMat::zeros(3 * n, 3 * n);
    let mut y = CMat::zeros(3 * n, 3 * n);
    let mut ws = CMat::zeros(3 * n, 3 * n);
    let mut ys = CMat::zeros(3 * n, 3 * n);
    for k in 0..m {
        let col = k;
        w[(k, col)] = cr(1.0);
        if k < n {
            w[(m + k, col)] = cr(1.0);
            ws[(k, col)] = cr(1.0);
        } else {
            y[(m + k - n, col)] = cr(-1.0);
            ys[(k - n, col)] = cr(1.0);
        }
        y.view_mut((0, col), (m, 1)).copy_from(&apb.column(k));
        ws[(n + k, col)] = cr(1.0);
        // ψ*_β = −β*, with β* = −(Bᵀ + C)u on Σ
        ys.view_mut((n, col), (m, 1)).copy_from(&(&bt + &c).column(k));
    }
    for j in 0..n {
        let col = m + j;
        let v = kbt.column(j);
        w.view_mut((0, col), (m, 1)).copy_from(&v);
        y.view_mut((0, col), (m, 1)).copy_from(&(&a * v));
        let vs = kb.column(j);
        ws.view_mut((n, col), (m, 1)).copy_from(&vs);
        ys.view_mut((n, col), (m, 1)).copy_from(&(&c * vs));
    }
    let psi = generating_hessian(&w, &y, "Λ_→")?;
    let psi_star = generating_hessian(&ws, &ys, "Λ_←")?;

    let mut checks = Report::new();
    let tol = 1e-10;
    checks
        .max("psi_symmetric", fro(&(&psi - psi.transpose())), tol)
        .max("psi_star_symmetric", fro(&(&psi_star - psi_star.transpose())), tol);
    let psi = (&psi + psi.transpose()) * cr(0.5);
    let psi_star = (&psi_star + psi_star.transpose()) * cr(0.5);
    let im_min = |h: &CMat| herm_eigenvalues(&im_part(h).map(cr)).first().copied().unwrap_or(f64::NAN);
    checks
        .min("psi_im_min_eig", im_min(&psi), -tol)
        .min("psi_star_im_min_eig", im_min(&psi_star), -tol);
    // ψ = ⟨α_x − x, α_ξ⟩ + O(|α_x − x|²): on α_x = x the α_x-gradient is α_ξ
    // and the x-gradient is −α_ξ; the α_ξ-gradient vanishes.
    let mut lin = 0.0f64;
    for k in 0..m {
        let mut z = nalgebra::DVector::<C64>::zeros(3 * n);
        z[k] = cr(1.0);
        if k < n {
            z[m + k] = cr(1.0);
        }
        let g = &psi * &z;
        for i in 0..n {
            let want_ax = if k == n + i { 1.0 } else { 0.0 };
            lin = lin
                .max((g[i] - cr(want_ax)).norm())
                .max(g[n + i].norm())
                .max((g[m + i] + cr(want_ax)).norm());
        }
    }
    checks.max("psi_linear_part", lin, tol);
    Ok(FbiPair {
        n,
        frame: s,
        gauge,
        psi,
        psi_star,
        checks,
    })
}

/// Model phase whose FBI pair is ψ = ⟨α_x − x, α_ξ⟩ + (i/2)|α_x − x|²:
/// φ = ½⟨α_x − β_x, α_ξ + β_ξ⟩ + (i/4)|α − β|² in block coordinates.
pub fn flat_phase(n: usize) -> Result<QuadraticPhase> {
    let m = 2 * n;
    let mut a = CMat::identity(m, m) * (I_UNIT * 0.5);
    let mut b = CMat::identity(m, m) * (I_UNIT * -0.5);
    let mut c = CMat::identity(m, m) * (I_UNIT * 0.5);
    for k in 0..n {
        a[(k, n + k)] = cr(0.5);
        a[(n + k, k)] = cr(0.5);
        c[(k, n + k)] = cr(-0.5);
        c[(n + k, k)] = cr(-0.5);
        b[(k, n + k)] = cr(0.5);
        b[(n + k, k)] = cr(-0.5);
    }
    QuadraticPhase::new(n, vec![0.0; m], vec![0.0; m], a, b, c)
}

pub fn flat_fbi_pair(n: usize) -> Result<FbiPair> {
    fbi_phase_pair(&flat_phase(n)?)
}

/// σ = det((1/i)∂²_{α_x}(ψ*(x, α) + ψ(α, y)))^{−1/2}.
pub fn fbi_density_sigma(pair: &FbiPair) -> Result<C64> {
    let n = pair.n;
    let h = pair.psi.view((0, 0), (n, n)) + pair.psi_star.view((n, n), (n, n));
    det_inv_sqrt(&(h * (-I_UNIT)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::make_bargmann;

    #[test]
    fn flat_pair_closed_form() {
        let p = flat_fbi_pair(1).unwrap();
        assert!(p.checks.passed(), "{:?}", p.checks.failures());
        assert!((&p.frame - RMat::identity(2, 2)).norm() < 1e-15);
        let i = I_UNIT;
        let want = CMat::from_row_slice(3, 3, &[i, cr(1.0), -i, cr(1.0), cr(0.0), cr(-1.0), -i, cr(-1.0), i]);
        assert!(fro(&(&p.psi - want)) < 1e-13);
        // ψ*(x, β) = ⟨x − β_x, β_ξ⟩ + (i/2)|x − β_x|²
        let want_s = CMat::from_row_slice(3, 3, &[i, -i, cr(1.0), -i, i, cr(-1.0), cr(1.0), cr(-1.0), cr(0.0)]);
        assert!(fro(&(&p.psi_star - want_s)) < 1e-13);
        let s = fbi_density_sigma(&p).unwrap();
        assert!((s - cr(0.5f64.sqrt())).norm() < 1e-14);
    }

    #[test]
    fn flat_sigma_in_dimension_two() {
        let s = fbi_density_sigma(&flat_fbi_pair(2).unwrap()).unwrap();
        assert!((s - cr(0.5)).norm() < 1e-13);
    }

    #[test]
    fn bargmann_pair_is_positive() {
        let q = make_bargmann(1).quadratic_model(&[0.0, 0.0]).unwrap();
        let p = fbi_phase_pair(&q).unwrap();
        assert!(p.checks.passed(), "{:?}", p.checks.failures());
        // Im ψ along α_x − x
        assert!(p.psi[(0, 0)].im > 0.0);
    }

    #[test]
    fn scaling_scales_sigma() {
        let mut p = flat_fbi_pair(1).unwrap();
        let s0 = fbi_density_sigma(&p).unwrap();
        p.psi *= cr(3.0);
        p.psi_star *= cr(3.0);
        let s1 = fbi_density_sigma(&p).unwrap();
        assert!((s1 - s0 / 3f64.sqrt()).norm() < 1e-14);
    }
}
