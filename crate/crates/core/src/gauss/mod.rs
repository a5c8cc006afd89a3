//! Exact calculus of Gaussian integrands e^{iQ/h}·p with quadratic Q and
//! polynomial p.

mod fbi;
mod hermite;
mod kernel;
mod symbol;
mod transport;

pub use fbi::{darboux_frame, fbi_density_sigma, fbi_phase_pair, flat_fbi_pair, flat_phase, FbiPair};
pub use hermite::{apply_kernel_to_hermite, form_distance, zeta_action, HermiteFunction, Ladder};
pub use kernel::{
    compose_kernels_exact, model_kernel, projector_amplitude, projector_kernel, GaussianKernel,
    KernelSpec, ModelKernel, ModelKind, TwoPointQuadratic,
};
pub use symbol::{apply_standard_projector, local_projector_test, star_product_truncated, LocalProjectorVerdict};
pub use transport::{geometric_c0, order_one_amplitude, TransportData};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{cond, cr, det_sqrt, herm_eigenvalues, im_part, CMat, CVec};
use crate::poly::Poly;

/// Amplitude degree cap for exact Wick evaluation.
pub const DEGREE_CAP: usize = 6;

/// e^{(i/h)(½ zᵀHz + lᵀz + c)}·amp(z) on C^nvars.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianForm {
    pub hess: CMat,
    pub lin: CVec,
    pub c: C64,
    pub amp: Poly,
}

impl GaussianForm {
    pub fn nvars(&self) -> usize {
        self.hess.nrows()
    }

    pub fn eval(&self, z: &[C64], h: f64) -> C64 {
        let zv = CVec::from_column_slice(z);
        let q = (zv.transpose() * &self.hess * &zv)[(0, 0)] * 0.5 + (self.lin.transpose() * &zv)[(0, 0)] + self.c;
        (I_UNIT * q / h).exp() * self.amp.eval(z)
    }

    /// (2πh)^{−k/2} ∫ over the variables in `idx` (k = idx.len()), as a
    /// form in the remaining variables (kept in order).
    pub fn integrate(&self, idx: &[usize], h: f64) -> Result<GaussianForm> {
        let nv = self.nvars();
        let keep: Vec<usize> = (0..nv).filter(|i| !idx.contains(i)).collect();
        let k = idx.len();
        let sub = |rows: &[usize], cols: &[usize]| CMat::from_fn(rows.len(), cols.len(), |i, j| self.hess[(rows[i], cols[j])]);
        let mgg = sub(idx, idx);
        let mgx = sub(idx, &keep);
        let mxx = sub(&keep, &keep);
        let lg = CVec::from_fn(k, |i, _| self.lin[idx[i]]);
        let lx = CVec::from_fn(keep.len(), |i, _| self.lin[keep[i]]);

        check_convergent(&mgg)?;
        let c = cond(&mgg);
        if !(c < 1e12) {
            return Err(Error::Singular(format!("Gaussian exponent condition number {c:.3e}")));
        }
        let minv = mgg
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("Gaussian exponent".into()))?;
        // γ*(x) = −M⁻¹(M_γx x + l_γ)
        let gx = -(&minv * &mgx);
        let g0 = -(&minv * &lg);
        let hess = &mxx - mgx.transpose() * &minv * &mgx;
        let hess = (&hess + hess.transpose()) * cr(0.5);
        let lin = &lx - mgx.transpose() * &minv * &lg;
        let cval = self.c - (lg.transpose() * &minv * &lg)[(0, 0)] * 0.5;
        let pref = cr(1.0) / det_sqrt(&(&mgg * (-I_UNIT)))?;

        // substitute γ = γ*(x) + η; η reuses the γ slots
        let q: Vec<Poly> = (0..nv)
            .map(|v| {
                if let Some(pos) = idx.iter().position(|&i| i == v) {
                    let coeffs: Vec<C64> = (0..nv)
                        .map(|w| match keep.iter().position(|&kx| kx == w) {
                            Some(kp) => gx[(pos, kp)],
                            None => C64::new(0.0, 0.0),
                        })
                        .collect();
                    Poly::linear(&coeffs, g0[pos]).add(&Poly::var(nv, v))
                } else {
                    Poly::var(nv, v)
                }
            })
            .collect();
        let shifted = self.amp.compose(&q);
        let sigma = &minv * (I_UNIT * h);
        let w = wick(&shifted, idx, &sigma);
        let fixed: Vec<(usize, C64)> = idx.iter().map(|&i| (i, C64::new(0.0, 0.0))).collect();
        let amp = w.partial_eval(&fixed).scale(pref);
        Ok(GaussianForm { hess, lin, c: cval, amp })
    }
}

const I_UNIT: C64 = C64::new(0.0, 1.0);

/// Im M ≻ 0 on the integration variables.
fn check_convergent(m: &CMat) -> Result<()> {
    let im = im_part(m).map(cr);
    let lmin = herm_eigenvalues(&im).first().copied().unwrap_or(f64::NAN);
    if !(lmin > 0.0) {
        return Err(Error::Divergent(format!(
            "Im of the exponent Hessian has smallest eigenvalue {lmin:.3e}"
        )));
    }
    Ok(())
}

/// exp(½ Σ_jk S_jk ∂_j∂_k) p over the variables `idx`: the Gaussian
/// expectation of p(·+η) with covariance S (no evaluation at η = 0).
fn wick(p: &Poly, idx: &[usize], s: &CMat) -> Poly {
    let op = |q: &Poly| {
        let mut out = Poly::zero(q.nvars());
        for (a, &i) in idx.iter().enumerate() {
            let di = q.deriv(i);
            if di.is_zero() {
                continue;
            }
            for (b, &j) in idx.iter().enumerate() {
                let sij = s[(a, b)];
                if sij == C64::new(0.0, 0.0) {
                    continue;
                }
                out = out.add(&di.deriv(j).scale(sij * 0.5));
            }
        }
        out
    };
    let mut acc = p.clone();
    let mut term = p.clone();
    let mut k = 1.0;
    while !term.is_zero() {
        term = op(&term).scale(cr(1.0 / k));
        acc = acc.add(&term);
        k += 1.0;
    }
    acc
}

/// ∫_{R^d} e^{(i/h)(½γᵀMγ + bᵀγ + c)} p(γ) dγ, exactly.
pub fn gaussian_integral(m: &CMat, b: &CVec, c: C64, p: &Poly, h: f64) -> Result<C64> {
    let d = m.nrows();
    if m.ncols() != d || b.len() != d || p.nvars() != d {
        return Err(Error::Dimension("exponent and polynomial dimensions".into()));
    }
    if p.degree() > 2 * DEGREE_CAP {
        return Err(Error::DegreeCap {
            degree: p.degree(),
            cap: 2 * DEGREE_CAP,
        });
    }
    let form = GaussianForm {
        hess: (m + m.transpose()) * cr(0.5),
        lin: b.clone(),
        c,
        amp: p.clone(),
    };
    let idx: Vec<usize> = (0..d).collect();
    let r = form.integrate(&idx, h)?;
    Ok((I_UNIT * r.c / h).exp() * r.amp.constant_term() * (2.0 * std::f64::consts::PI * h).powf(d as f64 / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ceye;
    use std::f64::consts::PI;

    #[test]
    fn standard_gaussian() {
        // ∫ e^{−γ²} = √π
        let m = CMat::from_element(1, 1, I_UNIT * 2.0);
        let v = gaussian_integral(&m, &CVec::zeros(1), cr(0.0), &Poly::one(1), 1.0).unwrap();
        assert!((v - cr(PI.sqrt())).norm() < 1e-14);
    }

    #[test]
    fn second_moment() {
        // ∫ γ² e^{−γ²/h} = (h/2)√(πh)
        let h = 0.3;
        let m = CMat::from_element(1, 1, I_UNIT * 2.0);
        let p = Poly::var(1, 0).mul(&Poly::var(1, 0));
        let v = gaussian_integral(&m, &CVec::zeros(1), cr(0.0), &p, h).unwrap();
        assert!((v - cr(0.5 * h * (PI * h).sqrt())).norm() < 1e-14);
    }

    #[test]
    fn two_dimensional_scaled() {
        let h = 0.7;
        let m = ceye(2) * (I_UNIT * 2.0);
        let v = gaussian_integral(&m, &CVec::zeros(2), cr(0.0), &Poly::one(2), h).unwrap();
        assert!((v - cr(2.0 * PI * h * 0.5)).norm() < 1e-14);
    }

    #[test]
    fn shifted_quartic_matches_quadrature() {
        // ∫ (γ+0.3)^4 e^{(i/h)(½·(1.5+2i)γ² + 0.4γ)} on a fine grid
        let h = 0.5;
        let mm = C64::new(1.5, 2.0);
        let m = CMat::from_element(1, 1, mm);
        let b = CVec::from_element(1, cr(0.4));
        let x = Poly::var(1, 0).add(&Poly::constant(1, cr(0.3)));
        let p = x.pow_truncated(4, 10);
        let exact = gaussian_integral(&m, &b, cr(0.0), &p, h).unwrap();
        let dx = 1e-3;
        let mut s = C64::new(0.0, 0.0);
        for k in -12000..=12000 {
            let g = k as f64 * dx;
            s += (I_UNIT * (mm * 0.5 * g * g + 0.4 * g) / h).exp() * (g + 0.3).powi(4) * dx;
        }
        assert!((exact - s).norm() < 1e-10 * (1.0 + s.norm()));
    }

    #[test]
    fn divergent_exponent_is_rejected() {
        let m = CMat::from_element(1, 1, cr(1.0));
        let r = gaussian_integral(&m, &CVec::zeros(1), cr(0.0), &Poly::one(1), 1.0);
        assert!(matches!(r, Err(Error::Divergent(_))));
    }
}
