use num_complex::Complex64 as C64;

use super::{GaussianForm, GaussianKernel, I_UNIT};
use crate::error::{Error, Result};
use crate::linalg::{cr, herm_eigenvalues, re_part, to_complex, CMat, CVec};
use crate::poly::Poly;

/// p(x)·e^{−(x−c)ᵀG(x−c)/2h} on R^n.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteFunction {
    pub n: usize,
    pub h: f64,
    pub center: Vec<f64>,
    pub poly: Poly,
    pub exponent: CMat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    /// ζ_j = (h∂_j + x_j)/√2, annihilates the ground Gaussian.
    Zeta,
    /// ζ*_j = (x_j − h∂_j)/√2.
    ZetaStar,
}

impl HermiteFunction {
    pub fn new(n: usize, h: f64, center: Vec<f64>, poly: Poly, exponent: CMat) -> Result<Self> {
        if center.len() != n || poly.nvars() != n || exponent.shape() != (n, n) {
            return Err(Error::Dimension("Hermite function data".into()));
        }
        let re = to_complex(&re_part(&exponent));
        if !(herm_eigenvalues(&re).first().copied().unwrap_or(0.0) > 0.0) {
            return Err(Error::Invariant("Re G must be positive definite".into()));
        }
        Ok(HermiteFunction {
            n,
            h,
            center,
            poly,
            exponent,
        })
    }

    /// u = (πh)^{−n/4} e^{−x²/2h}, unit L² norm.
    pub fn ground(n: usize, h: f64) -> Self {
        let norm = (std::f64::consts::PI * h).powf(-(n as f64) / 4.0);
        HermiteFunction {
            n,
            h,
            center: vec![0.0; n],
            poly: Poly::constant(n, cr(norm)),
            exponent: CMat::identity(n, n),
        }
    }

    /// ζ*^k_j u (not renormalized).
    pub fn excited(n: usize, h: f64, j: usize, k: usize) -> Self {
        let mut f = HermiteFunction::ground(n, h);
        for _ in 0..k {
            f = zeta_action(Ladder::ZetaStar, j, &f);
        }
        f
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        let d = CVec::from_fn(self.n, |i, _| cr(x[i] - self.center[i]));
        let q = (d.transpose() * &self.exponent * &d)[(0, 0)];
        (-q / (2.0 * self.h)).exp() * self.poly.eval_real(x)
    }

    /// The same function as a [`GaussianForm`] in x.
    pub fn to_form(&self) -> GaussianForm {
        let c = CVec::from_fn(self.n, |i, _| cr(self.center[i]));
        let gc = &self.exponent * &c;
        GaussianForm {
            hess: &self.exponent * I_UNIT,
            lin: -(&gc * I_UNIT),
            c: I_UNIT * 0.5 * (c.transpose() * &gc)[(0, 0)],
            amp: self.poly.clone(),
        }
    }

    fn same_shape(&self, poly: Poly) -> HermiteFunction {
        HermiteFunction {
            n: self.n,
            h: self.h,
            center: self.center.clone(),
            poly,
            exponent: self.exponent.clone(),
        }
    }

    pub fn sub(&self, o: &HermiteFunction) -> HermiteFunction {
        self.same_shape(self.poly.sub(&o.poly))
    }

    /// (G(x−c))_j as a polynomial.
    fn exponent_gradient(&self, j: usize) -> Poly {
        let row: Vec<C64> = (0..self.n).map(|k| self.exponent[(j, k)]).collect();
        let shift: C64 = (0..self.n).map(|k| self.exponent[(j, k)] * self.center[k]).sum();
        Poly::linear(&row, -shift)
    }
}

/// Exact action of ζ_j or ζ*_j; the Gaussian factor is unchanged.
pub fn zeta_action(which: Ladder, j: usize, f: &HermiteFunction) -> HermiteFunction {
    let h = f.h;
    let p = &f.poly;
    let dp = p.deriv(j).scale(cr(h));
    let pg = p.mul(&f.exponent_gradient(j));
    let xp = p.mul(&Poly::var(f.n, j));
    let s = cr(std::f64::consts::FRAC_1_SQRT_2);
    // h∂(p e^{−Q}) = (h∂p − p·G(x−c)) e^{−Q}
    let poly = match which {
        Ladder::Zeta => dp.sub(&pg).add(&xp),
        Ladder::ZetaStar => xp.sub(&dp).add(&pg),
    };
    f.same_shape(poly.scale(s))
}

/// Exact image of a Hermite function under a Gaussian kernel on R^n.
pub fn apply_kernel_to_hermite(k: &GaussianKernel, f: &HermiteFunction) -> Result<GaussianForm> {
    let n = f.n;
    if k.dim() != n {
        return Err(Error::Dimension("kernel and function dimensions".into()));
    }
    let g = f.to_form();
    let ph = &k.phase;
    let mut hess = CMat::zeros(2 * n, 2 * n);
    hess.view_mut((0, 0), (n, n)).copy_from(&ph.a);
    hess.view_mut((0, n), (n, n)).copy_from(&ph.b);
    hess.view_mut((n, 0), (n, n)).copy_from(&ph.b.transpose());
    hess.view_mut((n, n), (n, n)).copy_from(&(&ph.c + &g.hess));
    let mut lin = CVec::zeros(2 * n);
    lin.rows_mut(0, n).copy_from(&ph.la);
    lin.rows_mut(n, n).copy_from(&(&ph.lb + &g.lin));
    let second: Vec<usize> = (n..2 * n).collect();
    let form = GaussianForm {
        hess,
        lin,
        c: ph.c0 + g.c,
        amp: k.amplitude.mul(&g.amp.embed(2 * n, &second)),
    };
    form.integrate(&second, k.h)
}

/// Largest difference between two forms' data.
pub fn form_distance(a: &GaussianForm, b: &GaussianForm) -> f64 {
    let mx = |m: CMat| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let vx = |v: CVec| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    mx(&a.hess - &b.hess)
        .max(vx(&a.lin - &b.lin))
        .max((a.c - b.c).norm())
        .max(a.amp.distance(&b.amp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::{model_kernel, ModelKernel, ModelKind};

    #[test]
    fn zeta_kills_ground() {
        let u = HermiteFunction::ground(1, 0.1);
        assert!(zeta_action(Ladder::Zeta, 0, &u).poly.is_zero());
    }

    #[test]
    fn commutator_is_h() {
        let h = 0.13;
        for k in 0..5 {
            let f = HermiteFunction::excited(1, h, 0, k);
            let a = zeta_action(Ladder::Zeta, 0, &zeta_action(Ladder::ZetaStar, 0, &f));
            let b = zeta_action(Ladder::ZetaStar, 0, &zeta_action(Ladder::Zeta, 0, &f));
            let comm = a.sub(&b);
            assert!(comm.poly.distance(&f.poly.scale(cr(h))) < 1e-13 * (1.0 + f.poly.max_abs_coeff()));
        }
    }

    #[test]
    fn ground_is_fixed_by_gaussian_standard() {
        let h = 0.2;
        let ModelKernel::Gaussian(k) = model_kernel(ModelKind::GaussianStandard, 1, h).unwrap() else {
            panic!()
        };
        let u = HermiteFunction::ground(1, h);
        let out = apply_kernel_to_hermite(&k, &u).unwrap();
        assert!(form_distance(&out, &u.to_form()) < 1e-14);
        let f1 = HermiteFunction::excited(1, h, 0, 1);
        let out1 = apply_kernel_to_hermite(&k, &f1).unwrap();
        assert!(out1.amp.max_abs_coeff() < 1e-15);
    }

    #[test]
    fn eval_matches_form() {
        let f = HermiteFunction::excited(2, 0.3, 1, 2);
        let form = f.to_form();
        let x = [0.2, -0.4];
        let xc: Vec<C64> = x.iter().map(|&v| cr(v)).collect();
        assert!((f.eval(&x) - form.eval(&xc, 0.3)).norm() < 1e-15);
    }
}
