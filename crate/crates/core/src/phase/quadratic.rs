use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{cr, fro, re_part, sym_eigenvalues, CMat, I};
use crate::poly::Poly;

/// Exact quadratic two-point phase
/// φ(α,β) = θ·(u−v) + ½(uᵀAu + 2uᵀBv + vᵀCv), u = α−α0, v = β−α0.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticPhase {
    pub n: usize,
    pub alpha0: Vec<f64>,
    pub theta: Vec<f64>,
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
}

impl QuadraticPhase {
    /// Validates the invariants. A and C are symmetrized and C is reset to
    /// −(A + B + Bᵀ) once the zero-sum constraint is met to tolerance, so the
    /// stored blocks satisfy it up to rounding of a single addition.
    pub fn new(
        n: usize,
        alpha0: Vec<f64>,
        theta: Vec<f64>,
        a: CMat,
        b: CMat,
        c: CMat,
    ) -> Result<Self> {
        let m = 2 * n;
        if alpha0.len() != m || theta.len() != m {
            return Err(Error::Dimension(format!(
                "alpha0/theta must have length {m}"
            )));
        }
        for (name, x) in [("A", &a), ("B", &b), ("C", &c)] {
            if x.shape() != (m, m) {
                return Err(Error::Dimension(format!("{name} must be {m}x{m}")));
            }
        }
        let scale = 1.0 + fro(&a) + fro(&b) + fro(&c);
        if fro(&(&a - a.transpose())) > 1e-10 * scale {
            return Err(Error::Invariant("A is not symmetric".into()));
        }
        if fro(&(&c - c.transpose())) > 1e-10 * scale {
            return Err(Error::Invariant("C is not symmetric".into()));
        }
        let zs = &a + &b + b.transpose() + &c;
        if fro(&zs) > 1e-10 * scale {
            return Err(Error::Invariant(format!(
                "A + B + Bᵀ + C = 0 violated (‖·‖ = {:.3e})",
                fro(&zs)
            )));
        }
        let a = (&a + a.transpose()) * cr(0.5);
        let c = -(&a + &b + b.transpose());
        let q = QuadraticPhase {
            n,
            alpha0,
            theta,
            a,
            b,
            c,
        };
        let lmin = q.re_d_min_eig();
        if !(lmin > 0.0) {
            return Err(Error::Invariant(format!(
                "Re D is not positive definite (smallest eigenvalue {lmin:.3e})"
            )));
        }
        Ok(q)
    }

    pub fn m(&self) -> usize {
        2 * self.n
    }

    /// D = i(B + Bᵀ)/2.
    pub fn d(&self) -> CMat {
        (&self.b + self.b.transpose()) * (I * 0.5)
    }

    /// R = (Bᵀ − B)/2.
    pub fn r(&self) -> CMat {
        (self.b.transpose() - &self.b) * cr(0.5)
    }

    /// P = (A − C)/2.
    pub fn p(&self) -> CMat {
        (&self.a - &self.c) * cr(0.5)
    }

    pub fn re_d_min_eig(&self) -> f64 {
        let d = re_part(&self.d());
        let d = (&d + d.transpose()) * 0.5;
        sym_eigenvalues(&d).first().copied().unwrap_or(f64::NAN)
    }

    pub fn value(&self, alpha: &[C64], beta: &[C64]) -> C64 {
        let m = self.m();
        let u: Vec<C64> = (0..m).map(|i| alpha[i] - self.alpha0[i]).collect();
        let v: Vec<C64> = (0..m).map(|i| beta[i] - self.alpha0[i]).collect();
        let mut s = C64::new(0.0, 0.0);
        for i in 0..m {
            s += self.theta[i] * (u[i] - v[i]);
            for j in 0..m {
                s += 0.5 * u[i] * self.a[(i, j)] * u[j];
                s += u[i] * self.b[(i, j)] * v[j];
                s += 0.5 * v[i] * self.c[(i, j)] * v[j];
            }
        }
        s
    }

    /// φ as a polynomial in the 2m absolute variables (α, β).
    pub fn to_poly(&self) -> Poly {
        let m = self.m();
        let mut h = DMatrix::zeros(2 * m, 2 * m);
        h.view_mut((0, 0), (m, m)).copy_from(&self.a);
        h.view_mut((0, m), (m, m)).copy_from(&self.b);
        h.view_mut((m, 0), (m, m)).copy_from(&self.b.transpose());
        h.view_mut((m, m), (m, m)).copy_from(&self.c);
        let mut lin = vec![C64::new(0.0, 0.0); 2 * m];
        for i in 0..m {
            lin[i] = cr(self.theta[i]);
            lin[m + i] = cr(-self.theta[i]);
        }
        let rel = Poly::quadratic_form(&h).add(&Poly::linear(&lin, cr(0.0)));
        let shift: Vec<C64> = self
            .alpha0
            .iter()
            .chain(self.alpha0.iter())
            .map(|&x| cr(-x))
            .collect();
        rel.shift(&shift)
    }

    /// The same phase re-expanded around another basepoint.
    pub fn recentered(&self, new_alpha0: &[f64]) -> QuadraticPhase {
        let m = self.m();
        let delta: Vec<f64> = (0..m).map(|i| new_alpha0[i] - self.alpha0[i]).collect();
        // ∂_αφ at (α1, α1) = θ + (A + B)δ
        let mut theta = self.theta.clone();
        for i in 0..m {
            let mut s = C64::new(0.0, 0.0);
            for j in 0..m {
                s += (self.a[(i, j)] + self.b[(i, j)]) * delta[j];
            }
            theta[i] += s.re;
        }
        QuadraticPhase {
            n: self.n,
            alpha0: new_alpha0.to_vec(),
            theta,
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ceye;

    fn bargmann_blocks() -> (CMat, CMat, CMat) {
        let a = ceye(2) * I;
        let b = CMat::from_row_slice(2, 2, &[-I, cr(-1.0), cr(1.0), -I]);
        (a.clone(), b, a)
    }

    #[test]
    fn bargmann_blocks_are_accepted() {
        let (a, b, c) = bargmann_blocks();
        let q = QuadraticPhase::new(1, vec![0.0; 2], vec![0.0; 2], a, b, c).unwrap();
        assert!((q.re_d_min_eig() - 1.0).abs() < 1e-14);
        let v = q.value(&[cr(0.0), cr(0.0)], &[cr(1.0), cr(0.0)]);
        assert!((v - I * 0.5).norm() < 1e-15);
    }

    #[test]
    fn zero_sum_violation_is_rejected() {
        let (a, b, c) = bargmann_blocks();
        let c = c + ceye(2) * cr(1e-3);
        assert!(QuadraticPhase::new(1, vec![0.0; 2], vec![0.0; 2], a, b, c).is_err());
    }

    #[test]
    fn poly_matches_value() {
        let (a, b, c) = bargmann_blocks();
        let q = QuadraticPhase::new(1, vec![0.2, -0.1], vec![0.3, 0.5], a, b, c).unwrap();
        let p = q.to_poly();
        let al = [C64::new(0.4, 0.1), C64::new(-0.3, 0.0)];
        let be = [C64::new(0.1, -0.2), C64::new(0.25, 0.05)];
        let x = [al[0], al[1], be[0], be[1]];
        assert!((p.eval(&x) - q.value(&al, &be)).norm() < 1e-14);
    }

    #[test]
    fn recentering_preserves_values() {
        let (a, b, c) = bargmann_blocks();
        let q = QuadraticPhase::new(1, vec![0.0, 0.0], vec![0.1, 0.2], a, b, c).unwrap();
        let q2 = q.recentered(&[0.3, -0.4]);
        let al = [C64::new(0.4, 0.1), C64::new(-0.3, 0.0)];
        let be = [C64::new(0.1, -0.2), C64::new(0.25, 0.05)];
        assert!((q.value(&al, &be) - q2.value(&al, &be)).norm() < 1e-14);
    }
}
