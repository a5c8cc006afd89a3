use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{cr, fro, im_part, CMat, CVec};
use crate::poly::Poly;

/// Taylor coefficients of (u,v) ↦ φ(α0+u, α0+v) up to a fixed total order.
/// The polynomial has 2m variables: u_0..u_{m-1}, v_0..v_{m-1}.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalJet {
    pub basepoint: Vec<f64>,
    pub order: usize,
    pub poly: Poly,
}

/// Residuals of the structural invariants of a jet.
#[derive(Clone, Copy, Debug)]
pub struct JetInvariants {
    pub constant: f64,
    pub diagonal_restriction: f64,
}

impl DiagonalJet {
    pub fn new(basepoint: Vec<f64>, order: usize, poly: Poly) -> Result<Self> {
        if order < 2 {
            return Err(Error::Invariant("jet order must be at least 2".into()));
        }
        if poly.nvars() != 2 * basepoint.len() {
            return Err(Error::Dimension("jet polynomial arity".into()));
        }
        poly.check_finite()?;
        Ok(DiagonalJet {
            basepoint,
            order,
            poly: poly.truncate(order),
        })
    }

    pub fn m(&self) -> usize {
        self.basepoint.len()
    }

    pub fn n(&self) -> usize {
        self.m() / 2
    }

    pub fn coeff(&self, nu_u: &[u32], nu_v: &[u32]) -> C64 {
        let e: Vec<u32> = nu_u.iter().chain(nu_v).copied().collect();
        self.poly.coeff(&e)
    }

    /// ∂_αφ(α0, α0) (row vector ϑ, complex as stored).
    pub fn d_alpha(&self) -> CVec {
        let g = self.poly.gradient_at_zero();
        g.rows(0, self.m()).into_owned()
    }

    pub fn d_beta(&self) -> CVec {
        let g = self.poly.gradient_at_zero();
        g.rows(self.m(), self.m()).into_owned()
    }

    /// (A, B, C) = (∂²_α φ, ∂_α∂_β φ, ∂²_β φ) at the basepoint.
    pub fn blocks(&self) -> (CMat, CMat, CMat) {
        let m = self.m();
        let h = self.poly.truncate(2).hessian_at_zero();
        (
            h.view((0, 0), (m, m)).into_owned(),
            h.view((0, m), (m, m)).into_owned(),
            h.view((m, m), (m, m)).into_owned(),
        )
    }

    pub fn invariants(&self) -> JetInvariants {
        let m = self.m();
        let constant = self.poly.constant_term().norm();
        // restrict to u = v
        let q: Vec<Poly> = (0..2 * m).map(|i| Poly::var(m, i % m)).collect();
        let diag = self.poly.compose(&q);
        JetInvariants {
            constant,
            diagonal_restriction: diag.max_abs_coeff(),
        }
    }

    /// The degree-≤2 truncation.
    pub fn truncated(&self, order: usize) -> DiagonalJet {
        DiagonalJet {
            basepoint: self.basepoint.clone(),
            order: order.min(self.order),
            poly: self.poly.truncate(order),
        }
    }

    /// Add the coboundary −f(α) + f(β) with f = ½uᵀHu (jet level).
    pub fn with_gauge(&self, h: &CMat) -> DiagonalJet {
        let m = self.m();
        let mut hh = CMat::zeros(2 * m, 2 * m);
        hh.view_mut((0, 0), (m, m)).copy_from(&(-h));
        hh.view_mut((m, m), (m, m)).copy_from(h);
        DiagonalJet {
            basepoint: self.basepoint.clone(),
            order: self.order,
            poly: self.poly.add(&Poly::quadratic_form(&hh)),
        }
    }
}

/// The quadratic f(α0+u) = ½uᵀHu (value and gradient zero at α0).
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeTerm {
    pub basepoint: Vec<f64>,
    pub hessian: nalgebra::DMatrix<f64>,
}

impl GaugeTerm {
    pub fn hessian_norm(&self) -> f64 {
        crate::linalg::rfro(&self.hessian)
    }
}

/// φ_f(α,β) = φ(α,β) − f(α) + f(β) with Hess f = P, so that P becomes 0.
pub fn gauge_normalize(jet: &DiagonalJet) -> Result<(DiagonalJet, GaugeTerm)> {
    let (a, _, c) = jet.blocks();
    let p = (&a - &c) * cr(0.5);
    let scale = 1.0 + fro(&a) + fro(&c);
    let imp = fro(&im_part(&p).map(cr));
    if imp > 1e-10 * scale {
        return Err(Error::Invariant(format!(
            "P = (A−C)/2 is not real (‖Im P‖ = {imp:.3e})"
        )));
    }
    if fro(&(&p - p.transpose())) > 1e-10 * scale {
        return Err(Error::Invariant("P is not symmetric".into()));
    }
    let pr = p.map(|z| z.re);
    let pr = (&pr + pr.transpose()) * 0.5;
    let out = jet.with_gauge(&pr.map(cr));
    Ok((
        out,
        GaugeTerm {
            basepoint: jet.basepoint.clone(),
            hessian: pr,
        },
    ))
}
