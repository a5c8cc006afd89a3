use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::poly::{factorial, multi_indices, Exponent, Poly};

/// Σ_{|ν|≤K} (ih)^{|ν|}/ν! ∂_ξ^ν p ∂_x^ν q for symbols in (x_1..x_n, ξ_1..ξ_n).
pub fn star_product_truncated(p: &Poly, q: &Poly, order: usize, h: f64) -> Result<Poly> {
    if p.nvars() != q.nvars() || p.nvars() % 2 != 0 {
        return Err(Error::Dimension("symbols must share an even number of variables".into()));
    }
    if order > 8 {
        return Err(Error::DegreeCap { degree: order, cap: 8 });
    }
    let n = p.nvars() / 2;
    let mut out = Poly::zero(2 * n);
    for nu in multi_indices(n, order) {
        let k: u32 = nu.iter().sum();
        let mut dp = p.clone();
        let mut dq = q.clone();
        for (j, &e) in nu.iter().enumerate() {
            for _ in 0..e {
                dp = dp.deriv(n + j);
                dq = dq.deriv(j);
            }
        }
        if dp.is_zero() || dq.is_zero() {
            continue;
        }
        let nu_fact: f64 = nu.iter().map(|&e| factorial(e)).product();
        let coef = C64::new(0.0, h).powu(k) / nu_fact;
        out = out.add(&dp.mul(&dq).scale(coef));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalProjectorVerdict {
    pub is_projector: bool,
    /// Monomial in (x′, ξ′) and its coefficient in a(0,0,x′,ξ′) − 1.
    pub witness: Option<(Exponent, C64)>,
}

/// Op(a)Π^stan is a projector iff a(0,0,x′,ξ′) ≡ 1; n = 1, variables (x, ξ, x′, ξ′).
pub fn local_projector_test(a: &Poly, tol: f64) -> Result<LocalProjectorVerdict> {
    if a.nvars() != 4 {
        return Err(Error::Dimension("expected a symbol in (x, ξ, x′, ξ′)".into()));
    }
    if a.degree() > 3 {
        return Err(Error::DegreeCap { degree: a.degree(), cap: 3 });
    }
    if a.constant_term().norm() <= tol {
        return Err(Error::Invariant("symbol vanishes at the origin".into()));
    }
    let zero = C64::new(0.0, 0.0);
    let r = a
        .partial_eval(&[(0, zero), (1, zero)])
        .sub(&Poly::one(2));
    let witness = r
        .terms()
        .find(|(_, c)| c.norm() > tol)
        .map(|(e, c)| (e.clone(), *c));
    Ok(LocalProjectorVerdict {
        is_projector: witness.is_none(),
        witness,
    })
}

/// Π^stan f(x, x′) = f(0, x′) on polynomials in (x_1..x_n, x′_1..x′_k).
pub fn apply_standard_projector(f: &Poly, n: usize) -> Poly {
    let fixed: Vec<(usize, C64)> = (0..n).map(|i| (i, C64::new(0.0, 0.0))).collect();
    let rest = f.partial_eval(&fixed);
    let map: Vec<usize> = (n..f.nvars()).collect();
    rest.embed(f.nvars(), &map)
}
