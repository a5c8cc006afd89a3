//! Order-one transport at a diagonal point.
//!
//! With a = a₀ + h a₁ and a₀(α, β) = (c₀(α)c₀(β))^{1/2}, idempotence at
//! (α₀, α₀) to order h forces a₁(α₀, α₀) = −L₁(G₀)/c₀(α₀), where
//! G₀(s) = c₀(α₀)c₀(α₀ + s) and L₁ is the first stationary-phase correction
//! for Φ(s) = φ(α₀, α₀ + s) + φ(α₀ + s, α₀).

use num_complex::Complex64 as C64;

use super::kernel::projector_amplitude;
use super::I_UNIT;
use crate::error::{Error, Result};
use crate::linalg::{cr, inverse, CMat};
use crate::phase::PhaseFunction;
use crate::poly::Poly;

#[derive(Clone, Debug)]
pub struct TransportData {
    pub basepoint: Vec<f64>,
    /// c₀(α₀) = det(2D)^{1/2}.
    pub c0: C64,
    /// a₁(α₀, α₀).
    pub a1: C64,
    /// G₀ to second order in s.
    pub g0: Poly,
    /// The three contributions to L₁G₀ (ν = 1, 2, 3).
    pub l1_terms: [C64; 3],
}

/// c₀(α) = det(2D(α))^{1/2} from the 2-jet at α (no domain check).
pub fn geometric_c0(phase: &PhaseFunction, alpha: &[f64]) -> Result<C64> {
    projector_amplitude(&phase.jet_at_unchecked(alpha, 2)?)
}

/// P q = −Σ (H⁻¹)_jk ∂_j∂_k q.
fn apply_p(q: &Poly, hinv: &CMat) -> Poly {
    let m = hinv.nrows();
    let mut out = Poly::zero(q.nvars());
    for j in 0..m {
        let dj = q.deriv(j);
        if dj.is_zero() {
            continue;
        }
        for k in 0..m {
            out = out.add(&dj.deriv(k).scale(-hinv[(j, k)]));
        }
    }
    out
}

fn apply_p_pow(q: &Poly, hinv: &CMat, k: usize) -> Poly {
    (0..k).fold(q.clone(), |acc, _| apply_p(&acc, hinv))
}

/// exp(y) for y without constant term, truncated at `deg`.
fn exp_series(y: &Poly, deg: usize) -> Poly {
    let mut acc = Poly::one(y.nvars());
    let mut term = Poly::one(y.nvars());
    for k in 1..=deg {
        term = term.mul_truncated(y, deg).scale(cr(1.0 / k as f64));
        acc = acc.add(&term);
    }
    acc
}

pub fn order_one_amplitude(phase: &PhaseFunction, alpha0: &[f64]) -> Result<TransportData> {
    let m = phase.dim;
    let jet = phase.jet_at(alpha0, 4)?;
    let zero = C64::new(0.0, 0.0);
    let fix_u: Vec<(usize, C64)> = (0..m).map(|i| (i, zero)).collect();
    let fix_v: Vec<(usize, C64)> = (m..2 * m).map(|i| (i, zero)).collect();
    let phi = jet.poly.partial_eval(&fix_u).add(&jet.poly.partial_eval(&fix_v));
    let h = phi.hessian_at_zero();
    let hinv = inverse(&h, 1e12)?;
    let f = phi.homogeneous(3).add(&phi.homogeneous(4));

    // B(s, s) = ∂_u∂_v J at u = v = s, to second order
    let diag: Vec<Poly> = (0..2 * m).map(|i| Poly::var(m, i % m)).collect();
    let mut e = vec![vec![Poly::zero(m); m]; m];
    for (j, row) in e.iter_mut().enumerate() {
        let dj = jet.poly.deriv(j);
        for (k, slot) in row.iter_mut().enumerate() {
            *slot = dj.deriv(m + k).compose_truncated(&diag, 2);
        }
    }
    // 2D(s) = i(B + Bᵀ)(s) = M₀ + E(s)
    let two_d = |j: usize, k: usize| e[j][k].add(&e[k][j]).scale(I_UNIT);
    let m0 = CMat::from_fn(m, m, |j, k| two_d(j, k).constant_term());
    let m0inv = inverse(&m0, 1e12)?;
    let c0 = projector_amplitude(&jet.truncated(2))?;
    // X = M₀⁻¹E; det(M(s))^{1/2}/det(M₀)^{1/2} = exp(½ tr log(I + X))
    let x: Vec<Vec<Poly>> = (0..m)
        .map(|j| {
            (0..m)
                .map(|k| {
                    (0..m).fold(Poly::zero(m), |acc, l| {
                        let mut d = two_d(l, k);
                        d.add_term(vec![0; m], -d.constant_term());
                        acc.add(&d.scale(m0inv[(j, l)]))
                    })
                })
                .collect()
        })
        .collect();
    let mut tr1 = Poly::zero(m);
    let mut tr2 = Poly::zero(m);
    for j in 0..m {
        tr1 = tr1.add(&x[j][j]);
        for k in 0..m {
            tr2 = tr2.add(&x[j][k].mul_truncated(&x[k][j], 2));
        }
    }
    let logdet = tr1.sub(&tr2.scale(cr(0.5)));
    let c0_series = exp_series(&logdet.scale(cr(0.5)), 2).scale(c0);
    let g0 = c0_series.scale(c0);

    let t1 = apply_p(&g0, &hinv).constant_term() * 0.5;
    let t2 = apply_p_pow(&g0.mul_truncated(&f, 4), &hinv, 2).constant_term() / 8.0;
    let f2 = f.mul_truncated(&f, 6);
    let t3 = apply_p_pow(&g0.mul_truncated(&f2, 6), &hinv, 3).constant_term() / 96.0;
    let l1 = -I_UNIT * (t1 + t2 + t3);
    if !l1.is_finite() {
        return Err(Error::NonFinite("order-one transport".into()));
    }
    Ok(TransportData {
        basepoint: alpha0.to_vec(),
        c0,
        a1: -l1 / c0,
        g0,
        l1_terms: [-I_UNIT * t1, -I_UNIT * t2, -I_UNIT * t3],
    })
}
