use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{GaussianForm, DEGREE_CAP, I_UNIT};
use crate::error::{Error, Result};
use crate::linalg::{cr, det_sqrt, CMat, CVec};
use crate::phase::spec::{terms_to_poly, PhaseSpec, TermSpec};
use crate::phase::{Backend, DiagonalJet, PhaseFunction, QuadraticPhase};
use crate::poly::Poly;

/// φ(α,β) = ½αᵀAα + αᵀBβ + ½βᵀCβ + l_α·α + l_β·β + c in absolute coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPointQuadratic {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
    pub la: CVec,
    pub lb: CVec,
    pub c0: C64,
}

impl TwoPointQuadratic {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Read off a polynomial of degree ≤ 2 in (α, β).
    pub fn from_poly(p: &Poly, d: usize) -> Result<Self> {
        if p.nvars() != 2 * d {
            return Err(Error::Dimension("phase polynomial arity".into()));
        }
        if p.degree() > 2 {
            return Err(Error::Invariant(format!("phase has degree {} > 2", p.degree())));
        }
        let g = p.gradient_at_zero();
        let hh = p.hessian_at_zero();
        Ok(TwoPointQuadratic {
            a: hh.view((0, 0), (d, d)).into_owned(),
            b: hh.view((0, d), (d, d)).into_owned(),
            c: hh.view((d, d), (d, d)).into_owned(),
            la: g.rows(0, d).into_owned(),
            lb: g.rows(d, d).into_owned(),
            c0: p.constant_term(),
        })
    }

    pub fn from_quadratic(q: &QuadraticPhase) -> Self {
        TwoPointQuadratic::from_poly(&q.to_poly(), q.m()).expect("quadratic phase")
    }

    /// Quadratic phases, or polynomial phases of degree ≤ 2.
    pub fn from_phase(phi: &PhaseFunction) -> Result<Self> {
        match &phi.backend {
            Backend::Quadratic(q) => Ok(TwoPointQuadratic::from_quadratic(q)),
            Backend::Polynomial(p) => TwoPointQuadratic::from_poly(p, phi.dim),
            _ => Err(Error::Invariant("kernel phases must be quadratic".into())),
        }
    }

    pub fn value(&self, alpha: &[C64], beta: &[C64]) -> C64 {
        let x = CVec::from_column_slice(alpha);
        let y = CVec::from_column_slice(beta);
        (x.transpose() * &self.a * &x)[(0, 0)] * 0.5
            + (x.transpose() * &self.b * &y)[(0, 0)]
            + (y.transpose() * &self.c * &y)[(0, 0)] * 0.5
            + (self.la.transpose() * &x)[(0, 0)]
            + (self.lb.transpose() * &y)[(0, 0)]
            + self.c0
    }

    pub fn hessian(&self) -> CMat {
        let d = self.dim();
        let mut h = CMat::zeros(2 * d, 2 * d);
        h.view_mut((0, 0), (d, d)).copy_from(&self.a);
        h.view_mut((0, d), (d, d)).copy_from(&self.b);
        h.view_mut((d, 0), (d, d)).copy_from(&self.b.transpose());
        h.view_mut((d, d), (d, d)).copy_from(&self.c);
        h
    }

    /// Largest entrywise difference of the data.
    pub fn distance(&self, o: &TwoPointQuadratic) -> f64 {
        let mx = |m: &CMat| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let vx = |v: &CVec| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        mx(&(&self.a - &o.a))
            .max(mx(&(&self.b - &o.b)))
            .max(mx(&(&self.c - &o.c)))
            .max(vx(&(&self.la - &o.la)))
            .max(vx(&(&self.lb - &o.lb)))
            .max((self.c0 - o.c0).norm())
    }

    /// −conj φ(β, α).
    pub fn adjoint(&self) -> TwoPointQuadratic {
        TwoPointQuadratic {
            a: -self.c.conjugate(),
            b: -self.b.transpose().conjugate(),
            c: -self.a.conjugate(),
            la: -self.lb.conjugate(),
            lb: -self.la.conjugate(),
            c0: -self.c0.conj(),
        }
    }
}

/// K(α,β) = (2πh)^{−d/2} e^{iφ(α,β)/h} a(α,β) on R^d.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    pub h: f64,
    pub phase: TwoPointQuadratic,
    pub amplitude: Poly,
}

impl GaussianKernel {
    pub fn new(phase: TwoPointQuadratic, amplitude: Poly, h: f64) -> Result<Self> {
        let d = phase.dim();
        if amplitude.nvars() != 2 * d {
            return Err(Error::Dimension("amplitude arity must be 2d".into()));
        }
        if amplitude.degree() > DEGREE_CAP {
            return Err(Error::DegreeCap {
                degree: amplitude.degree(),
                cap: DEGREE_CAP,
            });
        }
        if !(h > 0.0) {
            return Err(Error::Invariant("h must be positive".into()));
        }
        Ok(GaussianKernel { h, phase, amplitude })
    }

    pub fn constant(phase: TwoPointQuadratic, a: C64, h: f64) -> Result<Self> {
        let d = phase.dim();
        GaussianKernel::new(phase, Poly::constant(2 * d, a), h)
    }

    pub fn dim(&self) -> usize {
        self.phase.dim()
    }

    pub fn prefactor(&self) -> f64 {
        (2.0 * std::f64::consts::PI * self.h).powf(-(self.dim() as f64) / 2.0)
    }

    pub fn eval(&self, alpha: &[C64], beta: &[C64]) -> C64 {
        let x: Vec<C64> = alpha.iter().chain(beta).copied().collect();
        (I_UNIT * self.phase.value(alpha, beta) / self.h).exp() * self.amplitude.eval(&x) * self.prefactor()
    }

    pub fn scale(&self, s: C64) -> GaussianKernel {
        GaussianKernel {
            h: self.h,
            phase: self.phase.clone(),
            amplitude: self.amplitude.scale(s),
        }
    }

    /// Largest difference in phase data and amplitude coefficients.
    pub fn distance(&self, o: &GaussianKernel) -> f64 {
        self.phase.distance(&o.phase).max(self.amplitude.distance(&o.amplitude))
    }

    /// K*(α,β) = conj K(β,α).
    pub fn adjoint(&self) -> GaussianKernel {
        let d = self.dim();
        let swap: Vec<usize> = (0..2 * d).map(|i| (i + d) % (2 * d)).collect();
        GaussianKernel {
            h: self.h,
            phase: self.phase.adjoint(),
            amplitude: self.amplitude.embed(2 * d, &swap).conj(),
        }
    }
}

/// K1 ∘ K2 by exact Gaussian integration over the middle variable.
pub fn compose_kernels_exact(k1: &GaussianKernel, k2: &GaussianKernel) -> Result<GaussianKernel> {
    let d = k1.dim();
    if k2.dim() != d {
        return Err(Error::Dimension("kernels must act on the same space".into()));
    }
    if (k1.h - k2.h).abs() > 1e-15 * k1.h {
        return Err(Error::Invariant("kernels must share h".into()));
    }
    let (p1, p2) = (&k1.phase, &k2.phase);
    let mut hess = CMat::zeros(3 * d, 3 * d);
    hess.view_mut((0, 0), (d, d)).copy_from(&p1.a);
    hess.view_mut((0, d), (d, d)).copy_from(&p1.b);
    hess.view_mut((d, 0), (d, d)).copy_from(&p1.b.transpose());
    hess.view_mut((d, d), (d, d)).copy_from(&(&p1.c + &p2.a));
    hess.view_mut((d, 2 * d), (d, d)).copy_from(&p2.b);
    hess.view_mut((2 * d, d), (d, d)).copy_from(&p2.b.transpose());
    hess.view_mut((2 * d, 2 * d), (d, d)).copy_from(&p2.c);
    let mut lin = CVec::zeros(3 * d);
    lin.rows_mut(0, d).copy_from(&p1.la);
    lin.rows_mut(d, d).copy_from(&(&p1.lb + &p2.la));
    lin.rows_mut(2 * d, d).copy_from(&p2.lb);
    let first: Vec<usize> = (0..2 * d).collect();
    let second: Vec<usize> = (d..3 * d).collect();
    let amp = k1
        .amplitude
        .embed(3 * d, &first)
        .mul(&k2.amplitude.embed(3 * d, &second));
    let form = GaussianForm {
        hess,
        lin,
        c: p1.c0 + p2.c0,
        amp,
    };
    let idx: Vec<usize> = (d..2 * d).collect();
    let r = form.integrate(&idx, k1.h)?;
    let phase = TwoPointQuadratic::from_poly(
        &Poly::quadratic_form(&r.hess).add(&Poly::linear(
            &r.lin.iter().copied().collect::<Vec<_>>(),
            r.c,
        )),
        d,
    )?;
    GaussianKernel::new(phase, r.amp, k1.h)
}

/// c₀ = det(2D)^{1/2} with D = i(B + Bᵀ)/2, principal branch from D = I.
pub fn projector_amplitude(jet: &DiagonalJet) -> Result<C64> {
    let (_, b, _) = jet.blocks();
    let d = (&b + b.transpose()) * I_UNIT;
    det_sqrt(&d)
}

/// Constant-amplitude kernel det(2D)^{1/2} e^{iφ/h} for a quadratic phase.
pub fn projector_kernel(q: &QuadraticPhase, h: f64) -> Result<GaussianKernel> {
    let d = (&q.b + q.b.transpose()) * I_UNIT;
    let c0 = det_sqrt(&d)?;
    GaussianKernel::constant(TwoPointQuadratic::from_quadratic(q), c0, h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Bargmann,
    Standard,
    GaussianStandard,
}

#[derive(Clone, Debug)]
pub enum ModelKernel {
    Gaussian(GaussianKernel),
    /// f(x, x′) ↦ f(0, x′) with x ∈ R^n.
    Standard { n: usize },
}

/// Π^BS on R^{2n} (amplitude 2^n), Π^stan, and Π^~stan on R^n with
/// K(x,y) = (πh)^{−n/2} e^{−(x²+y²)/2h}.
pub fn model_kernel(kind: ModelKind, n: usize, h: f64) -> Result<ModelKernel> {
    match kind {
        ModelKind::Bargmann => {
            let (a, b, c) = crate::phase::builtin::bargmann_blocks(n);
            let q = QuadraticPhase::new(n, vec![0.0; 2 * n], vec![0.0; 2 * n], a, b, c)?;
            Ok(ModelKernel::Gaussian(projector_kernel(&q, h)?))
        }
        ModelKind::Standard => Ok(ModelKernel::Standard { n }),
        ModelKind::GaussianStandard => {
            let a = CMat::identity(n, n) * I_UNIT;
            let phase = TwoPointQuadratic {
                a: a.clone(),
                b: CMat::zeros(n, n),
                c: a,
                la: CVec::zeros(n),
                lb: CVec::zeros(n),
                c0: cr(0.0),
            };
            Ok(ModelKernel::Gaussian(GaussianKernel::constant(
                phase,
                cr(2f64.powf(n as f64 / 2.0)),
                h,
            )?))
        }
    }
}

/// Kernel file: a phase spec, an amplitude and h.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub phase: PhaseSpec,
    pub amplitude: Vec<TermSpec>,
    pub h: f64,
}

impl KernelSpec {
    pub fn to_kernel(&self) -> Result<GaussianKernel> {
        let phi = self.phase.to_phase()?;
        let tp = TwoPointQuadratic::from_phase(&phi)?;
        let amp = terms_to_poly(&self.amplitude, 2 * phi.dim, "amplitude")?;
        GaussianKernel::new(tp, amp, self.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::make_bargmann;

    fn bargmann_kernel(a: f64, h: f64) -> GaussianKernel {
        let tp = TwoPointQuadratic::from_phase(&make_bargmann(1)).unwrap();
        GaussianKernel::constant(tp, cr(a), h).unwrap()
    }

    #[test]
    fn bargmann_is_idempotent() {
        let k = bargmann_kernel(2.0, 0.1);
        let kk = compose_kernels_exact(&k, &k).unwrap();
        assert!(kk.distance(&k) < 1e-13);
    }

    #[test]
    fn unit_amplitude_halves() {
        let k = bargmann_kernel(1.0, 0.1);
        let kk = compose_kernels_exact(&k, &k).unwrap();
        assert!(kk.distance(&k.scale(cr(0.5))) < 1e-13);
    }

    #[test]
    fn zero_amplitude_gives_zero() {
        let k = bargmann_kernel(0.0, 0.1);
        let kk = compose_kernels_exact(&k, &k).unwrap();
        assert!(kk.amplitude.is_zero());
    }

    #[test]
    fn bargmann_kernel_is_hermitian() {
        let k = bargmann_kernel(2.0, 0.1);
        assert!(k.distance(&k.adjoint()) < 1e-15);
    }

    #[test]
    fn gaussian_standard_is_idempotent() {
        let ModelKernel::Gaussian(k) = model_kernel(ModelKind::GaussianStandard, 2, 0.2).unwrap() else {
            panic!()
        };
        let kk = compose_kernels_exact(&k, &k).unwrap();
        assert!(kk.distance(&k) < 1e-13);
    }
}
