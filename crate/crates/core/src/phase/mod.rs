//! Two-point phase functions, their complexified evaluation and diagonal jets.

pub(crate) mod builtin;
mod jet;
mod quadratic;
pub mod spec;

pub use builtin::{
    make_bargmann, make_fubini_study, make_model_quadratic, perturb_b_antisymmetric,
    random_quadratic_projector_phase, random_scrambled, Scramble, ScrambleData,
};
pub use jet::{gauge_normalize, DiagonalJet, GaugeTerm, JetInvariants};
pub use quadratic::QuadraticPhase;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{cr, CMat, CVec};
use crate::poly::Poly;

/// Real box with a complexification radius: complex arguments are accepted
/// when every real part lies in the box inflated by `rho` and every imaginary
/// part is at most `rho` in modulus.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub rho: f64,
}

impl Domain {
    pub fn cube(m: usize, half: f64, rho: f64) -> Self {
        Domain {
            lo: vec![-half; m],
            hi: vec![half; m],
            rho,
        }
    }

    pub fn contains(&self, x: &[C64]) -> bool {
        x.len() == self.lo.len()
            && x.iter().enumerate().all(|(i, z)| {
                z.re >= self.lo[i] - self.rho
                    && z.re <= self.hi[i] + self.rho
                    && z.im.abs() <= self.rho
            })
    }

    pub fn contains_real(&self, x: &[f64]) -> bool {
        x.len() == self.lo.len()
            && x
                .iter()
                .enumerate()
                .all(|(i, &v)| v >= self.lo[i] && v <= self.hi[i])
    }
}

#[derive(Clone, Debug)]
pub enum Backend {
    Quadratic(QuadraticPhase),
    /// Polynomial in the 2m variables (α, β).
    Polynomial(Poly),
    /// Fubini–Study diastasis on C ≅ R², n = 1.
    FubiniStudy,
    /// Critical-value composition of two phases.
    Composed(Box<PhaseFunction>, Box<PhaseFunction>),
}

#[derive(Clone, Debug)]
pub struct PhaseFunction {
    pub backend: Backend,
    /// Real dimension m = 2n.
    pub dim: usize,
    /// Claimed self-adjointness; see [`PhaseFunction::self_adjoint_defect`].
    pub self_adjoint: bool,
    pub domain: Domain,
    pub label: String,
}

/// φ and its first and second derivatives at a pair of points.
#[derive(Clone, Debug)]
pub struct PhaseEval {
    pub value: C64,
    pub d_alpha: Option<CVec>,
    pub d_beta: Option<CVec>,
    pub h_aa: Option<CMat>,
    pub h_ab: Option<CMat>,
    pub h_bb: Option<CMat>,
}

/// Minimum modulus of 1 + z w̄ accepted by the Fubini–Study logarithms.
pub const FS_GUARD: f64 = 0.1;

impl PhaseFunction {
    pub fn n(&self) -> usize {
        self.dim / 2
    }

    fn check_args(&self, alpha: &[C64], beta: &[C64]) -> Result<()> {
        if alpha.len() != self.dim || beta.len() != self.dim {
            return Err(Error::Dimension(format!(
                "expected points of dimension {}",
                self.dim
            )));
        }
        if !self.domain.contains(alpha) {
            return Err(Error::OutOfDomain(format!("alpha = {alpha:?}")));
        }
        if !self.domain.contains(beta) {
            return Err(Error::OutOfDomain(format!("beta = {beta:?}")));
        }
        Ok(())
    }

    /// φ(α, β) for complex arguments inside the complexified domain.
    pub fn value(&self, alpha: &[C64], beta: &[C64]) -> Result<C64> {
        self.check_args(alpha, beta)?;
        self.value_unchecked(alpha, beta)
    }

    pub fn value_real(&self, alpha: &[f64], beta: &[f64]) -> Result<C64> {
        let a: Vec<C64> = alpha.iter().map(|&x| cr(x)).collect();
        let b: Vec<C64> = beta.iter().map(|&x| cr(x)).collect();
        self.value(&a, &b)
    }

    /// Evaluation without the domain check (branch guards still apply).
    pub fn value_unchecked(&self, alpha: &[C64], beta: &[C64]) -> Result<C64> {
        match &self.backend {
            Backend::Quadratic(q) => Ok(q.value(alpha, beta)),
            Backend::Polynomial(p) => {
                let x: Vec<C64> = alpha.iter().chain(beta).copied().collect();
                Ok(p.eval(&x))
            }
            Backend::FubiniStudy => fs_value(alpha, beta),
            Backend::Composed(p1, p2) => {
                Ok(crate::critical::compose_phases_vc(p1, p2, alpha, beta)?.critical_value)
            }
        }
    }

    /// Im φ(α, β) for real arguments, computed without any logarithm branch
    /// (used to bound contributions that the branch guard masks out).
    pub fn imag_real(&self, alpha: &[f64], beta: &[f64]) -> Result<f64> {
        match &self.backend {
            Backend::FubiniStudy => {
                let (z, w) = (
                    C64::new(alpha[0], alpha[1]),
                    C64::new(beta[0], beta[1]),
                );
                let q = cr(1.0) + z * w.conj();
                Ok(0.5 * (1.0 + z.norm_sqr()).ln() + 0.5 * (1.0 + w.norm_sqr()).ln() - q.norm().ln())
            }
            _ => Ok(self.value_real(alpha, beta)?.im),
        }
    }

    /// Taylor polynomial of (u, v) ↦ φ(α+u, β+v) to total degree `order`.
    pub fn taylor(&self, alpha: &[C64], beta: &[C64], order: usize) -> Result<Poly> {
        self.check_args(alpha, beta)?;
        self.taylor_unchecked(alpha, beta, order)
    }

    /// [`Self::taylor`] without the domain check (branch guards still apply).
    pub fn taylor_unchecked(&self, alpha: &[C64], beta: &[C64], order: usize) -> Result<Poly> {
        let m = self.dim;
        let p = match &self.backend {
            Backend::Quadratic(q) => {
                let x: Vec<C64> = alpha.iter().chain(beta).copied().collect();
                q.to_poly().shift(&x).truncate(order)
            }
            Backend::Polynomial(p) => {
                let x: Vec<C64> = alpha.iter().chain(beta).copied().collect();
                p.shift(&x).truncate(order)
            }
            Backend::FubiniStudy => fs_taylor(alpha, beta, order)?,
            Backend::Composed(p1, p2) => {
                if order > 2 {
                    return Err(Error::Invariant(
                        "composed phases provide derivatives up to order 2".into(),
                    ));
                }
                crate::critical::composed_taylor2(p1, p2, alpha, beta)?.truncate(order)
            }
        };
        debug_assert_eq!(p.nvars(), 2 * m);
        p.check_finite()?;
        Ok(p)
    }

    /// Uniform evaluation front-end: value plus requested derivative tensors.
    pub fn eval(&self, alpha: &[C64], beta: &[C64], deriv_order: usize) -> Result<PhaseEval> {
        if deriv_order == 0 {
            return Ok(PhaseEval {
                value: self.value(alpha, beta)?,
                d_alpha: None,
                d_beta: None,
                h_aa: None,
                h_ab: None,
                h_bb: None,
            });
        }
        let order = deriv_order.min(2);
        let t = self.taylor(alpha, beta, order)?;
        let m = self.dim;
        let g = t.gradient_at_zero();
        let mut out = PhaseEval {
            value: t.constant_term(),
            d_alpha: Some(g.rows(0, m).into_owned()),
            d_beta: Some(g.rows(m, m).into_owned()),
            h_aa: None,
            h_ab: None,
            h_bb: None,
        };
        if order >= 2 {
            let h = t.hessian_at_zero();
            out.h_aa = Some(h.view((0, 0), (m, m)).into_owned());
            out.h_ab = Some(h.view((0, m), (m, m)).into_owned());
            out.h_bb = Some(h.view((m, m), (m, m)).into_owned());
        }
        Ok(out)
    }

    /// Diagonal jet at a real basepoint. Non-polynomial backends are limited
    /// to order 4 (composed phases to order 2).
    pub fn jet_at(&self, alpha0: &[f64], order: usize) -> Result<DiagonalJet> {
        if order < 2 {
            return Err(Error::Invariant("jet order must be at least 2".into()));
        }
        match self.backend {
            Backend::FubiniStudy if order > 4 => {
                return Err(Error::Invariant("order ≤ 4 for this backend".into()))
            }
            _ => {}
        }
        let a: Vec<C64> = alpha0.iter().map(|&x| cr(x)).collect();
        let t = self.taylor(&a, &a, order)?;
        DiagonalJet::new(alpha0.to_vec(), order, t)
    }

    /// [`Self::jet_at`] outside the declared domain, for quadrature grids
    /// that extend past it.
    pub fn jet_at_unchecked(&self, alpha0: &[f64], order: usize) -> Result<DiagonalJet> {
        if alpha0.len() != self.dim {
            return Err(Error::Dimension(format!("expected points of dimension {}", self.dim)));
        }
        if order < 2 || (matches!(self.backend, Backend::FubiniStudy) && order > 4) {
            return Err(Error::Invariant("jet order out of range for this backend".into()));
        }
        let a: Vec<C64> = alpha0.iter().map(|&x| cr(x)).collect();
        let t = self.taylor_unchecked(&a, &a, order)?;
        DiagonalJet::new(alpha0.to_vec(), order, t)
    }

    /// Largest |φ(α,β) + conj φ(β,α)| over seeded real pairs in the domain.
    pub fn self_adjoint_defect(&self, seed: u64, samples: usize) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let a = self.sample_real(&mut rng);
            let b = self.sample_near(&mut rng, &a, 0.5 * self.domain.rho);
            let v1 = self.value_real(&a, &b)?;
            let v2 = self.value_real(&b, &a)?;
            worst = worst.max((v1 + v2.conj()).norm());
        }
        Ok(worst)
    }

    /// Largest |φ(α,α)| over seeded real points.
    pub fn diagonal_defect(&self, seed: u64, samples: usize) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let a = self.sample_real(&mut rng);
            worst = worst.max(self.value_real(&a, &a)?.norm());
        }
        Ok(worst)
    }

    pub fn sample_real<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim)
            .map(|i| rng.random_range(self.domain.lo[i]..=self.domain.hi[i]))
            .collect()
    }

    /// A real point within distance `radius` of `a`, clamped to the box.
    pub fn sample_near<R: Rng>(&self, rng: &mut R, a: &[f64], radius: f64) -> Vec<f64> {
        let dir: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nrm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        let r = radius * rng.random_range(0.0..1.0);
        (0..self.dim)
            .map(|i| {
                (a[i] + r * dir[i] / nrm).clamp(self.domain.lo[i], self.domain.hi[i])
            })
            .collect()
    }

    /// Order-2 truncation at a basepoint as a quadratic phase.
    pub fn quadratic_model(&self, alpha0: &[f64]) -> Result<QuadraticPhase> {
        let jet = self.jet_at(alpha0, 2)?;
        let (a, b, c) = jet.blocks();
        let theta: Vec<f64> = jet.d_alpha().iter().map(|z| z.re).collect();
        QuadraticPhase::new(self.n(), alpha0.to_vec(), theta, a, b, c)
    }

    pub fn from_quadratic(q: QuadraticPhase, label: &str, self_adjoint: bool) -> Self {
        let m = q.m();
        let center = q.alpha0.clone();
        PhaseFunction {
            dim: m,
            backend: Backend::Quadratic(q),
            self_adjoint,
            domain: Domain {
                lo: center.iter().map(|c| c - 2.0).collect(),
                hi: center.iter().map(|c| c + 2.0).collect(),
                rho: 1.0,
            },
            label: label.to_string(),
        }
    }

    pub fn from_poly(p: Poly, dim: usize, label: &str, self_adjoint: bool, domain: Domain) -> Self {
        PhaseFunction {
            backend: Backend::Polynomial(p),
            dim,
            self_adjoint,
            domain,
            label: label.to_string(),
        }
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticPhase> {
        match &self.backend {
            Backend::Quadratic(q) => Some(q),
            _ => None,
        }
    }

    /// True when second derivatives are constant (quadratic or degree-2 polynomial).
    pub fn is_quadratic(&self) -> bool {
        match &self.backend {
            Backend::Quadratic(_) => true,
            Backend::Polynomial(p) => p.degree() <= 2,
            _ => false,
        }
    }

    /// Central-difference gradient and Hessian from values only (step
    /// 1e−5·(1+|x|)), as an independent check on the exact derivatives.
    pub fn fd_derivatives(&self, alpha: &[f64], beta: &[f64]) -> Result<(CVec, CMat)> {
        let m = self.dim;
        let x0: Vec<f64> = alpha.iter().chain(beta).copied().collect();
        let nrm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
        let h = 1e-5 * (1.0 + nrm);
        let f = |x: &[f64]| -> Result<C64> { self.value_real(&x[..m], &x[m..]) };
        let f0 = f(&x0)?;
        let mut g = CVec::zeros(2 * m);
        let mut hess = CMat::zeros(2 * m, 2 * m);
        for i in 0..2 * m {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[i] += h;
            xm[i] -= h;
            let (fp, fm) = (f(&xp)?, f(&xm)?);
            g[i] = (fp - fm) / (2.0 * h);
            hess[(i, i)] = (fp - f0 * 2.0 + fm) / (h * h);
            for j in 0..i {
                let mut xpp = x0.clone();
                let mut xpm = x0.clone();
                let mut xmp = x0.clone();
                let mut xmm = x0.clone();
                xpp[i] += h;
                xpp[j] += h;
                xpm[i] += h;
                xpm[j] -= h;
                xmp[i] -= h;
                xmp[j] += h;
                xmm[i] -= h;
                xmm[j] -= h;
                let v = (f(&xpp)? - f(&xpm)? - f(&xmp)? + f(&xmm)?) / (4.0 * h * h);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        Ok((g, hess))
    }
}

fn fs_guard(what: &'static str, q: C64) -> Result<C64> {
    let v = q.norm();
    if v < FS_GUARD || !v.is_finite() {
        return Err(Error::BranchGuard {
            what,
            value: v,
            limit: FS_GUARD,
        });
    }
    Ok(q)
}

/// Holomorphic coordinates (z, ζ) = (x + iy, x − iy) of a complexified point.
fn fs_coords(p: &[C64]) -> (C64, C64) {
    let i = C64::new(0.0, 1.0);
    (p[0] + i * p[1], p[0] - i * p[1])
}

fn fs_value(alpha: &[C64], beta: &[C64]) -> Result<C64> {
    let (za, ca) = fs_coords(alpha);
    let (zb, cb) = fs_coords(beta);
    let qa = fs_guard("1 + z_α ζ_α", cr(1.0) + za * ca)?;
    let qb = fs_guard("1 + z_β ζ_β", cr(1.0) + zb * cb)?;
    let qab = fs_guard("1 + z_α ζ_β", cr(1.0) + za * cb)?;
    let i = C64::new(0.0, 1.0);
    Ok(i * (qa.ln() * 0.5 + qb.ln() * 0.5 - qab.ln()))
}

/// log(1 + (a+s)(b+t)) expanded in the polynomial increments s, t.
fn log_one_plus_product(a: C64, b: C64, s: &Poly, t: &Poly, order: usize, what: &'static str) -> Result<Poly> {
    let nv = s.nvars();
    let q = fs_guard(what, cr(1.0) + a * b)?;
    // X/q with X = a t + b s + s t
    let x = t
        .scale(a)
        .add(&s.scale(b))
        .add(&s.mul_truncated(t, order))
        .scale(cr(1.0) / q);
    let mut out = Poly::constant(nv, q.ln());
    let mut pow = Poly::one(nv);
    for k in 1..=order {
        pow = pow.mul_truncated(&x, order);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        out = out.add(&pow.scale(cr(sign / k as f64)));
    }
    Ok(out)
}

fn fs_taylor(alpha: &[C64], beta: &[C64], order: usize) -> Result<Poly> {
    let i = C64::new(0.0, 1.0);
    let (za, ca) = fs_coords(alpha);
    let (zb, cb) = fs_coords(beta);
    // variables u_x, u_y, v_x, v_y
    let ux = Poly::var(4, 0);
    let uy = Poly::var(4, 1);
    let vx = Poly::var(4, 2);
    let vy = Poly::var(4, 3);
    let sa = ux.add(&uy.scale(i));
    let ta = ux.sub(&uy.scale(i));
    let sb = vx.add(&vy.scale(i));
    let tb = vx.sub(&vy.scale(i));
    let la = log_one_plus_product(za, ca, &sa, &ta, order, "1 + z_α ζ_α")?;
    let lb = log_one_plus_product(zb, cb, &sb, &tb, order, "1 + z_β ζ_β")?;
    let lab = log_one_plus_product(za, cb, &sa, &tb, order, "1 + z_α ζ_β")?;
    Ok(la
        .scale(cr(0.5))
        .add(&lb.scale(cr(0.5)))
        .sub(&lab)
        .scale(i)
        .truncate(order))
}
