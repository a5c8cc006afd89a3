use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Backend, Domain, PhaseFunction, QuadraticPhase};
use crate::error::{Error, Result};
use crate::linalg::{cond, cr, fro, re_part, sym_eigenvalues, to_complex, CMat, RMat, I};
use crate::poly::Poly;

/// Bargmann–Segal phase Σ_j Im(z_j z̄′_j) + (i/2)|z − z′|² in real
/// coordinates (x_1, y_1, …, x_n, y_n).
pub fn make_bargmann(n: usize) -> PhaseFunction {
    assert!(n >= 1, "n must be positive");
    let m = 2 * n;
    let nv = 2 * m;
    let mut p = Poly::zero(nv);
    let half_i = I * 0.5;
    for j in 0..n {
        let (x, y) = (2 * j, 2 * j + 1);
        let (xp, yp) = (m + 2 * j, m + 2 * j + 1);
        let mono = |a: usize, b: usize, c: C64| {
            let mut e = vec![0u32; nv];
            e[a] += 1;
            e[b] += 1;
            Poly::monomial(e, c)
        };
        p = p.add(&mono(y, xp, cr(1.0))).sub(&mono(x, yp, cr(1.0)));
        for (s, t) in [(x, xp), (y, yp)] {
            p = p
                .add(&mono(s, s, half_i))
                .add(&mono(t, t, half_i))
                .sub(&mono(s, t, I));
        }
    }
    PhaseFunction {
        backend: Backend::Polynomial(p),
        dim: m,
        self_adjoint: true,
        domain: Domain::cube(m, 2.0, 1.0),
        label: format!("bargmann(n={n})"),
    }
}

/// Fubini–Study diastasis i[½log(1+|z|²) + ½log(1+|w|²) − log(1+z w̄)],
/// n = 1, with z and z̄ continued independently. Default domain |x|,|y| ≤ 0.7.
pub fn make_fubini_study(domain: Option<Domain>) -> PhaseFunction {
    PhaseFunction {
        backend: Backend::FubiniStudy,
        dim: 2,
        self_adjoint: true,
        domain: domain.unwrap_or_else(|| Domain::cube(2, 0.7, 0.5)),
        label: "fubini_study".into(),
    }
}

/// Quadratic phase at α0 = 0 whose normalized form in the coordinates Lα is
/// θL⁻¹(u−v) + (i/2)(u−v)² + uᵀJ̃v, i.e. A = C = iL², B = L(J̃ − i)L.
pub fn make_model_quadratic(theta: &[f64], l: &CMat, jt: &CMat) -> Result<PhaseFunction> {
    let m = l.nrows();
    if m % 2 != 0 || l.ncols() != m || jt.shape() != (m, m) || theta.len() != m {
        return Err(Error::Dimension("L, J̃ must be m×m with m even".into()));
    }
    let eye = CMat::identity(m, m);
    if fro(&(jt + jt.transpose())) > 1e-12 {
        return Err(Error::Invariant("J̃ is not antisymmetric".into()));
    }
    let sq = fro(&(jt * jt + &eye));
    if sq > 1e-12 {
        return Err(Error::Invariant(format!("J̃² ≠ −I (‖J̃²+I‖ = {sq:.3e})")));
    }
    if fro(&(l - l.transpose())) > 1e-12 {
        return Err(Error::Invariant("L is not symmetric".into()));
    }
    let d = l * l;
    let red = re_part(&d);
    if sym_eigenvalues(&((&red + red.transpose()) * 0.5))[0] <= 0.0 {
        return Err(Error::Invariant("Re L² is not positive definite".into()));
    }
    let ljl = l * jt * l;
    if crate::linalg::fro(&crate::linalg::im_part(&ljl).map(cr)) > 1e-12 * (1.0 + fro(&ljl)) {
        return Err(Error::Invariant("L J̃ L is not real, so R would not be real".into()));
    }
    let a = &d * I;
    let b = l * (jt - &eye * I) * l;
    let q = QuadraticPhase::new(m / 2, vec![0.0; m], theta.to_vec(), a.clone(), b, a)?;
    Ok(PhaseFunction::from_quadratic(q, "model_quadratic", false))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scramble {
    GeneralLinear,
    Symplectic,
}

impl Scramble {
    pub fn parse(s: &str) -> Option<Scramble> {
        match s {
            "general-linear" | "general_linear" | "gl" => Some(Scramble::GeneralLinear),
            "symplectic" | "sp" => Some(Scramble::Symplectic),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scramble::GeneralLinear => "general-linear",
            Scramble::Symplectic => "symplectic",
        }
    }
}

/// Ingredients of a scrambled phase: φ(α,β) = φ_BS(Sα, Sβ) + gauge.
#[derive(Clone, Debug)]
pub struct ScrambleData {
    pub s: RMat,
    /// Hessian of the gauge coboundary added to A (and subtracted from C).
    pub gauge: RMat,
    pub phase: QuadraticPhase,
}

fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> RMat {
    RMat::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Interleaved (x_1, y_1, …) → block (x_1, …, x_n, y_1, …, y_n) permutation.
fn interleave_to_block(n: usize) -> RMat {
    let mut p = RMat::zeros(2 * n, 2 * n);
    for j in 0..n {
        p[(j, 2 * j)] = 1.0;
        p[(n + j, 2 * j + 1)] = 1.0;
    }
    p
}

fn random_general_linear(rng: &mut ChaCha8Rng, m: usize) -> RMat {
    loop {
        let g = normal_matrix(rng, m, m);
        let s = RMat::identity(m, m) + g * (0.5 / (m as f64).sqrt());
        if cond(&to_complex(&s)) < 50.0 {
            return s;
        }
    }
}

fn random_symplectic(rng: &mut ChaCha8Rng, n: usize) -> RMat {
    let a = loop {
        let g = normal_matrix(rng, n, n);
        let a = RMat::identity(n, n) + g * (0.3 / (n as f64).sqrt());
        if cond(&to_complex(&a)) < 20.0 {
            break a;
        }
    };
    let sym = |rng: &mut ChaCha8Rng| {
        let g = normal_matrix(rng, n, n);
        (&g + g.transpose()) * 0.15
    };
    let b = sym(rng);
    let c = sym(rng);
    let ainv_t = a.clone().try_inverse().expect("conditioned").transpose();
    let mut d = RMat::zeros(2 * n, 2 * n);
    d.view_mut((0, 0), (n, n)).copy_from(&a);
    d.view_mut((n, n), (n, n)).copy_from(&ainv_t);
    let mut ub = RMat::identity(2 * n, 2 * n);
    ub.view_mut((0, n), (n, n)).copy_from(&b);
    let mut lc = RMat::identity(2 * n, 2 * n);
    lc.view_mut((n, 0), (n, n)).copy_from(&c);
    let blk = d * ub * lc;
    let p = interleave_to_block(n);
    p.transpose() * blk * p
}

/// Bargmann blocks (A, B, C) for dimension n.
pub(crate) fn bargmann_blocks(n: usize) -> (CMat, CMat, CMat) {
    let m = 2 * n;
    let a = CMat::identity(m, m) * I;
    let mut b = CMat::zeros(m, m);
    for j in 0..n {
        let (x, y) = (2 * j, 2 * j + 1);
        b[(x, x)] = -I;
        b[(y, y)] = -I;
        b[(x, y)] = cr(-1.0);
        b[(y, x)] = cr(1.0);
    }
    (a.clone(), b, a)
}

/// Seeded scrambled Bargmann phase with its ingredients.
pub fn random_scrambled(seed: u64, n: usize, scramble: Scramble) -> Result<(PhaseFunction, ScrambleData)> {
    let m = 2 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0000_0000_0000);
    let s = match scramble {
        Scramble::GeneralLinear => random_general_linear(&mut rng, m),
        Scramble::Symplectic => random_symplectic(&mut rng, n),
    };
    let g = normal_matrix(&mut rng, m, m);
    let h = (&g + g.transpose()) * 0.25;
    let alpha0: Vec<f64> = (0..m).map(|_| rng.random_range(-0.3..=0.3)).collect();

    let (ab, bb, cb) = bargmann_blocks(n);
    let sc = to_complex(&s);
    let hc = to_complex(&h);
    let a = sc.transpose() * ab * &sc + &hc;
    let b = sc.transpose() * bb * &sc;
    let c = sc.transpose() * cb * &sc - &hc;
    // ϑ at α0: Sᵀ applied to (−y, x) at the image point
    let p = &s * nalgebra::DVector::from_column_slice(&alpha0);
    let mut tb = nalgebra::DVector::zeros(m);
    for j in 0..n {
        tb[2 * j] = -p[2 * j + 1];
        tb[2 * j + 1] = p[2 * j];
    }
    let theta: Vec<f64> = (s.transpose() * tb).iter().copied().collect();
    let q = QuadraticPhase::new(n, alpha0, theta, a, b, c)?;
    let mut phi = PhaseFunction::from_quadratic(q.clone(), "scrambled", true);
    phi.label = format!("scrambled(seed={seed}, n={n}, {})", scramble.name());
    Ok((
        phi,
        ScrambleData {
            s,
            gauge: h,
            phase: q,
        },
    ))
}

pub fn random_quadratic_projector_phase(seed: u64, n: usize, scramble: Scramble) -> Result<PhaseFunction> {
    Ok(random_scrambled(seed, n, scramble)?.0)
}

/// B ↦ B + ε E with E the antisymmetric unit in the first coordinate pair
/// (C is left as is, so the zero-sum constraint still holds).
pub fn perturb_b_antisymmetric(q: &QuadraticPhase, eps: f64) -> Result<QuadraticPhase> {
    let mut b = q.b.clone();
    b[(0, 1)] += eps;
    b[(1, 0)] -= eps;
    QuadraticPhase::new(q.n, q.alpha0.clone(), q.theta.clone(), q.a.clone(), b, q.c.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::omega;

    #[test]
    fn bargmann_value_at_unit_shift() {
        let phi = make_bargmann(1);
        let v = phi.value_real(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((v - I * 0.5).norm() < 1e-15);
    }

    #[test]
    fn bargmann_matches_complex_form() {
        // Im(z w̄) + (i/2)|z − w|²
        let phi = make_bargmann(1);
        let (z, w) = (C64::new(0.3, -0.4), C64::new(-0.1, 0.25));
        let expected = (z * w.conj()).im + I * 0.5 * (z - w).norm_sqr();
        let v = phi.value_real(&[z.re, z.im], &[w.re, w.im]).unwrap();
        assert!((v - expected).norm() < 1e-15);
    }

    #[test]
    fn symplectic_scramble_is_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_symplectic(&mut rng, 2);
        let p = interleave_to_block(2);
        let om = p.transpose() * omega(2) * &p;
        let defect = &s.transpose() * &om * &s - &om;
        assert!(defect.norm() < 1e-12);
    }

    #[test]
    fn model_quadratic_rejects_bad_jt() {
        let l = CMat::identity(2, 2);
        let jt = CMat::from_row_slice(2, 2, &[cr(0.0), cr(-2.0), cr(2.0), cr(0.0)]);
        assert!(make_model_quadratic(&[0.0, 0.0], &l, &jt).is_err());
    }
}
