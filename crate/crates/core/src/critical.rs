//! Complexified critical points γ_c(α, β), the reproducing property and
//! critical-value composition of phases.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{cond, cr, CMat, CVec};
use crate::phase::{Backend, PhaseFunction, QuadraticPhase};
use crate::poly::Poly;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 50;
const MAX_COND: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct CriticalSolveResult {
    pub gamma_c: Vec<C64>,
    pub residual: f64,
    pub iterations: usize,
    pub critical_value: C64,
}

fn cvec(x: &[C64]) -> CVec {
    CVec::from_column_slice(x)
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn to_c(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&v| cr(v)).collect()
}

/// Gradient (length 2m) and Hessian (2m × 2m) of φ at (α, β).
fn grad_hess(phi: &PhaseFunction, a: &[C64], b: &[C64]) -> Result<(CVec, CMat)> {
    let t = phi.taylor(a, b, 2)?;
    Ok((t.gradient_at_zero(), t.hessian_at_zero()))
}

/// Gradient in γ of φ1(α,γ) + φ2(γ,β) and its Jacobian.
fn mixed_system(
    p1: &PhaseFunction,
    p2: &PhaseFunction,
    a: &[C64],
    g: &[C64],
    b: &[C64],
) -> Result<(CVec, CMat)> {
    let m = p1.dim;
    let (g1, h1) = grad_hess(p1, a, g)?;
    let (g2, h2) = grad_hess(p2, g, b)?;
    let grad = g1.rows(m, m) + g2.rows(0, m);
    let jac = h1.view((m, m), (m, m)) + h2.view((0, 0), (m, m));
    Ok((grad, jac))
}

/// Newton iteration for the critical point of γ ↦ φ1(α,γ) + φ2(γ,β).
pub fn solve_mixed(
    p1: &PhaseFunction,
    p2: &PhaseFunction,
    alpha: &[C64],
    beta: &[C64],
    init: Option<&[C64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CriticalSolveResult> {
    if p1.dim != p2.dim || alpha.len() != p1.dim || beta.len() != p1.dim {
        return Err(Error::Dimension("phases and points must share dimension".into()));
    }
    let m = p1.dim;
    let mut g: Vec<C64> = match init {
        Some(x) => x.to_vec(),
        None => (0..m).map(|i| (alpha[i] + beta[i]) * 0.5).collect(),
    };
    let mut iterations = 0;
    loop {
        let (grad, jac) = mixed_system(p1, p2, alpha, &g, beta)?;
        let res = grad.norm();
        if !res.is_finite() {
            return Err(Error::NonFinite("critical-point gradient".into()));
        }
        if res <= tol {
            let value = p1.value(alpha, &g)? + p2.value(&g, beta)?;
            return Ok(CriticalSolveResult {
                gamma_c: g,
                residual: res,
                iterations,
                critical_value: value,
            });
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: res,
            });
        }
        let c = cond(&jac);
        if !(c < MAX_COND) {
            return Err(Error::Singular(format!(
                "critical-point Jacobian has condition number {c:.3e}"
            )));
        }
        let step = jac
            .lu()
            .solve(&grad)
            .ok_or_else(|| Error::Singular("critical-point Jacobian".into()))?;
        for i in 0..m {
            g[i] -= step[i];
        }
        iterations += 1;
        // accept a stagnated iterate sitting at the rounding floor
        let gn = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if step.norm() <= 1e-15 * (1.0 + gn) {
            let (grad, _) = mixed_system(p1, p2, alpha, &g, beta)?;
            let res = grad.norm();
            if res <= 100.0 * tol {
                let value = p1.value(alpha, &g)? + p2.value(&g, beta)?;
                return Ok(CriticalSolveResult {
                    gamma_c: g,
                    residual: res,
                    iterations,
                    critical_value: value,
                });
            }
        }
    }
}

/// The basin guard: |α − β| ≤ ½·(complexification radius).
pub fn check_basin(phase: &PhaseFunction, alpha: &[C64], beta: &[C64]) -> Result<()> {
    let d = dist(alpha, beta);
    let lim = 0.5 * phase.domain.rho;
    if d > lim {
        return Err(Error::OutOfDomain(format!(
            "|α − β| = {d:.3e} exceeds the Newton basin radius {lim:.3e}"
        )));
    }
    Ok(())
}

pub fn solve_gamma_c_with(
    phase: &PhaseFunction,
    alpha: &[C64],
    beta: &[C64],
    tol: f64,
    max_iter: usize,
) -> Result<CriticalSolveResult> {
    check_basin(phase, alpha, beta)?;
    if alpha == beta {
        let (grad, _) = mixed_system(phase, phase, alpha, alpha, beta)?;
        return Ok(CriticalSolveResult {
            gamma_c: alpha.to_vec(),
            residual: grad.norm(),
            iterations: 0,
            critical_value: phase.value(alpha, alpha)? * 2.0,
        });
    }
    solve_mixed(phase, phase, alpha, beta, None, tol, max_iter)
}

pub fn solve_gamma_c(phase: &PhaseFunction, alpha: &[C64], beta: &[C64]) -> Result<CriticalSolveResult> {
    solve_gamma_c_with(phase, alpha, beta, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

pub fn solve_gamma_c_real(phase: &PhaseFunction, alpha: &[f64], beta: &[f64]) -> Result<CriticalSolveResult> {
    solve_gamma_c(phase, &to_c(alpha), &to_c(beta))
}

/// |φ(α,γ_c) + φ(γ_c,β) − φ(α,β)|.
pub fn reproducing_residual(phase: &PhaseFunction, alpha: &[C64], beta: &[C64]) -> Result<f64> {
    let r = solve_gamma_c(phase, alpha, beta)?;
    Ok((r.critical_value - phase.value(alpha, beta)?).norm())
}

/// Defects of ∂_βφ(α,γ)+∂_αφ(γ,β) = 0, ∂_βφ(γ,β) = ∂_βφ(α,β) and
/// ∂_αφ(α,γ) = ∂_αφ(α,β).
pub fn d_critique_residual(phase: &PhaseFunction, alpha: &[C64], beta: &[C64]) -> Result<[f64; 3]> {
    let m = phase.dim;
    let r = solve_gamma_c(phase, alpha, beta)?;
    let g = &r.gamma_c;
    let (g_ag, _) = grad_hess(phase, alpha, g)?;
    let (g_gb, _) = grad_hess(phase, g, beta)?;
    let (g_ab, _) = grad_hess(phase, alpha, beta)?;
    let first = (g_ag.rows(m, m) + g_gb.rows(0, m)).norm();
    let second = (g_gb.rows(m, m) - g_ab.rows(m, m)).norm();
    let third = (g_ag.rows(0, m) - g_ab.rows(0, m)).norm();
    Ok([first, second, third])
}

/// max(‖γ_c(γ_c(α,β),β) − γ_c(α,β)‖, ‖γ_c(α,γ_c(α,β)) − γ_c(α,β)‖).
pub fn associativity_residual(phase: &PhaseFunction, alpha: &[C64], beta: &[C64]) -> Result<f64> {
    let g = solve_gamma_c(phase, alpha, beta)?.gamma_c;
    let left = solve_gamma_c(phase, &g, beta)?.gamma_c;
    let right = solve_gamma_c(phase, alpha, &g)?.gamma_c;
    Ok(dist(&left, &g).max(dist(&right, &g)))
}

/// Newton from `starts` random complex initial guesses within `radius` of
/// (α+β)/2. Returns (largest pairwise distance among converged solutions,
/// number of starts that failed).
pub fn multi_start_spread(
    phase: &PhaseFunction,
    alpha: &[C64],
    beta: &[C64],
    starts: usize,
    radius: f64,
    seed: u64,
) -> Result<(f64, usize)> {
    let m = phase.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mid: Vec<C64> = (0..m).map(|i| (alpha[i] + beta[i]) * 0.5).collect();
    let mut sols: Vec<Vec<C64>> = Vec::new();
    let mut failed = 0;
    for _ in 0..starts {
        let mut d: Vec<C64> = (0..m)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let nrm = d.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-12);
        let r = radius * rng.random_range(0.0..1.0f64).sqrt();
        for z in d.iter_mut() {
            *z = *z * (r / nrm);
        }
        let init: Vec<C64> = (0..m).map(|i| mid[i] + d[i]).collect();
        match solve_mixed(phase, phase, alpha, beta, Some(&init), DEFAULT_TOL, DEFAULT_MAX_ITER) {
            Ok(s) => sols.push(s.gamma_c),
            Err(_) => failed += 1,
        }
    }
    let mut spread: f64 = 0.0;
    for i in 0..sols.len() {
        for j in 0..i {
            spread = spread.max(dist(&sols[i], &sols[j]));
        }
    }
    Ok((spread, failed))
}

/// Closed-form critical point of γ ↦ q1(α,γ) + q2(γ,β) for quadratic phases.
pub fn compose_quadratic_exact(
    q1: &QuadraticPhase,
    q2: &QuadraticPhase,
    alpha: &[C64],
    beta: &[C64],
) -> Result<CriticalSolveResult> {
    let m = q1.m();
    let a01 = cvec(&to_c(&q1.alpha0));
    let a02 = cvec(&to_c(&q2.alpha0));
    let th1 = cvec(&to_c(&q1.theta));
    let th2 = cvec(&to_c(&q2.theta));
    let u = cvec(alpha) - &a01;
    let w = cvec(beta) - &a02;
    // −θ1 + B1ᵀu + C1(γ−α01) + θ2 + A2(γ−α02) + B2 w = 0
    let mmat = &q1.c + &q2.a;
    let rhs = &th1 - &th2 - q1.b.transpose() * &u + &q1.c * &a01 + &q2.a * &a02 - &q2.b * &w;
    let c = cond(&mmat);
    if !(c < MAX_COND) {
        return Err(Error::Singular(format!("mixed Hessian condition number {c:.3e}")));
    }
    let g = mmat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("mixed Hessian".into()))?;
    let gv: Vec<C64> = g.iter().copied().collect();
    let value = q1.value(alpha, &gv) + q2.value(&gv, beta);
    // residual of the affine gradient
    let grad = -&th1 + q1.b.transpose() * &u + &q1.c * (&g - &a01) + &th2 + &q2.a * (&g - &a02) + &q2.b * &w;
    debug_assert_eq!(gv.len(), m);
    Ok(CriticalSolveResult {
        gamma_c: gv,
        residual: grad.norm(),
        iterations: 0,
        critical_value: value,
    })
}

/// ψ1 ⊙ ψ2(α,β) = VC_γ[ψ1(α,γ) + ψ2(γ,β)]: exact linear solve for two
/// quadratic phases, Newton otherwise.
pub fn compose_phases_vc(
    p1: &PhaseFunction,
    p2: &PhaseFunction,
    alpha: &[C64],
    beta: &[C64],
) -> Result<CriticalSolveResult> {
    if let (Backend::Quadratic(q1), Backend::Quadratic(q2)) = (&p1.backend, &p2.backend) {
        return compose_quadratic_exact(q1, q2, alpha, beta);
    }
    solve_mixed(p1, p2, alpha, beta, None, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Newton path for ⊙ regardless of backend (the cross-check oracle for the
/// exact quadratic path).
pub fn compose_phases_newton(
    p1: &PhaseFunction,
    p2: &PhaseFunction,
    alpha: &[C64],
    beta: &[C64],
) -> Result<CriticalSolveResult> {
    solve_mixed(p1, p2, alpha, beta, None, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// The phase ψ1 ⊙ ψ2 as a lazily evaluated phase function.
pub fn compose_phases(p1: &PhaseFunction, p2: &PhaseFunction) -> Result<PhaseFunction> {
    if p1.dim != p2.dim {
        return Err(Error::Dimension("composed phases must share dimension".into()));
    }
    Ok(PhaseFunction {
        dim: p1.dim,
        self_adjoint: false,
        domain: p1.domain.clone(),
        label: format!("({})⊙({})", p1.label, p2.label),
        backend: Backend::Composed(Box::new(p1.clone()), Box::new(p2.clone())),
    })
}

/// Order-2 Taylor polynomial of ψ1 ⊙ ψ2 at (α, β) from the implicit
/// function theorem: ψ'' = F_xx − F_xγ F_γγ⁻¹ F_γx.
pub(crate) fn composed_taylor2(
    p1: &PhaseFunction,
    p2: &PhaseFunction,
    alpha: &[C64],
    beta: &[C64],
) -> Result<Poly> {
    let m = p1.dim;
    let r = compose_phases_vc(p1, p2, alpha, beta)?;
    let g = &r.gamma_c;
    let (g1, h1) = grad_hess(p1, alpha, g)?;
    let (g2, h2) = grad_hess(p2, g, beta)?;
    let mut grad = CVec::zeros(2 * m);
    grad.rows_mut(0, m).copy_from(&g1.rows(0, m));
    grad.rows_mut(m, m).copy_from(&g2.rows(m, m));
    let mut fxx = CMat::zeros(2 * m, 2 * m);
    fxx.view_mut((0, 0), (m, m)).copy_from(&h1.view((0, 0), (m, m)));
    fxx.view_mut((m, m), (m, m)).copy_from(&h2.view((m, m), (m, m)));
    let mut fxg = CMat::zeros(2 * m, m);
    fxg.view_mut((0, 0), (m, m)).copy_from(&h1.view((0, m), (m, m)));
    fxg.view_mut((m, 0), (m, m)).copy_from(&h2.view((m, 0), (m, m)));
    let fgg = h1.view((m, m), (m, m)) + h2.view((0, 0), (m, m));
    let x = fgg
        .lu()
        .solve(&fxg.transpose())
        .ok_or_else(|| Error::Singular("mixed Hessian".into()))?;
    let hess = fxx - &fxg * x;
    let hess = (&hess + hess.transpose()) * cr(0.5);
    let lin: Vec<C64> = grad.iter().copied().collect();
    Ok(Poly::linear(&lin, r.critical_value).add(&Poly::quadratic_form(&hess)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::I;
    use crate::phase::{make_bargmann, make_fubini_study};

    #[test]
    fn bargmann_closed_form_gamma() {
        // w = (u+v)/2 + (i/2)J̃(v−u) with J̃ = −R = [[0,−1],[1,0]]
        let phi = make_bargmann(1);
        let (a, b) = ([0.1, -0.2], [0.25, 0.05]);
        let r = solve_gamma_c_real(&phi, &a, &b).unwrap();
        let d = [b[0] - a[0], b[1] - a[1]];
        let jd = [-d[1], d[0]];
        for k in 0..2 {
            let expect = cr(0.5 * (a[k] + b[k])) + I * 0.5 * jd[k];
            assert!((r.gamma_c[k] - expect).norm() < 1e-13);
        }
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn fubini_study_closed_form_gamma() {
        let phi = make_fubini_study(None);
        let (a, b) = ([0.3, -0.1], [0.2, 0.05]);
        let r = solve_gamma_c_real(&phi, &a, &b).unwrap();
        let za = C64::new(a[0], a[1]);
        let wb = C64::new(b[0], -b[1]);
        // x + iy = z_α and x − iy = z̄_β
        let x = (za + wb) * 0.5;
        let y = (za - wb) / (I * 2.0);
        assert!((r.gamma_c[0] - x).norm() < 1e-11);
        assert!((r.gamma_c[1] - y).norm() < 1e-11);
    }

    #[test]
    fn equal_points_short_circuit() {
        let phi = make_fubini_study(None);
        let r = solve_gamma_c_real(&phi, &[0.2, 0.1], &[0.2, 0.1]).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.gamma_c, to_c(&[0.2, 0.1]));
    }

    #[test]
    fn basin_guard() {
        let phi = make_bargmann(1);
        assert!(solve_gamma_c_real(&phi, &[0.0, 0.0], &[0.9, 0.0]).is_err());
    }

    #[test]
    fn composed_taylor_matches_newton_values() {
        let phi = make_fubini_study(None);
        let comp = compose_phases(&phi, &phi).unwrap();
        let a = to_c(&[0.1, 0.05]);
        let b = to_c(&[0.05, -0.02]);
        let t = comp.taylor(&a, &b, 2).unwrap();
        let direct = phi.taylor(&a, &b, 2).unwrap();
        assert!(t.distance(&direct) < 1e-10);
    }
}
