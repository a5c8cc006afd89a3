//! The diagonal geometric package of a projector phase: ϑ, R, D, P, L, J, J̃,
//! tangent models of Σ, J, J*, F, F*, and leaf positivity.
//!
//! Tangent vectors of T*R^m are written (position, covector) and the
//! symplectic matrix is [`crate::linalg::omega`].

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{
    ceye, containment_defect, cr, fro, herm_eigenvalues, im_part, intersection, inverse, null_space,
    rank, re_part, sqrtm, sym_eigenvalues, to_complex, vstack, CMat, RMat, I,
};
use crate::phase::{DiagonalJet, PhaseFunction};
use crate::report::Report;

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct KahlerData {
    pub basepoint: Vec<f64>,
    pub theta: Vec<f64>,
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
    pub r: RMat,
    pub d: CMat,
    pub p: RMat,
    pub l: CMat,
    pub j: CMat,
    pub jt: CMat,
}

fn realness_check(name: &str, m: &CMat, scale: f64, tol: f64) -> Result<RMat> {
    let im = fro(&im_part(m).map(cr));
    if im > tol * scale {
        return Err(Error::Invariant(format!("{name} is not real (‖Im {name}‖ = {im:.3e})")));
    }
    Ok(re_part(m))
}

/// Extract the Kähler package from a jet of order ≥ 2.
pub fn kahler_triple(jet: &DiagonalJet) -> Result<KahlerData> {
    let (a, b, c) = jet.blocks();
    let scale = 1.0 + fro(&b);
    let r = realness_check("R", &((b.transpose() - &b) * cr(0.5)), scale, 1e-8)?;
    let p = realness_check("P", &((&a - &c) * cr(0.5)), scale, 1e-8)?;
    let d = (&b + b.transpose()) * (I * 0.5);
    let red = re_part(&d);
    let lmin = sym_eigenvalues(&((&red + red.transpose()) * 0.5))
        .first()
        .copied()
        .unwrap_or(f64::NAN);
    if !(lmin > 0.0) {
        return Err(Error::Invariant(format!(
            "Re D is not positive definite (smallest eigenvalue {lmin:.3e})"
        )));
    }
    let l = sqrtm(&d)?;
    let l = (&l + l.transpose()) * cr(0.5);
    let rc = to_complex(&r);
    let dinv = inverse(&d, 1e12)?;
    let linv = inverse(&l, 1e12)?;
    let j = -(&dinv * &rc);
    let jt = -(&linv * &rc * &linv);
    let theta = jet.d_alpha().iter().map(|z| z.re).collect();
    Ok(KahlerData {
        basepoint: jet.basepoint.clone(),
        theta,
        a,
        b,
        c,
        r,
        d,
        p,
        l,
        j,
        jt,
    })
}

impl KahlerData {
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    /// Residuals of every algebraic identity of the package.
    pub fn residuals(&self, tol: f64) -> Report {
        let m = self.m();
        let e = ceye(m);
        let rc = to_complex(&self.r);
        let mut rep = Report::new();
        rep.max("l_squared", fro(&(&self.l * &self.l - &self.d)), tol)
            .max("j_squared", fro(&(&self.j * &self.j + &e)), tol)
            .max("jt_d_equals_r", fro(&(self.j.transpose() * &self.d - &rc)), tol)
            .max(
                "j_preserves_g",
                fro(&(self.j.transpose() * &self.d * &self.j - &self.d)),
                tol,
            )
            .max("jtilde_antisymmetric", fro(&(&self.jt + self.jt.transpose())), tol)
            .max("jtilde_squared", fro(&(&self.jt * &self.jt + &e)), tol)
            .max(
                "b_factorization",
                fro(&(&self.l * (&self.jt - &e * I) * &self.l - &self.b)),
                tol,
            );
        rep
    }

    /// ‖Im D‖, zero for self-adjoint phases.
    pub fn im_d(&self) -> f64 {
        fro(&im_part(&self.d).map(cr))
    }
}

/// Residual report for the projector-phase conditions at jet level.
pub fn check_projector_jet(jet: &DiagonalJet, tol: f64) -> Report {
    let (a, b, c) = jet.blocks();
    let m = jet.m();
    let inv = jet.invariants();
    let mut rep = Report::new();
    rep.max(
        "diagonal_vanishing",
        inv.constant.max(inv.diagonal_restriction),
        tol,
    );
    rep.max("zero_sum", fro(&(&a + &b + b.transpose() + &c)), tol);
    let rr = (b.transpose() - &b) * cr(0.5);
    let pp = (&a - &c) * cr(0.5);
    rep.max("r_real", fro(&im_part(&rr).map(cr)), tol);
    rep.max("p_real", fro(&im_part(&pp).map(cr)), tol);
    let d = (&b + b.transpose()) * (I * 0.5);
    let red = re_part(&d);
    let lmin = sym_eigenvalues(&((&red + red.transpose()) * 0.5))
        .first()
        .copied()
        .unwrap_or(f64::NAN);
    rep.min("re_d_min_eig", lmin, 0.0);
    let js = match inverse(&d, 1e12) {
        Ok(dinv) => {
            let j = -(&dinv * &rr);
            fro(&(&j * &j + ceye(m)))
        }
        Err(_) => f64::INFINITY,
    };
    rep.max("j_squared", js, tol);
    rep
}

/// Numerical rank of ∂_α∂_βφ(α, β) with threshold 1e−8·σ_max.
pub fn rank_cross_hessian(phase: &PhaseFunction, alpha: &[C64], beta: &[C64]) -> Result<usize> {
    let e = phase.eval(alpha, beta, 2)?;
    let b = e.h_ab.expect("order-2 evaluation");
    Ok(rank(&b, 1e-8))
}

/// Tangent spaces at (α0, ϑ_α0) as column bases in C^{2m}.
#[derive(Clone, Debug)]
pub struct TangentModel {
    pub sigma: CMat,
    pub j: CMat,
    pub j_star: CMat,
    pub f: CMat,
    pub f_star: CMat,
    pub checks: Report,
}

fn graph(x: &CMat, y: &CMat) -> CMat {
    vstack(&[x, y])
}

pub fn tangent_models(jet: &DiagonalJet) -> Result<TangentModel> {
    let (a, b, c) = jet.blocks();
    let m = jet.m();
    let n = m / 2;
    let e = ceye(m);
    let z = CMat::zeros(m, m);
    let tol = 1e-9;

    // TJ = {(u, Au + Bv)}, TJ* = {(v, −Bᵀu − Cv)}
    let j_raw = graph(&crate::linalg::hstack(&[&e, &z]), &crate::linalg::hstack(&[&a, &b]));
    let js_raw = graph(
        &crate::linalg::hstack(&[&z, &e]),
        &crate::linalg::hstack(&[&(-b.transpose()), &(-&c)]),
    );
    let j = crate::linalg::orth(&j_raw, 1e-10);
    let j_star = crate::linalg::orth(&js_raw, 1e-10);
    let ker_bt = null_space(&b.transpose(), 1e-8);
    let ker_b = null_space(&b, 1e-8);
    let f = graph(&ker_bt, &(&a * &ker_bt));
    let f_star = graph(&ker_b, &(-(&c * &ker_b)));
    let sigma = graph(&e, &(&a + &b));

    let dims = [
        ("dim_sigma", sigma.ncols(), m),
        ("dim_j", j.ncols(), 3 * n),
        ("dim_j_star", j_star.ncols(), 3 * n),
        ("dim_f", f.ncols(), n),
        ("dim_f_star", f_star.ncols(), n),
    ];
    let mut checks = Report::new();
    for (name, got, want) in dims {
        checks.max(name, (got as f64 - want as f64).abs(), 0.5);
    }
    if dims.iter().any(|(_, g, w)| g != w) {
        let bad: Vec<String> = dims
            .iter()
            .filter(|(_, g, w)| g != w)
            .map(|(k, g, w)| format!("{k} = {g} (expected {w})"))
            .collect();
        return Err(Error::Dimension(bad.join(", ")));
    }
    checks
        .max("f_in_j", containment_defect(&j, &f), tol)
        .max("f_star_in_j_star", containment_defect(&j_star, &f_star), tol)
        .max("sigma_in_j", containment_defect(&j, &sigma), tol)
        .max("sigma_in_j_star", containment_defect(&j_star, &sigma), tol)
        .max(
            "ker_b_transverse",
            intersection(&ker_b, &ker_bt, 1e-8).ncols() as f64,
            0.5,
        )
        .max(
            "sigma_transverse_f",
            intersection(&sigma, &f, 1e-8).ncols() as f64,
            0.5,
        );
    Ok(TangentModel {
        sigma,
        j,
        j_star,
        f,
        f_star,
        checks,
    })
}

/// Smallest eigenvalue of the Hermitian form u ↦ ⟨Im(A)u, ū⟩ on ker Bᵀ.
pub fn positivity_leaf(jet: &DiagonalJet) -> Report {
    let (a, b, _) = jet.blocks();
    let k = null_space(&b.transpose(), 1e-8);
    let ima = im_part(&a).map(cr);
    let form = k.adjoint() * ima * &k;
    let lmin = herm_eigenvalues(&form).first().copied().unwrap_or(f64::NAN);
    let mut rep = Report::new();
    rep.min("leaf_min_eig", lmin, 0.0);
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{make_bargmann, make_fubini_study, make_model_quadratic};

    #[test]
    fn bargmann_data() {
        let jet = make_bargmann(1).jet_at(&[0.3, -0.2], 2).unwrap();
        let k = kahler_triple(&jet).unwrap();
        assert!(fro(&(&k.d - ceye(2))) < 1e-14);
        let r = RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((&k.r - r).norm() < 1e-14);
        let j = CMat::from_row_slice(2, 2, &[cr(0.0), cr(-1.0), cr(1.0), cr(0.0)]);
        assert!(fro(&(&k.j - j)) < 1e-14);
        assert!(k.residuals(1e-12).passed());
        assert!((positivity_leaf(&jet).residual("leaf_min_eig") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn model_round_trip() {
        let jt = CMat::from_row_slice(2, 2, &[cr(0.0), cr(-1.0), cr(1.0), cr(0.0)]);
        let l = CMat::from_row_slice(
            2,
            2,
            // det L real, so R = −L J̃ L is real
            &[C64::new(1.0, 0.1), cr(0.2), cr(0.2), C64::new(1.0, -0.1)],
        );
        let phi = make_model_quadratic(&[0.1, 0.2], &l, &jt).unwrap();
        let k = kahler_triple(&phi.jet_at(&[0.0, 0.0], 2).unwrap()).unwrap();
        assert!(fro(&(&k.l - &l)) < 1e-12);
        assert!(fro(&(&k.jt - &jt)) < 1e-12);
    }

    #[test]
    fn fs_matches_bargmann_at_origin() {
        let j1 = make_fubini_study(None).jet_at(&[0.0, 0.0], 2).unwrap();
        let j2 = make_bargmann(1).jet_at(&[0.0, 0.0], 2).unwrap();
        assert!(j1.poly.distance(&j2.poly) < 1e-14);
    }

    #[test]
    fn flipped_phase_fails_upstream() {
        let jet = make_bargmann(1).jet_at(&[0.0, 0.0], 2).unwrap();
        let neg = DiagonalJet::new(jet.basepoint.clone(), 2, jet.poly.scale(cr(-1.0))).unwrap();
        assert!(kahler_triple(&neg).is_err());
        assert!(!check_projector_jet(&neg, 1e-8).passed());
    }
}
