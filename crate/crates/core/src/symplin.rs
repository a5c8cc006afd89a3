//! Linear complex symplectic geometry on T*C^m = C^{2m}.
//!
//! Vectors are (x_1..x_m, ξ_1..ξ_m) and ω(u, v) = uᵀΩv with
//! Ω = [[0, −I], [I, 0]] ([`crate::linalg::omega`]), i.e. ω = Σ dξ_j ∧ dx_j.
//! Flat models split x = (x, x′) and ξ = (ξ, ξ′) with x′, ξ′ ∈ C^p.
//!
//! Positivity is the Hermitian form P(v) = i·v̄ᵀΩv, so P(v) > 0 exactly when
//! iω(v, v̄) < 0. For a leaf (u, Au) of a phase, P = 2⟨Im(A)u, ū⟩.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    comega, containment_defect, cr, herm_eigenvalues, intersection, lyapunov_sym, null_space, omega, orth,
    rank, re_part, singular_values, spd_sqrt, subspace_distance, to_complex, CMat, RMat, I,
};
use crate::report::Report;

pub const DEFAULT_TOL: f64 = 1e-9;
const RANK_RTOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSubspace {
    /// Orthonormal columns.
    pub basis: CMat,
}

impl LinearSubspace {
    pub fn new(basis: &CMat) -> Result<Self> {
        if basis.nrows() % 2 != 0 {
            return Err(Error::Dimension("ambient dimension must be even".into()));
        }
        let s = singular_values(basis);
        let mx = s.iter().copied().fold(0.0, f64::max);
        let mn = s.iter().copied().fold(f64::INFINITY, f64::min);
        if basis.ncols() > 0 && !(mn > RANK_RTOL * mx) {
            return Err(Error::Dimension(format!(
                "basis is rank deficient (σ_min/σ_max = {:.3e})",
                mn / mx
            )));
        }
        Ok(LinearSubspace::span(basis))
    }

    /// Column span, dropping dependent columns.
    pub fn span(m: &CMat) -> Self {
        LinearSubspace { basis: orth(m, RANK_RTOL) }
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn half(&self) -> usize {
        self.ambient() / 2
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn conj(&self) -> Self {
        LinearSubspace { basis: self.basis.conjugate() }
    }

    /// Sine of the largest principal angle.
    pub fn distance(&self, o: &LinearSubspace) -> f64 {
        subspace_distance(&self.basis, &o.basis)
    }

    /// Zero iff `o` ⊂ self.
    pub fn containment_defect(&self, o: &LinearSubspace) -> f64 {
        containment_defect(&self.basis, &o.basis)
    }

    pub fn intersect(&self, o: &LinearSubspace) -> Self {
        LinearSubspace { basis: intersection(&self.basis, &o.basis, 1e-8) }
    }

    pub fn image(&self, m: &CMat) -> Self {
        LinearSubspace::span(&(m * &self.basis))
    }

    pub fn to_spec(&self) -> SubspaceSpec {
        SubspaceSpec {
            ambient: self.ambient(),
            basis: (0..self.dim())
                .map(|k| self.basis.column(k).iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    pub fn from_spec(s: &SubspaceSpec) -> Result<Self> {
        let k = s.basis.len();
        if s.basis.iter().any(|c| c.len() != s.ambient) {
            return Err(Error::Spec("basis: every column must have length `ambient`".into()));
        }
        let m = CMat::from_fn(s.ambient, k, |r, c| C64::new(s.basis[c][r][0], s.basis[c][r][1]));
        LinearSubspace::new(&m)
    }
}

/// Subspace JSON: ambient dimension and basis columns as [re, im] arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceSpec {
    pub ambient: usize,
    pub basis: Vec<Vec<[f64; 2]>>,
}

fn perp_with(basis: &CMat, form: &CMat) -> CMat {
    null_space(&(basis.transpose() * form), RANK_RTOL)
}

pub fn symplectic_orthogonal(v: &LinearSubspace) -> LinearSubspace {
    LinearSubspace {
        basis: perp_with(&v.basis, &comega(v.half())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verdict {
    pub holds: bool,
    pub defect: f64,
}

/// V^⊥ ⊂ V.
pub fn is_involutive(v: &LinearSubspace, tol: f64) -> Verdict {
    let d = v.containment_defect(&symplectic_orthogonal(v));
    Verdict { holds: d <= tol, defect: d }
}

pub fn is_lagrangian(v: &LinearSubspace, tol: f64) -> Verdict {
    let inv = is_involutive(v, tol);
    let d = if v.dim() == v.half() { inv.defect } else { 1.0 };
    Verdict { holds: d <= tol, defect: d }
}

/// Subspace of C^{2m₁} × C^{2m₂}, points written (left; right), with the
/// twisted form ω ⊖ ω′.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRelation {
    pub left: usize,
    pub right: usize,
    pub space: LinearSubspace,
}

impl LinearRelation {
    pub fn new(left: usize, right: usize, basis: &CMat) -> Result<Self> {
        if basis.nrows() != left + right || left % 2 != 0 || right % 2 != 0 {
            return Err(Error::Dimension("relation basis rows must be left + right".into()));
        }
        Ok(LinearRelation {
            left,
            right,
            space: LinearSubspace::new(basis)?,
        })
    }

    fn from_span(left: usize, right: usize, basis: &CMat) -> Self {
        LinearRelation {
            left,
            right,
            space: LinearSubspace::span(basis),
        }
    }

    /// {(Tv, v)}.
    pub fn graph(t: &CMat) -> Self {
        let (l, r) = t.shape();
        let mut b = CMat::zeros(l + r, r);
        b.view_mut((0, 0), (l, r)).copy_from(t);
        b.view_mut((l, 0), (r, r)).copy_from(&CMat::identity(r, r));
        LinearRelation::from_span(l, r, &b)
    }

    pub fn identity(m: usize) -> Self {
        LinearRelation::graph(&CMat::identity(2 * m, 2 * m))
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn twisted_form(&self) -> CMat {
        let mut w = CMat::zeros(self.left + self.right, self.left + self.right);
        w.view_mut((0, 0), (self.left, self.left)).copy_from(&comega(self.left / 2));
        w.view_mut((self.left, self.left), (self.right, self.right))
            .copy_from(&(-comega(self.right / 2)));
        w
    }

    pub fn is_lagrangian(&self, tol: f64) -> Verdict {
        let perp = perp_with(&self.space.basis, &self.twisted_form());
        let d = if 2 * self.dim() == self.left + self.right {
            containment_defect(&self.space.basis, &perp)
        } else {
            1.0
        };
        Verdict { holds: d <= tol, defect: d }
    }

    pub fn distance(&self, o: &LinearRelation) -> f64 {
        if self.left != o.left || self.right != o.right {
            return 1.0;
        }
        self.space.distance(&o.space)
    }
}

pub fn relation_compose(l1: &LinearRelation, l2: &LinearRelation) -> Result<LinearRelation> {
    if l1.right != l2.left {
        return Err(Error::Dimension(format!(
            "middle dimensions differ ({} vs {})",
            l1.right, l2.left
        )));
    }
    let (a, b) = (&l1.space.basis, &l2.space.basis);
    let x1 = a.rows(0, l1.left);
    let y1 = a.rows(l1.left, l1.right);
    let y2 = b.rows(0, l2.left);
    let z2 = b.rows(l2.left, l2.right);
    let mut st = CMat::zeros(l1.right, a.ncols() + b.ncols());
    st.view_mut((0, 0), y1.shape()).copy_from(&y1);
    st.view_mut((0, a.ncols()), y2.shape()).copy_from(&(-y2));
    let ns = null_space(&st, 1e-10);
    let c1 = ns.rows(0, a.ncols());
    let c2 = ns.rows(a.ncols(), b.ncols());
    let mut out = CMat::zeros(l1.left + l2.right, ns.ncols());
    out.view_mut((0, 0), (l1.left, ns.ncols())).copy_from(&(x1 * c1));
    out.view_mut((l1.left, 0), (l2.right, ns.ncols())).copy_from(&(z2 * c2));
    Ok(LinearRelation::from_span(l1.left, l2.right, &out))
}

/// Λ* = {(β̄, ᾱ) : (α, β) ∈ Λ}.
pub fn relation_adjoint(l: &LinearRelation) -> LinearRelation {
    let b = &l.space.basis;
    let mut out = CMat::zeros(b.nrows(), b.ncols());
    out.view_mut((0, 0), (l.right, b.ncols()))
        .copy_from(&b.rows(l.left, l.right).conjugate());
    out.view_mut((l.right, 0), (l.left, b.ncols()))
        .copy_from(&b.rows(0, l.left).conjugate());
    LinearRelation::from_span(l.right, l.left, &out)
}

/// Σ = J ∩ J* with the dimension and nondegeneracy checks; returns (Σ, p).
fn transverse_pair(j: &LinearSubspace, js: &LinearSubspace) -> Result<(LinearSubspace, usize)> {
    let m2 = j.ambient();
    if js.ambient() != m2 {
        return Err(Error::Dimension("J and J* live in different spaces".into()));
    }
    let p = m2 - j.dim();
    if m2 - js.dim() != p {
        return Err(Error::Dimension("J and J* have different codimension".into()));
    }
    let sigma = j.intersect(js);
    if sigma.dim() != m2 - 2 * p {
        return Err(Error::Dimension(format!(
            "J ∩ J* has dimension {} (expected {})",
            sigma.dim(),
            m2 - 2 * p
        )));
    }
    let w = sigma.basis.transpose() * comega(m2 / 2) * &sigma.basis;
    if rank(&w, 1e-8) != sigma.dim() {
        return Err(Error::Invariant("J ∩ J* is not symplectic".into()));
    }
    Ok((sigma, p))
}

/// Λ(J, J*) = Δ_Σ ⊕ (F × 0) ⊕ (0 × F*), F = J^⊥, F* = J*^⊥.
pub fn lambda_from_pair(j: &LinearSubspace, js: &LinearSubspace) -> Result<LinearRelation> {
    let (sigma, _) = transverse_pair(j, js)?;
    let f = symplectic_orthogonal(j);
    let fs = symplectic_orthogonal(js);
    let m2 = j.ambient();
    let k = sigma.dim() + f.dim() + fs.dim();
    let mut b = CMat::zeros(2 * m2, k);
    let s = sigma.dim();
    b.view_mut((0, 0), (m2, s)).copy_from(&sigma.basis);
    b.view_mut((m2, 0), (m2, s)).copy_from(&sigma.basis);
    b.view_mut((0, s), (m2, f.dim())).copy_from(&f.basis);
    b.view_mut((m2, s + f.dim()), (m2, fs.dim())).copy_from(&fs.basis);
    LinearRelation::new(m2, m2, &b)
}

/// Flat models (J_p, J*_p, Σ_p) = ({ξ′ = 0}, {x′ = 0}, {x′ = ξ′ = 0}).
pub fn flat_triple(m: usize, p: usize) -> (LinearSubspace, LinearSubspace, LinearSubspace) {
    let pick = |skip: &dyn Fn(usize) -> bool| {
        let cols: Vec<usize> = (0..2 * m).filter(|&i| !skip(i)).collect();
        let b = CMat::from_fn(2 * m, cols.len(), |r, c| cr((r == cols[c]) as u8 as f64));
        LinearSubspace::span(&b)
    };
    let is_xp = |i: usize| (m - p..m).contains(&i);
    let is_xip = |i: usize| i >= 2 * m - p;
    (
        pick(&|i| is_xip(i)),
        pick(&|i| is_xp(i)),
        pick(&|i| is_xp(i) || is_xip(i)),
    )
}

/// Symplectic Gram–Schmidt over candidates, selecting x in order and the
/// partner ξ with the largest pairing; ω(x_k, ξ_k) = −1.
fn darboux_pairs(cands: &[DVector<C64>], om: &CMat, pairs: usize) -> Result<(Vec<DVector<C64>>, Vec<DVector<C64>>)> {
    let w = |u: &DVector<C64>, v: &DVector<C64>| (u.transpose() * om * v)[(0, 0)];
    let scale = cands.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut xs: Vec<DVector<C64>> = Vec::new();
    let mut xis: Vec<DVector<C64>> = Vec::new();
    let project = |v: &DVector<C64>, xs: &[DVector<C64>], xis: &[DVector<C64>]| {
        let mut p = v.clone();
        for (x, xi) in xs.iter().zip(xis) {
            let a = w(v, xi);
            let b = -w(v, x);
            p += x * a + xi * b;
        }
        p
    };
    let mut used = vec![false; cands.len()];
    for _ in 0..pairs {
        let mut chosen = None;
        for (i, c) in cands.iter().enumerate() {
            if used[i] {
                continue;
            }
            let p = project(c, &xs, &xis);
            if p.norm() > 1e-8 * scale {
                chosen = Some((i, p));
                break;
            }
        }
        let (i, x) = chosen.ok_or_else(|| Error::Singular("no Darboux candidate left".into()))?;
        used[i] = true;
        let mut best: Option<(usize, DVector<C64>, C64)> = None;
        for (i, c) in cands.iter().enumerate() {
            if used[i] {
                continue;
            }
            let p = project(c, &xs, &xis);
            let s = w(&x, &p);
            if best.as_ref().map_or(true, |b| s.norm() > b.2.norm() * (1.0 + 1e-12) + 1e-14) {
                best = Some((i, p, s));
            }
        }
        let (i, v, s) = best.ok_or_else(|| Error::Singular("degenerate symplectic form".into()))?;
        if s.norm() < 1e-10 * scale * scale {
            return Err(Error::Singular("degenerate symplectic form".into()));
        }
        used[i] = true;
        xis.push(v * (-cr(1.0) / s));
        xs.push(x);
    }
    Ok((xs, xis))
}

/// Darboux basis of a symplectic subspace from the projections of the
/// standard basis, so flat inputs give standard vectors.
fn subspace_darboux(s: &LinearSubspace, real: bool) -> Result<(Vec<DVector<C64>>, Vec<DVector<C64>>)> {
    let n2 = s.ambient();
    let proj = &s.basis * s.basis.adjoint();
    let cands: Vec<DVector<C64>> = (0..n2)
        .map(|i| {
            let c = proj.column(i).into_owned();
            if real {
                c.map(|z| cr(z.re))
            } else {
                c
            }
        })
        .collect();
    darboux_pairs(&cands, &comega(n2 / 2), s.dim() / 2)
}

/// Greedy basis of `s` from projections of standard vectors.
fn canonical_basis(s: &LinearSubspace) -> CMat {
    let proj = &s.basis * s.basis.adjoint();
    let mut cols: Vec<DVector<C64>> = Vec::new();
    for i in 0..s.ambient() {
        let c = proj.column(i).into_owned();
        let mut st = CMat::zeros(s.ambient(), cols.len() + 1);
        for (k, v) in cols.iter().enumerate() {
            st.set_column(k, v);
        }
        st.set_column(cols.len(), &c);
        if c.norm() > 1e-8 && rank(&st, 1e-8) == cols.len() + 1 {
            cols.push(c);
        }
        if cols.len() == s.dim() {
            break;
        }
    }
    let mut out = CMat::zeros(s.ambient(), cols.len());
    for (k, v) in cols.iter().enumerate() {
        out.set_column(k, v);
    }
    out
}

fn assemble(m: usize, p: usize, sx: &[DVector<C64>], sxi: &[DVector<C64>], c: &CMat, d: &CMat) -> CMat {
    let mut n = CMat::zeros(2 * m, 2 * m);
    for k in 0..m - p {
        n.set_column(k, &sx[k]);
        n.set_column(m + k, &sxi[k]);
    }
    for k in 0..p {
        n.set_column(m - p + k, &c.column(k));
        n.set_column(2 * m - p + k, &d.column(k));
    }
    n
}

fn symplectic_defect(mm: &CMat) -> f64 {
    let om = comega(mm.nrows() / 2);
    crate::linalg::fro(&(mm.transpose() * &om * mm - &om))
}

#[derive(Clone, Debug)]
pub struct PairFrame {
    /// Symplectic M with M(J) = J_p, M(J*) = J*_p, M(Σ) = Σ_p.
    pub m: CMat,
    pub p: usize,
    pub checks: Report,
}

pub fn flatten_pair(j: &LinearSubspace, js: &LinearSubspace, sigma: Option<&LinearSubspace>) -> Result<PairFrame> {
    let (sig, p) = transverse_pair(j, js)?;
    if let Some(s) = sigma {
        let d = s.distance(&sig);
        if d > 1e-8 {
            return Err(Error::Invariant(format!("Σ differs from J ∩ J* (distance {d:.3e})")));
        }
    }
    let m = j.half();
    let real = sig.containment_defect(&sig.conj()) < 1e-10;
    let (sx, sxi) = subspace_darboux(&sig, real)?;
    let f = symplectic_orthogonal(j);
    let fs = symplectic_orthogonal(js);
    let c = canonical_basis(&f);
    // d = F*·G with ω(c_i, d_j) = −δ_ij
    let fsb = canonical_basis(&fs);
    let pairing = c.transpose() * comega(m) * &fsb;
    let g = pairing
        .try_inverse()
        .ok_or_else(|| Error::Invariant("F and F* are not in duality".into()))?;
    let d = &fsb * (-g);
    let n = assemble(m, p, &sx, &sxi, &c, &d);
    let mi = n
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("flattening frame".into()))?;
    let (fj, fjs, fsig) = flat_triple(m, p);
    let mut checks = Report::new();
    checks
        .max("symplectic", symplectic_defect(&mi), 1e-10)
        .max("image_j", j.image(&mi).distance(&fj), 1e-9)
        .max("image_j_star", js.image(&mi).distance(&fjs), 1e-9)
        .max("image_sigma", sig.image(&mi).distance(&fsig), 1e-9);
    if real {
        // real points of Σ go to real points
        let im: f64 = sx
            .iter()
            .chain(&sxi)
            .map(|v| (&mi * v).iter().map(|z| z.im.abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        checks.max("sigma_real", im, 1e-10);
    }
    Ok(PairFrame { m: mi, p, checks })
}

#[derive(Clone, Debug)]
pub struct NormalForm {
    /// Real symplectic M with M(J) = {(x, x′, ξ, ix′)}.
    pub m: RMat,
    pub p: usize,
    /// ‖F₁ − iI‖ after the flow, before the closing correction.
    pub flow_defect: f64,
    pub checks: Report,
}

/// {(x, x′, ξ, ix′)}.
pub fn positive_model(m: usize, p: usize) -> LinearSubspace {
    let mut b = CMat::zeros(2 * m, 2 * m - p);
    for k in 0..m {
        b[(k, k)] = cr(1.0);
    }
    for k in 0..m - p {
        b[(m + k, m + k)] = cr(1.0);
    }
    for k in 0..p {
        b[(2 * m - p + k, m - p + k)] = I;
    }
    LinearSubspace::span(&b)
}

fn cayley(a: &RMat) -> RMat {
    let n = a.nrows();
    let e = RMat::identity(n, n);
    let lhs = &e - a * 0.5;
    lhs.try_inverse().expect("Cayley transform of a small step") * (&e + a * 0.5)
}

pub const FLOW_STEPS: usize = 200;

/// Real symplectic normal form of a strictly positive involutive J ⊃ Σ with
/// Σ conjugation-stable. The graph ξ′ = F x′ of J over Σ^⊥ is moved to
/// ξ′ = ix′ along F_t = (1−t)F + t·iI by the linear Hamiltonian flow with
/// generator [[a, 0], [c, −a]], aG + Ga = −(I − Im F), G = Im F_t,
/// c = −Re F + aRe F_t + Re F_t a. A final shear and rescaling removes the
/// integration error.
pub fn positive_normal_form(j: &LinearSubspace, sigma: &LinearSubspace) -> Result<NormalForm> {
    let m = j.half();
    let p = 2 * m - j.dim();
    if sigma.dim() != 2 * m - 2 * p || j.containment_defect(sigma) > 1e-9 {
        return Err(Error::Dimension("Σ must be a subspace of J of dimension 2m − 2p".into()));
    }
    if sigma.containment_defect(&sigma.conj()) > 1e-9 {
        return Err(Error::Invariant("Σ is not conjugation-stable".into()));
    }
    let (sx, sxi) = subspace_darboux(sigma, true)?;
    let sperp = symplectic_orthogonal(sigma);
    let (px, pxi) = subspace_darboux(&sperp, true)?;
    let c = CMat::from_fn(2 * m, p, |r, k| px[k][r]);
    let d = CMat::from_fn(2 * m, p, |r, k| pxi[k][r]);
    let n0 = re_part(&assemble(m, p, &sx, &sxi, &c, &d));
    let n0inv = n0
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("Darboux frame".into()))?;
    let l = j.intersect(&sperp);
    if l.dim() != p {
        return Err(Error::Dimension(format!("J ∩ Σ^⊥ has dimension {} (expected {p})", l.dim())));
    }
    let coords = to_complex(&n0inv) * &l.basis;
    let xp = coords.rows(m - p, p).into_owned();
    let xip = coords.rows(2 * m - p, p).into_owned();
    let xpinv = xp
        .try_inverse()
        .ok_or_else(|| Error::Invariant("J is not a graph over x′".into()))?;
    let f = &xip * xpinv;
    let mut checks = Report::new();
    checks.max("graph_symmetry", crate::linalg::fro(&(&f - f.transpose())), 1e-9);
    let f = (&f + f.transpose()) * cr(0.5);
    let x0 = re_part(&f);
    let y0 = crate::linalg::im_part(&f);
    let ymin = crate::linalg::sym_eigenvalues(&y0).first().copied().unwrap_or(f64::NAN);
    checks.min("leaf_min_eig", ymin, 0.0);
    if !(ymin > 0.0) {
        return Err(Error::Invariant(format!(
            "J is not strictly positive (smallest eigenvalue of Im F is {ymin:.3e})"
        )));
    }

    let ep = RMat::identity(p, p);
    let q = -(&ep - &y0);
    let mut m2 = RMat::identity(2 * p, 2 * p);
    let dt = 1.0 / FLOW_STEPS as f64;
    for k in 0..FLOW_STEPS {
        let t = (k as f64 + 0.5) * dt;
        let g = &y0 * (1.0 - t) + &ep * t;
        let fr = &x0 * (1.0 - t);
        let a = lyapunov_sym(&g, &q);
        let cc = -&x0 + &a * &fr + &fr * &a;
        let mut kk = RMat::zeros(2 * p, 2 * p);
        kk.view_mut((0, 0), (p, p)).copy_from(&a);
        kk.view_mut((p, 0), (p, p)).copy_from(&cc);
        kk.view_mut((p, p), (p, p)).copy_from(&(-&a));
        m2 = cayley(&(kk * dt)) * m2;
    }
    let image_graph = |mm: &RMat| -> Result<CMat> {
        let mc = to_complex(mm);
        let top = mc.view((0, 0), (p, p)) + mc.view((0, p), (p, p)) * &f;
        let bot = mc.view((p, 0), (p, p)) + mc.view((p, p), (p, p)) * &f;
        let ti = top
            .try_inverse()
            .ok_or_else(|| Error::Singular("graph transport".into()))?;
        Ok(bot * ti)
    };
    let f1 = image_graph(&m2)?;
    let flow_defect = crate::linalg::fro(&(&f1 - CMat::identity(p, p) * I));
    let x1 = re_part(&f1);
    let y1 = crate::linalg::im_part(&f1);
    let y1 = (&y1 + y1.transpose()) * 0.5;
    let s = spd_sqrt(&y1)?;
    let sinv = s.clone().try_inverse().ok_or_else(|| Error::Singular("Im F₁".into()))?;
    let mut shear = RMat::identity(2 * p, 2 * p);
    shear.view_mut((p, 0), (p, p)).copy_from(&(-(&x1 + x1.transpose()) * 0.5));
    let mut scale = RMat::zeros(2 * p, 2 * p);
    scale.view_mut((0, 0), (p, p)).copy_from(&s);
    scale.view_mut((p, p), (p, p)).copy_from(&sinv);
    let m2 = scale * shear * m2;

    let mut e = RMat::identity(2 * m, 2 * m);
    let idx: Vec<usize> = (m - p..m).chain(2 * m - p..2 * m).collect();
    for (a, &ia) in idx.iter().enumerate() {
        for (b, &ib) in idx.iter().enumerate() {
            e[(ia, ib)] = m2[(a, b)];
        }
    }
    let mm = e * n0inv;
    let mc = to_complex(&mm);
    checks
        .max("symplectic", symplectic_defect(&mc), 1e-10)
        .max("image", j.image(&mc).distance(&positive_model(m, p)), 1e-9);
    Ok(NormalForm {
        m: mm,
        p,
        flow_defect,
        checks,
    })
}

fn positivity_form(n2: usize) -> CMat {
    comega(n2 / 2) * I
}

/// Smallest eigenvalue of P on the leaf directions V^⊥.
pub fn leaf_min_eig(v: &LinearSubspace) -> f64 {
    let f = symplectic_orthogonal(v);
    min_eig_on(&f.basis, &positivity_form(v.ambient()))
}

fn min_eig_on(basis: &CMat, form: &CMat) -> f64 {
    if basis.ncols() == 0 {
        return f64::NAN;
    }
    herm_eigenvalues(&(basis.adjoint() * form * basis))
        .first()
        .copied()
        .unwrap_or(f64::NAN)
}

/// Smallest eigenvalue of P on a complement of V ∩ V̄ inside V, with
/// `form` the Hermitian matrix of P.
fn min_eig_mod_real(v: &LinearSubspace, form: &CMat) -> f64 {
    let r = v.intersect(&v.conj());
    let q = &v.basis;
    let comp = if r.dim() == 0 {
        q.clone()
    } else {
        orth(&(q - &r.basis * (r.basis.adjoint() * q)), 1e-8)
    };
    min_eig_on(&comp, form)
}

/// Positivity of a Lagrangian subspace of C^{2m}, modulo its real points.
pub fn lagrangian_min_eig(v: &LinearSubspace) -> f64 {
    min_eig_mod_real(v, &positivity_form(v.ambient()))
}

/// Positivity of a relation for P ⊖ P, modulo its real points.
pub fn relation_min_eig(l: &LinearRelation) -> f64 {
    let mut w = CMat::zeros(l.left + l.right, l.left + l.right);
    w.view_mut((0, 0), (l.left, l.left)).copy_from(&positivity_form(l.left));
    w.view_mut((l.left, l.left), (l.right, l.right))
        .copy_from(&(-positivity_form(l.right)));
    min_eig_mod_real(&l.space, &w)
}

#[derive(Clone, Debug)]
pub struct PairPositivity {
    pub report: Report,
    pub j_positive: bool,
    pub j_star_bar_positive: bool,
    pub lambda_positive: bool,
    /// Some eigenvalue sits at zero within tolerance.
    pub boundary: bool,
}

/// Λ(J, J*) is strictly positive iff J and J̄* are.
pub fn pair_positivity_check(j: &LinearSubspace, js: &LinearSubspace, tol: f64) -> Result<PairPositivity> {
    let lam = lambda_from_pair(j, js)?;
    let ej = leaf_min_eig(j);
    let ejs = leaf_min_eig(&js.conj());
    let el = relation_min_eig(&lam);
    let pos = |v: f64| v > tol;
    let (a, b, c) = (pos(ej), pos(ejs), pos(el));
    let mut report = Report::new();
    report
        .min("j_leaf_min_eig", ej, tol)
        .min("j_star_bar_leaf_min_eig", ejs, tol)
        .min("lambda_min_eig", el, tol)
        .flag("iff_consistent", (a && b) == c);
    let boundary = [ej, ejs, el].iter().any(|v| v.abs() <= tol);
    Ok(PairPositivity {
        report,
        j_positive: a,
        j_star_bar_positive: b,
        lambda_positive: c,
        boundary,
    })
}

/// Λ = J^⊥ ⊕ {Σ_x u + Σ_ξ W u}, a Lagrangian inside J, for W symmetric of
/// size (m − p).
pub fn lagrangian_in_j(j: &LinearSubspace, w: &CMat) -> Result<(LinearSubspace, LinearSubspace)> {
    let m = j.half();
    let p = 2 * m - j.dim();
    let f = symplectic_orthogonal(j);
    let js = j.conj();
    let (sigma, _) = transverse_pair(j, &js)?;
    let (sx, sxi) = subspace_darboux(&sigma, true)?;
    let k = m - p;
    if w.shape() != (k, k) {
        return Err(Error::Dimension(format!("W must be {k}x{k}")));
    }
    let x = CMat::from_fn(2 * m, k, |r, c| sx[c][r]);
    let xi = CMat::from_fn(2 * m, k, |r, c| sxi[c][r]);
    let g = &x + &xi * w;
    let ls = LinearSubspace::span(&g);
    let all = crate::linalg::hstack(&[&f.basis, &g]);
    Ok((LinearSubspace::span(&all), ls))
}

/// Real symplectic matrix of size 2m:
/// diag(A, A⁻ᵀ)·[[I, B], [0, I]]·[[I, 0], [C, I]].
pub fn symplectic_from_blocks(a: &RMat, b: &RMat, c: &RMat) -> Result<RMat> {
    let m = a.nrows();
    let ainv = a
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("A block".into()))?;
    let mut d = RMat::zeros(2 * m, 2 * m);
    d.view_mut((0, 0), (m, m)).copy_from(a);
    d.view_mut((m, m), (m, m)).copy_from(&ainv.transpose());
    let mut u = RMat::identity(2 * m, 2 * m);
    u.view_mut((0, m), (m, m)).copy_from(&((b + b.transpose()) * 0.5));
    let mut l = RMat::identity(2 * m, 2 * m);
    l.view_mut((m, 0), (m, m)).copy_from(&((c + c.transpose()) * 0.5));
    let s = d * u * l;
    let om = omega(m);
    debug_assert!((s.transpose() * &om * &s - &om).norm() < 1e-8 * (1.0 + s.norm().powi(2)));
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tangent_models;
    use crate::phase::make_bargmann;

    fn bargmann_pair(n: usize) -> (LinearSubspace, LinearSubspace, LinearSubspace) {
        let alpha0 = vec![0.0; 2 * n];
        let t = tangent_models(&make_bargmann(n).jet_at(&alpha0, 2).unwrap()).unwrap();
        (
            LinearSubspace::span(&t.j),
            LinearSubspace::span(&t.j_star),
            LinearSubspace::span(&t.sigma),
        )
    }

    #[test]
    fn orthogonal_examples() {
        let (j, _, _) = flat_triple(2, 1);
        let perp = symplectic_orthogonal(&j);
        assert_eq!(perp.dim(), 1);
        assert!(j.containment_defect(&perp) < 1e-14);
        let lag = LinearSubspace::span(&CMat::identity(4, 2));
        assert!(symplectic_orthogonal(&lag).distance(&lag) < 1e-14);
        let full = LinearSubspace::span(&CMat::identity(4, 4));
        assert_eq!(symplectic_orthogonal(&full).dim(), 0);
        // {x₁ = ξ₁ = 0}
        let b = CMat::from_fn(4, 2, |r, c| cr(((r, c) == (1, 0) || (r, c) == (3, 1)) as u8 as f64));
        assert!(!is_involutive(&LinearSubspace::span(&b), 1e-10).holds);
    }

    #[test]
    fn bargmann_j_is_involutive() {
        let (j, js, _) = bargmann_pair(1);
        assert!(is_involutive(&j, 1e-10).holds);
        assert!(is_involutive(&js, 1e-10).holds);
    }

    #[test]
    fn lambda_is_reproducing_and_self_adjoint() {
        let (j, js, _) = bargmann_pair(1);
        let lam = lambda_from_pair(&j, &js).unwrap();
        assert!(lam.is_lagrangian(1e-10).holds);
        let sq = relation_compose(&lam, &lam).unwrap();
        assert!(sq.distance(&lam) < 1e-10);
        assert!(relation_adjoint(&lam).distance(&lam) < 1e-10);
        let id = LinearRelation::identity(2);
        assert!(relation_compose(&id, &lam).unwrap().distance(&lam) < 1e-12);
    }

    #[test]
    fn flat_triple_flattens_to_identity() {
        let (j, js, s) = flat_triple(3, 1);
        let fr = flatten_pair(&j, &js, Some(&s)).unwrap();
        assert!(crate::linalg::fro(&(&fr.m - CMat::identity(6, 6))) < 1e-12);
    }

    #[test]
    fn bargmann_flattens() {
        let (j, js, s) = bargmann_pair(1);
        let fr = flatten_pair(&j, &js, Some(&s)).unwrap();
        assert!(fr.checks.passed(), "{:?}", fr.checks);
    }

    #[test]
    fn rescaled_graph_normal_form() {
        // ξ′ = 2ix′ with m = 1, p = 1
        let b = CMat::from_column_slice(2, 1, &[cr(1.0), C64::new(0.0, 2.0)]);
        let j = LinearSubspace::span(&b);
        let sigma = LinearSubspace::span(&CMat::zeros(2, 0));
        let nf = positive_normal_form(&j, &sigma).unwrap();
        let want = RMat::from_row_slice(2, 2, &[2f64.sqrt(), 0.0, 0.0, 1.0 / 2f64.sqrt()]);
        assert!((&nf.m - want).norm() < 1e-12, "{}", nf.m);
        let model = positive_model(2, 1);
        let id = positive_normal_form(&model, &flat_triple(2, 1).2).unwrap();
        assert!((&id.m - RMat::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn bargmann_positivity() {
        let (j, js, s) = bargmann_pair(1);
        let nf = positive_normal_form(&j, &s).unwrap();
        assert!(nf.checks.passed(), "{:?}", nf.checks);
        let r = pair_positivity_check(&j, &js, 1e-10).unwrap();
        assert!(r.j_positive && r.j_star_bar_positive && r.lambda_positive);
        let flipped = pair_positivity_check(&j.conj(), &js.conj(), 1e-10).unwrap();
        assert!(!flipped.j_positive && !flipped.lambda_positive);
        assert!(flipped.report.get("iff_consistent").unwrap().pass);
        let (fj, fjs, _) = flat_triple(2, 1);
        let flat = pair_positivity_check(&fj, &fjs, 1e-10).unwrap();
        assert!(flat.boundary && !flat.lambda_positive);
    }
}
