use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::grid::{Grid, GridFunction};
use crate::error::{Error, Result};
use crate::gauss::{FbiPair, GaussianForm};
use crate::linalg::{cr, CVec, RMat};
use crate::phase::spec::{poly_to_terms, terms_to_poly, TermSpec};
use crate::poly::Poly;
use crate::report::Report;

/// e^{iS(x)/h}σ(x) with real point x(S).
#[derive(Clone, Debug, PartialEq)]
pub struct WavePacket {
    pub s: Poly,
    pub x0: Vec<f64>,
    pub sigma: Poly,
    pub h: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Base,
    /// Packets on T*R^n in (α_x, α_ξ) coordinates.
    Total,
}

/// Packet JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    #[serde(rename = "S")]
    pub s: Vec<TermSpec>,
    pub x0: Vec<f64>,
    pub sigma: Vec<TermSpec>,
    pub h: f64,
}

impl PacketSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn to_packet(&self) -> Result<WavePacket> {
        let d = self.x0.len();
        if d == 0 {
            return Err(Error::Spec("field \"x0\" must be non-empty".into()));
        }
        if !(self.h > 0.0) {
            return Err(Error::Spec("field \"h\" must be positive".into()));
        }
        Ok(WavePacket {
            s: terms_to_poly(&self.s, d, "S")?,
            x0: self.x0.clone(),
            sigma: terms_to_poly(&self.sigma, d, "sigma")?,
            h: self.h,
        })
    }

    pub fn from_packet(p: &WavePacket) -> Self {
        PacketSpec {
            s: poly_to_terms(&p.s),
            x0: p.x0.clone(),
            sigma: poly_to_terms(&p.sigma),
            h: p.h,
        }
    }
}

impl WavePacket {
    /// S = ⟨x − x₀, ξ₀⟩ + (i/2)|x − x₀|², σ = 1.
    pub fn coherent(x0: &[f64], xi0: &[f64], h: f64) -> Self {
        let d = x0.len();
        let mut s = Poly::zero(d);
        for k in 0..d {
            let y = Poly::var(d, k).add(&Poly::constant(d, cr(-x0[k])));
            s = s.add(&y.scale(cr(xi0[k]))).add(&y.mul(&y).scale(C64::new(0.0, 0.5)));
        }
        WavePacket {
            s,
            x0: x0.to_vec(),
            sigma: Poly::one(d),
            h,
        }
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        (C64::new(0.0, 1.0) * self.s.eval_real(x) / self.h).exp() * self.sigma.eval_real(x)
    }

    pub fn sample(&self, grid: &Grid) -> Result<GridFunction> {
        if grid.dim() != self.dim() {
            return Err(Error::Dimension("packet and grid dimensions".into()));
        }
        let f = GridFunction::from_fn(grid, |x| self.eval(x));
        f.check_finite()?;
        Ok(f)
    }

    /// dS(x(S)).
    pub fn covector(&self) -> Vec<C64> {
        let x: Vec<C64> = self.x0.iter().map(|&v| cr(v)).collect();
        (0..self.dim()).map(|k| self.s.deriv(k).eval(&x)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.sigma.is_zero()
    }
}

/// Class conditions of a packet on `grid`; `ball` is the codomain ball for
/// dS(x(S)) as (center, radius).
pub fn packet_membership_check(
    f: &WavePacket,
    side: Side,
    grid: &Grid,
    ball: Option<(&[f64], f64)>,
    tol: f64,
) -> Result<Report> {
    let d = f.dim();
    if grid.dim() != d {
        return Err(Error::Dimension("packet and grid dimensions".into()));
    }
    let mut rep = Report::new();
    rep.max("im_s_at_real_point", f.s.eval_real(&f.x0).im.abs(), tol);
    let ds = f.covector();
    let im_ds = ds.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    rep.max("ds_real", im_ds, tol);
    if let Some((center, radius)) = ball {
        let dist = ds
            .iter()
            .zip(center)
            .map(|(z, c)| (z.re - c).powi(2))
            .sum::<f64>()
            .sqrt();
        rep.max("ds_in_ball", (dist - radius).max(0.0), 0.0);
    }
    // best C with Im S ≥ |x − x(S)|²/C on the grid
    let mut c_best = 0.0f64;
    for i in 0..grid.len() {
        let x = grid.point(i);
        let r2: f64 = x.iter().zip(&f.x0).map(|(a, b)| (a - b).powi(2)).sum();
        if r2 < 1e-24 {
            continue;
        }
        let ims = f.s.eval_real(&x).im;
        let c = if ims > 0.0 { r2 / ims } else { f64::INFINITY };
        c_best = c_best.max(c);
    }
    rep.min("positivity_margin", 1.0 / c_best, 0.0);
    if side == Side::Total {
        if d % 2 != 0 {
            return Err(Error::Dimension("total-space packets need even dimension".into()));
        }
        let n = d / 2;
        // ∂_{α_x}S = α_ξ(S), ∂_{α_ξ}S = 0
        let mut r = 0.0f64;
        for k in 0..n {
            r = r.max((ds[k] - cr(f.x0[n + k])).norm()).max(ds[n + k].norm());
        }
        rep.max("real_point_on_sigma", r, tol);
    }
    Ok(rep)
}

/// Best constant C of the positivity bound (1/positivity_margin).
pub fn positivity_constant(rep: &Report) -> f64 {
    1.0 / rep.residual("positivity_margin")
}

/// T f(α) = c_T ∫ e^{iψ(α,x)/h} f(x) dx for a packet with quadratic S,
/// computed exactly, with c_T = 1/(2^{n/2}(πh)^{3n/4}).
pub fn fbi_transform_exact(pair: &FbiPair, f: &WavePacket) -> Result<WavePacket> {
    let n = pair.n;
    if f.dim() != n {
        return Err(Error::Dimension("base packet dimension".into()));
    }
    if f.s.degree() > 2 {
        return Err(Error::Invariant("exact transform needs a quadratic S".into()));
    }
    let h = f.h;
    let mut hess = pair.psi.clone();
    let sh = f.s.hessian_at_zero();
    let sg = f.s.gradient_at_zero();
    let xs: Vec<usize> = (2 * n..3 * n).collect();
    for a in 0..n {
        for b in 0..n {
            hess[(xs[a], xs[b])] += sh[(a, b)];
        }
    }
    let mut lin = CVec::zeros(3 * n);
    for a in 0..n {
        lin[xs[a]] = sg[a];
    }
    let form = GaussianForm {
        hess,
        lin,
        c: f.s.constant_term(),
        amp: f.sigma.embed(3 * n, &xs),
    };
    let r = form.integrate(&xs, h)?;
    let pref = fbi_prefactor(n, h) * (2.0 * std::f64::consts::PI * h).powf(n as f64 / 2.0);
    let m = 2 * n;
    let s = Poly::quadratic_form(&r.hess)
        .add(&Poly::linear(r.lin.as_slice(), r.c));
    // real point: minimum of Im S
    let im_h = RMat::from_fn(m, m, |i, j| r.hess[(i, j)].im);
    let im_l = nalgebra::DVector::from_fn(m, |i, _| r.lin[i].im);
    let x0 = im_h
        .clone()
        .lu()
        .solve(&(-im_l))
        .ok_or_else(|| Error::Singular("Im S of the transformed packet".into()))?;
    Ok(WavePacket {
        s,
        x0: x0.iter().copied().collect(),
        sigma: r.amp.scale(cr(pref)),
        h,
    })
}

/// 1/(2^{n/2}(πh)^{3n/4}).
pub fn fbi_prefactor(n: usize, h: f64) -> f64 {
    let n = n as f64;
    1.0 / (2f64.powf(n / 2.0) * (std::f64::consts::PI * h).powf(0.75 * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::flat_fbi_pair;

    #[test]
    fn coherent_state_constant_is_two() {
        let f = WavePacket::coherent(&[0.1], &[0.3], 0.1);
        let g = Grid::cube(&[0.1], 1.0, 0.05).unwrap();
        let rep = packet_membership_check(&f, Side::Base, &g, Some((&[0.0], 1.0)), 1e-12).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!((positivity_constant(&rep) - 2.0).abs() < 1e-12);
        let bad = packet_membership_check(&f, Side::Base, &g, Some((&[2.0], 1.0)), 1e-12).unwrap();
        assert_eq!(bad.failures(), vec!["ds_in_ball"]);
    }

    #[test]
    fn transformed_packet_sits_on_sigma() {
        let pair = flat_fbi_pair(1).unwrap();
        let f = WavePacket::coherent(&[0.2], &[-0.4], 0.1);
        let t = fbi_transform_exact(&pair, &f).unwrap();
        assert!((t.x0[0] - 0.2).abs() < 1e-12 && (t.x0[1] + 0.4).abs() < 1e-12);
        let g = Grid::cube(&t.x0, 1.0, 0.1).unwrap();
        let rep = packet_membership_check(&t, Side::Total, &g, None, 1e-10).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn spec_round_trip() {
        let f = WavePacket::coherent(&[0.1, 0.2], &[0.0, 1.0], 0.05);
        let s = serde_json::to_string(&PacketSpec::from_packet(&f)).unwrap();
        let back = PacketSpec::from_json(&s).unwrap().to_packet().unwrap();
        assert_eq!(back, f);
    }
}
