//! Grid quadrature of kernel operators on wave packets.
//!
//! Kernels act by (2πh)^{−d/2} Σ_β e^{iφ(α,β)/h} a(α,β) f(β) w over a ball
//! of radius factor·(h ln(1/ε))^{1/2} around each output point. Output
//! points run in parallel; every inner sum runs in lattice order, so results
//! do not depend on the schedule.

mod grid;
mod packet;

pub use grid::{Grid, GridFunction, GridSidecar};
pub use packet::{
    fbi_prefactor, fbi_transform_exact, packet_membership_check, positivity_constant, PacketSpec, Side,
    WavePacket,
};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{geometric_c0, order_one_amplitude, FbiPair, GaussianKernel, TwoPointQuadratic};
use crate::linalg::cr;
use crate::phase::{Backend, PhaseFunction};
use crate::poly::Poly;

/// Default window radius factor.
pub const DEFAULT_WINDOW: f64 = 3.0;

/// Defects below this are treated as quadrature floor by [`fit_decay`].
pub const FLOOR: f64 = 1e-6;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug)]
pub enum Amplitude {
    Constant(C64),
    /// (c₀(α)c₀(β))^{1/2} + h·correction with c₀ from the phase's 2-jets.
    Geometric { correction: C64 },
    /// Polynomial in (α, β).
    Poly(Poly),
}

#[derive(Clone, Debug)]
pub enum KernelRecord {
    Gaussian(GaussianKernel),
    Phase {
        phase: PhaseFunction,
        amplitude: Amplitude,
        h: f64,
    },
    /// f(x, x′) ↦ f(0, x′), x ∈ R^n.
    Standard { n: usize },
}

impl KernelRecord {
    pub fn h(&self) -> Option<f64> {
        match self {
            KernelRecord::Gaussian(k) => Some(k.h),
            KernelRecord::Phase { h, .. } => Some(*h),
            KernelRecord::Standard { .. } => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            KernelRecord::Gaussian(k) => k.dim(),
            KernelRecord::Phase { phase, .. } => phase.dim,
            KernelRecord::Standard { n } => 2 * n,
        }
    }

    /// Same kernel with the amplitude multiplied by `s`.
    pub fn scaled(&self, s: C64) -> Result<KernelRecord> {
        Ok(match self {
            KernelRecord::Gaussian(k) => KernelRecord::Gaussian(k.scale(s)),
            KernelRecord::Phase { phase, amplitude, h } => {
                let amplitude = match amplitude {
                    Amplitude::Constant(c) => Amplitude::Constant(c * s),
                    Amplitude::Poly(p) => Amplitude::Poly(p.scale(s)),
                    Amplitude::Geometric { .. } => {
                        return Err(Error::Invariant("geometric amplitudes cannot be rescaled".into()))
                    }
                };
                KernelRecord::Phase {
                    phase: phase.clone(),
                    amplitude,
                    h: *h,
                }
            }
            KernelRecord::Standard { .. } => return Err(Error::Invariant("the standard projector has no amplitude".into())),
        })
    }
}

/// Result of one quadrature application.
#[derive(Clone, Debug)]
pub struct Applied {
    pub out: GridFunction,
    pub window_radius: f64,
    /// Output points whose window leaves the box.
    pub clipped: usize,
    /// max |f| on the box boundary relative to max |f|.
    pub boundary_mass: f64,
    /// Pairs skipped by the logarithm branch guard.
    pub masked_pairs: usize,
    /// Bound on the skipped contributions, relative to max |out|.
    pub masked_bound: f64,
}

pub fn window_radius(h: f64, factor: f64) -> f64 {
    factor * (h * (1.0 / f64::EPSILON).ln()).sqrt()
}

/// Apply K to f by trapezoid quadrature over a truncated window.
pub fn apply_kernel_quadrature(k: &KernelRecord, f: &GridFunction, window_factor: f64) -> Result<Applied> {
    let grid = &f.grid;
    if grid.dim() != k.dim() {
        return Err(Error::Dimension(format!(
            "kernel acts on R^{}, grid is {}-dimensional",
            k.dim(),
            grid.dim()
        )));
    }
    if !(window_factor > 0.0) {
        return Err(Error::Invariant("window factor must be positive".into()));
    }
    f.check_finite()?;
    let fmax = f.max_abs();
    let boundary = (0..grid.len())
        .filter(|&i| grid.on_boundary(i))
        .map(|i| f.values[i].norm())
        .fold(0.0, f64::max);
    let boundary_mass = if fmax > 0.0 { boundary / fmax } else { 0.0 };

    if let KernelRecord::Standard { n } = k {
        return apply_standard(*n, f, boundary_mass);
    }
    let h = k.h().expect("kernel with h");
    let r = window_radius(h, window_factor);
    let pts: Vec<Vec<f64>> = grid.points();
    let cpts: Vec<Vec<C64>> = pts.iter().map(|p| p.iter().map(|&v| cr(v)).collect()).collect();
    let d = grid.dim();
    let pref = (2.0 * std::f64::consts::PI * h).powf(-(d as f64) / 2.0);
    let w = grid.weight();

    let prep = Prepared::new(k, &pts, &cpts)?;

    let half: Vec<usize> = grid.spacing.iter().map(|s| (r / s).floor() as usize).collect();
    let lo_box = grid.lo.clone();
    let hi_box = grid.hi();
    let clipped = pts
        .iter()
        .filter(|p| (0..d).any(|j| p[j] - r < lo_box[j] - 1e-12 || p[j] + r > hi_box[j] + 1e-12))
        .count();

    let rows: Vec<(C64, usize, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let idx = grid.multi_index(i);
            let lo: Vec<usize> = (0..d).map(|j| idx[j].saturating_sub(half[j])).collect();
            let hi: Vec<usize> = (0..d).map(|j| (idx[j] + half[j]).min(grid.counts[j] - 1)).collect();
            let mut acc = C64::new(0.0, 0.0);
            let mut masked = 0usize;
            let mut bound = 0.0f64;
            let mut cur = lo.clone();
            'scan: loop {
                let jf = grid.flat_index(&cur);
                let fj = f.values[jf];
                let dist2: f64 = (0..d).map(|t| (pts[i][t] - pts[jf][t]).powi(2)).sum();
                if dist2 <= r * r && fj != C64::new(0.0, 0.0) {
                    match prep.value(k, &cpts, &pts, i, jf, h) {
                        Ok(kv) => acc += kv * fj,
                        Err(Masked(b)) => {
                            masked += 1;
                            bound += b * fj.norm();
                        }
                    }
                }
                // odometer over the index box, last coordinate fastest
                let mut t = d;
                loop {
                    if t == 0 {
                        break 'scan;
                    }
                    t -= 1;
                    if cur[t] < hi[t] {
                        cur[t] += 1;
                        break;
                    }
                    cur[t] = lo[t];
                }
            }
            (acc * pref * w, masked, bound * pref * w)
        })
        .collect();

    let out = GridFunction {
        grid: grid.clone(),
        values: rows.iter().map(|r| r.0).collect(),
    };
    out.check_finite()?;
    let masked_pairs = rows.iter().map(|r| r.1).sum();
    let omax = out.max_abs();
    let mb = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(Applied {
        out,
        window_radius: r,
        clipped,
        boundary_mass,
        masked_pairs,
        masked_bound: if omax > 0.0 { mb / omax } else { mb },
    })
}

struct Masked(f64);

enum AmpEval {
    Const(C64),
    Poly(Poly),
    /// √c₀ per grid point and the order-one correction.
    Geometric(Vec<C64>, C64),
}

/// Kernel data precomputed per grid point. Quadratic phases split as
/// φ(α_i, β_j) = p_i + q_j + α_i·(Bβ_j).
struct Prepared {
    split: Option<(Vec<C64>, Vec<C64>, Vec<Vec<C64>>)>,
    amp: AmpEval,
}

impl Prepared {
    fn new(k: &KernelRecord, pts: &[Vec<f64>], cpts: &[Vec<C64>]) -> Result<Self> {
        let split_of = |q: &TwoPointQuadratic| {
            let d = q.dim();
            let quad = |m: &crate::linalg::CMat, l: &crate::linalg::CVec, x: &[C64]| {
                let mut s = C64::new(0.0, 0.0);
                for r in 0..d {
                    s += l[r] * x[r];
                    for c in 0..d {
                        s += 0.5 * x[r] * m[(r, c)] * x[c];
                    }
                }
                s
            };
            let p: Vec<C64> = cpts.iter().map(|x| quad(&q.a, &q.la, x) + q.c0).collect();
            let qv: Vec<C64> = cpts.iter().map(|x| quad(&q.c, &q.lb, x)).collect();
            let bb: Vec<Vec<C64>> = cpts
                .iter()
                .map(|y| (0..d).map(|r| (0..d).map(|c| q.b[(r, c)] * y[c]).sum()).collect())
                .collect();
            (p, qv, bb)
        };
        let amp_of = |p: &Poly| {
            if p.degree() == 0 {
                AmpEval::Const(p.constant_term())
            } else {
                AmpEval::Poly(p.clone())
            }
        };
        Ok(match k {
            KernelRecord::Gaussian(g) => Prepared {
                split: Some(split_of(&g.phase)),
                amp: amp_of(&g.amplitude),
            },
            KernelRecord::Phase { phase, amplitude, .. } => {
                let split = match phase.backend {
                    Backend::Quadratic(_) | Backend::Polynomial(_) => {
                        TwoPointQuadratic::from_phase(phase).ok().map(|q| split_of(&q))
                    }
                    _ => None,
                };
                let amp = match amplitude {
                    Amplitude::Constant(c) => AmpEval::Const(*c),
                    Amplitude::Poly(p) => amp_of(p),
                    Amplitude::Geometric { correction } => AmpEval::Geometric(
                        pts.par_iter()
                            .map(|p| geometric_c0(phase, p).map(|c| c.sqrt()))
                            .collect::<Result<Vec<_>>>()?,
                        *correction,
                    ),
                };
                Prepared { split, amp }
            }
            KernelRecord::Standard { .. } => unreachable!("handled separately"),
        })
    }

    fn value(
        &self,
        k: &KernelRecord,
        cpts: &[Vec<C64>],
        pts: &[Vec<f64>],
        i: usize,
        j: usize,
        h: f64,
    ) -> std::result::Result<C64, Masked> {
        let amp = match &self.amp {
            AmpEval::Const(c) => *c,
            AmpEval::Poly(p) => {
                let x: Vec<C64> = cpts[i].iter().chain(&cpts[j]).copied().collect();
                p.eval(&x)
            }
            AmpEval::Geometric(c, corr) => c[i] * c[j] + corr * h,
        };
        if let Some((p, q, bb)) = &self.split {
            let cross: C64 = cpts[i].iter().zip(&bb[j]).map(|(a, b)| a * b).sum();
            return Ok((I * (p[i] + q[j] + cross) / h).exp() * amp);
        }
        let KernelRecord::Phase { phase, .. } = k else {
            unreachable!("Gaussian kernels are always split")
        };
        match phase.value_unchecked(&cpts[i], &cpts[j]) {
            Ok(v) => Ok((I * v / h).exp() * amp),
            Err(_) => {
                let im = phase.imag_real(&pts[i], &pts[j]).unwrap_or(0.0);
                Err(Masked((-im / h).exp() * amp.norm()))
            }
        }
    }
}

fn apply_standard(n: usize, f: &GridFunction, boundary_mass: f64) -> Result<Applied> {
    let grid = &f.grid;
    let mut zero = vec![0usize; n];
    for (k, z) in zero.iter_mut().enumerate() {
        let pos = -grid.lo[k] / grid.spacing[k];
        let j = pos.round();
        if (pos - j).abs() > 1e-9 || j < 0.0 || j as usize >= grid.counts[k] {
            return Err(Error::Invariant(format!("grid has no node at x_{} = 0", k + 1)));
        }
        *z = j as usize;
    }
    let values = (0..grid.len())
        .map(|i| {
            let mut idx = grid.multi_index(i);
            idx[..n].copy_from_slice(&zero);
            f.values[grid.flat_index(&idx)]
        })
        .collect();
    Ok(Applied {
        out: GridFunction {
            grid: grid.clone(),
            values,
        },
        window_radius: 0.0,
        clipped: 0,
        boundary_mass,
        masked_pairs: 0,
        masked_bound: 0.0,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Idempotence {
    /// ‖Π²f − Πf‖ / ‖Πf‖.
    pub defect: f64,
    pub norm_pi_f: f64,
    pub window_radius: f64,
    pub clipped: usize,
    pub boundary_mass: f64,
    pub masked_pairs: usize,
    pub masked_bound: f64,
}

pub fn idempotence_residual(k: &KernelRecord, f: &GridFunction, window_factor: f64) -> Result<Idempotence> {
    let a1 = apply_kernel_quadrature(k, f, window_factor)?;
    let a2 = apply_kernel_quadrature(k, &a1.out, window_factor)?;
    Ok(Idempotence {
        defect: a2.out.relative_distance(&a1.out),
        norm_pi_f: a1.out.norm(),
        window_radius: a1.window_radius,
        clipped: a1.clipped,
        boundary_mass: a1.boundary_mass.max(a2.boundary_mass),
        masked_pairs: a1.masked_pairs + a2.masked_pairs,
        masked_bound: a1.masked_bound.max(a2.masked_bound),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Polynomial,
    Exponential,
    Floor,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayFit {
    pub regime: Regime,
    /// Slope of log(defect) against log(h).
    pub loglog_slope: Option<f64>,
    pub loglog_r2: Option<f64>,
    /// c in defect ≈ C e^{−c/h}.
    pub exp_rate: Option<f64>,
    pub exp_r2: Option<f64>,
    pub points_used: usize,
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Fit defects against h; points at or below [`FLOOR`] are dropped.
pub fn fit_decay(hs: &[f64], defects: &[f64]) -> Result<DecayFit> {
    if hs.len() != defects.len() {
        return Err(Error::Dimension("h list and defect list".into()));
    }
    let keep: Vec<(f64, f64)> = hs
        .iter()
        .zip(defects)
        .filter(|(_, &d)| d > FLOOR)
        .map(|(&h, &d)| (h, d))
        .collect();
    if keep.len() < 2 {
        return Ok(DecayFit {
            regime: Regime::Floor,
            loglog_slope: None,
            loglog_r2: None,
            exp_rate: None,
            exp_r2: None,
            points_used: keep.len(),
        });
    }
    let ly: Vec<f64> = keep.iter().map(|p| p.1.ln()).collect();
    let lh: Vec<f64> = keep.iter().map(|p| p.0.ln()).collect();
    let ih: Vec<f64> = keep.iter().map(|p| 1.0 / p.0).collect();
    let (s, r2) = least_squares(&lh, &ly);
    let (e, er2) = least_squares(&ih, &ly);
    let regime = if er2 > r2 && e < 0.0 { Regime::Exponential } else { Regime::Polynomial };
    Ok(DecayFit {
        regime,
        loglog_slope: Some(s),
        loglog_r2: Some(r2),
        exp_rate: Some(-e),
        exp_r2: Some(er2),
        points_used: keep.len(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sweep {
    pub hs: Vec<f64>,
    pub defects: Vec<f64>,
    pub spacings: Vec<f64>,
    pub fit: DecayFit,
}

/// Idempotence defects along a kernel family; `family(h)` supplies the
/// kernel and the sampled packet.
pub fn h_sweep_decay(
    family: impl Fn(f64) -> Result<(KernelRecord, GridFunction)>,
    hs: &[f64],
    window_factor: f64,
) -> Result<Sweep> {
    if hs.len() < 4 {
        return Err(Error::Invariant("an h-sweep needs at least 4 values".into()));
    }
    let mut defects = Vec::new();
    let mut spacings = Vec::new();
    for &h in hs {
        let (k, f) = family(h)?;
        let sp = f.grid.max_spacing();
        if sp > h.sqrt() / 4.0 * (1.0 + 1e-9) {
            return Err(Error::Invariant(format!("spacing {sp:.4} exceeds sqrt(h)/4 at h = {h}")));
        }
        defects.push(idempotence_residual(&k, &f, window_factor)?.defect);
        spacings.push(sp);
    }
    let fit = fit_decay(hs, &defects)?;
    Ok(Sweep {
        hs: hs.to_vec(),
        defects,
        spacings,
        fit,
    })
}

/// Covector −Re ∂_βφ(α₀, α₀) at which packets are matched to the kernel.
pub fn matched_covector(phase: &PhaseFunction, alpha0: &[f64]) -> Result<Vec<f64>> {
    let a: Vec<C64> = alpha0.iter().map(|&v| cr(v)).collect();
    let t = phase.taylor_unchecked(&a, &a, 1)?;
    let g = t.gradient_at_zero();
    Ok((0..phase.dim).map(|k| -g[phase.dim + k].re).collect())
}

/// Family h ↦ (geometric-amplitude kernel, coherent packet at `center`) on
/// the cube of half-width `half` with the given spacing (√h/4 when `None`).
/// With `order_one` the amplitude carries the transport correction
/// a₁(center, center).
pub fn geometric_family(
    phase: &PhaseFunction,
    order_one: bool,
    center: &[f64],
    half: f64,
    spacing: Option<f64>,
) -> Result<impl Fn(f64) -> Result<(KernelRecord, GridFunction)>> {
    let correction = if order_one {
        order_one_amplitude(phase, center)?.a1
    } else {
        C64::new(0.0, 0.0)
    };
    let xi0 = matched_covector(phase, center)?;
    let phase = phase.clone();
    let center = center.to_vec();
    Ok(move |h: f64| {
        let grid = Grid::cube(&center, half, spacing.unwrap_or(h.sqrt() / 4.0))?;
        let f = WavePacket::coherent(&center, &xi0, h).sample(&grid)?;
        let k = KernelRecord::Phase {
            phase: phase.clone(),
            amplitude: Amplitude::Geometric { correction },
            h,
        };
        Ok((k, f))
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FbiComparison {
    pub h: f64,
    /// ‖S T f − σ f‖ / ‖σ f‖ on the base grid.
    pub relative_difference: f64,
    pub norm_st: f64,
    pub norm_op: f64,
    pub sigma: [f64; 2],
    pub base_points: usize,
    pub total_points: usize,
}

/// S₁T₁f by nested quadrature against Op(σ)f = σf. The base grid is the cube
/// of half-width `half` around x(f), the total grid the cube around
/// (x(f), Re dS(x(f))).
pub fn fbi_compose_numeric(pair: &FbiPair, f: &WavePacket, sigma: C64, half: f64) -> Result<FbiComparison> {
    let n = pair.n;
    if f.dim() != n {
        return Err(Error::Dimension("base packet dimension".into()));
    }
    let h = f.h;
    let target = h.sqrt() / 4.0;
    let base = Grid::cube(&f.x0, half, target)?;
    let xi: Vec<f64> = f.covector().iter().map(|z| z.re).collect();
    let center: Vec<f64> = f.x0.iter().chain(&xi).copied().collect();
    let total = Grid::cube(&center, half, target)?;
    let fv = f.sample(&base)?;
    let c = fbi_prefactor(n, h);
    let xs = base.points();
    let al = total.points();
    let wb = base.weight();
    let wt = total.weight();
    let tf: Vec<C64> = al
        .par_iter()
        .map(|a| {
            xs.iter()
                .zip(&fv.values)
                .map(|(x, v)| (I * pair.psi_value(a, x) / h).exp() * v)
                .sum::<C64>()
                * (c * wb)
        })
        .collect();
    let st: Vec<C64> = xs
        .par_iter()
        .map(|y| {
            al.iter()
                .zip(&tf)
                .map(|(b, v)| (I * pair.psi_star_value(y, b) / h).exp() * v)
                .sum::<C64>()
                * (c * wt)
        })
        .collect();
    let st = GridFunction {
        grid: base.clone(),
        values: st,
    };
    st.check_finite()?;
    let op = fv.scale(sigma);
    Ok(FbiComparison {
        h,
        relative_difference: st.relative_distance(&op),
        norm_st: st.norm(),
        norm_op: op.norm(),
        sigma: [sigma.re, sigma.im],
        base_points: base.len(),
        total_points: total.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::{fbi_density_sigma, flat_fbi_pair, model_kernel, ModelKernel, ModelKind};
    use crate::phase::{make_bargmann, make_fubini_study};

    fn bargmann_record(h: f64) -> KernelRecord {
        let ModelKernel::Gaussian(k) = model_kernel(ModelKind::Bargmann, 1, h).unwrap() else {
            panic!()
        };
        KernelRecord::Gaussian(k)
    }

    #[test]
    fn zero_in_zero_out() {
        let g = Grid::cube(&[0.0, 0.0], 1.0, 0.1).unwrap();
        let a = apply_kernel_quadrature(&bargmann_record(0.1), &GridFunction::zeros(&g), 3.0).unwrap();
        assert_eq!(a.out.max_abs(), 0.0);
    }

    #[test]
    fn bargmann_projector_is_idempotent() {
        let h: f64 = 0.05;
        let g = Grid::cube(&[0.0, 0.0], 1.2, 0.02).unwrap();
        let f = WavePacket::coherent(&[0.2, -0.1], &[0.0, 0.0], h).sample(&g).unwrap();
        let r = idempotence_residual(&bargmann_record(h), &f, 0.8).unwrap();
        assert!(r.defect < 1e-6, "{r:?}");
    }

    #[test]
    fn gaussian_standard_fixes_ground_state() {
        let h: f64 = 0.05;
        let ModelKernel::Gaussian(k) = model_kernel(ModelKind::GaussianStandard, 1, h).unwrap() else {
            panic!()
        };
        let g = Grid::cube(&[0.0], 1.5, h.sqrt() / 4.0).unwrap();
        let u = GridFunction::from_fn(&g, |x| cr((-x[0] * x[0] / (2.0 * h)).exp()));
        let a = apply_kernel_quadrature(&KernelRecord::Gaussian(k), &u, 3.0).unwrap();
        assert!(a.out.relative_distance(&u) < 1e-8);
    }

    #[test]
    fn linear_and_hermitian() {
        let h: f64 = 0.1;
        let k = bargmann_record(h);
        let g = Grid::cube(&[0.0, 0.0], 1.2, h.sqrt() / 4.0).unwrap();
        let f = WavePacket::coherent(&[0.1, 0.0], &[0.3, 0.0], h).sample(&g).unwrap();
        let q = WavePacket::coherent(&[-0.2, 0.1], &[0.0, -0.2], h).sample(&g).unwrap();
        let pf = apply_kernel_quadrature(&k, &f, 3.0).unwrap().out;
        let pq = apply_kernel_quadrature(&k, &q, 3.0).unwrap().out;
        let psum = apply_kernel_quadrature(&k, &f.add(&q), 3.0).unwrap().out;
        assert!(psum.relative_distance(&pf.add(&pq)) < 1e-13);
        let l = pf.inner(&q);
        let r = f.inner(&pq);
        assert!((l - r).norm() < 1e-8 * l.norm().max(r.norm()));
    }

    #[test]
    fn standard_projector_restricts() {
        let g = Grid::cube(&[0.0, 0.0], 1.0, 0.25).unwrap();
        let f = GridFunction::from_fn(&g, |x| C64::new(x[0] + 1.0, x[1]));
        let a = apply_kernel_quadrature(&KernelRecord::Standard { n: 1 }, &f, 3.0).unwrap();
        let expect = GridFunction::from_fn(&g, |x| C64::new(1.0, x[1]));
        assert_eq!(a.out, expect);
    }

    #[test]
    fn miscalibrated_amplitude_is_flagged() {
        let h: f64 = 0.1;
        let g = Grid::cube(&[0.0, 0.0], 1.2, h.sqrt() / 4.0).unwrap();
        let f = WavePacket::coherent(&[0.0, 0.0], &[0.0, 0.0], h).sample(&g).unwrap();
        let k = bargmann_record(h).scaled(cr(1.1)).unwrap();
        let r = idempotence_residual(&k, &f, 3.0).unwrap();
        assert!((r.defect - 0.1).abs() < 1e-3, "{}", r.defect);
    }

    #[test]
    fn fit_recognizes_floor_and_slopes() {
        let hs = [0.2, 0.1, 0.05, 0.025];
        let lin: Vec<f64> = hs.iter().map(|h| 0.8 * h).collect();
        let fit = fit_decay(&hs, &lin).unwrap();
        assert_eq!(fit.regime, Regime::Polynomial);
        assert!((fit.loglog_slope.unwrap() - 1.0).abs() < 1e-12);
        let ex: Vec<f64> = hs.iter().map(|h| (-0.3 / h).exp()).collect();
        let fit = fit_decay(&hs, &ex).unwrap();
        assert_eq!(fit.regime, Regime::Exponential);
        assert!((fit.exp_rate.unwrap() - 0.3).abs() < 1e-9);
        assert_eq!(fit_decay(&hs, &[1e-9; 4]).unwrap().regime, Regime::Floor);
    }

    #[test]
    fn geometric_bargmann_matches_gaussian_record() {
        let h: f64 = 0.1;
        let fam = geometric_family(&make_bargmann(1), false, &[0.0, 0.0], 1.2, None).unwrap();
        let (k, f) = fam(h).unwrap();
        let a = apply_kernel_quadrature(&k, &f, 3.0).unwrap().out;
        let b = apply_kernel_quadrature(&bargmann_record(h), &f, 3.0).unwrap().out;
        assert!(a.relative_distance(&b) < 1e-12);
    }

    #[test]
    fn fubini_study_order_one_beats_order_zero() {
        let fs = make_fubini_study(None);
        let h: f64 = 0.1;
        let d0 = {
            let (k, f) = geometric_family(&fs, false, &[0.0, 0.0], 1.2, None).unwrap()(h).unwrap();
            idempotence_residual(&k, &f, 3.0).unwrap().defect
        };
        let d1 = {
            let (k, f) = geometric_family(&fs, true, &[0.0, 0.0], 1.2, None).unwrap()(h).unwrap();
            idempotence_residual(&k, &f, 3.0).unwrap().defect
        };
        assert!(d1 < 0.5 * d0, "{d0} {d1}");
    }

    #[test]
    fn fbi_zero_packet() {
        let pair = flat_fbi_pair(1).unwrap();
        let mut f = WavePacket::coherent(&[0.0], &[0.0], 0.1);
        f.sigma = Poly::zero(1);
        let sigma = fbi_density_sigma(&pair).unwrap();
        let c = fbi_compose_numeric(&pair, &f, sigma, 1.5).unwrap();
        assert_eq!(c.norm_st, 0.0);
        assert_eq!(c.relative_difference, 0.0);
    }
}
