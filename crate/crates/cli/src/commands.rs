use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;
use phaselab::critical::{associativity_residual, d_critique_residual, reproducing_residual};
use phaselab::gauss::{order_one_amplitude, projector_amplitude};
use phaselab::geometry::{check_projector_jet, kahler_triple, positivity_leaf, rank_cross_hessian, tangent_models};
use phaselab::operator::{
    geometric_family, h_sweep_decay, idempotence_residual, matched_covector, packet_membership_check,
    positivity_constant, Amplitude, Grid, KernelRecord, PacketSpec, Regime, Side, WavePacket, DEFAULT_WINDOW,
};
use phaselab::phase::spec::PhaseSpec;
use phaselab::phase::{PhaseFunction, Scramble};
use phaselab::symplin::{
    flatten_pair, lambda_from_pair, pair_positivity_check, positive_normal_form, relation_compose, LinearSubspace,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::run_report::{Builder, Failure, RunReport};
use crate::{Cli, Command, ModelName, PhaseArg, QuadArgs, SampleArgs};

type Res<T> = std::result::Result<T, Failure>;

pub fn run(cli: &Cli) -> Res<RunReport> {
    let start = Instant::now();
    let b = match &cli.command {
        Command::Check { phase, sample, tol } => check(phase, sample, *tol)?,
        Command::Geometry { phase, sample, tol } => geometry(phase, sample, *tol)?,
        Command::Critical {
            phase,
            sample,
            tol,
            radius,
        } => critical(phase, sample, *tol, *radius)?,
        Command::Project {
            phase,
            packet,
            h,
            quad,
            tol,
            emit,
        } => project(phase, packet.as_deref(), *h, quad, *tol, emit.as_deref())?,
        Command::Sweep {
            phase,
            h_list,
            quad,
            expect_slope,
            tol,
        } => sweep(phase, h_list, quad, *expect_slope, *tol)?,
        Command::Models {
            kind,
            n,
            seed,
            scramble,
            emit,
            tol,
        } => models(*kind, *n, *seed, scramble, emit.as_deref(), *tol)?,
        Command::Symplin { phase, at, tol } => symplin(phase, at.as_deref(), *tol)?,
    };
    let wall = cli.timing.then(|| start.elapsed().as_secs_f64());
    Ok(b.finish(wall))
}

fn read(path: &Path) -> Res<Vec<u8>> {
    fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load_phase(arg: &PhaseArg, b: &mut Builder) -> Res<PhaseFunction> {
    let path: &PathBuf = match (&arg.file, &arg.flag) {
        (Some(p), None) | (None, Some(p)) => p,
        (Some(_), Some(_)) => return Err(Failure("give the phase either positionally or with --phase".into())),
        (None, None) => return Err(Failure("a phase spec file is required".into())),
    };
    let bytes = read(path)?;
    b.input_file("phase", &bytes);
    let text = String::from_utf8(bytes).map_err(|_| Failure(format!("{}: not UTF-8", path.display())))?;
    let spec = PhaseSpec::from_json(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    spec.to_phase().map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn center(phi: &PhaseFunction) -> Vec<f64> {
    phi.domain.lo.iter().zip(&phi.domain.hi).map(|(a, b)| 0.5 * (a + b)).collect()
}

/// Seeded points within distance 0.5 of the domain center.
fn sample_points(phi: &PhaseFunction, s: &SampleArgs, b: &mut Builder) -> Vec<Vec<f64>> {
    b.input("seed", s.seed);
    b.input("samples", s.samples);
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let c = center(phi);
    (0..s.samples).map(|_| phi.sample_near(&mut rng, &c, 0.5)).collect()
}

fn cplx(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&v| C64::new(v, 0.0)).collect()
}

fn check(arg: &PhaseArg, s: &SampleArgs, tol: f64) -> Res<Builder> {
    let mut b = Builder::new("check");
    let phi = load_phase(arg, &mut b)?;
    b.input("tol", tol);
    let pts = sample_points(&phi, s, &mut b);
    for (k, a) in pts.iter().enumerate() {
        let jet = phi.jet_at(a, 2)?;
        b.entries.merge(&format!("p{k}."), &check_projector_jet(&jet, tol));
        b.entries.merge(&format!("p{k}."), &positivity_leaf(&jet));
    }
    b.entries.max("diagonal_defect", phi.diagonal_defect(s.seed, s.samples)?, tol);
    if phi.self_adjoint {
        b.entries.max("self_adjoint_defect", phi.self_adjoint_defect(s.seed, s.samples)?, tol);
    }
    b.resolve("label", &phi.label);
    Ok(b)
}

fn geometry(arg: &PhaseArg, s: &SampleArgs, tol: f64) -> Res<Builder> {
    let mut b = Builder::new("geometry");
    let phi = load_phase(arg, &mut b)?;
    b.input("tol", tol);
    let pts = sample_points(&phi, s, &mut b);
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x5eed);
    let n = phi.n();
    for (k, a) in pts.iter().enumerate() {
        let jet = phi.jet_at(a, 2)?;
        let kd = kahler_triple(&jet)?;
        b.entries.merge(&format!("p{k}."), &kd.residuals(tol));
        let tm = tangent_models(&jet)?;
        b.entries.merge(&format!("p{k}.tangent."), &tm.checks);
        let near = phi.sample_near(&mut rng, a, 0.1);
        let r = rank_cross_hessian(&phi, &cplx(a), &cplx(&near))?;
        b.entries
            .max(format!("p{k}.rank_cross_hessian"), (r as f64 - n as f64).abs(), 0.5);
    }
    Ok(b)
}

fn critical(arg: &PhaseArg, s: &SampleArgs, tol: f64, radius: f64) -> Res<Builder> {
    let mut b = Builder::new("critical");
    let phi = load_phase(arg, &mut b)?;
    b.input("tol", tol);
    b.input("radius", radius);
    let pts = sample_points(&phi, s, &mut b);
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0xc217);
    let (mut rep, mut dcr, mut asc) = (0.0f64, 0.0f64, 0.0f64);
    for a in &pts {
        let be = phi.sample_near(&mut rng, a, radius);
        let (ac, bc) = (cplx(a), cplx(&be));
        rep = rep.max(reproducing_residual(&phi, &ac, &bc)?);
        dcr = dcr.max(d_critique_residual(&phi, &ac, &bc)?.iter().copied().fold(0.0, f64::max));
        asc = asc.max(associativity_residual(&phi, &ac, &bc)?);
    }
    b.entries
        .max("reproducing_residual", rep, tol)
        .max("d_critique_residual", dcr, tol)
        .max("associativity_residual", asc, tol);
    Ok(b)
}

struct Quad {
    spacing: Option<f64>,
    window: f64,
}

fn resolve_quad(q: &QuadArgs, b: &mut Builder) -> Res<Quad> {
    b.input("grid", &q.grid);
    b.input("window", q.window);
    b.input("box", q.half);
    b.input("order", q.order);
    if q.order > 1 {
        return Err(Failure(format!("--order must be 0 or 1, got {}", q.order)));
    }
    if !(q.half > 0.0) {
        return Err(Failure("--box must be positive".into()));
    }
    let spacing = if q.grid == "auto" {
        None
    } else {
        let v: f64 = q
            .grid
            .parse()
            .map_err(|_| Failure(format!("--grid must be a number or \"auto\", got \"{}\"", q.grid)))?;
        if !(v > 0.0) {
            return Err(Failure("--grid must be positive".into()));
        }
        Some(v)
    };
    let window = q.window.unwrap_or(DEFAULT_WINDOW);
    if !(window > 0.0) {
        return Err(Failure("--window must be positive".into()));
    }
    b.resolve("window_factor", window);
    b.resolve("box_half_width", q.half);
    Ok(Quad { spacing, window })
}

fn project(
    arg: &PhaseArg,
    packet: Option<&Path>,
    h: f64,
    qa: &QuadArgs,
    tol: f64,
    emit: Option<&Path>,
) -> Res<Builder> {
    let mut b = Builder::new("project");
    let phi = load_phase(arg, &mut b)?;
    b.input("h", h);
    b.input("tol", tol);
    if !(h > 0.0) {
        return Err(Failure("--h must be positive".into()));
    }
    let q = resolve_quad(qa, &mut b)?;
    let c = center(&phi);
    let f = match packet {
        Some(p) => {
            let bytes = read(p)?;
            b.input_file("packet", &bytes);
            let text = String::from_utf8(bytes).map_err(|_| Failure(format!("{}: not UTF-8", p.display())))?;
            let spec = PacketSpec::from_json(&text).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            let f = spec.to_packet().map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            if (f.h - h).abs() > 1e-15 * h {
                return Err(Failure(format!("{}: field \"h\" is {} but --h is {h}", p.display(), f.h)));
            }
            f
        }
        None => WavePacket::coherent(&c, &matched_covector(&phi, &c)?, h),
    };
    if f.dim() != phi.dim {
        return Err(Failure(format!("packet dimension {} differs from the phase dimension {}", f.dim(), phi.dim)));
    }
    let spacing = q.spacing.unwrap_or(h.sqrt() / 4.0);
    let grid = Grid::cube(&f.x0, qa.half, spacing)?;
    b.resolve("spacing", grid.max_spacing());
    b.resolve("counts", &grid.counts);
    let membership = packet_membership_check(&f, Side::Base, &grid, None, 1e-10)?;
    b.datum("packet_constant_c", positivity_constant(&membership));
    b.entries.merge("packet.", &membership);
    let correction = if qa.order == 1 {
        order_one_amplitude(&phi, &c)?.a1
    } else {
        C64::new(0.0, 0.0)
    };
    let k = KernelRecord::Phase {
        phase: phi.clone(),
        amplitude: Amplitude::Geometric { correction },
        h,
    };
    let fv = f.sample(&grid)?;
    let r = idempotence_residual(&k, &fv, q.window)?;
    b.resolve("window_radius", r.window_radius);
    b.datum("clipped_points", r.clipped);
    b.datum("boundary_mass", r.boundary_mass);
    b.datum("masked_pairs", r.masked_pairs);
    b.datum("masked_bound", r.masked_bound);
    b.datum("norm_pi_f", r.norm_pi_f);
    b.entries.max("idempotence_defect", r.defect, tol);
    if let Some(path) = emit {
        let out = phaselab::operator::apply_kernel_quadrature(&k, &fv, q.window)?.out;
        out.dump(path)?;
    }
    Ok(b)
}

fn sweep(arg: &PhaseArg, hs: &[f64], qa: &QuadArgs, expect: Option<f64>, tol: Option<f64>) -> Res<Builder> {
    let mut b = Builder::new("sweep");
    let phi = load_phase(arg, &mut b)?;
    b.input("h_list", hs);
    b.input("expect_slope", expect);
    b.input("tol", tol);
    let q = resolve_quad(qa, &mut b)?;
    if hs.iter().any(|h| !(*h > 0.0)) {
        return Err(Failure("--h-list values must be positive".into()));
    }
    let c = center(&phi);
    b.resolve("center", &c);
    let fam = geometric_family(&phi, qa.order == 1, &c, qa.half, q.spacing)?;
    let sw = h_sweep_decay(fam, hs, q.window)?;
    b.resolve("spacings", &sw.spacings);
    b.datum("defects", &sw.defects);
    b.datum("fit", &sw.fit);
    let target = expect.unwrap_or(qa.order as f64 + 1.0);
    let tol = tol.unwrap_or(if qa.order == 1 { 0.4 } else { 0.3 });
    b.resolve("expected_slope", target);
    b.resolve("slope_tolerance", tol);
    match sw.fit.regime {
        Regime::Floor => {
            b.entries.flag("floor", true);
        }
        _ => {
            let s = sw.fit.loglog_slope.unwrap_or(f64::NAN);
            b.entries.max("slope_deviation", (s - target).abs(), tol);
        }
    }
    Ok(b)
}

fn models(kind: ModelName, n: usize, seed: u64, scramble: &str, emit: Option<&Path>, tol: f64) -> Res<Builder> {
    let mut b = Builder::new("models");
    b.input("n", n);
    b.input("tol", tol);
    let spec = match kind {
        ModelName::Bargmann => {
            b.input("kind", "bargmann");
            PhaseSpec::bargmann(n)
        }
        ModelName::Fs => {
            b.input("kind", "fubini_study");
            if n != 1 {
                return Err(Failure("--n must be 1 for the Fubini–Study model".into()));
            }
            PhaseSpec::fubini_study()
        }
        ModelName::Scrambled => {
            b.input("kind", "scrambled");
            b.input("seed", seed);
            b.input("scramble", scramble);
            let sc = Scramble::parse(scramble)
                .ok_or_else(|| Failure(format!("--scramble: unknown value \"{scramble}\"")))?;
            PhaseSpec::scrambled(seed, n, sc)
        }
    };
    let phi = spec.to_phase()?;
    let full = PhaseSpec::from_phase(&phi)?;
    let jet = phi.jet_at(&center(&phi), 2)?;
    b.entries.merge("center.", &check_projector_jet(&jet, tol));
    b.resolve("amplitude_c0", {
        let c0 = projector_amplitude(&jet)?;
        [c0.re, c0.im]
    });
    match emit {
        Some(p) => {
            fs::write(p, full.to_json() + "\n").map_err(|e| Failure(format!("{}: {e}", p.display())))?;
        }
        None => b.datum("spec", &full),
    }
    Ok(b)
}

fn symplin(arg: &PhaseArg, at: Option<&[f64]>, tol: f64) -> Res<Builder> {
    let mut b = Builder::new("symplin");
    let phi = load_phase(arg, &mut b)?;
    b.input("at", at);
    b.input("tol", tol);
    let a = match at {
        Some(v) => v.to_vec(),
        None => center(&phi),
    };
    b.resolve("basepoint", &a);
    let jet = phi.jet_at(&a, 2)?;
    let tm = tangent_models(&jet)?;
    let j = LinearSubspace::new(&tm.j)?;
    let js = LinearSubspace::new(&tm.j_star)?;
    let sigma = LinearSubspace::new(&tm.sigma)?;
    let frame = flatten_pair(&j, &js, Some(&sigma))?;
    b.entries.merge("flatten.", &frame.checks);
    let pos = pair_positivity_check(&j, &js, tol)?;
    b.entries.merge("positivity.", &pos.report);
    let lam = lambda_from_pair(&j, &js)?;
    b.entries.max("lambda_lagrangian", lam.is_lagrangian(tol).defect, tol);
    let ll = relation_compose(&lam, &lam)?;
    b.entries.max("lambda_idempotent", ll.distance(&lam), tol);
    match positive_normal_form(&j, &sigma) {
        Ok(nf) => {
            b.entries.merge("normal_form.", &nf.checks);
            b.datum("normal_form_flow_defect", nf.flow_defect);
        }
        Err(e) => {
            b.entries.flag("normal_form.exists", false);
            b.datum("normal_form_error", e.to_string());
        }
    }
    Ok(b)
}
