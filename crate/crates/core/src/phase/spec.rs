//! JSON phase-spec files.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{
    make_bargmann, make_fubini_study, random_quadratic_projector_phase, Backend, Domain,
    PhaseFunction, QuadraticPhase, Scramble,
};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::poly::Poly;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// Either one [lo, hi] pair for all coordinates or one pair per coordinate.
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub exp: Vec<u32>,
    pub c: [f64; 2],
}

/// Polynomial from a term list; `field` names the JSON field in errors.
pub fn terms_to_poly(terms: &[TermSpec], nvars: usize, field: &str) -> Result<Poly> {
    let mut p = Poly::zero(nvars);
    for t in terms {
        if t.exp.len() != nvars {
            return Err(Error::Spec(format!(
                "field \"{field}\": exponent {:?} must have length {nvars}",
                t.exp
            )));
        }
        if !(t.c[0].is_finite() && t.c[1].is_finite()) {
            return Err(Error::Spec(format!("field \"{field}\": non-finite coefficient")));
        }
        p.add_term(t.exp.clone(), C64::new(t.c[0], t.c[1]));
    }
    Ok(p)
}

pub fn poly_to_terms(p: &Poly) -> Vec<TermSpec> {
    p.terms()
        .map(|(e, c)| TermSpec {
            exp: e.clone(),
            c: [c.re, c.im],
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<[f64; 2]>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<[f64; 2]>>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scramble: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_adjoint: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
}

fn need<T: Clone>(v: &Option<T>, field: &str, kind: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| Error::Spec(format!("field \"{field}\" is required for kind \"{kind}\"")))
}

fn matrix(field: &str, v: &[[f64; 2]], m: usize) -> Result<CMat> {
    if v.len() != m * m {
        return Err(Error::Spec(format!(
            "field \"{field}\" must hold {} [re,im] pairs, found {}",
            m * m,
            v.len()
        )));
    }
    Ok(CMat::from_row_iterator(m, m, v.iter().map(|p| C64::new(p[0], p[1]))))
}

fn flat(m: &CMat) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

impl DomainSpec {
    fn to_domain(&self, m: usize) -> Result<Domain> {
        let pairs: Vec<[f64; 2]> = match self.bounds.len() {
            1 => vec![self.bounds[0]; m],
            k if k == m => self.bounds.clone(),
            k => {
                return Err(Error::Spec(format!(
                    "field \"domain.box\" has {k} intervals, expected 1 or {m}"
                )))
            }
        };
        if pairs.iter().any(|p| !(p[0] < p[1])) || !(self.rho >= 0.0) {
            return Err(Error::Spec("field \"domain\" has an empty interval or negative rho".into()));
        }
        Ok(Domain {
            lo: pairs.iter().map(|p| p[0]).collect(),
            hi: pairs.iter().map(|p| p[1]).collect(),
            rho: self.rho,
        })
    }

    fn from_domain(d: &Domain) -> Self {
        DomainSpec {
            bounds: d.lo.iter().zip(&d.hi).map(|(&l, &h)| [l, h]).collect(),
            rho: d.rho,
        }
    }
}

impl PhaseSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization")
    }

    pub fn bargmann(n: usize) -> Self {
        PhaseSpec {
            kind: "bargmann".into(),
            n: Some(n),
            ..Default::default()
        }
    }

    pub fn fubini_study() -> Self {
        PhaseSpec {
            kind: "fubini_study".into(),
            n: Some(1),
            ..Default::default()
        }
    }

    pub fn scrambled(seed: u64, n: usize, scramble: Scramble) -> Self {
        PhaseSpec {
            kind: "scrambled".into(),
            n: Some(n),
            seed: Some(seed),
            scramble: Some(scramble.name().into()),
            ..Default::default()
        }
    }

    pub fn quadratic(q: &QuadraticPhase) -> Self {
        PhaseSpec {
            kind: "quadratic".into(),
            n: Some(q.n),
            alpha0: Some(q.alpha0.clone()),
            theta: Some(q.theta.clone()),
            a: Some(flat(&q.a)),
            b: Some(flat(&q.b)),
            c: Some(flat(&q.c)),
            ..Default::default()
        }
    }

    /// Spec for an existing phase; composed phases have no file form.
    pub fn from_phase(phi: &PhaseFunction) -> Result<Self> {
        let mut spec = match &phi.backend {
            Backend::Quadratic(q) => PhaseSpec::quadratic(q),
            Backend::FubiniStudy => PhaseSpec::fubini_study(),
            Backend::Polynomial(p) => {
                if phi.label.starts_with("bargmann") {
                    PhaseSpec::bargmann(phi.n())
                } else {
                    PhaseSpec {
                        kind: "polynomial".into(),
                        n: Some(phi.n()),
                        terms: Some(poly_to_terms(p)),
                        self_adjoint: Some(phi.self_adjoint),
                        ..Default::default()
                    }
                }
            }
            Backend::Composed(..) => {
                return Err(Error::Spec("composed phases cannot be written as specs".into()))
            }
        };
        spec.domain = Some(DomainSpec::from_domain(&phi.domain));
        Ok(spec)
    }

    /// Build and validate the phase.
    pub fn to_phase(&self) -> Result<PhaseFunction> {
        let kind = self.kind.as_str();
        let n = need(&self.n, "n", kind)?;
        if n == 0 {
            return Err(Error::Spec("field \"n\" must be positive".into()));
        }
        let m = 2 * n;
        let mut phi = match kind {
            "bargmann" => make_bargmann(n),
            "fubini_study" => {
                if n != 1 {
                    return Err(Error::Spec("field \"n\" must be 1 for kind \"fubini_study\"".into()));
                }
                make_fubini_study(None)
            }
            "scrambled" => {
                let seed = need(&self.seed, "seed", kind)?;
                let s = self.scramble.clone().unwrap_or_else(|| "general-linear".into());
                let sc = Scramble::parse(&s)
                    .ok_or_else(|| Error::Spec(format!("field \"scramble\": unknown value \"{s}\"")))?;
                random_quadratic_projector_phase(seed, n, sc)?
            }
            "quadratic" => {
                let alpha0 = need(&self.alpha0, "alpha0", kind)?;
                let theta = need(&self.theta, "theta", kind)?;
                if alpha0.len() != m {
                    return Err(Error::Spec(format!("field \"alpha0\" must have length {m}")));
                }
                if theta.len() != m {
                    return Err(Error::Spec(format!("field \"theta\" must have length {m}")));
                }
                let a = matrix("A", &need(&self.a, "A", kind)?, m)?;
                let b = matrix("B", &need(&self.b, "B", kind)?, m)?;
                let c = matrix("C", &need(&self.c, "C", kind)?, m)?;
                let q = QuadraticPhase::new(n, alpha0, theta, a, b, c)
                    .map_err(|e| Error::Spec(format!("fields \"A\"/\"B\"/\"C\": {e}")))?;
                PhaseFunction::from_quadratic(q, "quadratic", self.self_adjoint.unwrap_or(false))
            }
            "polynomial" => {
                let terms = need(&self.terms, "terms", kind)?;
                let p = terms_to_poly(&terms, 2 * m, "terms")?;
                PhaseFunction::from_poly(
                    p,
                    m,
                    "polynomial",
                    self.self_adjoint.unwrap_or(false),
                    Domain::cube(m, 1.0, 0.5),
                )
            }
            other => return Err(Error::Spec(format!("field \"kind\": unknown value \"{other}\""))),
        };
        if let Some(d) = &self.domain {
            phi.domain = d.to_domain(m)?;
        }
        let diag = phi.diagonal_defect(0, 16)?;
        if diag > 1e-10 {
            return Err(Error::Spec(format!(
                "phase does not vanish on the diagonal (|φ(α,α)| = {diag:.3e})"
            )));
        }
        Ok(phi)
    }
}
