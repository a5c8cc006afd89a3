//! Sparse multivariate polynomials with complex coefficients.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector of a monomial.
pub type Exponent = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Exponent, C64>,
}

fn zero_c() -> C64 {
    C64::new(0.0, 0.0)
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C64) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, C64::new(1.0, 0.0))
    }

    /// The coordinate function x_i.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Poly::monomial(e, C64::new(1.0, 0.0))
    }

    pub fn monomial(exp: Exponent, c: C64) -> Self {
        let mut p = Poly::zero(exp.len());
        p.add_term(exp, c);
        p
    }

    /// Linear form Σ c_i x_i + c0.
    pub fn linear(c: &[C64], c0: C64) -> Self {
        let n = c.len();
        let mut p = Poly::constant(n, c0);
        for (i, &ci) in c.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, ci);
        }
        p
    }

    /// Quadratic form ½ xᵀ M x for a symmetric (or symmetrized) matrix M.
    pub fn quadratic_form(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        let mut p = Poly::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut e = vec![0; n];
                e[i] += 1;
                e[j] += 1;
                p.add_term(e, m[(i, j)] * 0.5);
            }
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exp: &[u32]) -> C64 {
        self.terms.get(exp).copied().unwrap_or_else(zero_c)
    }

    pub fn add_term(&mut self, exp: Exponent, c: C64) {
        assert_eq!(exp.len(), self.nvars, "exponent length mismatch");
        if c == zero_c() {
            return;
        }
        let v = self.terms.entry(exp.clone()).or_insert_with(zero_c);
        *v += c;
        if *v == zero_c() {
            self.terms.remove(&exp);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient of `self - other` in modulus.
    pub fn distance(&self, other: &Poly) -> f64 {
        self.sub(other).max_abs_coeff()
    }

    pub fn constant_term(&self) -> C64 {
        self.coeff(&vec![0; self.nvars])
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.mul_truncated(other, usize::MAX)
    }

    /// Product keeping only monomials of total degree ≤ `max_deg`.
    pub fn mul_truncated(&self, other: &Poly, max_deg: usize) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut acc: BTreeMap<Exponent, C64> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            let d1: u32 = e1.iter().sum();
            for (e2, c2) in &other.terms {
                let d2: u32 = e2.iter().sum();
                if (d1 + d2) as usize > max_deg {
                    continue;
                }
                let e: Exponent = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *acc.entry(e).or_insert_with(zero_c) += c1 * c2;
            }
        }
        acc.retain(|_, c| *c != zero_c());
        Poly {
            nvars: self.nvars,
            terms: acc,
        }
    }

    pub fn pow_truncated(&self, k: u32, max_deg: usize) -> Poly {
        let mut out = Poly::one(self.nvars);
        for _ in 0..k {
            out = out.mul_truncated(self, max_deg);
        }
        out
    }

    pub fn truncate(&self, max_deg: usize) -> Poly {
        let mut out = self.clone();
        out.terms
            .retain(|e, _| e.iter().sum::<u32>() as usize <= max_deg);
        out
    }

    /// Homogeneous component of degree `k`.
    pub fn homogeneous(&self, k: usize) -> Poly {
        let mut out = self.clone();
        out.terms.retain(|e, _| e.iter().sum::<u32>() as usize == k);
        out
    }

    /// Drop coefficients with modulus ≤ `tol`.
    pub fn prune(&self, tol: f64) -> Poly {
        let mut out = self.clone();
        out.terms.retain(|_, c| c.norm() > tol);
        out
    }

    pub fn deriv(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c * e[i] as f64);
        }
        out
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut s = zero_c();
        for (e, c) in &self.terms {
            let mut t = *c;
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= xi.powu(k);
                }
            }
            s += t;
        }
        s
    }

    pub fn eval_real(&self, x: &[f64]) -> C64 {
        let xc: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.eval(&xc)
    }

    /// Compose with a polynomial map: the result is p(q_0(y), …, q_{n-1}(y)).
    pub fn compose(&self, q: &[Poly]) -> Poly {
        self.compose_truncated(q, usize::MAX)
    }

    pub fn compose_truncated(&self, q: &[Poly], max_deg: usize) -> Poly {
        assert_eq!(q.len(), self.nvars, "substitution arity");
        let m = q.first().map(|p| p.nvars).unwrap_or(0);
        let max_pow: Vec<u32> = (0..self.nvars)
            .map(|i| self.terms.keys().map(|e| e[i]).max().unwrap_or(0))
            .collect();
        let powers: Vec<Vec<Poly>> = q
            .iter()
            .enumerate()
            .map(|(i, qi)| {
                let mut v = vec![Poly::one(m)];
                for k in 1..=max_pow[i] as usize {
                    let next = v[k - 1].mul_truncated(qi, max_deg);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Poly::zero(m);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(m, *c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t.mul_truncated(&powers[i][k as usize], max_deg);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// p(x + c) as a polynomial in x.
    pub fn shift(&self, c: &[C64]) -> Poly {
        let q: Vec<Poly> = (0..self.nvars)
            .map(|i| {
                let mut p = Poly::var(self.nvars, i);
                p.add_term(vec![0; self.nvars], c[i]);
                p
            })
            .collect();
        self.compose(&q)
    }

    /// Rename variable i to `map[i]` in a space of `new_nvars` variables.
    pub fn embed(&self, new_nvars: usize, map: &[usize]) -> Poly {
        assert_eq!(map.len(), self.nvars);
        let mut out = Poly::zero(new_nvars);
        for (e, c) in &self.terms {
            let mut e2 = vec![0; new_nvars];
            for (i, &k) in e.iter().enumerate() {
                e2[map[i]] += k;
            }
            out.add_term(e2, *c);
        }
        out
    }

    /// Substitute numeric values for a subset of variables, keeping the rest in order.
    pub fn partial_eval(&self, fixed: &[(usize, C64)]) -> Poly {
        let keep: Vec<usize> = (0..self.nvars)
            .filter(|i| !fixed.iter().any(|(j, _)| j == i))
            .collect();
        let mut out = Poly::zero(keep.len());
        for (e, c) in &self.terms {
            let mut t = *c;
            for &(j, v) in fixed {
                if e[j] > 0 {
                    t *= v.powu(e[j]);
                }
            }
            let e2: Exponent = keep.iter().map(|&i| e[i]).collect();
            out.add_term(e2, t);
        }
        out
    }

    /// Gradient at the origin.
    pub fn gradient_at_zero(&self) -> DVector<C64> {
        DVector::from_fn(self.nvars, |i, _| {
            let mut e = vec![0; self.nvars];
            e[i] = 1;
            self.coeff(&e)
        })
    }

    /// Hessian at the origin.
    pub fn hessian_at_zero(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.nvars, self.nvars, |i, j| {
            let mut e = vec![0; self.nvars];
            e[i] += 1;
            e[j] += 1;
            let c = self.coeff(&e);
            if i == j {
                c * 2.0
            } else {
                c
            }
        })
    }

    /// Map every coefficient through `f`.
    pub fn map_coeffs(&self, f: impl Fn(C64) -> C64) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(*c));
        }
        out
    }

    pub fn conj(&self) -> Poly {
        self.map_coeffs(|c| c.conj())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.terms.values().all(|c| c.re.is_finite() && c.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("polynomial coefficient".into()))
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "·x{}", i)?,
                    _ => write!(f, "·x{}^{}", i, k)?,
                }
            }
        }
        Ok(())
    }
}

/// Multi-indices of length `n` with total degree ≤ `k`, in lexicographic order.
pub fn multi_indices(n: usize, k: usize) -> Vec<Exponent> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(i: usize, left: usize, cur: &mut Vec<u32>, out: &mut Vec<Exponent>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for d in 0..=left {
            cur[i] = d as u32;
            rec(i + 1, left - d, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, k, &mut cur, &mut out);
    out
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(|v| v as f64).product()
}
