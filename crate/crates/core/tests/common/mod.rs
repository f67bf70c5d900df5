#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use paa_core::{AffineForm, FilterSpec, InputMode, Interval, Symbol};
use rand::Rng;

pub fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

pub fn form(c: f64, coeffs: &[(u32, f64)], beta: f64) -> AffineForm {
    AffineForm::new(c, coeffs.iter().map(|(i, v)| (Symbol(*i), *v)), beta)
}

/// Second-order filter used throughout: x = 1.4x' - 0.7x'' + 0.7e - 1.3e' + 1.1e''.
pub fn transf2(mode: InputMode) -> FilterSpec {
    FilterSpec::from_lags(vec![1.4, -0.7], vec![0.7, -1.3, 1.1], iv(0.0, 1.0), vec![iv(0.0, 0.0); 2], mode).unwrap()
}

fn dec(s: &str) -> BigRational {
    let neg = s.starts_with('-');
    let s = s.trim_start_matches('-');
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits: BigInt = format!("{int}{frac}").parse().unwrap();
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    let r = BigRational::new(digits, den);
    if neg {
        -r
    } else {
        r
    }
}

/// Exact ranges of x[k] for k = n..=last, computed with rationals from
/// decimal coefficients. Lags are newest first; zero initial state; inputs in
/// [0, 1], independent or all equal.
pub struct ExactOracle {
    pub rows: Vec<(usize, f64, f64)>,
}

impl ExactOracle {
    pub fn run(a_lags: &[&str], b_lags: &[&str], last: usize, constant: bool) -> Self {
        let n = a_lags.len();
        let a: Vec<BigRational> = a_lags.iter().map(|s| dec(s)).collect();
        let b: Vec<BigRational> = b_lags.iter().map(|s| dec(s)).collect();
        let half = BigRational::new(1.into(), 2.into());
        // Each value: (center, coefficient per input index).
        let mut xs: Vec<(BigRational, Vec<BigRational>)> = vec![(BigRational::zero(), vec![]); n];
        let mut rows = Vec::new();
        for k in n..=last {
            let mut c = BigRational::zero();
            let mut v = vec![BigRational::zero(); if constant { 1 } else { k + 1 }];
            for (i, ai) in a.iter().enumerate() {
                let (xc, xv) = &xs[k - 1 - i];
                c += ai * xc;
                for (j, t) in xv.iter().enumerate() {
                    v[j] += ai * t;
                }
            }
            for (j, bj) in b.iter().enumerate() {
                c += bj * &half;
                let idx = if constant { 0 } else { k - j };
                v[idx] += bj * &half;
            }
            let dev: BigRational = v.iter().map(|t| t.abs()).fold(BigRational::zero(), |s, t| s + t);
            rows.push((k, (&c - &dev).to_f64().unwrap(), (&c + &dev).to_f64().unwrap()));
            xs.push((c, v));
        }
        ExactOracle { rows }
    }

    pub fn transf2(last: usize, constant: bool) -> Self {
        Self::run(&["1.4", "-0.7"], &["0.7", "-1.3", "1.1"], last, constant)
    }

    pub fn at(&self, k: usize) -> (f64, f64) {
        let r = self.rows.iter().find(|r| r.0 == k).unwrap();
        (r.1, r.2)
    }

    /// (value, k) of the overall extrema over rows with k >= from.
    pub fn extrema(&self, from: usize) -> ((f64, usize), (f64, usize)) {
        let rows = self.rows.iter().filter(|r| r.0 >= from);
        let mut min = (f64::INFINITY, 0);
        let mut max = (f64::NEG_INFINITY, 0);
        for r in rows {
            if r.1 < min.0 {
                min = (r.1, r.0);
            }
            if r.2 > max.0 {
                max = (r.2, r.0);
            }
        }
        (min, max)
    }
}

/// Random form over symbols 1..=nsym with small integer-ish coefficients.
pub fn random_form<R: Rng>(rng: &mut R, nsym: u32, beta: bool) -> AffineForm {
    let c = rng.gen_range(-5.0..5.0);
    let mut coeffs = Vec::new();
    for i in 1..=nsym {
        if rng.gen_bool(0.7) {
            coeffs.push((Symbol(i), rng.gen_range(-3.0..3.0)));
        }
    }
    let b = if beta { rng.gen_range(0.0..2.0) } else { 0.0 };
    AffineForm::new(c, coeffs, b)
}

/// Random stable filter of order n: real and complex-pair roots of modulus
/// at most `rmax` expanded into the characteristic polynomial.
pub fn random_stable_filter<R: Rng>(rng: &mut R, n: usize, rmax: f64) -> FilterSpec {
    let mut poly = vec![1.0];
    let mut left = n;
    while left > 0 {
        if left >= 2 && rng.gen_bool(0.5) {
            let r = rng.gen_range(0.0..rmax);
            let th = rng.gen_range(0.0..std::f64::consts::PI);
            // z^2 - 2r cos θ z + r^2
            poly = polymul(&poly, &[1.0, -2.0 * r * th.cos(), r * r]);
            left -= 2;
        } else {
            let r = rng.gen_range(-rmax..rmax);
            poly = polymul(&poly, &[1.0, -r]);
            left -= 1;
        }
    }
    // z^n = Σ lag-i coefficient · z^(n-i)
    let a_lags: Vec<f64> = poly[1..].iter().map(|v| -v).collect();
    let b_lags: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let lo = rng.gen_range(-1.0..0.5);
    let input = iv(lo, lo + rng.gen_range(0.1..2.0));
    FilterSpec::from_lags(a_lags, b_lags, input, vec![iv(0.0, 0.0); n], InputMode::Independent).unwrap()
}

fn polymul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Largest eigenvalue modulus of the companion matrix.
pub fn spectral_radius(spec: &FilterSpec) -> f64 {
    let m = paa_core::companion(spec);
    let n = m.dim();
    let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| m.get(i, j));
    dm.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}
