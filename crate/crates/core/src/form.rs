//! Perturbed affine forms `α0 + Σ αi εi + β εU`.
//!
//! Noise symbols `εi` range over `[-1, 1]`. The perturbation symbol `εU` is
//! not shared between forms: two forms with the same `β` are not correlated
//! through it.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{DomainError, EvalError};
use crate::interval::Interval;

/// Identifier of a noise symbol. Ids start at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(pub u32);

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ε{}", self.0)
    }
}

/// Allocator of fresh noise symbols.
///
/// Forms built from different contexts must not be combined; nothing checks
/// this, so keep one context per analysis.
#[derive(Debug, Clone, Default)]
pub struct SymbolContext {
    last: u32,
}

impl SymbolContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// A context whose next symbol is strictly greater than `sym`.
    pub fn after(sym: Symbol) -> Self {
        SymbolContext { last: sym.0 }
    }

    pub fn fresh(&mut self) -> Symbol {
        self.last = self.last.checked_add(1).expect("symbol ids exhausted");
        Symbol(self.last)
    }

    /// Number of symbols handed out so far.
    pub fn allocated(&self) -> u32 {
        self.last
    }

    /// Makes sure later symbols do not collide with the ones in `form`.
    pub fn reserve(&mut self, form: &AffineForm) {
        if let Some(m) = form.max_symbol() {
            self.last = self.last.max(m.0);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffineForm {
    center: f64,
    coeffs: BTreeMap<Symbol, f64>,
    beta: f64,
}

impl AffineForm {
    pub fn new(center: f64, coeffs: impl IntoIterator<Item = (Symbol, f64)>, beta: f64) -> Self {
        let mut map = BTreeMap::new();
        for (s, v) in coeffs {
            *map.entry(s).or_insert(0.0) += v;
        }
        map.retain(|_, v| *v != 0.0);
        AffineForm { center, coeffs: map, beta }
    }

    pub fn constant(c: f64) -> Self {
        AffineForm { center: c, coeffs: BTreeMap::new(), beta: 0.0 }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `mid + rad·ε` with a fresh `ε`; a point interval gives a constant.
    pub fn from_interval(iv: Interval, ctx: &mut SymbolContext) -> Self {
        let rad = iv.radius();
        if rad == 0.0 {
            return Self::constant(iv.lo);
        }
        Self::new(iv.mid(), [(ctx.fresh(), rad)], 0.0)
    }

    /// `mid + rad·sym` for a caller-chosen symbol.
    pub fn from_interval_with(iv: Interval, sym: Symbol) -> Self {
        Self::new(iv.mid(), [(sym, iv.radius())], 0.0)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn coeffs(&self) -> &BTreeMap<Symbol, f64> {
        &self.coeffs
    }

    pub fn coeff(&self, s: Symbol) -> f64 {
        self.coeffs.get(&s).copied().unwrap_or(0.0)
    }

    pub fn max_symbol(&self) -> Option<Symbol> {
        self.coeffs.keys().next_back().copied()
    }

    /// Meets and jumps can produce `β < 0`; such forms have no range.
    pub fn is_flagged(&self) -> bool {
        self.beta < 0.0
    }

    /// `Σ |αi|` over noise symbols.
    pub fn norm_l(&self) -> f64 {
        self.coeffs.values().map(|v| v.abs()).sum()
    }

    /// `|α0| + Σ |αi|`.
    pub fn norm_a(&self) -> f64 {
        self.center.abs() + self.norm_l()
    }

    /// `‖·‖_A + |β|`.
    pub fn l1(&self) -> f64 {
        self.norm_a() + self.beta.abs()
    }

    pub fn gamma(&self) -> Result<Interval, DomainError> {
        if self.beta < 0.0 {
            return Err(DomainError::NegativeBeta { beta: self.beta });
        }
        Ok(self.bounds())
    }

    /// `[α0 - ‖·‖_L - β, α0 + ‖·‖_L + β]` without the sign check on `β`.
    pub fn bounds(&self) -> Interval {
        let r = self.norm_l() + self.beta;
        Interval { lo: self.center - r, hi: self.center + r }
    }

    pub fn add(&self, other: &AffineForm) -> AffineForm {
        let mut coeffs = self.coeffs.clone();
        for (s, v) in &other.coeffs {
            *coeffs.entry(*s).or_insert(0.0) += v;
        }
        coeffs.retain(|_, v| *v != 0.0);
        AffineForm {
            center: self.center + other.center,
            coeffs,
            beta: self.beta + other.beta,
        }
    }

    pub fn neg(&self) -> AffineForm {
        AffineForm {
            center: -self.center,
            coeffs: self.coeffs.iter().map(|(s, v)| (*s, -v)).collect(),
            beta: self.beta,
        }
    }

    /// `self + (-other)`; perturbations add up.
    pub fn sub(&self, other: &AffineForm) -> AffineForm {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: f64) -> AffineForm {
        if k == 0.0 {
            return AffineForm::zero();
        }
        AffineForm {
            center: k * self.center,
            coeffs: self.coeffs.iter().map(|(s, v)| (*s, k * v)).collect(),
            beta: k.abs() * self.beta,
        }
    }

    /// Product; the quadratic noise part goes on a single fresh symbol, which
    /// is only allocated when it is non-zero.
    pub fn mul(&self, other: &AffineForm, ctx: &mut SymbolContext) -> AffineForm {
        let mut coeffs = BTreeMap::new();
        for (s, v) in &self.coeffs {
            *coeffs.entry(*s).or_insert(0.0) += other.center * v;
        }
        for (s, v) in &other.coeffs {
            *coeffs.entry(*s).or_insert(0.0) += self.center * v;
        }
        let quad = self.norm_l() * other.norm_l();
        if quad != 0.0 {
            coeffs.insert(ctx.fresh(), quad);
        }
        coeffs.retain(|_, v| *v != 0.0);
        let beta = self.norm_a() * other.beta + self.beta * other.norm_a() + self.beta * other.beta;
        AffineForm { center: self.center * other.center, coeffs, beta }
    }

    /// Moves the perturbation onto a fresh noise symbol (`!x`).
    pub fn shift(&self, ctx: &mut SymbolContext) -> AffineForm {
        if self.beta == 0.0 {
            return self.clone();
        }
        self.shift_onto(ctx.fresh())
    }

    pub fn shift_onto(&self, sym: Symbol) -> AffineForm {
        let mut out = self.clone();
        if self.beta != 0.0 {
            out.coeffs.insert(sym, self.beta);
        }
        out.beta = 0.0;
        out
    }

    /// Folds coefficients with `|αi| <= threshold` into `β`.
    pub fn compact(&self, threshold: f64) -> AffineForm {
        let mut out = AffineForm { center: self.center, coeffs: BTreeMap::new(), beta: self.beta };
        for (s, v) in &self.coeffs {
            if v.abs() <= threshold {
                out.beta += v.abs();
            } else {
                out.coeffs.insert(*s, *v);
            }
        }
        out
    }

    /// Adds `delta` to `β`.
    pub fn widened_by(&self, delta: f64) -> AffineForm {
        let mut out = self.clone();
        out.beta += delta;
        out
    }

    /// Value under a noise assignment and a value `u ∈ [-1, 1]` of `εU`.
    pub fn eval(&self, noise: impl Fn(Symbol) -> Option<f64>, u: f64) -> Result<f64, EvalError> {
        let mut acc = self.center;
        for (s, v) in &self.coeffs {
            let t = noise(*s).ok_or(EvalError::MissingSymbol(*s))?;
            acc += v * t;
        }
        Ok(acc + self.beta * u)
    }

    /// Componentwise comparison within `tol`.
    pub fn approx_eq(&self, other: &AffineForm, tol: f64) -> bool {
        if (self.center - other.center).abs() > tol || (self.beta - other.beta).abs() > tol {
            return false;
        }
        for (s, v) in &self.coeffs {
            if (v - other.coeff(*s)).abs() > tol {
                return false;
            }
        }
        other
            .coeffs
            .iter()
            .all(|(s, v)| self.coeffs.contains_key(s) || v.abs() <= tol)
    }

    /// `‖self - other‖_A` on the noise part only (perturbations ignored).
    pub fn dist_a(&self, other: &AffineForm) -> f64 {
        let mut d = (self.center - other.center).abs();
        for (s, v) in &self.coeffs {
            d += (v - other.coeff(*s)).abs();
        }
        for (s, v) in &other.coeffs {
            if !self.coeffs.contains_key(s) {
                d += v.abs();
            }
        }
        d
    }
}

impl From<f64> for AffineForm {
    fn from(c: f64) -> Self {
        AffineForm::constant(c)
    }
}

impl Add for &AffineForm {
    type Output = AffineForm;
    fn add(self, rhs: &AffineForm) -> AffineForm {
        AffineForm::add(self, rhs)
    }
}

impl Sub for &AffineForm {
    type Output = AffineForm;
    fn sub(self, rhs: &AffineForm) -> AffineForm {
        AffineForm::sub(self, rhs)
    }
}

impl Neg for &AffineForm {
    type Output = AffineForm;
    fn neg(self) -> AffineForm {
        AffineForm::neg(self)
    }
}

impl Mul<f64> for &AffineForm {
    type Output = AffineForm;
    fn mul(self, k: f64) -> AffineForm {
        self.scale(k)
    }
}

impl Mul<&AffineForm> for f64 {
    type Output = AffineForm;
    fn mul(self, x: &AffineForm) -> AffineForm {
        x.scale(self)
    }
}

impl fmt::Display for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.center)?;
        for (s, v) in &self.coeffs {
            if *v < 0.0 {
                write!(f, " - {}{}", -v, s)?;
            } else {
                write!(f, " + {}{}", v, s)?;
            }
        }
        if self.beta != 0.0 {
            if self.beta < 0.0 {
                write!(f, " - {}εU", -self.beta)?;
            } else {
                write!(f, " + {}εU", self.beta)?;
            }
        }
        Ok(())
    }
}
