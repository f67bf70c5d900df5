//! Order relations, bounds and widenings on perturbed affine forms.
//!
//! All predicates compare with an absolute tolerance; `DEFAULT_TOL` is used by
//! the variants without a `_tol` suffix. Operand forms are expected to have
//! `β >= 0` unless stated otherwise.

use std::collections::BTreeSet;

use crate::error::DomainError;
use crate::form::{AffineForm, Symbol};
use crate::interval::Interval;

pub const DEFAULT_TOL: f64 = 1e-9;

/// How a bound was chosen among the admissible ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Generic position: the bound is the one given by the closed formula.
    GenericUnique,
    /// One range strictly contains the other; a deterministic representative
    /// of the admissible family was picked.
    NongenericCanonical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MubResult {
    pub form: Option<AffineForm>,
    pub generic: bool,
    pub selection: Option<Selection>,
}

fn symbols(x: &AffineForm, y: &AffineForm) -> BTreeSet<Symbol> {
    x.coeffs().keys().chain(y.coeffs().keys()).copied().collect()
}

/// Element of `[a ∧ b, a ∨ b]` of least magnitude.
pub fn argmin(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() <= b.abs() {
        a
    } else {
        b
    }
}

/// Element of `[a ∧ b, a ∨ b]` of largest magnitude; `a` on ties.
pub fn argmax(a: f64, b: f64) -> f64 {
    if b.abs() > a.abs() {
        b
    } else {
        a
    }
}

pub fn leq(x: &AffineForm, y: &AffineForm) -> bool {
    leq_tol(x, y, DEFAULT_TOL)
}

/// `‖x - y‖_A <= β^y - β^x`.
pub fn leq_tol(x: &AffineForm, y: &AffineForm, tol: f64) -> bool {
    x.dist_a(y) <= y.beta() - x.beta() + tol
}

pub fn in_cone(x: &AffineForm) -> bool {
    in_cone_tol(x, DEFAULT_TOL)
}

/// `‖x‖_A <= β`, i.e. `0 <= x`.
pub fn in_cone_tol(x: &AffineForm, tol: f64) -> bool {
    x.norm_a() <= x.beta() + tol
}

pub fn generic_position(x: &AffineForm, y: &AffineForm) -> bool {
    generic_position_tol(x, y, DEFAULT_TOL)
}

/// False exactly when one range lies strictly inside the other at both ends.
pub fn generic_position_tol(x: &AffineForm, y: &AffineForm, tol: f64) -> bool {
    let (gx, gy) = (x.bounds(), y.bounds());
    !(strictly_inside(&gx, &gy, tol) || strictly_inside(&gy, &gx, tol))
}

fn strictly_inside(inner: &Interval, outer: &Interval, tol: f64) -> bool {
    outer.lo < inner.lo - tol && inner.hi < outer.hi - tol
}

pub fn mub_exists(x: &AffineForm, y: &AffineForm) -> bool {
    mub_exists_tol(x, y, DEFAULT_TOL)
}

/// `‖x - y‖_A >= |β^y - β^x|`. The same condition governs lower bounds.
pub fn mub_exists_tol(x: &AffineForm, y: &AffineForm, tol: f64) -> bool {
    x.dist_a(y) + tol >= (y.beta() - x.beta()).abs()
}

pub fn join_mub(x: &AffineForm, y: &AffineForm) -> MubResult {
    join_mub_tol(x, y, DEFAULT_TOL)
}

/// A minimal upper bound, when one exists.
///
/// In generic position the bound is unique and its range is the hull of the
/// operand ranges. Otherwise the result keeps the outer operand's center and
/// range, and shrinks its coefficients towards `argmin` in increasing symbol
/// order until the minimal `β` is reached.
pub fn join_mub_tol(x: &AffineForm, y: &AffineForm, tol: f64) -> MubResult {
    let generic = generic_position_tol(x, y, tol);
    if !mub_exists_tol(x, y, tol) {
        return MubResult { form: None, generic, selection: None };
    }
    let d = x.dist_a(y);
    let beta = 0.5 * (d + x.beta() + y.beta());
    if generic {
        let hull = x.bounds().hull(&y.bounds());
        let coeffs = symbols(x, y)
            .into_iter()
            .map(|s| (s, argmin(x.coeff(s), y.coeff(s))));
        return MubResult {
            form: Some(AffineForm::new(hull.mid(), coeffs, beta)),
            generic,
            selection: Some(Selection::GenericUnique),
        };
    }
    let (inner, outer) = if strictly_inside(&x.bounds(), &y.bounds(), tol) { (x, y) } else { (y, x) };
    let mut budget = (beta - outer.beta()).max(0.0);
    let mut coeffs = Vec::new();
    for s in symbols(x, y) {
        let a = outer.coeff(s);
        let floor = argmin(inner.coeff(s), a).abs();
        let cut = (a.abs() - floor).min(budget);
        budget -= cut;
        coeffs.push((s, a.signum() * (a.abs() - cut)));
    }
    if budget > tol {
        // Not reachable when the existence condition holds; fall back to a
        // sound upper bound rather than return a non-bound.
        return MubResult {
            form: Some(widen_nabla(x, y)),
            generic,
            selection: Some(Selection::NongenericCanonical),
        };
    }
    MubResult {
        form: Some(AffineForm::new(outer.center(), coeffs, beta)),
        generic,
        selection: Some(Selection::NongenericCanonical),
    }
}

pub fn meet_mlb(x: &AffineForm, y: &AffineForm) -> MubResult {
    meet_mlb_tol(x, y, DEFAULT_TOL)
}

/// A maximal lower bound, when one exists. Its `β` may be negative.
///
/// When the operands are in generic position and no coefficient changes sign
/// between them, the bound is the `argmax` form centered on the intersection.
/// Otherwise each component is placed in `[α^x ∧ α^y, α^x ∨ α^y]`: starting
/// from the same `argmax` guess, components are moved in increasing index
/// order (center first) until the distance to `x` equals `β^x - β^z`.
pub fn meet_mlb_tol(x: &AffineForm, y: &AffineForm, tol: f64) -> MubResult {
    let generic = generic_position_tol(x, y, tol);
    if !mub_exists_tol(x, y, tol) {
        return MubResult { form: None, generic, selection: None };
    }
    let d = x.dist_a(y);
    let beta = 0.5 * (x.beta() + y.beta() - d);
    let (gx, gy) = (x.bounds(), y.bounds());
    let center = 0.5 * (gx.lo.max(gy.lo) + gx.hi.min(gy.hi));
    let syms = symbols(x, y);
    let same_sign = syms.iter().all(|s| x.coeff(*s) * y.coeff(*s) >= 0.0);
    if generic && same_sign {
        let coeffs = syms.into_iter().map(|s| (s, argmax(x.coeff(s), y.coeff(s))));
        return MubResult {
            form: Some(AffineForm::new(center, coeffs, beta)),
            generic,
            selection: Some(Selection::GenericUnique),
        };
    }

    // Index 0 is the center, the rest follow symbol order.
    let mut xs = vec![x.center()];
    let mut ys = vec![y.center()];
    let mut zs = vec![center.clamp(x.center().min(y.center()), x.center().max(y.center()))];
    let keys: Vec<Symbol> = syms.into_iter().collect();
    for s in &keys {
        xs.push(x.coeff(*s));
        ys.push(y.coeff(*s));
        zs.push(argmax(x.coeff(*s), y.coeff(*s)));
    }
    let target = x.beta() - beta;
    let mut gap = target - xs.iter().zip(&zs).map(|(a, z)| (z - a).abs()).sum::<f64>();
    for i in 0..zs.len() {
        if gap == 0.0 {
            break;
        }
        let dir = (ys[i] - xs[i]).signum();
        let pos = (zs[i] - xs[i]).abs();
        let span = (ys[i] - xs[i]).abs();
        let next = (pos + gap).clamp(0.0, span);
        gap -= next - pos;
        zs[i] = xs[i] + dir * next;
    }
    let coeffs = keys.into_iter().zip(zs[1..].iter().copied());
    MubResult {
        form: Some(AffineForm::new(zs[0], coeffs, beta)),
        generic,
        selection: Some(Selection::NongenericCanonical),
    }
}

/// Associative upper bound whose range is the hull of the operand ranges.
pub fn widen_nabla(x: &AffineForm, y: &AffineForm) -> AffineForm {
    let hull = x.bounds().hull(&y.bounds());
    let center = hull.mid();
    let coeffs: Vec<_> = symbols(x, y)
        .into_iter()
        .map(|s| (s, argmin(x.coeff(s), y.coeff(s))))
        .collect();
    let z = AffineForm::new(center, coeffs, 0.0);
    let beta = hull.hi - center - z.norm_l();
    z.widened_by(beta)
}

pub fn ll(x: &AffineForm, y: &AffineForm) -> bool {
    ll_tol(x, y, DEFAULT_TOL)
}

/// Computational order: `x ≪ y` iff `widen_nabla(x, y) = y`.
pub fn ll_tol(x: &AffineForm, y: &AffineForm, tol: f64) -> bool {
    if !x.bounds().subset_within(&y.bounds(), tol) {
        return false;
    }
    symbols(x, y).into_iter().all(|s| {
        let (a, b) = (x.coeff(s), y.coeff(s));
        (-tol <= b && b <= a + tol) || (a - tol <= b && b <= tol)
    })
}

/// Greatest lower bound for `≪`. Fails when the ranges are disjoint.
pub fn meet_delta(x: &AffineForm, y: &AffineForm) -> Result<AffineForm, DomainError> {
    let cap = x.bounds().intersect(&y.bounds()).ok_or(DomainError::EmptyIntersection)?;
    let center = cap.mid();
    let coeffs: Vec<_> = symbols(x, y)
        .into_iter()
        .map(|s| {
            let (a, b) = (x.coeff(s), y.coeff(s));
            (s, if a * b >= 0.0 { argmax(a, b) } else { 0.0 })
        })
        .collect();
    let z = AffineForm::new(center, coeffs, 0.0);
    let beta = cap.hi - center - z.norm_l();
    Ok(z.widened_by(beta))
}

pub fn widen_w(x: &AffineForm, y: &AffineForm) -> AffineForm {
    widen_w_tol(x, y, DEFAULT_TOL)
}

/// Keeps only the coefficients on which both operands agree; the rest of the
/// hull goes into `β`.
pub fn widen_w_tol(x: &AffineForm, y: &AffineForm, tol: f64) -> AffineForm {
    let hull = x.bounds().hull(&y.bounds());
    let center = hull.mid();
    let coeffs: Vec<_> = symbols(x, y)
        .into_iter()
        .filter_map(|s| {
            let (a, b) = (x.coeff(s), y.coeff(s));
            ((a - b).abs() <= tol).then_some((s, a))
        })
        .collect();
    let z = AffineForm::new(center, coeffs, 0.0);
    let beta = (hull.hi - center - z.norm_l()).max(0.0);
    z.widened_by(beta)
}
