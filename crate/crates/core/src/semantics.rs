//! Abstract and concrete evaluation of straight-line programs.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::EvalError;
use crate::form::{AffineForm, Symbol, SymbolContext};
use crate::interval::Interval;
use crate::order::widen_nabla;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Scale(f64, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn scale(k: f64, a: Expr) -> Expr {
        Expr::Scale(k, Box::new(a))
    }

    /// `Σ ki·vi`, skipping zero weights. An empty sum is `0`.
    pub fn linear(terms: &[(f64, &str)]) -> Expr {
        let mut acc: Option<Expr> = None;
        for (k, v) in terms {
            if *k == 0.0 {
                continue;
            }
            let t = Expr::scale(*k, Expr::var(v));
            acc = Some(match acc {
                None => t,
                Some(a) => Expr::add(a, t),
            });
        }
        acc.unwrap_or(Expr::Const(0.0))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Scale(k, a) => write!(f, "({k:?} * {a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign(String, Expr),
    /// Binds the variable to `mid + rad·ε` with a fresh `ε` each time it runs.
    Input(String, Interval),
    Seq(Vec<Stmt>),
    WhileTrue(Box<Stmt>),
}

impl Stmt {
    pub fn assign(name: &str, e: Expr) -> Stmt {
        Stmt::Assign(name.to_string(), e)
    }

    pub fn input(name: &str, iv: Interval) -> Stmt {
        Stmt::Input(name.to_string(), iv)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub decls: Vec<String>,
    pub body: Vec<Stmt>,
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.decls.is_empty() {
            writeln!(f, "real {};", self.decls.join(", "))?;
        }
        for s in &self.body {
            write_stmt(f, s, 0)?;
        }
        Ok(())
    }
}

fn write_stmt(f: &mut fmt::Formatter<'_>, s: &Stmt, depth: usize) -> fmt::Result {
    let pad = "  ".repeat(depth);
    match s {
        Stmt::Assign(v, e) => writeln!(f, "{pad}{v} = {e};"),
        Stmt::Input(v, iv) => writeln!(f, "{pad}{v} = input({:?}, {:?});", iv.lo, iv.hi),
        Stmt::Seq(ss) => ss.iter().try_for_each(|s| write_stmt(f, s, depth)),
        Stmt::WhileTrue(b) => {
            writeln!(f, "{pad}while (true) {{")?;
            write_stmt(f, b, depth + 1)?;
            writeln!(f, "{pad}}}")
        }
    }
}

/// A form, or one of the two lattice extremes.
#[derive(Debug, Clone, PartialEq)]
pub enum Lifted {
    Bottom,
    Value(AffineForm),
    Top,
}

impl Lifted {
    pub fn form(&self) -> Option<&AffineForm> {
        match self {
            Lifted::Value(f) => Some(f),
            _ => None,
        }
    }

    /// The range of the value; `⊤` is the whole line and `⊥` is empty.
    pub fn gamma(&self) -> Option<Interval> {
        match self {
            Lifted::Bottom => None,
            Lifted::Value(f) => Some(f.bounds()),
            Lifted::Top => Some(Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }),
        }
    }

    fn map2(&self, other: &Lifted, op: impl FnOnce(&AffineForm, &AffineForm) -> AffineForm) -> Lifted {
        match (self, other) {
            (Lifted::Bottom, _) | (_, Lifted::Bottom) => Lifted::Bottom,
            (Lifted::Top, _) | (_, Lifted::Top) => Lifted::Top,
            (Lifted::Value(a), Lifted::Value(b)) => Lifted::Value(op(a, b)),
        }
    }

    /// Joins with `op`; `⊥` is neutral and `⊤` absorbing.
    pub fn join_with(&self, other: &Lifted, op: impl FnOnce(&AffineForm, &AffineForm) -> AffineForm) -> Lifted {
        match (self, other) {
            (Lifted::Bottom, v) | (v, Lifted::Bottom) => v.clone(),
            (Lifted::Top, _) | (_, Lifted::Top) => Lifted::Top,
            (Lifted::Value(a), Lifted::Value(b)) => Lifted::Value(op(a, b)),
        }
    }
}

impl From<AffineForm> for Lifted {
    fn from(f: AffineForm) -> Self {
        Lifted::Value(f)
    }
}

pub type AbstractEnv = BTreeMap<String, Lifted>;

/// Values of noise symbols and, per variable, of its perturbation symbol.
#[derive(Debug, Clone, Default)]
pub struct NoiseAssignment {
    pub noise: BTreeMap<Symbol, f64>,
    pub perturbation: BTreeMap<String, f64>,
}

pub fn eval_abstract(e: &Expr, env: &AbstractEnv, ctx: &mut SymbolContext) -> Result<Lifted, EvalError> {
    Ok(match e {
        Expr::Const(c) => Lifted::Value(AffineForm::constant(*c)),
        Expr::Var(v) => env.get(v).cloned().ok_or_else(|| EvalError::Unbound(v.clone()))?,
        Expr::Add(a, b) => {
            let (a, b) = (eval_abstract(a, env, ctx)?, eval_abstract(b, env, ctx)?);
            a.map2(&b, |x, y| x.add(y))
        }
        Expr::Sub(a, b) => {
            let (a, b) = (eval_abstract(a, env, ctx)?, eval_abstract(b, env, ctx)?);
            a.map2(&b, |x, y| x.sub(y))
        }
        Expr::Mul(a, b) => {
            let (a, b) = (eval_abstract(a, env, ctx)?, eval_abstract(b, env, ctx)?);
            a.map2(&b, |x, y| x.mul(y, ctx))
        }
        Expr::Scale(k, a) => match eval_abstract(a, env, ctx)? {
            Lifted::Value(x) => Lifted::Value(x.scale(*k)),
            other => other,
        },
    })
}

/// Concrete value of `e` where every variable is the form in `env` evaluated
/// under `nu`.
pub fn eval_concrete(e: &Expr, env: &BTreeMap<String, AffineForm>, nu: &NoiseAssignment) -> Result<f64, EvalError> {
    Ok(match e {
        Expr::Const(c) => *c,
        Expr::Var(v) => {
            let form = env.get(v).ok_or_else(|| EvalError::Unbound(v.clone()))?;
            let u = if form.beta() == 0.0 {
                0.0
            } else {
                *nu.perturbation.get(v).ok_or_else(|| EvalError::MissingPerturbation(v.clone()))?
            };
            form.eval(|s| nu.noise.get(&s).copied(), u)?
        }
        Expr::Add(a, b) => eval_concrete(a, env, nu)? + eval_concrete(b, env, nu)?,
        Expr::Sub(a, b) => eval_concrete(a, env, nu)? - eval_concrete(b, env, nu)?,
        Expr::Mul(a, b) => eval_concrete(a, env, nu)? * eval_concrete(b, env, nu)?,
        Expr::Scale(k, a) => k * eval_concrete(a, env, nu)?,
    })
}

/// Straight-line transfer function. Loops are rejected.
pub fn transfer_stmt(s: &Stmt, env: &AbstractEnv, ctx: &mut SymbolContext) -> Result<AbstractEnv, EvalError> {
    let mut out = env.clone();
    transfer_into(s, &mut out, ctx)?;
    Ok(out)
}

fn transfer_into(s: &Stmt, env: &mut AbstractEnv, ctx: &mut SymbolContext) -> Result<(), EvalError> {
    match s {
        Stmt::Assign(v, e) => {
            let val = eval_abstract(e, env, ctx)?;
            env.insert(v.clone(), val);
        }
        Stmt::Input(v, iv) => {
            env.insert(v.clone(), Lifted::Value(AffineForm::from_interval(*iv, ctx)));
        }
        Stmt::Seq(ss) => {
            for s in ss {
                transfer_into(s, env, ctx)?;
            }
        }
        Stmt::WhileTrue(_) => return Err(EvalError::LoopInBody),
    }
    Ok(())
}

/// Pointwise `∇` of two environments over the union of their variables.
pub fn join_env(a: &AbstractEnv, b: &AbstractEnv) -> AbstractEnv {
    let mut out = a.clone();
    for (k, v) in b {
        let joined = match a.get(k) {
            Some(old) => old.join_with(v, widen_nabla),
            None => v.clone(),
        };
        out.insert(k.clone(), joined);
    }
    out
}

/// Vertices, counter-clockwise, of the joint range of two forms. The
/// perturbation symbols of the two forms are independent.
pub fn joint_gamma_2d(x: &AffineForm, y: &AffineForm) -> Vec<(f64, f64)> {
    let mut gens: Vec<(f64, f64)> = Vec::new();
    let keys: std::collections::BTreeSet<Symbol> = x.coeffs().keys().chain(y.coeffs().keys()).copied().collect();
    for s in keys {
        gens.push((x.coeff(s), y.coeff(s)));
    }
    gens.push((x.beta().abs(), 0.0));
    gens.push((0.0, y.beta().abs()));
    zonotope(x.center(), y.center(), gens)
}

fn zonotope(cx: f64, cy: f64, gens: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    // Orient every generator into the upper half plane and merge parallel ones.
    let mut dirs: Vec<(f64, f64)> = Vec::new();
    for (gx, gy) in gens {
        if gx == 0.0 && gy == 0.0 {
            continue;
        }
        let (gx, gy) = if gy < 0.0 || (gy == 0.0 && gx < 0.0) { (-gx, -gy) } else { (gx, gy) };
        match dirs.iter_mut().find(|(dx, dy)| dx * gy - dy * gx == 0.0) {
            Some(d) => {
                d.0 += gx;
                d.1 += gy;
            }
            None => dirs.push((gx, gy)),
        }
    }
    if dirs.is_empty() {
        return vec![(cx, cy)];
    }
    dirs.sort_by(|a, b| a.1.atan2(a.0).total_cmp(&b.1.atan2(b.0)));
    let (sx, sy) = dirs.iter().fold((0.0, 0.0), |(ax, ay), (gx, gy)| (ax + gx, ay + gy));
    if dirs.len() == 1 {
        return vec![(cx - sx, cy - sy), (cx + sx, cy + sy)];
    }
    // Start from the lowest vertex and walk the generators twice.
    let mut p = (cx + sx, cy + sy);
    for (gx, gy) in &dirs {
        p = (p.0 - 2.0 * gx, p.1 - 2.0 * gy);
    }
    let mut out = Vec::with_capacity(2 * dirs.len());
    for (gx, gy) in &dirs {
        out.push(p);
        p = (p.0 + 2.0 * gx, p.1 + 2.0 * gy);
    }
    for (gx, gy) in &dirs {
        out.push(p);
        p = (p.0 - 2.0 * gx, p.1 - 2.0 * gy);
    }
    out
}

/// Whether `p` lies in the convex polygon `poly` (counter-clockwise), up to
/// `tol`. Degenerate polygons (points, segments) are handled.
pub fn polygon_contains(poly: &[(f64, f64)], p: (f64, f64), tol: f64) -> bool {
    match poly.len() {
        0 => false,
        1 => (poly[0].0 - p.0).hypot(poly[0].1 - p.1) <= tol,
        2 => segment_distance(poly[0], poly[1], p) <= tol,
        n => (0..n).all(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            let len = (b.0 - a.0).hypot(b.1 - a.1);
            if len == 0.0 {
                return true;
            }
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            cross / len >= -tol
        }),
    }
}

fn segment_distance(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    (a.0 + t * dx - p.0).hypot(a.1 + t * dy - p.1)
}
