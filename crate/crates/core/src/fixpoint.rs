//! `(i, c, ⊔)` iteration schemes.
//!
//! The loop body is unrolled `i` times, then iterated `c` steps at a time:
//! `x[n+1] = x[n] ⊔ F^c(!x[n])`. The perturbation of each joined value is
//! moved onto a fresh noise symbol before the next `F^c` evaluation.
//!
//! Filters are iterated on their output only. The analysis state holds the
//! last `n` joined outputs, each shifted once, and feeds them to `F^c` as the
//! `n` lagged outputs; the newest output produced is joined into the head.

use std::collections::BTreeMap;

use crate::error::{FilterError, SchemeError};
use crate::filter::{FilterSpec, InputMode, Matrix};
use crate::form::{AffineForm, Symbol, SymbolContext};
use crate::interval::Interval;
use crate::order::{join_mub_tol, widen_nabla, widen_w_tol};
use crate::semantics::{transfer_stmt, AbstractEnv, Expr, Lifted, Program, Stmt};

/// Name under which filter outputs are reported.
pub const FILTER_OUTPUT: &str = "x";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JoinOp {
    /// A minimal upper bound where one exists, `∇` otherwise.
    Mub,
    Nabla,
    /// `∇` for the first `after` iterations, then `W`.
    WidenW { after: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub unroll: usize,
    pub cycle: usize,
    pub join: JoinOp,
    /// Leaving this range reports `⊤`.
    pub bound: Interval,
    /// Componentwise stopping tolerance between consecutive iterates.
    pub tol: f64,
    pub max_iter: usize,
    /// Fold coefficients below this magnitude into `β` after each join.
    pub compact: Option<f64>,
}

pub const DEFAULT_SCHEME_TOL: f64 = 1e-13;

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            unroll: 0,
            cycle: 1,
            join: JoinOp::Nabla,
            bound: Interval { lo: -1e6, hi: 1e6 },
            tol: DEFAULT_SCHEME_TOL,
            max_iter: 1000,
            compact: None,
        }
    }
}

impl SchemeConfig {
    pub fn new(unroll: usize, cycle: usize, join: JoinOp) -> Self {
        SchemeConfig { unroll, cycle, join, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        if self.cycle == 0 {
            return Err(SchemeError::Config("cycle length must be at least 1".into()));
        }
        if !(self.bound.lo < self.bound.hi) {
            return Err(SchemeError::Config("bound must have lo < hi".into()));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(SchemeError::Config("tolerance must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(SchemeError::Config("max_iter must be at least 1".into()));
        }
        if let Some(t) = self.compact {
            if !(t >= 0.0) {
                return Err(SchemeError::Config("compact threshold must be non-negative".into()));
            }
        }
        Ok(())
    }

    fn join(&self, iteration: usize, old: &AffineForm, new: &AffineForm) -> AffineForm {
        let z = match self.join {
            JoinOp::Nabla => widen_nabla(old, new),
            JoinOp::Mub => join_mub_tol(old, new, self.tol)
                .form
                .unwrap_or_else(|| widen_nabla(old, new)),
            JoinOp::WidenW { after } if iteration > after => widen_w_tol(old, new, self.tol),
            JoinOp::WidenW { .. } => widen_nabla(old, new),
        };
        match self.compact {
            Some(t) => z.compact(t),
            None => z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Fixpoint,
    Top,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub iteration: usize,
    pub values: BTreeMap<String, Lifted>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub status: Status,
    pub iterations: usize,
    /// Loop-head value joined with every value seen before the first full
    /// iteration completed.
    pub invariant: BTreeMap<String, Lifted>,
    /// Value at the loop head, after the post-fixpoint check.
    pub loop_head: BTreeMap<String, Lifted>,
    /// Perturbation added to the loop head so that one more `F^c` stays in it.
    pub margin: f64,
    /// Whether the post-fixpoint check succeeded.
    pub verified: bool,
    pub trace: Vec<TraceStep>,
}

impl IterationReport {
    pub fn gamma(&self, var: &str) -> Option<Interval> {
        self.invariant.get(var).and_then(Lifted::gamma)
    }

    pub fn form(&self, var: &str) -> Option<&AffineForm> {
        self.invariant.get(var).and_then(Lifted::form)
    }
}

pub enum Target<'a> {
    Program(&'a Program),
    Filter(&'a FilterSpec),
}

pub fn iterate_scheme(target: &Target<'_>, cfg: &SchemeConfig) -> Result<IterationReport, SchemeError> {
    match target {
        Target::Program(p) => iterate_program(p, cfg),
        Target::Filter(f) => iterate_filter(f, cfg),
    }
}

fn escapes(f: &AffineForm, bound: &Interval) -> bool {
    let g = f.bounds();
    !g.is_finite() || !g.subset_of(bound) || f.beta().is_nan()
}

/// `β` slack covering rounding in the last reported digits.
fn rounding_slack(f: &AffineForm) -> f64 {
    8.0 * f64::EPSILON * f.l1().max(f64::MIN_POSITIVE)
}

/// `cand ≪ head`, with exact range inclusion and coefficient conditions up to
/// `tol`.
fn stays_in(cand: &AffineForm, head: &AffineForm, tol: f64) -> bool {
    if !cand.bounds().subset_of(&head.bounds()) {
        return false;
    }
    cand.coeffs().keys().chain(head.coeffs().keys()).all(|s| {
        let (a, b) = (cand.coeff(*s), head.coeff(*s));
        (-tol <= b && b <= a + tol) || (a - tol <= b && b <= tol)
    })
}

const PAD_ATTEMPTS: usize = 40;

fn pad_schedule(tol: f64, scale: f64) -> impl Iterator<Item = f64> {
    let first = tol.max(1e-15) * scale.max(1.0);
    (0..PAD_ATTEMPTS).map(move |k| first * 4f64.powi(k as i32))
}

// ---------------------------------------------------------------------------
// Programs

struct Shape<'a> {
    prelude: Vec<&'a Stmt>,
    body: Option<&'a Stmt>,
}

fn flatten<'a>(s: &'a Stmt, out: &mut Vec<&'a Stmt>) {
    match s {
        Stmt::Seq(ss) => ss.iter().for_each(|s| flatten(s, out)),
        other => out.push(other),
    }
}

fn contains_loop(s: &Stmt) -> bool {
    match s {
        Stmt::WhileTrue(_) => true,
        Stmt::Seq(ss) => ss.iter().any(contains_loop),
        _ => false,
    }
}

fn shape(p: &Program) -> Result<Shape<'_>, SchemeError> {
    let mut flat = Vec::new();
    p.body.iter().for_each(|s| flatten(s, &mut flat));
    let mut prelude = Vec::new();
    let mut body = None;
    for s in flat {
        match (s, body) {
            (Stmt::WhileTrue(b), None) => {
                if contains_loop(b) {
                    return Err(SchemeError::Shape("nested loops are not supported".into()));
                }
                body = Some(b.as_ref());
            }
            (Stmt::WhileTrue(_), Some(_)) => {
                return Err(SchemeError::Shape("only one loop is supported".into()));
            }
            (_, Some(_)) => {
                return Err(SchemeError::Shape("statements after an infinite loop are unreachable".into()));
            }
            (s, None) => prelude.push(s),
        }
    }
    Ok(Shape { prelude, body })
}

fn shift_env(env: &AbstractEnv, ctx: &mut SymbolContext) -> AbstractEnv {
    env.iter()
        .map(|(k, v)| {
            let v = match v {
                Lifted::Value(f) => Lifted::Value(f.shift(ctx)),
                other => other.clone(),
            };
            (k.clone(), v)
        })
        .collect()
}

fn run_body(body: &Stmt, env: &AbstractEnv, times: usize, ctx: &mut SymbolContext, seen: Option<&mut Vec<AbstractEnv>>) -> Result<AbstractEnv, SchemeError> {
    let mut cur = env.clone();
    let mut seen = seen;
    for _ in 0..times {
        cur = transfer_stmt(body, &cur, ctx)?;
        if let Some(s) = seen.as_deref_mut() {
            s.push(cur.clone());
        }
    }
    Ok(cur)
}

fn iterate_program(p: &Program, cfg: &SchemeConfig) -> Result<IterationReport, SchemeError> {
    cfg.validate()?;
    let shape = shape(p)?;
    let mut ctx = SymbolContext::new();
    // Declared variables start at zero.
    let mut env: AbstractEnv = p.decls.iter().map(|d| (d.clone(), Lifted::Value(AffineForm::zero()))).collect();
    for s in &shape.prelude {
        env = transfer_stmt(s, &env, &mut ctx)?;
    }
    let Some(body) = shape.body else {
        return Ok(IterationReport {
            status: Status::Fixpoint,
            iterations: 1,
            invariant: env.clone(),
            loop_head: env.clone(),
            margin: 0.0,
            verified: true,
            trace: vec![TraceStep { iteration: 1, values: env }],
        });
    };

    let mut seen = vec![env.clone()];
    let mut head = run_body(body, &env, cfg.unroll, &mut ctx, Some(&mut seen))?;
    let mut trace = vec![TraceStep { iteration: 0, values: head.clone() }];
    let mut status = Status::MaxIter;
    let mut iterations = cfg.max_iter;

    for n in 1..=cfg.max_iter {
        let shifted = shift_env(&head, &mut ctx);
        let first = if n == 1 { Some(&mut seen) } else { None };
        let cand = run_body(body, &shifted, cfg.cycle, &mut ctx, first)?;
        let mut next = head.clone();
        let mut top = false;
        for (k, v) in &cand {
            let old = head.get(k).cloned().unwrap_or(Lifted::Bottom);
            let mut joined = old.join_with(v, |a, b| cfg.join(n, a, b));
            if let Lifted::Value(f) = &joined {
                if escapes(f, &cfg.bound) {
                    joined = Lifted::Top;
                }
            }
            top |= joined == Lifted::Top;
            next.insert(k.clone(), joined);
        }
        trace.push(TraceStep { iteration: n, values: next.clone() });
        let stable = next.iter().all(|(k, v)| match (v, head.get(k)) {
            (Lifted::Value(a), Some(Lifted::Value(b))) => a.approx_eq(b, cfg.tol),
            (a, Some(b)) => a == b,
            _ => false,
        });
        head = next;
        if top {
            status = Status::Top;
            iterations = n;
            break;
        }
        if stable {
            status = Status::Fixpoint;
            iterations = n;
            break;
        }
    }

    let (loop_head, margin, verified) = if status == Status::Fixpoint {
        verify_program(body, &head, cfg, &mut ctx)?
    } else {
        (head.clone(), 0.0, false)
    };

    let mut invariant = loop_head.clone();
    for env in &seen {
        for (k, v) in env {
            let cur = invariant.get(k).cloned().unwrap_or(Lifted::Bottom);
            invariant.insert(k.clone(), cur.join_with(v, widen_nabla));
        }
    }
    for v in invariant.values_mut() {
        if let Lifted::Value(f) = v {
            *f = f.widened_by(rounding_slack(f));
        }
    }
    Ok(IterationReport { status, iterations, invariant, loop_head, margin, verified, trace })
}

fn verify_program(
    body: &Stmt,
    head: &AbstractEnv,
    cfg: &SchemeConfig,
    ctx: &mut SymbolContext,
) -> Result<(AbstractEnv, f64, bool), SchemeError> {
    let scale = head
        .values()
        .filter_map(|v| v.form())
        .map(|f| f.l1())
        .fold(0.0, f64::max);
    for delta in pad_schedule(cfg.tol, scale) {
        let padded: AbstractEnv = head
            .iter()
            .map(|(k, v)| {
                let v = match v {
                    Lifted::Value(f) => Lifted::Value(f.widened_by(delta)),
                    other => other.clone(),
                };
                (k.clone(), v)
            })
            .collect();
        let shifted = shift_env(&padded, ctx);
        let cand = run_body(body, &shifted, cfg.cycle, ctx, None)?;
        let ok = cand.iter().all(|(k, v)| match (v, padded.get(k)) {
            (Lifted::Bottom, _) => true,
            (_, Some(Lifted::Top)) => true,
            (Lifted::Value(c), Some(Lifted::Value(h))) => stays_in(c, h, cfg.tol),
            _ => false,
        });
        if ok {
            return Ok((padded, delta, true));
        }
    }
    Ok((head.clone(), 0.0, false))
}

// ---------------------------------------------------------------------------
// Filters

struct FilterRun<'a> {
    spec: &'a FilterSpec,
    ctx: SymbolContext,
    shared: Option<Symbol>,
}

impl FilterRun<'_> {
    fn input(&mut self) -> AffineForm {
        let iv = self.spec.input();
        match self.spec.mode() {
            InputMode::Independent => AffineForm::from_interval(iv, &mut self.ctx),
            InputMode::Constant if iv.radius() == 0.0 => AffineForm::constant(iv.lo),
            InputMode::Constant => {
                let s = *self.shared.get_or_insert_with(|| self.ctx.fresh());
                AffineForm::from_interval_with(iv, s)
            }
        }
    }

    /// One step of the recurrence; slides both windows.
    fn step(&mut self, outs: &mut Vec<AffineForm>, ins: &mut Vec<AffineForm>) -> AffineForm {
        ins.push(self.input());
        let mut acc = AffineForm::zero();
        for (a, x) in self.spec.a().iter().zip(outs.iter()) {
            acc = acc.add(&x.scale(*a));
        }
        for (b, e) in self.spec.b().iter().zip(ins.iter()) {
            acc = acc.add(&e.scale(*b));
        }
        ins.remove(0);
        outs.remove(0);
        outs.push(acc.clone());
        acc
    }

    fn run(&mut self, mut outs: Vec<AffineForm>, mut ins: Vec<AffineForm>, times: usize, seen: Option<&mut Vec<AffineForm>>) -> AffineForm {
        let mut seen = seen;
        let mut last = outs.last().cloned().unwrap_or_default();
        for _ in 0..times {
            last = self.step(&mut outs, &mut ins);
            if let Some(s) = seen.as_deref_mut() {
                s.push(last.clone());
            }
        }
        last
    }

    fn fresh_inputs(&mut self) -> Vec<AffineForm> {
        (0..self.spec.order()).map(|_| self.input()).collect()
    }
}

fn single(f: AffineForm) -> BTreeMap<String, Lifted> {
    BTreeMap::from([(FILTER_OUTPUT.to_string(), Lifted::Value(f))])
}

fn iterate_filter(spec: &FilterSpec, cfg: &SchemeConfig) -> Result<IterationReport, SchemeError> {
    cfg.validate()?;
    let n = spec.order();
    if n == 0 {
        return Err(SchemeError::Filter(FilterError::NoState));
    }
    let mut run = FilterRun { spec, ctx: SymbolContext::new(), shared: None };
    let mut outs: Vec<AffineForm> = spec.init().iter().map(|iv| AffineForm::from_interval(*iv, &mut run.ctx)).collect();
    let mut ins: Vec<AffineForm> = (0..n).map(|_| run.input()).collect();
    let mut seen = outs.clone();
    for _ in 0..cfg.unroll {
        let x = run.step(&mut outs, &mut ins);
        seen.push(x);
    }

    // Joined outputs, oldest first, with their shifted copies.
    let mut heads: Vec<AffineForm> = outs.clone();
    let mut shifted: Vec<AffineForm> = outs.clone();
    let mut head = heads[n - 1].clone();
    let mut trace = vec![TraceStep { iteration: 0, values: single(head.clone()) }];
    let mut status = Status::MaxIter;
    let mut iterations = cfg.max_iter;

    for m in 1..=cfg.max_iter {
        let slots = shifted[shifted.len() - n..].to_vec();
        let inputs = if m == 1 { ins.clone() } else { run.fresh_inputs() };
        let first = if m == 1 { Some(&mut seen) } else { None };
        let cand = run.run(slots, inputs, cfg.cycle, first);
        let next = cfg.join(m, &head, &cand);
        trace.push(TraceStep { iteration: m, values: single(next.clone()) });
        if escapes(&next, &cfg.bound) {
            status = Status::Top;
            iterations = m;
            head = next;
            break;
        }
        let stable = next.approx_eq(&head, cfg.tol);
        heads.push(next.clone());
        shifted.push(next.shift(&mut run.ctx));
        if heads.len() > n {
            heads.remove(0);
            shifted.remove(0);
        }
        head = next;
        if stable {
            status = Status::Fixpoint;
            iterations = m;
            break;
        }
    }

    if status == Status::Top {
        let top = BTreeMap::from([(FILTER_OUTPUT.to_string(), Lifted::Top)]);
        return Ok(IterationReport {
            status,
            iterations,
            invariant: top.clone(),
            loop_head: top,
            margin: 0.0,
            verified: false,
            trace,
        });
    }

    let (loop_head, margin, verified) = if status == Status::Fixpoint {
        verify_filter(&mut run, &head, cfg)
    } else {
        (head.clone(), 0.0, false)
    };
    let mut reported = seen.iter().fold(loop_head.clone(), |acc, x| widen_nabla(&acc, x));
    reported = reported.widened_by(rounding_slack(&reported));
    Ok(IterationReport {
        status,
        iterations,
        invariant: single(reported),
        loop_head: single(loop_head),
        margin,
        verified,
        trace,
    })
}

fn verify_filter(run: &mut FilterRun<'_>, head: &AffineForm, cfg: &SchemeConfig) -> (AffineForm, f64, bool) {
    let n = run.spec.order();
    for delta in pad_schedule(cfg.tol, head.l1()) {
        let padded = head.widened_by(delta);
        let slots: Vec<AffineForm> = (0..n).map(|_| padded.shift(&mut run.ctx)).collect();
        let inputs = run.fresh_inputs();
        let cand = run.run(slots, inputs, cfg.cycle, None);
        if stays_in(&cand, &padded, cfg.tol) {
            return (padded, delta, true);
        }
    }
    (head.clone(), 0.0, false)
}

// ---------------------------------------------------------------------------
// Filter helpers

/// Smallest `q <= max_q` such that every row of `A^q` has ℓ1 norm below one,
/// with `A^q` itself. `a` is the last companion row.
pub fn stability_order(a: &[f64], max_q: usize) -> Result<(usize, Matrix), FilterError> {
    if a.is_empty() {
        return Err(FilterError::NoState);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(FilterError::NonFinite("a"));
    }
    let n = a.len();
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate().take(n - 1) {
        row[i + 1] = 1.0;
    }
    rows[n - 1] = a.to_vec();
    let base = Matrix::from_rows(&rows);
    let mut p = base.clone();
    for q in 1..=max_q {
        let norm = p.max_row_l1();
        if norm < 1.0 {
            return Ok((q, p));
        }
        if !norm.is_finite() || norm > 1e12 {
            return Err(FilterError::Unstable);
        }
        p = p.mul(&base);
    }
    Err(FilterError::Undetermined(max_q))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Divergence {
    /// The iterate left the bound at this iteration.
    Escaped { iteration: usize, last: Interval },
    NotConverged { last: Interval },
}

/// Plain interval Kleene iteration `Z = init ∪ (Σ a·Z + Σ b·E)` with a single
/// interval shared by every lag.
pub fn interval_kleene(spec: &FilterSpec, bound: Interval, max_iter: usize) -> Result<Interval, Divergence> {
    let e = spec.input();
    let mut z = spec
        .init()
        .iter()
        .copied()
        .reduce(|a, b| a.hull(&b))
        .unwrap_or(Interval::point(0.0));
    let drive = spec.b().iter().fold(Interval::point(0.0), |acc, b| acc.add(&e.scale(*b)));
    for iteration in 1..=max_iter {
        let fed = spec.a().iter().fold(drive, |acc, a| acc.add(&z.scale(*a)));
        let next = z.hull(&fed);
        if !next.is_finite() || !next.subset_of(&bound) {
            return Err(Divergence::Escaped { iteration, last: next });
        }
        if next == z {
            return Ok(z);
        }
        z = next;
    }
    Err(Divergence::NotConverged { last: z })
}

fn out_var(i: usize) -> String {
    format!("x{i}")
}

fn in_var(i: usize) -> String {
    format!("e{i}")
}

const SHARED_INPUT: &str = "u";

/// One step of the filter as a statement over `x0..x{n-1}` (oldest first) and
/// `e0..e{n-1}`; the newest output ends up in `x{n-1}`.
fn filter_step(spec: &FilterSpec) -> Stmt {
    let n = spec.order();
    let new_in = in_var(n);
    let new_out = out_var(n);
    let mut stmts = vec![match spec.mode() {
        InputMode::Independent => Stmt::input(&new_in, spec.input()),
        InputMode::Constant => Stmt::assign(&new_in, Expr::var(SHARED_INPUT)),
    }];
    let outs: Vec<String> = (0..n).map(out_var).collect();
    let ins: Vec<String> = (0..=n).map(in_var).collect();
    let mut terms: Vec<(f64, &str)> = spec.a().iter().zip(&outs).map(|(a, v)| (*a, v.as_str())).collect();
    terms.extend(spec.b().iter().zip(&ins).map(|(b, v)| (*b, v.as_str())));
    stmts.push(Stmt::assign(&new_out, Expr::linear(&terms)));
    for i in 0..n {
        stmts.push(Stmt::assign(&out_var(i), Expr::var(&out_var(i + 1))));
        stmts.push(Stmt::assign(&in_var(i), Expr::var(&in_var(i + 1))));
    }
    Stmt::Seq(stmts)
}

/// Loop body of the filter composed `c` times.
pub fn cyclic_unfold(spec: &FilterSpec, c: usize) -> Stmt {
    let step = filter_step(spec);
    Stmt::Seq(vec![step; c.max(1)])
}

/// The filter as a program: initial values and inputs, then the loop.
pub fn filter_program(spec: &FilterSpec) -> Program {
    let n = spec.order();
    let mut decls: Vec<String> = (0..=n).map(out_var).collect();
    decls.extend((0..=n).map(in_var));
    let mut body = Vec::new();
    for (i, iv) in spec.init().iter().enumerate() {
        body.push(if iv.radius() == 0.0 {
            Stmt::assign(&out_var(i), Expr::Const(iv.lo))
        } else {
            Stmt::input(&out_var(i), *iv)
        });
    }
    if spec.mode() == InputMode::Constant {
        decls.push(SHARED_INPUT.to_string());
        body.push(Stmt::input(SHARED_INPUT, spec.input()));
    }
    for i in 0..n {
        body.push(match spec.mode() {
            InputMode::Independent => Stmt::input(&in_var(i), spec.input()),
            InputMode::Constant => Stmt::assign(&in_var(i), Expr::var(SHARED_INPUT)),
        });
    }
    body.push(Stmt::WhileTrue(Box::new(filter_step(spec))));
    Program { decls, body }
}
