//! Linear recursive filters and their exact unfolding.
//!
//! A filter of order `n` computes
//! `x[k] = Σ_{i<n} a[i]·x[k-n+i] + Σ_{j<=n} b[j]·e[k-n+j]`.
//! Both coefficient vectors are stored oldest term first, so `a` is the last
//! row of the companion matrix. Indices are time steps: `x[0..n]` are the
//! initial values, and inputs `e[0], e[1], …` are drawn independently from the
//! input range (or once, in constant mode).

use crate::error::FilterError;
use crate::form::{AffineForm, Symbol, SymbolContext};
use crate::interval::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputMode {
    /// Every step consumes a new, unrelated input.
    #[default]
    Independent,
    /// A single unknown input value is held for the whole run.
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    a: Vec<f64>,
    b: Vec<f64>,
    input: Interval,
    init: Vec<Interval>,
    mode: InputMode,
}

impl FilterSpec {
    /// `a` and `b` oldest term first; `init` is `x[0..n]` in time order.
    pub fn new(
        a: Vec<f64>,
        b: Vec<f64>,
        input: Interval,
        init: Vec<Interval>,
        mode: InputMode,
    ) -> Result<Self, FilterError> {
        let n = a.len();
        if b.len() != n + 1 {
            return Err(FilterError::Shape { order: n, what: "b", len: b.len() });
        }
        if init.len() != n {
            return Err(FilterError::Shape { order: n, what: "init", len: init.len() });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(FilterError::NonFinite("a"));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(FilterError::NonFinite("b"));
        }
        if !input.is_finite() || init.iter().any(|iv| !iv.is_finite()) {
            return Err(FilterError::NonFinite("ranges"));
        }
        Ok(FilterSpec { a, b, input, init, mode })
    }

    /// Same as [`FilterSpec::new`] with coefficients listed newest term first
    /// (`a` for `x[k-1], x[k-2], …`, `b` for `e[k], e[k-1], …`).
    pub fn from_lags(
        a_lags: Vec<f64>,
        b_lags: Vec<f64>,
        input: Interval,
        init: Vec<Interval>,
        mode: InputMode,
    ) -> Result<Self, FilterError> {
        let a = a_lags.into_iter().rev().collect();
        let b = b_lags.into_iter().rev().collect();
        Self::new(a, b, input, init, mode)
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn a_lags(&self) -> Vec<f64> {
        self.a.iter().rev().copied().collect()
    }

    pub fn b_lags(&self) -> Vec<f64> {
        self.b.iter().rev().copied().collect()
    }

    pub fn input(&self) -> Interval {
        self.input
    }

    pub fn init(&self) -> &[Interval] {
        &self.init
    }

    pub fn mode(&self) -> InputMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: InputMode) -> Self {
        self.mode = mode;
        self
    }
}

/// Dense square matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Matrix { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Matrix { n, data: rows.concat() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let v = self.get(i, k);
                if v == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += v * other.get(k, j);
                }
            }
        }
        Matrix { n, data }
    }

    /// `max_i Σ_j |A_ij|`.
    pub fn max_row_l1(&self) -> f64 {
        self.data
            .chunks(self.n.max(1))
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Companion matrix: ones on the super-diagonal, `a` on the last row.
pub fn companion(spec: &FilterSpec) -> Matrix {
    let n = spec.order();
    let mut m = Matrix { n, data: vec![0.0; n * n] };
    for i in 0..n.saturating_sub(1) {
        m.data[i * n + i + 1] = 1.0;
    }
    if n > 0 {
        m.data[(n - 1) * n..].copy_from_slice(&spec.a);
    }
    m
}

/// Exact unfolding of the filter: every state is a plain affine form over the
/// symbols of the initial ranges and of the inputs.
#[derive(Debug, Clone)]
pub struct Unfolder {
    spec: FilterSpec,
    ctx: SymbolContext,
    /// Symbol of each dense column.
    syms: Vec<Symbol>,
    /// Last `n` states, oldest first, as (center, dense coefficients).
    window: Vec<(f64, Vec<f64>)>,
    /// Inputs `e[k-n..k]` as (center, column, radius).
    inputs: Vec<(f64, Option<usize>, f64)>,
    shared: Option<usize>,
    latest: Option<(f64, Vec<f64>)>,
    /// Time index of the next state to compute.
    next: usize,
}

impl Unfolder {
    pub fn new(spec: &FilterSpec) -> Self {
        let mut u = Unfolder {
            spec: spec.clone(),
            ctx: SymbolContext::new(),
            syms: Vec::new(),
            window: Vec::new(),
            inputs: Vec::new(),
            shared: None,
            latest: None,
            next: spec.order(),
        };
        let init = spec.init.clone();
        for iv in init {
            let mut coeffs = Vec::new();
            if iv.radius() != 0.0 {
                let col = u.column();
                coeffs.resize(col + 1, 0.0);
                coeffs[col] = iv.radius();
            }
            u.window.push((iv.mid(), coeffs));
        }
        for _ in 0..spec.order() {
            let e = u.draw_input();
            u.inputs.push(e);
        }
        u
    }

    fn column(&mut self) -> usize {
        self.syms.push(self.ctx.fresh());
        self.syms.len() - 1
    }

    fn draw_input(&mut self) -> (f64, Option<usize>, f64) {
        let iv = self.spec.input;
        if iv.radius() == 0.0 {
            return (iv.lo, None, 0.0);
        }
        let col = match (self.spec.mode, self.shared) {
            (InputMode::Constant, Some(c)) => c,
            (InputMode::Constant, None) => {
                let c = self.column();
                self.shared = Some(c);
                c
            }
            (InputMode::Independent, _) => self.column(),
        };
        (iv.mid(), Some(col), iv.radius())
    }

    /// Time index of the state the next call to [`Unfolder::step`] returns.
    pub fn next_index(&self) -> usize {
        self.next
    }

    /// Computes the next state and returns its range.
    pub fn step(&mut self) -> Interval {
        let e = self.draw_input();
        self.inputs.push(e);
        let n = self.spec.order();
        let mut center = 0.0;
        let mut coeffs = vec![0.0; self.syms.len()];
        for (ai, (c, v)) in self.spec.a.iter().zip(&self.window) {
            center += ai * c;
            for (dst, src) in coeffs.iter_mut().zip(v) {
                *dst += ai * src;
            }
        }
        for (bj, (c, col, r)) in self.spec.b.iter().zip(&self.inputs) {
            center += bj * c;
            if let Some(col) = col {
                coeffs[*col] += bj * r;
            }
        }
        self.inputs.remove(0);
        if n > 0 {
            self.window.remove(0);
        }
        let dev: f64 = coeffs.iter().map(|v| v.abs()).sum();
        if n > 0 {
            self.window.push((center, coeffs.clone()));
        }
        self.latest = Some((center, coeffs));
        self.next += 1;
        Interval { lo: center - dev, hi: center + dev }
    }

    /// The most recently computed state (or the newest initial value).
    pub fn current(&self) -> AffineForm {
        match self.latest.as_ref().or(self.window.last()) {
            Some((c, v)) => AffineForm::new(*c, self.syms.iter().copied().zip(v.iter().copied()), 0.0),
            None => AffineForm::zero(),
        }
    }
}

/// Exact form of `x[k]`.
pub fn unfold_exact(spec: &FilterSpec, k: usize) -> AffineForm {
    let n = spec.order();
    if n > 0 && k < n {
        let iv = spec.init[k];
        let mut ctx = SymbolContext::new();
        // Symbols of the initial ranges are allocated in time order.
        let mut sym = None;
        for (i, r) in spec.init.iter().enumerate() {
            if r.radius() != 0.0 {
                let s = ctx.fresh();
                if i == k {
                    sym = Some(s);
                }
            }
        }
        return match sym {
            Some(s) => AffineForm::from_interval_with(iv, s),
            None => AffineForm::constant(iv.lo),
        };
    }
    let mut u = Unfolder::new(spec);
    while u.next_index() <= k {
        u.step();
    }
    u.current()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub running_lo: f64,
    pub running_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsTrace {
    /// Outputs before `x[n + skip]` were computed but left out of the rows.
    pub skip: usize,
    pub rows: Vec<BoundsRow>,
}

impl BoundsTrace {
    /// `(value, k)` of the largest upper bound; earliest `k` on ties.
    pub fn max(&self) -> Option<(f64, usize)> {
        self.rows.iter().fold(None, |best, r| match best {
            Some((v, _)) if v >= r.hi => best,
            _ => Some((r.hi, r.k)),
        })
    }

    pub fn min(&self) -> Option<(f64, usize)> {
        self.rows.iter().fold(None, |best, r| match best {
            Some((v, _)) if v <= r.lo => best,
            _ => Some((r.lo, r.k)),
        })
    }

    pub fn envelope(&self) -> Option<Interval> {
        self.rows.last().map(|r| Interval { lo: r.running_lo, hi: r.running_hi })
    }
}

/// Ranges of `x[n + skip]` through `x[last]`, with running extrema.
pub fn running_bounds(spec: &FilterSpec, last: usize, skip: usize) -> BoundsTrace {
    let mut u = Unfolder::new(spec);
    let first = spec.order() + skip;
    let mut rows = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    while u.next_index() <= last {
        let k = u.next_index();
        let iv = u.step();
        if k < first {
            continue;
        }
        lo = lo.min(iv.lo);
        hi = hi.max(iv.hi);
        rows.push(BoundsRow { k, lo: iv.lo, hi: iv.hi, running_lo: lo, running_hi: hi });
    }
    BoundsTrace { skip, rows }
}
