//! Filter description files, as `key: values` text or JSON.
//!
//! ```text
//! # second-order example
//! order: 2
//! a: 1.4 -0.7          # x[k-1], x[k-2]
//! b: 0.7 -1.3 1.1      # e[k], e[k-1], e[k-2]
//! input: 0 1
//! init: 0 0            # x[0], x[1]
//! input_mode: independent
//! ```
//!
//! `init_range: lo hi` gives every initial value the same range instead, and
//! `init_ranges: lo hi, lo hi` sets them one by one.

use paa_core::{FilterSpec, InputMode, Interval};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpecFileError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("{0}")]
    Invalid(String),
}

/// JSON shape. Coefficient lists are newest term first, as in the text form.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonSpec {
    order: Option<usize>,
    a: Vec<f64>,
    b: Vec<f64>,
    input: [f64; 2],
    #[serde(default)]
    init: Option<Vec<f64>>,
    #[serde(default)]
    init_range: Option<[f64; 2]>,
    #[serde(default)]
    init_ranges: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    input_mode: Option<String>,
}

#[derive(Default)]
struct Fields {
    order: Option<usize>,
    a: Option<Vec<f64>>,
    b: Option<Vec<f64>>,
    input: Option<Interval>,
    init: Option<Vec<Interval>>,
    init_range: Option<Interval>,
    mode: InputMode,
}

fn range(lo: f64, hi: f64) -> Result<Interval, String> {
    Interval::new(lo, hi).map_err(|_| format!("empty range [{lo}, {hi}]"))
}

fn mode(s: &str) -> Result<InputMode, String> {
    match s {
        "independent" => Ok(InputMode::Independent),
        "constant" => Ok(InputMode::Constant),
        other => Err(format!("unknown input_mode `{other}` (expected independent or constant)")),
    }
}

fn build(f: Fields) -> Result<FilterSpec, SpecFileError> {
    let a = f.a.ok_or(SpecFileError::Missing("a"))?;
    let b = f.b.ok_or(SpecFileError::Missing("b"))?;
    let input = f.input.ok_or(SpecFileError::Missing("input"))?;
    let n = a.len();
    if let Some(order) = f.order {
        if order != n {
            return Err(SpecFileError::Invalid(format!("order is {order} but `a` has {n} coefficients")));
        }
    }
    let init = match (f.init, f.init_range) {
        (Some(_), Some(_)) => return Err(SpecFileError::Invalid("give either init or init_range, not both".into())),
        (Some(v), None) => v,
        (None, Some(r)) => vec![r; n],
        (None, None) if n == 0 => Vec::new(),
        (None, None) => return Err(SpecFileError::Missing("init")),
    };
    FilterSpec::from_lags(a, b, input, init, f.mode).map_err(|e| SpecFileError::Invalid(e.to_string()))
}

fn numbers(line: usize, s: &str) -> Result<Vec<f64>, SpecFileError> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| SpecFileError::Line { line, msg: format!("`{t}` is not a finite number") })
        })
        .collect()
}

fn pair(line: usize, s: &str) -> Result<Interval, SpecFileError> {
    match numbers(line, s)?.as_slice() {
        [lo, hi] => range(*lo, *hi).map_err(|msg| SpecFileError::Line { line, msg }),
        v => Err(SpecFileError::Line { line, msg: format!("expected two numbers, found {}", v.len()) }),
    }
}

pub fn parse_filter_text(src: &str) -> Result<FilterSpec, SpecFileError> {
    let mut f = Fields::default();
    let mut init_ranges = None;
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, val)) = body.split_once(':') else {
            return Err(SpecFileError::Line { line, msg: "expected `key: value`".into() });
        };
        let val = val.trim();
        match key.trim() {
            "order" => {
                let n = val.parse().map_err(|_| SpecFileError::Line { line, msg: format!("bad order `{val}`") })?;
                f.order = Some(n);
            }
            "a" => f.a = Some(numbers(line, val)?),
            "b" => f.b = Some(numbers(line, val)?),
            "input" => f.input = Some(pair(line, val)?),
            "init" => f.init = Some(numbers(line, val)?.into_iter().map(Interval::point).collect()),
            "init_range" => f.init_range = Some(pair(line, val)?),
            "init_ranges" => {
                let v = val.split(',').map(|p| pair(line, p)).collect::<Result<Vec<_>, _>>()?;
                init_ranges = Some(v);
            }
            "input_mode" => f.mode = mode(val).map_err(|msg| SpecFileError::Line { line, msg })?,
            other => return Err(SpecFileError::Line { line, msg: format!("unknown key `{other}`") }),
        }
    }
    if let Some(v) = init_ranges {
        if f.init.is_some() {
            return Err(SpecFileError::Invalid("give either init or init_ranges, not both".into()));
        }
        f.init = Some(v);
    }
    build(f)
}

pub fn parse_filter_json(src: &str) -> Result<FilterSpec, SpecFileError> {
    let j: JsonSpec = serde_json::from_str(src).map_err(|e| SpecFileError::Json(e.to_string()))?;
    let init = match (j.init, j.init_ranges) {
        (Some(_), Some(_)) => return Err(SpecFileError::Invalid("give either init or init_ranges, not both".into())),
        (Some(v), None) => Some(v.into_iter().map(Interval::point).collect()),
        (None, Some(v)) => Some(v.into_iter().map(|[lo, hi]| range(lo, hi)).collect::<Result<_, _>>().map_err(SpecFileError::Invalid)?),
        (None, None) => None,
    };
    let f = Fields {
        order: j.order,
        a: Some(j.a),
        b: Some(j.b),
        input: Some(range(j.input[0], j.input[1]).map_err(SpecFileError::Invalid)?),
        init,
        init_range: j.init_range.map(|[lo, hi]| range(lo, hi)).transpose().map_err(SpecFileError::Invalid)?,
        mode: j.input_mode.as_deref().map(mode).transpose().map_err(SpecFileError::Invalid)?.unwrap_or_default(),
    };
    build(f)
}

/// JSON if the first non-blank character is `{`, text otherwise.
pub fn parse_filter(src: &str) -> Result<FilterSpec, SpecFileError> {
    if src.trim_start().starts_with('{') {
        parse_filter_json(src)
    } else {
        parse_filter_text(src)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

/// Inverse of [`parse_filter_text`], up to floating-point formatting.
pub fn filter_to_text(spec: &FilterSpec) -> String {
    let mut s = format!("order: {}\na: {}\nb: {}\n", spec.order(), join(&spec.a_lags()), join(&spec.b_lags()));
    s += &format!("input: {:?} {:?}\n", spec.input().lo, spec.input().hi);
    let init = spec.init();
    if init.iter().all(|r| r.lo == r.hi) {
        if !init.is_empty() {
            s += &format!("init: {}\n", join(&init.iter().map(|r| r.lo).collect::<Vec<_>>()));
        }
    } else if init.iter().all(|r| *r == init[0]) {
        s += &format!("init_range: {:?} {:?}\n", init[0].lo, init[0].hi);
    } else {
        let parts: Vec<String> = init.iter().map(|r| format!("{:?} {:?}", r.lo, r.hi)).collect();
        s += &format!("init_ranges: {}\n", parts.join(", "));
    }
    let m = match spec.mode() {
        InputMode::Independent => "independent",
        InputMode::Constant => "constant",
    };
    s + &format!("input_mode: {m}\n")
}
