//! Rendering to JSON, CSV and plain text. Every number is rounded to ten
//! significant digits.

use std::collections::BTreeMap;
use std::fmt::Write;

use paa_core::{AffineForm, BoundsTrace, Interval, IterationReport, JoinOp, Lifted, SchemeConfig, Status};
use serde_json::{json, Value};

use crate::{Comparison, Stability};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(format!("unknown output format `{other}` (expected json, csv or text)")),
        }
    }
}

pub fn sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.9e}").parse().unwrap_or(v)
}

/// Text form of [`sig`], switching to exponent notation outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let r = sig(v);
    if r == 0.0 || !r.is_finite() || (1e-4..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Fixpoint => "fixpoint",
        Status::Top => "top",
        Status::MaxIter => "max_iter",
    }
}

fn join_name(j: JoinOp) -> String {
    match j {
        JoinOp::Mub => "mub".into(),
        JoinOp::Nabla => "nabla".into(),
        JoinOp::WidenW { after } => format!("W:{after}"),
    }
}

fn form_json(f: &AffineForm) -> Value {
    let coeffs: Vec<Value> = f.coeffs().iter().map(|(s, v)| json!({"symbol": s.0, "value": sig(*v)})).collect();
    json!({"center": sig(f.center()), "coeffs": coeffs, "beta": sig(f.beta())})
}

fn interval_json(iv: Option<Interval>) -> Value {
    match iv {
        Some(iv) => json!([sig(iv.lo), sig(iv.hi)]),
        None => Value::Null,
    }
}

fn lifted_json(name: &str, l: &Lifted) -> Value {
    match l {
        Lifted::Value(f) => json!({"name": name, "state": "value", "form": form_json(f), "gamma": interval_json(f.gamma().ok())}),
        Lifted::Top => json!({"name": name, "state": "top"}),
        Lifted::Bottom => json!({"name": name, "state": "bottom"}),
    }
}

fn env_json(env: &BTreeMap<String, Lifted>) -> Vec<Value> {
    env.iter().map(|(k, v)| lifted_json(k, v)).collect()
}

fn form_text(f: &AffineForm) -> String {
    let mut s = num(f.center());
    for (sym, v) in f.coeffs() {
        let v = sig(*v);
        let _ = write!(s, " {} {}{sym}", if v < 0.0 { '-' } else { '+' }, num(v.abs()));
    }
    if f.beta() != 0.0 {
        let _ = write!(s, " + {}εU", num(f.beta()));
    }
    s
}

fn lifted_text(l: &Lifted) -> String {
    match l {
        Lifted::Value(f) => match f.gamma() {
            Ok(g) => format!("{}   range [{}, {}]", form_text(f), num(g.lo), num(g.hi)),
            Err(_) => format!("{}   range undefined (negative perturbation)", form_text(f)),
        },
        Lifted::Top => "⊤".into(),
        Lifted::Bottom => "⊥".into(),
    }
}

/// `lo,hi,beta` as CSV fields. `⊤` is unbounded and `⊥` is empty.
fn csv_fields(l: &Lifted) -> String {
    match l {
        Lifted::Value(f) => match f.gamma() {
            Ok(g) => format!("{},{},{}", num(g.lo), num(g.hi), num(f.beta())),
            Err(_) => format!(",,{}", num(f.beta())),
        },
        Lifted::Top => "-inf,inf,".into(),
        Lifted::Bottom => ",,".into(),
    }
}

pub fn render_analysis(r: &IterationReport, cfg: &SchemeConfig, trace: bool, fmt: Format) -> String {
    match fmt {
        Format::Json => {
            let mut v = json!({
                "command": "analyze",
                "status": status_name(r.status),
                "iterations": r.iterations,
                "verified": r.verified,
                "margin": sig(r.margin),
                "scheme": {
                    "unroll": cfg.unroll,
                    "cycle": cfg.cycle,
                    "join": join_name(cfg.join),
                    "bound": [sig(cfg.bound.lo), sig(cfg.bound.hi)],
                    "tol": cfg.tol,
                    "max_iter": cfg.max_iter,
                },
                "variables": env_json(&r.invariant),
                "loop_head": env_json(&r.loop_head),
            });
            if trace {
                v["trace"] = r
                    .trace
                    .iter()
                    .map(|s| json!({"iter": s.iteration, "values": env_json(&s.values)}))
                    .collect();
            }
            serde_json::to_string_pretty(&v).expect("JSON rendering") + "\n"
        }
        Format::Csv => {
            let mut s = String::from("iter,var,lo,hi,beta\n");
            if trace {
                for step in &r.trace {
                    for (k, v) in &step.values {
                        let _ = writeln!(s, "{},{k},{}", step.iteration, csv_fields(v));
                    }
                }
            }
            for (k, v) in &r.invariant {
                let _ = writeln!(s, "final,{k},{}", csv_fields(v));
            }
            s
        }
        Format::Text => {
            let mut s = format!(
                "status: {}\niterations: {}\nscheme: unroll {} cycle {} join {}\n",
                status_name(r.status),
                r.iterations,
                cfg.unroll,
                cfg.cycle,
                join_name(cfg.join)
            );
            if r.status == Status::Fixpoint {
                let _ = writeln!(s, "verified: {} (margin {})", r.verified, num(r.margin));
            }
            if trace {
                for step in &r.trace {
                    let _ = writeln!(s, "iteration {}:", step.iteration);
                    for (k, v) in &step.values {
                        let _ = writeln!(s, "  {k} = {}", lifted_text(v));
                    }
                }
            }
            s += "invariant:\n";
            for (k, v) in &r.invariant {
                let _ = writeln!(s, "  {k} = {}", lifted_text(v));
            }
            s
        }
    }
}

pub fn render_oracle(t: &BoundsTrace, fmt: Format) -> String {
    match fmt {
        Format::Csv => {
            let mut s = String::from("k,lo,hi,running_lo,running_hi\n");
            for r in &t.rows {
                let _ = writeln!(s, "{},{},{},{},{}", r.k, num(r.lo), num(r.hi), num(r.running_lo), num(r.running_hi));
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = t
                .rows
                .iter()
                .map(|r| {
                    json!({"k": r.k, "lo": sig(r.lo), "hi": sig(r.hi),
                           "running_lo": sig(r.running_lo), "running_hi": sig(r.running_hi)})
                })
                .collect();
            let v = json!({
                "command": "oracle",
                "skip": t.skip,
                "max": t.max().map(|(v, k)| json!({"value": sig(v), "k": k})),
                "min": t.min().map(|(v, k)| json!({"value": sig(v), "k": k})),
                "rows": rows,
            });
            serde_json::to_string_pretty(&v).expect("JSON rendering") + "\n"
        }
        Format::Text => {
            let mut s = String::new();
            match (t.max(), t.min()) {
                (Some((hi, khi)), Some((lo, klo))) => {
                    let _ = writeln!(s, "max {} at k={khi}\nmin {} at k={klo}", num(hi), num(lo));
                }
                _ => s += "no outputs in range\n",
            }
            s
        }
    }
}

pub fn render_stability(st: &Stability, fmt: Format) -> String {
    let rows: Vec<Vec<f64>> = st.power.rows().into_iter().map(|r| r.into_iter().map(sig).collect()).collect();
    match fmt {
        Format::Json => {
            let v = json!({"command": "stability", "order": st.order, "power": rows,
                           "max_row_sum": sig(st.power.max_row_l1())});
            serde_json::to_string_pretty(&v).expect("JSON rendering") + "\n"
        }
        Format::Csv => {
            let mut s = format!("order,{}\n", st.order);
            for r in rows {
                s += &r.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",");
                s.push('\n');
            }
            s
        }
        Format::Text => {
            let mut s = format!("q = {} (max row sum of A^q: {})\n", st.order, num(st.power.max_row_l1()));
            for r in rows {
                let _ = writeln!(s, "  {}", r.iter().map(|v| num(*v)).collect::<Vec<_>>().join("  "));
            }
            s
        }
    }
}

pub fn render_comparison(c: &Comparison, cfg: &SchemeConfig, fmt: Format) -> String {
    match fmt {
        Format::Json => {
            let v = json!({
                "command": "compare",
                "status": status_name(c.report.status),
                "iterations": c.report.iterations,
                "scheme": {"unroll": cfg.unroll, "cycle": cfg.cycle, "join": join_name(cfg.join)},
                "invariant": interval_json(c.invariant),
                "envelope": interval_json(c.envelope),
                "contained": c.contained,
            });
            serde_json::to_string_pretty(&v).expect("JSON rendering") + "\n"
        }
        Format::Csv => {
            let iv = |i: Option<Interval>| i.map_or(",".to_string(), |i| format!("{},{}", num(i.lo), num(i.hi)));
            format!(
                "status,iterations,inv_lo,inv_hi,env_lo,env_hi,contained\n{},{},{},{},{}\n",
                status_name(c.report.status),
                c.report.iterations,
                iv(c.invariant),
                iv(c.envelope),
                c.contained
            )
        }
        Format::Text => {
            let iv = |i: Option<Interval>| i.map_or("none".to_string(), |i| format!("[{}, {}]", num(i.lo), num(i.hi)));
            format!(
                "status: {}\niterations: {}\ninvariant: {}\noracle envelope: {}\ncontained: {}\n",
                status_name(c.report.status),
                c.report.iterations,
                iv(c.invariant),
                iv(c.envelope),
                c.contained
            )
        }
    }
}
