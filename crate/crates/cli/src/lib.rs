//! Library half of the `paa` command: input parsing, the subcommands, and
//! rendering of their results.

pub mod filter_file;
pub mod program;
pub mod report;

use std::path::Path;
use std::thread;

use paa_core::{
    iterate_scheme, running_bounds, stability_order, BoundsTrace, FilterSpec, Interval, IterationReport, JoinOp,
    Matrix, Program, SchemeConfig, SchemeError, Status, Target,
};
use thiserror::Error;

pub use filter_file::{filter_to_text, parse_filter, SpecFileError};
pub use program::{parse_program, ParseError};
pub use report::Format;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// The analysis reached `⊤`, hit the iteration limit, or the filter has no
    /// contraction order.
    pub const NO_INVARIANT: i32 = 1;
    /// Unreadable or malformed input, or an invalid option.
    pub const INPUT: i32 = 2;
    /// `compare` found oracle bounds outside the computed invariant.
    pub const NOT_CONTAINED: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{source}")]
    Parse { path: String, source: ParseError },
    #[error("{path}: {source}")]
    Spec { path: String, source: SpecFileError },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        exit::INPUT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Program,
    Filter,
}

pub enum Source {
    Program(Program),
    Filter(FilterSpec),
}

impl Source {
    pub fn target(&self) -> Target<'_> {
        match self {
            Source::Program(p) => Target::Program(p),
            Source::Filter(f) => Target::Filter(f),
        }
    }
}

/// Files ending in `.filter` or `.json` are filter descriptions unless `kind`
/// says otherwise; everything else is a program.
pub fn guess_kind(path: &Path) -> Kind {
    match path.extension().and_then(|e| e.to_str()) {
        Some("filter" | "json") => Kind::Filter,
        _ => Kind::Program,
    }
}

pub fn load(path: &Path, kind: Option<Kind>) -> Result<Source, CliError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: name.clone(), source })?;
    match kind.unwrap_or_else(|| guess_kind(path)) {
        Kind::Program => parse_program(&text).map(Source::Program).map_err(|source| CliError::Parse { path: name, source }),
        Kind::Filter => parse_filter(&text).map(Source::Filter).map_err(|source| CliError::Spec { path: name, source }),
    }
}

pub fn load_filter(path: &Path) -> Result<FilterSpec, CliError> {
    match load(path, Some(Kind::Filter))? {
        Source::Filter(f) => Ok(f),
        Source::Program(_) => unreachable!(),
    }
}

/// `i,c`: unroll count and cycle length.
pub fn parse_scheme(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("bad scheme `{s}`: expected two integers `i,c` with c >= 1"));
    let (i, c) = s.split_once(',').ok_or_else(bad)?;
    let i = i.trim().parse().map_err(|_| bad())?;
    let c: usize = c.trim().parse().map_err(|_| bad())?;
    if c == 0 {
        return Err(bad());
    }
    Ok((i, c))
}

/// `mub`, `nabla`, or `W:k` for `∇` during the first `k` iterations then `W`.
pub fn parse_join(s: &str) -> Result<JoinOp, CliError> {
    let bad = || CliError::Usage(format!("bad join `{s}`: expected mub, nabla or W:k"));
    match s.to_ascii_lowercase().as_str() {
        "mub" => Ok(JoinOp::Mub),
        "nabla" => Ok(JoinOp::Nabla),
        w => {
            let k = w.strip_prefix("w:").ok_or_else(bad)?;
            Ok(JoinOp::WidenW { after: k.parse().map_err(|_| bad())? })
        }
    }
}

pub fn parse_bound(s: &str) -> Result<Interval, CliError> {
    let bad = || CliError::Usage(format!("bad bound `{s}`: expected `lo,hi` with lo < hi"));
    let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo < hi) {
        return Err(bad());
    }
    Interval::new(lo, hi).map_err(|_| bad())
}

pub fn analyze(source: &Source, cfg: &SchemeConfig) -> Result<IterationReport, CliError> {
    Ok(iterate_scheme(&source.target(), cfg)?)
}

pub fn analysis_exit_code(r: &IterationReport) -> i32 {
    match r.status {
        Status::Fixpoint => exit::OK,
        Status::Top | Status::MaxIter => exit::NO_INVARIANT,
    }
}

pub fn oracle(spec: &FilterSpec, last: usize, skip: usize) -> BoundsTrace {
    running_bounds(spec, last, skip)
}

pub struct Stability {
    pub order: usize,
    pub power: Matrix,
}

pub fn stability(spec: &FilterSpec, max_q: usize) -> Result<Stability, paa_core::FilterError> {
    stability_order(spec.a(), max_q).map(|(order, power)| Stability { order, power })
}

pub struct Comparison {
    pub report: IterationReport,
    pub trace: BoundsTrace,
    pub invariant: Option<Interval>,
    pub envelope: Option<Interval>,
    pub contained: bool,
}

impl Comparison {
    pub fn exit_code(&self) -> i32 {
        if self.report.status != Status::Fixpoint {
            exit::NO_INVARIANT
        } else if self.contained {
            exit::OK
        } else {
            exit::NOT_CONTAINED
        }
    }
}

/// Runs the analyzer and the exact unfolding side by side.
pub fn compare(spec: &FilterSpec, cfg: &SchemeConfig, last: usize, skip: usize) -> Result<Comparison, CliError> {
    let (report, trace) = thread::scope(|s| {
        let oracle = s.spawn(|| running_bounds(spec, last, skip));
        let report = iterate_scheme(&Target::Filter(spec), cfg);
        (report, oracle.join().expect("oracle thread panicked"))
    });
    let report = report?;
    let invariant = report.gamma(paa_core::fixpoint::FILTER_OUTPUT);
    let envelope = trace.envelope();
    let contained = match (invariant, envelope) {
        (Some(inv), Some(env)) => env.subset_of(&inv),
        (Some(_), None) => true,
        (None, _) => false,
    };
    Ok(Comparison { report, trace, invariant, envelope, contained })
}

#[cfg(test)]
mod tests {
    use super::*;
    use paa_core::InputMode;

    fn spec() -> FilterSpec {
        FilterSpec::new(vec![0.5], vec![0.0, 1.0], Interval { lo: 0.0, hi: 1.0 }, vec![Interval::point(0.0)], InputMode::Independent)
            .unwrap()
    }

    #[test]
    fn comparison_exit_codes() {
        let mut c = compare(&spec(), &SchemeConfig::default(), 50, 0).unwrap();
        assert!(c.contained);
        assert_eq!(c.exit_code(), exit::OK);
        c.contained = false;
        assert_eq!(c.exit_code(), exit::NOT_CONTAINED);
        c.report.status = Status::Top;
        assert_eq!(c.exit_code(), exit::NO_INVARIANT);
    }

    #[test]
    fn option_parsers() {
        assert_eq!(parse_scheme("2, 16").unwrap(), (2, 16));
        assert!(parse_scheme("1").is_err());
        assert_eq!(parse_join("W:3").unwrap(), JoinOp::WidenW { after: 3 });
        assert_eq!(parse_join("NABLA").unwrap(), JoinOp::Nabla);
        assert!(parse_join("w:").is_err());
        assert_eq!(parse_bound("-5,5").unwrap(), Interval { lo: -5.0, hi: 5.0 });
        assert!(parse_bound("1,1").is_err());
    }

    #[test]
    fn kind_from_extension() {
        assert_eq!(guess_kind(Path::new("a/b.filter")), Kind::Filter);
        assert_eq!(guess_kind(Path::new("b.json")), Kind::Filter);
        assert_eq!(guess_kind(Path::new("b.prog")), Kind::Program);
    }
}
