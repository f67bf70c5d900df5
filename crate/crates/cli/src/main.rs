use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use paa_cli::report::{render_analysis, render_comparison, render_oracle, render_stability};
use paa_cli::{
    analysis_exit_code, analyze, compare, exit, load, load_filter, oracle, parse_bound, parse_join, parse_scheme,
    stability, CliError, Format, Kind,
};
use paa_core::SchemeConfig;

/// Static analysis of linear loops and digital filters with perturbed affine forms.
#[derive(Parser)]
#[command(name = "paa", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute a loop invariant for a program or filter.
    Analyze {
        file: PathBuf,
        /// Treat the file as this kind instead of guessing from its extension.
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact output bounds of a filter by unfolding.
    Oracle {
        file: PathBuf,
        /// Last output index to compute.
        #[arg(long, default_value_t = 100)]
        iters: usize,
        /// Skip this many outputs after the initial values.
        #[arg(long, default_value_t = 0)]
        skip: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Smallest q such that every row of A^q has absolute sum below one.
    Stability {
        file: PathBuf,
        #[arg(long, default_value_t = 256)]
        max_q: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check that exact filter bounds lie inside the computed invariant.
    Compare {
        file: PathBuf,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        skip: usize,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Program,
    Filter,
}

#[derive(Args)]
struct SchemeArgs {
    /// Unroll count and cycle length, `i,c`.
    #[arg(long, default_value = "0,1")]
    scheme: String,
    /// Join at the loop head: mub, nabla, or W:k.
    #[arg(long, default_value = "nabla")]
    join: String,
    /// Values leaving `lo,hi` make the result ⊤.
    #[arg(long, default_value = "-1e6,1e6", allow_hyphen_values = true)]
    bound: String,
    /// Stopping tolerance between consecutive iterates.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Fold coefficients smaller than this into the perturbation term.
    #[arg(long)]
    compact: Option<f64>,
}

impl SchemeArgs {
    fn config(&self) -> Result<SchemeConfig, CliError> {
        let (unroll, cycle) = parse_scheme(&self.scheme)?;
        let mut cfg = SchemeConfig::new(unroll, cycle, parse_join(&self.join)?);
        cfg.bound = parse_bound(&self.bound)?;
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        cfg.max_iter = self.max_iter;
        cfg.compact = self.compact;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct OutArgs {
    /// json, csv or text.
    #[arg(long, default_value = "text")]
    out: Format,
    /// Include every iterate in the output.
    #[arg(long)]
    trace: bool,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Analyze { file, kind, scheme, out } => {
            let cfg = scheme.config()?;
            let kind = kind.map(|k| match k {
                KindArg::Program => Kind::Program,
                KindArg::Filter => Kind::Filter,
            });
            let r = analyze(&load(&file, kind)?, &cfg)?;
            print!("{}", render_analysis(&r, &cfg, out.trace, out.out));
            Ok(analysis_exit_code(&r))
        }
        Cmd::Oracle { file, iters, skip, out } => {
            let spec = load_filter(&file)?;
            print!("{}", render_oracle(&oracle(&spec, iters, skip), out.out));
            Ok(exit::OK)
        }
        Cmd::Stability { file, max_q, out } => {
            let spec = load_filter(&file)?;
            match stability(&spec, max_q) {
                Ok(st) => {
                    print!("{}", render_stability(&st, out.out));
                    Ok(exit::OK)
                }
                Err(e) => {
                    eprintln!("paa: {e}");
                    Ok(exit::NO_INVARIANT)
                }
            }
        }
        Cmd::Compare { file, iters, skip, scheme, out } => {
            let cfg = scheme.config()?;
            let c = compare(&load_filter(&file)?, &cfg, iters, skip)?;
            print!("{}", render_comparison(&c, &cfg, out.out));
            Ok(c.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::INPUT as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("paa: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
