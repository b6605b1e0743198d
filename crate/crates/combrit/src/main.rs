//! Thin command-line front end; all work happens in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use combrit::cli::{
    bench_rows_to_csv, bench_rows_to_json, cmd_factorize, cmd_gen, cmd_invert, cmd_verify,
    parse_report_algo, parse_sizes, run_bench, BenchMethod, BenchSpec, CliError, FactorizeMethod,
    GenKind, InvertMethod, InvertOptions,
};
use combrit::flops::compare_report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(
    name = "combrit",
    about = "Combinatorial and recursive dense matrix inversion toolbox",
    version
)]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
    /// RNG seed for anything generated.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print the operation ledger of the run to stderr.
    #[arg(long, global = true)]
    ledger: bool,
    /// Order below which products use the naive kernel.
    #[arg(long, global = true, default_value_t = 64)]
    strassen_cutoff: usize,
    /// Table output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a deterministic test matrix.
    Gen {
        /// unit-upper | upper | spd | dense | int-upper
        kind: String,
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Invert a matrix file.
    Invert {
        /// comb | crit | combrit | rsi | brsi | gj
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 2)]
        beta: usize,
        #[arg(long, default_value_t = 2)]
        gamma: usize,
        #[arg(long, default_value_t = 16)]
        base: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the factor chain as <prefix>.factor<k>.mat files.
        #[arg(long)]
        emit_factors: Option<String>,
    },
    /// Factorize a matrix file, writing every direct and inverse factor.
    Factorize {
        /// sqr | skul
        #[arg(long)]
        method: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_prefix: String,
    },
    /// Compare measured operation counts against the closed forms.
    Flops {
        /// Comma list of crit | crit-star | comb | combrit | ptf | pul.
        #[arg(long)]
        algo: String,
        /// Sizes, e.g. "2..16" or "4,8,12".
        #[arg(long)]
        sizes: String,
        #[arg(long, default_value_t = 2)]
        beta: usize,
        #[arg(long, default_value_t = 16)]
        base: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time methods against each other.
    Bench {
        /// Sizes; "a..b" doubles, comma lists are taken as given.
        #[arg(long)]
        sizes: String,
        /// Comma list of method tokens, e.g. "crit,combrit(beta=2)".
        #[arg(long)]
        methods: String,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a claimed inverse.
    Verify {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        inv: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn write_or_print(out: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, content).map_err(combrit::FileError::from)?;
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn usage(msg: String) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(64);
}

fn run(args: Args) -> Result<(), CliError> {
    match args.cmd {
        Cmd::Gen { kind, n, out } => {
            let kind: GenKind = kind.parse().unwrap_or_else(|e| usage(e));
            cmd_gen(kind, n, args.seed, &out)?;
            eprintln!("wrote {} ({n}x{n})", out.display());
        }
        Cmd::Invert {
            method,
            beta,
            gamma,
            base,
            input,
            out,
            emit_factors,
        } => {
            let method: InvertMethod = method.parse().unwrap_or_else(|e| usage(e));
            let opts = InvertOptions {
                beta,
                gamma,
                base,
                strassen_cutoff: args.strassen_cutoff,
            };
            let summary = cmd_invert(&input, method, &opts, &out, emit_factors.as_deref())?;
            eprintln!(
                "{} n={} residual={:.3e}",
                summary.method, summary.n, summary.residual
            );
            if args.ledger {
                eprintln!(
                    "ledger: {}",
                    serde_json::to_string(&summary.ledger).unwrap_or_default()
                );
            }
            if args.format == Format::Json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&summary).unwrap_or_default()
                );
            }
        }
        Cmd::Factorize {
            method,
            input,
            out_prefix,
        } => {
            let method: FactorizeMethod = method.parse().unwrap_or_else(|e| usage(e));
            let summary = cmd_factorize(&input, method, &out_prefix)?;
            eprintln!(
                "{} n={} reconstruction={:.3e} inverse-residual={:.3e}",
                summary.method, summary.n, summary.reconstruction, summary.inverse_residual
            );
            if args.ledger {
                eprintln!(
                    "ledger: {}",
                    serde_json::to_string(&summary.ledger).unwrap_or_default()
                );
            }
            if args.format == Format::Json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&summary).unwrap_or_default()
                );
            }
        }
        Cmd::Flops {
            algo,
            sizes,
            beta,
            base,
            out,
        } => {
            let opts = InvertOptions {
                beta,
                base,
                ..InvertOptions::default()
            };
            let sizes = parse_sizes(&sizes, false).unwrap_or_else(|e| usage(e));
            let mut reports = Vec::new();
            for token in algo.split(',').filter(|t| !t.is_empty()) {
                let algo = parse_report_algo(token, &opts).unwrap_or_else(|e| usage(e));
                reports.push(compare_report(algo, &sizes)?);
            }
            let content = match args.format {
                Format::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&reports).unwrap_or_default()
                ),
                Format::Csv => {
                    let mut s = String::new();
                    for r in &reports {
                        s.push_str(&r.to_csv());
                    }
                    s
                }
            };
            write_or_print(out.as_ref(), &content)?;
            for r in &reports {
                let ok = r.asserted_rows_match();
                eprintln!(
                    "{}: asserted rows {}",
                    r.algo,
                    if ok { "match" } else { "DIFFER" }
                );
            }
        }
        Cmd::Bench {
            sizes,
            methods,
            repeats,
            out,
        } => {
            let defaults = InvertOptions {
                strassen_cutoff: args.strassen_cutoff,
                ..InvertOptions::default()
            };
            let sizes = parse_sizes(&sizes, true).unwrap_or_else(|e| usage(e));
            let tokens: Vec<String> = methods
                .split(',')
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect();
            let mut parsed = Vec::new();
            for token in rejoin_parenthesized(&tokens) {
                parsed.push(BenchMethod::parse(&token, &defaults).unwrap_or_else(|e| usage(e)));
            }
            let spec = BenchSpec {
                sizes,
                methods: parsed,
                repeats: repeats.max(1),
                seed: args.seed,
                strassen_cutoff: args.strassen_cutoff,
            };
            let rows = run_bench(&spec);
            let content = match args.format {
                Format::Json => format!("{}\n", bench_rows_to_json(&rows)),
                Format::Csv => bench_rows_to_csv(&rows),
            };
            write_or_print(out.as_ref(), &content)?;
            for row in rows.iter().filter(|r| r.status != "ok") {
                eprintln!("cell n={} {}: {}", row.n, row.method, row.status);
            }
        }
        Cmd::Verify { a, inv, tol } => {
            let summary = cmd_verify(&a, &inv, tol)?;
            println!(
                "n={} |XA-I|={:.3e} |AX-I|={:.3e} tol={:.3e} -> {}",
                summary.n,
                summary.left_residual,
                summary.right_residual,
                summary.tolerance,
                if summary.pass { "ok" } else { "FAIL" }
            );
            if !summary.pass {
                return Err(CliError::VerifyFailed {
                    residual: summary.left_residual.max(summary.right_residual),
                    tolerance: summary.tolerance,
                });
            }
        }
    }
    Ok(())
}

/// Merge comma-split tokens back together while parentheses stay open, so
/// "brsi(gamma=2,beta=2)" survives the comma split.
fn rejoin_parenthesized(tokens: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut depth = 0usize;
    for t in tokens {
        if depth > 0 {
            let last = out.last_mut().expect("depth tracks an open token");
            last.push(',');
            last.push_str(t);
        } else {
            out.push(t.clone());
        }
        depth = depth
            .saturating_add(t.matches('(').count())
            .saturating_sub(t.matches(')').count());
    }
    out
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            // help and version requests exit cleanly; usage errors get 64
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(64);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
