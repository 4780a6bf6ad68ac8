//! Command-line front end: verify problem documents with certificates,
//! solve them by bisection, and dump canonicalizations.
//!
//! Exit codes: 0 success/compliant, 1 runtime or solver failure,
//! 2 verification failure, 3 parse failure.

use clap::{Parser, Subcommand, ValueEnum};
use dqcp_cli::{doc, dump, result};
use dqcp::analysis;
use dqcp::bisect::InconclusivePolicy;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dqcp",
    about = "Model, verify, and solve disciplined quasiconvex programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum InconclusiveArg {
    Abort,
    Infeasible,
}

#[derive(Subcommand)]
enum Command {
    /// Check DQCP compliance and print the per-node certificate tree.
    Verify {
        /// Problem document (JSON); use - for stdin.
        file: String,
    },
    /// Verify, canonicalize, and solve by bisection.
    Solve {
        file: String,
        /// Interval-width stopping tolerance.
        #[arg(long)]
        eps: Option<f64>,
        /// Initial lower bisection bound.
        #[arg(long, allow_negative_numbers = true)]
        low: Option<f64>,
        /// Initial upper bisection bound.
        #[arg(long, allow_negative_numbers = true)]
        high: Option<f64>,
        #[arg(long)]
        max_probes: Option<usize>,
        /// Policy for inconclusive feasibility probes.
        #[arg(long, value_enum)]
        inconclusive: Option<InconclusiveArg>,
        /// Write the result document here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Dump the conic feasibility problem at a fixed level t.
    Canon {
        file: String,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_PARSE: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn read_input(path: &str) -> Result<String, (u8, String)> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| (EXIT_RUNTIME, format!("reading stdin: {e}")))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(|e| (EXIT_RUNTIME, format!("reading {path}: {e}")))
    }
}

fn parse(path: &str) -> Result<doc::ParsedProblem, (u8, String)> {
    let text = read_input(path)?;
    doc::parse_str(&text).map_err(|e| (EXIT_PARSE, e.to_string()))
}

fn print_certificate(parsed: &doc::ParsedProblem) -> analysis::ProblemCertificate {
    let cert = analysis::problem_certificate(&parsed.problem);
    let sense = &parsed.document.objective.sense;
    println!("objective ({sense} {}):", parsed.document.objective.root);
    print!("{}", indent(&cert.objective.render(), 2));
    if let Some(reason) = &cert.objective_reason {
        println!("  -> not compliant: {reason}");
    }
    for (i, (spec, c)) in parsed
        .document
        .constraints
        .iter()
        .zip(&cert.constraints)
        .enumerate()
    {
        println!("constraint {i}: {} {} {}", spec.lhs, spec.op, spec.rhs);
        print!("{}", indent(&c.lhs.render(), 2));
        print!("{}", indent(&c.rhs.render(), 2));
        match &c.reason {
            None => println!("  -> ok"),
            Some(r) => println!("  -> not compliant: {r}"),
        }
    }
    println!(
        "DQCP: {}; DCP: {}",
        if cert.is_dqcp { "yes" } else { "no" },
        if cert.is_dcp { "yes" } else { "no" }
    );
    cert
}

fn indent(text: &str, by: usize) -> String {
    let pad = " ".repeat(by);
    text.lines()
        .map(|l| format!("{pad}{l}\n"))
        .collect::<String>()
}

fn solve_options(
    parsed: &doc::ParsedProblem,
    eps: Option<f64>,
    low: Option<f64>,
    high: Option<f64>,
    max_probes: Option<usize>,
    inconclusive: Option<InconclusiveArg>,
) -> dqcp::SolveOptions {
    let mut opts = dqcp::SolveOptions::default();
    if let Some(o) = &parsed.document.options {
        if let Some(v) = o.eps {
            opts.bisect.eps = v;
        }
        if let Some(v) = o.max_probes {
            opts.bisect.max_probes = v;
        }
        opts.bisect.low = o.low;
        opts.bisect.high = o.high;
        if let Some(v) = o.eps_feas {
            opts.bisect.solver.eps_feas = v;
        }
        if let Some(v) = o.eps_gap {
            opts.bisect.solver.eps_gap = v;
        }
        if let Some(v) = o.max_iters {
            opts.bisect.solver.max_iters = v;
        }
        if let Some(v) = o.delta_strict {
            opts.canon.delta_strict = v;
        }
    }
    // Command-line flags override document options.
    if let Some(v) = eps {
        opts.bisect.eps = v;
    }
    if let Some(v) = low {
        opts.bisect.low = Some(v);
    }
    if let Some(v) = high {
        opts.bisect.high = Some(v);
    }
    if let Some(v) = max_probes {
        opts.bisect.max_probes = v;
    }
    if let Some(policy) = inconclusive {
        opts.bisect.inconclusive = match policy {
            InconclusiveArg::Abort => InconclusivePolicy::Abort,
            InconclusiveArg::Infeasible => InconclusivePolicy::TreatAsInfeasible,
        };
    }
    opts
}

fn run(cli: Cli) -> Result<u8, (u8, String)> {
    match cli.command {
        Command::Verify { file } => {
            let parsed = parse(&file)?;
            let cert = print_certificate(&parsed);
            Ok(if cert.is_dqcp { 0 } else { EXIT_VERIFY })
        }
        Command::Solve {
            file,
            eps,
            low,
            high,
            max_probes,
            inconclusive,
            output,
        } => {
            let parsed = parse(&file)?;
            let cert = analysis::problem_certificate(&parsed.problem);
            if !cert.is_dqcp {
                eprintln!("problem is not DQCP:");
                let mut stderr_cert = String::new();
                stderr_cert.push_str(&cert.objective.render());
                if let Some(r) = &cert.objective_reason {
                    stderr_cert.push_str(&format!("objective: {r}\n"));
                }
                for (i, c) in cert.constraints.iter().enumerate() {
                    if let Some(r) = &c.reason {
                        stderr_cert.push_str(&format!("constraint {i}: {r}\n"));
                    }
                }
                eprint!("{stderr_cert}");
                return Ok(EXIT_VERIFY);
            }
            let opts = solve_options(&parsed, eps, low, high, max_probes, inconclusive);
            let solved = dqcp::solve(&parsed.problem, &opts)
                .map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
            let document = result::build(&solved, &opts);
            let json = serde_json::to_string_pretty(&document)
                .map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
            match output {
                Some(path) => {
                    std::fs::write(&path, json)
                        .map_err(|e| (EXIT_RUNTIME, format!("writing {}: {e}", path.display())))?;
                    println!("status: {}", document.status);
                    if let Some(v) = document.value {
                        println!("value: {}", dump::fmt12(v));
                    }
                    if let Some([a, b]) = document.interval {
                        println!("interval: [{}, {}]", dump::fmt12(a), dump::fmt12(b));
                    }
                    println!("result written to {}", path.display());
                }
                None => println!("{json}"),
            }
            Ok(if solved.status == dqcp::Status::Optimal {
                0
            } else {
                EXIT_RUNTIME
            })
        }
        Command::Canon { file, t, output } => {
            let parsed = parse(&file)?;
            let cert = analysis::problem_certificate(&parsed.problem);
            if !cert.is_dqcp {
                eprintln!("problem is not DQCP; run `dqcp verify` for the certificate");
                return Ok(EXIT_VERIFY);
            }
            let family = dqcp::canon::dqcp2dcp(&parsed.problem, &dqcp::CanonOptions::default())
                .map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
            let problem = family
                .generate(t)
                .map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
            let text = dump::render(&problem, t);
            match output {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| (EXIT_RUNTIME, format!("writing {}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            Ok(0)
        }
    }
}
