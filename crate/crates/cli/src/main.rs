//! Command-line front end: construct and persist sequences, emit witness
//! forms, run the exhaustive and certified oracles, scan critical scales,
//! and run the full verification suite with a machine-readable report.
//!
//! All numeric inputs are exact strings (`1/2`, never `0.5`). Exit codes:
//! 0 success, 1 verification failure, 2 usage error, 3 computational
//! refusal (budget or depth).

mod verify;

use clap::{Parser, Subcommand, ValueEnum};
use dirspec_core::construction::{
    build_sequence, build_sequence_phi, Params, PhiFamily, Schedule, Sequence,
};
use dirspec_core::numerics::{format_rational, parse_integer, parse_rational, Rational};
use dirspec_core::oracle::{
    default_exhaustive_depth, psi_star_enclosure, psi_star_exhaustive, with_worker_pool,
    SearchOptions, SearchTarget,
};
use dirspec_core::spectrum::{
    check_phi_admissible, liouville_check, phi_ratio_scan, theta_scan, write_ratio_csv,
    write_theta_csv,
};
use dirspec_core::witnesses::build_witness;
use dirspec_core::{Error, Result};
use num_bigint::BigInt;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "dirspec",
    version,
    about = "Exact constructions, witnesses and certified searches for uniform approximation by one linear form"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a sequence pinning the Dirichlet constant to c and save it.
    Construct {
        #[arg(long)]
        n: usize,
        /// Target constant, an exact fraction strictly between 0 and 1.
        #[arg(long)]
        c: String,
        /// Exponent schedule: const:M, ramp:M0 (block k uses M0+k), or
        /// list:M1,M2,...
        #[arg(long)]
        schedule: String,
        /// Number of recursion blocks to build.
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the sequence variant driven by a decay target phi.
    PhiBuild {
        #[arg(long)]
        n: usize,
        /// Carried in the file but unused by the decay-target rule.
        #[arg(long, default_value = "1/2")]
        c: String,
        /// Decay target: power:COEFF:EXP or powerlog:COEFF:EXP:LOGEXP, with
        /// rational coefficients and integer or half-integer exponents.
        #[arg(long)]
        phi: String,
        #[arg(long)]
        schedule: String,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the witness form for a height as JSON.
    Witness {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long = "Q")]
        q: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Approximation minimum at a height, exhaustive or certificate-based.
    Psi {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long = "Q")]
        q: String,
        #[arg(long, value_enum)]
        mode: PsiMode,
        /// Truncation level for the exhaustive mode; defaults to one block
        /// past the classification block.
        #[arg(long)]
        k: Option<usize>,
        /// Candidate budget (2Q+1)^n for the exhaustive mode.
        #[arg(long, default_value_t = 100_000_000)]
        budget: u64,
        /// Worker count; results are identical for every value.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan the critical scales k_min..=k_max and emit CSV.
    Scan {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        k_min: usize,
        #[arg(long)]
        k_max: usize,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every verification check; exit 0 only when all pass.
    Verify {
        #[arg(long)]
        seq: PathBuf,
        /// Candidate budget for the exhaustive sandwich checks.
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check polynomial-order approximation at the top-range scales.
    Liouville {
        #[arg(long)]
        seq: PathBuf,
        /// Order to test against.
        #[arg(long = "N")]
        n_exp: u32,
        #[arg(long, default_value_t = 1)]
        k_min: usize,
        #[arg(long)]
        k_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ratio scan psi/phi for a decay-target sequence, as CSV.
    PhiScan {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        k_min: usize,
        #[arg(long)]
        k_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PsiMode {
    Exhaustive,
    Enclosure,
}

fn parse_schedule(s: &str) -> Result<Schedule> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("schedule '{}' must be kind:args", s)))?;
    let parse_u32 = |x: &str| -> Result<u32> {
        x.parse()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse '{}' as an exponent", x)))
    };
    match kind {
        "const" => Ok(Schedule::Const(parse_u32(rest)?)),
        "ramp" => Ok(Schedule::Ramp { m0: parse_u32(rest)? }),
        "list" => Ok(Schedule::List(
            rest.split(',')
                .map(parse_u32)
                .collect::<Result<Vec<u32>>>()?,
        )),
        other => Err(Error::InvalidArgument(format!(
            "unknown schedule kind '{}'",
            other
        ))),
    }
}

fn parse_phi(s: &str) -> Result<PhiFamily> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["power", coeff, exp] => Ok(PhiFamily::Power {
            coeff: parse_rational(coeff)?,
            exp: parse_rational(exp)?,
        }),
        ["powerlog", coeff, exp, log_exp] => Ok(PhiFamily::PowerLog {
            coeff: parse_rational(coeff)?,
            exp: parse_rational(exp)?,
            log_exp: parse_rational(log_exp)?,
        }),
        _ => Err(Error::InvalidArgument(format!(
            "decay target '{}' must be power:COEFF:EXP or powerlog:COEFF:EXP:LOGEXP",
            s
        ))),
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{}", content),
    }
    Ok(())
}

#[derive(Serialize)]
struct LiouvilleRow {
    k: usize,
    #[serde(rename = "Q")]
    q: String,
    pass: bool,
    value_hi: String,
    threshold: String,
}

#[derive(Serialize)]
struct LiouvilleReport {
    n_exp: u32,
    any_pass: bool,
    checks: Vec<LiouvilleRow>,
}

fn load(path: &Path) -> Result<Sequence> {
    Sequence::load(path)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Construct { n, c, schedule, depth, out } => {
            let params = Params {
                n,
                c: parse_rational(&c)?,
                schedule: parse_schedule(&schedule)?,
                depth,
            };
            let seq = build_sequence(params)?;
            seq.save(&out)?;
            Ok(true)
        }
        Cmd::PhiBuild { n, c, phi, schedule, depth, out } => {
            let phi = parse_phi(&phi)?;
            let params = Params {
                n,
                c: parse_rational(&c)?,
                schedule: parse_schedule(&schedule)?,
                depth,
            };
            let seq = build_sequence_phi(params, phi.clone())?;
            seq.save(&out)?;
            // heuristic admissibility probe at the built block heads
            let samples: Vec<BigInt> = (1..=seq.depth())
                .map(|k| seq.term(seq.n() * k + 1))
                .collect();
            let report = check_phi_admissible(&phi, n, &samples)?;
            print!("{}", report.to_json_string());
            Ok(true)
        }
        Cmd::Witness { seq, q, out } => {
            let seq = load(&seq)?;
            let w = build_witness(&seq, &parse_integer(&q)?)?;
            emit(&out, &w.to_json_string())?;
            Ok(true)
        }
        Cmd::Psi { seq, q, mode, k, budget, threads, out } => {
            let seq = load(&seq)?;
            let q = parse_integer(&q)?;
            let result = match mode {
                PsiMode::Exhaustive => {
                    let depth = match k {
                        Some(d) => d,
                        None => default_exhaustive_depth(&seq, &q)?,
                    };
                    psi_star_exhaustive(
                        &SearchTarget::Truncated { seq: &seq, depth },
                        &q,
                        &SearchOptions { budget, threads },
                    )?
                }
                PsiMode::Enclosure => psi_star_enclosure(&seq, &q)?,
            };
            emit(&out, &result.to_json_string())?;
            Ok(true)
        }
        Cmd::Scan { seq, k_min, k_max, threads, out } => {
            let seq = load(&seq)?;
            let records = with_worker_pool(threads, || theta_scan(&seq, k_min, k_max))??;
            let mut buf = Vec::new();
            write_theta_csv(&records, &mut buf)?;
            emit(&out, &String::from_utf8(buf).expect("csv is utf8"))?;
            Ok(true)
        }
        Cmd::Verify { seq, budget, out } => {
            let seq = load(&seq)?;
            let report = verify::run_verification(&seq, budget)?;
            emit(&out, &report.to_json_string())?;
            Ok(report.pass)
        }
        Cmd::Liouville { seq, n_exp, k_min, k_max, out } => {
            let seq = load(&seq)?;
            if k_min < 1 || k_min > k_max {
                return Err(Error::InvalidArgument(
                    "range must satisfy 1 <= k-min <= k-max".into(),
                ));
            }
            if k_max > seq.max_truncation() {
                return Err(Error::Depth { k: k_max, needed: k_max + 1 });
            }
            let mut rows = Vec::new();
            for k in k_min..=k_max {
                let q = seq.term(seq.n() * k + 1);
                let pass = liouville_check(&seq, n_exp, k)?;
                let w = build_witness(&seq, &q)?;
                rows.push(LiouvilleRow {
                    k,
                    q: q.to_string(),
                    pass,
                    value_hi: format_rational(&w.value.hi),
                    threshold: format_rational(&Rational::new(1.into(), q.pow(n_exp))),
                });
            }
            let report = LiouvilleReport {
                n_exp,
                any_pass: rows.iter().any(|r| r.pass),
                checks: rows,
            };
            let mut s = serde_json::to_string_pretty(&report).expect("serialization cannot fail");
            s.push('\n');
            emit(&out, &s)?;
            Ok(true)
        }
        Cmd::PhiScan { seq, k_min, k_max, out } => {
            let seq = load(&seq)?;
            let records = phi_ratio_scan(&seq, k_min, k_max)?;
            let mut buf = Vec::new();
            write_ratio_csv(&records, &mut buf)?;
            emit(&out, &String::from_utf8(buf).expect("csv is utf8"))?;
            Ok(true)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::DecayPrecondition { .. } => 2,
        Error::Range { .. }
        | Error::Depth { .. }
        | Error::BudgetExceeded { .. }
        | Error::IndecisiveEnclosure { .. }
        | Error::IndecisiveDepth(_) => 3,
        Error::ConstructionIntegrity(_)
        | Error::CertificateRefused { .. }
        | Error::InvalidFile(_)
        | Error::Io(_)
        | Error::Json(_) => 1,
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {}", e);
            std::process::exit(exit_code(&e));
        }
    }
}
