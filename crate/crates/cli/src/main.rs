mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::config::Config;

#[derive(Parser, Debug)]
#[command(name = "tracenorm", version, about = "Normal and primitive elements with prescribed intermediate traces")]
pub struct Cli {
    /// TOML file with defaults (also read from TRACENORM_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Also write the JSON result to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the census and the sieve.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Progress notes on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct FieldArgs {
    #[arg(long)]
    pub p: Option<u64>,
    /// Degree of F_q over F_p.
    #[arg(long)]
    pub e: Option<u32>,
    /// Degree of the extension over F_q.
    #[arg(long)]
    pub m: Option<u32>,
    /// Explicit modulus, base-p coefficients with the constant term first.
    #[arg(long, value_delimiter = ',')]
    pub modulus: Option<Vec<u64>>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum ModeArg {
    Exact,
    Bounded,
    #[value(alias = "log-space")]
    Log,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum SourceArg {
    Best,
    Table,
    Computed,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Modulus, primitive root, factorization of q^m - 1 and of x^m - 1.
    FieldInfo {
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Factor a polynomial over F_q, or an integer.
    Factor {
        #[command(flatten)]
        field: FieldArgs,
        /// Polynomial as text (`x^4+x+1`) or a coefficient array (`[1,1,0,0,1]`).
        #[arg(long, conflicts_with = "int")]
        poly: Option<String>,
        /// Integer to factor.
        #[arg(long)]
        int: Option<String>,
    },
    /// Additive and multiplicative order of an element.
    Order {
        #[command(flatten)]
        field: FieldArgs,
        /// Element encoding.
        #[arg(long)]
        element: u64,
    },
    /// Tr_{m/d} of an element.
    Trace {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        element: u64,
        #[arg(long)]
        d: u32,
    },
    /// Solve Tr_{m/d_i}(x) = a_i.
    SolveTraces {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<u32>,
        /// Element encodings, one per entry of d.
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<u64>,
    },
    /// Number of normal elements with prescribed traces.
    CountNormal {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<u64>,
    },
    /// Evaluate the sufficient inequality.
    CheckBound {
        /// Integer or `1eE` for 10^E.
        #[arg(long)]
        q: String,
        #[arg(long)]
        m: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<u32>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Apply the existence case table.
    Dispatch {
        #[arg(long)]
        q: String,
        #[arg(long)]
        m: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<u32>,
    },
    /// Classify every element by primitivity, normality and traces.
    Census {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<u32>,
        /// Largest field size accepted (overrides TRACENORM_CENSUS_CAP).
        #[arg(long)]
        cap: Option<u64>,
        /// Skip the per-subfield trace histograms.
        #[arg(long)]
        no_fibers: bool,
        /// Include wall-clock time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Run census-backed theorem checks; exit 2 if any fails.
    Verify {
        #[command(flatten)]
        field: FieldArgs,
        /// Restrict to one field and tuple instead of the default suite.
        #[arg(long, value_delimiter = ',')]
        d: Option<Vec<u32>>,
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Sieve constants C_nu.
    Constants {
        #[arg(long, value_delimiter = ',', default_values_t = [11u32, 12, 31])]
        nu: Vec<u32>,
        #[arg(long, value_enum, default_value = "best")]
        source: SourceArg,
        /// Allow computing up to nu = 31.
        #[arg(long)]
        extended: bool,
    },
}

/// Why a command stopped.
pub enum Failure {
    Validation(String, &'static str),
    Verification(Value),
}

impl From<tracenorm::Error> for Failure {
    fn from(e: tracenorm::Error) -> Self {
        Failure::Validation(e.to_string(), error_kind(&e))
    }
}

fn error_kind(e: &tracenorm::Error) -> &'static str {
    use tracenorm::Error::*;
    match e {
        NotPrime(_) | InvalidSpec(_) | BadModulus(_) | FieldTooLarge { .. } => "invalid_field",
        FactorBudget(_) => "factor_budget",
        ZeroInverse | ZeroElement | InvalidElement(_) | NotInSubfield(_) => "invalid_element",
        NotADivisor { .. } | InvalidTuple(_) => "invalid_tuple",
        InvalidPoly(_) => "invalid_polynomial",
        NoDlogTable { .. } | DivisorCap { .. } | CensusCap { .. } | SieveBudget { .. } => "cap_exceeded",
        NotAdmissible => "not_admissible",
        NotCoprime { .. } => "not_coprime",
        AuditFailure(_) => "audit_failure",
        Inconsistent(_) => "inconsistent",
        Unsupported(_) => "unsupported",
    }
}

fn emit(v: &Value) {
    let mut out = std::io::stdout().lock();
    // a closed pipe is not worth a panic
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).unwrap());
}

fn error_json(message: &str, kind: &str) -> Value {
    json!({ "error": { "kind": kind, "message": message } })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            emit(&error_json(e.to_string().trim(), "usage"));
            return ExitCode::from(1);
        }
    };
    let cfg = match Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            emit(&error_json(&e, "config"));
            return ExitCode::from(1);
        }
    };
    let (value, code) = match commands::run(&cli, &cfg) {
        Ok(v) => (v, 0),
        Err(Failure::Validation(msg, kind)) => (error_json(&msg, kind), 1),
        Err(Failure::Verification(v)) => (v, 2),
    };
    if let (Some(path), 0 | 2) = (&cli.out, code) {
        let text = serde_json::to_string_pretty(&value).unwrap() + "\n";
        if let Err(e) = std::fs::write(path, text) {
            emit(&error_json(&format!("{}: {e}", path.display()), "io"));
            return ExitCode::from(1);
        }
    }
    emit(&value);
    ExitCode::from(code)
}
