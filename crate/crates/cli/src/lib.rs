//! The `domania` command line: argument handling and dispatch.
//!
//! Every command prints one JSON report on stdout. Exit status 0 means no
//! check failed (unknown verdicts are not failures), 1 means some check
//! failed, 2 means the invocation or its inputs were unusable.

pub mod commands;
pub mod parse;
pub mod report;
pub mod sources;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use commands::UsageError;

#[derive(Debug, Parser)]
#[command(name = "domania", version, about = "Recursive domain equations over domain-pers and their fixed points")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Suite {
    FunSpace,
    PerPreservation,
    StandardReps,
    LimitChains,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::FunSpace => "fun-space",
            Suite::PerPreservation => "per-preservation",
            Suite::StandardReps => "standard-reps",
            Suite::LimitChains => "limit-chains",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Build the ω-chain of domains and verify the fixed-point iso.
    SolveDomain {
        /// Equation file or inline equation text.
        #[arg(long)]
        eq: String,
        #[arg(long, default_value_t = 3)]
        stages: u32,
        /// Write the Hasse diagram of one stage as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Stage for `--dot`; defaults to the last one.
        #[arg(long)]
        dot_stage: Option<u32>,
        #[arg(long, default_value_t = 16)]
        nat_bound: usize,
    },
    /// Build the per chain through ω+M and probe where it stabilizes.
    PerLfp {
        #[arg(long)]
        eq: String,
        #[arg(long, default_value_t = 3)]
        rank_bound: u32,
        #[arg(long, default_value_t = 1)]
        beyond_omega: u32,
        #[arg(long, default_value_t = 16)]
        nat_bound: usize,
    },
    /// Dense least fixed point with the Δₙ / rₙ checks.
    Dense {
        #[arg(long)]
        eq: String,
        #[arg(long, default_value_t = 3)]
        rank_bound: u32,
        #[arg(long, default_value_t = 16)]
        nat_bound: usize,
    },
    /// η/ϑ adjunction and the η̄ weak-iso round trip.
    EtaRoundtrip {
        #[arg(long)]
        eq: String,
        #[arg(long, default_value_t = 3)]
        rank_bound: u32,
        /// Rank bound for the adjunction scan.
        #[arg(long, default_value_t = 2)]
        adjunction_rank_bound: u32,
        /// Largest number of step pairs in a scanned compact.
        #[arg(long, default_value_t = 2)]
        max_pairs: usize,
        #[arg(long, default_value_t = 16)]
        nat_bound: usize,
    },
    /// Fixed point of a qcb₀ operation over finite spaces.
    Qcb {
        #[arg(long)]
        eq: String,
        /// NAME=PATH space or per definition files, overriding declarations.
        #[arg(long, num_args = 1..)]
        space_files: Vec<String>,
        #[arg(long, default_value_t = 2)]
        rank_bound: u32,
        #[arg(long, default_value_t = 16)]
        nat_bound: usize,
    },
    /// The non-stabilizing chain of A + [N -> X] over flat naturals.
    Counterexample {
        /// A builtin source or a definition file.
        #[arg(long)]
        param: String,
        #[arg(long, default_value_t = 16)]
        nat_bound: usize,
        #[arg(long, default_value_t = 5)]
        check_bound: usize,
    },
    /// Exhaustive oracle suites over small carriers.
    Oracle {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 3)]
        max_size: usize,
        /// Number of chains for `limit-chains`.
        #[arg(long, default_value_t = 20)]
        chains: usize,
        /// Largest pseudobase for `standard-reps`.
        #[arg(long, default_value_t = 5)]
        max_sets: usize,
    },
    /// Independence of the fixed point from the chosen representations.
    Independence {
        #[arg(long)]
        eq: String,
        #[arg(long)]
        eq2: String,
        /// FROM=TO or FROM=TO:p>q,... for each parameter.
        #[arg(long, num_args = 1..)]
        iso: Vec<String>,
        #[arg(long, default_value_t = 2)]
        rank_bound: u32,
        #[arg(long, default_value_t = 16)]
        nat_bound: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Sampling order for the randomized scans.
pub fn seed() -> u64 {
    std::env::var("DOMANIA_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

fn dispatch(cmd: Cmd) -> Result<report::Report, UsageError> {
    use commands::*;
    match cmd {
        Cmd::SolveDomain { eq, stages, dot, dot_stage, nat_bound } => {
            let (e, cx) = load_equation(&eq, nat_bound)?;
            solve_domain(&e, &cx, &SolveArgs { stages, dot, dot_stage })
        }
        Cmd::PerLfp { eq, rank_bound, beyond_omega, nat_bound } => {
            let (e, cx) = load_equation(&eq, nat_bound)?;
            per_lfp(&e, &cx, rank_bound, beyond_omega)
        }
        Cmd::Dense { eq, rank_bound, nat_bound } => {
            let (e, cx) = load_equation(&eq, nat_bound)?;
            dense(&e, &cx, rank_bound)
        }
        Cmd::EtaRoundtrip { eq, rank_bound, adjunction_rank_bound, max_pairs, nat_bound } => {
            let (e, cx) = load_equation(&eq, nat_bound)?;
            eta_roundtrip(&e, &cx, rank_bound, adjunction_rank_bound, max_pairs)
        }
        Cmd::Qcb { eq, space_files, rank_bound, nat_bound } => {
            let (e, cx) = load_equation(&eq, nat_bound)?;
            qcb(&e, &cx, &space_files, rank_bound)
        }
        Cmd::Counterexample { param, nat_bound, check_bound } => counterexample(&param, nat_bound, check_bound),
        Cmd::Oracle { suite, max_size, chains, max_sets } => {
            oracle(suite.name(), &OracleArgs { max_size, chains, max_sets, seed: seed() })
        }
        Cmd::Independence { eq, eq2, iso, rank_bound, nat_bound } => {
            let (e, cx) = load_equation(&eq, nat_bound)?;
            let (e2, cx2) = load_equation(&eq2, nat_bound)?;
            independence(&e, &cx, &e2, &cx2, &iso, rank_bound)
        }
    }
}

/// Run one invocation; `args[0]` is the program name.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match dispatch(cli.cmd) {
        Ok(r) => Outcome { code: i32::from(r.failed()), stdout: r.to_json(), stderr: String::new() },
        Err(UsageError(msg)) => Outcome { code: 2, stdout: String::new(), stderr: format!("error: {msg}\n") },
    }
}
