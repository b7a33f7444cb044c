//! `bcsa`: Monte Carlo sweeps and exact enumeration for broadcast coded
//! slotted ALOHA.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bcsa_core::oracle::enumerate_exact;
use bcsa_core::sweep::{parse_sweep, run_sweep, HandshakeSetting, LoadPoints, PairSelection, SweepConfig};
use bcsa_core::{DegreeDistribution, Error, OutcomeClass, ReceiverMode};
use clap::{Parser, ValueEnum};

const EXIT_IO: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_THEOREM: u8 = 3;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Broadcast,
    Unicast,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HandshakeArg {
    Fast,
    Verify,
    Off,
}

#[derive(Debug, Parser)]
#[command(name = "bcsa", version, about = "Broadcast coded slotted ALOHA handshake simulator")]
struct Args {
    /// Slots per frame.
    #[arg(long, default_value_t = 200)]
    slots: usize,

    /// Channel load(s) g = users / slots, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["sweep", "users"])]
    load: Vec<f64>,

    /// Inclusive load sweep START:STEP:STOP.
    #[arg(long, conflicts_with = "users")]
    sweep: Option<String>,

    /// User count(s) per frame, comma separated.
    #[arg(long, value_delimiter = ',')]
    users: Vec<usize>,

    /// Degree distribution, e.g. "0.25x2+0.6x3+0.15x8".
    #[arg(long, default_value = "0.86x3+0.14x8")]
    dist: String,

    /// Frames per load point.
    #[arg(long, default_value_t = 1000)]
    frames: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, value_enum, default_value_t = ModeArg::Broadcast)]
    mode: ModeArg,

    #[arg(long, value_enum, default_value_t = HandshakeArg::Fast)]
    handshake: HandshakeArg,

    /// "all" or "reference:K".
    #[arg(long, default_value = "all")]
    pairs: String,

    /// Append per-degree PLR columns plr_k{K}_d{D}.
    #[arg(long)]
    per_degree: bool,

    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Enumerate the instance exactly instead of simulating it.
    #[arg(long)]
    mode_oracle: bool,

    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Usage(String),
    Theorem(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::TheoremViolation { .. } => Failure::Theorem(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn parse_pairs(text: &str) -> Result<PairSelection, Failure> {
    if text == "all" {
        return Ok(PairSelection::All);
    }
    text.strip_prefix("reference:")
        .and_then(|k| k.parse().ok())
        .map(PairSelection::Reference)
        .ok_or_else(|| Failure::Usage(format!("--pairs expects all or reference:K, got '{text}'")))
}

fn emit(args: &Args, text: &str) -> Result<(), Failure> {
    match &args.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn oracle(args: &Args, dist: &DegreeDistribution, mode: ReceiverMode) -> Result<String, Failure> {
    let users = match args.users.as_slice() {
        [m] => *m,
        _ => return Err(Failure::Usage("--mode-oracle needs exactly one --users value".into())),
    };
    let exact = enumerate_exact(users, args.slots, dist, mode)?;
    let mut out = String::from("quantity,value\n");
    out.push_str(&format!("plr,{}\n", exact.plr));
    let names = ["p1", "p2", "p3", "p4", "p5"];
    for (name, class) in names.iter().zip(OutcomeClass::TABLE) {
        if let Some(p) = exact.outcome_probs.get(&class) {
            out.push_str(&format!("{name},{p}\n"));
        }
    }
    if let Some(p) = exact.outcome_probs.get(&OutcomeClass::Impossible) {
        out.push_str(&format!("impossible,{p}\n"));
    }
    for ((k, d), p) in &exact.per_degree_plr {
        out.push_str(&format!("plr_k{k}_d{d},{p}\n"));
    }
    Ok(out)
}

fn run(args: &Args) -> Result<(), Failure> {
    let dist = DegreeDistribution::parse(&args.dist)?;
    let mode = match args.mode {
        ModeArg::Broadcast => ReceiverMode::Broadcast,
        ModeArg::Unicast => ReceiverMode::Unicast,
    };
    if args.mode_oracle {
        let text = oracle(args, &dist, mode)?;
        return emit(args, &text);
    }
    let points = if let Some(sweep) = &args.sweep {
        LoadPoints::Loads(parse_sweep(sweep)?)
    } else if !args.users.is_empty() {
        LoadPoints::Users(args.users.clone())
    } else if !args.load.is_empty() {
        LoadPoints::Loads(args.load.clone())
    } else {
        LoadPoints::Loads(parse_sweep("0.1:0.1:0.9")?)
    };
    let config = SweepConfig {
        slots: args.slots,
        points,
        dist,
        frames: args.frames,
        seed: args.seed,
        mode,
        handshake: match args.handshake {
            HandshakeArg::Fast => HandshakeSetting::Fast,
            HandshakeArg::Verify => HandshakeSetting::Verify,
            HandshakeArg::Off => HandshakeSetting::Off,
        },
        pairs: parse_pairs(&args.pairs)?,
        per_degree: args.per_degree,
        threads: args.threads,
    };
    let result = run_sweep(&config)?;
    emit(args, &result.to_csv())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (code, message) = match failure {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Theorem(m) => (EXIT_THEOREM, m),
                Failure::Io(m) => (EXIT_IO, m),
            };
            eprintln!("bcsa: {message}");
            ExitCode::from(code)
        }
    }
}
