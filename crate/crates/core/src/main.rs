use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use chacha_ced::ced::{check, InputParities, ParitySource, Scheme};
use chacha_ced::chacha::{self, CipherParams, NonceLayout, Rounds, BLOCK_LEN};
use chacha_ced::fault::{self, CampaignConfig, ErrorPolicy, FaultSpec, InputPolicy};
use chacha_ced::gate_model;
use chacha_ced::quarterround::{qr_output_parity, quarterround, Rotations};
use chacha_ced::signal::SignalId;
use chacha_ced::verify::{verify_identities, SampleMode};
use chacha_ced::word::Word;
use chacha_ced::Error;

#[derive(Parser)]
#[command(
    name = "chacha-ced",
    version,
    about = "ChaCha quarterround error-detection toolkit"
)]
struct Cli {
    /// Worker threads for campaigns and identity suites.
    #[arg(long, global = true, env = "CHACHA_CED_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Classic,
    Gbpp,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Classic => Scheme::Classic,
            SchemeArg::Gbpp => Scheme::Gbpp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Orig,
    Ietf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum ErrorsArg {
    OddExhaustive,
    OddRandom,
    SingleBit,
    EvenRandom,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParitySourceArg {
    Local,
    Upstream,
}

#[derive(Subcommand)]
enum Command {
    /// XOR input with the keystream.
    Encrypt {
        #[arg(long, default_value_t = 20)]
        rounds: u32,
        /// 32-byte key as hex.
        #[arg(long)]
        key: String,
        /// 8-byte (orig) or 12-byte (ietf) nonce as hex.
        #[arg(long)]
        nonce: String,
        #[arg(long, default_value_t = 0)]
        counter: u64,
        #[arg(long, value_enum, default_value = "ietf")]
        layout: LayoutArg,
        /// Run a checker on every quarterround; verdicts go to stderr as JSON lines.
        #[arg(long, value_enum)]
        check: Option<SchemeArg>,
        /// Input file (stdin when absent).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output file (stdout when absent).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print a full quarterround trace as JSON.
    QrTrace {
        #[arg(long, default_value_t = 32)]
        width: u32,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        c: String,
        #[arg(long)]
        d: String,
        /// Four comma-separated rotation amounts.
        #[arg(long, default_value = "16,12,8,7")]
        rotations: String,
        /// Fault as SIGNAL:HEXMASK; repeatable.
        #[arg(long = "fault")]
        faults: Vec<String>,
    },
    /// Check the parity identities; exits 1 on any violation.
    VerifyIdentities {
        #[arg(long)]
        width: u32,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a fault-injection campaign.
    Campaign {
        #[arg(long)]
        width: u32,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Comma-separated signal names, or `all`.
        #[arg(long, default_value = "all")]
        signals: String,
        #[arg(long, value_enum)]
        errors: ErrorsArg,
        /// Random input tuples; exhaustive inputs when absent.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Origin of the word parities fed to the group predictor.
        #[arg(long, value_enum, default_value = "local")]
        parity_source: ParitySourceArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        /// Classify the report against the expected coverage; exits 1 on mismatch.
        #[arg(long)]
        expect_paper: bool,
    },
    /// Gate count of a checker.
    Gates {
        #[arg(long, default_value_t = 32)]
        width: u32,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long)]
        json: bool,
    },
}

enum Failure {
    Usage(String),
    Verification(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::CounterOverflow => Failure::Io(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Failure {
        Failure::Io(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn parse_hex_bytes<const N: usize>(
    flag: &str,
    text: &str,
) -> std::result::Result<[u8; N], Failure> {
    let bytes = hex::decode(text.trim_start_matches("0x"))
        .map_err(|e| Failure::Usage(format!("--{flag}: {e}")))?;
    bytes.try_into().map_err(|b: Vec<u8>| {
        Failure::Usage(format!("--{flag}: expected {N} bytes, got {}", b.len()))
    })
}

fn write_output(path: Option<&PathBuf>, data: &[u8]) -> Outcome {
    match path {
        Some(p) => fs::write(p, data)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(data)?;
            out.flush()?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_encrypt(
    rounds: u32,
    key: &str,
    nonce: &str,
    counter: u64,
    layout: LayoutArg,
    scheme: Option<SchemeArg>,
    input: Option<&PathBuf>,
    output: Option<&PathBuf>,
) -> Outcome {
    let rounds = Rounds::try_from(rounds).map_err(|e| Failure::Usage(format!("--rounds: {e}")))?;
    let key = parse_hex_bytes::<32>("key", key)?;
    let layout = match layout {
        LayoutArg::Orig => NonceLayout::Original64x64,
        LayoutArg::Ietf => NonceLayout::Ietf96x32,
    };
    let nonce = hex::decode(nonce.trim_start_matches("0x"))
        .map_err(|e| Failure::Usage(format!("--nonce: {e}")))?;
    let params = CipherParams::new(rounds, key, layout, &nonce)
        .map_err(|e| Failure::Usage(format!("--nonce: {e}")))?;

    let mut data = Vec::new();
    match input {
        Some(p) => data = fs::read(p)?,
        None => {
            io::stdin().read_to_end(&mut data)?;
        }
    }
    chacha::apply_keystream(&params, counter, &mut data)?;

    if let Some(scheme) = scheme {
        let mut log = io::stderr().lock();
        for i in 0..data.len().div_ceil(BLOCK_LEN) as u64 {
            let (_, verdicts) = chacha::block_checked(&params, counter + i, scheme.into())?;
            for (qr, v) in verdicts.iter().enumerate() {
                let line = json!({ "block": counter + i, "qr": qr, "verdict": v });
                writeln!(log, "{line}")?;
            }
        }
    }
    write_output(output, &data)
}

fn run_qr_trace(width: u32, words: [&str; 4], rotations: &str, faults: &[String]) -> Outcome {
    let names = ["a", "b", "c", "d"];
    let mut inputs = Vec::with_capacity(4);
    for (name, text) in names.iter().zip(words) {
        inputs.push(
            Word::parse_hex(text, width).map_err(|e| Failure::Usage(format!("--{name}: {e}")))?,
        );
    }
    let [a, b, c, d]: [Word; 4] = inputs.try_into().expect("four words");
    let rot =
        Rotations::parse(rotations).map_err(|e| Failure::Usage(format!("--rotations: {e}")))?;
    let faults: Vec<FaultSpec> = faults
        .iter()
        .map(|f| FaultSpec::parse(f, width).map_err(|e| Failure::Usage(format!("--fault: {e}"))))
        .collect::<std::result::Result<_, _>>()?;
    let trace = quarterround(a, b, c, d, rot, &faults)?;
    let upstream = InputParities::upstream([a, b, c, d]);
    let ip = InputParities {
        p_block: upstream.p_block,
        ..InputParities::local(&trace)
    };
    let report = json!({
        "trace": trace,
        "output_parity": qr_output_parity(&trace),
        "faults": faults.iter().map(|f| json!({"signal": f.signal, "mask": format!("{:#x}", f.mask)})).collect::<Vec<_>>(),
        "checks": {
            "classic": check(Scheme::Classic, &trace, &ip),
            "gbpp": check(Scheme::Gbpp, &trace, &ip),
        },
    });
    let text = serde_json::to_string_pretty(&report).expect("trace serializes") + "\n";
    write_output(None, text.as_bytes())
}

fn run_verify(width: u32, mode: ModeArg, samples: Option<u64>, seed: u64) -> Outcome {
    let mode = match (mode, samples) {
        (ModeArg::Exhaustive, Some(_)) => {
            return Err(Failure::Usage(
                "--samples conflicts with --mode exhaustive".into(),
            ))
        }
        (ModeArg::Exhaustive, None) => SampleMode::Exhaustive,
        (ModeArg::Random, samples) => SampleMode::Random {
            samples: samples.unwrap_or(1_000_000),
            seed,
        },
    };
    let report =
        verify_identities(width, mode).map_err(|e| Failure::Usage(format!("--width: {e}")))?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_output(None, text.as_bytes())?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.violations > 0)
            .map(|c| c.name)
            .collect();
        Err(Failure::Verification(format!(
            "identity violations in {failed:?}"
        )))
    }
}

#[allow(clippy::too_many_arguments)]
fn run_campaign(
    jobs: usize,
    width: u32,
    scheme: SchemeArg,
    signals: &str,
    errors: ErrorsArg,
    samples: Option<u64>,
    seed: u64,
    parity_source: ParitySourceArg,
    out: Option<&PathBuf>,
    format: FormatArg,
    expect_paper: bool,
) -> Outcome {
    let signals =
        SignalId::parse_list(signals).map_err(|e| Failure::Usage(format!("--signals: {e}")))?;
    let error_policy = match errors {
        ErrorsArg::OddExhaustive => ErrorPolicy::AllOddExhaustive,
        ErrorsArg::OddRandom => ErrorPolicy::OddRandom,
        ErrorsArg::SingleBit => ErrorPolicy::SingleBit,
        ErrorsArg::EvenRandom => ErrorPolicy::EvenRandom,
    };
    let input_policy = match samples {
        Some(samples) => InputPolicy::Random { samples },
        None => InputPolicy::Exhaustive,
    };
    let mut config = CampaignConfig::new(width, scheme.into(), signals, error_policy, input_policy)
        .with_seed(seed);
    config.word_parities = match parity_source {
        ParitySourceArg::Local => ParitySource::ComputedLocal,
        ParitySourceArg::Upstream => ParitySource::SuppliedUpstream,
    };
    let report = fault::run_campaign_with_jobs(&config, jobs)?;
    let text = match format {
        FormatArg::Json => report.to_json() + "\n",
        FormatArg::Csv => report.to_csv(),
    };
    write_output(out, text.as_bytes())?;

    if expect_paper {
        let verdict = fault::classify_report(&report)?;
        eprintln!(
            "{}",
            serde_json::to_string(&verdict).expect("classification serializes")
        );
        if !verdict.pass {
            let bad: Vec<String> = verdict
                .rows
                .iter()
                .filter(|r| !r.ok)
                .map(|r| r.signal.to_string())
                .collect();
            return Err(Failure::Verification(format!(
                "coverage expectation unmet for {bad:?}"
            )));
        }
    }
    Ok(())
}

fn run_gates(width: u32, scheme: SchemeArg, as_json: bool) -> Outcome {
    let tally = gate_model::count(scheme.into(), width)
        .map_err(|e| Failure::Usage(format!("--width: {e}")))?;
    let text = if as_json {
        serde_json::to_string_pretty(&tally).expect("tally serializes") + "\n"
    } else {
        tally.to_string()
    };
    write_output(None, text.as_bytes())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build_global()
    {
        eprintln!("warning: {e}");
    }

    let outcome = match &cli.command {
        Command::Encrypt {
            rounds,
            key,
            nonce,
            counter,
            layout,
            check,
            input,
            output,
        } => run_encrypt(
            *rounds,
            key,
            nonce,
            *counter,
            *layout,
            *check,
            input.as_ref(),
            output.as_ref(),
        ),
        Command::QrTrace {
            width,
            a,
            b,
            c,
            d,
            rotations,
            faults,
        } => run_qr_trace(*width, [a, b, c, d], rotations, faults),
        Command::VerifyIdentities {
            width,
            mode,
            samples,
            seed,
        } => run_verify(*width, *mode, *samples, *seed),
        Command::Campaign {
            width,
            scheme,
            signals,
            errors,
            samples,
            seed,
            parity_source,
            out,
            format,
            expect_paper,
        } => run_campaign(
            jobs,
            *width,
            *scheme,
            signals,
            *errors,
            *samples,
            *seed,
            *parity_source,
            out.as_ref(),
            *format,
            *expect_paper,
        ),
        Command::Gates {
            width,
            scheme,
            json,
        } => run_gates(*width, *scheme, *json),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
