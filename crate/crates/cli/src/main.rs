//! `rsplab`: generate PKI fixtures, run provisioning scenarios and check
//! transcripts against golden files.
//!
//! Everything machine-readable goes to stdout as JSON. Diagnostics go to
//! stderr. Exit codes: 0 success, 1 mismatch, 2 usage or I/O problems.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use rsplab_core::harness::{self, Verdict};
use rsplab_core::tlv::TlvCodec;
use rsplab_core::{PkiFixture, ScenarioSpec, World};

#[derive(Parser)]
#[command(name = "rsplab", version, about = "Remote SIM provisioning lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fixture key material.
    Pki {
        #[command(subcommand)]
        command: PkiCommand,
    },
    /// Run a scenario file and print the run summary.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long, env = "RSPLAB_SEED")]
        seed: Option<u64>,
        /// Write the transcript here as JSONL.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Compare the transcript with this golden file.
        #[arg(long)]
        golden: Option<PathBuf>,
    },
    /// Transcript utilities.
    Transcript {
        #[command(subcommand)]
        command: TranscriptCommand,
    },
}

#[derive(Subcommand)]
enum PkiCommand {
    /// Generate the fixture for a seed and write it as TLV.
    Init {
        #[arg(long, env = "RSPLAB_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the key ids of a fixture file.
    Show { path: PathBuf },
}

#[derive(Subcommand)]
enum TranscriptCommand {
    /// Compare a transcript with a golden file.
    Verify {
        path: PathBuf,
        #[arg(long)]
        golden: PathBuf,
    },
}

/// Problems that are the caller's fault rather than a failed run.
struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pki { command: PkiCommand::Init { seed, out } } => pki_init(seed, &out),
        Command::Pki { command: PkiCommand::Show { path } } => pki_show(&path),
        Command::Run {
            scenario,
            seed,
            transcript,
            golden,
        } => run(&scenario, seed, transcript.as_deref(), golden.as_deref()),
        Command::Transcript {
            command: TranscriptCommand::Verify { path, golden },
        } => verify(&path, &golden),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Usage(message)) => {
            eprintln!("rsplab: {message}");
            ExitCode::from(2)
        }
    }
}

fn print(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON values serialize"));
}

fn fixture_json(fixture: &PkiFixture, bytes: &[u8]) -> Value {
    json!({
        "seed": fixture.seed,
        "sha256": hex::encode(Sha256::digest(bytes)),
        "keyIds": fixture.key_ids(),
    })
}

fn pki_init(seed: u64, out: &Path) -> Result<bool, Usage> {
    let fixture = PkiFixture::generate(seed);
    let bytes = fixture.to_tlv();
    fs::write(out, &bytes).map_err(|e| Usage(format!("cannot write {}: {e}", out.display())))?;
    eprintln!("wrote {} bytes to {}", bytes.len(), out.display());
    print(&fixture_json(&fixture, &bytes));
    Ok(true)
}

fn pki_show(path: &Path) -> Result<bool, Usage> {
    let bytes = fs::read(path).map_err(|e| Usage(format!("cannot read {}: {e}", path.display())))?;
    let fixture = PkiFixture::from_tlv(&bytes).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    print(&fixture_json(&fixture, &bytes));
    Ok(true)
}

fn run(path: &Path, seed: Option<u64>, transcript: Option<&Path>, golden: Option<&Path>) -> Result<bool, Usage> {
    let text = fs::read_to_string(path).map_err(|e| Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut spec = ScenarioSpec::from_json(&text).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    if let Some(golden) = golden {
        if !golden.exists() {
            return Err(Usage(format!("golden file {} not found", golden.display())));
        }
    }

    let mut world = World::build(&spec)?;
    let summary = world.run();
    let entries = world.transcript();
    let jsonl = harness::to_jsonl(&entries);
    eprintln!(
        "{}: {} after {} messages",
        spec.name,
        summary.report.outcome.name(),
        entries.len()
    );
    if let Some(out) = transcript {
        harness::write_transcript(out, &entries)?;
    }

    let misses = summary.check(spec.expect.as_ref());
    let mut ok = misses.is_empty();
    let mut output = serde_json::to_value(&summary)?;
    output["expectation"] = json!({ "met": ok, "misses": misses });
    if let Some(golden) = golden {
        let expected = fs::read_to_string(golden)?;
        let verdict = harness::compare_lines(&jsonl, &expected);
        ok &= verdict == Verdict::Equal;
        output["golden"] = serde_json::to_value(verdict)?;
    }
    print(&output);
    Ok(ok)
}

fn verify(path: &Path, golden: &Path) -> Result<bool, Usage> {
    match harness::verify_transcript(path, golden) {
        Ok(verdict) => {
            print(&serde_json::to_value(verdict)?);
            if let Verdict::FirstDivergence { seq } = verdict {
                eprintln!("transcripts diverge at seq {seq}");
            }
            Ok(verdict == Verdict::Equal)
        }
        Err(e) => Err(Usage(e.to_string())),
    }
}
