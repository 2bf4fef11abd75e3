//! Command-line driver: runs elections phase by phase over a state
//! directory, exercises the voter-side tracker tools, and verifies or
//! audits any transcript file.

mod state;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use electryo::codec::Canon;
use electryo::group::seeded_rng;
use electryo::pipeline::config::ElectionConfig;
use electryo::pipeline::dispute::resolve_dispute;
use electryo::pipeline::rla::{rla_bb_to_paper, rla_paper_to_bb, PaperMatch};
use electryo::pipeline::run::{cast_vote, close_voting, notify_phase, run_stage1, run_stage2, setup};
use electryo::pipeline::scenario::{run_scenario, ScenarioScript};
use electryo::pipeline::verify::universal_verify;
use electryo::polling::VoterCredential;
use electryo::selene::{fake_alpha, retrieve_tracker};
use electryo::{GroupElement, Transcript};

use state::StateDir;

#[derive(Parser)]
#[command(name = "electryo", about = "polling-station election simulator and verifier")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Create a new election in a state directory.
    Setup {
        #[arg(long)]
        state: PathBuf,
        /// Election configuration file (JSON); defaults are used if absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        voters: Option<usize>,
        #[arg(long)]
        candidates: Option<usize>,
        /// Master seed; every run with the same seed is byte-identical.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cast one voter's ballot at the polling station.
    Vote {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        voter: usize,
        #[arg(long)]
        candidate: usize,
    },
    /// End the voting phase: scanners publish their tuples.
    Close {
        #[arg(long)]
        state: PathBuf,
    },
    /// Stage 1: mix the cast tuples, decrypt identities, check eligibility.
    Mix {
        #[arg(long)]
        state: PathBuf,
    },
    /// Stage 2: mix tracker/vote pairs and decrypt the tally board.
    Tally {
        #[arg(long)]
        state: PathBuf,
    },
    /// Gate receipt codes and deliver alpha terms to checking voters.
    Notify {
        #[arg(long)]
        state: PathBuf,
        /// Comma-separated voter indices; defaults to everyone who cast.
        #[arg(long)]
        voters: Option<String>,
    },
    /// Run the universal verifier over a transcript file.
    Verify {
        #[arg(long)]
        transcript: PathBuf,
    },
    /// Comparison risk-limiting audit.
    Audit {
        #[arg(long)]
        state: PathBuf,
        /// "bb-to-paper" or "paper-to-bb".
        #[arg(long, default_value = "bb-to-paper")]
        direction: String,
        #[arg(long, default_value_t = 5)]
        sample_size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Paper ballot (box serial) for the paper-to-bb direction.
        #[arg(long)]
        ballot: Option<usize>,
    },
    /// Resolve a voter complaint against the paper record.
    Dispute {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        voter: usize,
        #[arg(long)]
        claimed: usize,
    },
    /// Coercion mitigation: compute a fake alpha and optionally suppress
    /// the real one.
    Coerce {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        voter: usize,
        #[arg(long)]
        target_tracker: u64,
        #[arg(long)]
        suppress: bool,
    },
    /// Run a whole scripted election in one step.
    Scenario {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long)]
        voters: Option<usize>,
        #[arg(long)]
        candidates: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Where to write the human-readable report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Bulletin-board tools.
    Bb {
        #[command(subcommand)]
        cmd: BbCmd,
    },
    /// Voter-device tools.
    Voter {
        #[command(subcommand)]
        cmd: VoterCmd,
    },
}

#[derive(Subcommand)]
enum BbCmd {
    /// Check the hash chain and phase ordering of a transcript file.
    Verify {
        transcript: PathBuf,
    },
}

#[derive(Subcommand)]
enum VoterCmd {
    /// Open the tracker with a delivered alpha term (hex).
    RetrieveTracker {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        alpha: String,
    },
    /// Compute the alpha term that opens the commitment to any tracker.
    FakeAlpha {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        target: u64,
    },
}

fn load_config(
    path: Option<PathBuf>,
    voters: Option<usize>,
    candidates: Option<usize>,
    seed: Option<u64>,
) -> Result<ElectionConfig> {
    let mut config = match path {
        Some(p) => serde_json::from_str(&fs::read_to_string(&p)?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => ElectionConfig::desk_default(voters.unwrap_or(25), candidates.unwrap_or(3), 1),
    };
    if let Some(v) = voters {
        config.voter_count = v;
    }
    if let Some(c) = candidates {
        config.candidates = (1..=c).map(|i| format!("candidate-{i}")).collect();
    }
    if let Some(s) = seed {
        config.seed = s;
        config.election_id = electryo::pipeline::config::election_id("cli", s);
    }
    Ok(config)
}

fn voter_row_for<'a>(
    transcript: &'a Transcript,
    cred: &VoterCredential,
) -> Result<(electryo::selene::VoterRow, u64)> {
    let view = electryo::pipeline::verify::parse_transcript(transcript);
    let max_n = view
        .params
        .as_ref()
        .map(|p| p.voter_count as u64)
        .context("transcript has no parameters record")?;
    let row = view
        .voter_rows
        .iter()
        .find(|r| r.id == cred.id)
        .context("no pre-vote row for this voter key")?
        .clone();
    let _ = transcript;
    Ok((row, max_n))
}

fn run() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Setup { state, config, voters, candidates, seed } => {
            let dir = StateDir::new(&state);
            dir.ensure_absent()?;
            let config = load_config(config, voters, candidates, seed)?;
            let st = setup(config, Vec::new()).map_err(|e| anyhow::anyhow!("{e}"))?;
            dir.save(&st)?;
            println!(
                "election {} set up: {} voters, {} candidates, tellers {}/{}, {} mix servers",
                String::from_utf8_lossy(&st.config.election_id),
                st.config.voter_count,
                st.config.candidates.len(),
                st.config.teller_threshold,
                st.config.teller_count,
                st.config.mix_servers
            );
            println!("state: {}", state.display());
        }
        Cmd::Vote { state, voter, candidate } => {
            let dir = StateDir::new(&state);
            let mut st = dir.load()?;
            let rc = cast_vote(&mut st, voter, candidate).map_err(|e| anyhow::anyhow!("{e}"))?;
            dir.save(&st)?;
            println!("voter {voter} cast a ballot; receipt code {}", rc.as_string());
        }
        Cmd::Close { state } => {
            let dir = StateDir::new(&state);
            let mut st = dir.load()?;
            close_voting(&mut st).map_err(|e| anyhow::anyhow!("{e}"))?;
            dir.save(&st)?;
            println!("voting closed; {} tuples published", st.published_tuples.len());
        }
        Cmd::Mix { state } => {
            let dir = StateDir::new(&state);
            let mut st = dir.load()?;
            run_stage1(&mut st).map_err(|e| anyhow::anyhow!("{e}"))?;
            dir.save(&st)?;
            println!(
                "stage 1 complete: {} eligible, {} flagged",
                st.eligible.len(),
                st.flags.len()
            );
        }
        Cmd::Tally { state } => {
            let dir = StateDir::new(&state);
            let mut st = dir.load()?;
            run_stage2(&mut st).map_err(|e| anyhow::anyhow!("{e}"))?;
            dir.save(&st)?;
            println!("tally board ({} rows):", st.tally.len());
            for (tracker, vote) in &st.tally {
                println!("  tracker {tracker:>4}  candidate-{vote}");
            }
        }
        Cmd::Notify { state, voters } => {
            let dir = StateDir::new(&state);
            let mut st = dir.load()?;
            let list: Vec<usize> = match voters {
                Some(s) => s
                    .split(',')
                    .map(|x| x.trim().parse().context("bad voter index"))
                    .collect::<Result<_>>()?,
                None => st.cast.iter().map(|cb| cb.voter_index).collect(),
            };
            notify_phase(&mut st, &list).map_err(|e| anyhow::anyhow!("{e}"))?;
            for voter in &list {
                match (st.tra.delivered.get(voter), st.retrievals.get(voter)) {
                    (Some(alpha), Some(tracker)) => println!(
                        "voter {voter}: alpha {} -> tracker {tracker}",
                        hex::encode(alpha.alpha.encode())
                    ),
                    (Some(alpha), None) => println!(
                        "voter {voter}: alpha {} delivered",
                        hex::encode(alpha.alpha.encode())
                    ),
                    (None, _) => println!("voter {voter}: no alpha (suppressed or gate failed)"),
                }
            }
            dir.save(&st)?;
        }
        Cmd::Verify { transcript } => {
            let bytes = fs::read(&transcript)?;
            let t = Transcript::from_bytes(&bytes).map_err(|e| anyhow::anyhow!("{e}"))?;
            let report = universal_verify(&t);
            print!("{}", report.render());
            if !report.is_clean() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Audit { state, direction, sample_size, seed, ballot } => {
            let dir = StateDir::new(&state);
            let mut st = dir.load()?;
            let mut rng = seeded_rng(&seed.to_be_bytes(), "cli-audit");
            match direction.as_str() {
                "bb-to-paper" => {
                    let record = rla_bb_to_paper(&mut st, sample_size, &mut rng, true)
                        .map_err(|e| anyhow::anyhow!("{e}"))?;
                    println!("{}", record.notes);
                    println!("sampled rows: {:?}", record.sampled);
                    if record.detected() {
                        println!("MISMATCHES at rows {:?}", record.mismatches);
                    }
                }
                "paper-to-bb" => {
                    let serial = ballot.context("--ballot required for paper-to-bb")?;
                    let paper = st
                        .paper_store
                        .get(serial)
                        .context("no paper ballot with that serial")?
                        .clone();
                    let (outcome, _) = rla_paper_to_bb(&mut st, &paper, &mut rng, true)
                        .map_err(|e| anyhow::anyhow!("{e}"))?;
                    match outcome {
                        PaperMatch::Match(i) => println!("unique electronic record: row {i}"),
                        PaperMatch::NoMatch => println!("NO electronic record for this ballot"),
                        PaperMatch::MultiMatch(v) => println!("DUPLICATE records at rows {v:?}"),
                    }
                }
                other => bail!("unknown direction {other:?}"),
            }
            dir.save(&st)?;
        }
        Cmd::Dispute { state, voter, claimed } => {
            let dir = StateDir::new(&state);
            let mut st = dir.load()?;
            let outcome =
                resolve_dispute(&mut st, voter, claimed).map_err(|e| anyhow::anyhow!("{e}"))?;
            dir.save(&st)?;
            println!("verdict: {:?}", outcome.verdict);
            println!("{}", outcome.details);
        }
        Cmd::Coerce { state, voter, target_tracker, suppress } => {
            let dir = StateDir::new(&state);
            let mut st = dir.load()?;
            let cred = st.credentials[voter].clone();
            let commitment = st.voter_rows[voter].commitment.clone();
            let fake = fake_alpha(&st.spec, &cred.trapdoor.sk, &commitment, voter, target_tracker)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            println!("fake alpha for tracker {target_tracker}: {}", hex::encode(fake.alpha.encode()));
            if suppress {
                st.tra.suppress(voter);
                println!("real alpha suppressed at the TRA for voter {voter}");
            }
            dir.save(&st)?;
        }
        Cmd::Scenario { state, config, script, voters, candidates, seed, report } => {
            let dir = StateDir::new(&state);
            dir.ensure_absent()?;
            let config = load_config(config, voters, candidates, seed)?;
            let script = match script {
                Some(p) => serde_json::from_str(&fs::read_to_string(&p)?)
                    .with_context(|| format!("parsing {}", p.display()))?,
                None => ScenarioScript::all_honest(config.voter_count, config.candidates.len()),
            };
            let (st, rep) = run_scenario(config, &script).map_err(|e| anyhow::anyhow!("{e}"))?;
            dir.save(&st)?;
            let rendered = rep.render();
            print!("{rendered}");
            if let Some(path) = report {
                fs::write(path, rendered)?;
            }
            if !rep.verify.is_clean() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Bb { cmd: BbCmd::Verify { transcript } } => {
            let bytes = fs::read(&transcript)?;
            let t = Transcript::from_bytes(&bytes).map_err(|e| anyhow::anyhow!("{e}"))?;
            match t.verify_chain() {
                Ok(()) => {
                    let snap = t.snapshot();
                    println!(
                        "chain ok: {} entries, head {}",
                        snap.length,
                        hex::encode(snap.head_hash)
                    );
                }
                Err(e) => {
                    println!("chain BROKEN: {e}");
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
        Cmd::Voter { cmd } => match cmd {
            VoterCmd::RetrieveTracker { transcript, key, alpha } => {
                let t = Transcript::from_bytes(&fs::read(&transcript)?)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                let cred = VoterCredential::decode_all(&fs::read(&key)?)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                let (row, max_n) = voter_row_for(&t, &cred)?;
                let alpha_bytes = hex::decode(alpha.trim())?;
                let alpha = GroupElement::decode_all(&alpha_bytes)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                let spec = electryo::GroupSpec::by_backend(
                    electryo::pipeline::verify::parse_transcript(&t)
                        .params
                        .map(|p| {
                            if p.group_name == "qr-safe-prime-256" {
                                electryo::Backend::ProdGroup
                            } else {
                                electryo::Backend::TestGroup
                            }
                        })
                        .context("no parameters")?,
                );
                match retrieve_tracker(&spec, &cred.trapdoor.sk, &alpha, &row.commitment, max_n) {
                    Ok(tracker) => println!("tracker: {tracker}"),
                    Err(e) => {
                        println!("alpha does not open to a valid tracker: {e}");
                        return Ok(ExitCode::FAILURE);
                    }
                }
            }
            VoterCmd::FakeAlpha { transcript, key, target } => {
                let t = Transcript::from_bytes(&fs::read(&transcript)?)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                let cred = VoterCredential::decode_all(&fs::read(&key)?)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                let (row, _) = voter_row_for(&t, &cred)?;
                let view = electryo::pipeline::verify::parse_transcript(&t);
                let spec = electryo::GroupSpec::by_backend(
                    view.params
                        .map(|p| {
                            if p.group_name == "qr-safe-prime-256" {
                                electryo::Backend::ProdGroup
                            } else {
                                electryo::Backend::TestGroup
                            }
                        })
                        .context("no parameters")?,
                );
                let fake = fake_alpha(&spec, &cred.trapdoor.sk, &row.commitment, 0, target)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                println!("{}", hex::encode(fake.alpha.encode()));
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
