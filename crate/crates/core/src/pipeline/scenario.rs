//! Declarative scenario scripts: per-voter action lists plus optional
//! adversarial corruptions, driven through the full election lifecycle.
//! Also holds the transcript-mutation tools the tamper fixtures use to
//! model a corrupt bulletin board that rewrites entries and re-chains.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bb::{BbEntry, Transcript};
use crate::codec::Canon;
use crate::pipeline::config::ElectionConfig;
use crate::pipeline::records::Record;
use crate::pipeline::run::{
    cast_vote, close_voting, notify_phase, run_stage1, run_stage2, setup, Corruption,
    ElectionState,
};
use crate::pipeline::verify::{universal_verify, VerifyReport};
use crate::pipeline::PipelineError;
use crate::selene::{fake_alpha, retrieve_tracker};

/// What one voter does in the scripted election.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum VoterAction {
    /// Vote for `candidate`; optionally run the tracker check afterwards.
    Vote { candidate: usize, #[serde(default = "default_true")] check: bool },
    Abstain,
    /// Vote `real`, then evade coercion by faking towards any board row
    /// showing `coercer_candidate` and suppressing the real alpha.
    Coerced { real: usize, coercer_candidate: usize },
}

fn default_true() -> bool {
    true
}

/// Scenario file: one action per voter, in roll order.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ScenarioScript {
    pub actions: Vec<VoterAction>,
    #[serde(default)]
    pub corruptions: Vec<ScriptCorruption>,
}

/// Serializable mirror of the runtime corruption hooks.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScriptCorruption {
    SwapVotes { a: usize, b: usize },
    ForgeSignature { voter: usize, signer: usize },
    DuplicateEncId { src: usize, dst: usize },
    ScannerFlipVote { voter: usize, vote: usize },
    DropCastTuple { voter: usize },
    DropMixRow { server: usize, row: usize },
    EditTallyRow { row: usize, vote: usize },
}

impl From<ScriptCorruption> for Corruption {
    fn from(c: ScriptCorruption) -> Corruption {
        match c {
            ScriptCorruption::SwapVotes { a, b } => Corruption::SwapVotes { a, b },
            ScriptCorruption::ForgeSignature { voter, signer } => {
                Corruption::ForgeSignature { voter, signer }
            }
            ScriptCorruption::DuplicateEncId { src, dst } => {
                Corruption::DuplicateEncId { src, dst }
            }
            ScriptCorruption::ScannerFlipVote { voter, vote } => {
                Corruption::ScannerFlipVote { voter, vote }
            }
            ScriptCorruption::DropCastTuple { voter } => Corruption::DropCastTuple { voter },
            ScriptCorruption::DropMixRow { server, row } => Corruption::DropMixRow { server, row },
            ScriptCorruption::EditTallyRow { row, vote } => Corruption::EditTallyRow { row, vote },
        }
    }
}

impl ScenarioScript {
    pub fn all_honest(voters: usize, candidates: usize) -> Self {
        ScenarioScript {
            actions: (0..voters)
                .map(|i| VoterAction::Vote { candidate: 1 + i % candidates, check: true })
                .collect(),
            corruptions: Vec::new(),
        }
    }
}

/// What a coerced voter ends up holding.
#[derive(Debug, Clone)]
pub struct CoercionOutcome {
    pub voter_index: usize,
    pub real_vote: usize,
    pub real_tracker: u64,
    pub fake_tracker: u64,
    /// What the coercer sees when the voter opens the pair in front of
    /// them with the faked alpha.
    pub coerced_view_tracker: u64,
    pub coerced_view_vote: u32,
}

#[derive(Debug, Clone, Default)]
pub struct ScenarioReport {
    pub tally: Vec<(u64, u32)>,
    /// Off-transcript randomized notification order.
    pub notification_order: Vec<usize>,
    /// Tracker each checking voter retrieved through the honest path.
    pub retrievals: BTreeMap<usize, u64>,
    /// Whether the board row under the retrieved tracker shows the
    /// voter's own cast vote.
    pub retrieval_matches: BTreeMap<usize, bool>,
    pub coercions: Vec<CoercionOutcome>,
    pub verify: VerifyReport,
}

impl ScenarioReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("tally board (tracker, vote):\n");
        for (t, v) in &self.tally {
            out.push_str(&format!("  {t:>4}  candidate-{v}\n"));
        }
        out.push_str(&format!("notification order: {:?}\n", self.notification_order));
        for (voter, tracker) in &self.retrievals {
            out.push_str(&format!(
                "voter {voter}: tracker {tracker}, vote matches: {}\n",
                self.retrieval_matches.get(voter).copied().unwrap_or(false)
            ));
        }
        for c in &self.coercions {
            out.push_str(&format!(
                "coerced voter {}: real tracker {} (vote {}), shows tracker {} opening to candidate {}\n",
                c.voter_index, c.real_tracker, c.real_vote, c.coerced_view_tracker, c.coerced_view_vote
            ));
        }
        out.push_str("verification:\n");
        out.push_str(&self.verify.render());
        out
    }
}

/// Runs a full scripted election and returns the final state plus report.
pub fn run_scenario(
    config: ElectionConfig,
    script: &ScenarioScript,
) -> Result<(ElectionState, ScenarioReport), PipelineError> {
    if script.actions.len() != config.voter_count {
        return Err(PipelineError::Scenario {
            step: "script".into(),
            reason: format!(
                "{} actions for {} voters",
                script.actions.len(),
                config.voter_count
            ),
        });
    }
    let corruptions: Vec<Corruption> =
        script.corruptions.iter().cloned().map(Corruption::from).collect();
    let mut state = setup(config, corruptions)?;

    let mut cast_votes: BTreeMap<usize, usize> = BTreeMap::new();
    for (voter, action) in script.actions.iter().enumerate() {
        match action {
            VoterAction::Abstain => {}
            VoterAction::Vote { candidate, .. } => {
                cast_vote(&mut state, voter, *candidate)?;
                cast_votes.insert(voter, *candidate);
            }
            VoterAction::Coerced { real, .. } => {
                cast_vote(&mut state, voter, *real)?;
                cast_votes.insert(voter, *real);
            }
        }
    }
    close_voting(&mut state)?;
    run_stage1(&mut state)?;
    run_stage2(&mut state)?;

    // the pause: coerced voters read the board, pick their fake tracker
    // and register for suppression before any alpha is released
    let mut coercions = Vec::new();
    for (voter, action) in script.actions.iter().enumerate() {
        let VoterAction::Coerced { real, coercer_candidate } = action else {
            continue;
        };
        let fake_tracker = state
            .tally
            .iter()
            .find(|(_, v)| *v as usize == *coercer_candidate)
            .map(|(t, _)| *t)
            .ok_or_else(|| PipelineError::Scenario {
                step: format!("coerce-{voter}"),
                reason: format!("no board row shows candidate {coercer_candidate}"),
            })?;
        state.tra.suppress(voter);

        let cred = &state.credentials[voter];
        let commitment = &state.voter_rows[voter].commitment;
        let fake = fake_alpha(
            &state.spec,
            &cred.trapdoor.sk,
            commitment,
            voter,
            fake_tracker,
        )?;
        let coerced_view_tracker = retrieve_tracker(
            &state.spec,
            &cred.trapdoor.sk,
            &fake.alpha,
            commitment,
            state.max_tracker(),
        )?;
        let coerced_view_vote = state
            .tally
            .iter()
            .find(|(t, _)| *t == coerced_view_tracker)
            .map(|(_, v)| *v)
            .unwrap_or(0);

        // oracle: the real alpha still opens to the real tracker and vote
        let real_alpha = state.tra.assemble_alpha(&state.spec, state.tellers_public.n, voter)?;
        let real_tracker = retrieve_tracker(
            &state.spec,
            &cred.trapdoor.sk,
            &real_alpha.alpha,
            commitment,
            state.max_tracker(),
        )?;
        coercions.push(CoercionOutcome {
            voter_index: voter,
            real_vote: *real,
            real_tracker,
            fake_tracker,
            coerced_view_tracker,
            coerced_view_vote,
        });
    }

    let checking: Vec<usize> = script
        .actions
        .iter()
        .enumerate()
        .filter_map(|(voter, action)| match action {
            VoterAction::Vote { check: true, .. } => Some(voter),
            VoterAction::Coerced { .. } => Some(voter),
            _ => None,
        })
        .collect();
    let notification_order = notify_phase(&mut state, &checking)?;

    let mut retrieval_matches = BTreeMap::new();
    for (&voter, &tracker) in &state.retrievals {
        let board_vote = state.tally.iter().find(|(t, _)| *t == tracker).map(|(_, v)| *v);
        let cast = cast_votes.get(&voter).copied();
        retrieval_matches.insert(
            voter,
            board_vote.map(|v| v as usize) == cast,
        );
    }

    let verify = universal_verify(&state.transcript());
    let report = ScenarioReport {
        tally: state.tally.clone(),
        notification_order,
        retrievals: state.retrievals.clone(),
        retrieval_matches,
        coercions,
        verify,
    };
    Ok((state, report))
}

// -- transcript mutation tools (corrupt bulletin board) --

/// Recomputes sequence numbers and the hash chain over edited entries, as
/// a bulletin board that rewrites history would.
pub fn rebuild_chain(entries: Vec<BbEntry>) -> Transcript {
    let mut bb = crate::bb::BulletinBoard::new();
    for e in entries {
        bb.append(e.phase, &e.author, e.payload)
            .expect("phase order preserved by construction");
    }
    bb.into_transcript()
}

/// Applies `edit` to the `n`-th record matching `select`, then re-chains.
pub fn edit_record(
    transcript: &Transcript,
    n: usize,
    select: impl Fn(&Record) -> bool,
    edit: impl Fn(Record) -> Record,
) -> Transcript {
    let mut hits = 0;
    let entries = transcript
        .entries
        .iter()
        .map(|e| {
            let mut entry = e.clone();
            if let Ok(record) = Record::decode_all(&entry.payload) {
                if select(&record) {
                    if hits == n {
                        entry.payload = edit(record).encode();
                    }
                    hits += 1;
                }
            }
            entry
        })
        .collect();
    rebuild_chain(entries)
}

/// Flips one byte of an entry's stored hash without re-chaining: the
/// minimal chain-integrity violation, leaving every payload intact.
pub fn corrupt_entry_hash(transcript: &Transcript, index: usize) -> Transcript {
    let mut t = transcript.clone();
    t.entries[index].entry_hash[0] ^= 0x01;
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_election_with_coercion() {
        let config = ElectionConfig::desk_default(6, 3, 501);
        let script = ScenarioScript {
            actions: vec![
                VoterAction::Vote { candidate: 1, check: true },
                VoterAction::Vote { candidate: 2, check: true },
                VoterAction::Coerced { real: 1, coercer_candidate: 3 },
                VoterAction::Vote { candidate: 3, check: false },
                VoterAction::Abstain,
                VoterAction::Vote { candidate: 2, check: true },
            ],
            corruptions: Vec::new(),
        };
        let (state, report) = run_scenario(config, &script).unwrap();
        assert!(report.verify.is_clean(), "{}", report.verify.render());

        // 5 ballots counted, abstainer absent
        assert_eq!(report.tally.len(), 5);

        // checking voters see their own vote
        for (_, matched) in &report.retrieval_matches {
            assert!(matched);
        }
        // the suppressed coerced voter received no real alpha
        assert!(!report.retrievals.contains_key(&2));

        let c = &report.coercions[0];
        assert_eq!(c.coerced_view_vote as usize, 3);
        assert_eq!(c.coerced_view_tracker, c.fake_tracker);
        // her real vote is still on the board under her real tracker
        let on_board = report
            .tally
            .iter()
            .find(|(t, _)| *t == c.real_tracker)
            .unwrap();
        assert_eq!(on_board.1 as usize, c.real_vote);
        assert_ne!(c.real_tracker, c.fake_tracker);

        let _ = state;
    }

    #[test]
    fn scenario_is_deterministic() {
        let config = ElectionConfig::desk_default(4, 2, 502);
        let script = ScenarioScript::all_honest(4, 2);
        let (state_a, _) = run_scenario(config.clone(), &script).unwrap();
        let (state_b, _) = run_scenario(config, &script).unwrap();
        assert_eq!(
            state_a.transcript().to_bytes(),
            state_b.transcript().to_bytes()
        );
    }

    #[test]
    fn script_files_round_trip() {
        let script = ScenarioScript {
            actions: vec![
                VoterAction::Vote { candidate: 2, check: true },
                VoterAction::Coerced { real: 1, coercer_candidate: 2 },
            ],
            corruptions: vec![ScriptCorruption::ScannerFlipVote { voter: 0, vote: 1 }],
        };
        let json = serde_json::to_string_pretty(&script).unwrap();
        let back: ScenarioScript = serde_json::from_str(&json).unwrap();
        assert_eq!(back.actions, script.actions);
        assert_eq!(back.corruptions, script.corruptions);
    }
}
