//! Dispute resolution. A complaint names a board discrepancy; the
//! authorities decrypt the complainant's ballot code in camera, pull the
//! paper ballot it identifies, and check the vote, the id and the
//! signature against the electronic record. The paper either contradicts
//! the board (system fault) or confirms it (complaint unsupported).

use crate::bb::Phase;
use crate::codec::Canon;
use crate::group::rcca::decrypt_chunks;
use crate::group::schnorr::{signature_from_wire, signature_wire_len, verify_sig};
use crate::pipeline::records::Record;
use crate::pipeline::rla::{audit_decrypt, decrypt_ballot_code};
use crate::pipeline::run::ElectionState;
use crate::pipeline::PipelineError;
use crate::polling::{ballot_signature_message, id_width};
use crate::tellers::reconstruct_secret;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The paper record contradicts the electronic one.
    SystemFault,
    /// The paper record confirms the electronic one (or the complainant
    /// never cast a ballot).
    ComplaintUnsupported,
}

#[derive(Debug, Clone)]
pub struct DisputeOutcome {
    pub verdict: Verdict,
    pub details: String,
}

/// Resolves a complaint of the form "the board row under my tracker shows
/// `claimed_vote`, which is not what I cast".
pub fn resolve_dispute(
    state: &mut ElectionState,
    voter_index: usize,
    claimed_vote: usize,
) -> Result<DisputeOutcome, PipelineError> {
    let voter_id = state.credentials[voter_index].id.clone();

    let Some(row_position) = state.eligible.iter().position(|r| r.id == voter_id) else {
        let attended = state.desk.has_voted(&voter_id);
        let outcome = DisputeOutcome {
            verdict: Verdict::ComplaintUnsupported,
            details: format!(
                "no counted ballot for the complainant; attendance log records voting: {attended}"
            ),
        };
        log_outcome(state, voter_index, claimed_vote, &outcome)?;
        return Ok(outcome);
    };

    // in-camera: recover the printed ballot code and locate the paper
    let printed = decrypt_ballot_code(state, row_position, true)?;
    let paper_index = printed.as_ref().and_then(|code| {
        state
            .paper_store
            .iter()
            .position(|b| b.code.components() == code.components())
    });
    let Some(paper_index) = paper_index else {
        let outcome = DisputeOutcome {
            verdict: Verdict::SystemFault,
            details: "no paper ballot carries the decrypted ballot code".into(),
        };
        log_outcome(state, voter_index, claimed_vote, &outcome)?;
        return Ok(outcome);
    };
    let paper = state.paper_store[paper_index].clone();

    // electronic vote behind the eligible row
    let enc_vote = state.eligible[row_position].enc_vote.clone();
    let vote_el = audit_decrypt(state, &enc_vote, &format!("dispute-vote-{voter_index}"), true)?;
    let electronic_vote = crate::group::elgamal::exp_decode(
        &state.spec,
        &vote_el,
        state.config.candidates.len() as u64,
    )
    .ok();

    // id and signature on the paper ballot, checked against the roll
    let spec = state.spec.clone();
    let eid = state.election_id().to_vec();
    let all: Vec<&crate::tellers::TellerShare> = state.teller_shares.iter().collect();
    let sk = reconstruct_secret(&spec, &all, state.tellers_public.t)?;
    let paper_id = decrypt_chunks(&spec, &eid, &sk, &paper.code.enc_id, id_width(&spec)).ok();
    let paper_sig =
        decrypt_chunks(&spec, &eid, &sk, &paper.code.enc_sig, signature_wire_len(&spec)).ok();
    let extra = state.signature_context();
    let extra_ref = extra.as_ref().map(|(d, p)| (d.as_str(), p.as_str()));
    let sig_ok = match (&paper_id, &paper_sig) {
        (Some(id), Some(sig_wire)) => signature_from_wire(&spec, sig_wire)
            .map(|sig| {
                verify_sig(
                    &spec,
                    &state.credentials[voter_index].signing.vk,
                    &ballot_signature_message(id, &eid, extra_ref),
                    &sig,
                )
            })
            .unwrap_or(false),
        _ => false,
    };
    let id_ok = paper_id.as_deref() == Some(voter_id.as_slice());

    let paper_vote = paper.vote.map(|v| v as u64);
    let outcome = if electronic_vote != paper_vote || !id_ok || !sig_ok {
        DisputeOutcome {
            verdict: Verdict::SystemFault,
            details: format!(
                "paper ballot {paper_index}: vote {paper_vote:?} vs electronic {electronic_vote:?}, id match {id_ok}, signature valid {sig_ok}"
            ),
        }
    } else {
        DisputeOutcome {
            verdict: Verdict::ComplaintUnsupported,
            details: format!(
                "paper ballot {paper_index} confirms the electronic record (vote {paper_vote:?}); claimed {claimed_vote}"
            ),
        }
    };
    log_outcome(state, voter_index, claimed_vote, &outcome)?;
    Ok(outcome)
}

fn log_outcome(
    state: &mut ElectionState,
    voter_index: usize,
    claimed_vote: usize,
    outcome: &DisputeOutcome,
) -> Result<(), PipelineError> {
    state.bb.append(
        Phase::AuditLog,
        "AUD",
        Record::AuditNote {
            label: format!("dispute-voter-{voter_index}"),
            detail: format!(
                "claimed {claimed_vote}: {:?}: {}",
                outcome.verdict, outcome.details
            ),
        }
        .encode(),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::config::ElectionConfig;
    use crate::pipeline::run::{cast_vote, close_voting, run_stage1, run_stage2, setup, Corruption};

    fn election(corruptions: Vec<Corruption>, seed: u64) -> ElectionState {
        let config = ElectionConfig::desk_default(5, 3, seed);
        let mut state = setup(config, corruptions).unwrap();
        for i in 0..5 {
            cast_vote(&mut state, i, 1 + i % 2).unwrap();
        }
        close_voting(&mut state).unwrap();
        run_stage1(&mut state).unwrap();
        run_stage2(&mut state).unwrap();
        state
    }

    #[test]
    fn scanner_flip_is_a_system_fault() {
        let mut state = election(vec![Corruption::ScannerFlipVote { voter: 1, vote: 1 }], 301);
        let outcome = resolve_dispute(&mut state, 1, 1).unwrap();
        assert_eq!(outcome.verdict, Verdict::SystemFault);
        state.transcript().verify_chain().unwrap();
    }

    #[test]
    fn belligerent_voter_is_unsupported() {
        let mut state = election(Vec::new(), 302);
        // voter 0 cast candidate 1 but claims they cast 2
        let outcome = resolve_dispute(&mut state, 0, 2).unwrap();
        assert_eq!(outcome.verdict, Verdict::ComplaintUnsupported);
    }

    #[test]
    fn complaint_without_ballot_cites_attendance() {
        let config = ElectionConfig::desk_default(4, 2, 303);
        let mut state = setup(config, Vec::new()).unwrap();
        cast_vote(&mut state, 0, 1).unwrap();
        cast_vote(&mut state, 1, 2).unwrap();
        close_voting(&mut state).unwrap();
        run_stage1(&mut state).unwrap();
        run_stage2(&mut state).unwrap();
        let outcome = resolve_dispute(&mut state, 3, 1).unwrap();
        assert_eq!(outcome.verdict, Verdict::ComplaintUnsupported);
        assert!(outcome.details.contains("attendance log records voting: false"));
    }
}
