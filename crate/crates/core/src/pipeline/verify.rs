//! The universal verifier: recomputes every public check from transcript
//! bytes alone. No secrets, no simulator state; anyone holding the
//! transcript file can run it and must reach the same verdicts.

use std::collections::BTreeMap;

use crate::bb::Transcript;
use crate::codec::Canon;
use crate::group::elgamal::Ciphertext;
use crate::group::schnorr::{signature_from_wire, signature_wire_len, verify_sig};
use crate::group::GroupSpec;
use crate::mixnet::{verify_shuffle, MixBatch, MixStage};
use crate::pipeline::records::{EligibleRow, FlagReason, FlagRecord, ParamsRecord, Record};
use crate::pipeline::stages::{
    combine_identity_pairs, identity_pairs, open_identity, split_stage1_row, stage1_row,
    stage1_slot_kinds,
};
use crate::pipeline::PipelineError;
use crate::polling::{ballot_signature_message, id_width, verify_tuple_proofs};
use crate::selene::{verify_setup, SetupView, TrackerSet, VoterRow};
use crate::tellers::{CommitFactorPosting, DecryptShare, TellerPublic};
use crate::zkp::fs::FsContext;
use crate::zkp::pet::{pet_combined_ratio, verify_pet_share};

/// One named verification class and its itemized failures.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub failures: Vec<String>,
}

impl CheckResult {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    /// Identities that appear among the counted ballots; lets abstainers
    /// confirm their id is absent.
    pub eligible_ids: Vec<Vec<u8>>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.checks.iter().all(|c| c.pass())
    }

    pub fn failed_classes(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.pass())
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            if c.pass() {
                out.push_str(&format!("[PASS] {}\n", c.name));
            } else {
                out.push_str(&format!("[FAIL] {}\n", c.name));
                for f in &c.failures {
                    out.push_str(&format!("       - {f}\n"));
                }
            }
        }
        out
    }
}

/// Transcript records grouped for verification.
#[derive(Debug, Default)]
pub struct TranscriptView {
    pub params: Option<ParamsRecord>,
    pub tellers: Option<TellerPublic>,
    pub roll: Vec<(Vec<u8>, crate::group::GroupElement, crate::group::GroupElement)>,
    pub tracker_set: Option<TrackerSet>,
    pub tracker_stages: Vec<MixStage>,
    pub factor_postings: Vec<CommitFactorPosting>,
    pub commit_decrypts: BTreeMap<u32, Vec<DecryptShare>>,
    pub voter_rows: Vec<VoterRow>,
    pub cast_tuples: Vec<crate::polling::ScannerTuple>,
    pub stage1_input: Option<MixBatch>,
    pub stage1_stages: Vec<MixStage>,
    pub stage1_row_decrypts: BTreeMap<u32, Vec<Vec<DecryptShare>>>,
    pub flags: Vec<FlagRecord>,
    pub eligible: Vec<EligibleRow>,
    pub stage2_input: Option<MixBatch>,
    pub stage2_stages: Vec<MixStage>,
    pub tally_decrypts: BTreeMap<u32, (Vec<DecryptShare>, Vec<DecryptShare>)>,
    pub tally_rows: Vec<(u32, u64, u32)>,
    pub receipt_gates:
        Vec<(u32, bool, Ciphertext, Vec<crate::zkp::pet::PetShare>, Vec<DecryptShare>)>,
    pub parse_failures: Vec<String>,
}

pub fn parse_transcript(t: &Transcript) -> TranscriptView {
    let mut v = TranscriptView::default();
    for entry in &t.entries {
        let record = match Record::decode_all(&entry.payload) {
            Ok(r) => r,
            Err(e) => {
                v.parse_failures
                    .push(format!("entry {}: undecodable payload: {e}", entry.seq));
                continue;
            }
        };
        match record {
            Record::Params(p) => v.params = Some(p),
            Record::TellerKey(t) => v.tellers = Some(t),
            Record::Roll(r) => v.roll = r,
            Record::TrackerList(t) => v.tracker_set = Some(t),
            Record::TrackerMixStage(s) => v.tracker_stages.push(s),
            Record::CommitFactor(p) => v.factor_postings.push(p),
            Record::CommitDecrypt { voter_index, shares } => {
                v.commit_decrypts.insert(voter_index, shares);
            }
            Record::VoterRow(r) => v.voter_rows.push(r),
            Record::CastTuple(t) => v.cast_tuples.push(t),
            Record::Stage1Input(b) => v.stage1_input = Some(b),
            Record::Stage1MixStage(s) => v.stage1_stages.push(s),
            Record::Stage1RowDecrypt { row_index, pair_shares } => {
                v.stage1_row_decrypts.insert(row_index, pair_shares);
            }
            Record::Flag(f) => v.flags.push(f),
            Record::Eligible(e) => v.eligible.push(e),
            Record::Stage2Input(b) => v.stage2_input = Some(b),
            Record::Stage2MixStage(s) => v.stage2_stages.push(s),
            Record::TallyRowDecrypt { row_index, tracker_shares, vote_shares } => {
                v.tally_decrypts.insert(row_index, (tracker_shares, vote_shares));
            }
            Record::TallyRow { row_index, tracker, vote } => {
                v.tally_rows.push((row_index, tracker, vote));
            }
            Record::ReceiptGate { voter_index, accepted, fresh_enc, pet_shares, decrypt_shares } => {
                v.receipt_gates
                    .push((voter_index, accepted, fresh_enc, pet_shares, decrypt_shares));
            }
            Record::AuditDecrypt { .. } | Record::AuditNote { .. } => {}
        }
    }
    v
}

/// Expected per-row outcome of the eligibility pass, re-derived from
/// public data.
#[derive(Debug, Clone, PartialEq, Eq)]
enum RowStatus {
    Eligible,
    Flagged(FlagReason),
}

/// Runs every public check and reports per-class results.
pub fn universal_verify(transcript: &Transcript) -> VerifyReport {
    let mut report = VerifyReport::default();
    let add = |report: &mut VerifyReport, name: &str, failures: Vec<String>| {
        report.checks.push(CheckResult { name: name.to_string(), failures });
    };

    // chain integrity
    add(
        &mut report,
        "chain",
        match transcript.verify_chain() {
            Ok(()) => Vec::new(),
            Err(e) => vec![e.to_string()],
        },
    );

    let view = parse_transcript(transcript);
    add(&mut report, "structure", view.parse_failures.clone());

    // parameters
    let mut param_failures = Vec::new();
    let Some(params) = view.params.clone() else {
        add(&mut report, "params", vec!["parameters record missing".into()]);
        return report;
    };
    let spec = match params.group_name.as_str() {
        "qr-safe-prime-18" => GroupSpec::test_group(),
        "qr-safe-prime-256" => GroupSpec::prod_group(),
        other => {
            add(&mut report, "params", vec![format!("unknown group {other:?}")]);
            return report;
        }
    };
    if spec.validate().is_err() {
        param_failures.push("group parameters invalid".into());
    }
    if params.candidates.len() < 2 {
        param_failures.push("fewer than two candidates".into());
    }
    let Some(tellers) = view.tellers.clone() else {
        add(&mut report, "params", vec!["teller key record missing".into()]);
        return report;
    };
    if tellers.n != params.teller_count as usize || tellers.t != params.teller_threshold as usize {
        param_failures.push("teller key does not match parameters".into());
    }
    if view.roll.len() != params.voter_count as usize {
        param_failures.push(format!(
            "roll has {} entries for {} voters",
            view.roll.len(),
            params.voter_count
        ));
    }
    add(&mut report, "params", param_failures);
    let eid = params.election_id.clone();
    let max_tracker = params.voter_count as u64;
    let num_candidates = params.candidates.len();
    let extra = params.signature_context.clone();
    let extra_ref = extra.as_ref().map(|(d, p)| (d.as_str(), p.as_str()));

    // setup checks, split into classes by prefix
    let setup_failures = match view.tracker_set.clone() {
        Some(tracker_set) => verify_setup(
            &spec,
            &eid,
            &tellers,
            &SetupView {
                tracker_set,
                tracker_stages: view.tracker_stages.clone(),
                roll: view.roll.clone(),
                voter_rows: view.voter_rows.clone(),
                factor_postings: view.factor_postings.clone(),
                commitment_decrypts: (0..view.roll.len())
                    .map(|i| view.commit_decrypts.get(&(i as u32)).cloned().unwrap_or_default())
                    .collect(),
            },
        ),
        None => vec!["setup-trackers: tracker list missing".into()],
    };
    for class in ["setup-trackers", "setup-tracker-mix", "prevote-rows", "setup-commitments"] {
        let prefix = format!("{class}:");
        add(
            &mut report,
            class,
            setup_failures
                .iter()
                .filter(|f| f.starts_with(&prefix))
                .cloned()
                .collect(),
        );
    }

    // ballot proofs: every published tuple, plus the rule that rows with
    // invalid proofs must be flagged before the mix
    let mut ballot_failures = Vec::new();
    let pre_mix_flagged: Vec<u32> = view
        .flags
        .iter()
        .filter(|f| f.pre_mix)
        .map(|f| f.row_index)
        .collect();
    for (idx, tuple) in view.cast_tuples.iter().enumerate() {
        let ok = verify_tuple_proofs(&spec, &eid, &tellers.pk_t, num_candidates, tuple).is_ok();
        let flagged = pre_mix_flagged.contains(&(idx as u32));
        if !ok && !flagged {
            ballot_failures.push(format!("cast tuple {idx}: proof bundle invalid"));
        }
        if ok && flagged {
            ballot_failures.push(format!("cast tuple {idx}: flagged despite valid proofs"));
        }
        for chunk in tuple.enc_id.iter().chain(tuple.enc_sig.iter()) {
            if chunk.binding
                != crate::group::rcca::compute_binding(&spec, &eid, &chunk.c1, &chunk.c2)
            {
                ballot_failures.push(format!("cast tuple {idx}: chunk binding mismatch"));
            }
        }
    }
    add(&mut report, "ballot-proofs", ballot_failures);

    // stage-1 mix: input assembly and proof chain
    let mut stage1_failures = Vec::new();
    let slot_kinds = stage1_slot_kinds(&spec);
    let expected_input_rows: Vec<usize> = (0..view.cast_tuples.len())
        .filter(|i| !pre_mix_flagged.contains(&(*i as u32)))
        .collect();
    let stage1_final: Option<MixBatch> = match &view.stage1_input {
        None => {
            if !expected_input_rows.is_empty() {
                stage1_failures.push("stage-1 input missing".into());
            }
            None
        }
        Some(input) => {
            let mut expected = Vec::new();
            for &i in &expected_input_rows {
                match stage1_row(&spec, &view.cast_tuples[i]) {
                    Ok(row) => expected.push(row),
                    Err(e) => stage1_failures.push(format!("cast tuple {i}: {e}")),
                }
            }
            if input.slot_kinds != slot_kinds || input.rows != expected {
                stage1_failures
                    .push("stage-1 input does not match the unflagged cast tuples".into());
            }
            if input.rows.len() >= 2 {
                if view.stage1_stages.is_empty() {
                    stage1_failures.push("stage-1 mix stages missing".into());
                    None
                } else {
                    let mut current = input.clone();
                    for (idx, stage) in view.stage1_stages.iter().enumerate() {
                        let label = format!("stage1/server-{}", idx + 1);
                        if stage.server_id != label {
                            stage1_failures.push(format!("stage {}: label mismatch", idx + 1));
                        }
                        if let Err(e) = verify_shuffle(
                            &spec,
                            &eid,
                            &label,
                            &current,
                            &stage.output,
                            &stage.proof,
                            &vec![tellers.pk_t.clone(); slot_kinds.len()],
                        ) {
                            stage1_failures.push(format!("stage {}: {e}", idx + 1));
                        }
                        if let Err(e) = stage.output.validate_bindings(&spec, &eid) {
                            stage1_failures.push(format!("stage {}: {e}", idx + 1));
                        }
                        current = stage.output.clone();
                    }
                    Some(current)
                }
            } else {
                Some(input.clone())
            }
        }
    };
    add(&mut report, "stage1-mix", stage1_failures);

    // stage-1 decryption: share proofs, combination, opening, and
    // consistency of eligible rows with the mixed data
    let mut s1dec_failures = Vec::new();
    let ctx1 = FsContext::new(&eid, "stage1-decrypt");
    let mut derived: Vec<Option<(Vec<u8>, Vec<u8>)>> = Vec::new();
    let mut final_parts = Vec::new();
    if let Some(final_batch) = &stage1_final {
        for (row_index, row) in final_batch.rows.iter().enumerate() {
            let parts = match split_stage1_row(&spec, row) {
                Ok(p) => p,
                Err(e) => {
                    s1dec_failures.push(format!("row {row_index}: {e}"));
                    derived.push(None);
                    continue;
                }
            };
            let pairs = identity_pairs(&parts);
            let Some(pair_shares) = view.stage1_row_decrypts.get(&(row_index as u32)) else {
                s1dec_failures.push(format!("row {row_index}: decryption shares missing"));
                derived.push(None);
                final_parts.push((row_index, parts));
                continue;
            };
            match combine_identity_pairs(&spec, &tellers, &pairs, pair_shares, &ctx1) {
                Ok(elements) => {
                    let opened = open_identity(
                        &spec,
                        &eid,
                        &elements,
                        id_width(&spec),
                        signature_wire_len(&spec),
                    );
                    derived.push(opened.ok());
                }
                Err(e) => {
                    s1dec_failures.push(format!("row {row_index}: {e}"));
                    derived.push(None);
                }
            }
            final_parts.push((row_index, parts));
        }
    }
    for row in &view.eligible {
        let Some((_, parts)) = final_parts.iter().find(|(i, _)| *i == row.row_index as usize)
        else {
            s1dec_failures.push(format!("eligible row {}: no mixed row", row.row_index));
            continue;
        };
        match derived.get(row.row_index as usize).and_then(|d| d.as_ref()) {
            Some((id, sig)) => {
                if id != &row.id || sig != &row.sig_wire {
                    s1dec_failures.push(format!(
                        "eligible row {}: published identity differs from decryption",
                        row.row_index
                    ));
                }
            }
            None => s1dec_failures.push(format!(
                "eligible row {}: identity not derivable",
                row.row_index
            )),
        }
        if row.enc_ballot_code != parts.enc_ballot_code
            || row.enc_vote != parts.enc_vote
            || row.enc_rc != parts.enc_rc
        {
            s1dec_failures.push(format!(
                "eligible row {}: ciphertexts differ from the mixed row",
                row.row_index
            ));
        }
    }
    add(&mut report, "stage1-decryption", s1dec_failures);

    // eligibility: re-derive each row's expected status and compare
    let mut elig_failures = Vec::new();
    let mut id_counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for d in derived.iter().flatten() {
        *id_counts.entry(d.0.clone()).or_insert(0) += 1;
    }
    let expected_status: Vec<RowStatus> = derived
        .iter()
        .map(|d| match d {
            None => RowStatus::Flagged(FlagReason::BadDecryption),
            Some((id, sig_wire)) => {
                let Some(roll_row) = view.roll.iter().find(|(rid, _, _)| rid == id) else {
                    return RowStatus::Flagged(FlagReason::NotOnRoll);
                };
                if id_counts[id] > 1 {
                    return RowStatus::Flagged(FlagReason::DuplicateId);
                }
                let ok = signature_from_wire(&spec, sig_wire)
                    .map(|sig| {
                        verify_sig(
                            &spec,
                            &roll_row.1,
                            &ballot_signature_message(id, &eid, extra_ref),
                            &sig,
                        )
                    })
                    .unwrap_or(false);
                if !ok {
                    return RowStatus::Flagged(FlagReason::BadSignature);
                }
                RowStatus::Eligible
            }
        })
        .collect();
    for (row_index, status) in expected_status.iter().enumerate() {
        let row_index = row_index as u32;
        let published_eligible = view.eligible.iter().find(|e| e.row_index == row_index);
        let published_flag = view
            .flags
            .iter()
            .find(|f| !f.pre_mix && f.row_index == row_index);
        match (status, published_eligible, published_flag) {
            (RowStatus::Eligible, Some(_), None) => {}
            (RowStatus::Flagged(reason), None, Some(flag)) if flag.reason == *reason => {}
            (RowStatus::Eligible, _, _) => {
                elig_failures
                    .push(format!("row {row_index}: valid ballot not counted as eligible"));
            }
            (RowStatus::Flagged(reason), _, _) => {
                elig_failures.push(format!(
                    "row {row_index}: should be excluded ({reason:?}) but is not flagged as such"
                ));
            }
        }
    }
    add(&mut report, "eligibility", elig_failures);

    // stage-2 input join
    let mut s2in_failures = Vec::new();
    let expected_stage2: Vec<Vec<crate::mixnet::MixSlot>> = view
        .eligible
        .iter()
        .filter_map(|row| {
            let prevote = view.voter_rows.iter().find(|r| r.id == row.id)?;
            Some(vec![
                crate::mixnet::MixSlot::ElGamal(prevote.enc_tracker.clone()),
                crate::mixnet::MixSlot::ElGamal(row.enc_vote.clone()),
            ])
        })
        .collect();
    match &view.stage2_input {
        None => {
            if !view.eligible.is_empty() {
                s2in_failures.push("stage-2 input missing".into());
            }
        }
        Some(input) => {
            if input.rows != expected_stage2 {
                s2in_failures.push("stage-2 input does not join the eligible rows".into());
            }
        }
    }
    add(&mut report, "stage2-input", s2in_failures);

    // stage-2 mix chain
    let mut s2mix_failures = Vec::new();
    let stage2_final: Option<MixBatch> = match &view.stage2_input {
        None => None,
        Some(input) if input.rows.len() < 2 => Some(input.clone()),
        Some(input) => {
            if view.stage2_stages.is_empty() {
                s2mix_failures.push("stage-2 mix stages missing".into());
                None
            } else {
                let mut current = input.clone();
                for (idx, stage) in view.stage2_stages.iter().enumerate() {
                    let label = format!("stage2/server-{}", idx + 1);
                    if stage.server_id != label {
                        s2mix_failures.push(format!("stage {}: label mismatch", idx + 1));
                    }
                    if let Err(e) = verify_shuffle(
                        &spec,
                        &eid,
                        &label,
                        &current,
                        &stage.output,
                        &stage.proof,
                        &vec![tellers.pk_t.clone(); 2],
                    ) {
                        s2mix_failures.push(format!("stage {}: {e}", idx + 1));
                    }
                    current = stage.output.clone();
                }
                Some(current)
            }
        }
    };
    add(&mut report, "stage2-mix", s2mix_failures);

    // tally decryption
    let mut tally_failures = Vec::new();
    let ctx2 = FsContext::new(&eid, "tally-decrypt");
    if let Some(final_batch) = &stage2_final {
        if view.tally_rows.len() != final_batch.rows.len() {
            tally_failures.push(format!(
                "{} tally rows for {} mixed rows",
                view.tally_rows.len(),
                final_batch.rows.len()
            ));
        }
        for (row_index, row) in final_batch.rows.iter().enumerate() {
            let (enc_tracker, enc_vote) = match (&row[0], &row[1]) {
                (crate::mixnet::MixSlot::ElGamal(t), crate::mixnet::MixSlot::ElGamal(v)) => (t, v),
                _ => {
                    tally_failures.push(format!("row {row_index}: bad layout"));
                    continue;
                }
            };
            let Some((tracker_shares, vote_shares)) =
                view.tally_decrypts.get(&(row_index as u32))
            else {
                tally_failures.push(format!("row {row_index}: decryption shares missing"));
                continue;
            };
            let tracker = crate::tellers::combine_decrypt(
                &spec,
                &tellers,
                enc_tracker,
                tracker_shares,
                &ctx2,
            )
            .map_err(|e| format!("row {row_index}: tracker shares: {e}"))
            .and_then(|el| {
                crate::group::elgamal::exp_decode(&spec, &el, max_tracker)
                    .map_err(|e| format!("row {row_index}: tracker decode: {e}"))
            });
            let vote =
                crate::tellers::combine_decrypt(&spec, &tellers, enc_vote, vote_shares, &ctx2)
                    .map_err(|e| format!("row {row_index}: vote shares: {e}"))
                    .and_then(|el| {
                        crate::group::elgamal::exp_decode(&spec, &el, num_candidates as u64)
                            .map_err(|e| format!("row {row_index}: vote decode: {e}"))
                    });
            let published = view.tally_rows.iter().find(|(i, _, _)| *i == row_index as u32);
            match (tracker, vote, published) {
                (Ok(t), Ok(v), Some((_, pt, pv))) => {
                    if t != *pt || v as u32 != *pv {
                        tally_failures.push(format!(
                            "row {row_index}: published ({pt}, {pv}) but decryption gives ({t}, {v})"
                        ));
                    }
                }
                (Err(e), _, _) | (_, Err(e), _) => tally_failures.push(e),
                (_, _, None) => {
                    tally_failures.push(format!("row {row_index}: tally row missing"))
                }
            }
        }
    } else if !view.tally_rows.is_empty() {
        tally_failures.push("tally rows exist with no mixed input".into());
    }
    add(&mut report, "tally-decryption", tally_failures);

    // tracker uniqueness
    let mut uniq_failures = Vec::new();
    let mut seen = BTreeMap::new();
    for (i, tracker, _) in &view.tally_rows {
        if *tracker < 1 || *tracker > max_tracker {
            uniq_failures.push(format!("row {i}: tracker {tracker} out of range"));
        }
        if let Some(prev) = seen.insert(*tracker, *i) {
            uniq_failures.push(format!("rows {prev} and {i} share tracker {tracker}"));
        }
    }
    add(&mut report, "tracker-uniqueness", uniq_failures);

    // conservation of rows across phases
    let mut cons_failures = Vec::new();
    let cast = view.cast_tuples.len();
    let pre_flagged = pre_mix_flagged.len();
    let s1_in = view.stage1_input.as_ref().map(|b| b.rows.len()).unwrap_or(0);
    let s1_out = stage1_final.as_ref().map(|b| b.rows.len()).unwrap_or(0);
    let post_flagged = view.flags.iter().filter(|f| !f.pre_mix).count();
    let eligible = view.eligible.len();
    let s2_in = view.stage2_input.as_ref().map(|b| b.rows.len()).unwrap_or(0);
    let s2_out = stage2_final.as_ref().map(|b| b.rows.len()).unwrap_or(0);
    let tally = view.tally_rows.len();
    if s1_in != cast - pre_flagged {
        cons_failures.push(format!("{cast} cast, {pre_flagged} flagged, {s1_in} mixed"));
    }
    if eligible + post_flagged != s1_out {
        cons_failures.push(format!(
            "{s1_out} mixed rows but {eligible} eligible + {post_flagged} flagged"
        ));
    }
    if s2_in != eligible {
        cons_failures.push(format!("{eligible} eligible but {s2_in} stage-2 inputs"));
    }
    if tally != s2_out {
        cons_failures.push(format!("{s2_out} stage-2 outputs but {tally} tally rows"));
    }
    add(&mut report, "conservation", cons_failures);

    // receipt gates
    let mut gate_failures = Vec::new();
    let gate_ctx = FsContext::new(&eid, "receipt-gate");
    for (voter_index, accepted, fresh, pet_shares, decrypt_shares) in &view.receipt_gates {
        let voter = *voter_index as usize;
        let Some((id, _, _)) = view.roll.get(voter) else {
            gate_failures.push(format!("gate for unknown voter {voter}"));
            continue;
        };
        let Some(row) = view.eligible.iter().find(|e| &e.id == id) else {
            gate_failures.push(format!("gate for voter {voter} with no eligible row"));
            continue;
        };
        let mut ok = pet_shares.len() >= tellers.t;
        for s in pet_shares {
            if verify_pet_share(&spec, fresh, &row.enc_rc, s, &gate_ctx).is_err() {
                ok = false;
            }
        }
        if !ok {
            gate_failures.push(format!("voter {voter}: PET shares invalid"));
            continue;
        }
        let combined = pet_combined_ratio(&spec, pet_shares);
        match crate::tellers::combine_decrypt(&spec, &tellers, &combined, decrypt_shares, &gate_ctx)
        {
            Ok(plain) => {
                let equal = plain == spec.identity();
                if equal != *accepted {
                    gate_failures.push(format!(
                        "voter {voter}: published decision {accepted} but evidence says {equal}"
                    ));
                }
            }
            Err(e) => gate_failures.push(format!("voter {voter}: gate decryption: {e}")),
        }
    }
    add(&mut report, "receipt-gates", gate_failures);

    report.eligible_ids = view.eligible.iter().map(|e| e.id.clone()).collect();
    report
}

/// Convenience wrapper for the transcript-file interface.
pub fn universal_verify_bytes(bytes: &[u8]) -> Result<VerifyReport, PipelineError> {
    let transcript = Transcript::from_bytes(bytes)?;
    Ok(universal_verify(&transcript))
}
