//! The election runtime: one in-process state holding every actor's
//! secrets, phase functions that advance it and publish to the bulletin
//! board, and corruption hooks that let test fixtures run the same
//! pipeline with one misbehaving actor.

use std::collections::BTreeMap;

use crate::bb::{BulletinBoard, Phase, Transcript};
use crate::codec::Canon;
use crate::group::schnorr::{signature_from_wire, signature_wire_len, verify_sig};
use crate::group::{seeded_rng, GroupSpec};
use crate::mixnet::{shuffle, verify_shuffle, MixBatch, MixStage};
use crate::pipeline::config::ElectionConfig;
use crate::pipeline::records::{EligibleRow, FlagReason, FlagRecord, ParamsRecord, Record};
use crate::pipeline::stages::{
    combine_identity_pairs, identity_pairs, open_identity, split_stage1_row, stage1_row,
    stage1_slot_kinds, Stage1Parts,
};
use crate::pipeline::PipelineError;
use crate::polling::{
    ballot_signature_message, card_issue, id_width, make_credentials, print_ballot, scan_ballot,
    tra_gate, PaperBallot, ReceiptCode, RegistrationDesk, ScannerTuple, TraState,
};
use crate::selene::{assign_trackers, retrieve_tracker, setup_trackers, TrackerSet, VoterRow};
use crate::tellers::{
    contribute_alpha_factors, dkg, partial_decrypt, DecryptShare, TellerPublic, TellerShare,
};
use crate::zkp::fs::FsContext;

/// Adversarial behaviors a scenario can inject. Each corrupts exactly one
/// actor; the rest of the pipeline runs unchanged, which is what makes the
/// tamper fixtures surgical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Corruption {
    /// Two colluding scanners swap their encrypted votes at publication,
    /// keeping their original proofs; the corrupt pipeline skips the
    /// pre-mix proof filter.
    SwapVotes { a: usize, b: usize },
    /// The card signs with another voter's key; corrupt tellers do not
    /// flag the row.
    ForgeSignature { voter: usize, signer: usize },
    /// Copy attack: the scanner builds voter `dst`'s tuple from voter
    /// `src`'s printed ballot code (valid proofs, duplicate identity).
    DuplicateEncId { src: usize, dst: usize },
    /// The scanner records a different vote electronically than the paper
    /// shows.
    ScannerFlipVote { voter: usize, vote: usize },
    /// The scanner drops one ballot's electronic record entirely.
    DropCastTuple { voter: usize },
    /// A stage-2 mix server deletes one row from its output, publishing
    /// its now-stale proof.
    DropMixRow { server: usize, row: usize },
    /// Corrupt tellers publish a tally row that contradicts their own
    /// decryption shares.
    EditTallyRow { row: usize, vote: usize },
}

/// One cast ballot as the scanner (and only the scanner) knows it.
#[derive(Debug, Clone)]
pub struct CastBallot {
    pub voter_index: usize,
    pub paper_index: usize,
    pub rc: ReceiptCode,
    pub tuple: ScannerTuple,
}

impl Canon for CastBallot {
    fn encode_into(&self, out: &mut Vec<u8>) {
        crate::codec::put_u32(out, self.voter_index as u32);
        crate::codec::put_u32(out, self.paper_index as u32);
        self.rc.encode_into(out);
        self.tuple.encode_into(out);
    }

    fn decode(r: &mut crate::codec::Reader<'_>) -> Result<Self, crate::codec::CodecError> {
        Ok(CastBallot {
            voter_index: r.u32()? as usize,
            paper_index: r.u32()? as usize,
            rc: ReceiptCode::decode(r)?,
            tuple: ScannerTuple::decode(r)?,
        })
    }
}

/// Full simulator state: every actor's secrets plus the public board.
pub struct ElectionState {
    pub config: ElectionConfig,
    pub spec: GroupSpec,
    pub bb: BulletinBoard,
    pub tellers_public: TellerPublic,
    pub teller_shares: Vec<TellerShare>,
    pub credentials: Vec<crate::polling::VoterCredential>,
    pub tracker_set: TrackerSet,
    pub voter_rows: Vec<VoterRow>,
    pub desk: RegistrationDesk,
    pub paper_store: Vec<PaperBallot>,
    pub cast: Vec<CastBallot>,
    pub published_tuples: Vec<ScannerTuple>,
    pub tra: TraState,
    pub corruptions: Vec<Corruption>,
    pub eligible: Vec<EligibleRow>,
    pub flags: Vec<FlagRecord>,
    pub tally: Vec<(u64, u32)>,
    /// voter index -> tracker retrieved through the honest path
    pub retrievals: BTreeMap<usize, u64>,
}

impl ElectionState {
    pub fn rng(&self, label: &str) -> rand_chacha::ChaCha20Rng {
        seeded_rng(&self.config.seed_bytes(), label)
    }

    pub fn election_id(&self) -> &[u8] {
        &self.config.election_id
    }

    pub fn quorum(&self) -> Vec<&TellerShare> {
        self.teller_shares
            .iter()
            .take(self.tellers_public.t)
            .collect()
    }

    pub fn max_tracker(&self) -> u64 {
        self.config.voter_count as u64
    }

    pub fn transcript(&self) -> Transcript {
        self.bb.clone().into_transcript()
    }

    fn post(&mut self, phase: Phase, author: &str, record: &Record) -> Result<(), PipelineError> {
        self.bb.append(phase, author, record.encode())?;
        Ok(())
    }

    pub fn signature_context(&self) -> Option<(String, String)> {
        self.config
            .sign_date_printer
            .then(|| ("2026-08-09".to_string(), "printer-1".to_string()))
    }

    fn corruption<'a, F, T>(&'a self, pick: F) -> Option<T>
    where
        F: FnMut(&'a Corruption) -> Option<T>,
    {
        self.corruptions.iter().filter_map(pick).next()
    }
}

impl ElectionState {
    /// Rebuilds runtime state from the public transcript plus the private
    /// stores a deployment keeps outside it (teller shares, credentials,
    /// the paper store, scanner memory and the TRA store).
    #[allow(clippy::too_many_arguments)]
    pub fn restore(
        config: ElectionConfig,
        transcript: Transcript,
        tellers_public: TellerPublic,
        teller_shares: Vec<TellerShare>,
        credentials: Vec<crate::polling::VoterCredential>,
        paper_store: Vec<PaperBallot>,
        cast: Vec<CastBallot>,
        tra: TraState,
        retrievals: BTreeMap<usize, u64>,
    ) -> Result<Self, PipelineError> {
        let spec = config.group_spec()?;
        let view = crate::pipeline::verify::parse_transcript(&transcript);
        let tracker_set = view
            .tracker_set
            .ok_or(PipelineError::MissingRecord("tracker list"))?;
        let mut desk = RegistrationDesk::new(credentials.iter().map(|c| c.id.clone()));
        for cb in &cast {
            let _ = desk.register_voter(&credentials[cb.voter_index].id);
        }
        let bb = BulletinBoard::from_transcript(transcript)?;
        Ok(ElectionState {
            config,
            spec,
            bb,
            tellers_public,
            teller_shares,
            credentials,
            tracker_set,
            voter_rows: view.voter_rows,
            desk,
            paper_store,
            published_tuples: view.cast_tuples,
            cast,
            tra,
            corruptions: Vec::new(),
            eligible: view.eligible,
            flags: view.flags,
            tally: view
                .tally_rows
                .iter()
                .map(|(_, t, v)| (*t, *v))
                .collect(),
            retrievals,
        })
    }
}

/// Runs the pre-election setup: key generation, roll publication, tracker
/// assignment, distributed commitments and the pre-vote rows.
pub fn setup(
    config: ElectionConfig,
    corruptions: Vec<Corruption>,
) -> Result<ElectionState, PipelineError> {
    config.validate()?;
    let spec = config.group_spec()?;
    spec.validate()
        .map_err(|e| PipelineError::BadConfig(e.to_string()))?;
    let eid = config.election_id.clone();
    let mut bb = BulletinBoard::new();

    let params = ParamsRecord {
        election_id: eid.clone(),
        group_name: spec.name.clone(),
        candidates: config.candidates.clone(),
        voter_count: config.voter_count as u32,
        teller_count: config.teller_count as u32,
        teller_threshold: config.teller_threshold as u32,
        mix_servers: config.mix_servers as u32,
        signature_context: config
            .sign_date_printer
            .then(|| ("2026-08-09".to_string(), "printer-1".to_string())),
    };
    bb.append(Phase::Setup, "EA", Record::Params(params).encode())?;

    let seed = config.seed_bytes();
    let (tellers_public, teller_shares) = dkg(
        &spec,
        config.teller_count,
        config.teller_threshold,
        &mut seeded_rng(&seed, "dkg"),
    )?;
    bb.append(
        Phase::Setup,
        "TT",
        Record::TellerKey(tellers_public.clone()).encode(),
    )?;

    let credentials = make_credentials(&spec, config.voter_count, &mut seeded_rng(&seed, "credentials"));
    let roll: Vec<(Vec<u8>, crate::group::GroupElement, crate::group::GroupElement)> = credentials
        .iter()
        .map(|c| (c.id.clone(), c.signing.vk.clone(), c.trapdoor.pk.clone()))
        .collect();
    bb.append(Phase::Setup, "EA", Record::Roll(roll).encode())?;

    let tracker_set = setup_trackers(&spec, config.voter_count)?;
    bb.append(
        Phase::Setup,
        "EA",
        Record::TrackerList(tracker_set.clone()).encode(),
    )?;
    let (tracker_stages, assigned) = assign_trackers(
        &spec,
        &eid,
        &tracker_set,
        config.voter_count,
        &tellers_public.pk_t,
        config.mix_servers,
        &mut seeded_rng(&seed, "tracker-mix"),
    )?;
    for stage in &tracker_stages {
        bb.append(
            Phase::Setup,
            "MIX",
            Record::TrackerMixStage(stage.clone()).encode(),
        )?;
    }

    // distributed commitment construction
    let ctx = FsContext::new(&eid, "commitment-setup");
    let voter_pks: Vec<crate::group::GroupElement> =
        credentials.iter().map(|c| c.trapdoor.pk.clone()).collect();
    let mut tra = TraState::new();
    let mut postings_by_voter: Vec<Vec<crate::tellers::CommitFactorPosting>> =
        vec![Vec::new(); config.voter_count];
    for k in 1..=config.teller_count {
        let (records, postings) = contribute_alpha_factors(
            &spec,
            k,
            &tellers_public.pk_t,
            &voter_pks,
            &ctx,
            &mut seeded_rng(&seed, &format!("teller-{k}-alpha")),
        );
        for record in records {
            tra.receive_share(&spec, &voter_pks[record.voter_index], record, &ctx)?;
        }
        for posting in postings {
            postings_by_voter[posting.voter_index].push(posting.clone());
            bb.append(Phase::Setup, &format!("TT{k}"), Record::CommitFactor(posting).encode())?;
        }
    }

    let mut commitments = Vec::with_capacity(config.voter_count);
    let mut decrypt_rng = seeded_rng(&seed, "commit-decrypt");
    for i in 0..config.voter_count {
        let refs: Vec<&crate::tellers::CommitFactorPosting> =
            postings_by_voter[i].iter().collect();
        let enc_c =
            crate::tellers::combine_commitment_ciphertext(&spec, &assigned[i], &refs);
        let shares: Vec<DecryptShare> = teller_shares
            .iter()
            .take(tellers_public.t)
            .map(|s| partial_decrypt(&spec, s, &enc_c, &ctx, &mut decrypt_rng))
            .collect();
        let c_i = crate::tellers::combine_decrypt(&spec, &tellers_public, &enc_c, &shares, &ctx)?;
        bb.append(
            Phase::Setup,
            "TT",
            Record::CommitDecrypt { voter_index: i as u32, shares }.encode(),
        )?;
        commitments.push(c_i);
    }

    let mut voter_rows = Vec::with_capacity(config.voter_count);
    for (i, cred) in credentials.iter().enumerate() {
        let row = VoterRow {
            id: cred.id.clone(),
            vk: cred.signing.vk.clone(),
            pk: cred.trapdoor.pk.clone(),
            enc_tracker: assigned[i].clone(),
            commitment: commitments[i].clone(),
        };
        bb.append(Phase::PreVote, "EA", Record::VoterRow(row.clone()).encode())?;
        voter_rows.push(row);
    }

    let desk = RegistrationDesk::new(credentials.iter().map(|c| c.id.clone()));
    Ok(ElectionState {
        config,
        spec,
        bb,
        tellers_public,
        teller_shares,
        credentials,
        tracker_set,
        voter_rows,
        desk,
        paper_store: Vec::new(),
        cast: Vec::new(),
        published_tuples: Vec::new(),
        tra,
        corruptions,
        eligible: Vec::new(),
        flags: Vec::new(),
        tally: Vec::new(),
        retrievals: BTreeMap::new(),
    })
}

/// One voter's trip through the polling station. Returns the receipt code
/// the scanner releases.
pub fn cast_vote(
    state: &mut ElectionState,
    voter_index: usize,
    candidate: usize,
) -> Result<ReceiptCode, PipelineError> {
    if candidate < 1 || candidate > state.config.candidates.len() {
        return Err(PipelineError::BadConfig(format!("candidate {candidate} out of range")));
    }
    let eid = state.election_id().to_vec();
    let cred = state.credentials[voter_index].clone();
    state.desk.register_voter(&cred.id)?;

    // card: a forged-signature corruption signs with another voter's key
    let signing_cred = match state.corruption(|c| match c {
        Corruption::ForgeSignature { voter, signer } if *voter == voter_index => Some(*signer),
        _ => None,
    }) {
        Some(signer) => {
            let mut forged = cred.clone();
            forged.signing = state.credentials[signer].signing.clone();
            forged
        }
        None => cred.clone(),
    };
    let extra = state.signature_context();
    let extra_ref = extra.as_ref().map(|(d, p)| (d.as_str(), p.as_str()));
    let card = card_issue(
        &state.spec,
        &eid,
        &signing_cred,
        &state.tellers_public.pk_t,
        extra_ref,
        &mut state.rng(&format!("card-{voter_index}")),
    )?;

    let mut ballot = print_ballot(
        &state.spec,
        &eid,
        &state.tellers_public.pk_t,
        &card,
        &mut state.rng(&format!("printer-{voter_index}")),
    )?;
    ballot.fill_vote(candidate)?;
    ballot.box_serial = Some(state.paper_store.len() as u64);

    // a copy-attacking scanner substitutes another voter's printed code
    let scan_input = match state.corruption(|c| match c {
        Corruption::DuplicateEncId { src, dst } if *dst == voter_index => Some(*src),
        _ => None,
    }) {
        Some(src) => {
            let src_paper = state
                .cast
                .iter()
                .find(|cb| cb.voter_index == src)
                .map(|cb| cb.paper_index)
                .ok_or_else(|| {
                    PipelineError::BadConfig("copy-attack source has not voted yet".into())
                })?;
            let mut fake = ballot.clone();
            fake.code = state.paper_store[src_paper].code.clone();
            fake
        }
        None => ballot.clone(),
    };
    // a vote-flipping scanner reads the paper but encrypts its own choice
    let scan_input = match state.corruption(|c| match c {
        Corruption::ScannerFlipVote { voter, vote } if *voter == voter_index => Some(*vote),
        _ => None,
    }) {
        Some(vote) => {
            let mut flipped = scan_input.clone();
            flipped.vote = Some(vote);
            flipped
        }
        None => scan_input,
    };

    let (tuple, rc) = scan_ballot(
        &state.spec,
        &eid,
        &state.tellers_public.pk_t,
        state.config.candidates.len(),
        &scan_input,
        &mut state.rng(&format!("scan-{voter_index}")),
    )?;

    let paper_index = state.paper_store.len();
    state.paper_store.push(ballot);
    state.cast.push(CastBallot { voter_index, paper_index, rc, tuple });
    Ok(rc)
}

/// Voting ends: the scanners publish their stored tuples.
pub fn close_voting(state: &mut ElectionState) -> Result<(), PipelineError> {
    let mut tuples: Vec<(usize, ScannerTuple)> = state
        .cast
        .iter()
        .map(|cb| (cb.voter_index, cb.tuple.clone()))
        .collect();

    if let Some((a, b)) = state.corruption(|c| match c {
        Corruption::SwapVotes { a, b } => Some((*a, *b)),
        _ => None,
    }) {
        let pos_a = tuples.iter().position(|(v, _)| *v == a);
        let pos_b = tuples.iter().position(|(v, _)| *v == b);
        if let (Some(pa), Some(pb)) = (pos_a, pos_b) {
            let va = tuples[pa].1.enc_vote.clone();
            tuples[pa].1.enc_vote = tuples[pb].1.enc_vote.clone();
            tuples[pb].1.enc_vote = va;
        }
    }
    if let Some(victim) = state.corruption(|c| match c {
        Corruption::DropCastTuple { voter } => Some(*voter),
        _ => None,
    }) {
        tuples.retain(|(v, _)| *v != victim);
    }

    for (_, tuple) in &tuples {
        state.post(Phase::CastBallots, "SCAN", &Record::CastTuple(tuple.clone()))?;
    }
    state.published_tuples = tuples.into_iter().map(|(_, t)| t).collect();
    Ok(())
}

/// Stage 1: check the tuple proofs, mix, decrypt identities, check
/// eligibility, and join the surviving rows.
pub fn run_stage1(state: &mut ElectionState) -> Result<(), PipelineError> {
    let eid = state.election_id().to_vec();
    let spec = state.spec.clone();
    let slot_kinds = stage1_slot_kinds(&spec);
    let slot_pks: Vec<crate::group::GroupElement> =
        vec![state.tellers_public.pk_t.clone(); slot_kinds.len()];

    // corrupt scanners colluding on a vote swap also control the pre-mix
    // filter, otherwise rows with bad proofs never reach the mix
    let skip_proof_filter = state
        .corruptions
        .iter()
        .any(|c| matches!(c, Corruption::SwapVotes { .. }));

    let mut rows = Vec::new();
    let published = state.published_tuples.clone();
    for (idx, tuple) in published.iter().enumerate() {
        let ok = crate::polling::verify_tuple_proofs(
            &spec,
            &eid,
            &state.tellers_public.pk_t,
            state.config.candidates.len(),
            tuple,
        )
        .is_ok();
        if ok || skip_proof_filter {
            rows.push(stage1_row(&spec, tuple)?);
        } else {
            let flag = FlagRecord {
                pre_mix: true,
                row_index: idx as u32,
                reason: FlagReason::InvalidTupleProof,
            };
            state.flags.push(flag.clone());
            state.post(Phase::MixIdSig, "TT", &Record::Flag(flag))?;
        }
    }

    if rows.is_empty() {
        // nothing cast: later phases stay empty
        return Ok(());
    }

    let input = MixBatch { slot_kinds: slot_kinds.clone(), rows };
    state.post(Phase::MixIdSig, "TT", &Record::Stage1Input(input.clone()))?;

    let final_batch = if input.rows.len() >= 2 {
        let mut rng = state.rng("stage1-mix");
        let mut current = input.clone();
        for s in 1..=state.config.mix_servers {
            let label = format!("stage1/server-{s}");
            let (output, proof, _) = shuffle(&spec, &eid, &label, &current, &slot_pks, &mut rng)?;
            verify_shuffle(&spec, &eid, &label, &current, &output, &proof, &slot_pks)?;
            let stage = MixStage { server_id: label, output: output.clone(), proof };
            state.post(Phase::MixIdSig, "MIX", &Record::Stage1MixStage(stage))?;
            current = output;
        }
        current
    } else {
        input.clone()
    };

    // threshold decryption of the identity pairs, row by row
    let ctx = FsContext::new(&eid, "stage1-decrypt");
    let mut rng = state.rng("stage1-decrypt");
    let quorum: Vec<TellerShare> = state
        .teller_shares
        .iter()
        .take(state.tellers_public.t)
        .cloned()
        .collect();
    let mut parts_by_row: Vec<Stage1Parts> = Vec::new();
    let mut identities: Vec<Option<(Vec<u8>, Vec<u8>)>> = Vec::new();
    for (row_index, row) in final_batch.rows.iter().enumerate() {
        let parts = split_stage1_row(&spec, row)?;
        let pairs = identity_pairs(&parts);
        let pair_shares: Vec<Vec<DecryptShare>> = pairs
            .iter()
            .map(|c| {
                quorum
                    .iter()
                    .map(|s| partial_decrypt(&spec, s, c, &ctx, &mut rng))
                    .collect()
            })
            .collect();
        state.post(
            Phase::MixIdSig,
            "TT",
            &Record::Stage1RowDecrypt {
                row_index: row_index as u32,
                pair_shares: pair_shares.clone(),
            },
        )?;
        let elements =
            combine_identity_pairs(&spec, &state.tellers_public, &pairs, &pair_shares, &ctx)?;
        let opened = open_identity(
            &spec,
            &eid,
            &elements,
            id_width(&spec),
            signature_wire_len(&spec),
        )
        .ok();
        identities.push(opened);
        parts_by_row.push(parts);
    }

    // eligibility: signatures, roll membership, duplicate detection
    let forged_rows_unflagged = state
        .corruptions
        .iter()
        .any(|c| matches!(c, Corruption::ForgeSignature { .. }));
    let extra = state.signature_context();
    let extra_ref = extra.as_ref().map(|(d, p)| (d.as_str(), p.as_str()));

    let mut id_counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for identity in identities.iter().flatten() {
        *id_counts.entry(identity.0.clone()).or_insert(0) += 1;
    }

    let mut eligible = Vec::new();
    for (row_index, (identity, parts)) in identities.iter().zip(&parts_by_row).enumerate() {
        let row_index = row_index as u32;
        let flag = |reason: FlagReason, state: &mut ElectionState| -> Result<(), PipelineError> {
            let f = FlagRecord { pre_mix: false, row_index, reason };
            state.flags.push(f.clone());
            state.post(Phase::EligibleBallots, "TT", &Record::Flag(f))
        };
        let Some((id, sig_wire)) = identity else {
            flag(FlagReason::BadDecryption, state)?;
            continue;
        };
        let Some(roll_row) = state.voter_rows.iter().find(|r| &r.id == id) else {
            flag(FlagReason::NotOnRoll, state)?;
            continue;
        };
        if id_counts[id] > 1 {
            flag(FlagReason::DuplicateId, state)?;
            continue;
        }
        let sig_ok = signature_from_wire(&spec, sig_wire)
            .map(|sig| {
                verify_sig(
                    &spec,
                    &roll_row.vk,
                    &ballot_signature_message(id, &eid, extra_ref),
                    &sig,
                )
            })
            .unwrap_or(false);
        if !sig_ok && !forged_rows_unflagged {
            flag(FlagReason::BadSignature, state)?;
            continue;
        }
        let row = EligibleRow {
            row_index,
            id: id.clone(),
            sig_wire: sig_wire.clone(),
            enc_ballot_code: parts.enc_ballot_code.clone(),
            enc_vote: parts.enc_vote.clone(),
            enc_rc: parts.enc_rc.clone(),
        };
        state.post(Phase::EligibleBallots, "TT", &Record::Eligible(row.clone()))?;
        eligible.push(row);
    }
    state.eligible = eligible;
    Ok(())
}

/// Stage 2: mix and verifiably decrypt the (tracker, vote) pairs into the
/// public tally board.
pub fn run_stage2(state: &mut ElectionState) -> Result<(), PipelineError> {
    if state.eligible.is_empty() {
        return Ok(());
    }
    let eid = state.election_id().to_vec();
    let spec = state.spec.clone();

    let rows: Vec<Vec<crate::mixnet::MixSlot>> = state
        .eligible
        .iter()
        .map(|row| {
            let prevote = state
                .voter_rows
                .iter()
                .find(|r| r.id == row.id)
                .expect("eligible row joined against the roll");
            vec![
                crate::mixnet::MixSlot::ElGamal(prevote.enc_tracker.clone()),
                crate::mixnet::MixSlot::ElGamal(row.enc_vote.clone()),
            ]
        })
        .collect();
    let input = MixBatch {
        slot_kinds: vec![crate::mixnet::SlotKind::ElGamal; 2],
        rows,
    };
    state.post(Phase::MixTrackerVote, "TT", &Record::Stage2Input(input.clone()))?;

    let slot_pks = vec![state.tellers_public.pk_t.clone(); 2];
    let final_batch = if input.rows.len() >= 2 {
        let mut rng = state.rng("stage2-mix");
        let mut current = input.clone();
        for s in 1..=state.config.mix_servers {
            let label = format!("stage2/server-{s}");
            let (mut output, proof, _) =
                shuffle(&spec, &eid, &label, &current, &slot_pks, &mut rng)?;
            if let Some(row) = state.corruption(|c| match c {
                Corruption::DropMixRow { server, row } if *server == s => Some(*row),
                _ => None,
            }) {
                if row < output.rows.len() {
                    output.rows.remove(row);
                }
            }
            let stage = MixStage { server_id: label, output: output.clone(), proof };
            state.post(Phase::MixTrackerVote, "MIX", &Record::Stage2MixStage(stage))?;
            current = output;
        }
        current
    } else {
        input.clone()
    };

    // verifiable decryption into the tally board
    let ctx = FsContext::new(&eid, "tally-decrypt");
    let mut rng = state.rng("tally-decrypt");
    let quorum: Vec<TellerShare> = state
        .teller_shares
        .iter()
        .take(state.tellers_public.t)
        .cloned()
        .collect();
    let mut tally = Vec::new();
    for (row_index, row) in final_batch.rows.iter().enumerate() {
        let (enc_tracker, enc_vote) = match (&row[0], &row[1]) {
            (crate::mixnet::MixSlot::ElGamal(t), crate::mixnet::MixSlot::ElGamal(v)) => (t, v),
            _ => return Err(PipelineError::BadConfig("stage-2 row layout".into())),
        };
        let tracker_shares: Vec<DecryptShare> = quorum
            .iter()
            .map(|s| partial_decrypt(&spec, s, enc_tracker, &ctx, &mut rng))
            .collect();
        let vote_shares: Vec<DecryptShare> = quorum
            .iter()
            .map(|s| partial_decrypt(&spec, s, enc_vote, &ctx, &mut rng))
            .collect();
        let tracker_el = crate::tellers::combine_decrypt(
            &spec,
            &state.tellers_public,
            enc_tracker,
            &tracker_shares,
            &ctx,
        )?;
        let vote_el = crate::tellers::combine_decrypt(
            &spec,
            &state.tellers_public,
            enc_vote,
            &vote_shares,
            &ctx,
        )?;
        let tracker = crate::group::elgamal::exp_decode(&spec, &tracker_el, state.max_tracker())
            .map_err(|e| PipelineError::BadConfig(format!("tally tracker decode: {e}")))?;
        let mut vote = crate::group::elgamal::exp_decode(
            &spec,
            &vote_el,
            state.config.candidates.len() as u64,
        )
        .map_err(|e| PipelineError::BadConfig(format!("tally vote decode: {e}")))?
            as u32;
        state.post(
            Phase::TallyBoard,
            "TT",
            &Record::TallyRowDecrypt {
                row_index: row_index as u32,
                tracker_shares,
                vote_shares,
            },
        )?;
        if let Some(v) = state.corruption(|c| match c {
            Corruption::EditTallyRow { row, vote } if *row == row_index => Some(*vote),
            _ => None,
        }) {
            vote = v as u32;
        }
        state.post(
            Phase::TallyBoard,
            "TT",
            &Record::TallyRow { row_index: row_index as u32, tracker, vote },
        )?;
        tally.push((tracker, vote));
    }
    state.tally = tally;
    Ok(())
}

/// The notification pause is over: gate each checking voter's receipt
/// code through a PET, assemble and deliver alpha terms (unless the voter
/// registered for suppression), and run the voters' tracker retrieval.
/// Returns the off-transcript notification order.
pub fn notify_phase(
    state: &mut ElectionState,
    checking: &[usize],
) -> Result<Vec<usize>, PipelineError> {
    let eid = state.election_id().to_vec();
    let spec = state.spec.clone();
    // randomized notification order, recorded off-transcript
    let mut order: Vec<usize> = checking.to_vec();
    {
        let mut rng = state.rng("notify-order");
        let perm = crate::mixnet::random_permutation(order.len().max(1), &mut rng);
        if !order.is_empty() {
            order = perm.into_iter().map(|i| checking[i]).collect();
        }
    }

    for &voter in &order {
        let cred = state.credentials[voter].clone();
        let Some(row) = state.eligible.iter().find(|r| r.id == cred.id).cloned() else {
            continue; // abstainers have no receipt code to enter
        };
        let Some(cast) = state.cast.iter().find(|cb| cb.voter_index == voter) else {
            continue;
        };
        let rc = cast.rc;
        if !rc.is_valid() {
            continue; // device-side check-digit validation
        }
        let ctx = FsContext::new(&eid, "receipt-gate");
        let mut rng = state.rng(&format!("gate-{voter}"));
        let quorum = state.quorum().into_iter().cloned().collect::<Vec<_>>();
        let quorum_refs: Vec<&TellerShare> = quorum.iter().collect();
        let gate = tra_gate(
            &spec,
            &state.tellers_public,
            &quorum_refs,
            &rc,
            &row.enc_rc,
            &ctx,
            &mut rng,
        )?;
        state.post(
            Phase::PetLog,
            "TRA",
            &Record::ReceiptGate {
                voter_index: voter as u32,
                accepted: gate.accepted,
                fresh_enc: gate.fresh_enc,
                pet_shares: gate.pet_shares,
                decrypt_shares: gate.decrypt_shares,
            },
        )?;
        if !gate.accepted {
            continue;
        }
        let alpha = match state.tra.notify(&spec, state.tellers_public.n, voter)? {
            Some(alpha) => alpha,
            None => continue, // suppressed: only the fake path remains
        };
        let commitment = state.voter_rows[voter].commitment.clone();
        let tracker = retrieve_tracker(
            &spec,
            &cred.trapdoor.sk,
            &alpha.alpha,
            &commitment,
            state.max_tracker(),
        )?;
        state.retrievals.insert(voter, tracker);
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_honest_election_end_to_end() {
        let config = ElectionConfig::desk_default(5, 3, 42);
        let mut state = setup(config, Vec::new()).unwrap();
        let votes = [1usize, 2, 3, 1, 2];
        for (i, &v) in votes.iter().enumerate() {
            cast_vote(&mut state, i, v).unwrap();
        }
        close_voting(&mut state).unwrap();
        run_stage1(&mut state).unwrap();
        assert_eq!(state.eligible.len(), 5);
        assert!(state.flags.is_empty());
        run_stage2(&mut state).unwrap();
        assert_eq!(state.tally.len(), 5);

        let mut board_votes: Vec<u32> = state.tally.iter().map(|(_, v)| *v).collect();
        board_votes.sort_unstable();
        assert_eq!(board_votes, vec![1, 1, 2, 2, 3]);

        let checking: Vec<usize> = (0..5).collect();
        notify_phase(&mut state, &checking).unwrap();
        for (i, &v) in votes.iter().enumerate() {
            let tracker = state.retrievals[&i];
            let row = state.tally.iter().find(|(t, _)| *t == tracker).unwrap();
            assert_eq!(row.1 as usize, v);
        }

        state.transcript().verify_chain().unwrap();
    }

    #[test]
    fn double_vote_rejected() {
        let config = ElectionConfig::desk_default(3, 2, 43);
        let mut state = setup(config, Vec::new()).unwrap();
        cast_vote(&mut state, 0, 1).unwrap();
        assert!(matches!(
            cast_vote(&mut state, 0, 2),
            Err(PipelineError::Polling(crate::polling::PollingError::AlreadyVoted))
        ));
    }
}
