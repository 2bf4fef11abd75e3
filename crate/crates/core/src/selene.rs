//! Tracker lifecycle: the public tracker list, verifiable assignment
//! through a mix cascade, the trapdoor commitments, voter-side tracker
//! retrieval, and the fake-alpha computation that underpins coercion
//! mitigation.
//!
//! A voter's commitment C = pk^r * g^n is the beta term of an exponential
//! ElGamal encryption of the tracker under her own trapdoor key; the alpha
//! term g^r is withheld until notification. Holding the trapdoor key, she
//! can open C to any tracker she likes by solving for the alpha term,
//! which is exactly why a delivered alpha needs no authentication and why
//! a coercer learns nothing from the pair she shows.

use thiserror::Error;

use crate::codec::{put_bytes, put_u32, Canon, CodecError, Reader};
use crate::group::elgamal::{exp_decode, exp_encode, Ciphertext};
use crate::group::{GroupElement, GroupError, GroupSpec, Scalar};
use crate::mixnet::{verify_cascade, MixBatch, MixError, MixSlot, MixStage, SlotKind};
use crate::tellers::{
    combine_commitment_ciphertext, verify_decrypt_share, verify_factor_posting,
    CommitFactorPosting, DecryptShare, TellerPublic,
};
use crate::zkp::fs::FsContext;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeleneError {
    #[error("tracker set needs at least 2 trackers, got {0}")]
    NoAnonymitySet(usize),
    #[error("not enough trackers: {trackers} for {voters} voters")]
    NotEnoughTrackers { trackers: usize, voters: usize },
    #[error("pair does not open to a tracker in range: {0}")]
    NotInRange(#[from] GroupError),
    #[error("trapdoor key must be nonzero")]
    ZeroTrapdoorKey,
    #[error(transparent)]
    Mix(#[from] MixError),
}

/// The public list of tracking numbers, by default 1..n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackerSet {
    pub trackers: Vec<u64>,
    pub encoded: Vec<GroupElement>,
}

impl Canon for TrackerSet {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.trackers.encode_into(out);
        self.encoded.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(TrackerSet {
            trackers: Vec::<u64>::decode(r)?,
            encoded: Vec::<GroupElement>::decode(r)?,
        })
    }
}

pub fn setup_trackers(spec: &GroupSpec, n: usize) -> Result<TrackerSet, SeleneError> {
    if n < 2 {
        return Err(SeleneError::NoAnonymitySet(n));
    }
    let trackers: Vec<u64> = (1..=n as u64).collect();
    let encoded = trackers.iter().map(|&t| exp_encode(spec, t)).collect();
    Ok(TrackerSet { trackers, encoded })
}

/// The pre-vote bulletin-board row for one voter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoterRow {
    pub id: Vec<u8>,
    pub vk: GroupElement,
    pub pk: GroupElement,
    pub enc_tracker: Ciphertext,
    pub commitment: GroupElement,
}

impl Canon for VoterRow {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_bytes(out, &self.id);
        self.vk.encode_into(out);
        self.pk.encode_into(out);
        self.enc_tracker.encode_into(out);
        self.commitment.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(VoterRow {
            id: r.bytes()?,
            vk: GroupElement::decode(r)?,
            pk: GroupElement::decode(r)?,
            enc_tracker: Ciphertext::decode(r)?,
            commitment: GroupElement::decode(r)?,
        })
    }
}

/// The withheld half of a tracker encryption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaTerm {
    pub voter_index: usize,
    pub alpha: GroupElement,
}

impl Canon for AlphaTerm {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_u32(out, self.voter_index as u32);
        self.alpha.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(AlphaTerm {
            voter_index: r.u32()? as usize,
            alpha: GroupElement::decode(r)?,
        })
    }
}

/// Publicly checkable seed batch for the assignment mix: trivial
/// (randomness-zero) encryptions of the published tracker encodings.
pub fn tracker_seed_batch(spec: &GroupSpec, set: &TrackerSet) -> MixBatch {
    MixBatch {
        slot_kinds: vec![SlotKind::ElGamal],
        rows: set
            .encoded
            .iter()
            .map(|e| vec![MixSlot::ElGamal(Ciphertext::trivial(spec, e))])
            .collect(),
    }
}

/// Assigns trackers to voters through a verifiable mix cascade; the
/// assignment is the cascade's secret composed permutation. Returns the
/// published stages and the per-voter encrypted trackers (final stage
/// output, row i belonging to voter i).
pub fn assign_trackers(
    spec: &GroupSpec,
    election_id: &[u8],
    set: &TrackerSet,
    voter_count: usize,
    pk_t: &GroupElement,
    mix_servers: usize,
    rng: &mut dyn rand::RngCore,
) -> Result<(Vec<MixStage>, Vec<Ciphertext>), SeleneError> {
    if set.trackers.len() < voter_count {
        return Err(SeleneError::NotEnoughTrackers {
            trackers: set.trackers.len(),
            voters: voter_count,
        });
    }
    let batch = tracker_seed_batch(spec, set);
    let (stages, _states) = crate::mixnet::run_cascade(
        spec,
        election_id,
        "tracker-assign",
        &batch,
        std::slice::from_ref(pk_t),
        mix_servers,
        rng,
    )?;
    let finals = stages
        .last()
        .unwrap()
        .output
        .rows
        .iter()
        .take(voter_count)
        .map(|row| match &row[0] {
            MixSlot::ElGamal(c) => c.clone(),
            _ => unreachable!("tracker batch is single ElGamal slot"),
        })
        .collect();
    Ok((stages, finals))
}

/// Opens (alpha, C) with the trapdoor key and decodes the tracker:
/// n = dlog_g(C / alpha^sk), searched over [1, max_n].
pub fn retrieve_tracker(
    spec: &GroupSpec,
    sk: &Scalar,
    alpha: &GroupElement,
    commitment: &GroupElement,
    max_n: u64,
) -> Result<u64, SeleneError> {
    let opened = spec.div(commitment, &spec.pow(alpha, sk));
    Ok(exp_decode(spec, &opened, max_n)?)
}

/// Computes the alpha term opening C to `target`:
/// alpha' = (C * g^-target)^(1/sk). At the real tracker this reproduces
/// the genuine alpha exactly.
pub fn fake_alpha(
    spec: &GroupSpec,
    sk: &Scalar,
    commitment: &GroupElement,
    voter_index: usize,
    target: u64,
) -> Result<AlphaTerm, SeleneError> {
    if sk.is_zero() {
        return Err(SeleneError::ZeroTrapdoorKey);
    }
    let sk_inv = spec.s_inv(sk).map_err(|_| SeleneError::ZeroTrapdoorKey)?;
    let shifted = spec.div(commitment, &exp_encode(spec, target));
    Ok(AlphaTerm {
        voter_index,
        alpha: spec.pow(&shifted, &sk_inv),
    })
}

/// Everything the setup verifier needs, as parsed from the transcript.
#[derive(Debug, Clone)]
pub struct SetupView {
    pub tracker_set: TrackerSet,
    pub tracker_stages: Vec<MixStage>,
    /// (id, vk, pk) per eligible voter, in roll order.
    pub roll: Vec<(Vec<u8>, GroupElement, GroupElement)>,
    pub voter_rows: Vec<VoterRow>,
    pub factor_postings: Vec<CommitFactorPosting>,
    /// Per voter: decryption shares for the combined commitment ciphertext.
    pub commitment_decrypts: Vec<Vec<DecryptShare>>,
}

/// Verifies the whole pre-vote setup from public data: tracker list
/// publication, assignment-mix proofs, the distributed commitment
/// construction, and row completeness. Returns an itemized failure list.
pub fn verify_setup(
    spec: &GroupSpec,
    election_id: &[u8],
    tellers: &TellerPublic,
    view: &SetupView,
) -> Vec<String> {
    let mut failures = Vec::new();
    let n_voters = view.roll.len();

    // tracker list: 1..n, encoded correctly, enough for the roll
    let expect: Vec<u64> = (1..=view.tracker_set.trackers.len() as u64).collect();
    if view.tracker_set.trackers != expect {
        failures.push("setup-trackers: published list is not 1..n".into());
    }
    if view.tracker_set.trackers.len() < n_voters || n_voters < 2 {
        failures.push("setup-trackers: tracker count below voter count".into());
    }
    for (t, e) in view.tracker_set.trackers.iter().zip(&view.tracker_set.encoded) {
        if exp_encode(spec, *t) != *e {
            failures.push(format!("setup-trackers: encoding of tracker {t} wrong"));
            break;
        }
    }

    // assignment mix: seeded from trivial encryptions, chain verifies
    let seed = tracker_seed_batch(spec, &view.tracker_set);
    if let Err(e) = verify_cascade(
        spec,
        election_id,
        "tracker-assign",
        &seed,
        &view.tracker_stages,
        std::slice::from_ref(&tellers.pk_t),
    ) {
        failures.push(format!("setup-tracker-mix: {e}"));
    }

    // pre-vote rows: one per roll entry, matching keys and mix outputs
    if view.voter_rows.len() != n_voters {
        failures.push(format!(
            "prevote-rows: {} rows for {} eligible voters",
            view.voter_rows.len(),
            n_voters
        ));
    }
    let final_rows: Option<&MixStage> = view.tracker_stages.last();
    for (i, row) in view.voter_rows.iter().enumerate() {
        if let Some((id, vk, pk)) = view.roll.get(i) {
            if &row.id != id || &row.vk != vk || &row.pk != pk {
                failures.push(format!("prevote-rows: row {i} does not match the roll"));
            }
        }
        if let Some(stage) = final_rows {
            if let Some(mix_row) = stage.output.rows.get(i) {
                if mix_row != &vec![MixSlot::ElGamal(row.enc_tracker.clone())] {
                    failures.push(format!(
                        "prevote-rows: row {i} encrypted tracker differs from mix output"
                    ));
                }
            }
        }
    }
    for i in 0..view.voter_rows.len() {
        for j in (i + 1)..view.voter_rows.len() {
            if view.voter_rows[i].enc_tracker == view.voter_rows[j].enc_tracker {
                failures.push(format!("prevote-rows: rows {i} and {j} share an encrypted tracker"));
            }
        }
    }

    // distributed commitment construction
    let ctx = FsContext::new(election_id, "commitment-setup");
    for i in 0..n_voters {
        let Some(row) = view.voter_rows.get(i) else { continue };
        let postings: Vec<&CommitFactorPosting> = view
            .factor_postings
            .iter()
            .filter(|p| p.voter_index == i)
            .collect();
        let mut teller_ids: Vec<usize> = postings.iter().map(|p| p.teller_id).collect();
        teller_ids.sort_unstable();
        teller_ids.dedup();
        if teller_ids != (1..=tellers.n).collect::<Vec<_>>() {
            failures.push(format!("setup-commitments: voter {i} missing teller factors"));
            continue;
        }
        for p in &postings {
            if verify_factor_posting(spec, &tellers.pk_t, &row.pk, p, &ctx).is_err() {
                failures.push(format!(
                    "setup-commitments: factor proof teller {} voter {i} invalid",
                    p.teller_id
                ));
            }
        }
        let enc_c = combine_commitment_ciphertext(spec, &row.enc_tracker, &postings);
        let shares = match view.commitment_decrypts.get(i) {
            Some(s) if s.len() >= tellers.t => s,
            _ => {
                failures.push(format!("setup-commitments: voter {i} missing decryption shares"));
                continue;
            }
        };
        let mut ok = true;
        for s in shares {
            if verify_decrypt_share(spec, tellers, &enc_c, s, &ctx).is_err() {
                failures.push(format!(
                    "setup-commitments: decryption share teller {} voter {i} invalid",
                    s.teller_id
                ));
                ok = false;
            }
        }
        if ok {
            match crate::tellers::combine_decrypt(spec, tellers, &enc_c, shares, &ctx) {
                Ok(c_i) if c_i == row.commitment => {}
                _ => failures.push(format!(
                    "setup-commitments: published commitment for voter {i} does not match"
                )),
            }
        }
    }

    failures
}
