//! Polling-station roles: registration clerk, smartcard credential,
//! ballot printer, scanner/ballot box, receipt codes, and the tracker
//! retrieval authority.
//!
//! The privacy-critical orderings live here as code structure: the printer
//! re-encrypts the card output and holds no decryption key; the scanner
//! draws the receipt code from its randomness source before it reads the
//! vote, so the code cannot leak the vote through its value.

use rand::RngCore;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use crate::codec::{put_bytes, put_u32, Canon, CodecError, Reader};
use crate::group::elgamal::{encrypt, ElGamalKeyPair, Ciphertext};
use crate::group::rcca::{
    chunk_count, compute_binding, encrypt_chunks, rcca_reencrypt_with, RccaCiphertext,
};
use crate::group::schnorr::{
    sig_keygen, sign, signature_to_wire, signature_wire_len, SigningKeyPair,
};
use crate::group::{Backend, GroupElement, GroupSpec, Scalar};
use crate::selene::AlphaTerm;
use crate::tellers::{verify_alpha_record, AlphaShareRecord, TellerPublic, TellerShare};
use crate::zkp::fs::FsContext;
use crate::zkp::pet::{pet_run, PetOutcome, PetShare};
use crate::zkp::pok::{prove_pok_randomness, prove_vote, PokProof, VoteProof};
use crate::zkp::reenc_link::{prove_reenc_link, ReencLinkProof, ReencLinkWitness};
use crate::zkp::ZkpError;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PollingError {
    #[error("voter id not on the roll")]
    NotOnRoll,
    #[error("voter has already been registered as voted")]
    AlreadyVoted,
    #[error("card output rejected: {0}")]
    InvalidCardOutput(&'static str),
    #[error("ballot has no vote filled in")]
    UnfilledBallot,
    #[error("vote already set on this ballot")]
    VoteAlreadySet,
    #[error("receipt code check digit invalid")]
    CheckDigitInvalid,
    #[error("receipt verification failed, possible ballot/id substitution")]
    PetFailed,
    #[error("missing alpha share from teller {0}")]
    MissingShare(usize),
    #[error("alpha share from teller {0} rejected")]
    BadAlphaShare(usize),
    #[error("proof generation failed: {0}")]
    ProofGenFailure(String),
    #[error(transparent)]
    Zkp(#[from] ZkpError),
}

/// What the smartcard holds for one voter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoterCredential {
    pub id: Vec<u8>,
    pub signing: SigningKeyPair,
    pub trapdoor: ElGamalKeyPair,
    pub contact: String,
}

impl Canon for VoterCredential {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_bytes(out, &self.id);
        self.signing.vk.encode_into(out);
        self.signing.sigk.encode_into(out);
        self.trapdoor.pk.encode_into(out);
        self.trapdoor.sk.encode_into(out);
        crate::codec::put_str(out, &self.contact);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(VoterCredential {
            id: r.bytes()?,
            signing: SigningKeyPair {
                vk: GroupElement::decode(r)?,
                sigk: Scalar::decode(r)?,
            },
            trapdoor: ElGamalKeyPair {
                pk: GroupElement::decode(r)?,
                sk: Scalar::decode(r)?,
            },
            contact: crate::codec::read_str(r)?,
        })
    }
}

/// Voter id byte width per backend: one byte on the narrow test group,
/// sixteen on the production group.
pub fn id_width(spec: &GroupSpec) -> usize {
    match spec.backend {
        Backend::TestGroup => 1,
        Backend::ProdGroup => 16,
    }
}

/// Generates distinct ids and keys for `count` voters.
pub fn make_credentials(
    spec: &GroupSpec,
    count: usize,
    rng: &mut dyn RngCore,
) -> Vec<VoterCredential> {
    let w = id_width(spec);
    (0..count)
        .map(|i| {
            let mut id = vec![0u8; w];
            let seq = (i as u64 + 1).to_be_bytes();
            let take = w.min(8);
            id[w - take..].copy_from_slice(&seq[8 - take..]);
            VoterCredential {
                id,
                signing: sig_keygen(spec, rng),
                trapdoor: crate::group::elgamal::keygen(spec, rng),
                contact: format!("voter-{}@example.test", i + 1),
            }
        })
        .collect()
}

/// Clerk-side registration state: the paper attendance log.
#[derive(Debug, Clone, Default)]
pub struct RegistrationDesk {
    roll_ids: BTreeSet<Vec<u8>>,
    voted: BTreeSet<Vec<u8>>,
    pub attendance_log: Vec<Vec<u8>>,
}

impl RegistrationDesk {
    pub fn new(roll_ids: impl IntoIterator<Item = Vec<u8>>) -> Self {
        RegistrationDesk {
            roll_ids: roll_ids.into_iter().collect(),
            voted: BTreeSet::new(),
            attendance_log: Vec::new(),
        }
    }

    pub fn register_voter(&mut self, id: &[u8]) -> Result<(), PollingError> {
        if !self.roll_ids.contains(id) {
            return Err(PollingError::NotOnRoll);
        }
        if self.voted.contains(id) {
            return Err(PollingError::AlreadyVoted);
        }
        self.voted.insert(id.to_vec());
        self.attendance_log.push(id.to_vec());
        Ok(())
    }

    pub fn has_voted(&self, id: &[u8]) -> bool {
        self.voted.contains(id)
    }
}

/// The printed QR payload: chunked re-encryptable encryptions of the id
/// and of the smartcard signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallotCode {
    pub enc_id: Vec<RccaCiphertext>,
    pub enc_sig: Vec<RccaCiphertext>,
}

impl Canon for BallotCode {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.enc_id.encode_into(out);
        self.enc_sig.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(BallotCode {
            enc_id: Vec::<RccaCiphertext>::decode(r)?,
            enc_sig: Vec::<RccaCiphertext>::decode(r)?,
        })
    }
}

impl BallotCode {
    pub fn chunks(&self) -> impl Iterator<Item = &RccaCiphertext> {
        self.enc_id.iter().chain(self.enc_sig.iter())
    }

    /// Group elements of all chunks in canonical order.
    pub fn components(&self) -> Vec<GroupElement> {
        self.chunks()
            .flat_map(|c| {
                [c.c1.a.clone(), c.c1.b.clone(), c.c2.a.clone(), c.c2.b.clone()]
            })
            .collect()
    }

    /// Wire size in bits of the printed payload. The binding digests are
    /// recomputable from the components, so only group elements count.
    pub fn wire_bits(&self, spec: &GroupSpec) -> u64 {
        (self.enc_id.len() + self.enc_sig.len()) as u64 * 4 * spec.element_width() as u64 * 8
    }
}

/// Signed message layout: id, election id, and optionally date and printer.
pub fn ballot_signature_message(
    id: &[u8],
    election_id: &[u8],
    extra: Option<(&str, &str)>,
) -> Vec<u8> {
    let mut msg = Vec::new();
    put_bytes(&mut msg, id);
    put_bytes(&mut msg, election_id);
    match extra {
        Some((date, printer)) => {
            msg.push(1);
            crate::codec::put_str(&mut msg, date);
            crate::codec::put_str(&mut msg, printer);
        }
        None => msg.push(0),
    }
    msg
}

/// Card-side step: the smartcard signs and encrypts under the election
/// key. `extra` carries the optional date/printer-id fields (off by
/// default).
pub fn card_issue(
    spec: &GroupSpec,
    election_id: &[u8],
    credential: &VoterCredential,
    pk_t: &GroupElement,
    extra: Option<(&str, &str)>,
    rng: &mut dyn RngCore,
) -> Result<BallotCode, PollingError> {
    let msg = ballot_signature_message(&credential.id, election_id, extra);
    let sig = sign(spec, &credential.signing.sigk, &msg, rng);
    let sig_wire = signature_to_wire(spec, &sig);
    let enc_id = encrypt_chunks(spec, election_id, pk_t, &credential.id, rng)
        .map_err(|e| PollingError::ProofGenFailure(e.to_string()))?;
    let enc_sig = encrypt_chunks(spec, election_id, pk_t, &sig_wire, rng)
        .map_err(|e| PollingError::ProofGenFailure(e.to_string()))?;
    Ok(BallotCode { enc_id, enc_sig })
}

/// Expected chunk counts for a ballot code under this group.
pub fn ballot_code_chunk_counts(spec: &GroupSpec) -> (usize, usize) {
    (
        chunk_count(spec, id_width(spec)),
        chunk_count(spec, signature_wire_len(spec)),
    )
}

fn validate_chunks(
    spec: &GroupSpec,
    election_id: &[u8],
    chunks: &[RccaCiphertext],
    expect: usize,
) -> Result<(), PollingError> {
    if chunks.len() != expect {
        return Err(PollingError::InvalidCardOutput("chunk count"));
    }
    for c in chunks {
        if c.c1.check_member(spec).is_err() || c.c2.check_member(spec).is_err() {
            return Err(PollingError::InvalidCardOutput("component outside group"));
        }
        if c.binding != compute_binding(spec, election_id, &c.c1, &c.c2) {
            return Err(PollingError::InvalidCardOutput("binding mismatch"));
        }
    }
    Ok(())
}

/// Printer-side step: validates the card output and re-encrypts every
/// chunk, so a colluding card and scanner cannot link through component
/// equality. The printer takes no decryption key.
pub fn print_ballot(
    spec: &GroupSpec,
    election_id: &[u8],
    pk_t: &GroupElement,
    card_output: &BallotCode,
    rng: &mut dyn RngCore,
) -> Result<PaperBallot, PollingError> {
    let (id_chunks, sig_chunks) = ballot_code_chunk_counts(spec);
    validate_chunks(spec, election_id, &card_output.enc_id, id_chunks)?;
    validate_chunks(spec, election_id, &card_output.enc_sig, sig_chunks)?;
    let mut reenc = |chunks: &[RccaCiphertext]| -> Vec<RccaCiphertext> {
        chunks
            .iter()
            .map(|c| {
                let s1 = spec.rand_scalar(rng);
                let s2 = spec.rand_scalar(rng);
                rcca_reencrypt_with(spec, election_id, pk_t, c, &s1, &s2)
            })
            .collect()
    };
    let code = BallotCode {
        enc_id: reenc(&card_output.enc_id),
        enc_sig: reenc(&card_output.enc_sig),
    };
    Ok(PaperBallot { code, vote: None, box_serial: None })
}

/// The physical ballot: printed code, hand-filled vote, and the retention
/// order assigned when it lands in the ballot box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperBallot {
    pub code: BallotCode,
    pub vote: Option<usize>,
    pub box_serial: Option<u64>,
}

impl Canon for PaperBallot {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.code.encode_into(out);
        match self.vote {
            Some(v) => {
                out.push(1);
                put_u32(out, v as u32);
            }
            None => out.push(0),
        }
        match self.box_serial {
            Some(s) => {
                out.push(1);
                crate::codec::put_u64(out, s);
            }
            None => out.push(0),
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let code = BallotCode::decode(r)?;
        let vote = match r.u8()? {
            1 => Some(r.u32()? as usize),
            _ => None,
        };
        let box_serial = match r.u8()? {
            1 => Some(r.u64()?),
            _ => None,
        };
        Ok(PaperBallot { code, vote, box_serial })
    }
}

impl PaperBallot {
    /// The booth step. A ballot accepts a vote exactly once.
    pub fn fill_vote(&mut self, candidate: usize) -> Result<(), PollingError> {
        if self.vote.is_some() {
            return Err(PollingError::VoteAlreadySet);
        }
        self.vote = Some(candidate);
        Ok(())
    }
}

// -- receipt codes --

/// Damm quasigroup table: detects all single-digit and adjacent
/// transposition errors.
const DAMM: [[u8; 10]; 10] = [
    [0, 3, 1, 7, 5, 9, 8, 6, 4, 2],
    [7, 0, 9, 2, 1, 5, 4, 8, 6, 3],
    [4, 2, 0, 6, 8, 7, 1, 3, 5, 9],
    [1, 7, 5, 0, 9, 8, 3, 4, 2, 6],
    [6, 1, 2, 3, 0, 4, 5, 9, 7, 8],
    [3, 6, 7, 4, 2, 0, 9, 5, 8, 1],
    [5, 8, 6, 9, 7, 2, 0, 1, 3, 4],
    [8, 9, 4, 5, 3, 6, 2, 0, 1, 7],
    [9, 4, 3, 8, 6, 1, 7, 2, 0, 5],
    [2, 5, 8, 1, 4, 3, 6, 7, 9, 0],
];

pub fn damm_digit(digits: &[u8]) -> u8 {
    digits.iter().fold(0u8, |interim, &d| DAMM[interim as usize][d as usize])
}

/// Five random decimal digits plus a Damm check digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceiptCode {
    pub digits: [u8; 5],
    pub check: u8,
}

impl Canon for ReceiptCode {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.digits);
        out.push(self.check);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let mut digits = [0u8; 5];
        digits.copy_from_slice(r.take(5)?);
        Ok(ReceiptCode { digits, check: r.u8()? })
    }
}

impl ReceiptCode {
    pub fn random(rng: &mut dyn RngCore) -> Self {
        let mut digits = [0u8; 5];
        for d in &mut digits {
            *d = (rng.next_u32() % 10) as u8;
        }
        ReceiptCode { digits, check: damm_digit(&digits) }
    }

    pub fn from_value(value: u32) -> Self {
        assert!(value < 100_000);
        let mut digits = [0u8; 5];
        let mut v = value;
        for i in (0..5).rev() {
            digits[i] = (v % 10) as u8;
            v /= 10;
        }
        ReceiptCode { digits, check: damm_digit(&digits) }
    }

    pub fn value(&self) -> u64 {
        self.digits.iter().fold(0u64, |acc, &d| acc * 10 + d as u64)
    }

    pub fn is_valid(&self) -> bool {
        self.digits.iter().all(|&d| d < 10) && self.check == damm_digit(&self.digits)
    }

    /// Six-character decimal string, as the voter types it.
    pub fn as_string(&self) -> String {
        let mut s: String = self.digits.iter().map(|d| (b'0' + d) as char).collect();
        s.push((b'0' + self.check) as char);
        s
    }

    pub fn parse(s: &str) -> Result<Self, PollingError> {
        let bytes: Vec<u8> = s
            .trim()
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as u8).ok_or(PollingError::CheckDigitInvalid))
            .collect::<Result<_, _>>()?;
        if bytes.len() != 6 {
            return Err(PollingError::CheckDigitInvalid);
        }
        let mut digits = [0u8; 5];
        digits.copy_from_slice(&bytes[..5]);
        let rc = ReceiptCode { digits, check: bytes[5] };
        if !rc.is_valid() {
            return Err(PollingError::CheckDigitInvalid);
        }
        Ok(rc)
    }

    /// Exponent carried inside the receipt-code encryption: 1 + value so
    /// the plaintext stays inside the decodable range on both backends.
    pub fn exponent(&self) -> u64 {
        1 + self.value()
    }

    pub fn encode(&self, spec: &GroupSpec) -> GroupElement {
        crate::group::elgamal::exp_encode(spec, self.exponent())
    }
}

/// What the scanner publishes for one ballot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScannerTuple {
    pub enc_id: Vec<RccaCiphertext>,
    pub enc_sig: Vec<RccaCiphertext>,
    pub enc_ballot_code: Vec<Ciphertext>,
    pub enc_vote: Ciphertext,
    pub enc_rc: Ciphertext,
    pub vote_proof: VoteProof,
    pub rc_proof: PokProof,
    pub link_proof: ReencLinkProof,
}

impl Canon for ScannerTuple {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.enc_id.encode_into(out);
        self.enc_sig.encode_into(out);
        self.enc_ballot_code.encode_into(out);
        self.enc_vote.encode_into(out);
        self.enc_rc.encode_into(out);
        self.vote_proof.encode_into(out);
        self.rc_proof.encode_into(out);
        self.link_proof.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(ScannerTuple {
            enc_id: Vec::<RccaCiphertext>::decode(r)?,
            enc_sig: Vec::<RccaCiphertext>::decode(r)?,
            enc_ballot_code: Vec::<Ciphertext>::decode(r)?,
            enc_vote: Ciphertext::decode(r)?,
            enc_rc: Ciphertext::decode(r)?,
            vote_proof: VoteProof::decode(r)?,
            rc_proof: PokProof::decode(r)?,
            link_proof: ReencLinkProof::decode(r)?,
        })
    }
}

impl ScannerTuple {
    pub fn published_chunks(&self) -> Vec<RccaCiphertext> {
        self.enc_id.iter().chain(self.enc_sig.iter()).cloned().collect()
    }
}

pub fn scan_context(election_id: &[u8]) -> FsContext {
    FsContext::new(election_id, "cast-ballot")
}

/// Scanner step. The receipt code is drawn from the randomness stream
/// before the vote is read, so its value cannot depend on the vote.
pub fn scan_ballot(
    spec: &GroupSpec,
    election_id: &[u8],
    pk_t: &GroupElement,
    num_candidates: usize,
    ballot: &PaperBallot,
    rng: &mut dyn RngCore,
) -> Result<(ScannerTuple, ReceiptCode), PollingError> {
    let rc = ReceiptCode::random(rng);
    let vote = ballot.vote.ok_or(PollingError::UnfilledBallot)?;

    // re-encrypt the printed chunks, retaining the randomness
    let mut reenc_randomness = Vec::new();
    let mut reenc = |chunks: &[RccaCiphertext]| -> Vec<RccaCiphertext> {
        chunks
            .iter()
            .map(|c| {
                let s1 = spec.rand_scalar(rng);
                let s2 = spec.rand_scalar(rng);
                let out = rcca_reencrypt_with(spec, election_id, pk_t, c, &s1, &s2);
                reenc_randomness.push(s1);
                reenc_randomness.push(s2);
                out
            })
            .collect()
    };
    let enc_id = reenc(&ballot.code.enc_id);
    let enc_sig = reenc(&ballot.code.enc_sig);

    // element-wise encryptions of the printed components
    let mut enc_randomness = Vec::new();
    let enc_ballot_code: Vec<Ciphertext> = ballot
        .code
        .components()
        .iter()
        .map(|x| {
            let u = spec.rand_scalar(rng);
            let e = encrypt(spec, pk_t, x, &u);
            enc_randomness.push(u);
            e
        })
        .collect();

    let ctx = scan_context(election_id);
    let r_vote = spec.rand_scalar(rng);
    let enc_vote = encrypt(
        spec,
        pk_t,
        &crate::group::elgamal::exp_encode(spec, vote as u64),
        &r_vote,
    );
    let vote_proof = prove_vote(spec, pk_t, &enc_vote, vote, &r_vote, num_candidates, &ctx, rng)
        .map_err(|e| PollingError::ProofGenFailure(e.to_string()))?;

    let r_rc = spec.rand_scalar(rng);
    let enc_rc = encrypt(spec, pk_t, &rc.encode(spec), &r_rc);
    let rc_proof = prove_pok_randomness(spec, pk_t, &enc_rc, &r_rc, &ctx, rng);

    let published: Vec<RccaCiphertext> =
        enc_id.iter().chain(enc_sig.iter()).cloned().collect();
    let link_proof = prove_reenc_link(
        spec,
        pk_t,
        &published,
        &enc_ballot_code,
        &ReencLinkWitness { enc_randomness, reenc_randomness },
        &ctx,
        rng,
    )
    .map_err(|e| PollingError::ProofGenFailure(e.to_string()))?;

    Ok((
        ScannerTuple {
            enc_id,
            enc_sig,
            enc_ballot_code,
            enc_vote,
            enc_rc,
            vote_proof,
            rc_proof,
            link_proof,
        },
        rc,
    ))
}

/// Verifies the proof bundle of a published tuple.
pub fn verify_tuple_proofs(
    spec: &GroupSpec,
    election_id: &[u8],
    pk_t: &GroupElement,
    num_candidates: usize,
    tuple: &ScannerTuple,
) -> Result<(), ZkpError> {
    let ctx = scan_context(election_id);
    crate::zkp::pok::verify_vote(spec, pk_t, &tuple.enc_vote, num_candidates, &tuple.vote_proof, &ctx)?;
    crate::zkp::pok::verify_pok_randomness(spec, pk_t, &tuple.enc_rc, &tuple.rc_proof, &ctx)?;
    let published = tuple.published_chunks();
    crate::zkp::reenc_link::verify_reenc_link(
        spec,
        pk_t,
        &published,
        &tuple.enc_ballot_code,
        &tuple.link_proof,
        &ctx,
    )
}

// -- tracker retrieval authority --

/// TRA-side state: per-voter alpha shares received from the tellers, plus
/// the coercion suppression list.
#[derive(Debug, Clone, Default)]
pub struct TraState {
    /// voter index -> teller id -> record
    shares: BTreeMap<usize, BTreeMap<usize, AlphaShareRecord>>,
    suppressed: BTreeSet<usize>,
    pub delivered: BTreeMap<usize, AlphaTerm>,
}

impl TraState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Accepts a teller's authenticated share after checking its
    /// same-exponent proof against the voter's trapdoor key.
    pub fn receive_share(
        &mut self,
        spec: &GroupSpec,
        voter_pk: &GroupElement,
        record: AlphaShareRecord,
        ctx: &FsContext,
    ) -> Result<(), PollingError> {
        verify_alpha_record(spec, voter_pk, &record, ctx)
            .map_err(|_| PollingError::BadAlphaShare(record.teller_id))?;
        self.shares
            .entry(record.voter_index)
            .or_default()
            .insert(record.teller_id, record);
        Ok(())
    }

    /// Coerced voters register here; the real alpha is then never sent.
    pub fn suppress(&mut self, voter_index: usize) {
        self.suppressed.insert(voter_index);
    }

    pub fn is_suppressed(&self, voter_index: usize) -> bool {
        self.suppressed.contains(&voter_index)
    }

    /// Assembles alpha for a voter from all teller shares. The result is
    /// delivered over an unauthenticated channel; its trustworthiness
    /// comes from the algebra, not from any metadata.
    pub fn assemble_alpha(
        &self,
        spec: &GroupSpec,
        tellers_n: usize,
        voter_index: usize,
    ) -> Result<AlphaTerm, PollingError> {
        let per_voter = self
            .shares
            .get(&voter_index)
            .ok_or(PollingError::MissingShare(1))?;
        let mut alpha = spec.identity();
        for k in 1..=tellers_n {
            let record = per_voter.get(&k).ok_or(PollingError::MissingShare(k))?;
            alpha = spec.mul(&alpha, &record.g_exp_share);
        }
        Ok(AlphaTerm { voter_index, alpha })
    }

    /// The notification step: gate on suppression, then deliver.
    pub fn notify(
        &mut self,
        spec: &GroupSpec,
        tellers_n: usize,
        voter_index: usize,
    ) -> Result<Option<AlphaTerm>, PollingError> {
        if self.is_suppressed(voter_index) {
            return Ok(None);
        }
        let alpha = self.assemble_alpha(spec, tellers_n, voter_index)?;
        self.delivered.insert(voter_index, alpha.clone());
        Ok(Some(alpha))
    }

    /// Flattens the private store for the state files kept outside the
    /// transcript.
    pub fn export(&self) -> (Vec<AlphaShareRecord>, Vec<usize>, Vec<AlphaTerm>) {
        (
            self.shares
                .values()
                .flat_map(|per| per.values().cloned())
                .collect(),
            self.suppressed.iter().copied().collect(),
            self.delivered.values().cloned().collect(),
        )
    }

    /// Rebuilds the store from exported parts without re-checking proofs
    /// (they were checked on receipt).
    pub fn import(
        records: Vec<AlphaShareRecord>,
        suppressed: Vec<usize>,
        delivered: Vec<AlphaTerm>,
    ) -> Self {
        let mut tra = TraState::new();
        for record in records {
            tra.shares
                .entry(record.voter_index)
                .or_default()
                .insert(record.teller_id, record);
        }
        tra.suppressed = suppressed.into_iter().collect();
        tra.delivered = delivered.into_iter().map(|a| (a.voter_index, a)).collect();
        tra
    }
}

/// Public evidence of one receipt-code gate run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateEvidence {
    pub accepted: bool,
    pub fresh_enc: Ciphertext,
    pub outcome: PetOutcome,
    pub pet_shares: Vec<PetShare>,
    pub decrypt_shares: Vec<crate::tellers::DecryptShare>,
}

/// The receipt-code gate: PET between a fresh encryption of the claimed
/// code and the one on the bulletin board. Check digits are validated
/// client-side before any teller work.
pub fn tra_gate(
    spec: &GroupSpec,
    tellers: &TellerPublic,
    teller_shares: &[&TellerShare],
    claimed: &ReceiptCode,
    enc_rc_on_bb: &Ciphertext,
    ctx: &FsContext,
    rng: &mut dyn RngCore,
) -> Result<GateEvidence, PollingError> {
    if !claimed.is_valid() {
        return Err(PollingError::CheckDigitInvalid);
    }
    let fresh = crate::group::elgamal::encrypt_rand(spec, &tellers.pk_t, &claimed.encode(spec), rng).0;
    let (outcome, pet_shares, decrypt_shares) =
        pet_run(spec, tellers, teller_shares, &fresh, enc_rc_on_bb, ctx, rng)?;
    Ok(GateEvidence {
        accepted: outcome.equal,
        fresh_enc: fresh,
        outcome,
        pet_shares,
        decrypt_shares,
    })
}

// -- QR capacity check --

/// Published capacity of the barcode versions the payload is sized
/// against: 1088 bits for a version-6 code per component, 2168 bits
/// (271 bytes, binary mode, error correction L) for the full version-10
/// code.
pub const QR_V6_BITS: u64 = 1088;
pub const QR_V10_BITS: u64 = 2168;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QrCheck {
    pub component_bits: Vec<u64>,
    pub total_bits: u64,
    pub fits_v6_per_component: bool,
    pub fits_v10_total: bool,
}

/// Sizes the printed ballot code against the barcode budgets: each
/// encryption component against a version-6 code, the whole code against
/// version 10.
pub fn qr_capacity_check(spec: &GroupSpec, code: &BallotCode) -> QrCheck {
    let per_chunk = 4 * spec.element_width() as u64 * 8;
    let component_bits: Vec<u64> = code.chunks().map(|_| per_chunk).collect();
    let total_bits: u64 = component_bits.iter().sum();
    QrCheck {
        fits_v6_per_component: component_bits.iter().all(|&b| b <= QR_V6_BITS),
        fits_v10_total: total_bits <= QR_V10_BITS,
        component_bits,
        total_bits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::rcca::rcca_decrypt_block;
    use crate::group::schnorr::{signature_from_wire, verify_sig};
    use crate::group::seeded_rng;
    use crate::tellers::{dkg, reconstruct_secret};

    const EID: &[u8] = b"ELX-polling";

    fn setup(
        rng: &mut dyn RngCore,
    ) -> (GroupSpec, TellerPublic, Vec<TellerShare>, Vec<VoterCredential>) {
        let spec = GroupSpec::test_group();
        let (public, shares) = dkg(&spec, 3, 2, rng).unwrap();
        let creds = make_credentials(&spec, 3, rng);
        (spec, public, shares, creds)
    }

    fn full_key(spec: &GroupSpec, shares: &[TellerShare], t: usize) -> Scalar {
        let refs: Vec<&TellerShare> = shares.iter().collect();
        reconstruct_secret(spec, &refs, t).unwrap()
    }

    #[test]
    fn registration_flow() {
        let mut rng = seeded_rng(b"seed", "reg");
        let (_, _, _, creds) = setup(&mut rng);
        let mut desk = RegistrationDesk::new(creds.iter().map(|c| c.id.clone()));
        desk.register_voter(&creds[0].id).unwrap();
        assert_eq!(desk.register_voter(&creds[0].id), Err(PollingError::AlreadyVoted));
        assert_eq!(desk.register_voter(b"zz"), Err(PollingError::NotOnRoll));
        assert_eq!(desk.attendance_log.len(), 1);
    }

    #[test]
    fn card_print_scan_round_trip() {
        let mut rng = seeded_rng(b"seed", "cps");
        let (spec, public, shares, creds) = setup(&mut rng);
        let sk = full_key(&spec, &shares, public.t);
        let cred = &creds[0];

        let card = card_issue(&spec, EID, cred, &public.pk_t, None, &mut rng).unwrap();
        let mut ballot = print_ballot(&spec, EID, &public.pk_t, &card, &mut rng).unwrap();

        // the printed code decrypts to the card's id and a signature that
        // verifies, yet shares no component with the card output
        let id = crate::group::rcca::decrypt_chunks(
            &spec, EID, &sk, &ballot.code.enc_id, id_width(&spec),
        )
        .unwrap();
        assert_eq!(id, cred.id);
        let sig_wire = crate::group::rcca::decrypt_chunks(
            &spec,
            EID,
            &sk,
            &ballot.code.enc_sig,
            signature_wire_len(&spec),
        )
        .unwrap();
        let sig = signature_from_wire(&spec, &sig_wire).unwrap();
        let msg = ballot_signature_message(&cred.id, EID, None);
        assert!(verify_sig(&spec, &cred.signing.vk, &msg, &sig));
        let other_msg = ballot_signature_message(&cred.id, b"ELX-other", None);
        assert!(!verify_sig(&spec, &cred.signing.vk, &other_msg, &sig));

        for (printed, card_chunk) in ballot.code.chunks().zip(card.chunks()) {
            assert_ne!(printed.c1, card_chunk.c1);
            assert_ne!(printed.c2, card_chunk.c2);
        }

        ballot.fill_vote(2).unwrap();
        assert_eq!(ballot.fill_vote(1), Err(PollingError::VoteAlreadySet));
        let (tuple, rc) = scan_ballot(&spec, EID, &public.pk_t, 3, &ballot, &mut rng).unwrap();
        assert!(rc.is_valid());
        verify_tuple_proofs(&spec, EID, &public.pk_t, 3, &tuple).unwrap();

        // published chunks are re-encryptions: no component equality with
        // the printed ones (photograph defense)
        for (published, printed) in tuple
            .enc_id
            .iter()
            .chain(tuple.enc_sig.iter())
            .zip(ballot.code.chunks())
        {
            assert_ne!(published.c1, printed.c1);
            assert_ne!(published.c2, printed.c2);
        }

        // the element-wise code encryptions decrypt back to the printed
        // components
        let components = ballot.code.components();
        for (e, x) in tuple.enc_ballot_code.iter().zip(&components) {
            assert_eq!(crate::group::elgamal::decrypt(&spec, &sk, e), *x);
        }

        // published chunks still open under RCCA decryption post re-encryption
        let opened = rcca_decrypt_block(&spec, EID, &sk, &tuple.enc_id[0]).unwrap();
        assert_eq!(opened, cred.id);
    }

    #[test]
    fn mauled_card_output_rejected() {
        let mut rng = seeded_rng(b"seed", "maul");
        let (spec, public, _, creds) = setup(&mut rng);
        let mut card = card_issue(&spec, EID, &creds[0], &public.pk_t, None, &mut rng).unwrap();
        card.enc_id[0].c1.b = spec.mul(&card.enc_id[0].c1.b, spec.generator());
        assert!(matches!(
            print_ballot(&spec, EID, &public.pk_t, &card, &mut rng),
            Err(PollingError::InvalidCardOutput(_))
        ));
    }

    #[test]
    fn unfilled_ballot_rejected_and_rc_precedes_vote() {
        let mut rng = seeded_rng(b"seed", "rc-order");
        let (spec, public, _, creds) = setup(&mut rng);
        let card = card_issue(&spec, EID, &creds[0], &public.pk_t, None, &mut rng).unwrap();
        let ballot = print_ballot(&spec, EID, &public.pk_t, &card, &mut rng).unwrap();
        assert_eq!(
            scan_ballot(&spec, EID, &public.pk_t, 3, &ballot, &mut rng).unwrap_err(),
            PollingError::UnfilledBallot
        );

        // same rng stream, different votes: identical receipt code
        let mut b1 = ballot.clone();
        b1.fill_vote(1).unwrap();
        let mut b2 = ballot;
        b2.fill_vote(3).unwrap();
        let (_, rc1) =
            scan_ballot(&spec, EID, &public.pk_t, 3, &b1, &mut seeded_rng(b"scan", "x")).unwrap();
        let (_, rc2) =
            scan_ballot(&spec, EID, &public.pk_t, 3, &b2, &mut seeded_rng(b"scan", "x")).unwrap();
        assert_eq!(rc1, rc2);
    }

    #[test]
    fn damm_properties() {
        assert!(ReceiptCode::from_value(12345).is_valid());
        // all single-digit mutations break the check digit
        let rc = ReceiptCode::from_value(70914);
        for pos in 0..5 {
            for d in 0..10u8 {
                if d == rc.digits[pos] {
                    continue;
                }
                let mut bad = rc;
                bad.digits[pos] = d;
                assert!(!bad.is_valid());
            }
        }
        // adjacent transpositions detected
        let rc = ReceiptCode::from_value(38127);
        for pos in 0..4 {
            let mut bad = rc;
            bad.digits.swap(pos, pos + 1);
            if bad.digits == rc.digits {
                continue;
            }
            assert!(!bad.is_valid());
        }
        assert_eq!(ReceiptCode::parse(&rc.as_string()).unwrap(), rc);
        assert!(ReceiptCode::parse("123456").is_err() || ReceiptCode::from_value(12345).check == 6);
    }

    #[test]
    fn tra_gate_accepts_only_matching_code() {
        let mut rng = seeded_rng(b"seed", "gate");
        let (spec, public, shares, _) = setup(&mut rng);
        let quorum: Vec<&TellerShare> = shares.iter().take(2).collect();
        let ctx = FsContext::new(EID, "receipt-gate");

        let rc = ReceiptCode::from_value(48213);
        let enc_rc =
            crate::group::elgamal::encrypt_rand(&spec, &public.pk_t, &rc.encode(&spec), &mut rng).0;

        let gate = tra_gate(&spec, &public, &quorum, &rc, &enc_rc, &ctx, &mut rng).unwrap();
        assert!(gate.accepted);

        let wrong = ReceiptCode::from_value(48214);
        let gate = tra_gate(&spec, &public, &quorum, &wrong, &enc_rc, &ctx, &mut rng).unwrap();
        assert!(!gate.accepted);

        let mut invalid = rc;
        invalid.check = (invalid.check + 1) % 10;
        assert_eq!(
            tra_gate(&spec, &public, &quorum, &invalid, &enc_rc, &ctx, &mut rng).unwrap_err(),
            PollingError::CheckDigitInvalid
        );
    }

    #[test]
    fn tra_share_assembly_and_suppression() {
        let mut rng = seeded_rng(b"seed", "tra");
        let (spec, public, _, creds) = setup(&mut rng);
        let ctx = FsContext::new(EID, "commitment-setup");
        let voter_pks: Vec<GroupElement> = creds.iter().map(|c| c.trapdoor.pk.clone()).collect();

        let mut tra = TraState::new();
        let mut expected = vec![spec.identity(); creds.len()];
        for k in 1..=public.n {
            let (records, _) = crate::tellers::contribute_alpha_factors(
                &spec, k, &public.pk_t, &voter_pks, &ctx, &mut rng,
            );
            for r in records {
                expected[r.voter_index] = spec.mul(&expected[r.voter_index], &r.g_exp_share);
                tra.receive_share(&spec, &voter_pks[r.voter_index], r, &ctx).unwrap();
            }
        }
        let alpha = tra.notify(&spec, public.n, 0).unwrap().unwrap();
        assert_eq!(alpha.alpha, expected[0]);

        tra.suppress(1);
        assert_eq!(tra.notify(&spec, public.n, 1).unwrap(), None);

        // a missing teller share is an error, not a silent partial product
        let mut partial = TraState::new();
        let (records, _) = crate::tellers::contribute_alpha_factors(
            &spec, 1, &public.pk_t, &voter_pks, &ctx, &mut rng,
        );
        for r in records {
            partial.receive_share(&spec, &voter_pks[r.voter_index], r, &ctx).unwrap();
        }
        assert_eq!(
            partial.notify(&spec, public.n, 0).unwrap_err(),
            PollingError::MissingShare(2)
        );
    }

    #[test]
    fn qr_budget_holds_on_both_backends() {
        for spec in [GroupSpec::test_group(), GroupSpec::prod_group()] {
            let mut rng = seeded_rng(b"seed", "qr");
            let (public, _) = dkg(&spec, 1, 1, &mut rng).unwrap();
            let creds = make_credentials(&spec, 1, &mut rng);
            let card = card_issue(&spec, EID, &creds[0], &public.pk_t, None, &mut rng).unwrap();
            let ballot = print_ballot(&spec, EID, &public.pk_t, &card, &mut rng).unwrap();
            let check = qr_capacity_check(&spec, &ballot.code);
            assert!(check.fits_v6_per_component, "{check:?}");
            assert!(check.fits_v10_total, "{check:?}");
            assert_eq!(check.total_bits, ballot.code.wire_bits(&spec));
        }
    }

    #[test]
    fn optional_signature_fields_behind_flag() {
        let mut rng = seeded_rng(b"seed", "extra");
        let (spec, public, shares, creds) = setup(&mut rng);
        let sk = full_key(&spec, &shares, public.t);
        let card = card_issue(
            &spec,
            EID,
            &creds[0],
            &public.pk_t,
            Some(("2026-08-09", "printer-2")),
            &mut rng,
        )
        .unwrap();
        let sig_wire = crate::group::rcca::decrypt_chunks(
            &spec, EID, &sk, &card.enc_sig, signature_wire_len(&spec),
        )
        .unwrap();
        let sig = signature_from_wire(&spec, &sig_wire).unwrap();
        let msg = ballot_signature_message(&creds[0].id, EID, Some(("2026-08-09", "printer-2")));
        assert!(verify_sig(&spec, &creds[0].signing.vk, &msg, &sig));
        let plain = ballot_signature_message(&creds[0].id, EID, None);
        assert!(!verify_sig(&spec, &creds[0].signing.vk, &plain, &sig));
    }
}
