//! Append-only, hash-chained, phase-sectioned bulletin board.
//!
//! Every entry hashes its predecessor, so any mutation, deletion or
//! reordering of committed entries breaks the chain. Phases must open in
//! protocol order; once a later phase has an entry, earlier phases are
//! closed. The serialized entry list is the transcript every verifier and
//! auditor consumes.

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::{put_bytes, put_str, put_u32, put_u64, read_str, Canon, CodecError, Reader};


#[derive(Debug, Error, PartialEq, Eq)]
pub enum BbError {
    #[error("phase {attempted:?} violates the order: board is already in {current:?}")]
    PhaseOrderViolation { current: Phase, attempted: Phase },
    #[error("chain broken at entry {0}")]
    ChainBroken(u64),
    #[error("transcript malformed: {0}")]
    Malformed(String),
}

/// Protocol phases in their mandatory order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Setup,
    PreVote,
    CastBallots,
    MixIdSig,
    EligibleBallots,
    MixTrackerVote,
    TallyBoard,
    PetLog,
    AuditLog,
}

impl Phase {
    pub const ALL: [Phase; 9] = [
        Phase::Setup,
        Phase::PreVote,
        Phase::CastBallots,
        Phase::MixIdSig,
        Phase::EligibleBallots,
        Phase::MixTrackerVote,
        Phase::TallyBoard,
        Phase::PetLog,
        Phase::AuditLog,
    ];

    fn tag(self) -> u8 {
        Phase::ALL.iter().position(|p| *p == self).unwrap() as u8
    }

    fn from_tag(tag: u8) -> Option<Phase> {
        Phase::ALL.get(tag as usize).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Phase::Setup => "setup",
            Phase::PreVote => "pre-vote",
            Phase::CastBallots => "cast-ballots",
            Phase::MixIdSig => "mix-id-sig",
            Phase::EligibleBallots => "eligible-ballots",
            Phase::MixTrackerVote => "mix-tracker-vote",
            Phase::TallyBoard => "tally-board",
            Phase::PetLog => "pet-log",
            Phase::AuditLog => "audit-log",
        }
    }
}

pub type Digest32 = [u8; 32];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BbEntry {
    pub seq: u64,
    pub phase: Phase,
    pub author: String,
    pub payload: Vec<u8>,
    pub prev_hash: Digest32,
    pub entry_hash: Digest32,
}

impl Canon for BbEntry {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_u64(out, self.seq);
        out.push(self.phase.tag());
        put_str(out, &self.author);
        put_bytes(out, &self.payload);
        out.extend_from_slice(&self.prev_hash);
        out.extend_from_slice(&self.entry_hash);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let seq = r.u64()?;
        let phase = Phase::from_tag(r.u8()?).ok_or(CodecError::Malformed("unknown phase tag"))?;
        let author = read_str(r)?;
        let payload = r.bytes()?;
        let mut prev_hash = [0u8; 32];
        prev_hash.copy_from_slice(r.take(32)?);
        let mut entry_hash = [0u8; 32];
        entry_hash.copy_from_slice(r.take(32)?);
        Ok(BbEntry { seq, phase, author, payload, prev_hash, entry_hash })
    }
}

fn hash_entry(prev: &Digest32, seq: u64, phase: Phase, author: &str, payload: &[u8]) -> Digest32 {
    let mut h = Sha256::new();
    h.update(b"electryo-bb-entry");
    h.update(prev);
    h.update(seq.to_be_bytes());
    h.update([phase.tag()]);
    h.update((author.len() as u32).to_be_bytes());
    h.update(author.as_bytes());
    h.update((payload.len() as u32).to_be_bytes());
    h.update(payload);
    let mut out = [0u8; 32];
    out.copy_from_slice(&h.finalize());
    out
}

/// Verifiable head pointer for consistent-view checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BbSnapshot {
    pub head_hash: Digest32,
    pub length: u64,
}

#[derive(Debug, Clone, Default)]
pub struct BulletinBoard {
    entries: Vec<BbEntry>,
}

impl BulletinBoard {
    pub fn new() -> Self {
        BulletinBoard { entries: Vec::new() }
    }

    pub fn current_phase(&self) -> Option<Phase> {
        self.entries.last().map(|e| e.phase)
    }

    /// Appends under the phase-ordering rule: once an entry for a later
    /// phase exists, earlier phases reject appends.
    pub fn append(
        &mut self,
        phase: Phase,
        author: &str,
        payload: Vec<u8>,
    ) -> Result<&BbEntry, BbError> {
        if let Some(current) = self.current_phase() {
            if phase < current {
                return Err(BbError::PhaseOrderViolation { current, attempted: phase });
            }
        }
        let seq = self.entries.len() as u64;
        let prev_hash = self
            .entries
            .last()
            .map(|e| e.entry_hash)
            .unwrap_or([0u8; 32]);
        let entry_hash = hash_entry(&prev_hash, seq, phase, author, &payload);
        self.entries.push(BbEntry {
            seq,
            phase,
            author: author.to_string(),
            payload,
            prev_hash,
            entry_hash,
        });
        Ok(self.entries.last().unwrap())
    }

    pub fn entries(&self) -> &[BbEntry] {
        &self.entries
    }

    pub fn snapshot(&self) -> BbSnapshot {
        BbSnapshot {
            head_hash: self
                .entries
                .last()
                .map(|e| e.entry_hash)
                .unwrap_or([0u8; 32]),
            length: self.entries.len() as u64,
        }
    }

    pub fn read_phase(&self, phase: Phase) -> Vec<&BbEntry> {
        self.entries.iter().filter(|e| e.phase == phase).collect()
    }

    pub fn into_transcript(self) -> Transcript {
        Transcript { entries: self.entries }
    }

    /// Rebuilds a board from a stored transcript, verifying the chain.
    pub fn from_transcript(t: Transcript) -> Result<Self, BbError> {
        verify_chain(&t.entries)?;
        Ok(BulletinBoard { entries: t.entries })
    }
}

/// Checks sequence numbering, hash linkage and phase monotonicity of a
/// full read; returns the first bad index on failure.
pub fn verify_chain(entries: &[BbEntry]) -> Result<(), BbError> {
    let mut prev = [0u8; 32];
    let mut phase_floor = Phase::Setup;
    for (i, e) in entries.iter().enumerate() {
        let expect = hash_entry(&prev, e.seq, e.phase, &e.author, &e.payload);
        if e.seq != i as u64 || e.prev_hash != prev || e.entry_hash != expect || e.phase < phase_floor
        {
            return Err(BbError::ChainBroken(i as u64));
        }
        phase_floor = e.phase;
        prev = e.entry_hash;
    }
    Ok(())
}

const TRANSCRIPT_MAGIC: &[u8; 4] = b"ELTR";
const TRANSCRIPT_VERSION: u16 = 1;

/// A full bulletin-board read: the file format every external tool
/// consumes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub entries: Vec<BbEntry>,
}

impl Transcript {
    pub fn verify_chain(&self) -> Result<(), BbError> {
        verify_chain(&self.entries)
    }

    pub fn snapshot(&self) -> BbSnapshot {
        BbSnapshot {
            head_hash: self
                .entries
                .last()
                .map(|e| e.entry_hash)
                .unwrap_or([0u8; 32]),
            length: self.entries.len() as u64,
        }
    }

    pub fn read_phase(&self, phase: Phase) -> Vec<&BbEntry> {
        self.entries.iter().filter(|e| e.phase == phase).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(TRANSCRIPT_MAGIC);
        crate::codec::put_u16(&mut out, TRANSCRIPT_VERSION);
        put_u32(&mut out, self.entries.len() as u32);
        for e in &self.entries {
            e.encode_into(&mut out);
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, BbError> {
        let mut r = Reader::new(buf);
        let magic = r
            .take(4)
            .map_err(|e| BbError::Malformed(e.to_string()))?;
        if magic != TRANSCRIPT_MAGIC {
            return Err(BbError::Malformed("bad magic".into()));
        }
        let version = r.u16().map_err(|e| BbError::Malformed(e.to_string()))?;
        if version != TRANSCRIPT_VERSION {
            return Err(BbError::Malformed(format!("unsupported version {version}")));
        }
        let n = r.u32().map_err(|e| BbError::Malformed(e.to_string()))? as usize;
        let mut entries = Vec::with_capacity(n.min(65536));
        for _ in 0..n {
            entries.push(BbEntry::decode(&mut r).map_err(|e| BbError::Malformed(e.to_string()))?);
        }
        r.finish().map_err(|e| BbError::Malformed(e.to_string()))?;
        Ok(Transcript { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn board_with(n: usize) -> BulletinBoard {
        let mut bb = BulletinBoard::new();
        for i in 0..n {
            bb.append(Phase::Setup, "EA", format!("entry-{i}").into_bytes())
                .unwrap();
        }
        bb
    }

    #[test]
    fn first_entry_has_zero_prev_hash() {
        let bb = board_with(1);
        assert_eq!(bb.entries()[0].prev_hash, [0u8; 32]);
    }

    #[test]
    fn phase_order_enforced() {
        let mut bb = BulletinBoard::new();
        bb.append(Phase::CastBallots, "SCAN", vec![1]).unwrap();
        bb.append(Phase::MixIdSig, "MIX1", vec![2]).unwrap();
        let err = bb.append(Phase::CastBallots, "SCAN", vec![3]).unwrap_err();
        assert_eq!(
            err,
            BbError::PhaseOrderViolation {
                current: Phase::MixIdSig,
                attempted: Phase::CastBallots
            }
        );
        // same phase continues to accept
        bb.append(Phase::MixIdSig, "MIX2", vec![4]).unwrap();
    }

    #[test]
    fn long_chain_verifies() {
        let bb = board_with(1000);
        verify_chain(bb.entries()).unwrap();
        assert_eq!(bb.snapshot().length, 1000);
    }

    #[test]
    fn payload_mutation_detected_at_index() {
        let bb = board_with(10);
        let mut entries = bb.entries().to_vec();
        entries[5].payload[0] ^= 1;
        assert_eq!(verify_chain(&entries), Err(BbError::ChainBroken(5)));
    }

    #[test]
    fn reorder_detected() {
        let bb = board_with(10);
        let mut entries = bb.entries().to_vec();
        entries.swap(3, 4);
        assert!(matches!(verify_chain(&entries), Err(BbError::ChainBroken(3))));
    }

    #[test]
    fn deletion_detected() {
        let bb = board_with(10);
        let mut entries = bb.entries().to_vec();
        entries.remove(2);
        assert!(matches!(verify_chain(&entries), Err(BbError::ChainBroken(2))));
    }

    #[test]
    fn snapshot_matches_recomputation() {
        let bb = board_with(25);
        let snap = bb.snapshot();
        assert_eq!(snap.head_hash, bb.entries().last().unwrap().entry_hash);
        let order: Vec<u64> = bb.read_phase(Phase::Setup).iter().map(|e| e.seq).collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn transcript_file_round_trip() {
        let bb = board_with(7);
        let t = bb.into_transcript();
        let bytes = t.to_bytes();
        let back = Transcript::from_bytes(&bytes).unwrap();
        assert_eq!(back, t);
        back.verify_chain().unwrap();

        assert!(Transcript::from_bytes(b"nope").is_err());
        let mut corrupt = bytes;
        let last = corrupt.len() - 1;
        corrupt[last] ^= 1;
        let t2 = Transcript::from_bytes(&corrupt).unwrap();
        assert!(t2.verify_chain().is_err());
    }
}
