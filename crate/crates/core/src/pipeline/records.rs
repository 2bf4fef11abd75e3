//! Typed bulletin-board payloads. Every entry on the board is the
//! canonical encoding of one of these records; the universal verifier
//! parses them back and recomputes everything that is recomputable.

use crate::codec::{put_bytes, put_str, put_u32, put_u64, read_str, Canon, CodecError, Reader};
use crate::group::elgamal::Ciphertext;
use crate::mixnet::{MixBatch, MixStage};
use crate::selene::{TrackerSet, VoterRow};
use crate::tellers::{CommitFactorPosting, DecryptShare, TellerPublic};
use crate::zkp::pet::PetShare;

/// Public election parameters, first entry on the board.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamsRecord {
    pub election_id: Vec<u8>,
    pub group_name: String,
    pub candidates: Vec<String>,
    pub voter_count: u32,
    pub teller_count: u32,
    pub teller_threshold: u32,
    pub mix_servers: u32,
    /// Optional (date, printer id) context included in ballot signatures.
    pub signature_context: Option<(String, String)>,
}

impl Canon for ParamsRecord {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_bytes(out, &self.election_id);
        put_str(out, &self.group_name);
        put_u32(out, self.candidates.len() as u32);
        for c in &self.candidates {
            put_str(out, c);
        }
        put_u32(out, self.voter_count);
        put_u32(out, self.teller_count);
        put_u32(out, self.teller_threshold);
        put_u32(out, self.mix_servers);
        match &self.signature_context {
            Some((d, p)) => {
                out.push(1);
                put_str(out, d);
                put_str(out, p);
            }
            None => out.push(0),
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let election_id = r.bytes()?;
        let group_name = read_str(r)?;
        let n = r.u32()? as usize;
        let mut candidates = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            candidates.push(read_str(r)?);
        }
        let voter_count = r.u32()?;
        let teller_count = r.u32()?;
        let teller_threshold = r.u32()?;
        let mix_servers = r.u32()?;
        let signature_context = match r.u8()? {
            1 => Some((read_str(r)?, read_str(r)?)),
            _ => None,
        };
        Ok(ParamsRecord {
            election_id,
            group_name,
            candidates,
            voter_count,
            teller_count,
            teller_threshold,
            mix_servers,
            signature_context,
        })
    }
}

/// Reasons a cast row is excluded from the count, always logged publicly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlagReason {
    InvalidTupleProof,
    BadDecryption,
    NotOnRoll,
    BadSignature,
    DuplicateId,
}

impl Canon for FlagReason {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(match self {
            FlagReason::InvalidTupleProof => 0,
            FlagReason::BadDecryption => 1,
            FlagReason::NotOnRoll => 2,
            FlagReason::BadSignature => 3,
            FlagReason::DuplicateId => 4,
        });
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(match r.u8()? {
            0 => FlagReason::InvalidTupleProof,
            1 => FlagReason::BadDecryption,
            2 => FlagReason::NotOnRoll,
            3 => FlagReason::BadSignature,
            4 => FlagReason::DuplicateId,
            _ => return Err(CodecError::Malformed("unknown flag reason")),
        })
    }
}

/// Exclusion record: `pre_mix` rows index the cast list, post-mix rows
/// index the stage-1 output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlagRecord {
    pub pre_mix: bool,
    pub row_index: u32,
    pub reason: FlagReason,
}

/// Post-eligibility row: identity revealed, vote and receipt code still
/// encrypted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EligibleRow {
    pub row_index: u32,
    pub id: Vec<u8>,
    pub sig_wire: Vec<u8>,
    pub enc_ballot_code: Vec<Ciphertext>,
    pub enc_vote: Ciphertext,
    pub enc_rc: Ciphertext,
}

impl Canon for EligibleRow {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_u32(out, self.row_index);
        put_bytes(out, &self.id);
        put_bytes(out, &self.sig_wire);
        self.enc_ballot_code.encode_into(out);
        self.enc_vote.encode_into(out);
        self.enc_rc.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(EligibleRow {
            row_index: r.u32()?,
            id: r.bytes()?,
            sig_wire: r.bytes()?,
            enc_ballot_code: Vec::<Ciphertext>::decode(r)?,
            enc_vote: Ciphertext::decode(r)?,
            enc_rc: Ciphertext::decode(r)?,
        })
    }
}

fn put_shares_matrix(out: &mut Vec<u8>, m: &[Vec<DecryptShare>]) {
    put_u32(out, m.len() as u32);
    for shares in m {
        shares.encode_into(out);
    }
}

fn read_shares_matrix(r: &mut Reader<'_>) -> Result<Vec<Vec<DecryptShare>>, CodecError> {
    let n = r.u32()? as usize;
    let mut m = Vec::with_capacity(n.min(4096));
    for _ in 0..n {
        m.push(Vec::<DecryptShare>::decode(r)?);
    }
    Ok(m)
}

/// Everything that can appear as a bulletin-board payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Params(ParamsRecord),
    TellerKey(TellerPublic),
    /// Eligibility roll: (id, verification key, trapdoor public key).
    Roll(Vec<(Vec<u8>, crate::group::GroupElement, crate::group::GroupElement)>),
    TrackerList(TrackerSet),
    TrackerMixStage(MixStage),
    CommitFactor(CommitFactorPosting),
    /// Verifiable decryption of one voter's combined commitment ciphertext.
    CommitDecrypt { voter_index: u32, shares: Vec<DecryptShare> },
    VoterRow(VoterRow),
    CastTuple(crate::polling::ScannerTuple),
    Stage1Input(MixBatch),
    Stage1MixStage(MixStage),
    /// Threshold decryption shares for the id/sig element pairs of one
    /// mixed row, in flattening order (id chunks then sig chunks, two
    /// pairs each).
    Stage1RowDecrypt { row_index: u32, pair_shares: Vec<Vec<DecryptShare>> },
    Flag(FlagRecord),
    Eligible(EligibleRow),
    Stage2Input(MixBatch),
    Stage2MixStage(MixStage),
    TallyRowDecrypt {
        row_index: u32,
        tracker_shares: Vec<DecryptShare>,
        vote_shares: Vec<DecryptShare>,
    },
    TallyRow { row_index: u32, tracker: u64, vote: u32 },
    /// Receipt-code gate evidence for one voter.
    ReceiptGate {
        voter_index: u32,
        accepted: bool,
        fresh_enc: Ciphertext,
        pet_shares: Vec<PetShare>,
        decrypt_shares: Vec<DecryptShare>,
    },
    /// In-camera audit decryption evidence (no plaintext identities).
    AuditDecrypt { label: String, ciphertext: Ciphertext, shares: Vec<DecryptShare> },
    /// Audit outcome summary.
    AuditNote { label: String, detail: String },
}

impl Canon for Record {
    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Record::Params(p) => {
                out.push(0);
                p.encode_into(out);
            }
            Record::TellerKey(t) => {
                out.push(1);
                t.encode_into(out);
            }
            Record::Roll(entries) => {
                out.push(2);
                put_u32(out, entries.len() as u32);
                for (id, vk, pk) in entries {
                    put_bytes(out, id);
                    vk.encode_into(out);
                    pk.encode_into(out);
                }
            }
            Record::TrackerList(t) => {
                out.push(3);
                t.encode_into(out);
            }
            Record::TrackerMixStage(s) => {
                out.push(4);
                s.encode_into(out);
            }
            Record::CommitFactor(p) => {
                out.push(5);
                p.encode_into(out);
            }
            Record::CommitDecrypt { voter_index, shares } => {
                out.push(6);
                put_u32(out, *voter_index);
                shares.encode_into(out);
            }
            Record::VoterRow(v) => {
                out.push(7);
                v.encode_into(out);
            }
            Record::CastTuple(t) => {
                out.push(8);
                t.encode_into(out);
            }
            Record::Stage1Input(b) => {
                out.push(9);
                b.encode_into(out);
            }
            Record::Stage1MixStage(s) => {
                out.push(10);
                s.encode_into(out);
            }
            Record::Stage1RowDecrypt { row_index, pair_shares } => {
                out.push(11);
                put_u32(out, *row_index);
                put_shares_matrix(out, pair_shares);
            }
            Record::Flag(f) => {
                out.push(12);
                out.push(f.pre_mix as u8);
                put_u32(out, f.row_index);
                f.reason.encode_into(out);
            }
            Record::Eligible(e) => {
                out.push(13);
                e.encode_into(out);
            }
            Record::Stage2Input(b) => {
                out.push(14);
                b.encode_into(out);
            }
            Record::Stage2MixStage(s) => {
                out.push(15);
                s.encode_into(out);
            }
            Record::TallyRowDecrypt { row_index, tracker_shares, vote_shares } => {
                out.push(16);
                put_u32(out, *row_index);
                tracker_shares.encode_into(out);
                vote_shares.encode_into(out);
            }
            Record::TallyRow { row_index, tracker, vote } => {
                out.push(17);
                put_u32(out, *row_index);
                put_u64(out, *tracker);
                put_u32(out, *vote);
            }
            Record::ReceiptGate { voter_index, accepted, fresh_enc, pet_shares, decrypt_shares } => {
                out.push(18);
                put_u32(out, *voter_index);
                out.push(*accepted as u8);
                fresh_enc.encode_into(out);
                pet_shares.encode_into(out);
                decrypt_shares.encode_into(out);
            }
            Record::AuditDecrypt { label, ciphertext, shares } => {
                out.push(19);
                put_str(out, label);
                ciphertext.encode_into(out);
                shares.encode_into(out);
            }
            Record::AuditNote { label, detail } => {
                out.push(20);
                put_str(out, label);
                put_str(out, detail);
            }
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(match r.u8()? {
            0 => Record::Params(ParamsRecord::decode(r)?),
            1 => Record::TellerKey(TellerPublic::decode(r)?),
            2 => {
                let n = r.u32()? as usize;
                let mut entries = Vec::with_capacity(n.min(65536));
                for _ in 0..n {
                    entries.push((
                        r.bytes()?,
                        crate::group::GroupElement::decode(r)?,
                        crate::group::GroupElement::decode(r)?,
                    ));
                }
                Record::Roll(entries)
            }
            3 => Record::TrackerList(TrackerSet::decode(r)?),
            4 => Record::TrackerMixStage(MixStage::decode(r)?),
            5 => Record::CommitFactor(CommitFactorPosting::decode(r)?),
            6 => Record::CommitDecrypt {
                voter_index: r.u32()?,
                shares: Vec::<DecryptShare>::decode(r)?,
            },
            7 => Record::VoterRow(VoterRow::decode(r)?),
            8 => Record::CastTuple(crate::polling::ScannerTuple::decode(r)?),
            9 => Record::Stage1Input(MixBatch::decode(r)?),
            10 => Record::Stage1MixStage(MixStage::decode(r)?),
            11 => Record::Stage1RowDecrypt {
                row_index: r.u32()?,
                pair_shares: read_shares_matrix(r)?,
            },
            12 => Record::Flag(FlagRecord {
                pre_mix: r.u8()? == 1,
                row_index: r.u32()?,
                reason: FlagReason::decode(r)?,
            }),
            13 => Record::Eligible(EligibleRow::decode(r)?),
            14 => Record::Stage2Input(MixBatch::decode(r)?),
            15 => Record::Stage2MixStage(MixStage::decode(r)?),
            16 => Record::TallyRowDecrypt {
                row_index: r.u32()?,
                tracker_shares: Vec::<DecryptShare>::decode(r)?,
                vote_shares: Vec::<DecryptShare>::decode(r)?,
            },
            17 => Record::TallyRow {
                row_index: r.u32()?,
                tracker: r.u64()?,
                vote: r.u32()?,
            },
            18 => Record::ReceiptGate {
                voter_index: r.u32()?,
                accepted: r.u8()? == 1,
                fresh_enc: Ciphertext::decode(r)?,
                pet_shares: Vec::<PetShare>::decode(r)?,
                decrypt_shares: Vec::<DecryptShare>::decode(r)?,
            },
            19 => Record::AuditDecrypt {
                label: read_str(r)?,
                ciphertext: Ciphertext::decode(r)?,
                shares: Vec::<DecryptShare>::decode(r)?,
            },
            20 => Record::AuditNote {
                label: read_str(r)?,
                detail: read_str(r)?,
            },
            _ => return Err(CodecError::Malformed("unknown record tag")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trips() {
        let params = Record::Params(ParamsRecord {
            election_id: b"ELX-x".to_vec(),
            group_name: "qr-safe-prime-18".into(),
            candidates: vec!["a".into(), "b".into()],
            voter_count: 25,
            teller_count: 3,
            teller_threshold: 2,
            mix_servers: 3,
            signature_context: None,
        });
        assert_eq!(Record::decode_all(&params.encode()).unwrap(), params);

        let row = Record::TallyRow { row_index: 4, tracker: 17, vote: 2 };
        assert_eq!(Record::decode_all(&row.encode()).unwrap(), row);

        let note = Record::AuditNote { label: "rla".into(), detail: "0 mismatches".into() };
        assert_eq!(Record::decode_all(&note.encode()).unwrap(), note);

        assert!(Record::decode_all(&[99]).is_err());
    }
}
