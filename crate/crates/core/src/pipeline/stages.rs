//! Pure helpers for the two mix/decrypt stages: batch layouts, row
//! packing/unpacking, and the threshold opening of mixed identity data.

use crate::group::elgamal::Ciphertext;
use crate::group::rcca::{open_blocks, RccaCiphertext};
use crate::group::{GroupElement, GroupSpec};
use crate::mixnet::{MixSlot, SlotKind};
use crate::pipeline::PipelineError;
use crate::polling::{ballot_code_chunk_counts, ScannerTuple};
use crate::tellers::{combine_decrypt, DecryptShare, TellerPublic};
use crate::zkp::fs::FsContext;

/// Slot layout of a stage-1 row: the re-encrypted id and signature chunks,
/// the element-wise ballot-code encryptions, the vote and the receipt
/// code.
pub fn stage1_slot_kinds(spec: &GroupSpec) -> Vec<SlotKind> {
    let (idc, sigc) = ballot_code_chunk_counts(spec);
    let mut kinds = vec![SlotKind::Rcca; idc + sigc];
    kinds.extend(vec![SlotKind::ElGamal; 4 * (idc + sigc)]);
    kinds.push(SlotKind::ElGamal); // vote
    kinds.push(SlotKind::ElGamal); // receipt code
    kinds
}

pub fn stage1_row(spec: &GroupSpec, tuple: &ScannerTuple) -> Result<Vec<MixSlot>, PipelineError> {
    let (idc, sigc) = ballot_code_chunk_counts(spec);
    if tuple.enc_id.len() != idc
        || tuple.enc_sig.len() != sigc
        || tuple.enc_ballot_code.len() != 4 * (idc + sigc)
    {
        return Err(PipelineError::BadConfig("tuple arity does not match group".into()));
    }
    let mut row = Vec::new();
    for c in tuple.enc_id.iter().chain(tuple.enc_sig.iter()) {
        row.push(MixSlot::Rcca(c.clone()));
    }
    for c in &tuple.enc_ballot_code {
        row.push(MixSlot::ElGamal(c.clone()));
    }
    row.push(MixSlot::ElGamal(tuple.enc_vote.clone()));
    row.push(MixSlot::ElGamal(tuple.enc_rc.clone()));
    Ok(row)
}

/// A stage-1 output row split back into its parts.
#[derive(Debug, Clone)]
pub struct Stage1Parts {
    pub id_chunks: Vec<RccaCiphertext>,
    pub sig_chunks: Vec<RccaCiphertext>,
    pub enc_ballot_code: Vec<Ciphertext>,
    pub enc_vote: Ciphertext,
    pub enc_rc: Ciphertext,
}

pub fn split_stage1_row(spec: &GroupSpec, row: &[MixSlot]) -> Result<Stage1Parts, PipelineError> {
    let (idc, sigc) = ballot_code_chunk_counts(spec);
    let expect = stage1_slot_kinds(spec).len();
    if row.len() != expect {
        return Err(PipelineError::BadConfig("stage-1 row arity".into()));
    }
    let rcca = |s: &MixSlot| match s {
        MixSlot::Rcca(c) => Ok(c.clone()),
        _ => Err(PipelineError::BadConfig("expected rcca slot".into())),
    };
    let eg = |s: &MixSlot| match s {
        MixSlot::ElGamal(c) => Ok(c.clone()),
        _ => Err(PipelineError::BadConfig("expected elgamal slot".into())),
    };
    let id_chunks = row[..idc].iter().map(&rcca).collect::<Result<_, _>>()?;
    let sig_chunks = row[idc..idc + sigc].iter().map(&rcca).collect::<Result<_, _>>()?;
    let code_start = idc + sigc;
    let code_end = code_start + 4 * (idc + sigc);
    let enc_ballot_code = row[code_start..code_end]
        .iter()
        .map(&eg)
        .collect::<Result<_, _>>()?;
    Ok(Stage1Parts {
        id_chunks,
        sig_chunks,
        enc_ballot_code,
        enc_vote: eg(&row[code_end])?,
        enc_rc: eg(&row[code_end + 1])?,
    })
}

/// The ElGamal pairs of a row that carry identity data (id chunks then
/// signature chunks, two pairs per chunk).
pub fn identity_pairs(parts: &Stage1Parts) -> Vec<Ciphertext> {
    parts
        .id_chunks
        .iter()
        .chain(parts.sig_chunks.iter())
        .flat_map(|c| [c.c1.clone(), c.c2.clone()])
        .collect()
}

/// Combines published decryption shares for each identity pair into
/// plaintext elements, verifying every share proof.
pub fn combine_identity_pairs(
    spec: &GroupSpec,
    tellers: &TellerPublic,
    pairs: &[Ciphertext],
    pair_shares: &[Vec<DecryptShare>],
    ctx: &FsContext,
) -> Result<Vec<GroupElement>, PipelineError> {
    if pairs.len() != pair_shares.len() {
        return Err(PipelineError::BadConfig("decrypt share arity".into()));
    }
    pairs
        .iter()
        .zip(pair_shares)
        .map(|(c, shares)| Ok(combine_decrypt(spec, tellers, c, shares, ctx)?))
        .collect()
}

/// Opens the decrypted identity elements back into (id, signature wire)
/// bytes. Fails if any chunk rejects the padding.
pub fn open_identity(
    spec: &GroupSpec,
    election_id: &[u8],
    elements: &[GroupElement],
    id_len: usize,
    sig_len: usize,
) -> Result<(Vec<u8>, Vec<u8>), PipelineError> {
    let (idc, sigc) = ballot_code_chunk_counts(spec);
    if elements.len() != 2 * (idc + sigc) {
        return Err(PipelineError::BadConfig("identity element arity".into()));
    }
    let mut bytes = Vec::new();
    for chunk in 0..(idc + sigc) {
        let e1 = &elements[2 * chunk];
        let e2 = &elements[2 * chunk + 1];
        bytes.push(open_blocks(spec, election_id, e1, e2)?);
    }
    let mut id: Vec<u8> = bytes[..idc].concat();
    id.truncate(id_len);
    let mut sig: Vec<u8> = bytes[idc..].concat();
    sig.truncate(sig_len);
    Ok((id, sig))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::schnorr::signature_wire_len;
    use crate::group::seeded_rng;
    use crate::polling::{card_issue, id_width, make_credentials, print_ballot, scan_ballot};
    use crate::tellers::{dkg, partial_decrypt};

    const EID: &[u8] = b"ELX-stages";

    #[test]
    fn row_round_trip_and_identity_opening() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "stages");
        let (public, shares) = dkg(&spec, 3, 2, &mut rng).unwrap();
        let creds = make_credentials(&spec, 2, &mut rng);

        let card = card_issue(&spec, EID, &creds[0], &public.pk_t, None, &mut rng).unwrap();
        let mut ballot = print_ballot(&spec, EID, &public.pk_t, &card, &mut rng).unwrap();
        ballot.fill_vote(1).unwrap();
        let (tuple, _) = scan_ballot(&spec, EID, &public.pk_t, 2, &ballot, &mut rng).unwrap();

        let row = stage1_row(&spec, &tuple).unwrap();
        assert_eq!(row.len(), stage1_slot_kinds(&spec).len());
        let parts = split_stage1_row(&spec, &row).unwrap();
        assert_eq!(parts.enc_vote, tuple.enc_vote);

        let pairs = identity_pairs(&parts);
        let ctx = FsContext::new(EID, "stage1-decrypt");
        let pair_shares: Vec<Vec<DecryptShare>> = pairs
            .iter()
            .map(|c| {
                shares
                    .iter()
                    .take(2)
                    .map(|s| partial_decrypt(&spec, s, c, &ctx, &mut rng))
                    .collect()
            })
            .collect();
        let elements =
            combine_identity_pairs(&spec, &public, &pairs, &pair_shares, &ctx).unwrap();
        let (id, sig) = open_identity(
            &spec,
            EID,
            &elements,
            id_width(&spec),
            signature_wire_len(&spec),
        )
        .unwrap();
        assert_eq!(id, creds[0].id);
        assert_eq!(sig.len(), signature_wire_len(&spec));
    }
}
