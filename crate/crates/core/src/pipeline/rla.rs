//! Comparison risk-limiting audits between the electronic and paper
//! records, in both directions.
//!
//! Bulletin-board-to-paper: sample rows, decrypt their ballot-code
//! component encryptions in camera, locate the paper ballot with that
//! printed code and compare votes. Paper-to-board: lift the candidate
//! component encryptions (and a trivial encryption of the paper's own
//! component) to a secret power homomorphically, decrypt the blinded
//! values and match on equality, so the identity inside the code is never
//! revealed in plain.

use rand::RngCore;

use crate::bb::Phase;
use crate::codec::Canon;
use crate::group::elgamal::{ct_pow, Ciphertext};
use crate::group::rcca::compute_binding;
use crate::group::{GroupElement, GroupSpec};
use crate::pipeline::records::Record;
use crate::pipeline::run::ElectionState;
use crate::pipeline::PipelineError;
use crate::polling::{BallotCode, PaperBallot};
use crate::tellers::{partial_decrypt, DecryptShare, TellerShare};
use crate::zkp::dleq::prove_same_exponent;
use crate::zkp::fs::FsContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditDirection {
    BbToPaper,
    PaperToBb,
}

/// Outcome of one audit run.
#[derive(Debug, Clone)]
pub struct AuditRecordData {
    pub direction: AuditDirection,
    /// Sampled eligible-row indices (board-to-paper direction).
    pub sampled: Vec<usize>,
    /// Sampled indices where the comparison failed; a missing paper
    /// ballot counts as a mismatch.
    pub mismatches: Vec<usize>,
    pub notes: String,
}

impl AuditRecordData {
    pub fn detected(&self) -> bool {
        !self.mismatches.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PaperMatch {
    /// Exactly one electronic record matches (eligible-row position).
    Match(usize),
    /// No electronic record: evidence of a lost or never-published tuple.
    NoMatch,
    /// Duplicate evidence.
    MultiMatch(Vec<usize>),
}

/// Threshold decryption by the teller quorum, optionally logged to the
/// audit section of the board. The plaintext itself is never posted.
pub(crate) fn audit_decrypt(
    state: &mut ElectionState,
    c: &Ciphertext,
    label: &str,
    log: bool,
) -> Result<GroupElement, PipelineError> {
    let ctx = FsContext::new(state.election_id(), "audit-decrypt");
    let mut rng = state.rng(&format!("audit-{label}"));
    let quorum: Vec<TellerShare> = state
        .teller_shares
        .iter()
        .take(state.tellers_public.t)
        .cloned()
        .collect();
    let shares: Vec<DecryptShare> = quorum
        .iter()
        .map(|s| partial_decrypt(&state.spec, s, c, &ctx, &mut rng))
        .collect();
    let plain = crate::tellers::combine_decrypt(&state.spec, &state.tellers_public, c, &shares, &ctx)?;
    if log {
        state.bb.append(
            Phase::AuditLog,
            "AUD",
            Record::AuditDecrypt {
                label: label.to_string(),
                ciphertext: c.clone(),
                shares,
            }
            .encode(),
        )?;
    }
    Ok(plain)
}

/// Reassembles a printed ballot code from decrypted component elements.
pub(crate) fn code_from_components(
    spec: &GroupSpec,
    election_id: &[u8],
    components: &[GroupElement],
    id_chunks: usize,
    sig_chunks: usize,
) -> Option<BallotCode> {
    if components.len() != 4 * (id_chunks + sig_chunks) {
        return None;
    }
    let mut chunks = Vec::new();
    for chunk in components.chunks_exact(4) {
        let c1 = Ciphertext { a: chunk[0].clone(), b: chunk[1].clone() };
        let c2 = Ciphertext { a: chunk[2].clone(), b: chunk[3].clone() };
        let binding = compute_binding(spec, election_id, &c1, &c2);
        chunks.push(crate::group::rcca::RccaCiphertext { c1, c2, binding });
    }
    let enc_sig = chunks.split_off(id_chunks);
    Some(BallotCode { enc_id: chunks, enc_sig })
}

/// Decrypts the ballot code of one eligible row back to the printed code.
pub(crate) fn decrypt_ballot_code(
    state: &mut ElectionState,
    row_position: usize,
    log: bool,
) -> Result<Option<BallotCode>, PipelineError> {
    let row = state.eligible[row_position].clone();
    let mut components = Vec::with_capacity(row.enc_ballot_code.len());
    for (j, c) in row.enc_ballot_code.iter().enumerate() {
        components.push(audit_decrypt(
            state,
            c,
            &format!("code-row{}-c{j}", row.row_index),
            log,
        )?);
    }
    let (idc, sigc) = crate::polling::ballot_code_chunk_counts(&state.spec);
    Ok(code_from_components(
        &state.spec,
        state.election_id(),
        &components,
        idc,
        sigc,
    ))
}

/// Draws `m` distinct indices below `n`.
pub fn sample_indices(n: usize, m: usize, rng: &mut dyn RngCore) -> Vec<usize> {
    let m = m.min(n);
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let pick = (rng.next_u64() % pool.len() as u64) as usize;
        out.push(pool.swap_remove(pick));
    }
    out.sort_unstable();
    out
}

/// Board-to-paper comparison audit over a fixed sample.
pub fn rla_bb_to_paper(
    state: &mut ElectionState,
    sample_size: usize,
    rng: &mut dyn RngCore,
    log: bool,
) -> Result<AuditRecordData, PipelineError> {
    let sampled = sample_indices(state.eligible.len(), sample_size, rng);
    let mut mismatches = Vec::new();
    for &pos in &sampled {
        let printed = decrypt_ballot_code(state, pos, log)?;
        let paper_index = printed.as_ref().and_then(|code| {
            state
                .paper_store
                .iter()
                .position(|ballot| ballot.code.components() == code.components())
        });
        let Some(paper_index) = paper_index else {
            mismatches.push(pos); // PaperBallotMissing counts as mismatch
            continue;
        };
        let enc_vote = state.eligible[pos].enc_vote.clone();
        let vote_el = audit_decrypt(state, &enc_vote, &format!("vote-row{pos}"), log)?;
        let electronic = crate::group::elgamal::exp_decode(
            &state.spec,
            &vote_el,
            state.config.candidates.len() as u64,
        )
        .ok();
        let paper_vote = state.paper_store[paper_index].vote.map(|v| v as u64);
        if electronic.is_none() || electronic != paper_vote {
            mismatches.push(pos);
        }
    }
    let record = AuditRecordData {
        direction: AuditDirection::BbToPaper,
        notes: format!(
            "sampled {} of {}, {} mismatches",
            sampled.len(),
            state.eligible.len(),
            mismatches.len()
        ),
        sampled,
        mismatches,
    };
    if log {
        state.bb.append(
            Phase::AuditLog,
            "AUD",
            Record::AuditNote { label: "rla-bb-to-paper".into(), detail: record.notes.clone() }
                .encode(),
        )?;
    }
    Ok(record)
}

/// Output of the homomorphic lifting round: every candidate ciphertext
/// (and the paper reference) raised to the same secret power, with
/// consistency proofs per teller.
pub struct LiftEvidence {
    pub commitment_keys: Vec<GroupElement>,
    pub proofs: Vec<crate::zkp::dleq::ConsistencyProof>,
}

/// Paper-to-board matching via exponent obfuscation: lift the first
/// ballot-code component of every eligible row, and a trivial encryption
/// of the paper ballot's own first component, to a shared secret power;
/// decrypt; compare blinded values.
pub fn rla_paper_to_bb(
    state: &mut ElectionState,
    paper: &PaperBallot,
    rng: &mut dyn RngCore,
    log: bool,
) -> Result<(PaperMatch, LiftEvidence), PipelineError> {
    let spec = state.spec.clone();
    let paper_component = paper
        .code
        .components()
        .first()
        .cloned()
        .ok_or_else(|| PipelineError::BadConfig("paper ballot has no code".into()))?;

    // candidate list: the first code-component encryption of each row,
    // plus the trivial encryption of the paper value in front
    let mut lifted: Vec<Ciphertext> = Vec::with_capacity(state.eligible.len() + 1);
    lifted.push(Ciphertext::trivial(&spec, &paper_component));
    for row in &state.eligible {
        lifted.push(
            row.enc_ballot_code
                .first()
                .cloned()
                .ok_or_else(|| PipelineError::BadConfig("row has no code encryptions".into()))?,
        );
    }

    let ctx = FsContext::new(state.election_id(), "rla-lift");
    let mut commitment_keys = Vec::new();
    let mut proofs = Vec::new();
    let quorum: Vec<TellerShare> = state
        .teller_shares
        .iter()
        .take(state.tellers_public.t)
        .cloned()
        .collect();
    for teller in &quorum {
        let z = spec.rand_scalar_nonzero(rng);
        let next: Vec<Ciphertext> = lifted.iter().map(|c| ct_pow(&spec, c, &z)).collect();
        let mut pairs = vec![(spec.generator().clone(), spec.g_pow(&z))];
        for (before, after) in lifted.iter().zip(&next) {
            pairs.push((before.a.clone(), after.a.clone()));
            pairs.push((before.b.clone(), after.b.clone()));
        }
        let mut tctx = ctx.clone();
        tctx.absorb("lift-teller", &(teller.teller_id as u32).to_be_bytes());
        proofs.push(prove_same_exponent(&spec, &pairs, &z, &tctx, rng));
        commitment_keys.push(spec.g_pow(&z));
        lifted = next;
    }

    // decrypt the blinded values; plaintext identities stay hidden behind
    // the secret exponent
    let mut blinded = Vec::with_capacity(lifted.len());
    for (j, c) in lifted.iter().enumerate() {
        blinded.push(audit_decrypt(state, c, &format!("lift-{j}"), log)?);
    }
    let paper_blinded = &blinded[0];
    let matches: Vec<usize> = blinded[1..]
        .iter()
        .enumerate()
        .filter(|(_, b)| *b == paper_blinded)
        .map(|(i, _)| i)
        .collect();

    let outcome = match matches.as_slice() {
        [] => PaperMatch::NoMatch,
        [one] => PaperMatch::Match(*one),
        many => PaperMatch::MultiMatch(many.to_vec()),
    };
    if log {
        state.bb.append(
            Phase::AuditLog,
            "AUD",
            Record::AuditNote {
                label: "rla-paper-to-bb".into(),
                detail: format!("{outcome:?}"),
            }
            .encode(),
        )?;
    }
    Ok((outcome, LiftEvidence { commitment_keys, proofs }))
}

/// Exact hypergeometric detection probability for one bad ballot among
/// `n` with a sample of `m`: 1 - C(n-1, m)/C(n, m) = m/n. Kept as an
/// explicit binomial-coefficient computation so it is an independent
/// oracle for the empirical tests.
pub fn hypergeometric_detection_probability(n: u64, bad: u64, m: u64) -> f64 {
    // P(no bad sampled) = C(n-bad, m) / C(n, m)
    fn choose(n: u64, k: u64) -> f64 {
        if k > n {
            return 0.0;
        }
        let mut acc = 1f64;
        for i in 0..k {
            acc *= (n - i) as f64 / (k - i) as f64;
        }
        acc
    }
    1.0 - choose(n - bad, m) / choose(n, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::seeded_rng;
    use crate::pipeline::config::ElectionConfig;
    use crate::pipeline::run::{cast_vote, close_voting, run_stage1, run_stage2, setup, Corruption};

    fn run_election(voters: usize, seed: u64, corruptions: Vec<Corruption>) -> ElectionState {
        let config = ElectionConfig::desk_default(voters, 3, seed);
        let mut state = setup(config, corruptions).unwrap();
        for i in 0..voters {
            cast_vote(&mut state, i, 1 + i % 3).unwrap();
        }
        close_voting(&mut state).unwrap();
        run_stage1(&mut state).unwrap();
        run_stage2(&mut state).unwrap();
        state
    }

    #[test]
    fn honest_audit_finds_no_mismatch() {
        let mut state = run_election(6, 101, Vec::new());
        let mut rng = seeded_rng(b"audit", "honest");
        let record = rla_bb_to_paper(&mut state, 3, &mut rng, true).unwrap();
        assert_eq!(record.sampled.len(), 3);
        assert!(record.mismatches.is_empty());
        state.transcript().verify_chain().unwrap();
    }

    #[test]
    fn full_sample_detects_flip() {
        let mut state = run_election(6, 102, vec![Corruption::ScannerFlipVote { voter: 2, vote: 1 }]);
        let mut rng = seeded_rng(b"audit", "flip");
        let record = rla_bb_to_paper(&mut state, 6, &mut rng, false).unwrap();
        assert_eq!(record.mismatches.len(), 1);
    }

    #[test]
    fn paper_to_bb_unique_match_and_no_match() {
        let mut state = run_election(5, 103, Vec::new());
        let mut rng = seeded_rng(b"audit", "p2b");
        let paper = state.paper_store[2].clone();
        let (outcome, evidence) = rla_paper_to_bb(&mut state, &paper, &mut rng, false).unwrap();
        assert!(matches!(outcome, PaperMatch::Match(_)));
        assert_eq!(evidence.proofs.len(), state.tellers_public.t);

        // dropped tuple: the paper ballot of the dropped voter finds nothing
        let mut state =
            run_election(5, 104, vec![Corruption::DropCastTuple { voter: 3 }]);
        let paper = state.paper_store[3].clone();
        let mut rng = seeded_rng(b"audit", "p2b-drop");
        let (outcome, _) = rla_paper_to_bb(&mut state, &paper, &mut rng, false).unwrap();
        assert_eq!(outcome, PaperMatch::NoMatch);
    }

    #[test]
    fn blinded_values_hide_the_component() {
        let mut state = run_election(4, 105, Vec::new());
        let mut rng = seeded_rng(b"audit", "blind");
        let paper = state.paper_store[0].clone();
        let component = paper.code.components()[0].clone();
        let spec = state.spec.clone();
        // decrypting the lifted ciphertexts must not reveal the raw value
        let before = state.bb.entries().len();
        let (_, _) = rla_paper_to_bb(&mut state, &paper, &mut rng, true).unwrap();
        let new_entries = &state.bb.entries()[before..];
        for e in new_entries {
            assert!(!e
                .payload
                .windows(component.encode().len())
                .any(|w| w == component.encode().as_slice()));
        }
        let _ = spec;
    }

    #[test]
    fn hypergeometric_oracle_values() {
        assert!((hypergeometric_detection_probability(20, 1, 5) - 0.25).abs() < 1e-12);
        assert!((hypergeometric_detection_probability(20, 1, 20) - 1.0).abs() < 1e-12);
        assert!((hypergeometric_detection_probability(10, 2, 5) - (1.0 - (8f64*7.0*6.0*5.0*4.0)/(10f64*9.0*8.0*7.0*6.0))).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_distinct_and_in_range() {
        let mut rng = seeded_rng(b"audit", "sample");
        for _ in 0..50 {
            let s = sample_indices(20, 5, &mut rng);
            assert_eq!(s.len(), 5);
            let mut d = s.clone();
            d.dedup();
            assert_eq!(d.len(), 5);
            assert!(s.iter().all(|&i| i < 20));
        }
        assert_eq!(sample_indices(3, 9, &mut rng).len(), 3);
    }
}
