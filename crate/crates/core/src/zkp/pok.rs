//! Plaintext-knowledge proofs for the scanner's published ciphertexts: a
//! plain Schnorr proof of encryption randomness for the receipt code, and
//! a disjunctive Chaum-Pedersen proof that an encrypted vote lies in the
//! candidate message space (g^1 .. g^L).

use rand::RngCore;

use crate::codec::{Canon, CodecError, Reader};
use crate::group::elgamal::Ciphertext;
use crate::group::{GroupElement, GroupSpec, Scalar};
use crate::zkp::fs::{fs_challenge, FsContext};
use crate::zkp::ZkpError;

/// Schnorr proof of knowledge of the encryption randomness r in
/// c = (g^r, m * pk^r). The full ciphertext is hashed into the challenge,
/// binding the proof to both components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PokProof {
    pub commitment: GroupElement,
    pub challenge: Scalar,
    pub response: Scalar,
}

impl Canon for PokProof {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.commitment.encode_into(out);
        self.challenge.encode_into(out);
        self.response.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(PokProof {
            commitment: GroupElement::decode(r)?,
            challenge: Scalar::decode(r)?,
            response: Scalar::decode(r)?,
        })
    }
}

fn pok_ctx(ctx: &FsContext, pk: &GroupElement, c: &Ciphertext) -> FsContext {
    let mut ctx = ctx.clone();
    ctx.absorb_element("pok-pk", pk);
    ctx.absorb_canon("pok-ciphertext", c);
    ctx
}

pub fn prove_pok_randomness(
    spec: &GroupSpec,
    pk: &GroupElement,
    c: &Ciphertext,
    r: &Scalar,
    ctx: &FsContext,
    rng: &mut dyn RngCore,
) -> PokProof {
    let w = spec.rand_scalar(rng);
    let commitment = spec.g_pow(&w);
    let full = pok_ctx(ctx, pk, c);
    let challenge = fs_challenge(spec, &full, std::slice::from_ref(&commitment));
    let response = spec.s_add(&w, &spec.s_mul(&challenge, r));
    PokProof { commitment, challenge, response }
}

pub fn verify_pok_randomness(
    spec: &GroupSpec,
    pk: &GroupElement,
    c: &Ciphertext,
    proof: &PokProof,
    ctx: &FsContext,
) -> Result<(), ZkpError> {
    let full = pok_ctx(ctx, pk, c);
    let expect = fs_challenge(spec, &full, std::slice::from_ref(&proof.commitment));
    if expect != proof.challenge {
        return Err(ZkpError::VerifyFailed("pok challenge mismatch"));
    }
    let lhs = spec.g_pow(&proof.response);
    let rhs = spec.mul(&proof.commitment, &spec.pow(&c.a, &proof.challenge));
    if lhs != rhs {
        return Err(ZkpError::VerifyFailed("pok equation"));
    }
    Ok(())
}

/// One simulated-or-real branch of the disjunctive vote proof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteBranch {
    pub commitment_a: GroupElement,
    pub commitment_b: GroupElement,
    pub challenge: Scalar,
    pub response: Scalar,
}

impl Canon for VoteBranch {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.commitment_a.encode_into(out);
        self.commitment_b.encode_into(out);
        self.challenge.encode_into(out);
        self.response.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(VoteBranch {
            commitment_a: GroupElement::decode(r)?,
            commitment_b: GroupElement::decode(r)?,
            challenge: Scalar::decode(r)?,
            response: Scalar::decode(r)?,
        })
    }
}

/// Disjunctive proof that a ciphertext encrypts g^v for some candidate
/// index v in [1, L]; branch challenges sum to the Fiat-Shamir challenge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteProof {
    pub branches: Vec<VoteBranch>,
}

impl Canon for VoteProof {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.branches.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(VoteProof { branches: Vec::<VoteBranch>::decode(r)? })
    }
}

fn vote_ctx(ctx: &FsContext, pk: &GroupElement, c: &Ciphertext, num_candidates: usize) -> FsContext {
    let mut ctx = ctx.clone();
    ctx.absorb_element("vote-pk", pk);
    ctx.absorb_canon("vote-ciphertext", c);
    ctx.absorb("vote-candidates", &(num_candidates as u32).to_be_bytes());
    ctx
}

fn branch_target(spec: &GroupSpec, c: &Ciphertext, candidate: u64) -> GroupElement {
    // b / g^j: equals pk^r exactly when the vote is candidate j
    spec.div(&c.b, &spec.g_pow(&spec.scalar_from_u64(candidate)))
}

pub fn prove_vote(
    spec: &GroupSpec,
    pk: &GroupElement,
    c: &Ciphertext,
    vote: usize,
    r: &Scalar,
    num_candidates: usize,
    ctx: &FsContext,
    rng: &mut dyn RngCore,
) -> Result<VoteProof, ZkpError> {
    if vote < 1 || vote > num_candidates {
        return Err(ZkpError::Malformed("vote outside candidate list"));
    }
    let mut branches: Vec<VoteBranch> = Vec::with_capacity(num_candidates);
    let mut simulated_sum = spec.scalar_zero();
    let mut real_w = spec.scalar_zero();

    for j in 1..=num_candidates {
        if j == vote {
            // placeholder; filled after the global challenge is known
            real_w = spec.rand_scalar(rng);
            branches.push(VoteBranch {
                commitment_a: spec.g_pow(&real_w),
                commitment_b: spec.pow(pk, &real_w),
                challenge: spec.scalar_zero(),
                response: spec.scalar_zero(),
            });
        } else {
            let cj = spec.rand_scalar(rng);
            let zj = spec.rand_scalar(rng);
            let target = branch_target(spec, c, j as u64);
            let commitment_a = spec.div(&spec.g_pow(&zj), &spec.pow(&c.a, &cj));
            let commitment_b = spec.div(&spec.pow(pk, &zj), &spec.pow(&target, &cj));
            simulated_sum = spec.s_add(&simulated_sum, &cj);
            branches.push(VoteBranch { commitment_a, commitment_b, challenge: cj, response: zj });
        }
    }

    let full = vote_ctx(ctx, pk, c, num_candidates);
    let commitments: Vec<GroupElement> = branches
        .iter()
        .flat_map(|b| [b.commitment_a.clone(), b.commitment_b.clone()])
        .collect();
    let total = fs_challenge(spec, &full, &commitments);

    let real = &mut branches[vote - 1];
    real.challenge = spec.s_sub(&total, &simulated_sum);
    real.response = spec.s_add(&real_w, &spec.s_mul(&real.challenge, r));
    Ok(VoteProof { branches })
}

pub fn verify_vote(
    spec: &GroupSpec,
    pk: &GroupElement,
    c: &Ciphertext,
    num_candidates: usize,
    proof: &VoteProof,
    ctx: &FsContext,
) -> Result<(), ZkpError> {
    if proof.branches.len() != num_candidates || num_candidates == 0 {
        return Err(ZkpError::Malformed("vote proof arity"));
    }
    let full = vote_ctx(ctx, pk, c, num_candidates);
    let commitments: Vec<GroupElement> = proof
        .branches
        .iter()
        .flat_map(|b| [b.commitment_a.clone(), b.commitment_b.clone()])
        .collect();
    let total = fs_challenge(spec, &full, &commitments);
    let sum = proof
        .branches
        .iter()
        .fold(spec.scalar_zero(), |acc, b| spec.s_add(&acc, &b.challenge));
    if sum != total {
        return Err(ZkpError::VerifyFailed("vote challenge sum"));
    }
    for (idx, b) in proof.branches.iter().enumerate() {
        let j = (idx + 1) as u64;
        let target = branch_target(spec, c, j);
        let ok_a = spec.g_pow(&b.response)
            == spec.mul(&b.commitment_a, &spec.pow(&c.a, &b.challenge));
        let ok_b = spec.pow(pk, &b.response)
            == spec.mul(&b.commitment_b, &spec.pow(&target, &b.challenge));
        if !ok_a || !ok_b {
            return Err(ZkpError::VerifyFailed("vote branch equation"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::elgamal::{encrypt, exp_encode, keygen};
    use crate::group::seeded_rng;

    fn ctx() -> FsContext {
        FsContext::new(b"ELX-pok", "test")
    }

    #[test]
    fn pok_round_trip_and_mutations() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "pok");
        let kp = keygen(&spec, &mut rng);
        let r = spec.rand_scalar(&mut rng);
        let c = encrypt(&spec, &kp.pk, &exp_encode(&spec, 31), &r);
        let proof = prove_pok_randomness(&spec, &kp.pk, &c, &r, &ctx(), &mut rng);
        verify_pok_randomness(&spec, &kp.pk, &c, &proof, &ctx()).unwrap();

        let mut m = proof.clone();
        m.response = spec.s_add(&m.response, &spec.scalar_one());
        assert!(verify_pok_randomness(&spec, &kp.pk, &c, &m, &ctx()).is_err());

        // bound to the exact ciphertext: any swap breaks it
        let c2 = encrypt(&spec, &kp.pk, &exp_encode(&spec, 31), &spec.rand_scalar(&mut rng));
        assert!(verify_pok_randomness(&spec, &kp.pk, &c2, &proof, &ctx()).is_err());
    }

    #[test]
    fn vote_proof_accepts_each_candidate() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "vote");
        let kp = keygen(&spec, &mut rng);
        for vote in 1..=3usize {
            let r = spec.rand_scalar(&mut rng);
            let c = encrypt(&spec, &kp.pk, &exp_encode(&spec, vote as u64), &r);
            let proof = prove_vote(&spec, &kp.pk, &c, vote, &r, 3, &ctx(), &mut rng).unwrap();
            verify_vote(&spec, &kp.pk, &c, 3, &proof, &ctx()).unwrap();
        }
    }

    #[test]
    fn non_candidate_plaintext_rejected() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "vote-bad");
        let kp = keygen(&spec, &mut rng);
        let r = spec.rand_scalar(&mut rng);
        // encrypts g^5, outside the 3-candidate space; an honest prover
        // cannot even start, and a forged transcript built as if the vote
        // were candidate 2 must fail
        let c = encrypt(&spec, &kp.pk, &exp_encode(&spec, 5), &r);
        assert!(prove_vote(&spec, &kp.pk, &c, 5, &r, 3, &ctx(), &mut rng).is_err());
        let forged = prove_vote(&spec, &kp.pk, &c, 2, &r, 3, &ctx(), &mut rng).unwrap();
        assert!(verify_vote(&spec, &kp.pk, &c, 3, &forged, &ctx()).is_err());
    }

    #[test]
    fn replay_under_other_election_rejected() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "vote-eid");
        let kp = keygen(&spec, &mut rng);
        let r = spec.rand_scalar(&mut rng);
        let c = encrypt(&spec, &kp.pk, &exp_encode(&spec, 2), &r);
        let proof = prove_vote(&spec, &kp.pk, &c, 2, &r, 3, &ctx(), &mut rng).unwrap();
        let other = FsContext::new(b"ELX-other", "test");
        assert!(verify_vote(&spec, &kp.pk, &c, 3, &proof, &other).is_err());
    }

    #[test]
    fn vote_proof_field_mutations_reject() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "vote-mut");
        let kp = keygen(&spec, &mut rng);
        let r = spec.rand_scalar(&mut rng);
        let c = encrypt(&spec, &kp.pk, &exp_encode(&spec, 1), &r);
        let proof = prove_vote(&spec, &kp.pk, &c, 1, &r, 2, &ctx(), &mut rng).unwrap();

        for i in 0..2 {
            let mut m = proof.clone();
            m.branches[i].challenge = spec.s_add(&m.branches[i].challenge, &spec.scalar_one());
            assert!(verify_vote(&spec, &kp.pk, &c, 2, &m, &ctx()).is_err());
            let mut m = proof.clone();
            m.branches[i].response = spec.s_add(&m.branches[i].response, &spec.scalar_one());
            assert!(verify_vote(&spec, &kp.pk, &c, 2, &m, &ctx()).is_err());
            let mut m = proof.clone();
            m.branches[i].commitment_a = spec.mul(&m.branches[i].commitment_a, spec.generator());
            assert!(verify_vote(&spec, &kp.pk, &c, 2, &m, &ctx()).is_err());
        }
    }
}
