//! Chaum-Pedersen proofs of discrete-log equality: the substrate for
//! verifiable decryption, the distributed commitment construction and the
//! plaintext-equivalence tests.

use rand::RngCore;

use crate::codec::{Canon, CodecError, Reader};
use crate::group::{GroupElement, GroupSpec, Scalar};
use crate::zkp::fs::{fs_challenge, FsContext};
use crate::zkp::ZkpError;

/// Proves log_{g1}(x1) = log_{g2}(x2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DleqProof {
    pub commitment_a: GroupElement,
    pub commitment_b: GroupElement,
    pub challenge: Scalar,
    pub response: Scalar,
}

impl Canon for DleqProof {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.commitment_a.encode_into(out);
        self.commitment_b.encode_into(out);
        self.challenge.encode_into(out);
        self.response.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(DleqProof {
            commitment_a: GroupElement::decode(r)?,
            commitment_b: GroupElement::decode(r)?,
            challenge: Scalar::decode(r)?,
            response: Scalar::decode(r)?,
        })
    }
}

fn absorb_statement(
    ctx: &FsContext,
    g1: &GroupElement,
    x1: &GroupElement,
    g2: &GroupElement,
    x2: &GroupElement,
) -> FsContext {
    let mut ctx = ctx.clone();
    ctx.absorb_element("dleq-g1", g1);
    ctx.absorb_element("dleq-x1", x1);
    ctx.absorb_element("dleq-g2", g2);
    ctx.absorb_element("dleq-x2", x2);
    ctx
}

pub fn prove_dleq(
    spec: &GroupSpec,
    g1: &GroupElement,
    x1: &GroupElement,
    g2: &GroupElement,
    x2: &GroupElement,
    exponent: &Scalar,
    ctx: &FsContext,
    rng: &mut dyn RngCore,
) -> DleqProof {
    let w = spec.rand_scalar(rng);
    let commitment_a = spec.pow(g1, &w);
    let commitment_b = spec.pow(g2, &w);
    let ctx = absorb_statement(ctx, g1, x1, g2, x2);
    let challenge = fs_challenge(
        spec,
        &ctx,
        &[commitment_a.clone(), commitment_b.clone()],
    );
    let response = spec.s_add(&w, &spec.s_mul(&challenge, exponent));
    DleqProof { commitment_a, commitment_b, challenge, response }
}

pub fn verify_dleq(
    spec: &GroupSpec,
    g1: &GroupElement,
    x1: &GroupElement,
    g2: &GroupElement,
    x2: &GroupElement,
    proof: &DleqProof,
) -> Result<(), ZkpError> {
    for e in [g1, x1, g2, x2, &proof.commitment_a, &proof.commitment_b] {
        spec.check_member(e)
            .map_err(|_| ZkpError::VerifyFailed("dleq statement not in group"))?;
    }
    // g^z == A * x^c on both bases
    let lhs1 = spec.pow(g1, &proof.response);
    let rhs1 = spec.mul(&proof.commitment_a, &spec.pow(x1, &proof.challenge));
    let lhs2 = spec.pow(g2, &proof.response);
    let rhs2 = spec.mul(&proof.commitment_b, &spec.pow(x2, &proof.challenge));
    if lhs1 != rhs1 || lhs2 != rhs2 {
        return Err(ZkpError::VerifyFailed("dleq equations"));
    }
    Ok(())
}

/// Re-derives the challenge and verifies; use when the verifier holds the
/// same context the prover used (the normal transcript path).
pub fn verify_dleq_ctx(
    spec: &GroupSpec,
    g1: &GroupElement,
    x1: &GroupElement,
    g2: &GroupElement,
    x2: &GroupElement,
    proof: &DleqProof,
    ctx: &FsContext,
) -> Result<(), ZkpError> {
    let full = absorb_statement(ctx, g1, x1, g2, x2);
    let expect = fs_challenge(
        spec,
        &full,
        &[proof.commitment_a.clone(), proof.commitment_b.clone()],
    );
    if expect != proof.challenge {
        return Err(ZkpError::VerifyFailed("dleq challenge mismatch"));
    }
    verify_dleq(spec, g1, x1, g2, x2, proof)
}

/// One Schnorr-style proof that a single exponent links every (base,
/// value) pair: used by PET blinding and the audit-time homomorphic
/// lifting, where the same secret power is applied to several elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyProof {
    pub commitments: Vec<GroupElement>,
    pub challenge: Scalar,
    pub response: Scalar,
}

impl Canon for ConsistencyProof {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.commitments.encode_into(out);
        self.challenge.encode_into(out);
        self.response.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(ConsistencyProof {
            commitments: Vec::<GroupElement>::decode(r)?,
            challenge: Scalar::decode(r)?,
            response: Scalar::decode(r)?,
        })
    }
}

fn absorb_pairs(ctx: &FsContext, pairs: &[(GroupElement, GroupElement)]) -> FsContext {
    let mut ctx = ctx.clone();
    for (i, (base, value)) in pairs.iter().enumerate() {
        ctx.absorb_element(&format!("se-base-{i}"), base);
        ctx.absorb_element(&format!("se-value-{i}"), value);
    }
    ctx
}

pub fn prove_same_exponent(
    spec: &GroupSpec,
    pairs: &[(GroupElement, GroupElement)],
    exponent: &Scalar,
    ctx: &FsContext,
    rng: &mut dyn RngCore,
) -> ConsistencyProof {
    let w = spec.rand_scalar(rng);
    let commitments: Vec<GroupElement> = pairs.iter().map(|(b, _)| spec.pow(b, &w)).collect();
    let ctx = absorb_pairs(ctx, pairs);
    let challenge = fs_challenge(spec, &ctx, &commitments);
    let response = spec.s_add(&w, &spec.s_mul(&challenge, exponent));
    ConsistencyProof { commitments, challenge, response }
}

pub fn verify_same_exponent(
    spec: &GroupSpec,
    pairs: &[(GroupElement, GroupElement)],
    proof: &ConsistencyProof,
    ctx: &FsContext,
) -> Result<(), ZkpError> {
    if proof.commitments.len() != pairs.len() || pairs.is_empty() {
        return Err(ZkpError::Malformed("consistency proof arity"));
    }
    let full = absorb_pairs(ctx, pairs);
    let expect = fs_challenge(spec, &full, &proof.commitments);
    if expect != proof.challenge {
        return Err(ZkpError::VerifyFailed("consistency challenge mismatch"));
    }
    for ((base, value), t) in pairs.iter().zip(&proof.commitments) {
        spec.check_member(base)
            .and(spec.check_member(value))
            .map_err(|_| ZkpError::VerifyFailed("consistency statement not in group"))?;
        let lhs = spec.pow(base, &proof.response);
        let rhs = spec.mul(t, &spec.pow(value, &proof.challenge));
        if lhs != rhs {
            return Err(ZkpError::VerifyFailed("consistency equation"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::seeded_rng;

    fn ctx() -> FsContext {
        FsContext::new(b"ELX-dleq", "test")
    }

    #[test]
    fn honest_dleq_accepts() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "dleq");
        for _ in 0..20 {
            let x = spec.rand_scalar(&mut rng);
            let h = spec.hash_to_group("base", b"h");
            let x1 = spec.g_pow(&x);
            let x2 = spec.pow(&h, &x);
            let proof = prove_dleq(&spec, spec.generator(), &x1, &h, &x2, &x, &ctx(), &mut rng);
            verify_dleq_ctx(&spec, spec.generator(), &x1, &h, &x2, &proof, &ctx()).unwrap();
        }
    }

    #[test]
    fn zero_exponent_accepts() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "dleq0");
        let h = spec.hash_to_group("base", b"h");
        let zero = spec.scalar_zero();
        let id = spec.identity();
        let proof = prove_dleq(&spec, spec.generator(), &id, &h, &id, &zero, &ctx(), &mut rng);
        verify_dleq_ctx(&spec, spec.generator(), &id, &h, &id, &proof, &ctx()).unwrap();
    }

    #[test]
    fn tampered_fields_reject() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "dleq-mut");
        let x = spec.rand_scalar_nonzero(&mut rng);
        let h = spec.hash_to_group("base", b"h");
        let x1 = spec.g_pow(&x);
        let x2 = spec.pow(&h, &x);
        let proof = prove_dleq(&spec, spec.generator(), &x1, &h, &x2, &x, &ctx(), &mut rng);

        let mut m = proof.clone();
        m.response = spec.s_add(&m.response, &spec.scalar_one());
        assert!(verify_dleq_ctx(&spec, spec.generator(), &x1, &h, &x2, &m, &ctx()).is_err());

        let mut m = proof.clone();
        m.challenge = spec.s_add(&m.challenge, &spec.scalar_one());
        assert!(verify_dleq_ctx(&spec, spec.generator(), &x1, &h, &x2, &m, &ctx()).is_err());

        let mut m = proof.clone();
        m.commitment_a = spec.mul(&m.commitment_a, spec.generator());
        assert!(verify_dleq_ctx(&spec, spec.generator(), &x1, &h, &x2, &m, &ctx()).is_err());

        let mut m = proof;
        m.commitment_b = spec.mul(&m.commitment_b, spec.generator());
        assert!(verify_dleq_ctx(&spec, spec.generator(), &x1, &h, &x2, &m, &ctx()).is_err());
    }

    #[test]
    fn wrong_statement_rejects() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "dleq-stmt");
        let x = spec.rand_scalar_nonzero(&mut rng);
        let h = spec.hash_to_group("base", b"h");
        let x1 = spec.g_pow(&x);
        let x2 = spec.pow(&h, &x);
        let proof = prove_dleq(&spec, spec.generator(), &x1, &h, &x2, &x, &ctx(), &mut rng);
        let wrong = spec.mul(&x2, &h);
        assert!(verify_dleq_ctx(&spec, spec.generator(), &x1, &h, &wrong, &proof, &ctx()).is_err());
    }

    #[test]
    fn strong_fs_binds_election_id() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "dleq-eid");
        let x = spec.rand_scalar_nonzero(&mut rng);
        let h = spec.hash_to_group("base", b"h");
        let x1 = spec.g_pow(&x);
        let x2 = spec.pow(&h, &x);
        let proof = prove_dleq(&spec, spec.generator(), &x1, &h, &x2, &x, &ctx(), &mut rng);
        let other = FsContext::new(b"ELX-other", "test");
        assert!(verify_dleq_ctx(&spec, spec.generator(), &x1, &h, &x2, &proof, &other).is_err());
    }

    #[test]
    fn same_exponent_over_three_pairs() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "se");
        let z = spec.rand_scalar_nonzero(&mut rng);
        let bases: Vec<GroupElement> = (0..3u8)
            .map(|i| spec.hash_to_group("se-base", &[i]))
            .collect();
        let pairs: Vec<(GroupElement, GroupElement)> = bases
            .iter()
            .map(|b| (b.clone(), spec.pow(b, &z)))
            .collect();
        let proof = prove_same_exponent(&spec, &pairs, &z, &ctx(), &mut rng);
        verify_same_exponent(&spec, &pairs, &proof, &ctx()).unwrap();

        let mut wrong = pairs.clone();
        wrong[2].1 = spec.mul(&wrong[2].1, spec.generator());
        assert!(verify_same_exponent(&spec, &wrong, &proof, &ctx()).is_err());
    }
}
