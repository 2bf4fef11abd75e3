//! Plaintext-equivalence tests. A threshold set of tellers blinds the
//! componentwise ratio of the two ciphertexts with per-test ephemeral
//! exponents (committed as g^z, proven consistent across components), the
//! blinded ratios multiply into one ciphertext, and a verifiable threshold
//! decryption of that product reveals the identity element exactly when
//! the plaintexts are equal — and a uniformly blinded value otherwise.

use rand::RngCore;

use crate::codec::{Canon, CodecError, Reader};
use crate::group::elgamal::{ct_mul, ct_pow, ct_ratio, Ciphertext};
use crate::group::{GroupElement, GroupSpec};
use crate::tellers::{combine_decrypt, partial_decrypt, DecryptShare, TellerPublic, TellerShare};
use crate::zkp::dleq::{prove_same_exponent, verify_same_exponent, ConsistencyProof};
use crate::zkp::fs::FsContext;
use crate::zkp::ZkpError;

/// One teller's blinding contribution for a single test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetShare {
    pub teller_id: usize,
    /// Feldman-style commitment g^z to the ephemeral blinding exponent.
    pub commitment_key: GroupElement,
    pub blinded_ratio: Ciphertext,
    pub proof: ConsistencyProof,
}

impl Canon for PetShare {
    fn encode_into(&self, out: &mut Vec<u8>) {
        crate::codec::put_u32(out, self.teller_id as u32);
        self.commitment_key.encode_into(out);
        self.blinded_ratio.encode_into(out);
        self.proof.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(PetShare {
            teller_id: r.u32()? as usize,
            commitment_key: GroupElement::decode(r)?,
            blinded_ratio: Ciphertext::decode(r)?,
            proof: ConsistencyProof::decode(r)?,
        })
    }
}

/// Outcome plus the evidence needed to audit it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetOutcome {
    pub equal: bool,
    pub combined_ratio: Ciphertext,
    pub blinded_plaintext: GroupElement,
}

fn pet_ctx(ctx: &FsContext, teller_id: usize, c1: &Ciphertext, c2: &Ciphertext) -> FsContext {
    let mut ctx = ctx.clone();
    ctx.absorb("pet-teller", &(teller_id as u32).to_be_bytes());
    ctx.absorb_canon("pet-c1", c1);
    ctx.absorb_canon("pet-c2", c2);
    ctx
}

pub fn pet_contribute(
    spec: &GroupSpec,
    teller_id: usize,
    c1: &Ciphertext,
    c2: &Ciphertext,
    ctx: &FsContext,
    rng: &mut dyn RngCore,
) -> PetShare {
    let z = spec.rand_scalar_nonzero(rng);
    let ratio = ct_ratio(spec, c1, c2);
    let blinded = ct_pow(spec, &ratio, &z);
    let commitment_key = spec.g_pow(&z);
    let pairs = [
        (spec.generator().clone(), commitment_key.clone()),
        (ratio.a.clone(), blinded.a.clone()),
        (ratio.b.clone(), blinded.b.clone()),
    ];
    let proof = prove_same_exponent(spec, &pairs, &z, &pet_ctx(ctx, teller_id, c1, c2), rng);
    PetShare { teller_id, commitment_key, blinded_ratio: blinded, proof }
}

pub fn verify_pet_share(
    spec: &GroupSpec,
    c1: &Ciphertext,
    c2: &Ciphertext,
    share: &PetShare,
    ctx: &FsContext,
) -> Result<(), ZkpError> {
    let ratio = ct_ratio(spec, c1, c2);
    let pairs = [
        (spec.generator().clone(), share.commitment_key.clone()),
        (ratio.a.clone(), share.blinded_ratio.a.clone()),
        (ratio.b.clone(), share.blinded_ratio.b.clone()),
    ];
    verify_same_exponent(
        spec,
        &pairs,
        &share.proof,
        &pet_ctx(ctx, share.teller_id, c1, c2),
    )
    .map_err(|_| ZkpError::ShareInvalid(share.teller_id))
}

/// Product of the blinded ratios: an encryption of (m1/m2)^(sum z_k).
pub fn pet_combined_ratio(spec: &GroupSpec, shares: &[PetShare]) -> Ciphertext {
    shares.iter().fold(
        Ciphertext { a: spec.identity(), b: spec.identity() },
        |acc, s| ct_mul(spec, &acc, &s.blinded_ratio),
    )
}

/// Validates all blinding shares and the decryption shares of their
/// product, then decides equality.
pub fn pet_combine(
    spec: &GroupSpec,
    public: &TellerPublic,
    c1: &Ciphertext,
    c2: &Ciphertext,
    shares: &[PetShare],
    decrypt_shares: &[DecryptShare],
    ctx: &FsContext,
) -> Result<PetOutcome, ZkpError> {
    let mut seen: Vec<usize> = Vec::new();
    for s in shares {
        if !seen.contains(&s.teller_id) {
            seen.push(s.teller_id);
        }
    }
    if seen.len() < public.t {
        return Err(ZkpError::InsufficientShares { got: seen.len(), need: public.t });
    }
    for s in shares {
        verify_pet_share(spec, c1, c2, s, ctx)?;
    }
    let combined_ratio = pet_combined_ratio(spec, shares);
    let blinded_plaintext = combine_decrypt(spec, public, &combined_ratio, decrypt_shares, ctx)
        .map_err(|e| match e {
            crate::tellers::TellerError::InsufficientShares { got, need } => {
                ZkpError::InsufficientShares { got, need }
            }
            crate::tellers::TellerError::ShareProofInvalid(id) => ZkpError::ShareInvalid(id),
            _ => ZkpError::VerifyFailed("pet decryption"),
        })?;
    Ok(PetOutcome {
        equal: blinded_plaintext == spec.identity(),
        combined_ratio,
        blinded_plaintext,
    })
}

/// Runs a full test with the given teller key shares: blinding round,
/// then verifiable decryption of the combined ratio.
pub fn pet_run(
    spec: &GroupSpec,
    public: &TellerPublic,
    teller_shares: &[&TellerShare],
    c1: &Ciphertext,
    c2: &Ciphertext,
    ctx: &FsContext,
    rng: &mut dyn RngCore,
) -> Result<(PetOutcome, Vec<PetShare>, Vec<DecryptShare>), ZkpError> {
    if teller_shares.len() < public.t {
        return Err(ZkpError::InsufficientShares {
            got: teller_shares.len(),
            need: public.t,
        });
    }
    let shares: Vec<PetShare> = teller_shares
        .iter()
        .map(|ts| pet_contribute(spec, ts.teller_id, c1, c2, ctx, rng))
        .collect();
    let combined = pet_combined_ratio(spec, &shares);
    let decrypt_shares: Vec<DecryptShare> = teller_shares
        .iter()
        .map(|ts| partial_decrypt(spec, ts, &combined, ctx, rng))
        .collect();
    let outcome = pet_combine(spec, public, c1, c2, &shares, &decrypt_shares, ctx)?;
    Ok((outcome, shares, decrypt_shares))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::elgamal::{decrypt, encrypt_rand, exp_encode};
    use crate::group::seeded_rng;
    use crate::tellers::{dkg, reconstruct_secret};

    fn ctx() -> FsContext {
        FsContext::new(b"ELX-pet", "test")
    }

    #[test]
    fn equal_and_unequal_plaintexts() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "pet");
        let (public, shares) = dkg(&spec, 3, 2, &mut rng).unwrap();
        let quorum: Vec<&TellerShare> = shares.iter().take(2).collect();

        let m = exp_encode(&spec, 11);
        let (ca, _) = encrypt_rand(&spec, &public.pk_t, &m, &mut rng);
        let (cb, _) = encrypt_rand(&spec, &public.pk_t, &m, &mut rng);
        let (outcome, _, _) = pet_run(&spec, &public, &quorum, &ca, &cb, &ctx(), &mut rng).unwrap();
        assert!(outcome.equal);

        let other = exp_encode(&spec, 12);
        let (cc, _) = encrypt_rand(&spec, &public.pk_t, &other, &mut rng);
        let (outcome, _, _) = pet_run(&spec, &public, &quorum, &ca, &cc, &ctx(), &mut rng).unwrap();
        assert!(!outcome.equal);
        assert_ne!(outcome.blinded_plaintext, spec.identity());
    }

    #[test]
    fn below_threshold_rejected() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "pet-thresh");
        let (public, shares) = dkg(&spec, 3, 2, &mut rng).unwrap();
        let one: Vec<&TellerShare> = shares.iter().take(1).collect();
        let m = exp_encode(&spec, 3);
        let (ca, _) = encrypt_rand(&spec, &public.pk_t, &m, &mut rng);
        let (cb, _) = encrypt_rand(&spec, &public.pk_t, &m, &mut rng);
        assert!(matches!(
            pet_run(&spec, &public, &one, &ca, &cb, &ctx(), &mut rng),
            Err(ZkpError::InsufficientShares { got: 1, need: 2 })
        ));
    }

    #[test]
    fn tampered_share_rejected() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "pet-tamper");
        let (public, shares) = dkg(&spec, 3, 2, &mut rng).unwrap();
        let m = exp_encode(&spec, 3);
        let (ca, _) = encrypt_rand(&spec, &public.pk_t, &m, &mut rng);
        let (cb, _) = encrypt_rand(&spec, &public.pk_t, &m, &mut rng);

        let mut blind: Vec<PetShare> = shares
            .iter()
            .take(2)
            .map(|ts| pet_contribute(&spec, ts.teller_id, &ca, &cb, &ctx(), &mut rng))
            .collect();
        blind[1].blinded_ratio.b = spec.mul(&blind[1].blinded_ratio.b, spec.generator());
        let combined = pet_combined_ratio(&spec, &blind);
        let ds: Vec<DecryptShare> = shares
            .iter()
            .take(2)
            .map(|ts| partial_decrypt(&spec, ts, &combined, &ctx(), &mut rng))
            .collect();
        assert_eq!(
            pet_combine(&spec, &public, &ca, &cb, &blind, &ds, &ctx()),
            Err(ZkpError::ShareInvalid(2))
        );
    }

    #[test]
    fn decision_matches_direct_decryption_oracle() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "pet-oracle");
        let (public, shares) = dkg(&spec, 3, 2, &mut rng).unwrap();
        let quorum: Vec<&TellerShare> = shares.iter().take(2).collect();
        let all: Vec<&TellerShare> = shares.iter().collect();
        let sk = reconstruct_secret(&spec, &all, public.t).unwrap();

        for i in 0..50u64 {
            let m1 = exp_encode(&spec, 1 + i % 7);
            let m2 = exp_encode(&spec, 1 + (i * 3) % 7);
            let (ca, _) = encrypt_rand(&spec, &public.pk_t, &m1, &mut rng);
            let (cb, _) = encrypt_rand(&spec, &public.pk_t, &m2, &mut rng);
            let (outcome, _, _) =
                pet_run(&spec, &public, &quorum, &ca, &cb, &ctx(), &mut rng).unwrap();
            let oracle = decrypt(&spec, &sk, &ca) == decrypt(&spec, &sk, &cb);
            assert_eq!(outcome.equal, oracle);
        }
    }
}
