//! Tally tellers: joint-Feldman distributed key generation, verifiable
//! threshold decryption, and the per-voter commitment factors behind the
//! tracker commitments.
//!
//! Key generation has no trusted dealer: every teller deals a random
//! degree t-1 polynomial, shares verify against the dealt Feldman
//! commitments, and the election key is the product of the constant-term
//! commitments. Decryption shares carry a discrete-log-equality proof
//! against the teller's public verification key, so anyone can check a
//! decryption from the transcript alone.

use rand::RngCore;
use thiserror::Error;

use crate::codec::{Canon, CodecError, Reader};
use crate::group::elgamal::{ct_mul, Ciphertext};
use crate::group::{GroupElement, GroupSpec, Scalar};
use crate::zkp::dleq::{prove_dleq, verify_dleq_ctx, DleqProof};
use crate::zkp::fs::{fs_challenge, FsContext};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TellerError {
    #[error("invalid parameters: {0}")]
    BadParameters(&'static str),
    #[error("share dealt by teller {dealer} to teller {recipient} fails the Feldman check")]
    BadShare { dealer: usize, recipient: usize },
    #[error("decryption share from teller {0} has an invalid proof")]
    ShareProofInvalid(usize),
    #[error("insufficient shares: got {got}, threshold {need}")]
    InsufficientShares { got: usize, need: usize },
    #[error("missing share from teller {0}")]
    MissingShare(usize),
}

/// Public output of the DKG: the election key, every dealer's Feldman
/// commitments and the derived per-teller verification keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TellerPublic {
    pub n: usize,
    pub t: usize,
    pub pk_t: GroupElement,
    pub dealer_commitments: Vec<Vec<GroupElement>>,
    pub verification_keys: Vec<GroupElement>,
}

impl TellerPublic {
    pub fn verification_key(&self, teller_id: usize) -> &GroupElement {
        &self.verification_keys[teller_id - 1]
    }
}

impl Canon for TellerPublic {
    fn encode_into(&self, out: &mut Vec<u8>) {
        crate::codec::put_u32(out, self.n as u32);
        crate::codec::put_u32(out, self.t as u32);
        self.pk_t.encode_into(out);
        crate::codec::put_u32(out, self.dealer_commitments.len() as u32);
        for cs in &self.dealer_commitments {
            cs.encode_into(out);
        }
        self.verification_keys.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let n = r.u32()? as usize;
        let t = r.u32()? as usize;
        let pk_t = GroupElement::decode(r)?;
        let dealers = r.u32()? as usize;
        let mut dealer_commitments = Vec::with_capacity(dealers.min(1024));
        for _ in 0..dealers {
            dealer_commitments.push(Vec::<GroupElement>::decode(r)?);
        }
        Ok(TellerPublic {
            n,
            t,
            pk_t,
            dealer_commitments,
            verification_keys: Vec::<GroupElement>::decode(r)?,
        })
    }
}

/// One teller's secret key share (teller ids are 1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TellerShare {
    pub teller_id: usize,
    pub secret_share: Scalar,
}

impl Canon for TellerShare {
    fn encode_into(&self, out: &mut Vec<u8>) {
        crate::codec::put_u32(out, self.teller_id as u32);
        self.secret_share.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(TellerShare {
            teller_id: r.u32()? as usize,
            secret_share: Scalar::decode(r)?,
        })
    }
}

fn poly_eval(spec: &GroupSpec, coeffs: &[Scalar], x: u64) -> Scalar {
    let xs = spec.scalar_from_u64(x);
    let mut acc = spec.scalar_zero();
    for c in coeffs.iter().rev() {
        acc = spec.s_add(&spec.s_mul(&acc, &xs), c);
    }
    acc
}

/// Checks a dealt share against the dealer's Feldman commitments:
/// g^share == prod_m C_m^(j^m).
pub fn feldman_verify(
    spec: &GroupSpec,
    commitments: &[GroupElement],
    recipient: usize,
    share: &Scalar,
) -> bool {
    let mut expect = spec.identity();
    let mut x_pow = spec.scalar_one();
    let x = spec.scalar_from_u64(recipient as u64);
    for c in commitments {
        expect = spec.mul(&expect, &spec.pow(c, &x_pow));
        x_pow = spec.s_mul(&x_pow, &x);
    }
    spec.g_pow(share) == expect
}

/// Joint-Feldman DKG among n tellers with threshold t.
pub fn dkg(
    spec: &GroupSpec,
    n: usize,
    t: usize,
    rng: &mut dyn RngCore,
) -> Result<(TellerPublic, Vec<TellerShare>), TellerError> {
    if n == 0 || t == 0 || t > n {
        return Err(TellerError::BadParameters("need 1 <= t <= n"));
    }
    let mut dealer_commitments = Vec::with_capacity(n);
    let mut dealt: Vec<Vec<Scalar>> = Vec::with_capacity(n);
    for _dealer in 0..n {
        let coeffs: Vec<Scalar> = (0..t).map(|_| spec.rand_scalar(rng)).collect();
        dealer_commitments.push(coeffs.iter().map(|c| spec.g_pow(c)).collect::<Vec<_>>());
        dealt.push((1..=n).map(|j| poly_eval(spec, &coeffs, j as u64)).collect());
    }

    for (dealer, shares) in dealt.iter().enumerate() {
        for (idx, share) in shares.iter().enumerate() {
            let recipient = idx + 1;
            if !feldman_verify(spec, &dealer_commitments[dealer], recipient, share) {
                return Err(TellerError::BadShare { dealer: dealer + 1, recipient });
            }
        }
    }

    let pk_t = dealer_commitments
        .iter()
        .fold(spec.identity(), |acc, cs| spec.mul(&acc, &cs[0]));

    let verification_keys = (1..=n)
        .map(|j| {
            let mut vk = spec.identity();
            for cs in &dealer_commitments {
                let mut x_pow = spec.scalar_one();
                let x = spec.scalar_from_u64(j as u64);
                for c in cs {
                    vk = spec.mul(&vk, &spec.pow(c, &x_pow));
                    x_pow = spec.s_mul(&x_pow, &x);
                }
            }
            vk
        })
        .collect();

    let shares = (0..n)
        .map(|idx| TellerShare {
            teller_id: idx + 1,
            secret_share: dealt
                .iter()
                .fold(spec.scalar_zero(), |acc, d| spec.s_add(&acc, &d[idx])),
        })
        .collect();

    Ok((
        TellerPublic { n, t, pk_t, dealer_commitments, verification_keys },
        shares,
    ))
}

/// Verifiable decryption share: a^x_k with a proof tying the exponent to
/// the teller's verification key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecryptShare {
    pub teller_id: usize,
    pub partial: GroupElement,
    pub proof: DleqProof,
}

impl Canon for DecryptShare {
    fn encode_into(&self, out: &mut Vec<u8>) {
        crate::codec::put_u32(out, self.teller_id as u32);
        self.partial.encode_into(out);
        self.proof.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(DecryptShare {
            teller_id: r.u32()? as usize,
            partial: GroupElement::decode(r)?,
            proof: DleqProof::decode(r)?,
        })
    }
}

pub fn partial_decrypt(
    spec: &GroupSpec,
    share: &TellerShare,
    c: &Ciphertext,
    ctx: &FsContext,
    rng: &mut dyn RngCore,
) -> DecryptShare {
    let partial = spec.pow(&c.a, &share.secret_share);
    let vk = spec.g_pow(&share.secret_share);
    let mut ctx = ctx.clone();
    ctx.absorb_canon("decrypt-ciphertext", c);
    let proof = prove_dleq(
        spec,
        spec.generator(),
        &vk,
        &c.a,
        &partial,
        &share.secret_share,
        &ctx,
        rng,
    );
    DecryptShare { teller_id: share.teller_id, partial, proof }
}

pub fn verify_decrypt_share(
    spec: &GroupSpec,
    public: &TellerPublic,
    c: &Ciphertext,
    share: &DecryptShare,
    ctx: &FsContext,
) -> Result<(), TellerError> {
    if share.teller_id == 0 || share.teller_id > public.n {
        return Err(TellerError::ShareProofInvalid(share.teller_id));
    }
    let mut ctx = ctx.clone();
    ctx.absorb_canon("decrypt-ciphertext", c);
    verify_dleq_ctx(
        spec,
        spec.generator(),
        public.verification_key(share.teller_id),
        &c.a,
        &share.partial,
        &share.proof,
        &ctx,
    )
    .map_err(|_| TellerError::ShareProofInvalid(share.teller_id))
}

/// Lagrange coefficient at zero for teller `j` over the id set `ids`.
pub fn lagrange_at_zero(spec: &GroupSpec, ids: &[usize], j: usize) -> Scalar {
    let mut num = spec.scalar_one();
    let mut den = spec.scalar_one();
    let xj = spec.scalar_from_u64(j as u64);
    for &l in ids {
        if l == j {
            continue;
        }
        let xl = spec.scalar_from_u64(l as u64);
        num = spec.s_mul(&num, &xl);
        den = spec.s_mul(&den, &spec.s_sub(&xl, &xj));
    }
    spec.s_mul(&num, &spec.s_inv(&den).expect("distinct ids"))
}

/// Combines at least t verified shares into the plaintext.
pub fn combine_decrypt(
    spec: &GroupSpec,
    public: &TellerPublic,
    c: &Ciphertext,
    shares: &[DecryptShare],
    ctx: &FsContext,
) -> Result<GroupElement, TellerError> {
    let mut ids: Vec<usize> = Vec::new();
    let mut used: Vec<&DecryptShare> = Vec::new();
    for s in shares {
        if !ids.contains(&s.teller_id) {
            ids.push(s.teller_id);
            used.push(s);
        }
    }
    if ids.len() < public.t {
        return Err(TellerError::InsufficientShares { got: ids.len(), need: public.t });
    }
    for s in &used {
        verify_decrypt_share(spec, public, c, s, ctx)?;
    }
    let mut denom = spec.identity();
    for s in &used {
        let lambda = lagrange_at_zero(spec, &ids, s.teller_id);
        denom = spec.mul(&denom, &spec.pow(&s.partial, &lambda));
    }
    Ok(spec.div(&c.b, &denom))
}

/// Test oracle: interpolate the full secret key from >= t shares.
pub fn reconstruct_secret(
    spec: &GroupSpec,
    shares: &[&TellerShare],
    t: usize,
) -> Result<Scalar, TellerError> {
    let ids: Vec<usize> = shares.iter().map(|s| s.teller_id).collect();
    if ids.len() < t {
        return Err(TellerError::InsufficientShares { got: ids.len(), need: t });
    }
    let mut sk = spec.scalar_zero();
    for s in shares {
        let lambda = lagrange_at_zero(spec, &ids, s.teller_id);
        sk = spec.s_add(&sk, &spec.s_mul(&lambda, &s.secret_share));
    }
    Ok(sk)
}

// -- distributed tracker-commitment construction --

/// Public posting: an encryption of pk_i^(r_ik) with a proof of knowledge
/// of (r_ik, encryption randomness). The factors multiply homomorphically
/// into the voter's encrypted tracker; the tellers then verifiably decrypt
/// only that combined ciphertext, never the tracker itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitFactorPosting {
    pub teller_id: usize,
    pub voter_index: usize,
    pub enc_factor: Ciphertext,
    pub proof: FactorProof,
}

impl Canon for CommitFactorPosting {
    fn encode_into(&self, out: &mut Vec<u8>) {
        crate::codec::put_u32(out, self.teller_id as u32);
        crate::codec::put_u32(out, self.voter_index as u32);
        self.enc_factor.encode_into(out);
        self.proof.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(CommitFactorPosting {
            teller_id: r.u32()? as usize,
            voter_index: r.u32()? as usize,
            enc_factor: Ciphertext::decode(r)?,
            proof: FactorProof::decode(r)?,
        })
    }
}

/// Proof of knowledge of (r, s) with A = g^s and B = pk_i^r * PK_T^s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorProof {
    pub commitment_a: GroupElement,
    pub commitment_b: GroupElement,
    pub challenge: Scalar,
    pub response_r: Scalar,
    pub response_s: Scalar,
}

impl Canon for FactorProof {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.commitment_a.encode_into(out);
        self.commitment_b.encode_into(out);
        self.challenge.encode_into(out);
        self.response_r.encode_into(out);
        self.response_s.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(FactorProof {
            commitment_a: GroupElement::decode(r)?,
            commitment_b: GroupElement::decode(r)?,
            challenge: Scalar::decode(r)?,
            response_r: Scalar::decode(r)?,
            response_s: Scalar::decode(r)?,
        })
    }
}

/// Private record a teller retains per voter: g^(r_ik) is released only
/// through the tracker-retrieval path, never posted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaShareRecord {
    pub teller_id: usize,
    pub voter_index: usize,
    pub g_exp_share: GroupElement,
    pub commitment_factor: GroupElement,
    pub proof: DleqProof,
}

impl Canon for AlphaShareRecord {
    fn encode_into(&self, out: &mut Vec<u8>) {
        crate::codec::put_u32(out, self.teller_id as u32);
        crate::codec::put_u32(out, self.voter_index as u32);
        self.g_exp_share.encode_into(out);
        self.commitment_factor.encode_into(out);
        self.proof.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(AlphaShareRecord {
            teller_id: r.u32()? as usize,
            voter_index: r.u32()? as usize,
            g_exp_share: GroupElement::decode(r)?,
            commitment_factor: GroupElement::decode(r)?,
            proof: DleqProof::decode(r)?,
        })
    }
}

fn factor_ctx(
    ctx: &FsContext,
    teller_id: usize,
    voter_index: usize,
    voter_pk: &GroupElement,
    pk_t: &GroupElement,
    enc: &Ciphertext,
) -> FsContext {
    let mut ctx = ctx.clone();
    ctx.absorb("factor-teller", &(teller_id as u32).to_be_bytes());
    ctx.absorb("factor-voter", &(voter_index as u32).to_be_bytes());
    ctx.absorb_element("factor-voter-pk", voter_pk);
    ctx.absorb_element("factor-pk-t", pk_t);
    ctx.absorb_canon("factor-enc", enc);
    ctx
}

/// One teller's contribution across all voters: fresh r_ik per voter, a
/// public encrypted factor posting, and the private alpha share record.
pub fn contribute_alpha_factors(
    spec: &GroupSpec,
    teller_id: usize,
    pk_t: &GroupElement,
    voter_pks: &[GroupElement],
    ctx: &FsContext,
    rng: &mut dyn RngCore,
) -> (Vec<AlphaShareRecord>, Vec<CommitFactorPosting>) {
    let mut records = Vec::with_capacity(voter_pks.len());
    let mut postings = Vec::with_capacity(voter_pks.len());
    for (voter_index, voter_pk) in voter_pks.iter().enumerate() {
        let r = spec.rand_scalar_nonzero(rng);
        let s = spec.rand_scalar(rng);
        let factor = spec.pow(voter_pk, &r);
        let enc_factor = Ciphertext {
            a: spec.g_pow(&s),
            b: spec.mul(&factor, &spec.pow(pk_t, &s)),
        };

        let w_r = spec.rand_scalar(rng);
        let w_s = spec.rand_scalar(rng);
        let commitment_a = spec.g_pow(&w_s);
        let commitment_b = spec.mul(&spec.pow(voter_pk, &w_r), &spec.pow(pk_t, &w_s));
        let fctx = factor_ctx(ctx, teller_id, voter_index, voter_pk, pk_t, &enc_factor);
        let challenge = fs_challenge(spec, &fctx, &[commitment_a.clone(), commitment_b.clone()]);
        let proof = FactorProof {
            commitment_a,
            commitment_b,
            challenge: challenge.clone(),
            response_r: spec.s_add(&w_r, &spec.s_mul(&challenge, &r)),
            response_s: spec.s_add(&w_s, &spec.s_mul(&challenge, &s)),
        };
        postings.push(CommitFactorPosting {
            teller_id,
            voter_index,
            enc_factor,
            proof,
        });

        let g_exp_share = spec.g_pow(&r);
        let mut rctx = ctx.clone();
        rctx.absorb("alpha-teller", &(teller_id as u32).to_be_bytes());
        rctx.absorb("alpha-voter", &(voter_index as u32).to_be_bytes());
        let dleq = prove_dleq(
            spec,
            spec.generator(),
            &g_exp_share,
            voter_pk,
            &factor,
            &r,
            &rctx,
            rng,
        );
        records.push(AlphaShareRecord {
            teller_id,
            voter_index,
            g_exp_share,
            commitment_factor: factor,
            proof: dleq,
        });
    }
    (records, postings)
}

pub fn verify_factor_posting(
    spec: &GroupSpec,
    pk_t: &GroupElement,
    voter_pk: &GroupElement,
    posting: &CommitFactorPosting,
    ctx: &FsContext,
) -> Result<(), TellerError> {
    let p = &posting.proof;
    let fctx = factor_ctx(
        ctx,
        posting.teller_id,
        posting.voter_index,
        voter_pk,
        pk_t,
        &posting.enc_factor,
    );
    let expect = fs_challenge(spec, &fctx, &[p.commitment_a.clone(), p.commitment_b.clone()]);
    let ok = expect == p.challenge
        && spec.g_pow(&p.response_s)
            == spec.mul(&p.commitment_a, &spec.pow(&posting.enc_factor.a, &p.challenge))
        && spec.mul(&spec.pow(voter_pk, &p.response_r), &spec.pow(pk_t, &p.response_s))
            == spec.mul(&p.commitment_b, &spec.pow(&posting.enc_factor.b, &p.challenge));
    if ok {
        Ok(())
    } else {
        Err(TellerError::ShareProofInvalid(posting.teller_id))
    }
}

/// Checks the same-exponent link between a private alpha share and its
/// commitment factor.
pub fn verify_alpha_record(
    spec: &GroupSpec,
    voter_pk: &GroupElement,
    record: &AlphaShareRecord,
    ctx: &FsContext,
) -> Result<(), TellerError> {
    let mut rctx = ctx.clone();
    rctx.absorb("alpha-teller", &(record.teller_id as u32).to_be_bytes());
    rctx.absorb("alpha-voter", &(record.voter_index as u32).to_be_bytes());
    verify_dleq_ctx(
        spec,
        spec.generator(),
        &record.g_exp_share,
        voter_pk,
        &record.commitment_factor,
        &record.proof,
        &rctx,
    )
    .map_err(|_| TellerError::ShareProofInvalid(record.teller_id))
}

/// Homomorphic product of the encrypted tracker and every teller factor:
/// an encryption of C_i = pk_i^(sum_k r_ik) * g^(n_pi(i)).
pub fn combine_commitment_ciphertext(
    spec: &GroupSpec,
    enc_tracker: &Ciphertext,
    postings: &[&CommitFactorPosting],
) -> Ciphertext {
    postings
        .iter()
        .fold(enc_tracker.clone(), |acc, p| ct_mul(spec, &acc, &p.enc_factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::elgamal::{decrypt, encrypt_rand, exp_encode};
    use crate::group::seeded_rng;

    fn ctx() -> FsContext {
        FsContext::new(b"ELX-tellers", "test")
    }

    #[test]
    fn dkg_subsets_agree_with_full_key() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "dkg");
        let (public, shares) = dkg(&spec, 3, 2, &mut rng).unwrap();
        let m = exp_encode(&spec, 77);
        let (c, _) = encrypt_rand(&spec, &public.pk_t, &m, &mut rng);

        for subset in [[0usize, 1], [1, 2], [0, 2]] {
            let ds: Vec<DecryptShare> = subset
                .iter()
                .map(|&i| partial_decrypt(&spec, &shares[i], &c, &ctx(), &mut rng))
                .collect();
            assert_eq!(combine_decrypt(&spec, &public, &c, &ds, &ctx()).unwrap(), m);
        }

        let all: Vec<&TellerShare> = shares.iter().collect();
        let sk = reconstruct_secret(&spec, &all, public.t).unwrap();
        assert_eq!(spec.g_pow(&sk), public.pk_t);
        assert_eq!(decrypt(&spec, &sk, &c), m);
    }

    #[test]
    fn corrupted_share_fails_feldman() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "dkg-feldman");
        let coeffs: Vec<Scalar> = (0..2).map(|_| spec.rand_scalar(&mut rng)).collect();
        let commitments: Vec<GroupElement> = coeffs.iter().map(|c| spec.g_pow(c)).collect();
        let share = poly_eval(&spec, &coeffs, 2);
        assert!(feldman_verify(&spec, &commitments, 2, &share));
        let bad = spec.s_add(&share, &spec.scalar_one());
        assert!(!feldman_verify(&spec, &commitments, 2, &bad));
    }

    #[test]
    fn single_teller_degenerates_to_elgamal() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "dkg-1");
        let (public, shares) = dkg(&spec, 1, 1, &mut rng).unwrap();
        assert_eq!(spec.g_pow(&shares[0].secret_share), public.pk_t);
        let m = exp_encode(&spec, 5);
        let (c, _) = encrypt_rand(&spec, &public.pk_t, &m, &mut rng);
        let ds = partial_decrypt(&spec, &shares[0], &c, &ctx(), &mut rng);
        assert_eq!(combine_decrypt(&spec, &public, &c, &[ds], &ctx()).unwrap(), m);
    }

    #[test]
    fn bad_parameters() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "dkg-bad");
        assert!(dkg(&spec, 2, 3, &mut rng).is_err());
        assert!(dkg(&spec, 0, 0, &mut rng).is_err());
    }

    #[test]
    fn tampered_partial_rejected() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "dkg-tamper");
        let (public, shares) = dkg(&spec, 3, 2, &mut rng).unwrap();
        let m = exp_encode(&spec, 8);
        let (c, _) = encrypt_rand(&spec, &public.pk_t, &m, &mut rng);
        let mut ds: Vec<DecryptShare> = shares
            .iter()
            .take(2)
            .map(|s| partial_decrypt(&spec, s, &c, &ctx(), &mut rng))
            .collect();
        ds[0].partial = spec.mul(&ds[0].partial, spec.generator());
        assert_eq!(
            combine_decrypt(&spec, &public, &c, &ds, &ctx()),
            Err(TellerError::ShareProofInvalid(1))
        );
    }

    #[test]
    fn below_threshold_rejected() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "dkg-thresh");
        let (public, shares) = dkg(&spec, 3, 2, &mut rng).unwrap();
        let m = exp_encode(&spec, 8);
        let (c, _) = encrypt_rand(&spec, &public.pk_t, &m, &mut rng);
        let ds = vec![partial_decrypt(&spec, &shares[0], &c, &ctx(), &mut rng)];
        assert_eq!(
            combine_decrypt(&spec, &public, &c, &ds, &ctx()),
            Err(TellerError::InsufficientShares { got: 1, need: 2 })
        );
        let one: Vec<&TellerShare> = shares.iter().take(1).collect();
        assert!(reconstruct_secret(&spec, &one, 2).is_err());
    }

    #[test]
    fn randomized_threshold_equals_direct_decryption() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "dkg-rand");
        let (public, shares) = dkg(&spec, 3, 2, &mut rng).unwrap();
        let all: Vec<&TellerShare> = shares.iter().collect();
        let sk = reconstruct_secret(&spec, &all, public.t).unwrap();
        for i in 0..100u64 {
            let m = spec.g_pow(&spec.rand_scalar(&mut rng));
            let (c, _) = encrypt_rand(&spec, &public.pk_t, &m, &mut rng);
            let pick = [(i % 3) as usize, ((i + 1) % 3) as usize];
            let ds: Vec<DecryptShare> = pick
                .iter()
                .map(|&k| partial_decrypt(&spec, &shares[k], &c, &ctx(), &mut rng))
                .collect();
            let via_shares = combine_decrypt(&spec, &public, &c, &ds, &ctx()).unwrap();
            assert_eq!(via_shares, decrypt(&spec, &sk, &c));
            assert_eq!(via_shares, m);
        }
    }

    #[test]
    fn commitment_construction_identity() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "alpha");
        let (public, shares) = dkg(&spec, 3, 2, &mut rng).unwrap();
        let voter = crate::group::elgamal::keygen(&spec, &mut rng);
        let tracker = exp_encode(&spec, 4);
        let (enc_tracker, _) = encrypt_rand(&spec, &public.pk_t, &tracker, &mut rng);

        let mut all_records = Vec::new();
        let mut all_postings = Vec::new();
        for k in 1..=3 {
            let (records, postings) = contribute_alpha_factors(
                &spec,
                k,
                &public.pk_t,
                std::slice::from_ref(&voter.pk),
                &ctx(),
                &mut rng,
            );
            for p in &postings {
                verify_factor_posting(&spec, &public.pk_t, &voter.pk, p, &ctx()).unwrap();
            }
            for r in &records {
                verify_alpha_record(&spec, &voter.pk, r, &ctx()).unwrap();
            }
            all_records.push(records.into_iter().next().unwrap());
            all_postings.push(postings.into_iter().next().unwrap());
        }

        let refs: Vec<&CommitFactorPosting> = all_postings.iter().collect();
        let enc_c = combine_commitment_ciphertext(&spec, &enc_tracker, &refs);
        let ds: Vec<DecryptShare> = shares
            .iter()
            .take(2)
            .map(|s| partial_decrypt(&spec, s, &enc_c, &ctx(), &mut rng))
            .collect();
        let c_i = combine_decrypt(&spec, &public, &enc_c, &ds, &ctx()).unwrap();

        // alpha = prod g^(r_ik); (alpha, C_i) decrypts to the tracker under
        // the voter's trapdoor key
        let alpha = all_records
            .iter()
            .fold(spec.identity(), |acc, r| spec.mul(&acc, &r.g_exp_share));
        let opened = spec.div(&c_i, &spec.pow(&alpha, &voter.sk));
        assert_eq!(opened, tracker);

        // additivity: same C_i as a single contribution with r = r1+r2+r3
        let factor_product = all_records
            .iter()
            .fold(spec.identity(), |acc, r| spec.mul(&acc, &r.commitment_factor));
        assert_eq!(c_i, spec.mul(&factor_product, &tracker));
    }

    #[test]
    fn single_teller_factor_formula() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "alpha-1");
        let (public, _) = dkg(&spec, 1, 1, &mut rng).unwrap();
        let voter = crate::group::elgamal::keygen(&spec, &mut rng);
        let (records, _) = contribute_alpha_factors(
            &spec,
            1,
            &public.pk_t,
            std::slice::from_ref(&voter.pk),
            &ctx(),
            &mut rng,
        );
        let r = &records[0];
        // the record's factor is exactly pk^r for the retained g^r
        let tracker = exp_encode(&spec, 9);
        let c_i = spec.mul(&r.commitment_factor, &tracker);
        assert_eq!(spec.div(&c_i, &spec.pow(&r.g_exp_share, &voter.sk)), tracker);
    }
}
