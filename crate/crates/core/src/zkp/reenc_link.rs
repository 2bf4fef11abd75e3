//! The AND-proof binding a scanner tuple together: the published
//! re-encrypted ballot-code ciphertexts are re-encryptions of exactly the
//! printed ciphertexts whose components sit, element by element, inside
//! the published component encryptions.
//!
//! With printed component X, component encryption E = (g^u, X * PK^u) and
//! published component X' = X * base^s (base is g for first components and
//! PK for second components of each ElGamal pair), the prover shows
//! knowledge of (u, s) with E.a = g^u and E.b / X' = PK^u * base^(-s),
//! one linear sigma equation pair per component, sharing s across the two
//! components of each pair.

use rand::RngCore;

use crate::codec::{Canon, CodecError, Reader};
use crate::group::elgamal::Ciphertext;
use crate::group::rcca::RccaCiphertext;
use crate::group::{GroupElement, GroupSpec, Scalar};
use crate::zkp::fs::{fs_challenge, FsContext};
use crate::zkp::ZkpError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReencLinkProof {
    /// Two commitments per component: the g-side and the mask-side.
    pub commitments: Vec<GroupElement>,
    pub challenge: Scalar,
    /// One response per component (encryption randomness u_j).
    pub responses_u: Vec<Scalar>,
    /// One response per ElGamal pair (re-encryption randomness s_t).
    pub responses_s: Vec<Scalar>,
}

impl Canon for ReencLinkProof {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.commitments.encode_into(out);
        self.challenge.encode_into(out);
        self.responses_u.encode_into(out);
        self.responses_s.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(ReencLinkProof {
            commitments: Vec::<GroupElement>::decode(r)?,
            challenge: Scalar::decode(r)?,
            responses_u: Vec::<Scalar>::decode(r)?,
            responses_s: Vec::<Scalar>::decode(r)?,
        })
    }
}

/// Secrets held by the scanner: per-component encryption randomness and
/// per-pair re-encryption randomness, in flattening order.
#[derive(Debug, Clone)]
pub struct ReencLinkWitness {
    pub enc_randomness: Vec<Scalar>,
    pub reenc_randomness: Vec<Scalar>,
}

/// Flattens chunk ciphertexts to ElGamal pairs in canonical order.
pub fn flatten_pairs(chunks: &[RccaCiphertext]) -> Vec<&Ciphertext> {
    chunks.iter().flat_map(|c| [&c.c1, &c.c2]).collect()
}

fn statement_ctx(
    ctx: &FsContext,
    pk_t: &GroupElement,
    published: &[RccaCiphertext],
    code_encryptions: &[Ciphertext],
) -> FsContext {
    let mut ctx = ctx.clone();
    ctx.absorb_element("link-pk-t", pk_t);
    ctx.absorb_canon("link-published", &published.to_vec());
    ctx.absorb_canon("link-code-encryptions", &code_encryptions.to_vec());
    ctx
}

/// base for the s-term of component j: first components re-encrypt by
/// g^s, second components by PK^s.
fn component_base<'a>(spec: &'a GroupSpec, pk_t: &'a GroupElement, j: usize) -> &'a GroupElement {
    if j % 2 == 0 {
        spec.generator()
    } else {
        pk_t
    }
}

fn component_value<'a>(pairs: &'a [&'a Ciphertext], j: usize) -> &'a GroupElement {
    let pair = pairs[j / 2];
    if j % 2 == 0 {
        &pair.a
    } else {
        &pair.b
    }
}

pub fn prove_reenc_link(
    spec: &GroupSpec,
    pk_t: &GroupElement,
    published: &[RccaCiphertext],
    code_encryptions: &[Ciphertext],
    witness: &ReencLinkWitness,
    ctx: &FsContext,
    rng: &mut dyn RngCore,
) -> Result<ReencLinkProof, ZkpError> {
    let pairs = flatten_pairs(published);
    let n_components = 2 * pairs.len();
    if code_encryptions.len() != n_components
        || witness.enc_randomness.len() != n_components
        || witness.reenc_randomness.len() != pairs.len()
    {
        return Err(ZkpError::Malformed("reenc-link arity"));
    }

    let w_u: Vec<Scalar> = (0..n_components).map(|_| spec.rand_scalar(rng)).collect();
    let w_s: Vec<Scalar> = (0..pairs.len()).map(|_| spec.rand_scalar(rng)).collect();

    let mut commitments = Vec::with_capacity(2 * n_components);
    for j in 0..n_components {
        let base = component_base(spec, pk_t, j);
        commitments.push(spec.g_pow(&w_u[j]));
        commitments.push(spec.div(
            &spec.pow(pk_t, &w_u[j]),
            &spec.pow(base, &w_s[j / 2]),
        ));
    }

    let full = statement_ctx(ctx, pk_t, published, code_encryptions);
    let challenge = fs_challenge(spec, &full, &commitments);

    let responses_u = (0..n_components)
        .map(|j| spec.s_add(&w_u[j], &spec.s_mul(&challenge, &witness.enc_randomness[j])))
        .collect();
    let responses_s = (0..pairs.len())
        .map(|t| spec.s_add(&w_s[t], &spec.s_mul(&challenge, &witness.reenc_randomness[t])))
        .collect();

    Ok(ReencLinkProof { commitments, challenge, responses_u, responses_s })
}

pub fn verify_reenc_link(
    spec: &GroupSpec,
    pk_t: &GroupElement,
    published: &[RccaCiphertext],
    code_encryptions: &[Ciphertext],
    proof: &ReencLinkProof,
    ctx: &FsContext,
) -> Result<(), ZkpError> {
    let pairs = flatten_pairs(published);
    let n_components = 2 * pairs.len();
    if code_encryptions.len() != n_components
        || proof.commitments.len() != 2 * n_components
        || proof.responses_u.len() != n_components
        || proof.responses_s.len() != pairs.len()
        || pairs.is_empty()
    {
        return Err(ZkpError::Malformed("reenc-link arity"));
    }

    let full = statement_ctx(ctx, pk_t, published, code_encryptions);
    let expect = fs_challenge(spec, &full, &proof.commitments);
    if expect != proof.challenge {
        return Err(ZkpError::VerifyFailed("reenc-link challenge mismatch"));
    }

    for j in 0..n_components {
        let e = &code_encryptions[j];
        let base = component_base(spec, pk_t, j);
        let published_component = component_value(&pairs, j);
        let t1 = &proof.commitments[2 * j];
        let t2 = &proof.commitments[2 * j + 1];
        let zu = &proof.responses_u[j];
        let zs = &proof.responses_s[j / 2];

        if spec.g_pow(zu) != spec.mul(t1, &spec.pow(&e.a, &proof.challenge)) {
            return Err(ZkpError::VerifyFailed("reenc-link g-side equation"));
        }
        let target = spec.div(&e.b, published_component);
        let lhs = spec.div(&spec.pow(pk_t, zu), &spec.pow(base, zs));
        let rhs = spec.mul(t2, &spec.pow(&target, &proof.challenge));
        if lhs != rhs {
            return Err(ZkpError::VerifyFailed("reenc-link mask-side equation"));
        }
    }
    Ok(())
}
