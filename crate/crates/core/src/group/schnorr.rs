//! Schnorr signatures over the election group. The challenge is a
//! truncated hash (classic short-e Schnorr) so the signature wire format
//! fits the re-encryptable payload widths; messages are expected to embed
//! the election identifier, which the ballot-signing path enforces.

use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::codec::{Canon, CodecError, Reader};
use crate::group::{GroupElement, GroupSpec, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigningKeyPair {
    pub vk: GroupElement,
    pub sigk: Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub challenge: Scalar,
    pub response: Scalar,
}

impl Canon for Signature {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.challenge.encode_into(out);
        self.response.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Signature {
            challenge: Scalar::decode(r)?,
            response: Scalar::decode(r)?,
        })
    }
}

pub fn sig_keygen(spec: &GroupSpec, rng: &mut dyn RngCore) -> SigningKeyPair {
    let sigk = spec.rand_scalar_nonzero(rng);
    let vk = spec.g_pow(&sigk);
    SigningKeyPair { vk, sigk }
}

fn challenge(spec: &GroupSpec, vk: &GroupElement, commitment: &GroupElement, msg: &[u8]) -> Scalar {
    let mut h = Sha256::new();
    h.update(b"electryo-schnorr-sig");
    h.update(&vk.encode());
    h.update(&commitment.encode());
    h.update((msg.len() as u64).to_be_bytes());
    h.update(msg);
    let digest = h.finalize();
    spec.scalar_from_bytes(&digest[..spec.sig_challenge_width()])
}

pub fn sign(spec: &GroupSpec, sigk: &Scalar, msg: &[u8], rng: &mut dyn RngCore) -> Signature {
    let k = spec.rand_scalar(rng);
    let commitment = spec.g_pow(&k);
    let vk = spec.g_pow(sigk);
    let c = challenge(spec, &vk, &commitment, msg);
    let response = spec.s_add(&k, &spec.s_mul(&c, sigk));
    Signature { challenge: c, response }
}

pub fn verify_sig(spec: &GroupSpec, vk: &GroupElement, msg: &[u8], sig: &Signature) -> bool {
    if !spec.is_member(vk) {
        return false;
    }
    // R = g^s * vk^(-c), accept iff it reproduces the challenge
    let commitment = spec.mul(
        &spec.g_pow(&sig.response),
        &spec.invert(&spec.pow(vk, &sig.challenge)),
    );
    challenge(spec, vk, &commitment, msg) == sig.challenge
}

/// Fixed wire width of a signature: truncated challenge plus one scalar.
pub fn signature_wire_len(spec: &GroupSpec) -> usize {
    spec.sig_challenge_width() + spec.scalar_width()
}

/// Fixed-width packing used inside re-encryptable payloads.
pub fn signature_to_wire(spec: &GroupSpec, sig: &Signature) -> Vec<u8> {
    let mut out = Vec::with_capacity(signature_wire_len(spec));
    let cw = spec.sig_challenge_width();
    let sw = spec.scalar_width();
    let mut c = sig.challenge.0.to_bytes_be();
    let mut s = sig.response.0.to_bytes_be();
    assert!(c.len() <= cw && s.len() <= sw);
    while c.len() < cw {
        c.insert(0, 0);
    }
    while s.len() < sw {
        s.insert(0, 0);
    }
    out.extend_from_slice(&c);
    out.extend_from_slice(&s);
    out
}

pub fn signature_from_wire(spec: &GroupSpec, wire: &[u8]) -> Option<Signature> {
    if wire.len() != signature_wire_len(spec) {
        return None;
    }
    let cw = spec.sig_challenge_width();
    let challenge = spec.scalar_from_bytes(&wire[..cw]);
    let response = spec.scalar_from_bytes(&wire[cw..]);
    Some(Signature { challenge, response })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::seeded_rng;

    #[test]
    fn sign_verify_both_backends() {
        for spec in [GroupSpec::test_group(), GroupSpec::prod_group()] {
            let mut rng = seeded_rng(b"seed", "sig");
            let kp = sig_keygen(&spec, &mut rng);
            let msg = b"voter-7|ELX-2026-aabbcc";
            let sig = sign(&spec, &kp.sigk, msg, &mut rng);
            assert!(verify_sig(&spec, &kp.vk, msg, &sig));
        }
    }

    #[test]
    fn wrong_key_rejected() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "sig-wrong");
        let kp = sig_keygen(&spec, &mut rng);
        let other = sig_keygen(&spec, &mut rng);
        let sig = sign(&spec, &kp.sigk, b"msg", &mut rng);
        assert!(!verify_sig(&spec, &other.vk, b"msg", &sig));
    }

    #[test]
    fn different_election_id_rejected() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "sig-eid");
        let kp = sig_keygen(&spec, &mut rng);
        let sig = sign(&spec, &kp.sigk, b"voter-7|ELX-A", &mut rng);
        assert!(!verify_sig(&spec, &kp.vk, b"voter-7|ELX-B", &sig));
    }

    #[test]
    fn mutation_rejected() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "sig-mut");
        let kp = sig_keygen(&spec, &mut rng);
        let msg = b"msg".to_vec();
        let sig = sign(&spec, &kp.sigk, &msg, &mut rng);

        let mut msg2 = msg.clone();
        msg2[0] ^= 1;
        assert!(!verify_sig(&spec, &kp.vk, &msg2, &sig));

        let bumped = |s: &Scalar| spec.s_add(s, &spec.scalar_one());
        let bad_c = Signature { challenge: bumped(&sig.challenge), response: sig.response.clone() };
        let bad_s = Signature { challenge: sig.challenge.clone(), response: bumped(&sig.response) };
        assert!(!verify_sig(&spec, &kp.vk, &msg, &bad_c));
        assert!(!verify_sig(&spec, &kp.vk, &msg, &bad_s));
    }

    #[test]
    fn wire_round_trip() {
        for spec in [GroupSpec::test_group(), GroupSpec::prod_group()] {
            let mut rng = seeded_rng(b"seed", "sig-wire");
            let kp = sig_keygen(&spec, &mut rng);
            let sig = sign(&spec, &kp.sigk, b"m", &mut rng);
            let wire = signature_to_wire(&spec, &sig);
            assert_eq!(wire.len(), signature_wire_len(&spec));
            assert_eq!(signature_from_wire(&spec, &wire).unwrap(), sig);
        }
    }
}
