//! Prime-order group backends.
//!
//! Both backends are the order-q subgroup of quadratic residues modulo a
//! safe prime p = 2q + 1. `TestGroup` uses a 17-bit q so discrete logs are
//! brute-forceable by test oracles; `ProdGroup` uses a 255-bit q. The safe
//! prime shape gives two properties every other module relies on:
//!
//! * membership is a single exponentiation (x^q == 1), and
//! * arbitrary byte blocks embed into the group by try-and-increment over
//!   an 8-bit counter, since half of all residues are squares.

pub mod elgamal;
pub mod rcca;
pub mod schnorr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::{Canon, CodecError, Reader};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("group parameter rejected: {0}")]
    BadParameters(&'static str),
    #[error("value is not a member of the group")]
    NotAMember,
    #[error("payload of {got} bytes exceeds block width {width}")]
    BlockTooWide { got: usize, width: usize },
    #[error("no encoding found within the 8-bit counter range")]
    EncodingExhausted,
    #[error("no exponent at or below {max_n} matches")]
    NotInRange { max_n: u64 },
    #[error("scalar has no inverse")]
    NoInverse,
}

/// Which parameter set a [`GroupSpec`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Small published subgroup (q ~ 2^17); discrete logs brute-forceable.
    TestGroup,
    /// 256-bit safe-prime group; order well above 2^250.
    ProdGroup,
}

/// An element of the quadratic-residue subgroup.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(pub(crate) BigUint);

/// An exponent reduced modulo the group order q.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scalar(pub(crate) BigUint);

impl GroupElement {
    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }
}

impl Scalar {
    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl Canon for GroupElement {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(GroupElement(BigUint::decode(r)?))
    }
}

impl Canon for Scalar {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.0.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Scalar(BigUint::decode(r)?))
    }
}

// TestGroup: q = 131063, p = 2q + 1 = 262127, both prime; g = 4 = 2^2.
const TEST_P: u64 = 262_127;
const TEST_Q: u64 = 131_063;

// ProdGroup: 256-bit safe prime found by deterministic search from
// SHA-256("electryo-v1-prod-group"); q = (p - 1) / 2 is prime.
const PROD_P_HEX: &str = "b3b3777cfedc95428ce7e1d15b45d2f9257714cf851e8e3a334453e118641ceb";
const PROD_Q_HEX: &str = "59d9bbbe7f6e4aa14673f0e8ada2e97c92bb8a67c28f471d19a229f08c320e75";

/// Group parameters plus the arithmetic context every operation needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSpec {
    pub name: String,
    pub p: BigUint,
    pub q: BigUint,
    pub g: GroupElement,
    pub backend: Backend,
}

impl GroupSpec {
    pub fn test_group() -> Self {
        GroupSpec {
            name: "qr-safe-prime-18".into(),
            p: BigUint::from(TEST_P),
            q: BigUint::from(TEST_Q),
            g: GroupElement(BigUint::from(4u8)),
            backend: Backend::TestGroup,
        }
    }

    pub fn prod_group() -> Self {
        GroupSpec {
            name: "qr-safe-prime-256".into(),
            p: BigUint::parse_bytes(PROD_P_HEX.as_bytes(), 16).unwrap(),
            q: BigUint::parse_bytes(PROD_Q_HEX.as_bytes(), 16).unwrap(),
            g: GroupElement(BigUint::from(4u8)),
            backend: Backend::ProdGroup,
        }
    }

    pub fn by_backend(backend: Backend) -> Self {
        match backend {
            Backend::TestGroup => Self::test_group(),
            Backend::ProdGroup => Self::prod_group(),
        }
    }

    /// Checks the structural invariants: p and q prime, p = 2q + 1, g a
    /// generator of the order-q subgroup, and the backend order bounds.
    pub fn validate(&self) -> Result<(), GroupError> {
        if !is_probable_prime(&self.p) || !is_probable_prime(&self.q) {
            return Err(GroupError::BadParameters("p or q not prime"));
        }
        if self.p != BigUint::from(2u8) * &self.q + BigUint::one() {
            return Err(GroupError::BadParameters("p != 2q + 1"));
        }
        if self.g.0 <= BigUint::one() || self.g.0 >= self.p {
            return Err(GroupError::BadParameters("generator out of range"));
        }
        if self.g.0.modpow(&self.q, &self.p) != BigUint::one() {
            return Err(GroupError::BadParameters("generator order does not divide q"));
        }
        match self.backend {
            Backend::TestGroup => {
                if self.q.bits() > 20 {
                    return Err(GroupError::BadParameters("test group order above 2^20"));
                }
            }
            Backend::ProdGroup => {
                if self.q.bits() < 251 {
                    return Err(GroupError::BadParameters("prod group order below 2^250"));
                }
            }
        }
        Ok(())
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(BigUint::one())
    }

    pub fn generator(&self) -> &GroupElement {
        &self.g
    }

    pub fn is_member(&self, e: &GroupElement) -> bool {
        !e.0.is_zero() && e.0 < self.p && e.0.modpow(&self.q, &self.p) == BigUint::one()
    }

    pub fn check_member(&self, e: &GroupElement) -> Result<(), GroupError> {
        if self.is_member(e) {
            Ok(())
        } else {
            Err(GroupError::NotAMember)
        }
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement((&a.0 * &b.0) % &self.p)
    }

    pub fn div(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.mul(a, &self.invert(b))
    }

    pub fn invert(&self, a: &GroupElement) -> GroupElement {
        // a^(p-2) mod p
        let e = &self.p - BigUint::from(2u8);
        GroupElement(a.0.modpow(&e, &self.p))
    }

    pub fn pow(&self, base: &GroupElement, s: &Scalar) -> GroupElement {
        GroupElement(base.0.modpow(&s.0, &self.p))
    }

    pub fn g_pow(&self, s: &Scalar) -> GroupElement {
        self.pow(&self.g, s)
    }

    // -- scalar field arithmetic (mod q) --

    pub fn scalar_from_u64(&self, v: u64) -> Scalar {
        Scalar(BigUint::from(v) % &self.q)
    }

    pub fn scalar_from_bytes(&self, bytes: &[u8]) -> Scalar {
        Scalar(BigUint::from_bytes_be(bytes) % &self.q)
    }

    pub fn scalar_zero(&self) -> Scalar {
        Scalar(BigUint::zero())
    }

    pub fn scalar_one(&self) -> Scalar {
        Scalar(BigUint::one())
    }

    pub fn s_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % &self.q)
    }

    pub fn s_sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &self.q - (&b.0 % &self.q)) % &self.q)
    }

    pub fn s_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 * &b.0) % &self.q)
    }

    pub fn s_neg(&self, a: &Scalar) -> Scalar {
        if a.0.is_zero() {
            Scalar(BigUint::zero())
        } else {
            Scalar(&self.q - &a.0)
        }
    }

    pub fn s_inv(&self, a: &Scalar) -> Result<Scalar, GroupError> {
        if a.0.is_zero() {
            return Err(GroupError::NoInverse);
        }
        // q is prime, so a^(q-2) inverts
        let e = &self.q - BigUint::from(2u8);
        Ok(Scalar(a.0.modpow(&e, &self.q)))
    }

    /// Uniform scalar in [0, q).
    pub fn rand_scalar(&self, rng: &mut dyn RngCore) -> Scalar {
        let width = self.scalar_width();
        let bits = self.q.bits();
        loop {
            let mut buf = vec![0u8; width];
            rng.fill_bytes(&mut buf);
            let mut v = BigUint::from_bytes_be(&buf);
            let excess = (width as u64) * 8 - bits;
            v >>= excess as usize;
            if v < self.q {
                return Scalar(v);
            }
        }
    }

    /// Uniform scalar in [1, q).
    pub fn rand_scalar_nonzero(&self, rng: &mut dyn RngCore) -> Scalar {
        loop {
            let s = self.rand_scalar(rng);
            if !s.0.is_zero() {
                return s;
            }
        }
    }

    // -- fixed widths used by wire formats --

    /// Bytes needed to carry an element value (ceil of |p| bits / 8).
    pub fn element_width(&self) -> usize {
        ((self.p.bits() + 7) / 8) as usize
    }

    /// Bytes needed to carry a scalar (ceil of |q| bits / 8).
    pub fn scalar_width(&self) -> usize {
        ((self.q.bits() + 7) / 8) as usize
    }

    /// Payload bytes a single group element can embed: one byte is spent on
    /// the try-and-increment counter and the value must stay below q.
    pub fn block_width(&self) -> usize {
        ((self.q.bits() - 1) / 8) as usize - 1
    }

    /// Truncated-challenge width for signatures (full scalars are used for
    /// proof challenges; signatures travel inside width-limited payloads).
    pub fn sig_challenge_width(&self) -> usize {
        match self.backend {
            Backend::TestGroup => 2,
            Backend::ProdGroup => 8,
        }
    }

    // -- byte-block embedding --

    /// Embeds `payload` (at most [`Self::block_width`] bytes, left-padded
    /// with zeros to exactly that width) into a group element by scanning
    /// an 8-bit counter for a quadratic residue.
    pub fn encode_block(&self, payload: &[u8]) -> Result<GroupElement, GroupError> {
        let width = self.block_width();
        if payload.len() > width {
            return Err(GroupError::BlockTooWide { got: payload.len(), width });
        }
        let mut fixed = vec![0u8; width - payload.len()];
        fixed.extend_from_slice(payload);
        for counter in 0u16..256 {
            let mut bytes = fixed.clone();
            bytes.push(counter as u8);
            let v = BigUint::from_bytes_be(&bytes);
            if v > BigUint::one() && v.modpow(&self.q, &self.p) == BigUint::one() {
                return Ok(GroupElement(v));
            }
        }
        Err(GroupError::EncodingExhausted)
    }

    /// Inverse of [`Self::encode_block`]: strips the counter byte and
    /// returns the fixed-width payload.
    pub fn decode_block(&self, e: &GroupElement) -> Result<Vec<u8>, GroupError> {
        let width = self.block_width();
        let mut bytes = e.0.to_bytes_be();
        if bytes.len() > width + 1 {
            return Err(GroupError::NotAMember);
        }
        while bytes.len() < width + 1 {
            bytes.insert(0, 0);
        }
        bytes.pop();
        Ok(bytes)
    }

    /// Hashes arbitrary bytes to a group element with no known discrete
    /// log: the digest is reduced mod p and squared, which lands in the
    /// quadratic-residue subgroup.
    pub fn hash_to_group(&self, domain: &str, data: &[u8]) -> GroupElement {
        for counter in 0u32.. {
            let mut h = Sha256::new();
            h.update(b"electryo-h2g");
            h.update((domain.len() as u32).to_be_bytes());
            h.update(domain.as_bytes());
            h.update(data);
            h.update(counter.to_be_bytes());
            let mut stream = h.finalize().to_vec();
            // widen the digest past |p| so the reduction is near-uniform
            while (stream.len() as u64) * 8 < self.p.bits() + 64 {
                let mut h2 = Sha256::new();
                h2.update(b"electryo-h2g-ext");
                h2.update(&stream);
                stream.extend_from_slice(&h2.finalize());
            }
            let v = BigUint::from_bytes_be(&stream) % &self.p;
            let sq = (&v * &v) % &self.p;
            if sq > BigUint::one() {
                return GroupElement(sq);
            }
        }
        unreachable!()
    }
}

/// Deterministic sub-generator for replayable protocol runs: every actor
/// derives its stream from the master seed and a distinct label.
pub fn seeded_rng(seed: &[u8], label: &str) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"electryo-rng");
    h.update((seed.len() as u32).to_be_bytes());
    h.update(seed);
    h.update(label.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha20Rng::from_seed(key)
}

/// Miller-Rabin with fixed bases: deterministic for 64-bit inputs, 40
/// pseudorandom rounds (derived from the candidate) above that.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u8);
    if *n < two {
        return false;
    }
    if n.is_even() {
        return *n == two;
    }
    let n_minus_1 = n - BigUint::one();
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;

    let small_bases: &[u64] = &[2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let mut bases: Vec<BigUint> = Vec::new();
    if n.bits() <= 64 {
        bases.extend(small_bases.iter().map(|&b| BigUint::from(b)));
    } else {
        let nb = n.to_bytes_be();
        for i in 0u32..40 {
            let mut h = Sha256::new();
            h.update(b"mr-base");
            h.update(&nb);
            h.update(i.to_be_bytes());
            let v = BigUint::from_bytes_be(&h.finalize()) % (n - &two - &two) + &two;
            bases.push(v);
        }
    }

    'outer: for a in bases {
        let a = a % n;
        if a.is_zero() {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x == BigUint::one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}
