//! Verifiable parallel re-encryption mix.
//!
//! The shuffle argument is a permutation-commitment argument in the
//! Terelius-Wikstrom style: the prover commits to the permutation against
//! independent generators, builds a commitment chain over the permuted
//! challenges, and answers for the aggregate re-encryption randomness of
//! every ciphertext slot. One permutation commitment is shared across all
//! slots of a row, which is exactly the parallel property: every slot of
//! row j moves to the same output position.
//!
//! Re-encryptable RCCA ciphertexts occupy two ElGamal sub-slots each; the
//! binding digest is recomputed from the re-encrypted components when rows
//! are rebuilt.

use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::{Canon, CodecError, Reader};
use crate::group::elgamal::{reencrypt, Ciphertext};
use crate::group::rcca::{compute_binding, RccaCiphertext};
use crate::group::{GroupElement, GroupSpec, Scalar};
use crate::zkp::fs::{fs_challenge, FsContext};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MixError {
    #[error("batch malformed: {0}")]
    BatchMalformed(&'static str),
    #[error("shuffle verification failed: {0}")]
    VerifyFailed(&'static str),
    #[error("cascade stage {stage} invalid: {reason}")]
    StageProofInvalid { stage: usize, reason: String },
}

/// Declared kind of each ciphertext slot in a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    ElGamal,
    Rcca,
}

impl SlotKind {
    fn pair_count(self) -> usize {
        match self {
            SlotKind::ElGamal => 1,
            SlotKind::Rcca => 2,
        }
    }
}

impl Canon for SlotKind {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(match self {
            SlotKind::ElGamal => 0,
            SlotKind::Rcca => 1,
        });
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        match r.u8()? {
            0 => Ok(SlotKind::ElGamal),
            1 => Ok(SlotKind::Rcca),
            _ => Err(CodecError::Malformed("unknown slot kind")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MixSlot {
    ElGamal(Ciphertext),
    Rcca(RccaCiphertext),
}

impl MixSlot {
    fn kind(&self) -> SlotKind {
        match self {
            MixSlot::ElGamal(_) => SlotKind::ElGamal,
            MixSlot::Rcca(_) => SlotKind::Rcca,
        }
    }
}

impl Canon for MixSlot {
    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            MixSlot::ElGamal(c) => {
                out.push(0);
                c.encode_into(out);
            }
            MixSlot::Rcca(c) => {
                out.push(1);
                c.encode_into(out);
            }
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        match r.u8()? {
            0 => Ok(MixSlot::ElGamal(Ciphertext::decode(r)?)),
            1 => Ok(MixSlot::Rcca(RccaCiphertext::decode(r)?)),
            _ => Err(CodecError::Malformed("unknown slot tag")),
        }
    }
}

/// Rows of mixed-kind ciphertext tuples sharing one slot layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixBatch {
    pub slot_kinds: Vec<SlotKind>,
    pub rows: Vec<Vec<MixSlot>>,
}

impl Canon for MixBatch {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.slot_kinds.encode_into(out);
        crate::codec::put_u32(out, self.rows.len() as u32);
        for row in &self.rows {
            row.encode_into(out);
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let slot_kinds = Vec::<SlotKind>::decode(r)?;
        let n = r.u32()? as usize;
        let mut rows = Vec::with_capacity(n.min(65536));
        for _ in 0..n {
            rows.push(Vec::<MixSlot>::decode(r)?);
        }
        Ok(MixBatch { slot_kinds, rows })
    }
}

impl MixBatch {
    pub fn validate(&self) -> Result<(), MixError> {
        if self.rows.len() < 2 {
            return Err(MixError::BatchMalformed("need at least 2 rows"));
        }
        if self.slot_kinds.is_empty() {
            return Err(MixError::BatchMalformed("need at least 1 slot"));
        }
        for row in &self.rows {
            if row.len() != self.slot_kinds.len() {
                return Err(MixError::BatchMalformed("row arity mismatch"));
            }
            for (slot, kind) in row.iter().zip(&self.slot_kinds) {
                if slot.kind() != *kind {
                    return Err(MixError::BatchMalformed("slot kind mismatch"));
                }
            }
        }
        Ok(())
    }

    /// Number of flat ElGamal pairs per row.
    pub fn flat_width(&self) -> usize {
        self.slot_kinds.iter().map(|k| k.pair_count()).sum()
    }

    /// Flattens each row into its underlying ElGamal pairs.
    pub fn flat_rows(&self) -> Vec<Vec<Ciphertext>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .flat_map(|slot| match slot {
                        MixSlot::ElGamal(c) => vec![c.clone()],
                        MixSlot::Rcca(c) => vec![c.c1.clone(), c.c2.clone()],
                    })
                    .collect()
            })
            .collect()
    }

    /// Rebuilds typed rows from flat pairs, recomputing RCCA bindings.
    pub fn from_flat(
        spec: &GroupSpec,
        election_id: &[u8],
        slot_kinds: &[SlotKind],
        flat: Vec<Vec<Ciphertext>>,
    ) -> Self {
        let rows = flat
            .into_iter()
            .map(|mut pairs| {
                pairs.reverse(); // pop from the front in order
                let mut row = Vec::with_capacity(slot_kinds.len());
                for kind in slot_kinds {
                    match kind {
                        SlotKind::ElGamal => row.push(MixSlot::ElGamal(pairs.pop().unwrap())),
                        SlotKind::Rcca => {
                            let c1 = pairs.pop().unwrap();
                            let c2 = pairs.pop().unwrap();
                            let binding = compute_binding(spec, election_id, &c1, &c2);
                            row.push(MixSlot::Rcca(RccaCiphertext { c1, c2, binding }));
                        }
                    }
                }
                row
            })
            .collect();
        MixBatch { slot_kinds: slot_kinds.to_vec(), rows }
    }

    /// Checks that every RCCA slot's binding matches its components (the
    /// binding is deterministic, so a mix server cannot smuggle data
    /// through it).
    pub fn validate_bindings(&self, spec: &GroupSpec, election_id: &[u8]) -> Result<(), MixError> {
        for row in &self.rows {
            for slot in row {
                if let MixSlot::Rcca(c) = slot {
                    if c.binding != compute_binding(spec, election_id, &c.c1, &c.c2) {
                        return Err(MixError::BatchMalformed("rcca binding mismatch"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Expands per-slot public keys to one per flat ElGamal pair.
pub fn flat_slot_keys(slot_kinds: &[SlotKind], slot_pks: &[GroupElement]) -> Vec<GroupElement> {
    slot_kinds
        .iter()
        .zip(slot_pks)
        .flat_map(|(kind, pk)| std::iter::repeat(pk.clone()).take(kind.pair_count()))
        .collect()
}

/// The shuffle argument transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShuffleProof {
    pub perm_commitments: Vec<GroupElement>,
    pub chain_commitments: Vec<GroupElement>,
    pub t1: GroupElement,
    pub t2: GroupElement,
    pub t3: GroupElement,
    /// Per flat slot: (mask-side, g-side) aggregate commitments.
    pub t4: Vec<(GroupElement, GroupElement)>,
    pub t_hats: Vec<GroupElement>,
    pub s1: Scalar,
    pub s2: Scalar,
    pub s3: Scalar,
    pub s4: Vec<Scalar>,
    pub s_hats: Vec<Scalar>,
    pub s_primes: Vec<Scalar>,
}

impl Canon for ShuffleProof {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.perm_commitments.encode_into(out);
        self.chain_commitments.encode_into(out);
        self.t1.encode_into(out);
        self.t2.encode_into(out);
        self.t3.encode_into(out);
        self.t4.encode_into(out);
        self.t_hats.encode_into(out);
        self.s1.encode_into(out);
        self.s2.encode_into(out);
        self.s3.encode_into(out);
        self.s4.encode_into(out);
        self.s_hats.encode_into(out);
        self.s_primes.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(ShuffleProof {
            perm_commitments: Vec::<GroupElement>::decode(r)?,
            chain_commitments: Vec::<GroupElement>::decode(r)?,
            t1: GroupElement::decode(r)?,
            t2: GroupElement::decode(r)?,
            t3: GroupElement::decode(r)?,
            t4: Vec::<(GroupElement, GroupElement)>::decode(r)?,
            t_hats: Vec::<GroupElement>::decode(r)?,
            s1: Scalar::decode(r)?,
            s2: Scalar::decode(r)?,
            s3: Scalar::decode(r)?,
            s4: Vec::<Scalar>::decode(r)?,
            s_hats: Vec::<Scalar>::decode(r)?,
            s_primes: Vec::<Scalar>::decode(r)?,
        })
    }
}

/// A mix server's secrets. Never serialized into the transcript.
#[derive(Debug, Clone)]
pub struct MixServerState {
    pub server_id: String,
    /// Output position i holds input row permutation[i].
    pub permutation: Vec<usize>,
    /// Re-encryption randomness indexed by [input row][flat slot].
    pub randomness: Vec<Vec<Scalar>>,
}

fn independent_generators(
    spec: &GroupSpec,
    election_id: &[u8],
    label: &str,
    n: usize,
) -> (GroupElement, Vec<GroupElement>) {
    let mut seed = Vec::new();
    seed.extend_from_slice(election_id);
    seed.extend_from_slice(label.as_bytes());
    let derive = |index: u32| {
        let mut data = seed.clone();
        data.extend_from_slice(&index.to_be_bytes());
        spec.hash_to_group("mix-generator", &data)
    };
    let h_init = derive(u32::MAX);
    let hs = (0..n as u32).map(derive).collect();
    (h_init, hs)
}

/// Per-row challenges u_j derived from the full statement.
fn row_challenges(
    spec: &GroupSpec,
    election_id: &[u8],
    label: &str,
    input: &[Vec<Ciphertext>],
    output: &[Vec<Ciphertext>],
    perm_commitments: &[GroupElement],
) -> Vec<Scalar> {
    let mut h = Sha256::new();
    h.update(b"electryo-mix-challenges");
    h.update((election_id.len() as u32).to_be_bytes());
    h.update(election_id);
    h.update((label.len() as u32).to_be_bytes());
    h.update(label.as_bytes());
    for rows in [input, output] {
        for row in rows {
            for c in row {
                h.update(&c.encode());
            }
        }
    }
    for c in perm_commitments {
        h.update(&c.encode());
    }
    let prefix = h.finalize();
    (0..input.len() as u64)
        .map(|j| {
            let mut hj = Sha256::new();
            hj.update(b"electryo-mix-u");
            hj.update(prefix);
            hj.update(j.to_be_bytes());
            spec.scalar_from_bytes(&hj.finalize())
        })
        .collect()
}

fn proof_context(
    election_id: &[u8],
    label: &str,
    input: &[Vec<Ciphertext>],
    output: &[Vec<Ciphertext>],
    flat_pks: &[GroupElement],
) -> FsContext {
    let mut ctx = FsContext::new(election_id, label);
    for (name, rows) in [("mix-input", input), ("mix-output", output)] {
        let mut buf = Vec::new();
        for row in rows {
            for c in row {
                c.encode_into(&mut buf);
            }
        }
        ctx.absorb(name, &buf);
    }
    ctx.absorb_canon("mix-slot-keys", &flat_pks.to_vec());
    ctx
}

/// Uniform permutation of 0..n by Fisher-Yates over the injected rng.
pub fn random_permutation(n: usize, rng: &mut dyn RngCore) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        perm.swap(i, j);
    }
    perm
}

/// Shuffles with caller-chosen permutation and randomness (test hook; the
/// production path is [`shuffle`]).
pub fn shuffle_with(
    spec: &GroupSpec,
    election_id: &[u8],
    label: &str,
    batch: &MixBatch,
    slot_pks: &[GroupElement],
    permutation: Vec<usize>,
    randomness: Vec<Vec<Scalar>>,
    rng: &mut dyn RngCore,
) -> Result<(MixBatch, ShuffleProof, MixServerState), MixError> {
    batch.validate()?;
    if slot_pks.len() != batch.slot_kinds.len() {
        return Err(MixError::BatchMalformed("one public key per slot required"));
    }
    let n = batch.rows.len();
    let flat_pks = flat_slot_keys(&batch.slot_kinds, slot_pks);
    let width = flat_pks.len();
    if permutation.len() != n || randomness.len() != n {
        return Err(MixError::BatchMalformed("permutation/randomness length"));
    }
    let input = batch.flat_rows();

    // output i = re-encryption of input permutation[i]
    let output: Vec<Vec<Ciphertext>> = permutation
        .iter()
        .map(|&j| {
            (0..width)
                .map(|f| reencrypt(spec, &flat_pks[f], &input[j][f], &randomness[j][f]))
                .collect()
        })
        .collect();

    let (h_init, hs) = independent_generators(spec, election_id, label, n);

    // permutation commitment c[j] = h[sigma^-1(j)] * g^t[j], t indexed by
    // input row j
    let t: Vec<Scalar> = (0..n).map(|_| spec.rand_scalar(rng)).collect();
    let mut perm_commitments = vec![spec.identity(); n];
    for (i, &j) in permutation.iter().enumerate() {
        perm_commitments[j] = spec.mul(&hs[i], &spec.g_pow(&t[j]));
    }

    let us = row_challenges(spec, election_id, label, &input, &output, &perm_commitments);
    let u_primes: Vec<Scalar> = permutation.iter().map(|&j| us[j].clone()).collect();

    // commitment chain over the permuted challenges
    let mut r_hats: Vec<Scalar> = Vec::with_capacity(n);
    let mut chain_commitments: Vec<GroupElement> = Vec::with_capacity(n);
    let mut prev = h_init.clone();
    for up in &u_primes {
        let r_hat = spec.rand_scalar(rng);
        let c_hat = spec.mul(&spec.g_pow(&r_hat), &spec.pow(&prev, up));
        r_hats.push(r_hat);
        prev = c_hat.clone();
        chain_commitments.push(c_hat);
    }

    // aggregate witnesses
    let r_bar = t.iter().fold(spec.scalar_zero(), |acc, x| spec.s_add(&acc, x));
    let mut vs = vec![spec.scalar_one(); n];
    for i in (0..n.saturating_sub(1)).rev() {
        vs[i] = spec.s_mul(&u_primes[i + 1], &vs[i + 1]);
    }
    let r_hat_agg = (0..n).fold(spec.scalar_zero(), |acc, i| {
        spec.s_add(&acc, &spec.s_mul(&r_hats[i], &vs[i]))
    });
    let r_tilde = (0..n).fold(spec.scalar_zero(), |acc, j| {
        spec.s_add(&acc, &spec.s_mul(&t[j], &us[j]))
    });
    let r_primes: Vec<Scalar> = (0..width)
        .map(|f| {
            (0..n).fold(spec.scalar_zero(), |acc, j| {
                spec.s_add(&acc, &spec.s_mul(&randomness[j][f], &us[j]))
            })
        })
        .collect();

    // blinded commitments
    let w1 = spec.rand_scalar(rng);
    let w2 = spec.rand_scalar(rng);
    let w3 = spec.rand_scalar(rng);
    let w4: Vec<Scalar> = (0..width).map(|_| spec.rand_scalar(rng)).collect();
    let w_hats: Vec<Scalar> = (0..n).map(|_| spec.rand_scalar(rng)).collect();
    let w_primes: Vec<Scalar> = (0..n).map(|_| spec.rand_scalar(rng)).collect();

    let t1 = spec.g_pow(&w1);
    let t2 = spec.g_pow(&w2);
    let mut t3 = spec.g_pow(&w3);
    for i in 0..n {
        t3 = spec.mul(&t3, &spec.pow(&hs[i], &w_primes[i]));
    }
    let t4: Vec<(GroupElement, GroupElement)> = (0..width)
        .map(|f| {
            let mut mask_side = spec.invert(&spec.pow(&flat_pks[f], &w4[f]));
            let mut g_side = spec.invert(&spec.g_pow(&w4[f]));
            for i in 0..n {
                mask_side = spec.mul(&mask_side, &spec.pow(&output[i][f].b, &w_primes[i]));
                g_side = spec.mul(&g_side, &spec.pow(&output[i][f].a, &w_primes[i]));
            }
            (mask_side, g_side)
        })
        .collect();
    let t_hats: Vec<GroupElement> = (0..n)
        .map(|i| {
            let prev = if i == 0 { &h_init } else { &chain_commitments[i - 1] };
            spec.mul(&spec.g_pow(&w_hats[i]), &spec.pow(prev, &w_primes[i]))
        })
        .collect();

    let mut ctx = proof_context(election_id, label, &input, &output, &flat_pks);
    ctx.absorb_canon("mix-perm-commitments", &perm_commitments);
    ctx.absorb_canon("mix-chain-commitments", &chain_commitments);
    let mut challenge_commitments = vec![t1.clone(), t2.clone(), t3.clone()];
    for (a, b) in &t4 {
        challenge_commitments.push(a.clone());
        challenge_commitments.push(b.clone());
    }
    challenge_commitments.extend(t_hats.iter().cloned());
    let c = fs_challenge(spec, &ctx, &challenge_commitments);

    let s1 = spec.s_add(&w1, &spec.s_mul(&c, &r_bar));
    let s2 = spec.s_add(&w2, &spec.s_mul(&c, &r_hat_agg));
    let s3 = spec.s_add(&w3, &spec.s_mul(&c, &r_tilde));
    let s4: Vec<Scalar> = (0..width)
        .map(|f| spec.s_add(&w4[f], &spec.s_mul(&c, &r_primes[f])))
        .collect();
    let s_hats: Vec<Scalar> = (0..n)
        .map(|i| spec.s_add(&w_hats[i], &spec.s_mul(&c, &r_hats[i])))
        .collect();
    let s_primes: Vec<Scalar> = (0..n)
        .map(|i| spec.s_add(&w_primes[i], &spec.s_mul(&c, &u_primes[i])))
        .collect();

    let proof = ShuffleProof {
        perm_commitments,
        chain_commitments,
        t1,
        t2,
        t3,
        t4,
        t_hats,
        s1,
        s2,
        s3,
        s4,
        s_hats,
        s_primes,
    };
    let out_batch = MixBatch::from_flat(spec, election_id, &batch.slot_kinds, output);
    let state = MixServerState {
        server_id: label.to_string(),
        permutation,
        randomness,
    };
    Ok((out_batch, proof, state))
}

/// Shuffles with a uniform permutation and fresh randomness.
pub fn shuffle(
    spec: &GroupSpec,
    election_id: &[u8],
    label: &str,
    batch: &MixBatch,
    slot_pks: &[GroupElement],
    rng: &mut dyn RngCore,
) -> Result<(MixBatch, ShuffleProof, MixServerState), MixError> {
    batch.validate()?;
    let n = batch.rows.len();
    let width = batch.flat_width();
    let permutation = random_permutation(n, rng);
    let randomness: Vec<Vec<Scalar>> = (0..n)
        .map(|_| (0..width).map(|_| spec.rand_scalar(rng)).collect())
        .collect();
    shuffle_with(
        spec,
        election_id,
        label,
        batch,
        slot_pks,
        permutation,
        randomness,
        rng,
    )
}

/// Verifies the shuffle argument between `input` and `output`.
pub fn verify_shuffle(
    spec: &GroupSpec,
    election_id: &[u8],
    label: &str,
    input_batch: &MixBatch,
    output_batch: &MixBatch,
    proof: &ShuffleProof,
    slot_pks: &[GroupElement],
) -> Result<(), MixError> {
    input_batch.validate()?;
    output_batch.validate()?;
    if input_batch.slot_kinds != output_batch.slot_kinds {
        return Err(MixError::VerifyFailed("slot layout mismatch"));
    }
    if input_batch.rows.len() != output_batch.rows.len() {
        return Err(MixError::VerifyFailed("row count mismatch"));
    }
    if slot_pks.len() != input_batch.slot_kinds.len() {
        return Err(MixError::VerifyFailed("one public key per slot required"));
    }
    let n = input_batch.rows.len();
    let flat_pks = flat_slot_keys(&input_batch.slot_kinds, slot_pks);
    let width = flat_pks.len();
    if proof.perm_commitments.len() != n
        || proof.chain_commitments.len() != n
        || proof.t_hats.len() != n
        || proof.s_hats.len() != n
        || proof.s_primes.len() != n
        || proof.t4.len() != width
        || proof.s4.len() != width
    {
        return Err(MixError::VerifyFailed("proof arity"));
    }
    let input = input_batch.flat_rows();
    let output = output_batch.flat_rows();

    for e in proof
        .perm_commitments
        .iter()
        .chain(proof.chain_commitments.iter())
    {
        if !spec.is_member(e) {
            return Err(MixError::VerifyFailed("proof element outside group"));
        }
    }

    let (h_init, hs) = independent_generators(spec, election_id, label, n);
    let us = row_challenges(
        spec,
        election_id,
        label,
        &input,
        &output,
        &proof.perm_commitments,
    );

    let mut ctx = proof_context(election_id, label, &input, &output, &flat_pks);
    ctx.absorb_canon("mix-perm-commitments", &proof.perm_commitments);
    ctx.absorb_canon("mix-chain-commitments", &proof.chain_commitments);
    let mut challenge_commitments = vec![proof.t1.clone(), proof.t2.clone(), proof.t3.clone()];
    for (a, b) in &proof.t4 {
        challenge_commitments.push(a.clone());
        challenge_commitments.push(b.clone());
    }
    challenge_commitments.extend(proof.t_hats.iter().cloned());
    let c = fs_challenge(spec, &ctx, &challenge_commitments);

    // c_bar = prod c[j] / prod h[i]  must equal g^r_bar
    let prod_c = proof
        .perm_commitments
        .iter()
        .fold(spec.identity(), |acc, x| spec.mul(&acc, x));
    let prod_h = hs.iter().fold(spec.identity(), |acc, x| spec.mul(&acc, x));
    let c_bar = spec.div(&prod_c, &prod_h);
    if spec.g_pow(&proof.s1) != spec.mul(&proof.t1, &spec.pow(&c_bar, &c)) {
        return Err(MixError::VerifyFailed("product check"));
    }

    // c_hat = chain tail / h_init^(prod u) must equal g^r_hat
    let u_prod = us.iter().fold(spec.scalar_one(), |acc, u| spec.s_mul(&acc, u));
    let c_hat = spec.div(&proof.chain_commitments[n - 1], &spec.pow(&h_init, &u_prod));
    if spec.g_pow(&proof.s2) != spec.mul(&proof.t2, &spec.pow(&c_hat, &c)) {
        return Err(MixError::VerifyFailed("chain product check"));
    }

    // c_tilde = prod c[j]^u[j]
    let c_tilde = (0..n).fold(spec.identity(), |acc, j| {
        spec.mul(&acc, &spec.pow(&proof.perm_commitments[j], &us[j]))
    });
    let mut lhs3 = spec.g_pow(&proof.s3);
    for i in 0..n {
        lhs3 = spec.mul(&lhs3, &spec.pow(&hs[i], &proof.s_primes[i]));
    }
    if lhs3 != spec.mul(&proof.t3, &spec.pow(&c_tilde, &c)) {
        return Err(MixError::VerifyFailed("exponent check"));
    }

    // per-slot re-encryption checks
    for f in 0..width {
        let a_tilde = (0..n).fold(spec.identity(), |acc, j| {
            spec.mul(&acc, &spec.pow(&input[j][f].b, &us[j]))
        });
        let b_tilde = (0..n).fold(spec.identity(), |acc, j| {
            spec.mul(&acc, &spec.pow(&input[j][f].a, &us[j]))
        });
        let mut lhs_mask = spec.invert(&spec.pow(&flat_pks[f], &proof.s4[f]));
        let mut lhs_g = spec.invert(&spec.g_pow(&proof.s4[f]));
        for i in 0..n {
            lhs_mask = spec.mul(&lhs_mask, &spec.pow(&output[i][f].b, &proof.s_primes[i]));
            lhs_g = spec.mul(&lhs_g, &spec.pow(&output[i][f].a, &proof.s_primes[i]));
        }
        if lhs_mask != spec.mul(&proof.t4[f].0, &spec.pow(&a_tilde, &c)) {
            return Err(MixError::VerifyFailed("slot mask-side check"));
        }
        if lhs_g != spec.mul(&proof.t4[f].1, &spec.pow(&b_tilde, &c)) {
            return Err(MixError::VerifyFailed("slot g-side check"));
        }
    }

    // chain step checks
    for i in 0..n {
        let prev = if i == 0 { &h_init } else { &proof.chain_commitments[i - 1] };
        let lhs = spec.mul(
            &spec.g_pow(&proof.s_hats[i]),
            &spec.pow(prev, &proof.s_primes[i]),
        );
        let rhs = spec.mul(
            &proof.t_hats[i],
            &spec.pow(&proof.chain_commitments[i], &c),
        );
        if lhs != rhs {
            return Err(MixError::VerifyFailed("chain step check"));
        }
    }
    Ok(())
}

/// One stage of a mix cascade as published on the bulletin board.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixStage {
    pub server_id: String,
    pub output: MixBatch,
    pub proof: ShuffleProof,
}

impl Canon for MixStage {
    fn encode_into(&self, out: &mut Vec<u8>) {
        crate::codec::put_str(out, &self.server_id);
        self.output.encode_into(out);
        self.proof.encode_into(out);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(MixStage {
            server_id: crate::codec::read_str(r)?,
            output: MixBatch::decode(r)?,
            proof: ShuffleProof::decode(r)?,
        })
    }
}

fn stage_label(label: &str, stage: usize) -> String {
    format!("{label}/server-{stage}")
}

/// Runs a cascade of `servers` sequential shuffles. Each stage's proof is
/// checked before the next stage runs; the composed permutation stays
/// hidden unless every server state leaks.
pub fn run_cascade(
    spec: &GroupSpec,
    election_id: &[u8],
    label: &str,
    batch: &MixBatch,
    slot_pks: &[GroupElement],
    servers: usize,
    rng: &mut dyn RngCore,
) -> Result<(Vec<MixStage>, Vec<MixServerState>), MixError> {
    if servers == 0 {
        return Err(MixError::BatchMalformed("need at least 1 mix server"));
    }
    let mut stages = Vec::with_capacity(servers);
    let mut states = Vec::with_capacity(servers);
    let mut current = batch.clone();
    for s in 1..=servers {
        let lbl = stage_label(label, s);
        let (output, proof, state) = shuffle(spec, election_id, &lbl, &current, slot_pks, rng)?;
        verify_shuffle(spec, election_id, &lbl, &current, &output, &proof, slot_pks).map_err(
            |e| MixError::StageProofInvalid { stage: s, reason: e.to_string() },
        )?;
        current = output.clone();
        stages.push(MixStage { server_id: lbl, output, proof });
        states.push(state);
    }
    Ok((stages, states))
}

/// Verifies a published proof chain stage by stage; aborts with the first
/// failing stage index.
pub fn verify_cascade(
    spec: &GroupSpec,
    election_id: &[u8],
    label: &str,
    input: &MixBatch,
    stages: &[MixStage],
    slot_pks: &[GroupElement],
) -> Result<(), MixError> {
    if stages.is_empty() {
        return Err(MixError::BatchMalformed("empty cascade"));
    }
    let mut current = input;
    for (idx, stage) in stages.iter().enumerate() {
        let s = idx + 1;
        let lbl = stage_label(label, s);
        if stage.server_id != lbl {
            return Err(MixError::StageProofInvalid {
                stage: s,
                reason: "stage label mismatch".into(),
            });
        }
        verify_shuffle(
            spec,
            election_id,
            &lbl,
            current,
            &stage.output,
            &stage.proof,
            slot_pks,
        )
        .map_err(|e| MixError::StageProofInvalid { stage: s, reason: e.to_string() })?;
        stage
            .output
            .validate_bindings(spec, election_id)
            .map_err(|e| MixError::StageProofInvalid { stage: s, reason: e.to_string() })?;
        current = &stage.output;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::elgamal::{decrypt, encrypt_rand, exp_encode, keygen};
    use crate::group::rcca::{rcca_decrypt, rcca_encrypt};
    use crate::group::seeded_rng;

    const EID: &[u8] = b"ELX-mix";

    fn eg_batch(
        spec: &GroupSpec,
        pk: &GroupElement,
        values: &[&[u64]],
        rng: &mut dyn RngCore,
    ) -> MixBatch {
        let slots = values[0].len();
        MixBatch {
            slot_kinds: vec![SlotKind::ElGamal; slots],
            rows: values
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&v| {
                            MixSlot::ElGamal(
                                encrypt_rand(spec, pk, &exp_encode(spec, v), rng).0,
                            )
                        })
                        .collect()
                })
                .collect(),
        }
    }

    fn decrypt_tuples(spec: &GroupSpec, sk: &Scalar, batch: &MixBatch) -> Vec<Vec<u64>> {
        batch
            .flat_rows()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| {
                        crate::group::elgamal::exp_decode(spec, &decrypt(spec, sk, c), 1000)
                            .unwrap()
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn two_row_shuffle_preserves_multiset() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "mix-2");
        let kp = keygen(&spec, &mut rng);
        let batch = eg_batch(&spec, &kp.pk, &[&[1, 2], &[3, 4]], &mut rng);
        let (out, proof, _) =
            shuffle(&spec, EID, "t", &batch, &[kp.pk.clone(), kp.pk.clone()], &mut rng).unwrap();
        verify_shuffle(&spec, EID, "t", &batch, &out, &proof, &[kp.pk.clone(), kp.pk.clone()])
            .unwrap();

        let mut before = decrypt_tuples(&spec, &kp.sk, &batch);
        let mut after = decrypt_tuples(&spec, &kp.sk, &out);
        before.sort();
        after.sort();
        assert_eq!(before, after);
    }

    #[test]
    fn twenty_rows_five_slots_same_permutation() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "mix-20");
        let kp = keygen(&spec, &mut rng);
        let values: Vec<Vec<u64>> = (0..20u64)
            .map(|i| (0..5).map(|s| i * 10 + s + 1).collect())
            .collect();
        let refs: Vec<&[u64]> = values.iter().map(|v| v.as_slice()).collect();
        let batch = eg_batch(&spec, &kp.pk, &refs, &mut rng);
        let pks = vec![kp.pk.clone(); 5];
        let (out, proof, _) = shuffle(&spec, EID, "t20", &batch, &pks, &mut rng).unwrap();
        verify_shuffle(&spec, EID, "t20", &batch, &out, &proof, &pks).unwrap();

        // whole tuples survive: every output tuple appears among the inputs
        let before = decrypt_tuples(&spec, &kp.sk, &batch);
        let after = decrypt_tuples(&spec, &kp.sk, &out);
        for tuple in &after {
            assert!(before.contains(tuple), "tuple decoupled across slots");
        }
        assert_eq!(after.len(), before.len());
    }

    #[test]
    fn identity_permutation_zero_randomness_still_proves() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "mix-id");
        let kp = keygen(&spec, &mut rng);
        let batch = eg_batch(&spec, &kp.pk, &[&[1], &[2], &[3]], &mut rng);
        let perm = vec![0, 1, 2];
        let rands = vec![vec![spec.scalar_zero()]; 3];
        let (out, proof, _) = shuffle_with(
            &spec,
            EID,
            "t-id",
            &batch,
            &[kp.pk.clone()],
            perm,
            rands,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.rows, batch.rows);
        verify_shuffle(&spec, EID, "t-id", &batch, &out, &proof, &[kp.pk.clone()]).unwrap();
    }

    #[test]
    fn rcca_slots_mix_as_two_pairs() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "mix-rcca");
        let kp = keygen(&spec, &mut rng);
        let rows: Vec<Vec<MixSlot>> = (0..4u8)
            .map(|i| {
                vec![
                    MixSlot::Rcca(rcca_encrypt(&spec, EID, &kp.pk, &[i], &mut rng).unwrap()),
                    MixSlot::ElGamal(
                        encrypt_rand(&spec, &kp.pk, &exp_encode(&spec, i as u64 + 1), &mut rng).0,
                    ),
                ]
            })
            .collect();
        let batch = MixBatch {
            slot_kinds: vec![SlotKind::Rcca, SlotKind::ElGamal],
            rows,
        };
        let pks = vec![kp.pk.clone(), kp.pk.clone()];
        let (out, proof, _) = shuffle(&spec, EID, "t-rcca", &batch, &pks, &mut rng).unwrap();
        verify_shuffle(&spec, EID, "t-rcca", &batch, &out, &proof, &pks).unwrap();
        out.validate_bindings(&spec, EID).unwrap();

        // decrypting the mixed RCCA slots still passes the validity check
        let mut opened: Vec<u8> = out
            .rows
            .iter()
            .map(|row| match &row[0] {
                MixSlot::Rcca(c) => rcca_decrypt(&spec, EID, &kp.sk, c).unwrap()[0],
                _ => unreachable!(),
            })
            .collect();
        opened.sort();
        assert_eq!(opened, vec![0, 1, 2, 3]);
    }

    #[test]
    fn mutation_classes_rejected() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "mix-mut");
        let kp = keygen(&spec, &mut rng);
        let batch = eg_batch(&spec, &kp.pk, &[&[1, 2], &[3, 4], &[5, 6], &[7, 8]], &mut rng);
        let pks = vec![kp.pk.clone(), kp.pk.clone()];
        let (out, proof, _) = shuffle(&spec, EID, "t-mut", &batch, &pks, &mut rng).unwrap();
        let check = |o: &MixBatch, p: &ShuffleProof| {
            verify_shuffle(&spec, EID, "t-mut", &batch, o, p, &pks)
        };
        check(&out, &proof).unwrap();

        // row swap-in
        let mut m = out.clone();
        m.rows[1] = vec![
            MixSlot::ElGamal(encrypt_rand(&spec, &kp.pk, &exp_encode(&spec, 3), &mut rng).0),
            MixSlot::ElGamal(encrypt_rand(&spec, &kp.pk, &exp_encode(&spec, 4), &mut rng).0),
        ];
        assert!(check(&m, &proof).is_err());

        // row drop
        let mut m = out.clone();
        m.rows.remove(2);
        assert!(check(&m, &proof).is_err());

        // row duplicate
        let mut m = out.clone();
        m.rows[3] = m.rows[0].clone();
        assert!(check(&m, &proof).is_err());

        // cross-slot re-pairing: swap slot 1 between two rows
        let mut m = out.clone();
        let tmp = m.rows[0][1].clone();
        m.rows[0][1] = m.rows[1][1].clone();
        m.rows[1][1] = tmp;
        assert!(check(&m, &proof).is_err());

        // proof field mutation
        let mut p = proof.clone();
        p.s3 = spec.s_add(&p.s3, &spec.scalar_one());
        assert!(check(&out, &p).is_err());

        // stale proof on re-randomized output
        let mut m = out.clone();
        if let MixSlot::ElGamal(c) = &m.rows[0][0] {
            let re = reencrypt(&spec, &kp.pk, c, &spec.rand_scalar_nonzero(&mut rng));
            m.rows[0][0] = MixSlot::ElGamal(re);
        }
        assert!(check(&m, &proof).is_err());
    }

    #[test]
    fn cascade_runs_and_aborts_on_corruption() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "mix-casc");
        let kp = keygen(&spec, &mut rng);
        let values: Vec<Vec<u64>> = (1..=10u64).map(|i| vec![i]).collect();
        let refs: Vec<&[u64]> = values.iter().map(|v| v.as_slice()).collect();
        let batch = eg_batch(&spec, &kp.pk, &refs, &mut rng);
        let pks = vec![kp.pk.clone()];

        let (stages, _) = run_cascade(&spec, EID, "casc", &batch, &pks, 2, &mut rng).unwrap();
        assert_eq!(stages.len(), 2);
        verify_cascade(&spec, EID, "casc", &batch, &stages, &pks).unwrap();

        let mut corrupted = stages.clone();
        corrupted[1].output.rows[0] = corrupted[1].output.rows[1].clone();
        let err = verify_cascade(&spec, EID, "casc", &batch, &corrupted, &pks).unwrap_err();
        assert!(matches!(err, MixError::StageProofInvalid { stage: 2, .. }));

        // single server degenerates to one shuffle
        let (one, _) = run_cascade(&spec, EID, "casc1", &batch, &pks, 1, &mut rng).unwrap();
        verify_cascade(&spec, EID, "casc1", &batch, &one, &pks).unwrap();
    }

    #[test]
    fn undersized_batch_rejected() {
        let spec = GroupSpec::test_group();
        let mut rng = seeded_rng(b"seed", "mix-small");
        let kp = keygen(&spec, &mut rng);
        let batch = eg_batch(&spec, &kp.pk, &[&[1]], &mut rng);
        assert!(matches!(
            shuffle(&spec, EID, "t", &batch, &[kp.pk.clone()], &mut rng),
            Err(MixError::BatchMalformed(_))
        ));
    }
}
