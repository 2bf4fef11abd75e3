//! Polling-station voting with tracker-based individual verification.
//!
//! The crate implements the full election lifecycle over an append-only,
//! hash-chained bulletin board: distributed key setup, tracker assignment
//! through a verifiable parallel re-encryption mix, ballot printing and
//! scanning, two mix/decrypt stages producing a public tracker/vote tally
//! board, receipt-code gated tracker notification with coercion mitigation
//! (fake alpha terms), comparison risk-limiting audits in both directions,
//! and dispute resolution backed by the paper record.
//!
//! Modules map onto the protocol roles: [`group`] holds the prime-order
//! group backends and encryption schemes, [`zkp`] the non-interactive
//! proofs, [`mixnet`] the verifiable shuffle, [`bb`] the bulletin board,
//! [`tellers`] the threshold tally tellers, [`selene`] the tracker
//! lifecycle, [`polling`] the polling-station devices, and [`pipeline`]
//! the orchestration, universal verifier, audits and scenario driver.

pub mod bb;
pub mod codec;
pub mod group;
pub mod mixnet;
pub mod pipeline;
pub mod polling;
pub mod selene;
pub mod tellers;
pub mod zkp;

pub use bb::{BbEntry, BbSnapshot, BulletinBoard, Phase, Transcript};
pub use group::elgamal::{Ciphertext, ElGamalKeyPair};
pub use group::rcca::RccaCiphertext;
pub use group::schnorr::{Signature, SigningKeyPair};
pub use group::{Backend, GroupElement, GroupSpec, Scalar};
pub use mixnet::{MixBatch, MixSlot, ShuffleProof, SlotKind};
pub use pipeline::config::ElectionConfig;
pub use pipeline::verify::VerifyReport;
pub use selene::{AlphaTerm, TrackerSet, VoterRow};
pub use tellers::{DecryptShare, TellerPublic, TellerShare};
pub use zkp::fs::FsContext;
