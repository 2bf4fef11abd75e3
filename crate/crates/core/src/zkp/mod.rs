//! Non-interactive zero-knowledge proofs. All proofs use the strong form
//! of the Fiat-Shamir transform: the challenge hashes the election
//! identifier, a phase label, the full statement and every commitment, so
//! a proof is bound to its exact statement and cannot be replayed in a
//! different election or against different ciphertexts.

pub mod dleq;
pub mod fs;
pub mod pet;
pub mod pok;
pub mod reenc_link;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ZkpError {
    #[error("proof verification failed: {0}")]
    VerifyFailed(&'static str),
    #[error("PET share invalid: teller {0}")]
    ShareInvalid(usize),
    #[error("insufficient shares: got {got}, threshold {need}")]
    InsufficientShares { got: usize, need: usize },
    #[error("statement malformed: {0}")]
    Malformed(&'static str),
}
