//! Election orchestration: configuration, the bulletin-board record
//! vocabulary, the two mix/decrypt stages, the universal verifier, the
//! comparison audits, dispute resolution and the scripted scenario driver.

pub mod config;
pub mod dispute;
pub mod records;
pub mod rla;
pub mod run;
pub mod scenario;
pub mod stages;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration invalid: {0}")]
    BadConfig(String),
    #[error("bulletin board: {0}")]
    Bb(#[from] crate::bb::BbError),
    #[error("mix: {0}")]
    Mix(#[from] crate::mixnet::MixError),
    #[error("tellers: {0}")]
    Tellers(#[from] crate::tellers::TellerError),
    #[error("polling: {0}")]
    Polling(#[from] crate::polling::PollingError),
    #[error("trackers: {0}")]
    Selene(#[from] crate::selene::SeleneError),
    #[error("proofs: {0}")]
    Zkp(#[from] crate::zkp::ZkpError),
    #[error("encryption: {0}")]
    Rcca(#[from] crate::group::rcca::RccaError),
    #[error("codec: {0}")]
    Codec(#[from] crate::codec::CodecError),
    #[error("scenario step {step}: {reason}")]
    Scenario { step: String, reason: String },
    #[error("transcript missing expected record: {0}")]
    MissingRecord(&'static str),
}
