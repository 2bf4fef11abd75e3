//! Election configuration. The election identifier must carry fresh
//! public randomness so signatures and proofs cannot be prepared before
//! the election or replayed into another one.

use serde::{Deserialize, Serialize};

use crate::group::{Backend, GroupSpec};
use crate::pipeline::PipelineError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElectionConfig {
    /// Unique per run; includes public randomness (see [`election_id`]).
    pub election_id: Vec<u8>,
    pub candidates: Vec<String>,
    pub voter_count: usize,
    pub teller_count: usize,
    pub teller_threshold: usize,
    pub mix_servers: usize,
    pub group_backend: String,
    pub seed: u64,
    /// Optional date/printer fields inside ballot signatures.
    #[serde(default)]
    pub sign_date_printer: bool,
}

impl ElectionConfig {
    pub fn backend(&self) -> Result<Backend, PipelineError> {
        match self.group_backend.as_str() {
            "test" => Ok(Backend::TestGroup),
            "prod" => Ok(Backend::ProdGroup),
            other => Err(PipelineError::BadConfig(format!("unknown backend {other:?}"))),
        }
    }

    pub fn group_spec(&self) -> Result<GroupSpec, PipelineError> {
        Ok(GroupSpec::by_backend(self.backend()?))
    }

    pub fn seed_bytes(&self) -> Vec<u8> {
        let mut s = self.election_id.clone();
        s.extend_from_slice(&self.seed.to_be_bytes());
        s
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.candidates.len() < 2 {
            return Err(PipelineError::BadConfig("need at least 2 candidates".into()));
        }
        if self.voter_count < 2 {
            return Err(PipelineError::BadConfig("need at least 2 voters".into()));
        }
        if self.teller_threshold == 0 || self.teller_threshold > self.teller_count {
            return Err(PipelineError::BadConfig("need 1 <= t <= teller count".into()));
        }
        if self.mix_servers == 0 {
            return Err(PipelineError::BadConfig("need at least 1 mix server".into()));
        }
        if self.election_id.is_empty() {
            return Err(PipelineError::BadConfig("election id empty".into()));
        }
        let spec = self.group_spec()?;
        // receipt codes and trackers must stay below the decodable range
        if crate::group::Backend::TestGroup == spec.backend
            && self.voter_count as u64 + 100_001 >= 131_063
        {
            return Err(PipelineError::BadConfig("voter count too large for test group".into()));
        }
        Ok(())
    }

    /// Convenience defaults for the desk-scale simulator.
    pub fn desk_default(voters: usize, candidates: usize, seed: u64) -> Self {
        ElectionConfig {
            election_id: election_id("desk", seed),
            candidates: (1..=candidates).map(|i| format!("candidate-{i}")).collect(),
            voter_count: voters,
            teller_count: 3,
            teller_threshold: 2,
            mix_servers: 3,
            group_backend: "test".into(),
            seed,
            sign_date_printer: false,
        }
    }
}

/// Builds an election identifier embedding public randomness derived from
/// the run seed (standing in for the fresh public randomness published
/// shortly before a real election).
pub fn election_id(name: &str, seed: u64) -> Vec<u8> {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(b"electryo-election-id");
    h.update(name.as_bytes());
    h.update(seed.to_be_bytes());
    let digest = h.finalize();
    let mut id = format!("ELX-{name}-").into_bytes();
    id.extend_from_slice(&hex_lower(&digest[..8]).into_bytes());
    id
}

fn hex_lower(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ElectionConfig::desk_default(25, 3, 7).validate().unwrap();
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut c = ElectionConfig::desk_default(25, 3, 7);
        c.candidates.truncate(1);
        assert!(c.validate().is_err());

        let mut c = ElectionConfig::desk_default(25, 3, 7);
        c.teller_threshold = 4;
        assert!(c.validate().is_err());

        let mut c = ElectionConfig::desk_default(25, 3, 7);
        c.group_backend = "weird".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn election_ids_differ_by_seed() {
        assert_ne!(election_id("a", 1), election_id("a", 2));
        assert_eq!(election_id("a", 1), election_id("a", 1));
    }
}
