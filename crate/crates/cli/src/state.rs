//! On-disk layout of one election run.
//!
//! The public transcript is one canonical file; everything else under the
//! state directory is a private store an actor would keep to itself:
//! teller key shares, voter key files, the paper ballots in box order,
//! the scanner's memory and the tracker-retrieval authority's records.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use electryo::codec::{put_u32, put_u64, Canon, Reader};
use electryo::pipeline::config::ElectionConfig;
use electryo::pipeline::run::{CastBallot, ElectionState};
use electryo::polling::{PaperBallot, TraState, VoterCredential};
use electryo::selene::AlphaTerm;
use electryo::tellers::{AlphaShareRecord, TellerPublic, TellerShare};
use electryo::Transcript;

pub struct StateDir {
    pub root: PathBuf,
}

impl StateDir {
    pub fn new(root: &Path) -> Self {
        StateDir { root: root.to_path_buf() }
    }

    pub fn transcript_path(&self) -> PathBuf {
        self.root.join("transcript.bin")
    }

    fn config_path(&self) -> PathBuf {
        self.root.join("config.json")
    }

    pub fn save(&self, state: &ElectionState) -> Result<()> {
        fs::create_dir_all(&self.root)?;
        fs::create_dir_all(self.root.join("voters"))?;
        fs::create_dir_all(self.root.join("paper"))?;

        fs::write(
            self.config_path(),
            serde_json::to_string_pretty(&state.config)?,
        )?;
        fs::write(self.transcript_path(), state.transcript().to_bytes())?;

        let mut tellers = Vec::new();
        state.tellers_public.encode_into(&mut tellers);
        put_u32(&mut tellers, state.teller_shares.len() as u32);
        for s in &state.teller_shares {
            s.encode_into(&mut tellers);
        }
        fs::write(self.root.join("tellers.bin"), tellers)?;

        for (i, cred) in state.credentials.iter().enumerate() {
            fs::write(self.root.join(format!("voters/voter-{i}.key")), cred.encode())?;
        }
        for (i, ballot) in state.paper_store.iter().enumerate() {
            fs::write(self.root.join(format!("paper/ballot-{i:04}.bin")), ballot.encode())?;
        }

        let mut cast = Vec::new();
        put_u32(&mut cast, state.cast.len() as u32);
        for cb in &state.cast {
            cb.encode_into(&mut cast);
        }
        fs::write(self.root.join("scanner.bin"), cast)?;

        let (records, suppressed, delivered) = state.tra.export();
        let mut tra = Vec::new();
        put_u32(&mut tra, records.len() as u32);
        for r in &records {
            r.encode_into(&mut tra);
        }
        put_u32(&mut tra, suppressed.len() as u32);
        for s in &suppressed {
            put_u32(&mut tra, *s as u32);
        }
        put_u32(&mut tra, delivered.len() as u32);
        for d in &delivered {
            d.encode_into(&mut tra);
        }
        fs::write(self.root.join("tra.bin"), tra)?;

        let mut retr = Vec::new();
        put_u32(&mut retr, state.retrievals.len() as u32);
        for (v, t) in &state.retrievals {
            put_u32(&mut retr, *v as u32);
            put_u64(&mut retr, *t);
        }
        fs::write(self.root.join("retrievals.bin"), retr)?;
        Ok(())
    }

    pub fn load_config(&self) -> Result<ElectionConfig> {
        let raw = fs::read_to_string(self.config_path())
            .with_context(|| format!("no election at {}", self.root.display()))?;
        Ok(serde_json::from_str(&raw)?)
    }

    pub fn load_transcript(&self) -> Result<Transcript> {
        let bytes = fs::read(self.transcript_path())?;
        Transcript::from_bytes(&bytes).map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn load(&self) -> Result<ElectionState> {
        let config = self.load_config()?;
        let transcript = self.load_transcript()?;

        let tellers = fs::read(self.root.join("tellers.bin"))?;
        let mut r = Reader::new(&tellers);
        let tellers_public = TellerPublic::decode(&mut r).map_err(|e| anyhow::anyhow!("{e}"))?;
        let n = r.u32().map_err(|e| anyhow::anyhow!("{e}"))? as usize;
        let mut teller_shares = Vec::with_capacity(n);
        for _ in 0..n {
            teller_shares.push(TellerShare::decode(&mut r).map_err(|e| anyhow::anyhow!("{e}"))?);
        }

        let mut credentials = Vec::new();
        for i in 0..config.voter_count {
            let path = self.root.join(format!("voters/voter-{i}.key"));
            let bytes = fs::read(&path)
                .with_context(|| format!("missing voter key file {}", path.display()))?;
            credentials
                .push(VoterCredential::decode_all(&bytes).map_err(|e| anyhow::anyhow!("{e}"))?);
        }

        let mut paper_store = Vec::new();
        for i in 0.. {
            let path = self.root.join(format!("paper/ballot-{i:04}.bin"));
            if !path.exists() {
                break;
            }
            paper_store
                .push(PaperBallot::decode_all(&fs::read(path)?).map_err(|e| anyhow::anyhow!("{e}"))?);
        }

        let cast_bytes = fs::read(self.root.join("scanner.bin")).unwrap_or_default();
        let mut cast = Vec::new();
        if !cast_bytes.is_empty() {
            let mut r = Reader::new(&cast_bytes);
            let n = r.u32().map_err(|e| anyhow::anyhow!("{e}"))? as usize;
            for _ in 0..n {
                cast.push(CastBallot::decode(&mut r).map_err(|e| anyhow::anyhow!("{e}"))?);
            }
        }

        let tra_bytes = fs::read(self.root.join("tra.bin")).unwrap_or_default();
        let tra = if tra_bytes.is_empty() {
            TraState::new()
        } else {
            let mut r = Reader::new(&tra_bytes);
            let n = r.u32().map_err(|e| anyhow::anyhow!("{e}"))? as usize;
            let mut records = Vec::with_capacity(n);
            for _ in 0..n {
                records
                    .push(AlphaShareRecord::decode(&mut r).map_err(|e| anyhow::anyhow!("{e}"))?);
            }
            let n = r.u32().map_err(|e| anyhow::anyhow!("{e}"))? as usize;
            let mut suppressed = Vec::with_capacity(n);
            for _ in 0..n {
                suppressed.push(r.u32().map_err(|e| anyhow::anyhow!("{e}"))? as usize);
            }
            let n = r.u32().map_err(|e| anyhow::anyhow!("{e}"))? as usize;
            let mut delivered = Vec::with_capacity(n);
            for _ in 0..n {
                delivered.push(AlphaTerm::decode(&mut r).map_err(|e| anyhow::anyhow!("{e}"))?);
            }
            TraState::import(records, suppressed, delivered)
        };

        let retr_bytes = fs::read(self.root.join("retrievals.bin")).unwrap_or_default();
        let mut retrievals = BTreeMap::new();
        if !retr_bytes.is_empty() {
            let mut r = Reader::new(&retr_bytes);
            let n = r.u32().map_err(|e| anyhow::anyhow!("{e}"))? as usize;
            for _ in 0..n {
                let v = r.u32().map_err(|e| anyhow::anyhow!("{e}"))? as usize;
                let t = r.u64().map_err(|e| anyhow::anyhow!("{e}"))?;
                retrievals.insert(v, t);
            }
        }

        ElectionState::restore(
            config,
            transcript,
            tellers_public,
            teller_shares,
            credentials,
            paper_store,
            cast,
            tra,
            retrievals,
        )
        .map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn ensure_absent(&self) -> Result<()> {
        if self.config_path().exists() {
            bail!("election already set up at {}", self.root.display());
        }
        Ok(())
    }
}
