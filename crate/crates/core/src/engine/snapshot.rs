//! Versioned, checksummed engine snapshots for resuming long runs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Engine, FpConfig, FpState, Trace};
use crate::error::{Error, Result};
use crate::game::BimatrixGame;
use crate::generators::write_game;

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Payload {
    game_digest: String,
    config: FpConfig,
    state: FpState,
    trace: Trace,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    version: u32,
    checksum: String,
    payload: String,
}

/// Opaque serialized engine state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    bytes: Vec<u8>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn game_digest(game: &BimatrixGame) -> String {
    let mut buf = Vec::new();
    write_game(game, &mut buf).expect("writing to a Vec cannot fail");
    sha256_hex(&buf)
}

impl Snapshot {
    pub(crate) fn capture(engine: &Engine<'_>) -> Snapshot {
        let payload = Payload {
            game_digest: game_digest(engine.game()),
            config: *engine.config(),
            state: engine.state().clone(),
            trace: engine.trace().clone(),
        };
        let payload = serde_json::to_string(&payload).expect("snapshot payload serializes");
        let env = Envelope {
            version: SNAPSHOT_VERSION,
            checksum: sha256_hex(payload.as_bytes()),
            payload,
        };
        Snapshot {
            bytes: serde_json::to_vec(&env).expect("snapshot envelope serializes"),
        }
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Snapshot {
        Snapshot { bytes }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub(crate) fn restore<'g>(&self, game: &'g BimatrixGame) -> Result<Engine<'g>> {
        let env: Envelope = serde_json::from_slice(&self.bytes)
            .map_err(|e| Error::Snapshot(format!("unreadable snapshot: {e}")))?;
        if env.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "snapshot version {} is not supported (expected {SNAPSHOT_VERSION})",
                env.version
            )));
        }
        if sha256_hex(env.payload.as_bytes()) != env.checksum {
            return Err(Error::Snapshot("checksum mismatch".into()));
        }
        let p: Payload = serde_json::from_str(&env.payload)
            .map_err(|e| Error::Snapshot(format!("corrupt payload: {e}")))?;
        if p.game_digest != game_digest(game) {
            return Err(Error::Snapshot("snapshot was taken on a different game".into()));
        }
        let s = &p.state;
        let consistent = s.counts_row.len() == game.rows()
            && s.counts_col.len() == game.cols()
            && s.acc.len(crate::game::Player::Row) == game.rows()
            && s.acc.len(crate::game::Player::Col) == game.cols()
            && s.counts_row.iter().sum::<u64>() == s.t
            && s.counts_col.iter().sum::<u64>() == s.t
            && p.trace.total_t() == s.t;
        if !consistent {
            return Err(Error::Snapshot("state is inconsistent with the game".into()));
        }
        Ok(Engine::from_parts(game, p.config, p.state, p.trace))
    }
}
