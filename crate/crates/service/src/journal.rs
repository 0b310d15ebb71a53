//! Append-only JSON-lines log of uploads and session operations.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::sync::Mutex;

use ownet_core::golden_power::Scenario;
use ownet_core::{Result, Transaction};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Event {
    Graph {
        graph_id: String,
    },
    Session {
        session_id: String,
        graph_id: String,
        scenario: Scenario,
        at: u64,
    },
    Stage {
        session_id: String,
        transaction: Transaction,
        at: u64,
    },
    Unstage {
        session_id: String,
        index: usize,
        at: u64,
    },
}

#[derive(Debug)]
pub struct Journal {
    dir: PathBuf,
    file: Mutex<File>,
}

impl Journal {
    const FILE: &'static str = "journal.jsonl";

    /// Opens (creating if needed) the journal under `dir` and returns it with
    /// every event recorded so far. A torn final line is dropped.
    pub fn open(dir: impl Into<PathBuf>) -> Result<(Journal, Vec<Event>)> {
        let dir = dir.into();
        fs::create_dir_all(dir.join("graphs"))?;
        let path = dir.join(Self::FILE);
        let mut events = Vec::new();
        if path.exists() {
            let lines: Vec<String> = BufReader::new(File::open(&path)?).lines().collect::<std::io::Result<_>>()?;
            let last = lines.len().saturating_sub(1);
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str(line) {
                    Ok(e) => events.push(e),
                    Err(e) if i == last => tracing::warn!("dropping torn journal tail: {e}"),
                    Err(e) => return Err(e.into()),
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok((
            Journal {
                dir,
                file: Mutex::new(file),
            },
            events,
        ))
    }

    pub fn graph_dir(&self, graph_id: &str) -> PathBuf {
        self.dir.join("graphs").join(graph_id)
    }

    pub fn append(&self, event: &Event) -> Result<()> {
        let mut line = serde_json::to_string(event)?;
        line.push('\n');
        let mut file = self.file.lock().expect("journal lock poisoned");
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        Ok(())
    }
}
