use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use ownet_core::golden_power::Scenario;
use ownet_core::graph::apply_transaction;
use ownet_core::graph::io::{load_graph, load_graph_files, save_graph_files};
use ownet_core::{OwnershipGraph, Result, Transaction};
use serde::Serialize;
use tokio::sync::Mutex;

use crate::error::ApiError;
use crate::journal::{Event, Journal};

pub type Graph = Arc<OwnershipGraph>;

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub graph_id: String,
    pub base: Graph,
    /// Scenario sets; `staged` holds the session's staged transactions.
    pub scenario: Scenario,
    /// `base` with every staged transaction applied.
    pub overlay: Graph,
    pub created: u64,
    pub updated: u64,
    /// Set when journal replay could not rebuild the staged state.
    pub broken: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SessionView<'a> {
    pub session_id: &'a str,
    pub graph_id: &'a str,
    pub strategic: &'a std::collections::BTreeSet<String>,
    pub foreign: &'a std::collections::BTreeSet<String>,
    pub public: &'a std::collections::BTreeSet<String>,
    pub staged: &'a [Transaction],
    pub created: u64,
    pub updated: u64,
}

impl Session {
    fn new(id: String, graph_id: String, base: Graph, scenario: Scenario, at: u64) -> Result<Session> {
        scenario.validate(&base)?;
        let overlay = if scenario.staged.is_empty() {
            base.clone()
        } else {
            Arc::new(scenario.staged_graph(&base)?)
        };
        Ok(Session {
            id,
            graph_id,
            base,
            scenario,
            overlay,
            created: at,
            updated: at,
            broken: None,
        })
    }

    pub fn view(&self) -> SessionView<'_> {
        SessionView {
            session_id: &self.id,
            graph_id: &self.graph_id,
            strategic: &self.scenario.strategic,
            foreign: &self.scenario.foreign,
            public: &self.scenario.public,
            staged: &self.scenario.staged,
            created: self.created,
            updated: self.updated,
        }
    }

    pub fn usable(&self) -> Result<(), ApiError> {
        match &self.broken {
            Some(why) => Err(ApiError::replay(format!("session {}: {why}", self.id))),
            None => Ok(()),
        }
    }

    /// Scenario sets with nothing staged, to pair with `overlay`.
    pub fn sets(&self) -> Scenario {
        Scenario {
            staged: Vec::new(),
            ..self.scenario.clone()
        }
    }

    pub fn stage(&mut self, t: Transaction, at: u64) -> Result<()> {
        let next = apply_transaction(&self.overlay, &t)?;
        self.overlay = Arc::new(next);
        self.scenario.staged.push(t);
        self.updated = at;
        Ok(())
    }

    /// The overlay after `txs`, without touching the session.
    pub fn preview(&self, txs: &[Transaction]) -> Result<OwnershipGraph> {
        ownet_core::graph::apply_all(&self.overlay, txs)
    }

    pub fn commit(&mut self, txs: Vec<Transaction>, overlay: OwnershipGraph, at: u64) {
        self.overlay = Arc::new(overlay);
        self.scenario.staged.extend(txs);
        self.updated = at;
    }

    pub fn unstage(&mut self, index: usize, at: u64) -> Result<()> {
        let mut staged = self.scenario.staged.clone();
        staged.remove(index);
        let scenario = Scenario {
            staged,
            ..self.scenario.clone()
        };
        self.overlay = Arc::new(scenario.staged_graph(&self.base)?);
        self.scenario = scenario;
        self.updated = at;
        Ok(())
    }
}

#[derive(Debug, Default)]
struct Inner {
    graphs: RwLock<HashMap<String, Graph>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    journal: Option<Journal>,
}

/// Shared service state. Cloning is cheap.
#[derive(Debug, Clone, Default)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    /// In-memory state; nothing survives the process.
    pub fn ephemeral() -> AppState {
        AppState::default()
    }

    /// State persisted under `data_dir`, rebuilt from its journal.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<AppState> {
        let (journal, events) = Journal::open(data_dir)?;
        let mut graphs: HashMap<String, Graph> = HashMap::new();
        let mut sessions: HashMap<String, Session> = HashMap::new();
        for event in events {
            replay(&journal, &mut graphs, &mut sessions, event)?;
        }
        tracing::info!(graphs = graphs.len(), sessions = sessions.len(), "journal replayed");
        let sessions = sessions
            .into_iter()
            .map(|(id, s)| (id, Arc::new(Mutex::new(s))))
            .collect();
        Ok(AppState {
            inner: Arc::new(Inner {
                graphs: RwLock::new(graphs),
                sessions: RwLock::new(sessions),
                journal: Some(journal),
            }),
        })
    }

    pub fn graph(&self, id: &str) -> Result<Graph, ApiError> {
        let graphs = self.inner.graphs.read().expect("graph map poisoned");
        graphs.get(id).cloned().ok_or_else(|| ApiError::not_found("graph", id))
    }

    pub fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        let sessions = self.inner.sessions.read().expect("session map poisoned");
        sessions.get(id).cloned().ok_or_else(|| ApiError::not_found("session", id))
    }

    pub fn add_graph(&self, nodes: &[u8], edges: &[u8]) -> Result<(String, Graph), ApiError> {
        let g: OwnershipGraph = load_graph(nodes, edges)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        if let Some(journal) = &self.inner.journal {
            let dir = journal.graph_dir(&id);
            std::fs::create_dir_all(&dir).map_err(ownet_core::Error::from)?;
            save_graph_files(&g, dir.join("nodes.csv"), dir.join("edges.csv"))?;
            journal.append(&Event::Graph { graph_id: id.clone() })?;
        }
        let g = Arc::new(g);
        self.inner
            .graphs
            .write()
            .expect("graph map poisoned")
            .insert(id.clone(), g.clone());
        Ok((id, g))
    }

    pub fn add_session(&self, graph_id: &str, scenario: Option<Scenario>) -> Result<String, ApiError> {
        let base = self.graph(graph_id)?;
        let scenario = scenario.unwrap_or_else(|| Scenario::from_flags(&base));
        let id = uuid::Uuid::new_v4().simple().to_string();
        let at = now();
        let session = Session::new(id.clone(), graph_id.to_string(), base, scenario.clone(), at)?;
        self.record(&Event::Session {
            session_id: id.clone(),
            graph_id: graph_id.to_string(),
            scenario,
            at,
        })?;
        self.inner
            .sessions
            .write()
            .expect("session map poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    /// Journals `event` when persistence is on.
    pub fn record(&self, event: &Event) -> Result<(), ApiError> {
        if let Some(journal) = &self.inner.journal {
            journal.append(event)?;
        }
        Ok(())
    }
}

fn replay(
    journal: &Journal,
    graphs: &mut HashMap<String, Graph>,
    sessions: &mut HashMap<String, Session>,
    event: Event,
) -> Result<()> {
    match event {
        Event::Graph { graph_id } => {
            let dir = journal.graph_dir(&graph_id);
            match load_graph_files(dir.join("nodes.csv"), dir.join("edges.csv")) {
                Ok(g) => {
                    graphs.insert(graph_id, Arc::new(g));
                }
                Err(e) => tracing::warn!(graph_id, "graph not restored: {e}"),
            }
        }
        Event::Session {
            session_id,
            graph_id,
            scenario,
            at,
        } => {
            let session = match graphs.get(&graph_id) {
                Some(base) => Session::new(session_id.clone(), graph_id.clone(), base.clone(), scenario.clone(), at),
                None => Err(ownet_core::Error::InvalidParameter(format!("graph {graph_id} is missing"))),
            };
            let session = session.unwrap_or_else(|e| Session {
                id: session_id.clone(),
                graph_id,
                base: Arc::default(),
                overlay: Arc::default(),
                scenario,
                created: at,
                updated: at,
                broken: Some(e.to_string()),
            });
            sessions.insert(session_id, session);
        }
        Event::Stage {
            session_id,
            transaction,
            at,
        } => {
            if let Some(s) = sessions.get_mut(&session_id).filter(|s| s.broken.is_none()) {
                if let Err(e) = s.stage(transaction, at) {
                    s.broken = Some(e.to_string());
                }
            }
        }
        Event::Unstage { session_id, index, at } => {
            if let Some(s) = sessions.get_mut(&session_id).filter(|s| s.broken.is_none()) {
                let outcome = if index < s.scenario.staged.len() {
                    s.unstage(index, at)
                } else {
                    Err(ownet_core::Error::InvalidParameter(format!("no staged transaction {index}")))
                };
                if let Err(e) = outcome {
                    s.broken = Some(e.to_string());
                }
            }
        }
    }
    Ok(())
}
