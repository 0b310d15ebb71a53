//! Ownership graph data model.
//!
//! Entities are stored sorted by id, so entity indices order the same way as
//! ids. Edges are kept in a compressed adjacency layout sorted by
//! `(owner, owned)`, with a second index over incoming edges. The graph is
//! immutable once built; every mutating operation returns a new graph.

mod decree;
pub mod io;
mod transaction;
mod validate;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Share;

pub use decree::{filter_by_activity, DecreeConfig, RegionalOverride};
pub use transaction::{apply_all, apply_transaction, Transaction};
pub use validate::{validate, validate_records, Issue, IssueKind, ValidationReport, SHARE_SUM_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Person,
    Company,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Person => "person",
            EntityKind::Company => "company",
        }
    }
}

/// A person or a company.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub kind: EntityKind,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub activity_code: Option<String>,
    #[serde(default)]
    pub region: Option<String>,
    #[serde(default)]
    pub strategic: bool,
    #[serde(default)]
    pub foreign: bool,
    #[serde(default)]
    pub public: bool,
}

impl Entity {
    pub fn company(id: impl Into<String>) -> Self {
        Self::new(id, EntityKind::Company)
    }

    pub fn person(id: impl Into<String>) -> Self {
        Self::new(id, EntityKind::Person)
    }

    fn new(id: impl Into<String>, kind: EntityKind) -> Self {
        let id = id.into();
        Entity {
            name: id.clone(),
            id,
            kind,
            activity_code: None,
            region: None,
            strategic: false,
            foreign: false,
            public: false,
        }
    }

    pub fn with_activity(mut self, code: impl Into<String>) -> Self {
        self.activity_code = Some(code.into());
        self
    }

    pub fn with_region(mut self, region: impl Into<String>) -> Self {
        self.region = Some(region.into());
        self
    }

    pub fn is_company(&self) -> bool {
        self.kind == EntityKind::Company
    }
}

/// An edge as it appears in input data, endpoints by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct EdgeRecord<S: Share = f64> {
    pub owner: String,
    pub owned: String,
    #[serde(with = "crate::scalar::serde_share")]
    pub share: S,
    /// Source row for diagnostics, when the record came from a file.
    #[serde(skip)]
    pub row: Option<usize>,
}

impl<S: Share> EdgeRecord<S> {
    pub fn new(owner: impl Into<String>, owned: impl Into<String>, share: S) -> Self {
        EdgeRecord {
            owner: owner.into(),
            owned: owned.into(),
            share,
            row: None,
        }
    }
}

/// Raw entity and edge lists, before any structural checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct GraphRecords<S: Share = f64> {
    pub entities: Vec<Entity>,
    pub edges: Vec<EdgeRecord<S>>,
}

/// A resolved edge, endpoints as entity indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<S> {
    pub owner: usize,
    pub owned: usize,
    pub share: S,
}

#[derive(Debug, Clone)]
pub struct OwnershipGraph<S: Share = f64> {
    entities: Vec<Entity>,
    index: HashMap<String, usize>,
    /// Sorted by `(owner, owned)`.
    edges: Vec<Edge<S>>,
    out_offsets: Vec<usize>,
    /// Edge positions sorted by `(owned, owner)`.
    in_edges: Vec<usize>,
    in_offsets: Vec<usize>,
}

impl<S: Share> PartialEq for OwnershipGraph<S> {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities && self.edges == other.edges
    }
}

impl<S: Share> Default for OwnershipGraph<S> {
    fn default() -> Self {
        Self::assemble(Vec::new(), HashMap::new(), Vec::new())
    }
}

fn row_of(record_row: Option<usize>, position: usize) -> usize {
    record_row.unwrap_or(position + 1)
}

impl<S: Share> OwnershipGraph<S> {
    /// Builds a graph from records.
    ///
    /// Rejects duplicate entity ids, duplicate `(owner, owned)` pairs, edges
    /// referencing unknown ids and shares outside `(0, 1]`. Semantic issues
    /// (owned persons, over-allocation) are left to [`validate`].
    pub fn from_records(records: GraphRecords<S>) -> Result<Self> {
        let GraphRecords {
            mut entities,
            edges: edge_records,
        } = records;
        entities.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in entities.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::DuplicateEntity {
                    id: pair[0].id.clone(),
                });
            }
        }
        let index: HashMap<String, usize> = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), i))
            .collect();

        let mut seen = HashSet::with_capacity(edge_records.len());
        let mut edges = Vec::with_capacity(edge_records.len());
        for (position, record) in edge_records.into_iter().enumerate() {
            let row = row_of(record.row, position);
            let resolve = |id: &str| {
                index.get(id).copied().ok_or_else(|| Error::DanglingEdge {
                    row,
                    id: id.to_string(),
                })
            };
            let owner = resolve(&record.owner)?;
            let owned = resolve(&record.owned)?;
            if !(record.share > S::zero() && record.share <= S::one()) {
                return Err(Error::ShareOutOfRange {
                    row,
                    value: record.share.format_share(),
                });
            }
            if !seen.insert((owner, owned)) {
                return Err(Error::DuplicateEdge {
                    row,
                    owner: record.owner,
                    owned: record.owned,
                });
            }
            edges.push(Edge {
                owner,
                owned,
                share: record.share,
            });
        }
        Ok(Self::assemble(entities, index, edges))
    }

    /// Convenience constructor from `(owner, owned, share)` triples.
    pub fn from_parts<'a>(
        entities: Vec<Entity>,
        edges: impl IntoIterator<Item = (&'a str, &'a str, S)>,
    ) -> Result<Self> {
        let edges = edges
            .into_iter()
            .map(|(o, t, s)| EdgeRecord::new(o, t, s))
            .collect();
        Self::from_records(GraphRecords { entities, edges })
    }

    fn assemble(entities: Vec<Entity>, index: HashMap<String, usize>, mut edges: Vec<Edge<S>>) -> Self {
        let n = entities.len();
        edges.sort_by_key(|e| (e.owner, e.owned));
        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for e in &edges {
            out_offsets[e.owner + 1] += 1;
            in_offsets[e.owned + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        // Counting sort; edges are already ordered by owner so each bucket
        // ends up ordered by owner too.
        let mut fill = in_offsets.clone();
        let mut in_edges = vec![0usize; edges.len()];
        for (pos, e) in edges.iter().enumerate() {
            in_edges[fill[e.owned]] = pos;
            fill[e.owned] += 1;
        }
        OwnershipGraph {
            entities,
            index,
            edges,
            out_offsets,
            in_edges,
            in_offsets,
        }
    }

    /// Same entities, new edge list.
    pub(crate) fn with_edges(&self, edges: Vec<Edge<S>>) -> Self {
        Self::assemble(self.entities.clone(), self.index.clone(), edges)
    }

    /// Induced subgraph over the kept entity indices.
    pub(crate) fn induced(&self, keep: &[bool]) -> Self {
        let mut remap = vec![usize::MAX; self.len()];
        let mut entities = Vec::new();
        for (i, e) in self.entities.iter().enumerate() {
            if keep[i] {
                remap[i] = entities.len();
                entities.push(e.clone());
            }
        }
        let index = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), i))
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| keep[e.owner] && keep[e.owned])
            .map(|e| Edge {
                owner: remap[e.owner],
                owned: remap[e.owned],
                share: e.share.clone(),
            })
            .collect();
        Self::assemble(entities, index, edges)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn entity(&self, idx: usize) -> &Entity {
        &self.entities[idx]
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.entities[idx].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::UnknownEntity { id: id.to_string() })
    }

    pub fn require_company(&self, id: &str) -> Result<usize> {
        let idx = self.require(id)?;
        if !self.is_company(idx) {
            return Err(Error::NotACompany { id: id.to_string() });
        }
        Ok(idx)
    }

    pub fn is_company(&self, idx: usize) -> bool {
        self.entities[idx].is_company()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// All edges, sorted by `(owner, owned)`.
    pub fn edges(&self) -> &[Edge<S>] {
        &self.edges
    }

    pub fn out_edges(&self, idx: usize) -> &[Edge<S>] {
        &self.edges[self.out_offsets[idx]..self.out_offsets[idx + 1]]
    }

    pub fn in_edges(&self, idx: usize) -> impl Iterator<Item = &Edge<S>> + '_ {
        self.in_edges[self.in_offsets[idx]..self.in_offsets[idx + 1]]
            .iter()
            .map(move |&pos| &self.edges[pos])
    }

    pub fn out_degree(&self, idx: usize) -> usize {
        self.out_offsets[idx + 1] - self.out_offsets[idx]
    }

    pub fn in_degree(&self, idx: usize) -> usize {
        self.in_offsets[idx + 1] - self.in_offsets[idx]
    }

    /// Direct share `owner` holds in `owned`.
    pub fn share(&self, owner: usize, owned: usize) -> Option<&S> {
        let out = self.out_edges(owner);
        out.binary_search_by_key(&owned, |e| e.owned)
            .ok()
            .map(|pos| &out[pos].share)
    }

    pub fn share_by_id(&self, owner: &str, owned: &str) -> Option<&S> {
        self.share(self.index_of(owner)?, self.index_of(owned)?)
    }

    /// Sum of recorded incoming shares.
    pub fn incoming_sum(&self, idx: usize) -> S {
        self.in_edges(idx)
            .fold(S::zero(), |acc, e| acc + e.share.clone())
    }

    pub fn companies(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.is_company(i))
    }

    pub fn to_records(&self) -> GraphRecords<S> {
        GraphRecords {
            entities: self.entities.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord::new(self.id(e.owner), self.id(e.owned), e.share.clone()))
                .collect(),
        }
    }

    /// Converts the share type, e.g. to an exact rational graph.
    pub fn convert<T: Share>(&self, mut f: impl FnMut(&S) -> T) -> OwnershipGraph<T> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                owner: e.owner,
                owned: e.owned,
                share: f(&e.share),
            })
            .collect();
        OwnershipGraph::assemble(self.entities.clone(), self.index.clone(), edges)
    }

    /// Converts through the decimal text form, so `0.31_f64` becomes exactly `31/100`.
    pub fn to_exact<T: Share>(&self) -> OwnershipGraph<T> {
        self.convert(|s| T::parse_share(&s.format_share()).unwrap_or_else(|| T::from_f64_lossy(s.to_f64_lossy())))
    }

    /// Entities within `radius` undirected hops of `center`, capped at `max_nodes`
    /// (breadth-first, ties by index).
    pub fn neighborhood(&self, center: usize, radius: usize, max_nodes: usize) -> Self {
        let mut keep = vec![false; self.len()];
        keep[center] = true;
        let mut kept = 1;
        let mut frontier = vec![center];
        'outer: for _ in 0..radius {
            let mut next = Vec::new();
            for &v in &frontier {
                let mut around: Vec<usize> = self
                    .out_edges(v)
                    .iter()
                    .map(|e| e.owned)
                    .chain(self.in_edges(v).map(|e| e.owner))
                    .collect();
                around.sort_unstable();
                for u in around {
                    if !keep[u] {
                        if kept >= max_nodes {
                            break 'outer;
                        }
                        keep[u] = true;
                        kept += 1;
                        next.push(u);
                    }
                }
            }
            frontier = next;
        }
        self.induced(&keep)
    }
}
