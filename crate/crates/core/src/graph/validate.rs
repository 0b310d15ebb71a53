use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::{EntityKind, GraphRecords, OwnershipGraph};
use crate::scalar::Share;

/// Incoming shares may exceed 1 by this much before a warning is raised.
pub const SHARE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    DuplicateEntity,
    DanglingEdge,
    ShareOutOfRange,
    DuplicateEdge,
    PersonOwned,
    PersonActivityCode,
    OverAllocated,
    Isolated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub kind: IssueKind,
    /// The entity the issue is about, used for ordering.
    pub entity: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_loadable(&self) -> bool {
        self.errors.is_empty()
    }
}

fn issue(kind: IssueKind, entity: &str, row: Option<usize>, message: String) -> Issue {
    Issue {
        kind,
        entity: entity.to_string(),
        row,
        message,
    }
}

/// Lists every invariant violation in raw records, ordered by entity id.
pub fn validate_records<S: Share>(records: &GraphRecords<S>) -> ValidationReport {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    let mut kinds: HashMap<&str, EntityKind> = HashMap::new();
    for e in &records.entities {
        if kinds.insert(&e.id, e.kind).is_some() {
            errors.push(issue(
                IssueKind::DuplicateEntity,
                &e.id,
                None,
                format!("duplicate entity id {}", e.id),
            ));
        }
        if e.kind == EntityKind::Person && e.activity_code.is_some() {
            errors.push(issue(
                IssueKind::PersonActivityCode,
                &e.id,
                None,
                format!("person {} carries an activity code", e.id),
            ));
        }
    }

    let mut pairs = HashSet::new();
    let mut incoming: HashMap<&str, f64> = HashMap::new();
    let mut touched: HashSet<&str> = HashSet::new();
    for (pos, edge) in records.edges.iter().enumerate() {
        let row = Some(edge.row.unwrap_or(pos + 1));
        let mut resolved = true;
        for id in [&edge.owner, &edge.owned] {
            if !kinds.contains_key(id.as_str()) {
                resolved = false;
                errors.push(issue(
                    IssueKind::DanglingEdge,
                    id,
                    row,
                    format!("edge ({},{}) references unknown entity {id}", edge.owner, edge.owned),
                ));
            }
        }
        if !(edge.share > S::zero() && edge.share <= S::one()) {
            errors.push(issue(
                IssueKind::ShareOutOfRange,
                &edge.owned,
                row,
                format!(
                    "share out of range (0,1]: ({},{}) = {}",
                    edge.owner,
                    edge.owned,
                    edge.share.format_share()
                ),
            ));
        }
        if !pairs.insert((edge.owner.as_str(), edge.owned.as_str())) {
            errors.push(issue(
                IssueKind::DuplicateEdge,
                &edge.owned,
                row,
                format!("duplicate edge ({},{})", edge.owner, edge.owned),
            ));
        }
        if kinds.get(edge.owned.as_str()) == Some(&EntityKind::Person) {
            errors.push(issue(
                IssueKind::PersonOwned,
                &edge.owned,
                row,
                format!("person cannot be owned: {} owns {}", edge.owner, edge.owned),
            ));
        }
        if resolved {
            *incoming.entry(&edge.owned).or_default() += edge.share.to_f64_lossy();
            touched.insert(&edge.owner);
            touched.insert(&edge.owned);
        }
    }

    for e in &records.entities {
        if let Some(&sum) = incoming.get(e.id.as_str()) {
            if e.kind == EntityKind::Company && sum > 1.0 + SHARE_SUM_TOLERANCE {
                warnings.push(issue(
                    IssueKind::OverAllocated,
                    &e.id,
                    None,
                    format!("company {} incoming share {sum:.2} > 1", e.id),
                ));
            }
        }
        if !touched.contains(e.id.as_str()) {
            warnings.push(issue(
                IssueKind::Isolated,
                &e.id,
                None,
                format!("{} {} is isolated", e.kind.as_str(), e.id),
            ));
        }
    }

    let order = |a: &Issue, b: &Issue| (&a.entity, a.kind, a.row).cmp(&(&b.entity, b.kind, b.row));
    errors.sort_by(order);
    warnings.sort_by(order);
    ValidationReport { errors, warnings }
}

pub fn validate<S: Share>(g: &OwnershipGraph<S>) -> ValidationReport {
    validate_records(&g.to_records())
}
