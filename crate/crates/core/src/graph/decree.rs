use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EntityKind, OwnershipGraph};
use crate::scalar::Share;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionalOverride {
    #[serde(default)]
    pub allow: Vec<String>,
    #[serde(default)]
    pub forbid: Vec<String>,
}

/// Which activity codes a decree keeps open.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecreeConfig {
    #[serde(default)]
    pub allowed_prefixes: Vec<String>,
    #[serde(default)]
    pub regional_overrides: BTreeMap<String, RegionalOverride>,
}

fn has_prefix(code: &str, prefixes: &[String]) -> bool {
    prefixes.iter().any(|p| code.starts_with(p.as_str()))
}

impl DecreeConfig {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Whether a company with this code and region stays open.
    /// A regional forbid beats a regional allow, which beats the national list.
    pub fn allows(&self, activity_code: Option<&str>, region: Option<&str>) -> bool {
        let Some(code) = activity_code else {
            return false;
        };
        if let Some(ov) = region.and_then(|r| self.regional_overrides.get(r)) {
            if has_prefix(code, &ov.forbid) {
                return false;
            }
            if has_prefix(code, &ov.allow) {
                return true;
            }
        }
        has_prefix(code, &self.allowed_prefixes)
    }
}

/// Subgraph of allowed companies, the persons owning at least one of them,
/// and the edges between retained entities.
pub fn filter_by_activity<S: Share>(g: &OwnershipGraph<S>, decree: &DecreeConfig) -> OwnershipGraph<S> {
    let mut keep: Vec<bool> = g
        .entities()
        .iter()
        .map(|e| {
            e.kind == EntityKind::Company
                && decree.allows(e.activity_code.as_deref(), e.region.as_deref())
        })
        .collect();
    for i in 0..g.len() {
        if g.entity(i).kind == EntityKind::Person {
            keep[i] = g.out_edges(i).iter().any(|e| keep[e.owned]);
        }
    }
    g.induced(&keep)
}
