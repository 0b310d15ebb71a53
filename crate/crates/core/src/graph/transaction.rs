use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Edge, OwnershipGraph};
use crate::error::{Error, Result};
use crate::scalar::Share;

/// A proposed share acquisition: `buyer` ends up holding `share` of `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct Transaction<S: Share = f64> {
    pub buyer: String,
    pub target: String,
    #[serde(with = "crate::scalar::serde_share")]
    pub share: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seller: Option<String>,
}

impl<S: Share> Transaction<S> {
    pub fn new(buyer: impl Into<String>, target: impl Into<String>, share: S) -> Self {
        Transaction {
            buyer: buyer.into(),
            target: target.into(),
            share,
            seller: None,
        }
    }

    pub fn with_seller(mut self, seller: impl Into<String>) -> Self {
        self.seller = Some(seller.into());
        self
    }
}

/// Parses `buyer,target,share[,seller]`.
impl<S: Share> FromStr for Transaction<S> {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) || parts[..2].iter().any(|p| p.is_empty()) {
            return Err(Error::InvalidParameter(format!(
                "transaction must be buyer,target,share[,seller]: {text:?}"
            )));
        }
        let share = S::parse_share(parts[2])
            .ok_or_else(|| Error::InvalidParameter(format!("bad share {:?}", parts[2])))?;
        let mut tx = Transaction::new(parts[0], parts[1], share);
        if let Some(seller) = parts.get(3).filter(|s| !s.is_empty()) {
            tx.seller = Some(seller.to_string());
        }
        Ok(tx)
    }
}

/// Returns a new graph in which `buyer` holds exactly `t.share` of `target`.
///
/// An existing `(buyer, target)` edge is replaced, not incremented. With a
/// seller, the seller's holding is reduced by the same amount and dropped once
/// it reaches zero.
pub fn apply_transaction<S: Share>(g: &OwnershipGraph<S>, t: &Transaction<S>) -> Result<OwnershipGraph<S>> {
    let buyer = g.require(&t.buyer)?;
    let target = g.require_company(&t.target)?;
    if !(t.share > S::zero() && t.share <= S::one()) {
        return Err(Error::InvalidParameter(format!(
            "transaction share must be in (0,1], got {}",
            t.share.format_share()
        )));
    }
    let mut edges = g.edges().to_vec();
    if let Some(seller_id) = &t.seller {
        let seller = g.require(seller_id)?;
        let pos = edges
            .iter()
            .position(|e| e.owner == seller && e.owned == target);
        let holds = pos.map(|p| edges[p].share.clone()).unwrap_or_else(S::zero);
        if holds < t.share {
            return Err(Error::InsufficientShare {
                seller: seller_id.clone(),
                holds: holds.to_f64_lossy(),
                needed: t.share.to_f64_lossy(),
            });
        }
        if let Some(p) = pos {
            let rest = holds - t.share.clone();
            if rest <= S::zero() {
                edges.remove(p);
            } else {
                edges[p].share = rest;
            }
        }
    }
    match edges
        .iter_mut()
        .find(|e| e.owner == buyer && e.owned == target)
    {
        Some(edge) => edge.share = t.share.clone(),
        None => edges.push(Edge {
            owner: buyer,
            owned: target,
            share: t.share.clone(),
        }),
    }
    Ok(g.with_edges(edges))
}

/// Applies transactions in order.
pub fn apply_all<S: Share>(g: &OwnershipGraph<S>, txs: &[Transaction<S>]) -> Result<OwnershipGraph<S>> {
    let mut current = g.clone();
    for t in txs {
        current = apply_transaction(&current, t)?;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Entity;

    fn fig8() -> OwnershipGraph {
        OwnershipGraph::from_parts(
            vec![
                Entity::company("1"),
                Entity::company("A"),
                Entity::company("B"),
                Entity::company("C"),
            ],
            [("A", "B", 0.20), ("C", "B", 0.31)],
        )
        .unwrap()
    }

    #[test]
    fn acquisition_adds_edge() {
        let g = fig8();
        let after = apply_transaction(&g, &Transaction::new("1", "A", 0.51)).unwrap();
        assert_eq!(after.share_by_id("1", "A"), Some(&0.51));
        assert_eq!(after.edge_count(), 3);
        // input untouched
        assert_eq!(g.share_by_id("1", "A"), None);
        assert_eq!(g, fig8());
    }

    #[test]
    fn replacement_semantics() {
        let g = OwnershipGraph::from_parts(
            vec![Entity::company("X"), Entity::company("Y"), Entity::company("Z")],
            [("X", "Y", 0.1), ("Z", "Y", 0.3)],
        )
        .unwrap();
        let after = apply_transaction(&g, &Transaction::new("X", "Y", 0.2)).unwrap();
        assert_eq!(after.share_by_id("X", "Y"), Some(&0.2));

        let err = apply_transaction(&g, &Transaction::new("X", "Y", 0.4).with_seller("Z")).unwrap_err();
        assert_eq!(err.to_string(), "seller Z holds 0.30 < 0.40");

        let after = apply_transaction(&g, &Transaction::new("X", "Y", 0.3).with_seller("Z")).unwrap();
        assert_eq!(after.share_by_id("Z", "Y"), None);
        assert_eq!(after.share_by_id("X", "Y"), Some(&0.3));
    }

    #[test]
    fn rejects_unknown_and_person_targets() {
        let g = OwnershipGraph::from_parts(vec![Entity::person("P"), Entity::company("1")], []).unwrap();
        assert!(matches!(
            apply_transaction(&g, &Transaction::new("Q", "1", 0.2)),
            Err(Error::UnknownEntity { .. })
        ));
        assert!(matches!(
            apply_transaction(&g, &Transaction::new("1", "P", 0.2)),
            Err(Error::NotACompany { .. })
        ));
        assert!(apply_transaction(&g, &Transaction::new("P", "1", 1.5)).is_err());
    }

    #[test]
    fn parses_cli_form() {
        let t: Transaction = "1,B,0.51".parse().unwrap();
        assert_eq!(t, Transaction::new("1", "B", 0.51));
        let t: Transaction = "1, B, 0.4, Z".parse().unwrap();
        assert_eq!(t.seller.as_deref(), Some("Z"));
        assert!("1,B".parse::<Transaction>().is_err());
        assert!("1,B,x".parse::<Transaction>().is_err());
    }
}
