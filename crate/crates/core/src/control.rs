//! Company control as a least fixed point.
//!
//! A controller set `C` starts as `{x}` (or a coalition) and absorbs every
//! company `z` whose shares held by members of `C` sum to more than one half.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::OwnershipGraph;
use crate::scalar::{serde_share, Share};

/// A single entity or a coalition treated as one unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Controller {
    One(String),
    Many(Vec<String>),
}

impl Controller {
    /// Sorted, deduplicated; a coalition of one collapses to a single id.
    pub fn from_ids<I, T>(ids: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let mut ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        ids.sort();
        ids.dedup();
        if ids.len() == 1 {
            Controller::One(ids.pop().expect("one id"))
        } else {
            Controller::Many(ids)
        }
    }

    pub fn ids(&self) -> Vec<&str> {
        match self {
            Controller::One(id) => vec![id.as_str()],
            Controller::Many(ids) => ids.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct ControlResult<S: Share = f64> {
    pub controller: Controller,
    pub controlled: BTreeSet<String>,
    #[serde(serialize_with = "serialize_shares")]
    pub control_share: BTreeMap<String, S>,
}

fn serialize_shares<S: Share, Ser: Serializer>(map: &BTreeMap<String, S>, ser: Ser) -> Result<Ser::Ok, Ser::Error> {
    serde_share::serialize_map(map, ser)
}

impl<S: Share> ControlResult<S> {
    pub fn controls(&self, company: &str) -> bool {
        self.controlled.contains(company)
    }

    pub fn share(&self, company: &str) -> S {
        self.control_share.get(company).cloned().unwrap_or_else(S::zero)
    }
}

/// Fixed point by entity index.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlClosure<S> {
    pub seeds: Vec<usize>,
    /// Companies absorbed into the controller set, in order of absorption.
    pub controlled: Vec<usize>,
    /// Accumulated inflow from the final set, for every company outside the seeds.
    pub shares: HashMap<usize, S>,
}

impl<S: Share> ControlClosure<S> {
    pub fn share(&self, company: usize) -> S {
        self.shares.get(&company).cloned().unwrap_or_else(S::zero)
    }
}

pub fn control_closure<S: Share>(g: &OwnershipGraph<S>, seeds: &[usize]) -> ControlClosure<S> {
    let half = S::half();
    let mut members: BTreeSet<usize> = seeds.iter().copied().collect();
    let seeds: Vec<usize> = members.iter().copied().collect();
    let mut sums: HashMap<usize, S> = HashMap::new();
    let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
    let mut controlled = Vec::new();
    while let Some(y) = queue.pop_front() {
        for e in g.out_edges(y) {
            let z = e.owned;
            let sum = sums.entry(z).or_insert_with(S::zero);
            *sum = sum.clone() + e.share.clone();
            if *sum > half && g.is_company(z) && members.insert(z) {
                controlled.push(z);
                queue.push_back(z);
            }
        }
    }
    sums.retain(|z, _| g.is_company(*z) && seeds.binary_search(z).is_err());
    ControlClosure {
        seeds,
        controlled,
        shares: sums,
    }
}

fn to_result<S: Share>(g: &OwnershipGraph<S>, closure: ControlClosure<S>) -> ControlResult<S> {
    ControlResult {
        controller: Controller::from_ids(closure.seeds.iter().map(|&i| g.id(i))),
        controlled: closure
            .controlled
            .iter()
            .filter(|z| closure.seeds.binary_search(z).is_err())
            .map(|&z| g.id(z).to_string())
            .collect(),
        control_share: closure
            .shares
            .into_iter()
            .map(|(z, v)| (g.id(z).to_string(), v))
            .collect(),
    }
}

/// Companies controlled by `x`, directly or through companies it controls.
pub fn controls<S: Share>(g: &OwnershipGraph<S>, x: &str) -> Result<ControlResult<S>> {
    let s = g.require(x)?;
    Ok(to_result(g, control_closure(g, &[s])))
}

/// Companies controlled by a coalition acting together.
pub fn joint_controls<S: Share, T: AsRef<str>>(g: &OwnershipGraph<S>, coalition: &[T]) -> Result<ControlResult<S>> {
    if coalition.is_empty() {
        return Err(Error::InvalidParameter("coalition must not be empty".into()));
    }
    let seeds = coalition
        .iter()
        .map(|id| g.require(id.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(to_result(g, control_closure(g, &seeds)))
}
