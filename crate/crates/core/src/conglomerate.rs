//! Conglomerates: classes of companies linked by strong mutual ownership.
//!
//! Two companies are close when one owns more than `eps` of the other
//! (in either direction), or when some third party, company or person, owns
//! more than `eps` of both. Conglomerates are the classes of the transitive
//! closure of closeness.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;

use crate::components::{ComponentIds, DisjointSet};
use crate::error::{Error, Result};
use crate::graph::OwnershipGraph;
use crate::ownership::{check_convergence, epsilon_baldone_ownership, integrated_ownership_many, IterationParams};
use crate::scalar::Share;

pub const DEFAULT_EPSILON: f64 = 0.5;

/// `max(O(x, y), O(y, x))` over eps-paths.
pub fn undirected_ownership<S: Share>(g: &OwnershipGraph<S>, x: &str, y: &str, eps: &S) -> Result<S> {
    g.require_company(x)?;
    g.require_company(y)?;
    let xy = epsilon_baldone_ownership(g, x, eps)?.get(y);
    let yx = epsilon_baldone_ownership(g, y, eps)?.get(x);
    Ok(S::max_of(xy, yx))
}

/// Source index with the companies it holds strongly.
type Holdings = Vec<(usize, Vec<usize>)>;

/// For every entity with holdings, the companies it owns more than `eps` of
/// in the limit, itself excluded. Sources whose iteration does not converge
/// are returned separately.
fn strong_holdings<S: Share>(
    g: &OwnershipGraph<S>,
    eps: &S,
    params: IterationParams,
) -> Result<(Holdings, Vec<usize>)> {
    if *eps <= S::zero() {
        return Err(Error::InvalidParameter("epsilon must be > 0".into()));
    }
    let report = check_convergence(g, None)?;
    if let Some(cycle) = report.divergent_cycles.into_iter().next() {
        return Err(Error::DivergentCycle { cycle });
    }
    let sources: Vec<usize> = (0..g.len()).filter(|&v| g.out_degree(v) > 0).collect();
    let runs = integrated_ownership_many(g, &sources, params)?;
    let mut strong = Vec::with_capacity(sources.len());
    let mut skipped = Vec::new();
    for (&s, run) in sources.iter().zip(runs) {
        if !run.converged {
            skipped.push(s);
            continue;
        }
        let targets: Vec<usize> = run
            .values
            .into_iter()
            .filter(|(t, v)| *t != s && g.is_company(*t) && *v > *eps)
            .map(|(t, _)| t)
            .collect();
        if !targets.is_empty() {
            strong.push((s, targets));
        }
    }
    Ok((strong, skipped))
}

/// Every unordered pair of close companies, each as `(smaller id, larger id)`.
pub fn vicinity_pairs<S: Share>(g: &OwnershipGraph<S>, eps: &S) -> Result<BTreeSet<(String, String)>> {
    let (strong, _) = strong_holdings(g, eps, IterationParams::default())?;
    let mut near: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); g.len()];
    for (s, targets) in &strong {
        for &t in targets {
            near[*s].insert(t);
            if g.is_company(*s) {
                near[t].insert(*s);
            }
        }
    }
    let mut pairs = BTreeSet::new();
    let mut add = |a: usize, b: usize| {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        pairs.insert((g.id(a).to_string(), g.id(b).to_string()));
    };
    for (z, close) in near.iter().enumerate() {
        let close: Vec<usize> = close.iter().copied().collect();
        for (i, &a) in close.iter().enumerate() {
            if g.is_company(z) {
                add(z, a);
            }
            for &b in &close[i + 1..] {
                add(a, b);
            }
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConglomeratePartition {
    pub epsilon: f64,
    /// Every company to its conglomerate id, the smallest member id.
    pub assignment: BTreeMap<String, String>,
    /// Conglomerates with at least two members, by id.
    pub conglomerates: Vec<ComponentIds>,
    /// Companies close to no other company.
    pub singletons: Vec<String>,
    /// Sources left out because their ownership iteration did not converge.
    pub nonconvergent_sources: Vec<String>,
}

#[derive(Serialize)]
struct PartitionJson<'a> {
    epsilon: f64,
    conglomerates: &'a [ComponentIds],
    singletons: &'a [String],
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    nonconvergent_sources: &'a [String],
}

impl Serialize for ConglomeratePartition {
    fn serialize<Ser: serde::Serializer>(&self, ser: Ser) -> Result<Ser::Ok, Ser::Error> {
        PartitionJson {
            epsilon: self.epsilon,
            conglomerates: &self.conglomerates,
            singletons: &self.singletons,
            nonconvergent_sources: &self.nonconvergent_sources,
        }
        .serialize(ser)
    }
}

impl ConglomeratePartition {
    pub fn conglomerate_of(&self, company: &str) -> Option<&str> {
        self.assignment.get(company).map(String::as_str)
    }

    pub fn members(&self, id: &str) -> Option<&[String]> {
        self.conglomerates
            .iter()
            .find(|c| c.id == id)
            .map(|c| c.members.as_slice())
    }

    /// `company_id,conglomerate_id` for every company.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(sink);
        wtr.write_record(["company_id", "conglomerate_id"])?;
        for (company, cong) in &self.assignment {
            wtr.write_record([company, cong])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn conglomerates<S: Share>(g: &OwnershipGraph<S>, eps: &S) -> Result<ConglomeratePartition> {
    conglomerates_with(g, eps, IterationParams::default())
}

pub fn conglomerates_with<S: Share>(g: &OwnershipGraph<S>, eps: &S, params: IterationParams) -> Result<ConglomeratePartition> {
    let (strong, skipped) = strong_holdings(g, eps, params)?;
    let mut dsu = DisjointSet::new(g.len());
    for (s, targets) in &strong {
        // a company is close to each target; any other holder makes its targets close to one another
        let hub = if g.is_company(*s) { *s } else { targets[0] };
        for &t in targets {
            dsu.union(hub, t);
        }
    }
    let labels = dsu.labels();
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in g.companies() {
        classes.entry(labels[v]).or_default().push(v);
    }
    let mut assignment = BTreeMap::new();
    let mut conglomerates = Vec::new();
    let mut singletons = Vec::new();
    for members in classes.into_values() {
        // members ascend by index, which is id order
        let id = g.id(members[0]).to_string();
        for &m in &members {
            assignment.insert(g.id(m).to_string(), id.clone());
        }
        if members.len() == 1 {
            singletons.push(id);
        } else {
            conglomerates.push(ComponentIds {
                id,
                members: members.iter().map(|&m| g.id(m).to_string()).collect(),
            });
        }
    }
    conglomerates.sort_by(|a, b| a.id.cmp(&b.id));
    singletons.sort();
    Ok(ConglomeratePartition {
        epsilon: eps.to_f64_lossy(),
        assignment,
        conglomerates,
        singletons,
        nonconvergent_sources: skipped.into_iter().map(|s| g.id(s).to_string()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConglomerateIndicators {
    pub conglomerate_count: usize,
    pub avg_companies_per_cong: f64,
    pub avg_activities_per_cong: f64,
    pub max_cong_size: usize,
    pub max_activities_per_cong: usize,
    pub avg_regions_per_cong: f64,
}

/// Summary over conglomerates with at least two members. Activities and
/// regions count distinct non-empty values among members.
pub fn conglomerate_indicators<S: Share>(p: &ConglomeratePartition, g: &OwnershipGraph<S>) -> Result<ConglomerateIndicators> {
    let count = p.conglomerates.len();
    let (mut companies, mut activities, mut regions) = (0usize, 0usize, 0usize);
    let (mut max_size, mut max_activities) = (0usize, 0usize);
    for c in &p.conglomerates {
        let mut codes = BTreeSet::new();
        let mut places = BTreeSet::new();
        for m in &c.members {
            let e = g.entity(g.require(m)?);
            codes.extend(e.activity_code.as_deref());
            places.extend(e.region.as_deref());
        }
        companies += c.members.len();
        activities += codes.len();
        regions += places.len();
        max_size = max_size.max(c.members.len());
        max_activities = max_activities.max(codes.len());
    }
    let avg = |total: usize| if count == 0 { 0.0 } else { total as f64 / count as f64 };
    Ok(ConglomerateIndicators {
        conglomerate_count: count,
        avg_companies_per_cong: avg(companies),
        avg_activities_per_cong: avg(activities),
        max_cong_size: max_size,
        max_activities_per_cong: max_activities,
        avg_regions_per_cong: avg(regions),
    })
}
