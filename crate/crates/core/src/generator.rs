//! Synthetic scale-free ownership graphs.
//!
//! Companies arrive one at a time and pick owners among existing nodes with
//! probability proportional to `out_degree + a`, which yields a power-law
//! out-degree tail with exponent `2 + a / m`. Persons enter as fresh owners.
//! Every company's holders share a total strictly below 1, so every cycle has
//! product below 1 and all ownership iterations converge.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeRecord, Entity, GraphRecords, OwnershipGraph};
use crate::ownership::check_convergence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareDistribution {
    /// Independent uniform weights scaled to the company's budget.
    #[default]
    Uniform,
    /// Symmetric Dirichlet(1/2) weights: a few dominant holders per company.
    DirichletPerCompany,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub node_count: usize,
    pub person_fraction: f64,
    /// Target exponent of the out-degree power law; must exceed 2.
    pub attachment_exponent: f64,
    pub share_distribution: ShareDistribution,
    pub seed: u64,
    pub region_count: usize,
    pub activity_codes: Vec<String>,
    /// Mean number of holders per company.
    pub mean_owners: f64,
    /// Extra edges closing ownership cycles, as a fraction of companies.
    pub cycle_fraction: f64,
    pub self_loop_fraction: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            node_count: 1000,
            person_fraction: 0.5,
            attachment_exponent: 2.5,
            share_distribution: ShareDistribution::Uniform,
            seed: 0,
            region_count: 20,
            activity_codes: ["01.11", "10.11", "25.11", "35.11", "41.20", "47.11", "62.01", "64.19", "70.10", "86.10"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            mean_owners: 2.0,
            cycle_fraction: 0.01,
            self_loop_fraction: 0.001,
        }
    }
}

impl GeneratorConfig {
    fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InfeasibleConfig(msg.to_string()));
        if self.node_count == 0 {
            return bad("node_count must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.person_fraction) {
            return bad("person_fraction must be in [0,1]");
        }
        if self.node_count > 1 && self.person_count() >= self.node_count {
            return bad("persons own companies, so at least one company is required");
        }
        if !(self.attachment_exponent > 2.0) {
            return bad("attachment_exponent must be > 2");
        }
        if !(self.mean_owners >= 1.0) {
            return bad("mean_owners must be >= 1");
        }
        if !(0.0..=0.3).contains(&self.cycle_fraction) || !(0.0..=1.0).contains(&self.self_loop_fraction) {
            return bad("cycle_fraction must be in [0,0.3] and self_loop_fraction in [0,1]");
        }
        Ok(())
    }

    fn person_count(&self) -> usize {
        (self.person_fraction * self.node_count as f64).round() as usize
    }
}

struct Builder {
    rng: ChaCha8Rng,
    /// Whether node `i` is a company; ids follow creation order per kind.
    company: Vec<bool>,
    /// Holders of each node.
    owners: Vec<Vec<u32>>,
    /// One entry per out-edge, for degree-proportional picks.
    urn: Vec<u32>,
    companies: Vec<u32>,
}

impl Builder {
    fn add(&mut self, company: bool) -> u32 {
        let id = self.company.len() as u32;
        self.company.push(company);
        self.owners.push(Vec::new());
        if company {
            self.companies.push(id);
        }
        id
    }

    fn link(&mut self, owner: u32, owned: u32) {
        self.owners[owned as usize].push(owner);
        self.urn.push(owner);
    }

    fn preferential(&mut self, offset: f64) -> u32 {
        let n = self.company.len();
        let uniform_weight = offset * n as f64;
        let total = uniform_weight + self.urn.len() as f64;
        if self.urn.is_empty() || self.rng.random::<f64>() * total < uniform_weight {
            self.rng.random_range(0..n) as u32
        } else {
            self.urn[self.rng.random_range(0..self.urn.len())]
        }
    }
}

fn draw_weights(rng: &mut ChaCha8Rng, k: usize, dist: ShareDistribution) -> Vec<f64> {
    let raw: Vec<f64> = match dist {
        ShareDistribution::Uniform => (0..k).map(|_| rng.random::<f64>() + 1e-9).collect(),
        ShareDistribution::DirichletPerCompany => {
            let gamma = Gamma::new(0.5, 1.0).expect("valid gamma");
            (0..k).map(|_| gamma.sample(rng) + 1e-12).collect()
        }
    };
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

pub fn generate(cfg: &GeneratorConfig) -> Result<OwnershipGraph> {
    cfg.check()?;
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        company: Vec::with_capacity(cfg.node_count),
        owners: Vec::with_capacity(cfg.node_count),
        urn: Vec::new(),
        companies: Vec::new(),
    };
    let persons = cfg.person_count();
    if cfg.node_count == 1 {
        b.add(persons == 0);
    } else {
        let company_count = cfg.node_count - persons;
        let m = cfg.mean_owners;
        let offset = (cfg.attachment_exponent - 2.0) * m;
        let fresh_person = (persons as f64 / (company_count as f64 * m)).min(1.0);
        let extra_owners = (m > 1.0).then(|| Poisson::new(m - 1.0).expect("positive mean"));
        let mut persons_left = persons;
        let mut picked: HashSet<u32> = HashSet::new();
        b.add(true);
        for _ in 1..company_count {
            let c = b.add(true);
            let slots = 1 + extra_owners.as_ref().map_or(0, |p| p.sample(&mut b.rng) as usize);
            picked.clear();
            for _ in 0..slots {
                if persons_left > 0 && b.rng.random::<f64>() < fresh_person {
                    persons_left -= 1;
                    let p = b.add(false);
                    picked.insert(p);
                    b.link(p, c);
                    continue;
                }
                for _ in 0..8 {
                    let o = b.preferential(offset);
                    if o != c && picked.insert(o) {
                        b.link(o, c);
                        break;
                    }
                }
            }
            if b.rng.random::<f64>() < cfg.self_loop_fraction {
                b.link(c, c);
            }
        }
        // persons not drawn as fresh owners still hold one company each
        for _ in 0..persons_left {
            let p = b.add(false);
            let c = b.companies[b.rng.random_range(0..b.companies.len())];
            b.link(p, c);
        }
        // each back edge runs from a company to one of its company ancestors, closing a cycle
        let back_edges = (cfg.cycle_fraction * company_count as f64).round() as usize;
        for _ in 0..back_edges {
            let y = b.companies[b.rng.random_range(0..b.companies.len())];
            let mut ancestor = y;
            for _ in 0..b.rng.random_range(1..=3) {
                let holders: Vec<u32> = b.owners[ancestor as usize]
                    .iter()
                    .copied()
                    .filter(|&o| b.company[o as usize] && o != ancestor)
                    .collect();
                if holders.is_empty() {
                    break;
                }
                ancestor = holders[b.rng.random_range(0..holders.len())];
            }
            if ancestor != y && !b.owners[ancestor as usize].contains(&y) {
                b.link(y, ancestor);
            }
        }
    }

    let ids = {
        let (mut nc, mut np) = (0usize, 0usize);
        b.company
            .iter()
            .map(|&c| {
                if c {
                    nc += 1;
                    format!("C{:07}", nc - 1)
                } else {
                    np += 1;
                    format!("P{:07}", np - 1)
                }
            })
            .collect::<Vec<String>>()
    };
    let mut entities = Vec::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        let region = format!("R{:02}", b.rng.random_range(0..cfg.region_count.max(1)));
        let entity = if b.company[i] {
            let mut e = Entity::company(id.clone()).with_region(region);
            if !cfg.activity_codes.is_empty() {
                let code = &cfg.activity_codes[b.rng.random_range(0..cfg.activity_codes.len())];
                e = e.with_activity(code.clone());
            }
            e
        } else {
            Entity::person(id.clone()).with_region(region)
        };
        entities.push(entity);
    }
    let mut edges = Vec::with_capacity(b.urn.len());
    for owned in 0..b.owners.len() {
        let holders = std::mem::take(&mut b.owners[owned]);
        if holders.is_empty() {
            continue;
        }
        // budget in [0.5, 1): unit shares, hence unit cycles, never occur
        let budget = 0.5 + 0.5 * b.rng.random::<f64>() * (1.0 - 1e-6);
        let weights = draw_weights(&mut b.rng, holders.len(), cfg.share_distribution);
        for (owner, w) in holders.into_iter().zip(weights) {
            let share = ((w * budget * 1e6).floor() / 1e6).max(1e-6);
            edges.push(EdgeRecord::new(ids[owner as usize].clone(), ids[owned].clone(), share));
        }
    }
    let g = OwnershipGraph::from_records(GraphRecords { entities, edges })?;
    if let Some(cycle) = check_convergence(&g, None)?.divergent_cycles.into_iter().next() {
        return Err(Error::DivergentCycle { cycle });
    }
    Ok(g)
}
