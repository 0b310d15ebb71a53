//! Integrated ownership.
//!
//! Two routes compute the same quantity. [`enumerate_baldone_paths`] and
//! [`epsilon_baldone_ownership`] walk every path from the source whose weight
//! (product of shares) stays above `eps`, never passing through the source
//! again. [`integrated_ownership`] takes the `eps -> 0` limit as the fixed
//! point of `v = d + v W'`, where `d` is the source's direct holdings and `W'`
//! is the share matrix with the source's own row removed.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::components::strongly_connected_components;
use crate::error::{Error, Result};
use crate::graph::OwnershipGraph;
use crate::scalar::{serde_share, Share};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_ORACLE_EPSILON: f64 = 1e-6;
/// Upper bound on reported structural divergence witnesses.
pub const MAX_CYCLE_WITNESSES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterationParams {
    fn default() -> Self {
        IterationParams {
            tol: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct BaldonePath<S: Share = f64> {
    pub nodes: Vec<String>,
    #[serde(with = "serde_share")]
    pub weight: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct OwnershipVector<S: Share = f64> {
    pub source: String,
    /// 0 for the limit computation.
    pub epsilon: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(serialize_with = "serde_share::serialize_map_12")]
    pub values: BTreeMap<String, S>,
}

impl<S: Share> OwnershipVector<S> {
    pub fn get(&self, target: &str) -> S {
        self.values.get(target).cloned().unwrap_or_else(S::zero)
    }
}

/// Depth-first walk over every eps-path from `source`, calling `visit` with
/// each path (as indices) and its weight. Paths end at the source but never
/// pass through it.
fn walk_paths<S: Share>(
    g: &OwnershipGraph<S>,
    source: usize,
    eps: &S,
    mut visit: impl FnMut(&[usize], &S),
) -> Result<()> {
    let mut path = vec![source];
    let mut weights = vec![S::one()];
    // edges along the path with share < 1, as a prefix count
    let mut lossy = vec![0usize];
    let mut cursor = vec![0usize];
    let mut occurrences: Vec<Vec<usize>> = vec![Vec::new(); g.len()];

    while let Some(pos) = cursor.last_mut() {
        let u = *path.last().expect("path tracks cursor");
        let out = g.out_edges(u);
        if *pos >= out.len() {
            cursor.pop();
            let done = path.pop().expect("non-empty path");
            weights.pop();
            lossy.pop();
            if !path.is_empty() {
                occurrences[done].pop();
            }
            continue;
        }
        let edge = &out[*pos];
        *pos += 1;
        let weight = weights.last().expect("weights track path").clone() * edge.share.clone();
        if weight <= *eps {
            continue;
        }
        let v = edge.owned;
        let unit = edge.share >= S::one();
        if v != source {
            if let Some(&at) = occurrences[v].last() {
                let lossy_now = *lossy.last().expect("lossy tracks path");
                if unit && lossy_now == lossy[at] {
                    let cycle = path[at..].iter().map(|&i| g.id(i).to_string()).collect();
                    return Err(Error::DivergentCycle { cycle });
                }
            }
        }
        path.push(v);
        visit(&path, &weight);
        if v == source {
            path.pop();
            continue;
        }
        occurrences[v].push(path.len() - 1);
        let next_lossy = lossy.last().expect("lossy tracks path") + usize::from(!unit);
        weights.push(weight);
        lossy.push(next_lossy);
        cursor.push(0);
    }
    Ok(())
}

fn check_eps<S: Share>(eps: &S) -> Result<()> {
    if *eps <= S::zero() {
        return Err(Error::InvalidParameter("epsilon must be > 0".into()));
    }
    Ok(())
}

/// All eps-paths from `source` to `target`, by descending weight, ties by
/// node sequence.
pub fn enumerate_baldone_paths<S: Share>(
    g: &OwnershipGraph<S>,
    source: &str,
    target: &str,
    eps: &S,
) -> Result<Vec<BaldonePath<S>>> {
    check_eps(eps)?;
    let s = g.require(source)?;
    let t = g.require(target)?;
    let mut found: Vec<(Vec<usize>, S)> = Vec::new();
    walk_paths(g, s, eps, |path, w| {
        if *path.last().expect("non-empty") == t {
            found.push((path.to_vec(), w.clone()));
        }
    })?;
    found.sort_by(|(pa, wa), (pb, wb)| {
        wb.partial_cmp(wa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                let ia = pa.iter().map(|&i| g.id(i));
                let ib = pb.iter().map(|&i| g.id(i));
                ia.cmp(ib)
            })
    });
    Ok(found
        .into_iter()
        .map(|(p, weight)| BaldonePath {
            nodes: p.iter().map(|&i| g.id(i).to_string()).collect(),
            weight,
        })
        .collect())
}

/// Sum of eps-path weights from `source` to every reachable entity.
pub fn epsilon_baldone_ownership<S: Share>(
    g: &OwnershipGraph<S>,
    source: &str,
    eps: &S,
) -> Result<OwnershipVector<S>> {
    check_eps(eps)?;
    let s = g.require(source)?;
    let mut totals: Vec<Option<S>> = vec![None; g.len()];
    walk_paths(g, s, eps, |path, w| {
        let t = *path.last().expect("non-empty");
        totals[t] = Some(match totals[t].take() {
            Some(acc) => acc + w.clone(),
            None => w.clone(),
        });
    })?;
    let values = totals
        .into_iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (g.id(i).to_string(), v)))
        .collect();
    Ok(OwnershipVector {
        source: source.to_string(),
        epsilon: eps.to_f64_lossy(),
        converged: true,
        iterations: 0,
        values,
    })
}

/// Reusable sparse buffers for [`integrated_ownership`].
#[derive(Debug)]
pub struct Propagator<S> {
    value: Vec<S>,
    delta: Vec<S>,
    next: Vec<S>,
    touched: Vec<usize>,
    seen: Vec<bool>,
    frontier: Vec<usize>,
    next_frontier: Vec<usize>,
    queued: Vec<bool>,
}

/// Result of one limit computation, by entity index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOwnership<S> {
    /// Sorted by index, zeros omitted.
    pub values: Vec<(usize, S)>,
    pub converged: bool,
    pub iterations: usize,
}

impl<S: Share> Propagator<S> {
    pub fn new(n: usize) -> Self {
        Propagator {
            value: vec![S::zero(); n],
            delta: vec![S::zero(); n],
            next: vec![S::zero(); n],
            touched: Vec::new(),
            seen: vec![false; n],
            frontier: Vec::new(),
            next_frontier: Vec::new(),
            queued: vec![false; n],
        }
    }

    fn touch(&mut self, v: usize) {
        if !self.seen[v] {
            self.seen[v] = true;
            self.touched.push(v);
        }
    }

    /// Iterates `v_{k+1} = d + v_k W'` until the largest change is below
    /// `tol` or `max_iter` rounds have run.
    pub fn run(&mut self, g: &OwnershipGraph<S>, source: usize, params: IterationParams) -> SparseOwnership<S> {
        assert_eq!(self.value.len(), g.len(), "propagator sized for another graph");
        let tol = S::from_f64_lossy(params.tol);
        for e in g.out_edges(source) {
            self.delta[e.owned] = e.share.clone();
            self.value[e.owned] = e.share.clone();
            self.frontier.push(e.owned);
            self.touch(e.owned);
        }
        let mut iterations = 0;
        let mut converged = false;
        while iterations < params.max_iter {
            for i in 0..self.frontier.len() {
                let y = self.frontier[i];
                if y == source {
                    continue;
                }
                let dy = std::mem::replace(&mut self.delta[y], S::zero());
                for e in g.out_edges(y) {
                    let z = e.owned;
                    self.next[z] = self.next[z].clone() + dy.clone() * e.share.clone();
                    if !self.queued[z] {
                        self.queued[z] = true;
                        self.next_frontier.push(z);
                    }
                }
            }
            for &y in &self.frontier {
                self.delta[y] = S::zero();
            }
            iterations += 1;
            let mut change = S::zero();
            self.frontier.clear();
            for i in 0..self.next_frontier.len() {
                let z = self.next_frontier[i];
                self.queued[z] = false;
                let dz = std::mem::replace(&mut self.next[z], S::zero());
                self.value[z] = self.value[z].clone() + dz.clone();
                let magnitude = dz.abs();
                // NaN never compares greater, so a blown-up iterate cannot look converged
                if !(magnitude <= change) {
                    change = magnitude;
                }
                self.delta[z] = dz;
                self.touch(z);
            }
            std::mem::swap(&mut self.frontier, &mut self.next_frontier);
            self.next_frontier.clear();
            if change < tol {
                converged = true;
                break;
            }
        }
        for &y in &self.frontier {
            self.delta[y] = S::zero();
        }
        self.frontier.clear();

        self.touched.sort_unstable();
        let mut values = Vec::with_capacity(self.touched.len());
        for &v in &self.touched {
            self.seen[v] = false;
            let val = std::mem::replace(&mut self.value[v], S::zero());
            if val != S::zero() {
                values.push((v, val));
            }
        }
        self.touched.clear();
        SparseOwnership {
            values,
            converged,
            iterations,
        }
    }
}

fn to_vector<S: Share>(g: &OwnershipGraph<S>, source: usize, sparse: SparseOwnership<S>) -> OwnershipVector<S> {
    OwnershipVector {
        source: g.id(source).to_string(),
        epsilon: 0.0,
        converged: sparse.converged,
        iterations: sparse.iterations,
        values: sparse
            .values
            .into_iter()
            .map(|(i, v)| (g.id(i).to_string(), v))
            .collect(),
    }
}

fn check_params(params: IterationParams) -> Result<()> {
    if !(params.tol > 0.0) || params.max_iter == 0 {
        return Err(Error::InvalidParameter("tol must be > 0 and max_iter >= 1".into()));
    }
    Ok(())
}

/// Integrated ownership of `source` in every entity it reaches. Non-convergence
/// is reported through `converged`, never as an error.
pub fn integrated_ownership<S: Share>(
    g: &OwnershipGraph<S>,
    source: &str,
    params: IterationParams,
) -> Result<OwnershipVector<S>> {
    check_params(params)?;
    let s = g.require(source)?;
    let sparse = Propagator::new(g.len()).run(g, s, params);
    Ok(to_vector(g, s, sparse))
}

/// Integrated ownership for many sources, in parallel. The output order
/// follows `sources` and does not depend on the thread count.
pub fn integrated_ownership_many<S: Share>(
    g: &OwnershipGraph<S>,
    sources: &[usize],
    params: IterationParams,
) -> Result<Vec<SparseOwnership<S>>> {
    check_params(params)?;
    Ok(sources
        .par_iter()
        .map_init(|| Propagator::new(g.len()), |prop, &s| prop.run(g, s, params))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// Simple cycles whose share product is at least 1.
    pub divergent_cycles: Vec<Vec<String>>,
    /// Sources whose fixed-point iteration did not settle.
    pub nonconvergent_sources: Vec<String>,
    pub convergent: bool,
}

/// Simple cycles made only of unit-share edges. With shares in (0, 1], these
/// are exactly the cycles with product >= 1.
fn unit_cycles<S: Share>(g: &OwnershipGraph<S>) -> Vec<Vec<usize>> {
    let unit: Vec<Vec<usize>> = (0..g.len())
        .map(|v| {
            g.out_edges(v)
                .iter()
                .filter(|e| e.share >= S::one())
                .map(|e| e.owned)
                .collect()
        })
        .collect();
    let unit_graph = g.with_edges(
        g.edges()
            .iter()
            .filter(|e| e.share >= S::one())
            .cloned()
            .collect(),
    );
    let scc = strongly_connected_components(&unit_graph);
    let mut cycles = Vec::new();
    for start in 0..g.len() {
        let comp = scc.membership[start];
        let cyclic = scc.components[comp].len() > 1 || unit[start].contains(&start);
        if !cyclic {
            continue;
        }
        // cycles whose smallest node is `start`
        let mut path = vec![start];
        let mut on_path = vec![false; g.len()];
        on_path[start] = true;
        let mut cursor = vec![0usize];
        while let Some(pos) = cursor.last_mut() {
            let u = *path.last().expect("path");
            if *pos >= unit[u].len() {
                cursor.pop();
                on_path[u] = false;
                path.pop();
                continue;
            }
            let w = unit[u][*pos];
            *pos += 1;
            if w == start {
                cycles.push(path.clone());
                if cycles.len() >= MAX_CYCLE_WITNESSES {
                    return cycles;
                }
            } else if w > start && !on_path[w] && scc.membership[w] == comp {
                on_path[w] = true;
                path.push(w);
                cursor.push(0);
            }
        }
    }
    cycles
}

/// Structural divergence witnesses, plus, when `dynamic` is set, every source
/// whose iteration fails to converge under `params`.
pub fn check_convergence<S: Share>(
    g: &OwnershipGraph<S>,
    dynamic: Option<IterationParams>,
) -> Result<ConvergenceReport> {
    let divergent_cycles: Vec<Vec<String>> = unit_cycles(g)
        .into_iter()
        .map(|c| c.into_iter().map(|v| g.id(v).to_string()).collect())
        .collect();
    let mut nonconvergent_sources = Vec::new();
    if let Some(params) = dynamic {
        let sources: Vec<usize> = (0..g.len()).filter(|&v| g.out_degree(v) > 0).collect();
        let results = integrated_ownership_many(g, &sources, params)?;
        for (s, r) in sources.iter().zip(results) {
            if !r.converged {
                nonconvergent_sources.push(g.id(*s).to_string());
            }
        }
    }
    let convergent = divergent_cycles.is_empty() && nonconvergent_sources.is_empty();
    Ok(ConvergenceReport {
        divergent_cycles,
        nonconvergent_sources,
        convergent,
    })
}
