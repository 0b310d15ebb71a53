//! Descriptive network analytics.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::components::{strongly_connected_components, weakly_connected_components};
use crate::error::{Error, Result};
use crate::graph::{EntityKind, OwnershipGraph};
use crate::scalar::Share;

fn histogram_pairs<Ser: Serializer>(hist: &BTreeMap<usize, usize>, ser: Ser) -> Result<Ser::Ok, Ser::Error> {
    ser.collect_seq(hist.iter().map(|(d, c)| [*d, *c]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticsReport {
    pub node_count: usize,
    pub person_count: usize,
    pub company_count: usize,
    pub edge_count: usize,
    pub scc_count: usize,
    pub wcc_count: usize,
    pub max_scc_size: usize,
    pub max_wcc_size: usize,
    pub avg_wcc_size: f64,
    pub avg_in_degree: f64,
    pub avg_out_degree: f64,
    pub max_in_degree: usize,
    pub max_out_degree: usize,
    pub avg_clustering_coefficient: f64,
    pub self_loop_count: usize,
    /// Total (in + out) degree to node count.
    #[serde(serialize_with = "histogram_pairs")]
    pub degree_histogram: BTreeMap<usize, usize>,
}

/// Sorted, deduplicated undirected neighbour lists without self-loops.
fn undirected_adjacency<S: Share>(g: &OwnershipGraph<S>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); g.len()];
    for e in g.edges() {
        if e.owner != e.owned {
            adj[e.owner].push(e.owned);
            adj[e.owned].push(e.owner);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Local clustering coefficient of every node on the undirected simple
/// projection. Triangles are counted once each by orienting edges from lower
/// to higher (degree, index) rank.
pub fn clustering_coefficients<S: Share>(g: &OwnershipGraph<S>) -> Vec<f64> {
    let adj = undirected_adjacency(g);
    let n = adj.len();
    let rank = |v: usize| (adj[v].len(), v);
    let forward: Vec<Vec<usize>> = (0..n)
        .map(|v| adj[v].iter().copied().filter(|&u| rank(u) > rank(v)).collect())
        .collect();
    let mut triangles = vec![0u64; n];
    let mut mark = vec![false; n];
    for v in 0..n {
        for &u in &forward[v] {
            mark[u] = true;
        }
        for &u in &forward[v] {
            for &w in &forward[u] {
                if mark[w] {
                    triangles[v] += 1;
                    triangles[u] += 1;
                    triangles[w] += 1;
                }
            }
        }
        for &u in &forward[v] {
            mark[u] = false;
        }
    }
    (0..n)
        .map(|v| {
            let k = adj[v].len() as f64;
            if k < 2.0 {
                0.0
            } else {
                2.0 * triangles[v] as f64 / (k * (k - 1.0))
            }
        })
        .collect()
}

pub fn analytics_report<S: Share>(g: &OwnershipGraph<S>) -> AnalyticsReport {
    let n = g.len();
    let scc = strongly_connected_components(g);
    let wcc = weakly_connected_components(g);
    let person_count = g
        .entities()
        .iter()
        .filter(|e| e.kind == EntityKind::Person)
        .count();
    let mut degree_histogram = BTreeMap::new();
    let (mut max_in, mut max_out) = (0, 0);
    for v in 0..n {
        let (din, dout) = (g.in_degree(v), g.out_degree(v));
        max_in = max_in.max(din);
        max_out = max_out.max(dout);
        *degree_histogram.entry(din + dout).or_insert(0) += 1;
    }
    let per_node = |total: f64| if n == 0 { 0.0 } else { total / n as f64 };
    let clustering: f64 = clustering_coefficients(g).iter().sum();
    AnalyticsReport {
        node_count: n,
        person_count,
        company_count: n - person_count,
        edge_count: g.edge_count(),
        scc_count: scc.len(),
        wcc_count: wcc.len(),
        max_scc_size: scc.max_size(),
        max_wcc_size: wcc.max_size(),
        avg_wcc_size: if wcc.is_empty() {
            0.0
        } else {
            n as f64 / wcc.len() as f64
        },
        avg_in_degree: per_node(g.edge_count() as f64),
        avg_out_degree: per_node(g.edge_count() as f64),
        max_in_degree: max_in,
        max_out_degree: max_out,
        avg_clustering_coefficient: per_node(clustering),
        self_loop_count: g.edges().iter().filter(|e| e.owner == e.owned).count(),
        degree_histogram,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionImpact {
    pub total: usize,
    pub closed: usize,
    pub closed_fraction: f64,
}

pub const UNKNOWN_REGION: &str = "unknown";

/// Per-region count of companies in `base` and of those missing from `filtered`.
pub fn impact_by_region<S: Share>(
    base: &OwnershipGraph<S>,
    filtered: &OwnershipGraph<S>,
) -> Result<BTreeMap<String, RegionImpact>> {
    for e in filtered.entities() {
        if !base.contains(&e.id) {
            return Err(Error::NotSubgraph { id: e.id.clone() });
        }
    }
    for e in filtered.edges() {
        let (owner, owned) = (filtered.id(e.owner), filtered.id(e.owned));
        if base.share_by_id(owner, owned).is_none() {
            return Err(Error::NotSubgraph {
                id: format!("({owner},{owned})"),
            });
        }
    }
    let mut out: BTreeMap<String, RegionImpact> = BTreeMap::new();
    for e in base.entities().iter().filter(|e| e.is_company()) {
        let region = e.region.clone().unwrap_or_else(|| UNKNOWN_REGION.to_string());
        let entry = out.entry(region).or_insert(RegionImpact {
            total: 0,
            closed: 0,
            closed_fraction: 0.0,
        });
        entry.total += 1;
        if !filtered.contains(&e.id) {
            entry.closed += 1;
        }
    }
    for impact in out.values_mut() {
        impact.closed_fraction = impact.closed as f64 / impact.total as f64;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Entity;

    #[test]
    fn triangle_has_unit_clustering() {
        let g = OwnershipGraph::from_parts(
            vec![Entity::company("1"), Entity::company("2"), Entity::company("3")],
            [("1", "2", 0.3), ("2", "3", 0.3), ("1", "3", 0.3)],
        )
        .unwrap();
        let r = analytics_report(&g);
        assert_eq!(r.avg_clustering_coefficient, 1.0);
        assert_eq!(r.scc_count, 3);
        assert_eq!(r.wcc_count, 1);
    }

    #[test]
    fn star_report() {
        let g = OwnershipGraph::from_parts(
            vec![
                Entity::person("A"),
                Entity::company("1"),
                Entity::company("2"),
                Entity::company("3"),
            ],
            [("A", "1", 0.6), ("A", "2", 0.6), ("A", "3", 0.6)],
        )
        .unwrap();
        let r = analytics_report(&g);
        assert_eq!(r.avg_clustering_coefficient, 0.0);
        assert_eq!(r.max_out_degree, 3);
        assert_eq!(r.avg_out_degree, 0.75);
        assert_eq!(r.max_in_degree, 1);
        assert_eq!(r.degree_histogram, BTreeMap::from([(1, 3), (3, 1)]));
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["degree_histogram"], serde_json::json!([[1, 3], [3, 1]]));
    }

    #[test]
    fn self_loops_counted() {
        let g = OwnershipGraph::from_parts(vec![Entity::company("1")], [("1", "1", 0.2)]).unwrap();
        let r = analytics_report(&g);
        assert_eq!(r.self_loop_count, 1);
        assert_eq!(r.avg_clustering_coefficient, 0.0);
    }

    #[test]
    fn empty_graph_is_all_zero() {
        let r = analytics_report(&OwnershipGraph::<f64>::default());
        assert_eq!(r.node_count, 0);
        assert_eq!(r.avg_wcc_size, 0.0);
        assert_eq!(r.avg_in_degree, 0.0);
        assert!(r.degree_histogram.is_empty());
    }

    fn regions() -> OwnershipGraph {
        OwnershipGraph::from_parts(
            vec![
                Entity::company("1").with_region("Lazio"),
                Entity::company("2").with_region("Lazio"),
                Entity::company("3").with_region("Veneto"),
                Entity::company("4"),
            ],
            [],
        )
        .unwrap()
    }

    #[test]
    fn regional_impact() {
        let base = regions();
        let keep = [true, false, false, true];
        let filtered = base.induced(&keep);
        let impact = impact_by_region(&base, &filtered).unwrap();
        assert_eq!(impact["Lazio"], RegionImpact { total: 2, closed: 1, closed_fraction: 0.5 });
        assert_eq!(impact["Veneto"], RegionImpact { total: 1, closed: 1, closed_fraction: 1.0 });
        assert_eq!(impact[UNKNOWN_REGION].closed, 0);

        let same = impact_by_region(&base, &base).unwrap();
        assert!(same.values().all(|r| r.closed_fraction == 0.0));

        let alien = OwnershipGraph::<f64>::from_parts(vec![Entity::company("9")], []).unwrap();
        assert!(matches!(impact_by_region(&base, &alien), Err(Error::NotSubgraph { .. })));
    }
}
