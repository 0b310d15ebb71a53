#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use ownet_core::golden_power::Scenario;
use ownet_core::graph::io::load_graph_files;
use ownet_core::{Entity, OwnershipGraph, Share};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture<S: Share>(name: &str) -> OwnershipGraph<S> {
    let dir = fixture_dir(name);
    load_graph_files(dir.join("nodes.csv"), dir.join("edges.csv")).expect("fixture loads")
}

pub fn scenario<S: Share>(name: &str, file: &str) -> Scenario<S> {
    let text = fs::read_to_string(fixture_dir(name).join(file)).expect("scenario file");
    Scenario::from_json(&text).expect("scenario parses")
}

/// Small random graph: `companies` companies and up to two persons, each
/// company's incoming shares summing to at most `max_in`.
pub fn random_graph(rng: &mut ChaCha8Rng, companies: usize, max_out: usize, max_in: f64) -> OwnershipGraph {
    let persons = rng.random_range(0..=2usize);
    let mut entities: Vec<Entity> = (0..companies).map(|i| Entity::company(format!("c{i}"))).collect();
    entities.extend((0..persons).map(|i| Entity::person(format!("p{i}"))));
    let n = companies + persons;
    let mut budget = vec![max_in; companies];
    let mut edges: Vec<(String, String, f64)> = Vec::new();
    let mut seen = BTreeSet::new();
    for owner in 0..n {
        let out = rng.random_range(0..=max_out);
        for _ in 0..out {
            let owned = rng.random_range(0..companies);
            if !seen.insert((owner, owned)) {
                continue;
            }
            // grid of hundredths keeps threshold cases reachable
            let cap = (budget[owned] * 100.0).floor() as i64;
            if cap < 1 {
                continue;
            }
            let share = rng.random_range(1..=cap) as f64 / 100.0;
            budget[owned] -= share;
            edges.push((entities[owner].id.clone(), entities[owned].id.clone(), share));
        }
    }
    OwnershipGraph::from_parts(entities, edges.iter().map(|(a, b, s)| (a.as_str(), b.as_str(), *s))).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integrated ownership of `source` by solving `x (I - W') = d` densely,
/// where `W'` is the share matrix with the source's row removed.
pub fn linear_solve_ownership(g: &OwnershipGraph, source: usize) -> Vec<f64> {
    let n = g.len();
    // rows of the transposed system A = (I - W')^T
    let mut a = vec![vec![0.0; n + 1]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for e in g.edges() {
        if e.owner != source {
            a[e.owned][e.owner] -= e.share;
        }
    }
    for e in g.out_edges(source) {
        a[e.owned][n] += e.share;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-12, "singular system");
        for k in col..=n {
            a[col][k] /= p;
        }
        for r in 0..n {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col];
                for k in col..=n {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
    }
    a.iter().map(|row| row[n]).collect()
}

/// Least fixed point of control as the intersection of every closed set
/// containing the seeds (companies only; seeds may be persons).
pub fn brute_force_control(g: &OwnershipGraph, seeds: &[usize]) -> BTreeSet<usize> {
    let companies: Vec<usize> = g.companies().filter(|c| !seeds.contains(c)).collect();
    assert!(companies.len() <= 12, "oracle is exponential");
    let mut least: Option<BTreeSet<usize>> = None;
    for mask in 0u32..(1 << companies.len()) {
        let set: BTreeSet<usize> = companies
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &c)| c)
            .collect();
        let members: BTreeSet<usize> = set.iter().chain(seeds).copied().collect();
        let closed = companies.iter().all(|&z| {
            let sum: f64 = g.in_edges(z).filter(|e| members.contains(&e.owner)).map(|e| e.share).sum();
            sum <= 0.5 || set.contains(&z)
        });
        if closed {
            least = Some(match least {
                None => set,
                Some(prev) => prev.intersection(&set).copied().collect(),
            });
        }
    }
    least.unwrap_or_default()
}

/// Vicinity pairs straight from the definition, given a directed
/// ownership matrix `o[x][y]`.
pub fn vicinity_from_matrix(g: &OwnershipGraph, o: &[Vec<f64>], eps: f64) -> BTreeSet<(usize, usize)> {
    let n = g.len();
    let u = |a: usize, b: usize| o[a][b].max(o[b][a]);
    let companies: Vec<usize> = g.companies().collect();
    let mut pairs = BTreeSet::new();
    for (i, &x) in companies.iter().enumerate() {
        for &y in &companies[i + 1..] {
            let direct = u(x, y) > eps;
            let third = (0..n).any(|z| z != x && z != y && u(z, x) > eps && u(z, y) > eps);
            if direct || third {
                pairs.insert((x, y));
            }
        }
    }
    pairs
}

/// Classes of the transitive closure of `pairs` over all companies, as
/// sorted id lists.
pub fn closure_classes(g: &OwnershipGraph, pairs: &BTreeSet<(usize, usize)>) -> BTreeSet<Vec<String>> {
    let n = g.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
    }
    for &(a, b) in pairs {
        reach[a][b] = true;
        reach[b][a] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    g.companies()
        .map(|x| {
            g.companies()
                .filter(|&y| reach[x][y])
                .map(|y| g.id(y).to_string())
                .collect()
        })
        .collect()
}

pub fn ownership_matrix(g: &OwnershipGraph) -> Vec<Vec<f64>> {
    (0..g.len()).map(|s| linear_solve_ownership(g, s)).collect()
}
