//! Strongly and weakly connected components.

use serde::Serialize;

use crate::graph::OwnershipGraph;
use crate::scalar::Share;

/// A partition of entity indices.
///
/// Components are ordered by their smallest member, and members are sorted,
/// so the first member doubles as the component id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub membership: Vec<usize>,
    pub components: Vec<Vec<usize>>,
}

impl Components {
    fn from_labels(labels: &[usize]) -> Self {
        let n = labels.len();
        // relabel by first occurrence, which is the smallest member
        let mut remap = vec![usize::MAX; n];
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut membership = vec![0; n];
        for (v, &label) in labels.iter().enumerate() {
            if remap[label] == usize::MAX {
                remap[label] = components.len();
                components.push(Vec::new());
            }
            membership[v] = remap[label];
            components[remap[label]].push(v);
        }
        Components {
            membership,
            components,
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.components.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Components as id lists.
    pub fn to_ids<S: Share>(&self, g: &OwnershipGraph<S>) -> Vec<Vec<String>> {
        self.components
            .iter()
            .map(|c| c.iter().map(|&v| g.id(v).to_string()).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentIds {
    pub id: String,
    pub members: Vec<String>,
}

/// Tarjan's algorithm with an explicit stack.
pub fn strongly_connected_components<S: Share>(g: &OwnershipGraph<S>) -> Components {
    let n = g.len();
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut labels = vec![0usize; n];
    let mut next_index = 0;
    // (node, position in its out-edge list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let out = g.out_edges(v);
            if *pos < out.len() {
                let w = out[*pos].owned;
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                lowlink[parent] = lowlink[parent].min(lowlink[v]);
            }
            if lowlink[v] == index[v] {
                let mut members = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    members.push(w);
                    if w == v {
                        break;
                    }
                }
                let label = *members.iter().min().expect("non-empty component");
                for w in members {
                    labels[w] = label;
                }
            }
        }
    }
    Components::from_labels(&labels)
}

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }

    /// Root label per element.
    pub fn labels(&mut self) -> Vec<usize> {
        (0..self.parent.len()).map(|x| self.find(x)).collect()
    }
}

pub fn weakly_connected_components<S: Share>(g: &OwnershipGraph<S>) -> Components {
    let mut dsu = DisjointSet::new(g.len());
    for e in g.edges() {
        dsu.union(e.owner, e.owned);
    }
    Components::from_labels(&dsu.labels())
}
