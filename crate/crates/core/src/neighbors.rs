//! Neighbor buffers and the graph providers that decide which agents each
//! agent listens to during a round.
//!
//! The dynamic providers rank every other agent by distance. The priority
//! provider additionally demotes agents closer than `epsilon` (inside the
//! agent's priority zone) to the back of the buffer, in descending distance,
//! so that effort goes to agents that are not yet in agreement.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DistanceMatrix, COINCIDENT_TOLERANCE};

/// Which agents an agent may use in a round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GraphProvider {
    /// Priority-zone protocol: first `neighbors` entries of the priority buffer.
    DynamicPriority { epsilon: f64, neighbors: usize },
    /// Conventional protocol: the `neighbors` nearest agents.
    DynamicPlain { neighbors: usize },
    /// Static directed graph; an edge `(from, to)` means `from` listens to `to`.
    FixedDigraph { edges: Vec<(usize, usize)> },
}

impl GraphProvider {
    /// Directed ring `0 -> 1 -> ... -> n-1 -> 0`.
    pub fn ring(n: usize) -> Self {
        GraphProvider::FixedDigraph {
            edges: (0..n).map(|i| (i, (i + 1) % n)).collect(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            GraphProvider::DynamicPriority { epsilon, neighbors } => {
                if !(epsilon.is_finite() && *epsilon >= 0.0) {
                    return Err(Error::config(
                        "[guidance].epsilon",
                        format!("must be finite and >= 0, got {epsilon}"),
                    ));
                }
                if *neighbors == 0 {
                    return Err(Error::config("[graph].neighbors", "must be >= 1"));
                }
                if n < 2 {
                    return Err(Error::config(
                        "[scenario].agents",
                        "the priority provider needs at least 2 agents",
                    ));
                }
            }
            GraphProvider::DynamicPlain { neighbors } => {
                if *neighbors == 0 {
                    return Err(Error::config("[graph].neighbors", "must be >= 1"));
                }
            }
            GraphProvider::FixedDigraph { edges } => {
                for &(from, to) in edges {
                    if from >= n || to >= n {
                        return Err(Error::config(
                            "[graph].edges",
                            format!("edge ({from}, {to}) out of range for {n} agents"),
                        ));
                    }
                    if from == to {
                        return Err(Error::config(
                            "[graph].edges",
                            format!("self loop on agent {from}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Neighbor budget of the dynamic providers.
    pub fn neighbor_limit(&self) -> Option<usize> {
        match self {
            GraphProvider::DynamicPriority { neighbors, .. }
            | GraphProvider::DynamicPlain { neighbors } => Some(*neighbors),
            GraphProvider::FixedDigraph { .. } => None,
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            GraphProvider::DynamicPriority { epsilon, .. } => Some(*epsilon),
            _ => None,
        }
    }
}

/// Per-agent ordered neighbor lists, highest priority first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NeighborView {
    pub lists: Vec<Vec<usize>>,
}

impl NeighborView {
    pub fn of(&self, i: usize) -> &[usize] {
        &self.lists[i]
    }

    /// Agents that received no neighbors this round.
    pub fn empty_agents(&self) -> impl Iterator<Item = usize> + '_ {
        self.lists
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_empty())
            .map(|(i, _)| i)
    }
}

fn by_distance(row: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b))
}

/// Sort key of the priority buffer: outside-zone agents first by ascending
/// distance, then inside-zone agents by descending distance; ids break ties.
fn by_priority(row: &[f64], epsilon: f64) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| {
        let (da, db) = (row[a], row[b]);
        let (ia, ib) = (da < epsilon, db < epsilon);
        ia.cmp(&ib)
            .then_with(|| if ia { db.total_cmp(&da) } else { da.total_cmp(&db) })
            .then(a.cmp(&b))
    }
}

fn others(n: usize, i: usize) -> Vec<usize> {
    (0..n).filter(|&j| j != i).collect()
}

/// All other agents sorted by ascending distance from `i` (row form).
pub fn ascending_order_row(row: &[f64], i: usize) -> Vec<usize> {
    let mut ids = others(row.len(), i);
    ids.sort_by(by_distance(row));
    ids
}

/// All other agents in priority-buffer order (row form).
pub fn priority_order_row(row: &[f64], i: usize, epsilon: f64) -> Vec<usize> {
    let mut ids = others(row.len(), i);
    ids.sort_by(by_priority(row, epsilon));
    ids
}

pub fn ascending_order(d: &DistanceMatrix, i: usize) -> Vec<usize> {
    ascending_order_row(d.row(i), i)
}

pub fn priority_order(d: &DistanceMatrix, i: usize, epsilon: f64) -> Vec<usize> {
    priority_order_row(d.row(i), i, epsilon)
}

/// First `k` of `ids` under `cmp`, in order. Equivalent to sorting and
/// truncating, without sorting the tail.
fn head_by(mut ids: Vec<usize>, k: usize, cmp: impl Fn(&usize, &usize) -> Ordering) -> Vec<usize> {
    if k < ids.len() {
        if k == 1 {
            let best = ids.iter().copied().min_by(|a, b| cmp(a, b)).unwrap();
            return vec![best];
        }
        ids.select_nth_unstable_by(k, &cmp);
        ids.truncate(k);
    }
    ids.sort_by(cmp);
    ids
}

/// Neighbors of agent `i` given its distances `row` to every agent.
///
/// `row` may hold distances to delayed copies of the others; entry `i` is
/// ignored.
pub fn select_neighbors_row(provider: &GraphProvider, row: &[f64], i: usize) -> Vec<usize> {
    match provider {
        GraphProvider::DynamicPlain { neighbors } => {
            head_by(others(row.len(), i), *neighbors, by_distance(row))
        }
        GraphProvider::DynamicPriority { epsilon, neighbors } => {
            let mut ids = others(row.len(), i);
            // With a single neighbor the protocol only acts on agents at
            // non-zero distance.
            if *neighbors == 1 {
                ids.retain(|&j| row[j] > COINCIDENT_TOLERANCE);
            }
            head_by(ids, *neighbors, by_priority(row, *epsilon))
        }
        GraphProvider::FixedDigraph { edges } => edges
            .iter()
            .filter(|&&(from, _)| from == i)
            .map(|&(_, to)| to)
            .collect(),
    }
}

pub fn select_neighbors(provider: &GraphProvider, d: &DistanceMatrix, i: usize) -> Vec<usize> {
    select_neighbors_row(provider, d.row(i), i)
}

/// Neighbor lists for every agent from one frozen distance matrix.
pub fn build_view(provider: &GraphProvider, d: &DistanceMatrix) -> NeighborView {
    NeighborView {
        lists: (0..d.len())
            .map(|i| select_neighbors(provider, d, i))
            .collect(),
    }
}
