//! Uncapacitated min-cost flow networks and their exact solution.
//!
//! Sign convention: `supply[v] > 0` ships flow out of `v`, `supply[v] < 0`
//! absorbs it, and a feasible flow satisfies `outflow(v) - inflow(v) = supply[v]`
//! at every node.

mod dimacs;
mod simplex;

pub use dimacs::{read_dimacs, write_dimacs};
pub use simplex::{solve_min_cost_flow, solve_min_cost_flow_from, Basis};

use crate::error::{invalid, Result};
use crate::numeric::exact_dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub cost: f64,
}

impl Edge {
    pub fn new(tail: usize, head: usize, cost: f64) -> Self {
        Self { tail, head, cost }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    supply: Vec<i64>,
    edges: Vec<Edge>,
}

impl FlowNetwork {
    /// Checks indices, self-loops and costs. Balance is checked by the solver.
    pub fn new(supply: Vec<i64>, edges: Vec<Edge>) -> Result<Self> {
        if supply.is_empty() {
            return invalid("flow network needs at least one node");
        }
        let n = supply.len();
        for (k, e) in edges.iter().enumerate() {
            if e.tail >= n || e.head >= n {
                return invalid(format!("edge {k} ({} -> {}) references a node outside 0..{n}", e.tail, e.head));
            }
            if e.tail == e.head {
                return invalid(format!("edge {k} is a self-loop on node {}", e.tail));
            }
            if !(e.cost >= 0.0 && e.cost.is_finite()) {
                return invalid(format!("edge {k} has cost {}, expected finite and nonnegative", e.cost));
            }
        }
        Ok(Self { supply, edges })
    }

    pub fn node_count(&self) -> usize {
        self.supply.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn supply(&self) -> &[i64] {
        &self.supply
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_supply(&self) -> i64 {
        self.supply.iter().sum()
    }

    /// `Σ cost · flow`, correctly rounded.
    pub fn objective(&self, flow: &Flow) -> f64 {
        exact_dot(self.edges.iter().zip(&flow.values).filter(|(_, &x)| x != 0).map(|(e, &x)| (e.cost, x as f64)))
    }
}

/// Flow units per edge, aligned with [`FlowNetwork::edges`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub values: Vec<i64>,
}

impl Flow {
    pub fn zeros(edge_count: usize) -> Self {
        Self { values: vec![0; edge_count] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub flow: Flow,
    pub objective: f64,
    pub iterations: u64,
    pub status: FlowStatus,
    /// Node potentials from the final basis: `cost - π(tail) + π(head) >= 0`
    /// on every edge, with equality on basic edges.
    pub potentials: Vec<f64>,
    /// Edges that belong to the final spanning-tree basis.
    pub basic_edges: Vec<usize>,
    pub basis: Basis,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Negative { edge: usize, value: i64 },
    Imbalance { node: usize, net_outflow: i64, supply: i64 },
}

pub fn validate_flow(net: &FlowNetwork, flow: &Flow) -> Result<Vec<Violation>> {
    if flow.values.len() != net.edge_count() {
        return invalid(format!("flow has {} entries for {} edges", flow.values.len(), net.edge_count()));
    }
    let mut report = Vec::new();
    let mut net_out = vec![0i64; net.node_count()];
    for (k, (e, &x)) in net.edges.iter().zip(&flow.values).enumerate() {
        if x < 0 {
            report.push(Violation::Negative { edge: k, value: x });
        }
        net_out[e.tail] += x;
        net_out[e.head] -= x;
    }
    for (v, (&out, &s)) in net_out.iter().zip(&net.supply).enumerate() {
        if out != s {
            report.push(Violation::Imbalance { node: v, net_outflow: out, supply: s });
        }
    }
    Ok(report)
}
