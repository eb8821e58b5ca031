//! Monge-Kantorovich distances as min-cost flows.
//!
//! Sources carry `f0`, sinks demand `f1`, and an auxiliary node `w` trades
//! mass with both sides at price `κ` per unit, which is what lets the two
//! totals differ. Direct source→sink edges costing more than `2κ` are never
//! used by an optimal flow (routing through `w` costs exactly `2κ`), so they
//! are dropped before solving.

use crate::distributions::{quantize_with_unit, GroundCost, MassDistribution, QuantizedDistribution};
use crate::error::{invalid, Error, Result};
use crate::flow::{solve_min_cost_flow, solve_min_cost_flow_from, Basis, Edge, FlowNetwork, FlowSolution, FlowStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Sparse transport plan; only positive entries are stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
}

impl TransportPlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn row_marginal(&self, sources: usize) -> Vec<f64> {
        let mut out = vec![0.0; sources];
        for e in &self.entries {
            out[e.source] += e.mass;
        }
        out
    }

    pub fn column_marginal(&self, targets: usize) -> Vec<f64> {
        let mut out = vec![0.0; targets];
        for e in &self.entries {
            out[e.target] += e.mass;
        }
        out
    }

    /// `Σ cost(x0, x1) · m(x0, x1)`.
    pub fn cost(&self, cost: &GroundCost) -> Result<f64> {
        let mut total = 0.0;
        for e in &self.entries {
            total += cost.value(e.source, e.target)? * e.mass;
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportStats {
    /// Source-sink pairs of the solved network, before pruning.
    pub edges_before_prune: usize,
    /// Direct edges kept after pruning.
    pub edges_after_prune: usize,
    pub simplex_iterations: u64,
    pub quantization_unit: f64,
    /// Worst-case effect of quantization on `value`:
    /// `(max cost + 2κ) · unit · (K0 + K1)`.
    pub quantization_error_bound: f64,
}

#[derive(Debug, Clone)]
pub struct TransportResult {
    pub value: f64,
    pub kappa: Option<f64>,
    pub plan: TransportPlan,
    pub g0: MassDistribution,
    pub g1: MassDistribution,
    pub created_mass: f64,
    pub destroyed_mass: f64,
    pub stats: TransportStats,
}

impl TransportResult {
    /// Plan cost plus the creation/destruction penalty.
    pub fn recomputed_value(&self, cost: &GroundCost) -> Result<f64> {
        let penalty = self.kappa.map_or(0.0, |k| k * (self.created_mass + self.destroyed_mass));
        Ok(self.plan.cost(cost)? + penalty)
    }
}

/// Which auxiliary edges the unbalanced network carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxiliaryEdges {
    /// `source -> w` and `w -> sink` only.
    Directed,
    /// `w` joined to every source and sink in both directions.
    Bidirectional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkOptions {
    pub prune: bool,
    pub auxiliary: AuxiliaryEdges,
}

impl Default for NetworkOptions {
    fn default() -> Self {
        Self { prune: true, auxiliary: AuxiliaryEdges::Directed }
    }
}

/// A transport instance laid out as a flow network: nodes `0..K0` are
/// sources, `K0..K0+K1` sinks, and `K0+K1` is `w` when present.
#[derive(Debug, Clone)]
pub struct TransportNetwork {
    network: FlowNetwork,
    sources: usize,
    sinks: usize,
    direct_edges: usize,
    edges_before_prune: usize,
}

impl TransportNetwork {
    pub fn network(&self) -> &FlowNetwork {
        &self.network
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    pub fn sinks(&self) -> usize {
        self.sinks
    }

    pub fn auxiliary_node(&self) -> Option<usize> {
        (self.network.node_count() > self.sources + self.sinks).then_some(self.sources + self.sinks)
    }

    /// Direct source→sink edges; they come first in the edge list.
    pub fn direct_edge_count(&self) -> usize {
        self.direct_edges
    }

    pub fn edges_before_prune(&self) -> usize {
        self.edges_before_prune
    }

    pub fn solve(&self) -> Result<FlowSolution> {
        solve_min_cost_flow(&self.network)
    }
}

/// Keeps a direct edge iff its cost is at most `2κ`.
pub fn prune_edges(cost: &GroundCost, kappa: f64) -> impl Fn(usize, usize) -> bool + '_ {
    let threshold = 2.0 * kappa;
    move |i, j| cost.value_unchecked(i, j) <= threshold
}

fn check_inputs(f0: &QuantizedDistribution, f1: &QuantizedDistribution, cost: &GroundCost) -> Result<()> {
    if f0.unit_size() != f1.unit_size() {
        return invalid(format!(
            "distributions must share one unit size, got {} and {}",
            f0.unit_size(),
            f1.unit_size()
        ));
    }
    if f0.grid() != cost.grid0() || f1.grid() != cost.grid1() {
        return invalid("ground cost grids do not match the distributions");
    }
    Ok(())
}

fn direct_edges(cost: &GroundCost, threshold: f64, sinks_offset: usize, edges: &mut Vec<Edge>) {
    cost.for_each_pair_within(threshold, |i, j, c| edges.push(Edge::new(i, sinks_offset + j, c)));
}

pub fn build_transport_network(
    f0: &QuantizedDistribution,
    f1: &QuantizedDistribution,
    cost: &GroundCost,
    kappa: f64,
) -> Result<TransportNetwork> {
    build_transport_network_with(f0, f1, cost, kappa, NetworkOptions::default())
}

pub fn build_transport_network_with(
    f0: &QuantizedDistribution,
    f1: &QuantizedDistribution,
    cost: &GroundCost,
    kappa: f64,
    options: NetworkOptions,
) -> Result<TransportNetwork> {
    check_inputs(f0, f1, cost)?;
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return invalid(format!("kappa must be finite and nonnegative, got {kappa}"));
    }
    let k0 = f0.units().len();
    let k1 = f1.units().len();
    let w = k0 + k1;

    let mut supply = Vec::with_capacity(w + 1);
    supply.extend_from_slice(f0.units());
    supply.extend(f1.units().iter().map(|&u| -u));
    supply.push(f1.total_units() - f0.total_units());

    let threshold = if options.prune { 2.0 * kappa } else { f64::INFINITY };
    let mut edges = Vec::new();
    direct_edges(cost, threshold, k0, &mut edges);
    let direct = edges.len();
    for i in 0..k0 {
        edges.push(Edge::new(i, w, kappa));
    }
    for j in 0..k1 {
        edges.push(Edge::new(w, k0 + j, kappa));
    }
    if options.auxiliary == AuxiliaryEdges::Bidirectional {
        for i in 0..k0 {
            edges.push(Edge::new(w, i, kappa));
        }
        for j in 0..k1 {
            edges.push(Edge::new(k0 + j, w, kappa));
        }
    }
    Ok(TransportNetwork {
        network: FlowNetwork::new(supply, edges)?,
        sources: k0,
        sinks: k1,
        direct_edges: direct,
        edges_before_prune: k0 * k1,
    })
}

/// Complete bipartite network without `w`; both sides must carry the same
/// number of units.
pub fn build_balanced_network(
    f0: &QuantizedDistribution,
    f1: &QuantizedDistribution,
    cost: &GroundCost,
) -> Result<TransportNetwork> {
    check_inputs(f0, f1, cost)?;
    if f0.total_units() != f1.total_units() {
        return invalid("balanced transport needs equal unit totals");
    }
    let k0 = f0.units().len();
    let k1 = f1.units().len();
    let mut supply = Vec::with_capacity(k0 + k1);
    supply.extend_from_slice(f0.units());
    supply.extend(f1.units().iter().map(|&u| -u));
    let mut edges = Vec::with_capacity(k0 * k1);
    direct_edges(cost, f64::INFINITY, k0, &mut edges);
    Ok(TransportNetwork {
        network: FlowNetwork::new(supply, edges)?,
        sources: k0,
        sinks: k1,
        direct_edges: k0 * k1,
        edges_before_prune: k0 * k1,
    })
}

/// Quantizes both distributions with one unit of size
/// `(‖f0‖ + ‖f1‖) / (2 · resolution)`.
pub fn quantize_jointly(
    f0: &MassDistribution,
    f1: &MassDistribution,
    resolution: u64,
) -> Result<(QuantizedDistribution, QuantizedDistribution)> {
    if resolution == 0 {
        return invalid("quantization resolution must be at least 1");
    }
    let total = f0.total_mass() + f1.total_mass();
    let unit = if total > 0.0 { total / (2.0 * resolution as f64) } else { 1.0 };
    Ok((quantize_with_unit(f0, unit)?, quantize_with_unit(f1, unit)?))
}

fn check_grids(f0: &MassDistribution, f1: &MassDistribution, cost: &GroundCost) -> Result<()> {
    if f0.grid() != cost.grid0() || f1.grid() != cost.grid1() {
        return invalid("ground cost grids do not match the distributions");
    }
    Ok(())
}

fn empty_result(f0: &MassDistribution, f1: &MassDistribution, kappa: Option<f64>) -> TransportResult {
    TransportResult {
        value: 0.0,
        kappa,
        plan: TransportPlan::default(),
        g0: MassDistribution::zeros(*f0.grid()),
        g1: MassDistribution::zeros(*f1.grid()),
        created_mass: 0.0,
        destroyed_mass: 0.0,
        stats: TransportStats {
            edges_before_prune: f0.len() * f1.len(),
            edges_after_prune: 0,
            simplex_iterations: 0,
            quantization_unit: 1.0,
            quantization_error_bound: 0.0,
        },
    }
}

/// The network actually solved by the distance functions: only cells with
/// residual mass become nodes. When the ground cost is a metric on a single
/// grid, mass present in both distributions at a cell stays in place at
/// zero cost and is removed first; a metric cost never gains by moving it.
struct SupportNetwork {
    net: TransportNetwork,
    source_cells: Vec<usize>,
    sink_cells: Vec<usize>,
    /// Units kept in place per cell; empty when nothing was cancelled.
    shared: Vec<i64>,
}

fn keeps_shared_mass(cost: &GroundCost) -> bool {
    cost.grid0() == cost.grid1() && cost.exponent() <= 1.0
}

/// `kappa = None` builds the balanced network (no `w`, nothing pruned).
fn support_network(
    q0: &QuantizedDistribution,
    q1: &QuantizedDistribution,
    cost: &GroundCost,
    kappa: Option<f64>,
    options: NetworkOptions,
) -> Result<SupportNetwork> {
    check_inputs(q0, q1, cost)?;
    let (mut r0, mut r1) = (q0.units().to_vec(), q1.units().to_vec());
    let mut shared = Vec::new();
    if keeps_shared_mass(cost) {
        shared = r0.iter().zip(&r1).map(|(&a, &b)| a.min(b)).collect();
        for (k, &s) in shared.iter().enumerate() {
            r0[k] -= s;
            r1[k] -= s;
        }
    }
    let source_cells: Vec<usize> = (0..r0.len()).filter(|&i| r0[i] > 0).collect();
    let sink_cells: Vec<usize> = (0..r1.len()).filter(|&j| r1[j] > 0).collect();
    let (k0, k1) = (source_cells.len(), sink_cells.len());

    let mut supply: Vec<i64> = source_cells.iter().map(|&i| r0[i]).collect();
    supply.extend(sink_cells.iter().map(|&j| -r1[j]));
    let threshold = match kappa {
        Some(k) if options.prune => 2.0 * k,
        _ => f64::INFINITY,
    };
    let mut edges = Vec::new();
    cost.for_each_listed_pair_within(&source_cells, &sink_cells, threshold, |a, b, c| {
        edges.push(Edge::new(a, k0 + b, c))
    });
    let direct = edges.len();
    if let Some(kappa) = kappa {
        let w = k0 + k1;
        let s0: i64 = supply[..k0].iter().sum();
        let s1: i64 = -supply[k0..].iter().sum::<i64>();
        supply.push(s1 - s0);
        edges.extend((0..k0).map(|i| Edge::new(i, w, kappa)));
        edges.extend((0..k1).map(|j| Edge::new(w, k0 + j, kappa)));
        if options.auxiliary == AuxiliaryEdges::Bidirectional {
            edges.extend((0..k0).map(|i| Edge::new(w, i, kappa)));
            edges.extend((0..k1).map(|j| Edge::new(k0 + j, w, kappa)));
        }
    } else if supply.is_empty() {
        // nothing left to move; a lone node keeps the network well formed
        supply.push(0);
    }
    Ok(SupportNetwork {
        net: TransportNetwork {
            network: FlowNetwork::new(supply, edges)?,
            sources: k0,
            sinks: k1,
            direct_edges: direct,
            edges_before_prune: k0 * k1,
        },
        source_cells,
        sink_cells,
        shared,
    })
}

fn interpret(
    sn: &SupportNetwork,
    sol: &FlowSolution,
    q0: &QuantizedDistribution,
    q1: &QuantizedDistribution,
    cost: &GroundCost,
    kappa: Option<f64>,
) -> Result<TransportResult> {
    if sol.status != FlowStatus::Optimal {
        return Err(Error::Internal("transport network reported infeasible".into()));
    }
    let net = &sn.net;
    let unit = q0.unit_size();
    let (k0, k1) = (q0.units().len(), q1.units().len());
    let mut g0_units = vec![0i64; k0];
    let mut g1_units = vec![0i64; k1];
    let mut entries = Vec::new();
    for (cell, &s) in sn.shared.iter().enumerate() {
        if s > 0 {
            g0_units[cell] += s;
            g1_units[cell] += s;
            entries.push(PlanEntry { source: cell, target: cell, mass: s as f64 * unit });
        }
    }
    for (e, &x) in net.network.edges()[..net.direct_edges].iter().zip(&sol.flow.values) {
        if x > 0 {
            let source = sn.source_cells[e.tail];
            let target = sn.sink_cells[e.head - net.sources];
            g0_units[source] += x;
            g1_units[target] += x;
            entries.push(PlanEntry { source, target, mass: x as f64 * unit });
        }
    }
    entries.sort_by_key(|e| (e.source, e.target));
    let destroyed: i64 = q0.units().iter().zip(&g0_units).map(|(f, g)| (f - g).abs()).sum();
    let created: i64 = q1.units().iter().zip(&g1_units).map(|(f, g)| (f - g).abs()).sum();
    let to_mass = |units: &[i64], grid| {
        MassDistribution::new(grid, units.iter().map(|&u| u as f64 * unit).collect())
    };
    let max_cost = cost.max_cost();
    let slack = kappa.map_or(max_cost, |k| max_cost + 2.0 * k);
    Ok(TransportResult {
        value: sol.objective * unit,
        kappa,
        plan: TransportPlan { entries },
        g0: to_mass(&g0_units, *q0.grid())?,
        g1: to_mass(&g1_units, *q1.grid())?,
        created_mass: created as f64 * unit,
        destroyed_mass: destroyed as f64 * unit,
        stats: TransportStats {
            edges_before_prune: net.edges_before_prune,
            edges_after_prune: net.direct_edges,
            simplex_iterations: sol.iterations,
            quantization_unit: unit,
            quantization_error_bound: slack * unit * (k0 + k1) as f64,
        },
    })
}

/// Unbalanced transport distance with creation/destruction price `kappa`.
pub fn unbalanced_distance(
    f0: &MassDistribution,
    f1: &MassDistribution,
    cost: &GroundCost,
    kappa: f64,
    resolution: u64,
) -> Result<TransportResult> {
    unbalanced_distance_with(f0, f1, cost, kappa, resolution, NetworkOptions::default())
}

pub fn unbalanced_distance_with(
    f0: &MassDistribution,
    f1: &MassDistribution,
    cost: &GroundCost,
    kappa: f64,
    resolution: u64,
    options: NetworkOptions,
) -> Result<TransportResult> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return invalid(format!("kappa must be positive and finite, got {kappa}"));
    }
    check_grids(f0, f1, cost)?;
    if f0.is_zero() && f1.is_zero() {
        if resolution == 0 {
            return invalid("quantization resolution must be at least 1");
        }
        return Ok(empty_result(f0, f1, Some(kappa)));
    }
    let (q0, q1) = quantize_jointly(f0, f1, resolution)?;
    let sn = support_network(&q0, &q1, cost, Some(kappa), options)?;
    let sol = sn.net.solve()?;
    interpret(&sn, &sol, &q0, &q1, cost, Some(kappa))
}

/// [`unbalanced_distance`] for several `kappas` on one pair. Solves in
/// increasing κ order, seeding each solve with the previous optimal basis:
/// supplies do not depend on κ and the kept edge set only grows, so the
/// previous tree stays primal feasible. Results follow the input order.
pub fn unbalanced_sweep(
    f0: &MassDistribution,
    f1: &MassDistribution,
    cost: &GroundCost,
    kappas: &[f64],
    resolution: u64,
) -> Result<Vec<TransportResult>> {
    for &kappa in kappas {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return invalid(format!("kappa must be positive and finite, got {kappa}"));
        }
    }
    check_grids(f0, f1, cost)?;
    if resolution == 0 {
        return invalid("quantization resolution must be at least 1");
    }
    if f0.is_zero() && f1.is_zero() {
        return Ok(kappas.iter().map(|&k| empty_result(f0, f1, Some(k))).collect());
    }
    let (q0, q1) = quantize_jointly(f0, f1, resolution)?;
    let mut order: Vec<usize> = (0..kappas.len()).collect();
    order.sort_by(|&a, &b| kappas[a].total_cmp(&kappas[b]));
    let mut results: Vec<Option<TransportResult>> = vec![None; kappas.len()];
    let mut basis: Option<Basis> = None;
    for idx in order {
        let kappa = kappas[idx];
        let sn = support_network(&q0, &q1, cost, Some(kappa), NetworkOptions::default())?;
        let sol = match &basis {
            Some(b) => solve_min_cost_flow_from(sn.net.network(), b)?,
            None => sn.net.solve()?,
        };
        results[idx] = Some(interpret(&sn, &sol, &q0, &q1, cost, Some(kappa))?);
        basis = Some(sol.basis);
    }
    Ok(results.into_iter().map(|r| r.expect("every kappa solved")).collect())
}

/// Classic equal-mass transport distance.
pub fn balanced_distance(
    f0: &MassDistribution,
    f1: &MassDistribution,
    cost: &GroundCost,
    resolution: u64,
) -> Result<TransportResult> {
    check_grids(f0, f1, cost)?;
    if resolution == 0 {
        return invalid("quantization resolution must be at least 1");
    }
    let (m0, m1) = (f0.total_mass(), f1.total_mass());
    if (m0 - m1).abs() > 1e-9 * m0.max(m1) {
        return invalid(format!(
            "balanced transport needs equal total mass, got {m0} and {m1}; use unbalanced_distance instead"
        ));
    }
    if m0 == 0.0 && m1 == 0.0 {
        return Ok(empty_result(f0, f1, None));
    }
    let unit = (m0 + m1) / (2.0 * resolution as f64);
    let target = resolution as i64;
    let q0 = crate::distributions::quantize_to_total(f0, unit, target)?;
    let q1 = crate::distributions::quantize_to_total(f1, unit, target)?;
    let sn = support_network(&q0, &q1, cost, None, NetworkOptions::default())?;
    let sol = sn.net.solve()?;
    interpret(&sn, &sol, &q0, &q1, cost, None)
}

/// `T^{min(1, 1/p)}` with ground cost `d^p`; balanced when `kappa` is `None`.
pub fn wasserstein_distance(
    f0: &MassDistribution,
    f1: &MassDistribution,
    p: f64,
    kappa: Option<f64>,
    resolution: u64,
) -> Result<f64> {
    let cost = GroundCost::new(*f0.grid(), *f1.grid(), p)?;
    let t = match kappa {
        Some(k) => unbalanced_distance(f0, f1, &cost, k, resolution)?.value,
        None => balanced_distance(f0, f1, &cost, resolution)?.value,
    };
    Ok(t.powf(1.0f64.min(1.0 / p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Grid;

    fn deltas(grid: Grid, a: usize, ma: f64, b: usize, mb: f64) -> (MassDistribution, MassDistribution) {
        (MassDistribution::delta(grid, a, ma).unwrap(), MassDistribution::delta(grid, b, mb).unwrap())
    }

    #[test]
    fn identical_single_unit_network_has_zero_optimum() {
        let g = Grid::new(3, 3).unwrap();
        let q = QuantizedDistribution::from_units(g, vec![0, 0, 0, 0, 1, 0, 0, 0, 0], 1.0).unwrap();
        for kappa in [0.0, 0.3, 5.0] {
            let net = build_transport_network(&q, &q, &GroundCost::euclidean(g), kappa).unwrap();
            assert_eq!(net.solve().unwrap().objective, 0.0);
        }
    }

    #[test]
    fn auxiliary_supply_balances() {
        let g = Grid::new(2, 1).unwrap();
        let q0 = QuantizedDistribution::from_units(g, vec![2, 0], 1.0).unwrap();
        let q1 = QuantizedDistribution::from_units(g, vec![0, 1], 1.0).unwrap();
        let net = build_transport_network(&q0, &q1, &GroundCost::euclidean(g), 1.0).unwrap();
        let w = net.auxiliary_node().unwrap();
        assert_eq!(net.network().supply()[w], -1);
        assert_eq!(net.network().total_supply(), 0);
    }

    #[test]
    fn mismatched_units_are_rejected() {
        let g = Grid::new(2, 1).unwrap();
        let q0 = QuantizedDistribution::from_units(g, vec![1, 0], 1.0).unwrap();
        let q1 = QuantizedDistribution::from_units(g, vec![0, 1], 0.5).unwrap();
        assert!(build_transport_network(&q0, &q1, &GroundCost::euclidean(g), 1.0).is_err());
    }

    #[test]
    fn kappa_zero_keeps_only_free_edges() {
        let g = Grid::new(3, 3).unwrap();
        let q = QuantizedDistribution::from_units(g, vec![1; 9], 1.0).unwrap();
        let c = GroundCost::euclidean(g);
        let net = build_transport_network(&q, &q, &c, 0.0).unwrap();
        for e in &net.network().edges()[..net.direct_edge_count()] {
            assert_eq!(e.cost, 0.0);
        }
        assert_eq!(net.solve().unwrap().objective, 0.0);
    }

    #[test]
    fn large_kappa_prunes_nothing() {
        let g = Grid::new(4, 3).unwrap();
        let q = QuantizedDistribution::from_units(g, vec![1; 12], 1.0).unwrap();
        let c = GroundCost::euclidean(g);
        let net = build_transport_network(&q, &q, &c, c.max_cost() / 2.0).unwrap();
        assert_eq!(net.direct_edge_count(), 144);
    }

    #[test]
    fn predicate_matches_network_edges() {
        let g = Grid::new(5, 4).unwrap();
        let q = QuantizedDistribution::from_units(g, vec![1; 20], 1.0).unwrap();
        let c = GroundCost::euclidean(g);
        let keep = prune_edges(&c, 0.9);
        let net = build_transport_network(&q, &q, &c, 0.9).unwrap();
        let expected: Vec<(usize, usize)> =
            (0..20).flat_map(|i| (0..20).map(move |j| (i, j))).filter(|&(i, j)| keep(i, j)).collect();
        let got: Vec<(usize, usize)> =
            net.network().edges()[..net.direct_edge_count()].iter().map(|e| (e.tail, e.head - 20)).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn two_delta_values() {
        let g = Grid::new(6, 6).unwrap();
        let c = GroundCost::euclidean(g);
        let (f0, f1) = deltas(g, g.index(0, 0), 1.0, g.index(3, 4), 1.0);
        assert_eq!(unbalanced_distance(&f0, &f1, &c, 3.0, 1000).unwrap().value, 5.0);
        let r = unbalanced_distance(&f0, &f1, &c, 2.0, 1000).unwrap();
        assert_eq!(r.value, 4.0);
        assert!(r.plan.is_empty());
        assert_eq!(r.created_mass, 1.0);
        assert_eq!(r.destroyed_mass, 1.0);
    }

    #[test]
    fn move_one_destroy_one() {
        let g = Grid::new(2, 1).unwrap();
        let c = GroundCost::euclidean(g);
        let (f0, f1) = deltas(g, 0, 2.0, 1, 1.0);
        // unit = 0.5 represents both totals exactly
        let r = unbalanced_distance(&f0, &f1, &c, 3.0, 3).unwrap();
        assert!((r.value - 4.0).abs() < 1e-12);
        let fine = unbalanced_distance(&f0, &f1, &c, 3.0, 1000).unwrap();
        assert!((fine.value - 4.0).abs() <= fine.stats.quantization_error_bound);
        assert!((r.destroyed_mass - 1.0).abs() < 1e-12);
        assert_eq!(r.created_mass, 0.0);
        assert!((r.recomputed_value(&c).unwrap() - r.value).abs() < 1e-12);
    }

    #[test]
    fn self_distance_is_zero() {
        let g = Grid::new(3, 2).unwrap();
        let f = MassDistribution::new(g, vec![0.1, 0.7, 0.0, 0.3, 0.2, 0.9]).unwrap();
        let c = GroundCost::euclidean(g);
        let r = unbalanced_distance(&f, &f, &c, 1.0, 10_000).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.created_mass + r.destroyed_mass, 0.0);
        assert_eq!(balanced_distance(&f, &f, &c, 10_000).unwrap().value, 0.0);
    }

    #[test]
    fn zero_inputs() {
        let g = Grid::new(2, 2).unwrap();
        let z = MassDistribution::zeros(g);
        let c = GroundCost::euclidean(g);
        let r = unbalanced_distance(&z, &z, &c, 1.0, 100).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.plan.is_empty());
        assert!(unbalanced_distance(&z, &z, &c, 0.0, 100).is_err());
    }

    #[test]
    fn balanced_rejects_unequal_mass() {
        let g = Grid::new(2, 1).unwrap();
        let (f0, f1) = deltas(g, 0, 2.0, 1, 1.0);
        let err = balanced_distance(&f0, &f1, &GroundCost::euclidean(g), 100).unwrap_err();
        assert!(err.to_string().contains("unbalanced_distance"));
    }

    #[test]
    fn balanced_single_plan() {
        let g = Grid::new(6, 6).unwrap();
        let (f0, f1) = deltas(g, g.index(1, 1), 1.0, g.index(4, 5), 1.0);
        let r = balanced_distance(&f0, &f1, &GroundCost::euclidean(g), 1000).unwrap();
        assert_eq!(r.value, 5.0);
        assert_eq!(r.plan.len(), 1);
        assert_eq!(r.created_mass + r.destroyed_mass, 0.0);
    }

    #[test]
    fn wasserstein_exponents() {
        let g = Grid::new(6, 6).unwrap();
        let (f0, f1) = deltas(g, g.index(0, 0), 1.0, g.index(3, 4), 1.0);
        assert!((wasserstein_distance(&f0, &f1, 2.0, Some(1e6), 1000).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(wasserstein_distance(&f0, &f1, 1.0, Some(2.0), 1000).unwrap(), 4.0);
        let (h0, h1) = deltas(g, g.index(0, 0), 1.0, g.index(4, 0), 1.0);
        assert!((wasserstein_distance(&h0, &h1, 0.5, Some(1e6), 1000).unwrap() - 2.0).abs() < 1e-12);
        assert!(wasserstein_distance(&f0, &f1, 0.0, None, 1000).is_err());
    }
}
