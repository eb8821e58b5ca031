#![allow(dead_code)]

use mkdist::flow::{Edge, FlowNetwork};
use mkdist::{Grid, MassDistribution};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Successive shortest paths with Bellman-Ford, for uncapacitated networks
/// with nonnegative costs. `None` when some demand cannot be reached.
pub fn ssp_min_cost(net: &FlowNetwork) -> Option<f64> {
    let n = net.node_count();
    let edges = net.edges();
    let mut flow = vec![0i64; edges.len()];
    let mut excess: Vec<i64> = net.supply().to_vec();
    loop {
        let Some(s) = (0..n).find(|&v| excess[v] > 0) else { break };
        // residual arcs: forward always, backward where flow > 0
        let mut dist = vec![f64::INFINITY; n];
        let mut via: Vec<Option<(usize, bool)>> = vec![None; n];
        dist[s] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for (k, e) in edges.iter().enumerate() {
                if dist[e.tail] + e.cost < dist[e.head] - 1e-12 {
                    dist[e.head] = dist[e.tail] + e.cost;
                    via[e.head] = Some((k, true));
                    changed = true;
                }
                if flow[k] > 0 && dist[e.head] - e.cost < dist[e.tail] - 1e-12 {
                    dist[e.tail] = dist[e.head] - e.cost;
                    via[e.tail] = Some((k, false));
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let t = (0..n).filter(|&v| excess[v] < 0 && dist[v].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]))?;
        let mut amount = excess[s].min(-excess[t]);
        let mut v = t;
        while v != s {
            let (k, fwd) = via[v].expect("path");
            if !fwd {
                amount = amount.min(flow[k]);
            }
            v = if fwd { edges[k].tail } else { edges[k].head };
        }
        let mut v = t;
        while v != s {
            let (k, fwd) = via[v].expect("path");
            if fwd {
                flow[k] += amount;
                v = edges[k].tail;
            } else {
                flow[k] -= amount;
                v = edges[k].head;
            }
        }
        excess[s] -= amount;
        excess[t] += amount;
    }
    Some(edges.iter().zip(&flow).map(|(e, &x)| e.cost * x as f64).sum())
}

/// Balanced supplies on `n` nodes and `m` random edges without self-loops.
pub fn random_network(rng: &mut ChaCha8Rng, n: usize, m: usize, integer_costs: bool) -> FlowNetwork {
    let mut supply: Vec<i64> = (0..n).map(|_| rng.random_range(-6..=6)).collect();
    let total: i64 = supply.iter().sum();
    supply[0] -= total;
    let edges = (0..m)
        .map(|_| {
            let tail = rng.random_range(0..n);
            let mut head = rng.random_range(0..n - 1);
            if head >= tail {
                head += 1;
            }
            let cost = if integer_costs { rng.random_range(0..5) as f64 } else { rng.random_range(0.0..10.0) };
            Edge::new(tail, head, cost)
        })
        .collect();
    FlowNetwork::new(supply, edges).unwrap()
}

/// Mass on a random subset of cells.
pub fn random_distribution(rng: &mut ChaCha8Rng, grid: Grid, zero_prob: f64) -> MassDistribution {
    let mass = (0..grid.len()).map(|_| if rng.random_bool(zero_prob) { 0.0 } else { rng.random_range(0.0..1.0) }).collect();
    MassDistribution::new(grid, mass).unwrap()
}

pub fn random_grid(rng: &mut ChaCha8Rng, max_side: usize) -> Grid {
    Grid::new(rng.random_range(1..=max_side), rng.random_range(1..=max_side)).unwrap()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}
