//! DIMACS min-cost-flow text format, for cross-checking against external
//! solvers. Node ids are 1-based in the file. The network is uncapacitated,
//! so arcs are written with capacity equal to the total positive supply.

use std::io::{BufRead, Write};

use super::{Edge, FlowNetwork};
use crate::error::{Error, Result};

pub fn write_dimacs<W: Write>(net: &FlowNetwork, mut out: W) -> Result<()> {
    let cap: i64 = net.supply().iter().filter(|&&s| s > 0).sum();
    writeln!(out, "c uncapacitated min-cost flow, capacity column = total supply")?;
    writeln!(out, "p min {} {}", net.node_count(), net.edge_count())?;
    for (v, &s) in net.supply().iter().enumerate() {
        if s != 0 {
            writeln!(out, "n {} {}", v + 1, s)?;
        }
    }
    for e in net.edges() {
        writeln!(out, "a {} {} 0 {} {:?}", e.tail + 1, e.head + 1, cap, e.cost)?;
    }
    Ok(())
}

/// Reads a network written by [`write_dimacs`] (or any DIMACS `min` file with
/// zero lower bounds). Capacities are ignored.
pub fn read_dimacs<R: BufRead>(input: R) -> Result<FlowNetwork> {
    let mut supply: Option<Vec<i64>> = None;
    let mut edges = Vec::new();
    let mut offset = 0usize;
    for line in input.lines() {
        let line = line?;
        let at = offset;
        offset += line.len() + 1;
        let fail = |msg: &str| Error::Format { offset: at, message: format!("{msg}: {line:?}") };
        let mut parts = line.split_whitespace();
        match parts.next() {
            None | Some("c") => {}
            Some("p") => {
                if parts.next() != Some("min") {
                    return Err(fail("expected `p min <nodes> <arcs>`"));
                }
                let n: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(|| fail("bad node count"))?;
                supply = Some(vec![0; n]);
            }
            Some("n") => {
                let s = supply.as_mut().ok_or_else(|| fail("node line before problem line"))?;
                let id: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(|| fail("bad node id"))?;
                let value: i64 = parts.next().and_then(|t| t.parse().ok()).ok_or_else(|| fail("bad supply"))?;
                if id == 0 || id > s.len() {
                    return Err(fail("node id out of range"));
                }
                s[id - 1] = value;
            }
            Some("a") => {
                let n = supply.as_ref().ok_or_else(|| fail("arc line before problem line"))?.len();
                let fields: Vec<&str> = parts.collect();
                if fields.len() != 5 {
                    return Err(fail("expected `a <tail> <head> <low> <cap> <cost>`"));
                }
                let tail: usize = fields[0].parse().map_err(|_| fail("bad tail"))?;
                let head: usize = fields[1].parse().map_err(|_| fail("bad head"))?;
                let low: f64 = fields[2].parse().map_err(|_| fail("bad lower bound"))?;
                let cost: f64 = fields[4].parse().map_err(|_| fail("bad cost"))?;
                if low != 0.0 {
                    return Err(fail("nonzero lower bounds are not supported"));
                }
                if tail == 0 || head == 0 || tail > n || head > n {
                    return Err(fail("arc endpoint out of range"));
                }
                edges.push(Edge::new(tail - 1, head - 1, cost));
            }
            Some(_) => return Err(fail("unknown line type")),
        }
    }
    let supply = supply.ok_or(Error::Format { offset, message: "missing problem line".into() })?;
    FlowNetwork::new(supply, edges)
}
