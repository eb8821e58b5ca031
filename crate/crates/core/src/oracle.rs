//! Dense reference solver for the unbalanced transport LP.
//!
//! Minimizes `Σ c_ij m_ij + κ (‖f0 − g0‖₁ + ‖f1 − g1‖₁)` over `m >= 0` with
//! row sums `g0` and column sums `g1`. Each ℓ₁ term is split into a pair of
//! nonnegative slacks, so the problem becomes a standard-form LP
//!
//! ```text
//! Σ_j m_ij + s0⁺_i − s0⁻_i = f0_i
//! Σ_i m_ij + s1⁺_j − s1⁻_j = f1_j
//! ```
//!
//! solved on an explicit tableau with Bland's rule. The `s⁺` columns form a
//! feasible starting basis. Only meant for small instances; it shares no
//! code with the network path.

use crate::distributions::{GroundCost, QuantizedDistribution};
use crate::error::{invalid, Error, Result};

/// Largest `K0 * K1` accepted.
pub const MAX_PAIRS: usize = 4096;

const TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// Optimal value in mass·cost units.
    pub value: f64,
    /// Dense `K0 x K1` plan in mass units, row-major.
    pub plan: Vec<f64>,
    pub g0: Vec<f64>,
    pub g1: Vec<f64>,
    pub pivots: usize,
}

pub fn lp_distance(
    f0: &QuantizedDistribution,
    f1: &QuantizedDistribution,
    cost: &GroundCost,
    kappa: f64,
) -> Result<OracleSolution> {
    let k0 = f0.units().len();
    let k1 = f1.units().len();
    if k0 * k1 > MAX_PAIRS {
        return invalid(format!("oracle is limited to {MAX_PAIRS} location pairs, got {}", k0 * k1));
    }
    if f0.unit_size() != f1.unit_size() {
        return invalid("oracle inputs must share one unit size");
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return invalid(format!("kappa must be positive, got {kappa}"));
    }
    if cost.grid0().len() != k0 || cost.grid1().len() != k1 {
        return invalid("ground cost grids do not match the distributions");
    }

    let rows = k0 + k1;
    let plan_cols = k0 * k1;
    let cols = plan_cols + 2 * rows;
    let width = cols + 1;
    let plus = |r: usize| plan_cols + 2 * r;
    let minus = |r: usize| plan_cols + 2 * r + 1;

    let mut c = vec![0.0; cols];
    for i in 0..k0 {
        for j in 0..k1 {
            c[i * k1 + j] = cost.value(i, j)?;
        }
    }
    for r in 0..rows {
        c[plus(r)] = kappa;
        c[minus(r)] = kappa;
    }

    let mut t = vec![0.0; rows * width];
    for i in 0..k0 {
        for j in 0..k1 {
            t[i * width + i * k1 + j] = 1.0;
            t[(k0 + j) * width + i * k1 + j] = 1.0;
        }
    }
    for r in 0..rows {
        t[r * width + plus(r)] = 1.0;
        t[r * width + minus(r)] = -1.0;
    }
    for (i, &u) in f0.units().iter().enumerate() {
        t[i * width + cols] = u as f64;
    }
    for (j, &u) in f1.units().iter().enumerate() {
        t[(k0 + j) * width + cols] = u as f64;
    }
    let mut basis: Vec<usize> = (0..rows).map(plus).collect();

    // reduced costs d_j = c_j - c_B B^-1 A_j, with B = I initially
    let mut d = c.clone();
    for r in 0..rows {
        let cb = c[basis[r]];
        for col in 0..cols {
            d[col] -= cb * t[r * width + col];
        }
    }

    let mut pivots = 0usize;
    loop {
        let Some(enter) = (0..cols).find(|&j| d[j] < -TOL) else { break };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for r in 0..rows {
            let a = t[r * width + enter];
            if a > TOL {
                let ratio = t[r * width + cols] / a;
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best - TOL || (ratio <= best + TOL && basis[r] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let r = leave.ok_or_else(|| Error::Internal("oracle LP is unbounded".into()))?;

        let p = t[r * width + enter];
        for col in 0..width {
            t[r * width + col] /= p;
        }
        for other in 0..rows {
            if other == r {
                continue;
            }
            let factor = t[other * width + enter];
            if factor != 0.0 {
                for col in 0..width {
                    t[other * width + col] -= factor * t[r * width + col];
                }
            }
        }
        let factor = d[enter];
        for col in 0..cols {
            d[col] -= factor * t[r * width + col];
        }
        basis[r] = enter;
        pivots += 1;
    }

    let mut x = vec![0.0; cols];
    for r in 0..rows {
        x[basis[r]] = t[r * width + cols];
    }
    let unit = f0.unit_size();
    let objective: f64 = c.iter().zip(&x).map(|(c, x)| c * x).sum();
    let plan: Vec<f64> = x[..plan_cols].iter().map(|v| v * unit).collect();
    let mut g0 = vec![0.0; k0];
    let mut g1 = vec![0.0; k1];
    for i in 0..k0 {
        for j in 0..k1 {
            g0[i] += plan[i * k1 + j];
            g1[j] += plan[i * k1 + j];
        }
    }
    Ok(OracleSolution { value: objective * unit, plan, g0, g1, pivots })
}
