//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints its verdict line even when it passes.

mod common;

use std::time::{Duration, Instant};

use common::{random_distribution, random_grid};
use mkdist::classify::{distance_matrix, evaluate, kappa_sweep, Metric, SweepConfig, SweepRow};
use mkdist::imaging::{bicubic_taps, decode_pgm, downsample_bicubic, encode_pgm, GrayImage, CATMULL_ROM};
use mkdist::oracle::lp_distance;
use mkdist::synth::{generate, SynthSpec};
use mkdist::transport::{quantize_jointly, unbalanced_distance_with, AuxiliaryEdges, NetworkOptions};
use mkdist::{balanced_distance, unbalanced_distance, Grid, GroundCost, MassDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut count = 0;
    for &kappa in &[0.25, 1.0, 4.0] {
        for _ in 0..80 {
            let grid = random_grid(&mut rng, 4);
            let f0 = random_distribution(&mut rng, grid, 0.3);
            let f1 = random_distribution(&mut rng, grid, 0.3);
            let cost = GroundCost::euclidean(grid);
            let flow = unbalanced_distance(&f0, &f1, &cost, kappa, 10_000).map_err(|e| e.to_string())?.value;
            let (q0, q1) = quantize_jointly(&f0, &f1, 10_000).map_err(|e| e.to_string())?;
            let lp = lp_distance(&q0, &q1, &cost, kappa).map_err(|e| e.to_string())?.value;
            let scale = flow.abs().max(lp.abs());
            if scale > 0.0 {
                worst = worst.max((flow - lp).abs() / scale);
            }
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-9 && elapsed < Duration::from_secs(60),
        format!("{count} instances, worst relative gap {worst:.2e}, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn pruning_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut mismatches = 0;
    let mut count = 0;
    for _ in 0..150 {
        let grid = random_grid(&mut rng, 6);
        let f0 = random_distribution(&mut rng, grid, 0.4);
        let f1 = random_distribution(&mut rng, grid, 0.4);
        let kappa = rng.random_range(0.05..5.0);
        let p = [1.0, 2.0][rng.random_range(0..2)];
        let cost = GroundCost::new(grid, grid, p).map_err(|e| e.to_string())?;
        let solve = |prune, auxiliary| {
            unbalanced_distance_with(&f0, &f1, &cost, kappa, 10_000, NetworkOptions { prune, auxiliary })
                .map(|r| r.value)
                .map_err(|e| e.to_string())
        };
        let pruned = solve(true, AuxiliaryEdges::Directed)?;
        for (prune, aux) in
            [(false, AuxiliaryEdges::Directed), (true, AuxiliaryEdges::Bidirectional), (false, AuxiliaryEdges::Bidirectional)]
        {
            if solve(prune, aux)? != pruned {
                mismatches += 1;
            }
        }
        count += 1;
    }
    check(mismatches == 0, format!("{count} instances x 3 variants, {mismatches} inexact"))
}

fn analytic_fixtures() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut failures = Vec::new();
    let grid = Grid::new(6, 5).unwrap();
    let cost = GroundCost::euclidean(grid);
    let err = |e: mkdist::Error| e.to_string();

    let f = random_distribution(&mut rng, grid, 0.2);
    if unbalanced_distance(&f, &f, &cost, 1.0, 1_000_000).map_err(err)?.value != 0.0 {
        failures.push("self distance".to_string());
    }

    let empty = MassDistribution::zeros(grid);
    for kappa in [0.5, 2.0] {
        let r = unbalanced_distance(&f, &empty, &cost, kappa, 1_000_000).map_err(err)?;
        let expected = kappa * f.total_mass();
        if (r.value - expected).abs() > r.stats.quantization_error_bound.min(1e-9 * expected) {
            failures.push(format!("empty target kappa {kappa}: {} vs {expected}", r.value));
        }
    }

    let g5 = Grid::new(5, 5).unwrap();
    let c5 = GroundCost::euclidean(g5);
    for mass in [1.0, 2.5] {
        let a = MassDistribution::delta(g5, g5.index(0, 0), mass).unwrap();
        let b = MassDistribution::delta(g5, g5.index(3, 4), mass).unwrap();
        for kappa in [3.0, 2.0] {
            let v = unbalanced_distance(&a, &b, &c5, kappa, 1_000_000).map_err(err)?.value;
            let expected = f64::min(5.0, 2.0 * kappa) * mass;
            if (v - expected).abs() > 1e-12 * expected {
                failures.push(format!("two deltas mass {mass} kappa {kappa}: {v} vs {expected}"));
            }
        }
    }

    for _ in 0..10 {
        let f0 = random_distribution(&mut rng, grid, 0.3);
        let f1 = random_distribution(&mut rng, grid, 0.3);
        let base = unbalanced_distance(&f0, &f1, &cost, 1.5, 1_000_000).map_err(err)?;
        for alpha in [2.0, 3.0] {
            let scaled = unbalanced_distance(
                &f0.scaled(alpha).unwrap(),
                &f1.scaled(alpha).unwrap(),
                &cost,
                1.5,
                1_000_000,
            )
            .map_err(err)?;
            let slack = scaled.stats.quantization_error_bound + alpha * base.stats.quantization_error_bound;
            if (scaled.value - alpha * base.value).abs() > slack {
                failures.push(format!("scaling by {alpha}: {} vs {}", scaled.value, alpha * base.value));
            }
        }
    }

    for _ in 0..10 {
        let f0 = random_distribution(&mut rng, grid, 0.2);
        let f1 = random_distribution(&mut rng, grid, 0.2);
        if f0.is_zero() || f1.is_zero() {
            continue;
        }
        let f1 = f1.scaled(f0.total_mass() / f1.total_mass()).unwrap();
        let kappa = grid.diameter() / 2.0 + 0.5;
        let u = unbalanced_distance(&f0, &f1, &cost, kappa, 1_000_000).map_err(err)?;
        let b = balanced_distance(&f0, &f1, &cost, 1_000_000).map_err(err)?;
        if (u.value - b.value).abs() > u.stats.quantization_error_bound + b.stats.quantization_error_bound {
            failures.push(format!("saturation: {} vs {}", u.value, b.value));
        }
    }
    check(failures.is_empty(), if failures.is_empty() { "all fixtures hold".into() } else { failures.join("; ") })
}

fn metric_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let grid = Grid::new(7, 6).unwrap();
    let cost = GroundCost::euclidean(grid);
    let err = |e: mkdist::Error| e.to_string();
    let mut asymmetric = 0;
    let mut violations = 0;
    for _ in 0..100 {
        let f0 = random_distribution(&mut rng, grid, 0.3);
        let f1 = random_distribution(&mut rng, grid, 0.3);
        let kappa = rng.random_range(0.2..6.0);
        if unbalanced_distance(&f0, &f1, &cost, kappa, 100_000).map_err(err)?.value
            != unbalanced_distance(&f1, &f0, &cost, kappa, 100_000).map_err(err)?.value
        {
            asymmetric += 1;
        }
    }
    for _ in 0..100 {
        let mut tri: Vec<MassDistribution> = (0..3).map(|_| random_distribution(&mut rng, grid, 0.3)).collect();
        if tri.iter().any(|f| f.is_zero()) {
            continue;
        }
        let m = tri[0].total_mass();
        for f in tri.iter_mut().skip(1) {
            *f = f.scaled(m / f.total_mass()).unwrap();
        }
        let d = |a: usize, b: usize| balanced_distance(&tri[a], &tri[b], &cost, 100_000);
        let (ab, bc, ac) = (d(0, 1).map_err(err)?, d(1, 2).map_err(err)?, d(0, 2).map_err(err)?);
        let slack = ab.stats.quantization_error_bound + bc.stats.quantization_error_bound + ac.stats.quantization_error_bound;
        if ac.value > ab.value + bc.value + slack {
            violations += 1;
        }
        let kappa = 2.0;
        let u = |a: usize, b: usize| unbalanced_distance(&tri[a], &tri[b], &cost, kappa, 100_000);
        let (ab, bc, ac) = (u(0, 1).map_err(err)?, u(1, 2).map_err(err)?, u(0, 2).map_err(err)?);
        let slack = ab.stats.quantization_error_bound + bc.stats.quantization_error_bound + ac.stats.quantization_error_bound;
        if ac.value > ab.value + bc.value + slack {
            violations += 1;
        }
    }
    check(
        asymmetric == 0 && violations == 0,
        format!("100 symmetric pairs ({asymmetric} failures), 100 triples ({violations} triangle violations)"),
    )
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn synthetic_benchmark() -> Outcome {
    let start = Instant::now();
    let data = generate(&SynthSpec::default()).map_err(|e| e.to_string())?;
    let config = SweepConfig { repeats: 50, seed: 20080, workers: workers(), ..SweepConfig::default() };
    let rows = kappa_sweep(&data, &config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    for row in &rows {
        println!("    {:<20} mean {:.4}  band [{:.4}, {:.4}]", row.metric, row.report.mean_error, row.report.ci_low, row.report.ci_high);
    }
    let mk: Vec<&SweepRow> = rows.iter().filter(|r| r.kappa.is_some()).collect();
    let l2 = rows.iter().find(|r| r.kappa.is_none()).expect("l2 row").report.mean_error;
    let error = |r: &SweepRow| r.report.mean_error;
    let best = mk.iter().map(|r| error(r)).fold(f64::INFINITY, f64::min);
    let (low_end, high_end) = (error(mk[0]), error(mk[mk.len() - 1]));
    let middle = mk[1..mk.len() - 1].iter().map(|r| error(r)).fold(f64::INFINITY, f64::min);
    check(
        best < l2 && middle < low_end && middle < high_end && elapsed < Duration::from_secs(30 * 60),
        format!(
            "best mk {best:.4} vs l2 {l2:.4}; ends {low_end:.4} / {high_end:.4}, interior min {middle:.4}; {} items, {:.0}s on {} workers",
            data.len(),
            elapsed.as_secs_f64(),
            workers()
        ),
    )
}

fn single_pair_timing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let grid = Grid::new(29, 24).unwrap();
    let image = |rng: &mut ChaCha8Rng| MassDistribution::new(grid, (0..grid.len()).map(|_| rng.random::<f64>()).collect()).unwrap();
    let (f0, f1) = (image(&mut rng), image(&mut rng));
    let cost = GroundCost::euclidean(grid);
    let mut rows = Vec::new();
    for kappa in [1.0, 16.0, 32.0] {
        let mut best = Duration::MAX;
        let mut edges = 0;
        for _ in 0..3 {
            let t = Instant::now();
            let r = unbalanced_distance(&f0, &f1, &cost, kappa, 1_000_000).map_err(|e| e.to_string())?;
            best = best.min(t.elapsed());
            edges = r.stats.edges_after_prune;
        }
        rows.push((kappa, best, edges));
    }
    let increasing = rows.windows(2).all(|w| w[0].2 < w[1].2);
    let detail = rows
        .iter()
        .map(|(k, t, e)| format!("kappa {k}: {:.4}s, {e} edges", t.as_secs_f64()))
        .collect::<Vec<_>>()
        .join("; ");
    check(rows[0].1 <= Duration::from_secs(1) && rows[0].1 < rows[2].1 && increasing, detail)
}

fn determinism() -> Outcome {
    let data = generate(&SynthSpec { per_class: 4, ..SynthSpec::default() }).map_err(|e| e.to_string())?;
    let labels = data.label_indices();
    let mut differing = Vec::new();
    for metric in [Metric::Mk { kappa: 4.0, p: 1.0, resolution: 1_000_000 }, Metric::L2] {
        let one = distance_matrix(&data, metric, 1).map_err(|e| e.to_string())?;
        let many = distance_matrix(&data, metric, 4).map_err(|e| e.to_string())?;
        let same_bits = one.values().iter().zip(many.values()).all(|(a, b)| a.to_bits() == b.to_bits());
        if !same_bits {
            differing.push(format!("{} matrix", metric.tag()));
        }
        let r1 = evaluate(&one, &labels, 1.0 / 3.0, 200, 5).map_err(|e| e.to_string())?;
        let r2 = evaluate(&many, &labels, 1.0 / 3.0, 200, 5).map_err(|e| e.to_string())?;
        if r1 != r2 {
            differing.push(format!("{} report", metric.tag()));
        }
    }
    check(
        differing.is_empty(),
        if differing.is_empty() { "matrices bit-identical for 1 and 4 workers; reports repeat".into() } else { differing.join(", ") },
    )
}

fn imaging() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut worst_sum = 0.0f64;
    for _ in 0..50 {
        let (wi, hi) = (rng.random_range(1..80), rng.random_range(1..80));
        let (wo, ho) = (rng.random_range(1..80), rng.random_range(1..80));
        for y in 0..ho {
            let (_, wy) = bicubic_taps(y, hi, ho, CATMULL_ROM);
            for x in 0..wo {
                let (_, wx) = bicubic_taps(x, wi, wo, CATMULL_ROM);
                let total: f64 = wy.iter().flat_map(|a| wx.iter().map(move |b| a * b)).sum();
                worst_sum = worst_sum.max((total - 1.0).abs());
            }
        }
    }
    let constant = GrayImage::filled(58, 48, 0.625).unwrap();
    let constant_ok = [(29, 24), (58, 48), (100, 7)]
        .iter()
        .all(|&(w, h)| downsample_bicubic(&constant, w, h).unwrap().pixels().iter().all(|&v| v == 0.625));
    let random = GrayImage::new(58, 48, (0..58 * 48).map(|_| rng.random::<f64>()).collect()).unwrap();
    let identity_ok = downsample_bicubic(&random, 58, 48).unwrap() == random;
    let back = decode_pgm(&encode_pgm(&random)).map_err(|e| e.to_string())?;
    let round_trip = random.pixels().iter().zip(back.pixels()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(
        worst_sum <= 1e-12 && constant_ok && identity_ok && round_trip <= 1.0 / 510.0 + f64::EPSILON,
        format!(
            "partition of unity within {worst_sum:.1e}; constant {constant_ok}; identity {identity_ok}; round trip {round_trip:.5} <= {:.5}",
            1.0 / 510.0
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("pruning invariance", pruning_invariance),
        ("analytic fixtures", analytic_fixtures),
        ("metric properties", metric_properties),
        ("synthetic benchmark", synthetic_benchmark),
        ("single-pair timing", single_pair_timing),
        ("determinism", determinism),
        ("imaging", imaging),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
