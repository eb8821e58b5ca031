//! Distance matrices and repeated nearest-neighbour evaluation.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distributions::{GroundCost, MassDistribution};
use crate::error::{invalid, Error, Result};
use crate::imaging::l2_distance;
use crate::transport::{unbalanced_distance, unbalanced_sweep};

pub const DEFAULT_KAPPAS: [f64; 8] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledItem {
    pub id: String,
    pub distribution: MassDistribution,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    items: Vec<LabeledItem>,
    classes: Vec<String>,
}

impl LabeledDataset {
    /// Classes are listed in order of first appearance.
    pub fn new(items: Vec<LabeledItem>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut classes: Vec<String> = Vec::new();
        for item in &items {
            if !seen.insert(item.id.as_str()) {
                return invalid(format!("duplicate item id {:?}", item.id));
            }
            if !classes.contains(&item.label) {
                classes.push(item.label.clone());
            }
        }
        Ok(Self { items, classes })
    }

    pub fn items(&self) -> &[LabeledItem] {
        &self.items
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Class index of every item.
    pub fn label_indices(&self) -> Vec<usize> {
        self.items.iter().map(|it| self.classes.iter().position(|c| *c == it.label).expect("known class")).collect()
    }
}

/// `id,label` rows, header first.
pub fn write_labels<W: Write>(rows: &[(String, String)], mut out: W) -> Result<()> {
    writeln!(out, "id,label")?;
    for (id, label) in rows {
        if id.contains(',') || label.contains(',') {
            return invalid(format!("ids and labels may not contain commas: {id:?}, {label:?}"));
        }
        writeln!(out, "{id},{label}")?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(input: R) -> Result<Vec<(String, String)>> {
    let mut rows = Vec::new();
    let mut offset = 0;
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let at = offset;
        offset += line.len() + 1;
        let text = line.trim();
        if n == 0 {
            if text != "id,label" {
                return Err(Error::Format { offset: at, message: format!("expected header `id,label`, got {text:?}") });
            }
            continue;
        }
        if text.is_empty() {
            continue;
        }
        match text.split_once(',') {
            Some((id, label)) if !id.is_empty() && !label.is_empty() && !label.contains(',') => {
                rows.push((id.trim().to_string(), label.trim().to_string()))
            }
            _ => return Err(Error::Format { offset: at, message: format!("expected `id,label`, got {text:?}") }),
        }
    }
    if offset == 0 {
        return Err(Error::Format { offset: 0, message: "empty labels file".into() });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Mk { kappa: f64, p: f64, resolution: u64 },
    L2,
}

impl Metric {
    pub fn tag(&self) -> String {
        match self {
            Metric::Mk { kappa, p, .. } => format!("mk:kappa={kappa}:p={p}"),
            Metric::L2 => "l2".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
    tag: String,
}

impl DistanceMatrix {
    /// Row-major `n x n`; must be finite, nonnegative, symmetric, zero on the diagonal.
    pub fn new(n: usize, values: Vec<f64>, tag: impl Into<String>) -> Result<Self> {
        if values.len() != n * n {
            return invalid(format!("{n}x{n} matrix needs {} values, got {}", n * n, values.len()));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return invalid(format!("diagonal entry {i} is {}", values[i * n + i]));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(v >= 0.0 && v.is_finite()) {
                    return invalid(format!("entry ({i}, {j}) is {v}"));
                }
                if v != values[j * n + i] {
                    return invalid(format!("entries ({i}, {j}) and ({j}, {i}) differ"));
                }
            }
        }
        Ok(Self { n, values, tag: tag.into() })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Entry-wise image under `f`, for monotonicity checks.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.n, self.values.iter().map(|&v| f(v)).collect(), self.tag.clone())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# metric={} n={}", self.tag, self.n)?;
        for row in self.values.chunks(self.n.max(1)).take(self.n) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let bad_header = || Error::Format { offset: 0, message: format!("expected `# metric=<tag> n=<n>`, got {header:?}") };
        let rest = header.strip_prefix("# metric=").ok_or_else(bad_header)?;
        let (tag, n) = rest.rsplit_once(" n=").ok_or_else(bad_header)?;
        let n: usize = n.trim().parse().map_err(|_| bad_header())?;
        let mut offset = header.len() + 1;
        let mut values = Vec::with_capacity(n * n);
        for line in lines {
            let line = line?;
            let at = offset;
            offset += line.len() + 1;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Format { offset: at, message: "row contains a non-numeric entry".into() })?;
            if row.len() != n {
                return Err(Error::Format { offset: at, message: format!("row has {} entries, expected {n}", row.len()) });
            }
            values.extend(row);
        }
        if values.len() != n * n {
            return Err(Error::Format { offset, message: format!("expected {n} rows, got {}", values.len() / n.max(1)) });
        }
        Self::new(n, values, tag)
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return invalid("workers must be positive");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("cannot start worker pool: {e}")))
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn check_common_grid(data: &LabeledDataset) -> Result<()> {
    if let Some(first) = data.items.first() {
        let grid = first.distribution.grid();
        if let Some(bad) = data.items.iter().find(|it| it.distribution.grid() != grid) {
            return invalid(format!("item {:?} is not on the grid of {:?}", bad.id, first.id));
        }
    }
    Ok(())
}

fn assemble(n: usize, pairs: &[(usize, usize)], vals: &[f64], tag: String) -> Result<DistanceMatrix> {
    let mut values = vec![0.0; n * n];
    for (&(i, j), &v) in pairs.iter().zip(vals) {
        values[i * n + j] = v;
        values[j * n + i] = v;
    }
    DistanceMatrix::new(n, values, tag)
}

/// All pairwise distances, each unordered pair solved once. The result does
/// not depend on `workers`.
pub fn distance_matrix(data: &LabeledDataset, metric: Metric, workers: usize) -> Result<DistanceMatrix> {
    check_common_grid(data)?;
    let n = data.len();
    let pairs = upper_pairs(n);
    let cost = match (metric, data.items.first()) {
        (Metric::Mk { p, .. }, Some(it)) => Some(GroundCost::new(*it.distribution.grid(), *it.distribution.grid(), p)?),
        _ => None,
    };
    let items = &data.items;
    let vals: Vec<f64> = pool(workers)?.install(|| {
        pairs
            .par_iter()
            .map(|&(i, j)| {
                let (a, b) = (&items[i].distribution, &items[j].distribution);
                match metric {
                    Metric::L2 => l2_distance(a, b),
                    Metric::Mk { kappa, resolution, .. } => {
                        Ok(unbalanced_distance(a, b, cost.as_ref().expect("cost built"), kappa, resolution)?.value)
                    }
                }
            })
            .collect::<Result<_>>()
    })?;
    assemble(n, &pairs, &vals, metric.tag())
}

/// One unbalanced matrix per κ, in the order given, sharing work per pair.
pub fn distance_matrices(
    data: &LabeledDataset,
    kappas: &[f64],
    p: f64,
    resolution: u64,
    workers: usize,
) -> Result<Vec<DistanceMatrix>> {
    check_common_grid(data)?;
    let n = data.len();
    let pairs = upper_pairs(n);
    let items = &data.items;
    let cost = match items.first() {
        Some(it) => Some(GroundCost::new(*it.distribution.grid(), *it.distribution.grid(), p)?),
        None => None,
    };
    let per_pair: Vec<Vec<f64>> = pool(workers)?.install(|| {
        pairs
            .par_iter()
            .map(|&(i, j)| {
                let cost = cost.as_ref().expect("cost built");
                let results = unbalanced_sweep(&items[i].distribution, &items[j].distribution, cost, kappas, resolution)?;
                Ok(results.iter().map(|r| r.value).collect())
            })
            .collect::<Result<_>>()
    })?;
    kappas
        .iter()
        .enumerate()
        .map(|(k, &kappa)| {
            let vals: Vec<f64> = per_pair.iter().map(|v| v[k]).collect();
            assemble(n, &pairs, &vals, Metric::Mk { kappa, p, resolution }.tag())
        })
        .collect()
}

/// Per class, `floor(count * fraction)` items drawn without replacement go
/// to training; the rest are test items. Both lists are sorted.
pub fn stratified_split(
    labels: &[usize],
    train_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return invalid(format!("train fraction must lie in (0, 1), got {train_fraction}"));
    }
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }
    let mut train = Vec::new();
    for (c, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let k = (idx.len() as f64 * train_fraction).floor() as usize;
        if k == 0 {
            return invalid(format!("class {c} has {} items, too few for train fraction {train_fraction}", idx.len()));
        }
        train.extend(sample(rng, idx.len(), k).into_iter().map(|s| idx[s]));
    }
    train.sort_unstable();
    let chosen: HashSet<usize> = train.iter().copied().collect();
    let test = (0..labels.len()).filter(|i| !chosen.contains(i)).collect();
    Ok((train, test))
}

/// Label of the nearest training item for each test item; equal distances
/// go to the training item with the lowest index.
pub fn nn_classify(matrix: &DistanceMatrix, labels: &[usize], train: &[usize], test: &[usize]) -> Result<Vec<usize>> {
    if train.is_empty() {
        return invalid("training set is empty");
    }
    if labels.len() != matrix.len() {
        return invalid(format!("{} labels for a {}x{} matrix", labels.len(), matrix.len(), matrix.len()));
    }
    if let Some(&bad) = train.iter().chain(test).find(|&&i| i >= matrix.len()) {
        return invalid(format!("index {bad} outside the matrix"));
    }
    let mut order: Vec<usize> = train.to_vec();
    order.sort_unstable();
    Ok(test
        .iter()
        .map(|&t| {
            let mut best = order[0];
            for &c in &order[1..] {
                if matrix.get(t, c) < matrix.get(t, best) {
                    best = c;
                }
            }
            labels[best]
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub repeats: usize,
    pub per_repeat_error: Vec<f64>,
    pub mean_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub train_fraction: f64,
}

impl ClassificationReport {
    pub fn summary(&self) -> String {
        format!(
            "mean error {:.4}  90% band [{:.4}, {:.4}]  ({} repeats, train fraction {:.4}, seed {})",
            self.mean_error, self.ci_low, self.ci_high, self.repeats, self.train_fraction, self.seed
        )
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "repeat,error")?;
        for (r, e) in self.per_repeat_error.iter().enumerate() {
            writeln!(out, "{r},{e:.16e}")?;
        }
        writeln!(out, "# mean={:.16e} ci_low={:.16e} ci_high={:.16e}", self.mean_error, self.ci_low, self.ci_high)?;
        Ok(())
    }
}

/// Linear interpolation between closest ranks of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Repeated stratified splits. Repeat `r` draws from stream `r` of the
/// seed, so repeats are independent of evaluation order.
pub fn evaluate(
    matrix: &DistanceMatrix,
    labels: &[usize],
    train_fraction: f64,
    repeats: usize,
    seed: u64,
) -> Result<ClassificationReport> {
    if repeats == 0 {
        return invalid("repeats must be at least 1");
    }
    if labels.len() != matrix.len() {
        return invalid(format!("{} labels for a {}x{} matrix", labels.len(), matrix.len(), matrix.len()));
    }
    let per_repeat_error: Vec<f64> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let (train, test) = stratified_split(labels, train_fraction, &mut rng)?;
            if test.is_empty() {
                return invalid("split left no test items");
            }
            let predicted = nn_classify(matrix, labels, &train, &test)?;
            let wrong = test.iter().zip(&predicted).filter(|(&t, &p)| labels[t] != p).count();
            Ok(wrong as f64 / test.len() as f64)
        })
        .collect::<Result<_>>()?;
    let mean_error = per_repeat_error.iter().sum::<f64>() / repeats as f64;
    let mut sorted = per_repeat_error.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(ClassificationReport {
        repeats,
        ci_low: percentile(&sorted, 0.05).min(mean_error),
        ci_high: percentile(&sorted, 0.95).max(mean_error),
        per_repeat_error,
        mean_error,
        seed,
        train_fraction,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub metric: String,
    /// `None` for the l2 row.
    pub kappa: Option<f64>,
    pub report: ClassificationReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kappas: Vec<f64>,
    pub p: f64,
    pub resolution: u64,
    pub train_fraction: f64,
    pub repeats: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kappas: DEFAULT_KAPPAS.to_vec(),
            p: 1.0,
            resolution: 1_000_000,
            train_fraction: 1.0 / 3.0,
            repeats: 1000,
            seed: 0,
            workers: 1,
        }
    }
}

/// One evaluation per κ plus an l2 row, last.
pub fn kappa_sweep(data: &LabeledDataset, config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.kappas.is_empty() {
        return invalid("kappa list is empty");
    }
    let labels = data.label_indices();
    let mut matrices = distance_matrices(data, &config.kappas, config.p, config.resolution, config.workers)?;
    matrices.push(distance_matrix(data, Metric::L2, config.workers)?);
    let mut kappas: Vec<Option<f64>> = config.kappas.iter().map(|&k| Some(k)).collect();
    kappas.push(None);
    matrices
        .iter()
        .zip(kappas)
        .map(|(m, kappa)| {
            let report = evaluate(m, &labels, config.train_fraction, config.repeats, config.seed)?;
            Ok(SweepRow { metric: m.tag().to_string(), kappa, report })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "metric,kappa,mean_error,ci_low,ci_high")?;
    for row in rows {
        let kappa = row.kappa.map_or(String::new(), |k| k.to_string());
        let r = &row.report;
        writeln!(out, "{},{kappa},{:.6},{:.6},{:.6}", row.metric, r.mean_error, r.ci_low, r.ci_high)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Grid;

    fn toy(values: Vec<f64>) -> DistanceMatrix {
        let n = (values.len() as f64).sqrt() as usize;
        DistanceMatrix::new(n, values, "toy").unwrap()
    }

    /// Two tight clusters per class on a line.
    fn separable(per_class: usize, classes: usize) -> (DistanceMatrix, Vec<usize>) {
        let labels: Vec<usize> = (0..classes * per_class).map(|i| i / per_class).collect();
        let pos: Vec<f64> = labels.iter().enumerate().map(|(i, &c)| c as f64 * 100.0 + (i % per_class) as f64 * 0.01).collect();
        let n = pos.len();
        let values = (0..n * n).map(|k| (pos[k / n] - pos[k % n]).abs()).collect();
        (DistanceMatrix::new(n, values, "sep").unwrap(), labels)
    }

    #[test]
    fn matrix_validation() {
        assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 2.0, 0.0], "x").is_err());
        assert!(DistanceMatrix::new(2, vec![1.0, 1.0, 1.0, 0.0], "x").is_err());
        assert!(DistanceMatrix::new(2, vec![0.0, f64::NAN, f64::NAN, 0.0], "x").is_err());
        assert!(DistanceMatrix::new(1, vec![0.0], "x").is_ok());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let third = 1.0 / 3.0;
        let m = toy(vec![0.0, third, 1e-300, third, 0.0, 7.25, 1e-300, 7.25, 0.0]);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# metric=toy n=3\n"));
        assert_eq!(DistanceMatrix::read_csv(buf.as_slice()).unwrap(), m);
        assert!(DistanceMatrix::read_csv("# metric=x n=2\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let rows = vec![("a".to_string(), "x".to_string()), ("b".to_string(), "y".to_string())];
        let mut buf = Vec::new();
        write_labels(&rows, &mut buf).unwrap();
        assert_eq!(read_labels(buf.as_slice()).unwrap(), rows);
        assert!(read_labels("id,label\nonlyid\n".as_bytes()).is_err());
        assert!(read_labels("name,class\n".as_bytes()).is_err());
    }

    #[test]
    fn split_sizes_and_guard() {
        let labels: Vec<usize> = (0..360).map(|i| i / 120).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (train, test) = stratified_split(&labels, 1.0 / 3.0, &mut rng).unwrap();
        assert_eq!(train.len(), 120);
        assert_eq!(test.len(), 240);
        for c in 0..3 {
            assert_eq!(train.iter().filter(|&&i| labels[i] == c).count(), 40);
        }
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..360).collect::<Vec<_>>());
        let mut again = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(stratified_split(&labels, 1.0 / 3.0, &mut again).unwrap().0, train);
        assert!(stratified_split(&labels, 0.005, &mut rng).is_err());
        assert!(stratified_split(&labels, 1.0, &mut rng).is_err());
    }

    #[test]
    fn nearest_neighbour_rules() {
        // item 2 is equidistant from 0 and 1
        let m = toy(vec![0.0, 4.0, 1.0, 4.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(nn_classify(&m, &[0, 1, 1], &[0, 1], &[2]).unwrap(), vec![0]);
        assert_eq!(nn_classify(&m, &[0, 1, 1], &[1, 0], &[2]).unwrap(), vec![0]);
        // hand-set: item 0 closer to 2 than to 1
        let m = toy(vec![0.0, 3.0, 2.0, 3.0, 0.0, 5.0, 2.0, 5.0, 0.0]);
        assert_eq!(nn_classify(&m, &[0, 1, 2], &[1, 2], &[0]).unwrap(), vec![2]);
        assert!(nn_classify(&m, &[0, 1, 2], &[], &[0]).is_err());
    }

    #[test]
    fn separable_gives_zero_error() {
        let (m, labels) = separable(12, 3);
        let r = evaluate(&m, &labels, 1.0 / 3.0, 50, 1).unwrap();
        assert_eq!(r.mean_error, 0.0);
        assert!(r.ci_low <= r.mean_error && r.mean_error <= r.ci_high);
        assert_eq!(evaluate(&m, &labels, 1.0 / 3.0, 50, 1).unwrap(), r);
    }

    #[test]
    fn squaring_distances_keeps_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let grid = Grid::new(3, 3).unwrap();
        let items = (0..9)
            .map(|k| LabeledItem {
                id: format!("i{k}"),
                distribution: MassDistribution::new(grid, (0..9).map(|_| rand::Rng::random::<f64>(&mut rng)).collect()).unwrap(),
                label: format!("c{}", k % 3),
            })
            .collect();
        let data = LabeledDataset::new(items).unwrap();
        let m = distance_matrix(&data, Metric::L2, 1).unwrap();
        let sq = m.map(|v| v * v).unwrap();
        let labels = data.label_indices();
        let train = [0, 1, 2, 4];
        let test = [3, 5, 6, 7, 8];
        assert_eq!(nn_classify(&m, &labels, &train, &test).unwrap(), nn_classify(&sq, &labels, &train, &test).unwrap());
    }

    #[test]
    fn percentile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 2.0);
        assert_eq!(percentile(&v, 0.05), 0.2);
        assert_eq!(percentile(&[7.0], 0.95), 7.0);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let grid = Grid::new(1, 1).unwrap();
        let it = LabeledItem { id: "a".into(), distribution: MassDistribution::zeros(grid), label: "x".into() };
        assert!(LabeledDataset::new(vec![it.clone(), it]).is_err());
    }
}
