//! Mass distributions on regular pixel grids, their quantization into
//! integer units, and the Euclidean ground cost between grid locations.
//!
//! Pixels are indexed row-major: index `row * width + col`, located at
//! `(col * spacing, row * spacing)`.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::with_spacing(width, height, 1.0)
    }

    pub fn with_spacing(width: usize, height: usize, spacing: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return invalid(format!("grid dimensions must be positive, got {width}x{height}"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return invalid(format!("grid spacing must be positive and finite, got {spacing}"));
        }
        Ok(Self { width, height, spacing })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of pixels.
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(col, row)` of a row-major index.
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    pub fn location(&self, index: usize) -> (f64, f64) {
        let (c, r) = self.coords(index);
        (c as f64 * self.spacing, r as f64 * self.spacing)
    }

    /// Largest distance between any two pixel locations.
    pub fn diameter(&self) -> f64 {
        let dx = (self.width - 1) as f64 * self.spacing;
        let dy = (self.height - 1) as f64 * self.spacing;
        dx.hypot(dy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassDistribution {
    grid: Grid,
    mass: Vec<f64>,
}

impl MassDistribution {
    pub fn new(grid: Grid, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != grid.len() {
            return invalid(format!(
                "mass array has {} entries but the {}x{} grid has {}",
                mass.len(),
                grid.width(),
                grid.height(),
                grid.len()
            ));
        }
        if let Some((i, m)) = mass.iter().enumerate().find(|(_, m)| !(**m >= 0.0 && m.is_finite())) {
            return invalid(format!("mass[{i}] = {m} is not a finite nonnegative value"));
        }
        Ok(Self { grid, mass })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { mass: vec![0.0; grid.len()], grid }
    }

    /// Unit mass at a single pixel.
    pub fn delta(grid: Grid, index: usize, amount: f64) -> Result<Self> {
        if index >= grid.len() {
            return invalid(format!("pixel index {index} out of range for {} pixels", grid.len()));
        }
        let mut mass = vec![0.0; grid.len()];
        mass[index] = amount;
        Self::new(grid, mass)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        total_mass(self)
    }

    pub fn is_zero(&self) -> bool {
        self.mass.iter().all(|&m| m == 0.0)
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.grid, self.mass.iter().map(|m| m * factor).collect())
    }
}

pub fn total_mass(f: &MassDistribution) -> f64 {
    f.mass.iter().sum()
}

/// A distribution expressed as a whole number of mass units per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDistribution {
    grid: Grid,
    units: Vec<i64>,
    unit_size: f64,
}

impl QuantizedDistribution {
    pub fn from_units(grid: Grid, units: Vec<i64>, unit_size: f64) -> Result<Self> {
        if units.len() != grid.len() {
            return invalid("unit array length does not match the grid");
        }
        if units.iter().any(|&u| u < 0) {
            return invalid("unit counts must be nonnegative");
        }
        if !(unit_size > 0.0 && unit_size.is_finite()) {
            return invalid(format!("unit size must be positive, got {unit_size}"));
        }
        Ok(Self { grid, units, unit_size })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn units(&self) -> &[i64] {
        &self.units
    }

    pub fn unit_size(&self) -> f64 {
        self.unit_size
    }

    pub fn total_units(&self) -> i64 {
        self.units.iter().sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_units() as f64 * self.unit_size
    }

    pub fn to_distribution(&self) -> MassDistribution {
        MassDistribution {
            grid: self.grid,
            mass: self.units.iter().map(|&u| u as f64 * self.unit_size).collect(),
        }
    }
}

/// Quantizes `f` into exactly `resolution` units of size `total_mass / resolution`.
///
/// An all-zero input yields all-zero units with unit size 1.
pub fn quantize(f: &MassDistribution, resolution: u64) -> Result<QuantizedDistribution> {
    if resolution == 0 {
        return invalid("quantization resolution must be at least 1");
    }
    let total = f.total_mass();
    if total == 0.0 {
        return Ok(QuantizedDistribution { grid: f.grid, units: vec![0; f.len()], unit_size: 1.0 });
    }
    let unit_size = total / resolution as f64;
    let units = largest_remainder(&f.mass, unit_size, resolution as i64);
    Ok(QuantizedDistribution { grid: f.grid, units, unit_size })
}

/// Quantizes `f` with a caller-chosen unit size; the unit total is
/// `round(total_mass / unit_size)`.
pub fn quantize_with_unit(f: &MassDistribution, unit_size: f64) -> Result<QuantizedDistribution> {
    if !(unit_size > 0.0 && unit_size.is_finite()) {
        return invalid(format!("unit size must be positive, got {unit_size}"));
    }
    let target = (f.total_mass() / unit_size).round() as i64;
    quantize_to_total(f, unit_size, target)
}

/// Quantizes `f` into exactly `target` units of `unit_size`.
pub fn quantize_to_total(f: &MassDistribution, unit_size: f64, target: i64) -> Result<QuantizedDistribution> {
    if !(unit_size > 0.0 && unit_size.is_finite()) {
        return invalid(format!("unit size must be positive, got {unit_size}"));
    }
    if target < 0 {
        return invalid("unit total must be nonnegative");
    }
    let units = largest_remainder(&f.mass, unit_size, target);
    Ok(QuantizedDistribution { grid: f.grid, units, unit_size })
}

/// Floors every `mass / unit_size` and hands the remaining units to the
/// entries with the largest fractional remainders (ties to the lower index).
/// Requires `target >= sum of floors`, which holds whenever `target` is the
/// rounded or exact scaled total.
fn largest_remainder(mass: &[f64], unit_size: f64, target: i64) -> Vec<i64> {
    let mut units = Vec::with_capacity(mass.len());
    let mut remainders = Vec::with_capacity(mass.len());
    for (i, &m) in mass.iter().enumerate() {
        let scaled = m / unit_size;
        let fl = scaled.floor();
        units.push(fl as i64);
        remainders.push((scaled - fl, i));
    }
    let mut deficit = target - units.iter().sum::<i64>();
    if deficit > 0 {
        remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in remainders.iter().cycle() {
            if deficit == 0 {
                break;
            }
            units[i] += 1;
            deficit -= 1;
        }
    } else if deficit < 0 {
        // Only reachable through floating error in the floors; trim the
        // smallest remainders among positive entries.
        remainders.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        while deficit < 0 {
            let before = deficit;
            for &(_, i) in &remainders {
                if deficit == 0 {
                    break;
                }
                if units[i] > 0 {
                    units[i] -= 1;
                    deficit += 1;
                }
            }
            if before == deficit {
                break;
            }
        }
    }
    units
}

/// Euclidean distance between pixel locations raised to `exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundCost {
    grid0: Grid,
    grid1: Grid,
    exponent: f64,
}

impl GroundCost {
    pub fn new(grid0: Grid, grid1: Grid, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return invalid(format!("cost exponent must be positive, got {exponent}"));
        }
        Ok(Self { grid0, grid1, exponent })
    }

    /// Plain Euclidean distance on a single grid.
    pub fn euclidean(grid: Grid) -> Self {
        Self { grid0: grid, grid1: grid, exponent: 1.0 }
    }

    pub fn grid0(&self) -> &Grid {
        &self.grid0
    }

    pub fn grid1(&self) -> &Grid {
        &self.grid1
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn value(&self, i: usize, j: usize) -> Result<f64> {
        if i >= self.grid0.len() || j >= self.grid1.len() {
            return invalid(format!(
                "cost index ({i}, {j}) out of range for {}x{} pixels",
                self.grid0.len(),
                self.grid1.len()
            ));
        }
        Ok(self.value_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, i: usize, j: usize) -> f64 {
        if self.shared_spacing() {
            let (c0, r0) = self.grid0.coords(i);
            let (c1, r1) = self.grid1.coords(j);
            return self.offset_cost(c0.abs_diff(c1), r0.abs_diff(r1));
        }
        let (x0, y0) = self.grid0.location(i);
        let (x1, y1) = self.grid1.location(j);
        self.apply_exponent((x0 - x1).hypot(y0 - y1))
    }

    #[inline]
    fn shared_spacing(&self) -> bool {
        self.grid0.spacing() == self.grid1.spacing()
    }

    /// Cost between pixels `dc` columns and `dr` rows apart on grids with a
    /// shared spacing.
    #[inline]
    fn offset_cost(&self, dc: usize, dr: usize) -> f64 {
        let s = self.grid0.spacing();
        self.apply_exponent((dc as f64 * s).hypot(dr as f64 * s))
    }

    #[inline]
    fn apply_exponent(&self, d: f64) -> f64 {
        if self.exponent == 1.0 {
            d
        } else if self.exponent == 2.0 {
            d * d
        } else {
            d.powf(self.exponent)
        }
    }

    /// Largest cost between any pair of locations.
    pub fn max_cost(&self) -> f64 {
        let (w0, h0) = (self.grid0.width() - 1, self.grid0.height() - 1);
        let (w1, h1) = (self.grid1.width() - 1, self.grid1.height() - 1);
        let corners0 = [(0, 0), (w0, 0), (0, h0), (w0, h0)];
        let corners1 = [(0, 0), (w1, 0), (0, h1), (w1, h1)];
        let mut best = 0.0f64;
        for &(c0, r0) in &corners0 {
            for &(c1, r1) in &corners1 {
                let i = self.grid0.index(c0, r0);
                let j = self.grid1.index(c1, r1);
                best = best.max(self.value_unchecked(i, j));
            }
        }
        best
    }

    /// Calls `visit(i, j, cost)` for every pair with `cost(i, j) <= threshold`,
    /// sources in order and targets ascending within each source.
    pub(crate) fn for_each_pair_within(&self, threshold: f64, mut visit: impl FnMut(usize, usize, f64)) {
        if !self.shared_spacing() {
            for i in 0..self.grid0.len() {
                self.for_each_within(i, threshold, |j, c| visit(i, j, c));
            }
            return;
        }
        let cols = self.grid0.width().max(self.grid1.width());
        let rows = self.grid0.height().max(self.grid1.height());
        let table: Vec<f64> = (0..rows).flat_map(|dr| (0..cols).map(move |dc| (dc, dr))).map(|(dc, dr)| self.offset_cost(dc, dr)).collect();
        let radius = self.search_radius(threshold);
        let s = self.grid0.spacing();
        let reach = if radius.is_infinite() { usize::MAX } else { (radius / s).floor() as usize };
        let (w1, h1) = (self.grid1.width(), self.grid1.height());
        for i in 0..self.grid0.len() {
            let (c0, r0) = self.grid0.coords(i);
            let c_lo = c0.saturating_sub(reach);
            let c_hi = c0.saturating_add(reach).min(w1 - 1);
            let r_lo = r0.saturating_sub(reach);
            let r_hi = r0.saturating_add(reach).min(h1 - 1);
            if c_lo > c_hi || r_lo > r_hi {
                continue;
            }
            for r in r_lo..=r_hi {
                let row = &table[r0.abs_diff(r) * cols..];
                for c in c_lo..=c_hi {
                    let cost = row[c0.abs_diff(c)];
                    if cost <= threshold {
                        visit(i, r * w1 + c, cost);
                    }
                }
            }
        }
    }

    /// Like [`Self::for_each_pair_within`] restricted to the listed cells;
    /// `visit` receives positions in `sources` and `targets`.
    pub(crate) fn for_each_listed_pair_within(
        &self,
        sources: &[usize],
        targets: &[usize],
        threshold: f64,
        mut visit: impl FnMut(usize, usize, f64),
    ) {
        if !self.shared_spacing() {
            for (a, &i) in sources.iter().enumerate() {
                for (b, &j) in targets.iter().enumerate() {
                    let c = self.value_unchecked(i, j);
                    if c <= threshold {
                        visit(a, b, c);
                    }
                }
            }
            return;
        }
        let cols = self.grid0.width().max(self.grid1.width());
        let rows = self.grid0.height().max(self.grid1.height());
        let table: Vec<f64> = (0..rows).flat_map(|dr| (0..cols).map(move |dc| (dc, dr))).map(|(dc, dr)| self.offset_cost(dc, dr)).collect();
        let target_coords: Vec<(usize, usize)> = targets.iter().map(|&j| self.grid1.coords(j)).collect();
        for (a, &i) in sources.iter().enumerate() {
            let (c0, r0) = self.grid0.coords(i);
            for (b, &(c1, r1)) in target_coords.iter().enumerate() {
                let c = table[r0.abs_diff(r1) * cols + c0.abs_diff(c1)];
                if c <= threshold {
                    visit(a, b, c);
                }
            }
        }
    }

    fn search_radius(&self, threshold: f64) -> f64 {
        if threshold.is_infinite() {
            f64::INFINITY
        } else {
            threshold.powf(1.0 / self.exponent) * (1.0 + 1e-9) + 1e-9
        }
    }

    /// Calls `visit(j, cost)` for every target index `j` with
    /// `cost(i, j) <= threshold`, scanning only the bounding window.
    pub(crate) fn for_each_within(&self, i: usize, threshold: f64, mut visit: impl FnMut(usize, f64)) {
        if threshold < 0.0 {
            return;
        }
        let radius = self.search_radius(threshold);
        let (x, y) = self.grid0.location(i);
        let s = self.grid1.spacing();
        let span = |center: f64, n: usize| -> (usize, usize) {
            if radius.is_infinite() {
                return (0, n - 1);
            }
            let lo = ((center - radius) / s).ceil().max(0.0);
            let hi = ((center + radius) / s).floor().min((n - 1) as f64);
            if hi < lo {
                (1, 0)
            } else {
                (lo as usize, hi as usize)
            }
        };
        let (c_lo, c_hi) = span(x, self.grid1.width());
        let (r_lo, r_hi) = span(y, self.grid1.height());
        if c_lo > c_hi || r_lo > r_hi {
            return;
        }
        for r in r_lo..=r_hi {
            for c in c_lo..=c_hi {
                let j = self.grid1.index(c, r);
                let cost = self.value_unchecked(i, j);
                if cost <= threshold {
                    visit(j, cost);
                }
            }
        }
    }
}
