//! First tactile layer: the taxel-to-neuron projection.
//!
//! Neuron activations are plain dot products of a non-negative weight row
//! with the binary skin state. The weights of a trained self-organizing map
//! are not available here, so [`surrogate_weights`] builds a stand-in with
//! the property that matters downstream: each neuron listens to one body
//! territory, with an optional controlled leak into a neighbouring one.

use std::io::{BufRead, Write};
use std::ops::Deref;

use rand::seq::index;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::label::BodyPartLabel;
use crate::seed::Rng;
use crate::skin::{SkinLayout, SkinPart, TaxelSample};

/// Width and height of the neuron sheet.
pub const GRID_SHAPE: (usize, usize) = (7, 24);
pub const NEURONS: usize = GRID_SHAPE.0 * GRID_SHAPE.1;

/// Output of the first layer for one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationVector(Vec<f64>);

impl ActivationVector {
    pub fn new(values: Vec<f64>) -> Self {
        ActivationVector(values)
    }

    pub fn zeros(n: usize) -> Self {
        ActivationVector(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ActivationVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for ActivationVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ActivationVector {
    fn from(v: Vec<f64>) -> Self {
        ActivationVector(v)
    }
}

/// How a weight matrix was produced; written to the file header.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WeightProvenance {
    pub seed: Option<u64>,
    pub overlap: Option<f64>,
}

/// Dense `rows x cols` non-negative weight matrix, row `i` feeding neuron `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomunculusWeights {
    rows: usize,
    cols: usize,
    grid: (usize, usize),
    data: Vec<f64>,
    pub provenance: WeightProvenance,
}

impl HomunculusWeights {
    /// Checks non-negativity, finiteness, that no row is all zero, and that
    /// `grid` holds exactly `rows` cells.
    pub fn new(rows: usize, cols: usize, grid: (usize, usize), data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::arg(format!(
                "weight data has {} entries, expected {rows} x {cols}",
                data.len()
            )));
        }
        if grid.0 * grid.1 != rows {
            return Err(Error::arg(format!(
                "grid {}x{} does not hold {rows} neurons",
                grid.0, grid.1
            )));
        }
        if let Some(bad) = data.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::arg(format!("weight {bad} is negative or not finite")));
        }
        for (i, row) in data.chunks(cols.max(1)).enumerate() {
            if !row.iter().any(|&w| w > 0.0) {
                return Err(Error::arg(format!("neuron {i} has no positive weight")));
            }
        }
        Ok(HomunculusWeights {
            rows,
            cols,
            grid,
            data,
            provenance: WeightProvenance::default(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        self.grid
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, neuron: usize, taxel: usize) -> f64 {
        self.data[neuron * self.cols + taxel]
    }

    /// Taxels with positive weight for `neuron`.
    pub fn receptive_field(&self, neuron: usize) -> Vec<usize> {
        self.row(neuron)
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(t, _)| t)
            .collect()
    }

    /// `x_i = u_i . a` for a sparse binary sample.
    pub fn project(&self, sample: &TaxelSample) -> Result<ActivationVector> {
        if let Some(&t) = sample.active.iter().find(|&&t| t >= self.cols) {
            return Err(Error::arg(format!(
                "taxel {t} outside the {}-taxel input",
                self.cols
            )));
        }
        let x = (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                sample.active.iter().map(|&t| row[t]).sum()
            })
            .collect();
        Ok(ActivationVector(x))
    }

    /// `x_i = u_i . a` for an arbitrary dense input.
    pub fn project_dense(&self, a: &[f64]) -> Result<ActivationVector> {
        if a.len() != self.cols {
            return Err(Error::arg(format!(
                "input has {} entries, weights expect {}",
                a.len(),
                self.cols
            )));
        }
        let x = (0..self.rows)
            .map(|i| self.row(i).iter().zip(a).map(|(w, v)| w * v).sum())
            .collect();
        Ok(ActivationVector(x))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# bodymap homunculus weights v1")?;
        writeln!(w, "rows {}", self.rows)?;
        writeln!(w, "cols {}", self.cols)?;
        writeln!(w, "grid {} {}", self.grid.0, self.grid.1)?;
        match self.provenance.seed {
            Some(s) => writeln!(w, "seed {s}")?,
            None => writeln!(w, "seed none")?,
        }
        match self.provenance.overlap {
            Some(o) => writeln!(w, "overlap {o}")?,
            None => writeln!(w, "overlap none")?,
        }
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut rows = None;
        let mut cols = None;
        let mut grid = None;
        let mut provenance = WeightProvenance::default();
        let mut data = Vec::new();
        let mut lines = r.lines().enumerate();

        while let Some((i, line)) = lines.next() {
            let line = line?;
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let key = it.next().unwrap_or_default();
            let bad = |what: &str| Error::parse(lineno, format!("bad {what}"));
            match key {
                "rows" => rows = Some(it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("rows"))?),
                "cols" => cols = Some(it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("cols"))?),
                "grid" => {
                    let w = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("grid"))?;
                    let h = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("grid"))?;
                    grid = Some((w, h));
                }
                "seed" => {
                    provenance.seed = match it.next() {
                        Some("none") => None,
                        Some(v) => Some(v.parse().map_err(|_| bad("seed"))?),
                        None => return Err(bad("seed")),
                    }
                }
                "overlap" => {
                    provenance.overlap = match it.next() {
                        Some("none") => None,
                        Some(v) => Some(v.parse().map_err(|_| bad("overlap"))?),
                        None => return Err(bad("overlap")),
                    }
                }
                _ => {
                    let c = cols.ok_or_else(|| Error::parse(lineno, "matrix row before `cols`"))?;
                    let row: Vec<f64> = line
                        .split_whitespace()
                        .map(|v| v.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("matrix entry"))?;
                    if row.len() != c {
                        return Err(Error::parse(
                            lineno,
                            format!("row has {} entries, expected {c}", row.len()),
                        ));
                    }
                    data.extend(row);
                }
            }
        }
        let rows = rows.ok_or_else(|| Error::parse(0, "missing `rows`"))?;
        let cols = cols.ok_or_else(|| Error::parse(0, "missing `cols`"))?;
        let grid = grid.ok_or_else(|| Error::parse(0, "missing `grid`"))?;
        let mut w = HomunculusWeights::new(rows, cols, grid, data)?;
        w.provenance = provenance;
        Ok(w)
    }
}

/// Projects every sample, carrying labels through unchanged.
pub fn batch_project(
    w: &HomunculusWeights,
    data: &[TaxelSample],
) -> Result<Vec<(ActivationVector, BodyPartLabel)>> {
    data.iter()
        .map(|s| Ok((w.project(s)?, s.label)))
        .collect()
}

/// Number of neurons given to each skin part, in layout order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartAllocation(pub Vec<(SkinPart, usize)>);

impl PartAllocation {
    /// Largest-remainder split of `total` neurons proportional to part sizes.
    pub fn proportional(layout: &SkinLayout, total: usize) -> Self {
        let sizes: Vec<usize> = layout.parts().iter().map(|p| p.taxels.len()).collect();
        let counts = largest_remainder(&sizes, total);
        PartAllocation(
            layout
                .parts()
                .iter()
                .map(|p| p.part)
                .zip(counts)
                .collect(),
        )
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|(_, n)| n).sum()
    }

    pub fn get(&self, part: SkinPart) -> Option<usize> {
        self.0.iter().find(|(p, _)| *p == part).map(|(_, n)| *n)
    }
}

/// Splits `total` into integer shares proportional to `sizes`. Leftover units
/// go to the largest fractional parts, earlier entries winning ties.
fn largest_remainder(sizes: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = sizes.iter().sum();
    if sum == 0 {
        return vec![0; sizes.len()];
    }
    let quotas: Vec<f64> = sizes
        .iter()
        .map(|&s| s as f64 * total as f64 / sum as f64)
        .collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let short = total - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateConfig {
    /// Neurons per part; `None` means proportional to taxel counts.
    pub allocation: Option<PartAllocation>,
    /// Probability that a neuron's field leaks into a neighbouring territory.
    pub overlap: f64,
    /// Field size as a fraction of the neuron's home territory.
    pub field_fraction: f64,
    /// Share of a leaking field taken from the neighbour.
    pub blend_fraction: f64,
    pub grid: (usize, usize),
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            allocation: None,
            overlap: 0.0,
            field_fraction: 0.5,
            blend_fraction: 0.3,
            grid: GRID_SHAPE,
        }
    }
}

/// A labelled patch of skin with its own neurons.
#[derive(Debug, Clone)]
struct Territory {
    part_index: usize,
    taxels: Vec<usize>,
    neurons: usize,
}

/// Territories in layout order: one per distinct label inside each part.
/// Within a part the first territory is the hub; it neighbours the other
/// territories of its part and the hubs of the adjacent parts.
fn territories(layout: &SkinLayout, allocation: &[usize]) -> (Vec<Territory>, Vec<Vec<usize>>) {
    let mut terr: Vec<Territory> = Vec::new();
    let mut hubs = Vec::new();
    for (pi, part) in layout.parts().iter().enumerate() {
        let mut labels: Vec<BodyPartLabel> = Vec::new();
        for r in &part.regions {
            if !labels.contains(&r.label) {
                labels.push(r.label);
            }
        }
        let first = terr.len();
        hubs.push(first);
        if labels.len() == 1 {
            terr.push(Territory {
                part_index: pi,
                taxels: part.taxels.clone().collect(),
                neurons: 0,
            });
        } else {
            let mut owned = vec![false; part.taxels.len()];
            for label in &labels {
                let mut taxels: Vec<usize> = part
                    .regions
                    .iter()
                    .filter(|r| r.label == *label)
                    .flat_map(|r| r.taxels.iter().copied())
                    .collect();
                taxels.sort_unstable();
                taxels.dedup();
                for &t in &taxels {
                    owned[t - part.taxels.start] = true;
                }
                terr.push(Territory {
                    part_index: pi,
                    taxels,
                    neurons: 0,
                });
            }
            let stray = part.taxels.clone().filter(|t| !owned[t - part.taxels.start]);
            terr[first].taxels.extend(stray);
            terr[first].taxels.sort_unstable();
        }

        // At least one neuron per territory when there are enough to go round.
        let members: Vec<usize> = (first..terr.len()).collect();
        let n = allocation[pi];
        let base = usize::from(n >= members.len());
        let sizes: Vec<usize> = members.iter().map(|&t| terr[t].taxels.len()).collect();
        let extra = largest_remainder(&sizes, n - base * members.len());
        for (k, &t) in members.iter().enumerate() {
            terr[t].neurons = base + extra[k];
        }
    }

    let mut adjacent = vec![Vec::new(); terr.len()];
    for (pi, &hub) in hubs.iter().enumerate() {
        if let Some(&next) = hubs.get(pi + 1) {
            adjacent[hub].push(next);
            adjacent[next].push(hub);
        }
        let end = hubs.get(pi + 1).copied().unwrap_or(terr.len());
        for t in hub + 1..end {
            adjacent[hub].push(t);
            adjacent[t].push(hub);
        }
    }
    for a in &mut adjacent {
        a.sort_unstable();
    }
    (terr, adjacent)
}

/// Builds a surrogate weight matrix.
///
/// Each neuron draws a random field of `field_fraction` of its home
/// territory's taxels. With probability `overlap` a `blend_fraction` share of
/// the field is redrawn from an adjacent territory. Any taxel left uncovered
/// is then added to a random neuron of its territory. All field weights are
/// `1 / |field|`.
pub fn surrogate_weights(
    layout: &SkinLayout,
    config: &SurrogateConfig,
    rng: &mut Rng,
) -> Result<HomunculusWeights> {
    let neurons = config.grid.0 * config.grid.1;
    if !(0.0..1.0).contains(&config.overlap) {
        return Err(Error::arg(format!("overlap {} not in [0, 1)", config.overlap)));
    }
    if !(config.field_fraction > 0.0 && config.field_fraction <= 1.0) {
        return Err(Error::arg("field fraction must be in (0, 1]"));
    }
    if !(0.0..=1.0).contains(&config.blend_fraction) {
        return Err(Error::arg("blend fraction must be in [0, 1]"));
    }
    let allocation = match &config.allocation {
        Some(a) => a.clone(),
        None => PartAllocation::proportional(layout, neurons),
    };
    if allocation.total() != neurons {
        return Err(Error::arg(format!(
            "allocation sums to {}, grid has {neurons} neurons",
            allocation.total()
        )));
    }
    let per_part: Vec<usize> = layout
        .parts()
        .iter()
        .map(|p| {
            allocation
                .get(p.part)
                .ok_or_else(|| Error::arg(format!("allocation misses part {}", p.part)))
        })
        .collect::<Result<_>>()?;
    if allocation.0.len() != layout.parts().len() {
        return Err(Error::arg("allocation names parts absent from the layout"));
    }
    if let Some(p) = layout.parts().iter().zip(&per_part).find(|(_, &n)| n == 0) {
        return Err(Error::arg(format!("part {} has no neurons", p.0.part)));
    }

    let (terr, adjacent) = territories(layout, &per_part);
    let mut fields: Vec<Vec<usize>> = Vec::with_capacity(neurons);
    let mut home: Vec<usize> = Vec::with_capacity(neurons);
    for (ti, t) in terr.iter().enumerate() {
        for _ in 0..t.neurons {
            let size = ((config.field_fraction * t.taxels.len() as f64).round() as usize)
                .clamp(1, t.taxels.len());
            let mut field: Vec<usize> = index::sample(rng, t.taxels.len(), size)
                .into_iter()
                .map(|k| t.taxels[k])
                .collect();
            if config.overlap > 0.0 && !adjacent[ti].is_empty() && rng.random_bool(config.overlap) {
                let q = &terr[adjacent[ti][rng.random_range(0..adjacent[ti].len())]];
                let take = ((config.blend_fraction * size as f64).round() as usize)
                    .max(1)
                    .min(q.taxels.len())
                    .min(size);
                field.truncate(size - take);
                field.extend(
                    index::sample(rng, q.taxels.len(), take)
                        .into_iter()
                        .map(|k| q.taxels[k]),
                );
            }
            fields.push(field);
            home.push(ti);
        }
    }

    let mut covered = vec![false; layout.n_taxels()];
    for f in &fields {
        for &t in f {
            covered[t] = true;
        }
    }
    for (ti, t) in terr.iter().enumerate() {
        let mut owners: Vec<usize> = (0..fields.len()).filter(|&n| home[n] == ti).collect();
        if owners.is_empty() {
            owners = (0..fields.len())
                .filter(|&n| terr[home[n]].part_index == t.part_index)
                .collect();
        }
        for &tax in &t.taxels {
            if !covered[tax] {
                let n = owners[rng.random_range(0..owners.len())];
                fields[n].push(tax);
                covered[tax] = true;
            }
        }
    }

    let cols = layout.n_taxels();
    let mut data = vec![0.0; neurons * cols];
    for (i, f) in fields.iter().enumerate() {
        let w = 1.0 / f.len() as f64;
        for &t in f {
            data[i * cols + t] = w;
        }
    }
    HomunculusWeights::new(neurons, cols, config.grid, data)
}
