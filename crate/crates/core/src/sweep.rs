//! Experiment harness: one deterministic pipeline per cell, a parallel grid
//! runner and CSV output.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{accuracy, per_part_accuracy};
use crate::gmm::GmmConfig;
use crate::homunculus::{surrogate_weights, HomunculusWeights, SurrogateConfig};
use crate::label::BodyPartLabel;
use crate::lexicon::{inject_noise, utterances_from_dataset, NoiseMode};
use crate::mapping::{
    one_step, sequential, Decay, LabelRule, MappingInput, MappingResult, RefitPolicy, SequentialConfig,
};
use crate::seed::{derive, rng_from_seed, Stream};
use crate::skin::{default_layout, generate_dataset, subsample_indices, SkinLayout, TaxelSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mapper {
    OneStep,
    Sequential,
}

impl Mapper {
    pub fn key(self) -> &'static str {
        match self {
            Mapper::OneStep => "onestep",
            Mapper::Sequential => "sequential",
        }
    }
}

impl fmt::Display for Mapper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MapperChoice {
    OneStep,
    Sequential,
    #[default]
    Both,
}

impl MapperChoice {
    pub fn mappers(self) -> &'static [Mapper] {
        match self {
            MapperChoice::OneStep => &[Mapper::OneStep],
            MapperChoice::Sequential => &[Mapper::Sequential],
            MapperChoice::Both => &[Mapper::OneStep, Mapper::Sequential],
        }
    }
}

impl FromStr for MapperChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onestep" => Ok(MapperChoice::OneStep),
            "sequential" => Ok(MapperChoice::Sequential),
            "both" => Ok(MapperChoice::Both),
            _ => Err(Error::arg(format!(
                "unknown mapper `{s}` (expected onestep, sequential or both)"
            ))),
        }
    }
}

/// Default size ladder: the full corpus divided by 1000, 100, 20, 10, 2, 1.
pub const DEFAULT_SIZES: [usize; 6] = [64, 638, 3190, 6381, 31903, 63806];

pub fn default_noise_levels() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    pub noise_levels: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
    pub mapper: MapperChoice,
    /// Stimulation events in each repetition's corpus.
    pub n_stimulations: usize,
    pub samples_per_stimulation: usize,
    /// Tactile models fitted, one per word.
    pub components: usize,
    pub surrogate: SurrogateConfig,
    pub gmm: GmmConfig,
    pub refit: RefitPolicy,
    pub noise_mode: NoiseMode,
    pub decay: Decay,
    pub labels: LabelRule,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sizes: DEFAULT_SIZES.to_vec(),
            noise_levels: default_noise_levels(),
            repetitions: 20,
            seed: 0,
            mapper: MapperChoice::Both,
            n_stimulations: 2127,
            samples_per_stimulation: 30,
            components: BodyPartLabel::COUNT,
            surrogate: SurrogateConfig {
                overlap: 0.1,
                ..SurrogateConfig::default()
            },
            gmm: GmmConfig::default(),
            refit: RefitPolicy::default(),
            noise_mode: NoiseMode::default(),
            decay: Decay::Constant,
            labels: LabelRule::default(),
        }
    }
}

impl SweepConfig {
    pub fn corpus_len(&self) -> usize {
        self.n_stimulations * self.samples_per_stimulation
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.noise_levels.is_empty() {
            return Err(Error::arg("need at least one size and one noise level"));
        }
        if self.repetitions == 0 {
            return Err(Error::arg("repetitions must be at least 1"));
        }
        if self.components == 0 {
            return Err(Error::arg("components must be at least 1"));
        }
        for &s in &self.sizes {
            if s < self.components {
                return Err(Error::arg(format!(
                    "size {s} is below the {} components",
                    self.components
                )));
            }
            if s > self.corpus_len() {
                return Err(Error::arg(format!(
                    "size {s} exceeds the corpus of {} samples",
                    self.corpus_len()
                )));
            }
        }
        if let Some(p) = self.noise_levels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::arg(format!("noise level {p} not in [0, 1]")));
        }
        Ok(())
    }

    fn mapping_config(&self) -> SequentialConfig {
        SequentialConfig {
            gmm: self.gmm,
            refit: self.refit,
            decay: self.decay.clone(),
            labels: self.labels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Flag {
    /// Some label never occurs in the subsample.
    MissingLabels,
    /// Mapping stopped with no positive co-occurrence left.
    Partial,
    /// No mixture could be fitted; accuracies are undefined.
    FitFailed,
}

impl Flag {
    pub fn key(self) -> &'static str {
        match self {
            Flag::MissingLabels => "missing_labels",
            Flag::Partial => "partial",
            Flag::FitFailed => "fit_failed",
        }
    }
}

/// One `(size, noise, mapper, repetition)` outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub size: usize,
    pub noise: f64,
    pub mapper: Mapper,
    pub repetition: usize,
    pub accuracy: Option<f64>,
    pub per_part: [Option<f64>; BodyPartLabel::COUNT],
    pub iterations: usize,
    pub flags: Vec<Flag>,
    /// Failure message when `FitFailed` is set.
    pub error: Option<String>,
}

/// Everything a cell needs that does not depend on size or noise.
pub struct Corpus {
    pub data: Vec<TaxelSample>,
    pub weights: HomunculusWeights,
}

impl Corpus {
    pub fn for_repetition(config: &SweepConfig, layout: &SkinLayout, repetition: usize) -> Result<Self> {
        let rep = repetition as u64;
        let mut rc = rng_from_seed(derive(config.seed, &[Stream::Corpus as u64, rep]));
        let data = generate_dataset(
            layout,
            config.n_stimulations,
            config.samples_per_stimulation,
            &mut rc,
        )?;
        let mut rw = rng_from_seed(derive(config.seed, &[Stream::Weights as u64, rep]));
        let mut weights = surrogate_weights(layout, &config.surrogate, &mut rw)?;
        weights.provenance.overlap = Some(config.surrogate.overlap);
        Ok(Corpus { data, weights })
    }
}

/// Full pipeline for one cell: subsample, project, corrupt labels, fit once,
/// then map with every requested mapper from that shared fit.
pub fn run_cell(
    config: &SweepConfig,
    corpus: &Corpus,
    size: usize,
    noise: f64,
    repetition: usize,
) -> Result<Vec<CellRecord>> {
    let rep = repetition as u64;
    let cell = [size as u64, noise.to_bits(), rep];
    let mut rs = rng_from_seed(derive(config.seed, &[Stream::Subsample as u64, size as u64, rep]));
    let idx = subsample_indices(corpus.data.len(), size, &mut rs)?;
    let samples: Vec<&TaxelSample> = idx.iter().map(|&i| &corpus.data[i]).collect();
    let acts = samples
        .iter()
        .map(|s| corpus.weights.project(s))
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<BodyPartLabel> = samples.iter().map(|s| s.label).collect();
    let owned: Vec<TaxelSample> = samples.into_iter().cloned().collect();
    let clean = utterances_from_dataset(&owned);
    let mut rn = rng_from_seed(derive(config.seed, &[&[Stream::Noise as u64][..], &cell].concat()));
    let utts = inject_noise(&clean, noise, config.noise_mode, &mut rn)?;

    let mut base_flags = Vec::new();
    if BodyPartLabel::ALL.iter().any(|l| !truth.contains(l)) {
        base_flags.push(Flag::MissingLabels);
    }
    let record = |mapper, result: std::result::Result<&MappingResult, String>| -> Result<CellRecord> {
        let mut flags = base_flags.clone();
        let mut rec = CellRecord {
            size,
            noise,
            mapper,
            repetition,
            accuracy: None,
            per_part: [None; BodyPartLabel::COUNT],
            iterations: 0,
            flags: Vec::new(),
            error: None,
        };
        match result {
            Ok(r) => {
                rec.accuracy = Some(accuracy(&r.per_point_label, &truth)?);
                rec.per_part = per_part_accuracy(&r.per_point_label, &truth)?;
                rec.iterations = match mapper {
                    Mapper::OneStep => 1,
                    Mapper::Sequential => r.iterations.len(),
                };
                if r.partial {
                    flags.push(Flag::Partial);
                }
            }
            Err(msg) => {
                flags.push(Flag::FitFailed);
                rec.error = Some(msg);
            }
        }
        flags.sort();
        rec.flags = flags;
        Ok(rec)
    };

    let input = MappingInput::new(&acts, &utts)?;
    let mcfg = config.mapping_config();
    // the clustering never sees labels, so every noise level shares one fit
    let mut rm = rng_from_seed(derive(config.seed, &[Stream::Mixture as u64, size as u64, rep]));
    let first = match input.fit(config.components, &config.gmm, &mut rm) {
        Ok(m) => m,
        Err(e) if !e.is_argument() => {
            return config
                .mapper
                .mappers()
                .iter()
                .map(|&m| record(m, Err(e.to_string())))
                .collect();
        }
        Err(e) => return Err(e),
    };
    let mut out = Vec::new();
    for &mapper in config.mapper.mappers() {
        let res = match mapper {
            Mapper::OneStep => one_step(&input, config.components, &mcfg, Some(&first), &mut rm),
            Mapper::Sequential => sequential(&input, config.components, &mcfg, Some(&first), &mut rm),
        };
        match res {
            Ok(r) => out.push(record(mapper, Ok(&r))?),
            Err(e) if !e.is_argument() => out.push(record(mapper, Err(e.to_string()))?),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Sorted by size, noise, mapper, repetition.
    pub records: Vec<CellRecord>,
}

impl SweepResult {
    pub fn failures(&self) -> impl Iterator<Item = &CellRecord> {
        self.records.iter().filter(|r| r.flags.contains(&Flag::FitFailed))
    }
}

/// Runs every cell, in parallel across cells. Output order and content do
/// not depend on scheduling.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let layout = default_layout();
    let mut records: Vec<CellRecord> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| -> Result<Vec<CellRecord>> {
            let corpus = Corpus::for_repetition(config, &layout, rep)?;
            let cells: Vec<(usize, f64)> = config
                .sizes
                .iter()
                .flat_map(|&s| config.noise_levels.iter().map(move |&p| (s, p)))
                .collect();
            let per_cell = cells
                .into_par_iter()
                .map(|(s, p)| run_cell(config, &corpus, s, p, rep))
                .collect::<Result<Vec<_>>>()?;
            Ok(per_cell.into_iter().flatten().collect())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let size_pos = |s: usize| config.sizes.iter().position(|&x| x == s).unwrap();
    let noise_pos = |p: f64| config.noise_levels.iter().position(|&x| x == p).unwrap();
    records.sort_by(|a, b| {
        (size_pos(a.size), noise_pos(a.noise), a.mapper, a.repetition)
            .cmp(&(size_pos(b.size), noise_pos(b.noise), b.mapper, b.repetition))
    });
    Ok(SweepResult { records })
}

pub const CSV_HEADER: &str = "size,noise,mapper,repetition,accuracy,acc_torso,acc_upperarm,acc_forearm,acc_palm,acc_little,acc_ring,acc_middle,acc_index,acc_thumb,iterations,flags";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn write_records_csv<W: Write>(records: &[CellRecord], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        let parts: Vec<String> = r.per_part.iter().map(|v| opt(*v)).collect();
        let flags = if r.flags.is_empty() {
            "none".to_string()
        } else {
            r.flags.iter().map(|f| f.key()).collect::<Vec<_>>().join("|")
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.size,
            r.noise,
            r.mapper,
            r.repetition,
            opt(r.accuracy),
            parts.join(","),
            r.iterations,
            flags
        )?;
    }
    Ok(())
}

/// Mean and sample standard deviation over the defined values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len();
        if n == 0 {
            return Summary {
                n,
                mean: None,
                std: None,
            };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = (n > 1).then(|| {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        Summary {
            n,
            mean: Some(mean),
            std,
        }
    }
}

/// Statistics of one `(size, noise, mapper)` group.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub size: usize,
    pub noise: f64,
    pub mapper: Mapper,
    pub runs: usize,
    pub failed: usize,
    pub accuracy: Summary,
    pub per_part: [Summary; BodyPartLabel::COUNT],
}

/// Groups consecutive records of a sorted result.
pub fn aggregate(records: &[CellRecord]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let key = |r: &CellRecord| (r.size, r.noise.to_bits(), r.mapper);
        let k = key(&records[start]);
        let end = start
            + records[start..]
                .iter()
                .take_while(|r| key(r) == k)
                .count();
        let g = &records[start..end];
        out.push(Aggregate {
            size: g[0].size,
            noise: g[0].noise,
            mapper: g[0].mapper,
            runs: g.len(),
            failed: g.iter().filter(|r| r.flags.contains(&Flag::FitFailed)).count(),
            accuracy: Summary::of(g.iter().filter_map(|r| r.accuracy)),
            per_part: std::array::from_fn(|p| Summary::of(g.iter().filter_map(|r| r.per_part[p]))),
        });
        start = end;
    }
    out
}

pub fn write_aggregate_csv<W: Write>(aggs: &[Aggregate], mut w: W) -> Result<()> {
    let mut header = vec!["size", "noise", "mapper", "runs", "failed"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    header.push("mean_accuracy".into());
    header.push("std_accuracy".into());
    for l in BodyPartLabel::ALL {
        header.push(format!("mean_acc_{}", l.key()));
        header.push(format!("std_acc_{}", l.key()));
    }
    writeln!(w, "{}", header.join(","))?;
    for a in aggs {
        let mut row = vec![
            a.size.to_string(),
            a.noise.to_string(),
            a.mapper.to_string(),
            a.runs.to_string(),
            a.failed.to_string(),
            opt(a.accuracy.mean),
            opt(a.accuracy.std),
        ];
        for s in &a.per_part {
            row.push(opt(s.mean));
            row.push(opt(s.std));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
