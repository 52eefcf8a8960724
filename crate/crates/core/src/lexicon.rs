//! Linguistic channel: one body-part word per tactile sample, plus controlled
//! label noise.

use std::io::{BufRead, Write};

use rand::seq::{index, SliceRandom};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::label::BodyPartLabel;
use crate::seed::Rng;
use crate::skin::TaxelSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledUtterance {
    /// Heard label, possibly corrupted.
    pub label: BodyPartLabel,
    /// Label before noise.
    pub ground_truth: BodyPartLabel,
    pub sample_index: usize,
}

/// The language models: vocabulary entries indexed `0..len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageModelSet {
    labels: Vec<BodyPartLabel>,
}

impl Default for LanguageModelSet {
    fn default() -> Self {
        LanguageModelSet {
            labels: BodyPartLabel::ALL.to_vec(),
        }
    }
}

impl LanguageModelSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> BodyPartLabel {
        self.labels[i]
    }

    pub fn index_of(&self, label: BodyPartLabel) -> usize {
        label.index()
    }
}

pub fn utterances_from_dataset(data: &[TaxelSample]) -> Vec<LabeledUtterance> {
    data.iter()
        .enumerate()
        .map(|(i, s)| LabeledUtterance {
            label: s.label,
            ground_truth: s.label,
            sample_index: i,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// Selected labels are shuffled among the selected positions.
    #[default]
    Permute,
    /// Selected labels are replaced by uniform draws from the vocabulary.
    Resample,
}

/// `round(p * n)` with halves rounded up.
pub fn corrupted_count(p: f64, n: usize) -> usize {
    ((p * n as f64 + 0.5).floor() as usize).min(n)
}

/// Corrupts `round(p * n_c)` utterances of every class `c`.
///
/// The chosen positions of all classes are pooled and, in
/// [`NoiseMode::Permute`], their labels are shuffled across the pool, which
/// keeps the label multiset fixed. `ground_truth` is never touched.
pub fn inject_noise(
    utts: &[LabeledUtterance],
    p: f64,
    mode: NoiseMode,
    rng: &mut Rng,
) -> Result<Vec<LabeledUtterance>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::arg(format!("noise level {p} not in [0, 1]")));
    }
    let mut out = utts.to_vec();
    let mut pool = Vec::new();
    for label in BodyPartLabel::ALL {
        let members: Vec<usize> = (0..utts.len()).filter(|&i| utts[i].label == label).collect();
        let k = corrupted_count(p, members.len());
        let mut chosen: Vec<usize> = index::sample(rng, members.len(), k)
            .into_iter()
            .map(|m| members[m])
            .collect();
        chosen.sort_unstable();
        pool.extend(chosen);
    }
    match mode {
        NoiseMode::Permute => {
            let mut labels: Vec<BodyPartLabel> = pool.iter().map(|&i| utts[i].label).collect();
            labels.shuffle(rng);
            for (&i, l) in pool.iter().zip(labels) {
                out[i].label = l;
            }
        }
        NoiseMode::Resample => {
            for &i in &pool {
                out[i].label = BodyPartLabel::ALL[rng.random_range(0..BodyPartLabel::COUNT)];
            }
        }
    }
    Ok(out)
}

/// One `sample_index,label,ground_truth` record per line.
pub fn write_utterances<W: Write>(utts: &[LabeledUtterance], mut w: W) -> Result<()> {
    writeln!(w, "sample_index,label,ground_truth")?;
    for u in utts {
        writeln!(w, "{},{},{}", u.sample_index, u.label.key(), u.ground_truth.key())?;
    }
    Ok(())
}

pub fn read_utterances<R: BufRead>(r: R) -> Result<Vec<LabeledUtterance>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if lineno == 1 && line.starts_with("sample_index") || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 3 {
            return Err(Error::parse(lineno, "expected three fields"));
        }
        let bad = |what: &str| Error::parse(lineno, format!("bad {what}"));
        out.push(LabeledUtterance {
            sample_index: f[0].parse().map_err(|_| bad("sample index"))?,
            label: f[1].parse().map_err(|_| bad("label"))?,
            ground_truth: f[2].parse().map_err(|_| bad("ground truth"))?,
        });
    }
    Ok(out)
}
