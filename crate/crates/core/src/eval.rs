//! Scoring predicted labels and projecting them back onto the neuron sheet.

use crate::error::{Error, Result};
use crate::label::BodyPartLabel;

fn check_lengths(predicted: usize, truth: usize) -> Result<()> {
    if predicted != truth {
        return Err(Error::arg(format!(
            "{predicted} predictions for {truth} ground-truth labels"
        )));
    }
    Ok(())
}

/// Fraction of points whose prediction equals the pre-noise label. Unmapped
/// points count as wrong.
pub fn accuracy(predicted: &[Option<BodyPartLabel>], truth: &[BodyPartLabel]) -> Result<f64> {
    check_lengths(predicted.len(), truth.len())?;
    if truth.is_empty() {
        return Err(Error::arg("accuracy of an empty set is undefined"));
    }
    let hit = predicted
        .iter()
        .zip(truth)
        .filter(|(p, t)| **p == Some(**t))
        .count();
    Ok(hit as f64 / truth.len() as f64)
}

/// Accuracy restricted to each ground-truth class; `None` for absent classes.
pub fn per_part_accuracy(
    predicted: &[Option<BodyPartLabel>],
    truth: &[BodyPartLabel],
) -> Result<[Option<f64>; BodyPartLabel::COUNT]> {
    check_lengths(predicted.len(), truth.len())?;
    let mut hit = [0usize; BodyPartLabel::COUNT];
    let mut total = [0usize; BodyPartLabel::COUNT];
    for (p, t) in predicted.iter().zip(truth) {
        total[t.index()] += 1;
        if *p == Some(*t) {
            hit[t.index()] += 1;
        }
    }
    Ok(std::array::from_fn(|k| {
        (total[k] > 0).then(|| hit[k] as f64 / total[k] as f64)
    }))
}

/// Per-neuron activation mass split by predicted label.
#[derive(Debug, Clone, PartialEq)]
pub struct BackProjection {
    /// `n[i][k]`: summed activation of neuron `i` over points labelled `k`.
    pub n: Vec<[f64; BodyPartLabel::COUNT]>,
    /// Mass from points left unmapped.
    pub unmapped: Vec<f64>,
}

impl BackProjection {
    pub fn neurons(&self) -> usize {
        self.n.len()
    }

    /// Label with the most mass; ties go to the earlier label. `None` when
    /// the neuron received nothing.
    pub fn dominant(&self, i: usize) -> Option<BodyPartLabel> {
        let row = &self.n[i];
        let mut best = 0;
        for k in 1..row.len() {
            if row[k] > row[best] {
                best = k;
            }
        }
        (row[best] > 0.0).then(|| BodyPartLabel::ALL[best])
    }

    /// Largest single entry, for normalizing intensities.
    pub fn max_entry(&self) -> f64 {
        self.n
            .iter()
            .flat_map(|r| r.iter())
            .copied()
            .fold(0.0, f64::max)
    }
}

/// `n_i^k = sum over points predicted k of x_i`.
pub fn back_project<T: AsRef<[f64]>>(
    activations: &[T],
    predicted: &[Option<BodyPartLabel>],
) -> Result<BackProjection> {
    check_lengths(predicted.len(), activations.len())?;
    let d = activations.first().map_or(0, |x| x.as_ref().len());
    let mut n = vec![[0.0; BodyPartLabel::COUNT]; d];
    let mut unmapped = vec![0.0; d];
    for (x, p) in activations.iter().zip(predicted) {
        let x = x.as_ref();
        if x.len() != d {
            return Err(Error::arg("activation vectors differ in length"));
        }
        for (i, &v) in x.iter().enumerate() {
            match p {
                Some(l) => n[i][l.index()] += v,
                None => unmapped[i] += v,
            }
        }
    }
    Ok(BackProjection { n, unmapped })
}
