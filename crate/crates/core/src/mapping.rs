//! Cross-situational association between language models (words) and
//! tactile models (mixture components).
//!
//! Language models are the label identities `0..BodyPartLabel::COUNT`.
//! Tactile model `j` of fit `f` is the `j`-th component of the mixture fitted
//! at sequential iteration `f`; one-step mapping uses a single fit.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gmm::{assign_hard_weighted, fit_em_weighted, GmmConfig, GmmModel, WeightedPoints};
use crate::label::BodyPartLabel;
use crate::lexicon::LabeledUtterance;
use crate::seed::Rng;

/// Gain `eta(t)` of trial `t` (0-based) out of `R` trials.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Decay {
    #[default]
    Constant,
    /// `gamma^(R - 1 - t)`: the latest trial has gain 1.
    Geometric { gamma: f64 },
    /// Explicit per-trial gains; must cover every trial.
    Schedule(Vec<f64>),
}

impl Decay {
    fn gains(&self, r: usize) -> Result<Vec<f64>> {
        let g = match self {
            Decay::Constant => vec![1.0; r],
            Decay::Geometric { gamma } => {
                if !(*gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::arg(format!("decay gamma {gamma} must be positive")));
                }
                (0..r).map(|t| gamma.powi((r - 1 - t) as i32)).collect()
            }
            Decay::Schedule(s) => {
                if s.len() < r {
                    return Err(Error::arg(format!(
                        "decay schedule has {} gains for {r} trials",
                        s.len()
                    )));
                }
                s[..r].to_vec()
            }
        };
        if g.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::arg("decay gains must be finite and non-negative"));
        }
        Ok(g)
    }
}

/// `rows` language models by `cols` tactile models.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    a: DMatrix<f64>,
}

impl CooccurrenceMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CooccurrenceMatrix {
            a: DMatrix::zeros(rows, cols),
        }
    }

    /// Row-major entries; all must be finite and non-negative.
    pub fn from_rows(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::arg("co-occurrence data has the wrong size"));
        }
        if data.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::arg("co-occurrence entries must be finite and non-negative"));
        }
        Ok(CooccurrenceMatrix {
            a: DMatrix::from_row_slice(rows, cols, data),
        })
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[(i, j)]
    }

    pub fn total(&self) -> f64 {
        self.a.sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        CooccurrenceMatrix { a: &self.a * c }
    }

    /// Largest entry over allowed rows and columns, scanning rows then
    /// columns in increasing order so exact ties keep the first hit.
    fn global_argmax(&self, row_ok: &[bool], col_ok: &[bool]) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in (0..self.rows()).filter(|&i| row_ok[i]) {
            for j in (0..self.cols()).filter(|&j| col_ok[j]) {
                let v = self.a[(i, j)];
                if best.is_none_or(|b| v > b.2) {
                    best = Some((i, j, v));
                }
            }
        }
        best
    }
}

/// `A(i,j) = sum_t eta(t) [w_t = i] [o_t = j]` with one pair per trial.
pub fn accumulate(
    pairs: &[(usize, usize)],
    rows: usize,
    cols: usize,
    decay: &Decay,
) -> Result<CooccurrenceMatrix> {
    let gains = decay.gains(pairs.len())?;
    let mut m = CooccurrenceMatrix::zeros(rows, cols);
    for (&(w, o), g) in pairs.iter().zip(gains) {
        if w >= rows || o >= cols {
            return Err(Error::arg(format!(
                "pair ({w}, {o}) outside a {rows} x {cols} matrix"
            )));
        }
        m.a[(w, o)] += g;
    }
    Ok(m)
}

/// Component `component` of the mixture fitted at iteration `fit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TactileModel {
    pub fit: usize,
    pub component: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub tactile: TactileModel,
    /// Co-occurrence count that justified the choice.
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub language: usize,
    pub tactile: TactileModel,
    pub strength: f64,
    /// Components fitted this iteration (columns of the snapshot).
    pub components: usize,
    pub remaining_before: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MappingResult {
    /// Per language model, the chosen tactile model.
    pub assignment: Vec<Option<Assignment>>,
    /// `(tactile model, language model)` pairs barred from association.
    pub inhibited: Vec<(TactileModel, usize)>,
    /// Predicted label per data point; `None` is an unmapped point.
    pub per_point_label: Vec<Option<BodyPartLabel>>,
    pub iterations: Vec<IterationRecord>,
    /// Stopped because no positive co-occurrence remained.
    pub partial: bool,
}

impl MappingResult {
    pub fn n_assigned(&self) -> usize {
        self.assignment.iter().flatten().count()
    }

    /// Textual report: iterations, assignment table and inhibition list.
    pub fn write_report<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# bodymap mapping report v1")?;
        writeln!(w, "partial {}", self.partial)?;
        writeln!(w, "[iterations]")?;
        for (k, it) in self.iterations.iter().enumerate() {
            writeln!(
                w,
                "{k} word={} fit={} component={} strength={} matrix={}x{} remaining={} removed={}",
                BodyPartLabel::from_index(it.language).map_or("?", |l| l.key()),
                it.tactile.fit,
                it.tactile.component,
                it.strength,
                self.assignment.len(),
                it.components,
                it.remaining_before,
                it.removed
            )?;
        }
        writeln!(w, "[assignment]")?;
        for (i, a) in self.assignment.iter().enumerate() {
            let name = BodyPartLabel::from_index(i).map_or("?", |l| l.key());
            match a {
                Some(a) => writeln!(
                    w,
                    "{name} fit={} component={} strength={}",
                    a.tactile.fit, a.tactile.component, a.strength
                )?,
                None => writeln!(w, "{name} unassigned")?,
            }
        }
        writeln!(w, "[inhibited]")?;
        for (t, i) in &self.inhibited {
            writeln!(
                w,
                "fit={} component={} word={}",
                t.fit,
                t.component,
                BodyPartLabel::from_index(*i).map_or("?", |l| l.key())
            )?;
        }
        Ok(())
    }
}

/// `m(i) = argmax_j A(i, j)`, lowest `j` on ties. Rows with no positive
/// entry carry no evidence and stay unassigned. Several words may share a
/// tactile model.
pub fn one_step_map(a: &CooccurrenceMatrix) -> MappingResult {
    let assignment = (0..a.rows())
        .map(|i| {
            let mut best = 0;
            for j in 1..a.cols() {
                if a.get(i, j) > a.get(i, best) {
                    best = j;
                }
            }
            (a.cols() > 0 && a.get(i, best) > 0.0).then_some(Assignment {
                tactile: TactileModel {
                    fit: 0,
                    component: best,
                },
                strength: a.get(i, best),
            })
        })
        .collect();
    MappingResult {
        assignment,
        ..MappingResult::default()
    }
}

/// Labels points of a single-fit result from their component indices.
///
/// When several words share a component the one with the largest
/// co-occurrence wins, then the lowest label index. Components no word
/// chose yield `None`.
pub fn predict_labels(result: &MappingResult, components: &[usize]) -> Vec<Option<BodyPartLabel>> {
    let mut owner: Vec<(usize, Option<(usize, f64)>)> = Vec::new();
    let lookup = |owner: &Vec<(usize, Option<(usize, f64)>)>, c: usize| {
        owner.iter().find(|(k, _)| *k == c).and_then(|(_, o)| *o)
    };
    for (i, a) in result.assignment.iter().enumerate() {
        let Some(a) = a else { continue };
        let c = a.tactile.component;
        match owner.iter_mut().find(|(k, _)| *k == c) {
            Some((_, Some(cur))) => {
                if a.strength > cur.1 {
                    *cur = (i, a.strength);
                }
            }
            _ => owner.push((c, Some((i, a.strength)))),
        }
    }
    components
        .iter()
        .map(|&c| lookup(&owner, c).and_then(|(i, _)| BodyPartLabel::from_index(i)))
        .collect()
}

/// What each sequential iteration clusters and what it deletes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefitPolicy {
    /// Refit on points not yet claimed; an assigned tactile model removes
    /// every point it holds, since it is now barred from other words.
    Unclaimed,
    /// Refit on what is left after deleting only points that carry both the
    /// assigned tactile model and the assigned word.
    KeepResidual,
    /// Fit once and assign greedily, excluding used rows and columns.
    #[default]
    Reuse,
}

/// How sequential mapping turns its assignments into per-point labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelRule {
    /// Each point takes the word of its most probable assigned tactile model.
    /// A model's prior is its mixture weight times the share of the data its
    /// fit saw; ties go to the earlier assignment.
    #[default]
    MostProbable,
    /// A deleted point takes the word of the iteration that deleted it; any
    /// other point takes the word of the first chosen model that held it.
    Claim,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SequentialConfig {
    pub gmm: GmmConfig,
    pub refit: RefitPolicy,
    pub decay: Decay,
    pub labels: LabelRule,
}

/// Tactile points and their heard words, ready for mapping.
#[derive(Debug, Clone)]
pub struct MappingInput {
    points: WeightedPoints,
    words: Vec<usize>,
}

impl MappingInput {
    pub fn new<T: AsRef<[f64]>>(tactile: &[T], utts: &[LabeledUtterance]) -> Result<Self> {
        if tactile.len() != utts.len() {
            return Err(Error::arg(format!(
                "{} tactile points but {} utterances",
                tactile.len(),
                utts.len()
            )));
        }
        Ok(MappingInput {
            points: WeightedPoints::dedup(tactile)?,
            words: utts.iter().map(|u| u.label.index()).collect(),
        })
    }

    /// Reuses an existing deduplication; `words[n]` belongs to original point `n`.
    pub fn from_parts(points: WeightedPoints, words: Vec<usize>) -> Result<Self> {
        if points.n_original() != words.len() {
            return Err(Error::arg("one word per original point required"));
        }
        if words.iter().any(|&w| w >= BodyPartLabel::COUNT) {
            return Err(Error::arg("word index out of range"));
        }
        Ok(MappingInput { points, words })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn points(&self) -> &WeightedPoints {
        &self.points
    }

    /// Mixture over all points; the first step of both mappers.
    pub fn fit(&self, j: usize, config: &GmmConfig, rng: &mut Rng) -> Result<GmmModel> {
        if self.len() < j {
            return Err(Error::arg(format!("{} points cannot support {j} components", self.len())));
        }
        fit_em_weighted(&self.points, j.min(self.points.n_unique()), config, rng)
    }

    /// Points restricted to the original indices in `keep`, deduplicated.
    /// Returns the reduced set and, per unique row of `self`, its row there.
    fn restrict(&self, keep: &[bool]) -> Result<(WeightedPoints, Vec<Option<usize>>)> {
        let mut w = vec![0.0; self.points.n_unique()];
        for (n, &k) in self.points.index().iter().enumerate() {
            if keep[n] {
                w[k] += 1.0;
            }
        }
        let rows: Vec<usize> = (0..w.len()).filter(|&k| w[k] > 0.0).collect();
        let mut map = vec![None; w.len()];
        for (new, &old) in rows.iter().enumerate() {
            map[old] = Some(new);
        }
        let pts = WeightedPoints::new(
            self.points.points().select_rows(&rows),
            rows.iter().map(|&k| w[k]).collect(),
        )?;
        Ok((pts, map))
    }
}

fn cooccurrence(
    input: &MappingInput,
    keep: &[bool],
    component_of: impl Fn(usize) -> usize,
    cols: usize,
    gains: &[f64],
) -> CooccurrenceMatrix {
    let mut a = CooccurrenceMatrix::zeros(BodyPartLabel::COUNT, cols);
    for n in 0..input.len() {
        if keep[n] {
            let c = component_of(input.points.index()[n]);
            a.a[(input.words[n], c)] += gains[n];
        }
    }
    a
}

/// One-step mapping end to end: fit `j` components (or take `fit`), count
/// co-occurrences, map each word to its strongest component.
pub fn one_step(
    input: &MappingInput,
    j: usize,
    config: &SequentialConfig,
    fit: Option<&GmmModel>,
    rng: &mut Rng,
) -> Result<MappingResult> {
    let owned;
    let model = match fit {
        Some(m) => m,
        None => {
            owned = input.fit(j, &config.gmm, rng)?;
            &owned
        }
    };
    let gains = config.decay.gains(input.len())?;
    let comp = assign_hard_weighted(model, &input.points);
    let keep = vec![true; input.len()];
    let a = cooccurrence(input, &keep, |k| comp[k], model.n_components(), &gains);
    let mut result = one_step_map(&a);
    let per_point: Vec<usize> = input.points.index().iter().map(|&k| comp[k]).collect();
    result.per_point_label = predict_labels(&result, &per_point);
    Ok(result)
}

/// Sequential mapping with mutual exclusivity.
///
/// Each iteration fits `J - assigned` components to the remaining points
/// (capped by the number of distinct points), picks the global maximum of
/// the co-occurrence matrix over unassigned words, inhibits the chosen
/// tactile model against every other word and deletes points per
/// [`RefitPolicy`]. Points are then labelled per [`LabelRule`]. Stops when
/// no points remain, every word with evidence is assigned, or the matrix has
/// no positive entry left (flagged `partial`).
/// `first_fit`, when given, replaces the first iteration's fit.
pub fn sequential(
    input: &MappingInput,
    j: usize,
    config: &SequentialConfig,
    first_fit: Option<&GmmModel>,
    rng: &mut Rng,
) -> Result<MappingResult> {
    if j == 0 {
        return Err(Error::arg("need at least one tactile model"));
    }
    let n = input.len();
    let words = BodyPartLabel::COUNT;
    let gains = config.decay.gains(n)?;
    let mut remaining = vec![true; n];
    let mut n_remaining = n;
    let mut word_done = vec![false; words];
    let mut result = MappingResult {
        assignment: vec![None; words],
        per_point_label: vec![None; n],
        ..MappingResult::default()
    };

    // Claim rule: first chosen model holding a point that was never deleted.
    let mut tentative: Vec<Option<BodyPartLabel>> = vec![None; n];
    // Most-probable rule: per assigned model, its word and row scores.
    let mut scored: Vec<(usize, Vec<f64>)> = Vec::new();
    // Reuse keeps one model and one assignment for the whole run.
    let mut reused: Option<(GmmModel, Vec<usize>)> = None;
    let mut col_done: Vec<bool> = Vec::new();

    for iter in 0.. {
        let assigned = result.n_assigned();
        if n_remaining == 0 || assigned == words || assigned >= j {
            break;
        }
        let (model, comp_of_row, fit_index) = match config.refit {
            RefitPolicy::Reuse => {
                if reused.is_none() {
                    let m = match first_fit {
                        Some(m) => m.clone(),
                        None => input.fit(j, &config.gmm, rng)?,
                    };
                    let c = assign_hard_weighted(&m, &input.points);
                    col_done = vec![false; m.n_components()];
                    reused = Some((m, c));
                }
                let (m, c) = reused.as_ref().unwrap();
                (m.clone(), c.clone(), 0)
            }
            RefitPolicy::Unclaimed | RefitPolicy::KeepResidual => {
                let model = match first_fit {
                    Some(m) if iter == 0 => m.clone(),
                    _ => {
                        let (pts, _) = input.restrict(&remaining)?;
                        let jr = (j - assigned).min(pts.n_unique());
                        fit_em_weighted(&pts, jr, &config.gmm, rng)?
                    }
                };
                // hard assignment of every unique row, remaining or not
                let c = assign_hard_weighted(&model, &input.points);
                col_done = vec![false; model.n_components()];
                (model, c, iter)
            }
        };
        let cols = model.n_components();

        let a = cooccurrence(input, &remaining, |k| comp_of_row[k], cols, &gains);
        let row_ok: Vec<bool> = word_done.iter().map(|d| !d).collect();
        let col_ok: Vec<bool> = col_done.iter().map(|d| !d).collect();
        let Some((im, jm, strength)) = a.global_argmax(&row_ok, &col_ok).filter(|b| b.2 > 0.0)
        else {
            result.partial = true;
            break;
        };

        let tactile = TactileModel {
            fit: fit_index,
            component: jm,
        };
        result.assignment[im] = Some(Assignment { tactile, strength });
        word_done[im] = true;
        col_done[jm] = true;
        for other in (0..words).filter(|&i| i != im) {
            result.inhibited.push((tactile, other));
        }

        let fitted_on = match config.refit {
            RefitPolicy::Reuse => n,
            _ => n_remaining,
        };
        let prior = (model.weights()[jm] * fitted_on as f64 / n as f64).ln();
        let dens = model.component_log_density(jm, &input.points);
        scored.push((im, dens.into_iter().map(|d| d + prior).collect()));

        let label = BodyPartLabel::from_index(im);
        let before = n_remaining;
        for p in 0..n {
            if !remaining[p] || comp_of_row[input.points.index()[p]] != jm {
                continue;
            }
            let delete = match config.refit {
                RefitPolicy::KeepResidual => input.words[p] == im,
                RefitPolicy::Unclaimed | RefitPolicy::Reuse => true,
            };
            if delete {
                result.per_point_label[p] = label;
                remaining[p] = false;
                n_remaining -= 1;
            } else if tentative[p].is_none() {
                tentative[p] = label;
            }
        }
        result.iterations.push(IterationRecord {
            language: im,
            tactile,
            strength,
            components: cols,
            remaining_before: before,
            removed: before - n_remaining,
        });
    }
    match config.labels {
        LabelRule::Claim => {
            for (p, t) in tentative.into_iter().enumerate() {
                if remaining[p] {
                    result.per_point_label[p] = t;
                }
            }
        }
        LabelRule::MostProbable => {
            let rows = input.points.n_unique();
            let best: Vec<Option<usize>> = (0..rows)
                .map(|k| {
                    let mut b: Option<(usize, f64)> = None;
                    for (word, s) in &scored {
                        if b.is_none_or(|b| s[k] > b.1) {
                            b = Some((*word, s[k]));
                        }
                    }
                    b.map(|b| b.0)
                })
                .collect();
            for (p, &k) in input.points.index().iter().enumerate() {
                result.per_point_label[p] = best[k].and_then(BodyPartLabel::from_index);
            }
        }
    }
    Ok(result)
}

/// Convenience wrapper taking raw activations and utterances.
pub fn sequential_map<T: AsRef<[f64]>>(
    tactile: &[T],
    utts: &[LabeledUtterance],
    j: usize,
    config: &SequentialConfig,
    rng: &mut Rng,
) -> Result<MappingResult> {
    sequential(&MappingInput::new(tactile, utts)?, j, config, None, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;

    fn utt(label: usize, truth: usize, i: usize) -> LabeledUtterance {
        LabeledUtterance {
            label: BodyPartLabel::from_index(label).unwrap(),
            ground_truth: BodyPartLabel::from_index(truth).unwrap(),
            sample_index: i,
        }
    }

    /// Naive triple loop over words, referents and trials.
    fn naive_accumulate(pairs: &[(usize, usize)], rows: usize, cols: usize, eta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                for (t, &(w, o)) in pairs.iter().enumerate() {
                    if w == i && o == j {
                        out[i * cols + j] += eta[t];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn accumulate_examples() {
        let a = accumulate(&[(0, 0), (0, 0), (1, 1)], 2, 2, &Decay::Constant).unwrap();
        assert_eq!(a, CooccurrenceMatrix::from_rows(2, 2, &[2.0, 0.0, 0.0, 1.0]).unwrap());
        let z = accumulate(&[], 2, 3, &Decay::Constant).unwrap();
        assert_eq!(z.total(), 0.0);
        let g = accumulate(&[(0, 0), (0, 0)], 1, 1, &Decay::Geometric { gamma: 0.5 }).unwrap();
        assert_eq!(g.get(0, 0), 1.5);
        assert!(accumulate(&[(2, 0)], 2, 2, &Decay::Constant).is_err());
        assert!(accumulate(&[(0, 0)], 1, 1, &Decay::Schedule(vec![])).is_err());
    }

    #[test]
    fn one_step_examples() {
        let m = |rows, cols, d: &[f64]| one_step_map(&CooccurrenceMatrix::from_rows(rows, cols, d).unwrap());
        let comp = |r: &MappingResult| -> Vec<Option<usize>> {
            r.assignment.iter().map(|a| a.map(|a| a.tactile.component)).collect()
        };
        assert_eq!(comp(&m(2, 2, &[2.0, 0.0, 0.0, 1.0])), vec![Some(0), Some(1)]);
        assert_eq!(comp(&m(1, 2, &[1.0, 1.0])), vec![Some(0)]);
        assert_eq!(comp(&m(2, 2, &[3.0, 0.0, 2.0, 0.0])), vec![Some(0), Some(0)]);
        assert_eq!(comp(&m(1, 2, &[0.0, 0.0])), vec![None]);
    }

    #[test]
    fn predict_labels_collision_rule() {
        let r = one_step_map(&CooccurrenceMatrix::from_rows(2, 3, &[3.0, 0.0, 0.0, 5.0, 1.0, 0.0]).unwrap());
        let p = predict_labels(&r, &[0, 1, 2]);
        assert_eq!(p, vec![Some(BodyPartLabel::UpperArm), None, None]);
        let all_one = one_step_map(&CooccurrenceMatrix::from_rows(1, 1, &[4.0]).unwrap());
        assert_eq!(predict_labels(&all_one, &[0, 0]), vec![Some(BodyPartLabel::Torso); 2]);
    }

    /// Accuracy of every injective word-to-cluster assignment, by enumeration.
    fn brute_force_best(truth: &[usize], cluster: &[usize], k: usize) -> f64 {
        fn perms(k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(k - 1) {
                for pos in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(pos, k - 1);
                    out.push(q);
                }
            }
            out
        }
        perms(k)
            .iter()
            .map(|p| {
                let hit = truth.iter().zip(cluster).filter(|(t, c)| p[**c] == **t).count();
                hit as f64 / truth.len() as f64
            })
            .fold(0.0, f64::max)
    }

    fn accuracy_of(r: &MappingResult, utts: &[LabeledUtterance]) -> f64 {
        let hit = r
            .per_point_label
            .iter()
            .zip(utts)
            .filter(|(p, u)| **p == Some(u.ground_truth))
            .count();
        hit as f64 / utts.len() as f64
    }

    fn toy_two() -> (Vec<Vec<f64>>, Vec<LabeledUtterance>) {
        let mut pts = Vec::new();
        let mut utts = Vec::new();
        for i in 0..12 {
            let c = i / 6;
            let off = (i % 6) as f64 * 0.1;
            pts.push(vec![c as f64 * 10.0 + off, c as f64 * 10.0 - off * 0.5]);
            utts.push(utt(c, c, i));
        }
        (pts, utts)
    }

    #[test]
    fn separable_two_cluster_toy() {
        let (pts, utts) = toy_two();
        let input = MappingInput::new(&pts, &utts).unwrap();
        let cfg = SequentialConfig::default();
        let seq = sequential(&input, 2, &cfg, None, &mut rng_from_seed(1)).unwrap();
        let one = one_step(&input, 2, &cfg, None, &mut rng_from_seed(1)).unwrap();
        assert_eq!(seq.iterations.len(), 2);
        assert_eq!(seq.per_point_label, one.per_point_label);
        let truth: Vec<usize> = utts.iter().map(|u| u.ground_truth.index()).collect();
        let cluster: Vec<usize> = truth.clone();
        assert_eq!(brute_force_best(&truth, &cluster, 2), 1.0);
        assert_eq!(accuracy_of(&seq, &utts), 1.0);
    }

    /// Three clusters of sizes 5, 3, 4 whose word counts make words 0 and 1
    /// both peak on cluster 0.
    fn toy_collision() -> (Vec<Vec<f64>>, Vec<LabeledUtterance>, Vec<usize>) {
        let centres = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let words = [
            (0, vec![0, 0, 0, 1, 1]),
            (1, vec![1, 0, 2]),
            (2, vec![2, 2, 2, 0]),
        ];
        let (mut pts, mut utts, mut cluster) = (Vec::new(), Vec::new(), Vec::new());
        for (c, ws) in &words {
            for (k, &w) in ws.iter().enumerate() {
                let off = k as f64 * 0.2;
                pts.push(vec![centres[*c][0] + off, centres[*c][1] + off * off]);
                utts.push(utt(w, *c, pts.len() - 1));
                cluster.push(*c);
            }
        }
        (pts, utts, cluster)
    }

    #[test]
    fn sequential_resolves_collision_one_step_misses() {
        let (pts, utts, cluster) = toy_collision();
        assert_eq!(pts.len(), 12);
        let truth: Vec<usize> = utts.iter().map(|u| u.ground_truth.index()).collect();
        let best = brute_force_best(&truth, &cluster, 3);
        assert_eq!(best, 1.0);
        let input = MappingInput::new(&pts, &utts).unwrap();
        for refit in [RefitPolicy::Unclaimed, RefitPolicy::Reuse] {
            let cfg = SequentialConfig {
                refit,
                ..SequentialConfig::default()
            };
            let one = one_step(&input, 3, &cfg, None, &mut rng_from_seed(2)).unwrap();
            let seq = sequential(&input, 3, &cfg, None, &mut rng_from_seed(2)).unwrap();
            assert_eq!(accuracy_of(&one, &utts), 9.0 / 12.0);
            assert_eq!(accuracy_of(&seq, &utts), best, "{refit:?}");
            assert_eq!(seq.iterations.len(), 3);
        }
    }

    #[test]
    fn single_label_single_cluster() {
        let pts = vec![vec![1.0, 2.0], vec![1.1, 2.0], vec![0.9, 2.1]];
        let utts: Vec<_> = (0..3).map(|i| utt(4, 4, i)).collect();
        let r = sequential_map(&pts, &utts, 1, &SequentialConfig::default(), &mut rng_from_seed(0)).unwrap();
        assert_eq!(r.iterations.len(), 1);
        assert_eq!(r.assignment[4].unwrap().tactile, TactileModel { fit: 0, component: 0 });
        assert!(r.per_point_label.iter().all(|l| *l == Some(BodyPartLabel::LittleFinger)));
    }

    #[test]
    fn misaligned_streams_rejected() {
        let pts = vec![vec![1.0]];
        let e = sequential_map(&pts, &[], 1, &SequentialConfig::default(), &mut rng_from_seed(0));
        assert!(e.unwrap_err().is_argument());
    }

    #[test]
    fn report_lists_sections() {
        let (pts, utts) = toy_two();
        let r = sequential_map(&pts, &utts, 2, &SequentialConfig::default(), &mut rng_from_seed(1)).unwrap();
        let mut buf = Vec::new();
        r.write_report(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("[iterations]") && s.contains("[assignment]") && s.contains("[inhibited]"));
        assert!(s.contains("torso fit=0"));
    }

    proptest! {
        #[test]
        fn accumulate_matches_naive(
            pairs in prop::collection::vec((0usize..4, 0usize..5), 0..40),
            gamma in 0.1f64..2.0,
        ) {
            for decay in [Decay::Constant, Decay::Geometric { gamma }] {
                let a = accumulate(&pairs, 4, 5, &decay).unwrap();
                let eta = decay.gains(pairs.len()).unwrap();
                let naive = naive_accumulate(&pairs, 4, 5, &eta);
                for i in 0..4 {
                    for j in 0..5 {
                        prop_assert_eq!(a.get(i, j), naive[i * 5 + j]);
                    }
                }
            }
            let c = accumulate(&pairs, 4, 5, &Decay::Constant).unwrap();
            prop_assert_eq!(c.total(), pairs.len() as f64);
        }

        #[test]
        fn one_step_matches_row_maxima_and_scale(
            data in prop::collection::vec(0u8..6, 12),
            scale in 0.01f64..100.0,
        ) {
            let vals: Vec<f64> = data.iter().map(|&v| f64::from(v)).collect();
            let a = CooccurrenceMatrix::from_rows(3, 4, &vals).unwrap();
            let r = one_step_map(&a);
            for i in 0..3 {
                let row = &vals[i * 4..i * 4 + 4];
                let max = row.iter().copied().fold(f64::MIN, f64::max);
                let first = row.iter().position(|&v| v == max).unwrap();
                let got = r.assignment[i].map(|a| a.tactile.component);
                prop_assert_eq!(got, (max > 0.0).then_some(first));
            }
            let rs = one_step_map(&a.scaled(scale));
            let comps = |r: &MappingResult| r.assignment.iter().map(|a| a.map(|a| a.tactile.component)).collect::<Vec<_>>();
            prop_assert_eq!(comps(&r), comps(&rs));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn sequential_is_injective_and_bounded(
            k in 1usize..5,
            labels in prop::collection::vec(0usize..9, 30),
            seed in 0u64..1000,
            refit in prop::sample::select(vec![RefitPolicy::Unclaimed, RefitPolicy::KeepResidual, RefitPolicy::Reuse]),
        ) {
            let pts: Vec<Vec<f64>> = (0..30)
                .map(|i| vec![(i % k) as f64 * 5.0 + (i / k) as f64 * 0.05, ((i * 7) % 11) as f64 * 0.01])
                .collect();
            let utts: Vec<_> = labels.iter().enumerate().map(|(i, &l)| utt(l, l, i)).collect();
            let cfg = SequentialConfig { refit, gmm: GmmConfig { n_init: 1, ..GmmConfig::default() }, ..SequentialConfig::default() };
            let r = sequential_map(&pts, &utts, k, &cfg, &mut rng_from_seed(seed)).unwrap();
            prop_assert!(r.iterations.len() <= k.min(9));
            let mut used: Vec<TactileModel> = r.assignment.iter().flatten().map(|a| a.tactile).collect();
            let n = used.len();
            used.sort();
            used.dedup();
            prop_assert_eq!(used.len(), n);
            for it in &r.iterations {
                prop_assert!(it.removed >= 1);
            }
        }
    }
}
