//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the verdict lines are never
//! captured. The process fails if any criterion fails that is not listed in
//! `EXPECTED_FAIL`, or if a listed one starts passing.

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use bodymap::eval::back_project;
use bodymap::gmm::{fit_em, posteriors, GmmConfig, GmmModel, InitStrategy};
use bodymap::homunculus::{batch_project, surrogate_weights, SurrogateConfig};
use bodymap::lexicon::LabeledUtterance;
use bodymap::mapping::{
    accumulate, one_step, one_step_map, sequential, CooccurrenceMatrix, Decay, MappingInput,
    SequentialConfig,
};
use bodymap::seed::{rng_from_seed, Rng};
use bodymap::skin::{default_layout, generate_dataset};
use bodymap::sweep::{aggregate, run_sweep, Aggregate, CellRecord, Mapper, MapperChoice, SweepConfig};
use bodymap::BodyPartLabel;
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

/// Criteria that fail on this implementation; the analysis is kept with the
/// project's decision notes.
const EXPECTED_FAIL: &[usize] = &[2, 3, 4];

const BASE_SEED: u64 = 20_190_601;
const STRICT_SHARE: f64 = 0.6;
const ROBUST_DROP: f64 = 0.5;
const SANITY_ACCURACY: f64 = 0.95;
const SANITY_SHARE: f64 = 0.8;
const ORACLE_TOL: f64 = 1e-9;
/// EM steps may lose this much log-likelihood, relative, to rounding.
const MONOTONE_REL_TOL: f64 = 1e-7;
const CONSERVATION_REL_TOL: f64 = 1e-9;
const FULL_SCALE_BUDGET: Duration = Duration::from_secs(3600);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn mean_of(aggs: &[Aggregate], size: usize, noise: f64, mapper: Mapper) -> f64 {
    aggs.iter()
        .find(|a| a.size == size && a.noise == noise && a.mapper == mapper)
        .and_then(|a| a.accuracy.mean)
        .unwrap_or(f64::NAN)
}

fn grid_sweep() -> Vec<Aggregate> {
    let cfg = SweepConfig {
        sizes: vec![638, 3190, 6381],
        noise_levels: vec![0.0, 0.2, 0.4, 0.6, 0.8],
        repetitions: 20,
        seed: BASE_SEED,
        ..SweepConfig::default()
    };
    assert_eq!(cfg.surrogate.overlap, 0.1);
    aggregate(&run_sweep(&cfg).expect("grid sweep").records)
}

fn dominance(aggs: &[Aggregate]) -> Verdict {
    let mut cells = 0;
    let mut strict = 0;
    let mut worse = Vec::new();
    for a in aggs.iter().filter(|a| a.mapper == Mapper::OneStep) {
        let one = a.accuracy.mean.unwrap_or(f64::NAN);
        let seq = mean_of(aggs, a.size, a.noise, Mapper::Sequential);
        cells += 1;
        if seq > one {
            strict += 1;
        }
        if !(seq >= one) {
            worse.push(format!("{}@{}", a.size, a.noise));
        }
    }
    let share = strict as f64 / cells as f64;
    verdict(
        worse.is_empty() && share >= STRICT_SHARE,
        format!("strictly better in {strict}/{cells} cells, worse in {worse:?}"),
    )
}

fn robustness(aggs: &[Aggregate]) -> Verdict {
    let drop = |m| mean_of(aggs, 3190, 0.0, m) - mean_of(aggs, 3190, 0.4, m);
    let seq0 = mean_of(aggs, 3190, 0.0, Mapper::Sequential);
    let (ds, d1) = (drop(Mapper::Sequential), drop(Mapper::OneStep));
    verdict(
        ds < ROBUST_DROP * seq0 && d1 > ds,
        format!("drop 0 -> 0.4: sequential {ds:.4} (of {seq0:.4}), one-step {d1:.4}"),
    )
}

fn fragility(aggs: &[Aggregate]) -> Verdict {
    let decline = |s| {
        mean_of(aggs, s, 0.0, Mapper::Sequential) - mean_of(aggs, s, 0.6, Mapper::Sequential)
    };
    let (small, large) = (decline(638), decline(6381));
    verdict(
        small > large,
        format!("sequential decline 0 -> 0.6: size 638 {small:.4}, size 6381 {large:.4}"),
    )
}

fn per_part_ordering() -> Verdict {
    let cfg = SweepConfig {
        sizes: vec![3190],
        noise_levels: vec![0.2],
        repetitions: 40,
        seed: BASE_SEED,
        mapper: MapperChoice::Sequential,
        ..SweepConfig::default()
    };
    let aggs = aggregate(&run_sweep(&cfg).expect("per-part sweep").records);
    let part = |l: BodyPartLabel| aggs[0].per_part[l.index()].mean.unwrap_or(f64::NAN);
    let big = [BodyPartLabel::Torso, BodyPartLabel::UpperArm, BodyPartLabel::Forearm]
        .map(part)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let fingers = BodyPartLabel::FINGERTIPS.map(part);
    let best = fingers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    verdict(
        fingers.iter().all(|&f| f < big),
        format!("best fingertip {best:.4}, worst large part {big:.4}"),
    )
}

fn separable_sanity() -> Verdict {
    let mut cfg = SweepConfig {
        sizes: vec![3190],
        noise_levels: vec![0.0],
        repetitions: 20,
        seed: BASE_SEED,
        mapper: MapperChoice::Sequential,
        ..SweepConfig::default()
    };
    cfg.surrogate.overlap = 0.0;
    let records: Vec<CellRecord> = run_sweep(&cfg).expect("sanity sweep").records;
    let good = records
        .iter()
        .filter(|r| r.accuracy.is_some_and(|a| a >= SANITY_ACCURACY))
        .count();
    verdict(
        good as f64 >= SANITY_SHARE * records.len() as f64,
        format!("{good}/{} runs at accuracy >= {SANITY_ACCURACY}", records.len()),
    )
}

fn normal(rng: &mut Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn label(i: usize) -> BodyPartLabel {
    BodyPartLabel::ALL[i]
}

/// Density from an explicit inverse and determinant.
fn naive_logdensity(x: &[f64], m: &[f64], s: &DMatrix<f64>) -> f64 {
    let d = m.len();
    let diff = DVector::from_fn(d, |i, _| x[i] - m[i]);
    let q = (diff.transpose() * s.clone().try_inverse().unwrap() * &diff)[(0, 0)];
    -0.5 * ((std::f64::consts::TAU).powi(d as i32) * s.determinant()).ln() - 0.5 * q
}

fn random_model(j: usize, d: usize, rng: &mut Rng) -> GmmModel {
    let raw: Vec<f64> = (0..j).map(|_| rng.random::<f64>() + 0.1).collect();
    let total: f64 = raw.iter().sum();
    let spd = |rng: &mut Rng| {
        let a = DMatrix::from_fn(d, d, |_, _| normal(rng));
        &a * a.transpose() + DMatrix::identity(d, d) * 0.5
    };
    GmmModel::new(
        raw.iter().map(|r| r / total).collect(),
        (0..j).map(|_| (0..d).map(|_| normal(rng)).collect()).collect(),
        (0..j).map(|_| spd(rng)).collect(),
    )
    .unwrap()
}

/// Best accuracy over every injective word-to-cluster assignment.
fn brute_force_best(truth: &[usize], cluster: &[usize], k: usize) -> f64 {
    fn perms(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        perms(k - 1)
            .into_iter()
            .flat_map(|p| {
                (0..=p.len()).map(move |pos| {
                    let mut q = p.clone();
                    q.insert(pos, k - 1);
                    q
                })
            })
            .collect()
    }
    perms(k)
        .iter()
        .map(|p| truth.iter().zip(cluster).filter(|(t, c)| p[**c] == **t).count())
        .max()
        .unwrap_or(0) as f64
        / truth.len() as f64
}

fn oracles() -> Verdict {
    let mut rng = rng_from_seed(BASE_SEED);
    let mut bad = Vec::new();

    // co-occurrence against the triple loop over words, referents and trials
    for _ in 0..200 {
        let (rows, cols) = (rng.random_range(1..10), rng.random_range(1..10));
        let n = rng.random_range(0..60);
        let pairs: Vec<(usize, usize)> = (0..n)
            .map(|_| (rng.random_range(0..rows), rng.random_range(0..cols)))
            .collect();
        let eta: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        let got = accumulate(&pairs, rows, cols, &Decay::Schedule(eta.clone())).unwrap();
        for i in 0..rows {
            for j in 0..cols {
                let mut want = 0.0;
                for (t, &(w, r)) in pairs.iter().enumerate() {
                    if w == i && r == j {
                        want += eta[t];
                    }
                }
                if got.get(i, j) != want {
                    bad.push("accumulate");
                }
            }
        }
    }

    // posteriors against densities from explicit inverse and determinant
    for _ in 0..100 {
        let d = rng.random_range(1..6);
        let j = rng.random_range(1..5);
        let m = random_model(j, d, &mut rng);
        let x: Vec<f64> = (0..d).map(|_| normal(&mut rng) * 1.5).collect();
        let dens: Vec<f64> = (0..j)
            .map(|k| m.weights()[k] * naive_logdensity(&x, m.mean(k), m.covariance(k)).exp())
            .collect();
        let z: f64 = dens.iter().sum();
        let y = posteriors(&m, &x).unwrap();
        if (0..j).any(|k| (y[k] - dens[k] / z).abs() > ORACLE_TOL) {
            bad.push("posteriors");
        }
    }

    // one-step against exhaustive row maxima
    for _ in 0..200 {
        let (rows, cols) = (rng.random_range(1..10), rng.random_range(1..10));
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(0..4) as f64).collect();
        let a = CooccurrenceMatrix::from_rows(rows, cols, &data).unwrap();
        let r = one_step_map(&a);
        for i in 0..rows {
            let row = &data[i * cols..(i + 1) * cols];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let want = (max > 0.0).then(|| row.iter().position(|&v| v == max).unwrap());
            if r.assignment[i].map(|a| a.tactile.component) != want {
                bad.push("one_step_map");
            }
        }
    }

    // sequential against enumeration on the 12-point collision set
    let centres = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
    let heard = [vec![0, 0, 0, 1, 1], vec![1, 0, 2], vec![2, 2, 2, 0]];
    let (mut pts, mut utts, mut cluster) = (Vec::new(), Vec::new(), Vec::new());
    for (c, words) in heard.iter().enumerate() {
        for (k, &w) in words.iter().enumerate() {
            let off = k as f64 * 0.2;
            pts.push(vec![centres[c][0] + off, centres[c][1] + off * off]);
            utts.push(LabeledUtterance {
                label: label(w),
                ground_truth: label(c),
                sample_index: pts.len() - 1,
            });
            cluster.push(c);
        }
    }
    let truth: Vec<usize> = utts.iter().map(|u| u.ground_truth.index()).collect();
    let best = brute_force_best(&truth, &cluster, 3);
    let input = MappingInput::new(&pts, &utts).unwrap();
    let cfg = SequentialConfig::default();
    let score = |r: &bodymap::mapping::MappingResult| {
        r.per_point_label
            .iter()
            .zip(&utts)
            .filter(|(p, u)| **p == Some(u.ground_truth))
            .count() as f64
            / utts.len() as f64
    };
    let seq = sequential(&input, 3, &cfg, None, &mut rng_from_seed(2)).unwrap();
    let one = one_step(&input, 3, &cfg, None, &mut rng_from_seed(2)).unwrap();
    if score(&seq) != best || score(&one) != 9.0 / 12.0 {
        bad.push("sequential");
    }

    bad.dedup();
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            format!("all four oracles agree; collision set: enumeration {best}, sequential {}, one-step {}", score(&seq), score(&one))
        } else {
            format!("disagreements: {bad:?}")
        },
    )
}

fn numerical_invariants() -> Verdict {
    let mut rng = rng_from_seed(BASE_SEED ^ 7);
    let mut worst_loss: f64 = 0.0;
    let mut monotone = true;
    let mut worst_norm: f64 = 0.0;
    for fit in 0..100 {
        let d = rng.random_range(1..5);
        let j = rng.random_range(2..5);
        let n = rng.random_range(30..120);
        let data: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let o = (i % j) as f64 * 2.5;
                (0..d).map(|k| o * (k as f64 + 1.0).recip() + normal(&mut rng)).collect()
            })
            .collect();
        let cfg = GmmConfig {
            n_init: 1,
            init: if fit % 2 == 0 {
                InitStrategy::SeedPartition
            } else {
                InitStrategy::GlobalCovariance
            },
            ..GmmConfig::default()
        };
        let m = fit_em(&data, j, &cfg, &mut rng).unwrap();
        for w in m.info.trace.windows(2) {
            let loss = (w[0] - w[1]) / w[0].abs().max(1.0);
            worst_loss = worst_loss.max(loss);
            monotone &= loss <= MONOTONE_REL_TOL;
        }
        for x in &data {
            let s: f64 = posteriors(&m, x).unwrap().iter().sum();
            worst_norm = worst_norm.max((s - 1.0).abs());
        }
    }

    let layout = default_layout();
    let mut r = rng_from_seed(BASE_SEED ^ 8);
    let cfg = SurrogateConfig {
        overlap: 0.1,
        ..SurrogateConfig::default()
    };
    let w = surrogate_weights(&layout, &cfg, &mut r).unwrap();
    let data = generate_dataset(&layout, 500, 4, &mut r).unwrap();
    let proj = batch_project(&w, &data).unwrap();
    let acts: Vec<_> = proj.iter().map(|p| p.0.clone()).collect();
    let pred: Vec<_> = (0..acts.len())
        .map(|i| (i % 10 != 0).then(|| label(r.random_range(0..9))))
        .collect();
    let bp = back_project(&acts, &pred).unwrap();
    let mut worst_cons: f64 = 0.0;
    for i in 0..w.rows() {
        let total: f64 = acts.iter().map(|x| x[i]).sum();
        let got: f64 = bp.n[i].iter().sum::<f64>() + bp.unmapped[i];
        worst_cons = worst_cons.max((got - total).abs() / total.max(1.0));
    }
    verdict(
        monotone && worst_norm <= ORACLE_TOL && worst_cons <= CONSERVATION_REL_TOL,
        format!(
            "worst relative EM loss {worst_loss:.2e}, worst normalization error {worst_norm:.2e}, worst conservation error {worst_cons:.2e}"
        ),
    )
}

fn determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_bodymap");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(&cfg, "sizes = 64, 638\nnoises = 0, 0.5\nreps = 3\nmapper = both\n").unwrap();
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(bin)
            .arg("sweep")
            .arg("--config")
            .arg(&cfg)
            .args(["--seed", "11", "--out-dir"])
            .arg(&out)
            .output()
            .expect("run bodymap");
        if !status.status.success() {
            return verdict(false, format!("sweep exited with {}", status.status));
        }
        let files = ["records.csv", "aggregate.csv"].map(|f| fs::read(out.join(f)).unwrap());
        outputs.push(files);
    }
    verdict(
        outputs[0] == outputs[1],
        format!("records {} bytes, aggregate {} bytes", outputs[0][0].len(), outputs[0][1].len()),
    )
}

fn full_scale() -> Verdict {
    let cfg = SweepConfig {
        sizes: vec![63806],
        noise_levels: vec![0.0, 0.5],
        repetitions: 5,
        seed: BASE_SEED,
        ..SweepConfig::default()
    };
    let t = Instant::now();
    let aggs = aggregate(&run_sweep(&cfg).expect("full-scale sweep").records);
    let elapsed = t.elapsed();
    let cells: Vec<String> = cfg
        .noise_levels
        .iter()
        .map(|&p| {
            format!(
                "{p}: {:.4} vs {:.4}",
                mean_of(&aggs, 63806, p, Mapper::Sequential),
                mean_of(&aggs, 63806, p, Mapper::OneStep)
            )
        })
        .collect();
    let dominant = cfg
        .noise_levels
        .iter()
        .all(|&p| mean_of(&aggs, 63806, p, Mapper::Sequential) >= mean_of(&aggs, 63806, p, Mapper::OneStep));
    verdict(
        dominant && elapsed < FULL_SCALE_BUDGET,
        format!("{:.1} s; sequential vs one-step {}", elapsed.as_secs_f64(), cells.join(", ")),
    )
}

fn main() {
    let mut verdicts: Vec<(usize, &str, Verdict)> = Vec::new();
    let grid = grid_sweep();
    verdicts.push((1, "sequential dominance", dominance(&grid)));
    verdicts.push((2, "noise robustness", robustness(&grid)));
    verdicts.push((3, "small-set fragility", fragility(&grid)));
    verdicts.push((4, "per-part ordering", per_part_ordering()));
    verdicts.push((5, "separable sanity", separable_sanity()));
    verdicts.push((6, "oracle equivalences", oracles()));
    verdicts.push((7, "numerical invariants", numerical_invariants()));
    verdicts.push((8, "determinism", determinism()));
    verdicts.push((9, "full-scale run", full_scale()));

    let mut unexpected = Vec::new();
    for (k, name, v) in &verdicts {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {k} {tag}: {name}: {}", v.detail);
        if v.pass == EXPECTED_FAIL.contains(k) {
            unexpected.push(*k);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("criteria {unexpected:?} differ from the expected outcome");
        std::process::exit(1);
    }
}
