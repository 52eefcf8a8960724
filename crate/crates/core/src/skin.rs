//! Virtual skin and the stream of touch events.
//!
//! The skin is a flat index space of taxels split into four parts. Each part
//! owns a list of stimulation regions: one event activates exactly one region.
//! Sampling is two-stage: a part is chosen uniformly, then a region uniformly
//! within it. Because the hand is a single part with ten regions, each
//! fingertip receives about 1/40 of all events.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Range;
use std::sync::Arc;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::label::BodyPartLabel;
use crate::seed::Rng;

pub const DEFAULT_TAXELS: usize = 1154;

/// Default samples recorded per stimulation (3 s at 10 Hz).
pub const SAMPLES_PER_STIMULATION: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SkinPart {
    Torso,
    UpperArm,
    Forearm,
    Hand,
}

impl SkinPart {
    pub const ALL: [SkinPart; 4] = [
        SkinPart::Torso,
        SkinPart::UpperArm,
        SkinPart::Forearm,
        SkinPart::Hand,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SkinPart::Torso => "torso",
            SkinPart::UpperArm => "upper arm",
            SkinPart::Forearm => "forearm",
            SkinPart::Hand => "hand",
        }
    }
}

impl fmt::Display for SkinPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of taxels that is activated together by one touch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub taxels: Arc<[usize]>,
    pub label: BodyPartLabel,
}

impl Region {
    pub fn new(taxels: impl Into<Vec<usize>>, label: BodyPartLabel) -> Self {
        let mut t = taxels.into();
        t.sort_unstable();
        t.dedup();
        Region {
            taxels: t.into(),
            label,
        }
    }

    pub fn len(&self) -> usize {
        self.taxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taxels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartSpec {
    pub part: SkinPart,
    pub taxels: Range<usize>,
    pub regions: Vec<Region>,
}

/// Partition of the taxel index space into parts and stimulation regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkinLayout {
    parts: Vec<PartSpec>,
    n_taxels: usize,
}

impl SkinLayout {
    /// Validates and builds a layout.
    ///
    /// Part ranges must tile `0..n` in order without gaps, and every region
    /// must be non-empty and lie inside its part.
    pub fn new(parts: Vec<PartSpec>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::arg("layout has no parts"));
        }
        let mut next = 0;
        for p in &parts {
            if p.taxels.start != next || p.taxels.end <= p.taxels.start {
                return Err(Error::arg(format!(
                    "part {} range {:?} does not continue the tiling at {next}",
                    p.part, p.taxels
                )));
            }
            next = p.taxels.end;
            if p.regions.is_empty() {
                return Err(Error::arg(format!("part {} has no regions", p.part)));
            }
            for r in &p.regions {
                if r.is_empty() {
                    return Err(Error::arg(format!("empty region in part {}", p.part)));
                }
                if r.taxels.iter().any(|t| !p.taxels.contains(t)) {
                    return Err(Error::arg(format!(
                        "region {} leaves the range of part {}",
                        r.label, p.part
                    )));
                }
            }
        }
        let mut seen: Vec<SkinPart> = parts.iter().map(|p| p.part).collect();
        seen.sort();
        seen.dedup();
        if seen.len() != parts.len() {
            return Err(Error::arg("duplicate skin part"));
        }
        Ok(SkinLayout {
            parts,
            n_taxels: next,
        })
    }

    pub fn parts(&self) -> &[PartSpec] {
        &self.parts
    }

    pub fn n_taxels(&self) -> usize {
        self.n_taxels
    }

    pub fn part(&self, part: SkinPart) -> Option<&PartSpec> {
        self.parts.iter().find(|p| p.part == part)
    }

    /// Part containing taxel `t`.
    pub fn part_of(&self, t: usize) -> Option<SkinPart> {
        self.parts
            .iter()
            .find(|p| p.taxels.contains(&t))
            .map(|p| p.part)
    }

    pub fn regions(&self) -> impl Iterator<Item = (SkinPart, &Region)> {
        self.parts
            .iter()
            .flat_map(|p| p.regions.iter().map(move |r| (p.part, r)))
    }

    /// Stable 64-bit FNV-1a fingerprint of the layout structure.
    pub fn fingerprint(&self) -> u64 {
        const PRIME: u64 = 0x0000_0100_0000_01B3;
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        let mut feed = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        };
        for p in &self.parts {
            feed(p.part as u64);
            feed(p.taxels.start as u64);
            feed(p.taxels.end as u64);
            for r in &p.regions {
                feed(r.label.index() as u64);
                feed(r.taxels.len() as u64);
                for &t in r.taxels.iter() {
                    feed(t as u64);
                }
            }
        }
        h
    }
}

fn blocks(start: usize, count: usize, size: usize, label: BodyPartLabel) -> Vec<Region> {
    (0..count)
        .map(|k| {
            let lo = start + k * size;
            Region::new((lo..lo + size).collect::<Vec<_>>(), label)
        })
        .collect()
}

/// The canonical 1154-taxel layout.
///
/// Torso, upper arm and forearm are cut into consecutive ten-taxel modules.
/// The hand holds five palm patches (9, 9, 9, 9 and 8 taxels) followed by five
/// twelve-taxel fingertips ordered little, ring, middle, index, thumb.
pub fn default_layout() -> SkinLayout {
    let torso = 0..440;
    let upper = 440..820;
    let fore = 820..1050;
    let hand = 1050..1154;

    let mut hand_regions = Vec::with_capacity(10);
    let mut at = hand.start;
    for size in [9, 9, 9, 9, 8] {
        hand_regions.push(Region::new((at..at + size).collect::<Vec<_>>(), BodyPartLabel::Palm));
        at += size;
    }
    for tip in BodyPartLabel::FINGERTIPS {
        hand_regions.push(Region::new((at..at + 12).collect::<Vec<_>>(), tip));
        at += 12;
    }
    debug_assert_eq!(at, hand.end);

    let parts = vec![
        PartSpec {
            part: SkinPart::Torso,
            regions: blocks(torso.start, 44, 10, BodyPartLabel::Torso),
            taxels: torso,
        },
        PartSpec {
            part: SkinPart::UpperArm,
            regions: blocks(upper.start, 38, 10, BodyPartLabel::UpperArm),
            taxels: upper,
        },
        PartSpec {
            part: SkinPart::Forearm,
            regions: blocks(fore.start, 23, 10, BodyPartLabel::Forearm),
            taxels: fore,
        },
        PartSpec {
            part: SkinPart::Hand,
            taxels: hand,
            regions: hand_regions,
        },
    ];
    SkinLayout::new(parts).expect("default layout is valid")
}

/// One touch event: a region and the label spoken with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stimulation {
    pub part: SkinPart,
    pub taxels: Arc<[usize]>,
    pub label: BodyPartLabel,
}

pub fn generate_stimulation(layout: &SkinLayout, rng: &mut Rng) -> Stimulation {
    let parts = layout.parts();
    let spec = &parts[rng.random_range(0..parts.len())];
    let region = &spec.regions[rng.random_range(0..spec.regions.len())];
    Stimulation {
        part: spec.part,
        taxels: Arc::clone(&region.taxels),
        label: region.label,
    }
}

/// A single timestep: the binary skin state and its ground-truth label.
///
/// The activation is stored sparsely as the sorted list of active taxels;
/// repeats of one stimulation share the same allocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxelSample {
    pub active: Arc<[usize]>,
    pub label: BodyPartLabel,
    pub stimulation_id: usize,
}

impl TaxelSample {
    /// Dense 0/1 activation vector of length `n_taxels`.
    pub fn dense(&self, n_taxels: usize) -> Vec<u8> {
        let mut a = vec![0u8; n_taxels];
        for &t in self.active.iter() {
            if t < n_taxels {
                a[t] = 1;
            }
        }
        a
    }
}

pub fn generate_dataset(
    layout: &SkinLayout,
    n_stimulations: usize,
    samples_per_stimulation: usize,
    rng: &mut Rng,
) -> Result<Vec<TaxelSample>> {
    if n_stimulations == 0 || samples_per_stimulation == 0 {
        return Err(Error::arg(format!(
            "need at least one stimulation and one sample each (got {n_stimulations} x {samples_per_stimulation})"
        )));
    }
    let mut out = Vec::with_capacity(n_stimulations * samples_per_stimulation);
    for id in 0..n_stimulations {
        let s = generate_stimulation(layout, rng);
        out.extend((0..samples_per_stimulation).map(|_| TaxelSample {
            active: Arc::clone(&s.taxels),
            label: s.label,
            stimulation_id: id,
        }));
    }
    Ok(out)
}

/// Sorted uniform sample of `n` distinct indices from `0..len`.
pub fn subsample_indices(len: usize, n: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if n == 0 || n > len {
        return Err(Error::arg(format!("cannot draw {n} of {len} samples")));
    }
    let mut idx = rand::seq::index::sample(rng, len, n).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Uniform random subset of size `n`, original order preserved.
pub fn subsample(data: &[TaxelSample], n: usize, rng: &mut Rng) -> Result<Vec<TaxelSample>> {
    let idx = subsample_indices(data.len(), n, rng)?;
    Ok(idx.into_iter().map(|i| data[i].clone()).collect())
}

/// Header line values of a dataset file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetHeader {
    pub n_taxels: usize,
    pub layout_fingerprint: u64,
    pub seed: Option<u64>,
}

/// Writes one record per line: `stimulation_id<TAB>label<TAB>t1,t2,...`,
/// after a `#`-prefixed header.
pub fn write_dataset<W: Write>(
    mut w: W,
    header: &DatasetHeader,
    data: &[TaxelSample],
) -> Result<()> {
    writeln!(w, "# bodymap dataset v1")?;
    writeln!(w, "# taxels {}", header.n_taxels)?;
    writeln!(w, "# layout {:016x}", header.layout_fingerprint)?;
    match header.seed {
        Some(s) => writeln!(w, "# seed {s}")?,
        None => writeln!(w, "# seed none")?,
    }
    for s in data {
        let taxels: Vec<String> = s.active.iter().map(|t| t.to_string()).collect();
        writeln!(w, "{}\t{}\t{}", s.stimulation_id, s.label.key(), taxels.join(","))?;
    }
    Ok(())
}

pub fn read_dataset<R: BufRead>(r: R) -> Result<(DatasetHeader, Vec<TaxelSample>)> {
    let mut n_taxels = None;
    let mut fingerprint = None;
    let mut seed = None;
    let mut data: Vec<TaxelSample> = Vec::new();

    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            match (it.next(), it.next()) {
                (Some("taxels"), Some(v)) => {
                    n_taxels = Some(v.parse().map_err(|_| Error::parse(lineno, "bad taxel count"))?)
                }
                (Some("layout"), Some(v)) => {
                    fingerprint = Some(
                        u64::from_str_radix(v, 16)
                            .map_err(|_| Error::parse(lineno, "bad layout fingerprint"))?,
                    )
                }
                (Some("seed"), Some("none")) => seed = None,
                (Some("seed"), Some(v)) => {
                    seed = Some(v.parse().map_err(|_| Error::parse(lineno, "bad seed"))?)
                }
                _ => {}
            }
            continue;
        }
        let n = n_taxels.ok_or_else(|| Error::parse(lineno, "record before `# taxels` header"))?;
        let mut fields = line.split('\t');
        let (Some(id), Some(label), Some(taxels), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::parse(lineno, "expected three tab-separated fields"));
        };
        let id: usize = id
            .parse()
            .map_err(|_| Error::parse(lineno, "bad stimulation id"))?;
        let label: BodyPartLabel = label
            .parse()
            .map_err(|e: Error| Error::parse(lineno, e.to_string()))?;
        let mut active = Vec::new();
        for t in taxels.split(',').filter(|t| !t.is_empty()) {
            let t: usize = t.parse().map_err(|_| Error::parse(lineno, "bad taxel index"))?;
            if t >= n {
                return Err(Error::parse(lineno, format!("taxel {t} out of range 0..{n}")));
            }
            active.push(t);
        }
        active.sort_unstable();
        active.dedup();

        let shared = match data.last() {
            Some(prev) if prev.stimulation_id == id => {
                if *prev.active != *active || prev.label != label {
                    return Err(Error::parse(
                        lineno,
                        format!("stimulation {id} repeats with a different activation"),
                    ));
                }
                Arc::clone(&prev.active)
            }
            _ => active.into(),
        };
        data.push(TaxelSample {
            active: shared,
            label,
            stimulation_id: id,
        });
    }

    let header = DatasetHeader {
        n_taxels: n_taxels.ok_or_else(|| Error::parse(0, "missing `# taxels` header"))?,
        layout_fingerprint: fingerprint.ok_or_else(|| Error::parse(0, "missing `# layout` header"))?,
        seed,
    };
    Ok((header, data))
}
