use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Contiguous slice `start..start + len` of series `series`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub series: usize,
    pub start: usize,
    pub len: usize,
}

impl Interval {
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.series == other.series && self.start <= other.start && other.end() <= self.end()
    }
}

/// How negative lengths are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthMode {
    /// Every negative has the positive's length.
    Fixed,
    /// Each negative draws its own length from its source series.
    Varying,
}

impl LengthMode {
    /// Fixed when all series share one length, varying otherwise.
    pub fn for_lengths(lengths: &[usize]) -> LengthMode {
        match lengths.first() {
            Some(first) if lengths.iter().all(|l| l == first) => LengthMode::Fixed,
            _ => LengthMode::Varying,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triplet {
    pub reference: Interval,
    pub positive: Interval,
    pub negatives: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletBatch {
    pub triplets: Vec<Triplet>,
    pub length_mode: LengthMode,
}

impl TripletBatch {
    /// Longest subseries any triplet in the batch touches.
    pub fn max_len(&self) -> usize {
        self.triplets
            .iter()
            .flat_map(|t| std::iter::once(&t.reference).chain(&t.negatives))
            .map(|i| i.len)
            .max()
            .unwrap_or(0)
    }
}

fn check(lengths: &[usize], k: usize) -> Result<()> {
    if lengths.is_empty() {
        return Err(Error::InvalidInput("cannot sample triplets from an empty dataset".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("number of negatives must be at least 1".into()));
    }
    if let Some(i) = lengths.iter().position(|&l| l == 0) {
        return Err(Error::InvalidInput(format!("series {i} has length 0")));
    }
    Ok(())
}

/// One triplet per anchor series.
///
/// The positive length is uniform on `1..=s`, the reference length uniform on
/// `s_pos..=s`, the reference is a uniform slice of the anchor series and the
/// positive a uniform slice of the reference. Each negative picks a uniform
/// source series; its length is `s_pos` (capped at the source length) in
/// fixed mode or uniform on the source's range in varying mode, and its
/// position is uniform.
pub fn sample_for_anchors(
    lengths: &[usize],
    anchors: &[usize],
    k: usize,
    rng: &mut SeededRng,
    mode: LengthMode,
) -> Result<TripletBatch> {
    check(lengths, k)?;
    let mut triplets = Vec::with_capacity(anchors.len());
    for &i in anchors {
        let s = *lengths
            .get(i)
            .ok_or_else(|| Error::InvalidInput(format!("anchor {i} outside a dataset of {}", lengths.len())))?;
        let pos_len = rng.random_range(1..=s);
        let ref_len = rng.random_range(pos_len..=s);
        let ref_start = rng.random_range(0..=s - ref_len);
        let pos_start = ref_start + rng.random_range(0..=ref_len - pos_len);
        let negatives = (0..k)
            .map(|_| {
                let series = rng.random_range(0..lengths.len());
                let avail = lengths[series];
                let len = match mode {
                    LengthMode::Fixed => pos_len.min(avail),
                    LengthMode::Varying => rng.random_range(1..=avail),
                };
                Interval {
                    series,
                    start: rng.random_range(0..=avail - len),
                    len,
                }
            })
            .collect();
        triplets.push(Triplet {
            reference: Interval {
                series: i,
                start: ref_start,
                len: ref_len,
            },
            positive: Interval {
                series: i,
                start: pos_start,
                len: pos_len,
            },
            negatives,
        });
    }
    Ok(TripletBatch {
        triplets,
        length_mode: mode,
    })
}

/// One pass over the dataset in series order: one triplet anchored on each series.
pub fn sample_triplets(lengths: &[usize], k: usize, rng: &mut SeededRng, mode: LengthMode) -> Result<TripletBatch> {
    let anchors: Vec<usize> = (0..lengths.len()).collect();
    sample_for_anchors(lengths, &anchors, k, rng, mode)
}

/// Triplet for a dataset made of one series: negatives come from that same
/// series, with lengths drawn as in the varying mode.
pub fn negatives_from_single_series(length: usize, k: usize, rng: &mut SeededRng) -> Result<TripletBatch> {
    sample_for_anchors(&[length], &[0], k, rng, LengthMode::Varying)
}
