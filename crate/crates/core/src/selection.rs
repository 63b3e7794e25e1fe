//! Exhaustive search for the `K`-subset of UAVs with the highest SINR.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::beampattern::BeamWeights;
use crate::channel::{mrt_weights, ChannelRealization, FadingParams};
use crate::error::{check_len, invalid, Error, Result};
use crate::geometry::{UavState, Vec3};
use crate::interference::{subset_sinr, InterferenceField, SinrReport};

/// Sorted, one-based UAV indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Combination {
    pub indices: Vec<usize>,
}

impl Combination {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[1] <= w[0]) || indices.first() == Some(&0) {
            return Err(invalid(
                "indices",
                "must be strictly increasing and one-based",
            ));
        }
        Ok(Self { indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn zero_based(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().map(|i| i - 1)
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `n choose k`, exact.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Lexicographic iterator over the `k`-subsets of `1..=n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn starting_at(n: usize, first: Vec<usize>) -> Self {
        Self {
            n,
            current: Some(first),
        }
    }
}

impl Iterator for Combinations {
    type Item = Combination;

    fn next(&mut self) -> Option<Combination> {
        let out = self.current.take()?;
        let k = out.len();
        let mut next = out.clone();
        // Rightmost slot that can still advance.
        let mut i = k;
        while i > 0 && next[i - 1] == self.n - k + i {
            i -= 1;
        }
        if i > 0 {
            next[i - 1] += 1;
            for j in i..k {
                next[j] = next[j - 1] + 1;
            }
            self.current = Some(next);
        }
        Some(Combination { indices: out })
    }
}

pub fn enumerate_combinations(n: usize, k: usize) -> Result<Combinations> {
    if k == 0 || k > n {
        return Err(invalid(
            "k",
            format!("need 1 <= k <= n, got k = {k}, n = {n}"),
        ));
    }
    Ok(Combinations::starting_at(n, (1..=k).collect()))
}

/// The combination at lexicographic position `rank` (zero-based).
pub fn unrank(n: usize, k: usize, mut rank: u64) -> Result<Combination> {
    if k == 0 || k > n {
        return Err(invalid(
            "k",
            format!("need 1 <= k <= n, got k = {k}, n = {n}"),
        ));
    }
    if rank >= binomial(n, k) {
        return Err(invalid("rank", "beyond the last combination"));
    }
    let mut indices = Vec::with_capacity(k);
    let mut next = 1;
    for slot in 0..k {
        let remaining = k - slot - 1;
        loop {
            let block = binomial(n - next, remaining);
            if rank < block {
                break;
            }
            rank -= block;
            next += 1;
        }
        indices.push(next);
        next += 1;
    }
    Ok(Combination { indices })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub best: Combination,
    pub best_sinr_db: f64,
    /// Every combination visited, including degenerate ones.
    pub evaluated_count: u64,
    /// Combinations skipped because their CQI sub-vector was all zero.
    pub degenerate_count: u64,
}

/// Everything a candidate subset is scored against.
#[derive(Debug, Clone, Copy)]
pub struct SelectionProblem<'a> {
    pub uavs: &'a [UavState],
    pub channel: &'a ChannelRealization,
    pub receiver: Vec3,
    pub field: &'a InterferenceField,
    pub params: &'a FadingParams,
    pub tx_power: f64,
}

impl SelectionProblem<'_> {
    /// Builds the CQI sub-vector, derives MRT weights from it and scores
    /// the subset.
    pub fn evaluate(&self, combo: &Combination) -> Result<SinrReport> {
        let idx: Vec<usize> = combo.zero_based().collect();
        let states: Vec<UavState> = idx.iter().map(|&i| self.uavs[i]).collect();
        let h = self.channel.subset(&idx);
        let w = BeamWeights::from_complex(&mrt_weights(&h)?);
        subset_sinr(
            &states,
            &w,
            &h,
            self.receiver,
            self.field,
            self.params,
            self.tx_power,
        )
    }

    pub fn mrt_weights_for(&self, combo: &Combination) -> Result<BeamWeights> {
        let idx: Vec<usize> = combo.zero_based().collect();
        Ok(BeamWeights::from_complex(&mrt_weights(
            &self.channel.subset(&idx),
        )?))
    }
}

/// Winner of a chunk: highest F, earliest combination on ties.
#[derive(Debug, Clone)]
struct Partial {
    best: Option<(f64, Combination)>,
    evaluated: u64,
    degenerate: u64,
}

impl Partial {
    fn empty() -> Self {
        Self {
            best: None,
            evaluated: 0,
            degenerate: 0,
        }
    }

    fn merge(self, other: Partial) -> Partial {
        let best = match (self.best, other.best) {
            (None, b) | (b, None) => b,
            (Some(a), Some(b)) => Some(if better(&b, &a) { b } else { a }),
        };
        Partial {
            best,
            evaluated: self.evaluated + other.evaluated,
            degenerate: self.degenerate + other.degenerate,
        }
    }
}

/// Orders candidates by F descending, then combination ascending.
fn better(candidate: &(f64, Combination), incumbent: &(f64, Combination)) -> bool {
    match candidate.0.partial_cmp(&incumbent.0) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Equal) => candidate.1 < incumbent.1,
        _ => false,
    }
}

const CHUNK: u64 = 4096;

/// Scores every `k`-subset and returns the best one.
///
/// Work is split into fixed-size rank ranges; each range keeps its first
/// strict maximum and ranges are merged with the same (F desc, lex asc)
/// rule, so the answer does not depend on the thread count.
pub fn brute_force_select(problem: &SelectionProblem<'_>, k: usize) -> Result<SelectionResult> {
    let n = problem.uavs.len();
    check_len(n, problem.channel.len())?;
    if k == 0 || k > n {
        return Err(invalid(
            "k",
            format!("need 1 <= k <= n, got k = {k}, n = {n}"),
        ));
    }
    let total = binomial(n, k);
    let chunks = total.div_ceil(CHUNK);
    let merged = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Partial> {
            let start = c * CHUNK;
            let len = CHUNK.min(total - start);
            let first = unrank(n, k, start)?;
            let mut part = Partial::empty();
            for combo in Combinations::starting_at(n, first.indices).take(len as usize) {
                part.evaluated += 1;
                let f = match problem.evaluate(&combo) {
                    Ok(report) => report.sinr_db,
                    Err(Error::DegenerateChannel) | Err(Error::DegenerateWeights) => {
                        part.degenerate += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                if f.is_nan() {
                    continue;
                }
                let incumbent = part.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0);
                if f > incumbent {
                    part.best = Some((f, combo));
                }
            }
            Ok(part)
        })
        .try_reduce(Partial::empty, |a, b| Ok(a.merge(b)))?;

    let (best_sinr_db, best) = merged.best.ok_or(Error::DegenerateChannel)?;
    Ok(SelectionResult {
        best,
        best_sinr_db,
        evaluated_count: merged.evaluated,
        degenerate_count: merged.degenerate,
    })
}
