//! Word error rate, corpus BLEU, Average Lagging and stream statistics.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::error::DecodeError;
use crate::relative::run_relative;
use crate::token::{Op, Special, Token};
use crate::{absolute, validate, Variant};

/// A hypothesis/reference word pair. Either side may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EvalPair {
    pub hypothesis: Vec<String>,
    pub reference: Vec<String>,
}

impl EvalPair {
    /// Whitespace-splits both sides.
    pub fn from_text(hypothesis: &str, reference: &str) -> EvalPair {
        let split = |s: &str| s.split_whitespace().map(str::to_string).collect();
        EvalPair {
            hypothesis: split(hypothesis),
            reference: split(reference),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EditCounts {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ref_len: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }
}

/// Minimum unit-cost edit script turning `reference` into `hypothesis`.
/// Ties prefer substitutions, then deletions.
pub fn edit_counts<T: PartialEq>(hypothesis: &[T], reference: &[T]) -> EditCounts {
    // each cell: (cost, subs, ins, dels)
    type C = (usize, usize, usize, usize);
    let n = hypothesis.len();
    let mut prev: Vec<C> = (0..=n).map(|j| (j, 0, j, 0)).collect();
    let mut cur: Vec<C> = vec![(0, 0, 0, 0); n + 1];
    for (i, r) in reference.iter().enumerate() {
        cur[0] = (i + 1, 0, 0, i + 1);
        for j in 1..=n {
            let d = prev[j - 1];
            let diag = if hypothesis[j - 1] == *r {
                d
            } else {
                (d.0 + 1, d.1 + 1, d.2, d.3)
            };
            let u = prev[j];
            let del = (u.0 + 1, u.1, u.2, u.3 + 1);
            let l = cur[j - 1];
            let ins = (l.0 + 1, l.1, l.2 + 1, l.3);
            let mut best = diag;
            if del.0 < best.0 {
                best = del;
            }
            if ins.0 < best.0 {
                best = ins;
            }
            cur[j] = best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let (_, s, i, d) = prev[n];
    EditCounts {
        substitutions: s,
        insertions: i,
        deletions: d,
        ref_len: reference.len(),
    }
}

/// Errors over reference length; an empty reference yields the hypothesis length.
pub fn error_rate(errors: usize, ref_len: usize, hyp_len: usize) -> f64 {
    if ref_len == 0 {
        if hyp_len > 0 {
            log::debug!("empty reference with {hyp_len} hypothesis words; WER := hypothesis length");
        }
        return hyp_len as f64;
    }
    errors as f64 / ref_len as f64
}

/// `(S + I + D) / N`. An empty reference yields the hypothesis length.
pub fn wer(pair: &EvalPair) -> f64 {
    let c = edit_counts(&pair.hypothesis, &pair.reference);
    error_rate(c.errors(), c.ref_len, pair.hypothesis.len())
}

/// Corpus WER: total errors over total reference words.
pub fn corpus_wer(pairs: &[EvalPair]) -> f64 {
    let (errors, ref_len, hyp_len) = pairs.iter().fold((0, 0, 0), |acc, p| {
        let c = edit_counts(&p.hypothesis, &p.reference);
        (acc.0 + c.errors(), acc.1 + c.ref_len, acc.2 + p.hypothesis.len())
    });
    error_rate(errors, ref_len, hyp_len)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    #[default]
    None,
    /// Add one to matches and totals for n-gram orders 2..=4.
    AddOne,
}

pub const BLEU_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuScore {
    /// 0..=100
    pub score: f64,
    pub precisions: [f64; BLEU_ORDER],
    pub brevity_penalty: f64,
    pub matches: [usize; BLEU_ORDER],
    pub totals: [usize; BLEU_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

/// Case-insensitive corpus BLEU-4 without smoothing.
pub fn bleu(corpus: &[EvalPair]) -> f64 {
    bleu_with(corpus, Smoothing::None).score
}

pub fn bleu_with(corpus: &[EvalPair], smoothing: Smoothing) -> BleuScore {
    let mut stats = BleuStats::default();
    for pair in corpus {
        stats.add(pair);
    }
    stats.score(smoothing)
}

/// Sufficient statistics for corpus BLEU; sentences can be added one at a
/// time and partial sums merged in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BleuStats {
    pub matches: [usize; BLEU_ORDER],
    pub totals: [usize; BLEU_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn add(&mut self, pair: &EvalPair) {
        let hyp: Vec<String> = pair.hypothesis.iter().map(|w| w.to_lowercase()).collect();
        let rf: Vec<String> = pair.reference.iter().map(|w| w.to_lowercase()).collect();
        self.hyp_len += hyp.len();
        self.ref_len += rf.len();
        for n in 1..=BLEU_ORDER {
            let ref_counts = ngram_counts(&rf, n);
            for (g, c) in ngram_counts(&hyp, n) {
                self.matches[n - 1] += c.min(ref_counts.get(g).copied().unwrap_or(0));
            }
            self.totals[n - 1] += hyp.len().saturating_sub(n - 1);
        }
    }

    pub fn merge(&mut self, other: &BleuStats) {
        for n in 0..BLEU_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    pub fn score(&self, smoothing: Smoothing) -> BleuScore {
        let (matches, totals, hyp_len, ref_len) =
            (self.matches, self.totals, self.hyp_len, self.ref_len);
        let mut precisions = [0.0; BLEU_ORDER];
        for n in 0..BLEU_ORDER {
            let (m, t) = match smoothing {
                Smoothing::AddOne if n > 0 => (matches[n] + 1, totals[n] + 1),
                _ => (matches[n], totals[n]),
            };
            precisions[n] = if t == 0 { 0.0 } else { m as f64 / t as f64 };
        }
        let brevity_penalty = if hyp_len == 0 {
            0.0
        } else if hyp_len < ref_len {
            (1.0 - ref_len as f64 / hyp_len as f64).exp()
        } else {
            1.0
        };
        let score = if precisions.contains(&0.0) {
            0.0
        } else {
            let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / BLEU_ORDER as f64;
            100.0 * brevity_penalty * log_mean.exp()
        };
        BleuScore {
            score,
            precisions,
            brevity_penalty,
            matches,
            totals,
            hyp_len,
            ref_len,
        }
    }
}

fn ngram_counts(words: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if words.len() >= n {
        for g in words.windows(n) {
            *m.entry(g).or_insert(0) += 1;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("latency trace has no delays")]
    EmptyTrace,
    #[error("latency trace has zero source or target length")]
    ZeroLength,
    #[error("delay {index} ({value}) is outside [0, {src_len}] or decreases")]
    BadDelay {
        index: usize,
        value: f64,
        src_len: usize,
    },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Per-target-word emission delays measured in consumed source units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyTrace {
    pub delays: Vec<usize>,
    pub src_len: usize,
    pub tgt_len: usize,
}

/// AL = (1/τ) Σ_{i≤τ} (d_i − (i−1)·|src|/|tgt|), τ the first index whose
/// delay reaches the full source (the last index if none does).
pub fn average_lagging(trace: &LatencyTrace) -> Result<f64, MetricError> {
    if trace.delays.is_empty() {
        return Err(MetricError::EmptyTrace);
    }
    if trace.src_len == 0 || trace.tgt_len == 0 {
        return Err(MetricError::ZeroLength);
    }
    let mut last = 0;
    for (index, &d) in trace.delays.iter().enumerate() {
        if d > trace.src_len || d < last {
            return Err(MetricError::BadDelay {
                index,
                value: d as f64,
                src_len: trace.src_len,
            });
        }
        last = d;
    }
    let tau = trace
        .delays
        .iter()
        .position(|&d| d == trace.src_len)
        .map_or(trace.delays.len(), |i| i + 1);
    let ratio = trace.src_len as f64 / trace.tgt_len as f64;
    let sum: f64 = trace.delays[..tau]
        .iter()
        .enumerate()
        .map(|(i, &d)| d as f64 - i as f64 * ratio)
        .sum();
    Ok(sum / tau as f64)
}

/// How to combine the lagging of separate recognition and translation stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LatencyAggregation {
    #[default]
    Sum,
    Max,
}

pub fn combine_lagging(asr: f64, st: f64, how: LatencyAggregation) -> f64 {
    match how {
        LatencyAggregation::Sum => asr + st,
        LatencyAggregation::Max => asr.max(st),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct OpSeqStats {
    pub set_marker: usize,
    pub jump_backward: usize,
    pub jump_forward: usize,
    pub no_ops: usize,
    /// Σ |final position − emission rank| over target words.
    pub reorder_distance: usize,
}

/// Operation counts and total displacement between emission and final order.
pub fn opseq_stats(
    tokens: &[Token],
    variant: Variant,
    max_tgt_len: usize,
) -> Result<OpSeqStats, MetricError> {
    validate(tokens, variant, max_tgt_len).map_err(DecodeError::from)?;
    let mut stats = OpSeqStats::default();
    for t in tokens {
        match t.special().and_then(Special::as_op) {
            Some(Op::SetMarker) => stats.set_marker += 1,
            Some(Op::JumpBackward) => stats.jump_backward += 1,
            Some(Op::JumpForward) => stats.jump_forward += 1,
            Some(Op::NoOps) => stats.no_ops += 1,
            None => {}
        }
    }
    // emission rank of each word, listed in final order
    let ranks: Vec<usize> = match variant {
        Variant::Relative => run_relative(tokens, |_, _| {})?.0.emission_order(),
        Variant::Absolute => {
            let positions = absolute::emission_positions(tokens, max_tgt_len).map_err(DecodeError::from)?;
            let mut latest: HashMap<usize, usize> = HashMap::new();
            for (rank, p) in positions.into_iter().enumerate() {
                latest.insert(p, rank);
            }
            let mut by_pos: Vec<(usize, usize)> = latest.into_iter().collect();
            by_pos.sort_unstable();
            // renumber surviving emissions densely
            let mut order: Vec<usize> = by_pos.iter().map(|&(_, r)| r).collect();
            let mut sorted = order.clone();
            sorted.sort_unstable();
            for r in order.iter_mut() {
                *r = sorted.binary_search(r).expect("present");
            }
            order
        }
    };
    stats.reorder_distance = ranks
        .iter()
        .enumerate()
        .map(|(k, &r)| k.abs_diff(r))
        .sum();
    Ok(stats)
}
