//! Parallel text + Pharaoh alignment ingestion and tuple construction.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::token::{
    parse_sentence, OpTuple, SrcSlot, TgtSlot, TokenError, TupleSequence, Word,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("line {line}: malformed alignment pair `{pair}`")]
    MalformedPair { line: usize, pair: String },
    #[error("line {line}: alignment pair `{pair}` out of range (source len {src_len}, target len {tgt_len})")]
    OutOfRange {
        line: usize,
        pair: String,
        src_len: usize,
        tgt_len: usize,
    },
    #[error("line {line}: {source}")]
    Token {
        line: usize,
        #[source]
        source: TokenError,
    },
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    BadTsv { line: usize, found: usize },
    #[error("link ({0}, {1}) is outside the sentence pair")]
    LinkOutOfBounds(usize, usize),
}

/// Word-aligned sentence pair with 1-based links `(source, target)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedSentencePair {
    src: Vec<Word>,
    tgt: Vec<Word>,
    links: BTreeSet<(usize, usize)>,
}

impl AlignedSentencePair {
    pub fn new(
        src: Vec<Word>,
        tgt: Vec<Word>,
        links: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<AlignedSentencePair, IngestError> {
        let links: BTreeSet<_> = links.into_iter().collect();
        if let Some(&(i, j)) = links
            .iter()
            .find(|&&(i, j)| i == 0 || j == 0 || i > src.len() || j > tgt.len())
        {
            return Err(IngestError::LinkOutOfBounds(i, j));
        }
        Ok(AlignedSentencePair { src, tgt, links })
    }

    pub fn src(&self) -> &[Word] {
        &self.src
    }

    pub fn tgt(&self) -> &[Word] {
        &self.tgt
    }

    pub fn links(&self) -> &BTreeSet<(usize, usize)> {
        &self.links
    }
}

/// One line of the three parallel inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRecord {
    pub src_line: String,
    pub tgt_line: String,
    pub align_line: String,
}

impl CorpusRecord {
    /// Splits the combined `src \t tgt \t align` form.
    pub fn from_tsv(line: &str, line_no: usize) -> Result<CorpusRecord, IngestError> {
        let line = line.trim_end_matches(['\n', '\r']);
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            [s, t, a] => Ok(CorpusRecord {
                src_line: s.trim_end().to_string(),
                tgt_line: t.trim_end().to_string(),
                align_line: a.trim_end().to_string(),
            }),
            _ => Err(IngestError::BadTsv {
                line: line_no,
                found: fields.len(),
            }),
        }
    }

    /// Parses both sentences and the alignment line. `line_no` is 1-based and
    /// only used for error reports.
    pub fn to_pair(&self, line_no: usize) -> Result<AlignedSentencePair, IngestError> {
        let tok = |source| IngestError::Token {
            line: line_no,
            source,
        };
        let src = parse_sentence(self.src_line.trim_end()).map_err(tok)?;
        let tgt = parse_sentence(self.tgt_line.trim_end()).map_err(tok)?;
        let links = parse_pharaoh_line(&self.align_line, src.len(), tgt.len(), line_no)?;
        Ok(AlignedSentencePair { src, tgt, links })
    }
}

/// Parses a 0-based Pharaoh line (`0-0 1-2 ...`) into 1-based links.
pub fn parse_pharaoh(
    align_line: &str,
    src_len: usize,
    tgt_len: usize,
) -> Result<BTreeSet<(usize, usize)>, IngestError> {
    parse_pharaoh_line(align_line, src_len, tgt_len, 0)
}

fn parse_pharaoh_line(
    align_line: &str,
    src_len: usize,
    tgt_len: usize,
    line: usize,
) -> Result<BTreeSet<(usize, usize)>, IngestError> {
    let mut links = BTreeSet::new();
    for pair in align_line.split_whitespace() {
        let malformed = || IngestError::MalformedPair {
            line,
            pair: pair.to_string(),
        };
        let (a, b) = pair.split_once('-').ok_or_else(malformed)?;
        let parse = |s: &str| -> Option<usize> {
            if s.is_empty() || !s.bytes().all(|c| c.is_ascii_digit()) {
                return None;
            }
            s.parse().ok()
        };
        let (i, j) = match (parse(a), parse(b)) {
            (Some(i), Some(j)) => (i, j),
            _ => return Err(malformed()),
        };
        if i >= src_len || j >= tgt_len {
            return Err(IngestError::OutOfRange {
                line,
                pair: pair.to_string(),
                src_len,
                tgt_len,
            });
        }
        links.insert((i + 1, j + 1));
    }
    Ok(links)
}

/// Builds one tuple per source word plus `[NO_SRC]` tuples for unaligned
/// target words.
///
/// A target linked to several source words belongs to the leftmost of them.
/// An unaligned target at position `p` is placed right after the tuple that
/// holds `p - 1` (at the stream start when `p = 1`); several unaligned targets
/// sharing an anchor follow it in ascending position order.
pub fn build_tuples(pair: &AlignedSentencePair) -> TupleSequence {
    let n_src = pair.src.len();
    let n_tgt = pair.tgt.len();

    // owner[j] = leftmost source index linked to target j (1-based)
    let mut owner: Vec<Option<usize>> = vec![None; n_tgt + 1];
    for &(i, j) in &pair.links {
        if owner[j].is_none_or(|o| i < o) {
            owner[j] = Some(i);
        }
    }

    let mut src_targets: Vec<Vec<usize>> = vec![Vec::new(); n_src + 1];
    for (j, o) in owner.iter().enumerate().skip(1) {
        if let Some(i) = *o {
            src_targets[i].push(j);
        }
    }

    // Nodes: 0 = stream start, 1..=n_src source tuples, then one per unaligned target.
    // `holder[j]` is the node that emits target j.
    let mut holder = vec![0usize; n_tgt + 1];
    for (i, targets) in src_targets.iter().enumerate().skip(1) {
        for &j in targets {
            holder[j] = i;
        }
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n_src + 1];
    let mut no_src_target: Vec<usize> = Vec::new();
    for j in 1..=n_tgt {
        if owner[j].is_none() {
            let node = n_src + 1 + no_src_target.len();
            no_src_target.push(j);
            children.push(Vec::new());
            holder[j] = node;
            let anchor = if j == 1 { 0 } else { holder[j - 1] };
            children[anchor].push(node);
        }
    }

    let mut tuples = Vec::with_capacity(n_src + no_src_target.len());
    let emit = |node: usize, tuples: &mut Vec<OpTuple>| {
        if node == 0 {
            return;
        }
        if node <= n_src {
            let targets = if src_targets[node].is_empty() {
                vec![TgtSlot::NoTarget]
            } else {
                src_targets[node]
                    .iter()
                    .map(|&j| TgtSlot::Word {
                        word: pair.tgt[j - 1].clone(),
                        pos: j,
                    })
                    .collect()
            };
            tuples.push(OpTuple {
                src: SrcSlot::Word(pair.src[node - 1].clone()),
                targets,
            });
        } else {
            let j = no_src_target[node - n_src - 1];
            tuples.push(OpTuple {
                src: SrcSlot::NoSource,
                targets: vec![TgtSlot::Word {
                    word: pair.tgt[j - 1].clone(),
                    pos: j,
                }],
            });
        }
    };

    // depth-first: a node, then its chained [NO_SRC] children, then the next source word
    let mut stack: Vec<usize> = Vec::new();
    for root in 0..=n_src {
        stack.push(root);
        while let Some(node) = stack.pop() {
            emit(node, &mut tuples);
            stack.extend(children[node].iter().rev());
        }
    }

    TupleSequence::new(tuples).expect("build_tuples produces a valid tuple sequence")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub max_ratio: f64,
    pub max_tgt_len: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            max_ratio: 5.0,
            max_tgt_len: 150,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DropReason {
    /// One side has no words.
    Degenerate,
    LengthRatio { src_len: usize, tgt_len: usize },
    TargetTooLong { tokens: usize },
}

impl std::fmt::Display for DropReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DropReason::Degenerate => f.write_str("empty side"),
            DropReason::LengthRatio { src_len, tgt_len } => {
                write!(f, "length ratio {src_len}:{tgt_len}")
            }
            DropReason::TargetTooLong { tokens } => write!(f, "target has {tokens} tokens"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterDecision {
    Keep,
    Drop(DropReason),
}

impl FilterDecision {
    pub fn is_keep(&self) -> bool {
        matches!(self, FilterDecision::Keep)
    }
}

/// Drops pairs whose word-length ratio exceeds `max_ratio` or whose target
/// has more than `max_tgt_len` pieces.
pub fn filter_record(pair: &AlignedSentencePair, cfg: &FilterConfig) -> FilterDecision {
    let (ls, lt) = (pair.src.len(), pair.tgt.len());
    if ls == 0 || lt == 0 {
        return FilterDecision::Drop(DropReason::Degenerate);
    }
    let (long, short) = (ls.max(lt) as f64, ls.min(lt) as f64);
    if long > cfg.max_ratio * short {
        return FilterDecision::Drop(DropReason::LengthRatio {
            src_len: ls,
            tgt_len: lt,
        });
    }
    let tokens: usize = pair.tgt.iter().map(|w| w.pieces().len()).sum();
    if tokens > cfg.max_tgt_len {
        return FilterDecision::Drop(DropReason::TargetTooLong { tokens });
    }
    FilterDecision::Keep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<Word> {
        parse_sentence(s).unwrap()
    }

    fn pair(src: &str, tgt: &str, links: &[(usize, usize)]) -> AlignedSentencePair {
        AlignedSentencePair::new(words(src), words(tgt), links.iter().copied()).unwrap()
    }

    fn tw(s: &str, pos: usize) -> TgtSlot {
        TgtSlot::Word {
            word: Word::atomic(s).unwrap(),
            pos,
        }
    }

    fn sw(s: &str) -> SrcSlot {
        SrcSlot::Word(Word::atomic(s).unwrap())
    }

    #[test]
    fn pharaoh_examples() {
        let l = parse_pharaoh("0-0 1-1", 2, 2).unwrap();
        assert_eq!(l.into_iter().collect::<Vec<_>>(), vec![(1, 1), (2, 2)]);
        assert!(parse_pharaoh("", 3, 4).unwrap().is_empty());
        let l = parse_pharaoh("0-1 1-0", 2, 2).unwrap();
        assert_eq!(l.into_iter().collect::<Vec<_>>(), vec![(1, 2), (2, 1)]);
        let l = parse_pharaoh("0-1 0-1  0-1", 2, 2).unwrap();
        assert_eq!(l.len(), 1);
    }

    #[test]
    fn pharaoh_errors() {
        assert!(matches!(
            parse_pharaoh("0-2", 2, 2),
            Err(IngestError::OutOfRange { .. })
        ));
        for bad in ["0:1", "a-1", "0-", "-1", "0-1-2", "+0-1"] {
            assert!(
                matches!(parse_pharaoh(bad, 3, 3), Err(IngestError::MalformedPair { .. })),
                "{bad}"
            );
        }
        let rec = CorpusRecord {
            src_line: "a b".into(),
            tgt_line: "x".into(),
            align_line: "5-0".into(),
        };
        match rec.to_pair(7) {
            Err(IngestError::OutOfRange { line, pair, .. }) => {
                assert_eq!(line, 7);
                assert_eq!(pair, "5-0");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tuples_monotone() {
        let t = build_tuples(&pair("a b", "x y", &[(1, 1), (2, 2)]));
        assert_eq!(
            t.tuples(),
            &[
                OpTuple { src: sw("a"), targets: vec![tw("x", 1)] },
                OpTuple { src: sw("b"), targets: vec![tw("y", 2)] },
            ]
        );
    }

    #[test]
    fn tuples_unaligned_both_sides() {
        let t = build_tuples(&pair("a b", "x", &[]));
        assert_eq!(
            t.tuples(),
            &[
                OpTuple { src: SrcSlot::NoSource, targets: vec![tw("x", 1)] },
                OpTuple { src: sw("a"), targets: vec![TgtSlot::NoTarget] },
                OpTuple { src: sw("b"), targets: vec![TgtSlot::NoTarget] },
            ]
        );
    }

    #[test]
    fn tuples_fertility_two() {
        let t = build_tuples(&pair("a", "x y", &[(1, 1), (1, 2)]));
        assert_eq!(
            t.tuples(),
            &[OpTuple { src: sw("a"), targets: vec![tw("x", 1), tw("y", 2)] }]
        );
    }

    #[test]
    fn many_to_many_goes_leftmost() {
        // y linked to both a and b
        let t = build_tuples(&pair("a b", "x y", &[(1, 2), (2, 1), (2, 2)]));
        assert_eq!(
            t.tuples(),
            &[
                OpTuple { src: sw("a"), targets: vec![tw("y", 2)] },
                OpTuple { src: sw("b"), targets: vec![tw("x", 1)] },
            ]
        );
    }

    #[test]
    fn unaligned_targets_chain() {
        // x1 <- a, x2 and x3 unaligned, x4 <- b, x5 unaligned anchored to a? no: to b
        let t = build_tuples(&pair("a b", "x1 x2 x3 x4 x5", &[(1, 1), (2, 4)]));
        let order: Vec<_> = t
            .tuples()
            .iter()
            .map(|t| t.targets[0].position().unwrap())
            .collect();
        assert_eq!(order, vec![1, 2, 3, 4, 5]);
        assert_eq!(t.tuples()[1].src, SrcSlot::NoSource);

        // two unaligned targets anchored to the same fertile tuple
        let t = build_tuples(&pair("a b", "x1 x2 x3 x4", &[(1, 1), (1, 3), (2, 2)]));
        let srcs: Vec<_> = t.tuples().iter().map(|t| t.src.clone()).collect();
        assert_eq!(srcs, vec![sw("a"), SrcSlot::NoSource, sw("b")]);
        assert_eq!(t.tuples()[1].targets, vec![tw("x4", 4)]);
    }

    #[test]
    fn filter_boundaries() {
        let cfg = FilterConfig::default();
        let n = |k: usize| vec!["w"; k].join(" ");
        assert!(filter_record(&pair(&n(10), &n(10), &[]), &cfg).is_keep());
        assert!(matches!(
            filter_record(&pair(&n(2), &n(11), &[]), &cfg),
            FilterDecision::Drop(DropReason::LengthRatio { .. })
        ));
        assert!(filter_record(&pair(&n(2), &n(10), &[]), &cfg).is_keep());
        assert!(filter_record(&pair(&n(150), &n(150), &[]), &cfg).is_keep());
        assert!(matches!(
            filter_record(&pair(&n(151), &n(151), &[]), &cfg),
            FilterDecision::Drop(DropReason::TargetTooLong { tokens: 151 })
        ));
        assert!(matches!(
            filter_record(&pair("", "x", &[]), &cfg),
            FilterDecision::Drop(DropReason::Degenerate)
        ));
    }

    #[test]
    fn tsv_record() {
        let r = CorpusRecord::from_tsv("a b\tx y\t0-0 1-1", 1).unwrap();
        assert_eq!(r.align_line, "0-0 1-1");
        let r = CorpusRecord::from_tsv("a b\tx y\t", 1).unwrap();
        assert_eq!(r.align_line, "");
        assert!(CorpusRecord::from_tsv("a b", 3).is_err());
    }
}
