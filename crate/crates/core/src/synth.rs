//! Seeded random sentence pairs and structural stream corruptions, used by
//! the round-trip command and the test suites.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::align::AlignedSentencePair;
use crate::token::{Op, Special, Token, Word};
use crate::Variant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub max_src_len: usize,
    pub max_fertility: usize,
    /// Chance that a source word is unaligned, and (independently, per source
    /// word) that an extra unaligned target word is added.
    pub unaligned_prob: f64,
    /// Chance per aligned target of an extra link to another source word.
    pub many_to_many_prob: f64,
    /// Chance that a word is split into several pieces.
    pub multi_piece_prob: f64,
    /// Target order follows source order.
    pub monotone: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_src_len: 20,
            max_fertility: 3,
            unaligned_prob: 0.1,
            many_to_many_prob: 0.0,
            multi_piece_prob: 0.2,
            monotone: false,
        }
    }
}

const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

fn random_word<R: Rng>(rng: &mut R, multi_piece_prob: f64) -> Word {
    let len = rng.gen_range(1..=6);
    let text: String = (0..len)
        .map(|_| LETTERS[rng.gen_range(0..LETTERS.len())] as char)
        .collect();
    if len >= 2 && rng.gen_bool(multi_piece_prob) {
        let cut = rng.gen_range(1..len);
        let (a, b) = text.split_at(cut);
        if b.len() >= 2 && rng.gen_bool(0.5) {
            let (b1, b2) = b.split_at(1);
            return Word::new([a, b1, b2]).expect("non-empty pieces");
        }
        return Word::new([a, b]).expect("non-empty pieces");
    }
    Word::atomic(text).expect("letters only")
}

/// Draws a sentence pair with arbitrary (or monotone) word order.
pub fn random_pair<R: Rng>(rng: &mut R, cfg: &GenConfig) -> AlignedSentencePair {
    let src_len = rng.gen_range(1..=cfg.max_src_len.max(1));
    // per source word: number of aligned targets; None marks an unaligned target slot
    let mut emission: Vec<Option<usize>> = Vec::new();
    for i in 1..=src_len {
        if rng.gen_bool(cfg.unaligned_prob) {
            emission.push(None);
        }
        let fert = if rng.gen_bool(cfg.unaligned_prob) {
            0
        } else {
            rng.gen_range(1..=cfg.max_fertility.max(1))
        };
        emission.extend(std::iter::repeat_n(Some(i), fert));
    }
    let tgt_len = emission.len();
    let mut positions: Vec<usize> = (1..=tgt_len).collect();
    if !cfg.monotone {
        positions.shuffle(rng);
    }
    let mut links = Vec::new();
    for (owner, &pos) in emission.iter().zip(&positions) {
        if let Some(i) = *owner {
            links.push((i, pos));
            if src_len > 1 && rng.gen_bool(cfg.many_to_many_prob) {
                links.push((rng.gen_range(1..=src_len), pos));
            }
        }
    }
    let src = (0..src_len).map(|_| random_word(rng, cfg.multi_piece_prob)).collect();
    let tgt = (0..tgt_len).map(|_| random_word(rng, cfg.multi_piece_prob)).collect();
    AlignedSentencePair::new(src, tgt, links).expect("links in range")
}

/// Kinds of structural damage that make a stream ill-formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    DropEndOfStream,
    TrailingToken,
    /// Absolute: remove a `[BL]`.
    DropBlank,
    /// Absolute: remove a `[n]`/`[-1]`.
    DropPosition,
    /// Absolute: `[n]` after a real word becomes `[-1]`.
    PositionToNoPosition,
    /// Absolute: `[n]` beyond the maximum target length.
    PositionOverflow,
    /// Absolute: swap a position token with the piece before it.
    SwapPieceAndPosition,
    /// Absolute: a second `[BL]` right after an existing one.
    DoubleBlank,
    /// Relative: remove an `[EOP]`.
    DropEndOfOps,
    /// Relative: remove every op of one entry.
    DropOpList,
    /// Relative: `[NO_OPS]` combined with another op.
    MixNoOps,
    /// Relative: a jump before any marker exists.
    LeadingJump,
    /// Relative: more backward jumps than markers set so far.
    ExcessJumps,
    /// Relative: an op replaced by a position token.
    OpToPosition,
}

impl Corruption {
    pub fn all(variant: Variant) -> &'static [Corruption] {
        use Corruption::*;
        match variant {
            Variant::Absolute => &[
                DropEndOfStream,
                TrailingToken,
                DropBlank,
                DropPosition,
                PositionToNoPosition,
                PositionOverflow,
                SwapPieceAndPosition,
                DoubleBlank,
            ],
            Variant::Relative => &[
                DropEndOfStream,
                TrailingToken,
                DropEndOfOps,
                DropOpList,
                MixNoOps,
                LeadingJump,
                ExcessJumps,
                OpToPosition,
            ],
        }
    }
}

fn indices(tokens: &[Token], f: impl Fn(&Token) -> bool) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| f(t))
        .map(|(i, _)| i)
        .collect()
}

fn is_op(t: &Token) -> bool {
    t.special().and_then(Special::as_op).is_some()
}

/// Applies one corruption to a valid, non-empty encoder output. Returns
/// `None` when the stream has nothing the corruption could act on.
pub fn corrupt<R: Rng>(
    rng: &mut R,
    tokens: &[Token],
    kind: Corruption,
    max_tgt_len: usize,
) -> Option<Vec<Token>> {
    use Corruption::*;
    let mut out = tokens.to_vec();
    let pick = |rng: &mut R, v: Vec<usize>| v.choose(rng).copied();
    match kind {
        DropEndOfStream => {
            out.pop()?;
        }
        TrailingToken => {
            let extra = [
                Token::Special(Special::EndOfStream),
                Token::Special(Special::Blank),
                "w".parse().expect("piece"),
            ];
            out.push(extra.choose(rng)?.clone());
        }
        DropBlank => {
            let i = pick(rng, indices(&out, |t| t.special() == Some(Special::Blank)))?;
            out.remove(i);
        }
        DropPosition => {
            let i = pick(
                rng,
                indices(&out, |t| {
                    matches!(t.special(), Some(Special::Position(_) | Special::NoPosition))
                }),
            )?;
            out.remove(i);
        }
        PositionToNoPosition => {
            let i = pick(rng, indices(&out, |t| matches!(t.special(), Some(Special::Position(_)))))?;
            out[i] = Special::NoPosition.into();
        }
        PositionOverflow => {
            let i = pick(rng, indices(&out, |t| matches!(t.special(), Some(Special::Position(_)))))?;
            out[i] = Special::Position(max_tgt_len + 1).into();
        }
        SwapPieceAndPosition => {
            let i = pick(rng, indices(&out, |t| matches!(t.special(), Some(Special::Position(_)))))?;
            out.swap(i - 1, i);
        }
        DoubleBlank => {
            let i = pick(rng, indices(&out, |t| t.special() == Some(Special::Blank)))?;
            out.insert(i + 1, Special::Blank.into());
        }
        DropEndOfOps => {
            let i = pick(rng, indices(&out, |t| t.special() == Some(Special::EndOfOps)))?;
            out.remove(i);
        }
        DropOpList => {
            let starts = indices(&out, is_op)
                .into_iter()
                .filter(|&i| i == 0 || !is_op(&out[i - 1]))
                .collect();
            let start = pick(rng, starts)?;
            let mut end = start;
            while end < out.len() && is_op(&out[end]) {
                end += 1;
            }
            out.drain(start..end);
        }
        MixNoOps => {
            let i = pick(rng, indices(&out, is_op))?;
            if out[i] == Op::NoOps.token() {
                let other = [Op::SetMarker, Op::JumpBackward, Op::JumpForward].choose(rng)?;
                out.insert(i + rng.gen_range(0..=1), other.token());
            } else {
                out.insert(i + rng.gen_range(0..=1), Op::NoOps.token());
            }
        }
        LeadingJump => {
            let first = *indices(&out, is_op).first()?;
            let jump = [Op::JumpBackward, Op::JumpForward].choose(rng)?;
            out.insert(first, jump.token());
        }
        ExcessJumps => {
            let i = pick(rng, indices(&out, is_op))?;
            let markers = out[..i].iter().filter(|t| **t == Op::SetMarker.token()).count();
            for _ in 0..=markers {
                out.insert(i, Op::JumpBackward.token());
            }
        }
        OpToPosition => {
            let i = pick(rng, indices(&out, is_op))?;
            out[i] = Special::Position(rng.gen_range(1..=3)).into();
        }
    }
    Some(out)
}

/// Unconstrained single-token mutation: delete, duplicate, swap with the
/// next token, or replace/insert a random special token.
pub fn mutate<R: Rng>(rng: &mut R, tokens: &[Token]) -> Vec<Token> {
    let mut out = tokens.to_vec();
    if out.is_empty() {
        out.push(Special::EndOfStream.into());
        return out;
    }
    let specials = [
        Special::Blank,
        Special::EndOfStream,
        Special::EndOfOps,
        Special::NoSource,
        Special::NoTarget,
        Special::NoOps,
        Special::SetMarker,
        Special::JumpForward,
        Special::JumpBackward,
        Special::NoPosition,
        Special::Position(1),
        Special::Position(2),
        Special::Position(3),
    ];
    let i = rng.gen_range(0..out.len());
    match rng.gen_range(0..5) {
        0 => {
            out.remove(i);
        }
        1 => {
            let t = out[i].clone();
            out.insert(i, t);
        }
        2 if i + 1 < out.len() => out.swap(i, i + 1),
        3 => out[i] = (*specials.choose(rng).expect("non-empty")).into(),
        _ => out.insert(i, (*specials.choose(rng).expect("non-empty")).into()),
    }
    out
}
