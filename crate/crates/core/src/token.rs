//! Tokens, words and the tuple representation shared by both encodings.
//!
//! A serialized stream is a whitespace-separated list of surfaces. Special
//! symbols keep their bracketed spelling (`[EOS]`, `[SM]`, `[17]`, ...). Word
//! pieces are everything else: the first piece of a word is written bare and
//! each continuation piece carries the `##` prefix, so `trans ##lation` is one
//! word with two pieces.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Prefix marking a piece that continues the previous word.
pub const CONTINUATION_PREFIX: &str = "##";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("empty token surface")]
    Empty,
    #[error("unknown bracketed token `{0}`; bracketed surfaces are reserved")]
    UnknownSpecial(String),
    #[error("word piece `{0}` collides with a reserved surface")]
    Reserved(String),
    #[error("word has no pieces")]
    EmptyWord,
    #[error("word `{0}` starts with a continuation piece")]
    DanglingContinuation(String),
}

/// The closed set of special symbols plus absolute positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Special {
    /// `[BL]`: separates source and target in the absolute encoding.
    Blank,
    /// `[EOS]`
    EndOfStream,
    /// `[EOP]`: closes a tuple in the relative encoding.
    EndOfOps,
    /// `[NO_SRC]`
    NoSource,
    /// `[NO_TGT]`
    NoTarget,
    /// `[NO_OPS]`
    NoOps,
    /// `[SM]`
    SetMarker,
    /// `[JF]`
    JumpForward,
    /// `[JB]`
    JumpBackward,
    /// `[-1]`: position of a `[NO_TGT]`.
    NoPosition,
    /// `[n]`, n >= 1.
    Position(usize),
}

impl Special {
    pub fn as_op(self) -> Option<Op> {
        match self {
            Special::SetMarker => Some(Op::SetMarker),
            Special::JumpForward => Some(Op::JumpForward),
            Special::JumpBackward => Some(Op::JumpBackward),
            Special::NoOps => Some(Op::NoOps),
            _ => None,
        }
    }

    fn parse(surface: &str) -> Option<Special> {
        let s = match surface {
            "[BL]" => Special::Blank,
            "[EOS]" => Special::EndOfStream,
            "[EOP]" => Special::EndOfOps,
            "[NO_SRC]" => Special::NoSource,
            "[NO_TGT]" => Special::NoTarget,
            "[NO_OPS]" => Special::NoOps,
            "[SM]" => Special::SetMarker,
            "[JF]" => Special::JumpForward,
            "[JB]" => Special::JumpBackward,
            "[-1]" => Special::NoPosition,
            _ => {
                let inner = surface.strip_prefix('[')?.strip_suffix(']')?;
                // canonical spelling only: no sign, no leading zeros
                if inner.is_empty()
                    || inner.starts_with('0')
                    || !inner.bytes().all(|b| b.is_ascii_digit())
                {
                    return None;
                }
                Special::Position(inner.parse().ok()?)
            }
        };
        Some(s)
    }
}

impl fmt::Display for Special {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Special::Blank => f.write_str("[BL]"),
            Special::EndOfStream => f.write_str("[EOS]"),
            Special::EndOfOps => f.write_str("[EOP]"),
            Special::NoSource => f.write_str("[NO_SRC]"),
            Special::NoTarget => f.write_str("[NO_TGT]"),
            Special::NoOps => f.write_str("[NO_OPS]"),
            Special::SetMarker => f.write_str("[SM]"),
            Special::JumpForward => f.write_str("[JF]"),
            Special::JumpBackward => f.write_str("[JB]"),
            Special::NoPosition => f.write_str("[-1]"),
            Special::Position(n) => write!(f, "[{n}]"),
        }
    }
}

/// Write-head operations of the relative encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    SetMarker,
    JumpForward,
    JumpBackward,
    NoOps,
}

impl Op {
    pub fn token(self) -> Token {
        Token::Special(match self {
            Op::SetMarker => Special::SetMarker,
            Op::JumpForward => Special::JumpForward,
            Op::JumpBackward => Special::JumpBackward,
            Op::NoOps => Special::NoOps,
        })
    }
}

/// One sub-word unit of a word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Piece {
    text: String,
    word_start: bool,
}

impl Piece {
    pub fn new(text: impl Into<String>, word_start: bool) -> Result<Piece, TokenError> {
        let text = text.into();
        if text.is_empty() {
            return Err(TokenError::Empty);
        }
        if is_reserved_text(&text) || text.chars().any(char::is_whitespace) {
            return Err(TokenError::Reserved(text));
        }
        Ok(Piece { text, word_start })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn is_word_start(&self) -> bool {
        self.word_start
    }
}

fn is_reserved_text(text: &str) -> bool {
    (text.starts_with('[') && text.ends_with(']') && text.len() >= 2)
        || text.starts_with(CONTINUATION_PREFIX)
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.word_start {
            f.write_str(CONTINUATION_PREFIX)?;
        }
        f.write_str(&self.text)
    }
}

/// One surface unit of a serialized operation sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token {
    Piece(Piece),
    Special(Special),
}

impl Token {
    pub fn is_special(&self) -> bool {
        matches!(self, Token::Special(_))
    }

    pub fn special(&self) -> Option<Special> {
        match self {
            Token::Special(s) => Some(*s),
            Token::Piece(_) => None,
        }
    }

    pub fn piece(&self) -> Option<&Piece> {
        match self {
            Token::Piece(p) => Some(p),
            Token::Special(_) => None,
        }
    }

    pub fn is_word_start(&self) -> bool {
        matches!(self, Token::Piece(p) if p.word_start)
    }

    pub fn is_continuation(&self) -> bool {
        matches!(self, Token::Piece(p) if !p.word_start)
    }
}

/// True iff `surface` spells a reserved special token.
pub fn is_special(surface: &str) -> bool {
    Special::parse(surface).is_some()
}

impl FromStr for Token {
    type Err = TokenError;

    fn from_str(surface: &str) -> Result<Token, TokenError> {
        if surface.is_empty() {
            return Err(TokenError::Empty);
        }
        if let Some(s) = Special::parse(surface) {
            return Ok(Token::Special(s));
        }
        if surface.starts_with('[') && surface.ends_with(']') && surface.len() >= 2 {
            return Err(TokenError::UnknownSpecial(surface.to_string()));
        }
        match surface.strip_prefix(CONTINUATION_PREFIX) {
            Some(rest) => Piece::new(rest, false).map(Token::Piece),
            None => Piece::new(surface, true).map(Token::Piece),
        }
    }
}

impl From<Special> for Token {
    fn from(s: Special) -> Token {
        Token::Special(s)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Piece(p) => p.fmt(f),
            Token::Special(s) => s.fmt(f),
        }
    }
}

/// Splits a serialized line into tokens.
pub fn parse_tokens(line: &str) -> Result<Vec<Token>, (usize, TokenError)> {
    line.split_whitespace()
        .enumerate()
        .map(|(i, s)| s.parse().map_err(|e| (i, e)))
        .collect()
}

/// Joins tokens with single spaces.
pub fn render_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.to_string());
    }
    out
}

/// A word as a non-empty run of pieces; the first piece is the word start.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    pieces: Vec<String>,
}

impl Word {
    pub fn new<I, S>(pieces: I) -> Result<Word, TokenError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let pieces: Vec<String> = pieces.into_iter().map(Into::into).collect();
        if pieces.is_empty() {
            return Err(TokenError::EmptyWord);
        }
        for p in &pieces {
            Piece::new(p.as_str(), true)?;
        }
        Ok(Word { pieces })
    }

    /// Single-piece word.
    pub fn atomic(text: impl Into<String>) -> Result<Word, TokenError> {
        Word::new([text.into()])
    }

    /// Groups a run of pieces into words using their boundary flags.
    pub fn group(pieces: &[Piece]) -> Result<Vec<Word>, TokenError> {
        let mut words: Vec<Word> = Vec::new();
        for p in pieces {
            if p.word_start {
                words.push(Word {
                    pieces: vec![p.text.clone()],
                });
            } else {
                match words.last_mut() {
                    Some(w) => w.pieces.push(p.text.clone()),
                    None => return Err(TokenError::DanglingContinuation(p.to_string())),
                }
            }
        }
        Ok(words)
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    /// The surface word: pieces concatenated.
    pub fn surface(&self) -> String {
        self.pieces.concat()
    }

    pub fn to_pieces(&self) -> Vec<Piece> {
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, t)| Piece {
                text: t.clone(),
                word_start: i == 0,
            })
            .collect()
    }
}

impl fmt::Display for Word {
    /// Segmented form: `trans ##lation`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, " {CONTINUATION_PREFIX}")?;
            }
            f.write_str(p)?;
        }
        Ok(())
    }
}

/// Parses a whitespace-tokenized (optionally `##`-segmented) sentence.
pub fn parse_sentence(line: &str) -> Result<Vec<Word>, TokenError> {
    let mut pieces = Vec::new();
    for s in line.split_whitespace() {
        match s.strip_prefix(CONTINUATION_PREFIX) {
            Some(rest) => pieces.push(Piece::new(rest, false)?),
            None => pieces.push(Piece::new(s, true)?),
        }
    }
    Word::group(&pieces)
}

/// Renders words in segmented form separated by spaces.
pub fn render_sentence(words: &[Word]) -> String {
    words
        .iter()
        .map(Word::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders words as plain surfaces separated by spaces.
pub fn render_surface(words: &[Word]) -> String {
    words.iter().map(Word::surface).collect::<Vec<_>>().join(" ")
}

/// Flattening into the token stream (words collapse into their pieces).
pub trait Collapse {
    fn collapse(&self) -> Vec<Token>;
}

impl Collapse for Word {
    fn collapse(&self) -> Vec<Token> {
        self.to_pieces().into_iter().map(Token::Piece).collect()
    }
}

/// Source side of a tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SrcSlot {
    Word(Word),
    NoSource,
}

impl SrcSlot {
    pub fn word(&self) -> Option<&Word> {
        match self {
            SrcSlot::Word(w) => Some(w),
            SrcSlot::NoSource => None,
        }
    }
}

impl Collapse for SrcSlot {
    fn collapse(&self) -> Vec<Token> {
        match self {
            SrcSlot::Word(w) => w.collapse(),
            SrcSlot::NoSource => vec![Special::NoSource.into()],
        }
    }
}

/// One aligned target entry: a word with its final 1-based position, or `[NO_TGT]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TgtSlot {
    Word { word: Word, pos: usize },
    NoTarget,
}

impl TgtSlot {
    pub fn position(&self) -> Option<usize> {
        match self {
            TgtSlot::Word { pos, .. } => Some(*pos),
            TgtSlot::NoTarget => None,
        }
    }
}

impl Collapse for TgtSlot {
    fn collapse(&self) -> Vec<Token> {
        match self {
            TgtSlot::Word { word, pos } => {
                let mut v = word.collapse();
                v.push(Special::Position(*pos).into());
                v
            }
            TgtSlot::NoTarget => vec![Special::NoTarget.into(), Special::NoPosition.into()],
        }
    }
}

/// Operation tuple: a source slot and its aligned targets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OpTuple {
    pub src: SrcSlot,
    pub targets: Vec<TgtSlot>,
}

impl Collapse for OpTuple {
    fn collapse(&self) -> Vec<Token> {
        let mut v = self.src.collapse();
        for t in &self.targets {
            v.extend(t.collapse());
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TupleError {
    #[error("tuple {0} has no target entries")]
    NoTargets(usize),
    #[error("tuple {0} mixes [NO_TGT] with other target entries")]
    MixedNoTarget(usize),
    #[error("final positions are not a permutation of 1..={len}: {detail}")]
    NotPermutation { len: usize, detail: String },
}

/// Ordered operation tuples; the intermediate form both encoders consume.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TupleSequence {
    tuples: Vec<OpTuple>,
}

impl TupleSequence {
    /// Checks the tuple invariants: non-empty target lists, lone `[NO_TGT]`
    /// entries, and positions forming a permutation of `1..=L`.
    pub fn new(tuples: Vec<OpTuple>) -> Result<TupleSequence, TupleError> {
        let mut seen = Vec::new();
        for (i, t) in tuples.iter().enumerate() {
            if t.targets.is_empty() {
                return Err(TupleError::NoTargets(i));
            }
            if t.targets.len() > 1 && t.targets.iter().any(|e| e.position().is_none()) {
                return Err(TupleError::MixedNoTarget(i));
            }
            seen.extend(t.targets.iter().filter_map(TgtSlot::position));
        }
        let len = seen.len();
        seen.sort_unstable();
        if let Some((k, &p)) = seen.iter().enumerate().find(|&(k, &p)| p != k + 1) {
            return Err(TupleError::NotPermutation {
                len,
                detail: format!("sorted entry {} is {}", k + 1, p),
            });
        }
        Ok(TupleSequence { tuples })
    }

    pub fn tuples(&self) -> &[OpTuple] {
        &self.tuples
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn target_len(&self) -> usize {
        self.tuples
            .iter()
            .flat_map(|t| &t.targets)
            .filter(|e| e.position().is_some())
            .count()
    }

    /// Source words in stream order, `[NO_SRC]` slots dropped.
    pub fn source_words(&self) -> Vec<Word> {
        self.tuples
            .iter()
            .filter_map(|t| t.src.word().cloned())
            .collect()
    }

    /// Target words sorted by final position.
    pub fn target_words(&self) -> Vec<Word> {
        let mut placed: Vec<(usize, &Word)> = self
            .tuples
            .iter()
            .flat_map(|t| &t.targets)
            .filter_map(|e| match e {
                TgtSlot::Word { word, pos } => Some((*pos, word)),
                TgtSlot::NoTarget => None,
            })
            .collect();
        placed.sort_by_key(|&(p, _)| p);
        placed.into_iter().map(|(_, w)| w.clone()).collect()
    }
}

impl Collapse for TupleSequence {
    fn collapse(&self) -> Vec<Token> {
        self.tuples.iter().flat_map(Collapse::collapse).collect()
    }
}
