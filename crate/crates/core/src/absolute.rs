//! Absolute positional encoding.
//!
//! Each tuple is `src [BL] (tgt pos)+` where `pos` is `[n]` (final 1-based
//! target position) or `[-1]` after `[NO_TGT]`; the stream ends with `[EOS]`.
//! Restoration queues tokens until a position token arrives, then writes the
//! dequeued target word into cell `n` of the translation buffer.

use std::ops::Range;

use crate::error::{DecodeError, Diagnostic, Expected, SyntaxError, SyntaxErrorKind};
use crate::token::{Collapse, Special, SrcSlot, Token, TupleSequence, Word};
use crate::Decoded;

pub fn encode_absolute(tuples: &TupleSequence) -> Vec<Token> {
    let mut out = Vec::new();
    for t in tuples.tuples() {
        out.extend(t.src.collapse());
        out.push(Special::Blank.into());
        for e in &t.targets {
            out.extend(e.collapse());
        }
    }
    out.push(Special::EndOfStream.into());
    out
}

/// A dequeued `tgt pos` group, carrying the tuple's source on its first group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbsGroup {
    pub tuple: usize,
    pub src: Option<SrcSlot>,
    /// `None` for `[NO_TGT]`.
    pub target: Option<Word>,
    /// `None` for `[-1]`.
    pub pos: Option<usize>,
    /// Index of the group's first token.
    pub start: usize,
    /// Index of the position token.
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbsStep {
    Pending,
    Group(AbsGroup),
    End,
}

#[derive(Debug, Clone)]
enum State {
    Start,
    AfterGroup,
    Head { pieces: Vec<String>, after_group: bool },
    NoSrc,
    ExpectTgt,
    Tgt(Vec<String>),
    NoTgt,
    Done,
    Failed,
}

/// Incremental parser for the absolute grammar.
#[derive(Debug, Clone)]
pub struct AbsParser {
    state: State,
    max_tgt_len: usize,
    index: usize,
    /// Tuples opened so far.
    tuple: usize,
    src: Option<SrcSlot>,
    group_start: usize,
}

impl AbsParser {
    pub fn new(max_tgt_len: usize) -> AbsParser {
        AbsParser {
            state: State::Start,
            max_tgt_len,
            index: 0,
            tuple: 0,
            src: None,
            group_start: 0,
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self.state, State::Done)
    }

    /// Tokens consumed since the last completed group.
    pub fn pending(&self) -> usize {
        match self.state {
            State::Start | State::AfterGroup | State::Done | State::Failed => 0,
            _ => self.index - self.group_start,
        }
    }

    pub fn tokens_seen(&self) -> usize {
        self.index
    }

    pub fn push(&mut self, tok: &Token) -> Result<AbsStep, SyntaxError> {
        let index = self.index;
        let state = std::mem::replace(&mut self.state, State::Done);
        let result = self.step(state, tok, index);
        if result.is_err() {
            self.state = State::Failed;
        }
        self.index += 1;
        result
    }

    fn step(&mut self, state: State, tok: &Token, index: usize) -> Result<AbsStep, SyntaxError> {
        use Special as S;
        let unexpected = |expected: &[Expected]| Err(SyntaxError::unexpected(index, tok, expected));
        match state {
            State::Start | State::AfterGroup => {
                let after_group = matches!(state, State::AfterGroup);
                self.group_start = index;
                match tok {
                    Token::Piece(p) if p.is_word_start() => {
                        self.state = State::Head {
                            pieces: vec![p.text().to_string()],
                            after_group,
                        };
                        Ok(AbsStep::Pending)
                    }
                    Token::Special(S::NoSource) => {
                        self.state = State::NoSrc;
                        Ok(AbsStep::Pending)
                    }
                    Token::Special(S::NoTarget) if after_group => {
                        self.state = State::NoTgt;
                        Ok(AbsStep::Pending)
                    }
                    Token::Special(S::EndOfStream) => {
                        self.state = State::Done;
                        Ok(AbsStep::End)
                    }
                    _ if after_group => unexpected(&[
                        Expected::SourceWord,
                        Expected::NoSource,
                        Expected::TargetWord,
                        Expected::NoTarget,
                        Expected::EndOfStream,
                    ]),
                    _ => unexpected(&[
                        Expected::SourceWord,
                        Expected::NoSource,
                        Expected::EndOfStream,
                    ]),
                }
            }
            State::Head {
                mut pieces,
                after_group,
            } => match tok {
                Token::Piece(p) if !p.is_word_start() => {
                    pieces.push(p.text().to_string());
                    self.state = State::Head {
                        pieces,
                        after_group,
                    };
                    Ok(AbsStep::Pending)
                }
                Token::Special(S::Blank) => {
                    self.open_tuple(SrcSlot::Word(word(pieces)));
                    Ok(AbsStep::Pending)
                }
                Token::Special(S::Position(n)) if after_group => {
                    self.group(Some(word(pieces)), Some(*n), index)
                }
                _ if after_group => {
                    unexpected(&[Expected::Continuation, Expected::Blank, Expected::Position])
                }
                _ => unexpected(&[Expected::Continuation, Expected::Blank]),
            },
            State::NoSrc => match tok {
                Token::Special(S::Blank) => {
                    self.open_tuple(SrcSlot::NoSource);
                    Ok(AbsStep::Pending)
                }
                _ => unexpected(&[Expected::Blank]),
            },
            State::ExpectTgt => match tok {
                Token::Piece(p) if p.is_word_start() => {
                    self.state = State::Tgt(vec![p.text().to_string()]);
                    Ok(AbsStep::Pending)
                }
                Token::Special(S::NoTarget) => {
                    self.state = State::NoTgt;
                    Ok(AbsStep::Pending)
                }
                _ => unexpected(&[Expected::TargetWord, Expected::NoTarget]),
            },
            State::Tgt(mut pieces) => match tok {
                Token::Piece(p) if !p.is_word_start() => {
                    pieces.push(p.text().to_string());
                    self.state = State::Tgt(pieces);
                    Ok(AbsStep::Pending)
                }
                Token::Special(S::Position(n)) => self.group(Some(word(pieces)), Some(*n), index),
                _ => unexpected(&[Expected::Continuation, Expected::Position]),
            },
            State::NoTgt => match tok {
                Token::Special(S::NoPosition) => self.group(None, None, index),
                _ => unexpected(&[Expected::NoPosition]),
            },
            State::Done | State::Failed => Err(SyntaxError {
                index,
                found: Some(tok.to_string()),
                kind: SyntaxErrorKind::TrailingAfterEnd,
            }),
        }
    }

    fn open_tuple(&mut self, src: SrcSlot) {
        self.tuple += 1;
        self.src = Some(src);
        self.state = State::ExpectTgt;
    }

    fn group(
        &mut self,
        target: Option<Word>,
        pos: Option<usize>,
        index: usize,
    ) -> Result<AbsStep, SyntaxError> {
        if let Some(n) = pos {
            if n > self.max_tgt_len {
                return Err(SyntaxError {
                    index,
                    found: Some(Special::Position(n).to_string()),
                    kind: SyntaxErrorKind::PositionOutOfRange {
                        pos: n,
                        max: self.max_tgt_len,
                    },
                });
            }
        }
        let src = self.src.take();
        let tuple = self.tuple - 1;
        self.state = State::AfterGroup;
        Ok(AbsStep::Group(AbsGroup {
            tuple,
            src,
            target,
            pos,
            start: self.group_start,
            end: index,
        }))
    }

    /// Checks that the stream was closed by `[EOS]`.
    pub fn finish(&self) -> Result<(), SyntaxError> {
        let expected = match &self.state {
            State::Done => return Ok(()),
            State::Failed => Vec::new(),
            State::Start => vec![Expected::SourceWord, Expected::NoSource, Expected::EndOfStream],
            State::AfterGroup => vec![
                Expected::SourceWord,
                Expected::NoSource,
                Expected::TargetWord,
                Expected::NoTarget,
                Expected::EndOfStream,
            ],
            State::Head { .. } => vec![Expected::Continuation, Expected::Blank, Expected::Position],
            State::NoSrc => vec![Expected::Blank],
            State::ExpectTgt => vec![Expected::TargetWord, Expected::NoTarget],
            State::Tgt(_) => vec![Expected::Continuation, Expected::Position],
            State::NoTgt => vec![Expected::NoPosition],
        };
        Err(SyntaxError {
            index: self.index,
            found: None,
            kind: SyntaxErrorKind::UnexpectedEnd { expected },
        })
    }
}

fn word(pieces: Vec<String>) -> Word {
    Word::new(pieces).expect("pieces were validated when tokenized")
}

/// Source buffer, position-indexed translation buffer, and decode diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RestoreBuffers {
    source: Vec<Word>,
    target: Vec<Option<Word>>,
    diagnostics: Vec<Diagnostic>,
}

impl RestoreBuffers {
    pub fn new() -> RestoreBuffers {
        RestoreBuffers::default()
    }

    pub fn apply(&mut self, group: &AbsGroup) {
        if let Some(SrcSlot::Word(w)) = &group.src {
            self.source.push(w.clone());
        }
        if let (Some(w), Some(pos)) = (&group.target, group.pos) {
            if self.target.len() < pos {
                self.target.resize(pos, None);
            }
            let cell = &mut self.target[pos - 1];
            if cell.is_some() {
                log::warn!("position [{pos}] written twice (token {}); last write wins", group.end);
                self.diagnostics.push(Diagnostic::DuplicatePosition {
                    pos,
                    index: group.end,
                });
            }
            *cell = Some(w.clone());
        }
    }

    pub fn source(&self) -> &[Word] {
        &self.source
    }

    /// Translation cells; `None` is an unwritten placeholder.
    pub fn target_cells(&self) -> &[Option<Word>] {
        &self.target
    }

    /// Written target words in position order, placeholders dropped.
    pub fn translation(&self) -> Vec<Word> {
        self.target.iter().flatten().cloned().collect()
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    fn into_decoded(mut self, complete: bool, pending: usize) -> Decoded {
        let unfilled: Vec<usize> = self
            .target
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_none())
            .map(|(i, _)| i + 1)
            .collect();
        if !unfilled.is_empty() {
            self.diagnostics.push(Diagnostic::UnfilledPositions(unfilled));
        }
        if !complete {
            self.diagnostics.push(Diagnostic::Truncated { pending });
        }
        let translation = self.translation();
        Decoded {
            transcription: self.source,
            translation,
            complete,
            diagnostics: self.diagnostics,
        }
    }
}

/// Restores transcription and translation from an absolute stream.
///
/// A stream without `[EOS]` decodes its complete groups and is reported as
/// truncated; any other grammar violation is an error.
pub fn decode_absolute(tokens: &[Token], max_tgt_len: usize) -> Result<Decoded, DecodeError> {
    run_absolute(tokens, max_tgt_len, |_, _| {})
}

fn run_absolute(
    tokens: &[Token],
    max_tgt_len: usize,
    mut observe: impl FnMut(&AbsGroup, &RestoreBuffers),
) -> Result<Decoded, DecodeError> {
    let mut parser = AbsParser::new(max_tgt_len);
    let mut buffers = RestoreBuffers::new();
    for tok in tokens {
        if let AbsStep::Group(g) = parser.push(tok)? {
            buffers.apply(&g);
            observe(&g, &buffers);
        }
    }
    let complete = parser.is_done();
    Ok(buffers.into_decoded(complete, parser.pending()))
}

/// One line per restored group: source slot, target and position, buffers.
pub fn trace_absolute(
    tokens: &[Token],
    max_tgt_len: usize,
) -> (Vec<String>, Result<Decoded, DecodeError>) {
    let mut lines = Vec::new();
    let result = run_absolute(tokens, max_tgt_len, |g, buf| {
        let src = match &g.src {
            Some(SrcSlot::Word(w)) => w.to_string(),
            Some(SrcSlot::NoSource) => Special::NoSource.to_string(),
            None => "-".to_string(),
        };
        let tgt = match (&g.target, g.pos) {
            (Some(w), Some(p)) => format!("{w} [{p}]"),
            _ => format!("{} {}", Special::NoTarget, Special::NoPosition),
        };
        let cells: Vec<String> = buf
            .target_cells()
            .iter()
            .map(|c| c.as_ref().map_or("_".to_string(), Word::surface))
            .collect();
        let source: Vec<String> = buf.source().iter().map(Word::surface).collect();
        lines.push(format!(
            "tuple {} src={src} tgt={tgt}\tS=[{}] T=[{}]",
            g.tuple,
            source.join(" "),
            cells.join(" ")
        ));
    });
    (lines, result)
}

/// Accepted stream: token ranges of each tuple (the `[EOS]` excluded).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbsParse {
    pub tuples: Vec<Range<usize>>,
}

pub fn validate_absolute(tokens: &[Token], max_tgt_len: usize) -> Result<AbsParse, SyntaxError> {
    let mut parser = AbsParser::new(max_tgt_len);
    let mut tuples: Vec<Range<usize>> = Vec::new();
    for tok in tokens {
        if let AbsStep::Group(g) = parser.push(tok)? {
            match (&g.src, tuples.last_mut()) {
                (None, Some(last)) => last.end = g.end + 1,
                _ => tuples.push(g.start..g.end + 1),
            }
        }
    }
    parser.finish()?;
    Ok(AbsParse { tuples })
}

/// Final target positions of each target word, in emission order.
pub(crate) fn emission_positions(tokens: &[Token], max_tgt_len: usize) -> Result<Vec<usize>, SyntaxError> {
    let mut parser = AbsParser::new(max_tgt_len);
    let mut out = Vec::new();
    for tok in tokens {
        if let AbsStep::Group(AbsGroup { pos: Some(p), .. }) = parser.push(tok)? {
            out.push(p);
        }
    }
    parser.finish()?;
    Ok(out)
}
