//! Relative shift encoding.
//!
//! A tuple is `src (ops tgt)+ [EOP]`. Restoration runs a small buffer machine:
//! source pieces are appended to `S`; the translation buffer `T` holds pieces
//! and marker cells, and a write-head moves between markers.
//!
//! Head semantics (head `h` is an insertion index into `T`, `0..=|T|`):
//!
//! * `[SM]` inserts a marker at `h` and leaves the head just after it.
//! * `[JF]` moves to just after the nearest marker at or right of `h`.
//! * `[JB]` moves to just after the nearest marker whose landing slot is
//!   strictly left of `h`.
//! * inserting a target piece writes at `h` and advances it.

use std::fmt;
use std::ops::Range;

use crate::error::{
    DecodeError, Diagnostic, Expected, InterpreterError, SyntaxError, SyntaxErrorKind,
};
use crate::token::{Collapse, Op, Piece, Special, SrcSlot, TgtSlot, Token, TupleSequence, Word};
use crate::Decoded;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cell {
    /// A target piece tagged with the emission rank of its word.
    Piece { piece: Piece, word: usize },
    Marker,
}

impl Cell {
    pub fn is_marker(&self) -> bool {
        matches!(self, Cell::Marker)
    }
}

/// One buffer-machine instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Edit {
    Op(Op),
    InsertTarget(Piece),
    InsertSource(Piece),
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Edit::Op(op) => op.token().fmt(f),
            Edit::InsertTarget(p) => write!(f, "INSERT-t({p})"),
            Edit::InsertSource(p) => write!(f, "INSERT-s({p})"),
        }
    }
}

/// A jump found no marker in its direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoMarker(pub Op);

/// Transcription buffer, translation buffer with markers, and the write-head.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BufferState {
    source: Vec<Piece>,
    target: Vec<Cell>,
    head: usize,
    markers: usize,
    words: usize,
}

impl BufferState {
    pub fn new() -> BufferState {
        BufferState::default()
    }

    pub fn apply(&mut self, edit: &Edit) -> Result<(), NoMarker> {
        match edit {
            Edit::Op(Op::NoOps) => {}
            Edit::Op(Op::SetMarker) => {
                self.target.insert(self.head, Cell::Marker);
                self.head += 1;
                self.markers += 1;
            }
            Edit::Op(Op::JumpForward) => {
                let m = (self.head..self.target.len())
                    .find(|&m| self.target[m].is_marker())
                    .ok_or(NoMarker(Op::JumpForward))?;
                self.head = m + 1;
            }
            Edit::Op(Op::JumpBackward) => {
                let m = (0..self.head.saturating_sub(1))
                    .rev()
                    .find(|&m| self.target[m].is_marker())
                    .ok_or(NoMarker(Op::JumpBackward))?;
                self.head = m + 1;
            }
            Edit::InsertTarget(piece) => {
                if piece.is_word_start() || self.words == 0 {
                    self.words += 1;
                }
                self.target.insert(
                    self.head,
                    Cell::Piece {
                        piece: piece.clone(),
                        word: self.words - 1,
                    },
                );
                self.head += 1;
            }
            Edit::InsertSource(piece) => self.source.push(piece.clone()),
        }
        Ok(())
    }

    /// Functional form of [`BufferState::apply`].
    pub fn applied(mut self, edit: &Edit) -> Result<BufferState, NoMarker> {
        self.apply(edit)?;
        Ok(self)
    }

    pub fn target_head(&self) -> usize {
        self.head
    }

    /// The transcription head always sits at the end of `S`.
    pub fn source_head(&self) -> usize {
        self.source.len()
    }

    pub fn marker_count(&self) -> usize {
        self.markers
    }

    pub fn cells(&self) -> &[Cell] {
        &self.target
    }

    pub fn transcription(&self) -> Vec<Word> {
        Word::group(&self.source).expect("source pieces start with a word start")
    }

    /// `T` with markers removed.
    pub fn translation(&self) -> Vec<Word> {
        let pieces: Vec<Piece> = self
            .target
            .iter()
            .filter_map(|c| match c {
                Cell::Piece { piece, .. } => Some(piece.clone()),
                Cell::Marker => None,
            })
            .collect();
        // a leading continuation can only come from a hand-written stream; show it as a word
        match Word::group(&pieces) {
            Ok(words) => words,
            Err(_) => pieces
                .iter()
                .map(|p| Word::atomic(p.text()).expect("valid piece"))
                .collect(),
        }
    }

    /// Emission rank of each target word, in final translation order.
    pub fn emission_order(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for c in &self.target {
            if let Cell::Piece { piece, word } = c {
                if piece.is_word_start() || out.last() != Some(word) {
                    out.push(*word);
                }
            }
        }
        out
    }

    /// One-line dump: `S=[..] T=[..]` with `*` for markers and `|` at the head.
    pub fn render(&self) -> String {
        let s: Vec<String> = self.source.iter().map(Piece::to_string).collect();
        let mut t: Vec<String> = Vec::with_capacity(self.target.len() + 1);
        for (i, c) in self.target.iter().enumerate() {
            if i == self.head {
                t.push("|".into());
            }
            t.push(match c {
                Cell::Piece { piece, .. } => piece.to_string(),
                Cell::Marker => "*".into(),
            });
        }
        if self.head == self.target.len() {
            t.push("|".into());
        }
        format!("S=[{}] T=[{}]", s.join(" "), t.join(" "))
    }
}

/// One `ops tgt` entry of a tuple; ops carry their token index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelEntry {
    pub ops: Vec<(usize, Op)>,
    /// `None` for `[NO_TGT]`.
    pub target: Option<Word>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelTuple {
    pub tuple: usize,
    pub src: SrcSlot,
    pub entries: Vec<RelEntry>,
    /// Token range, `[EOP]` included.
    pub span: Range<usize>,
}

impl RelTuple {
    /// Expands the tuple into buffer-machine instructions with the token
    /// index each instruction came from.
    pub fn edits(&self) -> Vec<(usize, Edit)> {
        let mut out = Vec::new();
        if let SrcSlot::Word(w) = &self.src {
            for p in w.to_pieces() {
                out.push((self.span.start, Edit::InsertSource(p)));
            }
        }
        for e in &self.entries {
            for &(i, op) in &e.ops {
                out.push((i, Edit::Op(op)));
            }
            if let Some(w) = &e.target {
                let at = e.ops.last().map_or(self.span.start, |&(i, _)| i + 1);
                for p in w.to_pieces() {
                    out.push((at, Edit::InsertTarget(p)));
                }
            }
        }
        out
    }

    /// Runs the tuple on `state`, calling `observe` after each instruction.
    pub fn execute(
        &self,
        state: &mut BufferState,
        mut observe: impl FnMut(&Edit, &BufferState),
    ) -> Result<(), InterpreterError> {
        for (index, edit) in self.edits() {
            state.apply(&edit).map_err(|NoMarker(op)| InterpreterError {
                tuple: self.tuple,
                index,
                op,
            })?;
            observe(&edit, state);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelStep {
    Pending,
    Tuple(RelTuple),
    End,
}

#[derive(Debug, Clone)]
enum State {
    Start,
    Src(Vec<String>),
    NeedOps,
    Ops,
    Tgt(Vec<String>),
    AfterNoTgt,
    Done,
    Failed,
}

/// Incremental parser for the relative grammar; emits a tuple on each `[EOP]`.
#[derive(Debug, Clone)]
pub struct RelParser {
    state: State,
    index: usize,
    tuple: usize,
    start: usize,
    src: Option<SrcSlot>,
    entries: Vec<RelEntry>,
    ops: Vec<(usize, Op)>,
}

impl Default for RelParser {
    fn default() -> Self {
        RelParser::new()
    }
}

impl RelParser {
    pub fn new() -> RelParser {
        RelParser {
            state: State::Start,
            index: 0,
            tuple: 0,
            start: 0,
            src: None,
            entries: Vec::new(),
            ops: Vec::new(),
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self.state, State::Done)
    }

    /// Tokens consumed since the last completed tuple.
    pub fn pending(&self) -> usize {
        match self.state {
            State::Start | State::Done | State::Failed => 0,
            _ => self.index - self.start,
        }
    }

    pub fn push(&mut self, tok: &Token) -> Result<RelStep, SyntaxError> {
        let index = self.index;
        let state = std::mem::replace(&mut self.state, State::Failed);
        let result = self.step(state, tok, index);
        if result.is_err() {
            self.state = State::Failed;
        }
        self.index += 1;
        result
    }

    fn step(&mut self, state: State, tok: &Token, index: usize) -> Result<RelStep, SyntaxError> {
        use Special as S;
        let unexpected = |expected: &[Expected]| Err(SyntaxError::unexpected(index, tok, expected));
        let op = tok.special().and_then(Special::as_op);
        match state {
            State::Start => {
                self.start = index;
                match tok {
                    Token::Piece(p) if p.is_word_start() => {
                        self.state = State::Src(vec![p.text().to_string()]);
                        Ok(RelStep::Pending)
                    }
                    Token::Special(S::NoSource) => {
                        self.src = Some(SrcSlot::NoSource);
                        self.state = State::NeedOps;
                        Ok(RelStep::Pending)
                    }
                    Token::Special(S::EndOfStream) => {
                        self.state = State::Done;
                        Ok(RelStep::End)
                    }
                    _ => unexpected(&[Expected::SourceWord, Expected::NoSource, Expected::EndOfStream]),
                }
            }
            State::Src(mut pieces) => match (tok, op) {
                (Token::Piece(p), _) if !p.is_word_start() => {
                    pieces.push(p.text().to_string());
                    self.state = State::Src(pieces);
                    Ok(RelStep::Pending)
                }
                (_, Some(op)) => {
                    self.src = Some(SrcSlot::Word(word(pieces)));
                    self.push_op(op, index)?;
                    self.state = State::Ops;
                    Ok(RelStep::Pending)
                }
                _ => unexpected(&[Expected::Continuation, Expected::Op]),
            },
            State::NeedOps => match op {
                Some(op) => {
                    self.push_op(op, index)?;
                    self.state = State::Ops;
                    Ok(RelStep::Pending)
                }
                None => unexpected(&[Expected::Op]),
            },
            State::Ops => match (tok, op) {
                (_, Some(op)) => {
                    self.push_op(op, index)?;
                    self.state = State::Ops;
                    Ok(RelStep::Pending)
                }
                (Token::Piece(p), _) if p.is_word_start() => {
                    self.state = State::Tgt(vec![p.text().to_string()]);
                    Ok(RelStep::Pending)
                }
                (Token::Special(S::NoTarget), _) => {
                    self.close_entry(None);
                    self.state = State::AfterNoTgt;
                    Ok(RelStep::Pending)
                }
                _ => unexpected(&[Expected::Op, Expected::TargetWord, Expected::NoTarget]),
            },
            State::Tgt(mut pieces) => match (tok, op) {
                (Token::Piece(p), _) if !p.is_word_start() => {
                    pieces.push(p.text().to_string());
                    self.state = State::Tgt(pieces);
                    Ok(RelStep::Pending)
                }
                (_, Some(op)) => {
                    self.close_entry(Some(word(pieces)));
                    self.push_op(op, index)?;
                    self.state = State::Ops;
                    Ok(RelStep::Pending)
                }
                (Token::Special(S::EndOfOps), _) => {
                    self.close_entry(Some(word(pieces)));
                    Ok(self.close_tuple(index))
                }
                _ => unexpected(&[Expected::Continuation, Expected::Op, Expected::EndOfOps]),
            },
            State::AfterNoTgt => match (tok, op) {
                (_, Some(op)) => {
                    self.push_op(op, index)?;
                    self.state = State::Ops;
                    Ok(RelStep::Pending)
                }
                (Token::Special(S::EndOfOps), _) => Ok(self.close_tuple(index)),
                _ => unexpected(&[Expected::Op, Expected::EndOfOps]),
            },
            State::Done | State::Failed => Err(SyntaxError {
                index,
                found: Some(tok.to_string()),
                kind: SyntaxErrorKind::TrailingAfterEnd,
            }),
        }
    }

    fn push_op(&mut self, op: Op, index: usize) -> Result<(), SyntaxError> {
        let mixed = match op {
            Op::NoOps => !self.ops.is_empty(),
            _ => self.ops.iter().any(|&(_, o)| o == Op::NoOps),
        };
        if mixed {
            return Err(SyntaxError {
                index,
                found: Some(op.token().to_string()),
                kind: SyntaxErrorKind::MixedNoOps,
            });
        }
        self.ops.push((index, op));
        Ok(())
    }

    fn close_entry(&mut self, target: Option<Word>) {
        let ops = std::mem::take(&mut self.ops);
        self.entries.push(RelEntry { ops, target });
    }

    fn close_tuple(&mut self, index: usize) -> RelStep {
        let t = RelTuple {
            tuple: self.tuple,
            src: self.src.take().expect("source set before ops"),
            entries: std::mem::take(&mut self.entries),
            span: self.start..index + 1,
        };
        self.tuple += 1;
        self.state = State::Start;
        RelStep::Tuple(t)
    }

    pub fn finish(&self) -> Result<(), SyntaxError> {
        let expected = match &self.state {
            State::Done => return Ok(()),
            State::Failed => Vec::new(),
            State::Start => vec![Expected::SourceWord, Expected::NoSource, Expected::EndOfStream],
            State::Src(_) => vec![Expected::Continuation, Expected::Op],
            State::NeedOps => vec![Expected::Op],
            State::Ops => vec![Expected::Op, Expected::TargetWord, Expected::NoTarget],
            State::Tgt(_) => vec![Expected::Continuation, Expected::Op, Expected::EndOfOps],
            State::AfterNoTgt => vec![Expected::Op, Expected::EndOfOps],
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

/// Runs a relative stream through the buffer machine, reporting each applied
/// instruction to `observe`. Returns the final state and whether `[EOS]` was seen.
pub fn run_relative(
    tokens: &[Token],
    mut observe: impl FnMut(&Edit, &BufferState),
) -> Result<(BufferState, bool, usize), DecodeError> {
    let mut parser = RelParser::new();
    let mut state = BufferState::new();
    for tok in tokens {
        if let RelStep::Tuple(t) = parser.push(tok)? {
            t.execute(&mut state, &mut observe)?;
        }
    }
    Ok((state, parser.is_done(), parser.pending()))
}

/// Restores transcription and translation from a relative stream. A stream
/// without `[EOS]` decodes its complete tuples and is reported as truncated.
pub fn decode_relative(tokens: &[Token]) -> Result<Decoded, DecodeError> {
    let (state, complete, pending) = run_relative(tokens, |_, _| {})?;
    let mut diagnostics = Vec::new();
    if !complete {
        diagnostics.push(Diagnostic::Truncated { pending });
    }
    Ok(Decoded {
        transcription: state.transcription(),
        translation: state.translation(),
        complete,
        diagnostics,
    })
}

/// One line per applied instruction: instruction, head positions, buffers.
pub fn trace_relative(tokens: &[Token]) -> (Vec<String>, Result<Decoded, DecodeError>) {
    let mut lines = Vec::new();
    let result = run_relative(tokens, |edit, st| {
        lines.push(format!(
            "{edit}\thead_s={} head_t={}\t{}",
            st.source_head(),
            st.target_head(),
            st.render()
        ));
    })
    .map(|(state, complete, pending)| Decoded {
        transcription: state.transcription(),
        translation: state.translation(),
        complete,
        diagnostics: if complete {
            Vec::new()
        } else {
            vec![Diagnostic::Truncated { pending }]
        },
    });
    (lines, result)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelParse {
    pub tuples: Vec<Range<usize>>,
}

/// Grammar check plus jump feasibility: every jump must find a marker when
/// the stream is executed.
pub fn validate_relative(tokens: &[Token]) -> Result<RelParse, SyntaxError> {
    let mut parser = RelParser::new();
    let mut state = BufferState::new();
    let mut tuples = Vec::new();
    for tok in tokens {
        if let RelStep::Tuple(t) = parser.push(tok)? {
            t.execute(&mut state, |_, _| {}).map_err(|e| SyntaxError {
                index: e.index,
                found: Some(e.op.token().to_string()),
                kind: SyntaxErrorKind::UnsatisfiableJump(e.op),
            })?;
            tuples.push(t.span);
        }
    }
    parser.finish()?;
    Ok(RelParse { tuples })
}

/// When the encoder places markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MarkerPolicy {
    /// Set a marker only when a gap being left (or fenced off) has none yet.
    #[default]
    Lazy,
    /// Always set a marker when leaving an unfinished gap or fencing a left sub-gap.
    Eager,
}

impl std::str::FromStr for MarkerPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<MarkerPolicy, String> {
        match s {
            "lazy" => Ok(MarkerPolicy::Lazy),
            "eager" => Ok(MarkerPolicy::Eager),
            other => Err(format!("unknown marker policy `{other}` (expected lazy or eager)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shadow {
    Word(usize),
    Marker,
}

/// Encoder-side simulation of the translation buffer, one cell per word.
struct Planner {
    cells: Vec<Shadow>,
    head: usize,
    len: usize,
    policy: MarkerPolicy,
}

impl Planner {
    fn pos_at(&self, i: usize) -> usize {
        match self.cells[i] {
            Shadow::Word(p) => p,
            Shadow::Marker => unreachable!("region bounds are word cells"),
        }
    }

    /// Maximal run of marker cells around `head`, and the open gap of
    /// target positions it stands for.
    fn head_region(&self) -> (Range<usize>, Range<usize>) {
        let mut lo = self.head;
        while lo > 0 && self.cells[lo - 1] == Shadow::Marker {
            lo -= 1;
        }
        let mut hi = self.head;
        while hi < self.cells.len() && self.cells[hi] == Shadow::Marker {
            hi += 1;
        }
        let left = if lo > 0 { self.pos_at(lo - 1) } else { 0 };
        let right = if hi < self.cells.len() {
            self.pos_at(hi)
        } else {
            self.len + 1
        };
        (lo..hi, left + 1..right)
    }

    /// Cell range between the written neighbours of position `p`.
    fn region_of(&self, p: usize) -> Range<usize> {
        let mut lo = 0;
        let mut hi = self.cells.len();
        for (i, c) in self.cells.iter().enumerate() {
            if let Shadow::Word(q) = *c {
                if q < p {
                    lo = i + 1;
                } else {
                    hi = i;
                    break;
                }
            }
        }
        lo..hi
    }

    fn has_marker(&self, r: Range<usize>) -> bool {
        self.cells[r].contains(&Shadow::Marker)
    }

    fn set_marker(&mut self, ops: &mut Vec<Op>) {
        self.cells.insert(self.head, Shadow::Marker);
        self.head += 1;
        ops.push(Op::SetMarker);
    }

    /// Operations that place the head where position `p` belongs.
    fn plan(&mut self, p: usize) -> Vec<Op> {
        let mut ops = Vec::new();
        let eager = self.policy == MarkerPolicy::Eager;
        let (region, gap) = self.head_region();

        let fence_from = if gap.contains(&p) {
            region.start
        } else {
            // leaving the current gap: keep it reachable if it is unfinished
            if !gap.is_empty() && (eager || !self.has_marker(region.clone())) {
                self.set_marker(&mut ops);
            }
            let target = self.region_of(p);
            debug_assert!(self.has_marker(target.clone()), "unreachable gap for position {p}");
            if self.head > target.end {
                let crossed = (target.end..self.head.saturating_sub(1))
                    .filter(|&m| self.cells[m] == Shadow::Marker)
                    .count();
                ops.extend(std::iter::repeat_n(Op::JumpBackward, crossed + 1));
                self.head = target.end;
            } else {
                let first = (target.start..target.end)
                    .find(|&m| self.cells[m] == Shadow::Marker)
                    .expect("target gap holds a marker");
                let crossed = (self.head..first)
                    .filter(|&m| self.cells[m] == Shadow::Marker)
                    .count();
                ops.extend(std::iter::repeat_n(Op::JumpForward, crossed + 1));
                self.head = first + 1;
            }
            target.start
        };

        // fence off the unwritten positions left of p
        let (_, gap) = self.head_region();
        if p != gap.start && (eager || !self.has_marker(fence_from..self.head)) {
            self.set_marker(&mut ops);
        }

        self.cells.insert(self.head, Shadow::Word(p));
        self.head += 1;
        ops
    }
}

/// Compiles tuples into a relative stream using the lazy marker policy.
pub fn encode_relative(tuples: &TupleSequence) -> Vec<Token> {
    encode_relative_with(tuples, MarkerPolicy::Lazy)
}

pub fn encode_relative_with(tuples: &TupleSequence, policy: MarkerPolicy) -> Vec<Token> {
    let mut planner = Planner {
        cells: Vec::new(),
        head: 0,
        len: tuples.target_len(),
        policy,
    };
    let mut out = Vec::new();
    for t in tuples.tuples() {
        out.extend(t.src.collapse());
        for e in &t.targets {
            match e {
                TgtSlot::NoTarget => {
                    out.push(Op::NoOps.token());
                    out.push(Special::NoTarget.into());
                }
                TgtSlot::Word { word, pos } => {
                    let ops = planner.plan(*pos);
                    if ops.is_empty() {
                        out.push(Op::NoOps.token());
                    } else {
                        out.extend(ops.into_iter().map(Op::token));
                    }
                    out.extend(word.collapse());
                }
            }
        }
        out.push(Special::EndOfOps.into());
    }
    out.push(Special::EndOfStream.into());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::{parse_tokens, render_sentence, render_tokens, OpTuple};

    fn toks(s: &str) -> Vec<Token> {
        parse_tokens(s).unwrap()
    }

    fn piece(s: &str) -> Piece {
        Piece::new(s, true).unwrap()
    }

    fn seq(layout: &[(&str, &[(&str, usize)])]) -> TupleSequence {
        TupleSequence::new(
            layout.iter()
                .map(|(s, ts)| OpTuple {
                    src: if *s == "[NO_SRC]" {
                        SrcSlot::NoSource
                    } else {
                        SrcSlot::Word(Word::atomic(*s).unwrap())
                    },
                    targets: ts
                        .iter()
                        .map(|&(t, p)| {
                            if t == "[NO_TGT]" {
                                TgtSlot::NoTarget
                            } else {
                                TgtSlot::Word {
                                    word: Word::atomic(t).unwrap(),
                                    pos: p,
                                }
                            }
                        })
                        .collect(),
                })
                .collect(),
        )
        .unwrap()
    }

    fn words_of(state: &BufferState) -> String {
        render_sentence(&state.translation())
    }

    #[test]
    fn apply_op_examples() {
        let st = BufferState::new()
            .applied(&Edit::Op(Op::SetMarker))
            .unwrap()
            .applied(&Edit::InsertTarget(piece("x")))
            .unwrap();
        assert_eq!(st.cells()[0], Cell::Marker);
        assert_eq!(st.target_head(), 2);
        assert_eq!(st.render(), "S=[] T=[* x |]");

        let st = st
            .applied(&Edit::Op(Op::JumpBackward))
            .unwrap()
            .applied(&Edit::InsertTarget(piece("y")))
            .unwrap();
        assert_eq!(st.render(), "S=[] T=[* y | x]");
        assert_eq!(words_of(&st), "y x");

        assert_eq!(
            BufferState::new().applied(&Edit::Op(Op::JumpBackward)),
            Err(NoMarker(Op::JumpBackward))
        );
        assert_eq!(
            BufferState::new().applied(&Edit::Op(Op::JumpForward)),
            Err(NoMarker(Op::JumpForward))
        );
    }

    #[test]
    fn jump_directions() {
        // T = [* a * b], head at end
        let mut st = BufferState::new();
        for e in [
            Edit::Op(Op::SetMarker),
            Edit::InsertTarget(piece("a")),
            Edit::Op(Op::SetMarker),
            Edit::InsertTarget(piece("b")),
        ] {
            st.apply(&e).unwrap();
        }
        st.apply(&Edit::Op(Op::JumpBackward)).unwrap();
        assert_eq!(st.target_head(), 3);
        st.apply(&Edit::Op(Op::JumpBackward)).unwrap();
        assert_eq!(st.target_head(), 1);
        // a JB right after a marker does not land on that same marker
        assert!(st.apply(&Edit::Op(Op::JumpBackward)).is_err());
        st.apply(&Edit::Op(Op::JumpForward)).unwrap();
        assert_eq!(st.target_head(), 3);
        assert!(st.apply(&Edit::Op(Op::JumpForward)).is_err());
        assert_eq!(st.marker_count(), 2);
        st.apply(&Edit::Op(Op::NoOps)).unwrap();
        assert_eq!(st.target_head(), 3);
    }

    #[test]
    fn decode_examples() {
        let d = decode_relative(&toks("a [NO_OPS] x [EOP] b [NO_OPS] y [EOP] [EOS]")).unwrap();
        assert_eq!(render_sentence(&d.transcription), "a b");
        assert_eq!(render_sentence(&d.translation), "x y");

        let d = decode_relative(&toks("a [SM] x [EOP] b [JB] y [EOP] [EOS]")).unwrap();
        assert_eq!(render_sentence(&d.transcription), "a b");
        assert_eq!(render_sentence(&d.translation), "y x");
        assert!(d.complete);

        let d = decode_relative(&toks("a [NO_OPS] [NO_TGT] [EOP] [EOS]")).unwrap();
        assert_eq!(render_sentence(&d.transcription), "a");
        assert!(d.translation.is_empty());
    }

    #[test]
    fn decode_interpreter_error_carries_tuple() {
        let err = decode_relative(&toks("a [NO_OPS] x [EOP] b [JB] y [EOP] [EOS]")).unwrap_err();
        assert_eq!(
            err,
            DecodeError::Interpreter(InterpreterError {
                tuple: 1,
                index: 5,
                op: Op::JumpBackward
            })
        );
    }

    #[test]
    fn decode_truncated() {
        let d = decode_relative(&toks("a [SM] x [EOP] b [JB] y [EOP] c [NO_OPS]")).unwrap();
        assert!(!d.complete);
        assert_eq!(render_sentence(&d.translation), "y x");
        assert_eq!(d.diagnostics, vec![Diagnostic::Truncated { pending: 2 }]);
    }

    #[test]
    fn encode_examples() {
        let mono = seq(&[("a", &[("x", 1)]), ("b", &[("y", 2)])]);
        assert_eq!(
            render_tokens(&encode_relative(&mono)),
            "a [NO_OPS] x [EOP] b [NO_OPS] y [EOP] [EOS]"
        );
        let swap = seq(&[("a", &[("x", 2)]), ("b", &[("y", 1)])]);
        assert_eq!(
            render_tokens(&encode_relative(&swap)),
            "a [SM] x [EOP] b [JB] y [EOP] [EOS]"
        );
        let rot = seq(&[("a", &[("x", 2)]), ("b", &[("y", 3)]), ("c", &[("z", 1)])]);
        let s = encode_relative(&rot);
        assert_eq!(
            render_tokens(&s),
            "a [SM] x [EOP] b [NO_OPS] y [EOP] c [JB] z [EOP] [EOS]"
        );
        assert_eq!(render_sentence(&decode_relative(&s).unwrap().translation), "z x y");
    }

    #[test]
    fn encode_forward_jump() {
        // 3, 1, 2: only a backward jump is needed
        let t = seq(&[("a", &[("x", 3)]), ("b", &[("y", 1)]), ("c", &[("z", 2)])]);
        let s = encode_relative(&t);
        assert_eq!(render_sentence(&decode_relative(&s).unwrap().translation), "y z x");

        // 2, 4, 1, 3: after writing 1 the head must jump forward to the gap before 4
        let t = seq(&[
            ("a", &[("w", 2)]),
            ("b", &[("x", 4)]),
            ("c", &[("y", 1)]),
            ("d", &[("z", 3)]),
        ]);
        let s = encode_relative(&t);
        assert!(s.contains(&Op::JumpForward.token()), "{}", render_tokens(&s));
        assert_eq!(render_sentence(&decode_relative(&s).unwrap().translation), "y w z x");
        assert!(validate_relative(&s).is_ok());
    }

    #[test]
    fn eager_policy_round_trips() {
        let t = seq(&[
            ("a", &[("w", 2), ("v", 5)]),
            ("b", &[("x", 4)]),
            ("[NO_SRC]", &[("u", 6)]),
            ("c", &[("y", 1)]),
            ("d", &[("z", 3)]),
            ("e", &[("[NO_TGT]", 0)]),
        ]);
        let lazy = encode_relative_with(&t, MarkerPolicy::Lazy);
        let eager = encode_relative_with(&t, MarkerPolicy::Eager);
        let count = |s: &[Token]| s.iter().filter(|t| **t == Op::SetMarker.token()).count();
        assert!(count(&eager) >= count(&lazy));
        for s in [lazy, eager] {
            let d = decode_relative(&s).unwrap();
            assert_eq!(render_sentence(&d.translation), "y w z x v u");
            assert_eq!(render_sentence(&d.transcription), "a b c d e");
        }
    }

    #[test]
    fn validate_examples() {
        let p = validate_relative(&toks("a [NO_OPS] x [EOP] [EOS]")).unwrap();
        assert_eq!(p.tuples, vec![0..4]);

        let e = validate_relative(&toks("a x [EOP] [EOS]")).unwrap_err();
        assert_eq!(e.index, 1);

        let e = validate_relative(&toks("a [JB] x [EOP] [EOS]")).unwrap_err();
        assert_eq!(e.index, 1);
        assert_eq!(e.kind, SyntaxErrorKind::UnsatisfiableJump(Op::JumpBackward));
    }

    #[test]
    fn validate_rejections() {
        let cases = [
            ("a [NO_OPS] [SM] x [EOP] [EOS]", 2),
            ("a [SM] [NO_OPS] x [EOP] [EOS]", 2),
            ("a [NO_OPS] [NO_OPS] x [EOP] [EOS]", 2),
            ("a [NO_OPS] x [EOP]", 4),
            ("a [NO_OPS] x [EOS]", 3),
            ("[NO_SRC] x [EOP] [EOS]", 1),
            ("a [NO_OPS] x y [EOP] [EOS]", 3),
            ("a [EOP] [EOS]", 1),
            ("a [NO_OPS] x [EOP] [EOS] [EOS]", 5),
            ("a [NO_OPS] x [1] [EOP] [EOS]", 3),
            ("a [SM] x [EOP] b [JF] y [EOP] [EOS]", 5),
        ];
        for (s, idx) in cases {
            let e = validate_relative(&toks(s)).unwrap_err();
            assert_eq!(e.index, idx, "{s}: {e}");
        }
    }

    #[test]
    fn trace_lines() {
        let (lines, d) = trace_relative(&toks("a [SM] x [EOP] b [JB] y [EOP] [EOS]"));
        assert!(d.is_ok());
        assert_eq!(
            lines,
            vec![
                "INSERT-s(a)\thead_s=1 head_t=0\tS=[a] T=[|]",
                "[SM]\thead_s=1 head_t=1\tS=[a] T=[* |]",
                "INSERT-t(x)\thead_s=1 head_t=2\tS=[a] T=[* x |]",
                "INSERT-s(b)\thead_s=2 head_t=2\tS=[a b] T=[* x |]",
                "[JB]\thead_s=2 head_t=1\tS=[a b] T=[* | x]",
                "INSERT-t(y)\thead_s=2 head_t=2\tS=[a b] T=[* y | x]",
            ]
        );
    }

    #[test]
    fn emission_order_tracks_words() {
        let (st, _, _) = run_relative(
            &toks("a [SM] x ##x [EOP] b [JB] y [EOP] [EOS]"),
            |_, _| {},
        )
        .unwrap();
        assert_eq!(st.emission_order(), vec![1, 0]);
    }
}
