//! Token-at-a-time restoration with partial hypotheses.
//!
//! A [`StreamSession`] runs the same parsers and buffers as the offline
//! decoders, but takes a snapshot every time a unit of work fires: each
//! `tgt [n]` group for the absolute encoding, each `[EOP]` for the relative
//! one.

use serde::Serialize;
use thiserror::Error;

use crate::absolute::{AbsParser, AbsStep, RestoreBuffers};
use crate::error::{InterpreterError, SyntaxError};
use crate::metrics::LatencyTrace;
use crate::relative::{BufferState, Cell, RelParser, RelStep};
use crate::token::{render_surface, Token, Word};
use crate::{Decoded, Variant};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Interpreter(#[from] InterpreterError),
    #[error("session is closed (ended or poisoned)")]
    Closed,
    #[error("{tokens} tokens but {timestamps} timestamps")]
    TimestampMismatch { tokens: usize, timestamps: usize },
}

/// A translation-buffer cell as seen mid-stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartialCell {
    Word(Word),
    /// Relative encoding marker.
    Marker,
    /// Absolute encoding position not yet written.
    Placeholder,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub token_index: usize,
    pub source: Vec<Word>,
    pub target: Vec<PartialCell>,
    pub time_ms: Option<u64>,
}

impl Snapshot {
    /// Target words with markers and placeholders elided.
    pub fn translation(&self) -> Vec<Word> {
        self.target
            .iter()
            .filter_map(|c| match c {
                PartialCell::Word(w) => Some(w.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn to_record(&self) -> SnapshotRecord {
        SnapshotRecord {
            index: self.token_index,
            s: self.source.iter().map(Word::surface).collect(),
            t: self.translation().iter().map(Word::surface).collect(),
        }
    }
}

/// JSON-lines form of a snapshot: `{"index":..,"S":[..],"T":[..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SnapshotRecord {
    pub index: usize,
    #[serde(rename = "S")]
    pub s: Vec<String>,
    #[serde(rename = "T")]
    pub t: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeedEvent {
    None,
    TupleCompleted,
    StreamEnded,
    Error(StreamError),
}

#[derive(Debug, Clone)]
enum Machine {
    Absolute {
        parser: AbsParser,
        buffers: RestoreBuffers,
    },
    Relative {
        parser: RelParser,
        state: BufferState,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Open,
    Ended,
    Poisoned,
}

#[derive(Debug, Clone)]
pub struct StreamSession {
    variant: Variant,
    machine: Machine,
    snapshots: Vec<Snapshot>,
    timestamps: Vec<u64>,
    timed: bool,
    fed: usize,
    status: Status,
    /// Source word count at the moment each target word was emitted.
    delays: Vec<usize>,
}

impl StreamSession {
    pub fn new(variant: Variant, max_tgt_len: usize) -> StreamSession {
        let machine = match variant {
            Variant::Absolute => Machine::Absolute {
                parser: AbsParser::new(max_tgt_len),
                buffers: RestoreBuffers::new(),
            },
            Variant::Relative => Machine::Relative {
                parser: RelParser::new(),
                state: BufferState::new(),
            },
        };
        StreamSession {
            variant,
            machine,
            snapshots: Vec::new(),
            timestamps: Vec::new(),
            timed: false,
            fed: 0,
            status: Status::Open,
            delays: Vec::new(),
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn feed(&mut self, token: &Token) -> FeedEvent {
        if self.status != Status::Open {
            return FeedEvent::Error(StreamError::Closed);
        }
        let index = self.fed;
        self.fed += 1;
        match self.step(token, index) {
            Ok(ev) => {
                if ev == FeedEvent::StreamEnded {
                    self.status = Status::Ended;
                }
                ev
            }
            Err(e) => {
                self.status = Status::Poisoned;
                FeedEvent::Error(e)
            }
        }
    }

    /// Feeds a token that arrived at `time_ms`.
    pub fn feed_at(&mut self, token: &Token, time_ms: u64) -> FeedEvent {
        if self.status == Status::Open {
            self.timed = true;
            self.timestamps.push(time_ms);
        }
        self.feed(token)
    }

    fn step(&mut self, token: &Token, index: usize) -> Result<FeedEvent, StreamError> {
        let fired = match &mut self.machine {
            Machine::Absolute { parser, buffers } => match parser.push(token)? {
                AbsStep::Pending => false,
                AbsStep::End => return Ok(FeedEvent::StreamEnded),
                AbsStep::Group(g) => {
                    buffers.apply(&g);
                    if g.target.is_some() {
                        self.delays.push(buffers.source().len());
                    }
                    true
                }
            },
            Machine::Relative { parser, state } => match parser.push(token)? {
                RelStep::Pending => false,
                RelStep::End => return Ok(FeedEvent::StreamEnded),
                RelStep::Tuple(t) => {
                    t.execute(state, |_, _| {})?;
                    let src_words = state.transcription().len();
                    let emitted = t.entries.iter().filter(|e| e.target.is_some()).count();
                    self.delays.extend(std::iter::repeat_n(src_words, emitted));
                    true
                }
            },
        };
        if !fired {
            return Ok(FeedEvent::None);
        }
        let snap = Snapshot {
            token_index: index,
            source: self.source(),
            target: self.cells(),
            time_ms: self.timestamps.get(index).copied().filter(|_| self.timed),
        };
        self.snapshots.push(snap);
        Ok(FeedEvent::TupleCompleted)
    }

    fn source(&self) -> Vec<Word> {
        match &self.machine {
            Machine::Absolute { buffers, .. } => buffers.source().to_vec(),
            Machine::Relative { state, .. } => state.transcription(),
        }
    }

    fn cells(&self) -> Vec<PartialCell> {
        match &self.machine {
            Machine::Absolute { buffers, .. } => buffers
                .target_cells()
                .iter()
                .map(|c| match c {
                    Some(w) => PartialCell::Word(w.clone()),
                    None => PartialCell::Placeholder,
                })
                .collect(),
            Machine::Relative { state, .. } => {
                let mut out = Vec::new();
                let mut cur: Option<(usize, Vec<String>)> = None;
                for c in state.cells() {
                    match c {
                        Cell::Marker => {
                            if let Some((_, pieces)) = cur.take() {
                                out.push(PartialCell::Word(Word::new(pieces).expect("pieces")));
                            }
                            out.push(PartialCell::Marker);
                        }
                        Cell::Piece { piece, word } => match &mut cur {
                            Some((id, pieces)) if *id == *word && !piece.is_word_start() => {
                                pieces.push(piece.text().to_string());
                            }
                            _ => {
                                if let Some((_, pieces)) = cur.take() {
                                    out.push(PartialCell::Word(Word::new(pieces).expect("pieces")));
                                }
                                cur = Some((*word, vec![piece.text().to_string()]));
                            }
                        },
                    }
                }
                if let Some((_, pieces)) = cur {
                    out.push(PartialCell::Word(Word::new(pieces).expect("pieces")));
                }
                out
            }
        }
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn tokens_fed(&self) -> usize {
        self.fed
    }

    pub fn is_ended(&self) -> bool {
        self.status == Status::Ended
    }

    pub fn is_poisoned(&self) -> bool {
        self.status == Status::Poisoned
    }

    pub fn timestamps(&self) -> Option<&[u64]> {
        self.timed.then_some(self.timestamps.as_slice())
    }

    /// Display-form translation prefix after each snapshot.
    pub fn partial_hypotheses(&self) -> Vec<(usize, String)> {
        self.snapshots
            .iter()
            .map(|s| (s.token_index, render_surface(&s.translation())))
            .collect()
    }

    /// Current transcription and translation (markers and placeholders dropped).
    pub fn output(&self) -> Decoded {
        let (transcription, translation) = match &self.machine {
            Machine::Absolute { buffers, .. } => (buffers.source().to_vec(), buffers.translation()),
            Machine::Relative { state, .. } => (state.transcription(), state.translation()),
        };
        Decoded {
            transcription,
            translation,
            complete: self.is_ended(),
            diagnostics: Vec::new(),
        }
    }

    /// Source words available when each target word was emitted, in emission order.
    pub fn latency_trace(&self) -> LatencyTrace {
        let src_len = self.source().len();
        LatencyTrace {
            delays: self.delays.clone(),
            src_len,
            tgt_len: self.delays.len(),
        }
    }
}

/// Feeds a whole stream into a fresh session. Timestamps, when given, must
/// pair one-to-one with tokens.
pub fn replay(
    tokens: &[Token],
    timestamps: Option<&[u64]>,
    variant: Variant,
    max_tgt_len: usize,
) -> Result<StreamSession, (usize, StreamError)> {
    if let Some(ts) = timestamps {
        if ts.len() != tokens.len() {
            return Err((
                0,
                StreamError::TimestampMismatch {
                    tokens: tokens.len(),
                    timestamps: ts.len(),
                },
            ));
        }
    }
    let mut session = StreamSession::new(variant, max_tgt_len);
    for (i, tok) in tokens.iter().enumerate() {
        let ev = match timestamps {
            Some(ts) => session.feed_at(tok, ts[i]),
            None => session.feed(tok),
        };
        if let FeedEvent::Error(e) = ev {
            return Err((i, e));
        }
    }
    Ok(session)
}
