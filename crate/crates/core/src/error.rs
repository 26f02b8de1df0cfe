use std::fmt;

use thiserror::Error;

use crate::token::{Op, Token, TokenError};

/// What a parser would have accepted at the failing index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Expected {
    SourceWord,
    NoSource,
    TargetWord,
    NoTarget,
    Continuation,
    Blank,
    Position,
    NoPosition,
    Op,
    EndOfOps,
    EndOfStream,
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expected::SourceWord => "source word",
            Expected::NoSource => "[NO_SRC]",
            Expected::TargetWord => "target word",
            Expected::NoTarget => "[NO_TGT]",
            Expected::Continuation => "continuation piece",
            Expected::Blank => "[BL]",
            Expected::Position => "[n]",
            Expected::NoPosition => "[-1]",
            Expected::Op => "[SM]|[JF]|[JB]|[NO_OPS]",
            Expected::EndOfOps => "[EOP]",
            Expected::EndOfStream => "[EOS]",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntaxErrorKind {
    Unexpected { expected: Vec<Expected> },
    /// Stream stopped before `[EOS]`.
    UnexpectedEnd { expected: Vec<Expected> },
    TrailingAfterEnd,
    PositionOutOfRange { pos: usize, max: usize },
    /// `[NO_OPS]` combined with other operations in one op-list.
    MixedNoOps,
    /// A jump with no marker in its direction.
    UnsatisfiableJump(Op),
    BadToken(TokenError),
}

/// First grammar violation, by token index.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct SyntaxError {
    pub index: usize,
    pub found: Option<String>,
    pub kind: SyntaxErrorKind,
}

impl SyntaxError {
    pub(crate) fn unexpected(index: usize, found: &Token, expected: &[Expected]) -> SyntaxError {
        SyntaxError {
            index,
            found: Some(found.to_string()),
            kind: SyntaxErrorKind::Unexpected {
                expected: expected.to_vec(),
            },
        }
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "token {}", self.index)?;
        if let Some(found) = &self.found {
            write!(f, " `{found}`")?;
        }
        match &self.kind {
            SyntaxErrorKind::Unexpected { expected } | SyntaxErrorKind::UnexpectedEnd { expected } => {
                if self.found.is_none() {
                    f.write_str(": unexpected end of stream")?;
                }
                f.write_str(": expected one of {")?;
                for (i, e) in expected.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str("}")
            }
            SyntaxErrorKind::TrailingAfterEnd => f.write_str(": token after [EOS]"),
            SyntaxErrorKind::PositionOutOfRange { pos, max } => {
                write!(f, ": position {pos} exceeds maximum target length {max}")
            }
            SyntaxErrorKind::MixedNoOps => f.write_str(": [NO_OPS] mixed with other operations"),
            SyntaxErrorKind::UnsatisfiableJump(op) => {
                write!(f, ": {} has no marker to jump to", op.token())
            }
            SyntaxErrorKind::BadToken(e) => write!(f, ": {e}"),
        }
    }
}

/// A write-head operation that cannot be executed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("tuple {tuple}, token {index}: {op:?} has no marker to jump to")]
pub struct InterpreterError {
    pub tuple: usize,
    pub index: usize,
    pub op: Op,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Interpreter(#[from] InterpreterError),
}

impl DecodeError {
    pub fn index(&self) -> usize {
        match self {
            DecodeError::Syntax(e) => e.index,
            DecodeError::Interpreter(e) => e.index,
        }
    }
}

/// Non-fatal observations made while decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    /// An absolute position was written twice; the later word won.
    DuplicatePosition { pos: usize, index: usize },
    /// Absolute positions below the highest written one were never filled.
    UnfilledPositions(Vec<usize>),
    /// Stream ended without `[EOS]`; `pending` tokens were left unprocessed.
    Truncated { pending: usize },
}
