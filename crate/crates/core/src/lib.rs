//! Operation-sequence codecs for joint transcription and translation.
//!
//! A word-aligned sentence pair is turned into a flat token stream that
//! interleaves source words, target words and re-ordering instructions, so
//! that a left-to-right producer can emit target words in source order while
//! the reader still restores the correct target order. Two encodings are
//! provided:
//!
//! * [`absolute`]: every target word is followed by its final position `[n]`.
//! * [`relative`]: a write-head moves between markers (`[SM]`, `[JF]`, `[JB]`).
//!
//! [`align`] builds the shared [`token::TupleSequence`] from parallel text and
//! Pharaoh alignments, [`streaming`] replays streams token by token with
//! partial hypotheses, [`metrics`] scores output, and [`pipeline`] wires the
//! pieces into the batch commands of the `opseq` binary.
//!
//! ```
//! use opseq::align::CorpusRecord;
//! use opseq::token::{render_sentence, render_tokens};
//! use opseq::{build_tuples, decode, encode, parse_stream, Variant, DEFAULT_MAX_TGT_LEN};
//!
//! let pair = CorpusRecord::from_tsv("a b\ty x\t0-1 1-0", 1)?.to_pair(1)?;
//! let stream = encode(&build_tuples(&pair), Variant::Relative);
//! assert_eq!(render_tokens(&stream), "a [SM] x [EOP] b [JB] y [EOP] [EOS]");
//!
//! let tokens = parse_stream("a [SM] x [EOP] b [JB] y [EOP] [EOS]")?;
//! let out = decode(&tokens, Variant::Relative, DEFAULT_MAX_TGT_LEN)?;
//! assert_eq!(render_sentence(&out.translation), "y x");
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod absolute;
pub mod align;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod relative;
pub mod streaming;
pub mod synth;
pub mod token;

use std::fmt;
use std::str::FromStr;

pub use absolute::{decode_absolute, encode_absolute, validate_absolute};
pub use align::{build_tuples, filter_record, parse_pharaoh, AlignedSentencePair, FilterConfig};
pub use error::{DecodeError, Diagnostic, InterpreterError, SyntaxError};
pub use relative::{decode_relative, encode_relative, validate_relative, MarkerPolicy};
pub use token::{Token, TupleSequence, Word};

/// Upper bound on absolute positions accepted when decoding.
pub const DEFAULT_MAX_TGT_LEN: usize = 512;

/// Which serialization a stream uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Absolute,
    Relative,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Absolute => "abs",
            Variant::Relative => "rel",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Variant, String> {
        match s {
            "abs" | "absolute" => Ok(Variant::Absolute),
            "rel" | "relative" => Ok(Variant::Relative),
            other => Err(format!("unknown variant `{other}` (expected abs or rel)")),
        }
    }
}

/// Restored transcription and translation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub transcription: Vec<Word>,
    pub translation: Vec<Word>,
    /// `false` when the stream ended before `[EOS]`.
    pub complete: bool,
    pub diagnostics: Vec<Diagnostic>,
}

/// Encodes with either variant (lazy markers for the relative one).
pub fn encode(tuples: &TupleSequence, variant: Variant) -> Vec<Token> {
    match variant {
        Variant::Absolute => encode_absolute(tuples),
        Variant::Relative => encode_relative(tuples),
    }
}

pub fn encode_with(tuples: &TupleSequence, variant: Variant, policy: MarkerPolicy) -> Vec<Token> {
    match variant {
        Variant::Absolute => encode_absolute(tuples),
        Variant::Relative => relative::encode_relative_with(tuples, policy),
    }
}

pub fn decode(tokens: &[Token], variant: Variant, max_tgt_len: usize) -> Result<Decoded, DecodeError> {
    match variant {
        Variant::Absolute => decode_absolute(tokens, max_tgt_len),
        Variant::Relative => decode_relative(tokens),
    }
}

/// Splits a serialized stream; a bad surface is reported as a syntax error
/// at its token index.
pub fn parse_stream(line: &str) -> Result<Vec<Token>, SyntaxError> {
    token::parse_tokens(line).map_err(|(index, e)| SyntaxError {
        index,
        found: line.split_whitespace().nth(index).map(str::to_string),
        kind: error::SyntaxErrorKind::BadToken(e),
    })
}

/// Validates and returns the token ranges of each tuple.
pub fn validate(
    tokens: &[Token],
    variant: Variant,
    max_tgt_len: usize,
) -> Result<Vec<std::ops::Range<usize>>, SyntaxError> {
    match variant {
        Variant::Absolute => validate_absolute(tokens, max_tgt_len).map(|p| p.tuples),
        Variant::Relative => validate_relative(tokens).map(|p| p.tuples),
    }
}
