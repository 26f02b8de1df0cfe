//! Batch commands over line-oriented UTF-8 files.
//!
//! Every command reads its inputs line by line in fixed-size chunks, works on
//! a chunk in parallel, and writes results in input order, so output is
//! byte-identical for any degree of parallelism. Per-line problems are logged
//! and skipped unless [`JobConfig::strict`] is set.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::absolute::trace_absolute;
use crate::align::{
    build_tuples, filter_record, AlignedSentencePair, CorpusRecord, FilterConfig, FilterDecision,
    IngestError,
};
use crate::metrics::{
    average_lagging, edit_counts, error_rate, opseq_stats, BleuScore, BleuStats, EditCounts,
    EvalPair, OpSeqStats, Smoothing,
};
use crate::relative::{trace_relative, MarkerPolicy};
use crate::streaming::replay;
use crate::synth::{random_pair, GenConfig};
use crate::token::{parse_sentence, render_sentence, render_tokens, Token, Word};
use crate::{
    decode, encode_with, parse_stream, validate, Decoded, SyntaxError, Variant,
    DEFAULT_MAX_TGT_LEN,
};

/// Options shared by all batch commands.
#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub variant: Variant,
    pub filter: FilterConfig,
    pub marker_policy: MarkerPolicy,
    /// Largest absolute position accepted when reading streams.
    pub max_tgt_len: usize,
    /// Abort on the first per-line error.
    pub strict: bool,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    /// Lines held in memory per parallel batch.
    pub chunk_lines: usize,
    /// Write an instruction-level dump while decoding.
    pub trace: bool,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            variant: Variant::Relative,
            filter: FilterConfig::default(),
            marker_policy: MarkerPolicy::Lazy,
            max_tgt_len: DEFAULT_MAX_TGT_LEN,
            strict: false,
            jobs: 0,
            chunk_lines: 1024,
            trace: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("input files have different line counts (first mismatch at line {line})")]
    Misaligned { line: usize },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

type Lines<'a> = Box<dyn Iterator<Item = io::Result<String>> + 'a>;

fn lines<'a>(r: impl BufRead + 'a) -> Lines<'a> {
    Box::new(r.lines())
}

pub fn open(path: &Path) -> io::Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Yields one vector per line across several line-aligned inputs.
struct Zip<'a> {
    inputs: Vec<Lines<'a>>,
    line: usize,
}

impl Iterator for Zip<'_> {
    type Item = Result<Vec<String>, PipelineError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.line += 1;
        let mut row = Vec::with_capacity(self.inputs.len());
        let mut ended = 0;
        for it in &mut self.inputs {
            match it.next() {
                Some(Ok(l)) => row.push(l),
                Some(Err(e)) => return Some(Err(e.into())),
                None => ended += 1,
            }
        }
        match ended {
            0 => Some(Ok(row)),
            n if n == self.inputs.len() => None,
            _ => Some(Err(PipelineError::Misaligned { line: self.line })),
        }
    }
}

fn zip<'a>(inputs: Vec<Lines<'a>>) -> Zip<'a> {
    Zip { inputs, line: 0 }
}

/// Runs `work` over `items` in parallel chunks and hands results to `sink`
/// in input order. Line numbers are 1-based.
fn run_chunked<T, R>(
    cfg: &JobConfig,
    items: impl Iterator<Item = Result<T, PipelineError>>,
    work: impl Fn(usize, T) -> R + Sync,
    mut sink: impl FnMut(usize, R) -> Result<(), PipelineError>,
) -> Result<(), PipelineError>
where
    T: Send,
    R: Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build()?;
    let chunk = cfg.chunk_lines.max(1);
    let mut items = items.enumerate();
    loop {
        let mut batch = Vec::with_capacity(chunk);
        for (i, item) in items.by_ref().take(chunk) {
            batch.push((i + 1, item?));
        }
        if batch.is_empty() {
            return Ok(());
        }
        let done: Vec<(usize, R)> =
            pool.install(|| batch.into_par_iter().map(|(n, t)| (n, work(n, t))).collect());
        for (n, r) in done {
            sink(n, r)?;
        }
    }
}

fn line_error(
    cfg: &JobConfig,
    errors: &mut dyn Write,
    line: usize,
    message: String,
) -> Result<(), PipelineError> {
    log::warn!("line {line}: {message}");
    writeln!(errors, "line {line}: {message}")?;
    if cfg.strict {
        return Err(PipelineError::Line { line, message });
    }
    Ok(())
}

/// Space-separated surface words; continuation pieces are joined when the
/// line parses as a segmented sentence.
fn surface_words(line: &str) -> Vec<String> {
    match parse_sentence(line) {
        Ok(words) => words.iter().map(Word::surface).collect(),
        Err(_) => line.split_whitespace().map(str::to_string).collect(),
    }
}

fn pharaoh(pair: &AlignedSentencePair) -> String {
    pair.links()
        .iter()
        .map(|(i, j)| format!("{}-{}", i - 1, j - 1))
        .collect::<Vec<_>>()
        .join(" ")
}

// ---------------------------------------------------------------- encode

/// Parallel corpus: three line-aligned files, or one `src \t tgt \t align` file.
pub enum CorpusInput<'a> {
    Parallel {
        src: Box<dyn BufRead + 'a>,
        tgt: Box<dyn BufRead + 'a>,
        align: Box<dyn BufRead + 'a>,
    },
    Tsv(Box<dyn BufRead + 'a>),
}

impl CorpusInput<'static> {
    pub fn open_parallel(src: &Path, tgt: &Path, align: &Path) -> io::Result<Self> {
        Ok(CorpusInput::Parallel {
            src: Box::new(open(src)?),
            tgt: Box::new(open(tgt)?),
            align: Box::new(open(align)?),
        })
    }

    pub fn open_tsv(path: &Path) -> io::Result<Self> {
        Ok(CorpusInput::Tsv(Box::new(open(path)?)))
    }
}

type RecordLine = Result<CorpusRecord, IngestError>;

impl<'a> CorpusInput<'a> {
    fn records(self) -> Box<dyn Iterator<Item = Result<RecordLine, PipelineError>> + 'a> {
        match self {
            CorpusInput::Parallel { src, tgt, align } => {
                Box::new(zip(vec![lines(src), lines(tgt), lines(align)]).map(|row| {
                    row.map(|mut r| {
                        let align_line = r.pop().unwrap_or_default();
                        let tgt_line = r.pop().unwrap_or_default();
                        let src_line = r.pop().unwrap_or_default();
                        Ok(CorpusRecord {
                            src_line,
                            tgt_line,
                            align_line,
                        })
                    })
                }))
            }
            CorpusInput::Tsv(r) => Box::new(
                lines(r)
                    .enumerate()
                    .map(|(i, l)| Ok(CorpusRecord::from_tsv(&l?, i + 1))),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EncodeReport {
    pub records: usize,
    pub encoded: usize,
    pub dropped: usize,
    pub errors: usize,
}

enum EncodeOutcome {
    Stream(String),
    Dropped(String),
    Failed(String),
}

/// Writes one stream per kept record to `out`. Filtered records go to
/// `drops` as `line \t reason`; unreadable records go to `errors`.
pub fn cmd_encode(
    cfg: &JobConfig,
    input: CorpusInput<'_>,
    out: &mut dyn Write,
    drops: &mut dyn Write,
    errors: &mut dyn Write,
) -> Result<EncodeReport, PipelineError> {
    let mut report = EncodeReport::default();
    run_chunked(
        cfg,
        input.records(),
        |n, rec| {
            let pair = match rec.and_then(|r| r.to_pair(n)) {
                Ok(p) => p,
                Err(e) => return EncodeOutcome::Failed(strip_line_prefix(&e.to_string(), n)),
            };
            match filter_record(&pair, &cfg.filter) {
                FilterDecision::Drop(reason) => EncodeOutcome::Dropped(reason.to_string()),
                FilterDecision::Keep => {
                    let tokens = encode_with(&build_tuples(&pair), cfg.variant, cfg.marker_policy);
                    EncodeOutcome::Stream(render_tokens(&tokens))
                }
            }
        },
        |n, outcome| {
            report.records += 1;
            match outcome {
                EncodeOutcome::Stream(s) => {
                    report.encoded += 1;
                    writeln!(out, "{s}")?;
                }
                EncodeOutcome::Dropped(reason) => {
                    report.dropped += 1;
                    log::info!("line {n}: dropped ({reason})");
                    writeln!(drops, "{n}\t{reason}")?;
                }
                EncodeOutcome::Failed(msg) => {
                    report.errors += 1;
                    line_error(cfg, errors, n, msg)?;
                }
            }
            Ok(())
        },
    )?;
    out.flush()?;
    Ok(report)
}

fn strip_line_prefix(msg: &str, n: usize) -> String {
    msg.strip_prefix(&format!("line {n}: "))
        .unwrap_or(msg)
        .to_string()
}

// ---------------------------------------------------------------- decode

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DecodeReport {
    pub lines: usize,
    pub decoded: usize,
    pub truncated: usize,
    pub invalid: usize,
}

/// Decoder outputs. `trace` receives an instruction-level dump when
/// [`JobConfig::trace`] is set.
pub struct DecodeSinks<'a> {
    pub transcription: &'a mut dyn Write,
    pub translation: &'a mut dyn Write,
    pub errors: &'a mut dyn Write,
    pub trace: Option<&'a mut dyn Write>,
}

fn decode_line(cfg: &JobConfig, line: &str) -> (Vec<String>, Result<Decoded, String>) {
    let tokens = match parse_stream(line) {
        Ok(t) => t,
        Err(e) => return (Vec::new(), Err(e.to_string())),
    };
    let (trace, result) = match (cfg.trace, cfg.variant) {
        (false, v) => (Vec::new(), decode(&tokens, v, cfg.max_tgt_len)),
        (true, Variant::Absolute) => trace_absolute(&tokens, cfg.max_tgt_len),
        (true, Variant::Relative) => trace_relative(&tokens),
    };
    (trace, result.map_err(|e| e.to_string()))
}

/// Restores transcription and translation files from a stream file. An
/// invalid line produces an empty line in both outputs; a truncated line
/// keeps the tuples it completed.
pub fn cmd_decode(
    cfg: &JobConfig,
    input: impl BufRead,
    sinks: DecodeSinks<'_>,
) -> Result<DecodeReport, PipelineError> {
    let DecodeSinks {
        transcription,
        translation,
        errors,
        mut trace,
    } = sinks;
    let mut report = DecodeReport::default();
    run_chunked(
        cfg,
        lines(input).map(|l| l.map_err(PipelineError::from)),
        |_, line| decode_line(cfg, &line),
        |n, (trace_lines, result)| {
            report.lines += 1;
            if let Some(t) = trace.as_deref_mut() {
                writeln!(t, "# line {n}")?;
                for l in &trace_lines {
                    writeln!(t, "{l}")?;
                }
            }
            match result {
                Ok(d) => {
                    report.decoded += 1;
                    if !d.complete {
                        report.truncated += 1;
                        log::warn!("line {n}: stream has no [EOS]; kept complete tuples");
                    }
                    writeln!(transcription, "{}", render_sentence(&d.transcription))?;
                    writeln!(translation, "{}", render_sentence(&d.translation))?;
                }
                Err(msg) => {
                    report.invalid += 1;
                    writeln!(transcription)?;
                    writeln!(translation)?;
                    line_error(cfg, errors, n, msg)?;
                }
            }
            Ok(())
        },
    )?;
    transcription.flush()?;
    translation.flush()?;
    Ok(report)
}

// ---------------------------------------------------------------- validate

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ValidateReport {
    pub lines: usize,
    pub accepted: usize,
    pub rejected: usize,
}

impl ValidateReport {
    pub fn all_accepted(&self) -> bool {
        self.rejected == 0
    }
}

/// Checks every line against the grammar. `report` receives the first error
/// of each rejected line and a closing summary.
pub fn cmd_validate(
    cfg: &JobConfig,
    input: impl BufRead,
    report_out: &mut dyn Write,
) -> Result<ValidateReport, PipelineError> {
    let mut report = ValidateReport::default();
    run_chunked(
        cfg,
        lines(input).map(|l| l.map_err(PipelineError::from)),
        |_, line| -> Result<(), SyntaxError> {
            let tokens = parse_stream(&line)?;
            validate(&tokens, cfg.variant, cfg.max_tgt_len).map(|_| ())
        },
        |n, result| {
            report.lines += 1;
            match result {
                Ok(()) => report.accepted += 1,
                Err(e) => {
                    report.rejected += 1;
                    writeln!(report_out, "line {n}: {e}")?;
                    if cfg.strict {
                        return Err(PipelineError::Line {
                            line: n,
                            message: e.to_string(),
                        });
                    }
                }
            }
            Ok(())
        },
    )?;
    writeln!(
        report_out,
        "{} of {} lines accepted ({})",
        report.accepted, report.lines, cfg.variant
    )?;
    Ok(report)
}

// ---------------------------------------------------------------- roundtrip

/// Deliberate decoder damage used to check that the round-trip harness
/// notices failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    DropLastTargetWord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripConfig {
    pub variants: Vec<Variant>,
    pub fault: Option<Fault>,
}

impl Default for RoundtripConfig {
    fn default() -> Self {
        RoundtripConfig {
            variants: vec![Variant::Absolute, Variant::Relative],
            fault: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RoundtripReport {
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    /// Corpus records that could not be read.
    pub skipped: usize,
}

/// One failed check on one instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckFailure {
    pub variant: Option<Variant>,
    pub check: &'static str,
    pub detail: String,
    pub stream: String,
}

/// Runs every codec check on one pair: validation, text round trip,
/// decode, streaming equivalence, and agreement between variants.
pub fn check_pair(
    pair: &AlignedSentencePair,
    cfg: &JobConfig,
    rt: &RoundtripConfig,
) -> Vec<CheckFailure> {
    let tuples = build_tuples(pair);
    let mut failures = Vec::new();
    let mut outputs: Vec<(Variant, Vec<Word>, Vec<Word>)> = Vec::new();
    for &variant in &rt.variants {
        let tokens = encode_with(&tuples, variant, cfg.marker_policy);
        let stream = render_tokens(&tokens);
        let mut fail = |check, detail: String| {
            failures.push(CheckFailure {
                variant: Some(variant),
                check,
                detail,
                stream: stream.clone(),
            })
        };
        if let Err(e) = validate(&tokens, variant, cfg.max_tgt_len) {
            fail("validate", e.to_string());
        }
        match parse_stream(&stream) {
            Ok(t) if t == tokens => {}
            Ok(_) => fail("serialize", "re-parsed tokens differ".into()),
            Err(e) => fail("serialize", e.to_string()),
        }
        let offline = match decode(&tokens, variant, cfg.max_tgt_len) {
            Ok(mut d) => {
                if let Some(Fault::DropLastTargetWord) = rt.fault {
                    d.translation.pop();
                }
                if !d.complete {
                    fail("decode", "stream reported as truncated".into());
                }
                if d.transcription != pair.src() {
                    fail(
                        "decode",
                        format!("transcription `{}`", render_sentence(&d.transcription)),
                    );
                }
                if d.translation != pair.tgt() {
                    fail("decode", format!("translation `{}`", render_sentence(&d.translation)));
                }
                Some(d)
            }
            Err(e) => {
                fail("decode", e.to_string());
                None
            }
        };
        match replay(&tokens, None, variant, cfg.max_tgt_len) {
            Ok(session) => {
                let online = session.output();
                if !session.is_ended() {
                    fail("streaming", "session did not end".into());
                }
                if let Some(d) = &offline {
                    let clean = decode(&tokens, variant, cfg.max_tgt_len).ok();
                    let reference = clean.as_ref().unwrap_or(d);
                    if online.transcription != reference.transcription
                        || online.translation != reference.translation
                    {
                        fail("streaming", "final snapshot differs from offline decode".into());
                    }
                }
                if let Some(last) = session.snapshots().last() {
                    if last.source != online.transcription || last.translation() != online.translation {
                        fail("streaming", "last snapshot differs from session output".into());
                    }
                }
                let append_only = session
                    .snapshots()
                    .windows(2)
                    .all(|w| w[1].source.starts_with(&w[0].source));
                if !append_only {
                    fail("streaming", "transcription snapshots are not append-only".into());
                }
            }
            Err((i, e)) => fail("streaming", format!("token {i}: {e}")),
        }
        if let Some(d) = offline {
            outputs.push((variant, d.transcription, d.translation));
        }
    }
    for w in outputs.windows(2) {
        if w[0].1 != w[1].1 || w[0].2 != w[1].2 {
            failures.push(CheckFailure {
                variant: None,
                check: "cross-variant",
                detail: format!("{} and {} disagree", w[0].0, w[1].0),
                stream: String::new(),
            });
        }
    }
    failures
}

fn dump_failures(
    dump: &mut dyn Write,
    instance: usize,
    pair: &AlignedSentencePair,
    failures: &[CheckFailure],
) -> Result<(), PipelineError> {
    for f in failures {
        let record = json!({
            "instance": instance,
            "variant": f.variant.map(|v| v.to_string()),
            "check": f.check,
            "detail": f.detail,
            "src": render_sentence(pair.src()),
            "tgt": render_sentence(pair.tgt()),
            "align": pharaoh(pair),
            "stream": f.stream,
        });
        serde_json::to_writer(&mut *dump, &record)?;
        writeln!(dump)?;
    }
    Ok(())
}

/// Checks `count` generated pairs. Instance `i` draws from its own ChaCha
/// stream keyed by `seed`, so results do not depend on thread count.
pub fn cmd_roundtrip(
    cfg: &JobConfig,
    rt: &RoundtripConfig,
    gen: &GenConfig,
    seed: u64,
    count: usize,
    dump: &mut dyn Write,
) -> Result<RoundtripReport, PipelineError> {
    let mut report = RoundtripReport::default();
    run_chunked(
        cfg,
        (0..count as u64).map(Ok),
        |_, i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let pair = random_pair(&mut rng, gen);
            let failures = check_pair(&pair, cfg, rt);
            (pair, failures)
        },
        |n, (pair, failures)| {
            tally(&mut report, dump, n, &pair, &failures)
        },
    )?;
    Ok(report)
}

/// Checks every readable record of a corpus (no filtering).
pub fn cmd_roundtrip_corpus(
    cfg: &JobConfig,
    rt: &RoundtripConfig,
    input: CorpusInput<'_>,
    dump: &mut dyn Write,
    errors: &mut dyn Write,
) -> Result<RoundtripReport, PipelineError> {
    let mut report = RoundtripReport::default();
    run_chunked(
        cfg,
        input.records(),
        |n, rec| {
            rec.and_then(|r| r.to_pair(n)).map(|pair| {
                let failures = check_pair(&pair, cfg, rt);
                (pair, failures)
            })
        },
        |n, result| match result {
            Ok((pair, failures)) => tally(&mut report, dump, n, &pair, &failures),
            Err(e) => {
                report.skipped += 1;
                line_error(cfg, errors, n, strip_line_prefix(&e.to_string(), n))
            }
        },
    )?;
    Ok(report)
}

fn tally(
    report: &mut RoundtripReport,
    dump: &mut dyn Write,
    n: usize,
    pair: &AlignedSentencePair,
    failures: &[CheckFailure],
) -> Result<(), PipelineError> {
    report.instances += 1;
    if failures.is_empty() {
        report.passed += 1;
    } else {
        report.failed += 1;
        log::warn!("instance {n}: {} check(s) failed", failures.len());
        dump_failures(dump, n, pair, failures)?;
    }
    Ok(())
}

// ---------------------------------------------------------------- eval-partial

/// A second set of streams whose partial hypotheses are scored alongside.
pub struct Baseline<'a> {
    pub streams: Box<dyn BufRead + 'a>,
    pub variant: Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub bin: usize,
    /// Fraction of each stream consumed.
    pub fraction: f64,
    pub bleu: f64,
    pub baseline: Option<f64>,
    pub delta: Option<f64>,
}

/// Display-form partial translation at each of `bins` evenly spaced stream
/// fractions: bin `b` takes the last snapshot whose token count is within
/// `(b + 1) / bins` of the stream.
pub fn partial_by_bin(
    tokens: &[Token],
    variant: Variant,
    max_tgt_len: usize,
    bins: usize,
) -> Result<Vec<Vec<String>>, String> {
    let session = replay(tokens, None, variant, max_tgt_len)
        .map_err(|(i, e)| format!("token {i}: {e}"))?;
    let snaps = session.snapshots();
    let n = tokens.len();
    let mut out = Vec::with_capacity(bins);
    let mut k = 0;
    for b in 0..bins {
        while k < snaps.len() && (snaps[k].token_index + 1) * bins <= (b + 1) * n {
            k += 1;
        }
        out.push(match k {
            0 => Vec::new(),
            _ => snaps[k - 1].translation().iter().map(Word::surface).collect(),
        });
    }
    Ok(out)
}

fn bin_stats(
    cfg: &JobConfig,
    line: &str,
    variant: Variant,
    reference: &[String],
    bins: usize,
) -> Result<Vec<BleuStats>, String> {
    let tokens = parse_stream(line).map_err(|e| e.to_string())?;
    let partials = partial_by_bin(&tokens, variant, cfg.max_tgt_len, bins)?;
    Ok(partials
        .into_iter()
        .map(|hyp| {
            let mut s = BleuStats::default();
            s.add(&EvalPair {
                hypothesis: hyp,
                reference: reference.to_vec(),
            });
            s
        })
        .collect())
}

/// Corpus BLEU of streaming partial hypotheses per stream-fraction bin,
/// written as CSV. A line whose stream fails contributes empty hypotheses.
pub fn cmd_eval_partial(
    cfg: &JobConfig,
    bins: usize,
    streams: impl BufRead,
    references: impl BufRead,
    baseline: Option<Baseline<'_>>,
    csv: &mut dyn Write,
    errors: &mut dyn Write,
) -> Result<Vec<CurveRow>, PipelineError> {
    if bins == 0 {
        return Err(PipelineError::Config("bin count must be at least 1".into()));
    }
    let baseline_variant = baseline.as_ref().map(|b| b.variant);
    let mut inputs = vec![lines(streams), lines(references)];
    if let Some(b) = baseline {
        inputs.push(lines(b.streams));
    }
    let mut main = vec![BleuStats::default(); bins];
    let mut base = vec![BleuStats::default(); bins];
    let mut rows = 0;
    run_chunked(
        cfg,
        zip(inputs),
        |_, row| {
            let reference = surface_words(&row[1]);
            let empty = || {
                let mut s = BleuStats::default();
                s.add(&EvalPair {
                    hypothesis: Vec::new(),
                    reference: reference.clone(),
                });
                vec![s; bins]
            };
            let m = bin_stats(cfg, &row[0], cfg.variant, &reference, bins);
            let b = baseline_variant.map(|v| bin_stats(cfg, &row[2], v, &reference, bins));
            let mut problems = Vec::new();
            let m = m.unwrap_or_else(|e| {
                problems.push(e);
                empty()
            });
            let b = b.map(|r| {
                r.unwrap_or_else(|e| {
                    problems.push(format!("baseline: {e}"));
                    empty()
                })
            });
            (m, b, problems)
        },
        |n, (m, b, problems)| {
            rows += 1;
            for msg in problems {
                line_error(cfg, errors, n, msg)?;
            }
            for (acc, s) in main.iter_mut().zip(&m) {
                acc.merge(s);
            }
            if let Some(b) = b {
                for (acc, s) in base.iter_mut().zip(&b) {
                    acc.merge(s);
                }
            }
            Ok(())
        },
    )?;
    if rows == 0 {
        return Err(PipelineError::Config("reference file is empty".into()));
    }
    let with_base = baseline_variant.is_some();
    let curve: Vec<CurveRow> = (0..bins)
        .map(|b| {
            let bleu = main[b].score(Smoothing::None).score;
            let baseline = with_base.then(|| base[b].score(Smoothing::None).score);
            CurveRow {
                bin: b + 1,
                fraction: (b + 1) as f64 / bins as f64,
                bleu,
                baseline,
                delta: baseline.map(|x| bleu - x),
            }
        })
        .collect();
    if with_base {
        writeln!(csv, "bin,fraction,bleu,baseline,delta")?;
    } else {
        writeln!(csv, "bin,fraction,bleu")?;
    }
    for r in &curve {
        write!(csv, "{},{:.4},{:.4}", r.bin, r.fraction, r.bleu)?;
        if let (Some(x), Some(d)) = (r.baseline, r.delta) {
            write!(csv, ",{x:.4},{d:.4}")?;
        }
        writeln!(csv)?;
    }
    Ok(curve)
}

// ---------------------------------------------------------------- replay

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ReplayReport {
    pub lines: usize,
    pub snapshots: usize,
    pub errors: usize,
    /// Mean average lagging over lines with at least one target word.
    pub mean_lagging: Option<f64>,
}

#[derive(Serialize)]
struct ReplayRecord<'a> {
    line: usize,
    #[serde(flatten)]
    snapshot: &'a crate::streaming::SnapshotRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_ms: Option<u64>,
}

/// Feeds every stream through a streaming session and writes one JSON line
/// per snapshot. `timestamps`, when given, holds one line per stream with one
/// integer per token.
pub fn cmd_replay(
    cfg: &JobConfig,
    streams: impl BufRead,
    timestamps: Option<Box<dyn BufRead + '_>>,
    out: &mut dyn Write,
    errors: &mut dyn Write,
) -> Result<ReplayReport, PipelineError> {
    let mut inputs = vec![lines(streams)];
    let timed = timestamps.is_some();
    if let Some(t) = timestamps {
        inputs.push(lines(t));
    }
    let mut report = ReplayReport::default();
    let (mut al_sum, mut al_n) = (0.0, 0usize);
    run_chunked(
        cfg,
        zip(inputs),
        |_, row| -> Result<_, String> {
            let tokens = parse_stream(&row[0]).map_err(|e| e.to_string())?;
            let ts: Option<Vec<u64>> = if timed {
                Some(
                    row[1]
                        .split_whitespace()
                        .map(|s| s.parse::<u64>().map_err(|e| format!("timestamp `{s}`: {e}")))
                        .collect::<Result<_, _>>()?,
                )
            } else {
                None
            };
            let session = replay(&tokens, ts.as_deref(), cfg.variant, cfg.max_tgt_len)
                .map_err(|(i, e)| format!("token {i}: {e}"))?;
            let records: Vec<_> = session
                .snapshots()
                .iter()
                .map(|s| (s.to_record(), s.time_ms))
                .collect();
            let trace = session.latency_trace();
            let al = if trace.delays.is_empty() {
                None
            } else {
                average_lagging(&trace).ok()
            };
            Ok((records, al))
        },
        |n, result| {
            report.lines += 1;
            match result {
                Ok((records, al)) => {
                    for (snapshot, time_ms) in &records {
                        serde_json::to_writer(
                            &mut *out,
                            &ReplayRecord {
                                line: n,
                                snapshot,
                                time_ms: *time_ms,
                            },
                        )?;
                        writeln!(out)?;
                    }
                    report.snapshots += records.len();
                    if let Some(al) = al {
                        al_sum += al;
                        al_n += 1;
                    }
                }
                Err(msg) => {
                    report.errors += 1;
                    line_error(cfg, errors, n, msg)?;
                }
            }
            Ok(())
        },
    )?;
    report.mean_lagging = (al_n > 0).then(|| al_sum / al_n as f64);
    out.flush()?;
    Ok(report)
}

// ---------------------------------------------------------------- score

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub sentences: usize,
    pub wer: f64,
    pub edits: EditCounts,
    pub bleu: BleuScore,
}

/// Corpus WER and BLEU of a line-aligned hypothesis file against references.
pub fn cmd_score(
    cfg: &JobConfig,
    hypotheses: impl BufRead,
    references: impl BufRead,
    smoothing: Smoothing,
) -> Result<ScoreReport, PipelineError> {
    let mut edits = EditCounts::default();
    let mut hyp_len = 0;
    let mut stats = BleuStats::default();
    let mut sentences = 0;
    run_chunked(
        cfg,
        zip(vec![lines(hypotheses), lines(references)]),
        |_, row| {
            let pair = EvalPair {
                hypothesis: surface_words(&row[0]),
                reference: surface_words(&row[1]),
            };
            let c = edit_counts(&pair.hypothesis, &pair.reference);
            let mut s = BleuStats::default();
            s.add(&pair);
            (c, pair.hypothesis.len(), s)
        },
        |_, (c, h, s)| {
            sentences += 1;
            edits.substitutions += c.substitutions;
            edits.insertions += c.insertions;
            edits.deletions += c.deletions;
            edits.ref_len += c.ref_len;
            hyp_len += h;
            stats.merge(&s);
            Ok(())
        },
    )?;
    Ok(ScoreReport {
        sentences,
        wer: error_rate(edits.errors(), edits.ref_len, hyp_len),
        edits,
        bleu: stats.score(smoothing),
    })
}

// ---------------------------------------------------------------- stats

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StatsReport {
    pub lines: usize,
    pub invalid: usize,
    pub totals: OpSeqStats,
}

/// Summed operation counts and reorder distance over a stream file.
pub fn cmd_stats(
    cfg: &JobConfig,
    streams: impl BufRead,
    errors: &mut dyn Write,
) -> Result<StatsReport, PipelineError> {
    let mut report = StatsReport::default();
    run_chunked(
        cfg,
        lines(streams).map(|l| l.map_err(PipelineError::from)),
        |_, line| {
            let tokens = parse_stream(&line).map_err(|e| e.to_string())?;
            opseq_stats(&tokens, cfg.variant, cfg.max_tgt_len).map_err(|e| e.to_string())
        },
        |n, result| {
            report.lines += 1;
            match result {
                Ok(s) => {
                    let t = &mut report.totals;
                    t.set_marker += s.set_marker;
                    t.jump_backward += s.jump_backward;
                    t.jump_forward += s.jump_forward;
                    t.no_ops += s.no_ops;
                    t.reorder_distance += s.reorder_distance;
                }
                Err(msg) => {
                    report.invalid += 1;
                    line_error(cfg, errors, n, msg)?;
                }
            }
            Ok(())
        },
    )?;
    Ok(report)
}
