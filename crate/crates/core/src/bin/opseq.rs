use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use opseq::align::FilterConfig;
use opseq::metrics::Smoothing;
use opseq::pipeline::{
    self, Baseline, CorpusInput, DecodeSinks, Fault, JobConfig, RoundtripConfig,
};
use opseq::synth::GenConfig;
use opseq::{MarkerPolicy, Variant, DEFAULT_MAX_TGT_LEN};

#[derive(Parser)]
#[command(name = "opseq", version, about = "Operation-sequence encoding of aligned sentence pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "rel")]
    variant: Variant,
    /// Largest absolute position accepted when reading streams.
    #[arg(long, default_value_t = DEFAULT_MAX_TGT_LEN)]
    max_position: usize,
    /// Stop at the first per-line error.
    #[arg(long)]
    strict: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Per-line errors are appended here instead of stderr.
    #[arg(long)]
    errors: Option<PathBuf>,
}

#[derive(Args)]
struct Corpus {
    #[arg(long, requires_all = ["tgt", "align"], conflicts_with = "input")]
    src: Option<PathBuf>,
    #[arg(long)]
    tgt: Option<PathBuf>,
    #[arg(long)]
    align: Option<PathBuf>,
    /// Tab-separated `src \t tgt \t align` file.
    #[arg(long = "in")]
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a word-aligned corpus, one stream per kept line.
    Encode {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        corpus: Corpus,
        #[arg(long)]
        out: PathBuf,
        /// Filtered records as `line \t reason` (default: <out>.drops).
        #[arg(long)]
        drop_log: Option<PathBuf>,
        #[arg(long, default_value_t = 5.0)]
        max_ratio: f64,
        #[arg(long, default_value_t = 150)]
        max_tgt_len: usize,
        #[arg(long, default_value = "lazy")]
        marker_policy: MarkerPolicy,
    },
    /// Restore transcription and translation files from streams.
    Decode {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        /// Output prefix: writes <out>.src and <out>.tgt.
        #[arg(long)]
        out: PathBuf,
        /// Instruction-level dump to <out>.trace.
        #[arg(long)]
        trace: bool,
    },
    /// Check streams against the grammar; exits 1 if any line is rejected.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        /// Report file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode/decode/stream checks over random pairs or a corpus.
    Roundtrip {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        corpus: Corpus,
        #[arg(long, required_unless_present_any = ["src", "input"])]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        /// Check only the variant given by --variant.
        #[arg(long)]
        single: bool,
        #[arg(long, default_value = "lazy")]
        marker_policy: MarkerPolicy,
        #[arg(long, default_value_t = 20)]
        max_src_len: usize,
        /// Failing instances as JSON lines (default: stderr).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Break the decoder on purpose to check the harness.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// BLEU of streaming partial hypotheses per stream-fraction bin (CSV).
    EvalPartial {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Baseline streams scored for the delta column.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long, default_value = "abs")]
        baseline_variant: Variant,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay streams token by token; writes snapshots as JSON lines.
    Replay {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        /// One line per stream with one integer (ms) per token.
        #[arg(long)]
        timestamps: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corpus WER and BLEU as a JSON report.
    Score {
        #[command(flatten)]
        common: Common,
        #[arg(long = "hyp")]
        hypothesis: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        smooth: bool,
    },
    /// Operation counts and reorder distance as a JSON report.
    Stats {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn job(common: &Common) -> JobConfig {
    JobConfig {
        variant: common.variant,
        max_tgt_len: common.max_position,
        strict: common.strict,
        jobs: common.jobs,
        ..JobConfig::default()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot create {}", path.display()))
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn errors(common: &Common) -> Result<Box<dyn Write>> {
    Ok(match &common.errors {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stderr()),
    })
}

fn reader(path: &Path) -> Result<Box<dyn BufRead>> {
    Ok(Box::new(pipeline::open(path)?))
}

fn corpus(c: &Corpus) -> Result<CorpusInput<'static>> {
    Ok(match (&c.src, &c.tgt, &c.align, &c.input) {
        (Some(s), Some(t), Some(a), None) => CorpusInput::open_parallel(s, t, a)?,
        (None, None, None, Some(i)) => CorpusInput::open_tsv(i)?,
        _ => bail!("give either --src/--tgt/--align or --in"),
    })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Encode {
            common,
            corpus: c,
            out,
            drop_log,
            max_ratio,
            max_tgt_len,
            marker_policy,
        } => {
            let cfg = JobConfig {
                filter: FilterConfig {
                    max_ratio,
                    max_tgt_len,
                },
                marker_policy,
                ..job(&common)
            };
            let drop_path = drop_log.unwrap_or_else(|| with_suffix(&out, ".drops"));
            let report = pipeline::cmd_encode(
                &cfg,
                corpus(&c)?,
                &mut create(&out)?,
                &mut create(&drop_path)?,
                &mut errors(&common)?,
            )?;
            print_json(&report)?;
        }
        Command::Decode {
            common,
            input,
            out,
            trace,
        } => {
            let cfg = JobConfig {
                trace,
                ..job(&common)
            };
            let mut trace_file = if trace {
                Some(create(&with_suffix(&out, ".trace"))?)
            } else {
                None
            };
            let report = pipeline::cmd_decode(
                &cfg,
                pipeline::open(&input)?,
                DecodeSinks {
                    transcription: &mut create(&with_suffix(&out, ".src"))?,
                    translation: &mut create(&with_suffix(&out, ".tgt"))?,
                    errors: &mut errors(&common)?,
                    trace: trace_file.as_mut().map(|f| f as &mut dyn Write),
                },
            )?;
            if let Some(f) = trace_file.as_mut() {
                f.flush()?;
            }
            print_json(&report)?;
        }
        Command::Validate {
            common,
            input,
            out,
        } => {
            let mut w = writer(out.as_deref())?;
            let report = pipeline::cmd_validate(&job(&common), pipeline::open(&input)?, &mut w)?;
            w.flush()?;
            if !report.all_accepted() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Roundtrip {
            common,
            corpus: c,
            seed,
            count,
            single,
            marker_policy,
            max_src_len,
            out,
            inject_fault,
        } => {
            let cfg = JobConfig {
                marker_policy,
                ..job(&common)
            };
            let rt = RoundtripConfig {
                variants: if single {
                    vec![common.variant]
                } else {
                    vec![Variant::Absolute, Variant::Relative]
                },
                fault: inject_fault.then_some(Fault::DropLastTargetWord),
            };
            let mut dump: Box<dyn Write> = match &out {
                Some(p) => Box::new(create(p)?),
                None => Box::new(io::stderr()),
            };
            let report = if c.src.is_some() || c.input.is_some() {
                pipeline::cmd_roundtrip_corpus(&cfg, &rt, corpus(&c)?, &mut dump, &mut errors(&common)?)?
            } else {
                let gen = GenConfig {
                    max_src_len,
                    ..GenConfig::default()
                };
                let seed = seed.context("--seed is required for generated instances")?;
                pipeline::cmd_roundtrip(&cfg, &rt, &gen, seed, count, &mut dump)?
            };
            dump.flush()?;
            print_json(&report)?;
            if report.failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::EvalPartial {
            common,
            input,
            reference,
            bins,
            baseline,
            baseline_variant,
            out,
        } => {
            let baseline = match &baseline {
                Some(p) => Some(Baseline {
                    streams: reader(p)?,
                    variant: baseline_variant,
                }),
                None => None,
            };
            let mut w = writer(out.as_deref())?;
            pipeline::cmd_eval_partial(
                &job(&common),
                bins,
                pipeline::open(&input)?,
                pipeline::open(&reference)?,
                baseline,
                &mut w,
                &mut errors(&common)?,
            )?;
            w.flush()?;
        }
        Command::Replay {
            common,
            input,
            timestamps,
            out,
        } => {
            let ts = match &timestamps {
                Some(p) => Some(reader(p)?),
                None => None,
            };
            let mut w = writer(out.as_deref())?;
            let report = pipeline::cmd_replay(
                &job(&common),
                pipeline::open(&input)?,
                ts,
                &mut w,
                &mut errors(&common)?,
            )?;
            w.flush()?;
            drop(w);
            if out.is_some() {
                print_json(&report)?;
            } else {
                eprintln!("{}", serde_json::to_string(&report)?);
            }
        }
        Command::Score {
            common,
            hypothesis,
            reference,
            smooth,
        } => {
            let smoothing = if smooth {
                Smoothing::AddOne
            } else {
                Smoothing::None
            };
            let report = pipeline::cmd_score(
                &job(&common),
                pipeline::open(&hypothesis)?,
                pipeline::open(&reference)?,
                smoothing,
            )?;
            print_json(&report)?;
        }
        Command::Stats { common, input } => {
            let report =
                pipeline::cmd_stats(&job(&common), pipeline::open(&input)?, &mut errors(&common)?)?;
            print_json(&report)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
