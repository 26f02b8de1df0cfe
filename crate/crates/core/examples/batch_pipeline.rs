//! The batch commands on files in a scratch directory: encode, validate,
//! decode, replay, and score the decoded translation.

use std::fs;
use std::io::BufWriter;

use opseq::metrics::Smoothing;
use opseq::pipeline::{self, CorpusInput, DecodeSinks, JobConfig};
use opseq::Variant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("opseq-batch-{}", std::process::id()));
    fs::create_dir_all(&dir)?;
    let path = |name: &str| dir.join(name);
    fs::write(path("src"), "a b c\nthe black cat sat on the mat\nyes\nmy house ##s\n")?;
    fs::write(path("tgt"), "z x y\nle chat noir était sur le tapis\nun deux trois quatre cinq six\nmes maisons\n")?;
    fs::write(path("align"), "0-1 1-2 2-0\n0-0 1-2 2-1 3-3 4-4 5-5 6-6\n0-0\n0-0 1-1\n")?;

    for variant in [Variant::Absolute, Variant::Relative] {
        let cfg = JobConfig { variant, ..JobConfig::default() };
        let streams = path(&format!("corpus.{variant}"));
        let input = CorpusInput::open_parallel(&path("src"), &path("tgt"), &path("align"))?;
        let mut errors = Vec::new();
        let enc = pipeline::cmd_encode(
            &cfg,
            input,
            &mut BufWriter::new(fs::File::create(&streams)?),
            &mut fs::File::create(path("drops"))?,
            &mut errors,
        )?;
        println!("{variant}: {enc:?}");
        print!("{}", fs::read_to_string(&streams)?);
        print!("drops: {}", fs::read_to_string(path("drops"))?);

        let mut report = Vec::new();
        pipeline::cmd_validate(&cfg, pipeline::open(&streams)?, &mut report)?;
        print!("{}", String::from_utf8(report)?);

        let (mut s, mut t) = (Vec::new(), Vec::new());
        pipeline::cmd_decode(
            &cfg,
            pipeline::open(&streams)?,
            DecodeSinks { transcription: &mut s, translation: &mut t, errors: &mut errors, trace: None },
        )?;
        print!("decoded translation:\n{}", String::from_utf8(t.clone())?);

        let mut snaps = Vec::new();
        let rep = pipeline::cmd_replay(&cfg, pipeline::open(&streams)?, None, &mut snaps, &mut errors)?;
        println!("replay: {rep:?}");

        let score = pipeline::cmd_score(&cfg, &t[..], "z x y\nle chat noir était sur le tapis\nmes maisons\n".as_bytes(), Smoothing::None)?;
        println!("score: WER {:.3} BLEU {:.2}\n", score.wer, score.bleu.score);
    }
    fs::remove_dir_all(&dir)?;
    Ok(())
}
