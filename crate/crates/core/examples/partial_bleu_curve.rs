//! Partial-hypothesis BLEU curves for a monotone and a reordered corpus,
//! comparing the relative encoding against the absolute one.

use opseq::pipeline::{self, Baseline, JobConfig};
use opseq::synth::{random_pair, GenConfig};
use opseq::token::{render_sentence, render_tokens};
use opseq::{build_tuples, encode, Variant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus(monotone: bool) -> (String, String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gen = GenConfig { monotone, multi_piece_prob: 0.0, ..GenConfig::default() };
    let (mut rel, mut abs, mut refs) = (String::new(), String::new(), String::new());
    for _ in 0..200 {
        let pair = random_pair(&mut rng, &gen);
        let tuples = build_tuples(&pair);
        rel += &(render_tokens(&encode(&tuples, Variant::Relative)) + "\n");
        abs += &(render_tokens(&encode(&tuples, Variant::Absolute)) + "\n");
        refs += &(render_sentence(pair.tgt()) + "\n");
    }
    (rel, abs, refs)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = JobConfig { variant: Variant::Relative, ..JobConfig::default() };
    for monotone in [true, false] {
        let (rel, abs, refs) = corpus(monotone);
        println!("{} corpus: relative vs absolute", if monotone { "monotone" } else { "reordered" });
        let mut csv = Vec::new();
        let baseline = Baseline { streams: Box::new(abs.as_bytes()), variant: Variant::Absolute };
        pipeline::cmd_eval_partial(
            &cfg,
            5,
            rel.as_bytes(),
            refs.as_bytes(),
            Some(baseline),
            &mut csv,
            &mut std::io::sink(),
        )?;
        println!("{}", String::from_utf8(csv)?);
    }
    Ok(())
}
