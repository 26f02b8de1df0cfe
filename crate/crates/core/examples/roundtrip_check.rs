//! Random aligned pairs through every codec check, then corrupted streams
//! through the validator and decoder.

use opseq::pipeline::{check_pair, JobConfig, RoundtripConfig};
use opseq::synth::{corrupt, random_pair, Corruption, GenConfig};
use opseq::token::{render_sentence, render_tokens};
use opseq::{build_tuples, decode, encode, validate, Variant, DEFAULT_MAX_TGT_LEN as MAX};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let gen = GenConfig::default();
    let (cfg, rt) = (JobConfig::default(), RoundtripConfig::default());

    let sample = random_pair(&mut rng, &gen);
    println!("src {}", render_sentence(sample.src()));
    println!("tgt {}", render_sentence(sample.tgt()));
    println!("links {:?}", sample.links());
    println!("rel {}\n", render_tokens(&encode(&build_tuples(&sample), Variant::Relative)));

    let failed = (0..1000)
        .filter(|_| !check_pair(&random_pair(&mut rng, &gen), &cfg, &rt).is_empty())
        .count();
    println!("1000 random pairs, {failed} failing\n");

    for variant in [Variant::Absolute, Variant::Relative] {
        for &kind in Corruption::all(variant) {
            let stream = encode(&build_tuples(&random_pair(&mut rng, &gen)), variant);
            let Some(bad) = corrupt(&mut rng, &stream, kind, MAX) else {
                continue;
            };
            let outcome = match (validate(&bad, variant, MAX), decode(&bad, variant, MAX)) {
                (Err(e), _) => format!("validator: {e}"),
                (Ok(_), Err(e)) => format!("decoder: {e}"),
                (Ok(_), Ok(_)) => "accepted".to_string(),
            };
            println!("{variant} {kind:?}: {outcome}");
        }
    }
}
