//! Parse a tiny Pharaoh-aligned corpus, filter it, and print both encodings.

use opseq::align::{filter_record, CorpusRecord, FilterConfig};
use opseq::token::{render_tokens, Collapse};
use opseq::{build_tuples, encode_absolute, encode_relative, encode_with, MarkerPolicy, Variant};

const CORPUS: &str = "\
the black cat\tle chat noir\t0-0 1-2 2-1
a b c\tz x y\t0-1 1-2 2-0
we have a house ##s\tnous avons des maisons\t0-0 1-1 2-2 3-3
yes\tun deux trois quatre cinq six\t0-0
";

fn main() {
    let cfg = FilterConfig::default();
    for (i, line) in CORPUS.lines().enumerate() {
        let n = i + 1;
        let pair = match CorpusRecord::from_tsv(line, n).and_then(|r| r.to_pair(n)) {
            Ok(p) => p,
            Err(e) => {
                println!("{e}");
                continue;
            }
        };
        let decision = filter_record(&pair, &cfg);
        if !decision.is_keep() {
            println!("line {n}: dropped {decision:?}\n");
            continue;
        }
        let tuples = build_tuples(&pair);
        println!("line {n}");
        println!("  tuples  {}", render_tokens(&tuples.collapse()));
        println!("  abs     {}", render_tokens(&encode_absolute(&tuples)));
        println!("  rel     {}", render_tokens(&encode_relative(&tuples)));
        let eager = encode_with(&tuples, Variant::Relative, MarkerPolicy::Eager);
        println!("  eager   {}\n", render_tokens(&eager));
    }
}
