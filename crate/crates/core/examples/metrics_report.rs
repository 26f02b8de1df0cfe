//! WER, BLEU, average lagging and operation statistics on toy data.

use opseq::metrics::{
    average_lagging, bleu_with, combine_lagging, corpus_wer, opseq_stats, wer, EvalPair,
    LatencyAggregation, LatencyTrace, Smoothing,
};
use opseq::{parse_stream, Variant, DEFAULT_MAX_TGT_LEN};

fn main() {
    let pairs = [
        EvalPair::from_text("the cat sat on the mat", "the cat sat on the mat"),
        EvalPair::from_text("a cat sat on mat", "the cat sat on the mat"),
        EvalPair::from_text("The Cat", "the cat sat"),
    ];
    for p in &pairs {
        println!("WER {:.3}  {:?} vs {:?}", wer(p), p.hypothesis, p.reference);
    }
    println!("corpus WER {:.3}", corpus_wer(&pairs));
    for smoothing in [Smoothing::None, Smoothing::AddOne] {
        let b = bleu_with(&pairs[2..], smoothing);
        println!(
            "BLEU({smoothing:?}) {:.4}  precisions {:?}  BP {:.4}",
            b.score, b.precisions, b.brevity_penalty
        );
    }
    println!("BLEU corpus {:.4}", bleu_with(&pairs, Smoothing::None).score);

    let traces = [
        LatencyTrace { delays: vec![1, 2], src_len: 2, tgt_len: 2 },
        LatencyTrace { delays: vec![4, 4, 4, 4], src_len: 4, tgt_len: 4 },
        LatencyTrace { delays: vec![0, 2, 3], src_len: 3, tgt_len: 3 },
    ];
    for t in &traces {
        println!("AL {:?} -> {:.4}", t.delays, average_lagging(t).unwrap());
    }
    let (asr, st) = (1.5, 2.0);
    println!(
        "cascade AL sum {} max {}",
        combine_lagging(asr, st, LatencyAggregation::Sum),
        combine_lagging(asr, st, LatencyAggregation::Max)
    );

    for (variant, s) in [
        (Variant::Relative, "a [SM] x [EOP] b [JB] y [EOP] [EOS]"),
        (Variant::Absolute, "a [BL] x [2] b [BL] y [1] [EOS]"),
    ] {
        let tokens = parse_stream(s).unwrap();
        println!("{variant} {:?}", opseq_stats(&tokens, variant, DEFAULT_MAX_TGT_LEN).unwrap());
    }
}
