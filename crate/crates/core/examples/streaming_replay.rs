//! Feed a stream token by token and watch the partial translation grow.

use opseq::metrics::average_lagging;
use opseq::streaming::{FeedEvent, StreamSession};
use opseq::{parse_stream, Variant, DEFAULT_MAX_TGT_LEN};

fn run(variant: Variant, stream: &str) {
    println!("{variant}: {stream}");
    let tokens = parse_stream(stream).expect("stream tokenizes");
    let mut session = StreamSession::new(variant, DEFAULT_MAX_TGT_LEN);
    for (i, tok) in tokens.iter().enumerate() {
        // pretend one token arrives every 40 ms
        match session.feed_at(tok, 40 * i as u64) {
            FeedEvent::None => {}
            FeedEvent::TupleCompleted => {
                let snap = session.snapshots().last().expect("snapshot after tuple");
                println!("  {}", serde_json::to_string(&snap.to_record()).unwrap());
            }
            FeedEvent::StreamEnded => println!("  [EOS] after {} tokens", session.tokens_fed()),
            FeedEvent::Error(e) => {
                println!("  error: {e}");
                return;
            }
        }
    }
    let partials: Vec<String> = session.partial_hypotheses().into_iter().map(|p| p.1).collect();
    println!("  partials {partials:?}");
    let trace = session.latency_trace();
    println!("  delays {:?} AL {:.3}\n", trace.delays, average_lagging(&trace).unwrap());
}

fn main() {
    run(Variant::Relative, "a [SM] x [EOP] b [JB] y [EOP] [EOS]");
    run(Variant::Absolute, "a [BL] x [2] b [BL] y [1] [EOS]");
    run(Variant::Relative, "a [NO_OPS] x [EOP] b [NO_OPS] y [EOP] c [NO_OPS] z [EOP] [EOS]");
    run(Variant::Relative, "[JB] x [EOP] [EOS]");
}
