//! Grammar checks with the first offending token of each bad stream.

use opseq::{parse_stream, validate, Variant, DEFAULT_MAX_TGT_LEN};

fn main() {
    let cases = [
        (Variant::Absolute, "a [BL] x [1] [EOS]"),
        (Variant::Absolute, "a x [1] [EOS]"),
        (Variant::Absolute, "a [BL] x [1]"),
        (Variant::Absolute, "a [BL] x [600] [EOS]"),
        (Variant::Absolute, "a [BL] [NO_TGT] [1] [EOS]"),
        (Variant::Relative, "a [SM] x [EOP] b [JB] y [EOP] [EOS]"),
        (Variant::Relative, "a [NO_OPS] [SM] x [EOP] [EOS]"),
        (Variant::Relative, "a [SM] x [EOP] b [JB] [JB] y [EOP] [EOS]"),
        (Variant::Relative, "a [SM] x [EOP] [EOS] b"),
        (Variant::Relative, "a [SM] [WAT] [EOP] [EOS]"),
    ];
    for (variant, line) in cases {
        let verdict = parse_stream(line)
            .and_then(|t| validate(&t, variant, DEFAULT_MAX_TGT_LEN))
            .map(|tuples| format!("ok, {} tuple(s)", tuples.len()))
            .unwrap_or_else(|e| format!("rejected: {e}"));
        println!("{variant}  {line:45} {verdict}");
    }
}
