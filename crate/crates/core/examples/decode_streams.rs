//! Decode absolute and relative streams, including damaged ones.

use opseq::token::render_sentence;
use opseq::{decode, parse_stream, Variant, DEFAULT_MAX_TGT_LEN};

fn main() {
    let streams = [
        (Variant::Absolute, "a [BL] x [2] b [BL] y [1] [EOS]"),
        (Variant::Absolute, "a [BL] x [1] [NO_SRC] [BL] z [3] [EOS]"),
        (Variant::Absolute, "a [BL] x [1] b [BL] y [1] [EOS]"),
        (Variant::Absolute, "a [BL] x [2] b [BL]"),
        (Variant::Relative, "a [SM] x [EOP] b [JB] y [EOP] [EOS]"),
        (Variant::Relative, "a [SM] x [EOP] b [JB] y"),
        (Variant::Relative, "a [JB] x [EOP] [EOS]"),
        (Variant::Relative, "trans ##lation [NO_OPS] Über ##setzung [EOP] [EOS]"),
    ];
    for (variant, line) in streams {
        println!("{variant}  {line}");
        let result = parse_stream(line)
            .map_err(|e| e.to_string())
            .and_then(|t| decode(&t, variant, DEFAULT_MAX_TGT_LEN).map_err(|e| e.to_string()));
        match result {
            Ok(d) => {
                println!("    S = {}", render_sentence(&d.transcription));
                println!("    T = {}", render_sentence(&d.translation));
                if !d.diagnostics.is_empty() {
                    println!("    {:?}", d.diagnostics);
                }
            }
            Err(e) => println!("    error: {e}"),
        }
    }
}
