//! Step through the relative buffer machine one instruction at a time.

use opseq::relative::trace_relative;
use opseq::parse_stream;

fn main() {
    let stream = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "a [SM] x [EOP] b [SM] [JB] y [EOP] c [JF] z [EOP] [EOS]".to_string());
    let tokens = parse_stream(&stream).expect("stream tokenizes");
    println!("{stream}\n");
    let (lines, result) = trace_relative(&tokens);
    for l in lines {
        println!("{l}");
    }
    match result {
        Ok(d) => println!("\ncomplete={} diagnostics={:?}", d.complete, d.diagnostics),
        Err(e) => println!("\nerror: {e}"),
    }
}
