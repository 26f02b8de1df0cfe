use std::fs;
use std::process::{Command, Output};

use tempfile::TempDir;

const SRC: &str = "a b c\nthe black cat\nmy house ##s are big\n";
const TGT: &str = "z x y\nle chat noir\nmes maisons sont grandes\n";
const ALIGN: &str = "0-1 1-2 2-0\n0-0 1-2 2-1\n0-0 1-1 2-2 3-3\n";

fn opseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opseq"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

struct Dir(TempDir);

impl Dir {
    fn new() -> Dir {
        Dir(tempfile::tempdir().unwrap())
    }

    fn file(&self, name: &str, body: &str) -> String {
        let p = self.path(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn path(&self, name: &str) -> String {
        self.0.path().join(name).to_string_lossy().into_owned()
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.0.path().join(name)).unwrap()
    }
}

fn toy(d: &Dir) -> [String; 3] {
    [d.file("src", SRC), d.file("tgt", TGT), d.file("align", ALIGN)]
}

fn encode(d: &Dir, variant: &str, extra: &[&str]) -> Output {
    let [s, t, a] = toy(d);
    let out = d.path(&format!("streams.{variant}"));
    let mut args = vec![
        "encode", "--variant", variant, "--src", &s, "--tgt", &t, "--align", &a, "--out", &out,
    ];
    args.extend_from_slice(extra);
    opseq(&args)
}

#[test]
fn toy_corpus_round_trips_byte_identically() {
    for variant in ["abs", "rel"] {
        let d = Dir::new();
        let o = encode(&d, variant, &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let streams = d.read(&format!("streams.{variant}"));
        assert_eq!(streams.lines().count(), 3);
        assert_eq!(d.read(&format!("streams.{variant}.drops")), "");

        let input = d.path(&format!("streams.{variant}"));
        let prefix = d.path("dec");
        let o = opseq(&["decode", "--variant", variant, "--in", &input, "--out", &prefix]);
        assert!(o.status.success());
        assert_eq!(d.read("dec.src"), SRC);
        assert_eq!(d.read("dec.tgt"), TGT);
    }
}

#[test]
fn ratio_six_pair_is_logged_as_dropped() {
    let d = Dir::new();
    let tsv = d.file("corpus.tsv", "a\tb\t0-0\nyes\tq w e r t y\t0-0\n");
    let out = d.path("out");
    let drops = d.path("drops");
    let o = opseq(&["encode", "--in", &tsv, "--out", &out, "--drop-log", &drops]);
    assert!(o.status.success());
    assert_eq!(d.read("out").lines().count(), 1);
    assert_eq!(d.read("drops"), "2\tlength ratio 1:6\n");
}

#[test]
fn malformed_alignment_is_skipped_and_logged() {
    let d = Dir::new();
    let tsv = d.file("corpus.tsv", "a\tx\t0-0\nb\ty\t0_0\nc\tz\t0-0\n");
    let (out, errs) = (d.path("out"), d.path("errs"));
    let o = opseq(&["encode", "--in", &tsv, "--out", &out, "--errors", &errs]);
    assert!(o.status.success());
    assert_eq!(
        d.read("out"),
        "a [NO_OPS] x [EOP] [EOS]\nc [NO_OPS] z [EOP] [EOS]\n"
    );
    assert!(d.read("errs").starts_with("line 2: malformed alignment pair `0_0`"));

    let o = opseq(&["encode", "--in", &tsv, "--out", &out, "--strict"]);
    assert!(!o.status.success());
}

#[test]
fn unreadable_input_fails() {
    let d = Dir::new();
    let out = d.path("out");
    let o = opseq(&["encode", "--in", "/nonexistent/corpus.tsv", "--out", &out]);
    assert!(!o.status.success());
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let d = Dir::new();
    let mut corpus = String::new();
    for i in 0..300 {
        corpus += &format!("a{i} b c d\tw x y z{i}\t0-3 1-1 2-0 3-2\n");
    }
    let tsv = d.file("c.tsv", &corpus);
    let (one, four) = (d.path("one"), d.path("four"));
    assert!(opseq(&["encode", "--in", &tsv, "--out", &one, "--jobs", "1"]).status.success());
    assert!(opseq(&["encode", "--in", &tsv, "--out", &four, "--jobs", "4"]).status.success());
    assert_eq!(d.read("one"), d.read("four"));
}

#[test]
fn decode_writes_placeholders_and_keeps_truncated_tuples() {
    let d = Dir::new();
    let input = d.file(
        "s",
        "a [SM] x [EOP] b [JB] y [EOP] [EOS]\na [JB] x [EOP] [EOS]\nc [NO_OPS] z [EOP] d [NO_OPS]\n",
    );
    let (prefix, errs) = (d.path("o"), d.path("errs"));
    let o = opseq(&["decode", "--in", &input, "--out", &prefix, "--errors", &errs, "--trace"]);
    assert!(o.status.success());
    assert_eq!(d.read("o.src"), "a b\n\nc\n");
    assert_eq!(d.read("o.tgt"), "y x\n\nz\n");
    assert!(d.read("errs").starts_with("line 2: "));
    assert!(d.read("o.trace").contains("[JB]\thead_s=2 head_t=1"));
}

#[test]
fn validate_exit_codes_and_report() {
    let d = Dir::new();
    let good = d.file("good", "a [BL] x [1] [EOS]\n[EOS]\n");
    let bad = d.file("bad", "a [BL] x [1] [EOS]\na [BL] x [0] [EOS]\n");
    let empty = d.file("empty", "");

    let o = opseq(&["validate", "--variant", "abs", "--in", &good]);
    assert!(o.status.success());

    let o = opseq(&["validate", "--variant", "abs", "--in", &bad]);
    assert_eq!(o.status.code(), Some(1));
    let report = String::from_utf8(o.stdout).unwrap();
    assert!(report.starts_with("line 2: token 3 `[0]`"), "{report}");
    assert!(report.contains("1 of 2 lines accepted"));

    let o = opseq(&["validate", "--variant", "abs", "--in", &empty]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("0 of 0 lines accepted"));
}

#[test]
fn roundtrip_is_seeded_and_catches_a_broken_decoder() {
    let run = |seed: &str| {
        let o = opseq(&["roundtrip", "--seed", seed, "--count", "300"]);
        assert!(o.status.success());
        String::from_utf8(o.stdout).unwrap()
    };
    assert_eq!(run("3"), run("3"));
    assert!(run("3").contains("\"failed\": 0"));

    let d = Dir::new();
    let dump = d.path("dump");
    let o = opseq(&["roundtrip", "--seed", "3", "--count", "50", "--inject-fault", "--out", &dump]);
    assert_eq!(o.status.code(), Some(1));
    let first = d.read("dump");
    let rec: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    for key in ["src", "tgt", "align", "stream", "check"] {
        assert!(rec.get(key).is_some(), "{key} missing");
    }
}

#[test]
fn roundtrip_over_a_corpus() {
    let d = Dir::new();
    let [s, t, a] = toy(&d);
    let o = opseq(&["roundtrip", "--src", &s, "--tgt", &t, "--align", &a]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("\"instances\": 3"));
}

#[test]
fn eval_partial_reaches_100_on_the_last_bin() {
    let d = Dir::new();
    encode(&d, "rel", &[]);
    let streams = d.path("streams.rel");
    let refs = d.file("refs", &TGT.replace(" ##", ""));
    let out = d.path("curve.csv");
    let o = opseq(&["eval-partial", "--in", &streams, "--ref", &refs, "--bins", "4", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = d.read("curve.csv");
    let last = csv.lines().last().unwrap();
    assert_eq!(last, "4,1.0000,100.0000");

    let empty = d.file("empty", "");
    let o = opseq(&["eval-partial", "--in", &empty, "--ref", &empty]);
    assert!(!o.status.success());
}

#[test]
fn eval_partial_with_baseline_has_delta_column() {
    let d = Dir::new();
    encode(&d, "rel", &[]);
    encode(&d, "abs", &[]);
    let (rel, abs) = (d.path("streams.rel"), d.path("streams.abs"));
    let refs = d.file("refs", TGT);
    let o = opseq(&["eval-partial", "--in", &rel, "--ref", &refs, "--baseline", &abs, "--bins", "2"]);
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("bin,fraction,bleu,baseline,delta\n"));
    assert!(csv.lines().last().unwrap().ends_with(",100.0000,0.0000"));
}

#[test]
fn replay_dumps_snapshots_with_timestamps() {
    let d = Dir::new();
    let s = d.file("s", "a [SM] x [EOP] b [JB] y [EOP] [EOS]\n");
    let ts = d.file("ts", "0 10 20 30 40 50 60 70 80\n");
    let out = d.path("snaps");
    let o = opseq(&["replay", "--in", &s, "--timestamps", &ts, "--out", &out]);
    assert!(o.status.success());
    let lines: Vec<serde_json::Value> = d
        .read("snaps")
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["T"], serde_json::json!(["y", "x"]));
    assert_eq!(lines[1]["S"], serde_json::json!(["a", "b"]));
    assert_eq!(lines[1]["index"], 7);
    assert_eq!(lines[1]["time_ms"], 70);

    let short = d.file("short", "0 10\n");
    let errs = d.path("errs");
    let o = opseq(&["replay", "--in", &s, "--timestamps", &short, "--out", &out, "--errors", &errs]);
    assert!(o.status.success());
    assert!(d.read("errs").contains("9 tokens but 2 timestamps"));
}

#[test]
fn score_and_stats_reports() {
    let d = Dir::new();
    let hyp = d.file("hyp", "a b\nx\n");
    let rf = d.file("ref", "a b\ny z\n");
    let o = opseq(&["score", "--hyp", &hyp, "--ref", &rf]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["wer"], 0.5);
    assert_eq!(v["sentences"], 2);

    let s = d.file("s", "a [SM] x [EOP] b [JB] y [EOP] [EOS]\n");
    let o = opseq(&["stats", "--in", &s]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["totals"]["set_marker"], 1);
    assert_eq!(v["totals"]["jump_backward"], 1);
    assert_eq!(v["totals"]["reorder_distance"], 2);
}
