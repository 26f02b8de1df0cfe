use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use opseq::align::{filter_record, parse_pharaoh, FilterConfig};
use opseq::metrics::{average_lagging, bleu, edit_counts, wer, EvalPair, LatencyTrace};
use opseq::relative::{run_relative, Edit};
use opseq::streaming::{replay, PartialCell};
use opseq::synth::mutate;
use opseq::token::{Op, SrcSlot, TgtSlot, Token};
use opseq::{
    build_tuples, decode, encode, encode_with, parse_stream, validate, AlignedSentencePair,
    MarkerPolicy, Variant, Word, DEFAULT_MAX_TGT_LEN as MAX,
};

const BOTH: [Variant; 2] = [Variant::Absolute, Variant::Relative];

fn word() -> impl Strategy<Value = Word> {
    prop::collection::vec("[a-e]{1,3}", 1..=3).prop_map(|p| Word::new(p).unwrap())
}

/// Arbitrary pair with any link set, many-to-many included.
fn pair() -> impl Strategy<Value = AlignedSentencePair> {
    (0usize..8, 0usize..8)
        .prop_flat_map(|(ls, lt)| {
            (
                prop::collection::vec(word(), ls),
                prop::collection::vec(word(), lt),
                prop::collection::vec(any::<bool>(), ls * lt),
                0.0f64..1.0,
            )
        })
        .prop_map(|(src, tgt, bits, density)| {
            let lt = tgt.len();
            // thin out the link matrix so sparse alignments are common too
            let links: Vec<_> = bits
                .iter()
                .enumerate()
                .filter(|&(k, &b)| b && (k as f64 * 0.618).fract() < density)
                .map(|(k, _)| (k / lt + 1, k % lt + 1))
                .collect();
            AlignedSentencePair::new(src, tgt, links).unwrap()
        })
}

/// Pair whose links never cross: targets follow source order.
fn monotone_pair() -> impl Strategy<Value = AlignedSentencePair> {
    (1usize..10, prop::collection::vec(0usize..4, 1..10)).prop_flat_map(|(ls, fert)| {
        let ls = ls.min(fert.len());
        let fert = fert[..ls].to_vec();
        let lt: usize = fert.iter().sum::<usize>();
        (
            prop::collection::vec(word(), ls),
            prop::collection::vec(word(), lt),
            Just(fert),
        )
            .prop_map(|(src, tgt, fert)| {
                let mut links = Vec::new();
                let mut j = 0;
                for (i, f) in fert.iter().enumerate() {
                    for _ in 0..*f {
                        j += 1;
                        links.push((i + 1, j));
                    }
                }
                AlignedSentencePair::new(src, tgt, links).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn tuples_keep_every_word_once(p in pair()) {
        let tuples = build_tuples(&p);
        prop_assert_eq!(tuples.source_words(), p.src().to_vec());
        prop_assert_eq!(tuples.target_words(), p.tgt().to_vec());
        prop_assert_eq!(tuples.target_len(), p.tgt().len());
        // a linked target belongs to the leftmost source word linked to it
        let mut src_index = 0;
        for t in tuples.tuples() {
            if let SrcSlot::Word(_) = t.src {
                src_index += 1;
            }
            for slot in &t.targets {
                if let TgtSlot::Word { pos, .. } = slot {
                    let owners: Vec<usize> =
                        p.links().iter().filter(|l| l.1 == *pos).map(|l| l.0).collect();
                    match owners.iter().min() {
                        Some(&i) => {
                            prop_assert!(matches!(t.src, SrcSlot::Word(_)));
                            prop_assert_eq!(i, src_index);
                        }
                        None => prop_assert!(matches!(t.src, SrcSlot::NoSource)),
                    }
                }
            }
        }
    }

    #[test]
    fn unaligned_targets_follow_their_predecessor(p in pair()) {
        let tuples = build_tuples(&p);
        let mut placed = BTreeSet::new();
        for t in tuples.tuples() {
            for slot in &t.targets {
                if let (SrcSlot::NoSource, Some(pos)) = (&t.src, slot.position()) {
                    prop_assert!(pos == 1 || placed.contains(&(pos - 1)));
                }
                if let Some(pos) = slot.position() {
                    placed.insert(pos);
                }
            }
        }
    }

    #[test]
    fn roundtrip_both_variants_and_policies(p in pair()) {
        let tuples = build_tuples(&p);
        for (variant, policy) in [
            (Variant::Absolute, MarkerPolicy::Lazy),
            (Variant::Relative, MarkerPolicy::Lazy),
            (Variant::Relative, MarkerPolicy::Eager),
        ] {
            let tokens = encode_with(&tuples, variant, policy);
            prop_assert!(validate(&tokens, variant, MAX).is_ok());
            let d = decode(&tokens, variant, MAX).unwrap();
            prop_assert!(d.complete);
            prop_assert!(d.diagnostics.is_empty());
            prop_assert_eq!(&d.transcription, &p.src().to_vec());
            prop_assert_eq!(&d.translation, &p.tgt().to_vec());
        }
    }

    #[test]
    fn lazy_never_sets_more_markers_than_eager(p in pair()) {
        let tuples = build_tuples(&p);
        let count = |policy| {
            encode_with(&tuples, Variant::Relative, policy)
                .iter()
                .filter(|t| **t == Op::SetMarker.token())
                .count()
        };
        prop_assert!(count(MarkerPolicy::Lazy) <= count(MarkerPolicy::Eager));
    }

    #[test]
    fn serialized_streams_reparse(p in pair()) {
        for variant in BOTH {
            let tokens = encode(&build_tuples(&p), variant);
            let text = opseq::token::render_tokens(&tokens);
            prop_assert_eq!(parse_stream(&text).unwrap(), tokens);
        }
    }

    #[test]
    fn monotone_needs_no_reordering(p in monotone_pair()) {
        let tokens = encode(&build_tuples(&p), Variant::Relative);
        let reorder = [Op::SetMarker, Op::JumpForward, Op::JumpBackward].map(Op::token);
        prop_assert!(!tokens.iter().any(|t| reorder.contains(t)));
    }

    #[test]
    fn variants_agree(p in pair()) {
        let tuples = build_tuples(&p);
        let a = decode(&encode(&tuples, Variant::Absolute), Variant::Absolute, MAX).unwrap();
        let r = decode(&encode(&tuples, Variant::Relative), Variant::Relative, MAX).unwrap();
        prop_assert_eq!(a.transcription, r.transcription);
        prop_assert_eq!(a.translation, r.translation);
    }

    #[test]
    fn streaming_matches_offline(p in pair()) {
        for variant in BOTH {
            let tokens = encode(&build_tuples(&p), variant);
            let session = replay(&tokens, None, variant, MAX).unwrap();
            let offline = decode(&tokens, variant, MAX).unwrap();
            prop_assert!(session.is_ended());
            let out = session.output();
            prop_assert_eq!(&out.transcription, &offline.transcription);
            prop_assert_eq!(&out.translation, &offline.translation);
            let snaps = session.snapshots();
            if let Some(last) = snaps.last() {
                prop_assert_eq!(&last.source, &offline.transcription);
                prop_assert_eq!(&last.translation(), &offline.translation);
            }
            for w in snaps.windows(2) {
                prop_assert!(w[0].token_index < w[1].token_index);
                prop_assert!(w[1].source.starts_with(&w[0].source));
                if variant == Variant::Absolute {
                    // written cells never change without a duplicate position
                    for (k, cell) in w[0].target.iter().enumerate() {
                        if let PartialCell::Word(_) = cell {
                            prop_assert_eq!(Some(cell), w[1].target.get(k));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn head_stays_in_bounds_and_markers_are_counted(p in pair()) {
        for policy in [MarkerPolicy::Lazy, MarkerPolicy::Eager] {
            let tokens = encode_with(&build_tuples(&p), Variant::Relative, policy);
            let mut set = 0;
            let mut ok = true;
            run_relative(&tokens, |edit, st| {
                if *edit == Edit::Op(Op::SetMarker) {
                    set += 1;
                }
                ok &= st.target_head() <= st.cells().len();
                ok &= st.marker_count() == set;
                ok &= st.source_head() == st.transcription().iter().map(|w| w.pieces().len()).sum::<usize>();
            })
            .unwrap();
            prop_assert!(ok);
        }
    }

    #[test]
    fn validator_and_decoder_agree_on_mutations(p in pair(), seed in any::<u64>(), rounds in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for variant in BOTH {
            let mut tokens = encode(&build_tuples(&p), variant);
            for _ in 0..rounds {
                tokens = mutate(&mut rng, &tokens);
            }
            let accepted = validate(&tokens, variant, MAX).is_ok();
            let decoded_fully = matches!(decode(&tokens, variant, MAX), Ok(d) if d.complete);
            prop_assert_eq!(accepted, decoded_fully, "{} {}", variant, opseq::token::render_tokens(&tokens));
        }
    }

    #[test]
    fn truncation_keeps_complete_tuples(p in pair(), cut in 0.0f64..1.0) {
        for variant in BOTH {
            let tokens = encode(&build_tuples(&p), variant);
            let ranges = validate(&tokens, variant, MAX).unwrap();
            let n = ((tokens.len() - 1) as f64 * cut) as usize;
            let d = decode(&tokens[..n], variant, MAX).unwrap();
            prop_assert!(!d.complete);
            let whole = ranges.iter().filter(|r| r.end <= n).count();
            let src_whole: usize = build_tuples(&p).tuples()[..whole]
                .iter()
                .filter(|t| matches!(t.src, SrcSlot::Word(_)))
                .count();
            prop_assert!(d.transcription.len() >= src_whole);
            prop_assert!(p.src().starts_with(&d.transcription));
        }
    }

    #[test]
    fn pharaoh_is_zero_based(links in prop::collection::btree_set((0usize..6, 0usize..6), 0..12)) {
        let line: Vec<String> = links.iter().map(|(i, j)| format!("{i}-{j}")).collect();
        let parsed = parse_pharaoh(&line.join(" "), 6, 6).unwrap();
        let expected: BTreeSet<_> = links.iter().map(|&(i, j)| (i + 1, j + 1)).collect();
        prop_assert_eq!(parsed, expected);
    }

    #[test]
    fn filter_ratio_is_exact(ls in 1usize..40, lt in 1usize..40) {
        let words = |n: usize| (0..n).map(|_| Word::atomic("w").unwrap()).collect::<Vec<_>>();
        let p = AlignedSentencePair::new(words(ls), words(lt), []).unwrap();
        let keep = filter_record(&p, &FilterConfig::default()).is_keep();
        prop_assert_eq!(keep, ls.max(lt) <= 5 * ls.min(lt));
    }
}

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-c]", 0..9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn edit_counts_are_consistent(h in sentence(), r in sentence()) {
        let c = edit_counts(&h, &r);
        prop_assert_eq!(c.ref_len, r.len());
        // every script turns r into h: |h| = |r| - D + I
        prop_assert_eq!(h.len() + c.deletions, r.len() + c.insertions);
        let back = edit_counts(&r, &h);
        prop_assert_eq!(c.errors(), back.errors());
        prop_assert!(c.errors() <= h.len().max(r.len()));
        prop_assert!(c.errors() >= h.len().abs_diff(r.len()));
        let p = EvalPair { hypothesis: h.clone(), reference: r.clone() };
        if h == r {
            prop_assert_eq!(wer(&p), 0.0);
        }
    }

    #[test]
    fn bleu_ignores_corpus_order(
        corpus in prop::collection::vec(("[a-d ]{0,20}", "[a-d ]{0,20}"), 1..8),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let pairs: Vec<EvalPair> = corpus.iter().map(|(h, r)| EvalPair::from_text(h, r)).collect();
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(bleu(&pairs), bleu(&shuffled));
        let s = bleu(&pairs);
        prop_assert!((0.0..=100.0).contains(&s));
    }

    #[test]
    fn bleu_of_identical_corpus_is_100(corpus in prop::collection::vec("[a-d]( [a-d]){3,10}", 1..6)) {
        let pairs: Vec<EvalPair> = corpus.iter().map(|s| EvalPair::from_text(s, &s.to_uppercase())).collect();
        prop_assert_eq!(bleu(&pairs), 100.0);
    }

    #[test]
    fn lagging_shifts_with_delays(
        src_len in 2usize..12,
        tgt_len in 1usize..12,
        raw in prop::collection::vec(0usize..12, 1..12),
        c in 0usize..4,
    ) {
        let mut delays: Vec<usize> = raw.into_iter().take(tgt_len).map(|d| d % src_len).collect();
        delays.sort_unstable();
        let base = LatencyTrace { delays: delays.clone(), src_len, tgt_len };
        let shifted = LatencyTrace {
            delays: delays.iter().map(|d| d + c).collect(),
            src_len,
            tgt_len,
        };
        // no delay reaches the full source in either trace, so tau is the same
        prop_assume!(shifted.delays.iter().all(|&d| d < src_len));
        let a = average_lagging(&base).unwrap();
        let b = average_lagging(&shifted).unwrap();
        prop_assert!((b - a - c as f64).abs() < 1e-9);
    }
}

#[test]
fn empty_pair_is_a_bare_end_token() {
    let p = AlignedSentencePair::new(vec![], vec![], []).unwrap();
    for variant in BOTH {
        let tokens = encode(&build_tuples(&p), variant);
        assert_eq!(tokens, vec![Token::from(opseq::token::Special::EndOfStream)]);
        assert!(validate(&tokens, variant, MAX).is_ok());
        let session = replay(&tokens, None, variant, MAX).unwrap();
        assert!(session.partial_hypotheses().is_empty());
    }
}
