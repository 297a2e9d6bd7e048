use proptest::prelude::*;
use trendmine_core::text::{detect_mentions, CandidatePair, TextPipeline};

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => "[a-zA-Z]{1,8}",
        1 => prop::sample::select(vec![
            "not", "no", "never", "don't", "isn't", "Can't", "cannot", "won’t", "NOT_yet",
        ])
        .prop_map(String::from),
        1 => "[a-z]{1,5}[,.!?;:]",
        1 => "#[a-zA-Z0-9_]{1,6}",
        1 => "@[a-z0-9_]{1,6}:?",
        1 => "https?://t\\.co/[a-zA-Z0-9]{1,6}",
        1 => prop::sample::select(vec!["RT", "2012", "obama", "Mitt", "romney's", "...", "—"])
            .prop_map(String::from),
        1 => "\\PC{1,4}",
    ]
}

fn text() -> impl Strategy<Value = String> {
    (prop::collection::vec(word(), 0..14), prop::collection::vec(" |  |\t|\n", 14)).prop_map(
        |(words, spaces)| {
            words
                .iter()
                .zip(spaces.iter().cycle())
                .map(|(w, s)| format!("{w}{s}"))
                .collect()
        },
    )
}

proptest! {
    #[test]
    fn preprocess_is_idempotent(t in text()) {
        let p = TextPipeline::default();
        let once = p.preprocess(&t);
        let twice = p.preprocess(&once.joined());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn clean_never_lengthens(t in text()) {
        let p = TextPipeline::default();
        prop_assert!(p.clean(&t).chars().count() <= t.chars().count());
    }

    #[test]
    fn tokens_have_no_whitespace(t in text()) {
        let p = TextPipeline::default();
        for tok in p.preprocess(&t).iter() {
            prop_assert!(!tok.is_empty() && !tok.chars().any(char::is_whitespace));
        }
    }

    #[test]
    fn negation_only_prefixes(t in text()) {
        let p = TextPipeline::default();
        let marked = p.mark_negation(&t);
        let before: Vec<&str> = t.split_whitespace().collect();
        let after: Vec<&str> = marked.split_whitespace().collect();
        prop_assert_eq!(before.len(), after.len());
        for (b, a) in before.iter().zip(&after) {
            prop_assert!(a == b || a.strip_prefix("NOT_") == Some(*b), "{} -> {}", b, a);
        }
    }

    #[test]
    fn appending_an_alias_keeps_mentions(t in text(), alias in prop::sample::select(vec!["obama", "barack", "romney", "mitt"]), spaced: bool) {
        let pair = CandidatePair::election_2012();
        let c = pair.as_slice();
        let before = detect_mentions(&t, c);
        let longer = if spaced { format!("{t} {alias}") } else { format!("{t}{alias}") };
        let after = detect_mentions(&longer, c);
        for m in before {
            prop_assert!(after.contains(&m));
        }
    }
}

#[test]
fn reference_negation_sentence() {
    let p = TextPipeline::default();
    assert_eq!(
        p.mark_negation("don't have favorite candidate, but ill vote for Obama anyway!"),
        "don't NOT_have NOT_favorite NOT_candidate, but ill vote for Obama anyway!"
    );
}
