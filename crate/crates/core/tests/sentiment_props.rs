use proptest::prelude::*;
use trendmine_core::sentiment::{LabeledExample, NbModel, PriorMode, SentimentLabel};
use trendmine_core::text::tokens_for_test;

const WORDS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn example() -> impl Strategy<Value = (Vec<usize>, usize)> {
    (prop::collection::vec(0..WORDS.len(), 0..5), 0..3usize)
}

fn corpus() -> impl Strategy<Value = Vec<(Vec<usize>, usize)>> {
    prop::collection::vec(example(), 3..25).prop_map(|mut v| {
        // Every class needs at least one document.
        for (i, ex) in v.iter_mut().take(3).enumerate() {
            ex.1 = i;
        }
        // And the vocabulary must not be empty.
        v[0].0.push(0);
        v
    })
}

fn label(i: usize) -> SentimentLabel {
    [SentimentLabel::Negative, SentimentLabel::Neutral, SentimentLabel::Positive][i]
}

fn build(c: &[(Vec<usize>, usize)], relabel: impl Fn(usize) -> usize) -> Vec<LabeledExample> {
    c.iter()
        .map(|(ws, l)| LabeledExample {
            tokens: tokens_for_test(&ws.iter().map(|w| WORDS[*w]).collect::<Vec<_>>()),
            target: "obama".into(),
            label: label(relabel(*l)),
        })
        .collect()
}

/// Exact rational posterior comparison, independent of the model's own
/// scoring: prior numerators times smoothed likelihood products.
fn brute_force(examples: &[LabeledExample], query: &[&str], mode: PriorMode) -> SentimentLabel {
    let vocab: std::collections::BTreeSet<&str> =
        examples.iter().flat_map(|e| e.tokens.iter()).collect();
    let v = vocab.len() as u128;
    let order = [SentimentLabel::Neutral, SentimentLabel::Negative, SentimentLabel::Positive];
    let frac = |l: SentimentLabel| {
        let docs = examples.iter().filter(|e| e.label == l).count() as u128;
        let toks: u128 = examples.iter().filter(|e| e.label == l).map(|e| e.tokens.len() as u128).sum();
        let mut num = if mode == PriorMode::Uniform { 1 } else { docs };
        let mut den = 1u128;
        for q in query {
            let c = examples
                .iter()
                .filter(|e| e.label == l)
                .flat_map(|e| e.tokens.iter())
                .filter(|t| t == q)
                .count() as u128;
            num *= c + 1;
            den *= toks + v;
        }
        (num, den)
    };
    let mut best = order[0];
    for l in &order[1..] {
        let (nb, db) = frac(best);
        let (nl, dl) = frac(*l);
        if nl * db > nb * dl {
            best = *l;
        }
    }
    best
}

proptest! {
    #[test]
    fn likelihoods_normalise_exactly(c in corpus()) {
        let m = NbModel::train(&build(&c, |l| l)).unwrap();
        for l in SentimentLabel::ALL {
            let (mut num_sum, mut den) = (0u64, None);
            for w in m.vocabulary() {
                let (n, d) = m.likelihood_parts(w, l);
                num_sum += n;
                prop_assert!(den.is_none() || den == Some(d));
                den = Some(d);
            }
            prop_assert_eq!(Some(num_sum), den);
            let float: f64 = m.vocabulary().map(|w| m.word_likelihood(w, l)).sum();
            prop_assert!((float - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn log_space_agrees_with_exact(c in corpus(), q in prop::collection::vec(0..WORDS.len() + 1, 0..6), uniform: bool) {
        let mode = if uniform { PriorMode::Uniform } else { PriorMode::Empirical };
        let ex = build(&c, |l| l);
        let m = NbModel::train_with(&ex, mode).unwrap();
        let query: Vec<&str> = q.iter().map(|i| WORDS.get(*i).copied().unwrap_or("unseen")).collect();
        prop_assert_eq!(m.classify(&tokens_for_test(&query)), brute_force(&ex, &query, mode));
    }

    #[test]
    fn relabelling_permutes_decisions(c in corpus(), q in prop::collection::vec(0..WORDS.len(), 1..5)) {
        // Swap Negative and Positive; ties between them aside, the decision
        // must swap too.
        let swap = |l: usize| match l { 0 => 2, 2 => 0, x => x };
        let a = NbModel::train(&build(&c, |l| l)).unwrap();
        let b = NbModel::train(&build(&c, swap)).unwrap();
        let query: Vec<&str> = q.iter().map(|i| WORDS[*i]).collect();
        let toks = tokens_for_test(&query);
        let sa = a.log_posterior(&toks);
        let tied = (sa.get(SentimentLabel::Negative) - sa.get(SentimentLabel::Positive)).abs() < 1e-9;
        if !tied {
            let flip = |l: SentimentLabel| match l {
                SentimentLabel::Negative => SentimentLabel::Positive,
                SentimentLabel::Positive => SentimentLabel::Negative,
                x => x,
            };
            prop_assert_eq!(flip(a.classify(&toks)), b.classify(&toks));
        }
    }

    #[test]
    fn uninformative_token_never_changes_decision(c in corpus(), q in prop::collection::vec(0..WORDS.len(), 0..5), reps in 1..4usize) {
        // A word unseen in training has likelihood 1/(tokens(l)+|V|), which is
        // equal across labels only when the label token counts match; build
        // such a model by giving every class the same token total.
        let mut ex = build(&c, |l| l);
        let totals: Vec<usize> = (0..3).map(|i| ex.iter().filter(|e| e.label == label(i)).map(|e| e.tokens.len()).sum()).collect();
        let max = *totals.iter().max().unwrap();
        for (i, t) in totals.iter().enumerate() {
            let pad = vec!["pad"; max - t];
            let mut e = ex.iter().find(|e| e.label == label(i)).unwrap().clone();
            let mut words: Vec<String> = e.tokens.iter().map(String::from).collect();
            words.extend(pad.iter().map(|s| s.to_string()));
            e.tokens = tokens_for_test(&words.iter().map(String::as_str).collect::<Vec<_>>());
            let pos = ex.iter().position(|x| x.label == label(i)).unwrap();
            ex[pos] = e;
        }
        let m = NbModel::train(&ex).unwrap();
        let query: Vec<&str> = q.iter().map(|i| WORDS[*i]).collect();
        let mut padded = query.clone();
        padded.extend(std::iter::repeat_n("neverseen", reps));
        prop_assert_eq!(m.classify(&tokens_for_test(&query)), m.classify(&tokens_for_test(&padded)));
    }
}
