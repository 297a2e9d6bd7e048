use trendmine_core::lda::{self, LdaConfig, LdaState};
use trendmine_core::synth::{default_topic_plan, generate_topic_corpus, TopicPlan};

fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, k - 1);
            out.push(q);
        }
    }
    out
}

/// Recovered φ rows re-indexed onto the planted vocabulary.
fn recovered_phi(state: &LdaState, vocab: &[String]) -> Vec<Vec<f64>> {
    (0..state.num_topics())
        .map(|k| {
            let row = state.phi(k).unwrap();
            vocab
                .iter()
                .map(|w| state.vocab().iter().position(|v| v == w).map_or(0.0, |i| row[i]))
                .collect()
        })
        .collect()
}

fn best_match_tv(planted: &[Vec<f64>], found: &[Vec<f64>]) -> Vec<f64> {
    permutations(planted.len())
        .into_iter()
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(t, &f)| total_variation(&planted[t], &found[f]))
                .collect::<Vec<f64>>()
        })
        .min_by(|a, b| a.iter().sum::<f64>().total_cmp(&b.iter().sum()))
        .unwrap()
}

#[test]
fn planted_three_topics_recovered() {
    let corpus = generate_topic_corpus(&default_topic_plan(), 2000, 40, 17).unwrap();
    let config = LdaConfig { seed: 3, ..LdaConfig::with_topics(3) };
    let (state, _) = lda::run(&corpus.docs, &config).unwrap();
    let tv = best_match_tv(&corpus.phi, &recovered_phi(&state, &corpus.vocabulary));
    assert!(tv.iter().all(|d| *d <= 0.15), "{tv:?}");
}

#[test]
fn disjoint_vocabularies_are_pure() {
    let mut plan: TopicPlan = default_topic_plan();
    plan.vocabularies.truncate(2);
    plan.leak = 0.0;
    let corpus = generate_topic_corpus(&plan, 300, 30, 5).unwrap();
    let config = LdaConfig { seed: 9, iterations: 200, ..LdaConfig::with_topics(2) };
    let (state, report) = lda::run(&corpus.docs, &config).unwrap();
    for own in &plan.vocabularies {
        let mut labels = [0usize; 2];
        for (doc, z) in state.docs().iter().zip(state.assignments()) {
            for (w, t) in doc.iter().zip(z) {
                if own.contains(&state.vocab()[*w as usize]) {
                    labels[*t as usize] += 1;
                }
            }
        }
        let total = labels[0] + labels[1];
        let purity = labels[0].max(labels[1]) as f64 / total as f64;
        assert!(purity >= 0.95, "purity {purity}");
    }
    for topic in &report.topics {
        let from = |v: &Vec<String>| topic.iter().all(|(w, _)| v.contains(w));
        assert!(plan.vocabularies.iter().any(from));
    }
}

#[test]
fn invariants_hold_every_sweep() {
    let corpus = generate_topic_corpus(&default_topic_plan(), 200, 15, 1).unwrap();
    let mut state = LdaState::init(&corpus.docs, &LdaConfig { seed: 4, ..LdaConfig::with_topics(4) }).unwrap();
    for _ in 0..50 {
        state.sweep();
        state.check_invariants().unwrap();
    }
    for k in 0..4 {
        assert!((state.phi(k).unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    for d in 0..state.num_docs() {
        assert!((state.theta(d).iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn same_seed_same_topics() {
    let corpus = generate_topic_corpus(&default_topic_plan(), 100, 10, 2).unwrap();
    let config = LdaConfig { seed: 8, iterations: 30, ..LdaConfig::with_topics(3) };
    let a = lda::run(&corpus.docs, &config).unwrap().1;
    let b = lda::run(&corpus.docs, &config).unwrap().1;
    assert_eq!(a, b);
}
