//! Latent Dirichlet Allocation fitted by collapsed Gibbs sampling.
//!
//! Each token's topic is resampled from
//! `p(k) ∝ (n_dk + α) · (n_kw + β) / (n_k + |V|·β)`
//! with its own assignment removed from the counts. Topic-word estimates
//! come from the final sample: `φ_kw = (n_kw + β) / (n_k + |V|·β)`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{self, SeededRng};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LdaError {
    #[error("corpus has no non-empty documents")]
    EmptyCorpus,
    #[error("topic index {index} out of range for {k} topics")]
    TopicIndexOutOfRange { index: usize, k: usize },
    #[error("invalid LDA configuration: {0}")]
    InvalidConfig(String),
    #[error("count invariant violated: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    pub top_n: usize,
    /// Tokens seen fewer times than this across the corpus are removed
    /// before sampling. 1 keeps everything.
    pub min_count: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self::with_topics(5)
    }
}

impl LdaConfig {
    /// Defaults for `k` topics: α = 50/k, β = 0.01, 1000 sweeps, top 15 words.
    pub fn with_topics(k: usize) -> Self {
        Self {
            k,
            alpha: 50.0 / k.max(1) as f64,
            beta: 0.01,
            iterations: 1000,
            seed: 0,
            top_n: 15,
            min_count: 1,
        }
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        let bad = |m: &str| Err(LdaError::InvalidConfig(m.into()));
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if self.top_n == 0 {
            return bad("top_n must be positive");
        }
        Ok(())
    }
}

/// Sampler state: assignments and the three count tables.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaState {
    k: usize,
    alpha: f64,
    beta: f64,
    vocab: Vec<String>,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u32>>,
    n_dk: Vec<Vec<u32>>,
    /// Row-major `k × |V|`.
    n_kw: Vec<u32>,
    n_k: Vec<u64>,
    dropped_docs: usize,
    sweeps: usize,
    rng: SeededRng,
}

impl LdaState {
    /// Builds the vocabulary (ids in order of first appearance), drops
    /// documents left empty, and assigns every token a uniform random topic.
    pub fn init<D, T>(docs: &[D], config: &LdaConfig) -> Result<Self, LdaError>
    where
        D: AsRef<[T]>,
        T: AsRef<str>,
    {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if config.k == 0 || !positive(config.alpha) || !positive(config.beta) {
            return Err(LdaError::InvalidConfig("k, alpha and beta must be positive".into()));
        }
        let (vocab, encoded, dropped_docs) = encode(docs, config.min_count.max(1));
        if encoded.is_empty() {
            return Err(LdaError::EmptyCorpus);
        }
        let mut rng = rng::seeded(config.seed);
        let k = config.k;
        let z: Vec<Vec<u32>> = encoded
            .iter()
            .map(|d| d.iter().map(|_| rng.gen_range(0..k as u32)).collect())
            .collect();
        Ok(Self::from_parts(vocab, encoded, z, dropped_docs, config, rng))
    }

    /// Starts from given assignments instead of random ones. `z` must match
    /// the shape of the encoded corpus and hold topics below `k`.
    pub fn with_assignments<D, T>(
        docs: &[D],
        z: Vec<Vec<u32>>,
        config: &LdaConfig,
    ) -> Result<Self, LdaError>
    where
        D: AsRef<[T]>,
        T: AsRef<str>,
    {
        let (vocab, encoded, dropped_docs) = encode(docs, config.min_count.max(1));
        if encoded.is_empty() {
            return Err(LdaError::EmptyCorpus);
        }
        let shape_ok = z.len() == encoded.len()
            && z.iter().zip(&encoded).all(|(a, d)| a.len() == d.len())
            && z.iter().flatten().all(|&t| (t as usize) < config.k);
        if !shape_ok {
            return Err(LdaError::InvalidConfig("assignments do not fit the corpus".into()));
        }
        let rng = rng::seeded(config.seed);
        Ok(Self::from_parts(vocab, encoded, z, dropped_docs, config, rng))
    }

    fn from_parts(
        vocab: Vec<String>,
        docs: Vec<Vec<u32>>,
        z: Vec<Vec<u32>>,
        dropped_docs: usize,
        config: &LdaConfig,
        rng: SeededRng,
    ) -> Self {
        let k = config.k;
        let v = vocab.len();
        let mut n_dk = vec![vec![0u32; k]; docs.len()];
        let mut n_kw = vec![0u32; k * v];
        let mut n_k = vec![0u64; k];
        for (d, (words, topics)) in docs.iter().zip(&z).enumerate() {
            for (&w, &t) in words.iter().zip(topics) {
                let t = t as usize;
                n_dk[d][t] += 1;
                n_kw[t * v + w as usize] += 1;
                n_k[t] += 1;
            }
        }
        Self {
            k,
            alpha: config.alpha,
            beta: config.beta,
            vocab,
            docs,
            z,
            n_dk,
            n_kw,
            n_k,
            dropped_docs,
            sweeps: 0,
            rng,
        }
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    /// Documents removed at init because they had no (retained) tokens.
    pub fn dropped_docs(&self) -> usize {
        self.dropped_docs
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.z
    }

    pub fn docs(&self) -> &[Vec<u32>] {
        &self.docs
    }

    pub fn doc_topic_counts(&self) -> &[Vec<u32>] {
        &self.n_dk
    }

    pub fn topic_word_count(&self, k: usize, w: usize) -> u32 {
        self.n_kw[k * self.vocab.len() + w]
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.n_k
    }

    /// One pass over every token in corpus order.
    pub fn sweep(&mut self) {
        let k = self.k;
        let v = self.vocab.len();
        let v_beta = v as f64 * self.beta;
        let mut weights = vec![0.0f64; k];
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i] as usize;
                let old = self.z[d][i] as usize;
                self.n_dk[d][old] -= 1;
                self.n_kw[old * v + w] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for (t, slot) in weights.iter_mut().enumerate() {
                    let p = (f64::from(self.n_dk[d][t]) + self.alpha)
                        * (f64::from(self.n_kw[t * v + w]) + self.beta)
                        / (self.n_k[t] as f64 + v_beta);
                    total += p;
                    *slot = total;
                }
                let u = self.rng.gen::<f64>() * total;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.z[d][i] = new as u32;
                self.n_dk[d][new] += 1;
                self.n_kw[new * v + w] += 1;
                self.n_k[new] += 1;
            }
        }
        self.sweeps += 1;
        debug_assert!(self.check_invariants().is_ok());
    }

    /// Verifies the count tables against the assignments.
    pub fn check_invariants(&self) -> Result<(), LdaError> {
        let v = self.vocab.len();
        let bad = |m: String| Err(LdaError::Inconsistent(m));
        let mut kw = vec![0u32; self.k * v];
        let mut kk = vec![0u64; self.k];
        for (d, (words, topics)) in self.docs.iter().zip(&self.z).enumerate() {
            let mut dk = vec![0u32; self.k];
            for (&w, &t) in words.iter().zip(topics) {
                let t = t as usize;
                if t >= self.k {
                    return bad(alloc::format!("doc {d}: topic {t} out of range"));
                }
                dk[t] += 1;
                kw[t * v + w as usize] += 1;
                kk[t] += 1;
            }
            if dk != self.n_dk[d] {
                return bad(alloc::format!("doc {d}: doc-topic counts disagree"));
            }
            let row_sum: u64 = self.n_dk[d].iter().map(|&c| u64::from(c)).sum();
            if row_sum != words.len() as u64 {
                return bad(alloc::format!("doc {d}: counts sum to {row_sum}, length {}", words.len()));
            }
        }
        if kw != self.n_kw {
            return bad("topic-word counts disagree".into());
        }
        for t in 0..self.k {
            let row: u64 = self.n_kw[t * v..(t + 1) * v].iter().map(|&c| u64::from(c)).sum();
            if row != self.n_k[t] {
                return bad(alloc::format!("topic {t}: word counts sum to {row}, total {}", self.n_k[t]));
            }
        }
        if kk != self.n_k || self.n_k.iter().sum::<u64>() != self.num_tokens() as u64 {
            return bad("topic totals disagree".into());
        }
        Ok(())
    }

    /// Topic-word distribution row for topic `k`.
    pub fn phi(&self, k: usize) -> Result<Vec<f64>, LdaError> {
        self.check_topic(k)?;
        let v = self.vocab.len();
        let den = self.n_k[k] as f64 + v as f64 * self.beta;
        Ok(self.n_kw[k * v..(k + 1) * v]
            .iter()
            .map(|&c| (f64::from(c) + self.beta) / den)
            .collect())
    }

    /// Document-topic distribution `(n_dk + α) / (len(d) + K·α)`.
    pub fn theta(&self, d: usize) -> Vec<f64> {
        let den = self.docs[d].len() as f64 + self.k as f64 * self.alpha;
        self.n_dk[d]
            .iter()
            .map(|&c| (f64::from(c) + self.alpha) / den)
            .collect()
    }

    fn check_topic(&self, k: usize) -> Result<(), LdaError> {
        if k >= self.k {
            return Err(LdaError::TopicIndexOutOfRange { index: k, k: self.k });
        }
        Ok(())
    }

    /// `(token, φ)` pairs for the `n` most likely words of topic `k`; equal
    /// counts are ordered by token.
    pub fn top_weighted(&self, k: usize, n: usize) -> Result<Vec<(String, f64)>, LdaError> {
        let phi = self.phi(k)?;
        let v = self.vocab.len();
        let mut ids: Vec<usize> = (0..v).collect();
        ids.sort_by(|&a, &b| {
            self.n_kw[k * v + b]
                .cmp(&self.n_kw[k * v + a])
                .then_with(|| self.vocab[a].cmp(&self.vocab[b]))
        });
        Ok(ids
            .into_iter()
            .take(n)
            .map(|i| (self.vocab[i].clone(), phi[i]))
            .collect())
    }

    pub fn top_words(&self, k: usize, n: usize) -> Result<Vec<String>, LdaError> {
        Ok(self
            .top_weighted(k, n)?
            .into_iter()
            .map(|(w, _)| w)
            .collect())
    }

    pub fn report(&self, top_n: usize) -> TopicReport {
        TopicReport {
            topics: (0..self.k)
                .map(|k| self.top_weighted(k, top_n).expect("k in range"))
                .collect(),
        }
    }
}

type Encoded = (Vec<String>, Vec<Vec<u32>>, usize);

fn encode<D, T>(docs: &[D], min_count: usize) -> Encoded
where
    D: AsRef<[T]>,
    T: AsRef<str>,
{
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        for t in d.as_ref() {
            *freq.entry(t.as_ref()).or_default() += 1;
        }
    }
    let mut ids: BTreeMap<&str, u32> = BTreeMap::new();
    let mut vocab = Vec::new();
    let mut encoded = Vec::new();
    let mut dropped = 0;
    for d in docs {
        let mut words = Vec::new();
        for t in d.as_ref() {
            let t = t.as_ref();
            if freq[t] < min_count {
                continue;
            }
            let id = *ids.entry(t).or_insert_with(|| {
                vocab.push(String::from(t));
                (vocab.len() - 1) as u32
            });
            words.push(id);
        }
        if words.is_empty() {
            dropped += 1;
        } else {
            encoded.push(words);
        }
    }
    (vocab, encoded, dropped)
}

/// Top words per topic with their φ probabilities, most likely first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicReport {
    pub topics: Vec<Vec<(String, f64)>>,
}

/// Initialises and runs `config.iterations` sweeps.
pub fn run<D, T>(docs: &[D], config: &LdaConfig) -> Result<(LdaState, TopicReport), LdaError>
where
    D: AsRef<[T]>,
    T: AsRef<str>,
{
    config.validate()?;
    let mut state = LdaState::init(docs, config)?;
    for _ in 0..config.iterations {
        state.sweep();
    }
    let report = state.report(config.top_n);
    Ok((state, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn cfg(k: usize, seed: u64) -> LdaConfig {
        LdaConfig {
            seed,
            ..LdaConfig::with_topics(k)
        }
    }

    #[test]
    fn single_token_corpus() {
        let s = LdaState::init(&[["x"]], &cfg(2, 1)).unwrap();
        assert_eq!(s.topic_totals().iter().sum::<u64>(), 1);
        s.check_invariants().unwrap();
    }

    #[test]
    fn empty_corpus_and_dropped_docs() {
        let empty: [[&str; 0]; 2] = [[], []];
        assert_eq!(LdaState::init(&empty, &cfg(2, 1)).unwrap_err(), LdaError::EmptyCorpus);
        let docs: [&[&str]; 3] = [&["a"], &[], &["b"]];
        let s = LdaState::init(&docs, &cfg(2, 1)).unwrap();
        assert_eq!(s.num_docs(), 2);
        assert_eq!(s.dropped_docs(), 1);
    }

    #[test]
    fn init_is_deterministic() {
        let docs = [["a", "b", "c"], ["c", "d", "a"]];
        let a = LdaState::init(&docs, &cfg(3, 9)).unwrap();
        let b = LdaState::init(&docs, &cfg(3, 9)).unwrap();
        assert_eq!(a.assignments(), b.assignments());
    }

    #[test]
    fn single_topic_is_a_point_mass() {
        let docs = [["a", "b", "c"], ["c", "d", "a"]];
        let c = LdaConfig { k: 1, ..cfg(2, 4) };
        let mut s = LdaState::init(&docs, &c).unwrap();
        let before = s.assignments().to_vec();
        s.sweep();
        assert_eq!(s.assignments(), &before[..]);
    }

    #[test]
    fn repeated_word_tops_every_topic() {
        let docs: Vec<Vec<&str>> = (0..10).map(|_| alloc::vec!["vote"; 4]).collect();
        let c = LdaConfig { iterations: 20, ..cfg(3, 2) };
        let (_, report) = run(&docs, &c).unwrap();
        assert_eq!(report.topics.len(), 3);
        for t in &report.topics {
            assert_eq!(t[0].0, "vote");
        }
    }

    #[test]
    fn top_words_ties_and_bounds() {
        // Every word once in one doc under one topic assignment: equal counts.
        let docs = [["delta", "alpha", "charlie", "bravo"]];
        let s = LdaState::with_assignments(&docs, alloc::vec![alloc::vec![0, 0, 0, 0]], &cfg(2, 0))
            .unwrap();
        assert_eq!(s.top_words(0, 10).unwrap(), ["alpha", "bravo", "charlie", "delta"]);
        assert_eq!(s.top_words(1, 2).unwrap(), ["alpha", "bravo"]);
        assert_eq!(
            s.top_words(2, 1).unwrap_err(),
            LdaError::TopicIndexOutOfRange { index: 2, k: 2 }
        );
    }

    #[test]
    fn phi_and_theta_normalise() {
        let docs: Vec<Vec<String>> = (0..30)
            .map(|i| (0..(i % 7 + 1)).map(|j| format!("w{}", (i * 3 + j) % 11)).collect())
            .collect();
        let c = LdaConfig { iterations: 5, ..cfg(4, 8) };
        let (s, _) = run(&docs, &c).unwrap();
        for k in 0..4 {
            let sum: f64 = s.phi(k).unwrap().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
        for d in 0..s.num_docs() {
            let sum: f64 = s.theta(d).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn min_count_cutoff() {
        let docs = [["a", "b"], ["a", "c"]];
        let c = LdaConfig { min_count: 2, ..cfg(2, 0) };
        let s = LdaState::init(&docs, &c).unwrap();
        assert_eq!(s.vocab(), ["a"]);
    }

    #[test]
    fn config_validation() {
        assert!(LdaConfig { k: 1, ..LdaConfig::default() }.validate().is_err());
        assert!(LdaConfig { beta: 0.0, ..LdaConfig::default() }.validate().is_err());
        assert!(LdaConfig::default().validate().is_ok());
        assert_eq!(LdaConfig::default().alpha, 10.0);
    }

    #[test]
    fn relabelled_start_gives_relabelled_report() {
        let docs = [["a", "b", "a"], ["c", "c", "d"]];
        let z = alloc::vec![alloc::vec![0, 0, 1], alloc::vec![1, 1, 0]];
        let perm = |t: &u32| 1 - *t;
        let zp: Vec<Vec<u32>> = z.iter().map(|d| d.iter().map(perm).collect()).collect();
        let s = LdaState::with_assignments(&docs, z, &cfg(2, 0)).unwrap();
        let sp = LdaState::with_assignments(&docs, zp, &cfg(2, 0)).unwrap();
        let r = s.report(3);
        let rp = sp.report(3);
        assert_eq!(r.topics[0], rp.topics[1]);
        assert_eq!(r.topics[1], rp.topics[0]);
    }
}
