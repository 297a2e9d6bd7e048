//! Three-class multinomial Naive Bayes polarity classifier.
//!
//! Word likelihoods use add-one smoothing,
//! `P(w|l) = (count(w,l) + 1) / (tokens(l) + |V|)`, where `tokens(l)` is the
//! total token count of class `l`. With that denominator the likelihoods of
//! every vocabulary word sum to exactly one per class. Scores are summed in
//! log space so long token lists cannot underflow.

use core::cmp::Ordering;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::record::TweetRecord;
use crate::text::{detect_mentions, CandidateSpec, TextPipeline, TokenList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SentimentLabel {
    Negative,
    Neutral,
    Positive,
}

impl SentimentLabel {
    /// Decision order: on equal scores the earliest label here wins.
    pub const ALL: [SentimentLabel; 3] = [Self::Neutral, Self::Negative, Self::Positive];

    pub fn value(self) -> i8 {
        match self {
            Self::Negative => -1,
            Self::Neutral => 0,
            Self::Positive => 1,
        }
    }

    pub fn from_value(v: i8) -> Option<Self> {
        match v {
            -1 => Some(Self::Negative),
            0 => Some(Self::Neutral),
            1 => Some(Self::Positive),
            _ => None,
        }
    }

    /// Accepts `-1`, `0`, `1` and `+1`.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "-1" => Some(Self::Negative),
            "0" => Some(Self::Neutral),
            "1" | "+1" => Some(Self::Positive),
            _ => None,
        }
    }

    /// Position in [`SentimentLabel::ALL`].
    pub fn index(self) -> usize {
        match self {
            Self::Neutral => 0,
            Self::Negative => 1,
            Self::Positive => 2,
        }
    }
}

impl core::fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::Positive => f.write_str("+1"),
            other => write!(f, "{}", other.value()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub tokens: TokenList,
    pub target: String,
    pub label: SentimentLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabeledExampleError {
    #[error("text mentions {found} candidates; exactly one is required")]
    NotSingleTarget { found: usize },
    #[error("text mentions {mentioned:?}, not the labelled target {target:?}")]
    TargetMismatch { target: String, mentioned: String },
}

impl LabeledExample {
    /// Runs raw training text through the same pipeline used at inference
    /// and checks that it mentions exactly the labelled candidate.
    pub fn from_text(
        text: &str,
        target: &str,
        label: SentimentLabel,
        pipeline: &TextPipeline,
        candidates: &[CandidateSpec],
    ) -> Result<Self, LabeledExampleError> {
        let mentioned = detect_mentions(text, candidates);
        if mentioned.len() != 1 {
            return Err(LabeledExampleError::NotSingleTarget {
                found: mentioned.len(),
            });
        }
        if mentioned[0].name != target {
            return Err(LabeledExampleError::TargetMismatch {
                target: target.into(),
                mentioned: mentioned[0].name.clone(),
            });
        }
        Ok(Self {
            tokens: pipeline.preprocess(text),
            target: target.into(),
            label,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorMode {
    /// Class document frequencies of the training set.
    #[default]
    Empirical,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SentimentError {
    #[error("training data has no example labelled {0}")]
    MissingLabelClass(SentimentLabel),
    #[error("evaluation set is empty")]
    EmptyEvaluationSet,
    #[error("training data contains no tokens")]
    EmptyVocabulary,
}

/// Per-class scores indexed like [`SentimentLabel::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelScores([f64; 3]);

const NEAR_TIE: f64 = 1e-9;

impl LabelScores {
    pub fn get(&self, label: SentimentLabel) -> f64 {
        self.0[label.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (SentimentLabel, f64)> + '_ {
        SentimentLabel::ALL.into_iter().zip(self.0)
    }

    /// First label (in decision order) holding the strictly largest score.
    pub fn argmax(&self) -> SentimentLabel {
        let mut best = 0;
        for i in 1..3 {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        SentimentLabel::ALL[best]
    }
}

/// Trained counts. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NbModel {
    word_counts: BTreeMap<String, [u64; 3]>,
    label_token_counts: [u64; 3],
    label_doc_counts: [u64; 3],
    prior_mode: PriorMode,
}

impl NbModel {
    pub fn train(examples: &[LabeledExample]) -> Result<Self, SentimentError> {
        Self::train_with(examples, PriorMode::Empirical)
    }

    pub fn train_with(
        examples: &[LabeledExample],
        prior_mode: PriorMode,
    ) -> Result<Self, SentimentError> {
        let mut word_counts: BTreeMap<String, [u64; 3]> = BTreeMap::new();
        let mut label_token_counts = [0u64; 3];
        let mut label_doc_counts = [0u64; 3];
        for ex in examples {
            let li = ex.label.index();
            label_doc_counts[li] += 1;
            for tok in ex.tokens.iter() {
                match word_counts.get_mut(tok) {
                    Some(c) => c[li] += 1,
                    None => {
                        let mut c = [0; 3];
                        c[li] = 1;
                        word_counts.insert(tok.into(), c);
                    }
                }
                label_token_counts[li] += 1;
            }
        }
        if let Some(missing) = SentimentLabel::ALL
            .into_iter()
            .find(|l| label_doc_counts[l.index()] == 0)
        {
            return Err(SentimentError::MissingLabelClass(missing));
        }
        if word_counts.is_empty() {
            return Err(SentimentError::EmptyVocabulary);
        }
        Ok(Self {
            word_counts,
            label_token_counts,
            label_doc_counts,
            prior_mode,
        })
    }

    pub fn vocabulary_size(&self) -> usize {
        self.word_counts.len()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.word_counts.keys().map(String::as_str)
    }

    pub fn prior_mode(&self) -> PriorMode {
        self.prior_mode
    }

    pub fn word_count(&self, word: &str, label: SentimentLabel) -> u64 {
        self.word_counts.get(word).map_or(0, |c| c[label.index()])
    }

    pub fn label_token_count(&self, label: SentimentLabel) -> u64 {
        self.label_token_counts[label.index()]
    }

    pub fn label_doc_count(&self, label: SentimentLabel) -> u64 {
        self.label_doc_counts[label.index()]
    }

    pub fn prior(&self, label: SentimentLabel) -> f64 {
        match self.prior_mode {
            PriorMode::Uniform => 1.0 / 3.0,
            PriorMode::Empirical => {
                let total: u64 = self.label_doc_counts.iter().sum();
                self.label_doc_count(label) as f64 / total as f64
            }
        }
    }

    /// Numerator and denominator of the smoothed likelihood, for exact
    /// rational checks.
    pub fn likelihood_parts(&self, word: &str, label: SentimentLabel) -> (u64, u64) {
        (
            self.word_count(word, label) + 1,
            self.label_token_count(label) + self.vocabulary_size() as u64,
        )
    }

    pub fn word_likelihood(&self, word: &str, label: SentimentLabel) -> f64 {
        let (num, den) = self.likelihood_parts(word, label);
        num as f64 / den as f64
    }

    /// Unnormalised log posterior per class. Repeated tokens contribute once
    /// per occurrence.
    pub fn log_posterior(&self, tokens: &TokenList) -> LabelScores {
        let v = self.vocabulary_size() as u64;
        let mut scores = [0.0f64; 3];
        for label in SentimentLabel::ALL {
            let li = label.index();
            let den = libm::log((self.label_token_counts[li] + v) as f64);
            let mut s = libm::log(self.prior(label));
            for tok in tokens.iter() {
                let count = self.word_counts.get(tok).map_or(0, |c| c[li]);
                s += libm::log((count + 1) as f64) - den;
            }
            scores[li] = s;
        }
        LabelScores(scores)
    }

    /// Maximum-posterior label; ties resolve Neutral, then Negative, then
    /// Positive.
    ///
    /// Scores that agree to within rounding are compared exactly as
    /// rationals when the products fit in 128 bits, so mathematically equal
    /// posteriors always take the tie order.
    pub fn classify(&self, tokens: &TokenList) -> SentimentLabel {
        let scores = self.log_posterior(tokens).0;
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let slack = NEAR_TIE * max.abs().max(1.0);
        let close: Vec<usize> = (0..3).filter(|&i| scores[i] >= max - slack).collect();
        let Some(&first) = close.first() else {
            return LabelScores(scores).argmax();
        };
        let mut best = first;
        for &i in &close[1..] {
            let greater = match self.exact_cmp(tokens, i, best) {
                Some(ord) => ord == Ordering::Greater,
                None => scores[i] > scores[best],
            };
            if greater {
                best = i;
            }
        }
        SentimentLabel::ALL[best]
    }

    /// Posterior of label index `li` as a fraction, up to a factor shared by
    /// all labels. `None` on overflow.
    fn exact_posterior(&self, tokens: &TokenList, li: usize) -> Option<(u128, u128)> {
        let v = self.vocabulary_size() as u128;
        let mut num: u128 = match self.prior_mode {
            PriorMode::Uniform => 1,
            PriorMode::Empirical => u128::from(self.label_doc_counts[li]),
        };
        let mut den: u128 = 1;
        let label_den = u128::from(self.label_token_counts[li]) + v;
        for tok in tokens.iter() {
            let count = self.word_counts.get(tok).map_or(0, |c| c[li]);
            num = num.checked_mul(u128::from(count) + 1)?;
            den = den.checked_mul(label_den)?;
        }
        Some((num, den))
    }

    fn exact_cmp(&self, tokens: &TokenList, a: usize, b: usize) -> Option<Ordering> {
        let (na, da) = self.exact_posterior(tokens, a)?;
        let (nb, db) = self.exact_posterior(tokens, b)?;
        Some(na.checked_mul(db)?.cmp(&nb.checked_mul(da)?))
    }

    /// Polarity toward the single candidate a text mentions. Texts naming no
    /// candidate or more than one are not scored.
    pub fn classify_candidate<'c>(
        &self,
        record: &TweetRecord,
        pipeline: &TextPipeline,
        candidates: &'c [CandidateSpec],
    ) -> Option<(&'c CandidateSpec, SentimentLabel)> {
        self.classify_text_for_candidate(&record.text, pipeline, candidates)
    }

    pub fn classify_text_for_candidate<'c>(
        &self,
        text: &str,
        pipeline: &TextPipeline,
        candidates: &'c [CandidateSpec],
    ) -> Option<(&'c CandidateSpec, SentimentLabel)> {
        match detect_mentions(text, candidates).as_slice() {
            [only] => Some((*only, self.classify(&pipeline.preprocess(text)))),
            _ => None,
        }
    }

    pub fn evaluate(&self, held_out: &[LabeledExample]) -> Result<Evaluation, SentimentError> {
        if held_out.is_empty() {
            return Err(SentimentError::EmptyEvaluationSet);
        }
        let mut confusion = [[0u64; 3]; 3];
        for ex in held_out {
            confusion[ex.label.index()][self.classify(&ex.tokens).index()] += 1;
        }
        let correct: u64 = (0..3).map(|i| confusion[i][i]).sum();
        Ok(Evaluation {
            accuracy: correct as f64 / held_out.len() as f64,
            total: held_out.len() as u64,
            confusion,
        })
    }
}

/// Accuracy and confusion counts. Rows are true labels and columns predicted
/// labels, both in [`SentimentLabel::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub total: u64,
    pub confusion: [[u64; 3]; 3],
}

impl Evaluation {
    pub fn count(&self, truth: SentimentLabel, predicted: SentimentLabel) -> u64 {
        self.confusion[truth.index()][predicted.index()]
    }
}

/// Splits labelled examples into train and held-out parts by position: every
/// `k`-th example (starting at `offset`) is held out.
pub fn interleaved_split(
    examples: Vec<LabeledExample>,
    k: usize,
    offset: usize,
) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
    let k = k.max(2);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, ex) in examples.into_iter().enumerate() {
        if i % k == offset % k {
            test.push(ex);
        } else {
            train.push(ex);
        }
    }
    (train, test)
}
