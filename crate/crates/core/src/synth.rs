//! Seeded synthetic corpora with planted ground truth.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use chrono::NaiveDate;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Dirichlet;
use serde::{Deserialize, Serialize};

use crate::bucket::{date_from_day_number, day_number, TimeWindow, DEFAULT_DAY_OFFSET_MINUTES};
use crate::geo::{election_2012_results, Winner};
use crate::kdtree::{default_states, squared_distance, StatePoint};
use crate::record::{GeoPoint, PollMethod, PollRecord, Population, TweetRecord};
use crate::rng::{derive_seed, seeded, SeededRng, RNG_ALGORITHM};
use crate::sentiment::SentimentLabel;
use crate::text::{CandidatePair, TextPipeline};
use crate::trends::Leader;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("at least 3 labeled examples are needed, got {0}")]
    TooFewExamples(usize),
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidSpec(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub day: NaiveDate,
    pub multiplier: f64,
    /// Tag carried by a large share of that day's records.
    #[serde(default)]
    pub hashtag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumePlan {
    /// Records without coordinates on an ordinary day.
    pub base: u32,
    /// Relative day-to-day jitter, uniform in `[-noise, noise]`.
    pub noise: f64,
    pub spikes: Vec<Spike>,
}

/// Geo-tagged records for one state. `proportions` are the shares of
/// (positive A, negative A, positive B, negative B); the remainder mentions
/// one candidate neutrally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePlan {
    pub code: String,
    pub records: u32,
    pub proportions: [f64; 4],
}

impl StatePlan {
    pub fn planted_winner(&self) -> Winner {
        let [pa, na, pb, nb] = self.proportions;
        let (lhs, rhs) = (pa * nb, na * pb);
        if lhs > rhs {
            Winner::A
        } else if lhs < rhs {
            Winner::B
        } else {
            Winner::Undecided
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
    pub neutral: Vec<String>,
    pub noise: Vec<String>,
}

/// Mention mix for records without coordinates. The remainder after the
/// three shares names no candidate. On crossover days A and B swap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionPlan {
    pub a_only: f64,
    pub b_only: f64,
    pub both: f64,
    #[serde(default)]
    pub crossover_days: Vec<NaiveDate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelMix {
    pub negative: f64,
    pub neutral: f64,
    pub positive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicPlan {
    pub vocabularies: Vec<Vec<String>>,
    /// Mass each topic spreads uniformly over the whole vocabulary.
    pub leak: f64,
    /// Symmetric Dirichlet prior of document topic mixtures.
    pub doc_alpha: f64,
    /// Topic words added to each generated record.
    pub words_per_record: u32,
}

impl TopicPlan {
    /// Union vocabulary in first-appearance order and one φ row per topic.
    pub fn phi(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let mut vocab: Vec<String> = Vec::new();
        for v in &self.vocabularies {
            for w in v {
                if !vocab.contains(w) {
                    vocab.push(w.clone());
                }
            }
        }
        let n = vocab.len() as f64;
        let rows = self
            .vocabularies
            .iter()
            .map(|own| {
                let own_mass = (1.0 - self.leak) / own.len() as f64;
                vocab
                    .iter()
                    .map(|w| {
                        let hits = own.iter().filter(|o| *o == w).count() as f64;
                        hits * own_mass + self.leak / n
                    })
                    .collect()
            })
            .collect();
        (vocab, rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollPlan {
    pub first_day: NaiveDate,
    pub last_day: NaiveDate,
    pub count: u32,
    /// Days on which A leads; B leads on the rest.
    pub a_lead_days: u32,
    /// Typical support level of each candidate, in percent.
    pub level: f64,
    /// Size of the planted daily lead, in points.
    pub lead_margin: f64,
    /// Weights for automated phone, phone, internet, mixed.
    pub method_weights: [f64; 4],
    pub likely_voter_share: f64,
    pub pollsters: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub first_day: NaiveDate,
    pub last_day: NaiveDate,
    pub day_offset_minutes: i32,
    pub candidates: CandidatePair,
    pub volume: VolumePlan,
    pub states: Vec<StatePlan>,
    /// Maximum distance of a record from its state anchor, in degrees.
    pub geo_jitter_degrees: f64,
    pub lexicon: Lexicon,
    pub mentions: MentionPlan,
    pub label_mix: LabelMix,
    pub topics: TopicPlan,
    #[serde(default)]
    pub polls: Option<PollPlan>,
    pub sources: Vec<(String, f64)>,
    pub general_hashtags: Vec<String>,
    pub hashtag_rate: f64,
    pub spike_hashtag_rate: f64,
    pub url_rate: f64,
    pub reply_rate: f64,
    pub retweet_rate: f64,
    pub negation_rate: f64,
    pub authors: u32,
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|w| String::from(*w)).collect()
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid literal date")
}

pub fn default_lexicon() -> Lexicon {
    Lexicon {
        positive: words(&[
            "great", "love", "awesome", "win", "best", "proud", "strong", "amazing", "excellent",
            "support", "brilliant", "hope", "inspiring", "fantastic", "smart", "honest", "happy",
            "good", "wonderful", "impressive", "solid", "trust", "yes", "congrats", "victory",
        ]),
        negative: words(&[
            "liar", "fail", "worst", "hate", "terrible", "awful", "disaster", "lies", "weak",
            "wrong", "pathetic", "clueless", "shame", "lose", "bad", "horrible", "angry", "scary",
            "disgusting", "corrupt", "fraud", "ridiculous", "embarrassing", "sad", "failed",
        ]),
        neutral: words(&[
            "watching", "said", "tonight", "speech", "says", "talking", "interview", "news",
            "live", "rally", "visit", "stage", "answer", "question", "town", "hall", "coverage",
            "statement", "schedule", "meeting", "announces", "comments", "update", "stream",
            "transcript",
        ]),
        noise: words(&[
            "election", "vote", "president", "campaign", "people", "america", "country", "ohio",
            "florida", "voters", "poll", "state", "media", "twitter", "video", "photo", "watch",
            "time", "night", "week", "debate", "nation", "party", "race", "day",
        ]),
    }
}

pub fn default_topic_plan() -> TopicPlan {
    TopicPlan {
        vocabularies: vec![
            words(&[
                "jobs", "taxes", "deficit", "economy", "unemployment", "budget", "spending",
                "growth", "wages", "debt", "business", "market", "trade", "manufacturing",
                "income",
            ]),
            words(&[
                "libya", "benghazi", "iran", "israel", "china", "military", "troops", "embassy",
                "syria", "afghanistan", "war", "terror", "security", "nuclear", "sanctions",
            ]),
            words(&[
                "abortion", "healthcare", "medicare", "insurance", "women", "rights", "marriage",
                "education", "students", "teachers", "immigration", "contraception", "equality",
                "vouchers", "seniors",
            ]),
        ],
        leak: 0.05,
        doc_alpha: 0.2,
        words_per_record: 2,
    }
}

fn default_sources() -> Vec<(String, f64)> {
    [
        ("Twitter for iPhone", 32.0),
        ("web", 22.0),
        ("Twitter for Android", 20.0),
        ("Echofon", 2.7),
        ("Mobile Web", 2.5),
        ("Twitter for iPad", 2.3),
        ("TweetDeck", 2.3),
        ("TweetCaster for Android", 1.8),
        ("twitterfeed", 1.4),
        ("Tweet Button", 1.1),
        ("Twitter for BlackBerry", 3.0),
        ("Instagram", 2.0),
        ("HootSuite", 2.0),
        ("Tweetbot for iOS", 1.9),
        ("Twitter for Mac", 1.5),
        ("dlvr.it", 1.5),
    ]
    .iter()
    .map(|(s, w)| (String::from(*s), *w))
    .collect()
}

impl ScenarioSpec {
    /// Sep 29 to Nov 16 2012 with spikes on the debate days and election day,
    /// the 2012 state winners planted at 200 geo records each, and a poll
    /// series over Oct 1 to Nov 5 in which A leads 17 of 36 days.
    pub fn election_2012(seed: u64) -> Self {
        let mut rng = seeded(derive_seed(seed, 0));
        let states = default_states()
            .into_iter()
            .map(|s| {
                let winner = election_2012_results()
                    .get(&s.code)
                    .copied()
                    .unwrap_or(Winner::A);
                StatePlan {
                    proportions: planted_proportions(winner, 0.1 + 0.2 * rng.gen::<f64>()),
                    code: s.code,
                    records: 200,
                }
            })
            .collect();
        let spike = |m: u32, d: u32, multiplier: f64, tag: &str| Spike {
            day: ymd(2012, m, d),
            multiplier,
            hashtag: Some(tag.into()),
        };
        Self {
            seed,
            first_day: ymd(2012, 9, 29),
            last_day: ymd(2012, 11, 16),
            day_offset_minutes: DEFAULT_DAY_OFFSET_MINUTES,
            candidates: CandidatePair::election_2012(),
            volume: VolumePlan {
                base: 400,
                noise: 0.1,
                spikes: vec![
                    spike(10, 3, 3.0, "#debate"),
                    spike(10, 11, 3.0, "#vpdebate"),
                    spike(10, 16, 3.0, "#debate"),
                    spike(10, 22, 3.0, "#debate"),
                    spike(11, 6, 6.0, "#electionday"),
                ],
            },
            states,
            geo_jitter_degrees: 0.1,
            lexicon: default_lexicon(),
            mentions: MentionPlan {
                a_only: 0.55,
                b_only: 0.35,
                both: 0.05,
                crossover_days: vec![ymd(2012, 10, 4), ymd(2012, 10, 5)],
            },
            label_mix: LabelMix {
                negative: 0.64,
                neutral: 0.28,
                positive: 0.08,
            },
            topics: default_topic_plan(),
            polls: Some(PollPlan {
                first_day: ymd(2012, 10, 1),
                last_day: ymd(2012, 11, 5),
                count: 103,
                a_lead_days: 17,
                level: 47.0,
                lead_margin: 2.0,
                method_weights: [53.4, 24.3, 18.4, 3.9],
                likely_voter_share: 0.98,
                pollsters: words(&[
                    "Rasmussen", "Gallup", "Ipsos", "YouGov", "PPP", "IBD/TIPP", "ARG", "Pew",
                    "Monmouth", "CNN/ORC",
                ]),
            }),
            sources: default_sources(),
            general_hashtags: words(&[
                "#election2012", "#vote", "#tcot", "#p2", "#politics", "#gop", "#forward",
            ]),
            hashtag_rate: 0.3,
            spike_hashtag_rate: 0.6,
            url_rate: 0.2,
            reply_rate: 0.1,
            retweet_rate: 0.1,
            negation_rate: 0.3,
            authors: 20_000,
        }
    }

    pub fn days(&self) -> Vec<NaiveDate> {
        (day_number(self.first_day)..=day_number(self.last_day))
            .map(date_from_day_number)
            .collect()
    }

    pub fn spike_days(&self) -> Vec<NaiveDate> {
        let mut d: Vec<_> = self.volume.spikes.iter().map(|s| s.day).collect();
        d.sort();
        d
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.validate_with_anchors(&default_states())
    }

    pub fn validate_with_anchors(&self, anchors: &[StatePoint]) -> Result<(), SynthError> {
        if self.first_day > self.last_day {
            return Err(invalid("empty day range"));
        }
        let share = |x: f64| x.is_finite() && (0.0..=1.0).contains(&x);
        if !(self.volume.noise.is_finite() && (0.0..1.0).contains(&self.volume.noise)) {
            return Err(invalid("volume noise must lie in [0, 1)"));
        }
        let mut spike_days = BTreeMap::new();
        for s in &self.volume.spikes {
            if s.day < self.first_day || s.day > self.last_day {
                return Err(invalid(format!("spike day {} outside the range", s.day)));
            }
            if !(s.multiplier.is_finite() && s.multiplier > 0.0) {
                return Err(invalid(format!("spike multiplier on {} must be positive", s.day)));
            }
            if spike_days.insert(s.day, ()).is_some() {
                return Err(invalid(format!("spike day {} repeated", s.day)));
            }
        }
        let mut codes = BTreeMap::new();
        for p in &self.states {
            if !anchors.iter().any(|a| a.code == p.code) {
                return Err(invalid(format!("unknown state {}", p.code)));
            }
            if codes.insert(p.code.as_str(), ()).is_some() {
                return Err(invalid(format!("state {} planned twice", p.code)));
            }
            let sum: f64 = p.proportions.iter().sum();
            if !p.proportions.iter().all(|x| share(*x)) || sum > 1.0 + 1e-12 {
                return Err(invalid(format!("state {} proportions must sum to at most 1", p.code)));
            }
        }
        if !self.states.is_empty() {
            let min = min_anchor_distance(anchors);
            let r = self.geo_jitter_degrees;
            if !(r.is_finite() && r >= 0.0 && r < 0.5 * min) {
                return Err(invalid(format!(
                    "geo jitter {r} must be below half the closest anchor spacing {min}"
                )));
            }
        }
        self.validate_lexicon()?;
        let m = &self.mentions;
        if ![m.a_only, m.b_only, m.both].iter().all(|x| share(*x))
            || m.a_only + m.b_only + m.both > 1.0 + 1e-12
        {
            return Err(invalid("mention shares must sum to at most 1"));
        }
        let l = self.label_mix;
        if ![l.negative, l.neutral, l.positive].iter().all(|x| share(*x))
            || l.negative + l.neutral + l.positive <= 0.0
        {
            return Err(invalid("label mix must be non-negative with a positive total"));
        }
        let t = &self.topics;
        if t.vocabularies.is_empty() || t.vocabularies.iter().any(Vec::is_empty) {
            return Err(invalid("every planted topic needs at least one word"));
        }
        if !share(t.leak) || !(t.doc_alpha.is_finite() && t.doc_alpha > 0.0) {
            return Err(invalid("topic leak must lie in [0, 1] and doc_alpha be positive"));
        }
        if self.sources.is_empty()
            || self.sources.iter().any(|(_, w)| !(w.is_finite() && *w >= 0.0))
            || self.sources.iter().all(|(_, w)| *w == 0.0)
        {
            return Err(invalid("source weights must be non-negative with a positive total"));
        }
        for r in [
            self.hashtag_rate,
            self.spike_hashtag_rate,
            self.url_rate,
            self.reply_rate,
            self.retweet_rate,
            self.negation_rate,
        ] {
            if !share(r) {
                return Err(invalid("rates must lie in [0, 1]"));
            }
        }
        if self.general_hashtags.is_empty() && self.hashtag_rate > 0.0 {
            return Err(invalid("hashtag rate set without any general hashtags"));
        }
        for tag in self
            .general_hashtags
            .iter()
            .chain(self.volume.spikes.iter().filter_map(|s| s.hashtag.as_ref()))
        {
            if !tag.starts_with('#') || tag.len() < 2 || self.contains_alias(tag) {
                return Err(invalid(format!("bad hashtag {tag:?}")));
            }
        }
        if self.authors == 0 {
            return Err(invalid("at least one author is needed"));
        }
        if let Some(p) = &self.polls {
            let days = (day_number(p.last_day) - day_number(p.first_day) + 1).max(0) as u32;
            if days == 0 {
                return Err(invalid("empty poll day range"));
            }
            if p.count < days {
                return Err(invalid("poll count must cover every poll day"));
            }
            if p.a_lead_days > days {
                return Err(invalid("more A-lead days than poll days"));
            }
            if !(p.lead_margin >= 1.0 && p.level - p.lead_margin >= 1.0 && p.level + p.lead_margin <= 49.0)
            {
                return Err(invalid("poll level and margin out of range"));
            }
            if p.method_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
                || p.method_weights.iter().sum::<f64>() <= 0.0
                || !share(p.likely_voter_share)
                || p.pollsters.is_empty()
            {
                return Err(invalid("poll method weights, voter share or pollsters invalid"));
            }
        }
        Ok(())
    }

    fn contains_alias(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        self.candidates
            .as_slice()
            .iter()
            .flat_map(|c| c.aliases.iter())
            .any(|a| w.contains(a.as_str()))
    }

    fn validate_lexicon(&self) -> Result<(), SynthError> {
        let pipeline = TextPipeline::default();
        let lx = &self.lexicon;
        let mut seen = BTreeMap::new();
        let topic_words = self.topics.vocabularies.iter().flatten();
        let lists = [&lx.positive, &lx.negative, &lx.neutral, &lx.noise];
        if lists[..3].iter().any(|l| l.is_empty()) {
            return Err(invalid("sentiment lexicons must be non-empty"));
        }
        for (group, w) in lists
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().map(move |w| (i, w)))
            .chain(topic_words.map(|w| (4, w)))
        {
            let ok = !w.is_empty()
                && w.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
                && !w.chars().all(|c| c.is_ascii_digit());
            if !ok {
                return Err(invalid(format!("word {w:?} must be lowercase alphanumeric")));
            }
            if self.contains_alias(w) {
                return Err(invalid(format!("word {w:?} contains a candidate alias")));
            }
            if pipeline.stop_words().contains(w) || pipeline.negation_cues().contains(w) {
                return Err(invalid(format!("word {w:?} would be removed by preprocessing")));
            }
            if let Some(prev) = seen.insert(w.as_str(), group) {
                // Topic vocabularies may share words among themselves.
                if !(prev == 4 && group == 4) {
                    return Err(invalid(format!("word {w:?} appears in two word lists")));
                }
            }
        }
        Ok(())
    }
}

/// Proportions for a state won by `winner`, with positive and negative
/// shares of the two candidates separated by `margin`.
pub fn planted_proportions(winner: Winner, margin: f64) -> [f64; 4] {
    let (hi, lo) = (0.2 + margin / 2.0, 0.2 - margin / 2.0);
    match winner {
        Winner::B => [lo, hi, hi, lo],
        _ => [hi, lo, lo, hi],
    }
}

fn min_anchor_distance(anchors: &[StatePoint]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in anchors.iter().enumerate() {
        for b in &anchors[i + 1..] {
            best = best.min(squared_distance(a.lat, a.lon, b));
        }
    }
    libm::sqrt(best)
}

/// Largest-remainder apportionment of `total` by `weights`; ties go to the
/// lower index.
pub fn apportion(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<u64> = exact.iter().map(|x| libm::floor(*x) as u64).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = exact[i] - libm::floor(exact[i]);
        let fj = exact[j] - libm::floor(exact[j]);
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned) as usize) {
        out[i] += 1;
    }
    out
}

/// Planted (candidate, label) counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentCounts {
    pub pos_a: u64,
    pub neg_a: u64,
    pub neutral_a: u64,
    pub pos_b: u64,
    pub neg_b: u64,
    pub neutral_b: u64,
    pub both: u64,
    pub none: u64,
}

impl SentimentCounts {
    fn add(&mut self, kind: TextKind) {
        use SentimentLabel::*;
        match kind {
            TextKind::Single(0, Positive) => self.pos_a += 1,
            TextKind::Single(0, Negative) => self.neg_a += 1,
            TextKind::Single(0, Neutral) => self.neutral_a += 1,
            TextKind::Single(_, Positive) => self.pos_b += 1,
            TextKind::Single(_, Negative) => self.neg_b += 1,
            TextKind::Single(_, Neutral) => self.neutral_b += 1,
            TextKind::Both => self.both += 1,
            TextKind::NoMention => self.none += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayTruth {
    pub day: NaiveDate,
    pub records: u64,
    pub geo_records: u64,
    pub mentions_a: u64,
    pub mentions_b: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTruth {
    pub code: String,
    pub proportions: [f64; 4],
    pub winner: Winner,
    pub counts: SentimentCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollTruth {
    pub leaders: Vec<(NaiveDate, Leader)>,
    pub a_lead_days: u32,
    pub method_counts: BTreeMap<String, u64>,
    pub population_counts: BTreeMap<String, u64>,
}

/// Every planted quantity of a generated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub rng: String,
    pub spike_days: Vec<NaiveDate>,
    pub days: Vec<DayTruth>,
    pub states: Vec<StateTruth>,
    /// Counts over records without coordinates.
    pub sentiment: SentimentCounts,
    pub label_mix: LabelMix,
    pub crossover_days: Vec<NaiveDate>,
    pub topic_vocabulary: Vec<String>,
    pub topic_phi: Vec<Vec<f64>>,
    pub polls: Option<PollTruth>,
}

impl GroundTruth {
    pub fn state_winners(&self) -> BTreeMap<String, Winner> {
        self.states.iter().map(|s| (s.code.clone(), s.winner)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub tweets: Vec<TweetRecord>,
    pub polls: Vec<PollRecord>,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TextKind {
    /// Candidate index and polarity.
    Single(usize, SentimentLabel),
    Both,
    NoMention,
}

const NEGATION_CUES: [&str; 5] = ["not", "never", "don't", "isn't", "can't"];
const URL_CHARS: &[u8] = b"0123456789acdefghjkpqsuvwxyzACDEFGHJKPQSUVWXYZ";

struct Composer<'a> {
    spec: &'a ScenarioSpec,
    aliases: [Vec<&'a str>; 2],
    topic_rows: Vec<WeightedIndex<f64>>,
    topic_vocab: Vec<String>,
    doc_topics: Option<Dirichlet<f64>>,
}

impl<'a> Composer<'a> {
    fn new(spec: &'a ScenarioSpec) -> Self {
        let c = spec.candidates.as_slice();
        let (topic_vocab, rows) = spec.topics.phi();
        let k = rows.len();
        Self {
            spec,
            aliases: [
                c[0].aliases.iter().map(String::as_str).collect(),
                c[1].aliases.iter().map(String::as_str).collect(),
            ],
            topic_rows: rows
                .iter()
                .map(|r| WeightedIndex::new(r).expect("validated topic row"))
                .collect(),
            topic_vocab,
            doc_topics: (k >= 2)
                .then(|| Dirichlet::new(&vec![spec.topics.doc_alpha; k]).expect("validated alpha")),
        }
    }

    fn alias(&self, rng: &mut SeededRng, who: usize) -> String {
        let a = *self.aliases[who].choose(rng).expect("candidate has aliases");
        if rng.gen_bool(0.5) {
            let mut chars = a.chars();
            chars
                .next()
                .map(|f| f.to_uppercase().chain(chars).collect())
                .unwrap_or_default()
        } else {
            a.into()
        }
    }

    fn pick<'w>(rng: &mut SeededRng, list: &'w [String], n: usize) -> impl Iterator<Item = String> + 'w {
        let picks: Vec<&String> = (0..n).filter_map(|_| list.choose(rng)).collect();
        picks.into_iter().cloned()
    }

    fn topic_words(&self, rng: &mut SeededRng, n: usize) -> Vec<String> {
        if n == 0 {
            return Vec::new();
        }
        let topic = match &self.doc_topics {
            Some(d) => {
                let theta = d.sample(rng);
                WeightedIndex::new(&theta).map(|w| w.sample(rng)).unwrap_or(0)
            }
            None => 0,
        };
        (0..n)
            .map(|_| self.topic_vocab[self.topic_rows[topic].sample(rng)].clone())
            .collect()
    }

    fn text(&self, rng: &mut SeededRng, kind: TextKind, spike_tag: Option<&str>) -> String {
        let s = self.spec;
        let lx = &s.lexicon;
        let mut body: Vec<String> = Vec::new();
        let mut clause = None;
        match kind {
            TextKind::Single(who, label) => {
                body.push(self.alias(rng, who));
                let (own, opposite) = match label {
                    SentimentLabel::Positive => (&lx.positive, Some(&lx.negative)),
                    SentimentLabel::Negative => (&lx.negative, Some(&lx.positive)),
                    SentimentLabel::Neutral => (&lx.neutral, None),
                };
                body.extend(Self::pick(rng, own, 2));
                if let Some(opp) = opposite {
                    if rng.gen_bool(s.negation_rate) {
                        let cue = NEGATION_CUES.choose(rng).expect("non-empty");
                        let word = opp.choose(rng).expect("validated lexicon");
                        clause = Some(format!("{cue} {word},"));
                    }
                }
            }
            TextKind::Both => {
                body.push(self.alias(rng, 0));
                body.push(self.alias(rng, 1));
                body.extend(Self::pick(rng, &lx.neutral, 1));
            }
            TextKind::NoMention => body.extend(Self::pick(rng, &lx.neutral, 2)),
        }
        let noise = rng.gen_range(1..=3);
        body.extend(Self::pick(rng, &lx.noise, noise));
        body.extend(self.topic_words(rng, s.topics.words_per_record as usize));
        body.shuffle(rng);

        let mut out: Vec<String> = Vec::new();
        if rng.gen_bool(s.retweet_rate) {
            out.push(format!("RT @voter{}:", rng.gen_range(0..s.authors)));
        }
        if rng.gen_bool(s.reply_rate) {
            out.push(format!("@voter{}", rng.gen_range(0..s.authors)));
        }
        out.extend(clause);
        out.extend(body);
        if rng.gen_bool(0.3) {
            if let Some(last) = out.last_mut() {
                last.push(*b"!?.".choose(rng).expect("non-empty") as char);
            }
        }
        match spike_tag {
            Some(tag) if rng.gen_bool(s.spike_hashtag_rate) => out.push(tag.into()),
            _ => {
                if rng.gen_bool(s.hashtag_rate) {
                    out.extend(s.general_hashtags.choose(rng).cloned());
                }
            }
        }
        if rng.gen_bool(s.url_rate) {
            let slug: String = (0..8)
                .map(|_| *URL_CHARS.choose(rng).expect("non-empty") as char)
                .collect();
            out.push(format!("http://t.co/{slug}"));
        }
        out.join(" ")
    }
}

fn label_index(mix: &LabelMix) -> WeightedIndex<f64> {
    WeightedIndex::new([mix.negative, mix.neutral, mix.positive]).expect("validated label mix")
}

const LABEL_ORDER: [SentimentLabel; 3] = [
    SentimentLabel::Negative,
    SentimentLabel::Neutral,
    SentimentLabel::Positive,
];

/// Generates a scenario against the built-in state anchors.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario, SynthError> {
    generate_with_anchors(spec, &default_states())
}

pub fn generate_with_anchors(spec: &ScenarioSpec, anchors: &[StatePoint]) -> Result<Scenario, SynthError> {
    spec.validate_with_anchors(anchors)?;
    let days = spec.days();
    let window = TimeWindow::unbounded(spec.day_offset_minutes);
    let composer = Composer::new(spec);
    let mut vol_rng = seeded(derive_seed(spec.seed, 1));
    let mut text_rng = seeded(derive_seed(spec.seed, 2));
    let mut geo_rng = seeded(derive_seed(spec.seed, 3));

    let weights: Vec<f64> = days
        .iter()
        .map(|d| {
            spec.volume
                .spikes
                .iter()
                .find(|s| s.day == *d)
                .map_or(1.0, |s| s.multiplier)
        })
        .collect();
    let plain: Vec<u64> = weights
        .iter()
        .map(|w| {
            let jitter = 1.0 + spec.volume.noise * (2.0 * vol_rng.gen::<f64>() - 1.0);
            libm::round(f64::from(spec.volume.base) * w * jitter) as u64
        })
        .collect();

    // Every geo record with its planted category, shuffled and spread over
    // the days in proportion to the volume profile.
    let mut geo_slots: Vec<(usize, TextKind)> = Vec::new();
    let mut states = Vec::with_capacity(spec.states.len());
    for (si, plan) in spec.states.iter().enumerate() {
        let [pa, na, pb, nb] = plan.proportions;
        let rest = (1.0 - pa - na - pb - nb).max(0.0);
        let counts = apportion(u64::from(plan.records), &[pa, na, pb, nb, rest / 2.0, rest / 2.0]);
        let kinds = [
            TextKind::Single(0, SentimentLabel::Positive),
            TextKind::Single(0, SentimentLabel::Negative),
            TextKind::Single(1, SentimentLabel::Positive),
            TextKind::Single(1, SentimentLabel::Negative),
            TextKind::Single(0, SentimentLabel::Neutral),
            TextKind::Single(1, SentimentLabel::Neutral),
        ];
        let mut tally = SentimentCounts::default();
        for (kind, n) in kinds.iter().zip(&counts) {
            for _ in 0..*n {
                geo_slots.push((si, *kind));
                tally.add(*kind);
            }
        }
        states.push(StateTruth {
            code: plan.code.clone(),
            proportions: plan.proportions,
            winner: plan.planted_winner(),
            counts: tally,
        });
    }
    geo_slots.shuffle(&mut geo_rng);
    let geo_per_day = apportion(geo_slots.len() as u64, &weights);

    let anchor_of: Vec<&StatePoint> = spec
        .states
        .iter()
        .map(|p| anchors.iter().find(|a| a.code == p.code).expect("validated code"))
        .collect();
    let mention_index = |swap: bool| {
        let m = &spec.mentions;
        let (a, b) = if swap { (m.b_only, m.a_only) } else { (m.a_only, m.b_only) };
        let none = (1.0 - a - b - m.both).max(0.0);
        WeightedIndex::new([a, b, m.both, none]).expect("validated mention mix")
    };
    let normal_mentions = mention_index(false);
    let swapped_mentions = mention_index(true);
    let labels = label_index(&spec.label_mix);
    let sources = WeightedIndex::new(spec.sources.iter().map(|s| s.1)).expect("validated sources");

    let mut drafts: Vec<(i64, String, String, String, Option<GeoPoint>)> = Vec::new();
    let mut day_truth = Vec::with_capacity(days.len());
    let mut sentiment = SentimentCounts::default();
    let mut geo_cursor = 0usize;
    for (di, day) in days.iter().enumerate() {
        let spike_tag = spec
            .volume
            .spikes
            .iter()
            .find(|s| s.day == *day)
            .and_then(|s| s.hashtag.as_deref());
        let mentions = if spec.mentions.crossover_days.contains(day) {
            &swapped_mentions
        } else {
            &normal_mentions
        };
        let midnight = window.local_midnight_utc(*day);
        let mut truth = DayTruth {
            day: *day,
            records: plain[di] + geo_per_day[di],
            geo_records: geo_per_day[di],
            mentions_a: 0,
            mentions_b: 0,
        };
        let geo_today = &geo_slots[geo_cursor..geo_cursor + geo_per_day[di] as usize];
        geo_cursor += geo_per_day[di] as usize;
        let plain_kinds = (0..plain[di]).map(|_| match mentions.sample(&mut text_rng) {
            0 => TextKind::Single(0, LABEL_ORDER[labels.sample(&mut text_rng)]),
            1 => TextKind::Single(1, LABEL_ORDER[labels.sample(&mut text_rng)]),
            2 => TextKind::Both,
            _ => TextKind::NoMention,
        });
        let plain_kinds: Vec<TextKind> = plain_kinds.collect();
        let all = plain_kinds
            .iter()
            .map(|k| (None, *k))
            .chain(geo_today.iter().map(|(si, k)| (Some(*si), *k)));
        for (state, kind) in all {
            match kind {
                TextKind::Single(0, _) => truth.mentions_a += 1,
                TextKind::Single(_, _) => truth.mentions_b += 1,
                TextKind::Both => {
                    truth.mentions_a += 1;
                    truth.mentions_b += 1;
                }
                TextKind::NoMention => {}
            }
            let geo = match state {
                Some(si) => {
                    let anchor = anchor_of[si];
                    let r = spec.geo_jitter_degrees * libm::sqrt(geo_rng.gen::<f64>());
                    let angle = core::f64::consts::TAU * geo_rng.gen::<f64>();
                    let point = GeoPoint::new(anchor.lat + r * libm::sin(angle), anchor.lon + r * libm::cos(angle))
                        .map_err(|e| invalid(format!("jittered point near {}: {e}", anchor.code)))?;
                    Some(point)
                }
                None => {
                    sentiment.add(kind);
                    None
                }
            };
            let text = composer.text(&mut text_rng, kind, spike_tag);
            let ts = midnight + text_rng.gen_range(0..crate::bucket::SECONDS_PER_DAY);
            let source = spec.sources[sources.sample(&mut text_rng)].0.clone();
            let author = format!("user{}", text_rng.gen_range(0..spec.authors));
            drafts.push((ts, source, author, text, geo));
        }
        day_truth.push(truth);
    }
    drafts.sort_by_key(|d| d.0);
    let tweets = drafts
        .into_iter()
        .enumerate()
        .map(|(i, (ts, source, author, text, geo))| {
            TweetRecord::new(format!("t{i:08}"), ts, source, author, text, geo)
                .map_err(|e| invalid(format!("generated record {i}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let (polls, poll_truth) = match &spec.polls {
        Some(plan) => {
            let (p, t) = generate_polls(plan, derive_seed(spec.seed, 4))?;
            (p, Some(t))
        }
        None => (Vec::new(), None),
    };
    let (topic_vocabulary, topic_phi) = spec.topics.phi();
    Ok(Scenario {
        tweets,
        polls,
        truth: GroundTruth {
            seed: spec.seed,
            rng: RNG_ALGORITHM.into(),
            spike_days: spec.spike_days(),
            days: day_truth,
            states,
            sentiment,
            label_mix: spec.label_mix,
            crossover_days: spec.mentions.crossover_days.clone(),
            topic_vocabulary,
            topic_phi,
            polls: poll_truth,
        },
    })
}

/// A poll series with a planted leader per day. Every poll of an A-lead day
/// favours A, so same-day averages keep the planted sign.
pub fn generate_polls(plan: &PollPlan, seed: u64) -> Result<(Vec<PollRecord>, PollTruth), SynthError> {
    let mut rng = seeded(seed);
    let days: Vec<NaiveDate> = (day_number(plan.first_day)..=day_number(plan.last_day))
        .map(date_from_day_number)
        .collect();
    if days.is_empty() || (plan.count as usize) < days.len() || plan.a_lead_days as usize > days.len() {
        return Err(invalid("poll plan does not fit its day range"));
    }
    let mut order: Vec<usize> = (0..days.len()).collect();
    order.shuffle(&mut rng);
    let mut leader = vec![Leader::B; days.len()];
    for &i in &order[..plan.a_lead_days as usize] {
        leader[i] = Leader::A;
    }
    let mut day_of_poll: Vec<usize> = (0..days.len()).collect();
    for _ in days.len()..plan.count as usize {
        day_of_poll.push(rng.gen_range(0..days.len()));
    }
    let mut methods: Vec<PollMethod> = Vec::new();
    for (m, n) in PollMethod::ALL.iter().zip(apportion(u64::from(plan.count), &plan.method_weights)) {
        methods.extend(core::iter::repeat_n(*m, n as usize));
    }
    methods.shuffle(&mut rng);
    let mut pops: Vec<Population> = Vec::new();
    let pop_counts = apportion(
        u64::from(plan.count),
        &[plan.likely_voter_share, 1.0 - plan.likely_voter_share],
    );
    pops.extend(core::iter::repeat_n(Population::LikelyVoters, pop_counts[0] as usize));
    pops.extend(core::iter::repeat_n(Population::RegisteredVoters, pop_counts[1] as usize));
    pops.shuffle(&mut rng);

    let round1 = |x: f64| libm::round(x * 10.0) / 10.0;
    let mut polls = Vec::with_capacity(plan.count as usize);
    for (i, &d) in day_of_poll.iter().enumerate() {
        let sign = if leader[d] == Leader::A { 1.0 } else { -1.0 };
        let level = plan.level + rng.gen_range(-1.0..1.0);
        let margin = sign * plan.lead_margin * rng.gen_range(0.5..1.5);
        let pollster = plan.pollsters.choose(&mut rng).expect("validated pollsters");
        let poll = PollRecord::new(
            pollster.clone(),
            days[d],
            pops[i],
            methods[i],
            round1(level + margin / 2.0),
            round1(level - margin / 2.0),
        )
        .map_err(|e| invalid(format!("generated poll {i}: {e}")))?;
        polls.push(poll);
    }
    polls.sort_by(|a, b| a.end_date.cmp(&b.end_date).then_with(|| a.pollster.cmp(&b.pollster)));

    let count = |key: &str| -> u64 {
        polls
            .iter()
            .filter(|p| p.method.as_str() == key || p.population.as_str() == key)
            .count() as u64
    };
    let truth = PollTruth {
        leaders: days.iter().copied().zip(leader).collect(),
        a_lead_days: plan.a_lead_days,
        method_counts: PollMethod::ALL
            .iter()
            .map(|m| (String::from(m.as_str()), count(m.as_str())))
            .collect(),
        population_counts: Population::ALL
            .iter()
            .map(|p| (String::from(p.as_str()), count(p.as_str())))
            .collect(),
    };
    Ok((polls, truth))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledText {
    pub text: String,
    pub target: String,
    pub label: SentimentLabel,
}

/// `n` hand-label stand-ins, each naming exactly one candidate, with the
/// three labels balanced to within one.
pub fn generate_labeled(spec: &ScenarioSpec, n: usize) -> Result<Vec<LabeledText>, SynthError> {
    if n < 3 {
        return Err(SynthError::TooFewExamples(n));
    }
    spec.validate_lexicon()?;
    let composer = Composer::new(spec);
    let mut rng = seeded(derive_seed(spec.seed, 5));
    let mut labels: Vec<SentimentLabel> = (0..n).map(|i| LABEL_ORDER[i % 3]).collect();
    labels.shuffle(&mut rng);
    let names = spec.candidates.as_slice();
    Ok(labels
        .into_iter()
        .map(|label| {
            let who = usize::from(rng.gen_bool(0.5));
            LabeledText {
                text: composer.text(&mut rng, TextKind::Single(who, label), None),
                target: names[who].name.clone(),
                label,
            }
        })
        .collect())
}

/// Token documents drawn from a planted topic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCorpus {
    pub docs: Vec<Vec<String>>,
    pub vocabulary: Vec<String>,
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    /// Planted topic of every token.
    pub assignments: Vec<Vec<usize>>,
}

pub fn generate_topic_corpus(
    plan: &TopicPlan,
    docs: usize,
    doc_len: usize,
    seed: u64,
) -> Result<TopicCorpus, SynthError> {
    if plan.vocabularies.is_empty() || plan.vocabularies.iter().any(Vec::is_empty) {
        return Err(invalid("every planted topic needs at least one word"));
    }
    if !(plan.doc_alpha.is_finite() && plan.doc_alpha > 0.0) || !(0.0..=1.0).contains(&plan.leak) {
        return Err(invalid("topic leak must lie in [0, 1] and doc_alpha be positive"));
    }
    let (vocabulary, phi) = plan.phi();
    let k = phi.len();
    let rows: Vec<WeightedIndex<f64>> = phi
        .iter()
        .map(|r| WeightedIndex::new(r).map_err(|e| invalid(format!("topic row: {e}"))))
        .collect::<Result<_, _>>()?;
    let prior = (k >= 2)
        .then(|| Dirichlet::new(&vec![plan.doc_alpha; k]))
        .transpose()
        .map_err(|e| invalid(format!("dirichlet: {e}")))?;
    let mut rng = seeded(derive_seed(seed, 6));
    let mut out = TopicCorpus {
        docs: Vec::with_capacity(docs),
        vocabulary,
        phi,
        theta: Vec::with_capacity(docs),
        assignments: Vec::with_capacity(docs),
    };
    for _ in 0..docs {
        let theta = match &prior {
            Some(d) => d.sample(&mut rng),
            None => vec![1.0],
        };
        let pick = WeightedIndex::new(&theta).ok();
        let mut doc = Vec::with_capacity(doc_len);
        let mut z = Vec::with_capacity(doc_len);
        for _ in 0..doc_len {
            let t = pick.as_ref().map_or(0, |p| p.sample(&mut rng));
            doc.push(out.vocabulary[rows[t].sample(&mut rng)].clone());
            z.push(t);
        }
        out.docs.push(doc);
        out.theta.push(theta);
        out.assignments.push(z);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::detect_mentions;

    fn small_spec(seed: u64) -> ScenarioSpec {
        let mut s = ScenarioSpec::election_2012(seed);
        s.volume.base = 40;
        for p in &mut s.states {
            p.records = 20;
        }
        s
    }

    #[test]
    fn default_spec_is_valid() {
        ScenarioSpec::election_2012(7).validate().unwrap();
    }

    #[test]
    fn empty_range_rejected() {
        let mut s = small_spec(1);
        s.last_day = date_from_day_number(day_number(s.first_day) - 1);
        assert!(matches!(generate(&s), Err(SynthError::InvalidSpec(_))));
    }

    #[test]
    fn alias_bearing_words_rejected() {
        let mut s = small_spec(1);
        s.lexicon.noise.push("committee".into());
        assert!(s.validate().is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate(&small_spec(3)).unwrap();
        let b = generate(&small_spec(3)).unwrap();
        assert_eq!(a, b);
        let c = generate(&small_spec(4)).unwrap();
        assert_ne!(a.tweets, c.tweets);
    }

    #[test]
    fn day_counts_and_geo_conserved() {
        let s = small_spec(9);
        let out = generate(&s).unwrap();
        let total: u64 = out.truth.days.iter().map(|d| d.records).sum();
        assert_eq!(total as usize, out.tweets.len());
        let geo = out.tweets.iter().filter(|t| t.geo.is_some()).count();
        assert_eq!(geo, 51 * 20);
        let window = TimeWindow::unbounded(s.day_offset_minutes);
        for d in &out.truth.days {
            let n = out.tweets.iter().filter(|t| window.local_day(t.timestamp) == d.day).count();
            assert_eq!(n as u64, d.records);
        }
    }

    #[test]
    fn state_counts_follow_proportions() {
        let mut s = small_spec(2);
        s.states.truncate(1);
        s.states[0].records = 2000;
        s.states[0].proportions = [0.4, 0.1, 0.1, 0.4];
        let out = generate(&s).unwrap();
        let c = &out.truth.states[0].counts;
        assert_eq!((c.pos_a, c.neg_a, c.pos_b, c.neg_b), (800, 200, 200, 800));
        assert_eq!(out.truth.states[0].winner, Winner::A);
    }

    #[test]
    fn texts_mention_as_planted() {
        let s = small_spec(5);
        let labeled = generate_labeled(&s, 300).unwrap();
        for ex in &labeled {
            let m = detect_mentions(&ex.text, s.candidates.as_slice());
            assert_eq!(m.len(), 1, "{}", ex.text);
            assert_eq!(m[0].name, ex.target);
        }
    }

    #[test]
    fn labeled_balance() {
        let s = small_spec(5);
        for n in [3usize, 4, 5, 989] {
            let ex = generate_labeled(&s, n).unwrap();
            assert_eq!(ex.len(), n);
            let counts: Vec<usize> = LABEL_ORDER
                .iter()
                .map(|l| ex.iter().filter(|e| e.label == *l).count())
                .collect();
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(hi - lo <= 1);
        }
        assert_eq!(generate_labeled(&s, 2), Err(SynthError::TooFewExamples(2)));
        assert_eq!(generate_labeled(&s, 50).unwrap(), generate_labeled(&s, 50).unwrap());
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(103, &[53.4, 24.3, 18.4, 3.9]), vec![55, 25, 19, 4]);
        assert_eq!(apportion(103, &[0.98, 0.02]), vec![101, 2]);
        assert_eq!(apportion(5, &[1.0, 1.0]), vec![3, 2]);
        assert_eq!(apportion(5, &[0.0]), vec![0]);
    }

    #[test]
    fn planted_poll_leaders() {
        let spec = ScenarioSpec::election_2012(11);
        let plan = spec.polls.unwrap();
        let (polls, truth) = generate_polls(&plan, 11).unwrap();
        assert_eq!(polls.len(), 103);
        assert_eq!(truth.leaders.len(), 36);
        assert_eq!(truth.leaders.iter().filter(|l| l.1 == Leader::A).count(), 17);
        assert_eq!(truth.method_counts["AutomatedPhone"], 55);
        assert_eq!(truth.population_counts["LikelyVoters"], 101);
        let leaders = crate::trends::poll_leaders(&polls);
        let found: Vec<_> = leaders.iter().map(|l| (l.0, l.1)).collect();
        assert_eq!(found, truth.leaders);
    }

    #[test]
    fn phi_rows_normalised() {
        let (_, rows) = default_topic_plan().phi();
        for r in rows {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn topic_corpus_shape() {
        let c = generate_topic_corpus(&default_topic_plan(), 10, 20, 1).unwrap();
        assert_eq!(c.docs.len(), 10);
        assert!(c.docs.iter().all(|d| d.len() == 20));
        assert_eq!(c.theta[0].len(), 3);
    }
}
