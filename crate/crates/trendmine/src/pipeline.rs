//! Loads run inputs and computes each analysis as a serializable report.

use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use trendmine_core::bucket::{bucket_by_day, day_number, sample_daily, BucketedDays, TimeWindow};
use trendmine_core::geo::{
    aggregate_state_sentiment, call_state, score_predictions, GeoAggregation, GeoOptions,
    PredictionScore, StateCall, Winner,
};
use trendmine_core::kdtree::{default_states, KdTree2, StatePoint};
use trendmine_core::lda::{self, LdaConfig};
use trendmine_core::record::{PollRecord, TweetRecord};
use trendmine_core::rng::derive_seed;
use trendmine_core::sentiment::{
    interleaved_split, Evaluation, LabeledExample, NbModel, PriorMode,
};
use trendmine_core::synth::LabeledText;
use trendmine_core::text::{CandidatePair, TextPipeline};
use trendmine_core::trends::{
    self, daily_frequency, find_peaks, hashtag_histogram, leader_series, mention_share,
    poll_leader_agreement, poll_method_histogram, poll_population_histogram, source_histogram,
    Histogram, Leader, PollAgreement, TrendError, TrendSeries,
};

use crate::artifacts::DataSpan;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io;

/// Word lists from the config, or the built-in lists.
pub fn load_text_pipeline(cfg: &RunConfig) -> Result<TextPipeline> {
    let default = TextPipeline::default();
    let stop = match &cfg.input.stop_words {
        Some(p) => io::read_word_list(p)?,
        None => default.stop_words().clone(),
    };
    let cues = match &cfg.input.negation_cues {
        Some(p) => io::read_word_list(p)?,
        None => default.negation_cues().clone(),
    };
    Ok(TextPipeline::new(stop, cues))
}

pub fn load_states(cfg: &RunConfig) -> Result<Vec<StatePoint>> {
    match &cfg.input.states {
        Some(p) => io::read_states(p),
        None => Ok(default_states()),
    }
}

pub fn build_tree(states: Vec<StatePoint>) -> Result<KdTree2> {
    KdTree2::build(states).map_err(Error::invalid)
}

pub fn require<'a>(path: &'a Option<std::path::PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::invalid(format!("missing input: pass {flag} or set it in the config")))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainStats {
    pub rows: usize,
    pub used: usize,
    /// Rows naming zero or several candidates, or a different one than
    /// their target.
    pub skipped: usize,
    pub label_counts: BTreeMap<String, usize>,
}

/// Preprocessed examples from labelled rows. Rows that do not name exactly
/// their target candidate are skipped and counted.
pub fn labeled_examples(
    rows: &[LabeledText],
    pipeline: &TextPipeline,
    pair: &CandidatePair,
) -> (Vec<LabeledExample>, TrainStats) {
    let mut stats = TrainStats {
        rows: rows.len(),
        ..TrainStats::default()
    };
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        match LabeledExample::from_text(&r.text, &r.target, r.label, pipeline, pair.as_slice()) {
            Ok(ex) => {
                *stats.label_counts.entry(r.label.to_string()).or_default() += 1;
                out.push(ex);
            }
            Err(_) => stats.skipped += 1,
        }
    }
    stats.used = out.len();
    (out, stats)
}

pub fn train_model(
    rows: &[LabeledText],
    pipeline: &TextPipeline,
    pair: &CandidatePair,
    prior: PriorMode,
) -> Result<(NbModel, TrainStats)> {
    let (examples, stats) = labeled_examples(rows, pipeline, pair);
    let model = NbModel::train_with(&examples, prior).map_err(Error::invalid)?;
    Ok((model, stats))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub folds: usize,
    pub train: TrainStats,
    pub evaluation: Evaluation,
}

/// Holds out every `folds`-th usable example, trains on the rest and scores
/// the held-out part.
pub fn evaluate_labeled(
    rows: &[LabeledText],
    pipeline: &TextPipeline,
    pair: &CandidatePair,
    prior: PriorMode,
    folds: usize,
) -> Result<EvalReport> {
    let (examples, stats) = labeled_examples(rows, pipeline, pair);
    let (train, held) = interleaved_split(examples, folds, 0);
    let model = NbModel::train_with(&train, prior).map_err(Error::invalid)?;
    let evaluation = model.evaluate(&held).map_err(Error::invalid)?;
    Ok(EvalReport {
        folds: folds.max(2),
        train: stats,
        evaluation,
    })
}

#[derive(Deserialize)]
struct ModelFile {
    model: NbModel,
}

pub fn read_model(path: &Path) -> Result<NbModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    Ok(file.model)
}

/// A model from `--model`, else one trained on `--labeled`.
pub fn obtain_model(
    cfg: &RunConfig,
    pipeline: &TextPipeline,
    pair: &CandidatePair,
) -> Result<NbModel> {
    if let Some(p) = &cfg.input.model {
        return read_model(p);
    }
    let path = require(&cfg.input.labeled, "--labeled or --model")?;
    let rows = io::read_labeled(path)?;
    Ok(train_model(&rows, pipeline, pair, cfg.prior)?.0)
}

pub fn data_span(tweets: &[TweetRecord]) -> Option<DataSpan> {
    let first = tweets.iter().map(|t| t.timestamp).min()?;
    let last = tweets.iter().map(|t| t.timestamp).max()?;
    Some(DataSpan {
        first_timestamp: first,
        last_timestamp: last,
    })
}

/// Records bucketed by local day plus each day's seeded sample.
pub struct DailySamples<'a> {
    pub bucketed: BucketedDays,
    pub samples: Vec<(NaiveDate, Vec<&'a TweetRecord>)>,
    /// Every in-window record, first occurrence of each id per day.
    pub in_window: Vec<&'a TweetRecord>,
}

/// Buckets by day and draws up to `n` records per day. Day `d` samples with
/// the stream `derive_seed(seed, day_number(d))`, so one day's draw does not
/// depend on which other days are present.
pub fn daily_samples<'a>(
    tweets: &'a [TweetRecord],
    window: &TimeWindow,
    n: usize,
    seed: u64,
) -> Result<DailySamples<'a>> {
    let n = NonZeroUsize::new(n).ok_or_else(|| Error::invalid("sample size must be positive"))?;
    let bucketed = bucket_by_day(tweets, window);
    let mut by_day: BTreeMap<(NaiveDate, &str), &TweetRecord> = BTreeMap::new();
    for t in tweets {
        if window.contains(t.timestamp) {
            by_day
                .entry((window.local_day(t.timestamp), t.id.as_str()))
                .or_insert(t);
        }
    }
    let mut samples = Vec::with_capacity(bucketed.buckets.len());
    let mut in_window = Vec::with_capacity(bucketed.total_bucketed());
    for b in &bucketed.buckets {
        let lookup = |id: &String| by_day[&(b.day, id.as_str())];
        in_window.extend(b.tweet_ids.iter().map(lookup));
        let ids = sample_daily(b, n, derive_seed(seed, day_number(b.day) as u64));
        samples.push((b.day, ids.iter().map(lookup).collect()));
    }
    Ok(DailySamples {
        bucketed,
        samples,
        in_window,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    pub days: usize,
    pub bucketed: usize,
    pub sampled: usize,
    pub out_of_window: usize,
    pub duplicate_ids: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRow {
    pub day: NaiveDate,
    pub records: usize,
    pub sampled: usize,
    /// Percent of the day's sample naming each candidate.
    pub mentions: BTreeMap<String, f64>,
    pub hashtags: Histogram,
    pub sources: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollSummary {
    pub polls: usize,
    pub methods: Histogram,
    pub populations: Histogram,
    pub leaders: Vec<(NaiveDate, Leader, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendsReport {
    pub buckets: BucketSummary,
    pub frequency: TrendSeries,
    /// `None` when the series is too short to test.
    pub peaks: Option<Vec<NaiveDate>>,
    pub days: Vec<DayRow>,
    pub hashtags: Histogram,
    pub sources: Histogram,
    pub polls: Option<PollSummary>,
}

pub fn trends_report(
    daily: &DailySamples<'_>,
    polls: Option<&[PollRecord]>,
    pair: &CandidatePair,
    top_n: usize,
    peak_prominence: f64,
) -> Result<TrendsReport> {
    let frequency = daily_frequency(&daily.bucketed.buckets);
    let peaks = match find_peaks(&frequency, peak_prominence) {
        Ok(p) => Some(p),
        Err(TrendError::SeriesTooShort(_)) => None,
        Err(e) => return Err(Error::invalid(e)),
    };
    let mut days = Vec::with_capacity(daily.samples.len());
    for ((day, sample), bucket) in daily.samples.iter().zip(&daily.bucketed.buckets) {
        let mentions = mention_share(sample.iter().copied(), pair.as_slice()).map_err(Error::invalid)?;
        days.push(DayRow {
            day: *day,
            records: bucket.len(),
            sampled: sample.len(),
            mentions,
            hashtags: hashtag_histogram(sample.iter().copied(), top_n),
            sources: source_histogram(sample.iter().copied(), top_n),
        });
    }
    let all_sampled = || daily.samples.iter().flat_map(|(_, s)| s.iter().copied());
    let polls = polls.map(|p| PollSummary {
        polls: p.len(),
        methods: poll_method_histogram(p),
        populations: poll_population_histogram(p),
        leaders: trends::poll_leaders(p),
    });
    Ok(TrendsReport {
        buckets: BucketSummary {
            days: daily.bucketed.buckets.len(),
            bucketed: daily.bucketed.total_bucketed(),
            sampled: daily.samples.iter().map(|(_, s)| s.len()).sum(),
            out_of_window: daily.bucketed.out_of_window,
            duplicate_ids: daily.bucketed.duplicate_ids,
        },
        frequency,
        peaks,
        days,
        hashtags: hashtag_histogram(all_sampled(), top_n),
        sources: source_histogram(all_sampled(), top_n),
        polls,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentDay {
    pub day: NaiveDate,
    pub pos_a: u64,
    pub neg_a: u64,
    pub pos_b: u64,
    pub neg_b: u64,
    pub leader: Leader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentReport {
    pub candidate_a: String,
    pub candidate_b: String,
    pub days: Vec<SentimentDay>,
    /// Total negative over total positive classifications.
    pub negative_to_positive: Option<f64>,
    /// `None` without polls or when no poll day can be compared.
    pub poll_agreement: Option<PollAgreement>,
}

/// Daily polarity counts. A day's Twitter leader is the state-call rule
/// applied to that day's four counts; an undecided call is a tie.
pub fn sentiment_report(
    daily: &DailySamples<'_>,
    model: &NbModel,
    pipeline: &TextPipeline,
    pair: &CandidatePair,
    polls: Option<&[PollRecord]>,
) -> Result<SentimentReport> {
    let trend = trends::sentiment_trend(&daily.samples, model, pipeline, pair)
        .map_err(Error::invalid)?;
    let mut days = Vec::with_capacity(trend.pos_a.len());
    for (i, &(day, pa)) in trend.pos_a.points.iter().enumerate() {
        let tally = trendmine_core::geo::StateTally {
            code: String::new(),
            pos_a: pa as u64,
            neg_a: trend.neg_a.points[i].1 as u64,
            pos_b: trend.pos_b.points[i].1 as u64,
            neg_b: trend.neg_b.points[i].1 as u64,
            total_geo: 0,
        };
        let leader = match call_state(&tally).winner {
            Winner::A => Leader::A,
            Winner::B => Leader::B,
            Winner::Undecided => Leader::Tie,
        };
        days.push(SentimentDay {
            day,
            pos_a: tally.pos_a,
            neg_a: tally.neg_a,
            pos_b: tally.pos_b,
            neg_b: tally.neg_b,
            leader,
        });
    }
    let twitter: Vec<(NaiveDate, Leader)> = days.iter().map(|d| (d.day, d.leader)).collect();
    let poll_agreement = match polls {
        Some(p) => match poll_leader_agreement(p, &twitter) {
            Ok(a) => Some(a),
            Err(TrendError::NoOverlap) => None,
            Err(e) => return Err(Error::invalid(e)),
        },
        None => None,
    };
    Ok(SentimentReport {
        candidate_a: pair.a().name.clone(),
        candidate_b: pair.b().name.clone(),
        negative_to_positive: trend.negative_to_positive(),
        days,
        poll_agreement,
    })
}

/// Mention-volume leader per day from the sampled records.
pub fn mention_leaders(trends: &TrendsReport, pair: &CandidatePair) -> Vec<(NaiveDate, Leader)> {
    let series = |name: &str| {
        TrendSeries::new(
            name,
            trends.days.iter().map(|d| (d.day, d.mentions[name])).collect(),
        )
        .expect("days are increasing")
    };
    leader_series(&series(&pair.a().name), &series(&pair.b().name))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoReport {
    /// One call per state anchor, in code order.
    pub calls: Vec<StateCall>,
    pub offshore: u64,
    pub skipped_no_geo: u64,
    pub score: Option<PredictionScore>,
}

/// State calls over every in-window record. Geo scoring is not sampled.
pub fn geo_report(
    records: &[&TweetRecord],
    model: &NbModel,
    pipeline: &TextPipeline,
    tree: &KdTree2,
    pair: &CandidatePair,
    options: &GeoOptions,
    truth: Option<&BTreeMap<String, Winner>>,
) -> Result<GeoReport> {
    let agg: GeoAggregation =
        aggregate_state_sentiment(records.iter().copied(), model, pipeline, tree, pair, options);
    let calls = agg.calls_for_all(tree);
    let score = match truth {
        Some(actual) => {
            let by_code = calls.iter().map(|c| (c.code.clone(), c.clone())).collect();
            Some(score_predictions(&by_code, actual, tree.points()).map_err(Error::invalid)?)
        }
        None => None,
    };
    Ok(GeoReport {
        calls,
        offshore: agg.offshore,
        skipped_no_geo: agg.skipped_no_geo,
        score,
    })
}

/// Actual winners from JSON (`{"CA": "B", ...}`, or a ground-truth file
/// from `synth` with a `states` array) or CSV (`code,winner`).
pub fn read_truth(path: &Path) -> Result<BTreeMap<String, Winner>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: String| Error::invalid(format!("{}: {m}", path.display()));
    if text.trim_start().starts_with('{') {
        #[derive(Deserialize)]
        struct StateRow {
            code: String,
            winner: Winner,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum TruthFile {
            Truth { states: Vec<StateRow> },
            Map(BTreeMap<String, Winner>),
        }
        let mut doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if let Some(inner) = doc.get_mut("truth") {
            doc = inner.take();
        }
        let parsed: TruthFile = serde_json::from_value(doc).map_err(|e| bad(e.to_string()))?;
        return Ok(match parsed {
            TruthFile::Truth { states } => states.into_iter().map(|s| (s.code, s.winner)).collect(),
            TruthFile::Map(m) => m,
        });
    }
    let mut out = BTreeMap::new();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let (Some(code), Some(w)) = (row.get(0), row.get(1)) else {
            return Err(bad(format!("row {}: expected code,winner", i + 1)));
        };
        let winner = match w.trim() {
            "A" => Winner::A,
            "B" => Winner::B,
            "Undecided" => Winner::Undecided,
            other => return Err(bad(format!("row {}: bad winner {other:?}", i + 1))),
        };
        out.insert(code.trim().to_string(), winner);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedWord {
    pub word: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicsReport {
    pub config: LdaConfig,
    pub documents: usize,
    pub dropped_documents: usize,
    pub vocabulary: usize,
    pub tokens: usize,
    pub topics: Vec<Vec<WeightedWord>>,
}

/// LDA over the preprocessed texts of `records`.
pub fn topics_report(
    records: &[&TweetRecord],
    pipeline: &TextPipeline,
    config: &LdaConfig,
) -> Result<TopicsReport> {
    let docs: Vec<Vec<String>> = records
        .iter()
        .map(|r| pipeline.preprocess(&r.text).into_vec())
        .collect();
    let (state, report) = lda::run(&docs, config).map_err(Error::invalid)?;
    Ok(TopicsReport {
        config: config.clone(),
        documents: state.num_docs(),
        dropped_documents: state.dropped_docs(),
        vocabulary: state.vocab().len(),
        tokens: state.num_tokens(),
        topics: report
            .topics
            .into_iter()
            .map(|t| {
                t.into_iter()
                    .map(|(word, weight)| WeightedWord { word, weight })
                    .collect()
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub trends: TrendsReport,
    pub mention_leaders: Vec<(NaiveDate, Leader)>,
    pub sentiment: SentimentReport,
    pub geo: GeoReport,
    pub topics: TopicsReport,
}
