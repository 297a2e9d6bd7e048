//! Daily series, peaks, histograms, sentiment trends and poll comparison.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::bucket::{date_from_day_number, day_number, DailyBucket};
use crate::record::{PollMethod, PollRecord, Population, TweetRecord};
use crate::sentiment::{NbModel, SentimentLabel};
use crate::text::{detect_mentions, extract_hashtags, CandidatePair, CandidateSpec, TextPipeline};

pub const DEFAULT_PEAK_PROMINENCE: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrendError {
    #[error("series has {0} points; at least 3 are needed")]
    SeriesTooShort(usize),
    #[error("sample is empty")]
    EmptySample,
    #[error("polls and the comparison series share no comparable day")]
    NoOverlap,
    #[error("series days must be strictly increasing with finite values")]
    InvalidSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub label: String,
    pub points: Vec<(NaiveDate, f64)>,
}

impl TrendSeries {
    pub fn new(label: impl Into<String>, points: Vec<(NaiveDate, f64)>) -> Result<Self, TrendError> {
        let increasing = points.windows(2).all(|w| w[0].0 < w[1].0);
        if !increasing || points.iter().any(|p| !p.1.is_finite()) {
            return Err(TrendError::InvalidSeries);
        }
        Ok(Self {
            label: label.into(),
            points,
        })
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, day: NaiveDate) -> Option<f64> {
        self.points
            .binary_search_by(|p| p.0.cmp(&day))
            .ok()
            .map(|i| self.points[i].1)
    }

    pub fn total(&self) -> f64 {
        self.values().sum()
    }
}

/// Bucket size per day from the first to the last bucketed day, with absent
/// days filled as zero. Buckets may arrive in any order; repeated days add.
pub fn daily_frequency(buckets: &[DailyBucket]) -> TrendSeries {
    let mut counts: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    for b in buckets {
        *counts.entry(b.day).or_default() += b.len();
    }
    let points = match (counts.keys().next(), counts.keys().next_back()) {
        (Some(&first), Some(&last)) => (day_number(first)..=day_number(last))
            .map(|n| {
                let day = date_from_day_number(n);
                (day, counts.get(&day).copied().unwrap_or(0) as f64)
            })
            .collect(),
        _ => Vec::new(),
    };
    TrendSeries {
        label: "daily_frequency".into(),
        points,
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Local maxima that stand out from the series median.
///
/// An interior day is a peak when it is strictly above the previous day, at
/// least the next day, and `value / median >= min_prominence`. The first and
/// last days qualify only as the global maximum, strictly above their one
/// neighbour, and under the same prominence test.
pub fn find_peaks(series: &TrendSeries, min_prominence: f64) -> Result<Vec<NaiveDate>, TrendError> {
    let v: Vec<f64> = series.values().collect();
    let n = v.len();
    if n < 3 {
        return Err(TrendError::SeriesTooShort(n));
    }
    let med = median(&v);
    let prominent = |x: f64| {
        if med > 0.0 {
            x / med >= min_prominence
        } else {
            x > 0.0
        }
    };
    let global_max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut peaks = Vec::new();
    for i in 0..n {
        let is_peak = if i == 0 {
            v[0] > v[1] && v[0] == global_max
        } else if i == n - 1 {
            v[i] > v[i - 1] && v[i] == global_max
        } else {
            v[i] > v[i - 1] && v[i] >= v[i + 1]
        };
        if is_peak && prominent(v[i]) {
            peaks.push(series.points[i].0);
        }
    }
    Ok(peaks)
}

/// Percentage of records mentioning each candidate. A record naming both
/// counts for both, so the shares can sum above 100.
pub fn mention_share<'a, I>(
    day_sample: I,
    candidates: &[CandidateSpec],
) -> Result<BTreeMap<String, f64>, TrendError>
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let mut hits: BTreeMap<&str, usize> = candidates.iter().map(|c| (c.name.as_str(), 0)).collect();
    let mut n = 0usize;
    for rec in day_sample {
        n += 1;
        for c in detect_mentions(&rec.text, candidates) {
            *hits.get_mut(c.name.as_str()).expect("known candidate") += 1;
        }
    }
    if n == 0 {
        return Err(TrendError::EmptySample);
    }
    Ok(hits
        .into_iter()
        .map(|(name, h)| (String::from(name), 100.0 * h as f64 / n as f64))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub key: String,
    pub count: u64,
    /// Percent of the histogram's denominator.
    pub share: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    /// Sorts by count descending then key ascending, keeps the first
    /// `top_n`, and expresses counts as percentages of `denominator`.
    pub fn from_counts(counts: BTreeMap<String, u64>, denominator: u64, top_n: usize) -> Self {
        let mut bins: Vec<HistogramBin> = counts
            .into_iter()
            .filter(|(_, c)| *c > 0)
            .map(|(key, count)| HistogramBin {
                key,
                count,
                share: if denominator == 0 {
                    0.0
                } else {
                    100.0 * count as f64 / denominator as f64
                },
            })
            .collect();
        bins.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.key.cmp(&b.key)));
        bins.truncate(top_n);
        Self { bins }
    }

    pub fn share_of(&self, key: &str) -> Option<f64> {
        self.bins.iter().find(|b| b.key == key).map(|b| b.share)
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

/// Hashtag occurrences in raw text. Shares are percentages of all hashtag
/// occurrences in the sample.
pub fn hashtag_histogram<'a, I>(day_sample: I, top_n: usize) -> Histogram
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut total = 0;
    for rec in day_sample {
        for tag in extract_hashtags(&rec.text) {
            *counts.entry(tag).or_default() += 1;
            total += 1;
        }
    }
    Histogram::from_counts(counts, total, top_n)
}

/// Posting clients. Shares are percentages of the sample size.
pub fn source_histogram<'a, I>(day_sample: I, top_n: usize) -> Histogram
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut n = 0;
    for rec in day_sample {
        *counts.entry(rec.source.clone()).or_default() += 1;
        n += 1;
    }
    Histogram::from_counts(counts, n, top_n)
}

pub fn poll_method_histogram(polls: &[PollRecord]) -> Histogram {
    let counts = PollMethod::ALL
        .iter()
        .map(|m| {
            let c = polls.iter().filter(|p| p.method == *m).count() as u64;
            (String::from(m.as_str()), c)
        })
        .collect();
    Histogram::from_counts(counts, polls.len() as u64, PollMethod::ALL.len())
}

pub fn poll_population_histogram(polls: &[PollRecord]) -> Histogram {
    let counts = Population::ALL
        .iter()
        .map(|m| {
            let c = polls.iter().filter(|p| p.population == *m).count() as u64;
            (String::from(m.as_str()), c)
        })
        .collect();
    Histogram::from_counts(counts, polls.len() as u64, Population::ALL.len())
}

/// Daily positive and negative counts toward each candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentTrend {
    pub pos_a: TrendSeries,
    pub neg_a: TrendSeries,
    pub pos_b: TrendSeries,
    pub neg_b: TrendSeries,
}

impl SentimentTrend {
    /// Total negative over total positive across both candidates.
    pub fn negative_to_positive(&self) -> Option<f64> {
        let pos = self.pos_a.total() + self.pos_b.total();
        let neg = self.neg_a.total() + self.neg_b.total();
        (pos > 0.0).then(|| neg / pos)
    }
}

/// Classifies each day's sample toward single-candidate mentions and counts
/// outcomes. Neutral outcomes are not counted. `daily_samples` must be in
/// strictly increasing day order.
pub fn sentiment_trend<'a, S>(
    daily_samples: &[(NaiveDate, S)],
    model: &NbModel,
    pipeline: &TextPipeline,
    candidates: &CandidatePair,
) -> Result<SentimentTrend, TrendError>
where
    S: AsRef<[&'a TweetRecord]>,
{
    let mut rows: [Vec<(NaiveDate, f64)>; 4] = Default::default();
    for (day, sample) in daily_samples {
        let mut c = [0u64; 4];
        for rec in sample.as_ref() {
            if let Some((who, label)) = model.classify_candidate(rec, pipeline, candidates.as_slice())
            {
                let base = if who.name == candidates.a().name { 0 } else { 2 };
                match label {
                    SentimentLabel::Positive => c[base] += 1,
                    SentimentLabel::Negative => c[base + 1] += 1,
                    SentimentLabel::Neutral => {}
                }
            }
        }
        for (row, v) in rows.iter_mut().zip(c) {
            row.push((*day, v as f64));
        }
    }
    let [pa, na, pb, nb] = rows;
    let a = &candidates.a().name;
    let b = &candidates.b().name;
    Ok(SentimentTrend {
        pos_a: TrendSeries::new(alloc::format!("positive_{a}"), pa)?,
        neg_a: TrendSeries::new(alloc::format!("negative_{a}"), na)?,
        pos_b: TrendSeries::new(alloc::format!("positive_{b}"), pb)?,
        neg_b: TrendSeries::new(alloc::format!("negative_{b}"), nb)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Leader {
    A,
    B,
    Tie,
}

impl Leader {
    pub fn from_margin(margin: f64) -> Self {
        if margin > 0.0 {
            Self::A
        } else if margin < 0.0 {
            Self::B
        } else {
            Self::Tie
        }
    }
}

/// Day-by-day leader from two aligned series (A leads where its value is
/// larger). Days present in only one series are skipped.
pub fn leader_series(a: &TrendSeries, b: &TrendSeries) -> Vec<(NaiveDate, Leader)> {
    a.points
        .iter()
        .filter_map(|&(day, va)| b.get(day).map(|vb| (day, Leader::from_margin(va - vb))))
        .collect()
}

/// Poll leader per end date: the sign of the mean `favor_a − favor_b` over
/// polls ending that day.
pub fn poll_leaders(polls: &[PollRecord]) -> Vec<(NaiveDate, Leader, f64)> {
    let mut by_day: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for p in polls {
        let e = by_day.entry(p.end_date).or_default();
        e.0 += p.margin();
        e.1 += 1;
    }
    by_day
        .into_iter()
        .map(|(day, (sum, n))| {
            let mean = sum / n as f64;
            (day, Leader::from_margin(mean), mean)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderDay {
    pub day: NaiveDate,
    pub poll_margin: f64,
    pub poll_leader: Leader,
    pub twitter_leader: Option<Leader>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollAgreement {
    /// Fraction of comparable days (both leaders present and neither a tie)
    /// where the leaders match.
    pub agreement: f64,
    pub comparable_days: usize,
    pub poll_days_a: usize,
    pub poll_days_b: usize,
    pub poll_days_tie: usize,
    pub table: Vec<LeaderDay>,
}

pub fn poll_leader_agreement(
    polls: &[PollRecord],
    twitter_leader: &[(NaiveDate, Leader)],
) -> Result<PollAgreement, TrendError> {
    let twitter: BTreeMap<NaiveDate, Leader> = twitter_leader.iter().copied().collect();
    let mut table = Vec::new();
    let (mut agree, mut comparable) = (0usize, 0usize);
    let (mut a, mut b, mut tie) = (0, 0, 0);
    for (day, leader, margin) in poll_leaders(polls) {
        match leader {
            Leader::A => a += 1,
            Leader::B => b += 1,
            Leader::Tie => tie += 1,
        }
        let tw = twitter.get(&day).copied();
        if let Some(t) = tw {
            if leader != Leader::Tie && t != Leader::Tie {
                comparable += 1;
                agree += usize::from(t == leader);
            }
        }
        table.push(LeaderDay {
            day,
            poll_margin: margin,
            poll_leader: leader,
            twitter_leader: tw,
        });
    }
    if comparable == 0 {
        return Err(TrendError::NoOverlap);
    }
    Ok(PollAgreement {
        agreement: agree as f64 / comparable as f64,
        comparable_days: comparable,
        poll_days_a: a,
        poll_days_b: b,
        poll_days_tie: tie,
        table,
    })
}
