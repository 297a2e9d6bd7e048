//! Per-state sentiment tallies and the +Ratio/−Ratio winner call.
//!
//! `+Ratio = pos_a / pos_b` and `−Ratio = neg_a / neg_b`. Candidate A takes a
//! state when +Ratio exceeds −Ratio and B when it falls short. A ratio with
//! a zero denominator is infinite unless its numerator is also zero, in which
//! case it is undefined and the state is left undecided.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::kdtree::{DistanceMetric, KdTree2, StatePoint};
use crate::record::TweetRecord;
use crate::sentiment::{NbModel, SentimentLabel};
use crate::text::{CandidatePair, TextPipeline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Winner {
    A,
    B,
    Undecided,
}

impl Winner {
    pub fn swapped(self) -> Self {
        match self {
            Self::A => Self::B,
            Self::B => Self::A,
            Self::Undecided => Self::Undecided,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::B => "B",
            Self::Undecided => "Undecided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Ratio {
    Finite(f64),
    Infinite,
    Undefined,
}

impl Ratio {
    pub fn from_counts(num: u64, den: u64) -> Self {
        match (num, den) {
            (0, 0) => Self::Undefined,
            (_, 0) => Self::Infinite,
            (n, d) => Self::Finite(n as f64 / d as f64),
        }
    }

    /// Ordering of two defined ratios; `None` when either is undefined.
    pub fn compare(self, other: Ratio) -> Option<Ordering> {
        match (self, other) {
            (Self::Undefined, _) | (_, Self::Undefined) => None,
            (Self::Infinite, Self::Infinite) => Some(Ordering::Equal),
            (Self::Infinite, Self::Finite(_)) => Some(Ordering::Greater),
            (Self::Finite(_), Self::Infinite) => Some(Ordering::Less),
            (Self::Finite(a), Self::Finite(b)) => a.partial_cmp(&b),
        }
    }

    /// Numeric form for reports: `+inf` for infinite, NaN for undefined.
    pub fn as_f64(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::Infinite => f64::INFINITY,
            Self::Undefined => f64::NAN,
        }
    }
}

impl core::fmt::Display for Ratio {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v:.6}"),
            Self::Infinite => f.write_str("inf"),
            Self::Undefined => f.write_str("undefined"),
        }
    }
}

/// Winner implied by a (+Ratio, −Ratio) pair.
pub fn winner_from_ratios(plus: Ratio, minus: Ratio) -> Winner {
    match plus.compare(minus) {
        Some(Ordering::Greater) => Winner::A,
        Some(Ordering::Less) => Winner::B,
        _ => Winner::Undecided,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTally {
    pub code: String,
    pub pos_a: u64,
    pub neg_a: u64,
    pub pos_b: u64,
    pub neg_b: u64,
    /// Every geo-tagged record resolved to this state, scored or not.
    pub total_geo: u64,
}

impl StateTally {
    pub fn new(code: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            ..Self::default()
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            code: self.code.clone(),
            pos_a: self.pos_b,
            neg_a: self.neg_b,
            pos_b: self.pos_a,
            neg_b: self.neg_a,
            total_geo: self.total_geo,
        }
    }

    pub fn merge(&mut self, other: &StateTally) {
        self.pos_a += other.pos_a;
        self.neg_a += other.neg_a;
        self.pos_b += other.pos_b;
        self.neg_b += other.neg_b;
        self.total_geo += other.total_geo;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateCall {
    pub code: String,
    pub plus_ratio: Ratio,
    pub minus_ratio: Ratio,
    pub counts: u64,
    pub winner: Winner,
}

/// Calls a state from its tally. The comparison is exact:
/// `pos_a/pos_b` against `neg_a/neg_b` by cross-multiplication, which also
/// orders the infinite cases correctly.
pub fn call_state(tally: &StateTally) -> StateCall {
    let plus_ratio = Ratio::from_counts(tally.pos_a, tally.pos_b);
    let minus_ratio = Ratio::from_counts(tally.neg_a, tally.neg_b);
    let winner = if matches!(plus_ratio, Ratio::Undefined) || matches!(minus_ratio, Ratio::Undefined)
    {
        Winner::Undecided
    } else {
        let lhs = u128::from(tally.pos_a) * u128::from(tally.neg_b);
        let rhs = u128::from(tally.neg_a) * u128::from(tally.pos_b);
        match lhs.cmp(&rhs) {
            Ordering::Greater => Winner::A,
            Ordering::Less => Winner::B,
            Ordering::Equal => Winner::Undecided,
        }
    };
    StateCall {
        code: tally.code.clone(),
        plus_ratio,
        minus_ratio,
        counts: tally.total_geo,
        winner,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GeoOptions {
    pub metric: DistanceMetric,
    /// Records farther than this from their nearest anchor (degrees for
    /// Euclidean, kilometres for haversine) are counted as offshore and
    /// excluded. `None` keeps everything.
    pub max_anchor_distance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeoAggregation {
    /// Only states that received at least one record.
    pub tallies: BTreeMap<String, StateTally>,
    pub offshore: u64,
    /// Records without coordinates.
    pub skipped_no_geo: u64,
}

impl GeoAggregation {
    pub fn merge(&mut self, other: &GeoAggregation) {
        for (code, t) in &other.tallies {
            self.tallies
                .entry(code.clone())
                .or_insert_with(|| StateTally::new(code.clone()))
                .merge(t);
        }
        self.offshore += other.offshore;
        self.skipped_no_geo += other.skipped_no_geo;
    }

    /// One call per anchor of `tree`, in code order, including states with
    /// no records (which come out undecided).
    pub fn calls_for_all(&self, tree: &KdTree2) -> Vec<StateCall> {
        let mut codes: Vec<&str> = tree.points().iter().map(|p| p.code.as_str()).collect();
        codes.sort_unstable();
        codes
            .into_iter()
            .map(|code| match self.tallies.get(code) {
                Some(t) => call_state(t),
                None => call_state(&StateTally::new(code)),
            })
            .collect()
    }
}

/// Resolves each geo-tagged record to a state, scores it toward its single
/// mentioned candidate and counts the outcome. Neutral records and records
/// naming zero or two candidates only raise `total_geo`.
pub fn aggregate_state_sentiment<'a, I>(
    records: I,
    model: &NbModel,
    pipeline: &TextPipeline,
    tree: &KdTree2,
    candidates: &CandidatePair,
    options: &GeoOptions,
) -> GeoAggregation
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let mut agg = GeoAggregation::default();
    for rec in records {
        let Some(geo) = rec.geo else {
            agg.skipped_no_geo += 1;
            continue;
        };
        let (state, dist) = tree.nearest_with(geo.lat, geo.lon, options.metric);
        if options.max_anchor_distance.is_some_and(|max| dist > max) {
            agg.offshore += 1;
            continue;
        }
        let tally = agg
            .tallies
            .entry(state.code.clone())
            .or_insert_with(|| StateTally::new(state.code.clone()));
        tally.total_geo += 1;
        let Some((who, label)) = model.classify_candidate(rec, pipeline, candidates.as_slice())
        else {
            continue;
        };
        let is_a = who.name == candidates.a().name;
        match (is_a, label) {
            (true, SentimentLabel::Positive) => tally.pos_a += 1,
            (true, SentimentLabel::Negative) => tally.neg_a += 1,
            (false, SentimentLabel::Positive) => tally.pos_b += 1,
            (false, SentimentLabel::Negative) => tally.neg_b += 1,
            (_, SentimentLabel::Neutral) => {}
        }
    }
    agg
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("state {0:?} appears in only one of calls and actual results")]
    CodeMismatch(String),
    #[error("actual result for {0:?} must be A or B")]
    UndecidedActual(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionScore {
    pub correct: u64,
    pub total: u64,
    /// Fraction of all states called correctly. Undecided calls are wrong.
    pub overall: f64,
    /// Accuracy over the states A actually won; `None` if there were none.
    pub accuracy_a: Option<f64>,
    pub accuracy_b: Option<f64>,
    pub states_won_a: u64,
    pub states_won_b: u64,
    pub electoral_a: u64,
    pub electoral_b: u64,
    pub electoral_undecided: u64,
}

/// Scores calls against actual results. Electoral votes come from `states`;
/// codes missing there contribute zero votes.
pub fn score_predictions(
    calls: &BTreeMap<String, StateCall>,
    actual: &BTreeMap<String, Winner>,
    states: &[StatePoint],
) -> Result<PredictionScore, ScoreError> {
    if let Some(code) = calls
        .keys()
        .find(|c| !actual.contains_key(*c))
        .or_else(|| actual.keys().find(|c| !calls.contains_key(*c)))
    {
        return Err(ScoreError::CodeMismatch(code.clone()));
    }
    let votes: BTreeMap<&str, u64> = states
        .iter()
        .map(|s| (s.code.as_str(), u64::from(s.electoral_votes)))
        .collect();
    let mut s = PredictionScore {
        correct: 0,
        total: 0,
        overall: 0.0,
        accuracy_a: None,
        accuracy_b: None,
        states_won_a: 0,
        states_won_b: 0,
        electoral_a: 0,
        electoral_b: 0,
        electoral_undecided: 0,
    };
    let (mut hit_a, mut hit_b) = (0u64, 0u64);
    for (code, truth) in actual {
        let call = &calls[code];
        let ev = votes.get(code.as_str()).copied().unwrap_or(0);
        match call.winner {
            Winner::A => s.electoral_a += ev,
            Winner::B => s.electoral_b += ev,
            Winner::Undecided => s.electoral_undecided += ev,
        }
        let hit = call.winner == *truth;
        match truth {
            Winner::A => {
                s.states_won_a += 1;
                hit_a += u64::from(hit);
            }
            Winner::B => {
                s.states_won_b += 1;
                hit_b += u64::from(hit);
            }
            Winner::Undecided => return Err(ScoreError::UndecidedActual(code.clone())),
        }
        s.total += 1;
        s.correct += u64::from(hit);
    }
    let frac = |h: u64, n: u64| (n > 0).then(|| h as f64 / n as f64);
    s.overall = frac(s.correct, s.total).unwrap_or(0.0);
    s.accuracy_a = frac(hit_a, s.states_won_a);
    s.accuracy_b = frac(hit_b, s.states_won_b);
    Ok(s)
}

/// 2012 presidential winners by state: A = Obama, B = Romney.
pub fn election_2012_results() -> BTreeMap<String, Winner> {
    const OBAMA: [&str; 27] = [
        "CA", "CO", "CT", "DE", "DC", "FL", "HI", "IL", "IA", "ME", "MD", "MA", "MI", "MN", "NV",
        "NH", "NJ", "NM", "NY", "OH", "OR", "PA", "RI", "VT", "VA", "WA", "WI",
    ];
    const ROMNEY: [&str; 24] = [
        "AL", "AK", "AZ", "AR", "GA", "ID", "IN", "KS", "KY", "LA", "MS", "MO", "MT", "NE", "NC",
        "ND", "OK", "SC", "SD", "TN", "TX", "UT", "WV", "WY",
    ];
    OBAMA
        .iter()
        .map(|c| (String::from(*c), Winner::A))
        .chain(ROMNEY.iter().map(|c| (String::from(*c), Winner::B)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kdtree::default_states;
    use crate::sentiment::LabeledExample;
    use alloc::format;
    use alloc::vec;

    fn tally(pa: u64, na: u64, pb: u64, nb: u64) -> StateTally {
        StateTally {
            code: "XX".into(),
            pos_a: pa,
            neg_a: na,
            pos_b: pb,
            neg_b: nb,
            total_geo: pa + na + pb + nb,
        }
    }

    #[test]
    fn ratio_rows() {
        let f = Ratio::Finite;
        assert_eq!(winner_from_ratios(f(1.93), f(1.26)), Winner::A);
        assert_eq!(winner_from_ratios(f(1.120253), f(1.485866)), Winner::B);
        assert_eq!(winner_from_ratios(Ratio::Undefined, f(1.0)), Winner::Undecided);
        assert_eq!(winner_from_ratios(Ratio::Infinite, f(1e9)), Winner::A);
        assert_eq!(winner_from_ratios(Ratio::Infinite, Ratio::Infinite), Winner::Undecided);
    }

    #[test]
    fn call_from_counts() {
        assert_eq!(call_state(&tally(193, 126, 100, 100)).winner, Winner::A);
        assert_eq!(call_state(&tally(0, 0, 0, 0)).winner, Winner::Undecided);
        // One undefined ratio is undecided even though the other is defined.
        assert_eq!(call_state(&tally(0, 5, 0, 1)).winner, Winner::Undecided);
        // pos_b = 0 with pos_a > 0 is +inf, beating a finite -Ratio.
        let c = call_state(&tally(3, 2, 0, 1));
        assert_eq!(c.plus_ratio, Ratio::Infinite);
        assert_eq!(c.winner, Winner::A);
        assert_eq!(call_state(&tally(2, 3, 2, 3)).winner, Winner::Undecided);
    }

    #[test]
    fn scale_and_swap_invariance_exhaustive() {
        for pa in 0..5 {
            for na in 0..5 {
                for pb in 0..5 {
                    for nb in 0..5 {
                        let t = tally(pa, na, pb, nb);
                        let w = call_state(&t).winner;
                        for k in [2, 7, 1000] {
                            let s = tally(pa * k, na * k, pb * k, nb * k);
                            assert_eq!(call_state(&s).winner, w);
                        }
                        assert_eq!(call_state(&t.swapped()).winner, w.swapped(), "{t:?}");
                    }
                }
            }
        }
    }

    fn calls_from(winners: &[(String, Winner)]) -> BTreeMap<String, StateCall> {
        winners
            .iter()
            .map(|(c, w)| {
                (
                    c.clone(),
                    StateCall {
                        code: c.clone(),
                        plus_ratio: Ratio::Undefined,
                        minus_ratio: Ratio::Undefined,
                        counts: 0,
                        winner: *w,
                    },
                )
            })
            .collect()
    }

    #[test]
    fn thirty_eight_of_fifty() {
        let codes: Vec<String> = (0..50).map(|i| format!("S{i:02}")).collect();
        let actual: BTreeMap<_, _> = codes.iter().map(|c| (c.clone(), Winner::A)).collect();
        let called: Vec<_> = codes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), if i < 38 { Winner::A } else { Winner::B }))
            .collect();
        let s = score_predictions(&calls_from(&called), &actual, &[]).unwrap();
        assert_eq!(s.correct, 38);
        assert!((s.overall - 0.76).abs() < 1e-12);
    }

    #[test]
    fn per_candidate_accuracy() {
        // 27 A-states with 23 called right; 24 B-states with 15 called right.
        let actual = election_2012_results();
        let mut n_a = 0;
        let mut n_b = 0;
        let called: Vec<_> = actual
            .iter()
            .map(|(c, w)| {
                let hit = match w {
                    Winner::A => {
                        n_a += 1;
                        n_a <= 23
                    }
                    _ => {
                        n_b += 1;
                        n_b <= 15
                    }
                };
                (c.clone(), if hit { *w } else { w.swapped() })
            })
            .collect();
        let s = score_predictions(&calls_from(&called), &actual, &default_states()).unwrap();
        assert_eq!((s.states_won_a, s.states_won_b), (27, 24));
        assert_eq!(libm::round(s.accuracy_a.unwrap() * 100.0), 85.0);
        assert_eq!(s.accuracy_b, Some(0.625));
        assert_eq!(s.electoral_a + s.electoral_b, 538);
    }

    #[test]
    fn all_undecided_scores_zero() {
        let actual = election_2012_results();
        let called: Vec<_> = actual.keys().map(|c| (c.clone(), Winner::Undecided)).collect();
        let s = score_predictions(&calls_from(&called), &actual, &default_states()).unwrap();
        assert_eq!(s.overall, 0.0);
        assert_eq!(s.electoral_undecided, 538);
    }

    #[test]
    fn mismatched_codes() {
        let actual = election_2012_results();
        let called = vec![(String::from("CA"), Winner::A)];
        assert!(matches!(
            score_predictions(&calls_from(&called), &actual, &[]),
            Err(ScoreError::CodeMismatch(_))
        ));
    }

    fn small_model(p: &TextPipeline) -> NbModel {
        let c = CandidatePair::election_2012();
        let rows = [
            ("Obama great win", SentimentLabel::Positive),
            ("Romney great win", SentimentLabel::Positive),
            ("Obama awful lies", SentimentLabel::Negative),
            ("Romney awful lies", SentimentLabel::Negative),
            ("Obama tonight speech", SentimentLabel::Neutral),
        ];
        let ex: Vec<_> = rows
            .iter()
            .map(|(t, l)| {
                let target = if t.starts_with("Obama") { "obama" } else { "romney" };
                LabeledExample::from_text(t, target, *l, p, c.as_slice()).unwrap()
            })
            .collect();
        NbModel::train(&ex).unwrap()
    }

    fn geo_rec(id: &str, text: &str, lat: f64, lon: f64) -> TweetRecord {
        let g = crate::record::GeoPoint::new(lat, lon).unwrap();
        TweetRecord::new(id, 0, "web", "u", text, Some(g)).unwrap()
    }

    #[test]
    fn aggregation_counts() {
        let p = TextPipeline::default();
        let m = small_model(&p);
        let tree = KdTree2::build(default_states()).unwrap();
        let c = CandidatePair::election_2012();
        let opts = GeoOptions::default();
        let empty: [TweetRecord; 0] = [];
        assert!(aggregate_state_sentiment(empty.iter(), &m, &p, &tree, &c, &opts)
            .tallies
            .is_empty());

        let (lat, lon) = (31.05, -97.56);
        let recs = [
            geo_rec("1", "Obama great win", lat, lon),
            geo_rec("2", "Obama awful lies", lat, lon),
            geo_rec("3", "Romney great win", lat, lon),
            geo_rec("4", "Obama vs Romney", lat, lon),
            TweetRecord::new("5", 0, "web", "u", "Obama great", None).unwrap(),
        ];
        let agg = aggregate_state_sentiment(recs.iter(), &m, &p, &tree, &c, &opts);
        let tx = &agg.tallies["TX"];
        assert_eq!((tx.pos_a, tx.neg_a, tx.pos_b, tx.neg_b, tx.total_geo), (1, 1, 1, 0, 4));
        assert_eq!(agg.skipped_no_geo, 1);

        let far = GeoOptions {
            max_anchor_distance: Some(1.0),
            ..GeoOptions::default()
        };
        let agg = aggregate_state_sentiment([&geo_rec("9", "Obama", 0.0, -140.0)], &m, &p, &tree, &c, &far);
        assert_eq!(agg.offshore, 1);
        assert!(agg.tallies.is_empty());
    }

    #[test]
    fn calls_cover_every_anchor() {
        let tree = KdTree2::build(default_states()).unwrap();
        let calls = GeoAggregation::default().calls_for_all(&tree);
        assert_eq!(calls.len(), 51);
        assert!(calls.iter().all(|c| c.winner == Winner::Undecided));
    }
}
