//! Analytics core for tweet-like corpora.
//!
//! Everything here is pure computation over in-memory data and needs only
//! `alloc`: text preparation, three-class Naive Bayes polarity scoring,
//! k-d tree state lookup with the ratio winner rule, collapsed Gibbs LDA,
//! daily trend statistics, and a seeded synthetic corpus generator.
//! File formats, configuration and serving live in the `trendmine` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bucket;
pub mod geo;
pub mod kdtree;
pub mod lda;
pub mod record;
pub mod rng;
pub mod sentiment;
pub mod synth;
pub mod text;
pub mod trends;

pub use bucket::{bucket_by_day, sample_daily, BucketedDays, DailyBucket, TimeWindow};
pub use geo::{
    aggregate_state_sentiment, call_state, score_predictions, GeoAggregation, GeoOptions,
    PredictionScore, Ratio, StateCall, StateTally, Winner,
};
pub use kdtree::{DistanceMetric, KdTree2, StatePoint};
pub use lda::{LdaConfig, LdaState, TopicReport};
pub use record::{GeoPoint, PollMethod, PollRecord, Population, RecordError, TweetRecord};
pub use sentiment::{LabeledExample, NbModel, PriorMode, SentimentLabel};
pub use text::{CandidatePair, CandidateSpec, TextPipeline, TokenList};
pub use trends::{Histogram, TrendSeries};
