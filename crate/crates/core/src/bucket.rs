//! Day bucketing and per-day sampling.
//!
//! Days are computed with a fixed minute offset applied to the UTC
//! timestamp (default −480, Pacific Standard Time). Daylight saving is
//! ignored. Window bounds are expressed in the same shifted seconds, so a
//! window built from local dates covers whole local days.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::num::NonZeroUsize;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::record::TweetRecord;
use crate::rng;

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const DEFAULT_DAY_OFFSET_MINUTES: i32 = -480;

/// Days from 0001-01-01 (CE day 1) to 1970-01-01.
const UNIX_EPOCH_CE_DAYS: i64 = 719_163;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("time window must satisfy start < end (got {start} .. {end})")]
pub struct InvalidWindow {
    pub start: i64,
    pub end: i64,
}

/// Half-open interval `[start, end)` in offset-shifted epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    start: i64,
    end: i64,
    day_offset_minutes: i32,
}

impl TimeWindow {
    pub fn new(start: i64, end: i64, day_offset_minutes: i32) -> Result<Self, InvalidWindow> {
        if start >= end {
            return Err(InvalidWindow { start, end });
        }
        Ok(Self {
            start,
            end,
            day_offset_minutes,
        })
    }

    /// Covers the local days `first..=last` inclusive.
    pub fn from_local_dates(
        first: NaiveDate,
        last: NaiveDate,
        day_offset_minutes: i32,
    ) -> Result<Self, InvalidWindow> {
        let start = day_number(first) * SECONDS_PER_DAY;
        let end = (day_number(last) + 1) * SECONDS_PER_DAY;
        Self::new(start, end, day_offset_minutes)
    }

    /// A window that admits every non-negative timestamp.
    pub fn unbounded(day_offset_minutes: i32) -> Self {
        Self {
            start: i64::MIN / 2,
            end: i64::MAX / 2,
            day_offset_minutes,
        }
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.end
    }

    pub fn day_offset_minutes(&self) -> i32 {
        self.day_offset_minutes
    }

    pub fn shift(&self, timestamp: i64) -> i64 {
        timestamp + i64::from(self.day_offset_minutes) * 60
    }

    pub fn contains(&self, timestamp: i64) -> bool {
        let t = self.shift(timestamp);
        self.start <= t && t < self.end
    }

    /// Local calendar day of a UTC timestamp.
    pub fn local_day(&self, timestamp: i64) -> NaiveDate {
        date_from_day_number(self.shift(timestamp).div_euclid(SECONDS_PER_DAY))
    }

    /// UTC timestamp of local midnight starting `day`.
    pub fn local_midnight_utc(&self, day: NaiveDate) -> i64 {
        day_number(day) * SECONDS_PER_DAY - i64::from(self.day_offset_minutes) * 60
    }
}

/// Days since 1970-01-01.
pub fn day_number(day: NaiveDate) -> i64 {
    i64::from(chrono::Datelike::num_days_from_ce(&day)) - UNIX_EPOCH_CE_DAYS
}

pub fn date_from_day_number(days: i64) -> NaiveDate {
    let ce = days + UNIX_EPOCH_CE_DAYS;
    i32::try_from(ce)
        .ok()
        .and_then(NaiveDate::from_num_days_from_ce_opt)
        .unwrap_or(if days < 0 { NaiveDate::MIN } else { NaiveDate::MAX })
}

/// Record ids of one local day, in input order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyBucket {
    pub day: NaiveDate,
    pub tweet_ids: Vec<String>,
}

impl DailyBucket {
    pub fn len(&self) -> usize {
        self.tweet_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweet_ids.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketedDays {
    /// Ascending by day; days without records are absent.
    pub buckets: Vec<DailyBucket>,
    pub out_of_window: usize,
    /// Records whose id already appeared in the same bucket.
    pub duplicate_ids: usize,
}

impl BucketedDays {
    pub fn dropped(&self) -> usize {
        self.out_of_window + self.duplicate_ids
    }

    pub fn total_bucketed(&self) -> usize {
        self.buckets.iter().map(DailyBucket::len).sum()
    }
}

/// Assigns each in-window record to its local day. The partition identity
/// `total_bucketed() + dropped() == input count` always holds.
pub fn bucket_by_day<'a, I>(records: I, window: &TimeWindow) -> BucketedDays
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let mut days: BTreeMap<NaiveDate, (Vec<String>, BTreeSet<String>)> = BTreeMap::new();
    let mut out = BucketedDays::default();
    for rec in records {
        if !window.contains(rec.timestamp) {
            out.out_of_window += 1;
            continue;
        }
        let (ids, seen) = days.entry(window.local_day(rec.timestamp)).or_default();
        if seen.insert(rec.id.clone()) {
            ids.push(rec.id.clone());
        } else {
            out.duplicate_ids += 1;
        }
    }
    out.buckets = days
        .into_iter()
        .map(|(day, (tweet_ids, _))| DailyBucket { day, tweet_ids })
        .collect();
    out
}

/// Uniform sample without replacement of `min(n, |bucket|)` ids.
///
/// The draw is a partial Fisher-Yates shuffle driven by a ChaCha8 stream
/// seeded with `seed`. When `n` covers the whole bucket the ids come back in
/// bucket order without shuffling.
pub fn sample_daily(bucket: &DailyBucket, n: NonZeroUsize, seed: u64) -> Vec<String> {
    let n = n.get();
    if n >= bucket.len() {
        return bucket.tweet_ids.clone();
    }
    let mut ids = bucket.tweet_ids.clone();
    let mut rng = rng::seeded(seed);
    let (picked, _) = ids.partial_shuffle(&mut rng, n);
    picked.to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn rec(id: &str, ts: i64) -> TweetRecord {
        TweetRecord::new(id, ts, "web", "u", "hello", None).unwrap()
    }

    fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn day_number_round_trip() {
        assert_eq!(day_number(ymd(1970, 1, 1)), 0);
        assert_eq!(date_from_day_number(15_650), ymd(2012, 11, 6));
        assert_eq!(date_from_day_number(day_number(ymd(2012, 9, 29))), ymd(2012, 9, 29));
    }

    #[test]
    fn pst_offset_moves_early_utc_to_previous_day() {
        // 2012-11-07T04:00:00Z
        let ts = 1_352_260_800;
        let w = TimeWindow::unbounded(DEFAULT_DAY_OFFSET_MINUTES);
        assert_eq!(w.local_day(ts), ymd(2012, 11, 6));
        let b = bucket_by_day([&rec("a", ts)], &w);
        assert_eq!(b.buckets[0].day, ymd(2012, 11, 6));
    }

    #[test]
    fn local_midnight_boundary_splits_days() {
        let w = TimeWindow::unbounded(DEFAULT_DAY_OFFSET_MINUTES);
        let midnight = w.local_midnight_utc(ymd(2012, 10, 3));
        let recs = [rec("before", midnight - 1), rec("after", midnight + 1)];
        let b = bucket_by_day(recs.iter(), &w);
        assert_eq!(b.buckets.len(), 2);
        assert_eq!(b.buckets[0].day, ymd(2012, 10, 2));
        assert_eq!(b.buckets[1].day, ymd(2012, 10, 3));
    }

    #[test]
    fn ten_records_three_days() {
        let w = TimeWindow::unbounded(0);
        let recs: Vec<_> = (0..10)
            .map(|i| rec(&format!("{i}"), (i % 3) * SECONDS_PER_DAY + 100 + i))
            .collect();
        let b = bucket_by_day(recs.iter(), &w);
        assert_eq!(b.buckets.len(), 3);
        assert_eq!(b.total_bucketed(), 10);
        assert_eq!(b.buckets[0].tweet_ids, vec!["0", "3", "6", "9"]);
    }

    #[test]
    fn window_drops_and_duplicates_are_counted() {
        let w = TimeWindow::from_local_dates(ymd(1970, 1, 2), ymd(1970, 1, 2), 0).unwrap();
        let recs = [
            rec("a", 10),
            rec("b", SECONDS_PER_DAY + 5),
            rec("b", SECONDS_PER_DAY + 6),
            rec("c", 2 * SECONDS_PER_DAY),
        ];
        let b = bucket_by_day(recs.iter(), &w);
        assert_eq!(b.out_of_window, 2);
        assert_eq!(b.duplicate_ids, 1);
        assert_eq!(b.total_bucketed() + b.dropped(), recs.len());
    }

    #[test]
    fn invalid_window() {
        assert!(TimeWindow::new(5, 5, 0).is_err());
    }

    fn bucket(n: usize) -> DailyBucket {
        DailyBucket {
            day: ymd(2012, 10, 3),
            tweet_ids: (0..n).map(|i| format!("t{i}")).collect(),
        }
    }

    #[test]
    fn sample_larger_than_bucket_returns_all() {
        let b = bucket(5);
        let s = sample_daily(&b, NonZeroUsize::new(10).unwrap(), 7);
        assert_eq!(s, b.tweet_ids);
    }

    #[test]
    fn sample_equal_to_bucket_is_unpermuted() {
        let b = bucket(10_000);
        let s = sample_daily(&b, NonZeroUsize::new(10_000).unwrap(), 7);
        assert_eq!(s, b.tweet_ids);
    }

    #[test]
    fn sample_is_deterministic_and_distinct() {
        let b = bucket(100);
        let n = NonZeroUsize::new(10).unwrap();
        let s1 = sample_daily(&b, n, 99);
        let s2 = sample_daily(&b, n, 99);
        assert_eq!(s1, s2);
        let set: BTreeSet<_> = s1.iter().collect();
        assert_eq!(set.len(), 10);
        assert_ne!(s1, sample_daily(&b, n, 100));
    }

    #[test]
    fn sample_inclusion_is_uniform() {
        // Each id should be included with probability n/|bucket| = 0.1.
        let b = bucket(100);
        let n = NonZeroUsize::new(10).unwrap();
        let trials = 10_000u64;
        let mut hits = BTreeMap::new();
        for seed in 0..trials {
            for id in sample_daily(&b, n, seed) {
                *hits.entry(id).or_insert(0u64) += 1;
            }
        }
        assert_eq!(hits.len(), 100);
        for (id, h) in hits {
            let freq = h as f64 / trials as f64;
            assert!((freq - 0.10).abs() <= 0.01, "{id}: {freq}");
        }
    }
}
