//! Corpus record types: tweets and opinion polls.

use alloc::string::String;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("record text is empty")]
    EmptyText,
    #[error("coordinate out of range: lat={lat}, lon={lon}")]
    CoordinateOutOfRange { lat: f64, lon: f64 },
}

/// A latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, RecordError> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(RecordError::CoordinateOutOfRange { lat, lon });
        }
        Ok(Self { lat, lon })
    }
}

/// One timestamped short text. Construct through [`TweetRecord::new`] so the
/// text and coordinate invariants hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub source: String,
    pub author: String,
    pub text: String,
    pub geo: Option<GeoPoint>,
}

impl TweetRecord {
    pub fn new(
        id: impl Into<String>,
        timestamp: i64,
        source: impl Into<String>,
        author: impl Into<String>,
        text: impl Into<String>,
        geo: Option<GeoPoint>,
    ) -> Result<Self, RecordError> {
        let id = id.into();
        if id.is_empty() {
            return Err(RecordError::MalformedRecord("empty id".into()));
        }
        if timestamp < 0 {
            return Err(RecordError::MalformedRecord(alloc::format!(
                "negative timestamp {timestamp}"
            )));
        }
        let text = text.into();
        if text.trim().is_empty() {
            return Err(RecordError::EmptyText);
        }
        if let Some(p) = geo {
            GeoPoint::new(p.lat, p.lon)?;
        }
        Ok(Self {
            id,
            timestamp,
            source: source.into(),
            author: author.into(),
            text,
            geo,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Population {
    LikelyVoters,
    RegisteredVoters,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PollMethod {
    AutomatedPhone,
    Phone,
    Internet,
    Mixed,
}

fn squash(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

impl Population {
    pub const ALL: [Population; 3] = [Self::LikelyVoters, Self::RegisteredVoters, Self::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LikelyVoters => "LikelyVoters",
            Self::RegisteredVoters => "RegisteredVoters",
            Self::Other => "Other",
        }
    }

    /// Accepts the canonical names as well as spaced or abbreviated forms
    /// such as "Likely Voters" or "LV".
    pub fn parse(s: &str) -> Option<Self> {
        match squash(s).as_str() {
            "likelyvoters" | "lv" => Some(Self::LikelyVoters),
            "registeredvoters" | "rv" => Some(Self::RegisteredVoters),
            "other" | "adults" | "a" => Some(Self::Other),
            _ => None,
        }
    }
}

impl PollMethod {
    pub const ALL: [PollMethod; 4] = [Self::AutomatedPhone, Self::Phone, Self::Internet, Self::Mixed];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AutomatedPhone => "AutomatedPhone",
            Self::Phone => "Phone",
            Self::Internet => "Internet",
            Self::Mixed => "Mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match squash(s).as_str() {
            "automatedphone" | "ivr" => Some(Self::AutomatedPhone),
            "phone" | "livephone" => Some(Self::Phone),
            "internet" | "web" | "online" => Some(Self::Internet),
            "mixed" => Some(Self::Mixed),
            _ => None,
        }
    }
}

/// One pollster result. `favor_a` and `favor_b` are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollRecord {
    pub pollster: String,
    pub end_date: NaiveDate,
    pub population: Population,
    pub method: PollMethod,
    pub favor_a: f64,
    pub favor_b: f64,
}

impl PollRecord {
    pub fn new(
        pollster: impl Into<String>,
        end_date: NaiveDate,
        population: Population,
        method: PollMethod,
        favor_a: f64,
        favor_b: f64,
    ) -> Result<Self, RecordError> {
        let in_range = |v: f64| (0.0..=100.0).contains(&v);
        if !in_range(favor_a) || !in_range(favor_b) {
            return Err(RecordError::MalformedRecord(alloc::format!(
                "favor percentages must lie in [0,100], got {favor_a} and {favor_b}"
            )));
        }
        if favor_a + favor_b > 100.0 {
            return Err(RecordError::MalformedRecord(alloc::format!(
                "favor_a + favor_b exceeds 100 ({favor_a} + {favor_b})"
            )));
        }
        Ok(Self {
            pollster: pollster.into(),
            end_date,
            population,
            method,
            favor_a,
            favor_b,
        })
    }

    /// Signed lead of candidate A in percentage points.
    pub fn margin(&self) -> f64 {
        self.favor_a - self.favor_b
    }
}
