//! Flat-file formats: tweets, polls, labeled examples, word lists, state
//! anchors and state-call results.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use trendmine_core::geo::StateCall;
use trendmine_core::kdtree::{parse_states_csv, StatePoint};
use trendmine_core::record::{GeoPoint, PollMethod, PollRecord, Population, RecordError, TweetRecord};
use trendmine_core::sentiment::SentimentLabel;
use trendmine_core::synth::LabeledText;
use trendmine_core::text::parse_word_list;

use crate::error::{Error, Result};

/// Marker for an absent coordinate in the delimited layout.
pub const NULL_FIELD: &str = "\\N";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TweetFormat {
    /// `id<TAB>timestamp<TAB>source<TAB>author<TAB>lat<TAB>lon<TAB>text`.
    Delimited,
    /// One JSON object per line with keys `id,ts,source,author,lat,lon,text`.
    JsonLine,
}

impl TweetFormat {
    /// JSON when the first non-blank line opens an object.
    pub fn sniff(contents: &str) -> Self {
        match contents.lines().map(str::trim_start).find(|l| !l.is_empty()) {
            Some(l) if l.starts_with('{') => Self::JsonLine,
            _ => Self::Delimited,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonTweet {
    id: String,
    ts: i64,
    #[serde(default)]
    source: String,
    #[serde(default)]
    author: String,
    #[serde(default)]
    lat: Option<f64>,
    #[serde(default)]
    lon: Option<f64>,
    text: String,
}

fn geo_from(lat: Option<f64>, lon: Option<f64>) -> Result<Option<GeoPoint>, RecordError> {
    match (lat, lon) {
        (Some(lat), Some(lon)) => GeoPoint::new(lat, lon).map(Some),
        _ => Ok(None),
    }
}

/// Backslash escapes of the delimited text field: `\\`, `\t`, `\n`, `\r`.
fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn coordinate(field: &str, name: &str) -> Result<Option<f64>, RecordError> {
    let f = field.trim();
    if f.is_empty() || f == NULL_FIELD {
        return Ok(None);
    }
    f.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Some)
        .ok_or_else(|| RecordError::MalformedRecord(format!("{name} {f:?} is not a number")))
}

pub fn parse_tweet_record(line: &str, format: TweetFormat) -> Result<TweetRecord, RecordError> {
    let line = line.trim_end_matches(['\n', '\r']);
    match format {
        TweetFormat::Delimited => {
            let fields: Vec<&str> = line.splitn(7, '\t').collect();
            if fields.len() != 7 {
                return Err(RecordError::MalformedRecord(format!(
                    "expected 7 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let ts = fields[1].trim().parse::<i64>().map_err(|_| {
                RecordError::MalformedRecord(format!("timestamp {:?} is not an integer", fields[1]))
            })?;
            let geo = geo_from(coordinate(fields[4], "lat")?, coordinate(fields[5], "lon")?)?;
            TweetRecord::new(fields[0], ts, fields[2], fields[3], unescape(fields[6]), geo)
        }
        TweetFormat::JsonLine => {
            let j: JsonTweet = serde_json::from_str(line)
                .map_err(|e| RecordError::MalformedRecord(e.to_string()))?;
            let geo = geo_from(j.lat, j.lon)?;
            TweetRecord::new(j.id, j.ts, j.source, j.author, j.text, geo)
        }
    }
}

/// One line without the trailing newline.
pub fn serialize_tweet_record(rec: &TweetRecord, format: TweetFormat) -> String {
    match format {
        TweetFormat::Delimited => {
            let (lat, lon) = match rec.geo {
                Some(g) => (g.lat.to_string(), g.lon.to_string()),
                None => (NULL_FIELD.to_string(), NULL_FIELD.to_string()),
            };
            let clean = |s: &str| s.replace(['\t', '\n', '\r'], " ");
            format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                clean(&rec.id),
                rec.timestamp,
                clean(&rec.source),
                clean(&rec.author),
                lat,
                lon,
                escape(&rec.text)
            )
        }
        TweetFormat::JsonLine => serde_json::to_string(&JsonTweet {
            id: rec.id.clone(),
            ts: rec.timestamp,
            source: rec.source.clone(),
            author: rec.author.clone(),
            lat: rec.geo.map(|g| g.lat),
            lon: rec.geo.map(|g| g.lon),
            text: rec.text.clone(),
        })
        .expect("plain struct serializes"),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Parses a whole tweet file, sniffing the layout. Blank lines are skipped;
/// the first bad line aborts with its line number.
pub fn parse_tweets(contents: &str) -> Result<Vec<TweetRecord>> {
    let format = TweetFormat::sniff(contents);
    contents
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_tweet_record(l, format).map_err(|e| Error::invalid(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn read_tweets(path: &Path) -> Result<Vec<TweetRecord>> {
    parse_tweets(&read_text(path)?).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

pub fn format_tweets(records: &[TweetRecord], format: TweetFormat) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serialize_tweet_record(r, format));
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct PollRow {
    pollster: String,
    end_date: String,
    population: String,
    method: String,
    favor_a: f64,
    favor_b: f64,
}

/// Reads `pollster,end_date,population,method,favor_a,favor_b` rows and
/// returns them sorted by end date (stable for equal dates).
pub fn parse_polls(contents: &str) -> Result<Vec<PollRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(contents.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::invalid(format!("malformed poll header: {e}")))?
        .clone();
    let mut polls = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::invalid(format!("line {line}: malformed poll record: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: PollRow = rec
            .deserialize(Some(&headers))
            .map_err(|e| Error::invalid(format!("line {line}: malformed poll record: {e}")))?;
        let bad = |msg: String| Error::invalid(format!("line {line}: malformed poll record: {msg}"));
        let end_date = NaiveDate::parse_from_str(&row.end_date, "%Y-%m-%d")
            .map_err(|_| bad(format!("bad end_date {:?}", row.end_date)))?;
        let population = Population::parse(&row.population)
            .ok_or_else(|| bad(format!("unknown population {:?}", row.population)))?;
        let method = PollMethod::parse(&row.method)
            .ok_or_else(|| bad(format!("unknown method {:?}", row.method)))?;
        polls.push(
            PollRecord::new(row.pollster, end_date, population, method, row.favor_a, row.favor_b)
                .map_err(|e| bad(e.to_string()))?,
        );
    }
    polls.sort_by_key(|p| p.end_date);
    Ok(polls)
}

pub fn load_polls(path: &Path) -> Result<Vec<PollRecord>> {
    parse_polls(&read_text(path)?).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

pub fn format_polls(polls: &[PollRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in polls {
        w.serialize(PollRow {
            pollster: p.pollster.clone(),
            end_date: p.end_date.to_string(),
            population: p.population.as_str().into(),
            method: p.method.as_str().into(),
            favor_a: p.favor_a,
            favor_b: p.favor_b,
        })
        .expect("in-memory csv write");
    }
    let mut bytes = w.into_inner().expect("in-memory csv flush");
    if polls.is_empty() {
        bytes = b"pollster,end_date,population,method,favor_a,favor_b\n".to_vec();
    }
    String::from_utf8(bytes).expect("csv output is utf-8")
}

/// One labeled training line: `text<TAB>target<TAB>label`. Rows whose target
/// is `NA` carry no candidate and are skipped by [`parse_labeled`].
pub fn parse_labeled(contents: &str) -> Result<Vec<LabeledText>> {
    let mut out = Vec::new();
    for (i, line) in contents.lines().enumerate() {
        if line.trim().is_empty() || (i == 0 && line.starts_with("text\t")) {
            continue;
        }
        let bad = |m: String| Error::invalid(format!("line {}: {m}", i + 1));
        let fields: Vec<&str> = line.rsplitn(3, '\t').collect();
        if fields.len() != 3 {
            return Err(bad("expected text, target and label separated by tabs".into()));
        }
        let (label, target, text) = (fields[0].trim(), fields[1].trim(), unescape(fields[2]));
        let label =
            SentimentLabel::parse(label).ok_or_else(|| bad(format!("bad label {label:?}")))?;
        if target.eq_ignore_ascii_case("na") || target.is_empty() {
            continue;
        }
        if text.trim().is_empty() {
            return Err(bad("empty text".into()));
        }
        out.push(LabeledText {
            text,
            target: target.to_string(),
            label,
        });
    }
    Ok(out)
}

pub fn read_labeled(path: &Path) -> Result<Vec<LabeledText>> {
    parse_labeled(&read_text(path)?).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

pub fn format_labeled(rows: &[LabeledText]) -> String {
    let mut out = String::from("text\ttarget\tlabel\n");
    for r in rows {
        out.push_str(&format!("{}\t{}\t{}\n", escape(&r.text), r.target, r.label));
    }
    out
}

pub fn read_word_list(path: &Path) -> Result<BTreeSet<String>> {
    Ok(parse_word_list(&read_text(path)?))
}

pub fn read_states(path: &Path) -> Result<Vec<StatePoint>> {
    parse_states_csv(&read_text(path)?).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

/// `code,plus_ratio,minus_ratio,counts,winner`, one row per call.
pub fn format_calls(calls: &[StateCall], comment: &str) -> String {
    let mut out = String::new();
    out.push_str(comment);
    out.push_str("code,plus_ratio,minus_ratio,counts,winner\n");
    for c in calls {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.code,
            c.plus_ratio,
            c.minus_ratio,
            c.counts,
            c.winner.as_str()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_one_row_has_geo() {
        let r = parse_tweet_record(
            "1\t1352246400\tweb\tu\t38.9\t-77.0\tGoin to vote. #Romney",
            TweetFormat::Delimited,
        )
        .unwrap();
        assert_eq!(r.geo, Some(GeoPoint { lat: 38.9, lon: -77.0 }));
        assert_eq!(r.text, "Goin to vote. #Romney");
    }

    #[test]
    fn delimited_errors() {
        let f = TweetFormat::Delimited;
        assert_eq!(parse_tweet_record("1\t5\tweb\tu\t\\N\t\\N\t  ", f), Err(RecordError::EmptyText));
        assert!(matches!(
            parse_tweet_record("1\t5\tweb\tu\t95.0\t0\thi", f),
            Err(RecordError::CoordinateOutOfRange { .. })
        ));
        assert!(matches!(parse_tweet_record("1\t5\tweb", f), Err(RecordError::MalformedRecord(_))));
        assert!(matches!(
            parse_tweet_record("1\tx\tweb\tu\t\\N\t\\N\thi", f),
            Err(RecordError::MalformedRecord(_))
        ));
        let half = parse_tweet_record("1\t5\tweb\tu\t40\t\\N\thi", f).unwrap();
        assert_eq!(half.geo, None);
    }

    #[test]
    fn json_line() {
        let r = parse_tweet_record(
            r#"{"id":"a","ts":10,"source":"web","author":"u","lat":null,"lon":null,"text":"hi"}"#,
            TweetFormat::JsonLine,
        )
        .unwrap();
        assert_eq!(r.geo, None);
        assert_eq!(TweetFormat::sniff("\n  {\"id\":1}"), TweetFormat::JsonLine);
        assert_eq!(TweetFormat::sniff("1\t2"), TweetFormat::Delimited);
    }

    #[test]
    fn text_escapes_round_trip() {
        let r = TweetRecord::new("1", 5, "web", "u", "a\tb\nc \\N d\\", None).unwrap();
        for f in [TweetFormat::Delimited, TweetFormat::JsonLine] {
            let line = serialize_tweet_record(&r, f);
            assert!(!line.contains('\n'));
            assert_eq!(parse_tweet_record(&line, f).unwrap(), r);
        }
    }

    #[test]
    fn polls_parse_and_sort() {
        let text = "pollster,end_date,population,method,favor_a,favor_b\n\
                    B,2012-10-02,LV,Phone,49,48\n\
                    A,2012-10-01,Likely Voters,Automated Phone,47,47\n";
        let p = parse_polls(text).unwrap();
        assert_eq!(p[0].pollster, "A");
        assert_eq!(p[1].favor_a, 49.0);
        assert!(parse_polls("").unwrap().is_empty());
        let bad = "pollster,end_date,population,method,favor_a,favor_b\nA,2012-10-01,LV,Phone,60,50\n";
        let err = parse_polls(bad).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert_eq!(parse_polls(&format_polls(&p)).unwrap(), p);
    }

    #[test]
    fn labeled_rows() {
        let text = "text\ttarget\tlabel\nobama rocks\tobama\t+1\nmeh\tNA\t0\nromney\tromney\t-1\n";
        let rows = parse_labeled(text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].label, SentimentLabel::Negative);
        assert_eq!(parse_labeled(&format_labeled(&rows)).unwrap(), rows);
        assert!(parse_labeled("x\tobama\t7\n").is_err());
    }
}
