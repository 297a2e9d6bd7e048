//! Tweet text normalisation: negation marking, noise removal, tokenisation
//! and candidate mention detection.
//!
//! Classification tokens come from [`TextPipeline::preprocess`], which runs
//! negation marking before cleaning because cleaning deletes the punctuation
//! that bounds a negation scope. Mention detection works on the raw text so
//! that hashtags and handles still count.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const NEGATION_PREFIX: &str = "NOT_";

const DEFAULT_STOP_WORDS: &str = include_str!("../data/stopwords.txt");
const DEFAULT_NEGATION_CUES: &str = include_str!("../data/negation_cues.txt");

/// Parses a word-list file: one entry per line, `#` comment lines and blank
/// lines ignored, entries lowercased.
pub fn parse_word_list(contents: &str) -> BTreeSet<String> {
    contents
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| lower(&normalize_apostrophes(l)))
        .collect()
}

/// Ordered lowercase tokens. Built only by [`TextPipeline::tokenize`], which
/// guarantees no empty tokens, stop words, `#`/`@` prefixes, URLs or pure
/// numbers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn into_vec(self) -> Vec<String> {
        self.0
    }

    /// Space-joined form; re-tokenising it yields the same list.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSpec {
    pub name: String,
    pub aliases: BTreeSet<String>,
}

impl CandidateSpec {
    pub fn new<I, S>(name: impl Into<String>, aliases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            name: name.into(),
            aliases: aliases.into_iter().map(|a| lower(a.as_ref())).collect(),
        }
    }

    fn mentioned_in(&self, lowered_text: &str) -> bool {
        self.aliases
            .iter()
            .any(|a| !a.is_empty() && lowered_text.contains(a.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CandidateError {
    #[error("candidate {0:?} has no aliases")]
    NoAliases(String),
    #[error("candidates share the alias {0:?}")]
    SharedAlias(String),
    #[error("both candidates are named {0:?}")]
    SameName(String),
}

/// The two contenders of a race. `a` is the candidate whose ratios form the
/// numerators of +Ratio and −Ratio.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePair {
    candidates: [CandidateSpec; 2],
}

impl CandidatePair {
    pub fn new(a: CandidateSpec, b: CandidateSpec) -> Result<Self, CandidateError> {
        for c in [&a, &b] {
            if c.aliases.iter().all(|s| s.is_empty()) {
                return Err(CandidateError::NoAliases(c.name.clone()));
            }
        }
        if a.name == b.name {
            return Err(CandidateError::SameName(a.name));
        }
        if let Some(shared) = a.aliases.intersection(&b.aliases).next() {
            return Err(CandidateError::SharedAlias(shared.clone()));
        }
        Ok(Self { candidates: [a, b] })
    }

    /// Obama (A) and Romney (B) with their first and last names as aliases.
    pub fn election_2012() -> Self {
        Self::new(
            CandidateSpec::new("obama", ["obama", "barack"]),
            CandidateSpec::new("romney", ["romney", "mitt"]),
        )
        .expect("built-in candidates are disjoint")
    }

    pub fn a(&self) -> &CandidateSpec {
        &self.candidates[0]
    }

    pub fn b(&self) -> &CandidateSpec {
        &self.candidates[1]
    }

    pub fn as_slice(&self) -> &[CandidateSpec] {
        &self.candidates
    }
}

/// Candidates mentioned in `text`, in the order given. Matching is a
/// case-insensitive substring test against each alias on the raw text.
pub fn detect_mentions<'c>(text: &str, candidates: &'c [CandidateSpec]) -> Vec<&'c CandidateSpec> {
    let lowered = text.to_lowercase();
    candidates
        .iter()
        .filter(|c| c.mentioned_in(&lowered))
        .collect()
}

/// Stop-word and negation-cue configuration plus the pipeline operations
/// that depend on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextPipeline {
    stop_words: BTreeSet<String>,
    negation_cues: BTreeSet<String>,
}

impl Default for TextPipeline {
    fn default() -> Self {
        Self::new(
            parse_word_list(DEFAULT_STOP_WORDS),
            parse_word_list(DEFAULT_NEGATION_CUES),
        )
    }
}

impl TextPipeline {
    pub fn new(stop_words: BTreeSet<String>, negation_cues: BTreeSet<String>) -> Self {
        let norm = |set: BTreeSet<String>| -> BTreeSet<String> {
            set.into_iter()
                .map(|s| lower(&normalize_apostrophes(&s)))
                .collect()
        };
        Self {
            stop_words: norm(stop_words),
            negation_cues: norm(negation_cues),
        }
    }

    pub fn with_stop_words<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stop_words = words.into_iter().map(|w| lower(w.as_ref())).collect();
        self
    }

    pub fn stop_words(&self) -> &BTreeSet<String> {
        &self.stop_words
    }

    pub fn negation_cues(&self) -> &BTreeSet<String> {
        &self.negation_cues
    }

    fn is_cue(&self, chunk: &str) -> bool {
        let word = chunk.trim_matches(|c: char| ends_scope(c) || c == '\'' || c == '’');
        !word.is_empty() && self.negation_cues.contains(&lower(&normalize_apostrophes(word)))
    }

    /// Prefixes `NOT_` to every word that follows a negation cue, up to the
    /// next punctuation mark. Whitespace and all other characters are kept
    /// as they are. Cues, URLs, hashtags, handles and words already carrying
    /// the prefix are left unmarked.
    pub fn mark_negation(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len() + 16);
        let mut in_scope = false;
        for (is_space, piece) in whitespace_runs(text) {
            if is_space {
                out.push_str(piece);
                continue;
            }
            if self.is_cue(piece) {
                out.push_str(piece);
                in_scope = !piece.chars().any(ends_scope);
                continue;
            }
            if is_url(piece) {
                out.push_str(piece);
                continue;
            }
            if in_scope {
                let starts_word = piece.chars().next().is_some_and(char::is_alphanumeric);
                let already = piece
                    .get(..NEGATION_PREFIX.len())
                    .is_some_and(|p| p.eq_ignore_ascii_case(NEGATION_PREFIX));
                if starts_word && !already {
                    out.push_str(NEGATION_PREFIX);
                }
                if piece.chars().any(ends_scope) {
                    in_scope = false;
                }
            }
            out.push_str(piece);
        }
        out
    }

    /// Removes URLs, `@`-mentions, standalone `RT`, hashtags, numeric tokens
    /// and punctuation, then lowercases. Surviving words are joined by single
    /// spaces.
    pub fn clean(&self, text: &str) -> String {
        let mut words: Vec<String> = Vec::new();
        for chunk in text.split_whitespace() {
            let chunk = strip_url(chunk);
            let chunk = strip_tagged(chunk, '@');
            if chunk.trim_matches(|c: char| c.is_ascii_punctuation()) == "RT" {
                continue;
            }
            let chunk = strip_tagged(&chunk, '#');
            let kept: String = chunk
                .chars()
                .filter(|&c| c.is_alphanumeric() || c == '_')
                .map(lower_char)
                .collect();
            if kept.is_empty() || is_pure_number(&kept) {
                continue;
            }
            words.push(kept);
        }
        words.join(" ")
    }

    fn is_stop(&self, token: &str) -> bool {
        if self.stop_words.contains(token) {
            return true;
        }
        let prefix = NEGATION_PREFIX.len();
        token.len() > prefix
            && token.is_char_boundary(prefix)
            && token[..prefix].eq_ignore_ascii_case(NEGATION_PREFIX)
            && self.stop_words.contains(&token[prefix..])
    }

    /// Splits on whitespace and lowercases. Drops stop words, including
    /// negated ones whose base word is a stop word, along with anything
    /// that still looks like a hashtag, handle, URL or number.
    pub fn tokenize(&self, text: &str) -> TokenList {
        TokenList(
            text.split_whitespace()
                .map(lower)
                .filter(|t| {
                    !t.is_empty()
                        && !t.starts_with('#')
                        && !t.starts_with('@')
                        && !is_url(t)
                        && !is_pure_number(t)
                        && !self.is_stop(t)
                })
                .collect(),
        )
    }

    /// `tokenize(clean(mark_negation(text)))`.
    pub fn preprocess(&self, text: &str) -> TokenList {
        self.tokenize(&self.clean(&self.mark_negation(text)))
    }
}

/// Characters that close a negation scope: punctuation other than
/// apostrophes, underscores and the `#`/`@` sigils.
fn ends_scope(c: char) -> bool {
    if matches!(c, '\'' | '’' | '_' | '#' | '@') {
        return false;
    }
    c.is_ascii_punctuation()
        || matches!(
            c,
            '…' | '“' | '”' | '‘' | '–' | '—' | '¡' | '¿' | '«' | '»' | '·'
        )
}

fn lower_char(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

/// Per-character lowercase that never lengthens the text.
fn lower(s: &str) -> String {
    s.chars().map(lower_char).collect()
}

fn normalize_apostrophes(s: &str) -> String {
    s.replace('’', "'")
}

fn is_pure_number(s: &str) -> bool {
    s.chars().any(|c| c.is_ascii_digit())
        && s.chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | ':' | '%' | '$' | '+' | '-'))
}

/// Byte offset where a URL starts inside `chunk`, if any. A URL begins with
/// `http://`, `https://`, `ftp://` or `www.` at the chunk start or after a
/// non-alphanumeric character, and runs to the end of the chunk.
fn url_start(chunk: &str) -> Option<usize> {
    const PREFIXES: [&str; 4] = ["http://", "https://", "ftp://", "www."];
    let bytes = chunk.as_bytes();
    (0..chunk.len()).find(|&i| {
        chunk.is_char_boundary(i)
            && (i == 0 || !(bytes[i - 1] as char).is_ascii_alphanumeric())
            && PREFIXES.iter().any(|p| {
                chunk
                    .get(i..i + p.len())
                    .is_some_and(|s| s.eq_ignore_ascii_case(p))
            })
    })
}

fn is_url(chunk: &str) -> bool {
    url_start(chunk) == Some(0)
}

fn strip_url(chunk: &str) -> &str {
    match url_start(chunk) {
        Some(i) => &chunk[..i],
        None => chunk,
    }
}

/// Deletes `sigil` followed by its word characters wherever the sigil is not
/// preceded by an alphanumeric character.
fn strip_tagged(chunk: &str, sigil: char) -> String {
    let mut out = String::with_capacity(chunk.len());
    let mut chars = chunk.chars().peekable();
    let mut prev: Option<char> = None;
    while let Some(c) = chars.next() {
        let tag_start = c == sigil
            && !prev.is_some_and(char::is_alphanumeric)
            && chars
                .peek()
                .is_some_and(|&n| n.is_alphanumeric() || n == '_');
        if tag_start {
            while chars
                .peek()
                .is_some_and(|&n| n.is_alphanumeric() || n == '_')
            {
                chars.next();
            }
            prev = Some('_');
            continue;
        }
        out.push(c);
        prev = Some(c);
    }
    out
}

/// Splits `text` into alternating whitespace / non-whitespace runs.
fn whitespace_runs(text: &str) -> impl Iterator<Item = (bool, &str)> {
    let mut rest = text;
    core::iter::from_fn(move || {
        let first = rest.chars().next()?;
        let space = first.is_whitespace();
        let end = rest
            .char_indices()
            .find(|&(_, c)| c.is_whitespace() != space)
            .map_or(rest.len(), |(i, _)| i);
        let (piece, tail) = rest.split_at(end);
        rest = tail;
        Some((space, piece))
    })
}

/// Extracts hashtags from raw text: `#` plus its word characters, lowercased.
/// Trailing punctuation is not part of the tag and embedded punctuation ends
/// it.
pub fn extract_hashtags(text: &str) -> Vec<String> {
    let mut tags = Vec::new();
    let mut prev: Option<char> = None;
    let mut chars = text.char_indices().peekable();
    while let Some((_, c)) = chars.next() {
        if c == '#' && !prev.is_some_and(char::is_alphanumeric) {
            let mut tag = String::from("#");
            while let Some(&(_, n)) = chars.peek() {
                if n.is_alphanumeric() || n == '_' {
                    tag.push(lower_char(n));
                    chars.next();
                } else {
                    break;
                }
            }
            if tag.len() > 1 {
                tags.push(tag);
            }
            prev = Some('#');
            continue;
        }
        prev = Some(c);
    }
    tags
}

impl core::fmt::Display for TokenList {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.joined())
    }
}

impl From<TokenList> for Vec<String> {
    fn from(t: TokenList) -> Self {
        t.0
    }
}

impl<'a> IntoIterator for &'a TokenList {
    type Item = &'a String;
    type IntoIter = core::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[doc(hidden)]
pub fn tokens_for_test(words: &[&str]) -> TokenList {
    TokenList(words.iter().map(|w| w.to_string()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pipeline(stop: &[&str]) -> TextPipeline {
        TextPipeline::default().with_stop_words(stop.iter().copied())
    }

    fn toks(t: &TokenList) -> Vec<&str> {
        t.iter().collect()
    }

    #[test]
    fn negation_reference_sentence() {
        let p = TextPipeline::default();
        assert_eq!(
            p.mark_negation("don't have favorite candidate, but ill vote for Obama anyway!"),
            "don't NOT_have NOT_favorite NOT_candidate, but ill vote for Obama anyway!"
        );
    }

    #[test]
    fn negation_empty_scope() {
        assert_eq!(TextPipeline::default().mark_negation("not"), "not");
    }

    #[test]
    fn negation_scope_resets_at_comma() {
        assert_eq!(
            TextPipeline::default().mark_negation("never ever, never ever."),
            "never NOT_ever, never NOT_ever."
        );
    }

    #[test]
    fn negation_skips_tags_and_urls() {
        let p = TextPipeline::default();
        assert_eq!(
            p.mark_negation("I don't like #Obama or http://x.co at all"),
            "I don't NOT_like #Obama NOT_or http://x.co NOT_at NOT_all"
        );
        assert_eq!(p.mark_negation("can’t  stop\tnow"), "can’t  NOT_stop\tNOT_now");
    }

    #[test]
    fn clean_reference_rows() {
        let p = TextPipeline::default();
        assert_eq!(
            p.clean("RT @JCULLI: If Romney win I'm moving to Canada."),
            "if romney win im moving to canada"
        );
        assert_eq!(p.clean(""), "");
        assert_eq!(
            p.clean("#Benghazi - #Obama Linked To Benghazi Attac"),
            "linked to benghazi attac"
        );
    }

    #[test]
    fn clean_urls_numbers_and_prefix() {
        let p = TextPipeline::default();
        assert_eq!(
            p.clean("see (http://t.co/abc) 2012 10,000 2nd www.x.com NOT_good"),
            "see 2nd not_good"
        );
        assert_eq!(p.clean("(5)"), "");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(toks(&pipeline(&["if"]).tokenize("if romney win")), vec!["romney", "win"]);
        assert!(pipeline(&[]).tokenize("   ").is_empty());
        assert_eq!(toks(&pipeline(&["not"]).tokenize("not NOT_good")), vec!["not_good"]);
    }

    #[test]
    fn preprocess_negation_end_to_end() {
        let p = pipeline(&["have", "but", "for"]);
        let t = p.preprocess("don't have favorite candidate, but ill vote for Obama anyway!");
        assert_eq!(
            toks(&t),
            vec!["dont", "not_favorite", "not_candidate", "ill", "vote", "obama", "anyway"]
        );
    }

    #[test]
    fn preprocess_table_rows() {
        let p = TextPipeline::default();
        assert_eq!(toks(&p.preprocess("Hell yeah!!!!! #Obama")), vec!["hell", "yeah"]);
        assert!(p.preprocess("").is_empty());
    }

    #[test]
    fn mentions() {
        let c = CandidatePair::election_2012();
        let names = |t: &str| -> Vec<String> {
            detect_mentions(t, c.as_slice())
                .into_iter()
                .map(|c| c.name.clone())
                .collect()
        };
        assert_eq!(names("Mitt Romney buys followers. LO"), vec!["romney"]);
        assert_eq!(names("Obama vs Romney tonight"), vec!["obama", "romney"]);
        assert!(names("election day!").is_empty());
        assert_eq!(names("Goin to vote. #Romney"), vec!["romney"]);
    }

    #[test]
    fn candidate_pair_validation() {
        let a = CandidateSpec::new("a", ["x", "y"]);
        let b = CandidateSpec::new("b", ["y"]);
        assert_eq!(
            CandidatePair::new(a.clone(), b),
            Err(CandidateError::SharedAlias("y".into()))
        );
        let empty = CandidateSpec::new("c", Vec::<String>::new());
        assert!(CandidatePair::new(a, empty).is_err());
    }

    #[test]
    fn hashtags() {
        assert_eq!(
            extract_hashtags("#Obama wins, #obama #debate! a#b #"),
            vec!["#obama", "#obama", "#debate"]
        );
        assert_eq!(extract_hashtags("#Obama's #tcot."), vec!["#obama", "#tcot"]);
    }

    #[test]
    fn word_list_parsing() {
        let set = parse_word_list("# comment\nThe\n\n  and \nDon’t\n");
        assert_eq!(set.into_iter().collect::<Vec<_>>(), vec!["and", "don't", "the"]);
    }
}
