//! Lexicon sentiment scoring, sentiment distributions, mention counting,
//! and comparative-opinion detection.
//!
//! All matching is case-insensitive. The default mode matches raw
//! substrings, which works for both space-delimited and CJK text without
//! a segmenter; token mode restricts matches to whole alphanumeric
//! tokens.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("read failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("sentiment thresholds must satisfy 0 <= lo < hi <= 1, got ({lo}, {hi})")]
    BadThresholds { lo: f64, hi: f64 },
}

/// How terms and keywords are located in text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Case-insensitive substring containment (the default).
    #[default]
    Substring,
    /// Case-insensitive whole-token equality, tokens being maximal
    /// alphanumeric runs.
    Token,
}

/// Term -> polarity weight map. Terms are stored lowercased in a sorted
/// map so that weight sums always accumulate in the same order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentimentLexicon {
    entries: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct LexiconLine {
    term: String,
    weight: f64,
}

impl SentimentLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, term: &str, weight: f64) -> Result<(), TextError> {
        let folded = term.to_lowercase();
        if folded.is_empty() {
            return Err(TextError::Validation {
                line: 0,
                message: "lexicon terms must be non-empty".into(),
            });
        }
        if self.entries.insert(folded, weight).is_some() {
            return Err(TextError::Validation {
                line: 0,
                message: format!("duplicate lexicon term {term:?}"),
            });
        }
        Ok(())
    }

    /// Load from JSONL lines of `{"term": ..., "weight": ...}`.
    pub fn from_jsonl(reader: impl BufRead) -> Result<Self, TextError> {
        let mut lexicon = Self::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let raw = line?;
            if raw.trim().is_empty() {
                continue;
            }
            let entry: LexiconLine =
                serde_json::from_str(&raw).map_err(|e| json_error(line_no, e))?;
            lexicon.insert(&entry.term, entry.weight).map_err(|e| match e {
                TextError::Validation { message, .. } => TextError::Validation {
                    line: line_no,
                    message,
                },
                other => other,
            })?;
        }
        Ok(lexicon)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Terms with strictly positive / strictly negative weight, in sorted
    /// order. Used by the synthetic generator to build aligned texts.
    pub fn terms_by_sign(&self) -> (Vec<&str>, Vec<&str>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (term, &w) in &self.entries {
            if w > 0.0 {
                pos.push(term.as_str());
            } else if w < 0.0 {
                neg.push(term.as_str());
            }
        }
        (pos, neg)
    }

    fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(t, &w)| (t.as_str(), w))
    }
}

/// Comparative terms split into positive and negative sub-dictionaries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ComparativeDictionary {
    positive: BTreeSet<String>,
    negative: BTreeSet<String>,
}

#[derive(Deserialize)]
struct DictionaryLine {
    term: String,
    polarity: Polarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Polarity {
    Pos,
    Neg,
}

impl ComparativeDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, term: &str, positive: bool) -> Result<(), TextError> {
        let folded = term.to_lowercase();
        if folded.is_empty() {
            return Err(TextError::Validation {
                line: 0,
                message: "comparative terms must be non-empty".into(),
            });
        }
        let (target, opposite) = if positive {
            (&mut self.positive, &self.negative)
        } else {
            (&mut self.negative, &self.positive)
        };
        if opposite.contains(&folded) {
            return Err(TextError::Validation {
                line: 0,
                message: format!("term {term:?} cannot be both positive and negative"),
            });
        }
        target.insert(folded);
        Ok(())
    }

    /// Load from JSONL lines of `{"term": ..., "polarity": "pos"|"neg"}`.
    pub fn from_jsonl(reader: impl BufRead) -> Result<Self, TextError> {
        let mut dict = Self::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let raw = line?;
            if raw.trim().is_empty() {
                continue;
            }
            let entry: DictionaryLine =
                serde_json::from_str(&raw).map_err(|e| json_error(line_no, e))?;
            dict.insert(&entry.term, entry.polarity == Polarity::Pos)
                .map_err(|e| match e {
                    TextError::Validation { message, .. } => TextError::Validation {
                        line: line_no,
                        message,
                    },
                    other => other,
                })?;
        }
        Ok(dict)
    }

    pub fn positive_terms(&self) -> impl Iterator<Item = &str> {
        self.positive.iter().map(String::as_str)
    }

    pub fn negative_terms(&self) -> impl Iterator<Item = &str> {
        self.negative.iter().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }
}

fn json_error(line: usize, e: serde_json::Error) -> TextError {
    match e.classify() {
        serde_json::error::Category::Syntax | serde_json::error::Category::Eof => TextError::Json {
            line,
            message: e.to_string(),
        },
        _ => TextError::Validation {
            line,
            message: e.to_string(),
        },
    }
}

/// Proportions of negative / neutral / positive sentiment; components are
/// in `[0, 1]` and sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentDistribution {
    pub p_neg: f64,
    pub p_neu: f64,
    pub p_pos: f64,
}

impl SentimentDistribution {
    /// The uninformative default used when no scores are available.
    pub fn uniform() -> Self {
        SentimentDistribution {
            p_neg: 1.0 / 3.0,
            p_neu: 1.0 / 3.0,
            p_pos: 1.0 / 3.0,
        }
    }

    fn as_vector(&self) -> [f64; 3] {
        [self.p_neg, self.p_neu, self.p_pos]
    }
}

/// Cutoffs partitioning `[0, 1]` sentiment scores into negative
/// (`< lo`), neutral, and positive (`> hi`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentThresholds {
    pub lo: f64,
    pub hi: f64,
}

impl Default for SentimentThresholds {
    fn default() -> Self {
        SentimentThresholds { lo: 0.4, hi: 0.6 }
    }
}

impl SentimentThresholds {
    pub fn validate(&self) -> Result<(), TextError> {
        if !(0.0 <= self.lo && self.lo < self.hi && self.hi <= 1.0) {
            return Err(TextError::BadThresholds {
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(())
    }
}

fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut result = Vec::new();
    let mut start = None;
    for (idx, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if start.is_none() {
                start = Some(idx);
            }
        } else if let Some(s) = start.take() {
            result.push((s, &text[s..idx]));
        }
    }
    if let Some(s) = start {
        result.push((s, &text[s..]));
    }
    result.into_iter()
}

/// Byte offsets of every occurrence of `needle` in lowercased `haystack`.
/// Substring mode finds non-overlapping matches; token mode matches whole
/// tokens only. Both inputs must already be lowercased.
fn occurrences(haystack: &str, needle: &str, mode: MatchMode) -> Vec<usize> {
    if needle.is_empty() {
        return Vec::new();
    }
    match mode {
        MatchMode::Substring => haystack.match_indices(needle).map(|(i, _)| i).collect(),
        MatchMode::Token => tokens(haystack)
            .filter(|(_, tok)| *tok == needle)
            .map(|(i, _)| i)
            .collect(),
    }
}

fn contains_term(haystack: &str, needle: &str, mode: MatchMode) -> bool {
    if needle.is_empty() {
        return false;
    }
    match mode {
        MatchMode::Substring => haystack.contains(needle),
        MatchMode::Token => tokens(haystack).any(|(_, tok)| tok == needle),
    }
}

/// Sentiment score of one text in `[0, 1]`.
///
/// Sums the weights of the distinct lexicon terms present (each term
/// counted once regardless of repetition) and squashes the sum through
/// the logistic function, so no matches give exactly 0.5.
pub fn score_sentiment(text: &str, lexicon: &SentimentLexicon, mode: MatchMode) -> f64 {
    let folded = text.to_lowercase();
    let mut raw = 0.0;
    for (term, weight) in lexicon.iter() {
        if contains_term(&folded, term, mode) {
            raw += weight;
        }
    }
    1.0 / (1.0 + (-raw).exp())
}

/// Bucket scores into a [`SentimentDistribution`]. An empty score list
/// yields the uniform distribution.
pub fn sentiment_distribution(
    scores: &[f64],
    thresholds: SentimentThresholds,
) -> Result<SentimentDistribution, TextError> {
    thresholds.validate()?;
    if scores.is_empty() {
        return Ok(SentimentDistribution::uniform());
    }
    let n = scores.len() as f64;
    let neg = scores.iter().filter(|&&s| s < thresholds.lo).count() as f64;
    let pos = scores.iter().filter(|&&s| s > thresholds.hi).count() as f64;
    let neu = scores.len() as f64 - neg - pos;
    Ok(SentimentDistribution {
        p_neg: neg / n,
        p_neu: neu / n,
        p_pos: pos / n,
    })
}

/// Cosine similarity of two non-negative 3-vectors, clamped to `[0, 1]`.
/// All-zero vectors compare as 0; identical vectors compare as exactly 1.
pub fn cosine_similarity_raw(u: [f64; 3], v: [f64; 3]) -> f64 {
    if u == v {
        return if u == [0.0; 3] { 0.0 } else { 1.0 };
    }
    let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu * nv)).clamp(0.0, 1.0)
}

pub fn cosine_similarity(u: &SentimentDistribution, v: &SentimentDistribution) -> f64 {
    cosine_similarity_raw(u.as_vector(), v.as_vector())
}

/// Number of texts containing at least one of the keywords. A text with
/// several keyword hits still counts once.
pub fn count_mentions<S: AsRef<str>>(texts: &[S], keywords: &[String], mode: MatchMode) -> usize {
    let folded: Vec<String> = keywords.iter().map(|k| k.to_lowercase()).collect();
    texts
        .iter()
        .filter(|text| {
            let lower = text.as_ref().to_lowercase();
            folded.iter().any(|k| contains_term(&lower, k, mode))
        })
        .count()
}

/// Outcome of comparative analysis on one text: how many comparative
/// terms occurred and how the comparisons scored for each app.
/// Occurrences with no attributable subject contribute to `count` only,
/// so `score_a + score_b <= count`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ComparisonResult {
    pub count: usize,
    pub score_a: usize,
    pub score_b: usize,
}

impl ComparisonResult {
    pub fn accumulate(&mut self, other: ComparisonResult) {
        self.count += other.count;
        self.score_a += other.score_a;
        self.score_b += other.score_b;
    }
}

#[derive(Debug, Clone, Copy)]
enum Subject {
    A,
    B,
}

/// Detect comparative-term occurrences and attribute each to a subject
/// app.
///
/// The subject of an occurrence is the app whose keyword starts nearest
/// before it (ties resolved toward A); a positive term credits the
/// subject, a negative term credits the rival. Occurrences with no
/// preceding keyword stay unattributed.
pub fn detect_comparisons(
    text: &str,
    dict: &ComparativeDictionary,
    keywords_a: &[String],
    keywords_b: &[String],
    mode: MatchMode,
) -> ComparisonResult {
    let folded = text.to_lowercase();

    let keyword_positions = |keywords: &[String]| -> Vec<usize> {
        let mut positions = Vec::new();
        for kw in keywords {
            positions.extend(occurrences(&folded, &kw.to_lowercase(), mode));
        }
        positions.sort_unstable();
        positions
    };
    let pos_a = keyword_positions(keywords_a);
    let pos_b = keyword_positions(keywords_b);

    let nearest_before = |positions: &[usize], at: usize| -> Option<usize> {
        positions.iter().copied().rfind(|&p| p < at)
    };

    let mut result = ComparisonResult::default();
    let mut score = |term_at: usize, positive: bool| {
        result.count += 1;
        let best_a = nearest_before(&pos_a, term_at);
        let best_b = nearest_before(&pos_b, term_at);
        let subject = match (best_a, best_b) {
            (None, None) => return,
            (Some(_), None) => Subject::A,
            (None, Some(_)) => Subject::B,
            // Equal distances resolve toward A.
            (Some(a), Some(b)) => {
                if a >= b {
                    Subject::A
                } else {
                    Subject::B
                }
            }
        };
        let credited = match (subject, positive) {
            (Subject::A, true) | (Subject::B, false) => Subject::A,
            (Subject::B, true) | (Subject::A, false) => Subject::B,
        };
        match credited {
            Subject::A => result.score_a += 1,
            Subject::B => result.score_b += 1,
        }
    };

    for term in dict.positive_terms() {
        for at in occurrences(&folded, term, mode) {
            score(at, true);
        }
    }
    for term in dict.negative_terms() {
        for at in occurrences(&folded, term, mode) {
            score(at, false);
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn lexicon(entries: &[(&str, f64)]) -> SentimentLexicon {
        let mut lex = SentimentLexicon::new();
        for (term, weight) in entries {
            lex.insert(term, *weight).unwrap();
        }
        lex
    }

    fn dictionary(pos: &[&str], neg: &[&str]) -> ComparativeDictionary {
        let mut dict = ComparativeDictionary::new();
        for term in pos {
            dict.insert(term, true).unwrap();
        }
        for term in neg {
            dict.insert(term, false).unwrap();
        }
        dict
    }

    fn kw(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn no_matches_score_one_half() {
        let lex = lexicon(&[("great", 2.0)]);
        assert_eq!(
            score_sentiment("nothing here", &lex, MatchMode::Substring),
            0.5
        );
    }

    #[test]
    fn single_positive_term_scores_logistic_of_weight() {
        let lex = lexicon(&[("great", 2.0)]);
        let score = score_sentiment("a great ride", &lex, MatchMode::Substring);
        assert!((score - 0.88079).abs() < 1e-5, "score: {score}");
    }

    #[test]
    fn cancelling_weights_score_one_half() {
        let lex = lexicon(&[("great", 2.0), ("awful", -2.0)]);
        assert_eq!(
            score_sentiment("great but awful", &lex, MatchMode::Substring),
            0.5
        );
    }

    #[test]
    fn repeated_term_counts_once_for_sentiment() {
        let lex = lexicon(&[("great", 2.0)]);
        assert_eq!(
            score_sentiment("great great great", &lex, MatchMode::Substring),
            score_sentiment("great", &lex, MatchMode::Substring)
        );
    }

    #[test]
    fn matching_is_case_insensitive() {
        let lex = lexicon(&[("great", 2.0)]);
        assert!(score_sentiment("GREAT!", &lex, MatchMode::Substring) > 0.5);
    }

    #[test]
    fn token_mode_requires_whole_tokens() {
        let lex = lexicon(&[("reliable", 1.0)]);
        assert!(score_sentiment("unreliable", &lex, MatchMode::Substring) > 0.5);
        assert_eq!(score_sentiment("unreliable", &lex, MatchMode::Token), 0.5);
        assert!(score_sentiment("very reliable", &lex, MatchMode::Token) > 0.5);
    }

    #[test]
    fn distribution_counts_buckets() {
        let dist =
            sentiment_distribution(&[0.9, 0.9, 0.1, 0.5], SentimentThresholds::default()).unwrap();
        assert_eq!((dist.p_neg, dist.p_neu, dist.p_pos), (0.25, 0.25, 0.5));
    }

    #[test]
    fn empty_scores_give_uniform_distribution() {
        let dist = sentiment_distribution(&[], SentimentThresholds::default()).unwrap();
        assert_eq!(dist, SentimentDistribution::uniform());
    }

    #[test]
    fn all_neutral_scores() {
        let dist =
            sentiment_distribution(&[0.5, 0.5, 0.5], SentimentThresholds::default()).unwrap();
        assert_eq!((dist.p_neg, dist.p_neu, dist.p_pos), (0.0, 1.0, 0.0));
    }

    #[test]
    fn inverted_thresholds_are_rejected() {
        let err = sentiment_distribution(&[0.5], SentimentThresholds { lo: 0.7, hi: 0.2 });
        assert!(matches!(err, Err(TextError::BadThresholds { .. })));
    }

    #[test]
    fn cosine_of_identical_vectors_is_one() {
        assert_eq!(cosine_similarity_raw([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]), 1.0);
        let u = SentimentDistribution::uniform();
        assert_eq!(cosine_similarity(&u, &u), 1.0);
    }

    #[test]
    fn cosine_of_orthogonal_vectors_is_zero() {
        assert_eq!(cosine_similarity_raw([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), 0.0);
    }

    #[test]
    fn cosine_example_value() {
        let c = cosine_similarity_raw([0.2, 0.3, 0.5], [0.5, 0.3, 0.2]);
        assert!((c - 0.76316).abs() < 1e-5, "cosine: {c}");
    }

    #[test]
    fn cosine_of_zero_vector_is_zero() {
        assert_eq!(cosine_similarity_raw([0.0; 3], [1.0, 0.0, 0.0]), 0.0);
        assert_eq!(cosine_similarity_raw([0.0; 3], [0.0; 3]), 0.0);
    }

    #[test]
    fn mention_counting_is_per_text() {
        let texts = ["saw an alphabike", "nothing", "ALPHABIKE and alphabike"];
        assert_eq!(
            count_mentions(&texts, &kw(&["alphabike"]), MatchMode::Substring),
            2
        );
        let none: [&str; 0] = [];
        assert_eq!(
            count_mentions(&none, &kw(&["alphabike"]), MatchMode::Substring),
            0
        );
    }

    #[test]
    fn text_with_two_keywords_counts_once() {
        let texts = ["alphabike or betabike"];
        assert_eq!(
            count_mentions(&texts, &kw(&["alphabike", "betabike"]), MatchMode::Substring),
            1
        );
    }

    #[test]
    fn no_comparative_terms_no_comparison() {
        let dict = dictionary(&["sturdier"], &["heavier"]);
        let result = detect_comparisons(
            "alphabike is nice",
            &dict,
            &kw(&["alphabike"]),
            &kw(&["betabike"]),
            MatchMode::Substring,
        );
        assert_eq!(result, ComparisonResult::default());
    }

    #[test]
    fn positive_comparative_credits_the_subject() {
        let dict = dictionary(&["sturdier"], &["heavier"]);
        let result = detect_comparisons(
            "alphabike sturdier than betabike",
            &dict,
            &kw(&["alphabike"]),
            &kw(&["betabike"]),
            MatchMode::Substring,
        );
        assert_eq!(
            result,
            ComparisonResult {
                count: 1,
                score_a: 1,
                score_b: 0
            }
        );
    }

    #[test]
    fn negative_comparative_credits_the_rival() {
        let dict = dictionary(&["sturdier"], &["heavier"]);
        let result = detect_comparisons(
            "alphabike heavier than betabike",
            &dict,
            &kw(&["alphabike"]),
            &kw(&["betabike"]),
            MatchMode::Substring,
        );
        assert_eq!(
            result,
            ComparisonResult {
                count: 1,
                score_a: 0,
                score_b: 1
            }
        );
    }

    #[test]
    fn subject_is_the_nearest_preceding_keyword() {
        let dict = dictionary(&["better"], &[]);
        let result = detect_comparisons(
            "alphabike is fine but betabike is better",
            &dict,
            &kw(&["alphabike"]),
            &kw(&["betabike"]),
            MatchMode::Substring,
        );
        assert_eq!(result.score_b, 1);
        assert_eq!(result.score_a, 0);
    }

    #[test]
    fn occurrence_without_preceding_keyword_counts_unattributed() {
        let dict = dictionary(&["better"], &[]);
        let result = detect_comparisons(
            "better than alphabike",
            &dict,
            &kw(&["alphabike"]),
            &kw(&["betabike"]),
            MatchMode::Substring,
        );
        assert_eq!(
            result,
            ComparisonResult {
                count: 1,
                score_a: 0,
                score_b: 0
            }
        );
    }

    #[test]
    fn comparative_terms_count_per_occurrence() {
        let dict = dictionary(&["better"], &[]);
        let result = detect_comparisons(
            "alphabike better today, better tomorrow",
            &dict,
            &kw(&["alphabike"]),
            &kw(&["betabike"]),
            MatchMode::Substring,
        );
        assert_eq!(result.count, 2);
        assert_eq!(result.score_a, 2);
    }

    #[test]
    fn lexicon_loads_from_jsonl_and_rejects_duplicates() {
        let input = "{\"term\":\"great\",\"weight\":2.0}\n{\"term\":\"awful\",\"weight\":-2}";
        let lex = SentimentLexicon::from_jsonl(Cursor::new(input)).expect("load");
        assert_eq!(lex.len(), 2);

        let dup = "{\"term\":\"great\",\"weight\":2.0}\n{\"term\":\"GREAT\",\"weight\":1.0}";
        let err = SentimentLexicon::from_jsonl(Cursor::new(dup)).expect_err("dup");
        assert!(matches!(err, TextError::Validation { line: 2, .. }));
    }

    #[test]
    fn dictionary_loads_from_jsonl_and_stays_disjoint() {
        let input = "{\"term\":\"better\",\"polarity\":\"pos\"}\n{\"term\":\"worse\",\"polarity\":\"neg\"}";
        let dict = ComparativeDictionary::from_jsonl(Cursor::new(input)).expect("load");
        assert_eq!(dict.positive_terms().count(), 1);
        assert_eq!(dict.negative_terms().count(), 1);

        let clash = "{\"term\":\"better\",\"polarity\":\"pos\"}\n{\"term\":\"better\",\"polarity\":\"neg\"}";
        let err = ComparativeDictionary::from_jsonl(Cursor::new(clash)).expect_err("clash");
        assert!(matches!(err, TextError::Validation { line: 2, .. }));
    }
}
