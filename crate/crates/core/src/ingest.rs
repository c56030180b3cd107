//! Record parsing and time-window bucketing.
//!
//! Three JSON Lines streams feed the pipeline: app-store reviews,
//! microblog posts, and download counts. Parsing validates each line and
//! reports errors with 1-based line numbers; bucketing groups records
//! into fixed-length windows and daily sub-windows anchored at a
//! configured origin (never calendar weeks, so results do not depend on
//! locale).

use std::io::BufRead;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The two rival apps. `A` is the focal app, `B` the competitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum App {
    A,
    B,
}

impl App {
    pub fn other(self) -> App {
        match self {
            App::A => App::B,
            App::B => App::A,
        }
    }
}

/// Which keyword crawl a microblog post came from: the combined crawl or
/// one of the single-app crawls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dataset {
    Both,
    A,
    B,
}

impl Dataset {
    pub fn swapped(self) -> Dataset {
        match self {
            Dataset::Both => Dataset::Both,
            Dataset::A => Dataset::B,
            Dataset::B => Dataset::A,
        }
    }
}

/// RFC 3339 timestamps at seconds precision.
///
/// Parsing accepts any RFC 3339 offset and truncates sub-second digits;
/// serialization always emits the UTC `Z` form, so parse -> serialize ->
/// parse is stable.
pub mod ts_format {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{self, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ts.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        parse(&raw).map_err(serde::de::Error::custom)
    }

    pub fn parse(raw: &str) -> Result<DateTime<Utc>, String> {
        DateTime::parse_from_rfc3339(raw)
            .map(|dt| {
                let utc = dt.with_timezone(&Utc);
                utc - chrono::Duration::nanoseconds(i64::from(utc.timestamp_subsec_nanos()))
            })
            .map_err(|e| format!("invalid RFC 3339 timestamp {raw:?}: {e}"))
    }
}

/// One app-store review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub app: App,
    pub store: String,
    #[serde(with = "ts_format")]
    pub ts: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<u8>,
    pub text: String,
}

impl ReviewRecord {
    /// The same review attributed to the other app.
    pub fn swapped(&self) -> ReviewRecord {
        ReviewRecord {
            app: self.app.other(),
            ..self.clone()
        }
    }
}

/// One microblog post with its engagement counters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicroblogRecord {
    pub dataset: Dataset,
    #[serde(with = "ts_format")]
    pub ts: DateTime<Utc>,
    pub user_id: String,
    pub text: String,
    pub reposts: u64,
    pub comments: u64,
    pub likes: u64,
}

impl MicroblogRecord {
    pub fn swapped(&self) -> MicroblogRecord {
        MicroblogRecord {
            dataset: self.dataset.swapped(),
            ..self.clone()
        }
    }
}

/// New downloads observed for one app over the record's own period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DownloadRecord {
    pub app: App,
    #[serde(with = "ts_format")]
    pub ts: DateTime<Utc>,
    pub downloads: u64,
}

impl DownloadRecord {
    pub fn swapped(&self) -> DownloadRecord {
        DownloadRecord {
            app: self.app.other(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("read failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("window spec invalid: {0}")]
    BadWindowSpec(String),
}

/// A line skipped by lenient parsing, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct SkippedLine {
    pub line: usize,
    pub message: String,
}

fn parse_line<T>(line: usize, raw: &str) -> Result<T, IngestError>
where
    T: serde::de::DeserializeOwned,
{
    serde_json::from_str(raw).map_err(|e| match e.classify() {
        serde_json::error::Category::Syntax | serde_json::error::Category::Eof => {
            IngestError::Json {
                line,
                message: e.to_string(),
            }
        }
        _ => IngestError::Validation {
            line,
            message: e.to_string(),
        },
    })
}

fn parse_stream<T, F>(
    reader: impl BufRead,
    validate: F,
    skipped: Option<&mut Vec<SkippedLine>>,
) -> Result<Vec<T>, IngestError>
where
    T: serde::de::DeserializeOwned,
    F: Fn(&T) -> Result<(), String>,
{
    let mut records = Vec::new();
    let mut lenient = skipped;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let raw = line?;
        if raw.trim().is_empty() {
            continue;
        }
        let outcome = parse_line::<T>(line_no, &raw).and_then(|record| {
            validate(&record)
                .map(|_| record)
                .map_err(|message| IngestError::Validation {
                    line: line_no,
                    message,
                })
        });
        match (outcome, &mut lenient) {
            (Ok(record), _) => records.push(record),
            (Err(err), Some(report)) => report.push(SkippedLine {
                line: line_no,
                message: err.to_string(),
            }),
            (Err(err), None) => return Err(err),
        }
    }
    Ok(records)
}

fn validate_review(r: &ReviewRecord) -> Result<(), String> {
    match r.rating {
        Some(stars) if !(1..=5).contains(&stars) => {
            Err(format!("rating must be within [1, 5], got {stars}"))
        }
        _ => Ok(()),
    }
}

/// Parse newline-delimited review JSON. The first malformed or invalid
/// line aborts with an error naming that line.
pub fn parse_reviews(reader: impl BufRead) -> Result<Vec<ReviewRecord>, IngestError> {
    parse_stream(reader, validate_review, None)
}

/// Lenient variant: bad lines are collected instead of fatal, IO errors
/// still abort.
pub fn parse_reviews_lenient(
    reader: impl BufRead,
) -> Result<(Vec<ReviewRecord>, Vec<SkippedLine>), IngestError> {
    let mut skipped = Vec::new();
    let records = parse_stream(reader, validate_review, Some(&mut skipped))?;
    Ok((records, skipped))
}

pub fn parse_microblogs(reader: impl BufRead) -> Result<Vec<MicroblogRecord>, IngestError> {
    parse_stream(reader, |_| Ok(()), None)
}

pub fn parse_microblogs_lenient(
    reader: impl BufRead,
) -> Result<(Vec<MicroblogRecord>, Vec<SkippedLine>), IngestError> {
    let mut skipped = Vec::new();
    let records = parse_stream(reader, |_| Ok(()), Some(&mut skipped))?;
    Ok((records, skipped))
}

pub fn parse_downloads(reader: impl BufRead) -> Result<Vec<DownloadRecord>, IngestError> {
    parse_stream(reader, |_| Ok(()), None)
}

pub fn parse_downloads_lenient(
    reader: impl BufRead,
) -> Result<(Vec<DownloadRecord>, Vec<SkippedLine>), IngestError> {
    let mut skipped = Vec::new();
    let records = parse_stream(reader, |_| Ok(()), Some(&mut skipped))?;
    Ok((records, skipped))
}

/// Epoch-anchored window layout: window 0 starts at `origin`, windows are
/// `window_length` long and divide evenly into sub-windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSpec {
    pub origin: DateTime<Utc>,
    pub window_length: Duration,
    pub sub_window_length: Duration,
}

impl WindowSpec {
    /// Weekly windows with daily sub-windows, the default layout.
    pub fn weekly(origin: DateTime<Utc>) -> WindowSpec {
        WindowSpec {
            origin,
            window_length: Duration::days(7),
            sub_window_length: Duration::days(1),
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let win = self.window_length.num_seconds();
        let sub = self.sub_window_length.num_seconds();
        if win <= 0 || sub <= 0 {
            return Err(IngestError::BadWindowSpec(
                "window and sub-window lengths must be positive".into(),
            ));
        }
        if win % sub != 0 {
            return Err(IngestError::BadWindowSpec(format!(
                "window length ({win}s) must be an integer multiple of the sub-window length ({sub}s)"
            )));
        }
        Ok(())
    }

    pub fn subs_per_window(&self) -> usize {
        (self.window_length.num_seconds() / self.sub_window_length.num_seconds()) as usize
    }

    /// `(window, sub_window)` cell for a timestamp, or `None` if it falls
    /// before the origin. Windows are half-open: a timestamp on a boundary
    /// belongs to the later window.
    pub fn locate(&self, ts: DateTime<Utc>) -> Option<(usize, usize)> {
        let offset = (ts - self.origin).num_seconds();
        if offset < 0 {
            return None;
        }
        let win = offset / self.window_length.num_seconds();
        let within = offset - win * self.window_length.num_seconds();
        let sub = within / self.sub_window_length.num_seconds();
        Some((win as usize, sub as usize))
    }
}

/// Records that fell before the window origin, per stream.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SkipReport {
    pub reviews: usize,
    pub microblogs: usize,
    pub downloads: usize,
}

impl SkipReport {
    pub fn total(&self) -> usize {
        self.reviews + self.microblogs + self.downloads
    }
}

/// One sub-window's records, already separated by app / crawl dataset.
#[derive(Debug, Clone, Default)]
pub struct SubWindow {
    pub reviews_a: Vec<ReviewRecord>,
    pub reviews_b: Vec<ReviewRecord>,
    pub posts_both: Vec<MicroblogRecord>,
    pub posts_a: Vec<MicroblogRecord>,
    pub posts_b: Vec<MicroblogRecord>,
    pub downloads_a: Vec<DownloadRecord>,
    pub downloads_b: Vec<DownloadRecord>,
}

impl SubWindow {
    pub fn record_count(&self) -> usize {
        self.reviews_a.len()
            + self.reviews_b.len()
            + self.posts_both.len()
            + self.posts_a.len()
            + self.posts_b.len()
            + self.downloads_a.len()
            + self.downloads_b.len()
    }
}

#[derive(Debug, Clone)]
pub struct Window {
    pub subs: Vec<SubWindow>,
}

/// All three streams bucketed on a common window layout.
#[derive(Debug, Clone)]
pub struct WindowedDataset {
    pub spec: WindowSpec,
    pub windows: Vec<Window>,
    pub skipped: SkipReport,
}

impl WindowedDataset {
    pub fn window_count(&self) -> usize {
        self.windows.len()
    }

    /// Summed downloads for window `w`, as `(app A, app B)`.
    pub fn downloads_in_window(&self, w: usize) -> (u64, u64) {
        let mut a = 0;
        let mut b = 0;
        for sub in &self.windows[w].subs {
            a += sub.downloads_a.iter().map(|d| d.downloads).sum::<u64>();
            b += sub.downloads_b.iter().map(|d| d.downloads).sum::<u64>();
        }
        (a, b)
    }

    pub fn stored_record_count(&self) -> usize {
        self.windows
            .iter()
            .flat_map(|w| w.subs.iter())
            .map(SubWindow::record_count)
            .sum()
    }
}

/// Bucket the three record streams into `(window, sub-window)` cells.
///
/// The window count is one past the highest occupied window index, so the
/// span adapts to the data; records before the origin are tallied into
/// the skip report, never silently dropped.
pub fn bucket(
    reviews: &[ReviewRecord],
    microblogs: &[MicroblogRecord],
    downloads: &[DownloadRecord],
    spec: &WindowSpec,
) -> Result<WindowedDataset, IngestError> {
    spec.validate()?;
    let subs_per_window = spec.subs_per_window();

    let mut windows: Vec<Window> = Vec::new();
    let mut skipped = SkipReport::default();

    let cell_of = |windows: &mut Vec<Window>, ts| {
        spec.locate(ts).map(|(w, s)| {
            while windows.len() <= w {
                windows.push(Window {
                    subs: vec![SubWindow::default(); subs_per_window],
                });
            }
            (w, s)
        })
    };

    for r in reviews {
        match cell_of(&mut windows, r.ts) {
            Some((w, s)) => {
                let cell = &mut windows[w].subs[s];
                match r.app {
                    App::A => cell.reviews_a.push(r.clone()),
                    App::B => cell.reviews_b.push(r.clone()),
                }
            }
            None => skipped.reviews += 1,
        }
    }
    for m in microblogs {
        match cell_of(&mut windows, m.ts) {
            Some((w, s)) => {
                let cell = &mut windows[w].subs[s];
                match m.dataset {
                    Dataset::Both => cell.posts_both.push(m.clone()),
                    Dataset::A => cell.posts_a.push(m.clone()),
                    Dataset::B => cell.posts_b.push(m.clone()),
                }
            }
            None => skipped.microblogs += 1,
        }
    }
    for d in downloads {
        match cell_of(&mut windows, d.ts) {
            Some((w, s)) => {
                let cell = &mut windows[w].subs[s];
                match d.app {
                    App::A => cell.downloads_a.push(d.clone()),
                    App::B => cell.downloads_b.push(d.clone()),
                }
            }
            None => skipped.downloads += 1,
        }
    }

    Ok(WindowedDataset {
        spec: spec.clone(),
        windows,
        skipped,
    })
}
