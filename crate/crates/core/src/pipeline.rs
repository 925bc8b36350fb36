//! Chart corpus pipeline: manifest ingestion, batch scoring, weekly
//! and rolling trend series, and the CSV formats that carry them.
//!
//! File formats (all UTF-8 CSV with a required header):
//!
//! * manifest — `week,rank,title,artist,midi_path`, week as YYYY-MM-DD,
//!   rank in [1, 20], `midi_path` optional and resolved relative to the
//!   manifest's directory.
//! * scores — `song_id,week,similarity_c,similarity_cstar,excluded`;
//!   similarity values carry 6 decimal places, and exactly one of
//!   (similarities, exclusion reason) is present per row.
//! * trend — `week,n_songs,mean,ci_lower,ci_upper`.
//! * rolling — `week,rolling_mean`.
//!
//! Scoring failures never abort a batch: a song that cannot be parsed,
//! is not in 4/4, has no onsets, or has no file is carried through as
//! an excluded row. A (title, artist) pair that charts in several weeks
//! is scored once and the value reused.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::onset::classify_meter;
use crate::onset::{build_onset_table, onset_histogram, quantize_onsets, MeterClass};
use crate::prng::derive_seed;
use crate::rhythm::{from_histogram, RhythmVector};
use crate::similarity::{cosine, parameterized_cosine, Theta};
use crate::smf::parse_smf;
use crate::stats::{bootstrap_mean_ci, rolling_mean, BootstrapConfig, StatsError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("FileNotFound: {0}")]
    FileNotFound(PathBuf),
    #[error("ManifestParseError: row {row}: {reason}")]
    ManifestParseError { row: usize, reason: String },
    #[error("ScoreParseError: row {row}: {reason}")]
    ScoreParseError { row: usize, reason: String },
    #[error("TrendParseError: row {row}: {reason}")]
    TrendParseError { row: usize, reason: String },
    #[error("NoScoredSongs: every song was excluded")]
    NoScoredSongs,
    #[error("IoError: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// One chart slot of one week.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChartEntry {
    pub week: NaiveDate,
    pub rank: u8,
    pub title: String,
    pub artist: String,
    pub midi_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExclusionReason {
    NotFourFour,
    EmptyRhythm,
    ParseError,
    MissingFile,
}

impl ExclusionReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExclusionReason::NotFourFour => "NotFourFour",
            ExclusionReason::EmptyRhythm => "EmptyRhythm",
            ExclusionReason::ParseError => "ParseError",
            ExclusionReason::MissingFile => "MissingFile",
        }
    }

    fn parse(text: &str) -> Option<Self> {
        match text {
            "NotFourFour" => Some(ExclusionReason::NotFourFour),
            "EmptyRhythm" => Some(ExclusionReason::EmptyRhythm),
            "ParseError" => Some(ExclusionReason::ParseError),
            "MissingFile" => Some(ExclusionReason::MissingFile),
            _ => None,
        }
    }
}

/// One chart slot's scoring outcome: either both similarities or an
/// exclusion reason. Similarities are canonicalized to the 6-decimal
/// precision of the score CSV, so persisting and reloading a score list
/// is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct SongScore {
    pub song_id: String,
    pub week: NaiveDate,
    pub similarity_c: Option<f64>,
    pub similarity_cstar: Option<f64>,
    pub excluded: Option<ExclusionReason>,
}

/// One week's aggregated similarity with bootstrap bounds. Percentile
/// intervals need not straddle the sample mean, but `ci_lower <=
/// ci_upper` always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendPoint {
    pub week: NaiveDate,
    pub n_songs: usize,
    pub mean: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

/// Which similarity column feeds an aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    C,
    CStar,
}

/// Rounds to the 6 decimal places the score CSV carries.
fn round6(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

/// Dedup key and song id: lowercase, trimmed, internal whitespace
/// collapsed, title and artist joined with " - ".
pub fn song_key(title: &str, artist: &str) -> String {
    let squeeze = |s: &str| {
        s.split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_lowercase()
    };
    format!("{} - {}", squeeze(title), squeeze(artist))
}

const MANIFEST_HEADER: [&str; 5] = ["week", "rank", "title", "artist", "midi_path"];
const SCORE_HEADER: [&str; 5] = [
    "song_id",
    "week",
    "similarity_c",
    "similarity_cstar",
    "excluded",
];
const TREND_HEADER: [&str; 5] = ["week", "n_songs", "mean", "ci_lower", "ci_upper"];
const ROLLING_HEADER: [&str; 2] = ["week", "rolling_mean"];

fn manifest_error(row: usize, reason: impl Into<String>) -> PipelineError {
    PipelineError::ManifestParseError {
        row,
        reason: reason.into(),
    }
}

/// Loads and validates a chart manifest. Relative `midi_path` values
/// are resolved against the manifest's directory. Rows are numbered
/// from 1 (the header is row 1).
pub fn load_manifest(path: &Path) -> Result<Vec<ChartEntry>, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::FileNotFound(path.to_path_buf()));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| manifest_error(1, e.to_string()))?;

    let mut entries = Vec::new();
    let mut seen: HashMap<(NaiveDate, u8), usize> = HashMap::new();
    for (index, record) in reader.records().enumerate() {
        let row = index + 1;
        let record = record.map_err(|e| manifest_error(row, e.to_string()))?;
        if row == 1 {
            let header: Vec<&str> = record.iter().collect();
            if header != MANIFEST_HEADER {
                return Err(manifest_error(
                    1,
                    format!("expected header {MANIFEST_HEADER:?}, got {header:?}"),
                ));
            }
            continue;
        }
        if record.len() != 5 {
            return Err(manifest_error(
                row,
                format!("expected 5 fields, got {}", record.len()),
            ));
        }
        let week = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| manifest_error(row, format!("unreadable week {:?}: {e}", &record[0])))?;
        let rank: u8 = record[1]
            .parse()
            .map_err(|_| manifest_error(row, format!("unreadable rank {:?}", &record[1])))?;
        if !(1..=20).contains(&rank) {
            return Err(manifest_error(row, format!("rank {rank} outside [1, 20]")));
        }
        if let Some(previous) = seen.insert((week, rank), row) {
            return Err(manifest_error(
                row,
                format!("duplicate (week, rank) also on row {previous}"),
            ));
        }
        let midi_path = if record[4].is_empty() {
            None
        } else {
            let given = PathBuf::from(&record[4]);
            Some(if given.is_absolute() {
                given
            } else {
                base.join(given)
            })
        };
        entries.push(ChartEntry {
            week,
            rank,
            title: record[2].to_string(),
            artist: record[3].to_string(),
            midi_path,
        });
    }
    Ok(entries)
}

enum Outcome {
    Scored { c: f64, cstar: f64 },
    Excluded(ExclusionReason),
}

fn score_one(
    midi_path: Option<&Path>,
    song_id: &str,
    theta: &Theta,
    reference: &RhythmVector,
) -> Outcome {
    let Some(path) = midi_path else {
        return Outcome::Excluded(ExclusionReason::MissingFile);
    };
    let Ok(bytes) = fs::read(path) else {
        return Outcome::Excluded(ExclusionReason::MissingFile);
    };
    let Ok(file) = parse_smf(&bytes) else {
        return Outcome::Excluded(ExclusionReason::ParseError);
    };
    let table = build_onset_table(&file, song_id);
    if let MeterClass::Other(..) = classify_meter(&table) {
        return Outcome::Excluded(ExclusionReason::NotFourFour);
    }
    let quantized = quantize_onsets(&table, 16).expect("meter already checked");
    let Ok(vector) = from_histogram(&onset_histogram(&quantized)) else {
        return Outcome::Excluded(ExclusionReason::EmptyRhythm);
    };
    let c = cosine(&vector, reference)
        .expect("rhythm vectors have unit norm")
        .value();
    // a theta that annihilates this song's support leaves it with no
    // rhythm content under the model
    let Ok(cstar) = parameterized_cosine(&vector, reference, theta) else {
        return Outcome::Excluded(ExclusionReason::EmptyRhythm);
    };
    Outcome::Scored {
        c: round6(c),
        cstar: round6(cstar.value()),
    }
}

/// Scores every chart entry against the reference with both measures.
///
/// The output has exactly one `SongScore` per input entry, in input
/// order; failures become exclusion reasons. Dedup: the first
/// occurrence of a (title, artist) key determines the outcome reused
/// for all its weeks.
pub fn score_corpus(
    entries: &[ChartEntry],
    theta: &Theta,
    reference: &RhythmVector,
) -> Vec<SongScore> {
    let mut cache: HashMap<String, Outcome> = HashMap::new();
    let mut scores = Vec::with_capacity(entries.len());
    for entry in entries {
        let key = song_key(&entry.title, &entry.artist);
        let outcome = cache
            .entry(key.clone())
            .or_insert_with(|| score_one(entry.midi_path.as_deref(), &key, theta, reference));
        let score = match outcome {
            Outcome::Scored { c, cstar } => SongScore {
                song_id: key,
                week: entry.week,
                similarity_c: Some(*c),
                similarity_cstar: Some(*cstar),
                excluded: None,
            },
            Outcome::Excluded(reason) => SongScore {
                song_id: key,
                week: entry.week,
                similarity_c: None,
                similarity_cstar: None,
                excluded: Some(*reason),
            },
        };
        scores.push(score);
    }
    scores
}

fn week_label(week: NaiveDate) -> u64 {
    i64::from(week.num_days_from_ce()) as u64
}

/// Groups scored songs by week and attaches a seeded bootstrap interval
/// to each weekly mean. Weeks with no scored songs are omitted; output
/// is sorted by week. The bootstrap for a week uses the seed
/// `derive_seed(config.seed, days_from_ce(week))`, so results do not
/// depend on scoring order.
pub fn weekly_trend(
    scores: &[SongScore],
    which: Measure,
    config: &BootstrapConfig,
) -> Result<Vec<TrendPoint>, PipelineError> {
    let mut by_week: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for score in scores {
        if score.excluded.is_some() {
            continue;
        }
        let value = match which {
            Measure::C => score.similarity_c,
            Measure::CStar => score.similarity_cstar,
        }
        .expect("scored rows carry both similarities");
        by_week.entry(score.week).or_default().push(value);
    }
    if by_week.is_empty() {
        return Err(PipelineError::NoScoredSongs);
    }
    let mut points = Vec::with_capacity(by_week.len());
    for (week, values) in by_week {
        let week_config = BootstrapConfig {
            seed: derive_seed(config.seed, week_label(week)),
            ..*config
        };
        let estimate = bootstrap_mean_ci(&values, &week_config)?;
        points.push(TrendPoint {
            week,
            n_songs: values.len(),
            mean: estimate.point,
            ci_lower: estimate.lower,
            ci_upper: estimate.upper,
        });
    }
    Ok(points)
}

/// Trailing rolling mean (default window 52 weeks) over the weekly
/// means.
pub fn rolling_trend(
    weekly: &[TrendPoint],
    window_weeks: usize,
) -> Result<Vec<(NaiveDate, f64)>, PipelineError> {
    let series: Vec<(NaiveDate, f64)> = weekly.iter().map(|p| (p.week, p.mean)).collect();
    Ok(rolling_mean(&series, window_weeks)?)
}

fn format_similarity(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// Writes the score CSV; loading it back reproduces the list exactly.
pub fn persist_scores(scores: &[SongScore], path: &Path) -> Result<(), PipelineError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_io)?;
    writer.write_record(SCORE_HEADER).map_err(csv_io)?;
    for score in scores {
        debug_assert_eq!(
            score.excluded.is_none(),
            score.similarity_c.is_some() && score.similarity_cstar.is_some()
        );
        writer
            .write_record([
                score.song_id.as_str(),
                &score.week.to_string(),
                &format_similarity(score.similarity_c),
                &format_similarity(score.similarity_cstar),
                score.excluded.map(|r| r.as_str()).unwrap_or(""),
            ])
            .map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_io(error: csv::Error) -> PipelineError {
    match error.into_kind() {
        csv::ErrorKind::Io(e) => PipelineError::Io(e),
        other => PipelineError::Io(io::Error::other(format!("{other:?}"))),
    }
}

pub fn load_scores(path: &Path) -> Result<Vec<SongScore>, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::FileNotFound(path.to_path_buf()));
    }
    let score_error = |row: usize, reason: String| PipelineError::ScoreParseError { row, reason };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| score_error(1, e.to_string()))?;
    let mut scores = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let row = index + 1;
        let record = record.map_err(|e| score_error(row, e.to_string()))?;
        if row == 1 {
            let header: Vec<&str> = record.iter().collect();
            if header != SCORE_HEADER {
                return Err(score_error(1, format!("unexpected header {header:?}")));
            }
            continue;
        }
        if record.len() != 5 {
            return Err(score_error(
                row,
                format!("expected 5 fields, got {}", record.len()),
            ));
        }
        let week = NaiveDate::parse_from_str(&record[1], "%Y-%m-%d")
            .map_err(|e| score_error(row, format!("unreadable week: {e}")))?;
        let parse_sim = |text: &str| -> Result<Option<f64>, PipelineError> {
            if text.is_empty() {
                Ok(None)
            } else {
                text.parse()
                    .map(Some)
                    .map_err(|_| score_error(row, format!("unreadable similarity {text:?}")))
            }
        };
        let similarity_c = parse_sim(&record[2])?;
        let similarity_cstar = parse_sim(&record[3])?;
        let excluded = if record[4].is_empty() {
            None
        } else {
            Some(
                ExclusionReason::parse(&record[4])
                    .ok_or_else(|| score_error(row, format!("unknown reason {:?}", &record[4])))?,
            )
        };
        if excluded.is_some() == (similarity_c.is_some() && similarity_cstar.is_some()) {
            return Err(score_error(
                row,
                "row must carry either similarities or an exclusion reason".into(),
            ));
        }
        scores.push(SongScore {
            song_id: record[0].to_string(),
            week,
            similarity_c,
            similarity_cstar,
            excluded,
        });
    }
    Ok(scores)
}

pub fn write_trend_csv(points: &[TrendPoint], path: &Path) -> Result<(), PipelineError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_io)?;
    writer.write_record(TREND_HEADER).map_err(csv_io)?;
    for p in points {
        writer
            .write_record([
                p.week.to_string(),
                p.n_songs.to_string(),
                format!("{:.6}", p.mean),
                format!("{:.6}", p.ci_lower),
                format!("{:.6}", p.ci_upper),
            ])
            .map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_trend_csv(path: &Path) -> Result<Vec<TrendPoint>, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::FileNotFound(path.to_path_buf()));
    }
    let trend_error = |row: usize, reason: String| PipelineError::TrendParseError { row, reason };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| trend_error(1, e.to_string()))?;
    let mut points = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let row = index + 1;
        let record = record.map_err(|e| trend_error(row, e.to_string()))?;
        if row == 1 {
            let header: Vec<&str> = record.iter().collect();
            if header != TREND_HEADER {
                return Err(trend_error(1, format!("unexpected header {header:?}")));
            }
            continue;
        }
        if record.len() != 5 {
            return Err(trend_error(
                row,
                format!("expected 5 fields, got {}", record.len()),
            ));
        }
        let week = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| trend_error(row, format!("unreadable week: {e}")))?;
        let parse_field = |i: usize| -> Result<f64, PipelineError> {
            record[i]
                .parse()
                .map_err(|_| trend_error(row, format!("unreadable number {:?}", &record[i])))
        };
        let n_songs: usize = record[1]
            .parse()
            .map_err(|_| trend_error(row, format!("unreadable count {:?}", &record[1])))?;
        points.push(TrendPoint {
            week,
            n_songs,
            mean: parse_field(2)?,
            ci_lower: parse_field(3)?,
            ci_upper: parse_field(4)?,
        });
    }
    Ok(points)
}

pub fn write_rolling_csv(series: &[(NaiveDate, f64)], path: &Path) -> Result<(), PipelineError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_io)?;
    writer.write_record(ROLLING_HEADER).map_err(csv_io)?;
    for (week, mean) in series {
        writer
            .write_record([week.to_string(), format!("{mean:.6}")])
            .map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}
