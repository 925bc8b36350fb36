//! Onset tables and bar-grid quantization.
//!
//! An onset table is the flat list of every note-on in a song, across
//! all tracks and channels (percussion included, with equal weight),
//! tagged with the song's meter. Quantization folds the onsets of a
//! 4/4 song onto a per-bar grid: 16 bins for the similarity analysis,
//! 128 bins for fine-grained diagnostics.

use std::io;

use thiserror::Error;

use crate::smf::{extract_time_signatures, EventKind, SmfFile};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OnsetError {
    #[error("NotFourFour: meter is {0}/{1}")]
    NotFourFour(u8, u8),
}

/// A single note onset and where it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Onset {
    pub tick: u64,
    pub track_index: usize,
    pub channel: u8,
}

/// Every note-on of one song, plus the meter used for bar arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnsetTable {
    pub song_id: String,
    pub ppq: u16,
    pub onsets: Vec<Onset>,
    /// First declared time signature, or (4, 4) when the file has none.
    pub meter: (u8, u8),
}

impl OnsetTable {
    /// Debug dump as CSV with columns `tick,track_index,channel`.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "tick,track_index,channel")?;
        for onset in &self.onsets {
            writeln!(w, "{},{},{}", onset.tick, onset.track_index, onset.channel)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeterClass {
    FourFour,
    Other(u8, u8),
}

/// Onsets mapped to grid bins; same length and order as the input
/// onsets (quantization never drops or invents onsets).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedOnsets {
    pub bins: Vec<usize>,
    pub resolution: usize,
}

/// Collects all note-on events of a parsed file into an onset table.
///
/// The meter is the file's first time-signature event in tick order,
/// defaulting to 4/4 when none is present. Later meter changes are not
/// honored; the filter is per song, not per bar.
pub fn build_onset_table(file: &SmfFile, song_id: &str) -> OnsetTable {
    let onsets = file
        .events()
        .filter_map(|(track_index, e)| match e.kind {
            EventKind::NoteOn { channel, .. } => Some(Onset {
                tick: e.tick,
                track_index,
                channel,
            }),
            _ => None,
        })
        .collect();
    let meter = extract_time_signatures(file)
        .first()
        .map(|&(_, n, d)| (n, d))
        .unwrap_or((4, 4));
    OnsetTable {
        song_id: song_id.to_string(),
        ppq: file.ppq,
        onsets,
        meter,
    }
}

pub fn classify_meter(table: &OnsetTable) -> MeterClass {
    match table.meter {
        (4, 4) => MeterClass::FourFour,
        (n, d) => MeterClass::Other(n, d),
    }
}

/// Folds each onset of a 4/4 song into a bar-relative grid bin.
///
/// With `ticks_per_bar = 4 * ppq`, the bin of an onset is
/// `round((tick mod ticks_per_bar) / (ticks_per_bar / resolution))`
/// with round-half-up; an onset that snaps to the bar boundary wraps to
/// bin 0.
pub fn quantize_onsets(
    table: &OnsetTable,
    resolution: usize,
) -> Result<QuantizedOnsets, OnsetError> {
    assert!(resolution >= 1, "resolution must be positive");
    if table.meter != (4, 4) {
        return Err(OnsetError::NotFourFour(table.meter.0, table.meter.1));
    }
    let ticks_per_bar = 4 * u64::from(table.ppq);
    let step = ticks_per_bar as f64 / resolution as f64;
    let bins = table
        .onsets
        .iter()
        .map(|onset| {
            let position = (onset.tick % ticks_per_bar) as f64;
            ((position / step + 0.5).floor() as usize) % resolution
        })
        .collect();
    Ok(QuantizedOnsets { bins, resolution })
}

/// Counts onsets per bin; the counts sum to the number of onsets.
pub fn onset_histogram(q: &QuantizedOnsets) -> Vec<u64> {
    let mut counts = vec![0u64; q.resolution];
    for &bin in &q.bins {
        counts[bin] += 1;
    }
    counts
}
