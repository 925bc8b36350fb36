//! Seeded synthetic validation corpora.
//!
//! Generates labeled MIDI fixtures for exercising the fit and
//! evaluation machinery without real chart data. A "tresillo" song
//! repeats every template onset [`TEMPLATE_REPEATS`] times and adds
//! [`EXTRA_ONSETS`] onsets at uniformly random grid positions; a
//! "non-tresillo" song carries the four-on-the-floor backbeat once
//! plus the same number of random extras, which leaves it noisy and
//! clearly off-template. Song `i` of each class draws from pcg32
//! streams `2i` (tresillo) and `2i + 1` (backbeat), so a corpus is a
//! pure function of its seed.

use std::fs;
use std::io;
use std::path::Path;

use crate::fixtures::{simple_smf, NoteSpec};
use crate::model::{ModelError, ValidationSet};
use crate::onset::{build_onset_table, onset_histogram, quantize_onsets};
use crate::prng::Pcg32;
use crate::rhythm::{from_histogram, RhythmVector, FOUR_ON_FLOOR_BINS, TRESILLO_BINS};
use crate::smf::parse_smf;

pub const PPQ: u16 = 480;
pub const TEMPLATE_REPEATS: usize = 8;
pub const BACKBEAT_REPEATS: usize = 1;
pub const EXTRA_ONSETS: usize = 12;

#[derive(Debug, Clone)]
pub struct SynthSong {
    pub song_id: String,
    pub smf_bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub tresillo: Vec<SynthSong>,
    pub non_tresillo: Vec<SynthSong>,
}

fn synth_song(song_id: String, backbone: &[usize], repeats: usize, rng: &mut Pcg32) -> SynthSong {
    let ticks_per_bar = 4 * u64::from(PPQ);
    let sixteenth = ticks_per_bar / 16;
    let mut notes = Vec::with_capacity(backbone.len() * repeats + EXTRA_ONSETS);
    for bar in 0..repeats {
        for &bin in backbone {
            notes.push(NoteSpec {
                tick: bar as u64 * ticks_per_bar + bin as u64 * sixteenth,
                channel: 0,
                key: 60,
                velocity: 100,
                duration: sixteenth / 2,
            });
        }
    }
    for extra in 0..EXTRA_ONSETS {
        let bin = u64::from(rng.next_below(16));
        notes.push(NoteSpec {
            tick: (repeats + extra) as u64 * ticks_per_bar + bin * sixteenth,
            channel: 9,
            key: 38,
            velocity: 100,
            duration: sixteenth / 2,
        });
    }
    SynthSong {
        song_id,
        smf_bytes: simple_smf(PPQ, Some((4, 4)), &notes),
    }
}

/// Generates `songs_per_class` songs of each label from the seed.
pub fn synth_corpus(seed: u64, songs_per_class: usize) -> SynthCorpus {
    let tresillo = (0..songs_per_class)
        .map(|i| {
            let mut rng = Pcg32::new(seed, 2 * i as u64);
            synth_song(
                format!("synth-tresillo-{i:02}"),
                &TRESILLO_BINS,
                TEMPLATE_REPEATS,
                &mut rng,
            )
        })
        .collect();
    let non_tresillo = (0..songs_per_class)
        .map(|i| {
            let mut rng = Pcg32::new(seed, 2 * i as u64 + 1);
            synth_song(
                format!("synth-backbeat-{i:02}"),
                &FOUR_ON_FLOOR_BINS,
                BACKBEAT_REPEATS,
                &mut rng,
            )
        })
        .collect();
    SynthCorpus {
        tresillo,
        non_tresillo,
    }
}

/// Runs a synthetic song through the real parser and quantizer.
pub fn rhythm_vector_of(song: &SynthSong) -> RhythmVector {
    let file = parse_smf(&song.smf_bytes).expect("synthetic fixture parses");
    let table = build_onset_table(&file, &song.song_id);
    let quantized = quantize_onsets(&table, 16).expect("synthetic fixtures are 4/4");
    from_histogram(&onset_histogram(&quantized)).expect("synthetic fixtures have onsets")
}

/// The corpus as a labeled validation set, produced through the full
/// parse/quantize/normalize path.
pub fn validation_set(corpus: &SynthCorpus) -> Result<ValidationSet, ModelError> {
    let collect = |songs: &[SynthSong]| {
        songs
            .iter()
            .map(|s| (s.song_id.clone(), rhythm_vector_of(s)))
            .collect()
    };
    ValidationSet::new(collect(&corpus.tresillo), collect(&corpus.non_tresillo))
}

/// Writes `{song_id}.mid` files into the two directories, creating them
/// if needed.
pub fn write_corpus(
    corpus: &SynthCorpus,
    tresillo_dir: &Path,
    non_tresillo_dir: &Path,
) -> io::Result<()> {
    fs::create_dir_all(tresillo_dir)?;
    fs::create_dir_all(non_tresillo_dir)?;
    for song in &corpus.tresillo {
        fs::write(
            tresillo_dir.join(format!("{}.mid", song.song_id)),
            &song.smf_bytes,
        )?;
    }
    for song in &corpus.non_tresillo {
        fs::write(
            non_tresillo_dir.join(format!("{}.mid", song.song_id)),
            &song.smf_bytes,
        )?;
    }
    Ok(())
}
