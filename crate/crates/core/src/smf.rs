//! Standard MIDI File parsing.
//!
//! Reads format 0 and format 1 files into per-track lists of events at
//! absolute tick times. Only the events the rhythm analysis needs are
//! decoded (note on/off, time signature, tempo); every other meta,
//! sysex or channel message is kept as an opaque event with its length
//! consumed so the byte stream stays aligned.
//!
//! Files with SMPTE time division are rejected: bar-relative
//! quantization needs pulses-per-quarter-note semantics. Format 2 files
//! are rejected as well.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SmfError {
    #[error("BadHeader: {0}")]
    BadHeader(String),
    #[error("UnsupportedDivision: SMPTE time division is not supported")]
    UnsupportedDivision,
    #[error("UnsupportedFormat: format {0} is not supported")]
    UnsupportedFormat(u16),
    #[error("TruncatedTrack: track {track}: {detail}")]
    TruncatedTrack { track: usize, detail: String },
    #[error("MalformedVlq: variable-length quantity overruns 4 bytes or the buffer")]
    MalformedVlq,
}

/// One decoded track event at an absolute tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimedEvent {
    pub tick: u64,
    pub kind: EventKind,
}

/// The event payloads the analysis distinguishes. Note-on with velocity
/// zero is normalized to [`EventKind::NoteOff`] at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    NoteOn {
        channel: u8,
        key: u8,
        velocity: u8,
    },
    NoteOff {
        channel: u8,
        key: u8,
    },
    TimeSignature {
        numerator: u8,
        denominator: u8,
    },
    Tempo {
        micros_per_quarter: u32,
    },
    EndOfTrack,
    /// Any other meta or sysex event, retained so event counts and
    /// running-status bookkeeping stay faithful to the file.
    OtherMeta,
    /// Any other channel message (aftertouch, controller, ...).
    OtherChannel {
        channel: u8,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Track {
    pub events: Vec<TimedEvent>,
}

/// A parsed Standard MIDI File.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmfFile {
    /// 0 or 1.
    pub format: u16,
    /// Ticks per quarter note; always positive.
    pub ppq: u16,
    pub tracks: Vec<Track>,
}

impl SmfFile {
    /// Iterates `(track_index, event)` over all tracks in file order.
    pub fn events(&self) -> impl Iterator<Item = (usize, &TimedEvent)> {
        self.tracks
            .iter()
            .enumerate()
            .flat_map(|(i, t)| t.events.iter().map(move |e| (i, e)))
    }

    pub fn note_on_count(&self) -> usize {
        self.events()
            .filter(|(_, e)| matches!(e.kind, EventKind::NoteOn { .. }))
            .count()
    }
}

/// Decodes one variable-length quantity starting at `offset`.
///
/// Returns the value and the number of bytes consumed (at most 4, seven
/// payload bits per byte, most significant first).
pub fn parse_vlq(bytes: &[u8], offset: usize) -> Result<(u32, usize), SmfError> {
    let mut value: u32 = 0;
    for i in 0..4 {
        let byte = *bytes.get(offset + i).ok_or(SmfError::MalformedVlq)?;
        value = (value << 7) | u32::from(byte & 0x7F);
        if byte & 0x80 == 0 {
            return Ok((value, i + 1));
        }
    }
    Err(SmfError::MalformedVlq)
}

fn read_u16(bytes: &[u8], offset: usize) -> u16 {
    u16::from_be_bytes([bytes[offset], bytes[offset + 1]])
}

fn read_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ])
}

/// Parses a complete Standard MIDI File from raw bytes.
///
/// Delta times are accumulated into absolute ticks, running status is
/// honored, and note-on events with velocity zero come out as
/// [`EventKind::NoteOff`]. Chunks other than `MTrk` between tracks are
/// skipped by their declared length.
pub fn parse_smf(bytes: &[u8]) -> Result<SmfFile, SmfError> {
    if bytes.len() < 14 {
        return Err(SmfError::BadHeader(
            "file shorter than an MThd header".into(),
        ));
    }
    if &bytes[0..4] != b"MThd" {
        return Err(SmfError::BadHeader("expected MThd magic".into()));
    }
    let header_len = read_u32(bytes, 4);
    if header_len != 6 {
        return Err(SmfError::BadHeader(format!(
            "MThd length is {header_len}, expected 6"
        )));
    }
    let format = read_u16(bytes, 8);
    if format > 1 {
        return Err(SmfError::UnsupportedFormat(format));
    }
    let declared_tracks = read_u16(bytes, 10) as usize;
    let division = read_u16(bytes, 12);
    if division & 0x8000 != 0 {
        return Err(SmfError::UnsupportedDivision);
    }
    if division == 0 {
        return Err(SmfError::BadHeader(
            "division of zero ticks per quarter".into(),
        ));
    }

    let mut tracks = Vec::with_capacity(declared_tracks);
    let mut pos = 14usize;
    while tracks.len() < declared_tracks {
        if pos + 8 > bytes.len() {
            return Err(SmfError::TruncatedTrack {
                track: tracks.len(),
                detail: "missing track chunk".into(),
            });
        }
        let magic = &bytes[pos..pos + 4];
        let chunk_len = read_u32(bytes, pos + 4) as usize;
        pos += 8;
        if pos + chunk_len > bytes.len() {
            return Err(SmfError::TruncatedTrack {
                track: tracks.len(),
                detail: "chunk length overruns the file".into(),
            });
        }
        let body = &bytes[pos..pos + chunk_len];
        pos += chunk_len;
        if magic == b"MTrk" {
            tracks.push(parse_track(body, tracks.len())?);
        }
        // any other chunk type is skipped by its declared length
    }

    Ok(SmfFile {
        format,
        ppq: division,
        tracks,
    })
}

fn truncated(track: usize, detail: &str) -> SmfError {
    SmfError::TruncatedTrack {
        track,
        detail: detail.into(),
    }
}

fn parse_track(data: &[u8], track_index: usize) -> Result<Track, SmfError> {
    let mut events = Vec::new();
    let mut tick: u64 = 0;
    let mut pos = 0usize;
    let mut running_status: Option<u8> = None;

    loop {
        if pos >= data.len() {
            return Err(truncated(track_index, "chunk ended without End-of-Track"));
        }
        let (delta, n) = parse_vlq(data, pos)?;
        pos += n;
        tick += u64::from(delta);

        let first = *data
            .get(pos)
            .ok_or_else(|| truncated(track_index, "event cut off after delta time"))?;

        if first == 0xFF {
            // meta event: type, length, payload; cancels running status
            running_status = None;
            pos += 1;
            let meta_type = *data
                .get(pos)
                .ok_or_else(|| truncated(track_index, "meta event missing type byte"))?;
            pos += 1;
            let (len, n) = parse_vlq(data, pos)?;
            pos += n;
            let end = pos + len as usize;
            if end > data.len() {
                return Err(truncated(track_index, "meta event overruns the chunk"));
            }
            let payload = &data[pos..end];
            pos = end;
            let kind = match meta_type {
                0x2F => EventKind::EndOfTrack,
                0x58 if payload.len() >= 2 && payload[1] <= 7 => EventKind::TimeSignature {
                    numerator: payload[0],
                    denominator: 1u8 << payload[1],
                },
                0x51 if payload.len() == 3 => EventKind::Tempo {
                    micros_per_quarter: u32::from(payload[0]) << 16
                        | u32::from(payload[1]) << 8
                        | u32::from(payload[2]),
                },
                _ => EventKind::OtherMeta,
            };
            events.push(TimedEvent { tick, kind });
            if kind == EventKind::EndOfTrack {
                // trailing bytes inside the chunk, if any, are ignored
                return Ok(Track { events });
            }
        } else if first == 0xF0 || first == 0xF7 {
            // sysex: length-prefixed, cancels running status
            running_status = None;
            pos += 1;
            let (len, n) = parse_vlq(data, pos)?;
            pos += n;
            let end = pos + len as usize;
            if end > data.len() {
                return Err(truncated(track_index, "sysex event overruns the chunk"));
            }
            pos = end;
            events.push(TimedEvent {
                tick,
                kind: EventKind::OtherMeta,
            });
        } else {
            let status = if first >= 0x80 {
                pos += 1;
                first
            } else {
                running_status
                    .ok_or_else(|| truncated(track_index, "data byte with no running status"))?
            };
            if status >= 0xF0 {
                return Err(truncated(track_index, "system message inside a track"));
            }
            running_status = Some(status);
            let channel = status & 0x0F;
            let data_len = match status >> 4 {
                0xC | 0xD => 1,
                _ => 2,
            };
            if pos + data_len > data.len() {
                return Err(truncated(track_index, "channel event cut off"));
            }
            let d1 = data[pos];
            let d2 = if data_len == 2 { data[pos + 1] } else { 0 };
            pos += data_len;
            if d1 & 0x80 != 0 || d2 & 0x80 != 0 {
                return Err(truncated(track_index, "data byte with high bit set"));
            }
            let kind = match status >> 4 {
                0x9 if d2 == 0 => EventKind::NoteOff { channel, key: d1 },
                0x9 => EventKind::NoteOn {
                    channel,
                    key: d1,
                    velocity: d2,
                },
                0x8 => EventKind::NoteOff { channel, key: d1 },
                _ => EventKind::OtherChannel { channel },
            };
            events.push(TimedEvent { tick, kind });
        }
    }
}

/// All time-signature events across all tracks, merged and sorted by
/// tick. Empty if the file declares none.
pub fn extract_time_signatures(file: &SmfFile) -> Vec<(u64, u8, u8)> {
    let mut sigs: Vec<(u64, u8, u8)> = file
        .events()
        .filter_map(|(_, e)| match e.kind {
            EventKind::TimeSignature {
                numerator,
                denominator,
            } => Some((e.tick, numerator, denominator)),
            _ => None,
        })
        .collect();
    sigs.sort_by_key(|&(tick, _, _)| tick);
    sigs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{encode_vlq, simple_smf, NoteSpec};

    /// Minimal valid file assembled byte by byte: MThd (format 0, one
    /// track, division 480) plus an MTrk holding only End-of-Track.
    fn minimal_file() -> Vec<u8> {
        vec![
            0x4D, 0x54, 0x68, 0x64, // MThd
            0x00, 0x00, 0x00, 0x06, // header length 6
            0x00, 0x00, // format 0
            0x00, 0x01, // one track
            0x01, 0xE0, // division 480
            0x4D, 0x54, 0x72, 0x6B, // MTrk
            0x00, 0x00, 0x00, 0x04, // track length 4
            0x00, 0xFF, 0x2F, 0x00, // delta 0, End-of-Track
        ]
    }

    #[test]
    fn vlq_zero() {
        assert_eq!(parse_vlq(&[0x00], 0).unwrap(), (0, 1));
    }

    #[test]
    fn vlq_two_bytes() {
        // 1 * 128 + 72 = 200
        assert_eq!(parse_vlq(&[0x81, 0x48], 0).unwrap(), (200, 2));
    }

    #[test]
    fn vlq_max_four_bytes() {
        assert_eq!(
            parse_vlq(&[0xFF, 0xFF, 0xFF, 0x7F], 0).unwrap(),
            (268_435_455, 4)
        );
    }

    #[test]
    fn vlq_overlong_is_malformed() {
        assert_eq!(
            parse_vlq(&[0xFF, 0xFF, 0xFF, 0xFF, 0x7F], 0),
            Err(SmfError::MalformedVlq)
        );
    }

    #[test]
    fn vlq_truncated_is_malformed() {
        assert_eq!(parse_vlq(&[0x81], 0), Err(SmfError::MalformedVlq));
    }

    #[test]
    fn vlq_roundtrip_boundaries() {
        for value in [
            0u32,
            127,
            128,
            16_383,
            16_384,
            2_097_151,
            2_097_152,
            268_435_455,
        ] {
            let bytes = encode_vlq(value);
            assert_eq!(parse_vlq(&bytes, 0).unwrap(), (value, bytes.len()));
        }
    }

    #[test]
    fn parses_minimal_file() {
        let file = parse_smf(&minimal_file()).unwrap();
        assert_eq!(file.format, 0);
        assert_eq!(file.ppq, 480);
        assert_eq!(file.tracks.len(), 1);
        assert_eq!(file.tracks[0].events.len(), 1);
        assert_eq!(file.tracks[0].events[0].kind, EventKind::EndOfTrack);
    }

    #[test]
    fn parses_hand_built_note_pair() {
        // One NoteOn(ch 0, key 60, vel 100) at delta 0, the matching
        // NoteOff at delta 480 (VLQ 0x83 0x60), then End-of-Track.
        let bytes = vec![
            0x4D, 0x54, 0x68, 0x64, 0x00, 0x00, 0x00, 0x06, //
            0x00, 0x00, 0x00, 0x01, 0x01, 0xE0, //
            0x4D, 0x54, 0x72, 0x6B, 0x00, 0x00, 0x00, 0x0D, //
            0x00, 0x90, 0x3C, 0x64, // delta 0, NoteOn
            0x83, 0x60, 0x80, 0x3C, 0x00, // delta 480, NoteOff
            0x00, 0xFF, 0x2F, 0x00, // End-of-Track
        ];
        let file = parse_smf(&bytes).unwrap();
        let events = &file.tracks[0].events;
        assert_eq!(events.len(), 3);
        assert_eq!(
            events[0],
            TimedEvent {
                tick: 0,
                kind: EventKind::NoteOn {
                    channel: 0,
                    key: 60,
                    velocity: 100
                }
            }
        );
        assert_eq!(
            events[1],
            TimedEvent {
                tick: 480,
                kind: EventKind::NoteOff {
                    channel: 0,
                    key: 60
                }
            }
        );
    }

    #[test]
    fn wrong_magic_is_bad_header() {
        let mut bytes = minimal_file();
        bytes[0..4].copy_from_slice(b"RIFF");
        assert!(matches!(parse_smf(&bytes), Err(SmfError::BadHeader(_))));
    }

    #[test]
    fn wrong_header_length_is_bad_header() {
        let mut bytes = minimal_file();
        bytes[7] = 7;
        assert!(matches!(parse_smf(&bytes), Err(SmfError::BadHeader(_))));
    }

    #[test]
    fn smpte_division_is_rejected() {
        let mut bytes = minimal_file();
        bytes[12] = 0xE8; // -24 frames/sec in the SMPTE encoding
        bytes[13] = 0x50;
        assert_eq!(parse_smf(&bytes), Err(SmfError::UnsupportedDivision));
    }

    #[test]
    fn zero_division_is_rejected() {
        let mut bytes = minimal_file();
        bytes[12] = 0x00;
        bytes[13] = 0x00;
        assert!(matches!(parse_smf(&bytes), Err(SmfError::BadHeader(_))));
    }

    #[test]
    fn format_two_is_rejected() {
        let mut bytes = minimal_file();
        bytes[9] = 2;
        assert_eq!(parse_smf(&bytes), Err(SmfError::UnsupportedFormat(2)));
    }

    #[test]
    fn missing_track_chunk_is_truncated() {
        let mut bytes = minimal_file();
        bytes[11] = 2; // declares two tracks, provides one
        assert!(matches!(
            parse_smf(&bytes),
            Err(SmfError::TruncatedTrack { track: 1, .. })
        ));
    }

    #[test]
    fn track_without_end_of_track_is_truncated() {
        let bytes = vec![
            0x4D, 0x54, 0x68, 0x64, 0x00, 0x00, 0x00, 0x06, //
            0x00, 0x00, 0x00, 0x01, 0x01, 0xE0, //
            0x4D, 0x54, 0x72, 0x6B, 0x00, 0x00, 0x00, 0x04, //
            0x00, 0x90, 0x3C, 0x64, // NoteOn but no EoT
        ];
        assert!(matches!(
            parse_smf(&bytes),
            Err(SmfError::TruncatedTrack { .. })
        ));
    }

    #[test]
    fn note_on_velocity_zero_becomes_note_off() {
        let bytes = vec![
            0x4D, 0x54, 0x68, 0x64, 0x00, 0x00, 0x00, 0x06, //
            0x00, 0x00, 0x00, 0x01, 0x01, 0xE0, //
            0x4D, 0x54, 0x72, 0x6B, 0x00, 0x00, 0x00, 0x08, //
            0x00, 0x90, 0x3C, 0x00, // NoteOn velocity 0
            0x00, 0xFF, 0x2F, 0x00,
        ];
        let file = parse_smf(&bytes).unwrap();
        assert_eq!(
            file.tracks[0].events[0].kind,
            EventKind::NoteOff {
                channel: 0,
                key: 60
            }
        );
    }

    #[test]
    fn running_status_reuses_last_status_byte() {
        // NoteOn key 60, then a second NoteOn (key 64) without a status
        // byte, relying on running status.
        let bytes = vec![
            0x4D, 0x54, 0x68, 0x64, 0x00, 0x00, 0x00, 0x06, //
            0x00, 0x00, 0x00, 0x01, 0x01, 0xE0, //
            0x4D, 0x54, 0x72, 0x6B, 0x00, 0x00, 0x00, 0x0B, //
            0x00, 0x90, 0x3C, 0x64, // NoteOn 60
            0x60, 0x40, 0x64, // delta 96, running status NoteOn 64
            0x00, 0xFF, 0x2F, 0x00,
        ];
        let file = parse_smf(&bytes).unwrap();
        let events = &file.tracks[0].events;
        assert_eq!(
            events[1],
            TimedEvent {
                tick: 96,
                kind: EventKind::NoteOn {
                    channel: 0,
                    key: 64,
                    velocity: 100
                }
            }
        );
    }

    #[test]
    fn data_byte_without_status_is_an_error() {
        let bytes = vec![
            0x4D, 0x54, 0x68, 0x64, 0x00, 0x00, 0x00, 0x06, //
            0x00, 0x00, 0x00, 0x01, 0x01, 0xE0, //
            0x4D, 0x54, 0x72, 0x6B, 0x00, 0x00, 0x00, 0x07, //
            0x00, 0x3C, 0x64, // data bytes, no status ever seen
            0x00, 0xFF, 0x2F, 0x00,
        ];
        assert!(matches!(
            parse_smf(&bytes),
            Err(SmfError::TruncatedTrack { .. })
        ));
    }

    #[test]
    fn unknown_meta_and_sysex_keep_alignment() {
        // text meta (0x01), a sysex, then a NoteOn; all three must
        // decode and the note must land at the right tick.
        let bytes = vec![
            0x4D, 0x54, 0x68, 0x64, 0x00, 0x00, 0x00, 0x06, //
            0x00, 0x00, 0x00, 0x01, 0x01, 0xE0, //
            0x4D, 0x54, 0x72, 0x6B, 0x00, 0x00, 0x00, 0x14, //
            0x00, 0xFF, 0x01, 0x03, 0x61, 0x62, 0x63, // text "abc"
            0x00, 0xF0, 0x02, 0x7E, 0xF7, // sysex, 2 bytes
            0x10, 0x90, 0x3C, 0x64, // delta 16, NoteOn
            0x00, 0xFF, 0x2F, 0x00,
        ];
        let file = parse_smf(&bytes).unwrap();
        let events = &file.tracks[0].events;
        assert_eq!(events.len(), 4);
        assert_eq!(events[0].kind, EventKind::OtherMeta);
        assert_eq!(events[1].kind, EventKind::OtherMeta);
        assert_eq!(
            events[2],
            TimedEvent {
                tick: 16,
                kind: EventKind::NoteOn {
                    channel: 0,
                    key: 60,
                    velocity: 100
                }
            }
        );
    }

    #[test]
    fn no_time_signature_yields_empty_list() {
        let file = parse_smf(&minimal_file()).unwrap();
        assert_eq!(extract_time_signatures(&file), vec![]);
    }

    #[test]
    fn single_time_signature_is_extracted() {
        let bytes = simple_smf(480, Some((4, 4)), &[]);
        let file = parse_smf(&bytes).unwrap();
        assert_eq!(extract_time_signatures(&file), vec![(0, 4, 4)]);
    }

    #[test]
    fn multiple_time_signatures_sorted_by_tick() {
        // 4/4 at tick 0 and 3/4 at tick 1920, hand-assembled.
        let bytes = vec![
            0x4D, 0x54, 0x68, 0x64, 0x00, 0x00, 0x00, 0x06, //
            0x00, 0x00, 0x00, 0x01, 0x01, 0xE0, //
            0x4D, 0x54, 0x72, 0x6B, 0x00, 0x00, 0x00, 0x15, //
            0x00, 0xFF, 0x58, 0x04, 0x04, 0x02, 0x18, 0x08, // 4/4 at 0
            0x8F, 0x00, 0xFF, 0x58, 0x04, 0x03, 0x02, 0x18, 0x08, // 3/4 at 1920
            0x00, 0xFF, 0x2F, 0x00,
        ];
        let file = parse_smf(&bytes).unwrap();
        assert_eq!(
            extract_time_signatures(&file),
            vec![(0, 4, 4), (1920, 3, 4)]
        );
    }

    #[test]
    fn ticks_are_non_decreasing() {
        let notes: Vec<NoteSpec> = (0..32)
            .map(|i| NoteSpec {
                tick: (i as u64) * 113,
                channel: (i % 4) as u8,
                key: 40 + (i % 30) as u8,
                velocity: 80,
                duration: 50,
            })
            .collect();
        let file = parse_smf(&simple_smf(960, Some((4, 4)), &notes)).unwrap();
        for track in &file.tracks {
            for pair in track.events.windows(2) {
                assert!(pair[0].tick <= pair[1].tick);
            }
        }
    }

    #[test]
    fn note_events_roundtrip_through_the_writer() {
        let notes = vec![
            NoteSpec {
                tick: 0,
                channel: 0,
                key: 60,
                velocity: 100,
                duration: 120,
            },
            NoteSpec {
                tick: 360,
                channel: 9,
                key: 38,
                velocity: 90,
                duration: 60,
            },
            NoteSpec {
                tick: 720,
                channel: 2,
                key: 64,
                velocity: 64,
                duration: 240,
            },
        ];
        let first = parse_smf(&simple_smf(480, Some((4, 4)), &notes)).unwrap();

        // rebuild note specs from the parsed events and parse again
        let mut ons = Vec::new();
        let mut offs = Vec::new();
        for (_, e) in first.events() {
            match e.kind {
                EventKind::NoteOn {
                    channel,
                    key,
                    velocity,
                } => ons.push((e.tick, channel, key, velocity)),
                EventKind::NoteOff { channel, key } => offs.push((e.tick, channel, key)),
                _ => {}
            }
        }
        let rebuilt: Vec<NoteSpec> = ons
            .iter()
            .map(|&(tick, channel, key, velocity)| {
                let (off_tick, _, _) = *offs
                    .iter()
                    .find(|&&(t, c, k)| t >= tick && c == channel && k == key)
                    .unwrap();
                NoteSpec {
                    tick,
                    channel,
                    key,
                    velocity,
                    duration: off_tick - tick,
                }
            })
            .collect();
        let second = parse_smf(&simple_smf(480, Some((4, 4)), &rebuilt)).unwrap();
        assert_eq!(first, second);
    }
}
