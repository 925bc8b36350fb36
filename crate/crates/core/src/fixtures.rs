//! Tiny Standard MIDI File writer for fixtures.
//!
//! Emits single-track format-0 files with an explicit status byte on
//! every event (no running status), which keeps the bytes unambiguous
//! for round-trip tests.

/// Encodes a value as a variable-length quantity (at most 4 bytes).
pub fn encode_vlq(value: u32) -> Vec<u8> {
    assert!(value <= 0x0FFF_FFFF, "VLQ value out of range");
    let mut out = vec![(value & 0x7F) as u8];
    let mut rest = value >> 7;
    while rest > 0 {
        out.push(((rest & 0x7F) as u8) | 0x80);
        rest >>= 7;
    }
    out.reverse();
    out
}

/// One note to place in a fixture file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoteSpec {
    pub tick: u64,
    pub channel: u8,
    pub key: u8,
    pub velocity: u8,
    pub duration: u64,
}

/// Builds a format-0 file with the given division, an optional
/// time-signature meta event at tick 0, and a NoteOn/NoteOff pair per
/// note. The denominator must be a power of two.
pub fn simple_smf(ppq: u16, time_signature: Option<(u8, u8)>, notes: &[NoteSpec]) -> Vec<u8> {
    assert!(ppq > 0);
    let mut timed: Vec<(u64, Vec<u8>)> = Vec::new();

    if let Some((numerator, denominator)) = time_signature {
        assert!(
            denominator.is_power_of_two(),
            "denominator must be a power of two"
        );
        let dd = denominator.trailing_zeros() as u8;
        timed.push((0, vec![0xFF, 0x58, 0x04, numerator, dd, 0x18, 0x08]));
    }
    for note in notes {
        assert!(note.channel < 16 && note.key < 128 && note.velocity < 128);
        timed.push((
            note.tick,
            vec![0x90 | note.channel, note.key, note.velocity],
        ));
        timed.push((
            note.tick + note.duration,
            vec![0x80 | note.channel, note.key, 0x00],
        ));
    }
    timed.sort_by_key(|&(tick, _)| tick);

    let mut body = Vec::new();
    let mut clock: u64 = 0;
    for (tick, event) in timed {
        let delta = u32::try_from(tick - clock).expect("delta time too large");
        body.extend(encode_vlq(delta));
        body.extend(event);
        clock = tick;
    }
    body.extend([0x00, 0xFF, 0x2F, 0x00]);

    let mut out = Vec::with_capacity(22 + body.len());
    out.extend(b"MThd");
    out.extend(6u32.to_be_bytes());
    out.extend(0u16.to_be_bytes()); // format 0
    out.extend(1u16.to_be_bytes()); // one track
    out.extend(ppq.to_be_bytes());
    out.extend(b"MTrk");
    out.extend((body.len() as u32).to_be_bytes());
    out.extend(body);
    out
}

/// A file that plays the given 16th-grid bins once per bar for `bars`
/// bars of 4/4, all on channel 0, key 60.
pub fn pattern_smf(ppq: u16, bins_per_bar: &[usize], bars: usize) -> Vec<u8> {
    let ticks_per_bar = 4 * u64::from(ppq);
    let sixteenth = ticks_per_bar / 16;
    let notes: Vec<NoteSpec> = (0..bars)
        .flat_map(|bar| {
            bins_per_bar.iter().map(move |&bin| {
                assert!(bin < 16);
                NoteSpec {
                    tick: bar as u64 * ticks_per_bar + bin as u64 * sixteenth,
                    channel: 0,
                    key: 60,
                    velocity: 100,
                    duration: sixteenth / 2,
                }
            })
        })
        .collect();
    simple_smf(ppq, Some((4, 4)), &notes)
}
