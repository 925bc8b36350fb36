//! Writes a seeded synthetic demo corpus: labeled validation folders
//! plus a small chart manifest, ready for the `tresillo` CLI.
//!
//! Usage: `cargo run -p tresillo-core --example demo_corpus -- <dir> [seed]`

use std::env;
use std::fs;
use std::path::PathBuf;

use tresillo_core::synth::{synth_corpus, write_corpus};

fn main() {
    let mut args = env::args().skip(1);
    let root = PathBuf::from(args.next().unwrap_or_else(|| "demo-corpus".into()));
    let seed: u64 = args
        .next()
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(42);

    let corpus = synth_corpus(seed, 10);
    let tresillo_dir = root.join("tresillo");
    let non_tresillo_dir = root.join("non-tresillo");
    write_corpus(&corpus, &tresillo_dir, &non_tresillo_dir).expect("write corpus");

    // spread all songs over a year of weekly charts, two slots a week
    let mut manifest = String::from("week,rank,title,artist,midi_path\n");
    let weeks: Vec<String> = (0..10)
        .map(|i| format!("2018-{:02}-{:02}", 1 + i / 4, 7 * (i % 4) + 1))
        .collect();
    for (i, song) in corpus.tresillo.iter().enumerate() {
        manifest.push_str(&format!(
            "{},1,Synthetic Tresillo {i},Demo Artist,tresillo/{}.mid\n",
            weeks[i], song.song_id
        ));
    }
    for (i, song) in corpus.non_tresillo.iter().enumerate() {
        manifest.push_str(&format!(
            "{},2,Synthetic Backbeat {i},Demo Artist,non-tresillo/{}.mid\n",
            weeks[i], song.song_id
        ));
    }
    let manifest_path = root.join("manifest.csv");
    fs::write(&manifest_path, manifest).expect("write manifest");

    println!("wrote {} and 20 MIDI fixtures under {}", manifest_path.display(), root.display());
}
