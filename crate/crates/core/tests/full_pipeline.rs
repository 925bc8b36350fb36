//! Whole-library flows: bytes in, trend points out.

use std::fs;

use tresillo_core::fixtures::pattern_smf;
use tresillo_core::model::{
    fit_theta, resolve_reference, s_star, FitConfig, ModelSpec, ReferenceKind,
};
use tresillo_core::onset::{build_onset_table, onset_histogram, quantize_onsets};
use tresillo_core::pipeline::{
    load_manifest, load_scores, persist_scores, rolling_trend, score_corpus, weekly_trend, Measure,
};
use tresillo_core::rhythm::{corpus_mean, from_histogram, tresillo_template, TRESILLO_BINS};
use tresillo_core::similarity::{cosine, Theta};
use tresillo_core::smf::parse_smf;
use tresillo_core::stats::BootstrapConfig;
use tresillo_core::synth::{synth_corpus, validation_set, write_corpus};

#[test]
fn tresillo_fixture_reaches_similarity_one() {
    let bytes = pattern_smf(480, &TRESILLO_BINS, 4);
    let file = parse_smf(&bytes).unwrap();
    let table = build_onset_table(&file, "fixture");
    let vector = from_histogram(&onset_histogram(&quantize_onsets(&table, 16).unwrap())).unwrap();
    let sim = cosine(&vector, &tresillo_template()).unwrap().value();
    assert!((sim - 1.0).abs() < 1e-9);
}

#[test]
fn fitting_on_parsed_synthetic_files_improves_s_star() {
    let corpus = synth_corpus(7, 5);
    let vset = validation_set(&corpus).unwrap();
    let config = FitConfig {
        max_iterations: 500,
        restarts: 1,
        ..Default::default()
    };

    let plain = s_star(&ModelSpec::plain(ReferenceKind::Template), &vset).unwrap();
    assert!(plain.s_star > 1.0);

    let reference = resolve_reference(ReferenceKind::Template, &vset).unwrap();
    let fitted = fit_theta(&reference, &vset, &config).unwrap();
    let parameterized = s_star(
        &ModelSpec::with_theta(ReferenceKind::Template, fitted.theta),
        &vset,
    )
    .unwrap();
    assert!(parameterized.s_star >= plain.s_star);

    let centroid_model = s_star(&ModelSpec::plain(ReferenceKind::Centroid), &vset).unwrap();
    assert!(centroid_model.s_star > 1.0);

    let vectors: Vec<_> = vset.tresillo().iter().map(|&(_, v)| v).collect();
    let mean = corpus_mean(&vectors).unwrap();
    let mean_norm: f64 = mean.components().iter().map(|x| x * x).sum();
    assert!((mean_norm - 1.0).abs() < 1e-12);
}

#[test]
fn manifest_to_trend_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(3, 2);
    write_corpus(&corpus, dir.path(), dir.path()).unwrap();

    let manifest_path = dir.path().join("manifest.csv");
    fs::write(
        &manifest_path,
        "week,rank,title,artist,midi_path\n\
         2018-03-03,1,First,A,synth-tresillo-00.mid\n\
         2018-03-03,2,Second,B,synth-backbeat-00.mid\n\
         2018-03-10,1,First,A,synth-tresillo-00.mid\n\
         2018-03-10,2,Third,C,synth-tresillo-01.mid\n\
         2018-03-17,1,Lost,D,not-there.mid\n",
    )
    .unwrap();

    let entries = load_manifest(&manifest_path).unwrap();
    let scores = score_corpus(&entries, &Theta::ones(), &tresillo_template());
    assert_eq!(scores.len(), 5);
    assert_eq!(scores.iter().filter(|s| s.excluded.is_some()).count(), 1);
    // the deduplicated song keeps one value across weeks
    assert_eq!(scores[0].similarity_c, scores[2].similarity_c);

    let score_path = dir.path().join("scores.csv");
    persist_scores(&scores, &score_path).unwrap();
    assert_eq!(load_scores(&score_path).unwrap(), scores);

    let config = BootstrapConfig {
        seed: 9,
        ..Default::default()
    };
    let weekly = weekly_trend(&scores, Measure::CStar, &config).unwrap();
    assert_eq!(weekly.len(), 2); // the all-excluded week is omitted
    assert!(weekly[0].ci_lower <= weekly[0].ci_upper);

    let rolling = rolling_trend(&weekly, 52).unwrap();
    assert_eq!(rolling.len(), weekly.len());
}
