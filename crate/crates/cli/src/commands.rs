//! Subcommand implementations.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use tresillo_core::model::{
    fit_theta, leave_one_out_s_star, objective, resolve_reference, s_star, FitConfig, ModelError,
    ModelKind, ModelSpec, ReferenceKind, ValidationSet,
};
use tresillo_core::onset::{
    build_onset_table, classify_meter, onset_histogram, quantize_onsets, MeterClass, OnsetTable,
};
use tresillo_core::pipeline::{
    self, load_manifest, load_trend_csv, persist_scores, rolling_trend, score_corpus, weekly_trend,
    ExclusionReason, Measure, PipelineError, SongScore,
};
use tresillo_core::prng::derive_seed;
use tresillo_core::rhythm::{self, RhythmVector};
use tresillo_core::similarity::Theta;
use tresillo_core::smf::{extract_time_signatures, parse_smf, SmfFile};
use tresillo_core::stats::{bootstrap_mean_ci, quantile_sorted, welch_t_test, BootstrapConfig};

use crate::svg::{render_trend_svg, PlotSpec};
use crate::{
    CliError, CliResult, EXIT_EMPTY_CORPUS, EXIT_FIT, EXIT_INSUFFICIENT, EXIT_METER, EXIT_PARSE,
};

impl From<PipelineError> for CliError {
    fn from(error: PipelineError) -> Self {
        let code = match error {
            PipelineError::NoScoredSongs => EXIT_EMPTY_CORPUS,
            _ => EXIT_PARSE,
        };
        CliError::new(code, error.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(error: ModelError) -> Self {
        let code = match error {
            ModelError::FitFailed => EXIT_FIT,
            ModelError::InsufficientData(_)
            | ModelError::InvalidValidationSet(_)
            | ModelError::ZeroDenominator => EXIT_INSUFFICIENT,
            ModelError::Rhythm(_) => EXIT_METER,
            ModelError::InvalidConfig(_) | ModelError::Similarity(_) => EXIT_PARSE,
        };
        CliError::new(code, error.to_string())
    }
}

fn read_midi(path: &Path) -> Result<SmfFile, CliError> {
    let bytes = fs::read(path).map_err(|e| {
        let name = if e.kind() == ErrorKind::NotFound {
            "FileNotFound"
        } else {
            "IoError"
        };
        CliError::new(EXIT_PARSE, format!("{name}: {}: {e}", path.display()))
    })?;
    parse_smf(&bytes).map_err(|e| CliError::new(EXIT_PARSE, e.to_string()))
}

fn onset_table_for(path: &Path) -> Result<OnsetTable, CliError> {
    let file = read_midi(path)?;
    let song_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(build_onset_table(&file, &song_id))
}

fn rhythm_vector_for(path: &Path) -> Result<RhythmVector, CliError> {
    let table = onset_table_for(path)?;
    if let MeterClass::Other(n, d) = classify_meter(&table) {
        return Err(CliError::new(
            EXIT_METER,
            format!("NotFourFour: meter is {n}/{d}"),
        ));
    }
    let quantized =
        quantize_onsets(&table, 16).map_err(|e| CliError::new(EXIT_METER, e.to_string()))?;
    rhythm::from_histogram(&onset_histogram(&quantized))
        .map_err(|e| CliError::new(EXIT_METER, e.to_string()))
}

pub fn inspect(path: &Path) -> CliResult {
    let file = read_midi(path)?;
    println!("file: {}", path.display());
    println!("format: {}", file.format);
    println!("ppq: {}", file.ppq);
    println!("tracks: {}", file.tracks.len());
    println!("note_ons: {}", file.note_on_count());
    let signatures = extract_time_signatures(&file);
    if signatures.is_empty() {
        println!("time_signatures: none (4/4 assumed)");
    } else {
        let rendered: Vec<String> = signatures
            .iter()
            .map(|(tick, n, d)| format!("{n}/{d}@{tick}"))
            .collect();
        println!("time_signatures: {}", rendered.join(", "));
    }
    Ok(())
}

pub fn vector(path: &Path, resolution: usize) -> CliResult {
    if resolution == 16 {
        let vector = rhythm_vector_for(path)?;
        println!("{}", vector.to_json());
        return Ok(());
    }
    let table = onset_table_for(path)?;
    if let MeterClass::Other(n, d) = classify_meter(&table) {
        return Err(CliError::new(
            EXIT_METER,
            format!("NotFourFour: meter is {n}/{d}"),
        ));
    }
    let quantized = quantize_onsets(&table, resolution)
        .map_err(|e| CliError::new(EXIT_METER, e.to_string()))?;
    let histogram = onset_histogram(&quantized);
    if histogram.iter().all(|&c| c == 0) {
        return Err(CliError::new(
            EXIT_METER,
            "EmptyRhythm: histogram has no onsets",
        ));
    }
    println!(
        "{}",
        serde_json::to_string(&histogram).expect("histogram serializes")
    );
    Ok(())
}

/// Loads every `.mid`/`.midi` file of a directory (sorted by file name)
/// into labeled rhythm vectors; unusable files are reported and
/// skipped.
fn load_validation_dir(dir: &Path, label: &str) -> Result<Vec<(String, RhythmVector)>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| {
        CliError::new(
            EXIT_INSUFFICIENT,
            format!("cannot read {label} directory {}: {e}", dir.display()),
        )
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map(|ext| ext.eq_ignore_ascii_case("mid") || ext.eq_ignore_ascii_case("midi"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();

    let mut songs = Vec::with_capacity(paths.len());
    for path in paths {
        match rhythm_vector_for(&path) {
            Ok(vector) => {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                songs.push((format!("{label}/{stem}"), vector));
            }
            Err(e) => eprintln!("skipping {}: {}", path.display(), e.message),
        }
    }
    Ok(songs)
}

fn load_validation_set(
    tresillo_dir: &Path,
    non_tresillo_dir: &Path,
) -> Result<ValidationSet, CliError> {
    let tresillo = load_validation_dir(tresillo_dir, "tresillo")?;
    let non_tresillo = load_validation_dir(non_tresillo_dir, "non-tresillo")?;
    if tresillo.len() < 2 || non_tresillo.len() < 2 {
        return Err(CliError::new(
            EXIT_INSUFFICIENT,
            format!(
                "need at least 2 usable 4/4 MIDI files per directory, got {} tresillo and {} non-tresillo",
                tresillo.len(),
                non_tresillo.len()
            ),
        ));
    }
    Ok(ValidationSet::new(tresillo, non_tresillo)?)
}

pub fn fit(
    tresillo_dir: &Path,
    non_tresillo_dir: &Path,
    reference_kind: ReferenceKind,
    out: &Path,
    config: FitConfig,
) -> CliResult {
    let vset = load_validation_set(tresillo_dir, non_tresillo_dir)?;
    let reference = resolve_reference(reference_kind, &vset)?;
    println!(
        "songs: {} tresillo, {} non-tresillo",
        vset.tresillo().len(),
        vset.non_tresillo().len()
    );

    let before = s_star(&ModelSpec::plain(reference_kind), &vset)?;
    let unit_objective = objective(&Theta::ones(), &reference, &vset)?;
    println!(
        "objective(unit theta):   {unit_objective:.6}   S*: {:.6}",
        before.s_star
    );

    let outcome = fit_theta(&reference, &vset, &config)?;
    let after = s_star(&ModelSpec::with_theta(reference_kind, outcome.theta), &vset)?;
    println!(
        "objective(fitted theta): {:.6}   S*: {:.6}",
        outcome.objective, after.s_star
    );
    println!(
        "optimizer: {} iterations logged across {} runs",
        outcome.trace.len(),
        config.restarts + 1
    );

    outcome
        .theta
        .save(out)
        .map_err(|e| CliError::new(EXIT_PARSE, format!("cannot write {}: {e}", out.display())))?;
    println!("wrote {}", out.display());
    Ok(())
}

struct ModelEvaluation {
    name: &'static str,
    report: tresillo_core::model::GoodnessReport,
    ci_tresillo: (f64, f64),
    ci_non_tresillo: (f64, f64),
    loo_interval: (f64, f64),
    loo_values: Vec<f64>,
}

pub fn evaluate(
    tresillo_dir: &Path,
    non_tresillo_dir: &Path,
    theta_path: Option<&Path>,
    theta_reference: Option<ReferenceKind>,
    draws: u32,
    config: FitConfig,
) -> CliResult {
    let vset = load_validation_set(tresillo_dir, non_tresillo_dir)?;
    let pinned_theta = match theta_path {
        Some(path) => {
            Some(Theta::load(path).map_err(|e| CliError::new(EXIT_PARSE, e.to_string()))?)
        }
        None => None,
    };

    let kinds = [
        ModelKind {
            reference: ReferenceKind::Template,
            parameterized: false,
        },
        ModelKind {
            reference: ReferenceKind::Template,
            parameterized: true,
        },
        ModelKind {
            reference: ReferenceKind::Centroid,
            parameterized: false,
        },
        ModelKind {
            reference: ReferenceKind::Centroid,
            parameterized: true,
        },
    ];

    let mut evaluations = Vec::with_capacity(kinds.len());
    for (index, kind) in kinds.iter().enumerate() {
        let model = if kind.parameterized {
            let theta = match (pinned_theta, theta_reference) {
                (Some(theta), Some(reference)) if reference == kind.reference => theta,
                _ => {
                    let reference = resolve_reference(kind.reference, &vset)?;
                    fit_theta(&reference, &vset, &config)?.theta
                }
            };
            ModelSpec::with_theta(kind.reference, theta)
        } else {
            ModelSpec::plain(kind.reference)
        };

        let report = s_star(&model, &vset)?;
        let n_tresillo = vset.tresillo().len();
        let sims_tresillo: Vec<f64> = report.per_song[..n_tresillo]
            .iter()
            .map(|&(_, s)| s)
            .collect();
        let sims_non: Vec<f64> = report.per_song[n_tresillo..]
            .iter()
            .map(|&(_, s)| s)
            .collect();
        let ci = |values: &[f64], stream: u64| -> Result<(f64, f64), CliError> {
            let estimate = bootstrap_mean_ci(
                values,
                &BootstrapConfig {
                    draws,
                    confidence: 0.95,
                    seed: derive_seed(config.seed, stream),
                },
            )
            .map_err(|e| CliError::new(EXIT_INSUFFICIENT, e.to_string()))?;
            Ok((estimate.lower, estimate.upper))
        };
        let ci_tresillo = ci(&sims_tresillo, 2 * index as u64)?;
        let ci_non_tresillo = ci(&sims_non, 2 * index as u64 + 1)?;

        let mut loo_values = leave_one_out_s_star(*kind, &vset, &config)?;
        loo_values.sort_by(f64::total_cmp);
        // 97.5% percentile interval of the fold values
        let loo_interval = (
            quantile_sorted(&loo_values, 0.0125),
            quantile_sorted(&loo_values, 0.9875),
        );

        evaluations.push(ModelEvaluation {
            name: kind.name(),
            report,
            ci_tresillo,
            ci_non_tresillo,
            loo_interval,
            loo_values,
        });
    }

    println!(
        "{:<10} {:>9} {:>8} {:>19} {:>8} {:>19} {:>21}",
        "model",
        "S*",
        "mean(T)",
        "boot 95% CI(T)",
        "mean(N)",
        "boot 95% CI(N)",
        "LOO 97.5% interval"
    );
    for e in &evaluations {
        println!(
            "{:<10} {:>9.4} {:>8.4} [{:>7.4}, {:>7.4}] {:>8.4} [{:>7.4}, {:>7.4}] [{:>8.4}, {:>8.4}]",
            e.name,
            e.report.s_star,
            e.report.mean_sim_tresillo,
            e.ci_tresillo.0,
            e.ci_tresillo.1,
            e.report.mean_sim_non_tresillo,
            e.ci_non_tresillo.0,
            e.ci_non_tresillo.1,
            e.loo_interval.0,
            e.loo_interval.1,
        );
    }

    println!("\npairwise Welch t-tests on the LOO S* distributions:");
    for i in 0..evaluations.len() {
        for j in (i + 1)..evaluations.len() {
            match welch_t_test(&evaluations[i].loo_values, &evaluations[j].loo_values) {
                Ok(result) => println!(
                    "  {:<10} vs {:<10} t = {:>8.4}, p = {:.6}",
                    evaluations[i].name, evaluations[j].name, result.t, result.p_two_sided
                ),
                Err(e) => println!(
                    "  {:<10} vs {:<10} not comparable ({e})",
                    evaluations[i].name, evaluations[j].name
                ),
            }
        }
    }
    Ok(())
}

pub struct TrendArgs {
    pub manifest: PathBuf,
    pub theta: PathBuf,
    pub window: usize,
    pub measure: Measure,
    pub seed: u64,
    pub draws: u32,
    pub out_scores: PathBuf,
    pub out_trend: PathBuf,
    pub out_rolling: Option<PathBuf>,
}

fn exclusion_summary(scores: &[SongScore]) -> String {
    let count =
        |reason: ExclusionReason| scores.iter().filter(|s| s.excluded == Some(reason)).count();
    format!(
        "NotFourFour {}, EmptyRhythm {}, ParseError {}, MissingFile {}",
        count(ExclusionReason::NotFourFour),
        count(ExclusionReason::EmptyRhythm),
        count(ExclusionReason::ParseError),
        count(ExclusionReason::MissingFile)
    )
}

pub fn trend(args: &TrendArgs) -> CliResult {
    let theta = Theta::load(&args.theta).map_err(|e| CliError::new(EXIT_PARSE, e.to_string()))?;
    let entries = load_manifest(&args.manifest)?;
    let reference = rhythm::tresillo_template();

    let scores = score_corpus(&entries, &theta, &reference);
    let scored = scores.iter().filter(|s| s.excluded.is_none()).count();
    println!(
        "entries: {}   scored: {}   excluded: {}",
        scores.len(),
        scored,
        exclusion_summary(&scores)
    );

    let config = BootstrapConfig {
        draws: args.draws,
        confidence: 0.95,
        seed: args.seed,
    };
    let weekly = weekly_trend(&scores, args.measure, &config)?;
    let rolling = rolling_trend(&weekly, args.window)?;

    persist_scores(&scores, &args.out_scores)?;
    pipeline::write_trend_csv(&weekly, &args.out_trend)?;
    let rolling_path = args.out_rolling.clone().unwrap_or_else(|| {
        let mut path = args.out_trend.clone();
        path.set_extension("rolling.csv");
        path
    });
    pipeline::write_rolling_csv(&rolling, &rolling_path)?;

    println!(
        "weeks: {}   wrote {}, {}, {}",
        weekly.len(),
        args.out_scores.display(),
        args.out_trend.display(),
        rolling_path.display()
    );
    Ok(())
}

pub fn plot(trend_path: &Path, out: &Path, spec: &PlotSpec) -> CliResult {
    let points = load_trend_csv(trend_path)?;
    let svg = render_trend_svg(spec, &points).map_err(|e| CliError::new(EXIT_PARSE, e))?;
    fs::write(out, svg)
        .map_err(|e| CliError::new(EXIT_PARSE, format!("cannot write {}: {e}", out.display())))?;
    println!("wrote {}", out.display());
    Ok(())
}
