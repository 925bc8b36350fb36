//! Similarity models, the S* goodness ratio, and theta fitting.
//!
//! Four models are compared: plain cosine against the synthetic
//! tresillo template (C), plain cosine against the centroid of the
//! labeled tresillo songs (Centroid), and their parameterized
//! counterparts C* and Centroid*. Model goodness S* is the ratio of the
//! mean similarity of tresillo-labeled songs to the mean similarity of
//! the rest; fitting minimizes the reciprocal of S* over the 16 scaling
//! factors with restarted Nelder–Mead.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::nelder_mead::{self, Options};
use crate::prng::{derive_seed, Pcg32};
use crate::rhythm::{self, RhythmError, RhythmVector, RHYTHM_BINS};
use crate::similarity::{
    cosine, parameterized_cosine, parameterized_cosine_raw, SimilarityError, SimilarityScore, Theta,
};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("InvalidValidationSet: {0}")]
    InvalidValidationSet(String),
    #[error("ZeroDenominator: mean non-tresillo similarity is zero")]
    ZeroDenominator,
    #[error("FitFailed: every restart produced a degenerate scaling")]
    FitFailed,
    #[error("InsufficientData: {0}")]
    InsufficientData(String),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Rhythm(#[from] RhythmError),
}

/// Labeled validation data: songs known to carry the tresillo and songs
/// known not to. Both lists are non-empty and share no song id.
#[derive(Debug, Clone)]
pub struct ValidationSet {
    tresillo: Vec<(String, RhythmVector)>,
    non_tresillo: Vec<(String, RhythmVector)>,
}

impl ValidationSet {
    pub fn new(
        tresillo: Vec<(String, RhythmVector)>,
        non_tresillo: Vec<(String, RhythmVector)>,
    ) -> Result<Self, ModelError> {
        if tresillo.is_empty() || non_tresillo.is_empty() {
            return Err(ModelError::InvalidValidationSet(
                "both song lists must be non-empty".into(),
            ));
        }
        for (id, _) in &tresillo {
            if non_tresillo.iter().any(|(other, _)| other == id) {
                return Err(ModelError::InvalidValidationSet(format!(
                    "song id {id:?} appears in both lists"
                )));
            }
        }
        Ok(ValidationSet {
            tresillo,
            non_tresillo,
        })
    }

    pub fn tresillo(&self) -> &[(String, RhythmVector)] {
        &self.tresillo
    }

    pub fn non_tresillo(&self) -> &[(String, RhythmVector)] {
        &self.non_tresillo
    }

    pub fn len(&self) -> usize {
        self.tresillo.len() + self.non_tresillo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tresillo.is_empty() && self.non_tresillo.is_empty()
    }

    /// The validation set with one song (by position across the
    /// concatenated tresillo-then-non-tresillo order) removed.
    fn without(&self, index: usize) -> Result<ValidationSet, ModelError> {
        let mut tresillo = self.tresillo.clone();
        let mut non_tresillo = self.non_tresillo.clone();
        if index < tresillo.len() {
            tresillo.remove(index);
        } else {
            non_tresillo.remove(index - tresillo.len());
        }
        ValidationSet::new(tresillo, non_tresillo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    /// Score against the synthetic tresillo template.
    Template,
    /// Score against the centroid of the tresillo-labeled songs.
    Centroid,
}

/// A model family: reference point plus whether the cosine is
/// parameterized. The four combinations are C, C*, Centroid and
/// Centroid*.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelKind {
    pub reference: ReferenceKind,
    pub parameterized: bool,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match (self.reference, self.parameterized) {
            (ReferenceKind::Template, false) => "C",
            (ReferenceKind::Template, true) => "C*",
            (ReferenceKind::Centroid, false) => "Centroid",
            (ReferenceKind::Centroid, true) => "Centroid*",
        }
    }
}

/// A concrete model: a kind plus the learned theta when parameterized.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    kind: ModelKind,
    theta: Option<Theta>,
}

impl ModelSpec {
    pub fn plain(reference: ReferenceKind) -> Self {
        ModelSpec {
            kind: ModelKind {
                reference,
                parameterized: false,
            },
            theta: None,
        }
    }

    pub fn with_theta(reference: ReferenceKind, theta: Theta) -> Self {
        ModelSpec {
            kind: ModelKind {
                reference,
                parameterized: true,
            },
            theta: Some(theta),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn theta(&self) -> Option<&Theta> {
        self.theta.as_ref()
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }
}

/// Everything S* evaluation reports for one model on one validation
/// set.
#[derive(Debug, Clone)]
pub struct GoodnessReport {
    pub s_star: f64,
    pub mean_sim_tresillo: f64,
    pub mean_sim_non_tresillo: f64,
    pub per_song: Vec<(String, f64)>,
}

/// Optimizer configuration, exposed through the CLI fit flags and as a
/// JSON config file (any subset of the fields; the rest keep their
/// defaults).
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 5000,
            tolerance: 1e-8,
            restarts: 5,
            seed: 42,
        }
    }
}

impl FitConfig {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::InvalidConfig(e.to_string()))
    }

    pub fn from_json_file(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::InvalidConfig(format!("{}: {e}", path.display())))?;
        FitConfig::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitTraceEntry {
    pub restart: usize,
    pub iteration: usize,
    pub best_objective: f64,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub theta: Theta,
    pub objective: f64,
    pub trace: Vec<FitTraceEntry>,
}

/// Resolves a model's reference vector on a validation set: the
/// tresillo template, or the centroid of the tresillo-labeled songs.
pub fn resolve_reference(
    kind: ReferenceKind,
    vset: &ValidationSet,
) -> Result<RhythmVector, ModelError> {
    match kind {
        ReferenceKind::Template => Ok(rhythm::tresillo_template()),
        ReferenceKind::Centroid => {
            let vectors: Vec<RhythmVector> = vset.tresillo.iter().map(|&(_, v)| v).collect();
            Ok(rhythm::centroid(&vectors)?)
        }
    }
}

/// Scores one song against a reference under the given model.
pub fn score(
    model: &ModelSpec,
    reference: &RhythmVector,
    song: &RhythmVector,
) -> Result<SimilarityScore, ModelError> {
    match model.theta() {
        None => Ok(cosine(song, reference)?),
        Some(theta) => Ok(parameterized_cosine(song, reference, theta)?),
    }
}

/// Computes S*: the ratio of the mean similarity of tresillo songs to
/// the mean similarity of non-tresillo songs, with per-song scores
/// retained for reporting.
pub fn s_star(model: &ModelSpec, vset: &ValidationSet) -> Result<GoodnessReport, ModelError> {
    let reference = resolve_reference(model.kind().reference, vset)?;
    let mut per_song = Vec::with_capacity(vset.len());
    let mut sum_tresillo = 0.0;
    for (id, v) in &vset.tresillo {
        let s = score(model, &reference, v)?.value();
        sum_tresillo += s;
        per_song.push((id.clone(), s));
    }
    let mut sum_non = 0.0;
    for (id, v) in &vset.non_tresillo {
        let s = score(model, &reference, v)?.value();
        sum_non += s;
        per_song.push((id.clone(), s));
    }
    let mean_sim_tresillo = sum_tresillo / vset.tresillo.len() as f64;
    let mean_sim_non_tresillo = sum_non / vset.non_tresillo.len() as f64;
    if mean_sim_non_tresillo == 0.0 {
        return Err(ModelError::ZeroDenominator);
    }
    Ok(GoodnessReport {
        s_star: mean_sim_tresillo / mean_sim_non_tresillo,
        mean_sim_tresillo,
        mean_sim_non_tresillo,
        per_song,
    })
}

fn objective_raw(
    theta: &[f64; RHYTHM_BINS],
    reference: &RhythmVector,
    vset: &ValidationSet,
) -> Result<f64, SimilarityError> {
    let mut sum_tresillo = 0.0;
    for (_, v) in &vset.tresillo {
        sum_tresillo += parameterized_cosine_raw(v, reference, theta)?;
    }
    let mut sum_non = 0.0;
    for (_, v) in &vset.non_tresillo {
        sum_non += parameterized_cosine_raw(v, reference, theta)?;
    }
    let mean_tresillo = sum_tresillo / vset.tresillo.len() as f64;
    let mean_non = sum_non / vset.non_tresillo.len() as f64;
    Ok(mean_non / mean_tresillo)
}

/// The minimization objective: mean parameterized similarity of the
/// non-tresillo songs over that of the tresillo songs — exactly the
/// reciprocal of S* for the corresponding parameterized model.
pub fn objective(
    theta: &Theta,
    reference: &RhythmVector,
    vset: &ValidationSet,
) -> Result<f64, ModelError> {
    Ok(objective_raw(theta.components(), reference, vset)?)
}

/// Learns theta by restarted Nelder–Mead.
///
/// The base run starts from all-ones; each of the `config.restarts`
/// further runs starts from all-ones plus a coordinate-wise uniform
/// [-0.5, 0.5) perturbation drawn from pcg32 stream `(seed, restart)`.
/// The best point across runs is returned, floored at the unit theta so
/// `objective(result) <= objective(unit)` always holds.
pub fn fit_theta(
    reference: &RhythmVector,
    vset: &ValidationSet,
    config: &FitConfig,
) -> Result<FitOutcome, ModelError> {
    let penalized = |x: &[f64]| -> f64 {
        let theta: &[f64; RHYTHM_BINS] = x.try_into().expect("16-dimensional point");
        match objective_raw(theta, reference, vset) {
            Ok(v) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    };
    let options = Options {
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
        initial_step: 0.25,
    };

    let mut best_point = vec![1.0; RHYTHM_BINS];
    let mut best_value = penalized(&best_point);
    let mut trace = Vec::new();

    for restart in 0..=config.restarts {
        let start: Vec<f64> = if restart == 0 {
            vec![1.0; RHYTHM_BINS]
        } else {
            let mut rng = Pcg32::new(config.seed, restart as u64);
            (0..RHYTHM_BINS)
                .map(|_| 1.0 + (rng.next_f64() - 0.5))
                .collect()
        };
        let result = nelder_mead::minimize(penalized, &start, &options);
        trace.extend(
            result
                .history
                .iter()
                .enumerate()
                .map(|(i, &v)| FitTraceEntry {
                    restart,
                    iteration: i,
                    best_objective: v,
                }),
        );
        if result.value < best_value {
            best_value = result.value;
            best_point = result.point;
        }
    }

    if !best_value.is_finite() {
        return Err(ModelError::FitFailed);
    }
    let theta = Theta::new(best_point.try_into().expect("16 components"))
        .map_err(|_| ModelError::FitFailed)?;
    Ok(FitOutcome {
        theta,
        objective: best_value,
        trace,
    })
}

/// Leave-one-out S* values, one per held-out song (tresillo songs
/// first, then non-tresillo, in list order).
///
/// Each fold removes one song, refits theta on the remainder when the
/// model is parameterized (the centroid is likewise recomputed on the
/// remainder), and evaluates S* on the remainder. Fold `k` uses the
/// seed `derive_seed(config.seed, k)`, so folds may run in any order or
/// concurrently without changing results.
pub fn leave_one_out_s_star(
    kind: ModelKind,
    vset: &ValidationSet,
    config: &FitConfig,
) -> Result<Vec<f64>, ModelError> {
    if vset.tresillo.len() < 2 || vset.non_tresillo.len() < 2 {
        return Err(ModelError::InsufficientData(
            "leave-one-out needs at least two songs per list".into(),
        ));
    }
    let mut values = Vec::with_capacity(vset.len());
    for fold in 0..vset.len() {
        let reduced = vset.without(fold)?;
        let model = if kind.parameterized {
            let reference = resolve_reference(kind.reference, &reduced)?;
            let fold_config = FitConfig {
                seed: derive_seed(config.seed, fold as u64),
                ..*config
            };
            let fit = fit_theta(&reference, &reduced, &fold_config)?;
            ModelSpec::with_theta(kind.reference, fit.theta)
        } else {
            ModelSpec::plain(kind.reference)
        };
        values.push(s_star(&model, &reduced)?.s_star);
    }
    Ok(values)
}
