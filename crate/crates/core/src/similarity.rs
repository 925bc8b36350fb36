//! Plain and parameterized cosine similarity.
//!
//! The parameterized measure scales the i-th component of both vectors
//! by a learned factor theta_i before taking the cosine:
//!
//! ```text
//! cos_theta(a, b) = sum(a_i t_i * b_i t_i)
//!                   / sqrt(sum((a_i t_i)^2)) / sqrt(sum((b_i t_i)^2))
//! ```
//!
//! Each theta_i enters squared, so the measure is invariant to the sign
//! of every component. Learned thetas may still come out negative; they
//! are reported as learned, with the redundancy covered by tests.

use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::rhythm::{RhythmVector, RHYTHM_BINS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimilarityError {
    #[error("ZeroVector: cosine of a zero vector is undefined")]
    ZeroVector,
    #[error("DegenerateTheta: scaling annihilates a vector's support")]
    DegenerateTheta,
    #[error("InvalidTheta: {0}")]
    InvalidTheta(String),
}

/// The 16 learned per-bin scaling factors. Components may be negative
/// or zero, but not all zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Theta([f64; RHYTHM_BINS]);

impl Theta {
    pub fn new(components: [f64; RHYTHM_BINS]) -> Result<Self, SimilarityError> {
        if components.iter().any(|x| !x.is_finite()) {
            return Err(SimilarityError::InvalidTheta(
                "components must be finite".into(),
            ));
        }
        if components.iter().all(|&x| x == 0.0) {
            return Err(SimilarityError::InvalidTheta(
                "at least one component must be nonzero".into(),
            ));
        }
        Ok(Theta(components))
    }

    /// The identity scaling; reduces the parameterized cosine to the
    /// plain one.
    pub fn ones() -> Self {
        Theta([1.0; RHYTHM_BINS])
    }

    pub fn components(&self) -> &[f64; RHYTHM_BINS] {
        &self.0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.0.as_slice()).expect("theta serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SimilarityError> {
        let values: Vec<f64> =
            serde_json::from_str(text).map_err(|e| SimilarityError::InvalidTheta(e.to_string()))?;
        let arr: [f64; RHYTHM_BINS] = values.try_into().map_err(|v: Vec<f64>| {
            SimilarityError::InvalidTheta(format!("expected 16 components, got {}", v.len()))
        })?;
        Theta::new(arr)
    }

    /// Writes the `.theta.json` representation.
    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self, SimilarityError> {
        let text = fs::read_to_string(path)
            .map_err(|e| SimilarityError::InvalidTheta(format!("{}: {e}", path.display())))?;
        Theta::from_json(&text)
    }
}

/// A similarity value; in [0, 1] for non-negative inputs.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub fn value(&self) -> f64 {
        self.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cosine_of_slices(a: &[f64], b: &[f64]) -> Result<f64, SimilarityError> {
    let norm_a = dot(a, a).sqrt();
    let norm_b = dot(b, b).sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    Ok(dot(a, b) / (norm_a * norm_b))
}

/// Plain cosine similarity of two rhythm vectors.
pub fn cosine(a: &RhythmVector, b: &RhythmVector) -> Result<SimilarityScore, SimilarityError> {
    cosine_of_slices(a.components(), b.components()).map(SimilarityScore)
}

/// Component-wise product `v_i * theta_i`; the result is not
/// renormalized.
pub fn scale(v: &RhythmVector, theta: &Theta) -> [f64; RHYTHM_BINS] {
    let mut out = [0.0; RHYTHM_BINS];
    for ((slot, &x), &t) in out.iter_mut().zip(v.components()).zip(theta.components()) {
        *slot = x * t;
    }
    out
}

/// Cosine of the two theta-scaled vectors.
pub fn parameterized_cosine(
    a: &RhythmVector,
    b: &RhythmVector,
    theta: &Theta,
) -> Result<SimilarityScore, SimilarityError> {
    parameterized_cosine_raw(a, b, theta.components()).map(SimilarityScore)
}

/// As [`parameterized_cosine`], but over raw scaling components. Used
/// by the optimizer, whose candidate points are not yet valid thetas.
pub fn parameterized_cosine_raw(
    a: &RhythmVector,
    b: &RhythmVector,
    theta: &[f64; RHYTHM_BINS],
) -> Result<f64, SimilarityError> {
    let mut scaled_a = [0.0; RHYTHM_BINS];
    let mut scaled_b = [0.0; RHYTHM_BINS];
    for i in 0..RHYTHM_BINS {
        scaled_a[i] = a.components()[i] * theta[i];
        scaled_b[i] = b.components()[i] * theta[i];
    }
    cosine_of_slices(&scaled_a, &scaled_b).map_err(|_| SimilarityError::DegenerateTheta)
}
