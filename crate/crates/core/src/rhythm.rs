//! Rhythm vectors and the synthetic rhythm templates.
//!
//! A rhythm vector is a song's 16-bin onset histogram scaled to unit
//! Euclidean norm. Cosine similarity is invariant to the normalization
//! norm, so L2 is used for direct unit-sphere geometry.

use serde::Serialize;
use thiserror::Error;

/// Grid resolution of the similarity analysis.
pub const RHYTHM_BINS: usize = 16;

/// 16th-grid positions of the tresillo pattern: a dotted eighth, a
/// sixteenth and an eighth (after an eighth rest), repeated in both
/// halves of a 4/4 bar.
pub const TRESILLO_BINS: [usize; 6] = [0, 3, 6, 8, 11, 14];

/// Clave: tresillo first half, then an eighth rest, two eighth notes
/// and another eighth rest.
pub const CLAVE_BINS: [usize; 5] = [0, 3, 6, 10, 12];

/// Four-on-the-floor pulse; added to the tresillo it gives reggaeton.
pub const FOUR_ON_FLOOR_BINS: [usize; 4] = [0, 4, 8, 12];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RhythmError {
    #[error("EmptyRhythm: histogram has no onsets")]
    EmptyRhythm,
    #[error("EmptyInput: need at least one rhythm vector")]
    EmptyInput,
    #[error("InvalidVector: {0}")]
    InvalidVector(String),
}

/// A unit-norm, non-negative 16-component rhythm distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RhythmVector([f64; RHYTHM_BINS]);

impl RhythmVector {
    pub fn components(&self) -> &[f64; RHYTHM_BINS] {
        &self.0
    }

    /// Serializes as a JSON array of 16 numbers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.0.as_slice()).expect("vector serializes")
    }

    /// Parses a JSON array of 16 non-negative numbers and normalizes it.
    pub fn from_json(text: &str) -> Result<Self, RhythmError> {
        let values: Vec<f64> =
            serde_json::from_str(text).map_err(|e| RhythmError::InvalidVector(e.to_string()))?;
        let arr: [f64; RHYTHM_BINS] = values.try_into().map_err(|v: Vec<f64>| {
            RhythmError::InvalidVector(format!("expected 16 components, got {}", v.len()))
        })?;
        if arr.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(RhythmError::InvalidVector(
                "components must be finite and non-negative".into(),
            ));
        }
        normalize(&arr)
    }
}

/// Scales a non-negative count vector to unit Euclidean norm.
pub fn normalize(counts: &[f64; RHYTHM_BINS]) -> Result<RhythmVector, RhythmError> {
    debug_assert!(counts.iter().all(|&x| x >= 0.0 && x.is_finite()));
    let norm = counts.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(RhythmError::EmptyRhythm);
    }
    let mut v = [0.0; RHYTHM_BINS];
    for (out, &x) in v.iter_mut().zip(counts) {
        *out = x / norm;
    }
    Ok(RhythmVector(v))
}

/// Normalizes a 16-bin onset histogram.
pub fn from_histogram(counts: &[u64]) -> Result<RhythmVector, RhythmError> {
    assert_eq!(counts.len(), RHYTHM_BINS, "histogram must have 16 bins");
    let mut arr = [0.0; RHYTHM_BINS];
    for (out, &c) in arr.iter_mut().zip(counts) {
        *out = c as f64;
    }
    normalize(&arr)
}

fn indicator(bins: &[usize]) -> [f64; RHYTHM_BINS] {
    let mut counts = [0.0; RHYTHM_BINS];
    for &bin in bins {
        counts[bin] += 1.0;
    }
    counts
}

/// The synthetic tresillo: equal mass at bins {0, 3, 6, 8, 11, 14}.
pub fn tresillo_template() -> RhythmVector {
    normalize(&indicator(&TRESILLO_BINS)).expect("template is nonzero")
}

/// The son clave: equal mass at bins {0, 3, 6, 10, 12}.
pub fn clave_template() -> RhythmVector {
    normalize(&indicator(&CLAVE_BINS)).expect("template is nonzero")
}

/// Reggaeton: tresillo plus a beat on all fours, so bins 0 and 8 carry
/// double mass before normalization.
pub fn reggaeton_template() -> RhythmVector {
    let mut counts = indicator(&TRESILLO_BINS);
    for (slot, add) in counts.iter_mut().zip(indicator(&FOUR_ON_FLOOR_BINS)) {
        *slot += add;
    }
    normalize(&counts).expect("template is nonzero")
}

/// Component-wise mean of the (already normalized) inputs, renormalized
/// to the unit sphere. With normalized inputs, long songs cannot
/// dominate the reference point.
pub fn centroid(vectors: &[RhythmVector]) -> Result<RhythmVector, RhythmError> {
    if vectors.is_empty() {
        return Err(RhythmError::EmptyInput);
    }
    let mut mean = [0.0; RHYTHM_BINS];
    for v in vectors {
        for (slot, &x) in mean.iter_mut().zip(v.components()) {
            *slot += x;
        }
    }
    for slot in &mut mean {
        *slot /= vectors.len() as f64;
    }
    normalize(&mean)
}

/// The corpus's mean rhythm; computed exactly like [`centroid`] but
/// exposed separately for reporting.
pub fn corpus_mean(vectors: &[RhythmVector]) -> Result<RhythmVector, RhythmError> {
    centroid(vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prng::Pcg32;

    const SQRT6_INV: f64 = 0.408_248_290_463_863_1; // 1 / sqrt(6)

    fn unit(index: usize) -> RhythmVector {
        let mut counts = [0.0; RHYTHM_BINS];
        counts[index] = 1.0;
        normalize(&counts).unwrap()
    }

    fn norm(v: &RhythmVector) -> f64 {
        v.components().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn assert_close(a: &RhythmVector, b: &RhythmVector) {
        for (x, y) in a.components().iter().zip(b.components()) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn unit_vector_is_unchanged() {
        let v = unit(0);
        assert_eq!(v.components()[0], 1.0);
        assert!(v.components()[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn three_four_five_norm() {
        let mut counts = [0.0; RHYTHM_BINS];
        counts[0] = 3.0;
        counts[3] = 4.0;
        let v = normalize(&counts).unwrap();
        assert!((v.components()[0] - 0.6).abs() < 1e-15);
        assert!((v.components()[3] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn all_zero_is_empty_rhythm() {
        assert_eq!(
            normalize(&[0.0; RHYTHM_BINS]),
            Err(RhythmError::EmptyRhythm)
        );
        assert_eq!(from_histogram(&[0u64; 16]), Err(RhythmError::EmptyRhythm));
    }

    #[test]
    fn tresillo_support_and_mass() {
        let v = tresillo_template();
        for (i, &x) in v.components().iter().enumerate() {
            if TRESILLO_BINS.contains(&i) {
                assert!((x - SQRT6_INV).abs() < 1e-12, "bin {i}");
            } else {
                assert_eq!(x, 0.0, "bin {i}");
            }
        }
    }

    #[test]
    fn clave_support() {
        let v = clave_template();
        for (i, &x) in v.components().iter().enumerate() {
            assert_eq!(x > 0.0, CLAVE_BINS.contains(&i), "bin {i}");
        }
    }

    #[test]
    fn reggaeton_count_pattern() {
        // counts before normalization: 2 at {0, 8}, 1 at {3, 4, 6, 11, 12, 14}
        let expected = [
            2.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0,
        ];
        let v = reggaeton_template();
        let scale = 14.0f64.sqrt(); // norm of the count pattern
        for (i, (&got, &want)) in v.components().iter().zip(&expected).enumerate() {
            assert!((got - want / scale).abs() < 1e-12, "bin {i}");
        }
    }

    #[test]
    fn templates_are_fixed_points_of_normalize() {
        for template in [tresillo_template(), clave_template(), reggaeton_template()] {
            let again = normalize(template.components()).unwrap();
            assert_close(&template, &again);
        }
    }

    #[test]
    fn normalize_is_scale_invariant_and_idempotent() {
        let mut rng = Pcg32::new(5, 0);
        for _ in 0..200 {
            let mut counts = [0.0; RHYTHM_BINS];
            for slot in &mut counts {
                *slot = f64::from(rng.next_below(20));
            }
            if counts.iter().all(|&x| x == 0.0) {
                continue;
            }
            let v = normalize(&counts).unwrap();
            assert!((norm(&v) - 1.0).abs() < 1e-12);
            assert!(v.components().iter().all(|&x| x >= 0.0));

            let c = 0.1 + rng.next_f64() * 10.0;
            let scaled: [f64; RHYTHM_BINS] = std::array::from_fn(|i| v.components()[i] * c);
            let again = normalize(&scaled).unwrap();
            for (a, b) in v.components().iter().zip(again.components()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn centroid_of_copies_is_the_vector() {
        let v = tresillo_template();
        assert_close(&centroid(&[v, v, v]).unwrap(), &v);
    }

    #[test]
    fn centroid_of_two_units() {
        let c = centroid(&[unit(0), unit(3)]).unwrap();
        let expected = 1.0 / 2.0f64.sqrt();
        assert!((c.components()[0] - expected).abs() < 1e-12);
        assert!((c.components()[3] - expected).abs() < 1e-12);
    }

    #[test]
    fn centroid_of_nothing_is_an_error() {
        assert_eq!(centroid(&[]), Err(RhythmError::EmptyInput));
        assert_eq!(corpus_mean(&[]), Err(RhythmError::EmptyInput));
    }

    #[test]
    fn corpus_mean_single_vector_is_identity() {
        let v = clave_template();
        assert_close(&corpus_mean(&[v]).unwrap(), &v);
    }

    #[test]
    fn corpus_mean_weights_by_count() {
        let m = corpus_mean(&[unit(0), unit(0), unit(4)]).unwrap();
        // mean (2/3, .., 1/3, ..) -> normalized (2, .., 1, ..) / sqrt(5)
        let s = 5.0f64.sqrt();
        assert!((m.components()[0] - 2.0 / s).abs() < 1e-12);
        assert!((m.components()[4] - 1.0 / s).abs() < 1e-12);
    }

    #[test]
    fn json_roundtrip() {
        let v = reggaeton_template();
        let parsed = RhythmVector::from_json(&v.to_json()).unwrap();
        assert_eq!(v, parsed);
    }

    #[test]
    fn json_rejects_wrong_arity_and_negatives() {
        assert!(matches!(
            RhythmVector::from_json("[1.0, 2.0]"),
            Err(RhythmError::InvalidVector(_))
        ));
        let negative = format!("[-1.0{}]", ", 0.0".repeat(15));
        assert!(matches!(
            RhythmVector::from_json(&negative),
            Err(RhythmError::InvalidVector(_))
        ));
    }
}
